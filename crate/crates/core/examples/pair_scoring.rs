//! Pair scores from three sources: the logistic head over
//! `[v_a, v_b, v_a * v_b]`, an external score file, and the constant
//! lexical score.

use std::error::Error;

use cdec::filters::MentionPair;
use cdec::scoring::{
    eq1_scores, ingest_scores, joint_pair_representation, lexical_score, select_scores, LogisticHead,
    PairVectorTable,
};

fn main() -> Result<(), Box<dyn Error>> {
    let rep = joint_pair_representation(&[1.0, 2.0], &[3.0, 4.0])?;
    println!("joint: {:?}", rep.joint);

    // Vectors from an external pair encoder, one entry per pair.
    let mut vectors = PairVectorTable::new(2);
    vectors.insert("m1", "m2", vec![1.0, 2.0], vec![3.0, 4.0])?;
    vectors.insert("m1", "m3", vec![0.5, -1.0], vec![-0.2, 0.9])?;
    let head = LogisticHead {
        weights: vec![0.1, 0.0, 0.0, 0.0, 0.0, 0.1],
        bias: -0.9,
    };
    let pairs = vec![MentionPair::new("m1", "m2")?, MentionPair::new("m1", "m3")?];
    for s in eq1_scores(&vectors, &head, Some(&pairs))? {
        println!("eq1       {} {:.4}", s.pair, s.score);
    }

    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/fixture_scores.tsv");
    let external = ingest_scores(path.as_ref())?;
    let wanted = [MentionPair::new("t4_d1_m1", "t4_d3_m1")?];
    for s in select_scores(&external, &wanted)? {
        println!("external  {} {:.2}", s.pair, s.score);
    }

    for s in lexical_score(&pairs)? {
        println!("lexical   {} {:.1}", s.pair, s.score);
    }
    Ok(())
}
