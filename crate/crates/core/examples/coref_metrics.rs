//! MUC, B3, CEAF-e and CoNLL F1 on a small hand-checkable example.

use std::error::Error;

use cdec::clustering::ClusterAssignment;
use cdec::metrics::{evaluate, max_weight_assignment};

fn main() -> Result<(), Box<dyn Error>> {
    let gold = ClusterAssignment::from_groups([vec!["a", "b", "c"], vec!["d"]]);
    let pred = ClusterAssignment::from_groups([vec!["a", "b"], vec!["c", "d"]]);

    let report = evaluate(&gold, &pred)?;
    print!("{}", report.to_text());
    // B3 F1 = 12/17, CEAF-e = 11/15, MUC = 1/2.
    println!("exact CoNLL: {:.10}", (0.5 + 12.0 / 17.0 + 11.0 / 15.0) / 3.0);

    // CEAF-e aligns clusters one-to-one; the solver is usable on its own.
    let sim = vec![vec![0.8, 0.4], vec![0.0, 2.0 / 3.0]];
    let (matching, total) = max_weight_assignment(&sim);
    println!("\nbest matching {matching:?}, total similarity {total:.4}");
    Ok(())
}
