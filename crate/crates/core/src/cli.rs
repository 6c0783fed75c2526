//! The `cdec` command line. Every stage reads and writes files, so stages
//! compose freely and can be swapped for external tools.
//!
//! Exit codes: 0 success, 1 usage, 2 validation, 3 I/O, 4 network.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::clustering::{
    connected_components, greedy_agglomeration, AggloConfig, ClusterAssignment, ClusteringError, Linkage,
};
use crate::corpus::{export_corpus, ingest_ecb_xml, read_canonical, Corpus, CorpusError, EcbOptions, Split};
use crate::diversity::{cluster_diversity, DiversityConfig, DiversityError};
use crate::filters::{
    all_pairs, knn_candidates, lh_filter, mine_synonym_pairs, read_pairs, write_pairs, EmbeddingTable,
    FilterError, KnnConfig, LhConfig, Scope,
};
use crate::llm::{HttpBackend, LlmConfig, LlmError, LlmFailure};
use crate::manifest::{ManifestBuilder, RunManifest};
use crate::metamorph::{
    align_records, append_records, read_cases, read_records, sentences_with_mentions, transform_sentences,
    write_cases, MetaVersion, MetamorphConfig, MetamorphError, Mode,
};
use crate::metrics::{evaluate, oracle_recall, MetricsError};
use crate::prompt::{PromptTemplate, TemplateError};
use crate::review::{self, CaseStore, ReviewError};
use crate::scoring::{
    check_scores_against, eq1_scores, ingest_scores, lexical_score, llm_classify_pairs, select_scores,
    write_scores, LogisticHead, PairScore, PairVectorTable, ScoringError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NETWORK: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "cdec", version, about = "Cross-document event coreference toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a corpus into the canonical JSONL format.
    Ingest(IngestArgs),
    /// Rewrite trigger words as metaphors with an LLM.
    Transform(TransformArgs),
    /// Locate original triggers in the rewritten sentences.
    Align(AlignArgs),
    /// Hand-correction store and service.
    #[command(subcommand)]
    Review(ReviewCommand),
    /// Build the transformed corpus from a fully reviewed store.
    Export(ExportArgs),
    /// Candidate pair generation.
    #[command(subcommand)]
    Filter(FilterCommand),
    /// Pairwise coreference scores.
    #[command(subcommand)]
    Score(ScoreCommand),
    /// Turn pair scores into clusters.
    #[command(subcommand)]
    Cluster(ClusterCommand),
    /// MUC, B³, CEAF-e and CoNLL F1 of a predicted assignment.
    Evaluate(EvaluateArgs),
    /// B³ recall of a perfect classifier on retained pairs.
    OracleRecall(OracleArgs),
    /// MTLD of gold clusters' triggers.
    Diversity(DiversityArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatArg {
    EcbXml,
    Canonical,
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    #[arg(long, value_enum)]
    pub format: FormatArg,
    /// Canonical file, or an ECB+ directory / XML file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Corpus name (ECB+ input only).
    #[arg(long)]
    pub name: Option<String>,
    /// Documents making up dev_small, one id per line (ECB+ input only).
    #[arg(long)]
    pub dev_small_docs: Option<PathBuf>,
    /// CSV of validated `doc,sentence` rows to keep (ECB+ input only).
    #[arg(long)]
    pub sentence_filter: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TransformArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Mode,
    #[arg(long)]
    pub split: Split,
    #[arg(long)]
    pub llm_config: PathBuf,
    /// Records are appended to this JSONL file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub candidates: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct AlignArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum ReviewCommand {
    /// Create a store from a corpus, records and alignment cases.
    Init(ReviewInitArgs),
    /// Serve the review API (and optionally the UI bundle).
    Serve(ReviewServeArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ReviewInitArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long)]
    pub cases: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReviewServeArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Directory with the built review UI.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExportArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long, value_parser = parse_version)]
    pub version: MetaVersion,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum FilterCommand {
    /// Lemma heuristic over all in-scope pairs.
    Lh(LhArgs),
    /// k nearest neighbours by cosine similarity.
    Knn(KnnArgs),
    /// Every in-scope pair, unfiltered.
    All(AllArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SplitArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub split: Split,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct LhArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub io: SplitArgs,
    #[arg(long, default_value_t = 0.005)]
    pub threshold: f64,
    /// Split the synonym pairs are mined from.
    #[arg(long, default_value = "train")]
    pub synonym_split: Split,
    #[arg(long, default_value = "intra-topic")]
    pub scope: Scope,
    /// Keep stopword lemmas in the sentence-overlap ratio.
    #[arg(long)]
    pub use_stopwords: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct KnnArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub io: SplitArgs,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value = "intra-topic")]
    pub scope: Scope,
}

#[derive(Debug, Args, Serialize)]
pub struct AllArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub io: SplitArgs,
    #[arg(long, default_value = "intra-topic")]
    pub scope: Scope,
}

#[derive(Debug, Subcommand)]
pub enum ScoreCommand {
    /// Score 1 for every filtered pair.
    Lexical(LexicalArgs),
    /// Logistic head over [v_a, v_b, v_a ⊙ v_b] pair vectors.
    Eq1(Eq1Args),
    /// Scores computed elsewhere (`a b score` lines).
    External(ExternalArgs),
    /// Yes/No LLM classifier.
    Llm(LlmScoreArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct LexicalArgs {
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct Eq1Args {
    #[arg(long)]
    pub pair_vectors: PathBuf,
    /// JSON `{ "weights": [...], "bias": b }`.
    #[arg(long)]
    pub head: PathBuf,
    /// Only score these pairs.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ExternalArgs {
    #[arg(long)]
    pub scores: PathBuf,
    /// Only keep these pairs (all must be scored).
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Check every endpoint exists in this corpus.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct LlmScoreArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub llm_config: PathBuf,
    /// Prompt template with {{sentence_a}} and {{sentence_b}}.
    #[arg(long)]
    pub template: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum ClusterCommand {
    /// Connected components over links scoring at least the threshold.
    Cc(CcArgs),
    /// Greedy average/max-linkage agglomeration.
    Agglo(AggloArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ClusterIo {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub split: Split,
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CcArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub io: ClusterIo,
    #[arg(long, default_value_t = 0.5)]
    pub link_threshold: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct AggloArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub io: ClusterIo,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[arg(long, default_value = "average")]
    pub linkage: Linkage,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Corpus supplying the gold partition.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// Restrict gold to one split (default: every mention).
    #[arg(long)]
    pub split: Option<Split>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct OracleArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub retained: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: Split,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct DiversityArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: Split,
    #[arg(long, default_value_t = crate::diversity::DEFAULT_TTR_THRESHOLD)]
    pub ttr_threshold: f64,
    /// Keep punctuation attached to trigger tokens.
    #[arg(long)]
    pub keep_punctuation: bool,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

fn parse_version(s: &str) -> Result<MetaVersion, String> {
    s.parse()
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn validation(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: impl fmt::Display) -> Self {
        CliError {
            code: EXIT_IO,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn coded(code: i32, e: impl fmt::Display) -> CliError {
    CliError {
        code,
        message: e.to_string(),
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        let code = match e {
            CorpusError::Io { .. } => EXIT_IO,
            _ => EXIT_VALIDATION,
        };
        coded(code, e)
    }
}

impl From<FilterError> for CliError {
    fn from(e: FilterError) -> Self {
        match e {
            FilterError::Corpus(c) => c.into(),
            FilterError::Io { .. } => coded(EXIT_IO, e),
            _ => coded(EXIT_VALIDATION, e),
        }
    }
}

fn llm_code(e: &LlmError) -> i32 {
    match e {
        LlmError::Config(_) => EXIT_VALIDATION,
        _ => EXIT_NETWORK,
    }
}

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        coded(llm_code(&e), e)
    }
}

impl From<TemplateError> for CliError {
    fn from(e: TemplateError) -> Self {
        let code = match e {
            TemplateError::Io { .. } => EXIT_IO,
            _ => EXIT_VALIDATION,
        };
        coded(code, e)
    }
}

impl From<ScoringError> for CliError {
    fn from(e: ScoringError) -> Self {
        match e {
            ScoringError::Corpus(c) => c.into(),
            ScoringError::Template(t) => t.into(),
            ScoringError::Io { .. } => coded(EXIT_IO, e),
            ScoringError::Unresolved {
                failure: LlmFailure::Transport { ref error, .. },
                ..
            } => coded(llm_code(error), e),
            _ => coded(EXIT_VALIDATION, e),
        }
    }
}

impl From<ClusteringError> for CliError {
    fn from(e: ClusteringError) -> Self {
        let code = match e {
            ClusteringError::Io { .. } => EXIT_IO,
            _ => EXIT_VALIDATION,
        };
        coded(code, e)
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Clustering(c) => c.into(),
            _ => coded(EXIT_VALIDATION, e),
        }
    }
}

impl From<DiversityError> for CliError {
    fn from(e: DiversityError) -> Self {
        match e {
            DiversityError::Corpus(c) => c.into(),
            _ => coded(EXIT_VALIDATION, e),
        }
    }
}

impl From<MetamorphError> for CliError {
    fn from(e: MetamorphError) -> Self {
        match e {
            MetamorphError::Corpus(c) => c.into(),
            MetamorphError::Template(t) => t.into(),
            MetamorphError::Llm {
                failure: LlmFailure::Transport { ref error, .. },
                ..
            } => coded(llm_code(error), e),
            _ => coded(EXIT_VALIDATION, e),
        }
    }
}

impl From<ReviewError> for CliError {
    fn from(e: ReviewError) -> Self {
        let code = match e {
            ReviewError::Store(_) => EXIT_IO,
            _ => EXIT_VALIDATION,
        };
        coded(code, e)
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command, &args) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

fn config_of(args: &impl Serialize) -> serde_json::Value {
    serde_json::to_value(args).expect("arguments serialize")
}

fn finish(m: &ManifestBuilder, primary: &Path, outputs: &[&Path]) -> Result<(), CliError> {
    m.finish(primary, outputs)
        .map(|_| ())
        .map_err(|e| CliError::io(primary, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn split_mentions(corpus: &Corpus, split: Split) -> Result<BTreeSet<String>, CliError> {
    let ids: BTreeSet<String> = corpus.mentions_in_split(split).map(|m| m.mention_id.clone()).collect();
    if ids.is_empty() {
        return Err(CliError::validation(format!("split `{split}` has no mentions")));
    }
    Ok(ids)
}

fn load_scores_for(corpus: &Corpus, path: &Path, mentions: &BTreeSet<String>) -> Result<Vec<PairScore>, CliError> {
    let scores = ingest_scores(path)?;
    check_scores_against(corpus, &scores)?;
    Ok(scores
        .into_iter()
        .filter(|s| mentions.contains(&s.pair.a) && mentions.contains(&s.pair.b))
        .collect())
}

fn execute(command: Command, argv: &[OsString]) -> Result<(), CliError> {
    match command {
        Command::Ingest(a) => {
            let mut m = RunManifest::begin(argv, config_of(&a));
            let corpus = match a.format {
                FormatArg::Canonical => read_canonical(&a.input)?,
                FormatArg::EcbXml => {
                    let mut opts = EcbOptions::default();
                    if let Some(name) = &a.name {
                        opts.name = name.clone();
                    }
                    if let Some(p) = &a.dev_small_docs {
                        opts.load_dev_small_docs(p)?;
                        m.input(p);
                    }
                    if let Some(p) = &a.sentence_filter {
                        opts.load_sentence_filter(p)?;
                        m.input(p);
                    }
                    ingest_ecb_xml(&a.input, &opts)?
                }
            };
            if a.input.is_file() {
                m.input(&a.input);
            }
            export_corpus(&corpus, &a.out)?;
            for (split, s) in corpus.stats() {
                eprintln!("{split}: {} topics, {} documents, {} mentions", s.topics, s.documents, s.mentions);
            }
            finish(&m, &a.out, &[&a.out])
        }
        Command::Transform(a) => {
            let mut m = RunManifest::begin(argv, config_of(&a));
            m.input(&a.corpus).input(&a.llm_config);
            let corpus = read_canonical(&a.corpus)?;
            let llm = LlmConfig::from_file(&a.llm_config)?;
            let mut config = MetamorphConfig::new(a.mode, llm.clone());
            config.candidates_per_trigger = a.candidates;
            let backend = HttpBackend::new(llm)?;
            let sentences = sentences_with_mentions(&corpus, a.split);
            if sentences.is_empty() {
                return Err(CliError::validation(format!("split `{}` has no mentions", a.split)));
            }
            let results = transform_sentences(&corpus, &sentences, &backend, &config);
            let mut records = Vec::new();
            let mut first_err = None;
            for r in results {
                match r {
                    Ok(rec) => records.push(rec),
                    Err(e) => {
                        eprintln!("error: {e}");
                        first_err.get_or_insert(e);
                    }
                }
            }
            // Keep whatever succeeded: responses are not reproducible.
            append_records(&a.out, &records)?;
            let failed = records.iter().filter(|r| r.is_failed()).count();
            eprintln!("{} records written, {failed} failed and kept literal", records.len());
            finish(&m, &a.out, &[&a.out])?;
            match first_err {
                Some(e) => Err(e.into()),
                None => Ok(()),
            }
        }
        Command::Align(a) => {
            let mut m = RunManifest::begin(argv, config_of(&a));
            m.input(&a.corpus).input(&a.records);
            let corpus = read_canonical(&a.corpus)?;
            let records = read_records(&a.records)?;
            let cases = align_records(&corpus, &records)?;
            write_cases(&a.out, &cases)?;
            let review = cases.iter().filter(|c| c.needs_review()).count();
            eprintln!("{} cases, {review} need review", cases.len());
            finish(&m, &a.out, &[&a.out])
        }
        Command::Review(ReviewCommand::Init(a)) => {
            let mut m = RunManifest::begin(argv, config_of(&a));
            m.input(&a.corpus).input(&a.records).input(&a.cases);
            let corpus = read_canonical(&a.corpus)?;
            let records = read_records(&a.records)?;
            let cases = read_cases(&a.cases)?;
            let store = CaseStore::init(&a.store, &corpus, &records, &cases)?;
            let events = a.store.join("events.jsonl");
            finish(&m, &a.store.join("store"), &[&events])?;
            eprintln!("store ready with {} cases, digest {}", store.cases().len(), store.digest());
            Ok(())
        }
        Command::Review(ReviewCommand::Serve(a)) => {
            let store = Arc::new(CaseStore::open(&a.store)?);
            let addr: SocketAddr = format!("{}:{}", a.host, a.port)
                .parse()
                .map_err(|e| CliError::validation(format!("bad address: {e}")))?;
            let token = std::env::var(review::TOKEN_ENV).ok();
            if token.is_none() {
                eprintln!("warning: {} not set, API is unauthenticated", review::TOKEN_ENV);
            }
            let app = review::router(store, token, a.static_dir.as_deref());
            let rt = tokio::runtime::Runtime::new().map_err(|e| coded(EXIT_IO, e))?;
            eprintln!("serving on http://{addr}");
            rt.block_on(review::serve(addr, app)).map_err(|e| coded(EXIT_IO, e))
        }
        Command::Export(a) => {
            let mut m = RunManifest::begin(argv, config_of(&a));
            for f in ["corpus.jsonl", "records.jsonl", "events.jsonl"] {
                m.input(&a.store.join(f));
            }
            let store = CaseStore::open(&a.store)?;
            let corpus = store.export_to(a.version, &a.out)?;
            eprintln!("{}: {} mentions", corpus.name(), corpus.mention_count());
            finish(&m, &a.out, &[&a.out])
        }
        Command::Filter(FilterCommand::Lh(a)) => {
            let mut m = RunManifest::begin(argv, config_of(&a));
            m.input(&a.io.corpus);
            let corpus = read_canonical(&a.io.corpus)?;
            let syn = mine_synonym_pairs(&corpus, a.synonym_split)?;
            let config = LhConfig {
                overlap_threshold: a.threshold,
                use_stopwords: a.use_stopwords,
            };
            let candidates = all_pairs(&corpus, a.io.split, a.scope);
            let kept = lh_filter(&corpus, &candidates, &syn, &config)?;
            write_pairs(&a.io.out, &kept)?;
            eprintln!("kept {} of {} pairs", kept.len(), candidates.len());
            finish(&m, &a.io.out, &[&a.io.out])
        }
        Command::Filter(FilterCommand::Knn(a)) => {
            let mut m = RunManifest::begin(argv, config_of(&a));
            m.input(&a.io.corpus).input(&a.embeddings);
            let corpus = read_canonical(&a.io.corpus)?;
            let table = EmbeddingTable::read_file(&a.embeddings)?;
            let config = KnnConfig {
                k: a.k,
                scope: a.scope,
            };
            let kept = knn_candidates(&table, &corpus, a.io.split, &config)?;
            write_pairs(&a.io.out, &kept)?;
            finish(&m, &a.io.out, &[&a.io.out])
        }
        Command::Filter(FilterCommand::All(a)) => {
            let mut m = RunManifest::begin(argv, config_of(&a));
            m.input(&a.io.corpus);
            let corpus = read_canonical(&a.io.corpus)?;
            if !corpus.has_split(a.io.split) {
                return Err(CliError::validation(format!("split `{}` has no mentions", a.io.split)));
            }
            write_pairs(&a.io.out, &all_pairs(&corpus, a.io.split, a.scope))?;
            finish(&m, &a.io.out, &[&a.io.out])
        }
        Command::Score(ScoreCommand::Lexical(a)) => {
            let mut m = RunManifest::begin(argv, config_of(&a));
            m.input(&a.pairs);
            let scores = lexical_score(&read_pairs(&a.pairs)?)?;
            write_scores(&a.out, &scores)?;
            finish(&m, &a.out, &[&a.out])
        }
        Command::Score(ScoreCommand::Eq1(a)) => {
            let mut m = RunManifest::begin(argv, config_of(&a));
            m.input(&a.pair_vectors).input(&a.head);
            let table = PairVectorTable::read_file(&a.pair_vectors)?;
            let head = LogisticHead::from_file(&a.head)?;
            let pairs = match &a.pairs {
                Some(p) => {
                    m.input(p);
                    Some(read_pairs(p)?)
                }
                None => None,
            };
            let scores = eq1_scores(&table, &head, pairs.as_deref())?;
            write_scores(&a.out, &scores)?;
            finish(&m, &a.out, &[&a.out])
        }
        Command::Score(ScoreCommand::External(a)) => {
            let mut m = RunManifest::begin(argv, config_of(&a));
            m.input(&a.scores);
            let mut scores = ingest_scores(&a.scores)?;
            if let Some(c) = &a.corpus {
                m.input(c);
                check_scores_against(&read_canonical(c)?, &scores)?;
            }
            if let Some(p) = &a.pairs {
                m.input(p);
                scores = select_scores(&scores, &read_pairs(p)?)?;
            }
            write_scores(&a.out, &scores)?;
            finish(&m, &a.out, &[&a.out])
        }
        Command::Score(ScoreCommand::Llm(a)) => {
            let mut m = RunManifest::begin(argv, config_of(&a));
            m.input(&a.corpus).input(&a.pairs).input(&a.llm_config);
            let corpus = read_canonical(&a.corpus)?;
            let pairs = read_pairs(&a.pairs)?;
            let llm = LlmConfig::from_file(&a.llm_config)?;
            let template = match &a.template {
                Some(p) => {
                    m.input(p);
                    PromptTemplate::from_file(p)?
                }
                None => PromptTemplate::coref_pair(),
            };
            let backend = HttpBackend::new(llm.clone())?;
            let scores = llm_classify_pairs(&corpus, &pairs, &backend, &llm, &template)
                .into_iter()
                .collect::<Result<Vec<_>, _>>()?;
            write_scores(&a.out, &scores)?;
            finish(&m, &a.out, &[&a.out])
        }
        Command::Cluster(ClusterCommand::Cc(a)) => {
            let mut m = RunManifest::begin(argv, config_of(&a));
            m.input(&a.io.corpus).input(&a.io.scores);
            let corpus = read_canonical(&a.io.corpus)?;
            let mentions = split_mentions(&corpus, a.io.split)?;
            let scores = load_scores_for(&corpus, &a.io.scores, &mentions)?;
            let assignment = connected_components(&mentions, &scores, a.link_threshold)?;
            assignment.write_file(&a.io.out)?;
            finish(&m, &a.io.out, &[&a.io.out])
        }
        Command::Cluster(ClusterCommand::Agglo(a)) => {
            let mut m = RunManifest::begin(argv, config_of(&a));
            m.input(&a.io.corpus).input(&a.io.scores);
            let corpus = read_canonical(&a.io.corpus)?;
            let mentions = split_mentions(&corpus, a.io.split)?;
            let scores = load_scores_for(&corpus, &a.io.scores, &mentions)?;
            let config = AggloConfig {
                linkage: a.linkage,
                stop_threshold: a.tau,
            };
            greedy_agglomeration(&mentions, &scores, &config).write_file(&a.io.out)?;
            finish(&m, &a.io.out, &[&a.io.out])
        }
        Command::Evaluate(a) => {
            let mut m = RunManifest::begin(argv, config_of(&a));
            m.input(&a.gold).input(&a.pred);
            let corpus = read_canonical(&a.gold)?;
            let pred = ClusterAssignment::read_file(&a.pred)?;
            let report = evaluate(&corpus.gold_assignment(a.split), &pred)?;
            let text = report.to_text();
            write_text(&a.out, &text)?;
            print!("{text}");
            finish(&m, &a.out, &[&a.out])
        }
        Command::OracleRecall(a) => {
            let mut m = RunManifest::begin(argv, config_of(&a));
            m.input(&a.corpus).input(&a.retained);
            let corpus = read_canonical(&a.corpus)?;
            let retained = read_pairs(&a.retained)?;
            let recall = oracle_recall(&corpus, &retained, a.split)?;
            let text = format!("oracle_b3_recall\t{recall:.6}\nretained_pairs\t{}\n", retained.len());
            write_text(&a.out, &text)?;
            print!("{text}");
            finish(&m, &a.out, &[&a.out])
        }
        Command::Diversity(a) => {
            let mut m = RunManifest::begin(argv, config_of(&a));
            m.input(&a.corpus);
            let corpus = read_canonical(&a.corpus)?;
            let config = DiversityConfig {
                ttr_threshold: a.ttr_threshold,
                strip_punctuation: !a.keep_punctuation,
            };
            let report = cluster_diversity(&corpus, a.split, &config)?;
            if report.no_clusters {
                eprintln!("warning: split `{}` has only singleton clusters", a.split);
            }
            report.write_file(&a.out)?;
            println!("WEIGHTED\t{:.6}", report.corpus_weighted_mtld);
            finish(&m, &a.out, &[&a.out])
        }
    }
}
