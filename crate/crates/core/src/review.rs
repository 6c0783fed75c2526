//! Review store and HTTP service for alignment cases that need a human.
//!
//! A store is a directory holding the source corpus, the paraphrase records
//! and an append-only event log. State is rebuilt by replaying the log.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path as UrlPath, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tower_http::services::ServeDir;

use crate::corpus::{read_canonical, write_canonical, Corpus, CorpusError, Split};
use crate::metamorph::{
    build_meta_corpus, mention_char_span, occurrences, read_jsonl, round_to_tokens, write_jsonl,
    AlignmentCase, CaseStatus, CharSpan, MetaVersion, MetamorphError, ParaphraseRecord,
};

pub const TOKEN_ENV: &str = "COREF_REVIEW_TOKEN";
pub const TOKEN_HEADER: &str = "x-review-token";
pub const MAX_PAGE: usize = 1000;

const CORPUS_FILE: &str = "corpus.jsonl";
const RECORDS_FILE: &str = "records.jsonl";
const EVENTS_FILE: &str = "events.jsonl";

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error("no case `{0}`")]
    NotFound(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Conflict(String),
    #[error("export blocked by unresolved cases: {}", .0.join(", "))]
    Blocked(Vec<String>),
    #[error("store error: {0}")]
    Store(String),
}

impl From<CorpusError> for ReviewError {
    fn from(e: CorpusError) -> Self {
        ReviewError::Store(e.to_string())
    }
}

impl From<MetamorphError> for ReviewError {
    fn from(e: MetamorphError) -> Self {
        match e {
            MetamorphError::Unresolved(ids) => ReviewError::Blocked(ids),
            other => ReviewError::Store(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum Event {
    Created {
        case: AlignmentCase,
    },
    Corrected {
        mention_id: String,
        span: CharSpan,
        reviewer: String,
        timestamp: String,
        overwrite: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSummary {
    pub mention_id: String,
    pub doc_id: String,
    pub sentence_index: usize,
    pub status: CaseStatus,
    pub phrase: String,
    pub snippet: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CasePage {
    pub total: usize,
    pub offset: usize,
    pub cases: Vec<CaseSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseDetail {
    pub case: AlignmentCase,
    pub original_sentence: String,
    pub original_span: CharSpan,
    pub original_trigger: String,
    pub metaphoric_sentence: String,
    /// Every occurrence of the case's phrase, so a reviewer can pick one.
    pub occurrences: Vec<CharSpan>,
}

#[derive(Debug, Default)]
struct StoreState {
    cases: BTreeMap<String, AlignmentCase>,
}

impl StoreState {
    fn apply(&mut self, event: Event) -> Result<(), ReviewError> {
        match event {
            Event::Created { case } => {
                self.cases.insert(case.mention_id.clone(), case);
            }
            Event::Corrected {
                mention_id,
                span,
                reviewer,
                timestamp,
                ..
            } => {
                let case = self
                    .cases
                    .get_mut(&mention_id)
                    .ok_or_else(|| ReviewError::Store(format!("log corrects unknown case `{mention_id}`")))?;
                case.status = CaseStatus::Corrected;
                case.correction = Some(span);
                case.reviewer = Some(reviewer);
                case.timestamp = Some(timestamp);
            }
        }
        Ok(())
    }
}

pub struct CaseStore {
    dir: PathBuf,
    corpus: Corpus,
    records: BTreeMap<(String, usize), ParaphraseRecord>,
    /// Queue order: (doc id, sentence index, mention id).
    order: Vec<String>,
    state: RwLock<StoreState>,
    log: Mutex<File>,
}

fn store_io(path: &Path, e: std::io::Error) -> ReviewError {
    ReviewError::Store(format!("{}: {e}", path.display()))
}

impl CaseStore {
    /// Creates a new store in `dir` (which must not already hold one).
    pub fn init(
        dir: &Path,
        corpus: &Corpus,
        records: &[ParaphraseRecord],
        cases: &[AlignmentCase],
    ) -> Result<CaseStore, ReviewError> {
        let events = dir.join(EVENTS_FILE);
        if events.exists() {
            return Err(ReviewError::Conflict(format!("{} already holds a store", dir.display())));
        }
        let keys: BTreeSet<(&str, usize)> = records
            .iter()
            .map(|r| (r.doc_id.as_str(), r.sentence_index))
            .collect();
        let mut seen = BTreeSet::new();
        for c in cases {
            let m = corpus
                .mention(&c.mention_id)
                .map_err(|_| ReviewError::Validation(format!("case `{}` names no corpus mention", c.mention_id)))?;
            if (m.doc_id.as_str(), m.sentence_index) != (c.doc_id.as_str(), c.sentence_index)
                || !keys.contains(&(c.doc_id.as_str(), c.sentence_index))
            {
                return Err(ReviewError::Validation(format!(
                    "case `{}` has no matching paraphrase record",
                    c.mention_id
                )));
            }
            if !seen.insert(c.mention_id.as_str()) {
                return Err(ReviewError::Validation(format!("duplicate case `{}`", c.mention_id)));
            }
        }
        fs::create_dir_all(dir).map_err(|e| store_io(dir, e))?;
        let corpus_path = dir.join(CORPUS_FILE);
        let f = File::create(&corpus_path).map_err(|e| store_io(&corpus_path, e))?;
        write_canonical(corpus, f).map_err(|e| store_io(&corpus_path, e))?;
        write_jsonl(&dir.join(RECORDS_FILE), records, false)?;
        let created: Vec<Event> = cases.iter().map(|c| Event::Created { case: c.clone() }).collect();
        write_jsonl(&events, &created, false)?;
        File::open(&events)
            .and_then(|f| f.sync_all())
            .map_err(|e| store_io(&events, e))?;
        CaseStore::open(dir)
    }

    /// Opens an existing store by replaying its event log.
    pub fn open(dir: &Path) -> Result<CaseStore, ReviewError> {
        let corpus = read_canonical(&dir.join(CORPUS_FILE))?;
        let records: BTreeMap<(String, usize), ParaphraseRecord> =
            read_jsonl::<ParaphraseRecord>(&dir.join(RECORDS_FILE))?
                .into_iter()
                .map(|r| ((r.doc_id.clone(), r.sentence_index), r))
                .collect();
        let events_path = dir.join(EVENTS_FILE);
        let mut state = StoreState::default();
        for e in read_jsonl::<Event>(&events_path)? {
            state.apply(e)?;
        }
        let mut order: Vec<&AlignmentCase> = state.cases.values().collect();
        order.sort_by(|a, b| {
            (&a.doc_id, a.sentence_index, &a.mention_id).cmp(&(&b.doc_id, b.sentence_index, &b.mention_id))
        });
        let order = order.into_iter().map(|c| c.mention_id.clone()).collect();
        let log = OpenOptions::new()
            .append(true)
            .open(&events_path)
            .map_err(|e| store_io(&events_path, e))?;
        Ok(CaseStore {
            dir: dir.to_path_buf(),
            corpus,
            records,
            order,
            state: RwLock::new(state),
            log: Mutex::new(log),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn cases(&self) -> Vec<AlignmentCase> {
        let state = self.state.read().unwrap();
        self.order.iter().map(|id| state.cases[id].clone()).collect()
    }

    fn record(&self, case: &AlignmentCase) -> &ParaphraseRecord {
        &self.records[&(case.doc_id.clone(), case.sentence_index)]
    }

    /// A page of cases whose status is in `statuses` (the review queue —
    /// ambiguous and missing — when empty).
    pub fn list_cases(&self, statuses: &[CaseStatus], offset: usize, limit: usize) -> Result<CasePage, ReviewError> {
        if limit == 0 || limit > MAX_PAGE {
            return Err(ReviewError::Validation(format!("limit must be in 1..={MAX_PAGE}")));
        }
        let wanted: &[CaseStatus] = if statuses.is_empty() {
            &[CaseStatus::Ambiguous, CaseStatus::Missing]
        } else {
            statuses
        };
        let state = self.state.read().unwrap();
        let matching: Vec<&AlignmentCase> = self
            .order
            .iter()
            .map(|id| &state.cases[id])
            .filter(|c| wanted.contains(&c.status))
            .collect();
        let cases = matching
            .iter()
            .skip(offset)
            .take(limit)
            .map(|c| CaseSummary {
                mention_id: c.mention_id.clone(),
                doc_id: c.doc_id.clone(),
                sentence_index: c.sentence_index,
                status: c.status,
                phrase: c.phrase.clone(),
                snippet: snippet(&self.record(c).metaphoric_sentence),
            })
            .collect();
        Ok(CasePage {
            total: matching.len(),
            offset,
            cases,
        })
    }

    pub fn get_case(&self, id: &str) -> Result<CaseDetail, ReviewError> {
        let case = self
            .state
            .read()
            .unwrap()
            .cases
            .get(id)
            .cloned()
            .ok_or_else(|| ReviewError::NotFound(id.to_string()))?;
        let record = self.record(&case);
        let mention = self.corpus.mention(id)?;
        let sentence = self.corpus.sentence_of(id)?;
        Ok(CaseDetail {
            original_sentence: sentence.text(),
            original_span: mention_char_span(sentence, mention),
            original_trigger: mention.trigger_text.clone(),
            metaphoric_sentence: record.metaphoric_sentence.clone(),
            occurrences: occurrences(&record.metaphoric_sentence, &case.phrase),
            case,
        })
    }

    /// Records a reviewer's span for a case. The span is widened to whole
    /// tokens; the event is on disk before this returns. A case that is
    /// already corrected is only rewritten with `overwrite`.
    pub fn submit_correction(
        &self,
        id: &str,
        span: CharSpan,
        reviewer: &str,
        overwrite: bool,
    ) -> Result<AlignmentCase, ReviewError> {
        let mut state = self.state.write().unwrap();
        let case = state.cases.get(id).ok_or_else(|| ReviewError::NotFound(id.to_string()))?;
        if reviewer.trim().is_empty() {
            return Err(ReviewError::Validation("reviewer must not be empty".into()));
        }
        let sentence = &self.record(case).metaphoric_sentence;
        let len = sentence.chars().count();
        if span.end <= span.start || span.end > len {
            return Err(ReviewError::Validation(format!(
                "span {span} is not a non-empty range within 0..{len}"
            )));
        }
        if case.status == CaseStatus::Corrected && !overwrite {
            return Err(ReviewError::Conflict(format!("case `{id}` is already corrected")));
        }
        let span = round_to_tokens(sentence, span)
            .ok_or_else(|| ReviewError::Validation(format!("span {span} covers no token")))?;
        let event = Event::Corrected {
            mention_id: id.to_string(),
            span,
            reviewer: reviewer.trim().to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            overwrite,
        };
        {
            let mut log = self.log.lock().unwrap();
            let line = serde_json::to_string(&event).expect("events serialize");
            writeln!(log, "{line}")
                .and_then(|_| log.sync_data())
                .map_err(|e| store_io(&self.dir.join(EVENTS_FILE), e))?;
        }
        state.apply(event)?;
        Ok(state.cases[id].clone())
    }

    /// Splits that hold at least one case.
    fn case_splits(&self) -> Result<Vec<Split>, ReviewError> {
        let state = self.state.read().unwrap();
        let mut splits = BTreeSet::new();
        for id in state.cases.keys() {
            splits.insert(self.corpus.split_of(id)?);
        }
        Ok(splits.into_iter().collect())
    }

    /// Builds the transformed corpus, or lists the cases blocking it.
    pub fn build(&self, version: MetaVersion) -> Result<Corpus, ReviewError> {
        let splits = self.case_splits()?;
        let records: Vec<ParaphraseRecord> = self.records.values().cloned().collect();
        Ok(build_meta_corpus(&self.corpus, &records, &self.cases(), &splits, version)?)
    }

    /// Builds and writes the transformed corpus to `out`.
    pub fn export_to(&self, version: MetaVersion, out: &Path) -> Result<Corpus, ReviewError> {
        let corpus = self.build(version)?;
        let mut buf = Vec::new();
        write_canonical(&corpus, &mut buf).map_err(|e| store_io(out, e))?;
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| store_io(parent, e))?;
        }
        fs::write(out, buf).map_err(|e| store_io(out, e))?;
        Ok(corpus)
    }

    /// Exports into `<store>/exports/` and returns the file path.
    pub fn export_ready(&self, version: MetaVersion) -> Result<PathBuf, ReviewError> {
        let name = match version {
            MetaVersion::Meta1 => "meta1.jsonl",
            MetaVersion::MetaM => "metam.jsonl",
        };
        let out = self.dir.join("exports").join(name);
        self.export_to(version, &out)?;
        Ok(out)
    }

    /// Hex SHA-256 over the materialized case state.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(&self.cases()).expect("cases serialize");
        hex::encode(Sha256::digest(bytes))
    }
}

fn snippet(text: &str) -> String {
    const MAX: usize = 80;
    if text.chars().count() <= MAX {
        text.to_string()
    } else {
        let mut s: String = text.chars().take(MAX - 1).collect();
        s.push('…');
        s
    }
}

// ---- HTTP ----

#[derive(Clone)]
struct AppState {
    store: Arc<CaseStore>,
    token: Option<Arc<str>>,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    blocking: Vec<String>,
}

impl IntoResponse for ReviewError {
    fn into_response(self) -> Response {
        let status = match &self {
            ReviewError::NotFound(_) => StatusCode::NOT_FOUND,
            ReviewError::Validation(_) => StatusCode::BAD_REQUEST,
            ReviewError::Conflict(_) | ReviewError::Blocked(_) => StatusCode::CONFLICT,
            ReviewError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let blocking = match &self {
            ReviewError::Blocked(ids) => ids.clone(),
            _ => Vec::new(),
        };
        let body = ErrorBody {
            error: self.to_string(),
            blocking,
        };
        (status, Json(body)).into_response()
    }
}

#[derive(Debug, Deserialize)]
struct ListQuery {
    status: Option<String>,
    offset: Option<usize>,
    limit: Option<usize>,
}

#[derive(Debug, Deserialize)]
pub struct CorrectionRequest {
    pub start: usize,
    pub end: usize,
    pub reviewer: String,
    #[serde(default)]
    pub overwrite: bool,
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    version: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExportResponse {
    pub path: String,
    pub version: String,
    pub mentions: usize,
}

async fn list_handler(State(app): State<AppState>, Query(q): Query<ListQuery>) -> Result<Json<CasePage>, ReviewError> {
    let statuses = match q.status.as_deref() {
        None | Some("") => Vec::new(),
        Some(s) => s
            .split(',')
            .map(|p| p.trim().parse::<CaseStatus>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(ReviewError::Validation)?,
    };
    let page = app
        .store
        .list_cases(&statuses, q.offset.unwrap_or(0), q.limit.unwrap_or(50))?;
    Ok(Json(page))
}

async fn get_handler(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<CaseDetail>, ReviewError> {
    Ok(Json(app.store.get_case(&id)?))
}

async fn correction_handler(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<CorrectionRequest>,
) -> Result<Json<AlignmentCase>, ReviewError> {
    let store = app.store.clone();
    let case = tokio::task::spawn_blocking(move || {
        store.submit_correction(&id, CharSpan::new(req.start, req.end), &req.reviewer, req.overwrite)
    })
    .await
    .map_err(|e| ReviewError::Store(e.to_string()))??;
    Ok(Json(case))
}

async fn export_handler(State(app): State<AppState>, Query(q): Query<ExportQuery>) -> Result<Json<ExportResponse>, ReviewError> {
    let version: MetaVersion = q.version.parse().map_err(ReviewError::Validation)?;
    let store = app.store.clone();
    let path = tokio::task::spawn_blocking(move || store.export_ready(version))
        .await
        .map_err(|e| ReviewError::Store(e.to_string()))??;
    Ok(Json(ExportResponse {
        path: path.display().to_string(),
        version: version.tag().to_string(),
        mentions: app.store.corpus().mention_count(),
    }))
}

async fn require_token(State(app): State<AppState>, req: Request, next: Next) -> Response {
    if let Some(expected) = &app.token {
        let given = req
            .headers()
            .get(TOKEN_HEADER)
            .and_then(|v| v.to_str().ok())
            .map(str::to_string)
            .or_else(|| {
                req.headers()
                    .get(header::AUTHORIZATION)
                    .and_then(|v| v.to_str().ok())
                    .and_then(|v| v.strip_prefix("Bearer "))
                    .map(str::to_string)
            });
        if given.as_deref() != Some(expected.as_ref()) {
            let body = ErrorBody {
                error: "missing or wrong review token".into(),
                blocking: Vec::new(),
            };
            return (StatusCode::UNAUTHORIZED, Json(body)).into_response();
        }
    }
    next.run(req).await
}

/// The API router. With a token, every API call must present it (header
/// `x-review-token` or a bearer token). `static_dir` serves the UI bundle.
pub fn router(store: Arc<CaseStore>, token: Option<String>, static_dir: Option<&Path>) -> Router {
    let app = AppState {
        store,
        token: token.filter(|t| !t.is_empty()).map(Arc::from),
    };
    let api = Router::new()
        .route("/cases", get(list_handler))
        .route("/cases/{id}", get(get_handler))
        .route("/cases/{id}/correction", post(correction_handler))
        .route("/export", post(export_handler))
        .route_layer(middleware::from_fn_with_state(app.clone(), require_token))
        .with_state(app);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until the process is stopped.
pub async fn serve(addr: SocketAddr, app: Router) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, app).await
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CorpusBuilder;
    use crate::metamorph::{align_records, Mode};

    fn fixture(dir: &Path) -> CaseStore {
        let mut b = CorpusBuilder::new("rv");
        b.document("t", "d1")
            .sentence_text("d1", "the storm hit the coast and hit again")
            .mention("m1", "d1", 0, 2, 3, "A", Split::Test)
            .mention("m2", "d1", 0, 6, 7, "B", Split::Test);
        b.document("t", "d2")
            .sentence_text("d2", "officials said the storm ended")
            .mention("m3", "d2", 0, 1, 2, "C", Split::Test);
        let corpus = b.build().unwrap();
        let rec = |doc: &str, orig: &[&str], meta: &[&str], s: &str| ParaphraseRecord {
            doc_id: doc.into(),
            sentence_index: 0,
            original_sentence: String::new(),
            original_word_list: orig.iter().map(|w| w.to_string()).collect(),
            metaphoric_word_list: meta.iter().map(|w| w.to_string()).collect(),
            metaphoric_sentence: s.into(),
            mode: Mode::SingleWord,
            raw_response: String::new(),
            template_hash: String::new(),
            attempts: 1,
            failure: None,
        };
        let records = vec![
            // "lashed" appears twice but only one trigger asks for it.
            rec("d1", &["hit", "hit"], &["lashed", "pummelled"], "the storm lashed the coast and lashed again"),
            rec("d2", &["said"], &["trumpeted"], "officials claimed the storm ended"),
        ];
        let cases = align_records(&corpus, &records).unwrap();
        CaseStore::init(dir, &corpus, &records, &cases).unwrap()
    }

    #[test]
    fn queue_and_details() {
        let dir = tempfile::tempdir().unwrap();
        let store = fixture(dir.path());
        let page = store.list_cases(&[], 0, 10).unwrap();
        let ids: Vec<_> = page.cases.iter().map(|c| c.mention_id.as_str()).collect();
        assert_eq!(ids, vec!["m1", "m2", "m3"]);
        let amb = store.list_cases(&[CaseStatus::Ambiguous], 0, 10).unwrap();
        assert_eq!(amb.total, 1);
        let beyond = store.list_cases(&[], 10, 10).unwrap();
        assert_eq!((beyond.total, beyond.cases.len()), (3, 0));
        assert!(matches!(store.list_cases(&[], 0, 0), Err(ReviewError::Validation(_))));

        let d = store.get_case("m1").unwrap();
        assert_eq!(d.occurrences.len(), 2);
        assert_eq!(d.original_trigger, "hit");
        assert_eq!(&d.original_sentence[d.original_span.start..d.original_span.end], "hit");
        assert!(store.get_case("m3").unwrap().occurrences.is_empty());
        assert!(matches!(store.get_case("zz"), Err(ReviewError::NotFound(_))));
    }

    #[test]
    fn corrections_replay_and_gate_export() {
        let dir = tempfile::tempdir().unwrap();
        let store = fixture(dir.path());
        let before = store.digest();
        store.list_cases(&[], 0, 5).unwrap();
        store.get_case("m1").unwrap();
        assert_eq!(store.digest(), before);

        match store.export_ready(MetaVersion::Meta1) {
            Err(ReviewError::Blocked(ids)) => assert_eq!(ids, vec!["m1", "m2", "m3"]),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            store.submit_correction("m1", CharSpan::new(5, 5), "ana", false),
            Err(ReviewError::Validation(_))
        ));
        // Half of "lashed" (second occurrence) rounds out to the word.
        let c = store.submit_correction("m1", CharSpan::new(33, 36), "ana", false).unwrap();
        assert_eq!(c.correction, Some(CharSpan::new(31, 37)));
        assert!(matches!(
            store.submit_correction("m1", CharSpan::new(10, 16), "bo", false),
            Err(ReviewError::Conflict(_))
        ));
        store.submit_correction("m2", CharSpan::new(10, 16), "ana", false).unwrap();
        store.submit_correction("m3", CharSpan::new(10, 17), "ana", false).unwrap();
        let detail = store.get_case("m3").unwrap();
        assert_eq!(detail.case.reviewer.as_deref(), Some("ana"));

        let digest = store.digest();
        drop(store);
        let reopened = CaseStore::open(dir.path()).unwrap();
        assert_eq!(reopened.digest(), digest);

        let p = reopened.export_ready(MetaVersion::Meta1).unwrap();
        let first = fs::read(&p).unwrap();
        reopened.export_ready(MetaVersion::Meta1).unwrap();
        assert_eq!(fs::read(&p).unwrap(), first);
        let meta = read_canonical(&p).unwrap();
        assert_eq!(meta.gold_assignment(None), reopened.corpus().gold_assignment(None));
        assert_eq!(meta.mention("m1").unwrap().trigger_text, "lashed");
        assert_eq!(meta.mention("m3").unwrap().trigger_text, "claimed");
    }

    #[test]
    fn init_refuses_existing_store() {
        let dir = tempfile::tempdir().unwrap();
        let store = fixture(dir.path());
        let cases = store.cases();
        let r = CaseStore::init(dir.path(), store.corpus(), &[], &cases);
        assert!(matches!(r, Err(ReviewError::Conflict(_))));
    }
}
