//! HTTP service for rater sessions: blinded cases, ranking and annotation
//! submission, and analytics over the stored records.
//!
//! Records are appended to `rankings.jsonl` and `annotations.jsonl` in the
//! store directory, one line per submission; analytics keep the newest
//! record per key.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use medbench_core::humeval::{
    assign_rater, blind_case, blind_order, latest_annotations, latest_rankings, ranking_summary, rate_with_ci, Arm,
    BlindedCase, ErrorAnnotation, EvalCase, IndependentRecord, OmissionAnnotation, RankingRecord, RateEstimate,
    RateFilter, DEFAULT_LEVEL, DEFAULT_RESAMPLES,
};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use crate::fsio::read_jsonl;
use crate::Error;

pub const RANKINGS_FILE: &str = "rankings.jsonl";
pub const ANNOTATIONS_FILE: &str = "annotations.jsonl";

/// Append-only JSONL record log.
#[derive(Debug)]
pub struct RecordStore {
    dir: PathBuf,
    clock: Mutex<u64>,
}

impl RecordStore {
    pub fn open(dir: &Path) -> Result<Self, Error> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            clock: Mutex::new(0),
        })
    }

    fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    /// Appends one record as a single write, under the store lock. The
    /// returned id is the record's 1-based line number.
    async fn append<T: Serialize>(&self, file: &str, make: impl FnOnce(u64) -> T) -> Result<usize, Error> {
        let mut clock = self.clock.lock().await;
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64);
        *clock = now.max(*clock + 1);
        let mut line = serde_json::to_vec(&make(*clock))?;
        line.push(b'\n');
        let path = self.path(file);
        let existing = match std::fs::read(&path) {
            Ok(b) => b.iter().filter(|c| **c == b'\n').count(),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => 0,
            Err(e) => return Err(Error::io(&path, e)),
        };
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        f.write_all(&line).map_err(|e| Error::io(&path, e))?;
        f.sync_data().map_err(|e| Error::io(&path, e))?;
        Ok(existing + 1)
    }

    fn read<T: serde::de::DeserializeOwned>(&self, file: &str) -> Result<Vec<T>, Error> {
        let path = self.path(file);
        if !path.exists() {
            return Ok(Vec::new());
        }
        read_jsonl(&path)
    }

    pub fn rankings(&self) -> Result<Vec<RankingRecord>, Error> {
        Ok(latest_rankings(self.read(RANKINGS_FILE)?))
    }

    pub fn annotations(&self) -> Result<Vec<IndependentRecord>, Error> {
        Ok(latest_annotations(self.read(ANNOTATIONS_FILE)?))
    }
}

#[derive(Debug)]
pub struct AppState {
    cases: BTreeMap<String, EvalCase>,
    /// Case ids in load order.
    order: Vec<String>,
    raters: Vec<String>,
    seed: u64,
    store: RecordStore,
}

impl AppState {
    pub fn new(cases: Vec<EvalCase>, raters: Vec<String>, seed: u64, store: RecordStore) -> Result<Self, Error> {
        let mut map = BTreeMap::new();
        let mut order = Vec::new();
        for c in cases {
            c.validate()?;
            order.push(c.case_id.clone());
            if map.insert(c.case_id.clone(), c).is_some() {
                return Err(Error::Invalid(format!("duplicate case id `{}`", order.last().unwrap())));
            }
        }
        Ok(Self {
            cases: map,
            order,
            raters,
            seed,
            store,
        })
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/cases/{id}", get(get_case))
        .route("/cases/{id}/independent", get(get_independent))
        .route("/raters/{id}/next", get(next_case))
        .route("/rankings", post(post_ranking))
        .route("/annotations", post(post_annotation))
        .route("/analytics/ranking", get(ranking_analytics))
        .route("/analytics/rates", get(rate_analytics))
        .with_state(Arc::new(state))
}

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

fn unprocessable(msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::UNPROCESSABLE_ENTITY, msg.into())
}

type Shared = State<Arc<AppState>>;

fn case<'a>(state: &'a AppState, id: &str) -> Result<&'a EvalCase, ApiError> {
    state
        .cases
        .get(id)
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no case `{id}`")))
}

async fn get_case(State(state): Shared, UrlPath(id): UrlPath<String>) -> Result<Json<BlindedCase>, ApiError> {
    Ok(Json(blind_case(case(&state, &id)?, state.seed)))
}

/// Payload for annotating model outputs one at a time next to the
/// ground-truth report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndependentPayload {
    pub case_id: String,
    pub image_ref: String,
    pub indication: String,
    pub ground_truth_findings: String,
    /// Model outputs under their side-by-side slot numbers.
    pub candidates: Vec<medbench_core::humeval::BlindedOption>,
}

async fn get_independent(
    State(state): Shared,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<IndependentPayload>, ApiError> {
    let c = case(&state, &id)?;
    let blinded = blind_case(c, state.seed);
    let order = blind_order(&c.case_id, state.seed);
    Ok(Json(IndependentPayload {
        case_id: c.case_id.clone(),
        image_ref: c.image_ref.clone(),
        indication: c.indication.clone(),
        ground_truth_findings: c.findings(Arm::Reference).to_string(),
        candidates: blinded
            .options
            .into_iter()
            .zip(order)
            .filter(|(_, a)| *a != Arm::Reference)
            .map(|(o, _)| o)
            .collect(),
    }))
}

/// Next case assigned to the rater that they have not ranked yet.
async fn next_case(State(state): Shared, UrlPath(rater): UrlPath<String>) -> Result<Response, ApiError> {
    if !state.raters.contains(&rater) {
        return Err(ApiError(StatusCode::NOT_FOUND, format!("unknown rater `{rater}`")));
    }
    let done: Vec<String> = state
        .store
        .rankings()?
        .into_iter()
        .filter(|r| r.rater_id == rater)
        .map(|r| r.case_id)
        .collect();
    for id in &state.order {
        if assign_rater(id, &state.raters, state.seed) == Some(rater.as_str()) && !done.contains(id) {
            return Ok(Json(blind_case(&state.cases[id], state.seed)).into_response());
        }
    }
    Ok(StatusCode::NO_CONTENT.into_response())
}

/// A ranking as the client knows it: slots, best first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingSubmission {
    pub case_id: String,
    pub rater_id: String,
    pub ranking: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub record_id: usize,
}

async fn post_ranking(
    State(state): Shared,
    Json(sub): Json<RankingSubmission>,
) -> Result<(StatusCode, Json<Ack>), ApiError> {
    let c = case(&state, &sub.case_id)?;
    let order = blind_order(&c.case_id, state.seed);
    let mut seen = sub.ranking.clone();
    seen.sort_unstable();
    if seen != [1, 2, 3, 4] {
        return Err(unprocessable("ranking must list slots 1 to 4 once each"));
    }
    let ranking =
        medbench_core::humeval::unblind_ranking(&order, &sub.ranking).map_err(|e| unprocessable(e.to_string()))?;
    let record_id = state
        .store
        .append(RANKINGS_FILE, |timestamp| RankingRecord {
            case_id: sub.case_id.clone(),
            rater_id: sub.rater_id.clone(),
            ranking,
            presentation_order: order.to_vec(),
            timestamp,
        })
        .await?;
    Ok((StatusCode::CREATED, Json(Ack { record_id })))
}

/// An independent annotation of the model output shown in `slot`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSubmission {
    pub case_id: String,
    pub rater_id: String,
    pub slot: usize,
    pub image_quality_sufficient: bool,
    #[serde(default)]
    pub errors: Vec<ErrorAnnotation>,
    #[serde(default)]
    pub omissions: Vec<OmissionAnnotation>,
}

async fn post_annotation(
    State(state): Shared,
    Json(sub): Json<AnnotationSubmission>,
) -> Result<(StatusCode, Json<Ack>), ApiError> {
    let c = case(&state, &sub.case_id)?;
    let order = blind_order(&c.case_id, state.seed);
    let arm = sub
        .slot
        .checked_sub(1)
        .and_then(|i| order.get(i).copied())
        .ok_or_else(|| unprocessable(format!("slot {} out of range", sub.slot)))?;
    if arm == Arm::Reference {
        return Err(unprocessable(format!(
            "slot {} holds the ground-truth report; only model outputs are annotated",
            sub.slot
        )));
    }
    let record = IndependentRecord {
        case_id: sub.case_id,
        rater_id: sub.rater_id,
        arm,
        image_quality_sufficient: sub.image_quality_sufficient,
        errors: sub.errors,
        omissions: sub.omissions,
        timestamp: 0,
    };
    record
        .validate(c.findings(arm))
        .map_err(|e| unprocessable(e.to_string()))?;
    let record_id = state
        .store
        .append(ANNOTATIONS_FILE, |timestamp| IndependentRecord { timestamp, ..record })
        .await?;
    Ok((StatusCode::CREATED, Json(Ack { record_id })))
}

async fn ranking_analytics(State(state): Shared) -> Result<Response, ApiError> {
    let records = state.store.rankings()?;
    let summary = ranking_summary(&records).map_err(|e| unprocessable(e.to_string()))?;
    Ok(Json(summary).into_response())
}

#[derive(Debug, Deserialize)]
pub struct RateQuery {
    filter: Option<String>,
    resamples: Option<usize>,
    level: Option<f64>,
    seed: Option<u64>,
}

/// Rate for one filter per model arm.
async fn rate_analytics(
    State(state): Shared,
    Query(q): Query<RateQuery>,
) -> Result<Json<BTreeMap<Arm, RateEstimate>>, ApiError> {
    let filter = match q.filter.as_deref() {
        None => RateFilter::ALL[0],
        Some(f) => RateFilter::parse(f).ok_or_else(|| unprocessable(format!("unknown filter `{f}`")))?,
    };
    let records = state.store.annotations()?;
    let mut by_arm: BTreeMap<Arm, Vec<IndependentRecord>> = BTreeMap::new();
    for r in records {
        by_arm.entry(r.arm).or_default().push(r);
    }
    let mut out = BTreeMap::new();
    for (arm, rs) in by_arm {
        let est = rate_with_ci(
            &rs,
            filter,
            q.resamples.unwrap_or(DEFAULT_RESAMPLES),
            q.level.unwrap_or(DEFAULT_LEVEL),
            q.seed.unwrap_or(state.seed),
        )
        .map_err(|e| unprocessable(e.to_string()))?;
        out.insert(arm, est);
    }
    Ok(Json(out))
}

/// Binds and serves until the process ends.
pub async fn serve(state: AppState, addr: std::net::SocketAddr) -> Result<(), Error> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::Invalid(format!("bind {addr}: {e}")))?;
    log::info!("humeval service listening on {addr}");
    axum::serve(listener, router(state))
        .await
        .map_err(|e| Error::Invalid(format!("serve: {e}")))
}
