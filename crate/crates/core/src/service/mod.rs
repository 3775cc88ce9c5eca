//! HTTP session service: one immutable model, many patient sessions, each
//! advanced one day at a time by the forward filter.
//!
//! Routes:
//! - `POST /patients` — open a session from fixed observations (201)
//! - `POST /patients/{id}/days` — append the next day's observations
//! - `GET  /patients/{id}/trajectory` — baseline plus every accepted day
//! - `POST /patients/{id}/what-if` — next-day risk under hypothetical
//!   observations; the session is not changed
//! - `GET  /model` — structure summary, schema, version, threshold
//! - `GET  /healthz`
//!
//! Anything else is served from an optional static directory (the web UI).

mod error;
mod store;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

pub use error::{ApiError, ErrorBody};
pub use store::{valid_patient_id, SessionRecord, SessionStore};

use crate::clinical::ClinicalSchema;
use crate::dbn::{DbnSpec, FilterState, PredictionTrace, TracePoint};
use crate::pgm::{Assignment, Variable};

/// What a service instance is started with.
#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub model: DbnSpec,
    pub schema: Option<ClinicalSchema>,
    pub threshold: f64,
    /// Session snapshots are kept here when set; otherwise sessions live in
    /// memory only.
    pub data_dir: Option<PathBuf>,
    /// Static files served for every path the API does not claim.
    pub ui_dir: Option<PathBuf>,
}

impl ServiceConfig {
    pub fn new(model: DbnSpec) -> Self {
        ServiceConfig {
            model,
            schema: None,
            threshold: crate::eval::DEFAULT_THRESHOLD,
            data_dir: None,
            ui_dir: None,
        }
    }
}

struct Session {
    record: SessionRecord,
    filter: FilterState,
}

/// Shared state behind the router.
pub struct AppState {
    model: DbnSpec,
    schema: Option<ClinicalSchema>,
    threshold: f64,
    store: Option<SessionStore>,
    // the map lock is held only to find or insert a session; each session
    // has its own lock so different patients never wait on each other
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

fn replay(model: &DbnSpec, record: &SessionRecord) -> Result<(FilterState, PredictionTrace), ApiError> {
    let mut filter = FilterState::start(model, &record.static_evidence)?;
    let mut points = vec![TracePoint {
        day: 0,
        probability: filter.baseline(model)?,
    }];
    for obs in &record.days {
        let p = filter.advance(model, obs)?;
        points.push(TracePoint {
            day: filter.day(),
            probability: p,
        });
    }
    Ok((filter, PredictionTrace { points }))
}

impl AppState {
    /// Builds the state and reloads any stored sessions. A stored session
    /// whose trajectory does not replay identically under this model is an
    /// error: it was recorded with a different model.
    pub fn new(config: ServiceConfig) -> Result<Self, String> {
        if !(0.0..=1.0).contains(&config.threshold) {
            return Err(format!("threshold must be in [0, 1], got {}", config.threshold));
        }
        if let Some(schema) = &config.schema {
            schema.check_model(&config.model).map_err(|e| e.to_string())?;
        }
        let store = match &config.data_dir {
            Some(dir) => Some(SessionStore::open(dir).map_err(|e| format!("{}: {e}", dir.display()))?),
            None => None,
        };
        let mut sessions = HashMap::new();
        if let Some(store) = &store {
            for record in store.load_all()? {
                let (filter, trace) =
                    replay(&config.model, &record).map_err(|e| format!("session {}: {}", record.patient_id, e.body.message))?;
                if trace != record.trace {
                    return Err(format!(
                        "session {} does not replay under this model (recorded with a different model?)",
                        record.patient_id
                    ));
                }
                sessions.insert(record.patient_id.clone(), Arc::new(Mutex::new(Session { record, filter })));
            }
        }
        Ok(AppState {
            model: config.model,
            schema: config.schema,
            threshold: config.threshold,
            store,
            sessions: RwLock::new(sessions),
        })
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session map lock").len()
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    fn persist(&self, record: &SessionRecord) -> Result<(), ApiError> {
        match &self.store {
            Some(store) => store
                .save(record)
                .map_err(|e| ApiError::internal(format!("could not store session: {e}"))),
            None => Ok(()),
        }
    }
}

/// The API router, with the static directory as fallback when configured.
pub fn router(state: Arc<AppState>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/healthz", get(healthz))
        .route("/model", get(model_info))
        .route("/patients", post(create_patient))
        .route("/patients/{id}/days", post(add_day))
        .route("/patients/{id}/trajectory", get(trajectory))
        .route("/patients/{id}/what-if", post(what_if))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(not_found),
    }
}

/// Binds `addr` and serves until interrupted.
pub async fn serve(config: ServiceConfig, addr: SocketAddr) -> std::io::Result<()> {
    let ui_dir = config.ui_dir.clone();
    let state = Arc::new(AppState::new(config).map_err(std::io::Error::other)?);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!(
        "listening on http://{} ({} stored sessions)",
        listener.local_addr()?,
        state.session_count()
    );
    axum::serve(listener, router(state, ui_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSummary {
    pub name: String,
    pub states: Vec<String>,
    pub parents: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub version: String,
    pub threshold: f64,
    pub result_node: String,
    pub baseline_node: Option<String>,
    pub static_variables: Vec<NodeSummary>,
    pub template_variables: Vec<NodeSummary>,
    pub inter_slice_arcs: Vec<[String; 2]>,
    pub bridge_arcs: Vec<[String; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub schema: Option<serde_json::Value>,
}

fn node(v: &Variable, parents: &[String]) -> NodeSummary {
    NodeSummary {
        name: v.name.clone(),
        states: v.states.clone(),
        parents: parents.to_vec(),
    }
}

fn pairs(arcs: &[(String, String)]) -> Vec<[String; 2]> {
    arcs.iter().map(|(a, b)| [a.clone(), b.clone()]).collect()
}

/// Summary of the served model, as returned by `GET /model`.
pub fn model_summary(model: &DbnSpec, schema: Option<&ClinicalSchema>, threshold: f64) -> ModelSummary {
    let structure = model.structure();
    let static_variables = structure
        .static_slice
        .variables
        .iter()
        .map(|v| {
            let parents = structure
                .static_slice
                .families
                .iter()
                .find(|f| f.child == v.name)
                .map_or(&[][..], |f| &f.parents);
            node(v, parents)
        })
        .collect();
    ModelSummary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        threshold,
        result_node: structure.result_node.clone(),
        baseline_node: structure.baseline_node.clone(),
        static_variables,
        template_variables: structure
            .template_variables
            .iter()
            .zip(&structure.template_parents)
            .map(|(v, p)| node(v, p))
            .collect(),
        inter_slice_arcs: pairs(&structure.inter_slice_arcs),
        bridge_arcs: pairs(&structure.bridge_arcs),
        schema: schema.and_then(|s| serde_json::to_value(s).ok()),
    }
}

async fn model_info(State(state): State<Arc<AppState>>) -> Json<ModelSummary> {
    Json(model_summary(&state.model, state.schema.as_ref(), state.threshold))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreatePatient {
    #[serde(default)]
    pub patient_id: Option<String>,
    #[serde(default)]
    pub fixed: Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Created {
    pub patient_id: String,
    pub baseline: f64,
}

async fn create_patient(State(state): State<Arc<AppState>>, body: Bytes) -> Result<(StatusCode, Json<Created>), ApiError> {
    let req: CreatePatient = parse(&body)?;
    let patient_id = match req.patient_id {
        Some(id) if !valid_patient_id(&id) => {
            return Err(ApiError::invalid(
                "patient_id",
                "patient_id must be 1-128 characters of letters, digits, '-', '_' or '.', not starting with '.'",
            ))
        }
        Some(id) => id,
        None => uuid::Uuid::new_v4().to_string(),
    };
    let filter = FilterState::start(&state.model, &req.fixed)?;
    let baseline = filter.baseline(&state.model)?;
    let now = Utc::now();
    let record = SessionRecord {
        patient_id: patient_id.clone(),
        static_evidence: req.fixed,
        days: Vec::new(),
        trace: PredictionTrace {
            points: vec![TracePoint { day: 0, probability: baseline }],
        },
        created_at: now,
        updated_at: now,
    };
    {
        let mut sessions = state.sessions.write().expect("session map lock");
        if sessions.contains_key(&patient_id) {
            return Err(ApiError::conflict(format!("patient {patient_id} already exists")));
        }
        state.persist(&record)?;
        sessions.insert(patient_id.clone(), Arc::new(Mutex::new(Session { record, filter })));
    }
    Ok((StatusCode::CREATED, Json(Created { patient_id, baseline })))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DayRequest {
    /// Must be the day after the last accepted one; defaults to it.
    #[serde(default)]
    pub day: Option<usize>,
    #[serde(default)]
    pub observations: Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRisk {
    pub patient_id: String,
    pub day: usize,
    pub probability: f64,
}

async fn add_day(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<Json<DayRisk>, ApiError> {
    let req: DayRequest = parse(&body)?;
    let session = state.session(&id)?;
    let mut session = session.lock().expect("session lock");
    let expected = session.filter.day() + 1;
    if let Some(day) = req.day {
        if day != expected {
            return Err(ApiError::conflict(format!("patient {id}: expected day {expected}, got day {day}")).with_field("day"));
        }
    }
    // advance a copy so a failed write leaves the session untouched
    let mut filter = session.filter.clone();
    let probability = filter.advance(&state.model, &req.observations)?;
    let mut record = session.record.clone();
    record.days.push(req.observations);
    record.trace.points.push(TracePoint {
        day: expected,
        probability,
    });
    record.updated_at = Utc::now();
    state.persist(&record)?;
    *session = Session { record, filter };
    Ok(Json(DayRisk {
        patient_id: id,
        day: expected,
        probability,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub patient_id: String,
    pub threshold: f64,
    pub points: Vec<TracePoint>,
}

async fn trajectory(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Trajectory>, ApiError> {
    let session = state.session(&id)?;
    let session = session.lock().expect("session lock");
    Ok(Json(Trajectory {
        patient_id: id,
        threshold: state.threshold,
        points: session.record.trace.points.clone(),
    }))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    #[serde(default)]
    pub observations: Assignment,
}

async fn what_if(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<Json<DayRisk>, ApiError> {
    let req: WhatIfRequest = parse(&body)?;
    let session = state.session(&id)?;
    let session = session.lock().expect("session lock");
    let probability = session.filter.peek(&state.model, &req.observations)?;
    Ok(Json(DayRisk {
        patient_id: id,
        day: session.filter.day() + 1,
        probability,
    }))
}
