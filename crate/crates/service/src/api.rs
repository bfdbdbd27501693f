//! HTTP routes.

use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Map, Value};

use fmcq_core::diagnosis::{diagnose_model, DiagnosisOptions};
use fmcq_core::io::{parse, ModelFormat};
use fmcq_core::{Approach, FeatureModel};

use crate::error::ApiError;
use crate::session::{apply, evaluate, Mutation, StepState};
use crate::state::{AppState, ModelEntry, Session};
use crate::views::{
    assignment_json, configuration_json, AnalysisView, CountRequest, CreateModel, CreateSession,
    DiagnoseRequest, DiagnosisView, ModelSummary, SolveRequest, StepRequest, Timing, API_VERSION,
};

type ApiResult<T> = Result<T, ApiError>;
type Body<T> = Result<Json<T>, JsonRejection>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/models", post(create_model))
        .route("/models/{id}", get(get_model))
        .route("/models/{id}/solve", post(solve))
        .route("/models/{id}/count", post(count))
        .route("/models/{id}/diagnose", post(diagnose))
        .route("/models/{id}/analysis", get(analysis))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/step", post(step))
        .with_state(state)
}

fn body<T>(b: Body<T>) -> ApiResult<T> {
    b.map(|Json(v)| v).map_err(|e| ApiError::bad_request(e.body_text()))
}

fn approach(repr: Option<&str>) -> ApiResult<Approach> {
    repr.map_or(Ok(Approach::PerFeature), |r| {
        Approach::from_str(r).map_err(ApiError::validation)
    })
}

fn ms(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}

fn lookup_model(state: &AppState, id: &str) -> ApiResult<Arc<ModelEntry>> {
    state.model(id).ok_or_else(|| ApiError::not_found("model", id))
}

pub fn summary(fm: &FeatureModel, entry_cf: &fmcq_core::semantics::ConstraintSet) -> ModelSummary {
    ModelSummary {
        features: fm.len(),
        leaves: fm.leaves().len(),
        groups: fm.groups().len(),
        hierarchical_constraints: entry_cf.iter().filter(|f| f.origin.is_hierarchical()).count(),
        cross_tree_constraints: fm.ctcs().len(),
    }
}

async fn create_model(State(state): State<Arc<AppState>>, b: Body<CreateModel>) -> ApiResult<(StatusCode, Json<Value>)> {
    let req = body(b)?;
    let format = match &req.format {
        Some(f) => ModelFormat::from_str(f).map_err(ApiError::validation)?,
        None => ModelFormat::detect(&req.source),
    };
    let model = parse(format, &req.source)?;
    let name = req.name.unwrap_or_else(|| model.feature(model.root()).name.clone());
    let entry = state.insert_model(ModelEntry::new(AppState::new_id(), name, format, model));
    Ok((
        StatusCode::CREATED,
        Json(json!({
            "api_version": API_VERSION,
            "model_id": entry.id,
            "name": entry.name,
            "stats": summary(&entry.model, &entry.cf),
        })),
    ))
}

async fn get_model(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let entry = lookup_model(&state, &id)?;
    let fm = &entry.model;
    let formulas: Vec<Value> = entry
        .cf
        .iter()
        .map(|f| json!({ "label": f.label, "origin": f.origin, "text": f.expr.to_text(fm) }))
        .collect();
    Ok(Json(json!({
        "api_version": API_VERSION,
        "model_id": entry.id,
        "name": entry.name,
        "format": entry.format,
        "stats": summary(fm, &entry.cf),
        "features": fm.features(),
        "groups": fm.groups(),
        "constraints": fm.ctcs(),
        "formulas": formulas,
    })))
}

async fn solve(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    b: Body<SolveRequest>,
) -> ApiResult<Json<Value>> {
    let req = body(b)?;
    let entry = lookup_model(&state, &id)?;
    let approach = approach(req.repr.as_deref())?;
    let cr = req.cr.to_assignment(&entry.model)?;
    let limit = req.limit.unwrap_or(1);
    blocking(move || {
        let solver = entry.solver(approach)?;
        let started = Instant::now();
        let configs = if limit == 1 {
            solver.solve(&cr)?.into_iter().collect()
        } else {
            solver.enumerate(&cr, Some(limit))?
        };
        let count = if req.count { Some(solver.count(&cr)?) } else { None };
        let query_ms = ms(started.elapsed());
        let fm = &entry.model;
        let mut out = json!({
            "api_version": API_VERSION,
            "repr": approach,
            "verdict": if configs.is_empty() { "UNSAT" } else { "SAT" },
            "configurations": configs.iter().map(|c| configuration_json(fm, c)).collect::<Vec<_>>(),
            "timing": Timing { build_ms: ms(solver.build_time()), query_ms },
        });
        if let Some(n) = count {
            out["count"] = json!(n);
        }
        Ok(Json(out))
    })
    .await
}

async fn count(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    b: Body<CountRequest>,
) -> ApiResult<Json<Value>> {
    let req = body(b)?;
    let entry = lookup_model(&state, &id)?;
    let approach = approach(req.repr.as_deref())?;
    let cr = req.cr.to_assignment(&entry.model)?;
    blocking(move || {
        let solver = entry.solver(approach)?;
        let started = Instant::now();
        let n = solver.count_up_to(&cr, req.cap)?;
        Ok(Json(json!({
            "api_version": API_VERSION,
            "repr": approach,
            "count": n,
            "capped": req.cap.is_some_and(|c| n >= c as u64),
            "timing": Timing { build_ms: ms(solver.build_time()), query_ms: ms(started.elapsed()) },
        })))
    })
    .await
}

async fn diagnose(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    b: Body<DiagnoseRequest>,
) -> ApiResult<Json<Value>> {
    let req = body(b)?;
    let entry = lookup_model(&state, &id)?;
    let cr = req.cr.to_assignment(&entry.model)?;
    let max = req.max.unwrap_or(10);
    blocking(move || {
        let fm = &entry.model;
        let report = diagnose_model(fm, &entry.cf, &cr, max, DiagnosisOptions::default())?;
        let consistent = report.diagnoses.first().is_some_and(|d| d.is_empty());
        let diagnoses: Vec<DiagnosisView> = report
            .diagnoses
            .iter()
            .filter(|d| !d.is_empty())
            .map(|d| DiagnosisView::new(fm, &cr, d))
            .collect();
        Ok(Json(json!({
            "api_version": API_VERSION,
            "consistent": consistent,
            "complete": report.complete,
            "scanned": report.scanned,
            "diagnoses": diagnoses,
        })))
    })
    .await
}

async fn analysis(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<AnalysisView>> {
    let entry = lookup_model(&state, &id)?;
    blocking(move || Ok(Json(AnalysisView::new(&entry.model, entry.analysis())))).await
}

fn step_json(session: &Session, st: &StepState) -> Value {
    let fm = &session.model.model;
    let forced: Map<String, Value> = st
        .forced
        .iter()
        .map(|&(f, v)| (fm.id(f).to_string(), json!(u8::from(v))))
        .collect();
    json!({
        "api_version": API_VERSION,
        "session_id": session.id,
        "model_id": session.model.id,
        "repr": session.solver.approach(),
        "cr": assignment_json(fm, &st.cr),
        "consistent": st.consistent,
        "forced": forced,
        "remaining": st.remaining,
        "remaining_capped": st.remaining_capped,
        "diagnoses": st.diagnoses.iter().map(|d| DiagnosisView::new(fm, &st.cr, d)).collect::<Vec<_>>(),
        "configuration": st.configuration.as_ref().map(|c| configuration_json(fm, c)),
    })
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    b: Body<CreateSession>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let req = body(b)?;
    let entry = lookup_model(&state, &req.model_id)?;
    let approach = approach(req.repr.as_deref())?;
    let session = blocking(move || {
        let solver = entry.solver(approach)?;
        let cr = fmcq_core::Assignment::new();
        let last = evaluate(&solver, &cr).map_err(|e| ApiError::internal(e.to_string()))?;
        Ok(Session {
            id: AppState::new_id(),
            model: entry,
            solver,
            cr,
            log: Vec::new(),
            last,
        })
    })
    .await?;
    let body = step_json(&session, &session.last);
    state.insert_session(session);
    Ok((StatusCode::CREATED, Json(body)))
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let session = state.session(&id).ok_or_else(|| ApiError::not_found("session", &id))?;
    let session = session.lock().await;
    Ok(Json(step_json(&session, &session.last)))
}

fn mutations(session: &Session, req: &StepRequest) -> ApiResult<Vec<Mutation>> {
    let fm = &session.model.model;
    match (&req.set, &req.unset) {
        (Some(set), None) => {
            let a = set.to_assignment(fm).map_err(|e| {
                let unknown = e.bad.iter().any(|b| b.reason == "unknown feature");
                let mut err = ApiError::from(e);
                if unknown {
                    err.status = StatusCode::NOT_FOUND;
                    err.kind = "not_found";
                }
                err
            })?;
            Ok(a.iter().map(|(feature, value)| Mutation::Set { feature, value }).collect())
        }
        (None, Some(name)) => {
            let feature = fm.lookup(name).ok_or_else(|| ApiError::not_found("feature", name))?;
            Ok(vec![Mutation::Unset { feature }])
        }
        _ => Err(ApiError::validation("step needs exactly one of `set` or `unset`")),
    }
}

async fn step(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    b: Body<StepRequest>,
) -> ApiResult<Json<Value>> {
    let req = body(b)?;
    let handle = state.session(&id).ok_or_else(|| ApiError::not_found("session", &id))?;
    let mut session = handle.lock_owned().await;
    let muts = mutations(&session, &req)?;
    let next = muts.iter().fold(session.cr.clone(), |cr, &m| apply(&cr, m));
    if next == session.cr {
        return Ok(Json(step_json(&session, &session.last)));
    }
    let solver = session.solver.clone();
    let cr = next.clone();
    let st = blocking(move || evaluate(&solver, &cr).map_err(|e| ApiError::internal(e.to_string()))).await?;
    session.cr = next;
    session.log.extend(muts);
    session.last = st;
    Ok(Json(step_json(&session, &session.last)))
}
