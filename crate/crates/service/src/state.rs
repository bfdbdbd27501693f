use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock, RwLock};
use std::time::{Duration, Instant};

use fmcq_core::io::ModelFormat;
use fmcq_core::repr::ReprError;
use fmcq_core::semantics::{analyze, translate, AnalysisResult, ConstraintSet};
use fmcq_core::{Approach, Assignment, FeatureModel, Solver, SolverOptions};

use crate::session::{Mutation, StepState};

pub const DEFAULT_SESSION_TTL: Duration = Duration::from_secs(30 * 60);

/// A loaded model with lazily built, shared solvers.
pub struct ModelEntry {
    pub id: String,
    pub name: String,
    pub format: ModelFormat,
    pub model: Arc<FeatureModel>,
    pub cf: ConstraintSet,
    solvers: Mutex<HashMap<Approach, Arc<Solver>>>,
    analysis: OnceLock<AnalysisResult>,
}

impl ModelEntry {
    pub fn new(id: String, name: String, format: ModelFormat, model: FeatureModel) -> Self {
        let cf = translate(&model);
        ModelEntry {
            id,
            name,
            format,
            model: Arc::new(model),
            cf,
            solvers: Mutex::new(HashMap::new()),
            analysis: OnceLock::new(),
        }
    }

    pub fn solver(&self, approach: Approach) -> Result<Arc<Solver>, ReprError> {
        let mut solvers = self.solvers.lock().expect("solver cache poisoned");
        if let Some(s) = solvers.get(&approach) {
            return Ok(s.clone());
        }
        let s = Arc::new(Solver::build(self.model.clone(), approach, SolverOptions::default())?);
        solvers.insert(approach, s.clone());
        Ok(s)
    }

    pub fn analysis(&self) -> &AnalysisResult {
        self.analysis.get_or_init(|| analyze(&self.model, &self.cf))
    }
}

pub struct Session {
    pub id: String,
    pub model: Arc<ModelEntry>,
    pub solver: Arc<Solver>,
    pub cr: Assignment,
    pub log: Vec<Mutation>,
    pub last: StepState,
}

struct SessionSlot {
    last_used: Instant,
    session: Arc<tokio::sync::Mutex<Session>>,
}

/// In-memory registry of models and sessions. Sessions idle longer than
/// the TTL are dropped on the next access.
pub struct AppState {
    models: RwLock<HashMap<String, Arc<ModelEntry>>>,
    sessions: Mutex<HashMap<String, SessionSlot>>,
    session_ttl: Duration,
}

impl Default for AppState {
    fn default() -> Self {
        Self::with_ttl(DEFAULT_SESSION_TTL)
    }
}

impl AppState {
    pub fn with_ttl(session_ttl: Duration) -> Self {
        AppState {
            models: RwLock::new(HashMap::new()),
            sessions: Mutex::new(HashMap::new()),
            session_ttl,
        }
    }

    pub fn new_id() -> String {
        uuid::Uuid::new_v4().to_string()
    }

    pub fn insert_model(&self, entry: ModelEntry) -> Arc<ModelEntry> {
        let entry = Arc::new(entry);
        self.models
            .write()
            .expect("model registry poisoned")
            .insert(entry.id.clone(), entry.clone());
        entry
    }

    pub fn model(&self, id: &str) -> Option<Arc<ModelEntry>> {
        self.models.read().expect("model registry poisoned").get(id).cloned()
    }

    pub fn insert_session(&self, session: Session) -> Arc<tokio::sync::Mutex<Session>> {
        let id = session.id.clone();
        let session = Arc::new(tokio::sync::Mutex::new(session));
        let mut sessions = self.sessions.lock().expect("session registry poisoned");
        self.expire(&mut sessions);
        sessions.insert(
            id,
            SessionSlot {
                last_used: Instant::now(),
                session: session.clone(),
            },
        );
        session
    }

    pub fn session(&self, id: &str) -> Option<Arc<tokio::sync::Mutex<Session>>> {
        let mut sessions = self.sessions.lock().expect("session registry poisoned");
        self.expire(&mut sessions);
        let slot = sessions.get_mut(id)?;
        slot.last_used = Instant::now();
        Some(slot.session.clone())
    }

    pub fn session_count(&self) -> usize {
        let mut sessions = self.sessions.lock().expect("session registry poisoned");
        self.expire(&mut sessions);
        sessions.len()
    }

    pub fn sweep(&self) {
        let mut sessions = self.sessions.lock().expect("session registry poisoned");
        self.expire(&mut sessions);
    }

    fn expire(&self, sessions: &mut HashMap<String, SessionSlot>) {
        let ttl = self.session_ttl;
        sessions.retain(|_, s| s.last_used.elapsed() <= ttl);
    }
}
