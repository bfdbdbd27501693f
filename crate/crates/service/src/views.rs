//! Request and response bodies. Every response carries `api_version`.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use fmcq_core::diagnosis::{apply_diagnosis, Diagnosis};
use fmcq_core::model::{Assignment, AssignmentError, Configuration, FeatureModel};
use fmcq_core::semantics::AnalysisResult;

pub const API_VERSION: u32 = 1;

/// Requirements as `"f=1,g=0"` or as an object `{"f": 1, "g": false}`.
#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum CrInput {
    Text(String),
    Map(Map<String, Value>),
}

impl Default for CrInput {
    fn default() -> Self {
        CrInput::Text(String::new())
    }
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl CrInput {
    pub fn to_assignment(&self, fm: &FeatureModel) -> Result<Assignment, AssignmentError> {
        match self {
            CrInput::Text(t) => Assignment::parse(fm, t),
            CrInput::Map(m) => {
                let pairs: Vec<(&str, String)> = m.iter().map(|(k, v)| (k.as_str(), value_text(v))).collect();
                Assignment::from_named(fm, pairs.iter().map(|(k, v)| (*k, v.as_str())))
            }
        }
    }
}

/// `{feature_id: 0|1}` in canonical order.
pub fn assignment_json(fm: &FeatureModel, a: &Assignment) -> Value {
    Value::Object(a.iter().map(|(f, v)| (fm.id(f).to_string(), Value::from(u8::from(v)))).collect())
}

pub fn configuration_json(fm: &FeatureModel, c: &Configuration) -> Value {
    Value::Object(
        c.values()
            .iter()
            .enumerate()
            .map(|(f, &v)| (fm.id(f).to_string(), Value::from(u8::from(v))))
            .collect(),
    )
}

#[derive(Debug, Serialize)]
pub struct DiagnosisView {
    /// Requirements to drop or flip.
    pub delta: Value,
    /// Values that make the requirements consistent again.
    pub suggested: Value,
    /// Requirements after applying the suggestion.
    pub repaired: Value,
    pub witness: Value,
}

impl DiagnosisView {
    pub fn new(fm: &FeatureModel, cr: &Assignment, d: &Diagnosis) -> Self {
        DiagnosisView {
            delta: assignment_json(fm, &d.delta),
            suggested: assignment_json(fm, &d.suggested),
            repaired: assignment_json(fm, &apply_diagnosis(cr, d)),
            witness: configuration_json(fm, &d.witness),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct AnalysisView {
    pub api_version: u32,
    pub void: bool,
    pub dead: Vec<String>,
    pub false_optional: Vec<String>,
    pub configuration_count: Option<u64>,
}

impl AnalysisView {
    pub fn new(fm: &FeatureModel, a: &AnalysisResult) -> Self {
        let ids = |s: &std::collections::BTreeSet<usize>| s.iter().map(|&f| fm.id(f).to_string()).collect();
        AnalysisView {
            api_version: API_VERSION,
            void: a.void,
            dead: ids(&a.dead),
            false_optional: ids(&a.false_optional),
            configuration_count: a.configuration_count,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ModelSummary {
    pub features: usize,
    pub leaves: usize,
    pub groups: usize,
    pub hierarchical_constraints: usize,
    pub cross_tree_constraints: usize,
}

#[derive(Debug, Deserialize)]
pub struct CreateModel {
    pub source: String,
    pub format: Option<String>,
    pub name: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
pub struct SolveRequest {
    pub repr: Option<String>,
    #[serde(default)]
    pub cr: CrInput,
    pub limit: Option<usize>,
    #[serde(default)]
    pub count: bool,
}

#[derive(Debug, Default, Deserialize)]
pub struct CountRequest {
    pub repr: Option<String>,
    #[serde(default)]
    pub cr: CrInput,
    pub cap: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
pub struct DiagnoseRequest {
    #[serde(default)]
    pub cr: CrInput,
    pub max: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
pub struct CreateSession {
    pub model_id: String,
    pub repr: Option<String>,
}

/// `{"set": "t=1"}`, `{"set": {"t": 1}}` or `{"unset": "t"}`.
#[derive(Debug, Deserialize)]
pub struct StepRequest {
    pub set: Option<CrInput>,
    pub unset: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub build_ms: f64,
    pub query_ms: f64,
}
