use std::fmt::Write as _;

use possfuse_core::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::doc::{ConstraintDoc, MassDoc};

/// Machine-readable outcome of one command.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub operation: String,
    /// SHA-256 over the length-prefixed bytes of every input file, in order.
    pub inputs_digest: String,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<ConstraintDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dempster: Option<DempsterDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<StepDoc>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckDoc>,
}

impl RunReport {
    pub fn new(operation: &str, inputs: &[&[u8]], tolerance: f64) -> Self {
        Self {
            operation: operation.into(),
            inputs_digest: digest(inputs),
            tolerance,
            result: None,
            diagnostics: None,
            dempster: None,
            steps: None,
            check: None,
        }
    }

    /// Records `c` in canonical order.
    pub fn with_result(mut self, c: &Constraint) -> Self {
        self.result = Some(ConstraintDoc::describe(&c.sorted()));
        self
    }

    /// Pretty JSON with a trailing newline.
    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

pub fn digest(inputs: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for bytes in inputs {
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex::encode(h.finalize())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DiagnosticsDoc {
    pub normalizer: f64,
    pub conflict: f64,
    pub components_before_prune: usize,
    pub components: usize,
}

impl From<FusionDiagnostics> for DiagnosticsDoc {
    fn from(d: FusionDiagnostics) -> Self {
        Self {
            normalizer: d.normalizer,
            conflict: d.conflict,
            components_before_prune: d.component_count_before_prune,
            components: d.component_count,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DempsterDoc {
    pub combined: MassDoc,
    pub conflict: f64,
    pub normalizer: f64,
    /// Largest difference between a focal mass and the fused weight on the
    /// same indicator.
    pub max_abs_diff: f64,
    pub verdict: String,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct StepDoc {
    pub step: usize,
    pub prior_mean: f64,
    pub prior_var: f64,
    pub raw: f64,
    pub obs: f64,
    pub obs_std: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell: Option<[f64; 2]>,
    pub post_mean: f64,
    pub post_var: f64,
    pub weight: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_err: Option<f64>,
}

pub const CSV_HEADER: &str = "step,prior_mean,prior_var,obs,post_mean,post_var,weight,oracle_weight,abs_err";

/// One row per step; the oracle columns stay empty when the oracle is off.
pub fn steps_csv(steps: &[StepDoc]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for s in steps {
        let _ = writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{:?},{:?},{},{}",
            s.step,
            s.prior_mean,
            s.prior_var,
            s.obs,
            s.post_mean,
            s.post_var,
            s.weight,
            opt(s.oracle_weight),
            opt(s.abs_err)
        );
    }
    out
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AxiomsDoc {
    pub empty_value: f64,
    pub monotonicity_pairs: u64,
    pub monotonicity_violations: u64,
    pub subadditivity_pairs: u64,
    pub subadditivity_violations: u64,
    pub holds: bool,
}

impl From<AxiomReport> for AxiomsDoc {
    fn from(r: AxiomReport) -> Self {
        Self {
            empty_value: r.empty_value,
            monotonicity_pairs: r.monotonicity_pairs,
            monotonicity_violations: r.monotonicity_violations,
            subadditivity_pairs: r.subadditivity_pairs,
            subadditivity_violations: r.subadditivity_violations,
            holds: r.holds(),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CheckDoc {
    pub size: usize,
    pub norm: f64,
    pub canonical: bool,
    pub axioms: AxiomsDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dominates: Option<bool>,
}
