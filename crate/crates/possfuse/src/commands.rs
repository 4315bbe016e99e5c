//! One function per subcommand. Each reads its input files and returns the
//! report; nothing here writes to disk. Fusion results are canonical;
//! transported constraints are reported as they come out of the transport.

use std::collections::BTreeMap;
use std::path::Path;
use std::result::Result;
use std::sync::Arc;

use possfuse_core::assimilation::QUADRATURE_POINTS;
use possfuse_core::funcspace::same_space;
use possfuse_core::fusion::dempster_combine_with;
use possfuse_core::prelude::*;

use crate::doc::{load, ConstraintDoc, KernelDoc, MapDoc, MassDoc, ProbabilityDoc, ScenarioDoc};
use crate::error::CliError;
use crate::report::{steps_csv, CheckDoc, DempsterDoc, DiagnosticsDoc, RunReport, StepDoc};

#[derive(Clone, Copy, Debug, Default)]
pub struct Settings {
    pub tolerance: Tolerance,
    pub seed: Option<u64>,
}

/// What a command produced. `failure` is set when the command ran but a
/// check it performs did not pass.
#[derive(Clone, Debug)]
pub struct Output {
    pub report: RunReport,
    pub csv: Option<String>,
    pub failure: Option<String>,
}

impl From<RunReport> for Output {
    fn from(report: RunReport) -> Self {
        Self {
            report,
            csv: None,
            failure: None,
        }
    }
}

fn ensure_same(a: &Arc<StateSpace>, b: &Arc<StateSpace>) -> Result<(), CliError> {
    if same_space(a, b) {
        Ok(())
    } else {
        Err(Error::SpaceMismatch.into())
    }
}

pub fn fuse(
    left: &Path,
    right: &Path,
    kernel: Option<&Path>,
    verify_kernel: bool,
    s: &Settings,
) -> Result<Output, CliError> {
    let (a, a_bytes): (ConstraintDoc, _) = load(left)?;
    let (b, b_bytes): (ConstraintDoc, _) = load(right)?;
    let p = a.build()?;
    let q = b.build()?;
    ensure_same(p.space(), q.space())?;
    let q = b.build_on(p.space())?;
    let (fused, diag, report) = match kernel {
        None => {
            let (fused, diag) = fuse_with(&p, &q, &s.tolerance)?;
            (
                fused,
                diag,
                RunReport::new("fuse", &[&a_bytes, &b_bytes], s.tolerance.abs),
            )
        }
        Some(path) => {
            let (k, k_bytes): (KernelDoc, _) = load(path)?;
            let kernel = k.build(p.space())?;
            let check = if verify_kernel {
                KernelCheck::Verify
            } else {
                KernelCheck::Waive
            };
            let (fused, diag) = general_fuse(&p, &q, &kernel, check, &s.tolerance)?;
            let report = RunReport::new("general_fuse", &[&a_bytes, &b_bytes, &k_bytes], s.tolerance.abs);
            (fused, diag, report)
        }
    };
    let mut report = report.with_result(&fused);
    report.diagnostics = Some(DiagnosticsDoc::from(diag));
    Ok(report.into())
}

/// Space of a map side: the one given in the map file, which must then match
/// `fixed`, or `fixed` itself.
fn map_side(
    given: Option<Result<Arc<StateSpace>, Error>>,
    fixed: &Arc<StateSpace>,
) -> Result<Arc<StateSpace>, CliError> {
    match given {
        Some(space) => {
            let space = space.map_err(CliError::Map)?;
            ensure_same(&space, fixed)?;
            Ok(fixed.clone())
        }
        None => Ok(fixed.clone()),
    }
}

pub fn push(constraint: &Path, map: &Path, s: &Settings) -> Result<Output, CliError> {
    let (c, c_bytes): (ConstraintDoc, _) = load(constraint)?;
    let (m, m_bytes): (MapDoc, _) = load(map)?;
    let c = c.build()?;
    let domain = map_side(m.domain.as_ref().map(|d| d.build()), c.space())?;
    let codomain = m.codomain_space().map_err(CliError::Map)?;
    let xi = m.build(&domain, &codomain).map_err(CliError::Map)?;
    let pushed = pushforward(&c, &xi)?;
    Ok(RunReport::new("push", &[&c_bytes, &m_bytes], s.tolerance.abs)
        .with_result(&pushed)
        .into())
}

pub fn pull(constraint: &Path, map: &Path, s: &Settings) -> Result<Output, CliError> {
    let (c, c_bytes): (ConstraintDoc, _) = load(constraint)?;
    let (m, m_bytes): (MapDoc, _) = load(map)?;
    let c = c.build()?;
    let codomain = map_side(m.codomain.as_ref().map(|d| d.build()), c.space())?;
    let domain = m.domain_space().map_err(CliError::Map)?;
    let xi = m.build(&domain, &codomain).map_err(CliError::Map)?;
    let pulled = pullback(&c, &xi)?;
    Ok(RunReport::new("pull", &[&c_bytes, &m_bytes], s.tolerance.abs)
        .with_result(&pulled)
        .into())
}

pub fn marginalize(constraint: &Path, keep: Factor, s: &Settings) -> Result<Output, CliError> {
    let (c, c_bytes): (ConstraintDoc, _) = load(constraint)?;
    let c = c.build()?;
    let marginal = possfuse_core::transport::marginalize(&c, keep)?;
    let op = match keep {
        Factor::Left => "marginalize_left",
        Factor::Right => "marginalize_right",
    };
    Ok(RunReport::new(op, &[&c_bytes], s.tolerance.abs)
        .with_result(&marginal)
        .into())
}

/// Weight per indicator set, or `None` if some function is not an indicator.
fn indicator_weights(c: &Constraint) -> Option<BTreeMap<Vec<bool>, f64>> {
    let mut out = BTreeMap::new();
    for comp in c.components() {
        let values = comp.function.values();
        if values.iter().any(|&v| v != 0.0 && v != 1.0) {
            return None;
        }
        *out.entry(values.iter().map(|&v| v == 1.0).collect()).or_insert(0.0) += comp.weight;
    }
    Some(out)
}

pub fn dempster(left: &Path, right: &Path, s: &Settings) -> Result<Output, CliError> {
    let (a, a_bytes): (MassDoc, _) = load(left)?;
    let (b, b_bytes): (MassDoc, _) = load(right)?;
    let m1 = a.build()?;
    let frame = m1.space().clone();
    ensure_same(&frame, b.build()?.space())?;
    let m2 = b.build_on(&frame)?;

    let (combined, conflict) = dempster_combine_with(&m1, &m2, s.tolerance.abs)?;
    let (fused, diag) = fuse_with(
        &Constraint::from_mass_function(&m1),
        &Constraint::from_mass_function(&m2),
        &s.tolerance,
    )?;

    let max_abs_diff = match indicator_weights(&fused) {
        Some(fw) => {
            let mut dw: BTreeMap<Vec<bool>, f64> = BTreeMap::new();
            for (set, mass) in combined.focal() {
                dw.insert(set.members().to_vec(), *mass);
            }
            fw.keys()
                .chain(dw.keys())
                .map(|k| (fw.get(k).copied().unwrap_or(0.0) - dw.get(k).copied().unwrap_or(0.0)).abs())
                .fold(0.0, f64::max)
        }
        None => f64::INFINITY,
    };
    let equal = max_abs_diff <= s.tolerance.abs && (diag.normalizer - (1.0 - conflict)).abs() <= s.tolerance.abs;

    let mut report = RunReport::new("dempster", &[&a_bytes, &b_bytes], s.tolerance.abs).with_result(&fused);
    report.diagnostics = Some(DiagnosticsDoc::from(diag));
    report.dempster = Some(DempsterDoc {
        combined: MassDoc::describe(&combined),
        conflict,
        normalizer: 1.0 - conflict,
        max_abs_diff,
        verdict: if equal { "equal" } else { "different" }.into(),
    });
    Ok(report.into())
}

pub fn filter(scenario: &Path, oracle: bool, s: &Settings) -> Result<Output, CliError> {
    let (doc, bytes): (ScenarioDoc, _) = load(scenario)?;
    let cfg = doc.build(s.seed)?;
    let records = run_scenario(&cfg)?;
    let steps: Vec<StepDoc> = records
        .iter()
        .map(|r| {
            let oracle_weight = oracle.then(|| quadrature_weight(&r.prior, &r.bound, QUADRATURE_POINTS));
            StepDoc {
                step: r.step,
                prior_mean: r.prior.mean,
                prior_var: r.prior.variance,
                raw: r.raw,
                obs: r.bound.obs,
                obs_std: r.bound.std,
                cell: r.cell.map(|(lo, hi)| [lo, hi]),
                post_mean: r.result.posterior.mean,
                post_var: r.result.posterior.variance,
                weight: r.result.weight,
                oracle_weight,
                abs_err: oracle_weight.map(|w| (w - r.result.weight).abs()),
            }
        })
        .collect();
    // the seed changes the readings, so it is part of the input
    let seed = match cfg.observations {
        Observations::Simulated { seed } => seed.to_le_bytes().to_vec(),
        Observations::Given(_) => Vec::new(),
    };
    let mut report = RunReport::new("filter", &[&bytes, &seed], s.tolerance.abs);
    let csv = steps_csv(&steps);
    report.steps = Some(steps);
    Ok(Output {
        report,
        csv: Some(csv),
        failure: None,
    })
}

pub fn check(constraint: &Path, probability: Option<&Path>, s: &Settings) -> Result<Output, CliError> {
    let (doc, bytes): (ConstraintDoc, _) = load(constraint)?;
    let c = doc.build()?;
    let axioms = c.check_axioms(s.tolerance.abs)?;
    let mut inputs = vec![bytes];
    let dominates = match probability {
        Some(path) => {
            let (p, p_bytes): (ProbabilityDoc, _) = load(path)?;
            inputs.push(p_bytes);
            let p = DiscreteProbability::new(c.space(), p.weights)?;
            Some(c.dominates_with(&p, s.tolerance.abs)?)
        }
        None => None,
    };
    let mut failures = Vec::new();
    if !axioms.holds() {
        failures.push("outer-measure axioms violated");
    }
    if dominates == Some(false) {
        failures.push("probability is not dominated");
    }
    let refs: Vec<&[u8]> = inputs.iter().map(Vec::as_slice).collect();
    let mut report = RunReport::new("check", &refs, s.tolerance.abs);
    report.check = Some(CheckDoc {
        size: c.space().len(),
        norm: c.norm(),
        canonical: c.is_canonical(s.tolerance.abs),
        axioms: axioms.into(),
        dominates,
    });
    Ok(Output {
        report,
        csv: None,
        failure: (!failures.is_empty()).then(|| failures.join("; ")),
    })
}
