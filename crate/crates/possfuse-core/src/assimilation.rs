//! Scalar Kalman-style assimilation against Gaussian-shaped upper bounds.
//!
//! An observation `z` reported with limited resolution is encoded as the
//! upper bound `ℓ_z(x) = exp(−(Hx − z)² / (2σ²))` rather than as a density.
//! Fusing a Gaussian prior `N(m, P)` with `δ_{ℓ_z}` keeps the usual Kalman
//! posterior, and the normaliser
//!
//! ```text
//! ∫ ℓ_z dp = (σ/ς)·exp(−(Hm − z)² / (2ς²)),   ς² = H²P + σ²
//! ```
//!
//! is a dimensionless weight in `(0, 1]`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::constraint::{Constraint, DiscreteProbability};
use crate::funcspace::{BoundFn, GaussShape, StateSpace};
use crate::fusion::fuse_with;
use crate::{Error, Result, Tolerance};

/// Grid size used by the quadrature oracle.
pub const QUADRATURE_POINTS: usize = 2001;

/// Half-width of the quadrature grid in prior standard deviations.
pub const QUADRATURE_SPAN: f64 = 10.0;

/// Gaussian prior `N(mean, variance)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussPrior {
    pub mean: f64,
    pub variance: f64,
}

impl GaussPrior {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !(variance.is_finite() && variance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "prior needs a finite mean and a positive variance, got N({mean}, {variance})"
            )));
        }
        Ok(Self { mean, variance })
    }

    pub fn std(&self) -> f64 {
        libm::sqrt(self.variance)
    }

    pub fn density(&self, x: f64) -> f64 {
        let d = x - self.mean;
        libm::exp(-0.5 * d * d / self.variance) / libm::sqrt(2.0 * core::f64::consts::PI * self.variance)
    }

    /// Linear-Gaussian prediction `x' = a·x + w`, `w ~ N(0, q)`.
    pub fn predict(&self, transition: f64, process_noise: f64) -> Self {
        Self {
            mean: transition * self.mean,
            variance: transition * transition * self.variance + process_noise,
        }
    }

    /// Grid of `points` points spanning `mean ± span·std`.
    pub fn grid_space(&self, span: f64, points: usize) -> Result<Arc<StateSpace>> {
        let half = span * self.std();
        StateSpace::grid(self.mean - half, self.mean + half, points)
    }

    /// Density tabulated on a grid space and normalised to a distribution.
    pub fn tabulate(&self, space: &Arc<StateSpace>) -> Result<DiscreteProbability> {
        let grid = space.grid_embedding().ok_or(Error::NotEmbedded)?;
        DiscreteProbability::from_unnormalized(space, (0..grid.n).map(|i| self.density(grid.point(i))).collect())
    }
}

/// `x ↦ exp(−(H·x − obs)² / (2·std²))`, peak value one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussBound {
    pub obs: f64,
    pub obs_coeff: f64,
    pub std: f64,
}

impl GaussBound {
    pub fn new(obs: f64, obs_coeff: f64, std: f64) -> Result<Self> {
        if !(obs.is_finite() && obs_coeff.is_finite()) || !(std.is_finite() && std > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "bound needs finite obs/coefficient and std > 0, got z={obs} H={obs_coeff} σ={std}"
            )));
        }
        Ok(Self { obs, obs_coeff, std })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let r = (self.obs_coeff * x - self.obs) / self.std;
        libm::exp(-0.5 * r * r)
    }

    pub fn shape(&self) -> GaussShape {
        GaussShape {
            center: self.obs,
            width: self.std,
            scale: 1.0,
            obs_coeff: self.obs_coeff,
        }
    }

    pub fn to_bound_fn(&self, space: &Arc<StateSpace>) -> Result<BoundFn> {
        BoundFn::gauss(space, self.shape())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssimilationResult {
    pub posterior: GaussPrior,
    /// `∫ ℓ_z dp`, in `(0, 1]`.
    pub weight: f64,
}

/// Innovation variance `ς² = H²·P + σ²`.
pub fn innovation_variance(prior: &GaussPrior, bound: &GaussBound) -> f64 {
    bound.obs_coeff * bound.obs_coeff * prior.variance + bound.std * bound.std
}

/// Closed-form update of a Gaussian prior against a Gaussian-shaped bound.
pub fn assimilate(prior: &GaussPrior, bound: &GaussBound) -> AssimilationResult {
    let s2 = innovation_variance(prior, bound);
    let residual = bound.obs - bound.obs_coeff * prior.mean;
    let weight = bound.std / libm::sqrt(s2) * libm::exp(-0.5 * residual * residual / s2);
    let gain = prior.variance * bound.obs_coeff / s2;
    AssimilationResult {
        posterior: GaussPrior {
            mean: prior.mean + gain * residual,
            // (1 − K·H)·P, written without the cancellation
            variance: prior.variance * bound.std * bound.std / s2,
        },
        weight,
    }
}

/// Usual Bayes denominator `N(z; Hm, ς²)` when `ℓ_z` is read as a density.
pub fn gaussian_likelihood(prior: &GaussPrior, bound: &GaussBound) -> f64 {
    let s2 = innovation_variance(prior, bound);
    let residual = bound.obs - bound.obs_coeff * prior.mean;
    libm::exp(-0.5 * residual * residual / s2) / libm::sqrt(2.0 * core::f64::consts::PI * s2)
}

/// Exact discrete Bayes update: `fuse(from_probability(p), δ_f)`.
/// Returns the posterior and the weight `Σₓ f(x)·p(x)`.
pub fn assimilate_on_grid(prior: &DiscreteProbability, bound: &BoundFn) -> Result<(DiscreteProbability, f64)> {
    let observation = Constraint::new(prior.space(), alloc::vec![(1.0, bound.clone())])?;
    // no dagger threshold: tail points keep their singleton indicator
    let exact = Tolerance::with_abs(0.0);
    let (fused, diag) = fuse_with(&Constraint::from_probability(prior), &observation, &exact)?;
    let posterior = DiscreteProbability::from_singleton_constraint(&fused, crate::DEFAULT_TOLERANCE)
        .expect("fusing a singleton-supported constraint keeps singleton support");
    Ok((posterior, diag.normalizer))
}

/// Trapezoidal quadrature of `∫ ℓ_z(x)·N(x; m, P) dx` on `points` points over
/// `mean ± QUADRATURE_SPAN·std`.
pub fn quadrature_weight(prior: &GaussPrior, bound: &GaussBound, points: usize) -> f64 {
    let half = QUADRATURE_SPAN * prior.std();
    let (lo, hi) = (prior.mean - half, prior.mean + half);
    let h = (hi - lo) / (points - 1) as f64;
    let mut total = 0.0;
    for i in 0..points {
        let x = lo + i as f64 * h;
        let w = if i == 0 || i + 1 == points { 0.5 } else { 1.0 };
        total += w * bound.eval(x) * prior.density(x);
    }
    total * h
}

/// How the sensor reports an observation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SensorMode {
    /// The raw value `z` is used with the sensor standard deviation.
    Point,
    /// The raw value is only known to lie in a cell of width `cell_width`;
    /// the bound is centred on the cell with width `bound_std`, defaulting
    /// to `cell_width / √12`.
    FiniteResolution { cell_width: f64, bound_std: Option<f64> },
}

/// Where the observation sequence comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum Observations {
    /// Raw sensor readings, one per step.
    Given(Vec<f64>),
    /// Readings simulated from the model with a seeded generator.
    Simulated { seed: u64 },
}

/// Linear-Gaussian hidden Markov model observed through a scalar sensor.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub steps: usize,
    pub transition: f64,
    pub process_noise: f64,
    pub obs_coeff: f64,
    pub sensor_std: f64,
    pub mode: SensorMode,
    pub initial: GaussPrior,
    pub observations: Observations,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.steps == 0 {
            return bad("steps must be at least 1");
        }
        if !self.transition.is_finite() || !self.obs_coeff.is_finite() {
            return bad("transition and observation coefficients must be finite");
        }
        if !(self.process_noise.is_finite() && self.process_noise >= 0.0) {
            return bad("process noise must be >= 0");
        }
        GaussPrior::new(self.initial.mean, self.initial.variance)?;
        match self.mode {
            SensorMode::Point => {
                if !(self.sensor_std.is_finite() && self.sensor_std > 0.0) {
                    return bad("sensor std must be > 0");
                }
            }
            SensorMode::FiniteResolution { cell_width, bound_std } => {
                if !(cell_width.is_finite() && cell_width > 0.0) {
                    return bad("cell width must be > 0");
                }
                if bound_std.is_some_and(|s| !(s.is_finite() && s > 0.0)) {
                    return bad("bound std must be > 0");
                }
                if !(self.sensor_std.is_finite() && self.sensor_std >= 0.0) {
                    return bad("sensor std must be >= 0");
                }
            }
        }
        if let Observations::Given(obs) = &self.observations {
            if obs.len() != self.steps {
                return Err(Error::InvalidConfig(format!(
                    "{} observations for {} steps",
                    obs.len(),
                    self.steps
                )));
            }
            if obs.iter().any(|z| !z.is_finite()) {
                return bad("observations must be finite");
            }
        }
        Ok(())
    }

    /// Bound used for a raw reading, with the cell it was quantised to.
    pub fn bound_for(&self, raw: f64) -> Result<(GaussBound, Option<(f64, f64)>)> {
        match self.mode {
            SensorMode::Point => Ok((GaussBound::new(raw, self.obs_coeff, self.sensor_std)?, None)),
            SensorMode::FiniteResolution { cell_width, bound_std } => {
                let k = libm::floor(raw / cell_width);
                let (lo, hi) = (k * cell_width, (k + 1.0) * cell_width);
                let std = bound_std.unwrap_or(cell_width / libm::sqrt(12.0));
                Ok((GaussBound::new(0.5 * (lo + hi), self.obs_coeff, std)?, Some((lo, hi))))
            }
        }
    }
}

/// One predict-then-assimilate step of a scenario.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// Predicted prior the observation was assimilated into.
    pub prior: GaussPrior,
    /// Raw sensor reading.
    pub raw: f64,
    pub bound: GaussBound,
    pub cell: Option<(f64, f64)>,
    pub result: AssimilationResult,
}

struct Normal(ChaCha8Rng);

impl Normal {
    fn uniform(&mut self) -> f64 {
        // 53 random bits in (0, 1]
        ((self.0.next_u64() >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
    }

    /// Box–Muller, one variate per call.
    fn sample(&mut self, mean: f64, variance: f64) -> f64 {
        let (u, v) = (self.uniform(), self.uniform());
        let z = libm::sqrt(-2.0 * libm::log(u)) * libm::cos(2.0 * core::f64::consts::PI * v);
        mean + libm::sqrt(variance) * z
    }
}

fn simulate(cfg: &ScenarioConfig, seed: u64) -> Vec<f64> {
    let mut rng = Normal(ChaCha8Rng::seed_from_u64(seed));
    let mut state = rng.sample(cfg.initial.mean, cfg.initial.variance);
    (0..cfg.steps)
        .map(|_| {
            state = rng.sample(cfg.transition * state, cfg.process_noise);
            rng.sample(cfg.obs_coeff * state, cfg.sensor_std * cfg.sensor_std)
        })
        .collect()
}

/// Runs the filter: each step predicts from the previous posterior, then
/// assimilates that step's reading. Deterministic for a fixed seed.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<StepRecord>> {
    cfg.validate()?;
    let readings = match &cfg.observations {
        Observations::Given(obs) => obs.clone(),
        Observations::Simulated { seed } => simulate(cfg, *seed),
    };
    let mut belief = cfg.initial;
    readings
        .into_iter()
        .enumerate()
        .map(|(step, raw)| {
            let prior = belief.predict(cfg.transition, cfg.process_noise);
            let (bound, cell) = cfg.bound_for(raw)?;
            let result = assimilate(&prior, &bound);
            belief = result.posterior;
            Ok(StepRecord {
                step,
                prior,
                raw,
                bound,
                cell,
                result,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::SubsetMask;

    #[test]
    fn standard_case() {
        let prior = GaussPrior::new(0.0, 1.0).unwrap();
        let bound = GaussBound::new(0.0, 1.0, 1.0).unwrap();
        let r = assimilate(&prior, &bound);
        assert!((r.weight - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(r.posterior.mean, 0.0);
        assert!((r.posterior.variance - 0.5).abs() < 1e-15);
    }

    #[test]
    fn wide_bound_is_uninformative() {
        let prior = GaussPrior::new(1.5, 2.0).unwrap();
        let r = assimilate(&prior, &GaussBound::new(0.0, 1.0, 1e6).unwrap());
        assert!((r.weight - 1.0).abs() < 1e-6);
        assert!((r.posterior.mean - 1.5).abs() < 1e-6);
        assert!((r.posterior.variance - 2.0).abs() < 1e-6);
    }

    #[test]
    fn likelihood_relation() {
        let prior = GaussPrior::new(0.3, 1.7).unwrap();
        let bound = GaussBound::new(-0.4, 1.2, 0.8).unwrap();
        let w = assimilate(&prior, &bound).weight;
        let classical = gaussian_likelihood(&prior, &bound);
        let scaled = classical * libm::sqrt(2.0 * core::f64::consts::PI) * bound.std;
        assert!((w - scaled).abs() < 1e-15);
    }

    #[test]
    fn grid_update_with_indicator() {
        let s = StateSpace::indexed(4).unwrap();
        let p = DiscreteProbability::uniform(&s);
        let a = SubsetMask::from_indices(&s, [1, 3]).unwrap();
        let (post, w) = assimilate_on_grid(&p, &BoundFn::indicator(&a)).unwrap();
        assert_eq!(w, 0.5);
        assert_eq!(post.weights(), &[0.0, 0.5, 0.0, 0.5]);
        let (same, one) = assimilate_on_grid(&p, &BoundFn::one(&s)).unwrap();
        assert_eq!(one, 1.0);
        assert_eq!(same, p);
        assert!(matches!(
            assimilate_on_grid(&p, &BoundFn::zero(&s)),
            Err(Error::IncompatibleConstraints { .. })
        ));
    }

    #[test]
    fn grid_update_matches_closed_form() {
        let prior = GaussPrior::new(0.5, 1.3).unwrap();
        let bound = GaussBound::new(1.1, 0.9, 0.7).unwrap();
        let space = prior.grid_space(QUADRATURE_SPAN, QUADRATURE_POINTS).unwrap();
        let p = prior.tabulate(&space).unwrap();
        let (post, w) = assimilate_on_grid(&p, &bound.to_bound_fn(&space).unwrap()).unwrap();
        let closed = assimilate(&prior, &bound);
        assert!((w - closed.weight).abs() < 1e-3);
        let grid = space.grid_embedding().unwrap();
        let mean: f64 = post.weights().iter().enumerate().map(|(i, q)| q * grid.point(i)).sum();
        assert!((mean - closed.posterior.mean).abs() < 1e-3);
    }

    #[test]
    fn finite_resolution_cells() {
        let cfg = ScenarioConfig {
            steps: 1,
            transition: 1.0,
            process_noise: 0.0,
            obs_coeff: 1.0,
            sensor_std: 0.0,
            mode: SensorMode::FiniteResolution {
                cell_width: 0.5,
                bound_std: None,
            },
            initial: GaussPrior::new(0.0, 1.0).unwrap(),
            observations: Observations::Given(alloc::vec![-0.1]),
        };
        let (bound, cell) = cfg.bound_for(-0.1).unwrap();
        assert_eq!(cell, Some((-0.5, 0.0)));
        assert_eq!(bound.obs, -0.25);
        assert!((bound.std - 0.5 / libm::sqrt(12.0)).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ScenarioConfig {
            steps: 2,
            transition: 1.0,
            process_noise: 0.1,
            obs_coeff: 1.0,
            sensor_std: 1.0,
            mode: SensorMode::Point,
            initial: GaussPrior::new(0.0, 1.0).unwrap(),
            observations: Observations::Given(alloc::vec![0.0]),
        };
        assert!(run_scenario(&cfg).is_err());
        cfg.observations = Observations::Simulated { seed: 1 };
        assert!(run_scenario(&cfg).is_ok());
        cfg.process_noise = -1.0;
        assert!(matches!(run_scenario(&cfg), Err(Error::InvalidConfig(_))));
    }
}
