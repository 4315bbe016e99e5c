//! JSON documents read and written by the command-line tool.
//!
//! A constraint document looks like
//!
//! ```json
//! {
//!   "space": {"labels": ["a", "b", "c"]},
//!   "components": [
//!     {"weight": 0.5, "fn": {"indicator": ["a", "b"]}},
//!     {"weight": 0.5, "fn": {"dense": [1.0, 0.25, 0.0]}}
//!   ]
//! }
//! ```
//!
//! Spaces are `{"labels": [...]}`, `{"grid": {"lo", "hi", "n"}}` or
//! `{"product": [left, right]}`. Functions are `{"dense": [...]}`,
//! `{"indicator": [labels]}`, `{"gauss": {"m", "sigma", "c", "H"}}` or `"one"`.

use std::path::Path;
use std::result::Result;
use std::sync::Arc;

use possfuse_core::assimilation::{GaussPrior, Observations, ScenarioConfig, SensorMode};
use possfuse_core::funcspace::Repr;
use possfuse_core::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceDoc {
    Labels(Vec<String>),
    Grid { lo: f64, hi: f64, n: usize },
    Product(Box<SpaceDoc>, Box<SpaceDoc>),
}

impl SpaceDoc {
    pub fn build(&self) -> Result<Arc<StateSpace>, Error> {
        match self {
            SpaceDoc::Labels(labels) => StateSpace::from_labels(labels.iter().map(String::as_str)),
            SpaceDoc::Grid { lo, hi, n } => StateSpace::grid(*lo, *hi, *n),
            SpaceDoc::Product(l, r) => Ok(StateSpace::product(&l.build()?, &r.build()?)),
        }
    }

    pub fn describe(space: &StateSpace) -> Self {
        if let Some(g) = space.grid_embedding() {
            return SpaceDoc::Grid {
                lo: g.lo,
                hi: g.hi,
                n: g.n,
            };
        }
        if let Some((l, r)) = space.factors() {
            return SpaceDoc::Product(Box::new(Self::describe(l)), Box::new(Self::describe(r)));
        }
        SpaceDoc::Labels(space.labels().to_vec())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussDoc {
    pub m: f64,
    pub sigma: f64,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(rename = "H", alias = "h", default = "one")]
    pub h: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FnDoc {
    One,
    Dense(Vec<f64>),
    Indicator(Vec<String>),
    Gauss(GaussDoc),
}

impl FnDoc {
    pub fn build(&self, space: &Arc<StateSpace>) -> Result<BoundFn, Error> {
        match self {
            FnDoc::One => Ok(BoundFn::one(space)),
            FnDoc::Dense(values) => BoundFn::dense(space, values.clone()),
            FnDoc::Indicator(labels) => Ok(BoundFn::indicator(&SubsetMask::from_labels(
                space,
                labels.iter().map(String::as_str),
            )?)),
            FnDoc::Gauss(g) => BoundFn::gauss(space, GaussShape::new(g.m, g.sigma, g.c, g.h)?),
        }
    }

    /// Closed-form shapes stay closed-form; 0/1 tables become indicators.
    pub fn describe(f: &BoundFn) -> Self {
        match f.repr() {
            Repr::Gauss(g) => FnDoc::Gauss(GaussDoc {
                m: g.center,
                sigma: g.width,
                c: g.scale,
                h: g.obs_coeff,
            }),
            Repr::Dense(values) => {
                if values.iter().all(|&v| v == 1.0) {
                    FnDoc::One
                } else if values.iter().all(|&v| v == 0.0 || v == 1.0) {
                    let labels = f.space().labels();
                    FnDoc::Indicator(
                        values
                            .iter()
                            .zip(labels)
                            .filter(|(&v, _)| v == 1.0)
                            .map(|(_, l)| l.clone())
                            .collect(),
                    )
                } else {
                    FnDoc::Dense(values.clone())
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentDoc {
    pub weight: f64,
    #[serde(rename = "fn")]
    pub function: FnDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDoc {
    pub space: SpaceDoc,
    pub components: Vec<ComponentDoc>,
}

impl ConstraintDoc {
    pub fn build(&self) -> Result<Constraint, Error> {
        let space = self.space.build()?;
        self.build_on(&space)
    }

    /// Builds on an already constructed space, which must match the document's.
    pub fn build_on(&self, space: &Arc<StateSpace>) -> Result<Constraint, Error> {
        let components = self
            .components
            .iter()
            .map(|c| Ok((c.weight, c.function.build(space)?)))
            .collect::<Result<Vec<_>, Error>>()?;
        Constraint::new(space, components)
    }

    pub fn describe(c: &Constraint) -> Self {
        Self {
            space: SpaceDoc::describe(c.space()),
            components: c
                .components()
                .iter()
                .map(|c| ComponentDoc {
                    weight: c.weight,
                    function: FnDoc::describe(&c.function),
                })
                .collect(),
        }
    }
}

/// A total map given as `[x, y]` label pairs. Either space may be spelled
/// out; otherwise it is the labels in order of first appearance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDoc {
    pub pairs: Vec<(String, String)>,
    #[serde(default)]
    pub domain: Option<SpaceDoc>,
    #[serde(default)]
    pub codomain: Option<SpaceDoc>,
}

fn first_seen<'a>(labels: impl Iterator<Item = &'a String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for l in labels {
        if !out.contains(l) {
            out.push(l.clone());
        }
    }
    out
}

impl MapDoc {
    pub fn domain_space(&self) -> Result<Arc<StateSpace>, Error> {
        match &self.domain {
            Some(d) => d.build(),
            None => StateSpace::from_labels(first_seen(self.pairs.iter().map(|p| &p.0))),
        }
    }

    pub fn codomain_space(&self) -> Result<Arc<StateSpace>, Error> {
        match &self.codomain {
            Some(d) => d.build(),
            None => StateSpace::from_labels(first_seen(self.pairs.iter().map(|p| &p.1))),
        }
    }

    pub fn build(&self, domain: &Arc<StateSpace>, codomain: &Arc<StateSpace>) -> Result<PointMap, Error> {
        PointMap::from_pairs(
            domain,
            codomain,
            self.pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FocalDoc {
    pub set: Vec<String>,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassDoc {
    pub frame: Vec<String>,
    pub focal: Vec<FocalDoc>,
}

impl MassDoc {
    pub fn build(&self) -> Result<MassFunction, Error> {
        let space = StateSpace::from_labels(self.frame.iter().map(String::as_str))?;
        self.build_on(&space)
    }

    pub fn build_on(&self, space: &Arc<StateSpace>) -> Result<MassFunction, Error> {
        let focal = self
            .focal
            .iter()
            .map(|f| {
                Ok((
                    SubsetMask::from_labels(space, f.set.iter().map(String::as_str))?,
                    f.mass,
                ))
            })
            .collect::<Result<Vec<_>, Error>>()?;
        MassFunction::new(space, focal)
    }

    /// Focal sets by descending mass, ties broken by their label lists.
    pub fn describe(m: &MassFunction) -> Self {
        let mut focal: Vec<FocalDoc> = m
            .focal()
            .iter()
            .map(|(set, mass)| FocalDoc {
                set: set.labels().into_iter().map(String::from).collect(),
                mass: *mass,
            })
            .collect();
        focal.sort_by(|a, b| b.mass.total_cmp(&a.mass).then_with(|| a.set.cmp(&b.set)));
        Self {
            frame: m.space().labels().to_vec(),
            focal,
        }
    }
}

/// `ell` and `theta` are `|Y| × |Y|` tables indexed by label order; a `null`
/// in `theta` leaves the pair outside the kernel's domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelDoc {
    pub ell: Vec<Vec<f64>>,
    pub theta: Vec<Vec<Option<String>>>,
}

impl KernelDoc {
    pub fn build(&self, space: &Arc<StateSpace>) -> Result<FusionKernel, Error> {
        let n = space.len();
        let square = self.ell.len() == n
            && self.theta.len() == n
            && self.ell.iter().all(|r| r.len() == n)
            && self.theta.iter().all(|r| r.len() == n);
        if !square {
            return Err(Error::InvalidKernel(format!("kernel tables must be {n} × {n}")));
        }
        let theta = self
            .theta
            .iter()
            .flatten()
            .map(|t| match t {
                None => Ok(None),
                Some(l) => space
                    .index_of(l)
                    .map(Some)
                    .ok_or_else(|| Error::UnknownLabel(l.clone())),
            })
            .collect::<Result<Vec<_>, Error>>()?;
        FusionKernel::new(space, self.ell.concat(), theta)
    }
}

/// Probability weights over a constraint document's space, in label order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbabilityDoc {
    pub weights: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeDoc {
    Point,
    FiniteResolution {
        cell_width: f64,
        #[serde(default)]
        bound_std: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservationsDoc {
    Given(Vec<f64>),
    Simulated { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorDoc {
    pub mean: f64,
    pub variance: f64,
}

/// Scenario file. Without `observations` the readings are simulated with the
/// seed given on the command line (zero by default).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub steps: usize,
    #[serde(default = "one")]
    pub transition: f64,
    #[serde(default)]
    pub process_noise: f64,
    #[serde(default = "one")]
    pub obs_coeff: f64,
    pub sensor_std: f64,
    #[serde(default = "point")]
    pub mode: ModeDoc,
    pub initial: PriorDoc,
    #[serde(default)]
    pub observations: Option<ObservationsDoc>,
}

fn point() -> ModeDoc {
    ModeDoc::Point
}

impl ScenarioDoc {
    /// `seed` replaces the seed of simulated observations when given.
    pub fn build(&self, seed: Option<u64>) -> Result<ScenarioConfig, Error> {
        let observations = match &self.observations {
            Some(ObservationsDoc::Given(z)) => Observations::Given(z.clone()),
            Some(ObservationsDoc::Simulated { seed: s }) => Observations::Simulated {
                seed: seed.unwrap_or(*s),
            },
            None => Observations::Simulated {
                seed: seed.unwrap_or(0),
            },
        };
        let mode = match self.mode {
            ModeDoc::Point => SensorMode::Point,
            ModeDoc::FiniteResolution { cell_width, bound_std } => {
                SensorMode::FiniteResolution { cell_width, bound_std }
            }
        };
        let cfg = ScenarioConfig {
            steps: self.steps,
            transition: self.transition,
            process_noise: self.process_noise,
            obs_coeff: self.obs_coeff,
            sensor_std: self.sensor_std,
            mode,
            initial: GaussPrior::new(self.initial.mean, self.initial.variance)?,
            observations,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Reads a file and parses it as JSON, keeping the raw bytes for digests.
pub fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<(T, Vec<u8>), CliError> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let doc = serde_json::from_slice(&bytes).map_err(|source| CliError::Parse {
        path: path.display().to_string(),
        source,
    })?;
    Ok((doc, bytes))
}
