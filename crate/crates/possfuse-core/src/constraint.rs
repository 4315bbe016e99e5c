//! Probabilistic constraints as finite mixtures of bounded functions.
//!
//! A [`Constraint`] `M = Σᵢ aᵢ·δ_{fᵢ}` induces the outer measure
//! `μ_M(A) = Σᵢ aᵢ·sup_A fᵢ`. A probability measure `p` is dominated by `M`
//! when `p(B) ≤ μ_M(B)` for every `B` and `p(X) = μ_M(X)`. The canonical form
//! rescales every component to unit sup norm and moves the norm into the
//! weight, which leaves the dominated measures unchanged.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::funcspace::{ensure_same, same_space, BoundFn, StateSpace, SubsetMask};
use crate::{Error, Result, Tolerance, DEFAULT_TOLERANCE};

/// Largest space for which [`Constraint::dominates`] enumerates every subset.
pub const EXHAUSTIVE_LIMIT: usize = 20;

/// Largest space for which [`Constraint::check_axioms`] enumerates subset pairs.
pub const AXIOM_LIMIT: usize = 12;

/// One weighted term `a·δ_f` of a mixture.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub function: BoundFn,
}

/// A finite mixture `Σᵢ aᵢ·δ_{fᵢ}` of bounded functions on a common space.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    space: Arc<StateSpace>,
    components: Vec<Component>,
}

impl Constraint {
    pub fn new(space: &Arc<StateSpace>, components: Vec<(f64, BoundFn)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidWeights(
                "a constraint needs at least one component".into(),
            ));
        }
        let components = components
            .into_iter()
            .map(|(weight, function)| {
                if !(weight.is_finite() && weight >= 0.0) {
                    return Err(Error::InvalidWeights(format!("weight {weight} is not finite and >= 0")));
                }
                ensure_same(space, function.space())?;
                Ok(Component { weight, function })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            space: space.clone(),
            components,
        })
    }

    pub(crate) fn from_components_unchecked(space: Arc<StateSpace>, components: Vec<Component>) -> Self {
        Self { space, components }
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// `δ_1`: nothing is known.
    pub fn uninformative(space: &Arc<StateSpace>) -> Self {
        Self::from_components_unchecked(
            space.clone(),
            vec![Component {
                weight: 1.0,
                function: BoundFn::one(space),
            }],
        )
    }

    /// `δ_{1_A}`: the variable lies in `A` almost surely.
    pub fn from_indicator(mask: &SubsetMask) -> Self {
        Self::from_components_unchecked(
            mask.space().clone(),
            vec![Component {
                weight: 1.0,
                function: BoundFn::indicator(mask),
            }],
        )
    }

    /// `δ_{f†}`: a single possibility function.
    pub fn from_possibility(f: &BoundFn) -> Self {
        Self::from_components_unchecked(
            f.space().clone(),
            vec![Component {
                weight: 1.0,
                function: f.dagger(),
            }],
        )
    }

    /// `Σ_{B∈π} q(B)·δ_{1_B}` for a partition `π`; zero-weight blocks are skipped.
    pub fn from_partition(blocks: &[SubsetMask], weights: &[f64]) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::InvalidWeights("empty partition".into()))?;
        if blocks.len() != weights.len() {
            return Err(Error::InvalidWeights(format!(
                "{} blocks but {} weights",
                blocks.len(),
                weights.len()
            )));
        }
        let space = first.space().clone();
        let mut covered = vec![0usize; space.len()];
        for block in blocks {
            ensure_same(&space, block.space())?;
            if block.is_empty() {
                return Err(Error::InvalidWeights("partition blocks must be nonempty".into()));
            }
            for i in block.indices() {
                covered[i] += 1;
            }
        }
        if covered.iter().any(|&c| c != 1) {
            return Err(Error::InvalidWeights(
                "blocks must be disjoint and cover the space".into(),
            ));
        }
        check_distribution(weights)?;
        let components = blocks
            .iter()
            .zip(weights)
            .filter(|(_, &q)| q > 0.0)
            .map(|(b, &q)| Component {
                weight: q,
                function: BoundFn::indicator(b),
            })
            .collect();
        Ok(Self::from_components_unchecked(space, components))
    }

    /// Support in singleton indicators: `Σₓ p(x)·δ_{1_{x}}`.
    pub fn from_probability(p: &DiscreteProbability) -> Self {
        let components = p
            .weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, &w)| Component {
                weight: w,
                function: BoundFn::indicator(&SubsetMask::from_indices(&p.space, [i]).expect("index in range")),
            })
            .collect();
        Self::from_components_unchecked(p.space.clone(), components)
    }

    /// `Σ_A m(A)·δ_{1_A}`, whose outer measure is the plausibility of `m`.
    pub fn from_mass_function(m: &MassFunction) -> Self {
        let components = m
            .focal
            .iter()
            .map(|(set, mass)| Component {
                weight: *mass,
                function: BoundFn::indicator(set),
            })
            .collect();
        Self::from_components_unchecked(m.space.clone(), components)
    }

    /// `μ_M(A) = Σᵢ aᵢ·sup_A fᵢ`.
    pub fn outer_measure(&self, mask: &SubsetMask) -> Result<f64> {
        ensure_same(&self.space, mask.space())?;
        Ok(self
            .components
            .iter()
            .map(|c| c.weight * c.function.sup_over_unchecked(mask.members()))
            .sum())
    }

    /// `μ_M` on every subset, indexed by bitmask. Spaces up to [`EXHAUSTIVE_LIMIT`] points.
    pub fn outer_measure_table(&self) -> Result<Vec<f64>> {
        let n = self.space.len();
        if n > EXHAUSTIVE_LIMIT {
            return Err(Error::SpaceTooLarge {
                size: n,
                limit: EXHAUSTIVE_LIMIT,
            });
        }
        let mut table = vec![0.0f64; 1 << n];
        let mut sup = vec![0.0f64; 1 << n];
        for c in &self.components {
            let values = c.function.values();
            for bits in 1usize..1 << n {
                let low = bits.trailing_zeros() as usize;
                sup[bits] = sup[bits & (bits - 1)].max(values[low]);
                table[bits] += c.weight * sup[bits];
            }
        }
        Ok(table)
    }

    /// Induced lower bound `max(0, total − μ_M(Aᶜ))` on `m(A)` for any
    /// dominated measure `m` of total mass `total`.
    pub fn lower_bound(&self, mask: &SubsetMask, total: f64) -> Result<f64> {
        Ok((total - self.outer_measure(&mask.complement())?).max(0.0))
    }

    /// `‖M‖ = Σᵢ aᵢ·‖fᵢ‖`.
    pub fn norm(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.function.sup_norm()).sum()
    }

    /// Every component has unit sup norm and the weights sum to one.
    pub fn is_canonical(&self, tol: f64) -> bool {
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        (total - 1.0).abs() <= tol
            && self
                .components
                .iter()
                .all(|c| (c.function.sup_norm() - 1.0).abs() <= tol)
    }

    pub fn canonicalize(&self) -> Result<Self> {
        self.canonicalize_with(&Tolerance::default())
    }

    /// `M† = Σᵢ aᵢ‖fᵢ‖·δ_{fᵢ†}`, with negligible components pruned and
    /// duplicate functions merged.
    pub fn canonicalize_with(&self, tol: &Tolerance) -> Result<Self> {
        let components = self
            .components
            .iter()
            .map(|c| Component {
                weight: c.weight * c.function.sup_norm(),
                function: c.function.dagger_with(tol.abs),
            })
            .collect();
        Self::from_components_unchecked(self.space.clone(), components).pruned(tol)
    }

    /// Merges components whose functions agree within `tol.abs`, drops
    /// weights under `tol.prune`.
    pub(crate) fn pruned(self, tol: &Tolerance) -> Result<Self> {
        let merged = self.merged(tol.abs);
        let components: Vec<_> = merged
            .components
            .into_iter()
            .filter(|c| c.weight >= tol.prune)
            .collect();
        if components.is_empty() {
            return Err(Error::ZeroConstraint);
        }
        Ok(Self::from_components_unchecked(self.space, components))
    }

    /// Adds up the weights of components with (approximately) equal functions,
    /// keeping the first occurrence in place.
    pub fn merged(&self, tol: f64) -> Self {
        // Functions within `tol` pointwise have fingerprints within `tol·Σw`,
        // so only neighbours in fingerprint order need the full comparison.
        let n = self.space.len();
        let fingerprint = |f: &BoundFn| -> f64 { (0..n).map(|i| (i + 1) as f64 / n as f64 * f.value(i)).sum() };
        let window = tol * (n + 1) as f64 / 2.0 + 1e-12 * n as f64;
        let mut out: Vec<Component> = Vec::with_capacity(self.components.len());
        // (fingerprint, index into `out`), sorted by fingerprint
        let mut keys: Vec<(f64, usize)> = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let key = fingerprint(&c.function);
            let start = keys.partition_point(|(k, _)| *k < key - window);
            let hit = keys[start..]
                .iter()
                .take_while(|(k, _)| *k <= key + window)
                .map(|&(_, j)| j)
                .filter(|&j| out[j].function.approx_eq(&c.function, tol))
                .min();
            match hit {
                Some(j) => out[j].weight += c.weight,
                None => {
                    let at = keys.partition_point(|(k, _)| *k < key);
                    keys.insert(at, (key, out.len()));
                    out.push(c.clone());
                }
            }
        }
        Self::from_components_unchecked(self.space.clone(), out)
    }

    /// Components by descending weight, ties broken by lexicographic values.
    pub fn sorted(&self) -> Self {
        let mut components = self.components.clone();
        components.sort_by(|a, b| {
            b.weight
                .total_cmp(&a.weight)
                .then_with(|| a.function.cmp_values(&b.function))
        });
        Self::from_components_unchecked(self.space.clone(), components)
    }

    /// Equality as mixtures: after merging, each component of one side has a
    /// counterpart with equal function and weight (within `tol`) on the other.
    /// Components of weight zero are ignored.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if !same_space(&self.space, &other.space) {
            return false;
        }
        let live = |m: &Self| -> Vec<Component> {
            m.merged(tol.max(DEFAULT_TOLERANCE * 1e-3))
                .components
                .into_iter()
                .filter(|c| c.weight > 0.0)
                .collect()
        };
        let (a, b) = (live(self), live(other));
        if a.len() != b.len() {
            return false;
        }
        let mut used = vec![false; b.len()];
        a.iter().all(|ca| {
            let hit = b.iter().enumerate().find(|(j, cb)| {
                !used[*j] && ca.function.approx_eq(&cb.function, tol) && (ca.weight - cb.weight).abs() <= tol
            });
            match hit {
                Some((j, _)) => {
                    used[j] = true;
                    true
                }
                None => false,
            }
        })
    }

    /// `M * M'` on `X × X'`: components `(aᵢa'ⱼ, fᵢ ⋊ f'ⱼ)`.
    pub fn independent_product(&self, other: &Self) -> Self {
        let space = StateSpace::product(&self.space, &other.space);
        let mut components = Vec::with_capacity(self.components.len() * other.components.len());
        for c in &self.components {
            for d in &other.components {
                components.push(Component {
                    weight: c.weight * d.weight,
                    function: c
                        .function
                        .tensor_on(&d.function, &space)
                        .expect("product of operand spaces"),
                });
            }
        }
        Self::from_components_unchecked(space, components)
    }

    pub fn dominates(&self, p: &DiscreteProbability) -> Result<bool> {
        self.dominates_with(p, DEFAULT_TOLERANCE)
    }

    /// Checks `p(B) ≤ μ_M(B)` on every subset and `p(X) = μ_M(X)`.
    pub fn dominates_with(&self, p: &DiscreteProbability, tol: f64) -> Result<bool> {
        ensure_same(&self.space, &p.space)?;
        let table = self.outer_measure_table()?;
        let n = self.space.len();
        let mut mass = vec![0.0f64; 1 << n];
        for bits in 1usize..1 << n {
            let low = bits.trailing_zeros() as usize;
            mass[bits] = mass[bits & (bits - 1)] + p.weights[low];
            if mass[bits] > table[bits] + tol {
                return Ok(false);
            }
        }
        let full = (1usize << n) - 1;
        Ok((mass[full] - table[full]).abs() <= tol)
    }

    /// Domination checked on `samples` random subsets plus the full set.
    /// The answer is only a refutation test: `complete` is always false.
    pub fn dominates_sampled<R: RngCore>(
        &self,
        p: &DiscreteProbability,
        samples: usize,
        rng: &mut R,
        tol: f64,
    ) -> Result<SampledDomination> {
        ensure_same(&self.space, &p.space)?;
        let n = self.space.len();
        let full = SubsetMask::full(&self.space);
        let mut holds = (p.probability_unchecked(full.members()) - self.outer_measure(&full)?).abs() <= tol;
        let mut checked = 1;
        let mut members = vec![false; n];
        while holds && checked <= samples {
            let mut word = 0u64;
            for (i, m) in members.iter_mut().enumerate() {
                if i % 64 == 0 {
                    word = rng.next_u64();
                }
                *m = word >> (i % 64) & 1 == 1;
            }
            let mass = p.probability_unchecked(&members);
            let bound: f64 = self
                .components
                .iter()
                .map(|c| c.weight * c.function.sup_over_unchecked(&members))
                .sum();
            holds = mass <= bound + tol;
            checked += 1;
        }
        Ok(SampledDomination {
            holds,
            complete: false,
            subsets_checked: checked,
        })
    }

    /// Exhaustive check of the outer-measure axioms: null empty set,
    /// monotonicity over all pairs `A ⊆ B`, sub-additivity over all pairs.
    pub fn check_axioms(&self, tol: f64) -> Result<AxiomReport> {
        let n = self.space.len();
        if n > AXIOM_LIMIT {
            return Err(Error::SpaceTooLarge {
                size: n,
                limit: AXIOM_LIMIT,
            });
        }
        let table = self.outer_measure_table()?;
        let count = 1usize << n;
        let mut report = AxiomReport {
            size: n,
            empty_value: table[0],
            monotonicity_pairs: 0,
            monotonicity_violations: 0,
            subadditivity_pairs: 0,
            subadditivity_violations: 0,
            tolerance: tol,
        };
        for outer in 0..count {
            // every subset of `outer`, including the empty set and `outer` itself
            let mut inner = outer;
            loop {
                report.monotonicity_pairs += 1;
                if table[inner] > table[outer] + tol {
                    report.monotonicity_violations += 1;
                }
                if inner == 0 {
                    break;
                }
                inner = (inner - 1) & outer;
            }
        }
        for a in 0..count {
            for b in 0..count {
                report.subadditivity_pairs += 1;
                if table[a | b] > table[a] + table[b] + tol {
                    report.subadditivity_violations += 1;
                }
            }
        }
        Ok(report)
    }
}

/// Outcome of [`Constraint::dominates_sampled`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampledDomination {
    pub holds: bool,
    pub complete: bool,
    pub subsets_checked: usize,
}

/// Outcome of [`Constraint::check_axioms`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxiomReport {
    pub size: usize,
    pub empty_value: f64,
    pub monotonicity_pairs: u64,
    pub monotonicity_violations: u64,
    pub subadditivity_pairs: u64,
    pub subadditivity_violations: u64,
    pub tolerance: f64,
}

impl AxiomReport {
    pub fn holds(&self) -> bool {
        self.empty_value.abs() <= self.tolerance
            && self.monotonicity_violations == 0
            && self.subadditivity_violations == 0
    }
}

fn check_distribution(weights: &[f64]) -> Result<()> {
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidWeights(format!(
            "{w} is not a finite non-negative weight"
        )));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > DEFAULT_TOLERANCE {
        return Err(Error::InvalidWeights(format!("weights sum to {total}, expected 1")));
    }
    Ok(())
}

/// A probability distribution on a finite space.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteProbability {
    space: Arc<StateSpace>,
    weights: Vec<f64>,
}

impl DiscreteProbability {
    pub fn new(space: &Arc<StateSpace>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::InvalidWeights(format!(
                "{} weights for a space of {} points",
                weights.len(),
                space.len()
            )));
        }
        check_distribution(&weights)?;
        Ok(Self {
            space: space.clone(),
            weights,
        })
    }

    /// Normalises non-negative weights with a positive total.
    pub fn from_unnormalized(space: &Arc<StateSpace>, weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidWeights(format!(
                "{w} is not a finite non-negative weight"
            )));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidWeights("weights sum to zero".into()));
        }
        Self::new(space, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(space: &Arc<StateSpace>) -> Self {
        let n = space.len();
        Self {
            space: space.clone(),
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn probability(&self, mask: &SubsetMask) -> Result<f64> {
        ensure_same(&self.space, mask.space())?;
        Ok(self.probability_unchecked(mask.members()))
    }

    fn probability_unchecked(&self, members: &[bool]) -> f64 {
        self.weights
            .iter()
            .zip(members)
            .filter(|(_, &m)| m)
            .map(|(w, _)| w)
            .sum()
    }

    /// `Σₓ f(x)·p(x)`.
    pub fn expectation(&self, f: &BoundFn) -> Result<f64> {
        ensure_same(&self.space, f.space())?;
        Ok(self.weights.iter().enumerate().map(|(i, w)| w * f.value(i)).sum())
    }

    /// Reads a constraint supported on singleton indicators back as a distribution.
    pub fn from_singleton_constraint(constraint: &Constraint, tol: f64) -> Option<Self> {
        let mut weights = vec![0.0; constraint.space.len()];
        for c in &constraint.components {
            let values = c.function.values();
            let mut support = values.iter().enumerate().filter(|(_, &v)| v > tol);
            let (i, &v) = support.next()?;
            if support.next().is_some() || (v - 1.0).abs() > tol {
                return None;
            }
            weights[i] += c.weight;
        }
        Some(Self {
            space: constraint.space.clone(),
            weights,
        })
    }
}

/// A Dempster–Shafer basic mass assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct MassFunction {
    space: Arc<StateSpace>,
    focal: Vec<(SubsetMask, f64)>,
}

impl MassFunction {
    pub fn new(space: &Arc<StateSpace>, focal: Vec<(SubsetMask, f64)>) -> Result<Self> {
        if focal.is_empty() {
            return Err(Error::InvalidWeights("a mass function needs a focal set".into()));
        }
        for (k, (set, mass)) in focal.iter().enumerate() {
            ensure_same(space, set.space())?;
            if set.is_empty() {
                return Err(Error::InvalidWeights("the empty set cannot be focal".into()));
            }
            if !(mass.is_finite() && *mass > 0.0) {
                return Err(Error::InvalidWeights(format!("focal mass {mass} must be > 0")));
            }
            if focal[..k].iter().any(|(other, _)| other == set) {
                return Err(Error::InvalidWeights(format!(
                    "focal set {:?} listed twice",
                    set.labels()
                )));
            }
        }
        let total: f64 = focal.iter().map(|(_, m)| m).sum();
        if (total - 1.0).abs() > DEFAULT_TOLERANCE {
            return Err(Error::InvalidWeights(format!("masses sum to {total}, expected 1")));
        }
        Ok(Self {
            space: space.clone(),
            focal,
        })
    }

    /// All mass on the whole frame.
    pub fn vacuous(space: &Arc<StateSpace>) -> Self {
        Self {
            space: space.clone(),
            focal: vec![(SubsetMask::full(space), 1.0)],
        }
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn focal(&self) -> &[(SubsetMask, f64)] {
        &self.focal
    }

    pub fn mass_of(&self, set: &SubsetMask) -> f64 {
        self.focal.iter().find(|(s, _)| s == set).map_or(0.0, |(_, m)| *m)
    }

    /// `Σ_{A∩B≠∅} m(A)`.
    pub fn plausibility(&self, set: &SubsetMask) -> Result<f64> {
        ensure_same(&self.space, set.space())?;
        Ok(self
            .focal
            .iter()
            .filter(|(a, _)| a.members().iter().zip(set.members()).any(|(&x, &y)| x && y))
            .map(|(_, m)| m)
            .sum())
    }

    /// `Σ_{A⊆B} m(A)`.
    pub fn belief(&self, set: &SubsetMask) -> Result<f64> {
        ensure_same(&self.space, set.space())?;
        Ok(self
            .focal
            .iter()
            .filter(|(a, _)| a.is_subset_of(set))
            .map(|(_, m)| m)
            .sum())
    }
}
