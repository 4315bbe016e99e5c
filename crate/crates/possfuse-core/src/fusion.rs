//! Data assimilation between independent constraints.
//!
//! [`fuse`] combines two constraints on the same state space:
//!
//! ```text
//! P ⋆ P' = Σᵢⱼ (aᵢa'ⱼ‖fᵢ·f'ⱼ‖ / C) · δ_{(fᵢ·f'ⱼ)†},   C = Σᵢⱼ aᵢa'ⱼ‖fᵢ·f'ⱼ‖
//! ```
//!
//! and fails when `C` vanishes. [`general_fuse`] replaces the pointwise product
//! by `f ⊙ f'` built from a [`FusionKernel`] `(ℓ, θ)` on a finite set `Y`.
//! [`dempster_combine`] implements Dempster's rule directly on focal sets; it
//! serves as a reference for the indicator case.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::constraint::{Component, Constraint, MassFunction};
use crate::funcspace::{ensure_same, BoundFn, StateSpace, SubsetMask};
use crate::{Error, Result, Tolerance, DEFAULT_TOLERANCE};

/// Largest `|Y|` for which [`KernelCheck::Auto`] runs the associativity check.
pub const AUTO_VERIFY_LIMIT: usize = 64;

/// Side information produced by a fusion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FusionDiagnostics {
    /// `C = ‖P * P'‖`.
    pub normalizer: f64,
    /// `1 − C`; the Dempster conflict when both inputs are canonical.
    pub conflict: f64,
    /// Number of pairwise components before merging and pruning.
    pub component_count_before_prune: usize,
    /// Number of components in the fused constraint.
    pub component_count: usize,
}

pub fn fuse(p: &Constraint, q: &Constraint) -> Result<(Constraint, FusionDiagnostics)> {
    fuse_with(p, q, &Tolerance::default())
}

/// `P ⋆ P'` with explicit thresholds.
pub fn fuse_with(p: &Constraint, q: &Constraint, tol: &Tolerance) -> Result<(Constraint, FusionDiagnostics)> {
    ensure_same(p.space(), q.space())?;
    combine(p, q, tol, |f, g| f.product(g))
}

fn combine(
    p: &Constraint,
    q: &Constraint,
    tol: &Tolerance,
    op: impl Fn(&BoundFn, &BoundFn) -> Result<BoundFn>,
) -> Result<(Constraint, FusionDiagnostics)> {
    let pairs = p.components().len() * q.components().len();
    let mut components = Vec::with_capacity(pairs);
    let mut normalizer = 0.0;
    for c in p.components() {
        for d in q.components() {
            let g = op(&c.function, &d.function)?;
            let weight = c.weight * d.weight * g.sup_norm();
            normalizer += weight;
            if weight > 0.0 {
                components.push(Component {
                    weight,
                    function: g.dagger_with(tol.abs),
                });
            }
        }
    }
    if normalizer <= tol.abs {
        return Err(Error::IncompatibleConstraints { normalizer });
    }
    for c in &mut components {
        c.weight /= normalizer;
    }
    let fused = Constraint::from_components_unchecked(p.space().clone(), components).pruned(tol)?;
    let diagnostics = FusionDiagnostics {
        normalizer,
        conflict: 1.0 - normalizer,
        component_count_before_prune: pairs,
        component_count: fused.components().len(),
    };
    Ok((fused, diagnostics))
}

/// Dempster's rule of combination on focal sets. Returns the combined mass
/// function and the conflict `Σ_{A∩A'=∅} m(A)m'(A')`.
pub fn dempster_combine(m: &MassFunction, m2: &MassFunction) -> Result<(MassFunction, f64)> {
    dempster_combine_with(m, m2, DEFAULT_TOLERANCE)
}

pub fn dempster_combine_with(m: &MassFunction, m2: &MassFunction, tol: f64) -> Result<(MassFunction, f64)> {
    ensure_same(m.space(), m2.space())?;
    let mut conflict = 0.0;
    let mut agreement = 0.0;
    let mut focal: Vec<(Vec<bool>, f64)> = Vec::new();
    for (a, ma) in m.focal() {
        for (b, mb) in m2.focal() {
            let meet: Vec<bool> = a.members().iter().zip(b.members()).map(|(&x, &y)| x && y).collect();
            let mass = ma * mb;
            if meet.iter().any(|&x| x) {
                agreement += mass;
                match focal.iter_mut().find(|(set, _)| *set == meet) {
                    Some((_, acc)) => *acc += mass,
                    None => focal.push((meet, mass)),
                }
            } else {
                conflict += mass;
            }
        }
    }
    if agreement <= tol {
        return Err(Error::IncompatibleConstraints { normalizer: agreement });
    }
    let space = m.space();
    let focal = focal
        .into_iter()
        .map(|(set, mass)| {
            (
                SubsetMask::from_members(space, set).expect("same frame"),
                mass / agreement,
            )
        })
        .collect();
    Ok((MassFunction::new(space, focal)?, conflict))
}

/// `(ℓ, θ)` on a finite set `Y`: `ℓ(y, y') ∈ [0, 1]` and a partial map
/// `θ : S → Y` with `ℓ = 0` off `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionKernel {
    space: Arc<StateSpace>,
    ell: Vec<f64>,
    theta: Vec<Option<usize>>,
    preimages: Vec<Vec<(usize, usize)>>,
}

impl FusionKernel {
    /// `ell` and `theta` are row-major `|Y| × |Y|` tables.
    pub fn new(space: &Arc<StateSpace>, ell: Vec<f64>, theta: Vec<Option<usize>>) -> Result<Self> {
        let n = space.len();
        if ell.len() != n * n || theta.len() != n * n {
            return Err(Error::InvalidKernel(format!("tables must have {} entries", n * n)));
        }
        let mut preimages = vec![Vec::new(); n];
        for (k, (&l, &t)) in ell.iter().zip(&theta).enumerate() {
            if !(0.0..=1.0).contains(&l) {
                return Err(Error::InvalidKernel(format!("ℓ value {l} outside [0, 1]")));
            }
            match t {
                Some(y) if y >= n => {
                    return Err(Error::InvalidKernel(format!("θ value {y} outside Y")));
                }
                Some(y) => preimages[y].push((k / n, k % n)),
                None if l != 0.0 => {
                    return Err(Error::InvalidKernel(format!(
                        "ℓ({}, {}) = {l} where θ is undefined",
                        space.label(k / n),
                        space.label(k % n)
                    )));
                }
                None => {}
            }
        }
        if let Some(y) = preimages.iter().position(Vec::is_empty) {
            return Err(Error::InvalidKernel(format!("θ does not reach `{}`", space.label(y))));
        }
        Ok(Self {
            space: space.clone(),
            ell,
            theta,
            preimages,
        })
    }

    /// `ℓ(x, x') = 1{x = x'}`, `θ(x, x) = x`: recovers the state-space fusion.
    pub fn diagonal(space: &Arc<StateSpace>) -> Self {
        let n = space.len();
        let mut ell = vec![0.0; n * n];
        let mut theta = vec![None; n * n];
        for i in 0..n {
            ell[i * n + i] = 1.0;
            theta[i * n + i] = Some(i);
        }
        Self::new(space, ell, theta).expect("diagonal kernel is valid")
    }

    /// Second-order kernel on a finite family of constraints:
    /// `ℓ(P, P') = ‖P * P'‖` and `θ(P, P') = P ⋆ P'`, undefined on total
    /// conflict. Fails when some `P ⋆ P'` falls outside the family.
    pub fn second_order(family: &[Constraint], tol: &Tolerance) -> Result<Self> {
        let n = family.len();
        let space = StateSpace::from_labels((0..n).map(|i| format!("P{i}")))?;
        let mut ell = vec![0.0; n * n];
        let mut theta = vec![None; n * n];
        for (i, p) in family.iter().enumerate() {
            for (j, q) in family.iter().enumerate() {
                match fuse_with(p, q, tol) {
                    Ok((fused, diag)) => {
                        let k = family
                            .iter()
                            .position(|r| r.approx_eq(&fused, tol.abs))
                            .ok_or_else(|| Error::InvalidKernel(format!("P{i} ⋆ P{j} is not in the family")))?;
                        // guard against rounding just above one
                        ell[i * n + j] = diag.normalizer.min(1.0);
                        theta[i * n + j] = Some(k);
                    }
                    Err(Error::IncompatibleConstraints { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        Self::new(&space, ell, theta)
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn ell(&self, y: usize, y2: usize) -> f64 {
        self.ell[y * self.space.len() + y2]
    }

    pub fn theta(&self, y: usize, y2: usize) -> Option<usize> {
        self.theta[y * self.space.len() + y2]
    }

    /// `θ⁻¹[{ŷ}]`.
    pub fn preimage(&self, y: usize) -> &[(usize, usize)] {
        &self.preimages[y]
    }

    /// θ extended by an isolated point (`None`) absorbing every pair outside `S`.
    fn theta_ext(&self, y: Option<usize>, y2: Option<usize>) -> Option<usize> {
        self.theta(y?, y2?)
    }

    /// ℓ extended with zero at the isolated point.
    fn ell_ext(&self, y: Option<usize>, y2: Option<usize>) -> f64 {
        match (y, y2) {
            (Some(a), Some(b)) => self.ell(a, b),
            _ => 0.0,
        }
    }
}

/// `ŷ ↦ sup_{(y,y') ∈ θ⁻¹[{ŷ}]} ℓ(y,y')·f(y)·f'(y')`.
pub fn odot(f: &BoundFn, g: &BoundFn, kernel: &FusionKernel) -> Result<BoundFn> {
    ensure_same(f.space(), kernel.space())?;
    ensure_same(g.space(), kernel.space())?;
    let (fv, gv) = (f.values(), g.values());
    let values = kernel
        .preimages
        .iter()
        .map(|pre| {
            pre.iter()
                .map(|&(y, y2)| kernel.ell(y, y2) * fv[y] * gv[y2])
                .fold(0.0, f64::max)
        })
        .collect();
    BoundFn::dense(kernel.space(), values)
}

/// Sufficient condition for `⊙` to be associative: θ is associative as a
/// partial operation (with the isolated-point extension) and
/// `ℓ(y,y')·ℓ(θ(y,y'),y'') = ℓ(y,θ(y',y''))·ℓ(y',y'')` for all triples.
pub fn check_kernel_associativity(kernel: &FusionKernel) -> bool {
    check_kernel_associativity_with(kernel, DEFAULT_TOLERANCE)
}

pub fn check_kernel_associativity_with(kernel: &FusionKernel, tol: f64) -> bool {
    let n = kernel.space.len();
    for a in 0..n {
        for b in 0..n {
            let ab = kernel.theta(a, b);
            for c in 0..n {
                let bc = kernel.theta(b, c);
                if kernel.theta_ext(ab, Some(c)) != kernel.theta_ext(Some(a), bc) {
                    return false;
                }
                let left = kernel.ell(a, b) * kernel.ell_ext(ab, Some(c));
                let right = kernel.ell_ext(Some(a), bc) * kernel.ell(b, c);
                if (left - right).abs() > tol {
                    return false;
                }
            }
        }
    }
    true
}

/// Whether [`general_fuse`] verifies the kernel first.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum KernelCheck {
    /// Verify when `|Y|` is at most [`AUTO_VERIFY_LIMIT`].
    #[default]
    Auto,
    Verify,
    Waive,
}

/// Fusion of constraints on `Y` under the kernel's `⊙` operation.
pub fn general_fuse(
    p: &Constraint,
    q: &Constraint,
    kernel: &FusionKernel,
    check: KernelCheck,
    tol: &Tolerance,
) -> Result<(Constraint, FusionDiagnostics)> {
    ensure_same(p.space(), kernel.space())?;
    ensure_same(q.space(), kernel.space())?;
    let verify = match check {
        KernelCheck::Auto => kernel.space.len() <= AUTO_VERIFY_LIMIT,
        KernelCheck::Verify => true,
        KernelCheck::Waive => false,
    };
    if verify && !check_kernel_associativity_with(kernel, tol.abs) {
        return Err(Error::KernelNotAssociative);
    }
    combine(p, q, tol, |f, g| odot(f, g, kernel))
}

impl core::fmt::Display for FusionDiagnostics {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "normalizer {} conflict {} components {}/{}",
            self.normalizer, self.conflict, self.component_count, self.component_count_before_prune
        )
    }
}
