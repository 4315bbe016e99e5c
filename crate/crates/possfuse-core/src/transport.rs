//! Transport of constraints along maps between finite spaces.
//!
//! Pushing a constraint forward replaces each component by its fiber-wise
//! supremum, pulling it back composes each component with the map. Both keep
//! the mixture weights, so for every `B ⊆ X₂`
//!
//! - `μ_{ξ₊M}(B) = μ_M(ξ⁻¹[B])`
//! - `μ_{ξ*M}(ξ⁻¹[B]) = μ_M(B)` (for surjective `ξ`)

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::constraint::{Component, Constraint};
use crate::funcspace::{ensure_same, StateSpace, SubsetMask};
use crate::{Error, Result};

/// A total map between two finite spaces, stored as a lookup table.
#[derive(Clone, Debug, PartialEq)]
pub struct PointMap {
    domain: Arc<StateSpace>,
    codomain: Arc<StateSpace>,
    table: Vec<usize>,
    surjective: bool,
}

impl PointMap {
    pub fn new(domain: &Arc<StateSpace>, codomain: &Arc<StateSpace>, table: Vec<usize>) -> Result<Self> {
        if table.len() != domain.len() {
            return Err(Error::InvalidMap(format!(
                "table has {} entries for a domain of {} points",
                table.len(),
                domain.len()
            )));
        }
        if let Some(&y) = table.iter().find(|&&y| y >= codomain.len()) {
            return Err(Error::InvalidMap(format!("image index {y} outside the codomain")));
        }
        let mut hit = vec![false; codomain.len()];
        for &y in &table {
            hit[y] = true;
        }
        Ok(Self {
            domain: domain.clone(),
            codomain: codomain.clone(),
            table,
            surjective: hit.into_iter().all(|h| h),
        })
    }

    /// Builds the map from `(domain label, codomain label)` pairs; every domain
    /// point must appear exactly once.
    pub fn from_pairs<I, A, B>(domain: &Arc<StateSpace>, codomain: &Arc<StateSpace>, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B)>,
        A: AsRef<str>,
        B: AsRef<str>,
    {
        let mut table: Vec<Option<usize>> = vec![None; domain.len()];
        for (x, y) in pairs {
            let (x, y) = (x.as_ref(), y.as_ref());
            let xi = domain
                .index_of(x)
                .ok_or_else(|| Error::InvalidMap(format!("`{x}` is not in the domain")))?;
            let yi = codomain
                .index_of(y)
                .ok_or_else(|| Error::InvalidMap(format!("`{y}` is not in the codomain")))?;
            if table[xi].replace(yi).is_some() {
                return Err(Error::InvalidMap(format!("`{x}` is mapped twice")));
            }
        }
        let table = table
            .into_iter()
            .enumerate()
            .map(|(i, y)| y.ok_or_else(|| Error::InvalidMap(format!("`{}` has no image", domain.label(i)))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(domain, codomain, table)
    }

    pub fn identity(space: &Arc<StateSpace>) -> Self {
        Self {
            domain: space.clone(),
            codomain: space.clone(),
            table: (0..space.len()).collect(),
            surjective: true,
        }
    }

    /// Canonical projection of a product space onto one of its factors.
    pub fn projection(product: &Arc<StateSpace>, keep: Factor) -> Result<Self> {
        let (left, right) = product.factors().ok_or(Error::NotProduct)?;
        let width = right.len();
        let (codomain, table) = match keep {
            Factor::Left => (left, (0..product.len()).map(|k| k / width).collect()),
            Factor::Right => (right, (0..product.len()).map(|k| k % width).collect()),
        };
        Self::new(product, codomain, table)
    }

    pub fn domain(&self) -> &Arc<StateSpace> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<StateSpace> {
        &self.codomain
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn apply(&self, x: usize) -> usize {
        self.table[x]
    }

    pub fn is_surjective(&self) -> bool {
        self.surjective
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &PointMap) -> Result<PointMap> {
        ensure_same(&self.codomain, &next.domain)?;
        let table = self.table.iter().map(|&y| next.table[y]).collect();
        PointMap::new(&self.domain, &next.codomain, table)
    }

    /// `ξ⁻¹[B]`.
    pub fn preimage(&self, mask: &SubsetMask) -> Result<SubsetMask> {
        ensure_same(&self.codomain, mask.space())?;
        let members = self.table.iter().map(|&y| mask.contains(y)).collect();
        SubsetMask::from_members(&self.domain, members)
    }

    /// `ξ[A]`.
    pub fn image(&self, mask: &SubsetMask) -> Result<SubsetMask> {
        ensure_same(&self.domain, mask.space())?;
        SubsetMask::from_indices(&self.codomain, mask.indices().map(|x| self.table[x]))
    }

    /// The nonempty fibers `ξ⁻¹[{y}]`, in codomain order.
    pub fn fibers(&self) -> Vec<SubsetMask> {
        (0..self.codomain.len())
            .map(|y| {
                let members = self.table.iter().map(|&t| t == y).collect();
                SubsetMask::from_members(&self.domain, members).expect("sizes match")
            })
            .filter(|m| !m.is_empty())
            .collect()
    }
}

/// Which factor of a product space to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    Left,
    Right,
}

/// Pushforward: every component `f` becomes `y ↦ sup_{ξ⁻¹[{y}]} f`.
///
/// Points with an empty fiber get the value 0, so components may lose sup
/// norm under a non-surjective map. The result is not re-canonicalised.
pub fn pushforward(constraint: &Constraint, map: &PointMap) -> Result<Constraint> {
    ensure_same(constraint.space(), map.domain())?;
    let components = constraint
        .components()
        .iter()
        .map(|c| {
            Ok(Component {
                weight: c.weight,
                function: c.function.fiber_sup(map)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Constraint::from_components_unchecked(
        map.codomain().clone(),
        components,
    ))
}

/// Pullback: every component `f` becomes `f ∘ ξ`.
pub fn pullback(constraint: &Constraint, map: &PointMap) -> Result<Constraint> {
    ensure_same(constraint.space(), map.codomain())?;
    let components = constraint
        .components()
        .iter()
        .map(|c| {
            Ok(Component {
                weight: c.weight,
                function: c.function.compose(map)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Constraint::from_components_unchecked(map.domain().clone(), components))
}

/// Pushforward along the canonical projection onto `keep`.
pub fn marginalize(constraint: &Constraint, keep: Factor) -> Result<Constraint> {
    let projection = PointMap::projection(constraint.space(), keep)?;
    pushforward(constraint, &projection)
}
