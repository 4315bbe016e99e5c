//! Finite state spaces and the algebra of non-negative bounded functions on them.
//!
//! A [`StateSpace`] is a finite, ordered set of labelled points. It may carry a
//! uniform real grid embedding (used by Gaussian-shaped functions) or be the
//! Cartesian product of two other spaces. Every subset is measurable.
//!
//! A [`BoundFn`] is either a dense table of values or a closed-form
//! Gaussian shape `x ↦ c·exp(−(Hx − z)² / (2σ²))` evaluated on the grid
//! points. Suprema are exact maxima over the finite set of points; the
//! supremum over the empty set is 0.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::transport::PointMap;
use crate::{Error, Result, DEFAULT_TOLERANCE};

/// Uniform grid `lo, lo + h, …, hi` with `n` points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn step(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.hi - self.lo) / (self.n - 1) as f64
        }
    }

    pub fn point(&self, i: usize) -> f64 {
        if self.n < 2 {
            self.lo
        } else if i + 1 == self.n {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Structure {
    Plain,
    Grid(Grid),
    Product(Arc<StateSpace>, Arc<StateSpace>),
}

/// A finite labelled set of points.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    labels: Vec<String>,
    index: BTreeMap<String, usize>,
    structure: Structure,
}

impl StateSpace {
    fn build(labels: Vec<String>, structure: Structure) -> Result<Arc<Self>> {
        if labels.is_empty() {
            return Err(Error::InvalidSpace("a state space needs at least one point".into()));
        }
        let mut index = BTreeMap::new();
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::InvalidSpace(format!("duplicate label `{label}`")));
            }
        }
        Ok(Arc::new(Self {
            labels,
            index,
            structure,
        }))
    }

    pub fn from_labels<I, S>(labels: I) -> Result<Arc<Self>>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::build(labels.into_iter().map(Into::into).collect(), Structure::Plain)
    }

    /// Points labelled `0..n`.
    pub fn indexed(n: usize) -> Result<Arc<Self>> {
        Self::from_labels((0..n).map(|i| i.to_string()))
    }

    /// Uniform grid on `[lo, hi]` with `n` points; labels are the coordinates.
    pub fn grid(lo: f64, hi: f64, n: usize) -> Result<Arc<Self>> {
        if !(lo.is_finite() && hi.is_finite()) || n == 0 || (n > 1 && lo >= hi) || (n == 1 && lo != hi) {
            return Err(Error::InvalidSpace(format!("bad grid lo={lo} hi={hi} n={n}")));
        }
        let grid = Grid { lo, hi, n };
        let labels = (0..n).map(|i| format!("{}", grid.point(i))).collect();
        Self::build(labels, Structure::Grid(grid))
    }

    /// Cartesian product; the point `(i, j)` sits at index `i * right.len() + j`.
    pub fn product(left: &Arc<Self>, right: &Arc<Self>) -> Arc<Self> {
        let mut labels = Vec::with_capacity(left.len() * right.len());
        for a in &left.labels {
            for b in &right.labels {
                labels.push(format!("({a},{b})"));
            }
        }
        // Labels of the factors are unique, but a factor label containing
        // `,` or parentheses could still collide after formatting.
        Self::build(labels.clone(), Structure::Product(left.clone(), right.clone())).unwrap_or_else(|_| {
            let labels = (0..labels.len()).map(|k| format!("#{k}")).collect();
            Self::build(labels, Structure::Product(left.clone(), right.clone())).expect("indexed labels are unique")
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn grid_embedding(&self) -> Option<&Grid> {
        match &self.structure {
            Structure::Grid(g) => Some(g),
            _ => None,
        }
    }

    pub fn factors(&self) -> Option<(&Arc<StateSpace>, &Arc<StateSpace>)> {
        match &self.structure {
            Structure::Product(l, r) => Some((l, r)),
            _ => None,
        }
    }

    /// Real coordinate of point `i` when the space is a grid.
    pub fn coordinate(&self, i: usize) -> Option<f64> {
        self.grid_embedding().map(|g| g.point(i))
    }
}

/// Structural equality with a pointer fast path.
pub fn same_space(a: &Arc<StateSpace>, b: &Arc<StateSpace>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

pub(crate) fn ensure_same(a: &Arc<StateSpace>, b: &Arc<StateSpace>) -> Result<()> {
    if same_space(a, b) {
        Ok(())
    } else {
        Err(Error::SpaceMismatch)
    }
}

/// A subset of a state space.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsetMask {
    space: Arc<StateSpace>,
    members: Vec<bool>,
}

impl SubsetMask {
    pub fn empty(space: &Arc<StateSpace>) -> Self {
        Self {
            space: space.clone(),
            members: vec![false; space.len()],
        }
    }

    pub fn full(space: &Arc<StateSpace>) -> Self {
        Self {
            space: space.clone(),
            members: vec![true; space.len()],
        }
    }

    pub fn from_members(space: &Arc<StateSpace>, members: Vec<bool>) -> Result<Self> {
        if members.len() != space.len() {
            return Err(Error::InvalidValue(format!(
                "mask has {} entries, space has {} points",
                members.len(),
                space.len()
            )));
        }
        Ok(Self {
            space: space.clone(),
            members,
        })
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(space: &Arc<StateSpace>, indices: I) -> Result<Self> {
        let mut mask = Self::empty(space);
        for i in indices {
            if i >= space.len() {
                return Err(Error::UnknownLabel(format!("#{i}")));
            }
            mask.members[i] = true;
        }
        Ok(mask)
    }

    pub fn from_labels<I, S>(space: &Arc<StateSpace>, labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut mask = Self::empty(space);
        for label in labels {
            let label = label.as_ref();
            let i = space.index_of(label).ok_or_else(|| Error::UnknownLabel(label.into()))?;
            mask.members[i] = true;
        }
        Ok(mask)
    }

    /// Subset encoded by the low bits of `bits`; point `i` is in the set iff bit `i` is set.
    pub fn from_bits(space: &Arc<StateSpace>, bits: u64) -> Self {
        let members = (0..space.len()).map(|i| i < 64 && bits >> i & 1 == 1).collect();
        Self {
            space: space.clone(),
            members,
        }
    }

    /// Inverse of [`SubsetMask::from_bits`]; `None` past 64 points.
    pub fn to_bits(&self) -> Option<u64> {
        if self.members.len() > 64 {
            return None;
        }
        Some(
            self.members
                .iter()
                .enumerate()
                .filter(|(_, &m)| m)
                .fold(0u64, |acc, (i, _)| acc | 1 << i),
        )
    }

    /// `A × B` as a subset of the product space.
    pub fn product(left: &SubsetMask, right: &SubsetMask, product: &Arc<StateSpace>) -> Result<Self> {
        let (l, r) = product.factors().ok_or(Error::NotProduct)?;
        ensure_same(l, &left.space)?;
        ensure_same(r, &right.space)?;
        let mut members = Vec::with_capacity(product.len());
        for &a in &left.members {
            for &b in &right.members {
                members.push(a && b);
            }
        }
        Ok(Self {
            space: product.clone(),
            members,
        })
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members[i]
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i)
    }

    pub fn count(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&m| m)
    }

    pub fn complement(&self) -> Self {
        Self {
            space: self.space.clone(),
            members: self.members.iter().map(|m| !m).collect(),
        }
    }

    fn zip_with(&self, other: &Self, op: impl Fn(bool, bool) -> bool) -> Result<Self> {
        ensure_same(&self.space, &other.space)?;
        Ok(Self {
            space: self.space.clone(),
            members: self
                .members
                .iter()
                .zip(&other.members)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        })
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.members.iter().zip(&other.members).all(|(&a, &b)| !a || b)
    }

    pub fn labels(&self) -> Vec<&str> {
        self.indices().map(|i| self.space.label(i)).collect()
    }
}

/// `x ↦ scale · exp(−(obs_coeff·x − center)² / (2·width²))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussShape {
    pub center: f64,
    pub width: f64,
    pub scale: f64,
    pub obs_coeff: f64,
}

impl GaussShape {
    pub fn new(center: f64, width: f64, scale: f64, obs_coeff: f64) -> Result<Self> {
        let shape = Self {
            center,
            width,
            scale,
            obs_coeff,
        };
        shape.validate()?;
        Ok(shape)
    }

    fn validate(&self) -> Result<()> {
        if !(self.center.is_finite() && self.obs_coeff.is_finite()) {
            return Err(Error::InvalidValue(
                "gaussian center and coefficient must be finite".into(),
            ));
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::InvalidValue(format!(
                "gaussian width must be > 0, got {}",
                self.width
            )));
        }
        if !(self.scale.is_finite() && self.scale >= 0.0) {
            return Err(Error::InvalidValue(format!(
                "gaussian scale must be >= 0, got {}",
                self.scale
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let r = (self.obs_coeff * x - self.center) / self.width;
        self.scale * libm::exp(-0.5 * r * r)
    }

    /// Closed-form product of two shapes, normalised to unit coefficient
    /// unless both coefficients vanish.
    pub fn product(&self, other: &Self) -> Self {
        let (s1, s2) = (self.width * self.width, other.width * other.width);
        let precision = self.obs_coeff * self.obs_coeff / s1 + other.obs_coeff * other.obs_coeff / s2;
        if precision == 0.0 {
            // both factors are constant in x
            let k = self.center * self.center / s1 + other.center * other.center / s2;
            return Self {
                center: 0.0,
                width: 1.0,
                scale: self.scale * other.scale * libm::exp(-0.5 * k),
                obs_coeff: 0.0,
            };
        }
        let info = self.obs_coeff * self.center / s1 + other.obs_coeff * other.center / s2;
        let cross = self.obs_coeff * other.center - other.obs_coeff * self.center;
        let residual = cross * cross / (s1 * s2 * precision);
        Self {
            center: info / precision,
            width: libm::sqrt(1.0 / precision),
            scale: self.scale * other.scale * libm::exp(-0.5 * residual),
            obs_coeff: 1.0,
        }
    }

    /// Exact maximum over the grid points: the grid point nearest the peak.
    fn grid_max(&self, grid: &Grid) -> f64 {
        if self.obs_coeff == 0.0 || grid.n < 2 {
            return self.eval(grid.point(0));
        }
        let peak = self.center / self.obs_coeff;
        let pos = libm::round((peak - grid.lo) / grid.step());
        let last = (grid.n - 1) as f64;
        let i = if pos.is_nan() { 0.0 } else { pos.clamp(0.0, last) } as usize;
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(grid.n - 1);
        (lo..=hi).map(|k| self.eval(grid.point(k))).fold(0.0, f64::max)
    }
}

/// Storage behind a [`BoundFn`].
#[derive(Clone, Debug, PartialEq)]
pub enum Repr {
    Dense(Vec<f64>),
    Gauss(GaussShape),
}

/// A non-negative bounded function on a finite state space.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundFn {
    space: Arc<StateSpace>,
    repr: Repr,
}

impl BoundFn {
    pub fn dense(space: &Arc<StateSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::InvalidValue(format!(
                "{} values for a space of {} points",
                values.len(),
                space.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidValue(format!("{v} is not a finite non-negative value")));
        }
        Ok(Self {
            space: space.clone(),
            repr: Repr::Dense(values),
        })
    }

    pub fn constant(space: &Arc<StateSpace>, value: f64) -> Result<Self> {
        Self::dense(space, vec![value; space.len()])
    }

    /// The constant function `1`.
    pub fn one(space: &Arc<StateSpace>) -> Self {
        Self {
            space: space.clone(),
            repr: Repr::Dense(vec![1.0; space.len()]),
        }
    }

    pub fn zero(space: &Arc<StateSpace>) -> Self {
        Self {
            space: space.clone(),
            repr: Repr::Dense(vec![0.0; space.len()]),
        }
    }

    pub fn indicator(mask: &SubsetMask) -> Self {
        Self {
            space: mask.space.clone(),
            repr: Repr::Dense(mask.members.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect()),
        }
    }

    /// Gaussian shape on a grid-embedded space.
    pub fn gauss(space: &Arc<StateSpace>, shape: GaussShape) -> Result<Self> {
        if space.grid_embedding().is_none() {
            return Err(Error::NotEmbedded);
        }
        shape.validate()?;
        Ok(Self {
            space: space.clone(),
            repr: Repr::Gauss(shape),
        })
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn repr(&self) -> &Repr {
        &self.repr
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn value(&self, i: usize) -> f64 {
        match &self.repr {
            Repr::Dense(v) => v[i],
            Repr::Gauss(g) => g.eval(self.grid().point(i)),
        }
    }

    /// Tabulated values at every point.
    pub fn values(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Dense(v) => v.clone(),
            Repr::Gauss(_) => (0..self.len()).map(|i| self.value(i)).collect(),
        }
    }

    /// Same function with a dense representation.
    pub fn to_dense(&self) -> Self {
        Self {
            space: self.space.clone(),
            repr: Repr::Dense(self.values()),
        }
    }

    fn grid(&self) -> &Grid {
        self.space
            .grid_embedding()
            .expect("gaussian functions live on grid spaces")
    }

    /// Uniform norm `‖f‖ = max_x f(x)`.
    pub fn sup_norm(&self) -> f64 {
        match &self.repr {
            Repr::Dense(v) => v.iter().copied().fold(0.0, f64::max),
            Repr::Gauss(g) => g.grid_max(self.grid()),
        }
    }

    /// `‖1_A · f‖`, zero when `A` is empty.
    pub fn sup_over(&self, mask: &SubsetMask) -> Result<f64> {
        ensure_same(&self.space, &mask.space)?;
        Ok(self.sup_over_unchecked(mask.members()))
    }

    pub(crate) fn sup_over_unchecked(&self, members: &[bool]) -> f64 {
        match &self.repr {
            Repr::Dense(v) => v
                .iter()
                .zip(members)
                .filter(|(_, &m)| m)
                .map(|(&x, _)| x)
                .fold(0.0, f64::max),
            Repr::Gauss(_) => members
                .iter()
                .enumerate()
                .filter(|(_, &m)| m)
                .map(|(i, _)| self.value(i))
                .fold(0.0, f64::max),
        }
    }

    /// Pointwise product `x ↦ f(x)·g(x)`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        ensure_same(&self.space, &other.space)?;
        let repr = match (&self.repr, &other.repr) {
            (Repr::Gauss(a), Repr::Gauss(b)) => Repr::Gauss(a.product(b)),
            (Repr::Dense(a), Repr::Dense(b)) => Repr::Dense(a.iter().zip(b).map(|(x, y)| x * y).collect()),
            _ => Repr::Dense((0..self.len()).map(|i| self.value(i) * other.value(i)).collect()),
        };
        Ok(Self {
            space: self.space.clone(),
            repr,
        })
    }

    /// `(x, x') ↦ f(x)·g(x')` on `product`, which must be `self.space × other.space`.
    pub fn tensor_on(&self, other: &Self, product: &Arc<StateSpace>) -> Result<Self> {
        let (l, r) = product.factors().ok_or(Error::NotProduct)?;
        ensure_same(l, &self.space)?;
        ensure_same(r, &other.space)?;
        let right = other.values();
        let mut values = Vec::with_capacity(product.len());
        for i in 0..self.len() {
            let a = self.value(i);
            values.extend(right.iter().map(|b| a * b));
        }
        Ok(Self {
            space: product.clone(),
            repr: Repr::Dense(values),
        })
    }

    /// Tensor product on a freshly built product space.
    pub fn tensor(&self, other: &Self) -> Self {
        let product = StateSpace::product(&self.space, &other.space);
        self.tensor_on(other, &product)
            .expect("product space built from the operands")
    }

    /// `f / ‖f‖`, or the constant `1` when `‖f‖` does not exceed `tol`.
    pub fn dagger_with(&self, tol: f64) -> Self {
        let norm = self.sup_norm();
        if norm <= tol {
            return Self::one(&self.space);
        }
        let repr = match &self.repr {
            Repr::Dense(v) => Repr::Dense(v.iter().map(|x| x / norm).collect()),
            Repr::Gauss(g) => Repr::Gauss(GaussShape {
                scale: g.scale / norm,
                ..*g
            }),
        };
        Self {
            space: self.space.clone(),
            repr,
        }
    }

    pub fn dagger(&self) -> Self {
        self.dagger_with(DEFAULT_TOLERANCE)
    }

    /// `y ↦ sup over ξ⁻¹[{y}] of f`, zero on points with an empty fiber.
    pub fn fiber_sup(&self, map: &PointMap) -> Result<Self> {
        ensure_same(&self.space, map.domain())?;
        let mut values = vec![0.0f64; map.codomain().len()];
        for (x, &y) in map.table().iter().enumerate() {
            values[y] = values[y].max(self.value(x));
        }
        Ok(Self {
            space: map.codomain().clone(),
            repr: Repr::Dense(values),
        })
    }

    /// `x ↦ f(ξ(x))`.
    pub fn compose(&self, map: &PointMap) -> Result<Self> {
        ensure_same(&self.space, map.codomain())?;
        let values = map.table().iter().map(|&y| self.value(y)).collect();
        Ok(Self {
            space: map.domain().clone(),
            repr: Repr::Dense(values),
        })
    }

    /// Pointwise equality within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if !same_space(&self.space, &other.space) {
            return false;
        }
        match (&self.repr, &other.repr) {
            (Repr::Dense(a), Repr::Dense(b)) => a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol),
            _ => (0..self.len()).all(|i| (self.value(i) - other.value(i)).abs() <= tol),
        }
    }

    pub fn is_constant(&self, value: f64, tol: f64) -> bool {
        (0..self.len()).all(|i| (self.value(i) - value).abs() <= tol)
    }

    /// Lexicographic order on tabulated values.
    pub fn cmp_values(&self, other: &Self) -> Ordering {
        let n = self.len().min(other.len());
        for i in 0..n {
            match self.value(i).total_cmp(&other.value(i)) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.len().cmp(&other.len())
    }
}
