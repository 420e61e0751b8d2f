//! Lazily materialized points of the infinite matrix spaces and the exact
//! index transformations acting on them.
//!
//! Indices are 0-based throughout the Rust API: `entry(0, 0)` is the top-left
//! entry. Rules that are naturally written with 1-based indices (such as
//! [`DiagRule::Index`], `d_i = i`) say so explicitly.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ensembles::SeededSource;
use crate::error::{LabError, Result};

pub use nalgebra::Complex;

pub type C64 = Complex<f64>;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Which infinite space a point lives in: Hermitian matrices or all complex
/// matrices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    #[default]
    Hermitian,
    Complex,
}

/// A dense `n x n` corner of an infinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CornerMatrix {
    entries: DMatrix<C64>,
    hermitian: bool,
}

impl CornerMatrix {
    /// Wrap a square matrix. With `hermitian = true` the matrix must equal its
    /// conjugate transpose exactly.
    pub fn new(entries: DMatrix<C64>, hermitian: bool) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(LabError::Precondition(format!(
                "corner must be square with n >= 1, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if hermitian {
            for j in 0..n {
                if entries[(j, j)].im != 0.0 {
                    return Err(LabError::NotHermitian(format!("diagonal entry {j} has nonzero imaginary part")));
                }
                for i in 0..j {
                    if entries[(i, j)] != entries[(j, i)].conj() {
                        return Err(LabError::NotHermitian(format!("entries ({i},{j}) and ({j},{i}) are not conjugate")));
                    }
                }
            }
        }
        Ok(CornerMatrix { entries, hermitian })
    }

    /// Build a Hermitian corner from the upper triangle of `m`. The lower
    /// triangle is copied as the conjugate and the diagonal is made real.
    pub fn hermitian_from_upper(mut m: DMatrix<C64>) -> Result<Self> {
        let n = m.nrows();
        if n == 0 || m.ncols() != n {
            return Err(LabError::Precondition("corner must be square with n >= 1".into()));
        }
        for j in 0..n {
            m[(j, j)].im = 0.0;
            for i in 0..j {
                m[(j, i)] = m[(i, j)].conj();
            }
        }
        Ok(CornerMatrix { entries: m, hermitian: true })
    }

    pub fn from_real_rows(rows: &[&[f64]], hermitian: bool) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(LabError::Precondition("rows must form a square array".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j], 0.0)), hermitian)
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let n = values.len();
        Self::new(
            DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(values[i], 0.0) } else { ZERO }),
            true,
        )
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::diag(&vec![1.0; n])
    }

    pub fn zeros(n: usize, hermitian: bool) -> Result<Self> {
        Self::new(DMatrix::from_element(n, n, ZERO), hermitian)
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[(i, j)]
    }

    pub fn trace(&self) -> C64 {
        self.entries.diagonal().iter().sum()
    }

    /// `sum |c_ij|^2`, which equals `tr(c* c)`.
    pub fn frobenius_sq(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Top-left `k x k` block.
    pub fn top_left(&self, k: usize) -> Result<CornerMatrix> {
        if k == 0 || k > self.n() {
            return Err(LabError::Precondition(format!("block size {k} outside 1..={}", self.n())));
        }
        Ok(CornerMatrix { entries: self.entries.view((0, 0), (k, k)).into_owned(), hermitian: self.hermitian })
    }

    /// `true` when the matrix is exactly `c * I` for a real `c`.
    pub fn scalar_value(&self) -> Option<f64> {
        let c = self.entries[(0, 0)];
        if c.im != 0.0 {
            return None;
        }
        let n = self.n();
        for j in 0..n {
            for i in 0..n {
                let expect = if i == j { c } else { ZERO };
                if self.entries[(i, j)] != expect {
                    return None;
                }
            }
        }
        Some(c.re)
    }

    /// Zero-extended embedding as a point of the infinite space.
    pub fn as_prefix(&self) -> MatrixPrefix {
        let kind = if self.hermitian { Kind::Hermitian } else { Kind::Complex };
        MatrixPrefix::from_source(kind, Source::Explicit(self.entries.clone()))
    }
}

/// Diagonal rules `i -> d_i`, evaluated on 1-based indices.
#[derive(Clone)]
pub enum DiagRule {
    Constant(f64),
    /// `d_i = i`
    Index,
    /// `d_i = (-1)^i`
    Alternating,
    Custom(Arc<dyn Fn(usize) -> f64 + Send + Sync>),
}

impl DiagRule {
    pub fn value(&self, index1: usize) -> f64 {
        match self {
            DiagRule::Constant(c) => *c,
            DiagRule::Index => index1 as f64,
            DiagRule::Alternating => {
                if index1.is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                }
            }
            DiagRule::Custom(f) => f(index1),
        }
    }
}

impl fmt::Debug for DiagRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagRule::Constant(c) => write!(f, "Constant({c})"),
            DiagRule::Index => f.write_str("Index"),
            DiagRule::Alternating => f.write_str("Alternating"),
            DiagRule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Deterministic entry rules `(i, j) -> z_ij` (0-based).
#[derive(Clone)]
pub enum EntryRule {
    Zero,
    /// `c * delta_ij`
    Scalar(f64),
    Diag(DiagRule),
    Custom(Arc<dyn Fn(usize, usize) -> C64 + Send + Sync>),
}

impl EntryRule {
    fn eval(&self, i: usize, j: usize) -> C64 {
        match self {
            EntryRule::Zero => ZERO,
            EntryRule::Scalar(c) if i == j => C64::new(*c, 0.0),
            EntryRule::Scalar(_) => ZERO,
            EntryRule::Diag(rule) if i == j => C64::new(rule.value(i + 1), 0.0),
            EntryRule::Diag(_) => ZERO,
            EntryRule::Custom(f) => f(i, j),
        }
    }
}

impl fmt::Debug for EntryRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntryRule::Zero => f.write_str("Zero"),
            EntryRule::Scalar(c) => write!(f, "Scalar({c})"),
            EntryRule::Diag(r) => write!(f, "Diag({r:?})"),
            EntryRule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug)]
pub(crate) enum Source {
    Explicit(DMatrix<C64>),
    Rule(EntryRule),
    Seeded(SeededSource),
    Sum(MatrixPrefix, MatrixPrefix),
    Tail(MatrixPrefix, usize),
    CheckU(MatrixPrefix, CheckU),
    AsComplex(MatrixPrefix),
}

#[derive(Debug)]
struct Node {
    kind: Kind,
    source: Source,
    requested: AtomicUsize,
}

/// A point of `Mat` or `H`, materialized lazily corner by corner.
///
/// Cloning is cheap and clones share the memoized entries.
#[derive(Clone, Debug)]
pub struct MatrixPrefix {
    node: Arc<Node>,
}

impl MatrixPrefix {
    pub(crate) fn from_source(kind: Kind, source: Source) -> Self {
        MatrixPrefix { node: Arc::new(Node { kind, source, requested: AtomicUsize::new(0) }) }
    }

    pub(crate) fn source(&self) -> &Source {
        &self.node.source
    }

    pub fn from_rule(kind: Kind, rule: EntryRule) -> Self {
        Self::from_source(kind, Source::Rule(rule))
    }

    pub fn zero(kind: Kind) -> Self {
        Self::from_rule(kind, EntryRule::Zero)
    }

    pub fn identity(kind: Kind) -> Self {
        Self::scalar(1.0, kind)
    }

    pub fn scalar(c: f64, kind: Kind) -> Self {
        Self::from_rule(kind, EntryRule::Scalar(c))
    }

    pub fn kind(&self) -> Kind {
        self.node.kind
    }

    /// Entry `(i, j)`, 0-based. Hermitian prefixes answer the lower triangle
    /// by conjugating the upper one, so the Hermitian symmetry is exact.
    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.node.requested.fetch_max(i.max(j) + 1, Ordering::Relaxed);
        match self.node.kind {
            Kind::Hermitian if i > j => self.raw(j, i).conj(),
            Kind::Hermitian if i == j => C64::new(self.raw(i, i).re, 0.0),
            _ => self.raw(i, j),
        }
    }

    fn raw(&self, i: usize, j: usize) -> C64 {
        match &self.node.source {
            Source::Explicit(m) => {
                if i < m.nrows() && j < m.ncols() {
                    m[(i, j)]
                } else {
                    ZERO
                }
            }
            Source::Rule(rule) => rule.eval(i, j),
            Source::Seeded(s) => s.entry(i, j),
            Source::Sum(a, b) => a.entry(i, j) + b.entry(i, j),
            Source::Tail(p, m) => p.entry(i + m, j + m),
            Source::CheckU(p, u) => p.entry(u.permute(i), u.permute(j)),
            Source::AsComplex(p) => p.entry(i, j),
        }
    }

    /// Realize every entry with `i, j < n`.
    pub fn materialize(&self, n: usize) {
        self.node.requested.fetch_max(n, Ordering::Relaxed);
        match &self.node.source {
            Source::Explicit(_) | Source::Rule(_) => {}
            Source::Seeded(s) => s.materialize(n),
            Source::Sum(a, b) => {
                a.materialize(n);
                b.materialize(n);
            }
            Source::Tail(p, m) => p.materialize(n + m),
            Source::CheckU(p, u) => p.materialize(n.max(2 * u.m())),
            Source::AsComplex(p) => p.materialize(n),
        }
    }

    /// Largest `n` such that the `n x n` corner has been realized.
    pub fn materialized_bound(&self) -> usize {
        let requested = self.node.requested.load(Ordering::Relaxed);
        match &self.node.source {
            Source::Seeded(s) => s.bound().max(requested),
            _ => requested,
        }
    }

    /// The `n x n` corner.
    pub fn corner(&self, n: usize) -> Result<CornerMatrix> {
        if n == 0 {
            return Err(LabError::Precondition("corner dimension must be >= 1".into()));
        }
        self.materialize(n);
        let hermitian = self.kind() == Kind::Hermitian;
        let entries = match &self.node.source {
            Source::Seeded(s) => s.corner(n),
            _ if hermitian => {
                let mut m = DMatrix::from_element(n, n, ZERO);
                for j in 0..n {
                    for i in 0..=j {
                        m[(i, j)] = self.entry(i, j);
                    }
                }
                m
            }
            _ => DMatrix::from_fn(n, n, |i, j| self.entry(i, j)),
        };
        if hermitian {
            CornerMatrix::hermitian_from_upper(entries)
        } else {
            CornerMatrix::new(entries, false)
        }
    }

    /// Drop the first `m` rows and columns: `tail(m).entry(i, j) = entry(m + i, m + j)`.
    pub fn tail(&self, m: usize) -> MatrixPrefix {
        if m == 0 {
            return self.clone();
        }
        Self::from_source(self.kind(), Source::Tail(self.clone(), m))
    }

    /// Conjugation by the block swap `ǔ` of size `m`, realized as the entry
    /// permutation `(i, j) -> (π(i), π(j))`.
    pub fn conjugate_check_u(&self, m: usize) -> Result<MatrixPrefix> {
        let u = CheckU::new(m)?;
        Ok(Self::from_source(self.kind(), Source::CheckU(self.clone(), u)))
    }

    /// `sum_{i,j < n} |z_ij|^2`.
    pub fn frobenius_window(&self, n: usize) -> f64 {
        self.materialize(n);
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += self.entry(i, j).norm_sqr();
            }
        }
        acc
    }

    /// `sum_{i < n} z_ii`.
    pub fn trace_window(&self, n: usize) -> C64 {
        self.materialize(n);
        (0..n).map(|i| self.entry(i, i)).sum()
    }

    /// Entrywise sum; both operands must be of the same kind.
    pub fn sum(&self, other: &MatrixPrefix) -> Result<MatrixPrefix> {
        if self.kind() != other.kind() {
            return Err(LabError::KindMismatch { expected: self.kind(), found: other.kind() });
        }
        Ok(Self::from_source(self.kind(), Source::Sum(self.clone(), other.clone())))
    }

    /// View a Hermitian point as a point of `Mat`.
    pub fn as_complex(&self) -> MatrixPrefix {
        match self.kind() {
            Kind::Complex => self.clone(),
            Kind::Hermitian => Self::from_source(Kind::Complex, Source::AsComplex(self.clone())),
        }
    }

    pub(crate) fn require_kind(&self, expected: Kind) -> Result<()> {
        if self.kind() != expected {
            return Err(LabError::KindMismatch { expected, found: self.kind() });
        }
        Ok(())
    }
}

/// The involutive permutation unitary swapping index blocks `[0, m)` and
/// `[m, 2m)` and fixing every index `>= 2m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckU {
    m: usize,
}

impl CheckU {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(LabError::param("m", "block size must be >= 1"));
        }
        Ok(CheckU { m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `π(i)` for a 0-based index.
    pub fn permute(&self, i: usize) -> usize {
        let m = self.m;
        if i < m {
            i + m
        } else if i < 2 * m {
            i - m
        } else {
            i
        }
    }

    /// The `n x n` corner of `ǔ` as an explicit matrix (`n >= 2m`).
    pub fn matrix(&self, n: usize) -> Result<DMatrix<C64>> {
        if n < 2 * self.m {
            return Err(LabError::Precondition(format!("n = {n} must be >= 2m = {}", 2 * self.m)));
        }
        Ok(DMatrix::from_fn(n, n, |i, j| if self.permute(j) == i { C64::new(1.0, 0.0) } else { ZERO }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_index() -> MatrixPrefix {
        MatrixPrefix::from_rule(Kind::Hermitian, EntryRule::Diag(DiagRule::Index))
    }

    #[test]
    fn zero_and_identity_corners() {
        let z = MatrixPrefix::zero(Kind::Hermitian).corner(3).unwrap();
        assert_eq!(z, CornerMatrix::zeros(3, true).unwrap());
        let id = MatrixPrefix::identity(Kind::Hermitian).corner(4).unwrap();
        assert_eq!(id, CornerMatrix::identity(4).unwrap());
    }

    #[test]
    fn corner_rejects_zero_dimension() {
        assert!(MatrixPrefix::zero(Kind::Complex).corner(0).is_err());
    }

    #[test]
    fn tail_shifts_indices() {
        let p = diag_index();
        assert_eq!(p.tail(2).entry(0, 0), C64::new(3.0, 0.0));
        let id = MatrixPrefix::identity(Kind::Complex);
        assert_eq!(id.tail(5).corner(6).unwrap(), id.corner(6).unwrap());
        assert_eq!(p.tail(0).corner(4).unwrap(), p.corner(4).unwrap());
    }

    #[test]
    fn check_u_permutation() {
        let u = CheckU::new(1).unwrap();
        assert_eq!((u.permute(0), u.permute(1), u.permute(2)), (1, 0, 2));
        for m in 1..6 {
            let u = CheckU::new(m).unwrap();
            for i in 0..4 * m {
                assert_eq!(u.permute(u.permute(i)), i);
                if i >= 2 * m {
                    assert_eq!(u.permute(i), i);
                }
            }
        }
        assert!(CheckU::new(0).is_err());
    }

    #[test]
    fn check_u_conjugation_examples() {
        let p = diag_index();
        let q = p.conjugate_check_u(1).unwrap();
        assert_eq!(q.entry(0, 0), p.entry(1, 1));
        assert_eq!(q.entry(2, 2), p.entry(2, 2));
        let back = q.conjugate_check_u(1).unwrap();
        assert_eq!(back.corner(5).unwrap(), p.corner(5).unwrap());
    }

    #[test]
    fn check_u_matches_matrix_product() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| (0..6).map(|j| (i * 7 + j * 3) as f64).collect()).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let p = CornerMatrix::from_real_rows(&refs, false).unwrap().as_prefix();
        for m in 1..=3 {
            let u = CheckU::new(m).unwrap().matrix(6).unwrap();
            // ǔ is real symmetric and involutive, so ǔ^{-1} = ǔ
            let expected = &u * p.corner(6).unwrap().entries() * &u;
            let got = p.conjugate_check_u(m).unwrap().corner(6).unwrap();
            assert_eq!(got.entries(), &expected);
        }
    }

    #[test]
    fn frobenius_window_examples() {
        assert_eq!(MatrixPrefix::zero(Kind::Complex).frobenius_window(7), 0.0);
        assert_eq!(MatrixPrefix::identity(Kind::Hermitian).frobenius_window(4), 4.0);
        let p = CornerMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]], false).unwrap().as_prefix();
        // 1 + 4 + 9 + 16
        assert_eq!(p.frobenius_window(2), 30.0);
        assert_eq!(p.frobenius_window(5), 30.0);
    }

    #[test]
    fn explicit_source_zero_extends() {
        let c = CornerMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]], true).unwrap();
        let p = c.as_prefix();
        assert_eq!(p.kind(), Kind::Hermitian);
        assert_eq!(p.entry(2, 0), ZERO);
        assert_eq!(p.entry(1, 5), ZERO);
        assert_eq!(p.corner(3).unwrap().top_left(2).unwrap(), c);
    }

    #[test]
    fn hermitian_check_rejects_asymmetry() {
        assert!(CornerMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]], true).is_err());
        let mut m = DMatrix::from_element(1, 1, ZERO);
        m[(0, 0)] = C64::new(1.0, 0.5);
        assert!(CornerMatrix::new(m, true).is_err());
    }

    #[test]
    fn sum_requires_same_kind() {
        let a = MatrixPrefix::zero(Kind::Hermitian);
        let b = MatrixPrefix::zero(Kind::Complex);
        assert!(matches!(a.sum(&b), Err(LabError::KindMismatch { .. })));
    }

    #[test]
    fn materialized_bound_tracks_requests() {
        let p = diag_index();
        assert_eq!(p.materialized_bound(), 0);
        p.corner(5).unwrap();
        assert!(p.materialized_bound() >= 5);
    }

    #[test]
    fn custom_hermitian_rule_is_symmetrized_exactly() {
        let rule = EntryRule::Custom(Arc::new(|i, j| C64::new((i + 2 * j) as f64, (i * j) as f64 + 1.0)));
        let p = MatrixPrefix::from_rule(Kind::Hermitian, rule);
        let c = p.corner(6).unwrap();
        assert!(CornerMatrix::new(c.entries().clone(), true).is_ok());
    }

    #[test]
    fn scalar_detection() {
        assert_eq!(CornerMatrix::identity(3).unwrap().scalar_value(), Some(1.0));
        assert_eq!(CornerMatrix::diag(&[1.0, 2.0]).unwrap().scalar_value(), None);
    }
}
