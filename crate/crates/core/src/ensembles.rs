//! Seeded random prefixes with analytically known scaled statistics.
//!
//! Every sampler is a pure function of its parameters and seed. Entries are
//! drawn from a counter-addressed stream in a fixed canonical order (growing
//! corners, row-major within each new border), so the realized matrix does not
//! depend on which corners were requested first.

use std::sync::RwLock;

use nalgebra::DMatrix;

use crate::error::{LabError, Result};
use crate::matrix::{DiagRule, EntryRule, Kind, MatrixPrefix, Source, C64, ZERO};
use crate::rng::EntryStream;

/// Law of a seeded source.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SeededLaw {
    /// Diagonal `N(0, sigma^2)`, off-diagonal complex with `E|h_ij|^2 = sigma^2`.
    GaussianHermitian { sigma: f64 },
    /// All entries complex Gaussian with `E|z_ij|^2 = sigma^2`.
    GaussianComplex { sigma: f64 },
    /// `h = x v v*` with `v_i` standard complex Gaussians.
    RankOne { x: f64 },
}

impl SeededLaw {
    fn kind(&self) -> Kind {
        match self {
            SeededLaw::GaussianComplex { .. } => Kind::Complex,
            _ => Kind::Hermitian,
        }
    }

    /// Number of stored values needed for an `n x n` corner.
    fn stored_len(&self, n: usize) -> usize {
        match self {
            SeededLaw::GaussianHermitian { .. } => n * (n + 1) / 2,
            SeededLaw::GaussianComplex { .. } => n * n,
            SeededLaw::RankOne { .. } => n,
        }
    }
}

#[derive(Debug, Default)]
struct Memo {
    bound: usize,
    values: Vec<C64>,
}

/// Memoizing seeded entry generator backing random prefixes.
#[derive(Debug)]
pub(crate) struct SeededSource {
    law: SeededLaw,
    seed: u64,
    memo: RwLock<Memo>,
}

impl SeededSource {
    fn new(law: SeededLaw, seed: u64) -> Self {
        SeededSource { law, seed, memo: RwLock::new(Memo::default()) }
    }

    pub(crate) fn law(&self) -> SeededLaw {
        self.law
    }

    pub(crate) fn seed(&self) -> u64 {
        self.seed
    }

    pub(crate) fn bound(&self) -> usize {
        self.memo.read().expect("memo lock poisoned").bound
    }

    pub(crate) fn materialize(&self, n: usize) {
        if self.bound() >= n {
            return;
        }
        let mut memo = self.memo.write().expect("memo lock poisoned");
        // another writer may have filled it meanwhile; values are identical either way
        if memo.bound >= n {
            return;
        }
        let start = memo.values.len();
        let end = self.law.stored_len(n);
        let mut stream = EntryStream::new(self.seed);
        stream.seek(start as u64);
        memo.values.reserve(end - start);
        match self.law {
            SeededLaw::GaussianHermitian { sigma } => {
                let off = sigma * std::f64::consts::FRAC_1_SQRT_2;
                for j in memo.bound..n {
                    for i in 0..=j {
                        let (a, b) = stream.next_pair();
                        let z = if i == j { C64::new(sigma * a, 0.0) } else { C64::new(off * a, off * b) };
                        memo.values.push(z);
                    }
                }
            }
            SeededLaw::GaussianComplex { sigma } => {
                let s = sigma * std::f64::consts::FRAC_1_SQRT_2;
                for _ in start..end {
                    let (a, b) = stream.next_pair();
                    memo.values.push(C64::new(s * a, s * b));
                }
            }
            SeededLaw::RankOne { .. } => {
                for _ in start..end {
                    let (a, b) = stream.next_pair();
                    memo.values.push(C64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2);
                }
            }
        }
        debug_assert_eq!(memo.values.len(), end);
        memo.bound = n;
    }

    fn lookup(law: SeededLaw, values: &[C64], i: usize, j: usize) -> C64 {
        match law {
            SeededLaw::GaussianHermitian { .. } => {
                if i <= j {
                    values[j * (j + 1) / 2 + i]
                } else {
                    values[i * (i + 1) / 2 + j].conj()
                }
            }
            SeededLaw::GaussianComplex { .. } => {
                let b = i.max(j);
                if i < b {
                    values[b * b + i]
                } else {
                    values[b * b + b + j]
                }
            }
            SeededLaw::RankOne { x } => {
                if i == j {
                    C64::new(x * values[i].norm_sqr(), 0.0)
                } else {
                    values[i] * values[j].conj() * x
                }
            }
        }
    }

    pub(crate) fn entry(&self, i: usize, j: usize) -> C64 {
        self.materialize(i.max(j) + 1);
        let memo = self.memo.read().expect("memo lock poisoned");
        Self::lookup(self.law, &memo.values, i, j)
    }

    /// The `n x n` corner read under a single lock. Hermitian laws fill only
    /// the upper triangle; the caller mirrors it.
    pub(crate) fn corner(&self, n: usize) -> DMatrix<C64> {
        self.materialize(n);
        let memo = self.memo.read().expect("memo lock poisoned");
        let mut m = DMatrix::from_element(n, n, ZERO);
        let upper_only = self.law.kind() == Kind::Hermitian;
        for j in 0..n {
            let rows = if upper_only { j + 1 } else { n };
            for i in 0..rows {
                m[(i, j)] = Self::lookup(self.law, &memo.values, i, j);
            }
        }
        m
    }
}

fn check_nonneg(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(LabError::param(name, format!("must be finite and >= 0, got {v}")));
    }
    Ok(())
}

pub(crate) fn seeded(law: SeededLaw, seed: u64) -> MatrixPrefix {
    MatrixPrefix::from_source(law.kind(), Source::Seeded(SeededSource::new(law, seed)))
}

/// Hermitian Gaussian prefix with `E|h_ij|^2 = sigma^2` for every entry.
pub fn gaussian_hermitian(sigma: f64, seed: u64) -> Result<MatrixPrefix> {
    check_nonneg("sigma", sigma)?;
    Ok(seeded(SeededLaw::GaussianHermitian { sigma }, seed))
}

/// Complex Gaussian prefix with `E|z_ij|^2 = sigma^2`.
pub fn gaussian_complex(sigma: f64, seed: u64) -> Result<MatrixPrefix> {
    check_nonneg("sigma", sigma)?;
    Ok(seeded(SeededLaw::GaussianComplex { sigma }, seed))
}

/// Rank-one Hermitian prefix `x v v*`.
pub fn rank_one(x: f64, seed: u64) -> Result<MatrixPrefix> {
    if !x.is_finite() {
        return Err(LabError::param("x", "must be finite"));
    }
    Ok(seeded(SeededLaw::RankOne { x }, seed))
}

pub fn deterministic_diag(rule: DiagRule) -> MatrixPrefix {
    MatrixPrefix::from_rule(Kind::Hermitian, EntryRule::Diag(rule))
}

pub fn sum(p1: &MatrixPrefix, p2: &MatrixPrefix) -> Result<MatrixPrefix> {
    p1.sum(p2)
}
