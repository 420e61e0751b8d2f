//! Structured-text descriptors for prefixes, used verbatim in experiment
//! configs: `{ name = "gaussian_hermitian", sigma = 1.0, seed = 7 }`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ensembles::{self, SeededLaw};
use crate::error::{LabError, Result};
use crate::matrix::{CornerMatrix, DiagRule, EntryRule, Kind, MatrixPrefix, Source, C64};
use crate::rng::mix64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum DiagRuleSpec {
    Constant { c: f64 },
    Index,
    Alternating,
}

impl From<&DiagRuleSpec> for DiagRule {
    fn from(spec: &DiagRuleSpec) -> Self {
        match spec {
            DiagRuleSpec::Constant { c } => DiagRule::Constant(*c),
            DiagRuleSpec::Index => DiagRule::Index,
            DiagRuleSpec::Alternating => DiagRule::Alternating,
        }
    }
}

/// Serializable description of a [`MatrixPrefix`].
///
/// Random leaves without a `seed` draw one from the base seed handed to
/// [`PrefixDescriptor::build`], mixed with the leaf's position in the tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum PrefixDescriptor {
    Zero {
        #[serde(default)]
        kind: Kind,
    },
    Scalar {
        c: f64,
        #[serde(default)]
        kind: Kind,
    },
    DeterministicDiag {
        rule: DiagRuleSpec,
        #[serde(default)]
        kind: Kind,
    },
    Explicit {
        kind: Kind,
        re: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<Vec<f64>>>,
    },
    GaussianHermitian {
        sigma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    GaussianComplex {
        sigma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    RankOne {
        x: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Sum {
        terms: Vec<PrefixDescriptor>,
    },
    Tail {
        m: usize,
        of: Box<PrefixDescriptor>,
    },
    CheckU {
        m: usize,
        of: Box<PrefixDescriptor>,
    },
    AsComplex {
        of: Box<PrefixDescriptor>,
    },
}

impl PrefixDescriptor {
    pub fn kind(&self) -> Kind {
        match self {
            PrefixDescriptor::Zero { kind }
            | PrefixDescriptor::Scalar { kind, .. }
            | PrefixDescriptor::DeterministicDiag { kind, .. }
            | PrefixDescriptor::Explicit { kind, .. } => *kind,
            PrefixDescriptor::GaussianHermitian { .. } | PrefixDescriptor::RankOne { .. } => Kind::Hermitian,
            PrefixDescriptor::GaussianComplex { .. } | PrefixDescriptor::AsComplex { .. } => Kind::Complex,
            PrefixDescriptor::Sum { terms } => terms.first().map(|t| t.kind()).unwrap_or_default(),
            PrefixDescriptor::Tail { of, .. } | PrefixDescriptor::CheckU { of, .. } => of.kind(),
        }
    }

    /// Short label for tables, e.g. `gaussian_hermitian(sigma=1)`.
    pub fn label(&self) -> String {
        match self {
            PrefixDescriptor::Zero { kind } => format!("zero({kind:?})").to_lowercase(),
            PrefixDescriptor::Scalar { c, .. } => format!("scalar(c={c})"),
            PrefixDescriptor::DeterministicDiag { rule, .. } => match rule {
                DiagRuleSpec::Constant { c } => format!("diag(constant={c})"),
                DiagRuleSpec::Index => "diag(index)".into(),
                DiagRuleSpec::Alternating => "diag(alternating)".into(),
            },
            PrefixDescriptor::Explicit { re, .. } => format!("explicit({}x{})", re.len(), re.len()),
            PrefixDescriptor::GaussianHermitian { sigma, .. } => format!("gaussian_hermitian(sigma={sigma})"),
            PrefixDescriptor::GaussianComplex { sigma, .. } => format!("gaussian_complex(sigma={sigma})"),
            PrefixDescriptor::RankOne { x, .. } => format!("rank_one(x={x})"),
            PrefixDescriptor::Sum { terms } => {
                let parts: Vec<_> = terms.iter().map(|t| t.label()).collect();
                format!("sum({})", parts.join("+"))
            }
            PrefixDescriptor::Tail { m, of } => format!("tail(m={m};{})", of.label()),
            PrefixDescriptor::CheckU { m, of } => format!("check_u(m={m};{})", of.label()),
            PrefixDescriptor::AsComplex { of } => format!("as_complex({})", of.label()),
        }
    }

    pub fn build(&self, base_seed: u64) -> Result<MatrixPrefix> {
        self.build_at(base_seed, 0)
    }

    fn build_at(&self, base_seed: u64, path: u64) -> Result<MatrixPrefix> {
        let leaf_seed = |seed: &Option<u64>| seed.unwrap_or_else(|| mix64(base_seed ^ mix64(path)));
        Ok(match self {
            PrefixDescriptor::Zero { kind } => MatrixPrefix::zero(*kind),
            PrefixDescriptor::Scalar { c, kind } => MatrixPrefix::scalar(*c, *kind),
            PrefixDescriptor::DeterministicDiag { rule, kind } => {
                MatrixPrefix::from_rule(*kind, EntryRule::Diag(rule.into()))
            }
            PrefixDescriptor::Explicit { kind, re, im } => explicit(*kind, re, im.as_deref())?.as_prefix(),
            PrefixDescriptor::GaussianHermitian { sigma, seed } => ensembles::gaussian_hermitian(*sigma, leaf_seed(seed))?,
            PrefixDescriptor::GaussianComplex { sigma, seed } => ensembles::gaussian_complex(*sigma, leaf_seed(seed))?,
            PrefixDescriptor::RankOne { x, seed } => ensembles::rank_one(*x, leaf_seed(seed))?,
            PrefixDescriptor::Sum { terms } => {
                let mut built = terms
                    .iter()
                    .enumerate()
                    .map(|(k, t)| t.build_at(base_seed, mix64(path ^ (k as u64 + 1))));
                let first = built.next().ok_or_else(|| LabError::param("terms", "sum needs at least one term"))??;
                built.try_fold(first, |acc, t| acc.sum(&t?))?
            }
            PrefixDescriptor::Tail { m, of } => of.build_at(base_seed, path)?.tail(*m),
            PrefixDescriptor::CheckU { m, of } => of.build_at(base_seed, path)?.conjugate_check_u(*m)?,
            PrefixDescriptor::AsComplex { of } => of.build_at(base_seed, path)?.as_complex(),
        })
    }
}

fn explicit(kind: Kind, re: &[Vec<f64>], im: Option<&[Vec<f64>]>) -> Result<CornerMatrix> {
    let n = re.len();
    let square = |rows: &[Vec<f64>]| rows.len() == n && rows.iter().all(|r| r.len() == n);
    if n == 0 || !square(re) || !im.is_none_or(square) {
        return Err(LabError::param("re", "explicit entries must form a non-empty square array"));
    }
    let m = DMatrix::from_fn(n, n, |i, j| C64::new(re[i][j], im.map_or(0.0, |v| v[i][j])));
    CornerMatrix::new(m, kind == Kind::Hermitian)
}

impl MatrixPrefix {
    /// Descriptor that rebuilds this prefix, or `None` for custom closures.
    pub fn descriptor(&self) -> Option<PrefixDescriptor> {
        let kind = self.kind();
        Some(match self.source() {
            Source::Explicit(m) => {
                let n = m.nrows();
                let re = (0..n).map(|i| (0..n).map(|j| m[(i, j)].re).collect()).collect();
                let has_im = m.iter().any(|z| z.im != 0.0);
                let im = has_im.then(|| (0..n).map(|i| (0..n).map(|j| m[(i, j)].im).collect()).collect());
                PrefixDescriptor::Explicit { kind, re, im }
            }
            Source::Rule(EntryRule::Zero) => PrefixDescriptor::Zero { kind },
            Source::Rule(EntryRule::Scalar(c)) => PrefixDescriptor::Scalar { c: *c, kind },
            Source::Rule(EntryRule::Diag(rule)) => {
                let rule = match rule {
                    DiagRule::Constant(c) => DiagRuleSpec::Constant { c: *c },
                    DiagRule::Index => DiagRuleSpec::Index,
                    DiagRule::Alternating => DiagRuleSpec::Alternating,
                    DiagRule::Custom(_) => return None,
                };
                PrefixDescriptor::DeterministicDiag { rule, kind }
            }
            Source::Rule(EntryRule::Custom(_)) => return None,
            Source::Seeded(s) => {
                let seed = Some(s.seed());
                match s.law() {
                    SeededLaw::GaussianHermitian { sigma } => PrefixDescriptor::GaussianHermitian { sigma, seed },
                    SeededLaw::GaussianComplex { sigma } => PrefixDescriptor::GaussianComplex { sigma, seed },
                    SeededLaw::RankOne { x } => PrefixDescriptor::RankOne { x, seed },
                }
            }
            Source::Sum(a, b) => {
                let mut terms = match a.descriptor()? {
                    PrefixDescriptor::Sum { terms } => terms,
                    other => vec![other],
                };
                terms.push(b.descriptor()?);
                PrefixDescriptor::Sum { terms }
            }
            Source::Tail(p, m) => PrefixDescriptor::Tail { m: *m, of: Box::new(p.descriptor()?) },
            Source::CheckU(p, u) => PrefixDescriptor::CheckU { m: u.m(), of: Box::new(p.descriptor()?) },
            Source::AsComplex(p) => PrefixDescriptor::AsComplex { of: Box::new(p.descriptor()?) },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_toml_descriptor() {
        let d: PrefixDescriptor = toml::from_str(
            r#"
            name = "sum"
            [[terms]]
            name = "scalar"
            c = 2.0
            [[terms]]
            name = "gaussian_hermitian"
            sigma = 1.0
            seed = 7
            [[terms]]
            name = "rank_one"
            x = 3.0
            "#,
        )
        .unwrap();
        let p = d.build(11).unwrap();
        assert_eq!(p.kind(), Kind::Hermitian);
        let again = d.build(11).unwrap();
        assert_eq!(p.corner(9).unwrap(), again.corner(9).unwrap());
        // explicit seed pins the term; the unseeded term follows the base seed
        let other = d.build(12).unwrap();
        assert_ne!(p.corner(9).unwrap(), other.corner(9).unwrap());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let r: std::result::Result<PrefixDescriptor, _> = toml::from_str("name = \"rank_one\"\nx = 1.0\nsigma = 2.0\n");
        assert!(r.is_err());
    }

    #[test]
    fn descriptor_round_trip_rebuilds_entries() {
        let p = ensembles::gaussian_hermitian(1.0, 3)
            .unwrap()
            .sum(&MatrixPrefix::scalar(0.5, Kind::Hermitian))
            .unwrap()
            .conjugate_check_u(2)
            .unwrap()
            .tail(1);
        let d = p.descriptor().unwrap();
        let text = toml::to_string(&d).unwrap();
        let back: PrefixDescriptor = toml::from_str(&text).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.build(999).unwrap().corner(7).unwrap(), p.corner(7).unwrap());
    }

    #[test]
    fn empty_sum_is_an_error() {
        assert!(PrefixDescriptor::Sum { terms: vec![] }.build(0).is_err());
    }
}
