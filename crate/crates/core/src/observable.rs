//! Bounded continuous observables that read a finite window of a matrix.
//!
//! Observables are addressed by registry name plus parameters so they can be
//! named in experiment configs:
//!
//! | name               | value                                  |
//! |--------------------|----------------------------------------|
//! | `constant`         | `value`                                |
//! | `coord-re`         | `Re z_ij`, clamped to `[-bound, bound]` |
//! | `coord-im`         | `Im z_ij`, clamped to `[-bound, bound]` |
//! | `inv-one-plus-abs` | `1 / (1 + |z_ij|)`                     |
//! | `psi-distance`     | `1 / (1 + k d_w(x, x0))`               |

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::matrix::{CornerMatrix, C64, ZERO};
use crate::weak::WindowMetric;

pub const DEFAULT_CLAMP: f64 = 1e6;

fn default_clamp() -> f64 {
    DEFAULT_CLAMP
}

fn default_window() -> usize {
    2
}

fn default_k() -> f64 {
    1.0
}

/// Reference point `x0` for distance-based observables.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    #[default]
    Zero,
    Identity,
    /// `c * I`
    Scalar(f64),
}

impl Reference {
    pub fn entry(&self, i: usize, j: usize) -> C64 {
        let c = match self {
            Reference::Zero => return ZERO,
            Reference::Identity => 1.0,
            Reference::Scalar(c) => *c,
        };
        if i == j {
            C64::new(c, 0.0)
        } else {
            ZERO
        }
    }

    fn label(&self) -> String {
        match self {
            Reference::Zero => "zero".into(),
            Reference::Identity => "identity".into(),
            Reference::Scalar(c) => format!("scalar({c})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObservableSpec {
    Constant {
        value: f64,
    },
    CoordRe {
        #[serde(default)]
        i: usize,
        #[serde(default)]
        j: usize,
        #[serde(default = "default_clamp")]
        bound: f64,
    },
    CoordIm {
        #[serde(default)]
        i: usize,
        #[serde(default)]
        j: usize,
        #[serde(default = "default_clamp")]
        bound: f64,
    },
    InvOnePlusAbs {
        #[serde(default)]
        i: usize,
        #[serde(default)]
        j: usize,
    },
    PsiDistance {
        #[serde(default = "default_window")]
        window: usize,
        #[serde(default = "default_k")]
        k: f64,
        #[serde(default)]
        reference: Reference,
    },
}

/// A validated observable: its window, its bound and its body.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    spec: ObservableSpec,
    window: usize,
    bound: f64,
}

impl Observable {
    pub fn new(spec: ObservableSpec) -> Result<Self> {
        let (window, bound) = match &spec {
            ObservableSpec::Constant { value } => {
                if !value.is_finite() {
                    return Err(LabError::param("value", "must be finite"));
                }
                (1, value.abs())
            }
            ObservableSpec::CoordRe { i, j, bound } | ObservableSpec::CoordIm { i, j, bound } => {
                if !(bound.is_finite() && *bound > 0.0) {
                    return Err(LabError::param("bound", "must be finite and > 0"));
                }
                (i.max(j) + 1, *bound)
            }
            ObservableSpec::InvOnePlusAbs { i, j } => (i.max(j) + 1, 1.0),
            ObservableSpec::PsiDistance { window, k, .. } => {
                if *window == 0 {
                    return Err(LabError::param("window", "must be >= 1"));
                }
                if !(k.is_finite() && *k > 0.0) {
                    return Err(LabError::param("k", "must be finite and > 0"));
                }
                (*window, 1.0)
            }
        };
        Ok(Observable { spec, window, bound })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(ObservableSpec::Constant { value })
    }

    pub fn coord_re(i: usize, j: usize, bound: f64) -> Result<Self> {
        Self::new(ObservableSpec::CoordRe { i, j, bound })
    }

    /// `Re h_11` clamped at the default bound.
    pub fn clamped_h11() -> Self {
        Self::coord_re(0, 0, DEFAULT_CLAMP).expect("default clamp is valid")
    }

    pub fn inv_one_plus_abs(i: usize, j: usize) -> Self {
        Self::new(ObservableSpec::InvOnePlusAbs { i, j }).expect("always valid")
    }

    pub fn psi_distance(window: usize, k: f64, reference: Reference) -> Result<Self> {
        Self::new(ObservableSpec::PsiDistance { window, k, reference })
    }

    pub fn spec(&self) -> &ObservableSpec {
        &self.spec
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn name(&self) -> &'static str {
        match self.spec {
            ObservableSpec::Constant { .. } => "constant",
            ObservableSpec::CoordRe { .. } => "coord-re",
            ObservableSpec::CoordIm { .. } => "coord-im",
            ObservableSpec::InvOnePlusAbs { .. } => "inv-one-plus-abs",
            ObservableSpec::PsiDistance { .. } => "psi-distance",
        }
    }

    /// Name with parameters, stable across runs.
    pub fn label(&self) -> String {
        match &self.spec {
            ObservableSpec::Constant { value } => format!("constant(value={value})"),
            ObservableSpec::CoordRe { i, j, bound } => format!("coord-re(i={i};j={j};bound={bound})"),
            ObservableSpec::CoordIm { i, j, bound } => format!("coord-im(i={i};j={j};bound={bound})"),
            ObservableSpec::InvOnePlusAbs { i, j } => format!("inv-one-plus-abs(i={i};j={j})"),
            ObservableSpec::PsiDistance { window, k, reference } => {
                format!("psi-distance(window={window};k={k};reference={})", reference.label())
            }
        }
    }

    /// Whether the body is strictly positive everywhere.
    pub fn is_strictly_positive(&self) -> bool {
        match &self.spec {
            ObservableSpec::Constant { value } => *value > 0.0,
            ObservableSpec::CoordRe { .. } | ObservableSpec::CoordIm { .. } => false,
            ObservableSpec::InvOnePlusAbs { .. } | ObservableSpec::PsiDistance { .. } => true,
        }
    }

    /// Evaluate on a corner of dimension at least `window`; entries outside
    /// the window are never read.
    pub fn evaluate(&self, c: &CornerMatrix) -> Result<f64> {
        if c.n() < self.window {
            return Err(LabError::WindowTooLarge { window: self.window, n: c.n() });
        }
        Ok(match &self.spec {
            ObservableSpec::Constant { value } => *value,
            ObservableSpec::CoordRe { i, j, bound } => c.get(*i, *j).re.clamp(-bound, *bound),
            ObservableSpec::CoordIm { i, j, bound } => c.get(*i, *j).im.clamp(-bound, *bound),
            ObservableSpec::InvOnePlusAbs { i, j } => 1.0 / (1.0 + c.get(*i, *j).norm()),
            ObservableSpec::PsiDistance { window, k, reference } => {
                let d = WindowMetric::new(*window)?.distance_to(c, reference)?;
                1.0 / (1.0 + k * d)
            }
        })
    }
}
