//! Scaled spectral statistics of corners, radial-boundedness profiles, and
//! audits of the exact corner identities and inequalities.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::matrix::{CornerMatrix, Kind, MatrixPrefix, C64};

/// Relative tolerance used by every audit: `1e-12 * scale`.
pub const AUDIT_RELATIVE_TOLERANCE: f64 = 1e-12;

/// Eigenvalues below this fraction of the Frobenius norm are snapped to zero.
const ZERO_SNAP: f64 = 1e-12;

fn check_finite(c: &CornerMatrix) -> Result<()> {
    if c.entries().iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(LabError::Numerical("corner has non-finite entries; eigensolver not run".into()))
    }
}

/// Eigenvalues of a Hermitian matrix in no particular order.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    m.symmetric_eigenvalues().iter().copied().collect()
}

/// Scaled eigenvalue statistics of one Hermitian corner `h(n)`:
/// `x_i = lambda_i / n`, `gamma1 = tr h(n) / n`, `gamma2 = tr h(n)^2 / n^2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralProfile {
    pub n: usize,
    /// Scaled nonnegative eigenvalues, decreasing.
    pub x_pos: Vec<f64>,
    /// Scaled negative eigenvalues, increasing.
    pub x_neg: Vec<f64>,
    pub gamma1: f64,
    pub gamma2: f64,
}

/// Scaled singular statistics of one complex corner `z(n)`:
/// `x_i = lambda_i / n^2` for the eigenvalues of `z(n)* z(n)`, and
/// `gamma = tr(z(n)* z(n)) / n^2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularProfile {
    pub n: usize,
    /// Decreasing.
    pub x: Vec<f64>,
    pub gamma: f64,
}

pub fn hermitian_profile(c: &CornerMatrix) -> Result<SpectralProfile> {
    if !c.is_hermitian() {
        return Err(LabError::NotHermitian("hermitian_profile needs a Hermitian corner".into()));
    }
    check_finite(c)?;
    let n = c.n();
    let nf = n as f64;
    let fro_sq = c.frobenius_sq();
    let snap = ZERO_SNAP * fro_sq.sqrt();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for lambda in hermitian_eigenvalues(c.entries()) {
        let lambda = if lambda.abs() < snap { 0.0 } else { lambda };
        if lambda >= 0.0 {
            pos.push(lambda / nf);
        } else {
            neg.push(lambda / nf);
        }
    }
    pos.sort_by(|a, b| b.total_cmp(a));
    neg.sort_by(|a, b| a.total_cmp(b));
    Ok(SpectralProfile { n, x_pos: pos, x_neg: neg, gamma1: c.trace().re / nf, gamma2: fro_sq / (nf * nf) })
}

pub fn complex_profile(c: &CornerMatrix) -> Result<SingularProfile> {
    check_finite(c)?;
    let n = c.n();
    let n2 = (n * n) as f64;
    let gram = c.entries().adjoint() * c.entries();
    let mut x: Vec<f64> = hermitian_eigenvalues(&gram).into_iter().map(|l| l.max(0.0) / n2).collect();
    x.sort_by(|a, b| b.total_cmp(a));
    Ok(SingularProfile { n, x, gamma: c.frobenius_sq() / n2 })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScaledProfile {
    Hermitian(SpectralProfile),
    Complex(SingularProfile),
}

impl ScaledProfile {
    pub fn of_corner(c: &CornerMatrix) -> Result<Self> {
        if c.is_hermitian() {
            hermitian_profile(c).map(ScaledProfile::Hermitian)
        } else {
            complex_profile(c).map(ScaledProfile::Complex)
        }
    }

    pub fn n(&self) -> usize {
        match self {
            ScaledProfile::Hermitian(p) => p.n,
            ScaledProfile::Complex(p) => p.n,
        }
    }

    /// `gamma2` for Hermitian corners, `gamma` for complex ones.
    pub fn growth_statistic(&self) -> f64 {
        match self {
            ScaledProfile::Hermitian(p) => p.gamma2,
            ScaledProfile::Complex(p) => p.gamma,
        }
    }

    pub fn gamma1(&self) -> Option<f64> {
        match self {
            ScaledProfile::Hermitian(p) => Some(p.gamma1),
            ScaledProfile::Complex(_) => None,
        }
    }

    /// Largest scaled eigenvalue (`x_1`).
    pub fn x1(&self) -> Option<f64> {
        match self {
            ScaledProfile::Hermitian(p) => p.x_pos.first().copied(),
            ScaledProfile::Complex(p) => p.x.first().copied(),
        }
    }
}

/// Running suprema of the radial-boundedness statistics along a schedule.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RunningSups {
    Hermitian { gamma1_abs: Vec<f64>, gamma2: Vec<f64> },
    Complex { gamma: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialProfile {
    pub n_schedule: Vec<usize>,
    pub profiles: Vec<ScaledProfile>,
    pub sups: RunningSups,
}

impl RadialProfile {
    pub fn from_profiles(profiles: Vec<ScaledProfile>) -> Result<Self> {
        let n_schedule: Vec<usize> = profiles.iter().map(|p| p.n()).collect();
        check_schedule(&n_schedule)?;
        let running = |vals: Vec<f64>| -> Vec<f64> {
            vals.into_iter()
                .scan(f64::NEG_INFINITY, |sup, v| {
                    *sup = sup.max(v);
                    Some(*sup)
                })
                .collect()
        };
        let hermitian = matches!(profiles[0], ScaledProfile::Hermitian(_));
        if profiles.iter().any(|p| matches!(p, ScaledProfile::Hermitian(_)) != hermitian) {
            return Err(LabError::Precondition("profiles mix Hermitian and complex corners".into()));
        }
        let growth = running(profiles.iter().map(|p| p.growth_statistic()).collect());
        let sups = if hermitian {
            let g1 = running(profiles.iter().map(|p| p.gamma1().unwrap_or(0.0).abs()).collect());
            RunningSups::Hermitian { gamma1_abs: g1, gamma2: growth }
        } else {
            RunningSups::Complex { gamma: growth }
        };
        Ok(RadialProfile { n_schedule, profiles, sups })
    }

    pub fn kind(&self) -> Kind {
        match self.sups {
            RunningSups::Hermitian { .. } => Kind::Hermitian,
            RunningSups::Complex { .. } => Kind::Complex,
        }
    }

    /// Running sup of `gamma2` (Hermitian) or `gamma` (complex).
    pub fn running_sup_growth(&self) -> &[f64] {
        match &self.sups {
            RunningSups::Hermitian { gamma2, .. } => gamma2,
            RunningSups::Complex { gamma } => gamma,
        }
    }

    pub fn running_sup_gamma1_abs(&self) -> Option<&[f64]> {
        match &self.sups {
            RunningSups::Hermitian { gamma1_abs, .. } => Some(gamma1_abs),
            RunningSups::Complex { .. } => None,
        }
    }

    /// The statistic sequences that must stay bounded: `|gamma1|` and
    /// `gamma2` for Hermitian points, `gamma` for complex ones.
    fn statistic_sequences(&self) -> Vec<Vec<f64>> {
        let growth = self.profiles.iter().map(|p| p.growth_statistic()).collect();
        match self.kind() {
            Kind::Hermitian => {
                let g1 = self.profiles.iter().map(|p| p.gamma1().unwrap_or(0.0).abs()).collect();
                vec![g1, growth]
            }
            Kind::Complex => vec![growth],
        }
    }
}

pub(crate) fn check_schedule(schedule: &[usize]) -> Result<()> {
    if schedule.is_empty() {
        return Err(LabError::param("n_schedule", "must not be empty"));
    }
    if schedule[0] == 0 {
        return Err(LabError::param("n_schedule", "dimensions must be >= 1"));
    }
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::param("n_schedule", "must be strictly increasing"));
    }
    Ok(())
}

/// Profiles of the corners of `p` along a strictly increasing schedule.
pub fn radial_profile(p: &MatrixPrefix, n_schedule: &[usize]) -> Result<RadialProfile> {
    check_schedule(n_schedule)?;
    p.materialize(*n_schedule.last().expect("non-empty"));
    let profiles = n_schedule
        .par_iter()
        .map(|&n| ScaledProfile::of_corner(&p.corner(n)?))
        .collect::<Result<Vec<_>>>()?;
    RadialProfile::from_profiles(profiles)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    BoundedTrend,
    UnboundedTrend,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::BoundedTrend => "bounded-trend",
            Verdict::UnboundedTrend => "unbounded-trend",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Thresholds for the finite-schedule boundedness heuristic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerdictConfig {
    /// Slope per unit `n` above which a statistic counts as growing.
    pub slope_threshold: f64,
    /// Spread allowed over the last half of the schedule for a Cauchy call.
    pub cauchy_tolerance: f64,
    /// The slope must exceed the threshold by this many standard errors.
    pub confidence_z: f64,
}

impl Default for VerdictConfig {
    fn default() -> Self {
        VerdictConfig { slope_threshold: 0.05, cauchy_tolerance: 0.05, confidence_z: 2.0 }
    }
}

/// Least-squares slope of `y` against `x` and its standard error.
fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let se = if x.len() > 2 { (ssr / (k - 2.0) / sxx).sqrt() } else { 0.0 };
    (slope, se)
}

/// Heuristic call on whether the radial statistics stay bounded.
///
/// No finite schedule decides a supremum over all `n`; this only labels the
/// observed trend.
pub fn boundedness_verdict(rp: &RadialProfile, config: &VerdictConfig) -> Result<Verdict> {
    if rp.n_schedule.len() < 4 {
        return Err(LabError::Precondition(format!(
            "boundedness verdict needs >= 4 schedule points, got {}",
            rp.n_schedule.len()
        )));
    }
    let xs: Vec<f64> = rp.n_schedule.iter().map(|&n| n as f64).collect();
    let sequences = rp.statistic_sequences();
    let growing = sequences.iter().any(|ys| {
        let (slope, se) = ols_slope(&xs, ys);
        slope - config.confidence_z * se > config.slope_threshold
    });
    if growing {
        return Ok(Verdict::UnboundedTrend);
    }
    let half = rp.n_schedule.len() / 2;
    let cauchy = sequences.iter().all(|ys| {
        let tail = &ys[half..];
        let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo <= config.cauchy_tolerance
    });
    Ok(if cauchy { Verdict::BoundedTrend } else { Verdict::Inconclusive })
}

/// Result of one identity or inequality audit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub operation: &'static str,
    pub parameters: String,
    pub lhs: f64,
    pub rhs_terms: Vec<(String, f64)>,
    pub rhs: f64,
    pub scale: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl AuditReport {
    fn equality(operation: &'static str, parameters: String, lhs: f64, terms: Vec<(String, f64)>, summand_max: f64) -> Self {
        let rhs: f64 = terms.iter().map(|t| t.1).sum();
        let scale = terms.iter().map(|t| t.1.abs()).fold(lhs.abs().max(summand_max), f64::max);
        let tolerance = AUDIT_RELATIVE_TOLERANCE * scale;
        let passed = (lhs - rhs).abs() <= tolerance;
        AuditReport { operation, parameters, lhs, rhs_terms: terms, rhs, scale, tolerance, passed }
    }

    fn inequality(operation: &'static str, parameters: String, lhs: f64, terms: Vec<(String, f64)>, summand_max: f64) -> Self {
        let mut r = Self::equality(operation, parameters, lhs, terms, summand_max);
        r.passed = r.lhs <= r.rhs + r.tolerance;
        r
    }

    /// `rhs - lhs`: the slack of an inequality, the defect of an identity.
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }

    /// One structured-text row: operation, parameters, lhs, rhs terms,
    /// pass/fail and tolerance.
    pub fn to_row(&self) -> String {
        let terms: Vec<String> = self.rhs_terms.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!(
            "operation={};parameters={};lhs={};rhs=[{}];result={};tolerance={}",
            self.operation,
            self.parameters,
            self.lhs,
            terms.join(","),
            if self.passed { "pass" } else { "fail" },
            self.tolerance
        )
    }
}

fn max_abs_entry_sq(p: &MatrixPrefix, n: usize) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            best = best.max(p.entry(i, j).norm_sqr());
        }
    }
    best
}

/// `tr h(n) = tr tail(h, m)(n - m) + tr h(m)` for `n > m >= 1`.
pub fn audit_trace_identity(p: &MatrixPrefix, m: usize, n: usize) -> Result<AuditReport> {
    p.require_kind(Kind::Hermitian)?;
    if m == 0 || n <= m {
        return Err(LabError::Precondition(format!("trace identity needs n > m >= 1, got m={m}, n={n}")));
    }
    let lhs = p.trace_window(n).re;
    let tail = p.tail(m).trace_window(n - m).re;
    let head = p.trace_window(m).re;
    let summand_max = (0..n).map(|i| p.entry(i, i).re.abs()).fold(0.0, f64::max);
    Ok(AuditReport::equality(
        "audit_trace_identity",
        format!("m={m};n={n}"),
        lhs,
        vec![("tr_tail".into(), tail), ("tr_head".into(), head)],
        summand_max,
    ))
}

/// `sum_{i,j<=N} |h_ij|^2 <= sum_{i,j in (m,N]} |h_ij|^2
///   + sum_{i,j in (m,N]} |(ǔ^{-1} h ǔ)_ij|^2 + sum_{i,j<=2m} |h_ij|^2`
/// for `N > 2m`.
pub fn audit_frobenius_inequality_h(p: &MatrixPrefix, m: usize, big_n: usize) -> Result<AuditReport> {
    p.require_kind(Kind::Hermitian)?;
    if m == 0 || big_n <= 2 * m {
        return Err(LabError::Precondition(format!("Frobenius audit needs N > 2m, m >= 1; got m={m}, N={big_n}")));
    }
    let lhs = p.frobenius_window(big_n);
    let tail = p.tail(m).frobenius_window(big_n - m);
    let swapped = p.conjugate_check_u(m)?.tail(m).frobenius_window(big_n - m);
    let head = p.frobenius_window(2 * m);
    Ok(AuditReport::inequality(
        "audit_frobenius_inequality_h",
        format!("m={m};N={big_n}"),
        lhs,
        vec![("tail".into(), tail), ("tail_check_u".into(), swapped), ("head_2m".into(), head)],
        max_abs_entry_sq(p, big_n),
    ))
}

/// `tau_n(z) <= tau_2m(z) + tau_n(tail(z, m)) + tau_n(tail(ǔ^{-1} z ǔ, m))`
/// for `n > 3m`, where `tau_n(z) = sum_{i,j<=n} |z_ij|^2`.
pub fn audit_tau_inequality_z(p: &MatrixPrefix, m: usize, n: usize) -> Result<AuditReport> {
    p.require_kind(Kind::Complex)?;
    if m == 0 || n <= 3 * m {
        return Err(LabError::Precondition(format!("tau audit needs n > 3m, m >= 1; got m={m}, n={n}")));
    }
    let lhs = p.frobenius_window(n);
    let head = p.frobenius_window(2 * m);
    let tail = p.tail(m).frobenius_window(n);
    let swapped = p.conjugate_check_u(m)?.tail(m).frobenius_window(n);
    Ok(AuditReport::inequality(
        "audit_tau_inequality_z",
        format!("m={m};n={n}"),
        lhs,
        vec![("tau_2m".into(), head), ("tau_tail".into(), tail), ("tau_tail_check_u".into(), swapped)],
        max_abs_entry_sq(p, n + m),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{self, deterministic_diag};
    use crate::matrix::DiagRule;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn identity_profile() {
        let p = hermitian_profile(&CornerMatrix::identity(4).unwrap()).unwrap();
        assert_eq!(p.gamma1, 1.0);
        assert_eq!(p.gamma2, 0.25);
        assert_eq!(p.x_neg, Vec::<f64>::new());
        assert_eq!(p.x_pos.len(), 4);
        assert!(p.x_pos.iter().all(|&x| close(x, 0.25)));
    }

    #[test]
    fn zero_profile_puts_zeros_on_positive_side() {
        let p = hermitian_profile(&CornerMatrix::zeros(3, true).unwrap()).unwrap();
        assert_eq!(p.x_pos, vec![0.0; 3]);
        assert!(p.x_neg.is_empty());
        assert_eq!((p.gamma1, p.gamma2), (0.0, 0.0));
    }

    #[test]
    fn split_diagonal_profile() {
        let p = hermitian_profile(&CornerMatrix::diag(&[2.0, -2.0]).unwrap()).unwrap();
        assert_eq!(p.x_pos.len(), 1);
        assert!(close(p.x_pos[0], 1.0));
        assert!(close(p.x_neg[0], -1.0));
        assert_eq!((p.gamma1, p.gamma2), (0.0, 2.0));
    }

    #[test]
    fn non_hermitian_rejected() {
        let c = CornerMatrix::zeros(2, false).unwrap();
        assert!(matches!(hermitian_profile(&c), Err(LabError::NotHermitian(_))));
    }

    #[test]
    fn non_finite_rejected() {
        let c = CornerMatrix::diag(&[f64::NAN, 1.0]).unwrap();
        assert!(matches!(hermitian_profile(&c), Err(LabError::Numerical(_))));
        let mut m = DMatrix::from_element(2, 2, C64::new(0.0, 0.0));
        m[(0, 1)] = C64::new(f64::INFINITY, 0.0);
        let c = CornerMatrix::new(m, false).unwrap();
        assert!(matches!(complex_profile(&c), Err(LabError::Numerical(_))));
    }

    #[test]
    fn complex_profiles() {
        let z = complex_profile(&CornerMatrix::zeros(3, false).unwrap()).unwrap();
        assert!(z.x.iter().all(|&x| x == 0.0) && z.gamma == 0.0);
        let i2 = complex_profile(&CornerMatrix::identity(2).unwrap()).unwrap();
        assert!(close(i2.x[0], 0.25) && close(i2.x[1], 0.25));
        assert_eq!(i2.gamma, 0.5);
        let d = complex_profile(&CornerMatrix::diag(&[3.0, 4.0]).unwrap()).unwrap();
        assert!(close(d.x[0], 4.0) && close(d.x[1], 2.25));
        assert_eq!(d.gamma, 6.25);
    }

    #[test]
    fn deterministic_diag_gamma_values() {
        let c = deterministic_diag(DiagRule::Constant(1.75));
        let alt = deterministic_diag(DiagRule::Alternating);
        let lin = deterministic_diag(DiagRule::Index);
        for n in 1..12 {
            let nf = n as f64;
            assert!(close(hermitian_profile(&c.corner(n).unwrap()).unwrap().gamma1, 1.75));
            let a = hermitian_profile(&alt.corner(n).unwrap()).unwrap();
            let expect = if n % 2 == 0 { 0.0 } else { -1.0 / nf };
            assert!(close(a.gamma1, expect));
            assert!(close(a.gamma2, 1.0 / nf));
            let l = hermitian_profile(&lin.corner(n).unwrap()).unwrap();
            assert!(close(l.gamma2, (nf + 1.0) * (2.0 * nf + 1.0) / (6.0 * nf)));
        }
    }

    #[test]
    fn radial_profile_of_scalar_matrix() {
        let c = -1.5;
        let p = MatrixPrefix::scalar(c, Kind::Hermitian);
        let rp = radial_profile(&p, &[1, 2, 4, 8]).unwrap();
        assert_eq!(rp.running_sup_gamma1_abs().unwrap(), &[1.5; 4]);
        // gamma2 = c^2 / n, so the sup sits at the first schedule entry
        assert_eq!(rp.running_sup_growth(), &[c * c; 4]);
        let rp = radial_profile(&p, &[4, 8, 16, 32]).unwrap();
        assert_eq!(rp.running_sup_growth(), &[c * c / 4.0; 4]);
        let unit = MatrixPrefix::scalar(1.0, Kind::Hermitian);
        let rp = radial_profile(&unit, &[4, 8, 16, 32, 64, 128, 256]).unwrap();
        assert_eq!(boundedness_verdict(&rp, &VerdictConfig::default()).unwrap(), Verdict::BoundedTrend);
    }

    #[test]
    fn radial_profile_of_linear_diagonal() {
        let p = deterministic_diag(DiagRule::Index);
        let sched = [4, 8, 16, 32, 64];
        let rp = radial_profile(&p, &sched).unwrap();
        let g2: Vec<f64> = rp.profiles.iter().map(|q| q.growth_statistic()).collect();
        assert!(g2.windows(2).all(|w| w[0] < w[1]));
        for (&n, g) in sched.iter().zip(&g2) {
            let nf = n as f64;
            assert!(close(*g, (nf + 1.0) * (2.0 * nf + 1.0) / (6.0 * nf)));
        }
        assert_eq!(boundedness_verdict(&rp, &VerdictConfig::default()).unwrap(), Verdict::UnboundedTrend);
    }

    #[test]
    fn verdict_needs_four_points() {
        let rp = radial_profile(&MatrixPrefix::identity(Kind::Hermitian), &[1, 2, 3]).unwrap();
        assert!(boundedness_verdict(&rp, &VerdictConfig::default()).is_err());
    }

    #[test]
    fn schedule_validation() {
        let p = MatrixPrefix::zero(Kind::Hermitian);
        assert!(radial_profile(&p, &[]).is_err());
        assert!(radial_profile(&p, &[0, 1]).is_err());
        assert!(radial_profile(&p, &[4, 4]).is_err());
    }

    #[test]
    fn running_sups_nondecreasing() {
        let p = ensembles::gaussian_hermitian(1.0, 77).unwrap();
        let rp = radial_profile(&p, &[1, 2, 3, 5, 8, 13, 21]).unwrap();
        assert!(rp.running_sup_growth().windows(2).all(|w| w[0] <= w[1]));
        assert!(rp.running_sup_gamma1_abs().unwrap().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn trace_identity_examples() {
        let z = audit_trace_identity(&MatrixPrefix::zero(Kind::Hermitian), 1, 4).unwrap();
        assert!(z.passed && z.lhs == 0.0 && z.rhs == 0.0);
        let d = audit_trace_identity(&deterministic_diag(DiagRule::Index), 2, 5).unwrap();
        assert_eq!((d.lhs, d.rhs_terms[0].1, d.rhs_terms[1].1), (15.0, 12.0, 3.0));
        assert!(d.passed);
        let i = audit_trace_identity(&MatrixPrefix::identity(Kind::Hermitian), 3, 10).unwrap();
        assert_eq!((i.lhs, i.rhs_terms[0].1, i.rhs_terms[1].1), (10.0, 7.0, 3.0));
        assert!(audit_trace_identity(&MatrixPrefix::identity(Kind::Hermitian), 3, 3).is_err());
        assert!(audit_trace_identity(&MatrixPrefix::identity(Kind::Complex), 1, 3).is_err());
    }

    #[test]
    fn frobenius_inequality_examples() {
        let z = audit_frobenius_inequality_h(&MatrixPrefix::zero(Kind::Hermitian), 1, 3).unwrap();
        assert!(z.passed && z.lhs == 0.0 && z.rhs == 0.0);
        let p = CornerMatrix::diag(&[1.0, 2.0, 3.0]).unwrap().as_prefix();
        let r = audit_frobenius_inequality_h(&p, 1, 3).unwrap();
        let terms: Vec<f64> = r.rhs_terms.iter().map(|t| t.1).collect();
        assert_eq!(r.lhs, 14.0);
        assert_eq!(terms, vec![13.0, 10.0, 5.0]);
        assert!(r.passed);
        assert!(audit_frobenius_inequality_h(&p, 1, 2).is_err());
    }

    #[test]
    fn tau_inequality_examples() {
        let z = audit_tau_inequality_z(&MatrixPrefix::zero(Kind::Complex), 1, 4).unwrap();
        assert!(z.passed && z.lhs == 0.0);
        let r = audit_tau_inequality_z(&MatrixPrefix::identity(Kind::Complex), 1, 4).unwrap();
        let terms: Vec<f64> = r.rhs_terms.iter().map(|t| t.1).collect();
        assert_eq!(r.lhs, 4.0);
        // tau_2(I) = 2 (two unit diagonal entries)
        assert_eq!(terms, vec![2.0, 4.0, 4.0]);
        assert!(r.passed);
        assert!(audit_tau_inequality_z(&MatrixPrefix::identity(Kind::Complex), 1, 3).is_err());
        assert!(audit_tau_inequality_z(&MatrixPrefix::identity(Kind::Hermitian), 1, 4).is_err());
    }

    #[test]
    fn audit_rows_are_structured() {
        let r = audit_trace_identity(&deterministic_diag(DiagRule::Index), 2, 5).unwrap();
        assert_eq!(
            r.to_row(),
            "operation=audit_trace_identity;parameters=m=2;n=5;lhs=15;rhs=[tr_tail=12,tr_head=3];result=pass;tolerance=0.000000000015"
        );
    }
}
