//! Weak-topology diagnostics: one-dimensional distances between empirical
//! pushforwards, the product-space window metric, and the recurrence and
//! precompactness estimators for sequences of orbital measures.
//!
//! Weak convergence on the infinite product space is probed through scalar
//! observables: each orbital measure is pushed forward to the real line by an
//! [`Observable`] and compared there. That is a projection of the weak
//! topology, not the full metric on measures.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::haar::{orbital_values, OrbitalMean, OrbitalSampler};
use crate::matrix::{CornerMatrix, MatrixPrefix};
use crate::observable::{Observable, Reference};
use crate::rng::task_rng;
use crate::spectral::check_schedule;

/// A finite sample of real values, kept sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    samples: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(LabError::param("samples", "empirical measure needs at least one sample"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(LabError::param("samples", "values must be finite"));
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalMeasure { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn count(&self) -> usize {
        self.samples.len()
    }

    pub fn min(&self) -> f64 {
        self.samples[0]
    }

    pub fn max(&self) -> f64 {
        self.samples[self.samples.len() - 1]
    }

    /// `F(x) = #{v <= x} / count`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|&v| v <= x) as f64 / self.count() as f64
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.count() as f64
    }
}

/// Wasserstein-1 distance between two empirical measures on the line,
/// `∫ |F_a - F_b| dx`.
pub fn w1_distance(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> f64 {
    let (xa, xb) = (a.samples(), b.samples());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut total = 0.0;
    let mut x = xa[0].min(xb[0]);
    while ia < xa.len() || ib < xb.len() {
        while ia < xa.len() && xa[ia] <= x {
            ia += 1;
        }
        while ib < xb.len() && xb[ib] <= x {
            ib += 1;
        }
        let next = match (xa.get(ia), xb.get(ib)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => break,
        };
        total += (ia as f64 / na - ib as f64 / nb).abs() * (next - x);
        x = next;
    }
    total
}

/// Default Lévy-Prohorov grid step: `1e-3` of the pooled sample range, the
/// range capped at 1 since the distance never exceeds 1.
pub fn default_lp_grid(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> f64 {
    let range = a.max().max(b.max()) - a.min().min(b.min());
    if range > 0.0 {
        1e-3 * range.min(1.0)
    } else {
        1e-3
    }
}

fn levy_condition_holds(a: &EmpiricalMeasure, b: &EmpiricalMeasure, eps: f64) -> bool {
    // F_a(x - eps) - eps <= F_b(x) <= F_a(x + eps) + eps for all x. The gap in
    // each inequality only widens at jumps of the left-hand CDF, so it is
    // enough to test at those sample points.
    let one_side = |p: &EmpiricalMeasure, q: &EmpiricalMeasure| {
        p.samples().iter().all(|&y| p.cdf(y) - eps <= q.cdf(y + eps))
    };
    one_side(a, b) && one_side(b, a)
}

/// Smallest `eps` on the grid `{0, step, 2 step, ...}` (capped at 1) with
/// `F_a(x - eps) - eps <= F_b(x) <= F_a(x + eps) + eps` for every `x`.
pub fn levy_prohorov_estimate(a: &EmpiricalMeasure, b: &EmpiricalMeasure, grid: f64) -> Result<f64> {
    if !(grid.is_finite() && grid > 0.0) {
        return Err(LabError::param("grid", "resolution must be finite and > 0"));
    }
    let eps_at = |k: u64| (k as f64 * grid).min(1.0);
    let top = (1.0 / grid).ceil() as u64;
    let (mut lo, mut hi) = (0u64, top);
    if levy_condition_holds(a, b, 0.0) {
        return Ok(0.0);
    }
    // invariant: condition fails at lo, holds at hi
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if levy_condition_holds(a, b, eps_at(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(eps_at(hi))
}

/// Product-space metric restricted to the top-left `window x window` block:
/// `d(a, b) = sum 2^{-i-j} |a_ij - b_ij| / (1 + |a_ij - b_ij|)` over 1-based
/// `i, j <= window`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowMetric {
    window: usize,
}

impl WindowMetric {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(LabError::param("window", "must be >= 1"));
        }
        Ok(WindowMetric { window })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    fn accumulate(&self, mut diff: impl FnMut(usize, usize) -> f64) -> f64 {
        let mut d = 0.0;
        for i in 0..self.window {
            for j in 0..self.window {
                let t = diff(i, j);
                d += (0.5f64).powi((i + j + 2) as i32) * t / (1.0 + t);
            }
        }
        d
    }

    fn check(&self, c: &CornerMatrix) -> Result<()> {
        if c.n() < self.window {
            return Err(LabError::WindowTooLarge { window: self.window, n: c.n() });
        }
        Ok(())
    }

    pub fn distance(&self, a: &CornerMatrix, b: &CornerMatrix) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.accumulate(|i, j| (a.get(i, j) - b.get(i, j)).norm()))
    }

    pub fn distance_to(&self, a: &CornerMatrix, reference: &Reference) -> Result<f64> {
        self.check(a)?;
        Ok(self.accumulate(|i, j| (a.get(i, j) - reference.entry(i, j)).norm()))
    }
}

/// `f_k(x) = 1 / (1 + k d_w(x, x0))` for `x0 in {0, I}` and `k = 1..=count`.
pub fn default_test_family(window: usize, count: usize) -> Result<Vec<Observable>> {
    if count == 0 {
        return Err(LabError::param("count", "must be >= 1"));
    }
    let mut family = Vec::with_capacity(2 * count);
    for reference in [Reference::Zero, Reference::Identity] {
        for k in 1..=count {
            family.push(Observable::psi_distance(window, k as f64, reference)?);
        }
    }
    Ok(family)
}

fn check_window(f: &Observable, n_schedule: &[usize]) -> Result<()> {
    check_schedule(n_schedule)?;
    if f.window() > n_schedule[0] {
        return Err(LabError::WindowTooLarge { window: f.window(), n: n_schedule[0] });
    }
    Ok(())
}

/// Orbital values of `f` at each `n`, each `n` on its own stream derived from
/// `seed`, so the result does not depend on evaluation order or threads.
fn pushforwards(
    p: &MatrixPrefix,
    f: &Observable,
    n_schedule: &[usize],
    samples: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    p.materialize(*n_schedule.last().expect("schedule checked"));
    n_schedule
        .par_iter()
        .map(|&n| {
            let sampler = OrbitalSampler::new(p, n)?;
            orbital_values(f, &sampler, samples, &mut task_rng(seed, n as u64))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecurrenceEstimate {
    pub n_schedule: Vec<usize>,
    pub means: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub inf: f64,
}

/// Orbital averages of a strictly positive observable along the schedule and
/// their infimum. A finite family of observables only under-approximates
/// weak recurrence.
pub fn recurrence_estimate(
    p: &MatrixPrefix,
    f: &Observable,
    n_schedule: &[usize],
    samples: usize,
    seed: u64,
) -> Result<RecurrenceEstimate> {
    if !f.is_strictly_positive() {
        return Err(LabError::NonPositiveObservable(f.label()));
    }
    check_window(f, n_schedule)?;
    let values = pushforwards(p, f, n_schedule, samples, seed)?;
    let stats: Vec<OrbitalMean> = values.iter().map(|v| OrbitalMean::from_values(v)).collect();
    let means: Vec<f64> = stats.iter().map(|s| s.mean).collect();
    let inf = means.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(RecurrenceEstimate {
        n_schedule: n_schedule.to_vec(),
        stderrs: stats.iter().map(|s| s.stderr).collect(),
        means,
        inf,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceVerdict {
    CauchyTrend,
    Escaping,
    Inconclusive,
}

impl ConvergenceVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConvergenceVerdict::CauchyTrend => "cauchy-trend",
            ConvergenceVerdict::Escaping => "escaping",
            ConvergenceVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrecompactnessConfig {
    /// Cauchy tolerance is `max(cauchy_floor, cauchy_stderr_multiple * pooled stderr)`.
    pub cauchy_floor: f64,
    pub cauchy_stderr_multiple: f64,
    /// Consecutive increases of the distance to the first measure needed to
    /// call the sequence escaping.
    pub escape_run: usize,
    /// Each increase must exceed this many pooled standard errors.
    pub escape_stderr_multiple: f64,
}

impl Default for PrecompactnessConfig {
    fn default() -> Self {
        PrecompactnessConfig {
            cauchy_floor: 0.02,
            cauchy_stderr_multiple: 5.0,
            escape_run: 3,
            escape_stderr_multiple: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrecompactnessReport {
    pub n_schedule: Vec<usize>,
    pub measures: Vec<EmpiricalMeasure>,
    pub stderrs: Vec<f64>,
    /// Pairwise W1 distances, indexed like the schedule.
    pub pairwise: Vec<Vec<f64>>,
    pub pooled_stderr: f64,
    pub cauchy_tolerance: f64,
    pub verdict: ConvergenceVerdict,
}

impl PrecompactnessReport {
    pub fn distance(&self, n_a: usize, n_b: usize) -> Option<f64> {
        let ia = self.n_schedule.iter().position(|&n| n == n_a)?;
        let ib = self.n_schedule.iter().position(|&n| n == n_b)?;
        Some(self.pairwise[ia][ib])
    }
}

/// Pushforwards of the orbital measures under `f`, their pairwise W1
/// distances, and a heuristic Cauchy / escaping call.
pub fn precompactness_diagnostic(
    p: &MatrixPrefix,
    f: &Observable,
    n_schedule: &[usize],
    samples: usize,
    seed: u64,
    config: &PrecompactnessConfig,
) -> Result<PrecompactnessReport> {
    check_window(f, n_schedule)?;
    if n_schedule.len() < 2 {
        return Err(LabError::param("n_schedule", "precompactness diagnostic needs >= 2 dimensions"));
    }
    let values = pushforwards(p, f, n_schedule, samples, seed)?;
    let stderrs: Vec<f64> = values.iter().map(|v| OrbitalMean::from_values(v).stderr).collect();
    let measures = values.into_iter().map(EmpiricalMeasure::new).collect::<Result<Vec<_>>>()?;
    let k = measures.len();
    let mut pairwise = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let d = w1_distance(&measures[i], &measures[j]);
            pairwise[i][j] = d;
            pairwise[j][i] = d;
        }
    }
    let pooled_stderr = (stderrs.iter().map(|s| s * s).sum::<f64>() / k as f64).sqrt();
    let cauchy_tolerance = config.cauchy_floor.max(config.cauchy_stderr_multiple * pooled_stderr);

    let half = k / 2;
    let cauchy = (half..k).all(|i| (half..k).all(|j| pairwise[i][j] < cauchy_tolerance));
    let verdict = if cauchy {
        ConvergenceVerdict::CauchyTrend
    } else {
        let step = config.escape_stderr_multiple * pooled_stderr;
        let from_first: Vec<f64> = (1..k).map(|j| pairwise[0][j]).collect();
        let mut run = 0;
        let mut longest = 0;
        for w in from_first.windows(2) {
            if w[1] - w[0] > step {
                run += 1;
                longest = longest.max(run);
            } else {
                run = 0;
            }
        }
        if longest >= config.escape_run {
            ConvergenceVerdict::Escaping
        } else {
            ConvergenceVerdict::Inconclusive
        }
    };
    Ok(PrecompactnessReport {
        n_schedule: n_schedule.to_vec(),
        measures,
        stderrs,
        pairwise,
        pooled_stderr,
        cauchy_tolerance,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::deterministic_diag;
    use crate::matrix::{DiagRule, Kind};

    fn m(v: &[f64]) -> EmpiricalMeasure {
        EmpiricalMeasure::new(v.to_vec()).unwrap()
    }

    #[test]
    fn w1_examples() {
        assert_eq!(w1_distance(&m(&[0.3, 1.0, -2.0]), &m(&[-2.0, 1.0, 0.3])), 0.0);
        assert_eq!(w1_distance(&m(&[0.0]), &m(&[1.0])), 1.0);
        assert_eq!(w1_distance(&m(&[0.0, 1.0]), &m(&[0.0, 0.0])), 0.5);
        // unequal counts: ∫|F_a - F_b| with F_a = 1{x>=0}, F_b jumps 1/3 at 0, 1, 2
        assert!((w1_distance(&m(&[0.0]), &m(&[0.0, 1.0, 2.0])) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empirical_measure_validation() {
        assert!(EmpiricalMeasure::new(vec![]).is_err());
        assert!(EmpiricalMeasure::new(vec![1.0, f64::NAN]).is_err());
        let e = m(&[3.0, 1.0, 2.0]);
        assert_eq!(e.samples(), &[1.0, 2.0, 3.0]);
        assert_eq!(e.cdf(2.0), 2.0 / 3.0);
    }

    #[test]
    fn lp_examples() {
        let g = 1e-3;
        assert_eq!(levy_prohorov_estimate(&m(&[0.1, 0.5]), &m(&[0.5, 0.1]), g).unwrap(), 0.0);
        assert_eq!(levy_prohorov_estimate(&m(&[0.0]), &m(&[1.0]), g).unwrap(), 1.0);
        assert_eq!(levy_prohorov_estimate(&m(&[0.0]), &m(&[5.0]), g).unwrap(), 1.0);
        let d = levy_prohorov_estimate(&m(&[0.0]), &m(&[0.3]), g).unwrap();
        assert!((d - 0.3).abs() <= g, "{d}");
        assert!(levy_prohorov_estimate(&m(&[0.0]), &m(&[0.3]), 0.0).is_err());
    }

    #[test]
    fn default_grid_uses_range() {
        assert_eq!(default_lp_grid(&m(&[0.0]), &m(&[0.5])), 0.0005);
        assert_eq!(default_lp_grid(&m(&[0.0]), &m(&[0.0])), 1e-3);
        assert_eq!(default_lp_grid(&m(&[0.0]), &m(&[40.0])), 1e-3);
    }

    #[test]
    fn window_metric_basics() {
        let wm = WindowMetric::new(2).unwrap();
        let i = CornerMatrix::identity(3).unwrap();
        let z = CornerMatrix::zeros(3, true).unwrap();
        assert_eq!(wm.distance(&i, &i).unwrap(), 0.0);
        // diagonal weights 2^-2 and 2^-4, each term 1/(1+1)
        assert_eq!(wm.distance(&i, &z).unwrap(), 0.5 * (0.25 + 0.0625));
        assert_eq!(wm.distance_to(&i, &Reference::Identity).unwrap(), 0.0);
        assert!(WindowMetric::new(4).unwrap().distance(&i, &z).is_err());
        assert!(WindowMetric::new(0).is_err());
    }

    #[test]
    fn default_family_properties() {
        let fam = default_test_family(2, 3).unwrap();
        assert_eq!(fam.len(), 6);
        let zero = CornerMatrix::zeros(2, true).unwrap();
        let id = CornerMatrix::identity(2).unwrap();
        let other = CornerMatrix::diag(&[0.4, -1.0]).unwrap();
        for f in &fam {
            assert!(f.is_strictly_positive());
            assert_eq!(f.bound(), 1.0);
            let v = f.evaluate(&other).unwrap();
            assert!(v > 0.0 && v <= 1.0);
        }
        assert_eq!(fam[0].evaluate(&zero).unwrap(), 1.0);
        assert_eq!(fam[3].evaluate(&id).unwrap(), 1.0);
        for block in fam.chunks(3) {
            let vals: Vec<f64> = block.iter().map(|f| f.evaluate(&other).unwrap()).collect();
            assert!(vals.windows(2).all(|w| w[1] < w[0]));
        }
        assert!(default_test_family(2, 0).is_err());
    }

    #[test]
    fn recurrence_of_constant_and_fixed_point() {
        let p = deterministic_diag(DiagRule::Index);
        let one = Observable::constant(1.0).unwrap();
        let r = recurrence_estimate(&p, &one, &[2, 4, 8], 20, 1).unwrap();
        assert_eq!(r.inf, 1.0);
        let c = MatrixPrefix::scalar(2.0, Kind::Hermitian);
        let psi = Observable::psi_distance(2, 1.0, Reference::Scalar(2.0)).unwrap();
        let r = recurrence_estimate(&c, &psi, &[2, 4, 8], 20, 1).unwrap();
        assert_eq!(r.inf, 1.0);
    }

    #[test]
    fn recurrence_rejects_non_positive_and_wide_observables() {
        let p = MatrixPrefix::zero(Kind::Hermitian);
        assert!(matches!(
            recurrence_estimate(&p, &Observable::clamped_h11(), &[2, 4], 5, 0),
            Err(LabError::NonPositiveObservable(_))
        ));
        assert!(matches!(
            recurrence_estimate(&p, &Observable::inv_one_plus_abs(2, 2), &[2, 4], 5, 0),
            Err(LabError::WindowTooLarge { .. })
        ));
    }

    #[test]
    fn scalar_orbits_are_cauchy() {
        let p = MatrixPrefix::scalar(1.5, Kind::Hermitian);
        let r = precompactness_diagnostic(&p, &Observable::clamped_h11(), &[2, 4, 8, 16], 50, 3, &Default::default())
            .unwrap();
        assert!(r.pairwise.iter().flatten().all(|&d| d == 0.0));
        assert_eq!(r.verdict, ConvergenceVerdict::CauchyTrend);
    }

    #[test]
    fn linear_diagonal_escapes() {
        let p = deterministic_diag(DiagRule::Index);
        let r = precompactness_diagnostic(&p, &Observable::clamped_h11(), &[4, 8, 16, 32, 64], 400, 3, &Default::default())
            .unwrap();
        assert_eq!(r.verdict, ConvergenceVerdict::Escaping);
    }
}
