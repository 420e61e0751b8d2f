//! Haar-random unitaries and orbital measures.
//!
//! For `h` in `H` the `n`-th orbital measure is the law of `u* h(n) u` with
//! `u` Haar on `U(n)`; for `z` in `Mat` it is the law of `u1 z(n) u2*` with
//! independent Haar `u1, u2`. Conjugation by the embedded `U(n)` leaves every
//! entry outside the `n x n` corner untouched, so the corner is the whole
//! state an observable with window `<= n` can see.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{LabError, Result};
use crate::matrix::{CornerMatrix, Kind, MatrixPrefix, C64, ZERO};
use crate::observable::Observable;

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// `n x cols` matrix of i.i.d. complex Gaussians, filled column by column.
fn gaussian_block<R: Rng + ?Sized>(n: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    let mut g = DMatrix::from_element(n, cols, ZERO);
    for j in 0..cols {
        for i in 0..n {
            g[(i, j)] = complex_gaussian(rng);
        }
    }
    g
}

/// Haar-distributed `n x n` unitary.
///
/// QR of a complex Ginibre matrix, with each column of `Q` rotated by the
/// phase of the matching diagonal entry of `R` so that `R` has a positive
/// diagonal. Without that correction the law of `Q` depends on the QR
/// implementation and is not Haar.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CornerMatrix> {
    if n == 0 {
        return Err(LabError::param("n", "dimension must be >= 1"));
    }
    let g = gaussian_block(n, n, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..n {
        let d = r[(k, k)];
        let modulus = d.norm();
        if modulus > 0.0 {
            let phase = d / modulus;
            q.column_mut(k).iter_mut().for_each(|z| *z *= phase);
        }
    }
    CornerMatrix::new(q, false)
}

/// The first `cols` columns of a Haar unitary on `U(n)`.
///
/// Uses the same Gaussian draws, in the same order, as [`haar_unitary`], and
/// orthonormalizes them by Gram-Schmidt with one reorthogonalization pass. For
/// equal generator states the result agrees with the leading columns of
/// `haar_unitary(n)` up to rounding.
pub fn haar_frame<R: Rng + ?Sized>(n: usize, cols: usize, rng: &mut R) -> Result<DMatrix<C64>> {
    if cols == 0 || cols > n {
        return Err(LabError::param("cols", format!("need 1 <= cols <= n = {n}, got {cols}")));
    }
    let mut q = gaussian_block(n, cols, rng);
    for k in 0..cols {
        for _pass in 0..2 {
            for l in 0..k {
                let proj = q.column(l).dotc(&q.column(k));
                let ql = q.column(l).clone_owned();
                q.column_mut(k).axpy(-proj, &ql, C64::new(1.0, 0.0));
            }
        }
        let norm = q.column(k).norm();
        if norm == 0.0 {
            return Err(LabError::Numerical("degenerate Gaussian column".into()));
        }
        q.column_mut(k).unscale_mut(norm);
    }
    Ok(q)
}

/// Draws from the `n`-th orbital measure of a fixed prefix.
#[derive(Clone, Debug)]
pub struct OrbitalSampler {
    kind: Kind,
    corner: CornerMatrix,
    scalar: Option<f64>,
}

impl OrbitalSampler {
    pub fn new(p: &MatrixPrefix, n: usize) -> Result<Self> {
        let corner = p.corner(n)?;
        let scalar = match p.kind() {
            Kind::Hermitian => corner.scalar_value(),
            Kind::Complex => None,
        };
        Ok(OrbitalSampler { kind: p.kind(), corner, scalar })
    }

    pub fn n(&self) -> usize {
        self.corner.n()
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn corner(&self) -> &CornerMatrix {
        &self.corner
    }

    /// A full `n x n` orbit point.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CornerMatrix> {
        let n = self.n();
        match self.kind {
            Kind::Hermitian => {
                // scalar matrices are fixed by the action
                if self.scalar.is_some() {
                    return Ok(self.corner.clone());
                }
                let u = haar_unitary(n, rng)?.into_entries();
                let conj = u.adjoint() * self.corner.entries() * &u;
                CornerMatrix::hermitian_from_upper(conj)
            }
            Kind::Complex => {
                let u1 = haar_unitary(n, rng)?.into_entries();
                let u2 = haar_unitary(n, rng)?.into_entries();
                CornerMatrix::new(u1 * self.corner.entries() * u2.adjoint(), false)
            }
        }
    }

    /// The `w x w` corner of a fresh orbit point, drawing only the `w`
    /// columns (or rows) of the Haar unitaries that reach it.
    pub fn sample_window<R: Rng + ?Sized>(&self, w: usize, rng: &mut R) -> Result<CornerMatrix> {
        let n = self.n();
        if w == 0 || w > n {
            return Err(LabError::WindowTooLarge { window: w, n });
        }
        match self.kind {
            Kind::Hermitian => {
                if self.scalar.is_some() {
                    return self.corner.top_left(w);
                }
                let f = haar_frame(n, w, rng)?;
                let hf = self.corner.entries() * &f;
                CornerMatrix::hermitian_from_upper(f.adjoint() * hf)
            }
            Kind::Complex => {
                // rows of a Haar unitary are transposed columns of another one
                let f1 = haar_frame(n, w, rng)?;
                let f2 = haar_frame(n, w, rng)?;
                let right = self.corner.entries() * f2.map(|z| z.conj());
                CornerMatrix::new(f1.transpose() * right, false)
            }
        }
    }
}

/// One draw from the orbital measure of a Hermitian prefix: `u* h(n) u`.
pub fn orbital_sample_h<R: Rng + ?Sized>(p: &MatrixPrefix, n: usize, rng: &mut R) -> Result<CornerMatrix> {
    p.require_kind(Kind::Hermitian)?;
    OrbitalSampler::new(p, n)?.sample(rng)
}

/// One draw from the two-sided orbital measure of a complex prefix: `u1 z(n) u2*`.
pub fn orbital_sample_z<R: Rng + ?Sized>(p: &MatrixPrefix, n: usize, rng: &mut R) -> Result<CornerMatrix> {
    p.require_kind(Kind::Complex)?;
    OrbitalSampler::new(p, n)?.sample(rng)
}

/// Monte-Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitalMean {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl OrbitalMean {
    pub fn from_values(values: &[f64]) -> Self {
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for (k, &v) in values.iter().enumerate() {
            let delta = v - mean;
            mean += delta / (k + 1) as f64;
            m2 += delta * (v - mean);
        }
        let n = values.len();
        let stderr = if n > 1 { (m2 / (n - 1) as f64 / n as f64).sqrt() } else { 0.0 };
        OrbitalMean { mean, stderr, samples: n }
    }
}

/// Values of `f` on `samples` independent orbit points.
pub fn orbital_values<R: Rng + ?Sized>(
    f: &Observable,
    sampler: &OrbitalSampler,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if samples == 0 {
        return Err(LabError::param("samples", "must be >= 1"));
    }
    let w = f.window();
    if w > sampler.n() {
        return Err(LabError::WindowTooLarge { window: w, n: sampler.n() });
    }
    (0..samples)
        .map(|_| sampler.sample_window(w, rng).and_then(|c| f.evaluate(&c)))
        .collect()
}

/// Monte-Carlo estimate of the orbital average `∫ f d mu_n^p`.
pub fn orbital_average<R: Rng + ?Sized>(
    f: &Observable,
    p: &MatrixPrefix,
    n: usize,
    samples: usize,
    rng: &mut R,
) -> Result<OrbitalMean> {
    if f.window() > n {
        return Err(LabError::WindowTooLarge { window: f.window(), n });
    }
    let sampler = OrbitalSampler::new(p, n)?;
    let values = orbital_values(f, &sampler, samples, rng)?;
    Ok(OrbitalMean::from_values(&values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles;
    use crate::rng::task_rng;

    fn max_unitarity_defect(u: &DMatrix<C64>) -> f64 {
        let n = u.nrows();
        let prod = u.adjoint() * u;
        let id = DMatrix::<C64>::identity(n, n);
        (prod - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn u1_is_a_phase() {
        let mut rng = task_rng(1, 0);
        for _ in 0..100 {
            let u = haar_unitary(1, &mut rng).unwrap();
            assert!((u.get(0, 0).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unitarity() {
        let mut rng = task_rng(2, 0);
        for n in [1, 2, 3, 8, 33] {
            let u = haar_unitary(n, &mut rng).unwrap();
            assert!(max_unitarity_defect(u.entries()) < 1e-10);
        }
        assert!(haar_unitary(0, &mut rng).is_err());
    }

    #[test]
    fn frame_matches_leading_columns() {
        for n in [1, 4, 17] {
            let w = n.min(3);
            let u = haar_unitary(n, &mut task_rng(9, n as u64)).unwrap();
            let f = haar_frame(n, w, &mut task_rng(9, n as u64)).unwrap();
            for j in 0..w {
                for i in 0..n {
                    assert!((u.get(i, j) - f[(i, j)]).norm() < 1e-10, "n={n} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn phase_correction_gives_haar_trace_moments() {
        // for Haar u on U(n), n >= 1: E tr u = 0 and E |tr u|^2 = 1
        let mut rng = task_rng(4, 0);
        let draws = 20_000;
        let n = 4;
        let (mut s, mut s2) = (C64::new(0.0, 0.0), 0.0);
        for _ in 0..draws {
            let t = haar_unitary(n, &mut rng).unwrap().trace();
            s += t;
            s2 += t.norm_sqr();
        }
        let mean = s / draws as f64;
        let second = s2 / draws as f64;
        assert!(mean.norm() < 0.03, "E tr u = {mean}");
        assert!((second - 1.0).abs() < 0.05, "E|tr u|^2 = {second}");
    }

    #[test]
    fn scalar_orbit_is_fixed() {
        let p = MatrixPrefix::scalar(2.5, Kind::Hermitian);
        let mut rng = task_rng(5, 0);
        let s = orbital_sample_h(&p, 6, &mut rng).unwrap();
        assert_eq!(s, CornerMatrix::diag(&[2.5; 6]).unwrap());
        let g = ensembles::gaussian_hermitian(1.0, 2).unwrap();
        let one = orbital_sample_h(&g, 1, &mut rng).unwrap();
        assert_eq!(one, g.corner(1).unwrap());
    }

    #[test]
    fn kind_checks() {
        let mut rng = task_rng(6, 0);
        let h = MatrixPrefix::zero(Kind::Hermitian);
        let z = MatrixPrefix::zero(Kind::Complex);
        assert!(matches!(orbital_sample_z(&h, 3, &mut rng), Err(LabError::KindMismatch { .. })));
        assert!(matches!(orbital_sample_h(&z, 3, &mut rng), Err(LabError::KindMismatch { .. })));
        assert_eq!(orbital_sample_z(&z, 3, &mut rng).unwrap().frobenius_sq(), 0.0);
    }

    #[test]
    fn window_sample_matches_full_sample_corner() {
        let p = ensembles::gaussian_hermitian(1.0, 8).unwrap();
        let sampler = OrbitalSampler::new(&p, 12).unwrap();
        let full = sampler.sample(&mut task_rng(3, 3)).unwrap();
        let win = sampler.sample_window(2, &mut task_rng(3, 3)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((full.get(i, j) - win.get(i, j)).norm() < 1e-10);
            }
        }
        assert!(sampler.sample_window(13, &mut task_rng(3, 3)).is_err());
    }

    #[test]
    fn constant_observable_has_zero_stderr() {
        let p = ensembles::gaussian_hermitian(1.0, 8).unwrap();
        let f = Observable::constant(1.0).unwrap();
        let m = orbital_average(&f, &p, 5, 50, &mut task_rng(1, 1)).unwrap();
        assert_eq!(m.mean, 1.0);
        assert_eq!(m.stderr, 0.0);
    }

    #[test]
    fn scalar_prefix_gives_deterministic_average() {
        let p = MatrixPrefix::scalar(3.0, Kind::Hermitian);
        let f = Observable::coord_re(0, 0, 10.0).unwrap();
        let m = orbital_average(&f, &p, 7, 100, &mut task_rng(1, 1)).unwrap();
        assert_eq!(m.mean, 3.0);
        assert_eq!(m.stderr, 0.0);
    }

    #[test]
    fn orbital_average_rejects_large_window() {
        let p = MatrixPrefix::zero(Kind::Hermitian);
        let f = Observable::coord_re(3, 3, 1.0).unwrap();
        assert!(matches!(
            orbital_average(&f, &p, 2, 10, &mut task_rng(0, 0)),
            Err(LabError::WindowTooLarge { .. })
        ));
        let g = Observable::constant(1.0).unwrap();
        assert!(orbital_average(&g, &p, 2, 0, &mut task_rng(0, 0)).is_err());
    }

    #[test]
    fn orbital_mean_of_diagonal_entry_is_normalized_trace() {
        let p = ensembles::gaussian_hermitian(1.0, 21).unwrap();
        let n = 10;
        let f = Observable::coord_re(0, 0, 1e6).unwrap();
        let m = orbital_average(&f, &p, n, 20_000, &mut task_rng(21, 0)).unwrap();
        let target = p.trace_window(n).re / n as f64;
        assert!((m.mean - target).abs() < 4.0 * m.stderr, "{} vs {target} ± {}", m.mean, m.stderr);
    }

    #[test]
    fn complex_window_sample_preserves_zero_and_scale() {
        let p = MatrixPrefix::identity(Kind::Complex);
        let sampler = OrbitalSampler::new(&p, 5).unwrap();
        let c = sampler.sample_window(5, &mut task_rng(2, 2)).unwrap();
        // u1 u2* is unitary
        let prod = c.entries().adjoint() * c.entries();
        let id = DMatrix::<C64>::identity(5, 5);
        assert!((prod - id).iter().all(|z| z.norm() < 1e-10));
    }
}
