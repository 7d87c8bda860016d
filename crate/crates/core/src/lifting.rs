//! Lifted measurement operators.
//!
//! `G(xyᵀ) = (Dx) ⊛ (Ey)` extends linearly to all `m1 × m2` matrices, and its
//! frequency-domain form is `A(M)_j = a_j^* M conj(b_j) = (FD)^{(j,:)} M (FE)^{(j,:)ᵀ}`,
//! with `A(M) = F·G(M)/√n`. Matrices are vectorized column-major: entry
//! `(k, l)` of `M` is coordinate `k + m1·l`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ensembles::{CMatrix, CVector, Ensemble};
use crate::error::{Error, Result};
use crate::spectral::{self, ComplexVec, Direction};

/// A complex `m1 × m2` matrix, optionally carrying rank-1 factors `M = x·yᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedMatrix {
    matrix: CMatrix,
    factors: Option<(CVector, CVector)>,
}

fn check_finite<'a>(it: impl Iterator<Item = &'a Complex64>) -> Result<()> {
    for (i, c) in it.enumerate() {
        if !c.re.is_finite() || !c.im.is_finite() {
            return Err(Error::NonFinite(i));
        }
    }
    Ok(())
}

impl LiftedMatrix {
    pub fn from_factors(x: CVector, y: CVector) -> Result<Self> {
        check_finite(x.iter().chain(y.iter()))?;
        let matrix = &x * y.transpose();
        Ok(Self { matrix, factors: Some((x, y)) })
    }

    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        check_finite(matrix.iter())?;
        Ok(Self { matrix, factors: None })
    }

    pub fn zeros(m1: usize, m2: usize) -> Self {
        Self { matrix: CMatrix::zeros(m1, m2), factors: None }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn factors(&self) -> Option<(&CVector, &CVector)> {
        self.factors.as_ref().map(|(x, y)| (x, y))
    }

    pub fn shape(&self) -> (usize, usize) {
        self.matrix.shape()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        if self.matrix.is_empty() {
            return 0.0;
        }
        self.matrix
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }

    /// Multiply by a real scalar; factors are rescaled symmetrically.
    pub fn scaled(&self, s: f64) -> Self {
        let factors = self.factors.as_ref().map(|(x, y)| {
            let r = s.abs().sqrt();
            (x * Complex64::new(s.signum() * r, 0.0), y * Complex64::new(r, 0.0))
        });
        Self { matrix: &self.matrix * Complex64::new(s, 0.0), factors }
    }
}

/// Time-domain measurement `z`, its normalized spectrum `z̃ = F·z/√n`, and the noise if known.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord {
    pub z: ComplexVec,
    pub z_tilde: ComplexVec,
    pub noise: Option<ComplexVec>,
}

impl MeasurementRecord {
    pub fn from_time_domain(z: ComplexVec, noise: Option<ComplexVec>) -> Result<Self> {
        let n = z.len();
        let scale = 1.0 / (n as f64).sqrt();
        let z_tilde = spectral::dft(&z, Direction::Forward)?
            .into_iter()
            .map(|c| c * scale)
            .collect();
        if let Some(e) = &noise {
            if e.len() != n {
                return Err(Error::LengthMismatch { expected: n, found: e.len() });
            }
        }
        Ok(Self { z, z_tilde, noise })
    }
}

fn check_shape(ens: &Ensemble, m: &CMatrix) -> Result<()> {
    let expected = (ens.m1(), ens.m2());
    if m.shape() != expected {
        return Err(Error::ShapeMismatch { expected, found: m.shape() });
    }
    Ok(())
}

/// `A(M)` on a raw matrix; shapes are assumed to agree.
pub(crate) fn apply_a_raw(ens: &Ensemble, m: &CMatrix) -> CVector {
    let p = &ens.freq_d * m;
    CVector::from_fn(ens.n(), |j, _| {
        p.row(j).iter().zip(ens.freq_e.row(j).iter()).map(|(u, v)| u * v).sum()
    })
}

/// `A*(w) = Σ_j w_j a_j b_jᵀ = (FD)^* diag(w) conj(FE)`.
pub(crate) fn apply_a_adjoint_raw(ens: &Ensemble, w: &[Complex64]) -> CMatrix {
    let mut scaled = ens.freq_e.conjugate();
    for (j, wj) in w.iter().enumerate() {
        for c in scaled.row_mut(j).iter_mut() {
            *c *= wj;
        }
    }
    ens.freq_d.adjoint() * scaled
}

/// Frequency-domain operator `A(M)_j = a_j^* M conj(b_j)`.
pub fn apply_a(ens: &Ensemble, m: &LiftedMatrix) -> Result<ComplexVec> {
    check_shape(ens, m.matrix())?;
    Ok(apply_a_raw(ens, m.matrix()).iter().copied().collect())
}

/// Time-domain operator `G(M) = √n·F*·A(M)`; equals `(Dx) ⊛ (Ey)` for `M = xyᵀ`.
pub fn apply_g(ens: &Ensemble, m: &LiftedMatrix) -> Result<ComplexVec> {
    let a = apply_a(ens, m)?;
    let sqrt_n = (ens.n() as f64).sqrt();
    Ok(spectral::dft_unchecked(&a, Direction::Inverse)
        .into_iter()
        .map(|c| c * sqrt_n)
        .collect())
}

/// Adjoint of `A` under `⟨A, M⟩ = trace(A^* M)`.
pub fn apply_a_adjoint(ens: &Ensemble, w: &[Complex64]) -> Result<LiftedMatrix> {
    if w.len() != ens.n() {
        return Err(Error::LengthMismatch { expected: ens.n(), found: w.len() });
    }
    LiftedMatrix::from_matrix(apply_a_adjoint_raw(ens, w))
}

/// `G*G(M) = n·A*A(M)`.
pub fn apply_gram_g(ens: &Ensemble, m: &LiftedMatrix) -> Result<LiftedMatrix> {
    check_shape(ens, m.matrix())?;
    let a = apply_a_raw(ens, m.matrix());
    let g = apply_a_adjoint_raw(ens, a.as_slice()) * Complex64::new(ens.n() as f64, 0.0);
    LiftedMatrix::from_matrix(g)
}

/// Radius `((m1+2)(m2+2)/n²)^{1/4}` for uniform-ball rows, as printed with the
/// isometry-in-the-mean argument. It rests on `E‖a‖² = m R²/(m+2)`, which is the
/// moment of the real ball `R·B_{R^m}`; see [`exact_mean_isometry_radius`].
pub fn mean_isometry_radius(n: usize, m1: usize, m2: usize) -> f64 {
    (((m1 + 2) * (m2 + 2)) as f64 / (n * n) as f64).powf(0.25)
}

/// Radius making `E[G*G] = I` for rows uniform on complex balls, where
/// `E‖a‖² = m R²/(m+1)`: `((m1+1)(m2+1)/n²)^{1/4}`.
pub fn exact_mean_isometry_radius(n: usize, m1: usize, m2: usize) -> f64 {
    (((m1 + 1) * (m2 + 1)) as f64 / (n * n) as f64).powf(0.25)
}

/// Matrix of `A` on column-major vectorized `M`: `n × (m1·m2)`.
pub fn operator_matrix(ens: &Ensemble) -> CMatrix {
    let s1: Vec<usize> = (0..ens.m1()).collect();
    let s2: Vec<usize> = (0..ens.m2()).collect();
    restricted_operator(ens, &s1, &s2)
}

/// Columns of the operator matrix for `M` supported on `S1 × S2`; column
/// `i1 + |S1|·i2` corresponds to entry `(S1[i1], S2[i2])`.
pub fn restricted_operator(ens: &Ensemble, s1: &[usize], s2: &[usize]) -> CMatrix {
    let n = ens.n();
    let k1 = s1.len();
    DMatrix::from_fn(n, k1 * s2.len(), |j, c| {
        let (i1, i2) = (c % k1, c / k1);
        ens.freq_d[(j, s1[i1])] * ens.freq_e[(j, s2[i2])]
    })
}

/// Noise drawn uniformly on the sphere of the given radius (real for real ensembles).
pub fn sphere_noise<R: Rng + ?Sized>(n: usize, radius: f64, real: bool, rng: &mut R) -> ComplexVec {
    if radius == 0.0 {
        return vec![Complex64::new(0.0, 0.0); n];
    }
    loop {
        let v: Vec<Complex64> = (0..n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = if real { 0.0 } else { StandardNormal.sample(rng) };
                Complex64::new(re, im)
            })
            .collect();
        let norm = spectral::norm2(&v);
        if norm > 0.0 {
            return v.into_iter().map(|c| c * (radius / norm)).collect();
        }
    }
}

/// Measure `M0` in the time domain, adding noise of norm `noise_radius`.
pub fn measure<R: Rng + ?Sized>(
    ens: &Ensemble,
    m0: &LiftedMatrix,
    noise_radius: f64,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    let clean = apply_g(ens, m0)?;
    if noise_radius <= 0.0 {
        return MeasurementRecord::from_time_domain(clean, None);
    }
    let e = sphere_noise(ens.n(), noise_radius, ens.is_real(), rng);
    let z = clean.iter().zip(&e).map(|(a, b)| a + b).collect();
    MeasurementRecord::from_time_domain(z, Some(e))
}
