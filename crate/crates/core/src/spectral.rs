//! Unitary DFT and circular convolution.
//!
//! The forward transform uses the kernel `exp(-2πi·jk/n)/√n`; the inverse is
//! its conjugate transpose. Both are evaluated directly in O(n²), which is
//! plenty for the desk-scale sizes used here.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Owned complex signal.
pub type ComplexVec = Vec<Complex64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

fn check_signal(v: &[Complex64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::EmptyVector);
    }
    if let Some(i) = v.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(())
}

/// Twiddle table `exp(sign·2πi·k/n)` for k in 0..n. Indexing by `(j*k) % n`
/// keeps the phase argument small, which matters for accuracy at larger n.
fn twiddles(n: usize, sign: f64) -> Vec<Complex64> {
    (0..n)
        .map(|k| Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 / n as f64))
        .collect()
}

/// Unitary discrete Fourier transform.
pub fn dft(v: &[Complex64], direction: Direction) -> Result<ComplexVec> {
    check_signal(v)?;
    Ok(dft_unchecked(v, direction))
}

pub(crate) fn dft_unchecked(v: &[Complex64], direction: Direction) -> ComplexVec {
    let n = v.len();
    let sign = match direction {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    let w = twiddles(n, sign);
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|j| {
            let acc: Complex64 = v
                .iter()
                .enumerate()
                .map(|(k, &x)| x * w[(j * k) % n])
                .sum();
            acc * scale
        })
        .collect()
}

/// Circular convolution `z[k] = Σ_j u[j]·v[(k−j) mod n]`, by the direct double sum.
pub fn circular_convolve(u: &[Complex64], v: &[Complex64]) -> Result<ComplexVec> {
    check_signal(u)?;
    check_signal(v)?;
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let n = u.len();
    Ok((0..n)
        .map(|k| {
            (0..n)
                .map(|j| u[j] * v[(k + n - j) % n])
                .sum::<Complex64>()
        })
        .collect())
}

/// Circular convolution through the DFT: `√n·F*[(Fu)⊙(Fv)]`.
pub fn circular_convolve_spectral(u: &[Complex64], v: &[Complex64]) -> Result<ComplexVec> {
    check_signal(u)?;
    check_signal(v)?;
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let n = u.len();
    let fu = dft_unchecked(u, Direction::Forward);
    let fv = dft_unchecked(v, Direction::Forward);
    let prod: Vec<Complex64> = fu.iter().zip(&fv).map(|(a, b)| a * b).collect();
    let sqrt_n = (n as f64).sqrt();
    Ok(dft_unchecked(&prod, Direction::Inverse)
        .into_iter()
        .map(|c| c * sqrt_n)
        .collect())
}

pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}
