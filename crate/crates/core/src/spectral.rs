//! Trigonometric (discrete Fourier) calculus on uniformly sampled periodic
//! sequences with period 1.
//!
//! Samples are taken at `u_j = j / N`. All operators act on the unique
//! trigonometric interpolant of degree `N/2`, with the Nyquist mode written
//! as `c cos(pi N u)` so that the interpolant is real.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// FFT plans for one sample count.
pub struct Spectral {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Returns the cached plan for `n` samples.
pub fn plan(n: usize) -> Arc<Spectral> {
    static PLANS: OnceLock<Mutex<HashMap<usize, Arc<Spectral>>>> = OnceLock::new();
    let plans = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = plans.lock().expect("spectral plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Spectral {
                n,
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// Signed wavenumber of FFT bin `k`; the Nyquist bin maps to `+n/2`.
#[inline]
pub fn wavenumber(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

impl Spectral {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Normalised Fourier coefficients `c_k = (1/N) sum_j f_j e^{-2 pi i k j / N}`.
    pub fn coefficients(&self, f: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(f.len(), self.n);
        let mut buf: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    /// Inverse of [`Spectral::coefficients`], keeping the real part.
    pub fn synthesize(&self, mut coeffs: Vec<Complex64>) -> Vec<f64> {
        debug_assert_eq!(coeffs.len(), self.n);
        self.inverse.process(&mut coeffs);
        coeffs.into_iter().map(|c| c.re).collect()
    }

    /// Trigonometric derivative of the given order. Odd orders drop the
    /// Nyquist mode.
    pub fn differentiate(&self, f: &[f64], order: usize) -> Result<Vec<f64>> {
        if !(1..=4).contains(&order) {
            return Err(Error::InvalidOrder(order));
        }
        if f.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: f.len(),
            });
        }
        let n = self.n;
        let mut c = self.coefficients(f);
        for (k, ck) in c.iter_mut().enumerate() {
            let kk = wavenumber(k, n);
            if n.is_multiple_of(2) && k == n / 2 && order % 2 == 1 {
                *ck = Complex64::new(0.0, 0.0);
                continue;
            }
            let ik = Complex64::new(0.0, TAU * kk as f64);
            *ck *= ik.powu(order as u32);
        }
        Ok(self.synthesize(c))
    }

    /// Periodic antiderivative of `f - mean(f)`, pinned to zero at `u = 0`.
    /// The Nyquist component of `f` has no periodic antiderivative on the
    /// grid and is discarded.
    pub fn antiderivative(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut c = self.coefficients(f);
        c[0] = Complex64::new(0.0, 0.0);
        if n.is_multiple_of(2) {
            c[n / 2] = Complex64::new(0.0, 0.0);
        }
        for (k, ck) in c.iter_mut().enumerate().skip(1) {
            let kk = wavenumber(k, n);
            if kk != 0 {
                *ck /= Complex64::new(0.0, TAU * kk as f64);
            }
        }
        let mut out = self.synthesize(c);
        let offset = out[0];
        out.iter_mut().for_each(|x| *x -= offset);
        out
    }

    /// Evaluates the real trigonometric interpolant with coefficients
    /// `coeffs` at an arbitrary parameter `u`.
    pub fn evaluate(&self, coeffs: &[Complex64], u: f64) -> f64 {
        let n = self.n;
        let half = n / 2;
        let step = Complex64::from_polar(1.0, TAU * u);
        let mut z = step;
        let mut acc = coeffs[0].re;
        for (k, ck) in coeffs.iter().enumerate().take(half).skip(1) {
            if k > 1 {
                // Recompute from polar form periodically to limit drift.
                if k % 16 == 0 {
                    z = Complex64::from_polar(1.0, TAU * u * k as f64);
                } else {
                    z *= step;
                }
            }
            acc += 2.0 * (ck * z).re;
        }
        if n.is_multiple_of(2) && half > 0 {
            acc += coeffs[half].re * (std::f64::consts::PI * n as f64 * u).cos();
        }
        acc
    }
}

/// Convenience wrapper for [`Spectral::differentiate`].
pub fn differentiate(f: &[f64], order: usize) -> Result<Vec<f64>> {
    if !f.len().is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "sample count {} must be even",
            f.len()
        )));
    }
    plan(f.len()).differentiate(f, order)
}
