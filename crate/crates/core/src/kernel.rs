//! Periodic Green's function of `d_s^4 - d_s^2 + 1` on a circle of length
//! `L`, and the kernel-quadrature `H2(ds)` gradient built from it.
//!
//! The kernel is `G(s, t) = A(L - |s - t|, |s - t|) / beta(L)` with
//!
//! ```text
//! A(x1, x2) = sinh(a x1) cos(b x2) + sinh(a x2) cos(b x1)
//!           + sqrt3 cosh(a x1) sin(b x2) + sqrt3 cosh(a x2) sin(b x1)
//! beta(L)   = 2 sqrt3 (cosh(a L) - cos(b L)),      a = sqrt3 / 2, b = 1 / 2.
//! ```
//!
//! For long curves every hyperbolic factor is carried with a common factor
//! `e^{-a L}` so the ratio `A / beta` stays finite.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::curve::{diff_columns, row_dots, CurveGeometry, VectorField};
use crate::energy::EnergyParams;
use crate::error::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;
const A_RATE: f64 = SQRT3 / 2.0;
const B_RATE: f64 = 0.5;
/// Lengths above which hyperbolics are evaluated in scaled form.
pub const SCALED_LENGTH: f64 = 60.0;

/// The hyperbolic and trigonometric factors of `A` at one point, optionally
/// with hyperbolics multiplied by `e^{-a L}`.
#[derive(Clone, Copy, Debug)]
struct Factors {
    sh1: f64,
    ch1: f64,
    sh2: f64,
    ch2: f64,
    s1: f64,
    c1: f64,
    s2: f64,
    c2: f64,
}

fn hyperbolic(x: f64, scale_length: Option<f64>) -> (f64, f64) {
    match scale_length {
        None => {
            let y = A_RATE * x;
            (y.sinh(), y.cosh())
        }
        Some(l) => {
            let up = (A_RATE * (x - l)).exp();
            let down = (-A_RATE * (x + l)).exp();
            (0.5 * (up - down), 0.5 * (up + down))
        }
    }
}

impl Factors {
    fn new(x1: f64, x2: f64, scale_length: Option<f64>) -> Self {
        let (sh1, ch1) = hyperbolic(x1, scale_length);
        let (sh2, ch2) = hyperbolic(x2, scale_length);
        let (s1, c1) = (B_RATE * x1).sin_cos();
        let (s2, c2) = (B_RATE * x2).sin_cos();
        Self {
            sh1,
            ch1,
            sh2,
            ch2,
            s1,
            c1,
            s2,
            c2,
        }
    }

    /// m-th derivative of sinh(a x) / cosh(a x).
    fn dsinh(sh: f64, ch: f64, m: u32) -> f64 {
        A_RATE.powi(m as i32) * if m.is_multiple_of(2) { sh } else { ch }
    }

    fn dcosh(sh: f64, ch: f64, m: u32) -> f64 {
        A_RATE.powi(m as i32) * if m.is_multiple_of(2) { ch } else { sh }
    }

    fn dsin(s: f64, c: f64, m: u32) -> f64 {
        B_RATE.powi(m as i32) * [s, c, -s, -c][(m % 4) as usize]
    }

    fn dcos(s: f64, c: f64, m: u32) -> f64 {
        B_RATE.powi(m as i32) * [c, -s, -c, s][(m % 4) as usize]
    }

    /// `d1^i d2^j A`.
    fn partial(&self, i: u32, j: u32) -> f64 {
        Self::dsinh(self.sh1, self.ch1, i) * Self::dcos(self.s2, self.c2, j)
            + Self::dcos(self.s1, self.c1, i) * Self::dsinh(self.sh2, self.ch2, j)
            + SQRT3 * Self::dcosh(self.sh1, self.ch1, i) * Self::dsin(self.s2, self.c2, j)
            + SQRT3 * Self::dsin(self.s1, self.c1, i) * Self::dcosh(self.sh2, self.ch2, j)
    }

    /// `(d2 - d1)^k A`.
    fn directional(&self, k: u32) -> f64 {
        let mut acc = 0.0;
        let mut binom = 1.0;
        for i in 0..=k {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom * self.partial(i, k - i);
            binom = binom * (k - i) as f64 / (i + 1) as f64;
        }
        acc
    }
}

/// `A(x1, x2)`.
pub fn a_func(x1: f64, x2: f64) -> f64 {
    Factors::new(x1, x2, None).partial(0, 0)
}

/// First partials and directional derivatives of `A` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct APartials {
    pub d1: f64,
    pub d2: f64,
    /// `(d2 - d1) A`.
    pub dir1: f64,
    /// `(d2 - d1)^2 A`.
    pub dir2: f64,
    /// `(d2 - d1)^3 A`.
    pub dir3: f64,
}

pub fn a_partials(x1: f64, x2: f64) -> APartials {
    let f = Factors::new(x1, x2, None);
    APartials {
        d1: f.partial(1, 0),
        d2: f.partial(0, 1),
        dir1: f.directional(1),
        dir2: f.directional(2),
        dir3: f.directional(3),
    }
}

/// `beta(L) = 2 sqrt3 (cosh(sqrt3 L / 2) - cos(L / 2))`.
pub fn beta(length: f64) -> f64 {
    2.0 * SQRT3 * ((A_RATE * length).cosh() - (B_RATE * length).cos())
}

/// Green's kernel for one period length.
#[derive(Clone, Copy, Debug)]
pub struct GreensKernel {
    length: f64,
    /// `beta(L)`, times `e^{-a L}` when `scaled`.
    beta_l: f64,
    scaled: bool,
}

impl GreensKernel {
    pub fn new(length: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kernel length must be positive, got {length}"
            )));
        }
        let scaled = length > SCALED_LENGTH;
        let beta_l = if scaled {
            let e = (-A_RATE * length).exp();
            2.0 * SQRT3 * (0.5 * (1.0 + e * e) - (B_RATE * length).cos() * e)
        } else {
            beta(length)
        };
        Ok(Self {
            length,
            beta_l,
            scaled,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// `beta(L)`; infinite when it exceeds the floating-point range.
    pub fn beta_l(&self) -> f64 {
        if self.scaled {
            self.beta_l * (A_RATE * self.length).exp()
        } else {
            self.beta_l
        }
    }

    fn factors(&self, x1: f64, x2: f64) -> Factors {
        Factors::new(x1, x2, self.scaled.then_some(self.length))
    }

    fn check(&self, s: f64) -> Result<()> {
        if (0.0..=self.length).contains(&s) {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                value: s,
                length: self.length,
            })
        }
    }

    /// `(A / beta, (d2 - d1) A / beta)` at separation `d = |s - t|`.
    #[inline]
    fn values_at(&self, d: f64) -> (f64, f64) {
        let f = self.factors(self.length - d, d);
        (
            f.partial(0, 0) / self.beta_l,
            f.directional(1) / self.beta_l,
        )
    }

    /// `G(s, t)`.
    pub fn green(&self, s: f64, t: f64) -> Result<f64> {
        self.check(s)?;
        self.check(t)?;
        Ok(self.values_at((s - t).abs()).0)
    }

    /// `d G(s, t) / dt`; zero on the diagonal.
    pub fn green_ds_tilde(&self, s: f64, t: f64) -> Result<f64> {
        self.check(s)?;
        self.check(t)?;
        Ok(self.ds_tilde_unchecked(s, t))
    }

    #[inline]
    fn ds_tilde_unchecked(&self, s: f64, t: f64) -> f64 {
        let diff = s - t;
        if diff == 0.0 {
            return 0.0;
        }
        -diff.signum() * self.values_at(diff.abs()).1
    }

    /// `int_0^L G(s, t) f(t) dt` by composite Gauss-Legendre quadrature on
    /// `[0, s]` and `[s, L]`, where the integrand is smooth.
    pub fn integrate(&self, s: f64, f: impl Fn(f64) -> f64, panels: usize) -> Result<f64> {
        self.check(s)?;
        let (nodes, weights) = gauss_legendre(GL_ORDER);
        let mut total = 0.0;
        for (a, b) in [(0.0, s), (s, self.length)] {
            let h = (b - a) / panels as f64;
            for p in 0..panels {
                let mid = a + (p as f64 + 0.5) * h;
                for (x, w) in nodes.iter().zip(&weights) {
                    let t = mid + 0.5 * h * x;
                    total += 0.5 * h * w * self.values_at((s - t).abs()).0 * f(t);
                }
            }
        }
        Ok(total)
    }

    /// Jump of the third derivative across the diagonal,
    /// `lim_{x -> y+} d1^3 G - lim_{x -> y-} d1^3 G`. Equals 1.
    pub fn jump_check(&self) -> f64 {
        2.0 * self.factors(self.length, 0.0).directional(3) / self.beta_l
    }
}

const GL_ORDER: usize = 10;

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on
/// `P_m`.
fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// `H2(ds)` gradient of the energy by kernel quadrature:
///
/// `grad(u_j) = sum_m (1/N) [ 2 G(s_j, s_m) (gamma_j - gamma_m) |gamma'_m|
///                            - G_t(s_j, s_m) gamma'_m (3 k_m^2 + 2 - lambda^2) ]`,
///
/// which uses `int G dt = 1` to write `2 gamma(s) - int 2 G gamma` in
/// translation-invariant form.
///
/// The second integrand has a jump in its third `u`-derivative at `u_j`, which
/// limits the periodic trapezoid rule to `O(h^4)`. The leading Euler-Maclaurin
/// term `h^4 / 720` times that jump is added back; the first integrand
/// vanishes on the diagonal and needs no correction at this order.
pub fn h2_gradient_kernel(geom: &CurveGeometry, params: &EnergyParams) -> Result<VectorField> {
    let n = geom.n_samples();
    let dim = geom.dim();
    let kernel = GreensKernel::new(geom.length)?;
    let pts = geom.curve.points();
    let l2 = params.lambda_sq();
    let q: Vec<f64> = geom.ksq.iter().map(|k| 3.0 * k + 2.0 - l2).collect();
    let dq: Vec<f64> = diff_columns(&DMatrix::from_column_slice(n, 1, &geom.ksq), 1)
        .iter()
        .map(|x| 3.0 * x)
        .collect();
    let dspeed: Vec<f64> = row_dots(&geom.d2, &geom.d1)
        .iter()
        .zip(&geom.speed)
        .map(|(d, s)| d / s)
        .collect();
    let inv_n = 1.0 / n as f64;
    let h4 = inv_n.powi(4) / 720.0;
    let s = &geom.arclen;

    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut acc = vec![0.0; dim];
            for m in 0..n {
                if m == j {
                    continue;
                }
                let diff = s[j] - s[m];
                let (g, dg) = kernel.values_at(diff.abs());
                let g_t = -diff.signum() * dg;
                let w_pos = 2.0 * g * geom.speed[m];
                let w_tan = g_t * q[m];
                for c in 0..dim {
                    acc[c] += w_pos * (pts[(j, c)] - pts[(m, c)]) - w_tan * geom.d1[(m, c)];
                }
            }
            // Jump of d^3/du^3 [G_t(s_j, s(u)) psi(u)] at u_j, psi = q gamma'.
            let sp = geom.speed[j];
            for (c, a) in acc.iter_mut().enumerate() {
                let psi = q[j] * geom.d1[(j, c)];
                let dpsi = dq[j] * geom.d1[(j, c)] + q[j] * geom.d2[(j, c)];
                let jump = 3.0 * sp * dspeed[j] * psi + 3.0 * sp * sp * dpsi;
                *a = *a * inv_n + h4 * jump;
            }
            acc
        })
        .collect();
    Ok(VectorField::new(DMatrix::from_fn(n, dim, |j, c| {
        rows[j][c]
    })))
}
