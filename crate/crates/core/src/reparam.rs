//! Arc-length-proportional parametrisation: the constraint map
//! `Phi(gamma) = |gamma'| - L(gamma)`, its derivative, the projection onto
//! `Phi = 0`, and the control construction (parallel normal frame,
//! controllability Gramian, right inverse of `dPhi`, tangent projection).

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curve::{diff_columns, geometry, row_dots, ClosedCurve, CurveGeometry, VectorField};
use crate::error::{Error, Result};
use crate::spectral;

/// Largest tolerated frame orthonormality defect.
pub const FRAME_DRIFT_LIMIT: f64 = 1e-6;
/// Relative `sup |Phi| / L` below which a curve is treated as lying on
/// the constraint manifold.
pub const OMEGA_TOL: f64 = 1e-6;
/// Smallest admissible Gramian eigenvalue.
pub const GRAMIAN_FLOOR: f64 = 1e-12;
/// Minimum number of RK4 steps over one period in the frame transport.
const FRAME_STEPS: usize = 2048;

/// `Phi(gamma) = |gamma'| - L`.
pub fn phi(geom: &CurveGeometry) -> Vec<f64> {
    geom.speed.iter().map(|s| s - geom.length).collect()
}

pub fn phi_sup(geom: &CurveGeometry) -> f64 {
    geom.speed
        .iter()
        .fold(0.0, |m, s| m.max((s - geom.length).abs()))
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// `dPhi(v) = <v', T> - int <v', T> du`.
pub fn dphi(geom: &CurveGeometry, v: &VectorField) -> Result<Vec<f64>> {
    v.check_against(&geom.curve)?;
    let v1 = diff_columns(v.values(), 1);
    let raw = row_dots(&v1, &geom.tangent);
    let m = mean(&raw);
    Ok(raw.into_iter().map(|x| x - m).collect())
}

/// Piecewise cubic Hermite interpolant with Fritsch-Butland slopes; monotone
/// whenever the data are. The data are one period of a map with
/// `y(x + P) = y(x) + Q`, so end slopes wrap around.
struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
}

impl MonotoneCubic {
    fn periodic(x: Vec<f64>, y: Vec<f64>) -> Self {
        let m = x.len() - 1;
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let sec: Vec<f64> = (0..m).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let blend = |hl: f64, hr: f64, dl: f64, dr: f64| {
            if dl * dr <= 0.0 {
                0.0
            } else {
                let (w1, w2) = (2.0 * hr + hl, hr + 2.0 * hl);
                (w1 + w2) / (w1 / dl + w2 / dr)
            }
        };
        let mut slope = vec![0.0; m + 1];
        for k in 1..m {
            slope[k] = blend(h[k - 1], h[k], sec[k - 1], sec[k]);
        }
        slope[0] = blend(h[m - 1], h[0], sec[m - 1], sec[0]);
        slope[m] = slope[0];
        Self { x, y, slope }
    }

    fn eval(&self, t: f64) -> f64 {
        let m = self.x.len() - 1;
        let k = match self.x.partition_point(|&xk| xk <= t) {
            0 => 0,
            p => (p - 1).min(m - 1),
        };
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[k]
            + h10 * h * self.slope[k]
            + h01 * self.y[k + 1]
            + h11 * h * self.slope[k + 1]
    }
}

/// Resamples `curve` at the parameters where `s(u) / L = j / N`, giving
/// its arc-length-proportional reparametrisation with the same start point.
pub fn project_arclength(curve: &ClosedCurve) -> Result<ClosedCurve> {
    let geom = geometry(curve)?;
    let n = geom.n_samples();
    let l = geom.length;
    let plan = spectral::plan(n);
    let periodic = plan.antiderivative(&geom.speed);
    let periodic_c = plan.coefficients(&periodic);
    let speed_c = plan.coefficients(&geom.speed);
    let s_of = |u: f64| l * u + plan.evaluate(&periodic_c, u) - plan.evaluate(&periodic_c, 0.0);

    let mut knots_s = geom.arclen.clone();
    knots_s.push(l);
    let knots_u: Vec<f64> = (0..=n).map(|j| j as f64 / n as f64).collect();
    let inverse = MonotoneCubic::periodic(knots_s, knots_u);

    let mut params = Vec::with_capacity(n);
    for j in 0..n {
        let target = l * j as f64 / n as f64;
        let mut u = inverse.eval(target);
        for _ in 0..20 {
            let r = s_of(u) - target;
            if r.abs() <= 1e-15 * l {
                break;
            }
            let ds = plan.evaluate(&speed_c, u);
            u -= r / ds;
        }
        params.push(u);
    }
    params[0] = 0.0;
    ClosedCurve::new(curve.evaluate_at(&params))
}

/// Cutoff `beta(u) = sin^2(pi u)`.
pub fn cutoff(u: f64) -> f64 {
    let s = (PI * u).sin();
    s * s
}

/// Orthonormal normals transported along the curve by
/// `nu' = -|gamma'|^{-2} <nu, gamma''> gamma'`.
#[derive(Clone, Debug)]
pub struct FrameBundle {
    /// `normals[i]` is an `N x n` matrix of samples of `nu_{i+1}`.
    pub normals: Vec<DMatrix<f64>>,
    /// Columns `T(0), nu_1(0), ..., nu_{n-1}(0)`.
    pub initial_basis: DMatrix<f64>,
    /// Largest orthonormality defect over all nodes.
    pub max_drift: f64,
}

fn seed_basis(t0: &DVector<f64>) -> DMatrix<f64> {
    let dim = t0.len();
    let mut axes: Vec<usize> = (0..dim).collect();
    // Stable sort: ties keep the lower index first.
    axes.sort_by(|&a, &b| {
        t0[a]
            .abs()
            .partial_cmp(&t0[b].abs())
            .expect("finite tangent")
    });
    axes.pop();
    let mut basis = DMatrix::zeros(dim, dim);
    basis.set_column(0, t0);
    for (col, &axis) in axes.iter().enumerate() {
        let mut e = DVector::zeros(dim);
        e[axis] = 1.0;
        for _ in 0..2 {
            for prev in 0..=col {
                let b = basis.column(prev).clone_owned();
                e -= &b * b.dot(&e);
            }
        }
        basis.set_column(col + 1, &(&e / e.norm()));
    }
    basis
}

/// Transports an orthonormal normal frame along the curve with a classical
/// RK4 scheme, evaluating `gamma'` and `gamma''` through their band-limited
/// interpolants at stage points.
pub fn build_frame(geom: &CurveGeometry) -> Result<FrameBundle> {
    let n = geom.n_samples();
    let dim = geom.dim();
    let plan = spectral::plan(n);
    let coeffs = |m: &DMatrix<f64>| -> Vec<Vec<_>> {
        (0..dim)
            .map(|c| plan.coefficients(&m.column(c).iter().copied().collect::<Vec<_>>()))
            .collect()
    };
    let c1 = coeffs(&geom.d1);
    let c2 = coeffs(&geom.d2);
    let sub = FRAME_STEPS.div_ceil(n).max(2);
    let h = 1.0 / (n * sub) as f64;
    // Half-step sample points u = i h / 2.
    let total = 2 * n * sub + 1;
    let sample = |cs: &Vec<Vec<_>>| -> Vec<DVector<f64>> {
        (0..total)
            .map(|i| {
                let u = i as f64 * 0.5 * h;
                DVector::from_fn(dim, |c, _| plan.evaluate(&cs[c], u))
            })
            .collect()
    };
    let g1 = sample(&c1);
    let g2 = sample(&c2);
    let rhs = |nu: &DMatrix<f64>, i: usize| -> DMatrix<f64> {
        let (a, b) = (&g1[i], &g2[i]);
        let inv = 1.0 / a.norm_squared();
        // Each column: -inv <nu_k, gamma''> gamma'.
        let proj = nu.tr_mul(b) * (-inv);
        a * proj.transpose()
    };

    let t0 = geom.tangent.row(0).transpose();
    let initial_basis = seed_basis(&t0);
    let mut state = initial_basis.columns(1, dim - 1).clone_owned();
    let mut normals = vec![DMatrix::zeros(n, dim); dim - 1];
    let mut max_drift: f64 = 0.0;
    for j in 0..n {
        for (k, normal) in normals.iter_mut().enumerate() {
            normal.set_row(j, &state.column(k).transpose());
        }
        let t = geom.tangent.row(j).transpose();
        for k in 0..dim - 1 {
            let nk = state.column(k);
            max_drift = max_drift.max(nk.dot(&t).abs()).max((nk.norm() - 1.0).abs());
            for l in k + 1..dim - 1 {
                max_drift = max_drift.max(nk.dot(&state.column(l)).abs());
            }
        }
        for s in 0..sub {
            let i0 = 2 * (j * sub + s);
            let k1 = rhs(&state, i0);
            let k2 = rhs(&(&state + &k1 * (0.5 * h)), i0 + 1);
            let k3 = rhs(&(&state + &k2 * (0.5 * h)), i0 + 1);
            let k4 = rhs(&(&state + &k3 * h), i0 + 2);
            state += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
    }
    if max_drift > FRAME_DRIFT_LIMIT {
        return Err(Error::FrameDrift {
            drift: max_drift,
            limit: FRAME_DRIFT_LIMIT,
        });
    }
    Ok(FrameBundle {
        normals,
        initial_basis,
        max_drift,
    })
}

/// Controllability Gramian `W = int B B^T du`, `B = beta [nu_1 ... nu_{n-1}]`.
#[derive(Clone, Debug)]
pub struct Gramian {
    pub w: DMatrix<f64>,
    pub bump: Vec<f64>,
    /// Smallest eigenvalue of `W`.
    pub mu: f64,
    /// `||W^{-1}|| = 1 / mu`.
    pub inverse_norm: f64,
}

pub fn gramian(geom: &CurveGeometry, frame: &FrameBundle) -> Result<Gramian> {
    let n = geom.n_samples();
    let dim = geom.dim();
    let bump: Vec<f64> = (0..n).map(|j| cutoff(j as f64 / n as f64)).collect();
    let mut w = DMatrix::zeros(dim, dim);
    for normal in &frame.normals {
        let weighted =
            crate::curve::scale_rows(normal, &bump.iter().map(|b| b * b).collect::<Vec<_>>());
        w += normal.tr_mul(&weighted);
    }
    w /= n as f64;
    let w = (&w + w.transpose()) * 0.5;
    let mu = SymmetricEigen::new(w.clone()).eigenvalues.min();
    if !(mu >= GRAMIAN_FLOOR) {
        return Err(Error::SingularGramian { mu });
    }
    Ok(Gramian {
        w,
        bump,
        mu,
        inverse_norm: 1.0 / mu,
    })
}

/// `r w` together with the closure defect `|y(1) - x(1)|`.
#[derive(Clone, Debug)]
pub struct RightInverse {
    pub field: VectorField,
    pub endpoint_defect: f64,
}

fn ensure_on_omega(geom: &CurveGeometry) -> Result<()> {
    let defect = phi_sup(geom);
    if defect > OMEGA_TOL * geom.length {
        return Err(Error::NotArcLengthProportional { defect });
    }
    Ok(())
}

/// Right inverse of `dPhi`: with `y' = w T`, `xi = B^T W^{-1} y(1)` and
/// `x' = B xi`, returns the periodic field `y - x` pinned to zero at `u = 0`.
pub fn right_inverse(
    geom: &CurveGeometry,
    frame: &FrameBundle,
    gram: &Gramian,
    w: &[f64],
) -> Result<RightInverse> {
    let n = geom.n_samples();
    let dim = geom.dim();
    if w.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: w.len(),
        });
    }
    ensure_on_omega(geom)?;
    let scale = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let m = mean(w);
    if m.abs() > 1e-10 * scale + 1e-14 {
        return Err(Error::NonZeroMean { mean: m });
    }
    let y_rate = crate::curve::scale_rows(&geom.tangent, w);
    let y_end = DVector::from_fn(dim, |c, _| y_rate.column(c).sum() / n as f64);
    let target = gram
        .w
        .clone()
        .cholesky()
        .ok_or(Error::SingularGramian { mu: gram.mu })?
        .solve(&y_end);
    let mut x_rate = DMatrix::zeros(n, dim);
    for normal in &frame.normals {
        for j in 0..n {
            let coef = gram.bump[j] * gram.bump[j] * normal.row(j).dot(&target.transpose());
            for c in 0..dim {
                x_rate[(j, c)] += coef * normal[(j, c)];
            }
        }
    }
    let x_end = DVector::from_fn(dim, |c, _| x_rate.column(c).sum() / n as f64);
    let rate = y_rate - x_rate;
    let plan = spectral::plan(n);
    let mut field = DMatrix::zeros(n, dim);
    for c in 0..dim {
        let col: Vec<f64> = rate.column(c).iter().copied().collect();
        field
            .column_mut(c)
            .copy_from_slice(&plan.antiderivative(&col));
    }
    Ok(RightInverse {
        field: VectorField::new(field),
        endpoint_defect: (y_end - x_end).norm(),
    })
}

/// Frame and Gramian of one curve on the constraint manifold, reusable
/// across projections.
#[derive(Clone, Debug)]
pub struct TangentProjector {
    pub geom: CurveGeometry,
    pub frame: FrameBundle,
    pub gramian: Gramian,
}

impl TangentProjector {
    pub fn new(geom: &CurveGeometry) -> Result<Self> {
        ensure_on_omega(geom)?;
        let frame = build_frame(geom)?;
        let gramian = gramian(geom, &frame)?;
        Ok(Self {
            geom: geom.clone(),
            frame,
            gramian,
        })
    }

    pub fn right_inverse(&self, w: &[f64]) -> Result<RightInverse> {
        right_inverse(&self.geom, &self.frame, &self.gramian, w)
    }

    /// `(1 - r dPhi) V`.
    pub fn project(&self, v: &VectorField) -> Result<VectorField> {
        let w = dphi(&self.geom, v)?;
        Ok(v.sub(&self.right_inverse(&w)?.field))
    }
}

/// Projection of `V` onto the tangent space of the constraint manifold.
pub fn tangent_project(geom: &CurveGeometry, v: &VectorField) -> Result<VectorField> {
    TangentProjector::new(geom)?.project(v)
}

/// Band-limited orientation-preserving circle diffeomorphism
/// `u -> u + sum_k a_k sin(2 pi k u + theta_k) / (2 pi k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Diffeo {
    pub modes: Vec<(f64, f64, f64)>,
}

impl Diffeo {
    pub fn identity() -> Self {
        Self { modes: Vec::new() }
    }

    /// `u -> u + amp sin(2 pi u) / (2 pi)`.
    pub fn single(amp: f64) -> Self {
        Self {
            modes: vec![(1.0, amp, 0.0)],
        }
    }

    /// Random diffeomorphism with `max_mode` modes and total amplitude
    /// below `strength`; rejected and redrawn if not monotone.
    pub fn random(seed: u64, max_mode: usize, strength: f64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        const RETRIES: usize = 32;
        for _ in 0..RETRIES {
            let modes: Vec<(f64, f64, f64)> = (1..=max_mode)
                .map(|k| {
                    let a = rng.random_range(-1.0..1.0) * strength / max_mode as f64;
                    let th = rng.random_range(0.0..TAU);
                    (k as f64, a, th)
                })
                .collect();
            let d = Self { modes };
            if d.is_monotone(4096) {
                return Ok(d);
            }
        }
        Err(Error::DiffeoGeneration { retries: RETRIES })
    }

    pub fn eval(&self, u: f64) -> f64 {
        u + self
            .modes
            .iter()
            .map(|&(k, a, th)| a * (TAU * k * u + th).sin() / (TAU * k))
            .sum::<f64>()
    }

    pub fn derivative(&self, u: f64) -> f64 {
        1.0 + self
            .modes
            .iter()
            .map(|&(k, a, th)| a * (TAU * k * u + th).cos())
            .sum::<f64>()
    }

    pub fn is_monotone(&self, samples: usize) -> bool {
        (0..samples).all(|i| self.derivative(i as f64 / samples as f64) > 0.05)
    }
}
