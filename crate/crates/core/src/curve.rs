//! Closed curves sampled on a uniform parameter grid, their spectrally
//! differentiated geometry, and the `L2(ds)` / `H2(ds)` products along them.

use std::f64::consts::TAU;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral;

/// Minimum admissible speed `|gamma'(u)|`.
pub const IMMERSION_FLOOR: f64 = 1e-9;
/// Smallest sample count accepted for a curve.
pub const MIN_SAMPLES: usize = 16;

/// `N` samples `gamma(j / N)` of a closed curve in `R^n`, stored as an
/// `N x n` matrix (one row per node).
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedCurve {
    points: DMatrix<f64>,
}

/// A variation along a curve: one vector per sample node.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    values: DMatrix<f64>,
}

fn check_grid(n: usize, dim: usize) -> Result<()> {
    if n < MIN_SAMPLES || !n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "sample count {n} must be even and at least {MIN_SAMPLES}"
        )));
    }
    if dim < 2 {
        return Err(Error::InvalidParameter(format!(
            "ambient dimension {dim} must be at least 2"
        )));
    }
    Ok(())
}

/// Applies the trigonometric derivative to every column.
pub(crate) fn diff_columns(m: &DMatrix<f64>, order: usize) -> DMatrix<f64> {
    let plan = spectral::plan(m.nrows());
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for c in 0..m.ncols() {
        let col: Vec<f64> = m.column(c).iter().copied().collect();
        let d = plan
            .differentiate(&col, order)
            .expect("order and length validated by caller");
        out.column_mut(c).copy_from_slice(&d);
    }
    out
}

/// Row-wise dot products of two `N x n` matrices.
pub(crate) fn row_dots(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    (0..a.nrows())
        .map(|j| (0..a.ncols()).map(|c| a[(j, c)] * b[(j, c)]).sum())
        .collect()
}

/// Multiplies row `j` of `m` by `s[j]`.
pub(crate) fn scale_rows(m: &DMatrix<f64>, s: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for c in 0..m.ncols() {
        for j in 0..m.nrows() {
            out[(j, c)] *= s[j];
        }
    }
    out
}

impl ClosedCurve {
    pub fn new(points: DMatrix<f64>) -> Result<Self> {
        check_grid(points.nrows(), points.ncols())?;
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite sample".into()));
        }
        Ok(Self { points })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, dim, |j, c| rows[j][c]))
    }

    /// Samples a parametrised map `u -> gamma(u)` on the uniform grid.
    pub fn from_fn(n: usize, dim: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        check_grid(n, dim)?;
        let mut points = DMatrix::zeros(n, dim);
        for j in 0..n {
            let p = f(j as f64 / n as f64);
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            for c in 0..dim {
                points[(j, c)] = p[c];
            }
        }
        Self::new(points)
    }

    pub fn n_samples(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn point(&self, j: usize) -> Vec<f64> {
        self.points.row(j).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_samples()).map(|j| self.point(j)).collect()
    }

    pub fn translate(&self, c: &[f64]) -> Result<Self> {
        if c.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: c.len(),
            });
        }
        let mut points = self.points.clone();
        for j in 0..points.nrows() {
            for (k, ck) in c.iter().enumerate() {
                points[(j, k)] += ck;
            }
        }
        Ok(Self { points })
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            points: &self.points * factor,
        }
    }

    /// `gamma + eps * v`.
    pub fn perturb(&self, v: &VectorField, eps: f64) -> Result<Self> {
        v.check_against(self)?;
        Self::new(&self.points + &v.values * eps)
    }

    /// Trigonometric derivative `d^order gamma / du^order` at the nodes.
    pub fn derivative(&self, order: usize) -> Result<DMatrix<f64>> {
        if !(1..=4).contains(&order) {
            return Err(Error::InvalidOrder(order));
        }
        Ok(diff_columns(&self.points, order))
    }

    /// Evaluates the band-limited interpolant at arbitrary parameters.
    pub fn evaluate_at(&self, params: &[f64]) -> DMatrix<f64> {
        let plan = spectral::plan(self.n_samples());
        let mut out = DMatrix::zeros(params.len(), self.dim());
        for c in 0..self.dim() {
            let col: Vec<f64> = self.points.column(c).iter().copied().collect();
            let coeffs = plan.coefficients(&col);
            for (i, &u) in params.iter().enumerate() {
                out[(i, c)] = plan.evaluate(&coeffs, u);
            }
        }
        out
    }

    /// Samples `gamma o phi` through the band-limited interpolant of `gamma`.
    pub fn reparametrize(&self, phi: impl Fn(f64) -> f64) -> Result<Self> {
        let n = self.n_samples();
        let params: Vec<f64> = (0..n).map(|j| phi(j as f64 / n as f64)).collect();
        Self::new(self.evaluate_at(&params))
    }

    /// Cyclic shift of the sample grid by `k` nodes.
    pub fn rotate_samples(&self, k: usize) -> Self {
        let n = self.n_samples();
        let points = DMatrix::from_fn(n, self.dim(), |j, c| self.points[((j + k) % n, c)]);
        Self { points }
    }

    pub fn to_document(&self) -> CurveDocument {
        CurveDocument {
            dim: self.dim(),
            n_samples: self.n_samples(),
            points: self.rows(),
        }
    }

    pub fn from_document(doc: &CurveDocument) -> Result<Self> {
        if doc.points.len() != doc.n_samples {
            return Err(Error::LengthMismatch {
                expected: doc.n_samples,
                got: doc.points.len(),
            });
        }
        let curve = Self::from_rows(&doc.points)?;
        if curve.dim() != doc.dim {
            return Err(Error::DimensionMismatch {
                expected: doc.dim,
                got: curve.dim(),
            });
        }
        Ok(curve)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CurveDocument = serde_json::from_str(text)?;
        Self::from_document(&doc)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk form of a curve: `dim`, `n_samples`, and the row-major
/// `n_samples x dim` array of points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveDocument {
    pub dim: usize,
    pub n_samples: usize,
    pub points: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(values: DMatrix<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(n: usize, dim: usize) -> Self {
        Self {
            values: DMatrix::zeros(n, dim),
        }
    }

    pub fn constant(n: usize, c: &[f64]) -> Self {
        Self {
            values: DMatrix::from_fn(n, c.len(), |_, k| c[k]),
        }
    }

    pub fn from_fn(n: usize, dim: usize, f: impl Fn(f64) -> Vec<f64>) -> Self {
        let mut values = DMatrix::zeros(n, dim);
        for j in 0..n {
            let p = f(j as f64 / n as f64);
            for c in 0..dim {
                values[(j, c)] = p[c];
            }
        }
        Self { values }
    }

    /// Random band-limited field: Gaussian Fourier coefficients up to
    /// `max_mode` with amplitude decaying like `e^{-decay k}`.
    pub fn random_smooth(n: usize, dim: usize, max_mode: usize, decay: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = DMatrix::zeros(n, dim);
        for c in 0..dim {
            let offset: f64 = rng.sample(StandardNormal);
            let mut modes = Vec::with_capacity(max_mode);
            for k in 1..=max_mode {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                modes.push((k as f64, a, b, (-decay * k as f64).exp()));
            }
            for j in 0..n {
                let u = j as f64 / n as f64;
                values[(j, c)] = offset
                    + modes
                        .iter()
                        .map(|&(k, a, b, amp)| {
                            amp * (a * (TAU * k * u).cos() + b * (TAU * k * u).sin())
                        })
                        .sum::<f64>();
            }
        }
        Self { values }
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            values: &self.values * s,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            values: &self.values + &other.values,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            values: &self.values - &other.values,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Plain `L2(du)` norm on the parameter circle.
    pub fn l2_du(&self) -> f64 {
        (self.values.iter().map(|x| x * x).sum::<f64>() / self.n_samples() as f64).sqrt()
    }

    /// Parametrisation-dependent `H2(du)` norm, `||v|| + ||v'|| + ||v''||`
    /// in the Hilbert sense.
    pub fn h2_du(&self) -> f64 {
        let d1 = diff_columns(&self.values, 1);
        let d2 = diff_columns(&self.values, 2);
        let n = self.n_samples() as f64;
        let sq = |m: &DMatrix<f64>| m.iter().map(|x| x * x).sum::<f64>() / n;
        (sq(&self.values) + sq(&d1) + sq(&d2)).sqrt()
    }

    pub(crate) fn check_against(&self, curve: &ClosedCurve) -> Result<()> {
        if self.n_samples() != curve.n_samples() {
            return Err(Error::LengthMismatch {
                expected: curve.n_samples(),
                got: self.n_samples(),
            });
        }
        if self.dim() != curve.dim() {
            return Err(Error::DimensionMismatch {
                expected: curve.dim(),
                got: self.dim(),
            });
        }
        Ok(())
    }

    /// Same field sampled after a cyclic shift of the grid.
    pub fn rotate_samples(&self, k: usize) -> Self {
        let n = self.n_samples();
        Self {
            values: DMatrix::from_fn(n, self.dim(), |j, c| self.values[((j + k) % n, c)]),
        }
    }
}

/// Derived geometry of an immersed curve. A pure function of the curve; the
/// curve itself is kept so downstream code never pairs stale geometry with a
/// different curve.
#[derive(Clone, Debug)]
pub struct CurveGeometry {
    pub curve: ClosedCurve,
    /// `gamma'`.
    pub d1: DMatrix<f64>,
    /// `gamma''`.
    pub d2: DMatrix<f64>,
    pub speed: Vec<f64>,
    pub tangent: DMatrix<f64>,
    pub kappa: DMatrix<f64>,
    pub ksq: Vec<f64>,
    pub arclen: Vec<f64>,
    pub length: f64,
}

/// Computes the geometry of `curve`; fails if the minimum speed is at or
/// below [`IMMERSION_FLOOR`].
pub fn geometry(curve: &ClosedCurve) -> Result<CurveGeometry> {
    let n = curve.n_samples();
    let d1 = diff_columns(curve.points(), 1);
    let d2 = diff_columns(curve.points(), 2);
    let speed: Vec<f64> = row_dots(&d1, &d1).into_iter().map(f64::sqrt).collect();
    let min_speed = speed.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_speed > IMMERSION_FLOOR) {
        return Err(Error::NonImmersed {
            min_speed,
            floor: IMMERSION_FLOOR,
        });
    }
    let inv: Vec<f64> = speed.iter().map(|s| 1.0 / s).collect();
    let tangent = scale_rows(&d1, &inv);
    // kappa = gamma'' |gamma'|^-2 - <gamma'', gamma'> gamma' |gamma'|^-4
    let dot12 = row_dots(&d2, &d1);
    let mut kappa = DMatrix::zeros(n, curve.dim());
    for j in 0..n {
        let s2 = speed[j] * speed[j];
        for c in 0..curve.dim() {
            kappa[(j, c)] = d2[(j, c)] / s2 - dot12[j] * d1[(j, c)] / (s2 * s2);
        }
    }
    let ksq = row_dots(&kappa, &kappa);
    let length = speed.iter().sum::<f64>() / n as f64;
    // s(u) = L u + periodic antiderivative of (speed - L).
    let periodic = spectral::plan(n).antiderivative(&speed);
    let arclen = (0..n)
        .map(|j| length * j as f64 / n as f64 + periodic[j])
        .collect();
    Ok(CurveGeometry {
        curve: curve.clone(),
        d1,
        d2,
        speed,
        tangent,
        kappa,
        ksq,
        arclen,
        length,
    })
}

impl CurveGeometry {
    pub fn n_samples(&self) -> usize {
        self.speed.len()
    }

    pub fn dim(&self) -> usize {
        self.curve.dim()
    }

    /// Periodic trapezoid rule for `int f ds`.
    pub fn integrate_ds(&self, scalar: &[f64]) -> Result<f64> {
        if scalar.len() != self.n_samples() {
            return Err(Error::LengthMismatch {
                expected: self.n_samples(),
                got: scalar.len(),
            });
        }
        Ok(scalar
            .iter()
            .zip(&self.speed)
            .map(|(f, s)| f * s)
            .sum::<f64>()
            / self.n_samples() as f64)
    }

    /// Arc-length derivative `v_s = v' / |gamma'|` of nodal data.
    pub fn d_s(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let inv: Vec<f64> = self.speed.iter().map(|s| 1.0 / s).collect();
        scale_rows(&diff_columns(m, 1), &inv)
    }

    /// Second arc-length derivative by the same chain rule used for kappa.
    pub fn d_ss(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let v1 = diff_columns(m, 1);
        let v2 = diff_columns(m, 2);
        self.d_ss_from(&v1, &v2)
    }

    /// Chain rule `v'' / |gamma'|^2 - <gamma'', gamma'> v' / |gamma'|^4` from
    /// precomputed parameter derivatives.
    pub fn d_ss_from(&self, v1: &DMatrix<f64>, v2: &DMatrix<f64>) -> DMatrix<f64> {
        let (c1, c2) = self.chain_coefficients();
        let mut out = DMatrix::zeros(v1.nrows(), v1.ncols());
        for c in 0..v1.ncols() {
            for j in 0..v1.nrows() {
                out[(j, c)] = c2[j] * v2[(j, c)] + c1[j] * v1[(j, c)];
            }
        }
        out
    }

    /// Coefficients `(c1, c2)` with `v_ss = c2 v'' + c1 v'`.
    pub fn chain_coefficients(&self) -> (Vec<f64>, Vec<f64>) {
        let dot12 = row_dots(&self.d2, &self.d1);
        let c2 = self.speed.iter().map(|s| 1.0 / (s * s)).collect();
        let c1 = dot12
            .iter()
            .zip(&self.speed)
            .map(|(d, s)| -d / s.powi(4))
            .collect();
        (c1, c2)
    }

    /// `int <v, w> ds`.
    pub fn l2ds_inner(&self, v: &VectorField, w: &VectorField) -> Result<f64> {
        v.check_against(&self.curve)?;
        w.check_against(&self.curve)?;
        self.integrate_ds(&row_dots(v.values(), w.values()))
    }

    /// `int <v, w> + <v_s, w_s> + <v_ss, w_ss> ds`.
    pub fn h2ds_inner(&self, v: &VectorField, w: &VectorField) -> Result<f64> {
        v.check_against(&self.curve)?;
        w.check_against(&self.curve)?;
        let (vs, vss) = (self.d_s(v.values()), self.d_ss(v.values()));
        let (ws, wss) = if v == w {
            (vs.clone(), vss.clone())
        } else {
            (self.d_s(w.values()), self.d_ss(w.values()))
        };
        let n = self.n_samples();
        let a = row_dots(v.values(), w.values());
        let b = row_dots(&vs, &ws);
        let c = row_dots(&vss, &wss);
        let total: Vec<f64> = (0..n).map(|j| a[j] + b[j] + c[j]).collect();
        self.integrate_ds(&total)
    }

    pub fn h2ds_norm(&self, v: &VectorField) -> Result<f64> {
        Ok(self.h2ds_inner(v, v)?.max(0.0).sqrt())
    }

    pub fn l2ds_norm(&self, v: &VectorField) -> Result<f64> {
        Ok(self.l2ds_inner(v, v)?.max(0.0).sqrt())
    }

    pub fn min_speed(&self) -> f64 {
        self.speed.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `int f ds` along `curve`.
pub fn integrate_ds(curve: &ClosedCurve, scalar: &[f64]) -> Result<f64> {
    geometry(curve)?.integrate_ds(scalar)
}

/// `H2(ds)` product of two variations along `curve`.
pub fn h2ds_inner(curve: &ClosedCurve, v: &VectorField, w: &VectorField) -> Result<f64> {
    geometry(curve)?.h2ds_inner(v, w)
}

/// Test-fixture shapes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    /// Circle of radius `r` traversed `fold` times.
    Circle {
        r: f64,
        fold: u32,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// Lemniscate of Gerono `(sin 2 pi u, sin 2 pi u cos 2 pi u)`.
    FigureEight {
        scale: f64,
    },
    /// Random Fourier perturbation of the unit circle in all coordinates.
    FourierRandom {
        seed: u64,
        decay: f64,
    },
}

const CURVE_RETRIES: usize = 64;
/// Amplitude of the first random Fourier mode.
const FOURIER_AMPLITUDE: f64 = 0.3;
/// Random curves whose speed dips below this fraction of the mean are redrawn.
const MIN_SPEED_RATIO: f64 = 0.5;

/// Samples a fixture curve. Planar shapes occupy the first two coordinates.
pub fn make_curve(shape: Shape, n: usize, dim: usize) -> Result<ClosedCurve> {
    check_grid(n, dim)?;
    let embed = |x: f64, y: f64| {
        let mut p = vec![0.0; dim];
        p[0] = x;
        p[1] = y;
        p
    };
    let positive = |name: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{name} must be positive, got {v}"
            )))
        }
    };
    match shape {
        Shape::Circle { r, fold } => {
            positive("r", r)?;
            if fold == 0 || 2 * fold as usize >= n / 2 {
                return Err(Error::InvalidParameter(format!("fold {fold} out of range")));
            }
            let f = fold as f64;
            ClosedCurve::from_fn(n, dim, |u| {
                embed(r * (TAU * f * u).cos(), r * (TAU * f * u).sin())
            })
        }
        Shape::Ellipse { a, b } => {
            positive("a", a)?;
            positive("b", b)?;
            ClosedCurve::from_fn(n, dim, |u| embed(a * (TAU * u).cos(), b * (TAU * u).sin()))
        }
        Shape::FigureEight { scale } => {
            positive("scale", scale)?;
            ClosedCurve::from_fn(n, dim, |u| {
                let s = (TAU * u).sin();
                embed(scale * s, scale * s * (TAU * u).cos())
            })
        }
        Shape::FourierRandom { seed, decay } => {
            positive("decay", decay)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // Modes are drawn independently of `n` so a seed names one curve at
            // every resolution; modes at or above Nyquist are dropped.
            let max_mode = ((30.0 / decay).ceil() as usize).clamp(1, 64);
            for _ in 0..CURVE_RETRIES {
                let mut coeffs = Vec::with_capacity(max_mode);
                for k in 1..=max_mode {
                    let amp = FOURIER_AMPLITUDE * (-decay * (k as f64 - 1.0)).exp();
                    let a: Vec<f64> = (0..dim)
                        .map(|_| amp * rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    let b: Vec<f64> = (0..dim)
                        .map(|_| amp * rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    coeffs.push((k as f64, a, b));
                }
                let curve = ClosedCurve::from_fn(n, dim, |u| {
                    let mut p = embed((TAU * u).cos(), (TAU * u).sin());
                    for (k, a, b) in coeffs.iter().filter(|(k, ..)| 2.0 * k < n as f64) {
                        let (c, s) = ((TAU * k * u).cos(), (TAU * k * u).sin());
                        for i in 0..dim {
                            p[i] += a[i] * c + b[i] * s;
                        }
                    }
                    p
                })?;
                if let Ok(g) = geometry(&curve) {
                    let mean = g.length;
                    if g.min_speed() > MIN_SPEED_RATIO * mean {
                        return Ok(curve);
                    }
                }
            }
            Err(Error::CurveGeneration {
                retries: CURVE_RETRIES,
            })
        }
    }
}

/// A named fixture: shape and ambient dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fixture {
    pub name: &'static str,
    pub shape: Shape,
    pub dim: usize,
}

impl Fixture {
    pub fn sample(&self, n: usize) -> Result<ClosedCurve> {
        make_curve(self.shape, n, self.dim)
    }
}

/// Three circles, three ellipses, the lemniscate and five random curves
/// (two of them in space).
pub fn fixture_family() -> Vec<Fixture> {
    let fx = |name, shape, dim| Fixture { name, shape, dim };
    vec![
        fx("circle-0.5", Shape::Circle { r: 0.5, fold: 1 }, 2),
        fx("circle-1", Shape::Circle { r: 1.0, fold: 1 }, 2),
        fx("circle-2", Shape::Circle { r: 2.0, fold: 1 }, 2),
        fx("ellipse-1.3-0.7", Shape::Ellipse { a: 1.3, b: 0.7 }, 2),
        fx("ellipse-2-0.5", Shape::Ellipse { a: 2.0, b: 0.5 }, 2),
        fx("ellipse-1-0.8", Shape::Ellipse { a: 1.0, b: 0.8 }, 2),
        fx("figure-eight", Shape::FigureEight { scale: 1.0 }, 2),
        fx(
            "fourier-1",
            Shape::FourierRandom {
                seed: 1,
                decay: 1.0,
            },
            2,
        ),
        fx(
            "fourier-2",
            Shape::FourierRandom {
                seed: 2,
                decay: 1.0,
            },
            2,
        ),
        fx(
            "fourier-3",
            Shape::FourierRandom {
                seed: 3,
                decay: 1.2,
            },
            2,
        ),
        fx(
            "fourier-4",
            Shape::FourierRandom {
                seed: 4,
                decay: 1.0,
            },
            3,
        ),
        fx(
            "fourier-5",
            Shape::FourierRandom {
                seed: 5,
                decay: 1.5,
            },
            3,
        ),
    ]
}
