//! Weak-form `H2(ds)` gradient: solve `<g, v>_{H2(ds)} = dE(v)` over the real
//! trigonometric basis `{1, cos 2 pi k u, sin 2 pi k u, cos pi N u}` tensored
//! with the coordinate axes.
//!
//! The `H2(ds)` product couples coordinates only through the identity, so the
//! `nN x nN` Gram matrix is `I_n (x) M` for one scalar `N x N` block `M`.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{Cholesky, DMatrix};

use crate::curve::{scale_rows, CurveGeometry, VectorField};
use crate::energy::EnergyParams;
use crate::error::{Error, Result};
use crate::reparam::phi_sup;

/// Trigonometric basis samples and their exact derivatives on the grid.
pub struct TrigBasis {
    /// `values[(j, a)] = phi_a(u_j)`.
    pub values: DMatrix<f64>,
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    /// Angular frequency `2 pi k` of each basis function.
    pub omega: Vec<f64>,
}

impl TrigBasis {
    fn build(n: usize) -> Self {
        let half = n / 2;
        let mut values = DMatrix::zeros(n, n);
        let mut d1 = DMatrix::zeros(n, n);
        let mut d2 = DMatrix::zeros(n, n);
        let mut omega = vec![0.0; n];
        for j in 0..n {
            values[(j, 0)] = 1.0;
        }
        for k in 1..half {
            let w = TAU * k as f64;
            let (ic, is) = (2 * k - 1, 2 * k);
            omega[ic] = w;
            omega[is] = w;
            for j in 0..n {
                let (s, c) = (w * j as f64 / n as f64).sin_cos();
                values[(j, ic)] = c;
                values[(j, is)] = s;
                d1[(j, ic)] = -w * s;
                d1[(j, is)] = w * c;
                d2[(j, ic)] = -w * w * c;
                d2[(j, is)] = -w * w * s;
            }
        }
        // Nyquist: cos(pi N u) = (-1)^j; odd derivatives vanish on the grid.
        let w = PI * n as f64;
        omega[n - 1] = w;
        for j in 0..n {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            values[(j, n - 1)] = sign;
            d2[(j, n - 1)] = -w * w * sign;
        }
        Self {
            values,
            d1,
            d2,
            omega,
        }
    }

    pub fn for_samples(n: usize) -> Arc<TrigBasis> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<TrigBasis>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("basis cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(TrigBasis::build(n)))
            .clone()
    }
}

/// The linear system for the weak gradient.
#[derive(Clone, Debug)]
pub struct GramSystem {
    /// Scalar block `M_ab = <phi_a, phi_b>_{H2(ds)}`.
    pub block: DMatrix<f64>,
    pub dim: usize,
    /// `rhs[(a, i)] = dE(phi_a e_i)`; empty until [`assemble_rhs`] runs.
    pub rhs: DMatrix<f64>,
}

impl GramSystem {
    /// The full `nN x nN` matrix with coordinate-major ordering.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.block.nrows();
        let mut full = DMatrix::zeros(n * self.dim, n * self.dim);
        for i in 0..self.dim {
            full.view_mut((i * n, i * n), (n, n)).copy_from(&self.block);
        }
        full
    }

    pub fn rhs_vector(&self) -> Vec<f64> {
        (0..self.dim)
            .flat_map(|i| self.rhs.column(i).iter().copied().collect::<Vec<_>>())
            .collect()
    }
}

/// Samples `v_ss` of every basis function: `c2 phi'' + c1 phi'`.
fn basis_dss(geom: &CurveGeometry, basis: &TrigBasis) -> DMatrix<f64> {
    let (c1, c2) = geom.chain_coefficients();
    scale_rows(&basis.d2, &c2) + scale_rows(&basis.d1, &c1)
}

/// Gram matrix of the `H2(ds)` product over the trigonometric basis.
pub fn assemble_gram(geom: &CurveGeometry) -> GramSystem {
    let n = geom.n_samples();
    let basis = TrigBasis::for_samples(n);
    let w: Vec<f64> = geom.speed.iter().map(|s| s / n as f64).collect();
    let w1: Vec<f64> = geom.speed.iter().map(|s| 1.0 / (s * n as f64)).collect();
    let dss = basis_dss(geom, &basis);
    let mut block = basis.values.tr_mul(&scale_rows(&basis.values, &w));
    block += basis.d1.tr_mul(&scale_rows(&basis.d1, &w1));
    block += dss.tr_mul(&scale_rows(&dss, &w));
    // Symmetrise away roundoff from the three products.
    let block = (&block + block.transpose()) * 0.5;
    GramSystem {
        block,
        dim: geom.dim(),
        rhs: DMatrix::zeros(0, 0),
    }
}

/// Right-hand side `dE(phi_a e_i)` for every basis function.
pub fn assemble_rhs(geom: &CurveGeometry, params: &EnergyParams) -> DMatrix<f64> {
    let n = geom.n_samples();
    let basis = TrigBasis::for_samples(n);
    let dss = basis_dss(geom, &basis);
    let w: Vec<f64> = geom.speed.iter().map(|s| s / n as f64).collect();
    let bend: Vec<f64> = (0..n).map(|j| 3.0 * geom.ksq[j] / n as f64).collect();
    let kappa_w = scale_rows(&geom.kappa, &w);
    let mut rhs = dss.tr_mul(&kappa_w) * 2.0;
    rhs -= basis.d1.tr_mul(&scale_rows(&geom.tangent, &bend));
    rhs -= basis.values.tr_mul(&kappa_w) * params.lambda_sq();
    rhs
}

/// Diagonal of the Gram block on an arc-length-proportional curve.
pub fn uniform_speed_diagonal(n: usize, length: f64) -> Vec<f64> {
    let basis = TrigBasis::for_samples(n);
    let l = length;
    basis
        .omega
        .iter()
        .enumerate()
        .map(|(a, &w)| {
            if a == 0 {
                l
            } else if a == n - 1 {
                // The grid derivative of the Nyquist mode vanishes.
                l + w.powi(4) / l.powi(3)
            } else {
                0.5 * (l + w * w / l + w.powi(4) / l.powi(3))
            }
        })
        .collect()
}

/// Weak gradient together with the relative residual of the linear solve.
#[derive(Clone, Debug)]
pub struct WeakSolution {
    pub gradient: VectorField,
    pub relative_residual: f64,
    pub used_fast_path: bool,
}

/// Solves the Gram system for the `H2(ds)` gradient.
pub fn solve_weak(geom: &CurveGeometry, params: &EnergyParams) -> Result<WeakSolution> {
    let n = geom.n_samples();
    let basis = TrigBasis::for_samples(n);
    let rhs = assemble_rhs(geom, params);
    let fast = phi_sup(geom) < 1e-10 * geom.length;
    let (coeffs, residual) = if fast {
        let diag = uniform_speed_diagonal(n, geom.length);
        let mut c = rhs.clone();
        for a in 0..n {
            for i in 0..c.ncols() {
                c[(a, i)] /= diag[a];
            }
        }
        (c, 0.0)
    } else {
        let gram = assemble_gram(geom);
        let chol = Cholesky::new(gram.block.clone()).ok_or(Error::FactorizationFailure)?;
        let c = chol.solve(&rhs);
        let scale = rhs.norm();
        let residual = if scale > 0.0 {
            (&gram.block * &c - &rhs).norm() / scale
        } else {
            0.0
        };
        (c, residual)
    };
    Ok(WeakSolution {
        gradient: VectorField::new(&basis.values * coeffs),
        relative_residual: residual,
        used_fast_path: fast,
    })
}

/// `H2(ds)` gradient by the weak formulation.
pub fn h2_gradient_weak(geom: &CurveGeometry, params: &EnergyParams) -> Result<VectorField> {
    Ok(solve_weak(geom, params)?.gradient)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{geometry, make_curve, Shape};
    use crate::energy::first_variation;

    #[test]
    fn basis_derivatives_match_spectral() {
        let b = TrigBasis::for_samples(16);
        let sd1 = crate::curve::diff_columns(&b.values, 1);
        let sd2 = crate::curve::diff_columns(&b.values, 2);
        assert!((&sd1 - &b.d1).amax() < 1e-10);
        assert!((&sd2 - &b.d2).amax() < 1e-8);
    }

    #[test]
    fn uniform_circle_gram_is_diagonal() {
        let g = geometry(&make_curve(Shape::Circle { r: 1.3, fold: 1 }, 32, 2).unwrap()).unwrap();
        let m = assemble_gram(&g);
        let diag = uniform_speed_diagonal(32, g.length);
        for a in 0..32 {
            for b in 0..32 {
                let expect = if a == b { diag[a] } else { 0.0 };
                assert!(
                    (m.block[(a, b)] - expect).abs() < 1e-9 * diag[a].max(diag[b]),
                    "({a},{b}) {} vs {}",
                    m.block[(a, b)],
                    expect
                );
            }
        }
    }

    #[test]
    fn gram_symmetric_and_full_matrix_shape() {
        let g = geometry(
            &make_curve(
                Shape::FourierRandom {
                    seed: 4,
                    decay: 1.0,
                },
                32,
                3,
            )
            .unwrap(),
        )
        .unwrap();
        let m = assemble_gram(&g);
        let full = m.matrix();
        assert_eq!(full.nrows(), 96);
        assert!((&full - full.transpose()).amax() < 1e-12 * full.amax());
    }

    #[test]
    fn defining_identity_on_basis() {
        let c = make_curve(Shape::Ellipse { a: 1.3, b: 0.7 }, 64, 2).unwrap();
        let g = geometry(&c).unwrap();
        let p = EnergyParams::new(1.0).unwrap();
        let sol = solve_weak(&g, &p).unwrap();
        assert!(!sol.used_fast_path);
        assert!(sol.relative_residual < 1e-12);
        let basis = TrigBasis::for_samples(64);
        let scale = assemble_rhs(&g, &p).amax().max(1.0);
        for a in [0usize, 1, 2, 5, 30, 63] {
            for i in 0..2 {
                let mut vals = DMatrix::zeros(64, 2);
                vals.column_mut(i).copy_from(&basis.values.column(a));
                let v = VectorField::new(vals);
                let lhs = g.h2ds_inner(&sol.gradient, &v).unwrap();
                let rhs = first_variation(&g, &p, &v).unwrap();
                assert!((lhs - rhs).abs() < 1e-10 * scale, "a={a}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn fast_path_matches_full_solve_on_circle() {
        let c = make_curve(Shape::Circle { r: 1.7, fold: 1 }, 32, 2).unwrap();
        let g = geometry(&c).unwrap();
        let p = EnergyParams::new(1.0).unwrap();
        let fast = solve_weak(&g, &p).unwrap();
        assert!(fast.used_fast_path);
        let gram = assemble_gram(&g);
        let rhs = assemble_rhs(&g, &p);
        let coeffs = Cholesky::new(gram.block).unwrap().solve(&rhs);
        let full = &TrigBasis::for_samples(32).values * coeffs;
        assert!((fast.gradient.values() - full).amax() < 1e-12);
    }
}
