//! The modified elastic energy `int k^2 ds + lambda^2 L`, its variations,
//! the `L2(ds)` gradient, and the auxiliary functional `J`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::curve::{diff_columns, row_dots, scale_rows, CurveGeometry, VectorField};
use crate::error::{Error, Result};

/// The length-penalty constant. Only `lambda^2` enters the formulas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    lambda: f64,
}

impl EnergyParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and non-zero, got {lambda}"
            )));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lambda_sq(&self) -> f64 {
        self.lambda * self.lambda
    }

    /// Radius of the stationary circle, `1 / |lambda|`.
    pub fn critical_radius(&self) -> f64 {
        1.0 / self.lambda.abs()
    }
}

/// `E = int k^2 ds + lambda^2 L`.
pub fn energy(geom: &CurveGeometry, params: &EnergyParams) -> f64 {
    geom.integrate_ds(&geom.ksq)
        .expect("geometry arrays are consistent")
        + params.lambda_sq() * geom.length
}

/// `int k^2 ds` alone.
pub fn bending(geom: &CurveGeometry) -> f64 {
    geom.integrate_ds(&geom.ksq)
        .expect("geometry arrays are consistent")
}

/// `dE(v) = int 2<kappa, v_ss> - 3 k^2 <T, v_s> - lambda^2 <kappa, v> ds`.
pub fn first_variation(
    geom: &CurveGeometry,
    params: &EnergyParams,
    v: &VectorField,
) -> Result<f64> {
    v.check_against(&geom.curve)?;
    let vs = geom.d_s(v.values());
    let vss = geom.d_ss(v.values());
    let a = row_dots(&geom.kappa, &vss);
    let b = row_dots(&geom.tangent, &vs);
    let c = row_dots(&geom.kappa, v.values());
    let l2 = params.lambda_sq();
    let integrand: Vec<f64> = (0..geom.n_samples())
        .map(|j| 2.0 * a[j] - 3.0 * geom.ksq[j] * b[j] - l2 * c[j])
        .collect();
    geom.integrate_ds(&integrand)
}

/// Iterated arc-length derivatives `T, T_s, T_ss, T_sss` obtained by
/// repeated application of `|gamma'|^{-1} d/du`.
fn iterated_derivatives(geom: &CurveGeometry) -> [DMatrix<f64>; 4] {
    let t = geom.d_s(geom.curve.points());
    let k = geom.d_s(&t);
    let k3 = geom.d_s(&k);
    let k4 = geom.d_s(&k3);
    [t, k, k3, k4]
}

/// Classical `L2(ds)` gradient `2 gamma_ssss + 3 (k^2 gamma_s)_s - lambda^2 gamma_ss`.
pub fn l2_gradient(geom: &CurveGeometry, params: &EnergyParams) -> VectorField {
    let [t, k, _, k4] = iterated_derivatives(geom);
    let ksq = row_dots(&k, &k);
    let flux = geom.d_s(&scale_rows(&t, &ksq));
    VectorField::new(k4 * 2.0 + flux * 3.0 - k * params.lambda_sq())
}

/// Euler-Lagrange residual `2 d_s^4 gamma + d_s((3k^2 - lambda^2) gamma_s)`
/// and its `L2(ds)` norm.
pub fn el_residual(geom: &CurveGeometry, params: &EnergyParams) -> (VectorField, f64) {
    let [t, k, _, k4] = iterated_derivatives(geom);
    let ksq = row_dots(&k, &k);
    let l2 = params.lambda_sq();
    let weight: Vec<f64> = ksq.iter().map(|q| 3.0 * q - l2).collect();
    let field = VectorField::new(k4 * 2.0 + geom.d_s(&scale_rows(&t, &weight)));
    let norm = geom
        .l2ds_norm(&field)
        .expect("field built on the curve grid");
    (field, norm)
}

/// Second variation `d^2E(V, W)` evaluated from the three grouped
/// integrand lines of the closed-form expression.
pub fn second_variation(
    geom: &CurveGeometry,
    params: &EnergyParams,
    v: &VectorField,
    w: &VectorField,
) -> Result<f64> {
    v.check_against(&geom.curve)?;
    w.check_against(&geom.curve)?;
    let n = geom.n_samples();
    let dim = geom.dim();
    let (t, kap) = (&geom.tangent, &geom.kappa);
    let vs = geom.d_s(v.values());
    let vss = geom.d_ss(v.values());
    let ws = geom.d_s(w.values());
    let wss = geom.d_ss(w.values());
    let l2 = params.lambda_sq();

    let vss_t = row_dots(&vss, t);
    let vs_k = row_dots(&vs, kap);
    let vs_t = row_dots(&vs, t);
    let vss_k = row_dots(&vss, kap);

    let mut integrand = vec![0.0; n];
    for j in 0..n {
        let ksq = geom.ksq[j];
        let mut acc = 0.0;
        for c in 0..dim {
            let line1 = 2.0 * vss[(j, c)]
                - 2.0 * vss_t[j] * t[(j, c)]
                - 2.0 * vs_k[j] * t[(j, c)]
                - 6.0 * vs_t[j] * kap[(j, c)];
            let line2 = -2.0 * vs_k[j] * kap[(j, c)]
                - 6.0 * vss_k[j] * t[(j, c)]
                - 2.0 * vss_t[j] * kap[(j, c)];
            let line3 = -(3.0 * ksq - l2) * vs[(j, c)] + (15.0 * ksq - l2) * vs_t[j] * t[(j, c)];
            acc += wss[(j, c)] * line1 + ws[(j, c)] * (line2 + line3);
        }
        integrand[j] = acc;
    }
    geom.integrate_ds(&integrand)
}

/// `dL(V) = int <V', T> du`.
pub fn length_variation(geom: &CurveGeometry, v: &VectorField) -> Result<f64> {
    v.check_against(&geom.curve)?;
    let v1 = diff_columns(v.values(), 1);
    Ok(row_dots(&v1, &geom.tangent).iter().sum::<f64>() / geom.n_samples() as f64)
}

fn gamma_uu_sq(geom: &CurveGeometry) -> f64 {
    geom.d2.iter().map(|x| x * x).sum::<f64>() / geom.n_samples() as f64
}

/// `J = L^{-3} int |gamma''|^2 du + lambda^2 L`; agrees with `E` on
/// arc-length-proportional curves.
pub fn j_functional(geom: &CurveGeometry, params: &EnergyParams) -> f64 {
    gamma_uu_sq(geom) / geom.length.powi(3) + params.lambda_sq() * geom.length
}

/// `dJ(V) = -3 L^{-4} dL(V) int |gamma''|^2 + 2 L^{-3} int <V'', gamma''> + lambda^2 dL(V)`.
pub fn j_variation(geom: &CurveGeometry, params: &EnergyParams, v: &VectorField) -> Result<f64> {
    let dl = length_variation(geom, v)?;
    let l = geom.length;
    let v2 = diff_columns(v.values(), 2);
    let cross = row_dots(&v2, &geom.d2).iter().sum::<f64>() / geom.n_samples() as f64;
    Ok(-3.0 / l.powi(4) * dl * gamma_uu_sq(geom)
        + 2.0 / l.powi(3) * cross
        + params.lambda_sq() * dl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{geometry, make_curve, ClosedCurve, Shape};
    use std::f64::consts::{PI, TAU};

    fn circle(r: f64, n: usize) -> ClosedCurve {
        make_curve(Shape::Circle { r, fold: 1 }, n, 2).unwrap()
    }

    fn params(l: f64) -> EnergyParams {
        EnergyParams::new(l).unwrap()
    }

    #[test]
    fn lambda_must_be_nonzero() {
        assert!(EnergyParams::new(0.0).is_err());
        assert!(EnergyParams::new(f64::NAN).is_err());
        assert_eq!(EnergyParams::new(-2.0).unwrap().critical_radius(), 0.5);
    }

    #[test]
    fn unit_circle_energy() {
        let g = geometry(&circle(1.0, 64)).unwrap();
        assert!((energy(&g, &params(1.0)) - 4.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn circle_energy_family_minimised_at_inverse_lambda() {
        let lambda = 1.6;
        let p = params(lambda);
        let e = |r: f64| energy(&geometry(&circle(r, 64)).unwrap(), &p);
        for &r in &[0.3, 0.625, 1.0, 2.0] {
            let analytic = TAU / r + TAU * lambda * lambda * r;
            assert!((e(r) - analytic).abs() < 1e-9 * analytic);
        }
        let r0 = 1.0 / lambda;
        assert!(e(r0) < e(r0 * 1.01) && e(r0) < e(r0 * 0.99));
    }

    #[test]
    fn energy_translation_invariant() {
        let c = make_curve(Shape::Ellipse { a: 1.3, b: 0.7 }, 64, 2).unwrap();
        let p = params(1.0);
        let a = energy(&geometry(&c).unwrap(), &p);
        let b = energy(&geometry(&c.translate(&[3.0, 1.0]).unwrap()).unwrap(), &p);
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn first_variation_of_constant_vanishes() {
        let c = make_curve(
            Shape::FourierRandom {
                seed: 2,
                decay: 2.0,
            },
            64,
            3,
        )
        .unwrap();
        let g = geometry(&c).unwrap();
        let v = VectorField::constant(64, &[1.0, 2.0, -0.5]);
        let d = first_variation(&g, &params(0.7), &v).unwrap();
        assert!(d.abs() < 1e-10, "{d:e}");
    }

    #[test]
    fn stationary_circle_first_variation_vanishes() {
        let p = params(2.0);
        let g = geometry(&circle(0.5, 64)).unwrap();
        for seed in 0..5 {
            let v = VectorField::random_smooth(64, 2, 8, 0.3, seed);
            let dv = first_variation(&g, &p, &v).unwrap();
            assert!(dv.abs() < 1e-8 * g.h2ds_norm(&v).unwrap(), "{dv:e}");
        }
    }

    #[test]
    fn l2_gradient_on_circles() {
        let lambda = 2f64.sqrt();
        let g = geometry(&circle(1.0, 64)).unwrap();
        let grad = l2_gradient(&g, &params(lambda));
        // lambda^2 / r - 1 / r^3 = 1: the outward unit radial field.
        for j in 0..64 {
            let u = j as f64 / 64.0;
            assert!((grad.values()[(j, 0)] - (TAU * u).cos()).abs() < 1e-8);
            assert!((grad.values()[(j, 1)] - (TAU * u).sin()).abs() < 1e-8);
        }
        let g = geometry(&circle(0.5, 64)).unwrap();
        assert!(l2_gradient(&g, &params(2.0)).sup_norm() < 1e-8);
    }

    #[test]
    fn el_residual_on_circles() {
        let lambda = 1.5;
        let p = params(lambda);
        let g = geometry(&circle(1.0 / lambda, 128)).unwrap();
        assert!(el_residual(&g, &p).1 < 1e-7);
        let r = 2.0 / lambda;
        let g = geometry(&circle(r, 128)).unwrap();
        let amp = lambda * lambda / r - 1.0 / r.powi(3);
        let expect = amp * (TAU * r).sqrt();
        let (field, norm) = el_residual(&g, &p);
        assert!((norm - expect).abs() < 1e-9 * expect);
        let grad = l2_gradient(&g, &p);
        assert!(field.sub(&grad).sup_norm() < 1e-10);
    }

    #[test]
    fn second_variation_of_constants_vanishes() {
        let c = make_curve(Shape::Ellipse { a: 1.3, b: 0.7 }, 64, 2).unwrap();
        let g = geometry(&c).unwrap();
        let v = VectorField::constant(64, &[1.0, -1.0]);
        assert!(second_variation(&g, &params(1.0), &v, &v).unwrap().abs() < 1e-9);
    }

    #[test]
    fn j_equals_e_on_uniform_curves() {
        let g = geometry(&circle(1.0, 64)).unwrap();
        let p = params(1.0);
        assert!((j_functional(&g, &p) - 4.0 * PI).abs() < 1e-10);
        assert!((j_functional(&g, &p) - energy(&g, &p)).abs() < 1e-10);
    }
}
