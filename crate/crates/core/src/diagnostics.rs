//! Convergence analytics: Lojasiewicz exponent fits on trajectory tails,
//! classification of limit curves, and invariance audits.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::curve::{geometry, ClosedCurve, CurveGeometry};
use crate::energy::{el_residual, energy, EnergyParams};
use crate::error::{Error, Result};
use crate::flow::{h2_gradient, Backend, Record, Terminal, Trajectory};
use crate::reparam::Diffeo;

/// Fewest records a Lojasiewicz fit accepts.
pub const MIN_FIT_RECORDS: usize = 20;
/// Tail window for `E - E_inf`, relative to `E(0)`.
pub const FIT_WINDOW: (f64, f64) = (1e-10, 1e-3);
/// Largest RMS log residual for which `theta` is reported as meaningful.
pub const FIT_RESIDUAL_LIMIT: f64 = 0.1;
/// Default bound on the Euler-Lagrange residual for stationary limits.
pub const STATIONARITY_THRESHOLD: f64 = 1e-3;
/// Largest `std k / mean k` of a circle.
pub const CIRCLE_CURVATURE_SPREAD: f64 = 1e-2;

/// Least-squares fit of `log10 ||grad|| = log10 Z + theta log10 (E - E_inf)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LojasiewiczFit {
    pub theta: f64,
    pub z: f64,
    pub fit_window: (f64, f64),
    /// RMS residual of the log-log fit, in decades.
    pub residual: f64,
    pub e_inf: f64,
    pub n_points: usize,
    /// `residual < FIT_RESIDUAL_LIMIT`.
    pub reliable: bool,
}

/// Fits the tail of a converged trajectory.
pub fn fit_lojasiewicz(traj: &Trajectory) -> Result<LojasiewiczFit> {
    if traj.terminal != Terminal::Converged {
        return Err(Error::InsufficientTail {
            found: 0,
            needed: MIN_FIT_RECORDS,
        });
    }
    fit_lojasiewicz_records(&traj.records)
}

/// Fit over records with `E - E_inf` in `FIT_WINDOW * E(0)`, `E_inf` the
/// final energy. The decade above the smallest positive gap is excluded so
/// that roundoff in `E_inf` does not bend the fit.
pub fn fit_lojasiewicz_records(records: &[Record]) -> Result<LojasiewiczFit> {
    let (first, last) = match (records.first(), records.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => {
            return Err(Error::InsufficientTail {
                found: 0,
                needed: MIN_FIT_RECORDS,
            })
        }
    };
    let e_inf = last.energy;
    let scale = first.energy.abs();
    let floor_gap = records
        .iter()
        .map(|r| r.energy - e_inf)
        .filter(|g| *g > 0.0)
        .fold(f64::INFINITY, f64::min);
    let lo = (FIT_WINDOW.0 * scale).max(10.0 * floor_gap);
    let hi = FIT_WINDOW.1 * scale;
    let tail: Vec<&Record> = records
        .iter()
        .filter(|r| {
            let gap = r.energy - e_inf;
            gap >= lo && gap <= hi && r.grad_norm > 0.0
        })
        .collect();
    if tail.len() < MIN_FIT_RECORDS {
        return Err(Error::InsufficientTail {
            found: tail.len(),
            needed: MIN_FIT_RECORDS,
        });
    }
    let xs: Vec<f64> = tail.iter().map(|r| (r.energy - e_inf).log10()).collect();
    let ys: Vec<f64> = tail.iter().map(|r| r.grad_norm.log10()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientTail {
            found: 1,
            needed: MIN_FIT_RECORDS,
        });
    }
    let theta = sxy / sxx;
    let log_z = my - theta * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - log_z - theta * x).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    let t_start = tail.iter().map(|r| r.t).fold(f64::INFINITY, f64::min);
    let t_end = tail.iter().map(|r| r.t).fold(f64::NEG_INFINITY, f64::max);
    Ok(LojasiewiczFit {
        theta,
        z: 10f64.powf(log_z),
        fit_window: (t_start, t_end),
        residual,
        e_inf,
        n_points: tail.len(),
        reliable: residual < FIT_RESIDUAL_LIMIT,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    Circle {
        center: Vec<f64>,
        radius: f64,
        multiplicity: u32,
    },
    FigureEight,
    Unclassified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub classification: Classification,
    /// Planar curves only.
    pub rotation_index: Option<i64>,
    pub curvature_mean: f64,
    pub curvature_std: f64,
    /// `L2(ds)` norm of the Euler-Lagrange residual.
    pub stationarity_norm: f64,
    pub stationary: bool,
}

/// `(1 / 2 pi) int k_signed ds` for a planar curve, unrounded.
pub fn total_turning(geom: &CurveGeometry) -> Option<f64> {
    if geom.dim() != 2 {
        return None;
    }
    let n = geom.n_samples();
    let cross: Vec<f64> = (0..n)
        .map(|j| geom.d1[(j, 0)] * geom.d2[(j, 1)] - geom.d1[(j, 1)] * geom.d2[(j, 0)])
        .collect();
    // k_signed ds = cross / |gamma'|^2 du.
    let turning: f64 = cross
        .iter()
        .zip(&geom.speed)
        .map(|(c, s)| c / (s * s))
        .sum::<f64>()
        / n as f64;
    Some(turning / TAU)
}

pub fn rotation_index(curve: &ClosedCurve) -> Result<Option<i64>> {
    Ok(total_turning(&geometry(curve)?).map(|t| t.round() as i64))
}

/// Centre and radius of a circle fitted by `ds`-weighted averages.
pub fn circle_fit(geom: &CurveGeometry) -> (Vec<f64>, f64) {
    let n = geom.n_samples();
    let pts = geom.curve.points();
    let w: Vec<f64> = geom
        .speed
        .iter()
        .map(|s| s / (n as f64 * geom.length))
        .collect();
    let center: Vec<f64> = (0..geom.dim())
        .map(|c| (0..n).map(|j| w[j] * pts[(j, c)]).sum())
        .collect();
    let radius = (0..n)
        .map(|j| {
            let d2: f64 = (0..geom.dim())
                .map(|c| (pts[(j, c)] - center[c]).powi(2))
                .sum();
            w[j] * d2.sqrt()
        })
        .sum();
    (center, radius)
}

/// Classifies a (near-)stationary curve as a circle, a figure-eight, or
/// neither. Circles need small curvature spread and a stationarity norm
/// below `threshold`; a planar curve of rotation index zero is reported as
/// a figure-eight candidate.
pub fn classify_limit(
    curve: &ClosedCurve,
    params: &EnergyParams,
    threshold: f64,
) -> Result<LimitReport> {
    let geom = geometry(curve)?;
    let n = geom.n_samples();
    let k: Vec<f64> = geom.ksq.iter().map(|x| x.sqrt()).collect();
    // Arc-length weighted curvature statistics.
    let w: Vec<f64> = geom
        .speed
        .iter()
        .map(|s| s / (n as f64 * geom.length))
        .collect();
    let mean: f64 = k.iter().zip(&w).map(|(k, w)| k * w).sum();
    let var: f64 = k.iter().zip(&w).map(|(k, w)| w * (k - mean).powi(2)).sum();
    let std = var.max(0.0).sqrt();
    let (_, stationarity) = el_residual(&geom, params);
    let stationary = stationarity < threshold;
    let turning = total_turning(&geom);
    let rotation_index = turning.map(|t| t.round() as i64);
    let classification = if mean > 0.0 && std / mean < CIRCLE_CURVATURE_SPREAD && stationary {
        let (center, radius) = circle_fit(&geom);
        let multiplicity = match rotation_index {
            Some(r) => r.unsigned_abs() as u32,
            None => (geom.length * mean / TAU).round() as u32,
        };
        Classification::Circle {
            center,
            radius,
            multiplicity,
        }
    } else if rotation_index == Some(0) {
        Classification::FigureEight
    } else {
        Classification::Unclassified
    };
    Ok(LimitReport {
        classification,
        rotation_index,
        curvature_mean: mean,
        curvature_std: std,
        stationarity_norm: stationarity,
        stationary,
    })
}

/// Relative changes of energy and `||grad E||_{H2(ds)}` under a translation
/// and under a reparametrisation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub energy: f64,
    pub grad_norm: f64,
    pub translation_energy: f64,
    pub translation_grad_norm: f64,
    pub reparam_energy: f64,
    pub reparam_grad_norm: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn invariance_audit(
    curve: &ClosedCurve,
    params: &EnergyParams,
    backend: Backend,
    diffeo: &Diffeo,
    translation: &[f64],
) -> Result<InvarianceReport> {
    let measure = |c: &ClosedCurve| -> Result<(f64, f64)> {
        let g = geometry(c)?;
        let grad = h2_gradient(&g, params, backend)?;
        Ok((energy(&g, params), g.h2ds_norm(&grad)?))
    };
    let (e, gn) = measure(curve)?;
    let (et, gt) = measure(&curve.translate(translation)?)?;
    let (er, gr) = if diffeo.modes.is_empty() {
        (e, gn)
    } else {
        measure(&curve.reparametrize(|u| diffeo.eval(u))?)?
    };
    Ok(InvarianceReport {
        energy: e,
        grad_norm: gn,
        translation_energy: rel(e, et),
        translation_grad_norm: rel(gn, gt),
        reparam_energy: rel(e, er),
        reparam_grad_norm: rel(gn, gr),
    })
}

/// Audit with a seeded random diffeomorphism of three modes.
pub fn invariance_audit_seeded(
    curve: &ClosedCurve,
    params: &EnergyParams,
    backend: Backend,
    diffeo_seed: u64,
    translation: &[f64],
) -> Result<InvarianceReport> {
    let d = Diffeo::random(diffeo_seed, 3, 0.6)?;
    invariance_audit(curve, params, backend, &d, translation)
}
