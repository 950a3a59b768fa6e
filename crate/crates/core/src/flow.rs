//! Time integration of `gamma_t = -grad E` in the `H2(ds)` metric, the
//! explicit `L2(ds)` elastic flow used as a stiffness baseline, and the
//! trajectory stream format.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::curve::{geometry, ClosedCurve, CurveDocument, CurveGeometry, VectorField};
use crate::energy::{energy, l2_gradient, EnergyParams};
use crate::error::{Error, Result};
use crate::kernel::h2_gradient_kernel;
use crate::weaksolve::h2_gradient_weak;

/// Largest energy increase tolerated on an accepted step.
pub const ENERGY_SLACK: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Kernel,
    Weak,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kernel" => Ok(Backend::Kernel),
            "weak" => Ok(Backend::Weak),
            other => Err(Error::InvalidParameter(format!(
                "unknown backend {other:?}"
            ))),
        }
    }
}

/// `H2(ds)` gradient with the chosen backend.
pub fn h2_gradient(
    geom: &CurveGeometry,
    params: &EnergyParams,
    backend: Backend,
) -> Result<VectorField> {
    match backend {
        Backend::Kernel => h2_gradient_kernel(geom, params),
        Backend::Weak => h2_gradient_weak(geom, params),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Integrator {
    FixedRk4 {
        dt: f64,
    },
    /// Dormand-Prince 5(4) with error-per-step control in the max norm.
    AdaptiveRk45 {
        rel_tol: f64,
        abs_tol: f64,
        dt_min: f64,
        dt_max: f64,
    },
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator::AdaptiveRk45 {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            dt_min: 1e-12,
            dt_max: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub lambda: f64,
    pub backend: Backend,
    pub integrator: Integrator,
    /// Stop once `||grad E||_{H2(ds)}` falls below this.
    pub stop_grad_tol: f64,
    pub t_max: f64,
    /// Keep a snapshot every this many accepted steps.
    pub snapshot_stride: usize,
    /// Budget of step attempts, accepted or rejected.
    pub max_steps: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            backend: Backend::Weak,
            integrator: Integrator::default(),
            stop_grad_tol: 1e-6,
            t_max: 1e3,
            snapshot_stride: 10,
            max_steps: 1_000_000,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        EnergyParams::new(self.lambda)?;
        if !(self.stop_grad_tol > 0.0) {
            return bad(format!(
                "stop_grad_tol must be positive, got {}",
                self.stop_grad_tol
            ));
        }
        if !(self.t_max > 0.0) {
            return bad(format!("t_max must be positive, got {}", self.t_max));
        }
        if self.snapshot_stride == 0 || self.max_steps == 0 {
            return bad("snapshot_stride and max_steps must be positive".into());
        }
        match self.integrator {
            Integrator::FixedRk4 { dt } if !(dt > 0.0 && dt.is_finite()) => {
                bad(format!("dt must be positive, got {dt}"))
            }
            Integrator::AdaptiveRk45 {
                rel_tol,
                abs_tol,
                dt_min,
                dt_max,
            } => {
                if !(rel_tol > 0.0 && abs_tol > 0.0) {
                    return bad("tolerances must be positive".into());
                }
                if !(dt_min > 0.0 && dt_min < dt_max) {
                    return bad(format!("need 0 < dt_min < dt_max, got {dt_min}, {dt_max}"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn params(&self) -> Result<EnergyParams> {
        EnergyParams::new(self.lambda)
    }
}

/// One accepted state of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub energy: f64,
    /// `||grad E||` in the flow's metric.
    pub grad_norm: f64,
    /// Step that produced this state; zero for the initial record.
    pub dt: f64,
    /// `int ||gamma_t|| dt` by the trapezoid rule over recorded states.
    pub cum_length: f64,
    /// Scaled embedded error estimate of the step (zero for fixed steps).
    pub local_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub step: usize,
    pub curve: CurveDocument,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Terminal {
    Converged,
    TimeLimit,
    StepFailure { t: f64, dt: f64, reason: String },
}

impl std::fmt::Display for Terminal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Terminal::Converged => f.write_str("converged"),
            Terminal::TimeLimit => f.write_str("time limit"),
            Terminal::StepFailure { t, dt, reason } => {
                write!(f, "step failure at t = {t}, dt = {dt:e} ({reason})")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub snapshots: Vec<Snapshot>,
    pub terminal: Terminal,
    pub final_curve: ClosedCurve,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn accepted_steps(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    /// `sum dt ||grad||^2` by the trapezoid rule.
    pub fn dissipated(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| 0.5 * w[1].dt * (w[0].grad_norm.powi(2) + w[1].grad_norm.powi(2)))
            .sum()
    }
}

/// Velocity `-grad E` and energy at one state.
struct Eval {
    geom: CurveGeometry,
    velocity: DMatrix<f64>,
    energy: f64,
}

fn eval_h2(curve: &ClosedCurve, params: &EnergyParams, backend: Backend) -> Result<Eval> {
    let geom = geometry(curve)?;
    let velocity = -h2_gradient(&geom, params, backend)?.into_values();
    let energy = energy(&geom, params);
    Ok(Eval {
        geom,
        velocity,
        energy,
    })
}

fn eval_l2(curve: &ClosedCurve, params: &EnergyParams) -> Result<Eval> {
    let geom = geometry(curve)?;
    let velocity = -l2_gradient(&geom, params).into_values();
    let energy = energy(&geom, params);
    Ok(Eval {
        geom,
        velocity,
        energy,
    })
}

fn offset(curve: &ClosedCurve, stages: &[(&DMatrix<f64>, f64)]) -> Result<ClosedCurve> {
    let mut p = curve.points().clone();
    for (k, c) in stages {
        if *c != 0.0 {
            p += *k * *c;
        }
    }
    ClosedCurve::new(p)
}

fn rk4<F>(curve: &ClosedCurve, k1: &DMatrix<f64>, dt: f64, f: &F) -> Result<ClosedCurve>
where
    F: Fn(&ClosedCurve) -> Result<Eval>,
{
    let k2 = f(&offset(curve, &[(k1, 0.5 * dt)])?)?.velocity;
    let k3 = f(&offset(curve, &[(&k2, 0.5 * dt)])?)?.velocity;
    let k4 = f(&offset(curve, &[(&k3, dt)])?)?.velocity;
    offset(
        curve,
        &[
            (k1, dt / 6.0),
            (&k2, dt / 3.0),
            (&k3, dt / 3.0),
            (&k4, dt / 6.0),
        ],
    )
}

const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [&[f64]; 7] = [
    &[],
    &[0.2],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
    ],
    &[
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ],
    &[
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus the embedded fourth-order weights.
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct DpStep {
    next: ClosedCurve,
    eval: Eval,
    error: f64,
}

/// One Dormand-Prince step from `curve` with first stage `k1`; returns the
/// fifth-order solution, its evaluation (the next first stage) and the
/// scaled error.
fn dp_step<F>(
    curve: &ClosedCurve,
    k1: &DMatrix<f64>,
    dt: f64,
    rel_tol: f64,
    abs_tol: f64,
    f: &F,
) -> Result<DpStep>
where
    F: Fn(&ClosedCurve) -> Result<Eval>,
{
    debug_assert_eq!(DP_C[0], 0.0);
    let mut ks: Vec<DMatrix<f64>> = vec![k1.clone()];
    let mut last = None;
    for a in DP_A.iter().skip(1) {
        let stages: Vec<(&DMatrix<f64>, f64)> =
            ks.iter().zip(a.iter()).map(|(k, c)| (k, c * dt)).collect();
        let y = offset(curve, &stages)?;
        let e = f(&y)?;
        ks.push(e.velocity.clone());
        last = Some((y, e));
    }
    let (next, eval) = last.expect("seven stages");
    let mut err = DMatrix::zeros(k1.nrows(), k1.ncols());
    for (k, e) in ks.iter().zip(DP_E.iter()) {
        if *e != 0.0 {
            err += k * (e * dt);
        }
    }
    let (y0, y1) = (curve.points(), next.points());
    let mut worst: f64 = 0.0;
    for idx in 0..err.len() {
        let scale = abs_tol + rel_tol * y0[idx].abs().max(y1[idx].abs());
        worst = worst.max(err[idx].abs() / scale);
    }
    Ok(DpStep {
        next,
        eval,
        error: worst,
    })
}

/// Result of a single step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub curve: ClosedCurve,
    /// Scaled embedded error estimate; `None` for fixed RK4.
    pub error_estimate: Option<f64>,
}

/// One explicit Runge-Kutta step of the `H2(ds)` flow with step `dt`.
pub fn step(curve: &ClosedCurve, config: &FlowConfig, dt: f64) -> Result<StepResult> {
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dt must be non-negative, got {dt}"
        )));
    }
    if dt == 0.0 {
        geometry(curve)?;
        return Ok(StepResult {
            curve: curve.clone(),
            error_estimate: Some(0.0),
        });
    }
    let params = config.params()?;
    let f = |c: &ClosedCurve| eval_h2(c, &params, config.backend);
    let k1 = f(curve)?.velocity;
    match config.integrator {
        Integrator::FixedRk4 { .. } => Ok(StepResult {
            curve: rk4(curve, &k1, dt, &f)?,
            error_estimate: None,
        }),
        Integrator::AdaptiveRk45 {
            rel_tol,
            abs_tol,
            dt_min,
            ..
        } => {
            if dt < dt_min {
                return Err(Error::StepFailure {
                    t: 0.0,
                    dt,
                    reason: "step below dt_min".into(),
                });
            }
            let s = dp_step(curve, &k1, dt, rel_tol, abs_tol, &f)?;
            Ok(StepResult {
                curve: s.next,
                error_estimate: Some(s.error),
            })
        }
    }
}

struct Recorder {
    records: Vec<Record>,
    snapshots: Vec<Snapshot>,
    stride: usize,
}

impl Recorder {
    fn new(curve: &ClosedCurve, energy: f64, grad_norm: f64, stride: usize) -> Self {
        Self {
            records: vec![Record {
                t: 0.0,
                energy,
                grad_norm,
                dt: 0.0,
                cum_length: 0.0,
                local_error: 0.0,
            }],
            snapshots: vec![Snapshot {
                t: 0.0,
                step: 0,
                curve: curve.to_document(),
            }],
            stride,
        }
    }

    fn last(&self) -> &Record {
        self.records.last().expect("initial record")
    }

    /// Appends the state reached by the accepted step; the snapshot stride
    /// counts states before the final one, so a run of `k` steps keeps
    /// `ceil(k / stride)` snapshots.
    fn push(&mut self, prev: &ClosedCurve, dt: f64, energy: f64, grad_norm: f64, local_error: f64) {
        let steps = self.records.len() - 1;
        if steps > 0 && steps.is_multiple_of(self.stride) {
            self.snapshots.push(Snapshot {
                t: self.last().t,
                step: steps,
                curve: prev.to_document(),
            });
        }
        let last = *self.last();
        self.records.push(Record {
            t: last.t + dt,
            energy,
            grad_norm,
            dt,
            cum_length: last.cum_length + 0.5 * dt * (last.grad_norm + grad_norm),
            local_error,
        });
    }

    fn finish(
        self,
        terminal: Terminal,
        final_curve: ClosedCurve,
        rejected_steps: usize,
    ) -> Trajectory {
        Trajectory {
            records: self.records,
            snapshots: self.snapshots,
            terminal,
            final_curve,
            rejected_steps,
        }
    }
}

/// Integrates the `H2(ds)` flow until the gradient norm drops below
/// `stop_grad_tol` or `t_max` is reached. Step failures end the run with a
/// partial trajectory rather than an error.
pub fn run_flow(curve: &ClosedCurve, config: &FlowConfig) -> Result<Trajectory> {
    config.validate()?;
    let params = config.params()?;
    let f = |c: &ClosedCurve| eval_h2(c, &params, config.backend);
    let mut y = curve.clone();
    let mut cur = f(&y)?;
    let g0 = cur
        .geom
        .h2ds_norm(&VectorField::new(cur.velocity.clone()))?;
    let mut rec = Recorder::new(&y, cur.energy, g0, config.snapshot_stride);
    if g0 < config.stop_grad_tol {
        return Ok(rec.finish(Terminal::Converged, y, 0));
    }
    let mut t = 0.0;
    let mut attempts = 0usize;
    let mut rejected = 0usize;
    let mut dt = match config.integrator {
        Integrator::FixedRk4 { dt } => dt,
        Integrator::AdaptiveRk45 { dt_max, .. } => dt_max.min(1e-2),
    };
    let fail = |rec: Recorder, y: ClosedCurve, t: f64, dt: f64, reason: String, rejected: usize| {
        rec.finish(Terminal::StepFailure { t, dt, reason }, y, rejected)
    };
    loop {
        // Relative guard so accumulated roundoff in t cannot force a sliver step.
        if config.t_max - t <= 1e-12 * config.t_max {
            return Ok(rec.finish(Terminal::TimeLimit, y, rejected));
        }
        if attempts >= config.max_steps {
            return Ok(fail(
                rec,
                y,
                t,
                dt,
                "step budget exhausted".into(),
                rejected,
            ));
        }
        attempts += 1;
        let h = dt.min(config.t_max - t);
        let outcome = match config.integrator {
            Integrator::FixedRk4 { .. } => rk4(&y, &cur.velocity, h, &f).and_then(|next| {
                let e = f(&next)?;
                Ok((next, e, 0.0))
            }),
            Integrator::AdaptiveRk45 {
                rel_tol, abs_tol, ..
            } => dp_step(&y, &cur.velocity, h, rel_tol, abs_tol, &f)
                .map(|s| (s.next, s.eval, s.error)),
        };
        let accepted = match (&config.integrator, outcome) {
            (Integrator::FixedRk4 { .. }, Err(e)) => {
                return Ok(fail(rec, y, t, h, e.to_string(), rejected))
            }
            (Integrator::FixedRk4 { .. }, Ok((next, e, _))) => {
                if !(e.energy <= cur.energy + ENERGY_SLACK) {
                    let reason = format!("energy increased from {} to {}", cur.energy, e.energy);
                    return Ok(fail(rec, y, t, h, reason, rejected));
                }
                Some((next, e, 0.0))
            }
            (Integrator::AdaptiveRk45 { dt_min, dt_max, .. }, res) => {
                let (dt_min, dt_max) = (*dt_min, *dt_max);
                let (verdict, factor) = match res {
                    Err(Error::NonImmersed { .. } | Error::FactorizationFailure) => (None, 0.25),
                    Err(e) => return Err(e),
                    Ok((next, e, err)) => {
                        let grow = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
                        if !(err <= 1.0) {
                            (None, grow.clamp(0.1, 0.9))
                        } else if !(e.energy <= cur.energy + ENERGY_SLACK) {
                            (None, 0.5)
                        } else {
                            (Some((next, e, err)), grow.clamp(0.2, 5.0))
                        }
                    }
                };
                let proposed = (h * factor).min(dt_max);
                if verdict.is_none() {
                    rejected += 1;
                    if proposed < dt_min {
                        return Ok(fail(
                            rec,
                            y,
                            t,
                            proposed,
                            "step size underflow".into(),
                            rejected,
                        ));
                    }
                }
                dt = if verdict.is_some() {
                    proposed.max(dt_min)
                } else {
                    proposed
                };
                verdict
            }
        };
        if let Some((next, e, err)) = accepted {
            let g = e.geom.h2ds_norm(&VectorField::new(e.velocity.clone()))?;
            t += h;
            rec.push(&y, h, e.energy, g, err);
            y = next;
            cur = e;
            if g < config.stop_grad_tol {
                return Ok(rec.finish(Terminal::Converged, y, rejected));
            }
        }
    }
}

/// Explicit RK4 for the `L2(ds)` elastic flow `gamma_t = -nabla E` with fixed
/// `dt`. Energy increase, non-finite values and loss of immersion are
/// reported as `StepFailure`; the recorded gradient norm is `L2(ds)`.
pub fn run_l2_flow(
    curve: &ClosedCurve,
    params: &EnergyParams,
    dt: f64,
    t_max: f64,
) -> Result<Trajectory> {
    let steps = (t_max / dt).ceil();
    if !(dt > 0.0 && t_max > 0.0 && steps.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need dt > 0 and t_max > 0, got {dt}, {t_max}"
        )));
    }
    Ok(l2_steps(curve, params, dt, steps as usize, usize::MAX))
}

fn l2_steps(
    curve: &ClosedCurve,
    params: &EnergyParams,
    dt: f64,
    steps: usize,
    stride: usize,
) -> Trajectory {
    let f = |c: &ClosedCurve| eval_l2(c, params);
    let mut y = curve.clone();
    let first = match f(&y) {
        Ok(e) => e,
        Err(e) => {
            let rec = Recorder::new(&y, f64::NAN, f64::NAN, stride);
            return rec.finish(
                Terminal::StepFailure {
                    t: 0.0,
                    dt,
                    reason: e.to_string(),
                },
                y,
                0,
            );
        }
    };
    let norm = |e: &Eval| {
        e.geom
            .l2ds_norm(&VectorField::new(e.velocity.clone()))
            .unwrap_or(f64::NAN)
    };
    let mut rec = Recorder::new(&y, first.energy, norm(&first), stride);
    let mut cur = first;
    for k in 0..steps {
        let t = k as f64 * dt;
        let next = rk4(&y, &cur.velocity, dt, &f).and_then(|n| {
            let e = f(&n)?;
            Ok((n, e))
        });
        let (n, e) = match next {
            Ok(v) => v,
            Err(err) => {
                return rec.finish(
                    Terminal::StepFailure {
                        t,
                        dt,
                        reason: err.to_string(),
                    },
                    y,
                    0,
                );
            }
        };
        if !e.energy.is_finite() || e.energy > cur.energy + ENERGY_SLACK {
            let reason = format!("energy increased from {} to {}", cur.energy, e.energy);
            return rec.finish(Terminal::StepFailure { t, dt, reason }, y, 0);
        }
        rec.push(&y, dt, e.energy, norm(&e), 0.0);
        y = n;
        cur = e;
    }
    rec.finish(Terminal::TimeLimit, y, 0)
}

/// Flow whose step stability is probed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    H2(Backend),
    L2,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::H2(Backend::Kernel) => write!(f, "h2-kernel"),
            Method::H2(Backend::Weak) => write!(f, "h2-weak"),
            Method::L2 => write!(f, "l2"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub method: String,
    pub n: usize,
    pub dt: f64,
    pub survived: usize,
    pub budget: usize,
    pub final_energy: f64,
}

impl StabilityRow {
    pub fn stable(&self) -> bool {
        self.survived == self.budget
    }
}

/// Runs `budget` fixed RK4 steps of size `dt`, counting the steps that
/// complete without energy increase or loss of immersion.
pub fn survive(
    curve: &ClosedCurve,
    params: &EnergyParams,
    method: Method,
    dt: f64,
    budget: usize,
) -> StabilityRow {
    let traj = match method {
        Method::L2 => l2_steps(curve, params, dt, budget, usize::MAX),
        Method::H2(backend) => {
            let config = FlowConfig {
                lambda: params.lambda(),
                backend,
                integrator: Integrator::FixedRk4 { dt },
                stop_grad_tol: f64::MIN_POSITIVE,
                t_max: dt * budget as f64,
                snapshot_stride: usize::MAX,
                max_steps: budget,
            };
            match run_flow(curve, &config) {
                Ok(t) => t,
                Err(_) => {
                    return StabilityRow {
                        method: method.to_string(),
                        n: curve.n_samples(),
                        dt,
                        survived: 0,
                        budget,
                        final_energy: f64::NAN,
                    }
                }
            }
        }
    };
    let last = traj.records.last().expect("initial record");
    StabilityRow {
        method: method.to_string(),
        n: curve.n_samples(),
        dt,
        survived: traj.accepted_steps().min(budget),
        budget,
        final_energy: last.energy,
    }
}

/// For each `dt`, runs both the `H2(ds)` flow (with `backend`) and the
/// `L2(ds)` flow for a fixed step budget.
pub fn stability_scan(
    curve: &ClosedCurve,
    params: &EnergyParams,
    dt_grid: &[f64],
    budget: usize,
    backend: Backend,
) -> Vec<StabilityRow> {
    dt_grid
        .iter()
        .flat_map(|&dt| {
            [Method::H2(backend), Method::L2]
                .into_iter()
                .map(move |m| survive(curve, params, m, dt, budget))
        })
        .collect()
}

/// Largest `dt` in `[lo, hi]` that survives `budget` steps, by bisection in
/// `log dt`. `lo` must survive; returns `hi` if it survives too.
pub fn max_stable_dt(
    curve: &ClosedCurve,
    params: &EnergyParams,
    method: Method,
    budget: usize,
    lo: f64,
    hi: f64,
    iterations: usize,
) -> Result<f64> {
    if !survive(curve, params, method, lo, budget).stable() {
        return Err(Error::InvalidParameter(format!(
            "lower bracket dt = {lo:e} is unstable"
        )));
    }
    if survive(curve, params, method, hi, budget).stable() {
        return Ok(hi);
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    for _ in 0..iterations {
        let mid = 0.5 * (a + b);
        if survive(curve, params, method, mid.exp(), budget).stable() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(a.exp())
}

/// One line of the trajectory stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StreamLine {
    Record(Record),
    Snapshot(Snapshot),
    Terminal {
        #[serde(flatten)]
        terminal: Terminal,
        rejected_steps: usize,
        final_curve: CurveDocument,
    },
}

/// Writes records, then snapshots, then the terminal line, one JSON
/// document per line.
pub fn write_jsonl(traj: &Trajectory, mut out: impl Write) -> Result<()> {
    for r in &traj.records {
        serde_json::to_writer(&mut out, &StreamLine::Record(*r))?;
        out.write_all(b"\n")?;
    }
    for s in &traj.snapshots {
        serde_json::to_writer(&mut out, &StreamLine::Snapshot(s.clone()))?;
        out.write_all(b"\n")?;
    }
    let term = StreamLine::Terminal {
        terminal: traj.terminal.clone(),
        rejected_steps: traj.rejected_steps,
        final_curve: traj.final_curve.to_document(),
    };
    serde_json::to_writer(&mut out, &term)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_jsonl(input: impl BufRead) -> Result<Trajectory> {
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut end = None;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: StreamLine = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
        match parsed {
            StreamLine::Record(r) => records.push(r),
            StreamLine::Snapshot(s) => snapshots.push(s),
            StreamLine::Terminal {
                terminal,
                rejected_steps,
                final_curve,
            } => {
                end = Some((
                    terminal,
                    rejected_steps,
                    ClosedCurve::from_document(&final_curve)?,
                ))
            }
        }
    }
    let (terminal, rejected_steps, final_curve) =
        end.ok_or_else(|| Error::Parse("trajectory stream has no terminal line".into()))?;
    if records.is_empty() {
        return Err(Error::Parse("trajectory stream has no records".into()));
    }
    Ok(Trajectory {
        records,
        snapshots,
        terminal,
        final_curve,
        rejected_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{make_curve, Shape};

    fn fixed(dt: f64) -> FlowConfig {
        FlowConfig {
            integrator: Integrator::FixedRk4 { dt },
            ..FlowConfig::default()
        }
    }

    #[test]
    fn dp_tableau_rows_sum_to_nodes() {
        for (a, c) in DP_A.iter().zip(DP_C.iter()) {
            assert!((a.iter().sum::<f64>() - c).abs() < 1e-14);
        }
        assert!(DP_E.iter().sum::<f64>().abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(FlowConfig::default().validate().is_ok());
        let mut c = FlowConfig {
            lambda: 0.0,
            ..FlowConfig::default()
        };
        assert!(c.validate().is_err());
        c = FlowConfig::default();
        c.integrator = Integrator::AdaptiveRk45 {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            dt_min: 1.0,
            dt_max: 0.5,
        };
        assert!(c.validate().is_err());
        assert!(fixed(-1.0).validate().is_err());
    }

    #[test]
    fn zero_step_is_identity() {
        let c = make_curve(Shape::Ellipse { a: 1.3, b: 0.7 }, 32, 2).unwrap();
        assert_eq!(step(&c, &FlowConfig::default(), 0.0).unwrap().curve, c);
    }

    #[test]
    fn stationary_circle_is_fixed() {
        let c = make_curve(Shape::Circle { r: 1.0, fold: 1 }, 64, 2).unwrap();
        for cfg in [fixed(0.1), FlowConfig::default()] {
            let next = step(&c, &cfg, 0.1).unwrap().curve;
            assert!((next.points() - c.points()).amax() < 1e-8);
        }
    }

    #[test]
    fn one_step_decreases_energy() {
        let c = make_curve(Shape::Ellipse { a: 1.3, b: 0.7 }, 64, 2).unwrap();
        let p = EnergyParams::new(1.0).unwrap();
        let e0 = energy(&geometry(&c).unwrap(), &p);
        for cfg in [fixed(0.01), FlowConfig::default()] {
            let next = step(&c, &cfg, 0.01).unwrap().curve;
            assert!(energy(&geometry(&next).unwrap(), &p) < e0);
        }
    }

    #[test]
    fn short_run_records_and_stream_round_trip() {
        let c = make_curve(Shape::Ellipse { a: 1.3, b: 0.7 }, 32, 2).unwrap();
        let cfg = FlowConfig {
            t_max: 0.5,
            snapshot_stride: 3,
            ..fixed(0.05)
        };
        let traj = run_flow(&c, &cfg).unwrap();
        assert_eq!(traj.terminal, Terminal::TimeLimit);
        assert_eq!(traj.accepted_steps(), 10);
        assert_eq!(traj.snapshots.len(), 4);
        for w in traj.records.windows(2) {
            assert!(w[1].t > w[0].t);
            assert!(w[1].energy <= w[0].energy + ENERGY_SLACK);
        }
        let mut buf = Vec::new();
        write_jsonl(&traj, &mut buf).unwrap();
        let back = read_jsonl(&buf[..]).unwrap();
        assert_eq!(back, traj);
        assert!(read_jsonl(&b"{\"kind\":\"record\"}\n"[..]).is_err());
    }

    #[test]
    fn l2_flow_stiffness_probes() {
        let c = make_curve(Shape::Circle { r: 1.0, fold: 1 }, 64, 2).unwrap();
        let p = EnergyParams::new(1.0).unwrap();
        let ok = run_l2_flow(&c, &p, 1e-7, 1e-5).unwrap();
        assert_eq!(ok.terminal, Terminal::TimeLimit);
        assert!((ok.final_curve.points() - c.points()).amax() < 1e-10);
        let bad = run_l2_flow(
            &c.perturb(&VectorField::random_smooth(64, 2, 4, 0.5, 1), 1e-3)
                .unwrap(),
            &p,
            1e-2,
            1.0,
        )
        .unwrap();
        assert!(matches!(bad.terminal, Terminal::StepFailure { .. }));
        assert!(bad.accepted_steps() < 100);
    }

    #[test]
    fn deterministic_records() {
        let c = make_curve(Shape::Ellipse { a: 1.3, b: 0.7 }, 32, 2).unwrap();
        let cfg = FlowConfig {
            t_max: 0.3,
            ..FlowConfig::default()
        };
        let a = run_flow(&c, &cfg).unwrap();
        let b = run_flow(&c, &cfg).unwrap();
        assert_eq!(a.records, b.records);
    }
}
