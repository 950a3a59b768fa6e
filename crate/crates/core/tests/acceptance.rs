//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any fails.

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::Instant;

use elastica::diagnostics::{
    classify_limit, fit_lojasiewicz, fit_lojasiewicz_records, invariance_audit, Classification,
};
use elastica::energy::{
    el_residual, energy, first_variation, j_functional, j_variation, l2_gradient, second_variation,
};
use elastica::flow::{max_stable_dt, Method, Record, ENERGY_SLACK};
use elastica::kernel::{h2_gradient_kernel, GreensKernel};
use elastica::reparam::{dphi, phi_sup, project_arclength, Diffeo, TangentProjector};
use elastica::weaksolve::h2_gradient_weak;
use elastica::{
    fixture_family, geometry, h2_gradient, make_curve, run_flow, Backend, ClosedCurve,
    EnergyParams, FlowConfig, Integrator, Shape, Terminal, Trajectory, VectorField,
};
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn unit() -> EnergyParams {
    EnergyParams::new(1.0).unwrap()
}

fn ellipse(n: usize) -> ClosedCurve {
    make_curve(Shape::Ellipse { a: 1.3, b: 0.7 }, n, 2).unwrap()
}

fn ellipse_config(rel_tol: f64, abs_tol: f64) -> FlowConfig {
    FlowConfig {
        lambda: 1.0,
        backend: Backend::Weak,
        integrator: Integrator::AdaptiveRk45 {
            rel_tol,
            abs_tol,
            dt_min: 1e-12,
            dt_max: 1.0,
        },
        stop_grad_tol: 1e-6,
        ..FlowConfig::default()
    }
}

fn ellipse_run() -> Trajectory {
    run_flow(&ellipse(128), &ellipse_config(1e-8, 1e-10)).unwrap()
}

fn limiting_radius(traj: &Trajectory) -> Outcome {
    let report = classify_limit(&traj.final_curve, &unit(), 1e-3).map_err(|e| e.to_string())?;
    let spread = report.curvature_std / report.curvature_mean;
    let detail = format!(
        "{:?} after {} steps to t={:.2}; {:?}, std/mean={spread:.1e}",
        traj.terminal,
        traj.accepted_steps(),
        traj.records.last().unwrap().t,
        report.classification
    );
    let radius_ok = matches!(report.classification, Classification::Circle { radius, .. } if (radius - 1.0).abs() <= 1e-3);
    check(
        traj.terminal == Terminal::Converged && radius_ok && spread <= 1e-3,
        detail,
    )
}

fn stationarity() -> Outcome {
    let mut worst: (f64, f64) = (0.0, 0.0);
    for lambda in [0.5, 1.0, 2.0] {
        let p = EnergyParams::new(lambda).unwrap();
        let c = make_curve(
            Shape::Circle {
                r: 1.0 / lambda,
                fold: 1,
            },
            256,
            2,
        )
        .unwrap();
        let g = geometry(&c).unwrap();
        for backend in [Backend::Kernel, Backend::Weak] {
            let grad = h2_gradient(&g, &p, backend).unwrap();
            worst.0 = worst.0.max(g.h2ds_norm(&grad).unwrap());
        }
        worst.1 = worst.1.max(el_residual(&g, &p).1);
    }
    check(
        worst.0 <= 1e-6 && worst.1 <= 1e-6,
        format!(
            "max ||grad|| = {:.1e}, max EL residual = {:.1e}",
            worst.0, worst.1
        ),
    )
}

/// Relative `H2(ds)` difference of the two backends; absolute on a
/// stationary curve, where the gradient itself is roundoff.
fn backend_difference(fixture: &elastica::Fixture, n: usize) -> f64 {
    let g = geometry(&fixture.sample(n).unwrap()).unwrap();
    let p = unit();
    let k = h2_gradient_kernel(&g, &p).unwrap();
    let w = h2_gradient_weak(&g, &p).unwrap();
    let diff = g.h2ds_norm(&k.sub(&w)).unwrap();
    let norm = g.h2ds_norm(&w).unwrap();
    if norm > 1e-6 {
        diff / norm
    } else {
        diff
    }
}

fn backend_equivalence() -> Outcome {
    let rows: Vec<(String, [f64; 3])> = fixture_family()
        .par_iter()
        .map(|f| {
            (
                f.name.to_string(),
                [64, 128, 256].map(|n| backend_difference(f, n)),
            )
        })
        .collect();
    let worst = rows.iter().map(|r| r.1[2]).fold(0.0, f64::max);
    // Orders are taken between resolutions whose finer difference is still
    // above the roundoff of an N-term kernel sum.
    let mut min_order = f64::INFINITY;
    for (_, d) in &rows {
        for i in 0..2 {
            if d[i + 1] > 1e-10 {
                min_order = min_order.min((d[i] / d[i + 1]).log2());
            }
        }
    }
    check(
        worst <= 1e-5 && min_order >= 3.0,
        format!(
            "max rel diff at N=256 {worst:.1e} over {} fixtures, min order {min_order:.2}",
            rows.len()
        ),
    )
}

fn riesz() -> Outcome {
    let p = unit();
    let worst = fixture_family()
        .par_iter()
        .map(|f| {
            let g = geometry(&f.sample(256).unwrap()).unwrap();
            let grads = [
                h2_gradient_kernel(&g, &p).unwrap(),
                h2_gradient_weak(&g, &p).unwrap(),
            ];
            let mut worst: f64 = 0.0;
            for seed in 0..20 {
                let v = VectorField::random_smooth(256, f.dim, 16, 0.2, 1000 + seed);
                let de = first_variation(&g, &p, &v).unwrap();
                let vn = g.h2ds_norm(&v).unwrap();
                for grad in &grads {
                    worst = worst.max((g.h2ds_inner(grad, &v).unwrap() - de).abs() / vn);
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    check(
        worst <= 1e-6,
        format!("max |<grad,v> - dE(v)| / ||v|| = {worst:.1e}, both backends"),
    )
}

fn operator_residual() -> Outcome {
    let p = unit();
    let worst = fixture_family()
        .par_iter()
        .filter(|f| !f.name.starts_with("circle"))
        .map(|f| {
            let g = geometry(&f.sample(256).unwrap()).unwrap();
            let target = l2_gradient(&g, &p);
            [
                h2_gradient_kernel(&g, &p).unwrap(),
                h2_gradient_weak(&g, &p).unwrap(),
            ]
            .iter()
            .map(|grad| {
                let v = grad.values();
                let s2 = g.d_s(&g.d_s(v));
                let s4 = g.d_s(&g.d_s(&s2));
                let lhs = VectorField::new(s4 - s2 + v);
                g.l2ds_norm(&lhs.sub(&target)).unwrap() / g.l2ds_norm(&target).unwrap()
            })
            .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    check(
        worst <= 1e-4,
        format!("max rel L2(ds) residual {worst:.1e} at N=256"),
    )
}

fn greens_kernel() -> Outcome {
    let mut sym_ok = true;
    let mut period: f64 = 0.0;
    let mut jump: f64 = 0.0;
    for l in [1.0, TAU, 50.0] {
        let k = GreensKernel::new(l).unwrap();
        for i in 0..=40 {
            let s = l * i as f64 / 40.0;
            for j in 0..=40 {
                let t = l * (j as f64 + 0.37) / 41.0;
                sym_ok &= k.green(s, t).unwrap() == k.green(t, s).unwrap();
            }
            period = period.max((k.green(0.0, s).unwrap() - k.green(l, s).unwrap()).abs());
            period = period
                .max((k.green_ds_tilde(0.0, s).unwrap() - k.green_ds_tilde(l, s).unwrap()).abs());
        }
        jump = jump.max((k.jump_check() - 1.0).abs());
    }

    let mut row: f64 = 0.0;
    for l in [0.5, 1.0, 2.0, TAU, 10.0] {
        let k = GreensKernel::new(l).unwrap();
        let m = 512;
        for i in 0..8 {
            let s = l * i as f64 / 8.0;
            let sum: f64 = (0..m)
                .map(|j| k.green(s, l * j as f64 / m as f64).unwrap())
                .sum::<f64>()
                * l
                / m as f64;
            row = row.max((sum - 1.0).abs());
        }
    }

    // At L = 1 the k = N/8 multiplier is 6e-10 against O(1) kernel values,
    // so its relative error sits at the f64 floor; it is reported only.
    let n = 256;
    let multiplier = |l: f64| {
        let k = GreensKernel::new(l).unwrap();
        let mut worst: f64 = 0.0;
        for m in 0..=n / 8 {
            let w = TAU * m as f64 / l;
            let expect = 1.0 / (w.powi(4) + w * w + 1.0);
            for &s in &[0.0, 0.3 * l, 0.71 * l] {
                let got = k.integrate(s, |t| (w * t).cos(), 4 * m + 16).unwrap();
                worst = worst.max((got - expect * (w * s).cos()).abs() / expect);
            }
        }
        worst
    };
    let mult = multiplier(TAU).max(multiplier(50.0));
    let mult_unit = multiplier(1.0);
    check(
        sym_ok && period <= 1e-10 && row <= 1e-8 && mult <= 1e-7 && jump <= 1e-10,
        format!(
            "symmetric={sym_ok} periodicity {period:.1e} row-sum {row:.1e} multiplier {mult:.1e} \
             (L=1: {mult_unit:.1e}) jump {jump:.1e}"
        ),
    )
}

/// Ratio of central-difference errors at `eps` and `eps / 2`.
fn halving_ratio(fd: impl Fn(f64) -> f64, exact: f64, eps: f64) -> (f64, f64) {
    let e1 = (fd(eps) - exact).abs();
    let e2 = (fd(eps / 2.0) - exact).abs();
    (e1 / e2, e2)
}

fn variation_calculus() -> Outcome {
    let p = unit();
    let n = 128;
    let c = make_curve(
        Shape::FourierRandom {
            seed: 11,
            decay: 1.2,
        },
        n,
        2,
    )
    .unwrap();
    let g = geometry(&c).unwrap();
    let v = VectorField::random_smooth(n, 2, 6, 0.5, 21);
    let w = VectorField::random_smooth(n, 2, 6, 0.5, 22);
    let at = |eps: f64, dir: &VectorField| geometry(&c.perturb(dir, eps).unwrap()).unwrap();

    let de = first_variation(&g, &p, &v).unwrap();
    let (r_e, _) = halving_ratio(
        |e| (energy(&at(e, &v), &p) - energy(&at(-e, &v), &p)) / (2.0 * e),
        de,
        1e-3,
    );
    let dj = j_variation(&g, &p, &v).unwrap();
    let (r_j, _) = halving_ratio(
        |e| (j_functional(&at(e, &v), &p) - j_functional(&at(-e, &v), &p)) / (2.0 * e),
        dj,
        1e-2,
    );

    let d2_vw = second_variation(&g, &p, &v, &w).unwrap();
    let d2_wv = second_variation(&g, &p, &w, &v).unwrap();
    let asym = (d2_vw - d2_wv).abs();
    let (r_2, err_2) = halving_ratio(
        |e| {
            (first_variation(&at(e, &w), &p, &v).unwrap()
                - first_variation(&at(-e, &w), &p, &v).unwrap())
                / (2.0 * e)
        },
        d2_vw,
        1e-3,
    );
    let ratio_ok = |r: f64| (3.5..=4.5).contains(&r);
    check(
        ratio_ok(r_e) && ratio_ok(r_j) && ratio_ok(r_2) && asym <= 1e-10 && err_2 <= 1e-4 * d2_vw.abs(),
        format!(
            "FD halving ratios dE {r_e:.2} dJ {r_j:.2} d2E {r_2:.2}; d2E asymmetry {asym:.1e}, FD error {err_2:.1e} of {d2_vw:.3}"
        ),
    )
}

/// Second divided differences of `||grad||^2` in time at interior records.
fn second_derivative(records: &[Record]) -> Vec<f64> {
    let f: Vec<f64> = records.iter().map(|r| r.grad_norm.powi(2)).collect();
    let mut out = vec![0.0; records.len()];
    for i in 1..records.len() - 1 {
        let (h0, h1) = (records[i].dt, records[i + 1].dt);
        out[i] = 2.0 * ((f[i + 1] - f[i]) / h1 - (f[i] - f[i - 1]) / h0) / (h0 + h1);
    }
    out
}

/// Checks one trajectory; returns (max energy increase, worst defect/bound).
///
/// Over a step the exact flow has `-dE/dt` equal to the mean of `||grad||^2`,
/// which the endpoint average matches up to `dt^2/12 |f''|`.
fn dissipation(traj: &Trajectory) -> (f64, f64) {
    let recs = &traj.records;
    let fpp = second_derivative(recs);
    let mut rise: f64 = f64::NEG_INFINITY;
    let mut worst: f64 = 0.0;
    for i in 1..recs.len() {
        let (a, b) = (&recs[i - 1], &recs[i]);
        let de = b.energy - a.energy;
        rise = rise.max(de);
        let mean = 0.5 * (a.grad_norm.powi(2) + b.grad_norm.powi(2));
        let defect = (de / b.dt + mean).abs();
        let curv = (i.saturating_sub(1)..(i + 2).min(recs.len()))
            .map(|m| fpp[m].abs())
            .fold(0.0, f64::max);
        let bound = b.dt * b.dt / 12.0 * curv * 2.0 + 64.0 * f64::EPSILON * a.energy / b.dt;
        worst = worst.max(defect / bound);
    }
    (rise, worst)
}

fn energy_dissipation(adaptive: &Trajectory) -> Outcome {
    let (rise_a, worst_a) = dissipation(adaptive);

    let dt = 0.05;
    let config = FlowConfig {
        integrator: Integrator::FixedRk4 { dt },
        t_max: 5.0,
        ..FlowConfig::default()
    };
    let fixed = run_flow(&ellipse(64), &config).unwrap();
    let (rise_f, worst_f) = dissipation(&fixed);

    let e0 = adaptive.records[0].energy;
    let dissipated = adaptive.dissipated();
    let drop = e0 - adaptive.records.last().unwrap().energy;
    check(
        rise_a <= ENERGY_SLACK && rise_f <= ENERGY_SLACK && worst_a <= 1.0 && worst_f <= 1.0 && dissipated <= e0,
        format!(
            "max dE adaptive {rise_a:.1e} fixed {rise_f:.1e}; defect/bound adaptive {worst_a:.2} fixed {worst_f:.2}; \
             int ||grad||^2 = {dissipated:.4} (E0 - E = {drop:.4}, E0 = {e0:.4})"
        ),
    )
}

fn invariance() -> Outcome {
    let p = unit();
    let diffeo = Diffeo::random(5, 3, 0.6).unwrap();
    let shift = [0.7, -1.9];
    let fixtures = [
        Shape::Ellipse { a: 1.3, b: 0.7 },
        Shape::FourierRandom {
            seed: 2,
            decay: 1.0,
        },
    ];
    let mut trans: f64 = 0.0;
    // Worst reparametrisation discrepancy per N = 32..256, [kernel, weak].
    let mut by_n = Vec::new();
    for n in [32, 64, 128, 256] {
        let mut worst = [0.0f64; 2];
        for shape in fixtures {
            let c = make_curve(shape, n, 2).unwrap();
            for (i, backend) in [Backend::Kernel, Backend::Weak].into_iter().enumerate() {
                let r = invariance_audit(&c, &p, backend, &diffeo, &shift).unwrap();
                trans = trans.max(r.translation_energy).max(r.translation_grad_norm);
                worst[i] = worst[i].max(r.reparam_grad_norm);
            }
        }
        by_n.push(worst);
    }
    // The weak backend is spectral: every doubling gains at least 2^8 until
    // roundoff. The kernel backend's quadrature is algebraic; its order is
    // reported.
    let spectral = by_n
        .windows(2)
        .all(|w| w[1][1] < 1e-12 || w[0][1] / w[1][1] >= 256.0);
    let kernel_order = (by_n[2][0] / by_n[3][0]).log2();
    let at_256 = by_n[3][0].max(by_n[3][1]);
    let list = |i: usize| {
        by_n.iter()
            .map(|w| format!("{:.1e}", w[i]))
            .collect::<Vec<_>>()
            .join(" ")
    };
    check(
        trans <= 1e-10 && at_256 <= 1e-4 && spectral,
        format!(
            "translation {trans:.1e}; reparametrisation ||grad|| N=32..256 weak {} / kernel {} (order {kernel_order:.1})",
            list(1),
            list(0)
        ),
    )
}

fn reparam_machinery() -> Outcome {
    let rows: Vec<Result<[f64; 6], String>> = (0..50u64)
        .into_par_iter()
        .map(|seed| {
            let decay = 2.0 + 0.5 * (seed % 3) as f64;
            let dim = 2 + (seed % 2) as usize;
            let n = 256;
            let c = make_curve(
                Shape::FourierRandom {
                    seed: 100 + seed,
                    decay,
                },
                n,
                dim,
            )
            .map_err(|e| e.to_string())?;
            let pc = project_arclength(&c).map_err(|e| e.to_string())?;
            let g = geometry(&pc).unwrap();
            let l = g.length;
            let phi = phi_sup(&g) / l;
            let ppc = project_arclength(&pc).unwrap();
            let idem = (ppc.points() - pc.points()).amax() / l;
            let proj = TangentProjector::new(&g).map_err(|e| e.to_string())?;
            let mut w = VectorField::random_smooth(n, 1, 8, 0.3, seed)
                .into_values()
                .column(0)
                .iter()
                .copied()
                .collect::<Vec<_>>();
            let mean = w.iter().sum::<f64>() / n as f64;
            w.iter_mut().for_each(|x| *x -= mean);
            let rw = proj.right_inverse(&w).unwrap();
            let back = dphi(&g, &rw.field).unwrap();
            let wmax = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let inv = back
                .iter()
                .zip(&w)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                / wmax;
            let v = VectorField::random_smooth(n, dim, 8, 0.3, 500 + seed);
            let prv = proj.project(&v).unwrap();
            let tang = dphi(&g, &prv)
                .unwrap()
                .iter()
                .fold(0.0f64, |m, x| m.max(x.abs()))
                / g.h2ds_norm(&v).unwrap();
            Ok([phi, idem, inv, tang, proj.gramian.mu, rw.endpoint_defect])
        })
        .collect();
    let failures: Vec<&String> = rows.iter().filter_map(|r| r.as_ref().err()).collect();
    if !failures.is_empty() {
        return Err(format!("{} curves failed: {}", failures.len(), failures[0]));
    }
    let ok: Vec<[f64; 6]> = rows.into_iter().map(Result::unwrap).collect();
    let max = |i: usize| ok.iter().map(|r| r[i]).fold(0.0, f64::max);
    let mu_min = ok.iter().map(|r| r[4]).fold(f64::INFINITY, f64::min);
    check(
        max(0) <= 1e-8 && max(1) <= 1e-8 && max(2) <= 1e-6 && max(3) <= 1e-8 && mu_min > 0.0,
        format!(
            "50 curves: Phi(P)/L {:.1e}, P idempotence {:.1e}, dPhi r - id {:.1e}, dPhi(pr V)/||V|| {:.1e}, min mu {mu_min:.3}",
            max(0),
            max(1),
            max(2),
            max(3)
        ),
    )
}

fn stiffness() -> Outcome {
    let p = unit();
    let budget = 4000;
    let l2 =
        |n: usize| max_stable_dt(&ellipse(n), &p, Method::L2, budget, 1e-11, 1e-3, 20).unwrap();
    let (l2_64, l2_128) = rayon::join(|| l2(64), || l2(128));
    let h2 = max_stable_dt(
        &ellipse(128),
        &p,
        Method::H2(Backend::Weak),
        200,
        1e-3,
        10.0,
        10,
    )
    .unwrap();
    let ratio = h2 / l2_128;
    let shrink = l2_64 / l2_128;
    check(
        ratio >= 1e3 && (12.0..=20.0).contains(&shrink),
        format!(
            "N=128 max stable dt: H2 {h2:.3} vs L2 {l2_128:.2e} (ratio {ratio:.1e}); L2 N=64 {l2_64:.2e}, shrink x{shrink:.1}"
        ),
    )
}

fn lojasiewicz(traj: &Trajectory) -> Outcome {
    let mut synth: f64 = 0.0;
    for theta in [0.3, 0.5, 0.75, 0.9] {
        let mut recs: Vec<Record> = (0..=140)
            .map(|i| {
                let gap = 10f64.powf(-0.1 * i as f64);
                Record {
                    t: i as f64,
                    energy: 4.0 + gap,
                    grad_norm: 1.7 * gap.powf(theta),
                    dt: 1.0,
                    cum_length: 0.0,
                    local_error: 0.0,
                }
            })
            .collect();
        recs.push(Record {
            t: 141.0,
            energy: 4.0,
            grad_norm: 0.0,
            ..recs[0]
        });
        synth = synth.max((fit_lojasiewicz_records(&recs).unwrap().theta - theta).abs());
    }
    let fit = fit_lojasiewicz(traj).map_err(|e| e.to_string())?;
    // Cumulative length under two further 100x tolerance tightenings: the
    // changes must shrink and the last must be small.
    let lengths: Vec<f64> = std::iter::once(traj.records.last().unwrap().cum_length)
        .chain(
            [1e-10, 1e-12]
                .par_iter()
                .map(|&tol| {
                    let t = run_flow(&ellipse(128), &ellipse_config(tol, tol * 1e-2)).unwrap();
                    t.records.last().unwrap().cum_length
                })
                .collect::<Vec<_>>(),
        )
        .collect();
    let d1 = (lengths[0] - lengths[1]).abs();
    let d2 = (lengths[1] - lengths[2]).abs();
    check(
        synth <= 1e-3
            && fit.theta > 0.0
            && fit.theta < 1.0
            && fit.residual < 0.1
            && fit.n_points >= 20
            && lengths.iter().all(|l| l.is_finite())
            && d2 < d1
            && d2 <= 1e-3 * lengths[2],
        format!(
            "synthetic theta error {synth:.1e}; ellipse theta {:.3} residual {:.3} on {} records; \
             cum length {:.6} -> {:.6} -> {:.6} over tolerances 1e-8, 1e-10, 1e-12",
            fit.theta, fit.residual, fit.n_points, lengths[0], lengths[1], lengths[2]
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let traj = ellipse_run();
    type Criterion<'a> = (&'a str, Box<dyn Fn() -> Outcome + Sync + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("limiting radius", Box::new(|| limiting_radius(&traj))),
        ("stationary circles", Box::new(stationarity)),
        ("backend equivalence", Box::new(backend_equivalence)),
        ("Riesz identity", Box::new(riesz)),
        ("operator residual", Box::new(operator_residual)),
        ("Green's kernel", Box::new(greens_kernel)),
        ("variation calculus", Box::new(variation_calculus)),
        ("energy dissipation", Box::new(|| energy_dissipation(&traj))),
        ("invariance", Box::new(invariance)),
        ("reparametrisation", Box::new(reparam_machinery)),
        ("stiffness", Box::new(stiffness)),
        ("Lojasiewicz", Box::new(|| lojasiewicz(&traj))),
    ];
    let results: Vec<(Outcome, f64)> = criteria
        .par_iter()
        .map(|(_, f)| {
            let t = Instant::now();
            (f(), t.elapsed().as_secs_f64())
        })
        .collect();
    let mut failed = 0;
    for (i, ((name, _), (outcome, secs))) in criteria.iter().zip(&results).enumerate() {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2} {name}: {detail} [{secs:.1}s]", i + 1);
    }
    println!(
        "{} of {} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
