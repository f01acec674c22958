//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --release --test acceptance`; pass criterion numbers as
//! arguments to run a subset.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use splx::cli::{sweep_member, sweep_summary, RunConfig, SweepReport};
use splx::entropy::{self, Mu, Weight};
use splx::fluctuations::{impact_profile, superposition_check, FluctOptions};
use splx::kernel::{heat_kernel, kernel_eval};
use splx::lattice::{simulate, InitialDataSpec, LatticeConfig, SimOutcome};
use splx::macroscopic::diagnostics::{is_advance_then_pin, has_depinning, segment_regimes, stefan_segments};
use splx::macroscopic::{self, FlowRuleOptions, InterfaceCurves, StefanGrid};
use splx::potential::PotentialParams;
use splx::scenarios::{self, Scenario};
use splx::spinodal::{representation_residual, simulate_toy, slow_dynamics_residual, Forcing};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn run(sc: &Scenario, n: usize, dt: f64, tau_fin: f64, stride: usize) -> SimOutcome {
    let mut cfg = LatticeConfig::new(n, 1.0, dt, tau_fin);
    cfg.snapshot_stride = stride;
    cfg.strict = false;
    simulate(&cfg, &InitialDataSpec::macroscopic(sc.profile.clone(), sc.xi_ini), &mut []).expect("lattice run")
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn c1_parameters() -> Outcome {
    let mut worst = 0.0f64;
    let mut exact = true;
    for kappa in [0.5, 1.0, 2.0, 10.0] {
        let p = PotentialParams::new(kappa).unwrap();
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        worst = worst.max(rel(p.u_star, 1.0 / (1.0 + kappa)));
        worst = worst.max(rel(p.p_star, kappa / (1.0 + kappa)));
        worst = worst.max(rel(p.u_star_star, (1.0 + 2.0 * kappa) / (1.0 + kappa)));
        // one-sided branch values meet at ±u*
        worst = worst.max(rel(p.u_star - 1.0, -p.p_star)).max(rel(-kappa * p.u_star, -p.p_star));
        worst = worst.max(rel(-p.u_star + 1.0, p.p_star)).max(rel(kappa * p.u_star, p.p_star));
        exact &= p.phi_prime(p.u_star) == -p.p_star && p.phi_prime(-p.u_star) == p.p_star;
        let grid: Vec<f64> = (0..=2000).map(|i| -3.0 + 6.0 * i as f64 / 2000.0).collect();
        let (lo, hi) = grid.iter().filter(|u| u.abs() <= p.u_star).fold((f64::MAX, f64::MIN), |(a, b), &u| {
            let v = p.phi_prime(u);
            (a.min(v), b.max(v))
        });
        exact &= lo >= -p.p_star && hi <= p.p_star;
    }
    outcome(worst <= 4.0 * f64::EPSILON && exact, format!("max relative error {worst:.2e}, extrema exact: {exact}"))
}

fn c2_kernel() -> Outcome {
    let times = [0.1, 1.0, 10.0];
    let oracle = common::rk4_kernel(80, 1e-4, &times);
    let mut worst = 0.0f64;
    for (ti, &t) in times.iter().enumerate() {
        for j in -20i64..=20 {
            worst = worst.max((heat_kernel(j, t).unwrap() - oracle[ti][(j + 80) as usize]).abs());
        }
    }
    let mut mass_err = 0.0f64;
    for &t in &times {
        let k = kernel_eval(t, 1e-10).unwrap();
        mass_err = mass_err.max((k.window_mass() + k.tail_bound - 1.0).abs()).max((k.window_mass() - 1.0).abs());
    }
    outcome(worst < 1e-8 && mass_err < 1e-10, format!("max |closed form - RK4| {worst:.2e}, mass error {mass_err:.2e}"))
}

fn c3_profile() -> Outcome {
    let mut worst = 0.0f64;
    for kappa in [0.1, 1.0, 10.0, 1e3] {
        worst = worst.max((impact_profile(kappa).unwrap().mass() - 2.0).abs());
    }
    let rho = impact_profile(1e3).unwrap();
    let ps = PotentialParams::new(1e3).unwrap().p_star;
    let r = rho.radius() as i64;
    let delta_err = (-r..=r).map(|j| (rho.get(j) - if j == 0 { 2.0 * ps } else { 0.0 }).abs()).fold(0.0, f64::max);
    outcome(worst < 1e-12 && delta_err < 1e-2, format!("max mass error {worst:.2e}, kappa=1e3 distance to 2p*δ {delta_err:.2e}"))
}

fn c4_slow_fast() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for kappa in [0.5, 1.0, 2.0] {
        for _ in 0..100 {
            let w = rng.gen_range(3..40);
            let half: Vec<f64> = (0..=w).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let z: Vec<f64> = (0..2 * w + 1).map(|i| half[(i as i64 - w as i64).unsigned_abs() as usize]).collect();
            worst = worst.max(representation_residual(&z, kappa));
        }
    }
    let mut ratios = Vec::new();
    for kappa in [0.5, 1.0, 2.0] {
        let w = 30;
        let half: Vec<f64> = (0..=w).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let z0: Vec<f64> = (0..2 * w + 1).map(|i| half[(i as i64 - w as i64).unsigned_abs() as usize]).collect();
        let f = Forcing::Sine { amplitude: 0.5, omega: 1.0 };
        let bound = PotentialParams::new(kappa).unwrap().dt_max(0.4);
        let dt = (bound / 4.0).min(0.01);
        let res = |h: f64| {
            let tr = simulate_toy(&z0, kappa, f, 2.0, h, 1).unwrap();
            let r = slow_dynamics_residual(&tr, 2.0).unwrap();
            r.z0.max(r.zeta1).max(r.zeta_bulk)
        };
        ratios.push(res(dt) / res(dt / 2.0));
    }
    let ok = worst < 1e-12 && ratios.iter().all(|r| (1.6..=2.4).contains(r));
    outcome(ok, format!("representation residual {worst:.2e}, residual ratios under dt halving {ratios:.3?}"))
}

fn c5_superposition() -> Outcome {
    let sc = scenarios::pinning();
    let dt = 0.0025;
    let stride = (10.0 / dt) as usize;
    let a = run(&sc, 200, dt, 0.05, stride);
    let b = run(&sc, 200, dt / 2.0, 0.05, 2 * stride);
    let opts = FluctOptions::default();
    let ra = superposition_check(&a.trajectory, &a.log, &opts).unwrap();
    let rb = superposition_check(&b.trajectory, &b.log, &opts).unwrap();
    let reduction = 1.0 - rb / ra;
    outcome(
        ra < 1e-3 && reduction >= 0.4,
        format!("residual {ra:.3e} at dt={dt}, {rb:.3e} at dt={}, reduction {:.0}%, transitions {}", dt / 2.0, reduction * 100.0, a.log.k_eps()),
    )
}

/// The N=200 pinning run shared by criteria 6 and 7.
fn base_run() -> &'static SimOutcome {
    static RUN: OnceLock<SimOutcome> = OnceLock::new();
    RUN.get_or_init(|| run(&scenarios::pinning(), 200, 0.1, 0.1, 10))
}

fn c6_invariants() -> Outcome {
    let out = base_run();
    let traj = &out.trajectory;
    let params = traj.params();
    let u0_max = traj.initial().u.iter().cloned().fold(f64::MIN, f64::max);
    let hi = params.u_star_star.max(u0_max) + 1e-8;
    let lo = -params.u_star_star - 1e-8;
    let b = out.certificates.b;
    let mut bad: Vec<String> = Vec::new();
    for s in &traj.snapshots {
        let spin = s.u.iter().filter(|u| params.in_spinodal(**u)).count();
        if spin > 1 {
            bad.push(format!("t={}: {spin} spinodal particles", s.t));
        }
        if s.u.iter().any(|&u| u < lo || u > hi) {
            bad.push(format!("t={}: bounds", s.t));
        }
        for (i, &u) in s.u.iter().enumerate() {
            let site = traj.first_site + i as i64;
            let ok = if site < s.k {
                u >= params.u_star
            } else if site > s.k {
                u <= -params.u_star
            } else {
                u < params.u_star
            };
            if !ok {
                bad.push(format!("t={}: site {site} outside X_k", s.t));
            }
            let p = params.phi_prime(u);
            if p > params.p_star + b * (s.k - site).max(0) as f64 + 1e-10 {
                bad.push(format!("t={}: kink majorant at {site}", s.t));
            }
        }
    }
    for r in &out.log.records {
        if let Some(s) = traj.snapshots.iter().find(|s| s.t == r.t_hash) {
            let i = traj.pos(r.k);
            if !(i > 0 && s.u[i - 1] > params.u_star_star) {
                bad.push(format!("entrance of {} without u_(k-1) > u**", r.k));
            }
        } else {
            bad.push(format!("no snapshot at entrance of {}", r.k));
        }
        if r.completed() {
            match traj.snapshots.iter().find(|s| s.t == r.t_star) {
                Some(s) => {
                    let p = traj.p_of(s);
                    let i = traj.pos(r.k);
                    let lap = p[i - 1] + p[(i + 1).min(p.len() - 1)] - 2.0 * p[i];
                    if !(lap > 0.0) || s.u[i] < params.u_star {
                        bad.push(format!("exit of {}: lap p = {lap}", r.k));
                    }
                }
                None => bad.push(format!("no snapshot at exit of {}", r.k)),
            }
        }
    }
    bad.extend(out.log.check_ordering());
    bad.extend(out.violations.iter().map(|v| format!("t={}: {}", v.t, v.what)));
    let k_monotone = traj.snapshots.windows(2).all(|w| w[1].k >= w[0].k);
    let n = bad.len() + usize::from(!k_monotone);
    outcome(
        n == 0,
        format!(
            "{n} violations over {} snapshots and {} transitions{}",
            traj.snapshots.len(),
            out.log.k_eps(),
            bad.first().map(|s| format!(", first: {s}")).unwrap_or_default()
        ),
    )
}

fn random_mu(rng: &mut ChaCha8Rng) -> Mu {
    let m = rng.gen_range(3..7);
    let mut xs: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut y = rng.gen_range(-1.0..1.0);
    let points = xs
        .into_iter()
        .map(|x| {
            let p = [x, y];
            y += rng.gen_range(0.0..2.0);
            p
        })
        .collect();
    Mu::PiecewiseLinear { points }
}

fn c7_entropy() -> Outcome {
    let out = base_run();
    let traj = &out.trajectory;
    let params = traj.params();
    let sc = scenarios::pinning();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mus: Vec<Mu> = (0..5).map(|_| random_mu(&mut rng)).collect();
    let weights = [
        Weight::Gaussian { center: sc.xi_ini, width: 0.05 },
        Weight::Hat { center: sc.xi_ini, half_width: 0.1 },
        Weight::Ones,
    ];
    let mut above = 0;
    let mut pairing = 0;
    let mut worst = f64::MIN;
    for w in &weights {
        let psi = w.sample(traj);
        for mu in &mus {
            let pair = entropy::make_pair(mu.clone(), params).unwrap();
            let s = entropy::entropy_balance_residual(traj, &psi, &pair).unwrap();
            above += s.points.iter().filter(|p| p.residual > p.tol).count();
            pairing += s.points.iter().filter(|p| p.pairing < 0.0).count();
            worst = worst.max(s.worst_ratio());
        }
    }
    let es = entropy::energy_series(traj);
    let peaks = entropy::dissipation_peaks(traj, &out.log, 10.0);
    let peaks_out = peaks.iter().filter(|p| !p.within).count();
    let ok = above == 0 && pairing == 0 && es.law_violations() == 0 && peaks_out == 0 && !peaks.is_empty();
    outcome(
        ok,
        format!(
            "balance: {above} above tol (worst residual/tol {worst:.3}); pairing: {pairing} negative; energy law: {} violations; peaks outside [0.1N,10N]: {peaks_out}/{}",
            es.law_violations(),
            peaks.len()
        ),
    )
}

/// Depinning sweep `N ∈ {100, 200, 400}` shared by criteria 8, 9 and 11.
fn sweep() -> &'static SweepReport {
    static SWEEP: OnceLock<SweepReport> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let mut cfg = RunConfig::default();
        cfg.init.scenario = "depinning".into();
        cfg.lattice.dt = 0.1;
        cfg.fluct.fields = false;
        let members = [100usize, 200, 400]
            .iter()
            .map(|&n| {
                cfg.lattice.stride = (cfg.lattice.tau_fin * (n * n) as f64 / cfg.lattice.dt / 300.0).ceil() as usize;
                sweep_member(&cfg, n).expect("sweep member").2
            })
            .collect();
        sweep_summary(&cfg, members)
    })
}

fn c8_waiting() -> Outcome {
    let s = sweep();
    let slope = s.waiting_slope.unwrap_or(f64::NAN);
    let bounds = s.members.iter().all(|m| m.bound_ok);
    let waits: Vec<String> = s.members.iter().map(|m| format!("N={}: {:.1}", m.n, m.min_waiting.unwrap_or(f64::NAN))).collect();
    outcome(
        (-1.3..=-0.7).contains(&slope) && bounds,
        format!("min waiting {} ; slope {slope:.3}; K_eps <= tau_fin/(2 d_emp eps): {bounds}", waits.join(", ")),
    )
}

fn c9_fluctuations() -> Outcome {
    let s = sweep();
    let res_max = s.members.iter().map(|m| m.regularity.res_l1).fold(f64::MIN, f64::max);
    let failing: Vec<&str> = s.spread.iter().filter(|(_, v)| !(*v < 3.0)).map(|(n, _)| n.as_str()).collect();
    let table: Vec<String> = s
        .members
        .iter()
        .map(|m| {
            let r = &m.regularity;
            format!(
                "N={}: {:.3e}/{:.3e}/{:.3e}/{:.3}/{:.6}",
                m.n, r.sum_d_sqrt_eps, r.neg_l1_sqrt_eps, r.reg_grad_over_eps, r.holder_quotient, r.res_l1
            )
        })
        .collect();
    let spreads: Vec<String> = s.spread.iter().map(|(n, v)| format!("{n} {v:.2}")).collect();
    outcome(
        failing.is_empty() && res_max <= 2.0 + 1e-6,
        format!(
            "[sumD.sqrt(eps)/neg.sqrt(eps)/grad/eps/holder/res] {}; spreads: {}; sup res {res_max:.9}{}",
            table.join(" | "),
            spreads.join(", "),
            if failing.is_empty() { String::new() } else { format!("; unstable: {}", failing.join(", ")) }
        ),
    )
}

struct Convergence {
    members: Vec<(usize, SimOutcome)>,
    report: macroscopic::ConvergenceReport,
    stefan: macroscopic::StefanSolution,
}

fn convergence() -> &'static Convergence {
    static C: OnceLock<Convergence> = OnceLock::new();
    C.get_or_init(|| {
        let sc = scenarios::pinning();
        let p_star = PotentialParams::new(1.0).unwrap().p_star;
        let stefan = macroscopic::solve_stefan(&sc.profile, sc.xi_ini, p_star, sc.tau_fin, &StefanGrid::new(800)).unwrap();
        let hash = macroscopic::data_hash(&sc.profile, sc.xi_ini, 1.0);
        let members: Vec<(usize, SimOutcome)> = [100usize, 200, 400, 800]
            .iter()
            .map(|&n| (n, run(&sc, n, 0.1, sc.tau_fin, (n * n / 640).max(1))))
            .collect();
        let fields: Vec<_> = members
            .iter()
            .map(|(_, o)| macroscopic::rescale(&o.trajectory, &o.log, None, &hash).unwrap())
            .collect();
        let flow: Vec<Option<f64>> = members
            .iter()
            .zip(&fields)
            .map(|((_, o), f)| macroscopic::flow_rule(&o.trajectory, &f.curves, p_star, &FlowRuleOptions::default()).moving_deviation)
            .collect();
        let report = macroscopic::compare(&fields, &flow, &stefan, &hash).unwrap();
        Convergence { members, report, stefan }
    })
}

const PIN_MARGIN: f64 = 0.005;

fn c10_convergence() -> Outcome {
    let c = convergence();
    let r = &c.report;
    let p_star = 0.5;
    let ie = &r.interface_errors;
    let fe = &r.field_errors;
    let (_, fine) = c.members.last().unwrap();
    let curves = InterfaceCurves::from_log(&fine.log);
    let fr = macroscopic::flow_rule(&fine.trajectory, &curves, p_star, &FlowRuleOptions::default());
    let moving = fr.moving_deviation.unwrap_or(f64::INFINITY);
    let pinned_ok = !fr.pinned_drift.is_empty()
        && fr.pinned_drift.iter().all(|d| *d == 0.0)
        && fr.pinned_max_trace.iter().all(|t| *t < p_star - PIN_MARGIN);
    let gamma_ok = c.members.iter().all(|(_, o)| {
        let cv = InterfaceCurves::from_log(&o.log);
        cv.gamma_area() <= cv.epsilon * cv.tau_fin
    });
    let ok = decreasing(ie)
        && decreasing(fe)
        && *ie.last().unwrap() < 0.02
        && *fe.last().unwrap() < 0.05
        && moving < 0.05
        && pinned_ok
        && gamma_ok;
    outcome(
        ok,
        format!(
            "interface errors {ie:.4?}; field errors {fe:.4?}; N=800 trace deviation on moving segments {moving:.4}; pinned traces {:.4?} (drift {:?}); Gamma bound: {gamma_ok}",
            fr.pinned_max_trace, fr.pinned_drift
        ),
    )
}

fn c11_regimes() -> Outcome {
    let c = convergence();
    let (_, fine) = c.members.last().unwrap();
    let pin_curves = InterfaceCurves::from_log(&fine.log);
    let opts = FlowRuleOptions::default().detect;
    let pin_segs = segment_regimes(&|t| pin_curves.xi_star(t), pin_curves.tau_fin, &opts);
    let sc = scenarios::depinning();
    let dep = run(&sc, 400, 0.1, sc.tau_fin, 250);
    let dep_curves = InterfaceCurves::from_log(&dep.log);
    let dep_segs = segment_regimes(&|t| dep_curves.xi_star(t), dep_curves.tau_fin, &opts);
    let fmt = |segs: &[macroscopic::Segment]| {
        segs.iter().map(|s| format!("{:?} {:.3}-{:.3}", s.regime, s.tau_start, s.tau_end)).collect::<Vec<_>>().join(", ")
    };
    let stefan_pin = stefan_segments(&c.stefan);
    outcome(
        is_advance_then_pin(&pin_segs) && has_depinning(&dep_segs),
        format!(
            "pinning N=800: [{}] (Stefan [{}]); depinning N=400: [{}]",
            fmt(&pin_segs),
            fmt(&stefan_pin),
            fmt(&dep_segs)
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "parameter formulas", c1_parameters),
        (2, "heat kernel oracle", c2_kernel),
        (3, "impact profile mass", c3_profile),
        (4, "slow-fast representation", c4_slow_fast),
        (5, "superposition identity", c5_superposition),
        (6, "structural invariants", c6_invariants),
        (7, "entropy suite", c7_entropy),
        (8, "waiting-time scaling", c8_waiting),
        (9, "fluctuation bounds", c9_fluctuations),
        (10, "macroscopic convergence", c10_convergence),
        (11, "regime detection", c11_regimes),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let t0 = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {id:>2} ({name}): {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t0.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
