//! Command-line front end: configuration, run orchestration and artifacts.

pub mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::RunConfig;

use crate::entropy::{self, Mu, Weight};
use crate::error::{Error, Result};
use crate::fluctuations::{self, impact_profile, regularity_report, RegularityReport};
use crate::interface::{loglog_slope, TransitionLog};
use crate::io::{self, Manifest};
use crate::lattice::{self, Boundary, SimOutcome, Trajectory};
use crate::macroscopic::{self, diagnostics, FlowRuleOptions, InterfaceCurves, Regime};
use crate::potential::PotentialParams;
use crate::spinodal;

#[derive(Debug, Parser)]
#[command(name = "splx", version, about = "Forward-backward diffusion lattice runs, fluctuation analysis and Stefan comparison")]
pub struct Cli {
    #[command(flatten)]
    pub flags: Flags,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BcFlag {
    Neumann,
    Padded,
}

/// Overrides applied on top of the config file.
#[derive(Debug, Args, Default)]
pub struct Flags {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    #[arg(long = "tau-fin", global = true)]
    pub tau_fin: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub bc: Option<BcFlag>,
    /// Preset initial data: pinning, depinning or stationary.
    #[arg(long, global = true)]
    pub init: Option<String>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One lattice run with logs and energy series.
    Simulate,
    /// The prototypical spinodal model.
    Toy {
        #[arg(long = "f-const")]
        f_const: Option<f64>,
        #[arg(long = "t-fin")]
        t_fin: Option<f64>,
        /// Half width of the window.
        #[arg(long)]
        window: Option<usize>,
    },
    /// Fluctuation decomposition of a stored run.
    Fluct,
    /// The ε family of runs, in parallel.
    Sweep {
        /// Comma separated lattice sizes.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
    },
    /// Reference Stefan solve.
    Stefan,
    /// Convergence report of stored sweep runs against the Stefan solution.
    Compare {
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
    },
    /// Invariant suite on one run.
    Verify,
}

impl Cli {
    /// Config file (or defaults) with flag overrides applied.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.flags.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let f = &self.flags;
        let toy = matches!(self.command, Command::Toy { .. });
        if let Some(v) = f.n {
            c.lattice.n = v;
        }
        if let Some(v) = f.kappa {
            if toy {
                c.toy.kappa = v;
            } else {
                c.lattice.kappa = v;
            }
        }
        if let Some(v) = f.dt {
            if toy {
                c.toy.dt = v;
            } else {
                c.lattice.dt = v;
            }
        }
        if let Some(v) = f.tau_fin {
            c.lattice.tau_fin = v;
        }
        if let Some(v) = f.bc {
            c.lattice.bc = match v {
                BcFlag::Neumann => Boundary::Neumann,
                BcFlag::Padded => Boundary::PaddedWindow { pad: None },
            };
        }
        if let Some(v) = &f.init {
            c.init.scenario = v.clone();
            c.init.profile = None;
            c.init.xi_ini = None;
        }
        if let Some(v) = &f.out {
            c.output.dir = v.clone();
        }
        if f.workers.is_some() {
            c.output.workers = f.workers;
        }
        match &self.command {
            Command::Toy { f_const, t_fin, window } => {
                if let Some(v) = f_const {
                    c.toy.f_const = *v;
                }
                if let Some(v) = t_fin {
                    c.toy.t_fin = *v;
                }
                if let Some(v) = window {
                    c.toy.window = *v;
                }
            }
            Command::Sweep { sizes: Some(s) } | Command::Compare { sizes: Some(s) } => c.sweep.n = s.clone(),
            _ => {}
        }
        Ok(c)
    }
}

/// Runs a parsed command; returns the process exit code.
pub fn run(cli: &Cli) -> Result<i32> {
    let cfg = cli.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers())
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Simulate => simulate(&cfg).map(|_| 0),
        Command::Toy { .. } => toy(&cfg).map(|_| 0),
        Command::Fluct => fluct(&cfg).map(|_| 0),
        Command::Sweep { .. } => sweep(&cfg).map(|_| 0),
        Command::Stefan => stefan(&cfg).map(|_| 0),
        Command::Compare { .. } => compare(&cfg).map(|_| 0),
        Command::Verify => verify(&cfg).map(|r| if r.passed() { 0 } else { 1 }),
    })
}

pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Result<Self> {
        for d in ["snapshots", "logs", "reports"] {
            std::fs::create_dir_all(root.join(d))?;
        }
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn file(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn trajectory(n: usize) -> String {
        format!("snapshots/trajectory_n{n}.jsonl")
    }

    pub fn log(n: usize) -> String {
        format!("logs/transitions_n{n}.json")
    }

    pub fn run_report(n: usize) -> String {
        format!("reports/run_n{n}.json")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub config_hash: String,
    pub data_hash: String,
    pub scenario: String,
    pub n: usize,
    pub epsilon: f64,
    pub kappa: f64,
    pub dt: f64,
    pub t_fin: f64,
    pub steps: usize,
    pub snapshots: usize,
    pub transitions: usize,
    pub min_waiting: Option<f64>,
    pub d_emp: Option<f64>,
    pub gamma_area: f64,
    pub mass_drift: f64,
    pub violations: Vec<lattice::Violation>,
    pub ordering_errors: Vec<String>,
    pub certificates: lattice::Certificates,
}

fn run_one(cfg: &RunConfig, n: usize) -> Result<(SimOutcome, RunReport)> {
    let lc = cfg.lattice_config(n);
    let spec = cfg.initial_spec()?;
    let (profile, xi_ini, name) = cfg.macro_data()?;
    let out = lattice::simulate(&lc, &spec, &mut [])?;
    let log = &out.log;
    let rep = RunReport {
        version: io::SUITE_VERSION.into(),
        config_hash: cfg.hash(),
        data_hash: macroscopic::data_hash(&profile, xi_ini, cfg.lattice.kappa),
        scenario: name,
        n,
        epsilon: lc.epsilon(),
        kappa: lc.kappa,
        dt: lc.dt,
        t_fin: lc.t_fin(),
        steps: out.steps,
        snapshots: out.trajectory.snapshots.len(),
        transitions: log.k_eps(),
        min_waiting: log.min_waiting(),
        d_emp: log.d_emp(),
        gamma_area: log.gamma_area(),
        mass_drift: out.mass_drift,
        violations: out.violations.clone(),
        ordering_errors: log.check_ordering(),
        certificates: out.certificates,
    };
    Ok((out, rep))
}

fn store_run(layout: &Layout, out: &SimOutcome, rep: &RunReport, manifest: &mut Manifest) -> Result<()> {
    let n = rep.n;
    io::save_trajectory(&layout.file(&Layout::trajectory(n)), &out.trajectory, &rep.config_hash)?;
    io::save_json(&layout.file(&Layout::log(n)), &out.log)?;
    io::save_json(&layout.file(&format!("logs/records_n{n}.json")), &out.log.export())?;
    io::save_json(&layout.file(&Layout::run_report(n)), rep)?;
    let curves = InterfaceCurves::from_log(&out.log);
    let e2 = out.trajectory.epsilon.powi(2);
    let rows: Vec<Vec<f64>> = out
        .trajectory
        .snapshots
        .iter()
        .map(|s| vec![s.t, s.t * e2, curves.xi_star(s.t * e2), curves.xi_hash(s.t * e2)])
        .collect();
    let cols = ["t", "tau", "xi_star", "xi_hash"];
    io::save_csv(&layout.file(&format!("reports/interface_n{n}.csv")), &comments(rep), &cols, &rows)?;
    manifest.add(&Layout::trajectory(n), "jsonl", &[], "header line, then one {t, tau, u, k} record per snapshot");
    manifest.add(&Layout::log(n), "json", &[], "transition log");
    manifest.add(&format!("logs/records_n{n}.json"), "json", &[], "transition records with macroscopic times");
    manifest.add(&Layout::run_report(n), "json", &[], "run summary and invariant violations");
    manifest.add(&format!("reports/interface_n{n}.csv"), "csv", &cols, "interface curves per snapshot");
    Ok(())
}

fn comments(rep: &RunReport) -> Vec<String> {
    vec![
        format!("splx {}", rep.version),
        format!("config_hash {}", rep.config_hash),
        format!("n {} epsilon {} kappa {}", rep.n, rep.epsilon, rep.kappa),
    ]
}

fn write_manifest(layout: &Layout, m: &Manifest) -> Result<()> {
    io::save_json(&layout.file(&format!("manifest_{}.json", m.command)), m)
}

fn default_pairs(p_star: f64) -> Vec<(String, Mu)> {
    vec![
        ("identity".into(), Mu::Identity),
        ("step_0".into(), entropy::smoothed_step(0.0)),
        ("step_half_pstar".into(), entropy::smoothed_step(0.5 * p_star)),
    ]
}

pub fn simulate(cfg: &RunConfig) -> Result<RunReport> {
    let layout = Layout::new(&cfg.output.dir)?;
    let n = cfg.lattice.n;
    let (out, rep) = run_one(cfg, n)?;
    let mut manifest = Manifest::new("simulate", &rep.config_hash);
    store_run(&layout, &out, &rep, &mut manifest)?;
    std::fs::write(layout.file("logs/config.toml"), cfg.to_toml()?)?;
    manifest.add("logs/config.toml", "toml", &[], "resolved configuration");

    let traj = &out.trajectory;
    let params = traj.params();
    let energy = entropy::energy_series(traj);
    let psi = Weight::Ones.sample(traj);
    let pairs = default_pairs(params.p_star);
    let mut cols: Vec<String> = vec!["t".into(), "tau".into(), "E".into(), "D".into()];
    let mut resid: Vec<Vec<f64>> = Vec::new();
    for (name, mu) in &pairs {
        let pair = entropy::make_pair(mu.clone(), params)?;
        let series = entropy::entropy_balance_residual(traj, &psi, &pair)?;
        let mut col = vec![f64::NAN; traj.snapshots.len()];
        let mut i = 0;
        for pt in &series.points {
            while traj.snapshots[i].t != pt.t {
                i += 1;
            }
            col[i] = pt.residual;
        }
        cols.push(format!("residual_{name}"));
        resid.push(col);
    }
    let e2 = traj.epsilon.powi(2);
    let rows: Vec<Vec<f64>> = energy
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut r = vec![p.t, p.t * e2, p.energy, p.dissipation];
            r.extend(resid.iter().map(|c| c[i]));
            r
        })
        .collect();
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    io::save_csv(&layout.file(&format!("reports/entropy_n{n}.csv")), &comments(&rep), &col_refs, &rows)?;
    manifest.add(&format!("reports/entropy_n{n}.csv"), "csv", &col_refs, "energy, dissipation and entropy balance residuals (weight 1)");
    write_manifest(&layout, &manifest)?;
    println!(
        "simulate: n={n} transitions={} min_waiting={:?} violations={} -> {}",
        rep.transitions,
        rep.min_waiting,
        rep.violations.len(),
        layout.root.display()
    );
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyReport {
    pub version: String,
    pub config_hash: String,
    pub overflow: bool,
    pub max_ratio: f64,
    pub late_growth: f64,
    pub final_representation_residual: f64,
    pub duhamel_deviation: Option<f64>,
}

pub fn toy(cfg: &RunConfig) -> Result<ToyReport> {
    let layout = Layout::new(&cfg.output.dir)?;
    let t = &cfg.toy;
    let z0 = vec![t.z0; 2 * t.window + 1];
    let forcing = cfg.toy_forcing();
    let traj = spinodal::simulate_toy(&z0, t.kappa, forcing, t.t_fin, t.dt, t.stride.max(1))?;
    let slow = spinodal::slow_bound_check(&traj);
    let last = traj.snapshots.last().expect("toy run stores its initial state");
    let duhamel_deviation = if traj.overflow {
        None
    } else {
        let m = t.window / 2;
        let exact = spinodal::duhamel_zeta(&z0, t.kappa, forcing, last.t, m.max(1))?;
        let sim = spinodal::slow_variables(&last.z, t.kappa);
        Some(exact.iter().zip(&sim).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    };
    let rep = ToyReport {
        version: io::SUITE_VERSION.into(),
        config_hash: cfg.hash(),
        overflow: traj.overflow,
        max_ratio: slow.running_max.last().copied().unwrap_or(0.0),
        late_growth: slow.late_growth(),
        final_representation_residual: spinodal::representation_residual(&last.z, t.kappa),
        duhamel_deviation,
    };
    let w = traj.window;
    let rows: Vec<Vec<f64>> = traj
        .snapshots
        .iter()
        .enumerate()
        .map(|(i, s)| vec![s.t, s.z[w], spinodal::slow_variables(&s.z, t.kappa)[0], slow.ratio[i], slow.fast_l1[i], slow.max_abs_z[i]])
        .collect();
    let cols = ["t", "z0", "zeta1", "slow_ratio", "fast_l1", "max_abs_z"];
    let mut manifest = Manifest::new("toy", &rep.config_hash);
    io::save_csv(&layout.file("reports/toy.csv"), &[format!("config_hash {}", rep.config_hash)], &cols, &rows)?;
    io::save_json(&layout.file("reports/toy.json"), &rep)?;
    manifest.add("reports/toy.csv", "csv", &cols, "toy trajectory diagnostics");
    manifest.add("reports/toy.json", "json", &[], "slow bound, representation and Duhamel checks");
    write_manifest(&layout, &manifest)?;
    println!("toy: max slow ratio {:.4} overflow={} -> {}", rep.max_ratio, rep.overflow, layout.root.display());
    Ok(rep)
}

fn load_run(layout: &Layout, n: usize) -> Result<(Trajectory, TransitionLog, RunReport)> {
    let tp = layout.file(&Layout::trajectory(n));
    if !tp.exists() {
        return Err(Error::Config(format!("missing trajectory {}; run simulate or sweep first", tp.display())));
    }
    let (_, traj) = io::load_trajectory(&tp)?;
    let log: TransitionLog = io::load_json(&layout.file(&Layout::log(n)))?;
    let rep: RunReport = io::load_json(&layout.file(&Layout::run_report(n)))?;
    Ok((traj, log, rep))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctReport {
    pub version: String,
    pub config_hash: String,
    pub n: usize,
    pub max_superposition: f64,
    pub residual_window: f64,
    pub summaries: Vec<fluctuations::KSummary>,
    pub regularity: RegularityReport,
}

pub fn fluct(cfg: &RunConfig) -> Result<FluctReport> {
    let layout = Layout::new(&cfg.output.dir)?;
    let n = cfg.lattice.n;
    let (traj, mut log, run) = load_run(&layout, n)?;
    let an = fluctuations::analyze(&traj, &mut log, &cfg.fluct_options())?;
    let rep = FluctReport {
        version: io::SUITE_VERSION.into(),
        config_hash: run.config_hash.clone(),
        n,
        max_superposition: an.max_superposition(),
        residual_window: an.residual_window,
        summaries: an.summaries.clone(),
        regularity: regularity_report(&an),
    };
    let mut manifest = Manifest::new("fluct", &run.config_hash);
    io::save_json(&layout.file(&format!("reports/fluct_n{n}.json")), &rep)?;
    io::save_json(&layout.file(&Layout::log(n)), &log)?;
    manifest.add(&format!("reports/fluct_n{n}.json"), "json", &[], "per-transition summaries and regularity constants");
    let cols = ["t", "completed", "superposition", "ess_mass", "neg_l1", "res_l1", "reg_grad_l2"];
    let rows: Vec<Vec<f64>> = an
        .stats
        .iter()
        .map(|s| vec![s.t, s.completed as f64, s.superposition, s.ess_mass, s.neg_l1, s.res_l1, s.reg_grad_l2])
        .collect();
    io::save_csv(&layout.file(&format!("reports/fluct_stats_n{n}.csv")), &comments(&run), &cols, &rows)?;
    manifest.add(&format!("reports/fluct_stats_n{n}.csv"), "csv", &cols, "per-snapshot fluctuation statistics");
    if let Some(f) = &an.fields {
        for (name, field) in [("q", &f.q), ("r_reg", &f.r_reg), ("r_res", &f.r_res), ("r_neg", &f.r_neg)] {
            let frames: Vec<(f64, &[f64])> = f.times.iter().zip(field).map(|(t, v)| (*t, v.as_slice())).collect();
            let rel = format!("snapshots/fluct_{name}_n{n}.splx");
            io::write_frames(&layout.file(&rel), &frames)?;
            manifest.add(&rel, "splx", &[], &format!("summed field {name}, one frame per snapshot"));
        }
    }
    write_manifest(&layout, &manifest)?;
    println!(
        "fluct: n={n} transitions={} superposition={:.3e} -> {}",
        rep.summaries.len(),
        rep.max_superposition,
        layout.root.display()
    );
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMember {
    pub n: usize,
    pub epsilon: f64,
    pub transitions: usize,
    pub min_waiting: Option<f64>,
    pub d_emp: Option<f64>,
    /// `τ_fin/(2·d_emp·ε)`.
    pub transition_bound: Option<f64>,
    pub bound_ok: bool,
    pub violations: usize,
    pub regularity: RegularityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub version: String,
    pub config_hash: String,
    pub members: Vec<SweepMember>,
    pub waiting_slope: Option<f64>,
    /// `max/min` over the sweep of each regularity constant.
    pub spread: Vec<(String, f64)>,
}

/// `max/min` of a positive series, `∞` when a member vanishes.
pub fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().cloned().fold(f64::MIN, f64::max);
    let lo = v.iter().cloned().fold(f64::MAX, f64::min);
    if lo > 0.0 {
        hi / lo
    } else if hi == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

pub fn sweep_member(cfg: &RunConfig, n: usize) -> Result<(SimOutcome, RunReport, SweepMember)> {
    let (out, rep) = run_one(cfg, n)?;
    let mut log = out.log.clone();
    let mut opts = cfg.fluct_options();
    // the Hölder quotient is sampled from the stored R_reg field
    opts.keep_fields = true;
    let an = fluctuations::analyze(&out.trajectory, &mut log, &opts)?;
    let eps = rep.epsilon;
    let bound = rep.d_emp.map(|d| cfg.lattice.tau_fin / (2.0 * d * eps));
    let member = SweepMember {
        n,
        epsilon: eps,
        transitions: rep.transitions,
        min_waiting: rep.min_waiting,
        d_emp: rep.d_emp,
        transition_bound: bound,
        bound_ok: bound.is_none_or(|b| rep.transitions as f64 <= b),
        violations: rep.violations.len(),
        regularity: regularity_report(&an),
    };
    Ok((out, rep, member))
}

pub fn sweep_summary(cfg: &RunConfig, members: Vec<SweepMember>) -> SweepReport {
    let eps: Vec<f64> = members.iter().map(|m| m.epsilon).collect();
    let waits: Option<Vec<f64>> = members.iter().map(|m| m.min_waiting).collect();
    let waiting_slope = waits.and_then(|w| loglog_slope(&eps, &w));
    let col = |f: fn(&RegularityReport) -> f64| members.iter().map(|m| f(&m.regularity)).collect::<Vec<f64>>();
    let spread = vec![
        ("sum_d_sqrt_eps".to_string(), spread(&col(|r| r.sum_d_sqrt_eps))),
        ("neg_l1_sqrt_eps".to_string(), spread(&col(|r| r.neg_l1_sqrt_eps))),
        ("reg_grad_over_eps".to_string(), spread(&col(|r| r.reg_grad_over_eps))),
        ("holder_quotient".to_string(), spread(&col(|r| r.holder_quotient))),
        ("res_l1".to_string(), spread(&col(|r| r.res_l1))),
    ];
    SweepReport { version: io::SUITE_VERSION.into(), config_hash: cfg.hash(), members, waiting_slope, spread }
}

pub fn sweep(cfg: &RunConfig) -> Result<SweepReport> {
    let layout = Layout::new(&cfg.output.dir)?;
    let mut sizes = cfg.sweep.n.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let results: Vec<(SimOutcome, RunReport, SweepMember)> =
        sizes.par_iter().map(|&n| sweep_member(cfg, n)).collect::<Result<Vec<_>>>()?;
    let mut manifest = Manifest::new("sweep", &cfg.hash());
    let mut members = Vec::new();
    for (out, rep, m) in results {
        store_run(&layout, &out, &rep, &mut manifest)?;
        members.push(m);
    }
    let rep = sweep_summary(cfg, members);
    io::save_json(&layout.file("reports/sweep.json"), &rep)?;
    manifest.add("reports/sweep.json", "json", &[], "waiting-time scaling and regularity constants per member");
    write_manifest(&layout, &manifest)?;
    println!("sweep: sizes {sizes:?} waiting slope {:?} -> {}", rep.waiting_slope, layout.root.display());
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StefanReport {
    pub version: String,
    pub config_hash: String,
    pub data_hash: String,
    pub final_interface: f64,
    pub truncated: bool,
    pub segments: Vec<diagnostics::Segment>,
}

fn solve_reference(cfg: &RunConfig) -> Result<(macroscopic::StefanSolution, String)> {
    let (profile, xi_ini, _) = cfg.macro_data()?;
    let params = PotentialParams::new(cfg.lattice.kappa)?;
    let sol = macroscopic::solve_stefan(&profile, xi_ini, params.p_star, cfg.lattice.tau_fin, &cfg.stefan_grid())?;
    Ok((sol, macroscopic::data_hash(&profile, xi_ini, cfg.lattice.kappa)))
}

pub fn stefan(cfg: &RunConfig) -> Result<StefanReport> {
    let layout = Layout::new(&cfg.output.dir)?;
    let (sol, hash) = solve_reference(cfg)?;
    let rep = StefanReport {
        version: io::SUITE_VERSION.into(),
        config_hash: cfg.hash(),
        data_hash: hash,
        final_interface: *sol.interface.last().expect("non-empty"),
        truncated: sol.truncated,
        segments: diagnostics::stefan_segments(&sol),
    };
    let mut manifest = Manifest::new("stefan", &rep.config_hash);
    io::save_json(&layout.file("reports/stefan.json"), &rep)?;
    let rows: Vec<Vec<f64>> = (0..sol.tau.len())
        .map(|i| vec![sol.tau[i], sol.interface[i], if sol.regime[i] == Regime::Moving { 1.0 } else { 0.0 }])
        .collect();
    let cols = ["tau", "xi", "moving"];
    io::save_csv(&layout.file("reports/stefan_interface.csv"), &[format!("config_hash {}", rep.config_hash)], &cols, &rows)?;
    let frames: Vec<(f64, &[f64])> = sol.tau.iter().zip(&sol.p).map(|(t, p)| (*t, p.as_slice())).collect();
    io::write_frames(&layout.file("snapshots/stefan_field.splx"), &frames)?;
    manifest.add("reports/stefan.json", "json", &[], "Stefan summary and regime segments");
    manifest.add("reports/stefan_interface.csv", "csv", &cols, "Stefan interface curve");
    manifest.add("snapshots/stefan_field.splx", "splx", &[], "P on the uniform xi grid, one frame per tau sample");
    write_manifest(&layout, &manifest)?;
    println!("stefan: final interface {:.4} -> {}", rep.final_interface, layout.root.display());
    Ok(rep)
}

pub fn compare(cfg: &RunConfig) -> Result<macroscopic::ConvergenceReport> {
    let layout = Layout::new(&cfg.output.dir)?;
    let (sol, hash) = solve_reference(cfg)?;
    let params = PotentialParams::new(cfg.lattice.kappa)?;
    let mut sizes = cfg.sweep.n.clone();
    sizes.sort_unstable();
    let mut members = Vec::new();
    let mut flow = Vec::new();
    let mut manifest = Manifest::new("compare", &cfg.hash());
    for &n in &sizes {
        let (traj, log, run) = load_run(&layout, n)?;
        let fields = macroscopic::rescale(&traj, &log, None, &run.data_hash)?;
        let fr = macroscopic::flow_rule(&traj, &fields.curves, params.p_star, &FlowRuleOptions::default());
        io::save_json(&layout.file(&format!("reports/flow_rule_n{n}.json")), &fr)?;
        manifest.add(&format!("reports/flow_rule_n{n}.json"), "json", &[], "regime segments and interface trace");
        flow.push(fr.moving_deviation);
        members.push(fields);
    }
    let rep = macroscopic::compare(&members, &flow, &sol, &hash)?;
    io::save_json(&layout.file("reports/convergence.json"), &rep)?;
    let mut cols = vec!["tau".to_string(), "stefan".to_string()];
    cols.extend(sizes.iter().map(|n| format!("lattice_n{n}")));
    let rows: Vec<Vec<f64>> = (0..sol.tau.len())
        .map(|i| {
            let mut r = vec![sol.tau[i], sol.interface[i]];
            r.extend(members.iter().map(|m| m.curves.xi_star(sol.tau[i])));
            r
        })
        .collect();
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    io::save_csv(&layout.file("reports/interface_curves.csv"), &[format!("data_hash {hash}")], &col_refs, &rows)?;
    manifest.add("reports/convergence.json", "json", &[], "sup-norm field and interface errors per epsilon");
    manifest.add("reports/interface_curves.csv", "csv", &col_refs, "interface curves, Stefan and lattice");
    write_manifest(&layout, &manifest)?;
    println!(
        "compare: interface errors {:?} field errors {:?} -> {}",
        rep.interface_errors,
        rep.field_errors,
        layout.root.display()
    );
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub version: String,
    pub config_hash: String,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Superposition residual allowed per unit `dt` by the `verify` suite.
pub const SUPERPOSITION_PER_DT: f64 = 0.5;

pub fn verify_checks(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut add = |name: &str, pass: bool, detail: String| checks.push(Check { name: name.into(), pass, detail });
    let params = PotentialParams::new(cfg.lattice.kappa)?;
    let k = params.kappa;
    let pe = (params.u_star - 1.0 / (1.0 + k)).abs() + (params.p_star - k / (1.0 + k)).abs();
    add(
        "potential",
        pe < 1e-15 && params.phi_prime(params.u_star) == -params.p_star && params.phi_prime(-params.u_star) == params.p_star,
        format!("parameter error {pe:e}"),
    );
    let rho = impact_profile(k)?;
    add("impact_profile_mass", (rho.mass() - 2.0).abs() < 1e-12, format!("mass {}", rho.mass()));

    let (out, rep) = run_one(cfg, cfg.lattice.n)?;
    let traj = &out.trajectory;
    add("lattice_invariants", rep.violations.is_empty(), format!("{} violations", rep.violations.len()));
    add("transition_ordering", rep.ordering_errors.is_empty(), rep.ordering_errors.join("; "));
    let neumann = matches!(cfg.lattice.bc, Boundary::Neumann);
    if neumann {
        add("mass", rep.mass_drift < 1e-9, format!("drift {:e}", rep.mass_drift));
    }
    let sup = fluctuations::superposition_check(traj, &out.log, &cfg.fluct_options())?;
    add(
        "superposition",
        sup <= SUPERPOSITION_PER_DT * cfg.lattice.dt,
        format!("max residual {sup:e}, allowed {:e}", SUPERPOSITION_PER_DT * cfg.lattice.dt),
    );
    let (_, xi_ini, _) = cfg.macro_data()?;
    let weights = [Weight::Ones, Weight::Gaussian { center: xi_ini, width: 0.05 }];
    let mut bad = 0;
    let mut pairing_bad = 0;
    for w in &weights {
        let psi = w.sample(traj);
        for (_, mu) in default_pairs(params.p_star) {
            let pair = entropy::make_pair(mu, params)?;
            let s = entropy::entropy_balance_residual(traj, &psi, &pair)?;
            bad += s.points.iter().filter(|p| p.residual > p.tol).count();
            pairing_bad += s.points.iter().filter(|p| p.pairing < 0.0).count();
        }
    }
    add("entropy_balance", bad == 0, format!("{bad} snapshots above tolerance"));
    add("dissipation_pairing", pairing_bad == 0, format!("{pairing_bad} negative pairings"));
    if neumann {
        let es = entropy::energy_series(traj);
        add("energy_law", es.law_violations() == 0, format!("{} violations", es.law_violations()));
        add("energy_monotone", es.max_increase() <= 1e-12, format!("largest increase {:e}", es.max_increase()));
    }
    let curves = InterfaceCurves::from_log(&out.log);
    let gamma = curves.gamma_area();
    add("gamma_area", gamma <= curves.epsilon * curves.tau_fin, format!("{gamma:e} vs {:e}", curves.epsilon * curves.tau_fin));
    let fields = macroscopic::rescale(traj, &out.log, None, &rep.data_hash)?;
    let sv = fields.structure_violations();
    add("macro_structure", sv.is_empty(), sv.into_iter().take(3).collect::<Vec<_>>().join("; "));
    Ok(checks)
}

pub fn verify(cfg: &RunConfig) -> Result<VerifyReport> {
    let layout = Layout::new(&cfg.output.dir)?;
    let rep = VerifyReport { version: io::SUITE_VERSION.into(), config_hash: cfg.hash(), checks: verify_checks(cfg)? };
    io::save_json(&layout.file("reports/verify.json"), &rep)?;
    let mut manifest = Manifest::new("verify", &rep.config_hash);
    manifest.add("reports/verify.json", "json", &[], "invariant checks");
    write_manifest(&layout, &manifest)?;
    for c in &rep.checks {
        println!("{} {} {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(rep)
}
