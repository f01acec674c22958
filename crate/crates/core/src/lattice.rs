//! Explicit Euler integration of `u̇_j = Δp_j`, `p_j = Φ'(u_j)`, with exact
//! landing on the spinodal thresholds `±u*`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interface::{EventKind, SpinodalEvent, TransitionLog, Tracker};
use crate::potential::PotentialParams;
use crate::profile::Profile;

pub const DEFAULT_ETA: f64 = 0.4;
const BOUND_SLACK: f64 = 1e-8;
const MAJORANT_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Neumann,
    /// Extends the lattice by `pad` sites on both sides (default `ceil(4 sqrt(t_fin))`).
    PaddedWindow { pad: Option<usize> },
}

fn default_stride() -> usize {
    100
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub n_particles: usize,
    pub kappa: f64,
    #[serde(default)]
    pub epsilon: Option<f64>,
    pub dt: f64,
    #[serde(default = "neumann")]
    pub bc: Boundary,
    pub tau_fin: f64,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Abort on the first invariant violation instead of collecting them.
    #[serde(default = "default_true")]
    pub strict: bool,
}

fn neumann() -> Boundary {
    Boundary::Neumann
}

impl LatticeConfig {
    pub fn new(n_particles: usize, kappa: f64, dt: f64, tau_fin: f64) -> Self {
        Self {
            n_particles,
            kappa,
            epsilon: None,
            dt,
            bc: Boundary::Neumann,
            tau_fin,
            snapshot_stride: default_stride(),
            eta: DEFAULT_ETA,
            strict: true,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(1.0 / self.n_particles as f64)
    }

    pub fn t_fin(&self) -> f64 {
        self.tau_fin / self.epsilon().powi(2)
    }

    pub fn params(&self) -> Result<PotentialParams> {
        PotentialParams::new(self.kappa)
    }

    pub fn pad(&self) -> usize {
        match self.bc {
            Boundary::Neumann => 0,
            Boundary::PaddedWindow { pad } => pad.unwrap_or((4.0 * self.t_fin().sqrt()).ceil() as usize),
        }
    }

    pub fn validate(&self) -> Result<PotentialParams> {
        let params = self.params()?;
        if self.n_particles < 2 {
            return Err(Error::Config("n_particles must be at least 2".into()));
        }
        if !(self.dt > 0.0) || !(self.tau_fin > 0.0) || self.snapshot_stride == 0 {
            return Err(Error::Config("dt, tau_fin and snapshot_stride must be positive".into()));
        }
        if !(self.eta > 0.0 && self.eta <= 2.0) {
            return Err(Error::Config("eta must lie in (0, 2]".into()));
        }
        let eps = self.epsilon();
        if !(eps > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        let bound = params.dt_max(self.eta);
        if self.dt > bound {
            return Err(Error::Config(format!("dt={} exceeds the stability bound {bound}", self.dt)));
        }
        Ok(params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArctanBranch {
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum InitialVariant {
    /// `u_j = c + d·atan(εj + e)` with the `plus` branch for `j < j_star`.
    Arctan { plus: ArctanBranch, minus: ArctanBranch, j_star: i64 },
    /// `u_j = P_ini(εj) + 1` for `εj < Ξ_ini` and `P_ini(εj) − 1` otherwise.
    Macroscopic { profile: Profile, xi_ini: f64 },
    Raw { u: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDataSpec {
    pub variant: InitialVariant,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
}

impl InitialDataSpec {
    pub fn macroscopic(profile: Profile, xi_ini: f64) -> Self {
        Self { variant: InitialVariant::Macroscopic { profile, xi_ini }, alpha: None, beta: None }
    }

    pub fn raw(u: Vec<f64>) -> Self {
        Self { variant: InitialVariant::Raw { u }, alpha: None, beta: None }
    }
}

/// Regularity constants of the sampled data, measured on sites `1..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    pub alpha: f64,
    pub beta: f64,
    /// Slope of the kink majorant in lattice units, `b = εβ`-compatible.
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Level {
    Minus,
    Spinodal,
    Plus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeState {
    pub t: f64,
    /// Site index of `u[0]`.
    pub first_site: i64,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub level: Vec<Level>,
    /// Interface index: first site not in the plus phase.
    pub k: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: f64,
    pub site: i64,
    pub what: String,
}

fn level_of(u: f64, params: &PotentialParams) -> Level {
    if u >= params.u_star {
        Level::Plus
    } else if u > -params.u_star {
        Level::Spinodal
    } else {
        Level::Minus
    }
}

pub fn laplacian_into(p: &[f64], out: &mut [f64]) {
    let n = p.len();
    if n == 1 {
        out[0] = 0.0;
        return;
    }
    out[0] = p[1] - p[0];
    for i in 1..n - 1 {
        out[i] = p[i - 1] + p[i + 1] - 2.0 * p[i];
    }
    out[n - 1] = p[n - 2] - p[n - 1];
}

impl LatticeState {
    pub fn from_u(u: Vec<f64>, first_site: i64, params: &PotentialParams) -> Result<Self> {
        let p = u.iter().map(|&x| params.phi_prime(x)).collect();
        let level: Vec<Level> = u.iter().map(|&x| level_of(x, params)).collect();
        let pos = level.iter().position(|l| *l != Level::Plus).unwrap_or(u.len());
        let k = first_site + pos as i64;
        let state = Self { t: 0.0, first_site, u, p, level, k };
        state.check_membership(params)?;
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn pos(&self, site: i64) -> usize {
        (site - self.first_site) as usize
    }

    /// Membership in `X_k` with `u_k` outside the open spinodal interval.
    pub fn check_membership(&self, params: &PotentialParams) -> Result<()> {
        let kp = self.pos(self.k);
        for (i, &x) in self.u.iter().enumerate() {
            let site = self.first_site + i as i64;
            let bad = |reason: &str| Err(Error::InitialData { index: site, reason: reason.to_string() });
            if !x.is_finite() {
                return bad("non-finite value");
            }
            if i < kp {
                continue;
            }
            if x <= -params.u_star_star {
                return bad("below -u**");
            }
            if i == kp {
                if params.in_spinodal(x) {
                    return bad("interface particle inside the spinodal interval");
                }
            } else if x >= -params.u_star {
                return bad("particle right of the interface is not in the minus phase");
            }
        }
        Ok(())
    }

    pub fn laplacian(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        laplacian_into(&self.p, &mut out);
        out
    }

    pub fn mass(&self) -> f64 {
        self.u.iter().sum()
    }

    pub fn spinodal_count(&self) -> usize {
        self.level.iter().filter(|l| **l == Level::Spinodal).count()
    }
}

/// Samples initial data; returns the state (at the padded window if requested) and
/// the regularity constants of the in-domain part.
pub fn init(spec: &InitialDataSpec, config: &LatticeConfig) -> Result<(LatticeState, Certificates)> {
    let params = config.validate()?;
    let n = config.n_particles;
    let eps = config.epsilon();
    let base: Vec<f64> = match &spec.variant {
        InitialVariant::Raw { u } => {
            if u.len() != n {
                return Err(Error::Config(format!("raw data has {} values, expected {n}", u.len())));
            }
            u.clone()
        }
        InitialVariant::Arctan { plus, minus, j_star } => (1..=n as i64)
            .map(|j| {
                let b = if j < *j_star { plus } else { minus };
                b.c + b.d * (eps * j as f64 + b.e).atan()
            })
            .collect(),
        InitialVariant::Macroscopic { profile, xi_ini } => {
            profile.validate()?;
            (1..=n as i64)
                .map(|j| {
                    let xi = eps * j as f64;
                    let pv = profile.eval(xi);
                    if xi < *xi_ini {
                        pv + 1.0
                    } else {
                        pv - 1.0
                    }
                })
                .collect()
        }
    };
    let domain = LatticeState::from_u(base, 1, &params)?;
    let cert = certificates(&domain, &params, eps);
    if let InitialVariant::Macroscopic { .. } = spec.variant {
        if let Some(a) = spec.alpha {
            if cert.alpha > a * (1.0 + 1e-12) {
                return Err(Error::InitialData { index: 0, reason: format!("alpha certificate {a} fails, data need {}", cert.alpha) });
            }
        }
        if let Some(b) = spec.beta {
            if cert.beta > b * (1.0 + 1e-12) {
                return Err(Error::InitialData { index: domain.k, reason: format!("beta certificate {b} fails, data need {}", cert.beta) });
            }
        }
    }
    let pad = config.pad();
    if pad == 0 {
        return Ok((domain, cert));
    }
    let mut u = Vec::with_capacity(n + 2 * pad);
    u.extend(std::iter::repeat(domain.u[0]).take(pad));
    u.extend_from_slice(&domain.u);
    u.extend(std::iter::repeat(domain.u[n - 1]).take(pad));
    let state = LatticeState::from_u(u, 1 - pad as i64, &params)?;
    Ok((state, cert))
}

/// `α` and `β` of the sampled data with the interface at `k`, and the kink slope `b`.
pub fn certificates(state: &LatticeState, params: &PotentialParams, eps: f64) -> Certificates {
    let p = &state.p;
    let n = p.len();
    let kp = state.pos(state.k).min(n);
    let lap = state.laplacian();
    let mut alpha: f64 = 0.0;
    for i in 0..n {
        alpha = alpha.max(p[i].abs());
        if i + 1 < n {
            alpha = alpha.max((p[i + 1] - p[i]).abs() / eps);
        }
        if i != kp {
            alpha = alpha.max(lap[i].abs() / (eps * eps));
        }
    }
    let mut b: f64 = 0.0;
    for (i, &pi) in p.iter().enumerate().take(kp) {
        b = b.max((pi - params.p_star) / (kp - i) as f64);
    }
    let mut beta = b / eps;
    if kp < n {
        beta = beta.max(lap[kp].abs() / eps);
    }
    Certificates { alpha, beta, b }
}

/// Integrator state plus scratch space.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub state: LatticeState,
    pub params: PotentialParams,
    lap: Vec<f64>,
}

/// Event with the state at the landing instant.
#[derive(Debug, Clone)]
pub struct LandedEvent {
    pub event: SpinodalEvent,
    pub u: Vec<f64>,
}

impl Stepper {
    pub fn new(state: LatticeState, params: PotentialParams) -> Self {
        let n = state.len();
        Self { state, params, lap: vec![0.0; n] }
    }

    fn refresh_lap(&mut self) {
        laplacian_into(&self.state.p, &mut self.lap);
    }

    fn lap_at(&self, i: usize) -> f64 {
        let p = &self.state.p;
        let n = p.len();
        let l = if i == 0 { p[0] } else { p[i - 1] };
        let r = if i + 1 == n { p[n - 1] } else { p[i + 1] };
        l + r - 2.0 * p[i]
    }

    /// One Euler step of length `dt`, split at every threshold crossing so that the
    /// crossing particle lands exactly on `±u*`.
    pub fn step(&mut self, dt: f64, events: &mut Vec<LandedEvent>, violations: &mut Vec<Violation>) {
        let us = self.params.u_star;
        let n = self.state.len();
        let mut remaining = dt;
        let mut last_landing: Option<(usize, EventKind, usize)> = None;
        let mut guard = 0usize;
        while remaining > 0.0 {
            guard += 1;
            self.refresh_lap();
            if let Some((i, kind, nv)) = last_landing.take() {
                // A landing whose continuation points back is a tangency, not a crossing.
                let touch = match kind {
                    EventKind::Enter => self.lap[i] < 0.0,
                    EventKind::ExitDown => self.lap[i] > 0.0,
                    _ => false,
                };
                if touch {
                    events.pop();
                    violations.truncate(nv);
                    self.state.level[i] = match kind {
                        EventKind::Enter => Level::Minus,
                        _ => Level::Spinodal,
                    };
                }
            }
            let mut best: Option<(f64, usize, f64, Level, EventKind)> = None;
            for i in 0..n {
                let du = remaining * self.lap[i];
                if du == 0.0 {
                    continue;
                }
                let x = self.state.u[i];
                let v = x + du;
                let hit = match self.state.level[i] {
                    Level::Minus if v > -us => Some((-us, Level::Spinodal, EventKind::Enter)),
                    Level::Spinodal if v >= us => Some((us, Level::Plus, EventKind::ExitUp)),
                    Level::Spinodal if v <= -us => Some((-us, Level::Minus, EventKind::ExitDown)),
                    Level::Plus if v < us => Some((us, Level::Spinodal, EventKind::ReenterFromPlus)),
                    _ => None,
                };
                if let Some((thr, lvl, kind)) = hit {
                    let theta = ((thr - x) / du).clamp(0.0, 1.0);
                    if best.is_none_or(|b| theta < b.0) {
                        best = Some((theta, i, thr, lvl, kind));
                    }
                }
            }
            let Some((theta, i, thr, lvl, kind)) = best else {
                for (j, l) in self.lap.iter().enumerate() {
                    self.state.u[j] += remaining * l;
                    self.state.p[j] = self.params.phi_prime(self.state.u[j]);
                }
                self.state.t += remaining;
                break;
            };
            let h = theta * remaining;
            if h > 0.0 {
                for (j, l) in self.lap.iter().enumerate() {
                    self.state.u[j] += h * l;
                    self.state.p[j] = self.params.phi_prime(self.state.u[j]);
                }
            }
            self.state.u[i] = thr;
            self.state.p[i] = self.params.phi_prime(thr);
            self.state.level[i] = lvl;
            self.state.t += h;
            remaining -= h;
            if theta >= 1.0 {
                remaining = 0.0;
            }
            let site = self.state.first_site + i as i64;
            let t = self.state.t;
            let nv = violations.len();
            match kind {
                EventKind::Enter if i > 0 && self.state.u[i - 1] <= self.params.u_star_star => {
                    violations.push(Violation { t, site, what: format!("entrance with u_(k-1)={} <= u**", self.state.u[i - 1]) });
                }
                EventKind::ExitUp => {
                    let d = self.lap_at(i);
                    if d <= 0.0 {
                        violations.push(Violation { t, site, what: format!("exit with lap p_k={d} <= 0") });
                    }
                }
                _ => {}
            }
            events.push(LandedEvent { event: SpinodalEvent { site, t, kind }, u: self.state.u.clone() });
            last_landing = Some((i, kind, nv));
            if guard > 64 + 4 * n {
                violations.push(Violation { t, site, what: "too many crossings in one step".into() });
                break;
            }
        }
    }
}

pub fn step(state: &mut LatticeState, dt: f64, params: &PotentialParams) -> Vec<LandedEvent> {
    let mut st = Stepper::new(state.clone(), *params);
    let mut ev = Vec::new();
    let mut vio = Vec::new();
    st.step(dt, &mut ev, &mut vio);
    *state = st.state;
    ev
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
    pub k: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub first_site: i64,
    /// Number of sites in the physical domain `1..=N`.
    pub n_domain: usize,
    pub epsilon: f64,
    pub kappa: f64,
    pub dt: f64,
    pub t_fin: f64,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn params(&self) -> PotentialParams {
        PotentialParams::new(self.kappa).expect("validated kappa")
    }

    pub fn len_sites(&self) -> usize {
        self.snapshots.first().map(|s| s.u.len()).unwrap_or(0)
    }

    pub fn p_of(&self, s: &Snapshot) -> Vec<f64> {
        let params = self.params();
        s.u.iter().map(|&x| params.phi_prime(x)).collect()
    }

    /// Snapshot stored at exactly time `t`.
    pub fn at_time(&self, t: f64) -> Option<&Snapshot> {
        let i = self.snapshots.partition_point(|s| s.t < t);
        self.snapshots.get(i).filter(|s| s.t == t)
    }

    pub fn initial(&self) -> &Snapshot {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("non-empty trajectory")
    }

    pub fn pos(&self, site: i64) -> usize {
        (site - self.first_site) as usize
    }
}

/// Receives every stored snapshot during a run.
pub trait Observer {
    fn observe(&mut self, snapshot: &Snapshot, first_site: i64);
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub trajectory: Trajectory,
    pub log: TransitionLog,
    pub certificates: Certificates,
    pub violations: Vec<Violation>,
    pub mass_drift: f64,
    pub steps: usize,
}

fn push_snapshot(traj: &mut Trajectory, s: Snapshot, observers: &mut [&mut dyn Observer]) {
    if traj.snapshots.last().is_some_and(|l| l.t == s.t && l.u == s.u) {
        return;
    }
    for o in observers.iter_mut() {
        o.observe(&s, traj.first_site);
    }
    traj.snapshots.push(s);
}

pub fn simulate(
    config: &LatticeConfig,
    spec: &InitialDataSpec,
    observers: &mut [&mut dyn Observer],
) -> Result<SimOutcome> {
    let params = config.validate()?;
    let (state, cert) = init(spec, config)?;
    let eps = config.epsilon();
    let t_fin = config.t_fin();
    let n_steps = (t_fin / config.dt - 1e-9).ceil().max(0.0) as usize;
    let first_site = state.first_site;
    let k0 = state.k;
    let mass0 = state.mass();
    let u_upper = params.u_star_star.max(state.u.iter().cloned().fold(f64::MIN, f64::max)) + BOUND_SLACK;
    let u_lower = -params.u_star_star - BOUND_SLACK;
    let b = cert.b;
    let mut traj = Trajectory {
        first_site,
        n_domain: config.n_particles,
        epsilon: eps,
        kappa: config.kappa,
        dt: config.dt,
        t_fin,
        snapshots: Vec::new(),
    };
    let mut tracker = Tracker::new(k0);
    let mut violations = Vec::new();
    let mut stepper = Stepper::new(state, params);
    push_snapshot(&mut traj, Snapshot { t: 0.0, u: stepper.state.u.clone(), k: k0 }, observers);
    let mut events = Vec::new();
    let check_majorant = |s: &Snapshot, v: &mut Vec<Violation>| {
        for (i, &x) in s.u.iter().enumerate() {
            let site = first_site + i as i64;
            let bound = params.p_star + b * ((s.k - site).max(0) as f64) + MAJORANT_SLACK;
            let p = params.phi_prime(x);
            if p > bound {
                v.push(Violation { t: s.t, site, what: format!("kink majorant: p={p} > {bound}") });
            }
        }
    };
    for step_idx in 0..n_steps {
        let h = if step_idx + 1 == n_steps { t_fin - stepper.state.t } else { config.dt };
        if h <= 0.0 {
            break;
        }
        events.clear();
        let before = violations.len();
        stepper.step(h, &mut events, &mut violations);
        for le in events.drain(..) {
            tracker.push(le.event)?;
            push_snapshot(&mut traj, Snapshot { t: le.event.t, u: le.u, k: tracker.interface() }, observers);
        }
        stepper.state.k = tracker.interface();
        let (mut lo, mut hi) = (f64::MAX, f64::MIN);
        for &x in &stepper.state.u {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        if lo < u_lower || hi > u_upper || !lo.is_finite() || !hi.is_finite() {
            violations.push(Violation { t: stepper.state.t, site: 0, what: format!("bounds: range [{lo}, {hi}]") });
        }
        if stepper.state.spinodal_count() > 1 {
            violations.push(Violation { t: stepper.state.t, site: 0, what: "two spinodal particles".into() });
        }
        if (step_idx + 1) % config.snapshot_stride == 0 || step_idx + 1 == n_steps {
            let s = Snapshot { t: stepper.state.t, u: stepper.state.u.clone(), k: stepper.state.k };
            check_majorant(&s, &mut violations);
            push_snapshot(&mut traj, s, observers);
        }
        if config.strict && violations.len() > before {
            let v = &violations[before];
            return Err(Error::Invariant { t: v.t, what: format!("site {}: {}", v.site, v.what) });
        }
    }
    let mass_drift = (stepper.state.mass() - mass0).abs();
    let log = tracker.finish(t_fin, eps);
    Ok(SimOutcome { trajectory: traj, log, certificates: cert, violations, mass_drift, steps: n_steps })
}
