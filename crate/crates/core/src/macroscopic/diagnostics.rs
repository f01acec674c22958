//! Regime detection on `Ξ_ε`, the flow-rule trace and the convergence report.

use serde::{Deserialize, Serialize};

use super::fields::{InterfaceCurves, MacroFields};
use super::stefan::{Regime, StefanSolution};
use crate::error::{Error, Result};
use crate::lattice::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub tau_start: f64,
    pub tau_end: f64,
    pub regime: Regime,
}

impl Segment {
    pub fn len(&self) -> f64 {
        self.tau_end - self.tau_start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectOptions {
    /// Step of the finite differences of `Ξ_ε`.
    pub dtau: f64,
    /// Pinned stretches shorter than this are absorbed into the motion.
    pub min_pinned: f64,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self { dtau: 0.004, min_pinned: 0.012 }
    }
}

/// Splits `[0, τ_fin]` into pinned and moving segments from the increments of
/// `Ξ*_ε` over steps of `dtau`.
pub fn segment_regimes(curve: &dyn Fn(f64) -> f64, tau_fin: f64, opts: &DetectOptions) -> Vec<Segment> {
    let steps = (tau_fin / opts.dtau).ceil().max(1.0) as usize;
    let h = tau_fin / steps as f64;
    let mut raw: Vec<Segment> = Vec::new();
    for i in 0..steps {
        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
        let regime = if curve(b) > curve(a) { Regime::Moving } else { Regime::Pinned };
        push_merged(&mut raw, Segment { tau_start: a, tau_end: b, regime });
    }
    let mut out: Vec<Segment> = Vec::new();
    for s in raw {
        let s = if s.regime == Regime::Pinned && s.len() < opts.min_pinned - 1e-12 && s.tau_end < tau_fin - 1e-12 {
            Segment { regime: Regime::Moving, ..s }
        } else {
            s
        };
        push_merged(&mut out, s);
    }
    out
}

fn push_merged(v: &mut Vec<Segment>, s: Segment) {
    match v.last_mut() {
        Some(l) if l.regime == s.regime => l.tau_end = s.tau_end,
        _ => v.push(s),
    }
}

/// Moving segment followed by a final pinned one.
pub fn is_advance_then_pin(segs: &[Segment]) -> bool {
    segs.len() >= 2 && segs[segs.len() - 1].regime == Regime::Pinned && segs[segs.len() - 2].regime == Regime::Moving
}

/// A pinned segment directly followed by a moving one.
pub fn has_depinning(segs: &[Segment]) -> bool {
    segs.windows(2).any(|w| w[0].regime == Regime::Pinned && w[1].regime == Regime::Moving)
}

/// Segments of the Stefan regime flags.
pub fn stefan_segments(sol: &StefanSolution) -> Vec<Segment> {
    let mut v = Vec::new();
    for i in 1..sol.tau.len() {
        push_merged(&mut v, Segment { tau_start: sol.tau[i - 1], tau_end: sol.tau[i], regime: sol.regime[i] });
    }
    v
}

/// Default trace radius `⌈√n/2⌉`.
pub fn trace_radius(n: usize) -> usize {
    (0.5 * (n as f64).sqrt()).ceil() as usize
}

/// `P_ε` near `Ξ*_ε`: mean of the averages of `p` over the `radius` sites left of
/// `k` and the `radius` sites right of `k`.
pub fn interface_trace(traj: &Trajectory, snapshot: usize, radius: usize) -> f64 {
    let s = &traj.snapshots[snapshot];
    let p = traj.p_of(s);
    let k = traj.pos(s.k) as i64;
    let n = p.len() as i64;
    let mean = |lo: i64, hi: i64| {
        let (lo, hi) = (lo.max(0), hi.min(n - 1));
        if lo > hi {
            return None;
        }
        Some((lo..=hi).map(|i| p[i as usize]).sum::<f64>() / (hi - lo + 1) as f64)
    };
    match (mean(k - radius as i64, k - 1), mean(k + 1, k + radius as i64)) {
        (Some(a), Some(b)) => 0.5 * (a + b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => p[k.clamp(0, n - 1) as usize],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub tau: f64,
    pub trace: f64,
    pub xi_star: f64,
}

/// Trace at every snapshot, averaged over the snapshots within `±half_window` in τ.
pub fn trace_series(traj: &Trajectory, radius: usize, half_window: f64) -> Vec<TracePoint> {
    let e2 = traj.epsilon * traj.epsilon;
    let raw: Vec<(f64, f64, i64)> = (0..traj.snapshots.len())
        .map(|i| (traj.snapshots[i].t * e2, interface_trace(traj, i, radius), traj.snapshots[i].k))
        .collect();
    raw.iter()
        .map(|&(tau, _, k)| {
            let near: Vec<f64> = raw.iter().filter(|r| (r.0 - tau).abs() <= half_window).map(|r| r.1).collect();
            TracePoint { tau, trace: near.iter().sum::<f64>() / near.len() as f64, xi_star: traj.epsilon * k as f64 }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRuleReport {
    pub segments: Vec<Segment>,
    /// `max |trace − p*|` over snapshots inside moving segments.
    pub moving_deviation: Option<f64>,
    /// Largest trace over the settled part of each pinned segment.
    pub pinned_max_trace: Vec<f64>,
    /// `Ξ*_ε` increments inside pinned segments.
    pub pinned_drift: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowRuleOptions {
    pub detect: DetectOptions,
    /// Time-averaging half window of the trace.
    pub half_window: f64,
    /// Trace radius in sites; `None` takes `⌈√n/2⌉`.
    pub radius: Option<usize>,
    /// Leading fraction of a pinned segment skipped before the trace is read.
    pub settle: f64,
}

impl Default for FlowRuleOptions {
    fn default() -> Self {
        Self { detect: DetectOptions::default(), half_window: 0.001, radius: None, settle: 0.5 }
    }
}

pub fn flow_rule(traj: &Trajectory, curves: &InterfaceCurves, p_star: f64, opts: &FlowRuleOptions) -> FlowRuleReport {
    let radius = opts.radius.unwrap_or_else(|| trace_radius(traj.n_domain));
    let segments = segment_regimes(&|t| curves.xi_star(t), curves.tau_fin, &opts.detect);
    let series = trace_series(traj, radius, opts.half_window);
    let inside = |s: &Segment, tau: f64| tau >= s.tau_start && tau <= s.tau_end;
    let mut moving_deviation: Option<f64> = None;
    let mut pinned_max_trace = Vec::new();
    let mut pinned_drift = Vec::new();
    for s in &segments {
        match s.regime {
            Regime::Moving => {
                for pt in series.iter().filter(|pt| inside(s, pt.tau)) {
                    let d = (pt.trace - p_star).abs();
                    moving_deviation = Some(moving_deviation.map_or(d, |m| m.max(d)));
                }
            }
            Regime::Pinned => {
                let from = s.tau_start + opts.settle * s.len();
                let m = series.iter().filter(|pt| pt.tau >= from && pt.tau <= s.tau_end).map(|pt| pt.trace).fold(f64::MIN, f64::max);
                pinned_max_trace.push(m);
                pinned_drift.push(curves.xi_star(s.tau_end) - curves.xi_star(s.tau_start));
            }
        }
    }
    FlowRuleReport { segments, moving_deviation, pinned_max_trace, pinned_drift }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub data_hash: String,
    pub epsilons: Vec<f64>,
    pub field_errors: Vec<f64>,
    pub interface_errors: Vec<f64>,
    pub flow_rule_deviation: Vec<Option<f64>>,
}

impl ConvergenceReport {
    fn decreasing(v: &[f64]) -> bool {
        v.windows(2).all(|w| w[1] < w[0])
    }

    /// Errors ordered by decreasing ε are strictly decreasing.
    pub fn monotone(&self) -> (bool, bool) {
        let mut idx: Vec<usize> = (0..self.epsilons.len()).collect();
        idx.sort_by(|a, b| self.epsilons[*b].total_cmp(&self.epsilons[*a]));
        let f: Vec<f64> = idx.iter().map(|&i| self.field_errors[i]).collect();
        let x: Vec<f64> = idx.iter().map(|&i| self.interface_errors[i]).collect();
        (Self::decreasing(&f), Self::decreasing(&x))
    }
}

/// Sup-norm errors of each member against the Stefan reference: interface over the
/// Stefan τ samples, field at `τ_fin` over the Stefan nodes `ξ > max ε/2`.
pub fn compare(
    members: &[MacroFields],
    flow: &[Option<f64>],
    stefan: &StefanSolution,
    stefan_hash: &str,
) -> Result<ConvergenceReport> {
    if members.is_empty() {
        return Err(Error::Config("compare needs at least one member".into()));
    }
    for m in members {
        if m.data_hash != stefan_hash {
            return Err(Error::Config(format!(
                "initial data hash mismatch at eps={}: {} vs {}",
                m.epsilon, m.data_hash, stefan_hash
            )));
        }
    }
    let eps_max = members.iter().map(|m| m.epsilon).fold(0.0, f64::max);
    let tau_fin = *stefan.tau.last().expect("non-empty Stefan solution");
    let last = stefan.tau.len() - 1;
    let mut field_errors = Vec::new();
    let mut interface_errors = Vec::new();
    for m in members {
        let ie = stefan
            .tau
            .iter()
            .zip(&stefan.interface)
            .map(|(&t, &x)| (m.curves.xi_star(t) - x).abs())
            .fold(0.0, f64::max);
        let tau_end = tau_fin.min(*m.tau.last().unwrap_or(&0.0));
        let mut fe = 0.0f64;
        for (i, &x) in stefan.xi.iter().enumerate() {
            if x <= 0.5 * eps_max {
                continue;
            }
            fe = fe.max((m.p_at(tau_end, x)? - stefan.p[last][i]).abs());
        }
        interface_errors.push(ie);
        field_errors.push(fe);
    }
    let flow_rule_deviation = if flow.len() == members.len() { flow.to_vec() } else { vec![None; members.len()] };
    Ok(ConvergenceReport {
        data_hash: stefan_hash.to_string(),
        epsilons: members.iter().map(|m| m.epsilon).collect(),
        field_errors,
        interface_errors,
        flow_rule_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segmentation() {
        let curve = |t: f64| if t < 0.03 { (t * 1000.0).floor() * 0.01 } else { 0.3 };
        let segs = segment_regimes(&curve, 0.1, &DetectOptions::default());
        assert!(is_advance_then_pin(&segs));
        assert!(!has_depinning(&segs));
        let curve2 = |t: f64| if t < 0.05 { 0.5 } else { 0.5 + ((t - 0.05) * 1000.0).floor() * 0.01 };
        let segs = segment_regimes(&curve2, 0.1, &DetectOptions::default());
        assert!(has_depinning(&segs));
    }

    #[test]
    fn short_pauses_are_motion() {
        let curve = |t: f64| (t / 0.01).floor() * 0.01;
        let segs = segment_regimes(&curve, 0.1, &DetectOptions::default());
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].regime, Regime::Moving);
    }
}
