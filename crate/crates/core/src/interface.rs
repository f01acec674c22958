//! Spinodal event bookkeeping: entrance, excursion and transition times per
//! particle, and waiting-time statistics over ε sweeps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Upward crossing of `−u*`.
    Enter,
    /// Downward crossing of `−u*`, closing an excursion.
    ExitDown,
    /// Upward crossing of `+u*`: the phase transition.
    ExitUp,
    /// Downward crossing of `+u*` from the plus phase.
    ReenterFromPlus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinodalEvent {
    pub site: i64,
    pub t: f64,
    pub kind: EventKind,
}

/// Serialises `±∞` as the strings `"inf"`/`"-inf"` so that unfinished
/// transitions survive a JSON round trip.
pub mod serde_time {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Tag(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Tag(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Tag(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Tag(t) => Err(serde::de::Error::custom(format!("bad time {t}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub k: i64,
    pub t_hash: f64,
    #[serde(with = "serde_time")]
    pub t_flat: f64,
    /// `+∞` while the transition is unfinished.
    #[serde(with = "serde_time")]
    pub t_star: f64,
    pub excursions: Vec<(f64, f64)>,
    pub d_k: Option<f64>,
}

impl TransitionRecord {
    pub fn completed(&self) -> bool {
        self.t_star.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionLog {
    pub records: Vec<TransitionRecord>,
    pub epsilon: f64,
    pub t_fin: f64,
    pub k_initial: i64,
}

impl TransitionLog {
    pub fn k_eps(&self) -> usize {
        self.records.iter().filter(|r| r.t_star <= self.t_fin).count()
    }

    /// Waiting times `t_{k+1}^# − t_k^*` over consecutive completed pairs.
    pub fn waiting_times(&self) -> Vec<f64> {
        self.records
            .windows(2)
            .filter(|w| w[0].completed() && w[1].k == w[0].k + 1)
            .map(|w| w[1].t_hash - w[0].t_star)
            .collect()
    }

    pub fn min_waiting(&self) -> Option<f64> {
        self.waiting_times().into_iter().reduce(f64::min)
    }

    /// `d_emp = min_waiting·ε/2`; `None` without a measured waiting time.
    pub fn d_emp(&self) -> Option<f64> {
        self.min_waiting().map(|w| w * self.epsilon / 2.0)
    }

    /// Macroscopic area `Σ (t^* − t^#)·ε³` of the interface region, clipped to the run.
    pub fn gamma_area(&self) -> f64 {
        let e3 = self.epsilon.powi(3);
        self.records.iter().map(|r| (r.t_star.min(self.t_fin) - r.t_hash) * e3).sum()
    }

    pub fn record(&self, k: i64) -> Option<&TransitionRecord> {
        self.records.iter().find(|r| r.k == k)
    }

    /// Interface index at time `t`.
    pub fn interface_at(&self, t: f64) -> i64 {
        self.k_initial + self.records.iter().filter(|r| r.t_star <= t).count() as i64
    }

    /// Checks ordering `t_{k−1}^* ≤ t_k^# ≤ t_k^♭ ≤ t_k^*` and excursion nesting.
    pub fn check_ordering(&self) -> Vec<String> {
        let mut bad = Vec::new();
        let mut prev_star = 0.0;
        let mut prev_k = None;
        for r in &self.records {
            if let Some(pk) = prev_k {
                if r.k != pk + 1 {
                    bad.push(format!("record k={} follows k={pk}", r.k));
                }
            }
            if !(prev_star <= r.t_hash && r.t_hash <= r.t_flat && r.t_flat <= r.t_star) {
                bad.push(format!("time ordering broken at k={}", r.k));
            }
            let mut last = r.t_hash;
            for &(a, b) in &r.excursions {
                if !(last <= a && a <= b && b <= r.t_flat) {
                    bad.push(format!("excursion ({a}, {b}) misplaced at k={}", r.k));
                }
                last = b;
            }
            prev_star = r.t_star;
            prev_k = Some(r.k);
        }
        bad
    }

    pub fn export(&self) -> Vec<RecordExport> {
        let e2 = self.epsilon * self.epsilon;
        self.records
            .iter()
            .map(|r| RecordExport {
                k: r.k,
                t_hash: r.t_hash,
                t_flat: r.t_flat,
                t_star: r.t_star,
                tau_hash: r.t_hash * e2,
                tau_flat: r.t_flat * e2,
                tau_star: r.t_star * e2,
                excursions: r.excursions.clone(),
                d_k: r.d_k,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordExport {
    pub k: i64,
    pub t_hash: f64,
    #[serde(with = "serde_time")]
    pub t_flat: f64,
    #[serde(with = "serde_time")]
    pub t_star: f64,
    pub tau_hash: f64,
    #[serde(with = "serde_time")]
    pub tau_flat: f64,
    #[serde(with = "serde_time")]
    pub tau_star: f64,
    pub excursions: Vec<(f64, f64)>,
    pub d_k: Option<f64>,
}

/// Incremental consumer of the event stream.
#[derive(Debug, Clone)]
pub struct Tracker {
    k: i64,
    k_initial: i64,
    last_t: f64,
    inside: bool,
    t_hash: Option<f64>,
    visits: Vec<(f64, f64)>,
    open_enter: f64,
    records: Vec<TransitionRecord>,
}

impl Tracker {
    pub fn new(k_initial: i64) -> Self {
        Self {
            k: k_initial,
            k_initial,
            last_t: f64::NEG_INFINITY,
            inside: false,
            t_hash: None,
            visits: Vec::new(),
            open_enter: 0.0,
            records: Vec::new(),
        }
    }

    pub fn interface(&self) -> i64 {
        self.k
    }

    pub fn inside(&self) -> bool {
        self.inside
    }

    pub fn push(&mut self, ev: SpinodalEvent) -> Result<()> {
        if ev.t < self.last_t {
            return Err(Error::Events(format!("event at t={} after t={}", ev.t, self.last_t)));
        }
        self.last_t = ev.t;
        if ev.site != self.k {
            return Err(Error::Events(format!(
                "{:?} at site {} while the interface sits at {} (t={})",
                ev.kind, ev.site, self.k, ev.t
            )));
        }
        match ev.kind {
            EventKind::Enter => {
                if self.inside {
                    return Err(Error::Events(format!("double entrance at site {}", ev.site)));
                }
                self.inside = true;
                self.open_enter = ev.t;
                self.t_hash.get_or_insert(ev.t);
            }
            EventKind::ExitDown => {
                if !self.inside {
                    return Err(Error::Events(format!("exit without entrance at site {}", ev.site)));
                }
                self.inside = false;
                self.visits.push((self.open_enter, ev.t));
            }
            EventKind::ExitUp => {
                if !self.inside {
                    return Err(Error::Events(format!("transition without entrance at site {}", ev.site)));
                }
                self.inside = false;
                self.records.push(TransitionRecord {
                    k: self.k,
                    t_hash: self.t_hash.take().unwrap_or(self.open_enter),
                    t_flat: self.open_enter,
                    t_star: ev.t,
                    excursions: std::mem::take(&mut self.visits),
                    d_k: None,
                });
                self.k += 1;
            }
            EventKind::ReenterFromPlus => {
                return Err(Error::Events(format!("site {} re-entered the spinodal region from the plus phase", ev.site)));
            }
        }
        Ok(())
    }

    pub fn finish(mut self, t_fin: f64, epsilon: f64) -> TransitionLog {
        if let Some(t_hash) = self.t_hash {
            let t_flat = if self.inside { self.open_enter } else { f64::INFINITY };
            self.records.push(TransitionRecord {
                k: self.k,
                t_hash,
                t_flat,
                t_star: f64::INFINITY,
                excursions: self.visits,
                d_k: None,
            });
        }
        TransitionLog { records: self.records, epsilon, t_fin, k_initial: self.k_initial }
    }
}

pub fn track(events: &[SpinodalEvent], k_initial: i64, t_fin: f64, epsilon: f64) -> Result<TransitionLog> {
    let mut tr = Tracker::new(k_initial);
    for ev in events {
        tr.push(*ev)?;
    }
    Ok(tr.finish(t_fin, epsilon))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaitingEntry {
    pub epsilon: f64,
    pub transitions: usize,
    pub min_waiting: Option<f64>,
    pub applicable: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaitingReport {
    pub entries: Vec<WaitingEntry>,
    /// Least-squares slope of `ln(min_waiting)` against `ln(ε)`.
    pub slope: Option<f64>,
    /// Largest `c` with `min_waiting ≥ c·p*/(βε)` on every applicable run.
    pub c_emp: Option<f64>,
    pub warnings: Vec<String>,
}

/// Waiting-time scaling over runs with identical macroscopic data (`b = βε`).
pub fn waiting_scaling_report(logs: &[TransitionLog], beta: f64, p_star: f64) -> WaitingReport {
    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    for log in logs {
        let done = log.records.iter().filter(|r| r.completed()).count();
        let mw = log.min_waiting();
        let applicable = done >= 2 && mw.is_some();
        if !applicable {
            warnings.push(format!("epsilon={}: fewer than 2 completed transitions, excluded", log.epsilon));
        }
        entries.push(WaitingEntry { epsilon: log.epsilon, transitions: done, min_waiting: mw, applicable });
    }
    let pts: Vec<(f64, f64)> = entries
        .iter()
        .filter(|e| e.applicable)
        .map(|e| (e.epsilon.ln(), e.min_waiting.unwrap().ln()))
        .collect();
    let slope = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    let c_emp = entries
        .iter()
        .filter(|e| e.applicable)
        .map(|e| e.min_waiting.unwrap() * beta * e.epsilon / p_star)
        .reduce(f64::min);
    WaitingReport { entries, slope, c_emp, warnings }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
