//! Discrete heat kernel `g_j(t) = e^{-2t} I_|j|(2t)` and the heat semigroup on ℤ
//! and on a Neumann interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Kernel values `g_d(t)` for `0 <= d <= radius`; negative offsets follow by symmetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelEval {
    pub t: f64,
    pub values: Vec<f64>,
    /// Mass carried by `|d| > radius`.
    pub tail_bound: f64,
}

impl KernelEval {
    pub fn radius(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, d: i64) -> f64 {
        self.values.get(d.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    pub fn window_mass(&self) -> f64 {
        self.values[0] + 2.0 * self.values[1..].iter().sum::<f64>()
    }
}

/// Truncation radius `ceil(2 sqrt(t ln(1/tol))) + 10`.
pub fn window_radius(t: f64, tol: f64) -> usize {
    (2.0 * (t * (1.0 / tol).ln()).sqrt()).ceil() as usize + 10
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("kernel time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// `g_d(t)` for `d = 0..=dmax` together with the mass beyond `dmax`.
pub fn kernel_values(t: f64, dmax: usize) -> Result<KernelEval> {
    check_time(t)?;
    let mut values = vec![0.0; dmax + 1];
    if t == 0.0 {
        values[0] = 1.0;
        return Ok(KernelEval { t, values, tail_bound: 0.0 });
    }
    let x = 2.0 * t;
    if x < 1e-3 {
        return Ok(series(t, dmax));
    }
    // Miller's backward recurrence I_{n-1} = I_{n+1} + (2n/x) I_n, normalised by
    // I_0 + 2 sum I_n = e^x, which fuses the e^{-x} factor into the normalisation.
    let start = dmax.max((10.0 * x.sqrt() + 40.0) as usize) + 10;
    let mut above = 0.0_f64;
    let mut cur = 1e-280_f64;
    let mut total = 0.0_f64;
    let mut tail = 0.0_f64;
    for n in (1..=start).rev() {
        if n <= dmax {
            values[n] = cur;
        } else {
            tail += cur;
        }
        total += 2.0 * cur;
        let below = above + (2.0 * n as f64 / x) * cur;
        above = cur;
        cur = below;
        if cur > 1e250 {
            let s = 1e-250;
            cur *= s;
            above *= s;
            total *= s;
            tail *= s;
            for v in values.iter_mut().skip(n.saturating_sub(1)) {
                *v *= s;
            }
        }
    }
    values[0] = cur;
    total += cur;
    let inv = 1.0 / total;
    for v in &mut values {
        *v *= inv;
    }
    Ok(KernelEval { t, values, tail_bound: 2.0 * tail * inv })
}

fn series(t: f64, dmax: usize) -> KernelEval {
    // e^{-x} I_n(x) = e^{-x} sum_k (x/2)^{2k+n} / (k! (n+k)!), with x/2 = t.
    let e = (-2.0 * t).exp();
    let mut values = vec![0.0; dmax + 1];
    let mut lead = 1.0; // t^n / n!
    for (n, v) in values.iter_mut().enumerate() {
        if n > 0 {
            lead *= t / n as f64;
        }
        if lead == 0.0 {
            break;
        }
        let mut term = lead;
        let mut s = 0.0;
        for k in 0..20 {
            s += term;
            term *= t * t / ((k + 1) as f64 * (n + k + 1) as f64);
            if term < 1e-18 * s {
                break;
            }
        }
        *v = e * s;
    }
    let mass = values[0] + 2.0 * values[1..].iter().sum::<f64>();
    KernelEval { t, values, tail_bound: (1.0 - mass).max(0.0) }
}

pub fn heat_kernel(j: i64, t: f64) -> Result<f64> {
    let d = j.unsigned_abs() as usize;
    Ok(kernel_values(t, d)?.values[d])
}

/// Kernel truncated at the radius prescribed by `tol`, with the tail verified.
pub fn kernel_eval(t: f64, tol: f64) -> Result<KernelEval> {
    let r = window_radius(t, tol);
    let k = kernel_values(t, r)?;
    if k.tail_bound >= tol {
        return Err(Error::Domain(format!(
            "kernel tail {} exceeds tolerance {tol} at t={t}",
            k.tail_bound
        )));
    }
    Ok(k)
}

/// Sequence on the window `start .. start + values.len()` of ℤ, zero outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowField {
    pub start: i64,
    pub values: Vec<f64>,
}

impl WindowField {
    pub fn new(start: i64, values: Vec<f64>) -> Self {
        Self { start, values }
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Heat flow on ℤ of a field given on a window. The window must leave room for
/// the kernel to spread, otherwise the required window length is reported.
pub fn semigroup_apply(field: &WindowField, t: f64, tol: f64) -> Result<WindowField> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(field.clone());
    }
    let len = field.values.len();
    let first = field.values.iter().position(|v| *v != 0.0);
    let Some(first) = first else {
        return Ok(field.clone());
    };
    let last = field.values.iter().rposition(|v| *v != 0.0).unwrap();
    let r = window_radius(t, tol);
    if first < r || len - 1 - last < r {
        return Err(Error::WindowTooSmall { required: last - first + 1 + 2 * r, available: len });
    }
    let k = kernel_eval(t, tol)?;
    let mut out = vec![0.0; len];
    for (i, o) in out.iter_mut().enumerate() {
        let lo = first.max(i.saturating_sub(r));
        let hi = last.min(i + r);
        let mut s = 0.0;
        for l in lo..=hi {
            s += k.values[i.abs_diff(l)] * field.values[l];
        }
        *o = s;
    }
    Ok(WindowField { start: field.start, values: out })
}

/// Heat semigroup of the Neumann Laplacian on `n` sites (ghosts `u_0 = u_1`,
/// `u_{n+1} = u_n`), built from the ℤ kernel by the method of images.
#[derive(Debug, Clone)]
pub struct NeumannKernel {
    n: usize,
    t: f64,
    radius: usize,
    /// `folded[m] = sum over d ≡ m (mod 2n) of g_d(t)`.
    folded: Vec<f64>,
    g: Vec<f64>,
}

impl NeumannKernel {
    pub fn new(n: usize, t: f64, tol: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("empty lattice".into()));
        }
        let k = kernel_eval(t, tol)?;
        let period = 2 * n;
        let mut folded = vec![0.0; period];
        let r = k.radius();
        folded[0] += k.values[0];
        for d in 1..=r {
            let v = k.values[d];
            if v == 0.0 {
                break;
            }
            folded[d % period] += v;
            folded[(period - d % period) % period] += v;
        }
        Ok(Self { n, t, radius: r, folded, g: k.values })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Reach of the kernel in sites (saturates at the lattice size).
    pub fn reach(&self) -> usize {
        self.radius.min(self.n)
    }

    /// Transition weight from position `l` to position `i` (both 0-based).
    #[inline]
    pub fn weight(&self, i: usize, l: usize) -> f64 {
        let p = 2 * self.n;
        let a = (i + p - l) % p;
        let b = (i + l + 1) % p;
        self.folded[a] + self.folded[b]
    }

    pub fn apply(&self, field: &[f64]) -> Vec<f64> {
        assert_eq!(field.len(), self.n);
        let n = self.n;
        let reflect = |m: i64| {
            let m = m.rem_euclid(2 * n as i64) as usize;
            if m < n { field[m] } else { field[2 * n - 1 - m] }
        };
        if self.radius < n {
            // Reflected extension, then a plain symmetric convolution.
            let r = self.radius;
            let ext: Vec<f64> = (0..n + 2 * r).map(|m| reflect(m as i64 - r as i64)).collect();
            (0..n)
                .map(|i| {
                    let c = i + r;
                    let mut s = self.g[0] * ext[c];
                    for d in 1..=r {
                        s += self.g[d] * (ext[c - d] + ext[c + d]);
                    }
                    s
                })
                .collect()
        } else {
            let ext: Vec<f64> = (0..3 * n).map(|m| reflect(m as i64)).collect();
            (0..n).map(|i| self.folded.iter().zip(&ext[i..i + 2 * n]).map(|(a, b)| a * b).sum()).collect()
        }
    }

    /// Value at position `i` of the flow of a field supported on `start..start+values.len()`.
    pub fn apply_at(&self, values: &[f64], start: usize, i: usize) -> f64 {
        let r = self.reach();
        let lo = start.max(i.saturating_sub(r));
        let hi = (start + values.len()).min(i + r + 1);
        let mut s = 0.0;
        for l in lo..hi {
            s += self.weight(i, l) * values[l - start];
        }
        s
    }

    /// Flow of a localised field; the output is restricted to the kernel's reach.
    pub fn apply_local(&self, values: &[f64], start: usize) -> (usize, Vec<f64>) {
        if values.is_empty() {
            return (start, Vec::new());
        }
        let r = self.reach();
        let lo = start.saturating_sub(r);
        let hi = (start + values.len() + r).min(self.n);
        (lo, (lo..hi).map(|i| self.apply_at(values, start, i)).collect())
    }
}

/// Neumann Laplacian with ghost copies at both ends.
pub fn neumann_laplacian(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    (0..n)
        .map(|i| {
            let l = if i == 0 { p[0] } else { p[i - 1] };
            let r = if i + 1 == n { p[n - 1] } else { p[i + 1] };
            l + r - 2.0 * p[i]
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFit {
    pub law: String,
    pub exponent: f64,
    pub constant: f64,
    /// Relative spread `(max − min)/max` of the scaled quantity over `t >= 1`.
    pub spread: f64,
    pub nonincreasing_after_one: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReport {
    pub times: Vec<f64>,
    pub fits: Vec<DecayFit>,
}

/// Empirical constants for `sup g ≤ C(1+t)^{-1/2}`, `|ġ_0| ≤ C(1+t)^{-3/2}` and
/// `Σ|∇g|² ≤ C(1+t)^{-3/2}` on a log grid over `[0, 1e4]`.
pub fn kernel_decay_constants() -> DecayReport {
    let mut times = vec![0.0];
    for i in 0..=60 {
        times.push(10f64.powf(-2.0 + 6.0 * i as f64 / 60.0));
    }
    let mut sup = Vec::new();
    let mut dot = Vec::new();
    let mut grad = Vec::new();
    for &t in &times {
        let k = kernel_values(t, window_radius(t, 1e-16)).expect("valid time");
        let g = &k.values;
        sup.push(g[0] * (1.0 + t).sqrt());
        let g1 = g.get(1).copied().unwrap_or(0.0);
        dot.push(2.0 * (g[0] - g1) * (1.0 + t).powf(1.5));
        let mut s = 0.0;
        for d in 0..g.len() {
            let next = g.get(d + 1).copied().unwrap_or(0.0);
            s += 2.0 * (g[d] - next).powi(2);
        }
        grad.push(s * (1.0 + t).powf(1.5));
    }
    let fit = |law: &str, exponent: f64, v: &[f64]| {
        let constant = v.iter().cloned().fold(0.0, f64::max);
        let late: Vec<f64> = times.iter().zip(v).filter(|(t, _)| **t >= 1.0).map(|(_, x)| *x).collect();
        let hi = late.iter().cloned().fold(f64::MIN, f64::max);
        let lo = late.iter().cloned().fold(f64::MAX, f64::min);
        let nonincreasing = late.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
        DecayFit { law: law.into(), exponent, constant, spread: (hi - lo) / hi, nonincreasing_after_one: nonincreasing }
    };
    let fits = vec![
        fit("sup_g", -0.5, &sup),
        fit("g0_dot", -1.5, &dot),
        fit("grad_l2", -1.5, &grad),
    ];
    DecayReport { times, fits }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_delta() {
        assert_eq!(heat_kernel(0, 0.0).unwrap(), 1.0);
        assert_eq!(heat_kernel(3, 0.0).unwrap(), 0.0);
        assert!(heat_kernel(0, -1.0).is_err());
    }

    #[test]
    fn mass_and_symmetry() {
        for t in [1e-5, 0.1, 1.0, 100.0, 1e4, 1e6] {
            let k = kernel_eval(t, DEFAULT_TOLERANCE).unwrap();
            assert!((k.window_mass() + k.tail_bound - 1.0).abs() < 1e-12, "t={t}");
            assert!(k.values.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn large_time_matches_gaussian() {
        let t = 1e6;
        let g0 = heat_kernel(0, t).unwrap();
        let approx = 1.0 / (4.0 * std::f64::consts::PI * t).sqrt();
        assert!((g0 / approx - 1.0).abs() < 1e-6);
    }

    #[test]
    fn window_error_reports_size() {
        let f = WindowField::new(0, vec![0.0, 1.0, 0.0]);
        match semigroup_apply(&f, 1.0, 1e-10) {
            Err(Error::WindowTooSmall { required, .. }) => assert!(required > 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn neumann_constant_and_mass() {
        for t in [0.5, 30.0, 5000.0] {
            let nk = NeumannKernel::new(40, t, 1e-12).unwrap();
            let out = nk.apply(&vec![0.7; 40]);
            assert!(out.iter().all(|v| (v - 0.7).abs() < 1e-11));
            let mut delta = vec![0.0; 40];
            delta[3] = 1.0;
            let out = nk.apply(&delta);
            assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn neumann_apply_matches_weights() {
        let n = 30;
        let f: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        for t in [0.3, 4.0, 900.0] {
            let nk = NeumannKernel::new(n, t, 1e-12).unwrap();
            let fast = nk.apply(&f);
            for i in 0..n {
                assert!((fast[i] - nk.apply_at(&f, 0, i)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn neumann_matches_explicit_stepping() {
        let n = 12;
        let mut f: Vec<f64> = (0..n).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let f0 = f.clone();
        let dt = 1e-4;
        let steps = 20000;
        for _ in 0..steps {
            let lap = neumann_laplacian(&f);
            for (a, b) in f.iter_mut().zip(&lap) {
                *a += dt * b;
            }
        }
        let exact = NeumannKernel::new(n, dt * steps as f64, 1e-14).unwrap().apply(&f0);
        for (a, b) in f.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-3);
        }
    }
}
