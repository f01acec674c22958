#![allow(dead_code)]

/// Brute-force oracle for the heat kernel: RK4 on ġ = Δg over |j| <= radius with
/// zero outside, started from a unit delta. Returns g_j(t) for the listed times,
/// indexed by j + radius.
pub fn rk4_kernel(radius: usize, dt: f64, times: &[f64]) -> Vec<Vec<f64>> {
    let n = 2 * radius + 1;
    let lap = |g: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let l = if i > 0 { g[i - 1] } else { 0.0 };
            let r = if i + 1 < n { g[i + 1] } else { 0.0 };
            out[i] = l + r - 2.0 * g[i];
        }
    };
    let mut g = vec![0.0; n];
    g[radius] = 1.0;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut t = 0.0;
    let mut out = Vec::new();
    for &target in times {
        let steps = ((target - t) / dt).round() as usize;
        for _ in 0..steps {
            lap(&g, &mut k1);
            for i in 0..n {
                tmp[i] = g[i] + 0.5 * dt * k1[i];
            }
            lap(&tmp, &mut k2);
            for i in 0..n {
                tmp[i] = g[i] + 0.5 * dt * k2[i];
            }
            lap(&tmp, &mut k3);
            for i in 0..n {
                tmp[i] = g[i] + dt * k3[i];
            }
            lap(&tmp, &mut k4);
            for i in 0..n {
                g[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        t += steps as f64 * dt;
        out.push(g.clone());
    }
    out
}
