//! Direct low-dimensional integrals over the eigenvalue gas, used to check the
//! recurrence-based quantities at tiny sizes.

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quad::legendre_rule;

/// Composite Gauss–Legendre rule for `e^{-N(V - V_min)}` on its effective support.
fn weight_rule(pot: &Potential, n_weight: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let (x_min, v_min) = pot.minimum();
    let cutoff = 80.0;
    let mut lo = x_min;
    let mut step = 0.01;
    while n_weight * (pot.eval(lo) - v_min) < cutoff || step < 1.0 {
        lo -= step;
        step *= 1.5;
    }
    let mut hi = x_min;
    step = 0.01;
    while n_weight * (pot.eval(hi) - v_min) < cutoff || step < 1.0 {
        hi += step;
        step *= 1.5;
    }
    let panels = 12;
    let order = 10;
    let width = (hi - lo) / panels as f64;
    let rule = legendre_rule(order);
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for p in 0..panels {
        let c = lo + width * (p as f64 + 0.5);
        for &(t, w) in rule.iter() {
            let x = c + 0.5 * width * t;
            xs.push(x);
            ws.push(0.5 * width * w * (-n_weight * (pot.eval(x) - v_min)).exp());
        }
    }
    (xs, ws, v_min)
}

/// Visits every strictly increasing index tuple of length `k` from `0..m`.
fn for_each_combination(m: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k == 0 {
        f(&[]);
        return;
    }
    if m < k {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == m - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        i -= 1;
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Weighted sums `Σ Δ² ∏w` and `Σ Δ² ∏w ∏(ξ - x)` over increasing tuples.
fn gas_sums(xs: &[f64], ws: &[f64], k: usize, xi: f64) -> (f64, f64) {
    let mut z = 0.0;
    let mut zp = 0.0;
    for_each_combination(xs.len(), k, |idx| {
        let mut term = 1.0;
        let mut prod = 1.0;
        for (a, &i) in idx.iter().enumerate() {
            term *= ws[i];
            prod *= xi - xs[i];
            for &j in &idx[..a] {
                let d = xs[i] - xs[j];
                term *= d * d;
            }
        }
        z += term;
        zp += term * prod;
    });
    (z, zp)
}

/// `⟨∏_{i≤n} (ξ - x_i)⟩` over the `n`-particle gas with weight `Δ² ∏ e^{-N V(x_i)}`,
/// by tensor Gauss–Legendre quadrature. Limited to `n <= 4`.
pub fn heine_oracle(pot: &Potential, n_weight: usize, n: usize, xi: f64) -> Result<f64> {
    if n > 4 {
        return Err(Error::InvalidArgument(format!(
            "direct quadrature supports n <= 4, got {n}"
        )));
    }
    if n == 0 {
        return Ok(1.0);
    }
    let (xs, ws, _) = weight_rule(pot, n_weight as f64);
    let (z, zp) = gas_sums(&xs, &ws, n, xi);
    Ok(zp / z)
}

/// `ln ∫ Δ² ∏_{i≤N} e^{-N V(x_i)} dx` by tensor quadrature, `N <= 4`.
pub fn tensor_log_partition(pot: &Potential, n_weight: usize) -> Result<f64> {
    if n_weight == 0 || n_weight > 4 {
        return Err(Error::InvalidArgument(format!(
            "direct quadrature supports 1 <= N <= 4, got {n_weight}"
        )));
    }
    let (xs, ws, v_min) = weight_rule(pot, n_weight as f64);
    let (z, _) = gas_sums(&xs, &ws, n_weight, 0.0);
    // Ordered tuples: N! times the increasing ones.
    let fact: f64 = (1..=n_weight).map(|k| k as f64).product();
    Ok((z * fact).ln() - (n_weight * n_weight) as f64 * v_min)
}
