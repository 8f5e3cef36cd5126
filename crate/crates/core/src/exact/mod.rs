//! Exact orthogonal polynomials for the weight `e^{-N V(x)}`.
//!
//! Everything here is carried at a configurable multiprecision working
//! precision. Monic polynomials `p_n`, squared norms `h_n` and wave functions
//! `ψ_n = p_n e^{-N V/2} / √h_n` are produced from a Stieltjes recurrence
//! computed on a discretized weight.

mod oracle;
mod quadrature;

use nalgebra::{DMatrix, SymmetricEigen};
use rug::Float;

pub use oracle::{heine_oracle, tensor_log_partition};
pub use quadrature::{bits_for_digits, build_weight_quadrature, QuadratureRule};

use crate::error::{Error, Result};
use crate::potential::Potential;

/// Three-term recurrence `p_{n+1} = (x - a_n) p_n - b_n p_{n-1}` with norms `h_n`.
#[derive(Debug, Clone)]
pub struct RecurrenceTable {
    a: Vec<Float>,
    /// `b[0]` is unused and zero.
    b: Vec<Float>,
    h: Vec<Float>,
    prec: u32,
}

impl RecurrenceTable {
    pub fn n_max(&self) -> usize {
        self.a.len() - 1
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn a(&self, n: usize) -> f64 {
        self.a[n].to_f64()
    }

    /// `b_n = h_n / h_{n-1}` for `n >= 1`.
    pub fn b(&self, n: usize) -> f64 {
        self.b[n].to_f64()
    }

    pub fn log_h(&self, n: usize) -> f64 {
        self.h[n].clone().ln().to_f64()
    }

    pub fn a_mp(&self, n: usize) -> &Float {
        &self.a[n]
    }

    pub fn b_mp(&self, n: usize) -> &Float {
        &self.b[n]
    }

    pub fn h_mp(&self, n: usize) -> &Float {
        &self.h[n]
    }

    /// Rows `(n, a_n, b_n, ln h_n)`; `b_0` is reported as 0.
    pub fn rows(&self) -> Vec<(usize, f64, f64, f64)> {
        (0..=self.n_max())
            .map(|n| (n, self.a(n), self.b(n), self.log_h(n)))
            .collect()
    }

    /// Largest relative deviation of `h_n` from `h_0 ∏_{k<=n} b_k`.
    pub fn norm_consistency(&self) -> f64 {
        let mut prod = self.h[0].clone();
        let mut worst: f64 = 0.0;
        for n in 1..=self.n_max() {
            prod *= &self.b[n];
            let d = Float::with_val(self.prec, &prod - &self.h[n]) / &self.h[n];
            worst = worst.max(d.abs().to_f64());
        }
        worst
    }

    /// Zeros of `p_n`, ascending, as eigenvalues of the truncated Jacobi matrix.
    pub fn zeros(&self, n: usize) -> Vec<f64> {
        if n == 0 {
            return Vec::new();
        }
        let mut j = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            j[(i, i)] = self.a(i);
            if i + 1 < n {
                let off = self.b(i + 1).sqrt();
                j[(i, i + 1)] = off;
                j[(i + 1, i)] = off;
            }
        }
        let mut z: Vec<f64> = SymmetricEigen::new(j).eigenvalues.iter().copied().collect();
        z.sort_by(f64::total_cmp);
        z
    }
}

/// Discretized Stieltjes procedure on `rule`, up to index `n_max`.
pub fn compute_recurrence(rule: &QuadratureRule, n_max: usize) -> Result<RecurrenceTable> {
    let prec = rule.prec();
    let scale = rule.scale();
    let m = rule.len();
    let zero = Float::with_val(prec, 0);
    let mut prev = vec![zero.clone(); m];
    let mut cur = vec![Float::with_val(prec, 1); m];
    let mut a = Vec::with_capacity(n_max + 1);
    let mut b = vec![zero.clone()];
    let mut h_raw: Vec<Float> = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut hn = zero.clone();
        let mut xn = zero.clone();
        for i in 0..m {
            let wp2 = Float::with_val(prec, &cur[i] * &cur[i]) * &rule.weights[i];
            xn += Float::with_val(prec, &wp2 * &rule.nodes[i]);
            hn += wp2;
        }
        if n > 0 {
            let bn = Float::with_val(prec, &hn / &h_raw[n - 1]);
            if !(bn.is_sign_positive() && !bn.is_zero()) || !bn.is_finite() {
                return Err(Error::Positivity {
                    index: n,
                    value: bn.to_f64(),
                });
            }
            b.push(bn);
        }
        let an = Float::with_val(prec, &xn / &hn);
        if n < n_max {
            let bn = &b[n];
            for i in 0..m {
                let next = Float::with_val(prec, &rule.nodes[i] - &an) * &cur[i]
                    - Float::with_val(prec, bn * &prev[i]);
                prev[i] = std::mem::replace(&mut cur[i], next);
            }
        }
        a.push(an);
        h_raw.push(hn);
    }
    let h = h_raw.into_iter().map(|x| x * &scale).collect();
    Ok(RecurrenceTable { a, b, h, prec })
}

/// One evaluation of `p_n` and `ψ_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveSample {
    pub n: usize,
    pub xi: f64,
    pub psi: f64,
    pub p_value: f64,
    pub log_abs_p: f64,
    pub sign_p: i8,
}

/// Exact engine: the weight, its recurrence table, and evaluators on top.
#[derive(Debug, Clone)]
pub struct ExactEngine {
    pot: Potential,
    n_weight: usize,
    rule: QuadratureRule,
    table: RecurrenceTable,
}

impl ExactEngine {
    /// Table for the weight `e^{-N V}` covering indices `0..=n_max`.
    pub fn new(pot: &Potential, n_weight: usize, n_max: usize, digits: u32) -> Result<Self> {
        if n_weight == 0 {
            return Err(Error::InvalidArgument("N must be >= 1".into()));
        }
        let rule = build_weight_quadrature(pot, n_weight as f64, 2 * n_max + 2, digits)?;
        let table = compute_recurrence(&rule, n_max)?;
        Ok(ExactEngine {
            pot: pot.clone(),
            n_weight,
            rule,
            table,
        })
    }

    pub fn potential(&self) -> &Potential {
        &self.pot
    }

    pub fn n_weight(&self) -> usize {
        self.n_weight
    }

    pub fn table(&self) -> &RecurrenceTable {
        &self.table
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    fn prec(&self) -> u32 {
        self.table.prec
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n > self.table.n_max() {
            return Err(Error::InvalidArgument(format!(
                "index {n} beyond table size {}",
                self.table.n_max()
            )));
        }
        Ok(())
    }

    /// `p_0(x), ..., p_n(x)` at working precision.
    pub fn monic_values(&self, n: usize, x: &Float) -> Vec<Float> {
        let prec = self.prec();
        let mut out = Vec::with_capacity(n + 1);
        out.push(Float::with_val(prec, 1));
        if n == 0 {
            return out;
        }
        out.push(Float::with_val(prec, x - &self.table.a[0]));
        for k in 1..n {
            let next = Float::with_val(prec, x - &self.table.a[k]) * &out[k]
                - Float::with_val(prec, &self.table.b[k] * &out[k - 1]);
            out.push(next);
        }
        out
    }

    /// `p'_0(x), ..., p'_n(x)` at working precision.
    fn monic_derivatives(&self, n: usize, x: &Float, values: &[Float]) -> Vec<Float> {
        let prec = self.prec();
        let mut out = Vec::with_capacity(n + 1);
        out.push(Float::with_val(prec, 0));
        if n == 0 {
            return out;
        }
        out.push(Float::with_val(prec, 1));
        for k in 1..n {
            let next = Float::with_val(prec, x - &self.table.a[k]) * &out[k]
                - Float::with_val(prec, &self.table.b[k] * &out[k - 1])
                + &values[k];
            out.push(next);
        }
        out
    }

    /// `e^{-N V(x)/2}` at working precision.
    fn half_weight(&self, x: &Float) -> Float {
        (self.pot.eval_mp(x) * (-(self.n_weight as f64) / 2.0)).exp()
    }

    /// `ψ_0(x), ..., ψ_n(x)` at working precision.
    pub fn wave_values(&self, n: usize, x: f64) -> Result<Vec<Float>> {
        self.check_index(n)?;
        let xm = Float::with_val(self.prec(), x);
        let w = self.half_weight(&xm);
        Ok(self
            .monic_values(n, &xm)
            .into_iter()
            .zip(&self.table.h)
            .map(|(p, h)| p * &w / Float::with_val(self.prec(), h.sqrt_ref()))
            .collect())
    }

    pub fn eval_wave(&self, n: usize, xi: f64) -> Result<WaveSample> {
        self.check_index(n)?;
        let prec = self.prec();
        let xm = Float::with_val(prec, xi);
        let p = self.monic_values(n, &xm).pop().expect("nonempty");
        let psi = Float::with_val(prec, &p * self.half_weight(&xm))
            / Float::with_val(prec, self.table.h[n].sqrt_ref());
        let sign_p = if p.is_zero() {
            0
        } else if p.is_sign_negative() {
            -1
        } else {
            1
        };
        let log_abs_p = if p.is_zero() {
            f64::NEG_INFINITY
        } else {
            Float::with_val(prec, p.abs_ref()).ln().to_f64()
        };
        Ok(WaveSample {
            n,
            xi,
            psi: psi.to_f64(),
            p_value: p.to_f64(),
            log_abs_p,
            sign_p,
        })
    }

    /// `γ_N` of the monic Christoffel–Darboux form: `1/h_{N-1}`.
    pub fn cd_gamma(&self) -> f64 {
        Float::with_val(self.prec(), self.table.h[self.n_weight - 1].recip_ref()).to_f64()
    }

    /// Christoffel–Darboux kernel `K_N(x, y) = Σ_{n<N} ψ_n(x) ψ_n(y)`.
    ///
    /// Uses the closed form `(p_N(x) p_{N-1}(y) - p_N(y) p_{N-1}(x)) / (h_{N-1} (x - y))`
    /// times the weights; for `|x - y|` below `switch` the difference quotient
    /// is built from divided differences of the recurrence instead, which is
    /// free of cancellation and reduces to the derivative form at `x = y`.
    pub fn kernel_mp(&self, x: f64, y: f64, switch: f64) -> Result<Float> {
        let nn = self.n_weight;
        self.check_index(nn)?;
        let prec = self.prec();
        let xm = Float::with_val(prec, x);
        let ym = Float::with_val(prec, y);
        let px = self.monic_values(nn, &xm);
        let py = self.monic_values(nn, &ym);
        let bracket = if (x - y).abs() >= switch {
            let num = Float::with_val(prec, &px[nn] * &py[nn - 1])
                - Float::with_val(prec, &py[nn] * &px[nn - 1]);
            num / Float::with_val(prec, &xm - &ym)
        } else {
            let d = self.divided_differences(nn, &xm, &ym, &py, &px);
            Float::with_val(prec, &py[nn - 1] * &d[nn])
                - Float::with_val(prec, &py[nn] * &d[nn - 1])
        };
        let w = self.half_weight(&xm) * self.half_weight(&ym);
        Ok(bracket * w / &self.table.h[nn - 1])
    }

    /// `D_k = (p_k(x) - p_k(y)) / (x - y)`, with `D_k = p'_k(x)` when `x = y`.
    fn divided_differences(
        &self,
        n: usize,
        x: &Float,
        y: &Float,
        py: &[Float],
        px: &[Float],
    ) -> Vec<Float> {
        let prec = self.prec();
        if x == y {
            return self.monic_derivatives(n, x, px);
        }
        let mut d = Vec::with_capacity(n + 1);
        d.push(Float::with_val(prec, 0));
        d.push(Float::with_val(prec, 1));
        for k in 1..n {
            let next = Float::with_val(prec, x - &self.table.a[k]) * &d[k]
                - Float::with_val(prec, &self.table.b[k] * &d[k - 1])
                + &py[k];
            d.push(next);
        }
        d
    }

    /// Kernel with the default confluent switch `|x - y| < 1e-6·scale`.
    pub fn kernel_cd(&self, x: f64, y: f64, scale: f64) -> Result<f64> {
        Ok(self.kernel_mp(x, y, 1e-6 * scale)?.to_f64())
    }

    /// Direct sum `Σ_{n<N} ψ_n(x) ψ_n(y)`.
    pub fn kernel_direct_mp(&self, x: f64, y: f64) -> Result<Float> {
        let nn = self.n_weight;
        let wx = self.wave_values(nn - 1, x)?;
        let wy = self.wave_values(nn - 1, y)?;
        let mut acc = Float::with_val(self.prec(), 0);
        for (a, b) in wx.iter().zip(&wy) {
            acc += Float::with_val(self.prec(), a * b);
        }
        Ok(acc)
    }

    /// `det[K(λ_i, λ_j)]`, the `k`-point correlation function.
    pub fn correlation(&self, points: &[f64], scale: f64) -> Result<f64> {
        let k = points.len();
        if k == 0 || k > self.n_weight {
            return Err(Error::InvalidArgument(format!(
                "correlation needs 1..={} points, got {k}",
                self.n_weight
            )));
        }
        let mut m = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let v = self.kernel_cd(points[i], points[j], scale)?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(m.determinant())
    }

    /// `ln Z_N = ln N! + Σ_{n<N} ln h_n`.
    pub fn log_partition(&self) -> Result<f64> {
        let nn = self.n_weight;
        self.check_index(nn - 1)?;
        let prec = self.prec();
        let mut acc = Float::with_val(prec, 0);
        for n in 0..nn {
            acc += Float::with_val(prec, self.table.h[n].ln_ref());
            acc += Float::with_val(prec, (n + 1) as u32).ln();
        }
        Ok(acc.to_f64())
    }

    /// `max |∫ψ_nψ_m - δ_nm|` over `n, m <= n_max`, measured on `rule`.
    pub fn orthonormality_residual(&self, rule: &QuadratureRule) -> f64 {
        let n = self.table.n_max();
        let prec = self.prec();
        let scale = rule.scale();
        let mut gram = vec![Float::with_val(prec, 0); (n + 1) * (n + 1)];
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let p = self.monic_values(n, x);
            for i in 0..=n {
                let wi = Float::with_val(prec, &p[i] * w);
                for j in i..=n {
                    gram[i * (n + 1) + j] += Float::with_val(prec, &wi * &p[j]);
                }
            }
        }
        let mut worst: f64 = 0.0;
        for i in 0..=n {
            for j in i..=n {
                let norm = Float::with_val(prec, &self.table.h[i] * &self.table.h[j]).sqrt();
                let mut v = Float::with_val(prec, &gram[i * (n + 1) + j] * &scale) / norm;
                if i == j {
                    v -= 1;
                }
                worst = worst.max(v.abs().to_f64());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(n: usize, n_max: usize) -> ExactEngine {
        ExactEngine::new(&Potential::gaussian(), n, n_max, 40).unwrap()
    }

    #[test]
    fn hermite_recurrence() {
        let e = gaussian(1, 12);
        let t = e.table();
        for n in 0..=12 {
            assert!(t.a(n).abs() < 1e-30);
        }
        for n in 1..=12 {
            assert!((t.b(n) - n as f64).abs() < 1e-13 * n as f64);
        }
        let h0 = (2.0 * std::f64::consts::PI).sqrt();
        assert!((t.log_h(0) - h0.ln()).abs() < 1e-14);
        assert!(t.norm_consistency() < 1e-30);
    }

    #[test]
    fn wave_samples() {
        let e = gaussian(1, 4);
        let s = e.eval_wave(3, 1.0).unwrap();
        assert!((s.p_value + 2.0).abs() < 1e-14);
        assert_eq!(s.sign_p, -1);
        assert!((s.log_abs_p - 2f64.ln()).abs() < 1e-14);
        let s0 = e.eval_wave(0, 0.3).unwrap();
        let expect = (-0.0225f64).exp() / (2.0 * std::f64::consts::PI).sqrt().sqrt();
        assert!((s0.psi - expect).abs() < 1e-15, "{} {}", s0.psi, expect);
        let s1 = e.eval_wave(1, 0.7).unwrap();
        assert!((s1.p_value - 0.7).abs() < 1e-15);
        assert!(e.eval_wave(5, 0.0).is_err());
    }

    #[test]
    fn kernel_forms_agree() {
        let e = gaussian(8, 9);
        let cd = e.kernel_mp(0.3, -0.2, 1e-6).unwrap();
        let direct = e.kernel_direct_mp(0.3, -0.2).unwrap();
        let rel = Float::with_val(200, &cd - &direct) / &direct;
        assert!(rel.abs().to_f64() < 1e-30);
        // Near-confluent and confluent branches.
        for (x, y) in [(0.4, 0.4), (0.4, 0.4 + 1e-9)] {
            let k = e.kernel_mp(x, y, 1e-6).unwrap();
            let d = e.kernel_direct_mp(x, y).unwrap();
            let rel = Float::with_val(200, &k - &d) / &d;
            assert!(rel.abs().to_f64() < 1e-30, "{x} {y}");
        }
    }

    #[test]
    fn single_term_kernel() {
        let e = gaussian(1, 2);
        let k = e.kernel_cd(0.5, -1.0, 4.0).unwrap();
        let w = e.wave_values(0, 0.5).unwrap()[0].to_f64()
            * e.wave_values(0, -1.0).unwrap()[0].to_f64();
        assert!((k - w).abs() < 1e-15 * w);
    }

    #[test]
    fn correlation_determinants() {
        let e = gaussian(2, 3);
        let (l1, l2) = (0.3, -0.8);
        let k11 = e.kernel_cd(l1, l1, 4.0).unwrap();
        let k22 = e.kernel_cd(l2, l2, 4.0).unwrap();
        let k12 = e.kernel_cd(l1, l2, 4.0).unwrap();
        let det = e.correlation(&[l1, l2], 4.0).unwrap();
        assert!((det - (k11 * k22 - k12 * k12)).abs() < 1e-14);
        let dup = e.correlation(&[l1, l1], 4.0).unwrap();
        assert!(dup.abs() < 1e-15 * k11 * k11);
        assert!(e.correlation(&[0.1], 4.0).unwrap() > 0.0);
    }

    #[test]
    fn zeros_of_hermite() {
        let e = gaussian(1, 4);
        let z = e.table().zeros(3);
        let r = 3f64.sqrt();
        assert!((z[0] + r).abs() < 1e-12 && z[1].abs() < 1e-12 && (z[2] - r).abs() < 1e-12);
    }

    #[test]
    fn orthonormal_on_refined_rule() {
        let e = gaussian(10, 12);
        let finer = e.rule().refined(e.potential());
        assert!(e.orthonormality_residual(&finer) < 1e-30);
    }
}
