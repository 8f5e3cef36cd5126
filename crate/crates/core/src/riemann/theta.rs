//! Riemann theta function `θ(u) = Σ_m exp(iπ mᵀτm + 2iπ mᵀu)` and its odd
//! characteristic variant.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Odd half-integer characteristics `(m1, m2) ∈ {0,1}^g × {0,1}^g` with
/// `m1ᵀm2` odd, in lexicographic order of `(m1, m2)`.
pub fn odd_characteristics(g: usize) -> Vec<(Vec<i32>, Vec<i32>)> {
    let bits = |v: usize| {
        (0..g)
            .map(|i| ((v >> (g - 1 - i)) & 1) as i32)
            .collect::<Vec<_>>()
    };
    let mut out = Vec::new();
    for a in 0..1usize << g {
        for b in 0..1usize << g {
            let (m1, m2) = (bits(a), bits(b));
            let dot: i32 = m1.iter().zip(&m2).map(|(x, y)| x * y).sum();
            if dot % 2 == 1 {
                out.push((m1, m2));
            }
        }
    }
    out
}

/// Lattice-sum evaluation of `θ` and `θ_z` for a fixed `τ`.
#[derive(Debug, Clone)]
pub struct ThetaContext {
    tau: DMatrix<Complex64>,
    im_inv: DMatrix<f64>,
    m1: Vec<i32>,
    m2: Vec<i32>,
    radius: i32,
    target_tol: f64,
}

/// `θ(w) = exp(log_scale) · sum`, `∇θ(w) = exp(log_scale) · grad`.
struct Scaled {
    log_scale: Complex64,
    sum: Complex64,
    grad: DVector<Complex64>,
}

impl ThetaContext {
    /// Context with the first odd characteristic whose `θ_z` has a nonzero gradient at 0.
    pub fn new(tau: &DMatrix<Complex64>, target_tol: f64) -> Result<Self> {
        let g = tau.nrows();
        let mut last = None;
        for (m1, m2) in odd_characteristics(g) {
            let ctx = Self::with_characteristic(tau, m1, m2, target_tol)?;
            if ctx.grad_char_zero().iter().any(|z| z.norm() > 1e-6) {
                return Ok(ctx);
            }
            last = Some(ctx);
        }
        last.ok_or_else(|| Error::Theta("no odd characteristic for genus 0".into()))
    }

    pub fn with_characteristic(
        tau: &DMatrix<Complex64>,
        m1: Vec<i32>,
        m2: Vec<i32>,
        target_tol: f64,
    ) -> Result<Self> {
        let g = tau.nrows();
        if m1.len() != g || m2.len() != g {
            return Err(Error::InvalidArgument(
                "characteristic length must equal the genus".into(),
            ));
        }
        let dot: i32 = m1.iter().zip(&m2).map(|(x, y)| x * y).sum();
        if dot % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "characteristic ({m1:?}, {m2:?}) is even"
            )));
        }
        let im = tau.map(|z| z.im);
        let lambda = im.clone().symmetric_eigenvalues().min();
        if !(lambda > 0.0) {
            return Err(Error::Theta(format!(
                "Im τ is not positive definite (λ_min = {lambda:e})"
            )));
        }
        let radius = truncation_radius(lambda, g, target_tol)?;
        Ok(ThetaContext {
            tau: tau.clone(),
            im_inv: im.try_inverse().expect("positive definite"),
            m1,
            m2,
            radius,
            target_tol,
        })
    }

    pub fn genus(&self) -> usize {
        self.tau.nrows()
    }

    pub fn tau(&self) -> &DMatrix<Complex64> {
        &self.tau
    }

    pub fn characteristic(&self) -> (&[i32], &[i32]) {
        (&self.m1, &self.m2)
    }

    pub fn truncation_radius(&self) -> i32 {
        self.radius
    }

    pub fn target_tol(&self) -> f64 {
        self.target_tol
    }

    /// Lattice sum at `w` after moving `Im w` into the fundamental cell.
    fn scaled(&self, w: &DVector<Complex64>) -> Scaled {
        let g = self.genus();
        let y = &self.im_inv * w.map(|z| z.im);
        let k = y.map(f64::round);
        let kc = k.map(|v| Complex64::new(v, 0.0));
        let wr = w - &self.tau * &kc;
        // θ(w_r + τk) = exp(-iπ(2kᵀw_r + kᵀτk)) θ(w_r).
        let ktk = (kc.transpose() * &self.tau * &kc)[(0, 0)];
        let log_scale = -Complex64::i() * PI * (2.0 * (kc.transpose() * &wr)[(0, 0)] + ktk);
        let (sum, grad_r) = self.raw_sum(&wr);
        // ∇θ(w) = e^{log_scale} (∇θ(w_r) - 2πi k θ(w_r)).
        let grad = DVector::from_fn(g, |i, _| grad_r[i] - 2.0 * PI * Complex64::i() * k[i] * sum);
        Scaled {
            log_scale,
            sum,
            grad,
        }
    }

    /// Direct sum over the box `|m_i| ≤ R` and its gradient.
    fn raw_sum(&self, w: &DVector<Complex64>) -> (Complex64, DVector<Complex64>) {
        let g = self.genus();
        let r = self.radius;
        let mut m = vec![-r; g];
        let mut sum = Complex64::new(0.0, 0.0);
        let mut grad = DVector::zeros(g);
        let ipi = Complex64::i() * PI;
        loop {
            let mut quad = Complex64::new(0.0, 0.0);
            let mut lin = Complex64::new(0.0, 0.0);
            for i in 0..g {
                let mi = m[i] as f64;
                lin += mi * w[i];
                for j in 0..g {
                    quad += mi * m[j] as f64 * self.tau[(i, j)];
                }
            }
            let term = (ipi * quad + 2.0 * ipi * lin).exp();
            sum += term;
            for i in 0..g {
                grad[i] += 2.0 * ipi * m[i] as f64 * term;
            }
            // Odometer over the box.
            let mut d = 0;
            loop {
                if d == g {
                    return (sum, grad);
                }
                if m[d] < r {
                    m[d] += 1;
                    break;
                }
                m[d] = -r;
                d += 1;
            }
        }
    }

    /// `ln Σ_m |exp(iπ mᵀτm + 2iπ mᵀu)|`, an upper bound for `ln |θ(u)|` that
    /// stays finite on the theta divisor.
    pub fn ln_theta_bound(&self, u: &DVector<Complex64>) -> f64 {
        let y = &self.im_inv * u.map(|z| z.im);
        let kc = y.map(|v| Complex64::new(v.round(), 0.0));
        let wr = u - &self.tau * &kc;
        let ktk = (kc.transpose() * &self.tau * &kc)[(0, 0)];
        let log_scale = -Complex64::i() * PI * (2.0 * (kc.transpose() * &wr)[(0, 0)] + ktk);
        let g = self.genus();
        let r = self.radius;
        let mut m = vec![-r; g];
        let mut total = 0.0;
        loop {
            let mut e = 0.0;
            for i in 0..g {
                let mi = m[i] as f64;
                e -= 2.0 * PI * mi * wr[i].im;
                for j in 0..g {
                    e -= PI * mi * m[j] as f64 * self.tau[(i, j)].im;
                }
            }
            total += e.exp();
            let mut d = 0;
            loop {
                if d == g {
                    return log_scale.re + total.ln();
                }
                if m[d] < r {
                    m[d] += 1;
                    break;
                }
                m[d] = -r;
                d += 1;
            }
        }
    }

    /// `ln θ(u)` (any branch of the logarithm).
    pub fn ln_theta(&self, u: &DVector<Complex64>) -> Complex64 {
        let s = self.scaled(u);
        s.log_scale + s.sum.ln()
    }

    pub fn theta(&self, u: &DVector<Complex64>) -> Complex64 {
        self.ln_theta(u).exp()
    }

    /// `∇ ln θ(u)`.
    pub fn grad_ln_theta(&self, u: &DVector<Complex64>) -> DVector<Complex64> {
        let s = self.scaled(u);
        s.grad / s.sum
    }

    /// Shift `w = u + z` with `z = m1/2 + τ m2/2`, and the prefactor exponent
    /// `iπ aᵀτa + 2iπ aᵀ(u + m1/2)` with `a = m2/2`.
    fn char_shift(&self, u: &DVector<Complex64>) -> (DVector<Complex64>, Complex64) {
        let g = self.genus();
        let a = DVector::from_fn(g, |i, _| Complex64::new(self.m2[i] as f64 / 2.0, 0.0));
        let b = DVector::from_fn(g, |i, _| Complex64::new(self.m1[i] as f64 / 2.0, 0.0));
        let ub = u + &b;
        let w = &ub + &self.tau * &a;
        let ipi = Complex64::i() * PI;
        let pre = ipi * (a.transpose() * &self.tau * &a)[(0, 0)]
            + 2.0 * ipi * (a.transpose() * &ub)[(0, 0)];
        (w, pre)
    }

    /// `ln θ_z(u)`.
    pub fn ln_theta_char(&self, u: &DVector<Complex64>) -> Complex64 {
        let (w, pre) = self.char_shift(u);
        pre + self.ln_theta(&w)
    }

    /// `θ_z(u) = Σ_m exp(iπ(m+a)ᵀτ(m+a) + 2iπ(m+a)ᵀ(u+b))`, `a = m2/2`, `b = m1/2`.
    pub fn theta_char(&self, u: &DVector<Complex64>) -> Complex64 {
        let (w, pre) = self.char_shift(u);
        let s = self.scaled(&w);
        (pre + s.log_scale).exp() * s.sum
    }

    /// `∇θ_z(u)`.
    pub fn grad_theta_char(&self, u: &DVector<Complex64>) -> DVector<Complex64> {
        let (w, pre) = self.char_shift(u);
        let s = self.scaled(&w);
        let g = self.genus();
        let factor = (pre + s.log_scale).exp();
        DVector::from_fn(g, |i, _| {
            factor * (s.grad[i] + 2.0 * PI * Complex64::i() * (self.m2[i] as f64 / 2.0) * s.sum)
        })
    }

    /// `∇ ln θ_z(u)`.
    pub fn grad_ln_theta_char(&self, u: &DVector<Complex64>) -> DVector<Complex64> {
        let (w, _) = self.char_shift(u);
        let s = self.scaled(&w);
        let g = self.genus();
        DVector::from_fn(g, |i, _| {
            s.grad[i] / s.sum + 2.0 * PI * Complex64::i() * (self.m2[i] as f64 / 2.0)
        })
    }

    /// `∇θ_z(0)`.
    pub fn grad_char_zero(&self) -> DVector<Complex64> {
        self.grad_theta_char(&DVector::zeros(self.genus()))
    }
}

/// Smallest `R` with the box-complement tail bound below `tol / 10`.
fn truncation_radius(lambda: f64, g: usize, tol: f64) -> Result<i32> {
    for r in 1..=80 {
        // After reduction |m + y| ≥ R + ½ outside the box; count shells generously.
        let shell = (2.0 * r as f64 + 3.0).powi(g as i32);
        let decay = (-PI * lambda * (r as f64 + 0.5).powi(2)).exp();
        let bound = shell * decay / (1.0 - (-PI * lambda).exp());
        if bound < tol / 10.0 {
            return Ok(r);
        }
    }
    Err(Error::Theta(format!(
        "target tolerance {tol:e} unreachable with λ_min(Im τ) = {lambda:e} and radius <= 80"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tau1(t: Complex64) -> DMatrix<Complex64> {
        DMatrix::from_element(1, 1, t)
    }

    #[test]
    fn theta_at_tau_i() {
        let ctx = ThetaContext::with_characteristic(&tau1(Complex64::i()), vec![1], vec![1], 1e-15)
            .unwrap();
        let v = ctx.theta(&DVector::zeros(1));
        // Σ e^{-π m²}, re-summed independently.
        let direct: f64 = (-20i32..=20).map(|m| (-PI * (m * m) as f64).exp()).sum();
        assert!((v.re - direct).abs() < 1e-15 && v.im.abs() < 1e-15);
        assert!((v.re - 1.086_434_811_213_308).abs() < 1e-14);
    }

    #[test]
    fn odd_characteristics_of_genus_two() {
        let c = odd_characteristics(2);
        assert_eq!(c.len(), 6);
        assert_eq!(c[0], (vec![0, 1], vec![0, 1]));
    }

    #[test]
    fn reduction_keeps_large_arguments_accurate() {
        let tau = tau1(Complex64::new(0.1, 0.7));
        let ctx = ThetaContext::with_characteristic(&tau, vec![1], vec![1], 1e-14).unwrap();
        let u = DVector::from_element(1, Complex64::new(0.3, 0.2));
        let shifted = DVector::from_element(1, u[0] + 7.0 * tau[(0, 0)]);
        let expect = ctx.ln_theta(&u) - Complex64::i() * PI * (14.0 * u[0] + 49.0 * tau[(0, 0)]);
        let got = ctx.ln_theta(&shifted);
        let diff = (got - expect) / (2.0 * PI * Complex64::i());
        assert!((diff.re - diff.re.round()).abs() < 1e-12 && diff.im.abs() < 1e-12);
    }
}
