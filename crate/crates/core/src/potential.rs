//! Polynomial potentials `V(x) = Σ g_k x^k` defining the weight `e^{-N V(x)}`.

use std::ops::{Add, Mul};

use rug::Float;

use crate::error::{Error, Result};

/// A real polynomial potential, coefficients stored lowest degree first.
///
/// Only even-degree polynomials with a positive leading coefficient are
/// accepted, so that `e^{-N V}` is integrable on the real line.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    coeffs: Vec<f64>,
}

impl Potential {
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        if let Some(bad) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonIntegrable(format!(
                "coefficient g_{bad} is not finite"
            )));
        }
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        let degree = coeffs.len().saturating_sub(1);
        if degree < 2 {
            return Err(Error::NonIntegrable(format!(
                "degree {degree} potential; need an even degree >= 2"
            )));
        }
        if degree % 2 == 1 {
            return Err(Error::NonIntegrable(format!("odd degree {degree}")));
        }
        if coeffs[degree] <= 0.0 {
            return Err(Error::NonIntegrable(format!(
                "leading coefficient g_{degree} = {} must be positive",
                coeffs[degree]
            )));
        }
        Ok(Potential { coeffs })
    }

    /// `V(x) = x²/2`.
    pub fn gaussian() -> Self {
        Potential {
            coeffs: vec![0.0, 0.0, 0.5],
        }
    }

    /// `V(x) = g4 x⁴/4 + g2 x²/2`, i.e. coefficients `[0, 0, g2/2, 0, g4/4]`.
    pub fn even_quartic(g2: f64, g4: f64) -> Result<Self> {
        Potential::new(vec![0.0, 0.0, g2 / 2.0, 0.0, g4 / 4.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// True when only even powers appear, so the weight is symmetric under `x -> -x`.
    pub fn is_even(&self) -> bool {
        self.coeffs.iter().skip(1).step_by(2).all(|&c| c == 0.0)
    }

    /// Coefficients of `V'`, lowest degree first.
    pub fn derivative_coeffs(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &g)| k as f64 * g)
            .collect()
    }

    /// Horner evaluation of `V(x)` for real or complex `x`.
    pub fn eval<T>(&self, x: T) -> T
    where
        T: Copy + Add<Output = T> + Mul<Output = T> + From<f64>,
    {
        horner(&self.coeffs, x)
    }

    /// Horner evaluation of `V'(x)`.
    pub fn eval_derivative<T>(&self, x: T) -> T
    where
        T: Copy + Add<Output = T> + Mul<Output = T> + From<f64>,
    {
        let d = self.degree();
        let mut acc = T::from(d as f64 * self.coeffs[d]);
        for k in (1..d).rev() {
            acc = acc * x + T::from(k as f64 * self.coeffs[k]);
        }
        acc
    }

    /// `V(x)` at the precision of `x`.
    pub fn eval_mp(&self, x: &Float) -> Float {
        let prec = x.prec();
        let mut acc = Float::with_val(prec, self.coeffs[self.degree()]);
        for &g in self.coeffs.iter().rev().skip(1) {
            acc *= x;
            acc += g;
        }
        acc
    }

    /// Global minimum of `V` on the real line, as `(x_min, V(x_min))`.
    pub fn minimum(&self) -> (f64, f64) {
        let d = self.degree();
        let lead = d as f64 * self.coeffs[d];
        // Cauchy bound on the critical points.
        let radius = 1.0
            + self
                .derivative_coeffs()
                .iter()
                .take(d - 1)
                .map(|c| (c / lead).abs())
                .fold(0.0, f64::max);
        let samples = 4001;
        let mut best = (0.0, f64::INFINITY);
        for i in 0..samples {
            let x = -radius + 2.0 * radius * i as f64 / (samples - 1) as f64;
            let v = self.eval(x);
            if v < best.1 {
                best = (x, v);
            }
        }
        // Polish with Newton on V'.
        let dd: Vec<f64> = {
            let dc = self.derivative_coeffs();
            dc.iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect()
        };
        let mut x = best.0;
        for _ in 0..50 {
            let second = horner(&dd, x);
            if second <= 0.0 {
                break;
            }
            let step = self.eval_derivative(x) / second;
            x -= step;
            if step.abs() < 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        let v = self.eval(x);
        if v < best.1 {
            (x, v)
        } else {
            best
        }
    }
}

pub(crate) fn horner<T>(coeffs: &[f64], x: T) -> T
where
    T: Copy + Add<Output = T> + Mul<Output = T> + From<f64>,
{
    let mut acc = T::from(*coeffs.last().unwrap_or(&0.0));
    for &c in coeffs.iter().rev().skip(1) {
        acc = acc * x + T::from(c);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn double_well() -> Potential {
        Potential::new(vec![0.0, 0.0, -2.0, 0.0, 0.25]).unwrap()
    }

    #[test]
    fn evaluates_gaussian_and_double_well() {
        let g = Potential::gaussian();
        assert_eq!(g.eval(2.0), 2.0);
        assert_eq!(g.eval(0.0), 0.0);
        assert_eq!(g.eval_derivative(3.0), 3.0);
        let q = double_well();
        assert_eq!(q.eval(1.0), -1.75);
        assert_eq!(q.eval_derivative(1.0), -3.0);
    }

    #[test]
    fn complex_evaluation_matches_real_on_axis() {
        let q = double_well();
        let z = q.eval(Complex64::new(0.7, 0.0));
        assert_eq!(z.re, q.eval(0.7));
        assert_eq!(z.im, 0.0);
    }

    #[test]
    fn central_difference_is_second_order() {
        let q = double_well();
        let (x, h): (f64, f64) = (0.7, 1e-5);
        let fd = (q.eval(x + h) - q.eval(x - h)) / (2.0 * h);
        // Truncation error is V'''(x) h²/6 ~ 1e-10; rounding ~ 1e-11.
        assert!((fd - q.eval_derivative(x)).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_integrable_weights() {
        assert!(matches!(
            Potential::new(vec![0.0, 0.0, 0.0, 1.0]),
            Err(Error::NonIntegrable(_))
        ));
        assert!(Potential::new(vec![0.0, 0.0, -1.0]).is_err());
        assert!(Potential::new(vec![1.0]).is_err());
        // Trailing zeros do not count towards the degree.
        assert_eq!(
            Potential::new(vec![0.0, 0.0, 1.0, 0.0]).unwrap().degree(),
            2
        );
    }

    #[test]
    fn minimum_of_double_well() {
        let (x, v) = double_well().minimum();
        assert!((x.abs() - 2.0).abs() < 1e-10);
        assert!((v + 4.0).abs() < 1e-12);
    }

    #[test]
    fn multiprecision_eval_agrees() {
        let q = double_well();
        let x = Float::with_val(200, 1.25);
        let v = q.eval_mp(&x);
        assert!((v.to_f64() - q.eval(1.25)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn derivative_matches_finite_differences(x in -3.0f64..3.0) {
            let q = double_well();
            let h = 1e-4;
            let fd = (q.eval(x + h) - q.eval(x - h)) / (2.0 * h);
            // |V'''| <= 6·3·0.25·... bounded by 10 on [-3,3]; h²/6·10 ~ 2e-8.
            prop_assert!((fd - q.eval_derivative(x)).abs() < 1e-7);
        }
    }
}
