//! Double-precision quadrature: Gauss–Legendre panels, Gauss–Chebyshev rules
//! for inverse-square-root and square-root endpoint behaviour, and a simple
//! adaptive bisection driver.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values that can be integrated: `f64` and `Complex64`.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, cached per order.
pub fn legendre_rule(n: usize) -> Arc<[(f64, f64)]> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<[(f64, f64)]>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("quadrature cache poisoned");
    map.entry(n)
        .or_insert_with(|| {
            let n = NonZeroUsize::new(n).expect("rule order must be positive");
            GaussLegendre::new(n).as_node_weight_pairs().to_vec().into()
        })
        .clone()
}

/// `n`-point Gauss–Legendre approximation of `∫_a^b f`.
pub fn gauss_legendre<T: Scalar>(a: f64, b: f64, n: usize, mut f: impl FnMut(f64) -> T) -> T {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let mut acc = T::zero();
    for &(t, w) in legendre_rule(n).iter() {
        acc = acc + f(mid + half * t) * w;
    }
    acc * half
}

/// Composite Gauss–Legendre with `panels` equal panels of order `n`.
pub fn composite<T: Scalar>(
    a: f64,
    b: f64,
    panels: usize,
    n: usize,
    mut f: impl FnMut(f64) -> T,
) -> T {
    let step = (b - a) / panels as f64;
    let mut acc = T::zero();
    for k in 0..panels {
        let lo = a + step * k as f64;
        acc = acc + gauss_legendre(lo, lo + step, n, &mut f);
    }
    acc
}

/// Adaptive bisection on 16-point Gauss–Legendre panels until the local
/// estimate changes by less than `tol` (absolute, distributed over panels).
pub fn adaptive<T: Scalar>(a: f64, b: f64, tol: f64, mut f: impl FnMut(f64) -> T) -> Result<T> {
    const ORDER: usize = 16;
    const MAX_PANELS: usize = 200_000;
    if a == b {
        return Ok(T::zero());
    }
    let mut total = T::zero();
    let mut stack = vec![(a, b, gauss_legendre(a, b, ORDER, &mut f), 0u32)];
    let mut evaluated = 1;
    let width = (b - a).abs();
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = gauss_legendre(lo, mid, ORDER, &mut f);
        let right = gauss_legendre(mid, hi, ORDER, &mut f);
        evaluated += 2;
        let refined = left + right;
        let local_tol = tol * ((hi - lo).abs() / width).max(1e-3);
        if (refined - whole).magnitude() <= local_tol || depth > 60 {
            total = total + refined;
        } else if evaluated > MAX_PANELS {
            return Err(Error::Quadrature(format!(
                "adaptive integration on [{a}, {b}] did not reach tolerance {tol:e}"
            )));
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    Ok(total)
}

/// `∫_a^b f(x) / √((x-a)(b-x)) dx` by `n`-point Gauss–Chebyshev (first kind).
pub fn chebyshev_first<T: Scalar>(a: f64, b: f64, n: usize, mut f: impl FnMut(f64) -> T) -> T {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut acc = T::zero();
    for k in 1..=n {
        let t = ((2 * k - 1) as f64 * PI / (2 * n) as f64).cos();
        acc = acc + f(c + r * t);
    }
    acc * (PI / n as f64)
}

/// `∫_a^b f(x) √((x-a)(b-x)) dx` by `n`-point Gauss–Chebyshev (second kind).
pub fn chebyshev_second<T: Scalar>(a: f64, b: f64, n: usize, mut f: impl FnMut(f64) -> T) -> T {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut acc = T::zero();
    for k in 1..=n {
        let th = k as f64 * PI / (n + 1) as f64;
        acc = acc + f(c + r * th.cos()) * th.sin().powi(2);
    }
    acc * (r * r * PI / (n + 1) as f64)
}

/// Point `x = c - r cos θ` of the interval `[a, b]`, `θ ∈ [0, π]`.
pub fn arc_point(a: f64, b: f64, theta: f64) -> f64 {
    0.5 * (a + b) - 0.5 * (b - a) * theta.cos()
}

/// Inverse of [`arc_point`].
pub fn arc_angle(a: f64, b: f64, x: f64) -> f64 {
    let t = (0.5 * (a + b) - x) / (0.5 * (b - a));
    t.clamp(-1.0, 1.0).acos()
}

/// `∫ f(x) dx` over the part of `[a, b]` with angles `θ0..θ1` under `x = c - r cos θ`.
///
/// The Jacobian `r sin θ` cancels inverse-square-root behaviour of `f` at
/// either end of `[a, b]`, so the transformed integrand is smooth.
pub fn arc_integral<T: Scalar>(
    a: f64,
    b: f64,
    theta0: f64,
    theta1: f64,
    panels: usize,
    n: usize,
    mut f: impl FnMut(f64) -> T,
) -> T {
    let r = 0.5 * (b - a);
    composite(theta0, theta1, panels, n, |th| {
        f(arc_point(a, b, th)) * (r * th.sin())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let v = gauss_legendre(-1.0, 2.0, 5, |x: f64| x.powi(9));
        assert_relative_eq!(v, (2f64.powi(10) - 1.0) / 10.0, max_relative = 1e-14);
    }

    #[test]
    fn adaptive_matches_closed_forms() {
        let g = adaptive(-12.0, 12.0, 1e-14, |x: f64| (-x * x / 2.0).exp()).unwrap();
        assert_relative_eq!(g, (2.0 * PI).sqrt(), max_relative = 1e-13);
        let s = adaptive(0.0, 1.0, 1e-12, |x: f64| x.sqrt()).unwrap();
        assert_relative_eq!(s, 2.0 / 3.0, max_relative = 1e-10);
    }

    #[test]
    fn chebyshev_rules() {
        // ∫_{-2}^{2} 1/√(4-x²) = π and ∫ √(4-x²) = 2π.
        assert_relative_eq!(
            chebyshev_first(-2.0, 2.0, 8, |_| 1.0),
            PI,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            chebyshev_second(-2.0, 2.0, 8, |_| 1.0),
            2.0 * PI,
            max_relative = 1e-14
        );
        // ∫_1^3 x²/√((x-1)(3-x)) = π (c² + r²/2) with c = 2, r = 1.
        assert_relative_eq!(
            chebyshev_first(1.0, 3.0, 6, |x| x * x),
            PI * 4.5,
            max_relative = 1e-14
        );
    }

    #[test]
    fn arc_integral_absorbs_endpoint_singularities() {
        let (a, b) = (1.0, 3.0);
        let th = arc_angle(a, b, 2.5);
        assert_relative_eq!(arc_point(a, b, th), 2.5, max_relative = 1e-15);
        // ∫_1^{2.5} dx/√((x-1)(3-x)) = θ(2.5).
        let v = arc_integral(a, b, 0.0, th, 2, 20, |x| 1.0 / ((x - a) * (b - x)).sqrt());
        assert_relative_eq!(v, th, max_relative = 1e-13);
    }

    #[test]
    fn complex_integrand() {
        let v = gauss_legendre(0.0, PI, 20, |t| Complex64::new(0.0, t).exp());
        assert!((v - Complex64::new(0.0, 2.0)).norm() < 1e-14);
    }
}
