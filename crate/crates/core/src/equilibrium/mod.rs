//! Equilibrium measure of the log-gas in the external potential `V`.
//!
//! The resolvent off the support is `ω(x) = ½(V'(x) - M(x)√σ(x))` with
//! `σ(x) = ∏(x - a_i)(x - b_i)`. The branch of `√σ` used everywhere is the
//! product of principal square roots `∏_j √(x - e_j)`: it has its cuts exactly
//! on the intervals `[a_i, b_i]`, behaves like `x^s` at infinity and is
//! positive on `(b_s, ∞)`.
//!
//! An optional logarithmic charge `-h ln(ξ - x)` added to the potential is
//! supported; it is only used to differentiate with respect to `h`.

mod fillings;
mod solve;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use fillings::{free_energy_difference, optimize_fillings, FillingOptimum};
pub use solve::{
    continue_potential, solve, solve_charged, solve_multi_cut, solve_one_cut, suggest_cuts,
};

use crate::error::{Error, Result};
use crate::potential::{horner, Potential};
use crate::quad;

/// Ordered, disjoint cuts `a_1 < b_1 < a_2 < ... < b_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutSet {
    cuts: Vec<(f64, f64)>,
}

impl CutSet {
    pub fn new(cuts: Vec<(f64, f64)>) -> Result<Self> {
        if cuts.is_empty() {
            return Err(Error::InvalidArgument(
                "a cut set needs at least one cut".into(),
            ));
        }
        for (i, &(a, b)) in cuts.iter().enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidArgument(format!(
                    "cut {i} = [{a}, {b}] is empty"
                )));
            }
            if i + 1 < cuts.len() && b >= cuts[i + 1].0 {
                return Err(Error::CutMerging { index: i + 1 });
            }
        }
        Ok(CutSet { cuts })
    }

    pub fn from_endpoints(e: &[f64]) -> Result<Self> {
        CutSet::new(e.chunks(2).map(|c| (c[0], c[1])).collect())
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn cuts(&self) -> &[(f64, f64)] {
        &self.cuts
    }

    /// `[a_1, b_1, ..., a_s, b_s]`.
    pub fn endpoints(&self) -> Vec<f64> {
        self.cuts.iter().flat_map(|&(a, b)| [a, b]).collect()
    }

    /// `b_s - a_1`.
    pub fn extent(&self) -> f64 {
        self.cuts[self.len() - 1].1 - self.cuts[0].0
    }

    /// Index of the cut containing `x` (closed intervals).
    pub fn locate(&self, x: f64) -> Option<usize> {
        self.cuts.iter().position(|&(a, b)| a <= x && x <= b)
    }

    /// Distance to the nearest branch point.
    pub fn edge_distance(&self, x: Complex64) -> f64 {
        self.endpoints()
            .iter()
            .map(|&e| (x - e).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Where an abscissa sits relative to the support.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeTag {
    Outside,
    OnCut(usize),
    ExcludedEdge,
}

impl RegimeTag {
    pub fn label(&self) -> String {
        match self {
            RegimeTag::Outside => "outside".into(),
            RegimeTag::OnCut(i) => format!("on_cut({i})"),
            RegimeTag::ExcludedEdge => "excluded_edge".into(),
        }
    }
}

/// A logarithmic charge `-h ln(ξ - x)` added to `V`, with `ξ` real and off the cuts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Charge {
    pub h: f64,
    pub xi: f64,
}

/// `∏_j √(x - e_j)` with principal square roots.
pub fn sqrt_sigma(e: &[f64], x: Complex64) -> Complex64 {
    e.iter()
        .fold(Complex64::new(1.0, 0.0), |acc, &ej| acc * (x - ej).sqrt())
}

/// Boundary value of `√σ` at real `x` from above (`upper`) or below.
pub fn sqrt_sigma_boundary(e: &[f64], x: f64, upper: bool) -> Complex64 {
    let mut mag = 1.0;
    let mut below = 0usize;
    for &ej in e {
        let d = x - ej;
        mag *= d.abs().sqrt();
        if d < 0.0 {
            below += 1;
        }
    }
    // Each factor with x < e_j contributes ±i.
    let unit = if upper {
        Complex64::i()
    } else {
        -Complex64::i()
    };
    unit.powu(below as u32) * mag
}

/// Sign `κ_i` with `√σ(x + i0) = i κ_i √|σ(x)|` on cut `i` (0-based).
pub fn kappa(s: usize, i: usize) -> f64 {
    if (s - 1 - i).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Taylor coefficients of `∏_j (1 - e_j t)^{-1/2}` up to `t^k_max`.
pub(crate) fn inverse_sqrt_series(e: &[f64], k_max: usize) -> Vec<f64> {
    let mut binom = vec![1.0; k_max + 1];
    for k in 1..=k_max {
        binom[k] = binom[k - 1] * (2 * k - 1) as f64 / (2 * k) as f64;
    }
    let mut out = vec![0.0; k_max + 1];
    out[0] = 1.0;
    for &ej in e {
        let mut next = vec![0.0; k_max + 1];
        for (i, &o) in out.iter().enumerate() {
            if o == 0.0 {
                continue;
            }
            let mut p = 1.0;
            for (j, &bj) in binom.iter().enumerate().take(k_max + 1 - i) {
                next[i + j] += o * bj * p;
                p *= ej;
            }
        }
        out = next;
    }
    out
}

/// Laurent coefficients `c[r]` of `V'(x)/√σ(x)` at infinity, returned as a
/// closure over `r` for `r` from `-r_min` up to `deg V - 1 - s`.
pub(crate) fn laurent_coefficients(vp: &[f64], e: &[f64], neg_terms: usize) -> LaurentSeries {
    let s = e.len() / 2;
    let top = vp.len() as isize - 1 - s as isize;
    let k_max = (top + neg_terms as isize).max(0) as usize;
    let ser = inverse_sqrt_series(e, k_max);
    let lowest = -(neg_terms as isize);
    let mut coeffs = Vec::new();
    for r in lowest..=top.max(-1) {
        let mut acc = 0.0;
        for (m, &v) in vp.iter().enumerate() {
            let k = m as isize - s as isize - r;
            if k >= 0 && (k as usize) < ser.len() {
                acc += v * ser[k as usize];
            }
        }
        coeffs.push(acc);
    }
    LaurentSeries { lowest, coeffs }
}

#[derive(Debug, Clone)]
pub(crate) struct LaurentSeries {
    lowest: isize,
    coeffs: Vec<f64>,
}

impl LaurentSeries {
    pub(crate) fn get(&self, r: isize) -> f64 {
        let i = r - self.lowest;
        if i < 0 || i as usize >= self.coeffs.len() {
            0.0
        } else {
            self.coeffs[i as usize]
        }
    }

    /// Coefficients `c[0], c[1], ...`: the polynomial part.
    pub(crate) fn polynomial_part(&self) -> Vec<f64> {
        let start = (-self.lowest) as usize;
        let mut m: Vec<f64> = self
            .coeffs
            .get(start..)
            .map(<[f64]>::to_vec)
            .unwrap_or_default();
        if m.is_empty() {
            m.push(0.0);
        }
        m
    }
}

/// Solved equilibrium problem.
#[derive(Debug, Clone)]
pub struct EquilibriumMeasure {
    pot: Potential,
    t: f64,
    cuts: CutSet,
    endpoints: Vec<f64>,
    m_coeffs: Vec<f64>,
    fillings: Vec<f64>,
    charge: Option<Charge>,
    /// `√σ(ξ)` of the charge location.
    charge_sqrt: f64,
    /// Negative-power coefficients of `R(x)/1 = (V' - h/(x-ξ))/√σ - M + ...`, for large-|x| evaluation.
    tail: Vec<f64>,
}

impl EquilibriumMeasure {
    pub(crate) fn assemble(
        pot: &Potential,
        t: f64,
        endpoints: &[f64],
        charge: Option<Charge>,
    ) -> Result<Self> {
        let cuts = CutSet::from_endpoints(endpoints)?;
        let vp = pot.derivative_coeffs();
        const TAIL_TERMS: usize = 90;
        let series = laurent_coefficients(&vp, endpoints, TAIL_TERMS);
        let m_coeffs = series.polynomial_part();
        let charge_sqrt = match charge {
            Some(c) => sqrt_sigma(endpoints, Complex64::new(c.xi, 0.0)).re,
            None => 1.0,
        };
        // Tail of V'/√σ - M, corrected by the charge term h/((x-ξ)√σ(ξ)).
        let tail = (1..=TAIL_TERMS as isize)
            .map(|k| {
                let mut c = series.get(-k);
                if let Some(ch) = charge {
                    c += ch.h / charge_sqrt * ch.xi.powi(k as i32 - 1);
                }
                c
            })
            .collect();
        let mut meas = EquilibriumMeasure {
            pot: pot.clone(),
            t,
            cuts,
            endpoints: endpoints.to_vec(),
            m_coeffs,
            fillings: Vec::new(),
            charge,
            charge_sqrt,
            tail,
        };
        meas.fillings = meas.cut_masses().iter().map(|m| m * t).collect();
        Ok(meas)
    }

    pub fn potential(&self) -> &Potential {
        &self.pot
    }

    pub fn temperature(&self) -> f64 {
        self.t
    }

    pub fn cuts(&self) -> &CutSet {
        &self.cuts
    }

    pub fn endpoints(&self) -> &[f64] {
        &self.endpoints
    }

    pub fn s(&self) -> usize {
        self.cuts.len()
    }

    pub fn genus(&self) -> usize {
        self.s() - 1
    }

    /// Coefficients of `M(x)`, lowest degree first.
    pub fn m_coeffs(&self) -> &[f64] {
        &self.m_coeffs
    }

    /// Filling fractions `ε_i = T ∫_{cut i} ρ`, summing to `T`.
    pub fn fillings(&self) -> &[f64] {
        &self.fillings
    }

    pub fn charge(&self) -> Option<Charge> {
        self.charge
    }

    /// `γ = (b - a)/4` for one cut.
    pub fn gamma(&self) -> f64 {
        self.cuts.extent() / 4.0
    }

    pub fn sqrt_sigma(&self, x: Complex64) -> Complex64 {
        sqrt_sigma(&self.endpoints, x)
    }

    /// `R(x) = M(x) - h / ((x - ξ) √σ(ξ))`; equals `M` without a charge.
    pub fn r_poly<T>(&self, x: T) -> T
    where
        T: Copy
            + std::ops::Add<Output = T>
            + std::ops::Mul<Output = T>
            + std::ops::Sub<Output = T>
            + std::ops::Div<Output = T>
            + From<f64>,
    {
        let m = horner(&self.m_coeffs, x);
        match self.charge {
            Some(c) => m - T::from(c.h / self.charge_sqrt) / (x - T::from(c.xi)),
            None => m,
        }
    }

    /// `V'_h(x) = V'(x) - h/(x - ξ)`.
    fn vprime_h(&self, x: Complex64) -> Complex64 {
        let v = self.pot.eval_derivative(x);
        match self.charge {
            Some(c) => v - c.h / (x - c.xi),
            None => v,
        }
    }

    fn max_radius(&self) -> f64 {
        let mut r = self.endpoints.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        if let Some(c) = self.charge {
            r = r.max(c.xi.abs());
        }
        r
    }

    /// `ω(x)` off the cuts.
    pub fn resolvent(&self, x: Complex64) -> Result<Complex64> {
        if self.cuts.edge_distance(x) < 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "x = {x} is at a branch point"
            )));
        }
        let rad = self.max_radius();
        if x.norm() > 2.0 * rad {
            // √σ · Σ_k c̃_k x^{-k} with no cancellation at large |x|.
            let inv = 1.0 / x;
            let mut acc = Complex64::new(0.0, 0.0);
            for &c in self.tail.iter().rev() {
                acc = (acc + c) * inv;
            }
            let mut w = self.sqrt_sigma(x) * acc;
            if let Some(c) = self.charge {
                w -= c.h / (x - c.xi);
            }
            return Ok(0.5 * w);
        }
        Ok(0.5 * (self.vprime_h(x) - self.sqrt_sigma(x) * self.r_poly(x)))
    }

    /// `ω(x ± i0)` at a real point.
    pub fn resolvent_boundary(&self, x: f64, upper: bool) -> Complex64 {
        let sq = sqrt_sigma_boundary(&self.endpoints, x, upper);
        let xc = Complex64::new(x, 0.0);
        0.5 * (self.vprime_h(xc) - sq * self.r_poly(x))
    }

    /// Normalized density `ρ(x)` (unit total mass); zero off the cuts.
    pub fn density(&self, x: f64) -> f64 {
        match self.cuts.locate(x) {
            Some(i) => {
                let mag: f64 = self
                    .endpoints
                    .iter()
                    .map(|&e| (x - e).abs().sqrt())
                    .product();
                kappa(self.s(), i) * self.r_poly(x) * mag / (2.0 * PI * self.t)
            }
            None => 0.0,
        }
    }

    /// Quadrature order for integrals over cut `i`, growing as neighbouring
    /// branch points approach.
    fn cut_nodes(&self, i: usize) -> usize {
        let (a, b) = self.cuts.cuts()[i];
        let len = b - a;
        let mut gap = f64::INFINITY;
        for (j, &e) in self.endpoints.iter().enumerate() {
            if j / 2 != i {
                gap = gap.min((e - a).abs().min((e - b).abs()));
            }
        }
        if let Some(c) = self.charge {
            gap = gap.min((c.xi - a).abs().min((c.xi - b).abs()));
        }
        let ratio = (gap / len).max(1e-12);
        ((30.0 / ratio.sqrt()) as usize).clamp(64, 40_000)
    }

    /// `ρ(x) / √((x - a_i)(b_i - x))` on cut `i`, analytic across the cut.
    fn density_factor(&self, i: usize, x: f64) -> f64 {
        let mut other = 1.0;
        for (j, &e) in self.endpoints.iter().enumerate() {
            if j / 2 != i {
                other *= (x - e).abs().sqrt();
            }
        }
        kappa(self.s(), i) * self.r_poly(x) * other / (2.0 * PI * self.t)
    }

    /// `∫_{cut i} ρ` for every cut.
    pub fn cut_masses(&self) -> Vec<f64> {
        (0..self.s())
            .map(|i| {
                let (a, b) = self.cuts.cuts()[i];
                quad::chebyshev_second(a, b, self.cut_nodes(i), |x| self.density_factor(i, x))
            })
            .collect()
    }

    /// `∫ ρ` over all cuts.
    pub fn total_mass(&self) -> f64 {
        self.cut_masses().iter().sum()
    }

    /// `|V'(x) - ω(x+i0) - ω(x-i0)|` at a point inside a cut, with `ω_±`
    /// obtained as the Cauchy transform of `ρ` (principal value), not from the
    /// closed form.
    pub fn saddle_residual(&self, x: f64) -> Result<f64> {
        let Some(_) = self.cuts.locate(x) else {
            return Err(Error::Regime(format!("x = {x} is not on a cut")));
        };
        let mut pv = 0.0;
        for (j, &(a, b)) in self.cuts.cuts().iter().enumerate() {
            let n = self.cut_nodes(j);
            if a < x && x < b {
                let gx = self.density_factor(j, x);
                let regular = quad::chebyshev_second(a, b, n, |y| {
                    if y == x {
                        0.0
                    } else {
                        (self.density_factor(j, y) - gx) / (x - y)
                    }
                });
                // PV ∫_a^b √((y-a)(b-y)) / (x - y) dy = π (x - (a+b)/2).
                pv += regular + gx * PI * (x - 0.5 * (a + b));
            } else {
                pv += quad::chebyshev_second(a, b, n, |y| self.density_factor(j, y) / (x - y));
            }
        }
        let sum_omega = 2.0 * self.t * pv;
        Ok((self.vprime_h(Complex64::new(x, 0.0)).re - sum_omega).abs())
    }

    /// `∫ √σ(x) R(x) dx` along the real axis on the upper side, from `from` to `to`.
    fn phi_real(&self, from: f64, to: f64) -> Complex64 {
        if from == to {
            return Complex64::new(0.0, 0.0);
        }
        let (lo, hi, sign) = if from < to {
            (from, to, 1.0)
        } else {
            (to, from, -1.0)
        };
        // Breakpoints: branch points strictly inside (lo, hi).
        let mut pts = vec![lo];
        pts.extend(self.endpoints.iter().copied().filter(|&e| e > lo && e < hi));
        pts.push(hi);
        let f = |x: f64| sqrt_sigma_boundary(&self.endpoints, x, true) * self.r_poly(x);
        let is_branch = |x: f64| self.endpoints.contains(&x);
        let mut acc = Complex64::new(0.0, 0.0);
        for w in pts.windows(2) {
            let (l, h) = (w[0], w[1]);
            let piece = match (is_branch(l), is_branch(h)) {
                (true, true) => quad::arc_integral(l, h, 0.0, PI, 8, 24, f),
                (true, false) => root_substituted(l, h, &f),
                (false, true) => -root_substituted(h, l, &f),
                (false, false) => quad::composite(l, h, 16, 16, f),
            };
            acc += piece;
        }
        acc * sign
    }

    /// `Φ(ξ) = ∫_{b_s}^ξ (V'_h - 2ω)`, the effective potential relative to its
    /// value at the rightmost branch point. Real `ξ` on a cut uses the upper
    /// boundary value; complex `ξ` goes along the real axis (upper side for
    /// `Im ξ >= 0`, lower side otherwise) and then vertically.
    pub fn phi(&self, xi: Complex64) -> Complex64 {
        let bs = self.endpoints[self.endpoints.len() - 1];
        let along = self.phi_real(bs, xi.re);
        let along = if xi.im < 0.0 { along.conj() } else { along };
        if xi.im == 0.0 {
            return along;
        }
        let base = Complex64::new(xi.re, 0.0);
        let dir = Complex64::new(0.0, xi.im);
        let vertical: Complex64 = quad::composite(0.0, 1.0, 8, 16, |t| {
            let z = base + dir * t;
            self.sqrt_sigma(z) * self.r_poly(z) * dir
        });
        // At Re ξ on a cut the vertical leg starts from the side the path arrived on.
        along + vertical
    }

    /// `V_eff(ξ)`, anchored so that `V_eff(b_s) = V(b_s)`.
    pub fn effective_potential(&self, xi: Complex64) -> Complex64 {
        let bs = self.endpoints[self.endpoints.len() - 1];
        self.phi(xi) + self.pot.eval(bs)
    }

    /// Regime of a real abscissa with edge band `delta`.
    pub fn classify_regime(&self, xi: f64, delta: f64) -> RegimeTag {
        if self.cuts.edge_distance(Complex64::new(xi, 0.0)) < delta {
            return RegimeTag::ExcludedEdge;
        }
        match self.cuts.locate(xi) {
            Some(i) => RegimeTag::OnCut(i),
            None => RegimeTag::Outside,
        }
    }

    /// A real zero of `M` strictly inside a cut, where `ρ` changes sign.
    fn interior_root(&self) -> Option<f64> {
        let m = &self.m_coeffs;
        let deg = m.iter().rposition(|c| *c != 0.0)?;
        if deg == 0 {
            return None;
        }
        // Companion matrix of the monic polynomial.
        let mut comp = DMatrix::<f64>::zeros(deg, deg);
        for i in 1..deg {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..deg {
            comp[(i, deg - 1)] = -m[i] / m[deg];
        }
        let scale = self.cuts.extent();
        comp.complex_eigenvalues().iter().find_map(|r| {
            if r.im.abs() > 1e-9 * scale {
                return None;
            }
            let x = r.re;
            self.cuts.cuts().iter().find_map(|&(a, b)| {
                let margin = 1e-9 * scale;
                (x > a + margin && x < b - margin).then_some(x)
            })
        })
    }

    /// Smallest value of `ρ` over a scan of every cut, with its location.
    pub fn density_minimum(&self) -> (f64, f64) {
        let mut worst = (f64::INFINITY, 0.0);
        for &(a, b) in self.cuts.cuts() {
            let n = 400;
            for k in 1..n {
                let x = a + (b - a) * k as f64 / n as f64;
                // Compare the analytic factor so the √ endpoint decay does not mask sign changes.
                let i = self.cuts.locate(x).unwrap_or(0);
                let v = self.density_factor(i, x);
                if v < worst.0 {
                    worst = (v, x + 0.0);
                }
            }
        }
        worst
    }

    /// Errors with the location of the most negative density, if any.
    pub fn check_positive(&self) -> Result<()> {
        let (v, x) = self.density_minimum();
        let scale = self
            .m_coeffs
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs()))
            .max(1e-300);
        if v < -1e-10 * scale {
            return Err(Error::NegativeDensity { x, cuts: self.s() });
        }
        // A sign change too narrow for the scan still shows up as a root of M.
        if self.charge.is_none() {
            if let Some(x) = self.interior_root() {
                return Err(Error::NegativeDensity { x, cuts: self.s() });
            }
        }
        Ok(())
    }
}

/// `∫_from^to f` where `f` has a square-root branch point at `from`: substitute `x = from + (to-from) u²`.
fn root_substituted(from: f64, to: f64, f: &impl Fn(f64) -> Complex64) -> Complex64 {
    let d = to - from;
    quad::composite(0.0, 1.0, 8, 16, |u| f(from + d * u * u) * (2.0 * d * u))
}
