//! One-cut (genus-zero) asymptotics through the Joukowski parametrization
//! `x(p) = c + γ(p + 1/p)`.
//!
//! The wave-function prediction is `ψ_n(ξ) ≈ Σ_P t_P / √ĥ` with
//! `t_P = √H(P) (Λ(P)/γ)^{n-N} e^{-N Φ(P)/2}` summed over the saddles admitted
//! by the regime, and `ĥ = ∫_cut 2|t_+|² dx = 2πγ`. In the bulk this is
//! `C · 2cos(θ + α) / √(2 sin φ)` with `C = 1/√(2πγ)`, `α = -π/4`, and
//! `θ = Nπ ∫_ξ^b ρ + (n - N + ½) φ`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::equilibrium::{EquilibriumMeasure, RegimeTag};
use crate::error::{Error, Result};
use crate::quad;

/// Bulk phase constant of the one-cut formula.
pub const BULK_ALPHA: f64 = -PI / 4.0;

/// `x(p) = center + γ(p + 1/p)` for the cut `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JoukowskiMap {
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    pub center: f64,
}

impl JoukowskiMap {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidArgument(format!("empty cut [{a}, {b}]")));
        }
        Ok(JoukowskiMap {
            a,
            b,
            gamma: (b - a) / 4.0,
            center: 0.5 * (a + b),
        })
    }

    pub fn from_measure(meas: &EquilibriumMeasure) -> Result<Self> {
        if meas.s() != 1 {
            return Err(Error::Regime(format!(
                "genus-0 map needs one cut, got {}",
                meas.s()
            )));
        }
        let e = meas.endpoints();
        JoukowskiMap::new(e[0], e[1])
    }

    pub fn x_of(&self, p: Complex64) -> Complex64 {
        self.center + self.gamma * (p + 1.0 / p)
    }

    /// Root of `γp² - (ξ - c)p + γ = 0` with `|p| ≥ 1`. For real `ξ` on the
    /// cut returns `e^{iφ}` with `φ ∈ (0, π)`.
    pub fn map_to_p(&self, xi: Complex64) -> Result<Complex64> {
        if (xi - self.a).norm() == 0.0 || (xi - self.b).norm() == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "ξ = {xi} is a branch point"
            )));
        }
        let w = (xi - self.center) / (2.0 * self.gamma);
        if xi.im == 0.0 && xi.re > self.a && xi.re < self.b {
            let phi = w.re.clamp(-1.0, 1.0).acos();
            return Ok(Complex64::from_polar(1.0, phi));
        }
        // w ± √(w² - 1) with √ branched like √((ξ-a)(ξ-b)): √(w-1)√(w+1).
        let root = (w - 1.0).sqrt() * (w + 1.0).sqrt();
        let p = w + root;
        Ok(if p.norm() >= 1.0 { p } else { w - root })
    }

    /// `(Λ, H) = (γp, p²/(p² - 1))`.
    pub fn lambda_h(&self, p: Complex64) -> Result<(Complex64, Complex64)> {
        let p2 = p * p;
        if (p2 - 1.0).norm() < 1e-14 {
            return Err(Error::Regime("p = ±1 is a branch point".into()));
        }
        Ok((self.gamma * p, p2 / (p2 - 1.0)))
    }
}

/// What went into a prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingredients {
    pub p: Complex64,
    pub lambda: Complex64,
    pub h: Complex64,
    pub v_eff: Complex64,
}

/// Predicted `ψ_n(ξ)` at one abscissa.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticPrediction {
    pub n: usize,
    pub n_weight: usize,
    pub xi: f64,
    pub regime: RegimeTag,
    pub psi_pred: f64,
    /// `|ψ|` outside (multi-cut: with the θ numerator replaced by its bound);
    /// the modulus of the cosine envelope on a cut.
    pub envelope: f64,
    /// Bulk only: `ψ = envelope · cos(phase)`.
    pub phase: Option<f64>,
    pub ingredients: Ingredients,
}

/// One-cut asymptotics for a solved equilibrium.
#[derive(Debug, Clone)]
pub struct Genus0Asymptotics {
    meas: EquilibriumMeasure,
    map: JoukowskiMap,
    n_weight: usize,
}

impl Genus0Asymptotics {
    pub fn new(meas: EquilibriumMeasure, n_weight: usize) -> Result<Self> {
        let map = JoukowskiMap::from_measure(&meas)?;
        Ok(Genus0Asymptotics {
            meas,
            map,
            n_weight,
        })
    }

    pub fn map(&self) -> &JoukowskiMap {
        &self.map
    }

    pub fn measure(&self) -> &EquilibriumMeasure {
        &self.meas
    }

    /// `C = 1/√ĥ` with `ĥ = 2πγ`.
    pub fn envelope_constant(&self) -> f64 {
        1.0 / (2.0 * PI * self.map.gamma).sqrt()
    }

    /// Unnormalized saddle term `t_P` at a physical-sheet `p` (or `1/p`).
    fn term(&self, n: usize, p: Complex64, phi: Complex64) -> Result<Complex64> {
        let (_, h) = self.map.lambda_h(p)?;
        let k = n as i32 - self.n_weight as i32;
        Ok(h.sqrt() * p.powi(k) * (-(self.n_weight as f64) * phi / 2.0).exp())
    }

    fn ingredients(&self, p: Complex64, xi: f64) -> Result<Ingredients> {
        let (lambda, h) = self.map.lambda_h(p)?;
        Ok(Ingredients {
            p,
            lambda,
            h,
            v_eff: self.meas.effective_potential(Complex64::new(xi, 0.0)),
        })
    }

    /// Prediction off the cut.
    pub fn asym_outside(&self, n: usize, xi: f64) -> Result<AsymptoticPrediction> {
        let regime = self.meas.classify_regime(xi, 0.0);
        if regime != RegimeTag::Outside {
            return Err(Error::Regime(format!("ξ = {xi} is on the cut")));
        }
        let x = Complex64::new(xi, 0.0);
        let p = self.map.map_to_p(x)?;
        let t = self.term(n, p, self.meas.phi(x))? * self.envelope_constant();
        Ok(AsymptoticPrediction {
            n,
            n_weight: self.n_weight,
            xi,
            regime,
            psi_pred: t.re,
            envelope: t.norm(),
            phase: None,
            ingredients: self.ingredients(p, xi)?,
        })
    }

    /// Two-saddle prediction on the cut, at least `delta` from the endpoints.
    pub fn asym_bulk(&self, n: usize, xi: f64, delta: f64) -> Result<AsymptoticPrediction> {
        let regime = self.meas.classify_regime(xi, delta);
        if !matches!(regime, RegimeTag::OnCut(_)) {
            return Err(Error::Regime(format!(
                "ξ = {xi} is not in the bulk ({})",
                regime.label()
            )));
        }
        let x = Complex64::new(xi, 0.0);
        let p = self.map.map_to_p(x)?;
        // t_- is the complex conjugate of t_+ for real potentials.
        let t = self.term(n, p, self.meas.phi(x))? * self.envelope_constant();
        Ok(AsymptoticPrediction {
            n,
            n_weight: self.n_weight,
            xi,
            regime,
            psi_pred: 2.0 * t.re,
            envelope: 2.0 * t.norm(),
            phase: Some(t.arg()),
            ingredients: self.ingredients(p, xi)?,
        })
    }

    /// Dispatch on the regime; fails inside the edge band.
    pub fn predict(&self, n: usize, xi: f64, delta: f64) -> Result<AsymptoticPrediction> {
        match self.meas.classify_regime(xi, delta) {
            RegimeTag::Outside => self.asym_outside(n, xi),
            RegimeTag::OnCut(_) => self.asym_bulk(n, xi, delta),
            RegimeTag::ExcludedEdge => {
                Err(Error::Regime(format!("ξ = {xi} is within the edge band")))
            }
        }
    }

    /// `θ(ξ) = Nπ ∫_ξ^b ρ + (n - N + ½) φ(ξ)` from a direct quadrature of `ρ`.
    pub fn bulk_phase_base(&self, n: usize, xi: f64) -> f64 {
        let (a, b) = (self.map.a, self.map.b);
        let th = quad::arc_angle(a, b, xi);
        let tail = quad::arc_integral(a, b, th, PI, 8, 24, |x| self.meas.density(x));
        let phi = self
            .map
            .map_to_p(Complex64::new(xi, 0.0))
            .map(|p| p.arg())
            .unwrap_or(0.0);
        let nw = self.n_weight as f64;
        nw * PI * self.meas.temperature() * tail + (n as f64 - nw + 0.5) * phi
    }
}

/// Fits `(C, α)` in `ψ = C · 2cos(θ(ξ) + α) / √(2 sin φ)` through two bulk samples `(ξ, ψ_exact)`.
pub fn fit_bulk_constants(
    asym: &Genus0Asymptotics,
    n: usize,
    samples: [(f64, f64); 2],
) -> Result<(f64, f64)> {
    // ψ√(2 sin φ)/2 = (C cos α) cos θ - (C sin α) sin θ.
    let mut m = [[0.0; 2]; 2];
    let mut rhs = [0.0; 2];
    for (k, &(xi, psi)) in samples.iter().enumerate() {
        let p = asym.map.map_to_p(Complex64::new(xi, 0.0))?;
        let th = asym.bulk_phase_base(n, xi);
        m[k] = [th.cos(), -th.sin()];
        rhs[k] = psi * (2.0 * p.arg().sin()).sqrt() / 2.0;
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.abs() < 1e-12 {
        return Err(Error::Numerical(
            "calibration samples are degenerate".into(),
        ));
    }
    let cc = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
    let cs = (m[0][0] * rhs[1] - rhs[0] * m[1][0]) / det;
    Ok((cc.hypot(cs), cs.atan2(cc)))
}
