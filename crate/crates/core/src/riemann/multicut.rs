//! Multi-cut asymptotics of the orthogonal wave functions.
//!
//! For a saddle `P ∈ {p_ξ, p̄_ξ}` the unnormalized term is
//!
//! `t_P = √H(P) (Λ(P)/γ)^{n-N} e^{-N Φ(P)/2} e^{-2iπ N ε*ᵀ u(P)} θ(A_n + u(P)) / θ(A_n)`
//!
//! with `A_n = N(ζ - τ ε*) + (n - N) u(∞_-)` (`u(∞_+) = 0`) and
//! `Φ(p̄) = -Φ(p)`. The prediction is `Σ_P t_P / √ĥ_n` with
//! `ĥ_n = ∫_cuts 2|t_+|² dx`, which fixes the overall constant at each `n`.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use super::differentials::{gamma, h_factor, ln_lambda_over_gamma};
use super::{PeriodData, Sheet, SurfacePoint, ThetaContext};
use crate::equilibrium::{EquilibriumMeasure, FillingOptimum, RegimeTag};
use crate::error::{Error, Result};
use crate::genus0::{AsymptoticPrediction, Ingredients};
use crate::quad;

/// Everything needed to evaluate the multi-cut formula at fixed `N`.
#[derive(Debug, Clone)]
pub struct MultiCutAsymptotics {
    meas: EquilibriumMeasure,
    pd: PeriodData,
    ctx: ThetaContext,
    n_weight: usize,
    eps: DVector<Complex64>,
    zeta: DVector<Complex64>,
    gamma: Complex64,
}

impl MultiCutAsymptotics {
    /// `fillings` has all `s` entries; `zeta` the first `s - 1`.
    pub fn new(meas: EquilibriumMeasure, zeta: &[f64], n_weight: usize) -> Result<Self> {
        let g = meas.genus();
        if g == 0 {
            return Err(Error::Regime(
                "multi-cut asymptotics need at least two cuts".into(),
            ));
        }
        if zeta.len() != g {
            return Err(Error::InvalidArgument(format!("ζ needs {g} entries")));
        }
        let pd = PeriodData::new(meas.endpoints())?;
        let ctx = ThetaContext::new(pd.tau(), 1e-14)?;
        let eps = DVector::from_fn(g, |i, _| Complex64::new(meas.fillings()[i], 0.0));
        let zeta = DVector::from_fn(g, |i, _| Complex64::new(zeta[i], 0.0));
        let gamma = gamma(&ctx, &pd);
        Ok(MultiCutAsymptotics {
            meas,
            pd,
            ctx,
            n_weight,
            eps,
            zeta,
            gamma,
        })
    }

    pub fn from_optimum(opt: &FillingOptimum, n_weight: usize) -> Result<Self> {
        Self::new(opt.measure.clone(), &opt.zeta, n_weight)
    }

    pub fn periods(&self) -> &PeriodData {
        &self.pd
    }

    pub fn theta(&self) -> &ThetaContext {
        &self.ctx
    }

    pub fn measure(&self) -> &EquilibriumMeasure {
        &self.meas
    }

    pub fn gamma(&self) -> Complex64 {
        self.gamma
    }

    /// `A_n = N(ζ - τε*) + (n - N) u(∞_-)`. The coefficient of `n - N` is
    /// `-(1/2iπ) ∂²F/∂ε∂T`, which in this cycle convention is `u(∞_-) - u(∞_+)`.
    pub fn theta_argument(&self, n: usize) -> DVector<Complex64> {
        let nw = self.n_weight as f64;
        let k = n as f64 - nw;
        (&self.zeta - self.pd.tau() * &self.eps) * Complex64::new(nw, 0.0)
            + self.pd.abel_infinity_difference() * Complex64::new(k, 0.0)
    }

    /// `Λ(p)`.
    pub fn lambda(&self, p: SurfacePoint) -> Result<Complex64> {
        let u = self.pd.abel(p)?;
        Ok(self.gamma * ln_lambda_over_gamma(&self.ctx, &self.pd, &u).exp())
    }

    /// `H(p)`.
    pub fn h(&self, p: SurfacePoint) -> Result<Complex64> {
        let u = self.pd.abel(p)?;
        let ubar = self.pd.abel(p.involution())?;
        Ok(h_factor(&self.ctx, &self.pd, &u, &ubar))
    }

    /// `Φ(P)` with `Φ(p̄) = -Φ(p)`.
    fn phi(&self, p: SurfacePoint) -> Result<Complex64> {
        match p {
            SurfacePoint::Finite { x, sheet } => Ok(sheet.sign() * self.meas.phi(x)),
            SurfacePoint::Infinity(_) => {
                Err(Error::InvalidArgument("Φ diverges at infinity".into()))
            }
        }
    }

    /// `(H(P), ln(t_P / √H(P)))`.
    fn term_parts(&self, n: usize, p: SurfacePoint) -> Result<(Complex64, Complex64)> {
        let u = self.pd.abel(p)?;
        let ubar = self.pd.abel(p.involution())?;
        let h = h_factor(&self.ctx, &self.pd, &u, &ubar);
        let k = n as f64 - self.n_weight as f64;
        let nw = self.n_weight as f64;
        let a = self.theta_argument(n);
        let ln_ratio = self.ctx.ln_theta(&(&a + &u)) - self.ctx.ln_theta(&a);
        if !ln_ratio.is_finite() {
            return Err(Error::ThetaDivisor(format!("{a:?}")));
        }
        let ln_t = k * ln_lambda_over_gamma(&self.ctx, &self.pd, &u)
            - nw * self.phi(p)? / 2.0
            - 2.0 * PI * Complex64::i() * nw * self.eps.dot(&u)
            + ln_ratio;
        Ok((h, ln_t))
    }

    /// Unnormalized `t_P` with the principal branch of `√H`.
    pub fn term(&self, n: usize, p: SurfacePoint) -> Result<Complex64> {
        let (h, ln_rest) = self.term_parts(n, p)?;
        Ok(h.sqrt() * ln_rest.exp())
    }

    /// `t_P` and `t_P̄` at `ξ + i0` on a cut. The factors of each term are
    /// evaluated independently; only the sign of `√H(p̄)`, which the formula
    /// leaves open, is fixed so that `t_P̄` is nearest to the conjugate of `t_P`
    /// (reflection symmetry of a real potential).
    pub fn cut_terms(&self, n: usize, p: SurfacePoint) -> Result<(Complex64, Complex64)> {
        let tp = self.term(n, p)?;
        let mut tm = self.term(n, p.involution())?;
        if (tm - tp.conj()).norm() > (tm + tp.conj()).norm() {
            tm = -tm;
        }
        Ok((tp, tm))
    }

    /// `ĥ_n = ∫_cuts 2|t_+|² dx`.
    pub fn norm(&self, n: usize) -> Result<f64> {
        let mut total = 0.0;
        let mut err = None;
        for &(a, b) in self.meas.cuts().cuts() {
            // |t_+|² ~ 1/√ at the endpoints.
            let v = quad::chebyshev_first(a, b, 160, |x| {
                match self.term(n, SurfacePoint::real(x, Sheet::Physical)) {
                    Ok(t) => 2.0 * t.norm_sqr() * ((x - a) * (b - x)).sqrt(),
                    Err(e) => {
                        err = Some(e);
                        0.0
                    }
                }
            });
            total += v;
        }
        match err {
            Some(e) => Err(e),
            None => Ok(total),
        }
    }

    /// `±1/√ĥ_n`, signed so that the prediction is positive to the right of
    /// all cuts, like `p_n`.
    pub fn scale(&self, n: usize) -> Result<f64> {
        let e = self.meas.endpoints();
        let far = e[e.len() - 1] + self.meas.cuts().extent();
        let (h, ln_rest) = self.term_parts(n, SurfacePoint::real(far, Sheet::Physical))?;
        let sign = (h.sqrt().arg() + ln_rest.im).cos().signum();
        Ok(sign / self.norm(n)?.sqrt())
    }

    /// Prediction at real `ξ` outside the edge bands of width `delta`.
    pub fn predict(&self, n: usize, xi: f64, delta: f64) -> Result<AsymptoticPrediction> {
        self.predict_scaled(n, xi, delta, self.scale(n)?)
    }

    /// As [`Self::predict`] with [`Self::scale`] supplied (it depends on `n` only).
    pub fn predict_scaled(
        &self,
        n: usize,
        xi: f64,
        delta: f64,
        scale: f64,
    ) -> Result<AsymptoticPrediction> {
        let regime = self.meas.classify_regime(xi, delta);
        let p = SurfacePoint::real(xi, Sheet::Physical);
        let ingredients = Ingredients {
            p: Complex64::new(xi, 0.0),
            lambda: self.lambda(p)?,
            h: self.h(p)?,
            v_eff: self.meas.effective_potential(Complex64::new(xi, 0.0)),
        };
        match regime {
            RegimeTag::ExcludedEdge => {
                Err(Error::Regime(format!("ξ = {xi} is within the edge band")))
            }
            RegimeTag::Outside => {
                let tp = self.term(n, p)? * scale;
                // |θ(A_n + u)| replaced by its lattice-sum bound, so the envelope
                // does not vanish at the gap zeros of ψ_n.
                let w = self.theta_argument(n) + self.pd.abel(p)?;
                let lift = self.ctx.ln_theta_bound(&w) - self.ctx.ln_theta(&w).re;
                Ok(AsymptoticPrediction {
                    n,
                    n_weight: self.n_weight,
                    xi,
                    regime,
                    psi_pred: tp.re,
                    envelope: tp.norm() * lift.exp(),
                    phase: None,
                    ingredients,
                })
            }
            RegimeTag::OnCut(_) => {
                let (tp, tm) = self.cut_terms(n, p)?;
                let (tp, tm) = (tp * scale, tm * scale);
                let sum = tp + tm;
                Ok(AsymptoticPrediction {
                    n,
                    n_weight: self.n_weight,
                    xi,
                    regime,
                    psi_pred: sum.re,
                    envelope: 2.0 * tp.norm(),
                    phase: Some(tp.arg()),
                    ingredients,
                })
            }
        }
    }
}
