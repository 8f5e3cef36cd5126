//! Third-kind differentials, prime form and the theta expressions for `Λ`, `H`.

use nalgebra::DVector;
use num_complex::Complex64;

use super::{PeriodData, Sheet, SpectralCurve, SurfacePoint, ThetaContext};
use crate::error::{Error, Result};

/// `dS_{q1,q2}`: residue `+1` at `q1`, `-1` at `q2`, vanishing A-periods.
///
/// Built as `ν_{q1} - ν_{q2} + Σ_k d_k x^k dx / y` where, for finite `q`,
/// `ν_q = (y + y_q) / (2y (x - x_q)) dx - ½ x^{s-1} dx / y` (residues `+1` at
/// `q`, `-1` at `∞_-`), `ν_{∞_+} = -x^{s-1} dx / y` and `ν_{∞_-} = 0`.
#[derive(Debug, Clone)]
pub struct ThirdKind {
    curve: SpectralCurve,
    q1: SurfacePoint,
    q2: SurfacePoint,
    /// Holomorphic correction in the monomial basis `x^k dx / y`.
    correction: DVector<Complex64>,
}

/// `ν_q / dx` at a finite point `(x, y)`.
fn nu(curve: &SpectralCurve, q: SurfacePoint, x: Complex64, y: Complex64) -> Complex64 {
    let s = curve.s() as i32;
    match q {
        SurfacePoint::Infinity(Sheet::Physical) => -x.powi(s - 1) / y,
        SurfacePoint::Infinity(Sheet::Second) => Complex64::new(0.0, 0.0),
        SurfacePoint::Finite { x: xq, sheet } => {
            let yq = curve.y(xq, sheet);
            (y + yq) / (2.0 * y * (x - xq)) - 0.5 * x.powi(s - 1) / y
        }
    }
}

impl PeriodData {
    /// A-periods of `ν_q`.
    fn nu_a_periods(&self, q: SurfacePoint) -> Result<DVector<Complex64>> {
        let curve = self.curve();
        let s = curve.s() as i32;
        match q {
            SurfacePoint::Infinity(Sheet::Physical) => {
                Ok(self.a_periods_of(f64::INFINITY, |x| Complex64::new(-x.powi(s - 1), 0.0)))
            }
            SurfacePoint::Infinity(Sheet::Second) => Ok(DVector::zeros(self.genus())),
            SurfacePoint::Finite { x: xq, sheet } => {
                let e = curve.branch_points();
                let mut dist = f64::INFINITY;
                for c in e.chunks(2) {
                    let clamped = xq.re.clamp(c[0], c[1]);
                    dist = dist.min((xq - clamped).norm());
                }
                if dist < 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "pole {xq} of a third-kind differential lies on a cut"
                    )));
                }
                let yq = curve.y(xq, sheet);
                // The 1/(2(x - x_q)) dx part has no A-period when x_q is off the cuts.
                Ok(self.a_periods_of(dist, |x| yq / (2.0 * (x - xq)) - 0.5 * x.powi(s - 1)))
            }
        }
    }

    /// Normalized third-kind differential with poles at `q1`, `q2`.
    pub fn third_kind(&self, q1: SurfacePoint, q2: SurfacePoint) -> Result<ThirdKind> {
        if q1 == q2 {
            return Err(Error::InvalidArgument(
                "third-kind differential needs q1 != q2".into(),
            ));
        }
        let a = self.nu_a_periods(q1)? - self.nu_a_periods(q2)?;
        // Σ_j c_j du_j with c = -A(ν_{q1} - ν_{q2}); in monomials d = Cᵀ c.
        let correction = self.holo_coeffs().transpose() * (-a);
        Ok(ThirdKind {
            curve: self.curve().clone(),
            q1,
            q2,
            correction,
        })
    }
}

impl ThirdKind {
    pub fn poles(&self) -> (SurfacePoint, SurfacePoint) {
        (self.q1, self.q2)
    }

    /// `dS / dx` at a finite point.
    pub fn eval(&self, p: SurfacePoint) -> Result<Complex64> {
        let SurfacePoint::Finite { x, sheet } = p else {
            return Err(Error::InvalidArgument(
                "dS/dx is evaluated at finite points".into(),
            ));
        };
        let y = self.curve.y(x, sheet);
        let mut v = nu(&self.curve, self.q1, x, y) - nu(&self.curve, self.q2, x, y);
        for (k, d) in self.correction.iter().enumerate() {
            v += d * x.powi(k as i32) / y;
        }
        Ok(v)
    }
}

/// `dh_z(p)/dx = Σ_i ∂_i θ_z(0) du_i(p)/dx`.
pub fn dh_z(ctx: &ThetaContext, pd: &PeriodData, x: Complex64, sheet: Sheet) -> Complex64 {
    ctx.grad_char_zero().dot(&pd.du(x, sheet))
}

/// Prime form `E(p, q) = θ_z(u(p) - u(q)) / √(dh_z(p) dh_z(q))` against the
/// local coordinate `x` at finite points.
pub fn prime_form(
    ctx: &ThetaContext,
    pd: &PeriodData,
    p: SurfacePoint,
    q: SurfacePoint,
) -> Result<Complex64> {
    let (Some(xp), Some(xq)) = (p.x(), q.x()) else {
        return Err(Error::InvalidArgument(
            "prime form is evaluated at finite points".into(),
        ));
    };
    let hp = dh_z(ctx, pd, xp, p.sheet());
    let hq = dh_z(ctx, pd, xq, q.sheet());
    if hp.norm() < 1e-12 || hq.norm() < 1e-12 {
        return Err(Error::ThetaDivisor(format!(
            "dh_z vanishes at {xp} or {xq}"
        )));
    }
    let d = pd.abel(p)? - pd.abel(q)?;
    Ok(ctx.theta_char(&d) / (hp * hq).sqrt())
}

/// `d/dx ln(E(p, q1) / E(p, q2))` at finite `p`.
pub fn dlog_prime_ratio(
    ctx: &ThetaContext,
    pd: &PeriodData,
    p: SurfacePoint,
    q1: SurfacePoint,
    q2: SurfacePoint,
) -> Result<Complex64> {
    let Some(x) = p.x() else {
        return Err(Error::InvalidArgument("p must be finite".into()));
    };
    let up = pd.abel(p)?;
    let g1 = ctx.grad_ln_theta_char(&(&up - pd.abel(q1)?));
    let g2 = ctx.grad_ln_theta_char(&(&up - pd.abel(q2)?));
    Ok((g1 - g2).dot(&pd.du(x, p.sheet())))
}

/// `γ = lim_{p→∞_+} x(p) θ_z(u(p)) / θ_z(u(p) - u(∞_-))`.
pub fn gamma(ctx: &ThetaContext, pd: &PeriodData) -> Complex64 {
    // Near ∞_+, u_j(p) ≈ -C_{j,g-1} / x.
    let g = pd.genus();
    let lead = pd.holo_coeffs().column(g - 1).into_owned();
    let num = -ctx.grad_char_zero().dot(&lead);
    let den = ctx.theta_char(&(-pd.abel_infinity_difference()));
    num / den
}

/// `ln(Λ(p)/γ) = ln θ_z(u(p) - u(∞_-)) - ln θ_z(u(p))` from the Abel image `u(p)`.
pub fn ln_lambda_over_gamma(
    ctx: &ThetaContext,
    pd: &PeriodData,
    u: &DVector<Complex64>,
) -> Complex64 {
    ctx.ln_theta_char(&(u - pd.abel_infinity_difference())) - ctx.ln_theta_char(u)
}

/// `H(p) = θ_z(u(p) - u(∞_-)) θ_z(-u(p̄)) / (θ_z(u(p) - u(p̄)) θ_z(-u(∞_-)))`,
/// the cross-ratio `E(p,∞_-) E(∞_+,p̄) / (E(p,p̄) E(∞_+,∞_-))`.
pub fn h_factor(
    ctx: &ThetaContext,
    pd: &PeriodData,
    up: &DVector<Complex64>,
    upbar: &DVector<Complex64>,
) -> Complex64 {
    let uinf = pd.abel_infinity_difference();
    let ln = ctx.ln_theta_char(&(up - &uinf)) + ctx.ln_theta_char(&(-upbar))
        - ctx.ln_theta_char(&(up - upbar))
        - ctx.ln_theta_char(&(-uinf));
    ln.exp()
}
