//! Normalized holomorphic differentials, period matrix and Abel map.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{Sheet, SpectralCurve, SurfacePoint};
use crate::error::{Error, Result};
use crate::quad;

/// `√(x - e)` with real `x < e` resolved to the upper or lower side.
fn sqrt_factor(d: Complex64, lower: bool) -> Complex64 {
    if d.im == 0.0 && d.re < 0.0 {
        let m = (-d.re).sqrt();
        if lower {
            Complex64::new(0.0, -m)
        } else {
            Complex64::new(0.0, m)
        }
    } else {
        d.sqrt()
    }
}

/// Holomorphic differentials `du_j = Σ_k C_jk x^k dx / y`, normalized on the
/// A-cycles, with their B-periods `τ` and Abel-map data.
#[derive(Debug, Clone)]
pub struct PeriodData {
    curve: SpectralCurve,
    /// `∮_{A_i} x^k dx / y`.
    a_mono: DMatrix<Complex64>,
    holo: DMatrix<Complex64>,
    tau: DMatrix<Complex64>,
    asymmetry: f64,
    /// Abel map of each branch point along the upper / lower side.
    branch_upper: Vec<DVector<Complex64>>,
    branch_lower: Vec<DVector<Complex64>>,
}

impl PeriodData {
    pub fn new(endpoints: &[f64]) -> Result<Self> {
        Self::from_curve(SpectralCurve::new(endpoints)?)
    }

    pub fn from_curve(curve: SpectralCurve) -> Result<Self> {
        let g = curve.genus();
        let s = curve.s();
        let mut a_mono = DMatrix::zeros(g, g);
        let mut b_mono = DMatrix::zeros(g, g);
        for k in 0..g {
            let mono = |x: f64| Complex64::new(x.powi(k as i32), 0.0);
            for i in 0..g {
                a_mono[(i, k)] = -2.0 * segment(&curve, 2 * i, false, f64::INFINITY, mono);
                let mut b = Complex64::new(0.0, 0.0);
                // Sum of the cycles through the gaps i..s-1.
                for m in (2 * i + 1..2 * s - 2).step_by(2) {
                    b += segment(&curve, m, false, f64::INFINITY, mono);
                }
                b_mono[(i, k)] = -2.0 * b;
            }
        }
        let svd = a_mono.clone().svd(false, false);
        let cond = svd.singular_values.max() / svd.singular_values.min();
        if !cond.is_finite() || cond > 1e12 {
            return Err(Error::Numerical(format!(
                "A-period matrix is ill-conditioned (condition {cond:e}); cuts nearly degenerate"
            )));
        }
        let inv = a_mono
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("A-period matrix is singular".into()))?;
        let holo = inv.transpose();
        let raw = &b_mono * holo.transpose();
        let mut asymmetry = 0.0f64;
        for i in 0..g {
            for j in 0..g {
                asymmetry = asymmetry.max((raw[(i, j)] - raw[(j, i)]).norm());
            }
        }
        if asymmetry > 1e-6 {
            return Err(Error::Numerical(format!(
                "period matrix asymmetry {asymmetry:e}: B-period integration failed"
            )));
        }
        let tau = (&raw + raw.transpose()) * Complex64::new(0.5, 0.0);
        let im = tau.map(|z| z.im);
        if im.clone().cholesky().is_none() {
            return Err(Error::Numerical("Im τ is not positive definite".into()));
        }
        let mut pd = PeriodData {
            curve,
            a_mono,
            holo,
            tau,
            asymmetry,
            branch_upper: Vec::new(),
            branch_lower: Vec::new(),
        };
        pd.fill_branch_abel()?;
        Ok(pd)
    }

    fn fill_branch_abel(&mut self) -> Result<()> {
        let e = self.curve.branch_points().to_vec();
        let n = e.len();
        let last = self.monomial_tail()?;
        let u_bs = -(&self.holo * last);
        let g = self.genus();
        let mut upper = vec![DVector::zeros(g); n];
        let mut lower = vec![DVector::zeros(g); n];
        upper[n - 1] = u_bs.clone();
        lower[n - 1] = u_bs;
        for k in (0..n - 1).rev() {
            for (side, out) in [(false, &mut upper), (true, &mut lower)] {
                let seg = DVector::from_fn(g, |m, _| {
                    segment(&self.curve, k, side, f64::INFINITY, |x| {
                        Complex64::new(x.powi(m as i32), 0.0)
                    })
                });
                out[k] = &out[k + 1] - &self.holo * seg;
            }
        }
        self.branch_upper = upper;
        self.branch_lower = lower;
        Ok(())
    }

    /// `∫_{b_s}^∞ x^k dx / y` on the physical sheet for `k < g`.
    fn monomial_tail(&self) -> Result<DVector<Complex64>> {
        let e = self.curve.branch_points();
        let n = e.len();
        let big = 10.0 * e.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        let g = self.genus();
        let s = self.curve.s();
        let mut out = DVector::zeros(g);
        for k in 0..g {
            let mono = |x: Complex64| x.powi(k as i32);
            let near = line_from_branch(&self.curve, n - 1, Complex64::new(big, 0.0), mono)?;
            // x = 1/t on [big, ∞).
            let far = quad::gauss_legendre(0.0, 1.0 / big, 40, |t: f64| {
                let mut den = 1.0;
                for &ej in e {
                    den *= (1.0 - ej * t).sqrt();
                }
                t.powi((s - k - 2) as i32) / den
            });
            out[k] = near + far;
        }
        Ok(out)
    }

    pub fn curve(&self) -> &SpectralCurve {
        &self.curve
    }

    pub fn genus(&self) -> usize {
        self.curve.genus()
    }

    /// `C` with `du_j = Σ_k C_jk x^k dx / y`.
    pub fn holo_coeffs(&self) -> &DMatrix<Complex64> {
        &self.holo
    }

    pub fn tau(&self) -> &DMatrix<Complex64> {
        &self.tau
    }

    /// `max |τ_ij - τ_ji|` before symmetrization.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    /// `∮_{A_i} x^k dx / y`.
    pub fn monomial_a_periods(&self) -> &DMatrix<Complex64> {
        &self.a_mono
    }

    /// `max |∮_{A_i} du_j - δ_ij|` from the stored monomial periods.
    pub fn normalization_residual(&self) -> f64 {
        let m = &self.a_mono * self.holo.transpose();
        let g = self.genus();
        let mut r = 0.0f64;
        for i in 0..g {
            for j in 0..g {
                let d = if i == j { 1.0 } else { 0.0 };
                r = r.max((m[(i, j)] - d).norm());
            }
        }
        r
    }

    /// `du_j / dx` at a finite point.
    pub fn du(&self, x: Complex64, sheet: Sheet) -> DVector<Complex64> {
        let y = self.curve.y(x, sheet);
        let g = self.genus();
        let mono = DVector::from_fn(g, |k, _| x.powi(k as i32) / y);
        &self.holo * mono
    }

    /// `∮_{A_i} f(x) dx / y` for every `i < g`, with `f` regular on the cuts.
    /// `sing` is the distance from the cuts to the nearest singularity of `f`.
    pub fn a_periods_of(&self, sing: f64, f: impl Fn(f64) -> Complex64) -> DVector<Complex64> {
        DVector::from_fn(self.genus(), |i, _| {
            -2.0 * segment(&self.curve, 2 * i, false, sing, &f)
        })
    }

    /// Abel map `u(b_s)`.
    pub fn abel_bs(&self) -> DVector<Complex64> {
        self.branch_upper[self.branch_upper.len() - 1].clone()
    }

    /// Abel map of branch point `k` along the upper or lower side.
    pub fn abel_branch(&self, k: usize, lower: bool) -> DVector<Complex64> {
        if lower {
            self.branch_lower[k].clone()
        } else {
            self.branch_upper[k].clone()
        }
    }

    /// Abel map `u(p) = ∫_{∞_+}^p du` along the canonical path.
    pub fn abel(&self, p: SurfacePoint) -> Result<DVector<Complex64>> {
        match p {
            SurfacePoint::Infinity(Sheet::Physical) => Ok(DVector::zeros(self.genus())),
            SurfacePoint::Infinity(Sheet::Second) => Ok(self.abel_bs() * Complex64::new(2.0, 0.0)),
            SurfacePoint::Finite { x, sheet } => {
                let lower = x.im < 0.0 || (x.im == 0.0 && x.im.is_sign_negative());
                let k = self.curve.nearest_branch(x);
                let base = self.abel_branch(k, lower);
                let g = self.genus();
                let mut line = DVector::zeros(g);
                for m in 0..g {
                    line[m] = line_from_branch(&self.curve, k, x, |z| z.powi(m as i32))?;
                }
                let phys = base + &self.holo * line;
                Ok(match sheet {
                    Sheet::Physical => phys,
                    Sheet::Second => self.abel_bs() * Complex64::new(2.0, 0.0) - phys,
                })
            }
        }
    }

    /// `u(∞_-) - u(∞_+) = 2u(b_s)`.
    pub fn abel_infinity_difference(&self) -> DVector<Complex64> {
        self.abel_bs() * Complex64::new(2.0, 0.0)
    }

    /// Reduces `u` modulo the lattice `Z^g + τ Z^g` so that the coordinates
    /// `u = a + τ b` satisfy `a, b ∈ [-½, ½)`; returns the reduced vector and `b`'s shift.
    pub fn reduce(&self, u: &DVector<Complex64>) -> (DVector<Complex64>, DVector<f64>) {
        let im = self.tau.map(|z| z.im);
        let inv = im.try_inverse().expect("Im τ is positive definite");
        let b = &inv * u.map(|z| z.im);
        let kb = b.map(f64::round);
        let shifted = u - &self.tau * kb.map(|v| Complex64::new(v, 0.0));
        let ka = shifted.map(|z| z.re.round());
        (shifted - ka.map(|v| Complex64::new(v, 0.0)), kb)
    }
}

/// `∫_{e_k}^{e_{k+1}} f(x) dx / √σ(x ± i0)` by Gauss–Chebyshev, with the order
/// grown as other branch points (or a singularity of `f` at distance `sing`) approach.
pub(crate) fn segment(
    curve: &SpectralCurve,
    k: usize,
    lower: bool,
    sing: f64,
    f: impl Fn(f64) -> Complex64,
) -> Complex64 {
    let e = curve.branch_points();
    let (l, h) = (e[k], e[k + 1]);
    let len = h - l;
    let mut gap = sing;
    for (j, &ej) in e.iter().enumerate() {
        if j != k && j != k + 1 {
            gap = gap.min((ej - l).abs().min((ej - h).abs()));
        }
    }
    let ratio = (gap / len).max(1e-12);
    let n = ((40.0 / ratio.sqrt()) as usize).clamp(96, 60_000);
    // Branch points above the segment each contribute ±i.
    let above = (e.len() - 1 - k) as u32;
    let unit = if lower {
        -Complex64::i()
    } else {
        Complex64::i()
    };
    let phase = unit.powu(above);
    let integral = quad::chebyshev_first(l, h, n, |x| {
        let mut den = 1.0;
        for (j, &ej) in e.iter().enumerate() {
            if j != k && j != k + 1 {
                den *= (x - ej).abs().sqrt();
            }
        }
        f(x) / den
    });
    integral / phase
}

/// `∫_{e_k}^{z} f(x) dx / √σ(x)` along the straight segment, with
/// `x = e_k + (z - e_k) u²` absorbing the square root at `e_k`. Real `z` uses
/// the upper side unless `Im z` is `-0.0`; complex `z` must not be separated
/// from `e_k` by a cut.
pub(crate) fn line_from_branch(
    curve: &SpectralCurve,
    k: usize,
    z: Complex64,
    f: impl Fn(Complex64) -> Complex64,
) -> Result<Complex64> {
    let e = curve.branch_points();
    let ek = e[k];
    let lower = z.im < 0.0 || (z.im == 0.0 && z.im.is_sign_negative());
    let d = z - ek;
    if d.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let r0 = sqrt_factor(d, lower);
    let real = z.im == 0.0;
    let integrand = |u: f64| {
        let x = if real {
            Complex64::new(ek + d.re * u * u, if lower { -0.0 } else { 0.0 })
        } else {
            ek + d * (u * u)
        };
        let mut rest = Complex64::new(1.0, 0.0);
        for (j, &ej) in e.iter().enumerate() {
            if j != k {
                rest *= sqrt_factor(x - ej, lower);
            }
        }
        f(x) * 2.0 * r0 / rest
    };
    let magnitude = integrand(0.5).norm().max(1e-300);
    quad::adaptive(0.0, 1.0, 1e-14 * magnitude, integrand)
}
