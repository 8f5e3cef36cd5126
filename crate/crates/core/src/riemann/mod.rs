//! Hyperelliptic spectral curve `y² = σ(x)` of a multi-cut equilibrium
//! measure: holomorphic differentials, periods, Abel map, theta functions,
//! prime form, third-kind differentials and the multi-cut asymptotics.
//!
//! Conventions (all fixed numerically, see the tests):
//!
//! * `y = √σ` on the physical sheet with the branch of
//!   [`crate::equilibrium::sqrt_sigma`]; `∞_+` is the point at infinity of the
//!   physical sheet (`y ~ x^s`), `∞_-` that of the second sheet.
//! * `A_i` (`i < g`) encircles cut `i` counterclockwise on the physical sheet.
//! * `B_i` is the sum of the cycles through the gaps `i, ..., s-1`; the cycle
//!   through a gap runs from one cut to the next on the physical sheet and
//!   returns on the second, so `A_i · B_j = δ_ij`.
//! * The Abel map is based at `∞_+`. Its path from `∞_+` runs along the real
//!   axis to `b_s`, then along the upper (lower) side of the real axis to the
//!   branch point nearest to `x`, then straight to `x` in the upper (lower)
//!   half plane. Second-sheet points use `u(p̄) = 2u(b_s) - u(p)`.

mod differentials;
mod multicut;
mod periods;
mod theta;

use num_complex::Complex64;

pub use differentials::{dh_z, dlog_prime_ratio, prime_form, ThirdKind};
pub use multicut::MultiCutAsymptotics;
pub use periods::PeriodData;
pub use theta::{odd_characteristics, ThetaContext};

use crate::equilibrium::sqrt_sigma;
use crate::error::{Error, Result};

/// Sheet of a point over `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sheet {
    Physical,
    Second,
}

impl Sheet {
    pub fn sign(self) -> f64 {
        match self {
            Sheet::Physical => 1.0,
            Sheet::Second => -1.0,
        }
    }

    pub fn flip(self) -> Sheet {
        match self {
            Sheet::Physical => Sheet::Second,
            Sheet::Second => Sheet::Physical,
        }
    }
}

/// A point of the curve. A real `x` on a cut means the boundary value from
/// above (`x + i0`) on the given sheet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfacePoint {
    Finite { x: Complex64, sheet: Sheet },
    Infinity(Sheet),
}

impl SurfacePoint {
    pub fn physical(x: Complex64) -> Self {
        SurfacePoint::Finite {
            x,
            sheet: Sheet::Physical,
        }
    }

    pub fn second(x: Complex64) -> Self {
        SurfacePoint::Finite {
            x,
            sheet: Sheet::Second,
        }
    }

    pub fn real(x: f64, sheet: Sheet) -> Self {
        SurfacePoint::Finite {
            x: Complex64::new(x, 0.0),
            sheet,
        }
    }

    pub const INF_PLUS: SurfacePoint = SurfacePoint::Infinity(Sheet::Physical);
    pub const INF_MINUS: SurfacePoint = SurfacePoint::Infinity(Sheet::Second);

    /// Hyperelliptic involution `p ↦ p̄`.
    pub fn involution(self) -> Self {
        match self {
            SurfacePoint::Finite { x, sheet } => SurfacePoint::Finite {
                x,
                sheet: sheet.flip(),
            },
            SurfacePoint::Infinity(s) => SurfacePoint::Infinity(s.flip()),
        }
    }

    pub fn x(&self) -> Option<Complex64> {
        match self {
            SurfacePoint::Finite { x, .. } => Some(*x),
            SurfacePoint::Infinity(_) => None,
        }
    }

    pub fn sheet(&self) -> Sheet {
        match self {
            SurfacePoint::Finite { sheet, .. } => *sheet,
            SurfacePoint::Infinity(s) => *s,
        }
    }
}

/// `y² = σ(x) = ∏ (x - e_j)` with real, ordered branch points, genus `s - 1 ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCurve {
    e: Vec<f64>,
}

impl SpectralCurve {
    pub fn new(endpoints: &[f64]) -> Result<Self> {
        if endpoints.len() < 4 || !endpoints.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "a curve of genus >= 1 needs an even number >= 4 of branch points, got {}",
                endpoints.len()
            )));
        }
        crate::equilibrium::CutSet::from_endpoints(endpoints)?;
        Ok(SpectralCurve {
            e: endpoints.to_vec(),
        })
    }

    pub fn branch_points(&self) -> &[f64] {
        &self.e
    }

    pub fn s(&self) -> usize {
        self.e.len() / 2
    }

    pub fn genus(&self) -> usize {
        self.s() - 1
    }

    /// Cut containing real `x`, if any.
    pub fn cut_of(&self, x: f64) -> Option<usize> {
        (0..self.s()).find(|&i| self.e[2 * i] <= x && x <= self.e[2 * i + 1])
    }

    /// `y` at a finite point, using boundary values from above on the cuts
    /// (and from below when `Im x` is `-0.0`).
    pub fn y(&self, x: Complex64, sheet: Sheet) -> Complex64 {
        sheet.sign() * self.sqrt_sigma_side(x, x.im.is_sign_negative())
    }

    /// `√σ` on the physical sheet; for real `x` the boundary value from the
    /// requested side.
    pub(crate) fn sqrt_sigma_side(&self, x: Complex64, lower: bool) -> Complex64 {
        if x.im == 0.0 {
            crate::equilibrium::sqrt_sigma_boundary(&self.e, x.re, !lower)
        } else {
            sqrt_sigma(&self.e, x)
        }
    }

    /// Branch point nearest to `x`, by index.
    pub(crate) fn nearest_branch(&self, x: Complex64) -> usize {
        let mut best = (0, f64::INFINITY);
        for (k, &e) in self.e.iter().enumerate() {
            let d = (x - e).norm();
            if d < best.1 {
                best = (k, d);
            }
        }
        best.0
    }

    /// Smallest distance between two branch points.
    pub fn min_separation(&self) -> f64 {
        self.e
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}
