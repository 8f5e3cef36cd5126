//! Endpoint equations and their damped Newton solution.

use nalgebra::{DMatrix, DVector};

use super::{optimize_fillings, Charge, EquilibriumMeasure, FillingOptimum};
use crate::error::{Error, Result};
use crate::potential::Potential;

/// Residuals of the endpoint equations: `s + 1` large-x conditions, then
/// `s - 1` filling conditions for the first `s - 1` cuts.
fn residual(
    pot: &Potential,
    t: f64,
    e: &[f64],
    fillings: &[f64],
    charge: Option<Charge>,
) -> Result<Vec<f64>> {
    let s = e.len() / 2;
    let meas = EquilibriumMeasure::assemble(pot, t, e, charge)?;
    let series = super::laurent_coefficients(&pot.derivative_coeffs(), e, s + 1);
    let (hq, xi) = match charge {
        Some(c) => (c.h / meas.charge_sqrt, c.xi),
        None => (0.0, 0.0),
    };
    let mut out = Vec::with_capacity(2 * s);
    for k in 1..=s {
        out.push(series.get(-(k as isize)) + hq * xi.powi(k as i32 - 1));
    }
    let h = charge.map_or(0.0, |c| c.h);
    out.push(series.get(-(s as isize) - 1) + hq * xi.powi(s as i32) - h - 2.0 * t);
    for (i, eps) in fillings.iter().take(s - 1).enumerate() {
        out.push(meas.fillings[i] - eps);
    }
    Ok(out)
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton with a central-difference Jacobian.
pub(crate) fn newton(
    x0: Vec<f64>,
    f: impl Fn(&[f64]) -> Result<Vec<f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = x0.len();
    let mut x = x0;
    let mut fx = f(&x)?;
    let mut history = vec![max_norm(&fx)];
    for _ in 0..max_iter {
        let norm = max_norm(&fx);
        if norm < tol {
            return Ok(x);
        }
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let step = 1e-7 * x[j].abs().max(1.0);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += step;
            xm[j] -= step;
            let (col, denom) = match (f(&xp), f(&xm)) {
                (Ok(p), Ok(m)) => (
                    p.iter().zip(&m).map(|(a, b)| a - b).collect::<Vec<_>>(),
                    2.0 * step,
                ),
                (Ok(p), Err(_)) => (p.iter().zip(&fx).map(|(a, b)| a - b).collect(), step),
                (Err(_), Ok(m)) => (fx.iter().zip(&m).map(|(a, b)| a - b).collect(), step),
                (Err(e), Err(_)) => return Err(e),
            };
            for i in 0..n {
                jac[(i, j)] = col[i] / denom;
            }
        }
        let rhs = -DVector::from_vec(fx.clone());
        let Some(dx) = jac.lu().solve(&rhs) else {
            return Err(Error::Newton {
                iters: history.len(),
                residual: norm,
                residuals: history,
            });
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-4 {
            let trial: Vec<f64> = x
                .iter()
                .zip(dx.iter())
                .map(|(a, d)| a + lambda * d)
                .collect();
            if let Ok(ft) = f(&trial) {
                if l2_norm(&ft) < (1.0 - 1e-4 * lambda) * l2_norm(&fx) {
                    x = trial;
                    fx = ft;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        history.push(max_norm(&fx));
        if !accepted {
            // Stagnation at round-off level counts as convergence.
            if norm < tol * 1e3 {
                return Ok(x);
            }
            return Err(Error::Newton {
                iters: history.len(),
                residual: norm,
                residuals: history,
            });
        }
    }
    let residual = max_norm(&fx);
    if residual < tol * 1e3 {
        return Ok(x);
    }
    Err(Error::Newton {
        iters: max_iter,
        residual,
        residuals: history,
    })
}

fn tolerance(pot: &Potential, t: f64) -> f64 {
    let scale = pot.coeffs().iter().fold(t, |m, c| m.max(c.abs()));
    1e-13 * scale
}

/// One-cut endpoints by continuation from `x²/2`, without the positivity check.
fn one_cut_endpoints(pot: &Potential, t: f64) -> Result<Vec<f64>> {
    let target = pot.coeffs();
    let blend = |lambda: f64| -> Potential {
        let mut c = vec![0.0; target.len().max(3)];
        c[2] = 0.5 * (1.0 - lambda);
        for (k, g) in target.iter().enumerate() {
            c[k] += lambda * g;
        }
        Potential::new(c).expect("blend of valid potentials is valid")
    };
    let mut e = vec![-2.0 * t.sqrt(), 2.0 * t.sqrt()];
    let mut lambda: f64 = 0.0;
    let mut step: f64 = 0.1;
    while lambda < 1.0 {
        let next = (lambda + step).min(1.0);
        let v = blend(next);
        let tol = tolerance(&v, t);
        match newton(e.clone(), |x| residual(&v, t, x, &[], None), tol, 60) {
            Ok(sol) => {
                e = sol;
                lambda = next;
                step = (step * 1.5).min(0.25);
            }
            Err(err) => {
                step *= 0.5;
                if step < 1e-4 {
                    return Err(err);
                }
            }
        }
    }
    Ok(e)
}

/// One-cut equilibrium measure. Fails with a negative-density diagnostic when
/// the support is not a single interval.
pub fn solve_one_cut(pot: &Potential, t: f64) -> Result<EquilibriumMeasure> {
    check_t(t)?;
    let e = one_cut_endpoints(pot, t)?;
    let meas = EquilibriumMeasure::assemble(pot, t, &e, None)?;
    meas.check_positive()?;
    Ok(meas)
}

fn check_t(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidArgument(format!("T = {t} must be positive")));
    }
    Ok(())
}

/// Initial endpoints for `s` cuts from the sign structure of the one-cut density.
pub(crate) fn initial_endpoints(pot: &Potential, t: f64, s: usize) -> Result<Vec<f64>> {
    let e1 = one_cut_endpoints(pot, t)?;
    if s == 1 {
        return Ok(e1);
    }
    let one = EquilibriumMeasure::assemble(pot, t, &e1, None)?;
    let (a, b) = (e1[0], e1[1]);
    let n = 4000;
    let mut gaps: Vec<(f64, f64)> = Vec::new();
    let mut start: Option<f64> = None;
    for k in 1..n {
        let x = a + (b - a) * k as f64 / n as f64;
        let negative = one.density_factor(0, x) < 0.0;
        match (negative, start) {
            (true, None) => start = Some(x),
            (false, Some(x0)) => {
                gaps.push((x0, x));
                start = None;
            }
            _ => {}
        }
    }
    if gaps.len() < s - 1 {
        // No usable sign structure: split the interval evenly.
        let w = (b - a) / s as f64;
        gaps = (1..s)
            .map(|k| (a + w * (k as f64 - 0.05), a + w * (k as f64 + 0.05)))
            .collect();
    } else {
        gaps.sort_by(|p, q| (q.1 - q.0).total_cmp(&(p.1 - p.0)));
        gaps.truncate(s - 1);
        gaps.sort_by(|p, q| p.0.total_cmp(&q.0));
    }
    let mut e = vec![a];
    for (lo, hi) in gaps {
        e.push(lo);
        e.push(hi);
    }
    e.push(b);
    Ok(e)
}

/// Multi-cut measure with prescribed fillings (`s` positive entries summing to `T`).
pub fn solve_multi_cut(
    pot: &Potential,
    t: f64,
    s: usize,
    fillings: &[f64],
    init: Option<&[f64]>,
) -> Result<EquilibriumMeasure> {
    check_t(t)?;
    check_shape(pot, s)?;
    if fillings.len() != s {
        return Err(Error::InvalidArgument(format!(
            "{s} cuts need {s} fillings, got {}",
            fillings.len()
        )));
    }
    if fillings.iter().any(|&f| f <= 0.0) || (fillings.iter().sum::<f64>() - t).abs() > 1e-9 * t {
        return Err(Error::InvalidArgument(
            "fillings must be positive and sum to T".into(),
        ));
    }
    let e0 = match init {
        Some(e) => e.to_vec(),
        None => initial_endpoints(pot, t, s)?,
    };
    let e = solve_endpoints(pot, t, e0, fillings, None)?;
    let meas = EquilibriumMeasure::assemble(pot, t, &e, None)?;
    meas.check_positive()?;
    Ok(meas)
}

fn check_shape(pot: &Potential, s: usize) -> Result<()> {
    if s == 0 || s > pot.degree() - 1 {
        return Err(Error::InvalidArgument(format!(
            "a degree-{} potential supports 1..={} cuts, asked for {s}",
            pot.degree(),
            pot.degree() - 1
        )));
    }
    Ok(())
}

/// `(e_0, ln(e_1 - e_0), ..., ln(e_{2s-1} - e_{2s-2}))`: keeps the endpoints
/// ordered and scales each Newton step to the local separation.
fn to_log_gaps(e: &[f64]) -> Vec<f64> {
    std::iter::once(e[0])
        .chain(e.windows(2).map(|w| (w[1] - w[0]).max(1e-300).ln()))
        .collect()
}

fn from_log_gaps(z: &[f64]) -> Vec<f64> {
    let mut e = Vec::with_capacity(z.len());
    e.push(z[0]);
    for w in &z[1..] {
        let last = e[e.len() - 1];
        e.push(last + w.exp());
    }
    e
}

/// Newton on the endpoint equations in log-gap coordinates.
fn newton_endpoints(
    pot: &Potential,
    t: f64,
    e0: &[f64],
    fillings: &[f64],
    charge: Option<Charge>,
    tol: f64,
) -> Result<Vec<f64>> {
    let z = newton(
        to_log_gaps(e0),
        |z| residual(pot, t, &from_log_gaps(z), fillings, charge),
        tol,
        80,
    )?;
    Ok(from_log_gaps(&z))
}

/// Newton on the endpoint equations. When the direct solve from `e0` fails,
/// the fillings are continued from those of `e0` itself.
fn solve_endpoints(
    pot: &Potential,
    t: f64,
    e0: Vec<f64>,
    fillings: &[f64],
    charge: Option<Charge>,
) -> Result<Vec<f64>> {
    let tol = tolerance(pot, t);
    let direct = newton_endpoints(pot, t, &e0, fillings, charge, tol);
    if direct.is_ok() || e0.len() == 2 {
        return direct;
    }
    // Continuation in the fillings: first solve the s+1 large-x conditions
    // with the current fillings of e0 held, then move them to the target.
    let start = EquilibriumMeasure::assemble(pot, t, &e0, charge)?;
    let mut eps0: Vec<f64> = start.fillings.iter().map(|f| f.max(1e-3)).collect();
    let total: f64 = eps0.iter().sum();
    eps0.iter_mut().for_each(|f| *f *= t / total);
    let mut e = e0;
    let mut lambda: f64 = 0.0;
    let mut step: f64 = 0.25;
    while lambda < 1.0 {
        let next = (lambda + step).min(1.0);
        let eps: Vec<f64> = eps0
            .iter()
            .zip(fillings)
            .map(|(a, b)| a + next * (b - a))
            .collect();
        match newton_endpoints(pot, t, &e, &eps, charge, tol) {
            Ok(sol) => {
                e = sol;
                lambda = next;
                step = (step * 1.5).min(0.5);
            }
            Err(err) => {
                step *= 0.5;
                if step < 1e-3 {
                    return Err(err);
                }
            }
        }
    }
    Ok(e)
}

/// Follows a multi-cut solution from `from`'s potential to `pot` along the
/// straight line between their coefficients, at `from`'s fillings. Useful
/// where a direct solve has no good starting point, e.g. nearly merged cuts.
pub fn continue_potential(
    from: &EquilibriumMeasure,
    pot: &Potential,
) -> Result<EquilibriumMeasure> {
    let t = from.temperature();
    let fillings = from.fillings().to_vec();
    let c0 = from.potential().coeffs();
    let c1 = pot.coeffs();
    let blend = |lambda: f64| -> Result<Potential> {
        let n = c0.len().max(c1.len());
        let c = (0..n)
            .map(|k| {
                let a = c0.get(k).copied().unwrap_or(0.0);
                let b = c1.get(k).copied().unwrap_or(0.0);
                a + lambda * (b - a)
            })
            .collect();
        Potential::new(c)
    };
    let mut z = to_log_gaps(from.endpoints());
    let mut prev: Option<(f64, Vec<f64>)> = None;
    let mut lambda: f64 = 0.0;
    let mut step: f64 = 0.1;
    while lambda < 1.0 {
        let next = (lambda + step).min(1.0);
        let v = blend(next)?;
        // Secant predictor in log-gap coordinates.
        let guess: Vec<f64> = match &prev {
            Some((l0, z0)) => z
                .iter()
                .zip(z0)
                .map(|(a, b)| a + (a - b) * (next - lambda) / (lambda - l0))
                .collect(),
            None => z.clone(),
        };
        let tol = tolerance(&v, t);
        // Nearly merged cuts admit spurious solutions with a zero of M inside
        // a cut; those are rejected like a failed step.
        let sol = newton(
            guess,
            |x| residual(&v, t, &from_log_gaps(x), &fillings, None),
            tol,
            40,
        )
        .and_then(|zn| {
            EquilibriumMeasure::assemble(&v, t, &from_log_gaps(&zn), None)?.check_positive()?;
            Ok(zn)
        });
        match sol {
            Ok(zn) => {
                prev = Some((lambda, std::mem::replace(&mut z, zn)));
                lambda = next;
                step = (step * 1.5).min(0.25);
            }
            Err(err) => {
                step *= 0.5;
                if step < 1e-6 {
                    return Err(err);
                }
            }
        }
    }
    let meas = EquilibriumMeasure::assemble(pot, t, &from_log_gaps(&z), None)?;
    meas.check_positive()?;
    Ok(meas)
}

/// Equilibrium with a logarithmic charge `-h ln(ξ - x)` at fixed fillings of
/// the first `s - 1` cuts, starting from `init` endpoints.
pub fn solve_charged(
    pot: &Potential,
    t: f64,
    fillings: &[f64],
    charge: Charge,
    init: &[f64],
) -> Result<EquilibriumMeasure> {
    check_t(t)?;
    let e = solve_endpoints(pot, t, init.to_vec(), fillings, Some(charge))?;
    EquilibriumMeasure::assemble(pot, t, &e, Some(charge))
}

/// Equilibrium measure with `s` cuts. Without fillings the free energy is
/// minimized over them (multi-cut only).
pub fn solve(
    pot: &Potential,
    t: f64,
    s: usize,
    fillings: Option<&[f64]>,
) -> Result<(EquilibriumMeasure, Option<FillingOptimum>)> {
    check_shape(pot, s)?;
    if s == 1 {
        return Ok((solve_one_cut(pot, t)?, None));
    }
    match fillings {
        Some(f) => Ok((solve_multi_cut(pot, t, s, f, None)?, None)),
        None => {
            let opt = optimize_fillings(pot, t, s)?;
            Ok((opt.measure.clone(), Some(opt)))
        }
    }
}

/// Number of cuts suggested by the sign structure of the one-cut density.
pub fn suggest_cuts(pot: &Potential, t: f64) -> Result<usize> {
    let e1 = one_cut_endpoints(pot, t)?;
    let one = EquilibriumMeasure::assemble(pot, t, &e1, None)?;
    let (a, b) = (e1[0], e1[1]);
    let n = 4000;
    let mut runs = 0;
    let mut inside = false;
    for k in 1..n {
        let x = a + (b - a) * k as f64 / n as f64;
        let negative = one.density_factor(0, x) < 0.0;
        if negative && !inside {
            runs += 1;
        }
        inside = negative;
    }
    Ok((runs + 1).min(pot.degree() - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_solves_a_small_system() {
        let sol = newton(
            vec![1.0, 1.0],
            |x| Ok(vec![x[0] * x[0] - 2.0, x[1] - x[0]]),
            1e-14,
            50,
        )
        .unwrap();
        assert!((sol[0] - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn newton_reports_residual_history() {
        let err = newton(vec![1.0], |x| Ok(vec![x[0] * x[0] + 1.0]), 1e-14, 20).unwrap_err();
        match err {
            Error::Newton { residuals, .. } => assert!(!residuals.is_empty()),
            other => panic!("unexpected {other}"),
        }
    }
}
