use std::f64::consts::PI;

use anyhow::{Context, Result};
use num_complex::Complex64;
use ortho_asym::compare::{compare_grid, summarize, Predictor};
use ortho_asym::equilibrium::{solve, suggest_cuts, FillingOptimum};
use ortho_asym::riemann::{MultiCutAsymptotics, PeriodData};
use ortho_asym::sampler::{exact_bin_expectations, sample_gas, SamplerOptions};
use ortho_asym::{EquilibriumMeasure, ExactEngine, Potential, RegimeTag, RunConfig};

use crate::output::{num, opt, Sink, Table};
use crate::plot::{self, Bars, Series};

pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub sink: &'a Sink,
    pub plot: bool,
}

fn log(msg: impl AsRef<str>) {
    eprintln!("{}", msg.as_ref());
}

/// Solved measure for the configured (or suggested) number of cuts.
fn equilibrium(cfg: &RunConfig) -> Result<(EquilibriumMeasure, Option<FillingOptimum>)> {
    let s = match cfg.cuts_hint {
        Some(s) => s,
        None => {
            let s = suggest_cuts(&cfg.potential, cfg.t)?;
            log(format!(
                "cuts_hint not set; density sign structure suggests s = {s}"
            ));
            s
        }
    };
    Ok(solve(&cfg.potential, cfg.t, s, cfg.fillings.as_deref())?)
}

/// `ζ = i ∂F/∂ε / 2π`, real part; exact at the optimum, approximate for imposed fillings.
fn zeta(meas: &EquilibriumMeasure, opt: Option<&FillingOptimum>) -> Vec<f64> {
    match opt {
        Some(o) => o.zeta.clone(),
        None if meas.s() > 1 => meas
            .free_energy_gradient()
            .iter()
            .map(|g| (Complex64::i() * g / (2.0 * PI)).re)
            .collect(),
        None => Vec::new(),
    }
}

fn engine(cfg: &RunConfig, pot: &Potential, n_weight: usize, n_max: usize) -> Result<ExactEngine> {
    Ok(ExactEngine::new(
        pot,
        n_weight,
        n_max,
        cfg.precision_digits,
    )?)
}

pub fn cmd_equilibrium(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let (meas, optimum) = equilibrium(cfg)?;
    let mut cuts = Table::new(&["i", "a_i", "b_i", "eps_i"]);
    for (i, (&(a, b), eps)) in meas.cuts().cuts().iter().zip(meas.fillings()).enumerate() {
        cuts.push(vec![i.to_string(), num(a), num(b), num(*eps)]);
    }
    ctx.sink.write_table("cuts.csv", &cuts)?;

    let mut m = Table::new(&["k", "m_k"]);
    for (k, c) in meas.m_coeffs().iter().enumerate() {
        m.push(vec![k.to_string(), num(*c)]);
    }
    ctx.sink.write_table("m_coeffs.csv", &m)?;

    let mut dens = Table::new(&["x", "rho"]);
    for &x in &cfg.grid {
        dens.push(vec![num(x), num(meas.density(x))]);
    }
    ctx.sink.write_table("density.csv", &dens)?;

    let mut residual: f64 = 0.0;
    for &(a, b) in meas.cuts().cuts() {
        for k in 1..=20 {
            residual = residual.max(meas.saddle_residual(a + (b - a) * k as f64 / 21.0)?);
        }
    }
    let mut diag = Table::new(&["key", "value"]);
    diag.push(vec!["cuts".into(), meas.s().to_string()]);
    diag.push(vec!["total_mass".into(), num(meas.total_mass())]);
    diag.push(vec!["max_saddle_residual".into(), num(residual)]);
    for (i, z) in zeta(&meas, optimum.as_ref()).iter().enumerate() {
        diag.push(vec![format!("zeta_{i}"), num(*z)]);
    }
    if let Some(o) = &optimum {
        diag.push(vec!["filling_iterations".into(), o.iterations.to_string()]);
    }
    ctx.sink.write_table("diagnostics.csv", &diag)?;

    let table: Vec<String> = meas
        .cuts()
        .cuts()
        .iter()
        .map(|(a, b)| format!("[{a:.6}, {b:.6}]"))
        .collect();
    println!("cuts: {}", table.join(", "));
    println!("M = {:?}", meas.m_coeffs());
    println!("fillings = {:?}", meas.fillings());

    if ctx.plot {
        let pts = cfg.grid.iter().map(|&x| (x, meas.density(x))).collect();
        let svg = plot::render(
            "equilibrium density",
            None,
            &[Series {
                label: "rho",
                color: "#1f77b4",
                points: pts,
            }],
        );
        ctx.sink.write_text("density.svg", &svg)?;
    }
    Ok(())
}

pub fn cmd_exact(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let n_max = *cfg.n_values.iter().max().expect("nonempty");
    let eng = engine(cfg, &cfg.potential, cfg.n, n_max)?;
    let mut rec = Table::new(&["n", "a_n", "b_n", "log_h_n"]);
    for (n, a, b, lh) in eng.table().rows() {
        rec.push(vec![n.to_string(), num(a), num(b), num(lh)]);
    }
    ctx.sink.write_table("recurrence.csv", &rec)?;

    let mut wave = Table::new(&["xi", "n", "N", "psi", "log_abs_p", "sign_p"]);
    for &n in &cfg.n_values {
        for &x in &cfg.grid {
            let w = eng.eval_wave(n, x)?;
            wave.push(vec![
                num(x),
                n.to_string(),
                cfg.n.to_string(),
                num(w.psi),
                num(w.log_abs_p),
                w.sign_p.to_string(),
            ]);
        }
    }
    ctx.sink.write_table("wave.csv", &wave)?;

    let mut diag = Table::new(&["key", "value"]);
    let refined = eng.rule().refined(&cfg.potential);
    diag.push(vec![
        "orthonormality_residual".into(),
        num(eng.orthonormality_residual(&refined)),
    ]);
    diag.push(vec![
        "quadrature_nodes".into(),
        eng.rule().len().to_string(),
    ]);
    diag.push(vec![
        "precision_digits".into(),
        cfg.precision_digits.to_string(),
    ]);
    ctx.sink.write_table("exact_diagnostics.csv", &diag)?;
    println!("recurrence rows: {}, wave rows: {}", rec.len(), wave.len());
    Ok(())
}

pub fn cmd_asym(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let (meas, optimum) = equilibrium(cfg)?;
    let delta = cfg.edge_delta(&meas);
    let z = zeta(&meas, optimum.as_ref());
    let pred = Predictor::new(meas, &z, cfg.n)?;
    let mut t = Table::new(&[
        "xi",
        "n",
        "N",
        "regime",
        "psi_pred",
        "envelope",
        "phase",
        "p_re",
        "p_im",
        "lambda_re",
        "lambda_im",
        "h_re",
        "h_im",
        "veff_re",
    ]);
    for &n in &cfg.n_values {
        let scale = pred.scale(n)?;
        for &x in &cfg.grid {
            let regime = pred.measure().classify_regime(x, delta);
            let mut row = vec![num(x), n.to_string(), cfg.n.to_string(), regime.label()];
            if regime == RegimeTag::ExcludedEdge {
                row.extend(std::iter::repeat_n(String::new(), 10));
            } else {
                let p = pred.predict_scaled(n, x, delta, scale)?;
                let ing = &p.ingredients;
                row.extend([
                    num(p.psi_pred),
                    num(p.envelope),
                    opt(p.phase),
                    num(ing.p.re),
                    num(ing.p.im),
                    num(ing.lambda.re),
                    num(ing.lambda.im),
                    num(ing.h.re),
                    num(ing.h.im),
                    num(ing.v_eff.re),
                ]);
            }
            t.push(row);
        }
    }
    ctx.sink.write_table("asym.csv", &t)?;
    println!("edge band delta = {delta:e}; rows: {}", t.len());
    Ok(())
}

pub fn cmd_compare(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let (meas, optimum) = equilibrium(cfg)?;
    let delta = cfg.edge_delta(&meas);
    let z = zeta(&meas, optimum.as_ref());
    let pred = Predictor::new(meas, &z, cfg.n)?;
    let n_max = cfg
        .n_values
        .iter()
        .copied()
        .max()
        .expect("nonempty")
        .max(cfg.n);
    let eng = engine(cfg, &cfg.potential, cfg.n, n_max)?;
    let rows = compare_grid(&eng, &pred, &cfg.n_values, &cfg.grid, delta)?;
    let mut t = Table::new(&[
        "xi",
        "n",
        "N",
        "regime",
        "psi_exact",
        "psi_pred",
        "envelope",
        "phase",
        "abs_err",
        "rel_err_or_envelope_err",
        "err_kind",
        "ratio_exact",
        "ratio_pred",
    ]);
    for r in &rows {
        t.push(vec![
            num(r.xi),
            r.n.to_string(),
            r.n_weight.to_string(),
            r.regime.label(),
            num(r.psi_exact),
            opt(r.psi_pred),
            opt(r.envelope),
            opt(r.phase),
            opt(r.abs_err),
            opt(r.err),
            r.err_kind
                .map(|k| k.label().to_string())
                .unwrap_or_default(),
            opt(r.ratio_exact),
            opt(r.ratio_pred),
        ]);
    }
    ctx.sink.write_table("compare.csv", &t)?;

    let summary = summarize(&rows, &eng, &pred, delta)?;
    let mut s = Table::new(&["key", "value"]);
    s.push(vec!["edge_delta".into(), num(delta)]);
    s.push(vec![
        "max_envelope_err".into(),
        num(summary.max_envelope_err),
    ]);
    s.push(vec!["max_ratio_err".into(), opt(summary.max_ratio_err)]);
    for c in &summary.zero_counts {
        s.push(vec![
            format!("zeros_exact_cut{}", c.cut),
            c.exact.len().to_string(),
        ]);
        s.push(vec![
            format!("zeros_pred_cut{}", c.cut),
            c.predicted.len().to_string(),
        ]);
        s.push(vec![
            format!("zero_count_delta_cut{}", c.cut),
            c.delta().to_string(),
        ]);
    }
    ctx.sink.write_table("compare_summary.csv", &s)?;
    println!(
        "max envelope error (outside edge bands): {:e}",
        summary.max_envelope_err
    );
    if let Some(r) = summary.max_ratio_err {
        println!("max ratio error: {r:e}");
    }
    for c in &summary.zero_counts {
        println!(
            "cut {}: zeros exact {} predicted {} (delta {})",
            c.cut,
            c.exact.len(),
            c.predicted.len(),
            c.delta()
        );
    }

    if ctx.plot {
        let at_n: Vec<_> = rows.iter().filter(|r| r.n == cfg.n).collect();
        let rows = if at_n.is_empty() {
            rows.iter().collect()
        } else {
            at_n
        };
        let svg = plot::render(
            &format!("psi_{} exact vs predicted", rows[0].n),
            None,
            &[
                Series {
                    label: "exact",
                    color: "black",
                    points: rows.iter().map(|r| (r.xi, r.psi_exact)).collect(),
                },
                Series {
                    label: "predicted",
                    color: "#d62728",
                    points: rows
                        .iter()
                        .map(|r| (r.xi, r.psi_pred.unwrap_or(f64::NAN)))
                        .collect(),
                },
            ],
        );
        ctx.sink.write_text("compare.svg", &svg)?;
    }
    Ok(())
}

pub fn cmd_sample(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let st = &cfg.sampler;
    let (meas, _) = equilibrium(cfg)?;
    let range = st.range.unwrap_or_else(|| {
        let e = meas.endpoints();
        let (a, b) = (e[0], e[e.len() - 1]);
        let pad = 0.1 * (b - a);
        (a - pad, b + pad)
    });
    let mut opts = SamplerOptions::new(st.n, cfg.t, range, st.bins, meas.cuts().cuts());
    opts.sweeps = st.sweeps;
    opts.burn_in = st.burn_in;
    opts.thin = st.thin;
    opts.chains = st.chains;
    opts.seed = cfg.seed;
    let run = sample_gas(&cfg.potential, &opts)?;

    // The gas at n particles is the weight e^{-n (V/T)}.
    let scaled = Potential::new(cfg.potential.coeffs().iter().map(|c| c / cfg.t).collect())?;
    let digits = cfg.precision_digits.max(2 * st.n as u32);
    let eng = ExactEngine::new(&scaled, st.n, st.n, digits)
        .context("exact kernel for the expected counts")?;
    let exact = exact_bin_expectations(&eng, st.n, &opts.edges)?;
    let recorded = run.recorded as f64;
    let mut h = Table::new(&[
        "bin_lo",
        "bin_hi",
        "count",
        "expected",
        "expected_exact",
        "sigma",
    ]);
    let mut bars = Vec::new();
    for (bin, ex) in run.histogram.iter().zip(&exact) {
        let eq = ortho_asym::quad::composite(bin.lo, bin.hi, 4, 12, |x| meas.density(x));
        let expected = eq * st.n as f64 * recorded;
        h.push(vec![
            num(bin.lo),
            num(bin.hi),
            bin.count.to_string(),
            num(expected),
            num(ex * recorded),
            num(bin.sigma),
        ]);
        bars.push((
            bin.lo,
            bin.hi,
            bin.count as f64 / (recorded * st.n as f64 * (bin.hi - bin.lo)),
        ));
    }
    ctx.sink.write_table("histogram.csv", &h)?;

    let mut c = Table::new(&[
        "chain",
        "seed",
        "stream",
        "acceptance_rate",
        "sweeps",
        "burn_in",
        "thin",
        "step_scale",
        "max_log_weight_drift",
    ]);
    for (k, ch) in run.chains.iter().enumerate() {
        c.push(vec![
            k.to_string(),
            ch.state.rng_seed.to_string(),
            k.to_string(),
            num(ch.state.acceptance_rate()),
            (ch.recorded * st.thin).to_string(),
            st.burn_in.to_string(),
            st.thin.to_string(),
            num(ch.state.step_scale),
            num(ch.max_drift),
        ]);
    }
    ctx.sink.write_table("chains.csv", &c)?;

    let mut o = Table::new(&["region", "fraction", "sigma", "equilibrium"]);
    for (occ, eq) in run.occupation.iter().zip(meas.cut_masses()) {
        o.push(vec![
            occ.region.to_string(),
            num(occ.fraction),
            num(occ.sigma),
            num(eq / cfg.t),
        ]);
    }
    ctx.sink.write_table("occupation.csv", &o)?;
    println!(
        "acceptance {:.3}, recorded configurations {}, max drift {:e}",
        run.acceptance_rate(),
        run.recorded,
        run.max_drift()
    );
    if let Some(d) = run.chain_discrepancy() {
        println!("two-chain max bin discrepancy: {d:.2} sigma");
    }

    if ctx.plot {
        let (lo, hi) = range;
        let pts = (0..=400)
            .map(|k| {
                let x = lo + (hi - lo) * k as f64 / 400.0;
                (x, meas.density(x))
            })
            .collect();
        let svg = plot::render(
            "sampled density vs equilibrium",
            Some(&Bars {
                color: "#1f77b4",
                bars,
            }),
            &[Series {
                label: "rho",
                color: "#d62728",
                points: pts,
            }],
        );
        ctx.sink.write_text("histogram.svg", &svg)?;
    }
    Ok(())
}

pub fn cmd_curve_info(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let (meas, optimum) = equilibrium(cfg)?;
    let mut t = Table::new(&["key", "re", "im"]);
    let e = meas.endpoints().to_vec();
    for (k, v) in e.iter().enumerate() {
        t.push(vec![format!("e_{k}"), num(*v), num(0.0)]);
    }
    t.push(vec!["genus".into(), meas.genus().to_string(), num(0.0)]);
    if meas.genus() == 0 {
        let gamma = (e[1] - e[0]) / 4.0;
        t.push(vec!["gamma".into(), num(gamma), num(0.0)]);
        t.push(vec!["center".into(), num(0.5 * (e[0] + e[1])), num(0.0)]);
    } else {
        let z = zeta(&meas, optimum.as_ref());
        let pd = PeriodData::new(&e)?;
        let g = pd.genus();
        for i in 0..g {
            for j in 0..g {
                let v = pd.tau()[(i, j)];
                t.push(vec![format!("tau_{i}{j}"), num(v.re), num(v.im)]);
            }
        }
        for (i, v) in pd.abel_infinity_difference().iter().enumerate() {
            t.push(vec![format!("u_inf_minus_{i}"), num(v.re), num(v.im)]);
        }
        for (i, v) in pd.abel_bs().iter().enumerate() {
            t.push(vec![format!("u_b_s_{i}"), num(v.re), num(v.im)]);
        }
        for (i, v) in z.iter().enumerate() {
            t.push(vec![format!("zeta_{i}"), num(*v), num(0.0)]);
        }
        t.push(vec![
            "a_normalization_residual".into(),
            num(pd.normalization_residual()),
            num(0.0),
        ]);
        t.push(vec!["tau_asymmetry".into(), num(pd.asymmetry()), num(0.0)]);
        let mc = MultiCutAsymptotics::new(meas.clone(), &z, cfg.n)?;
        let gm = mc.gamma();
        t.push(vec!["gamma".into(), num(gm.re), num(gm.im)]);
        println!("tau = {}", pd.tau());
    }
    ctx.sink.write_table("curve.csv", &t)?;
    println!("genus {}; {} rows written", meas.genus(), t.len());
    Ok(())
}
