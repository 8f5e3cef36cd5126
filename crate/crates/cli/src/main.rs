//! `orthoasym`: exact orthogonal polynomials, equilibrium measures and their
//! large-N asymptotics from a JSON configuration.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 model mismatch (wrong number
//! of cuts, regime), 3 configuration error.

mod commands;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use ortho_asym::RunConfig;

use crate::commands::Ctx;
use crate::output::Sink;

#[derive(Parser, Debug)]
#[command(name = "orthoasym", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    plot: bool,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config precision, in decimal digits.
    #[arg(long, global = true)]
    precision: Option<u32>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Solve for the equilibrium measure: cuts, M, fillings, density.
    Equilibrium,
    /// Exact recurrence coefficients and wave functions.
    Exact,
    /// Asymptotic predictions on the grid.
    Asym,
    /// Exact against asymptotic, with a summary.
    Compare,
    /// Monte Carlo sampling of the eigenvalue gas.
    Sample,
    /// Periods, Abel data and theta ingredients of the spectral curve.
    CurveInfo,
}

/// An error tagged with the exit code it maps to.
#[derive(Debug)]
struct ConfigProblem(String);

impl std::fmt::Display for ConfigProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigProblem {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ortho_asym::Error>() {
            return e.exit_code() as u8;
        }
        if cause.downcast_ref::<ConfigProblem>().is_some() {
            return 3;
        }
    }
    1
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| ConfigProblem("--config <path> is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigProblem(format!("reading {}: {e}", path.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    if cfg.source().seed.is_none() && cli.seed.is_none() {
        eprintln!("seed not set; using 0");
    }
    if let Some(s) = cli.seed {
        cfg = cfg.with_seed(s);
    }
    if let Some(p) = cli.precision {
        cfg = cfg.with_precision(p)?;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load(cli)?;
    let sink = Sink::new(&cli.out, &cfg.to_json(), cfg.seed)?;
    let ctx = Ctx {
        cfg: &cfg,
        sink: &sink,
        plot: cli.plot,
    };
    match cli.command {
        Command::Equilibrium => commands::cmd_equilibrium(&ctx),
        Command::Exact => commands::cmd_exact(&ctx),
        Command::Asym => commands::cmd_asym(&ctx),
        Command::Compare => commands::cmd_compare(&ctx),
        Command::Sample => commands::cmd_sample(&ctx),
        Command::CurveInfo => commands::cmd_curve_info(&ctx),
    }
    .with_context(|| format!("{:?} failed", cli.command))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("orthoasym").chain(args.iter().copied())).unwrap()
    }

    fn with_config(body: &str, command: &str, extra: &[&str]) -> (tempfile::TempDir, Result<()>) {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, body).unwrap();
        let out = dir.path().join("out");
        let mut args = vec![
            command,
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        let r = run(&cli(&args));
        (dir, r)
    }

    const GAUSS: &str =
        r#"{"V": [0, 0, 0.5], "N": 12, "grid": {"min": -3, "max": 3, "count": 25}}"#;

    #[test]
    fn gaussian_cut_table() {
        let (dir, r) = with_config(GAUSS, "equilibrium", &[]);
        r.unwrap();
        let text = std::fs::read_to_string(dir.path().join("out/cuts.csv")).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# orthoasym "));
        assert_eq!(lines.next().unwrap(), "i,a_i,b_i,eps_i");
        let row: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert!((row[1] + 2.0).abs() < 1e-10 && (row[2] - 2.0).abs() < 1e-10);
        let m = std::fs::read_to_string(dir.path().join("out/m_coeffs.csv")).unwrap();
        let last = m.lines().last().unwrap();
        let v: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn wrong_cut_count_is_a_model_mismatch() {
        let body = r#"{"V": [0, 0, -2, 0, 0.25], "N": 10, "grid": [0], "cuts_hint": 1}"#;
        let (_dir, r) = with_config(body, "equilibrium", &[]);
        let err = r.unwrap_err();
        assert_eq!(exit_code(&err), 2);
        assert!(
            format!("{err:#}").contains("negative density at x≈0"),
            "{err:#}"
        );
    }

    #[test]
    fn config_errors_exit_with_three() {
        let (_dir, r) = with_config(r#"{"V": [0, 0, 0.5], "N": 4}"#, "exact", &[]);
        assert_eq!(exit_code(&r.unwrap_err()), 3);
        let r = run(&cli(&["exact", "--config", "/nonexistent/c.json"]));
        assert_eq!(exit_code(&r.unwrap_err()), 3);
    }

    #[test]
    fn compare_summary_for_the_gaussian() {
        let body = r#"{"V": [0, 0, 0.5], "N": 30, "n_values": [29, 30],
                       "grid": {"min": -3, "max": 3, "count": 121}}"#;
        let (dir, r) = with_config(body, "compare", &["--plot"]);
        r.unwrap();
        let s = std::fs::read_to_string(dir.path().join("out/compare_summary.csv")).unwrap();
        let delta: usize = s
            .lines()
            .find(|l| l.starts_with("zero_count_delta_cut0"))
            .and_then(|l| l.split(',').nth(1))
            .unwrap()
            .parse()
            .unwrap();
        assert!(delta <= 1);
        assert!(dir.path().join("out/compare.svg").exists());
        // Outside the cut the predicted ratio column is p_ξ (γ = 1 here).
        let c = std::fs::read_to_string(dir.path().join("out/compare.csv")).unwrap();
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(c.as_bytes());
        let hdr = rdr.headers().unwrap().clone();
        let col = |name: &str| hdr.iter().position(|h| h == name).unwrap();
        let mut checked = 0;
        for rec in rdr.records() {
            let rec = rec.unwrap();
            if &rec[col("regime")] == "outside" && &rec[col("n")] == "30" {
                let xi: f64 = rec[col("xi")].parse().unwrap();
                let ratio: f64 = rec[col("ratio_pred")].parse().unwrap();
                let p = (xi.abs() + (xi * xi - 4.0).sqrt()) / 2.0 * xi.signum();
                assert!((ratio - p).abs() < 1e-10 * p.abs(), "{xi}: {ratio} vs {p}");
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn grid_inside_edge_band_is_rejected() {
        let body = r#"{"V": [0, 0, 0.5], "N": 30, "grid": [2.0, -2.0]}"#;
        let (_dir, r) = with_config(body, "compare", &[]);
        assert_eq!(exit_code(&r.unwrap_err()), 3);
    }

    #[test]
    fn overrides_are_recorded() {
        let (dir, r) = with_config(GAUSS, "exact", &["--seed", "17", "--precision", "35"]);
        r.unwrap();
        let text = std::fs::read_to_string(dir.path().join("out/wave.csv")).unwrap();
        assert!(text.lines().next().unwrap().ends_with("seed=17"));
    }

    #[test]
    fn curve_info_for_two_cuts() {
        let body = r#"{"V": [0, 0, -2, 0, 0.25], "N": 20, "grid": [0], "cuts_hint": 2}"#;
        let (dir, r) = with_config(body, "curve-info", &[]);
        r.unwrap();
        let text = std::fs::read_to_string(dir.path().join("out/curve.csv")).unwrap();
        let tau = text.lines().find(|l| l.starts_with("tau_00")).unwrap();
        let im: f64 = tau.split(',').nth(2).unwrap().parse().unwrap();
        assert!(im > 0.0);
    }
}
