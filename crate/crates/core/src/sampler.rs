//! Metropolis sampler of the eigenvalue gas
//! `∏_{i<j} |x_i - x_j|² ∏_i e^{-(n/T) V(x_i)}`.
//!
//! Each chain does single-site moves with a Gaussian proposal. Most proposals
//! are local, with the width tuned during burn-in; a fixed fraction use a wide
//! Gaussian of the size of the support so particles can cross gaps between
//! cuts. Both widths are symmetric, so detailed balance holds for the mixture.
//! Chains run in parallel, each with its own ChaCha stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::ExactEngine;
use crate::potential::Potential;
use crate::quad;

/// Number of batches per chain used for batch-means error bars.
const BATCHES: usize = 50;

/// Moves between full recomputations of the log weight.
const RESYNC_STEPS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerOptions {
    /// Number of particles.
    pub n: usize,
    pub t: f64,
    /// Recorded sweeps summed over all chains.
    pub sweeps: u64,
    /// Burn-in sweeps per chain.
    pub burn_in: u64,
    pub thin: u64,
    pub chains: usize,
    /// Histogram bin edges, increasing.
    pub edges: Vec<f64>,
    /// Boundaries between occupation regions (gap midpoints), increasing.
    pub splits: Vec<f64>,
    /// Width of the wide proposal.
    pub jump_scale: f64,
    /// Probability of a wide proposal.
    pub jump_prob: f64,
    pub seed: u64,
    /// Keep every recorded configuration (needed for [`estimate_char_poly`]).
    pub keep_samples: bool,
}

impl SamplerOptions {
    /// `bins` equal bins on `range`, one occupation region per cut of `cuts`.
    pub fn new(n: usize, t: f64, range: (f64, f64), bins: usize, cuts: &[(f64, f64)]) -> Self {
        let edges = (0..=bins)
            .map(|k| range.0 + (range.1 - range.0) * k as f64 / bins as f64)
            .collect();
        let splits = cuts.windows(2).map(|w| 0.5 * (w[0].1 + w[1].0)).collect();
        SamplerOptions {
            n,
            t,
            sweeps: 1_000_000,
            burn_in: 100_000,
            thin: 10,
            chains: 2,
            edges,
            splits,
            jump_scale: range.1 - range.0,
            jump_prob: 0.05,
            seed: 0,
            keep_samples: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument("need at least 2 particles".into()));
        }
        if self.chains == 0 || self.thin == 0 {
            return Err(Error::InvalidArgument(
                "chains and thin must be >= 1".into(),
            ));
        }
        if self.edges.len() < 2 || self.edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("bin edges must increase".into()));
        }
        if !(self.t > 0.0 && self.jump_scale > 0.0 && (0.0..1.0).contains(&self.jump_prob)) {
            return Err(Error::InvalidArgument(
                "bad temperature or proposal settings".into(),
            ));
        }
        let per_chain = self.sweeps_per_chain();
        if per_chain < self.thin * BATCHES as u64 {
            return Err(Error::InvalidArgument(format!(
                "{per_chain} sweeps per chain is too few for {BATCHES} batches at thinning {}",
                self.thin
            )));
        }
        Ok(())
    }

    fn sweeps_per_chain(&self) -> u64 {
        self.sweeps.div_ceil(self.chains as u64)
    }
}

/// State of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub positions: Vec<f64>,
    pub log_weight: f64,
    pub step_scale: f64,
    pub rng_seed: u64,
    /// Counters since the end of burn-in.
    pub accepted: u64,
    pub proposed: u64,
}

impl ChainState {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.proposed.max(1) as f64
    }
}

/// `-(n/T) Σ V(x_i) + 2 Σ_{i<j} ln|x_i - x_j|`.
pub fn log_weight(pot: &Potential, beta: f64, x: &[f64]) -> f64 {
    let mut acc = -beta * x.iter().map(|&v| pot.eval(v)).sum::<f64>();
    for i in 0..x.len() {
        for j in 0..i {
            acc += 2.0 * (x[i] - x[j]).abs().ln();
        }
    }
    acc
}

/// `Σ_{j≠i} ln|y - x_j| - ln|x_i - x_j|`, via blocked products.
fn log_ratio(x: &[f64], i: usize, y: f64) -> f64 {
    let xi = x[i];
    let mut acc = 0.0;
    let mut prod = 1.0;
    let mut k = 0;
    for (j, &xj) in x.iter().enumerate() {
        if j == i {
            continue;
        }
        prod *= (y - xj) / (xi - xj);
        k += 1;
        if k == 8 {
            acc += prod.abs().ln();
            prod = 1.0;
            k = 0;
        }
    }
    acc + prod.abs().ln()
}

/// Per-chain results.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub state: ChainState,
    /// Histogram counts per batch, `[batch][bin]`.
    pub batch_counts: Vec<Vec<u64>>,
    /// Mean occupation fraction per region, per batch.
    pub batch_occupation: Vec<Vec<f64>>,
    /// Recorded configurations per batch (only with `keep_samples`).
    pub samples: Vec<Vec<Vec<f64>>>,
    /// Largest `|incremental - recomputed|` log weight over any resync window.
    pub max_drift: f64,
    pub recorded: u64,
}

struct Chain<'a> {
    pot: &'a Potential,
    opts: &'a SamplerOptions,
    beta: f64,
    rng: ChaCha8Rng,
    state: ChainState,
    steps_since_sync: u64,
    max_drift: f64,
}

impl<'a> Chain<'a> {
    fn new(pot: &'a Potential, opts: &'a SamplerOptions, index: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(index as u64);
        let lo = opts.edges[0];
        let hi = opts.edges[opts.edges.len() - 1];
        let (lo, hi) = (lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo));
        // Evenly spread start with a small random jitter.
        let n = opts.n;
        let positions: Vec<f64> = (0..n)
            .map(|i| {
                let u = (i as f64 + 0.25 + 0.5 * rng.random::<f64>()) / n as f64;
                lo + (hi - lo) * u
            })
            .collect();
        let beta = opts.n as f64 / opts.t;
        let state = ChainState {
            log_weight: log_weight(pot, beta, &positions),
            positions,
            step_scale: (hi - lo) / (4.0 * n as f64),
            rng_seed: opts.seed,
            accepted: 0,
            proposed: 0,
        };
        Chain {
            pot,
            opts,
            beta,
            rng,
            state,
            steps_since_sync: 0,
            max_drift: 0.0,
        }
    }

    /// One sweep of `n` single-site moves; returns accepted local moves and local proposals.
    fn sweep(&mut self) -> (u64, u64) {
        let n = self.opts.n;
        let mut acc_local = 0;
        let mut prop_local = 0;
        for _ in 0..n {
            let i = self.rng.random_range(0..n);
            let wide = self.rng.random::<f64>() < self.opts.jump_prob;
            let width = if wide {
                self.opts.jump_scale
            } else {
                self.state.step_scale
            };
            let z: f64 = self.rng.sample(StandardNormal);
            let x = &self.state.positions;
            let y = x[i] + width * z;
            let d =
                -self.beta * (self.pot.eval(y) - self.pot.eval(x[i])) + 2.0 * log_ratio(x, i, y);
            let u: f64 = self.rng.random();
            let ok = d >= 0.0 || u < d.exp();
            if ok {
                self.state.positions[i] = y;
                self.state.log_weight += d;
            }
            if !wide {
                prop_local += 1;
                acc_local += ok as u64;
            }
            self.steps_since_sync += 1;
            if self.steps_since_sync >= RESYNC_STEPS {
                self.resync();
            }
        }
        (acc_local, prop_local)
    }

    fn resync(&mut self) {
        let full = log_weight(self.pot, self.beta, &self.state.positions);
        self.max_drift = self.max_drift.max((full - self.state.log_weight).abs());
        self.state.log_weight = full;
        self.steps_since_sync = 0;
    }

    fn burn_in(&mut self) {
        let mut acc = 0;
        let mut prop = 0;
        for k in 1..=self.opts.burn_in {
            let (a, p) = self.sweep();
            acc += a;
            prop += p;
            if k % 100 == 0 && prop > 0 {
                let rate = acc as f64 / prop as f64;
                if rate > 0.5 {
                    self.state.step_scale *= 1.1;
                } else if rate < 0.3 {
                    self.state.step_scale *= 0.9;
                }
                acc = 0;
                prop = 0;
            }
        }
    }

    fn region(&self, x: f64) -> usize {
        self.opts.splits.partition_point(|&s| s <= x)
    }

    fn run(mut self) -> ChainOutput {
        self.burn_in();
        // Drift during burn-in is not part of the reported statistic.
        self.resync();
        self.max_drift = 0.0;
        let opts = self.opts;
        let bins = opts.edges.len() - 1;
        let regions = opts.splits.len() + 1;
        let records = opts.sweeps_per_chain() / opts.thin;
        let per_batch = records / BATCHES as u64;
        let mut batch_counts = vec![vec![0u64; bins]; BATCHES];
        let mut batch_occupation = vec![vec![0.0; regions]; BATCHES];
        let mut samples = vec![Vec::new(); if opts.keep_samples { BATCHES } else { 0 }];
        let lo = opts.edges[0];
        let hi = opts.edges[bins];
        for r in 0..per_batch * BATCHES as u64 {
            for _ in 0..opts.thin {
                let (a, p) = self.sweep();
                self.state.accepted += a;
                self.state.proposed += p;
            }
            let b = (r / per_batch) as usize;
            let mut occ = vec![0usize; regions];
            for &x in &self.state.positions {
                occ[self.region(x)] += 1;
                if (lo..hi).contains(&x) {
                    let k = opts.edges.partition_point(|&e| e <= x) - 1;
                    batch_counts[b][k] += 1;
                }
            }
            for (o, c) in batch_occupation[b].iter_mut().zip(occ) {
                *o += c as f64 / opts.n as f64;
            }
            if opts.keep_samples {
                samples[b].push(self.state.positions.clone());
            }
        }
        for row in &mut batch_occupation {
            for o in row.iter_mut() {
                *o /= per_batch as f64;
            }
        }
        self.resync();
        ChainOutput {
            state: self.state,
            batch_counts,
            batch_occupation,
            samples,
            max_drift: self.max_drift,
            recorded: per_batch * BATCHES as u64,
        }
    }
}

/// One histogram bin of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    /// Batch-means standard error of `count`.
    pub sigma: f64,
}

/// Mean fraction of particles in one occupation region.
#[derive(Debug, Clone, PartialEq)]
pub struct Occupation {
    pub region: usize,
    pub fraction: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone)]
pub struct SampleRun {
    pub chains: Vec<ChainOutput>,
    pub histogram: Vec<HistogramBin>,
    pub occupation: Vec<Occupation>,
    /// Configurations recorded over all chains.
    pub recorded: u64,
}

impl SampleRun {
    pub fn acceptance_rate(&self) -> f64 {
        let acc: u64 = self.chains.iter().map(|c| c.state.accepted).sum();
        let prop: u64 = self.chains.iter().map(|c| c.state.proposed).sum();
        acc as f64 / prop.max(1) as f64
    }

    pub fn max_drift(&self) -> f64 {
        self.chains.iter().map(|c| c.max_drift).fold(0.0, f64::max)
    }

    /// Largest per-bin `|c_0 - c_1| / √(σ_0² + σ_1²)` between the first two
    /// chains, with counts normalized per recorded configuration.
    pub fn chain_discrepancy(&self) -> Option<f64> {
        let [c0, c1] = [self.chains.first()?, self.chains.get(1)?];
        let (m0, s0) = bin_stats(&c0.batch_counts);
        let (m1, s1) = bin_stats(&c1.batch_counts);
        let n0 = c0.recorded as f64;
        let n1 = c1.recorded as f64;
        let mut worst: f64 = 0.0;
        for k in 0..m0.len() {
            let d = (m0[k] / n0 - m1[k] / n1).abs();
            let s = ((s0[k] / n0).powi(2) + (s1[k] / n1).powi(2)).sqrt();
            if s > 0.0 {
                worst = worst.max(d / s);
            } else if d > 0.0 {
                return Some(f64::INFINITY);
            }
        }
        Some(worst)
    }
}

/// Totals and batch-means standard errors of per-batch counts.
fn bin_stats(batches: &[Vec<u64>]) -> (Vec<f64>, Vec<f64>) {
    let bins = batches.first().map_or(0, Vec::len);
    let b = batches.len() as f64;
    let mut total = vec![0.0; bins];
    let mut sigma = vec![0.0; bins];
    for k in 0..bins {
        let vals: Vec<f64> = batches.iter().map(|r| r[k] as f64).collect();
        let mean = vals.iter().sum::<f64>() / b;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1.0);
        total[k] = mean * b;
        sigma[k] = (var * b).sqrt();
    }
    (total, sigma)
}

/// Runs `opts.chains` independent chains and pools their statistics.
pub fn sample_gas(pot: &Potential, opts: &SamplerOptions) -> Result<SampleRun> {
    opts.validate()?;
    let chains: Vec<ChainOutput> = (0..opts.chains)
        .into_par_iter()
        .map(|c| Chain::new(pot, opts, c).run())
        .collect();
    let all_batches: Vec<Vec<u64>> = chains
        .iter()
        .flat_map(|c| c.batch_counts.iter().cloned())
        .collect();
    let (_, sigma) = bin_stats(&all_batches);
    let histogram = (0..opts.edges.len() - 1)
        .map(|k| HistogramBin {
            lo: opts.edges[k],
            hi: opts.edges[k + 1],
            count: all_batches.iter().map(|r| r[k]).sum(),
            sigma: sigma[k],
        })
        .collect();
    let occ_batches: Vec<&Vec<f64>> = chains.iter().flat_map(|c| &c.batch_occupation).collect();
    let b = occ_batches.len() as f64;
    let occupation = (0..opts.splits.len() + 1)
        .map(|r| {
            let vals: Vec<f64> = occ_batches.iter().map(|row| row[r]).collect();
            let mean = vals.iter().sum::<f64>() / b;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1.0);
            Occupation {
                region: r,
                fraction: mean,
                sigma: (var / b).sqrt(),
            }
        })
        .collect();
    let recorded = chains.iter().map(|c| c.recorded).sum();
    Ok(SampleRun {
        chains,
        histogram,
        occupation,
        recorded,
    })
}

/// Expected particles per configuration in each bin, `∫_bin K_n(x, x) dx`,
/// from the exact kernel of the weight `e^{-n V}` (requires `engine.n_weight() == n`
/// at `T = 1`, or the matching rescaled potential).
pub fn exact_bin_expectations(engine: &ExactEngine, n: usize, edges: &[f64]) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    edges
        .par_windows(2)
        .map(|w| {
            let mut err = None;
            let v = quad::composite(w[0], w[1], 4, 12, |x| match engine.wave_values(n - 1, x) {
                Ok(psi) => psi.iter().map(|p| p.to_f64().powi(2)).sum::<f64>(),
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            });
            err.map_or(Ok(v), Err)
        })
        .collect()
}

/// Estimate of `⟨∏_i (ξ - x_i)⟩` from recorded configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct CharPolyEstimate {
    pub xi: f64,
    /// `ln |⟨∏ (ξ - x_i)⟩|`.
    pub ln_abs_mean: f64,
    /// Jackknife standard error of `ln_abs_mean`, over batches.
    pub sigma: f64,
    /// Sign of the mean.
    pub sign: i8,
    /// Fraction of samples whose product has the opposite sign.
    pub minority_sign_fraction: f64,
}

/// `ln Σ_k s_k e^{l_k}` as `(ln |·|, sign)`.
fn signed_log_sum(terms: impl Iterator<Item = (f64, f64)> + Clone) -> (f64, f64) {
    let m = terms
        .clone()
        .map(|(l, _)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = terms.map(|(l, sg)| sg * (l - m).exp()).sum();
    (m + s.abs().ln(), s.signum())
}

/// `ln ⟨∏ (ξ - x_i)⟩` with a delete-one-batch jackknife error.
///
/// `support` is the equilibrium support; `ξ` inside it makes the product
/// oscillate in sign and the estimate is refused.
pub fn estimate_char_poly(
    run: &SampleRun,
    xi: f64,
    support: (f64, f64),
) -> Result<CharPolyEstimate> {
    if xi >= support.0 && xi <= support.1 {
        return Err(Error::Regime(format!(
            "ξ = {xi} inside the support: sign-oscillating, estimate unreliable"
        )));
    }
    let batches: Vec<Vec<(f64, f64)>> = run
        .chains
        .iter()
        .flat_map(|c| &c.samples)
        .map(|b| {
            b.iter()
                .map(|x| {
                    let mut l = 0.0;
                    let mut sg = 1.0;
                    for &v in x {
                        l += (xi - v).abs().ln();
                        if xi < v {
                            sg = -sg;
                        }
                    }
                    (l, sg)
                })
                .collect()
        })
        .filter(|b: &Vec<(f64, f64)>| !b.is_empty())
        .collect();
    if batches.len() < 2 {
        return Err(Error::InvalidArgument(
            "no recorded samples; run the sampler with keep_samples".into(),
        ));
    }
    let total: usize = batches.iter().map(Vec::len).sum();
    let all = || batches.iter().flatten().copied();
    let (l_all, sign) = signed_log_sum(all());
    let full = l_all - (total as f64).ln();
    let nb = batches.len() as f64;
    let loo: Vec<f64> = (0..batches.len())
        .map(|skip| {
            let it = batches
                .iter()
                .enumerate()
                .filter(move |(k, _)| *k != skip)
                .flat_map(|(_, b)| b.iter().copied());
            let count = total - batches[skip].len();
            signed_log_sum(it).0 - (count as f64).ln()
        })
        .collect();
    let mean_loo = loo.iter().sum::<f64>() / nb;
    let var = loo.iter().map(|v| (v - mean_loo).powi(2)).sum::<f64>() * (nb - 1.0) / nb;
    let minority = all().filter(|&(_, s)| s != sign).count() as f64 / total as f64;
    Ok(CharPolyEstimate {
        xi,
        ln_abs_mean: full,
        sigma: var.sqrt(),
        sign: sign as i8,
        minority_sign_fraction: minority,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_ratio_matches_direct_difference() {
        let x: [f64; 10] = [-1.3, -0.2, 0.4, 0.9, 1.7, 2.2, -2.0, 0.05, 1.1, -0.7];
        let y = 0.33;
        let direct: f64 = x
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != 3)
            .map(|(_, &v)| (y - v).abs().ln() - (x[3] - v).abs().ln())
            .sum();
        assert!((log_ratio(&x, 3, y) - direct).abs() < 1e-13);
    }

    #[test]
    fn signed_log_sum_of_mixed_terms() {
        let t = [(2f64.ln(), 1.0), (5f64.ln(), -1.0)];
        let (l, s) = signed_log_sum(t.iter().copied());
        assert!((l - 3f64.ln()).abs() < 1e-15 && s == -1.0);
    }

    #[test]
    fn options_reject_short_runs() {
        let mut o = SamplerOptions::new(4, 1.0, (-3.0, 3.0), 10, &[(-2.0, 2.0)]);
        o.sweeps = 100;
        assert!(o.validate().is_err());
    }
}
