//! Seeded Monte Carlo runs of the post-selected measurement.
//!
//! Each trial heralds, then counts photons on the addition-stage output.
//! The generator for trial `t` at sweep point `s` is a ChaCha8 stream keyed by
//! the run seed, selected by `s` and the addition order `m`, and positioned by
//! `t`, so records do not depend on how trials are scheduled across threads,
//! and runs at different `m` with one seed are independent.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{p_add_closed, snr_added, snr_coherent, snr_from_moments};
use crate::circuit::LossSpec;
use crate::error::{domain, ensure_finite, Result};
use crate::herald::{AdditionModel, HeraldResult, Scheme};
use crate::special::PolynomialOrder;

pub const DEFAULT_TRIALS: u32 = 3600;

/// Words of keystream reserved per trial; a trial draws far fewer.
const WORDS_PER_TRIAL: u32 = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub nbar: f64,
    pub theta: f64,
    pub phi: f64,
    pub m: PolynomialOrder,
    /// Model kind; its coupling is replaced by each sweep value.
    pub model: AdditionModel,
    pub loss: LossSpec,
    pub trials_per_point: u32,
    /// Transmissivities (beam splitter) or gains (down-conversion).
    pub sweep: Vec<f64>,
    pub seed: u64,
    pub cutoff_override: Option<usize>,
}

impl RunConfig {
    pub fn new(nbar: f64, m: PolynomialOrder, model: AdditionModel, sweep: Vec<f64>, seed: u64) -> Self {
        Self {
            nbar,
            theta: 0.0,
            phi: 0.0,
            m,
            model,
            loss: LossSpec::lossless(),
            trials_per_point: DEFAULT_TRIALS,
            sweep,
            seed,
            cutoff_override: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("theta", self.theta)?;
        ensure_finite("phi", self.phi)?;
        if self.trials_per_point == 0 {
            return Err(domain("trials_per_point must be at least 1"));
        }
        if self.sweep.is_empty() {
            return Err(domain("sweep needs at least one value"));
        }
        for &v in &self.sweep {
            let ok = match self.model {
                AdditionModel::BeamSplitter { .. } => (0.0..=1.0).contains(&v),
                AdditionModel::DownConversion { .. } => v >= 1.0 && v.is_finite(),
            };
            if !ok {
                return Err(domain(format!(
                    "sweep value {v} outside the {} model domain",
                    self.model.name()
                )));
            }
        }
        self.scheme_at(self.sweep[0]).map(|_| ())
    }

    /// The full arrangement at one sweep value.
    pub fn scheme_at(&self, value: f64) -> Result<Scheme> {
        let mut scheme = Scheme::new(self.nbar, self.m, self.model.with_coupling(value))?;
        scheme.theta = self.theta;
        scheme.phi = self.phi;
        scheme.loss = self.loss;
        scheme.cutoff_override = self.cutoff_override;
        Ok(scheme)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Success,
    /// Herald count that differed from the success outcome.
    Failure(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub sweep_index: usize,
    pub sweep_value: f64,
    pub trial: u32,
    pub branch: Branch,
    pub detected_n: usize,
}

/// Outcome samplers for one sweep point.
struct PointSampler {
    branches: Option<WeightedIndex<f64>>,
    labels: Vec<Branch>,
    counts: Vec<WeightedIndex<f64>>,
}

impl PointSampler {
    fn new(herald: &HeraldResult) -> Result<Self> {
        let mut weights = Vec::new();
        let mut labels = Vec::new();
        let mut counts = Vec::new();
        if let Some(state) = &herald.success_state {
            weights.push(herald.success_probability);
            labels.push(Branch::Success);
            counts.push(number_sampler(&state.number_distribution())?);
        }
        for member in herald.failure_branch.members() {
            weights.push(member.weight);
            labels.push(Branch::Failure(member.outcome));
            counts.push(number_sampler(&member.state.number_distribution())?);
        }
        let branches = if weights.is_empty() {
            None
        } else {
            Some(index(&weights)?)
        };
        Ok(Self {
            branches,
            labels,
            counts,
        })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Option<(Branch, usize)> {
        let b = self.branches.as_ref()?.sample(rng);
        Some((self.labels[b], self.counts[b].sample(rng)))
    }
}

fn index(weights: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(weights).map_err(|e| domain(format!("cannot sample weights: {e}")))
}

fn number_sampler(dist: &[f64]) -> Result<WeightedIndex<f64>> {
    index(dist)
}

fn trial_rng(seed: u64, m: PolynomialOrder, sweep_index: usize, trial: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(m.get()) << 32) | sweep_index as u64);
    rng.set_word_pos(u128::from(trial) << WORDS_PER_TRIAL);
    rng
}

/// Herald results for every sweep value, in sweep order.
pub fn herald_sweep(config: &RunConfig) -> Result<Vec<HeraldResult>> {
    config.validate()?;
    config
        .sweep
        .par_iter()
        .map(|&v| config.scheme_at(v)?.herald())
        .collect()
}

/// Every trial of the run, ordered by sweep index then trial index.
pub fn run_trials(config: &RunConfig) -> Result<Vec<TrialRecord>> {
    let heralds = herald_sweep(config)?;
    let samplers: Vec<PointSampler> = heralds.iter().map(PointSampler::new).collect::<Result<_>>()?;
    let n = config.trials_per_point;
    let records = (0..config.sweep.len())
        .into_par_iter()
        .flat_map_iter(|s| {
            let sampler = &samplers[s];
            let value = config.sweep[s];
            (0..n).filter_map(move |t| {
                let mut rng = trial_rng(config.seed, config.m, s, t);
                sampler.sample(&mut rng).map(|(branch, detected_n)| TrialRecord {
                    sweep_index: s,
                    sweep_value: value,
                    trial: t,
                    branch,
                    detected_n,
                })
            })
        })
        .collect();
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub sweep_value: f64,
    pub trials: u32,
    /// Success count `M`.
    pub kept_count: u32,
    pub empirical_success_rate: f64,
    pub theory_success_probability: f64,
    pub empirical_snr: Option<f64>,
    pub empirical_snr_ratio: Option<f64>,
    pub theory_snr_ratio: Option<f64>,
}

impl AggregateStats {
    /// Binomial standard deviation of the success rate at the theory value.
    pub fn success_rate_sigma(&self) -> f64 {
        let p = self.theory_success_probability;
        (p * (1.0 - p) / f64::from(self.trials)).sqrt()
    }
}

/// Mean of `x - offset` over its sample standard deviation.
pub fn empirical_snr(counts: &[usize], offset: f64) -> Option<f64> {
    if counts.len() < 2 {
        return None;
    }
    let n = counts.len() as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var <= 0.0 {
        return None;
    }
    Some((mean - offset) / var.sqrt())
}

/// Expected success probability and SNR ratio at one sweep point.
fn theory(config: &RunConfig, scheme: &Scheme, herald: &HeraldResult) -> Result<(f64, Option<f64>)> {
    let nbar_eff = scheme.nbar_at_addition();
    let m = config.m;
    match scheme.model {
        AdditionModel::BeamSplitter { transmissivity } => {
            let p = p_add_closed(m, transmissivity, nbar_eff)?;
            let ratio = if nbar_eff > 0.0 && p > 0.0 {
                snr_added(m, transmissivity, nbar_eff)
                    .ok()
                    .map(|s| s / snr_coherent(nbar_eff))
            } else {
                None
            };
            Ok((p, ratio))
        }
        AdditionModel::DownConversion { .. } => {
            let ratio = herald.success_state.as_ref().filter(|_| nbar_eff > 0.0).and_then(|s| {
                snr_from_moments(s.mean_photon(), s.second_moment(), f64::from(m.get()))
                    .ok()
                    .map(|snr| snr / snr_coherent(nbar_eff))
            });
            Ok((herald.success_probability, ratio))
        }
    }
}

/// Per-sweep-point statistics of the success branch.
///
/// The SNR subtracts the `m` added photons and is compared against the
/// coherent baseline `|α|` of the post-loss light reaching the addition stage.
pub fn aggregate(records: &[TrialRecord], config: &RunConfig) -> Result<Vec<AggregateStats>> {
    let heralds = herald_sweep(config)?;
    let mut kept: Vec<Vec<usize>> = vec![Vec::new(); config.sweep.len()];
    for r in records {
        if r.sweep_index >= kept.len() {
            return Err(domain(format!("record sweep index {} outside the run", r.sweep_index)));
        }
        if r.branch == Branch::Success {
            kept[r.sweep_index].push(r.detected_n);
        }
    }
    let offset = f64::from(config.m.get());
    config
        .sweep
        .iter()
        .zip(&heralds)
        .zip(&kept)
        .map(|((&value, herald), counts)| {
            let scheme = config.scheme_at(value)?;
            let (theory_p, theory_ratio) = theory(config, &scheme, herald)?;
            let baseline = snr_coherent(scheme.nbar_at_addition());
            let snr = empirical_snr(counts, offset);
            Ok(AggregateStats {
                sweep_value: value,
                trials: config.trials_per_point,
                kept_count: counts.len() as u32,
                empirical_success_rate: counts.len() as f64 / f64::from(config.trials_per_point),
                theory_success_probability: theory_p,
                empirical_snr: snr,
                empirical_snr_ratio: snr.filter(|_| baseline > 0.0).map(|s| s / baseline),
                theory_snr_ratio: theory_ratio,
            })
        })
        .collect()
}

/// Sample standard deviation of the empirical SNR ratio at each sweep value
/// over `replicates` independent runs. Replicate `r` reuses the config with
/// seed `seed + r`. Points where fewer than two replicates give a ratio are
/// reported as missing.
pub fn ratio_scatter(config: &RunConfig, replicates: u32) -> Result<Vec<Option<f64>>> {
    if replicates < 2 {
        return Err(domain("scatter needs at least two replicates"));
    }
    let runs: Vec<Vec<AggregateStats>> = (0..replicates)
        .map(|r| {
            let mut c = config.clone();
            c.seed = config.seed.wrapping_add(u64::from(r));
            aggregate(&run_trials(&c)?, &c)
        })
        .collect::<Result<_>>()?;
    Ok((0..config.sweep.len())
        .map(|s| {
            let ratios: Vec<f64> = runs.iter().filter_map(|run| run[s].empirical_snr_ratio).collect();
            if ratios.len() < 2 {
                return None;
            }
            let n = ratios.len() as f64;
            let mean = ratios.iter().sum::<f64>() / n;
            Some((ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
        })
        .collect())
}
