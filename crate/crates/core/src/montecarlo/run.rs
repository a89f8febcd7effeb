use std::io::Write;

use rand::seq::index::sample;
use rayon::prelude::*;

use super::estimate::{estimate_from_moments, Moments};
use super::{
    block_stream, drift_sequence, empirical_key_rate, simulate_block, stream, wrap_angle, DriftModel, EmpiricalKeyRate,
    EstimationResult, SampleBlock, TransmittanceEstimator, DEFAULT_BLOCK_SIZE, DEFAULT_DETECTION_THRESHOLD,
    SELECTION_STREAM,
};
use crate::attacks::IRAttackParams;
use crate::error::{domain, Error, Result};
use crate::format::sig9;
use crate::security::{ChannelModel, DEFAULT_BETA};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    /// Alice's modulation variance per quadrature, SNU
    pub v_a: f64,
    pub channel: ChannelModel,
    pub drift: DriftModel,
    pub n_pulses: usize,
    /// share of blocks disclosed for parameter estimation
    pub estimation_fraction: f64,
    pub beta: f64,
    pub seed: u64,
    pub attack: Option<IRAttackParams>,
    pub detection_threshold: f64,
    pub estimator: TransmittanceEstimator,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            v_a: 5.0,
            channel: ChannelModel::new(0.5, 0.05).expect("valid default channel"),
            drift: DriftModel::fixed(0.0, DEFAULT_BLOCK_SIZE),
            n_pulses: 1_000_000,
            estimation_fraction: 0.5,
            beta: DEFAULT_BETA,
            seed: 0,
            attack: None,
            detection_threshold: DEFAULT_DETECTION_THRESHOLD,
            estimator: TransmittanceEstimator::default(),
        }
    }
}

impl RunConfig {
    pub fn n_blocks(&self) -> usize {
        self.n_pulses.div_ceil(self.drift.block_size.max(1))
    }

    pub fn validate(&self) -> Result<()> {
        self.drift.validate()?;
        if !(self.v_a > 0.0) || !self.v_a.is_finite() {
            return domain(format!("v_a must be finite and > 0, got {}", self.v_a));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return domain(format!("beta must lie in [0, 1], got {}", self.beta));
        }
        if !(self.estimation_fraction > 0.0 && self.estimation_fraction < 1.0) {
            return domain(format!("estimation_fraction must lie in (0, 1), got {}", self.estimation_fraction));
        }
        if !self.detection_threshold.is_finite() {
            return domain("detection_threshold must be finite");
        }
        if self.n_blocks() < 2 {
            return Err(Error::Argument(format!(
                "n_pulses = {} gives fewer than 2 blocks of {}",
                self.n_pulses, self.drift.block_size
            )));
        }
        Ok(())
    }

    fn block_len(&self, k: usize) -> usize {
        let b = self.drift.block_size;
        b.min(self.n_pulses - k * b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    NoAttack,
    Attack,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSummary {
    pub index: usize,
    /// raw (unwrapped) block angle
    pub theta: f64,
    pub count: usize,
    pub used_for_estimation: bool,
    pub var_bob: f64,
    pub cov_alice_bob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub config: RunConfig,
    pub blocks: Vec<BlockSummary>,
    pub estimation: EstimationResult,
    /// `Err` carries the reason the key rate could not be evaluated
    pub key_rate: std::result::Result<EmpiricalKeyRate, String>,
    pub verdict: Verdict,
}

impl RunReport {
    pub fn estimation_blocks(&self) -> impl Iterator<Item = &BlockSummary> {
        self.blocks.iter().filter(|b| b.used_for_estimation)
    }
}

fn selection(config: &RunConfig, n_blocks: usize) -> Vec<bool> {
    let k = ((config.estimation_fraction * n_blocks as f64).round() as usize).clamp(1, n_blocks - 1);
    let mut rng = stream(config.seed, SELECTION_STREAM);
    let mut used = vec![false; n_blocks];
    for i in sample(&mut rng, n_blocks, k) {
        used[i] = true;
    }
    used
}

fn execute(config: &RunConfig, keep: bool) -> Result<(RunReport, Vec<SampleBlock>)> {
    config.validate()?;
    let n_blocks = config.n_blocks();
    let thetas = drift_sequence(&config.drift, n_blocks, config.seed)?;
    let used = selection(config, n_blocks);

    let per_block: Vec<(BlockSummary, Moments, Option<SampleBlock>)> = (0..n_blocks)
        .into_par_iter()
        .map(|k| {
            let mut rng = block_stream(config.seed, k);
            let blk = simulate_block(
                k,
                thetas[k],
                config.block_len(k),
                config.v_a,
                &config.channel,
                config.attack.as_ref(),
                &mut rng,
            );
            let m = Moments::of_block(&blk);
            let (_, var_bob, cov) = if m.n >= 2 { m.second_moments() } else { (f64::NAN, f64::NAN, f64::NAN) };
            let summary = BlockSummary {
                index: k,
                theta: thetas[k],
                count: m.n,
                used_for_estimation: used[k],
                var_bob,
                cov_alice_bob: cov,
            };
            (summary, m, keep.then_some(blk))
        })
        .collect();

    let pooled = per_block
        .iter()
        .filter(|(s, _, _)| s.used_for_estimation)
        .fold(Moments::default(), |acc, (_, m, _)| acc.merge(*m));
    let estimation = estimate_from_moments(&pooled, config.v_a, config.estimator)?;
    let key_rate = empirical_key_rate(&estimation, config.v_a, config.beta).map_err(|e| e.to_string());
    if let Err(e) = &key_rate {
        log::warn!("empirical key rate unavailable: {e}");
    }
    let verdict = if estimation.xi_hat > config.detection_threshold { Verdict::Attack } else { Verdict::NoAttack };

    let mut blocks = Vec::with_capacity(n_blocks);
    let mut samples = Vec::new();
    for (s, _, b) in per_block {
        blocks.push(s);
        samples.extend(b);
    }
    Ok((RunReport { config: *config, blocks, estimation, key_rate, verdict }, samples))
}

/// Full simulation: drift, per-block sampling (parallel, independent
/// streams), disclosure of a seeded random subset of blocks, pooled
/// estimation, empirical key rate and attack verdict.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    execute(config, false).map(|(r, _)| r)
}

/// As [`run`], also returning every sample block in index order.
pub fn run_with_samples(config: &RunConfig) -> Result<(RunReport, Vec<SampleBlock>)> {
    execute(config, true)
}

/// Raw samples as CSV: `block,pulse,theta,alice_q,alice_p,bob_x`, with the
/// angle wrapped to `[0, 2π)`.
pub fn write_samples_csv<W: Write>(blocks: &[SampleBlock], mut w: W) -> std::io::Result<()> {
    writeln!(w, "block,pulse,theta,alice_q,alice_p,bob_x")?;
    for b in blocks {
        let theta = sig9(wrap_angle(b.theta_block));
        for i in 0..b.count() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                b.index,
                i,
                theta,
                sig9(b.alice_q[i]),
                sig9(b.alice_p[i]),
                sig9(b.bob_x[i])
            )?;
        }
    }
    Ok(())
}
