//! Adaptive estimation of the most probable bin from sampled data: grow the
//! sample in fixed increments, bootstrap the cumulative record each round,
//! and stop once a (1−ξ) fraction of the bootstrap resamples agree on one
//! most-frequent bin — or abort when the round budget is spent.

use std::collections::BTreeMap;

use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bootstrap::{analyze_counts, BootstrapSummary, CountedSample};
use crate::dist::CoarseDistribution;
use crate::error::{Error, Result};
use crate::sampler::{AliasSampler, RngStream, SampleRecord};

/// Parameters of the adaptive estimator.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Algo1Params {
    /// Bootstrap resamples per round (ℳ ≥ 100).
    pub num_bootstraps: usize,
    /// Fresh samples drawn each round (must exceed ℳ).
    pub delta_n: u64,
    /// Round budget L; the total sample budget is L·δN.
    pub max_rounds: u32,
    /// Acceptance threshold: END once Ω_max ≥ 1 − ξ.
    pub xi: f64,
    /// Uncertainty of the incidental P_max confidence interval carried in
    /// the final summary.
    pub ci_gamma: f64,
}

impl Default for Algo1Params {
    fn default() -> Self {
        Self {
            num_bootstraps: 10_000,
            delta_n: 20_000,
            max_rounds: 10,
            xi: 1e-2,
            ci_gamma: 1e-3,
        }
    }
}

impl Algo1Params {
    pub fn validate(&self) -> Result<()> {
        if self.num_bootstraps < 100 {
            return Err(Error::InvalidArgument(format!(
                "need at least 100 bootstraps, got {}",
                self.num_bootstraps
            )));
        }
        if self.delta_n <= self.num_bootstraps as u64 {
            return Err(Error::InvalidArgument(format!(
                "round increment {} must exceed the bootstrap count {}",
                self.delta_n, self.num_bootstraps
            )));
        }
        if self.max_rounds == 0 {
            return Err(Error::InvalidArgument("need at least one round".into()));
        }
        if !(self.xi > 0.0 && self.xi < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "xi must lie in (0, 0.5), got {}",
                self.xi
            )));
        }
        if !(self.ci_gamma > 0.0 && self.ci_gamma < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "ci_gamma must lie in (0, 1), got {}",
                self.ci_gamma
            )));
        }
        Ok(())
    }

    /// Total sample budget L·δN.
    pub fn budget(&self) -> u64 {
        self.max_rounds as u64 * self.delta_n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Algo1Status {
    End,
    Abort,
}

/// Outcome of one estimator run. `mu_tilde` is present exactly when the
/// status is END.
#[derive(Debug, Clone, Serialize)]
pub struct Algo1Outcome {
    pub status: Algo1Status,
    pub mu_tilde: Option<u32>,
    pub rounds_used: u32,
    pub total_samples: u64,
    pub omega_max: f64,
    pub final_summary: BootstrapSummary,
}

impl Algo1Outcome {
    pub fn is_end(&self) -> bool {
        self.status == Algo1Status::End
    }
}

/// A source of bin labels: the sampling oracle the estimator consumes.
/// Implementations must emit labels below `d()` and report failures as
/// errors — never as an ABORT.
pub trait BinSource {
    fn d(&self) -> u64;
    fn draw(&mut self, count: u64, sink: &mut dyn FnMut(u32)) -> Result<()>;
}

/// Draws labels from an alias sampler with a private RNG stream.
pub struct SamplerSource<'a> {
    sampler: &'a AliasSampler,
    rng: ChaCha12Rng,
}

impl<'a> SamplerSource<'a> {
    pub fn new(sampler: &'a AliasSampler, stream: &RngStream) -> Self {
        Self {
            sampler,
            rng: stream.rng(),
        }
    }
}

impl BinSource for SamplerSource<'_> {
    fn d(&self) -> u64 {
        self.sampler.d()
    }

    fn draw(&mut self, count: u64, sink: &mut dyn FnMut(u32)) -> Result<()> {
        for _ in 0..count {
            sink(self.sampler.draw(&mut self.rng));
        }
        Ok(())
    }
}

/// Replays a pre-recorded sample, e.g. data taken on a real device. Runs
/// dry with a source error once the record is exhausted.
pub struct RecordSource {
    record: SampleRecord,
    cursor: usize,
}

impl RecordSource {
    pub fn new(record: SampleRecord) -> Self {
        Self { record, cursor: 0 }
    }
}

impl BinSource for RecordSource {
    fn d(&self) -> u64 {
        self.record.d()
    }

    fn draw(&mut self, count: u64, sink: &mut dyn FnMut(u32)) -> Result<()> {
        let available = self.record.len() - self.cursor;
        if (count as usize) > available {
            return Err(Error::Source(format!(
                "record exhausted: {count} labels requested, {available} left"
            )));
        }
        for &label in &self.record.labels()[self.cursor..self.cursor + count as usize] {
            sink(label);
        }
        self.cursor += count as usize;
        Ok(())
    }
}

/// Runs the adaptive MPB estimation: per round draw δN fresh labels, append
/// them to the cumulative record, bootstrap the whole record, and END once
/// Ω_max ≥ 1 − ξ; ABORT after L inconclusive rounds.
pub fn estimate_mpb(
    source: &mut dyn BinSource,
    params: &Algo1Params,
    stream: &RngStream,
) -> Result<Algo1Outcome> {
    params.validate()?;
    let mut counted = CountedSample::new(source.d());
    let mut last_summary: Option<BootstrapSummary> = None;

    for round in 1..=params.max_rounds {
        source.draw(params.delta_n, &mut |label| counted.push(label))?;
        let summary = analyze_counts(
            &counted,
            params.num_bootstraps,
            params.ci_gamma,
            &stream.child(round as u64),
            false,
        )?;
        let omega_max = summary.omega_max;
        if omega_max >= 1.0 - params.xi {
            return Ok(Algo1Outcome {
                status: Algo1Status::End,
                mu_tilde: Some(summary.mu_tilde),
                rounds_used: round,
                total_samples: round as u64 * params.delta_n,
                omega_max,
                final_summary: summary,
            });
        }
        last_summary = Some(summary);
    }

    let final_summary = last_summary.expect("at least one round ran");
    Ok(Algo1Outcome {
        status: Algo1Status::Abort,
        mu_tilde: None,
        rounds_used: params.max_rounds,
        total_samples: params.budget(),
        omega_max: final_summary.omega_max,
        final_summary,
    })
}

/// Majority-vote wrapper: run the estimator `r` times on independent
/// sources and accept a label only if a strict majority of the `r` runs
/// END on it. Returns the winning run's outcome; with no majority, the last
/// run's outcome demoted to ABORT.
pub fn estimate_mpb_majority<S, F>(
    source_for_run: F,
    params: &Algo1Params,
    r: u32,
    stream: &RngStream,
) -> Result<Algo1Outcome>
where
    S: BinSource,
    F: Fn(u32) -> Result<S> + Sync,
{
    if r < 3 || r % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "majority repetitions must be odd and at least 3, got {r}"
        )));
    }
    let runs: Vec<Algo1Outcome> = (0..r)
        .into_par_iter()
        .map(|i| {
            let mut source = source_for_run(i)?;
            estimate_mpb(&mut source, params, &stream.child(i as u64))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut tally: BTreeMap<u32, u32> = BTreeMap::new();
    for run in &runs {
        if let Some(label) = run.mu_tilde {
            *tally.entry(label).or_insert(0) += 1;
        }
    }
    let winner = tally
        .iter()
        .find(|(_, &count)| count * 2 > r)
        .map(|(&label, _)| label);

    match winner {
        Some(label) => Ok(runs
            .into_iter()
            .find(|run| run.mu_tilde == Some(label))
            .expect("winner has at least one END run")),
        None => {
            let mut last = runs.into_iter().next_back().expect("r >= 3 runs");
            last.status = Algo1Status::Abort;
            last.mu_tilde = None;
            Ok(last)
        }
    }
}

/// Sample budget for which a randomly chosen input is expected to abort
/// with probability ≲ 0.1: `⌈1.8·10⁵ · d^3.5⌉`.
pub fn recommended_budget(d: u64) -> Result<u128> {
    if d == 0 {
        return Err(Error::InvalidArgument("d must be positive".into()));
    }
    let value = (1.8e5 * (d as f64).powf(3.5)).ceil();
    if !value.is_finite() || value >= 2f64.powi(127) {
        return Err(Error::Capacity(format!("budget {value} does not fit 128 bits")));
    }
    Ok(value as u128)
}

/// Success/failure/inconclusive tallies over repeated estimator runs
/// against a known coarse distribution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StatusCounts {
    pub repetitions: u32,
    /// END with the correct label.
    pub success: u32,
    /// END with a wrong label.
    pub failure: u32,
    /// ABORT.
    pub inconclusive: u32,
}

impl StatusCounts {
    pub fn p_success(&self) -> f64 {
        self.success as f64 / self.repetitions as f64
    }

    pub fn p_failure(&self) -> f64 {
        self.failure as f64 / self.repetitions as f64
    }

    pub fn p_inconclusive(&self) -> f64 {
        self.inconclusive as f64 / self.repetitions as f64
    }
}

/// Estimates (p_s, p_f, p_?) by running the estimator `repetitions` times
/// against a sampler for `coarse`, whose true MPB is known.
pub fn status_probabilities(
    coarse: &CoarseDistribution,
    params: &Algo1Params,
    repetitions: u32,
    stream: &RngStream,
) -> Result<StatusCounts> {
    if repetitions == 0 {
        return Err(Error::InvalidArgument("need at least one repetition".into()));
    }
    let sampler = crate::sampler::build_sampler(coarse);
    let truth = coarse.mpb_label();

    let outcomes: Vec<Algo1Outcome> = (0..repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut source =
                SamplerSource::new(&sampler, &stream.child(2 * rep as u64));
            estimate_mpb(&mut source, params, &stream.child(2 * rep as u64 + 1))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut counts = StatusCounts {
        repetitions,
        success: 0,
        failure: 0,
        inconclusive: 0,
    };
    for outcome in &outcomes {
        match outcome.mu_tilde {
            Some(label) if label == truth => counts.success += 1,
            Some(_) => counts.failure += 1,
            None => counts.inconclusive += 1,
        }
    }
    debug_assert_eq!(
        counts.success + counts.failure + counts.inconclusive,
        repetitions
    );
    Ok(counts)
}
