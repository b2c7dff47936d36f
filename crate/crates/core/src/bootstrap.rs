//! Percentile bootstrap over a recorded sample of bin labels: empirical
//! frequencies, a confidence interval for the maximum bin probability, and
//! the most-frequent-bin sequence with its Ω statistics.
//!
//! Resampling with replacement from the record is realized through its
//! sufficient statistic: the per-bin counts of a bootstrap resample are
//! exactly multinomial in the empirical counts, so each resample is drawn
//! as a chain of binomials in O(d) instead of O(N). Bins enter the chain
//! ordered by (count, first occurrence), which keeps results invariant
//! under bin relabeling for a fixed stream. Only the record is ever
//! resampled — the underlying boson distribution is never touched.

use std::collections::BTreeMap;

use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampler::{RngStream, SampleRecord};

/// The result of a bootstrap analysis of one sample record.
#[derive(Debug, Clone, Serialize)]
pub struct BootstrapSummary {
    /// Largest empirical bin frequency in the original sample.
    pub p_max: f64,
    /// Bin attaining `p_max` (smallest label on ties).
    pub mpb_empirical: u32,
    /// Lower end of the 100(1−γ)% confidence interval for P_max.
    pub ci_low: f64,
    /// Upper end of the interval.
    pub ci_high: f64,
    /// Interval width ε = Δ*₍₁₋γ/₂₎ − Δ*₍γ/₂₎.
    pub ci_width: f64,
    /// Fraction of bootstrap resamples whose most-frequent bin was β;
    /// only observed bins appear.
    pub omega: BTreeMap<u32, f64>,
    pub omega_max: f64,
    /// Bin with Ω = Ω_max (smallest label on ties): the empirical MPB guess.
    pub mu_tilde: u32,
    pub num_bootstraps: usize,
    pub gamma: f64,
    /// The full most-frequent-bin sequence, kept only on request.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mpb_sequence: Option<Vec<u32>>,
}

/// Per-bin counts of a (possibly incrementally grown) sample, together
/// with first-occurrence positions. This is the sufficient statistic the
/// bootstrap consumes.
#[derive(Debug, Clone)]
pub(crate) struct CountedSample {
    counts: Vec<u64>,
    first_seen: Vec<u64>,
    total: u64,
}

impl CountedSample {
    pub(crate) fn new(d: u64) -> Self {
        Self {
            counts: vec![0; d as usize],
            first_seen: vec![u64::MAX; d as usize],
            total: 0,
        }
    }

    pub(crate) fn push(&mut self, label: u32) {
        let i = label as usize;
        if self.first_seen[i] == u64::MAX {
            self.first_seen[i] = self.total;
        }
        self.counts[i] += 1;
        self.total += 1;
    }

    pub(crate) fn from_record(record: &SampleRecord) -> Self {
        let mut out = Self::new(record.d());
        for &label in record.labels() {
            out.push(label);
        }
        out
    }

    pub(crate) fn total(&self) -> u64 {
        self.total
    }

    pub(crate) fn counts(&self) -> &[u64] {
        &self.counts
    }

    fn p_max_and_label(&self) -> (f64, u32) {
        let mut best = 0u64;
        let mut label = 0u32;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > best {
                best = c;
                label = i as u32;
            }
        }
        (best as f64 / self.total as f64, label)
    }

    /// Observed bins ordered by (count desc, first occurrence asc). The
    /// ordering is a function of the sample alone, so a bin relabeling
    /// permutes it without changing the consumed randomness.
    fn chain_order(&self) -> Vec<(u32, u64)> {
        let mut chain: Vec<(u32, u64)> = self
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i as u32, c))
            .collect();
        chain.sort_by(|a, b| {
            b.1.cmp(&a.1)
                .then_with(|| self.first_seen[a.0 as usize].cmp(&self.first_seen[b.0 as usize]))
        });
        chain
    }
}

/// Empirical frequencies p_β = n_β / N. Counts are exact integers; each
/// frequency is a single correctly rounded division.
pub fn frequencies(record: &SampleRecord) -> Result<Vec<f64>> {
    if record.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    let counted = CountedSample::from_record(record);
    Ok(counted
        .counts
        .iter()
        .map(|&c| c as f64 / counted.total as f64)
        .collect())
}

/// Nearest-rank percentile of an ascending-sorted list: the value at index
/// `⌈ζ·len⌉ − 1`, clamped into range.
pub fn percentile(sorted_values: &[f64], zeta: f64) -> Result<f64> {
    if sorted_values.is_empty() {
        return Err(Error::InvalidArgument("percentile of an empty list".into()));
    }
    if !(0.0..=1.0).contains(&zeta) {
        return Err(Error::InvalidArgument(format!("zeta must be in [0,1], got {zeta}")));
    }
    let len = sorted_values.len();
    let raw = (zeta * len as f64).ceil() as i64 - 1;
    let index = raw.clamp(0, len as i64 - 1) as usize;
    Ok(sorted_values[index])
}

/// Bootstrap analysis of a sample record: `num_bootstraps` resamples of the
/// original size with replacement, a percentile CI for P_max, and the Ω
/// statistics of the most-frequent-bin sequence.
pub fn bootstrap_analyze(
    record: &SampleRecord,
    num_bootstraps: usize,
    gamma: f64,
    stream: &RngStream,
    keep_sequence: bool,
) -> Result<BootstrapSummary> {
    let counted = CountedSample::from_record(record);
    analyze_counts(&counted, num_bootstraps, gamma, stream, keep_sequence)
}

/// Core of [`bootstrap_analyze`], shared with the incremental estimator.
pub(crate) fn analyze_counts(
    sample: &CountedSample,
    num_bootstraps: usize,
    gamma: f64,
    stream: &RngStream,
    keep_sequence: bool,
) -> Result<BootstrapSummary> {
    if num_bootstraps < 100 {
        return Err(Error::InvalidArgument(format!(
            "need at least 100 bootstraps, got {num_bootstraps}"
        )));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!("need 0 < gamma < 1, got {gamma}")));
    }
    if sample.total == 0 {
        return Err(Error::InvalidArgument("empty sample".into()));
    }

    let (p_max, mpb_empirical) = sample.p_max_and_label();
    let chain = sample.chain_order();
    let total = sample.total;

    // Each bootstrap owns the stream keyed by its index, so the result is
    // identical however the iterations are scheduled.
    let outcomes: Vec<(f64, u32)> = (0..num_bootstraps)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream.child(k as u64).rng();
            let (max_count, label) = resample_max(&chain, total, &mut rng);
            (max_count as f64 / total as f64 - p_max, label)
        })
        .collect();

    let mut deltas: Vec<f64> = outcomes.iter().map(|(delta, _)| *delta).collect();
    deltas.sort_unstable_by(f64::total_cmp);
    let delta_hi = percentile(&deltas, 1.0 - gamma / 2.0)?;
    let delta_lo = percentile(&deltas, gamma / 2.0)?;

    let mut omega_counts: BTreeMap<u32, usize> = BTreeMap::new();
    for (_, label) in &outcomes {
        *omega_counts.entry(*label).or_insert(0) += 1;
    }
    let mut omega = BTreeMap::new();
    let mut omega_max = 0.0f64;
    let mut mu_tilde = 0u32;
    for (&label, &count) in &omega_counts {
        let freq = count as f64 / num_bootstraps as f64;
        omega.insert(label, freq);
        if freq > omega_max {
            omega_max = freq;
            mu_tilde = label;
        }
    }

    Ok(BootstrapSummary {
        p_max,
        mpb_empirical,
        ci_low: p_max - delta_hi,
        ci_high: p_max - delta_lo,
        ci_width: delta_hi - delta_lo,
        omega,
        omega_max,
        mu_tilde,
        num_bootstraps,
        gamma,
        mpb_sequence: keep_sequence.then(|| outcomes.iter().map(|(_, l)| *l).collect()),
    })
}

/// Draws one bootstrap resample as a binomial chain over the observed bins
/// and returns (largest resampled count, its label). Ties on the count go
/// to the smallest label.
fn resample_max(chain: &[(u32, u64)], total: u64, rng: &mut ChaCha12Rng) -> (u64, u32) {
    let mut n_left = total;
    let mut c_left = total;
    let mut best_count = 0u64;
    let mut best_label = u32::MAX;
    for &(label, count) in chain {
        let x = if n_left == 0 {
            0
        } else if count == c_left {
            n_left
        } else {
            let p = count as f64 / c_left as f64;
            Binomial::new(n_left, p)
                .expect("0 < p < 1 by construction")
                .sample(rng)
        };
        if x > best_count || (x == best_count && label < best_label) {
            best_count = x;
            best_label = label;
        }
        c_left -= count;
        n_left -= x;
    }
    (best_count, best_label)
}
