//! Drawing coarse-grained sample records: an alias-method sampler over bin
//! probabilities, splittable deterministic RNG streams, the Chernoff-bound
//! sample-size calculator, and the sample-record file format.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::dist::CoarseDistribution;
use crate::error::{Error, Result};

/// A reproducible RNG stream. `(seed, stream_id)` fully determines the byte
/// stream; `child` derives hierarchically independent streams so that
/// parallel tasks can be keyed by index without sharing state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
}

fn mix(a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over the folded pair.
    let mut z = a ^ b.rotate_left(31) ^ 0x9E37_79B9_7F4A_7C15;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Instantiates the generator for this stream.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Derives a child stream. Children of the same parent differ in their
    /// stream id; distinct parents yield distinct derived seeds.
    pub fn child(&self, index: u64) -> Self {
        Self {
            seed: mix(self.seed, self.stream_id),
            stream_id: index,
        }
    }
}

/// A recorded sequence of bin labels drawn from a coarse distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRecord {
    d: u64,
    labels: Vec<u32>,
}

impl SampleRecord {
    pub fn new(d: u64, labels: Vec<u32>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidArgument("sample record must be non-empty".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as u64 >= d) {
            return Err(Error::Bounds(format!("label {bad} outside [0, {d})")));
        }
        Ok(Self { d, labels })
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// O(1)-per-draw discrete sampler built with Vose's alias method.
#[derive(Debug, Clone)]
pub struct AliasSampler {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasSampler {
    pub fn new(probs: &[f64]) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("need at least one probability".into()));
        }
        if probs.len() as u64 > u32::MAX as u64 {
            return Err(Error::Capacity("too many bins for u32 labels".into()));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidArgument(format!("invalid probability {bad}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }

        let n = probs.len();
        let mut scaled: Vec<f64> = probs.iter().map(|p| p * n as f64).collect();
        let mut prob = vec![1.0f64; n];
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let mut small: Vec<u32> = Vec::new();
        let mut large: Vec<u32> = Vec::new();
        for (i, &s) in scaled.iter().enumerate() {
            if s < 1.0 {
                small.push(i as u32);
            } else {
                large.push(i as u32);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            large.pop();
            prob[s as usize] = scaled[s as usize];
            alias[s as usize] = l;
            scaled[l as usize] = (scaled[l as usize] + scaled[s as usize]) - 1.0;
            if scaled[l as usize] < 1.0 {
                small.push(l);
            } else {
                large.push(l);
            }
        }
        // Leftovers differ from 1 only by accumulated rounding.
        Ok(Self { prob, alias })
    }

    pub fn d(&self) -> u64 {
        self.prob.len() as u64
    }

    #[inline]
    pub fn draw(&self, rng: &mut ChaCha12Rng) -> u32 {
        let i = rng.random_range(0..self.prob.len());
        if rng.random::<f64>() < self.prob[i] {
            i as u32
        } else {
            self.alias[i]
        }
    }

    /// Per-label probability implied by the table; must match the input to
    /// within accumulated rounding (≤ 1e-15 per label).
    pub fn reconstructed_probs(&self) -> Vec<f64> {
        let n = self.prob.len();
        let mut out = vec![0.0f64; n];
        for i in 0..n {
            out[i] += self.prob[i];
            if self.alias[i] as usize != i {
                out[self.alias[i] as usize] += 1.0 - self.prob[i];
            } else {
                out[i] += 1.0 - self.prob[i];
            }
        }
        for v in &mut out {
            *v /= n as f64;
        }
        out
    }
}

/// Builds the alias sampler for a coarse distribution.
pub fn build_sampler(coarse: &CoarseDistribution) -> AliasSampler {
    AliasSampler::new(coarse.probs()).expect("coarse distributions are valid by construction")
}

/// Draws `count` i.i.d. bin labels; deterministic for a fixed stream.
pub fn draw_bins(sampler: &AliasSampler, count: u64, stream: &RngStream) -> Result<SampleRecord> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let mut rng = stream.rng();
    let labels = (0..count).map(|_| sampler.draw(&mut rng)).collect();
    SampleRecord::new(sampler.d(), labels)
}

/// Chernoff-bound sample size `⌈12 d ln(2/γ) / ε²⌉` guaranteeing a
/// 100(1−γ)% confidence interval of width ε for the maximum bin
/// probability of a d-bin distribution.
pub fn chernoff_sample_size(d: u64, eps: f64, gamma: f64) -> Result<u128> {
    if d == 0 {
        return Err(Error::InvalidArgument("d must be positive".into()));
    }
    if !(eps > 0.0 && eps < 1.0 / d as f64) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < eps < 1/d = {}, got {eps}",
            1.0 / d as f64
        )));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!("need 0 < gamma < 1, got {gamma}")));
    }
    let value = (12.0 * d as f64 * (2.0 / gamma).ln() / (eps * eps)).ceil();
    if !value.is_finite() || value >= u128::MAX as f64 {
        return Err(Error::Capacity(format!("sample size {value} does not fit u128")));
    }
    Ok(value as u128)
}

/// Writes a record as `# d=<d>` followed by one decimal label per line.
pub fn write_record(record: &SampleRecord, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# d={}", record.d())?;
    for label in record.labels() {
        writeln!(w, "{label}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a record file. The `# d=<int>` header is optional; without it the
/// bin count is inferred as `max label + 1`.
pub fn read_record(path: &Path) -> Result<SampleRecord> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut d: Option<u64> = None;
    let mut labels = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(value) = rest.strip_prefix("d=") {
                d = Some(value.trim().parse().map_err(|_| {
                    Error::InvalidArgument(format!("bad d header on line {}", lineno + 1))
                })?);
            }
            continue;
        }
        let label: u32 = trimmed.parse().map_err(|_| {
            Error::InvalidArgument(format!("bad label {trimmed:?} on line {}", lineno + 1))
        })?;
        labels.push(label);
    }
    let d = match d {
        Some(d) => d,
        None => labels.iter().copied().max().map(|m| m as u64 + 1).unwrap_or(0),
    };
    SampleRecord::new(d, labels)
}
