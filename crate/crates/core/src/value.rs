//! Surrogate rewards, bucketed value targets, and value estimators.
//!
//! Values are predicted as a distribution over evenly spaced buckets; a point estimate
//! is the probability-weighted mean of the most likely bucket centres.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::render::Observation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Surrogate {
    /// Reward for every step, terminal or not.
    pub step_penalty: f64,
    /// Terminal rewards at or below this are replaced by 0.
    pub threshold: f64,
}

impl Default for Surrogate {
    fn default() -> Self {
        Surrogate { step_penalty: -1.0 / 30.0, threshold: 0.8 }
    }
}

impl Surrogate {
    pub fn terminal(&self, raw: f64) -> f64 {
        if raw > self.threshold {
            raw
        } else {
            0.0
        }
    }

    /// Per-step surrogate reward; `raw` is present on the final step only.
    pub fn reward(&self, raw: Option<f64>) -> f64 {
        self.step_penalty + raw.map_or(0.0, |r| self.terminal(r))
    }

    /// Undiscounted return-to-go for each of the `len` pre-action states of an episode
    /// that ended with `raw`.
    pub fn targets(&self, len: usize, raw: f64) -> Vec<f64> {
        let term = self.terminal(raw);
        (0..len).map(|t| (len - t) as f64 * self.step_penalty + term).collect()
    }
}

/// `(digest, return-to-go)` samples for every step of every demo.
pub fn value_samples(demos: &[crate::demo::DemoEpisode], surrogate: &Surrogate) -> Vec<(u64, f64)> {
    demos
        .iter()
        .flat_map(|d| d.steps.iter().map(|s| s.d).zip(surrogate.targets(d.steps.len(), d.raw)))
        .collect()
}

/// Evenly spaced buckets over `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueBuckets {
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Default for ValueBuckets {
    fn default() -> Self {
        ValueBuckets { n: 30, lo: -1.0, hi: 1.0 }
    }
}

impl ValueBuckets {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || !(self.hi > self.lo) {
            return Err(Error::Config(format!("bad value buckets {self:?}")));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.n as f64
    }

    /// Values outside the range clamp to the end buckets.
    pub fn bucketize(&self, v: f64) -> usize {
        let i = ((v - self.lo) / self.width()).floor();
        if i.is_nan() || i < 0.0 {
            0
        } else {
            (i as usize).min(self.n - 1)
        }
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.width()
    }
}

/// A model of `P(bucket | observation)`.
pub trait ValueFn: Send + Sync {
    fn buckets(&self) -> ValueBuckets;

    /// `(bucket, probability)` sorted by probability, most likely first.
    fn top_n(&self, obs: &Observation, n: usize) -> Vec<(usize, f64)>;
}

impl<V: ValueFn + ?Sized> ValueFn for &V {
    fn buckets(&self) -> ValueBuckets {
        (**self).buckets()
    }
    fn top_n(&self, obs: &Observation, n: usize) -> Vec<(usize, f64)> {
        (**self).top_n(obs, n)
    }
}

impl<V: ValueFn + ?Sized> ValueFn for Arc<V> {
    fn buckets(&self) -> ValueBuckets {
        (**self).buckets()
    }
    fn top_n(&self, obs: &Observation, n: usize) -> Vec<(usize, f64)> {
        (**self).top_n(obs, n)
    }
}

/// Probability-weighted mean of the top-`n` bucket centres, renormalised.
pub fn estimate_value<V: ValueFn + ?Sized>(f: &V, obs: &Observation, n: usize) -> Result<f64> {
    let b = f.buckets();
    let top = f.top_n(obs, n);
    let mass: f64 = top.iter().map(|(_, p)| p).sum();
    if top.is_empty() || mass <= 0.0 {
        return Err(Error::EmptyPrediction);
    }
    Ok(top.iter().map(|&(i, p)| p * b.center(i)).sum::<f64>() / mass)
}

/// Always predicts one bucket.
#[derive(Debug, Clone, Copy)]
pub struct ConstantValue {
    pub buckets: ValueBuckets,
    pub bucket: usize,
}

impl ConstantValue {
    pub fn new(buckets: ValueBuckets, value: f64) -> Self {
        ConstantValue { buckets, bucket: buckets.bucketize(value) }
    }
}

impl ValueFn for ConstantValue {
    fn buckets(&self) -> ValueBuckets {
        self.buckets
    }
    fn top_n(&self, _: &Observation, n: usize) -> Vec<(usize, f64)> {
        if n == 0 {
            Vec::new()
        } else {
            vec![(self.bucket, 1.0)]
        }
    }
}

/// Bucket counts per observation digest, with the pooled distribution for unseen
/// observations.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularValue {
    buckets: ValueBuckets,
    table: BTreeMap<u64, BTreeMap<usize, u32>>,
    global: BTreeMap<usize, u32>,
}

#[derive(Serialize, Deserialize)]
struct TabularValueFile {
    buckets: ValueBuckets,
    table: BTreeMap<String, BTreeMap<usize, u32>>,
}

impl TabularValue {
    /// Fits on `(digest, target)` samples.
    pub fn fit(samples: &[(u64, f64)], buckets: ValueBuckets) -> Result<Self> {
        buckets.validate()?;
        let mut table: BTreeMap<u64, BTreeMap<usize, u32>> = BTreeMap::new();
        for &(d, v) in samples {
            *table.entry(d).or_default().entry(buckets.bucketize(v)).or_default() += 1;
        }
        Self::from_table(buckets, table)
    }

    fn from_table(buckets: ValueBuckets, table: BTreeMap<u64, BTreeMap<usize, u32>>) -> Result<Self> {
        let mut global: BTreeMap<usize, u32> = BTreeMap::new();
        for counts in table.values() {
            for (&i, &c) in counts {
                if i >= buckets.n {
                    return Err(Error::Format(format!("bucket {i} out of range")));
                }
                *global.entry(i).or_default() += c;
            }
        }
        if global.values().all(|&c| c == 0) {
            return Err(Error::EmptyDataset);
        }
        Ok(TabularValue { buckets, table, global })
    }

    pub fn knows(&self, digest: u64) -> bool {
        self.table.contains_key(&digest)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = TabularValueFile {
            buckets: self.buckets,
            table: self.table.iter().map(|(d, c)| (format!("{d:016x}"), c.clone())).collect(),
        };
        std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: TabularValueFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        file.buckets.validate()?;
        let mut table = BTreeMap::new();
        for (k, c) in file.table {
            let d = u64::from_str_radix(&k, 16).map_err(|_| Error::Format(format!("bad digest key `{k}`")))?;
            table.insert(d, c);
        }
        Self::from_table(file.buckets, table)
    }
}

impl ValueFn for TabularValue {
    fn buckets(&self) -> ValueBuckets {
        self.buckets
    }

    fn top_n(&self, obs: &Observation, n: usize) -> Vec<(usize, f64)> {
        let counts = self.table.get(&obs.digest).unwrap_or(&self.global);
        let total: u32 = counts.values().sum();
        let mut out: Vec<(usize, f64)> = counts.iter().map(|(&i, &c)| (i, c as f64 / total as f64)).collect();
        // Stable sort over ascending bucket index: ties keep the lower bucket first.
        out.sort_by(|a, b| b.1.total_cmp(&a.1));
        out.truncate(n);
        out
    }
}
