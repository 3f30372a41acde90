use std::collections::HashSet;
use std::hash::Hash;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RetrievalError;

/// How a claim's recall@k is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecallVariant {
    /// |gold ∩ top-k| / |gold|
    #[default]
    Coverage,
    /// 1 if any gold sentence is in the top k, else 0.
    AnyHit,
}

impl std::str::FromStr for RecallVariant {
    type Err = RetrievalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "coverage" => Ok(RecallVariant::Coverage),
            "any_hit" => Ok(RecallVariant::AnyHit),
            other => Err(RetrievalError::Config(format!("unknown recall variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecallReport {
    /// Macro average over claims that have gold evidence.
    pub mean: f64,
    /// `None` for claims without gold evidence.
    pub per_claim: Vec<Option<f64>>,
    pub excluded: usize,
}

impl RecallReport {
    pub fn included_values(&self) -> Vec<f64> {
        self.per_claim.iter().flatten().copied().collect()
    }
}

pub fn recall_at_k<T: Eq + Hash>(
    ranked: &[Vec<T>],
    gold: &[HashSet<T>],
    k: usize,
    variant: RecallVariant,
) -> Result<RecallReport, RetrievalError> {
    if k == 0 {
        return Err(RetrievalError::InvalidK);
    }
    if ranked.len() != gold.len() {
        return Err(RetrievalError::Config(format!(
            "{} ranked lists but {} gold sets",
            ranked.len(),
            gold.len()
        )));
    }
    let per_claim: Vec<Option<f64>> = ranked
        .iter()
        .zip(gold)
        .map(|(list, g)| {
            if g.is_empty() {
                return None;
            }
            let top: HashSet<&T> = list.iter().take(k).collect();
            let hits = g.iter().filter(|x| top.contains(x)).count();
            Some(match variant {
                RecallVariant::Coverage => hits as f64 / g.len() as f64,
                RecallVariant::AnyHit => f64::from(u8::from(hits > 0)),
            })
        })
        .collect();
    let included: Vec<f64> = per_claim.iter().flatten().copied().collect();
    let mean = if included.is_empty() {
        0.0
    } else {
        included.iter().sum::<f64>() / included.len() as f64
    };
    Ok(RecallReport {
        mean,
        excluded: per_claim.len() - included.len(),
        per_claim,
    })
}

/// Mean of the values and the standard deviation of bootstrap resample means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub mean: f64,
    pub std: f64,
    pub resamples: usize,
}

pub fn bootstrap_interval(values: &[f64], resamples: usize, seed: u64) -> Result<Interval, RetrievalError> {
    if values.len() < 2 {
        return Err(RetrievalError::TooFewValues {
            needed: 2,
            got: values.len(),
        });
    }
    if resamples < 2 {
        return Err(RetrievalError::TooFewValues {
            needed: 2,
            got: resamples,
        });
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    // shifted two-pass variance; exact zero when every resample mean is equal
    let shift = means[0];
    let devs: Vec<f64> = means.iter().map(|m| m - shift).collect();
    let centre = devs.iter().sum::<f64>() / resamples as f64;
    let var = devs.iter().map(|d| (d - centre).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    Ok(Interval {
        mean,
        std: var.sqrt(),
        resamples,
    })
}
