//! Search over the three hidden-layer widths.
//!
//! Each trial trains on the head of the (normalized) training matrix and is
//! scored by MSE on its chronological tail. Trial seeds derive from the space
//! seed and the trial index alone, so results do not depend on scheduling.

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ann::{self, forward_matrix, init_params, mse, TrainConfig, TrainResult, HIDDEN_LAYERS};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub type Widths = [usize; HIDDEN_LAYERS];

pub const DEFAULT_WIDTHS: [usize; 6] = [8, 16, 32, 64, 128, 256];
pub const DEFAULT_TRIALS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Exhaustive,
    /// Sample this many distinct width triples (capped at the grid size).
    Random {
        trials: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    /// Candidate widths for each hidden layer.
    pub widths: [Vec<usize>; HIDDEN_LAYERS],
    pub mode: SearchMode,
    pub base: TrainConfig,
    pub seed: u64,
}

impl Default for SearchSpace {
    fn default() -> Self {
        let w = DEFAULT_WIDTHS.to_vec();
        SearchSpace {
            widths: [w.clone(), w.clone(), w],
            mode: SearchMode::Random { trials: DEFAULT_TRIALS },
            base: TrainConfig::default(),
            seed: 0,
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        for (l, list) in self.widths.iter().enumerate() {
            if list.is_empty() {
                return Err(Error::argument(format!(
                    "no width candidates for hidden layer {}",
                    l + 1
                )));
            }
            if list.contains(&0) {
                return Err(Error::argument("candidate widths must be at least 1"));
            }
        }
        if let SearchMode::Random { trials: 0 } = self.mode {
            return Err(Error::argument("random search needs at least one trial"));
        }
        self.base.validate()
    }

    pub fn grid_size(&self) -> usize {
        self.widths.iter().map(Vec::len).product()
    }

    fn grid_point(&self, mut index: usize) -> Widths {
        let mut out = [0; HIDDEN_LAYERS];
        for l in (0..HIDDEN_LAYERS).rev() {
            let n = self.widths[l].len();
            out[l] = self.widths[l][index % n];
            index /= n;
        }
        out
    }

    /// Width triples to train, in trial order.
    pub fn candidates(&self) -> Result<Vec<Widths>> {
        self.validate()?;
        let total = self.grid_size();
        match self.mode {
            SearchMode::Exhaustive => Ok((0..total).map(|i| self.grid_point(i)).collect()),
            SearchMode::Random { trials } => {
                let trials = trials.min(total);
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let indices: Vec<usize> = if trials * 2 >= total {
                    let mut all: Vec<usize> = (0..total).collect();
                    all.partial_shuffle(&mut rng, trials);
                    all.truncate(trials);
                    all
                } else {
                    let mut seen = HashSet::new();
                    let mut picked = Vec::with_capacity(trials);
                    while picked.len() < trials {
                        let i = rng.random_range(0..total);
                        if seen.insert(i) {
                            picked.push(i);
                        }
                    }
                    picked
                };
                Ok(indices.into_iter().map(|i| self.grid_point(i)).collect())
            }
        }
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` under search seed `seed`.
pub fn trial_seed(seed: u64, index: usize) -> u64 {
    mix(seed ^ mix(index as u64))
}

/// How trials are scored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationPolicy {
    /// Chronological tail of the training matrix used to score trials.
    pub tail_fraction: f64,
}

impl Default for ValidationPolicy {
    fn default() -> Self {
        ValidationPolicy { tail_fraction: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub hidden_sizes: Widths,
    /// Validation MSE in normalized units; infinite when training diverged.
    pub val_mse: f64,
    pub seed: u64,
    pub rank: usize,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    /// Trials sorted by rank.
    pub trials: Vec<TrialRecord>,
    pub best: TrialRecord,
    /// The best widths retrained on the whole training matrix.
    pub model: TrainResult,
}

/// Sorts trials by validation MSE, then lexicographic widths, and assigns ranks 1..n.
pub fn rank_trials(trials: &mut [TrialRecord]) {
    trials.sort_by(|a, b| {
        a.val_mse
            .total_cmp(&b.val_mse)
            .then_with(|| a.hidden_sizes.cmp(&b.hidden_sizes))
    });
    for (i, t) in trials.iter_mut().enumerate() {
        t.rank = i + 1;
    }
}

fn run_trial(widths: Widths, seed: u64, fit: &FeatureMatrix, val: &FeatureMatrix, base: &TrainConfig) -> f64 {
    let config = TrainConfig { seed, ..base.clone() };
    let outcome = init_params(fit.n_cols(), widths, config.init_scheme, seed)
        .and_then(|init| ann::train(&init, fit, &config))
        .and_then(|r| forward_matrix(&r.params, val).and_then(|p| mse(&p, val.target())));
    match outcome {
        Ok(v) if v.is_finite() => v,
        _ => f64::INFINITY,
    }
}

/// Runs every trial of `space` on a normalized training matrix, using up to
/// `jobs` worker threads.
pub fn search(
    space: &SearchSpace,
    train: &FeatureMatrix,
    policy: ValidationPolicy,
    jobs: usize,
) -> Result<SearchOutcome> {
    let candidates = space.candidates()?;
    let n = train.n_rows();
    let n_val = ann::validation_len(n, policy.tail_fraction);
    if n_val == 0 {
        return Err(Error::argument(format!(
            "validation tail fraction {} leaves no validation rows out of {n}",
            policy.tail_fraction
        )));
    }
    let fit = train.slice_rows(0..n - n_val);
    let val = train.slice_rows(n - n_val..n);

    let seeds: Vec<u64> = (0..candidates.len()).map(|i| trial_seed(space.seed, i)).collect();
    let scores = Mutex::new(vec![f64::NAN; candidates.len()]);
    let next = AtomicUsize::new(0);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        if i >= candidates.len() {
            break;
        }
        let score = run_trial(candidates[i], seeds[i], &fit, &val, &space.base);
        scores.lock().expect("score lock")[i] = score;
    };
    let jobs = jobs.clamp(1, candidates.len());
    if jobs == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..jobs {
                s.spawn(work);
            }
        });
    }
    let scores = scores.into_inner().expect("score lock");

    let mut trials: Vec<TrialRecord> = candidates
        .iter()
        .zip(&seeds)
        .zip(scores)
        .map(|((&hidden_sizes, &seed), val_mse)| TrialRecord {
            hidden_sizes,
            val_mse,
            seed,
            rank: 0,
        })
        .collect();
    if trials.iter().all(|t| !t.val_mse.is_finite()) {
        return Err(Error::Search(format!("all {} trials diverged", trials.len())));
    }
    rank_trials(&mut trials);
    let best = trials[0].clone();

    let config = TrainConfig {
        seed: best.seed,
        ..space.base.clone()
    };
    let init = init_params(train.n_cols(), best.hidden_sizes, config.init_scheme, best.seed)?;
    let model = ann::train(&init, train, &config)?;
    Ok(SearchOutcome { trials, best, model })
}

/// Table-style rendering `[h1; h2; h3]`.
pub fn format_widths(w: &Widths) -> String {
    format!("[{}; {}; {}]", w[0], w[1], w[2])
}

/// Trial log CSV: `h1,h2,h3,val_mse,seed,rank`, in rank order.
pub fn trial_log_csv(trials: &[TrialRecord]) -> String {
    let mut out = String::from("h1,h2,h3,val_mse,seed,rank\n");
    for t in trials {
        let [h1, h2, h3] = t.hidden_sizes;
        let val = if t.val_mse.is_finite() {
            t.val_mse.to_string()
        } else {
            "inf".to_string()
        };
        out.push_str(&format!("{h1},{h2},{h3},{val},{},{}\n", t.seed, t.rank));
    }
    out
}
