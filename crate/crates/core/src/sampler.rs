//! Rejection sampling of observable pairs from a [`TruncationModel`].
//!
//! Attempted draw `i` consumes the `2i`-th and `(2i+1)`-th 64-bit outputs of a
//! ChaCha20 keystream keyed by the seed. ChaCha is counter based, so draw `i`
//! is a fixed function of `(seed, i)` no matter how many draws precede it or
//! which sampling mode is used.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::TruncationModel;
use crate::scalar::Real;

/// Upper bound on attempted draws for fixed-`n` sampling.
pub const ATTEMPT_BUDGET: u64 = 1_000_000_000;

/// Name of the generator, echoed into reports.
pub const GENERATOR: &str = "ChaCha20 (rand_chacha), two 64-bit words per attempted draw";

/// Observed pairs `(t_i, y_i)` with `y_i >= t_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedSample<S> {
    pairs: Vec<(S, S)>,
    attempted: u64,
    seed: Option<u64>,
}

impl<S: Clone + PartialOrd + crate::scalar::Scalar> TruncatedSample<S> {
    /// Validates every pair; `attempted == 0` means unknown.
    pub fn new(pairs: Vec<(S, S)>, attempted: u64, seed: Option<u64>) -> Result<Self> {
        for (index, (t, y)) in pairs.iter().enumerate() {
            // NaN compares false and is rejected here too
            if !(y >= t) {
                return Err(Error::InvalidPair {
                    index,
                    t: t.to_f64_lossy(),
                    y: y.to_f64_lossy(),
                });
            }
        }
        if attempted > 0 && (pairs.len() as u64) > attempted {
            return Err(Error::InvalidArgument(format!(
                "{} accepted pairs exceed {attempted} attempts",
                pairs.len()
            )));
        }
        Ok(TruncatedSample {
            pairs,
            attempted,
            seed,
        })
    }

    /// A sample read from data: no attempt count, no seed.
    pub fn from_pairs(pairs: Vec<(S, S)>) -> Result<Self> {
        Self::new(pairs, 0, None)
    }

    pub fn pairs(&self) -> &[(S, S)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn attempted(&self) -> u64 {
        self.attempted
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn ys(&self) -> impl Iterator<Item = &S> {
        self.pairs.iter().map(|(_, y)| y)
    }

    pub fn ts(&self) -> impl Iterator<Item = &S> {
        self.pairs.iter().map(|(t, _)| t)
    }

    /// True when some `y` value occurs more than once.
    pub fn has_ties(&self) -> bool {
        let mut ys: Vec<&S> = self.ys().collect();
        ys.sort_by(|a, b| a.partial_cmp(b).expect("validated"));
        ys.windows(2).any(|w| w[0] == w[1])
    }

    pub fn map<T, M: Fn(&S) -> T>(&self, m: M) -> TruncatedSample<T> {
        TruncatedSample {
            pairs: self.pairs.iter().map(|(t, y)| (m(t), m(y))).collect(),
            attempted: self.attempted,
            seed: self.seed,
        }
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `index` under `master`.
pub fn replication_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index))
}

struct DrawStream {
    rng: ChaCha20Rng,
}

impl DrawStream {
    fn new(seed: u64) -> Self {
        DrawStream {
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    fn unit<S: Real>(&mut self) -> S {
        let bits = self.rng.next_u64() >> 11;
        let u = (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        let half_eps = S::epsilon() / S::lit(2.0);
        S::lit(u).max(half_eps).min(S::one() - half_eps)
    }

    fn pair<S: Real>(&mut self, model: &TruncationModel<S>) -> (S, S) {
        let uy = self.unit::<S>();
        let ut = self.unit::<S>();
        (model.g().quantile(ut), model.f().quantile(uy))
    }
}

/// `population` independent draws of `(T, Y)`; keeps those with `Y >= T`.
pub fn draw_fixed_population<S: Real>(model: &TruncationModel<S>, population: u64, seed: u64) -> TruncatedSample<S> {
    let mut stream = DrawStream::new(seed);
    let mut pairs = Vec::new();
    for _ in 0..population {
        let (t, y) = stream.pair(model);
        if y >= t {
            pairs.push((t, y));
        }
    }
    TruncatedSample {
        pairs,
        attempted: population,
        seed: Some(seed),
    }
}

/// Draws until exactly `n_target` pairs are accepted.
pub fn draw_fixed_n<S: Real>(model: &TruncationModel<S>, n_target: usize, seed: u64) -> Result<TruncatedSample<S>> {
    draw_fixed_n_with_budget(model, n_target, seed, ATTEMPT_BUDGET)
}

pub fn draw_fixed_n_with_budget<S: Real>(
    model: &TruncationModel<S>,
    n_target: usize,
    seed: u64,
    budget: u64,
) -> Result<TruncatedSample<S>> {
    let mut stream = DrawStream::new(seed);
    let mut pairs = Vec::with_capacity(n_target);
    let mut attempted = 0u64;
    while pairs.len() < n_target {
        if attempted >= budget {
            return Err(Error::SamplingBudget {
                budget,
                accepted: pairs.len(),
            });
        }
        attempted += 1;
        let (t, y) = stream.pair(model);
        if y >= t {
            pairs.push((t, y));
        }
    }
    Ok(TruncatedSample {
        pairs,
        attempted,
        seed: Some(seed),
    })
}
