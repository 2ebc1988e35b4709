//! Property suites over seeded random state ensembles.
//!
//! Each sample is checked independently by [`check_sample`], so callers can
//! evaluate samples in any order or in parallel and combine them with
//! [`summarize`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::concurrence::{check_monogamy, check_simplex_inequality, concurrence_profile};
use crate::error::{Error, Result};
use crate::measures::{fill4_from_profile, gbc_from_profile, gmc_from_profile};
use crate::solver::{verify_uniqueness, SolverOptions};
use crate::state::{haar_random_state, haar_random_unitary2, random_product_state, PureState};

/// Biseparable block patterns covering every zero-volume class: the four
/// one-to-other cuts, the three two-two cuts, the six one-one-two splits and
/// the full product.
pub const BISEPARABLE_PATTERNS: [&[&[usize]]; 14] = [
    &[&[1], &[2, 3, 4]],
    &[&[2], &[1, 3, 4]],
    &[&[3], &[1, 2, 4]],
    &[&[4], &[1, 2, 3]],
    &[&[1, 2], &[3, 4]],
    &[&[1, 3], &[2, 4]],
    &[&[1, 4], &[2, 3]],
    &[&[1], &[2], &[3, 4]],
    &[&[1], &[3], &[2, 4]],
    &[&[1], &[4], &[2, 3]],
    &[&[2], &[3], &[1, 4]],
    &[&[2], &[4], &[1, 3]],
    &[&[3], &[4], &[1, 2]],
    &[&[1], &[2], &[3], &[4]],
];

/// Random biseparable state using pattern `index % 14`.
pub fn random_biseparable_sample(index: usize, seed: u64) -> Result<PureState> {
    let pattern = BISEPARABLE_PATTERNS[index % BISEPARABLE_PATTERNS.len()];
    let blocks: Vec<Vec<usize>> = pattern.iter().map(|b| b.to_vec()).collect();
    random_product_state(&blocks, seed)
}

/// Seed for sample `index` of a run started from `base` (splitmix64).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Simplex,
    Monogamy,
    Uniqueness,
    Invariance,
    Genuine,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Simplex,
        Suite::Monogamy,
        Suite::Uniqueness,
        Suite::Invariance,
        Suite::Genuine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Simplex => "simplex",
            Suite::Monogamy => "monogamy",
            Suite::Uniqueness => "uniqueness",
            Suite::Invariance => "invariance",
            Suite::Genuine => "genuine",
        }
    }

    /// Whether the headline metric is bad when large (true) or when small.
    fn worst_is_max(self) -> bool {
        matches!(self, Suite::Uniqueness | Suite::Invariance | Suite::Genuine)
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownState(format!("suite `{s}`")))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Knobs shared by the suites.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSettings {
    pub solver: SolverOptions,
    /// Starts per state for the uniqueness suite.
    pub starts: usize,
    /// Random local unitaries per state for the invariance suite.
    pub local_unitaries: usize,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            starts: 10,
            local_unitaries: 50,
        }
    }
}

/// Thresholds used to pass or fail a sample.
pub mod limits {
    pub const MARGIN: f64 = -1e-9;
    pub const SPREAD: f64 = 1e-7;
    pub const MIN_SIGMA: f64 = -1e-10;
    pub const RELATIVE_DEVIATION: f64 = 1e-8;
    pub const BISEPARABLE_F4: f64 = 1e-8;
    pub const GENUINE_F4: f64 = 1e-6;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub index: u64,
    pub seed: u64,
    pub passed: bool,
    /// Suite headline: worst margin, spread, relative deviation, or the F4
    /// of the biseparable sample.
    pub metric: f64,
    /// Secondary value: smallest `sigma` (uniqueness) or F4 of the Haar
    /// sample (genuine).
    pub aux: Option<f64>,
    /// Set when the sample could not be evaluated.
    pub error: Option<String>,
}

fn relative_deviation(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn three_measures(state: &PureState, opts: &SolverOptions) -> Result<[f64; 3]> {
    let p = concurrence_profile(state)?;
    let f4 = fill4_from_profile(&p, opts)?.f4;
    Ok([f4, gmc_from_profile(&p), gbc_from_profile(&p)])
}

/// All 24 permutations of `[1, 2, 3, 4]`.
pub fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 1..=4 {
        for b in (1..=4).filter(|&b| b != a) {
            for c in (1..=4).filter(|&c| c != a && c != b) {
                let d = 10 - a - b - c;
                out.push([a, b, c, d]);
            }
        }
    }
    out
}

/// Largest relative change of (F4, GMC, GBC) under qubit permutations and
/// random single-qubit unitaries.
pub fn invariance_deviation(
    state: &PureState,
    n_unitaries: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<f64> {
    let base = three_measures(state, opts)?;
    let mut worst: f64 = 0.0;
    let mut track = |m: [f64; 3]| {
        for (x, y) in base.iter().zip(m) {
            worst = worst.max(relative_deviation(*x, y));
        }
    };
    for perm in permutations4() {
        track(three_measures(&state.permute_qubits(&perm)?, opts)?);
    }
    for k in 0..n_unitaries {
        let u = haar_random_unitary2(derive_seed(seed, k as u64));
        let moved = state.apply_local_unitary(k % 4 + 1, &u)?;
        track(three_measures(&moved, opts)?);
    }
    Ok(worst)
}

/// Runs one sample of `suite`. A sample whose evaluation errors (for example
/// a solver that does not converge) counts as failed, with a NaN metric.
pub fn check_sample(suite: Suite, index: u64, base_seed: u64, settings: &SuiteSettings) -> SampleOutcome {
    let seed = derive_seed(base_seed, index);
    let (passed, metric, aux, error) = match evaluate(suite, index, seed, settings) {
        Ok((passed, metric, aux)) => (passed, metric, aux, None),
        Err(e) => (false, f64::NAN, None, Some(e.to_string())),
    };
    SampleOutcome {
        index,
        seed,
        passed,
        metric,
        aux,
        error,
    }
}

fn evaluate(suite: Suite, index: u64, seed: u64, settings: &SuiteSettings) -> Result<(bool, f64, Option<f64>)> {
    let opts = &settings.solver;
    Ok(match suite {
        Suite::Simplex => {
            let r = check_simplex_inequality(&concurrence_profile(&haar_random_state(4, seed)?)?);
            (r.worst_margin >= limits::MARGIN, r.worst_margin, None)
        }
        Suite::Monogamy => {
            let r = check_monogamy(&haar_random_state(4, seed)?)?;
            let worst = r.slack.iter().copied().fold(f64::INFINITY, f64::min);
            (worst >= limits::MARGIN, worst, None)
        }
        Suite::Uniqueness => {
            let p = concurrence_profile(&haar_random_state(4, seed)?)?;
            let r = verify_uniqueness(&p, settings.starts, seed, opts)?;
            (
                r.max_spread < limits::SPREAD && r.min_sigma >= limits::MIN_SIGMA,
                r.max_spread,
                Some(r.min_sigma),
            )
        }
        Suite::Invariance => {
            let s = haar_random_state(4, seed)?;
            let dev = invariance_deviation(&s, settings.local_unitaries, seed, opts)?;
            (dev <= limits::RELATIVE_DEVIATION, dev, None)
        }
        Suite::Genuine => {
            let bisep = random_biseparable_sample(index as usize, seed)?;
            let f_bisep = fill4_from_profile(&concurrence_profile(&bisep)?, opts)?.f4;
            let haar = haar_random_state(4, derive_seed(seed, u64::MAX))?;
            let f_haar = fill4_from_profile(&concurrence_profile(&haar)?, opts)?.f4;
            (
                f_bisep < limits::BISEPARABLE_F4 && f_haar > limits::GENUINE_F4,
                f_bisep,
                Some(f_haar),
            )
        }
    })
}

/// Aggregate of a suite run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub samples: usize,
    pub passed: usize,
    pub failed: usize,
    /// Worst headline metric over the run.
    pub worst_metric: f64,
    /// Smallest secondary value: smallest `sigma` for `uniqueness`, smallest
    /// Haar F4 for `genuine`.
    pub worst_aux: Option<f64>,
    /// Failed samples that errored instead of evaluating.
    pub errors: usize,
    /// Seeds of failing samples, in sample order.
    pub offending_seeds: Vec<u64>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

/// Combines sample outcomes; the result does not depend on input order.
pub fn summarize(suite: Suite, mut outcomes: Vec<SampleOutcome>) -> SuiteReport {
    outcomes.sort_by_key(|o| o.index);
    let pick = |a: f64, b: f64, max: bool| {
        if a.is_nan() {
            b
        } else if b.is_nan() {
            a
        } else if max {
            a.max(b)
        } else {
            a.min(b)
        }
    };
    let max = suite.worst_is_max();
    let worst_metric = outcomes
        .iter()
        .fold(f64::NAN, |acc, o| pick(acc, o.metric, max));
    let worst_aux = outcomes.iter().filter_map(|o| o.aux).reduce(f64::min);
    let failed: Vec<u64> = outcomes.iter().filter(|o| !o.passed).map(|o| o.seed).collect();
    SuiteReport {
        suite,
        samples: outcomes.len(),
        passed: outcomes.len() - failed.len(),
        failed: failed.len(),
        errors: outcomes.iter().filter(|o| o.error.is_some()).count(),
        worst_metric,
        worst_aux,
        offending_seeds: failed,
    }
}

/// Sequential convenience runner.
pub fn run_suite(suite: Suite, samples: usize, seed: u64, settings: &SuiteSettings) -> SuiteReport {
    let outcomes = (0..samples as u64)
        .map(|i| check_sample(suite, i, seed, settings))
        .collect();
    summarize(suite, outcomes)
}
