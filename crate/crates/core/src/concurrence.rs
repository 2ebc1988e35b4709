//! Bipartite concurrences of three- and four-qubit pure states.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Bipartition, DensityMatrix, PureState};

/// Factor taking the squared I-concurrence across a two-two cut to `[0, 1]`.
pub const TWO_TO_OTHER_NORM: f64 = 2.0 / 3.0;

/// Tolerance on the simplex and monogamy margins.
pub const MARGIN_TOL: f64 = 1e-9;

/// The three two-two cuts, in the order `12|34`, `13|24`, `14|23`.
pub const TWO_TWO_CUTS: [([usize; 2], [usize; 2]); 3] =
    [([1, 2], [3, 4]), ([1, 3], [2, 4]), ([1, 4], [2, 3])];

/// Unordered qubit pairs in the order 12, 13, 14, 23, 24, 34.
pub const PAIRS: [(usize, usize); 6] = [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)];

/// Index of the unordered pair `{i, j}` in [`PAIRS`].
pub fn pair_index(i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    PAIRS
        .iter()
        .position(|&p| p == (a, b))
        .unwrap_or_else(|| panic!("({i}, {j}) is not a pair of distinct qubits in 1..=4"))
}

/// The seven squared bipartite concurrences of a four-qubit pure state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "ProfileJson", from = "ProfileJson")]
pub struct ConcurrenceProfile {
    /// `C^2_{i(jkl)}` for `i = 1..4`.
    pub one_to_other: [f64; 4],
    /// `C^2_{(ij)(kl)}` for the cuts in [`TWO_TWO_CUTS`] order.
    pub two_to_other: [f64; 3],
}

impl ConcurrenceProfile {
    pub fn new(one_to_other: [f64; 4], two_to_other: [f64; 3]) -> Self {
        Self {
            one_to_other,
            two_to_other,
        }
    }

    /// All seven entries, one-to-other first.
    pub fn entries(&self) -> [f64; 7] {
        let [a, b, c, d] = self.one_to_other;
        let [e, f, g] = self.two_to_other;
        [a, b, c, d, e, f, g]
    }

    /// Same profile with every two-to-other entry multiplied by `factor`.
    pub fn scale_two_to_other(&self, factor: f64) -> Self {
        Self {
            one_to_other: self.one_to_other,
            two_to_other: self.two_to_other.map(|v| v * factor),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TwoToOtherJson {
    #[serde(rename = "12|34")]
    c12_34: f64,
    #[serde(rename = "13|24")]
    c13_24: f64,
    #[serde(rename = "14|23")]
    c14_23: f64,
}

#[derive(Serialize, Deserialize)]
struct ProfileJson {
    one_to_other: [f64; 4],
    two_to_other: TwoToOtherJson,
}

impl From<ConcurrenceProfile> for ProfileJson {
    fn from(p: ConcurrenceProfile) -> Self {
        let [c12_34, c13_24, c14_23] = p.two_to_other;
        Self {
            one_to_other: p.one_to_other,
            two_to_other: TwoToOtherJson {
                c12_34,
                c13_24,
                c14_23,
            },
        }
    }
}

impl From<ProfileJson> for ConcurrenceProfile {
    fn from(p: ProfileJson) -> Self {
        let t = p.two_to_other;
        Self::new(p.one_to_other, [t.c12_34, t.c13_24, t.c14_23])
    }
}

/// Squared pairwise (Wootters) concurrences `C^2_{ij}` in [`PAIRS`] order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseConcurrences {
    pub values: [f64; 6],
}

impl PairwiseConcurrences {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[pair_index(i, j)]
    }
}

fn clamp_unit(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

fn check_qubits(state: &PureState, n: usize) -> Result<()> {
    if state.n_qubits() != n {
        return Err(Error::UnsupportedQubits(
            state.n_qubits(),
            if n == 4 { "4" } else { "3" },
        ));
    }
    Ok(())
}

/// Squared I-concurrence `2 (1 - Tr rho_left^2)` across `cut`.
pub fn squared_i_concurrence(state: &PureState, cut: &Bipartition) -> Result<f64> {
    if cut.n_qubits() != state.n_qubits() {
        return Err(Error::InvalidPartition(format!(
            "cut {cut} does not match a {}-qubit state",
            state.n_qubits()
        )));
    }
    let purity = state.reduced_purity(cut.left())?;
    Ok((2.0 * (1.0 - purity)).max(0.0))
}

/// Profile with an arbitrary two-to-other normalization factor.
///
/// Entries are clamped below at zero only, so factors above 2/3 can push the
/// two-to-other values past one.
pub fn concurrence_profile_with_factor(state: &PureState, factor: f64) -> Result<ConcurrenceProfile> {
    check_qubits(state, 4)?;
    let mut one = [0.0; 4];
    for (i, slot) in one.iter_mut().enumerate() {
        *slot = clamp_unit(squared_i_concurrence(
            state,
            &Bipartition::one_to_other(4, i + 1)?,
        )?);
    }
    let mut two = [0.0; 3];
    for (slot, (left, _)) in two.iter_mut().zip(TWO_TWO_CUTS) {
        *slot = factor * squared_i_concurrence(state, &Bipartition::new(4, &left)?)?;
    }
    Ok(ConcurrenceProfile::new(one, two))
}

/// The seven squared bipartite concurrences, each in `[0, 1]`.
pub fn concurrence_profile(state: &PureState) -> Result<ConcurrenceProfile> {
    let mut p = concurrence_profile_with_factor(state, TWO_TO_OTHER_NORM)?;
    p.two_to_other = p.two_to_other.map(clamp_unit);
    Ok(p)
}

/// `C^2_{i(jk)}` for the three qubits of a three-qubit state.
pub fn one_to_other_3(state: &PureState) -> Result<[f64; 3]> {
    check_qubits(state, 3)?;
    let mut out = [0.0; 3];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = clamp_unit(squared_i_concurrence(
            state,
            &Bipartition::one_to_other(3, i + 1)?,
        )?);
    }
    Ok(out)
}

fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = SymmetricEigen::new(m.clone());
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Wootters concurrence of a two-qubit density matrix.
///
/// Uses the Hermitian form `sqrt(rho) rho~ sqrt(rho)`, which shares its
/// spectrum with `rho rho~`.
pub fn wootters_concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::InvalidDensity(format!(
            "Wootters concurrence needs a 4x4 matrix, got {}",
            rho.dim()
        )));
    }
    let m = rho.entries();
    let (vals, vecs) = hermitian_eigen(m);
    let sqrt_diag = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        4,
        vals.iter().map(|&v| Complex64::new(v.max(0.0).sqrt(), 0.0)),
    ));
    let sqrt_rho = &vecs * sqrt_diag * vecs.adjoint();

    // sigma_y (x) sigma_y is real: antidiagonal (-1, 1, 1, -1)
    let flip = DMatrix::from_fn(4, 4, |i, j| {
        if i + j == 3 {
            Complex64::new(if i == 0 || i == 3 { -1.0 } else { 1.0 }, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let tilde = &flip * m.conjugate() * &flip;
    let r = &sqrt_rho * tilde * &sqrt_rho;
    let r = (&r + r.adjoint()).scale(0.5);
    let (mut mu, _) = hermitian_eigen(&r);
    let mut mu: Vec<f64> = mu.drain(..).map(|v| v.max(0.0).sqrt()).collect();
    mu.sort_by(|a, b| b.total_cmp(a));
    Ok((mu[0] - mu[1] - mu[2] - mu[3]).max(0.0))
}

/// Squared Wootters concurrence of the marginal on qubits `{i, j}`.
pub fn pairwise_concurrence_sq(state: &PureState, i: usize, j: usize) -> Result<f64> {
    check_qubits(state, 4)?;
    if i == j {
        return Err(Error::InvalidPartition(format!(
            "pair needs two distinct qubits, got ({i}, {j})"
        )));
    }
    let rho = state.reduced_density(&[i, j])?;
    let c = wootters_concurrence(&rho)?;
    Ok(clamp_unit(c * c))
}

/// All six `C^2_{ij}`.
pub fn pairwise_profile(state: &PureState) -> Result<PairwiseConcurrences> {
    let mut values = [0.0; 6];
    for (slot, &(i, j)) in values.iter_mut().zip(PAIRS.iter()) {
        *slot = pairwise_concurrence_sq(state, i, j)?;
    }
    Ok(PairwiseConcurrences { values })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexReport {
    pub holds: bool,
    /// `sum of the other three - pivot`, per pivot.
    pub margins: [f64; 4],
    pub worst_margin: f64,
}

/// Evaluates `C^2_i <= C^2_j + C^2_k + C^2_l` for all four pivots.
pub fn check_simplex_inequality(profile: &ConcurrenceProfile) -> SimplexReport {
    let total: f64 = profile.one_to_other.iter().sum();
    let margins = profile.one_to_other.map(|c| total - 2.0 * c);
    let worst_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    SimplexReport {
        holds: worst_margin >= -MARGIN_TOL,
        margins,
        worst_margin,
    }
}

/// Three-qubit squared triangle inequality `C^2_i <= C^2_j + C^2_k`.
pub fn check_triangle_inequality(state: &PureState) -> Result<(bool, [f64; 3])> {
    let c = one_to_other_3(state)?;
    let total: f64 = c.iter().sum();
    let margins = c.map(|v| total - 2.0 * v);
    Ok((margins.iter().all(|&m| m >= -MARGIN_TOL), margins))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonogamyReport {
    pub holds: bool,
    /// `C^2_{i(jkl)} - (C^2_ij + C^2_ik + C^2_il)` per pivot.
    pub slack: [f64; 4],
}

/// Checks the four-qubit monogamy relation for every pivot.
pub fn check_monogamy(state: &PureState) -> Result<MonogamyReport> {
    let profile = concurrence_profile(state)?;
    let pairs = pairwise_profile(state)?;
    let mut slack = [0.0; 4];
    for (i, s) in slack.iter_mut().enumerate() {
        let pivot = i + 1;
        let shared: f64 = (1..=4)
            .filter(|&q| q != pivot)
            .map(|q| pairs.get(pivot, q))
            .sum();
        *s = profile.one_to_other[i] - shared;
    }
    Ok(MonogamyReport {
        holds: slack.iter().all(|&s| s >= -MARGIN_TOL),
        slack,
    })
}
