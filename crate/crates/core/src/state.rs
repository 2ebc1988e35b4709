//! Pure states, density matrices and the benchmark state catalog.
//!
//! Basis index `b` encodes `|q1 q2 ... qn>` with qubit 1 in the most
//! significant bit, so `|0011>` is index 3 and `|1100>` is index 12.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NORM_FLOOR: f64 = 1e-12;

/// Normalized state vector of three or four qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Builds a state, rescaling the amplitudes to unit norm.
    pub fn new(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if !(3..=4).contains(&n_qubits) {
            return Err(Error::UnsupportedQubits(n_qubits, "3 or 4"));
        }
        Self::new_unchecked_size(n_qubits, amplitudes)
    }

    // Any register size; used for the subsystem factors of product states.
    fn new_unchecked_size(n_qubits: usize, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let expected = 1usize << n_qubits;
        if amplitudes.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm.is_nan() || norm <= NORM_FLOOR {
            return Err(Error::ZeroVector);
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Builds a state from real amplitudes.
    pub fn from_real(n_qubits: usize, amplitudes: &[f64]) -> Result<Self> {
        Self::new(
            n_qubits,
            amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    /// Computational basis state with the given index.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index + 1,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Self::new(n_qubits, amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Bit position (from the least significant end) holding `qubit`.
    fn shift(&self, qubit: usize) -> usize {
        self.n_qubits - qubit
    }

    /// Relabels qubits: qubit `q` of the result is qubit `perm[q-1]` of `self`.
    pub fn permute_qubits(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_qubits;
        let mut seen = vec![false; n + 1];
        if perm.len() != n
            || perm
                .iter()
                .any(|&p| p == 0 || p > n || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::InvalidPartition(format!(
                "{perm:?} is not a permutation of 1..={n}"
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (b, amp) in self.amplitudes.iter().enumerate() {
            let mut target = 0usize;
            for (q, &src) in perm.iter().enumerate() {
                let bit = (b >> (n - src)) & 1;
                target |= bit << (n - 1 - q);
            }
            out[target] = *amp;
        }
        Ok(Self {
            n_qubits: n,
            amplitudes: out,
        })
    }

    /// Amplitudes reshaped as a `dim(keep) x dim(rest)` matrix.
    fn bipartite_matrix(&self, keep: &[usize]) -> DMatrix<Complex64> {
        let rest: Vec<usize> = (1..=self.n_qubits).filter(|q| !keep.contains(q)).collect();
        let mut m = DMatrix::zeros(1 << keep.len(), 1 << rest.len());
        for (b, amp) in self.amplitudes.iter().enumerate() {
            let row = gather_bits(b, keep, self.n_qubits);
            let col = gather_bits(b, &rest, self.n_qubits);
            m[(row, col)] = *amp;
        }
        m
    }

    /// Partial trace over the complement of `keep` (1-based qubit labels).
    pub fn reduced_density(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let keep = self.validate_subset(keep)?;
        let m = self.bipartite_matrix(&keep);
        Ok(DensityMatrix {
            entries: &m * m.adjoint(),
        })
    }

    /// `Tr rho_K^2` for the reduction onto `keep`, without forming `rho_K`
    /// when the complement is smaller.
    pub fn reduced_purity(&self, keep: &[usize]) -> Result<f64> {
        let keep = self.validate_subset(keep)?;
        let m = self.bipartite_matrix(&keep);
        // Tr (M M^+)^2 = Tr (M^+ M)^2, pick the smaller Gram matrix
        let gram = if m.nrows() <= m.ncols() {
            &m * m.adjoint()
        } else {
            m.adjoint() * &m
        };
        Ok(gram.iter().map(|z| z.norm_sqr()).sum())
    }

    fn validate_subset(&self, keep: &[usize]) -> Result<Vec<usize>> {
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if keep.is_empty() || keep.len() >= self.n_qubits {
            return Err(Error::InvalidPartition(format!(
                "keep set {keep:?} must be a nonempty strict subset of 1..={}",
                self.n_qubits
            )));
        }
        if keep.iter().any(|&q| q == 0 || q > self.n_qubits) {
            return Err(Error::InvalidPartition(format!(
                "qubit label out of range in {keep:?}"
            )));
        }
        Ok(keep)
    }

    /// Applies a single-qubit unitary to `qubit` (1-based).
    pub fn apply_local_unitary(&self, qubit: usize, u: &Matrix2<Complex64>) -> Result<Self> {
        if qubit == 0 || qubit > self.n_qubits {
            return Err(Error::InvalidPartition(format!("qubit {qubit} out of range")));
        }
        let dev = max_entry_norm((u.adjoint() * u - Matrix2::identity()).iter());
        if dev > 1e-10 {
            return Err(Error::NotUnitary(dev));
        }
        let mask = 1usize << self.shift(qubit);
        let mut out = self.amplitudes.clone();
        for b in 0..self.dim() {
            if b & mask != 0 {
                continue;
            }
            let (a0, a1) = (self.amplitudes[b], self.amplitudes[b | mask]);
            out[b] = u[(0, 0)] * a0 + u[(0, 1)] * a1;
            out[b | mask] = u[(1, 0)] * a0 + u[(1, 1)] * a1;
        }
        Ok(Self {
            n_qubits: self.n_qubits,
            amplitudes: out,
        })
    }

    pub fn to_json(&self) -> StateJson {
        StateJson {
            n_qubits: self.n_qubits,
            amplitudes: self.amplitudes.iter().map(|a| [a.re, a.im]).collect(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: StateJson = serde_json::from_str(text)?;
        raw.try_into()
    }
}

fn max_entry_norm<'a>(entries: impl Iterator<Item = &'a Complex64>) -> f64 {
    entries.fold(0.0, |m, z| m.max(z.norm()))
}

fn gather_bits(b: usize, qubits: &[usize], n: usize) -> usize {
    qubits
        .iter()
        .fold(0, |acc, &q| (acc << 1) | ((b >> (n - q)) & 1))
}

/// Wire form of a state: `{"n_qubits": 4, "amplitudes": [[re, im], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateJson {
    pub n_qubits: usize,
    pub amplitudes: Vec<[f64; 2]>,
}

impl TryFrom<StateJson> for PureState {
    type Error = Error;

    fn try_from(raw: StateJson) -> Result<Self> {
        let amps = raw
            .amplitudes
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        PureState::new(raw.n_qubits, amps)
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates hermiticity, trace and positivity at 1e-10.
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::InvalidDensity("matrix must be square".into()));
        }
        let herm = max_entry_norm((&entries - entries.adjoint()).iter());
        if herm > 1e-10 {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (deviation {herm:.3e})"
            )));
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidDensity(format!("trace {tr} is not 1")));
        }
        let rho = Self { entries };
        let min = rho.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(rho)
    }

    /// `|psi><psi|`.
    pub fn from_pure(state: &PureState) -> Self {
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        Self {
            entries: &v * v.adjoint(),
        }
    }

    /// `sum_i w_i rho_i`; weights must be nonnegative and sum to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidDensity("empty mixture".into()))?;
        let mut acc = DMatrix::zeros(first.1.dim(), first.1.dim());
        for (w, rho) in parts {
            if rho.dim() != first.1.dim() || *w < 0.0 {
                return Err(Error::InvalidDensity("incompatible mixture".into()));
            }
            acc += rho.entries.scale(*w);
        }
        Self::new(acc)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            entries: DMatrix::identity(dim, dim).scale(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.entries.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Number of qubits, when the dimension is a power of two.
    pub fn n_qubits(&self) -> Option<usize> {
        self.dim().is_power_of_two().then(|| self.dim().trailing_zeros() as usize)
    }

    /// Partial trace over the complement of `keep` (1-based labels of this
    /// matrix's own qubits; kept qubits stay in ascending order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let n = self
            .n_qubits()
            .ok_or_else(|| Error::InvalidDensity(format!("dimension {} is not 2^n", self.dim())))?;
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if keep.is_empty() || keep.len() > n || keep.iter().any(|&q| q == 0 || q > n) {
            return Err(Error::InvalidPartition(format!("keep set {keep:?} for {n} qubits")));
        }
        let rest: Vec<usize> = (1..=n).filter(|q| !keep.contains(q)).collect();
        let scatter = |k: usize, r: usize| {
            let mut b = 0;
            for (pos, &q) in keep.iter().enumerate() {
                b |= ((k >> (keep.len() - 1 - pos)) & 1) << (n - q);
            }
            for (pos, &q) in rest.iter().enumerate() {
                b |= ((r >> (rest.len() - 1 - pos)) & 1) << (n - q);
            }
            b
        };
        let dk = 1 << keep.len();
        let entries = DMatrix::from_fn(dk, dk, |i, j| {
            (0..1usize << rest.len())
                .map(|t| self.entries[(scatter(i, t), scatter(j, t))])
                .sum()
        });
        Ok(DensityMatrix { entries })
    }

    /// Parses a JSON matrix of `[re, im]` pairs, rows first.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let rows: Vec<Vec<[f64; 2]>> = serde_json::from_str(text)?;
        let rows: Vec<Vec<Complex64>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    /// Validated density matrix from rows of entries.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidDensity("matrix rows have unequal length".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn to_json(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.dim())
            .map(|i| {
                (0..self.dim())
                    .map(|j| [self.entries[(i, j)].re, self.entries[(i, j)].im])
                    .collect()
            })
            .collect()
    }
}

/// Which family a bipartition belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutKind {
    OneToOther,
    TwoToOther,
}

/// A split of the qubits `1..=n` into two nonempty groups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bipartition {
    n_qubits: usize,
    left: Vec<usize>,
    right: Vec<usize>,
}

impl Bipartition {
    pub fn new(n_qubits: usize, left: &[usize]) -> Result<Self> {
        let mut left = left.to_vec();
        left.sort_unstable();
        let len = left.len();
        left.dedup();
        if left.len() != len {
            return Err(Error::InvalidPartition(format!("repeated qubit in {left:?}")));
        }
        if left.is_empty() || left.len() >= n_qubits || left.iter().any(|&q| q == 0 || q > n_qubits)
        {
            return Err(Error::InvalidPartition(format!(
                "{left:?} is not a nonempty strict subset of 1..={n_qubits}"
            )));
        }
        let right = (1..=n_qubits).filter(|q| !left.contains(q)).collect();
        Ok(Self {
            n_qubits,
            left,
            right,
        })
    }

    /// `{i} | rest`.
    pub fn one_to_other(n_qubits: usize, i: usize) -> Result<Self> {
        Self::new(n_qubits, &[i])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn left(&self) -> &[usize] {
        &self.left
    }

    pub fn right(&self) -> &[usize] {
        &self.right
    }

    pub fn flipped(&self) -> Self {
        Self {
            n_qubits: self.n_qubits,
            left: self.right.clone(),
            right: self.left.clone(),
        }
    }

    pub fn kind(&self) -> CutKind {
        if self.left.len().min(self.right.len()) == 1 {
            CutKind::OneToOther
        } else {
            CutKind::TwoToOther
        }
    }
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[usize]| v.iter().map(|q| q.to_string()).collect::<String>();
        write!(f, "{}|{}", join(&self.left), join(&self.right))
    }
}

/// The benchmark states.
///
/// The biseparable representatives are:
/// * `BisepOneToOther`: `|0> (x) GHZ3`
/// * `BisepTwoToTwo`: `Bell (x) Bell` on qubits (12)(34)
/// * `BisepOneOneTwo`: `|0>|0> (x) Bell`
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NamedState {
    Ghz4,
    Cluster4,
    W4,
    Ghz3,
    W3,
    Product4,
    BisepOneToOther,
    BisepTwoToTwo,
    BisepOneOneTwo,
}

impl NamedState {
    pub const ALL: [NamedState; 9] = [
        NamedState::Ghz4,
        NamedState::Cluster4,
        NamedState::W4,
        NamedState::Ghz3,
        NamedState::W3,
        NamedState::Product4,
        NamedState::BisepOneToOther,
        NamedState::BisepTwoToTwo,
        NamedState::BisepOneOneTwo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NamedState::Ghz4 => "ghz4",
            NamedState::Cluster4 => "cluster4",
            NamedState::W4 => "w4",
            NamedState::Ghz3 => "ghz3",
            NamedState::W3 => "w3",
            NamedState::Product4 => "product4",
            NamedState::BisepOneToOther => "bisep-one-to-other",
            NamedState::BisepTwoToTwo => "bisep-two-to-two",
            NamedState::BisepOneOneTwo => "bisep-one-one-two",
        }
    }

    pub fn state(self) -> PureState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let sparse = |n: usize, entries: &[(usize, f64)]| {
            let mut amps = vec![0.0; 1 << n];
            for &(i, v) in entries {
                amps[i] = v;
            }
            PureState::from_real(n, &amps).expect("catalog state is valid")
        };
        match self {
            NamedState::Ghz4 => sparse(4, &[(0, h), (15, h)]),
            NamedState::Cluster4 => sparse(4, &[(0, 0.5), (3, 0.5), (12, 0.5), (15, -0.5)]),
            NamedState::W4 => sparse(4, &[(1, 0.5), (2, 0.5), (4, 0.5), (8, 0.5)]),
            NamedState::Ghz3 => sparse(3, &[(0, h), (7, h)]),
            NamedState::W3 => {
                let t = 1.0 / 3f64.sqrt();
                sparse(3, &[(1, t), (2, t), (4, t)])
            }
            NamedState::Product4 => sparse(4, &[(0, 1.0)]),
            // |0>|000> + |0>|111>
            NamedState::BisepOneToOther => sparse(4, &[(0, h), (7, h)]),
            // (|00>+|11>)(|00>+|11>)/2
            NamedState::BisepTwoToTwo => sparse(4, &[(0, 0.5), (3, 0.5), (12, 0.5), (15, 0.5)]),
            // |00>(|00>+|11>)/sqrt2
            NamedState::BisepOneOneTwo => sparse(4, &[(0, h), (3, h)]),
        }
    }
}

impl FromStr for NamedState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        NamedState::ALL
            .into_iter()
            .find(|n| n.name().replace('-', "") == key)
            .or(match key.as_str() {
                "ghz" => Some(NamedState::Ghz4),
                "cluster" | "phi4" => Some(NamedState::Cluster4),
                "w" => Some(NamedState::W4),
                "product" => Some(NamedState::Product4),
                _ => None,
            })
            .ok_or_else(|| Error::UnknownState(s.to_string()))
    }
}

impl fmt::Display for NamedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Convenience wrapper for [`NamedState::from_str`] followed by construction.
pub fn named_state(name: &str) -> Result<PureState> {
    Ok(name.parse::<NamedState>()?.state())
}

fn gaussian_amplitudes(dim: usize, rng: &mut ChaCha20Rng) -> Vec<Complex64> {
    (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        })
        .collect()
}

/// Haar-distributed pure state: a normalized standard complex Gaussian vector.
pub fn haar_random_state(n_qubits: usize, seed: u64) -> Result<PureState> {
    if !(3..=4).contains(&n_qubits) {
        return Err(Error::UnsupportedQubits(n_qubits, "3 or 4"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    PureState::new(n_qubits, gaussian_amplitudes(1 << n_qubits, &mut rng))
}

/// Tensor product of independent Haar-random states, one per block.
///
/// `blocks` must partition `1..=4`; a block of size one is a random
/// single-qubit state, so four singleton blocks give a random product state.
pub fn random_product_state(blocks: &[Vec<usize>], seed: u64) -> Result<PureState> {
    let n = 4;
    let mut all: Vec<usize> = blocks.iter().flatten().copied().collect();
    all.sort_unstable();
    if all != (1..=n).collect::<Vec<_>>() || blocks.iter().any(|b| b.is_empty()) {
        return Err(Error::InvalidPartition(format!(
            "{blocks:?} does not partition 1..={n}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let factors: Vec<(Vec<usize>, PureState)> = blocks
        .iter()
        .map(|block| {
            let mut qubits = block.clone();
            qubits.sort_unstable();
            let k = qubits.len();
            let s = PureState::new_unchecked_size(k, gaussian_amplitudes(1 << k, &mut rng))?;
            Ok((qubits, s))
        })
        .collect::<Result<_>>()?;

    let amps = (0..1usize << n)
        .map(|b| {
            factors
                .iter()
                .map(|(qubits, s)| s.amplitudes[gather_bits(b, qubits, n)])
                .product()
        })
        .collect();
    PureState::new(n, amps)
}

/// Product of independent Haar states on the two sides of `partition`.
pub fn random_biseparable_state(partition: &Bipartition, seed: u64) -> Result<PureState> {
    if partition.n_qubits() != 4 {
        return Err(Error::InvalidPartition(
            "biseparable sampling is defined for four qubits".into(),
        ));
    }
    random_product_state(
        &[partition.left().to_vec(), partition.right().to_vec()],
        seed,
    )
}

/// Haar-random 2x2 unitary (QR of a complex Ginibre matrix with phase fix).
pub fn haar_random_unitary2(seed: u64) -> Matrix2<Complex64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let g = gaussian_amplitudes(4, &mut rng);
    let m = Matrix2::new(g[0], g[1], g[2], g[3]);
    let qr = m.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = Matrix2::from_diagonal(&nalgebra::Vector2::new(
        phase(r[(0, 0)]),
        phase(r[(1, 1)]),
    ));
    q * phases
}

fn phase(z: Complex64) -> Complex64 {
    if z.norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        z / z.norm()
    }
}
