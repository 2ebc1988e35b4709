//! Upper bounds on the convex-roof extension of F4 to mixed states.
//!
//! Every pure-state decomposition of `rho = W W^+` (columns of `W` are the
//! eigenvectors scaled by `sqrt(eigenvalue)`) has the form `Psi = W U^T`
//! for an `m x r` matrix `U` with orthonormal columns; column `i` of `Psi` is
//! the unnormalized member `sqrt(p_i) |psi_i>`. The optimizer walks over such
//! isometries with Givens rotations between pairs of rows, each followed by a
//! golden-section search over the rotation angle.

use nalgebra::{DMatrix, DVector, RowDVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::concurrence_fill_4;
use crate::state::{DensityMatrix, PureState};

const RANK_TOL: f64 = 1e-10;
const WEIGHT_FLOOR: f64 = 1e-14;

/// A four-qubit density matrix with its spectral data.
#[derive(Clone, Debug)]
pub struct MixedState {
    rho: DensityMatrix,
    /// Columns `sqrt(lambda_k) |e_k>` for the `rank` nonzero eigenvalues.
    weighted_eigvecs: DMatrix<Complex64>,
}

impl MixedState {
    pub fn new(rho: DensityMatrix) -> Result<Self> {
        if rho.dim() != 16 {
            return Err(Error::InvalidDensity(format!(
                "expected a 16x16 matrix, got {0}x{0}",
                rho.dim()
            )));
        }
        let eig = SymmetricEigen::new(rho.entries().clone());
        let mut order: Vec<usize> = (0..16).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let kept: Vec<usize> = order
            .into_iter()
            .filter(|&k| eig.eigenvalues[k] > RANK_TOL)
            .collect();
        let mut w = DMatrix::zeros(16, kept.len());
        for (col, &k) in kept.iter().enumerate() {
            let scale = eig.eigenvalues[k].sqrt();
            w.set_column(col, &eig.eigenvectors.column(k).scale(scale));
        }
        Ok(Self {
            rho,
            weighted_eigvecs: w,
        })
    }

    pub fn from_pure(state: &PureState) -> Result<Self> {
        Self::new(DensityMatrix::from_pure(state))
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    /// Number of eigenvalues above 1e-10.
    pub fn rank(&self) -> usize {
        self.weighted_eigvecs.ncols()
    }

    /// `min(2 rank, 16)`.
    pub fn default_ensemble_size(&self) -> usize {
        (2 * self.rank()).min(16).max(self.rank())
    }
}

/// A pure-state decomposition `rho = sum_i w_i |psi_i><psi_i|`.
///
/// Members whose weight falls below 1e-14 are dropped from `weights` and
/// `states`; the isometry keeps all `m` rows.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub weights: Vec<f64>,
    pub states: Vec<PureState>,
    pub mixing_isometry: DMatrix<Complex64>,
}

impl Decomposition {
    /// `sum_i w_i |psi_i><psi_i|`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let mut acc = DMatrix::zeros(16, 16);
        for (w, s) in self.weights.iter().zip(&self.states) {
            let v = DVector::from_column_slice(s.amplitudes());
            acc += (&v * v.adjoint()).scale(*w);
        }
        acc
    }

    /// Weighted average of F4 over the members.
    pub fn average_f4(&self) -> Result<f64> {
        self.weights
            .iter()
            .zip(&self.states)
            .map(|(w, s)| Ok(w * concurrence_fill_4(s)?))
            .sum()
    }
}

/// Optimizer settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoofOptions {
    /// Decomposition size `m`; `None` uses [`MixedState::default_ensemble_size`].
    pub ensemble_size: Option<usize>,
    /// Rotation steps per start.
    pub budget: usize,
    pub starts: usize,
    pub seed: u64,
}

impl Default for RoofOptions {
    fn default() -> Self {
        Self {
            ensemble_size: None,
            budget: 200,
            starts: 4,
            seed: 0,
        }
    }
}

/// Result of [`convex_roof_f4`]. `value` is an upper bound on the convex
/// roof, never a certified minimum.
#[derive(Clone, Debug)]
pub struct RoofResult {
    pub value: f64,
    pub best: Decomposition,
    /// Final value reached by each start.
    pub start_values: Vec<f64>,
    /// `max - min` of `start_values`.
    pub spread: f64,
}

/// F4 of a member, with its weight. Members the solver cannot handle are
/// charged the maximal value 1, which keeps the total an upper bound.
fn member_cost(column: DVector<Complex64>) -> (f64, f64) {
    let p = column.norm_squared();
    if p <= WEIGHT_FLOOR {
        return (0.0, 0.0);
    }
    let f = PureState::new(4, column.iter().copied().collect())
        .ok()
        .and_then(|s| concurrence_fill_4(&s).ok())
        .unwrap_or(1.0);
    (p, f)
}

struct Walker<'a> {
    w: &'a DMatrix<Complex64>,
    u: DMatrix<Complex64>,
    costs: Vec<(f64, f64)>,
}

impl<'a> Walker<'a> {
    fn new(w: &'a DMatrix<Complex64>, u: DMatrix<Complex64>) -> Self {
        let costs = (0..u.nrows()).map(|i| member_cost(Self::member(w, &u, i))).collect();
        Self { w, u, costs }
    }

    fn member(w: &DMatrix<Complex64>, u: &DMatrix<Complex64>, i: usize) -> DVector<Complex64> {
        w * u.row(i).transpose()
    }

    fn value(&self) -> f64 {
        self.costs.iter().map(|(p, f)| p * f).sum()
    }

    fn rotated_rows(&self, i: usize, j: usize, theta: f64, phi: f64) -> (RowDVector<Complex64>, RowDVector<Complex64>) {
        let (c, s) = (theta.cos(), theta.sin());
        let e = Complex64::from_polar(1.0, phi);
        let ri = self.u.row(i).into_owned();
        let rj = self.u.row(j).into_owned();
        let new_i = ri.scale(c) - rj.map(|z| z * e * s);
        let new_j = ri.map(|z| z * e.conj() * s) + rj.scale(c);
        (new_i, new_j)
    }

    fn pair_cost(&self, i: usize, j: usize, theta: f64, phi: f64) -> (f64, (f64, f64), (f64, f64)) {
        let (ri, rj) = self.rotated_rows(i, j, theta, phi);
        let ci = member_cost(self.w * ri.transpose());
        let cj = member_cost(self.w * rj.transpose());
        (ci.0 * ci.1 + cj.0 * cj.1, ci, cj)
    }

    /// One rotation step on rows `(i, j)`; accepted only if it lowers the value.
    fn step(&mut self, i: usize, j: usize, phi: f64) {
        let current = self.costs[i].0 * self.costs[i].1 + self.costs[j].0 * self.costs[j].1;
        let f = |t: f64| self.pair_cost(i, j, t, phi).0;
        let theta = golden_section(f, -std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2, 40);
        let (val, ci, cj) = self.pair_cost(i, j, theta, phi);
        if val < current {
            let (ri, rj) = self.rotated_rows(i, j, theta, phi);
            self.u.set_row(i, &ri);
            self.u.set_row(j, &rj);
            self.costs[i] = ci;
            self.costs[j] = cj;
        }
    }

    fn decomposition(&self) -> Decomposition {
        let mut weights = Vec::new();
        let mut states = Vec::new();
        for i in 0..self.u.nrows() {
            let col = Self::member(self.w, &self.u, i);
            let p = col.norm_squared();
            if p > WEIGHT_FLOOR {
                if let Ok(s) = PureState::new(4, col.iter().copied().collect()) {
                    weights.push(p);
                    states.push(s);
                }
            }
        }
        Decomposition {
            weights,
            states,
            mixing_isometry: self.u.clone(),
        }
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    // the bracket may have missed theta = 0 when f is multimodal
    let mid = 0.5 * (a + b);
    if f(0.0) <= f(mid) {
        0.0
    } else {
        mid
    }
}

/// Random `m x r` isometry from the QR factor of a complex Gaussian matrix.
fn random_isometry(m: usize, r: usize, rng: &mut ChaCha20Rng) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(m, r, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    });
    g.qr().q()
}

fn start_seed(seed: u64, start: usize) -> u64 {
    seed.wrapping_mul(0x2545_F491_4F6C_DD1D)
        .wrapping_add(start as u64)
}

/// Searches pure-state decompositions of `state` for a low average F4.
///
/// Start 0 is the eigendecomposition; the others begin at random
/// isometries. Each start runs `budget` rotation steps with a step sequence
/// fixed by its seed, so raising the budget never raises the result.
pub fn convex_roof_f4(state: &MixedState, opts: &RoofOptions) -> Result<RoofResult> {
    let r = state.rank();
    let m = opts.ensemble_size.unwrap_or_else(|| state.default_ensemble_size());
    if m < r {
        return Err(Error::EnsembleTooSmall { m, rank: r });
    }
    let w = &state.weighted_eigvecs;
    let mut best: Option<(f64, Decomposition)> = None;
    let mut start_values = Vec::with_capacity(opts.starts.max(1));

    for start in 0..opts.starts.max(1) {
        let mut rng = ChaCha20Rng::seed_from_u64(start_seed(opts.seed, start));
        let u0 = if start == 0 {
            DMatrix::from_fn(m, r, |i, k| {
                Complex64::new(if i == k { 1.0 } else { 0.0 }, 0.0)
            })
        } else {
            random_isometry(m, r, &mut rng)
        };
        let mut walker = Walker::new(w, u0);
        if m > 1 {
            for _ in 0..opts.budget {
                let i = rng.random_range(0..m);
                let mut j = rng.random_range(0..m - 1);
                if j >= i {
                    j += 1;
                }
                let phi = rng.random_range(0.0..std::f64::consts::TAU);
                walker.step(i, j, phi);
            }
        }
        let value = walker.value();
        start_values.push(value);
        if best.as_ref().is_none_or(|(v, _)| value < *v) {
            best = Some((value, walker.decomposition()));
        }
    }

    let (value, best) = best.ok_or_else(|| Error::Internal("no decomposition evaluated".into()))?;
    let hi = start_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = start_values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(RoofResult {
        value,
        best,
        start_values,
        spread: hi - lo,
    })
}
