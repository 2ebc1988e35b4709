//! Split areas of the concurrence tetrahedron and its volume.
//!
//! The six unknowns `sigma_ij` are the areas of the small triangles cut out
//! of each face by the contact point of the inscribed sphere; `sigma_ij` is
//! shared by faces `i` and `j`. They satisfy
//!
//! ```text
//! sigma_ij + sigma_ik + sigma_il = C^2_{i(jkl)}                     (4 eqs)
//! -sqrt(s_ij s_kl) + sqrt(s_ik s_jl) + sqrt(s_il s_jk) = lambda C^2_{(ij)(kl)}   (3 eqs)
//! ```
//!
//! With `u_ij = sqrt(sigma_ij)` the second group is bilinear, so the system
//! is solved in `(u, lambda)` by damped Newton iteration with the iterate
//! projected onto `u >= 0, lambda >= 0`.

use nalgebra::{SMatrix, SVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::concurrence::{check_simplex_inequality, ConcurrenceProfile, PAIRS, TWO_TWO_CUTS};
use crate::error::{Error, Result};

/// Profile entries at or below this are treated as exactly zero.
pub const DEGENERATE_TOL: f64 = 1e-9;

/// Volumes at or below this count as zero.
pub const VOLUME_TOL: f64 = 1e-10;

/// Roundoff allowance for negative bracket quantities.
const BRACKET_TOL: f64 = 1e-12;

type Vec7 = SVector<f64, 7>;
type Mat7 = SMatrix<f64, 7, 7>;

// Pair indices (into PAIRS) of the three complementary products
// u12 u34, u13 u24, u14 u23.
const PRODUCTS: [(usize, usize); 3] = [(0, 5), (1, 4), (2, 3)];

/// Newton solver settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Max-norm residual accepted as converged.
    pub tol: f64,
    pub max_iter: usize,
    /// Randomized restarts after the deterministic first attempt.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 200,
            restarts: 16,
            seed: 0,
        }
    }
}

/// Zero-volume classes of the concurrence tetrahedron.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DegeneracyClass {
    /// Positive volume.
    Generic,
    /// A two-to-other concurrence and the matching bracket vanish.
    TwoToOtherBisep,
    /// A one-to-other concurrence vanishes.
    OneToOtherBisep,
    /// Coplanar star pattern; never produced by a physical state.
    CoplanarImpossible,
    /// Every concurrence vanishes.
    ProductDot,
}

impl DegeneracyClass {
    pub fn is_generic(self) -> bool {
        self == DegeneracyClass::Generic
    }
}

/// Solution of the split-area system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaSolution {
    /// `sigma_ij` in the pair order 12, 13, 14, 23, 24, 34.
    pub sigma: [f64; 6],
    pub lambda: f64,
    /// Max-norm residual of all seven equations.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the profile took the analytic zero-volume path.
    pub degenerate: bool,
}

impl SigmaSolution {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.sigma[crate::concurrence::pair_index(i, j)]
    }

    /// Residuals of the face-sum and bracket equations against `profile`.
    pub fn residuals(&self, profile: &ConcurrenceProfile) -> ([f64; 4], [f64; 3]) {
        let u = self.sigma.map(|s| s.max(0.0).sqrt());
        let r = residual_vector(&u, self.lambda, profile);
        (
            [r[0], r[1], r[2], r[3]],
            [r[4], r[5], r[6]],
        )
    }
}

/// Terms of the volume formula.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeBreakdown {
    /// Total surface area `2 sum sigma`.
    pub surface: f64,
    /// `A0, A1, A2, A3`.
    pub brackets: [f64; 4],
    pub volume: f64,
}

fn face_sums(sigma: &[f64; 6]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (p, &(i, j)) in PAIRS.iter().enumerate() {
        out[i - 1] += sigma[p];
        out[j - 1] += sigma[p];
    }
    out
}

fn brackets_of(u: &[f64; 6]) -> [f64; 4] {
    let [p, q, r] = PRODUCTS.map(|(a, b)| u[a] * u[b]);
    [p + q + r, -p + q + r, p - q + r, p + q - r]
}

fn residual_vector(u: &[f64; 6], lambda: f64, profile: &ConcurrenceProfile) -> Vec7 {
    let sigma = u.map(|x| x * x);
    let faces = face_sums(&sigma);
    let a = brackets_of(u);
    let mut r = Vec7::zeros();
    for i in 0..4 {
        r[i] = faces[i] - profile.one_to_other[i];
    }
    for k in 0..3 {
        r[4 + k] = a[k + 1] - lambda * profile.two_to_other[k];
    }
    r
}

fn jacobian(u: &[f64; 6], profile: &ConcurrenceProfile) -> Mat7 {
    let mut j = Mat7::zeros();
    for (p, &(a, b)) in PAIRS.iter().enumerate() {
        j[(a - 1, p)] = 2.0 * u[p];
        j[(b - 1, p)] = 2.0 * u[p];
    }
    // row 4 + k is bracket k + 1; the product it negates is PRODUCTS[k]
    for k in 0..3 {
        for (m, &(a, b)) in PRODUCTS.iter().enumerate() {
            let sign = if m == k { -1.0 } else { 1.0 };
            j[(4 + k, a)] = sign * u[b];
            j[(4 + k, b)] = sign * u[a];
        }
        j[(4 + k, 6)] = -profile.two_to_other[k];
    }
    j
}

fn max_abs(v: &Vec7) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Volume terms for the given split areas.
pub fn volume(sigma: &[f64; 6]) -> Result<VolumeBreakdown> {
    if let Some(&neg) = sigma.iter().find(|&&s| s < -1e-10) {
        return Err(Error::NegativeSigma(neg));
    }
    let sigma = sigma.map(|s| s.max(0.0));
    let u = sigma.map(f64::sqrt);
    let surface = 2.0 * sigma.iter().sum::<f64>();
    let mut brackets = brackets_of(&u);
    let scale = brackets[0].max(1.0);
    for b in brackets.iter_mut() {
        if *b < -BRACKET_TOL * scale {
            return Err(Error::Internal(format!(
                "negative bracket {b:.3e}: split areas admit no tetrahedron"
            )));
        }
        if *b <= BRACKET_TOL * scale {
            *b = 0.0;
        }
    }
    let product: f64 = brackets.iter().product();
    let volume = std::f64::consts::SQRT_2 / 3.0 * surface.sqrt() * product.powf(0.25);
    Ok(VolumeBreakdown {
        surface,
        brackets,
        volume,
    })
}

/// Minimum-norm solution of the four face-sum equations, clipped at zero.
fn least_squares_start(profile: &ConcurrenceProfile) -> [f64; 6] {
    // M M^T = 2 I + 1 1^T, whose inverse is (I - 1 1^T / 6) / 2
    let s = profile.one_to_other;
    let total: f64 = s.iter().sum();
    let y = s.map(|v| (v - total / 6.0) / 2.0);
    let mut sigma = [0.0; 6];
    for (p, &(i, j)) in PAIRS.iter().enumerate() {
        sigma[p] = (y[i - 1] + y[j - 1]).max(0.0);
    }
    sigma
}

fn lambda_from(u: &[f64; 6], profile: &ConcurrenceProfile) -> f64 {
    let a = brackets_of(u);
    let c = profile.two_to_other;
    let den: f64 = c.iter().map(|x| x * x).sum();
    if den > 0.0 {
        ((a[1] * c[0] + a[2] * c[1] + a[3] * c[2]) / den).max(0.0)
    } else {
        0.0
    }
}

struct NewtonRun {
    u: [f64; 6],
    lambda: f64,
    residual: f64,
    iterations: usize,
}

fn newton(
    profile: &ConcurrenceProfile,
    mut u: [f64; 6],
    mut lambda: f64,
    opts: &SolverOptions,
) -> NewtonRun {
    let mut r = residual_vector(&u, lambda, profile);
    let mut norm = r.norm();
    let mut iterations = 0;
    while iterations < opts.max_iter && max_abs(&r) > opts.tol {
        iterations += 1;
        let jac = jacobian(&u, profile);
        let step = match jac.lu().solve(&(-r)) {
            Some(d) if d.iter().all(|x| x.is_finite()) => d,
            _ => match jac.svd(true, true).solve(&(-r), 1e-14) {
                Ok(d) => d,
                Err(_) => break,
            },
        };
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-10 {
            let mut cand_u = u;
            for p in 0..6 {
                cand_u[p] = (u[p] + t * step[p]).max(0.0);
            }
            let cand_lambda = (lambda + t * step[6]).max(0.0);
            let cand_r = residual_vector(&cand_u, cand_lambda, profile);
            let cand_norm = cand_r.norm();
            if cand_norm < norm {
                u = cand_u;
                lambda = cand_lambda;
                r = cand_r;
                norm = cand_norm;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    NewtonRun {
        u,
        lambda,
        residual: max_abs(&r),
        iterations,
    }
}

fn perturbed_start(base: &[f64; 6], profile: &ConcurrenceProfile, seed: u64) -> ([f64; 6], f64) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mean = (profile.one_to_other.iter().sum::<f64>() / 6.0).max(1e-6);
    let mut u = [0.0; 6];
    for p in 0..6 {
        let z: f64 = StandardNormal.sample(&mut rng);
        // keep zero entries reachable by mixing in the mean area
        let sigma = (0.5 * base[p] + 0.5 * mean) * (0.7 * z).exp();
        u[p] = sigma.sqrt();
    }
    let lambda = lambda_from(&u, profile);
    (u, lambda)
}

fn run_from_start(
    profile: &ConcurrenceProfile,
    start: ([f64; 6], f64),
    opts: &SolverOptions,
) -> (NewtonRun, bool) {
    let run = newton(profile, start.0, start.1, opts);
    let ok = run.residual <= opts.tol;
    (run, ok)
}

/// Start for attempt `attempt` of a solve seeded with `seed`. Attempt 0 is
/// the least-squares start.
fn start_for(profile: &ConcurrenceProfile, seed: u64, attempt: u64) -> ([f64; 6], f64) {
    let base = least_squares_start(profile);
    if attempt == 0 {
        let u = base.map(f64::sqrt);
        let lambda = lambda_from(&u, profile);
        (u, lambda)
    } else {
        let mixed = seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(attempt);
        perturbed_start(&base, profile, mixed)
    }
}

fn is_degenerate(profile: &ConcurrenceProfile) -> bool {
    profile.entries().iter().any(|&v| v <= DEGENERATE_TOL)
}

/// Closed-form solution for profiles with a vanishing entry.
fn degenerate_solution(profile: &ConcurrenceProfile) -> SigmaSolution {
    let s = profile.one_to_other;
    let mut sigma = [0.0; 6];
    let mut lambda = 0.0;

    let (pivot, smallest) = s
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("four entries");
    if smallest <= DEGENERATE_TOL {
        // Faces meeting the vanishing one carry no area on the shared edges;
        // the other three split areas close a triangle.
        let others: Vec<usize> = (1..=4).filter(|&q| q != pivot + 1).collect();
        for (a, b, c) in [
            (others[0], others[1], others[2]),
            (others[0], others[2], others[1]),
            (others[1], others[2], others[0]),
        ] {
            let v = (s[a - 1] + s[b - 1] - s[c - 1]) / 2.0;
            sigma[crate::concurrence::pair_index(a, b)] = v.max(0.0);
        }
    } else {
        let (cut, _) = profile
            .two_to_other
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("three entries");
        let ([i, j], [k, l]) = TWO_TWO_CUTS[cut];
        let a = (s[i - 1] + s[j - 1]) / 2.0;
        let b = (s[k - 1] + s[l - 1]) / 2.0;
        let cross = a * b / (2.0 * (a + b));
        for (p, &(x, y)) in PAIRS.iter().enumerate() {
            sigma[p] = if (x, y) == (i, j) {
                a * a / (a + b)
            } else if (x, y) == (k, l) {
                b * b / (a + b)
            } else {
                cross
            };
        }
        lambda = lambda_from(&sigma.map(f64::sqrt), profile);
    }
    let u = sigma.map(f64::sqrt);
    if profile.entries().iter().all(|&v| v <= DEGENERATE_TOL) {
        lambda = 0.0;
    }
    let residual = max_abs(&residual_vector(&u, lambda, profile));
    SigmaSolution {
        sigma,
        lambda,
        residual,
        iterations: 0,
        converged: true,
        degenerate: true,
    }
}

fn finish(run: NewtonRun) -> SigmaSolution {
    SigmaSolution {
        sigma: run.u.map(|x| x * x),
        lambda: run.lambda,
        residual: run.residual,
        iterations: run.iterations,
        converged: true,
        degenerate: false,
    }
}

fn check_feasible(profile: &ConcurrenceProfile) -> Result<()> {
    let report = check_simplex_inequality(profile);
    if !report.holds {
        return Err(Error::InfeasibleProfile(report.worst_margin));
    }
    if profile.entries().iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InfeasibleProfile(f64::NAN));
    }
    Ok(())
}

/// Solves for the split areas and `lambda`.
///
/// Profiles with an entry at or below [`DEGENERATE_TOL`] return the
/// closed-form zero-volume solution with `degenerate` set.
pub fn solve_sigma(profile: &ConcurrenceProfile, opts: &SolverOptions) -> Result<SigmaSolution> {
    check_feasible(profile)?;
    if is_degenerate(profile) {
        return Ok(degenerate_solution(profile));
    }
    let mut best: Option<NewtonRun> = None;
    let mut total_iter = 0;
    for attempt in 0..=opts.restarts as u64 {
        let (run, ok) = run_from_start(profile, start_for(profile, opts.seed, attempt), opts);
        total_iter += run.iterations;
        if ok {
            let mut sol = finish(run);
            sol.iterations = total_iter;
            return Ok(sol);
        }
        if best.as_ref().is_none_or(|b| run.residual < b.residual) {
            best = Some(run);
        }
    }
    Err(Error::NonConvergence {
        residual: best.map_or(f64::INFINITY, |b| b.residual),
        iterations: total_iter,
    })
}

/// Outcome of a multi-start uniqueness check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub all_converged_same: bool,
    /// Largest max-norm distance between two converged `sigma` vectors.
    pub max_spread: f64,
    pub starts: usize,
    /// Smallest `sigma` entry seen across all starts.
    pub min_sigma: f64,
}

/// Solves from `n_starts` randomized initializations and measures how far
/// apart the converged split areas are.
pub fn verify_uniqueness(
    profile: &ConcurrenceProfile,
    n_starts: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<UniquenessReport> {
    check_feasible(profile)?;
    if is_degenerate(profile) {
        let sol = degenerate_solution(profile);
        return Ok(UniquenessReport {
            all_converged_same: true,
            max_spread: 0.0,
            starts: n_starts,
            min_sigma: sol.sigma.iter().copied().fold(f64::INFINITY, f64::min),
        });
    }
    let mut solutions: Vec<[f64; 6]> = Vec::with_capacity(n_starts);
    for start in 0..n_starts as u64 {
        // each start gets its own randomized first attempt, then falls back
        // to the usual restart schedule
        let first = start_for(profile, seed, start.wrapping_mul(1009).wrapping_add(start));
        let (run, ok) = run_from_start(profile, first, opts);
        let sol = if ok {
            finish(run)
        } else {
            let opts = SolverOptions {
                seed: seed ^ (start + 1),
                ..*opts
            };
            solve_sigma(profile, &opts)?
        };
        solutions.push(sol.sigma);
    }
    let mut spread: f64 = 0.0;
    for (a, x) in solutions.iter().enumerate() {
        for y in &solutions[a + 1..] {
            let d = x
                .iter()
                .zip(y)
                .fold(0.0_f64, |m, (p, q)| m.max((p - q).abs()));
            spread = spread.max(d);
        }
    }
    let min_sigma = solutions
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(UniquenessReport {
        all_converged_same: spread < 1e-7,
        max_spread: spread,
        starts: n_starts,
        min_sigma,
    })
}

/// Assigns the zero-volume class of a solved tetrahedron.
pub fn classify_degeneracy(profile: &ConcurrenceProfile, sol: &SigmaSolution) -> DegeneracyClass {
    let vol = volume(&sol.sigma).map(|v| v.volume).unwrap_or(0.0);
    if vol > VOLUME_TOL {
        return DegeneracyClass::Generic;
    }
    let tol = DEGENERATE_TOL;
    if profile.entries().iter().all(|&v| v <= tol) {
        return DegeneracyClass::ProductDot;
    }
    if profile.one_to_other.iter().any(|&v| v <= tol) {
        return DegeneracyClass::OneToOtherBisep;
    }
    let u = sol.sigma.map(|s| s.max(0.0).sqrt());
    let a = brackets_of(&u);
    let scale = a[0].max(tol);
    if profile
        .two_to_other
        .iter()
        .zip(&a[1..])
        .any(|(&c, &ak)| c <= tol && ak <= tol * scale.max(1.0))
    {
        return DegeneracyClass::TwoToOtherBisep;
    }
    // star pattern: all three areas around one face positive, the rest zero
    let star = (1..=4).any(|i| {
        PAIRS.iter().enumerate().all(|(p, &(x, y))| {
            let touches = x == i || y == i;
            if touches {
                sol.sigma[p] > tol
            } else {
                sol.sigma[p] <= tol
            }
        })
    });
    if star {
        return DegeneracyClass::CoplanarImpossible;
    }
    // volume vanished numerically without an exact pattern: attribute it to
    // whichever bracket collapsed
    if a[1..].iter().any(|&ak| ak <= a[0] * 1e-6) && a[0] > tol {
        DegeneracyClass::TwoToOtherBisep
    } else {
        DegeneracyClass::OneToOtherBisep
    }
}
