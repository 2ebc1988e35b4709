use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use cfill::*;

// Box-Muller over a different generator than the library uses.
fn oracle_haar(rng: &mut StdRng, dim: usize) -> Vec<Complex64> {
    let mut gauss = || {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let v: Vec<Complex64> = (0..dim).map(|_| Complex64::new(gauss(), gauss())).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

// Purity of qubit 1 by direct index summation.
fn oracle_purity_first(amps: &[Complex64]) -> f64 {
    let half = amps.len() / 2;
    let mut rho = [[Complex64::new(0.0, 0.0); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for r in 0..half {
                rho[a][b] += amps[a * half + r] * amps[b * half + r].conj();
            }
        }
    }
    rho.iter().flatten().map(|z| z.norm_sqr()).sum()
}

#[test]
fn haar_single_qubit_purity_matches_independent_sampler() {
    let n = 10_000;
    let lib: f64 = (0..n)
        .map(|i| haar_random_state(4, i).unwrap().reduced_purity(&[1]).unwrap())
        .sum::<f64>()
        / n as f64;
    let mut rng = StdRng::seed_from_u64(99);
    let oracle: f64 = (0..n)
        .map(|_| oracle_purity_first(&oracle_haar(&mut rng, 16)))
        .sum::<f64>()
        / n as f64;
    // (d_A + d_B) / (d_A d_B + 1) for d_A = 2, d_B = 8
    let exact = 10.0 / 17.0;
    assert!((lib - oracle).abs() < 0.01, "library {lib}, oracle {oracle}");
    assert!((lib - exact).abs() < 0.01, "library {lib}, exact {exact}");
}

#[test]
fn reduced_density_agrees_with_index_summation() {
    let s = haar_random_state(4, 3).unwrap();
    let rho = s.reduced_density(&[1]).unwrap();
    assert_abs_diff_eq!(rho.purity(), oracle_purity_first(s.amplitudes()), epsilon = 1e-12);
}

fn sorted_nonzero(mut ev: Vec<f64>) -> Vec<f64> {
    ev.retain(|&x| x > 1e-10);
    ev.sort_by(f64::total_cmp);
    ev
}

const KEEP_SETS: [&[usize]; 7] = [&[1], &[2], &[3], &[4], &[1, 2], &[1, 3], &[1, 4]];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schmidt_spectra_agree(seed in any::<u64>(), k in 0usize..7) {
        let s = haar_random_state(4, seed).unwrap();
        let keep = KEEP_SETS[k];
        let rest: Vec<usize> = (1..=4).filter(|q| !keep.contains(q)).collect();
        let a = sorted_nonzero(s.reduced_density(keep).unwrap().eigenvalues());
        let b = sorted_nonzero(s.reduced_density(&rest).unwrap().eigenvalues());
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn tracing_out_composes(seed in any::<u64>(), drop in 1usize..=4, k in 0usize..3) {
        let s = haar_random_state(4, seed).unwrap();
        let three: Vec<usize> = (1..=4).filter(|&q| q != drop).collect();
        let big = s.reduced_density(&three).unwrap();
        // keep one or two of the three survivors, labelled within `big`
        let local: &[usize] = [&[1][..], &[1, 3], &[2, 3]][k];
        let global: Vec<usize> = local.iter().map(|&l| three[l - 1]).collect();
        let twice = big.partial_trace(local).unwrap();
        let once = s.reduced_density(&global).unwrap();
        let diff = (twice.entries() - once.entries()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-12, "diff {}", diff);
    }

    #[test]
    fn haar_states_are_normalized_and_deterministic(seed in any::<u64>()) {
        let a = haar_random_state(4, seed).unwrap();
        prop_assert!((a.norm() - 1.0).abs() < 1e-12);
        prop_assert_eq!(a, haar_random_state(4, seed).unwrap());
    }

    #[test]
    fn json_round_trip(seed in any::<u64>()) {
        let s = haar_random_state(4, seed).unwrap();
        let text = serde_json::to_string(&s.to_json()).unwrap();
        let back = PureState::from_json_str(&text).unwrap();
        prop_assert!((back.inner(&s).norm() - 1.0).abs() < 1e-12);
    }
}
