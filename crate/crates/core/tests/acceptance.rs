//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so every line is printed; exits nonzero
//! if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use cfill::concurrence::concurrence_profile_with_factor;
use cfill::convex_roof::{convex_roof_f4, MixedState, RoofOptions};
use cfill::geometry::{cayley_menger_volume, embed_tetrahedron};
use cfill::measures::fill4_from_profile;
use cfill::verify::{derive_seed, invariance_deviation, random_biseparable_sample, BISEPARABLE_PATTERNS};
use cfill::*;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let took = start.elapsed();
    o.detail = format!("{} [{:.2?}]", o.detail, took);
    if let Some(limit) = limit {
        if took > limit {
            o.pass = false;
            o.detail = format!("{} exceeds {:?}", o.detail, limit);
        }
    }
    o
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn f4_values() -> Outcome {
    let ghz = concurrence_fill_4(&NamedState::Ghz4.state()).unwrap();
    let cluster = concurrence_fill_4(&NamedState::Cluster4.state()).unwrap();
    outcome(
        (ghz - 1.0).abs() <= 1e-9 && (cluster - 0.9871).abs() <= 5e-4,
        format!("F4(GHZ) = {ghz:.12}, F4(cluster) = {cluster:.6}"),
    )
}

fn gbc_gmc_values() -> Outcome {
    let ghz = NamedState::Ghz4.state();
    let cluster = NamedState::Cluster4.state();
    let (bg, bc) = (gbc(&ghz).unwrap(), gbc(&cluster).unwrap());
    let (mg, mc) = (gmc(&ghz).unwrap(), gmc(&cluster).unwrap());
    let pass = (bg - 0.8405).abs() <= 5e-4
        && (bc - 0.9437).abs() <= 5e-4
        && (mg - 2.0 / 3.0).abs() <= 1e-9
        && (mc - 2.0 / 3.0).abs() <= 1e-9;
    outcome(
        pass,
        format!("GBC = ({bg:.6}, {bc:.6}), GMC = ({mg:.12}, {mc:.12})"),
    )
}

fn symbol(a: f64, b: f64) -> char {
    if (a - b).abs() <= 1e-6 {
        '='
    } else if a < b {
        '<'
    } else {
        '>'
    }
}

fn three_rankings() -> Outcome {
    let a = measure(&NamedState::Ghz4.state(), &opts()).unwrap();
    let b = measure(&NamedState::Cluster4.state(), &opts()).unwrap();
    let got = [symbol(a.gmc, b.gmc), symbol(a.gbc, b.gbc), symbol(a.f4, b.f4)];
    outcome(
        got == ['=', '<', '>'],
        format!("GMC '{}', GBC '{}', F4 '{}'", got[0], got[1], got[2]),
    )
}

fn genuine_condition() -> Outcome {
    let bisep: Vec<(usize, f64)> = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let s = random_biseparable_sample(i as usize, derive_seed(SEED, i)).unwrap();
            (i as usize % BISEPARABLE_PATTERNS.len(), concurrence_fill_4(&s).unwrap())
        })
        .collect();
    let haar: Vec<f64> = (0..1000u64)
        .into_par_iter()
        .map(|i| concurrence_fill_4(&haar_random_state(4, derive_seed(SEED + 1, i)).unwrap()).unwrap())
        .collect();
    let mut seen = [false; 14];
    bisep.iter().for_each(|&(p, _)| seen[p] = true);
    let worst_bisep = bisep.iter().map(|&(_, f)| f).fold(0.0, f64::max);
    let least_haar = haar.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        seen.iter().all(|&s| s) && worst_bisep < 1e-8 && least_haar > 1e-6,
        format!("max biseparable F4 = {worst_bisep:.3e}, min Haar F4 = {least_haar:.4}"),
    )
}

fn simplex_and_monogamy() -> Outcome {
    let margins: Vec<(f64, f64)> = (0..10_000u64)
        .into_par_iter()
        .map(|i| {
            let s = haar_random_state(4, derive_seed(SEED + 2, i)).unwrap();
            let simplex = check_simplex_inequality(&concurrence_profile(&s).unwrap()).worst_margin;
            let mono = check_monogamy(&s).unwrap().slack.into_iter().fold(f64::INFINITY, f64::min);
            (simplex, mono)
        })
        .collect();
    let ws = margins.iter().map(|m| m.0).fold(f64::INFINITY, f64::min);
    let wm = margins.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    outcome(
        ws >= -1e-9 && wm >= -1e-9,
        format!("10000 states: worst simplex margin {ws:.3e}, worst monogamy slack {wm:.3e}"),
    )
}

fn solver_uniqueness() -> Outcome {
    let reports: Vec<_> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(SEED + 3, i);
            let p = concurrence_profile(&haar_random_state(4, seed).unwrap()).unwrap();
            verify_uniqueness(&p, 10, seed, &opts()).unwrap()
        })
        .collect();
    let spread = reports.iter().map(|r| r.max_spread).fold(0.0, f64::max);
    let min_sigma = reports.iter().map(|r| r.min_sigma).fold(f64::INFINITY, f64::min);
    outcome(
        spread < 1e-7 && min_sigma >= -1e-10,
        format!("max spread {spread:.3e}, min sigma {min_sigma:.3e}"),
    )
}

fn invariance() -> Outcome {
    let worst = (0..200u64)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(SEED + 4, i);
            let s = haar_random_state(4, seed).unwrap();
            invariance_deviation(&s, 50, seed, &opts()).unwrap()
        })
        .reduce(|| 0.0, f64::max);
    outcome(
        worst <= 1e-8,
        format!("200 states x (24 permutations + 50 local unitaries): max relative deviation {worst:.3e}"),
    )
}

fn normalization_absorption() -> Outcome {
    let base_norm = 2.0 / 3.0;
    let mut states = vec![("GHZ".to_string(), NamedState::Ghz4.state())];
    for i in 0..20u64 {
        states.push((format!("haar {i}"), haar_random_state(4, derive_seed(SEED + 5, i)).unwrap()));
    }
    let mut pass = true;
    let mut notes = Vec::new();
    for factor in [0.5, 1.5, 3.0] {
        let (mut lambda_err, mut df4): (f64, f64) = (0.0, 0.0);
        let mut gmc_changed = Vec::new();
        for (name, s) in &states {
            let p0 = concurrence_profile_with_factor(s, base_norm).unwrap();
            let p = concurrence_profile_with_factor(s, base_norm * factor).unwrap();
            let f0 = fill4_from_profile(&p0, &opts()).unwrap();
            let f = fill4_from_profile(&p, &opts()).unwrap();
            lambda_err = lambda_err.max(rel(f.solution.lambda * factor, f0.solution.lambda));
            df4 = df4.max((f.f4 - f0.f4).abs());
            let min = |q: &ConcurrenceProfile| q.entries().into_iter().fold(f64::INFINITY, f64::min);
            if (min(&p) - min(&p0)).abs() > 1e-9 {
                gmc_changed.push(name.clone());
            }
        }
        let ghz_changed = gmc_changed.iter().any(|n| n == "GHZ");
        pass &= lambda_err <= 1e-9 && df4 < 1e-9 && ghz_changed && gmc_changed.len() >= 2;
        notes.push(format!(
            "x{factor}: lambda rel err {lambda_err:.1e}, max dF4 {df4:.1e}, GMC changed for {}/{} states (GHZ: {ghz_changed})",
            gmc_changed.len(),
            states.len()
        ));
    }
    outcome(pass, notes.join("; "))
}

fn geometry_round_trip() -> Outcome {
    let worst: (f64, f64) = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let p = concurrence_profile(&haar_random_state(4, derive_seed(SEED + 6, i)).unwrap()).unwrap();
            let sol = solve_sigma(&p, &opts()).unwrap();
            let emb = embed_tetrahedron(&sol).unwrap();
            let mut split_err: f64 = 0.0;
            for (pair, target) in emb.split_areas.iter().zip(sol.sigma) {
                for a in pair {
                    split_err = split_err.max(rel(*a, target));
                }
            }
            // independent volume: Cayley-Menger on the returned edges vs the closed form
            let cm = cayley_menger_volume(&emb.edge_lengths);
            (split_err, rel(cm, volume(&sol.sigma).unwrap().volume))
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let ghz = concurrence_profile(&NamedState::Ghz4.state()).unwrap();
    let emb = embed_tetrahedron(&solve_sigma(&ghz, &opts()).unwrap()).unwrap();
    let e = emb.edge_lengths;
    let edge_spread = e.iter().copied().fold(f64::MIN, f64::max) / e.iter().copied().fold(f64::MAX, f64::min) - 1.0;
    outcome(
        worst.0 <= 1e-7 && worst.1 <= 1e-9 && edge_spread <= 1e-9,
        format!(
            "max split rel err {:.2e}, max volume rel err {:.2e}, GHZ edge spread {edge_spread:.2e}",
            worst.0, worst.1
        ),
    )
}

fn cyclic_counterexample() -> Outcome {
    let state = NamedState::BisepOneToOther.state();
    let p = concurrence_profile(&state).unwrap();
    let area = cyclic_quadrilateral_area(&p);
    let f4 = concurrence_fill_4(&state).unwrap();
    // Brahmagupta by hand for edges (0, 1, 1, 1): s = 3/2
    let oracle = (1.5f64 * 0.5 * 0.5 * 0.5).sqrt();
    outcome(
        area > 0.5 && f4 == 0.0,
        format!("area {area:.6} (closed form {oracle:.6}, threshold 0.5), F4 = {f4}"),
    )
}

fn convex_roof() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();

    let mut rank1_err: f64 = 0.0;
    for s in [
        NamedState::Ghz4.state(),
        NamedState::Cluster4.state(),
        haar_random_state(4, SEED).unwrap(),
    ] {
        let pure = concurrence_fill_4(&s).unwrap();
        for m in [1, 3, 8] {
            let r = convex_roof_f4(
                &MixedState::from_pure(&s).unwrap(),
                &RoofOptions { ensemble_size: Some(m), budget: 20, starts: 2, seed: 1 },
            )
            .unwrap();
            rank1_err = rank1_err.max((r.value - pure).abs());
        }
    }
    pass &= rank1_err <= 1e-9;
    notes.push(format!("rank-1 err {rank1_err:.1e}"));

    let ghz = DensityMatrix::from_pure(&NamedState::Ghz4.state());
    let w = DensityMatrix::from_pure(&NamedState::W4.state());
    let rho = MixedState::new(DensityMatrix::mixture(&[(0.5, &ghz), (0.5, &w)]).unwrap()).unwrap();
    let values: Vec<f64> = [0, 10, 20, 40, 80, 160]
        .into_iter()
        .map(|budget| convex_roof_f4(&rho, &RoofOptions { budget, seed: 5, ..Default::default() }).unwrap().value)
        .collect();
    let monotone = values.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    pass &= monotone;
    notes.push(format!(
        "budget sweep {}",
        values.iter().map(|v| format!("{v:.5}")).collect::<Vec<_>>().join(" >= ")
    ));

    let mm = MixedState::new(DensityMatrix::maximally_mixed(16)).unwrap();
    let v = convex_roof_f4(&mm, &RoofOptions::default()).unwrap().value;
    pass &= v < 0.05;
    notes.push(format!("maximally mixed {v:.2e}"));

    outcome(pass, notes.join(", "))
}

type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("F4 of GHZ and cluster", Some(Duration::from_secs(1)), f4_values),
        ("GBC and GMC of GHZ and cluster", Some(Duration::from_secs(1)), gbc_gmc_values),
        ("three rankings", None, three_rankings),
        ("genuine condition", Some(Duration::from_secs(60)), genuine_condition),
        ("simplex and monogamy", Some(Duration::from_secs(120)), simplex_and_monogamy),
        ("solver uniqueness", None, solver_uniqueness),
        ("invariance", None, invariance),
        ("normalization absorption", None, normalization_absorption),
        ("geometry round trip", None, geometry_round_trip),
        ("cyclic quadrilateral counterexample", None, cyclic_counterexample),
        ("convex roof properties", None, convex_roof),
    ];
    let mut failures = 0;
    for (name, limit, run) in criteria {
        let o = timed(limit, run);
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failures += usize::from(!o.pass);
    }
    println!("acceptance: {failures} failed");
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
