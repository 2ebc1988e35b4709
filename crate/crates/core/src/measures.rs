//! Four-qubit concurrence fill and the comparison measures.

use serde::{Deserialize, Serialize};

use crate::concurrence::{concurrence_profile, one_to_other_3, ConcurrenceProfile};
use crate::error::{Error, Result};
use crate::solver::{classify_degeneracy, solve_sigma, volume, DegeneracyClass, SigmaSolution, SolverOptions};
use crate::state::PureState;

/// Maps the volume of the GHZ tetrahedron to one: `3^(7/4) / 2^(3/2)`.
pub fn f4_normalization() -> f64 {
    3f64.powf(1.75) / 2f64.powf(1.5)
}

// Heron area of the unit equilateral triangle is sqrt(3)/4.
fn f3_normalization() -> f64 {
    4.0 / 3f64.sqrt()
}

const OVERSHOOT_TOL: f64 = 1e-9;

fn clamp_measure(v: f64, what: &str) -> Result<f64> {
    if !v.is_finite() || !(-OVERSHOOT_TOL..=1.0 + OVERSHOOT_TOL).contains(&v) {
        return Err(Error::Internal(format!("{what} = {v} outside [0, 1]")));
    }
    Ok(v.clamp(0.0, 1.0))
}

/// F4 together with the tetrahedron it came from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fill4 {
    pub f4: f64,
    pub volume: f64,
    pub solution: SigmaSolution,
    pub degeneracy: DegeneracyClass,
}

/// F4 of a profile. Zero-volume classes report exactly zero.
pub fn fill4_from_profile(profile: &ConcurrenceProfile, opts: &SolverOptions) -> Result<Fill4> {
    let solution = solve_sigma(profile, opts)?;
    let breakdown = volume(&solution.sigma)?;
    let degeneracy = classify_degeneracy(profile, &solution);
    if degeneracy == DegeneracyClass::CoplanarImpossible {
        return Err(Error::Internal(
            "coplanar star tetrahedron from a solved profile".into(),
        ));
    }
    let f4 = if degeneracy.is_generic() {
        clamp_measure(f4_normalization() * breakdown.volume, "F4")?
    } else {
        0.0
    };
    Ok(Fill4 {
        f4,
        volume: breakdown.volume,
        solution,
        degeneracy,
    })
}

/// Concurrence fill of a four-qubit pure state.
pub fn concurrence_fill_4(state: &PureState) -> Result<f64> {
    concurrence_fill_4_with(state, &SolverOptions::default())
}

pub fn concurrence_fill_4_with(state: &PureState, opts: &SolverOptions) -> Result<f64> {
    let profile = concurrence_profile(state)?;
    Ok(fill4_from_profile(&profile, opts)?.f4)
}

/// Smallest of the seven squared bipartite concurrences.
pub fn gmc_from_profile(profile: &ConcurrenceProfile) -> f64 {
    profile.entries().into_iter().fold(f64::INFINITY, f64::min)
}

/// Geometric mean of the seven squared bipartite concurrences.
pub fn gbc_from_profile(profile: &ConcurrenceProfile) -> f64 {
    let entries = profile.entries();
    if entries.iter().any(|&v| v <= 0.0) {
        return 0.0;
    }
    (entries.iter().map(|v| v.ln()).sum::<f64>() / 7.0).exp()
}

pub fn gmc(state: &PureState) -> Result<f64> {
    Ok(gmc_from_profile(&concurrence_profile(state)?))
}

pub fn gbc(state: &PureState) -> Result<f64> {
    Ok(gbc_from_profile(&concurrence_profile(state)?))
}

fn heron(a: f64, b: f64, c: f64) -> f64 {
    let q = (a + b + c) / 2.0;
    (q * (q - a) * (q - b) * (q - c)).max(0.0).sqrt()
}

/// Three-qubit concurrence fill: normalized area of the triangle with edges
/// `C^2_{1(23)}, C^2_{2(31)}, C^2_{3(12)}`.
pub fn concurrence_fill_3(state: &PureState) -> Result<f64> {
    let [a, b, c] = one_to_other_3(state)?;
    clamp_measure(f3_normalization() * heron(a, b, c), "F3")
}

/// Area of the cyclic quadrilateral with the four one-to-other entries as
/// edges (Brahmagupta).
///
/// Kept as a counterexample: it stays positive on states that are
/// biseparable across a one-to-other cut.
pub fn cyclic_quadrilateral_area(profile: &ConcurrenceProfile) -> f64 {
    let e = profile.one_to_other;
    let s = e.iter().sum::<f64>() / 2.0;
    e.iter().map(|x| s - x).product::<f64>().max(0.0).sqrt()
}

/// Ranking symbol for two measure values: `=` within `tol`, else `<` or `>`.
pub fn rank_symbol(a: f64, b: f64, tol: f64) -> char {
    if (a - b).abs() <= tol {
        '='
    } else if a < b {
        '<'
    } else {
        '>'
    }
}

/// Everything the `measure` command reports for one state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub f4: f64,
    pub gmc: f64,
    pub gbc: f64,
    pub cyclic_quad_area: f64,
    pub degeneracy: DegeneracyClass,
    pub profile: ConcurrenceProfile,
}

pub fn measure(state: &PureState, opts: &SolverOptions) -> Result<MeasureReport> {
    let profile = concurrence_profile(state)?;
    let fill = fill4_from_profile(&profile, opts)?;
    Ok(MeasureReport {
        f4: fill.f4,
        gmc: gmc_from_profile(&profile),
        gbc: gbc_from_profile(&profile),
        cyclic_quad_area: cyclic_quadrilateral_area(&profile),
        degeneracy: fill.degeneracy,
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::NamedState;
    use approx::assert_abs_diff_eq;

    #[test]
    fn f4_of_named_states() {
        assert_abs_diff_eq!(concurrence_fill_4(&NamedState::Ghz4.state()).unwrap(), 1.0, epsilon = 1e-9);
        // closed form from the symmetric cluster solution: 3^(5/4) / 4
        let cluster = concurrence_fill_4(&NamedState::Cluster4.state()).unwrap();
        assert_abs_diff_eq!(cluster, 3f64.powf(1.25) / 4.0, epsilon = 1e-10);
        assert_abs_diff_eq!(cluster, 0.9871, epsilon = 5e-4);
        for s in [
            NamedState::Product4,
            NamedState::BisepOneToOther,
            NamedState::BisepTwoToTwo,
            NamedState::BisepOneOneTwo,
        ] {
            assert_eq!(concurrence_fill_4(&s.state()).unwrap(), 0.0, "{s}");
        }
        assert!(concurrence_fill_4(&NamedState::Ghz3.state()).is_err());
    }

    #[test]
    fn gmc_and_gbc_of_named_states() {
        let ghz = NamedState::Ghz4.state();
        let cluster = NamedState::Cluster4.state();
        assert_abs_diff_eq!(gmc(&ghz).unwrap(), 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gmc(&cluster).unwrap(), 2.0 / 3.0, epsilon = 1e-12);
        assert_eq!(gmc(&NamedState::BisepOneToOther.state()).unwrap(), 0.0);

        assert_abs_diff_eq!(gbc(&ghz).unwrap(), (2.0f64 / 3.0).powf(3.0 / 7.0), epsilon = 1e-12);
        assert_abs_diff_eq!(gbc(&ghz).unwrap(), 0.8405, epsilon = 5e-4);
        assert_abs_diff_eq!(gbc(&cluster).unwrap(), (2.0f64 / 3.0).powf(1.0 / 7.0), epsilon = 1e-12);
        assert_abs_diff_eq!(gbc(&cluster).unwrap(), 0.9437, epsilon = 5e-4);
        assert_eq!(gbc(&NamedState::BisepTwoToTwo.state()).unwrap(), 0.0);
    }

    #[test]
    fn f3_examples() {
        assert_abs_diff_eq!(concurrence_fill_3(&NamedState::Ghz3.state()).unwrap(), 1.0, epsilon = 1e-12);

        let zero_bell = PureState::from_real(3, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(concurrence_fill_3(&zero_bell).unwrap(), 0.0, epsilon = 1e-12);

        // equilateral with edge 8/9: (4/sqrt3) * (sqrt3/4) * (8/9)^2
        let w = concurrence_fill_3(&NamedState::W3.state()).unwrap();
        let q: f64 = 4.0 / 3.0;
        let e: f64 = 8.0 / 9.0;
        let brute = 4.0 / 3f64.sqrt() * (q * (q - e).powi(3)).sqrt();
        assert_abs_diff_eq!(w, brute, epsilon = 1e-12);
        assert_abs_diff_eq!(w, 64.0 / 81.0, epsilon = 1e-12);

        assert!(concurrence_fill_3(&NamedState::Ghz4.state()).is_err());
    }

    #[test]
    fn cyclic_quadrilateral_examples() {
        let p = |e: [f64; 4]| ConcurrenceProfile::new(e, [0.0; 3]);
        assert_abs_diff_eq!(cyclic_quadrilateral_area(&p([1.0; 4])), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            cyclic_quadrilateral_area(&p([0.0, 1.0, 1.0, 1.0])),
            (1.5f64 * 0.125).sqrt(),
            epsilon = 1e-15
        );
        assert_eq!(cyclic_quadrilateral_area(&p([0.0; 4])), 0.0);
    }

    #[test]
    fn rank_symbols() {
        assert_eq!(rank_symbol(1.0, 1.0 + 1e-7, 1e-6), '=');
        assert_eq!(rank_symbol(0.5, 1.0, 1e-6), '<');
        assert_eq!(rank_symbol(1.0, 0.5, 1e-6), '>');
    }

    #[test]
    fn report_json_shape() {
        let r = measure(&NamedState::Ghz4.state(), &SolverOptions::default()).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["degeneracy"], "Generic");
        assert!(v["profile"]["two_to_other"]["12|34"].is_number());
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        for k in ["f4", "gmc", "gbc", "cyclic_quad_area", "degeneracy", "profile"] {
            assert!(keys.contains(&k));
        }
    }
}
