//! Concurrence-tetrahedron measure of genuine four-qubit entanglement.
//!
//! Every four-qubit pure state is assigned a tetrahedron whose face areas
//! are the four squared one-to-other concurrences. The split areas cut out
//! by the inscribed sphere are fixed by the two-to-other concurrences, and
//! the normalized volume (the concurrence fill `F4`) vanishes exactly on
//! biseparable states.
//!
//! ```
//! use cfill::{concurrence_fill_4, NamedState};
//!
//! let f4 = concurrence_fill_4(&NamedState::Ghz4.state()).unwrap();
//! assert!((f4 - 1.0).abs() < 1e-9);
//! ```

pub mod concurrence;
pub mod convex_roof;
pub mod error;
pub mod geometry;
pub mod measures;
pub mod solver;
pub mod state;
pub mod verify;

pub use concurrence::{
    check_monogamy, check_simplex_inequality, concurrence_profile, pairwise_concurrence_sq,
    squared_i_concurrence, ConcurrenceProfile,
};
pub use error::{Error, Result};
pub use measures::{
    concurrence_fill_3, concurrence_fill_4, cyclic_quadrilateral_area, gbc, gmc, measure,
    MeasureReport,
};
pub use solver::{
    classify_degeneracy, solve_sigma, verify_uniqueness, volume, DegeneracyClass, SigmaSolution,
    SolverOptions,
};
pub use state::{
    haar_random_state, named_state, random_biseparable_state, Bipartition, DensityMatrix,
    NamedState, PureState,
};
