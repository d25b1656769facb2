//! Classical frustration and maximal nearest-neighbor entanglement on
//! ordered graphs.
//!
//! The crate has two halves that meet in the middle:
//!
//! * a classical one — dense probability tables ([`prob`]), pair-marginal
//!   scenarios with tree extension, joint-distribution feasibility and
//!   Bell-type dual witnesses, and local-hidden-variable models
//!   ([`marginals`]);
//! * a quantum one — small-dimension states and measurements ([`quantum`]),
//!   qubit clusters and rings with singlet-fraction and concurrence curves
//!   ([`spin`]), and harmonic lattices on symmetric graphs with their
//!   maximal nearest-neighbor entanglement ([`gaussian`]).
//!
//! The graph catalog ([`graphs`]) supplies the interaction layouts: rings,
//! complete clusters, stars, the platonic solids, and hexagonal/trigonal
//! tori.

pub mod gaussian;
pub mod graphs;
pub mod marginals;
pub mod prob;
pub mod quantum;
pub mod spin;

mod simplex;

pub use gaussian::{EprVariances, GroundStateCm, HamiltonianPair, ScanRow};
pub use graphs::Graph;
pub use marginals::{JointWitness, LhvModel, MarginalScenario};
pub use prob::{DistTable, ObservableDecl};
pub use quantum::{DensityOp, Povm};
pub use spin::SpinHamiltonian;
