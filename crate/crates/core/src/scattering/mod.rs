pub mod born;
pub mod criterion;
pub mod potential;
pub mod solver;
pub use criterion::{trap_scan, trapped_criterion, DeltaRule, ScanRow};
pub use potential::{GaussianTerm, PotentialSpec};
pub use solver::{solve_scattering, AugmentedScatteringMatrix, ChannelKind, ModeBasis, SolverConfig};
