//! Generators, functionals, spectral gap, log-Sobolev and entropy
//! dissipation estimates, and scaling sweeps.

pub mod eigen;
pub mod functionals;
pub mod generator;
pub mod optimize;
pub mod rothaus;
pub mod sweep;

pub use eigen::{spectral_gap, GapResult, DENSE_LIMIT};
pub use functionals::{functionals, Functionals};
pub use generator::{build_generator, GeneratorMatrix, Topology};
pub use optimize::{estimate_constant, spectral_report, Budget, ConstantEstimate, ConstantKind, SpectralReport};
pub use rothaus::{rothaus_check, RothausCheck};
pub use sweep::{scaling_sweep, SweepConfig, SweepKind, SweepResult};
