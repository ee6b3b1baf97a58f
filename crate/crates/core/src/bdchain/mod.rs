//! Birth–death reductions and the criteria used on them.

pub mod chain;
pub mod conditions;
pub mod identity;
pub mod modified;
pub mod reductions;

pub use chain::BirthDeathChain;
pub use conditions::{check_gap_conditions, default_a0_grid, miclo_check, BdGapConditions, MicloResult};
pub use identity::{conditional_difference_check, IdentityCheck};
pub use modified::{modified_measure, ModifiedMeasure};
pub use reductions::{gamma1, metropolis_chain, single_site_chain, two_site_chain, two_site_logsob, BoundaryCountLaw};
