//! Rate families, grand canonical and canonical measures, condition checks
//! and stochastic-order certification.

pub mod canonical;
pub mod conditions;
pub mod domination;
pub mod grand;
pub mod rates;

pub use canonical::{count_states, log_partition_counts, CanonicalEnsemble, Configuration};
pub use conditions::{verify_conditions, ConditionReport};
pub use domination::{check_stochastic_domination, DominationResult, DominationWitness};
pub use grand::{marginal, moments, phi_of_rho, GrandCanonicalMarginal, MomentTable};
pub use rates::{RateFamily, SiteRate};
