//! Local limit theorems for the total particle count under the grand
//! canonical measure: Edgeworth expansions, the Poisson regime, and the
//! exact convolution used as oracle.

pub mod edgeworth;
pub mod limits;

pub use edgeworth::{edgeworth_terms, hermite, EdgeworthExpansion, EdgeworthTerm};
pub use limits::{
    charfn_scan, condition_e_scan, edgeworth_scan, llt_normal, llt_poisson, poisson_sup_error, sum_distribution,
    LltComparison, SumDistribution,
};
