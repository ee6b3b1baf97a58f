//! Continuous-time simulation: single and two-colour dynamics, relaxation
//! rate estimation, and the order-preserving coupling.

pub mod colour;
pub mod coupling;
pub mod decay;
pub mod sim;

pub use colour::{colour_blind_check, colour_rates, conditioned_rate_family, ColourBlindCheck, ColourState};
pub use coupling::{coupled_order_sim, coupled_order_sim_from, CouplingConfig, CouplingResult};
pub use decay::{default_sample_dt, estimate_decay, DecayConfig, DecayEstimate, SeriesRow};
pub use sim::{simulate, Dynamics, Initial, Jump, SimConfig, Trajectory};
