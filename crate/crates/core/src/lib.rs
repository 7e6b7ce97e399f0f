//! Solvers for two smartphone-collaboration incentive problems.
//!
//! * [`acquisition`]: a master announces a total reward `R` and earns revenue
//!   `V` only if at least `n0` of `N` users collaborate. The crate computes the
//!   Stage II user equilibrium and the master's Stage I reward under complete,
//!   symmetrically incomplete and asymmetrically incomplete cost information,
//!   for both collaborator payoff conventions.
//! * [`contract`]: a master offers a menu of `(reward, task)` items to users of
//!   `I` private types and maximises a logarithmic-utility profit, with either
//!   known type counts or a multinomial type distribution.
//!
//! Everything a solver returns can be checked against the brute-force
//! verifiers in [`oracles`], and [`sim`] replays equilibria over random
//! per-slot realisations.

pub mod acquisition;
pub mod contract;
pub mod cost;
pub mod error;
pub mod oracles;
pub mod prob;
pub mod roots;
pub mod sim;

pub use error::{Error, Result};
