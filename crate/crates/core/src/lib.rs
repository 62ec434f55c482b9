//! Dense-numerics laboratory for KMS-symmetric Lindbladians, repeated-interaction
//! Gibbs sampling channels, and macroscopic-bath generators at small system size.

pub mod numlin;
pub mod models;
pub mod quad;
pub mod generators;
pub mod analysis;
pub mod ri_sim;
pub mod experiments_davies;
pub mod suite;
