//! Random matrix ensembles, their spectra, spacing statistics and the model
//! distributions fitted to them.

pub mod eigen;
pub mod experiment;
pub mod fitting;
pub mod matrices;
pub mod models;
pub mod recipes;
pub mod rng;
pub mod sampler;
pub mod spacing;
