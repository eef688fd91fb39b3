pub mod cli;
pub mod dataio;
pub mod dataset;
pub mod experiment;
pub mod math;
pub mod metrics;
pub mod pgvar;
pub mod policy;
pub mod scorers;
pub mod trainers;
