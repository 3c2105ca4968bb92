pub mod graph;
pub mod penman;
pub mod tokens;
pub mod tree;
pub mod rng;
pub mod relinearize;
pub mod corpus;
pub mod synth;
pub mod rdf;
pub mod corruption;
pub mod stream;
pub mod metrics;
pub mod cli;
