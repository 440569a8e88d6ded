pub mod atoms;
pub mod automata;
pub mod config;
pub mod export;
pub mod ball;
pub mod graphs;
pub mod metrics;
pub mod pipeline;
pub mod rewriting;
pub mod word;
