pub mod corpus;
pub mod eval;
pub mod features;
pub mod market_data;
pub mod neural;
pub mod pipeline;
pub mod sentiment;
pub mod synth;
