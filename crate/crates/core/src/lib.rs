pub mod cli;
pub mod dcgan;
pub mod eval;
pub mod lstm;
pub mod market_data;
pub mod numerics;
pub mod nuts;
