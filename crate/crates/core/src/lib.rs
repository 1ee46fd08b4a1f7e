pub mod csvfmt;
pub mod harness;
pub mod landscape;
pub mod nn;
pub mod search;
pub mod seed;
pub mod select;
pub mod shift;
pub mod stats;
pub mod surrogate;
