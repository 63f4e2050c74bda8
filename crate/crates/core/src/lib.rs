pub mod bounds;
#[cfg(feature = "cli")]
pub mod cli;
pub mod config;
pub mod counting;
pub mod cover;
pub mod experiment;
pub mod poly;
pub mod regions;
