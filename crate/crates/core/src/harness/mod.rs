//! Config parsing, scenario assembly, manufactured solutions, the invariant
//! battery and file output.

pub mod config;
pub mod export;
pub mod mms;
pub mod scenario;
pub mod suite;

pub use config::RunConfig;
pub use scenario::Scenario;
