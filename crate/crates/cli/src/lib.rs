//! Command-line front end: scenario ingestion, experiment orchestration,
//! table rendering, and the full reproduction bundle.

pub mod criteria;
pub mod report;
pub mod reproduce;
pub mod scenario;
pub mod tables;
