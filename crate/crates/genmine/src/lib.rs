//! File formats, service clients, the mining pipeline, reports and the
//! annotation service, built on [`genmine_core`].

pub use genmine_core as core;

pub mod annotator;
pub mod config;
pub mod corpus;
pub mod error;
pub mod http;
pub mod parses;
pub mod pipeline;
pub mod reports;
pub mod scorer;
pub mod service;
pub mod store;

pub use error::{Error, Result};
