//! Population migration monitoring from WiFi access-point relocations.
//!
//! The pipeline classifies access points as residential from connection
//! sessions and building context, detects relocations by comparing weekly
//! radio fingerprints, filters out relocations that do not mean a family
//! moved (resold routers, office moves, pocket hotspots), and aggregates the
//! surviving moves into origin-destination flows at community, district,
//! city and province scale.
//!
//! A seeded simulator ([`sim`]) produces scans, sessions and ground truth so
//! every stage can be checked end to end.

pub mod detect;
pub mod error;
pub mod features;
pub mod flow;
pub mod gbdt;
pub mod geo;
pub mod label;
pub mod pipeline;
pub mod records;
pub mod seeds;
pub mod sim;

pub use error::{Error, Result};
