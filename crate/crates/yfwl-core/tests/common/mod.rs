//! Shared helpers for the integration suites.

#[allow(dead_code)]
pub mod oracle;
