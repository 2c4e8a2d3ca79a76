//! Hosts the `acceptance` test target, which prints one PASS/FAIL line per
//! criterion:
//!
//! ```text
//! cargo test -p quasifix-verify --test acceptance
//! ```
