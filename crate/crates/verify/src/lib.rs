//! Acceptance checks for the workspace. The checks live in `tests/acceptance.rs`
//! and print one PASS/FAIL line per criterion:
//!
//! ```text
//! cargo test -p mclab-verify --test acceptance
//! ```
