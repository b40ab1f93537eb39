//! Library half of the harness binary: configuration parsing, run and sweep
//! orchestration, and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod orchestrate;

/// Exit-code contract, frozen for CI integration.
pub mod exit_codes {
    /// Everything passed.
    pub const OK: i32 = 0;
    /// Acceptance or monitor failure.
    pub const FAIL: i32 = 1;
    /// Invalid configuration or unusable output location.
    pub const CONFIG: i32 = 2;
    /// The run blew up.
    pub const BLOW_UP: i32 = 3;
}
