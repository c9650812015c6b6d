//! Experiment runner for the Steklov and boundary Laplacian checks.

pub mod config;
pub mod matrix;
pub mod pipeline;
pub mod report;
pub mod run;

/// Every run ends with one of these codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const INPUT_ERROR: i32 = 2;
}
