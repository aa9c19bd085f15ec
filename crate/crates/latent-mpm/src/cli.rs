//! Command-line front end: `simulate`, `train`, `deploy`, `eval`, `bench`.

/// Entry point for the `latent-mpm` binary. Returns the process exit code:
/// 0 on success, 1 on usage errors, 2 on numerical failures.
pub fn run() -> i32 {
    0
}
