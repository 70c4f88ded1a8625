//! Runner for the acceptance checks: each criterion is a closure returning a
//! one-line summary or a failure reason, reported as a single line.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

pub type Outcome = Result<String, String>;

#[derive(Debug, Default)]
pub struct Runner {
    passed: usize,
    failed: Vec<String>,
}

impl Runner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Runs one criterion; a panic counts as a failure.
    pub fn check(&mut self, name: &str, f: impl FnOnce() -> Outcome) {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panic: {msg}"))
        });
        let ms = started.elapsed().as_secs_f64() * 1e3;
        match result {
            Ok(detail) => {
                self.passed += 1;
                println!("PASS  {name} ({ms:.0} ms): {detail}");
            }
            Err(reason) => {
                self.failed.push(name.to_string());
                println!("FAIL  {name} ({ms:.0} ms): {reason}");
            }
        }
    }

    /// Prints the tally and returns the process exit code.
    pub fn finish(self) -> i32 {
        println!("\n{} passed, {} failed", self.passed, self.failed.len());
        if self.failed.is_empty() {
            0
        } else {
            println!("failed: {}", self.failed.join(", "));
            1
        }
    }
}

/// Fails with `msg` unless `cond` holds.
pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}
