use std::path::Path;

use gensurp_core::lm::conformance::{check_bridge, replay_golden, ConformanceReport};
use gensurp_core::RemoteConfig;

use crate::error::{Failure, Result};

fn print(report: &ConformanceReport) {
    for c in &report.checks {
        let status = if c.passed { "ok  " } else { "FAIL" };
        println!("{status} {:<40} {}", c.name, c.detail);
    }
}

/// Runs the protocol checks against a bridge, then replays golden exchanges
/// if a directory is given. Any failed check is a backend failure.
pub fn run(url: &str, golden: Option<&Path>, timeout_s: f64, seed: u64) -> Result<()> {
    let config = RemoteConfig {
        timeout_s,
        ..RemoteConfig::new(url)
    };
    let mut failed = 0;
    let report = check_bridge(config.clone(), seed)?;
    print(&report);
    failed += report.checks.iter().filter(|c| !c.passed).count();
    if let Some(dir) = golden {
        let report = replay_golden(config, dir)?;
        print(&report);
        failed += report.checks.iter().filter(|c| !c.passed).count();
    }
    if failed > 0 {
        return Err(Failure::backend(format!("{failed} conformance checks failed against {url}")));
    }
    println!("all checks passed");
    Ok(())
}
