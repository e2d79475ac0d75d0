//! The built-in check suite with default settings.

use msbie::cli::config::RunConfig;
use msbie::cli::validate::run_suite;

fn main() -> msbie::Result<()> {
    let cfg = RunConfig::default();
    let report = run_suite(&cfg.validate, &cfg.scene.to_scene()?);
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.measured);
    }
    println!("all passed: {}", report.all_passed);
    Ok(())
}
