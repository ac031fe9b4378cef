//! Interval coverage of the weighted estimator over repeated runs with a
//! fixed release.
//!
//! `cargo run --release --example ci_coverage -- [runs]`

use dppf::harness::{run_coverage, Command, ExperimentConfig, Preset};

fn main() -> dppf::error::Result<()> {
    let mut cfg = ExperimentConfig::preset(Command::Coverage, Preset::Desk);
    cfg.coverage.runs = std::env::args().nth(1).map_or(50, |a| a.parse().expect("runs"));
    cfg.validate(Command::Coverage)?;
    let out = run_coverage(&cfg)?;
    println!("s_dp {:?}  posterior mean {:.6}", out.s_dp, out.truth);
    println!("N\tcoverage\twidth\t|error|");
    for c in &out.cells {
        println!("{}\t{:.3}\t\t{:.5}\t{:.5}", c.particles, c.coverage, c.mean_width, c.mean_abs_error);
    }
    Ok(())
}
