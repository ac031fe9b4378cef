//! Location-scale normal simulation grid through the experiment harness.
//!
//! `cargo run --release --example locscale_table -- [replicates] [out-dir]`

use dppf::harness::{run_experiment, write_simulate, Command, ExperimentConfig, Preset};

fn main() -> dppf::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = ExperimentConfig::preset(Command::Simulate, Preset::Desk);
    cfg.replicates = args.next().map_or(5, |a| a.parse().expect("replicates"));
    cfg.validate(Command::Simulate)?;

    let out = run_experiment(&cfg)?;
    println!("eps\tn\tsampler\tmu\t\tsigma2");
    for cell in &out.summary {
        println!(
            "{}\t{}\t{}\t{:.3} ({:.3})\t{:.3} ({:.3})",
            cell.epsilon, cell.n, cell.sampler.as_str(), cell.mean[0], cell.sd[0], cell.mean[1], cell.sd[1]
        );
    }
    if let Some(dir) = args.next() {
        write_simulate(&out, &cfg, dir.as_ref())?;
        println!("wrote {dir}");
    }
    Ok(())
}
