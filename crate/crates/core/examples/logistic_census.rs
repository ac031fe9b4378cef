//! Private logistic regression with a beta covariate model on census-like
//! data, compared with the non-private posterior.
//!
//! `cargo run --release --example logistic_census -- [out-dir]`

use dppf::harness::{run_logistic_analysis, write_logistic, Command, ExperimentConfig, Preset};

fn main() -> dppf::error::Result<()> {
    let cfg = ExperimentConfig::preset(Command::Logistic, Preset::Desk);
    let private = run_logistic_analysis(&cfg)?;
    let mut public_cfg = cfg.clone();
    public_cfg.logistic.private = false;
    let public = run_logistic_analysis(&public_cfg)?;

    let (pm, qm) = (private.mean_estimate(), public.mean_estimate());
    println!("param\tprivate\tnon-private");
    for (j, name) in private.params.iter().enumerate() {
        println!("{name}\t{:.3}\t{:.3}", pm[j], qm[j]);
    }
    for (label, out) in [("private", &private), ("non-private", &public)] {
        if let Some(band) = &out.band {
            let mid = band.z.len() / 2;
            println!(
                "{label}: P(y=1 | z={:.2}) in [{:.3}, {:.3}] over {} curves",
                band.z[mid], band.lower[mid], band.upper[mid], band.curves_kept
            );
        }
    }
    if let Some(dir) = std::env::args().nth(1) {
        write_logistic(&private, &cfg, dir.as_ref())?;
        println!("wrote {dir}");
    }
    Ok(())
}
