use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dppf::error::{Error, Result};
use dppf::harness::{
    run_coverage, run_experiment, run_logistic_analysis, with_workers, write_coverage, write_logistic, write_simulate,
    Command, ExperimentConfig, Preset,
};

#[derive(Parser)]
#[command(name = "dppf", version, about = "Differentially private particle filter experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// TOML file layered over the preset.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed (overrides the config).
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,

    /// Worker threads (defaults to available cores).
    #[arg(long, global = true, value_name = "INT")]
    workers: Option<usize>,

    /// Output directory (overrides the config).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = PresetArg::Desk)]
    preset: PresetArg,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Replicate grid over (ε, n) for each sampler.
    Simulate,
    /// CI coverage and width over a particle-count grid at a fixed release.
    Coverage,
    /// Private logistic regression on synthetic census-like data.
    Logistic,
    /// Check a config file against every experiment and report where it is valid.
    ValidateConfig,
}

#[derive(ValueEnum, Clone, Copy)]
enum PresetArg {
    Desk,
    Paper,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Desk => Preset::Desk,
            PresetArg::Paper => Preset::Paper,
        }
    }
}

fn load(cli: &Cli, command: Command) -> Result<ExperimentConfig> {
    let preset = cli.preset.into();
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path, command, preset)?,
        None => ExperimentConfig::preset(command, preset),
    };
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = Some(w);
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = o.clone();
    }
    cfg.validate(command)?;
    Ok(cfg)
}

fn fmt_cell(mean: f64, sd: f64) -> String {
    format!("{mean:.3} ({sd:.3})")
}

fn run(cli: &Cli) -> Result<usize> {
    let command = match cli.command {
        Cmd::Simulate => Command::Simulate,
        Cmd::Coverage => Command::Coverage,
        Cmd::Logistic => Command::Logistic,
        Cmd::ValidateConfig => {
            let mut valid = Vec::new();
            let mut reasons = Vec::new();
            for (name, c) in [
                ("simulate", Command::Simulate),
                ("coverage", Command::Coverage),
                ("logistic", Command::Logistic),
            ] {
                match load(cli, c) {
                    Ok(_) => valid.push(name),
                    Err(Error::Config(msg)) => reasons.push(format!("{name}: {}", msg.trim_end())),
                    Err(e) if e.is_config() => reasons.push(format!("{name}: {e}")),
                    Err(e) => return Err(e),
                }
            }
            if valid.is_empty() {
                return Err(Error::Config(reasons.join("; ")));
            }
            println!("valid for: {}", valid.join(", "));
            for r in reasons {
                println!("not valid for {r}");
            }
            return Ok(0);
        }
    };
    let cfg = load(cli, command)?;
    let dir = cfg.output.dir.clone();
    let stalled = match command {
        Command::Simulate => {
            let out = with_workers(cfg.workers, || run_experiment(&cfg))??;
            write_simulate(&out, &cfg, &dir)?;
            println!("epsilon\tn\tsampler\tok/total\t{}\tESS\ttrials", out.params.join("\t"));
            for c in &out.summary {
                let cells: Vec<String> = c.mean.iter().zip(&c.sd).map(|(m, s)| fmt_cell(*m, *s)).collect();
                println!(
                    "{}\t{}\t{}\t{}/{}\t{}\t{:.1}\t{:.1}",
                    c.epsilon,
                    c.n,
                    c.sampler.as_str(),
                    c.replicates - c.failed,
                    c.replicates,
                    cells.join("\t"),
                    c.mean_ess,
                    c.mean_trials
                );
            }
            out.stalled()
        }
        Command::Coverage => {
            let out = with_workers(cfg.workers, || run_coverage(&cfg))??;
            write_coverage(&out, &cfg, &dir)?;
            println!("reference value {:.6}", out.truth);
            println!("particles\tcoverage\tmean_width\tfailed");
            for c in &out.cells {
                println!("{}\t{:.3}\t{:.5}\t{}", c.particles, c.coverage, c.mean_width, c.failed);
            }
            out.stalled()
        }
        Command::Logistic => {
            let out = with_workers(cfg.workers, || run_logistic_analysis(&cfg))??;
            write_logistic(&out, &cfg, &dir)?;
            let mean = out.mean_estimate();
            for (p, m) in out.params.iter().zip(&mean) {
                println!("{p}\t{m:.4}");
            }
            for r in &out.runs {
                if let Some(e) = r.ess {
                    println!("run {} ESS {:.1} seconds {:.2}", r.run, e, r.wall_seconds);
                }
            }
            out.stalled()
        }
    };
    eprintln!("outputs written to {}", dir.display());
    Ok(stalled)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(k) => {
            eprintln!("error: {k} run(s) stalled; see the status column");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() {
                2
            } else if e.is_infeasibility() {
                3
            } else {
                1
            })
        }
    }
}
