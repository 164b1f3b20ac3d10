//! Command-line driver: dataset generation, training, inference,
//! evaluation against the baselines, and the resolution study.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod plot;

use cli::{Cli, Command, GridSpec};
use config::{ConfigLayer, SEED_ENV};
use error::CliResult;

/// Runs one parsed invocation, printing a short summary to stdout.
pub fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(p) => ConfigLayer::load(p)?,
        None => ConfigLayer::default(),
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let s = cli.layer().over(file).resolve(env_seed.as_deref())?;
    log::info!("config {} seed {}", s.hash(), s.seed);
    match &cli.command {
        Command::Generate(a) => {
            let h = commands::generate(&s, &a.out)?;
            println!("wrote {} measurements to {} (sha256 {})", h.n_records, a.out.display(), h.data_hash);
        }
        Command::Train(a) => {
            let out = commands::train(
                &s,
                &a.dataset,
                a.training.aux.as_deref(),
                &a.out_dir,
                a.compare_dtype,
                a.grid.as_ref(),
            )?;
            for (mode, h) in &out.histories {
                println!(
                    "{}: final train mse {:.6e}, test mse {}",
                    mode.name(),
                    h.final_train().unwrap_or(f64::NAN),
                    h.final_test().map(|v| format!("{v:.6e}")).unwrap_or_else(|| "n/a".into())
                );
            }
            for f in out.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Grid(a) => {
            let spec = GridSpec { widths: a.widths.clone(), depths: a.depths.clone() };
            let path = commands::grid(&s, &a.dataset, a.training.aux.as_deref(), &spec, &a.out)?;
            println!("wrote {}", path.display());
        }
        Command::Infer(a) => {
            let files = commands::infer(&s, &a.checkpoint, &a.dataset, &a.out_dir)?;
            println!("wrote {} files to {}", files.len(), a.out_dir.display());
        }
        Command::Evaluate(a) => {
            let out = commands::evaluate_cmd(&s, &a.checkpoint, &a.dataset, &a.out)?;
            println!("{} cases", out.cases);
            for (m, n) in &out.shapes {
                println!("{}: {n} reconstructed outlines", m.tag());
            }
            for (m, k, v) in &out.means {
                let v = v.map(|v| format!("{v:.6}")).unwrap_or_else(|| "n/a".into());
                println!("mean {k}_{} = {v}", m.tag());
            }
            println!("wrote {}", out.path.display());
        }
        Command::Robustness(a) => {
            let (path, r) = commands::robustness_cmd(&s, &a.checkpoint, &a.dataset, &a.out)?;
            println!(
                "x{}: nn {:.4} -> {:.4} mm ({:+.3}%), resonance {:.4} -> {:.4} mm ({:+.3}%)",
                r.factor,
                r.nn_mae_mm,
                r.nn_mae_reduced_mm,
                r.nn_increase_pct(),
                r.resonance_mae_mm,
                r.resonance_mae_reduced_mm,
                r.resonance_increase_pct()
            );
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
