use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use paneitz_lab::cli::{error_json, load_config, run};
use paneitz_lab::Error;

#[derive(Parser)]
#[command(name = "paneitz-lab", version, about = "Run one experiment described by a flat key = value config file")]
struct Args {
    config: PathBuf,
    /// Output directory (overrides `out` in the config).
    #[arg(long, env = "PANEITZ_LAB_OUT")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (overrides `workers`).
    #[arg(long, env = "PANEITZ_LAB_WORKERS")]
    workers: Option<usize>,
    /// Seed for randomized starts and probes (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
}

fn fail(e: &Error, out: Option<&PathBuf>) -> ExitCode {
    let doc = error_json(e, None);
    let text = serde_json::to_string_pretty(&doc).unwrap_or_else(|_| e.to_string());
    eprintln!("{text}");
    if let Some(dir) = out {
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = std::fs::write(dir.join("error.json"), format!("{text}\n"));
        }
    }
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match load_config(&args.config).and_then(|c| c.with_overrides(args.out.clone(), args.workers, args.seed)) {
        Ok(c) => c,
        Err(e) => return fail(&e, args.out.as_ref()),
    };
    match run(&cfg) {
        Ok(m) => {
            println!(
                "{} {} exit={} artifacts={} out={}",
                m.action,
                m.status,
                m.exit_code,
                m.artifacts.len(),
                cfg.out.display()
            );
            ExitCode::from(m.exit_code as u8)
        }
        Err(e) => fail(&e, Some(&cfg.out)),
    }
}
