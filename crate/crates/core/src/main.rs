use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ue_antenna::device_layout;
use ue_antenna::sim::export::{blockage_mc_export, combine_export, imbalance_export, pattern_cut_export, sphere_map_export};
use ue_antenna::sim::selftest::run_self_test;
use ue_antenna::sim::{load_config, SimConfig, SimError, EXIT_CONFIG, EXIT_NUMERIC};

#[derive(Parser)]
#[command(name = "ueant", version, about = "Handheld UE antenna model: pattern cuts, sphere maps, imbalance, blockage Monte-Carlo and combining studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Gain versus azimuth at a fixed polar angle.
    PatternCut {
        #[command(flatten)]
        common: Common,
        /// Polar angle of the cut in degrees.
        #[arg(long, default_value_t = 90.0)]
        theta: f64,
        /// Subtract each series' peak.
        #[arg(long)]
        normalize: bool,
        /// Emit the raw antenna-frame element pattern instead of per-antenna global cuts.
        #[arg(long)]
        raw: bool,
    },
    /// Per-antenna gain over the full sphere.
    SphereMap {
        #[command(flatten)]
        common: Common,
    },
    /// Best-minus-worst antenna gain per direction, as a weighted CDF.
    Imbalance {
        #[command(flatten)]
        common: Common,
    },
    /// Seeded Monte-Carlo over blockage scenarios and orientations.
    BlockageMc {
        #[command(flatten)]
        common: Common,
    },
    /// Equal-weight coherent combining of every active antenna pair.
    Combine {
        #[command(flatten)]
        common: Common,
    },
    /// Validate the configuration and the active antenna set.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Pattern anchors, efficiency and geometry identities.
    SelfTest,
}

fn load(common: &Common) -> Result<SimConfig, SimError> {
    let cfg = match &common.config {
        Some(p) => load_config(p)?,
        None => SimConfig::default(),
    };
    Ok(cfg.with_seed(common.seed))
}

fn out_path(common: &Common, default: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn report(path: &Path, what: &str) {
    eprintln!("wrote {what} to {}", path.display());
}

fn run(cli: Cli) -> Result<ExitCode, SimError> {
    match cli.command {
        Command::PatternCut { common, theta, normalize, raw } => {
            let cfg = load(&common)?;
            let out = out_path(&common, "pattern_cut.csv");
            let n = pattern_cut_export(&cfg, theta, normalize, raw, &out)?;
            report(&out, &format!("{n} rows"));
        }
        Command::SphereMap { common } => {
            let cfg = load(&common)?;
            let out = out_path(&common, "sphere_map.csv");
            let n = sphere_map_export(&cfg, &out)?;
            report(&out, &format!("{n} rows"));
        }
        Command::Imbalance { common } => {
            let cfg = load(&common)?;
            let out = out_path(&common, "imbalance_cdf.csv");
            let s = imbalance_export(&cfg, &out)?;
            println!("max_imbalance_db {}", s.max_db);
            println!("mean_imbalance_db {}", s.mean_db);
            println!("fraction_above_10db {}", s.fraction_above_10db);
            report(&out, "imbalance CDF");
        }
        Command::BlockageMc { common } => {
            let cfg = load(&common)?;
            let out = out_path(&common, "blockage_mc.csv");
            let recs = blockage_mc_export(&cfg, &out)?;
            report(&out, &format!("{} replications", recs.len()));
        }
        Command::Combine { common } => {
            let cfg = load(&common)?;
            let out = out_path(&common, "combine.csv");
            let pairs = combine_export(&cfg, &out)?;
            report(&out, &format!("{} pairs", pairs.len()));
        }
        Command::Validate { common } => {
            let cfg = load(&common)?;
            let v = device_layout::validate(&cfg.layout, cfg.run.carrier_hz, &cfg.run.active_ids);
            if !v.is_empty() {
                for x in &v {
                    println!("violation: {x}");
                }
                return Ok(ExitCode::from(EXIT_CONFIG as u8));
            }
            println!("ok");
        }
        Command::SelfTest => {
            let results = run_self_test();
            for r in &results {
                println!("[{}] {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            if results.iter().any(|r| !r.passed) {
                return Ok(ExitCode::from(EXIT_NUMERIC as u8));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
