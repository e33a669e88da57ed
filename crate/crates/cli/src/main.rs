use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use longjump::geometry::oracle_norm;
use longjump::group::GroupElement;
use longjump_cli::{parse_config, run_to_dir, ExperimentConfig};
use serde_json::json;

#[derive(Parser)]
#[command(name = "longjump", version, about = "Random walks with long jumps on finitely generated groups")]
struct Cli {
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true, env = "LONGJUMP_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Run {
        config: PathBuf,
        /// Output directory; overrides `outputDir` from the configuration.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the adapted geometry of the configured measure and a table of ball counts.
    AuditGeometry { config: PathBuf },
    /// Compare the closed-form norm of one element against the exact word norm.
    OracleNorm {
        config: PathBuf,
        /// Element coordinates separated by semicolons, e.g. "1;0;-2".
        #[arg(long, allow_hyphen_values = true)]
        element: String,
        /// Search radius for the exact norm.
        #[arg(long)]
        cap: f64,
    },
}

const EXIT_TOLERANCE: u8 = 2;

fn load(path: &PathBuf) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("invalid configuration {}", path.display()))
}

fn run(cli: Cli) -> Result<u8> {
    let threads = cli.threads.unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("starting the thread pool")?;
    let threads = rayon::current_num_threads();
    match cli.command {
        Command::Run { config, out } => {
            let cfg = load(&config)?;
            let dir = out
                .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("longjump-out").join(cfg.experiment.kind()));
            let res = run_to_dir(&cfg, &dir, threads)?;
            println!("experiment {} on {}", cfg.experiment.kind(), cfg.group.name());
            for line in &res.summary {
                println!("  {line}");
            }
            println!("  {} files written to {}", res.manifest.files.len() + 1, dir.display());
            println!("{}", if res.pass { "PASS" } else { "FAIL" });
            Ok(if res.pass { 0 } else { EXIT_TOLERANCE })
        }
        Command::AuditGeometry { config } => {
            let cfg = load(&config)?;
            let measure = cfg.build_measure()?;
            let geom = cfg.build_geometry(&measure)?;
            println!("{}", serde_json::to_string_pretty(&geom.to_json())?);
            let (d, l) = geom.volume.exponent();
            println!("volume exponent {d}, log power {l}");
            println!("{:>8} {:>24} {:>24}", "R", "ball count", "F(R)");
            for k in 0..=6 {
                let r = (1u64 << k) as f64;
                let count = geom.ball_count_capped(r, 1u128 << 100)?;
                println!("{r:>8} {count:>24} {:>24.6}", geom.volume.eval(r));
            }
            Ok(0)
        }
        Command::OracleNorm { config, element, cap } => {
            let cfg = load(&config)?;
            let Some(g) = GroupElement::parse(&element) else {
                bail!("cannot parse element {element:?}; expected coordinates like \"1;0;-2\"");
            };
            cfg.group.check(&g)?;
            let measure = cfg.build_measure()?;
            let geom = cfg.build_geometry(&measure)?;
            let exact = oracle_norm(cfg.group, &geom.system_g, &g, cap)?;
            let closed = geom.closed_form_norm(&g)?;
            let out = json!({
                "element": g.to_semicolon_string(),
                "cap": cap,
                "oracle_norm": exact,
                "closed_form_norm": closed,
                "ratio": exact.filter(|&x| x > 0.0).map(|x| closed / x),
                "norm_g2": geom.norm_g2(&g)?,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
