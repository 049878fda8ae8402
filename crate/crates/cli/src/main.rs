use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hatlab::domain::TilingIndex;
use hatlab::experiment::{
    averages_path, averages_to_csv, export_fluctuation_field, field_to_csv, master_tiling, parse_case,
    results_to_string, run_realization, sweep, ExperimentConfig, OutputFormat,
};
use hatlab::tiling::{canonical_polygon_count, generate, load_tiling, save_tiling, DEFAULT_POLYGON_BUDGET};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hatlab", version, about = "Hat-tiling elastic networks: generation, sweeps and field dumps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a substitution patch and write it as JSON.
    Generate {
        #[arg(long)]
        steps: u32,
        #[arg(long)]
        out: PathBuf,
        /// Refuse patches with more polygons than this.
        #[arg(long, default_value_t = DEFAULT_POLYGON_BUDGET)]
        budget: usize,
    },
    /// Run a sweep over sizes and realizations.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Results file; defaults to `output.results` of the config, else stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Dump the fluctuation magnitude of one solved realization.
    Field {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 0)]
        realization: u32,
        /// Load case: e1, e2 or e12.
        #[arg(long, default_value = "e1")]
        case: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a tiling file.
    Validate { path: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_generate(steps: u32, out: &Path, budget: usize) -> Result<()> {
    let t = generate(steps, budget)?;
    save_tiling(&t, out).with_context(|| format!("writing {}", out.display()))?;
    eprintln!("{} polygons, {} vertices -> {}", t.polygons().len(), t.vertices().len(), out.display());
    Ok(())
}

fn cmd_sweep(config: &Path, out: Option<PathBuf>, format: Option<Format>) -> Result<()> {
    let cfg = ExperimentConfig::load(config).with_context(|| format!("loading {}", config.display()))?;
    let out = out.or_else(|| cfg.output.results.clone());
    let format = format.map(OutputFormat::from).unwrap_or(cfg.output.format);
    let result = sweep(&cfg)?;
    for f in &result.failures {
        eprintln!("row n={} realization={} failed: {}", f.n, f.realization, f.error);
    }
    write_or_print(out.as_deref(), &results_to_string(&result.rows, format)?)?;
    let averages = averages_to_csv(&result.averages)?;
    match &out {
        Some(p) => {
            let ap = averages_path(p);
            std::fs::write(&ap, averages).with_context(|| format!("writing {}", ap.display()))?;
        }
        None => eprint!("{averages}"),
    }
    eprintln!("{} rows, {} failed, tiling steps {}", result.rows.len(), result.failures.len(), result.tiling_steps);
    Ok(())
}

fn cmd_field(config: &Path, n: u32, realization: u32, case: &str, out: Option<PathBuf>) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config).with_context(|| format!("loading {}", config.display()))?;
    let Some(case) = parse_case(case) else {
        bail!("unknown load case {case:?} (expected e1, e2 or e12)");
    };
    if !cfg.n_list.contains(&n) {
        cfg.n_list.push(n);
        cfg.n_list.sort_unstable();
        cfg.validate()?;
    }
    let tiling = master_tiling(&cfg)?;
    let index = TilingIndex::new(&tiling);
    let real = run_realization(&cfg, &index, n, realization)?;
    let rows = export_fluctuation_field(&real.domain, &real.solved, case)?;
    write_or_print(out.as_deref(), &field_to_csv(&rows))
}

fn cmd_validate(path: &Path) -> Result<()> {
    let t = load_tiling(path).with_context(|| format!("reading {}", path.display()))?;
    let steps = t.meta().inflation_steps;
    let want = canonical_polygon_count(steps);
    if t.polygons().len() as u128 != want {
        bail!("{} polygons at {steps} steps, expected {want}", t.polygons().len());
    }
    println!("ok: {} polygons, {} vertices, {steps} steps", t.polygons().len(), t.vertices().len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Generate { steps, out, budget } => cmd_generate(steps, &out, budget),
        Command::Sweep { config, out, format } => cmd_sweep(&config, out, format),
        Command::Field { config, n, realization, case, out } => cmd_field(&config, n, realization, &case, out),
        Command::Validate { path } => cmd_validate(&path),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
