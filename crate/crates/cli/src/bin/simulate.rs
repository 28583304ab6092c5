use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use qecs_cli::{emit_csv, render_heatmap, run_preset, to_csv, CliError, Preset, SweepConfig};

#[derive(Parser, Debug)]
#[command(
    name = "simulate",
    about = "Sweep the quasi-ECS teleportation pipeline over a parameter grid"
)]
struct Args {
    /// Preset name (see --list)
    #[arg(required_unless_present = "list")]
    preset: Option<String>,
    /// Override a setting, e.g. `--set eta.steps=10` or `--set purified=true`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// TOML file of settings, applied before --set
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output path (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads
    #[arg(long)]
    jobs: Option<usize>,
    /// Per-mode photon cutoff
    #[arg(long)]
    nmax: Option<usize>,
    /// Also write `<out stem>.svg` and `<out stem>.contour.csv`
    #[arg(long)]
    plot: bool,
    /// List presets and exit
    #[arg(long)]
    list: bool,
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}{suffix}"))
}

fn configure(args: &Args) -> Result<SweepConfig, CliError> {
    let preset: Preset = args.preset.as_deref().unwrap_or_default().parse()?;
    let mut cfg = SweepConfig::for_preset(preset);
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigFile {
            path: path.clone(),
            source,
        })?;
        cfg.apply_toml(&text, path)?;
    }
    for pair in &args.set {
        cfg.set_pair(pair)?;
    }
    if let Some(j) = args.jobs {
        cfg.jobs = j;
    }
    if let Some(n) = args.nmax {
        cfg.fixed.n_max = n;
    }
    if args.plot && args.out.is_none() {
        return Err(CliError::setting("plot", "--plot needs --out"));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &Args) -> Result<(), CliError> {
    let cfg = configure(args)?;
    let table = run_preset(&cfg)?;
    match &args.out {
        Some(out) => {
            emit_csv(&table, out)?;
            if args.plot {
                render_heatmap(
                    &table,
                    Some(cfg.contour_level),
                    &sibling(out, ".svg"),
                    &sibling(out, ".contour.csv"),
                )?;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(to_csv(&table).as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })?;
        }
    }
    let failed: Vec<_> = table.failed().collect();
    if let Some(first) = failed.first() {
        return Err(CliError::FailedRows {
            count: failed.len(),
            first: format!(
                "{}={}, {}={}: {}",
                table.x_name,
                first.x,
                table.y_name,
                first.y,
                first.error.as_deref().unwrap_or_default()
            ),
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if args.list {
        for p in Preset::ALL {
            println!("{:<18} {}", p.name(), p.describe());
        }
        return ExitCode::SUCCESS;
    }
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("simulate: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
