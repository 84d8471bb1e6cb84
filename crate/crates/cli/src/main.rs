//! `jcas`: channel generation, Pareto sweeps and the oracle suite.

mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use jcas_core::channel::{generate_channels, save_channels};
use jcas_core::pareto::{default_scenarios, run_sweep};
use jcas_core::verify::{run_verify, Group};

use config::{load, parse_alphas, RunConfig};

/// `println!` that ignores a closed stdout, e.g. when piped into `head`.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}
use error::{CliError, Result};

#[derive(Parser)]
#[command(
    name = "jcas",
    version,
    about = "Pareto boundary between sum rate and Fisher information"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON run configuration, merged over the built-in defaults.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set sweep.base.K=6`. Repeatable.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Channel file operations.
    Channels {
        #[command(subcommand)]
        command: ChannelsCommand,
    },
    /// Sweep the weight α and write rows, a run record and plot data.
    Pareto(ParetoArgs),
    /// Run the oracle checks and write a JSON report.
    Verify(VerifyArgs),
}

#[derive(Subcommand)]
enum ChannelsCommand {
    /// Draw channels from `channels.*` and write them as a channel file.
    Gen(GenArgs),
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Overrides `channels.channel.rng_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; defaults to `<output dir>/channels.json`.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ParetoArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Start from a named scenario: users, antennas, power, baseline or eirp.
    #[arg(long)]
    preset: Option<String>,
    /// Comma-separated weights replacing `sweep.alphas`.
    #[arg(long)]
    alphas: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Also write an SVG scatter.
    #[arg(long)]
    svg: bool,
    /// Exit with code 2 when any point fails or does not converge.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Restrict to these groups (repeatable or comma-separated).
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
    #[arg(long)]
    max_grid_points: Option<usize>,
    #[arg(long)]
    max_mc_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report file; defaults to `<output dir>/verify.json`.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn parent_dir(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => create_dir(p),
        _ => Ok(()),
    }
}

fn channels_gen(args: GenArgs) -> Result<()> {
    let mut extra = args.cfg.overrides;
    if let Some(seed) = args.seed {
        extra.push(format!("channels.channel.rng_seed={seed}"));
    }
    let cfg = load(&RunConfig::default(), args.cfg.config.as_deref(), &extra)?;
    let cs = generate_channels(&cfg.channels.channel, &cfg.channels.array)?;
    let out = args
        .out
        .unwrap_or_else(|| cfg.output_dir().join("channels.json"));
    parent_dir(&out)?;
    save_channels(&cs, &out)?;
    say!(
        "wrote {} channels (n_tx {}, hash {}) to {}",
        cs.n_users(),
        cs.n_tx(),
        cs.content_hash(),
        out.display()
    );
    Ok(())
}

fn preset(name: &str) -> Result<RunConfig> {
    let scenarios = default_scenarios();
    let names: Vec<&str> = scenarios.iter().map(|(n, _)| n.as_str()).collect();
    let (_, sweep) = scenarios.iter().find(|(n, _)| n == name).ok_or_else(|| {
        CliError::config(
            "--preset",
            format!(
                "unknown preset `{name}`, expected one of {}",
                names.join(", ")
            ),
        )
    })?;
    Ok(RunConfig {
        sweep: sweep.clone(),
        ..RunConfig::default()
    })
}

fn pareto(args: ParetoArgs) -> Result<()> {
    let base = match &args.preset {
        Some(name) => preset(name)?,
        None => RunConfig::default(),
    };
    let mut extra = args.cfg.overrides;
    if let Some(a) = &args.alphas {
        let alphas = parse_alphas(a)?;
        extra.push(format!(
            "sweep.alphas={}",
            serde_json::to_string(&alphas).expect("floats serialize")
        ));
    }
    if args.svg {
        extra.push("output.svg=true".into());
    }
    if args.strict {
        extra.push("output.strict=true".into());
    }
    let mut cfg = load(&base, args.cfg.config.as_deref(), &extra)?;
    if let Some(dir) = args.out_dir {
        cfg.output.dir = Some(dir);
    }
    let dir = cfg.output_dir();
    create_dir(&dir)?;

    let out = run_sweep(&cfg.sweep)?;
    let diags = output::diagnostics(&out);
    let prefix = &cfg.output.prefix;
    output::write_rows(&dir.join(format!("{prefix}.csv")), &out.points)?;
    output::write_plot_data(&dir.join(format!("{prefix}_plot.csv")), &out)?;
    if cfg.output.svg {
        let path = dir.join(format!("{prefix}.svg"));
        std::fs::write(&path, output::svg(&out)).map_err(|e| CliError::io(&path, e))?;
    }
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let record = output::RunRecord {
        tool: "jcas",
        cli_version: env!("CARGO_PKG_VERSION"),
        core_version: jcas_core::VERSION,
        created_unix_s: created,
        config: &cfg,
        cells: &out.cells,
        diagnostics: &diags,
        points: &out.points,
    };
    output::write_json(&dir.join(format!("{prefix}.json")), &record)?;

    let failed = out.points.iter().filter(|p| p.error.is_some()).count();
    let unconverged = out
        .points
        .iter()
        .filter(|p| p.error.is_none() && !p.report.converged)
        .count();
    say!(
        "{} rows over {} cells written to {} ({failed} failed, {unconverged} not converged)",
        out.points.len(),
        out.cells.len(),
        dir.display()
    );
    for d in &diags {
        for v in &d.frontier.violations {
            eprintln!(
                "cell {}: {:?} violation between α={} ({:.9e}) and α={} ({:.9e})",
                d.cell, v.metric, v.alpha_a, v.value_a, v.alpha_b, v.value_b
            );
        }
    }
    for p in out.points.iter().filter(|p| p.error.is_some()) {
        eprintln!(
            "cell {} α={}: {}",
            p.cell,
            p.alpha,
            p.error.as_deref().unwrap_or_default()
        );
    }
    if cfg.output.strict && failed + unconverged > 0 {
        return Err(CliError::NonConvergence(format!(
            "{failed} failed and {unconverged} non-converged points in strict mode"
        )));
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<()> {
    let mut extra = args.cfg.overrides;
    for (key, v) in [
        ("max_grid_points", args.max_grid_points.map(|v| v as u64)),
        ("max_mc_samples", args.max_mc_samples.map(|v| v as u64)),
        ("rng_seed", args.seed),
    ] {
        if let Some(v) = v {
            extra.push(format!("verify.{key}={v}"));
        }
    }
    let cfg = load(&RunConfig::default(), args.cfg.config.as_deref(), &extra)?;
    let only = args
        .only
        .iter()
        .map(|s| s.trim().parse::<Group>())
        .collect::<jcas_core::Result<Vec<_>>>()?;
    let report = run_verify(&cfg.verify, &only)?;
    let out = args
        .out
        .unwrap_or_else(|| cfg.output_dir().join("verify.json"));
    parent_dir(&out)?;
    output::write_json(&out, &report)?;
    for c in &report.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        say!(
            "[{tag}] {}/{}: error {:.3e} (tol {:.1e})",
            c.group,
            c.name,
            c.error,
            c.tolerance
        );
    }
    let failures: Vec<String> = report.failures().map(|c| c.diff()).collect();
    for f in &failures {
        eprintln!("{f}");
    }
    say!("report written to {}", out.display());
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verify(format!(
            "{} of {} checks failed",
            failures.len(),
            report.checks.len()
        )))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Channels {
            command: ChannelsCommand::Gen(a),
        } => channels_gen(a),
        Command::Pareto(a) => pareto(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
