//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation/config error, 2 runtime fault.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use navspoof::harness::emit::{self, ablation_csv, fmt_sig, sweep_csv, Format};
use navspoof::harness::{ablation_suite, presets, run_ensemble, sweep_parameters, RunOptions, ScenarioConfig, SweepGrid};
use navspoof::{Error, Result};

#[derive(Parser)]
#[command(name = "navspoof", version, about = "IMU/GNSS spoofing simulation bench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named scenario preset.
    #[arg(long)]
    preset: Option<String>,
    /// Run a single seed.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Run seeds 0..n.
    #[arg(long)]
    seeds: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario over its seed ensemble.
    Run(ScenarioArgs),
    /// Sweep θ, α, φ over an SSD scenario.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_delimiter = ',')]
        theta: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        phi: Vec<f64>,
    },
    /// Baseline / SPA / SVA / CCA ablation table.
    Ablate(ScenarioArgs),
    /// Aggregate runs.csv files under a directory, per scenario.
    Report {
        /// Directory searched recursively for runs.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// List scenario and trajectory presets.
    Presets,
}

fn load(args: &ScenarioArgs, default_preset: &str) -> Result<ScenarioConfig> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => ScenarioConfig::load(path)?,
        (None, Some(name)) => presets::scenario(name)?,
        (None, None) => presets::scenario(default_preset)?,
    };
    if let Some(seed) = args.seed {
        cfg.seeds = vec![seed];
    } else if let Some(n) = args.seeds {
        if n == 0 {
            return Err(Error::invalid("--seeds", "must be >= 1"));
        }
        cfg.seeds = (0..n).collect();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(args: &ScenarioArgs, cfg: &ScenarioConfig) -> Option<PathBuf> {
    args.out.clone().or_else(|| cfg.output.dir.clone())
}

fn run(args: &ScenarioArgs) -> Result<()> {
    let cfg = load(args, "ssd_straight")?;
    let results = run_ensemble(&cfg, RunOptions::default())?;
    let n = results.len() as f64;
    let mean = |f: &dyn Fn(&navspoof::harness::RunResult) -> f64| results.iter().map(f).sum::<f64>() / n;
    let detected = results.iter().filter(|r| r.detection.chi_square.detected).count();
    println!("scenario   {}", cfg.name);
    println!("attack     {}", cfg.attack.kind.name());
    println!("seeds      {}", results.len());
    println!("mean ade   {}", fmt_sig(mean(&|r| r.metrics.ade), 6));
    println!("mean fde   {}", fmt_sig(mean(&|r| r.metrics.fde), 6));
    println!("mean apde  {}", fmt_sig(mean(&|r| r.metrics.apde), 6));
    println!("mean chi   {}", fmt_sig(mean(&|r| r.metrics.chi_max), 6));
    println!("detected   {detected}/{}", results.len());
    if let Some(dir) = out_dir(args, &cfg) {
        emit::emit(&results, args.format, &dir)?;
        println!("wrote      {}", dir.display());
    }
    Ok(())
}

fn sweep(args: &ScenarioArgs, theta: &[f64], alpha: &[f64], phi: &[f64]) -> Result<()> {
    let cfg = load(args, "sweep_theta_alpha")?;
    let grid = SweepGrid::new(cfg.clone(), theta.to_vec(), alpha.to_vec(), phi.to_vec())?;
    let rows = sweep_parameters(&grid)?;
    println!("theta,alpha,phi,mean_ade,mean_chi_max");
    for r in &rows {
        println!(
            "{},{},{},{},{}",
            fmt_sig(r.theta, 9),
            fmt_sig(r.alpha, 9),
            fmt_sig(r.phi, 9),
            fmt_sig(r.mean_ade, 6),
            fmt_sig(r.mean_chi_max, 6)
        );
    }
    if let Some(dir) = out_dir(args, &cfg) {
        match args.format {
            Format::Csv => emit::write(&dir.join("sweep.csv"), &sweep_csv(&rows)?)?,
            Format::Json => emit::write(&dir.join("sweep.json"), &emit::to_json(&rows)?)?,
        }
    }
    Ok(())
}

fn ablate(args: &ScenarioArgs) -> Result<()> {
    let cfg = load(args, "ablation_cca")?;
    let rows = ablation_suite(&cfg)?;
    println!("label,ade_n,ade_e,ade,chi_max");
    for r in &rows {
        println!(
            "{},{},{},{},{}",
            r.label,
            fmt_sig(r.ade_n, 6),
            fmt_sig(r.ade_e, 6),
            fmt_sig(r.ade, 6),
            fmt_sig(r.chi_max, 6)
        );
    }
    if let Some(dir) = out_dir(args, &cfg) {
        match args.format {
            Format::Csv => emit::write(&dir.join("ablation.csv"), &ablation_csv(&rows)?)?,
            Format::Json => emit::write(&dir.join("ablation.json"), &emit::to_json(&rows)?)?,
        }
    }
    Ok(())
}

fn find_runs(dir: &Path, found: &mut Vec<PathBuf>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    paths.sort();
    for p in paths {
        if p.is_dir() {
            find_runs(&p, found)?;
        } else if p.file_name().is_some_and(|n| n == "runs.csv") {
            found.push(p);
        }
    }
    Ok(())
}

fn report(dir: &Path) -> Result<()> {
    let mut files = Vec::new();
    find_runs(dir, &mut files)?;
    if files.is_empty() {
        return Err(Error::invalid("report", format!("no runs.csv under {}", dir.display())));
    }
    // scenario -> (n, Σade, Σfde, Σapde, Σchi_max, detected)
    let mut agg: BTreeMap<String, (usize, f64, f64, f64, f64, usize)> = BTreeMap::new();
    for path in &files {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Config(format!("{}: bad number in column {i}", path.display())))
            };
            let e = agg.entry(rec.get(1).unwrap_or_default().to_string()).or_default();
            e.0 += 1;
            e.1 += num(4)?;
            e.2 += num(5)?;
            e.3 += num(6)?;
            e.4 += num(9)?;
            e.5 += usize::from(rec.get(10) == Some("true"));
        }
    }
    let rows: Vec<Vec<String>> = agg
        .iter()
        .map(|(name, (n, ade, fde, apde, chi, det))| {
            let m = |s: f64| fmt_sig(s / *n as f64, 9);
            vec![name.clone(), n.to_string(), m(*ade), m(*fde), m(*apde), m(*chi), fmt_sig(*det as f64 / *n as f64, 9)]
        })
        .collect();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let header = ["scenario", "runs", "mean_ade", "mean_fde", "mean_apde", "mean_chi_max", "detection_rate"];
    let wrap = |e: csv::Error| Error::Fault(format!("csv: {e}"));
    w.write_record(header).map_err(wrap)?;
    for r in &rows {
        w.write_record(r).map_err(wrap)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Fault(format!("csv: {e}")))?;
    print!("{}", String::from_utf8_lossy(&bytes));
    emit::write(&dir.join("summary.csv"), &bytes)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Sweep {
            scenario,
            theta,
            alpha,
            phi,
        } => sweep(scenario, theta, alpha, phi),
        Command::Ablate(a) => ablate(a),
        Command::Report { out } => report(out),
        Command::Presets => {
            println!("scenarios:");
            for p in presets::SCENARIO_PRESETS {
                println!("  {p}");
            }
            println!("trajectories:");
            for p in presets::TRAJECTORY_PRESETS {
                println!("  {p}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
