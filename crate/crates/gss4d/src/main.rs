//! Command-line front end for the link experiments: geometry and prior
//! optimization, power and distance sweeps, constellation validation and
//! export, and plot-data regeneration from finished runs.

use clap::{Parser, Subcommand, ValueEnum};
use gss4d::config::RunConfig;
use gss4d::constellation::{
    build_gss_constellation, load_constellation_file, pm16qam, ps_pm16qam_constellation,
    save_constellation_file, validate_gss, Constellation, PSDistribution, ParamVector,
};
use gss4d::experiments::{
    emit_plot_data, find_optimal_launch_power, optimize_gss_at, persist_gss_optimization,
    run_distance_sweep, timed_final_record, GssParamsArtifact, PlotAxis, ResultWriter, RunStamp,
    SweepResult,
};
use gss4d::metrics::papr_symbols;
use gss4d::optimizer::{optimize_ps_prior, ObjectivePoint};
use gss4d::{Error, Result};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "gss4d",
    version,
    about = "Shell-shaped 4D constellation design and nonlinear-fiber link evaluation"
)]
struct Cli {
    /// TOML run configuration (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the master seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Quick profile: smaller symbol counts, coarser grids, looser fiber
    /// stepping. For smoke runs and CI, not for reported numbers.
    #[arg(long, global = true)]
    quick: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize the GSS geometry at one operating point.
    Optimize {
        #[arg(long)]
        distance_km: f64,
        #[arg(long)]
        power_dbm: f64,
        /// Directory for the trace, parameters, and constellation file.
        #[arg(long)]
        out: PathBuf,
        /// A gss_params_*.json from a previous run to start from.
        #[arg(long)]
        warm_start: Option<PathBuf>,
    },

    /// Sweep launch power for one constellation at one distance and report P*.
    SweepPower {
        /// pm-16qam | ps-pm-16qam[:p3] | gss:<params.json> | file:<path>
        #[arg(long)]
        constellation: String,
        #[arg(long)]
        distance_km: f64,
        #[arg(long)]
        out: PathBuf,
    },

    /// Run the full distance campaign from the config.
    SweepDistance {
        #[arg(long)]
        out: PathBuf,
    },

    /// Pick the best PS prior on the configured grid at one operating point.
    PsOptimize {
        #[arg(long)]
        distance_km: f64,
        #[arg(long)]
        power_dbm: f64,
        /// Optional JSON file for the grid and winner.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Check a constellation file's structure and print the report.
    Validate {
        file: PathBuf,
    },

    /// Build a named constellation and write it to a file.
    ExportConstellation {
        /// pm-16qam | ps-pm-16qam[:p3] | gss-halfway | gss:<params.json>
        #[arg(long)]
        kind: String,
        #[arg(long)]
        out: PathBuf,
    },

    /// Regenerate plot CSVs from a finished run directory.
    PlotData {
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long, value_enum)]
        axis: AxisArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Distance,
    Power,
}

impl From<AxisArg> for PlotAxis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::Distance => PlotAxis::Distance,
            AxisArg::Power => PlotAxis::Power,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn load_config(path: Option<&Path>, seed: Option<u64>, quick: bool) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if quick {
        cfg.apply_quick();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_gss_artifact(path: &Path) -> Result<GssParamsArtifact> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Builds a constellation from a CLI selector string.
fn parse_constellation(cfg: &RunConfig, selector: &str) -> Result<Constellation> {
    if selector == "pm-16qam" {
        return Ok(pm16qam());
    }
    if selector == "ps-pm-16qam" {
        return ps_pm16qam_constellation(PSDistribution::new(0.5)?);
    }
    if let Some(p3) = selector.strip_prefix("ps-pm-16qam:") {
        let p3: f64 = p3
            .parse()
            .map_err(|_| Error::config(format!("bad p3 in selector {selector:?}")))?;
        return ps_pm16qam_constellation(PSDistribution::new(p3)?);
    }
    if selector == "gss-halfway" {
        let shaping = cfg.shaping_config()?;
        return build_gss_constellation(&ParamVector::halfway(&shaping), &shaping, None);
    }
    if let Some(path) = selector.strip_prefix("gss:") {
        let artifact = load_gss_artifact(Path::new(path))?;
        let shaping = cfg.shaping_config()?;
        let params = ParamVector::from_values(&shaping, artifact.params)?;
        return build_gss_constellation(&params, &shaping, None);
    }
    if let Some(path) = selector.strip_prefix("file:") {
        return load_constellation_file(path);
    }
    Err(Error::config(format!(
        "unknown constellation selector {selector:?} \
         (expected pm-16qam, ps-pm-16qam[:p3], gss-halfway, gss:<params.json>, or file:<path>)"
    )))
}

fn describe(c: &Constellation) {
    println!(
        "{}: {} points, {:.3} bits/4D entropy, mean energy {:.6}, symbol PAPR {:.4}",
        c.name,
        c.size(),
        c.entropy_bits(),
        c.mean_energy(),
        papr_symbols(c)
    );
}

fn print_record(r: &SweepResult) {
    match &r.mi {
        Some(mi) => println!(
            "{} @ {} km, {} dBm: MI {:.4} ± {:.4} bits/4D (sigma2 {:.3e}, n {})",
            r.constellation_id,
            r.distance_km,
            r.power_dbm,
            mi.mi_bits_per_4d,
            mi.stderr,
            mi.sigma2,
            mi.n_symbols
        ),
        None => println!(
            "{} @ {} km, {} dBm: FAILED ({})",
            r.constellation_id,
            r.distance_km,
            r.power_dbm,
            r.error.as_deref().unwrap_or("unknown")
        ),
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(cli.config.as_deref(), cli.seed, cli.quick)?;
    match cli.command {
        Command::Optimize {
            distance_km,
            power_dbm,
            out,
            warm_start,
        } => {
            let warm = warm_start
                .as_deref()
                .map(load_gss_artifact)
                .transpose()?
                .map(|a| a.params);
            let opt = optimize_gss_at(&cfg, distance_km, power_dbm, warm.as_deref())?;
            let paths = persist_gss_optimization(&out, &opt)?;
            describe(&opt.constellation);
            println!(
                "search MI {:.4} bits/4D after {} evals{}",
                opt.search.best_value,
                opt.search.n_evals,
                if opt.search.truncated {
                    " (budget exhausted)"
                } else {
                    ""
                }
            );
            let record = timed_final_record(&opt.constellation, &cfg, distance_km, power_dbm);
            print_record(&record);
            println!("artifacts: {}", paths.params_json.display());
        }

        Command::SweepPower {
            constellation,
            distance_km,
            out,
        } => {
            let c = parse_constellation(&cfg, &constellation)?;
            describe(&c);
            let mut writer = ResultWriter::create(&out, &cfg)?;
            let best = find_optimal_launch_power(
                &cfg,
                &c,
                distance_km,
                cfg.n_symbols_final,
                Some(&mut writer),
            )?;
            writer.write_record_table()?;
            let hash = writer.config_hash.clone();
            emit_plot_data(
                &writer.collected,
                PlotAxis::Power,
                out.join("plots"),
                &hash,
            )?;
            for r in &writer.collected {
                print_record(r);
            }
            println!("P* = {} dBm", best.power_dbm);
            print_record(&best);
        }

        Command::SweepDistance { out } => {
            let mut writer = ResultWriter::create(&out, &cfg)?;
            let summary = run_distance_sweep(&cfg, &mut writer)?;
            let hash = writer.config_hash.clone();
            emit_plot_data(&summary, PlotAxis::Distance, out.join("plots"), &hash)?;
            for r in &summary {
                print_record(r);
            }
            println!("records: {}", writer.dir.join("results.jsonl").display());
        }

        Command::PsOptimize {
            distance_km,
            power_dbm,
            out,
        } => {
            let point = ObjectivePoint {
                distance_km,
                power_dbm,
            };
            let ps = optimize_ps_prior(&cfg, point, &cfg.ps.p3_grid)?;
            for (p3, mi) in &ps.grid {
                println!("p3 {:.3}: MI {:.4} ± {:.4} bits/4D", p3, mi.mi_bits_per_4d, mi.stderr);
            }
            println!("best p3 = {:.3} (MI {:.4} bits/4D)", ps.p3, ps.mi.mi_bits_per_4d);
            if let Some(path) = out {
                let artifact = serde_json::json!({
                    "distance_km": distance_km,
                    "power_dbm": power_dbm,
                    "p3": ps.p3,
                    "mi": ps.mi,
                    "grid": ps.grid.iter().map(|(p, e)| {
                        serde_json::json!({"p3": p, "mi": e.mi_bits_per_4d, "stderr": e.stderr})
                    }).collect::<Vec<_>>(),
                });
                std::fs::write(&path, serde_json::to_string_pretty(&artifact)?)?;
                println!("wrote {}", path.display());
            }
        }

        Command::Validate { file } => {
            let c = load_constellation_file(&file)?;
            describe(&c);
            let shaping = cfg.shaping_config()?;
            let report = validate_gss(&c, &shaping);
            println!(
                "orthant closure: {}\nX/Y swap closure: {}\nshell count: {}\nshell occupancy: {}",
                report.orthant_closure, report.xy_closure, report.shell_count, report.shell_occupancy
            );
            println!(
                "distinct radii: {} (multiplicities {:?})",
                report.distinct_norms.len(),
                report.norm_multiplicities
            );
            for m in &report.messages {
                println!("note: {m}");
            }
            if report.duplicate_points > 0 {
                println!("note: {} duplicate points", report.duplicate_points);
            }
            if report.pass() {
                println!("PASS");
            } else {
                println!("FAIL");
                std::process::exit(2);
            }
        }

        Command::ExportConstellation { kind, out } => {
            let c = parse_constellation(&cfg, &kind)?;
            save_constellation_file(&c, &out)?;
            describe(&c);
            println!("wrote {}", out.display());
        }

        Command::PlotData { run_dir, axis } => {
            let stamp_text = std::fs::read_to_string(run_dir.join("run.json"))?;
            let stamp: RunStamp = serde_json::from_str(&stamp_text)?;
            if stamp.config.config_hash() != stamp.config_hash {
                return Err(Error::config(
                    "run.json config hash does not match its embedded config; refusing to plot",
                ));
            }
            if cli.config.is_some() && cfg.config_hash() != stamp.config_hash {
                return Err(Error::config(
                    "supplied config does not match the run directory's provenance hash",
                ));
            }
            let text = std::fs::read_to_string(run_dir.join("results.jsonl"))?;
            let mut records = Vec::new();
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                records.push(serde_json::from_str::<SweepResult>(line)?);
            }
            let paths = emit_plot_data(
                &records,
                axis.into(),
                run_dir.join("plots"),
                &stamp.config_hash,
            )?;
            for p in &paths {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}
