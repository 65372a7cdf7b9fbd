//! Campaign orchestration: the end-to-end link evaluation, power and
//! distance sweeps with paired seeds, optimal-launch-power search, result
//! persistence, and plot-data emission.
//!
//! Seed discipline: every random stream derives from the master seed, a
//! role label, and a replicate index — never from the constellation, power,
//! or distance — so every configuration at a given replicate consumes
//! identical data and noise realizations and MI differences are paired.
//! Replicate 0 feeds optimizer evaluations (common random numbers);
//! replicate 1 feeds the reported records and final re-evaluations.

use crate::channel::{ssfm_propagate, FiberParams};
use crate::config::{ConstellationSpec, RunConfig};
use crate::constellation::{
    build_gss_constellation, load_constellation_file, pm16qam, ps_pm16qam_constellation,
    save_constellation_file, Constellation, ParamVector, PSDistribution, Point4D,
};
use crate::metrics::{fit_noise_variance, mi_monte_carlo, papr_symbols, papr_waveform, MIEstimate};
use crate::noise::{load_rx_noise, load_tx_osnr, rx_noise_power, snr_for_ber};
use crate::optimizer::{
    init_halfway, objective, optimize_ps_prior, pattern_search, Bounds, ObjectivePoint,
    PatternSearchResult,
};
use crate::rxdsp::{align_scale, cdc, matched_filter_downsample};
use crate::txdsp::{draw_symbols, pulse_shape, set_launch_power};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Replicate index for optimizer evaluations (common random numbers).
pub const REP_OPTIMIZE: u64 = 0;
/// Replicate index for reported records and final re-evaluations.
pub const REP_REPORT: u64 = 1;

/// Fitted noise variances below this floor are treated as the noiseless
/// limit (keeps the MI estimator defined on exact chains).
const SIGMA2_FLOOR: f64 = 1e-30;

/// Derives a stream seed from the master seed, a role label, and a
/// replicate index (SHA-256, first eight little-endian bytes).
pub fn derive_seed(master: u64, role: &str, rep: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(role.as_bytes());
    hasher.update(rep.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is long enough"))
}

/// The seed set consumed by one link evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalSeeds {
    pub data: u64,
    pub tx_noise: u64,
    pub rx_noise: u64,
}

pub fn eval_seeds(master: u64, rep: u64) -> EvalSeeds {
    EvalSeeds {
        data: derive_seed(master, "data", rep),
        tx_noise: derive_seed(master, "txnoise", rep),
        rx_noise: derive_seed(master, "rxnoise", rep),
    }
}

/// Outcome of one link evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkEval {
    pub mi: MIEstimate,
    pub papr_symbol: f64,
    /// PAPR of the transmitted waveform at launch, dB.
    pub papr_waveform_db: f64,
}

/// Runs the full chain for one constellation at one operating point:
/// symbol draw → RRC shaping → launch power → TX OSNR loading → fiber →
/// receiver noise at the absolute budget floor → CDC → matched filter →
/// scaling alignment → variance fit → MI. Deterministic given
/// `(c, cfg, distance, power, n_symbols, rep)`.
pub fn evaluate_link(
    c: &Constellation,
    cfg: &RunConfig,
    distance_km: f64,
    power_dbm: f64,
    n_symbols: usize,
    rep: u64,
) -> Result<LinkEval> {
    let seeds = eval_seeds(cfg.master_seed, rep);
    let indices = draw_symbols(c, n_symbols, seeds.data);
    let symbols: Vec<Point4D> = indices.iter().map(|&i| c.points[i]).collect();

    let mut w = pulse_shape(&symbols, &cfg.pulse, cfg.symbol_rate_hz)?;
    set_launch_power(&mut w, power_dbm)?;
    let papr_wf = papr_waveform(&w);

    if cfg.noise.tx.enabled {
        load_tx_osnr(&mut w, cfg.noise.tx.osnr_db, seeds.tx_noise)?;
    }

    let fiber = FiberParams {
        length_km: distance_km,
        ..cfg.fiber
    };
    let mut w = ssfm_propagate(&w, &fiber, &cfg.ssfm)?;

    if cfg.noise.rx.enabled {
        // The receiver noise floor is absolute: derived once from the
        // sensitivity point, independent of how much power actually arrives.
        let noise_dbm = rx_noise_power(
            cfg.noise.rx.input_power_dbm,
            snr_for_ber(cfg.noise.rx.prefec_ber_target)?,
        );
        let received_dbm = power_dbm - fiber.span_loss_db();
        load_rx_noise(
            &mut w,
            noise_dbm,
            received_dbm,
            cfg.noise.rx.reference,
            seeds.rx_noise,
        )?;
    }

    let w = cdc(&w, &fiber);
    let received = matched_filter_downsample(&w, &cfg.pulse)?;
    let keep = received.edge_discard..n_symbols - received.edge_discard;
    let kept_indices = &indices[keep.clone()];
    let reference: Vec<Point4D> = kept_indices.iter().map(|&i| c.points[i]).collect();
    let aligned = align_scale(&received, &reference)?;

    let sigma2 = fit_noise_variance(&aligned.y, &reference)?.max(SIGMA2_FLOOR);
    let mi = mi_monte_carlo(&aligned.y, kept_indices, c, sigma2)?;
    Ok(LinkEval {
        mi,
        papr_symbol: papr_symbols(c),
        papr_waveform_db: papr_wf,
    })
}

/// One persisted record of the campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub constellation_id: String,
    pub distance_km: f64,
    pub power_dbm: f64,
    /// `None` when the evaluation failed; see `error`.
    pub mi: Option<MIEstimate>,
    pub papr_symbol: Option<f64>,
    pub papr_waveform_db: Option<f64>,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

impl SweepResult {
    pub fn succeeded(&self) -> bool {
        self.mi.is_some()
    }

    pub fn mi_bits(&self) -> Option<f64> {
        self.mi.map(|m| m.mi_bits_per_4d)
    }
}

/// Evaluates one point with failure isolation and wall-clock timing.
fn timed_record(
    c: &Constellation,
    cfg: &RunConfig,
    distance_km: f64,
    power_dbm: f64,
    n_symbols: usize,
    rep: u64,
) -> SweepResult {
    let start = Instant::now();
    match evaluate_link(c, cfg, distance_km, power_dbm, n_symbols, rep) {
        Ok(eval) => SweepResult {
            constellation_id: c.name.clone(),
            distance_km,
            power_dbm,
            mi: Some(eval.mi),
            papr_symbol: Some(eval.papr_symbol),
            papr_waveform_db: Some(eval.papr_waveform_db),
            wall_time_s: start.elapsed().as_secs_f64(),
            error: None,
        },
        Err(e) => SweepResult {
            constellation_id: c.name.clone(),
            distance_km,
            power_dbm,
            mi: None,
            papr_symbol: Some(papr_symbols(c)),
            papr_waveform_db: None,
            wall_time_s: start.elapsed().as_secs_f64(),
            error: Some(e.to_string()),
        },
    }
}

/// One reporting-replicate evaluation at the final symbol count, with any
/// failure captured inside the record rather than returned.
pub fn timed_final_record(
    c: &Constellation,
    cfg: &RunConfig,
    distance_km: f64,
    power_dbm: f64,
) -> SweepResult {
    timed_record(c, cfg, distance_km, power_dbm, cfg.n_symbols_final, REP_REPORT)
}

/// Appends each record to `results.jsonl` as soon as it exists (a crash
/// mid-sweep loses at most the in-flight point) and mirrors them in memory
/// for table emission.
pub struct ResultWriter {
    out: BufWriter<File>,
    pub dir: PathBuf,
    pub config_hash: String,
    pub collected: Vec<SweepResult>,
}

/// Provenance stamp stored next to the records.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunStamp {
    pub config_hash: String,
    pub master_seed: u64,
    pub config: RunConfig,
}

impl ResultWriter {
    /// Creates `dir`, stamps it with `run.json`, and opens `results.jsonl`.
    pub fn create(dir: impl AsRef<Path>, cfg: &RunConfig) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let stamp = RunStamp {
            config_hash: cfg.config_hash(),
            master_seed: cfg.master_seed,
            config: cfg.clone(),
        };
        let stamp_text = serde_json::to_string_pretty(&stamp)?;
        std::fs::write(dir.join("run.json"), stamp_text)?;
        let file = File::create(dir.join("results.jsonl"))?;
        Ok(ResultWriter {
            out: BufWriter::new(file),
            dir,
            config_hash: cfg.config_hash(),
            collected: Vec::new(),
        })
    }

    pub fn append(&mut self, record: &SweepResult) -> Result<()> {
        let line = serde_json::to_string(record)?;
        writeln!(self.out, "{line}")?;
        self.out.flush()?;
        self.collected.push(record.clone());
        Ok(())
    }

    /// Writes the full record table (CSV, no wall-clock column so reruns
    /// with one master seed are byte-identical).
    pub fn write_record_table(&self) -> Result<PathBuf> {
        let path = self.dir.join("results.csv");
        write_record_csv(&path, &self.collected)?;
        Ok(path)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.17e}")).unwrap_or_default()
}

fn write_record_csv(path: &Path, records: &[SweepResult]) -> Result<()> {
    let mut text = String::from(
        "constellation_id,distance_km,power_dbm,mi,stderr,sigma2,n_symbols,\
         papr_symbol,papr_waveform_db,error\n",
    );
    for r in records {
        let err = r
            .error
            .as_deref()
            .unwrap_or("")
            .replace([',', '\n'], ";");
        text.push_str(&format!(
            "{},{:.17e},{:.17e},{},{},{},{},{},{},{}\n",
            r.constellation_id,
            r.distance_km,
            r.power_dbm,
            fmt_opt(r.mi.map(|m| m.mi_bits_per_4d)),
            fmt_opt(r.mi.map(|m| m.stderr)),
            fmt_opt(r.mi.map(|m| m.sigma2)),
            r.mi.map(|m| m.n_symbols.to_string()).unwrap_or_default(),
            fmt_opt(r.papr_symbol),
            fmt_opt(r.papr_waveform_db),
            err,
        ));
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Evaluates the constellation at every power in `cfg.sweep.powers_dbm` for
/// one distance with identical seeds across powers (paired comparison).
/// Failures are isolated into their records; the sweep continues.
pub fn run_power_sweep(
    cfg: &RunConfig,
    c: &Constellation,
    distance_km: f64,
    n_symbols: usize,
    mut writer: Option<&mut ResultWriter>,
) -> Result<Vec<SweepResult>> {
    let mut powers = cfg.sweep.powers_dbm.clone();
    powers.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut records = Vec::with_capacity(powers.len());
    for &p in &powers {
        let record = timed_record(c, cfg, distance_km, p, n_symbols, REP_REPORT);
        if let Some(w) = writer.as_deref_mut() {
            w.append(&record)?;
        }
        records.push(record);
    }
    Ok(records)
}

/// Picks the argmax-MI record (ties broken toward the lowest power).
fn best_record(records: &[SweepResult]) -> Option<&SweepResult> {
    let mut best: Option<&SweepResult> = None;
    for r in records {
        if let Some(mi) = r.mi_bits() {
            let better = match best.and_then(SweepResult::mi_bits) {
                Some(b) => mi > b,
                None => true,
            };
            if better {
                best = Some(r);
            }
        }
    }
    best
}

/// The power grid around an argmax for one refinement pass: half-spacing
/// neighbors on each side where a neighbor exists.
fn refinement_powers(powers: &[f64], argmax: f64) -> Vec<f64> {
    let idx = powers
        .iter()
        .position(|&p| p == argmax)
        .expect("argmax came from this grid");
    let mut extra = Vec::new();
    if idx > 0 {
        extra.push(argmax - 0.5 * (argmax - powers[idx - 1]));
    }
    if idx + 1 < powers.len() {
        extra.push(argmax + 0.5 * (powers[idx + 1] - argmax));
    }
    extra
}

/// Finds the optimal launch power P* for one constellation and distance:
/// coarse argmax over the configured grid, then one 3-point local
/// refinement at half spacing. Returns the winning record (its `power_dbm`
/// is P*); the refinement can never return a lower MI than the coarse
/// argmax because the coarse winner stays in the running.
pub fn find_optimal_launch_power(
    cfg: &RunConfig,
    c: &Constellation,
    distance_km: f64,
    n_symbols: usize,
    mut writer: Option<&mut ResultWriter>,
) -> Result<SweepResult> {
    if cfg.sweep.powers_dbm.len() < 3 {
        return Err(Error::config(format!(
            "P* search needs at least 3 powers, got {}",
            cfg.sweep.powers_dbm.len()
        )));
    }
    let mut records = run_power_sweep(cfg, c, distance_km, n_symbols, writer.as_deref_mut())?;
    let coarse = best_record(&records)
        .cloned()
        .ok_or_else(|| Error::degenerate("every point of the power sweep failed"))?;

    let mut powers = cfg.sweep.powers_dbm.clone();
    powers.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for p in refinement_powers(&powers, coarse.power_dbm) {
        let record = timed_record(c, cfg, distance_km, p, n_symbols, REP_REPORT);
        if let Some(w) = writer.as_deref_mut() {
            w.append(&record)?;
        }
        records.push(record);
    }
    // Ascending power order keeps the tie-break deterministic.
    records.sort_by(|a, b| a.power_dbm.partial_cmp(&b.power_dbm).unwrap());
    Ok(best_record(&records).cloned().expect("coarse winner exists"))
}

/// Artifacts of one GSS geometry optimization.
#[derive(Debug, Clone)]
pub struct GssOptimization {
    pub search: PatternSearchResult,
    pub params: ParamVector,
    pub constellation: Constellation,
    pub distance_km: f64,
    pub power_dbm: f64,
}

/// Optimizes the GSS geometry at one operating point with common random
/// numbers, warm-startable from a previous solution.
pub fn optimize_gss_at(
    cfg: &RunConfig,
    distance_km: f64,
    power_dbm: f64,
    warm_start: Option<&[f64]>,
) -> Result<GssOptimization> {
    let shaping = cfg.shaping_config()?;
    let (lo, hi) = shaping.param_bounds();
    let bounds = Bounds::new(lo, hi)?;
    let x0 = match warm_start {
        Some(x) => x.to_vec(),
        None => init_halfway(&bounds),
    };
    let point = ObjectivePoint {
        distance_km,
        power_dbm,
    };
    let search = pattern_search(
        |x| {
            let params = ParamVector::from_values(&shaping, x.to_vec())?;
            objective(&params, cfg, point)
        },
        &x0,
        &bounds,
        &cfg.optimizer,
    )?;
    let params = ParamVector::from_values(&shaping, search.best.clone())?;
    let constellation = build_gss_constellation(&params, &shaping, None)?;
    Ok(GssOptimization {
        search,
        params,
        constellation,
        distance_km,
        power_dbm,
    })
}

fn sanitize_for_filename(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '-'
            }
        })
        .collect()
}

fn write_trace_csv(path: &Path, search: &PatternSearchResult) -> Result<()> {
    let mut text = String::from("eval,mesh,best_mi\n");
    for t in &search.trace {
        text.push_str(&format!("{},{:.17e},{:.17e}\n", t.eval, t.mesh, t.best_value));
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// The persisted outcome of one GSS optimization, loadable as a warm start.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GssParamsArtifact {
    pub distance_km: f64,
    pub power_dbm: f64,
    pub search_mi: f64,
    pub truncated: bool,
    pub n_evals: usize,
    pub params: Vec<f64>,
}

/// Files written by [`persist_gss_optimization`].
#[derive(Debug, Clone)]
pub struct GssArtifactPaths {
    pub trace_csv: PathBuf,
    pub params_json: PathBuf,
    pub constellation_txt: PathBuf,
}

/// Writes the optimizer trace, winning parameters, and optimized
/// constellation file for one GSS run into `dir`.
pub fn persist_gss_optimization(
    dir: impl AsRef<Path>,
    opt: &GssOptimization,
) -> Result<GssArtifactPaths> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let tag = sanitize_for_filename(&format!(
        "{}_{}km",
        opt.constellation.name, opt.distance_km
    ));
    let paths = GssArtifactPaths {
        trace_csv: dir.join(format!("optimizer_trace_{tag}.csv")),
        params_json: dir.join(format!("gss_params_{tag}.json")),
        constellation_txt: dir.join(format!("constellation_{tag}.txt")),
    };
    write_trace_csv(&paths.trace_csv, &opt.search)?;
    let artifact = GssParamsArtifact {
        distance_km: opt.distance_km,
        power_dbm: opt.power_dbm,
        search_mi: opt.search.best_value,
        truncated: opt.search.truncated,
        n_evals: opt.search.n_evals,
        params: opt.search.best.clone(),
    };
    std::fs::write(&paths.params_json, serde_json::to_string_pretty(&artifact)?)?;
    save_constellation_file(&opt.constellation, &paths.constellation_txt)?;
    Ok(paths)
}

/// The campaign of the distance sweep: per constellation and distance,
/// optimize what is optimizable (GSS geometry, PS prior) at the distance's
/// anchor power, find each format's own P*, and return one summary row per
/// (constellation, distance). All intermediate records flow through the
/// writer; optimizer traces, winning parameters, and optimized constellation
/// files land next to the records.
///
/// The anchor power is the PM-16QAM P* for that distance when PM-16QAM is
/// on the roster (computed first), otherwise the midpoint of the power grid.
pub fn run_distance_sweep(cfg: &RunConfig, writer: &mut ResultWriter) -> Result<Vec<SweepResult>> {
    cfg.validate()?;
    let mut summary = Vec::new();
    let mut distances = cfg.sweep.distances_km.clone();
    distances.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut file_cache: Vec<(String, Constellation)> = Vec::new();
    for spec in &cfg.sweep.constellations {
        if let ConstellationSpec::File { path } = spec {
            file_cache.push((path.clone(), load_constellation_file(path)?));
        }
    }

    // Warm starts, keyed by solved distance.
    let mut solved_gss: Vec<(f64, Vec<f64>)> = Vec::new();

    for &distance in &distances {
        let has_pm = cfg
            .sweep
            .constellations
            .iter()
            .any(|s| matches!(s, ConstellationSpec::Pm16qam));
        let pm_best = if has_pm {
            Some(find_optimal_launch_power(
                cfg,
                &pm16qam(),
                distance,
                cfg.n_symbols_final,
                Some(writer),
            )?)
        } else {
            None
        };
        let anchor_power = pm_best
            .as_ref()
            .map(|r| r.power_dbm)
            .unwrap_or_else(|| cfg.sweep.powers_dbm[cfg.sweep.powers_dbm.len() / 2]);

        for spec in &cfg.sweep.constellations {
            match spec {
                ConstellationSpec::Pm16qam => {
                    summary.push(pm_best.clone().expect("computed above"));
                }
                ConstellationSpec::File { path } => {
                    let c = &file_cache
                        .iter()
                        .find(|(p, _)| p == path)
                        .expect("cached above")
                        .1;
                    summary.push(find_optimal_launch_power(
                        cfg,
                        c,
                        distance,
                        cfg.n_symbols_final,
                        Some(writer),
                    )?);
                }
                ConstellationSpec::PsPm16qam => {
                    let point = ObjectivePoint {
                        distance_km: distance,
                        power_dbm: anchor_power,
                    };
                    let ps = optimize_ps_prior(cfg, point, &cfg.ps.p3_grid)?;
                    let c = ps_pm16qam_constellation(PSDistribution::new(ps.p3)?)?;
                    let artifact = serde_json::json!({
                        "distance_km": distance,
                        "anchor_power_dbm": anchor_power,
                        "p3": ps.p3,
                        "grid": ps.grid.iter().map(|(p, e)| {
                            serde_json::json!({"p3": p, "mi": e.mi_bits_per_4d})
                        }).collect::<Vec<_>>(),
                    });
                    std::fs::write(
                        writer.dir.join(format!("ps_prior_{distance}km.json")),
                        serde_json::to_string_pretty(&artifact)?,
                    )?;
                    summary.push(find_optimal_launch_power(
                        cfg,
                        &c,
                        distance,
                        cfg.n_symbols_final,
                        Some(writer),
                    )?);
                }
                ConstellationSpec::Gss => {
                    let warm = solved_gss
                        .iter()
                        .min_by(|a, b| {
                            (a.0 - distance)
                                .abs()
                                .partial_cmp(&(b.0 - distance).abs())
                                .unwrap()
                        })
                        .map(|(_, x)| x.clone());
                    let opt =
                        optimize_gss_at(cfg, distance, anchor_power, warm.as_deref())?;
                    solved_gss.push((distance, opt.search.best.clone()));
                    persist_gss_optimization(&writer.dir, &opt)?;

                    // Paired final record at the anchor power (same seeds as
                    // every other constellation's record there).
                    let anchored = timed_record(
                        &opt.constellation,
                        cfg,
                        distance,
                        anchor_power,
                        cfg.n_symbols_final,
                        REP_REPORT,
                    );
                    writer.append(&anchored)?;

                    summary.push(find_optimal_launch_power(
                        cfg,
                        &opt.constellation,
                        distance,
                        cfg.n_symbols_final,
                        Some(writer),
                    )?);
                }
            }
        }
    }

    writer.write_record_table()?;
    write_record_csv(&writer.dir.join("summary.csv"), &summary)?;
    Ok(summary)
}

/// Plot axis selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotAxis {
    Distance,
    Power,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlotManifest {
    pub axis: PlotAxis,
    pub config_hash: String,
    pub files: Vec<String>,
}

/// Writes one `x,mi,stderr` CSV per constellation (failed records skipped)
/// plus a JSON manifest naming the files and the config hash. Records whose
/// provenance hash differs from `config_hash` are refused.
pub fn emit_plot_data(
    results: &[SweepResult],
    axis: PlotAxis,
    dir: impl AsRef<Path>,
    config_hash: &str,
) -> Result<Vec<PathBuf>> {
    if results.is_empty() {
        return Err(Error::domain("no results to plot"));
    }
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;

    let mut order: Vec<&str> = Vec::new();
    for r in results {
        if !order.contains(&r.constellation_id.as_str()) {
            order.push(&r.constellation_id);
        }
    }

    let axis_name = match axis {
        PlotAxis::Distance => "distance",
        PlotAxis::Power => "power",
    };
    let mut files = Vec::new();
    let mut paths = Vec::new();
    for id in order {
        let mut rows: Vec<(f64, f64, f64)> = results
            .iter()
            .filter(|r| r.constellation_id == id)
            .filter_map(|r| {
                r.mi.map(|m| {
                    let x = match axis {
                        PlotAxis::Distance => r.distance_km,
                        PlotAxis::Power => r.power_dbm,
                    };
                    (x, m.mi_bits_per_4d, m.stderr)
                })
            })
            .collect();
        rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut text = String::from("x,mi,stderr\n");
        for (x, mi, se) in rows {
            text.push_str(&format!("{x:.17e},{mi:.17e},{se:.17e}\n"));
        }
        let name = format!("{}_{axis_name}.csv", sanitize_for_filename(id));
        let path = dir.join(&name);
        std::fs::write(&path, text)?;
        files.push(name);
        paths.push(path);
    }
    let manifest = PlotManifest {
        axis,
        config_hash: config_hash.to_string(),
        files,
    };
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(paths)
}

/// Linear interpolation of the distance where MI crosses `threshold`, over
/// `(distance, mi)` rows sorted ascending in distance. Returns the first
/// crossing; `None` when the curve never brackets the threshold.
pub fn reach_at_threshold(rows: &[(f64, f64)], threshold: f64) -> Option<f64> {
    for pair in rows.windows(2) {
        let (d0, m0) = pair[0];
        let (d1, m1) = pair[1];
        if (m0 >= threshold && m1 <= threshold) || (m0 <= threshold && m1 >= threshold) {
            if m0 == m1 {
                return Some(d0);
            }
            return Some(d0 + (threshold - m0) * (d1 - d0) / (m1 - m0));
        }
    }
    None
}
