//! Derivative-free maximization of the link MI: bound-constrained compass
//! (generalized pattern) search over the shell-shaping parameters, plus the
//! one-dimensional grid optimization of the PS amplitude prior.
//!
//! The search assumes a deterministic oracle; stochastic MI evaluations are
//! made deterministic upstream with common random numbers (one fixed seed
//! set per optimization run), and the winning point is re-evaluated on a
//! fresh, larger seed set by the campaign driver to report an unbiased MI.

use crate::config::RunConfig;
use crate::constellation::{ps_pm16qam_constellation, ParamVector, PSDistribution};
use crate::metrics::MIEstimate;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Per-parameter box constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    /// Validates elementwise `lower < upper` and matching lengths.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::config(format!(
                "bound lengths {} and {} must match and be nonempty",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::config(format!(
                    "bound {i}: lower {lo} must be strictly below upper {hi}"
                )));
            }
        }
        Ok(Bounds { lower, upper })
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.len()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| v >= lo && v <= hi)
    }
}

/// Deterministic polling rule: directions visited as
/// `+e₁, −e₁, +e₂, −e₂, …` (opportunistic — the first improving poll is
/// accepted immediately).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PollOrder {
    #[default]
    Coordinate,
}

/// Compass-search settings. The mesh is dimensionless: a poll along
/// coordinate `d` steps by `mesh · (upper_d − lower_d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatternSearchConfig {
    pub initial_mesh: f64,
    pub expand_factor: f64,
    pub contract_factor: f64,
    pub mesh_tolerance: f64,
    pub max_evals: usize,
    pub poll_order: PollOrder,
}

impl Default for PatternSearchConfig {
    fn default() -> Self {
        PatternSearchConfig {
            initial_mesh: 0.25,
            expand_factor: 2.0,
            contract_factor: 0.5,
            mesh_tolerance: 1e-4,
            max_evals: 20_000,
            poll_order: PollOrder::Coordinate,
        }
    }
}

impl PatternSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_mesh > 0.0 && self.initial_mesh.is_finite()) {
            return Err(Error::config(format!(
                "initial mesh {} must be positive",
                self.initial_mesh
            )));
        }
        if !(self.expand_factor >= 1.0) {
            return Err(Error::config(format!(
                "expand factor {} must be at least 1 (1 keeps the mesh on success)",
                self.expand_factor
            )));
        }
        if !(self.contract_factor > 0.0 && self.contract_factor < 1.0) {
            return Err(Error::config(format!(
                "contract factor {} must lie in (0, 1)",
                self.contract_factor
            )));
        }
        if !(self.mesh_tolerance > 0.0 && self.mesh_tolerance < self.initial_mesh) {
            return Err(Error::config(format!(
                "mesh tolerance {} must be positive and below the initial mesh {}",
                self.mesh_tolerance, self.initial_mesh
            )));
        }
        if self.max_evals == 0 {
            return Err(Error::config("max_evals must be positive"));
        }
        Ok(())
    }
}

/// One row of the optimization trace: objective evaluation counter, mesh
/// size at that evaluation, and the best value seen so far.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub eval: usize,
    pub mesh: f64,
    pub best_value: f64,
}

/// Outcome of a pattern search.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternSearchResult {
    pub best: Vec<f64>,
    pub best_value: f64,
    pub trace: Vec<TraceEntry>,
    /// True when the eval budget ran out before the mesh reached tolerance.
    pub truncated: bool,
    pub n_evals: usize,
}

/// Midpoint of the box: each coordinate `(lower + upper)/2`.
pub fn init_halfway(b: &Bounds) -> Vec<f64> {
    b.lower
        .iter()
        .zip(&b.upper)
        .map(|(lo, hi)| 0.5 * (lo + hi))
        .collect()
}

/// Bound-constrained compass search, maximizing `f`.
///
/// Polls `±mesh·range_d·e_d` around the incumbent in coordinate order,
/// projecting candidates onto the box (a poll that projects back onto the
/// incumbent is skipped without spending an evaluation). The first improving
/// poll is accepted and the mesh expands; a full unsuccessful poll cycle
/// contracts it. Stops when the mesh reaches `mesh_tolerance` or the eval
/// budget is exhausted (then `truncated` is set). The best-so-far trace is
/// monotone nondecreasing by construction.
pub fn pattern_search<F>(
    mut f: F,
    x0: &[f64],
    b: &Bounds,
    cfg: &PatternSearchConfig,
) -> Result<PatternSearchResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    cfg.validate()?;
    if !b.contains(x0) {
        return Err(Error::domain(
            "initial point lies outside the bounds".to_string(),
        ));
    }
    let n = b.len();
    let ranges: Vec<f64> = b
        .upper
        .iter()
        .zip(&b.lower)
        .map(|(hi, lo)| hi - lo)
        .collect();

    let mut best = x0.to_vec();
    let mut best_value = f(&best)?;
    let mut n_evals = 1usize;
    let mut mesh = cfg.initial_mesh;
    let mut trace = vec![TraceEntry {
        eval: 1,
        mesh,
        best_value,
    }];

    loop {
        let mut improved = false;
        'poll: for d in 0..n {
            for sign in [1.0, -1.0] {
                let stepped =
                    (best[d] + sign * mesh * ranges[d]).clamp(b.lower[d], b.upper[d]);
                if stepped == best[d] {
                    continue; // projected back onto the incumbent
                }
                if n_evals >= cfg.max_evals {
                    return Ok(PatternSearchResult {
                        best,
                        best_value,
                        trace,
                        truncated: true,
                        n_evals,
                    });
                }
                let mut candidate = best.clone();
                candidate[d] = stepped;
                let value = f(&candidate)?;
                n_evals += 1;
                if value > best_value {
                    best = candidate;
                    best_value = value;
                    improved = true;
                }
                trace.push(TraceEntry {
                    eval: n_evals,
                    mesh,
                    best_value,
                });
                if improved {
                    break 'poll;
                }
            }
        }
        if improved {
            // Cap at the full box scale; larger steps always project back.
            mesh = (mesh * cfg.expand_factor).min(1.0);
        } else {
            mesh *= cfg.contract_factor;
            if mesh <= cfg.mesh_tolerance {
                return Ok(PatternSearchResult {
                    best,
                    best_value,
                    trace,
                    truncated: false,
                    n_evals,
                });
            }
        }
    }
}

/// An operating point on the link for the optimization objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectivePoint {
    pub distance_km: f64,
    pub power_dbm: f64,
}

/// The end-to-end MI objective: builds the energy-normalized GSS
/// constellation from `params` and runs the full transmit → fiber → noise →
/// receive → MI pipeline with the common-random-number seed set (replicate 0
/// of the config's master seed). Deterministic to the last bit for fixed
/// `(params, cfg, point)`.
pub fn objective(params: &ParamVector, cfg: &RunConfig, point: ObjectivePoint) -> Result<f64> {
    let shaping = cfg.shaping_config()?;
    let c = crate::constellation::build_gss_constellation(params, &shaping, None)?;
    let eval = crate::experiments::evaluate_link(
        &c,
        cfg,
        point.distance_km,
        point.power_dbm,
        cfg.n_symbols,
        crate::experiments::REP_OPTIMIZE,
    )?;
    Ok(eval.mi.mi_bits_per_4d)
}

/// Result of the PS prior optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct PsOptimum {
    pub p3: f64,
    pub mi: MIEstimate,
    /// Every grid point evaluated, ascending in p3.
    pub grid: Vec<(f64, MIEstimate)>,
}

/// Core of [`optimize_ps_prior`], generic over the MI evaluation so the
/// selection logic is testable with an injected metric. Ensures 0.5 is on
/// the grid, evaluates ascending, and returns the argmax (lowest p3 among
/// exact ties).
pub fn optimize_ps_prior_with<F>(mut eval: F, grid: &[f64]) -> Result<PsOptimum>
where
    F: FnMut(f64) -> Result<MIEstimate>,
{
    if grid.is_empty() {
        return Err(Error::config("empty p3 grid"));
    }
    let mut points: Vec<f64> = grid.to_vec();
    for &p in &points {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(Error::config(format!("p3 = {p} outside [0, 1]")));
        }
    }
    points.push(0.5); // the uniform baseline is always in the running
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut results = Vec::with_capacity(points.len());
    for &p3 in &points {
        results.push((p3, eval(p3)?));
    }
    let mut best = 0usize;
    for (i, (_, est)) in results.iter().enumerate() {
        if est.mi_bits_per_4d > results[best].1.mi_bits_per_4d {
            best = i;
        }
    }
    Ok(PsOptimum {
        p3: results[best].0,
        mi: results[best].1,
        grid: results,
    })
}

/// Optimizes the PS-PM-16QAM amplitude prior over a p3 grid at one
/// `(distance, power)` operating point, with common random numbers across
/// grid points. The returned MI can never fall below the uniform (p3 = 0.5)
/// evaluation on the same seed, because 0.5 is always on the grid.
pub fn optimize_ps_prior(
    cfg: &RunConfig,
    point: ObjectivePoint,
    grid: &[f64],
) -> Result<PsOptimum> {
    optimize_ps_prior_with(
        |p3| {
            let c = ps_pm16qam_constellation(PSDistribution::new(p3)?)?;
            let eval = crate::experiments::evaluate_link(
                &c,
                cfg,
                point.distance_km,
                point.power_dbm,
                cfg.n_symbols,
                crate::experiments::REP_OPTIMIZE,
            )?;
            Ok(eval.mi)
        },
        grid,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{pm16qam, Point4D, ShapingConfig};
    use crate::metrics::{fit_noise_variance, mi_monte_carlo};
    use crate::txdsp::draw_symbols;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn unit_box(n: usize) -> Bounds {
        Bounds::new(vec![0.0; n], vec![1.0; n]).unwrap()
    }

    // --- init_halfway -------------------------------------------------------

    #[test]
    fn halfway_over_default_gss4_bounds() {
        let cfg = ShapingConfig::new(8, 4).unwrap();
        let (lo, hi) = cfg.param_bounds();
        let b = Bounds::new(lo, hi).unwrap();
        let x0 = init_halfway(&b);
        assert_eq!(x0.len(), 28);
        let quarter_pi = std::f64::consts::FRAC_PI_4;
        assert!(x0[..4].iter().all(|&v| v == 0.5));
        assert!(x0[4..].iter().all(|&v| (v - quarter_pi).abs() < 1e-15));
        assert_eq!(x0, init_halfway(&b));
    }

    #[test]
    fn halfway_of_zero_two_is_one() {
        let b = Bounds::new(vec![0.0], vec![2.0]).unwrap();
        assert_eq!(init_halfway(&b), vec![1.0]);
    }

    // --- pattern_search ---------------------------------------------------------

    #[test]
    fn quadratic_maximum_found_within_tolerance() {
        let b = unit_box(28);
        let x0 = init_halfway(&b);
        let f = |x: &[f64]| Ok(-x.iter().map(|v| (v - 0.3).powi(2)).sum::<f64>());
        let r = pattern_search(f, &x0, &b, &PatternSearchConfig::default()).unwrap();
        assert!(!r.truncated);
        assert!(r.n_evals <= 20_000, "{} evals", r.n_evals);
        for (d, v) in r.best.iter().enumerate() {
            assert!(
                (v - 0.3).abs() <= 1e-3,
                "coordinate {d} = {v} missed the optimum"
            );
        }
    }

    #[test]
    fn corner_optimum_lands_exactly_on_the_bound() {
        let b = unit_box(5);
        let x0 = init_halfway(&b);
        let f = |x: &[f64]| Ok(x.iter().sum::<f64>());
        let r = pattern_search(f, &x0, &b, &PatternSearchConfig::default()).unwrap();
        for v in &r.best {
            assert_eq!(*v, 1.0, "projection should pin the bound exactly");
        }
    }

    #[test]
    fn trace_is_monotone_and_feasible_everywhere() {
        let b = unit_box(6);
        let x0 = init_halfway(&b);
        // Deterministic multimodal surface.
        let bounds = b.clone();
        let f = move |x: &[f64]| {
            assert!(bounds.contains(x), "evaluated point escaped the box");
            Ok(x.iter()
                .enumerate()
                .map(|(i, v)| ((i as f64 + 2.0) * v).sin())
                .sum::<f64>())
        };
        let r = pattern_search(f, &x0, &b, &PatternSearchConfig::default()).unwrap();
        let mut last = f64::NEG_INFINITY;
        for entry in &r.trace {
            assert!(entry.best_value >= last, "best-so-far regressed");
            last = entry.best_value;
        }
        assert_eq!(r.trace.last().unwrap().best_value, r.best_value);
        assert_eq!(r.trace.last().unwrap().eval, r.n_evals);
    }

    #[test]
    fn exhausted_budget_sets_the_truncation_flag() {
        let b = unit_box(28);
        let x0 = init_halfway(&b);
        let f = |x: &[f64]| Ok(-x.iter().map(|v| (v - 0.3).powi(2)).sum::<f64>());
        let cfg = PatternSearchConfig {
            max_evals: 10,
            ..PatternSearchConfig::default()
        };
        let r = pattern_search(f, &x0, &b, &cfg).unwrap();
        assert!(r.truncated);
        assert_eq!(r.n_evals, 10);
        assert!(r.best_value >= -28.0 * 0.04);
    }

    #[test]
    fn flat_objective_terminates_at_the_start() {
        let b = unit_box(3);
        let x0 = init_halfway(&b);
        let r = pattern_search(|_| Ok(0.0), &x0, &b, &PatternSearchConfig::default()).unwrap();
        assert!(!r.truncated);
        assert_eq!(r.best, x0);
        assert_eq!(r.best_value, 0.0);
    }

    #[test]
    fn objective_errors_surface_unchanged() {
        let b = unit_box(2);
        let x0 = init_halfway(&b);
        let mut calls = 0;
        let f = |_: &[f64]| {
            calls += 1;
            if calls > 3 {
                Err(crate::Error::degenerate("synthetic failure"))
            } else {
                Ok(calls as f64)
            }
        };
        assert!(matches!(
            pattern_search(f, &x0, &b, &PatternSearchConfig::default()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn config_and_bounds_validation() {
        assert!(Bounds::new(vec![0.0], vec![0.0]).is_err());
        assert!(Bounds::new(vec![1.0], vec![0.0]).is_err());
        assert!(Bounds::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(Bounds::new(vec![], vec![]).is_err());

        let bad = |patch: fn(&mut PatternSearchConfig)| {
            let mut c = PatternSearchConfig::default();
            patch(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.initial_mesh = 0.0));
        assert!(bad(|c| c.expand_factor = 0.99));
        assert!(!bad(|c| c.expand_factor = 1.0)); // keep-mesh-on-success is legal
        assert!(bad(|c| c.contract_factor = 1.0));
        assert!(bad(|c| c.contract_factor = 0.0));
        assert!(bad(|c| c.mesh_tolerance = 0.5));
        assert!(bad(|c| c.max_evals = 0));

        let b = unit_box(2);
        let outside = vec![1.5, 0.5];
        assert!(pattern_search(|_| Ok(0.0), &outside, &b, &PatternSearchConfig::default())
            .is_err());
    }

    // --- optimize_ps_prior_with ----------------------------------------------

    fn fake_estimate(mi: f64) -> MIEstimate {
        MIEstimate {
            mi_bits_per_4d: mi,
            n_symbols: 1000,
            sigma2: 0.01,
            stderr: 0.001,
        }
    }

    #[test]
    fn ps_grid_argmax_is_selected() {
        let r = optimize_ps_prior_with(
            |p3| Ok(fake_estimate(-(p3 - 0.42).powi(2))),
            &[0.3, 0.4, 0.45, 0.5],
        )
        .unwrap();
        assert_eq!(r.p3, 0.4);
        assert_eq!(r.grid.len(), 4);
    }

    #[test]
    fn uniform_baseline_is_always_on_the_grid() {
        let r = optimize_ps_prior_with(|p3| Ok(fake_estimate(p3)), &[0.3, 0.4]).unwrap();
        assert_eq!(r.p3, 0.5, "0.5 must be injected and wins here");
        assert_eq!(r.grid.len(), 3);
        let uniform_mi = r
            .grid
            .iter()
            .find(|(p, _)| *p == 0.5)
            .unwrap()
            .1
            .mi_bits_per_4d;
        assert!(r.mi.mi_bits_per_4d >= uniform_mi);
    }

    #[test]
    fn ties_break_toward_the_lowest_p3() {
        let r = optimize_ps_prior_with(|_| Ok(fake_estimate(1.0)), &[0.3, 0.4]).unwrap();
        assert_eq!(r.p3, 0.3);
    }

    #[test]
    fn empty_or_invalid_grids_are_rejected() {
        assert!(matches!(
            optimize_ps_prior_with(|p3| Ok(fake_estimate(p3)), &[]),
            Err(Error::Config(_))
        ));
        assert!(optimize_ps_prior_with(|p3| Ok(fake_estimate(p3)), &[1.5]).is_err());
    }

    // At generous SNR the uniform prior wins: shaping trades entropy for
    // energy, and near saturation the entropy loss dominates. Verified
    // against the Gauss-Hermite oracle (uniform ≈ 7.9999 bits at 20 dB,
    // every shaped grid point at least 0.03 bits lower).
    #[test]
    fn high_snr_awgn_prefers_the_uniform_prior() {
        fn gaussian(rng: &mut ChaCha12Rng) -> f64 {
            loop {
                let u: f64 = rng.gen();
                if u > 0.0 {
                    let v: f64 = rng.gen();
                    return (-2.0 * u.ln()).sqrt()
                        * (2.0 * std::f64::consts::PI * v).cos();
                }
            }
        }
        let n = 1 << 14;
        let eval = |p3: f64| -> Result<MIEstimate> {
            let c = ps_pm16qam_constellation(PSDistribution::new(p3)?)?;
            let snr = 10f64.powf(2.0); // 20 dB per 2D
            let sigma2 = c.mean_energy() / 2.0 / (2.0 * snr);
            let sigma = sigma2.sqrt();
            let idx = draw_symbols(&c, n, 41);
            let mut rng = ChaCha12Rng::seed_from_u64(42);
            let y: Vec<Point4D> = idx
                .iter()
                .map(|&i| {
                    let p = c.points[i];
                    Point4D::new(
                        p.x1 + sigma * gaussian(&mut rng),
                        p.x2 + sigma * gaussian(&mut rng),
                        p.x3 + sigma * gaussian(&mut rng),
                        p.x4 + sigma * gaussian(&mut rng),
                    )
                })
                .collect();
            let x: Vec<Point4D> = idx.iter().map(|&i| c.points[i]).collect();
            let fitted = fit_noise_variance(&y, &x)?;
            mi_monte_carlo(&y, &idx, &c, fitted)
        };
        let r = optimize_ps_prior_with(eval, &[0.3, 0.4, 0.45, 0.5]).unwrap();
        assert_eq!(r.p3, 0.5, "grid MI: {:?}", r.grid);
        // And the uniform prior reproduces the PM-16QAM geometry (the two
        // normalization paths accumulate in different orders, hence ulps).
        let pm = pm16qam();
        let ps = ps_pm16qam_constellation(PSDistribution::new(0.5).unwrap()).unwrap();
        for (a, b) in pm.points.iter().zip(&ps.points) {
            assert!(a.dist_sqr(b) < 1e-24, "{a:?} vs {b:?}");
        }
    }
}
