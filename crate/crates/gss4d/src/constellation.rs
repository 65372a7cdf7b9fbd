//! 4D constellations: the geometric-shell-shaping (GSS) family built from
//! spherical parameters under orthant and polarization-swap symmetry, the
//! PM-16QAM baselines, file-loaded packings, validation, and serialization.
//!
//! Conventions:
//! - `(x1, x2)` are the in-phase/quadrature coordinates of the x polarization,
//!   `(x3, x4)` of the y polarization.
//! - Constellations are kept at unit prior-weighted mean energy; launch power
//!   is applied exclusively by the transmitter (`txdsp::set_launch_power`),
//!   which keeps the GSS radius bound `r ≤ 1` meaningful.

use crate::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Half pi, the upper bound of every GSS angle parameter.
pub const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;

/// One 4D constellation point (normalized-energy units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point4D {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub x4: f64,
}

impl Point4D {
    pub const fn new(x1: f64, x2: f64, x3: f64, x4: f64) -> Self {
        Point4D { x1, x2, x3, x4 }
    }

    /// Squared Euclidean norm ‖x‖².
    pub fn norm_sqr(&self) -> f64 {
        self.x1 * self.x1 + self.x2 * self.x2 + self.x3 * self.x3 + self.x4 * self.x4
    }

    /// Euclidean norm ‖x‖.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Coordinates as an array in `(x1, x2, x3, x4)` order.
    pub fn coords(&self) -> [f64; 4] {
        [self.x1, self.x2, self.x3, self.x4]
    }

    /// The polarization-swapped twin `(x3, x4, x1, x2)`.
    pub fn swap_polarizations(&self) -> Self {
        Point4D::new(self.x3, self.x4, self.x1, self.x2)
    }

    /// Squared distance to another point.
    pub fn dist_sqr(&self, other: &Point4D) -> f64 {
        let d1 = self.x1 - other.x1;
        let d2 = self.x2 - other.x2;
        let d3 = self.x3 - other.x3;
        let d4 = self.x4 - other.x4;
        d1 * d1 + d2 * d2 + d3 * d3 + d4 * d4
    }

    fn is_finite(&self) -> bool {
        self.coords().iter().all(|c| c.is_finite())
    }
}

/// Structural parameters of the GSS family: `m` bits per 4D symbol and `k`
/// energy shells. The dimensionality is fixed at N = 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShapingConfig {
    m: u32,
    k: u32,
}

impl ShapingConfig {
    /// Validates `m ≥ 5`, `k = 2^p`, and equal shell occupancy within the
    /// reduced first-orthant set (`2^(m−5)` divisible by `k`).
    pub fn new(m: u32, k: u32) -> Result<Self> {
        if m < 5 {
            return Err(Error::config(format!("m = {m} must be at least 5")));
        }
        if m > 24 {
            return Err(Error::config(format!("m = {m} is impractically large")));
        }
        if k == 0 || !k.is_power_of_two() {
            return Err(Error::config(format!("k = {k} must be a power of two")));
        }
        let reduced = 1u32 << (m - 5);
        if !reduced.is_multiple_of(k) {
            return Err(Error::config(format!(
                "reduced first-orthant size 2^(m-5) = {reduced} is not divisible by k = {k}"
            )));
        }
        Ok(ShapingConfig { m, k })
    }

    /// The default family studied here: m = 8 (256 points), k = 4 shells.
    pub fn gss4_default() -> Self {
        ShapingConfig { m: 8, k: 4 }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Full constellation size M = 2^m.
    pub fn size(&self) -> usize {
        1usize << self.m
    }

    /// Reduced first-orthant point count 2^(m−5).
    pub fn reduced_size(&self) -> usize {
        1usize << (self.m - 5)
    }

    /// Free parameter count 3·2^(m−5) + k.
    pub fn param_count(&self) -> usize {
        3 * self.reduced_size() + self.k as usize
    }

    /// Points per shell in the full constellation, M/k.
    pub fn points_per_shell(&self) -> usize {
        self.size() / self.k as usize
    }

    /// Default contiguous-block shell assignment: reduced point `j`
    /// (1-based) sits on shell `⌈j·k/2^(m−5)⌉`.
    pub fn default_shell_assignment(&self) -> Vec<u32> {
        let n = self.reduced_size() as u64;
        (1..=n)
            .map(|j| ((j * self.k as u64).div_ceil(n)) as u32)
            .collect()
    }

    /// Per-parameter boxes: radii in [0, 1], angles in [0, π/2], in the
    /// [`ParamVector`] layout order.
    pub fn param_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.param_count();
        let k = self.k as usize;
        let mut lower = vec![0.0; n];
        let mut upper = vec![1.0; k];
        upper.resize(n, HALF_PI);
        lower.truncate(n);
        (lower, upper)
    }
}

/// The free parameters of a GSS constellation, stored as
/// `[r_1, …, r_k, θ_1, φ_1, ω_1, …, θ_J, φ_J, ω_J]` with `J = 2^(m−5)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    k: usize,
}

impl ParamVector {
    /// Validates length and bounds against `cfg`.
    pub fn from_values(cfg: &ShapingConfig, values: Vec<f64>) -> Result<Self> {
        if values.len() != cfg.param_count() {
            return Err(Error::domain(format!(
                "parameter vector has {} entries, expected {}",
                values.len(),
                cfg.param_count()
            )));
        }
        let k = cfg.k as usize;
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::domain(format!("parameter {i} is not finite")));
            }
            let hi = if i < k { 1.0 } else { HALF_PI };
            if !(0.0..=hi).contains(&v) {
                return Err(Error::domain(format!(
                    "parameter {i} = {v} outside [0, {hi}]"
                )));
            }
        }
        Ok(ParamVector { values, k })
    }

    /// The halfway-between-bounds initialization: radii 0.5, angles π/4.
    pub fn halfway(cfg: &ShapingConfig) -> Self {
        let k = cfg.k as usize;
        let mut values = vec![0.5; k];
        values.resize(cfg.param_count(), HALF_PI / 2.0);
        ParamVector { values, k }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Shell radius `r_i` for 1-based shell index `i`.
    pub fn radius(&self, shell: u32) -> f64 {
        self.values[shell as usize - 1]
    }

    /// Angle triple `(θ_j, φ_j, ω_j)` for 1-based reduced point index `j`.
    pub fn angles(&self, j: usize) -> (f64, f64, f64) {
        let base = self.k + 3 * (j - 1);
        (
            self.values[base],
            self.values[base + 1],
            self.values[base + 2],
        )
    }
}

/// A labeled set of 4D points with prior probabilities and optional per-point
/// shell indices (1-based, present for GSS constructions).
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    pub name: String,
    pub points: Vec<Point4D>,
    pub priors: Vec<f64>,
    pub shell_index: Option<Vec<u32>>,
}

impl Constellation {
    /// Builds a constellation, checking the structural invariants: nonempty
    /// power-of-two size, finite coordinates, nonnegative priors summing to 1
    /// within 1e-12.
    pub fn new(
        name: impl Into<String>,
        points: Vec<Point4D>,
        priors: Vec<f64>,
        shell_index: Option<Vec<u32>>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("constellation has no points"));
        }
        if !points.len().is_power_of_two() {
            return Err(Error::domain(format!(
                "constellation size {} is not a power of two",
                points.len()
            )));
        }
        if priors.len() != points.len() {
            return Err(Error::domain(format!(
                "{} priors for {} points",
                priors.len(),
                points.len()
            )));
        }
        if let Some(shells) = &shell_index {
            if shells.len() != points.len() {
                return Err(Error::domain("shell index length mismatch"));
            }
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::domain("non-finite point coordinate"));
        }
        if priors.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::domain("priors must be nonnegative and finite"));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "priors sum to {total}, expected 1 within 1e-12"
            )));
        }
        Ok(Constellation {
            name: name.into(),
            points,
            priors,
            shell_index,
        })
    }

    /// Number of points M.
    pub fn size(&self) -> usize {
        self.points.len()
    }

    /// Bits per 4D symbol, m = log2(M).
    pub fn bits_per_symbol(&self) -> u32 {
        self.points.len().trailing_zeros()
    }

    /// Prior-weighted mean energy Σ pᵢ‖xᵢ‖².
    pub fn mean_energy(&self) -> f64 {
        self.points
            .iter()
            .zip(&self.priors)
            .map(|(x, p)| p * x.norm_sqr())
            .sum()
    }

    /// Source entropy H(X) = −Σ pᵢ log2 pᵢ in bits (0·log 0 := 0).
    pub fn entropy_bits(&self) -> f64 {
        -self
            .priors
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.log2())
            .sum::<f64>()
    }
}

/// Maps 4D hyperspherical coordinates to Cartesian:
/// `(r cosθ, r sinθ cosφ, r sinθ sinφ cosω, r sinθ sinφ sinω)`.
///
/// With `r ≥ 0` and angles in `[0, π/2]` the result lies in the closed
/// nonnegative orthant and has norm exactly `r` (up to rounding).
pub fn spherical_to_cartesian(r: f64, theta: f64, phi: f64, omega: f64) -> Result<Point4D> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::domain(format!("radius {r} must be finite and ≥ 0")));
    }
    for (name, a) in [("theta", theta), ("phi", phi), ("omega", omega)] {
        if !a.is_finite() || !(0.0..=HALF_PI).contains(&a) {
            return Err(Error::domain(format!("angle {name} = {a} outside [0, π/2]")));
        }
    }
    let st = theta.sin();
    let sp = phi.sin();
    Ok(Point4D::new(
        r * theta.cos(),
        r * st * phi.cos(),
        r * st * sp * omega.cos(),
        r * st * sp * omega.sin(),
    ))
}

/// Builds the reduced first-orthant point set C′₊ from GSS parameters: point
/// `j` has angles `(θ_j, φ_j, ω_j)` and radius `r_{assignment[j]}`.
///
/// The assignment must place exactly `2^(m−5)/k` reduced points on each shell.
pub fn build_first_orthant(
    params: &ParamVector,
    cfg: &ShapingConfig,
    assignment: &[u32],
) -> Result<Vec<Point4D>> {
    if params.len() != cfg.param_count() {
        return Err(Error::domain(format!(
            "parameter vector length {} does not match config ({})",
            params.len(),
            cfg.param_count()
        )));
    }
    let reduced = cfg.reduced_size();
    if assignment.len() != reduced {
        return Err(Error::domain(format!(
            "shell assignment covers {} points, expected {reduced}",
            assignment.len()
        )));
    }
    let per_shell = reduced / cfg.k as usize;
    let mut occupancy = vec![0usize; cfg.k as usize];
    for &s in assignment {
        if s == 0 || s > cfg.k {
            return Err(Error::domain(format!("shell index {s} outside 1..={}", cfg.k)));
        }
        occupancy[s as usize - 1] += 1;
    }
    if occupancy.iter().any(|&c| c != per_shell) {
        return Err(Error::domain(format!(
            "unbalanced shell assignment {occupancy:?}, expected {per_shell} per shell"
        )));
    }
    (1..=reduced)
        .map(|j| {
            let (theta, phi, omega) = params.angles(j);
            spherical_to_cartesian(params.radius(assignment[j - 1]), theta, phi, omega)
        })
        .collect()
}

/// Doubles a first-orthant set by polarization swap: the output is the input
/// block followed by the `(x3, x4, x1, x2)` block. Coincident twins of
/// self-symmetric points are retained.
pub fn expand_xy_symmetry(reduced: &[Point4D]) -> Vec<Point4D> {
    let mut out = Vec::with_capacity(2 * reduced.len());
    out.extend_from_slice(reduced);
    out.extend(reduced.iter().map(Point4D::swap_polarizations));
    out
}

/// All 16 coordinate sign patterns, in expansion order: pattern `s` negates
/// coordinate `i` iff bit `i` of `s` is set (x1 = bit 0 … x4 = bit 3).
pub fn sign_patterns() -> [[f64; 4]; 16] {
    std::array::from_fn(|s| std::array::from_fn(|i| if s >> i & 1 == 1 { -1.0 } else { 1.0 }))
}

/// Expands a nonnegative-orthant set across all 16 sign patterns
/// (sign-pattern-major order) and assigns uniform priors.
pub fn expand_orthants(half: &[Point4D]) -> Result<Constellation> {
    let mut points = Vec::with_capacity(16 * half.len());
    for signs in sign_patterns() {
        points.extend(half.iter().map(|p| {
            Point4D::new(
                signs[0] * p.x1,
                signs[1] * p.x2,
                signs[2] * p.x3,
                signs[3] * p.x4,
            )
        }));
    }
    let m = points.len();
    Constellation::new("orthant-expanded", points, vec![1.0 / m as f64; m], None)
}

/// Rescales a constellation to unit prior-weighted mean energy.
pub fn normalize_energy(mut c: Constellation) -> Result<Constellation> {
    let energy = c.mean_energy();
    if energy <= 0.0 || !energy.is_finite() {
        return Err(Error::degenerate(format!(
            "cannot normalize constellation with mean energy {energy}"
        )));
    }
    let scale = 1.0 / energy.sqrt();
    for p in &mut c.points {
        p.x1 *= scale;
        p.x2 *= scale;
        p.x3 *= scale;
        p.x4 *= scale;
    }
    Ok(c)
}

/// Builds a complete, energy-normalized GSS constellation from parameters:
/// first orthant → polarization-swap expansion → orthant expansion →
/// normalization, with per-point shell indices propagated through.
pub fn build_gss_constellation(
    params: &ParamVector,
    cfg: &ShapingConfig,
    assignment: Option<&[u32]>,
) -> Result<Constellation> {
    let default_assignment;
    let assignment = match assignment {
        Some(a) => a,
        None => {
            default_assignment = cfg.default_shell_assignment();
            &default_assignment
        }
    };
    let reduced = build_first_orthant(params, cfg, assignment)?;
    let half = expand_xy_symmetry(&reduced);
    let mut c = expand_orthants(&half)?;
    // Shell indices follow the deterministic expansion order: polarization
    // swap pairs share the reduced point's shell, and every orthant copy
    // repeats the half-set's indices.
    let half_shells: Vec<u32> = assignment
        .iter()
        .chain(assignment.iter())
        .copied()
        .collect();
    let shells: Vec<u32> = std::iter::repeat_with(|| half_shells.iter().copied())
        .take(16)
        .flatten()
        .collect();
    debug_assert_eq!(shells.len(), c.points.len());
    c.shell_index = Some(shells);
    c.name = format!("4d-gss-{}", cfg.k);
    normalize_energy(c)
}

const QAM16_LEVELS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];

/// Uniform polarization-multiplexed 16QAM: the product set {±1, ±3}^4,
/// energy-normalized (scale 1/√20), uniform priors.
pub fn pm16qam() -> Constellation {
    let mut points = Vec::with_capacity(256);
    for &x1 in &QAM16_LEVELS {
        for &x2 in &QAM16_LEVELS {
            for &x3 in &QAM16_LEVELS {
                for &x4 in &QAM16_LEVELS {
                    points.push(Point4D::new(x1, x2, x3, x4));
                }
            }
        }
    }
    let c = Constellation::new("pm-16qam", points, vec![1.0 / 256.0; 256], None)
        .expect("static PM-16QAM construction is valid");
    normalize_energy(c).expect("PM-16QAM has positive energy")
}

/// The one-parameter per-dimension amplitude distribution used for
/// probabilistic shaping: amplitude 3 with probability `p3`, amplitude 1 with
/// `1 − p3`, signs uniform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PSDistribution {
    pub p3: f64,
}

impl PSDistribution {
    pub fn new(p3: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p3) || !p3.is_finite() {
            return Err(Error::domain(format!("p3 = {p3} outside [0, 1]")));
        }
        Ok(PSDistribution { p3 })
    }
}

/// PM-16QAM geometry with independent per-real-dimension shaped priors
/// `prior(x) = Π (p3 if |coord| = 3 else 1−p3)/2`, re-normalized to unit mean
/// energy under those priors.
pub fn ps_pm16qam_constellation(d: PSDistribution) -> Result<Constellation> {
    let mut c = pm16qam();
    c.name = "ps-pm-16qam".to_string();
    // The geometry is the normalized ±{1,3}/√20 grid; classify amplitudes by
    // magnitude against the midpoint of the two levels.
    let threshold = 2.0 / 20.0f64.sqrt();
    for (point, prior) in c.points.iter_mut().zip(c.priors.iter_mut()) {
        *prior = point
            .coords()
            .iter()
            .map(|&coord| {
                let p_amp = if coord.abs() > threshold { d.p3 } else { 1.0 - d.p3 };
                p_amp / 2.0
            })
            .product();
    }
    let total: f64 = c.priors.iter().sum();
    debug_assert!((total - 1.0).abs() < 1e-12);
    normalize_energy(c)
}

/// Per-check outcome of GSS constraint validation. `shell_occupancy` accepts
/// any norm group whose multiplicity is a positive multiple of M/k, so shells
/// collapsed onto a common radius by the optimizer still validate.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub orthant_closure: bool,
    pub xy_closure: bool,
    pub shell_count: bool,
    pub shell_occupancy: bool,
    pub distinct_norms: Vec<f64>,
    pub norm_multiplicities: Vec<usize>,
    pub duplicate_points: usize,
    pub messages: Vec<String>,
}

impl ValidationReport {
    /// True when all four structural checks pass.
    pub fn pass(&self) -> bool {
        self.orthant_closure && self.xy_closure && self.shell_count && self.shell_occupancy
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mark = |ok: bool| if ok { "pass" } else { "FAIL" };
        writeln!(f, "orthant closure:  {}", mark(self.orthant_closure))?;
        writeln!(f, "x-y closure:      {}", mark(self.xy_closure))?;
        writeln!(
            f,
            "shell count:      {} ({} distinct norms)",
            mark(self.shell_count),
            self.distinct_norms.len()
        )?;
        writeln!(
            f,
            "shell occupancy:  {} (multiplicities {:?})",
            mark(self.shell_occupancy),
            self.norm_multiplicities
        )?;
        if self.duplicate_points > 0 {
            writeln!(f, "note: {} coincident point pairs", self.duplicate_points)?;
        }
        for msg in &self.messages {
            writeln!(f, "note: {msg}")?;
        }
        Ok(())
    }
}

const CLOSURE_TOL: f64 = 1e-12;
const NORM_GROUP_TOL: f64 = 1e-9;

fn is_permutation_image(points: &[Point4D], image: impl Iterator<Item = Point4D>) -> bool {
    let mut used = vec![false; points.len()];
    for q in image {
        let mut found = false;
        for (i, p) in points.iter().enumerate() {
            if !used[i] && p.dist_sqr(&q) <= CLOSURE_TOL * CLOSURE_TOL {
                used[i] = true;
                found = true;
                break;
            }
        }
        if !found {
            return false;
        }
    }
    true
}

/// Checks the three GSS constraints on an arbitrary constellation: orthant
/// closure, X-Y closure, and the uniform k-shell property (≤ k distinct norms
/// at 1e-9 grouping, each carrying a multiple of M/k points). Returns a
/// report; never fails.
pub fn validate_gss(c: &Constellation, cfg: &ShapingConfig) -> ValidationReport {
    let mut messages = Vec::new();

    let orthant_closure = sign_patterns().iter().skip(1).all(|signs| {
        is_permutation_image(
            &c.points,
            c.points.iter().map(|p| {
                Point4D::new(
                    signs[0] * p.x1,
                    signs[1] * p.x2,
                    signs[2] * p.x3,
                    signs[3] * p.x4,
                )
            }),
        )
    });
    let xy_closure = is_permutation_image(
        &c.points,
        c.points.iter().map(Point4D::swap_polarizations),
    );

    let mut norms: Vec<f64> = c.points.iter().map(Point4D::norm).collect();
    norms.sort_by(|a, b| a.partial_cmp(b).expect("finite norms"));
    let mut distinct_norms = Vec::new();
    let mut norm_multiplicities = Vec::new();
    for n in norms {
        match distinct_norms.last() {
            Some(&last) if (n - last) <= NORM_GROUP_TOL => {
                *norm_multiplicities.last_mut().expect("nonempty") += 1;
            }
            _ => {
                distinct_norms.push(n);
                norm_multiplicities.push(1);
            }
        }
    }
    let shell_count = distinct_norms.len() <= cfg.k as usize;
    if !shell_count {
        messages.push(format!(
            "{} distinct norms exceed k = {}",
            distinct_norms.len(),
            cfg.k
        ));
    }
    let per_shell = cfg.points_per_shell();
    let shell_occupancy = c.size() == cfg.size()
        && norm_multiplicities
            .iter()
            .all(|&count| count % per_shell == 0);
    if c.size() != cfg.size() {
        messages.push(format!(
            "constellation has {} points, config expects {}",
            c.size(),
            cfg.size()
        ));
    }

    let mut duplicate_points = 0;
    for (i, p) in c.points.iter().enumerate() {
        for q in &c.points[i + 1..] {
            if p.dist_sqr(q) <= CLOSURE_TOL * CLOSURE_TOL {
                duplicate_points += 1;
            }
        }
    }

    ValidationReport {
        orthant_closure,
        xy_closure,
        shell_count,
        shell_occupancy,
        distinct_norms,
        norm_multiplicities,
        duplicate_points,
        messages,
    }
}

/// Serializes a constellation in the text interchange format: header lines
/// `# name=`, `# m=`, `# normalized=`, then one `x1 x2 x3 x4 prior [shell]`
/// line per point at 17 significant digits (lossless f64 round trip).
pub fn format_constellation(c: &Constellation) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# name={}", c.name);
    let _ = writeln!(out, "# m={}", c.bits_per_symbol());
    let _ = writeln!(out, "# normalized={}", i32::from((c.mean_energy() - 1.0).abs() <= 1e-9));
    for (i, (p, prior)) in c.points.iter().zip(&c.priors).enumerate() {
        let _ = write!(
            out,
            "{:.17e} {:.17e} {:.17e} {:.17e} {:.17e}",
            p.x1, p.x2, p.x3, p.x4, prior
        );
        if let Some(shells) = &c.shell_index {
            let _ = write!(out, " {}", shells[i]);
        }
        let _ = writeln!(out);
    }
    out
}

/// Writes [`format_constellation`] output to `path`.
pub fn save_constellation_file(c: &Constellation, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_constellation(c))?;
    Ok(())
}

/// Parses the text interchange format. Point count must equal 2^m from the
/// header; priors must be nonnegative and sum to 1 within 1e-9 (re-normalized
/// exactly on load); if `normalized=1` the points are energy-normalized.
pub fn parse_constellation(text: &str) -> Result<Constellation> {
    let mut name = String::from("unnamed");
    let mut m: Option<u32> = None;
    let mut normalized = false;
    let mut points = Vec::new();
    let mut priors = Vec::new();
    let mut shells: Vec<u32> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            let header = header.trim();
            if let Some((key, value)) = header.split_once('=') {
                match key.trim() {
                    "name" => name = value.trim().to_string(),
                    "m" => {
                        m = Some(value.trim().parse().map_err(|_| Error::Parse {
                            line: line_no,
                            message: format!("invalid m value '{}'", value.trim()),
                        })?)
                    }
                    "normalized" => {
                        normalized = match value.trim() {
                            "0" => false,
                            "1" => true,
                            other => {
                                return Err(Error::Parse {
                                    line: line_no,
                                    message: format!("normalized flag must be 0 or 1, got '{other}'"),
                                })
                            }
                        }
                    }
                    _ => {} // unknown headers are ignored for forward compatibility
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 && fields.len() != 6 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 5 or 6 fields, got {}", fields.len()),
            });
        }
        let mut vals = [0.0f64; 5];
        for (slot, field) in vals.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid number '{field}'"),
            })?;
        }
        if vals[4] < 0.0 || !vals[4].is_finite() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("prior {} is not a probability", vals[4]),
            });
        }
        points.push(Point4D::new(vals[0], vals[1], vals[2], vals[3]));
        priors.push(vals[4]);
        if fields.len() == 6 {
            shells.push(fields[5].parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid shell index '{}'", fields[5]),
            })?);
        }
    }

    let m = m.ok_or(Error::Parse {
        line: 0,
        message: "missing '# m=' header".to_string(),
    })?;
    let expected = 1usize << m;
    if points.len() != expected {
        return Err(Error::Parse {
            line: 0,
            message: format!("{} points for declared m = {m} (expected {expected})", points.len()),
        });
    }
    if !shells.is_empty() && shells.len() != points.len() {
        return Err(Error::Parse {
            line: 0,
            message: "shell index present on some lines but not all".to_string(),
        });
    }

    let total: f64 = priors.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Parse {
            line: 0,
            message: format!("priors sum to {total}, expected 1 within 1e-9"),
        });
    }
    for p in &mut priors {
        *p /= total;
    }

    let shell_index = if shells.is_empty() { None } else { Some(shells) };
    let c = Constellation::new(name, points, priors, shell_index)?;
    if normalized {
        // Already normalized on disk: verify and keep the stored coordinates
        // untouched so save → load round-trips bit-identically.
        let energy = c.mean_energy();
        if (energy - 1.0).abs() > 1e-9 {
            return Err(Error::Parse {
                line: 0,
                message: format!("normalized=1 but mean energy is {energy}"),
            });
        }
        Ok(c)
    } else {
        normalize_energy(c)
    }
}

/// Loads a constellation from a file in the text interchange format.
pub fn load_constellation_file(path: impl AsRef<Path>) -> Result<Constellation> {
    let text = std::fs::read_to_string(path)?;
    parse_constellation(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {b}, got {a} (tol {tol})");
    }

    fn assert_points_close(a: &Point4D, b: &Point4D, tol: f64) {
        assert!(
            a.dist_sqr(b).sqrt() <= tol,
            "points differ: {a:?} vs {b:?} (tol {tol})"
        );
    }

    // --- spherical_to_cartesian -------------------------------------------

    #[test]
    fn spherical_pole_maps_to_first_axis() {
        let p = spherical_to_cartesian(1.0, 0.0, 0.0, 0.0).unwrap();
        assert_points_close(&p, &Point4D::new(1.0, 0.0, 0.0, 0.0), 1e-15);
    }

    #[test]
    fn spherical_all_right_angles_maps_to_last_axis() {
        let p = spherical_to_cartesian(1.0, HALF_PI, HALF_PI, HALF_PI).unwrap();
        assert_points_close(&p, &Point4D::new(0.0, 0.0, 0.0, 1.0), 1e-12);
    }

    #[test]
    fn spherical_interior_point_matches_products() {
        let a = HALF_PI / 2.0;
        let p = spherical_to_cartesian(0.5, a, a, a).unwrap();
        let (s, c) = (a.sin(), a.cos());
        assert_points_close(
            &p,
            &Point4D::new(0.5 * c, 0.5 * s * c, 0.5 * s * s * c, 0.5 * s * s * s),
            1e-15,
        );
        assert!(p.coords().iter().all(|&x| x > 0.0));
        assert_close(p.norm(), 0.5, 1e-12);
    }

    #[test]
    fn spherical_rejects_out_of_domain() {
        assert!(spherical_to_cartesian(-0.1, 0.0, 0.0, 0.0).is_err());
        assert!(spherical_to_cartesian(1.0, -0.1, 0.0, 0.0).is_err());
        assert!(spherical_to_cartesian(1.0, 0.0, HALF_PI + 0.1, 0.0).is_err());
        assert!(spherical_to_cartesian(1.0, 0.0, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn spherical_preserves_norm_over_random_draws() {
        let mut rng = ChaCha12Rng::seed_from_u64(0x5f3e_1a2b);
        for _ in 0..10_000 {
            let r = rng.gen_range(0.0..=1.0);
            let t = rng.gen_range(0.0..=HALF_PI);
            let f = rng.gen_range(0.0..=HALF_PI);
            let w = rng.gen_range(0.0..=HALF_PI);
            let p = spherical_to_cartesian(r, t, f, w).unwrap();
            assert_close(p.norm(), r, 1e-12);
            assert!(p.coords().iter().all(|&x| x >= 0.0));
        }
    }

    // --- shaping config and parameters ------------------------------------

    #[test]
    fn gss4_has_28_parameters_8_reduced_points_256_total() {
        let cfg = ShapingConfig::gss4_default();
        assert_eq!(cfg.param_count(), 28);
        assert_eq!(cfg.reduced_size(), 8);
        assert_eq!(cfg.size(), 256);
        assert_eq!(cfg.points_per_shell(), 64);
    }

    #[test]
    fn shaping_config_rejects_invalid_combinations() {
        assert!(ShapingConfig::new(4, 1).is_err()); // m < 5
        assert!(ShapingConfig::new(8, 3).is_err()); // k not a power of two
        assert!(ShapingConfig::new(8, 16).is_err()); // 8 reduced points, k = 16
        assert!(ShapingConfig::new(8, 0).is_err());
        assert!(ShapingConfig::new(9, 8).is_ok()); // 16 reduced points, k = 8
    }

    #[test]
    fn default_shell_assignment_is_contiguous_blocks() {
        let cfg = ShapingConfig::gss4_default();
        assert_eq!(cfg.default_shell_assignment(), vec![1, 1, 2, 2, 3, 3, 4, 4]);
        let cfg = ShapingConfig::new(8, 1).unwrap();
        assert_eq!(cfg.default_shell_assignment(), vec![1; 8]);
    }

    #[test]
    fn param_bounds_are_radius_unit_angle_half_pi() {
        let cfg = ShapingConfig::gss4_default();
        let (lo, hi) = cfg.param_bounds();
        assert_eq!(lo, vec![0.0; 28]);
        assert_eq!(&hi[..4], &[1.0; 4]);
        assert_eq!(&hi[4..], &[HALF_PI; 24]);
    }

    #[test]
    fn halfway_init_is_midpoint_of_bounds() {
        let cfg = ShapingConfig::gss4_default();
        let p = ParamVector::halfway(&cfg);
        assert_eq!(p.len(), 28);
        assert_eq!(&p.values()[..4], &[0.5; 4]);
        assert_eq!(&p.values()[4..], &[HALF_PI / 2.0; 24]);
    }

    #[test]
    fn param_vector_validates_length_and_bounds() {
        let cfg = ShapingConfig::gss4_default();
        assert!(ParamVector::from_values(&cfg, vec![0.5; 27]).is_err());
        let mut bad = vec![0.5; 28];
        bad[0] = 1.5; // radius above 1
        assert!(ParamVector::from_values(&cfg, bad).is_err());
        let mut bad = vec![0.5; 28];
        bad[10] = -0.2; // negative angle
        assert!(ParamVector::from_values(&cfg, bad).is_err());
        assert!(ParamVector::from_values(&cfg, vec![0.5; 28]).is_ok());
    }

    // --- first orthant and expansions --------------------------------------

    #[test]
    fn first_orthant_has_two_points_per_shell_with_assigned_radii() {
        let cfg = ShapingConfig::gss4_default();
        let mut values = vec![0.2, 0.4, 0.6, 0.8];
        values.extend(vec![HALF_PI / 3.0; 24]);
        let params = ParamVector::from_values(&cfg, values).unwrap();
        let assignment = cfg.default_shell_assignment();
        let pts = build_first_orthant(&params, &cfg, &assignment).unwrap();
        assert_eq!(pts.len(), 8);
        let expected_norms = [0.2, 0.2, 0.4, 0.4, 0.6, 0.6, 0.8, 0.8];
        for (p, &r) in pts.iter().zip(&expected_norms) {
            assert_close(p.norm(), r, 1e-12);
            assert!(p.coords().iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn first_orthant_midpoint_init_collapses_to_half_norms() {
        let cfg = ShapingConfig::gss4_default();
        let params = ParamVector::halfway(&cfg);
        let pts = build_first_orthant(&params, &cfg, &cfg.default_shell_assignment()).unwrap();
        for p in &pts {
            assert_close(p.norm(), 0.5, 1e-12);
            assert_points_close(p, &pts[0], 1e-15); // identical angles → identical points
        }
    }

    #[test]
    fn first_orthant_rejects_unbalanced_assignment() {
        let cfg = ShapingConfig::gss4_default();
        let params = ParamVector::halfway(&cfg);
        let err = build_first_orthant(&params, &cfg, &[1, 1, 1, 2, 3, 3, 4, 4]);
        assert!(err.is_err());
        let err = build_first_orthant(&params, &cfg, &[1, 1, 2, 2, 3, 3, 4, 5]);
        assert!(err.is_err());
    }

    #[test]
    fn xy_expansion_appends_swapped_block() {
        let out = expand_xy_symmetry(&[Point4D::new(1.0, 0.0, 0.0, 0.0)]);
        assert_eq!(out.len(), 2);
        assert_points_close(&out[0], &Point4D::new(1.0, 0.0, 0.0, 0.0), 0.0);
        assert_points_close(&out[1], &Point4D::new(0.0, 0.0, 1.0, 0.0), 0.0);
    }

    #[test]
    fn xy_expansion_retains_self_symmetric_duplicates() {
        let p = Point4D::new(0.3, 0.7, 0.3, 0.7);
        let out = expand_xy_symmetry(&[p]);
        assert_eq!(out.len(), 2);
        assert_points_close(&out[0], &p, 0.0);
        assert_points_close(&out[1], &p, 0.0);
    }

    #[test]
    fn xy_expansion_doubles_the_reduced_set() {
        let cfg = ShapingConfig::gss4_default();
        let params = ParamVector::halfway(&cfg);
        let reduced = build_first_orthant(&params, &cfg, &cfg.default_shell_assignment()).unwrap();
        assert_eq!(expand_xy_symmetry(&reduced).len(), 16);
    }

    #[test]
    fn orthant_expansion_generates_all_sign_combinations() {
        let c = expand_orthants(&[Point4D::new(1.0, 1.0, 1.0, 1.0)]).unwrap();
        assert_eq!(c.size(), 16);
        for signs in sign_patterns() {
            let target = Point4D::new(signs[0], signs[1], signs[2], signs[3]);
            assert!(
                c.points.iter().any(|p| p.dist_sqr(&target) == 0.0),
                "missing sign pattern {signs:?}"
            );
        }
        for &p in &c.priors {
            assert_close(p, 1.0 / 16.0, 1e-15);
        }
    }

    #[test]
    fn orthant_expansion_of_boundary_point_has_two_distinct_images() {
        let c = expand_orthants(&[Point4D::new(1.0, 0.0, 0.0, 0.0)]).unwrap();
        assert_eq!(c.size(), 16);
        let distinct = c
            .points
            .iter()
            .filter(|p| p.x1 > 0.0)
            .count();
        assert_eq!(distinct, 8); // half the copies are (+1,0,0,0), half (−1,0,0,0)
        assert!(c.points.iter().all(|p| p.x1.abs() == 1.0));
    }

    #[test]
    fn full_pipeline_produces_256_points() {
        let cfg = ShapingConfig::gss4_default();
        let params = ParamVector::halfway(&cfg);
        let c = build_gss_constellation(&params, &cfg, None).unwrap();
        assert_eq!(c.size(), 256);
        assert_eq!(c.bits_per_symbol(), 8);
        assert_close(c.mean_energy(), 1.0, 1e-9);
        let shells = c.shell_index.as_ref().unwrap();
        for shell in 1..=4u32 {
            assert_eq!(shells.iter().filter(|&&s| s == shell).count(), 64);
        }
    }

    // --- normalization ------------------------------------------------------

    #[test]
    fn normalize_pm16qam_raw_grid_scales_by_sqrt20() {
        let mut points = Vec::new();
        for &x1 in &QAM16_LEVELS {
            for &x2 in &QAM16_LEVELS {
                for &x3 in &QAM16_LEVELS {
                    for &x4 in &QAM16_LEVELS {
                        points.push(Point4D::new(x1, x2, x3, x4));
                    }
                }
            }
        }
        let raw = Constellation::new("raw", points, vec![1.0 / 256.0; 256], None).unwrap();
        assert_close(raw.mean_energy(), 20.0, 1e-12);
        let c = normalize_energy(raw).unwrap();
        assert_close(c.mean_energy(), 1.0, 1e-12);
        let scale = 1.0 / 20.0f64.sqrt();
        assert_close(c.points[0].x1.abs(), 3.0 * scale, 1e-15);
    }

    #[test]
    fn normalize_is_idempotent() {
        let c = pm16qam();
        let again = normalize_energy(c.clone()).unwrap();
        for (a, b) in c.points.iter().zip(&again.points) {
            assert_points_close(a, b, 1e-12);
        }
    }

    #[test]
    fn normalize_rejects_zero_energy() {
        let c = Constellation::new(
            "zero",
            vec![Point4D::new(0.0, 0.0, 0.0, 0.0); 2],
            vec![0.5; 2],
            None,
        )
        .unwrap();
        assert!(matches!(normalize_energy(c), Err(Error::Degenerate(_))));
    }

    #[test]
    fn single_shell_constellation_normalizes_to_unit_norms() {
        let cfg = ShapingConfig::new(8, 1).unwrap();
        let mut values = vec![0.5];
        // Distinct angles so points differ but all share radius 0.5.
        values.extend((0..24).map(|i| HALF_PI * (i as f64 + 1.0) / 26.0));
        let params = ParamVector::from_values(&cfg, values).unwrap();
        let c = build_gss_constellation(&params, &cfg, None).unwrap();
        for p in &c.points {
            assert_close(p.norm(), 1.0, 1e-9);
        }
    }

    // --- baselines ----------------------------------------------------------

    #[test]
    fn pm16qam_has_256_points_unit_energy_uniform_priors() {
        let c = pm16qam();
        assert_eq!(c.size(), 256);
        assert_close(c.mean_energy(), 1.0, 1e-12);
        for &p in &c.priors {
            assert_close(p, 1.0 / 256.0, 1e-15);
        }
    }

    #[test]
    fn pm16qam_is_closed_under_sign_flips_and_swap() {
        let c = pm16qam();
        let report = validate_gss(&c, &ShapingConfig::gss4_default());
        assert!(report.orthant_closure);
        assert!(report.xy_closure);
    }

    #[test]
    fn pm16qam_has_five_shells_proportional_to_sqrt_4_12_20_28_36() {
        let c = pm16qam();
        let report = validate_gss(&c, &ShapingConfig::gss4_default());
        assert_eq!(report.distinct_norms.len(), 5);
        let scale = 1.0 / 20.0f64.sqrt();
        for (norm, expect_sq) in report.distinct_norms.iter().zip([4.0f64, 12.0, 20.0, 28.0, 36.0]) {
            assert_close(*norm, expect_sq.sqrt() * scale, 1e-12);
        }
        assert!(!report.shell_count); // 5 > k = 4
        assert_eq!(report.norm_multiplicities, vec![16, 64, 96, 64, 16]);
    }

    #[test]
    fn ps_at_half_reduces_to_uniform_pm16qam() {
        let ps = ps_pm16qam_constellation(PSDistribution::new(0.5).unwrap()).unwrap();
        let pm = pm16qam();
        for (a, b) in ps.points.iter().zip(&pm.points) {
            assert_points_close(a, b, 1e-12);
        }
        for &p in &ps.priors {
            assert_close(p, 1.0 / 256.0, 1e-15);
        }
    }

    #[test]
    fn ps_at_zero_concentrates_on_inner_points() {
        let ps = ps_pm16qam_constellation(PSDistribution::new(0.0).unwrap()).unwrap();
        let carrying: Vec<_> = ps
            .priors
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .collect();
        assert_eq!(carrying.len(), 16);
        for (i, &p) in carrying {
            assert_close(p, 1.0 / 16.0, 1e-15);
            // Unit-energy normalization puts the surviving ±1 grid at coords ±1/2.
            for coord in ps.points[i].coords() {
                assert_close(coord.abs(), 0.5, 1e-12);
            }
        }
        assert_close(ps.mean_energy(), 1.0, 1e-12);
    }

    #[test]
    fn ps_quarter_prior_of_all_outer_point_is_quarter_pow4_over_16() {
        let ps = ps_pm16qam_constellation(PSDistribution::new(0.25).unwrap()).unwrap();
        let outer = ps
            .points
            .iter()
            .position(|p| p.coords().iter().all(|&c| c.abs() > 0.3))
            .unwrap();
        assert_close(ps.priors[outer], 0.25f64.powi(4) / 16.0, 1e-15);
    }

    #[test]
    fn ps_rejects_out_of_range_probability() {
        assert!(PSDistribution::new(-0.1).is_err());
        assert!(PSDistribution::new(1.1).is_err());
        assert!(PSDistribution::new(f64::NAN).is_err());
    }

    // --- validation ----------------------------------------------------------

    #[test]
    fn constructed_gss_validates_with_64_points_per_shell() {
        let cfg = ShapingConfig::gss4_default();
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let mut values = vec![0.3, 0.55, 0.75, 0.95];
        values.extend((0..24).map(|_| rng.gen_range(0.05..HALF_PI - 0.05)));
        let params = ParamVector::from_values(&cfg, values).unwrap();
        let c = build_gss_constellation(&params, &cfg, None).unwrap();
        let report = validate_gss(&c, &cfg);
        assert!(report.pass(), "{report}");
        assert_eq!(report.distinct_norms.len(), 4);
        assert_eq!(report.norm_multiplicities, vec![64; 4]);
    }

    #[test]
    fn collapsed_shells_still_validate() {
        let cfg = ShapingConfig::gss4_default();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        // Two shells share radius 0.5: 128 points on that norm is a multiple of 64.
        let mut values = vec![0.5, 0.5, 0.8, 0.9];
        values.extend((0..24).map(|_| rng.gen_range(0.05..HALF_PI - 0.05)));
        let params = ParamVector::from_values(&cfg, values).unwrap();
        let c = build_gss_constellation(&params, &cfg, None).unwrap();
        let report = validate_gss(&c, &cfg);
        assert!(report.pass(), "{report}");
        assert_eq!(report.distinct_norms.len(), 3);
    }

    #[test]
    fn symmetry_closure_holds_for_random_parameters() {
        let cfg = ShapingConfig::gss4_default();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..5 {
            let mut values: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..1.0)).collect();
            values.extend((0..24).map(|_| rng.gen_range(0.0..=HALF_PI)));
            let params = ParamVector::from_values(&cfg, values).unwrap();
            let c = build_gss_constellation(&params, &cfg, None).unwrap();
            let report = validate_gss(&c, &cfg);
            assert!(report.orthant_closure && report.xy_closure, "{report}");
        }
    }

    // --- serialization --------------------------------------------------------

    #[test]
    fn pm16qam_round_trips_bit_identically() {
        let c = pm16qam();
        let text = format_constellation(&c);
        let back = parse_constellation(&text).unwrap();
        assert_eq!(back.name, c.name);
        assert_eq!(back.size(), c.size());
        for (a, b) in back.points.iter().zip(&c.points) {
            assert_eq!(a.x1.to_bits(), b.x1.to_bits());
            assert_eq!(a.x2.to_bits(), b.x2.to_bits());
            assert_eq!(a.x3.to_bits(), b.x3.to_bits());
            assert_eq!(a.x4.to_bits(), b.x4.to_bits());
        }
        for (a, b) in back.priors.iter().zip(&c.priors) {
            assert_close(*a, *b, 1e-15);
        }
    }

    #[test]
    fn gss_round_trips_with_shell_indices() {
        let cfg = ShapingConfig::gss4_default();
        let params = ParamVector::halfway(&cfg);
        let c = build_gss_constellation(&params, &cfg, None).unwrap();
        let back = parse_constellation(&format_constellation(&c)).unwrap();
        assert_eq!(back.shell_index, c.shell_index);
        for (a, b) in back.points.iter().zip(&c.points) {
            assert_eq!(a.x1.to_bits(), b.x1.to_bits());
        }
    }

    #[test]
    fn parse_rejects_count_mismatch() {
        let c = pm16qam();
        let mut text = format_constellation(&c);
        text.truncate(text.trim_end().rfind('\n').unwrap()); // drop final point: 255 left
        let err = parse_constellation(&text).unwrap_err();
        assert!(err.to_string().contains("255"), "unexpected error: {err}");
    }

    #[test]
    fn parse_reports_line_number_for_malformed_line() {
        let text = "# name=x\n# m=5\n# normalized=0\nnot numbers at all\n";
        match parse_constellation(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_negative_prior() {
        let mut text = String::from("# name=x\n# m=5\n# normalized=0\n");
        for i in 0..32 {
            let prior = if i == 0 { -1.0 / 32.0 } else { 1.0 / 32.0 };
            text.push_str(&format!("1.0 0.0 0.0 0.0 {prior}\n"));
        }
        match parse_constellation(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_normalizes_raw_files_and_verifies_normalized_ones() {
        // Raw coordinates (normalized=0) are energy-normalized on entry.
        let mut raw = String::from("# name=x\n# m=5\n# normalized=0\n");
        for _ in 0..32 {
            raw.push_str("2.0 0.0 0.0 0.0 0.03125\n");
        }
        let c = parse_constellation(&raw).unwrap();
        assert_close(c.mean_energy(), 1.0, 1e-12);

        // A normalized=1 claim over non-normalized data is rejected.
        let lying = raw.replace("# normalized=0", "# normalized=1");
        let err = parse_constellation(&lying).unwrap_err();
        assert!(err.to_string().contains("mean energy"), "unexpected: {err}");
    }

    #[test]
    fn entropy_of_uniform_256_is_8_bits() {
        assert_close(pm16qam().entropy_bits(), 8.0, 1e-12);
    }
}
