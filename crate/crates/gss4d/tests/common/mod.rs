//! Shared helpers for the integration and acceptance suites: an
//! independent Gauss-Hermite reference for the AWGN mutual information of
//! PM-16QAM, and symbol-domain AWGN generation with seeded draws.

// The quadrature tables below are frozen verbatim from the reference
// computation; their trailing digits stay even where f64 cannot hold them.
#![allow(clippy::excessive_precision)]

use gss4d::constellation::{Constellation, Point4D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// 32-point Gauss-Hermite abscissae (weight e^{-x²}), frozen from an
/// independent quadrature computation.
const GH_NODES: [f64; 32] = [
    -7.12581390983072804e+00,
    -6.40949814926966077e+00,
    -5.81222594951591365e+00,
    -5.27555098651588050e+00,
    -4.77716450350259603e+00,
    -4.30554795335119866e+00,
    -3.85375548547144486e+00,
    -3.41716749281857091e+00,
    -2.99249082500237407e+00,
    -2.57724953773231746e+00,
    -2.16949918360611216e+00,
    -1.76765410946320145e+00,
    -1.37037641095287177e+00,
    -9.76500463589682788e-01,
    -5.84978765435932413e-01,
    -1.94840741569399345e-01,
    1.94840741569399345e-01,
    5.84978765435932413e-01,
    9.76500463589682788e-01,
    1.37037641095287177e+00,
    1.76765410946320145e+00,
    2.16949918360611216e+00,
    2.57724953773231746e+00,
    2.99249082500237407e+00,
    3.41716749281857091e+00,
    3.85375548547144486e+00,
    4.30554795335119866e+00,
    4.77716450350259603e+00,
    5.27555098651588050e+00,
    5.81222594951591365e+00,
    6.40949814926966077e+00,
    7.12581390983072804e+00,
];
const GH_WEIGHTS: [f64; 32] = [
    7.31067642738409573e-23,
    9.23173653651825780e-19,
    1.19734401709285026e-15,
    4.21501021132641555e-13,
    5.93329146339667624e-11,
    4.09883216477087927e-09,
    1.57416779254558817e-07,
    3.65058512956237819e-06,
    5.41658406181999070e-05,
    5.36268365527972049e-04,
    3.65489032665442621e-03,
    1.75534288315734380e-02,
    6.04581309559126881e-02,
    1.51269734076642320e-01,
    2.77458142302529964e-01,
    3.75238352592802471e-01,
    3.75238352592802471e-01,
    2.77458142302529964e-01,
    1.51269734076642320e-01,
    6.04581309559126881e-02,
    1.75534288315734380e-02,
    3.65489032665442621e-03,
    5.36268365527972049e-04,
    5.41658406181999070e-05,
    3.65058512956237819e-06,
    1.57416779254558817e-07,
    4.09883216477087927e-09,
    5.93329146339667624e-11,
    4.21501021132641555e-13,
    1.19734401709285026e-15,
    9.23173653651825780e-19,
    7.31067642738409573e-23,
];

/// MI of unit-energy Gray 16QAM (one polarization) over AWGN at per-2D SNR
/// `snr_db`, by 32×32 tensor Gauss-Hermite quadrature, in bits per 2D.
/// The 4D (PM) figure is twice this.
pub fn gh_mi_16qam_2d(snr_db: f64) -> f64 {
    let levels = [-3.0, -1.0, 1.0, 3.0].map(|v| v / 10f64.sqrt());
    let mut re = Vec::with_capacity(16);
    let mut im = Vec::with_capacity(16);
    for &a in &levels {
        for &b in &levels {
            re.push(a);
            im.push(b);
        }
    }
    let snr = 10f64.powf(snr_db / 10.0);
    let sigma2 = 1.0 / (2.0 * snr); // per real dimension
    let sigma = sigma2.sqrt();

    let mut acc = 0.0;
    for t in 0..16 {
        for (&ui, &wi) in GH_NODES.iter().zip(&GH_WEIGHTS) {
            let nr = 2f64.sqrt() * sigma * ui;
            for (&uj, &wj) in GH_NODES.iter().zip(&GH_WEIGHTS) {
                let ni = 2f64.sqrt() * sigma * uj;
                let n2 = nr * nr + ni * ni;
                let mut max_e = f64::NEG_INFINITY;
                let mut exps = [0.0f64; 16];
                for j in 0..16 {
                    let dr = re[t] + nr - re[j];
                    let di = im[t] + ni - im[j];
                    let e = (n2 - dr * dr - di * di) / (2.0 * sigma2);
                    exps[j] = e;
                    if e > max_e {
                        max_e = e;
                    }
                }
                let lse = max_e + exps.iter().map(|e| (e - max_e).exp()).sum::<f64>().ln();
                acc += wi * wj * lse / std::f64::consts::LN_2;
            }
        }
    }
    4.0 - acc / (16.0 * std::f64::consts::PI)
}

/// Draws `n` symbols from `c` by its priors and adds isotropic 4D Gaussian
/// noise at per-2D SNR `snr_db` relative to the constellation's mean
/// energy. Returns (indices, received points).
pub fn awgn_symbols(
    c: &Constellation,
    n: usize,
    snr_db: f64,
    seed: u64,
) -> (Vec<usize>, Vec<Point4D>) {
    let indices = gss4d::txdsp::draw_symbols(c, n, seed);
    let snr = 10f64.powf(snr_db / 10.0);
    let es_2d = c.mean_energy() / 2.0;
    let sigma = (es_2d / (2.0 * snr)).sqrt(); // per real dimension
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut gauss = move || -> f64 {
        loop {
            let u: f64 = rng.gen();
            if u > 0.0 {
                let v: f64 = rng.gen();
                return (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos();
            }
        }
    };
    let y = indices
        .iter()
        .map(|&i| {
            let p = c.points[i];
            Point4D::new(
                p.x1 + sigma * gauss(),
                p.x2 + sigma * gauss(),
                p.x3 + sigma * gauss(),
                p.x4 + sigma * gauss(),
            )
        })
        .collect();
    (indices, y)
}
