//! Initialization variances for ReLU convolutions and Monte Carlo checks of
//! the signal gain they produce in the forward and backward pass.
//!
//! A k x k convolution from `c_in` to `c_out` channels with weight variance
//! `v`, fed by `ReLU(z)` with `z ~ N(0, 1)`, has forward gain
//! `E[y^2] / E[z^2] = k^2 c_in v / 2` and backward gain `k^2 c_out v / 2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::par::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    KaimingFanIn,
    KaimingFanOut,
    Xavier,
    Geometric,
}

impl InitScheme {
    pub const ALL: [InitScheme; 4] =
        [InitScheme::KaimingFanIn, InitScheme::KaimingFanOut, InitScheme::Xavier, InitScheme::Geometric];

    pub fn name(self) -> &'static str {
        match self {
            InitScheme::KaimingFanIn => "kaiming_fan_in",
            InitScheme::KaimingFanOut => "kaiming_fan_out",
            InitScheme::Xavier => "xavier",
            InitScheme::Geometric => "geometric",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// Weight variance prescribed by `scheme`.
pub fn variance(scheme: InitScheme, k: u64, c_in: u64, c_out: u64) -> f64 {
    let k2 = (k * k) as f64;
    let (ci, co) = (c_in as f64, c_out as f64);
    let fan = match scheme {
        InitScheme::KaimingFanIn => ci,
        InitScheme::KaimingFanOut => co,
        InitScheme::Xavier => (ci + co) / 2.0,
        InitScheme::Geometric => (ci * co).sqrt(),
    };
    2.0 / (k2 * fan)
}

/// Closed-form (forward, backward) gains.
pub fn analytic_gains(scheme: InitScheme, k: u64, c_in: u64, c_out: u64) -> (f64, f64) {
    let v = variance(scheme, k, c_in, c_out);
    let k2 = (k * k) as f64;
    (k2 * c_in as f64 * v / 2.0, k2 * c_out as f64 * v / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainEstimate {
    pub forward: f64,
    pub backward: f64,
}

/// Per-trial sums: (sum z^2, sum y^2, sum g^2, sum gz^2).
fn trial(scheme: InitScheme, k: usize, c_in: usize, c_out: usize, s: usize, rng: &mut ChaCha8Rng) -> [f64; 4] {
    let std = variance(scheme, k as u64, c_in as u64, c_out as u64).sqrt();
    let normal = Normal::new(0.0, std).expect("finite std");
    let w: Vec<f64> = (0..c_out * c_in * k * k).map(|_| normal.sample(rng)).collect();
    let z: Vec<f64> = (0..c_in * s * s).map(|_| rng.sample(StandardNormal)).collect();
    let g: Vec<f64> = (0..c_out * s * s).map(|_| rng.sample(StandardNormal)).collect();
    let x: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
    let half = k / 2;
    // circular padding keeps every output position statistically identical
    let tap = |p: usize, d: usize| (p + d + s * k - half) % s;
    let w_at = |o: usize, i: usize, dy: usize, dx: usize| w[((o * c_in + i) * k + dy) * k + dx];

    let mut y2 = 0.0;
    for o in 0..c_out {
        for py in 0..s {
            for px in 0..s {
                let mut acc = 0.0;
                for i in 0..c_in {
                    for dy in 0..k {
                        for dx in 0..k {
                            acc += w_at(o, i, dy, dx) * x[(i * s + tap(py, dy)) * s + tap(px, dx)];
                        }
                    }
                }
                y2 += acc * acc;
            }
        }
    }

    // transposed convolution scatters each output gradient back to its taps
    let mut gx = vec![0.0; c_in * s * s];
    for o in 0..c_out {
        for py in 0..s {
            for px in 0..s {
                let go = g[(o * s + py) * s + px];
                for i in 0..c_in {
                    for dy in 0..k {
                        for dx in 0..k {
                            gx[(i * s + tap(py, dy)) * s + tap(px, dx)] += w_at(o, i, dy, dx) * go;
                        }
                    }
                }
            }
        }
    }
    let gz2: f64 = gx.iter().zip(&z).filter(|(_, zv)| **zv > 0.0).map(|(v, _)| v * v).sum();
    [z.iter().map(|v| v * v).sum(), y2, g.iter().map(|v| v * v).sum(), gz2]
}

/// Monte Carlo estimate of the forward and backward gains over `trials`
/// independent weight draws. Trial `t` uses stream `t` of a generator seeded
/// with `seed`, so the result does not depend on `exec`.
#[allow(clippy::too_many_arguments)]
pub fn gain_mc(
    scheme: InitScheme,
    k: u64,
    c_in: u64,
    c_out: u64,
    spatial: u64,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> GainEstimate {
    assert!(trials >= 1 && k >= 1 && c_in >= 1 && c_out >= 1 && spatial >= 1);
    let sums = exec.map_range(trials, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        trial(scheme, k as usize, c_in as usize, c_out as usize, spatial as usize, &mut rng)
    });
    let total = sums.iter().fold([0.0; 4], |mut acc, s| {
        for (a, v) in acc.iter_mut().zip(s) {
            *a += v;
        }
        acc
    });
    let (n_in, n_out) = ((c_in * spatial * spatial) as f64, (c_out * spatial * spatial) as f64);
    GainEstimate {
        forward: (total[1] / n_out) / (total[0] / n_in),
        backward: (total[3] / n_in) / (total[2] / n_out),
    }
}

/// One row of the initialization comparison report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitRow {
    pub scheme: InitScheme,
    pub k: u64,
    pub c_in: u64,
    pub c_out: u64,
    pub variance: f64,
    pub analytic_forward: f64,
    pub analytic_backward: f64,
    pub forward_gain: f64,
    pub backward_gain: f64,
}

pub const REPORT_HEADER: &str =
    "scheme,k,c_in,c_out,variance,analytic_forward,analytic_backward,forward_gain,backward_gain";

impl InitRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.9},{:.6},{:.6},{:.6},{:.6}",
            self.scheme.name(),
            self.k,
            self.c_in,
            self.c_out,
            self.variance,
            self.analytic_forward,
            self.analytic_backward,
            self.forward_gain,
            self.backward_gain
        )
    }
}

/// Report rows for every scheme and `(k, c_in, c_out)` shape.
pub fn report(
    schemes: &[InitScheme],
    shapes: &[(u64, u64, u64)],
    spatial: u64,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Vec<InitRow> {
    let mut rows = Vec::new();
    for &scheme in schemes {
        for &(k, c_in, c_out) in shapes {
            let (af, ab) = analytic_gains(scheme, k, c_in, c_out);
            let est = gain_mc(scheme, k, c_in, c_out, spatial.max(k), trials, seed, exec);
            rows.push(InitRow {
                scheme,
                k,
                c_in,
                c_out,
                variance: variance(scheme, k, c_in, c_out),
                analytic_forward: af,
                analytic_backward: ab,
                forward_gain: est.forward,
                backward_gain: est.backward,
            });
        }
    }
    rows
}
