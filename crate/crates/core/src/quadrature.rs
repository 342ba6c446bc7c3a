//! Expectations over unit-variance complex Gaussian noise.
//!
//! For a constellation `X` and effective SNR `s` the receiver sees
//! `Y = √s·X + Z` with `Z ~ CN(0, 1)`. Writing `d_k = √s(X_n − X_k)`, the
//! log-likelihood ratios against the transmitted point are
//! `−(|d_k|² + 2·Re(d_k* Z))`, so
//!
//! ```text
//! I(s)    = ln M − (1/M) Σ_n E ln Σ_k exp(−(|d_k|² + 2·Re(d_k* Z)))
//! mmse(s) = (1/M) Σ_n E |Σ_k (X_n − X_k) w_k(Z)|²
//! ```
//!
//! with `w_k` the posterior softmax weights. Both are evaluated together.
//! Square QAM separates into two identical real PAM problems with noise
//! `N(0, ½)`, which is what the default adaptive rule integrates.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::{GaussHermite, GaussLegendre};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{Error, Result};

/// Half-width of the truncated noise axis. The Gaussian tail mass beyond
/// it is below 1e-36.
const AXIS_LIMIT: f64 = 9.0;
const MAX_DEPTH: u32 = 48;
const MAX_PANELS: usize = 200_000;

/// How `E_Z{·}` is computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case", deny_unknown_fields)]
pub enum QuadratureSpec {
    /// Composite Gauss–Legendre with 8/16-node error control, panels split at
    /// the decision boundaries of the transmitted point.
    Adaptive {
        #[serde(default = "default_tol")]
        tol: f64,
    },
    /// Tensor Gauss–Hermite with `nodes` points per real dimension.
    GaussHermite {
        #[serde(default = "default_nodes")]
        nodes: usize,
    },
    /// Plain Monte Carlo with common random numbers across SNRs.
    MonteCarlo {
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn default_tol() -> f64 {
    1e-13
}
fn default_nodes() -> usize {
    32
}
fn default_samples() -> usize {
    100_000
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec::Adaptive { tol: default_tol() }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            QuadratureSpec::Adaptive { tol } if !(tol > 0.0 && tol <= 1e-3) => Err(
                Error::InvalidParameter(format!("adaptive tolerance {tol} outside (0, 1e-3]")),
            ),
            QuadratureSpec::GaussHermite { nodes } if nodes < 8 => Err(Error::InvalidParameter(
                format!("{nodes} Gauss-Hermite nodes < 8"),
            )),
            QuadratureSpec::MonteCarlo { samples, .. } if samples < 10_000 => Err(
                Error::InvalidParameter(format!("{samples} Monte Carlo samples < 10^4")),
            ),
            _ => Ok(()),
        }
    }
}

/// Mutual information (nats) and MMSE at one SNR, with error estimates.
///
/// For Monte Carlo the errors are standard errors; for the adaptive rule they
/// are the summed panel error estimates; Gauss–Hermite reports zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mi_nats: f64,
    pub mmse: f64,
    pub mi_err: f64,
    pub mmse_err: f64,
}

/// Evaluates mutual information and MMSE of `c` at effective SNR `snr`.
pub fn moments(c: &Constellation, snr: f64, spec: &QuadratureSpec) -> Result<Moments> {
    if !(snr >= 0.0) || !snr.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "snr {snr} must be finite and >= 0"
        )));
    }
    spec.validate()?;
    if snr == 0.0 {
        let m = c.order() as f64;
        let mean: Complex64 = c.points().iter().sum::<Complex64>() / m;
        let var = c
            .points()
            .iter()
            .map(|x| (x - mean).norm_sqr())
            .sum::<f64>()
            / m;
        return Ok(Moments {
            mi_nats: 0.0,
            mmse: var,
            mi_err: 0.0,
            mmse_err: 0.0,
        });
    }
    let root = snr.sqrt();
    let out = match (c.pam_levels(), spec) {
        (Some(levels), QuadratureSpec::Adaptive { tol }) => axis_adaptive(levels, root, *tol)?,
        (Some(levels), QuadratureSpec::GaussHermite { nodes }) => {
            axis_hermite(levels, root, *nodes)
        }
        (Some(levels), QuadratureSpec::MonteCarlo { samples, seed }) => {
            axis_monte_carlo(levels, root, *samples, *seed)
        }
        (None, QuadratureSpec::Adaptive { tol }) => plane_adaptive(c.points(), root, *tol)?,
        (None, QuadratureSpec::GaussHermite { nodes }) => plane_hermite(c.points(), root, *nodes),
        (None, QuadratureSpec::MonteCarlo { samples, seed }) => {
            plane_monte_carlo(c.points(), root, *samples, *seed)
        }
    };
    if !(out.mi_nats.is_finite() && out.mmse.is_finite()) {
        return Err(Error::QuadratureFailure(format!(
            "non-finite result at snr {snr}"
        )));
    }
    Ok(Moments {
        mi_nats: out.mi_nats.clamp(0.0, (c.order() as f64).ln()),
        mmse: out.mmse.clamp(0.0, 1.0),
        ..out
    })
}

/// `[ln Σ_k e^{e_k}, (Σ_k (a_n − a_k) w_k)²]` on one real axis.
fn axis_point(levels: &[f64], n: usize, root: f64, z: f64) -> [f64; 2] {
    let an = levels[n];
    let mut top = f64::NEG_INFINITY;
    for &ak in levels {
        let d = root * (an - ak);
        top = top.max(-(d * d + 2.0 * d * z));
    }
    let (mut sum, mut shift) = (0.0, 0.0);
    for &ak in levels {
        let d = root * (an - ak);
        let w = (-(d * d + 2.0 * d * z) - top).exp();
        sum += w;
        shift += (an - ak) * w;
    }
    let e = shift / sum;
    [top + sum.ln(), e * e]
}

fn plane_point(points: &[Complex64], n: usize, root: f64, z: Complex64) -> [f64; 2] {
    let xn = points[n];
    let expo = |xk: &Complex64| {
        let d = root * (xn - xk);
        -(d.norm_sqr() + 2.0 * (d.conj() * z).re)
    };
    let top = points.iter().map(expo).fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    let mut shift = Complex64::new(0.0, 0.0);
    for xk in points {
        let w = (expo(xk) - top).exp();
        sum += w;
        shift += (xn - xk) * w;
    }
    [top + sum.ln(), (shift / sum).norm_sqr()]
}

fn finish_axis(levels: &[f64], lse: f64, err: f64, lse_e: f64, err_e: f64) -> Moments {
    let m1 = levels.len() as f64;
    Moments {
        mi_nats: 2.0 * (m1.ln() - lse / m1),
        mmse: 2.0 * err / m1,
        mi_err: 2.0 * lse_e / m1,
        mmse_err: 2.0 * err_e / m1,
    }
}

fn axis_adaptive(levels: &[f64], root: f64, tol: f64) -> Result<Moments> {
    let mut sorted = levels.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut acc = [0.0; 2];
    let mut err = [0.0; 2];
    for n in 0..levels.len() {
        let an = levels[n];
        let breaks: Vec<f64> = sorted
            .windows(2)
            .map(|w| root * (0.5 * (w[0] + w[1]) - an))
            .collect();
        let (v, e) = integrate_weighted(|z| axis_point(levels, n, root, z), &breaks, tol)?;
        for c in 0..2 {
            acc[c] += v[c];
            err[c] += e[c];
        }
    }
    Ok(finish_axis(levels, acc[0], acc[1], err[0], err[1]))
}

fn hermite_rule(nodes: usize) -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(nodes.max(1)).expect("nonzero");
    let inv = std::f64::consts::PI.sqrt().recip();
    GaussHermite::new(n)
        .iter()
        .map(|&(x, w)| (x, w * inv))
        .collect()
}

fn axis_hermite(levels: &[f64], root: f64, nodes: usize) -> Moments {
    let rule = hermite_rule(nodes);
    let mut acc = [0.0; 2];
    for n in 0..levels.len() {
        for &(x, w) in &rule {
            let v = axis_point(levels, n, root, x);
            acc[0] += w * v[0];
            acc[1] += w * v[1];
        }
    }
    finish_axis(levels, acc[0], acc[1], 0.0, 0.0)
}

fn plane_hermite(points: &[Complex64], root: f64, nodes: usize) -> Moments {
    let rule = hermite_rule(nodes);
    let mut acc = [0.0; 2];
    for n in 0..points.len() {
        for &(x, wx) in &rule {
            for &(y, wy) in &rule {
                let v = plane_point(points, n, root, Complex64::new(x, y));
                acc[0] += wx * wy * v[0];
                acc[1] += wx * wy * v[1];
            }
        }
    }
    let m = points.len() as f64;
    Moments {
        mi_nats: m.ln() - acc[0] / m,
        mmse: acc[1] / m,
        mi_err: 0.0,
        mmse_err: 0.0,
    }
}

/// Running mean and variance of the per-sample estimates.
#[derive(Default)]
struct Welford {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }
    fn stderr(&self) -> f64 {
        (self.m2 / (self.n - 1.0) / self.n).sqrt()
    }
}

fn noise_stream(seed: u64) -> impl Iterator<Item = Complex64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    std::iter::repeat_with(move || {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(h * re, h * im)
    })
}

fn axis_monte_carlo(levels: &[f64], root: f64, samples: usize, seed: u64) -> Moments {
    let m1 = levels.len() as f64;
    let (mut lse, mut err) = (Welford::default(), Welford::default());
    for z in noise_stream(seed).take(samples) {
        let (mut a, mut b) = (0.0, 0.0);
        for n in 0..levels.len() {
            let i = axis_point(levels, n, root, z.re);
            let q = axis_point(levels, n, root, z.im);
            a += i[0] + q[0];
            b += i[1] + q[1];
        }
        lse.push(a / m1);
        err.push(b / m1);
    }
    Moments {
        mi_nats: 2.0 * m1.ln() - lse.mean,
        mmse: err.mean,
        mi_err: lse.stderr(),
        mmse_err: err.stderr(),
    }
}

fn plane_monte_carlo(points: &[Complex64], root: f64, samples: usize, seed: u64) -> Moments {
    let m = points.len() as f64;
    let (mut lse, mut err) = (Welford::default(), Welford::default());
    for z in noise_stream(seed).take(samples) {
        let (mut a, mut b) = (0.0, 0.0);
        for n in 0..points.len() {
            let v = plane_point(points, n, root, z);
            a += v[0];
            b += v[1];
        }
        lse.push(a / m);
        err.push(b / m);
    }
    Moments {
        mi_nats: m.ln() - lse.mean,
        mmse: err.mean,
        mi_err: lse.stderr(),
        mmse_err: err.stderr(),
    }
}

fn plane_adaptive(points: &[Complex64], root: f64, tol: f64) -> Result<Moments> {
    let m = points.len() as f64;
    let mut acc = [0.0; 2];
    let mut err = [0.0; 2];
    for n in 0..points.len() {
        let d: Vec<Complex64> = points.iter().map(|x| root * (points[n] - x)).collect();
        // Ties between hypotheses j and k lie on the line
        // |d_j|² − |d_k|² + 2 Re((d_j − d_k)* z) = 0.
        let ties: Vec<(f64, f64, f64)> = (0..d.len())
            .flat_map(|j| (j + 1..d.len()).map(move |k| (j, k)))
            .map(|(j, k)| {
                let delta = d[j] - d[k];
                (
                    0.5 * (d[j].norm_sqr() - d[k].norm_sqr()),
                    delta.re,
                    delta.im,
                )
            })
            .collect();
        let outer_breaks: Vec<f64> = ties
            .iter()
            .filter(|t| t.2.abs() < 1e-12 * (1.0 + t.1.abs()))
            .map(|t| -t.0 / t.1)
            .filter(|z| z.is_finite())
            .collect();
        let mut failure = None;
        let inner_tol = 0.1 * tol;
        let (v, e) = integrate_weighted(
            |z1| {
                let breaks: Vec<f64> = ties
                    .iter()
                    .filter(|t| t.2.abs() >= 1e-12 * (1.0 + t.1.abs()))
                    .map(|t| -(t.0 + t.1 * z1) / t.2)
                    .collect();
                match integrate_weighted(
                    |z2| plane_point(points, n, root, Complex64::new(z1, z2)),
                    &breaks,
                    inner_tol,
                ) {
                    Ok((v, _)) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        [f64::NAN; 2]
                    }
                }
            },
            &outer_breaks,
            tol,
        )
        .map_err(|e| failure.take().unwrap_or(e))?;
        for c in 0..2 {
            acc[c] += v[c];
            err[c] += e[c];
        }
    }
    Ok(Moments {
        mi_nats: m.ln() - acc[0] / m,
        mmse: acc[1] / m,
        mi_err: err[0] / m,
        mmse_err: err[1] / m,
    })
}

struct PanelRules {
    coarse: Vec<(f64, f64)>,
    fine: Vec<(f64, f64)>,
}

fn panel_rules() -> &'static PanelRules {
    static RULES: OnceLock<PanelRules> = OnceLock::new();
    RULES.get_or_init(|| {
        let rule = |n| {
            GaussLegendre::new(NonZeroUsize::new(n).expect("nonzero"))
                .iter()
                .map(|&(x, w)| (x, w))
                .collect()
        };
        PanelRules {
            coarse: rule(8),
            fine: rule(16),
        }
    })
}

/// Integrates `f(z)·e^{−z²}/√π` over `[−L, L]`, splitting first at the given
/// breakpoints and then adaptively. Returns the value and an error estimate.
fn integrate_weighted<F>(mut f: F, breaks: &[f64], tol: f64) -> Result<([f64; 2], [f64; 2])>
where
    F: FnMut(f64) -> [f64; 2],
{
    let rules = panel_rules();
    let inv_sqrt_pi = std::f64::consts::PI.sqrt().recip();
    let mut panel = |a: f64, b: f64| {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut sum = |rule: &[(f64, f64)]| {
            let mut s = [0.0; 2];
            for &(x, w) in rule {
                let z = mid + half * x;
                let g = w * half * inv_sqrt_pi * (-z * z).exp();
                let v = f(z);
                s[0] += g * v[0];
                s[1] += g * v[1];
            }
            s
        };
        let hi = sum(&rules.fine);
        let lo = sum(&rules.coarse);
        (hi, [(hi[0] - lo[0]).abs(), (hi[1] - lo[1]).abs()])
    };

    let mut cuts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|z| z.is_finite() && z.abs() < AXIS_LIMIT)
        .collect();
    cuts.push(-AXIS_LIMIT);
    cuts.push(AXIS_LIMIT);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let span = 2.0 * AXIS_LIMIT;
    let mut stack: Vec<(f64, f64, u32)> = cuts.windows(2).map(|w| (w[0], w[1], 0)).collect();
    let mut total = [0.0; 2];
    let mut error = [0.0; 2];
    let mut panels = 0usize;
    while let Some((a, b, depth)) = stack.pop() {
        panels += 1;
        if panels > MAX_PANELS {
            return Err(Error::QuadratureFailure("panel budget exhausted".into()));
        }
        let (v, e) = panel(a, b);
        if !(v[0].is_finite() && v[1].is_finite()) {
            return Err(Error::QuadratureFailure(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        let allowed = tol * (b - a) / span;
        if (e[0] <= allowed && e[1] <= allowed) || depth >= MAX_DEPTH {
            for c in 0..2 {
                total[c] += v[c];
                error[c] += e[c];
            }
        } else {
            let m = 0.5 * (a + b);
            stack.push((a, m, depth + 1));
            stack.push((m, b, depth + 1));
        }
    }
    Ok((total, error))
}
