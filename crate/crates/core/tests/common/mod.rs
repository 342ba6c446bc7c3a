//! Reference implementations that share no numerical code with the crate.
#![allow(dead_code)]

use std::f64::consts::{LN_2, PI};

use aco_alloc::{ChannelState, SystemParams};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// Channel whose effective SNR per watt is `snr[i]` on subcarrier `i`.
pub fn channel_from_snr(snr: &[f64], params: &SystemParams) -> ChannelState {
    let scale = (4.0 * params.noise_psd * params.w).sqrt();
    ChannelState::from_magnitudes(
        &snr.iter().map(|s| s.sqrt() * scale).collect::<Vec<_>>(),
        params.w,
    )
}

pub fn qpsk_points() -> Vec<Complex64> {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        Complex64::new(a, a),
        Complex64::new(-a, a),
        Complex64::new(-a, -a),
        Complex64::new(a, -a),
    ]
}

/// QPSK mutual information in nats by the trapezoid rule on one axis.
/// Each axis is BPSK with levels `±1/√2` and noise variance `1/2`.
pub fn qpsk_mi_nats(s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let d2 = 2.0 * s; // squared distance between the two levels, scaled
    let d = d2.sqrt();
    let (lim, k) = (10.0, 20_000);
    let h = 2.0 * lim / k as f64;
    let mut acc = 0.0;
    for i in 0..=k {
        let z = -lim + i as f64 * h;
        let e = -(d2 + 2.0 * d * z);
        let v = if e > 30.0 { e } else { e.exp().ln_1p() };
        let w = if i == 0 || i == k { 0.5 } else { 1.0 };
        acc += w * v * (-z * z).exp();
    }
    2.0 * (LN_2 - acc * h / PI.sqrt())
}

/// QPSK MMSE by the same rule: `1 − E tanh(2s + 2√s·z)` per axis with
/// `z ~ N(0, 1/2)`.
pub fn qpsk_mmse(s: f64) -> f64 {
    let (lim, k) = (10.0, 20_000);
    let h = 2.0 * lim / k as f64;
    let mut acc = 0.0;
    for i in 0..=k {
        let z = -lim + i as f64 * h;
        let w = if i == 0 || i == k { 0.5 } else { 1.0 };
        acc += w * (1.0 - (s + 2.0 * (s / 2.0).sqrt() * z).tanh()) * (-z * z).exp();
    }
    acc * h / PI.sqrt()
}

/// Lower bound in bits per channel use, evaluated directly on the 2-D
/// points.
pub fn lower_bound_bits(points: &[Complex64], s: f64) -> f64 {
    let m = points.len() as f64;
    let mut acc = 0.0;
    for a in points {
        let inner: f64 = points
            .iter()
            .map(|b| (-s * (a - b).norm_sqr() / 2.0).exp())
            .sum();
        acc += inner.log2();
    }
    m.log2() + 1.0 - 1.0 / LN_2 - acc / m
}

/// Mutual information in bits/s from a literal simulation of
/// `y = (H/2)√p·X + n`, `n ~ CN(0, σ²W)`, with the posterior computed from
/// the transmitted alphabet.
pub fn simulated_rate(
    points: &[Complex64],
    p: f64,
    h: Complex64,
    params: &SystemParams,
    samples: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let sigma = (params.noise_psd * params.w / 2.0).sqrt();
    let amp = h * 0.5 * p.sqrt();
    let m = points.len();
    let (mut mean, mut m2) = (0.0, 0.0);
    for k in 1..=samples {
        let x = points[rng.random_range(0..m)];
        let nre: f64 = rng.sample(StandardNormal);
        let nim: f64 = rng.sample(StandardNormal);
        let y = amp * x + Complex64::new(nre, nim) * sigma;
        let var = 2.0 * sigma * sigma;
        let own = (y - amp * x).norm_sqr() / var;
        // log2 of M·p(y|x)/Σ p(y|x')
        let denom: f64 = points
            .iter()
            .map(|&c| (own - (y - amp * c).norm_sqr() / var).exp())
            .sum();
        let v = (m as f64).log2() - denom.log2();
        let delta = v - mean;
        mean += delta / k as f64;
        m2 += delta * (v - mean);
    }
    let se = (m2 / (samples - 1) as f64 / samples as f64).sqrt();
    (params.w * mean, params.w * se)
}

/// `best[k] = max Σ f_i(k_i)` over `Σ k_i = k`.
fn max_plus(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            let v = x + y;
            if v > out[i + j] {
                out[i + j] = v;
            }
        }
    }
    out
}

/// For each total `k·δ` (`k ≤ kmax`), the best summed value of
/// `f(i, lo_i + k_i·δ)` with `k_i ∈ [0, span]`, and the per-subcarrier
/// offsets. Returns totals relative to `Σ lo_i`.
pub fn grid_best<F: Fn(usize, f64) -> f64>(lo: &[f64], delta: f64, span: usize, f: F) -> Vec<f64> {
    let mut acc = vec![0.0];
    for (i, &l) in lo.iter().enumerate() {
        let row: Vec<f64> = (0..=span).map(|k| f(i, l + k as f64 * delta)).collect();
        acc = max_plus(&acc, &row);
    }
    acc
}

/// Grid search of `max Σ f_i(p_i)` on `{Σp ≤ B}` with resolution `B/steps`.
pub fn se_grid<F: Fn(usize, f64) -> f64>(n: usize, budget: f64, steps: usize, f: F) -> f64 {
    let delta = budget / steps as f64;
    let best = grid_best(&vec![0.0; n], delta, steps, f);
    best[..=steps]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Nested grid search of `max R(p)/(2Σp + P_c)` subject to `Σp ≤ B` and
/// `R(p) ≥ r`, where `R = Σ rate(i, p_i)`. Each level refines a box around
/// the previous maximiser.
pub fn ee_grid<F: Fn(usize, f64) -> f64>(
    n: usize,
    budget: f64,
    floor: f64,
    pc: f64,
    rate: F,
) -> Option<f64> {
    let mut centre = vec![0.0; n];
    let mut delta = budget / 400.0;
    let mut span = 400usize;
    let mut lo = vec![0.0; n];
    let mut best_ee = None;
    for _level in 0..8 {
        // track the argmax per total by rerunning the convolution with
        // back-pointers
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..=span)
                    .map(|k| rate(i, lo[i] + k as f64 * delta))
                    .collect()
            })
            .collect();
        let mut acc = vec![0.0];
        let mut choice: Vec<Vec<usize>> = Vec::new();
        for row in &rows {
            let mut out = vec![f64::NEG_INFINITY; acc.len() + row.len() - 1];
            let mut arg = vec![0usize; out.len()];
            for (a, &x) in acc.iter().enumerate() {
                for (j, &y) in row.iter().enumerate() {
                    if x + y > out[a + j] {
                        out[a + j] = x + y;
                        arg[a + j] = j;
                    }
                }
            }
            acc = out;
            choice.push(arg);
        }
        let base: f64 = lo.iter().sum();
        let mut top: Option<(f64, usize)> = None;
        for (k, &r) in acc.iter().enumerate() {
            let total = base + k as f64 * delta;
            if total > budget * (1.0 + 1e-12) || r < floor {
                continue;
            }
            let ee = r / (2.0 * total + pc);
            if top.map_or(true, |(b, _)| ee > b) {
                top = Some((ee, k));
            }
        }
        let (ee, mut k) = top?;
        best_ee = Some(best_ee.map_or(ee, |b: f64| b.max(ee)));
        for i in (0..n).rev() {
            let j = choice[i][k];
            centre[i] = lo[i] + j as f64 * delta;
            k -= j;
        }
        let next = delta / 10.0;
        span = 40;
        for i in 0..n {
            lo[i] = (centre[i] - 20.0 * next).max(0.0);
        }
        delta = next;
    }
    best_ee
}
