//! Time-domain ACO-OFDM frames, used only to check the clipping identities
//! that the allocators rely on.
//!
//! A frame has `2N` bins. Data sits on the odd bins `2i−1`, `i = 1..N/2`,
//! mirrored as conjugates onto `2N−(2i−1)`; even bins are empty. The IDFT is
//! `x_ℓ = (2N)^{-1/2} Σ_k X_k e^{+j2πkℓ/(2N)}`, which makes `x` real and
//! antisymmetric (`x_ℓ = −x_{ℓ+N}`). Clipping at zero then leaves exactly
//! half of every odd bin in place.

use std::borrow::Borrow;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::constellation::Constellation;
use crate::error::{Error, Result};

/// Fewest frames accepted by [`empirical_optical_power`].
pub const MIN_FRAMES: usize = 10_000;

/// One synthesised frame.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmFrame {
    /// All `2N` bins, Hermitian-arranged.
    pub freq_symbols: Vec<Complex64>,
    /// Real part of the IDFT output.
    pub time_samples: Vec<f64>,
    /// `max(x, 0)` of the time samples.
    pub clipped: Vec<f64>,
    /// Largest imaginary part discarded from the IDFT output.
    pub imag_residual: f64,
}

/// Reusable FFT plans for frames of size `2N`.
pub struct Synthesizer {
    n: usize,
    inverse: Arc<dyn Fft<f64>>,
    forward: Arc<dyn Fft<f64>>,
}

impl Synthesizer {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "N = {n} must be even and at least 2"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            inverse: planner.plan_fft_inverse(2 * n),
            forward: planner.plan_fft_forward(2 * n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Places `√p_i·s_i` on odd bin `2i−1` and its conjugate on the mirror
    /// bin, transforms, and clips.
    pub fn frame(&self, symbols: &[Complex64], powers: &[f64]) -> Result<OfdmFrame> {
        let half = self.n / 2;
        for len in [symbols.len(), powers.len()] {
            if len != half {
                return Err(Error::DimensionMismatch {
                    expected: half,
                    got: len,
                });
            }
        }
        let size = 2 * self.n;
        let mut bins = vec![Complex64::new(0.0, 0.0); size];
        for (i, (s, &p)) in symbols.iter().zip(powers).enumerate() {
            let k = 2 * i + 1;
            bins[k] = s * p.sqrt();
            bins[size - k] = bins[k].conj();
        }
        let mut buf = bins.clone();
        self.inverse.process(&mut buf);
        let scale = (size as f64).sqrt().recip();
        let imag_residual = buf.iter().fold(0.0f64, |m, z| m.max((z.im * scale).abs()));
        let time_samples: Vec<f64> = buf.iter().map(|z| z.re * scale).collect();
        let clipped = clip_samples(&time_samples);
        Ok(OfdmFrame {
            freq_symbols: bins,
            time_samples,
            clipped,
            imag_residual,
        })
    }

    /// Largest deviation of the clipped spectrum's odd bins from half the
    /// transmitted bins, relative to the largest transmitted bin.
    pub fn half_amplitude(&self, frame: &OfdmFrame) -> f64 {
        let size = 2 * self.n;
        let mut buf: Vec<Complex64> = frame
            .clipped
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        self.forward.process(&mut buf);
        let scale = (size as f64).sqrt().recip();
        let peak = frame
            .freq_symbols
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()));
        if peak == 0.0 {
            return buf.iter().fold(0.0f64, |m, z| m.max(z.norm() * scale));
        }
        (1..size)
            .step_by(2)
            .map(|k| (buf[k] * scale - 0.5 * frame.freq_symbols[k]).norm())
            .fold(0.0f64, f64::max)
            / peak
    }
}

/// Builds a frame with a one-off planner.
pub fn synthesize(symbols: &[Complex64], powers: &[f64], n: usize) -> Result<OfdmFrame> {
    Synthesizer::new(n)?.frame(symbols, powers)
}

pub fn clip_samples(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

/// Returns `frame` with its time samples replaced by their clipped values.
pub fn clip(frame: &OfdmFrame) -> OfdmFrame {
    let clipped = clip_samples(&frame.clipped);
    OfdmFrame {
        time_samples: clipped.clone(),
        clipped,
        ..frame.clone()
    }
}

/// `max_ℓ |x_ℓ + x_{ℓ+N}|`.
pub fn antisymmetry_residual(frame: &OfdmFrame) -> f64 {
    let n = frame.time_samples.len() / 2;
    (0..n)
        .map(|l| (frame.time_samples[l] + frame.time_samples[l + n]).abs())
        .fold(0.0, f64::max)
}

/// See [`Synthesizer::half_amplitude`].
pub fn half_amplitude_check(frame: &OfdmFrame) -> f64 {
    let n = frame.time_samples.len() / 2;
    match Synthesizer::new(n) {
        Ok(s) => s.half_amplitude(frame),
        Err(_) => f64::INFINITY,
    }
}

/// Sample mean of the clipped samples over all frames.
pub fn empirical_optical_power<I, F>(frames: I) -> Result<f64>
where
    I: IntoIterator<Item = F>,
    F: Borrow<OfdmFrame>,
{
    let (mut count, mut sum, mut samples) = (0usize, 0.0, 0usize);
    for f in frames {
        let f = f.borrow();
        count += 1;
        samples += f.clipped.len();
        sum += f.clipped.iter().sum::<f64>();
    }
    if count < MIN_FRAMES {
        return Err(Error::TooFewSamples {
            got: count,
            min: MIN_FRAMES,
        });
    }
    Ok(sum / samples as f64)
}

/// Distribution of the unit-power data symbols.
#[derive(Debug, Clone)]
pub enum SymbolSource {
    Gaussian,
    Alphabet(Constellation),
}

impl SymbolSource {
    fn draw<R: Rng>(&self, rng: &mut R) -> Complex64 {
        match self {
            SymbolSource::Gaussian => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(h * re, h * im)
            }
            SymbolSource::Alphabet(c) => c.points()[rng.random_range(0..c.order())],
        }
    }

    fn mean_abs(&self) -> f64 {
        match self {
            SymbolSource::Gaussian => PI.sqrt() / 2.0,
            SymbolSource::Alphabet(c) => c.mean_abs(),
        }
    }
}

/// Monte Carlo settings.
#[derive(Debug, Clone)]
pub struct MonteCarloSetup {
    pub n: usize,
    pub powers: Vec<f64>,
    pub frames: usize,
    pub seed: u64,
    pub symbols: SymbolSource,
}

/// Aggregate statistics over random frames.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformReport {
    pub frames: usize,
    pub imag_max: f64,
    pub antisymmetry_max: f64,
    pub half_amplitude_max: f64,
    /// Sample mean of the clipped signal.
    pub optical_mean: f64,
    /// `√(Σp/(πN))`, the optical power expression used for the Gaussian cap.
    pub optical_reference: f64,
    /// `√(Σp/(2πN))`, the mean of a clipped zero-mean Gaussian with
    /// variance `Σp/N`.
    pub optical_gaussian: f64,
    /// `(2N)^{-1/2} Σ √p_i E|X|`, an upper bound for any alphabet.
    pub optical_bound: f64,
    /// Mean of `Σ_ℓ x_ℓ²`; equals `2Σp`.
    pub power_unclipped: f64,
    /// Mean of `Σ_ℓ x̂_ℓ²`.
    pub power_clipped: f64,
    pub sum_power: f64,
}

const BATCH: usize = 1000;

#[derive(Default, Clone, Copy)]
struct Partial {
    frames: usize,
    imag: f64,
    anti: f64,
    half: f64,
    clipped_sum: f64,
    samples: usize,
    energy: f64,
    energy_clipped: f64,
}

/// Draws `frames` random frames in batches of 1000, each batch on its own
/// ChaCha stream, and aggregates in batch order.
pub fn monte_carlo(setup: &MonteCarloSetup) -> Result<WaveformReport> {
    if setup.frames < MIN_FRAMES {
        return Err(Error::TooFewSamples {
            got: setup.frames,
            min: MIN_FRAMES,
        });
    }
    let synth = Synthesizer::new(setup.n)?;
    if setup.powers.len() != setup.n / 2 {
        return Err(Error::DimensionMismatch {
            expected: setup.n / 2,
            got: setup.powers.len(),
        });
    }
    if setup.powers.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
        return Err(Error::InvalidParameter(
            "powers must be finite and >= 0".into(),
        ));
    }
    let batches = setup.frames.div_ceil(BATCH);
    let parts: Vec<Result<Partial>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha12Rng::seed_from_u64(setup.seed);
            rng.set_stream(b as u64);
            let count = BATCH.min(setup.frames - b * BATCH);
            let mut acc = Partial::default();
            let mut syms = vec![Complex64::new(0.0, 0.0); setup.n / 2];
            for _ in 0..count {
                for s in syms.iter_mut() {
                    *s = setup.symbols.draw(&mut rng);
                }
                let f = synth.frame(&syms, &setup.powers)?;
                acc.frames += 1;
                acc.imag = acc.imag.max(f.imag_residual);
                acc.anti = acc.anti.max(antisymmetry_residual(&f));
                acc.half = acc.half.max(synth.half_amplitude(&f));
                acc.clipped_sum += f.clipped.iter().sum::<f64>();
                acc.samples += f.clipped.len();
                acc.energy += f.time_samples.iter().map(|x| x * x).sum::<f64>();
                acc.energy_clipped += f.clipped.iter().map(|x| x * x).sum::<f64>();
            }
            Ok(acc)
        })
        .collect();
    let mut t = Partial::default();
    for p in parts {
        let p = p?;
        t.frames += p.frames;
        t.imag = t.imag.max(p.imag);
        t.anti = t.anti.max(p.anti);
        t.half = t.half.max(p.half);
        t.clipped_sum += p.clipped_sum;
        t.samples += p.samples;
        t.energy += p.energy;
        t.energy_clipped += p.energy_clipped;
    }
    let sum_power: f64 = setup.powers.iter().sum();
    let n = setup.n as f64;
    Ok(WaveformReport {
        frames: t.frames,
        imag_max: t.imag,
        antisymmetry_max: t.anti,
        half_amplitude_max: t.half,
        optical_mean: t.clipped_sum / t.samples as f64,
        optical_reference: (sum_power / (PI * n)).sqrt(),
        optical_gaussian: (sum_power / (2.0 * PI * n)).sqrt(),
        optical_bound: setup.powers.iter().map(|p| p.sqrt()).sum::<f64>()
            * setup.symbols.mean_abs()
            / (2.0 * n).sqrt(),
        power_unclipped: t.energy / t.frames as f64,
        power_clipped: t.energy_clipped / t.frames as f64,
        sum_power,
    })
}
