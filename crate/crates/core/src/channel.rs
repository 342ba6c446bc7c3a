//! Indoor VLC channel: a Lambertian line-of-sight path plus a first-order
//! low-pass diffuse component, evaluated on the odd ACO-OFDM subcarriers.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rates::SystemParams;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// One LED/photodiode pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub led_position: [f64; 3],
    pub receiver_position: [f64; 3],
    /// Irradiance angle θ at the LED, radians.
    pub irradiance_angle: f64,
    /// Incidence angle φ at the photodiode, radians.
    pub incidence_angle: f64,
    /// Semi-angle at half power Φ½, radians.
    pub half_power_angle: f64,
    /// Detector area, m².
    pub detector_area: f64,
    /// Field of view Ψ, radians.
    pub fov: f64,
    pub filter_gain: f64,
    pub concentrator_gain: f64,
}

impl Geometry {
    /// Euclidean LED-to-receiver distance.
    pub fn distance(&self) -> f64 {
        self.led_position
            .iter()
            .zip(&self.receiver_position)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Lambertian order m = −ln 2 / ln cos Φ½.
    pub fn lambertian_order(&self) -> f64 {
        -std::f64::consts::LN_2 / self.half_power_angle.cos().ln()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidGeometry(msg.into()));
        let right = PI / 2.0;
        if !(self.detector_area > 0.0) {
            return bad("detector area must be positive");
        }
        if !(self.half_power_angle > 0.0 && self.half_power_angle < right) {
            return bad("half-power angle must lie in (0, π/2)");
        }
        if !(self.irradiance_angle >= 0.0 && self.irradiance_angle < right) {
            return bad("irradiance angle must lie in [0, π/2)");
        }
        if !(self.incidence_angle >= 0.0 && self.incidence_angle < right) {
            return bad("incidence angle must lie in [0, π/2)");
        }
        if !(self.fov >= 0.0) || !(self.filter_gain >= 0.0) || !(self.concentrator_gain >= 0.0) {
            return bad("fov and optical gains must be nonnegative");
        }
        Ok(())
    }
}

/// Diffuse link parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffuseParams {
    /// Power efficiency η_D.
    pub efficiency: f64,
    /// Exponential decay time τ_d, seconds.
    pub decay_time: f64,
    /// Extra delay ΔT of the diffuse part relative to the LOS path, seconds.
    #[serde(default)]
    pub delay: f64,
}

impl Default for DiffuseParams {
    fn default() -> Self {
        Self {
            efficiency: 1e-6,
            decay_time: 10e-9,
            delay: 0.0,
        }
    }
}

impl DiffuseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency >= 0.0) || !(self.decay_time > 0.0) || !(self.delay >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bad diffuse parameters {self:?}"
            )));
        }
        Ok(())
    }
}

/// Complex gains on the independent odd subcarriers 1, 3, …, N−1.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub gains: Vec<Complex64>,
    pub frequencies: Vec<f64>,
}

impl ChannelState {
    /// Builds a state from gains alone, placing subcarrier `i` at `(2i+1)·w`.
    pub fn from_gains(gains: Vec<Complex64>, w: f64) -> Self {
        let frequencies = (0..gains.len()).map(|i| (2 * i + 1) as f64 * w).collect();
        Self { gains, frequencies }
    }

    /// Real nonnegative gains, convenient for tests.
    pub fn from_magnitudes(mags: &[f64], w: f64) -> Self {
        Self::from_gains(mags.iter().map(|&m| Complex64::new(m, 0.0)).collect(), w)
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    /// Effective SNR per watt, `|H|²/(4σ²W)`, for every subcarrier.
    pub fn snr_per_watt(&self, params: &SystemParams) -> Vec<f64> {
        self.gains.iter().map(|h| params.snr_per_watt(*h)).collect()
    }
}

/// DC gain of the line-of-sight path at distance `d`.
pub fn lambertian_gain(geom: &Geometry, d: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::InvalidGeometry(format!(
            "distance {d} must be positive"
        )));
    }
    geom.validate()?;
    if geom.incidence_angle > geom.fov {
        return Ok(0.0);
    }
    let m = geom.lambertian_order();
    Ok((m + 1.0)
        * geom.detector_area
        * geom.incidence_angle.cos()
        * geom.irradiance_angle.cos().powf(m)
        * geom.filter_gain
        * geom.concentrator_gain
        / (2.0 * PI * d * d))
}

/// LOS frequency response `g_L·exp(−j2πfτ)`.
pub fn los_gain(g_l: f64, f: f64, tau: f64) -> Complex64 {
    g_l * Complex64::from_polar(1.0, -2.0 * PI * f * tau)
}

/// Diffuse frequency response `η_D/(1 + j2πτ_d f)`, delayed by `ΔT`.
pub fn diffuse_gain(dp: &DiffuseParams, f: f64) -> Complex64 {
    let h = Complex64::new(dp.efficiency, 0.0) / Complex64::new(1.0, 2.0 * PI * dp.decay_time * f);
    if dp.delay == 0.0 {
        h
    } else {
        h * Complex64::from_polar(1.0, -2.0 * PI * f * dp.delay)
    }
}

/// Sums LOS and diffuse responses of every LED on each odd subcarrier.
pub fn subcarrier_gains(
    leds: &[Geometry],
    dp: &DiffuseParams,
    params: &SystemParams,
) -> Result<ChannelState> {
    params.validate()?;
    dp.validate()?;
    if leds.is_empty() {
        return Err(Error::InvalidGeometry("no LEDs".into()));
    }
    let mut paths = Vec::with_capacity(leds.len());
    for g in leds {
        let d = g.distance();
        paths.push((lambertian_gain(g, d)?, d / SPEED_OF_LIGHT));
    }
    let frequencies: Vec<f64> = (1..=params.data_subcarriers())
        .map(|i| (2 * i - 1) as f64 * params.w)
        .collect();
    let gains = frequencies
        .iter()
        .map(|&f| {
            paths
                .iter()
                .map(|&(g_l, tau)| los_gain(g_l, f, tau) + diffuse_gain(dp, f))
                .sum()
        })
        .collect();
    Ok(ChannelState { gains, frequencies })
}

/// Reference room: four ceiling LEDs and one receiver on the floor.
pub fn reference_leds() -> Vec<Geometry> {
    [
        [1.5, 1.5, 3.0],
        [1.5, 3.5, 3.0],
        [3.5, 1.5, 3.0],
        [3.5, 3.5, 3.0],
    ]
    .into_iter()
    .map(|led| Geometry {
        led_position: led,
        receiver_position: [0.5, 1.0, 0.0],
        irradiance_angle: 60f64.to_radians(),
        incidence_angle: 45f64.to_radians(),
        half_power_angle: 60f64.to_radians(),
        detector_area: 1e-4,
        fov: 90f64.to_radians(),
        filter_gain: 1.0,
        concentrator_gain: 1.0,
    })
    .collect()
}
