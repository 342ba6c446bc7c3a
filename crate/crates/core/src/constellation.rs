//! Unit-power signalling alphabets.
//!
//! Square QAM keeps its per-axis PAM levels so that rate and MMSE integrals
//! can be evaluated on one real axis and doubled.

use num_complex::Complex64;

use crate::error::{Error, Result};

const POWER_TOL: f64 = 1e-9;

/// A finite alphabet with unit average power.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    mean_abs: f64,
    pam_levels: Option<Vec<f64>>,
    name: String,
}

fn gray_decode(mut g: usize) -> usize {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

impl Constellation {
    /// Square M-QAM in Gray order, scaled to unit average power.
    ///
    /// The symbol index `k` is split into an in-phase half and a quadrature
    /// half; each half is Gray-decoded to an amplitude level.
    pub fn qam(m: usize) -> Result<Self> {
        if m < 4 || !m.is_power_of_two() || m.trailing_zeros() % 2 != 0 {
            return Err(Error::UnsupportedOrder(m));
        }
        let bits = m.trailing_zeros() / 2;
        let side = 1usize << bits;
        // average energy of one axis of the integer grid {±1, ±3, ...}
        let axis_energy = ((side * side - 1) as f64) / 3.0;
        let scale = 1.0 / (2.0 * axis_energy).sqrt();
        let level = |idx: usize| (2.0 * idx as f64 - (side as f64 - 1.0)) * scale;
        let points = (0..m)
            .map(|k| {
                let i = gray_decode(k >> bits);
                let q = gray_decode(k & (side - 1));
                Complex64::new(level(i), level(q))
            })
            .collect();
        let levels = (0..side).map(level).collect();
        let mut c = Self::build(points, format!("qam{m}"))?;
        c.pam_levels = Some(levels);
        Ok(c)
    }

    /// M-PSK with the first point at angle π/M.
    pub fn psk(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidConstellation(format!("psk order {m} < 2")));
        }
        let points = (0..m)
            .map(|k| {
                Complex64::from_polar(1.0, std::f64::consts::PI * (2 * k + 1) as f64 / m as f64)
            })
            .collect();
        Self::build(points, format!("psk{m}"))
    }

    /// Accepts any user alphabet whose average power is one within `1e-9`.
    ///
    /// The points are rescaled so the unit-power invariant holds to rounding.
    pub fn from_points(points: Vec<Complex64>) -> Result<Self> {
        Self::build(points, "custom".into())
    }

    fn build(mut points: Vec<Complex64>, name: String) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidConstellation(
                "need at least two points".into(),
            ));
        }
        if points
            .iter()
            .any(|p| !p.re.is_finite() || !p.im.is_finite())
        {
            return Err(Error::InvalidConstellation("non-finite point".into()));
        }
        let m = points.len() as f64;
        let power = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / m;
        if (power - 1.0).abs() > POWER_TOL {
            return Err(Error::InvalidConstellation(format!(
                "average power {power} is not 1"
            )));
        }
        let s = power.sqrt().recip();
        for p in &mut points {
            *p *= s;
        }
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                if (a - b).norm() < 1e-12 {
                    return Err(Error::InvalidConstellation("repeated point".into()));
                }
            }
        }
        let mean_abs = points.iter().map(|p| p.norm()).sum::<f64>() / m;
        Ok(Self {
            points,
            mean_abs,
            pam_levels: None,
            name,
        })
    }

    /// Parses `qamM`, `pskM`, or the aliases `qpsk` and `bpsk`.
    pub fn by_name(name: &str) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase();
        match lower.as_str() {
            "qpsk" => return Self::qam(4),
            "bpsk" => return Self::psk(2),
            _ => {}
        }
        let parse = |rest: &str| {
            rest.trim_start_matches('-')
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("unknown modulation '{name}'")))
        };
        if let Some(rest) = lower.strip_prefix("qam") {
            Self::qam(parse(rest)?)
        } else if let Some(rest) = lower.strip_prefix("psk") {
            Self::psk(parse(rest)?)
        } else if let Some(rest) = lower.strip_suffix("-qam") {
            Self::qam(parse(rest)?)
        } else {
            Err(Error::Config(format!("unknown modulation '{name}'")))
        }
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    /// `E{|X|}` under a uniform prior.
    pub fn mean_abs(&self) -> f64 {
        self.mean_abs
    }

    /// Per-axis levels when the alphabet is a square QAM grid.
    pub fn pam_levels(&self) -> Option<&[f64]> {
        self.pam_levels.as_deref()
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

/// Square QAM of order `m`.
pub fn make_qam(m: usize) -> Result<Constellation> {
    Constellation::qam(m)
}

pub fn mean_abs(c: &Constellation) -> f64 {
    c.mean_abs()
}
