//! Per-subcarrier rate models and the SE/EE aggregates.
//!
//! A rate model is a concave function `ρ(s)` of the effective SNR
//! `s = p|H|²/(4σ²W)` in bits per channel use; the rate of a subcarrier is
//! `W·ρ(s)`. Besides `ρ` every model exposes its slope `ρ'(s)` and the inverse
//! of that slope, which is all the allocators need.

use std::f64::consts::LN_2;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::channel::ChannelState;
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::quadrature::{moments, Moments, QuadratureSpec};
use crate::se_alloc::PowerAllocation;
use crate::solver::illinois;

/// MMSE level treated as "fully detected" when deciding saturation.
pub const SATURATION_MMSE: f64 = 1e-6;

/// Link-level constants and budgets. Budgets may be `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Half the IFFT size; there are `n/2` independent data subcarriers.
    pub n: usize,
    /// Subcarrier spacing, Hz.
    pub w: f64,
    /// Noise power spectral density σ², A²/Hz.
    pub noise_psd: f64,
    /// Electrical power budget P, W.
    pub electrical_budget: f64,
    /// Average optical power budget P_o, W.
    pub optical_budget: f64,
    /// Circuit power P_c, W.
    pub circuit_power: f64,
    /// Minimum total rate r, bits/s.
    pub rate_floor: f64,
}

impl SystemParams {
    /// Reference-scenario constants with both budgets unbounded and no rate floor.
    pub fn reference() -> Self {
        Self {
            n: 64,
            w: 1e6,
            noise_psd: 1e-18,
            electrical_budget: f64::INFINITY,
            optical_budget: f64::INFINITY,
            circuit_power: 0.2,
            rate_floor: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n < 2 || self.n % 2 != 0 {
            return bad(format!("N = {} must be even and at least 2", self.n));
        }
        if !(self.w > 0.0 && self.w.is_finite()) {
            return bad(format!("bandwidth {} must be positive", self.w));
        }
        if !(self.noise_psd > 0.0 && self.noise_psd.is_finite()) {
            return bad(format!("noise psd {} must be positive", self.noise_psd));
        }
        if !(self.electrical_budget > 0.0) || !(self.optical_budget > 0.0) {
            return bad("budgets must be positive".into());
        }
        if !(self.circuit_power > 0.0 && self.circuit_power.is_finite()) {
            return bad(format!(
                "circuit power {} must be positive",
                self.circuit_power
            ));
        }
        if !(self.rate_floor >= 0.0 && self.rate_floor.is_finite()) {
            return bad(format!(
                "rate floor {} must be finite and >= 0",
                self.rate_floor
            ));
        }
        if self.electrical_budget.is_finite()
            && self.electrical_budget <= self.optical_budget * self.optical_budget
        {
            log::warn!(
                "electrical budget {} does not exceed the squared optical budget {}",
                self.electrical_budget,
                self.optical_budget * self.optical_budget
            );
        }
        Ok(())
    }

    pub fn data_subcarriers(&self) -> usize {
        self.n / 2
    }

    /// Total bandwidth `2NW` used to normalise the spectral efficiency.
    pub fn total_bandwidth(&self) -> f64 {
        2.0 * self.n as f64 * self.w
    }

    /// Effective SNR per watt, `|H|²/(4σ²W)`.
    pub fn snr_per_watt(&self, h: Complex64) -> f64 {
        h.norm_sqr() / (4.0 * self.noise_psd * self.w)
    }
}

/// Finite-alphabet mutual information and MMSE of one constellation, with a
/// lazily filled SNR grid that brackets MMSE inversions.
#[derive(Debug)]
pub struct MmseCurve {
    constellation: Constellation,
    spec: QuadratureSpec,
    grid: Vec<f64>,
    cells: Vec<OnceLock<f64>>,
    prior_var: f64,
    saturation: OnceLock<f64>,
}

const GRID_LO: f64 = 1e-4;
const GRID_DECADES: usize = 9;
const GRID_PER_DECADE: usize = 40;

impl MmseCurve {
    pub fn new(constellation: Constellation, spec: QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        let mut grid = vec![0.0];
        let steps = GRID_DECADES * GRID_PER_DECADE;
        grid.extend((0..=steps).map(|j| GRID_LO * 10f64.powf(j as f64 / GRID_PER_DECADE as f64)));
        let cells = grid.iter().map(|_| OnceLock::new()).collect();
        let prior_var = moments(&constellation, 0.0, &spec)?.mmse;
        Ok(Self {
            constellation,
            spec,
            grid,
            cells,
            prior_var,
            saturation: OnceLock::new(),
        })
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    pub fn moments(&self, snr: f64) -> Result<Moments> {
        moments(&self.constellation, snr, &self.spec)
    }

    pub fn mmse(&self, snr: f64) -> Result<f64> {
        Ok(self.moments(snr)?.mmse)
    }

    pub fn mi_nats(&self, snr: f64) -> Result<f64> {
        Ok(self.moments(snr)?.mi_nats)
    }

    /// Prior variance, i.e. `mmse(0)`; one for zero-mean alphabets.
    pub fn prior_var(&self) -> f64 {
        self.prior_var
    }

    fn cached(&self, j: usize) -> Result<f64> {
        if let Some(v) = self.cells[j].get() {
            return Ok(*v);
        }
        let v = self.mmse(self.grid[j])?;
        Ok(*self.cells[j].get_or_init(|| v))
    }

    /// The SNR at which the MMSE equals `target`.
    ///
    /// `target = 1` (or any value at or above the prior variance) maps to 0.
    pub fn inverse(&self, target: f64) -> Result<f64> {
        if !(target > 0.0 && target <= 1.0) {
            return Err(Error::OutOfDomain(target));
        }
        if target >= self.prior_var {
            return Ok(0.0);
        }
        // largest grid index whose mmse is still >= target
        let (mut lo, mut hi) = (0usize, self.grid.len() - 1);
        let (a, b, fa, fb);
        if self.cached(hi)? >= target {
            let mut s_lo = self.grid[hi];
            let mut m_lo = self.cached(hi)?;
            let mut s_hi = 2.0 * s_lo;
            let mut m_hi = self.mmse(s_hi)?;
            let mut guard = 0;
            while m_hi >= target {
                guard += 1;
                if guard > 60 {
                    return Err(Error::BisectionFailure(format!(
                        "mmse never reaches {target}"
                    )));
                }
                (s_lo, m_lo) = (s_hi, m_hi);
                s_hi *= 2.0;
                m_hi = self.mmse(s_hi)?;
            }
            (a, b, fa, fb) = (s_lo, s_hi, m_lo, m_hi);
        } else {
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if self.cached(mid)? >= target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            (a, b, fa, fb) = (
                self.grid[lo],
                self.grid[hi],
                self.cached(lo)?,
                self.cached(hi)?,
            );
        }
        let lt = target.ln();
        let resid = |m: f64| {
            if m > 0.0 {
                m.ln() - lt
            } else {
                f64::NEG_INFINITY
            }
        };
        let br = illinois(
            |s| self.mmse(s).map(resid),
            a,
            b,
            resid(fa),
            resid(fb),
            1e-15,
            1e-14,
            300,
        )?;
        Ok(br.best())
    }

    /// SNR at which the MMSE drops to [`SATURATION_MMSE`].
    pub fn saturation_snr(&self) -> Result<f64> {
        if let Some(v) = self.saturation.get() {
            return Ok(*v);
        }
        let v = self.inverse(SATURATION_MMSE)?;
        Ok(*self.saturation.get_or_init(|| v))
    }
}

/// The closed-form lower bound
/// `ρ_L(s) = log2 M + 1 − 1/ln2 − (1/M) Σ_n log2 Σ_k exp(−s|X_n − X_k|²/2)`.
#[derive(Debug)]
pub struct LowerBoundCurve {
    constellation: Constellation,
    /// Halved squared distances from each reference point (per axis for QAM).
    half_dist: Vec<Vec<f64>>,
    /// 2 when `half_dist` holds one axis of a square QAM, else 1.
    factor: f64,
    ceiling: f64,
    slope0: f64,
    saturation: OnceLock<f64>,
}

impl LowerBoundCurve {
    pub fn new(constellation: Constellation) -> Self {
        let (half_dist, factor) = match constellation.pam_levels() {
            Some(levels) => (
                levels
                    .iter()
                    .map(|a| levels.iter().map(|b| 0.5 * (a - b) * (a - b)).collect())
                    .collect(),
                2.0,
            ),
            None => (
                constellation
                    .points()
                    .iter()
                    .map(|a| {
                        constellation
                            .points()
                            .iter()
                            .map(|b| 0.5 * (a - b).norm_sqr())
                            .collect()
                    })
                    .collect(),
                1.0,
            ),
        };
        let m = constellation.order() as f64;
        let ceiling = m.log2() + 1.0 - 1.0 / LN_2;
        let mut c = Self {
            constellation,
            half_dist,
            factor,
            ceiling,
            slope0: 0.0,
            saturation: OnceLock::new(),
        };
        c.slope0 = c.slope(0.0);
        c
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    /// Limit of the bound as `s → ∞`, `log2 M + 1 − 1/ln2`.
    pub fn ceiling(&self) -> f64 {
        self.ceiling
    }

    pub fn bits(&self, s: f64) -> f64 {
        let rows = self.half_dist.len() as f64;
        let mut acc = 0.0;
        for row in &self.half_dist {
            // the k = n term is exp(0) = 1, so the sum never underflows
            acc += row.iter().map(|&h| (-s * h).exp()).sum::<f64>().log2();
        }
        self.ceiling - self.factor * acc / rows
    }

    /// `dρ_L/ds`, a softmax-weighted mean of the half squared distances.
    pub fn slope(&self, s: f64) -> f64 {
        let rows = self.half_dist.len() as f64;
        let mut acc = 0.0;
        for row in &self.half_dist {
            let (mut num, mut den) = (0.0, 0.0);
            for &h in row {
                let e = (-s * h).exp();
                num += h * e;
                den += e;
            }
            acc += num / den;
        }
        self.factor * acc / (rows * LN_2)
    }

    pub fn slope_at_zero(&self) -> f64 {
        self.slope0
    }

    /// Smallest `s ≥ 0` with `slope(s) = m`; zero when `m` is at or above
    /// the initial slope.
    pub fn inverse_slope(&self, m: f64) -> Result<f64> {
        if m >= self.slope0 {
            return Ok(0.0);
        }
        if !(m > 0.0) {
            return Ok(f64::INFINITY);
        }
        let (mut a, mut fa) = (0.0, self.slope0);
        let mut b = 1.0;
        let mut fb = self.slope(b);
        while fb >= m {
            (a, fa) = (b, fb);
            b *= 2.0;
            if b > 1e300 {
                return Err(Error::BisectionFailure(format!("slope never reaches {m}")));
            }
            fb = self.slope(b);
        }
        let lm = m.ln();
        let resid = |v: f64| {
            if v > 0.0 {
                v.ln() - lm
            } else {
                f64::NEG_INFINITY
            }
        };
        let br = illinois(
            |s| Ok(resid(self.slope(s))),
            a,
            b,
            resid(fa),
            resid(fb),
            1e-15,
            1e-14,
            300,
        )?;
        Ok(br.best())
    }

    /// SNR at which the slope falls to `SATURATION_MMSE` of its initial value.
    pub fn saturation_snr(&self) -> Result<f64> {
        if let Some(v) = self.saturation.get() {
            return Ok(*v);
        }
        let v = self.inverse_slope(SATURATION_MMSE * self.slope0)?;
        Ok(*self.saturation.get_or_init(|| v))
    }
}

/// Which per-subcarrier rate expression is used.
#[derive(Debug, Clone)]
pub enum RateModel {
    Gaussian,
    FiniteAlphabet(Arc<MmseCurve>),
    LowerBound(Arc<LowerBoundCurve>),
}

impl RateModel {
    pub fn finite(c: Constellation, spec: QuadratureSpec) -> Result<Self> {
        Ok(RateModel::FiniteAlphabet(Arc::new(MmseCurve::new(
            c, spec,
        )?)))
    }

    pub fn lower(c: Constellation) -> Self {
        RateModel::LowerBound(Arc::new(LowerBoundCurve::new(c)))
    }

    pub fn name(&self) -> &'static str {
        match self {
            RateModel::Gaussian => "gaussian",
            RateModel::FiniteAlphabet(_) => "finite",
            RateModel::LowerBound(_) => "lower",
        }
    }

    pub fn constellation(&self) -> Option<&Constellation> {
        match self {
            RateModel::Gaussian => None,
            RateModel::FiniteAlphabet(c) => Some(c.constellation()),
            RateModel::LowerBound(c) => Some(c.constellation()),
        }
    }

    /// `ρ(s)` in bits per channel use.
    pub fn bits(&self, s: f64) -> Result<f64> {
        match self {
            RateModel::Gaussian => Ok(s.ln_1p() / LN_2),
            RateModel::FiniteAlphabet(c) => Ok(c.mi_nats(s)? / LN_2),
            RateModel::LowerBound(c) => Ok(c.bits(s)),
        }
    }

    /// `ρ'(s)`; for finite alphabets this is `mmse(s)/ln 2`.
    pub fn marginal(&self, s: f64) -> Result<f64> {
        match self {
            RateModel::Gaussian => Ok(1.0 / ((1.0 + s) * LN_2)),
            RateModel::FiniteAlphabet(c) => Ok(c.mmse(s)? / LN_2),
            RateModel::LowerBound(c) => Ok(c.slope(s)),
        }
    }

    pub fn marginal_at_zero(&self) -> f64 {
        match self {
            RateModel::Gaussian => 1.0 / LN_2,
            RateModel::FiniteAlphabet(c) => c.prior_var() / LN_2,
            RateModel::LowerBound(c) => c.slope_at_zero(),
        }
    }

    /// Smallest `s ≥ 0` with `ρ'(s) ≤ m`; infinite for `m ≤ 0`.
    pub fn inverse_marginal(&self, m: f64) -> Result<f64> {
        if m >= self.marginal_at_zero() {
            return Ok(0.0);
        }
        if !(m > 0.0) {
            return Ok(f64::INFINITY);
        }
        match self {
            RateModel::Gaussian => Ok((1.0 / (m * LN_2) - 1.0).max(0.0)),
            RateModel::FiniteAlphabet(c) => c.inverse(m * LN_2),
            RateModel::LowerBound(c) => c.inverse_slope(m),
        }
    }

    /// SNR beyond which the rate is treated as saturated; infinite for the
    /// Gaussian model.
    pub fn saturation_snr(&self) -> Result<f64> {
        match self {
            RateModel::Gaussian => Ok(f64::INFINITY),
            RateModel::FiniteAlphabet(c) => c.saturation_snr(),
            RateModel::LowerBound(c) => c.saturation_snr(),
        }
    }

    /// Supremum of `ρ`.
    pub fn ceiling(&self) -> f64 {
        match self {
            RateModel::Gaussian => f64::INFINITY,
            RateModel::FiniteAlphabet(c) => (c.constellation().order() as f64).log2(),
            RateModel::LowerBound(c) => c.ceiling(),
        }
    }
}

/// `W log2(1 + p|H|²/(4σ²W))`, bits/s.
pub fn gaussian_rate(p: f64, h: Complex64, params: &SystemParams) -> f64 {
    params.w * (p * params.snr_per_watt(h)).ln_1p() / LN_2
}

/// Finite-alphabet mutual information of one subcarrier, bits/s.
pub fn fa_mutual_info(
    p: f64,
    h: Complex64,
    c: &Constellation,
    params: &SystemParams,
    q: &QuadratureSpec,
) -> Result<f64> {
    check_power(p)?;
    Ok(params.w * moments(c, p * params.snr_per_watt(h), q)?.mi_nats / LN_2)
}

/// MMSE of estimating `X` from `√snr·X + Z`.
pub fn mmse(snr: f64, c: &Constellation, q: &QuadratureSpec) -> Result<f64> {
    Ok(moments(c, snr, q)?.mmse)
}

/// Inverse of [`mmse`] on `(0, 1]`.
pub fn mmse_inverse(target: f64, c: &Constellation, q: &QuadratureSpec) -> Result<f64> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::OutOfDomain(target));
    }
    MmseCurve::new(c.clone(), q.clone())?.inverse(target)
}

/// Closed-form lower bound on the finite-alphabet rate, bits/s. Negative at
/// low SNR.
pub fn rate_lower_bound(p: f64, h: Complex64, c: &Constellation, params: &SystemParams) -> f64 {
    params.w * LowerBoundCurve::new(c.clone()).bits(p * params.snr_per_watt(h))
}

fn check_power(p: f64) -> Result<()> {
    if p >= 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "power {p} must be finite and >= 0"
        )))
    }
}

/// Sum of per-subcarrier rates, bits/s.
pub fn total_rate(
    alloc: &PowerAllocation,
    ch: &ChannelState,
    model: &RateModel,
    params: &SystemParams,
) -> Result<f64> {
    if alloc.powers.len() != ch.len() {
        return Err(Error::DimensionMismatch {
            expected: ch.len(),
            got: alloc.powers.len(),
        });
    }
    let mut r = 0.0;
    for (&p, h) in alloc.powers.iter().zip(&ch.gains) {
        check_power(p)?;
        r += params.w * model.bits(p * params.snr_per_watt(*h))?;
    }
    Ok(r)
}

/// Total rate over `2NW`, bits/s/Hz.
pub fn spectral_efficiency(
    alloc: &PowerAllocation,
    ch: &ChannelState,
    model: &RateModel,
    params: &SystemParams,
) -> Result<f64> {
    Ok(total_rate(alloc, ch, model, params)? / params.total_bandwidth())
}

/// Total rate over `2Σp + P_c`, bits/s/W.
pub fn energy_efficiency(
    alloc: &PowerAllocation,
    ch: &ChannelState,
    model: &RateModel,
    params: &SystemParams,
) -> Result<f64> {
    Ok(total_rate(alloc, ch, model, params)? / (2.0 * alloc.total() + params.circuit_power))
}
