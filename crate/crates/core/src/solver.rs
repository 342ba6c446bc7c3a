//! Small numerical building blocks shared by the allocators: a safeguarded
//! regula falsi root finder, Euclidean projection onto a weighted capped
//! simplex, and the one-parameter family of allocations that equalise
//! marginal rates.

use crate::error::{Error, Result};
use crate::rates::RateModel;

/// Final bracket of a root search. `f_lo` and `f_hi` have opposite signs
/// (or one is zero).
#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    pub iterations: usize,
}

impl Bracket {
    /// Endpoint with the smaller residual.
    pub fn best(&self) -> f64 {
        if self.f_lo.abs() <= self.f_hi.abs() {
            self.lo
        } else {
            self.hi
        }
    }
}

/// Illinois regula falsi on `[lo, hi]`, falling back to bisection when a
/// function value is infinite or the secant step leaves the bracket.
///
/// Stops when the bracket width drops below `xtol·max(|lo|, |hi|, tiny)` or a
/// residual is within `ftol`.
pub fn illinois<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    mut f_lo: f64,
    mut f_hi: f64,
    xtol: f64,
    ftol: f64,
    max_iter: usize,
) -> Result<Bracket>
where
    F: FnMut(f64) -> Result<f64>,
{
    if f_lo.is_nan()
        || f_hi.is_nan()
        || f_lo.signum() == f_hi.signum() && f_lo != 0.0 && f_hi != 0.0
    {
        return Err(Error::BisectionFailure(format!(
            "no sign change on [{lo}, {hi}]: f = ({f_lo}, {f_hi})"
        )));
    }
    // secant weights; Illinois halves these, never the true residuals
    let (mut w_lo, mut w_hi) = (f_lo, f_hi);
    let mut side = 0i8;
    for it in 0..max_iter {
        let width = (hi - lo).abs();
        if f_lo.abs() <= ftol
            || f_hi.abs() <= ftol
            || width <= xtol * lo.abs().max(hi.abs()).max(1e-300)
        {
            return Ok(Bracket {
                lo,
                hi,
                f_lo,
                f_hi,
                iterations: it,
            });
        }
        let mut x = if w_lo.is_finite() && w_hi.is_finite() {
            (lo * w_hi - hi * w_lo) / (w_hi - w_lo)
        } else {
            f64::NAN
        };
        let guard = 1e-3 * width;
        if !(x > lo.min(hi) + guard && x < lo.max(hi) - guard) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x)?;
        if fx.is_nan() {
            return Err(Error::BisectionFailure(format!("NaN residual at {x}")));
        }
        if fx.signum() == f_hi.signum() && fx != 0.0 {
            (hi, f_hi, w_hi) = (x, fx, fx);
            if side == -1 {
                w_lo *= 0.5;
            }
            side = -1;
        } else {
            (lo, f_lo, w_lo) = (x, fx, fx);
            if side == 1 {
                w_hi *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::BisectionFailure(format!(
        "no convergence in {max_iter} steps on [{lo}, {hi}]"
    )))
}

/// Projects `v` onto `{u ≥ 0, Σ c_i u_i ≤ budget}` with `c_i > 0`.
pub fn project_weighted_simplex(v: &[f64], c: &[f64], budget: f64) -> Vec<f64> {
    let clipped: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    let used: f64 = clipped.iter().zip(c).map(|(u, c)| u * c).sum();
    if used <= budget {
        return clipped;
    }
    // u_i = max(v_i − τ c_i, 0); the active set shrinks as τ grows past v_i/c_i.
    let mut order: Vec<usize> = (0..v.len()).filter(|&i| v[i] > 0.0).collect();
    order.sort_by(|&a, &b| (v[b] / c[b]).total_cmp(&(v[a] / c[a])));
    let (mut cv, mut cc) = (0.0, 0.0);
    let mut tau = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        cv += c[i] * v[i];
        cc += c[i] * c[i];
        tau = (cv - budget) / cc;
        let next = order.get(rank + 1).map_or(0.0, |&j| v[j] / c[j]);
        if tau >= next {
            break;
        }
    }
    v.iter()
        .zip(c)
        .map(|(x, c)| (x - tau * c).max(0.0))
        .collect()
}

/// Projection onto the plain capped simplex `{p ≥ 0, Σp ≤ budget}`.
pub fn project_capped_simplex(v: &[f64], budget: f64) -> Vec<f64> {
    project_weighted_simplex(v, &vec![1.0; v.len()], budget)
}

/// Allocations of the form `p_i(κ) = s_i/g_i` where `s_i` makes the marginal
/// rate `W·g_i·ρ'(s_i)` equal to `κ` (or zero when even `p = 0` falls short).
///
/// Every stationary point of a separable concave rate under a sum-power
/// constraint has this form, which lets one scalar search replace the vector
/// problem.
pub struct LevelFamily<'a> {
    model: &'a RateModel,
    gains: &'a [f64],
    w: f64,
}

impl<'a> LevelFamily<'a> {
    pub fn new(model: &'a RateModel, gains: &'a [f64], w: f64) -> Self {
        Self { model, gains, w }
    }

    pub fn model(&self) -> &'a RateModel {
        self.model
    }

    /// The level above which every subcarrier is switched off.
    pub fn kappa_max(&self) -> f64 {
        let g = self.gains.iter().copied().fold(0.0, f64::max);
        self.w * g * self.model.marginal_at_zero()
    }

    /// Allocation reaching the model's saturation SNR on every usable
    /// subcarrier, or `None` when the rate never saturates.
    pub fn saturation(&self) -> Result<Option<Vec<f64>>> {
        let s = self.model.saturation_snr()?;
        if !s.is_finite() {
            return Ok(None);
        }
        Ok(Some(
            self.gains
                .iter()
                .map(|&g| if g > 0.0 { s / g } else { 0.0 })
                .collect(),
        ))
    }

    pub fn alloc_at(&self, kappa: f64) -> Result<Vec<f64>> {
        if !(kappa > 0.0) {
            return self
                .saturation()?
                .ok_or_else(|| Error::Infeasible("unbounded allocation at zero level".into()));
        }
        self.gains
            .iter()
            .map(|&g| {
                if g <= 0.0 {
                    return Ok(0.0);
                }
                Ok(self.model.inverse_marginal(kappa / (self.w * g))? / g)
            })
            .collect()
    }

    pub fn rate(&self, p: &[f64]) -> Result<f64> {
        let mut r = 0.0;
        for (&g, &pi) in self.gains.iter().zip(p) {
            r += self.w * self.model.bits(g * pi)?;
        }
        Ok(r)
    }

    /// Returns the level and allocation spending exactly `budget` (to
    /// relative 1e-14), or the saturation allocation when it is cheaper.
    /// The returned allocation never exceeds the budget.
    pub fn solve_budget(&self, budget: f64) -> Result<(f64, Vec<f64>)> {
        if !(budget > 0.0) {
            return Err(Error::Infeasible(format!(
                "budget {budget} must be positive"
            )));
        }
        if let Some(sat) = self.saturation()? {
            if sat.iter().sum::<f64>() <= budget {
                return Ok((0.0, sat));
            }
        }
        if !budget.is_finite() {
            return Err(Error::InvalidParameter(
                "unbounded budget with a non-saturating rate".into(),
            ));
        }
        let hi = self.kappa_max();
        if !(hi > 0.0) {
            return Err(Error::Infeasible("no subcarrier has a nonzero gain".into()));
        }
        let excess = |k: f64| -> Result<f64> { Ok(self.alloc_at(k)?.iter().sum::<f64>() - budget) };
        let mut lo = hi;
        let mut f_lo = -budget;
        for _ in 0..400 {
            lo /= 16.0;
            f_lo = excess(lo)?;
            if f_lo >= 0.0 {
                break;
            }
        }
        if f_lo < 0.0 {
            return Err(Error::BisectionFailure(
                "could not bracket the power level".into(),
            ));
        }
        let br = illinois(
            |u| excess(u.exp()),
            lo.ln(),
            hi.ln(),
            f_lo,
            -budget,
            1e-15,
            0.0,
            400,
        )?;
        let u = if br.f_lo == 0.0 { br.lo } else { br.hi };
        let kappa = u.exp();
        let mut p = self.alloc_at(kappa)?;
        let total: f64 = p.iter().sum();
        if total > budget {
            let s = budget / total;
            p.iter_mut().for_each(|x| *x *= s);
        }
        Ok((kappa, p))
    }

    /// Smallest-power allocation in the family reaching total rate `r`.
    pub fn solve_rate(&self, r: f64) -> Result<(f64, Vec<f64>)> {
        if r <= 0.0 {
            return Ok((f64::INFINITY, vec![0.0; self.gains.len()]));
        }
        let hi = self.kappa_max();
        let deficit = |k: f64| -> Result<f64> { self.rate(&self.alloc_at(k)?).map(|v| v - r) };
        let mut lo = hi;
        let mut f_lo = -r;
        for _ in 0..400 {
            lo /= 16.0;
            f_lo = deficit(lo)?;
            if f_lo >= 0.0 {
                break;
            }
        }
        if f_lo < 0.0 {
            return Err(Error::BisectionFailure(
                "rate target not reachable in the family".into(),
            ));
        }
        let br = illinois(
            |u| deficit(u.exp()),
            lo.ln(),
            hi.ln(),
            f_lo,
            -r,
            1e-15,
            0.0,
            400,
        )?;
        // keep the side whose rate meets the floor
        let u = if br.f_hi == 0.0 { br.hi } else { br.lo };
        let kappa = u.exp();
        Ok((kappa, self.alloc_at(kappa)?))
    }
}
