//! Energy-efficiency maximisation with a rate floor.
//!
//! The ratio `R(p)/(2Σp + P_c)` is maximised by Dinkelbach's method: each
//! step solves `max R(p) − q(2Σp + P_c)` over the feasible set and moves `q`
//! to the achieved ratio. The inner problem is separable and concave, so its
//! maximiser lies on the one-parameter family of equal-marginal allocations
//! (see [`LevelFamily`]); which member is chosen depends on whether the
//! budget, the rate floor, or neither is binding.

use crate::channel::ChannelState;
use crate::error::{Error, Result};
use crate::rates::{RateModel, SystemParams};
use crate::se_alloc::{effective_budget, AllocationResult, PowerAllocation};
use crate::solver::{project_capped_simplex, LevelFamily};

pub const DINKELBACH_TOL: f64 = 1e-8;
pub const DINKELBACH_MAX_ITER: usize = 50;

/// One Dinkelbach iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DinkelbachState {
    /// Ratio used in this step, bits/s/W.
    pub q: f64,
    pub iteration: usize,
    /// `R(p) − q(2Σp + P_c)` at the step's maximiser, bits/s.
    pub f_value: f64,
}

/// Budget simplex intersected with the rate superlevel set.
#[derive(Debug, Clone)]
pub struct FeasibleSet {
    pub budget: f64,
    pub rate_floor: f64,
    pub model: RateModel,
}

impl FeasibleSet {
    pub fn new(params: &SystemParams, model: &RateModel) -> Self {
        Self {
            budget: effective_budget(params, model),
            rate_floor: params.rate_floor,
            model: model.clone(),
        }
    }
}

/// Full Dinkelbach output.
#[derive(Debug, Clone)]
pub struct EeSolution {
    pub result: AllocationResult,
    pub history: Vec<DinkelbachState>,
    /// Largest achievable rate within the budget, bits/s.
    pub max_rate: f64,
}

/// Maximises EE and returns the allocation with its final ratio as `dual`.
pub fn ee_maximize(
    ch: &ChannelState,
    params: &SystemParams,
    model: &RateModel,
) -> Result<AllocationResult> {
    dinkelbach(ch, params, model).map(|s| s.result)
}

fn max_rate_alloc(fam: &LevelFamily, budget: f64) -> Result<Vec<f64>> {
    Ok(fam.solve_budget(budget)?.1)
}

/// Dinkelbach iteration from `q = 0`, stopping once `|q⁽ⁿ⁺¹⁾ − q⁽ⁿ⁾|` is
/// within `1e-8` of `q⁽ⁿ⁺¹⁾`.
pub fn dinkelbach(
    ch: &ChannelState,
    params: &SystemParams,
    model: &RateModel,
) -> Result<EeSolution> {
    params.validate()?;
    let fs = FeasibleSet::new(params, model);
    let g = ch.snr_per_watt(params);
    let fam = LevelFamily::new(model, &g, params.w);
    let top = if fs.budget.is_finite() || fam.saturation()?.is_some() {
        Some(max_rate_alloc(&fam, fs.budget)?)
    } else {
        None
    };
    let max_rate = match &top {
        Some(t) => fam.rate(t)?,
        None => f64::INFINITY,
    };
    if max_rate < fs.rate_floor {
        return Err(Error::InfeasibleQos {
            max_rate,
            floor: fs.rate_floor,
        });
    }

    let denom = |p: &[f64]| 2.0 * p.iter().sum::<f64>() + params.circuit_power;
    // q = 0 is unbounded without a budget, so start from a feasible ratio
    let mut q = match top {
        Some(_) => 0.0,
        None => {
            let p0 = if fs.rate_floor > 0.0 {
                fam.solve_rate(fs.rate_floor)?.1
            } else {
                fam.alloc_at(0.5 * fam.kappa_max())?
            };
            fam.rate(&p0)? / denom(&p0)
        }
    };
    let mut history = Vec::new();
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    for it in 0..DINKELBACH_MAX_ITER {
        let p = subproblem(q, &fam, &fs, top.as_ref())?;
        let rate = fam.rate(&p)?;
        let d = denom(&p);
        let f_value = rate - q * d;
        history.push(DinkelbachState {
            q,
            iteration: it,
            f_value,
        });
        let q_next = rate / d;
        if q_next <= q {
            // the previous iterate is already optimal up to rounding
            let (p, rate, qb) = best.take().unwrap_or((p, rate, q_next));
            return Ok(finish(params, p, rate, qb, it + 1, history, max_rate));
        }
        let converged = q_next - q <= DINKELBACH_TOL * q_next;
        best = Some((p, rate, q_next));
        q = q_next;
        if converged {
            let (p, rate, qb) = best.take().expect("set above");
            return Ok(finish(params, p, rate, qb, it + 1, history, max_rate));
        }
    }
    Err(Error::NonConvergence(DINKELBACH_MAX_ITER))
}

fn finish(
    params: &SystemParams,
    powers: Vec<f64>,
    rate: f64,
    q: f64,
    iterations: usize,
    history: Vec<DinkelbachState>,
    max_rate: f64,
) -> EeSolution {
    let alloc = PowerAllocation { powers };
    let d = 2.0 * alloc.total() + params.circuit_power;
    let f = rate - q * d;
    EeSolution {
        result: AllocationResult {
            budget_used: alloc.total(),
            objective: rate / d,
            alloc,
            dual: q,
            iterations,
            kkt_residual: (f / d).abs(),
        },
        history,
        max_rate,
    }
}

/// Maximiser of `R(p) − q(2Σp + P_c)` over the feasible set.
pub fn ee_subproblem(
    q: f64,
    ch: &ChannelState,
    params: &SystemParams,
    model: &RateModel,
) -> Result<PowerAllocation> {
    if !(q >= 0.0) {
        return Err(Error::InvalidParameter(format!("ratio {q} must be >= 0")));
    }
    let fs = FeasibleSet::new(params, model);
    let g = ch.snr_per_watt(params);
    let fam = LevelFamily::new(model, &g, params.w);
    Ok(PowerAllocation {
        powers: subproblem(q, &fam, &fs, None)?,
    })
}

fn subproblem(
    q: f64,
    fam: &LevelFamily,
    fs: &FeasibleSet,
    top: Option<&Vec<f64>>,
) -> Result<Vec<f64>> {
    // unconstrained stationary point: marginal rate equals 2q
    let free = if q > 0.0 {
        Some(fam.alloc_at(2.0 * q)?)
    } else {
        fam.saturation()?
    };
    let budget_bound = match &free {
        Some(p) => p.iter().sum::<f64>() > fs.budget,
        None => true,
    };
    if budget_bound {
        let p = match top {
            Some(t) => t.clone(),
            None => max_rate_alloc(fam, fs.budget)?,
        };
        let r = fam.rate(&p)?;
        if r < fs.rate_floor {
            return Err(Error::InfeasibleQos {
                max_rate: r,
                floor: fs.rate_floor,
            });
        }
        return Ok(p);
    }
    let p = free.expect("checked above");
    if fam.rate(&p)? >= fs.rate_floor {
        return Ok(p);
    }
    Ok(fam.solve_rate(fs.rate_floor)?.1)
}

/// Euclidean projection of `p_tilde` onto
/// `{p ≥ 0, Σp ≤ budget, R(p) ≥ r}` by Dykstra's alternating projections.
///
/// The rate half-space step solves `p_i − ν R_i'(p_i) = y_i` per coordinate
/// and bisects the multiplier `ν` until `R(p) = r`.
pub fn project_feasible(
    p_tilde: &PowerAllocation,
    fs: &FeasibleSet,
    ch: &ChannelState,
    params: &SystemParams,
) -> Result<PowerAllocation> {
    if p_tilde.powers.len() != ch.len() {
        return Err(Error::DimensionMismatch {
            expected: ch.len(),
            got: p_tilde.powers.len(),
        });
    }
    let g = ch.snr_per_watt(params);
    let fam = LevelFamily::new(&fs.model, &g, params.w);
    let top = max_rate_alloc(&fam, fs.budget)?;
    let max_rate = fam.rate(&top)?;
    if max_rate < fs.rate_floor {
        return Err(Error::InfeasibleQos {
            max_rate,
            floor: fs.rate_floor,
        });
    }
    let rate_of = |p: &[f64]| fam.rate(p);
    let budget_tol = 1e-12 * fs.budget.max(1e-300);
    let y0 = &p_tilde.powers;
    let feasible = |p: &[f64]| -> Result<bool> {
        Ok(p.iter().all(|&x| x >= 0.0)
            && p.iter().sum::<f64>() <= fs.budget + budget_tol
            && rate_of(p)? >= fs.rate_floor)
    };
    if feasible(y0)? {
        return Ok(p_tilde.clone());
    }
    let simplex = |v: &[f64]| {
        if fs.budget.is_finite() {
            project_capped_simplex(v, fs.budget)
        } else {
            v.iter().map(|x| x.max(0.0)).collect()
        }
    };
    if fs.rate_floor <= 0.0 {
        return Ok(PowerAllocation {
            powers: simplex(y0),
        });
    }
    let rate_proj = |v: &[f64]| project_rate_set(v, &fam, &g, params.w, fs.rate_floor);

    let n = y0.len();
    let mut x = y0.clone();
    let (mut pinc, mut qinc) = (vec![0.0; n], vec![0.0; n]);
    let mut last = vec![f64::INFINITY; n];
    for _ in 0..20_000 {
        let a_in: Vec<f64> = (0..n).map(|i| x[i] + pinc[i]).collect();
        let a = simplex(&a_in);
        for i in 0..n {
            pinc[i] = a_in[i] - a[i];
        }
        let b_in: Vec<f64> = (0..n).map(|i| a[i] + qinc[i]).collect();
        let b = rate_proj(&b_in)?;
        for i in 0..n {
            qinc[i] = b_in[i] - b[i];
        }
        let scale = 1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let change = b
            .iter()
            .zip(&last)
            .fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
        let gap = a
            .iter()
            .zip(&b)
            .fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
        x = b;
        if change <= 1e-13 * scale && gap <= 1e-11 * scale {
            break;
        }
        last = x.clone();
    }
    // x satisfies the rate floor exactly; certify the budget
    let total: f64 = x.iter().sum();
    if total > fs.budget + 1e-9 * fs.budget.max(1.0) {
        return Err(Error::Infeasible(format!(
            "projection left budget violated: {total} > {}",
            fs.budget
        )));
    }
    if rate_of(&x)? < fs.rate_floor * (1.0 - 1e-9) {
        return Err(Error::Infeasible(
            "projection left the rate floor violated".into(),
        ));
    }
    Ok(PowerAllocation { powers: x })
}

/// Projection onto `{p ≥ 0, R(p) ≥ r}`.
fn project_rate_set(y: &[f64], fam: &LevelFamily, g: &[f64], w: f64, r: f64) -> Result<Vec<f64>> {
    let base: Vec<f64> = y.iter().map(|v| v.max(0.0)).collect();
    if fam.rate(&base)? >= r {
        return Ok(base);
    }
    let model = fam.model();
    // per-coordinate solution of p − ν·W·g·ρ'(g p) = y_i
    let coord = |yi: f64, gi: f64, nu: f64| -> Result<f64> {
        if gi <= 0.0 {
            return Ok(yi.max(0.0));
        }
        let slope0 = w * gi * model.marginal_at_zero();
        if yi + nu * slope0 <= 0.0 {
            return Ok(0.0);
        }
        let h = |p: f64| -> Result<f64> { Ok(p - nu * w * gi * model.marginal(gi * p)? - yi) };
        let hi = yi.max(0.0) + nu * slope0;
        let br = crate::solver::illinois(h, 0.0, hi, h(0.0)?, h(hi)?, 1e-15, 0.0, 300)?;
        Ok(br.best())
    };
    let at = |nu: f64| -> Result<Vec<f64>> {
        y.iter()
            .zip(g)
            .map(|(&yi, &gi)| coord(yi, gi, nu))
            .collect()
    };
    let deficit = |nu: f64| -> Result<f64> { Ok(fam.rate(&at(nu)?)? - r) };
    let mut hi = 1e-30;
    let mut f_hi = deficit(hi)?;
    while f_hi < 0.0 {
        hi *= 4.0;
        if hi > 1e300 {
            return Err(Error::Infeasible("rate floor cannot be reached".into()));
        }
        f_hi = deficit(hi)?;
    }
    let f0 = deficit(0.0)?;
    let br = crate::solver::illinois(deficit, 0.0, hi, f0, f_hi, 1e-15, 1e-12 * r, 400)?;
    let nu = if br.f_hi >= 0.0 { br.hi } else { br.lo };
    at(nu)
}
