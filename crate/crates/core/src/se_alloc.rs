//! Spectral-efficiency maximisation under a sum-power budget.
//!
//! * Gaussian inputs: classical water-filling, solved exactly by sorting.
//! * Finite alphabets: mercury water-filling, bisection on the common
//!   marginal `λ = g_i·mmse(g_i p_i)`.
//! * Lower bound: spectral projected gradient on the budget simplex.
//!
//! Here `g_i = |H_i|²/(4σ²W)` is the effective SNR per watt.

use std::f64::consts::{LN_2, PI};

use crate::channel::ChannelState;
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;
use crate::rates::{LowerBoundCurve, MmseCurve, RateModel, SystemParams, SATURATION_MMSE};
use crate::solver::project_weighted_simplex;

/// Nonnegative powers on the independent odd subcarriers, W.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub powers: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(powers: Vec<f64>) -> Result<Self> {
        if let Some(p) = powers.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "power {p} must be finite and >= 0"
            )));
        }
        Ok(Self { powers })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            powers: vec![0.0; n],
        }
    }

    pub fn total(&self) -> f64 {
        self.powers.iter().sum()
    }

    pub fn active(&self) -> usize {
        self.powers.iter().filter(|&&p| p > 0.0).count()
    }
}

/// Solver output.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    pub alloc: PowerAllocation,
    /// bits/s/Hz for SE problems, bits/s/W for EE problems.
    pub objective: f64,
    /// μ for water-filling, λ for mercury water-filling, the common SE
    /// marginal for the lower bound, and the final ratio q for EE.
    pub dual: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub budget_used: f64,
}

/// Electrical budget after folding in the optical constraint.
///
/// Gaussian inputs use `min{P, NπP_o²}`; discrete alphabets use the safe
/// bound `min{P, 4P_o²/E²{|X|}}`.
pub fn effective_budget(params: &SystemParams, model: &RateModel) -> f64 {
    let po2 = params.optical_budget * params.optical_budget;
    let optical = match model.constellation() {
        None => params.n as f64 * PI * po2,
        Some(c) => 4.0 * po2 / (c.mean_abs() * c.mean_abs()),
    };
    params.electrical_budget.min(optical)
}

fn check_budget(budget: f64) -> Result<()> {
    if !(budget > 0.0) {
        return Err(Error::Infeasible(format!(
            "budget {budget} must be positive"
        )));
    }
    Ok(())
}

/// Optimal powers for Gaussian inputs: `p_i = [L − 1/g_i]⁺` with the water
/// level `L = 1/(2Nμ ln 2)` set so the budget is spent.
pub fn waterfill(
    ch: &ChannelState,
    budget: f64,
    params: &SystemParams,
) -> Result<AllocationResult> {
    check_budget(budget)?;
    if !budget.is_finite() {
        return Err(Error::InvalidParameter(
            "Gaussian rates grow without bound on an infinite budget".into(),
        ));
    }
    let g = ch.snr_per_watt(params);
    let mut floors: Vec<f64> = g.iter().filter(|&&x| x > 0.0).map(|x| 1.0 / x).collect();
    if floors.is_empty() {
        return Err(Error::Infeasible("no subcarrier has a nonzero gain".into()));
    }
    floors.sort_by(f64::total_cmp);
    let mut level = 0.0;
    let mut acc = 0.0;
    for (k, &f) in floors.iter().enumerate() {
        acc += f;
        level = (budget + acc) / (k + 1) as f64;
        if floors.get(k + 1).map_or(true, |&next| level <= next) {
            break;
        }
    }
    let powers: Vec<f64> = g
        .iter()
        .map(|&gi| {
            if gi > 0.0 {
                (level - 1.0 / gi).max(0.0)
            } else {
                0.0
            }
        })
        .collect();
    let mut kkt: f64 = 0.0;
    for (&gi, &p) in g.iter().zip(&powers) {
        if gi <= 0.0 {
            continue;
        }
        let floor = 1.0 / gi;
        kkt = kkt.max(if p > 0.0 {
            (p + floor - level).abs() / level
        } else {
            (level - floor).max(0.0) / level
        });
    }
    let alloc = PowerAllocation { powers };
    let objective = crate::rates::spectral_efficiency(&alloc, ch, &RateModel::Gaussian, params)?;
    Ok(AllocationResult {
        budget_used: alloc.total(),
        alloc,
        objective,
        dual: 1.0 / (2.0 * params.n as f64 * LN_2 * level),
        iterations: 1,
        kkt_residual: kkt,
    })
}

/// Mercury water-filling with a fresh MMSE curve for `c`.
pub fn mercury_waterfill(
    ch: &ChannelState,
    budget: f64,
    c: &Constellation,
    params: &SystemParams,
    q: &QuadratureSpec,
) -> Result<AllocationResult> {
    let curve = MmseCurve::new(c.clone(), q.clone())?;
    mercury_waterfill_with(ch, budget, &curve, params)
}

/// Mercury water-filling reusing `curve`.
///
/// `p_i(λ) = mmse⁻¹(λ/g_i)/g_i` for `λ < g_i` and zero otherwise; `λ` is
/// bisected on `[0, max g_i]` until the bracket is narrower than
/// `1e-9·max g_i` or the budget is met to relative `1e-8`. The feasible end
/// of the bracket is returned. If every subcarrier can reach
/// `mmse ≤ 1e-6` within the budget, that allocation is returned with `λ = 0`.
pub fn mercury_waterfill_with(
    ch: &ChannelState,
    budget: f64,
    curve: &MmseCurve,
    params: &SystemParams,
) -> Result<AllocationResult> {
    check_budget(budget)?;
    let g = ch.snr_per_watt(params);
    let lam_hat = g.iter().copied().fold(0.0, f64::max);
    if !(lam_hat > 0.0) {
        return Err(Error::Infeasible("no subcarrier has a nonzero gain".into()));
    }
    let alloc_at = |lam: f64| -> Result<Vec<f64>> {
        g.iter()
            .map(|&gi| {
                if lam < gi {
                    Ok(curve.inverse(lam / gi)? / gi)
                } else {
                    Ok(0.0)
                }
            })
            .collect()
    };

    let s_sat = curve.saturation_snr()?;
    let saturated: Vec<f64> = g
        .iter()
        .map(|&gi| if gi > 0.0 { s_sat / gi } else { 0.0 })
        .collect();
    let (powers, lam, iterations) = if saturated.iter().sum::<f64>() <= budget {
        (saturated, 0.0, 0)
    } else {
        let (mut lo, mut hi) = (0.0, lam_hat);
        let mut best = vec![0.0; g.len()];
        let mut it = 0;
        while hi - lo > 1e-9 * lam_hat {
            it += 1;
            if it > 200 {
                return Err(Error::BisectionFailure(
                    "λ bisection did not terminate".into(),
                ));
            }
            let mid = 0.5 * (lo + hi);
            let p = alloc_at(mid)?;
            let total: f64 = p.iter().sum();
            if total > budget {
                lo = mid;
            } else {
                hi = mid;
                best = p;
                if budget - total <= 1e-8 * budget {
                    break;
                }
            }
        }
        (best, hi, it)
    };

    let mut kkt: f64 = 0.0;
    for (&gi, &p) in g.iter().zip(&powers) {
        if gi <= 0.0 {
            continue;
        }
        if lam == 0.0 {
            kkt = kkt.max((curve.mmse(gi * p)? - SATURATION_MMSE).abs() / SATURATION_MMSE);
        } else if p > 0.0 {
            kkt = kkt.max((gi * curve.mmse(gi * p)? - lam).abs() / lam);
        } else {
            kkt = kkt.max((gi - lam).max(0.0) / lam);
        }
    }
    let alloc = PowerAllocation { powers };
    let mut rate = 0.0;
    for (&gi, &p) in g.iter().zip(&alloc.powers) {
        rate += params.w * curve.mi_nats(gi * p)? / LN_2;
    }
    Ok(AllocationResult {
        budget_used: alloc.total(),
        objective: rate / params.total_bandwidth(),
        alloc,
        dual: lam,
        iterations,
        kkt_residual: kkt,
    })
}

/// Maximises the summed lower bound with a fresh curve for `c`.
pub fn lower_bound_se_opt(
    ch: &ChannelState,
    budget: f64,
    c: &Constellation,
    params: &SystemParams,
) -> Result<AllocationResult> {
    lower_bound_se_opt_with(ch, budget, &LowerBoundCurve::new(c.clone()), params)
}

const SPG_MAX_ITER: usize = 20_000;

/// Spectral projected gradient in SNR coordinates `u_i = g_i p_i`, where the
/// budget reads `Σ u_i/g_i ≤ B`. Steps follow Barzilai–Borwein with Armijo
/// backtracking along the projection arc.
pub fn lower_bound_se_opt_with(
    ch: &ChannelState,
    budget: f64,
    curve: &LowerBoundCurve,
    params: &SystemParams,
) -> Result<AllocationResult> {
    check_budget(budget)?;
    let g_all = ch.snr_per_watt(params);
    let idx: Vec<usize> = (0..g_all.len()).filter(|&i| g_all[i] > 0.0).collect();
    if idx.is_empty() {
        return Err(Error::Infeasible("no subcarrier has a nonzero gain".into()));
    }
    let g: Vec<f64> = idx.iter().map(|&i| g_all[i]).collect();
    let cost: Vec<f64> = g.iter().map(|x| 1.0 / x).collect();
    let objective = |u: &[f64]| u.iter().map(|&s| curve.bits(s)).sum::<f64>();
    let gradient = |u: &[f64]| u.iter().map(|&s| curve.slope(s)).collect::<Vec<f64>>();

    let s_sat = curve.saturation_snr()?;
    let sat_cost: f64 = cost.iter().map(|c| c * s_sat).sum();
    let (u, iterations) = if sat_cost <= budget {
        (vec![s_sat; g.len()], 0)
    } else {
        let share = budget / g.len() as f64;
        let mut u: Vec<f64> = g.iter().map(|gi| gi * share).collect();
        let mut f = objective(&u);
        let mut grad = gradient(&u);
        let mut alpha = 1.0;
        let mut it = 0;
        loop {
            let probe: Vec<f64> = u.iter().zip(&grad).map(|(a, b)| a + b).collect();
            let pg = project_weighted_simplex(&probe, &cost, budget);
            let scale = 1.0 + u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let resid = pg
                .iter()
                .zip(&u)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
                / scale;
            if resid <= 1e-13 {
                break;
            }
            it += 1;
            if it > SPG_MAX_ITER {
                return Err(Error::SolverFailure(format!(
                    "projected gradient stalled with residual {resid:.3e}"
                )));
            }
            let mut step = alpha;
            let (next, f_next) = loop {
                let trial: Vec<f64> = u.iter().zip(&grad).map(|(a, b)| a + step * b).collect();
                let cand = project_weighted_simplex(&trial, &cost, budget);
                let f_cand = objective(&cand);
                let ascent: f64 = grad
                    .iter()
                    .zip(cand.iter().zip(&u))
                    .map(|(d, (a, b))| d * (a - b))
                    .sum();
                if f_cand >= f + 1e-4 * ascent || step < 1e-14 {
                    break (cand, f_cand);
                }
                step *= 0.5;
            };
            let grad_next = gradient(&next);
            let mut ss = 0.0;
            let mut sy = 0.0;
            for i in 0..u.len() {
                let s = next[i] - u[i];
                ss += s * s;
                sy += s * (grad_next[i] - grad[i]);
            }
            alpha = if sy < 0.0 {
                (ss / -sy).clamp(1e-10, 1e10)
            } else {
                1e10
            };
            if ss == 0.0 {
                break;
            }
            u = next;
            f = f_next;
            grad = grad_next;
        }
        (u, it)
    };

    let mut powers = vec![0.0; g_all.len()];
    for (k, &i) in idx.iter().enumerate() {
        powers[i] = u[k] / g[k];
    }
    let total: f64 = powers.iter().sum();
    if total > budget {
        let s = budget / total;
        powers.iter_mut().for_each(|p| *p *= s);
    }
    // marginal SE per watt on each subcarrier
    let marg: Vec<f64> = idx
        .iter()
        .map(|&i| g_all[i] * curve.slope(g_all[i] * powers[i]) / (2.0 * params.n as f64))
        .collect();
    let active: Vec<f64> = idx
        .iter()
        .zip(&marg)
        .filter(|(&i, _)| powers[i] > 0.0)
        .map(|(_, &m)| m)
        .collect();
    let nu = if active.is_empty() {
        0.0
    } else {
        active.iter().sum::<f64>() / active.len() as f64
    };
    let kkt = if iterations == 0 || nu == 0.0 {
        0.0
    } else {
        idx.iter().zip(&marg).fold(0.0f64, |r, (&i, &m)| {
            let v = if powers[i] > 0.0 {
                (m - nu).abs()
            } else {
                (m - nu).max(0.0)
            };
            r.max(v / nu)
        })
    };
    let alloc = PowerAllocation { powers };
    let rate: f64 = idx
        .iter()
        .map(|&i| params.w * curve.bits(g_all[i] * alloc.powers[i]))
        .sum();
    Ok(AllocationResult {
        budget_used: alloc.total(),
        objective: rate / params.total_bandwidth(),
        alloc,
        dual: nu,
        iterations,
        kkt_residual: kkt,
    })
}

/// Solves the SE problem for `model` at the given budget.
pub fn maximize_se(
    ch: &ChannelState,
    budget: f64,
    model: &RateModel,
    params: &SystemParams,
) -> Result<AllocationResult> {
    match model {
        RateModel::Gaussian => waterfill(ch, budget, params),
        RateModel::FiniteAlphabet(curve) => mercury_waterfill_with(ch, budget, curve, params),
        RateModel::LowerBound(curve) => lower_bound_se_opt_with(ch, budget, curve, params),
    }
}
