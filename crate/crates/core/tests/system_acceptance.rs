//! Acceptance run: one PASS/FAIL line per criterion.

mod common;

use std::f64::consts::{LN_2, PI};
use std::time::Instant;

use aco_alloc::channel::{reference_leds, subcarrier_gains};
use aco_alloc::ee_alloc::{dinkelbach, ee_maximize};
use aco_alloc::experiment::{run_sweep, ExperimentConfig, Objective, SweepRecord};
use aco_alloc::quadrature::moments;
use aco_alloc::rates::LowerBoundCurve;
use aco_alloc::se_alloc::{effective_budget, maximize_se, waterfill};
use aco_alloc::solver::LevelFamily;
use aco_alloc::waveform::{monte_carlo, MonteCarloSetup, SymbolSource};
use aco_alloc::{
    ChannelState, Constellation, DiffuseParams, QuadratureSpec, RateModel, SystemParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

fn room(p: Option<f64>, po: Option<f64>) -> SystemParams {
    SystemParams {
        electrical_budget: p.unwrap_or(f64::INFINITY),
        optical_budget: po.unwrap_or(f64::INFINITY),
        ..SystemParams::reference()
    }
}

fn reference_channel() -> ChannelState {
    subcarrier_gains(
        &reference_leds(),
        &DiffuseParams::default(),
        &SystemParams::reference(),
    )
    .unwrap()
}

fn logspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| 10f64.powf(a.log10() + (b.log10() - a.log10()) * i as f64 / (k - 1) as f64))
        .collect()
}

fn c1_mmse_identity() -> Outcome {
    let q = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for m in [4, 16] {
        let c = Constellation::qam(m).map_err(e)?;
        for s in logspace(0.05, 20.0, 20) {
            let h = 1e-4 * s;
            let up = moments(&c, s + h, &q).map_err(e)?.mi_nats;
            let dn = moments(&c, s - h, &q).map_err(e)?.mi_nats;
            let fd = (up - dn) / (2.0 * h);
            let mm = moments(&c, s, &q).map_err(e)?.mmse;
            let err = (fd - mm).abs();
            ensure(err <= (1e-3 * mm).max(1e-5), || {
                format!("M={m} s={s}: fd {fd} vs mmse {mm}")
            })?;
            worst = worst.max(err / mm.max(1e-300));
        }
    }
    Ok(format!("max relative gap {worst:.2e}"))
}

fn c2_bound_ordering() -> Outcome {
    let params = SystemParams::reference();
    let w = params.w;
    let mut checked = 0;
    for m in [4, 16] {
        let c = Constellation::qam(m).map_err(e)?;
        let lb = LowerBoundCurve::new(c.clone());
        let ceiling = w * (m as f64).log2();
        for (spec, k) in [
            (QuadratureSpec::default(), 0.0),
            (
                QuadratureSpec::MonteCarlo {
                    samples: 100_000,
                    seed: 11,
                },
                3.0,
            ),
        ] {
            for s in logspace(0.01, 100.0, 20) {
                let mo = moments(&c, s, &spec).map_err(e)?;
                let fa = w * mo.mi_nats / LN_2;
                let slack = k * w * mo.mi_err / LN_2 + 1e-12 * ceiling;
                let lower = w * lb.bits(s);
                let upper = ceiling.min(w * s.ln_1p() / LN_2);
                ensure(lower <= fa + slack, || {
                    format!("M={m} s={s}: lower {lower} > fa {fa}")
                })?;
                ensure(fa <= upper + slack, || {
                    format!("M={m} s={s}: fa {fa} > upper {upper}")
                })?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} points, adaptive and Monte Carlo"))
}

fn c3_se_oracle() -> Outcome {
    let mut rng = ChaCha12Rng::seed_from_u64(3);
    let params = SystemParams {
        n: 8,
        ..SystemParams::reference()
    };
    let qpsk = Constellation::qam(4).map_err(e)?;
    let pts = common::qpsk_points();
    let finite = RateModel::finite(qpsk.clone(), QuadratureSpec::default()).map_err(e)?;
    let lower = RateModel::lower(qpsk);
    let scale = params.w / params.total_bandwidth();
    let mut worst: f64 = f64::NEG_INFINITY;
    for inst in 0..10 {
        let g: Vec<f64> = (0..4)
            .map(|_| 10f64.powf(rng.random_range(-0.7..1.7)))
            .collect();
        let budget = rng.random_range(0.2..4.0);
        let ch = common::channel_from_snr(&g, &params);
        let cases: [(&str, &RateModel, Box<dyn Fn(usize, f64) -> f64>); 3] = [
            (
                "gaussian",
                &RateModel::Gaussian,
                Box::new(|i, p| (g[i] * p).ln_1p() / LN_2),
            ),
            (
                "finite",
                &finite,
                Box::new(|i, p| common::qpsk_mi_nats(g[i] * p) / LN_2),
            ),
            (
                "lower",
                &lower,
                Box::new(|i, p| common::lower_bound_bits(&pts, g[i] * p)),
            ),
        ];
        for (name, model, f) in cases.iter() {
            let got = maximize_se(&ch, budget, model, &params)
                .map_err(e)?
                .objective;
            let oracle = scale * common::se_grid(4, budget, 1000, f);
            let rel = (oracle - got) / oracle.abs();
            ensure(rel <= 1e-4, || {
                format!("instance {inst} {name}: solver {got} < grid {oracle}")
            })?;
            worst = worst.max(rel);
        }
    }
    Ok(format!("30 solves, largest shortfall vs grid {worst:.2e}"))
}

fn c4_kkt() -> Outcome {
    let ch = reference_channel();
    let params = SystemParams::reference();
    let (mut wf, mut mw): (f64, f64) = (0.0, 0.0);
    for m in [4, 16] {
        let c = Constellation::qam(m).map_err(e)?;
        let model = RateModel::finite(c, QuadratureSpec::default()).map_err(e)?;
        for b in [0.01, 0.1, 1.0, 10.0] {
            let r = waterfill(&ch, b, &params).map_err(e)?;
            ensure(r.kkt_residual <= 1e-8, || {
                format!("water level spread {} at P={b}", r.kkt_residual)
            })?;
            wf = wf.max(r.kkt_residual);
            let r = maximize_se(&ch, b, &model, &params).map_err(e)?;
            ensure(r.kkt_residual <= 1e-6, || {
                format!("M={m} P={b}: g·mmse spread {}", r.kkt_residual)
            })?;
            mw = mw.max(r.kkt_residual);
        }
    }
    Ok(format!("water level {wf:.1e}, marginal mmse {mw:.1e}"))
}

fn base_cfg(extra: &str) -> Result<ExperimentConfig, String> {
    ExperimentConfig::from_toml(extra).map_err(e)
}

fn rows<'a>(r: &'a [SweepRecord], model: &str) -> Vec<&'a SweepRecord> {
    r.iter().filter(|x| x.model.label() == model).collect()
}

fn c5_saturation(all: &mut Vec<(SweepRecord, SystemParams)>) -> Outcome {
    let params = SystemParams::reference();
    let ch = reference_channel();
    let p_large: f64 = ch.snr_per_watt(&params).iter().map(|g| 30.0 / g).sum();
    let offset = (1.0 / LN_2 - 1.0) / 4.0;
    let cfg = base_cfg(&format!(
        "[sweep]\nvariable = \"P\"\ngrid = [{}, {}, {}]\nmodels = [\"gaussian\", \"finite\", \"lower\"]\nlower_bound_display_offset = {offset}\n",
        p_large,
        10.0 * p_large,
        100.0 * p_large
    ))?;
    let recs = run_sweep(&cfg).map_err(e)?;
    ensure(recs.iter().all(|r| r.is_ok()), || "a solve failed".into())?;
    for (f, (l, g)) in rows(&recs, "finite")
        .iter()
        .zip(rows(&recs, "lower").iter().zip(rows(&recs, "gaussian")))
    {
        let (fv, lv, gv) = (f.value.unwrap(), l.value.unwrap(), g.value.unwrap());
        ensure((fv - 0.5).abs() <= 1e-3, || {
            format!("SE_finite {fv} at P={}", f.sweep_value)
        })?;
        ensure((lv - 0.5).abs() <= 1e-3, || {
            format!("SE_lower {lv} at P={}", l.sweep_value)
        })?;
        ensure(gv > fv && gv > l.raw_value.unwrap() && gv > lv, || {
            format!("SE_gaussian {gv} not above")
        })?;
    }
    let f = rows(&recs, "finite")[0].value.unwrap();
    let l = rows(&recs, "lower")[0];
    all.extend(recs.iter().cloned().map(|r| (r, params.clone())));
    Ok(format!(
        "P ≥ {p_large:.1} W: SE_finite {f:.7}, SE_lower {:.7} (raw {:.7} + offset {offset:.7})",
        l.value.unwrap(),
        l.raw_value.unwrap()
    ))
}

fn c6_budget_caps(all: &mut Vec<(SweepRecord, SystemParams)>) -> Outcome {
    let cap_g = 4.0 * PI;
    let cfg = base_cfg(&format!(
        "[system]\noptical_budget = 0.25\n[sweep]\nvariable = \"P\"\ngrid = [0.1, 0.25, 1.0, 5.0, {cap_g}, 15.0, 20.0, 50.0]\nmodels = [\"gaussian\", \"finite\", \"lower\"]\n"
    ))?;
    let recs = run_sweep(&cfg).map_err(e)?;
    ensure(recs.iter().all(|r| r.is_ok()), || "a solve failed".into())?;
    let qpsk = RateModel::lower(Constellation::qam(4).map_err(e)?);
    let p = room(Some(20.0), Some(0.25));
    ensure(
        (effective_budget(&p, &RateModel::Gaussian) - cap_g).abs() <= 1e-12 * cap_g,
        || "Gaussian cap".into(),
    )?;
    ensure((effective_budget(&p, &qpsk) - 0.25).abs() <= 1e-15, || {
        "QPSK cap".into()
    })?;
    let mut used = Vec::new();
    for (model, cap) in [("gaussian", cap_g), ("finite", 0.25), ("lower", 0.25)] {
        let r = rows(&recs, model);
        let beyond: Vec<&&SweepRecord> = r.iter().filter(|x| x.sweep_value >= cap).collect();
        for x in &beyond {
            let s = x.sum_power.unwrap();
            // mercury stops once the budget is met to 1e-8 relative
            ensure((s - cap).abs() <= 1e-8 * cap, || {
                format!("{model} uses {s} W at P={}", x.sweep_value)
            })?;
            ensure(x.value == beyond[0].value, || {
                format!("{model} SE not flat beyond the cap")
            })?;
        }
        ensure(r.windows(2).all(|w| w[1].value >= w[0].value), || {
            format!("{model} SE decreases in P")
        })?;
        used.push(format!("{model} {:.6} W", beyond[0].sum_power.unwrap()));
    }
    let params = cfg.system.params();
    all.extend(recs.into_iter().map(|r| {
        let mut p = params.clone();
        p.electrical_budget = r.sweep_value;
        (r, p)
    }));
    Ok(used.join(", "))
}

fn c7_dinkelbach() -> Outcome {
    let ch = reference_channel();
    let qpsk = Constellation::qam(4).map_err(e)?;
    let models = [
        RateModel::Gaussian,
        RateModel::finite(qpsk.clone(), QuadratureSpec::default()).map_err(e)?,
        RateModel::lower(qpsk),
    ];
    let mut iters = 0;
    let mut last_abs: f64 = 0.0;
    let mut last_rel: f64 = 0.0;
    for m in &models {
        for frac in [0.0, 0.5, 0.95] {
            let mut params = room(Some(20.0), Some(1.0));
            let max = dinkelbach(&ch, &params, m).map_err(e)?.max_rate;
            params.rate_floor = frac * max;
            let s = dinkelbach(&ch, &params, m).map_err(e)?;
            let qs: Vec<f64> = s
                .history
                .iter()
                .map(|h| h.q)
                .chain([s.result.dual])
                .collect();
            ensure(qs.windows(2).all(|w| w[1] >= w[0]), || {
                format!("{} q decreased", m.name())
            })?;
            let n = qs.len();
            let step = qs[n - 1] - qs[n - 2];
            ensure(step <= 1e-8 * qs[n - 1], || {
                format!("{} final step {step}", m.name())
            })?;
            ensure(s.result.iterations <= 50, || "too many iterations".into())?;
            let g = ch.snr_per_watt(&params);
            let fam = LevelFamily::new(m, &g, params.w);
            let rate = fam.rate(&s.result.alloc.powers).map_err(e)?;
            let b = effective_budget(&params, m);
            ensure(s.result.budget_used <= b * (1.0 + 1e-12), || {
                format!("{} over budget", m.name())
            })?;
            ensure(rate >= params.rate_floor * (1.0 - 1e-12), || {
                format!("{} below floor", m.name())
            })?;
            iters = iters.max(s.result.iterations);
            last_abs = last_abs.max(step);
            last_rel = last_rel.max(step / qs[n - 1]);
        }
    }

    // oracle on four reference-room subcarriers
    let full = SystemParams::reference();
    let g_all = ch.snr_per_watt(&full);
    let pick = [0usize, 9, 20, 31];
    let g: Vec<f64> = pick.iter().map(|&i| g_all[i]).collect();
    let small = SystemParams {
        n: 8,
        electrical_budget: 20.0,
        optical_budget: 1.0,
        ..full
    };
    let sub = common::channel_from_snr(&g, &small);
    let pts = common::qpsk_points();
    let qpsk = Constellation::qam(4).map_err(e)?;
    let finite = RateModel::finite(qpsk.clone(), QuadratureSpec::default()).map_err(e)?;
    let lower = RateModel::lower(qpsk);
    let w = small.w;
    let cases: [(&RateModel, Box<dyn Fn(usize, f64) -> f64>); 3] = [
        (
            &RateModel::Gaussian,
            Box::new(|i, p| w * (g[i] * p).ln_1p() / LN_2),
        ),
        (
            &finite,
            Box::new(|i, p| w * common::qpsk_mi_nats(g[i] * p) / LN_2),
        ),
        (
            &lower,
            Box::new(|i, p| w * common::lower_bound_bits(&pts, g[i] * p)),
        ),
    ];
    let mut worst: f64 = 0.0;
    for (m, f) in cases.iter() {
        let max = dinkelbach(&sub, &small, m).map_err(e)?.max_rate;
        for frac in [0.0, 0.9] {
            let params = SystemParams {
                rate_floor: frac * max,
                ..small.clone()
            };
            let got = ee_maximize(&sub, &params, m).map_err(e)?.objective;
            let b = effective_budget(&params, m);
            let oracle = common::ee_grid(4, b, params.rate_floor, params.circuit_power, f)
                .ok_or_else(|| "oracle found no feasible point".to_string())?;
            let rel = (got - oracle).abs() / oracle;
            ensure(rel <= 1e-4, || {
                format!(
                    "{} r={}: EE {got} vs grid {oracle}",
                    m.name(),
                    params.rate_floor
                )
            })?;
            worst = worst.max(rel);
        }
    }
    Ok(format!(
        "≤ {iters} iterations, last |Δq| {last_abs:.2e} bits/s/W ({last_rel:.1e} relative), oracle gap {worst:.1e}"
    ))
}

fn c8_ee_vs_r(all: &mut Vec<(SweepRecord, SystemParams)>) -> Outcome {
    let ch = reference_channel();
    let params = room(Some(20.0), Some(1.0));
    let mut detail = Vec::new();
    let mut failures = Vec::new();
    for model in ["gaussian", "finite", "lower"] {
        let m = match model {
            "gaussian" => RateModel::Gaussian,
            "finite" => {
                RateModel::finite(Constellation::qam(4).map_err(e)?, QuadratureSpec::default())
                    .map_err(e)?
            }
            _ => RateModel::lower(Constellation::qam(4).map_err(e)?),
        };
        let max = dinkelbach(&ch, &params, &m).map_err(e)?.max_rate;
        let grid: Vec<String> = (0..=24)
            .map(|i| format!("{:e}", max * 1.2 * i as f64 / 24.0))
            .collect();
        let cfg = base_cfg(&format!(
            "[system]\nelectrical_budget = 20.0\noptical_budget = 1.0\n[sweep]\nvariable = \"r\"\nobjective = \"EE\"\ngrid = [{}]\nmodels = [\"{model}\"]\n",
            grid.join(", ")
        ))?;
        let recs = run_sweep(&cfg).map_err(e)?;
        let verdict = ee_shape(&recs, max);
        match verdict {
            Ok(d) => detail.push(format!("{model} {d}")),
            Err(d) => failures.push(format!("{model}: {d}")),
        }
        all.extend(recs.into_iter().map(|r| {
            let mut p = params.clone();
            p.rate_floor = r.sweep_value;
            (r, p)
        }));
    }
    if failures.is_empty() {
        Ok(detail.join("; "))
    } else {
        Err(failures
            .into_iter()
            .chain(detail)
            .collect::<Vec<_>>()
            .join("; "))
    }
}

fn ee_shape(recs: &[SweepRecord], max: f64) -> Outcome {
    let ok: Vec<&SweepRecord> = recs.iter().filter(|r| r.is_ok()).collect();
    let bad = recs.len() - ok.len();
    ensure(
        recs.iter().all(|r| r.is_ok() == (r.sweep_value <= max)),
        || "feasibility of a rate floor misreported".into(),
    )?;
    ensure(recs.iter().all(|r| r.is_ok() || r.value.is_none()), || {
        "infeasible r produced a number".into()
    })?;
    let top = ok[0].value.unwrap();
    let flat = ok
        .iter()
        .take_while(|r| (r.value.unwrap() - top).abs() <= 1e-9 * top)
        .count();
    ensure(flat >= 2, || "EE not constant at small r".into())?;
    let tail = &ok[flat - 1..];
    ensure(tail.len() >= 3, || {
        format!(
            "EE constant at {top:.6e} over every feasible r ({flat} points), no decreasing branch"
        )
    })?;
    ensure(
        tail.windows(2)
            .all(|w| w[1].value.unwrap() < w[0].value.unwrap()),
        || "EE not strictly decreasing after the knee".into(),
    )?;
    Ok(format!("flat {flat}/decr {}/err {bad}", tail.len() - 1))
}

fn c9_tight_budget() -> Outcome {
    let ch = reference_channel();
    let mut worst: f64 = 0.0;
    for b in [1e-4, 1e-3, 1e-2] {
        let params = room(Some(b), None);
        let free = ee_maximize(&ch, &room(None, None), &RateModel::Gaussian).map_err(e)?;
        ensure(free.budget_used > b, || format!("budget {b} does not bind"))?;
        let ee = ee_maximize(&ch, &params, &RateModel::Gaussian).map_err(e)?;
        let wf = waterfill(&ch, b, &params).map_err(e)?;
        for (x, y) in ee.alloc.powers.iter().zip(&wf.alloc.powers) {
            ensure((x - y).abs() <= 1e-6, || format!("P={b}: {x} vs {y}"))?;
            worst = worst.max((x - y).abs());
        }
    }
    Ok(format!("max entry difference {worst:.1e} W"))
}

fn c10_waveform() -> Outcome {
    let ch = reference_channel();
    let params = SystemParams::reference();
    let powers = waterfill(&ch, 5.0, &params).map_err(e)?.alloc.powers;
    let setup = MonteCarloSetup {
        n: 64,
        powers: powers.clone(),
        frames: 100_000,
        seed: 10,
        symbols: SymbolSource::Gaussian,
    };
    let r = monte_carlo(&setup).map_err(e)?;
    let qpsk = MonteCarloSetup {
        symbols: SymbolSource::Alphabet(Constellation::qam(4).map_err(e)?),
        ..setup.clone()
    };
    let rq = monte_carlo(&qpsk).map_err(e)?;
    let halving = (r.power_clipped - 0.5 * r.power_unclipped).abs() / (0.5 * r.power_unclipped);
    let optical = (r.optical_mean - r.optical_reference).abs() / r.optical_reference;
    let corrected = (r.optical_mean - r.optical_gaussian).abs() / r.optical_gaussian;
    let detail = format!(
        "antisym {:.1e}, half-amp {:.1e}, halving {:.2e}, E{{x̂}} {:.5e} vs √(Σp/(πN)) {:.5e} (off {:.1}%), vs √(Σp/(2πN)) off {:.2}%, QPSK mean {:.4e} ≤ bound {:.4e}",
        r.antisymmetry_max.max(rq.antisymmetry_max),
        r.half_amplitude_max.max(rq.half_amplitude_max),
        halving,
        r.optical_mean,
        r.optical_reference,
        100.0 * optical,
        100.0 * corrected,
        rq.optical_mean,
        rq.optical_bound
    );
    let ok = r.antisymmetry_max <= 1e-9
        && rq.antisymmetry_max <= 1e-9
        && r.half_amplitude_max <= 1e-9
        && rq.half_amplitude_max <= 1e-9
        && halving <= 1e-2
        && optical <= 2e-2
        && rq.optical_mean <= rq.optical_bound;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c11_ee_se_identity(all: &[(SweepRecord, SystemParams)]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (r, p) in all.iter().filter(|(r, _)| r.is_ok()) {
        let (se, ee, sum) = (r.se.unwrap(), r.ee.unwrap(), r.sum_power.unwrap());
        let from_se = se * p.total_bandwidth() / (2.0 * sum + p.circuit_power);
        let rel = (from_se - ee).abs() / ee.abs().max(f64::MIN_POSITIVE);
        ensure(rel <= 1e-12, || {
            format!(
                "{} at {}={}: {ee} vs {from_se}",
                r.model.label(),
                r.sweep_var,
                r.sweep_value
            )
        })?;
        let raw = match r.objective {
            Objective::SE => se,
            Objective::EE => ee,
        };
        ensure(r.value.unwrap() == raw + r.offset, || {
            "emitted value does not match".into()
        })?;
        worst = worst.max(rel);
        count += 1;
    }
    Ok(format!("{count} records, max relative gap {worst:.1e}"))
}

fn c12_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(e)?;
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(
        &cfg,
        "[system]\nelectrical_budget = 20.0\noptical_budget = 1.0\n[sweep]\nvariable = \"P_o\"\ngrid = { start = 0.01, stop = 1.0, points = 6, scale = \"log\" }\nmodels = [\"gaussian\", \"finite\", \"lower\"]\nlower_bound_display_offset = 0.1\n",
    )
    .map_err(e)?;
    let bin = env!("CARGO_BIN_EXE_aco-alloc");
    let mut outs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}.csv"));
        let st = std::process::Command::new(bin)
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(["--seed", "42"])
            .status()
            .map_err(e)?;
        ensure(st.success(), || format!("run {k} exited with {st}"))?;
        outs.push(std::fs::read(&out).map_err(e)?);
    }
    ensure(outs[0] == outs[1], || "CSV differs between runs".into())?;
    Ok(format!("{} bytes identical", outs[0].len()))
}

fn main() {
    let mut all = Vec::new();
    let mut failed = 0;
    let mut report = |id: &str, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let out = f();
        let dt = t0.elapsed().as_secs_f64();
        let (tag, detail) = match out {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {id:>2} {name}: {detail} [{dt:.1}s]");
    };
    report("1", "mmse equals d(MI)/d(snr)", &mut c1_mmse_identity);
    report("2", "bound ordering", &mut c2_bound_ordering);
    report("3", "SE vs brute-force grid", &mut c3_se_oracle);
    report("4", "KKT residuals", &mut c4_kkt);
    report("5", "SE saturation", &mut || c5_saturation(&mut all));
    report("6", "budget caps", &mut || c6_budget_caps(&mut all));
    report("7", "Dinkelbach", &mut c7_dinkelbach);
    report("8", "EE vs rate floor", &mut || c8_ee_vs_r(&mut all));
    report("9", "tight-budget equivalence", &mut c9_tight_budget);
    report("10", "waveform identities", &mut c10_waveform);
    report("11", "EE-SE identity", &mut || c11_ee_se_identity(&all));
    report("12", "determinism", &mut c12_determinism);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
