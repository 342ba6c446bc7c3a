//! Config-driven parameter sweeps and CSV output.
//!
//! A config is a TOML file. Every section is optional and falls back to the
//! reference link; budgets that are left out are unbounded.
//!
//! ```toml
//! modulation = "qam4"
//!
//! [system]
//! electrical_budget = 20.0
//! optical_budget = 0.25
//!
//! [sweep]
//! variable = "P"
//! grid = { start = 1e-3, stop = 20.0, points = 25, scale = "log" }
//! objective = "SE"
//! models = ["gaussian", "finite", "lower"]
//! ```

use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Deserialize;

use crate::channel::{reference_leds, subcarrier_gains, ChannelState, DiffuseParams, Geometry};
use crate::constellation::Constellation;
use crate::ee_alloc::ee_maximize;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;
use crate::rates::{total_rate, RateModel, SystemParams};
use crate::se_alloc::{effective_budget, maximize_se, AllocationResult};
use crate::waveform::{MonteCarloSetup, SymbolSource};

pub const CSV_HEADER: [&str; 10] = [
    "sweep_var",
    "sweep_value",
    "model",
    "objective",
    "value",
    "sum_power",
    "active_subcarriers",
    "dual",
    "iterations",
    "status",
];

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub n: usize,
    pub w: f64,
    pub noise_psd: f64,
    pub circuit_power: f64,
    pub electrical_budget: Option<f64>,
    pub optical_budget: Option<f64>,
    pub rate_floor: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        let t = SystemParams::reference();
        Self {
            n: t.n,
            w: t.w,
            noise_psd: t.noise_psd,
            circuit_power: t.circuit_power,
            electrical_budget: None,
            optical_budget: None,
            rate_floor: 0.0,
        }
    }
}

impl SystemSection {
    pub fn params(&self) -> SystemParams {
        SystemParams {
            n: self.n,
            w: self.w,
            noise_psd: self.noise_psd,
            electrical_budget: self.electrical_budget.unwrap_or(f64::INFINITY),
            optical_budget: self.optical_budget.unwrap_or(f64::INFINITY),
            circuit_power: self.circuit_power,
            rate_floor: self.rate_floor,
        }
    }
}

/// Room layout. Angles are in degrees and shared by every LED.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub leds: Vec<[f64; 3]>,
    pub receiver: [f64; 3],
    pub irradiance_deg: f64,
    pub incidence_deg: f64,
    pub half_power_deg: f64,
    pub fov_deg: f64,
    pub detector_area: f64,
    pub filter_gain: f64,
    pub concentrator_gain: f64,
    pub diffuse: DiffuseParams,
    /// Explicit subcarrier gain magnitudes; replaces the room model when set.
    pub gains: Option<Vec<f64>>,
}

impl Default for ChannelSection {
    fn default() -> Self {
        let leds = reference_leds();
        let g = &leds[0];
        Self {
            leds: leds.iter().map(|l| l.led_position).collect(),
            receiver: g.receiver_position,
            irradiance_deg: g.irradiance_angle.to_degrees(),
            incidence_deg: g.incidence_angle.to_degrees(),
            half_power_deg: g.half_power_angle.to_degrees(),
            fov_deg: g.fov.to_degrees(),
            detector_area: g.detector_area,
            filter_gain: g.filter_gain,
            concentrator_gain: g.concentrator_gain,
            diffuse: DiffuseParams::default(),
            gains: None,
        }
    }
}

impl ChannelSection {
    pub fn geometries(&self) -> Vec<Geometry> {
        self.leds
            .iter()
            .map(|&led| Geometry {
                led_position: led,
                receiver_position: self.receiver,
                irradiance_angle: self.irradiance_deg.to_radians(),
                incidence_angle: self.incidence_deg.to_radians(),
                half_power_angle: self.half_power_deg.to_radians(),
                detector_area: self.detector_area,
                fov: self.fov_deg.to_radians(),
                filter_gain: self.filter_gain,
                concentrator_gain: self.concentrator_gain,
            })
            .collect()
    }

    pub fn build(&self, params: &SystemParams) -> Result<ChannelState> {
        match &self.gains {
            Some(g) => {
                let want = params.data_subcarriers();
                if g.len() != want {
                    return Err(Error::DimensionMismatch {
                        expected: want,
                        got: g.len(),
                    });
                }
                if g.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                    return Err(Error::Config(
                        "channel gains must be finite and >= 0".into(),
                    ));
                }
                Ok(ChannelState::from_magnitudes(g, params.w))
            }
            None => {
                let leds = self.geometries();
                for l in &leds {
                    l.validate()?;
                }
                subcarrier_gains(&leds, &self.diffuse, params)
            }
        }
    }
}

/// Either a named alphabet or an explicit point list.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Modulation {
    Named(String),
    Points { points: Vec<[f64; 2]> },
}

impl Default for Modulation {
    fn default() -> Self {
        Modulation::Named("qam4".into())
    }
}

impl Modulation {
    pub fn constellation(&self) -> Result<Constellation> {
        match self {
            Modulation::Named(name) => Constellation::by_name(name),
            Modulation::Points { points } => Constellation::from_points(
                points
                    .iter()
                    .map(|&[re, im]| Complex64::new(re, im))
                    .collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum SweepVariable {
    P,
    #[serde(rename = "P_o")]
    Po,
    #[serde(rename = "r")]
    R,
}

impl SweepVariable {
    pub fn label(self) -> &'static str {
        match self {
            SweepVariable::P => "P",
            SweepVariable::Po => "P_o",
            SweepVariable::R => "r",
        }
    }

    fn apply(self, params: &mut SystemParams, v: f64) {
        match self {
            SweepVariable::P => params.electrical_budget = v,
            SweepVariable::Po => params.optical_budget = v,
            SweepVariable::R => params.rate_floor = v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Objective {
    SE,
    EE,
}

impl Objective {
    pub fn label(self) -> &'static str {
        match self {
            Objective::SE => "SE",
            Objective::EE => "EE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gaussian,
    Finite,
    Lower,
}

impl ModelKind {
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Gaussian => "gaussian",
            ModelKind::Finite => "finite",
            ModelKind::Lower => "lower",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridScale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        points: usize,
        #[serde(default)]
        scale: GridScale,
    },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            Grid::Values(v) => v.clone(),
            Grid::Range {
                start,
                stop,
                points,
                scale,
            } => {
                let (a, b, k) = (*start, *stop, *points);
                if k == 1 {
                    vec![a]
                } else {
                    match scale {
                        GridScale::Linear => (0..k)
                            .map(|i| a + (b - a) * i as f64 / (k - 1) as f64)
                            .collect(),
                        GridScale::Log => {
                            if !(a > 0.0 && b > 0.0) {
                                return Err(Error::Config(
                                    "log grid needs positive end points".into(),
                                ));
                            }
                            let (la, lb) = (a.log10(), b.log10());
                            (0..k)
                                .map(|i| 10f64.powf(la + (lb - la) * i as f64 / (k - 1) as f64))
                                .collect()
                        }
                    }
                }
            }
        };
        if v.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("sweep grid values must be finite".into()));
        }
        if v.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config(
                "sweep grid must be strictly increasing".into(),
            ));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVariable,
    pub grid: Grid,
    pub objective: Objective,
    pub models: Vec<ModelKind>,
    /// Added to emitted lower-bound values only.
    pub lower_bound_display_offset: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            variable: SweepVariable::P,
            grid: Grid::Range {
                start: 1e-3,
                stop: 20.0,
                points: 25,
                scale: GridScale::Log,
            },
            objective: Objective::SE,
            models: vec![ModelKind::Gaussian, ModelKind::Finite, ModelKind::Lower],
            lower_bound_display_offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<String>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveformSymbols {
    #[default]
    Gaussian,
    Alphabet,
}

/// Settings for `validate-waveform`. Without `powers`, `total_power` is
/// spread evenly over the data subcarriers.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformSection {
    pub frames: usize,
    pub symbols: WaveformSymbols,
    pub total_power: f64,
    pub powers: Option<Vec<f64>>,
}

impl Default for WaveformSection {
    fn default() -> Self {
        Self {
            frames: 100_000,
            symbols: WaveformSymbols::Gaussian,
            total_power: 1.0,
            powers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub modulation: Modulation,
    pub system: SystemSection,
    pub channel: ChannelSection,
    pub quadrature: QuadratureSpec,
    pub sweep: SweepSection,
    pub output: OutputSection,
    pub waveform: WaveformSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.params().validate()?;
        self.quadrature.validate()?;
        self.modulation.constellation()?;
        self.sweep.grid.values()?;
        if self.sweep.models.is_empty() {
            return Err(Error::Config("no models selected".into()));
        }
        let off = self.sweep.lower_bound_display_offset;
        if !(off >= 0.0 && off.is_finite()) {
            return Err(Error::Config(format!(
                "display offset {off} must be finite and >= 0"
            )));
        }
        Ok(())
    }

    /// Replaces the seed everywhere it is used.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.output.seed = seed;
        if let QuadratureSpec::MonteCarlo { seed: s, .. } = &mut self.quadrature {
            *s = seed;
        }
        self
    }

    pub fn waveform_setup(&self) -> Result<MonteCarloSetup> {
        let n = self.system.n;
        let powers = match &self.waveform.powers {
            Some(p) => p.clone(),
            None => vec![self.waveform.total_power / (n / 2).max(1) as f64; n / 2],
        };
        let symbols = match self.waveform.symbols {
            WaveformSymbols::Gaussian => SymbolSource::Gaussian,
            WaveformSymbols::Alphabet => SymbolSource::Alphabet(self.modulation.constellation()?),
        };
        Ok(MonteCarloSetup {
            n,
            powers,
            frames: self.waveform.frames,
            seed: self.output.seed,
            symbols,
        })
    }
}

/// One solved grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub sweep_var: &'static str,
    pub sweep_value: f64,
    pub model: ModelKind,
    pub objective: Objective,
    /// Emitted value: the objective plus `offset`.
    pub value: Option<f64>,
    pub raw_value: Option<f64>,
    pub se: Option<f64>,
    pub ee: Option<f64>,
    /// bits/s
    pub rate: Option<f64>,
    pub sum_power: Option<f64>,
    pub active: Option<usize>,
    pub dual: Option<f64>,
    pub iterations: Option<usize>,
    pub status: String,
    pub offset: f64,
    pub wall_time: f64,
}

impl SweepRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

fn build_model(kind: ModelKind, c: &Constellation, q: &QuadratureSpec) -> Result<RateModel> {
    Ok(match kind {
        ModelKind::Gaussian => RateModel::Gaussian,
        ModelKind::Finite => RateModel::finite(c.clone(), q.clone())?,
        ModelKind::Lower => RateModel::lower(c.clone()),
    })
}

fn solve_point(
    ch: &ChannelState,
    params: &SystemParams,
    model: &RateModel,
    objective: Objective,
) -> Result<(AllocationResult, f64)> {
    let res = match objective {
        Objective::SE => maximize_se(ch, effective_budget(params, model), model, params)?,
        Objective::EE => ee_maximize(ch, params, model)?,
    };
    let rate = total_rate(&res.alloc, ch, model, params)?;
    Ok((res, rate))
}

/// Solves every (model, grid value) pair. Rows come back ordered by model
/// and then by sweep value; a failing point is kept as a row whose status
/// holds the error.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let base = cfg.system.params();
    let ch = cfg.channel.build(&base)?;
    let c = cfg.modulation.constellation()?;
    let grid = cfg.sweep.grid.values()?;
    let mut kinds = cfg.sweep.models.clone();
    kinds.sort();
    kinds.dedup();
    let models: Vec<(ModelKind, RateModel)> = kinds
        .iter()
        .map(|&k| Ok((k, build_model(k, &c, &cfg.quadrature)?)))
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, f64)> = (0..models.len())
        .flat_map(|m| grid.iter().map(move |&v| (m, v)))
        .collect();
    let var = cfg.sweep.variable;
    let objective = cfg.sweep.objective;
    let records = jobs
        .par_iter()
        .map(|&(m, v)| {
            let (kind, model) = &models[m];
            let mut params = base.clone();
            var.apply(&mut params, v);
            let offset = if *kind == ModelKind::Lower {
                cfg.sweep.lower_bound_display_offset
            } else {
                0.0
            };
            let t0 = Instant::now();
            let out = params
                .validate()
                .and_then(|_| solve_point(&ch, &params, model, objective));
            let wall_time = t0.elapsed().as_secs_f64();
            let mut rec = SweepRecord {
                sweep_var: var.label(),
                sweep_value: v,
                model: *kind,
                objective,
                value: None,
                raw_value: None,
                se: None,
                ee: None,
                rate: None,
                sum_power: None,
                active: None,
                dual: None,
                iterations: None,
                status: "ok".into(),
                offset,
                wall_time,
            };
            match out {
                Ok((res, rate)) => {
                    let sum = res.alloc.total();
                    let se = rate / params.total_bandwidth();
                    let ee = rate / (2.0 * sum + params.circuit_power);
                    let raw = match objective {
                        Objective::SE => se,
                        Objective::EE => ee,
                    };
                    if raw.is_finite() {
                        rec.raw_value = Some(raw);
                        rec.value = Some(raw + offset);
                        rec.se = Some(se);
                        rec.ee = Some(ee);
                        rec.rate = Some(rate);
                        rec.sum_power = Some(sum);
                        rec.active = Some(res.alloc.active());
                        rec.dual = Some(res.dual);
                        rec.iterations = Some(res.iterations);
                    } else {
                        rec.status = format!("error: non-finite objective {raw}");
                    }
                }
                Err(e) => {
                    log::warn!("{} {}={v}: {e}", kind.label(), var.label());
                    rec.status = format!("error: {e}");
                }
            }
            rec
        })
        .collect();
    Ok(records)
}

fn num(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.11e}")).unwrap_or_default()
}

/// Writes the records as CSV. A `lower_bound_offset` column is appended when
/// any record carries a nonzero display offset.
pub fn emit_csv(records: &[SweepRecord], path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(records, file)
}

pub fn write_csv<W: std::io::Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let flagged = records.iter().any(|r| r.offset != 0.0);
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = CSV_HEADER.to_vec();
    if flagged {
        header.push("lower_bound_offset");
    }
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.sweep_var.to_string(),
            format!("{:.11e}", r.sweep_value),
            r.model.label().to_string(),
            r.objective.label().to_string(),
            num(r.value),
            num(r.sum_power),
            r.active.map(|a| a.to_string()).unwrap_or_default(),
            num(r.dual),
            r.iterations.map(|a| a.to_string()).unwrap_or_default(),
            r.status.clone(),
        ];
        if flagged {
            row.push(format!("{:.11e}", r.offset));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
