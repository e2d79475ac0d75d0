//! The multiple-scattering iteration: each step solves the single-obstacle
//! equation with the previous scattered field as data, then attaches the
//! broken-ray phase, the illuminated/shadow partition and the demodulated
//! envelope. Also spectral differentiation and the k-sweep scaling report.

use crate::bie::{
    assemble_with, eval_dlp, incident_trace, BoundaryGrid, Content, DensityField, FieldMeta, NystromSystem, DEFAULT_PPW,
};
use crate::error::{Error, Result};
use crate::geometry::{certify_conditions, Scene, PERIOD};
use crate::rays::{classify_with_rays, rays_on_grid, PhasePartition};
use log::{info, warn};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;
use std::sync::Arc;

/// Fraction of the illuminated arc used for the slow-variation checks.
pub const LIT_CORE: f64 = 0.6;

/// One step of the iteration.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub m: usize,
    pub obstacle: usize,
    pub eta: DensityField,
    pub phi: DensityField,
    pub eta_slow: DensityField,
    pub partition: PhasePartition,
}

/// Grids for every obstacle at `ppw` points per wavelength.
pub fn default_grids(scene: &Scene, ppw: f64, min_n: usize) -> Result<Vec<Arc<BoundaryGrid>>> {
    scene
        .obstacles
        .iter()
        .enumerate()
        .map(|(i, c)| BoundaryGrid::for_wavenumber(c, i, scene.k, ppw, min_n).map(Arc::new))
        .collect()
}

/// Resumable iteration driver. Each obstacle's system is assembled once and
/// reused by every later step that returns to it.
pub struct Driver {
    scene: Scene,
    grids: Vec<Arc<BoundaryGrid>>,
    systems: Vec<Option<NystromSystem>>,
    ppw: f64,
    amplitude: Complex64,
    next_m: usize,
    prev: Option<DensityField>,
}

impl Driver {
    pub fn new(scene: Scene, grids: Vec<Arc<BoundaryGrid>>) -> Result<Self> {
        if grids.len() != scene.obstacles.len() {
            return Err(Error::Domain(format!("{} grids for {} obstacles", grids.len(), scene.obstacles.len())));
        }
        if scene.is_multiple() {
            certify_conditions(&scene)?.require()?;
        }
        let systems = (0..grids.len()).map(|_| None).collect();
        Ok(Self { scene, grids, systems, ppw: DEFAULT_PPW, amplitude: Complex64::new(1.0, 0.0), next_m: 0, prev: None })
    }

    /// Resolution floor enforced at assembly.
    pub fn with_ppw(mut self, ppw: f64) -> Self {
        self.ppw = ppw;
        self
    }

    /// Scale the incident wave by `c`.
    pub fn with_amplitude(mut self, c: Complex64) -> Self {
        self.amplitude = c;
        self
    }

    /// Continue after a stored record: `eta` is the density of step `next_m - 1`.
    pub fn resume_from(mut self, next_m: usize, eta: DensityField) -> Result<Self> {
        if next_m == 0 || eta.meta.m + 1 != next_m {
            return Err(Error::Domain(format!("cannot resume at step {next_m} from density of step {}", eta.meta.m)));
        }
        if eta.meta.obstacle != self.scene.obstacle_index(next_m - 1) {
            return Err(Error::Domain("stored density lives on the wrong obstacle".into()));
        }
        self.next_m = next_m;
        self.prev = Some(eta);
        Ok(self)
    }

    pub fn next_m(&self) -> usize {
        self.next_m
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn grids(&self) -> &[Arc<BoundaryGrid>] {
        &self.grids
    }

    /// The factorised system for obstacle `i` (assembled on first use).
    pub fn system(&mut self, i: usize) -> Result<&NystromSystem> {
        if self.systems[i].is_none() {
            let sys = assemble_with(&self.grids[i], self.scene.k, self.ppw)?;
            info!("obstacle {i}: N = {}, condition ~ {:.3e}", self.grids[i].len(), sys.condition_estimate());
            self.systems[i] = Some(sys);
        }
        Ok(self.systems[i].as_ref().expect("assembled above"))
    }

    /// Solve the next step and return its record.
    pub fn step(&mut self) -> Result<IterationRecord> {
        let m = self.next_m;
        if m > 0 && !self.scene.is_multiple() {
            return Err(Error::Precondition("single-obstacle sequence stops after m = 0".into()));
        }
        let k = self.scene.k;
        let obstacle = self.scene.obstacle_index(m);
        let grid = self.grids[obstacle].clone();
        let data: Vec<Complex64> = match &self.prev {
            None => incident_trace(&grid, self.scene.alpha, k).values.iter().map(|v| v * self.amplitude).collect(),
            Some(prev) => eval_dlp(prev, k, &grid.points)?,
        };
        let rhs_values: Vec<Complex64> = data.iter().map(|v| v * 2.0).collect();
        let meta = FieldMeta { m, obstacle, k, content: Content::Trace };
        let rhs = DensityField::new(grid.clone(), rhs_values, meta)?;
        let eta = self.system(obstacle)?.solve(&rhs)?;
        let record = attach_phase(&self.scene, m, eta)?;
        self.prev = Some(record.eta.clone());
        self.next_m = m + 1;
        Ok(record)
    }
}

/// Attach phase, partition and envelope to a solved density of step `m`.
pub fn attach_phase(scene: &Scene, m: usize, eta: DensityField) -> Result<IterationRecord> {
    let grid = eta.grid.clone();
    let rays = rays_on_grid(scene, m, &grid.params)?;
    let partition = classify_with_rays(scene, m, &grid.params, &rays)?;
    let phase_vals = rays.iter().map(|r| Complex64::new(r.phase, 0.0)).collect();
    let phi = eta.with_values(phase_vals, Content::Phase)?;
    let eta_slow = extract_slow(&eta, &phi)?;
    Ok(IterationRecord { m, obstacle: grid.obstacle(), eta, phi, eta_slow, partition })
}

/// Run steps `0 ..= max_m`.
pub fn iterate(scene: &Scene, max_m: usize, grids: Vec<Arc<BoundaryGrid>>) -> Result<Vec<IterationRecord>> {
    let mut driver = Driver::new(scene.clone(), grids)?;
    (0..=max_m).map(|_| driver.step()).collect()
}

/// `e^{-ik phi} eta` pointwise.
pub fn extract_slow(eta: &DensityField, phi: &DensityField) -> Result<DensityField> {
    if !Arc::ptr_eq(&eta.grid, &phi.grid) && eta.grid.params != phi.grid.params {
        return Err(Error::Domain("phase and density live on different grids".into()));
    }
    let k = eta.meta.k;
    let values = eta.values.iter().zip(&phi.values).map(|(v, p)| v * Complex64::from_polar(1.0, -k * p.re)).collect();
    eta.with_values(values, Content::Envelope)
}

/// `d^n f / dt^n` by Fourier differentiation on the periodic grid. A
/// warning is logged when the top tenth of the spectrum is not below
/// `1e-10` of its peak.
pub fn spectral_derivative(f: &DensityField, n: u32) -> Result<DensityField> {
    let values = spectral_derivative_values(&f.values, n)?;
    f.with_values(values, Content::Trace)
}

pub fn spectral_derivative_values(values: &[Complex64], n: u32) -> Result<Vec<Complex64>> {
    let len = values.len();
    if len < 2 || !len.is_multiple_of(2) {
        return Err(Error::Domain(format!("spectral derivative needs an even grid, got {len}")));
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut buf = values.to_vec();
    planner.plan_fft_forward(len).process(&mut buf);
    let peak = buf.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let band = len / 20;
    let tail = (len / 2 - band..len / 2 + band).map(|i| buf[i].norm()).fold(0.0, f64::max);
    if peak > 0.0 && tail > 1e-10 * peak {
        warn!("spectrum not resolved: tail/peak = {:.3e}", tail / peak);
    }
    let scale = 2.0 * std::f64::consts::PI / PERIOD;
    for (i, c) in buf.iter_mut().enumerate() {
        let freq = if i < len / 2 { i as f64 } else { i as f64 - len as f64 };
        let factor = if i == len / 2 && n % 2 == 1 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, freq * scale).powu(n)
        };
        *c *= factor / len as f64;
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    Ok(buf)
}

/// `k^{-1/3} + |omega(t)|` with `omega(s) = s (L - s)`, `s` measured from
/// the start of the illuminated arc of length `L`.
pub fn weight_w(partition: &PhasePartition, k: f64, t: f64) -> f64 {
    let s = partition.offset(t);
    k.powf(-1.0 / 3.0) + (s * (partition.lit_len - s)).abs()
}

/// Measurements behind the scaling laws, one entry per wavenumber.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub m: usize,
    pub ks: Vec<f64>,
    pub grid_sizes: Vec<usize>,
    /// `sup |D_t^n eta^slow|` over the lit core, indexed `[n][k]`, n = 0, 1, 2
    pub lit_sup_slow: Vec<Vec<f64>>,
    /// the same for the raw density `eta`
    pub lit_sup_raw: Vec<Vec<f64>>,
    /// `sup_t |D_t^n eta^slow| W^n` over the whole boundary
    pub weighted_sup: Vec<Vec<f64>>,
    /// `|eta|` at the node nearest the middle of the shadow arc
    pub shadow_magnitude: Vec<f64>,
    /// `|eta^slow - 2|` at the node nearest the middle of the lit arc
    pub lit_center_deviation: Vec<f64>,
    /// consecutive ratios of the series above
    pub lit_slow_ratio: Vec<Vec<f64>>,
    pub lit_raw_ratio: Vec<Vec<f64>>,
    pub shadow_ratio: Vec<f64>,
    pub lit_center_ratio: Vec<f64>,
}

fn ratios(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| w[1] / w[0]).collect()
}

/// Measurements of one record.
#[derive(Debug, Clone)]
pub struct RecordScaling {
    pub lit_sup_slow: [f64; 3],
    pub lit_sup_raw: [f64; 3],
    pub weighted_sup: [f64; 3],
    pub shadow_magnitude: f64,
    pub lit_center_deviation: f64,
}

pub fn measure_record(rec: &IterationRecord) -> Result<RecordScaling> {
    let k = rec.eta.meta.k;
    let part = &rec.partition;
    let params = &rec.eta.grid.params;
    let mut out = RecordScaling {
        lit_sup_slow: [0.0; 3],
        lit_sup_raw: [0.0; 3],
        weighted_sup: [0.0; 3],
        shadow_magnitude: 0.0,
        lit_center_deviation: 0.0,
    };
    let core: Vec<usize> = (0..params.len()).filter(|&i| part.in_lit_core(params[i], LIT_CORE)).collect();
    for n in 0..3u32 {
        let (ds, dr) = if n == 0 {
            (rec.eta_slow.values.clone(), rec.eta.values.clone())
        } else {
            (spectral_derivative_values(&rec.eta_slow.values, n)?, spectral_derivative_values(&rec.eta.values, n)?)
        };
        out.lit_sup_slow[n as usize] = core.iter().map(|&i| ds[i].norm()).fold(0.0, f64::max);
        out.lit_sup_raw[n as usize] = core.iter().map(|&i| dr[i].norm()).fold(0.0, f64::max);
        out.weighted_sup[n as usize] = params
            .iter()
            .enumerate()
            .map(|(i, &t)| ds[i].norm() * weight_w(part, k, t).powi(n as i32))
            .fold(0.0, f64::max);
    }
    out.shadow_magnitude = rec.eta.values[nearest_node(params, part.shadow_center())].norm();
    let lc = nearest_node(params, part.lit_center());
    out.lit_center_deviation = (rec.eta_slow.values[lc] - 2.0).norm();
    Ok(out)
}

/// Index of the grid node closest (cyclically) to `t`.
pub fn nearest_node(params: &[f64], t: f64) -> usize {
    let dist = |a: f64| {
        let d = (a - t).rem_euclid(PERIOD);
        d.min(PERIOD - d)
    };
    (0..params.len()).min_by(|&a, &b| dist(params[a]).total_cmp(&dist(params[b]))).unwrap_or(0)
}

/// Run the iteration to step `m` for each wavenumber and collect the scaling
/// measurements on record `m`.
pub fn scaling_report(scene: &Scene, m: usize, k_list: &[f64], ppw: f64) -> Result<ScalingReport> {
    if k_list.is_empty() || k_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("k list must be non-empty and increasing".into()));
    }
    let mut rep = ScalingReport {
        m,
        ks: k_list.to_vec(),
        grid_sizes: Vec::new(),
        lit_sup_slow: vec![Vec::new(); 3],
        lit_sup_raw: vec![Vec::new(); 3],
        weighted_sup: vec![Vec::new(); 3],
        shadow_magnitude: Vec::new(),
        lit_center_deviation: Vec::new(),
        lit_slow_ratio: Vec::new(),
        lit_raw_ratio: Vec::new(),
        shadow_ratio: Vec::new(),
        lit_center_ratio: Vec::new(),
    };
    for &k in k_list {
        let sk = scene.with_k(k)?;
        let grids = default_grids(&sk, ppw, 0)?;
        let mut driver = Driver::new(sk, grids)?.with_ppw(ppw);
        let mut rec = driver.step()?;
        while rec.m < m {
            rec = driver.step()?;
        }
        let meas = measure_record(&rec)?;
        rep.grid_sizes.push(rec.eta.grid.len());
        for n in 0..3 {
            rep.lit_sup_slow[n].push(meas.lit_sup_slow[n]);
            rep.lit_sup_raw[n].push(meas.lit_sup_raw[n]);
            rep.weighted_sup[n].push(meas.weighted_sup[n]);
        }
        rep.shadow_magnitude.push(meas.shadow_magnitude);
        rep.lit_center_deviation.push(meas.lit_center_deviation);
    }
    rep.lit_slow_ratio = rep.lit_sup_slow.iter().map(|v| ratios(v)).collect();
    rep.lit_raw_ratio = rep.lit_sup_raw.iter().map(|v| ratios(v)).collect();
    rep.shadow_ratio = ratios(&rep.shadow_magnitude);
    rep.lit_center_ratio = ratios(&rep.lit_center_deviation);
    Ok(rep)
}

/// The split `eta^slow = sigma^slow + rho^slow`.
#[derive(Debug, Clone)]
pub struct SigmaRho {
    pub beta: u32,
    pub sigma_slow: Option<DensityField>,
    pub rho_slow: DensityField,
}

/// Only `beta = 0` is computable: the boundary-layer terms that make up
/// `sigma` for `beta >= 1` have no constructive definition to implement.
pub fn sigma_rho(record: &IterationRecord, beta: u32) -> Result<SigmaRho> {
    if beta == 0 {
        return Ok(SigmaRho { beta, sigma_slow: None, rho_slow: record.eta_slow.clone() });
    }
    Err(Error::NotImplemented(format!(
        "sigma/rho split for beta = {beta} needs the boundary-layer coefficients and special functions, which have no constructive definition"
    )))
}
