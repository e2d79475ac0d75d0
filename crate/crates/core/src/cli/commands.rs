//! The subcommands other than `validate`.

use super::config::{OutputFormat, RunConfig};
use super::records::{self, fmt17, FileEntry, OutputDir, RecordData};
use crate::asymptotics::go_leading;
use crate::bie::{eval_dlp, mie_total_field, BoundaryGrid, Content, DensityField, FieldMeta};
use crate::error::{Error, Result};
use crate::geometry::{certify_conditions, Scene, Vec2};
use crate::multiscatter::{default_grids, scaling_report, Driver};
use crate::rays::{classify, classify_with_rays, phase_derivatives, psi_reflected, rays_on_grid, uniform_params};
use log::{info, warn};
use num_complex::Complex64;
use serde_json::json;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

fn digest_of(value: &serde_json::Value) -> String {
    records::sha256_hex(value.to_string().as_bytes())
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::Format(e.to_string()))?;
    for row in rows {
        w.write_record(&row).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

/// Outcome of `run`.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub resumed_from: Option<usize>,
    pub records: Vec<String>,
}

/// Iterate `0 ..= run.iterations` and write one record file per step,
/// resuming after the last intact record of an earlier identical run.
pub fn cmd_run(cfg: &RunConfig, out: &Path, format: OutputFormat) -> Result<RunSummary> {
    let scene = cfg.scene.to_scene()?;
    let max_m = cfg.run.iterations;
    if max_m > 0 && !scene.is_multiple() {
        return Err(Error::Config("iterations > 0 needs a sequence of at least two obstacles".into()));
    }
    let cert = certify_conditions(&scene)?;
    cert.require()?;
    let d = &cfg.discretization;
    let grids = default_grids(&scene, d.ppw, d.min_n)?;
    let digest = digest_of(&json!({ "scene": cfg.scene, "discretization": d, "format": format }));
    let mut dir = OutputDir::open(out, "run", &digest)?;
    let started = Instant::now();

    let names: Vec<String> = (0..=max_m).map(|m| records::record_file_name(scene.k, m, format)).collect();
    let done = names.iter().take_while(|n| dir.entry(n).is_some()).count();
    let mut driver = Driver::new(scene.clone(), grids.clone())?.with_ppw(d.ppw);
    let mut resumed_from = None;
    if done > 0 {
        let m = done - 1;
        match load_density(&dir, &scene, &grids, m, format) {
            Ok(eta) => {
                driver = driver.resume_from(m + 1, eta)?;
                resumed_from = Some(m);
                info!("resuming after record {m}");
            }
            Err(e) => {
                warn!("cannot resume ({e}); starting over");
                dir.reset()?;
            }
        }
    }
    // records past the requested range belong to a longer earlier run
    let stale: Vec<String> =
        dir.manifest().files.iter().filter(|f| f.m.is_some_and(|m| m > max_m)).map(|f| f.name.clone()).collect();
    if !stale.is_empty() {
        dir.reset()?;
        driver = Driver::new(scene.clone(), grids.clone())?.with_ppw(d.ppw);
        resumed_from = None;
    }

    let info_value = |elapsed: f64, done: usize| {
        json!({
            "scene": cfg.scene,
            "k": scene.k,
            "iterations": max_m,
            "records_written": done,
            "grid_sizes": grids.iter().map(|g| g.len()).collect::<Vec<_>>(),
            "ppw": d.ppw,
            "certificate_margin": cert.margin,
            "format": format,
            "elapsed_seconds": elapsed,
        })
    };
    while driver.next_m() <= max_m {
        let t0 = Instant::now();
        let rec = driver.step()?;
        let data = RecordData::from(&rec);
        let bytes = records::encode(&data, format)?;
        let entry = FileEntry {
            m: Some(rec.m),
            obstacle: Some(rec.obstacle),
            n: Some(data.t.len()),
            seconds: Some(t0.elapsed().as_secs_f64()),
            ..FileEntry::named(&names[rec.m])
        };
        dir.write(entry, &bytes)?;
        dir.set_info(info_value(started.elapsed().as_secs_f64(), rec.m + 1))?;
        info!("record {} (obstacle {}) written in {:.2} s", rec.m, rec.obstacle, t0.elapsed().as_secs_f64());
    }
    dir.set_info(info_value(started.elapsed().as_secs_f64(), max_m + 1))?;
    dir.finish()?;
    Ok(RunSummary { resumed_from, records: names })
}

fn load_density(
    dir: &OutputDir,
    scene: &Scene,
    grids: &[Arc<BoundaryGrid>],
    m: usize,
    format: OutputFormat,
) -> Result<DensityField> {
    let obstacle = scene.obstacle_index(m);
    let bytes = dir.read(&records::record_file_name(scene.k, m, format))?;
    let data = records::decode(&bytes, format, m, obstacle, scene.k)?;
    let grid = grids[obstacle].clone();
    if data.t != grid.params {
        return Err(Error::Format(format!("record {m} was written on a different grid")));
    }
    DensityField::new(grid, data.eta, FieldMeta { m, obstacle, k: scene.k, content: Content::TotalField })
}

/// Broken rays of order `rays.m` on a uniform grid of the obstacle hit then.
pub fn cmd_rays(cfg: &RunConfig, out: &Path) -> Result<String> {
    let scene = cfg.scene.to_scene()?;
    certify_conditions(&scene)?.require()?;
    let m = cfg.rays.m;
    if m > 0 && !scene.is_multiple() {
        return Err(Error::Config("rays.m > 0 needs a sequence of at least two obstacles".into()));
    }
    let params = uniform_params(cfg.rays.nodes);
    let rays = rays_on_grid(&scene, m, &params)?;
    let part = classify_with_rays(&scene, m, &params, &rays)?;
    let curve = scene.obstacle(m);
    let rows = rays.iter().enumerate().map(|(i, ray)| {
        let p = curve.point(params[i]);
        let (d1, d2) = phase_derivatives(&scene, ray);
        let residual = ray.reflection_residuals(&scene).into_iter().fold(0.0, f64::max);
        vec![
            fmt17(params[i]),
            fmt17(p.x),
            fmt17(p.y),
            fmt17(ray.phase),
            fmt17(d1),
            fmt17(d2),
            part.labels[i].label().to_string(),
            fmt17(residual),
            fmt17(ray.vertices[0].t),
        ]
    });
    let header = ["t", "x", "y", "phi", "phi_t", "phi_tt", "region_label", "max_reflection_residual", "launch_t"];
    let bytes = csv_bytes(&header, rows)?;
    let name = format!("rays_m{m:02}.csv");
    let digest = digest_of(&json!({ "scene": cfg.scene, "rays": cfg.rays }));
    let mut dir = OutputDir::open(out, "rays", &digest)?;
    dir.write(FileEntry { m: Some(m), n: Some(params.len()), ..FileEntry::named(&name) }, &bytes)?;
    dir.set_info(json!({ "scene": cfg.scene, "m": m, "t1": part.t1, "t2": part.t2, "lit_start": part.lit_start, "lit_len": part.lit_len }))?;
    dir.finish()?;
    Ok(name)
}

/// Mie-series boundary values of a centred circle.
pub fn cmd_mie(cfg: &RunConfig, out: &Path) -> Result<String> {
    let mc = &cfg.mie;
    let alpha = Vec2::from_angle(cfg.scene.alpha_deg.to_radians());
    let thetas = uniform_params(mc.nodes);
    let eta = mie_total_field(mc.radius, mc.k, alpha, &thetas)?;
    let rows = thetas.iter().zip(&eta).map(|(t, v)| vec![fmt17(*t), fmt17(v.re), fmt17(v.im)]);
    let bytes = csv_bytes(&["theta", "re_eta", "im_eta"], rows)?;
    let name = format!("mie_k{}.csv", mc.k);
    let digest = digest_of(&json!({ "mie": mc, "alpha_deg": cfg.scene.alpha_deg }));
    let mut dir = OutputDir::open(out, "mie", &digest)?;
    dir.write(FileEntry { n: Some(thetas.len()), ..FileEntry::named(&name) }, &bytes)?;
    dir.set_info(json!({ "radius": mc.radius, "k": mc.k, "alpha_deg": cfg.scene.alpha_deg }))?;
    dir.finish()?;
    Ok(name)
}

/// Scaling report for record `scaling.m` over `scene.k_list`.
pub fn cmd_scaling(cfg: &RunConfig, out: &Path) -> Result<String> {
    let scene = cfg.scene.to_scene()?;
    let m = cfg.scaling.m;
    let report = scaling_report(&scene, m, &cfg.scene.k_list, cfg.discretization.ppw)?;
    let bytes = serde_json::to_vec_pretty(&report).map_err(|e| Error::Format(e.to_string()))?;
    let name = format!("scaling_m{m:02}.json");
    let digest = digest_of(&json!({ "scene": cfg.scene, "scaling": cfg.scaling, "ppw": cfg.discretization.ppw }));
    let mut dir = OutputDir::open(out, "scaling", &digest)?;
    dir.write(FileEntry { m: Some(m), ..FileEntry::named(&name) }, &bytes)?;
    dir.set_info(json!({ "scene": cfg.scene }))?;
    dir.finish()?;
    Ok(name)
}

/// Default geometrical-optics test point: the centre of the illuminated arc
/// of the obstacle hit at iteration `m + 1`.
pub fn default_go_point(scene: &Scene, m: usize) -> Result<Vec2> {
    if !scene.is_multiple() {
        return Err(Error::Config("go needs explicit points for a single-obstacle scene".into()));
    }
    let part = classify(scene, m + 1, &uniform_params(1024))?;
    Ok(scene.obstacle(m + 1).point(part.lit_center()))
}

/// One row of the `go` output.
#[derive(Debug, Clone, PartialEq)]
pub struct GoRow {
    pub x: Vec2,
    pub k: f64,
    pub amplitude: Complex64,
    pub u_slow: Complex64,
}

/// `A_{m,0}` against the computed envelope `u_m^slow = e^{-ik psi_m} u_m`.
pub fn go_comparison(scene: &Scene, m: usize, points: &[Vec2], k_list: &[f64], ppw: f64) -> Result<Vec<GoRow>> {
    let mut rows = Vec::new();
    let amps = points.iter().map(|&x| go_leading(scene, m, x)).collect::<Result<Vec<_>>>()?;
    let psis = points.iter().map(|&x| psi_reflected(scene, m, x).map(|p| p.psi)).collect::<Result<Vec<_>>>()?;
    for &k in k_list {
        let sk = scene.with_k(k)?;
        let grids = default_grids(&sk, ppw, 0)?;
        let mut driver = Driver::new(sk, grids)?.with_ppw(ppw);
        let mut rec = driver.step()?;
        while rec.m < m {
            rec = driver.step()?;
        }
        let u = eval_dlp(&rec.eta, k, points)?;
        for (i, &x) in points.iter().enumerate() {
            let u_slow = u[i] * Complex64::from_polar(1.0, -k * psis[i]);
            rows.push(GoRow { x, k, amplitude: amps[i].amplitude, u_slow });
        }
    }
    Ok(rows)
}

pub fn cmd_go(cfg: &RunConfig, out: &Path) -> Result<String> {
    let scene = cfg.scene.to_scene()?;
    let m = cfg.go.m;
    let points: Vec<Vec2> = if cfg.go.points.is_empty() {
        vec![default_go_point(&scene, m)?]
    } else {
        cfg.go.points.iter().map(|p| Vec2::new(p[0], p[1])).collect()
    };
    let rows = go_comparison(&scene, m, &points, &cfg.scene.k_list, cfg.discretization.ppw)?;
    let header = ["x", "y", "k", "re_a", "im_a", "re_u_slow", "im_u_slow", "abs_dev"];
    let bytes = csv_bytes(
        &header,
        rows.iter().map(|r| {
            vec![
                fmt17(r.x.x),
                fmt17(r.x.y),
                fmt17(r.k),
                fmt17(r.amplitude.re),
                fmt17(r.amplitude.im),
                fmt17(r.u_slow.re),
                fmt17(r.u_slow.im),
                fmt17((r.u_slow - r.amplitude).norm()),
            ]
        }),
    )?;
    let name = format!("go_m{m:02}.csv");
    let digest = digest_of(&json!({ "scene": cfg.scene, "go": cfg.go, "ppw": cfg.discretization.ppw }));
    let mut dir = OutputDir::open(out, "go", &digest)?;
    dir.write(FileEntry { m: Some(m), ..FileEntry::named(&name) }, &bytes)?;
    dir.set_info(json!({ "scene": cfg.scene, "m": m }))?;
    dir.finish()?;
    Ok(name)
}
