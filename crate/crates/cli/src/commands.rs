//! The four batch commands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use hirota_rh::dressing::{self, DEFAULT_POLE_GUARD};
use hirota_rh::export;
use hirota_rh::laxpair::{self, ResidualReport, PINNED_CONVENTIONS};
use hirota_rh::scattering::{self, FnPotential, Potential, SampledPotential, Side};
use hirota_rh::{Complex, Error, FieldGrid, GridSpec, SignConvention, SolitonSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Failure, Format, Input, LoadedInput, Outcome, RunConfig, Sweep};

/// Finest-grid residual max-norm accepted by `verify`.
pub const VERIFY_TOLERANCE: f64 = 1e-4;
/// Minimum observed convergence order accepted by `verify`.
pub const ORDER_THRESHOLD: f64 = 1.7;
/// Largest `|lambda_found - lambda_spec|` accepted by `roundtrip`.
pub const ROUNDTRIP_TOLERANCE: f64 = 1e-3;
/// Spectral parameters at which the zero-curvature residual is sampled.
pub const ZC_LAMBDAS: [(f64, f64); 3] = [(0.5, 0.0), (-0.5, 0.0), (0.2, 0.3)];
/// Node spacing of automatically chosen scattering windows.
const SCATTER_HX: f64 = 0.05;
/// `|q|` at automatically chosen window ends relative to the peak.
const WINDOW_TOL: f64 = 1e-12;
const NOISE_SEED: u64 = 0x5eed_2024;

fn sidecar_path(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_file(path: &Path, contents: &str, force: bool) -> Outcome<()> {
    if path.exists() && !force {
        return Err(Failure::Io(format!(
            "{} exists; pass --force to overwrite",
            path.display()
        )));
    }
    std::fs::write(path, contents)
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

/// Refuses early when any output exists, so that no partial result set is written.
fn check_outputs(paths: &[&Path], force: bool) -> Outcome<()> {
    for p in paths {
        if p.exists() && !force {
            return Err(Failure::Io(format!(
                "{} exists; pass --force to overwrite",
                p.display()
            )));
        }
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

fn meta(started: Instant) -> Value {
    json!({
        "tool": "hirota-rh",
        "version": env!("CARGO_PKG_VERSION"),
        "threads": rayon::current_num_threads(),
        "elapsed_ms": started.elapsed().as_millis() as u64,
    })
}

fn soliton(input: &Input, command: &str) -> Outcome<SolitonSpec> {
    match input {
        Input::Soliton(s) => Ok(s.clone()),
        Input::Gaussian { .. } => Err(Failure::Spec(format!(
            "`{command}` needs a soliton spec (epsilon, components, convention, points)"
        ))),
    }
}

/// Adds `eps * peak_l * (u + i v)` with `u, v ~ U(-1, 1)` to every unmasked sample;
/// deterministic for a given `salt`.
fn perturb(field: &mut FieldGrid, eps: f64, salt: u64) {
    if eps == 0.0 {
        return;
    }
    let peaks = field.peak_amplitudes();
    let c = field.components;
    let mask = field.pole_mask.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(NOISE_SEED ^ salt);
    for (k, z) in field.values_mut().iter_mut().enumerate() {
        let u: f64 = rng.random_range(-1.0..1.0);
        let v: f64 = rng.random_range(-1.0..1.0);
        if !mask[k / c] {
            *z += Complex::new(u, v) * (eps * peaks[k % c]);
        }
    }
}

fn evaluate(spec: &SolitonSpec, grid: &GridSpec) -> Outcome<FieldGrid> {
    dressing::nsoliton_eval_detailed(spec, grid, DEFAULT_POLE_GUARD)
        .map(|(f, _)| f)
        .map_err(|e| Failure::Spec(e.to_string()))
}

pub fn generate(cfg: &RunConfig, loaded: &LoadedInput) -> Outcome<()> {
    let started = Instant::now();
    let spec = soliton(&loaded.input, "generate")?;
    let grid = cfg
        .grid
        .unwrap_or(GridSpec::new(-10.0, 10.0, 401, 0.0, 1.0, 11).expect("default grid"));
    let sidecar = sidecar_path(&cfg.output_path, ".sidecar.json");
    check_outputs(&[&cfg.output_path, &sidecar], cfg.force)?;
    let mut field = evaluate(&spec, &grid)?;
    perturb(&mut field, cfg.perturb, 0);
    let data = match cfg.format {
        Format::Csv => export::field_csv(&field),
        Format::Json => export::field_json(&field),
    };
    write_file(&cfg.output_path, &data, cfg.force)?;
    let side = json!({
        "spec": loaded.echo,
        "spec_path": cfg.spec_path.display().to_string(),
        "grid": grid,
        "format": cfg.format.as_str(),
        "perturb": cfg.perturb,
        "rows": grid.len(),
        "pole_mask_count": field.mask_count(),
        "peak_amplitudes": field.peak_amplitudes(),
        "meta": meta(started),
    });
    write_file(&sidecar, &pretty(&side), cfg.force)?;
    eprintln!(
        "wrote {} ({} rows, {} masked)",
        cfg.output_path.display(),
        grid.len(),
        field.mask_count()
    );
    Ok(())
}

pub fn verify(cfg: &RunConfig, loaded: &LoadedInput) -> Outcome<()> {
    let started = Instant::now();
    let spec = soliton(&loaded.input, "verify")?;
    let base = cfg
        .grid
        .unwrap_or(GridSpec::new(-10.0, 10.0, 201, 0.0, 1.0, 11).expect("default grid"));
    let sidecar = sidecar_path(&cfg.output_path, ".sidecar.json");
    check_outputs(&[&cfg.output_path, &sidecar], cfg.force)?;
    let lambdas: Vec<Complex> = ZC_LAMBDAS.iter().map(|&(a, b)| Complex::new(a, b)).collect();
    let mut pde = Vec::new();
    let mut zc = Vec::new();
    let mut zc_per_lambda = Vec::new();
    let mut masked = Vec::new();
    for level in 0..cfg.refine_levels {
        let grid = base.refined(level);
        let mut field = evaluate(&spec, &grid)?;
        perturb(&mut field, cfg.perturb, level as u64 + 1);
        masked.push(field.mask_count());
        let p = laxpair::pde_residual_with(&field, &spec.params, PINNED_CONVENTIONS.third_order)
            .map_err(|e| Failure::Spec(format!("level {level}: {e}")))?;
        let z = laxpair::zero_curvature_residual_with(
            &field,
            &spec.params,
            &lambdas,
            PINNED_CONVENTIONS.ordering,
            PINNED_CONVENTIONS.g_form,
        )
        .map_err(|e| Failure::Spec(format!("level {level}: {e}")))?;
        pde.push(p);
        zc.push(z.worst);
        zc_per_lambda.push(z.per_lambda);
    }
    let pde = laxpair::attach_order(pde);
    let zc = laxpair::attach_order(zc);
    let gate = |r: &[ResidualReport]| -> (bool, String) {
        let last = r.last().expect("at least one level");
        match last.convergence_order {
            None => (false, "convergence order needs --levels >= 2".into()),
            Some(o) if o < ORDER_THRESHOLD => (false, format!("order {o:.3} < {ORDER_THRESHOLD}")),
            Some(_) if !(last.max_norm <= VERIFY_TOLERANCE) => (
                false,
                format!("finest max-norm {:e} > {VERIFY_TOLERANCE:e}", last.max_norm),
            ),
            Some(o) => (true, format!("order {o:.3}, finest max-norm {:e}", last.max_norm)),
        }
    };
    let (pde_ok, pde_msg) = gate(&pde);
    let (zc_ok, zc_msg) = gate(&zc);
    let passed = pde_ok && zc_ok;
    let report = json!({
        "conventions": PINNED_CONVENTIONS,
        "tolerance": VERIFY_TOLERANCE,
        "order_threshold": ORDER_THRESHOLD,
        "perturb": cfg.perturb,
        "levels": cfg.refine_levels,
        "masked": masked,
        "pde": pde,
        "zero_curvature": zc,
        "zero_curvature_per_lambda": zc_per_lambda,
        "passed": passed,
        "verdict": { "pde": pde_msg, "zero_curvature": zc_msg },
    });
    let data = match cfg.format {
        Format::Json => pretty(&report),
        Format::Csv => {
            let mut s = String::from("engine,level,hx,ht,max,l2,order\n");
            for (name, reps) in [("pde", &pde), ("zero_curvature", &zc)] {
                for (k, r) in reps.iter().enumerate() {
                    let order = r.convergence_order.map_or(String::new(), |o| o.to_string());
                    s.push_str(&format!(
                        "{name},{k},{},{},{},{},{order}\n",
                        r.hx, r.ht, r.max_norm, r.l2_norm
                    ));
                }
            }
            s
        }
    };
    write_file(&cfg.output_path, &data, cfg.force)?;
    let side = json!({ "spec": loaded.echo, "base_grid": base, "meta": meta(started) });
    write_file(&sidecar, &pretty(&side), cfg.force)?;
    eprintln!("pde: {pde_msg}\nzero-curvature: {zc_msg}");
    if passed {
        Ok(())
    } else {
        Err(Failure::Verify(format!("pde: {pde_msg}; zero-curvature: {zc_msg}")))
    }
}

fn scatter_failure(e: Error) -> Failure {
    Failure::Scatter(e.to_string())
}

/// Potential at one time slice: dressed solitons are sampled on a grid (the
/// given one, or a window chosen from the decay of the spec), Gaussians likewise.
fn build_potential(cfg: &RunConfig, input: &Input, salt: u64) -> Outcome<(SampledPotential, GridSpec)> {
    let grid = match (cfg.grid, input) {
        (Some(g), _) => GridSpec { nt: 1, t1: g.t0, ..g },
        (None, Input::Soliton(spec)) => {
            if spec.sign_convention == SignConvention::AsPrinted {
                return Err(Failure::Scatter(
                    "decay violation: as-printed solitons are singular (csch poles); \
                     scattering data exist only for the regularized convention"
                        .into(),
                ));
            }
            let (x0, x1) = scattering::decay_window(spec, 0.0, WINDOW_TOL).map_err(scatter_failure)?;
            let nx = ((x1 - x0) / SCATTER_HX).round() as usize + 1;
            GridSpec::new(x0, x1, nx, 0.0, 0.0, 1).expect("window grid")
        }
        (None, Input::Gaussian { gaussian, .. }) => {
            let half = (8.0 * gaussian.width).max(8.0);
            let (x0, x1) = (gaussian.center - half, gaussian.center + half);
            let nx = ((x1 - x0) / SCATTER_HX).round() as usize + 1;
            GridSpec::new(x0, x1, nx, 0.0, 0.0, 1).expect("window grid")
        }
    };
    let mut field = match input {
        Input::Soliton(spec) => evaluate(spec, &grid)?,
        Input::Gaussian {
            components,
            reduction,
            gaussian,
        } => {
            let f = FnPotential::gaussian(
                gaussian.amplitudes.clone(),
                gaussian.center,
                gaussian.width,
                *reduction,
                grid.x0,
                grid.x1,
                grid.nx,
            )
            .map_err(|e| Failure::Spec(e.to_string()))?;
            let c = *components;
            FieldGrid::from_fn(grid, c, *reduction, |x, _, l| {
                let mut buf = vec![Complex::new(0.0, 0.0); c];
                f.eval(x, &mut buf);
                buf[l]
            })
        }
    };
    perturb(&mut field, cfg.perturb, salt);
    let pot = SampledPotential::from_field(&field, 0).map_err(scatter_failure)?;
    scattering::check_decay(&pot, scattering::DECAY_TOL).map_err(scatter_failure)?;
    Ok((pot, grid))
}

struct LambdaSummary {
    symmetry: f64,
    jump: f64,
}

fn lambda_checks(pot: &SampledPotential, lambda: f64) -> hirota_rh::Result<LambdaSummary> {
    let lam = Complex::new(lambda, 0.0);
    let sym = scattering::symmetry_check(pot, lam)?;
    let jm = scattering::jost_solve(pot, lam, Side::Minus)?;
    let jp = scattering::jost_solve(pot, lam, Side::Plus)?;
    let rec = scattering::scattering_from_jost(&jm)?;
    let (pp, pm) = scattering::assemble_sectional(&jp, &jm, &rec)?;
    let (x0, x1) = pot.domain();
    let mut jump: f64 = 0.0;
    for x in [-5.0f64, 0.0, 5.0] {
        let x = x.clamp(x0, x1);
        jump = jump.max(scattering::jump_check(&pp, &pm, &rec, x)?.residual.max_norm);
    }
    Ok(LambdaSummary {
        symmetry: sym
            .jost
            .max_norm
            .max(sym.scattering.map_or(0.0, |s| s.max_norm)),
        jump,
    })
}

pub fn scatter(cfg: &RunConfig, loaded: &LoadedInput) -> Outcome<()> {
    let started = Instant::now();
    let summary_path = sidecar_path(&cfg.output_path, ".summary.json");
    check_outputs(&[&cfg.output_path, &summary_path], cfg.force)?;
    let sweep = cfg.lambda_sweep.unwrap_or(Sweep {
        min: -3.0,
        max: 3.0,
        count: 61,
    });
    let (pot, grid) = build_potential(cfg, &loaded.input, 0)?;
    let lambdas = scattering::sweep_points(sweep.min, sweep.max, sweep.count);
    let records = scattering::sweep(&pot, &lambdas).map_err(scatter_failure)?;
    let checks: Vec<LambdaSummary> = lambdas
        .par_iter()
        .map(|&l| lambda_checks(&pot, l))
        .collect::<hirota_rh::Result<_>>()
        .map_err(scatter_failure)?;
    let max = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0, f64::max);
    let n = pot.components() + 1;
    let reflection = max(&mut records.iter().flat_map(|r| {
        (1..n).flat_map(move |k| [r.s[(k, 0)].norm(), r.r[(0, k)].norm()])
    }));
    let summary = json!({
        "max_det_err": max(&mut records.iter().map(|r| r.det_error())),
        "max_symmetry_residual": max(&mut checks.iter().map(|c| c.symmetry)),
        "max_jump_residual": max(&mut checks.iter().map(|c| c.jump)),
        "max_identity_err": max(&mut records.iter().map(|r| r.identity_error())),
        "max_reflection": reflection,
        "count": records.len(),
        "window": [grid.x0, grid.x1],
        "nx": grid.nx,
        "t": grid.t0,
        "sweep": [sweep.min, sweep.max, sweep.count],
        "spec": loaded.echo,
        "meta": meta(started),
    });
    let data = match cfg.format {
        Format::Csv => scattering::sweep_csv(&records),
        Format::Json => {
            let recs: Vec<Value> = records
                .iter()
                .map(|r| {
                    let rows: Vec<Vec<Complex>> = (0..n)
                        .map(|a| (0..n).map(|b| r.s[(a, b)]).collect())
                        .collect();
                    json!({ "lambda": r.lambda, "s": rows, "det_err": r.det_error() })
                })
                .collect();
            pretty(&json!({ "records": recs }))
        }
    };
    write_file(&cfg.output_path, &data, cfg.force)?;
    write_file(&summary_path, &pretty(&summary), cfg.force)?;
    eprintln!("wrote {} ({} lambda samples)", cfg.output_path.display(), records.len());
    Ok(())
}

pub fn roundtrip(cfg: &RunConfig, loaded: &LoadedInput) -> Outcome<()> {
    let started = Instant::now();
    let spec = soliton(&loaded.input, "roundtrip")?;
    if spec.sign_convention != SignConvention::Regularized {
        return Err(Failure::Spec(
            "roundtrip needs a regularized spec (as-printed solitons are singular)".into(),
        ));
    }
    let sidecar = sidecar_path(&cfg.output_path, ".sidecar.json");
    check_outputs(&[&cfg.output_path, &sidecar], cfg.force)?;
    let (pot, grid) = build_potential(cfg, &loaded.input, 0)?;
    let region = scattering::default_region(&spec);
    let report = scattering::s11_zeros(&pot, region).map_err(|e| match e {
        Error::ContourThroughZero { .. } => Failure::Roundtrip(format!(
            "{e}; the search rectangle passes through a zero of s11"
        )),
        other => scatter_failure(other),
    })?;
    let expected: Vec<Complex> = spec.points.iter().map(|p| p.lambda).collect();
    let max_error = expected
        .iter()
        .map(|l| {
            report
                .zeros
                .iter()
                .map(|z| (z - l).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let count_ok = report.zeros.len() == expected.len() && report.winding as usize == expected.len();
    let matched = count_ok && max_error <= ROUNDTRIP_TOLERANCE;
    let mut out = json!({
        "zeros": report.zeros,
        "winding": report.winding,
        "expected": expected,
        "max_error": if max_error.is_finite() { json!(max_error) } else { Value::Null },
        "region": region,
        "window": [grid.x0, grid.x1],
        "matched": matched,
    });
    if !report.clusters.is_empty() {
        out["clusters"] = json!(report.clusters);
    }
    write_file(&cfg.output_path, &pretty(&out), cfg.force)?;
    let side = json!({ "spec": loaded.echo, "meta": meta(started) });
    write_file(&sidecar, &pretty(&side), cfg.force)?;
    if !count_ok {
        let merged: Vec<String> = report
            .clusters
            .iter()
            .map(|c| {
                format!(
                    "{} zeros merged near {} (unresolved below {:.1e})",
                    c.multiplicity, c.center, c.size
                )
            })
            .collect();
        return Err(Failure::Roundtrip(format!(
            "found {} isolated zeros (winding {}), spec has {}{}{}",
            report.zeros.len(),
            report.winding,
            expected.len(),
            if merged.is_empty() { "" } else { "; " },
            merged.join("; ")
        )));
    }
    if !matched {
        return Err(Failure::Roundtrip(format!(
            "max |lambda_found - lambda_spec| = {max_error:e} > {ROUNDTRIP_TOLERANCE:e}"
        )));
    }
    eprintln!("recovered {} zeros, max error {max_error:e}", expected.len());
    Ok(())
}
