use std::path::{Path, PathBuf};

use hetasym_core::keyrate::{key_rate, max_distance, KeyRateBreakdown, MaxDistance};
use hetasym_core::phase::{asymmetry_report, estimate_phase, phase_deviation, PhaseNoiseBudget};
use hetasym_core::tomography::{
    fidelity, fit_coherent, ideal_coherent_state, linspace, mle_reconstruct, wigner, MleOptions, WignerGrid,
};
use hetasym_core::{
    noiseless_sweep, simulate_heterodyne, DensityMatrix, FidelityConvention, HeterodyneModel, KeyRateParams,
    PhaseSweep, PhaseTaggedSamples, QuadratureTrace, ReferenceSignalSpec,
};
use rayon::prelude::*;

use crate::config::{PhaseSource, RunConfig};
use crate::error::CliError;
use crate::io::{
    companion, csv_body, density_body, header, read_density, read_trace, report_body, trace_body, write_output,
};

/// Options that affect how a command runs but not what it writes.
#[derive(Debug, Clone, Copy)]
pub struct Runtime {
    pub jobs: usize,
}

fn out_path(cfg: &RunConfig, default: &str) -> PathBuf {
    if cfg.out.is_empty() {
        PathBuf::from(default)
    } else {
        PathBuf::from(&cfg.out)
    }
}

fn input_path(cfg: &RunConfig) -> Result<&Path, CliError> {
    if cfg.input.is_empty() {
        return Err(CliError::Invalid("no input file: pass --input or set `input`".into()));
    }
    Ok(Path::new(&cfg.input))
}

fn pool(rt: Runtime) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(rt.jobs.max(1))
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))
}

pub fn signal_spec(cfg: &RunConfig) -> ReferenceSignalSpec {
    ReferenceSignalSpec {
        amplitude_sq: cfg.amplitude_sq,
        sweep: PhaseSweep::Ramp { points: cfg.phase_points, start: cfg.phase_start, stop: cfg.phase_stop },
        pulses_per_phase: cfg.pulses_per_phase,
    }
}

pub fn detector(cfg: &RunConfig) -> Result<HeterodyneModel, CliError> {
    let (gain_x, gain_p) = match cfg.asymmetry_percent.0 {
        Some(pct) => hetasym_core::gains_from_percent(pct)?,
        None => (cfg.gain_x, cfg.gain_p),
    };
    Ok(HeterodyneModel {
        gain_x,
        gain_p,
        hybrid_phase_error: cfg.hybrid_phase_error,
        shot_noise_var: cfg.shot_noise_var,
        elec_noise_var: cfg.elec_noise_var,
        responsivity: cfg.responsivity,
        p_lo: cfg.p_lo,
    })
}

pub fn keyrate_params(cfg: &RunConfig) -> KeyRateParams {
    KeyRateParams {
        v_a: cfg.v_a,
        beta: cfg.beta,
        xi_line: cfg.xi_line,
        xi_det: 0.0,
        eta: cfg.eta,
        v_elec: cfg.v_elec,
        alpha_db_per_km: cfg.alpha_db_per_km,
        distance_km: 0.0,
        baud: cfg.baud,
        frame_ratio: cfg.frame_ratio,
        mi_model: cfg.mi_model.0,
    }
}

fn block(cfg: &RunConfig) -> Result<usize, CliError> {
    if cfg.block == 0 {
        return Err(CliError::Invalid("block must be >= 1".into()));
    }
    Ok(cfg.block)
}

pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = signal_spec(cfg);
    let det = detector(cfg)?;
    let trace = if cfg.noiseless { noiseless_sweep(&spec, &det)? } else { simulate_heterodyne(&spec, &det, cfg.seed)? };
    let out = out_path(cfg, "simulate.csv");
    write_output(&out, &header("simulate", cfg), &trace_body(&trace)?)
}

pub fn scale(cfg: &RunConfig) -> Result<(), CliError> {
    let trace = read_trace(input_path(cfg)?)?;
    let report = asymmetry_report(&trace, cfg.v_a, block(cfg)?)?;
    let budget =
        PhaseNoiseBudget::from_components(cfg.linewidth_a, cfg.linewidth_b, cfg.pulse_separation, cfg.v_path, report.v_det)?;
    let out = out_path(cfg, "scale.csv");
    let head = header("scale", cfg);
    write_output(&out, &head, &trace_body(&report.scaled)?)?;
    if report.undefined_blocks > 0 {
        eprintln!("scale: skipped {} blocks with undefined phase", report.undefined_blocks);
    }
    let entries = [
        ("rows", trace.len().to_string()),
        ("asymmetry_percent", report.asymmetry_percent.to_string()),
        ("v_det", report.v_det.to_string()),
        ("xi_det", report.xi_det.to_string()),
        ("undefined_blocks", report.undefined_blocks.to_string()),
        ("v_drift", budget.v_drift.to_string()),
        ("v_path", budget.v_path.to_string()),
        ("v_total", budget.v_total().to_string()),
        ("xi_total", budget.xi_error(cfg.v_a)?.to_string()),
    ];
    write_output(&companion(&out, "report", "txt"), &head, &report_body(&entries))
}

pub fn phase_deviation_cmd(cfg: &RunConfig) -> Result<(), CliError> {
    let trace = read_trace(input_path(cfg)?)?;
    let dev = phase_deviation(&trace, block(cfg)?)?;
    let out = out_path(cfg, "phase_deviation.csv");
    let mut head = header("phase-deviation", cfg);
    head.push_str(&format!("# undefined_blocks = {}\n# peak_abs_delta = {}\n", dev.undefined, dev.peak()));
    if dev.undefined > 0 {
        eprintln!("phase-deviation: skipped {} blocks with undefined phase", dev.undefined);
    }
    let rows = dev
        .points
        .iter()
        .enumerate()
        .map(|(i, (t, d))| vec![i.to_string(), t.to_string(), d.to_string()]);
    write_output(&out, &head, &csv_body(&["index", "theta_scaled", "delta"], rows)?)
}

fn distance_grid(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    if !(cfg.distance_step_km > 0.0 && cfg.distance_max_km >= 0.0 && cfg.distance_resolution_km > 0.0) {
        return Err(CliError::Invalid("distance grid needs step > 0, max >= 0 and resolution > 0".into()));
    }
    let n = (cfg.distance_max_km / cfg.distance_step_km + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| i as f64 * cfg.distance_step_km).collect())
}

fn xi_label(xi: f64) -> String {
    format!("rate_xi_{xi}")
}

pub fn keyrate_sweep(cfg: &RunConfig, rt: Runtime) -> Result<(), CliError> {
    let base = keyrate_params(cfg);
    base.validate()?;
    let xis = &cfg.xi_det_values.0;
    if xis.is_empty() || xis.iter().any(|&x| x < 0.0) {
        return Err(CliError::Invalid("xi_det_values must be non-empty and >= 0".into()));
    }
    let distances = distance_grid(cfg)?;
    let cells: Vec<(usize, usize)> =
        (0..distances.len()).flat_map(|d| (0..xis.len()).map(move |x| (d, x))).collect();

    let (grid, reach) = pool(rt)?.install(|| {
        let grid: Result<Vec<KeyRateBreakdown>, _> = cells
            .par_iter()
            .map(|&(d, x)| key_rate(&KeyRateParams { xi_det: xis[x], distance_km: distances[d], ..base.clone() }))
            .collect();
        let reach: Result<Vec<MaxDistance>, _> = xis
            .par_iter()
            .map(|&xi| {
                max_distance(
                    &KeyRateParams { xi_det: xi, ..base.clone() },
                    cfg.distance_max_km,
                    cfg.distance_step_km,
                    cfg.distance_resolution_km,
                )
            })
            .collect();
        (grid, reach)
    });
    let (grid, reach) = (grid?, reach?);

    let out = out_path(cfg, "keyrate.csv");
    let head = header("keyrate-sweep", cfg);
    let mut fields = vec!["distance_km".to_string()];
    fields.extend(xis.iter().map(|&x| xi_label(x)));
    let field_refs: Vec<&str> = fields.iter().map(String::as_str).collect();
    let rows = distances.iter().enumerate().map(|(d, dist)| {
        let mut r = vec![dist.to_string()];
        r.extend((0..xis.len()).map(|x| grid[d * xis.len() + x].rate_per_symbol.to_string()));
        r
    });
    write_output(&out, &head, &csv_body(&field_refs, rows)?)?;

    let summary = xis.iter().enumerate().map(|(x, &xi)| {
        let column: Vec<&KeyRateBreakdown> = (0..distances.len()).map(|d| &grid[d * xis.len() + x]).collect();
        let min_lambda = column.iter().flat_map(|b| b.lambda).fold(f64::INFINITY, f64::min);
        let clamped = column.iter().any(|b| b.clamped);
        let (status, km) = match reach[x] {
            MaxDistance::NoKey => ("no_key", 0.0),
            MaxDistance::Cutoff(d) => ("cutoff", d),
            MaxDistance::BeyondGrid(d) => ("beyond_grid", d),
        };
        vec![
            xi.to_string(),
            status.to_string(),
            km.to_string(),
            column[0].rate_per_symbol.to_string(),
            column[0].rate_bits_per_sec.to_string(),
            min_lambda.to_string(),
            clamped.to_string(),
        ]
    });
    write_output(
        &companion(&out, "max_distance", "csv"),
        &head,
        &csv_body(
            &["xi_det", "status", "max_distance_km", "rate_d0_per_symbol", "rate_d0_bits_per_sec", "min_lambda", "clamped"],
            summary,
        )?,
    )
}

fn wigner_parallel(rho: &DensityMatrix, cfg: &RunConfig, rt: Runtime) -> Result<WignerGrid, CliError> {
    if cfg.wigner_points < 2 || !(cfg.wigner_max > cfg.wigner_min) {
        return Err(CliError::Invalid("Wigner grid needs >= 2 points and wigner_max > wigner_min".into()));
    }
    let axis = linspace(cfg.wigner_min, cfg.wigner_max, cfg.wigner_points);
    let chunk = axis.len().div_ceil(rt.jobs.max(1));
    let parts: Result<Vec<WignerGrid>, _> =
        pool(rt)?.install(|| axis.par_chunks(chunk).map(|xs| wigner(rho, xs, &axis)).collect());
    let parts = parts?;
    let mut values = nalgebra::DMatrix::zeros(axis.len(), axis.len());
    let mut row = 0;
    let mut imag_residue: f64 = 0.0;
    for part in parts {
        let n = part.x_axis.len();
        values.rows_mut(row, n).copy_from(&part.values);
        imag_residue = imag_residue.max(part.imag_residue);
        row += n;
    }
    Ok(WignerGrid { x_axis: axis.clone(), p_axis: axis, values, imag_residue })
}

fn phases_for(trace: &QuadratureTrace, cfg: &RunConfig) -> Result<(QuadratureTrace, Vec<f64>, usize), CliError> {
    match cfg.phase_source {
        PhaseSource::True => {
            let phases = trace
                .phase_true()
                .ok_or_else(|| CliError::Invalid("phase_source = true needs a phase_true column".into()))?
                .to_vec();
            Ok((trace.clone(), phases, 0))
        }
        PhaseSource::Estimated => {
            let b = block(cfg)?;
            let est = estimate_phase(trace, b)?;
            let (mut x, mut p, mut ph) = (Vec::new(), Vec::new(), Vec::new());
            let mut dropped = 0;
            for (i, e) in est.iter().enumerate() {
                let rows = i * b..((i + 1) * b).min(trace.len());
                match e {
                    Some(phi) => {
                        x.extend_from_slice(&trace.x()[rows.clone()]);
                        p.extend_from_slice(&trace.p()[rows.clone()]);
                        ph.extend(rows.map(|_| *phi));
                    }
                    None => dropped += rows.len(),
                }
            }
            Ok((QuadratureTrace::new(x, p, None)?, ph, dropped))
        }
    }
}

pub fn tomography_cmd(cfg: &RunConfig, rt: Runtime) -> Result<(), CliError> {
    let trace = read_trace(input_path(cfg)?)?;
    let (trace, phases, dropped) = phases_for(&trace, cfg)?;
    let samples = PhaseTaggedSamples::from_trace(&trace, &phases)?;
    if !samples.is_informationally_complete() {
        return Err(CliError::Invalid(format!(
            "LO phases cover only {:.3} rad; tomography needs at least half a turn",
            samples.phase_coverage()
        )));
    }
    let opts = MleOptions { dim: cfg.dim, max_iter: cfg.max_iter, tol: cfg.tol };
    let mle = mle_reconstruct(&samples, &opts)?;
    let alpha = fit_coherent(&mle.rho);
    let ideal = ideal_coherent_state(alpha, cfg.dim)?;
    let f_sqrt = fidelity(&mle.rho, &ideal, FidelityConvention::Sqrt)?;
    let f_sq = fidelity(&mle.rho, &ideal, FidelityConvention::Squared)?;
    let grid = wigner_parallel(&mle.rho, cfg, rt)?;

    let out = out_path(cfg, "tomography.csv");
    let head = header("tomography", cfg);
    write_output(&out, &head, &density_body(&mle.rho)?)?;
    let rows = (0..grid.x_axis.len()).flat_map(|ix| {
        let grid = &grid;
        (0..grid.p_axis.len()).map(move |ip| {
            vec![grid.x_axis[ix].to_string(), grid.p_axis[ip].to_string(), grid.values[(ix, ip)].to_string()]
        })
    });
    write_output(&companion(&out, "wigner", "csv"), &head, &csv_body(&["x", "p", "w"], rows)?)?;

    let warning = grid.coverage_warning();
    if let Some(w) = &warning {
        eprintln!("tomography: {w}");
    }
    let entries = [
        ("samples", samples.len().to_string()),
        ("dropped_rows", dropped.to_string()),
        ("converged", mle.converged.to_string()),
        ("iterations", mle.iterations.to_string()),
        ("log_likelihood", mle.log_likelihood.last().copied().unwrap_or(f64::NAN).to_string()),
        ("diluted_steps", mle.diluted_steps.to_string()),
        ("floored_probabilities", mle.floored.to_string()),
        ("alpha_re", alpha.re.to_string()),
        ("alpha_im", alpha.im.to_string()),
        ("alpha_phase", alpha.arg().to_string()),
        ("fidelity_sqrt", f_sqrt.to_string()),
        ("fidelity_squared", f_sq.to_string()),
        ("purity", mle.rho.purity().to_string()),
        ("mean_photon_number", mle.rho.mean_photon_number().to_string()),
        ("wigner_normalisation", grid.normalisation().to_string()),
        ("wigner_coverage_ok", warning.is_none().to_string()),
    ];
    write_output(&companion(&out, "report", "txt"), &head, &report_body(&entries))?;
    if !mle.converged {
        return Err(CliError::Numerical(format!(
            "MLE did not converge within {} iterations; partial outputs written",
            cfg.max_iter
        )));
    }
    Ok(())
}

pub fn fidelity_cmd(cfg: &RunConfig) -> Result<(), CliError> {
    let rho = read_density(input_path(cfg)?)?;
    let (sigma, against) = if cfg.reference.is_empty() {
        let alpha = fit_coherent(&rho);
        (ideal_coherent_state(alpha, rho.dim())?, format!("coherent({},{})", alpha.re, alpha.im))
    } else {
        (read_density(Path::new(&cfg.reference))?, cfg.reference.clone())
    };
    let value = fidelity(&rho, &sigma, cfg.convention.0)?;
    let f_sqrt = fidelity(&rho, &sigma, FidelityConvention::Sqrt)?;
    let entries = [
        ("reference", against),
        ("convention", cfg.convention.to_string()),
        ("fidelity", value.to_string()),
        ("fidelity_sqrt", f_sqrt.to_string()),
        ("fidelity_squared", (f_sqrt * f_sqrt).to_string()),
    ];
    let out = out_path(cfg, "fidelity.txt");
    write_output(&out, &header("fidelity", cfg), &report_body(&entries))
}
