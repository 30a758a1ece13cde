//! The five commands. Each resolves its inputs from the shared
//! configuration, runs the library, and writes CSV (plus JSON for fits).
//! Sweep points are independent, so they map over the worker pool; the
//! collected order always follows the input order, which keeps output
//! files identical for any worker count.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use rayon::prelude::*;
use serde::Serialize;

use dicke::analysis::{
    bandwidth_sectored, critical_line, fit, heating_time, inverse_participation_ratio,
    level_stats_floquet, level_stats_static, saturation_value, FitModel, HeatingResult,
};
use dicke::drives::ProtocolKind;
use dicke::dynamics::{
    evolve_and_record, infinite_temperature_refs, prepare_initial_states, EvolveOptions,
    InitialEnsemble, Observable, ObservableSeries,
};
use dicke::floquet::HermitianEigen;
use dicke::hilbert::{extract_block, parity_partition, OperatorMatrix};
use dicke::model::{
    drive_operator, effective_from_parts, effective_hamiltonian, magnus_parameter,
    static_hamiltonian, DriveParams, ModelParams,
};

use crate::config::RunConfig;
use crate::output::{num, opt, Csv, ARTIFACT};

const OBSERVABLES: [Observable; 2] = [Observable::BosonNumber, Observable::EntanglementEntropy];

fn linspace(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        bail!("grid steps must be at least 1");
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    if hi < lo {
        bail!("grid bounds inverted: {hi} < {lo}");
    }
    Ok((0..steps)
        .map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64)
        .collect())
}

/// `foo.csv` -> `foo.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(suffix)
}

fn magnus_comment(csv: &mut Csv, drive: &DriveParams) {
    let q = magnus_parameter(drive);
    if q >= 1.0 {
        csv.comment(&format!(
            "warning: squared drive area (T Omega)^2 = {} is not small; \
             the second-order effective description is uncontrolled here",
            num(q)
        ));
    }
}

fn grid_axis(min: Option<f64>, max: Option<f64>, steps: Option<usize>, name: &str) -> Result<Vec<f64>> {
    let (Some(lo), Some(hi), Some(n)) = (min, max, steps) else {
        bail!("missing grid keys: set {name}_min, {name}_max, {name}_steps");
    };
    linspace(lo, hi, n)
}

pub fn phase_diagram(cfg: &RunConfig) -> Result<()> {
    let basis = cfg.basis()?;
    let drive = cfg.drive()?;
    let g1s = grid_axis(cfg.g1_min, cfg.g1_max, cfg.g1_steps, "g1")?;
    let g2s = grid_axis(cfg.g2_min, cfg.g2_max, cfg.g2_steps, "g2")?;
    let (even, odd) = parity_partition(&basis);
    let v = drive_operator(drive.amplitude, &basis);
    let drive_blocks = [extract_block(&v.data, &even), extract_block(&v.data, &odd)];
    let sectors = [even, odd];

    // Per point: effective Hamiltonian on each parity block, ground state
    // from the lower block minimum, then its inverse participation ratio.
    let ground_ipr = |g1: f64, g2: f64| -> Result<f64> {
        let params = ModelParams::new(cfg.omega(), cfg.omega0(), g1, g2)?;
        let h = static_hamiltonian(&params, &basis);
        let mut lowest = f64::INFINITY;
        let mut ipr = f64::NAN;
        for (idx, vb) in sectors.iter().zip(&drive_blocks) {
            let hb = extract_block(&h.data, idx);
            let heff = OperatorMatrix::hermitian(effective_from_parts(&hb, vb, drive.period));
            let eig = HermitianEigen::decompose(&heff)?;
            if eig.values[0] < lowest {
                lowest = eig.values[0];
                ipr = inverse_participation_ratio(&eig.vectors.column(0).to_owned());
            }
        }
        Ok(ipr)
    };

    let points: Vec<(f64, f64)> = g1s
        .iter()
        .flat_map(|&g1| g2s.iter().map(move |&g2| (g1, g2)))
        .collect();
    let iprs: Vec<f64> = points
        .par_iter()
        .map(|&(g1, g2)| ground_ipr(g1, g2))
        .collect::<Result<_>>()?;

    let meta = cfg.resolved_entries();
    let mut grid = Csv::new("phase-diagram", &meta);
    magnus_comment(&mut grid, &drive);
    grid.header(&["g1", "g2", "ipr"]);
    for (&(g1, g2), &ipr) in points.iter().zip(&iprs) {
        grid.row(&[num(g1), num(g2), num(ipr)]);
    }
    grid.write(&cfg.output("phase-diagram.csv"))?;

    let line_params = ModelParams::new(cfg.omega(), cfg.omega0(), 0.0, 0.0)?;
    let mut line = Csv::new("phase-diagram", &meta);
    magnus_comment(&mut line, &drive);
    line.comment("predicted critical coupling per g1");
    line.header(&["g1", "g2_critical"]);
    for &g1 in &g1s {
        line.row(&[num(g1), num(critical_line(g1, &line_params, &drive)?)]);
    }
    let line_path = cfg
        .line_output
        .clone()
        .unwrap_or_else(|| sibling(&cfg.output("phase-diagram.csv"), "line.csv"));
    line.write(&line_path)
}

pub fn level_stats(cfg: &RunConfig) -> Result<()> {
    let params = cfg.model_params()?;
    let basis = cfg.basis()?;
    let policy = cfg.sector_policy()?;
    let trim = cfg.trim_fraction();
    let freqs = match &cfg.omega_d_list {
        Some(list) if !list.is_empty() => list.clone(),
        _ => bail!("missing required key `omega_d_list`"),
    };
    let h = static_hamiltonian(&params, &basis);
    let span = bandwidth_sectored(&h, &basis)?;

    let rows: Vec<(f64, f64, f64)> = freqs
        .par_iter()
        .map(|&wd| {
            let drive = DriveParams::from_frequency(cfg.amplitude(), wd)?;
            let driven = level_stats_floquet(&params, &drive, &basis, policy, trim)?.mean_r;
            let heff = effective_hamiltonian(&params, &drive, &basis);
            let effective = level_stats_static(&heff, &basis, policy, trim)?.mean_r;
            Ok((wd, driven, effective))
        })
        .collect::<Result<_>>()?;
    let undriven = level_stats_static(&h, &basis, policy, trim)?.mean_r;

    let mut csv = Csv::new("level-stats", &cfg.resolved_entries());
    csv.comment(&format!("spectral span = {}", num(span)));
    csv.header(&["kind", "omega_d", "omega_d_over_span", "mean_r"]);
    for (wd, driven, effective) in rows {
        csv.row(&["floquet".into(), num(wd), num(wd / span), num(driven)]);
        csv.row(&["effective".into(), num(wd), num(wd / span), num(effective)]);
    }
    csv.row(&["static".into(), String::new(), String::new(), num(undriven)]);
    csv.write(&cfg.output("level-stats.csv"))
}

fn truncation_comment(csv: &mut Csv, series: &ObservableSeries, label: &str) {
    if let Some(warn) = &series.truncation {
        csv.comment(&format!(
            "warning: {label} truncation monitor tripped at t = {}; \
             worst top-band weight {}",
            num(warn.first_time),
            num(warn.worst_weight)
        ));
    }
}

pub fn evolve(cfg: &RunConfig) -> Result<()> {
    let params = cfg.model_params()?;
    let basis = cfg.basis()?;
    let drive = cfg.drive()?;
    let plan = cfg.plan()?;
    let ensemble = prepare_initial_states(&params, &basis, cfg.target_energy()?, cfg.count())?;
    let mut series = evolve_and_record(
        &params,
        &drive,
        &basis,
        &plan,
        &ensemble,
        &OBSERVABLES,
        &EvolveOptions::default(),
    )?;
    let entropy = series.remove(1);
    let boson = series.remove(0);
    let (n_inf, s_page) = infinite_temperature_refs(cfg.n_atoms(), cfg.n_max());

    let mut csv = Csv::new("evolve", &cfg.resolved_entries());
    magnus_comment(&mut csv, &drive);
    csv.comment(&format!("achieved mean initial energy = {}", num(ensemble.mean_energy)));
    csv.comment(&format!("boson reference N_inf = {}", num(n_inf)));
    csv.comment(&format!("entropy reference S_page = {}", num(s_page)));
    truncation_comment(&mut csv, &boson, "boson series");
    truncation_comment(&mut csv, &entropy, "entropy series");

    let count = ensemble.count();
    let mut columns = vec!["time".to_string(), "boson_mean".into(), "entropy_mean".into()];
    if cfg.per_state() {
        columns.extend((1..=count).map(|k| format!("boson_{k}")));
        columns.extend((1..=count).map(|k| format!("entropy_{k}")));
    }
    let header: Vec<&str> = columns.iter().map(String::as_str).collect();
    csv.header(&header);
    for (t, &time) in boson.times.iter().enumerate() {
        let mut cells = vec![num(time), num(boson.mean[t]), num(entropy.mean[t])];
        if cfg.per_state() {
            cells.extend((0..count).map(|k| num(boson.per_state[(k, t)])));
            cells.extend((0..count).map(|k| num(entropy.per_state[(k, t)])));
        }
        csv.row(&cells);
    }
    csv.write(&cfg.output("evolve.csv"))
}

struct SweepRow {
    x: f64,
    heat: HeatingResult,
    n_sat: f64,
    s_sat: f64,
}

#[derive(Serialize)]
struct FitReport<'a> {
    artifact: &'static str,
    command: &'static str,
    config: &'a BTreeMap<String, String>,
    model: Option<&'static str>,
    reason: Option<String>,
    slope: Option<f64>,
    intercept: Option<f64>,
    r_squared: Option<f64>,
    residuals: Option<Vec<f64>>,
    points_used: usize,
    excluded_no_heating: usize,
}

fn model_name(model: FitModel) -> &'static str {
    match model {
        FitModel::LogVsSqrtFreq => "log-tau-vs-sqrt-frequency",
        FitModel::LogVsFreq => "log-tau-vs-frequency",
        FitModel::PowerLawInEnergy => "power-law-in-energy",
    }
}

pub fn heating(cfg: &RunConfig) -> Result<()> {
    let params = cfg.model_params()?;
    let basis = cfg.basis()?;
    let plan = cfg.plan()?;
    let window = cfg.plateau_window()?;
    let sustain = cfg.sustain();
    let (_, s_page) = infinite_temperature_refs(cfg.n_atoms(), cfg.n_max());

    let run_point = |drive: &DriveParams, ensemble: &InitialEnsemble, x: f64| -> Result<SweepRow> {
        let mut series = evolve_and_record(
            &params,
            drive,
            &basis,
            &plan,
            ensemble,
            &OBSERVABLES,
            &EvolveOptions::default(),
        )?;
        let entropy = series.remove(1);
        let boson = series.remove(0);
        let heat = heating_time(&entropy.times, &entropy.mean, s_page, &window, sustain)?;
        Ok(SweepRow {
            x,
            heat,
            n_sat: saturation_value(&boson.mean)?,
            s_sat: saturation_value(&entropy.mean)?,
        })
    };

    let (x_name, rows, fit_model): (&str, Vec<SweepRow>, Option<FitModel>) = match (
        &cfg.omega_d_list,
        &cfg.energy_list,
    ) {
        (Some(_), Some(_)) => bail!("omega_d_list and energy_list both set; give exactly one"),
        (Some(freqs), None) => {
            let ensemble =
                prepare_initial_states(&params, &basis, cfg.target_energy()?, cfg.count())?;
            let rows = freqs
                .par_iter()
                .map(|&wd| {
                    let drive = DriveParams::from_frequency(cfg.amplitude(), wd)?;
                    run_point(&drive, &ensemble, wd)
                })
                .collect::<Result<_>>()?;
            let model = match cfg.protocol()? {
                ProtocolKind::ThueMorse => Some(FitModel::LogVsSqrtFreq),
                ProtocolKind::Fibonacci => Some(FitModel::LogVsFreq),
                ProtocolKind::Periodic => None,
            };
            ("omega_d", rows, model)
        }
        (None, Some(energies)) => {
            let drive = cfg.drive()?;
            let rows = energies
                .par_iter()
                .map(|&e| {
                    let ensemble = prepare_initial_states(&params, &basis, e, cfg.count())?;
                    run_point(&drive, &ensemble, e)
                })
                .collect::<Result<_>>()?;
            ("target_energy", rows, Some(FitModel::PowerLawInEnergy))
        }
        (None, None) => bail!("missing sweep: set omega_d_list or energy_list"),
    };

    let usable: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.heat.tau_star.map(|tau| (r.x, tau)))
        .collect();
    let excluded = rows.len() - usable.len();
    let mut reason = None;
    let fitted = match fit_model {
        None => {
            reason = Some("periodic protocol carries no heating-time scaling law".to_string());
            None
        }
        Some(_) if usable.len() < 3 => {
            reason = Some(format!(
                "no fit: {} usable point(s) after excluding no-heating rows, need 3",
                usable.len()
            ));
            None
        }
        Some(model) => {
            let xs: Vec<f64> = usable.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = usable.iter().map(|p| p.1).collect();
            Some(fit(model, &xs, &ys)?)
        }
    };

    let meta = cfg.resolved_entries();
    let mut csv = Csv::new("heating", &meta);
    csv.comment(&format!("entropy reference S_page = {}", num(s_page)));
    if let Some(text) = &reason {
        csv.comment(text);
    }
    if excluded > 0 {
        csv.comment(&format!("{excluded} row(s) show no heating within budget; excluded from the fit"));
    }
    csv.header(&[x_name, "tau_star", "s_plateau", "n_saturation", "s_saturation", "no_heating"]);
    for row in &rows {
        csv.row(&[
            num(row.x),
            opt(row.heat.tau_star),
            num(row.heat.plateau_value),
            num(row.n_sat),
            num(row.s_sat),
            row.heat.no_heating.to_string(),
        ]);
    }
    csv.write(&cfg.output("heating.csv"))?;

    let report = FitReport {
        artifact: ARTIFACT,
        command: "heating",
        config: &meta,
        model: fit_model.map(model_name),
        reason,
        slope: fitted.as_ref().map(|f| f.slope),
        intercept: fitted.as_ref().map(|f| f.intercept),
        r_squared: fitted.as_ref().map(|f| f.r_squared),
        residuals: fitted.as_ref().map(|f| f.residuals.clone()),
        points_used: usable.len(),
        excluded_no_heating: excluded,
    };
    let fit_path = cfg
        .fit_output
        .clone()
        .unwrap_or_else(|| sibling(&cfg.output("heating.csv"), "fit.json"));
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    std::fs::write(&fit_path, text)
        .map_err(|e| anyhow::anyhow!("writing {}: {e}", fit_path.display()))?;
    println!("wrote {}", fit_path.display());
    Ok(())
}

fn relative_deviation(a: f64, b: f64) -> f64 {
    let denom = a.abs().max(b.abs());
    if denom == 0.0 {
        0.0
    } else {
        (a - b).abs() / denom
    }
}

pub fn convergence(cfg: &RunConfig) -> Result<()> {
    let pipeline = cfg.pipeline.as_deref().unwrap_or("evolve");
    let cutoffs = [cfg.n_max(), cfg.n_max() + cfg.delta_n_max()];
    let mut csv = Csv::new("convergence", &cfg.resolved_entries());
    csv.comment(&format!("boson cutoffs compared: {} and {}", cutoffs[0], cutoffs[1]));

    let rows: Vec<(&str, f64, f64)> = match pipeline {
        "evolve" => {
            let mut finals = Vec::new();
            for &n_max in &cutoffs {
                let basis = dicke::hilbert::build_basis(cfg.n_atoms(), n_max)?;
                let params = cfg.model_params()?;
                let ensemble =
                    prepare_initial_states(&params, &basis, cfg.target_energy()?, cfg.count())?;
                let series = evolve_and_record(
                    &params,
                    &cfg.drive()?,
                    &basis,
                    &cfg.plan()?,
                    &ensemble,
                    &OBSERVABLES,
                    &EvolveOptions::default(),
                )?;
                truncation_comment(&mut csv, &series[0], &format!("n_max = {n_max} boson series"));
                truncation_comment(&mut csv, &series[1], &format!("n_max = {n_max} entropy series"));
                finals.push((
                    *series[0].mean.last().expect("nonempty series"),
                    *series[1].mean.last().expect("nonempty series"),
                ));
            }
            vec![
                ("boson_number_final", finals[0].0, finals[1].0),
                ("entropy_final", finals[0].1, finals[1].1),
            ]
        }
        "level-stats" => {
            let drive = cfg.drive()?;
            let params = cfg.model_params()?;
            let policy = cfg.sector_policy()?;
            let mut means = Vec::new();
            for &n_max in &cutoffs {
                let basis = dicke::hilbert::build_basis(cfg.n_atoms(), n_max)?;
                means.push(
                    level_stats_floquet(&params, &drive, &basis, policy, cfg.trim_fraction())?
                        .mean_r,
                );
            }
            vec![("mean_r", means[0], means[1])]
        }
        other => bail!("unknown pipeline `{other}` (evolve, level-stats)"),
    };

    let worst = rows
        .iter()
        .map(|&(_, a, b)| relative_deviation(a, b))
        .fold(0.0_f64, f64::max);
    csv.comment(&format!("max relative deviation = {}", num(worst)));
    csv.header(&["observable", "value_base", "value_extended", "relative_deviation"]);
    for (name, a, b) in rows {
        csv.row(&[name.into(), num(a), num(b), num(relative_deviation(a, b))]);
    }
    csv.write(&cfg.output("convergence.csv"))
}
