//! Task execution and artifact rendering behind the command line.
//!
//! Artifact bytes depend only on the config contents: parallel stages are
//! mapped in input order and collected before any rendering starts, and the
//! renderers themselves are sequential, so re-running a config reproduces its
//! files byte for byte at any parallelism degree.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use thermoform_core::convex::{entropy_approximation_sequence, RateFunctionHandle};
use thermoform_core::error::{Error, Result};
use thermoform_core::io::{
    format_word, EntropyApproxParams, ExperimentConfig, LdpReportParams, PressureSweepParams,
    RateSweepParams, TaskSpec, TwoDPressureParams,
};
use thermoform_core::ldp::ldp_report;
use thermoform_core::measure::InvariantMeasure;
use thermoform_core::potential::Potential;
use thermoform_core::pressure::{
    equilibrium_state, pressure_2d_box, pressure_2d_strip, pressure_periodic, pressure_separated,
    pressure_spectral,
};
use thermoform_core::report::{
    ext_cell, ldp_csv, round12, sig12, write_json, CsvTable, LdpReportDoc,
};
use thermoform_core::shift::ShiftSpace;

/// Command-line overrides for the config's own output settings.
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

/// 2 when retrying with different numerical parameters could help, 1 when
/// the config itself needs fixing.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

/// Parses and fully validates a config without computing anything.
pub fn validate(path: &Path) -> Result<()> {
    let config = ExperimentConfig::from_path(path)?;
    config.validate()?;
    println!("ok: {} config is runnable", config.task.name());
    Ok(())
}

/// Validates, computes the configured task, and writes its artifacts under
/// the output directory, printing a one-line summary.
pub fn run(path: &Path, opts: &RunOptions) -> Result<()> {
    let config = ExperimentConfig::from_path(path)?;
    config.validate()?;
    let out_dir = opts
        .out
        .clone()
        .or_else(|| config.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out_dir).map_err(|e| {
        Error::invalid(
            "out_dir",
            format!("cannot create {}: {e}", out_dir.display()),
        )
    })?;
    let jobs = opts.jobs.or(config.jobs).unwrap_or(1);
    if jobs == 0 {
        return Err(Error::invalid("jobs", "must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid("jobs", e.to_string()))?;
    let summary = pool.install(|| execute(&config, &out_dir))?;
    println!("{summary}");
    Ok(())
}

fn execute(config: &ExperimentConfig, out: &Path) -> Result<String> {
    match &config.task {
        TaskSpec::PressureSweep(p) => pressure_sweep(config, p, out),
        TaskSpec::Equilibrium => equilibrium(config, out),
        TaskSpec::RateSweep(p) => rate_sweep(config, p, out),
        TaskSpec::LdpReport(p) => ldp_report_task(config, p, out),
        TaskSpec::EntropyApprox(p) => entropy_approx(config, p, out),
        TaskSpec::TwoDPressure(p) => two_d_pressure(config, p, out),
    }
}

fn line_setup(config: &ExperimentConfig) -> Result<(ShiftSpace, Potential<f64>)> {
    let space = config.build_space()?;
    let f = config.build_potential(&space)?;
    Ok((space, f))
}

fn pressure_sweep(
    config: &ExperimentConfig,
    p: &PressureSweepParams,
    out: &Path,
) -> Result<String> {
    let (space, f) = line_setup(config)?;
    let spectral = pressure_spectral(&space, &f)?.value;
    let periodic: Vec<(usize, f64)> =
        p.ns.par_iter()
            .map(|&n| pressure_periodic(&space, &f, n).map(|r| (n, r.value)))
            .collect::<Result<_>>()?;
    let separated: Vec<(usize, usize, f64)> = match p.r {
        Some(r) => {
            p.ns.par_iter()
                .map(|&n| pressure_separated(&space, &f, n, r).map(|res| (n, r, res.value)))
                .collect::<Result<_>>()?
        }
        None => Vec::new(),
    };
    let mut table = CsvTable::new(&["route", "n", "r", "value", "abs_error"]);
    table.push(vec![
        "spectral".into(),
        String::new(),
        String::new(),
        sig12(spectral),
        sig12(0.0),
    ]);
    for &(n, v) in &periodic {
        table.push(vec![
            "periodic".into(),
            n.to_string(),
            String::new(),
            sig12(v),
            sig12((v - spectral).abs()),
        ]);
    }
    for &(n, r, v) in &separated {
        table.push(vec![
            "separated".into(),
            n.to_string(),
            r.to_string(),
            sig12(v),
            sig12((v - spectral).abs()),
        ]);
    }
    let file = out.join("pressure_sweep.csv");
    table.write_to(&file)?;
    Ok(format!(
        "pressure-sweep: spectral {} with {} finite stages -> {}",
        sig12(spectral),
        table.rows().len() - 1,
        file.display()
    ))
}

#[derive(Serialize)]
struct EquilibriumDoc {
    order: usize,
    states: Vec<String>,
    transition: Vec<Vec<f64>>,
    stationary: Vec<f64>,
    potential_integral: f64,
    entropy_rate: f64,
    pressure: f64,
    variational_gap: f64,
}

fn equilibrium(config: &ExperimentConfig, out: &Path) -> Result<String> {
    let (space, f) = line_setup(config)?;
    let m = equilibrium_state(&space, &f)?;
    let k = space.alphabet_size();
    let doc_states: Vec<String> = m.states().iter().map(|w| format_word(w, k)).collect();
    let order = m.order();
    let transition: Vec<Vec<f64>> = m
        .transition()
        .iter()
        .map(|row| row.iter().map(|&x| round12(x)).collect())
        .collect();
    let stationary: Vec<f64> = m.stationary().iter().map(|&x| round12(x)).collect();
    let entropy = m.entropy_rate();
    let mu = InvariantMeasure::from_markov(m);
    let integral = mu.integrate(&f)?;
    let pressure = pressure_spectral(&space, &f)?.value;
    let doc = EquilibriumDoc {
        order,
        states: doc_states,
        transition,
        stationary,
        potential_integral: round12(integral),
        entropy_rate: round12(entropy),
        pressure: round12(pressure),
        variational_gap: round12(pressure - integral - entropy),
    };
    let file = out.join("equilibrium.json");
    write_json(&file, &doc)?;
    Ok(format!(
        "equilibrium: pressure {} entropy {} over {} states -> {}",
        sig12(pressure),
        sig12(entropy),
        doc.states.len(),
        file.display()
    ))
}

fn rate_sweep(config: &ExperimentConfig, p: &RateSweepParams, out: &Path) -> Result<String> {
    let (space, f) = line_setup(config)?;
    let family = p.family.build(&space, "task.rate-sweep.family")?;
    let handle = RateFunctionHandle::new(&space, &f, &family)?;
    let d = family.dim();
    let points: Vec<Vec<f64>> = (0..p.count)
        .map(|i| {
            let frac = if p.count == 1 {
                0.0
            } else {
                i as f64 / (p.count - 1) as f64
            };
            (0..d)
                .map(|j| p.lo[j] + (p.hi[j] - p.lo[j]) * frac)
                .collect()
        })
        .collect();
    let values = points
        .par_iter()
        .map(|x| handle.rate_at(x))
        .collect::<Result<Vec<_>>>()?;
    let mut header: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    header.push("rate".into());
    header.push("iterations".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = CsvTable::new(&header_refs);
    let mut finite = 0usize;
    for (x, rv) in points.iter().zip(&values) {
        let mut row: Vec<String> = x.iter().map(|&c| sig12(c)).collect();
        if rv.value.finite().is_some() {
            finite += 1;
        }
        row.push(ext_cell(rv.value));
        row.push(rv.iterations.to_string());
        table.push(row);
    }
    let file = out.join("rate_sweep.csv");
    table.write_to(&file)?;
    Ok(format!(
        "rate-sweep: {} points ({} finite) -> {}",
        p.count,
        finite,
        file.display()
    ))
}

#[derive(Serialize)]
struct LdpArtifact<'a> {
    config: &'a ExperimentConfig,
    report: LdpReportDoc,
}

fn ldp_report_task(config: &ExperimentConfig, p: &LdpReportParams, out: &Path) -> Result<String> {
    let (space, f) = line_setup(config)?;
    let family = p.family.build(&space, "task.ldp-report.family")?;
    let query = p.box_query.build("task.ldp-report.box")?;
    let report = ldp_report(&space, &f, &family, &query, &p.ns, p.variant.provenance())?;
    let csv_file = out.join("ldp_report.csv");
    ldp_csv(&report).write_to(&csv_file)?;
    let json_file = out.join("ldp_report.json");
    let doc = LdpReportDoc::from_report(&report);
    write_json(
        &json_file,
        &LdpArtifact {
            config,
            report: doc,
        },
    )?;
    Ok(format!(
        "ldp-report: {} over {} with {} rows -> {}, {}",
        report.variant.name(),
        report.box_query.label(),
        report.rows.len(),
        csv_file.display(),
        json_file.display()
    ))
}

fn entropy_approx(
    config: &ExperimentConfig,
    p: &EntropyApproxParams,
    out: &Path,
) -> Result<String> {
    let (space, f) = line_setup(config)?;
    let target = p.target.build(&space, "task.entropy-approx.target")?;
    let steps = entropy_approximation_sequence(&space, &f, &target, p.max_window, p.moment_tol)?;
    let mut table = CsvTable::new(&[
        "window",
        "family_dim",
        "perturbed",
        "moment_error",
        "entropy",
        "entropy_gap",
        "status",
    ]);
    for step in &steps {
        table.push(vec![
            step.window.to_string(),
            step.family_dim.to_string(),
            step.perturbed.to_string(),
            step.moment_error.map(sig12).unwrap_or_default(),
            step.entropy.map(sig12).unwrap_or_default(),
            step.entropy_gap.map(sig12).unwrap_or_default(),
            step.failure.clone().unwrap_or_else(|| "ok".into()),
        ]);
    }
    let file = out.join("entropy_approx.csv");
    table.write_to(&file)?;
    let final_gap = steps.iter().rev().find_map(|s| s.entropy_gap);
    let gap_text = match final_gap {
        Some(g) => format!("final gap {}", sig12(g)),
        None => "no converged window".into(),
    };
    Ok(format!(
        "entropy-approx: target entropy {} over {} windows, {} -> {}",
        sig12(target.entropy_rate()),
        steps.len(),
        gap_text,
        file.display()
    ))
}

fn two_d_pressure(config: &ExperimentConfig, p: &TwoDPressureParams, out: &Path) -> Result<String> {
    let space = config.build_space()?;
    let k = space.alphabet_size();
    let nn = p.pair.build(k, "task.2d-pressure.pair")?;
    let strips: Vec<(usize, f64)> = p
        .widths
        .par_iter()
        .map(|&w| pressure_2d_strip(k, &nn, w).map(|r| (w, r.value)))
        .collect::<Result<_>>()?;
    let boxes: Vec<(usize, usize, f64)> = p
        .boxes
        .par_iter()
        .map(|&[a1, a2]| pressure_2d_box(k, &nn, a1, a2).map(|r| (a1, a2, r.value)))
        .collect::<Result<_>>()?;
    let mut table = CsvTable::new(&["engine", "width", "a1", "a2", "value"]);
    for &(w, v) in &strips {
        table.push(vec![
            "strip".into(),
            w.to_string(),
            String::new(),
            String::new(),
            sig12(v),
        ]);
    }
    for &(a1, a2, v) in &boxes {
        table.push(vec![
            "box".into(),
            String::new(),
            a1.to_string(),
            a2.to_string(),
            sig12(v),
        ]);
    }
    let file = out.join("pressure_2d.csv");
    table.write_to(&file)?;
    Ok(format!(
        "2d-pressure: {} strips, {} boxes -> {}",
        strips.len(),
        boxes.len(),
        file.display()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_separate_bad_configs_from_bad_convergence() {
        assert_eq!(exit_code(&Error::invalid("space", "whatever")), 1);
        assert_eq!(exit_code(&Error::ZeroWindow), 1);
        assert_eq!(
            exit_code(&Error::EigenNonConvergence {
                iterations: 7,
                width: 1.0
            }),
            2
        );
        assert_eq!(
            exit_code(&Error::DualNonConvergence {
                iterations: 7,
                grad_norm: 1.0,
                t_norm: 1.0
            }),
            2
        );
        assert_eq!(
            exit_code(&Error::StationaryResidual {
                residual: 1.0,
                tol: 1e-10
            }),
            2
        );
    }
}
