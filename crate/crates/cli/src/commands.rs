use serde::Serialize;
use spme_core::analysis::{
    barenblatt_check, cauchy_assertions, contraction_assertions, contraction_experiment, domination_check,
    weak_form_refinement, wz_convergence, Assertion, CauchyTable, ContractionReport,
};
use spme_core::barenblatt::{oracle_curve, support_rate_constant, BarenblattProfile};
use spme_core::brownian::{write_path_binary, write_path_csv};
use spme_core::extinction::{mc_extinction, write_records_csv};
use spme_core::io::{fmt_f64, to_json_bytes, write_diagnostics_csv, write_frames_binary, write_snapshots_csv};
use spme_core::solver::diagnostics_report;
use spme_core::{derive_seed, initial_density, mollify, sample_path, solve, Grid1D};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::run_dir::RunDir;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Barenblatt,
    Contraction,
    Weakform,
    Domination,
    Convergence,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Barenblatt => "barenblatt",
            Suite::Contraction => "contraction",
            Suite::Weakform => "weakform",
            Suite::Domination => "domination",
            Suite::Convergence => "convergence",
        }
    }
}

#[derive(Serialize)]
struct ValidationReport<'a> {
    suite: &'a str,
    passed: bool,
    assertions: &'a [Assertion],
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(header).map_err(std::io::Error::from)?;
    for r in rows {
        out.write_record(&r).map_err(std::io::Error::from)?;
    }
    out.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

fn buffer(f: impl FnOnce(&mut Vec<u8>) -> spme_core::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    f(&mut out)?;
    Ok(out)
}

pub fn solve_cmd(cfg: &RunConfig, dir: &mut RunDir) -> Result<(), CliError> {
    let solver = cfg.solver_config();
    solver.validate()?;
    let u0 = initial_density(&cfg.profile, solver.grid)?;
    let path = sample_path(solver.t_end, cfg.path_dt(solver.epsilon), derive_seed(cfg.seed, 0))?;
    let mpath = mollify(&path, solver.epsilon)?;
    let trace = solve(&solver, &mpath, &u0, cfg.output.snapshot_stride)?;
    dir.write("path.csv", &buffer(|w| write_path_csv(w, &mpath))?)?;
    dir.write("path.bin", &buffer(|w| write_path_binary(w, &path, Some(&mpath)))?)?;
    dir.write("snapshots.csv", &buffer(|w| write_snapshots_csv(w, &trace.snapshots))?)?;
    dir.write("snapshots.bin", &buffer(|w| write_frames_binary(w, &trace.snapshots, f64::NAN))?)?;
    dir.write("diagnostics.csv", &buffer(|w| write_diagnostics_csv(w, &trace))?)?;
    dir.write("diagnostics.json", &to_json_bytes(&diagnostics_report(&trace))?)?;
    Ok(())
}

pub fn mc_cmd(cfg: &RunConfig, dir: &mut RunDir) -> Result<(), CliError> {
    let run = mc_extinction(&cfg.mc_config()?)?;
    dir.write("mc_summary.csv", &buffer(|w| run.summary.write_csv(w))?)?;
    dir.write("mc_summary.json", &run.summary.to_json()?)?;
    dir.write("records.csv", &buffer(|w| write_records_csv(w, &run.records))?)?;
    Ok(())
}

fn contraction_report(cfg: &RunConfig) -> Result<ContractionReport, CliError> {
    Ok(contraction_experiment(&cfg.ladder_config(), cfg.contraction.kappa, cfg.contraction_interval())?)
}

pub fn contraction_cmd(cfg: &RunConfig, dir: &mut RunDir) -> Result<(), CliError> {
    let report = contraction_report(cfg)?;
    let rows = report.pairs.iter().map(|p| {
        [p.epsilon, p.epsilon_hat, p.distance, p.std_error, p.t_sup, p.plain_distance, p.initial_term]
            .map(fmt_f64)
            .to_vec()
    });
    let header = ["epsilon", "epsilon_hat", "distance", "std_error", "t_sup", "plain_distance", "initial_term"];
    dir.write("contraction.csv", &csv_bytes(&header, rows)?)?;
    dir.write("contraction.json", &to_json_bytes(&report)?)?;
    Ok(())
}

fn convergence_table(cfg: &RunConfig) -> Result<CauchyTable, CliError> {
    Ok(wz_convergence(&cfg.ladder_config(), cfg.convergence.tau)?)
}

pub fn convergence_cmd(cfg: &RunConfig, dir: &mut RunDir) -> Result<(), CliError> {
    let table = convergence_table(cfg)?;
    let rows = table.rows.iter().map(|r| {
        [r.epsilon, r.epsilon_next, r.sup_l1, r.sup_l1_std_error, r.integrated_l1, r.integrated_head]
            .map(fmt_f64)
            .to_vec()
    });
    let header = ["epsilon", "epsilon_next", "sup_l1", "sup_l1_std_error", "integrated_l1", "integrated_head"];
    dir.write("convergence.csv", &csv_bytes(&header, rows)?)?;
    dir.write("convergence.json", &to_json_bytes(&table)?)?;
    Ok(())
}

/// Oracle density and pressure of the configured Barenblatt profile at every
/// snapshot time, plus its support-rate constant.
pub fn barenblatt_cmd(cfg: &RunConfig, dir: &mut RunDir) -> Result<(), CliError> {
    let b = &cfg.barenblatt;
    let g = Grid1D::new(b.domain.0, b.domain.1, b.n)?;
    let profile = BarenblattProfile::new(b.m, b.c, b.t0, g.midpoint())?;
    let stride = cfg.output.snapshot_stride;
    if !(stride > 0.0) {
        return Err(CliError::Config("output.snapshot_stride must be positive".into()));
    }
    let steps = (b.t_end / stride).round() as usize;
    let mut rows = Vec::new();
    for k in 0..=steps {
        let t = (k as f64 * stride).min(b.t_end);
        for [x, u, p] in oracle_curve(&profile, t, b.domain.0, b.domain.1, b.n + 1) {
            rows.push([t, x, u, p].map(fmt_f64).to_vec());
        }
    }
    dir.write("barenblatt.csv", &csv_bytes(&["t", "x", "u", "p"], rows)?)?;
    #[derive(Serialize)]
    struct ProfileReport {
        profile: BarenblattProfile,
        alpha: f64,
        k: f64,
        radius_at_end: f64,
        support_rate: spme_core::SupportRate,
    }
    let report = ProfileReport {
        profile,
        alpha: profile.alpha(),
        k: profile.k(),
        radius_at_end: profile.free_boundary(b.t_end),
        support_rate: support_rate_constant(&profile),
    };
    dir.write("barenblatt.json", &to_json_bytes(&report)?)?;
    Ok(())
}

pub fn validate_cmd(cfg: &RunConfig, suite: Suite, dir: &mut RunDir) -> Result<(), CliError> {
    let assertions = match suite {
        Suite::Barenblatt => barenblatt_check(&cfg.barenblatt)?.assertions,
        Suite::Contraction => contraction_assertions(&contraction_report(cfg)?),
        Suite::Convergence => cauchy_assertions(&convergence_table(cfg)?),
        Suite::Weakform => weak_form_refinement(&cfg.weakform)?.assertions,
        Suite::Domination => domination_check(&cfg.barenblatt, &cfg.domination)?,
    };
    if assertions.is_empty() {
        return Err(CliError::Config(format!("suite {} produced no assertions", suite.name())));
    }
    let passed = assertions.iter().all(|a| a.passed);
    dir.write(
        "report.json",
        &to_json_bytes(&ValidationReport {
            suite: suite.name(),
            passed,
            assertions: &assertions,
        })?,
    )?;
    for a in &assertions {
        println!(
            "{} {} = {} {} {}",
            if a.passed { "ok  " } else { "FAIL" },
            a.name,
            a.measured,
            a.relation,
            a.threshold
        );
    }
    if passed {
        Ok(())
    } else {
        Err(CliError::Acceptance(
            assertions.iter().filter(|a| !a.passed).map(|a| a.name.clone()).collect(),
        ))
    }
}
