//! Experiment dispatch: configs in, report rows and key numbers out.
//!
//! Library errors surface as config errors (the config asked for something
//! the library rejects); tolerance violations on successfully computed
//! results are collected separately so the caller can emit the data and
//! still exit with the physics-assertion status.

use bosechain::evolve::{analytic_single_particle_propagator, Propagator};
use bosechain::fock::{Basis, Sector, StateVector};
use bosechain::function::MonomialFunction;
use bosechain::interference::{run_interference, run_interference_at, PathLattice};
use bosechain::model::{build_bose_hubbard, ChainSpec, DressingSpec};
use bosechain::transfer::{
    run_dressed_transfer, run_state_transfer, run_transfer, signature, Medium, TransferOptions,
    TransferReport,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{ExperimentConfig, ExperimentKind, Tolerances};
use crate::output::{OracleRow, Report};
use crate::CliError;

pub struct RunOutcome {
    pub reports: Vec<Report>,
    /// Experiment-specific key numbers for the stdout summary.
    pub key_numbers: Map<String, Value>,
    /// First tolerance violation, if any; data is still emitted.
    pub violation: Option<String>,
}

fn lib_err(e: bosechain::Error) -> CliError {
    CliError::Config(e.to_string())
}

pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    match cfg.experiment {
        ExperimentKind::Transfer => run_transfer_experiment(cfg),
        ExperimentKind::Repulsion => run_repulsion_experiment(cfg),
        ExperimentKind::Dressed => run_dressed_experiment(cfg),
        ExperimentKind::Interference => run_interference_experiment(cfg),
        ExperimentKind::OracleCheck => run_oracle_experiment(cfg),
        ExperimentKind::Sweep => run_sweep_experiment(cfg),
    }
}

fn chain_of(cfg: &ExperimentConfig) -> Result<ChainSpec, CliError> {
    cfg.chain
        .as_ref()
        .ok_or_else(|| CliError::Config("config error at /chain: required field is missing".into()))?
        .build()
}

fn function_of(cfg: &ExperimentConfig, sites: usize) -> Result<MonomialFunction, CliError> {
    let text = cfg.function.as_ref().ok_or_else(|| {
        CliError::Config("config error at /function: required field is missing".into())
    })?;
    MonomialFunction::parse(text, sites)
        .map_err(|e| CliError::Config(format!("config error at /function: {e}")))
}

fn medium_of(cfg: &ExperimentConfig, sites: usize) -> Result<Medium, CliError> {
    match &cfg.medium {
        None => Ok(Medium::Vacuum),
        Some(m) => {
            let mut zero_based = Vec::with_capacity(m.sites.len());
            for (i, &s) in m.sites.iter().enumerate() {
                if s == 0 || s > sites {
                    return Err(CliError::Config(format!(
                        "config error at /medium/sites/{i}: site {s} outside 1..={sites}"
                    )));
                }
                zero_based.push(s - 1);
            }
            Ok(Medium::RandomSites {
                sites: zero_based,
                bosons: m.bosons,
                seed: m.seed,
            })
        }
    }
}

/// Tolerance check shared by the transfer-family experiments.
fn transfer_violation(report: &TransferReport, tol: &Tolerances) -> Option<String> {
    // an out-of-budget truncation makes every other number unreliable,
    // so it outranks the fidelity and phase checks
    if let Some(loss) = report.truncation_loss {
        if loss > tol.max_truncation_loss() {
            return Some(format!(
                "truncation loss {loss:.3e} above the configured bound {:.3e}; result unreliable",
                tol.max_truncation_loss()
            ));
        }
    }
    if report.mirror_law_exact {
        if report.fidelity < tol.min_fidelity() {
            return Some(format!(
                "fidelity {:.12} below the configured minimum {:.12} in a mirror-exact configuration",
                report.fidelity,
                tol.min_fidelity()
            ));
        }
        if report.phase_error > tol.max_phase_error() {
            return Some(format!(
                "phase error {:.3e} above the configured maximum {:.3e}",
                report.phase_error,
                tol.max_phase_error()
            ));
        }
    }
    None
}

fn run_transfer_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let chain = chain_of(cfg)?;
    let f = function_of(cfg, chain.sites())?;
    let medium = medium_of(cfg, chain.sites())?;
    let options = TransferOptions {
        time: cfg.time,
        ..Default::default()
    };
    let tol = cfg.tolerances();
    let report = run_transfer(&chain, &f, &medium, &options).map_err(lib_err)?;
    let violation = transfer_violation(&report, &tol);
    let mut key = Map::new();
    key.insert("fidelity".into(), json!(report.fidelity));
    key.insert("phase_error".into(), json!(report.phase_error));
    key.insert("signature".into(), json!(report.signature));
    key.insert("pst_profile".into(), json!(report.pst_profile));
    key.insert("mirror_law_exact".into(), json!(report.mirror_law_exact));
    Ok(RunOutcome {
        reports: vec![Report::Transfer {
            sweep_value: None,
            report,
        }],
        key_numbers: key,
        violation,
    })
}

fn run_repulsion_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let chain = chain_of(cfg)?;
    let draws = cfg.draws.unwrap_or(5);
    let seed = cfg.seed.unwrap_or(1);
    let tol = cfg.tolerances();
    let basis = Basis::new(chain.sites(), Sector::TotalAtMost(1)).map_err(lib_err)?;
    let options = TransferOptions {
        time: cfg.time,
        ..Default::default()
    };
    let mut reports = Vec::with_capacity(draws);
    let mut violation = None;
    let mut min_fidelity = f64::INFINITY;
    let mut max_phase = 0.0f64;
    for draw in 0..draws {
        let state = StateVector::random(basis.clone(), seed.wrapping_add(draw as u64));
        let report = run_state_transfer(&chain, &state, &options).map_err(lib_err)?;
        min_fidelity = min_fidelity.min(report.fidelity);
        max_phase = max_phase.max(report.phase_error);
        if violation.is_none() {
            violation = transfer_violation(&report, &tol);
        }
        reports.push(Report::Transfer {
            sweep_value: None,
            report,
        });
    }
    let mut key = Map::new();
    key.insert("draws".into(), json!(draws));
    key.insert("min_fidelity".into(), json!(min_fidelity));
    key.insert("max_phase_error".into(), json!(max_phase));
    key.insert("interaction".into(), json!(chain.interaction()));
    Ok(RunOutcome {
        reports,
        key_numbers: key,
        violation,
    })
}

fn run_dressed_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let chain = chain_of(cfg)?;
    let f = function_of(cfg, chain.sites())?;
    let dressing = cfg
        .dressing
        .as_ref()
        .ok_or_else(|| {
            CliError::Config("config error at /dressing: required field is missing".into())
        })?
        .build()?;
    let n_max = cfg.n_max.ok_or_else(|| {
        CliError::Config("config error at /n_max: required field is missing".into())
    })?;
    let tol = cfg.tolerances();
    let options = TransferOptions {
        time: cfg.time,
        ..Default::default()
    };
    let report = run_dressed_transfer(&chain, &dressing, &f, n_max, &options).map_err(lib_err)?;
    let violation = transfer_violation(&report, &tol);
    let mut key = Map::new();
    key.insert("fidelity".into(), json!(report.fidelity));
    key.insert("phase_error".into(), json!(report.phase_error));
    key.insert("truncation_loss".into(), json!(report.truncation_loss));
    key.insert("dimension".into(), json!(report.dimension));
    Ok(RunOutcome {
        reports: vec![Report::Transfer {
            sweep_value: None,
            report,
        }],
        key_numbers: key,
        violation,
    })
}

fn run_interference_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let lengths = cfg.paths.as_ref().ok_or_else(|| {
        CliError::Config("config error at /paths: required field is missing".into())
    })?;
    let j = cfg
        .chain
        .as_ref()
        .and_then(|c| c.coupling)
        .unwrap_or(1.0);
    let paths = lengths
        .iter()
        .map(|&n| ChainSpec::engineered(n, j, 0.0, 0.0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(lib_err)?;
    let amplitudes: Vec<Complex64> = match &cfg.amplitudes {
        Some(a) => a.iter().map(|&c| c.into()).collect(),
        None => vec![Complex64::new(1.0, 0.0); paths.len()],
    };
    let lattice = PathLattice::with_amplitudes(paths, amplitudes.clone()).map_err(lib_err)?;
    let profile = match cfg.time {
        Some(t) => run_interference_at(&lattice, t).map_err(lib_err)?,
        None => run_interference(&lattice).map_err(lib_err)?,
    };

    // at the mirror time the factor must match the signature prediction
    let mut violation = None;
    let mut predicted = Value::Null;
    if cfg.time.is_none() {
        let sum: Complex64 = lengths
            .iter()
            .zip(&amplitudes)
            .map(|(&n, a)| a * signature(n))
            .sum();
        let mean: f64 =
            amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() / lengths.len() as f64;
        let expect = sum.norm_sqr() / mean;
        predicted = json!(expect);
        let tol = cfg.tolerances();
        if (profile.interference_factor - expect).abs() > tol.max_deviation() {
            violation = Some(format!(
                "interference factor {:.12} deviates from the signature prediction {expect:.12} by more than {:.1e}",
                profile.interference_factor,
                tol.max_deviation()
            ));
        }
    }

    let mut key = Map::new();
    key.insert(
        "interference_factor".into(),
        json!(profile.interference_factor),
    );
    key.insert(
        "receiver_intensity".into(),
        json!(profile.receiver_intensity),
    );
    key.insert("predicted_factor".into(), predicted);
    key.insert("paths".into(), json!(lengths));
    Ok(RunOutcome {
        reports: vec![Report::Interference(profile)],
        key_numbers: key,
        violation,
    })
}

fn run_oracle_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let chain = chain_of(cfg)?;
    if !chain.is_pst_profile() {
        return Err(CliError::Config(
            "oracle-check needs the engineered mirror profile; the closed form only covers it"
                .into(),
        ));
    }
    let times: Vec<f64> = match &cfg.times {
        Some(ts) => ts.clone(),
        None => {
            let samples = cfg.samples.unwrap_or(20);
            let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed.unwrap_or(20260817));
            (0..samples).map(|_| 16.0 * (rng.random::<f64>() - 0.5)).collect()
        }
    };
    let n = chain.sites();
    let basis = Basis::new(n, Sector::FixedTotal(1)).map_err(lib_err)?;
    let h = build_bose_hubbard(&chain, &basis).map_err(lib_err)?;
    let prop = Propagator::new(&h).map_err(lib_err)?;
    let site_index: Vec<usize> = (0..n)
        .map(|site| {
            let mut occ = vec![0u32; n];
            occ[site] = 1;
            basis.index_of(&occ).expect("one-boson states enumerate")
        })
        .collect();

    let mut reports = Vec::with_capacity(times.len());
    let mut worst = 0.0f64;
    let mut worst_time = 0.0f64;
    for &t in &times {
        let analytic =
            analytic_single_particle_propagator(n, chain.scale(), t).map_err(lib_err)?;
        let u = prop.unitary(-t);
        let mut dev = 0.0f64;
        for kp in 0..n {
            for k in 0..n {
                dev = dev.max((analytic[(kp, k)] - u[(site_index[kp], site_index[k])]).norm());
            }
        }
        if dev > worst {
            worst = dev;
            worst_time = t;
        }
        reports.push(Report::Oracle(OracleRow {
            sites: n,
            time: t,
            max_deviation: dev,
        }));
    }
    let tol = cfg.tolerances();
    let violation = (worst > tol.max_deviation()).then(|| {
        format!(
            "analytic propagator deviates from the dense eigensolve by {worst:.3e} at t = {worst_time}, above the {:.1e} bound",
            tol.max_deviation()
        )
    });
    let mut key = Map::new();
    key.insert("samples".into(), json!(times.len()));
    key.insert("max_deviation".into(), json!(worst));
    Ok(RunOutcome {
        reports,
        key_numbers: key,
        violation,
    })
}

fn run_sweep_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| {
        CliError::Config("config error at /sweep: required field is missing".into())
    })?;
    let chain_cfg = cfg.chain.as_ref().ok_or_else(|| {
        CliError::Config("config error at /chain: required field is missing".into())
    })?;
    if chain_cfg.hopping.is_some() {
        return Err(CliError::Config(
            "config error at /chain: sweeps need an engineered chain (scalar fields), not an explicit profile".into(),
        ));
    }
    let sites = chain_cfg.sites.unwrap_or(0);
    let j = chain_cfg.coupling.unwrap_or(1.0);
    let eps = chain_cfg.gradient.unwrap_or(0.0);
    let u = chain_cfg.interaction.unwrap_or(0.0);
    let base_chain = ChainSpec::engineered(sites, j, eps, u).map_err(lib_err)?;
    let f = function_of(cfg, sites)?;
    let medium = medium_of(cfg, sites)?;
    let tol = cfg.tolerances();
    let options = TransferOptions {
        time: cfg.time,
        ..Default::default()
    };
    let values = sweep.values();
    if sweep.parameter == "J" && values.iter().any(|&v| v <= 0.0) {
        return Err(CliError::Config(
            "config error at /sweep: J sweep range must stay positive".into(),
        ));
    }

    let point = |&value: &f64| -> Result<Report, CliError> {
        let report = match sweep.parameter.as_str() {
            "U" => {
                let chain = ChainSpec::engineered(sites, j, eps, value).map_err(lib_err)?;
                run_transfer(&chain, &f, &medium, &options).map_err(lib_err)?
            }
            "J" => {
                let chain = ChainSpec::engineered(sites, value, eps, u).map_err(lib_err)?;
                run_transfer(&chain, &f, &medium, &options).map_err(lib_err)?
            }
            "epsilon" => {
                let chain = ChainSpec::engineered(sites, j, value, u).map_err(lib_err)?;
                run_transfer(&chain, &f, &medium, &options).map_err(lib_err)?
            }
            "beta" => {
                let n_max = cfg.n_max.ok_or_else(|| {
                    CliError::Config("config error at /n_max: required field is missing".into())
                })?;
                run_dressed_transfer(
                    &base_chain,
                    &DressingSpec::Displacement(Complex64::new(value, 0.0)),
                    &f,
                    n_max,
                    &options,
                )
                .map_err(lib_err)?
            }
            "xi" => {
                let n_max = cfg.n_max.ok_or_else(|| {
                    CliError::Config("config error at /n_max: required field is missing".into())
                })?;
                run_dressed_transfer(
                    &base_chain,
                    &DressingSpec::Squeezing(value),
                    &f,
                    n_max,
                    &options,
                )
                .map_err(lib_err)?
            }
            other => {
                return Err(CliError::Config(format!(
                    "config error at /sweep/parameter: unknown parameter '{other}'"
                )))
            }
        };
        Ok(Report::Transfer {
            sweep_value: Some(value),
            report,
        })
    };

    // fan out across the worker pool; collect preserves sweep order
    let rows: Result<Vec<Report>, CliError> = values.par_iter().map(point).collect();
    let rows = rows?;

    let mut violation = None;
    let mut min_fid = f64::INFINITY;
    let mut max_fid = f64::NEG_INFINITY;
    for row in &rows {
        let Report::Transfer { report, .. } = row else {
            unreachable!()
        };
        min_fid = min_fid.min(report.fidelity);
        max_fid = max_fid.max(report.fidelity);
        if violation.is_none() {
            violation = transfer_violation(report, &tol);
        }
    }
    let mut key = Map::new();
    key.insert("parameter".into(), json!(sweep.parameter));
    key.insert("points".into(), json!(values.len()));
    key.insert("from".into(), json!(sweep.from));
    key.insert("to".into(), json!(sweep.to));
    key.insert("min_fidelity".into(), json!(min_fid));
    key.insert("max_fidelity".into(), json!(max_fid));
    Ok(RunOutcome {
        reports: rows,
        key_numbers: key,
        violation,
    })
}
