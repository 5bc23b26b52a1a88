//! Python bindings: chain construction, analytic oracles, and the three
//! experiment drivers, with reports handed back as plain dicts.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bosechain::evolve::analytic_single_particle_propagator;
use bosechain::function::MonomialFunction;
use bosechain::interference::{
    run_interference as core_run_interference, run_interference_at, IntensityProfile, PathLattice,
};
use bosechain::model::{self, ChainSpec, DressingSpec};
use bosechain::transfer::{self, mirror_target, Medium, TransferOptions, TransferReport};

fn err(e: bosechain::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Chain description shared by every experiment.
#[pyclass(frozen)]
struct Chain {
    inner: ChainSpec,
}

#[pymethods]
impl Chain {
    /// Mirror-engineered couplings J_k = J/2 sqrt(k (N - k)), optional
    /// linear potential and on-site interaction.
    #[staticmethod]
    #[pyo3(signature = (sites, coupling=1.0, gradient=0.0, interaction=0.0))]
    fn engineered(sites: usize, coupling: f64, gradient: f64, interaction: f64) -> PyResult<Chain> {
        Ok(Chain {
            inner: ChainSpec::engineered(sites, coupling, gradient, interaction).map_err(err)?,
        })
    }

    /// Explicit hopping and on-site profiles.
    #[staticmethod]
    #[pyo3(signature = (hopping, onsite=None, interaction=0.0))]
    fn custom(hopping: Vec<f64>, onsite: Option<Vec<f64>>, interaction: f64) -> PyResult<Chain> {
        let onsite = onsite.unwrap_or_else(|| vec![0.0; hopping.len() + 1]);
        Ok(Chain {
            inner: ChainSpec::custom(hopping, onsite, interaction).map_err(err)?,
        })
    }

    #[getter]
    fn sites(&self) -> usize {
        self.inner.sites()
    }

    #[getter]
    fn hopping(&self) -> Vec<f64> {
        self.inner.hopping().to_vec()
    }

    #[getter]
    fn onsite(&self) -> Vec<f64> {
        self.inner.onsite().to_vec()
    }

    #[getter]
    fn interaction(&self) -> f64 {
        self.inner.interaction()
    }

    #[getter]
    fn t0(&self) -> f64 {
        self.inner.t0()
    }

    #[getter]
    fn is_pst_profile(&self) -> bool {
        self.inner.is_pst_profile()
    }

    fn __repr__(&self) -> String {
        format!(
            "Chain(sites={}, interaction={}, pst={})",
            self.inner.sites(),
            self.inner.interaction(),
            self.inner.is_pst_profile()
        )
    }
}

/// Arrival phase r = exp(-i pi (n - 1) / 2) of the mirror map.
#[pyfunction]
fn signature(n: usize) -> Complex64 {
    transfer::signature(n)
}

/// Engineered couplings J_k for an n-site chain at scale j.
#[pyfunction]
#[pyo3(signature = (n, j=1.0))]
fn krawtchouk_couplings(n: usize, j: f64) -> Vec<f64> {
    model::krawtchouk_couplings(n, j)
}

/// Linear on-site potential eps_k = eps (k - (n + 1) / 2).
#[pyfunction]
fn linear_potential(n: usize, eps: f64) -> Vec<f64> {
    model::linear_potential(n, eps)
}

/// Wigner d^l_{m'm}(beta) in doubled-index convention.
#[pyfunction]
fn wigner_small_d(two_l: i64, two_mp: i64, two_m: i64, beta: f64) -> PyResult<f64> {
    bosechain::evolve::wigner_small_d(two_l, two_mp, two_m, beta).map_err(err)
}

/// One-boson adjoint propagator of the engineered chain as a nested list,
/// row k' and column k zero-based by site.
#[pyfunction]
#[pyo3(signature = (n, j, t))]
fn analytic_propagator(n: usize, j: f64, t: f64) -> PyResult<Vec<Vec<Complex64>>> {
    let m = analytic_single_particle_propagator(n, j, t).map_err(err)?;
    Ok((0..n)
        .map(|r| (0..n).map(|c| m[(r, c)]).collect())
        .collect())
}

/// Mirrored polynomial with the signature phase per degree, as text.
#[pyfunction]
fn mirror_function(function: &str, sites: usize) -> PyResult<String> {
    let f = MonomialFunction::parse(function, sites).map_err(err)?;
    Ok(mirror_target(&f, sites).map_err(err)?.to_string())
}

fn report_dict<'py>(py: Python<'py>, r: &TransferReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("sites", r.sites)?;
    d.set_item("processor_sites", r.processor_sites)?;
    d.set_item("sector", &r.sector)?;
    d.set_item("dimension", r.dimension)?;
    d.set_item("time", r.time)?;
    d.set_item("signature", Complex64::new(r.signature[0], r.signature[1]))?;
    d.set_item("function", r.function.as_deref())?;
    d.set_item("mirror_function", r.mirror_function.as_deref())?;
    d.set_item("fidelity", r.fidelity)?;
    d.set_item("phase_error", r.phase_error)?;
    d.set_item("truncation_loss", r.truncation_loss)?;
    d.set_item("pst_profile", r.pst_profile)?;
    d.set_item("multi_boson_interaction", r.multi_boson_interaction)?;
    d.set_item("mirror_law_exact", r.mirror_law_exact)?;
    Ok(d)
}

fn profile_dict<'py>(py: Python<'py>, p: &IntensityProfile) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("time", p.time)?;
    d.set_item("per_path_site_intensity", &p.per_path_site_intensity)?;
    d.set_item(
        "per_path_signature",
        p.per_path_signature
            .iter()
            .map(|s| Complex64::new(s[0], s[1]))
            .collect::<Vec<_>>(),
    )?;
    d.set_item(
        "receiver_amplitudes",
        p.receiver_amplitudes
            .iter()
            .map(|s| Complex64::new(s[0], s[1]))
            .collect::<Vec<_>>(),
    )?;
    d.set_item("receiver_intensity", p.receiver_intensity)?;
    d.set_item("interference_factor", p.interference_factor)?;
    Ok(d)
}

/// Propagate f(site operators) applied to the vacuum or a random-site
/// medium across the chain for the mirror time (or `time`), and compare
/// against the phased mirror target. Medium sites are 1-based.
#[pyfunction]
#[pyo3(signature = (chain, function, medium_sites=None, medium_bosons=1, medium_seed=7, time=None))]
fn run_transfer<'py>(
    py: Python<'py>,
    chain: &Chain,
    function: &str,
    medium_sites: Option<Vec<usize>>,
    medium_bosons: u32,
    medium_seed: u64,
    time: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let f = MonomialFunction::parse(function, chain.inner.sites()).map_err(err)?;
    let medium = match medium_sites {
        None => Medium::Vacuum,
        Some(sites) => {
            let n = chain.inner.sites();
            let mut zero_based = Vec::with_capacity(sites.len());
            for s in sites {
                if s == 0 || s > n {
                    return Err(PyValueError::new_err(format!(
                        "medium site {s} outside 1..={n}"
                    )));
                }
                zero_based.push(s - 1);
            }
            Medium::RandomSites {
                sites: zero_based,
                bosons: medium_bosons,
                seed: medium_seed,
            }
        }
    };
    let options = TransferOptions {
        time,
        ..Default::default()
    };
    let report = transfer::run_transfer(&chain.inner, &f, &medium, &options).map_err(err)?;
    report_dict(py, &report)
}

/// Transfer of W f(site operators) W-dagger acting on the dressed vacuum,
/// in a per-site occupation cutoff n_max. Exactly one of `displacement`
/// (complex) or `squeezing` (real) selects the dressing.
#[pyfunction]
#[pyo3(signature = (chain, function, n_max, displacement=None, squeezing=None, time=None))]
fn run_dressed_transfer<'py>(
    py: Python<'py>,
    chain: &Chain,
    function: &str,
    n_max: u32,
    displacement: Option<Complex64>,
    squeezing: Option<f64>,
    time: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let dressing = match (displacement, squeezing) {
        (Some(beta), None) => DressingSpec::Displacement(beta),
        (None, Some(xi)) => DressingSpec::Squeezing(xi),
        _ => {
            return Err(PyValueError::new_err(
                "pass exactly one of displacement= or squeezing=",
            ))
        }
    };
    let f = MonomialFunction::parse(function, chain.inner.sites()).map_err(err)?;
    let options = TransferOptions {
        time,
        ..Default::default()
    };
    let report = transfer::run_dressed_transfer(&chain.inner, &dressing, &f, n_max, &options)
        .map_err(err)?;
    report_dict(py, &report)
}

/// One boson per path, launched at the first site of each; arrival
/// amplitudes and the interference factor at the mirror time (or `time`).
#[pyfunction]
#[pyo3(signature = (paths, j=1.0, amplitudes=None, time=None))]
fn run_interference<'py>(
    py: Python<'py>,
    paths: Vec<usize>,
    j: f64,
    amplitudes: Option<Vec<Complex64>>,
    time: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let lattice = match amplitudes {
        None => PathLattice::from_lengths(&paths, j).map_err(err)?,
        Some(amps) => {
            let chains = paths
                .iter()
                .map(|&n| ChainSpec::engineered(n, j, 0.0, 0.0))
                .collect::<Result<Vec<_>, _>>()
                .map_err(err)?;
            PathLattice::with_amplitudes(chains, amps).map_err(err)?
        }
    };
    let profile = match time {
        Some(t) => run_interference_at(&lattice, t).map_err(err)?,
        None => core_run_interference(&lattice).map_err(err)?,
    };
    profile_dict(py, &profile)
}

#[pymodule]
fn bosechain_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Chain>()?;
    m.add_function(wrap_pyfunction!(signature, m)?)?;
    m.add_function(wrap_pyfunction!(krawtchouk_couplings, m)?)?;
    m.add_function(wrap_pyfunction!(linear_potential, m)?)?;
    m.add_function(wrap_pyfunction!(wigner_small_d, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_propagator, m)?)?;
    m.add_function(wrap_pyfunction!(mirror_function, m)?)?;
    m.add_function(wrap_pyfunction!(run_transfer, m)?)?;
    m.add_function(wrap_pyfunction!(run_dressed_transfer, m)?)?;
    m.add_function(wrap_pyfunction!(run_interference, m)?)?;
    Ok(())
}
