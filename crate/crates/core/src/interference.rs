//! Two-slit style interference between parallel mirror chains.
//!
//! Several engineered chains share a sender and a receiver. Launching one
//! boson down each path and recombining at the receiver after `t0` gives a
//! coherent sum of arrival amplitudes; since a path of length `N_p`
//! contributes exactly its signature `r_p = exp(-i pi (N_p - 1) / 2)`, the
//! combined intensity depends only on the path lengths mod 4. Two paths can
//! therefore interfere fully constructively (factor 4), destructively
//! (factor 0), or half-way (factor 2, lengths differing by odd numbers),
//! with no tuning of couplings beyond the mirror profile itself.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolve::Propagator;
use crate::fock::{Basis, Sector, StateVector};
use crate::model::{build_bose_hubbard, ChainSpec};
use crate::transfer::signature;

/// Parallel paths joined at a common sender and receiver.
///
/// Each path must carry the engineered mirror profile and all paths must
/// share the same coupling scale `J`, so a single `t0 = pi / J` is the
/// arrival time on every arm.
#[derive(Clone, Debug)]
pub struct PathLattice {
    paths: Vec<ChainSpec>,
    amplitudes: Vec<Complex64>,
}

impl PathLattice {
    /// Paths with unit launch amplitudes.
    pub fn new(paths: Vec<ChainSpec>) -> Result<PathLattice> {
        let amplitudes = vec![Complex64::new(1.0, 0.0); paths.len()];
        PathLattice::with_amplitudes(paths, amplitudes)
    }

    /// Engineered paths of the given lengths at a common scale `j`.
    pub fn from_lengths(lengths: &[usize], j: f64) -> Result<PathLattice> {
        let paths = lengths
            .iter()
            .map(|&n| ChainSpec::engineered(n, j, 0.0, 0.0))
            .collect::<Result<Vec<_>>>()?;
        PathLattice::new(paths)
    }

    /// Paths with explicit launch amplitudes.
    pub fn with_amplitudes(
        paths: Vec<ChainSpec>,
        amplitudes: Vec<Complex64>,
    ) -> Result<PathLattice> {
        if paths.len() < 2 {
            return Err(Error::Interference(
                "interference needs at least two paths".into(),
            ));
        }
        if amplitudes.len() != paths.len() {
            return Err(Error::Interference(format!(
                "{} amplitudes for {} paths",
                amplitudes.len(),
                paths.len()
            )));
        }
        let j = paths[0].scale();
        for (p, chain) in paths.iter().enumerate() {
            if !chain.is_pst_profile() {
                return Err(Error::Interference(format!(
                    "path {p} does not carry the mirror profile; its arrival phase is not a pure signature"
                )));
            }
            if (chain.scale() - j).abs() > 1e-12 * j.abs() {
                return Err(Error::Interference(format!(
                    "path {p} has scale {} but path 0 has {j}; arrival times differ",
                    chain.scale()
                )));
            }
        }
        Ok(PathLattice { paths, amplitudes })
    }

    pub fn paths(&self) -> &[ChainSpec] {
        &self.paths
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Common mirror time `pi / J`.
    pub fn t0(&self) -> f64 {
        self.paths[0].t0()
    }
}

/// Site-resolved boson intensities and the receiver interference factor.
#[derive(Clone, Debug, serde::Serialize)]
pub struct IntensityProfile {
    /// Evolution time the profile was taken at.
    pub time: f64,
    /// `|amplitude|^2` per site for each path, launch amplitude included.
    pub per_path_site_intensity: Vec<Vec<f64>>,
    /// Analytic signature of each path as [re, im].
    pub per_path_signature: Vec<[f64; 2]>,
    /// Arrival amplitude of each path at its last site, as [re, im].
    pub receiver_amplitudes: Vec<[f64; 2]>,
    /// `|sum of arrival amplitudes|^2`.
    pub receiver_intensity: f64,
    /// Receiver intensity normalized by the mean launch intensity, in
    /// [0, P^2]; for two unit-amplitude paths: 4 constructive, 2
    /// intermediate, 0 destructive.
    pub interference_factor: f64,
}

/// Interference factor predicted from signatures alone:
/// `|sum_p r_p / r_1|^2`.
pub fn interference_factor(signatures: &[Complex64]) -> Result<f64> {
    if signatures.is_empty() {
        return Err(Error::Interference("no paths given".into()));
    }
    for (p, r) in signatures.iter().enumerate() {
        if (r.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Interference(format!(
                "path {p} signature has modulus {}, expected 1",
                r.norm()
            )));
        }
    }
    let total: Complex64 = signatures.iter().map(|r| r / signatures[0]).sum();
    Ok(total.norm_sqr())
}

/// Propagate one boson down every path to the mirror time and recombine.
pub fn run_interference(lattice: &PathLattice) -> Result<IntensityProfile> {
    run_interference_at(lattice, lattice.t0())
}

/// Same, at an arbitrary time.
pub fn run_interference_at(lattice: &PathLattice, time: f64) -> Result<IntensityProfile> {
    let mut site_intensity = Vec::with_capacity(lattice.paths.len());
    let mut signatures = Vec::with_capacity(lattice.paths.len());
    let mut arrivals = Vec::with_capacity(lattice.paths.len());
    let mut receiver_sum = Complex64::new(0.0, 0.0);

    for (chain, &a) in lattice.paths.iter().zip(&lattice.amplitudes) {
        let n = chain.sites();
        let basis = Basis::new(n, Sector::FixedTotal(1))?;
        let h = build_bose_hubbard(chain, &basis)?;
        let prop = Propagator::new(&h)?;
        let mut launch = vec![0u32; n];
        launch[0] = 1;
        let sender = StateVector::basis_state(basis.clone(), &launch)?;
        let evolved = prop.adjoint_evolve(&sender, time)?;

        let mut sites = vec![0.0f64; n];
        for site in 0..n {
            let mut occ = vec![0u32; n];
            occ[site] = 1;
            sites[site] = (a * evolved.amplitude_of(&occ)).norm_sqr();
        }
        let mut last = vec![0u32; n];
        last[n - 1] = 1;
        let arrival = a * evolved.amplitude_of(&last);

        site_intensity.push(sites);
        signatures.push([signature(n).re, signature(n).im]);
        arrivals.push([arrival.re, arrival.im]);
        receiver_sum += arrival;
    }

    let receiver_intensity = receiver_sum.norm_sqr();
    let mean_launch = lattice
        .amplitudes
        .iter()
        .map(|a| a.norm_sqr())
        .sum::<f64>()
        / lattice.paths.len() as f64;
    Ok(IntensityProfile {
        time,
        per_path_site_intensity: site_intensity,
        per_path_signature: signatures,
        receiver_amplitudes: arrivals,
        receiver_intensity,
        interference_factor: receiver_intensity / mean_launch,
    })
}
