//! Chain specifications and Hamiltonian builders.
//!
//! The Bose-Hubbard chain
//!
//! ```text
//! H = -sum_k J_k (b_k^dag b_{k+1} + h.c.) + sum_k eps_k n_k + U sum_k n_k (n_k - 1)
//! ```
//!
//! with the engineered profile `J_k = J C_k`, `C_k = sqrt(k (N - k)) / 2`,
//! and `eps_k = eps ((N + 1) / 2 - k)` is an su(2) rotor in disguise:
//! `H = -J L_x - eps L_z + H_U` under the Schwinger mapping where site `k`
//! carries magnetic number `m_k = k - (N + 1) / 2`. At `t0 = pi / J` the
//! `U = eps = 0` chain implements the mirror permutation of sites, up to the
//! signature phase handled in [`crate::transfer`].

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{Basis, OperatorMatrix, Sector};

/// Hopping profile `J_k = J C_k` with `C_k = sqrt(k (N - k)) / 2`, for
/// `k = 1 ..= n-1`.
pub fn krawtchouk_couplings(n: usize, j: f64) -> Vec<f64> {
    (1..n)
        .map(|k| j * 0.5 * ((k as f64) * ((n - k) as f64)).sqrt())
        .collect()
}

/// On-site profile `eps_k = eps ((N + 1) / 2 - k)` for `k = 1 ..= n`.
pub fn linear_potential(n: usize, eps: f64) -> Vec<f64> {
    (1..=n)
        .map(|k| eps * ((n as f64 + 1.0) / 2.0 - k as f64))
        .collect()
}

/// A concrete chain: couplings, on-site energies, interaction strength.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSpec {
    sites: usize,
    hopping: Vec<f64>,
    onsite: Vec<f64>,
    interaction: f64,
    /// Nominal energy scale (the `J` of an engineered chain); sets the time
    /// unit `t0 = pi / scale`.
    scale: f64,
}

impl ChainSpec {
    /// The engineered mirror-transfer chain over `n` sites.
    pub fn engineered(n: usize, j: f64, eps: f64, u: f64) -> Result<ChainSpec> {
        if n < 2 {
            return Err(Error::InvalidChain(format!(
                "engineered chain needs at least 2 sites, got {n}"
            )));
        }
        if !(j > 0.0) {
            return Err(Error::InvalidChain(format!(
                "engineered chain needs a positive coupling scale, got {j}"
            )));
        }
        Ok(ChainSpec {
            sites: n,
            hopping: krawtchouk_couplings(n, j),
            onsite: linear_potential(n, eps),
            interaction: u,
            scale: j,
        })
    }

    /// An arbitrary profile. The time scale is taken from the largest
    /// coupling.
    pub fn custom(hopping: Vec<f64>, onsite: Vec<f64>, interaction: f64) -> Result<ChainSpec> {
        let sites = onsite.len();
        if sites < 2 {
            return Err(Error::InvalidChain(format!(
                "chain needs at least 2 sites, got {sites}"
            )));
        }
        if hopping.len() != sites - 1 {
            return Err(Error::InvalidChain(format!(
                "{} couplings for a {sites}-site chain (need {})",
                hopping.len(),
                sites - 1
            )));
        }
        let scale = hopping.iter().fold(0.0f64, |m, j| m.max(j.abs()));
        if !(scale > 0.0) {
            return Err(Error::InvalidChain(
                "chain needs at least one nonzero coupling".into(),
            ));
        }
        Ok(ChainSpec {
            sites,
            hopping,
            onsite,
            interaction,
            scale,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn hopping(&self) -> &[f64] {
        &self.hopping
    }

    pub fn onsite(&self) -> &[f64] {
        &self.onsite
    }

    pub fn interaction(&self) -> f64 {
        self.interaction
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Mirror time `t0 = pi / J`.
    pub fn t0(&self) -> f64 {
        std::f64::consts::PI / self.scale
    }

    /// True when the couplings follow the engineered profile (relative
    /// deviation below 1e-12) and the on-site energies vanish, i.e. when the
    /// chain performs perfect mirror transfer in the absence of interaction.
    pub fn is_pst_profile(&self) -> bool {
        let reference = krawtchouk_couplings(self.sites, self.scale);
        let hop_ok = self
            .hopping
            .iter()
            .zip(&reference)
            .all(|(j, r)| (j - r).abs() <= 1e-12 * r.abs());
        let onsite_ok = self.onsite.iter().all(|&e| e.abs() <= 1e-12 * self.scale);
        hop_ok && onsite_ok
    }
}

/// Static mode dressing applied to a chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DressingSpec {
    /// Bare modes.
    None,
    /// `W_k = exp(beta b_k^dag - beta^* b_k)` on every mode.
    Displacement(Complex64),
    /// `W_k = exp((xi / 4) (b_k^2 - b_k^dag^2))` on every mode.
    Squeezing(f64),
    /// Pump-mediated pair coupling to one auxiliary mode, strength `xi0`.
    DownConversion(f64),
}

/// Collect hopping triplets for bond `k` (modes `k`, `k+1`): `amp_fwd` for
/// `b_{k+1}^dag b_k` and `amp_bwd` for `b_k^dag b_{k+1}`. Moves that leave a
/// capped sector are dropped (hard-wall projector); number-resolved sectors
/// always contain the image.
fn hop_triplets(
    basis: &Arc<Basis>,
    k: usize,
    amp_fwd: Complex64,
    amp_bwd: Complex64,
    out: &mut Vec<(usize, usize, Complex64)>,
) {
    let mut occ = vec![0u32; basis.modes()];
    for (col, state) in basis.states().iter().enumerate() {
        for (src, dst, amp) in [(k, k + 1, amp_fwd), (k + 1, k, amp_bwd)] {
            if state[src] == 0 || amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            occ.copy_from_slice(state);
            let factor = ((occ[src] as f64) * (occ[dst] as f64 + 1.0)).sqrt();
            occ[src] -= 1;
            occ[dst] += 1;
            if let Some(row) = basis.index_of(&occ) {
                out.push((row, col, amp * factor));
            }
        }
    }
}

/// Build `H` on the given basis (any sector over `chain.sites()` modes).
pub fn build_bose_hubbard(chain: &ChainSpec, basis: &Arc<Basis>) -> Result<OperatorMatrix> {
    if basis.modes() != chain.sites {
        return Err(Error::BasisMismatch(format!(
            "{}-mode basis for a {}-site chain",
            basis.modes(),
            chain.sites
        )));
    }
    let mut triplets = Vec::new();
    for (k, &j) in chain.hopping.iter().enumerate() {
        hop_triplets(
            basis,
            k,
            Complex64::new(-j, 0.0),
            Complex64::new(-j, 0.0),
            &mut triplets,
        );
    }
    let u = chain.interaction;
    for (i, state) in basis.states().iter().enumerate() {
        let mut diag = 0.0f64;
        for (k, &n) in state.iter().enumerate() {
            let n = n as f64;
            diag += chain.onsite[k] * n + u * n * (n - 1.0);
        }
        if diag != 0.0 {
            triplets.push((i, i, Complex64::new(diag, 0.0)));
        }
    }
    Ok(OperatorMatrix::from_triplets(
        basis.clone(),
        basis.clone(),
        triplets,
    ))
}

/// Collective su(2) generators of the engineered geometry.
pub struct LOps {
    pub lx: OperatorMatrix,
    pub ly: OperatorMatrix,
    pub lz: OperatorMatrix,
}

/// Build `L_x`, `L_y`, `L_z` on a basis. These depend only on the chain
/// length `N = basis.modes()`:
///
/// ```text
/// L_x = sum_k C_k (b_k^dag b_{k+1} + h.c.)           C_k = sqrt(k (N - k)) / 2
/// L_y = -i sum_k C_k (b_{k+1}^dag b_k - b_k^dag b_{k+1})
/// L_z = sum_k (k - (N + 1) / 2) n_k
/// ```
pub fn build_angular_momentum(basis: &Arc<Basis>) -> Result<LOps> {
    let n = basis.modes();
    let c = krawtchouk_couplings(n, 1.0);
    let mut tx = Vec::new();
    let mut ty = Vec::new();
    for (k, &ck) in c.iter().enumerate() {
        hop_triplets(
            basis,
            k,
            Complex64::new(ck, 0.0),
            Complex64::new(ck, 0.0),
            &mut tx,
        );
        hop_triplets(
            basis,
            k,
            Complex64::new(0.0, -ck),
            Complex64::new(0.0, ck),
            &mut ty,
        );
    }
    let mut tz = Vec::new();
    for (i, state) in basis.states().iter().enumerate() {
        let mz: f64 = state
            .iter()
            .enumerate()
            .map(|(k, &occ)| ((k + 1) as f64 - (n as f64 + 1.0) / 2.0) * occ as f64)
            .sum();
        if mz != 0.0 {
            tz.push((i, i, Complex64::new(mz, 0.0)));
        }
    }
    Ok(LOps {
        lx: OperatorMatrix::from_triplets(basis.clone(), basis.clone(), tx),
        ly: OperatorMatrix::from_triplets(basis.clone(), basis.clone(), ty),
        lz: OperatorMatrix::from_triplets(basis.clone(), basis.clone(), tz),
    })
}

/// Check that a chain is eligible for dressing: static dressed backgrounds
/// exist only for the pure hopping Hamiltonian.
fn require_pure_hopping(chain: &ChainSpec, what: &str) -> Result<()> {
    if chain.onsite.iter().any(|&e| e != 0.0) {
        return Err(Error::Dressing(format!(
            "{what} requires vanishing on-site energies"
        )));
    }
    if chain.interaction != 0.0 {
        return Err(Error::Dressing(format!(
            "{what} requires vanishing interaction"
        )));
    }
    Ok(())
}

/// Displacement-dressed Hamiltonian on a capped basis:
///
/// ```text
/// H' = H_hop - sum_k J_k (2 |beta|^2 - [beta^* (b_k + b_{k+1}) + h.c.])
/// ```
///
/// so that `H' = W H_hop W^dag` with `W = prod_k exp(beta b_k^dag - beta^* b_k)`.
pub fn build_dressed_displacement(
    chain: &ChainSpec,
    beta: Complex64,
    basis: &Arc<Basis>,
) -> Result<OperatorMatrix> {
    require_pure_hopping(chain, "displacement dressing")?;
    if !matches!(basis.sector(), Sector::Capped(_)) {
        return Err(Error::Dressing(
            "displacement dressing needs a capped basis (linear terms change the total)".into(),
        ));
    }
    let h = build_bose_hubbard(chain, basis)?;
    let mut triplets = Vec::new();
    let b2 = beta.norm_sqr();
    let mut occ = vec![0u32; basis.modes()];
    for (k, &j) in chain.hopping.iter().enumerate() {
        for (col, state) in basis.states().iter().enumerate() {
            // constant: -2 J_k |beta|^2
            triplets.push((col, col, Complex64::new(-2.0 * j * b2, 0.0)));
            // linear: + J_k [beta^* (b_k + b_{k+1}) + beta (b_k^dag + b_{k+1}^dag)]
            for mode in [k, k + 1] {
                if state[mode] > 0 {
                    occ.copy_from_slice(state);
                    let factor = (occ[mode] as f64).sqrt();
                    occ[mode] -= 1;
                    if let Some(row) = basis.index_of(&occ) {
                        triplets.push((row, col, beta.conj() * j * factor));
                    }
                }
                occ.copy_from_slice(state);
                occ[mode] += 1;
                let factor = (occ[mode] as f64).sqrt();
                if let Some(row) = basis.index_of(&occ) {
                    triplets.push((row, col, beta * j * factor));
                }
            }
        }
    }
    let correction =
        OperatorMatrix::from_triplets(basis.clone(), basis.clone(), triplets);
    h.add(&correction)
}

/// Pair-creation partner of the hopping term:
///
/// ```text
/// H_s = sum_k (J_k / J) (b_k^dag b_{k+1}^dag + b_{k+1} b_k)
/// ```
pub fn build_pair_hamiltonian(chain: &ChainSpec, basis: &Arc<Basis>) -> Result<OperatorMatrix> {
    if basis.modes() != chain.sites {
        return Err(Error::BasisMismatch(format!(
            "{}-mode basis for a {}-site chain",
            basis.modes(),
            chain.sites
        )));
    }
    let mut triplets = Vec::new();
    let mut occ = vec![0u32; basis.modes()];
    for (k, &j) in chain.hopping.iter().enumerate() {
        let ck = j / chain.scale;
        for (col, state) in basis.states().iter().enumerate() {
            // raise the pair
            occ.copy_from_slice(state);
            occ[k] += 1;
            occ[k + 1] += 1;
            let up = ((occ[k] as f64) * (occ[k + 1] as f64)).sqrt();
            if let Some(row) = basis.index_of(&occ) {
                triplets.push((row, col, Complex64::new(ck * up, 0.0)));
            }
            // lower the pair
            if state[k] > 0 && state[k + 1] > 0 {
                occ.copy_from_slice(state);
                let down = ((occ[k] as f64) * (occ[k + 1] as f64)).sqrt();
                occ[k] -= 1;
                occ[k + 1] -= 1;
                if let Some(row) = basis.index_of(&occ) {
                    triplets.push((row, col, Complex64::new(ck * down, 0.0)));
                }
            }
        }
    }
    Ok(OperatorMatrix::from_triplets(
        basis.clone(),
        basis.clone(),
        triplets,
    ))
}

/// Squeezing-dressed Hamiltonian on a capped basis:
///
/// ```text
/// H' = cosh(xi) H_hop - J sinh(xi) H_s
/// ```
///
/// so that `H' = W H_hop W^dag` with `W = prod_k exp((xi/4)(b_k^2 - b_k^dag^2))`.
/// Returns `(H_s, H')`.
pub fn build_squeeze_hamiltonians(
    chain: &ChainSpec,
    xi: f64,
    basis: &Arc<Basis>,
) -> Result<(OperatorMatrix, OperatorMatrix)> {
    require_pure_hopping(chain, "squeezing dressing")?;
    if !matches!(basis.sector(), Sector::Capped(_)) {
        return Err(Error::Dressing(
            "squeezing dressing needs a capped basis (pair terms change the total)".into(),
        ));
    }
    let h_hop = build_bose_hubbard(chain, basis)?;
    let h_s = build_pair_hamiltonian(chain, basis)?;
    let h_prime = h_hop
        .scale(Complex64::new(xi.cosh(), 0.0))
        .add(&h_s.scale(Complex64::new(-chain.scale * xi.sinh(), 0.0)))?;
    Ok((h_s, h_prime))
}

/// Dressed Hamiltonian dispatcher for the same-geometry dressings.
pub fn build_dressed_hamiltonian(
    chain: &ChainSpec,
    dressing: &DressingSpec,
    basis: &Arc<Basis>,
) -> Result<OperatorMatrix> {
    match *dressing {
        DressingSpec::None => build_bose_hubbard(chain, basis),
        DressingSpec::Displacement(beta) => build_dressed_displacement(chain, beta, basis),
        DressingSpec::Squeezing(xi) => Ok(build_squeeze_hamiltonians(chain, xi, basis)?.1),
        DressingSpec::DownConversion(_) => Err(Error::Dressing(
            "down-conversion extends the mode space; use build_down_conversion".into(),
        )),
    }
}

/// Down-conversion model: the chain plus one auxiliary pump mode (appended
/// last), all modes capped at `n_max`:
///
/// ```text
/// H = H_hop (x) 1 + xi0 H_s (x) (c + c^dag)
/// ```
///
/// Returns the extended basis and the Hamiltonian.
pub fn build_down_conversion(
    chain: &ChainSpec,
    xi0: f64,
    n_max: u32,
) -> Result<(Arc<Basis>, OperatorMatrix)> {
    require_pure_hopping(chain, "down-conversion coupling")?;
    let modes = chain.sites + 1;
    let basis = Basis::new(modes, Sector::Capped(n_max))?;
    let aux = chain.sites; // index of the pump mode

    let mut triplets = Vec::new();
    // H_hop on the chain modes, identity on the pump
    for (k, &j) in chain.hopping.iter().enumerate() {
        hop_triplets(
            &basis,
            k,
            Complex64::new(-j, 0.0),
            Complex64::new(-j, 0.0),
            &mut triplets,
        );
    }
    // xi0 * H_s (x) (c + c^dag), assembled state by state
    let mut occ = vec![0u32; modes];
    for (col, state) in basis.states().iter().enumerate() {
        for (k, &j) in chain.hopping.iter().enumerate() {
            let ck = j / chain.scale;
            for pair_up in [true, false] {
                occ.copy_from_slice(state);
                let pair_amp = if pair_up {
                    occ[k] += 1;
                    occ[k + 1] += 1;
                    ((occ[k] as f64) * (occ[k + 1] as f64)).sqrt()
                } else {
                    if occ[k] == 0 || occ[k + 1] == 0 {
                        continue;
                    }
                    let a = ((occ[k] as f64) * (occ[k + 1] as f64)).sqrt();
                    occ[k] -= 1;
                    occ[k + 1] -= 1;
                    a
                };
                for aux_up in [true, false] {
                    let mut occ2 = occ.clone();
                    let aux_amp = if aux_up {
                        occ2[aux] += 1;
                        (occ2[aux] as f64).sqrt()
                    } else {
                        if occ2[aux] == 0 {
                            continue;
                        }
                        let a = (occ2[aux] as f64).sqrt();
                        occ2[aux] -= 1;
                        a
                    };
                    if let Some(row) = basis.index_of(&occ2) {
                        triplets.push((row, col, Complex64::new(xi0 * ck * pair_amp * aux_amp, 0.0)));
                    }
                }
            }
        }
    }
    let h = OperatorMatrix::from_triplets(basis.clone(), basis.clone(), triplets);
    Ok((basis, h))
}

/// Matrix exponential of the anti-Hermitian single-mode dressing generator
/// on a `dim`-dimensional number basis: `W = exp(G)` with
///
/// * displacement: `G = beta b^dag - beta^* b`
/// * squeezing:    `G = (xi / 4) (b^2 - b^dag^2)`
///
/// `DressingSpec::None` yields the identity.
pub fn single_mode_dressing(dressing: &DressingSpec, dim: usize) -> Result<DMatrix<Complex64>> {
    let mut g = DMatrix::<Complex64>::zeros(dim, dim);
    match *dressing {
        DressingSpec::None => return Ok(DMatrix::identity(dim, dim)),
        DressingSpec::Displacement(beta) => {
            for n in 0..dim - 1 {
                let s = ((n + 1) as f64).sqrt();
                g[(n + 1, n)] = beta * s; // b^dag
                g[(n, n + 1)] = -beta.conj() * s; // -beta^* b
            }
        }
        DressingSpec::Squeezing(xi) => {
            for n in 0..dim.saturating_sub(2) {
                let s = (((n + 1) * (n + 2)) as f64).sqrt();
                g[(n, n + 2)] = Complex64::new(xi / 4.0 * s, 0.0); // b^2
                g[(n + 2, n)] = Complex64::new(-xi / 4.0 * s, 0.0); // -b^dag^2
            }
        }
        DressingSpec::DownConversion(_) => {
            return Err(Error::Dressing(
                "down-conversion has no single-mode dressing transformation".into(),
            ))
        }
    }
    // G is anti-Hermitian, so iG is Hermitian and W = exp(G) = exp(-i (iG)).
    let ig = g.map(|v| Complex64::new(0.0, 1.0) * v);
    debug_assert!(
        (ig.adjoint() - &ig)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
            < 1e-14
    );
    let eig = nalgebra::SymmetricEigen::new(ig);
    let mut w = DMatrix::<Complex64>::zeros(dim, dim);
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = Complex64::new(0.0, -lambda).exp();
        let col = eig.eigenvectors.column(j);
        for r in 0..dim {
            for c in 0..dim {
                w[(r, c)] += phase * col[r] * col[c].conj();
            }
        }
    }
    Ok(w)
}

/// Embed a single-mode dense operator at `mode` into a multimode capped
/// basis: identity on every other mode.
pub fn embed_single_mode(
    basis: &Arc<Basis>,
    mode: usize,
    op: &DMatrix<Complex64>,
) -> Result<OperatorMatrix> {
    let Sector::Capped(n_max) = basis.sector() else {
        return Err(Error::BasisMismatch(
            "single-mode embedding needs a capped basis".into(),
        ));
    };
    let span = (n_max + 1) as usize;
    if op.nrows() < span || op.ncols() < span {
        return Err(Error::BasisMismatch(format!(
            "single-mode operator of size {} cannot cover occupations 0..={n_max}",
            op.nrows()
        )));
    }
    let mut triplets = Vec::new();
    let mut occ = vec![0u32; basis.modes()];
    for (col, state) in basis.states().iter().enumerate() {
        occ.copy_from_slice(state);
        for out_n in 0..span {
            let v = op[(out_n, state[mode] as usize)];
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            occ[mode] = out_n as u32;
            if let Some(row) = basis.index_of(&occ) {
                triplets.push((row, col, v));
            }
        }
        occ[mode] = state[mode];
    }
    Ok(OperatorMatrix::from_triplets(
        basis.clone(),
        basis.clone(),
        triplets,
    ))
}

/// Restrict an operator on a large capped basis to a smaller cap by matching
/// occupation lists (entries between retained states are copied verbatim).
pub fn restrict_operator(op: &OperatorMatrix, small: &Arc<Basis>) -> Result<OperatorMatrix> {
    if !op.is_square() || op.basis_in().modes() != small.modes() {
        return Err(Error::BasisMismatch(
            "operator restriction needs a square operator over the same modes".into(),
        ));
    }
    let mut triplets = Vec::new();
    for (r, c, v) in op.iter() {
        if let (Some(rr), Some(cc)) = (
            small.index_of(op.basis_out().state(r)),
            small.index_of(op.basis_in().state(c)),
        ) {
            triplets.push((rr, cc, v));
        }
    }
    Ok(OperatorMatrix::from_triplets(
        small.clone(),
        small.clone(),
        triplets,
    ))
}

/// Reference dressed Hamiltonian `W H W^dag`, computed by conjugation in a
/// padded space (per-mode occupancy `n_max + pad`) and restricted back to
/// `Capped(n_max)`. Padding pushes the hard-wall artifacts of the truncated
/// `W` out of the retained block.
pub fn dressing_conjugation_oracle(
    chain: &ChainSpec,
    dressing: &DressingSpec,
    n_max: u32,
    pad: u32,
) -> Result<OperatorMatrix> {
    require_pure_hopping(chain, "dressing oracle")?;
    let big = Basis::new(chain.sites, Sector::Capped(n_max + pad))?;
    let small = Basis::new(chain.sites, Sector::Capped(n_max))?;
    let h = build_bose_hubbard(chain, &big)?;
    let w_single = single_mode_dressing(dressing, (n_max + pad + 1) as usize)?;
    let mut w = OperatorMatrix::identity(big.clone());
    for mode in 0..chain.sites {
        w = w.matmul(&embed_single_mode(&big, mode, &w_single)?)?;
    }
    let dressed = w.matmul(&h)?.matmul(&w.adjoint())?;
    restrict_operator(&dressed, &small)
}
