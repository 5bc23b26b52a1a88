//! Occupation-number bases and second-quantized operators.
//!
//! A [`Basis`] enumerates the occupation lists of one sector in strict
//! lexicographic order and keeps the reverse index map, so `state -> index`
//! lookups are O(1). Operators are stored sparsely ([`OperatorMatrix`], CSR)
//! and act on [`StateVector`]s that carry their basis along.
//!
//! Sector semantics differ on purpose:
//!
//! * number-resolved sectors ([`Sector::FixedTotal`], [`Sector::TotalAtMost`])
//!   refuse to drop amplitude: a ladder product that would leave the sector is
//!   an error, never a silent truncation;
//! * per-mode capped sectors ([`Sector::Capped`]) implement the hard-wall
//!   projector: amplitude raised past the cap is dropped, and the dropped
//!   weight is reported to the caller wherever it matters.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::function::MonomialFunction;

/// Occupation-number list, one entry per mode.
pub type FockState = Vec<u32>;

/// Default hard cap on basis dimension (number of states).
pub const DEFAULT_DIMENSION_CAP: usize = 200_000;

/// Which slice of Fock space a basis enumerates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sector {
    /// All states with exactly `n` bosons in total.
    FixedTotal(u32),
    /// All states with at most `n_max` bosons in every mode.
    Capped(u32),
    /// Direct sum of `FixedTotal(0..=n)`; needed for mixed-degree
    /// polynomials and superpositions like `alpha + beta b_1^dag`.
    TotalAtMost(u32),
}

impl Sector {
    /// Number of states for `modes` modes, without enumerating.
    pub fn dimension(&self, modes: usize) -> u128 {
        match *self {
            Sector::FixedTotal(n) => compositions(modes as u128, n as u128),
            Sector::Capped(n_max) => (n_max as u128 + 1)
                .checked_pow(modes as u32)
                .unwrap_or(u128::MAX),
            Sector::TotalAtMost(n) => binomial(modes as u128 + n as u128, n as u128),
        }
    }

    /// True if the occupation list belongs to the sector.
    pub fn contains(&self, occ: &[u32]) -> bool {
        match *self {
            Sector::FixedTotal(n) => occ.iter().sum::<u32>() == n,
            Sector::Capped(n_max) => occ.iter().all(|&o| o <= n_max),
            Sector::TotalAtMost(n) => occ.iter().sum::<u32>() <= n,
        }
    }

    /// Short human-readable label used in reports.
    pub fn label(&self) -> String {
        match *self {
            Sector::FixedTotal(n) => format!("fixed-total({n})"),
            Sector::Capped(n_max) => format!("capped({n_max})"),
            Sector::TotalAtMost(n) => format!("total-at-most({n})"),
        }
    }
}

/// Number of weak compositions of `n` into `m` parts: C(m+n-1, n).
fn compositions(m: u128, n: u128) -> u128 {
    if m == 0 {
        return if n == 0 { 1 } else { 0 };
    }
    binomial(m + n - 1, n)
}

/// Binomial coefficient in u128, saturating on overflow.
fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// An enumerated sector of Fock space over `modes` modes.
///
/// States are listed in strict lexicographic order on the occupation lists,
/// so the enumeration is deterministic and reproducible across runs.
#[derive(Debug)]
pub struct Basis {
    modes: usize,
    sector: Sector,
    states: Vec<FockState>,
    index: HashMap<FockState, usize>,
}

// modes + sector determine the enumeration, so structural equality suffices
impl PartialEq for Basis {
    fn eq(&self, other: &Basis) -> bool {
        self.modes == other.modes && self.sector == other.sector
    }
}

impl Eq for Basis {}

impl Basis {
    /// Enumerate a sector, enforcing [`DEFAULT_DIMENSION_CAP`].
    pub fn new(modes: usize, sector: Sector) -> Result<Arc<Basis>> {
        Basis::with_dimension_cap(modes, sector, DEFAULT_DIMENSION_CAP)
    }

    /// Enumerate a sector with an explicit dimension cap.
    pub fn with_dimension_cap(modes: usize, sector: Sector, cap: usize) -> Result<Arc<Basis>> {
        if modes == 0 {
            return Err(Error::InvalidChain("basis needs at least one mode".into()));
        }
        let dim = sector.dimension(modes);
        if dim > cap as u128 {
            return Err(Error::DimensionCap {
                dim,
                cap,
                context: format!("{} over {modes} modes", sector.label()),
            });
        }
        let mut states = Vec::with_capacity(dim as usize);
        let mut scratch = vec![0u32; modes];
        match sector {
            Sector::FixedTotal(n) => enumerate_sum(&mut states, &mut scratch, 0, n, true),
            Sector::TotalAtMost(n) => enumerate_sum(&mut states, &mut scratch, 0, n, false),
            Sector::Capped(n_max) => enumerate_capped(&mut states, &mut scratch, 0, n_max),
        }
        debug_assert_eq!(states.len() as u128, dim);
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Ok(Arc::new(Basis {
            modes,
            sector,
            states,
            index,
        }))
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    /// Number of enumerated states.
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Occupation list of the `i`-th basis state.
    pub fn state(&self, i: usize) -> &FockState {
        &self.states[i]
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    /// Index of an occupation list, if it belongs to the sector.
    pub fn index_of(&self, occ: &[u32]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    /// True when two bases enumerate the same sector over the same modes.
    pub fn same_space(&self, other: &Basis) -> bool {
        self.modes == other.modes && self.sector == other.sector
    }
}

/// Lexicographic enumeration of occupation lists with a total-sum constraint.
/// `exact` selects FixedTotal (sum == budget at the last mode) versus
/// TotalAtMost (any remainder allowed).
fn enumerate_sum(
    out: &mut Vec<FockState>,
    scratch: &mut [u32],
    mode: usize,
    budget: u32,
    exact: bool,
) {
    if mode == scratch.len() - 1 {
        if exact {
            scratch[mode] = budget;
            out.push(scratch.to_vec());
        } else {
            for o in 0..=budget {
                scratch[mode] = o;
                out.push(scratch.to_vec());
            }
        }
        return;
    }
    for o in 0..=budget {
        scratch[mode] = o;
        enumerate_sum(out, scratch, mode + 1, budget - o, exact);
    }
}

/// Lexicographic enumeration with a per-mode cap.
fn enumerate_capped(out: &mut Vec<FockState>, scratch: &mut [u32], mode: usize, n_max: u32) {
    if mode == scratch.len() {
        out.push(scratch.to_vec());
        return;
    }
    for o in 0..=n_max {
        scratch[mode] = o;
        enumerate_capped(out, scratch, mode + 1, n_max);
    }
}

/// One factor of a normally-unordered ladder product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    /// `b_mode`
    Lower(usize),
    /// `b_mode^dag`
    Raise(usize),
}

impl Ladder {
    fn mode(&self) -> usize {
        match *self {
            Ladder::Lower(m) | Ladder::Raise(m) => m,
        }
    }
}

/// Sparse (CSR) operator between two bases. Rows index `basis_out`, columns
/// index `basis_in`; columns inside a row are kept sorted, so equal operators
/// compare equal structurally.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    basis_in: Arc<Basis>,
    basis_out: Arc<Basis>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl OperatorMatrix {
    /// Build from (row, col, value) triplets; duplicates are summed and exact
    /// zeros dropped.
    pub fn from_triplets(
        basis_in: Arc<Basis>,
        basis_out: Arc<Basis>,
        mut triplets: Vec<(usize, usize, Complex64)>,
    ) -> OperatorMatrix {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        // merge duplicates in place
        let mut merged: Vec<(usize, usize, Complex64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match merged.last_mut() {
                Some((lr, lc, lv)) if *lr == r && *lc == c => *lv += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|&(_, _, v)| v != Complex64::new(0.0, 0.0));
        let rows = basis_out.dim();
        let mut row_ptr = vec![0usize; rows + 1];
        for &(r, _, _) in &merged {
            debug_assert!(r < rows, "triplet row out of range");
            row_ptr[r + 1] += 1;
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let cols = merged.iter().map(|&(_, c, _)| c).collect();
        let vals = merged.iter().map(|&(_, _, v)| v).collect();
        OperatorMatrix {
            basis_in,
            basis_out,
            row_ptr,
            cols,
            vals,
        }
    }

    fn prune_zeros(&mut self) {
        let rows = self.basis_out.dim();
        let mut new_cols = Vec::with_capacity(self.cols.len());
        let mut new_vals = Vec::with_capacity(self.vals.len());
        let mut new_ptr = vec![0usize; rows + 1];
        for r in 0..rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.vals[k] != Complex64::new(0.0, 0.0) {
                    new_cols.push(self.cols[k]);
                    new_vals.push(self.vals[k]);
                }
            }
            new_ptr[r + 1] = new_cols.len();
        }
        self.cols = new_cols;
        self.vals = new_vals;
        self.row_ptr = new_ptr;
    }

    /// Identity on a basis.
    pub fn identity(basis: Arc<Basis>) -> OperatorMatrix {
        let dim = basis.dim();
        let one = Complex64::new(1.0, 0.0);
        let triplets = (0..dim).map(|i| (i, i, one)).collect();
        OperatorMatrix::from_triplets(basis.clone(), basis, triplets)
    }

    /// All-zero operator between two bases.
    pub fn zeros(basis_in: Arc<Basis>, basis_out: Arc<Basis>) -> OperatorMatrix {
        OperatorMatrix::from_triplets(basis_in, basis_out, Vec::new())
    }

    pub fn basis_in(&self) -> &Arc<Basis> {
        &self.basis_in
    }

    pub fn basis_out(&self) -> &Arc<Basis> {
        &self.basis_out
    }

    pub fn rows(&self) -> usize {
        self.basis_out.dim()
    }

    pub fn cols_dim(&self) -> usize {
        self.basis_in.dim()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_square(&self) -> bool {
        self.basis_in.same_space(&self.basis_out)
    }

    /// `y = M x` on raw amplitude slices.
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols_dim(), "matvec dimension mismatch");
        let mut y = vec![Complex64::new(0.0, 0.0); self.rows()];
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yr = acc;
        }
        y
    }

    /// Apply to a state vector, producing a state on `basis_out`.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if !state.basis.same_space(&self.basis_in) {
            return Err(Error::BasisMismatch(
                "operator applied to a state on a different basis".into(),
            ));
        }
        Ok(StateVector {
            basis: self.basis_out.clone(),
            amplitudes: self.matvec(&state.amplitudes),
        })
    }

    /// Conjugate transpose; swaps the bases. Exact (no arithmetic on values
    /// beyond conjugation), so `b.adjoint() == b_dag` holds structurally.
    pub fn adjoint(&self) -> OperatorMatrix {
        let triplets = self
            .iter()
            .map(|(r, c, v)| (c, r, v.conj()))
            .collect::<Vec<_>>();
        OperatorMatrix::from_triplets(self.basis_out.clone(), self.basis_in.clone(), triplets)
    }

    /// Iterate over stored (row, col, value) entries.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.rows()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    /// `self + other` (matching bases required).
    pub fn add(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    /// `self - other`.
    pub fn sub(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &OperatorMatrix,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<OperatorMatrix> {
        if !self.basis_in.same_space(&other.basis_in) || !self.basis_out.same_space(&other.basis_out)
        {
            return Err(Error::BasisMismatch(
                "operator addition on different bases".into(),
            ));
        }
        let zero = Complex64::new(0.0, 0.0);
        let mut triplets: Vec<(usize, usize, Complex64)> = self
            .iter()
            .map(|(r, c, v)| (r, c, f(v, zero)))
            .collect();
        triplets.extend(other.iter().map(|(r, c, v)| (r, c, f(zero, v))));
        Ok(OperatorMatrix::from_triplets(
            self.basis_in.clone(),
            self.basis_out.clone(),
            triplets,
        ))
    }

    /// Scale by a complex factor.
    pub fn scale(&self, factor: Complex64) -> OperatorMatrix {
        let mut scaled = self.clone();
        for v in &mut scaled.vals {
            *v *= factor;
        }
        scaled.prune_zeros();
        scaled
    }

    /// `self * rhs` (operator composition: rhs acts first).
    pub fn matmul(&self, rhs: &OperatorMatrix) -> Result<OperatorMatrix> {
        if !self.basis_in.same_space(&rhs.basis_out) {
            return Err(Error::BasisMismatch(
                "operator product with incompatible inner bases".into(),
            ));
        }
        let mut triplets = Vec::new();
        for r in 0..self.rows() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let mid = self.cols[k];
                let v = self.vals[k];
                for k2 in rhs.row_ptr[mid]..rhs.row_ptr[mid + 1] {
                    triplets.push((r, rhs.cols[k2], v * rhs.vals[k2]));
                }
            }
        }
        Ok(OperatorMatrix::from_triplets(
            rhs.basis_in.clone(),
            self.basis_out.clone(),
            triplets,
        ))
    }

    /// Commutator `[self, other]`.
    pub fn commutator(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    /// Largest absolute entry of `A - A^dag` (0 for exactly Hermitian A).
    pub fn hermiticity_error(&self) -> f64 {
        self.sub(&self.adjoint())
            .map(|d| d.max_abs())
            .unwrap_or(f64::INFINITY)
    }

    /// Dense copy.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::<Complex64>::zeros(self.rows(), self.cols_dim());
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    /// Sparsify a dense matrix over the given bases, dropping entries with
    /// magnitude at or below `prune_tol`.
    pub fn from_dense(
        basis_in: Arc<Basis>,
        basis_out: Arc<Basis>,
        dense: &DMatrix<Complex64>,
        prune_tol: f64,
    ) -> OperatorMatrix {
        assert_eq!(dense.nrows(), basis_out.dim());
        assert_eq!(dense.ncols(), basis_in.dim());
        let mut triplets = Vec::new();
        for r in 0..dense.nrows() {
            for c in 0..dense.ncols() {
                let v = dense[(r, c)];
                if v.norm() > prune_tol {
                    triplets.push((r, c, v));
                }
            }
        }
        OperatorMatrix::from_triplets(basis_in, basis_out, triplets)
    }
}

/// Build the matrix of a ladder product (written left to right, applied right
/// to left) between two bases.
///
/// For number-resolved input sectors the output sector must match the net
/// boson-number change exactly; a produced state missing from `basis_out` is
/// an error. For `Capped` bases a raise past the cap drops the amplitude
/// (hard-wall projector).
pub fn ladder_monomial(
    basis_in: &Arc<Basis>,
    basis_out: &Arc<Basis>,
    ops: &[Ladder],
) -> Result<OperatorMatrix> {
    if basis_in.modes() != basis_out.modes() {
        return Err(Error::BasisMismatch(
            "ladder product between bases with different mode counts".into(),
        ));
    }
    for op in ops {
        if op.mode() >= basis_in.modes() {
            return Err(Error::BasisMismatch(format!(
                "ladder operator on mode {} of a {}-mode basis",
                op.mode(),
                basis_in.modes()
            )));
        }
    }
    let net: i64 = ops
        .iter()
        .map(|op| match op {
            Ladder::Raise(_) => 1i64,
            Ladder::Lower(_) => -1i64,
        })
        .sum();
    check_sector_arithmetic(basis_in, basis_out, net)?;
    let capped_out = matches!(basis_out.sector(), Sector::Capped(_));

    let mut triplets = Vec::new();
    let mut occ = vec![0u32; basis_in.modes()];
    for (col, state) in basis_in.states().iter().enumerate() {
        occ.copy_from_slice(state);
        let mut amp = 1.0f64;
        let mut alive = true;
        for op in ops.iter().rev() {
            match *op {
                Ladder::Lower(m) => {
                    if occ[m] == 0 {
                        alive = false;
                        break;
                    }
                    amp *= (occ[m] as f64).sqrt();
                    occ[m] -= 1;
                }
                Ladder::Raise(m) => {
                    occ[m] += 1;
                    amp *= (occ[m] as f64).sqrt();
                }
            }
        }
        if !alive {
            continue;
        }
        match basis_out.index_of(&occ) {
            Some(row) => triplets.push((row, col, Complex64::new(amp, 0.0))),
            None if capped_out => {} // projected out by the hard wall
            None => {
                return Err(Error::CrossSector(format!(
                    "state {occ:?} produced from {state:?} is outside {}",
                    basis_out.sector().label()
                )))
            }
        }
    }
    Ok(OperatorMatrix::from_triplets(
        basis_in.clone(),
        basis_out.clone(),
        triplets,
    ))
}

/// Sector bookkeeping for `ladder_monomial`: number-resolved sectors must
/// match the net change; capped sectors must agree on the cap.
fn check_sector_arithmetic(basis_in: &Basis, basis_out: &Basis, net: i64) -> Result<()> {
    match (basis_in.sector(), basis_out.sector()) {
        (Sector::FixedTotal(n_in), Sector::FixedTotal(n_out)) => {
            if n_in as i64 + net != n_out as i64 {
                return Err(Error::CrossSector(format!(
                    "net boson change {net} maps fixed-total({n_in}) to fixed-total({}), got fixed-total({n_out})",
                    n_in as i64 + net
                )));
            }
        }
        (Sector::TotalAtMost(a), Sector::TotalAtMost(b)) => {
            // the product itself decides reachability; totals only need to be
            // compatible in the worst case
            if net > 0 && b < a {
                return Err(Error::CrossSector(format!(
                    "raising product cannot land total-at-most({a}) inside total-at-most({b})"
                )));
            }
        }
        (Sector::Capped(a), Sector::Capped(b)) => {
            if a != b {
                return Err(Error::BasisMismatch(format!(
                    "capped bases with different caps ({a} vs {b})"
                )));
            }
        }
        (si, so) => {
            return Err(Error::BasisMismatch(format!(
                "ladder product between {} and {}",
                si.label(),
                so.label()
            )))
        }
    }
    Ok(())
}

/// `b_mode^dag` between two bases.
pub fn creation_op(
    basis_in: &Arc<Basis>,
    basis_out: &Arc<Basis>,
    mode: usize,
) -> Result<OperatorMatrix> {
    ladder_monomial(basis_in, basis_out, &[Ladder::Raise(mode)])
}

/// `b_mode` between two bases. Built as the adjoint of [`creation_op`], so
/// the adjoint relation holds exactly (structurally), not within roundoff.
pub fn annihilation_op(
    basis_in: &Arc<Basis>,
    basis_out: &Arc<Basis>,
    mode: usize,
) -> Result<OperatorMatrix> {
    Ok(creation_op(basis_out, basis_in, mode)?.adjoint())
}

/// Number operator `n_mode` on a basis (diagonal, exact integer values).
pub fn number_op(basis: &Arc<Basis>, mode: usize) -> Result<OperatorMatrix> {
    if mode >= basis.modes() {
        return Err(Error::BasisMismatch(format!(
            "number operator on mode {mode} of a {}-mode basis",
            basis.modes()
        )));
    }
    let triplets = basis
        .states()
        .iter()
        .enumerate()
        .filter(|(_, s)| s[mode] > 0)
        .map(|(i, s)| (i, i, Complex64::new(s[mode] as f64, 0.0)))
        .collect();
    Ok(OperatorMatrix::from_triplets(
        basis.clone(),
        basis.clone(),
        triplets,
    ))
}

/// Total number operator `sum_k n_k` (diagonal, exact integer values).
pub fn number_total_op(basis: &Arc<Basis>) -> Result<OperatorMatrix> {
    let triplets = basis
        .states()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.iter().any(|&o| o > 0))
        .map(|(i, s)| (i, i, Complex64::new(s.iter().sum::<u32>() as f64, 0.0)))
        .collect();
    Ok(OperatorMatrix::from_triplets(
        basis.clone(),
        basis.clone(),
        triplets,
    ))
}

/// Amplitude vector over a basis. Not implicitly normalized.
#[derive(Clone, Debug)]
pub struct StateVector {
    basis: Arc<Basis>,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// The zero vector.
    pub fn zero(basis: Arc<Basis>) -> StateVector {
        let dim = basis.dim();
        StateVector {
            basis,
            amplitudes: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    /// Unit amplitude on one occupation list.
    pub fn basis_state(basis: Arc<Basis>, occ: &[u32]) -> Result<StateVector> {
        let idx = basis.index_of(occ).ok_or_else(|| {
            Error::StateNotInSector(format!("{occ:?} not in {}", basis.sector().label()))
        })?;
        let mut sv = StateVector::zero(basis);
        sv.amplitudes[idx] = Complex64::new(1.0, 0.0);
        Ok(sv)
    }

    /// The vacuum `|0...0>` (errors in sectors that exclude it).
    pub fn vacuum(basis: Arc<Basis>) -> Result<StateVector> {
        let occ = vec![0u32; basis.modes()];
        StateVector::basis_state(basis, &occ)
    }

    /// Build from raw amplitudes.
    pub fn from_amplitudes(basis: Arc<Basis>, amplitudes: Vec<Complex64>) -> Result<StateVector> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::BasisMismatch(format!(
                "{} amplitudes for a dimension-{} basis",
                amplitudes.len(),
                basis.dim()
            )));
        }
        Ok(StateVector { basis, amplitudes })
    }

    /// Deterministic pseudo-random normalized state spanning every basis
    /// state whose support lies inside `sites` (0-based modes) with total
    /// boson number exactly `total`.
    pub fn random_on_sites(
        basis: Arc<Basis>,
        sites: &[usize],
        total: u32,
        seed: u64,
    ) -> Result<StateVector> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut sv = StateVector::zero(basis);
        let mut hit = 0usize;
        for (i, state) in sv.basis.states().iter().enumerate() {
            let sum: u32 = state.iter().sum();
            let supported = state
                .iter()
                .enumerate()
                .all(|(m, &o)| o == 0 || sites.contains(&m));
            if sum == total && supported {
                sv.amplitudes[i] = Complex64::new(
                    rand::Rng::random::<f64>(&mut rng) - 0.5,
                    rand::Rng::random::<f64>(&mut rng) - 0.5,
                );
                hit += 1;
            }
        }
        if hit == 0 {
            return Err(Error::StateNotInSector(format!(
                "no states with {total} bosons on sites {sites:?} in {}",
                sv.basis.sector().label()
            )));
        }
        let n = sv.norm();
        sv.scale_in_place(Complex64::new(1.0 / n, 0.0));
        Ok(sv)
    }

    /// Deterministic pseudo-random normalized state over the whole sector.
    pub fn random(basis: Arc<Basis>, seed: u64) -> StateVector {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut sv = StateVector::zero(basis);
        for a in sv.amplitudes.iter_mut() {
            *a = Complex64::new(
                rand::Rng::random::<f64>(&mut rng) - 0.5,
                rand::Rng::random::<f64>(&mut rng) - 0.5,
            );
        }
        let n = sv.norm();
        sv.scale_in_place(Complex64::new(1.0 / n, 0.0));
        sv
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    /// Amplitude on an occupation list (0 if outside the sector).
    pub fn amplitude_of(&self, occ: &[u32]) -> Complex64 {
        self.basis
            .index_of(occ)
            .map(|i| self.amplitudes[i])
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// `<self|other>` with the left factor conjugated.
    pub fn dot(&self, other: &StateVector) -> Result<Complex64> {
        if !self.basis.same_space(&other.basis) {
            return Err(Error::BasisMismatch("inner product across bases".into()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale_in_place(&mut self, factor: Complex64) {
        for a in &mut self.amplitudes {
            *a *= factor;
        }
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, factor: Complex64, other: &StateVector) -> Result<()> {
        if !self.basis.same_space(&other.basis) {
            return Err(Error::BasisMismatch("state addition across bases".into()));
        }
        for (a, b) in self.amplitudes.iter_mut().zip(&other.amplitudes) {
            *a += factor * b;
        }
        Ok(())
    }

    /// `<self| op |self>`.
    pub fn expectation(&self, op: &OperatorMatrix) -> Result<Complex64> {
        if !op.is_square() {
            return Err(Error::BasisMismatch(
                "expectation of a rectangular operator".into(),
            ));
        }
        self.dot(&op.apply(self)?)
    }

    /// Re-express on another basis by matching occupation lists. Returns the
    /// re-expressed state and the squared norm that had no counterpart.
    pub fn project_onto(&self, target: Arc<Basis>) -> Result<(StateVector, f64)> {
        if target.modes() != self.basis.modes() {
            return Err(Error::BasisMismatch(
                "projection between bases with different mode counts".into(),
            ));
        }
        let mut out = StateVector::zero(target);
        let mut dropped = 0.0f64;
        for (i, amp) in self.amplitudes.iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            match out.basis.index_of(self.basis.state(i)) {
                Some(j) => out.amplitudes[j] = *amp,
                None => dropped += amp.norm_sqr(),
            }
        }
        Ok((out, dropped))
    }
}

/// Result of applying a polynomial in creation operators to a state.
#[derive(Clone, Debug)]
pub struct Applied {
    /// The (unnormalized) image state.
    pub state: StateVector,
    /// Squared norm dropped by per-mode caps while raising. Exactly zero on
    /// number-resolved sectors.
    pub truncated_weight: f64,
}

/// Apply `f(b_1^dag, ..., b_M^dag)` (with optional shifted arguments
/// `b^dag - shift`) to a state.
///
/// * `Capped` basis: the image stays on the same basis; amplitude raised past
///   the cap is dropped and accounted in [`Applied::truncated_weight`].
/// * `TotalAtMost` basis: the image stays on the same basis; overflowing the
///   total is a [`Error::DegreeOverflow`].
/// * `FixedTotal` basis: requires a homogeneous, unshifted polynomial; the
///   image lives on the shifted sector, which is enumerated on the fly.
pub fn apply_polynomial(f: &MonomialFunction, state: &StateVector) -> Result<Applied> {
    let basis = state.basis();
    if f.modes() > basis.modes() {
        return Err(Error::InvalidFunction(format!(
            "function touches mode {} of a {}-mode basis",
            f.modes(),
            basis.modes()
        )));
    }
    let out_basis: Arc<Basis> = match basis.sector() {
        Sector::Capped(_) | Sector::TotalAtMost(_) => basis.clone(),
        Sector::FixedTotal(n) => {
            if f.shift().is_some() {
                return Err(Error::DegreeOverflow(
                    "shifted arguments mix boson numbers; use a capped or total-at-most basis"
                        .into(),
                ));
            }
            let degrees = f.term_degrees();
            let d0 = degrees[0];
            if degrees.iter().any(|&d| d != d0) {
                return Err(Error::DegreeOverflow(
                    "mixed-degree polynomial on a fixed-total basis".into(),
                ));
            }
            Basis::with_dimension_cap(
                basis.modes(),
                Sector::FixedTotal(n + d0),
                DEFAULT_DIMENSION_CAP.max(basis.dim()),
            )?
        }
    };
    // support test ignores numerical dust (e.g. cross-sector rounding from a
    // dense propagator) far below the state's weight
    let dust = 1e-28 * state.norm_sq().max(f64::MIN_POSITIVE);
    if let Sector::TotalAtMost(k) = basis.sector() {
        let max_occupied = state
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > dust)
            .map(|(i, _)| basis.state(i).iter().sum::<u32>())
            .max()
            .unwrap_or(0);
        if max_occupied + f.max_degree() > k {
            return Err(Error::DegreeOverflow(format!(
                "degree {} on top of {} bosons overflows total-at-most({k})",
                f.max_degree(),
                max_occupied
            )));
        }
    }

    let mut out = StateVector::zero(out_basis);
    let mut truncated = 0.0f64;
    // expand each term: with a shift s, (b^dag - s)^e contributes
    // sum_j C(e, j) (-s)^(e-j) b^dag^j per mode.
    for term in f.terms() {
        for (coeff, raises) in expand_shifted_term(term.coefficient, &term.exponents, f.shift()) {
            for (i, amp) in state.amplitudes().iter().enumerate() {
                if amp.norm_sqr() == 0.0 {
                    continue;
                }
                let mut occ = basis.state(i).clone();
                let mut factor = 1.0f64;
                for (mode, &extra) in raises.iter().enumerate() {
                    for _ in 0..extra {
                        occ[mode] += 1;
                        factor *= (occ[mode] as f64).sqrt();
                    }
                }
                let contribution = coeff * amp * factor;
                match out.basis.index_of(&occ) {
                    Some(j) => out.amplitudes[j] += contribution,
                    None if matches!(basis.sector(), Sector::Capped(_)) => {
                        truncated += contribution.norm_sqr()
                    }
                    // sub-dust sources passed the support test; their
                    // overflow is rounding noise, not a real image state
                    None if amp.norm_sqr() <= dust => truncated += contribution.norm_sqr(),
                    None => {
                        return Err(Error::DegreeOverflow(format!(
                            "image state {occ:?} missing from {}",
                            out.basis.sector().label()
                        )))
                    }
                }
            }
        }
    }
    Ok(Applied {
        state: out,
        truncated_weight: truncated,
    })
}

/// Binomial expansion of one (possibly shifted) monomial term into plain
/// raising monomials: returns (coefficient, raise counts per mode).
fn expand_shifted_term(
    coefficient: Complex64,
    exponents: &[u32],
    shift: Option<Complex64>,
) -> Vec<(Complex64, Vec<u32>)> {
    let modes = exponents.len();
    let Some(s) = shift else {
        return vec![(coefficient, exponents.to_vec())];
    };
    let mut acc = vec![(coefficient, vec![0u32; modes])];
    for (mode, &e) in exponents.iter().enumerate() {
        if e == 0 {
            continue;
        }
        let mut next = Vec::with_capacity(acc.len() * (e as usize + 1));
        for (c, raises) in &acc {
            // (b^dag - s)^e = sum_j C(e,j) b^dag^j (-s)^(e-j)
            let mut binom = 1.0f64;
            for j in 0..=e {
                if j > 0 {
                    binom = binom * (e - j + 1) as f64 / j as f64;
                }
                let pow = (e - j) as i32;
                let factor = (-s).powi(pow) * binom;
                let mut r = raises.clone();
                r[mode] = j;
                next.push((c * factor, r));
            }
        }
        acc = next;
    }
    acc
}
