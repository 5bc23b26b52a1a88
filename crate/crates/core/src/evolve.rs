//! Time evolution and the analytic rotor propagator.
//!
//! Dense evolution diagonalizes the (Hermitian) Hamiltonian once and applies
//! `V exp(-i lambda t) V^dag`. Above [`DENSE_LIMIT`] states a Lanczos
//! propagator with adaptive substepping takes over. Both implement
//! `psi(t) = exp(-i H t) psi(0)`; the Heisenberg picture
//! `A(t) = U^dag(t) A U(t)` is provided for operators, including rectangular
//! ones that hop between boson-number sectors.
//!
//! The analytic reference for the engineered chain is the Wigner rotation
//! matrix: with `l = (N - 1) / 2` and site `k` carrying `m_k = k - (N+1)/2`,
//! the adjoint propagator on the one-boson sector is
//! `exp(+i H t) = [ exp(+i (pi/2)(m' - m)) d^l_{m'm}(J t) ]`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{Basis, OperatorMatrix, StateVector};

/// Largest dimension handled by full diagonalization in the automatic
/// dispatch.
pub const DENSE_LIMIT: usize = 2000;

/// Default local error tolerance of the Lanczos propagator.
pub const DEFAULT_KRYLOV_TOL: f64 = 1e-10;

fn check_hermitian(h: &OperatorMatrix) -> Result<()> {
    if !h.is_square() {
        return Err(Error::Eigensolver(
            "evolution needs a square operator".into(),
        ));
    }
    let err = h.hermiticity_error();
    if err > 1e-9 * h.max_abs().max(1.0) {
        return Err(Error::Eigensolver(format!(
            "operator is not Hermitian (deviation {err:.3e})"
        )));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian operator, cached for repeated evolution.
pub struct Propagator {
    basis: Arc<Basis>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl Propagator {
    /// Diagonalize. The decomposition is verified before use: residuals
    /// `H v - lambda v` are checked column by column (all columns up to
    /// dimension 512, a deterministic sample above that).
    pub fn new(h: &OperatorMatrix) -> Result<Propagator> {
        check_hermitian(h)?;
        let dim = h.rows();
        let dense = h.to_dense();
        let eig = nalgebra::SymmetricEigen::new(dense);
        let eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let eigenvectors = eig.eigenvectors;

        let scale = h.max_abs().max(1.0) * (dim as f64).sqrt();
        let checked: Vec<usize> = if dim <= 512 {
            (0..dim).collect()
        } else {
            (0..16).map(|i| i * (dim - 1) / 15).collect()
        };
        for &j in &checked {
            let col = eigenvectors.column(j);
            let hv = h.matvec(col.as_slice());
            let mut resid = 0.0f64;
            let mut norm = 0.0f64;
            for r in 0..dim {
                resid += (hv[r] - col[r] * eigenvalues[j]).norm_sqr();
                norm += col[r].norm_sqr();
            }
            if resid.sqrt() > 1e-9 * scale || (norm - 1.0).abs() > 1e-9 {
                return Err(Error::Eigensolver(format!(
                    "eigenpair {j} failed verification (residual {:.3e}, norm {:.3e})",
                    resid.sqrt(),
                    norm
                )));
            }
        }
        Ok(Propagator {
            basis: h.basis_in().clone(),
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `exp(-i H t) psi`.
    pub fn evolve(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        if !psi.basis().same_space(&self.basis) {
            return Err(Error::BasisMismatch(
                "state evolved with a propagator for a different basis".into(),
            ));
        }
        let x = DVector::from_column_slice(psi.amplitudes());
        let mut y = self.eigenvectors.adjoint() * x;
        for (j, v) in y.iter_mut().enumerate() {
            *v *= Complex64::new(0.0, -self.eigenvalues[j] * t).exp();
        }
        let out = &self.eigenvectors * y;
        StateVector::from_amplitudes(psi.basis().clone(), out.iter().copied().collect())
    }

    /// `exp(+i H t) psi`, the adjoint (Heisenberg-direction) propagator.
    pub fn adjoint_evolve(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        self.evolve(psi, -t)
    }

    /// Dense `U(t) = exp(-i H t)`.
    pub fn unitary(&self, t: f64) -> DMatrix<Complex64> {
        let dim = self.eigenvalues.len();
        let mut phased = self.eigenvectors.clone();
        for j in 0..dim {
            let phase = Complex64::new(0.0, -self.eigenvalues[j] * t).exp();
            for r in 0..dim {
                phased[(r, j)] *= phase;
            }
        }
        phased * self.eigenvectors.adjoint()
    }
}

/// Heisenberg-picture operator `A(t) = U_out^dag(t) A U_in(t)`.
///
/// `A` may be rectangular (e.g. a creation operator between boson-number
/// sectors); each side is evolved with the propagator of its own sector.
pub fn heisenberg_conjugate(
    op: &OperatorMatrix,
    prop_in: &Propagator,
    prop_out: &Propagator,
    t: f64,
) -> Result<OperatorMatrix> {
    if !op.basis_in().same_space(prop_in.basis()) || !op.basis_out().same_space(prop_out.basis()) {
        return Err(Error::BasisMismatch(
            "Heisenberg conjugation with mismatched propagators".into(),
        ));
    }
    let u_in = prop_in.unitary(t);
    let u_out = prop_out.unitary(t);
    let dense = u_out.adjoint() * op.to_dense() * u_in;
    Ok(OperatorMatrix::from_dense(
        op.basis_in().clone(),
        op.basis_out().clone(),
        &dense,
        0.0,
    ))
}

/// `exp(-i H t) psi` through a Lanczos subspace, without diagonalizing `H`.
///
/// Substeps are chosen adaptively so the accumulated Expokit-style error
/// estimate stays below `tol * |psi|`.
pub fn krylov_evolve(
    h: &OperatorMatrix,
    psi: &StateVector,
    t: f64,
    tol: f64,
) -> Result<StateVector> {
    check_hermitian(h)?;
    if !psi.basis().same_space(h.basis_in()) {
        return Err(Error::BasisMismatch(
            "state evolved with a Hamiltonian on a different basis".into(),
        ));
    }
    let dim = h.rows();
    let norm0 = psi.norm();
    if norm0 == 0.0 {
        return Ok(psi.clone());
    }
    if t == 0.0 {
        return Ok(psi.clone());
    }
    let m_max = 30.min(dim);
    let mut current: Vec<Complex64> = psi.amplitudes().to_vec();
    let mut remaining = t;
    let total = t.abs();
    let mut steps = 0usize;

    while remaining != 0.0 {
        steps += 1;
        if steps > 10_000 {
            return Err(Error::Krylov(
                "Lanczos propagation failed to converge within 10000 substeps".into(),
            ));
        }
        let beta0 = current.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        // Lanczos with full reorthogonalization (m is small)
        let mut vs: Vec<Vec<Complex64>> = Vec::with_capacity(m_max + 1);
        vs.push(current.iter().map(|a| a / beta0).collect());
        let mut alphas: Vec<f64> = Vec::with_capacity(m_max);
        let mut betas: Vec<f64> = Vec::with_capacity(m_max);
        let mut happy = false;
        for j in 0..m_max {
            let mut w = h.matvec(&vs[j]);
            let alpha: f64 = vs[j]
                .iter()
                .zip(&w)
                .map(|(v, wv)| (v.conj() * wv).re)
                .sum();
            alphas.push(alpha);
            // orthogonalize against the whole block (modified Gram-Schmidt);
            // this subtracts the tridiagonal part and the roundoff drift in
            // one sweep
            for vprev in &vs {
                let overlap: Complex64 = vprev.iter().zip(&w).map(|(v, wv)| v.conj() * wv).sum();
                for (wv, v) in w.iter_mut().zip(vprev) {
                    *wv -= overlap * v;
                }
            }
            let beta = w.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if j + 1 == m_max || beta < 1e-12 * h.max_abs().max(1.0) {
                if beta < 1e-12 * h.max_abs().max(1.0) {
                    happy = true;
                } else {
                    betas.push(beta);
                }
                if !happy {
                    vs.push(w.iter().map(|a| a / beta).collect());
                }
                break;
            }
            betas.push(beta);
            vs.push(w.iter().map(|a| a / beta).collect());
        }
        let m = alphas.len();
        // tridiagonal T
        let mut tmat = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            tmat[(i, i)] = alphas[i];
            if i + 1 < m {
                tmat[(i, i + 1)] = betas[i];
                tmat[(i + 1, i)] = betas[i];
            }
        }
        let eig = nalgebra::SymmetricEigen::new(tmat);

        // exp(-i T tau) e_1, recomputed cheaply as tau shrinks
        let small_exp = |tau: f64| -> Vec<Complex64> {
            let mut out = vec![Complex64::new(0.0, 0.0); m];
            for j in 0..m {
                let phase = Complex64::new(0.0, -eig.eigenvalues[j] * tau).exp();
                let weight = phase * eig.eigenvectors[(0, j)];
                for r in 0..m {
                    out[r] += weight * eig.eigenvectors[(r, j)];
                }
            }
            out
        };

        let mut tau = remaining;
        let mut coeffs = small_exp(tau);
        if !happy && m == m_max {
            let beta_last = *betas.last().unwrap_or(&0.0);
            loop {
                let err = beta_last * coeffs[m - 1].norm() * beta0;
                let budget = tol * norm0 * (tau.abs() / total).max(1e-3);
                if err <= budget || tau.abs() < 1e-12 * total {
                    break;
                }
                tau *= 0.5;
                coeffs = small_exp(tau);
            }
        }

        let mut next = vec![Complex64::new(0.0, 0.0); dim];
        for (j, vj) in vs.iter().take(m).enumerate() {
            let c = coeffs[j] * beta0;
            for (n, v) in next.iter_mut().zip(vj) {
                *n += c * v;
            }
        }
        current = next;
        remaining -= tau;
    }

    StateVector::from_amplitudes(psi.basis().clone(), current)
}

/// How to drive `exp(-i H t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EvolveMethod {
    /// Dense below [`DENSE_LIMIT`], Lanczos above.
    #[default]
    Auto,
    Dense,
    Krylov,
}

/// A prepared evolution backend: diagonalization is cached when dense.
pub enum Evolver {
    Dense(Propagator),
    Krylov { h: OperatorMatrix, tol: f64 },
}

impl Evolver {
    pub fn new(h: &OperatorMatrix, method: EvolveMethod) -> Result<Evolver> {
        let dense = match method {
            EvolveMethod::Dense => true,
            EvolveMethod::Krylov => false,
            EvolveMethod::Auto => h.rows() <= DENSE_LIMIT,
        };
        if dense {
            Ok(Evolver::Dense(Propagator::new(h)?))
        } else {
            check_hermitian(h)?;
            Ok(Evolver::Krylov {
                h: h.clone(),
                tol: DEFAULT_KRYLOV_TOL,
            })
        }
    }

    /// `exp(-i H t) psi`.
    pub fn evolve(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        match self {
            Evolver::Dense(p) => p.evolve(psi, t),
            Evolver::Krylov { h, tol } => krylov_evolve(h, psi, t, *tol),
        }
    }

    /// `exp(+i H t) psi`.
    pub fn adjoint_evolve(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        self.evolve(psi, -t)
    }
}

/// Wigner small-d matrix element `d^l_{m'm}(beta) = <l m'| exp(-i beta L_y) |l m>`.
///
/// Half-integer arguments are passed doubled (`two_l = 2l`, ...). Evaluated
/// by the three-term recursion in `l` seeded at `l0 = max(|m'|, |m|)` with
/// the closed boundary forms, which is stable for all angles.
pub fn wigner_small_d(two_l: i64, two_mp: i64, two_m: i64, beta: f64) -> Result<f64> {
    if two_l < 0
        || two_mp.abs() > two_l
        || two_m.abs() > two_l
        || (two_l - two_mp) % 2 != 0
        || (two_l - two_m) % 2 != 0
    {
        return Err(Error::InvalidAngularMomentum {
            two_l,
            two_mp,
            two_m,
        });
    }
    let c = (beta / 2.0).cos();
    let s = (beta / 2.0).sin();
    let mp = two_mp as f64 / 2.0;
    let m = two_m as f64 / 2.0;
    let two_l0 = two_mp.abs().max(two_m.abs());

    // seed d^{l0}_{m'm} from the closed boundary forms
    let seed = if two_m == two_l0 {
        // m = +l0: sqrt(C(2l, l+m')) c^{l+m'} s^{l-m'}
        binomial_f64(two_l0, (two_l0 + two_mp) / 2).sqrt()
            * c.powi(((two_l0 + two_mp) / 2) as i32)
            * s.powi(((two_l0 - two_mp) / 2) as i32)
    } else if two_m == -two_l0 {
        // m = -l0: (-1)^(l+m') sqrt(C(2l, l+m')) c^{l-m'} s^{l+m'}
        sign_pow((two_l0 + two_mp) / 2)
            * binomial_f64(two_l0, (two_l0 + two_mp) / 2).sqrt()
            * c.powi(((two_l0 - two_mp) / 2) as i32)
            * s.powi(((two_l0 + two_mp) / 2) as i32)
    } else if two_mp == two_l0 {
        // m' = +l0: (-1)^(l-m) sqrt(C(2l, l+m)) c^{l+m} s^{l-m}
        sign_pow((two_l0 - two_m) / 2)
            * binomial_f64(two_l0, (two_l0 + two_m) / 2).sqrt()
            * c.powi(((two_l0 + two_m) / 2) as i32)
            * s.powi(((two_l0 - two_m) / 2) as i32)
    } else {
        // m' = -l0: sqrt(C(2l, l+m)) c^{l-m} s^{l+m}
        binomial_f64(two_l0, (two_l0 + two_m) / 2).sqrt()
            * c.powi(((two_l0 - two_m) / 2) as i32)
            * s.powi(((two_l0 + two_m) / 2) as i32)
    };
    if two_l == two_l0 {
        return Ok(seed);
    }

    // recursion upward in l; d^{l0 - 1} = 0 (its coefficient vanishes at the
    // first step because (l - 1)^2 equals m'^2 or m^2 there)
    let cos_b = beta.cos();
    let mut d_prev = 0.0f64; // d^{j-2}
    let mut d_curr = seed; // d^{j-1}, starting at l0
    let mut two_j = two_l0 + 2;
    while two_j <= two_l {
        let j = two_j as f64 / 2.0;
        let d_next = if two_j == 2 {
            // the generic step divides by (j - 1); at j = 1 (only reached
            // when m' = m = 0) use d^1_00 = cos(beta) d^0_00 instead
            cos_b * d_curr
        } else {
            let denom = (j - 1.0) * ((j * j - mp * mp) * (j * j - m * m)).sqrt();
            let a = (2.0 * j - 1.0) * (j * (j - 1.0) * cos_b - mp * m);
            let b =
                j * ((((j - 1.0) * (j - 1.0) - mp * mp) * ((j - 1.0) * (j - 1.0) - m * m)).sqrt());
            (a * d_curr - b * d_prev) / denom
        };
        d_prev = d_curr;
        d_curr = d_next;
        two_j += 2;
    }
    Ok(d_curr)
}

fn sign_pow(k: i64) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// C(n, k) as f64 (n, k are plain integers here, not doubled).
fn binomial_f64(n: i64, k: i64) -> f64 {
    if k < 0 || k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc *= (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Full rotation matrix `d^l(beta)`, indexed by `m` ascending from `-l`
/// (index `i` maps to `two_m = 2 i - two_l`).
pub fn d_matrix(two_l: i64, beta: f64) -> Result<DMatrix<f64>> {
    let size = two_l as usize + 1;
    let mut d = DMatrix::<f64>::zeros(size, size);
    for ip in 0..size {
        for i in 0..size {
            let two_mp = 2 * ip as i64 - two_l;
            let two_m = 2 * i as i64 - two_l;
            d[(ip, i)] = wigner_small_d(two_l, two_mp, two_m, beta)?;
        }
    }
    Ok(d)
}

/// Analytic adjoint propagator `exp(+i H t)` of the engineered `U = eps = 0`
/// chain on the one-boson sector, indexed by site (row `k'-1`, column `k-1`):
///
/// ```text
/// [exp(+i (pi/2) (m' - m)) d^l_{m'm}(J t)],  l = (N-1)/2,  m_k = k - (N+1)/2
/// ```
pub fn analytic_single_particle_propagator(
    n: usize,
    j: f64,
    t: f64,
) -> Result<DMatrix<Complex64>> {
    if n == 0 {
        return Err(Error::InvalidChain("zero-length chain".into()));
    }
    let two_l = n as i64 - 1;
    let d = d_matrix(two_l, j * t)?;
    let mut u = DMatrix::<Complex64>::zeros(n, n);
    for kp in 0..n {
        for k in 0..n {
            // m' - m = k' - k
            let phase = Complex64::new(0.0, std::f64::consts::FRAC_PI_2 * (kp as f64 - k as f64))
                .exp();
            u[(kp, k)] = phase * d[(kp, k)];
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{Basis, Sector, StateVector};
    use crate::model::{build_angular_momentum, build_bose_hubbard, ChainSpec};
    use approx::assert_abs_diff_eq;

    #[test]
    fn evolve_at_zero_time_is_identity() {
        let chain = ChainSpec::engineered(4, 1.0, 0.0, 0.5).unwrap();
        let basis = Basis::new(4, Sector::FixedTotal(2)).unwrap();
        let h = build_bose_hubbard(&chain, &basis).unwrap();
        let prop = Propagator::new(&h).unwrap();
        let psi = StateVector::random_on_sites(basis, &[0, 1, 2, 3], 2, 7).unwrap();
        let out = prop.evolve(&psi, 0.0).unwrap();
        let overlap = psi.dot(&out).unwrap();
        assert_abs_diff_eq!(overlap.re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(overlap.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn eigenstate_picks_up_pure_phase() {
        // N = 2, one boson: H = -J L_x has eigenvalues -J/2, +J/2 and
        // eigenvectors (|1> +- |2>)/sqrt(2)
        let chain = ChainSpec::engineered(2, 1.0, 0.0, 0.0).unwrap();
        let basis = Basis::new(2, Sector::FixedTotal(1)).unwrap();
        let h = build_bose_hubbard(&chain, &basis).unwrap();
        let prop = Propagator::new(&h).unwrap();
        let mut plus = StateVector::zero(basis.clone());
        let i1 = basis.index_of(&[1, 0]).unwrap();
        let i2 = basis.index_of(&[0, 1]).unwrap();
        let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        plus.amplitudes_mut()[i1] = a;
        plus.amplitudes_mut()[i2] = a;
        let t = 0.7;
        let out = prop.evolve(&plus, t).unwrap();
        // eigenvalue of (|1>+|2>)/sqrt2 under -L_x is -1/2
        let expect = Complex64::new(0.0, 0.5 * t).exp();
        let got = plus.dot(&out).unwrap();
        assert_abs_diff_eq!(got.re, expect.re, epsilon = 1e-12);
        assert_abs_diff_eq!(got.im, expect.im, epsilon = 1e-12);
    }

    #[test]
    fn evolution_is_unitary_and_number_conserving() {
        let chain = ChainSpec::engineered(3, 1.0, 0.2, 0.8).unwrap();
        let basis = Basis::new(3, Sector::TotalAtMost(2)).unwrap();
        let h = build_bose_hubbard(&chain, &basis).unwrap();
        let prop = Propagator::new(&h).unwrap();
        let psi = StateVector::random_on_sites(basis.clone(), &[0, 1, 2], 2, 3).unwrap();
        let out = prop.evolve(&psi, 2.13).unwrap();
        assert_abs_diff_eq!(out.norm(), 1.0, epsilon = 1e-12);
        // started in the 2-boson slice, must stay there
        for (i, amp) in out.amplitudes().iter().enumerate() {
            if basis.state(i).iter().sum::<u32>() != 2 {
                assert!(amp.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn adjoint_evolution_inverts_evolution() {
        let chain = ChainSpec::engineered(4, 1.0, 0.0, 1.0).unwrap();
        let basis = Basis::new(4, Sector::FixedTotal(2)).unwrap();
        let h = build_bose_hubbard(&chain, &basis).unwrap();
        let prop = Propagator::new(&h).unwrap();
        let psi = StateVector::random_on_sites(basis, &[0, 1, 2, 3], 2, 11).unwrap();
        let there = prop.evolve(&psi, 1.37).unwrap();
        let back = prop.adjoint_evolve(&there, 1.37).unwrap();
        let overlap = psi.dot(&back).unwrap();
        assert_abs_diff_eq!(overlap.re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let basis = Basis::new(2, Sector::FixedTotal(1)).unwrap();
        let bad = OperatorMatrix::from_triplets(
            basis.clone(),
            basis.clone(),
            vec![(0, 1, Complex64::new(1.0, 0.0))],
        );
        assert!(matches!(Propagator::new(&bad), Err(Error::Eigensolver(_))));
    }

    #[test]
    fn wigner_d_at_zero_is_identity() {
        for two_l in [0i64, 1, 2, 5, 8] {
            for two_mp in (-two_l..=two_l).step_by(2) {
                for two_m in (-two_l..=two_l).step_by(2) {
                    let d = wigner_small_d(two_l, two_mp, two_m, 0.0).unwrap();
                    let expect = if two_mp == two_m { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(d, expect, epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn wigner_d_spin_half_and_one() {
        let beta = 0.83f64;
        let c = (beta / 2.0).cos();
        let s = (beta / 2.0).sin();
        assert_abs_diff_eq!(wigner_small_d(1, 1, 1, beta).unwrap(), c, epsilon = 1e-14);
        assert_abs_diff_eq!(wigner_small_d(1, 1, -1, beta).unwrap(), -s, epsilon = 1e-14);
        assert_abs_diff_eq!(wigner_small_d(1, -1, 1, beta).unwrap(), s, epsilon = 1e-14);
        assert_abs_diff_eq!(wigner_small_d(1, -1, -1, beta).unwrap(), c, epsilon = 1e-14);
        // l = 1 midline entries
        assert_abs_diff_eq!(
            wigner_small_d(2, 0, 0, beta).unwrap(),
            beta.cos(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            wigner_small_d(2, 2, 0, beta).unwrap(),
            -beta.sin() / 2.0f64.sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn wigner_d_at_pi_is_antidiagonal() {
        // d^l_{m'm}(pi) = (-1)^(l - m) delta_{m', -m}
        for two_l in [1i64, 2, 3, 4, 7, 12] {
            for two_mp in (-two_l..=two_l).step_by(2) {
                for two_m in (-two_l..=two_l).step_by(2) {
                    let d = wigner_small_d(two_l, two_mp, two_m, std::f64::consts::PI).unwrap();
                    let expect = if two_mp == -two_m {
                        sign_pow((two_l - two_m) / 2)
                    } else {
                        0.0
                    };
                    assert_abs_diff_eq!(d, expect, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn d_matrix_matches_generator_exponential() {
        // d^l(beta) = exp(-i beta L_y) on the one-boson sector, site k
        // carrying m = k - (N+1)/2
        for n in [2usize, 3, 6, 11, 26, 51] {
            let basis = Basis::new(n, Sector::FixedTotal(1)).unwrap();
            let l = build_angular_momentum(&basis).unwrap();
            let prop = Propagator::new(&l.ly).unwrap();
            for beta in [0.3f64, std::f64::consts::FRAC_PI_2, 2.34] {
                let u = prop.unitary(beta);
                let d = d_matrix(n as i64 - 1, beta).unwrap();
                for kp in 0..n {
                    for k in 0..n {
                        let mut occ_in = vec![0u32; n];
                        occ_in[k] = 1;
                        let mut occ_out = vec![0u32; n];
                        occ_out[kp] = 1;
                        let r = basis.index_of(&occ_out).unwrap();
                        let c = basis.index_of(&occ_in).unwrap();
                        assert_abs_diff_eq!(u[(r, c)].re, d[(kp, k)], epsilon = 1e-11);
                        assert_abs_diff_eq!(u[(r, c)].im, 0.0, epsilon = 1e-11);
                    }
                }
            }
        }
    }

    #[test]
    fn wigner_d_rejects_bad_quantum_numbers() {
        assert!(wigner_small_d(2, 1, 0, 0.5).is_err()); // parity mismatch
        assert!(wigner_small_d(2, 4, 0, 0.5).is_err()); // |m'| > l
        assert!(wigner_small_d(-2, 0, 0, 0.5).is_err());
    }

    #[test]
    fn analytic_propagator_is_adjoint_dynamics() {
        // exp(+i H t) with H = -J L_x equals the phased d-matrix, entry by
        // entry in site labels
        let n = 5usize;
        let j = 1.3;
        let chain = ChainSpec::engineered(n, j, 0.0, 0.0).unwrap();
        let basis = Basis::new(n, Sector::FixedTotal(1)).unwrap();
        let h = build_bose_hubbard(&chain, &basis).unwrap();
        let prop = Propagator::new(&h).unwrap();
        for t in [0.41, std::f64::consts::PI / j] {
            let u_adj = prop.unitary(-t); // exp(+iHt)
            let analytic = analytic_single_particle_propagator(n, j, t).unwrap();
            for kp in 0..n {
                for k in 0..n {
                    let mut occ_in = vec![0u32; n];
                    occ_in[k] = 1;
                    let mut occ_out = vec![0u32; n];
                    occ_out[kp] = 1;
                    let r = basis.index_of(&occ_out).unwrap();
                    let c = basis.index_of(&occ_in).unwrap();
                    let got = u_adj[(r, c)];
                    let want = analytic[(kp, k)];
                    assert_abs_diff_eq!(got.re, want.re, epsilon = 1e-12);
                    assert_abs_diff_eq!(got.im, want.im, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn krylov_agrees_with_dense() {
        let chain = ChainSpec::engineered(3, 1.0, 0.0, 1.0).unwrap();
        let basis = Basis::new(3, Sector::Capped(3)).unwrap();
        let h = build_bose_hubbard(&chain, &basis).unwrap();
        let prop = Propagator::new(&h).unwrap();
        let psi = StateVector::random_on_sites(basis, &[0, 1, 2], 3, 5).unwrap();
        for t in [0.9, -2.7, 15.0] {
            let dense = prop.evolve(&psi, t).unwrap();
            let krylov = krylov_evolve(&h, &psi, t, 1e-12).unwrap();
            let overlap = dense.dot(&krylov).unwrap().norm();
            assert!(overlap > 1.0 - 1e-9, "overlap {overlap} at t = {t}");
            assert_abs_diff_eq!(krylov.norm(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn krylov_handles_small_spaces_exactly() {
        // dim < m_max: happy breakdown path
        let chain = ChainSpec::engineered(2, 1.0, 0.0, 0.0).unwrap();
        let basis = Basis::new(2, Sector::FixedTotal(1)).unwrap();
        let h = build_bose_hubbard(&chain, &basis).unwrap();
        let psi = StateVector::basis_state(basis, &[1, 0]).unwrap();
        let prop = Propagator::new(&h).unwrap();
        let t = 1.234;
        let dense = prop.evolve(&psi, t).unwrap();
        let krylov = krylov_evolve(&h, &psi, t, 1e-12).unwrap();
        for (a, b) in dense.amplitudes().iter().zip(krylov.amplitudes()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-11);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-11);
        }
    }

    #[test]
    fn heisenberg_conjugation_of_identity_is_identity() {
        let chain = ChainSpec::engineered(3, 1.0, 0.0, 0.7).unwrap();
        let basis = Basis::new(3, Sector::FixedTotal(1)).unwrap();
        let h = build_bose_hubbard(&chain, &basis).unwrap();
        let prop = Propagator::new(&h).unwrap();
        let id = OperatorMatrix::identity(basis.clone());
        let conj = heisenberg_conjugate(&id, &prop, &prop, 0.83).unwrap();
        assert!(conj.max_abs_diff(&id).unwrap() < 1e-12);
    }
}
