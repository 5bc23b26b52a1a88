//! End-to-end acceptance gate: one test per headline claim, each printing a
//! single pass/fail line. Tolerances are stated inline next to each
//! assertion.

use bosechain::evolve::{analytic_single_particle_propagator, heisenberg_conjugate, Propagator};
use bosechain::fock::{apply_polynomial, creation_op, Basis, Sector, StateVector};
use bosechain::function::MonomialFunction;
use bosechain::interference::{interference_factor, run_interference, PathLattice};
use bosechain::model::{
    build_bose_hubbard, build_dressed_hamiltonian, dressing_conjugation_oracle, ChainSpec,
    DressingSpec,
};
use bosechain::transfer::{
    mirror_target, run_dressed_transfer, run_state_transfer, run_transfer, signature, Medium,
    TransferOptions,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn verdict(id: usize, name: &str, pass: bool, detail: &str) {
    use std::io::Write;
    let tag = if pass { "[PASS]" } else { "[FAIL]" };
    // raw handle so the line shows up even under the harness's capture
    let mut out = std::io::stdout().lock();
    writeln!(out, "{tag} criterion {id:02}: {name} ({detail})").ok();
    assert!(pass, "criterion {id:02} {name}: {detail}");
}

#[test]
fn acceptance_01_signature_table() {
    // r(N) = exp(-i pi (N - 1) / 2) for N = 2..13, exact to 1e-12;
    // notably r = 1 at N = 5, 9, 13 and r = i at N = 8
    let mut worst = 0.0f64;
    for n in 2..=13usize {
        let direct = Complex64::new(0.0, -std::f64::consts::PI * (n as f64 - 1.0) / 2.0).exp();
        worst = worst.max((signature(n) - direct).norm());
    }
    let table_ok = signature(5) == Complex64::new(1.0, 0.0)
        && signature(9) == Complex64::new(1.0, 0.0)
        && signature(13) == Complex64::new(1.0, 0.0)
        && signature(8) == Complex64::new(0.0, 1.0);
    verdict(
        1,
        "signature table",
        worst < 1e-12 && table_ok,
        &format!("max deviation {worst:.2e}; r(5)=r(9)=r(13)=1, r(8)=i"),
    );
}

#[test]
fn acceptance_02_operator_mirror_identity() {
    // U^dag(t0) b_i^dag U(t0) = r b_{N-i+1}^dag on the <= 2-boson space,
    // N in 2..8, every site, max entry < 1e-9
    let mut worst = 0.0f64;
    for n in 2..=8usize {
        let chain = ChainSpec::engineered(n, 1.0, 0.0, 0.0).unwrap();
        let r = signature(n);
        let b0 = Basis::new(n, Sector::FixedTotal(0)).unwrap();
        let b1 = Basis::new(n, Sector::FixedTotal(1)).unwrap();
        let b2 = Basis::new(n, Sector::FixedTotal(2)).unwrap();
        let p0 = Propagator::new(&build_bose_hubbard(&chain, &b0).unwrap()).unwrap();
        let p1 = Propagator::new(&build_bose_hubbard(&chain, &b1).unwrap()).unwrap();
        let p2 = Propagator::new(&build_bose_hubbard(&chain, &b2).unwrap()).unwrap();
        for i in 0..n {
            for (src, dst, pin, pout) in [(&b0, &b1, &p0, &p1), (&b1, &b2, &p1, &p2)] {
                let op = creation_op(src, dst, i).unwrap();
                let conj = heisenberg_conjugate(&op, pin, pout, chain.t0()).unwrap();
                let mirror = creation_op(src, dst, n - 1 - i).unwrap().scale(r);
                worst = worst.max(conj.max_abs_diff(&mirror).unwrap());
            }
        }
    }
    verdict(
        2,
        "operator mirror identity",
        worst < 1e-9,
        &format!("max entry deviation {worst:.2e} over N = 2..8, all sites, <= 2 bosons"),
    );
}

#[test]
fn acceptance_03_function_transfer() {
    // f = 0.6 x1^2 + 0.8 x2^2 on N = 5: fidelity 1 and zero phase within
    // 1e-9, on the vacuum and on a random 2-boson medium over sites 2..4
    let chain = ChainSpec::engineered(5, 1.0, 0.0, 0.0).unwrap();
    let f = MonomialFunction::parse("0.6*x1^2 + 0.8*x2^2", 5).unwrap();
    let vac = run_transfer(&chain, &f, &Medium::Vacuum, &TransferOptions::default()).unwrap();
    let medium = Medium::RandomSites {
        sites: vec![1, 2, 3],
        bosons: 2,
        seed: 7,
    };
    let med = run_transfer(&chain, &f, &medium, &TransferOptions::default()).unwrap();
    let pass = (1.0 - vac.fidelity).abs() < 1e-9
        && vac.phase_error < 1e-9
        && (1.0 - med.fidelity).abs() < 1e-9
        && med.phase_error < 1e-9;
    verdict(
        3,
        "function transfer",
        pass,
        &format!(
            "vacuum fidelity {:.12}, phase {:.2e}; loaded-medium fidelity {:.12}, phase {:.2e}",
            vac.fidelity, vac.phase_error, med.fidelity, med.phase_error
        ),
    );
}

#[test]
fn acceptance_04_repulsion_proof_transfer() {
    // alpha|0> + sum_k beta_k b_k^dag|0> on N = 5 transfers with fidelity 1
    // within 1e-9 for U/J in {0.1, 1, 10}, five random draws each
    let basis = Basis::new(5, Sector::TotalAtMost(1)).unwrap();
    let mut worst = 0.0f64;
    for (ui, u) in [0.1, 1.0, 10.0].into_iter().enumerate() {
        let chain = ChainSpec::engineered(5, 1.0, 0.0, u).unwrap();
        for draw in 0..5u64 {
            let state = StateVector::random(basis.clone(), 1000 * (ui as u64 + 1) + draw);
            let report = run_state_transfer(&chain, &state, &TransferOptions::default()).unwrap();
            worst = worst
                .max((1.0 - report.fidelity).abs())
                .max(report.phase_error);
        }
    }
    verdict(
        4,
        "repulsion-proof transfer",
        worst < 1e-9,
        &format!("max fidelity/phase deviation {worst:.2e} over 3 couplings x 5 draws"),
    );
}

#[test]
fn acceptance_05_analytic_propagator_oracle() {
    // rotation-matrix closed form vs dense eigensolve, N = 2..12, 20 random
    // times each, max entrywise difference < 1e-9
    let j = 1.0;
    let mut rng = ChaCha12Rng::seed_from_u64(20260817);
    let mut worst = 0.0f64;
    for n in 2..=12usize {
        let chain = ChainSpec::engineered(n, j, 0.0, 0.0).unwrap();
        let basis = Basis::new(n, Sector::FixedTotal(1)).unwrap();
        let h = build_bose_hubbard(&chain, &basis).unwrap();
        let prop = Propagator::new(&h).unwrap();
        // basis index of the boson sitting on a given site
        let idx: Vec<usize> = (0..n)
            .map(|site| {
                let mut occ = vec![0u32; n];
                occ[site] = 1;
                basis.index_of(&occ).unwrap()
            })
            .collect();
        for _ in 0..20 {
            let t = 16.0 * (rng.random::<f64>() - 0.5);
            let analytic = analytic_single_particle_propagator(n, j, t).unwrap();
            // the closed form is exp(+iHt); compare against U(-t)
            let u = prop.unitary(-t);
            for kp in 0..n {
                for k in 0..n {
                    worst = worst.max((analytic[(kp, k)] - u[(idx[kp], idx[k])]).norm());
                }
            }
        }
    }
    verdict(
        5,
        "analytic propagator oracle",
        worst < 1e-9,
        &format!("max entrywise deviation {worst:.2e} over N = 2..12, 20 times each"),
    );
}

#[test]
fn acceptance_06_interference_factors() {
    // receiver factor: 4 for equal signatures, 0 for opposite, 2 for
    // quadrature; (5, 8) gives 2; closed form matches dynamics for all
    // pairs with N <= 9
    let probe = |a: usize, b: usize| {
        run_interference(&PathLattice::from_lengths(&[a, b], 1.0).unwrap())
            .unwrap()
            .interference_factor
    };
    let f58 = probe(5, 8);
    let f55 = probe(5, 5);
    let f57 = probe(5, 7);
    let mut worst = 0.0f64;
    for n1 in 2..=9usize {
        for n2 in n1..=9 {
            let dynamic = probe(n1, n2);
            let closed = interference_factor(&[signature(n1), signature(n2)]).unwrap();
            worst = worst.max((dynamic - closed).abs());
        }
    }
    let pass = (f58 - 2.0).abs() < 1e-9
        && (f55 - 4.0).abs() < 1e-9
        && f57.abs() < 1e-9
        && worst < 1e-9;
    verdict(
        6,
        "interference factors",
        pass,
        &format!(
            "(5,8) -> {f58:.10}, (5,5) -> {f55:.10}, (5,7) -> {f57:.2e}; closed-vs-dynamic max {worst:.2e}"
        ),
    );
}

#[test]
fn acceptance_07_dressed_hamiltonian_consistency() {
    // closed-form dressed Hamiltonians vs explicit W H W^dag conjugation:
    // compare on the one-excitation corner of an N = 2 chain while the
    // conjugation space grows over n_max in {3,4,5,6}; the deviation must
    // fall monotonically and end below 1e-6
    let chain = ChainSpec::engineered(2, 1.0, 0.0, 0.0).unwrap();
    let corner = Basis::new(2, Sector::Capped(1)).unwrap();
    let mut pass = true;
    let mut detail = String::new();
    for dressing in [
        DressingSpec::Displacement(Complex64::new(0.2, 0.0)),
        DressingSpec::Squeezing(0.1),
    ] {
        let built = build_dressed_hamiltonian(&chain, &dressing, &corner).unwrap();
        let mut devs = Vec::new();
        for n_max in [3u32, 4, 5, 6] {
            let oracle = dressing_conjugation_oracle(&chain, &dressing, 1, n_max - 1).unwrap();
            devs.push(built.max_abs_diff(&oracle).unwrap());
        }
        let monotone = devs.windows(2).all(|w| w[1] < w[0]);
        pass &= monotone && devs[3] < 1e-6;
        let label = match dressing {
            DressingSpec::Displacement(_) => "displacement",
            _ => "squeezing",
        };
        detail.push_str(&format!(
            "{label}: {:.1e} -> {:.1e} -> {:.1e} -> {:.1e}; ",
            devs[0], devs[1], devs[2], devs[3]
        ));
    }
    verdict(
        7,
        "dressed Hamiltonian consistency",
        pass,
        detail.trim_end_matches("; "),
    );
}

#[test]
fn acceptance_08_dressed_transfer() {
    // f = x1 through an N = 5 chain in displaced (beta = 0.25) and squeezed
    // (xi = 0.1) backgrounds: truncation loss < 1e-7 at the chosen caps and
    // fidelity >= 1 - 1e-6
    let chain = ChainSpec::engineered(5, 1.0, 0.0, 0.0).unwrap();
    let f = MonomialFunction::parse("x1", 5).unwrap();
    let disp = run_dressed_transfer(
        &chain,
        &DressingSpec::Displacement(Complex64::new(0.25, 0.0)),
        &f,
        5,
        &TransferOptions::default(),
    )
    .unwrap();
    let sq = run_dressed_transfer(
        &chain,
        &DressingSpec::Squeezing(0.1),
        &f,
        6,
        &TransferOptions::default(),
    )
    .unwrap();
    let d_loss = disp.truncation_loss.unwrap();
    let s_loss = sq.truncation_loss.unwrap();
    let pass = d_loss < 1e-7
        && s_loss < 1e-7
        && disp.fidelity >= 1.0 - 1e-6
        && sq.fidelity >= 1.0 - 1e-6;
    verdict(
        8,
        "dressed transfer",
        pass,
        &format!(
            "displaced: fidelity {:.9}, loss {d_loss:.2e} (dim {}); squeezed: fidelity {:.9}, loss {s_loss:.2e} (dim {})",
            disp.fidelity, disp.dimension, sq.fidelity, sq.dimension
        ),
    );
}

#[test]
fn acceptance_09_property_invariants() {
    // compact deterministic re-assertion of the module invariants (the
    // randomized suites live in the properties test target): unitarity,
    // number conservation, signature periodicity, degree-phase law
    let mut detail = String::new();

    // unitarity + number conservation on a repulsive chain
    let chain = ChainSpec::engineered(4, 1.0, 0.2, 0.7).unwrap();
    let basis = Basis::new(4, Sector::TotalAtMost(2)).unwrap();
    let h = build_bose_hubbard(&chain, &basis).unwrap();
    let prop = Propagator::new(&h).unwrap();
    let state = StateVector::random(basis.clone(), 99);
    let evolved = prop.evolve(&state, 0.9).unwrap();
    let norm_dev = (evolved.norm() - 1.0).abs();
    let energy_in = state.expectation(&h).unwrap().re;
    let energy_out = evolved.expectation(&h).unwrap().re;
    let energy_dev = (energy_in - energy_out).abs();
    detail.push_str(&format!("norm dev {norm_dev:.1e}, energy dev {energy_dev:.1e}"));

    // signature periodicity
    let periodic = (1..=16).all(|n| signature(n) == signature(n + 4))
        && (1..=16).all(|n| {
            let r = signature(n);
            (r * r * r * r - Complex64::new(1.0, 0.0)).norm() < 1e-15
        });

    // degree-phase law r^d at N = 6 for d = 1..3
    let chain6 = ChainSpec::engineered(6, 1.0, 0.0, 0.0).unwrap();
    let mut phase_dev = 0.0f64;
    for d in 1..=3u32 {
        let mut exps = vec![0u32; 6];
        exps[0] = d;
        let f = MonomialFunction::monomial(Complex64::new(1.0, 0.0), exps).unwrap();
        let b = Basis::new(6, Sector::TotalAtMost(d)).unwrap();
        let vacuum = StateVector::vacuum(b.clone()).unwrap();
        let prepared = apply_polynomial(&f, &vacuum).unwrap().state;
        let h6 = build_bose_hubbard(&chain6, &b).unwrap();
        let p6 = Propagator::new(&h6).unwrap();
        let arrived = p6.adjoint_evolve(&prepared, chain6.t0()).unwrap();
        let g = mirror_target(&f, 6).unwrap();
        let target = apply_polynomial(&g, &StateVector::vacuum(b).unwrap())
            .unwrap()
            .state;
        let overlap = target.dot(&arrived).unwrap() / target.norm_sq();
        phase_dev = phase_dev.max((overlap - Complex64::new(1.0, 0.0)).norm());
    }
    detail.push_str(&format!(
        ", periodicity {periodic}, degree-phase dev {phase_dev:.1e}"
    ));

    let pass = norm_dev < 1e-10 && energy_dev < 1e-9 && periodic && phase_dev < 1e-9;
    verdict(9, "property invariants", pass, &detail);
}

#[test]
fn acceptance_10_repulsion_limits_two_boson_transfer() {
    // with U = J and f = x1^2 the fidelity must fall strictly below 1; the
    // recorded value is a frozen regression anchor from an independent
    // dense oracle, and the U = 0 control recovers fidelity 1
    let f = MonomialFunction::parse("x1^2", 5).unwrap();
    let interacting = ChainSpec::engineered(5, 1.0, 0.0, 1.0).unwrap();
    let report = run_transfer(
        &interacting,
        &f,
        &Medium::Vacuum,
        &TransferOptions::default(),
    )
    .unwrap();
    let control_chain = ChainSpec::engineered(5, 1.0, 0.0, 0.0).unwrap();
    let control = run_transfer(
        &control_chain,
        &f,
        &Medium::Vacuum,
        &TransferOptions::default(),
    )
    .unwrap();
    const ANCHOR: f64 = 0.21265163636727785;
    let pass = report.fidelity < 1.0
        && (report.fidelity - ANCHOR).abs() < 1e-9
        && (1.0 - control.fidelity).abs() < 1e-9;
    verdict(
        10,
        "two-boson repulsion limit",
        pass,
        &format!(
            "U = J fidelity {:.17} vs anchor {ANCHOR} ; U = 0 control {:.12}",
            report.fidelity, control.fidelity
        ),
    );
}
