//! Closed-form free fermions against exact diagonalisation, and dense against
//! Krylov, on the same chains.

use leeyang::ed::{dense_eig, EdSolver, SolverConfig};
use leeyang::free_fermion::{FermionParity, XyChain};
use leeyang::model::{build_hamiltonian, embed_sector_vector, ComplexField, LinearOperator, ModelSpec, SectorLabel};
use leeyang::scan::{state_fidelity, EdGroundSolver, FreeFermionSolver, GroundSolver};
use leeyang::{Complex64, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_field(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(2.0 * rng.random::<f64>().sqrt(), rng.random_range(0.0..std::f64::consts::TAU))
}

#[test]
fn free_fermions_match_ed_on_sectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut worst_e, mut worst_f) = (0.0f64, 0.0f64);
    for length in [4, 6, 8] {
        for gamma in [0.5, 0.8, 1.0] {
            let spec = ModelSpec::xy(length, gamma);
            let ff = FreeFermionSolver::new(&spec).unwrap();
            let ed = EdGroundSolver::new(&spec, SolverConfig::dense()).unwrap();
            let mut done = 0;
            while done < 20 {
                let (h, h2) = (random_field(&mut rng), random_field(&mut rng));
                let (a, a2) = match (ff.solve(h, None), ff.solve(h2, None)) {
                    (Ok(a), Ok(a2)) => (a, a2),
                    (Err(Error::ExceptionalPoint { .. }), _) | (_, Err(Error::ExceptionalPoint { .. })) => continue,
                    (Err(e), _) | (_, Err(e)) => panic!("{e}"),
                };
                let (b, b2) = (ed.solve(h, None).unwrap(), ed.solve(h2, None).unwrap());
                for i in 0..2 {
                    assert_eq!(a.0[i].sector, b.0[i].sector);
                    worst_e = worst_e.max((a.0[i].energy - b.0[i].energy).norm());
                    let fa = state_fidelity(&a.0[i], &a2.0[i]).unwrap();
                    let fb = state_fidelity(&b.0[i], &b2.0[i]).unwrap();
                    worst_f = worst_f.max((fa - fb).abs());
                }
                done += 1;
            }
        }
    }
    assert!(worst_e <= 1e-8, "energy deviation {worst_e:e}");
    assert!(worst_f <= 1e-6, "fidelity deviation {worst_f:e}");
}

#[test]
fn xy_ground_energy_against_full_dense() {
    let h = c(0.5, 0.3);
    let chain = XyChain::new(6, 0.8).unwrap();
    let full = dense_eig(&build_hamiltonian(&ModelSpec::xy(6, 0.8), ComplexField(h)).unwrap(), 4096).unwrap();
    assert!((chain.ground(h).unwrap().energy - full[0].energy).norm() <= 1e-8);

    // Ising at h = 0, L = 4: −2(ε_{π/4} + ε_{3π/4}) with ε_k = 1.
    let ising = XyChain::new(4, 1.0).unwrap();
    let e = ising.ground_energy(c(0.0, 0.0), FermionParity::Even).unwrap();
    let dense = dense_eig(&build_hamiltonian(&ModelSpec::xy(4, 1.0), ComplexField::cartesian(0.0, 0.0)).unwrap(), 64).unwrap();
    assert!((e - c(-4.0, 0.0)).norm() <= 1e-12);
    assert!((dense[0].energy - e).norm() <= 1e-10);
}

#[test]
fn sector_minimum_is_global_ground() {
    let spec = ModelSpec::xy(6, 0.8);
    let solver = EdSolver::new(&spec, SolverConfig::dense()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let h = ComplexField(random_field(&mut rng));
        let full = dense_eig(&build_hamiltonian(&spec, h).unwrap(), 4096).unwrap();
        match solver.global_ground(h) {
            Ok(g) => assert!((g.energy() - full[0].energy).norm() <= 1e-9),
            Err(Error::Crossing(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn fidelity_against_dense_right_eigenvectors() {
    let (h, h2) = (c(0.4, 0.2), c(0.4, -0.2));
    let spec = ModelSpec::xy(6, 0.8);
    let chain = XyChain::new(6, 0.8).unwrap();
    let full = |h: Complex64| {
        let pairs = dense_eig(&build_hamiltonian(&spec, ComplexField(h)).unwrap(), 4096).unwrap();
        pairs.into_iter().next().unwrap().vector
    };
    let (a, b) = (full(h), full(h2));
    let dot: Complex64 = a.iter().zip(&b).map(|(x, y)| y.conj() * x).sum();
    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let dense = dot.norm() / (norm(&a) * norm(&b));
    let ff = chain.fidelity(h, h2).unwrap();
    assert!((dense - ff).abs() <= 1e-8, "{dense} vs {ff}");
}

#[test]
fn clock_two_sites_at_zero_field() {
    let spec = ModelSpec::clock3(2);
    let m = build_hamiltonian(&spec, ComplexField::cartesian(0.0, 0.0)).unwrap();
    assert_eq!(m.dim(), 9);
    let e = dense_eig(&m, 16).unwrap();
    assert!((e[0].energy - c(-4.0, 0.0)).norm() <= 1e-12);
}

#[test]
fn clock_krylov_sector_against_dense() {
    let spec = ModelSpec::clock3(8);
    let h = ComplexField::cartesian(0.5, 0.0);
    let krylov = EdSolver::new(&spec, SolverConfig::krylov()).unwrap();
    let dense = EdSolver::new(&spec, SolverConfig::dense()).unwrap();
    let a = krylov.sector_ground(h, SectorLabel(0)).unwrap();
    let b = dense.sector_ground(h, SectorLabel(0)).unwrap();
    assert!((a.energy() - b.energy()).norm() <= 1e-8, "{} vs {}", a.energy(), b.energy());
}

#[test]
fn sector_states_are_orthogonal_in_the_full_space() {
    let spec = ModelSpec::xxz(6, -1.0, 2.0);
    let solver = EdSolver::new(&spec, SolverConfig::dense()).unwrap();
    let h = ComplexField::cartesian(0.7, 0.4);
    let [a, b] = solver.competing_grounds(h, [None, None]).unwrap();
    let va = embed_sector_vector(solver.basis(a.sector).unwrap(), &a.pair.vector).unwrap();
    let vb = embed_sector_vector(solver.basis(b.sector).unwrap(), &b.pair.vector).unwrap();
    let dot: Complex64 = va.iter().zip(&vb).map(|(x, y)| x.conj() * y).sum();
    assert!(dot.norm() <= 1e-12);
}
