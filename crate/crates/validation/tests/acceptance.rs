//! End-to-end acceptance run. One line per criterion; the process fails if
//! any criterion fails. Pass criterion numbers to run a subset, e.g.
//! `cargo test --test acceptance -- 3 5`.

use std::f64::consts::{PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use leeyang::ed::{EdSolver, SolverConfig};
use leeyang::experiment::{cmd_fss, cmd_scan, ExperimentConfig, RunSummary};
use leeyang::free_fermion::{dispersion, FermionParity, XyChain};
use leeyang::model::{build_hamiltonian, build_projector, build_symmetry_operator, ComplexField, ModelSpec, SectorLabel, SparseOperator};
use leeyang::scaling::{fit_fss, Component, FssPoint};
use leeyang::scan::{
    detect_circle_zeros, scan_circle, scan_grid, solver_for, state_fidelity, Backend, EdGroundSolver, FidelityMode,
    FreeFermionSolver, GridSpec, GroundSolver, ScanOptions,
};
use leeyang::{Complex64, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String)>;

fn recipe(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../recipes").join(name);
    ExperimentConfig::from_path(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn random_field(rng: &mut ChaCha8Rng, max_modulus: f64) -> Complex64 {
    Complex64::from_polar(max_modulus * rng.random::<f64>().sqrt(), rng.random_range(0.0..TAU))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut de, mut df, mut skipped) = (0.0f64, 0.0f64, 0);
    for length in [4, 6, 8] {
        for gamma in [0.5, 0.8, 1.0] {
            let spec = ModelSpec::xy(length, gamma);
            let ff = FreeFermionSolver::new(&spec)?;
            let ed = EdGroundSolver::new(&spec, SolverConfig::dense())?;
            let mut done = 0;
            while done < 20 {
                let h = random_field(&mut rng, 2.0);
                let h2 = h + random_field(&mut rng, 0.3);
                let (a, a2) = match (ff.solve(h, None), ff.solve(h2, None)) {
                    (Ok(a), Ok(a2)) => (a, a2),
                    (Err(Error::ExceptionalPoint { .. }), _) | (_, Err(Error::ExceptionalPoint { .. })) => {
                        skipped += 1;
                        continue;
                    }
                    (Err(e), _) | (_, Err(e)) => return Err(e),
                };
                let (b, b2) = (ed.solve(h, None)?, ed.solve(h2, None)?);
                for i in 0..2 {
                    de = de.max((a.0[i].energy - b.0[i].energy).norm());
                    df = df.max((state_fidelity(&a.0[i], &a2.0[i])? - state_fidelity(&b.0[i], &b2.0[i])?).abs());
                }
                done += 1;
            }
        }
    }
    Ok((
        de <= 1e-8 && df <= 1e-6,
        format!("max |ΔE| = {de:.1e}, max |ΔF| = {df:.1e} over 180 fields ({skipped} exceptional draws redrawn)"),
    ))
}

fn fss_run(config: &ExperimentConfig) -> Result<leeyang::experiment::FssResult> {
    let dir = tempfile::tempdir()?;
    match cmd_fss(config, dir.path())?.summary {
        RunSummary::Fss(f) => Ok(f),
        _ => unreachable!("fss config"),
    }
}

fn xy_criticality() -> Outcome {
    let f = fss_run(&recipe("fig1b_xy_fss.toml"))?;
    let ok = (f.re.h_c - 1.005).abs() <= 0.01 && (f.re.nu - 1.0).abs() <= 0.05 && f.im.h_c.abs() <= 0.02;
    let mut detail = format!(
        "Re: h_c = {:.4}, nu = {:.3}{}; Im: h_c = {:.4}, nu = {:.3}",
        f.re.h_c,
        f.re.nu,
        if f.re.nu_at_bound { " (at bound)" } else { "" },
        f.im.h_c,
        f.im.nu
    );
    if let Some(j) = &f.joint {
        detail.push_str(&format!("; shared-nu fit: h_c = {:.4}{:+.4}i, nu = {:.3}", j.h_c_re, j.h_c_im, j.nu));
    }
    Ok((ok, detail))
}

fn circle_edges(config: &ExperimentConfig) -> Result<Vec<(f64, usize, f64, bool)>> {
    let dir = tempfile::tempdir()?;
    let RunSummary::Circle(results) = cmd_scan(config, dir.path())?.summary else { unreachable!("circle config") };
    Ok(results
        .iter()
        .map(|r| {
            let (ratio, edge) = r.edge.as_ref().map_or((f64::NAN, false), |e| (e.uniformity_ratio, e.edge_detected));
            (r.scan.g, r.zeros.len(), ratio, edge)
        })
        .collect())
}

fn describe(rows: &[(f64, usize, f64, bool)]) -> String {
    rows.iter()
        .map(|(g, n, ratio, edge)| format!("g = {g}: {n} zeros, ratio {ratio:.2}, edge {edge}"))
        .collect::<Vec<_>>()
        .join("; ")
}

fn xy_circles() -> Outcome {
    let rows = circle_edges(&recipe("fig1cd_xy_circle.toml"))?;
    let [(_, _, r0, e0), (_, _, r1, e1)] = rows[..] else { unreachable!() };
    Ok((r0 <= 1.5 && !e0 && e1 && r1 > 2.0, describe(&rows)))
}

fn xxz_xyz_circles() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, label) in [("fig2ab_xxz_circle.toml", "XXZ"), ("fig2cd_xyz_circle.toml", "XYZ")] {
        let rows = circle_edges(&recipe(name))?;
        ok &= !rows[0].3 && rows[1].3;
        parts.push(format!("{label} {}", describe(&rows)));
    }
    Ok((ok, parts.join(" | ")))
}

fn clock_sectors() -> Outcome {
    let solver = EdSolver::new(&ModelSpec::clock3(8), SolverConfig::default())?;
    let (mut worst, mut signs) = (0.0f64, Vec::new());
    for i in 0..=32 {
        let h = ComplexField::polar(0.5, PI * i as f64 / 32.0);
        let e: Vec<Complex64> = (0..3)
            .map(|q| solver.sector_ground(h, SectorLabel(q)).map(|g| g.energy()))
            .collect::<Result<_>>()?;
        worst = worst.max((e[1] - e[2]).norm());
        signs.push((e[0].re - e[1].re).signum());
    }
    let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    Ok((
        worst <= 1e-8 && changes >= 1,
        format!("max |E(q=1) − E(q=2)| = {worst:.1e}; Re E(q=0) − Re E(q=1) changes sign {changes} times on [0, π]"),
    ))
}

fn clock_transition_point() -> Outcome {
    let dir = tempfile::tempdir()?;
    let RunSummary::Grid(g) = cmd_scan(&recipe("fig4a_clock_plane.toml"), dir.path())?.summary else { unreachable!() };
    let Some(hl) = g.h_l else { return Ok((false, "no zeros in the window".into())) };
    let ok = (hl.h.re - 1.0238).abs() <= 0.003;
    Ok((ok, format!("h_L = {:.6}{:+.6}i ({:?}, {} zeros on the grid)", hl.h.re, hl.h.im, hl.method, g.plane.zeros.len())))
}

fn clock_scaling() -> Outcome {
    let f = fss_run(&recipe("fig4b_clock_fss.toml"))?;
    let ok = (f.re.h_c - 1.006).abs() <= 0.05 && (f.re.nu - 0.833).abs() <= 0.1;
    let mut detail = format!(
        "L = 6..12, Re: h_c = {:.4}, nu = {:.3}{}; Im: h_c = {:.4}, nu = {:.3}",
        f.re.h_c,
        f.re.nu,
        if f.re.nu_at_bound { " (at bound)" } else { "" },
        f.im.h_c,
        f.im.nu
    );
    if let Some(j) = &f.joint {
        detail.push_str(&format!("; shared-nu fit: h_c = {:.4}{:+.4}i, nu = {:.3}", j.h_c_re, j.h_c_im, j.nu));
    }
    Ok((ok, detail))
}

fn clock_zero_count() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for length in [6, 8, 10] {
        let mut config = recipe("fig4cd_clock_circle.toml");
        config.model.length = length;
        for (g, n, _, _) in circle_edges(&config)? {
            ok &= n == 2 * length;
            parts.push(format!("L = {length}, g = {g}: {n}"));
        }
    }
    Ok((ok, parts.join("; ")))
}

fn max_commutator(a: &SparseOperator, b: &SparseOperator) -> Result<f64> {
    Ok(a.matmul(b)?.sub(&b.matmul(a)?)?.max_abs())
}

fn property_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = Vec::new();
    let specs = [
        ModelSpec::xy(6, 0.8),
        ModelSpec::xxz(6, -1.0, 2.0),
        ModelSpec::xyz(5, -1.0, -0.5, 2.0),
        ModelSpec::clock3(5),
    ];

    let mut worst = 0.0f64;
    for spec in &specs {
        let dim = spec.dimension()?;
        let ps: Vec<SparseOperator> = spec.sectors().into_iter().map(|q| build_projector(spec, q)).collect::<Result<_>>()?;
        let mut sum = SparseOperator::from_triplets(dim, vec![]);
        for (i, p) in ps.iter().enumerate() {
            worst = worst.max(p.matmul(p)?.sub(p)?.max_abs());
            for p2 in &ps[i + 1..] {
                worst = worst.max(p.matmul(p2)?.max_abs());
            }
            sum = sum.add(p)?;
        }
        worst = worst.max(sum.sub(&SparseOperator::identity(dim))?.max_abs());
    }
    if worst > 1e-12 {
        failures.push(format!("projector algebra {worst:.1e}"));
    }

    let mut worst = 0.0f64;
    for spec in &specs {
        let s = build_symmetry_operator(spec)?;
        for _ in 0..4 {
            worst = worst.max(max_commutator(&build_hamiltonian(spec, ComplexField(random_field(&mut rng, 2.0)))?, &s)?);
        }
    }
    if worst > 1e-12 {
        failures.push(format!("commutation {worst:.1e}"));
    }

    let options = ScanOptions::default();
    for spec in [ModelSpec::xy(8, 0.8), ModelSpec::xxz(6, -1.0, 2.0)] {
        let solver = solver_for(&spec, Backend::Auto, SolverConfig::dense())?;
        let upper = GridSpec { re_range: [0.2, 1.4], im_range: [0.01, 1.5], n_re: 5, n_im: 40 };
        let lower = GridSpec { im_range: [-1.5, -0.01], ..upper };
        let mut up: Vec<Complex64> = scan_grid(solver.as_ref(), &upper, &options)?.zeros.zeros.iter().map(|z| z.h).collect();
        let mut down: Vec<Complex64> =
            scan_grid(solver.as_ref(), &lower, &options)?.zeros.zeros.iter().map(|z| z.h.conj()).collect();
        let key = |z: &Complex64| (z.re.to_bits(), (z.im * 1e6).round() as i64);
        up.sort_by_key(key);
        down.sort_by_key(key);
        let matched = up.len() == down.len() && up.iter().zip(&down).all(|(a, b)| (a - b).norm() <= 1e-8);
        if up.is_empty() || !matched {
            failures.push(format!("conjugation symmetry of {:?}", spec.kind));
        }
    }

    let (mut self_dev, mut herm_dev) = (0.0f64, 0.0f64);
    for _ in 0..40 {
        let length = 2 * rng.random_range(2..=12);
        let gamma = rng.random_range(0.05..=1.0);
        let chain = XyChain::new(length, gamma)?;
        let h = random_field(&mut rng, 2.0);
        let (x, y) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        for parity in FermionParity::both() {
            if let Ok(f) = chain.sector_fidelity(h, h, parity) {
                self_dev = self_dev.max((f - 1.0).abs());
            }
            for k in chain.grid(parity).paired() {
                if let Ok(eps) = dispersion(k, Complex64::new(x, 0.0), gamma) {
                    herm_dev = herm_dev.max(eps.im.abs()).max((-eps.re).max(0.0));
                }
            }
            if let Ok(f) = chain.sector_fidelity(Complex64::new(x, 0.0), Complex64::new(y, 0.0), parity) {
                herm_dev = herm_dev.max((f - 1.0).max(0.0)).max((-f).max(0.0));
            }
        }
    }
    if self_dev > 1e-12 {
        failures.push(format!("F(h, h) deviates by {self_dev:.1e}"));
    }
    if herm_dev > 1e-12 {
        failures.push(format!("Hermitian limit deviates by {herm_dev:.1e}"));
    }

    let mut fit_dev = 0.0f64;
    for _ in 0..20 {
        let (h_c, nu) = (rng.random_range(0.5..1.5), rng.random_range(0.5..2.0));
        let a = rng.random_range(0.1..2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        let pts: Vec<FssPoint> =
            (0..6).map(|i| 6 + 2 * i).map(|l| FssPoint::new(l, h_c + a * (l as f64).powf(-1.0 / nu))).collect();
        let fit = fit_fss(&pts, Component::Re)?;
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
        fit_dev = fit_dev.max(rel(fit.h_c, h_c)).max(rel(fit.a, a)).max(rel(fit.nu, nu));
    }
    if fit_dev > 1e-6 {
        failures.push(format!("fit recovery {fit_dev:.1e}"));
    }

    let mut res_dev = 0.0f64;
    for (spec, g) in [(ModelSpec::xy(12, 0.8), 0.7), (ModelSpec::xy(12, 0.8), 1.5), (ModelSpec::xxz(6, -1.0, 2.0), 0.9)] {
        let solver = solver_for(&spec, Backend::Auto, SolverConfig::default())?;
        let n = 8 * spec.length;
        let run = |n: usize| -> Result<Vec<f64>> {
            let scan = scan_circle(solver.as_ref(), g, n, FidelityMode::Consecutive, &options)?;
            Ok(detect_circle_zeros(solver.as_ref(), &scan, &options)?.zeros.iter().filter_map(|z| z.theta).collect())
        };
        let (a, b) = (run(n)?, run(2 * n)?);
        if a.len() != b.len() {
            res_dev = f64::INFINITY;
        } else {
            res_dev = a.iter().zip(&b).fold(res_dev, |m, (x, y)| m.max((x - y).abs()));
        }
    }
    if res_dev > 1e-6 {
        failures.push(format!("resolution invariance {res_dev:.1e}"));
    }

    let ok = failures.is_empty();
    let detail = if ok {
        "projectors, commutation, conjugation symmetry, F(h, h) = 1, Hermitian limit, fit recovery, resolution invariance".to_string()
    } else {
        failures.join("; ")
    };
    Ok((ok, detail))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("free fermion vs ED", oracle_equivalence),
        ("XY criticality", xy_criticality),
        ("XY circle structure", xy_circles),
        ("XXZ/XYZ circle structure", xxz_xyz_circles),
        ("clock sector degeneracy", clock_sectors),
        ("clock L = 10 transition point", clock_transition_point),
        ("clock finite-size scaling", clock_scaling),
        ("clock zero count", clock_zero_count),
        ("property suite", property_suite),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let number = i + 1;
        if !selected.is_empty() && !selected.contains(&number) {
            continue;
        }
        let start = Instant::now();
        let (passed, detail) = match catch_unwind(AssertUnwindSafe(run)) {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".to_string()),
        };
        if !passed {
            failed += 1;
        }
        println!(
            "criterion {number} {}  {name}: {detail}  [{:.1}s]",
            if passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
