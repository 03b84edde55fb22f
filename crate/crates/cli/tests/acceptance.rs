//! End-to-end acceptance suite: one PASS/FAIL line per criterion.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use klap_cli::model::{load_model, write_model};
use klap_core::benchmarks;
use klap_core::klap::{c_of_l, klap, InitStrategy, KlapConfig, KlapProblem, LurePoint};
use klap_core::linalg::{self, kron_lyapunov_oracle, LyapunovSolver, LyapunovStrategy};
use klap_core::lti::{default_popov_grid, h2_distance_sq_quadrature, h2_error_sq};
use klap_core::passivity::{
    check_passive, default_passivity_tolerance, passivity_scale, solve_are, AreKind, VerdictMethod,
};
use klap_core::random::{hurwitz_matrix, normal_matrix, stable_system};
use klap_core::StateSpaceSystem;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Part = fn() -> Result<(), String>;
type Criterion = fn() -> Outcome;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn symmetric(r: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = normal_matrix(r, n, n);
    (&g + g.transpose()) * 0.5
}

fn close(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn criterion_1() -> Outcome {
    let sys = benchmarks::toy(0.0);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let cfg = KlapConfig {
            init: InitStrategy::Random,
            rng_seed: seed,
            ..Default::default()
        };
        let res = klap(&sys, &cfg).map_err(|e| format!("seed {seed}: {e}"))?;
        let c = &res.c_hat;
        ensure(res.converged, || format!("seed {seed} did not converge"))?;
        ensure(close(res.j_final, 0.94, 0.01), || {
            format!("seed {seed}: J = {}", res.j_final)
        })?;
        ensure(close(c[0], 0.46, 0.01) && close(c[1], 0.80, 0.01), || {
            format!("seed {seed}: C_hat = [{}, {}]", c[0], c[1])
        })?;
        worst = worst.max((res.j_final - 0.94).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 1.0, || format!("runtime {secs:.3} s"))?;
    Ok(format!("10 seeds, max |J - 0.94| = {worst:.4}, {secs:.3} s"))
}

fn criterion_2() -> Outcome {
    let sys = benchmarks::toy(0.125);
    let start = Instant::now();
    let cfg = KlapConfig {
        init: InitStrategy::Given(DMatrix::from_column_slice(2, 1, &[-2.0, 0.0])),
        ..Default::default()
    };
    let res = klap(&sys, &cfg).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let eps = cfg.axis_tolerance(&sys);

    let local = &res.stages[0];
    let c = &local.c_hat;
    ensure(close(c[0], 0.0, 0.01) && close(c[1], 1.0, 0.01), || {
        format!("local C_hat = [{}, {}]", c[0], c[1])
    })?;
    let mut eig: Vec<_> = local
        .certificate
        .y_star
        .complex_eigenvalues()
        .iter()
        .copied()
        .collect();
    eig.sort_by(|a, b| a.re.total_cmp(&b.re));
    ensure(
        eig.len() == 2
            && close(eig[0].re, -3.0, 0.01)
            && close(eig[1].re, 3.0, 0.01)
            && eig.iter().all(|z| z.im.abs() <= 0.01),
        || format!("local Y* eigenvalues {eig:?}"),
    )?;
    ensure(local.certificate.max_real > eps, || {
        "local minimum not flagged".into()
    })?;
    ensure(res.restarts >= 1, || "no restart".into())?;

    let c = &res.c_hat;
    ensure(close(c[0], 0.84, 0.01) && close(c[1], 0.34, 0.01), || {
        format!("final C_hat = [{}, {}]", c[0], c[1])
    })?;
    ensure(res.certificate.max_abs_real <= 2e-2, || {
        format!("final max |Re| = {}", res.certificate.max_abs_real)
    })?;
    ensure(secs < 1.0, || format!("runtime {secs:.3} s"))?;
    Ok(format!(
        "local [{:.4}, {:.4}] -> final [{:.4}, {:.4}], max |Re| {:.1e}, {secs:.3} s",
        local.c_hat[0], local.c_hat[1], c[0], c[1], res.certificate.max_abs_real
    ))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let acc = benchmarks::acc(0.125);
    let res = klap(&acc, &KlapConfig::default()).map_err(|e| e.to_string())?;
    ensure(close(res.h2_error, 0.871, 0.005), || {
        format!("D = 1/8: h2 = {}", res.h2_error)
    })?;
    let iters = res.iterations;

    let acc0 = benchmarks::acc(0.0);
    let res0 = klap(&acc0, &KlapConfig::default()).map_err(|e| e.to_string())?;
    ensure(close(res0.h2_error, 1.03, 0.01), || {
        format!("D = 0: h2 = {}", res0.h2_error)
    })?;

    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let cfg = KlapConfig {
            init: InitStrategy::Random,
            rng_seed: seed,
            ..Default::default()
        };
        let r = klap(&acc, &cfg).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(r.h2_error <= 0.875, || {
            format!("seed {seed}: h2 = {}", r.h2_error)
        })?;
        worst = worst.max(r.h2_error);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 5.0, || format!("runtime {secs:.3} s"))?;
    Ok(format!(
        "h2 {:.5} ({iters} iterations), D = 0: {:.5}, random worst {worst:.5}, {secs:.3} s",
        res.h2_error, res0.h2_error
    ))
}

fn criterion_4() -> Outcome {
    let res = klap(&benchmarks::acc(0.125), &KlapConfig::default()).map_err(|e| e.to_string())?;
    let init = res.initialization.ok_or("no Riccati initialization")?;
    ensure(close(init.delta_d, 1.14, 0.05), || {
        format!("delta_D = {}", init.delta_d)
    })?;
    ensure(close(res.initial_h2_error, 1.25, 0.05), || {
        format!("initial h2 = {}", res.initial_h2_error)
    })?;
    Ok(format!(
        "delta_D = {:.4}, initial h2 = {:.4}",
        init.delta_d, res.initial_h2_error
    ))
}

fn fd_gradient(problem: &KlapProblem, l: &DMatrix<f64>) -> Result<DMatrix<f64>, String> {
    let h = 1e-6 * (1.0 + l.norm());
    let mut g = DMatrix::zeros(l.nrows(), l.ncols());
    for i in 0..l.nrows() {
        for j in 0..l.ncols() {
            let (mut lp, mut lm) = (l.clone(), l.clone());
            lp[(i, j)] += h;
            lm[(i, j)] -= h;
            let fp = problem.objective(&lp).map_err(|e| e.to_string())?;
            let fm = problem.objective(&lm).map_err(|e| e.to_string())?;
            g[(i, j)] = (fp - fm) / (2.0 * h);
        }
    }
    Ok(g)
}

fn no_feedthrough(sys: StateSpaceSystem) -> StateSpaceSystem {
    let m = sys.m();
    sys.with_feedthrough(DMatrix::zeros(m, m)).unwrap()
}

fn criterion_5a() -> Result<(), String> {
    let mut r = rng(5001);
    for k in 0..20 {
        let n = r.random_range(1..=8);
        let m = r.random_range(1..=3usize).min(n);
        let mut sys = stable_system(&mut r, n, m, 1.0);
        if k % 2 == 0 {
            sys = no_feedthrough(sys);
        }
        let l = normal_matrix(&mut r, n, m);
        let problem = KlapProblem::new(&sys).map_err(|e| e.to_string())?;
        let grad = problem.evaluate(&l).map_err(|e| e.to_string())?.grad;
        let err = rel_err(&fd_gradient(&problem, &l)?, &grad);
        ensure(err <= 1e-5, || {
            format!("5a instance {k}: relative error {err:.2e}")
        })?;
    }
    Ok(())
}

fn criterion_5b() -> Result<(), String> {
    let mut r = rng(5002);
    for k in 0..100 {
        let n = r.random_range(1..=6);
        let m = r.random_range(1..=2usize).min(n);
        let sys = stable_system(&mut r, n, m, 1.0);
        let sys = sys
            .with_feedthrough(sys.d() + DMatrix::identity(m, m) * 0.01)
            .unwrap();
        let l = normal_matrix(&mut r, n, m) * 10f64.powf(r.random_range(-2.0..2.0));
        let c = c_of_l(&sys, &LurePoint::new(&sys, l).unwrap()).map_err(|e| e.to_string())?;
        let passive = sys.with_output(c).unwrap();
        let scale = passivity_scale(&passive);
        let scan = passive
            .popov_scan(&default_popov_grid(&passive).unwrap())
            .map_err(|e| e.to_string())?;
        ensure(scan.global_min >= -1e-8 * scale, || {
            format!("5b instance {k}: Popov margin {:.3e}", scan.global_min)
        })?;
        let verdict =
            check_passive(&passive, default_passivity_tolerance(&passive)).map_err(|e| e.to_string())?;
        ensure(
            verdict.passive && verdict.method == VerdictMethod::Hamiltonian,
            || format!("5b instance {k}: {verdict:?}"),
        )?;
    }
    Ok(())
}

fn criterion_5c() -> Result<(), String> {
    let mut r = rng(5003);
    for k in 0..50 {
        let n = r.random_range(1..=30);
        let a = hurwitz_matrix(&mut r, n);
        let w = symmetric(&mut r, n);
        let oracle = kron_lyapunov_oracle(&a, &w).map_err(|e| e.to_string())?;
        let x = linalg::solve_lyapunov(&a, &w, LyapunovStrategy::Auto).map_err(|e| e.to_string())?;
        let err = rel_err(&x, &oracle);
        ensure(err <= 1e-9, || {
            format!("5c instance {k} (n = {n}): relative error {err:.2e}")
        })?;

        let d = symmetric(&mut r, n);
        let f = symmetric(&mut r, n);
        let solver = LyapunovSolver::new(&a, LyapunovStrategy::Auto).map_err(|e| e.to_string())?;
        let y = solver.solve(&d).map_err(|e| e.to_string())?;
        let z = solver.solve_transposed(&f).map_err(|e| e.to_string())?;
        let lhs = (d.transpose() * &z).trace();
        let rhs = (f.transpose() * &y).trace();
        let scale = d.norm() * z.norm() + f.norm() * y.norm();
        ensure((lhs - rhs).abs() <= 1e-10 * scale, || {
            format!("5c trace identity {k}: {lhs} vs {rhs}")
        })?;
    }
    Ok(())
}

fn criterion_5d() -> Result<(), String> {
    let mut r = rng(5004);
    for k in 0..50 {
        let n = r.random_range(1..=8);
        let m = r.random_range(1..=3usize).min(n);
        let sys = no_feedthrough(stable_system(&mut r, n, m, 1.0));
        let l = normal_matrix(&mut r, n, m);
        let u = normal_matrix(&mut r, m, m).qr().q();
        let problem = KlapProblem::new(&sys).map_err(|e| e.to_string())?;
        let c = problem.c_of_l(&l).map_err(|e| e.to_string())?;
        let cu = problem.c_of_l(&(&l * &u)).map_err(|e| e.to_string())?;
        let cn = problem.c_of_l(&(-&l)).map_err(|e| e.to_string())?;
        ensure(rel_err(&cu, &c) <= 1e-10 && rel_err(&cn, &c) <= 1e-10, || {
            format!(
                "5d instance {k}: {:.2e}, {:.2e}",
                rel_err(&cu, &c),
                rel_err(&cn, &c)
            )
        })?;
    }
    Ok(())
}

fn criterion_5e() -> Result<(), String> {
    let one = |v: f64| DMatrix::from_element(1, 1, v);
    let scalar = StateSpaceSystem::new(one(-1.0), one(1.0), one(1.0), one(1.0)).unwrap();
    let x = solve_are(&scalar, AreKind::Minimal).map_err(|e| e.to_string())?.x[(0, 0)];
    let exact = 3.0 - 2.0 * 2f64.sqrt();
    ensure((x - exact).abs() <= 1e-10, || format!("5e scalar X_min = {x}"))?;

    let mut r = rng(5005);
    for k in 0..20 {
        let n = r.random_range(1..=8);
        let m = r.random_range(1..=3usize).min(n);
        let sys = stable_system(&mut r, n, m, 1.0);
        let sys = sys
            .with_feedthrough(sys.d() + DMatrix::identity(m, m) * 0.1)
            .unwrap();
        let c = c_of_l(&sys, &LurePoint::new(&sys, normal_matrix(&mut r, n, m)).unwrap()).unwrap();
        let shift = r.random_range(0.05..2.0);
        let sys = sys
            .with_output(c)
            .unwrap()
            .with_feedthrough(sys.d() + DMatrix::identity(m, m) * shift)
            .unwrap();
        let min = solve_are(&sys, AreKind::Minimal).map_err(|e| format!("5e instance {k}: {e}"))?;
        let max = solve_are(&sys, AreKind::Maximal).map_err(|e| format!("5e instance {k}: {e}"))?;
        let gap = linalg::min_symmetric_eigenvalue(&(&max.x - &min.x));
        let scale = min.x.norm().max(max.x.norm()).max(1.0);
        ensure(gap >= -1e-8 * scale, || {
            format!("5e instance {k}: X_max - X_min has eigenvalue {gap:.2e}")
        })?;
    }
    Ok(())
}

fn criterion_5f() -> Result<(), String> {
    let mut r = rng(5006);
    for k in 0..10 {
        let n = r.random_range(1..=6);
        let m = r.random_range(1..=2usize).min(n);
        let sys = stable_system(&mut r, n, m, 1.0);
        let c_hat = normal_matrix(&mut r, m, n);
        let exact = h2_error_sq(&sys, &c_hat).map_err(|e| e.to_string())?;
        let other = sys.with_output(c_hat).unwrap();
        let quad = h2_distance_sq_quadrature(&sys, &other, 20_000).map_err(|e| e.to_string())?;
        ensure((quad - exact).abs() <= 1e-3 * exact, || {
            format!("5f instance {k}: {quad} vs {exact}")
        })?;
    }
    Ok(())
}

fn criterion_5() -> Outcome {
    let parts: [(&str, Part); 6] = [
        ("a", criterion_5a),
        ("b", criterion_5b),
        ("c", criterion_5c),
        ("d", criterion_5d),
        ("e", criterion_5e),
        ("f", criterion_5f),
    ];
    let mut failures = Vec::new();
    for (name, part) in parts {
        if let Err(e) = part() {
            failures.push(format!("{name}: {e}"));
        }
    }
    if failures.is_empty() {
        Ok("gradient, passivity, Lyapunov, invariance, Riccati and quadrature checks".into())
    } else {
        Err(failures.join("; "))
    }
}

fn klap_bin(args: &[&str]) -> Result<i32, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_klap"))
        .args(args)
        .env_remove("KLAP_LOG")
        .output()
        .map_err(|e| e.to_string())?;
    out.status.code().ok_or_else(|| "terminated by signal".into())
}

fn same_bits(a: &StateSpaceSystem, b: &StateSpaceSystem) -> bool {
    let eq = |x: &DMatrix<f64>, y: &DMatrix<f64>| {
        x.shape() == y.shape() && x.iter().zip(y.iter()).all(|(p, q)| p.to_bits() == q.to_bits())
    };
    eq(a.a(), b.a()) && eq(a.b(), b.b()) && eq(a.c(), b.c()) && eq(a.d(), b.d())
}

fn criterion_6() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut r = rng(6000);
    for k in 0..20 {
        let n = r.random_range(1..=8);
        let m = r.random_range(1..=3usize).min(n);
        let mut sys = stable_system(&mut r, n, m, 1.0);
        // awkward values: subnormal, huge, and repeating binary fractions
        let mut c = sys.c().clone();
        c[0] = [5e-324, 1.7976931348623157e308, 0.1 + 0.2, -1.0 / 3.0][k % 4];
        sys = sys.with_output(c).unwrap();
        for ext in ["json", "txt"] {
            let path = dir.path().join(format!("rt{k}.{ext}"));
            write_model(&path, &sys, Some(format!("rt{k}"))).map_err(|e| e.to_string())?;
            let back = load_model(&path).map_err(|e| e.to_string())?;
            ensure(same_bits(&sys, &back), || {
                format!("round trip {k} ({ext}) is not bit-exact")
            })?;
        }
    }

    for k in 0..50u64 {
        let mut r = rng(6100 + k);
        let n = r.random_range(2..=6);
        let m = r.random_range(1..=2usize);
        let scale = [0.0, 0.01, 0.5][k as usize % 3];
        let sys = stable_system(&mut r, n, m, scale);
        let ext = if k % 2 == 0 { "json" } else { "txt" };
        let input = dir.path().join(format!("in{k}.{ext}"));
        let output = dir.path().join(format!("out{k}.{ext}"));
        write_model(&input, &sys, None).map_err(|e| e.to_string())?;
        let seed = k.to_string();
        let code = klap_bin(&[
            "passivate",
            path_str(&input),
            "--out",
            path_str(&output),
            "--seed",
            &seed,
        ])?;
        ensure(code == 0, || {
            format!("passivate run {k} (n = {n}, m = {m}) exited {code}")
        })?;
        let code = klap_bin(&["check", path_str(&output)])?;
        ensure(code == 0, || {
            format!("check of run {k} (n = {n}, m = {m}) exited {code}")
        })?;
    }
    Ok("20 bit-exact round trips in both formats, 50 passivate -> check runs".into())
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, Criterion); 6] = [
        ("1 toy M = 0 from 10 random seeds", criterion_1),
        ("2 toy D = 1/8 restart scenario", criterion_2),
        ("3 ACC benchmark", criterion_3),
        ("4 ACC Riccati initialization", criterion_4),
        ("5 property suite", criterion_5),
        ("6 CLI contract", criterion_6),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                println!("FAIL criterion {name}: {detail}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
