//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use strong_algebra::calculus::neumann_inverse;
use strong_algebra::cli::{run, ExperimentConfig};
use strong_algebra::factorization::{solve_canonical_factorization, verify_factorization, FactorizationOptions};
use strong_algebra::oracles::{finite_section_pair_solve, pointwise_inverse_oracle};
use strong_algebra::validate::{random_element, unit_disk, validate_strong_inequality};
use strong_algebra::wiener::{
    b0_of_epsilon, wiener_invertibility_scan, wiener_left_inverse, LocalizationOptions, PatchOptions, Side,
    WienerElement,
};
use strong_algebra::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn g0() -> Grade {
    Grade::zero()
}

fn fixtures() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn wdist(a: &WienerElement, b: &WienerElement) -> f64 {
    a.sub(b).unwrap().norm(&g0()).unwrap()
}

fn graded_inequality() -> Outcome {
    let germs = InstanceSpec::germs(8, vec![Grade::new(1, 4), Grade::new(1, 2), Grade::integer(1)]);
    let kond = InstanceSpec::kondratiev(2, 3, (0..=4).map(Grade::integer).collect());
    let mut runs: Vec<(InstanceSpec, Grade, Grade)> = Vec::new();
    // the matrix ladder is a single grade; three sizes stand in for three positions
    for n in [2, 3, 4] {
        runs.push((InstanceSpec::matrix(n), g0(), g0()));
    }
    for r in [Grade::new(1, 4), Grade::new(1, 2), Grade::integer(1)] {
        runs.push((germs.clone(), r, r));
    }
    for p in 0..3 {
        runs.push((kond.clone(), Grade::integer(p), Grade::integer(p + 2)));
    }
    let mut worst = 0.0f64;
    let mut all = true;
    for (i, (spec, a, b)) in runs.iter().enumerate() {
        match validate_strong_inequality(spec, a, b, 1000, 100 + i as u64) {
            Ok(r) => {
                all &= r.pass;
                worst = worst.max(r.worst_ratio / r.constant);
            }
            Err(_) => all = false,
        }
    }
    let v = vage_constant(&Grade::integer(0), &Grade::integer(2), 2, 3).unwrap();
    let wallis = (PI / 2.0).sqrt();
    let ladder_const = kond.ladder().constant(&Grade::integer(2), &Grade::integer(0)).unwrap();
    let vage_ok = (v.limit - wallis).abs() < 1e-6 && (ladder_const - wallis).abs() < 1e-6;
    outcome(
        all && vage_ok,
        format!(
            "9 runs x 1000 pairs, worst ratio/A = {worst:.12}; A_{{p+2,p}} = {:.8} (sqrt(pi/2) = {wallis:.8})",
            v.limit
        ),
    )
}

fn certificate_soundness() -> Outcome {
    let specs = [
        InstanceSpec::matrix(3),
        InstanceSpec::germs(8, vec![Grade::new(1, 2), Grade::integer(1)]),
        InstanceSpec::kondratiev(2, 3, vec![Grade::integer(0), Grade::integer(2)]),
    ];
    let mut violations = 0usize;
    let mut calls = 0usize;
    for (i, spec) in specs.iter().enumerate() {
        let alg = Algebra::new(spec.clone()).unwrap();
        let ladder = alg.ladder().clone();
        let alpha = ladder.tracked()[0];
        let beta = ladder.admissible(&alpha);
        let a_const = ladder.constant(&beta, &alpha).unwrap();
        let one = Element::unit(&alg);
        let tol = calculus::default_tol(alg.kind());
        let mut rng = ChaCha8Rng::seed_from_u64(200 + i as u64);
        let mut done = 0;
        while done < 500 {
            let a = random_element(&alg, &mut rng);
            let s = a.norm(&alpha).unwrap() * a_const;
            if s == 0.0 {
                continue;
            }
            let a = a.scaled(c(rng.gen_range(0.01..0.95) / s));
            let Ok(inv) = neumann_inverse(&a, &alpha, &beta, tol) else {
                continue;
            };
            done += 1;
            calls += 1;
            let n = inv.inverse.norm_bound(&beta).unwrap();
            let d = one.sub(&inv.inverse).unwrap().norm_bound(&beta).unwrap();
            if n > inv.bound.bound + 1e-9 || d > inv.distance.bound + 1e-9 {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("{calls} calls over 3 instances, {violations} violations"))
}

fn matrix_inversion_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(300);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(1..=8);
        let alg = Algebra::new(InstanceSpec::matrix(n)).unwrap();
        let m = DMatrix::from_fn(n, n, |_, _| unit_disk(&mut rng));
        let m = &m * c(rng.gen_range(0.01..0.9) / m.clone().singular_values().max());
        let a = Element::from_matrix(&alg, &m).unwrap();
        let inv = neumann_inverse(&a, &g0(), &g0(), 1e-13).unwrap();
        let dense = (DMatrix::identity(n, n) - m).try_inverse().unwrap();
        let err = (inv.inverse.to_matrix().unwrap() - dense).clone().singular_values().max();
        worst = worst.max(err);
    }
    outcome(worst <= 1e-10, format!("200 contractions, n <= 8, worst spectral error {worst:.2e}"))
}

fn trapezoid(eps: f64, t: f64) -> f64 {
    let s = t.abs();
    if s < eps {
        1.0
    } else if s < 2.0 * eps {
        2.0 - s / eps
    } else {
        0.0
    }
}

fn b0_quadrature() -> Outcome {
    let alg = Algebra::new(InstanceSpec::scalar()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(400);
    let n = 32usize;
    let points = 10_000usize;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let vals: Vec<C64> = (-(n as i64)..=n as i64)
            .map(|k| unit_disk(&mut rng) / (1.0 + (k * k) as f64))
            .collect();
        let a = WienerElement::from_scalars(&alg, n, &vals).unwrap();
        let eval = |t: f64| -> C64 {
            vals.iter()
                .enumerate()
                .map(|(i, v)| v * C64::from_polar(1.0, (i as f64 - n as f64) * t))
                .sum()
        };
        let a0 = eval(0.0);
        for eps in [0.2, 0.1, 0.05] {
            let mut s = C64::new(0.0, 0.0);
            for j in 0..points {
                let t = -PI + 2.0 * PI * (j as f64 + 0.5) / points as f64;
                let w = trapezoid(eps, t);
                s += eval(t) * w + a0 * (1.0 - w);
            }
            let quad = s / points as f64;
            let b0 = b0_of_epsilon(&a, eps).unwrap().coeffs()[0];
            worst = worst.max((b0 - quad).norm());
        }
    }
    outcome(worst <= 1e-6, format!("20 elements x 3 radii, worst |b0 - quadrature| = {worst:.2e}"))
}

fn scalar_wiener() -> Outcome {
    let alg = Algebra::new(InstanceSpec::scalar()).unwrap();
    let a = WienerElement::from_scalars(&alg, 1, &[c(0.0), c(2.0), c(1.0)]).unwrap();
    let rep = match wiener_left_inverse(&a, &LocalizationOptions::default(), &PatchOptions::default()) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let certified = !rep.locals.is_empty() && rep.locals.iter().all(|l| l.contraction < 1.0);
    let mut worst = 0.0f64;
    for n in -64i64..=64 {
        let expect = if n >= 0 { (-1f64).powi(n as i32) / 2f64.powi(n as i32 + 1) } else { 0.0 };
        worst = worst.max((rep.inverse.coeff(n).coeffs()[0] - c(expect)).norm());
    }
    let residual = rep.patch.residual;
    outcome(
        certified && worst <= 1e-6 && residual <= 1e-6,
        format!(
            "{} certified locals, worst coefficient error {worst:.2e}, |a'a - 1| <= {residual:.2e}",
            rep.locals.len()
        ),
    )
}

fn random_symbol(alg: &Arc<Algebra>, n: usize, rng: &mut impl Rng, decay: bool) -> WienerElement {
    let d = alg.dim();
    let coeffs: Vec<(i64, Element)> = (-(n as i64)..=n as i64)
        .map(|k| {
            let s = if decay { 1.0 / (1.0 + k.abs() as f64) } else { 1.0 };
            let v = (0..d).map(|_| unit_disk(rng) * s).collect();
            (k, Element::new(alg, v).unwrap())
        })
        .collect();
    WienerElement::from_coeffs(alg, &coeffs).unwrap()
}

fn matrix_wiener() -> Outcome {
    let alg = Algebra::new(InstanceSpec::matrix(2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(600);
    let one = WienerElement::unit(&alg);
    let mut worst_residual = 0.0f64;
    let mut worst_oracle = 0.0f64;
    let mut redraws = 0;
    let mut failures = 0;
    let mut done = 0;
    while done < 20 {
        let cc = random_symbol(&alg, 8, &mut rng, true);
        let a = one.add(&cc.scaled(c(0.2))).unwrap();
        if !wiener_invertibility_scan(&a, 256, Side::Left, 1e-10).unwrap().all_invertible {
            redraws += 1;
            continue;
        }
        done += 1;
        let rep = match wiener_left_inverse(&a, &LocalizationOptions::default(), &PatchOptions::default()) {
            Ok(r) => r,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        worst_residual = worst_residual.max(rep.patch.residual);
        let oracle = pointwise_inverse_oracle(&a, 4096, 64).unwrap();
        worst_oracle = worst_oracle.max(wdist(&rep.inverse, &oracle.inverse));
    }
    outcome(
        failures == 0 && worst_residual <= 1e-6 && worst_oracle <= 1e-5,
        format!(
            "20 symbols ({redraws} singular redrawn), {failures} failures, worst residual {worst_residual:.2e}, \
             worst oracle distance {worst_oracle:.2e}"
        ),
    )
}

fn scalar_factorization() -> Outcome {
    let alg = Algebra::new(InstanceSpec::scalar()).unwrap();
    let a = WienerElement::from_scalars(&alg, 1, &[c(-0.3), c(1.12), c(-0.4)]).unwrap();
    let opts = FactorizationOptions {
        tol: 1e-8,
        ..Default::default()
    };
    let r = match solve_canonical_factorization(&a, &g0(), &g0(), &opts) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("error: {e}")),
    };
    let plus = WienerElement::from_scalars(&alg, 1, &[c(-0.3), c(1.0), c(0.0)]).unwrap();
    let minus = WienerElement::from_scalars(&alg, 1, &[c(0.0), c(1.0), c(-0.4)]).unwrap();
    let err = wdist(&r.a_plus, &plus).max(wdist(&r.a_minus, &minus));

    // least-squares slope of log(increment) against the iteration number,
    // over the part of the log above the rounding floor
    let q = r.log_x.ratio;
    let mut rates = Vec::new();
    let mut steps_ok = true;
    for log in [&r.log_x, &r.log_y] {
        let pts: Vec<(f64, f64)> = log
            .entries
            .iter()
            .filter(|e| e.increment > 1e-12)
            .map(|e| (e.iteration as f64, e.increment.ln()))
            .collect();
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        let (mx, my) = (sx / m, sy / m);
        let (num, den) = pts
            .iter()
            .fold((0.0, 0.0), |(n, d), (x, y)| (n + (x - mx) * (y - my), d + (x - mx) * (x - mx)));
        rates.push((num / den).exp());
        // the stopping rule fires once q/(1-q) * increment < tol/100
        let first = log.entries[0].increment;
        let predicted = ((opts.tol * 1e-2 * (1.0 - q) / (q * first)).ln() / q.ln()).ceil() as usize + 1;
        steps_ok &= log.iterations <= predicted;
    }
    let rate = rates.iter().cloned().fold(0.0, f64::max);
    outcome(
        err <= 1e-8 && rate <= q && steps_ok,
        format!(
            "factor error {err:.2e}, iterations {}/{}, observed rate {rate:.4} <= ratio {q:.2}",
            r.log_x.iterations, r.log_y.iterations
        ),
    )
}

fn matrix_factorization() -> Outcome {
    let alg = Algebra::new(InstanceSpec::matrix(2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    let one = WienerElement::unit(&alg);
    let opts = FactorizationOptions {
        tol: 1e-8,
        ..Default::default()
    };
    let (mut worst_res, mut worst_leak, mut worst_oracle) = (0.0f64, 0.0f64, 0.0f64);
    let mut failures = 0;
    for _ in 0..50 {
        let n = rng.gen_range(1..=3);
        let k = random_symbol(&alg, n, &mut rng, false);
        let k = k.scaled(c(rng.gen_range(0.05..0.5) / k.norm(&g0()).unwrap()));
        let a = one.sub(&k).unwrap();
        let r = match solve_canonical_factorization(&a, &g0(), &g0(), &opts) {
            Ok(r) => r,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        worst_res = worst_res.max(r.residual);
        worst_leak = worst_leak.max(r.membership.max_leakage);
        let (xo, yo) = finite_section_pair_solve(&k, &one, &one, 128).unwrap();
        worst_oracle = worst_oracle.max(wdist(&r.a_plus_inv, &xo)).max(wdist(&r.a_minus_inv, &yo));
    }
    outcome(
        failures == 0 && worst_res <= 1e-8 && worst_leak == 0.0 && worst_oracle <= 1e-7,
        format!(
            "50 symbols, {failures} failures, worst residual {worst_res:.2e}, leakage {worst_leak:.1e}, \
             worst finite-section distance {worst_oracle:.2e}"
        ),
    )
}

fn ordering() -> Outcome {
    let path = fixtures().join("factorize_ordering.config.json");
    let config = ExperimentConfig::load(&path).unwrap();
    let report = run(&config, path.parent().unwrap());
    let v = &report.result["verification"];
    let mp = v["minus_plus_passes"].as_bool().unwrap_or(false);
    let pm = v["plus_minus_passes"].as_bool().unwrap_or(false);

    let a = WienerElement::from_json(&std::fs::read_to_string(fixtures().join("noncommutative_symbol.json")).unwrap())
        .unwrap();
    let r = solve_canonical_factorization(
        &a,
        &g0(),
        &g0(),
        &FactorizationOptions {
            tol: 1e-8,
            ..Default::default()
        },
    )
    .unwrap();
    let swapped = verify_factorization(&a, &r.a_plus, &r.a_minus, &r.a_plus_inv, &r.a_minus_inv, 256, 1e-8).unwrap();
    let exactly_one = mp != pm && swapped.minus_plus_passes != swapped.plus_minus_passes;
    outcome(
        report.verdict == "pass" && mp && exactly_one,
        format!(
            "fixture factorize_ordering: a_- a_+ residual {:.2e}, a_+ a_- residual {:.2e}",
            v["pointwise_minus_plus"].as_f64().unwrap_or(f64::NAN),
            v["pointwise_plus_minus"].as_f64().unwrap_or(f64::NAN)
        ),
    )
}

fn strip_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with("\"timestamp\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut configs: Vec<_> = std::fs::read_dir(fixtures())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(".config.json"))
        .collect();
    configs.sort();
    let mut mismatched = Vec::new();
    for cfg in &configs {
        let task = ExperimentConfig::load(cfg).unwrap().task.unwrap().name();
        let mut outs = Vec::new();
        for i in 0..2 {
            let out = dir.path().join(format!("r{i}.json"));
            Command::new(env!("CARGO_BIN_EXE_strong-algebra"))
                .arg(task)
                .arg("--config")
                .arg(cfg)
                .arg("--out")
                .arg(&out)
                .status()
                .unwrap();
            outs.push(strip_timestamp(&std::fs::read_to_string(&out).unwrap()));
        }
        if outs[0] != outs[1] || outs[0].is_empty() {
            mismatched.push(cfg.file_name().unwrap().to_string_lossy().to_string());
        }
    }
    outcome(
        mismatched.is_empty(),
        format!("{} fixture configs run twice through the binary, mismatches: {mismatched:?}", configs.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("graded inequality suite", graded_inequality),
        ("certificate soundness", certificate_soundness),
        ("matrix inversion oracle", matrix_inversion_oracle),
        ("b0 formula vs quadrature", b0_quadrature),
        ("Wiener inverse, scalar", scalar_wiener),
        ("Wiener inverse, matrix", matrix_wiener),
        ("canonical factorization, scalar", scalar_factorization),
        ("canonical factorization, matrix", matrix_factorization),
        ("ordering disambiguation", ordering),
        ("determinism", determinism),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed in {:.1}s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
