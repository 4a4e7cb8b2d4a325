//! Acceptance suite: every release criterion as one test, each printing a
//! PASS line with the measured figure. Run with
//! `cargo test -p schottky-cli --test acceptance -- --nocapture`.

use std::process::Command;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use schottky::fixtures;
use schottky::group::SchottkyGroup;
use schottky::integrals::{a_period_matrix, default_base_point, period_matrix};
use schottky::moebius::{ComplexPoint, Mat2};
use schottky::quad::{circle_quadrature, ORIENTATION};
use schottky::series::{
    default_probes, layer_norms, Differential, HolomorphicBasis, ThirdKindDifferential,
    Truncation,
};
use schottky::solver::{
    convergence_exponent, newton_solve, FixedPointMultiplierParams, FpCoord, ModuliProblem,
    Part, Parts, ResidualSpec, TargetValue,
};
use schottky::variational::{
    gauge_conjugation_direction, variation_integrand_samples, vary_period_matrix,
    PerturbationDirection,
};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn z(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pass(criterion: u32, detail: String) {
    println!("ACCEPTANCE {criterion:02} PASS: {detail}");
}

fn random_direction(rng: &mut ChaCha8Rng, genus: usize) -> PerturbationDirection {
    let deltas = (0..genus)
        .map(|_| {
            let mut e = [[Complex64::new(0.0, 0.0); 2]; 2];
            for row in &mut e {
                for v in row.iter_mut() {
                    *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
            Mat2 { e }
        })
        .collect();
    PerturbationDirection::new(deltas).unwrap()
}

/// 1. Genus-1 closed form: b11 = i·log μ/(2π) (frozen sign) to 1e-8 for
///    μ ∈ {0.04, 0.05, 0.09}, with the cross-ratio identity as the oracle.
#[test]
fn criterion_01_genus1_closed_form() {
    let mut worst = 0.0_f64;
    for mu in [0.04, 0.05, 0.09] {
        let group = fixtures::genus1(mu).unwrap();
        let basis = HolomorphicBasis::new(&group, Truncation::MaxWordLen(8)).unwrap();
        let z0 = default_base_point(&group);

        // Oracle: the cross ratio of (Sz0, z0; A, B) is the multiplier, so
        // b11 = (normalization)·log(cross ratio) with the frozen branch.
        let s = group.generator(0);
        let sz0 = s.apply(ComplexPoint::Finite(z0)).as_finite().unwrap();
        let cross = ((sz0 - z(1.0, 0.0)) * (z0 - z(-1.0, 0.0)))
            / ((sz0 - z(-1.0, 0.0)) * (z0 - z(1.0, 0.0)));
        assert!((cross - z(mu, 0.0)).norm() < 1e-12);

        let expected = z(0.0, mu.ln() / TWO_PI);
        let b11 = period_matrix(&basis, z0).unwrap().entry(0, 0);
        let err = (b11 - expected).norm();
        assert!(err < 1e-8, "mu = {mu}: b11 = {b11}, expected {expected}, err {err:.3e}");
        worst = worst.max(err);
    }
    pass(1, format!("genus-1 b11 matches i·log(mu)/(2pi) for mu in {{0.04, 0.05, 0.09}}, max error {worst:.3e} < 1e-8"));
}

/// Matrix-valued Richardson central difference of the whole period matrix
/// along `dir`: the independent oracle for criterion 2, evaluating each
/// perturbed group once for all four entries. Step scaling matches the
/// scalar oracle in `schottky::fd`.
fn period_matrix_fd(
    group: &SchottkyGroup,
    dir: &PerturbationDirection,
    len: usize,
    levels: usize,
) -> Vec<Vec<Complex64>> {
    let gen_norm = group
        .generators()
        .iter()
        .map(|g| g.matrix().frobenius_norm().powi(2))
        .sum::<f64>()
        .sqrt();
    let h = 1e-4 * gen_norm / dir.frobenius_norm();

    let eval = |t: f64| -> Vec<Vec<Complex64>> {
        let g = dir.applied_to(group, t).unwrap();
        assert!(g.is_valid());
        let b = HolomorphicBasis::new(&g, Truncation::MaxWordLen(len)).unwrap();
        period_matrix(&b, default_base_point(&g))
            .unwrap()
            .entries()
            .clone()
    };
    let central = |t: f64| -> Vec<Vec<Complex64>> {
        let plus = eval(t);
        let minus = eval(-t);
        plus.iter()
            .zip(&minus)
            .map(|(pr, mr)| {
                pr.iter()
                    .zip(mr)
                    .map(|(p, m)| (p - m) / (2.0 * t))
                    .collect()
            })
            .collect()
    };

    let mut row: Vec<Vec<Vec<Complex64>>> =
        (0..=levels).map(|i| central(h / (1 << i) as f64)).collect();
    for j in 1..=levels {
        let factor = (4.0_f64).powi(j as i32);
        row = (0..row.len() - 1)
            .map(|i| {
                row[i]
                    .iter()
                    .zip(&row[i + 1])
                    .map(|(lo, hi)| {
                        lo.iter()
                            .zip(hi)
                            .map(|(a, b)| (factor * b - a) / (factor - 1.0))
                            .collect()
                    })
                    .collect()
            })
            .collect();
    }
    row.into_iter().next().unwrap()
}

/// 2. Analytic period variations vs Richardson finite differences on the
///    genus-2 fixture: 20 random directions, relative error < 1e-5 on
///    every entry.
#[test]
fn criterion_02_variational_formula_vs_finite_differences() {
    let group = fixtures::genus2().unwrap();
    let len = 8;
    let basis = HolomorphicBasis::new(&group, Truncation::MaxWordLen(len)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);

    let mut worst = 0.0_f64;
    for trial in 0..20 {
        let dir = random_direction(&mut rng, 2);
        let analytic = vary_period_matrix(&basis, &dir, 256).unwrap();
        let fd = period_matrix_fd(&group, &dir, len, 2);
        for (j, s) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let rel = (analytic.entry(j, s) - fd[j][s]).norm() / fd[j][s].norm().max(1e-6);
            assert!(
                rel < 1e-5,
                "trial {trial}, entry ({j},{s}): analytic {} vs FD {} (rel {rel:.3e})",
                analytic.entry(j, s),
                fd[j][s]
            );
            worst = worst.max(rel);
        }
    }
    pass(2, format!("20 random directions, all period-variation entries match FD, max relative error {worst:.3e} < 1e-5"));
}

/// 3. Scaling gauge: δŜ_l = ε·Ŝ_l makes the integrand vanish pointwise
///    (< 1e-13 at every quadrature node) and the variation zero.
#[test]
fn criterion_03_scaling_gauge_pointwise() {
    let group = fixtures::genus2().unwrap();
    let basis = HolomorphicBasis::new(&group, Truncation::MaxWordLen(8)).unwrap();
    let mut worst_sample = 0.0_f64;
    let mut worst_value = 0.0_f64;
    for l in 0..2 {
        for eps in [z(1.0, 0.0), z(-0.6, 1.3)] {
            let dir = PerturbationDirection::scaling(&group, l, eps);
            for (j, s) in [(0, 0), (0, 1), (1, 1)] {
                for circle in 0..2 {
                    let samples = variation_integrand_samples(
                        &basis.differential(j),
                        &basis.differential(s),
                        &dir,
                        circle,
                        256,
                    )
                    .unwrap();
                    for sample in samples {
                        assert!(
                            sample.norm() < 1e-13,
                            "integrand sample {sample} for scaling gauge (l={l}, eps={eps})"
                        );
                        worst_sample = worst_sample.max(sample.norm());
                    }
                }
            }
            let v = vary_period_matrix(&basis, &dir, 256).unwrap();
            worst_value = worst_value.max(v.frobenius_norm());
            assert!(v.frobenius_norm() < 1e-12);
        }
    }
    pass(3, format!("scaling-gauge integrand vanishes pointwise (max node sample {worst_sample:.3e} < 1e-13), variation norm {worst_value:.3e}"));
}

/// 4. Conjugation gauge: commutator directions X·Ŝ_l − Ŝ_l·X for 10 random
///    X leave the period matrix unchanged to 1e-7.
#[test]
fn criterion_04_conjugation_gauge() {
    let group = fixtures::genus2().unwrap();
    let basis =
        HolomorphicBasis::new(&group, Truncation::MaxWordLen(fixtures::GENUS2_WORD_LEN)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0417);
    let mut worst = 0.0_f64;
    for trial in 0..10 {
        let mut e = [[Complex64::new(0.0, 0.0); 2]; 2];
        for row in &mut e {
            for v in row.iter_mut() {
                *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let dir = gauge_conjugation_direction(&group, &Mat2 { e });
        let v = vary_period_matrix(&basis, &dir, 256).unwrap();
        let n = v.frobenius_norm();
        assert!(n < 1e-7, "trial {trial}: conjugation gauge leak {n:.3e}");
        worst = worst.max(n);
    }
    pass(4, format!("10 random conjugation directions leave periods fixed, max ||dB|| {worst:.3e} < 1e-7"));
}

/// 5. Normalization: the clockwise a-period matrix of the holomorphic
///    basis equals the identity to 1e-8.
#[test]
fn criterion_05_a_period_normalization() {
    let group = fixtures::genus2().unwrap();
    let basis = HolomorphicBasis::new(&group, Truncation::MaxWordLen(8)).unwrap();
    let matrix = a_period_matrix(&basis).unwrap();
    let mut worst = 0.0_f64;
    for j in 0..2 {
        for s in 0..2 {
            let expected = if j == s { 1.0 } else { 0.0 };
            let err = (matrix[j][s] - z(expected, 0.0)).norm();
            assert!(err < 1e-8, "a-period ({j},{s}) = {}", matrix[j][s]);
            worst = worst.max(err);
        }
    }
    pass(5, format!("a-period matrix is the identity under the clockwise convention, max deviation {worst:.3e} < 1e-8"));
}

/// 6. Symmetry: |b_js − b_sj| < 1e-7 and |δb_js − δb_sj| < 1e-7 on the
///    genus-2 fixture.
#[test]
fn criterion_06_period_and_variation_symmetry() {
    let group = fixtures::genus2().unwrap();
    let basis = HolomorphicBasis::new(&group, Truncation::MaxWordLen(8)).unwrap();
    let pm = period_matrix(&basis, default_base_point(&group)).unwrap();
    let b_sym = pm.symmetry_residual();
    assert!(b_sym < 1e-7, "period symmetry residual {b_sym:.3e}");

    let mut rng = ChaCha8Rng::seed_from_u64(0x57);
    let mut v_sym = 0.0_f64;
    for _ in 0..5 {
        let dir = random_direction(&mut rng, 2);
        let v = vary_period_matrix(&basis, &dir, 256).unwrap();
        v_sym = v_sym.max(v.symmetry_residual());
    }
    assert!(v_sym < 1e-7, "variation symmetry residual {v_sym:.3e}");
    pass(6, format!("symmetry: |b_js - b_sj| = {b_sym:.3e} < 1e-7, max |db_js - db_sj| = {v_sym:.3e} < 1e-7"));
}

/// 7. Convergence diagnostics: genus-1 layer norms decay geometrically
///    with ratio within 2× of the multiplier, and trapezoid a-periods gain
///    accuracy super-linearly under node doubling
///    (error(2N) < error(N)^1.5 once below 1e-3).
#[test]
fn criterion_07_convergence_diagnostics() {
    // Layer-norm decay on the genus-1 fixture.
    let mu = 0.04;
    let group = fixtures::genus1(mu).unwrap();
    let d = ThirdKindDifferential::new(
        &group,
        ComplexPoint::finite(0.15, 0.4),
        ComplexPoint::finite(-0.2, -0.3),
        Truncation::MaxWordLen(6),
    )
    .unwrap();
    let norms = layer_norms(&d, &default_probes(&group)).unwrap();
    let mut ratio_lo = f64::INFINITY;
    let mut ratio_hi = 0.0_f64;
    for l in 2..norms.len() {
        let ratio = norms[l] / norms[l - 1];
        assert!(
            ratio < 2.0 * mu && ratio > mu / 2.0,
            "layer {l} ratio {ratio} vs multiplier {mu}"
        );
        ratio_lo = ratio_lo.min(ratio);
        ratio_hi = ratio_hi.max(ratio);
    }

    // Trapezoid error decay on an a-period whose integrand has a pole at
    // 1.35 radii from the circle center (slow enough to measure).
    let disk = group.disks()[0].d;
    let pole_z = disk.center + 1.35 * disk.radius;
    let slow = ThirdKindDifferential::new(
        &group,
        ComplexPoint::Finite(pole_z),
        ComplexPoint::finite(0.0, 2.0),
        Truncation::MaxWordLen(8),
    )
    .unwrap();
    let quad_at = |n: usize| -> Complex64 {
        circle_quadrature(&disk, n, ORIENTATION, |u| slow.eval(u)).unwrap()
    };
    let reference = quad_at(4096);
    let errors: Vec<(usize, f64)> = [16usize, 32, 64, 128, 256]
        .into_iter()
        .map(|n| (n, (quad_at(n) - reference).norm()))
        .collect();
    let first_below = errors
        .iter()
        .position(|(_, e)| *e < 1e-3)
        .expect("some level drops below 1e-3");
    assert!(first_below + 1 < errors.len(), "need one more doubling");
    let (n0, e0) = errors[first_below];
    let (n1, e1) = errors[first_below + 1];
    assert_eq!(n1, 2 * n0);
    assert!(
        e1 < e0.powf(1.5),
        "error({n1}) = {e1:.3e} not below error({n0})^1.5 = {:.3e}",
        e0.powf(1.5)
    );

    // Genus-2 sanity at production node counts: 256 → 512 moves a-periods
    // by less than 1e-12.
    let g2 = fixtures::genus2().unwrap();
    let b2 = HolomorphicBasis::new(&g2, Truncation::MaxWordLen(8)).unwrap();
    let mut doubling_change = 0.0_f64;
    for j in 0..2 {
        for k in 0..2 {
            let circle = g2.disks()[k].d;
            let d = b2.differential(j);
            let p256 = circle_quadrature(&circle, 256, ORIENTATION, |u| d.eval(u)).unwrap();
            let p512 = circle_quadrature(&circle, 512, ORIENTATION, |u| d.eval(u)).unwrap();
            doubling_change = doubling_change.max((p512 - p256).norm());
        }
    }
    assert!(doubling_change < 1e-12);

    pass(7, format!(
        "layer ratios in [{ratio_lo:.4}, {ratio_hi:.4}] vs multiplier {mu}; trapezoid error({n1}) = {e1:.3e} < error({n0})^1.5; 256->512 a-period change {doubling_change:.3e} < 1e-12"
    ));
}

/// 8. Newton round trip: from 1%-perturbed genus-2 parameters, recover the
///    fixture period matrix to residual < 1e-8 in ≤ 8 iterations with a
///    measured convergence exponent ≥ 1.8.
#[test]
fn criterion_08_newton_round_trip() {
    let len = 8;
    let group = fixtures::genus2().unwrap();
    let basis = HolomorphicBasis::new(&group, Truncation::MaxWordLen(len)).unwrap();
    let pm = period_matrix(&basis, default_base_point(&group)).unwrap();
    let targets: Vec<(TargetValue, Complex64)> = [(0, 0), (0, 1), (1, 1)]
        .into_iter()
        .map(|(j, s)| (TargetValue::PeriodEntry { j, s }, pm.entry(j, s)))
        .collect();

    let mut triples = fixtures::genus2_triples();
    triples[0].2 *= 1.01;
    triples[1].1 *= 0.99;
    triples[1].2 *= 1.01;
    let parameterization = FixedPointMultiplierParams::new(
        triples,
        fixtures::genus2_d_primes(),
        vec![
            (0, FpCoord::Multiplier, Part::Re),
            (1, FpCoord::Repelling, Part::Re),
            (1, FpCoord::Multiplier, Part::Re),
        ],
    )
    .unwrap();
    let problem = ModuliProblem {
        parameterization,
        residual: ResidualSpec {
            targets,
            parts: Parts::ImagOnly,
            truncation: Truncation::MaxWordLen(len),
            nodes: 256,
        },
    };

    let out = newton_solve(&problem, 8, 1e-8).unwrap();
    assert!(out.trace.converged);
    let steps = out.trace.iterations.len() - 1;
    assert!(steps <= 8, "took {steps} iterations");
    let final_residual = out.trace.iterations.last().unwrap().residual_norm;
    assert!(final_residual < 1e-8);

    let q = convergence_exponent(&out.trace.residual_norms(), 1e-2)
        .expect("trace long enough to fit an exponent");
    assert!(q >= 1.8, "convergence exponent {q:.3}");
    pass(8, format!(
        "round trip recovered the period matrix in {steps} iterations, final residual {final_residual:.3e} < 1e-8, convergence exponent {q:.2} >= 1.8"
    ));
}

/// 9. Determinism: identical config runs produce byte-identical reports
///    with --threads 1 (and, by design, with any thread count).
#[test]
fn criterion_09_byte_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let config = serde_json::json!({
        "schema": "schottky-config/1",
        "genus": 2,
        "generators": [
            {"fixed_points": {"attracting": [-1.6, 0.0], "repelling": [-0.6, 0.0], "multiplier": [0.06, 0.0]}},
            {"fixed_points": {"attracting": [1.6, 0.0], "repelling": [0.6, 0.0], "multiplier": [0.08, 0.0]}}
        ],
        "disks": [
            {"center_d_prime": [-0.6, 0.0], "radius_d_prime": 0.3},
            {"center_d_prime": [0.6, 0.0], "radius_d_prime": 0.3}
        ],
        "settings": {"max_word_len": 6}
    });
    let config_path = dir.path().join("g2.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();

    let run_to = |name: &str, threads: &str| -> Vec<u8> {
        let out_path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_schottky"))
            .args([
                "periods",
                config_path.to_str().unwrap(),
                "--threads",
                threads,
                "--out",
                out_path.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(&out_path).unwrap()
    };

    let a = run_to("a.json", "1");
    let b = run_to("b.json", "1");
    assert_eq!(a, b, "reports differ across identical --threads 1 runs");
    let c = run_to("c.json", "4");
    assert_eq!(a, c, "report depends on the thread count");
    pass(9, format!("periods reports byte-identical across runs ({} bytes), independent of thread count", a.len()));
}

/// 10. Automorphy gluing: for boundary-identified points u ∈ ∂D'_k the
///     residual |eval(S_k u)·S_k'(u) − eval(u)| decreases monotonically
///     over three truncation levels.
#[test]
fn criterion_10_automorphy_gluing() {
    let group = fixtures::genus2().unwrap();
    let mut reports = Vec::new();
    for k in 0..2 {
        let s = group.generator(k);
        let boundary = group.disks()[k].d_prime;
        let points: Vec<Complex64> = [0.3, 1.7, 2.9, 4.4]
            .into_iter()
            .map(|t| boundary.point_at_angle(t))
            .collect();

        let mut residuals = Vec::new();
        for len in [2usize, 4, 6] {
            let basis = HolomorphicBasis::new(&group, Truncation::MaxWordLen(len)).unwrap();
            let mut worst = 0.0_f64;
            for j in 0..2 {
                let d = basis.differential(j);
                for &u in &points {
                    let su = s.apply(ComplexPoint::Finite(u)).as_finite().unwrap();
                    let r = (d.eval(su).unwrap() * s.derivative_at(u) - d.eval(u).unwrap()).norm();
                    worst = worst.max(r);
                }
            }
            residuals.push(worst);
        }
        assert!(
            residuals[0] > residuals[1] && residuals[1] > residuals[2],
            "gluing residuals for S_{} not monotone: {residuals:?}",
            k + 1
        );
        reports.push(format!(
            "S_{}: {:.2e} > {:.2e} > {:.2e}",
            k + 1,
            residuals[0],
            residuals[1],
            residuals[2]
        ));
    }
    pass(10, format!("boundary-gluing residual falls monotonically over word lengths 2, 4, 6 ({})", reports.join("; ")));
}
