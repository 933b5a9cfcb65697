//! Acceptance suite: one test per release criterion, each printing a
//! `PASS criterion N` line. Run with
//! `cargo test -p mltherm --test acceptance -- --nocapture`.

use std::process::Command;
use std::time::Instant;

use mltherm::dataset::stats;
use mltherm::energy::min_energy;
use mltherm::evolution::mixing_experiment;
use mltherm::init_dist::sample;
use mltherm::nn::{
    efficiency_and_classification, mc_nn_initial_energy, Activation, EngineClass, NnInit, NnSpec,
};
use mltherm::verification::run_suite;
use mltherm::{
    asymptotic_temperature, differential_entropy, discrete_entropy_grid, mc_mean_energy,
    temperature_type1, AsymptoticFamily, BaseEnergy, Dataset, EnergyForm, InitDistribution,
    Regularization, SolverOptions,
};

const SQRT_12: f64 = 3.464_101_615_137_754_6;

/// Deterministic dataset built from a seeded parameter draw.
fn random_dataset(seed: u64, n: usize, dim: usize) -> Dataset {
    let cloud = InitDistribution::diagonal_normal(vec![1.5; dim + 1]).unwrap();
    let rows = sample(&cloud, n, seed);
    Dataset::new(
        rows.iter().map(|r| r[..dim].to_vec()).collect(),
        rows.iter().map(|r| r[dim]).collect(),
    )
    .unwrap()
}

#[test]
fn criterion_01_closed_form_vs_monte_carlo() {
    let start = Instant::now();
    let rows = run_suite(0, 100_000, 3).unwrap();
    assert!(rows.len() >= 20, "need at least 20 cases, got {}", rows.len());
    for r in &rows {
        assert!(
            r.pass,
            "{}: closed {} vs mc {} (z = {:?})",
            r.formula_id, r.closed, r.mc, r.z
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "PASS criterion 1: {} closed-form cases within 3 stderr of Monte Carlo ({elapsed:?})",
        rows.len()
    );
}

#[test]
fn criterion_02_exact_temperature_matches_mc_composition() {
    for case in 0..10u64 {
        let d = random_dataset(200 + case, 12, 1);
        for &sigma in &[0.5, 1.0, 5.0] {
            let dist = InitDistribution::diagonal_normal(vec![sigma, sigma]).unwrap();
            let form = EnergyForm::mse();
            let report = temperature_type1(&form, &dist, &d).unwrap();
            let mc = mc_mean_energy(&form, &dist, &d, 100_000, 900 + case).unwrap();
            let ef = report.final_energy.unwrap();
            let s0 = report.entropy.unwrap();
            let t_mc = (mc.estimate - ef) / s0;
            let tol = 3.0 * mc.stderr.unwrap() / s0.abs();
            assert!(
                (report.temperature - t_mc).abs() <= tol,
                "case {case} sigma {sigma}: closed T {} vs mc T {} (tol {tol})",
                report.temperature,
                t_mc
            );
        }
    }
    println!("PASS criterion 2: exact 2D temperature within 3 propagated stderr on 10 datasets x 3 sigmas");
}

#[test]
fn criterion_03_final_energy_correlation_identity() {
    let mut checked = 0;
    let mut seed = 0u64;
    while checked < 100 {
        seed += 1;
        let d = random_dataset(400 + seed, 16, 1);
        let s = stats(&d);
        let Some(rho) = s.corr_2d else { continue };
        let m = min_energy(&EnergyForm::mse(), &d, &SolverOptions::default()).unwrap();
        let identity = (1.0 - rho * rho) * s.label_var;
        assert!(
            (m.energy - identity).abs() <= 1e-10,
            "seed {seed}: least squares {} vs (1-rho^2)Var(Y) {}",
            m.energy,
            identity
        );
        checked += 1;
    }
    println!("PASS criterion 3: least-squares final energy equals (1-rho^2)Var(Y) within 1e-10 on 100 datasets");
}

#[test]
fn criterion_04_temperature_orderings() {
    let d = random_dataset(77, 20, 1);

    // matched systems: uniform box of width 4 sigma runs hotter
    for &sigma in &[10.0, 100.0, 1000.0] {
        let normal = InitDistribution::diagonal_normal(vec![sigma, sigma]).unwrap();
        let uniform = InitDistribution::uniform_box(vec![4.0 * sigma, 4.0 * sigma]).unwrap();
        let t_n = temperature_type1(&EnergyForm::mse(), &normal, &d).unwrap().temperature;
        let t_u = temperature_type1(&EnergyForm::mse(), &uniform, &d).unwrap().temperature;
        assert!(t_u > t_n, "sigma {sigma}: uniform {t_u} <= normal {t_n}");
    }

    // T_MSE/T_MAE grows linearly in sigma: unit log-log slope
    let mae = EnergyForm::plain(BaseEnergy::Mae);
    let mut points = Vec::new();
    for &sigma in &[1e3, 1e4, 1e5, 1e6] {
        let (t_mse, _) =
            asymptotic_temperature(&EnergyForm::mse(), AsymptoticFamily::Normal, &d, sigma, None)
                .unwrap();
        let (t_mae, _) =
            asymptotic_temperature(&mae, AsymptoticFamily::Normal, &d, sigma, None).unwrap();
        points.push((sigma.ln(), (t_mse / t_mae).ln()));
    }
    let slope = (points[3].1 - points[0].1) / (points[3].0 - points[0].0);
    assert!((slope - 1.0).abs() <= 0.05, "log-log slope {slope}");

    // cross entropy dominates at sigma = 10
    let ce = EnergyForm::plain(BaseEnergy::CrossEntropy);
    let (t_ce, _) =
        asymptotic_temperature(&ce, AsymptoticFamily::Normal, &d, 10.0, None).unwrap();
    let (t_mse10, _) =
        asymptotic_temperature(&EnergyForm::mse(), AsymptoticFamily::Normal, &d, 10.0, None)
            .unwrap();
    let (t_mae10, _) = asymptotic_temperature(&mae, AsymptoticFamily::Normal, &d, 10.0, None).unwrap();
    assert!(t_ce > t_mse10 && t_ce > t_mae10);

    println!(
        "PASS criterion 4: uniform > normal at matched scales; T_MSE/T_MAE slope {slope:.4}; CE dominates at sigma 10"
    );
}

#[test]
fn criterion_05_regularization_asymptotics() {
    let d = random_dataset(55, 14, 2);
    let sigma = 1e6;
    let lambda = 0.8;
    let dist = InitDistribution::diagonal_normal(vec![sigma; d.param_dim()]).unwrap();

    let t_plain = temperature_type1(&EnergyForm::mse(), &dist, &d).unwrap().temperature;
    let l1 = EnergyForm::new(BaseEnergy::Mse, Regularization::L1, lambda).unwrap();
    let t_l1 = temperature_type1(&l1, &dist, &d).unwrap().temperature;
    let ratio_l1 = t_l1 / t_plain;
    assert!((ratio_l1 - 1.0).abs() <= 1e-3, "L1 ratio {ratio_l1}");

    let l2 = EnergyForm::new(BaseEnergy::Mse, Regularization::L2, lambda).unwrap();
    let t_l2 = temperature_type1(&l2, &dist, &d).unwrap().temperature;
    let expected = 1.0 + lambda / stats(&d).component_mean_sq_avg();
    let ratio_l2 = t_l2 / t_plain;
    assert!(
        (ratio_l2 - expected).abs() / expected <= 0.01,
        "L2 ratio {ratio_l2} vs 1 + lambda/xsq {expected}"
    );
    println!(
        "PASS criterion 5: at sigma 1e6, T_L1/T = {ratio_l1:.6}; T_L2/T = {ratio_l2:.4} vs {expected:.4}"
    );
}

#[test]
fn criterion_06_network_oracle_agreement() {
    let start = Instant::now();

    let d = Dataset::new(
        vec![vec![0.5, -0.25], vec![-0.75, 1.0], vec![0.1, 0.2], vec![0.9, -0.6]],
        vec![0.5, -0.5, 0.25, 0.0],
    )
    .unwrap();
    let tanh = NnSpec::new(vec![2, 3, 1], Activation::Tanh, NnInit::ConstantSigma(100.0)).unwrap();
    let est = mc_nn_initial_energy(&tanh, &d, 10_000, 6).unwrap();
    let formula = 100.0_f64.powi(2) * 4.0; // sigma^2 (l_{L-1} + 1) l_L
    let rel = (est.estimate - formula).abs() / formula;
    assert!(rel < 0.05, "tanh MC {} vs {formula} ({rel:.3})", est.estimate);

    let d1 = Dataset::new(vec![vec![1.0], vec![-0.5]], vec![0.0, 0.5]).unwrap();
    let mut points = Vec::new();
    for &sigma in &[10.0, 20.0, 40.0] {
        let relu = NnSpec::new(vec![1, 2, 1], Activation::Relu, NnInit::ConstantSigma(sigma)).unwrap();
        let est = mc_nn_initial_energy(&relu, &d1, 10_000, 8).unwrap();
        points.push((sigma.ln(), est.estimate.ln()));
    }
    let slope = (points[2].1 - points[0].1) / (points[2].0 - points[0].0);
    assert!((slope - 4.0).abs() <= 0.2, "relu scaling slope {slope}");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "PASS criterion 6: tanh MC within {:.2}% of formula; relu scaling exponent {slope:.3} ({elapsed:?})",
        rel * 100.0
    );
}

#[test]
fn criterion_07_engine_identities_and_classes() {
    let d = Dataset::new(
        vec![vec![0.4, -0.3], vec![-0.2, 0.8], vec![1.0, 0.1]],
        vec![0.2, -0.4, 0.6],
    )
    .unwrap();

    let tanh = NnSpec::new(vec![2, 4, 3, 1], Activation::Tanh, NnInit::ConstantSigma(200.0)).unwrap();
    let r = efficiency_and_classification(&tanh, &d).unwrap();
    let total_e: f64 = r.delta_e.iter().sum();
    assert_eq!(r.eta, r.delta_e[r.delta_e.len() - 1] / total_e);
    let weighted: f64 = r.local_t.iter().zip(&r.entropy).map(|(t, s)| t * s).sum();
    let total_s: f64 = r.entropy.iter().sum();
    assert_eq!(r.system_t, r.eta * (weighted / total_s));
    assert!(r.eta > 0.0 && r.eta <= 1.0);
    assert_eq!(r.engine_class, EngineClass::FirstType);
    for p in 2..r.local_t.len() {
        let rel = (r.local_t[p] - r.local_t[1]).abs() / r.local_t[1];
        assert!(rel < 1e-12, "tanh hidden temperatures differ: {rel}");
    }

    let relu = NnSpec::new(vec![2, 4, 3, 1], Activation::Relu, NnInit::ConstantSigma(200.0)).unwrap();
    let r2 = efficiency_and_classification(&relu, &d).unwrap();
    assert_eq!(r2.engine_class, EngineClass::SecondType);
    for p in 1..r2.local_t.len() {
        assert!(r2.local_t[p] > r2.local_t[p - 1], "relu temperatures not increasing");
    }
    assert!(r2.eta > 0.0 && r2.eta <= 1.0);
    // second-type identity: T_sys S_tot = eta * total energy = Delta E_L
    let s_tot: f64 = r2.entropy.iter().sum();
    let relu_last = r2.delta_e[r2.delta_e.len() - 1];
    let total2: f64 = r2.delta_e.iter().sum();
    assert!((r2.system_t * s_tot - r2.eta * total2).abs() <= 1e-9 * relu_last);

    println!("PASS criterion 7: eta and T_sys identities exact; tanh first-type with equal hidden T; relu second-type increasing");
}

#[test]
fn criterion_08_grid_entropy_identity() {
    let dist = InitDistribution::diagonal_normal(vec![1.0]).unwrap();
    let delta = 0.01;
    let s_grid = discrete_entropy_grid(&dist, delta, 8.0).unwrap();
    let s_diff = differential_entropy(&dist);
    let err = (s_grid + delta.ln() - s_diff).abs();
    assert!(
        err < 0.01 * s_diff,
        "identity error {err} vs 1% of {s_diff}"
    );
    println!(
        "PASS criterion 8: |S_grid + ln d - S_diff| = {err:.2e} < 1% of {s_diff:.5}"
    );
}

#[test]
fn criterion_09_uniform_substitution_identity() {
    let d = Dataset::new(
        vec![vec![0.7, -0.4], vec![0.3, 0.9]],
        vec![0.1, -0.2],
    )
    .unwrap();
    for activation in [Activation::Tanh, Activation::Relu] {
        let length = 400.0;
        let uniform =
            NnSpec::new(vec![2, 3, 2, 1], activation, NnInit::UniformConstant(length)).unwrap();
        let mapped = NnSpec::new(
            vec![2, 3, 2, 1],
            activation,
            NnInit::ConstantSigma(length / SQRT_12),
        )
        .unwrap();
        let a = efficiency_and_classification(&uniform, &d).unwrap();
        let b = efficiency_and_classification(&mapped, &d).unwrap();
        for (x, y) in a.delta_e.iter().zip(&b.delta_e) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in a.entropy.iter().zip(&b.entropy) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in a.local_t.iter().zip(&b.local_t) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(a.eta.to_bits(), b.eta.to_bits());
        assert_eq!(a.system_t.to_bits(), b.system_t.to_bits());
    }
    println!("PASS criterion 9: uniform-width report bit-identical to the width/sqrt(12) sigma report");
}

#[test]
fn criterion_10_mixing_direction() {
    let a = Dataset::new(vec![vec![2.0], vec![-3.0], vec![1.5]], vec![1.0, -1.0, 0.5]).unwrap();
    let b = Dataset::new(vec![vec![0.5], vec![-0.25], vec![0.8]], vec![0.2, -0.1, 0.4]).unwrap();
    let r = mixing_experiment(&a, &b, &EnergyForm::mse(), AsymptoticFamily::Normal, 1e4).unwrap();
    assert!(r.t_b < r.t_mixed && r.t_mixed < r.t_a, "{r:?}");
    assert!(r.delta_e_a < 0.0 && r.delta_e_b > 0.0, "{r:?}");
    println!(
        "PASS criterion 10: T_B {:.4e} < T_mix {:.4e} < T_A {:.4e}; energy flows A -> B",
        r.t_b, r.t_mixed, r.t_a
    );
}

#[test]
fn criterion_11_cli_determinism() {
    let bin = env!("CARGO_BIN_EXE_mltherm");
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    std::fs::write(&csv, "x1,y\n1,1\n-1,-1\n2,1.5\n").unwrap();
    let csv_b = dir.path().join("b.csv");
    std::fs::write(&csv_b, "x1,y\n0.5,0.2\n-0.25,0.1\n").unwrap();
    let net = dir.path().join("net.json");
    std::fs::write(
        &net,
        "{\"layers\": [1, 3, 1], \"activation\": \"relu\", \"init\": {\"kind\": \"constant-sigma\", \"sigma\": 20.0}}\n",
    )
    .unwrap();

    let csv_s = csv.to_str().unwrap();
    let csv_b_s = csv_b.to_str().unwrap();
    let net_s = net.to_str().unwrap();
    let invocations: Vec<Vec<&str>> = vec![
        vec!["analyze", "--data", csv_s, "--label", "y", "--energy", "mse", "--init", "normal", "--sigma", "1,1"],
        vec!["analyze", "--data", csv_s, "--label", "y", "--energy", "mae", "--init", "uniform", "--length", "3", "--samples", "20000", "--seed", "5"],
        vec!["verify", "--seed", "7", "--samples", "20000"],
        vec!["nn", "--spec", net_s, "--data", csv_s, "--label", "y", "--mc-samples", "3000", "--seed", "2"],
        vec!["shift", "--data", csv_s, "--data", csv_b_s, "--label", "y", "--energy", "mse", "--init", "normal", "--sigma", "1", "--seed", "3"],
        vec!["mix", "--data", csv_s, "--data", csv_b_s, "--label", "y", "--energy", "mse", "--init", "normal", "--scale", "1e4"],
        vec!["entropy-demo"],
    ];
    for args in &invocations {
        let run = |threads: &str| {
            Command::new(bin)
                .args(args)
                .env("MLTHERM_THREADS", threads)
                .env("RUST_LOG", "error")
                .output()
                .unwrap()
        };
        let first = run("2");
        let second = run("4");
        assert!(
            first.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&first.stderr)
        );
        assert_eq!(
            first.stdout, second.stdout,
            "stdout differs for {args:?}"
        );
        assert_eq!(first.status.code(), second.status.code());
    }
    println!(
        "PASS criterion 11: {} CLI invocations byte-identical across repeat runs and thread counts",
        invocations.len()
    );
}
