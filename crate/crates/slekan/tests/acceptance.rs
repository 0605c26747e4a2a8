//! Acceptance gate: ten end-to-end checks covering the synthetic benchmarks,
//! the analytics oracles, calibration, the hybrid pipeline, the regime
//! contrast, determinism, and the runtime budget. Each check prints a single
//! `acceptance NN <name>: PASS|FAIL` line.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slekan::calibrate::{calibrate_sle, sle_stress_prediction, CalibrationConfig};
use slekan::cli::{cmd_regime, run_synth_regime, RunConfig, SynthRow};
use slekan::sle::{self, SleParams};
use slekan::spline::{KnotGrid, SplineMode, SplineModel};
use slekan::train::{composite_loss, Dataset, DeformationMode, LossWeights};
use std::path::PathBuf;
use std::sync::OnceLock;

const BETAS: [f64; 4] = [0.5, 1.0, 5.0, 10.0];

fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn synth_rows() -> &'static Vec<SynthRow> {
    static ROWS: OnceLock<Vec<SynthRow>> = OnceLock::new();
    ROWS.get_or_init(|| {
        let config = RunConfig::default();
        BETAS
            .iter()
            .map(|&b| run_synth_regime(b, &config).unwrap().0)
            .collect()
    })
}

fn gate(number: u32, name: &str, ok: bool) {
    println!(
        "acceptance {number:02} {name}: {}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "acceptance {number:02} {name} failed");
}

/// First iteration at which the loss history is within 5% of its final value.
fn plateau_iteration(history: &[f64]) -> usize {
    let last = *history.last().unwrap();
    history
        .iter()
        .position(|&l| l <= 1.05 * last)
        .unwrap_or(history.len())
}

#[test]
fn acceptance_01_synthetic_moderate() {
    let rows = synth_rows();
    let mut ok = true;
    for row in rows.iter().filter(|r| r.beta <= 1.0) {
        ok &= row.metrics.r_squared >= 0.999 && row.metrics.rmse <= 5e-3;
    }
    gate(1, "synthetic moderate regimes", ok);
}

#[test]
fn acceptance_02_synthetic_strong() {
    let config = RunConfig::default();
    let mut ok = true;
    for row in synth_rows().iter().filter(|r| r.beta >= 5.0) {
        let floor = if row.beta >= 10.0 { 0.98 } else { 0.99 };
        ok &= row.metrics.r_squared >= floor;

        // Errors must concentrate near tau = 0: outside the transition
        // region |tau| <= 2/beta the worst error is at most half the
        // global worst error.
        let params = SleParams::new(config.synth_alpha, row.beta, 1.0).unwrap();
        let hi = config.synth_range_factor / row.beta;
        let n = config.eval_samples;
        let mut max_global = 0.0f64;
        let mut max_outside = 0.0f64;
        for i in 0..n {
            let tau = -hi + 2.0 * hi * i as f64 / (n - 1) as f64;
            let err = (row.model.predict(tau).unwrap()
                - sle::strain_from_stress(&params, tau).unwrap())
            .abs();
            max_global = max_global.max(err);
            if tau.abs() > 2.0 / row.beta {
                max_outside = max_outside.max(err);
            }
        }
        ok &= max_outside <= 0.5 * max_global;
    }
    gate(2, "synthetic strong regimes", ok);
}

#[test]
fn acceptance_03_admissibility() {
    let mut ok = true;
    for row in synth_rows() {
        let limit = 1.0 / row.beta; // E = 1 in the synthetic protocol
                                    // (a) exact odd symmetry.
        for i in 0..41 {
            let tau = -12.0 / row.beta + i as f64 * (24.0 / row.beta) / 40.0;
            ok &= row.model.predict(-tau).unwrap() == -row.model.predict(tau).unwrap();
        }
        // (b) all post-projection slopes are non-negative.
        let c = row.model.coefficients();
        ok &= c.windows(2).all(|w| w[1] >= w[0]);
        // (c) no coefficient exceeds the strain limit.
        ok &= c.iter().all(|&ci| ci <= limit);
        // (d) bounded extrapolation: far outside the grid the prediction
        // equals the boundary value.
        let far = row.model.predict(100.0 / row.beta).unwrap();
        ok &= (far - row.model.predict(10.0 / row.beta * 10.0).unwrap()).abs() < 1e-6;
        ok &= (far - row.model.predict(row.model.grid().tau_max()).unwrap()).abs() < 1e-6;
    }
    gate(3, "admissibility suite", ok);
}

#[test]
fn acceptance_04_analytics_oracles() {
    let mut ok = true;
    let sets = [
        SleParams::new(1.0, 1.0, 1.0).unwrap(),
        SleParams::new(2.0, 0.5, 1.0).unwrap(),
        SleParams::new(1.538, 0.438, 1.059).unwrap(),
    ];
    for params in &sets {
        for i in 0..200 {
            // 200-point log grid spanning 1e-3/beta .. 1e2/beta.
            let exponent = -3.0 + 5.0 * i as f64 / 199.0;
            let tau = 10f64.powf(exponent) / params.beta();

            // Tangent compliance vs central differences.
            let h = 1e-5 * tau;
            let fd = (sle::strain_from_stress(params, tau + h).unwrap()
                - sle::strain_from_stress(params, tau - h).unwrap())
                / (2.0 * h);
            let analytic = sle::tangent_compliance(params, tau).unwrap();
            ok &= ((fd - analytic) / analytic).abs() < 1e-5;

            // Inversion round-trip.
            let eps = sle::strain_from_stress(params, tau).unwrap();
            let back = sle::stress_from_strain(params, eps, 1e-12).unwrap();
            ok &= (back - tau).abs() < 1e-8;
        }
    }

    // Composite-loss gradient vs central differences, 100 random instances.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let grid = KnotGrid::new(2.0, 6).unwrap();
    let weights = LossWeights::default();
    for _ in 0..100 {
        let mut coeffs: Vec<f64> = (0..6).map(|_| rng.random_range(-0.5..1.5)).collect();
        coeffs[0] = 0.0;
        let model = SplineModel::new(grid, coeffs.clone(), SplineMode::Constitutive).unwrap();
        let inputs: Vec<f64> = (0..12).map(|_| rng.random_range(-2.5..2.5)).collect();
        let targets: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let data = Dataset::new(inputs, targets, DeformationMode::Synthetic).unwrap();
        let bound = rng.random_range(0.5..1.2);
        let (_, grad) = composite_loss(&model, &data, bound, &weights).unwrap();
        for k in 1..6 {
            let h = 1e-6;
            let loss_at = |offset: f64| {
                let mut c = coeffs.clone();
                c[k] += offset;
                let m = SplineModel::new(grid, c, SplineMode::Constitutive).unwrap();
                composite_loss(&m, &data, bound, &weights).unwrap().0
            };
            let fd = (loss_at(h) - loss_at(-h)) / (2.0 * h);
            ok &= (fd - grad[k]).abs() / grad[k].abs().max(1e-6) < 1e-5;
        }
    }
    gate(4, "analytics oracle suite", ok);
}

#[test]
fn acceptance_05_calibration_self_consistency() {
    let mut ok = true;
    for trial in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
        let alpha = rng.random_range(1.2..3.0);
        let youngs = rng.random_range(0.5..2.0);
        let beta = rng.random_range(0.3..0.8);
        let truth = SleParams::new(alpha, beta, youngs).unwrap();

        // Noise-free stretch-stress samples staying clear of saturation.
        let limit = truth.strain_limit();
        let n = 25;
        let mut lambdas = Vec::with_capacity(n);
        let mut stresses = Vec::with_capacity(n);
        for i in 0..n {
            let eps = 0.02 + (0.85 * limit - 0.02) * i as f64 / (n - 1) as f64;
            lambdas.push(eps.exp());
            stresses.push(sle_stress_prediction(&truth, eps.exp(), 1e-12).unwrap());
        }
        let data = Dataset::new(lambdas, stresses, DeformationMode::Uniaxial).unwrap();

        let config = CalibrationConfig {
            seed: trial,
            ..CalibrationConfig::default()
        };
        let result = calibrate_sle(&data, &config).unwrap();
        let rel = |got: f64, want: f64| ((got - want) / want).abs();
        ok &= rel(result.params.alpha(), alpha) < 0.02
            && rel(result.params.youngs_modulus(), youngs) < 0.02
            && rel(result.params.beta(), beta) < 0.02;
    }
    gate(5, "calibration self-consistency", ok);
}

fn calibrated(
    mode: &str,
) -> &'static std::collections::HashMap<String, slekan::calibrate::CalibrationResult> {
    static CAL: OnceLock<std::collections::HashMap<String, slekan::calibrate::CalibrationResult>> =
        OnceLock::new();
    let map = CAL.get_or_init(|| {
        ["uniaxial", "biaxial", "planar"]
            .iter()
            .map(|m| {
                let data =
                    slekan::io::load_experimental(&data_path(&format!("treloar_{m}.csv"))).unwrap();
                let result = calibrate_sle(&data, &CalibrationConfig::default()).unwrap();
                (m.to_string(), result)
            })
            .collect()
    });
    assert!(map.contains_key(mode));
    map
}

#[test]
fn acceptance_06_treloar_calibration() {
    let targets = [
        ("uniaxial", 0.463, 0.08),
        ("biaxial", 0.713, 0.12),
        ("planar", 0.568, 0.10),
    ];
    let mut ok = true;
    for (mode, gamma, tol) in targets {
        let result = &calibrated(mode)[mode];
        ok &= (result.params.gamma() - gamma).abs() <= tol;
        ok &= result.metrics.r_squared >= 0.98;
    }
    gate(6, "experimental calibration", ok);
}

#[test]
fn acceptance_07_hybrid_improvement() {
    let mut ok = true;
    for mode in ["uniaxial", "biaxial", "planar"] {
        let result = &calibrated(mode)[mode];
        let dir = tempfile::tempdir().unwrap();
        let reports = cmd_regime(
            &data_path(&format!("treloar_{mode}.csv")),
            &[result.params.gamma()],
            &RunConfig::default(),
            dir.path(),
        )
        .unwrap();
        let report = &reports[0];
        ok &= report.hybrid_metrics.rmse <= report.sle_metrics.rmse + 1e-9;
        if mode == "uniaxial" {
            ok &= report.hybrid_metrics.rmse < report.sle_metrics.rmse;
        }
        // SLE parameters are untouched by residual training.
        ok &= report.alpha.to_bits() == result.params.alpha().to_bits()
            && report.youngs_modulus.to_bits() == result.params.youngs_modulus().to_bits()
            && report.beta.to_bits()
                == (result.params.gamma() / result.params.youngs_modulus()).to_bits();
    }
    gate(7, "hybrid improvement", ok);
}

#[test]
fn acceptance_08_regime_contrast() {
    let mut ok = true;
    for mode in ["uniaxial", "biaxial", "planar"] {
        let path = data_path(&format!("treloar_{mode}.csv"));
        let data = slekan::io::load_experimental(&path).unwrap();
        let max_log_stretch = data.inputs().iter().fold(0.0f64, |m, l| m.max(l.ln()));
        let dir = tempfile::tempdir().unwrap();
        let reports = cmd_regime(&path, &[0.50, 0.80], &RunConfig::default(), dir.path()).unwrap();
        let moderate = &reports[0];
        let strong = &reports[1];
        if max_log_stretch > 1.25 {
            ok &= strong.saturated_count >= 1;
        }
        let p_strong = plateau_iteration(&strong.loss_history);
        let p_moderate = plateau_iteration(&moderate.loss_history);
        ok &= p_strong < p_moderate;
    }
    gate(8, "regime contrast", ok);
}

#[test]
fn acceptance_09_determinism() {
    let bin = env!("CARGO_BIN_EXE_slekan");
    let dir = tempfile::tempdir().unwrap();
    let uniaxial = data_path("treloar_uniaxial.csv");
    let jobs: [&[&str]; 2] = [
        &["synth", "--beta", "0.5,5", "--seed", "3"],
        &[
            "regime",
            "--data",
            uniaxial.to_str().unwrap(),
            "--gamma",
            "0.5,0.8",
            "--seed",
            "3",
        ],
    ];
    let mut ok = true;
    for (j, job) in jobs.iter().enumerate() {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("job{j}_run{run}"));
            let status = std::process::Command::new(bin)
                .args(*job)
                .arg("--out")
                .arg(&out)
                .status()
                .unwrap();
            ok &= status.success();
            let mut files: Vec<_> = std::fs::read_dir(&out)
                .unwrap()
                .map(|e| e.unwrap().path())
                .collect();
            files.sort();
            let bytes: Vec<(String, Vec<u8>)> = files
                .iter()
                .map(|f| {
                    (
                        f.file_name().unwrap().to_string_lossy().into_owned(),
                        std::fs::read(f).unwrap(),
                    )
                })
                .collect();
            outputs.push(bytes);
        }
        ok &= !outputs[0].is_empty() && outputs[0] == outputs[1];
    }
    gate(9, "determinism", ok);
}

#[test]
fn acceptance_10_runtime_budget() {
    // The entire pipeline must stay comfortably inside a five-minute budget on
    // a single core. Running the full CLI surface here keeps the bound honest.
    let bin = env!("CARGO_BIN_EXE_slekan");
    let dir = tempfile::tempdir().unwrap();
    let start = std::time::Instant::now();
    let mut ok = true;
    let synth = std::process::Command::new(bin)
        .args(["synth", "--beta", "0.5,1,5,10"])
        .arg("--out")
        .arg(dir.path().join("synth"))
        .status()
        .unwrap();
    ok &= synth.success();
    for mode in ["uniaxial", "biaxial", "planar"] {
        let path = data_path(&format!("treloar_{mode}.csv"));
        let status = std::process::Command::new(bin)
            .args([
                "regime",
                "--data",
                path.to_str().unwrap(),
                "--gamma",
                "0.5,0.8",
            ])
            .arg("--out")
            .arg(dir.path().join(mode))
            .status()
            .unwrap();
        ok &= status.success();
    }
    let elapsed = start.elapsed();
    ok &= elapsed < std::time::Duration::from_secs(300);
    println!("full pipeline wall time: {elapsed:?}");
    gate(10, "runtime budget", ok);
}
