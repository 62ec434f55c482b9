use std::process::ExitCode;
use std::time::Instant;

use kmslab::ri_sim::{self, JumpMode, OmegaMode, RIConfig};
use kmslab::suite::{self, CheckOutcome, CHECK_NAMES};

/// Wall-clock budget per check, seconds.
fn budget(name: &str) -> f64 {
    match name {
        "kms_symmetry_and_fixed_point" => 120.0,
        "gap_monotonicity" => 300.0,
        "davies_limit" => 60.0,
        "ri_quartic_channel_error" => 180.0,
        "ri_fixed_point_error_in_kappa" => 180.0,
        "mixing_bound" => 120.0,
        "entropy_production" => 120.0,
        "beta_zero_gap" => 30.0,
        "mb_davies_trajectories" => 300.0,
        "convolution_identity" => 10.0,
        _ => f64::INFINITY,
    }
}

fn monte_carlo_fingerprint() -> String {
    let mut cfg = RIConfig::new(0.3, 1.5, 1.0);
    cfg.max_phase_per_step = 0.5;
    cfg.omega_mode = OmegaMode::MonteCarlo { n_samples: 64, seed: 2024 };
    cfg.jump_mode = JumpMode::Sampled;
    let ch = ri_sim::ri_channel(&suite::qubit_system(), &cfg).expect("channel");
    ch.superop.matrix.iter().map(|z| format!("{:e},{:e};", z.re, z.im)).collect()
}

fn run_all() -> (Vec<(CheckOutcome, f64)>, String) {
    let models = suite::suite_models();
    let out = CHECK_NAMES
        .iter()
        .map(|name| {
            let t0 = Instant::now();
            let o = suite::run_check(name, Some(&models)).expect("known check");
            (o, t0.elapsed().as_secs_f64())
        })
        .collect();
    (out, monte_carlo_fingerprint())
}

fn main() -> ExitCode {
    let mut all_pass = true;
    let (first, mc1) = run_all();
    for (o, secs) in &first {
        let b = budget(&o.name);
        let ok = o.passed && *secs <= b;
        all_pass &= ok;
        println!("{} {} [{secs:.1}s of {b:.0}s] {}", if ok { "PASS" } else { "FAIL" }, o.name, o.detail);
    }

    // second pass on a different thread count
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().expect("thread pool");
    let (second, mc2) = pool.install(run_all);
    let mut mismatched: Vec<&str> = first
        .iter()
        .zip(&second)
        .filter(|((a, _), (b, _))| a != b)
        .map(|((a, _), _)| a.name.as_str())
        .collect();
    if mc1 != mc2 {
        mismatched.push("monte_carlo_channel");
    }
    let ok = mismatched.is_empty();
    all_pass &= ok;
    println!(
        "{} determinism {}",
        if ok { "PASS" } else { "FAIL" },
        if ok { format!("checks={} plus monte_carlo_channel byte-identical across runs and thread counts", first.len()) } else { format!("differs: {}", mismatched.join(", ")) }
    );
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
