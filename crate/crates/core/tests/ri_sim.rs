use std::sync::Arc;

use kmslab::generators::{ri_effective_generator, System};
use kmslab::models::{build_hamiltonian, pauli_jump_set, random_kl_local, ModelSpec};
use kmslab::ri_sim::*;

fn qubit() -> Arc<System> {
    let h = build_hamiltonian(&ModelSpec::SingleQubit { omega0_energy: 1.0 }).unwrap();
    System::new(h, pauli_jump_set(1), 1.0).unwrap()
}

fn two_qubits() -> Arc<System> {
    System::new(random_kl_local(2, 2, 3, 1.0, 2).unwrap(), pauli_jump_set(2), 1.0).unwrap()
}

#[test]
fn monte_carlo_converges_at_root_n() {
    let mut cfg = RIConfig::new(0.3, 2.0, 1.0);
    cfg.max_phase_per_step = 0.3;
    let rep = monte_carlo_convergence(&qubit(), &cfg, &[100, 1000, 10000], 8, 21).unwrap();
    assert!((rep.fit.slope + 0.5).abs() < 0.15, "{:?}", rep);
}

#[test]
fn thermalization_index_tracks_effective_gap() {
    let ch = ri_channel(&qubit(), &RIConfig::new(0.05, 2.0, 1.0)).unwrap();
    let (rho, rep) = fixed_point_and_therm_index(&ch, 1e-2, 3).unwrap();
    assert!((rho.trace().re - 1.0).abs() < 1e-12);
    let ratio = rep.t_therm as f64 / rep.predicted_t_therm;
    assert!((0.5..=2.0).contains(&ratio), "{rep:?}");

    // two qubits: the prediction stays an upper bound but is loose by more than 2
    let ch = ri_channel(&two_qubits(), &RIConfig::new(0.1, 2.0, 1.0)).unwrap();
    let (_, rep) = fixed_point_and_therm_index(&ch, 1e-2, 3).unwrap();
    let ratio = rep.t_therm as f64 / rep.predicted_t_therm;
    assert!(ratio > 0.3 && ratio <= 2.0, "{rep:?}");
    assert!(rep.fixed_point_error < 0.1);
}

#[test]
fn coherent_defect_decays_in_kappa() {
    let sys = two_qubits();
    let defect = |kappa: f64| {
        let d2 = dyson2_generator(&sys, &RIConfig::new(0.05, kappa, 1.0), 1).unwrap();
        let eff = ri_effective_generator(&sys, kappa).unwrap();
        coherent_defect(&extracted_coherent(&d2, &eff), &sys.gibbs.rho).unwrap()
    };
    let (d4, d8) = (defect(4.0), defect(8.0));
    assert!(d8 < 0.5 * d4, "{d4} {d8}");
}

#[test]
fn effective_model_approaches_second_order_semigroup() {
    let sys = two_qubits();
    let d4 = effective_model_distance(&sys, &RIConfig::new(0.1, 4.0, 1.0), 5).unwrap();
    let d8 = effective_model_distance(&sys, &RIConfig::new(0.1, 8.0, 1.0), 5).unwrap();
    assert!(d8 < d4, "{d4} {d8}");
}

#[test]
fn channel_distance_shrinks_with_alpha() {
    let rep = channel_vs_semigroup(&qubit(), &RIConfig::new(0.05, 2.0, 1.0), &[0.16, 0.08, 0.04], 1).unwrap();
    assert!(rep.distances.windows(2).all(|w| w[1] < w[0]), "{:?}", rep.distances);
    assert_eq!(rep.n_probes, 2 + 2 + 50);
}
