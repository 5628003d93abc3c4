mod common;

use cdr_core::density::{noisy_expectation, run_noisy, NoiseModel};
use cdr_core::hamiltonian::sector_ground_energy;
use cdr_core::observable::Observable;
use cdr_core::statevector::run_ideal;
use common::*;

#[test]
fn noise_raises_energy_at_the_two_layer_optimum() {
    let (c, h) = optimal_tups(2);
    let o = Observable::compile(&h).unwrap();
    let exact = run_ideal(&c, 0).unwrap().expectation(&h).unwrap();
    let noisy = noisy_expectation(&c, &NoiseModel::default(), &o).unwrap();
    assert!(noisy - exact > 0.0, "noisy {noisy} exact {exact}");

    let doubled = NoiseModel { p2: 2.0 * NoiseModel::default().p2, ..NoiseModel::default() };
    let worse = noisy_expectation(&c, &doubled, &o).unwrap();
    assert!(worse - exact >= noisy - exact, "{worse} vs {noisy}");
}

#[test]
fn noiseless_density_matches_statevector_on_tups() {
    let (c, h) = optimal_tups(2);
    let o = Observable::compile(&h).unwrap();
    let rho = run_noisy(&c, &NoiseModel::noiseless()).unwrap();
    let psi = run_ideal(&c, 0).unwrap().expectation(&h).unwrap();
    assert!((rho.expectation(&h).unwrap() - psi).abs() < 1e-10);
    assert!((noisy_expectation(&c, &NoiseModel::noiseless(), &o).unwrap() - psi).abs() < 1e-10);
}

#[test]
fn noisy_state_stays_physical() {
    let (c, h) = optimal_tups(2);
    let nm = NoiseModel { p1: 0.01, p2: 0.05, readout_flip: 0.02 };
    let rho = run_noisy(&c, &nm).unwrap();
    assert!((rho.trace().re - 1.0).abs() < 1e-10);
    assert!(rho.hermiticity_error() < 1e-12);
    assert!(rho.min_eigenvalue() > -1e-10);
    // The full-space ground energy still bounds a mixed state from below.
    let floor = cdr_core::hamiltonian::exact_ground_energy(&h).unwrap();
    assert!(rho.expectation(&h).unwrap() >= floor - 1e-10);
    assert!(floor <= sector_ground_energy(&h, 4, 2).unwrap() + 1e-10);
}
