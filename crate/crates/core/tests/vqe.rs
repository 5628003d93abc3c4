mod common;

use approx::assert_abs_diff_eq;
use cdr_core::hamiltonian::{jordan_wigner, load_fcidump};
use cdr_core::tups::{build_tups, TupsSpec};
use cdr_core::vqe::{optimize, rotosolve_sweep, EnergyFn, VqeOptions};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn first_sweep_lowers_hf_energy() {
    let h = jordan_wigner(&load_fcidump(h4_path()).unwrap()).unwrap();
    let c = build_tups(&TupsSpec::new(4, 2)).unwrap();
    let t = rotosolve_sweep(&c, &h, &vec![0.0; 18]).unwrap();
    let e = EnergyFn::new(&c, &h).unwrap().energy(&t).unwrap();
    assert!(e < H4_HF_TOTAL - 1e-3, "{e}");
    assert!(e >= H4_FCI_TOTAL - 1e-9);
}

#[test]
fn parameter_shift_matches_finite_differences_on_tups() {
    let h = jordan_wigner(&load_fcidump(h4_path()).unwrap()).unwrap();
    let c = build_tups(&TupsSpec::new(4, 2)).unwrap();
    let f = EnergyFn::new(&c, &h).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let th: Vec<f64> = (0..18).map(|_| rng.gen_range(-3.1..3.1)).collect();
        let g = f.gradient(&th).unwrap();
        for j in 0..18 {
            let (mut p, mut m) = (th.clone(), th.clone());
            p[j] += 1e-5;
            m[j] -= 1e-5;
            let fd = (f.energy(&p).unwrap() - f.energy(&m).unwrap()) / 2e-5;
            assert_abs_diff_eq!(g[j], fd, epsilon = 1e-6);
        }
    }
}

#[test]
fn optimized_energy_is_variational_and_trace_monotone() {
    let h = jordan_wigner(&load_fcidump(h4_path()).unwrap()).unwrap();
    let c = build_tups(&TupsSpec::new(4, 1)).unwrap();
    let r = optimize(&c, &h, None, &VqeOptions::default()).unwrap();
    println!("L=1 energy {} sweeps {} steps {} grad {}", r.energy, r.sweeps, r.grad_steps, r.grad_norm);
    assert!(r.energy >= H4_FCI_TOTAL - 1e-9);
    assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    let again = EnergyFn::new(&c, &h).unwrap().energy(&r.theta_opt).unwrap();
    assert_abs_diff_eq!(again, r.energy, epsilon = 1e-10);
}
