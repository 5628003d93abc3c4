#![allow(dead_code)]

use std::path::PathBuf;

use cdr_core::hamiltonian::MolecularIntegrals;
use cdr_core::pauli::PauliSum;
use nalgebra::DMatrix;
use num_complex::Complex64;

pub const H4_HF_TOTAL: f64 = -1.7767473162487193;
pub const H4_FCI_TOTAL: f64 = -1.9689148191571701;
pub const H4_E_CORE: f64 = 1.745238953478592;

pub fn h4_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/h4_rect_1.5_1.8_sto3g.fcidump")
}

/// Applies `a_j` (or `a_j^†`) to an occupation-number basis state, with the
/// sign fixed by the number of occupied modes below `j`.
fn ladder_on_basis(state: u64, j: usize, dagger: bool) -> Option<(f64, u64)> {
    let occupied = state >> j & 1 == 1;
    if occupied == dagger {
        return None;
    }
    let sign = if (state & ((1u64 << j) - 1)).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
    Some((sign, state ^ (1u64 << j)))
}

fn apply_string(state: u64, ops: &[(usize, bool)]) -> Option<(f64, u64)> {
    let mut s = state;
    let mut sign = 1.0;
    // Rightmost operator acts first.
    for &(j, dag) in ops.iter().rev() {
        let (f, t) = ladder_on_basis(s, j, dag)?;
        sign *= f;
        s = t;
    }
    Some((sign, s))
}

/// Molecular Hamiltonian built directly from fermionic ladder operators in
/// the occupation basis, without any Pauli algebra.
pub fn fermionic_matrix(m: &MolecularIntegrals) -> DMatrix<f64> {
    let n_orb = m.n_orbitals();
    let n_q = 2 * n_orb;
    let dim = 1usize << n_q;
    let mut h = DMatrix::<f64>::identity(dim, dim) * m.e_core();
    let so = |p: usize, s: usize| 2 * p + s;
    for state in 0..dim as u64 {
        for p in 0..n_orb {
            for q in 0..n_orb {
                for s in 0..2 {
                    if let Some((f, t)) = apply_string(state, &[(so(p, s), true), (so(q, s), false)]) {
                        h[(t as usize, state as usize)] += f * m.h(p, q);
                    }
                }
                for r in 0..n_orb {
                    for ss in 0..n_orb {
                        let g = m.g(p, q, r, ss);
                        for sig in 0..2 {
                            for tau in 0..2 {
                                let ops = [
                                    (so(p, sig), true),
                                    (so(r, tau), true),
                                    (so(ss, tau), false),
                                    (so(q, sig), false),
                                ];
                                if let Some((f, t)) = apply_string(state, &ops) {
                                    h[(t as usize, state as usize)] += 0.5 * f * g;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    h
}

fn letter_matrix(c: char) -> DMatrix<Complex64> {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let v = match c {
        'I' => [o, z, z, o],
        'X' => [z, o, o, z],
        'Y' => [z, -i, i, z],
        'Z' => [o, z, z, -o],
        _ => panic!("bad letter {c}"),
    };
    DMatrix::from_row_slice(2, 2, &v)
}

/// Dense matrix assembled from Kronecker products of 2x2 Pauli matrices. The
/// leftmost letter in the text form is the most significant qubit, which is
/// also the leftmost Kronecker factor.
pub fn kron_matrix(o: &PauliSum) -> DMatrix<Complex64> {
    let dim = 1usize << o.n_qubits();
    let mut total = DMatrix::<Complex64>::zeros(dim, dim);
    for (c, t) in o.terms() {
        let mut m = DMatrix::<Complex64>::identity(1, 1);
        for ch in t.letters_string().chars() {
            m = m.kronecker(&letter_matrix(ch));
        }
        total += m * Complex64::new(*c, 0.0);
    }
    total
}

pub fn min_eigenvalue_real(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Restricts a real matrix to states with `n` set bits, `n_alpha` on even bits.
pub fn sector_block(m: &DMatrix<f64>, n: u32, n_alpha: u32, n_qubits: usize) -> DMatrix<f64> {
    let even: u64 = (0..n_qubits).step_by(2).map(|q| 1u64 << q).sum();
    let states: Vec<usize> = (0..1u64 << n_qubits)
        .filter(|s| s.count_ones() == n && (s & even).count_ones() == n_alpha)
        .map(|s| s as usize)
        .collect();
    DMatrix::from_fn(states.len(), states.len(), |r, c| m[(states[r], states[c])])
}

/// Dense annihilation operator `a_j` on `n_q` modes in the occupation basis.
pub fn annihilation_matrix(n_q: usize, j: usize) -> DMatrix<Complex64> {
    let dim = 1usize << n_q;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for s in 0..dim as u64 {
        if let Some((f, t)) = ladder_on_basis(s, j, false) {
            m[(t as usize, s as usize)] = Complex64::new(f, 0.0);
        }
    }
    m
}

/// Unitary of a circuit, column by column from basis states.
pub fn circuit_unitary(c: &cdr_core::circuit::Circuit) -> DMatrix<Complex64> {
    let dim = 1usize << c.n_qubits();
    let mut u = DMatrix::<Complex64>::zeros(dim, dim);
    for col in 0..dim {
        let mut s = cdr_core::statevector::StateVector::basis(c.n_qubits(), col as u64).unwrap();
        s.apply_circuit(c).unwrap();
        for (row, a) in s.amplitudes().iter().enumerate() {
            u[(row, col)] = *a;
        }
    }
    u
}

/// Largest deviation between `u` and `v` after removing a global phase.
pub fn phase_distance(u: &DMatrix<Complex64>, v: &DMatrix<Complex64>) -> f64 {
    let (k, _) = v.iter().enumerate().fold((0, 0.0), |best, (i, x)| {
        if x.norm() > best.1 { (i, x.norm()) } else { best }
    });
    let phase = u[k] / v[k];
    u.iter().zip(v.iter()).map(|(a, b)| (a - b * phase).norm()).fold(0.0, f64::max)
}

/// Random Clifford circuit: `depth` layers, each a random one-qubit Clifford
/// on every qubit followed by CX on a random disjoint pairing.
pub fn random_clifford_circuit(rng: &mut impl rand::Rng, n: usize, depth: usize) -> cdr_core::circuit::Circuit {
    use cdr_core::circuit::{Axis, Circuit, Gate, ParamRef};
    use rand::seq::SliceRandom;
    let mut c = Circuit::new(n);
    for _ in 0..depth {
        for q in 0..n {
            let g = match rng.gen_range(0..7) {
                0 => Gate::H(q),
                1 => Gate::S(q),
                2 => Gate::Sdg(q),
                3 => Gate::X(q),
                r => {
                    let axis = [Axis::X, Axis::Y, Axis::Z][r - 4];
                    let k = rng.gen_range(-3..=4);
                    let i = c.add_param(k as f64 * std::f64::consts::FRAC_PI_2);
                    Gate::Rot { axis, qubit: q, param: if rng.gen() { ParamRef::new(i) } else { ParamRef::neg(i) } }
                }
            };
            c.push(g).unwrap();
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        for pair in order.chunks(2).filter(|p| p.len() == 2) {
            if rng.gen_bool(0.7) {
                c.push(Gate::Cx { control: pair[0], target: pair[1] }).unwrap();
            }
        }
    }
    c
}

/// Optimized tUPS circuit and Hamiltonian, angles from the shipped table.
pub fn optimal_tups(layers: usize) -> (cdr_core::circuit::Circuit, PauliSum) {
    use cdr_core::hamiltonian::{jordan_wigner, load_fcidump};
    use cdr_core::tups::{build_tups, TupsSpec};
    let h = jordan_wigner(&load_fcidump(h4_path()).unwrap()).unwrap();
    let angles = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../recipes/angles_L{layers}.txt"));
    let theta = cdr_core::vqe::read_angles(angles).unwrap();
    let c = build_tups(&TupsSpec::new(4, layers)).unwrap().with_params(&theta).unwrap();
    (c, h)
}
