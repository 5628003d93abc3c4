//! Dense statevector simulation for ideal (noise-free) expectation values.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::circuit::{Axis, Circuit, Gate};
use crate::error::{Error, Result};
use crate::observable::Observable;
use crate::pauli::PauliSum;

/// Widest register the dense simulators accept.
pub const MAX_STATEVECTOR_QUBITS: usize = 24;

pub type Mat2 = [[Complex64; 2]; 2];

const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// 2x2 unitary of a single-qubit gate, with `angle` the resolved rotation
/// angle (ignored for fixed gates). Returns `None` for CX.
pub fn single_qubit_matrix(gate: &Gate, angle: f64) -> Option<Mat2> {
    let h = FRAC_1_SQRT_2;
    Some(match gate {
        Gate::H(_) => [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]],
        Gate::S(_) => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 1.0)]],
        Gate::Sdg(_) => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, -1.0)]],
        Gate::X(_) => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
        Gate::Rot { axis, .. } => rotation_matrix(*axis, angle),
        Gate::Cx { .. } => return None,
    })
}

/// `exp(-i angle/2 σ_axis)`.
pub fn rotation_matrix(axis: Axis, angle: f64) -> Mat2 {
    let (s, co) = (angle / 2.0).sin_cos();
    match axis {
        Axis::X => [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]],
        Axis::Y => [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]],
        Axis::Z => [[c(co, -s), c(0.0, 0.0)], [c(0.0, 0.0), c(co, s)]],
    }
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Complex64::default(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Applies `m` to bit `bit` of a buffer viewed as a register of qubits.
pub(crate) fn apply_mat2(buf: &mut [Complex64], bit: usize, m: &Mat2) {
    let stride = 1usize << bit;
    for chunk in buf.chunks_exact_mut(2 * stride) {
        let (lo, hi) = chunk.split_at_mut(stride);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a0, *a1);
            *a0 = m[0][0] * x + m[0][1] * y;
            *a1 = m[1][0] * x + m[1][1] * y;
        }
    }
}

pub(crate) fn apply_cx_bits(buf: &mut [Complex64], control: usize, target: usize) {
    let cbit = 1usize << control;
    let tbit = 1usize << target;
    for i in 0..buf.len() {
        if i & cbit != 0 && i & tbit == 0 {
            buf.swap(i, i | tbit);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn basis(n_qubits: usize, label: u64) -> Result<Self> {
        if n_qubits > MAX_STATEVECTOR_QUBITS {
            return Err(Error::Capacity {
                what: "statevector width",
                actual: n_qubits,
                limit: MAX_STATEVECTOR_QUBITS,
            });
        }
        let dim = 1usize << n_qubits;
        if label >= dim as u64 {
            return Err(Error::Domain(format!(
                "basis label {label} out of range for {n_qubits} qubits"
            )));
        }
        let mut amps = vec![Complex64::default(); dim];
        amps[label as usize] = c(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply_single(&mut self, qubit: usize, m: &Mat2) {
        apply_mat2(&mut self.amps, qubit, m);
    }

    pub fn apply_cx(&mut self, control: usize, target: usize) {
        apply_cx_bits(&mut self.amps, control, target);
    }

    pub fn apply_gate(&mut self, gate: &Gate, angle: f64) {
        match *gate {
            Gate::Cx { control, target } => self.apply_cx(control, target),
            _ => {
                let m = single_qubit_matrix(gate, angle).expect("single-qubit gate");
                self.apply_single(gate.qubits().0, &m);
            }
        }
    }

    /// Runs `c` with rotation angles supplied by `angle_of(gate_index, gate)`.
    pub fn apply_circuit_with(
        &mut self,
        c: &Circuit,
        mut angle_of: impl FnMut(usize, &Gate) -> f64,
    ) -> Result<()> {
        if c.n_qubits() != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                actual: c.n_qubits(),
            });
        }
        for (i, g) in c.gates().iter().enumerate() {
            let angle = if g.param().is_some() { angle_of(i, g) } else { 0.0 };
            self.apply_gate(g, angle);
        }
        Ok(())
    }

    pub fn apply_circuit(&mut self, c: &Circuit) -> Result<()> {
        self.apply_circuit_with(c, |_, g| c.angle(g.param().expect("rotation")))
    }

    pub fn expectation(&self, o: &PauliSum) -> Result<f64> {
        self.expectation_compiled(&Observable::compile(o)?)
    }

    pub fn expectation_compiled(&self, o: &Observable) -> Result<f64> {
        o.check_width(self.n_qubits)?;
        let mut total = Complex64::default();
        for (x, w) in o.groups() {
            let x = *x as usize;
            let mut acc = Complex64::default();
            for (i, (a, wi)) in self.amps.iter().zip(w).enumerate() {
                acc += self.amps[i ^ x].conj() * wi * a;
            }
            total += acc;
        }
        Ok(total.re)
    }
}

/// Ideal evolution `U|initial>` for the circuit's current parameter table.
pub fn run_ideal(c: &Circuit, initial: u64) -> Result<StateVector> {
    let mut s = StateVector::basis(c.n_qubits(), initial)?;
    s.apply_circuit(c)?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::ParamRef;
    use crate::pauli::PauliTerm;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sum(text: &str) -> PauliSum {
        PauliSum::from_text(text).unwrap()
    }

    #[test]
    fn empty_circuit_keeps_basis_state() {
        let s = run_ideal(&Circuit::new(3), 0).unwrap();
        assert_eq!(s.amplitudes()[0], c(1.0, 0.0));
        assert!(StateVector::basis(2, 4).is_err());
    }

    #[test]
    fn hadamard_and_bell() {
        let mut circ = Circuit::new(2);
        circ.push(Gate::H(0)).unwrap();
        let s = run_ideal(&circ, 0).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, FRAC_1_SQRT_2, epsilon = 1e-15);

        circ.push(Gate::Cx { control: 0, target: 1 }).unwrap();
        let s = run_ideal(&circ, 0).unwrap();
        let a = s.amplitudes();
        assert_abs_diff_eq!(a[0].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(a[3].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(a[1].norm() + a[2].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.expectation(&sum("1 ZZ")).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.expectation(&sum("1 XX")).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.expectation(&sum("1 YY")).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn z_on_zero_state() {
        let s = StateVector::basis(1, 0).unwrap();
        assert_eq!(s.expectation(&sum("1 Z")).unwrap(), 1.0);
        let s = StateVector::basis(1, 1).unwrap();
        assert_eq!(s.expectation(&sum("1 Z")).unwrap(), -1.0);
    }

    #[test]
    fn expectation_checks_width() {
        let s = StateVector::basis(2, 0).unwrap();
        assert!(matches!(
            s.expectation(&sum("1 Z")),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn rotation_conventions() {
        // RY(θ)|0> = cos(θ/2)|0> + sin(θ/2)|1>, so <Z> = cos θ and <X> = sin θ.
        let mut circ = Circuit::new(1);
        let p = circ.add_param(0.7);
        circ.push(Gate::Rot { axis: Axis::Y, qubit: 0, param: ParamRef::new(p) }).unwrap();
        let s = run_ideal(&circ, 0).unwrap();
        assert_abs_diff_eq!(s.expectation(&sum("1 Z")).unwrap(), 0.7f64.cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(s.expectation(&sum("1 X")).unwrap(), 0.7f64.sin(), epsilon = 1e-14);
        // RX(θ)|0>: <Y> = -sin θ.
        let mut circ = Circuit::new(1);
        let p = circ.add_param(0.7);
        circ.push(Gate::Rot { axis: Axis::X, qubit: 0, param: ParamRef::new(p) }).unwrap();
        let s = run_ideal(&circ, 0).unwrap();
        assert_abs_diff_eq!(s.expectation(&sum("1 Y")).unwrap(), -0.7f64.sin(), epsilon = 1e-14);
    }

    // Oracle: explicit |ψ'> = P|ψ> via apply_to_basis, then <ψ|ψ'>.
    fn naive_expectation(s: &StateVector, t: &PauliTerm) -> Complex64 {
        let a = s.amplitudes();
        let mut out = vec![Complex64::default(); a.len()];
        for (i, ai) in a.iter().enumerate() {
            let (f, j) = t.apply_to_basis(i as u64);
            out[j as usize] += f * ai;
        }
        a.iter().zip(&out).map(|(x, y)| x.conj() * y).sum()
    }

    fn random_circuit(n: usize, gates: &[(u8, usize, usize, f64)]) -> Circuit {
        let mut circ = Circuit::new(n);
        for &(kind, q0, q1, angle) in gates {
            let (q0, q1) = (q0 % n, q1 % n);
            let g = match kind % 8 {
                0 => Gate::H(q0),
                1 => Gate::S(q0),
                2 => Gate::Sdg(q0),
                3 => Gate::X(q0),
                4 if q0 != q1 => Gate::Cx { control: q0, target: q1 },
                4 => Gate::H(q0),
                k => {
                    let axis = [Axis::X, Axis::Y, Axis::Z][(k - 5) as usize];
                    let p = circ.add_param(angle);
                    Gate::Rot { axis, qubit: q0, param: ParamRef::new(p) }
                }
            };
            circ.push(g).unwrap();
        }
        circ
    }

    fn inverse_gate(circ: &mut Circuit, g: Gate) {
        match g {
            Gate::S(q) => circ.push(Gate::Sdg(q)).unwrap(),
            Gate::Sdg(q) => circ.push(Gate::S(q)).unwrap(),
            Gate::Rot { axis, qubit, param } => {
                let p = circ.add_param(-circ.params()[param.index]);
                circ.push(Gate::Rot { axis, qubit, param: ParamRef::new(p) }).unwrap();
            }
            other => circ.push(other).unwrap(),
        }
    }

    proptest! {
        #[test]
        fn unitary_evolution_preserves_norm(
            gates in proptest::collection::vec((any::<u8>(), 0usize..5, 0usize..5, -4.0f64..4.0), 1..40)
        ) {
            let circ = random_circuit(5, &gates);
            let mut s = StateVector::basis(5, 3).unwrap();
            for g in circ.gates() {
                let angle = g.param().map(|p| circ.angle(p)).unwrap_or(0.0);
                s.apply_gate(g, angle);
                prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
            }
        }

        #[test]
        fn gate_then_inverse_is_identity(
            gates in proptest::collection::vec((any::<u8>(), 0usize..4, 0usize..4, -4.0f64..4.0), 1..20),
            extra in (any::<u8>(), 0usize..4, 0usize..4, -4.0f64..4.0),
        ) {
            let circ = random_circuit(4, &gates);
            let obs = sum("0.3 XZIY\n-1.1 ZZII\n0.5 IIIX\n0.7 YYYY\n");
            let before = run_ideal(&circ, 0).unwrap().expectation(&obs).unwrap();
            let mut longer = random_circuit(4, &gates);
            let tail = random_circuit(4, &[extra]);
            for g in tail.gates() {
                let g = match *g {
                    Gate::Rot { axis, qubit, param } => {
                        let p = longer.add_param(tail.params()[param.index]);
                        Gate::Rot { axis, qubit, param: ParamRef::new(p) }
                    }
                    other => other,
                };
                longer.push(g).unwrap();
                inverse_gate(&mut longer, g);
            }
            let after = run_ideal(&longer, 0).unwrap().expectation(&obs).unwrap();
            prop_assert!((before - after).abs() < 1e-10);
        }

        #[test]
        fn compiled_expectation_matches_naive(
            gates in proptest::collection::vec((any::<u8>(), 0usize..4, 0usize..4, -4.0f64..4.0), 1..30),
            terms in proptest::collection::vec((-1.0f64..1.0, 0u64..16, 0u64..16), 1..8),
        ) {
            let s = run_ideal(&random_circuit(4, &gates), 0).unwrap();
            let mut want = 0.0;
            let mut list = Vec::new();
            for (coef, x, z) in terms {
                let t = PauliTerm::from_masks(4, x, z, crate::pauli::Phase::ONE).unwrap();
                want += coef * naive_expectation(&s, &t).re;
                list.push((coef, t));
            }
            let got = s.expectation(&PauliSum::from_terms(4, list).unwrap()).unwrap();
            prop_assert!((got - want).abs() < 1e-10);
        }
    }
}
