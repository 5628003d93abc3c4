//! Aaronson-Gottesman stabilizer tableau for Clifford circuits.
//!
//! Rows `0..n` are destabilizers and rows `n..2n` stabilizers, each stored as
//! X/Z bitmasks plus a sign bit. Registers are limited to 64 qubits.

use crate::circuit::{is_clifford_angle, nearest_clifford_multiple, Axis, Circuit, Gate};
use crate::error::{Error, Result};
use crate::pauli::{PauliSum, PauliTerm, Phase, MAX_QUBITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Row {
    x: u64,
    z: u64,
    neg: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tableau {
    n_qubits: usize,
    rows: Vec<Row>,
}

#[derive(Debug, Clone, Copy)]
enum Elementary {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Cx(usize, usize),
}

impl Tableau {
    /// Tableau of `|0…0>`: destabilizers `X_i`, stabilizers `Z_i`.
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::Capacity {
                what: "tableau width",
                actual: n_qubits,
                limit: MAX_QUBITS,
            });
        }
        let mut rows = Vec::with_capacity(2 * n_qubits);
        for q in 0..n_qubits {
            rows.push(Row { x: 1 << q, z: 0, neg: false });
        }
        for q in 0..n_qubits {
            rows.push(Row { x: 0, z: 1 << q, neg: false });
        }
        Ok(Self { n_qubits, rows })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn stabilizers(&self) -> Vec<PauliTerm> {
        self.rows[self.n_qubits..].iter().map(|r| self.row_term(r)).collect()
    }

    fn row_term(&self, r: &Row) -> PauliTerm {
        let phase = if r.neg { Phase::MINUS_ONE } else { Phase::ONE };
        PauliTerm::from_masks(self.n_qubits, r.x, r.z, phase).expect("row within width")
    }

    fn apply_elementary(&mut self, g: Elementary) {
        for r in &mut self.rows {
            match g {
                Elementary::H(a) => {
                    let (xa, za) = (r.x >> a & 1, r.z >> a & 1);
                    r.neg ^= xa & za == 1;
                    r.x = (r.x & !(1 << a)) | (za << a);
                    r.z = (r.z & !(1 << a)) | (xa << a);
                }
                Elementary::S(a) => {
                    let (xa, za) = (r.x >> a & 1, r.z >> a & 1);
                    r.neg ^= xa & za == 1;
                    r.z ^= xa << a;
                }
                Elementary::Sdg(a) => {
                    let (xa, za) = (r.x >> a & 1, r.z >> a & 1);
                    r.neg ^= xa & (za ^ 1) == 1;
                    r.z ^= xa << a;
                }
                Elementary::X(a) => {
                    r.neg ^= r.z >> a & 1 == 1;
                }
                Elementary::Cx(a, b) => {
                    let (xa, za) = (r.x >> a & 1, r.z >> a & 1);
                    let (xb, zb) = (r.x >> b & 1, r.z >> b & 1);
                    r.neg ^= xa & zb & (xb ^ za ^ 1) == 1;
                    r.x ^= xa << b;
                    r.z ^= zb << a;
                }
            }
        }
    }

    /// Conjugates the tableau by `gate`, whose rotation angle (if any) is
    /// `angle`. Clifford-angle rotations are rewritten into S/H sequences.
    pub fn apply_clifford_gate(&mut self, gate: &Gate, angle: f64) -> Result<()> {
        let (a, b) = gate.qubits();
        for q in std::iter::once(a).chain(b) {
            if q >= self.n_qubits {
                return Err(Error::Dimension {
                    expected: self.n_qubits,
                    actual: q + 1,
                });
            }
        }
        match *gate {
            Gate::H(q) => self.apply_elementary(Elementary::H(q)),
            Gate::S(q) => self.apply_elementary(Elementary::S(q)),
            Gate::Sdg(q) => self.apply_elementary(Elementary::Sdg(q)),
            Gate::X(q) => self.apply_elementary(Elementary::X(q)),
            Gate::Cx { control, target } => self.apply_elementary(Elementary::Cx(control, target)),
            Gate::Rot { axis, qubit, .. } => {
                if !is_clifford_angle(angle)? {
                    return Err(Error::UnsupportedGate {
                        gate: format!("{} {qubit} angle {angle}", gate.name()),
                    });
                }
                // R(mπ/2) equals S^m up to global phase in the rotation's own basis.
                let m = nearest_clifford_multiple(angle)?;
                let (pre, post): (&[Elementary], &[Elementary]) = match axis {
                    Axis::Z => (&[], &[]),
                    Axis::X => (&[Elementary::H(qubit)], &[Elementary::H(qubit)]),
                    Axis::Y => (
                        &[Elementary::Sdg(qubit), Elementary::H(qubit)],
                        &[Elementary::H(qubit), Elementary::S(qubit)],
                    ),
                };
                for &g in pre {
                    self.apply_elementary(g);
                }
                for _ in 0..m {
                    self.apply_elementary(Elementary::S(qubit));
                }
                for &g in post {
                    self.apply_elementary(g);
                }
            }
        }
        Ok(())
    }

    /// `<P>` in `{-1, 0, +1}`. `P` must carry a real phase.
    pub fn pauli_expectation(&self, p: &PauliTerm) -> Result<i8> {
        if p.n_qubits() != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                actual: p.n_qubits(),
            });
        }
        if !p.phase().is_real() {
            return Err(Error::Domain(format!(
                "expectation of non-Hermitian Pauli {p}"
            )));
        }
        let n = self.n_qubits;
        let bare = p.with_phase(Phase::ONE);
        if self.rows[n..].iter().any(|r| !bare.commutes_with(&self.row_term(r))) {
            return Ok(0);
        }
        // P commutes with the whole stabilizer group, so ±P is a product of
        // the stabilizers whose paired destabilizer anticommutes with P.
        let mut acc = PauliTerm::identity(n)?;
        for i in 0..n {
            if !bare.commutes_with(&self.row_term(&self.rows[i])) {
                acc = acc.multiply(&self.row_term(&self.rows[n + i]))?;
            }
        }
        debug_assert_eq!((acc.x_mask(), acc.z_mask()), (bare.x_mask(), bare.z_mask()));
        let rel = Phase::from_power(u32::from(p.phase().power()) + 4 - u32::from(acc.phase().power()));
        match rel {
            Phase::ONE => Ok(1),
            Phase::MINUS_ONE => Ok(-1),
            _ => Err(Error::Domain(format!(
                "tableau sign inconsistent for {p}: stabilizer product {acc}"
            ))),
        }
    }

    pub fn expectation(&self, o: &PauliSum) -> Result<f64> {
        let mut total = 0.0;
        for (c, t) in o.terms() {
            total += c * f64::from(self.pauli_expectation(t)?);
        }
        Ok(total)
    }

    /// Checks commuting stabilizers and the destabilizer/stabilizer pairing.
    pub fn invariants_hold(&self) -> bool {
        let n = self.n_qubits;
        let sym = |a: &Row, b: &Row| ((a.x & b.z).count_ones() + (a.z & b.x).count_ones()) % 2;
        for i in 0..n {
            for j in 0..n {
                if sym(&self.rows[n + i], &self.rows[n + j]) != 0 {
                    return false;
                }
                if sym(&self.rows[i], &self.rows[j]) != 0 {
                    return false;
                }
                if sym(&self.rows[i], &self.rows[n + j]) != u32::from(i == j) {
                    return false;
                }
            }
        }
        true
    }
}

/// Runs a circuit whose every rotation sits at a Clifford angle.
pub fn run_clifford(c: &Circuit) -> Result<Tableau> {
    let mut t = Tableau::new(c.n_qubits())?;
    for g in c.gates() {
        let angle = g.param().map(|p| c.angle(p)).unwrap_or(0.0);
        t.apply_clifford_gate(g, angle)?;
    }
    Ok(t)
}
