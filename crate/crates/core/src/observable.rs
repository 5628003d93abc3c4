//! Pauli sums precompiled for repeated expectation values.
//!
//! Terms sharing an X mask act as the same permutation `|i> -> |i ^ x>`, so
//! they collapse into one diagonal weight vector per mask. Expectations then
//! cost one pass over the state per distinct X mask.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::PauliSum;

/// Widest register an [`Observable`] will tabulate (2^24 weights per group).
pub const MAX_COMPILED_QUBITS: usize = 24;

#[derive(Debug, Clone)]
pub struct Observable {
    n_qubits: usize,
    groups: Vec<(u64, Vec<Complex64>)>,
}

impl Observable {
    pub fn compile(sum: &PauliSum) -> Result<Self> {
        let n = sum.n_qubits();
        if n > MAX_COMPILED_QUBITS {
            return Err(Error::Capacity {
                what: "observable width",
                actual: n,
                limit: MAX_COMPILED_QUBITS,
            });
        }
        let dim = 1usize << n;
        let mut groups: Vec<(u64, Vec<Complex64>)> = Vec::new();
        for (c, t) in sum.terms() {
            let x = t.x_mask();
            let pos = match groups.iter().position(|(gx, _)| *gx == x) {
                Some(p) => p,
                None => {
                    groups.push((x, vec![Complex64::default(); dim]));
                    groups.len() - 1
                }
            };
            let w = &mut groups[pos].1;
            for (i, wi) in w.iter_mut().enumerate() {
                let (f, _) = t.apply_to_basis(i as u64);
                *wi += f * *c;
            }
        }
        Ok(Self { n_qubits: n, groups })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// `(x_mask, weights)` where `P|i> = weights[i] |i ^ x_mask>` summed over
    /// the group.
    pub fn groups(&self) -> &[(u64, Vec<Complex64>)] {
        &self.groups
    }

    pub(crate) fn check_width(&self, n_qubits: usize) -> Result<()> {
        if n_qubits != self.n_qubits {
            return Err(Error::Dimension {
                expected: n_qubits,
                actual: self.n_qubits,
            });
        }
        Ok(())
    }
}
