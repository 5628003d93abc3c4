//! Pauli strings and real-weighted sums of them.
//!
//! A [`PauliTerm`] stores its letters in symplectic form (an X mask and a Z
//! mask, `Y = X & Z`) together with a global phase `i^k`. Qubit 0 is the least
//! significant bit of both masks. In text form the letters are written with
//! the highest qubit first, so `ZIIX` is Z on qubit 3 and X on qubit 0.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register a Pauli string can describe.
pub const MAX_QUBITS: usize = 64;

/// Coefficients below this magnitude are dropped by [`PauliSum::canonicalize`].
pub const DEFAULT_DROP_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    // I < X < Y < Z, used for the canonical term order.
    fn rank(self) -> u8 {
        match self {
            Letter::I => 0,
            Letter::X => 1,
            Letter::Y => 2,
            Letter::Z => 3,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }
}

/// Fourth root of unity, stored as the exponent `k` in `i^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: u32) -> Self {
        Phase((k % 4) as u8)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn mul(self, other: Phase) -> Phase {
        Phase((self.0 + other.0) % 4)
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliTerm {
    n_qubits: usize,
    x: u64,
    z: u64,
    phase: Phase,
}

fn check_width(n_qubits: usize) -> Result<()> {
    if n_qubits > MAX_QUBITS {
        return Err(Error::Capacity {
            what: "Pauli string width",
            actual: n_qubits,
            limit: MAX_QUBITS,
        });
    }
    Ok(())
}

fn mask(n_qubits: usize) -> u64 {
    if n_qubits == 64 {
        u64::MAX
    } else {
        (1u64 << n_qubits) - 1
    }
}

impl PauliTerm {
    pub fn identity(n_qubits: usize) -> Result<Self> {
        check_width(n_qubits)?;
        Ok(Self {
            n_qubits,
            x: 0,
            z: 0,
            phase: Phase::ONE,
        })
    }

    pub fn from_masks(n_qubits: usize, x: u64, z: u64, phase: Phase) -> Result<Self> {
        check_width(n_qubits)?;
        if (x | z) & !mask(n_qubits) != 0 {
            return Err(Error::Domain(format!(
                "Pauli masks {x:#x}/{z:#x} exceed {n_qubits} qubits"
            )));
        }
        Ok(Self {
            n_qubits,
            x,
            z,
            phase,
        })
    }

    /// A single letter on `qubit`, identity elsewhere.
    pub fn single(n_qubits: usize, qubit: usize, letter: Letter) -> Result<Self> {
        if qubit >= n_qubits {
            return Err(Error::Dimension {
                expected: n_qubits,
                actual: qubit + 1,
            });
        }
        let mut t = Self::identity(n_qubits)?;
        t.set_letter(qubit, letter);
        Ok(t)
    }

    /// Builds a term from per-qubit letters, `letters[q]` acting on qubit `q`.
    pub fn from_letters(letters: &[Letter]) -> Result<Self> {
        let mut t = Self::identity(letters.len())?;
        for (q, &l) in letters.iter().enumerate() {
            t.set_letter(q, l);
        }
        Ok(t)
    }

    fn set_letter(&mut self, qubit: usize, letter: Letter) {
        let (x, z) = letter.bits();
        let bit = 1u64 << qubit;
        self.x = if x { self.x | bit } else { self.x & !bit };
        self.z = if z { self.z | bit } else { self.z & !bit };
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn letter(&self, qubit: usize) -> Letter {
        Letter::from_bits(self.x >> qubit & 1 == 1, self.z >> qubit & 1 == 1)
    }

    pub fn letters(&self) -> Vec<Letter> {
        (0..self.n_qubits).map(|q| self.letter(q)).collect()
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn commutes_with(&self, other: &PauliTerm) -> bool {
        let anti = (self.x & other.z).count_ones() + (self.z & other.x).count_ones();
        anti.is_multiple_of(2)
    }

    /// Group product `self * other`, including the accumulated phase.
    pub fn multiply(&self, other: &PauliTerm) -> Result<PauliTerm> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                actual: other.n_qubits,
            });
        }
        let mut power = u32::from(self.phase.0) + u32::from(other.phase.0);
        let mut both = (self.x | self.z) & (other.x | other.z);
        while both != 0 {
            let q = both.trailing_zeros() as usize;
            both &= both - 1;
            let a = self.letter(q).rank();
            let b = other.letter(q).rank();
            if a != b {
                // X->Y->Z->X is the +i direction.
                if b == a % 3 + 1 {
                    power += 1;
                } else {
                    power += 3;
                }
            }
        }
        Ok(PauliTerm {
            n_qubits: self.n_qubits,
            x: self.x ^ other.x,
            z: self.z ^ other.z,
            phase: Phase::from_power(power),
        })
    }

    /// Action on a computational basis state: `P|b> = factor |b'>`.
    pub fn apply_to_basis(&self, basis: u64) -> (Complex64, u64) {
        let mut power = u32::from(self.phase.0) + self.y_count();
        if (basis & self.z).count_ones() % 2 == 1 {
            power += 2;
        }
        (Phase::from_power(power).to_complex(), basis ^ self.x)
    }

    /// Letters as text, highest qubit first; the phase is not included.
    pub fn letters_string(&self) -> String {
        (0..self.n_qubits)
            .rev()
            .map(|q| self.letter(q).as_char())
            .collect()
    }

    fn letter_cmp(&self, other: &PauliTerm) -> Ordering {
        self.n_qubits.cmp(&other.n_qubits).then_with(|| {
            for q in (0..self.n_qubits).rev() {
                let o = self.letter(q).rank().cmp(&other.letter(q).rank());
                if o != Ordering::Equal {
                    return o;
                }
            }
            Ordering::Equal
        })
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase.0 {
            0 => "",
            1 => "i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{prefix}{}", self.letters_string())
    }
}

impl FromStr for PauliTerm {
    type Err = Error;

    /// Parses letters written highest qubit first, e.g. `ZIIX`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut letters = Vec::with_capacity(s.len());
        for c in s.chars().rev() {
            letters.push(Letter::from_char(c).ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("invalid Pauli letter {c:?} in {s:?}"),
            })?);
        }
        PauliTerm::from_letters(&letters)
    }
}

/// Real linear combination of phase-free Pauli strings.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<(f64, PauliTerm)>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            terms: Vec::new(),
        }
    }

    /// Collects terms without merging. Real phases (`±1`) are folded into the
    /// coefficient; imaginary phases would make the operator anti-Hermitian
    /// and are rejected.
    pub fn from_terms(n_qubits: usize, terms: Vec<(f64, PauliTerm)>) -> Result<Self> {
        check_width(n_qubits)?;
        let mut out = Vec::with_capacity(terms.len());
        for (c, t) in terms {
            if t.n_qubits != n_qubits {
                return Err(Error::Dimension {
                    expected: n_qubits,
                    actual: t.n_qubits,
                });
            }
            if !t.phase.is_real() {
                return Err(Error::Domain(format!(
                    "term {t} has an imaginary phase; observables need real coefficients"
                )));
            }
            let sign = if t.phase == Phase::MINUS_ONE { -1.0 } else { 1.0 };
            out.push((c * sign, t.with_phase(Phase::ONE)));
        }
        Ok(Self {
            n_qubits,
            terms: out,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliTerm)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of the identity string (after merging).
    pub fn identity_coefficient(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(_, t)| t.is_identity())
            .map(|(c, _)| c)
            .sum()
    }

    /// Merges duplicate letter strings, drops coefficients with magnitude
    /// below `threshold`, and orders terms lexicographically by letters.
    pub fn canonicalize(&self, threshold: f64) -> PauliSum {
        let mut merged: HashMap<(u64, u64), f64> = HashMap::new();
        let mut order: Vec<PauliTerm> = Vec::new();
        for (c, t) in &self.terms {
            let key = (t.x, t.z);
            match merged.get_mut(&key) {
                Some(v) => *v += c,
                None => {
                    merged.insert(key, *c);
                    order.push(*t);
                }
            }
        }
        let mut terms: Vec<(f64, PauliTerm)> = order
            .into_iter()
            .map(|t| (merged[&(t.x, t.z)], t))
            .filter(|(c, _)| c.abs() >= threshold)
            .collect();
        terms.sort_by(|a, b| a.1.letter_cmp(&b.1));
        PauliSum {
            n_qubits: self.n_qubits,
            terms,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (c, t) in &self.terms {
            s.push_str(&format!("{c:e} {}\n", t.letters_string()));
        }
        s
    }

    /// Parses the `<coefficient> <letters>` line format. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn from_text(text: &str) -> Result<PauliSum> {
        let mut terms = Vec::new();
        let mut width = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: i + 1, msg };
            let mut parts = line.split_whitespace();
            let (Some(c), Some(l), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(parse_err(format!("expected `<coefficient> <letters>`, got {line:?}")));
            };
            let coeff: f64 = c
                .parse()
                .map_err(|e| parse_err(format!("bad coefficient {c:?}: {e}")))?;
            let term: PauliTerm = l.parse().map_err(|e: Error| parse_err(e.to_string()))?;
            match width {
                None => width = Some(term.n_qubits),
                Some(w) if w != term.n_qubits => {
                    return Err(parse_err(format!(
                        "term {l} has {} qubits, previous terms have {w}",
                        term.n_qubits
                    )))
                }
                _ => {}
            }
            terms.push((coeff, term));
        }
        PauliSum::from_terms(width.unwrap_or(0), terms)
    }
}

/// Accumulates complex-weighted Pauli strings, e.g. while expanding fermionic
/// operators, and converts the result into a Hermitian [`PauliSum`].
#[derive(Debug, Clone)]
pub struct PauliAccumulator {
    n_qubits: usize,
    map: HashMap<(u64, u64), Complex64>,
}

impl PauliAccumulator {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            map: HashMap::new(),
        }
    }

    pub fn add(&mut self, coeff: Complex64, term: &PauliTerm) {
        let c = coeff * term.phase.to_complex();
        *self.map.entry((term.x, term.z)).or_default() += c;
    }

    /// Fails if any surviving coefficient has an imaginary part above
    /// `imag_tol`.
    pub fn into_hermitian(self, threshold: f64, imag_tol: f64) -> Result<PauliSum> {
        let mut terms = Vec::with_capacity(self.map.len());
        for ((x, z), c) in self.map {
            if c.im.abs() > imag_tol {
                let t = PauliTerm::from_masks(self.n_qubits, x, z, Phase::ONE)?;
                return Err(Error::Domain(format!(
                    "operator is not Hermitian: term {t} has coefficient {c}"
                )));
            }
            terms.push((c.re, PauliTerm::from_masks(self.n_qubits, x, z, Phase::ONE)?));
        }
        Ok(PauliSum::from_terms(self.n_qubits, terms)?.canonicalize(threshold))
    }
}
