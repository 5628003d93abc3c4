//! FCIDUMP ingestion and the Jordan-Wigner qubit Hamiltonian.
//!
//! Spin orbitals are interleaved: qubit `2p` is spatial orbital `p` with
//! spin alpha, qubit `2p + 1` the same orbital with spin beta. Two-electron
//! integrals use chemists' notation `(pq|rs)`.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{Letter, PauliAccumulator, PauliSum, PauliTerm, DEFAULT_DROP_THRESHOLD};

const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct MolecularIntegrals {
    n_orbitals: usize,
    n_electrons: Option<usize>,
    e_core: f64,
    h: Vec<f64>,
    g: Vec<f64>,
}

impl MolecularIntegrals {
    /// Builds integrals from dense tensors, checking the usual symmetries.
    pub fn new(n_orbitals: usize, e_core: f64, h: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        let n = n_orbitals;
        if h.len() != n * n {
            return Err(Error::Dimension { expected: n * n, actual: h.len() });
        }
        if g.len() != n * n * n * n {
            return Err(Error::Dimension { expected: n.pow(4), actual: g.len() });
        }
        let m = Self { n_orbitals, n_electrons: None, e_core, h, g };
        m.check_symmetry()?;
        Ok(m)
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_orbitals
    }

    pub fn n_electrons(&self) -> Option<usize> {
        self.n_electrons
    }

    pub fn e_core(&self) -> f64 {
        self.e_core
    }

    pub fn h(&self, p: usize, q: usize) -> f64 {
        self.h[p * self.n_orbitals + q]
    }

    pub fn g(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_orbitals;
        self.g[((p * n + q) * n + r) * n + s]
    }

    fn check_symmetry(&self) -> Result<()> {
        let n = self.n_orbitals;
        for p in 0..n {
            for q in 0..n {
                if (self.h(p, q) - self.h(q, p)).abs() > SYMMETRY_TOL {
                    return Err(Error::Validation(format!("h[{p}][{q}] != h[{q}][{p}]")));
                }
                for r in 0..n {
                    for s in 0..n {
                        let v = self.g(p, q, r, s);
                        for w in [self.g(q, p, r, s), self.g(p, q, s, r), self.g(r, s, p, q)] {
                            if (v - w).abs() > SYMMETRY_TOL {
                                return Err(Error::Validation(format!(
                                    "g[{p}][{q}][{r}][{s}] breaks 8-fold symmetry"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn header_int(header: &str, key: &str) -> Option<usize> {
    let upper = header.to_ascii_uppercase();
    let start = upper.find(&format!("{key}="))? + key.len() + 1;
    let digits: String = upper[start..]
        .trim_start()
        .chars()
        .take_while(|c| c.is_ascii_digit())
        .collect();
    digits.parse().ok()
}

/// Parses FCIDUMP text (see [`load_fcidump`]).
pub fn parse_fcidump(text: &str) -> Result<MolecularIntegrals> {
    let mut lines = text.lines().enumerate();
    let mut header = String::new();
    let mut closed = false;
    for (_, line) in lines.by_ref() {
        header.push_str(line);
        header.push(' ');
        let t = line.trim().to_ascii_uppercase();
        if t.starts_with("&END") || t == "/" || t.ends_with("&END") {
            closed = true;
            break;
        }
    }
    if !closed || !header.trim_start().to_ascii_uppercase().starts_with("&FCI") {
        return Err(Error::Parse { line: 1, msg: "missing `&FCI ... &END` header".into() });
    }
    let n = header_int(&header, "NORB")
        .ok_or_else(|| Error::Parse { line: 1, msg: "header lacks NORB".into() })?;
    let n_electrons = header_int(&header, "NELEC");

    let mut h = vec![None::<f64>; n * n];
    let mut g = vec![None::<f64>; n.pow(4)];
    let mut e_core = 0.0;
    let idx2 = |p: usize, q: usize| p * n + q;
    let idx4 = |p: usize, q: usize, r: usize, s: usize| ((p * n + q) * n + r) * n + s;

    fn store(slot: &mut Option<f64>, v: f64, line: usize) -> Result<()> {
        match *slot {
            Some(old) if (old - v).abs() > SYMMETRY_TOL => Err(Error::Validation(format!(
                "line {line}: integral conflicts with a symmetry-equivalent record ({old} vs {v})"
            ))),
            _ => {
                *slot = Some(v);
                Ok(())
            }
        }
    }

    for (i, raw) in lines {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected `value i j k l`, got {line:?}"),
            });
        }
        let value: f64 = fields[0]
            .replace(['D', 'd'], "E")
            .parse()
            .map_err(|e| Error::Parse { line: lineno, msg: format!("bad value {:?}: {e}", fields[0]) })?;
        let mut ix = [0usize; 4];
        for (slot, f) in ix.iter_mut().zip(&fields[1..]) {
            *slot = f.parse().map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("bad index {f:?}: {e}"),
            })?;
            if *slot > n {
                return Err(Error::Validation(format!(
                    "line {lineno}: orbital index {slot} exceeds NORB={n}"
                )));
            }
        }
        match ix {
            [0, 0, 0, 0] => e_core = value,
            [p, q, 0, 0] if p > 0 && q > 0 => {
                let (p, q) = (p - 1, q - 1);
                store(&mut h[idx2(p, q)], value, lineno)?;
                store(&mut h[idx2(q, p)], value, lineno)?;
            }
            // Orbital energies carry no Hamiltonian information.
            [p, 0, 0, 0] if p > 0 => {}
            [p, q, r, s] if p > 0 && q > 0 && r > 0 && s > 0 => {
                let (p, q, r, s) = (p - 1, q - 1, r - 1, s - 1);
                for (a, b, c, d) in [
                    (p, q, r, s),
                    (q, p, r, s),
                    (p, q, s, r),
                    (q, p, s, r),
                    (r, s, p, q),
                    (s, r, p, q),
                    (r, s, q, p),
                    (s, r, q, p),
                ] {
                    store(&mut g[idx4(a, b, c, d)], value, lineno)?;
                }
            }
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("unrecognised index pattern {ix:?}"),
                })
            }
        }
    }
    let mut m = MolecularIntegrals::new(
        n,
        e_core,
        h.into_iter().map(|v| v.unwrap_or(0.0)).collect(),
        g.into_iter().map(|v| v.unwrap_or(0.0)).collect(),
    )?;
    m.n_electrons = n_electrons;
    Ok(m)
}

/// Reads an FCIDUMP file: a `&FCI NORB=…, NELEC=…` namelist header, then
/// 1-indexed `value i j k l` records with `0 0 0 0` holding the core energy.
pub fn load_fcidump(path: impl AsRef<Path>) -> Result<MolecularIntegrals> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fcidump(&text)
}

type Ladder = Vec<(Complex64, PauliTerm)>;

/// Jordan-Wigner image of `a_j` (or `a_j^†`): `(X_j ± iY_j)/2 · Z_{<j}`.
fn ladder(n_qubits: usize, j: usize, dagger: bool) -> Ladder {
    let mut x = vec![Letter::I; n_qubits];
    for l in x.iter_mut().take(j) {
        *l = Letter::Z;
    }
    let mut y = x.clone();
    x[j] = Letter::X;
    y[j] = Letter::Y;
    let sign = if dagger { -0.5 } else { 0.5 };
    vec![
        (Complex64::new(0.5, 0.0), PauliTerm::from_letters(&x).expect("width checked")),
        (Complex64::new(0.0, sign), PauliTerm::from_letters(&y).expect("width checked")),
    ]
}

fn product_into(acc: &mut PauliAccumulator, coeff: f64, ops: &[&Ladder]) -> Result<()> {
    let n = ops[0][0].1.n_qubits();
    let mut partial: Ladder = vec![(Complex64::new(coeff, 0.0), PauliTerm::identity(n)?)];
    for op in ops {
        let mut next = Vec::with_capacity(partial.len() * op.len());
        for (c1, t1) in &partial {
            for (c2, t2) in op.iter() {
                next.push((c1 * c2, t1.multiply(t2)?));
            }
        }
        partial = next;
    }
    for (c, t) in &partial {
        acc.add(*c, t);
    }
    Ok(())
}

/// Qubit Hamiltonian `Σ h_pq E_pq + ½ Σ (pq|rs)(E_pq E_rs − δ_qr E_ps) + e_core`
/// on `2 · n_orbitals` qubits, canonicalized.
pub fn jordan_wigner(m: &MolecularIntegrals) -> Result<PauliSum> {
    let n_orb = m.n_orbitals();
    let n_q = 2 * n_orb;
    let create: Vec<Ladder> = (0..n_q).map(|j| ladder(n_q, j, true)).collect();
    let annihilate: Vec<Ladder> = (0..n_q).map(|j| ladder(n_q, j, false)).collect();
    let so = |p: usize, spin: usize| 2 * p + spin;

    let mut acc = PauliAccumulator::new(n_q);
    acc.add(Complex64::new(m.e_core(), 0.0), &PauliTerm::identity(n_q)?);
    for p in 0..n_orb {
        for q in 0..n_orb {
            let h = m.h(p, q);
            if h == 0.0 {
                continue;
            }
            for s in 0..2 {
                product_into(&mut acc, h, &[&create[so(p, s)], &annihilate[so(q, s)]])?;
            }
        }
    }
    // ½ Σ (pq|rs) a†_pσ a†_rτ a_sτ a_qσ
    for p in 0..n_orb {
        for q in 0..n_orb {
            for r in 0..n_orb {
                for s in 0..n_orb {
                    let g = m.g(p, q, r, s);
                    if g == 0.0 {
                        continue;
                    }
                    for sig in 0..2 {
                        for tau in 0..2 {
                            let (i, j) = (so(p, sig), so(r, tau));
                            let (k, l) = (so(s, tau), so(q, sig));
                            if i == j || k == l {
                                continue;
                            }
                            product_into(
                                &mut acc,
                                0.5 * g,
                                &[&create[i], &create[j], &annihilate[k], &annihilate[l]],
                            )?;
                        }
                    }
                }
            }
        }
    }
    acc.into_hermitian(DEFAULT_DROP_THRESHOLD, 1e-10)
}

/// Total particle number `Σ (I − Z_i)/2`.
pub fn number_operator(n_qubits: usize) -> Result<PauliSum> {
    let mut terms = vec![(n_qubits as f64 / 2.0, PauliTerm::identity(n_qubits)?)];
    for q in 0..n_qubits {
        terms.push((-0.5, PauliTerm::single(n_qubits, q, Letter::Z)?));
    }
    Ok(PauliSum::from_terms(n_qubits, terms)?.canonicalize(DEFAULT_DROP_THRESHOLD))
}

/// `S_z = ¼ Σ_p (Z_{2p+1} − Z_{2p})` under the interleaved ordering.
pub fn sz_operator(n_qubits: usize) -> Result<PauliSum> {
    let mut terms = Vec::new();
    for q in 0..n_qubits {
        let sign = if q % 2 == 0 { -0.25 } else { 0.25 };
        terms.push((sign, PauliTerm::single(n_qubits, q, Letter::Z)?));
    }
    Ok(PauliSum::from_terms(n_qubits, terms)?.canonicalize(DEFAULT_DROP_THRESHOLD))
}

/// Dense `2^n × 2^n` matrix of a Pauli sum.
pub fn dense_matrix(o: &PauliSum) -> Result<DMatrix<Complex64>> {
    let n = o.n_qubits();
    if n > 14 {
        return Err(Error::Capacity { what: "dense matrix width", actual: n, limit: 14 });
    }
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for (c, t) in o.terms() {
        for i in 0..dim {
            let (f, j) = t.apply_to_basis(i as u64);
            m[(j as usize, i)] += f * *c;
        }
    }
    Ok(m)
}

/// Lowest eigenvalue of a Hermitian matrix.
pub fn ground_energy(m: &DMatrix<Complex64>) -> f64 {
    m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Exact-diagonalization ground energy of a Pauli sum.
pub fn exact_ground_energy(o: &PauliSum) -> Result<f64> {
    Ok(ground_energy(&dense_matrix(o)?))
}

/// Ground energy restricted to basis states with `n_electrons` set bits and
/// `n_alpha` of them on even (alpha) qubits. Both operators used here conserve
/// these labels, so the restricted block is exact.
pub fn sector_ground_energy(o: &PauliSum, n_electrons: usize, n_alpha: usize) -> Result<f64> {
    let n = o.n_qubits();
    if n > 20 {
        return Err(Error::Capacity { what: "sector diagonalization width", actual: n, limit: 20 });
    }
    let even = (0..n).step_by(2).fold(0u64, |m, q| m | 1 << q);
    let states: Vec<u64> = (0..1u64 << n)
        .filter(|s| s.count_ones() as usize == n_electrons && (s & even).count_ones() as usize == n_alpha)
        .collect();
    if states.is_empty() {
        return Err(Error::Domain(format!(
            "no {n}-qubit states with {n_electrons} electrons and {n_alpha} alpha"
        )));
    }
    let index: std::collections::HashMap<u64, usize> =
        states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut m = DMatrix::<Complex64>::zeros(states.len(), states.len());
    for (c, t) in o.terms() {
        for (col, &s) in states.iter().enumerate() {
            let (f, j) = t.apply_to_basis(s);
            if let Some(&row) = index.get(&j) {
                m[(row, col)] += f * *c;
            }
        }
    }
    Ok(ground_energy(&m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const ONE_ORBITAL: &str = "&FCI NORB=1,NELEC=2,MS2=0,\n ORBSYM=1,\n ISYM=1,\n&END\n -1.0 1 1 0 0\n 0.0 0 0 0 0\n";

    #[test]
    fn one_orbital_file() {
        let m = parse_fcidump(ONE_ORBITAL).unwrap();
        assert_eq!(m.n_orbitals(), 1);
        assert_eq!(m.n_electrons(), Some(2));
        assert_eq!(m.h(0, 0), -1.0);
    }

    #[test]
    fn two_electron_record_is_unfolded() {
        let text = "&FCI NORB=2,NELEC=2,\n&END\n 0.5 1 1 1 1\n 0.25 2 1 1 1\n";
        let m = parse_fcidump(text).unwrap();
        assert_eq!(m.g(0, 0, 0, 0), 0.5);
        for (p, q, r, s) in [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)] {
            assert_eq!(m.g(p, q, r, s), 0.25);
        }
        assert_eq!(m.g(1, 1, 0, 0), 0.0);
    }

    #[test]
    fn parse_errors() {
        let bad_index = "&FCI NORB=1,\n&END\n 0.5 2 1 1 1\n";
        assert!(matches!(parse_fcidump(bad_index), Err(Error::Validation(_))));
        let bad_record = "&FCI NORB=1,\n&END\n 0.5 1 1\n";
        assert!(matches!(parse_fcidump(bad_record), Err(Error::Parse { line: 3, .. })));
        let bad_value = "&FCI NORB=1,\n&END\n x 1 1 1 1\n";
        assert!(matches!(parse_fcidump(bad_value), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_fcidump("1.0 1 1 0 0\n"), Err(Error::Parse { .. })));
        let conflict = "&FCI NORB=2,\n&END\n 0.5 1 2 0 0\n 0.4 2 1 0 0\n";
        assert!(matches!(parse_fcidump(conflict), Err(Error::Validation(_))));
    }

    #[test]
    fn number_operator_mapping() {
        // h_00 = 1 for one orbital gives a†a on both spins: 1 - (Z0 + Z1)/2.
        let m = MolecularIntegrals::new(1, 0.0, vec![1.0], vec![0.0]).unwrap();
        let h = jordan_wigner(&m).unwrap();
        let want = PauliSum::from_text("1 II\n-0.5 IZ\n-0.5 ZI\n").unwrap().canonicalize(1e-12);
        assert_eq!(h.terms().len(), want.terms().len());
        for ((a, s), (b, t)) in h.terms().iter().zip(want.terms()) {
            assert_eq!(s, t);
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn independent_spins_spectrum() {
        let m = parse_fcidump(ONE_ORBITAL).unwrap();
        let h = dense_matrix(&jordan_wigner(&m).unwrap()).unwrap();
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip([-2.0, -1.0, -1.0, 0.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }
}
