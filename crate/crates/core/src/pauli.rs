//! Unsigned Pauli strings stored as X/Z bit masks.
//!
//! Bit `q` of a mask refers to qubit `q` of the string. Phases are dropped:
//! a string with both bits set on a qubit stands for the Hermitian `Y`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{qubit_bit, DenseOperator, StateVector, ONE, ZERO};

/// Largest string length accepted by [`enumerate_group`].
pub const MAX_GROUP_QUBITS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n_qubits: usize,
    x_mask: u64,
    z_mask: u64,
}

impl PauliString {
    pub fn new(n_qubits: usize, x_mask: u64, z_mask: u64) -> Result<Self> {
        if n_qubits > 32 {
            return Err(Error::Size(format!("{n_qubits}-qubit Pauli string")));
        }
        let full = (1u64 << n_qubits) - 1;
        if x_mask & !full != 0 || z_mask & !full != 0 {
            return Err(Error::Argument(format!(
                "mask bits beyond qubit {}",
                n_qubits.saturating_sub(1)
            )));
        }
        Ok(Self {
            n_qubits,
            x_mask,
            z_mask,
        })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            x_mask: 0,
            z_mask: 0,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> u32 {
        (self.x_mask | self.z_mask).count_ones()
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        let anti = (self.x_mask & other.z_mask).count_ones() + (self.z_mask & other.x_mask).count_ones();
        anti % 2 == 0
    }

    /// Single-qubit factor on qubit `q` as one of `I X Y Z`.
    pub fn factor(&self, q: usize) -> char {
        match ((self.x_mask >> q) & 1, (self.z_mask >> q) & 1) {
            (0, 0) => 'I',
            (1, 0) => 'X',
            (1, 1) => 'Y',
            _ => 'Z',
        }
    }

    /// Monomial form of this string placed on `placement` inside an
    /// `n_total`-qubit register.
    pub fn action(&self, placement: &[usize], n_total: usize) -> Result<PauliAction> {
        if placement.len() != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: placement.len(),
            });
        }
        let mut x = 0usize;
        let mut z = 0usize;
        for (k, &q) in placement.iter().enumerate() {
            if q >= n_total {
                return Err(Error::Argument(format!(
                    "qubit index {q} out of range for {n_total} qubits"
                )));
            }
            if placement[..k].contains(&q) {
                return Err(Error::Argument(format!("duplicate qubit index {q}")));
            }
            if (self.x_mask >> k) & 1 == 1 {
                x |= qubit_bit(q, n_total);
            }
            if (self.z_mask >> k) & 1 == 1 {
                z |= qubit_bit(q, n_total);
            }
        }
        Ok(PauliAction::new(n_total, x, z))
    }

    /// Hermitian matrix of the string placed on `placement` in an
    /// `n_total`-qubit register.
    pub fn to_matrix(&self, placement: &[usize], n_total: usize) -> Result<DenseOperator> {
        let action = self.action(placement, n_total)?;
        action.to_operator()
    }

    /// Matrix of the string on its own qubits in natural order.
    pub fn local_matrix(&self) -> Result<DenseOperator> {
        let placement: Vec<usize> = (0..self.n_qubits).collect();
        self.to_matrix(&placement, self.n_qubits)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n_qubits {
            write!(f, "{}", self.factor(q))?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut x = 0u64;
        let mut z = 0u64;
        let chars: Vec<char> = s.chars().collect();
        for (q, ch) in chars.iter().enumerate() {
            match ch.to_ascii_uppercase() {
                'I' => {}
                'X' => x |= 1 << q,
                'Z' => z |= 1 << q,
                'Y' => {
                    x |= 1 << q;
                    z |= 1 << q;
                }
                other => return Err(Error::Argument(format!("invalid Pauli letter {other:?}"))),
            }
        }
        Self::new(chars.len(), x, z)
    }
}

/// All `4^n` strings on `n` qubits, ordered lexicographically on
/// `(x_mask, z_mask)`; the identity comes first.
pub fn enumerate_group(n_qubits: usize) -> Result<Vec<PauliString>> {
    if n_qubits == 0 {
        return Err(Error::Argument("Pauli group needs at least one qubit".into()));
    }
    if n_qubits > MAX_GROUP_QUBITS {
        return Err(Error::Size(format!(
            "Pauli group on {n_qubits} qubits exceeds the {MAX_GROUP_QUBITS}-qubit cap"
        )));
    }
    let side = 1u64 << n_qubits;
    let mut out = Vec::with_capacity((side * side) as usize);
    for x in 0..side {
        for z in 0..side {
            out.push(PauliString {
                n_qubits,
                x_mask: x,
                z_mask: z,
            });
        }
    }
    Ok(out)
}

/// A Pauli string on a full register as a signed permutation:
/// `P|j⟩ = ω(j)|j ⊕ x⟩` with `x`, `z` in basis-index bit order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliAction {
    n_qubits: usize,
    x: usize,
    z: usize,
    phase: C64,
}

impl PauliAction {
    pub fn new(n_qubits: usize, x: usize, z: usize) -> Self {
        // Hermitian representative: one factor of i per Y
        let phase = match (x & z).count_ones() % 4 {
            0 => ONE,
            1 => C64::new(0.0, 1.0),
            2 => -ONE,
            _ => C64::new(0.0, -1.0),
        };
        Self {
            n_qubits,
            x,
            z,
            phase,
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn flip(&self) -> usize {
        self.x
    }

    /// Coefficient of `|j ⊕ x⟩` in `P|j⟩`.
    #[inline]
    pub fn omega(&self, j: usize) -> C64 {
        if (j & self.z).count_ones() % 2 == 0 {
            self.phase
        } else {
            -self.phase
        }
    }

    pub fn to_operator(&self) -> Result<DenseOperator> {
        DenseOperator::from_fn(self.n_qubits, |r, c| {
            if r == c ^ self.x {
                self.omega(c)
            } else {
                ZERO
            }
        })
    }

    /// `P · a`.
    pub fn left_mul(&self, a: &DMatrix<C64>) -> DMatrix<C64> {
        DMatrix::from_fn(a.nrows(), a.ncols(), |r, c| self.omega(r ^ self.x) * a[(r ^ self.x, c)])
    }

    /// `a · P`.
    pub fn right_mul(&self, a: &DMatrix<C64>) -> DMatrix<C64> {
        DMatrix::from_fn(a.nrows(), a.ncols(), |r, c| a[(r, c ^ self.x)] * self.omega(c))
    }

    /// `P · a · P`.
    pub fn conjugate(&self, a: &DMatrix<C64>) -> DMatrix<C64> {
        DMatrix::from_fn(a.nrows(), a.ncols(), |r, c| {
            self.omega(r ^ self.x) * a[(r ^ self.x, c ^ self.x)] * self.omega(c)
        })
    }

    /// `Tr(a P)`.
    pub fn trace_with(&self, a: &DMatrix<C64>) -> C64 {
        (0..a.ncols()).map(|c| a[(c, c ^ self.x)] * self.omega(c)).sum()
    }

    /// `Tr(a P b P)` in `O(d²)` without forming products.
    pub fn sandwich_trace(&self, a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
        let d = a.nrows();
        let x = self.x;
        // Tr(aPbP) = Σ_{r,c} a[r, c⊕x] ω(c) b[c, r⊕x] ω(r)
        let signs: Vec<C64> = (0..d).map(|j| self.omega(j)).collect();
        let mut acc = ZERO;
        for c in 0..d {
            let a_col = a.column(c ^ x);
            let mut inner = ZERO;
            for r in 0..d {
                inner += a_col[r] * b[(c, r ^ x)] * signs[r];
            }
            acc += inner * signs[c];
        }
        acc
    }

    pub fn apply(&self, psi: &StateVector) -> StateVector {
        let amps = psi.amplitudes();
        let out: Vec<C64> = (0..amps.len()).map(|r| self.omega(r ^ self.x) * amps[r ^ self.x]).collect();
        StateVector::from_slice(&out).expect("Pauli action preserves the norm")
    }
}

/// Pauli 1-design average `4^{-n} Σ_O O q O` over all strings on `n` qubits.
pub fn one_design_check(n_qubits: usize, q: &DenseOperator) -> Result<DenseOperator> {
    if q.n_qubits() != n_qubits {
        return Err(Error::Dimension {
            expected: 1 << n_qubits,
            found: q.dim(),
        });
    }
    let group = enumerate_group(n_qubits)?;
    let placement: Vec<usize> = (0..n_qubits).collect();
    let mut acc = DMatrix::zeros(q.dim(), q.dim());
    for p in &group {
        acc += p.action(&placement, n_qubits)?.conjugate(q.matrix());
    }
    DenseOperator::new(acc / C64::from(group.len() as f64))
}

/// Projector onto `(1/√d) Σ_i |i⟩|i⟩` on two copies of `n` qubits.
pub fn bell_projector(n_qubits: usize) -> Result<DenseOperator> {
    let d = 1usize << n_qubits;
    let amp = C64::from(1.0 / d as f64);
    DenseOperator::from_fn(2 * n_qubits, |r, c| {
        let diag = |i: usize| i / d == i % d;
        if diag(r) && diag(c) {
            amp
        } else {
            ZERO
        }
    })
}

/// `4^{-n} Σ_O O ⊗ O*` over all strings on `n` qubits.
pub fn pauli_bell_average(n_qubits: usize) -> Result<DenseOperator> {
    let group = enumerate_group(n_qubits)?;
    let mut acc = DenseOperator::zeros(2 * n_qubits)?;
    for p in &group {
        let m = p.local_matrix()?;
        let conj = DenseOperator::new(m.matrix().map(|z| z.conj()))?;
        acc = &acc + &crate::linalg::kron(&m, &conj)?;
    }
    Ok(acc.scaled(C64::from(1.0 / group.len() as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::embed;

    fn single(ch: char) -> DMatrix<C64> {
        let i = C64::new(0.0, 1.0);
        match ch {
            'I' => DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE]),
            'X' => DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            'Y' => DMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO]),
            _ => DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }

    fn kron_oracle(p: &PauliString) -> DMatrix<C64> {
        let mut m = DMatrix::from_element(1, 1, ONE);
        for q in 0..p.n_qubits() {
            m = m.kronecker(&single(p.factor(q)));
        }
        m
    }

    fn hermitian(n: usize, seed: u64) -> DenseOperator {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let g = DenseOperator::from_fn(n, |_, _| C64::new(next(), next())).unwrap();
        (&g + &g.dagger()).scaled(C64::from(0.5))
    }

    #[test]
    fn single_qubit_group_order() {
        let g = enumerate_group(1).unwrap();
        let names: Vec<String> = g.iter().map(|p| p.to_string()).collect();
        assert_eq!(names, vec!["I", "Z", "X", "Y"]);
    }

    #[test]
    fn two_qubit_group_counts() {
        let g = enumerate_group(2).unwrap();
        assert_eq!(g.len(), 16);
        assert_eq!(g.iter().filter(|p| p.is_identity()).count(), 1);
        let mut dedup = g.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 16);
    }

    #[test]
    fn group_size_guard() {
        assert!(matches!(enumerate_group(9), Err(Error::Size(_))));
        assert!(enumerate_group(0).is_err());
    }

    #[test]
    fn identity_delta_average() {
        for n in 1..=3 {
            let g = enumerate_group(n).unwrap();
            let frac = g.iter().filter(|p| p.is_identity()).count() as f64 / g.len() as f64;
            assert_eq!(frac, 1.0 / 4f64.powi(n as i32));
        }
    }

    #[test]
    fn matrices_match_kron_oracle() {
        for p in enumerate_group(3).unwrap() {
            let m = p.local_matrix().unwrap();
            let oracle = kron_oracle(&p);
            assert!(m.matrix().iter().zip(oracle.iter()).all(|(a, b)| (a - b).norm() < 1e-15), "{p}");
        }
    }

    #[test]
    fn pauli_y_matrix() {
        let y: PauliString = "Y".parse().unwrap();
        let m = y.to_matrix(&[0], 1).unwrap();
        assert_eq!(m[(0, 1)], C64::new(0.0, -1.0));
        assert_eq!(m[(1, 0)], C64::new(0.0, 1.0));
    }

    #[test]
    fn strings_square_to_identity_and_are_hermitian() {
        for p in enumerate_group(2).unwrap() {
            let m = p.to_matrix(&[2, 0], 3).unwrap();
            assert!(m.is_hermitian(0.0));
            assert_eq!(&m * &m, DenseOperator::identity(3).unwrap());
            let tr = m.trace();
            let expect = if p.is_identity() { 8.0 } else { 0.0 };
            assert_eq!(tr, C64::from(expect));
        }
    }

    #[test]
    fn placement_matches_embed() {
        for p in enumerate_group(2).unwrap() {
            let local = p.local_matrix().unwrap();
            let placed = p.to_matrix(&[3, 1], 4).unwrap();
            let via_embed = embed(&local, &[3, 1], 4).unwrap();
            assert!(placed.max_abs_diff(&via_embed) < 1e-15);
        }
    }

    #[test]
    fn display_and_parse_round_trip() {
        let p: PauliString = "XIZY".parse().unwrap();
        assert_eq!(p.to_string(), "XIZY");
        assert_eq!(p.weight(), 3);
        assert!("XQ".parse::<PauliString>().is_err());
    }

    #[test]
    fn commutation_rule() {
        let x: PauliString = "XI".parse().unwrap();
        let z: PauliString = "ZI".parse().unwrap();
        let zz: PauliString = "ZZ".parse().unwrap();
        let xx: PauliString = "XX".parse().unwrap();
        assert!(!x.commutes_with(&z));
        assert!(xx.commutes_with(&zz));
    }

    #[test]
    fn action_products_match_dense_products() {
        let a = hermitian(3, 1);
        let b = hermitian(3, 2);
        for p in enumerate_group(3).unwrap().iter().step_by(5) {
            let act = p.action(&[0, 1, 2], 3).unwrap();
            let pm = act.to_operator().unwrap();
            let left = DenseOperator::new(act.left_mul(a.matrix())).unwrap();
            let right = DenseOperator::new(act.right_mul(a.matrix())).unwrap();
            let conj = DenseOperator::new(act.conjugate(a.matrix())).unwrap();
            assert!(left.max_abs_diff(&(&pm * &a)) < 1e-14);
            assert!(right.max_abs_diff(&(&a * &pm)) < 1e-14);
            assert!(conj.max_abs_diff(&(&(&pm * &a) * &pm)) < 1e-14);
            assert!((act.trace_with(a.matrix()) - (&a * &pm).trace()).norm() < 1e-13);
            let dense = (&(&(&a * &pm) * &b) * &pm).trace();
            assert!((act.sandwich_trace(a.matrix(), b.matrix()) - dense).norm() < 1e-12);
        }
    }

    #[test]
    fn one_design_of_identity_and_x() {
        let id = DenseOperator::identity(1).unwrap();
        assert!(one_design_check(1, &id).unwrap().max_abs_diff(&id) < 1e-15);
        let x: PauliString = "X".parse().unwrap();
        let avg = one_design_check(1, &x.local_matrix().unwrap()).unwrap();
        assert!(avg.frobenius_norm() < 1e-15);
    }

    #[test]
    fn one_design_matches_direct_sum() {
        let q = hermitian(2, 7);
        let avg = one_design_check(2, &q).unwrap();
        let expect = DenseOperator::identity(2).unwrap().scaled(q.trace() / 4.0);
        assert!(avg.max_abs_diff(&expect) < 1e-12);
        // independent 16-term sum with dense matrices
        let mut acc = DenseOperator::zeros(2).unwrap();
        for p in enumerate_group(2).unwrap() {
            let m = DenseOperator::new(kron_oracle(&p)).unwrap();
            acc = &acc + &(&(&m * &q) * &m);
        }
        assert!(avg.max_abs_diff(&acc.scaled(C64::from(1.0 / 16.0))) < 1e-12);
    }

    #[test]
    fn bell_projector_identity() {
        for n in 1..=2 {
            let avg = pauli_bell_average(n).unwrap();
            let pi = bell_projector(n).unwrap();
            assert!(avg.max_abs_diff(&pi) < 1e-12);
            let phi_sq = &pi * &pi;
            assert!(phi_sq.max_abs_diff(&pi) < 1e-12);
        }
    }
}
