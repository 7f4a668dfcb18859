//! Dense complex operator algebra on qubit registers.
//!
//! Qubit 0 is the most significant tensor factor: in a register of `n`
//! qubits, qubit `q` is bit `n - 1 - q` of a basis-state index.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Largest register on which full operators may be materialized.
pub const MAX_OPERATOR_QUBITS: usize = 12;
/// Largest register on which state vectors may be materialized.
pub const MAX_VECTOR_QUBITS: usize = 16;
/// Eigenvalues below this are treated as exact zeros in entropies.
pub const ENTROPY_CUTOFF: f64 = 1e-12;

const HERMITIAN_TOL: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

fn qubits_for_dim(dim: usize) -> Option<usize> {
    (dim > 0 && dim.is_power_of_two()).then(|| dim.trailing_zeros() as usize)
}

/// Bit mask of qubit `q` inside an `n`-qubit index.
#[inline]
pub(crate) fn qubit_bit(q: usize, n: usize) -> usize {
    1usize << (n - 1 - q)
}

/// Square complex matrix on `2^n` dimensions.
#[derive(Clone, PartialEq)]
pub struct DenseOperator {
    n_qubits: usize,
    data: DMatrix<C64>,
}

impl fmt::Debug for DenseOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseOperator(n_qubits={}) {}", self.n_qubits, self.data)
    }
}

impl DenseOperator {
    pub fn new(data: DMatrix<C64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::Dimension {
                expected: data.nrows(),
                found: data.ncols(),
            });
        }
        let n_qubits = qubits_for_dim(data.nrows()).ok_or_else(|| {
            Error::Argument(format!("dimension {} is not a power of two", data.nrows()))
        })?;
        if n_qubits > MAX_OPERATOR_QUBITS {
            return Err(Error::Size(format!(
                "{n_qubits}-qubit operator exceeds the {MAX_OPERATOR_QUBITS}-qubit cap"
            )));
        }
        Ok(Self { n_qubits, data })
    }

    fn check_qubits(n_qubits: usize) -> Result<()> {
        if n_qubits > MAX_OPERATOR_QUBITS {
            return Err(Error::Size(format!(
                "{n_qubits}-qubit operator exceeds the {MAX_OPERATOR_QUBITS}-qubit cap"
            )));
        }
        Ok(())
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        Self::check_qubits(n_qubits)?;
        let dim = 1 << n_qubits;
        Ok(Self {
            n_qubits,
            data: DMatrix::identity(dim, dim),
        })
    }

    pub fn zeros(n_qubits: usize) -> Result<Self> {
        Self::check_qubits(n_qubits)?;
        let dim = 1 << n_qubits;
        Ok(Self {
            n_qubits,
            data: DMatrix::zeros(dim, dim),
        })
    }

    pub fn from_fn(n_qubits: usize, f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        Self::check_qubits(n_qubits)?;
        let dim = 1 << n_qubits;
        Ok(Self {
            n_qubits,
            data: DMatrix::from_fn(dim, dim, f),
        })
    }

    /// Builds an operator from entries listed row by row.
    pub fn from_row_slice(entries: &[C64]) -> Result<Self> {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim * dim != entries.len() {
            return Err(Error::Argument(format!(
                "{} entries do not form a square matrix",
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn diagonal(entries: &[C64]) -> Result<Self> {
        let n_qubits = qubits_for_dim(entries.len()).ok_or_else(|| {
            Error::Argument(format!("{} is not a power of two", entries.len()))
        })?;
        Self::from_fn(n_qubits, |r, c| if r == c { entries[r] } else { ZERO })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.data
    }

    pub fn dagger(&self) -> Self {
        Self {
            n_qubits: self.n_qubits,
            data: self.data.adjoint(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    /// Hilbert–Schmidt inner product `Tr(self† other)`.
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.dim(), other.dim(), "inner product dimension mismatch");
        self.data.dotc(&other.data)
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!(self.dim(), other.dim(), "trace product dimension mismatch");
        // Tr(AB) = sum_ij A_ij B_ji = sum over entries of A ∘ Bᵀ
        self.data.tr_dot(&other.data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        self.data
            .clone()
            .singular_values()
            .iter()
            .fold(0.0_f64, |m, &s| m.max(s))
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self {
            n_qubits: self.n_qubits,
            data: &self.data * factor,
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "comparison dimension mismatch");
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Largest entry of `|U†U - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let prod = self.data.adjoint() * &self.data;
        let dim = self.dim();
        let mut worst = 0.0_f64;
        for c in 0..dim {
            for r in 0..dim {
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((prod[(r, c)] - target).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    /// Largest entry of `|A - A†|`.
    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0_f64;
        for c in 0..dim {
            for r in 0..=c {
                worst = worst.max((self.data[(r, c)] - self.data[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn apply(&self, psi: &StateVector) -> StateVector {
        assert_eq!(self.dim(), psi.dim(), "apply dimension mismatch");
        StateVector {
            n_qubits: psi.n_qubits,
            amps: &self.data * &psi.amps,
        }
    }

    /// Left-multiplies in place by `local` acting on `qubits` (first listed
    /// qubit is the most significant local factor). `local` need not be
    /// unitary.
    pub fn apply_local_left(&mut self, local: &DMatrix<C64>, qubits: &[usize]) {
        let offsets = local_offsets(qubits, self.n_qubits);
        let k = offsets.len();
        assert_eq!(local.nrows(), k, "local operator does not match qubit count");
        let mask: usize = offsets[k - 1];
        let dim = self.dim();
        let mut gathered = vec![ZERO; k];
        for col in 0..dim {
            let column = &mut self.data.column_mut(col);
            for base in (0..dim).filter(|b| b & mask == 0) {
                for (slot, off) in gathered.iter_mut().zip(&offsets) {
                    *slot = column[base | off];
                }
                for (row, off) in offsets.iter().enumerate() {
                    let mut acc = ZERO;
                    for (j, g) in gathered.iter().enumerate() {
                        acc += local[(row, j)] * g;
                    }
                    column[base | off] = acc;
                }
            }
        }
    }

    /// Right-multiplies in place by `local` acting on `qubits`.
    pub fn apply_local_right(&mut self, local: &DMatrix<C64>, qubits: &[usize]) {
        // A·L = (L†·A†)†
        let mut adj = self.dagger();
        adj.apply_local_left(&local.adjoint(), qubits);
        *self = adj.dagger();
    }
}

/// Full-register index offsets of every local basis state of `qubits`, in
/// local order. The last entry is the union of all qubit bits.
pub(crate) fn local_offsets(qubits: &[usize], n: usize) -> Vec<usize> {
    let k = qubits.len();
    (0..1usize << k)
        .map(|local| {
            qubits
                .iter()
                .enumerate()
                .filter(|(j, _)| local & (1 << (k - 1 - j)) != 0)
                .fold(0usize, |acc, (_, &q)| acc | qubit_bit(q, n))
        })
        .collect()
}

impl Index<(usize, usize)> for DenseOperator {
    type Output = C64;

    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.data[idx]
    }
}

impl IndexMut<(usize, usize)> for DenseOperator {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.data[idx]
    }
}

impl Mul<&DenseOperator> for &DenseOperator {
    type Output = DenseOperator;

    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        assert_eq!(self.dim(), rhs.dim(), "matmul dimension mismatch");
        DenseOperator {
            n_qubits: self.n_qubits,
            data: &self.data * &rhs.data,
        }
    }
}

impl Add<&DenseOperator> for &DenseOperator {
    type Output = DenseOperator;

    fn add(self, rhs: &DenseOperator) -> DenseOperator {
        assert_eq!(self.dim(), rhs.dim(), "add dimension mismatch");
        DenseOperator {
            n_qubits: self.n_qubits,
            data: &self.data + &rhs.data,
        }
    }
}

impl Sub<&DenseOperator> for &DenseOperator {
    type Output = DenseOperator;

    fn sub(self, rhs: &DenseOperator) -> DenseOperator {
        assert_eq!(self.dim(), rhs.dim(), "sub dimension mismatch");
        DenseOperator {
            n_qubits: self.n_qubits,
            data: &self.data - &rhs.data,
        }
    }
}

/// Normalized pure state on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: DVector<C64>,
}

impl StateVector {
    /// Normalizes `amps`; fails on a zero vector.
    pub fn new(amps: DVector<C64>) -> Result<Self> {
        let n_qubits = qubits_for_dim(amps.len()).ok_or_else(|| {
            Error::Argument(format!("dimension {} is not a power of two", amps.len()))
        })?;
        if n_qubits > MAX_VECTOR_QUBITS {
            return Err(Error::Size(format!(
                "{n_qubits}-qubit state exceeds the {MAX_VECTOR_QUBITS}-qubit cap"
            )));
        }
        let norm = amps.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidState("state vector has zero norm".into()));
        }
        Ok(Self {
            n_qubits,
            amps: amps / C64::from(norm),
        })
    }

    pub fn from_slice(amps: &[C64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(amps))
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::Argument(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amps = DVector::zeros(dim);
        amps[index] = ONE;
        Self::new(amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn projector(&self) -> Result<DenseOperator> {
        DenseOperator::new(&self.amps * self.amps.adjoint())
    }
}

fn validate_qubit_list(qubits: &[usize], n: usize) -> Result<()> {
    for (i, &q) in qubits.iter().enumerate() {
        if q >= n {
            return Err(Error::Argument(format!(
                "qubit index {q} out of range for {n} qubits"
            )));
        }
        if qubits[..i].contains(&q) {
            return Err(Error::Argument(format!("duplicate qubit index {q}")));
        }
    }
    Ok(())
}

/// Tensor product `a ⊗ b`.
pub fn kron(a: &DenseOperator, b: &DenseOperator) -> Result<DenseOperator> {
    let n = a.n_qubits + b.n_qubits;
    DenseOperator::check_qubits(n)?;
    DenseOperator::new(a.data.kronecker(&b.data))
}

/// Traces out every qubit not in `keep`; the kept qubits stay in ascending
/// order.
pub fn partial_trace(op: &DenseOperator, n_qubits: usize, keep: &[usize]) -> Result<DenseOperator> {
    if op.n_qubits != n_qubits {
        return Err(Error::Dimension {
            expected: 1 << n_qubits,
            found: op.dim(),
        });
    }
    validate_qubit_list(keep, n_qubits)?;
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    let traced: Vec<usize> = (0..n_qubits).filter(|q| !kept.contains(q)).collect();
    let kbits = local_offsets(&kept, n_qubits);
    let tbits = local_offsets(&traced, n_qubits);
    let dk = kbits.len();
    let m = op.matrix();
    let out = DMatrix::from_fn(dk, dk, |r, c| {
        tbits
            .iter()
            .map(|t| m[(kbits[r] | t, kbits[c] | t)])
            .sum::<C64>()
    });
    DenseOperator::new(out)
}

/// Reduced density operator of a pure state on the qubits in `keep`
/// (ascending order).
pub fn reduced_density(psi: &StateVector, keep: &[usize]) -> Result<DenseOperator> {
    let n = psi.n_qubits;
    validate_qubit_list(keep, n)?;
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    DenseOperator::check_qubits(kept.len())?;
    let traced: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();
    let kbits = local_offsets(&kept, n);
    let tbits = local_offsets(&traced, n);
    let amps = psi.amplitudes();
    // M[a, t] = psi[a | t]; rho = M M†
    let block = DMatrix::from_fn(kbits.len(), tbits.len(), |a, t| amps[kbits[a] | tbits[t]]);
    DenseOperator::new(&block * block.adjoint())
}

/// Eigen-decomposition of a Hermitian operator: ascending eigenvalues and
/// the matching unitary of eigenvectors.
pub fn hermitian_eigen(op: &DenseOperator) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let dev = op.hermiticity_error();
    if dev > HERMITIAN_TOL * op.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    let eig = op.data.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..op.dim()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(op.dim(), op.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// `exp(-i θ v)` for Hermitian `v`.
pub fn herm_exp(v: &DenseOperator, theta: f64) -> Result<DenseOperator> {
    let (values, vecs) = hermitian_eigen(v)?;
    let phases = DMatrix::from_fn(v.dim(), v.dim(), |r, c| {
        if r == c {
            C64::from_polar(1.0, -theta * values[r])
        } else {
            ZERO
        }
    });
    DenseOperator::new(&vecs * phases * vecs.adjoint())
}

/// Places `op` on the listed qubits of an `n_total` register, identity
/// elsewhere. `op`'s qubit `k` is mapped to `on_qubits[k]`.
pub fn embed(op: &DenseOperator, on_qubits: &[usize], n_total: usize) -> Result<DenseOperator> {
    if op.n_qubits != on_qubits.len() {
        return Err(Error::Dimension {
            expected: 1 << on_qubits.len(),
            found: op.dim(),
        });
    }
    validate_qubit_list(on_qubits, n_total)?;
    let mut full = DenseOperator::identity(n_total)?;
    full.apply_local_left(op.matrix(), on_qubits);
    Ok(full)
}

/// `Tr ρ²`.
pub fn purity(rho: &DenseOperator) -> f64 {
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}

/// Second Rényi entropy `-log₂ Tr ρ²`.
pub fn renyi2_entropy(rho: &DenseOperator) -> f64 {
    -purity(rho).log2()
}

/// Von Neumann entropy in bits, computed from the spectrum.
pub fn von_neumann_entropy(rho: &DenseOperator) -> Result<f64> {
    let (values, _) = hermitian_eigen(rho)?;
    Ok(values
        .into_iter()
        .filter(|&p| p >= ENTROPY_CUTOFF)
        .map(|p| -p * p.log2())
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pauli_x() -> DenseOperator {
        DenseOperator::from_row_slice(&[ZERO, ONE, ONE, ZERO]).unwrap()
    }

    fn pauli_z() -> DenseOperator {
        DenseOperator::diagonal(&[ONE, -ONE]).unwrap()
    }

    fn pseudo_random(n: usize, seed: u64) -> DenseOperator {
        let mut s = seed;
        DenseOperator::from_fn(n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
            c(a, b)
        })
        .unwrap()
    }

    fn hermitian(n: usize, seed: u64) -> DenseOperator {
        let g = pseudo_random(n, seed);
        (&g + &g.dagger()).scaled(c(0.5, 0.0))
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = DenseOperator::identity(1).unwrap();
        let i4 = kron(&i2, &i2).unwrap();
        assert_eq!(i4, DenseOperator::identity(2).unwrap());
    }

    #[test]
    fn kron_zz_is_diagonal_parity() {
        let zz = kron(&pauli_z(), &pauli_z()).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| zz[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn kron_matches_index_formula() {
        let a = pauli_x();
        let b = pauli_z();
        let k = kron(&a, &b).unwrap();
        for i1 in 0..2 {
            for i2 in 0..2 {
                for j1 in 0..2 {
                    for j2 in 0..2 {
                        assert_eq!(k[(2 * i1 + i2, 2 * j1 + j2)], a[(i1, j1)] * b[(i2, j2)]);
                    }
                }
            }
        }
    }

    #[test]
    fn kron_rejects_oversized_result() {
        let big = DenseOperator::identity(7).unwrap();
        assert!(matches!(kron(&big, &big), Err(Error::Size(_))));
    }

    #[test]
    fn partial_trace_of_product_state() {
        let rho_a = {
            let psi = StateVector::from_slice(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
            psi.projector().unwrap()
        };
        let mixed = DenseOperator::identity(2).unwrap().scaled(c(0.25, 0.0));
        let joint = kron(&rho_a, &mixed).unwrap();
        let reduced = partial_trace(&joint, 3, &[0]).unwrap();
        assert!(reduced.max_abs_diff(&rho_a) < 1e-14);
    }

    #[test]
    fn bell_pair_marginal_is_maximally_mixed() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = StateVector::from_slice(&[c(h, 0.0), ZERO, ZERO, c(h, 0.0)]).unwrap();
        let rho = bell.projector().unwrap();
        let half = DenseOperator::identity(1).unwrap().scaled(c(0.5, 0.0));
        for q in 0..2 {
            assert!(partial_trace(&rho, 2, &[q]).unwrap().max_abs_diff(&half) < 1e-15);
        }
        assert!(reduced_density(&bell, &[1]).unwrap().max_abs_diff(&half) < 1e-15);
    }

    #[test]
    fn partial_trace_matches_index_summation() {
        let g = pseudo_random(3, 7);
        let rho = &g * &g.dagger();
        let rho = rho.scaled(C64::from(1.0 / rho.trace().re));
        let reduced = partial_trace(&rho, 3, &[0, 2]).unwrap();
        // keep qubits 0 and 2, trace qubit 1: index = 4*q0 + 2*q1 + q2
        for a0 in 0..2 {
            for a2 in 0..2 {
                for b0 in 0..2 {
                    for b2 in 0..2 {
                        let mut acc = ZERO;
                        for t in 0..2 {
                            acc += rho[(4 * a0 + 2 * t + a2, 4 * b0 + 2 * t + b2)];
                        }
                        let got = reduced[(2 * a0 + a2, 2 * b0 + b2)];
                        assert!((got - acc).norm() <= 1e-12);
                    }
                }
            }
        }
        assert!((reduced.trace() - rho.trace()).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_keep() {
        let rho = DenseOperator::identity(2).unwrap();
        assert!(matches!(partial_trace(&rho, 2, &[2]), Err(Error::Argument(_))));
    }

    #[test]
    fn partial_trace_composes() {
        let g = pseudo_random(4, 3);
        let rho = &g * &g.dagger();
        let once = partial_trace(&rho, 4, &[0, 3]).unwrap();
        let step = partial_trace(&rho, 4, &[0, 2, 3]).unwrap();
        let twice = partial_trace(&step, 3, &[0, 2]).unwrap();
        assert!(once.max_abs_diff(&twice) <= 1e-12);
    }

    #[test]
    fn reduced_density_agrees_with_partial_trace() {
        let amps: Vec<C64> = (0..16).map(|k| c((k as f64).sin(), (k as f64 * 0.3).cos())).collect();
        let psi = StateVector::from_slice(&amps).unwrap();
        let rho = psi.projector().unwrap();
        let a = reduced_density(&psi, &[1, 3]).unwrap();
        let b = partial_trace(&rho, 4, &[1, 3]).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn herm_exp_zero_angle_is_identity() {
        let v = hermitian(2, 11);
        let u = herm_exp(&v, 0.0).unwrap();
        assert!(u.max_abs_diff(&DenseOperator::identity(2).unwrap()) < 1e-12);
    }

    #[test]
    fn herm_exp_of_z() {
        let u = herm_exp(&pauli_z(), PI / 2.0).unwrap();
        assert!((u[(0, 0)] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((u[(1, 1)] - c(0.0, 1.0)).norm() < 1e-14);
        assert!(u[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn herm_exp_inverse_and_additivity() {
        let v = hermitian(3, 5);
        let fwd = herm_exp(&v, 0.7).unwrap();
        let back = herm_exp(&v, -0.7).unwrap();
        assert!((&fwd * &back).max_abs_diff(&DenseOperator::identity(3).unwrap()) < 1e-10);
        assert!(fwd.is_unitary(1e-10));
        let sum = herm_exp(&v, 0.7 + 1.9).unwrap();
        let prod = &herm_exp(&v, 1.9).unwrap() * &fwd;
        assert!(sum.max_abs_diff(&prod) < 1e-9);
    }

    #[test]
    fn herm_exp_rejects_non_hermitian() {
        let g = pseudo_random(1, 2);
        assert!(matches!(herm_exp(&g, 1.0), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn embed_single_qubit() {
        let e = embed(&pauli_x(), &[0], 2).unwrap();
        let expect = kron(&pauli_x(), &DenseOperator::identity(1).unwrap()).unwrap();
        assert_eq!(e, expect);
    }

    #[test]
    fn embed_swap_is_order_symmetric() {
        let swap = DenseOperator::from_fn(2, |r, c| {
            let swapped = ((r & 1) << 1) | (r >> 1);
            if swapped == c { ONE } else { ZERO }
        })
        .unwrap();
        assert_eq!(embed(&swap, &[1, 0], 2).unwrap(), swap);
    }

    #[test]
    fn embed_matches_permuted_kron() {
        let g = pseudo_random(2, 9);
        let e = embed(&g, &[1, 2], 4).unwrap();
        let id = DenseOperator::identity(1).unwrap();
        let expect = kron(&kron(&id, &g).unwrap(), &id).unwrap();
        assert!(e.max_abs_diff(&expect) <= 1e-12);
        // reversed placement: conjugate by the swap of the two local factors
        let e_rev = embed(&g, &[2, 1], 4).unwrap();
        for r in 0..16usize {
            for col in 0..16usize {
                let flip = |i: usize| {
                    let b1 = (i >> 2) & 1;
                    let b2 = (i >> 1) & 1;
                    (i & !0b110) | (b2 << 2) | (b1 << 1)
                };
                assert!((e_rev[(r, col)] - expect[(flip(r), flip(col))]).norm() <= 1e-12);
            }
        }
        assert!((e.trace() - g.trace() * 4.0).norm() < 1e-12);
    }

    #[test]
    fn embed_rejects_duplicates() {
        let g = pseudo_random(2, 1);
        assert!(matches!(embed(&g, &[1, 1], 3), Err(Error::Argument(_))));
    }

    #[test]
    fn apply_local_right_matches_product() {
        let a = pseudo_random(3, 21);
        let g = pseudo_random(2, 22);
        let mut right = a.clone();
        right.apply_local_right(g.matrix(), &[2, 0]);
        let expect = &a * &embed(&g, &[2, 0], 3).unwrap();
        assert!(right.max_abs_diff(&expect) < 1e-13);
    }

    #[test]
    fn entropies_of_simple_states() {
        let mixed = DenseOperator::identity(2).unwrap().scaled(c(0.25, 0.0));
        assert!((von_neumann_entropy(&mixed).unwrap() - 2.0).abs() < 1e-12);
        assert!((renyi2_entropy(&mixed) - 2.0).abs() < 1e-12);
        let pure = StateVector::basis(2, 1).unwrap().projector().unwrap();
        assert!(von_neumann_entropy(&pure).unwrap().abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_of_pauli_and_scaled() {
        assert!((pauli_x().spectral_norm() - 1.0).abs() < 1e-14);
        assert!((pauli_z().scaled(c(0.0, 3.0)).spectral_norm() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn state_vector_normalizes() {
        let psi = StateVector::from_slice(&[c(3.0, 0.0), c(0.0, 4.0)]).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-15);
        assert!(StateVector::from_slice(&[ZERO, ZERO]).is_err());
        assert!(StateVector::from_slice(&[ONE, ZERO, ZERO]).is_err());
    }
}
