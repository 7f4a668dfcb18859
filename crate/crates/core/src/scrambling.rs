//! Scrambling measures: averaged OTOC by Pauli sums and by the Choi-state
//! Rényi entropy, the cross-correlator OP, the `C_d` correlator, commutator
//! norms and the tripartite mutual information.
//!
//! Pauli averages include the identity string.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::SubsystemPartition;
use crate::error::{Error, Result};
use crate::linalg::{
    partial_trace, reduced_density, von_neumann_entropy, DenseOperator, StateVector,
    MAX_OPERATOR_QUBITS, MAX_VECTOR_QUBITS, ZERO,
};
use crate::pauli::{enumerate_group, PauliAction, PauliString};

/// Largest `N_A`, `N_D` for which Pauli double sums are evaluated.
pub const MAX_DIRECT_SUBSYSTEM: usize = 3;

const UNITARY_TOL: f64 = 1e-9;
const DENSITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OtocRoute {
    DirectAverage,
    Renyi,
}

impl OtocRoute {
    pub fn as_str(&self) -> &'static str {
        match self {
            OtocRoute::DirectAverage => "direct-average",
            OtocRoute::Renyi => "renyi",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OtocReport {
    pub value: f64,
    pub route: OtocRoute,
    pub partition: SubsystemPartition,
}

pub(crate) fn check_unitary(u: &DenseOperator) -> Result<()> {
    let err = u.unitarity_error();
    if err > UNITARY_TOL {
        return Err(Error::NotUnitary(err));
    }
    Ok(())
}

fn check_direct(part: &SubsystemPartition) -> Result<()> {
    if part.n_a > MAX_DIRECT_SUBSYSTEM || part.n_d > MAX_DIRECT_SUBSYSTEM {
        return Err(Error::Size(format!(
            "direct Pauli sums need N_A, N_D <= {MAX_DIRECT_SUBSYSTEM} (got {}, {})",
            part.n_a, part.n_d
        )));
    }
    Ok(())
}

/// Strings on A and on D as full-register actions.
pub(crate) fn a_actions(part: &SubsystemPartition) -> Result<Vec<PauliAction>> {
    let q = part.a_qubits();
    enumerate_group(part.n_a)?
        .iter()
        .map(|p| p.action(&q, part.n_total))
        .collect()
}

pub(crate) fn d_actions(part: &SubsystemPartition) -> Result<Vec<PauliAction>> {
    let q = part.d_qubits();
    enumerate_group(part.n_d)?
        .iter()
        .map(|p| p.action(&q, part.n_total))
        .collect()
}

pub(crate) fn c_actions(part: &SubsystemPartition) -> Result<Vec<PauliAction>> {
    let q = part.c_qubits();
    enumerate_group(part.n_c)?
        .iter()
        .map(|p| p.action(&q, part.n_total))
        .collect()
}

/// `u P u†` for a Pauli action `P`, with `u_dag` precomputed.
pub(crate) fn conjugate_by(u: &DMatrix<C64>, u_dag: &DMatrix<C64>, p: &PauliAction) -> DMatrix<C64> {
    u * p.left_mul(u_dag)
}

/// `⟨O_A⟩⟨O_D⟩ Tr(M₁ O_D M₂ O_D) / d_tot` where `build` maps each O_A to
/// the pair `(M₁, M₂)`. The reduction order is fixed.
pub(crate) fn averaged_sandwich<F>(part: &SubsystemPartition, build: F) -> Result<C64>
where
    F: Fn(&PauliAction) -> (DMatrix<C64>, DMatrix<C64>) + Sync,
{
    check_direct(part)?;
    let a_set = a_actions(part)?;
    let d_set = d_actions(part)?;
    let per_a: Vec<C64> = a_set
        .par_iter()
        .map(|pa| {
            let (m1, m2) = build(pa);
            d_set.iter().map(|pd| pd.sandwich_trace(&m1, &m2)).sum::<C64>()
        })
        .collect();
    let total: C64 = per_a.iter().sum();
    let norm = (a_set.len() * d_set.len()) as f64 * part.d_tot();
    Ok(total / norm)
}

/// Averaged OTOC by the literal Pauli double sum.
pub fn otoc_direct(u: &DenseOperator, part: &SubsystemPartition) -> Result<OtocReport> {
    part.check_operator(u)?;
    check_unitary(u)?;
    let um = u.matrix();
    let u_dag = um.adjoint();
    let value = averaged_sandwich(part, |pa| {
        let m = conjugate_by(um, &u_dag, pa);
        (m.clone(), m)
    })?;
    Ok(OtocReport {
        value: value.re,
        route: OtocRoute::DirectAverage,
        partition: *part,
    })
}

/// Choi amplitudes arranged as a matrix with rows indexed by `(a, c)` and
/// columns by `(b, d)`.
fn choi_ac_block(u: &DenseOperator, part: &SubsystemPartition) -> DMatrix<C64> {
    let d_b = 1usize << part.n_b;
    let d_d = 1usize << part.n_d;
    let d_c = 1usize << part.n_c;
    let d_a = 1usize << part.n_a;
    let scale = 1.0 / part.d_tot().sqrt();
    let um = u.matrix();
    DMatrix::from_fn(d_a * d_c, d_b * d_d, |row, col| {
        let (a, c) = (row / d_c, row % d_c);
        let (b, dd) = (col / d_d, col % d_d);
        um[(c * d_d + dd, a * d_b + b)] * scale
    })
}

/// `Tr ρ_AC²` of the Choi state, from the smaller Gram matrix.
pub fn choi_ac_purity(u: &DenseOperator, part: &SubsystemPartition) -> Result<f64> {
    part.check_operator(u)?;
    let m = choi_ac_block(u, part);
    let gram = if m.nrows() <= m.ncols() {
        &m * m.adjoint()
    } else {
        m.adjoint() * &m
    };
    Ok(gram.iter().map(|z| z.norm_sqr()).sum())
}

/// Second Rényi entropy of the Choi AC marginal, in bits.
pub fn renyi2_ac(u: &DenseOperator, part: &SubsystemPartition) -> Result<f64> {
    Ok(-choi_ac_purity(u, part)?.log2())
}

/// Averaged OTOC as `2^{N − N_A − N_D − S₂(AC)}`.
pub fn otoc_renyi(u: &DenseOperator, part: &SubsystemPartition) -> Result<OtocReport> {
    part.check_operator(u)?;
    check_unitary(u)?;
    let s2 = renyi2_ac(u, part)?;
    let exponent = part.n_total as f64 - part.n_a as f64 - part.n_d as f64 - s2;
    Ok(OtocReport {
        value: exponent.exp2(),
        route: OtocRoute::Renyi,
        partition: *part,
    })
}

/// Averaged OTOC by whichever route is available: the Pauli sum for small
/// subsystems, otherwise the Rényi route.
pub fn otoc(u: &DenseOperator, part: &SubsystemPartition) -> Result<OtocReport> {
    if part.n_a <= MAX_DIRECT_SUBSYSTEM && part.n_d <= MAX_DIRECT_SUBSYSTEM && part.n_total <= 6 {
        otoc_direct(u, part)
    } else {
        otoc_renyi(u, part)
    }
}

/// Averaged OTOC of a Haar-random unitary.
pub fn otoc_scram(part: &SubsystemPartition) -> f64 {
    let d2 = part.d_tot() * part.d_tot();
    let da2 = part.d_a() * part.d_a();
    let dc2 = part.d_c() * part.d_c();
    (d2 / da2 - 1.0 + dc2 * (1.0 - 1.0 / da2)) / (d2 - 1.0)
}

/// Large-register limit of [`otoc_scram`].
pub fn otoc_scram_limit(part: &SubsystemPartition) -> f64 {
    let da2 = part.d_a() * part.d_a();
    let dd2 = part.d_d() * part.d_d();
    1.0 / da2 + 1.0 / dd2 - 1.0 / (da2 * dd2)
}

/// Cross-correlator `OP(U, U_S)`: the OTOC double average with the second
/// conjugation by `u_s`.
pub fn op_correlator(u: &DenseOperator, u_s: &DenseOperator, part: &SubsystemPartition) -> Result<f64> {
    part.check_operator(u)?;
    part.check_operator(u_s)?;
    check_unitary(u)?;
    check_unitary(u_s)?;
    let (um, sm) = (u.matrix(), u_s.matrix());
    let (u_dag, s_dag) = (um.adjoint(), sm.adjoint());
    let value = averaged_sandwich(part, |pa| (conjugate_by(um, &u_dag, pa), conjugate_by(sm, &s_dag, pa)))?;
    Ok(value.re)
}

pub(crate) fn check_density(rho: &DenseOperator) -> Result<()> {
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
        return Err(Error::InvalidState(format!("trace {tr} is not 1")));
    }
    let herm = rho.hermiticity_error();
    if herm > DENSITY_TOL {
        return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:.3e})")));
    }
    let eig = rho.matrix().clone().symmetric_eigenvalues();
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -DENSITY_TOL {
        return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
    }
    Ok(())
}

/// `C_d(U₁, U₂) = ⟨O_D⟩ Tr(U₁ρU₁† O_D U₂ρU₂† O_D) / d_tot` by the Pauli sum
/// over D.
pub fn correlator_cd(
    u1: &DenseOperator,
    u2: &DenseOperator,
    rho: &DenseOperator,
    part: &SubsystemPartition,
) -> Result<f64> {
    for op in [u1, u2, rho] {
        part.check_operator(op)?;
    }
    check_density(rho)?;
    let x = &(u1 * rho) * &u1.dagger();
    let y = &(u2 * rho) * &u2.dagger();
    Ok(correlator_from_outputs(x.matrix(), y.matrix(), part)?.re)
}

pub(crate) fn correlator_from_outputs(x: &DMatrix<C64>, y: &DMatrix<C64>, part: &SubsystemPartition) -> Result<C64> {
    let d_set = d_actions(part)?;
    let sum: C64 = d_set.iter().map(|pd| pd.sandwich_trace(x, y)).sum();
    Ok(sum / (d_set.len() as f64 * part.d_tot()))
}

/// `C_d` through the output-C identity:
/// `d_D² C_d = ⟨O_C⟩ Tr(U₁ρU₁† O_C) Tr(U₂ρU₂† O_C)`.
pub fn correlator_cd_via_c(
    u1: &DenseOperator,
    u2: &DenseOperator,
    rho: &DenseOperator,
    part: &SubsystemPartition,
) -> Result<f64> {
    for op in [u1, u2, rho] {
        part.check_operator(op)?;
    }
    check_density(rho)?;
    let x = &(u1 * rho) * &u1.dagger();
    let y = &(u2 * rho) * &u2.dagger();
    let c_set = c_actions(part)?;
    let sum: f64 = c_set
        .iter()
        .map(|pc| (pc.trace_with(x.matrix()) * pc.trace_with(y.matrix())).re)
        .sum();
    let dd2 = part.d_d() * part.d_d();
    Ok(sum / c_set.len() as f64 / dd2)
}

/// `‖[U† O_D U, O_A]‖_HS` for strings `o_a` on A and `o_d` on D.
pub fn commutator_hs_norm(
    u: &DenseOperator,
    o_a: &PauliString,
    o_d: &PauliString,
    part: &SubsystemPartition,
) -> Result<f64> {
    part.check_operator(u)?;
    let oa = o_a.to_matrix(&part.a_qubits(), part.n_total)?;
    let od = o_d.to_matrix(&part.d_qubits(), part.n_total)?;
    let w = &(&u.dagger() * &od) * u;
    let comm = &(&w * &oa) - &(&oa * &w);
    Ok(comm.frobenius_norm())
}

/// The same norm from `√(2 d_tot (1 − ⟨O_D(t) O_A O_D(t) O_A⟩))`.
pub fn commutator_hs_norm_via_correlator(
    u: &DenseOperator,
    o_a: &PauliString,
    o_d: &PauliString,
    part: &SubsystemPartition,
) -> Result<f64> {
    part.check_operator(u)?;
    let oa = o_a.action(&part.a_qubits(), part.n_total)?;
    let od = o_d.to_matrix(&part.d_qubits(), part.n_total)?;
    let w = &(&u.dagger() * &od) * u;
    let corr = oa.sandwich_trace(w.matrix(), w.matrix()).re / part.d_tot();
    Ok((2.0 * part.d_tot() * (1.0 - corr)).max(0.0).sqrt())
}

/// Pure Choi state `(1/√d) Σ_i |i⟩ ⊗ U|i⟩` on `2N` qubits: the input copy
/// is qubits `0..N`, the output copy `N..2N`.
#[derive(Clone, Debug)]
pub struct ChoiState {
    n_qubits: usize,
    vector: StateVector,
    partition: Option<SubsystemPartition>,
}

impl ChoiState {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn vector(&self) -> &StateVector {
        &self.vector
    }

    pub fn with_partition(mut self, part: SubsystemPartition) -> Result<Self> {
        if part.n_total != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: part.n_total,
            });
        }
        self.partition = Some(part);
        Ok(self)
    }

    pub fn partition(&self) -> Option<&SubsystemPartition> {
        self.partition.as_ref()
    }

    /// Projector `|U⟩⟨U|`; needs `2N` within the operator cap.
    pub fn density(&self) -> Result<DenseOperator> {
        self.vector.projector()
    }

    /// Register qubits of A, B (input copy) and C, D (output copy).
    pub fn labels(&self) -> Result<[Vec<usize>; 4]> {
        let part = self
            .partition
            .ok_or_else(|| Error::Argument("Choi state has no partition".into()))?;
        let n = self.n_qubits;
        Ok([
            part.a_qubits(),
            part.b_qubits(),
            part.c_qubits().iter().map(|q| q + n).collect(),
            part.d_qubits().iter().map(|q| q + n).collect(),
        ])
    }

    pub fn marginal(&self, keep: &[usize]) -> Result<DenseOperator> {
        reduced_density(&self.vector, keep)
    }

    /// Von Neumann entropy in bits of the marginal on `keep`, evaluated on
    /// whichever side of the cut is smaller.
    pub fn entropy(&self, keep: &[usize]) -> Result<f64> {
        let total = 2 * self.n_qubits;
        let complement: Vec<usize> = (0..total).filter(|q| !keep.contains(q)).collect();
        let side = if keep.len() <= complement.len() { keep } else { &complement[..] };
        if side.is_empty() {
            return Ok(0.0);
        }
        von_neumann_entropy(&self.marginal(side)?)
    }
}

pub fn choi(u: &DenseOperator) -> Result<ChoiState> {
    check_unitary(u)?;
    let n = u.n_qubits();
    if 2 * n > MAX_VECTOR_QUBITS {
        return Err(Error::Size(format!(
            "Choi state of {n} qubits needs {} > {MAX_VECTOR_QUBITS} qubits",
            2 * n
        )));
    }
    let d = u.dim();
    let scale = 1.0 / (d as f64).sqrt();
    let um = u.matrix();
    let mut amps = nalgebra::DVector::from_element(d * d, ZERO);
    for i in 0..d {
        for o in 0..d {
            amps[i * d + o] = um[(o, i)] * scale;
        }
    }
    Ok(ChoiState {
        n_qubits: n,
        vector: StateVector::new(amps)?,
        partition: None,
    })
}

/// `I(A:C) + I(A:D) − I(A:CD)` of the Choi state, in bits.
pub fn tripartite_mi(u: &DenseOperator, part: &SubsystemPartition) -> Result<f64> {
    part.check_operator(u)?;
    let state = choi(u)?.with_partition(*part)?;
    let [a, _, c, d] = state.labels()?;
    let join = |x: &[usize], y: &[usize]| -> Vec<usize> { x.iter().chain(y).copied().collect() };
    let cd = join(&c, &d);
    let s_a = state.entropy(&a)?;
    let s_c = state.entropy(&c)?;
    let s_d = state.entropy(&d)?;
    let s_cd = state.entropy(&cd)?;
    let s_ac = state.entropy(&join(&a, &c))?;
    let s_ad = state.entropy(&join(&a, &d))?;
    let s_acd = state.entropy(&join(&a, &cd))?;
    let i_ac = s_a + s_c - s_ac;
    let i_ad = s_a + s_d - s_ad;
    let i_acd = s_a + s_cd - s_acd;
    Ok(i_ac + i_ad - i_acd)
}

/// Reduced state of the output copy traced down to `keep` on the full
/// `2N`-qubit density, for small registers where the density fits.
pub fn choi_marginal_dense(u: &DenseOperator, keep: &[usize]) -> Result<DenseOperator> {
    let state = choi(u)?;
    if 2 * state.n_qubits > MAX_OPERATOR_QUBITS {
        return Err(Error::Size("Choi density exceeds the operator cap".into()));
    }
    partial_trace(&state.density()?, 2 * state.n_qubits, keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::build_brickwall;
    use crate::randmat::{haar_unitary, SeededRng};

    fn part(n: usize, a: usize, d: usize) -> SubsystemPartition {
        SubsystemPartition::new(n, a, d).unwrap()
    }

    #[test]
    fn identity_otoc_is_one() {
        let p = part(4, 1, 2);
        let id = DenseOperator::identity(4).unwrap();
        assert!((otoc_direct(&id, &p).unwrap().value - 1.0).abs() < 1e-12);
        assert!((otoc_renyi(&id, &p).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn routes_agree_on_haar() {
        let p = part(4, 2, 2);
        let mut rng = SeededRng::new(1);
        for _ in 0..3 {
            let u = haar_unitary(16, &mut rng).unwrap();
            let a = otoc_direct(&u, &p).unwrap().value;
            let b = otoc_renyi(&u, &p).unwrap().value;
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn scram_value_n8() {
        let p = part(8, 3, 3);
        assert!((otoc_scram(&p) - 2031.0 / 65535.0).abs() < 1e-15);
        let lim = otoc_scram_limit(&p);
        assert!((lim - (2.0 / 64.0 - 1.0 / 4096.0)).abs() < 1e-15);
    }

    #[test]
    fn op_of_self_is_otoc() {
        let p = part(4, 2, 1);
        let u = haar_unitary(16, &mut SeededRng::new(2)).unwrap();
        let op = op_correlator(&u, &u, &p).unwrap();
        assert!((op - otoc_direct(&u, &p).unwrap().value).abs() < 1e-12);
    }

    #[test]
    fn correlator_routes_agree() {
        let p = part(3, 1, 1);
        let mut rng = SeededRng::new(3);
        let u1 = haar_unitary(8, &mut rng).unwrap();
        let u2 = haar_unitary(8, &mut rng).unwrap();
        let psi = crate::randmat::haar_state(8, &mut rng).unwrap();
        let rho = psi.projector().unwrap();
        let a = correlator_cd(&u1, &u2, &rho, &p).unwrap();
        let b = correlator_cd_via_c(&u1, &u2, &rho, &p).unwrap();
        assert!((a - b).abs() < 1e-12);
        let mixed = DenseOperator::identity(3).unwrap().scaled(C64::from(1.0 / 8.0));
        let id = DenseOperator::identity(3).unwrap();
        let c = correlator_cd(&id, &id, &mixed, &p).unwrap();
        // every string squares to I, so C = d / d³
        assert!((c - 1.0 / 64.0).abs() < 1e-15);
        assert!((c - correlator_cd_via_c(&id, &id, &mixed, &p).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_density() {
        let p = part(2, 1, 1);
        let id = DenseOperator::identity(2).unwrap();
        assert!(matches!(correlator_cd(&id, &id, &id, &p), Err(Error::InvalidState(_))));
    }

    #[test]
    fn commutator_routes_and_identity() {
        let p = part(4, 1, 1);
        let u = build_brickwall(4, 5, &mut SeededRng::new(4)).unwrap().unitary();
        let oa: PauliString = "X".parse().unwrap();
        let od: PauliString = "Y".parse().unwrap();
        let a = commutator_hs_norm(&u, &oa, &od, &p).unwrap();
        let b = commutator_hs_norm_via_correlator(&u, &oa, &od, &p).unwrap();
        assert!((a - b).abs() < 1e-9);
        let id = DenseOperator::identity(4).unwrap();
        assert!(commutator_hs_norm(&id, &oa, &od, &p).unwrap() < 1e-14);
    }

    #[test]
    fn choi_of_identity_is_bell_stack() {
        let id = DenseOperator::identity(2).unwrap();
        let c = choi(&id).unwrap();
        let amps = c.vector().amplitudes();
        for i in 0..4 {
            for o in 0..4 {
                let expect = if i == o { 0.5 } else { 0.0 };
                assert!((amps[i * 4 + o].re - expect).abs() < 1e-15);
            }
        }
        let dense = choi_marginal_dense(&id, &[0, 1]).unwrap();
        let mixed = DenseOperator::identity(2).unwrap().scaled(C64::from(0.25));
        assert!(dense.max_abs_diff(&mixed) < 1e-15);
    }

    #[test]
    fn identity_tripartite_mi_is_zero() {
        let p = part(4, 1, 2);
        let id = DenseOperator::identity(4).unwrap();
        assert!(tripartite_mi(&id, &p).unwrap().abs() < 1e-9);
    }

    #[test]
    fn direct_route_size_guard() {
        let p = part(8, 4, 1);
        let id = DenseOperator::identity(8).unwrap();
        assert!(matches!(otoc_direct(&id, &p), Err(Error::Size(_))));
        assert!(otoc_renyi(&id, &p).is_ok());
    }
}
