//! Loss, true error and its OTOC bounds, loss variants, the cost function
//! and the Levy concentration constants.
//!
//! Input states have the product form `ρ = |ψ⟩⟨ψ|_A ⊗ I_B / d_B`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::circuit::SubsystemPartition;
use crate::error::{Error, Result};
use crate::linalg::{kron, DenseOperator, StateVector, ONE};
use crate::pauli::PauliString;
use crate::scrambling::{
    c_actions, check_density, check_unitary, correlator_from_outputs, op_correlator, otoc, otoc_scram,
    renyi2_ac, tripartite_mi,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBundle {
    pub l: f64,
    pub l_plus: f64,
    pub l_minus: f64,
    pub otoc_u: f64,
    pub otoc_us: f64,
    pub op_corr: f64,
    pub partition: SubsystemPartition,
}

impl ErrorBundle {
    pub fn from_parts(otoc_u: f64, otoc_us: f64, op_corr: f64, part: &SubsystemPartition) -> Self {
        let g = part.g();
        let (ra, rb) = (otoc_u.max(0.0).sqrt(), otoc_us.max(0.0).sqrt());
        Self {
            l: g * (otoc_u + otoc_us - 2.0 * op_corr),
            l_plus: g * (ra + rb).powi(2),
            l_minus: g * (ra - rb).powi(2),
            otoc_u,
            otoc_us,
            op_corr,
            partition: *part,
        }
    }

    /// `L₋ ≤ L ≤ L₊` up to `slack`.
    pub fn is_ordered(&self, slack: f64) -> bool {
        self.l_minus <= self.l + slack && self.l <= self.l_plus + slack
    }

    /// Allowed distance `4G√(OTOC(U)·OTOC(U_S))` between `L` and either bound.
    pub fn gap_limit(&self) -> f64 {
        4.0 * self.partition.g() * (self.otoc_u * self.otoc_us).max(0.0).sqrt()
    }

    pub fn gap_holds(&self, slack: f64) -> bool {
        let limit = self.gap_limit() + slack;
        (self.l - self.l_plus).abs() <= limit && (self.l - self.l_minus).abs() <= limit
    }
}

fn check_psi(psi_a: &StateVector, part: &SubsystemPartition) -> Result<()> {
    if psi_a.n_qubits() != part.n_a {
        return Err(Error::Dimension {
            expected: 1 << part.n_a,
            found: psi_a.dim(),
        });
    }
    Ok(())
}

/// `|ψ⟩⟨ψ|_A ⊗ I_B / d_B` on the full register.
pub fn product_input(psi_a: &StateVector, part: &SubsystemPartition) -> Result<DenseOperator> {
    check_psi(psi_a, part)?;
    let mixed = DenseOperator::identity(part.n_b)?.scaled(C64::from(1.0 / part.d_b()));
    kron(&psi_a.projector()?, &mixed)
}

/// `U ρ U†` for the product input built from `psi_a`, without forming `ρ`.
pub fn evolved_input(u: &DenseOperator, psi_a: &StateVector, part: &SubsystemPartition) -> Result<DMatrix<C64>> {
    part.check_operator(u)?;
    check_psi(psi_a, part)?;
    let d_b = 1usize << part.n_b;
    let um = u.matrix();
    let amps = psi_a.amplitudes();
    let mut k = DMatrix::<C64>::zeros(u.dim(), d_b);
    for b in 0..d_b {
        for (a, psi) in amps.iter().enumerate() {
            let col = um.column(a * d_b + b);
            let mut dst = k.column_mut(b);
            dst.axpy(*psi, &col, ONE);
        }
    }
    Ok(&k * k.adjoint() / C64::from(part.d_b()))
}

/// `Tr(X O_C)` for every string on C, in enumeration order.
fn c_expectations(x: &DMatrix<C64>, part: &SubsystemPartition) -> Result<Vec<f64>> {
    Ok(c_actions(part)?.iter().map(|pc| pc.trace_with(x).re).collect())
}

/// Loss `⟨O_C⟩ |ỹ − y|²` by the literal sum over strings on C.
pub fn loss_ld(u: &DenseOperator, u_s: &DenseOperator, psi_a: &StateVector, part: &SubsystemPartition) -> Result<f64> {
    let x = evolved_input(u, psi_a, part)?;
    let y = evolved_input(u_s, psi_a, part)?;
    let ex = c_expectations(&x, part)?;
    let ey = c_expectations(&y, part)?;
    let sum: f64 = ex.iter().zip(&ey).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(sum / ex.len() as f64)
}

/// Loss as `d_D² (C_d(U,U) + C_d(U_S,U_S) − 2 C_d(U,U_S))`.
pub fn loss_ld_correlator(
    u: &DenseOperator,
    u_s: &DenseOperator,
    psi_a: &StateVector,
    part: &SubsystemPartition,
) -> Result<f64> {
    let x = evolved_input(u, psi_a, part)?;
    let y = evolved_input(u_s, psi_a, part)?;
    let c_uu = correlator_from_outputs(&x, &x, part)?.re;
    let c_ss = correlator_from_outputs(&y, &y, part)?.re;
    let c_us = correlator_from_outputs(&x, &y, part)?.re;
    let dd2 = part.d_d() * part.d_d();
    Ok(dd2 * (c_uu + c_ss - 2.0 * c_us))
}

/// True error `G[OTOC(U) + OTOC(U_S) − 2 OP(U,U_S)]` with its bounds.
pub fn true_error_analytic(u: &DenseOperator, u_s: &DenseOperator, part: &SubsystemPartition) -> Result<ErrorBundle> {
    let otoc_u = otoc(u, part)?.value;
    let otoc_us = otoc(u_s, part)?.value;
    let op = op_correlator(u, u_s, part)?;
    Ok(ErrorBundle::from_parts(otoc_u, otoc_us, op, part))
}

/// Expected true error against a Haar-random target.
pub fn l_scram_from_otoc(otoc_u: f64, part: &SubsystemPartition) -> f64 {
    let da2 = part.d_a() * part.d_a();
    part.g() * (otoc_u + otoc_scram(part) - 2.0 / da2)
}

pub fn l_scram(u: &DenseOperator, part: &SubsystemPartition) -> Result<f64> {
    Ok(l_scram_from_otoc(otoc(u, part)?.value, part))
}

/// `L_scram` when `U` itself is maximally scrambling.
pub fn l_floor(part: &SubsystemPartition) -> f64 {
    let da2 = part.d_a() * part.d_a();
    2.0 * part.g() * (otoc_scram(part) - 1.0 / da2)
}

/// Behaviour `2 / (d_B d_tot)` of [`l_floor`] for large `d_A`.
pub fn l_floor_asymptote(part: &SubsystemPartition) -> f64 {
    2.0 / (part.d_b() * part.d_tot())
}

/// `(L₊, L₋)` from the Choi AC Rényi entropies of both unitaries.
pub fn renyi_bound(u: &DenseOperator, u_s: &DenseOperator, part: &SubsystemPartition) -> Result<(f64, f64)> {
    check_unitary(u)?;
    check_unitary(u_s)?;
    let s_u = renyi2_ac(u, part)?;
    let s_s = renyi2_ac(u_s, part)?;
    let pre = ((part.n_total - part.n_a) as f64 - part.n_d as f64).exp2() * part.g();
    let (a, b) = ((-s_u / 2.0).exp2(), (-s_s / 2.0).exp2());
    Ok((pre * (a + b).powi(2), pre * (a - b).powi(2)))
}

/// Lower bound on `L` from the tripartite mutual information.
pub fn mi_lower_bound(u: &DenseOperator, u_s: &DenseOperator, part: &SubsystemPartition) -> Result<f64> {
    let i3_u = tripartite_mi(u, part)?;
    let i3_s = tripartite_mi(u_s, part)?;
    let op = op_correlator(u, u_s, part)?;
    let two_na = 2.0 * part.n_a as f64;
    let term = |i3: f64| ((i3 - two_na) / 2.0).exp2();
    Ok(part.g() * (term(i3_u) + term(i3_s) - 2.0 * op))
}

/// Sample averages of the three subset-loss variants, with the full-group
/// loss on the same samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossVariants {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    /// Sample mean of the full-group loss on the same states.
    pub l_empirical: f64,
    pub subset_size: usize,
    pub n_samples: usize,
}

impl LossVariants {
    /// `V3² ≤ V2 ≤ V1 ≤ (d_C²/|S_C|) L`, each step with `slack`.
    pub fn chain_holds(&self, part: &SubsystemPartition, slack: f64) -> bool {
        let scale = part.d_c() * part.d_c() / self.subset_size as f64;
        self.v3 * self.v3 <= self.v2 + slack && self.v2 <= self.v1 + slack && self.v1 <= scale * self.l_empirical + slack
    }

    /// Last link of the chain against an upper bound on `L`.
    pub fn scaled_bound(&self, part: &SubsystemPartition, l_plus: f64) -> f64 {
        part.d_c() * part.d_c() / self.subset_size as f64 * l_plus
    }
}

pub fn loss_variants(
    u: &DenseOperator,
    u_s: &DenseOperator,
    psi_samples: &[StateVector],
    s_c: &[PauliString],
    part: &SubsystemPartition,
) -> Result<LossVariants> {
    if s_c.is_empty() {
        return Err(Error::Argument("subset of C strings is empty".into()));
    }
    if psi_samples.is_empty() {
        return Err(Error::Argument("no input states".into()));
    }
    let c_q = part.c_qubits();
    let subset = s_c
        .iter()
        .map(|p| {
            if p.n_qubits() != part.n_c {
                return Err(Error::Dimension {
                    expected: part.n_c,
                    found: p.n_qubits(),
                });
            }
            p.action(&c_q, part.n_total)
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut v1, mut v2, mut v3, mut l_sum) = (0.0, 0.0, 0.0, 0.0);
    for psi in psi_samples {
        let x = evolved_input(u, psi, part)?;
        let y = evolved_input(u_s, psi, part)?;
        let diffs: Vec<f64> = subset
            .iter()
            .map(|pc| pc.trace_with(&x).re - pc.trace_with(&y).re)
            .collect();
        let m = subset.len() as f64;
        let mean_diff = diffs.iter().sum::<f64>() / m;
        v1 += diffs.iter().map(|d| d * d).sum::<f64>() / m;
        v2 += mean_diff * mean_diff;
        v3 += mean_diff.abs();
        let ex = c_expectations(&x, part)?;
        let ey = c_expectations(&y, part)?;
        l_sum += ex.iter().zip(&ey).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / ex.len() as f64;
    }
    let n = psi_samples.len() as f64;
    Ok(LossVariants {
        v1: v1 / n,
        v2: v2 / n,
        v3: v3 / n,
        l_empirical: l_sum / n,
        subset_size: s_c.len(),
        n_samples: psi_samples.len(),
    })
}

/// Cost `⟨O_C⟩ ỹ²` by the literal sum over strings on C.
pub fn cost(u: &DenseOperator, rho: &DenseOperator, part: &SubsystemPartition) -> Result<f64> {
    part.check_operator(u)?;
    part.check_operator(rho)?;
    check_density(rho)?;
    let x = &(u * rho) * &u.dagger();
    let ex = c_expectations(x.matrix(), part)?;
    Ok(ex.iter().map(|e| e * e).sum::<f64>() / ex.len() as f64)
}

/// Cost as `d_D² C_d(U, U)`.
pub fn cost_correlator(u: &DenseOperator, rho: &DenseOperator, part: &SubsystemPartition) -> Result<f64> {
    part.check_operator(u)?;
    part.check_operator(rho)?;
    check_density(rho)?;
    let x = &(u * rho) * &u.dagger();
    let c = correlator_from_outputs(x.matrix(), x.matrix(), part)?.re;
    Ok(part.d_d() * part.d_d() * c)
}

/// Haar average of the cost over `ψ_A`: `G[1/d_A + OTOC(U)]`.
pub fn cost_av(u: &DenseOperator, part: &SubsystemPartition) -> Result<f64> {
    Ok(cost_av_from_otoc(otoc(u, part)?.value, part))
}

pub fn cost_av_from_otoc(otoc_u: f64, part: &SubsystemPartition) -> f64 {
    part.g() * (1.0 / part.d_a() + otoc_u)
}

/// `√((9π³ / 2d_A) ln(2/ε))`.
pub fn levy_f(epsilon: f64, d_a: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Argument(format!("epsilon {epsilon} outside (0, 1)")));
    }
    Ok((9.0 * PI.powi(3) / (2.0 * d_a) * (2.0 / epsilon).ln()).sqrt())
}

/// Concentration widths for the loss, its gradient, the cost and the cost
/// gradient, with `‖V_l‖ = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevyBundle {
    pub epsilon: f64,
    pub f_eps: f64,
    pub eta: f64,
    pub eta_g: f64,
    pub eta_c: f64,
    pub eta_cg: f64,
}

impl LevyBundle {
    /// Lipschitz constants from precomputed `L₊` and `OTOC(U)`.
    pub fn from_parts(l_plus: f64, otoc_u: f64, part: &SubsystemPartition, epsilon: f64) -> Result<Self> {
        let d_a = part.d_a();
        let f_eps = levy_f(epsilon, d_a)?;
        let root = (d_a * (d_a + 1.0) * l_plus.max(0.0)).sqrt();
        let cost_root = d_a.sqrt() * d_a / part.d_c() * otoc_u.max(0.0).sqrt();
        Ok(Self {
            epsilon,
            f_eps,
            eta: 8.0 * root,
            eta_g: 8.0 * (root + 2.0),
            eta_c: 4.0 * cost_root,
            eta_cg: 8.0 * (cost_root + 1.0),
        })
    }

    pub fn loss_width(&self) -> f64 {
        self.eta * self.f_eps
    }

    pub fn grad_width(&self) -> f64 {
        self.eta_g * self.f_eps
    }

    pub fn cost_width(&self) -> f64 {
        self.eta_c * self.f_eps
    }

    pub fn cost_grad_width(&self) -> f64 {
        self.eta_cg * self.f_eps
    }
}

pub fn levy_bundle(u: &DenseOperator, u_s: &DenseOperator, part: &SubsystemPartition, epsilon: f64) -> Result<LevyBundle> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Argument(format!("epsilon {epsilon} outside (0, 1)")));
    }
    let otoc_u = otoc(u, part)?.value;
    let otoc_us = otoc(u_s, part)?.value;
    let l_plus = part.g() * (otoc_u.sqrt() + otoc_us.sqrt()).powi(2);
    LevyBundle::from_parts(l_plus, otoc_u, part, epsilon)
}

/// Loss width `η f(ε)` when both unitaries are maximally scrambling.
pub fn loss_width_scrambled(part: &SubsystemPartition, epsilon: f64) -> Result<f64> {
    levy_f(epsilon, 1.0).map(|f| 16.0 / part.d_c() * f)
}

/// Gradient width `η_g f(ε)` when both unitaries are maximally scrambling.
pub fn grad_width_scrambled(part: &SubsystemPartition, epsilon: f64, v_norm: f64) -> Result<f64> {
    levy_f(epsilon, 1.0).map(|f| 16.0 * v_norm * (1.0 / part.d_c() + 1.0 / part.d_a().sqrt()) * f)
}
