//! Analytic parameter derivatives of the OTOC, OP, true error, loss and
//! cost, cross-checked by central finite differences, plus landscape scans.
//!
//! Every analytic route starts from `∂U = U₊(-iV_l)U₋`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{BrickWallCircuit, InitMode, SubsystemPartition};
use crate::error::{Error, Result};
use crate::linalg::{DenseOperator, StateVector, ONE};
use crate::loss::{l_scram, true_error_analytic};
use crate::pauli::PauliAction;
use crate::scrambling::{averaged_sandwich, c_actions, check_density, op_correlator, otoc};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;
pub const FD_REL_TOL: f64 = 1e-4;
pub const FD_ABS_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub param_index: usize,
    pub grad_analytic: f64,
    pub grad_fd: f64,
    pub fd_step: f64,
    /// Magnitude cap that applies to this quantity, if any.
    pub bound: Option<f64>,
}

impl GradientReport {
    pub fn fd_error(&self) -> f64 {
        (self.grad_analytic - self.grad_fd).abs()
    }

    pub fn fd_agrees(&self, rel: f64, abs: f64) -> bool {
        self.fd_error() <= abs.max(rel * self.grad_fd.abs())
    }

    pub fn within_bound(&self, slack: f64) -> bool {
        self.bound.is_none_or(|b| self.grad_analytic.abs() <= b + slack)
    }
}

fn check_trainable(c: &BrickWallCircuit, l: usize) -> Result<()> {
    if c.init_mode() != InitMode::Generator {
        return Err(Error::Argument(
            "gradients are not defined for Haar-gate circuits".into(),
        ));
    }
    if l >= c.n_params() {
        return Err(Error::Argument(format!(
            "parameter index {l} out of range for {} parameters",
            c.n_params()
        )));
    }
    Ok(())
}

fn check_width(c: &BrickWallCircuit, part: &SubsystemPartition) -> Result<()> {
    if c.n_qubits() != part.n_total {
        return Err(Error::Dimension {
            expected: part.n_total,
            found: c.n_qubits(),
        });
    }
    Ok(())
}

/// Central difference of `f` along parameter `l`.
pub fn central_difference<F>(c: &BrickWallCircuit, l: usize, h: f64, f: F) -> Result<f64>
where
    F: Fn(&BrickWallCircuit) -> Result<f64>,
{
    let up = f(&c.shift_param(l, h)?)?;
    let down = f(&c.shift_param(l, -h)?)?;
    Ok((up - down) / (2.0 * h))
}

/// `(u P u†, ∂u P u† + u P ∂u†)` for one Pauli action.
fn conj_and_derivative(
    u: &DMatrix<C64>,
    u_dag: &DMatrix<C64>,
    du: &DMatrix<C64>,
    p: &PauliAction,
) -> (DMatrix<C64>, DMatrix<C64>) {
    let p_udag = p.left_mul(u_dag);
    let a = u * &p_udag;
    let x = du * &p_udag;
    let da = &x + x.adjoint();
    (a, da)
}

fn analytic_grad_otoc(c: &BrickWallCircuit, part: &SubsystemPartition, l: usize) -> Result<f64> {
    let u = c.unitary();
    let du = c.unitary_derivative(l)?;
    let (um, dm) = (u.matrix(), du.matrix());
    let u_dag = um.adjoint();
    // ∂Tr(A O A O) = 2 Tr(∂A O A O)
    let value = averaged_sandwich(part, |pa| {
        let (a, da) = conj_and_derivative(um, &u_dag, dm, pa);
        (da, a)
    })?;
    Ok(2.0 * value.re)
}

fn analytic_grad_op(c: &BrickWallCircuit, u_s: &DenseOperator, part: &SubsystemPartition, l: usize) -> Result<f64> {
    let u = c.unitary();
    let du = c.unitary_derivative(l)?;
    let (um, dm, sm) = (u.matrix(), du.matrix(), u_s.matrix());
    let (u_dag, s_dag) = (um.adjoint(), sm.adjoint());
    let value = averaged_sandwich(part, |pa| {
        let (_, da) = conj_and_derivative(um, &u_dag, dm, pa);
        (da, crate::scrambling::conjugate_by(sm, &s_dag, pa))
    })?;
    Ok(value.re)
}

/// `∂OTOC/∂θ_l`; capped by `4‖V_l‖`.
pub fn grad_otoc(c: &BrickWallCircuit, part: &SubsystemPartition, l: usize) -> Result<GradientReport> {
    check_trainable(c, l)?;
    check_width(c, part)?;
    let analytic = analytic_grad_otoc(c, part, l)?;
    let fd = central_difference(c, l, FD_STEP, |cc| Ok(otoc(&cc.unitary(), part)?.value))?;
    Ok(GradientReport {
        param_index: l,
        grad_analytic: analytic,
        grad_fd: fd,
        fd_step: FD_STEP,
        bound: Some(4.0),
    })
}

/// `∂OP(U, U_S)/∂θ_l` with `U_S` fixed; capped by `2‖V_l‖`.
pub fn grad_op(
    c: &BrickWallCircuit,
    u_s: &DenseOperator,
    part: &SubsystemPartition,
    l: usize,
) -> Result<GradientReport> {
    check_trainable(c, l)?;
    part.check_operator(u_s)?;
    let analytic = analytic_grad_op(c, u_s, part, l)?;
    let fd = central_difference(c, l, FD_STEP, |cc| op_correlator(&cc.unitary(), u_s, part))?;
    Ok(GradientReport {
        param_index: l,
        grad_analytic: analytic,
        grad_fd: fd,
        fd_step: FD_STEP,
        bound: Some(2.0),
    })
}

/// Cap `8 d_A² / ((d_A + 1) d_C²)` on `|∂L|` for unit-norm generators.
pub fn true_error_grad_cap(part: &SubsystemPartition) -> f64 {
    8.0 * part.g()
}

/// `∂L/∂θ_l = G[∂OTOC(U) − 2 ∂OP(U, U_S)]`.
pub fn grad_true_error(
    c: &BrickWallCircuit,
    u_s: &DenseOperator,
    part: &SubsystemPartition,
    l: usize,
) -> Result<GradientReport> {
    check_trainable(c, l)?;
    part.check_operator(u_s)?;
    let analytic = part.g() * (analytic_grad_otoc(c, part, l)? - 2.0 * analytic_grad_op(c, u_s, part, l)?);
    let fd = central_difference(c, l, FD_STEP, |cc| Ok(true_error_analytic(&cc.unitary(), u_s, part)?.l))?;
    Ok(GradientReport {
        param_index: l,
        grad_analytic: analytic,
        grad_fd: fd,
        fd_step: FD_STEP,
        bound: Some(true_error_grad_cap(part)),
    })
}

/// `∂L_scram/∂θ_l = G ∂OTOC`, checked against differences of `L_scram`.
pub fn grad_l_scram(c: &BrickWallCircuit, part: &SubsystemPartition, l: usize) -> Result<GradientReport> {
    check_trainable(c, l)?;
    let analytic = part.g() * analytic_grad_otoc(c, part, l)?;
    let fd = central_difference(c, l, FD_STEP, |cc| l_scram(&cc.unitary(), part))?;
    Ok(GradientReport {
        param_index: l,
        grad_analytic: analytic,
        grad_fd: fd,
        fd_step: FD_STEP,
        bound: Some(4.0 * part.g()),
    })
}

/// `∂C_av/∂θ_l = G ∂OTOC`.
pub fn grad_cost_av(c: &BrickWallCircuit, part: &SubsystemPartition, l: usize) -> Result<GradientReport> {
    check_trainable(c, l)?;
    let analytic = part.g() * analytic_grad_otoc(c, part, l)?;
    let fd = central_difference(c, l, FD_STEP, |cc| crate::loss::cost_av(&cc.unitary(), part))?;
    Ok(GradientReport {
        param_index: l,
        grad_analytic: analytic,
        grad_fd: fd,
        fd_step: FD_STEP,
        bound: Some(4.0 * part.g()),
    })
}

/// Precomputed `U`, `∂_lU` and `U_S` for fast per-state loss and cost
/// evaluations with their derivatives.
pub struct StateProbe {
    part: SubsystemPartition,
    u: DenseOperator,
    du: DenseOperator,
    u_s: Option<DenseOperator>,
    c_set: Vec<PauliAction>,
}

/// Values of one probe evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeValue {
    pub value: f64,
    pub grad: f64,
}

impl StateProbe {
    pub fn new(c: &BrickWallCircuit, u_s: Option<&DenseOperator>, part: &SubsystemPartition, l: usize) -> Result<Self> {
        check_trainable(c, l)?;
        if let Some(s) = u_s {
            part.check_operator(s)?;
        }
        let u = c.unitary();
        part.check_operator(&u)?;
        Ok(Self {
            part: *part,
            du: c.unitary_derivative(l)?,
            u,
            u_s: u_s.cloned(),
            c_set: c_actions(part)?,
        })
    }

    /// `W (ψ ⊗ I_B)` as a `d × d_B` matrix.
    fn lift(&self, w: &DenseOperator, psi: &StateVector) -> Result<DMatrix<C64>> {
        if psi.n_qubits() != self.part.n_a {
            return Err(Error::Dimension {
                expected: 1 << self.part.n_a,
                found: psi.dim(),
            });
        }
        let d_b = 1usize << self.part.n_b;
        let wm = w.matrix();
        let mut k = DMatrix::<C64>::zeros(w.dim(), d_b);
        for b in 0..d_b {
            for (a, amp) in psi.amplitudes().iter().enumerate() {
                k.column_mut(b).axpy(*amp, &wm.column(a * d_b + b), ONE);
            }
        }
        Ok(k)
    }

    /// `(ỹ, ∂ỹ)` for every string on C.
    fn outputs(&self, psi: &StateVector) -> Result<(Vec<f64>, Vec<f64>)> {
        let k = self.lift(&self.u, psi)?;
        let dk = self.lift(&self.du, psi)?;
        let scale = C64::from(1.0 / self.part.d_b());
        let x = &k * k.adjoint() * scale;
        let dx = &dk * k.adjoint() * scale;
        let y: Vec<f64> = self.c_set.iter().map(|p| p.trace_with(&x).re).collect();
        // ∂ỹ = Tr((∂U ρ U† + U ρ ∂U†) O_C) = 2 Re Tr(∂U ρ U† O_C)
        let dy: Vec<f64> = self.c_set.iter().map(|p| 2.0 * p.trace_with(&dx).re).collect();
        Ok((y, dy))
    }

    fn target(&self, psi: &StateVector) -> Result<Vec<f64>> {
        let u_s = self
            .u_s
            .as_ref()
            .ok_or_else(|| Error::Argument("probe has no target unitary".into()))?;
        let k = self.lift(u_s, psi)?;
        let x = &k * k.adjoint() * C64::from(1.0 / self.part.d_b());
        Ok(self.c_set.iter().map(|p| p.trace_with(&x).re).collect())
    }

    /// `L_d` and `∂L_d` with the target held fixed.
    pub fn loss(&self, psi: &StateVector) -> Result<ProbeValue> {
        let (y_model, dy) = self.outputs(psi)?;
        let y_target = self.target(psi)?;
        let n = self.c_set.len() as f64;
        let mut value = 0.0;
        let mut grad = 0.0;
        for ((m, t), d) in y_model.iter().zip(&y_target).zip(&dy) {
            value += (m - t).powi(2);
            grad += 2.0 * (m - t) * d;
        }
        Ok(ProbeValue {
            value: value / n,
            grad: grad / n,
        })
    }

    /// Cost `⟨O_C⟩ ỹ²` and its derivative.
    pub fn cost(&self, psi: &StateVector) -> Result<ProbeValue> {
        let (y, dy) = self.outputs(psi)?;
        let n = self.c_set.len() as f64;
        Ok(ProbeValue {
            value: y.iter().map(|v| v * v).sum::<f64>() / n,
            grad: y.iter().zip(&dy).map(|(v, d)| 2.0 * v * d).sum::<f64>() / n,
        })
    }
}

/// `∂L_d/∂θ_l` for one input state.
pub fn grad_loss_ld(
    c: &BrickWallCircuit,
    u_s: &DenseOperator,
    psi_a: &StateVector,
    part: &SubsystemPartition,
    l: usize,
) -> Result<GradientReport> {
    let probe = StateProbe::new(c, Some(u_s), part, l)?;
    let analytic = probe.loss(psi_a)?.grad;
    let fd = central_difference(c, l, FD_STEP, |cc| crate::loss::loss_ld(&cc.unitary(), u_s, psi_a, part))?;
    Ok(GradientReport {
        param_index: l,
        grad_analytic: analytic,
        grad_fd: fd,
        fd_step: FD_STEP,
        bound: None,
    })
}

/// `∂C/∂θ_l` for an arbitrary input density operator.
pub fn grad_cost(
    c: &BrickWallCircuit,
    rho: &DenseOperator,
    part: &SubsystemPartition,
    l: usize,
) -> Result<GradientReport> {
    check_trainable(c, l)?;
    part.check_operator(rho)?;
    check_density(rho)?;
    let u = c.unitary();
    let du = c.unitary_derivative(l)?;
    let x = &(&u * rho) * &u.dagger();
    let dx = &(&du * rho) * &u.dagger();
    let c_set = c_actions(part)?;
    let n = c_set.len() as f64;
    let analytic = c_set
        .iter()
        .map(|p| 2.0 * p.trace_with(x.matrix()).re * 2.0 * p.trace_with(dx.matrix()).re)
        .sum::<f64>()
        / n;
    let fd = central_difference(c, l, FD_STEP, |cc| crate::loss::cost(&cc.unitary(), rho, part))?;
    Ok(GradientReport {
        param_index: l,
        grad_analytic: analytic,
        grad_fd: fd,
        fd_step: FD_STEP,
        bound: None,
    })
}

/// Applies `f` to every parameter index in parallel; results are in
/// parameter order.
pub fn for_all_params<F>(c: &BrickWallCircuit, f: F) -> Result<Vec<GradientReport>>
where
    F: Fn(usize) -> Result<GradientReport> + Sync + Send,
{
    (0..c.n_params()).into_par_iter().map(f).collect()
}

/// OTOC along the line `θ → θ + ε` for every `ε` in the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeScan {
    pub points: Vec<(f64, f64)>,
}

impl LandscapeScan {
    /// `max − min` of the OTOC values.
    pub fn spread(&self) -> f64 {
        let (lo, hi) = self
            .points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, v)| (lo.min(*v), hi.max(*v)));
        if self.points.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }
}

pub fn landscape_scan(c: &BrickWallCircuit, part: &SubsystemPartition, eps_grid: &[f64]) -> Result<LandscapeScan> {
    if eps_grid.iter().any(|e| !e.is_finite()) {
        return Err(Error::Argument("landscape grid has a non-finite point".into()));
    }
    let points = eps_grid
        .par_iter()
        .map(|&eps| Ok((eps, otoc(&c.perturb(eps).unitary(), part)?.value)))
        .collect::<Result<Vec<_>>>()?;
    Ok(LandscapeScan { points })
}

/// `n` evenly spaced points on `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}
