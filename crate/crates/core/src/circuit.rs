//! Brick-wall parameterized circuits built from gates `exp(-iθV)`.
//!
//! Layers are numbered from 1. Odd layers pair qubits (0,1), (2,3), ...;
//! even layers pair (1,2), (3,4), ...; boundaries are open. The flat
//! parameter index runs layer-major, then by position within the layer.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{herm_exp, DenseOperator, MAX_OPERATOR_QUBITS};
use crate::randmat::{gue_hermitian, haar_unitary, SeededRng};

const GENERATOR_HERMITIAN_TOL: f64 = 1e-10;
const GENERATOR_NORM_TOL: f64 = 1e-12;

/// JSON circuit format version tag.
pub const CIRCUIT_FORMAT_VERSION: &str = "v1";

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub layer: usize,
    pub position: usize,
    pub qubits: (usize, usize),
    pub theta: f64,
    generator: DenseOperator,
}

impl Gate {
    pub fn new(
        layer: usize,
        position: usize,
        qubits: (usize, usize),
        theta: f64,
        generator: DenseOperator,
    ) -> Result<Self> {
        if qubits.0.abs_diff(qubits.1) != 1 {
            return Err(Error::Argument(format!(
                "gate qubits {qubits:?} are not adjacent"
            )));
        }
        if generator.n_qubits() != 2 {
            return Err(Error::Dimension {
                expected: 4,
                found: generator.dim(),
            });
        }
        let herm = generator.hermiticity_error();
        if herm > GENERATOR_HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let norm = generator.spectral_norm();
        if (norm - 1.0).abs() > GENERATOR_NORM_TOL {
            return Err(Error::Argument(format!(
                "generator spectral norm {norm} is not 1"
            )));
        }
        if !theta.is_finite() {
            return Err(Error::Argument("gate angle is not finite".into()));
        }
        Ok(Self {
            layer,
            position,
            qubits,
            theta,
            generator,
        })
    }

    pub fn generator(&self) -> &DenseOperator {
        &self.generator
    }

    /// Local 4×4 matrix `exp(-iθV)` in the order `(qubits.0, qubits.1)`.
    pub fn matrix(&self) -> DenseOperator {
        herm_exp(&self.generator, self.theta).expect("generator validated at construction")
    }

    pub fn qubit_list(&self) -> [usize; 2] {
        [self.qubits.0, self.qubits.1]
    }
}

/// How gate parameters were drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    /// Uniform θ on [0, 2π) with a unit-norm GUE generator.
    Generator,
    /// Each gate is a Haar-random 4×4 unitary written as `exp(-iθV)`.
    /// Gradient evaluation is refused for circuits built this way.
    HaarGate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BrickWallCircuit {
    n_qubits: usize,
    depth: usize,
    gates: Vec<Gate>,
    seed: Option<u64>,
    init: InitMode,
}

/// Qubit pairs acted on in 1-based `layer`.
pub fn layer_pairs(n_qubits: usize, layer: usize) -> Vec<(usize, usize)> {
    let start = if layer % 2 == 1 { 0 } else { 1 };
    (start..n_qubits.saturating_sub(1))
        .step_by(2)
        .map(|q| (q, q + 1))
        .collect()
}

fn check_register(n_qubits: usize) -> Result<()> {
    if n_qubits < 2 {
        return Err(Error::Argument(format!(
            "brick wall needs at least 2 qubits, got {n_qubits}"
        )));
    }
    if n_qubits > MAX_OPERATOR_QUBITS {
        return Err(Error::Size(format!(
            "{n_qubits}-qubit circuit exceeds the {MAX_OPERATOR_QUBITS}-qubit cap"
        )));
    }
    Ok(())
}

/// Random brick wall with uniform angles and unit-norm GUE generators.
pub fn build_brickwall(n_qubits: usize, depth: usize, rng: &mut SeededRng) -> Result<BrickWallCircuit> {
    check_register(n_qubits)?;
    let mut gates = Vec::new();
    for layer in 1..=depth {
        for (position, pair) in layer_pairs(n_qubits, layer).into_iter().enumerate() {
            let theta = rng.uniform(0.0, TAU);
            let v = gue_hermitian(4, rng, true)?;
            gates.push(Gate::new(layer, position, pair, theta, v)?);
        }
    }
    Ok(BrickWallCircuit {
        n_qubits,
        depth,
        gates,
        seed: Some(rng.seed()),
        init: InitMode::Generator,
    })
}

/// Brick wall whose gates are Haar-random two-qubit unitaries.
pub fn build_brickwall_haar(n_qubits: usize, depth: usize, rng: &mut SeededRng) -> Result<BrickWallCircuit> {
    check_register(n_qubits)?;
    let mut gates = Vec::new();
    for layer in 1..=depth {
        for (position, pair) in layer_pairs(n_qubits, layer).into_iter().enumerate() {
            let u = haar_unitary(4, rng)?;
            let (theta, v) = unitary_log(&u)?;
            gates.push(Gate::new(layer, position, pair, theta, v)?);
        }
    }
    Ok(BrickWallCircuit {
        n_qubits,
        depth,
        gates,
        seed: Some(rng.seed()),
        init: InitMode::HaarGate,
    })
}

/// Writes a unitary as `exp(-iθV)` with `‖V‖ = 1`, using the principal
/// branch of the logarithm.
pub fn unitary_log(u: &DenseOperator) -> Result<(f64, DenseOperator)> {
    let err = u.unitarity_error();
    if err > 1e-9 {
        return Err(Error::NotUnitary(err));
    }
    let schur = u.matrix().clone().schur();
    let (q, t) = schur.unpack();
    let dim = u.dim();
    let angles = DMatrix::from_fn(dim, dim, |r, c| {
        if r == c {
            // t_rr = exp(-iφ) ⇒ φ = -arg
            C64::from(-t[(r, r)].arg())
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let h = &q * angles * q.adjoint();
    let h = (&h + h.adjoint()) * C64::from(0.5);
    let h = DenseOperator::new(h)?;
    let theta = h.spectral_norm();
    if theta == 0.0 {
        let mut v = DenseOperator::zeros(u.n_qubits())?;
        v[(0, 0)] = C64::from(1.0);
        return Ok((0.0, v));
    }
    Ok((theta, h.scaled(C64::from(1.0 / theta))))
}

impl BrickWallCircuit {
    /// Assembles a circuit from explicit gates. Gates must follow the
    /// brick-wall placement in flat order.
    pub fn from_gates(n_qubits: usize, depth: usize, gates: Vec<Gate>, seed: Option<u64>, init: InitMode) -> Result<Self> {
        check_register(n_qubits)?;
        let mut expected = Vec::new();
        for layer in 1..=depth {
            for (position, pair) in layer_pairs(n_qubits, layer).into_iter().enumerate() {
                expected.push((layer, position, pair));
            }
        }
        if expected.len() != gates.len() {
            return Err(Error::Argument(format!(
                "expected {} gates for depth {depth}, found {}",
                expected.len(),
                gates.len()
            )));
        }
        for (g, (layer, position, pair)) in gates.iter().zip(&expected) {
            if g.layer != *layer || g.position != *position || g.qubits != *pair {
                return Err(Error::Argument(format!(
                    "gate at layer {} position {} on {:?} breaks the brick-wall layout",
                    g.layer, g.position, g.qubits
                )));
            }
        }
        Ok(Self {
            n_qubits,
            depth,
            gates,
            seed,
            init,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn n_params(&self) -> usize {
        self.gates.len()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn init_mode(&self) -> InitMode {
        self.init
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.gates.iter().map(|g| g.theta).collect()
    }

    /// `(layer, position)` of flat parameter `l`.
    pub fn param_location(&self, l: usize) -> Result<(usize, usize)> {
        self.gates
            .get(l)
            .map(|g| (g.layer, g.position))
            .ok_or_else(|| self.param_error(l))
    }

    fn param_error(&self, l: usize) -> Error {
        Error::Argument(format!(
            "parameter index {l} out of range for {} parameters",
            self.gates.len()
        ))
    }

    /// The first `depth` layers of this circuit.
    pub fn truncated(&self, depth: usize) -> Self {
        let depth = depth.min(self.depth);
        Self {
            n_qubits: self.n_qubits,
            depth,
            gates: self.gates.iter().filter(|g| g.layer <= depth).cloned().collect(),
            seed: self.seed,
            init: self.init,
        }
    }

    /// Every angle shifted by `eps`; generators unchanged.
    pub fn perturb(&self, eps: f64) -> Self {
        let mut out = self.clone();
        for g in &mut out.gates {
            g.theta += eps;
        }
        out
    }

    /// Angle `l` shifted by `delta`.
    pub fn shift_param(&self, l: usize, delta: f64) -> Result<Self> {
        let mut out = self.clone();
        let gate = out.gates.get_mut(l).ok_or_else(|| self.param_error(l))?;
        gate.theta += delta;
        Ok(out)
    }

    fn apply_gates(&self, op: &mut DenseOperator, gates: &[Gate]) {
        for g in gates {
            op.apply_local_left(g.matrix().matrix(), &g.qubit_list());
        }
    }

    /// `U = L_depth ⋯ L_1`.
    pub fn unitary(&self) -> DenseOperator {
        let mut u = DenseOperator::identity(self.n_qubits).expect("register size checked");
        self.apply_gates(&mut u, &self.gates);
        u
    }

    /// Unitaries after 0, 1, ..., depth layers.
    pub fn prefix_unitaries(&self) -> Vec<DenseOperator> {
        let mut u = DenseOperator::identity(self.n_qubits).expect("register size checked");
        let mut out = Vec::with_capacity(self.depth + 1);
        out.push(u.clone());
        for layer in 1..=self.depth {
            let layer_gates: Vec<Gate> = self.gates.iter().filter(|g| g.layer == layer).cloned().collect();
            self.apply_gates(&mut u, &layer_gates);
            out.push(u.clone());
        }
        out
    }

    /// Splits `U = U₊U₋` with gate `l` the last factor of `U₋`; same-layer
    /// gates after `l` go into `U₊`.
    pub fn split_at(&self, l: usize) -> Result<SplitUnitary> {
        if l >= self.gates.len() {
            return Err(self.param_error(l));
        }
        let mut minus = DenseOperator::identity(self.n_qubits)?;
        self.apply_gates(&mut minus, &self.gates[..=l]);
        let mut plus = DenseOperator::identity(self.n_qubits)?;
        self.apply_gates(&mut plus, &self.gates[l + 1..]);
        let gate = &self.gates[l];
        let generator = crate::linalg::embed(gate.generator(), &gate.qubit_list(), self.n_qubits)?;
        Ok(SplitUnitary {
            minus,
            generator,
            plus,
        })
    }

    /// `∂U/∂θ_l = U₊(-iV_l)U₋`, built gate by gate.
    pub fn unitary_derivative(&self, l: usize) -> Result<DenseOperator> {
        if l >= self.gates.len() {
            return Err(self.param_error(l));
        }
        let mut m = DenseOperator::identity(self.n_qubits)?;
        self.apply_gates(&mut m, &self.gates[..=l]);
        let gate = &self.gates[l];
        let minus_i_v = gate.generator().matrix() * C64::new(0.0, -1.0);
        m.apply_local_left(&minus_i_v, &gate.qubit_list());
        self.apply_gates(&mut m, &self.gates[l + 1..]);
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = CircuitDocument {
            format: CIRCUIT_FORMAT_VERSION.to_string(),
            n_qubits: self.n_qubits,
            depth: self.depth,
            seed: self.seed,
            init: self.init,
            gates: self
                .gates
                .iter()
                .map(|g| GateDocument {
                    layer: g.layer,
                    position: g.position,
                    qubits: [g.qubits.0, g.qubits.1],
                    theta: g.theta,
                    generator: (0..4)
                        .flat_map(|r| (0..4).map(move |c| (r, c)))
                        .map(|(r, c)| {
                            let z = g.generator[(r, c)];
                            [z.re, z.im]
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CircuitDocument = serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        if doc.format != CIRCUIT_FORMAT_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported circuit format {:?}",
                doc.format
            )));
        }
        let mut gates = Vec::with_capacity(doc.gates.len());
        for g in doc.gates {
            if g.generator.len() != 16 {
                return Err(Error::Serialization(format!(
                    "generator needs 16 entries, found {}",
                    g.generator.len()
                )));
            }
            let entries: Vec<C64> = g.generator.iter().map(|[re, im]| C64::new(*re, *im)).collect();
            let v = DenseOperator::from_row_slice(&entries)?;
            gates.push(Gate::new(g.layer, g.position, (g.qubits[0], g.qubits[1]), g.theta, v)?);
        }
        Self::from_gates(doc.n_qubits, doc.depth, gates, doc.seed, doc.init)
    }
}

/// Factors of `U = U₊U₋` around one gate, with that gate's generator
/// embedded on the full register.
#[derive(Clone, Debug)]
pub struct SplitUnitary {
    pub minus: DenseOperator,
    pub generator: DenseOperator,
    pub plus: DenseOperator,
}

impl SplitUnitary {
    pub fn derivative(&self) -> DenseOperator {
        let v = self.generator.scaled(C64::new(0.0, -1.0));
        &(&self.plus * &v) * &self.minus
    }
}

#[derive(Serialize, Deserialize)]
struct CircuitDocument {
    format: String,
    n_qubits: usize,
    depth: usize,
    seed: Option<u64>,
    init: InitMode,
    gates: Vec<GateDocument>,
}

#[derive(Serialize, Deserialize)]
struct GateDocument {
    layer: usize,
    position: usize,
    qubits: [usize; 2],
    theta: f64,
    /// Row-major `[re, im]` pairs.
    generator: Vec<[f64; 2]>,
}

/// Qubit counts of the input split A|B and output split C|D.
///
/// A is the first `n_a` input qubits, C the first `n_c` output qubits and
/// D the last `n_d` output qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsystemPartition {
    pub n_total: usize,
    pub n_a: usize,
    pub n_b: usize,
    pub n_c: usize,
    pub n_d: usize,
}

impl SubsystemPartition {
    pub fn new(n_total: usize, n_a: usize, n_d: usize) -> Result<Self> {
        if n_a == 0 || n_d == 0 || n_a >= n_total || n_d >= n_total {
            return Err(Error::Argument(format!(
                "partition N={n_total}, N_A={n_a}, N_D={n_d} leaves an empty subsystem"
            )));
        }
        if n_total > MAX_OPERATOR_QUBITS {
            return Err(Error::Size(format!("{n_total}-qubit partition")));
        }
        Ok(Self {
            n_total,
            n_a,
            n_b: n_total - n_a,
            n_c: n_total - n_d,
            n_d,
        })
    }

    /// Partition fixed by input size `n_a` and output size `n_c`.
    pub fn from_a_c(n_total: usize, n_a: usize, n_c: usize) -> Result<Self> {
        if n_c >= n_total {
            return Err(Error::Argument(format!("N_C={n_c} leaves D empty")));
        }
        Self::new(n_total, n_a, n_total - n_c)
    }

    pub fn d_a(&self) -> f64 {
        (1u64 << self.n_a) as f64
    }

    pub fn d_b(&self) -> f64 {
        (1u64 << self.n_b) as f64
    }

    pub fn d_c(&self) -> f64 {
        (1u64 << self.n_c) as f64
    }

    pub fn d_d(&self) -> f64 {
        (1u64 << self.n_d) as f64
    }

    pub fn d_tot(&self) -> f64 {
        (1u64 << self.n_total) as f64
    }

    /// Prefactor `d_A² / ((d_A + 1) d_C²)`.
    pub fn g(&self) -> f64 {
        let da = self.d_a();
        let dc = self.d_c();
        da * da / ((da + 1.0) * dc * dc)
    }

    pub fn a_qubits(&self) -> Vec<usize> {
        (0..self.n_a).collect()
    }

    pub fn b_qubits(&self) -> Vec<usize> {
        (self.n_a..self.n_total).collect()
    }

    pub fn c_qubits(&self) -> Vec<usize> {
        (0..self.n_c).collect()
    }

    pub fn d_qubits(&self) -> Vec<usize> {
        (self.n_c..self.n_total).collect()
    }

    pub(crate) fn check_operator(&self, op: &DenseOperator) -> Result<()> {
        if op.n_qubits() != self.n_total {
            return Err(Error::Dimension {
                expected: 1 << self.n_total,
                found: op.dim(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circuit(n: usize, depth: usize, seed: u64) -> BrickWallCircuit {
        build_brickwall(n, depth, &mut SeededRng::new(seed)).unwrap()
    }

    #[test]
    fn depth_zero_is_identity() {
        let c = circuit(4, 0, 1);
        assert!(c.gates().is_empty());
        assert_eq!(c.unitary(), DenseOperator::identity(4).unwrap());
    }

    #[test]
    fn gate_counts() {
        assert_eq!(circuit(8, 2, 1).n_params(), 7);
        assert_eq!(circuit(8, 30, 1).n_params(), 105);
        assert_eq!(circuit(5, 2, 1).n_params(), 4);
        assert!(build_brickwall(1, 3, &mut SeededRng::new(0)).is_err());
    }

    #[test]
    fn layer_geometry() {
        assert_eq!(layer_pairs(8, 1), vec![(0, 1), (2, 3), (4, 5), (6, 7)]);
        assert_eq!(layer_pairs(8, 2), vec![(1, 2), (3, 4), (5, 6)]);
        assert_eq!(layer_pairs(2, 2), vec![]);
    }

    #[test]
    fn zero_angles_give_identity() {
        let c = circuit(4, 3, 2);
        let thetas = c.thetas();
        let mut zeroed = c.clone();
        for (l, t) in thetas.iter().enumerate() {
            zeroed = zeroed.shift_param(l, -t).unwrap();
        }
        assert!(zeroed.unitary().max_abs_diff(&DenseOperator::identity(4).unwrap()) < 1e-12);
    }

    #[test]
    fn single_gate_matches_exponential() {
        let c = circuit(2, 1, 3);
        let g = &c.gates()[0];
        let expect = herm_exp(g.generator(), g.theta).unwrap();
        assert!(c.unitary().max_abs_diff(&expect) < 1e-14);
        let split = c.split_at(0).unwrap();
        assert!(split.minus.max_abs_diff(&expect) < 1e-14);
        assert_eq!(split.plus, DenseOperator::identity(2).unwrap());
    }

    #[test]
    fn unitary_is_unitary() {
        let u = circuit(6, 10, 4).unitary();
        assert!(u.unitarity_error() < 1e-9);
    }

    #[test]
    fn same_layer_gates_commute() {
        let c = circuit(4, 1, 5);
        let (g0, g1) = (&c.gates()[0], &c.gates()[1]);
        let mut ab = DenseOperator::identity(4).unwrap();
        ab.apply_local_left(g0.matrix().matrix(), &g0.qubit_list());
        ab.apply_local_left(g1.matrix().matrix(), &g1.qubit_list());
        let mut ba = DenseOperator::identity(4).unwrap();
        ba.apply_local_left(g1.matrix().matrix(), &g1.qubit_list());
        ba.apply_local_left(g0.matrix().matrix(), &g0.qubit_list());
        assert!(ab.max_abs_diff(&ba) < 1e-12);
    }

    #[test]
    fn perturb_is_additive() {
        let c = circuit(4, 2, 6);
        assert_eq!(c.perturb(0.0), c);
        let twice = c.perturb(0.1).perturb(0.1);
        let once = c.perturb(0.2);
        for (a, b) in twice.thetas().iter().zip(once.thetas()) {
            assert!((a - b).abs() < 1e-15);
        }
        let wrapped = c.perturb(TAU);
        for (a, b) in wrapped.thetas().iter().zip(c.thetas()) {
            assert!((a - b - TAU).abs() < 1e-12);
        }
        assert_eq!(wrapped.gates()[0].generator(), c.gates()[0].generator());
    }

    #[test]
    fn split_reassembles_for_every_parameter() {
        let c = circuit(4, 3, 7);
        let u = c.unitary();
        for l in 0..c.n_params() {
            let s = c.split_at(l).unwrap();
            assert!((&s.plus * &s.minus).max_abs_diff(&u) < 1e-9);
            assert!(s.derivative().max_abs_diff(&c.unitary_derivative(l).unwrap()) < 1e-12);
        }
        assert!(c.split_at(c.n_params()).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let c = circuit(4, 3, 8);
        let h = 1e-5;
        for l in 0..c.n_params() {
            let up = c.shift_param(l, h).unwrap().unitary();
            let down = c.shift_param(l, -h).unwrap().unitary();
            let fd = (&up - &down).scaled(C64::from(0.5 / h));
            let exact = c.unitary_derivative(l).unwrap();
            assert!(fd.max_abs_diff(&exact) < 1e-8, "param {l}");
            assert!(exact.spectral_norm() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn prefix_unitaries_match_truncation() {
        let c = circuit(5, 4, 9);
        let prefixes = c.prefix_unitaries();
        assert_eq!(prefixes.len(), 5);
        for (d, u) in prefixes.iter().enumerate() {
            assert!(u.max_abs_diff(&c.truncated(d).unitary()) < 1e-12);
        }
    }

    #[test]
    fn haar_gate_mode_is_unitary_and_logs_back() {
        let mut rng = SeededRng::new(10);
        let u = haar_unitary(4, &mut rng).unwrap();
        let (theta, v) = unitary_log(&u).unwrap();
        assert!(herm_exp(&v, theta).unwrap().max_abs_diff(&u) < 1e-10);
        let c = build_brickwall_haar(4, 3, &mut rng).unwrap();
        assert_eq!(c.init_mode(), InitMode::HaarGate);
        assert!(c.unitary().unitarity_error() < 1e-9);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let c = circuit(4, 3, 11);
        let text = c.to_json().unwrap();
        let back = BrickWallCircuit::from_json(&text).unwrap();
        assert_eq!(back, c);
        assert!(BrickWallCircuit::from_json(&text.replace("\"v1\"", "\"v0\"")).is_err());
    }

    #[test]
    fn partition_dims() {
        let p = SubsystemPartition::new(8, 3, 3).unwrap();
        assert_eq!((p.n_b, p.n_c), (5, 5));
        assert!((p.g() - 1.0 / 144.0).abs() < 1e-18);
        assert_eq!(p.d_qubits(), vec![5, 6, 7]);
        assert!(SubsystemPartition::new(8, 8, 1).is_err());
        assert!(SubsystemPartition::new(8, 0, 1).is_err());
        let right = SubsystemPartition::from_a_c(8, 1, 7).unwrap();
        assert_eq!(right.n_d, 1);
    }
}
