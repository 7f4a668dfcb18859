//! Seeded random ensembles and Monte-Carlo twirling channels.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{kron, DenseOperator, StateVector, ONE, ZERO};

/// ChaCha20 stream keyed by a 64-bit seed plus a stream id. Children
/// derived with [`SeededRng::derive`] are reproducible and independent.
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha20Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    /// Child stream `id` of this stream. Does not advance `self`.
    pub fn derive(&self, id: u64) -> Self {
        let stream = splitmix64(self.stream ^ splitmix64(id.wrapping_add(1)));
        Self::with_stream(self.seed, stream)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Standard complex normal: real and imaginary parts `N(0, 1/2)`.
    pub fn complex_normal(&mut self) -> C64 {
        let re: f64 = self.sample(StandardNormal);
        let im: f64 = self.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.random_range(lo..hi)
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::Argument(format!("dimension {dim} is not a power of two")));
    }
    Ok(())
}

/// `dim × dim` matrix of i.i.d. standard complex normals.
pub fn ginibre(dim: usize, rng: &mut SeededRng) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(dim, dim);
    // column-major fill keeps the draw order independent of nalgebra internals
    for c in 0..dim {
        for r in 0..dim {
            out[(r, c)] = rng.complex_normal();
        }
    }
    out
}

/// Unitary factor of `z = QR` with the diagonal of `R` rotated to the
/// positive reals, which makes the map from Ginibre to Haar exact.
pub fn haar_from_ginibre(z: DMatrix<C64>) -> Result<DenseOperator> {
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for c in 0..q.ncols() {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for z in q.column_mut(c).iter_mut() {
            *z *= phase;
        }
    }
    DenseOperator::new(q)
}

pub fn haar_unitary(dim: usize, rng: &mut SeededRng) -> Result<DenseOperator> {
    check_dim(dim)?;
    haar_from_ginibre(ginibre(dim, rng))
}

/// GUE sample `(G + G†)/2`; rescaled to unit spectral norm when
/// `normalize` is set.
pub fn gue_hermitian(dim: usize, rng: &mut SeededRng, normalize: bool) -> Result<DenseOperator> {
    check_dim(dim)?;
    let g = ginibre(dim, rng);
    let h = (&g + g.adjoint()) * C64::from(0.5);
    let op = DenseOperator::new(h)?;
    if !normalize {
        return Ok(op);
    }
    let norm = op.spectral_norm();
    Ok(op.scaled(C64::from(1.0 / norm)))
}

pub fn haar_state(dim: usize, rng: &mut SeededRng) -> Result<StateVector> {
    check_dim(dim)?;
    let amps = DVector::from_fn(dim, |_, _| rng.complex_normal());
    StateVector::new(amps)
}

/// Swap of two copies of an `n`-qubit register.
pub fn swap_operator(n_qubits: usize) -> Result<DenseOperator> {
    let d = 1usize << n_qubits;
    DenseOperator::from_fn(2 * n_qubits, |r, c| {
        if r == (c % d) * d + c / d {
            ONE
        } else {
            ZERO
        }
    })
}

/// Monte-Carlo mean with a per-entry standard error of the complex mean.
#[derive(Clone, Debug)]
pub struct TwirlEstimate {
    pub mean: DenseOperator,
    pub stderr: DMatrix<f64>,
    pub n_samples: usize,
}

impl TwirlEstimate {
    /// Largest `|mean − expected| − n_sigma·stderr` over entries; non-positive
    /// means every entry is inside its band.
    pub fn worst_excess(&self, expected: &DenseOperator, n_sigma: f64) -> f64 {
        let m = self.mean.matrix();
        let e = expected.matrix();
        m.iter()
            .zip(e.iter())
            .zip(self.stderr.iter())
            .map(|((a, b), s)| (a - b).norm() - n_sigma * s)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Every entry within `n_sigma` standard errors, with an absolute floor
    /// for entries whose samples are exactly constant.
    pub fn within(&self, expected: &DenseOperator, n_sigma: f64, floor: f64) -> bool {
        self.worst_excess(expected, n_sigma) <= floor
    }
}

/// Monte-Carlo `E[U†^{⊗k} q U^{⊗k}]` over Haar `U` on `dim` dimensions.
pub fn twirl_mc(
    q: &DenseOperator,
    k: usize,
    dim: usize,
    n_samples: usize,
    rng: &mut SeededRng,
) -> Result<TwirlEstimate> {
    if n_samples < 1 {
        return Err(Error::Argument("twirl needs at least one sample".into()));
    }
    if !(1..=2).contains(&k) {
        return Err(Error::Argument(format!("twirl order {k} not supported")));
    }
    check_dim(dim)?;
    let expected_dim = dim.pow(k as u32);
    if q.dim() != expected_dim {
        return Err(Error::Dimension {
            expected: expected_dim,
            found: q.dim(),
        });
    }
    let n = q.dim();
    let mut sum = DMatrix::<C64>::zeros(n, n);
    let mut sum_sq = DMatrix::<f64>::zeros(n, n);
    for _ in 0..n_samples {
        let u = haar_unitary(dim, rng)?;
        let uk = if k == 1 { u } else { kron(&u, &u)? };
        let sample = &(&uk.dagger() * q) * &uk;
        for (idx, z) in sample.matrix().iter().enumerate() {
            sum[idx] += z;
            sum_sq[idx] += z.norm_sqr();
        }
    }
    let count = n_samples as f64;
    let mean = sum / C64::from(count);
    let stderr = DMatrix::from_fn(n, n, |r, c| {
        if n_samples < 2 {
            return f64::INFINITY;
        }
        // E|z − μ|² = E|z|² − |μ|²
        let var = (sum_sq[(r, c)] / count - mean[(r, c)].norm_sqr()).max(0.0) * count / (count - 1.0);
        (var / count).sqrt()
    });
    Ok(TwirlEstimate {
        mean: DenseOperator::new(mean)?,
        stderr,
        n_samples,
    })
}

/// First-moment twirl `Tr(q) I / d`.
pub fn twirl_one_closed(q: &DenseOperator) -> Result<DenseOperator> {
    let d = q.dim() as f64;
    Ok(DenseOperator::identity(q.n_qubits())?.scaled(q.trace() / d))
}

/// Second-moment twirl expanded over identity and swap with the
/// Weingarten coefficients of `U(d)`.
pub fn twirl_two_closed(q: &DenseOperator, dim: usize) -> Result<DenseOperator> {
    check_dim(dim)?;
    if q.dim() != dim * dim {
        return Err(Error::Dimension {
            expected: dim * dim,
            found: q.dim(),
        });
    }
    let n = dim.trailing_zeros() as usize;
    let d = dim as f64;
    let swap = swap_operator(n)?;
    let id = DenseOperator::identity(2 * n)?;
    let tr_q = q.trace();
    let tr_sq = swap.trace_product(q);
    let denom = d * d - 1.0;
    let c_id = (tr_q - tr_sq / d) / denom;
    let c_swap = (tr_sq - tr_q / d) / denom;
    Ok(&id.scaled(c_id) + &swap.scaled(c_swap))
}

/// Twirl of `(|ψ⟩⟨ψ|)^{⊗2}`: `(I + S)/(d(d+1))`.
pub fn twirl_state_power(dim: usize) -> Result<DenseOperator> {
    check_dim(dim)?;
    let n = dim.trailing_zeros() as usize;
    let d = dim as f64;
    let sum = &DenseOperator::identity(2 * n)? + &swap_operator(n)?;
    Ok(sum.scaled(C64::from(1.0 / (d * (d + 1.0)))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = SeededRng::new(42);
        let mut b = SeededRng::new(42);
        assert_eq!(a.next_u64(), b.next_u64());
        let c1 = a.derive(3);
        let c2 = b.derive(3);
        assert_eq!(c1.stream(), c2.stream());
        assert_ne!(a.derive(3).stream(), a.derive(4).stream());
    }

    #[test]
    fn derived_streams_differ() {
        let root = SeededRng::new(1);
        let mut x = root.derive(0);
        let mut y = root.derive(1);
        assert_ne!(x.next_u64(), y.next_u64());
    }

    #[test]
    fn dim_one_haar_is_phase() {
        let mut rng = SeededRng::new(5);
        let u = haar_unitary(1, &mut rng).unwrap();
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn haar_is_unitary() {
        let mut rng = SeededRng::new(9);
        for dim in [2, 4, 16, 64] {
            let u = haar_unitary(dim, &mut rng).unwrap();
            assert!(u.unitarity_error() < 1e-10);
        }
    }

    #[test]
    fn phase_fix_is_deterministic() {
        let mut rng = SeededRng::new(11);
        let z = ginibre(8, &mut rng);
        let a = haar_from_ginibre(z.clone()).unwrap();
        let b = haar_from_ginibre(z.clone()).unwrap();
        assert_eq!(a, b);
        // Q·diag(phase) · (phase* R) recovers the draw, with positive R diagonal
        let r_fixed = a.matrix().adjoint() * &z;
        for i in 0..8 {
            assert!(r_fixed[(i, i)].re > 0.0);
            assert!(r_fixed[(i, i)].im.abs() < 1e-12);
        }
    }

    #[test]
    fn gue_hermitian_and_normalized() {
        let mut rng = SeededRng::new(3);
        let v = gue_hermitian(4, &mut rng, true).unwrap();
        assert!(v.hermiticity_error() < 1e-12);
        assert!((v.spectral_norm() - 1.0).abs() < 1e-12);
        let raw = gue_hermitian(4, &mut rng, false).unwrap();
        assert!(raw.hermiticity_error() < 1e-12);
    }

    #[test]
    fn haar_state_unit_norm() {
        let mut rng = SeededRng::new(8);
        for dim in [1, 2, 8] {
            let psi = haar_state(dim, &mut rng).unwrap();
            assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn swap_squares_to_identity() {
        let s = swap_operator(1).unwrap();
        assert_eq!(&s * &s, DenseOperator::identity(2).unwrap());
        assert_eq!(s.trace(), C64::from(2.0));
    }

    #[test]
    fn twirl_rejects_bad_input() {
        let mut rng = SeededRng::new(0);
        let q = DenseOperator::identity(1).unwrap();
        assert!(twirl_mc(&q, 1, 2, 0, &mut rng).is_err());
        assert!(twirl_mc(&q, 2, 2, 10, &mut rng).is_err());
        assert!(twirl_mc(&q, 3, 2, 10, &mut rng).is_err());
    }

    #[test]
    fn twirl_of_identity_is_identity() {
        let mut rng = SeededRng::new(0);
        let q = DenseOperator::identity(2).unwrap();
        let est = twirl_mc(&q, 1, 4, 50, &mut rng).unwrap();
        assert!(est.mean.max_abs_diff(&q) < 1e-12);
    }

    #[test]
    fn closed_forms_fix_permutations() {
        let id = DenseOperator::identity(2).unwrap();
        let s = swap_operator(1).unwrap();
        assert!(twirl_two_closed(&id, 2).unwrap().max_abs_diff(&id) < 1e-14);
        assert!(twirl_two_closed(&s, 2).unwrap().max_abs_diff(&s) < 1e-14);
    }
}
