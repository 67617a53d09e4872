//! Brute-force dense Fock-space simulation, kept deliberately naive so it can
//! serve as a reference for the other engines.
//!
//! Basis ordering is little-endian: mode 0 varies fastest, so the index of
//! `|n_0, …, n_{M−1}⟩` is `Σ_k n_k d^k` with `d = n_c + 1`.

use nalgebra::{DMatrix, DVector};

use crate::circuit::{gate_unitary_fock, kraus_set, Circuit};
use crate::error::{invalid, unsupported, GbsError, GbsResult};
use crate::gauss::SqueezeSpec;
use crate::{FockOutcome, C64};

/// Largest Hilbert-space dimension `(n_c + 1)^M` the dense engine accepts.
pub const MAX_DENSE_DIM: usize = 10_000_000;
/// Largest number of density-matrix entries the dense engine accepts.
pub const MAX_DENSITY_ENTRIES: usize = 100_000_000;

fn hilbert_dim(num_modes: usize, local_cutoff: usize) -> GbsResult<usize> {
    (local_cutoff + 1)
        .checked_pow(num_modes as u32)
        .filter(|&dim| dim <= MAX_DENSE_DIM)
        .ok_or_else(|| {
            GbsError::Resource(format!(
                "dense space (n_c+1)^M with n_c = {local_cutoff}, M = {num_modes} exceeds {MAX_DENSE_DIM}"
            ))
        })
}

/// Amplitudes of `S(r)|0⟩` on `|0⟩ … |n_c⟩`, from the matrix exponential of the
/// truncated generator `(r/2)(a² − a†²)`.
///
/// The exponential is taken in a padded space (at least `n_c + 20` levels)
/// and the padding is doubled until the kept amplitudes stop changing. The
/// result is not renormalized: the weight above `n_c` is simply absent.
pub fn single_mode_squeezed(r: f64, local_cutoff: usize) -> Vec<f64> {
    if r == 0.0 {
        let mut v = vec![0.0; local_cutoff + 1];
        v[0] = 1.0;
        return v;
    }
    let amplitudes = |pad: usize| -> Vec<f64> {
        let dim = local_cutoff + 1 + pad;
        let mut gen = DMatrix::<f64>::zeros(dim, dim);
        for n in 0..dim - 2 {
            // a² |n+2⟩ = √((n+2)(n+1)) |n⟩ ; a†² is its transpose.
            let amp = 0.5 * r * (((n + 2) * (n + 1)) as f64).sqrt();
            gen[(n, n + 2)] = amp;
            gen[(n + 2, n)] = -amp;
        }
        let e = gen.exp();
        (0..=local_cutoff).map(|n| e[(n, 0)]).collect()
    };
    let mut pad = 20;
    let mut prev = amplitudes(pad);
    loop {
        pad *= 2;
        let next = amplitudes(pad);
        let diff = prev.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if diff < 1e-15 || pad >= 640 {
            return next;
        }
        prev = next;
    }
}

/// Photon-number probabilities and moments shared by pure and mixed states.
pub trait FockDistribution {
    fn num_modes(&self) -> usize;
    fn local_cutoff(&self) -> usize;
    /// `⟨n|ρ|n⟩` at a basis index.
    fn population(&self, index: usize) -> f64;
    /// Squared norm of a pure state, trace of a density matrix.
    fn trace_norm(&self) -> f64;

    fn index_of(&self, n: &FockOutcome) -> GbsResult<usize> {
        n.check_modes(self.num_modes())?;
        n.check_cutoff(self.local_cutoff())?;
        let d = self.local_cutoff() + 1;
        Ok(n.counts().iter().rev().fold(0, |acc, &k| acc * d + k))
    }
}

/// `|amplitude|²` for a pure state or `⟨n|ρ|n⟩` for a density matrix.
pub fn dense_probability<S: FockDistribution + ?Sized>(state: &S, n: &FockOutcome) -> GbsResult<f64> {
    Ok(state.population(state.index_of(n)?))
}

/// Applies a two-mode operator (pair index `n_lo * d + n_hi`) to every column
/// of `data`, which has `dim` rows and is stored column-major.
fn apply_two_mode(data: &mut [C64], dim: usize, d: usize, lower: usize, op: &DMatrix<C64>) {
    let s_lo = d.pow(lower as u32);
    let s_hi = s_lo * d;
    let mut buf = DVector::<C64>::zeros(d * d);
    for column in data.chunks_mut(dim) {
        for base in 0..dim {
            if (base / s_lo) % d != 0 || (base / s_hi) % d != 0 {
                continue;
            }
            for lo in 0..d {
                for hi in 0..d {
                    buf[lo * d + hi] = column[base + lo * s_lo + hi * s_hi];
                }
            }
            let out = op * &buf;
            for lo in 0..d {
                for hi in 0..d {
                    column[base + lo * s_lo + hi * s_hi] = out[lo * d + hi];
                }
            }
        }
    }
}

/// Single-mode analogue of [`apply_two_mode`].
fn apply_one_mode(data: &mut [C64], dim: usize, d: usize, mode: usize, op: &DMatrix<C64>) {
    let stride = d.pow(mode as u32);
    let mut buf = DVector::<C64>::zeros(d);
    for column in data.chunks_mut(dim) {
        for base in 0..dim {
            if (base / stride) % d != 0 {
                continue;
            }
            for n in 0..d {
                buf[n] = column[base + n * stride];
            }
            let out = op * &buf;
            for n in 0..d {
                column[base + n * stride] = out[n];
            }
        }
    }
}

/// `ρ → A ρ A†` for an operator acting through `apply`.
fn conjugate(rho: &DMatrix<C64>, apply: impl Fn(&mut [C64], usize)) -> DMatrix<C64> {
    let dim = rho.nrows();
    let mut x = rho.clone();
    apply(x.as_mut_slice(), dim);
    let mut y = x.adjoint();
    apply(y.as_mut_slice(), dim);
    y.adjoint()
}

fn annihilation(d: usize) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |m, n| if n == m + 1 { C64::from((n as f64).sqrt()) } else { C64::new(0.0, 0.0) })
}

/// A pure state on `M` modes truncated to `n_c` photons per mode.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    pub amplitudes: Vec<C64>,
    pub num_modes: usize,
    pub local_cutoff: usize,
}

impl DenseState {
    pub fn fock(n: &FockOutcome, local_cutoff: usize) -> GbsResult<Self> {
        let dim = hilbert_dim(n.num_modes(), local_cutoff)?;
        let mut s = Self { amplitudes: vec![C64::new(0.0, 0.0); dim], num_modes: n.num_modes(), local_cutoff };
        let idx = s.index_of(n)?;
        s.amplitudes[idx] = C64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn vacuum(num_modes: usize, local_cutoff: usize) -> GbsResult<Self> {
        Self::fock(&FockOutcome::vacuum(num_modes), local_cutoff)
    }

    fn d(&self) -> usize {
        self.local_cutoff + 1
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(C64::norm_sqr).sum()
    }

    pub fn inner(&self, other: &DenseState) -> C64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// Applies a two-mode Fock operator to modes `(lower, lower + 1)`.
    pub fn apply_two_mode(&mut self, lower: usize, op: &DMatrix<C64>) {
        let (dim, d) = (self.amplitudes.len(), self.d());
        apply_two_mode(&mut self.amplitudes, dim, d, lower, op);
    }

    pub fn apply_one_mode(&mut self, mode: usize, op: &DMatrix<C64>) {
        let (dim, d) = (self.amplitudes.len(), self.d());
        apply_one_mode(&mut self.amplitudes, dim, d, mode, op);
    }

    /// `a_k |ψ⟩` (truncated).
    pub fn annihilate(&self, mode: usize) -> DenseState {
        let mut out = self.clone();
        out.apply_one_mode(mode, &annihilation(self.d()));
        out
    }

    pub fn mean_photon(&self, mode: usize) -> f64 {
        self.annihilate(mode).norm_sqr()
    }

    /// Covariance matrix in the ordering `(a_1…a_M, a†_1…a†_M)` with
    /// `σ_ij = ⟨{ζ_i, ζ_j†}⟩/2 − ⟨ζ_i⟩⟨ζ_j†⟩`, computed from dense moments.
    /// Anticommutators are reduced with `[a, a†] = 1`, so the result is exact
    /// whenever the state has no weight at the cutoff.
    pub fn covariance(&self) -> DMatrix<C64> {
        let m = self.num_modes;
        let lowered: Vec<DenseState> = (0..m).map(|k| self.annihilate(k)).collect();
        let mean: Vec<C64> = lowered.iter().map(|l| self.inner(l)).collect();
        let mut sigma = DMatrix::<C64>::zeros(2 * m, 2 * m);
        for i in 0..m {
            for j in 0..m {
                let adag_j_a_i = lowered[j].inner(&lowered[i]); // ⟨a_j† a_i⟩
                let a_i_a_j = self.inner(&lowered[j].annihilate(i)); // ⟨a_i a_j⟩
                let delta = if i == j { 0.5 } else { 0.0 };
                sigma[(i, j)] = adag_j_a_i + delta - mean[i] * mean[j].conj();
                sigma[(i, m + j)] = a_i_a_j - mean[i] * mean[j];
                sigma[(m + i, j)] = (a_i_a_j - mean[i] * mean[j]).conj();
                sigma[(m + i, m + j)] = adag_j_a_i.conj() + delta - mean[i].conj() * mean[j];
            }
        }
        sigma
    }
}

impl FockDistribution for DenseState {
    fn num_modes(&self) -> usize {
        self.num_modes
    }
    fn local_cutoff(&self) -> usize {
        self.local_cutoff
    }
    fn population(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }
    fn trace_norm(&self) -> f64 {
        self.norm_sqr()
    }
}

/// `⊗_i S(r_i)|0⟩` truncated at `n_c` photons per mode (not renormalized).
pub fn dense_squeezed_vacuum(s: &SqueezeSpec, local_cutoff: usize) -> GbsResult<DenseState> {
    let m = s.num_modes();
    let dim = hilbert_dim(m, local_cutoff)?;
    let d = local_cutoff + 1;
    let per_mode: Vec<Vec<f64>> = s.r.iter().map(|&r| single_mode_squeezed(r, local_cutoff)).collect();
    let amplitudes = (0..dim)
        .map(|idx| {
            let mut rest = idx;
            let mut amp = 1.0;
            for v in &per_mode {
                amp *= v[rest % d];
                rest /= d;
            }
            C64::from(amp)
        })
        .collect();
    Ok(DenseState { amplitudes, num_modes: m, local_cutoff })
}

/// Evolves a pure state through a lossless circuit, gate by gate.
pub fn dense_evolve_state(psi: &DenseState, c: &Circuit) -> GbsResult<DenseState> {
    if c.num_modes != psi.num_modes {
        return Err(invalid!("state has {} modes, circuit has {}", psi.num_modes, c.num_modes));
    }
    if let Some(i) = c.first_lossy_gate() {
        return Err(unsupported!("gate {i} is lossy; use the density-matrix evolution"));
    }
    let mut out = psi.clone();
    for gate in c.gates() {
        out.apply_two_mode(gate.lower(), &gate_unitary_fock(&gate.params, psi.local_cutoff)?);
    }
    Ok(out)
}

/// A density matrix on `M` modes truncated to `n_c` photons per mode.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseDensity {
    pub matrix: DMatrix<C64>,
    pub num_modes: usize,
    pub local_cutoff: usize,
}

impl DenseDensity {
    pub fn from_state(psi: &DenseState) -> GbsResult<Self> {
        let dim = psi.amplitudes.len();
        if dim.saturating_mul(dim) > MAX_DENSITY_ENTRIES {
            return Err(GbsError::Resource(format!(
                "density matrix of dimension {dim} exceeds {MAX_DENSITY_ENTRIES} entries"
            )));
        }
        let v = DVector::from_column_slice(&psi.amplitudes);
        Ok(Self { matrix: &v * v.adjoint(), num_modes: psi.num_modes, local_cutoff: psi.local_cutoff })
    }

    fn d(&self) -> usize {
        self.local_cutoff + 1
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).norm()
    }

    pub fn conjugate_two_mode(&mut self, lower: usize, op: &DMatrix<C64>) {
        let d = self.d();
        self.matrix = conjugate(&self.matrix, |data, dim| apply_two_mode(data, dim, d, lower, op));
    }

    /// `ρ → Σ_μ K_μ ρ K_μ†` on one mode.
    pub fn apply_loss(&mut self, mode: usize, gamma: f64) -> GbsResult<()> {
        let d = self.d();
        let kraus = kraus_set(gamma, self.local_cutoff)?;
        let mut acc = DMatrix::<C64>::zeros(self.matrix.nrows(), self.matrix.ncols());
        for k in &kraus {
            acc += conjugate(&self.matrix, |data, dim| apply_one_mode(data, dim, d, mode, k));
        }
        self.matrix = acc;
        Ok(())
    }

    pub fn mean_photon(&self, mode: usize) -> f64 {
        let d = self.d();
        (0..self.matrix.nrows())
            .map(|idx| ((idx / d.pow(mode as u32)) % d) as f64 * self.matrix[(idx, idx)].re)
            .sum()
    }
}

impl FockDistribution for DenseDensity {
    fn num_modes(&self) -> usize {
        self.num_modes
    }
    fn local_cutoff(&self) -> usize {
        self.local_cutoff
    }
    fn population(&self, index: usize) -> f64 {
        self.matrix[(index, index)].re
    }
    fn trace_norm(&self) -> f64 {
        self.trace()
    }
}

/// Per gate: unitary conjugation, then the loss channel on the gate's lossy
/// output mode.
pub fn dense_evolve_density(rho: &DenseDensity, c: &Circuit) -> GbsResult<DenseDensity> {
    if c.num_modes != rho.num_modes {
        return Err(invalid!("density has {} modes, circuit has {}", rho.num_modes, c.num_modes));
    }
    let mut out = rho.clone();
    for gate in c.gates() {
        out.conjugate_two_mode(gate.lower(), &gate_unitary_fock(&gate.params, rho.local_cutoff)?);
        if gate.is_lossy() {
            out.apply_loss(gate.lossy_site(), gate.loss_gamma)?;
        }
    }
    Ok(out)
}

/// Adjoint channel of the circuit applied to an observable stored as a dense
/// matrix: gates in reverse order, each contributing `O → G†(Σ_μ K_μ† O K_μ)G`.
pub fn dense_evolve_observable(o: &DenseDensity, c: &Circuit) -> GbsResult<DenseDensity> {
    if c.num_modes != o.num_modes {
        return Err(invalid!("observable has {} modes, circuit has {}", o.num_modes, c.num_modes));
    }
    let d = o.d();
    let mut out = o.clone();
    for gate in c.gates().rev() {
        if gate.is_lossy() {
            let kraus = kraus_set(gate.loss_gamma, o.local_cutoff)?;
            let mut acc = DMatrix::<C64>::zeros(out.matrix.nrows(), out.matrix.ncols());
            for k in &kraus {
                let k_adj = k.adjoint();
                acc += conjugate(&out.matrix, |data, dim| apply_one_mode(data, dim, d, gate.lossy_site(), &k_adj));
            }
            out.matrix = acc;
        }
        let g_adj = gate_unitary_fock(&gate.params, o.local_cutoff)?.adjoint();
        out.conjugate_two_mode(gate.lower(), &g_adj);
    }
    Ok(out)
}
