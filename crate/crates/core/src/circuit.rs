//! Interferometers as data: gates, brickwork layouts, loss attachment, and the
//! matrices they compile to.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, unsupported, GbsResult};
use crate::linalg::{expi_hermitian, unitarity_defect};
use crate::C64;

/// Angles of one two-mode gate `G = U_{θ,φ} · P_ϕ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    /// Beamsplitter mixing angle θ.
    pub theta: f64,
    /// Beamsplitter phase φ.
    pub varphi: f64,
    /// Phase shift ϕ on the lower-index mode, applied before the beamsplitter.
    pub phi: f64,
}

impl GateParams {
    pub const IDENTITY: GateParams = GateParams { theta: 0.0, varphi: 0.0, phi: 0.0 };

    pub fn new(theta: f64, varphi: f64, phi: f64) -> Self {
        Self { theta, varphi, phi }
    }

    fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.varphi.is_finite() && self.phi.is_finite()
    }
}

/// A gate on the adjacent pair `(i, i + 1)`, optionally followed by a pure-loss
/// channel on one of its two output modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub modes: [usize; 2],
    #[serde(flatten)]
    pub params: GateParams,
    /// Probability that a photon on the lossy output mode is lost.
    #[serde(default)]
    pub loss_gamma: f64,
    /// 0 = lower-index output mode, 1 = upper-index output mode.
    #[serde(default = "default_lossy_mode")]
    pub lossy_mode: u8,
}

fn default_lossy_mode() -> u8 {
    1
}

impl Gate {
    pub fn new(lower: usize, params: GateParams) -> Self {
        Self { modes: [lower, lower + 1], params, loss_gamma: 0.0, lossy_mode: 1 }
    }

    pub fn with_loss(mut self, gamma: f64, lossy_mode: u8) -> Self {
        self.loss_gamma = gamma;
        self.lossy_mode = lossy_mode;
        self
    }

    pub fn lower(&self) -> usize {
        self.modes[0]
    }

    pub fn is_lossy(&self) -> bool {
        self.loss_gamma > 0.0
    }

    /// Absolute index of the mode carrying the loss channel.
    pub fn lossy_site(&self) -> usize {
        self.modes[usize::from(self.lossy_mode)]
    }

    fn validate(&self, num_modes: usize) -> GbsResult<()> {
        let [a, b] = self.modes;
        if b != a + 1 {
            return Err(invalid!("gate on modes ({a}, {b}) is not an adjacent pair"));
        }
        if b >= num_modes {
            return Err(invalid!("gate on modes ({a}, {b}) exceeds {num_modes} modes"));
        }
        if !self.params.is_finite() {
            return Err(invalid!("gate on modes ({a}, {b}) has non-finite angles"));
        }
        check_gamma(self.loss_gamma)?;
        if self.lossy_mode > 1 {
            return Err(invalid!("lossy_mode must be 0 or 1, got {}", self.lossy_mode));
        }
        Ok(())
    }
}

pub(crate) fn check_gamma(gamma: f64) -> GbsResult<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(invalid!("loss probability must lie in [0, 1), got {gamma}"));
    }
    Ok(())
}

/// A layered interferometer. Gates within a layer act on disjoint modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub num_modes: usize,
    /// Seed used to draw the angles, when the circuit was generated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub layers: Vec<Vec<Gate>>,
}

/// Where [`build_brickwork`] takes its gate angles from.
#[derive(Clone, Debug)]
pub enum AngleSource {
    /// θ uniform in [0, π/2), φ and ϕ uniform in [0, 2π), drawn in gate order.
    Seeded(u64),
    /// One entry per gate, in layer order.
    Explicit(Vec<GateParams>),
}

impl Circuit {
    pub fn new(num_modes: usize, layers: Vec<Vec<Gate>>) -> GbsResult<Self> {
        let c = Self { num_modes, seed: None, layers };
        c.validate()?;
        Ok(c)
    }

    /// A circuit with no gates.
    pub fn identity(num_modes: usize) -> GbsResult<Self> {
        Self::new(num_modes, Vec::new())
    }

    pub fn validate(&self) -> GbsResult<()> {
        if self.num_modes < 2 {
            return Err(invalid!("a circuit needs at least 2 modes, got {}", self.num_modes));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            let mut used = vec![false; self.num_modes];
            for gate in layer {
                gate.validate(self.num_modes)
                    .map_err(|e| invalid!("layer {l}: {e}"))?;
                for &m in &gate.modes {
                    if std::mem::replace(&mut used[m], true) {
                        return Err(invalid!("layer {l}: mode {m} is used by two gates"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Gates in application order.
    pub fn gates(&self) -> impl DoubleEndedIterator<Item = &Gate> + '_ {
        self.layers.iter().flatten()
    }

    pub fn num_gates(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn lossy_gate_count(&self) -> usize {
        self.gates().filter(|g| g.is_lossy()).count()
    }

    /// Index (in application order) of the first lossy gate, if any.
    pub fn first_lossy_gate(&self) -> Option<usize> {
        self.gates().position(Gate::is_lossy)
    }

    pub fn is_lossless(&self) -> bool {
        self.first_lossy_gate().is_none()
    }

    /// `Ok(γ)` when every gate carries the same loss probability, otherwise the
    /// index of the first gate that differs from gate 0.
    pub fn uniform_gamma(&self) -> Result<f64, usize> {
        let mut gates = self.gates();
        let Some(first) = gates.next() else { return Ok(0.0) };
        match gates.position(|g| g.loss_gamma != first.loss_gamma) {
            Some(i) => Err(i + 1),
            None => Ok(first.loss_gamma),
        }
    }

    /// Appends the layers of `other` after those of `self`.
    pub fn concat(&self, other: &Circuit) -> GbsResult<Circuit> {
        if self.num_modes != other.num_modes {
            return Err(invalid!("cannot concatenate {} and {} mode circuits", self.num_modes, other.num_modes));
        }
        let mut layers = self.layers.clone();
        layers.extend(other.layers.iter().cloned());
        Circuit::new(self.num_modes, layers)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serializes")
    }

    pub fn from_json(s: &str) -> GbsResult<Self> {
        let c: Circuit = serde_json::from_str(s).map_err(|e| invalid!("bad circuit JSON: {e}"))?;
        c.validate()?;
        Ok(c)
    }
}

/// Brickwork layout: layers 1, 3, 5, … hold gates on (0,1), (2,3), …; layers
/// 2, 4, … on (1,2), (3,4), …. All gates are lossless.
pub fn build_brickwork(num_modes: usize, depth: usize, angles: AngleSource) -> GbsResult<Circuit> {
    if num_modes < 2 {
        return Err(invalid!("brickwork needs at least 2 modes, got {num_modes}"));
    }
    let pairs: Vec<Vec<usize>> = (0..depth)
        .map(|l| (l % 2..num_modes - 1).step_by(2).collect())
        .collect();
    let count: usize = pairs.iter().map(Vec::len).sum();

    let (params, seed): (Vec<GateParams>, Option<u64>) = match angles {
        AngleSource::Seeded(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = (0..count)
                .map(|_| {
                    let theta = rng.random_range(0.0..FRAC_PI_2);
                    let varphi = rng.random_range(0.0..2.0 * PI);
                    let phi = rng.random_range(0.0..2.0 * PI);
                    GateParams { theta, varphi, phi }
                })
                .collect();
            (p, Some(seed))
        }
        AngleSource::Explicit(list) => {
            if list.len() != count {
                return Err(invalid!(
                    "brickwork of {num_modes} modes and depth {depth} has {count} gates, got {} angle sets",
                    list.len()
                ));
            }
            (list, None)
        }
    };

    let mut params = params.into_iter();
    let layers = pairs
        .into_iter()
        .map(|layer| {
            layer
                .into_iter()
                .map(|lower| Gate::new(lower, params.next().expect("counted")))
                .collect()
        })
        .collect();
    let mut c = Circuit::new(num_modes, layers)?;
    c.seed = seed;
    Ok(c)
}

/// Sets every gate's loss probability to `gamma` on its upper output mode.
pub fn with_uniform_loss(c: &Circuit, gamma: f64) -> GbsResult<Circuit> {
    check_gamma(gamma)?;
    let mut out = c.clone();
    for gate in out.layers.iter_mut().flatten() {
        gate.loss_gamma = gamma;
        gate.lossy_mode = 1;
    }
    Ok(out)
}

/// `G = U_{θ,φ} P_ϕ` on two modes truncated to `n_c` photons each.
///
/// The beamsplitter generator conserves the total photon number `T`, so each
/// block `{|k, T−k⟩ : k = 0..T}` is exponentiated exactly and then restricted
/// to `k, T−k ≤ n_c`. Blocks with `T ≤ n_c` are therefore exactly unitary.
pub fn gate_unitary_fock(g: &GateParams, local_cutoff: usize) -> GbsResult<DMatrix<C64>> {
    if local_cutoff < 1 {
        return Err(invalid!("local cutoff must be at least 1"));
    }
    let d = local_cutoff + 1;
    let mut out = DMatrix::<C64>::zeros(d * d, d * d);
    let hop = C64::from_polar(g.theta, -g.varphi);
    for total in 0..=2 * local_cutoff {
        // h[k−1, k] = θ e^{−iφ} ⟨k−1, T−k+1| a_lo a†_hi |k, T−k⟩
        let mut h = DMatrix::<C64>::zeros(total + 1, total + 1);
        for k in 1..=total {
            let amp = ((k * (total - k + 1)) as f64).sqrt();
            h[(k - 1, k)] = hop * amp;
            h[(k, k - 1)] = hop.conj() * amp;
        }
        let block = expi_hermitian(&h);
        let lo = total.saturating_sub(local_cutoff);
        let hi = total.min(local_cutoff);
        for k_out in lo..=hi {
            for k_in in lo..=hi {
                let phase = C64::from_polar(1.0, g.phi * k_in as f64);
                out[(k_out * d + total - k_out, k_in * d + total - k_in)] = block[(k_out, k_in)] * phase;
            }
        }
    }
    Ok(out)
}

/// Single-photon transfer block of one gate in the basis (photon on the lower
/// mode, photon on the upper mode).
pub fn single_photon_block(g: &GateParams) -> [[C64; 2]; 2] {
    let (s, c) = g.theta.sin_cos();
    let i = C64::i();
    let ph = C64::from_polar(1.0, g.phi);
    [
        [C64::from(c) * ph, i * C64::from_polar(s, g.varphi)],
        [i * C64::from_polar(s, -g.varphi) * ph, C64::from(c)],
    ]
}

/// The M×M single-particle transfer matrix `u`, with `U a†_k U† = Σ_i u_{ik} a†_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeUnitary {
    pub matrix: DMatrix<C64>,
}

impl ModeUnitary {
    pub fn identity(num_modes: usize) -> Self {
        Self { matrix: DMatrix::identity(num_modes, num_modes) }
    }

    pub fn num_modes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint() }
    }

    /// ‖u†u − 1‖_F
    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.matrix)
    }

    fn left_multiply_block(&mut self, lower: usize, b: &[[C64; 2]; 2]) {
        for col in 0..self.matrix.ncols() {
            let x = self.matrix[(lower, col)];
            let y = self.matrix[(lower + 1, col)];
            self.matrix[(lower, col)] = b[0][0] * x + b[0][1] * y;
            self.matrix[(lower + 1, col)] = b[1][0] * x + b[1][1] * y;
        }
    }
}

/// Composes the single-photon blocks of a lossless circuit in layer order.
pub fn circuit_to_mode_unitary(c: &Circuit) -> GbsResult<ModeUnitary> {
    if let Some(i) = c.first_lossy_gate() {
        return Err(unsupported!("gate {i} is lossy; a lossy circuit has no mode unitary"));
    }
    let mut u = ModeUnitary::identity(c.num_modes);
    for gate in c.gates() {
        u.left_multiply_block(gate.lower(), &single_photon_block(&gate.params));
    }
    Ok(u)
}

/// Mode unitary of the time-reversed circuit: layers in reverse order, each
/// gate replaced by its adjoint.
pub fn reversed_mode_unitary(c: &Circuit) -> GbsResult<ModeUnitary> {
    if let Some(i) = c.first_lossy_gate() {
        return Err(unsupported!("gate {i} is lossy; a lossy circuit has no mode unitary"));
    }
    let mut u = ModeUnitary::identity(c.num_modes);
    for gate in c.gates().rev() {
        let b = single_photon_block(&gate.params);
        let adj = [[b[0][0].conj(), b[1][0].conj()], [b[0][1].conj(), b[1][1].conj()]];
        u.left_multiply_block(gate.lower(), &adj);
    }
    Ok(u)
}

/// Kraus operators `K_μ = ⟨μ|_η W |0⟩_η`, μ = 0..n_c, of a pure-loss channel
/// with loss probability `γ = sin²α`, where `W` is the beamsplitter of angle α
/// coupling the mode to a vacuum ancilla.
pub fn kraus_set(gamma: f64, local_cutoff: usize) -> GbsResult<Vec<DMatrix<C64>>> {
    check_gamma(gamma)?;
    let d = local_cutoff + 1;
    let alpha = gamma.sqrt().asin();
    let w = gate_unitary_fock(&GateParams::new(alpha, 0.0, 0.0), local_cutoff)?;
    Ok((0..d)
        .map(|mu| DMatrix::from_fn(d, d, |m, n| if m + mu == n { w[(m * d + mu, n * d)] } else { C64::new(0.0, 0.0) }))
        .collect())
}
