//! Tensor-train engine: MPS/MPO evolution with SVD recompression, and GBS
//! outcome probabilities in the Heisenberg and Schrödinger pictures.
//!
//! Lossless Heisenberg evaluation evolves the Fock state `|n⟩` through the
//! reversed circuit and overlaps it with the squeezed input. Lossy evaluation
//! keeps the projector `|n⟩⟨n|` as an MPO and applies the adjoint channel
//! gate by gate, so the operator is never replaced by a state.

mod mpo;
mod mps;
mod train;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{choose_cutoff, CutoffPolicy};
use crate::circuit::{Circuit, Gate};
use crate::error::{invalid, unsupported, GbsError, GbsResult};
use crate::gauss::SqueezeSpec;
use crate::FockOutcome;

pub use mpo::{apply_gate_mpo_adjoint, Mpo};
pub use mps::{apply_gate_mps, fock_mps, squeezed_mps, Mps};

/// Singular values with `σ_i / σ_max < svd_threshold` are discarded, and at
/// most `max_bond` are kept.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TruncationPolicy {
    pub svd_threshold: f64,
    pub max_bond: Option<usize>,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { svd_threshold: 1e-12, max_bond: None }
    }
}

impl TruncationPolicy {
    pub fn new(svd_threshold: f64, max_bond: Option<usize>) -> GbsResult<Self> {
        let p = Self { svd_threshold, max_bond };
        p.validate()?;
        Ok(p)
    }

    /// No truncation beyond exact zeros.
    pub fn exact() -> Self {
        Self { svd_threshold: 0.0, max_bond: None }
    }

    pub fn validate(&self) -> GbsResult<()> {
        if !(0.0..1.0).contains(&self.svd_threshold) {
            return Err(invalid!("svd_threshold must lie in [0, 1), got {}", self.svd_threshold));
        }
        if self.max_bond == Some(0) {
            return Err(invalid!("max_bond must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EvolutionStats {
    pub max_bond_seen: usize,
    /// Bond dimensions after each circuit layer, in the order layers were applied.
    pub per_layer_bonds: Vec<Vec<usize>>,
    /// Sum of discarded squared singular values over all splits.
    pub truncation_weight: f64,
    /// Modelled cost, `Σ χ³ · p² · d²` over splits, where `p` is the physical
    /// dimension of a site (`d` for states, `d²` for operators).
    pub flop_estimate: f64,
    /// Unclamped value, when the result was clamped.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_probability: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EvolutionStats {
    fn start() -> Self {
        Self { max_bond_seen: 1, ..Self::default() }
    }

    pub(crate) fn record_split(&mut self, split: &train::Split, d: usize, order: u32) {
        self.max_bond_seen = self.max_bond_seen.max(split.bond);
        self.truncation_weight += split.discarded;
        let chi = split.left.max(split.right).max(split.bond) as f64;
        let p = d.pow(order) as f64;
        self.flop_estimate += chi.powi(3) * p * p * (d * d) as f64;
    }

    fn end_layer(&mut self, bonds: Vec<usize>) {
        self.max_bond_seen = self.max_bond_seen.max(bonds.iter().copied().max().unwrap_or(1));
        self.per_layer_bonds.push(bonds);
    }
}

pub(crate) fn check_gate_sites(gate: &Gate, num_modes: usize) -> GbsResult<()> {
    let [a, b] = gate.modes;
    if b != a + 1 {
        return Err(invalid!("gate on modes ({a}, {b}) is not an adjacent pair"));
    }
    if b >= num_modes {
        return Err(invalid!("gate on modes ({a}, {b}) outside {num_modes} modes"));
    }
    Ok(())
}

fn check_inputs(c: &Circuit, n: &FockOutcome, s: &SqueezeSpec, local_cutoff: usize) -> GbsResult<()> {
    c.validate()?;
    if s.num_modes() != c.num_modes {
        return Err(invalid!("{} squeezing parameters for {} modes", s.num_modes(), c.num_modes));
    }
    n.check_modes(c.num_modes)?;
    n.check_cutoff(local_cutoff)
}

fn check_lossless(c: &Circuit, what: &str) -> GbsResult<()> {
    match c.first_lossy_gate() {
        Some(k) => Err(unsupported!("{what} needs a lossless circuit; gate {k} is lossy")),
        None => Ok(()),
    }
}

/// Tiny negative values from roundoff become 0; anything below `−1e−9` is an error.
fn clamp_probability(raw: f64, stats: &mut EvolutionStats) -> GbsResult<f64> {
    if !raw.is_finite() || raw < -1e-9 {
        return Err(GbsError::NumericalFailure(format!("probability evaluated to {raw}")));
    }
    let p = raw.clamp(0.0, 1.0);
    if p != raw {
        stats.raw_probability = Some(raw);
    }
    Ok(p)
}

/// Evolves `|n⟩` backwards through the circuit: reversed layer order, each
/// gate conjugate-transposed.
pub fn reversed_evolution(
    c: &Circuit,
    n: &FockOutcome,
    local_cutoff: usize,
    policy: &TruncationPolicy,
) -> GbsResult<(Mps, EvolutionStats)> {
    policy.validate()?;
    let mut psi = fock_mps(n, local_cutoff)?;
    let mut stats = EvolutionStats::start();
    for layer in c.layers.iter().rev() {
        for gate in layer.iter().rev() {
            apply_gate_mps(&mut psi, gate, true, policy, &mut stats)?;
        }
        stats.end_layer(psi.bond_dims());
    }
    Ok((psi, stats))
}

/// Evolves the squeezed input forwards through a lossless circuit.
pub fn forward_evolution(
    c: &Circuit,
    s: &SqueezeSpec,
    local_cutoff: usize,
    policy: &TruncationPolicy,
) -> GbsResult<(Mps, EvolutionStats)> {
    policy.validate()?;
    check_lossless(c, "state evolution")?;
    if s.num_modes() != c.num_modes {
        return Err(invalid!("{} squeezing parameters for {} modes", s.num_modes(), c.num_modes));
    }
    let mut psi = squeezed_mps(s, local_cutoff);
    let mut stats = EvolutionStats::start();
    for layer in &c.layers {
        for gate in layer {
            apply_gate_mps(&mut psi, gate, false, policy, &mut stats)?;
        }
        stats.end_layer(psi.bond_dims());
    }
    Ok((psi, stats))
}

/// `|⟨ψ| U†|n⟩|²` with `U†|n⟩` computed as an MPS.
pub fn heisenberg_probability_lossless(
    c: &Circuit,
    n: &FockOutcome,
    s: &SqueezeSpec,
    local_cutoff: usize,
    policy: &TruncationPolicy,
) -> GbsResult<(f64, EvolutionStats)> {
    check_inputs(c, n, s, local_cutoff)?;
    check_lossless(c, "lossless Heisenberg evaluation")?;
    let (evolved, mut stats) = reversed_evolution(c, n, local_cutoff, policy)?;
    let raw = squeezed_mps(s, local_cutoff).overlap(&evolved).norm_sqr();
    let p = clamp_probability(raw, &mut stats)?;
    Ok((p, stats))
}

/// Applies the adjoint channel of the whole circuit to `|n⟩⟨n|`.
pub fn evolve_projector(
    c: &Circuit,
    n: &FockOutcome,
    local_cutoff: usize,
    policy: &TruncationPolicy,
) -> GbsResult<(Mpo, EvolutionStats)> {
    policy.validate()?;
    let mut o = Mpo::projector(n, local_cutoff)?;
    let mut stats = EvolutionStats::start();
    for layer in c.layers.iter().rev() {
        for gate in layer.iter().rev() {
            apply_gate_mpo_adjoint(&mut o, gate, policy, &mut stats)?;
        }
        stats.end_layer(o.bond_dims());
    }
    Ok((o, stats))
}

/// `⟨ψ|E*(P_n)|ψ⟩`, valid for any mix of lossy and lossless gates.
///
/// When the cutoff is below the recommendation of
/// [`choose_cutoff`](crate::analysis::choose_cutoff) a warning is recorded in
/// the stats; the evaluation still runs.
pub fn heisenberg_probability_lossy(
    c: &Circuit,
    n: &FockOutcome,
    s: &SqueezeSpec,
    local_cutoff: usize,
    policy: &TruncationPolicy,
) -> GbsResult<(f64, EvolutionStats)> {
    check_inputs(c, n, s, local_cutoff)?;
    let (o, mut stats) = evolve_projector(c, n, local_cutoff, policy)?;
    if let Some(w) = cutoff_warning(c, n, s, local_cutoff) {
        stats.warnings.push(w);
    }
    let raw = o.expectation(&squeezed_mps(s, local_cutoff)).re;
    let p = clamp_probability(raw, &mut stats)?;
    Ok((p, stats))
}

fn cutoff_warning(c: &Circuit, n: &FockOutcome, s: &SqueezeSpec, local_cutoff: usize) -> Option<String> {
    let gamma = c.uniform_gamma().ok()?;
    if gamma == 0.0 || c.num_modes % 2 == 1 {
        return None;
    }
    let r = s.r[0];
    if s.r.iter().any(|&x| x != r) {
        return None;
    }
    let policy = CutoffPolicy::from_circuit(c, r, n.total()).ok()?;
    let recommended = choose_cutoff(&policy).ok()?;
    (local_cutoff < recommended).then(|| {
        format!("local cutoff {local_cutoff} is below the recommended {recommended} for γ = {gamma}")
    })
}

/// `|⟨n|U|ψ⟩|²` with `U|ψ⟩` computed as an MPS. Lossless circuits only.
pub fn schrodinger_probability(
    c: &Circuit,
    n: &FockOutcome,
    s: &SqueezeSpec,
    local_cutoff: usize,
    policy: &TruncationPolicy,
) -> GbsResult<(f64, EvolutionStats)> {
    check_inputs(c, n, s, local_cutoff)?;
    let (evolved, mut stats) = forward_evolution(c, s, local_cutoff, policy)?;
    let raw = fock_mps(n, local_cutoff)?.overlap(&evolved).norm_sqr();
    let p = clamp_probability(raw, &mut stats)?;
    Ok((p, stats))
}

/// Which picture and channel model a batch evaluation uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Picture {
    HeisenbergLossless,
    HeisenbergLossy,
    Schrodinger,
}

/// Evaluates many outcomes concurrently; results keep the input order.
///
/// In the Schrödinger picture the forward evolution is shared by all outcomes
/// and its stats are reported for each of them.
pub fn batch_probabilities(
    picture: Picture,
    c: &Circuit,
    outcomes: &[FockOutcome],
    s: &SqueezeSpec,
    local_cutoff: usize,
    policy: &TruncationPolicy,
) -> Vec<GbsResult<(f64, EvolutionStats)>> {
    match picture {
        Picture::Schrodinger => {
            let evolved = forward_evolution(c, s, local_cutoff, policy);
            let (psi, stats) = match evolved {
                Ok(v) => v,
                Err(e) => return outcomes.iter().map(|_| Err(e.clone())).collect(),
            };
            outcomes
                .par_iter()
                .map(|n| {
                    check_inputs(c, n, s, local_cutoff)?;
                    let mut st = stats.clone();
                    let raw = fock_mps(n, local_cutoff)?.overlap(&psi).norm_sqr();
                    let p = clamp_probability(raw, &mut st)?;
                    Ok((p, st))
                })
                .collect()
        }
        Picture::HeisenbergLossless => outcomes
            .par_iter()
            .map(|n| heisenberg_probability_lossless(c, n, s, local_cutoff, policy))
            .collect(),
        Picture::HeisenbergLossy => outcomes
            .par_iter()
            .map(|n| heisenberg_probability_lossy(c, n, s, local_cutoff, policy))
            .collect(),
    }
}
