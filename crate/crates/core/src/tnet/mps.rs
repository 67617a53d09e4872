use nalgebra::DMatrix;

use crate::circuit::{gate_unitary_fock, Gate};
use crate::error::GbsResult;
use crate::fockdense::single_mode_squeezed;
use crate::gauss::SqueezeSpec;
use crate::{FockOutcome, C64};

use super::train::TensorTrain;
use super::{check_gate_sites, EvolutionStats, TruncationPolicy};

/// A matrix product state over `M` modes, each truncated to `n_c` photons.
///
/// The norm is carried by the tensors themselves; nothing renormalizes it.
#[derive(Clone, Debug)]
pub struct Mps {
    pub(crate) train: TensorTrain,
    pub(crate) local_cutoff: usize,
}

impl Mps {
    pub fn num_modes(&self) -> usize {
        self.train.len()
    }

    pub fn local_cutoff(&self) -> usize {
        self.local_cutoff
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.train.bonds()
    }

    pub fn max_bond(&self) -> usize {
        self.train.max_bond()
    }

    /// `⟨self|other⟩`
    pub fn overlap(&self, other: &Mps) -> C64 {
        self.train.inner(&other.train)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.overlap(self).re
    }

    /// Amplitudes in the dense simulator's little-endian basis order.
    pub fn to_dense(&self) -> Vec<C64> {
        self.train.to_dense()
    }

    /// Applies a precomputed two-mode Fock operator to modes `(lower, lower+1)`.
    pub(crate) fn apply_two_mode(
        &mut self,
        lower: usize,
        op: &DMatrix<C64>,
        policy: &TruncationPolicy,
        stats: &mut EvolutionStats,
    ) {
        let p = self.train.phys;
        let split = self.train.update_pair(lower, policy, |theta| {
            let (l, _, _, r) = theta.dim();
            let mut buf = nalgebra::DVector::<C64>::zeros(p * p);
            for a in 0..l {
                for b in 0..r {
                    for s in 0..p {
                        for t in 0..p {
                            buf[s * p + t] = theta[[a, s, t, b]];
                        }
                    }
                    let out = op * &buf;
                    for s in 0..p {
                        for t in 0..p {
                            theta[[a, s, t, b]] = out[s * p + t];
                        }
                    }
                }
            }
        });
        stats.record_split(&split, p, 1);
    }
}

fn fock_vector(n: usize, d: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); d];
    v[n] = C64::new(1.0, 0.0);
    v
}

/// Product state `|n_0, …, n_{M−1}⟩`.
pub fn fock_mps(n: &FockOutcome, local_cutoff: usize) -> GbsResult<Mps> {
    n.check_cutoff(local_cutoff)?;
    let d = local_cutoff + 1;
    let vectors: Vec<Vec<C64>> = n.counts().iter().map(|&k| fock_vector(k, d)).collect();
    Ok(Mps { train: TensorTrain::product(&vectors, d), local_cutoff })
}

/// Product of single-mode squeezed vacua, truncated at `n_c` photons per mode
/// without renormalization.
pub fn squeezed_mps(s: &SqueezeSpec, local_cutoff: usize) -> Mps {
    let d = local_cutoff + 1;
    let vectors: Vec<Vec<C64>> = s
        .r
        .iter()
        .map(|&r| single_mode_squeezed(r, local_cutoff).into_iter().map(C64::from).collect())
        .collect();
    Mps { train: TensorTrain::product(&vectors, d), local_cutoff }
}

/// Applies one gate (its adjoint when `reversed`) to the MPS and recompresses.
///
/// Any loss attached to the gate is ignored here; state evolution is for
/// lossless circuits.
pub fn apply_gate_mps(
    psi: &mut Mps,
    gate: &Gate,
    reversed: bool,
    policy: &TruncationPolicy,
    stats: &mut EvolutionStats,
) -> GbsResult<()> {
    check_gate_sites(gate, psi.num_modes())?;
    let g = gate_unitary_fock(&gate.params, psi.local_cutoff)?;
    let op = if reversed { g.adjoint() } else { g };
    psi.apply_two_mode(gate.lower(), &op, policy, stats);
    Ok(())
}
