use nalgebra::DMatrix;

use crate::circuit::{gate_unitary_fock, kraus_set, Gate};
use crate::error::GbsResult;
use crate::{FockOutcome, C64};

use super::mps::Mps;
use super::train::TensorTrain;
use super::{check_gate_sites, EvolutionStats, TruncationPolicy};

/// A matrix product operator. Internally a tensor train whose physical index
/// is the pair `(out, in)` flattened as `out * d + in`.
#[derive(Clone, Debug)]
pub struct Mpo {
    pub(crate) train: TensorTrain,
    pub(crate) local_cutoff: usize,
}

/// Single-site superoperator `X ↦ Σ_μ K_μ† X K_μ` as a `d² × d²` matrix on
/// the flattened `(out, in)` index.
pub(crate) fn adjoint_loss_superop(gamma: f64, local_cutoff: usize) -> GbsResult<DMatrix<C64>> {
    let d = local_cutoff + 1;
    let kraus = kraus_set(gamma, local_cutoff)?;
    let mut sup = DMatrix::<C64>::zeros(d * d, d * d);
    for k in &kraus {
        for o in 0..d {
            for i in 0..d {
                for m in 0..d {
                    for mp in 0..d {
                        sup[(o * d + i, m * d + mp)] += k[(m, o)].conj() * k[(mp, i)];
                    }
                }
            }
        }
    }
    Ok(sup)
}

impl Mpo {
    /// The projector `|n⟩⟨n|` as a bond-1 MPO.
    pub fn projector(n: &FockOutcome, local_cutoff: usize) -> GbsResult<Self> {
        n.check_cutoff(local_cutoff)?;
        let d = local_cutoff + 1;
        let vectors: Vec<Vec<C64>> = n
            .counts()
            .iter()
            .map(|&k| {
                let mut v = vec![C64::new(0.0, 0.0); d * d];
                v[k * d + k] = C64::new(1.0, 0.0);
                v
            })
            .collect();
        Ok(Self { train: TensorTrain::product(&vectors, d * d), local_cutoff })
    }

    pub fn num_modes(&self) -> usize {
        self.train.len()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.train.bonds()
    }

    pub fn max_bond(&self) -> usize {
        self.train.max_bond()
    }

    /// Dense `d^M × d^M` matrix in the little-endian basis.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let d = self.local_cutoff + 1;
        let m = self.num_modes();
        let dim = d.pow(m as u32);
        let flat = self.train.to_dense();
        DMatrix::from_fn(dim, dim, |row, col| {
            // Site k contributes (out_k * d + in_k) * (d²)^k to the flat index.
            let (mut r, mut c, mut idx, mut stride) = (row, col, 0, 1);
            for _ in 0..m {
                idx += ((r % d) * d + c % d) * stride;
                r /= d;
                c /= d;
                stride *= d * d;
            }
            flat[idx]
        })
    }

    /// `⟨ψ|O|ψ⟩`
    pub fn expectation(&self, psi: &Mps) -> C64 {
        let d = self.local_cutoff + 1;
        assert_eq!(psi.local_cutoff, self.local_cutoff);
        // env[(a_bra, a_op, a_ket)] flattened with a_bra slowest.
        let mut env = vec![C64::new(1.0, 0.0)];
        let mut dims = (1, 1, 1);
        for (op, st) in self.train.sites.iter().zip(&psi.train.sites) {
            let (_, _, ro) = op.dim();
            let (_, _, rs) = st.dim();
            let mut next = vec![C64::new(0.0, 0.0); rs * ro * rs];
            for ab in 0..dims.0 {
                for ao in 0..dims.1 {
                    for ak in 0..dims.2 {
                        let e = env[(ab * dims.1 + ao) * dims.2 + ak];
                        if e == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for out in 0..d {
                            for inp in 0..d {
                                for bo in 0..ro {
                                    let w = e * op[[ao, out * d + inp, bo]];
                                    if w == C64::new(0.0, 0.0) {
                                        continue;
                                    }
                                    for bb in 0..rs {
                                        let wb = w * st[[ab, out, bb]].conj();
                                        for bk in 0..rs {
                                            next[(bb * ro + bo) * rs + bk] += wb * st[[ak, inp, bk]];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            env = next;
            dims = (rs, ro, rs);
        }
        env[0]
    }

    /// One backward step through a gate: optional adjoint loss on the lossy
    /// site, then conjugation `X ↦ G† X G` on the pair, then recompression.
    pub(crate) fn apply_adjoint_step(
        &mut self,
        lower: usize,
        gate: &DMatrix<C64>,
        loss: Option<(usize, &DMatrix<C64>)>,
        policy: &TruncationPolicy,
        stats: &mut EvolutionStats,
    ) {
        let d = self.local_cutoff + 1;
        let p = d * d;
        let gate_adj = gate.adjoint();
        let split = self.train.update_pair(lower, policy, |theta| {
            let (l, _, _, r) = theta.dim();
            let mut x = DMatrix::<C64>::zeros(p, p);
            let mut tmp = nalgebra::DVector::<C64>::zeros(p);
            for a in 0..l {
                for b in 0..r {
                    if let Some((site, sup)) = loss {
                        // sup acts on the flattened (out, in) index of one site.
                        for other in 0..p {
                            for k in 0..p {
                                tmp[k] = if site == 0 { theta[[a, k, other, b]] } else { theta[[a, other, k, b]] };
                            }
                            let y = sup * &tmp;
                            for k in 0..p {
                                if site == 0 {
                                    theta[[a, k, other, b]] = y[k];
                                } else {
                                    theta[[a, other, k, b]] = y[k];
                                }
                            }
                        }
                    }
                    // X[(o1,o2),(i1,i2)] from s = (o1,i1), t = (o2,i2).
                    for s in 0..p {
                        for t in 0..p {
                            let (o1, i1, o2, i2) = (s / d, s % d, t / d, t % d);
                            x[(o1 * d + o2, i1 * d + i2)] = theta[[a, s, t, b]];
                        }
                    }
                    let y = &gate_adj * &x * gate;
                    for s in 0..p {
                        for t in 0..p {
                            let (o1, i1, o2, i2) = (s / d, s % d, t / d, t % d);
                            theta[[a, s, t, b]] = y[(o1 * d + o2, i1 * d + i2)];
                        }
                    }
                }
            }
        });
        stats.record_split(&split, d, 2);
    }
}

/// One gate of the adjoint channel: `O ↦ U†(Σ_μ K_μ† O K_μ)U`, where the Kraus
/// sum acts on the gate's lossy output mode.
pub fn apply_gate_mpo_adjoint(
    o: &mut Mpo,
    gate: &Gate,
    policy: &TruncationPolicy,
    stats: &mut EvolutionStats,
) -> GbsResult<()> {
    check_gate_sites(gate, o.num_modes())?;
    let g = gate_unitary_fock(&gate.params, o.local_cutoff)?;
    let sup = if gate.is_lossy() { Some(adjoint_loss_superop(gate.loss_gamma, o.local_cutoff)?) } else { None };
    let loss = sup.as_ref().map(|s| (usize::from(gate.lossy_mode), s));
    o.apply_adjoint_step(gate.lower(), &g, loss, policy, stats);
    Ok(())
}
