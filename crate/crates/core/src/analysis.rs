//! Cutoff selection from the binomial photon-gain model, and analytic
//! bond-dimension estimates for the Heisenberg and Schrödinger pictures.

use serde::Serialize;

use crate::circuit::Circuit;
use crate::error::{invalid, unsupported, GbsResult};
use crate::gauss::photon_total_distribution;
use crate::FockOutcome;

/// Inputs of the cutoff rule `Δ_γ(n_c) < ε`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutoffPolicy {
    pub epsilon: f64,
    pub gamma: f64,
    /// Number of independent photon sources `Q`.
    pub num_sources: usize,
    pub num_modes: usize,
    pub r: f64,
    pub n_tilde: usize,
}

impl CutoffPolicy {
    pub const DEFAULT_EPSILON: f64 = 1e-6;

    pub fn new(gamma: f64, num_sources: usize, num_modes: usize, r: f64, n_tilde: usize) -> GbsResult<Self> {
        let p = Self { epsilon: Self::DEFAULT_EPSILON, gamma, num_sources, num_modes, r, n_tilde };
        p.validate()?;
        Ok(p)
    }

    /// Uses the circuit's uniform loss and takes every lossy gate as a source.
    pub fn from_circuit(c: &Circuit, r: f64, n_tilde: usize) -> GbsResult<Self> {
        let gamma = c
            .uniform_gamma()
            .map_err(|k| invalid!("circuit loss is not uniform (gate {k} differs)"))?;
        Self::new(gamma, c.lossy_gate_count(), c.num_modes, r, n_tilde)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> GbsResult<Self> {
        self.epsilon = epsilon;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> GbsResult<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(invalid!("epsilon must lie in (0, 1], got {}", self.epsilon));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(invalid!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !self.r.is_finite() {
            return Err(invalid!("squeezing must be finite, got {}", self.r));
        }
        if self.num_modes % 2 == 1 || self.num_modes == 0 {
            return Err(unsupported!("cutoff rule needs an even number of modes, got {}", self.num_modes));
        }
        Ok(())
    }
}

/// `π_γ(x) = C(Q, x) γ^x (1 − γ)^{Q − x}`; zero for `x > Q`.
pub fn pi_gamma(num_sources: usize, gamma: f64, x: usize) -> f64 {
    if x > num_sources {
        return 0.0;
    }
    if gamma == 0.0 {
        return if x == 0 { 1.0 } else { 0.0 };
    }
    if gamma == 1.0 {
        return if x == num_sources { 1.0 } else { 0.0 };
    }
    let k = x.min(num_sources - x);
    let ln_binom: f64 = (0..k).map(|i| ((num_sources - i) as f64).ln() - ((i + 1) as f64).ln()).sum();
    (ln_binom + x as f64 * gamma.ln() + (num_sources - x) as f64 * (1.0 - gamma).ln()).exp()
}

/// `Δ_γ(ñ) = Σ_{x=1..Q} π_γ(x) P(ñ + x)` with `P` the total-photon
/// distribution of `M` equally squeezed vacua.
pub fn delta_gamma(policy: &CutoffPolicy, n_tilde: usize) -> GbsResult<f64> {
    policy.validate()?;
    let mut sum = 0.0;
    for x in 1..=policy.num_sources {
        let w = pi_gamma(policy.num_sources, policy.gamma, x);
        if w == 0.0 {
            continue;
        }
        sum += w * photon_total_distribution(policy.num_modes, policy.r, n_tilde + x)?;
    }
    Ok(sum)
}

/// Smallest `n ≥ ñ` with `Δ_γ(n) < ε`; `ε = 1` is met at `n = ñ`.
pub fn choose_cutoff_with_delta(policy: &CutoffPolicy) -> GbsResult<(usize, f64)> {
    const MAX_STEPS: usize = 1_000_000;
    let mut n = policy.n_tilde;
    for _ in 0..MAX_STEPS {
        let d = delta_gamma(policy, n)?;
        if d < policy.epsilon || policy.epsilon >= 1.0 {
            return Ok((n, d));
        }
        n += 1;
    }
    Err(crate::GbsError::NumericalFailure(format!(
        "no cutoff below {n} reaches Δ < {}",
        policy.epsilon
    )))
}

pub fn choose_cutoff(policy: &CutoffPolicy) -> GbsResult<usize> {
    choose_cutoff_with_delta(policy).map(|(n, _)| n)
}

/// `∏_k (n_k + 1)`: bond bound for a reversed Fock input.
pub fn dmax_fbs(n: &FockOutcome) -> u128 {
    n.counts().iter().map(|&k| k as u128 + 1).product()
}

/// `n_c^{M/2}`: bond bound for a forward-evolved squeezed state.
pub fn dmax_gbs(local_cutoff: usize, num_modes: usize) -> GbsResult<u128> {
    if num_modes % 2 == 1 {
        return Err(unsupported!("D_max^GBS is defined for even M, got {num_modes}"));
    }
    (local_cutoff as u128)
        .checked_pow((num_modes / 2) as u32)
        .ok_or_else(|| invalid!("{local_cutoff}^{} overflows", num_modes / 2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BipartitionSpec {
    pub m_left: usize,
    pub m_right: usize,
    pub photons: usize,
}

impl BipartitionSpec {
    /// The balanced cut, with the extra mode (odd `M`) on the right.
    pub fn symmetric(num_modes: usize, photons: usize) -> Self {
        Self { m_left: num_modes / 2, m_right: num_modes - num_modes / 2, photons }
    }

    pub fn num_modes(&self) -> usize {
        self.m_left + self.m_right
    }
}

/// `C(n, k)` in exact integer arithmetic.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n − i) is divisible by (i + 1) at every step.
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of ways to place `k` photons in `m` modes, `C(m − 1 + k, k)`; a
/// partition without modes holds only the empty configuration.
fn placements(m: usize, k: usize) -> u128 {
    if m == 0 {
        return u128::from(k == 0);
    }
    binomial(m - 1 + k, k)
}

/// `Σ_{k=0..N} min{C(m_L − 1 + k, k), C(m_R − 1 + N − k, N − k)}`.
pub fn dmax_bipartite(spec: &BipartitionSpec) -> u128 {
    let n = spec.photons;
    (0..=n)
        .map(|k| placements(spec.m_left, k).min(placements(spec.m_right, n - k)))
        .sum()
}

/// Closed form of [`dmax_bipartite`] for the balanced cut of an even `M`.
pub fn dmax_closed_form(num_modes: usize, photons: usize) -> GbsResult<u128> {
    if num_modes % 2 == 1 || num_modes == 0 {
        return Err(unsupported!("closed form needs an even positive M, got {num_modes}"));
    }
    let h = num_modes / 2;
    let n = photons;
    // Terms grow with k up to the middle and are mirrored beyond it.
    let rising = |upto: usize| -> u128 { (0..=upto).map(|k| binomial(h - 1 + k, k)).sum() };
    Ok(if n % 2 == 0 {
        if n == 0 {
            1
        } else {
            2 * rising(n / 2 - 1) + binomial(h - 1 + n / 2, n / 2)
        }
    } else {
        2 * rising((n - 1) / 2)
    })
}

/// Nearest even integer to `2 (M/2 − 1) sinh²(r)`.
pub fn mode_of_distribution(num_modes: usize, r: f64) -> GbsResult<usize> {
    if num_modes % 2 == 1 || num_modes < 4 {
        return Err(unsupported!("mode formula needs even M ≥ 4, got {num_modes}"));
    }
    let value = mode_formula(num_modes, r);
    Ok(2 * (value / 2.0).round() as usize)
}

/// Unrounded `2 (M/2 − 1) sinh²(r)`.
pub fn mode_formula(num_modes: usize, r: f64) -> f64 {
    2.0 * (num_modes as f64 / 2.0 - 1.0) * r.sinh().powi(2)
}

/// One line of the Heisenberg-versus-Schrödinger bond-dimension comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub num_modes: usize,
    pub r: f64,
    pub n_mode: usize,
    /// `2^n`; absent outside `1 < n < M`.
    pub d_heisenberg: Option<f64>,
    /// `n^{M/2}`; absent outside `1 < n < M`.
    pub d_schrodinger: Option<f64>,
    pub out_of_regime: bool,
}

pub fn scaling_row(num_modes: usize, r: f64) -> GbsResult<ScalingRow> {
    let n = mode_of_distribution(num_modes, r)?;
    let in_regime = 1 < n && n < num_modes;
    Ok(ScalingRow {
        num_modes,
        r,
        n_mode: n,
        d_heisenberg: in_regime.then(|| 2f64.powi(n as i32)),
        d_schrodinger: in_regime.then(|| (n as f64).powf(num_modes as f64 / 2.0)),
        out_of_regime: !in_regime,
    })
}

/// Rows for every `(M, r)` pair, in the given order (modes outermost).
pub fn scaling_grid(modes: &[usize], squeezing: &[f64]) -> GbsResult<Vec<ScalingRow>> {
    let mut rows = Vec::with_capacity(modes.len() * squeezing.len());
    for &m in modes {
        for &r in squeezing {
            rows.push(scaling_row(m, r)?);
        }
    }
    Ok(rows)
}
