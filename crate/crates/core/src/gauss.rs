//! Exact Gaussian reference: covariance matrices, their propagation through
//! linear optics and pure loss, and outcome probabilities from hafnians.
//!
//! Covariances use the complex ordering `ζ = (a_1…a_M, a†_1…a†_M)` with
//! `σ_ij = ⟨{ζ_i, ζ_j†}⟩/2 − ⟨ζ_i⟩⟨ζ_j†⟩`; all states here have zero mean.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::circuit::{single_photon_block, Circuit, ModeUnitary};
use crate::error::{invalid, unsupported, GbsError, GbsResult};
use crate::{FockOutcome, C64};

/// Squeezing parameters `r_i`, one per input mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezeSpec {
    pub r: Vec<f64>,
}

impl SqueezeSpec {
    pub fn new(r: Vec<f64>) -> GbsResult<Self> {
        if let Some(bad) = r.iter().find(|x| !x.is_finite()) {
            return Err(invalid!("squeezing parameter {bad} is not finite"));
        }
        Ok(Self { r })
    }

    /// The same `r` on every mode.
    pub fn uniform(num_modes: usize, r: f64) -> Self {
        Self { r: vec![r; num_modes] }
    }

    pub fn num_modes(&self) -> usize {
        self.r.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    pub cov: DMatrix<C64>,
    pub num_modes: usize,
}

impl GaussianState {
    pub fn vacuum(num_modes: usize) -> Self {
        Self { cov: DMatrix::identity(2 * num_modes, 2 * num_modes) * C64::from(0.5), num_modes }
    }

    /// `⟨a_k† a_k⟩`
    pub fn mean_photon(&self, mode: usize) -> f64 {
        self.cov[(mode, mode)].re - 0.5
    }

    pub fn total_mean_photon(&self) -> f64 {
        (0..self.num_modes).map(|k| self.mean_photon(k)).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.cov - self.cov.adjoint()).norm()
    }
}

/// Covariance of `⊗_i S(r_i)|0⟩`.
///
/// Per mode, `⟨a†a⟩ = sinh² r` and `⟨a²⟩ = −sinh(2r)/2`; the sign of the
/// anomalous moment is pinned against the dense simulator by regression
/// tests.
pub fn squeezed_vacuum_cov(s: &SqueezeSpec) -> GaussianState {
    let m = s.num_modes();
    let mut g = GaussianState::vacuum(m);
    for (k, &r) in s.r.iter().enumerate() {
        let c = C64::from(0.5 * (2.0 * r).cosh());
        let a = C64::from(-0.5 * (2.0 * r).sinh());
        g.cov[(k, k)] = c;
        g.cov[(m + k, m + k)] = c;
        g.cov[(k, m + k)] = a;
        g.cov[(m + k, k)] = a;
    }
    g
}

/// `σ → T σ T†` with `T = u ⊕ u*`.
pub fn propagate(g: &GaussianState, u: &ModeUnitary) -> GbsResult<GaussianState> {
    let m = g.num_modes;
    if u.num_modes() != m {
        return Err(invalid!("unitary acts on {} modes, state has {m}", u.num_modes()));
    }
    let mut t = DMatrix::<C64>::zeros(2 * m, 2 * m);
    t.view_mut((0, 0), (m, m)).copy_from(&u.matrix);
    t.view_mut((m, m), (m, m)).copy_from(&u.matrix.conjugate());
    Ok(GaussianState { cov: &t * &g.cov * t.adjoint(), num_modes: m })
}

/// Pure loss `a → √η a + √(1−η) v` on one mode.
pub fn apply_mode_loss(g: &mut GaussianState, mode: usize, eta: f64) -> GbsResult<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(invalid!("transmission must lie in (0, 1], got {eta}"));
    }
    let m = g.num_modes;
    let s = eta.sqrt();
    for idx in [mode, m + mode] {
        for j in 0..2 * m {
            g.cov[(idx, j)] *= s;
            g.cov[(j, idx)] *= s;
        }
        g.cov[(idx, idx)] += C64::from(0.5 * (1.0 - eta));
    }
    Ok(())
}

/// The same pure-loss channel on every mode.
pub fn uniform_loss(g: &GaussianState, eta: f64) -> GbsResult<GaussianState> {
    let mut out = g.clone();
    for k in 0..g.num_modes {
        apply_mode_loss(&mut out, k, eta)?;
    }
    Ok(out)
}

/// Gate-by-gate evolution, with each gate's loss applied after it on its
/// lossy output mode.
pub fn evolve_circuit(g: &GaussianState, c: &Circuit) -> GbsResult<GaussianState> {
    let m = g.num_modes;
    if c.num_modes != m {
        return Err(invalid!("circuit acts on {} modes, state has {m}", c.num_modes));
    }
    let mut out = g.clone();
    for gate in c.gates() {
        let b = single_photon_block(&gate.params);
        let lo = gate.lower();
        // Left-multiply rows (lo, lo+1) by b, rows (M+lo, M+lo+1) by b*,
        // then the same on columns with the adjoint.
        for (rows, conj) in [((lo, lo + 1), false), ((m + lo, m + lo + 1), true)] {
            let blk = |r: usize, c: usize| if conj { b[r][c].conj() } else { b[r][c] };
            for j in 0..2 * m {
                let (x, y) = (out.cov[(rows.0, j)], out.cov[(rows.1, j)]);
                out.cov[(rows.0, j)] = blk(0, 0) * x + blk(0, 1) * y;
                out.cov[(rows.1, j)] = blk(1, 0) * x + blk(1, 1) * y;
            }
            for i in 0..2 * m {
                let (x, y) = (out.cov[(i, rows.0)], out.cov[(i, rows.1)]);
                out.cov[(i, rows.0)] = x * blk(0, 0).conj() + y * blk(0, 1).conj();
                out.cov[(i, rows.1)] = x * blk(1, 0).conj() + y * blk(1, 1).conj();
            }
        }
        if gate.is_lossy() {
            apply_mode_loss(&mut out, gate.lossy_site(), 1.0 - gate.loss_gamma)?;
        }
    }
    Ok(out)
}

/// Hafnian of the symmetric matrix built from the strict upper triangle of
/// `b` (the diagonal never enters a perfect matching).
///
/// Uses the power-trace formula: a signed sum over subsets of index pairs
/// `(2j, 2j+1)`, each term being the `λ^{n/2}` coefficient of
/// `exp(Σ_k tr((B_Z X)^k) λ^k / 2k)`.
pub fn hafnian(b: &DMatrix<C64>) -> GbsResult<C64> {
    let n = b.nrows();
    if b.ncols() != n {
        return Err(invalid!("hafnian needs a square matrix, got {}×{}", n, b.ncols()));
    }
    if n % 2 == 1 {
        return Err(invalid!("hafnian needs an even dimension, got {n}"));
    }
    if n > 64 {
        return Err(unsupported!("hafnian limited to 64×64, got {n}"));
    }
    let half = n / 2;
    if half == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let sym = DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Less => b[(i, j)],
        std::cmp::Ordering::Greater => b[(j, i)],
        std::cmp::Ordering::Equal => C64::new(0.0, 0.0),
    });
    let mut total = C64::new(0.0, 0.0);
    for mask in 0u64..(1u64 << half) {
        let pairs: Vec<usize> = (0..half).filter(|j| mask >> j & 1 == 1).collect();
        let k = pairs.len();
        if k == 0 {
            // exp(0) has no λ^{n/2} term for n > 0.
            continue;
        }
        let idx: Vec<usize> = pairs.iter().flat_map(|&j| [2 * j, 2 * j + 1]).collect();
        // Columns of B_Z swapped within each pair: (B_Z X)[i][j] = B_Z[i][j ^ 1].
        let c = DMatrix::from_fn(2 * k, 2 * k, |i, j| sym[(idx[i], idx[j ^ 1])]);
        let mut power = c.clone();
        let mut g = vec![C64::new(0.0, 0.0); half + 1];
        for (step, gk) in g.iter_mut().enumerate().skip(1) {
            if step > 1 {
                power = &power * &c;
            }
            *gk = power.trace() / (2.0 * step as f64);
        }
        // Coefficients of exp(g): e_k = (1/k) Σ_j j g_j e_{k−j}.
        let mut e = vec![C64::new(0.0, 0.0); half + 1];
        e[0] = C64::new(1.0, 0.0);
        for deg in 1..=half {
            let mut acc = C64::new(0.0, 0.0);
            for j in 1..=deg {
                acc += g[j] * e[deg - j] * j as f64;
            }
            e[deg] = acc / deg as f64;
        }
        if (half - k) % 2 == 0 {
            total += e[half];
        } else {
            total -= e[half];
        }
    }
    Ok(total)
}

/// `P(n) = Haf(A_S) / (n! √|det σ_Q|)` with `σ_Q = σ + 1/2` and
/// `A = [[0, 1], [1, 0]] (1 − σ_Q⁻¹)`.
///
/// `A_S` repeats row/column `k` (and `M + k`) of `A` `n_k` times.
pub fn gbs_probability(g: &GaussianState, n: &FockOutcome) -> GbsResult<f64> {
    let m = g.num_modes;
    n.check_modes(m)?;
    let sigma_q = &g.cov + DMatrix::<C64>::identity(2 * m, 2 * m) * C64::from(0.5);
    let lu = sigma_q.clone().lu();
    let det = lu.determinant().norm();
    if !det.is_finite() || det == 0.0 {
        return Err(GbsError::NumericalFailure(format!("det σ_Q = {det}")));
    }
    let prefactor = 1.0 / (n.factorial_product() * det.sqrt());
    if n.total() == 0 {
        return Ok(prefactor);
    }
    let inv = lu
        .try_inverse()
        .ok_or_else(|| GbsError::NumericalFailure("σ_Q is singular".into()))?;
    let one_minus = DMatrix::<C64>::identity(2 * m, 2 * m) - inv;
    // Left-multiplying by X swaps the two row blocks.
    let a = DMatrix::from_fn(2 * m, 2 * m, |i, j| one_minus[((i + m) % (2 * m), j)]);

    let mut picks: Vec<usize> = n
        .counts()
        .iter()
        .enumerate()
        .flat_map(|(k, &c)| std::iter::repeat_n(k, c))
        .collect();
    let half = picks.len();
    picks.extend_from_within(..);
    for p in &mut picks[half..] {
        *p += m;
    }
    let a_s = DMatrix::from_fn(picks.len(), picks.len(), |i, j| a[(picks[i], picks[j])]);
    let haf = hafnian(&a_s)?;
    let p = haf.re * prefactor;
    if !p.is_finite() {
        return Err(GbsError::NumericalFailure(format!("probability of {n} is {p}")));
    }
    Ok(p)
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Probability of `2ν` photons in total from `M` equally squeezed vacua:
/// `C(ν + M/2 − 1, ν) sech^M(r) tanh^{2ν}(r)`.
pub fn photon_pair_distribution(num_modes: usize, r: f64, nu: usize) -> GbsResult<f64> {
    if num_modes % 2 == 1 || num_modes == 0 {
        return Err(unsupported!(
            "photon-pair distribution is implemented for even mode counts only, got {num_modes}"
        ));
    }
    let t = r.tanh();
    let sech = 1.0 / r.cosh();
    let tpow = if nu == 0 { 1.0 } else { t.powi(2 * nu as i32) };
    Ok(binomial_f64(nu + num_modes / 2 - 1, nu) * sech.powi(num_modes as i32) * tpow)
}

/// Probability of exactly `total` photons; zero for odd totals.
pub fn photon_total_distribution(num_modes: usize, r: f64, total: usize) -> GbsResult<f64> {
    let p = photon_pair_distribution(num_modes, r, total / 2)?;
    Ok(if total % 2 == 0 { p } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_brickwork, circuit_to_mode_unitary, AngleSource};
    use crate::fockdense::{dense_evolve_state, dense_squeezed_vacuum, DenseDensity};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn vacuum_cov_and_photons() {
        let g = squeezed_vacuum_cov(&SqueezeSpec::uniform(3, 0.0));
        assert_eq!(g, GaussianState::vacuum(3));
        assert_eq!(g.total_mean_photon(), 0.0);
    }

    #[test]
    fn squeezed_cov_matches_dense_moments() {
        for &r in &[0.2, 0.5, 0.8] {
            let g = squeezed_vacuum_cov(&SqueezeSpec::uniform(1, r));
            let psi = dense_squeezed_vacuum(&SqueezeSpec::uniform(1, r), 120).unwrap();
            assert!((psi.covariance() - &g.cov).norm() < 1e-12, "r = {r}");
            assert!(g.hermiticity_defect() < 1e-12);
        }
        let g = squeezed_vacuum_cov(&SqueezeSpec::uniform(1, 0.5));
        assert!((g.mean_photon(0) - 0.27154031).abs() < 1e-7);
    }

    #[test]
    fn propagate_matches_dense_covariance() {
        let s = SqueezeSpec::new(vec![0.3, 0.1, 0.2]).unwrap();
        let circ = build_brickwork(3, 3, AngleSource::Seeded(4)).unwrap();
        let u = circuit_to_mode_unitary(&circ).unwrap();
        let g = propagate(&squeezed_vacuum_cov(&s), &u).unwrap();
        let psi = dense_evolve_state(&dense_squeezed_vacuum(&s, 20).unwrap(), &circ).unwrap();
        assert!((psi.covariance() - &g.cov).norm() < 1e-8);
        let via_gates = evolve_circuit(&squeezed_vacuum_cov(&s), &circ).unwrap();
        assert!((via_gates.cov - &g.cov).norm() < 1e-12);
    }

    #[test]
    fn propagate_identity_swap_and_phase() {
        let g = squeezed_vacuum_cov(&SqueezeSpec::new(vec![0.3, 0.6]).unwrap());
        let same = propagate(&g, &ModeUnitary::identity(2)).unwrap();
        assert!((same.cov - &g.cov).norm() < 1e-15);

        let swap = ModeUnitary { matrix: DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]) };
        let swapped = propagate(&g, &swap).unwrap();
        assert!((swapped.mean_photon(0) - g.mean_photon(1)).abs() < 1e-15);
        assert!((swapped.cov[(0, 2)] - g.cov[(1, 3)]).norm() < 1e-15);

        let g1 = squeezed_vacuum_cov(&SqueezeSpec::uniform(1, 0.5));
        let phase = ModeUnitary { matrix: DMatrix::from_element(1, 1, C64::from_polar(1.0, 0.7)) };
        let rotated = propagate(&g1, &phase).unwrap();
        assert!((rotated.mean_photon(0) - g1.mean_photon(0)).abs() < 1e-15);
        assert!(propagate(&g1, &swap).is_err());
    }

    #[test]
    fn propagate_preserves_total_photons() {
        let g = squeezed_vacuum_cov(&SqueezeSpec::new(vec![0.1, 0.5, 0.3, 0.2, 0.4]).unwrap());
        let u = circuit_to_mode_unitary(&build_brickwork(5, 5, AngleSource::Seeded(8)).unwrap()).unwrap();
        let out = propagate(&g, &u).unwrap();
        assert!((out.total_mean_photon() - g.total_mean_photon()).abs() < 1e-10);
    }

    #[test]
    fn uniform_loss_against_kraus() {
        let g = squeezed_vacuum_cov(&SqueezeSpec::uniform(1, 0.5));
        assert_eq!(uniform_loss(&g, 1.0).unwrap(), g);
        let lossy = uniform_loss(&g, 0.5).unwrap();
        assert!((lossy.mean_photon(0) - 0.5 * 0.5f64.sinh().powi(2)).abs() < 1e-15);

        let psi = dense_squeezed_vacuum(&SqueezeSpec::uniform(1, 0.5), 60).unwrap();
        let mut rho = DenseDensity::from_state(&psi).unwrap();
        rho.apply_loss(0, 0.5).unwrap();
        assert!((rho.mean_photon(0) - lossy.mean_photon(0)).abs() < 1e-10);

        let nearly_gone = uniform_loss(&g, 1e-12).unwrap();
        assert!((nearly_gone.cov - GaussianState::vacuum(1).cov).norm() < 1e-9);
        assert!(uniform_loss(&g, 0.0).is_err());
        assert!(uniform_loss(&g, 1.5).is_err());
    }

    #[test]
    fn hafnian_small_cases() {
        let b = DMatrix::from_row_slice(2, 2, &[c(9.0), c(2.5), c(-1.0), c(9.0)]);
        assert!((hafnian(&b).unwrap() - c(2.5)).norm() < 1e-14);

        let b = DMatrix::from_fn(4, 4, |i, j| C64::new((i + 1) as f64 * 0.7 + j as f64, (i * j) as f64 * 0.1));
        let expected = b[(0, 1)] * b[(2, 3)] + b[(0, 2)] * b[(1, 3)] + b[(0, 3)] * b[(1, 2)];
        assert!((hafnian(&b).unwrap() - expected).norm() < 1e-13);

        assert!((hafnian(&DMatrix::from_element(6, 6, c(1.0))).unwrap() - c(15.0)).norm() < 1e-12);
        assert!((hafnian(&DMatrix::from_element(10, 10, c(1.0))).unwrap() - c(945.0)).norm() < 1e-9);
        assert_eq!(hafnian(&DMatrix::<C64>::zeros(0, 0)).unwrap(), c(1.0));
        assert!(hafnian(&DMatrix::<C64>::zeros(3, 3)).is_err());
    }

    fn hafnian_by_matchings(b: &DMatrix<C64>) -> C64 {
        fn rec(b: &DMatrix<C64>, remaining: &[usize]) -> C64 {
            let Some((&first, rest)) = remaining.split_first() else {
                return c(1.0);
            };
            (0..rest.len())
                .map(|k| {
                    let mut others = rest.to_vec();
                    let j = others.remove(k);
                    b[(first, j)] * rec(b, &others)
                })
                .sum()
        }
        rec(b, &(0..b.nrows()).collect::<Vec<_>>())
    }

    #[test]
    fn hafnian_agrees_with_matching_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for n in [2, 4, 6, 8, 10] {
            let b = DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let fast = hafnian(&b).unwrap();
            let slow = hafnian_by_matchings(&b);
            assert!((fast - slow).norm() < 1e-10 * slow.norm().max(1.0), "n = {n}: {fast} vs {slow}");
        }
    }

    #[test]
    fn gbs_vacuum_cases() {
        let g = squeezed_vacuum_cov(&SqueezeSpec::uniform(3, 0.0));
        assert!((gbs_probability(&g, &FockOutcome::vacuum(3)).unwrap() - 1.0).abs() < 1e-15);
        assert!(gbs_probability(&g, &FockOutcome::new(vec![1, 1, 0])).unwrap().abs() < 1e-15);
        assert!(gbs_probability(&g, &FockOutcome::new(vec![1, 1])).is_err());
    }

    #[test]
    fn gbs_single_mode_two_photons() {
        let r: f64 = 0.5;
        let g = squeezed_vacuum_cov(&SqueezeSpec::uniform(1, r));
        let p = gbs_probability(&g, &FockOutcome::new(vec![2])).unwrap();
        let psi = dense_squeezed_vacuum(&SqueezeSpec::uniform(1, r), 40).unwrap();
        assert!((p - psi.amplitudes[2].norm_sqr()).abs() < 1e-14);
        assert!((p - r.tanh().powi(2) / r.cosh() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn gbs_conserves_photon_number_per_total() {
        // A lossless interferometer leaves the total-photon distribution of the
        // input product state untouched; that distribution follows from the
        // dense single-mode amplitudes.
        let r = [0.5, 0.3, 0.4];
        let s = SqueezeSpec::new(r.to_vec()).unwrap();
        let u = circuit_to_mode_unitary(&build_brickwork(3, 3, AngleSource::Seeded(1)).unwrap()).unwrap();
        let g = propagate(&squeezed_vacuum_cov(&s), &u).unwrap();
        let single: Vec<Vec<f64>> = r
            .iter()
            .map(|&x| crate::fockdense::single_mode_squeezed(x, 30).iter().map(|a| a * a).collect())
            .collect();
        for total in 0..=6 {
            let mut expected = 0.0;
            for a in 0..=total {
                for b in 0..=total - a {
                    expected += single[0][a] * single[1][b] * single[2][total - a - b];
                }
            }
            let got: f64 = FockOutcome::with_total(3, total).iter().map(|n| gbs_probability(&g, n).unwrap()).sum();
            assert!((got - expected).abs() < 1e-10, "total {total}: {got} vs {expected}");
        }
    }

    #[test]
    fn pair_distribution_examples() {
        assert_eq!(photon_pair_distribution(4, 0.0, 0).unwrap(), 1.0);
        assert_eq!(photon_pair_distribution(4, 0.0, 2).unwrap(), 0.0);
        let r: f64 = 0.7;
        let p = photon_pair_distribution(2, r, 1).unwrap();
        assert!((p - (r.tanh() / r.cosh()).powi(2)).abs() < 1e-15);
        assert!(photon_pair_distribution(3, r, 1).is_err());
        assert_eq!(photon_total_distribution(2, r, 3).unwrap(), 0.0);
    }

    #[test]
    fn pair_distribution_is_convolution_of_single_modes() {
        // Two-mode totals from the dense single-mode photon statistics.
        let r = 0.5;
        let single: Vec<f64> = crate::fockdense::single_mode_squeezed(r, 101).iter().map(|a| a * a).collect();
        let two: Vec<f64> = (0..=100).map(|n| (0..=n).map(|k| single[k] * single[n - k]).sum()).collect();
        let four: Vec<f64> = (0..=100).map(|n| (0..=n).map(|k| two[k] * two[n - k]).sum()).collect();
        let mut total = 0.0;
        for nu in 0..=50 {
            let p = photon_pair_distribution(4, r, nu).unwrap();
            assert!((p - four[2 * nu]).abs() < 1e-14);
            total += p;
        }
        assert!((total - 1.0).abs() < 1e-10);
    }
}
