//! Photon-count outcomes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, GbsResult};

/// A measured photon-count configuration `(n_0, …, n_{M−1})`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FockOutcome(pub Vec<usize>);

impl FockOutcome {
    pub fn new(counts: Vec<usize>) -> Self {
        Self(counts)
    }

    pub fn vacuum(num_modes: usize) -> Self {
        Self(vec![0; num_modes])
    }

    /// A single photon in `mode`, vacuum elsewhere.
    pub fn single(num_modes: usize, mode: usize) -> Self {
        let mut counts = vec![0; num_modes];
        counts[mode] = 1;
        Self(counts)
    }

    pub fn num_modes(&self) -> usize {
        self.0.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn max_count(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// `∏_k n_k!`
    pub fn factorial_product(&self) -> f64 {
        self.0
            .iter()
            .map(|&n| (1..=n).map(|k| k as f64).product::<f64>())
            .product()
    }

    pub(crate) fn check_modes(&self, num_modes: usize) -> GbsResult<()> {
        if self.num_modes() != num_modes {
            return Err(invalid!(
                "outcome {self} has {} modes, expected {num_modes}",
                self.num_modes()
            ));
        }
        Ok(())
    }

    pub(crate) fn check_cutoff(&self, local_cutoff: usize) -> GbsResult<()> {
        if let Some((k, &n)) = self.0.iter().enumerate().find(|(_, &n)| n > local_cutoff) {
            return Err(invalid!(
                "outcome {self} puts {n} photons in mode {k}, above the local cutoff {local_cutoff}"
            ));
        }
        Ok(())
    }

    /// Every outcome on `num_modes` modes with exactly `total` photons, in
    /// lexicographic order.
    pub fn with_total(num_modes: usize, total: usize) -> Vec<FockOutcome> {
        fn fill(prefix: &mut Vec<usize>, left: usize, modes_left: usize, out: &mut Vec<FockOutcome>) {
            if modes_left == 1 {
                prefix.push(left);
                out.push(FockOutcome(prefix.clone()));
                prefix.pop();
                return;
            }
            for n in (0..=left).rev() {
                prefix.push(n);
                fill(prefix, left - n, modes_left - 1, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if num_modes == 0 {
            if total == 0 {
                out.push(FockOutcome(Vec::new()));
            }
            return out;
        }
        fill(&mut Vec::with_capacity(num_modes), total, num_modes, &mut out);
        out
    }

    /// Every outcome with total photon number at most `max_total`.
    pub fn up_to_total(num_modes: usize, max_total: usize) -> Vec<FockOutcome> {
        (0..=max_total)
            .flat_map(|n| Self::with_total(num_modes, n))
            .collect()
    }
}

impl From<Vec<usize>> for FockOutcome {
    fn from(counts: Vec<usize>) -> Self {
        Self(counts)
    }
}

impl fmt::Display for FockOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, n) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ")")
    }
}

impl std::str::FromStr for FockOutcome {
    type Err = crate::GbsError;

    /// Parses `"1,0,2"` (brackets and whitespace are ignored).
    fn from_str(s: &str) -> GbsResult<Self> {
        let trimmed = s.trim().trim_start_matches(['(', '[']).trim_end_matches([')', ']']);
        if trimmed.trim().is_empty() {
            return Err(invalid!("empty outcome"));
        }
        trimmed
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                tok.parse::<usize>()
                    .map_err(|_| invalid!("photon count {tok:?} is not a non-negative integer"))
            })
            .collect::<GbsResult<Vec<_>>>()
            .map(FockOutcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn enumeration_counts_are_stars_and_bars() {
        for m in 1..5 {
            for n in 0..6 {
                let all = FockOutcome::with_total(m, n);
                assert_eq!(all.len(), binomial(n + m - 1, m - 1));
                assert!(all.iter().all(|o| o.total() == n && o.num_modes() == m));
            }
        }
    }

    #[test]
    fn parse_rejects_negative_counts() {
        assert!("1,-1".parse::<FockOutcome>().is_err());
        assert_eq!("[2, 0,1]".parse::<FockOutcome>().unwrap(), FockOutcome(vec![2, 0, 1]));
    }

    #[test]
    fn factorials() {
        assert_eq!(FockOutcome(vec![3, 0, 2]).factorial_product(), 12.0);
    }
}
