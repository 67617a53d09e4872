//! Open-boundary tensor trains with a tracked orthogonality region.
//!
//! Sites left of `center.0` are left-orthonormal and sites right of
//! `center.1` are right-orthonormal, so a two-site update inside the region
//! sees an isometric environment and its SVD yields true Schmidt values.

use nalgebra::DMatrix;
use ndarray::{Array3, Array4};

use crate::linalg::svd_truncated;
use crate::C64;

use super::TruncationPolicy;

#[derive(Clone, Debug)]
pub(crate) struct TensorTrain {
    /// Site `k` has axes `(left bond, physical, right bond)`.
    pub sites: Vec<Array3<C64>>,
    pub phys: usize,
    pub center: (usize, usize),
}

/// Outcome of one two-site update.
pub(crate) struct Split {
    pub bond: usize,
    pub discarded: f64,
    pub left: usize,
    pub right: usize,
}

impl TensorTrain {
    /// Bond-1 product of the given local vectors.
    pub fn product(vectors: &[Vec<C64>], phys: usize) -> Self {
        let sites = vectors
            .iter()
            .map(|v| {
                assert_eq!(v.len(), phys);
                Array3::from_shape_vec((1, phys, 1), v.clone()).expect("shape")
            })
            .collect::<Vec<_>>();
        let last = sites.len().saturating_sub(1);
        Self { sites, phys, center: (0, last) }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    /// Bond dimensions between neighbouring sites (`M − 1` entries).
    pub fn bonds(&self) -> Vec<usize> {
        self.sites[..self.len().saturating_sub(1)].iter().map(|s| s.dim().2).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bonds().into_iter().max().unwrap_or(1)
    }

    fn left_orthonormalize(&mut self, k: usize) {
        let (l, p, r) = self.sites[k].dim();
        let mat = DMatrix::from_fn(l * p, r, |row, col| self.sites[k][[row / p, row % p, col]]);
        let qr = mat.qr();
        let (q, rr) = (qr.q(), qr.r());
        let kk = q.ncols();
        self.sites[k] = Array3::from_shape_fn((l, p, kk), |(a, s, c)| q[(a * p + s, c)]);
        let next = &self.sites[k + 1];
        let (_, p2, r2) = next.dim();
        let next_mat = DMatrix::from_fn(r, p2 * r2, |row, col| next[[row, col / r2, col % r2]]);
        let merged = rr * next_mat;
        self.sites[k + 1] = Array3::from_shape_fn((kk, p2, r2), |(a, s, b)| merged[(a, s * r2 + b)]);
    }

    fn right_orthonormalize(&mut self, k: usize) {
        let (l, p, r) = self.sites[k].dim();
        // A = R† Q† from the QR of A†.
        let mat_adj = DMatrix::from_fn(p * r, l, |row, col| self.sites[k][[col, row / r, row % r]].conj());
        let qr = mat_adj.qr();
        let (q, rr) = (qr.q(), qr.r());
        let kk = q.ncols();
        self.sites[k] = Array3::from_shape_fn((kk, p, r), |(a, s, b)| q[(s * r + b, a)].conj());
        let prev = &self.sites[k - 1];
        let (l0, p0, _) = prev.dim();
        let prev_mat = DMatrix::from_fn(l0 * p0, l, |row, col| prev[[row / p0, row % p0, col]]);
        let merged = prev_mat * rr.adjoint();
        self.sites[k - 1] = Array3::from_shape_fn((l0, p0, kk), |(a, s, c)| merged[(a * p0 + s, c)]);
    }

    /// Shrinks the orthogonality region to the single site `target`.
    pub fn move_center(&mut self, target: usize) {
        while self.center.0 < target {
            self.left_orthonormalize(self.center.0);
            self.center.0 += 1;
        }
        while self.center.1 > target {
            self.right_orthonormalize(self.center.1);
            self.center.1 -= 1;
        }
        self.center = (target, target);
    }

    /// Merges sites `i, i+1` into `θ[a, s, t, b]`, lets `transform` rewrite it,
    /// and splits it back by a truncated SVD with `√Σ` absorbed on each side.
    pub fn update_pair(
        &mut self,
        i: usize,
        policy: &TruncationPolicy,
        transform: impl FnOnce(&mut Array4<C64>),
    ) -> Split {
        self.move_center(i);
        let p = self.phys;
        let (l, _, c) = self.sites[i].dim();
        let (_, _, r) = self.sites[i + 1].dim();
        let a = DMatrix::from_fn(l * p, c, |row, col| self.sites[i][[row / p, row % p, col]]);
        let b = DMatrix::from_fn(c, p * r, |row, col| self.sites[i + 1][[row, col / r, col % r]]);
        let ab = a * b;
        let mut theta = Array4::from_shape_fn((l, p, p, r), |(x, s, t, y)| ab[(x * p + s, t * r + y)]);
        transform(&mut theta);

        let mat = DMatrix::from_fn(l * p, p * r, |row, col| theta[[row / p, row % p, col / r, col % r]]);
        let cut = svd_truncated(mat, policy.svd_threshold, policy.max_bond);
        let k = cut.s.len();
        let roots: Vec<f64> = cut.s.iter().map(|x| x.sqrt()).collect();
        self.sites[i] = Array3::from_shape_fn((l, p, k), |(x, s, m)| cut.u[(x * p + s, m)] * roots[m]);
        self.sites[i + 1] = Array3::from_shape_fn((k, p, r), |(m, t, y)| cut.vt[(m, t * r + y)] * roots[m]);
        self.center = (i, i + 1);
        Split { bond: k, discarded: cut.discarded, left: l, right: r }
    }

    /// `Σ conj(self) · other` over all indices.
    pub fn inner(&self, other: &TensorTrain) -> C64 {
        assert_eq!(self.len(), other.len());
        assert_eq!(self.phys, other.phys);
        let mut env = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for (x, y) in self.sites.iter().zip(&other.sites) {
            let (_, p, rx) = x.dim();
            let ry = y.dim().2;
            let mut next = DMatrix::<C64>::zeros(rx, ry);
            for s in 0..p {
                let xs = DMatrix::from_fn(x.dim().0, rx, |a, b| x[[a, s, b]].conj());
                let ys = DMatrix::from_fn(y.dim().0, ry, |a, b| y[[a, s, b]]);
                next += xs.transpose() * &env * ys;
            }
            env = next;
        }
        env[(0, 0)]
    }

    /// Full contraction, little-endian in the site index.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut acc: Vec<DMatrix<C64>> = vec![DMatrix::from_element(1, 1, C64::new(1.0, 0.0))];
        for site in &self.sites {
            let (l, p, r) = site.dim();
            let slices: Vec<DMatrix<C64>> = (0..p)
                .map(|s| DMatrix::from_fn(l, r, |a, b| site[[a, s, b]]))
                .collect();
            // New index = old index + s * p^k: iterate s outermost.
            acc = slices.iter().flat_map(|sl| acc.iter().map(move |prefix| prefix * sl)).collect();
        }
        acc.into_iter().map(|m| m[(0, 0)]).collect()
    }
}
