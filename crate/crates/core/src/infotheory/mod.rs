//! Entropies, mutual-information triples for two-user inputs, point-to-point
//! capacity, hyperplane capacities and the region boundary.

mod grid;
mod region;
mod tree;

pub use grid::{lattice, GridSpec, InputGrid, InputOpt};
pub use region::{c_lambda, lambda_simplex, region_boundary, region_boundary_primal, Hyperplanes, RegionSample};
pub use tree::{random_tree, vl_directed_information, vl_entropy, NodeLabel, OutputTree, TreeNode, VlEntropy};

use serde::{Deserialize, Serialize};

use crate::channel::{kl_bits, Base, ChannelModel};
use crate::error::{Error, Result};

/// Shannon entropy in bits with `0 log 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    let mut h = 0.0;
    for &v in p {
        if v > 0.0 {
            h -= v * v.log2();
        }
    }
    h.max(0.0)
}

pub fn entropy_in(p: &[f64], base: Base) -> f64 {
    match base {
        Base::Two => entropy(p),
        Base::E => entropy(p) * std::f64::consts::LN_2,
    }
}

/// Binary entropy in bits.
pub fn h_b(p: f64) -> f64 {
    entropy(&[p, 1.0 - p])
}

/// Inverse of the binary entropy on `[0, 1/2]`, by bisection.
pub fn h_b_inv(h: f64) -> f64 {
    if h <= 0.0 {
        return 0.0;
    }
    if h >= 1.0 {
        return 0.5;
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h_b(mid) < h {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `(I(X1;Y|X2), I(X2;Y|X1), I(X1,X2;Y))` in bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MiTriple {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

impl MiTriple {
    pub fn as_array(&self) -> [f64; 3] {
        [self.i1, self.i2, self.i3]
    }

    pub fn dot(&self, l: &[f64; 3]) -> f64 {
        l[0] * self.i1 + l[1] * self.i2 + l[2] * self.i3
    }
}

/// Mutual-information triple under independent inputs `p1 ⊗ p2`.
pub fn mac_mi_triple(ch: &ChannelModel, p1: &[f64], p2: &[f64]) -> MiTriple {
    let n2 = ch.x2_size();
    let mut joint = vec![0.0; ch.x1_size() * n2];
    for (a, &u) in p1.iter().enumerate() {
        for (b, &v) in p2.iter().enumerate() {
            joint[a * n2 + b] = u * v;
        }
    }
    mi_triple_joint(ch, &joint)
}

/// Mutual-information triple under an arbitrary joint input law `joint[x1 * |X2| + x2]`.
pub fn mi_triple_joint(ch: &ChannelModel, joint: &[f64]) -> MiTriple {
    let (n1, n2, ny) = (ch.x1_size(), ch.x2_size(), ch.y_size());
    let mut h_cond = 0.0;
    let mut py = vec![0.0; ny];
    let mut py_x1 = vec![0.0; n1 * ny];
    let mut py_x2 = vec![0.0; n2 * ny];
    let mut m1 = vec![0.0; n1];
    let mut m2 = vec![0.0; n2];
    for a in 0..n1 {
        for b in 0..n2 {
            let w = joint[a * n2 + b];
            if w <= 0.0 {
                continue;
            }
            m1[a] += w;
            m2[b] += w;
            let row = ch.row(a, b);
            h_cond += w * entropy(row);
            for (y, &q) in row.iter().enumerate() {
                let v = w * q;
                py[y] += v;
                py_x1[a * ny + y] += v;
                py_x2[b * ny + y] += v;
            }
        }
    }
    let cond = |m: &[f64], pyx: &[f64]| -> f64 {
        let mut h = 0.0;
        for (x, &w) in m.iter().enumerate() {
            if w > 0.0 {
                let r: Vec<f64> = pyx[x * ny..(x + 1) * ny].iter().map(|v| v / w).collect();
                h += w * entropy(&r);
            }
        }
        h
    };
    let h_y = entropy(&py);
    let h_y_x1 = cond(&m1, &py_x1);
    let h_y_x2 = cond(&m2, &py_x2);
    MiTriple {
        i1: (h_y_x2 - h_cond).max(0.0),
        i2: (h_y_x1 - h_cond).max(0.0),
        i3: (h_y - h_cond).max(0.0),
    }
}

/// Single-user mutual information `I(X;Y)` for input `p` and kernel rows.
pub fn ptp_mi(kernel: &[Vec<f64>], p: &[f64]) -> f64 {
    let ny = kernel[0].len();
    let mut py = vec![0.0; ny];
    for (row, &w) in kernel.iter().zip(p) {
        for (o, v) in py.iter_mut().zip(row) {
            *o += w * v;
        }
    }
    kernel.iter().zip(p).filter(|(_, &w)| w > 0.0).map(|(row, &w)| w * kl_bits(row, &py)).sum()
}

/// Capacity of a point-to-point kernel by Blahut-Arimoto, stopped when the gap
/// between the standard upper and lower estimates falls below `tol` bits.
pub fn ptp_capacity(kernel: &[Vec<f64>], tol: f64) -> Result<(f64, Vec<f64>)> {
    const MAX_ITER: usize = 200_000;
    let n = kernel.len();
    if n == 0 {
        return Err(Error::InvalidDistribution("empty kernel".into()));
    }
    let ny = kernel[0].len();
    let mut p = vec![1.0 / n as f64; n];
    let mut c = vec![0.0; n];
    for _ in 0..MAX_ITER {
        let mut py = vec![0.0; ny];
        for (row, &w) in kernel.iter().zip(&p) {
            for (o, v) in py.iter_mut().zip(row) {
                *o += w * v;
            }
        }
        for (ci, row) in c.iter_mut().zip(kernel) {
            *ci = kl_bits(row, &py);
        }
        let lower = ptp_mi(kernel, &p);
        let upper = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if upper - lower < tol {
            return Ok((lower.max(0.0), p));
        }
        let cmax = upper;
        let mut z = 0.0;
        for (pi, ci) in p.iter_mut().zip(&c) {
            *pi *= (ci - cmax).exp2();
            z += *pi;
        }
        for pi in p.iter_mut() {
            *pi /= z;
        }
    }
    Err(Error::NonConvergence(MAX_ITER))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bsc, build_additive_mod_m, build_product};

    fn direct_triple(ch: &ChannelModel, p1: &[f64], p2: &[f64]) -> MiTriple {
        // brute-force summation over the joint law P(x1,x2,y)
        let (n1, n2, ny) = (ch.x1_size(), ch.x2_size(), ch.y_size());
        let p = |a: usize, b: usize, y: usize| p1[a] * p2[b] * ch.row(a, b)[y];
        let (mut i1, mut i2, mut i3) = (0.0, 0.0, 0.0);
        for a in 0..n1 {
            for b in 0..n2 {
                for y in 0..ny {
                    let v = p(a, b, y);
                    if v <= 0.0 {
                        continue;
                    }
                    let pab = p1[a] * p2[b];
                    let pb: f64 = (0..n1).map(|c| p(c, b, y)).sum::<f64>();
                    let pa: f64 = (0..n2).map(|c| p(a, c, y)).sum::<f64>();
                    let py: f64 = (0..n1).flat_map(|c| (0..n2).map(move |d| (c, d))).map(|(c, d)| p(c, d, y)).sum();
                    let qy = v / pab;
                    i1 += v * (qy / (pb / p2[b])).log2();
                    i2 += v * (qy / (pa / p1[a])).log2();
                    i3 += v * (qy / py).log2();
                }
            }
        }
        MiTriple { i1, i2, i3 }
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&[0.5, 0.5]) - 1.0).abs() < 1e-15);
        assert!((entropy(&[0.8, 0.1, 0.1]) - 0.921928094887).abs() < 1e-11);
        assert_eq!(entropy(&[0.0, 1.0, 0.0]), 0.0);
        assert!((entropy_in(&[0.5, 0.5], Base::E) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn h_b_inverse() {
        assert!((h_b_inv(0.5) - 0.11002786443835955).abs() < 1e-12);
        for &p in &[0.001, 0.05, 0.2, 0.49] {
            assert!((h_b_inv(h_b(p)) - p).abs() < 1e-12);
        }
    }

    #[test]
    fn mi_triple_examples() {
        let ch = build_additive_mod_m(3, 0.1).unwrap();
        let u = [1.0 / 3.0; 3];
        let t = mac_mi_triple(&ch, &u, &u);
        let want = 3f64.log2() - entropy(&[0.8, 0.1, 0.1]);
        assert!((want - 0.66303).abs() < 1e-5);
        for v in t.as_array() {
            assert!((v - want).abs() < 1e-12);
        }
        let d = direct_triple(&ch, &u, &u);
        assert!((d.i1 - t.i1).abs() < 1e-12 && (d.i3 - t.i3).abs() < 1e-12);

        let pm = mac_mi_triple(&ch, &[0.0, 1.0, 0.0], &[0.2, 0.3, 0.5]);
        assert!(pm.i1.abs() < 1e-15);

        let par = build_product(&bsc(0.1), &bsc(0.2)).unwrap();
        let t = mac_mi_triple(&par, &[0.5, 0.5], &[0.5, 0.5]);
        assert!((t.i1 - (1.0 - h_b(0.1))).abs() < 1e-12);
        assert!((t.i2 - (1.0 - h_b(0.2))).abs() < 1e-12);
        assert!((t.i3 - t.i1 - t.i2).abs() < 1e-12);

        let p1 = [0.2, 0.8];
        let p2 = [0.65, 0.35];
        let a = mac_mi_triple(&par, &p1, &p2);
        let b = direct_triple(&par, &p1, &p2);
        assert!((a.i1 - b.i1).abs() < 1e-12 && (a.i2 - b.i2).abs() < 1e-12 && (a.i3 - b.i3).abs() < 1e-12);
    }

    #[test]
    fn capacity_examples() {
        let (c, p) = ptp_capacity(&bsc(0.1), 1e-12).unwrap();
        let mut grid: f64 = 0.0;
        for k in 0..=10000 {
            let q = k as f64 / 10000.0;
            grid = grid.max(ptp_mi(&bsc(0.1), &[q, 1.0 - q]));
        }
        assert!((c - grid).abs() < 1e-7);
        assert!((c - 0.531004406410719).abs() < 1e-10);
        assert!((p[0] - 0.5).abs() < 1e-6);
        let same = vec![vec![0.3, 0.7]; 3];
        assert!(ptp_capacity(&same, 1e-12).unwrap().0.abs() < 1e-12);
        let id: Vec<Vec<f64>> = (0..5).map(|i| (0..5).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        assert!((ptp_capacity(&id, 1e-12).unwrap().0 - 5f64.log2()).abs() < 1e-9);
    }
}
