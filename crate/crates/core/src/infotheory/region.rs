use serde::{Deserialize, Serialize};

use super::grid::{lattice, InputGrid};
use crate::lp::max_min_simplex;

/// Weight vectors on the 3-simplex with entries in multiples of `1/den`.
pub fn lambda_simplex(den: usize) -> Vec<[f64; 3]> {
    lattice(3, den).into_iter().map(|v| [v[0], v[1], v[2]]).collect()
}

/// `C_λ = max_P λ1 i1 + λ2 i2 + λ3 i3` over the product-input grid (time sharing
/// cannot improve a linear objective).
pub fn c_lambda(grid: &InputGrid, l: &[f64; 3]) -> f64 {
    grid.maximize(|m| m.dot(l)).value
}

/// Point where the ray at angle `theta` leaves the capacity region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSample {
    pub theta: f64,
    pub radius: f64,
    pub r1: f64,
    pub r2: f64,
    /// Supporting hyperplane that attains the minimum.
    pub lambda: [f64; 3],
}

fn direction(theta: f64) -> [f64; 3] {
    let (s, c) = theta.sin_cos();
    let (c, s) = (c.max(0.0), s.max(0.0));
    [c, s, c + s]
}

/// Table of `C_λ` over a λ-lattice, reused across angles.
pub struct Hyperplanes<'a> {
    grid: &'a InputGrid,
    den: usize,
    lambdas: Vec<[f64; 3]>,
    c: Vec<f64>,
}

impl<'a> Hyperplanes<'a> {
    pub fn new(grid: &'a InputGrid, den: usize) -> Self {
        let lambdas = lambda_simplex(den);
        let c = lambdas.iter().map(|l| grid.argmax(|m| m.dot(l)).1).collect();
        Hyperplanes { grid, den, lambdas, c }
    }

    pub fn lambdas(&self) -> &[[f64; 3]] {
        &self.lambdas
    }

    pub fn values(&self) -> &[f64] {
        &self.c
    }

    /// `min_λ C_λ / (λ · u(θ))` over the table followed by one local pass at a
    /// ten times finer λ step around the best weight.
    pub fn boundary(&self, theta: f64) -> RegionSample {
        let u = direction(theta);
        let ratio = |l: &[f64; 3], c: f64| {
            let d = l[0] * u[0] + l[1] * u[1] + l[2] * u[2];
            if d > 1e-15 {
                c / d
            } else {
                f64::INFINITY
            }
        };
        let mut best = (f64::INFINITY, [0.0, 0.0, 1.0]);
        for (l, &c) in self.lambdas.iter().zip(&self.c) {
            let r = ratio(l, c);
            if r < best.0 {
                best = (r, *l);
            }
        }
        let h = 1.0 / self.den as f64;
        let center = best.1;
        for i in -10i32..=10 {
            for j in -10i32..=10 {
                let l = [
                    center[0] + i as f64 * h / 10.0,
                    center[1] + j as f64 * h / 10.0,
                    center[2] - (i + j) as f64 * h / 10.0,
                ];
                if l.iter().any(|v| *v < -1e-12) || (i == 0 && j == 0) {
                    continue;
                }
                let l = [l[0].max(0.0), l[1].max(0.0), l[2].max(0.0)];
                let r = ratio(&l, c_lambda(self.grid, &l));
                if r < best.0 {
                    best = (r, l);
                }
            }
        }
        let radius = best.0.max(0.0);
        RegionSample { theta, radius, r1: radius * theta.cos(), r2: radius * theta.sin(), lambda: best.1 }
    }
}

/// Region boundary on a ray, through the hyperplane (λ) form.
pub fn region_boundary(grid: &InputGrid, theta: f64, lambda_den: usize) -> RegionSample {
    Hyperplanes::new(grid, lambda_den).boundary(theta)
}

/// Region boundary on a ray through the input side: the largest `r` such that
/// `r u(θ)` is dominated by a time-sharing mixture of grid triples, solved as a
/// max-min linear program over mixture weights.
pub fn region_boundary_primal(grid: &InputGrid, theta: f64) -> f64 {
    let u = direction(theta);
    let mut a = Vec::new();
    for i in 0..3 {
        if u[i] > 1e-15 {
            a.push(grid.mi.iter().map(|m| m.as_array()[i] / u[i]).collect::<Vec<f64>>());
        }
    }
    let c = vec![0.0; a.len()];
    max_min_simplex(&a, &c).value
}
