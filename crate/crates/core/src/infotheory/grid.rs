use rayon::prelude::*;

use super::{mac_mi_triple, MiTriple};
use crate::channel::ChannelModel;

/// All probability vectors of length `k` whose entries are multiples of `1/den`,
/// in lexicographic order of the integer compositions.
pub fn lattice(k: usize, den: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in 0..=left {
            cur.push(v);
            rec(k - 1, left - v, cur, out);
            cur.pop();
        }
    }
    if k == 0 {
        return vec![];
    }
    let den = den.max(1);
    let mut out = Vec::new();
    rec(k, den, &mut Vec::with_capacity(k), &mut out);
    out.into_iter().map(|c| c.into_iter().map(|v| v as f64 / den as f64).collect()).collect()
}

fn default_den(k: usize) -> usize {
    match k {
        0 | 1 => 1,
        2 => 20,
        3 => 12,
        4 => 10,
        _ => 6,
    }
}

/// Resolution of the product-input grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub den1: usize,
    pub den2: usize,
    pub refine: bool,
}

impl GridSpec {
    pub fn for_channel(ch: &ChannelModel) -> Self {
        GridSpec { den1: default_den(ch.x1_size()), den2: default_den(ch.x2_size()), refine: false }
    }

    /// Same denominator for both users, clipped to at least 1.
    pub fn uniform(den: usize) -> Self {
        GridSpec { den1: den.max(1), den2: den.max(1), refine: false }
    }

    pub fn refined(mut self, on: bool) -> Self {
        self.refine = on;
        self
    }
}

/// Product-input grid with its precomputed mutual-information triples.
#[derive(Clone, Debug)]
pub struct InputGrid {
    pub ch: ChannelModel,
    pub spec: GridSpec,
    pub p1: Vec<Vec<f64>>,
    pub p2: Vec<Vec<f64>>,
    pub mi: Vec<MiTriple>,
}

/// Optimiser of an objective over product inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct InputOpt {
    pub value: f64,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub mi: MiTriple,
}

impl InputGrid {
    pub fn new(ch: &ChannelModel, spec: GridSpec) -> Self {
        let p1 = lattice(ch.x1_size(), spec.den1);
        let p2 = lattice(ch.x2_size(), spec.den2);
        let mi = (0..p1.len() * p2.len())
            .into_par_iter()
            .map(|k| mac_mi_triple(ch, &p1[k / p2.len()], &p2[k % p2.len()]))
            .collect();
        InputGrid { ch: ch.clone(), spec, p1, p2, mi }
    }

    pub fn len(&self) -> usize {
        self.mi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mi.is_empty()
    }

    pub fn inputs(&self, k: usize) -> (&[f64], &[f64]) {
        (&self.p1[k / self.p2.len()], &self.p2[k % self.p2.len()])
    }

    /// First grid index attaining the maximum of `f`.
    pub fn argmax<F: Fn(&MiTriple) -> f64>(&self, f: F) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (k, m) in self.mi.iter().enumerate() {
            let v = f(m);
            if v > best.1 {
                best = (k, v);
            }
        }
        best
    }

    /// Maximises `f(mi(p1, p2))` over the grid, then by pattern search when the
    /// spec asks for refinement.
    pub fn maximize<F: Fn(&MiTriple) -> f64>(&self, f: F) -> InputOpt {
        let (k, v) = self.argmax(&f);
        let (p1, p2) = self.inputs(k);
        let start = InputOpt { value: v, p1: p1.to_vec(), p2: p2.to_vec(), mi: self.mi[k] };
        if self.spec.refine {
            let step = 0.5 / self.spec.den1.max(self.spec.den2) as f64;
            pattern_search(&self.ch, start, step, &f)
        } else {
            start
        }
    }
}

/// Coordinate pattern search over pairs of inputs: moves probability mass between
/// two symbols of one user, halving the step when no move improves.
pub fn pattern_search<F: Fn(&MiTriple) -> f64>(ch: &ChannelModel, mut cur: InputOpt, step: f64, f: &F) -> InputOpt {
    let mut h = step;
    let mut evals = 0usize;
    while h > 1e-7 && evals < 200_000 {
        let mut improved = false;
        for user in 0..2 {
            let n = if user == 0 { cur.p1.len() } else { cur.p2.len() };
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let src = if user == 0 { &cur.p1 } else { &cur.p2 };
                    if src[i] <= 0.0 {
                        continue;
                    }
                    let mut cand = src.clone();
                    let d = h.min(cand[i]);
                    cand[i] -= d;
                    cand[j] += d;
                    let (a, b) = if user == 0 { (&cand, &cur.p2) } else { (&cur.p1, &cand) };
                    let mi = mac_mi_triple(ch, a, b);
                    evals += 1;
                    let v = f(&mi);
                    if v > cur.value + 1e-15 {
                        if user == 0 {
                            cur.p1 = cand;
                        } else {
                            cur.p2 = cand;
                        }
                        cur.value = v;
                        cur.mi = mi;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    cur
}
