use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::checks::{log_drift_allowance, node_path};
use super::PosteriorTrace;
use crate::{Error, Result};

const TOL: f64 = 1e-9;

/// `τ_ε = inf{t > 0 : H_t ≤ ε} ∧ N` over `h[0..=N]`.
pub fn tau_lower(h: &[f64], eps: f64) -> usize {
    let n = h.len() - 1;
    (1..=n).find(|&t| h[t] <= eps).unwrap_or(n)
}

/// `τ^ε = sup{t > 0 : H_{t-1} ≥ ε} ∧ N`, zero when the set is empty.
pub fn tau_upper(h: &[f64], eps: f64) -> usize {
    let n = h.len() - 1;
    (1..=n).rev().find(|&t| h[t - 1] >= eps).unwrap_or(0).min(n)
}

/// Pruned times `t_0..t_{N+1}`.
pub fn pruned_times(h: &[f64], eps: f64) -> Vec<usize> {
    let n = h.len() - 1;
    let (lo, hi) = (tau_lower(h, eps), tau_upper(h, eps));
    (0..=n + 1)
        .map(|k| {
            if k < lo {
                k
            } else if k <= n {
                k.max(hi)
            } else {
                n
            }
        })
        .collect()
}

/// `(t_n ∧ τ_ε, t_n ∧ τ^ε)` computed from the observed prefix `h[0..=t_n]` and `n`.
pub fn observed_stops(prefix: &[f64], n: usize, eps: f64) -> (usize, usize) {
    let t = prefix.len() - 1;
    let lo = (1..=t).find(|&s| prefix[s] <= eps);
    match lo {
        Some(l) if l <= n => {
            // after τ_ε the observation reaches past τ^ε, so the last crossing seen is final
            let hi = (1..=t).rev().find(|&s| prefix[s - 1] >= eps).unwrap_or(0);
            (t.min(l), t.min(hi))
        }
        _ => (t, t),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruneParams {
    pub eps: f64,
    pub i_const: f64,
    pub d_const: f64,
    pub mu: f64,
}

/// Per-path pruned-time data for one entropy index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrunedPath {
    pub leaf: usize,
    pub tau_lower: usize,
    pub tau_upper: usize,
    pub t: Vec<usize>,
    pub l: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrunedTimeTrace {
    pub index: usize,
    pub params: PruneParams,
    pub paths: Vec<PrunedPath>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubmartingaleReport {
    pub index: usize,
    pub eps: f64,
    pub i_const: f64,
    pub d_const: f64,
    /// First `μ = 2^-k` (k = 3..=20) at which the check passed.
    pub mu: Option<f64>,
    pub information_sets: usize,
    #[serde(with = "crate::num")]
    pub worst_margin: f64,
    pub measurability_violations: usize,
    pub path_violations: usize,
    /// Entropy index skipped because `M_i = 1`.
    pub skipped: bool,
}

impl SubmartingaleReport {
    pub fn passed(&self) -> bool {
        self.skipped || (self.mu.is_some() && self.measurability_violations == 0 && self.path_violations == 0)
    }
}

struct Constants {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k4: f64,
}

/// Verifies the hypotheses of the pruned-submartingale construction for index `i`
/// and returns the per-node `k1`, `k2` and the constant `k4`.
fn constants(trace: &PosteriorTrace, i: usize, eps: f64) -> Result<Constants> {
    let n = trace.nodes.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let k3 = trace.eta;
    let k4 = trace.log_messages()[i];
    if !k3.is_finite() {
        return Err(Error::NotStrictlyPositive);
    }
    let fail = |what: &str, k: usize| Error::HypothesisViolated(format!("{what} at i={} path={:?}", i + 1, node_path(trace, k)));
    for (k, node) in trace.nodes.iter().enumerate() {
        if node.h_bar[i] > node.h_tld[i] + TOL {
            return Err(fail("H̄ > H̃", k));
        }
        let Some(step) = &node.step else { continue };
        k1[k] = step.j[i];
        k2[k] = log_drift_allowance(trace, step.d[i], eps);
        if k1[k] > k2[k] + TOL {
            return Err(fail("k1 > k2", k));
        }
        if node.prob <= 0.0 {
            continue;
        }
        let mean = |f: &dyn Fn(usize) -> f64| -> f64 {
            node.children.iter().zip(&step.py).filter(|(_, &p)| p > 0.0).map(|(&c, &p)| p * f(c)).sum()
        };
        if mean(&|c| trace.nodes[c].h_bar[i]) - node.h_bar[i] < -k1[k] - TOL {
            return Err(fail("linear drift", k));
        }
        let h = node.h_tld[i];
        if h > 0.0 && h < eps && mean(&|c| trace.nodes[c].h_tld[i].log2()) - h.log2() < -k2[k] - TOL {
            return Err(fail("log drift", k));
        }
        for (&c, &p) in node.children.iter().zip(&step.py) {
            if p <= 0.0 {
                continue;
            }
            let hc = trace.nodes[c].h_tld[i];
            if h > 0.0 && hc > 0.0 && (hc.log2() - h.log2()).abs() > k3 + TOL {
                return Err(fail("log increment above eta", c));
            }
            if (hc - h).abs() > k4 + TOL {
                return Err(fail("increment above log M", c));
            }
        }
    }
    Ok(Constants { k1, k2, k4 })
}

fn z_value(h_bar: f64, h_tld: f64, p: &PruneParams) -> f64 {
    if h_tld >= p.eps {
        (h_bar - p.eps) / p.i_const
    } else {
        let y = (h_tld / p.eps).log2();
        y / p.d_const + (1.0 - (p.mu * y).exp()) / (p.mu * p.d_const)
    }
}

/// Builds `t_n`, `Z`, `S` and `L_n = Z_{t_n} + S_{t_n}` on every path.
pub fn pruned_trace(trace: &PosteriorTrace, i: usize, params: PruneParams) -> Result<PrunedTimeTrace> {
    let c = constants(trace, i, params.eps)?;
    Ok(build(trace, i, &c, params))
}

fn build(trace: &PosteriorTrace, i: usize, c: &Constants, p: PruneParams) -> PrunedTimeTrace {
    let n_h = trace.horizon;
    let sq = p.eps.sqrt();
    let paths = trace
        .leaves()
        .map(|leaf| {
            let path = trace.path(leaf);
            let h: Vec<f64> = path.iter().map(|&k| trace.nodes[k].h_tld[i]).collect();
            let lo = tau_lower(&h, p.eps);
            let hi = tau_upper(&h, p.eps);
            let t = pruned_times(&h, p.eps);
            let s_at = |tt: usize| -> f64 {
                let mut s = 0.0;
                for r in 1..=tt.min(lo) {
                    s += c.k1[path[r - 1]] / p.i_const;
                }
                for r in tt.min(lo) + 1..=tt.min(hi) {
                    if h[r - 1] >= sq {
                        s += c.k4 / p.i_const;
                    }
                }
                for r in tt.min(hi) + 1..=tt {
                    s += c.k2[path[r - 1]] / p.d_const;
                }
                if tt >= hi {
                    s += sq * n_h as f64 / p.i_const;
                }
                s
            };
            let l = t
                .iter()
                .map(|&tt| z_value(trace.nodes[path[tt]].h_bar[i], h[tt], &p) + s_at(tt))
                .collect();
            PrunedPath { leaf, tau_lower: lo, tau_upper: hi, t, l }
        })
        .collect();
    PrunedTimeTrace { index: i, params: p, paths }
}

/// Worst conditional increment `E[L_{n+1} - L_n | y^{t_n}]` over all information sets,
/// the number of sets, and the measurability violations found.
fn evaluate(trace: &PosteriorTrace, pt: &PrunedTimeTrace) -> (f64, usize, usize, usize) {
    let n_h = trace.horizon;
    let i = pt.index;
    let mut worst = f64::INFINITY;
    let mut sets = 0;
    let mut meas = 0;
    let mut shape = 0;
    let paths: Vec<(Vec<usize>, &PrunedPath)> = pt.paths.iter().map(|pp| (trace.path(pp.leaf), pp)).collect();
    for (path, pp) in &paths {
        let t = &pp.t;
        let ok = t.windows(2).all(|w| w[0] <= w[1])
            && (0..=n_h).all(|k| if k < pp.tau_lower { t[k] == k } else { t[k] == k.max(pp.tau_upper) })
            && t[n_h + 1] == n_h;
        if !ok {
            shape += 1;
        }
        for (n, &tn) in t.iter().enumerate().take(n_h + 1) {
            let prefix: Vec<f64> = path[..=tn].iter().map(|&k| trace.nodes[k].h_tld[i]).collect();
            let want = (tn.min(pp.tau_lower), tn.min(pp.tau_upper));
            if observed_stops(&prefix, n, pt.params.eps) != want {
                meas += 1;
            }
        }
    }
    for n in 0..=n_h {
        let mut groups: HashMap<(usize, usize), (f64, f64)> = HashMap::new();
        for (path, pp) in &paths {
            let prob = trace.nodes[pp.leaf].prob;
            if prob <= 0.0 {
                continue;
            }
            let tn = pp.t[n];
            let e = groups.entry((tn, path[tn])).or_insert((0.0, 0.0));
            e.0 += prob;
            e.1 += prob * (pp.l[n + 1] - pp.l[n]);
        }
        for (w, s) in groups.values() {
            sets += 1;
            worst = worst.min(s / w);
        }
    }
    (worst, sets, meas, shape)
}

/// Exhaustive submartingale check for `L_n` with `μ` scanned from `2^-3` down to
/// `2^-20`; `I = D` is the largest `k2` on the trace.
pub fn check_pruned_submartingale(trace: &PosteriorTrace, i: usize, eps: f64) -> Result<SubmartingaleReport> {
    if trace.log_messages()[i] == 0.0 {
        return Ok(SubmartingaleReport {
            index: i + 1,
            eps,
            i_const: 0.0,
            d_const: 0.0,
            mu: None,
            information_sets: 0,
            worst_margin: 0.0,
            measurability_violations: 0,
            path_violations: 0,
            skipped: true,
        });
    }
    let c = constants(trace, i, eps)?;
    let d_const = c.k2.iter().cloned().fold(0.0, f64::max).max(1e-12);
    check_with(trace, i, eps, d_const, d_const, &c)
}

/// Same check with caller-chosen `I ≥ D > 0`.
pub fn check_pruned_submartingale_with(trace: &PosteriorTrace, i: usize, eps: f64, i_const: f64, d_const: f64) -> Result<SubmartingaleReport> {
    if !(i_const >= d_const && d_const > 0.0) {
        return Err(Error::Invalid(format!("need I >= D > 0, got I={i_const}, D={d_const}")));
    }
    let c = constants(trace, i, eps)?;
    check_with(trace, i, eps, i_const, d_const, &c)
}

/// Single evaluation at fixed parameters, no scan.
pub fn check_pruned_submartingale_at(trace: &PosteriorTrace, i: usize, params: PruneParams) -> Result<SubmartingaleReport> {
    let c = constants(trace, i, params.eps)?;
    let pt = build(trace, i, &c, params);
    let (worst, sets, meas, shape) = evaluate(trace, &pt);
    Ok(SubmartingaleReport {
        index: i + 1,
        eps: params.eps,
        i_const: params.i_const,
        d_const: params.d_const,
        mu: (worst >= -TOL).then_some(params.mu),
        information_sets: sets,
        worst_margin: worst,
        measurability_violations: meas,
        path_violations: shape,
        skipped: false,
    })
}

/// Largest `k2` on the trace for index `i`.
pub fn max_log_allowance(trace: &PosteriorTrace, i: usize, eps: f64) -> Result<f64> {
    Ok(constants(trace, i, eps)?.k2.iter().cloned().fold(0.0, f64::max))
}

fn check_with(trace: &PosteriorTrace, i: usize, eps: f64, i_const: f64, d_const: f64, c: &Constants) -> Result<SubmartingaleReport> {
    let mut last = None;
    for k in 3..=20 {
        let mu = 2f64.powi(-k);
        let pt = build(trace, i, c, PruneParams { eps, i_const, d_const, mu });
        let (worst, sets, meas, shape) = evaluate(trace, &pt);
        let rep = SubmartingaleReport {
            index: i + 1,
            eps,
            i_const,
            d_const,
            mu: None,
            information_sets: sets,
            worst_margin: worst,
            measurability_violations: meas,
            path_violations: shape,
            skipped: false,
        };
        if worst >= -TOL {
            return Ok(SubmartingaleReport { mu: Some(mu), ..rep });
        }
        last = Some(rep);
    }
    Ok(last.unwrap())
}
