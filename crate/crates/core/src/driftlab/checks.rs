use serde::{Deserialize, Serialize};

use super::PosteriorTrace;
use crate::infotheory::{entropy, h_b, h_b_inv};
use crate::{Error, Result};

const TOL: f64 = 1e-9;

/// Outcome of one exhaustive check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub checked: usize,
    pub violations: usize,
    /// Smallest `lhs - rhs` seen; negative beyond tolerance means a violation.
    #[serde(with = "crate::num")]
    pub worst_margin: f64,
    pub first_violation: Option<String>,
}

impl CheckReport {
    pub fn new(name: &str) -> Self {
        CheckReport { name: name.into(), checked: 0, violations: 0, worst_margin: f64::INFINITY, first_violation: None }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// Records `margin ≥ -tol`.
    pub fn record(&mut self, margin: f64, tol: f64, what: impl FnOnce() -> String) {
        self.checked += 1;
        self.worst_margin = self.worst_margin.min(margin);
        if margin < -tol || margin.is_nan() {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some(what());
            }
        }
    }
}

/// Output symbols along the path to node `k`.
pub fn node_path(trace: &PosteriorTrace, k: usize) -> Vec<usize> {
    let mut ys = Vec::new();
    let mut cur = k;
    while let Some(p) = trace.nodes[cur].parent {
        ys.push(trace.nodes[p].children.iter().position(|&c| c == cur).unwrap());
        cur = p;
    }
    ys.reverse();
    ys
}

fn cond_mean(trace: &PosteriorTrace, k: usize, f: impl Fn(usize) -> f64) -> f64 {
    let node = &trace.nodes[k];
    let py = &node.step.as_ref().unwrap().py;
    node.children.iter().zip(py).filter(|(_, &p)| p > 0.0).map(|(&c, &p)| p * f(c)).sum()
}

fn internal(trace: &PosteriorTrace) -> impl Iterator<Item = usize> + '_ {
    (0..trace.nodes.len()).filter(|&k| trace.nodes[k].step.is_some() && trace.nodes[k].prob > 0.0)
}

/// `E[H̄^i_r - H̄^i_{r-1} | y^{r-1}] ≥ -J^i_r` at every internal node.
pub fn check_linear_drift(trace: &PosteriorTrace) -> CheckReport {
    let mut rep = CheckReport::new("linear_drift");
    for k in internal(trace) {
        let node = &trace.nodes[k];
        let j = node.step.as_ref().unwrap().j;
        for i in 0..3 {
            let drift = cond_mean(trace, k, |c| trace.nodes[c].h_bar[i]) - node.h_bar[i];
            rep.record(drift + j[i], TOL, || format!("i={} path={:?}", i + 1, node_path(trace, k)));
        }
    }
    rep
}

/// `|log H̃^i_r - log H̃^i_{r-1}| ≤ η` on every edge between nonzero entropies.
pub fn check_eta_bound(trace: &PosteriorTrace) -> Result<CheckReport> {
    if !trace.eta.is_finite() {
        return Err(Error::NotStrictlyPositive);
    }
    let mut rep = CheckReport::new("eta_bound");
    for k in internal(trace) {
        let node = &trace.nodes[k];
        for &c in &node.children {
            if trace.nodes[c].prob <= 0.0 {
                continue;
            }
            for i in 0..3 {
                let (a, b) = (node.h_tld[i], trace.nodes[c].h_tld[i]);
                if a > 0.0 && b > 0.0 {
                    let step = (b.log2() - a.log2()).abs();
                    rep.record(trace.eta - step, TOL, || format!("i={} path={:?}", i + 1, node_path(trace, c)));
                }
            }
        }
    }
    Ok(rep)
}

/// Finite-ε slack of the logarithmic drift:
/// `(2 log2 e + d_max) h_b^{-1}(ε) + |Y| (h_b(√h_b^{-1}(ε)) + (1 + η) √h_b^{-1}(ε))`.
pub fn kappa(eps: f64, d_max: f64, y_size: usize, eta: f64) -> f64 {
    let e1 = h_b_inv(eps);
    let s = e1.sqrt();
    (2.0 * std::f64::consts::LOG2_E + d_max) * e1 + y_size as f64 * (h_b(s) + (1.0 + eta) * s)
}

/// The per-node log-drift allowance `D^i_r + κ(ε) + d_max h_b^{-1}(ε)`.
pub fn log_drift_allowance(trace: &PosteriorTrace, d_r: f64, eps: f64) -> f64 {
    d_r + kappa(eps, trace.d_ub, trace.y_size, trace.eta) + trace.d_ub * h_b_inv(eps)
}

/// `E[log H̃^i_r - log H̃^i_{r-1} | y^{r-1}] ≥ -(D^i_r + κ(ε) + d_max η_1(ε))` at nodes
/// with `0 < H̃^i_{r-1} < ε`. Nodes with zero entropy are skipped.
pub fn check_log_drift(trace: &PosteriorTrace, eps: f64) -> Result<CheckReport> {
    if !trace.eta.is_finite() {
        return Err(Error::NotStrictlyPositive);
    }
    let mut rep = CheckReport::new("log_drift");
    for k in internal(trace) {
        let node = &trace.nodes[k];
        let d = node.step.as_ref().unwrap().d;
        for i in 0..3 {
            let h = node.h_tld[i];
            if !(h > 0.0 && h < eps) {
                continue;
            }
            let drift = cond_mean(trace, k, |c| trace.nodes[c].h_tld[i].log2()) - h.log2();
            let allow = log_drift_allowance(trace, d[i], eps);
            rep.record(drift + allow, TOL, || format!("i={} path={:?}", i + 1, node_path(trace, k)));
        }
    }
    if rep.checked == 0 {
        return Err(Error::NoQualifyingNodes);
    }
    Ok(rep)
}

/// `E[H̃^i_r | y^{r-1}] ≤ H̃^i_{r-1}`.
pub fn check_supermartingale(trace: &PosteriorTrace) -> CheckReport {
    let mut rep = CheckReport::new("entropy_supermartingale");
    for k in internal(trace) {
        let node = &trace.nodes[k];
        for i in 0..3 {
            let m = cond_mean(trace, k, |c| trace.nodes[c].h_tld[i]);
            rep.record(node.h_tld[i] - m, TOL, || format!("i={} path={:?}", i + 1, node_path(trace, k)));
        }
    }
    rep
}

/// `H(W1) = h_b(μ(w*)) + (1 - μ(w*)) H(Ŵ1)` with `w*` the most likely message and
/// `Ŵ1` distributed as the posterior restricted to the other messages.
pub fn check_grouping(trace: &PosteriorTrace) -> CheckReport {
    let mut rep = CheckReport::new("grouping_identity");
    for (k, node) in trace.nodes.iter().enumerate() {
        let mut mu = vec![0.0; trace.m1];
        for w1 in 0..trace.m1 {
            for w2 in 0..trace.m2 {
                mu[w1] += node.posterior[w1 * trace.m2 + w2];
            }
        }
        let (star, &top) = mu.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        let rest: Vec<f64> = if top < 1.0 {
            mu.iter().enumerate().filter(|(w, _)| *w != star).map(|(_, &p)| p / (1.0 - top)).collect()
        } else {
            vec![]
        };
        let rhs = h_b(top) + (1.0 - top) * entropy(&rest);
        let err = (node.h_tld[0] - rhs).abs();
        rep.record(-err, 1e-12, || format!("path={:?}", node_path(trace, k)));
    }
    rep
}

/// `h_b(pe) + pe log2(m_total)`.
pub fn fano_bound(pe: f64, m_total: usize) -> f64 {
    let pe = pe.clamp(0.0, 1.0);
    h_b(pe) + pe * (m_total as f64).log2()
}

/// `E[H̃^3_N] ≤ h_b(P_e) + P_e log2(M1 M2)` for the MAP decoder at the horizon.
pub fn check_fano(trace: &PosteriorTrace) -> CheckReport {
    let mut rep = CheckReport::new("fano");
    let pe = trace.map_error();
    let eh: f64 = trace.leaves().map(|k| trace.nodes[k].prob * trace.nodes[k].h_tld[2]).sum();
    rep.record(fano_bound(pe, trace.m1 * trace.m2) - eh, TOL, || format!("pe={pe} E[H]={eh}"));
    rep
}

/// A process on an enumerated tree: node values with absolute probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeProcess {
    pub parent: Vec<Option<usize>>,
    pub depth: Vec<usize>,
    pub prob: Vec<f64>,
    pub value: Vec<f64>,
}

impl TreeProcess {
    /// `H̃^i` along the trace.
    pub fn entropy(trace: &PosteriorTrace, i: usize) -> Self {
        TreeProcess {
            parent: trace.nodes.iter().map(|n| n.parent).collect(),
            depth: trace.nodes.iter().map(|n| n.depth).collect(),
            prob: trace.nodes.iter().map(|n| n.prob).collect(),
            value: trace.nodes.iter().map(|n| n.h_tld[i]).collect(),
        }
    }

    /// Same tree shape with every value replaced by `c`.
    pub fn constant(trace: &PosteriorTrace, c: f64) -> Self {
        let mut p = Self::entropy(trace, 0);
        p.value.iter_mut().for_each(|v| *v = c);
        p
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoobReport {
    pub tau: usize,
    pub c: f64,
    /// `P(sup_{t ≥ τ} M_t ≥ c)`.
    pub prob_exceed: f64,
    /// `E[M_τ] / c`.
    pub bound: f64,
    pub holds: bool,
}

/// Maximal inequality for a nonnegative supermartingale from the fixed time `tau`.
pub fn check_doob(proc: &TreeProcess, tau: usize, c: f64) -> Result<DoobReport> {
    let n = proc.value.len();
    let mut kids: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, p) in proc.parent.iter().enumerate() {
        if let Some(q) = p {
            kids[*q].push(k);
        }
    }
    for k in 0..n {
        if proc.value[k] < 0.0 {
            return Err(Error::NotSupermartingale(format!("negative value at node {k}")));
        }
        if !kids[k].is_empty() && proc.prob[k] > 0.0 {
            let m: f64 = kids[k].iter().map(|&c| proc.prob[c] * proc.value[c]).sum::<f64>() / proc.prob[k];
            if m > proc.value[k] + TOL {
                return Err(Error::NotSupermartingale(format!("node {k}: {m} > {}", proc.value[k])));
            }
        }
    }
    let mut run_max = vec![f64::NEG_INFINITY; n];
    let mut exceed = 0.0;
    let mut at_tau = 0.0;
    for k in 0..n {
        let inherited = proc.parent[k].map_or(f64::NEG_INFINITY, |p| run_max[p]);
        run_max[k] = if proc.depth[k] >= tau { inherited.max(proc.value[k]) } else { inherited };
        if proc.depth[k] == tau {
            at_tau += proc.prob[k] * proc.value[k];
        }
        if kids[k].is_empty() && run_max[k] >= c {
            exceed += proc.prob[k];
        }
    }
    let bound = at_tau / c;
    Ok(DoobReport { tau, c, prob_exceed: exceed, bound, holds: exceed <= bound + TOL })
}
