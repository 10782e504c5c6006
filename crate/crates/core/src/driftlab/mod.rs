//! Exhaustive posterior bookkeeping for tiny feedback codes and exact checks of the
//! entropy-drift inequalities along the full output tree.

mod checks;
mod pruning;
mod runner;

pub use checks::*;
pub use pruning::*;
pub use runner::*;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{d_star_rows, kl_bits, ChannelModel, User};
use crate::infotheory::{entropy, mi_triple_joint};
use crate::{Error, Result};

/// Largest message count and horizon accepted by [`TinyCode`].
pub const MAX_MESSAGES: usize = 8;
pub const MAX_HORIZON: usize = 8;
const MAX_WORK: usize = 1 << 24;

/// Encoder tables `e_i(w_i, y^{t-1})` for every output prefix of length `< horizon`.
///
/// Prefix `y^{t-1}` is addressed as `offset(t-1) + Σ_s y_s |Y|^{t-2-s}`, i.e. by depth
/// and then in lexicographic order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TinyCode {
    pub m1: usize,
    pub m2: usize,
    pub horizon: usize,
    pub y_size: usize,
    pub enc1: Vec<Vec<usize>>,
    pub enc2: Vec<Vec<usize>>,
}

fn prefix_count(y: usize, horizon: usize) -> usize {
    (0..horizon).map(|d| y.pow(d as u32)).sum()
}

impl TinyCode {
    /// Builds the tables from `f(user, w, prefix)`.
    pub fn from_fn(
        ch: &ChannelModel,
        m1: usize,
        m2: usize,
        horizon: usize,
        f: impl Fn(User, usize, &[usize]) -> usize,
    ) -> Result<Self> {
        let ny = ch.y_size();
        let mut enc1 = vec![Vec::new(); m1];
        let mut enc2 = vec![Vec::new(); m2];
        for depth in 0..horizon {
            for code in 0..ny.pow(depth as u32) {
                let mut prefix = vec![0; depth];
                let mut c = code;
                for s in (0..depth).rev() {
                    prefix[s] = c % ny;
                    c /= ny;
                }
                for (w, e) in enc1.iter_mut().enumerate() {
                    e.push(f(User::One, w, &prefix));
                }
                for (w, e) in enc2.iter_mut().enumerate() {
                    e.push(f(User::Two, w, &prefix));
                }
            }
        }
        let code = TinyCode { m1, m2, horizon, y_size: ny, enc1, enc2 };
        code.validate(ch)?;
        Ok(code)
    }

    /// Every table entry drawn uniformly from the user's alphabet.
    pub fn random(ch: &ChannelModel, m1: usize, m2: usize, horizon: usize, rng: &mut impl Rng) -> Result<Self> {
        let (a1, a2) = (ch.x1_size(), ch.x2_size());
        let n = prefix_count(ch.y_size(), horizon);
        let enc1 = (0..m1).map(|_| (0..n).map(|_| rng.gen_range(0..a1)).collect()).collect();
        let enc2 = (0..m2).map(|_| (0..n).map(|_| rng.gen_range(0..a2)).collect()).collect();
        let code = TinyCode { m1, m2, horizon, y_size: ch.y_size(), enc1, enc2 };
        code.validate(ch)?;
        Ok(code)
    }

    /// Each user sends `w mod |X_i|` at every time.
    pub fn repetition(ch: &ChannelModel, m1: usize, m2: usize, horizon: usize) -> Result<Self> {
        let (a1, a2) = (ch.x1_size(), ch.x2_size());
        Self::from_fn(ch, m1, m2, horizon, |u, w, _| match u {
            User::One => w % a1,
            User::Two => w % a2,
        })
    }

    pub fn validate(&self, ch: &ChannelModel) -> Result<()> {
        if self.m1 == 0 || self.m2 == 0 || self.horizon == 0 {
            return Err(Error::Invalid("message counts and horizon must be positive".into()));
        }
        if self.m1 > MAX_MESSAGES || self.m2 > MAX_MESSAGES || self.horizon > MAX_HORIZON {
            return Err(Error::TooLarge(format!(
                "m1={}, m2={}, horizon={} (limits {MAX_MESSAGES}, {MAX_MESSAGES}, {MAX_HORIZON})",
                self.m1, self.m2, self.horizon
            )));
        }
        if self.y_size != ch.y_size() {
            return Err(Error::AlphabetMismatch { expected: ch.y_size(), got: self.y_size });
        }
        let n = prefix_count(self.y_size, self.horizon);
        let check = |t: &Vec<Vec<usize>>, m: usize, a: usize| {
            t.len() == m && t.iter().all(|r| r.len() == n && r.iter().all(|&x| x < a))
        };
        if !check(&self.enc1, self.m1, ch.x1_size()) || !check(&self.enc2, self.m2, ch.x2_size()) {
            return Err(Error::Shape("encoder tables do not cover every prefix".into()));
        }
        Ok(())
    }
}

/// Quantities attached to an internal node for the next channel use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    /// Joint input law `[x1 * |X2| + x2]` induced by the posterior.
    pub joint: Vec<f64>,
    /// `(I(X1;Y|X2), I(X2;Y|X1), I(X1X2;Y))` under `joint`.
    pub j: [f64; 3],
    /// Per-user and joint divergence constants of the next use.
    pub d: [f64; 3],
    /// `P(y | node)`.
    pub py: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceNode {
    pub depth: usize,
    pub parent: Option<usize>,
    /// Absolute probability of the output prefix.
    pub prob: f64,
    /// Posterior `[w1 * m2 + w2]`.
    pub posterior: Vec<f64>,
    /// `(H(W1|W2,y^t), H(W2|W1,y^t), H(W1W2|y^t))`.
    pub h_bar: [f64; 3],
    /// `(H(W1|y^t), H(W2|y^t), H(W1W2|y^t))`.
    pub h_tld: [f64; 3],
    pub children: Vec<usize>,
    pub step: Option<StepInfo>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorTrace {
    pub m1: usize,
    pub m2: usize,
    pub horizon: usize,
    pub y_size: usize,
    pub d_ub: f64,
    pub eta: f64,
    /// Nodes in breadth-first order; node 0 is the root.
    pub nodes: Vec<TraceNode>,
}

fn marginals(post: &[f64], m1: usize, m2: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = vec![0.0; m1];
    let mut b = vec![0.0; m2];
    for w1 in 0..m1 {
        for w2 in 0..m2 {
            a[w1] += post[w1 * m2 + w2];
            b[w2] += post[w1 * m2 + w2];
        }
    }
    (a, b)
}

fn entropies(post: &[f64], m1: usize, m2: usize) -> ([f64; 3], [f64; 3]) {
    let (a, b) = marginals(post, m1, m2);
    let (h1, h2, h12) = (entropy(&a), entropy(&b), entropy(post));
    ([(h12 - h2).max(0.0), (h12 - h1).max(0.0), h12], [h1, h2, h12])
}

fn step_info(ch: &ChannelModel, code: &TinyCode, post: &[f64], prefix_id: usize) -> StepInfo {
    let (n1, n2) = (ch.x1_size(), ch.x2_size());
    let mut joint = vec![0.0; n1 * n2];
    for w1 in 0..code.m1 {
        for w2 in 0..code.m2 {
            let x1 = code.enc1[w1][prefix_id];
            let x2 = code.enc2[w2][prefix_id];
            joint[x1 * n2 + x2] += post[w1 * code.m2 + w2];
        }
    }
    let mi = mi_triple_joint(ch, &joint);
    let mut py = vec![0.0; ch.y_size()];
    for x1 in 0..n1 {
        for x2 in 0..n2 {
            let w = joint[x1 * n2 + x2];
            if w > 0.0 {
                for (o, q) in py.iter_mut().zip(ch.row(x1, x2)) {
                    *o += w * q;
                }
            }
        }
    }
    let mixed = |user: User| -> Vec<Vec<f64>> {
        let (nu, no) = (ch.size_of(user), ch.size_of(user.other()));
        (0..nu)
            .filter_map(|x| {
                let weights: Vec<f64> = (0..no)
                    .map(|xo| match user {
                        User::One => joint[x * n2 + xo],
                        User::Two => joint[xo * n2 + x],
                    })
                    .collect();
                let tot: f64 = weights.iter().sum();
                if tot <= 0.0 {
                    return None;
                }
                let mut row = vec![0.0; ch.y_size()];
                for (xo, w) in weights.iter().enumerate() {
                    for (o, q) in row.iter_mut().zip(ch.row_for(user, x, xo)) {
                        *o += w / tot * q;
                    }
                }
                Some(row)
            })
            .collect()
    };
    let r1 = mixed(User::One);
    let r2 = mixed(User::Two);
    let d1 = d_star_rows(ch, User::One, r1.iter().map(|r| r.as_slice()));
    let d2 = d_star_rows(ch, User::Two, r2.iter().map(|r| r.as_slice()));
    let mut d3: f64 = 0.0;
    for x1 in 0..n1 {
        for x2 in 0..n2 {
            if joint[x1 * n2 + x2] > 0.0 {
                for z1 in 0..n1 {
                    for z2 in 0..n2 {
                        d3 = d3.max(kl_bits(ch.row(x1, x2), ch.row(z1, z2)));
                    }
                }
            }
        }
    }
    StepInfo { joint, j: [mi.i1, mi.i2, mi.i3], d: [d1, d2, d3], py }
}

/// Exact Bayesian posteriors at every output prefix up to the horizon.
pub fn enumerate_trace(ch: &ChannelModel, code: &TinyCode) -> Result<PosteriorTrace> {
    code.validate(ch)?;
    if !ch.is_strictly_positive() {
        return Err(Error::NotStrictlyPositive);
    }
    let ny = ch.y_size();
    let (m1, m2) = (code.m1, code.m2);
    let leaves = ny.checked_pow(code.horizon as u32).unwrap_or(usize::MAX);
    if leaves.saturating_mul(m1 * m2) > MAX_WORK {
        return Err(Error::TooLarge(format!("{leaves} output sequences x {} message pairs", m1 * m2)));
    }
    let uniform = vec![1.0 / (m1 * m2) as f64; m1 * m2];
    let (hb, ht) = entropies(&uniform, m1, m2);
    let mut nodes = vec![TraceNode {
        depth: 0,
        parent: None,
        prob: 1.0,
        posterior: uniform,
        h_bar: hb,
        h_tld: ht,
        children: Vec::new(),
        step: None,
    }];
    // prefix ids in the same breadth-first order as the nodes
    let mut prefix_ids = vec![0usize];
    let mut k = 0;
    while k < nodes.len() {
        let depth = nodes[k].depth;
        if depth < code.horizon {
            let pid = prefix_ids[k];
            let info = step_info(ch, code, &nodes[k].posterior, pid);
            let child_base = prefix_count(ny, depth + 1);
            let local = pid - prefix_count(ny, depth);
            let mut kids = Vec::with_capacity(ny);
            for y in 0..ny {
                let mut post = vec![0.0; m1 * m2];
                for w1 in 0..m1 {
                    for w2 in 0..m2 {
                        let i = w1 * m2 + w2;
                        post[i] = nodes[k].posterior[i] * ch.row(code.enc1[w1][pid], code.enc2[w2][pid])[y];
                    }
                }
                let tot: f64 = post.iter().sum();
                if tot > 0.0 {
                    post.iter_mut().for_each(|v| *v /= tot);
                }
                let (hb, ht) = entropies(&post, m1, m2);
                kids.push(nodes.len());
                prefix_ids.push(child_base + local * ny + y);
                nodes.push(TraceNode {
                    depth: depth + 1,
                    parent: Some(k),
                    prob: nodes[k].prob * info.py[y],
                    posterior: post,
                    h_bar: hb,
                    h_tld: ht,
                    children: Vec::new(),
                    step: None,
                });
            }
            nodes[k].children = kids;
            nodes[k].step = Some(info);
        }
        k += 1;
    }
    Ok(PosteriorTrace {
        m1,
        m2,
        horizon: code.horizon,
        y_size: ny,
        d_ub: crate::channel::d_ub(ch),
        eta: ch.eta(),
        nodes,
    })
}

impl PosteriorTrace {
    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&k| self.nodes[k].children.is_empty())
    }

    /// Node indices from the root to `leaf`.
    pub fn path(&self, leaf: usize) -> Vec<usize> {
        let mut p = vec![leaf];
        let mut k = leaf;
        while let Some(q) = self.nodes[k].parent {
            p.push(q);
            k = q;
        }
        p.reverse();
        p
    }

    pub fn log_messages(&self) -> [f64; 3] {
        let (a, b) = ((self.m1 as f64).log2(), (self.m2 as f64).log2());
        [a, b, a + b]
    }

    /// Probability of error of the MAP decoder at the horizon.
    pub fn map_error(&self) -> f64 {
        let ok: f64 = self
            .leaves()
            .map(|k| self.nodes[k].prob * self.nodes[k].posterior.iter().cloned().fold(0.0, f64::max))
            .sum();
        (1.0 - ok).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::build_additive_mod_m;

    #[test]
    fn single_message_has_no_uncertainty() {
        let ch = build_additive_mod_m(3, 0.1).unwrap();
        let code = TinyCode::repetition(&ch, 1, 1, 3).unwrap();
        let t = enumerate_trace(&ch, &code).unwrap();
        assert_eq!(t.nodes.len(), 1 + 3 + 9 + 27);
        for n in &t.nodes {
            assert_eq!(n.h_tld, [0.0; 3]);
            assert_eq!(n.h_bar, [0.0; 3]);
        }
    }

    #[test]
    fn repetition_one_step_by_hand() {
        let ch = build_additive_mod_m(3, 0.1).unwrap();
        let code = TinyCode::repetition(&ch, 2, 2, 1).unwrap();
        let t = enumerate_trace(&ch, &code).unwrap();
        assert_eq!(t.nodes[0].h_tld, [1.0, 1.0, 2.0]);
        // y = 0: sums 0 (w=00) -> 0.8; sums 1 (01, 10) -> 0.1; sum 2 (11) -> 0.1
        let post = &t.nodes[1].posterior;
        let want = [0.8 / 1.1, 0.1 / 1.1, 0.1 / 1.1, 0.1 / 1.1];
        for (a, b) in post.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((t.nodes[1].prob - 1.1 / 4.0).abs() < 1e-12);
        let h: f64 = want.iter().map(|p| -p * p.log2()).sum();
        assert!((t.nodes[1].h_tld[2] - h).abs() < 1e-12);
    }

    #[test]
    fn code_json_round_trip() {
        let ch = build_additive_mod_m(3, 0.1).unwrap();
        let code = TinyCode::repetition(&ch, 2, 4, 3).unwrap();
        let s = serde_json::to_string(&code).unwrap();
        let back: TinyCode = serde_json::from_str(&s).unwrap();
        assert_eq!(back, code);
        let mut bad = code.clone();
        bad.enc1[0].pop();
        assert!(bad.validate(&ch).is_err());
        assert!(TinyCode::repetition(&ch, 9, 2, 2).is_err());
    }
}
