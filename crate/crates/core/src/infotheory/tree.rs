use serde::{Deserialize, Serialize};

use super::entropy;
use crate::error::{Error, Result};

const TOL: f64 = 1e-9;

/// Conditional joint law `P(x, z, y | history)` of the next step, indexed `[x][z][y]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeLabel {
    pub pxzy: Vec<Vec<Vec<f64>>>,
}

/// A node of the output tree. `p` is the probability of reaching the node; a node
/// with `stop` set is where the stopping time fires and has no children.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub p: f64,
    #[serde(default)]
    pub stop: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<TreeNode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<NodeLabel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputTree {
    pub horizon: usize,
    pub y_size: usize,
    pub root: TreeNode,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VlEntropy {
    pub h_yt: f64,
    pub h_t: f64,
    pub h_yt_given_t: f64,
}

impl OutputTree {
    /// Builds a tree from the next-symbol law and the stopping rule, both functions
    /// of the output prefix.
    pub fn from_fn<P, S>(y_size: usize, horizon: usize, next: P, stop: S) -> OutputTree
    where
        P: Fn(&[usize]) -> Vec<f64>,
        S: Fn(&[usize]) -> bool,
    {
        fn build<P: Fn(&[usize]) -> Vec<f64>, S: Fn(&[usize]) -> bool>(
            prefix: &mut Vec<usize>,
            p: f64,
            horizon: usize,
            next: &P,
            stop: &S,
        ) -> TreeNode {
            let depth = prefix.len();
            if depth == horizon || (depth > 0 && stop(prefix)) {
                return TreeNode { p, stop: true, children: vec![], label: None };
            }
            let law = next(prefix);
            let children = law
                .iter()
                .enumerate()
                .map(|(y, &q)| {
                    prefix.push(y);
                    let c = build(prefix, p * q, horizon, next, stop);
                    prefix.pop();
                    c
                })
                .collect();
            TreeNode { p, stop: false, children, label: None }
        }
        let root = build(&mut Vec::new(), 1.0, horizon, &next, &stop);
        OutputTree { horizon, y_size, root }
    }

    pub fn validate(&self) -> Result<()> {
        if (self.root.p - 1.0).abs() > TOL {
            return Err(Error::InvalidStoppingTime(format!("root probability {}", self.root.p)));
        }
        if self.root.stop {
            return Err(Error::InvalidStoppingTime("stopping at time 0".into()));
        }
        self.validate_node(&self.root, 0)
    }

    fn validate_node(&self, node: &TreeNode, depth: usize) -> Result<()> {
        if node.stop {
            if !node.children.is_empty() {
                return Err(Error::InvalidStoppingTime(format!("stopped node at depth {depth} has children")));
            }
            return Ok(());
        }
        if depth >= self.horizon {
            return Err(Error::InvalidStoppingTime(format!("path continues past horizon {}", self.horizon)));
        }
        if node.children.len() != self.y_size {
            return Err(Error::InvalidStoppingTime(format!(
                "node at depth {depth} has {} children, expected {}",
                node.children.len(),
                self.y_size
            )));
        }
        let s: f64 = node.children.iter().map(|c| c.p).sum();
        if (s - node.p).abs() > TOL || node.children.iter().any(|c| c.p < 0.0) {
            return Err(Error::InvalidStoppingTime(format!("children of depth-{depth} node sum to {s}, parent {}", node.p)));
        }
        node.children.iter().try_for_each(|c| self.validate_node(c, depth + 1))
    }

    /// `(p, T)` for every stopped node.
    pub fn leaves(&self) -> Vec<(f64, usize)> {
        fn walk(n: &TreeNode, d: usize, out: &mut Vec<(f64, usize)>) {
            if n.stop {
                out.push((n.p, d));
            } else {
                n.children.iter().for_each(|c| walk(c, d + 1, out));
            }
        }
        let mut out = Vec::new();
        walk(&self.root, 0, &mut out);
        out
    }
}

/// `H(Y^T)`, `H(T)` and `H(Y^T | T)` by leaf enumeration; the conditional term is
/// computed directly from the per-length conditional laws.
pub fn vl_entropy(tree: &OutputTree) -> Result<VlEntropy> {
    tree.validate()?;
    let leaves = tree.leaves();
    let h_yt = entropy(&leaves.iter().map(|l| l.0).collect::<Vec<_>>());
    let mut pt = vec![0.0; tree.horizon + 1];
    for &(p, t) in &leaves {
        pt[t] += p;
    }
    let h_t = entropy(&pt);
    let mut h_cond = 0.0;
    for (t, &w) in pt.iter().enumerate() {
        if w > 0.0 {
            let cond: Vec<f64> = leaves.iter().filter(|l| l.1 == t).map(|l| l.0 / w).collect();
            h_cond += w * entropy(&cond);
        }
    }
    Ok(VlEntropy { h_yt, h_t, h_yt_given_t: h_cond })
}

fn cond_mi(pxzy: &[Vec<Vec<f64>>]) -> f64 {
    let nx = pxzy.len();
    let nz = pxzy[0].len();
    let ny = pxzy[0][0].len();
    let mut pz = vec![0.0; nz];
    let mut pxz = vec![vec![0.0; nz]; nx];
    let mut pzy = vec![vec![0.0; ny]; nz];
    for x in 0..nx {
        for z in 0..nz {
            for y in 0..ny {
                let v = pxzy[x][z][y];
                pz[z] += v;
                pxz[x][z] += v;
                pzy[z][y] += v;
            }
        }
    }
    let mut i = 0.0;
    for x in 0..nx {
        for z in 0..nz {
            for y in 0..ny {
                let v = pxzy[x][z][y];
                if v > 0.0 {
                    i += v * (v * pz[z] / (pxz[x][z] * pzy[z][y])).log2();
                }
            }
        }
    }
    i.max(0.0)
}

/// Expected sum over the stopped horizon of the per-node `I(X; Y | Z)` given the
/// past outputs, each node weighted by its probability.
pub fn vl_directed_information(tree: &OutputTree) -> Result<f64> {
    tree.validate()?;
    fn walk(n: &TreeNode, ny: usize, path: &mut Vec<usize>) -> Result<f64> {
        if n.stop {
            return Ok(0.0);
        }
        let label = n
            .label
            .as_ref()
            .ok_or_else(|| Error::InconsistentLabels(format!("missing label at {path:?}")))?;
        let l = &label.pxzy;
        if l.is_empty() || l[0].is_empty() || l.iter().any(|r| r.len() != l[0].len() || r.iter().any(|c| c.len() != ny)) {
            return Err(Error::InconsistentLabels(format!("label shape at {path:?}")));
        }
        let total: f64 = l.iter().flatten().flatten().sum();
        if (total - 1.0).abs() > TOL || l.iter().flatten().flatten().any(|v| *v < 0.0) {
            return Err(Error::InconsistentLabels(format!("label at {path:?} sums to {total}")));
        }
        if n.p > 0.0 {
            for (y, c) in n.children.iter().enumerate() {
                let py: f64 = l.iter().flat_map(|r| r.iter().map(move |cz| cz[y])).sum();
                if (py - c.p / n.p).abs() > 1e-7 {
                    return Err(Error::InconsistentLabels(format!(
                        "output law at {path:?} disagrees with the tree for y={y}"
                    )));
                }
            }
        }
        let mut s = n.p * cond_mi(l);
        for (y, c) in n.children.iter().enumerate() {
            path.push(y);
            s += walk(c, ny, path)?;
            path.pop();
        }
        Ok(s)
    }
    walk(&tree.root, tree.y_size, &mut Vec::new())
}

/// Seeded random tree: squared-uniform next-symbol laws and a per-node stop
/// probability drawn once in `[0, 0.6)`.
pub fn random_tree(seed: u64, y_size: usize, horizon: usize) -> OutputTree {
    use rand::{Rng, SeedableRng};
    let rng = std::cell::RefCell::new(rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    let stop_p = rng.borrow_mut().gen_range(0.0..0.6);
    OutputTree::from_fn(
        y_size,
        horizon,
        |_| {
            let mut r = rng.borrow_mut();
            let w: Vec<f64> = (0..y_size).map(|_| r.gen_range(0.0..1.0f64).powi(2)).collect();
            let s: f64 = w.iter().sum();
            w.iter().map(|v| v / s).collect()
        },
        |_| rng.borrow_mut().gen_bool(stop_p),
    )
}
