//! Max-min of linear functionals over the probability simplex, solved exactly as a
//! linear program with a dense tableau simplex (Bland's rule).

/// `max_p min_k (c_k + a_k · p)` over the simplex and one maximiser.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxMin {
    pub value: f64,
    pub p: Vec<f64>,
    /// Value of each functional at `p` (+inf where `p` touches an infinite cell).
    pub terms: Vec<f64>,
}

const EPS: f64 = 1e-12;

fn eval(a: &[f64], c: f64, p: &[f64]) -> f64 {
    let mut s = c;
    for (&ai, &pi) in a.iter().zip(p) {
        if pi > 0.0 {
            if ai.is_infinite() {
                return f64::INFINITY;
            }
            s += ai * pi;
        }
    }
    s
}

/// Solves the max-min problem. Coefficients must be nonnegative (possibly +inf);
/// offsets are finite.
///
/// With infinite coefficients the supremum is +inf when every functional has an
/// infinite cell. Otherwise the functionals that have one are dropped, since an
/// arbitrarily small mass on such a cell makes them infinite; the maximiser
/// returned is that of the remaining finite problem.
pub fn max_min_simplex(a: &[Vec<f64>], c: &[f64]) -> MaxMin {
    let n = a.first().map_or(0, |r| r.len());
    assert!(n > 0 && a.len() == c.len());
    let has_inf: Vec<bool> = a.iter().map(|r| r.iter().any(|v| v.is_infinite())).collect();
    if has_inf.iter().all(|&b| b) {
        let mut p = vec![0.0; n];
        let cells: Vec<usize> = a.iter().map(|r| r.iter().position(|v| v.is_infinite()).unwrap()).collect();
        for &j in &cells {
            p[j] += 1.0 / cells.len() as f64;
        }
        let terms = a.iter().zip(c).map(|(r, &ck)| eval(r, ck, &p)).collect();
        return MaxMin { value: f64::INFINITY, p, terms };
    }
    let keep: Vec<usize> = (0..a.len()).filter(|&k| !has_inf[k]).collect();
    let rows: Vec<&[f64]> = keep.iter().map(|&k| a[k].as_slice()).collect();
    let offs: Vec<f64> = keep.iter().map(|&k| c[k]).collect();
    let (value, p) = solve_finite(&rows, &offs);
    let terms = a.iter().zip(c).map(|(r, &ck)| eval(r, ck, &p)).collect();
    MaxMin { value, p, terms }
}

fn solve_finite(a: &[&[f64]], c: &[f64]) -> (f64, Vec<f64>) {
    let k = a.len();
    let n = a[0].len();
    let cmin = c.iter().cloned().fold(f64::INFINITY, f64::min);
    // variables: p_0..p_{n-1}, t (shifted by cmin), slacks s_0..s_k
    let nv = n + 1 + k + 1;
    let m = k + 1;
    let width = nv + 1;
    let mut tab = vec![0.0; (m + 1) * width];
    let idx = |r: usize, col: usize| r * width + col;
    for (r, (row, &ck)) in a.iter().zip(c).enumerate() {
        for j in 0..n {
            tab[idx(r, j)] = -row[j];
        }
        tab[idx(r, n)] = 1.0;
        tab[idx(r, n + 1 + r)] = 1.0;
        tab[idx(r, nv)] = ck - cmin;
    }
    for j in 0..n {
        tab[idx(k, j)] = 1.0;
    }
    tab[idx(k, n + 1 + k)] = 1.0;
    tab[idx(k, nv)] = 1.0;
    tab[idx(m, n)] = -1.0;
    let mut basis: Vec<usize> = (0..m).map(|r| n + 1 + r).collect();

    for _ in 0..50_000 {
        let enter = (0..nv).find(|&j| tab[idx(m, j)] < -EPS);
        let Some(e) = enter else { break };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let coef = tab[idx(r, e)];
            if coef > EPS {
                let ratio = tab[idx(r, nv)] / coef;
                match leave {
                    None => leave = Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - EPS || (ratio <= lratio + EPS && basis[r] < basis[lr]) {
                            leave = Some((r, ratio));
                        }
                    }
                }
            }
        }
        let Some((lr, _)) = leave else { break };
        let piv = tab[idx(lr, e)];
        for col in 0..width {
            tab[idx(lr, col)] /= piv;
        }
        for r in 0..=m {
            if r != lr {
                let f = tab[idx(r, e)];
                if f != 0.0 {
                    for col in 0..width {
                        tab[idx(r, col)] -= f * tab[idx(lr, col)];
                    }
                }
            }
        }
        basis[lr] = e;
    }
    let mut p = vec![0.0; n];
    for (r, &b) in basis.iter().enumerate() {
        if b < n {
            p[b] = tab[idx(r, nv)].max(0.0);
        }
    }
    let s: f64 = p.iter().sum();
    if s < 1.0 {
        p[0] += 1.0 - s;
    } else {
        for v in p.iter_mut() {
            *v /= s;
        }
    }
    let value = a.iter().zip(c).map(|(r, &ck)| eval(r, ck, &p)).fold(f64::INFINITY, f64::min);
    (value, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(a: &[Vec<f64>], c: &[f64], den: usize) -> f64 {
        let n = a[0].len();
        crate::infotheory::lattice(n, den)
            .iter()
            .map(|p| a.iter().zip(c).map(|(r, &ck)| eval(r, ck, p)).fold(f64::INFINITY, f64::min))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn matches_dense_search() {
        let a = vec![vec![3.0, 0.0, 1.0, 0.5], vec![0.0, 2.0, 1.0, 0.2], vec![1.0, 1.0, 0.0, 2.5]];
        let c = vec![0.0, 0.3, 0.1];
        let lp = max_min_simplex(&a, &c);
        let b = brute(&a, &c, 120);
        assert!(lp.value >= b - 1e-12 && lp.value - b < 0.02, "{} vs {}", lp.value, b);
        for t in &lp.terms {
            assert!(*t >= lp.value - 1e-9);
        }
    }

    #[test]
    fn single_functional_picks_best_cell() {
        let r = max_min_simplex(&[vec![0.2, 1.5, 0.7]], &[0.0]);
        assert!((r.value - 1.5).abs() < 1e-12);
        assert!((r.p[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infinite_cells() {
        let inf = f64::INFINITY;
        let all = max_min_simplex(&[vec![inf, 0.0], vec![0.0, inf]], &[0.0, 0.0]);
        assert_eq!(all.value, inf);
        let some = max_min_simplex(&[vec![inf, 0.0], vec![1.0, 2.0]], &[0.0, 0.0]);
        assert!((some.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn negative_offsets() {
        let r = max_min_simplex(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[-0.5, 0.0]);
        // maximise min(p0 - 0.5, p1) -> p0 = 0.75
        assert!((r.value - 0.25).abs() < 1e-12);
    }
}
