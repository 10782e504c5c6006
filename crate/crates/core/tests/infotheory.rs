use macfb::channel::{bsc, build_additive_mod_m, build_product, ChannelModel};
use macfb::infotheory::*;
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_4;

fn ternary() -> ChannelModel {
    build_additive_mod_m(3, 0.1).unwrap()
}

fn parallel() -> ChannelModel {
    build_product(&bsc(0.1), &bsc(0.2)).unwrap()
}

const C_TERNARY: f64 = 0.663034405834;

/// Feasibility sweep: largest r on the ray such that some single grid triple or a
/// two-point mixture dominates the rate vector.
fn sweep_radius(grid: &InputGrid, theta: f64) -> f64 {
    let u = [theta.cos(), theta.sin(), theta.cos() + theta.sin()];
    let fits = |r: f64, m: &[f64; 3]| (0..3).all(|i| r * u[i] <= m[i] + 1e-12);
    let pts: Vec<[f64; 3]> = grid.mi.iter().map(|m| m.as_array()).collect();
    let mut lo = 0.0;
    let mut hi = 4.0;
    for _ in 0..60 {
        let r = 0.5 * (lo + hi);
        let mut ok = pts.iter().any(|m| fits(r, m));
        if !ok {
            'outer: for a in pts.iter().step_by(7) {
                for b in pts.iter().step_by(7) {
                    for k in 1..20 {
                        let w = k as f64 / 20.0;
                        let m = [0, 1, 2].map(|i| w * a[i] + (1.0 - w) * b[i]);
                        if fits(r, &m) {
                            ok = true;
                            break 'outer;
                        }
                    }
                }
            }
        }
        if ok {
            lo = r
        } else {
            hi = r
        }
    }
    lo
}

#[test]
fn c_lambda_examples() {
    let g = InputGrid::new(&ternary(), GridSpec::for_channel(&ternary()));
    assert!((c_lambda(&g, &[0.0, 0.0, 1.0]) - C_TERNARY).abs() < 1e-9);
    let gp = InputGrid::new(&parallel(), GridSpec::for_channel(&parallel()));
    let c1 = 1.0 - h_b(0.1);
    let c2 = 1.0 - h_b(0.2);
    let third = 1.0 / 3.0;
    assert!((c_lambda(&gp, &[third, third, third]) - (c1 + c2 + c1 + c2) / 3.0).abs() < 1e-9);
    let uni = mac_mi_triple(&parallel(), &[0.5, 0.5], &[0.5, 0.5]);
    assert!(c_lambda(&gp, &[1.0, 0.0, 0.0]) >= uni.i1);
}

#[test]
fn hyperplane_property_holds_on_samples() {
    let ch = parallel();
    let g = InputGrid::new(&ch, GridSpec::for_channel(&ch).refined(true));
    for l in lambda_simplex(6) {
        let c = c_lambda(&g, &l);
        for k in (0..g.len()).step_by(5) {
            assert!(g.mi[k].dot(&l) <= c + 1e-12);
        }
    }
}

#[test]
fn region_boundary_examples() {
    let ch = ternary();
    let g = InputGrid::new(&ch, GridSpec::for_channel(&ch));
    let s = region_boundary(&g, FRAC_PI_4, 40);
    assert!((s.r1 - C_TERNARY / 2.0).abs() < 1e-6 && (s.r2 - C_TERNARY / 2.0).abs() < 1e-6, "{s:?}");
    assert!((sweep_radius(&g, FRAC_PI_4) - s.radius).abs() < 1e-6);
    assert!((region_boundary_primal(&g, FRAC_PI_4) - s.radius).abs() < 1e-6);

    let s0 = region_boundary(&g, 0.0, 40);
    let max_i1 = g.argmax(|m| m.i1).1;
    assert!((s0.radius - max_i1).abs() < 1e-9);

    let par = parallel();
    let gp = InputGrid::new(&par, GridSpec::for_channel(&par));
    let c1 = 1.0 - h_b(0.1);
    let c2 = 1.0 - h_b(0.2);
    let th = (c2 / c1).atan();
    let s = region_boundary(&gp, th, 40);
    assert!((s.r1 - c1).abs() < 1e-6 && (s.r2 - c2).abs() < 1e-6, "{s:?}");
    assert!((sweep_radius(&gp, th) - s.radius).abs() < 1e-6);
}

#[test]
fn hyperplane_and_input_routes_agree() {
    let q: Vec<Vec<Vec<f64>>> = vec![
        vec![vec![0.7, 0.2, 0.1], vec![0.3, 0.4, 0.3]],
        vec![vec![0.1, 0.6, 0.3], vec![0.2, 0.1, 0.7]],
    ];
    let ch = ChannelModel::from_rows(2, 2, 3, q).unwrap();
    let g = InputGrid::new(&ch, GridSpec::for_channel(&ch));
    let h = Hyperplanes::new(&g, 40);
    for k in 0..=8 {
        let th = k as f64 / 8.0 * std::f64::consts::FRAC_PI_2;
        let dual = h.boundary(th).radius;
        let primal = region_boundary_primal(&g, th);
        assert!(dual >= primal - 1e-9, "theta {th}: {dual} < {primal}");
        assert!(dual - primal < 2e-3, "theta {th}: {dual} vs {primal}");
    }
}

#[test]
fn finer_grid_never_shrinks_region() {
    let q: Vec<Vec<Vec<f64>>> = vec![
        vec![vec![0.6, 0.3, 0.1], vec![0.25, 0.5, 0.25]],
        vec![vec![0.1, 0.3, 0.6], vec![0.3, 0.3, 0.4]],
    ];
    let ch = ChannelModel::from_rows(2, 2, 3, q).unwrap();
    let coarse = InputGrid::new(&ch, GridSpec::uniform(5));
    let fine = InputGrid::new(&ch, GridSpec::uniform(10));
    for k in 0..=6 {
        let th = k as f64 / 6.0 * std::f64::consts::FRAC_PI_2;
        assert!(region_boundary_primal(&fine, th) >= region_boundary_primal(&coarse, th) - 1e-12);
    }
}

#[test]
fn mi_components_bounded_by_alphabets() {
    let ch = build_additive_mod_m(4, 0.05).unwrap();
    let g = InputGrid::new(&ch, GridSpec::uniform(4));
    for m in &g.mi {
        assert!(m.i1 <= 2.0 + 1e-12 && m.i2 <= 2.0 + 1e-12 && m.i3 <= 2.0 + 1e-12);
    }
}

fn stop_at_first_one() -> OutputTree {
    OutputTree::from_fn(2, 3, |_| vec![0.5, 0.5], |pre| *pre.last().unwrap() == 1)
}

#[test]
fn vl_entropy_stop_at_first_one() {
    let e = vl_entropy(&stop_at_first_one()).unwrap();
    assert_eq!(e.h_yt, 1.75);
    assert_eq!(e.h_t, 1.5);
    assert!((e.h_yt_given_t - 0.25).abs() < 1e-15);
}

#[test]
fn vl_entropy_trivial_cases() {
    let det = OutputTree::from_fn(2, 3, |_| vec![1.0, 0.0], |_| false);
    let e = vl_entropy(&det).unwrap();
    assert_eq!((e.h_yt, e.h_t, e.h_yt_given_t), (0.0, 0.0, 0.0));
    let one = OutputTree::from_fn(2, 1, |_| vec![0.5, 0.5], |_| true);
    let e = vl_entropy(&one).unwrap();
    assert_eq!((e.h_yt, e.h_t), (1.0, 0.0));
}

#[test]
fn invalid_trees_rejected() {
    let mut t = stop_at_first_one();
    t.root.children[0].stop = true; // stopped node keeps its children
    assert!(vl_entropy(&t).is_err());
    let mut t = stop_at_first_one();
    t.horizon = 2;
    assert!(vl_entropy(&t).is_err());
}

#[test]
fn tree_json_roundtrip() {
    let t = stop_at_first_one();
    let s = serde_json::to_string(&t).unwrap();
    let back: OutputTree = serde_json::from_str(&s).unwrap();
    assert_eq!(back, t);
}

fn label(px: &[f64], kernel: &[Vec<f64>]) -> NodeLabel {
    NodeLabel { pxzy: px.iter().zip(kernel).map(|(&w, r)| vec![r.iter().map(|v| w * v).collect()]).collect() }
}

fn labelled(tree: &mut TreeNode, f: &dyn Fn(usize) -> NodeLabel, depth: usize) {
    if !tree.stop {
        tree.label = Some(f(depth));
        for c in tree.children.iter_mut() {
            labelled(c, f, depth + 1);
        }
    }
}

#[test]
fn directed_information_memoryless_fixed_length() {
    let k = bsc(0.11);
    let px = [0.3, 0.7];
    let py = [0.3 * 0.89 + 0.7 * 0.11, 0.3 * 0.11 + 0.7 * 0.89];
    let mut t = OutputTree::from_fn(2, 4, |_| py.to_vec(), |_| false);
    labelled(&mut t.root, &|_| label(&px, &k), 0);
    let di = vl_directed_information(&t).unwrap();
    assert!((di - 4.0 * ptp_mi(&k, &px)).abs() < 1e-12);

    let indep = [vec![0.5, 0.5], vec![0.5, 0.5]];
    let mut t = OutputTree::from_fn(2, 3, |_| vec![0.5, 0.5], |_| false);
    labelled(&mut t.root, &|_| label(&px, &indep), 0);
    assert!(vl_directed_information(&t).unwrap().abs() < 1e-15);
}

#[test]
fn directed_information_stop_at_first_one_weights() {
    // Per-depth kernels with side variable Z; the tree stops at the first 1.
    let lab = |d: usize| -> NodeLabel {
        let eps = [0.1, 0.2, 0.3][d];
        // x, z uniform and independent; Y = X xor noise(eps) when z = 0, pure noise when z = 1
        let mut pxzy = vec![vec![vec![0.0; 2]; 2]; 2];
        for x in 0..2 {
            pxzy[x][0][x] = 0.25 * (1.0 - eps);
            pxzy[x][0][1 - x] = 0.25 * eps;
            pxzy[x][1] = vec![0.125, 0.125];
        }
        NodeLabel { pxzy }
    };
    let mut t = OutputTree::from_fn(2, 3, |_| vec![0.5, 0.5], |pre| *pre.last().unwrap() == 1);
    labelled(&mut t.root, &lab, 0);
    let i_at = |eps: f64| 0.5 * (1.0 - h_b(eps));
    let (a, b) = (0.5, 0.25);
    let want = i_at(0.1) + a * i_at(0.2) + b * i_at(0.3);
    assert!((vl_directed_information(&t).unwrap() - want).abs() < 1e-12);

    // label inconsistent with the tree's branching
    let mut bad = t.clone();
    bad.root.label = Some(label(&[0.5, 0.5], &[vec![0.9, 0.1], vec![0.9, 0.1]]));
    assert!(vl_directed_information(&bad).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]
    #[test]
    fn vl_entropy_decomposes(seed in any::<u64>(), ny in 2usize..=3, n in 1usize..=5) {
        let t = random_tree(seed, ny, n);
        let e = vl_entropy(&t).unwrap();
        prop_assert!((e.h_yt - e.h_t - e.h_yt_given_t).abs() < 1e-12);
    }
}
