use macfb::bounds::{d_lb, JointConfirmationDist};
use macfb::channel::{build_additive_mod_m, build_product, bsc, ChannelModel, User};
use macfb::hypotest::*;
use proptest::prelude::*;

fn ternary() -> ChannelModel {
    build_additive_mod_m(3, 0.1).unwrap()
}

fn hybrid_design(ch: &ChannelModel, n2: usize, n3: usize, lambda: f64) -> ConfirmationDesign {
    let pz = d_lb(ch).pz;
    ConfirmationDesign {
        confirming_user: User::One,
        x_phase2: [0, 1],
        p_other: vec![0.6, 0.3, 0.1],
        pz: Some(pz),
        n2,
        n3,
        lambda,
        lambda_per_use: 0.0,
        support_cap: DEFAULT_SUPPORT_CAP,
    }
}

fn run_in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn monte_carlo_matches_exact() {
    let ch = ternary();
    for d in [
        ConfirmationDesign::repetition(User::One, 0, 1, vec![0.7, 0.2, 0.1], 8, 1.0),
        hybrid_design(&ch, 3, 2, 0.5),
    ] {
        let e = exact_errors(&ch, &d).unwrap();
        let mc = monte_carlo_errors(&ch, &d, 200_000, 11).unwrap();
        for (k, a) in e.alternatives.iter().enumerate() {
            let b = &mc.beta[k];
            assert!((b.value - a.beta).abs() <= 4.0 * b.std_err() + 1e-12, "alt {:?}: {} vs {}", a.alt, b.value, a.beta);
        }
        let tol = 4.0 * mc.alpha.std_err() + 1e-12;
        assert!(mc.alpha.value >= e.alpha_max - tol && mc.alpha.value <= e.alpha + tol, "{:?} {:?}", mc.alpha, e);
    }
}

#[test]
fn single_trial_is_zero_or_one() {
    let ch = ternary();
    let d = ConfirmationDesign::repetition(User::One, 0, 1, vec![1.0, 0.0, 0.0], 5, 0.0);
    let mc = monte_carlo_errors(&ch, &d, 1, 3).unwrap();
    for b in &mc.beta {
        assert!(b.value == 0.0 || b.value == 1.0);
    }
}

#[test]
fn monte_carlo_is_thread_independent() {
    let ch = ternary();
    let d = hybrid_design(&ch, 4, 4, 0.0);
    let a = run_in_pool(1, || monte_carlo_errors(&ch, &d, 30_000, 99).unwrap());
    let b = run_in_pool(4, || monte_carlo_errors(&ch, &d, 30_000, 99).unwrap());
    assert_eq!(a, b);
    let c = monte_carlo_errors(&ch, &d, 30_000, 100).unwrap();
    assert_ne!(a, c);
}

/// Enumerates every output sequence of a hybrid design with a point-mass `pz`.
fn enumerate(ch: &ChannelModel, d: &ConfirmationDesign, z: [usize; 4], truth: (usize, usize), alt: (usize, usize)) -> Vec<(f64, f64, f64)> {
    let eff = macfb::channel::effective_channel(ch, User::One, &d.p_other).unwrap();
    let ny = ch.y_size();
    let n = d.n2 + d.n3;
    let mut out = Vec::new();
    for code in 0..ny.pow(n as u32) {
        let mut c = code;
        let (mut p, mut s2, mut s3) = (1.0, 0.0, 0.0);
        for j in 0..n {
            let y = c % ny;
            c /= ny;
            if j < d.n2 {
                let law = &eff.rows[d.x_phase2[truth.0]];
                p *= law[y];
                if alt.0 == 1 {
                    s2 += (eff.rows[d.x_phase2[0]][y] / eff.rows[d.x_phase2[1]][y]).log2();
                }
            } else {
                let row = |h: (usize, usize)| ch.row(z[2 * h.0], z[1 + 2 * h.1]);
                p *= row(truth)[y];
                s3 += (row((0, 0))[y] / row(alt)[y]).log2();
            }
        }
        out.push((p, s2, s3));
    }
    out
}

#[test]
fn decomposed_region_matches_joint_threshold() {
    let ch = ternary();
    let z = [0, 0, 1, 2];
    for (n2, n3) in [(2, 2), (3, 1), (1, 3), (4, 2), (0, 3), (3, 0)] {
        for lambda in [-2.0, 0.0, 1.5, 4.0] {
            let mut d = hybrid_design(&ch, n2, n3, lambda);
            d.pz = Some(JointConfirmationDist::point_mass(3, 3, z));
            let e = exact_errors(&ch, &d).unwrap();
            for (k, alt) in [(0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
                let mut beta = 0.0;
                for (p, s2, s3) in enumerate(&ch, &d, z, alt, alt) {
                    let joint = s2 + s3 >= lambda - 1e-9;
                    assert_eq!(joint, in_decomposed_region(s2, s3, n2, n3, lambda - 1e-9));
                    if joint {
                        beta += p;
                    }
                }
                assert!((beta - e.alternatives[k].beta).abs() < 1e-12, "({n2},{n3}) λ={lambda} alt {alt:?}");
            }
        }
    }
}

#[test]
fn beta_monotone_in_threshold_and_lengths() {
    let ch = ternary();
    let mut prev = f64::INFINITY;
    for lambda in [-6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0] {
        let e = exact_errors(&ch, &hybrid_design(&ch, 4, 3, lambda)).unwrap();
        assert!(e.beta <= prev + 1e-15);
        prev = e.beta;
    }
    // LLR sums live on a lattice, so single-step growth can cross a lattice point;
    // the decay holds over steps of three uses.
    for (per, grow) in [(0.5, true), (0.5, false)] {
        let mut prev = f64::INFINITY;
        for k in [1, 4, 7, 10] {
            let (n2, n3) = if grow { (k, 2) } else { (2, k) };
            let mut d = hybrid_design(&ch, n2, n3, 0.0);
            d.lambda_per_use = per;
            let b = exact_errors(&ch, &d).unwrap().beta;
            assert!(b <= prev + 1e-15, "n2={n2} n3={n3}");
            prev = b;
        }
    }
}

#[test]
fn final_phase_slope_tracks_weakest_divergence() {
    let ch = ternary();
    let mut d = hybrid_design(&ch, 0, 10, 0.0);
    let pred = kl_prediction(&ch, &d).unwrap();
    assert!((pred - 2.1).abs() < 1e-9);
    d.lambda_per_use = pred - 0.05;
    let curve = exact_curve(&ch, &d, &[40, 80, 120, 160]).unwrap();
    let slope = exponent_slope(&curve).unwrap();
    assert!((slope - pred).abs() / pred < 0.07, "{slope}");
}

#[test]
fn fixed_negative_slope_schedule_lands_in_cramer_regime() {
    // β(n) under λ(n) = -0.05 n decays at the large-deviation rate of the H1 LLR
    // at -0.05 bits per use, well below the divergence.
    let ch = ternary();
    let mut d = ConfirmationDesign::repetition(User::One, 0, 1, vec![1.0, 0.0, 0.0], 50, 0.0);
    d.lambda_per_use = -0.05;
    let curve = exact_curve(&ch, &d, &[50, 100, 150, 200]).unwrap();
    let slope = exponent_slope(&curve).unwrap();
    assert!((slope - 0.5637).abs() < 1e-3, "{slope}");
    assert!(curve[3].alpha <= 0.1);
}

#[test]
fn product_channel_confirmation() {
    let ch = build_product(&bsc(0.1), &bsc(0.2)).unwrap();
    let d = ConfirmationDesign::repetition(User::Two, 0, 1, vec![0.5, 0.5], 12, 0.0);
    let e = exact_errors(&ch, &d).unwrap();
    assert!(e.alternatives[1].indistinguishable);
    assert!(!e.alternatives[0].indistinguishable);
    let binom = |n: u64, k: u64| (1..=k).fold(1.0, |acc, i| acc * (n - k + i) as f64 / i as f64);
    let want: f64 = (6..=12).map(|k| binom(12, k) * 0.2f64.powi(k as i32) * 0.8f64.powi(12 - k as i32)).sum();
    assert!((e.beta - want).abs() < 1e-12, "{} vs {want}", e.beta);
}

#[test]
fn design_json_round_trip() {
    let ch = ternary();
    let d = hybrid_design(&ch, 3, 4, 0.25);
    let s = serde_json::to_string(&d).unwrap();
    let back: ConfirmationDesign = serde_json::from_str(&s).unwrap();
    assert_eq!(back, d);
    let minimal = r#"{"confirming_user":1,"x_phase2":[0,1],"p_other":[1,0,0],"n2":5,"n3":0}"#;
    let d: ConfirmationDesign = serde_json::from_str(minimal).unwrap();
    assert_eq!(d.support_cap, DEFAULT_SUPPORT_CAP);
    assert!(exact_errors(&ch, &d).is_ok());
}

#[test]
fn support_cap_is_enforced() {
    let ch = ternary();
    let mut d = hybrid_design(&ch, 0, 30, 0.0);
    d.pz = Some(JointConfirmationDist::uniform(3, 3));
    d.support_cap = 50;
    assert!(matches!(exact_errors(&ch, &d), Err(macfb::Error::SupportOverflow(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]
    #[test]
    fn exact_probabilities_are_valid(n2 in 0usize..5, n3 in 1usize..4, lambda in -8.0f64..8.0, w in 0.05f64..0.9) {
        let ch = ternary();
        let mut d = hybrid_design(&ch, n2, n3, lambda);
        d.p_other = vec![w, (1.0 - w) / 2.0, (1.0 - w) / 2.0];
        let e = exact_errors(&ch, &d).unwrap();
        prop_assert!((0.0..=1.0).contains(&e.alpha) && (0.0..=1.0).contains(&e.beta));
        prop_assert!(e.alpha_max <= e.alpha + 1e-12);
    }
}

#[test]
fn equal_law_statistics_still_count_separately() {
    let ch = ternary();
    let mut d = hybrid_design(&ch, 0, 12, 3.0);
    d.pz = Some(d_lb(&ch).pz);
    let e = exact_errors(&ch, &d).unwrap();
    assert!(e.alpha > e.alpha_max * 1.5);
    let mc = monte_carlo_errors(&ch, &d, 200_000, 21).unwrap();
    let tol = 4.0 * mc.alpha.std_err();
    assert!(mc.alpha.value >= e.alpha_max - tol && mc.alpha.value <= e.alpha + tol, "{:?} {e:?}", mc.alpha);
}
