//! Reference checks with expected values and tolerances, shared by the `example`
//! subcommand and the acceptance harness.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::{closed_form_parallel, d_lb, BoundsConfig, BoundsContext, RatePair};
use crate::channel::{bsc, bsc_divergence, build_additive_mod_m, build_product, d_ub, ChannelModel, User};
use crate::corpus;
use crate::driftlab::{random_corpus, run_corpus, DEFAULT_EPS};
use crate::hypotest::{exact_curve, exponent_slope, kl_prediction, ConfirmationDesign};
use crate::infotheory::{h_b, random_tree, vl_entropy, OutputTree};
use crate::vlcsim::{run_scheme, SchemeConfig};
use crate::Result;

pub const GRID_TOL: f64 = 0.02;

/// One line of a check table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub expected: String,
    pub computed: String,
    pub tolerance: String,
    pub pass: bool,
}

impl CheckRow {
    fn new(name: impl Into<String>, expected: impl Into<String>, computed: impl Into<String>, tolerance: impl Into<String>, pass: bool) -> Self {
        CheckRow { name: name.into(), expected: expected.into(), computed: computed.into(), tolerance: tolerance.into(), pass }
    }

    fn close(name: impl Into<String>, expected: f64, computed: f64, tol: f64) -> Self {
        let pass = (computed - expected).abs() <= tol;
        CheckRow::new(name, format!("{expected:.6}"), format!("{computed:.6}"), format!("{tol:e}"), pass)
    }
}

/// Outcome of one acceptance criterion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: usize,
    pub title: String,
    pub rows: Vec<CheckRow>,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl Criterion {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass) && self.seconds <= self.budget_seconds
    }

    /// First failing row, or the timing when only the budget was missed.
    pub fn summary(&self) -> String {
        match self.rows.iter().find(|r| !r.pass) {
            Some(r) => format!("{}: expected {} got {} (tol {})", r.name, r.expected, r.computed, r.tolerance),
            None if self.seconds > self.budget_seconds => format!("runtime {:.1}s over {:.0}s", self.seconds, self.budget_seconds),
            None => format!("{} checks", self.rows.len()),
        }
    }
}

fn timed(id: usize, title: &str, budget: f64, f: impl FnOnce() -> Result<Vec<CheckRow>>) -> Result<Criterion> {
    let t0 = Instant::now();
    let rows = f()?;
    Ok(Criterion { id, title: title.into(), rows, seconds: t0.elapsed().as_secs_f64(), budget_seconds: budget })
}

fn ctx(ch: &ChannelModel) -> BoundsContext {
    BoundsContext::new(ch, BoundsConfig::for_channel(ch))
}

/// `(1 - mp) log2((1 - (m-1)p) / p)`.
pub fn additive_constant(m: usize, p: f64) -> f64 {
    let m = m as f64;
    (1.0 - m * p) * ((1.0 - (m - 1.0) * p) / p).log2()
}

pub fn additive_tightness() -> Result<Criterion> {
    timed(1, "additive-MAC tightness", 5.0, || {
        let mut rows = Vec::new();
        for m in [3usize, 4, 5] {
            for p in [0.05, 0.1, 0.15] {
                let ch = build_additive_mod_m(m, p)?;
                let want = additive_constant(m, p);
                let lb = d_lb(&ch).value;
                let ub = d_ub(&ch);
                let rel = ((lb - want) / want).abs().max(((ub - want) / want).abs());
                rows.push(CheckRow::new(
                    format!("m={m} p={p}"),
                    format!("{want:.8}"),
                    format!("lb {lb:.8} ub {ub:.8}"),
                    "1e-6 rel",
                    rel <= 1e-6,
                ));
            }
        }
        Ok(rows)
    })
}

pub fn two_phase_coincidence() -> Result<Criterion> {
    timed(2, "two-phase coincidence, ternary p=0.1 r=(0.2,0.2)", 30.0, || {
        let ch = build_additive_mod_m(3, 0.1)?;
        let c = ctx(&ch);
        let r = RatePair::new(0.2, 0.2);
        Ok(vec![
            CheckRow::close("lower_two_phase", 0.83310, c.lower_two_phase(&r), 1e-3),
            CheckRow::close("upper_two_phase", 0.83310, c.upper_two_phase(&r), 1e-3),
        ])
    })
}

pub fn parallel_matching() -> Result<Criterion> {
    timed(3, "parallel BSC(0.1) x BSC(0.2) matching", 120.0, || {
        let ch = build_product(&bsc(0.1), &bsc(0.2))?;
        let (d1, c1, d2, c2) = (bsc_divergence(0.1), 1.0 - h_b(0.1), bsc_divergence(0.2), 1.0 - h_b(0.2));
        let c = ctx(&ch);
        let mut worst = (0.0f64, String::new());
        for i in 1..=5 {
            for j in 1..=5 {
                let r = RatePair::new(c1 * i as f64 / 6.0, c2 * j as f64 / 6.0);
                let want = closed_form_parallel(d1, c1, d2, c2, &r);
                let lo = (c.lower_three_phase(&r).value - want).abs();
                let hi = (c.upper_three_phase(&r) - want).abs();
                if lo.max(hi) > worst.0 || worst.1.is_empty() {
                    worst = (lo.max(hi), format!("({i}/6 C1, {j}/6 C2)"));
                }
            }
        }
        let r = RatePair::new(0.8 * c1, 0.2 * c2);
        let gain = c.lower_three_phase(&r).value - c.lower_two_phase(&r);
        Ok(vec![
            CheckRow::new(
                "5x5 grid, max |bound - closed form|",
                "0",
                format!("{:.5} at {}", worst.0, worst.1),
                format!("{GRID_TOL}"),
                worst.0 <= GRID_TOL,
            ),
            CheckRow::new("three-phase gain at (0.8C1, 0.2C2)", ">= 0.2", format!("{gain:.5}"), "-", gain >= 0.2),
        ])
    })
}

/// Output tree that stops at the first `1`, fair coin outputs, horizon 3.
pub fn stop_at_first_one() -> OutputTree {
    OutputTree::from_fn(2, 3, |_| vec![0.5, 0.5], |pre| *pre.last().unwrap() == 1)
}

pub fn variable_length_entropy() -> Result<Criterion> {
    timed(4, "variable-length entropy", 5.0, || {
        let e = vl_entropy(&stop_at_first_one())?;
        let exact = e.h_yt == 1.75 && e.h_t == 1.5 && (e.h_yt_given_t - 0.25).abs() < 1e-15;
        let mut worst: f64 = 0.0;
        for k in 0..500u64 {
            let t = random_tree(k, 2 + (k % 2) as usize, 1 + (k % 5) as usize);
            let e = vl_entropy(&t)?;
            worst = worst.max((e.h_yt - e.h_t - e.h_yt_given_t).abs());
        }
        Ok(vec![
            CheckRow::new("(H(Y^T), H(T), H(Y^T|T))", "(1.75, 1.5, 0.25)", format!("({}, {}, {})", e.h_yt, e.h_t, e.h_yt_given_t), "exact", exact),
            CheckRow::new("decomposition on 500 random trees", "0", format!("{worst:e}"), "1e-12", worst <= 1e-12),
        ])
    })
}

/// Rate pairs at fractions 0.2, 0.5, 0.8 of the region radius on five rays.
pub fn corpus_rates(c: &BoundsContext) -> Vec<RatePair> {
    let mut out = Vec::new();
    for theta in [0.15f64, 0.5, std::f64::consts::FRAC_PI_4, 1.1, 1.4] {
        let rad = c.lower_geometric(&RatePair::new(theta.cos(), theta.sin())).radius;
        for f in [0.2, 0.5, 0.8] {
            out.push(RatePair::new(f * rad * theta.cos(), f * rad * theta.sin()));
        }
    }
    out
}

pub fn geometric_equivalence() -> Result<Criterion> {
    timed(5, "geometric-form equivalence", f64::INFINITY, || {
        let mut rows = Vec::new();
        let mut pairs = 0;
        let mut worst: f64 = 0.0;
        'outer: for named in corpus::standard() {
            let c = ctx(&named.channel);
            for theta in [0.5f64, 1.1] {
                if pairs == 20 {
                    break 'outer;
                }
                let rad = c.lower_geometric(&RatePair::new(theta.cos(), theta.sin())).radius;
                let r = RatePair::new(0.5 * rad * theta.cos(), 0.5 * rad * theta.sin());
                let g = c.lower_geometric(&r);
                worst = worst.max((g.polar - g.lambda_form).abs() / c.d_lb.value.max(1.0));
                pairs += 1;
            }
        }
        rows.push(CheckRow::new(
            format!("{pairs} corpus pairs, max |polar - lambda| / max(d_lb, 1)"),
            "0",
            format!("{worst:.5}"),
            format!("{GRID_TOL}"),
            pairs == 20 && worst <= GRID_TOL,
        ));
        let mut worst_add: f64 = 0.0;
        for (m, p) in [(3, 0.1), (4, 0.05), (5, 0.1)] {
            let ch = build_additive_mod_m(m, p)?;
            let c = ctx(&ch);
            for r in [RatePair::new(0.2, 0.2), RatePair::new(0.1, 0.3), RatePair::new(0.3, 0.05)] {
                let l2 = c.lower_two_phase(&r);
                let g = c.lower_geometric(&r);
                worst_add = worst_add.max((g.polar - l2).abs()).max((g.lambda_form - l2).abs());
            }
        }
        rows.push(CheckRow::new("additive MACs, both forms vs lower_two_phase", "0", format!("{worst_add:.6}"), "1e-3", worst_add <= 1e-3));
        Ok(rows)
    })
}

pub fn confirmation_slope() -> Result<Criterion> {
    timed(6, "confirmation exponent slope", 30.0, || {
        let ch = build_additive_mod_m(3, 0.1)?;
        let mut d = ConfirmationDesign::repetition(User::One, 0, 1, vec![1.0, 0.0, 0.0], 50, 0.0);
        d.lambda_per_use = -0.05;
        let kl = kl_prediction(&ch, &d)?;
        let curve = exact_curve(&ch, &d, &[50, 100, 150, 200])?;
        let slope = exponent_slope(&curve)?;
        let alpha = curve[3].alpha;
        Ok(vec![
            CheckRow::new(
                "fitted slope of -log2 beta(n)",
                format!("{kl:.4}"),
                format!("{slope:.4}"),
                "5% rel",
                ((slope - kl) / kl).abs() <= 0.05,
            ),
            CheckRow::new("alpha(200)", "<= 0.1", format!("{alpha:.3e}"), "-", alpha <= 0.1),
        ])
    })
}

pub fn drift_corpus(count: usize, seed: u64) -> Result<Criterion> {
    timed(7, "drift-lab corpus", 180.0, || {
        let cases = random_corpus(count, seed)?;
        let reports = run_corpus(&cases, DEFAULT_EPS);
        let mut checked = std::collections::BTreeMap::<String, (usize, usize)>::new();
        let mut errors = 0;
        let mut vacuous = 0;
        for r in &reports {
            let r = match r {
                Ok(r) => r,
                Err(_) => {
                    errors += 1;
                    continue;
                }
            };
            vacuous += usize::from(r.log_drift_vacuous);
            for c in &r.checks {
                let e = checked.entry(c.name.clone()).or_default();
                e.0 += c.checked;
                e.1 += c.violations;
            }
            let e = checked.entry("pruned_submartingale".into()).or_default();
            for s in &r.submartingale {
                e.0 += s.information_sets;
                e.1 += usize::from(!s.passed());
            }
            let e = checked.entry("doob".into()).or_default();
            for d in &r.doob {
                e.0 += 1;
                e.1 += usize::from(!d.holds);
            }
        }
        let mut rows = vec![CheckRow::new(
            "cases enumerated",
            ">= 100, no errors",
            format!("{} cases, {errors} errors, {vacuous} without log-phase nodes", cases.len()),
            "-",
            cases.len() >= 100 && errors == 0,
        )];
        for (name, (n, v)) in checked {
            rows.push(CheckRow::new(name, "0 violations", format!("{v} of {n}"), "1e-9", v == 0));
        }
        Ok(rows)
    })
}

/// The renewal configuration: ternary p=0.1, n=18, M1=M2=8 with M2 split 4 x 2.
pub fn renewal_config() -> SchemeConfig {
    let mut cfg = SchemeConfig::new(18, [0.6, 0.2, 0.2], 8, 8);
    cfg.split = Some([4, 2]);
    cfg
}

pub fn renewal_identity(trials: u64, seed: u64) -> Result<Criterion> {
    timed(8, "renewal identity", 120.0, || {
        let ch = build_additive_mod_m(3, 0.1)?;
        let r = run_scheme(&ch, &renewal_config(), trials, seed)?;
        Ok(vec![
            CheckRow::new(
                "|pe (1-q) - peb|",
                "0",
                format!("{:.3e} (pe {:.4}, q {:.4}, peb {:.4})", r.renewal_residual.abs(), r.pe.value, r.q.value, r.peb.value),
                format!("4 x {:.2e}", r.renewal_se),
                r.renewal_holds(4.0),
            ),
            CheckRow::new(
                "|E[blocks] (1-q) - 1|",
                "0",
                format!("{:.3e} (E[blocks] {:.4})", r.blocks_residual.abs(), r.mean_blocks),
                format!("4 x {:.2e}", r.blocks_se),
                r.blocks_identity_holds(4.0),
            ),
        ])
    })
}

pub fn sandwich() -> Result<Criterion> {
    timed(9, "sandwich on the corpus", f64::INFINITY, || {
        let mut rows = Vec::new();
        let mut total = 0;
        let mut bad = Vec::new();
        let mut worst: f64 = f64::INFINITY;
        for named in corpus::standard() {
            let c = ctx(&named.channel);
            for r in corpus_rates(&c) {
                let l2 = c.lower_two_phase(&r);
                let l3 = c.lower_three_phase(&r).value;
                let ub = c.upper_three_phase(&r).min(c.upper_two_phase(&r)).min(c.upper_lambda_mixed(&r));
                total += 1;
                let margin = (l3 - l2).min(ub + GRID_TOL - l3);
                worst = worst.min(margin);
                if l2 > l3 + 1e-12 || l3 > ub + GRID_TOL {
                    bad.push(format!("{} ({:.4},{:.4})", named.name, r.r1, r.r2));
                }
            }
        }
        rows.push(CheckRow::new(
            format!("{total} (channel, rate) pairs"),
            "lb2 <= lb3 <= min(ub) + tol",
            if bad.is_empty() { format!("worst margin {worst:.5}") } else { format!("violations: {}", bad.join(", ")) },
            format!("{GRID_TOL}"),
            bad.is_empty(),
        ));
        Ok(rows)
    })
}

/// Every stochastic routine run under 1 and 4 worker threads.
pub fn determinism() -> Result<Criterion> {
    timed(10, "determinism across thread counts", f64::INFINITY, || {
        let ch = build_additive_mod_m(3, 0.1)?;
        let pool = |n: usize| rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| crate::Error::Invalid(e.to_string()));
        let run = |n: usize| -> Result<String> {
            pool(n)?.install(|| {
                let sim = run_scheme(&ch, &renewal_config(), 20_000, 5)?;
                let d = ConfirmationDesign::repetition(User::One, 0, 1, vec![0.6, 0.3, 0.1], 12, 1.0);
                let mc = crate::hypotest::monte_carlo_errors(&ch, &d, 50_000, 5)?;
                let drift: Vec<_> = run_corpus(&random_corpus(8, 5)?, DEFAULT_EPS).into_iter().collect::<Result<_>>()?;
                let mut base = renewal_config();
                base.n = 12;
                let sweep = crate::vlcsim::sweep_gamma(&ch, &base, 0.25, 2_000, 5)?;
                serde_json::to_string(&(sim, mc, drift, sweep)).map_err(|e| crate::Error::Invalid(e.to_string()))
            })
        };
        let (a, b) = (run(1)?, run(4)?);
        Ok(vec![CheckRow::new("simulate, confirm --mc, drift, sweep", "identical", if a == b { "identical" } else { "differ" }, "bitwise", a == b)])
    })
}

/// Named reproductions for the `example` subcommand.
pub fn example(name: &str) -> Result<Vec<CheckRow>> {
    match name {
        "ternary" => {
            let ch = build_additive_mod_m(3, 0.1)?;
            let mut rows = vec![
                CheckRow::close("d_lb", 2.1, d_lb(&ch).value, 1e-6),
                CheckRow::close("d_ub", 2.1, d_ub(&ch), 1e-6),
            ];
            rows.extend(two_phase_coincidence()?.rows);
            Ok(rows)
        }
        "mary" => Ok(additive_tightness()?.rows),
        "parallel" => {
            let ch = build_product(&bsc(0.1), &bsc(0.2))?;
            let (d1, c1, d2, c2) = (bsc_divergence(0.1), 1.0 - h_b(0.1), bsc_divergence(0.2), 1.0 - h_b(0.2));
            let c = ctx(&ch);
            let r = RatePair::new(0.8 * c1, 0.2 * c2);
            let want = closed_form_parallel(d1, c1, d2, c2, &r);
            let mut rows = vec![
                CheckRow::close("lower_three_phase at (0.8C1, 0.2C2)", want, c.lower_three_phase(&r).value, GRID_TOL),
                CheckRow::close("upper_three_phase at (0.8C1, 0.2C2)", want, c.upper_three_phase(&r), GRID_TOL),
            ];
            rows.extend(parallel_matching()?.rows);
            Ok(rows)
        }
        "vlentropy" => Ok(variable_length_entropy()?.rows),
        other => Err(crate::Error::Invalid(format!("unknown example '{other}' (ternary, mary, parallel, vlentropy)"))),
    }
}

pub const EXAMPLES: [&str; 4] = ["ternary", "mary", "parallel", "vlentropy"];
