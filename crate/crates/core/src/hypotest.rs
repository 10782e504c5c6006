//! Exact and Monte Carlo error probabilities of the two-part confirmation test.
//!
//! The confirming user repeats `x(0)` (message correct) or `x(1)` during the hybrid
//! phase while the other user keeps sending data; in the final phase both users send
//! the symbols of a shared quadruple sequence drawn from `pz`. For each alternative
//! `a ≠ 00` the receiver forms the log-likelihood ratio `S_a` of the transcript
//! under `00` versus `a` and accepts iff every `S_a ≥ λ`.

use std::collections::HashMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{JointConfirmationDist, ALTERNATIVES};
use crate::channel::{effective_channel, ChannelModel, ProbVector, User};
use crate::{Error, Result};

/// Lattice step for LLR values, in bits.
pub const LATTICE_BITS: i32 = 20;
/// Largest support the convolution keeps before giving up.
pub const DEFAULT_SUPPORT_CAP: usize = 10_000_000;

const NEG_INF_KEY: i64 = i64::MIN;
const POS_INF_KEY: i64 = i64::MAX;

fn default_cap() -> usize {
    DEFAULT_SUPPORT_CAP
}

/// Hypothesis label `(a1, a2)`; `(0, 0)` is "both messages decoded correctly".
pub type Hypothesis = (usize, usize);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfirmationDesign {
    /// User that repeats its confirmation symbol during the hybrid phase.
    pub confirming_user: User,
    pub x_phase2: [usize; 2],
    pub p_other: Vec<f64>,
    #[serde(default)]
    pub pz: Option<JointConfirmationDist>,
    pub n2: usize,
    pub n3: usize,
    /// Threshold in bits; the effective threshold is `lambda + lambda_per_use * (n2 + n3)`.
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub lambda_per_use: f64,
    #[serde(default = "default_cap")]
    pub support_cap: usize,
}

impl ConfirmationDesign {
    /// Repetition design for `user` with no final phase.
    pub fn repetition(user: User, x0: usize, x1: usize, p_other: Vec<f64>, n: usize, lambda: f64) -> Self {
        ConfirmationDesign {
            confirming_user: user,
            x_phase2: [x0, x1],
            p_other,
            pz: None,
            n2: n,
            n3: 0,
            lambda,
            lambda_per_use: 0.0,
            support_cap: DEFAULT_SUPPORT_CAP,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.lambda + self.lambda_per_use * (self.n2 + self.n3) as f64
    }

    /// Same phase proportions scaled to `n` channel uses.
    pub fn with_length(&self, n: usize) -> Self {
        let total = (self.n2 + self.n3).max(1);
        let n2 = (self.n2 as f64 * n as f64 / total as f64).round() as usize;
        let n2 = n2.min(n);
        ConfirmationDesign { n2, n3: n - n2, ..self.clone() }
    }

    pub fn validate(&self, ch: &ChannelModel) -> Result<()> {
        if self.n2 + self.n3 == 0 {
            return Err(Error::Invalid("n2 and n3 are both zero".into()));
        }
        let c = self.confirming_user;
        for &x in &self.x_phase2 {
            if x >= ch.size_of(c) {
                return Err(Error::AlphabetMismatch { expected: ch.size_of(c), got: x + 1 });
            }
        }
        if self.p_other.len() != ch.size_of(c.other()) {
            return Err(Error::AlphabetMismatch { expected: ch.size_of(c.other()), got: self.p_other.len() });
        }
        ProbVector::new(self.p_other.clone())?;
        if self.n3 > 0 {
            let pz = self.pz.as_ref().ok_or_else(|| Error::Invalid("n3 > 0 needs pz".into()))?;
            if pz.x1_size != ch.x1_size() || pz.x2_size != ch.x2_size() {
                return Err(Error::Shape("pz alphabet does not match channel".into()));
            }
            pz.validate()?;
        }
        Ok(())
    }

    fn uses_phase2(&self, alt: Hypothesis) -> bool {
        match self.confirming_user {
            User::One => alt.0 == 1,
            User::Two => alt.1 == 1,
        }
    }
}

/// Distribution of one per-symbol LLR increment, values in bits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LlrDistribution {
    pub support: Vec<f64>,
    pub prob: Vec<f64>,
}

impl LlrDistribution {
    fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut v: Vec<(f64, f64)> = pairs.into_iter().filter(|p| p.1 > 0.0).collect();
        v.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut support: Vec<f64> = Vec::new();
        let mut prob: Vec<f64> = Vec::new();
        for (s, p) in v {
            match support.last() {
                Some(&last) if last == s || (last - s).abs() < 1e-12 => *prob.last_mut().unwrap() += p,
                _ => {
                    support.push(s);
                    prob.push(p);
                }
            }
        }
        LlrDistribution { support, prob }
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.prob).map(|(s, p)| s * p).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.support.iter().all(|&s| s == 0.0)
    }
}

pub(crate) fn llr(p0: f64, pa: f64) -> f64 {
    if p0 == pa {
        0.0
    } else if pa == 0.0 {
        f64::INFINITY
    } else if p0 == 0.0 {
        f64::NEG_INFINITY
    } else {
        (p0 / pa).log2()
    }
}

/// Per-symbol LLR of the hybrid phase (`phase = 2`) or the final phase (`phase = 3`)
/// for statistic `alt` when the transmitted hypothesis is `truth`.
pub fn llr_per_symbol(
    ch: &ChannelModel,
    design: &ConfirmationDesign,
    phase: u8,
    truth: Hypothesis,
    alt: Hypothesis,
) -> Result<LlrDistribution> {
    match phase {
        2 => {
            let c = design.confirming_user;
            let eff = effective_channel(ch, c, &design.p_other)?;
            let r0 = &eff.rows[design.x_phase2[0]];
            let r1 = &eff.rows[design.x_phase2[1]];
            let sent = match c {
                User::One => truth.0,
                User::Two => truth.1,
            };
            let law = &eff.rows[design.x_phase2[sent]];
            if !design.uses_phase2(alt) {
                return Ok(LlrDistribution { support: vec![0.0], prob: vec![1.0] });
            }
            if r0.iter().zip(r1).all(|(a, b)| (a - b).abs() < 1e-15) {
                return Err(Error::DegenerateTest);
            }
            Ok(LlrDistribution::from_pairs((0..ch.y_size()).map(|y| (llr(r0[y], r1[y]), law[y]))))
        }
        3 => {
            let pz = design.pz.as_ref().ok_or_else(|| Error::Invalid("phase 3 needs pz".into()))?;
            let mut pairs = Vec::new();
            for (k, &w) in pz.p.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                let z = pz.decode(k);
                let pick = |h: Hypothesis| ch.row(z[2 * h.0], z[1 + 2 * h.1]);
                let (r0, ra, law) = (pick((0, 0)), pick(alt), pick(truth));
                for y in 0..ch.y_size() {
                    pairs.push((llr(r0[y], ra[y]), w * law[y]));
                }
            }
            Ok(LlrDistribution::from_pairs(pairs))
        }
        _ => Err(Error::Invalid(format!("phase must be 2 or 3, got {phase}"))),
    }
}

fn key(v: f64) -> i64 {
    if v == f64::INFINITY {
        POS_INF_KEY
    } else if v == f64::NEG_INFINITY {
        NEG_INF_KEY
    } else {
        (v * (1u64 << LATTICE_BITS) as f64).round() as i64
    }
}

/// Adds lattice keys. An impossible-under-`00` output (`-inf`) dominates.
fn add_keys(a: i64, b: i64) -> i64 {
    if a == NEG_INF_KEY || b == NEG_INF_KEY {
        NEG_INF_KEY
    } else if a == POS_INF_KEY || b == POS_INF_KEY {
        POS_INF_KEY
    } else {
        a + b
    }
}

/// Sparse law of a sum of lattice LLRs.
#[derive(Clone, Debug)]
struct LatticeLaw(HashMap<i64, f64>);

impl LatticeLaw {
    fn zero() -> Self {
        LatticeLaw(HashMap::from([(0, 1.0)]))
    }

    fn convolve(&self, step: &[(i64, f64)], cap: usize) -> Result<Self> {
        let mut out: HashMap<i64, f64> = HashMap::with_capacity(self.0.len() * 2);
        for (&k, &p) in &self.0 {
            for &(s, q) in step {
                *out.entry(add_keys(k, s)).or_insert(0.0) += p * q;
            }
        }
        if out.len() > cap {
            return Err(Error::SupportOverflow(out.len()));
        }
        Ok(LatticeLaw(out))
    }

    fn power(step: &LlrDistribution, n: usize, cap: usize) -> Result<Self> {
        let s: Vec<(i64, f64)> = step.support.iter().zip(&step.prob).map(|(&v, &p)| (key(v), p)).collect();
        let mut law = LatticeLaw::zero();
        for _ in 0..n {
            law = law.convolve(&s, cap)?;
        }
        Ok(law)
    }

    /// `P(S ≥ λ)` for the combined law of two independent sums.
    fn tail_of_sum(a: &LatticeLaw, b: &LatticeLaw, lambda: f64) -> f64 {
        let thr = lambda * (1u64 << LATTICE_BITS) as f64;
        let mut bs: Vec<(i64, f64)> = b.0.iter().map(|(&k, &p)| (k, p)).collect();
        bs.sort_by_key(|e| e.0);
        let mut total = 0.0;
        for (&ka, &pa) in &a.0 {
            for &(kb, pb) in &bs {
                let k = add_keys(ka, kb);
                let ok = match k {
                    NEG_INF_KEY => false,
                    POS_INF_KEY => true,
                    _ => k as f64 >= thr - 1e-6,
                };
                if ok {
                    total += pa * pb;
                }
            }
        }
        total.min(1.0)
    }
}

/// Per-alternative exact quantities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlternativeErrors {
    pub alt: [usize; 2],
    /// `P_a(S_a ≥ λ)`.
    pub beta: f64,
    /// `P_00(S_a < λ)`.
    pub alpha: f64,
    /// True when the transcript law under `a` equals the law under `00`.
    pub indistinguishable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactErrors {
    pub n2: usize,
    pub n3: usize,
    pub lambda: f64,
    /// Union bound over the distinct nontrivial statistics, capped at 1.
    pub alpha: f64,
    /// Largest single-statistic rejection probability; `alpha_max ≤ P(reject) ≤ alpha`.
    pub alpha_max: f64,
    /// Largest `β_a` over distinguishable alternatives.
    pub beta: f64,
    pub alternatives: Vec<AlternativeErrors>,
    /// Bound on the LLR rounding error of any transcript, in bits.
    pub rounding_bits: f64,
}

fn statistic(ch: &ChannelModel, d: &ConfirmationDesign, truth: Hypothesis, alt: Hypothesis) -> Result<[LlrDistribution; 2]> {
    let zero = LlrDistribution { support: vec![0.0], prob: vec![1.0] };
    let s2 = if d.n2 > 0 && d.uses_phase2(alt) { llr_per_symbol(ch, d, 2, truth, alt)? } else { zero.clone() };
    let s3 = if d.n3 > 0 { llr_per_symbol(ch, d, 3, truth, alt)? } else { zero };
    Ok([s2, s3])
}

/// Alternatives whose statistic is identically zero under `(0, 0)`; they take no part
/// in the acceptance test. A hybrid phase that cannot separate the two confirmation
/// symbols counts as zero.
pub fn trivial_alternatives(ch: &ChannelModel, design: &ConfirmationDesign) -> Result<[bool; 3]> {
    design.validate(ch)?;
    let mut t = [false; 3];
    for (k, &a) in ALTERNATIVES.iter().enumerate() {
        let zero2 = match llr_per_symbol(ch, design, 2, (0, 0), a) {
            Ok(d) => d.is_zero(),
            Err(Error::DegenerateTest) => true,
            Err(e) => return Err(e),
        };
        let zero3 = design.n3 == 0 || llr_per_symbol(ch, design, 3, (0, 0), a)?.is_zero();
        t[k] = (design.n2 == 0 || zero2) && zero3;
    }
    Ok(t)
}

/// The statistic for `alt` as a function of the transcript: equal signatures mean the
/// same random variable, not merely the same law.
fn signature(ch: &ChannelModel, d: &ConfirmationDesign, alt: Hypothesis) -> Vec<f64> {
    let mut sig = vec![if d.n2 > 0 && d.uses_phase2(alt) { 1.0 } else { 0.0 }];
    if let (Some(pz), true) = (&d.pz, d.n3 > 0) {
        for (k, &w) in pz.p.iter().enumerate() {
            if w > 0.0 {
                let z = pz.decode(k);
                let (r0, ra) = (ch.row(z[0], z[1]), ch.row(z[2 * alt.0], z[1 + 2 * alt.1]));
                sig.extend((0..ch.y_size()).map(|y| llr(r0[y], ra[y])));
            }
        }
    }
    sig
}

/// Exact errors by convolution of lattice LLRs.
pub fn exact_errors(ch: &ChannelModel, design: &ConfirmationDesign) -> Result<ExactErrors> {
    design.validate(ch)?;
    let lambda = design.threshold();
    let cap = design.support_cap;
    let mut alts = Vec::new();
    let mut seen: Vec<Vec<f64>> = Vec::new();
    let mut alpha_sum = 0.0;
    let mut alpha_max: f64 = 0.0;
    for &a in &ALTERNATIVES {
        let under_a = statistic(ch, design, a, a)?;
        let under_0 = statistic(ch, design, (0, 0), a)?;
        let trivial = (design.n2 == 0 || under_0[0].is_zero()) && (design.n3 == 0 || under_0[1].is_zero());
        let same_law = trivial || {
            let p2 = design.n2 == 0 || under_a[0] == under_0[0];
            let p3 = design.n3 == 0 || under_a[1] == under_0[1];
            p2 && p3
        };
        let pow = |d: &LlrDistribution, n: usize| LatticeLaw::power(d, n, cap);
        let beta = LatticeLaw::tail_of_sum(&pow(&under_a[0], design.n2)?, &pow(&under_a[1], design.n3)?, lambda);
        let (alpha, distinct) = if trivial {
            (if lambda <= 0.0 { 0.0 } else { 1.0 }, false)
        } else {
            let acc = LatticeLaw::tail_of_sum(&pow(&under_0[0], design.n2)?, &pow(&under_0[1], design.n3)?, lambda);
            let sig = signature(ch, design, a);
            let distinct = !seen.contains(&sig);
            seen.push(sig);
            (1.0 - acc, distinct)
        };
        if !trivial {
            if distinct {
                alpha_sum += alpha;
            }
            alpha_max = alpha_max.max(alpha);
        }
        alts.push(AlternativeErrors { alt: [a.0, a.1], beta, alpha, indistinguishable: same_law });
    }
    let beta = alts.iter().filter(|a| !a.indistinguishable).map(|a| a.beta).fold(0.0, f64::max);
    if alts.iter().all(|a| a.indistinguishable) {
        return Err(Error::DegenerateTest);
    }
    Ok(ExactErrors {
        n2: design.n2,
        n3: design.n3,
        lambda,
        alpha: alpha_sum.min(1.0),
        alpha_max,
        beta,
        alternatives: alts,
        rounding_bits: (design.n2 + design.n3) as f64 * 2f64.powi(-LATTICE_BITS - 1),
    })
}

/// Membership in the decomposed region: the normalized phase averages `s2 / n2` and
/// `s3 / n3`, weighted by the phase fractions, reach `λ / (n2 + n3)`.
pub fn in_decomposed_region(s2: f64, s3: f64, n2: usize, n3: usize, lambda: f64) -> bool {
    let n = (n2 + n3) as f64;
    let (g2, g3) = (n2 as f64 / n, n3 as f64 / n);
    let a = if n2 > 0 { s2 / n2 as f64 } else { 0.0 };
    let b = if n3 > 0 { s3 / n3 as f64 } else { 0.0 };
    g2 * a + g3 * b >= lambda / n - 1e-12
}

/// 95% Wilson score interval.
pub fn wilson(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let den = 1.0 + z * z / n;
    let mid = (p + z * z / (2.0 * n)) / den;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / den;
    ((mid - half).max(0.0), (mid + half).min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    pub trials: u64,
}

impl Estimate {
    pub fn new(count: u64, trials: u64) -> Self {
        let (lo, hi) = wilson(count, trials);
        Estimate { value: count as f64 / trials.max(1) as f64, lo, hi, count, trials }
    }

    pub fn std_err(&self) -> f64 {
        let n = self.trials.max(1) as f64;
        (self.value * (1.0 - self.value) / n).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloErrors {
    pub n2: usize,
    pub n3: usize,
    pub lambda: f64,
    /// `P_00(some S_a < λ)`, the actual rejection event.
    pub alpha: Estimate,
    /// `P_a(S_a ≥ λ)` per alternative, in the order `01`, `10`, `11`.
    pub beta: Vec<Estimate>,
    pub seed: u64,
}

/// Trials per independently seeded block.
pub const BLOCK: u64 = 4096;

/// Seeded generator for block `b` of a run; identical regardless of scheduling.
pub fn block_rng(seed: u64, b: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b);
    rng
}

struct Sampler {
    eff: Vec<WeightedIndex<f64>>,
    eff_llr: Vec<Vec<f64>>,
    rows: Vec<WeightedIndex<f64>>,
    pz: Option<WeightedIndex<f64>>,
}

fn weighted(p: &[f64]) -> WeightedIndex<f64> {
    WeightedIndex::new(p.iter().map(|v| v.max(0.0))).expect("nonzero row")
}

impl Sampler {
    fn new(ch: &ChannelModel, d: &ConfirmationDesign) -> Result<Self> {
        let eff = effective_channel(ch, d.confirming_user, &d.p_other)?;
        let r0 = &eff.rows[d.x_phase2[0]];
        let r1 = &eff.rows[d.x_phase2[1]];
        let eff_llr = vec![(0..ch.y_size()).map(|y| llr(r0[y], r1[y])).collect()];
        let eff_s = d.x_phase2.iter().map(|&x| weighted(&eff.rows[x])).collect();
        let rows = (0..ch.x1_size())
            .flat_map(|a| (0..ch.x2_size()).map(move |b| (a, b)))
            .map(|(a, b)| weighted(ch.row(a, b)))
            .collect();
        let pz = match (&d.pz, d.n3) {
            (Some(pz), n3) if n3 > 0 => Some(weighted(&pz.p)),
            _ => None,
        };
        Ok(Sampler { eff: eff_s, eff_llr, rows, pz })
    }

    /// Statistics `S_a` for all three alternatives on one transcript under `truth`.
    fn run(&self, ch: &ChannelModel, d: &ConfirmationDesign, truth: Hypothesis, rng: &mut impl Rng) -> [f64; 3] {
        let sent = match d.confirming_user {
            User::One => truth.0,
            User::Two => truth.1,
        };
        let mut s2 = 0.0;
        for _ in 0..d.n2 {
            let y = self.eff[sent].sample(rng);
            s2 += self.eff_llr[0][y];
        }
        let mut s = [0.0; 3];
        for (k, &a) in ALTERNATIVES.iter().enumerate() {
            if d.uses_phase2(a) {
                s[k] = s2;
            }
        }
        if let (Some(pzd), Some(pz)) = (&self.pz, &d.pz) {
            let n2s = ch.x2_size();
            for _ in 0..d.n3 {
                let z = pz.decode(pzd.sample(rng));
                let cell = |h: Hypothesis| z[2 * h.0] * n2s + z[1 + 2 * h.1];
                let y = self.rows[cell(truth)].sample(rng);
                let base = ch.row(z[0], z[1])[y];
                for (k, &a) in ALTERNATIVES.iter().enumerate() {
                    let ra = ch.row(z[2 * a.0], z[1 + 2 * a.1])[y];
                    s[k] = combine(s[k], llr(base, ra));
                }
            }
        }
        s
    }
}

fn combine(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        a + b
    }
}

/// Monte Carlo estimates; deterministic in `(seed, trials)` whatever the thread count.
pub fn monte_carlo_errors(ch: &ChannelModel, design: &ConfirmationDesign, trials: u64, seed: u64) -> Result<MonteCarloErrors> {
    design.validate(ch)?;
    let lambda = design.threshold();
    let sampler = Sampler::new(ch, design)?;
    let trivial: Vec<bool> = ALTERNATIVES
        .iter()
        .map(|&a| statistic(ch, design, (0, 0), a).map(|s| (design.n2 == 0 || s[0].is_zero()) && (design.n3 == 0 || s[1].is_zero())))
        .collect::<Result<_>>()?;
    let blocks = trials.div_ceil(BLOCK);
    let counts: Vec<[u64; 4]> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b);
            let len = BLOCK.min(trials - b * BLOCK);
            let mut c = [0u64; 4];
            for _ in 0..len {
                let s = sampler.run(ch, design, (0, 0), &mut rng);
                if (0..3).any(|k| !trivial[k] && s[k] < lambda) {
                    c[0] += 1;
                }
                for (k, &a) in ALTERNATIVES.iter().enumerate() {
                    let s = sampler.run(ch, design, a, &mut rng);
                    if s[k] >= lambda {
                        c[1 + k] += 1;
                    }
                }
            }
            c
        })
        .collect();
    let mut tot = [0u64; 4];
    for c in counts {
        for k in 0..4 {
            tot[k] += c[k];
        }
    }
    Ok(MonteCarloErrors {
        n2: design.n2,
        n3: design.n3,
        lambda,
        alpha: Estimate::new(tot[0], trials),
        beta: (1..4).map(|k| Estimate::new(tot[k], trials)).collect(),
        seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
}

/// Least-squares slope of `-log2 β(n)` against `n`.
pub fn exponent_slope(curve: &[CurvePoint]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = curve.iter().filter(|c| c.beta > 0.0).map(|c| (c.n as f64, -c.beta.log2())).collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(pts.len()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData(1));
    }
    Ok(sxy / sxx)
}

/// Exact error curve over the given total lengths.
pub fn exact_curve(ch: &ChannelModel, design: &ConfirmationDesign, ns: &[usize]) -> Result<Vec<CurvePoint>> {
    ns.iter()
        .map(|&n| {
            let e = exact_errors(ch, &design.with_length(n))?;
            Ok(CurvePoint { n, alpha: e.alpha, beta: e.beta })
        })
        .collect()
}

/// KL prediction for the slope: `D(Q̄(x(0)) || Q̄(x(1)))` per hybrid use and the
/// weakest `D̄_pz(00 || a)` per final-phase use, weighted by phase fractions.
pub fn kl_prediction(ch: &ChannelModel, design: &ConfirmationDesign) -> Result<f64> {
    let n = (design.n2 + design.n3) as f64;
    let mut best = f64::INFINITY;
    for &a in &ALTERNATIVES {
        let s = statistic(ch, design, (0, 0), a)?;
        let v = design.n2 as f64 / n * s[0].mean() + design.n3 as f64 / n * s[1].mean();
        if v > 0.0 {
            best = best.min(v);
        }
    }
    Ok(best)
}
