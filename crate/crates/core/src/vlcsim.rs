//! Monte Carlo simulation of the two- and three-phase variable-length schemes with
//! retransmission.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{d_lb, JointConfirmationDist, ALTERNATIVES};
use crate::channel::{effective_channel, ChannelModel, ProbVector, User};
use crate::hypotest::{block_rng, llr, trivial_alternatives, wilson, ConfirmationDesign, Estimate, BLOCK, DEFAULT_SUPPORT_CAP};
use crate::infotheory::mac_mi_triple;
use crate::{Error, Result};

pub const MAX_BLOCK_LENGTH: usize = 24;
pub const MAX_MESSAGE_PAIRS: usize = 4096;
pub const DEFAULT_RETRANSMISSIONS: usize = 50;

fn default_gamma() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

fn default_cap() -> usize {
    DEFAULT_RETRANSMISSIONS
}

fn default_true() -> bool {
    true
}

fn default_user() -> User {
    User::One
}

fn default_x2() -> [usize; 2] {
    [0, 1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub n: usize,
    #[serde(default = "default_gamma")]
    pub gamma: [f64; 3],
    pub m1: usize,
    pub m2: usize,
    /// Split `M_d = m_first * m_second` of the data user's message over phases 1 and 2.
    #[serde(default)]
    pub split: Option<[usize; 2]>,
    /// User that stops data transmission after phase 1.
    #[serde(default = "default_user")]
    pub confirming_user: User,
    #[serde(default = "default_x2")]
    pub x_phase2: [usize; 2],
    /// Data user's phase-2 codebook law; uniform when absent.
    #[serde(default)]
    pub p_other: Option<Vec<f64>>,
    /// Phase-1 codebook laws; uniform when absent.
    #[serde(default)]
    pub p1: Option<Vec<f64>>,
    #[serde(default)]
    pub p2: Option<Vec<f64>>,
    /// Final-phase law; the `d_lb` optimizer when absent.
    #[serde(default)]
    pub pz: Option<JointConfirmationDist>,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub lambda_per_use: f64,
    #[serde(default)]
    pub codebook_seed: u64,
    /// Draw new codebooks for every block; otherwise one codebook from `codebook_seed`.
    #[serde(default = "default_true")]
    pub fresh_codebooks: bool,
    #[serde(default = "default_cap")]
    pub max_blocks: usize,
    /// Overrides the decoding outcome `(Θ1, Θ2)` in every block.
    #[serde(default)]
    pub forced_theta: Option<[usize; 2]>,
}

impl SchemeConfig {
    pub fn new(n: usize, gamma: [f64; 3], m1: usize, m2: usize) -> Self {
        SchemeConfig {
            n,
            gamma,
            m1,
            m2,
            split: None,
            confirming_user: User::One,
            x_phase2: [0, 1],
            p_other: None,
            p1: None,
            p2: None,
            pz: None,
            lambda: 0.0,
            lambda_per_use: 0.0,
            codebook_seed: 0,
            fresh_codebooks: true,
            max_blocks: DEFAULT_RETRANSMISSIONS,
            forced_theta: None,
        }
    }

    /// `(n1, n2, n3)` with `n2 = ⌊γ2 n⌋`, `n3 = ⌊γ3 n⌋` and the rest in phase 1.
    pub fn lengths(&self) -> [usize; 3] {
        let n2 = (self.gamma[1] * self.n as f64 + 1e-9).floor() as usize;
        let n3 = (self.gamma[2] * self.n as f64 + 1e-9).floor() as usize;
        [self.n - n2 - n3, n2, n3]
    }

    fn data_user(&self) -> User {
        self.confirming_user.other()
    }

    fn m_of(&self, u: User) -> usize {
        match u {
            User::One => self.m1,
            User::Two => self.m2,
        }
    }

    /// `[first, second]` parts of the data user's message.
    pub fn data_split(&self) -> [usize; 2] {
        self.split.unwrap_or([self.m_of(self.data_user()), 1])
    }

    pub fn validate(&self, ch: &ChannelModel) -> Result<()> {
        if self.gamma.iter().any(|&g| g < 0.0) || (self.gamma.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("phase fractions {:?} must be nonnegative and sum to 1", self.gamma)));
        }
        if self.n == 0 || self.n > MAX_BLOCK_LENGTH {
            return Err(Error::TooLarge(format!("block length {} (limit {MAX_BLOCK_LENGTH})", self.n)));
        }
        if self.m1 == 0 || self.m2 == 0 || self.m1 * self.m2 > MAX_MESSAGE_PAIRS {
            return Err(Error::TooLarge(format!("M1 M2 = {} (limit {MAX_MESSAGE_PAIRS})", self.m1 * self.m2)));
        }
        let [first, second] = self.data_split();
        if first * second != self.m_of(self.data_user()) {
            return Err(Error::Invalid(format!("split {first} x {second} != M{}", self.data_user().index() + 1)));
        }
        let [n1, n2, n3] = self.lengths();
        if n2 == 0 && second > 1 {
            return Err(Error::Invalid("phase-2 message part needs n2 > 0".into()));
        }
        if n1 == 0 && (self.m_of(self.confirming_user) > 1 || first > 1) {
            return Err(Error::Invalid("phase-1 messages need n1 > 0".into()));
        }
        if n2 + n3 == 0 {
            return Err(Error::Invalid("no confirmation phase".into()));
        }
        if self.max_blocks == 0 {
            return Err(Error::Invalid("max_blocks must be positive".into()));
        }
        if let Some(t) = self.forced_theta {
            if t.iter().any(|&v| v > 1) {
                return Err(Error::Invalid("forced_theta entries must be 0 or 1".into()));
            }
        }
        for (p, size) in [(&self.p1, ch.x1_size()), (&self.p2, ch.x2_size()), (&self.p_other, ch.size_of(self.data_user()))] {
            if let Some(p) = p {
                if p.len() != size {
                    return Err(Error::AlphabetMismatch { expected: size, got: p.len() });
                }
                ProbVector::new(p.clone())?;
            }
        }
        self.design(ch)?.validate(ch)
    }

    /// The confirmation design seen by the decoder.
    pub fn design(&self, ch: &ChannelModel) -> Result<ConfirmationDesign> {
        let [_, n2, n3] = self.lengths();
        let data = self.data_user();
        let p_other = self.p_other.clone().unwrap_or_else(|| uniform(ch.size_of(data)));
        let pz = match (&self.pz, n3) {
            (Some(pz), _) => Some(pz.clone()),
            (None, 0) => None,
            (None, _) => Some(d_lb(ch).pz),
        };
        Ok(ConfirmationDesign {
            confirming_user: self.confirming_user,
            x_phase2: self.x_phase2,
            p_other,
            pz,
            n2,
            n3,
            lambda: self.lambda,
            lambda_per_use: self.lambda_per_use,
            support_cap: DEFAULT_SUPPORT_CAP,
        })
    }

    /// Rates per use of each phase compared with the mutual information of the
    /// codebook laws; the messages are not fatal.
    pub fn rate_warnings(&self, ch: &ChannelModel) -> Vec<String> {
        let [n1, n2, _] = self.lengths();
        let p1 = self.p1.clone().unwrap_or_else(|| uniform(ch.x1_size()));
        let p2 = self.p2.clone().unwrap_or_else(|| uniform(ch.x2_size()));
        let mi = mac_mi_triple(ch, &p1, &p2);
        let [first, second] = self.data_split();
        let (r1, r2) = match self.confirming_user {
            User::One => ((self.m1 as f64).log2(), (first as f64).log2()),
            User::Two => ((first as f64).log2(), (self.m2 as f64).log2()),
        };
        let mut w = Vec::new();
        if n1 > 0 {
            let (a, b) = (r1 / n1 as f64, r2 / n1 as f64);
            if a > mi.i1 || b > mi.i2 || a + b > mi.i3 {
                w.push(format!(
                    "phase-1 rates ({a:.4}, {b:.4}) outside the pentagon ({:.4}, {:.4}, {:.4}) of the codebook laws",
                    mi.i1, mi.i2, mi.i3
                ));
            }
        }
        if n2 > 0 && second > 1 {
            let r = (second as f64).log2() / n2 as f64;
            let data = self.data_user();
            let p = self.p_other.clone().unwrap_or_else(|| uniform(ch.size_of(data)));
            let slice = ch.slice(data, self.x_phase2[0]);
            let c = crate::infotheory::ptp_mi(&slice, &p);
            if r > c {
                w.push(format!("phase-2 rate {r:.4} above I(X;Y|x(0)) = {c:.4}"));
            }
        }
        w
    }
}

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub trials: u64,
    pub seed: u64,
    pub lengths: [usize; 3],
    /// Per-message error probability, capped messages counted as errors.
    pub pe: Estimate,
    /// Per-block retransmission probability.
    pub q: Estimate,
    /// Per-block probability of accepting a wrong decision.
    pub peb: Estimate,
    pub blocks: u64,
    pub mean_blocks: f64,
    pub mean_blocks_se: f64,
    pub mean_t: f64,
    #[serde(with = "crate::num")]
    pub exponent: f64,
    /// Exponent at the Wilson upper limit of `pe`.
    pub exponent_lower: f64,
    /// `pe (1 - q) - peb`.
    pub renewal_residual: f64,
    pub renewal_se: f64,
    /// `mean_blocks (1 - q) - 1`.
    pub blocks_residual: f64,
    pub blocks_se: f64,
    pub capped: u64,
    /// Blocks by `(Θ1, Θ2)` in the order 00, 01, 10, 11.
    pub theta_counts: [u64; 4],
    pub warnings: Vec<String>,
}

impl SimResult {
    pub fn renewal_holds(&self, k: f64) -> bool {
        self.renewal_residual.abs() <= k * self.renewal_se + 1e-12
    }

    pub fn blocks_identity_holds(&self, k: f64) -> bool {
        self.blocks_residual.abs() <= k * self.blocks_se + 1e-12
    }
}

/// Symbol tables of one block's random codes.
struct Codebooks {
    /// Confirming user's phase-1 codewords.
    conf: Vec<Vec<usize>>,
    /// Data user's phase-1 and phase-2 codewords.
    data1: Vec<Vec<usize>>,
    data2: Vec<Vec<usize>>,
}

/// `m` i.i.d. codewords of length `len`; repeats are redrawn while the space allows.
fn draw_codebook(m: usize, len: usize, law: &WeightedIndex<f64>, alphabet: usize, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let distinct = (alphabet as f64).powi(len as i32) >= m as f64;
    let mut book: Vec<Vec<usize>> = Vec::with_capacity(m);
    while book.len() < m {
        let w: Vec<usize> = (0..len).map(|_| law.sample(rng)).collect();
        if distinct && book.contains(&w) {
            continue;
        }
        book.push(w);
    }
    book
}

struct Engine<'a> {
    ch: &'a ChannelModel,
    cfg: &'a SchemeConfig,
    design: ConfirmationDesign,
    lengths: [usize; 3],
    split: [usize; 2],
    m_conf: usize,
    conf: User,
    law_conf: WeightedIndex<f64>,
    law_data1: WeightedIndex<f64>,
    law_data2: WeightedIndex<f64>,
    size_conf: usize,
    size_data: usize,
    rows: Vec<WeightedIndex<f64>>,
    log_q: Vec<f64>,
    eff_llr: Vec<f64>,
    pz: Option<WeightedIndex<f64>>,
    trivial: [bool; 3],
    threshold: f64,
    fixed: Option<Codebooks>,
}

fn weighted(p: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(p.iter().map(|v| v.max(0.0))).map_err(|e| Error::InvalidDistribution(e.to_string()))
}

impl<'a> Engine<'a> {
    fn new(ch: &'a ChannelModel, cfg: &'a SchemeConfig) -> Result<Self> {
        cfg.validate(ch)?;
        let design = cfg.design(ch)?;
        let conf = cfg.confirming_user;
        let data = conf.other();
        let p_in = |u: User| -> Vec<f64> {
            let p = match u {
                User::One => &cfg.p1,
                User::Two => &cfg.p2,
            };
            p.clone().unwrap_or_else(|| uniform(ch.size_of(u)))
        };
        let eff = effective_channel(ch, conf, &design.p_other)?;
        let (r0, r1) = (&eff.rows[design.x_phase2[0]], &eff.rows[design.x_phase2[1]]);
        let eff_llr = (0..ch.y_size()).map(|y| llr(r0[y], r1[y])).collect();
        let mut rows = Vec::new();
        let mut log_q = Vec::new();
        for a in 0..ch.x1_size() {
            for b in 0..ch.x2_size() {
                rows.push(weighted(ch.row(a, b))?);
                log_q.extend(ch.row(a, b).iter().map(|&q| q.log2()));
            }
        }
        let pz = match (&design.pz, design.n3) {
            (Some(pz), n3) if n3 > 0 => Some(weighted(&pz.p)?),
            _ => None,
        };
        let mut e = Engine {
            ch,
            cfg,
            trivial: trivial_alternatives(ch, &design)?,
            threshold: design.threshold(),
            lengths: cfg.lengths(),
            split: cfg.data_split(),
            m_conf: cfg.m_of(conf),
            conf,
            law_conf: weighted(&p_in(conf))?,
            law_data1: weighted(&p_in(data))?,
            law_data2: weighted(&design.p_other)?,
            size_conf: ch.size_of(conf),
            size_data: ch.size_of(data),
            rows,
            log_q,
            eff_llr,
            pz,
            design,
            fixed: None,
        };
        if !cfg.fresh_codebooks {
            let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(cfg.codebook_seed);
            e.fixed = Some(e.codebooks(&mut rng));
        }
        Ok(e)
    }

    fn codebooks(&self, rng: &mut impl Rng) -> Codebooks {
        let [n1, n2, _] = self.lengths;
        Codebooks {
            conf: draw_codebook(self.m_conf, n1, &self.law_conf, self.size_conf, rng),
            data1: draw_codebook(self.split[0], n1, &self.law_data1, self.size_data, rng),
            data2: draw_codebook(self.split[1], n2, &self.law_data2, self.size_data, rng),
        }
    }

    /// Row index for confirming-user symbol `xc` and data-user symbol `xd`.
    fn cell(&self, xc: usize, xd: usize) -> usize {
        match self.conf {
            User::One => xc * self.ch.x2_size() + xd,
            User::Two => xd * self.ch.x2_size() + xc,
        }
    }

    fn send(&self, cell: usize, rng: &mut impl Rng) -> usize {
        self.rows[cell].sample(rng)
    }

    fn log_q(&self, cell: usize, y: usize) -> f64 {
        self.log_q[cell * self.ch.y_size() + y]
    }

    /// One block for messages `(wc, wd1, wd2)`; returns `(Θ1, Θ2, accepted)`.
    fn block(&self, books: &Codebooks, w: [usize; 3], rng: &mut impl Rng) -> (usize, usize, bool) {
        let [n1, n2, n3] = self.lengths;
        let [wc, wd1, wd2] = w;
        let ys: Vec<usize> = (0..n1).map(|t| self.send(self.cell(books.conf[wc][t], books.data1[wd1][t]), rng)).collect();
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for (a, ca) in books.conf.iter().enumerate() {
            for (b, cb) in books.data1.iter().enumerate() {
                let ll: f64 = ys.iter().enumerate().map(|(t, &y)| self.log_q(self.cell(ca[t], cb[t]), y)).sum();
                if ll > best.0 || (a, b) == (0, 0) && best.0 == f64::NEG_INFINITY {
                    best = (ll, a, b);
                }
            }
        }
        let forced = self.cfg.forced_theta.map(|[a, b]| match self.conf {
            User::One => (a, b),
            User::Two => (b, a),
        });
        let theta_c = forced.map_or(usize::from(best.1 != wc), |f| f.0);
        let x2 = self.design.x_phase2;
        let ys2: Vec<usize> = (0..n2).map(|t| self.send(self.cell(x2[theta_c], books.data2[wd2][t]), rng)).collect();
        let mut best2 = (f64::NEG_INFINITY, 0);
        for (b, cb) in books.data2.iter().enumerate() {
            let ll: f64 = ys2.iter().enumerate().map(|(t, &y)| self.log_q(self.cell(x2[0], cb[t]), y)).sum();
            if ll > best2.0 || b == 0 && best2.0 == f64::NEG_INFINITY {
                best2 = (ll, b);
            }
        }
        let theta_d = forced.map_or(usize::from(best.2 != wd1 || best2.1 != wd2), |f| f.1);
        let (t1, t2) = match self.conf {
            User::One => (theta_c, theta_d),
            User::Two => (theta_d, theta_c),
        };
        let s2: f64 = ys2.iter().map(|&y| self.eff_llr[y]).sum();
        let mut s = [0.0; 3];
        for (k, &a) in ALTERNATIVES.iter().enumerate() {
            let conf_alt = match self.conf {
                User::One => a.0,
                User::Two => a.1,
            };
            if conf_alt == 1 {
                s[k] = s2;
            }
        }
        if let (Some(pzd), Some(pz)) = (&self.pz, &self.design.pz) {
            let nx2 = self.ch.x2_size();
            for _ in 0..n3 {
                let z = pz.decode(pzd.sample(rng));
                let y = self.send(z[2 * t1] * nx2 + z[1 + 2 * t2], rng);
                let base = self.ch.row(z[0], z[1])[y];
                for (k, &a) in ALTERNATIVES.iter().enumerate() {
                    let v = llr(base, self.ch.row(z[2 * a.0], z[1 + 2 * a.1])[y]);
                    s[k] = if s[k] == f64::NEG_INFINITY || v == f64::NEG_INFINITY { f64::NEG_INFINITY } else { s[k] + v };
                }
            }
        }
        let accept = (0..3).all(|k| self.trivial[k] || s[k] >= self.threshold);
        (t1, t2, accept)
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    errors: u64,
    blocks: u64,
    retransmit: u64,
    wrong_accept: u64,
    capped: u64,
    blocks_sq: u64,
    theta: [u64; 4],
}

impl Tally {
    fn add(mut self, o: Tally) -> Tally {
        self.errors += o.errors;
        self.blocks += o.blocks;
        self.retransmit += o.retransmit;
        self.wrong_accept += o.wrong_accept;
        self.capped += o.capped;
        self.blocks_sq += o.blocks_sq;
        for k in 0..4 {
            self.theta[k] += o.theta[k];
        }
        self
    }
}

/// Simulates `trials` messages; bit-identical for fixed `(cfg, trials, seed)` whatever
/// the thread count.
pub fn run_scheme(ch: &ChannelModel, cfg: &SchemeConfig, trials: u64, seed: u64) -> Result<SimResult> {
    if trials == 0 {
        return Err(Error::Invalid("trials must be positive".into()));
    }
    let engine = Engine::new(ch, cfg)?;
    let chunks = trials.div_ceil(BLOCK);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b);
            let len = BLOCK.min(trials - b * BLOCK);
            let mut t = Tally::default();
            for _ in 0..len {
                let wc = rng.gen_range(0..engine.m_conf);
                let wd1 = rng.gen_range(0..engine.split[0]);
                let wd2 = rng.gen_range(0..engine.split[1]);
                let mut used = 0u64;
                let mut done = false;
                while !done && (used as usize) < cfg.max_blocks {
                    let fresh;
                    let books = match &engine.fixed {
                        Some(b) => b,
                        None => {
                            fresh = engine.codebooks(&mut rng);
                            &fresh
                        }
                    };
                    let (t1, t2, accept) = engine.block(books, [wc, wd1, wd2], &mut rng);
                    used += 1;
                    t.theta[2 * t1 + t2] += 1;
                    if accept {
                        done = true;
                        if (t1, t2) != (0, 0) {
                            t.wrong_accept += 1;
                            t.errors += 1;
                        }
                    } else {
                        t.retransmit += 1;
                    }
                }
                if !done {
                    t.capped += 1;
                    t.errors += 1;
                }
                t.blocks += used;
                t.blocks_sq += used * used;
            }
            t
        })
        .reduce(Tally::default, Tally::add);
    Ok(summarize(ch, cfg, &engine, tally, trials, seed))
}

fn summarize(ch: &ChannelModel, cfg: &SchemeConfig, engine: &Engine, t: Tally, trials: u64, seed: u64) -> SimResult {
    let pe = Estimate::new(t.errors, trials);
    let q = Estimate::new(t.retransmit, t.blocks);
    let peb = Estimate::new(t.wrong_accept, t.blocks);
    let nt = trials as f64;
    let mean_blocks = t.blocks as f64 / nt;
    let var_blocks = (t.blocks_sq as f64 / nt - mean_blocks * mean_blocks).max(0.0);
    let mean_blocks_se = (var_blocks / nt).sqrt();
    let mean_t = mean_blocks * cfg.n as f64;
    let exponent = -pe.value.log2() / mean_t;
    let (_, pe_hi) = wilson(t.errors, trials);
    let exponent_lower = -pe_hi.log2() / mean_t;
    let one_q = 1.0 - q.value;
    let renewal_residual = pe.value * one_q - peb.value;
    let renewal_se = ((one_q * pe.std_err()).powi(2) + (pe.value * q.std_err()).powi(2) + peb.std_err().powi(2)).sqrt();
    let blocks_residual = mean_blocks * one_q - 1.0;
    let blocks_se = ((one_q * mean_blocks_se).powi(2) + (mean_blocks * q.std_err()).powi(2)).sqrt();
    SimResult {
        trials,
        seed,
        lengths: engine.lengths,
        pe,
        q,
        peb,
        blocks: t.blocks,
        mean_blocks,
        mean_blocks_se,
        mean_t,
        exponent,
        exponent_lower,
        renewal_residual,
        renewal_se,
        blocks_residual,
        blocks_se,
        capped: t.capped,
        theta_counts: t.theta,
        warnings: cfg.rate_warnings(ch),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: [f64; 3],
    pub lengths: [usize; 3],
    pub pe: f64,
    pub q: f64,
    pub mean_t: f64,
    #[serde(with = "crate::num")]
    pub exponent: f64,
    pub exponent_lower: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Grid points rejected by configuration checks, with the reason.
    pub skipped: Vec<([f64; 3], String)>,
}

impl SweepTable {
    /// Row with the largest `exponent_lower`.
    pub fn best(&self) -> Option<&SweepRow> {
        self.rows.iter().max_by(|a, b| a.exponent_lower.total_cmp(&b.exponent_lower))
    }

    pub fn to_csv(&self) -> String {
        use crate::num::csv;
        let mut s = String::from("gamma1,gamma2,gamma3,n1,n2,n3,pe,q,mean_t,exponent,exponent_lower\n");
        for r in &self.rows {
            s += &format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                csv(r.gamma[0]),
                csv(r.gamma[1]),
                csv(r.gamma[2]),
                r.lengths[0],
                r.lengths[1],
                r.lengths[2],
                csv(r.pe),
                csv(r.q),
                csv(r.mean_t),
                csv(r.exponent),
                csv(r.exponent_lower)
            );
        }
        s
    }
}

/// Simplex grid `γ_i = k_i step`. Rows with `γ2 = 0` carry the whole data message in
/// phase 1; other rows use the split of `base`. Every row reuses `seed`.
pub fn sweep_gamma(ch: &ChannelModel, base: &SchemeConfig, step: f64, trials: u64, seed: u64) -> Result<SweepTable> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::Invalid(format!("grid step {step} outside (0, 1]")));
    }
    let k = (1.0 / step).round() as usize;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for a in 0..=k {
        for b in 0..=k - a {
            let gamma = [(k - a - b) as f64 / k as f64, a as f64 / k as f64, b as f64 / k as f64];
            let mut cfg = base.clone();
            cfg.gamma = gamma;
            if a == 0 {
                cfg.split = None;
            }
            match run_scheme(ch, &cfg, trials, seed) {
                Ok(r) => rows.push(SweepRow {
                    gamma,
                    lengths: r.lengths,
                    pe: r.pe.value,
                    q: r.q.value,
                    mean_t: r.mean_t,
                    exponent: r.exponent,
                    exponent_lower: r.exponent_lower,
                }),
                Err(e) => skipped.push((gamma, e.to_string())),
            }
        }
    }
    Ok(SweepTable { rows, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::build_additive_mod_m;

    #[test]
    fn lengths_floor_with_remainder_to_phase_one() {
        let cfg = SchemeConfig::new(18, [0.6, 0.2, 0.2], 8, 8);
        assert_eq!(cfg.lengths(), [12, 3, 3]);
        let cfg = SchemeConfig::new(10, [0.5, 0.25, 0.25], 2, 2);
        assert_eq!(cfg.lengths(), [6, 2, 2]);
    }

    #[test]
    fn config_checks() {
        let ch = build_additive_mod_m(3, 0.1).unwrap();
        let mut cfg = SchemeConfig::new(18, [0.6, 0.2, 0.2], 8, 8);
        cfg.split = Some([4, 2]);
        assert!(cfg.validate(&ch).is_ok());
        cfg.split = Some([3, 2]);
        assert!(cfg.validate(&ch).is_err());
        cfg.split = None;
        cfg.gamma = [0.6, 0.2, 0.1];
        assert!(cfg.validate(&ch).is_err());
        let cfg = SchemeConfig::new(30, [0.6, 0.2, 0.2], 8, 8);
        assert!(matches!(cfg.validate(&ch), Err(Error::TooLarge(_))));
    }

    #[test]
    fn distinct_codewords_when_space_allows() {
        let law = WeightedIndex::new([0.5, 0.5]).unwrap();
        let mut rng = block_rng(1, 0);
        let book = draw_codebook(8, 3, &law, 2, &mut rng);
        let mut sorted = book.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 8);
    }
}
