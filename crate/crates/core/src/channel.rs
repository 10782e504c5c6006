//! Finite-alphabet multiple-access channels `Q(y | x1, x2)` and the divergence
//! constants derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ROW_TOL: f64 = 1e-9;

/// Which of the two senders an operation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum User {
    One,
    Two,
}

impl User {
    pub fn other(self) -> User {
        match self {
            User::One => User::Two,
            User::Two => User::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            User::One => 1,
            User::Two => 2,
        }
    }
}

impl TryFrom<u8> for User {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(User::One),
            2 => Ok(User::Two),
            _ => Err(format!("user must be 1 or 2, got {v}")),
        }
    }
}

impl From<User> for u8 {
    fn from(u: User) -> u8 {
        u.index() as u8
    }
}

/// Logarithm base for divergences and entropies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Base {
    Two,
    E,
}

impl Base {
    fn scale(self) -> f64 {
        match self {
            Base::Two => std::f64::consts::LOG2_E,
            Base::E => 1.0,
        }
    }
}

/// A probability vector with sum 1 within [`ROW_TOL`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        if let Some(v) = p.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidDistribution(format!("entry {v}")));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > ROW_TOL {
            return Err(Error::InvalidDistribution(format!("sum {s}")));
        }
        Ok(ProbVector(p))
    }

    pub fn point_mass(n: usize, k: usize) -> Self {
        let mut p = vec![0.0; n];
        p[k] = 1.0;
        ProbVector(p)
    }

    pub fn uniform(n: usize) -> Self {
        ProbVector(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = String;
    fn try_from(v: Vec<f64>) -> std::result::Result<Self, String> {
        ProbVector::new(v).map_err(|e| e.to_string())
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Vec<f64> {
        p.0
    }
}

impl std::ops::Deref for ProbVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Raw on-disk layout of a channel.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RawChannel {
    pub x1_size: usize,
    pub x2_size: usize,
    pub y_size: usize,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<Vec<f64>>>,
}

/// Validated channel tensor, stored flat in `[x1][x2][y]` order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChannel", into = "RawChannel")]
pub struct ChannelModel {
    x1_size: usize,
    x2_size: usize,
    y_size: usize,
    q: Vec<f64>,
}

impl TryFrom<RawChannel> for ChannelModel {
    type Error = String;
    fn try_from(raw: RawChannel) -> std::result::Result<Self, String> {
        validate_channel(&raw, false).map_err(|e| e.to_string())
    }
}

impl From<ChannelModel> for RawChannel {
    fn from(ch: ChannelModel) -> RawChannel {
        ch.to_raw()
    }
}

/// Checks shape, sign and row sums. With `renormalize`, rows that are
/// nonnegative but off by more than the tolerance are rescaled instead of rejected.
pub fn validate_channel(raw: &RawChannel, renormalize: bool) -> Result<ChannelModel> {
    let (n1, n2, ny) = (raw.x1_size, raw.x2_size, raw.y_size);
    if n1 == 0 || n2 == 0 || ny == 0 {
        return Err(Error::Shape("alphabet sizes must be positive".into()));
    }
    if raw.q.len() != n1 {
        return Err(Error::Shape(format!("Q has {} x1 entries, expected {n1}", raw.q.len())));
    }
    let mut q = Vec::with_capacity(n1 * n2 * ny);
    for (x1, plane) in raw.q.iter().enumerate() {
        if plane.len() != n2 {
            return Err(Error::Shape(format!("Q[{x1}] has {} x2 entries, expected {n2}", plane.len())));
        }
        for (x2, row) in plane.iter().enumerate() {
            if row.len() != ny {
                return Err(Error::Shape(format!("Q[{x1}][{x2}] has {} outputs, expected {ny}", row.len())));
            }
            for (y, &v) in row.iter().enumerate() {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::NegativeEntry { x1, x2, y, value: v });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOL {
                if !renormalize || sum <= 0.0 {
                    return Err(Error::NonStochasticRow { x1, x2, sum });
                }
                q.extend(row.iter().map(|v| v / sum));
            } else {
                q.extend_from_slice(row);
            }
        }
    }
    Ok(ChannelModel { x1_size: n1, x2_size: n2, y_size: ny, q })
}

impl ChannelModel {
    pub fn from_rows(x1_size: usize, x2_size: usize, y_size: usize, q: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        validate_channel(&RawChannel { x1_size, x2_size, y_size, q }, false)
    }

    pub fn x1_size(&self) -> usize {
        self.x1_size
    }

    pub fn x2_size(&self) -> usize {
        self.x2_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn size_of(&self, user: User) -> usize {
        match user {
            User::One => self.x1_size,
            User::Two => self.x2_size,
        }
    }

    #[inline]
    pub fn row(&self, x1: usize, x2: usize) -> &[f64] {
        let start = (x1 * self.x2_size + x2) * self.y_size;
        &self.q[start..start + self.y_size]
    }

    /// Row indexed by the given user's symbol `x` and the other user's symbol `xo`.
    #[inline]
    pub fn row_for(&self, user: User, x: usize, xo: usize) -> &[f64] {
        match user {
            User::One => self.row(x, xo),
            User::Two => self.row(xo, x),
        }
    }

    pub fn to_raw(&self) -> RawChannel {
        let q = (0..self.x1_size)
            .map(|a| (0..self.x2_size).map(|b| self.row(a, b).to_vec()).collect())
            .collect();
        RawChannel { x1_size: self.x1_size, x2_size: self.x2_size, y_size: self.y_size, q }
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.q.iter().all(|v| *v > 0.0)
    }

    /// `max_y max_{x, z} log2 Q(y|x) / Q(y|z)`; +inf with zero entries.
    pub fn eta(&self) -> f64 {
        let rows = self.x1_size * self.x2_size;
        let mut best: f64 = 0.0;
        for y in 0..self.y_size {
            let col = (0..rows).map(|k| self.q[k * self.y_size + y]);
            let (lo, hi) = col.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
            if lo <= 0.0 {
                return f64::INFINITY;
            }
            best = best.max((hi / lo).log2());
        }
        best
    }

    /// The point-to-point kernel seen by `user` when the other input is fixed to `xo`.
    pub fn slice(&self, user: User, xo: usize) -> Vec<Vec<f64>> {
        (0..self.size_of(user)).map(|x| self.row_for(user, x, xo).to_vec()).collect()
    }
}

/// KL divergence between two distributions given as slices, in bits.
pub fn kl_bits(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).log2();
        }
    }
    d.max(0.0)
}

/// Kullback-Leibler divergence `D(p || q)` in the requested base.
pub fn kl(p: &[f64], q: &[f64], base: Base) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(p.len(), q.len()));
    }
    let d = kl_bits(p, q);
    Ok(match base {
        Base::Two => d,
        Base::E => d / Base::Two.scale(),
    })
}

/// Largest divergence between any two channel rows.
pub fn d_ub(ch: &ChannelModel) -> f64 {
    let mut best: f64 = 0.0;
    for a1 in 0..ch.x1_size {
        for a2 in 0..ch.x2_size {
            for b1 in 0..ch.x1_size {
                for b2 in 0..ch.x2_size {
                    best = best.max(kl_bits(ch.row(a1, a2), ch.row(b1, b2)));
                }
            }
        }
    }
    best
}

/// Rows `[x][y]` of the channel seen by one user after averaging the other input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveChannel {
    pub user: User,
    pub rows: Vec<Vec<f64>>,
}

pub fn effective_channel(ch: &ChannelModel, user: User, other_input: &[f64]) -> Result<EffectiveChannel> {
    let no = ch.size_of(user.other());
    if other_input.len() != no {
        return Err(Error::AlphabetMismatch { expected: no, got: other_input.len() });
    }
    let rows = (0..ch.size_of(user)).map(|x| mix_row(ch, user, x, other_input)).collect();
    Ok(EffectiveChannel { user, rows })
}

pub(crate) fn mix_row(ch: &ChannelModel, user: User, x: usize, other: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; ch.y_size];
    for (xo, &w) in other.iter().enumerate() {
        if w > 0.0 {
            for (o, v) in out.iter_mut().zip(ch.row_for(user, x, xo)) {
                *o += w * v;
            }
        }
    }
    out
}

/// `max_z D(Q̄(x) || Q̄(z))` for the effective channel of `user`.
pub fn d_bar_j(ch: &ChannelModel, user: User, x: usize, other_input: &[f64]) -> Result<f64> {
    let eff = effective_channel(ch, user, other_input)?;
    if x >= eff.rows.len() {
        return Err(Error::AlphabetMismatch { expected: eff.rows.len(), got: x + 1 });
    }
    Ok(eff.rows.iter().map(|z| kl_bits(&eff.rows[x], z)).fold(0.0, f64::max))
}

/// `max_{x, x', x'_o} D(Q̄(x) || Q(x', x'_o))`: the second argument ranges over
/// vertices of the other user's input simplex.
pub fn d_star_upper(ch: &ChannelModel, user: User, other_input: &[f64]) -> Result<f64> {
    let eff = effective_channel(ch, user, other_input)?;
    Ok(d_star_rows(ch, user, eff.rows.iter().map(|r| r.as_slice())))
}

/// Same maximisation with one mixed row per first-argument symbol; used when the
/// other input law depends on this user's symbol.
pub fn d_star_rows<'a>(ch: &ChannelModel, user: User, rows: impl Iterator<Item = &'a [f64]>) -> f64 {
    let mut best: f64 = 0.0;
    for r in rows {
        for xp in 0..ch.size_of(user) {
            for xo in 0..ch.size_of(user.other()) {
                best = best.max(kl_bits(r, ch.row_for(user, xp, xo)));
            }
        }
    }
    best
}

/// `max_{x_o} max_{x, x'} D(Q(x, x_o) || Q(x', x_o))`: the largest divergence one user
/// can create while the other user's symbol is common to both hypotheses.
pub fn d_common(ch: &ChannelModel, user: User) -> f64 {
    let mut best: f64 = 0.0;
    for xo in 0..ch.size_of(user.other()) {
        for x in 0..ch.size_of(user) {
            for xp in 0..ch.size_of(user) {
                best = best.max(kl_bits(ch.row_for(user, x, xo), ch.row_for(user, xp, xo)));
            }
        }
    }
    best
}

/// `Y = X1 + X2 + N (mod m)` with `P(N = 0) = 1 - (m-1)p`.
pub fn build_additive_mod_m(m: usize, p: f64) -> Result<ChannelModel> {
    if m < 2 || !(0.0..=1.0 / m as f64 + 1e-15).contains(&p) {
        return Err(Error::InvalidNoise { m, p });
    }
    let hit = 1.0 - (m as f64 - 1.0) * p;
    let q = (0..m)
        .map(|a| {
            (0..m)
                .map(|b| (0..m).map(|y| if y == (a + b) % m { hit } else { p }).collect())
                .collect()
        })
        .collect();
    ChannelModel::from_rows(m, m, m, q)
}

pub fn bsc(p: f64) -> Vec<Vec<f64>> {
    vec![vec![1.0 - p, p], vec![p, 1.0 - p]]
}

/// Two independent point-to-point channels; output index is `y1 * |Y2| + y2`.
pub fn build_product(k1: &[Vec<f64>], k2: &[Vec<f64>]) -> Result<ChannelModel> {
    let ny1 = k1.first().map_or(0, |r| r.len());
    let ny2 = k2.first().map_or(0, |r| r.len());
    let q = k1
        .iter()
        .map(|r1| {
            k2.iter()
                .map(|r2| r1.iter().flat_map(|a| r2.iter().map(move |b| a * b)).collect())
                .collect()
        })
        .collect();
    ChannelModel::from_rows(k1.len(), k2.len(), ny1 * ny2, q)
}

/// Divergence constant of a binary symmetric channel, `(1-2p) log2((1-p)/p)`.
pub fn bsc_divergence(p: f64) -> f64 {
    (1.0 - 2.0 * p) * ((1.0 - p) / p).log2()
}
