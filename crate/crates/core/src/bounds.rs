//! Reliability-function bounds at a rate pair: the slack factor `E_o`, the
//! confirmation constants `D_lb` / `D_ub`, two- and three-phase bounds, and the
//! hyperplane and polar forms.

use serde::{Deserialize, Serialize};

use crate::channel::{d_common, d_ub, kl_bits, ChannelModel, User};
use crate::infotheory::{
    lambda_simplex, ptp_capacity, GridSpec, Hyperplanes, InputGrid, MiTriple,
};
use crate::lp::max_min_simplex;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
}

impl RatePair {
    pub fn new(r1: f64, r2: f64) -> Self {
        RatePair { r1, r2 }
    }

    pub fn r3(&self) -> f64 {
        self.r1 + self.r2
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.r1, self.r2, self.r3()]
    }

    pub fn norm(&self) -> f64 {
        self.r1.hypot(self.r2)
    }

    pub fn theta(&self) -> f64 {
        self.r2.atan2(self.r1)
    }

    pub fn scaled(&self, s: f64) -> Self {
        RatePair { r1: self.r1 * s, r2: self.r2 * s }
    }
}

/// Alternatives `ab ≠ 00` in the order used throughout: `01`, `10`, `11`.
pub const ALTERNATIVES: [(usize, usize); 3] = [(0, 1), (1, 0), (1, 1)];

/// Joint law of the confirmation symbols `(Z1(0), Z2(0), Z1(1), Z2(1))`, flattened
/// with `Z2(1)` fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointConfirmationDist {
    pub x1_size: usize,
    pub x2_size: usize,
    pub p: Vec<f64>,
}

impl JointConfirmationDist {
    pub fn cells(x1: usize, x2: usize) -> usize {
        x1 * x2 * x1 * x2
    }

    pub fn index(&self, z10: usize, z20: usize, z11: usize, z21: usize) -> usize {
        ((z10 * self.x2_size + z20) * self.x1_size + z11) * self.x2_size + z21
    }

    pub fn decode(&self, k: usize) -> [usize; 4] {
        let z21 = k % self.x2_size;
        let r = k / self.x2_size;
        let z11 = r % self.x1_size;
        let r = r / self.x1_size;
        [r / self.x2_size, r % self.x2_size, z11, z21]
    }

    pub fn point_mass(x1_size: usize, x2_size: usize, z: [usize; 4]) -> Self {
        let mut d = JointConfirmationDist { x1_size, x2_size, p: vec![0.0; Self::cells(x1_size, x2_size)] };
        let k = d.index(z[0], z[1], z[2], z[3]);
        d.p[k] = 1.0;
        d
    }

    pub fn uniform(x1_size: usize, x2_size: usize) -> Self {
        let n = Self::cells(x1_size, x2_size);
        JointConfirmationDist { x1_size, x2_size, p: vec![1.0 / n as f64; n] }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.p.len() != Self::cells(self.x1_size, self.x2_size) {
            return Err(crate::Error::Shape(format!("pz has {} cells", self.p.len())));
        }
        crate::channel::ProbVector::new(self.p.clone()).map(|_| ())
    }
}

/// Per-cell divergences `D(Q(.|z1(0),z2(0)) || Q(.|z1(a),z2(b)))` for the three alternatives.
pub fn pz_coefficients(ch: &ChannelModel) -> [Vec<f64>; 3] {
    let (n1, n2) = (ch.x1_size(), ch.x2_size());
    let tmpl = JointConfirmationDist { x1_size: n1, x2_size: n2, p: vec![] };
    let cells = JointConfirmationDist::cells(n1, n2);
    let mut out = [vec![0.0; cells], vec![0.0; cells], vec![0.0; cells]];
    for k in 0..cells {
        let z = tmpl.decode(k);
        let base = ch.row(z[0], z[1]);
        for (slot, &(a, b)) in ALTERNATIVES.iter().enumerate() {
            let x1 = if a == 1 { z[2] } else { z[0] };
            let x2 = if b == 1 { z[3] } else { z[1] };
            out[slot][k] = kl_bits(base, ch.row(x1, x2));
        }
    }
    out
}

/// `D̄_{P_Z}(00 || ab)`; `a` is one of [`ALTERNATIVES`].
pub fn d_bar_pz(ch: &ChannelModel, pz: &JointConfirmationDist, a: (usize, usize)) -> f64 {
    let slot = ALTERNATIVES.iter().position(|v| *v == a).expect("alternative must differ from 00");
    let coef = &pz_coefficients(ch)[slot];
    let mut s = 0.0;
    for (c, &w) in coef.iter().zip(&pz.p) {
        if w > 0.0 {
            s += w * c;
        }
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DLb {
    #[serde(with = "crate::num")]
    pub value: f64,
    pub pz: JointConfirmationDist,
}

/// `max_{P_Z} min_{ab≠00} D̄_{P_Z}(00 || ab)` as a linear program.
pub fn d_lb(ch: &ChannelModel) -> DLb {
    let coef = pz_coefficients(ch);
    let sol = max_min_simplex(&coef, &[0.0; 3]);
    DLb { value: sol.value, pz: JointConfirmationDist { x1_size: ch.x1_size(), x2_size: ch.x2_size(), p: sol.p } }
}

fn ratio(r: f64, i: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else if i <= 0.0 {
        f64::INFINITY
    } else {
        r / i
    }
}

/// `1 - max{r1/i1, r2/i2, (r1+r2)/i3}`.
pub fn e_o(mi: &MiTriple, r: &RatePair) -> f64 {
    1.0 - ratio(r.r1, mi.i1).max(ratio(r.r2, mi.i2)).max(ratio(r.r3(), mi.i3))
}

/// Product of a divergence constant and a slack factor with `inf · 0 = 0`.
fn scale(d: f64, f: f64) -> f64 {
    if f == 0.0 || d == 0.0 {
        0.0
    } else {
        d * f
    }
}

/// `min{D1(1-R1/C1), D2(1-R2/C2)}` for two independent point-to-point channels.
pub fn closed_form_parallel(d1: f64, c1: f64, d2: f64, c2: f64, r: &RatePair) -> f64 {
    (d1 * (1.0 - r.r1 / c1)).min(d2 * (1.0 - r.r2 / c2))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundsConfig {
    pub grid: GridSpec,
    pub gamma_step: f64,
    /// Denominator of the λ-lattice for the hyperplane forms (20 = step 0.05).
    pub lambda_den: usize,
    /// Denominator of the λ-lattice behind the region boundary.
    pub region_lambda_den: usize,
}

impl BoundsConfig {
    pub fn for_channel(ch: &ChannelModel) -> Self {
        BoundsConfig { grid: GridSpec::for_channel(ch), gamma_step: 0.02, lambda_den: 20, region_lambda_den: 40 }
    }
}

/// Rate-independent quantities shared by every bound at one channel.
pub struct BoundsContext {
    pub ch: ChannelModel,
    pub cfg: BoundsConfig,
    pub grid: InputGrid,
    pub d_lb: DLb,
    pub d_ub: f64,
    /// Divergence constant of each user with the other user's symbol shared by
    /// both hypotheses.
    pub d_user: [f64; 2],
    coef: [Vec<f64>; 3],
    /// Per user `c` and symbol `x`: capacity of the other user's slice channel when
    /// user `c` repeats `x`.
    slice_cap: [Vec<f64>; 2],
    /// Per user `c` and symbol `x`: `max_{x_o} max_z D(Q(x, x_o) || Q(z, x_o))`.
    dq_vertex: [Vec<f64>; 2],
    lambdas: Vec<[f64; 3]>,
    c_lambda: Vec<f64>,
    /// `max_P Σ_{i∈S} λ_i I^i(P)` for every λ and every nonempty subset mask `S`.
    c_masked: Vec<[f64; 8]>,
}

/// Parameters attaining the three-phase lower bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreePhaseParams {
    /// User that starts confirming at the end of the data phase.
    pub early_user: User,
    pub symbol: usize,
    pub gamma2: f64,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub e_o: f64,
    pub pz: JointConfirmationDist,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThreePhase {
    pub value: f64,
    pub params: Option<ThreePhaseParams>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometric {
    #[serde(with = "crate::num")]
    pub polar: f64,
    #[serde(with = "crate::num")]
    pub lambda_form: f64,
    pub radius: f64,
    pub outside_region: bool,
}

impl BoundsContext {
    pub fn new(ch: &ChannelModel, cfg: BoundsConfig) -> Self {
        let grid = InputGrid::new(ch, cfg.grid);
        let coef = pz_coefficients(ch);
        let d_lb = {
            let sol = max_min_simplex(&coef, &[0.0; 3]);
            DLb { value: sol.value, pz: JointConfirmationDist { x1_size: ch.x1_size(), x2_size: ch.x2_size(), p: sol.p } }
        };
        let mut slice_cap = [Vec::new(), Vec::new()];
        let mut dq_vertex = [Vec::new(), Vec::new()];
        for (k, user) in [User::One, User::Two].into_iter().enumerate() {
            let other = user.other();
            for x in 0..ch.size_of(user) {
                let kernel: Vec<Vec<f64>> =
                    (0..ch.size_of(other)).map(|xo| ch.row_for(other, xo, x).to_vec()).collect();
                slice_cap[k].push(ptp_capacity(&kernel, 1e-10).map(|c| c.0).unwrap_or(0.0));
                let mut best: f64 = 0.0;
                for xo in 0..ch.size_of(other) {
                    for z in 0..ch.size_of(user) {
                        best = best.max(kl_bits(ch.row_for(user, x, xo), ch.row_for(user, z, xo)));
                    }
                }
                dq_vertex[k].push(best);
            }
        }
        let lambdas = lambda_simplex(cfg.lambda_den);
        let c_lambda = lambdas.iter().map(|l| grid.maximize(|m| m.dot(l)).value).collect();
        let c_masked = lambdas
            .iter()
            .map(|l| {
                let mut row = [0.0; 8];
                for (mask, slot) in row.iter_mut().enumerate().skip(1) {
                    let lm: [f64; 3] = std::array::from_fn(|i| if mask >> i & 1 == 1 { l[i] } else { 0.0 });
                    *slot = grid.maximize(|m| m.dot(&lm)).value;
                }
                row
            })
            .collect();
        BoundsContext {
            d_ub: d_ub(ch),
            d_user: [d_common(ch, User::One), d_common(ch, User::Two)],
            ch: ch.clone(),
            cfg,
            grid,
            d_lb,
            coef,
            slice_cap,
            dq_vertex,
            lambdas,
            c_lambda,
            c_masked,
        }
    }

    /// Capacity of the other user's channel while `user` repeats `x`.
    pub fn slice_capacity(&self, user: User, x: usize) -> f64 {
        self.slice_cap[user.index() - 1][x]
    }

    pub fn max_e_o(&self, r: &RatePair) -> (f64, MiTriple, Vec<f64>, Vec<f64>) {
        let o = self.grid.maximize(|m| e_o(m, r));
        (o.value, o.mi, o.p1, o.p2)
    }

    /// `D_lb · sup_P E_o`, unclamped.
    pub fn lower_two_phase_raw(&self, r: &RatePair) -> f64 {
        scale(self.d_lb.value, self.max_e_o(r).0)
    }

    pub fn lower_two_phase(&self, r: &RatePair) -> f64 {
        self.lower_two_phase_raw(r).max(0.0)
    }

    /// `D_ub · sup_P min_i (1 - R_i / I^i)` over stationary inputs.
    pub fn upper_two_phase_stationary(&self, r: &RatePair) -> f64 {
        scale(self.d_ub, self.max_e_o(r).0)
    }

    /// Two-phase upper bound, with the stationary input replaced by any phase
    /// schedule when that is larger.
    pub fn upper_two_phase_raw(&self, r: &RatePair) -> f64 {
        self.schedule_upper([self.d_ub; 3], r).max(self.upper_two_phase_stationary(r))
    }

    pub fn upper_two_phase(&self, r: &RatePair) -> f64 {
        self.upper_two_phase_raw(r).max(0.0)
    }

    fn three_term(&self, m: &MiTriple, r: &RatePair) -> f64 {
        let d = [self.d_user[0], self.d_user[1], self.d_ub];
        let i = m.as_array();
        let rr = r.as_array();
        (0..3).map(|k| scale(d[k], 1.0 - ratio(rr[k], i[k]))).fold(f64::INFINITY, f64::min)
    }

    /// Stationary form `sup_P min{D^1(1-R1/I1), D^2(1-R2/I2), D^3(1-R3/I3)}`, unclamped.
    pub fn upper_three_phase_stationary(&self, r: &RatePair) -> f64 {
        self.grid.maximize(|m| self.three_term(m, r)).value
    }

    /// Whether some phase schedule of inputs delivers `R_i` by time `s_i` for each
    /// `i`. Checked against every hyperplane of the λ-lattice, so the answer can be
    /// optimistic by the lattice spacing.
    fn deadlines_feasible(&self, s: [f64; 3], r: &[f64; 3]) -> bool {
        let mut order = [0usize, 1, 2];
        order.sort_by(|a, b| s[*a].total_cmp(&s[*b]));
        for (l, c) in self.lambdas.iter().zip(&self.c_masked) {
            let need: f64 = (0..3).map(|i| l[i] * r[i]).sum();
            if need <= 0.0 {
                continue;
            }
            let mut have = 0.0;
            let mut start = 0.0;
            let mut mask = 7usize;
            for &i in &order {
                let end = s[i].max(0.0);
                have += (end - start).max(0.0) * c[mask];
                start = start.max(end);
                mask &= !(1 << i);
            }
            if have < need * (1.0 - 1e-12) {
                return false;
            }
        }
        true
    }

    /// `sup min_i d_i (1 - t_i)` over phase schedules of inputs, where rate `R_i`
    /// has been delivered by time `t_i`.
    fn schedule_upper(&self, d: [f64; 3], r: &RatePair) -> f64 {
        let rr = r.as_array();
        let deadlines = |v: f64| -> [f64; 3] {
            std::array::from_fn(|i| if d[i].is_infinite() { 1.0 } else { 1.0 - v / d[i] })
        };
        let top = d.iter().cloned().fold(f64::INFINITY, f64::min);
        if top == 0.0 {
            return 0.0;
        }
        if !self.deadlines_feasible(deadlines(0.0), &rr) {
            return f64::NEG_INFINITY;
        }
        let hi_cap = if top.is_finite() { top } else { 1e6 };
        if self.deadlines_feasible(deadlines(hi_cap), &rr) {
            return top;
        }
        let (mut lo, mut hi) = (0.0, hi_cap);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.deadlines_feasible(deadlines(mid), &rr) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Three-phase upper bound over phase schedules of inputs: `D^1`, `D^2` are the
    /// per-user common divergence constants and `D^3 = D_ub`. Never below the
    /// stationary form.
    pub fn upper_three_phase_raw(&self, r: &RatePair) -> f64 {
        let d = [self.d_user[0], self.d_user[1], self.d_ub];
        self.schedule_upper(d, r).max(self.upper_three_phase_stationary(r))
    }

    pub fn upper_three_phase(&self, r: &RatePair) -> f64 {
        self.upper_three_phase_raw(r).max(0.0)
    }

    /// `min_λ D_ub (1 - Σ λ_i R_i / C_λ)` clamped to `[0, D_ub]`.
    pub fn upper_lambda_mixed(&self, r: &RatePair) -> f64 {
        scale(self.d_ub, self.lambda_slack(r)).clamp(0.0, self.d_ub)
    }

    /// `min_λ (1 - Σ λ_i R_i / C_λ)` over the configured λ-lattice.
    pub fn lambda_slack(&self, r: &RatePair) -> f64 {
        let rr = r.as_array();
        let mut best = f64::INFINITY;
        for (l, &c) in self.lambdas.iter().zip(&self.c_lambda) {
            let num = l[0] * rr[0] + l[1] * rr[1] + l[2] * rr[2];
            best = best.min(1.0 - ratio(num, c));
        }
        best
    }

    /// Polar form `D_lb (1 - |R| / C(θ_R))` together with the λ-form.
    pub fn lower_geometric(&self, r: &RatePair) -> Geometric {
        let lambda_form = scale(self.d_lb.value, self.lambda_slack(r)).max(0.0);
        if r.norm() == 0.0 {
            return Geometric { polar: self.d_lb.value, lambda_form, radius: 0.0, outside_region: false };
        }
        let planes = Hyperplanes::new(&self.grid, self.cfg.region_lambda_den);
        let s = planes.boundary(r.theta());
        let slack = 1.0 - ratio(r.norm(), s.radius);
        Geometric {
            polar: scale(self.d_lb.value, slack).max(0.0),
            lambda_form,
            radius: s.radius,
            outside_region: slack < 0.0,
        }
    }

    /// Best pz and value for one (early user, symbol, γ2) configuration.
    fn branch_value(&self, r: &RatePair, early: User, x: usize, gamma2: f64) -> Option<(f64, ThreePhaseParams)> {
        let k = early.index() - 1;
        let cap = self.slice_cap[k][x];
        let shifted = match early {
            User::One => RatePair::new(r.r1, (r.r2 - gamma2 * cap).max(0.0)),
            User::Two => RatePair::new((r.r1 - gamma2 * cap).max(0.0), r.r2),
        };
        let opt = self.grid.maximize(|m| e_o(m, &shifted));
        let e = opt.value - gamma2;
        if !(e >= 0.0) {
            return None;
        }
        let g = scale(self.dq_vertex[k][x], gamma2);
        // alternative slots: 01, 10, 11. The early user's own error picks up g,
        // as does the joint error.
        let offsets = match early {
            User::One => [0.0, g, g],
            User::Two => [g, 0.0, g],
        };
        let a: Vec<Vec<f64>> = self.coef.iter().map(|c| c.iter().map(|&v| scale(v, e)).collect()).collect();
        let sol = max_min_simplex(&a, &offsets);
        let params = ThreePhaseParams {
            early_user: early,
            symbol: x,
            gamma2,
            p1: opt.p1,
            p2: opt.p2,
            e_o: opt.value,
            pz: JointConfirmationDist { x1_size: self.ch.x1_size(), x2_size: self.ch.x2_size(), p: sol.p },
        };
        Some((sol.value, params))
    }

    /// Three-phase lower bound: maximum over the early user, its repetition symbol,
    /// γ2 on a grid with one local refinement pass, the data-phase input, and P_Z.
    pub fn lower_three_phase_raw(&self, r: &RatePair) -> ThreePhase {
        let step = self.cfg.gamma_step;
        let n = (1.0 / step).ceil() as usize;
        let mut best: ThreePhase = ThreePhase { value: f64::NEG_INFINITY, params: None };
        let consider = |v: Option<(f64, ThreePhaseParams)>, best: &mut ThreePhase| {
            if let Some((val, p)) = v {
                if val > best.value {
                    *best = ThreePhase { value: val, params: Some(p) };
                }
            }
        };
        for early in [User::One, User::Two] {
            for x in 0..self.ch.size_of(early) {
                for j in 0..n {
                    let g2 = j as f64 * step;
                    if g2 >= 1.0 {
                        break;
                    }
                    consider(self.branch_value(r, early, x, g2), &mut best);
                }
            }
        }
        if let Some(p) = best.params.clone() {
            for j in -9i32..=9 {
                let g2 = p.gamma2 + j as f64 * step / 10.0;
                if j != 0 && (0.0..1.0).contains(&g2) {
                    consider(self.branch_value(r, p.early_user, p.symbol, g2), &mut best);
                }
            }
        }
        best
    }

    pub fn lower_three_phase(&self, r: &RatePair) -> ThreePhase {
        let mut t = self.lower_three_phase_raw(r);
        t.value = t.value.max(0.0);
        t
    }

    pub fn report(&self, r: &RatePair) -> ExponentReport {
        let three = self.lower_three_phase(r);
        let geo = self.lower_geometric(r);
        ExponentReport {
            r1: r.r1,
            r2: r.r2,
            d_lb: self.d_lb.value,
            d_ub: self.d_ub,
            lb_two_phase: self.lower_two_phase(r),
            lb_three_phase: three.value,
            ub_two_phase: self.upper_two_phase(r),
            ub_three_phase: self.upper_three_phase(r),
            lb_geometric: geo.polar,
            lb_geometric_lambda: geo.lambda_form,
            ub_lambda_mixed: self.upper_lambda_mixed(r),
            outside_region: geo.outside_region,
            three_phase: three.params,
            raw: None,
        }
    }

    pub fn report_with_raw(&self, r: &RatePair) -> ExponentReport {
        let mut rep = self.report(r);
        rep.raw = Some(RawBounds {
            lb_two_phase: self.lower_two_phase_raw(r),
            lb_three_phase: self.lower_three_phase_raw(r).value,
            ub_two_phase: self.upper_two_phase_raw(r),
            ub_three_phase: self.upper_three_phase_raw(r),
        });
        rep
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawBounds {
    #[serde(with = "crate::num")]
    pub lb_two_phase: f64,
    #[serde(with = "crate::num")]
    pub lb_three_phase: f64,
    #[serde(with = "crate::num")]
    pub ub_two_phase: f64,
    #[serde(with = "crate::num")]
    pub ub_three_phase: f64,
}

/// All bounds at one rate pair, clamped at zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub r1: f64,
    pub r2: f64,
    #[serde(with = "crate::num")]
    pub d_lb: f64,
    #[serde(with = "crate::num")]
    pub d_ub: f64,
    #[serde(with = "crate::num")]
    pub lb_two_phase: f64,
    #[serde(with = "crate::num")]
    pub lb_three_phase: f64,
    #[serde(with = "crate::num")]
    pub ub_two_phase: f64,
    #[serde(with = "crate::num")]
    pub ub_three_phase: f64,
    #[serde(with = "crate::num")]
    pub lb_geometric: f64,
    #[serde(with = "crate::num")]
    pub lb_geometric_lambda: f64,
    #[serde(with = "crate::num")]
    pub ub_lambda_mixed: f64,
    pub outside_region: bool,
    pub three_phase: Option<ThreePhaseParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<RawBounds>,
}

/// Time average of per-phase values weighted by phase lengths.
pub fn phase_average(values: &[f64], lengths: &[f64]) -> f64 {
    let total: f64 = lengths.iter().sum();
    values.iter().zip(lengths).map(|(v, l)| v * l).sum::<f64>() / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bsc, bsc_divergence, build_additive_mod_m, build_product};
    use crate::infotheory::mac_mi_triple;

    #[test]
    fn e_o_examples() {
        let m = MiTriple { i1: 0.66303, i2: 0.66303, i3: 0.66303 };
        assert_eq!(e_o(&m, &RatePair::new(0.0, 0.0)), 1.0);
        assert!((e_o(&m, &RatePair::new(0.2, 0.3)) - (1.0 - 0.5 / 0.66303)).abs() < 1e-12);
        let m = MiTriple { i1: 0.5, i2: 1.0, i3: 2.0 };
        assert_eq!(e_o(&m, &RatePair::new(0.5, 0.1)), 0.0);
        let z = MiTriple { i1: 0.0, i2: 1.0, i3: 1.0 };
        assert_eq!(e_o(&z, &RatePair::new(0.1, 0.0)), f64::NEG_INFINITY);
        assert_eq!(e_o(&z, &RatePair::new(0.0, 0.1)), 0.9);
    }

    #[test]
    fn d_bar_pz_examples() {
        let ch = build_additive_mod_m(3, 0.1).unwrap();
        let zero = JointConfirmationDist::point_mass(3, 3, [0, 0, 0, 0]);
        for a in ALTERNATIVES {
            assert_eq!(d_bar_pz(&ch, &zero, a), 0.0);
        }
        let pm = JointConfirmationDist::point_mass(3, 3, [0, 0, 1, 0]);
        assert!((d_bar_pz(&ch, &pm, (1, 0)) - 2.1).abs() < 1e-12);

        let par = build_product(&bsc(0.1), &bsc(0.2)).unwrap();
        let u = JointConfirmationDist::uniform(2, 2);
        let mut brute = 0.0;
        for z10 in 0..2 {
            for z20 in 0..2 {
                for z11 in 0..2 {
                    for z21 in 0..2 {
                        brute += kl_bits(par.row(z10, z20), par.row(z11, z21)) / 16.0;
                    }
                }
            }
        }
        assert!((d_bar_pz(&par, &u, (1, 1)) - brute).abs() < 1e-12);
        let d1 = bsc_divergence(0.1);
        let d2 = bsc_divergence(0.2);
        assert!((brute - (d1 + d2) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn d_lb_certificate() {
        for ch in [
            build_additive_mod_m(3, 0.1).unwrap(),
            build_product(&bsc(0.1), &bsc(0.2)).unwrap(),
            build_additive_mod_m(4, 0.05).unwrap(),
        ] {
            let d = d_lb(&ch);
            let vals: Vec<f64> = ALTERNATIVES.iter().map(|&a| d_bar_pz(&ch, &d.pz, a)).collect();
            for v in &vals {
                assert!(*v >= d.value - 1e-8);
            }
            let tight = vals.iter().filter(|v| (**v - d.value).abs() < 1e-8).count();
            let support = d.pz.p.iter().filter(|v| **v > 1e-12).count();
            assert!(tight >= 2 || support == 1);
            assert!(d.value <= d_ub(&ch) + 1e-9);
        }
    }

    #[test]
    fn d_lb_parallel_matches_smaller_divergence() {
        let par = build_product(&bsc(0.1), &bsc(0.2)).unwrap();
        let d = d_lb(&par);
        let want = bsc_divergence(0.1).min(bsc_divergence(0.2));
        assert!((d.value - want).abs() < 1e-9, "{}", d.value);
        assert!((want - 1.2).abs() < 0.001);
        // dense search over pz supported on at most three cells
        let coef = pz_coefficients(&par);
        let mut best: f64 = 0.0;
        for a in 0..16 {
            for b in a..16 {
                for c in b..16 {
                    for i in 0..=30 {
                        for j in 0..=30 - i {
                            let w = [i as f64 / 30.0, j as f64 / 30.0, (30 - i - j) as f64 / 30.0];
                            let v = (0..3)
                                .map(|s| w[0] * coef[s][a] + w[1] * coef[s][b] + w[2] * coef[s][c])
                                .fold(f64::INFINITY, f64::min);
                            best = best.max(v);
                        }
                    }
                }
            }
        }
        assert!(best <= d.value + 1e-9 && d.value - best < 0.01);
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(closed_form_parallel(1.0, 0.5, 2.0, 0.3, &RatePair::new(0.5, 0.1)), 0.0);
        let v = closed_form_parallel(1.3, 0.4, 1.3, 0.4, &RatePair::new(0.1, 0.1));
        assert!((v - 1.3 * 0.75).abs() < 1e-12);
        let c1 = 1.0 - crate::infotheory::h_b(0.1);
        let c2 = 1.0 - crate::infotheory::h_b(0.2);
        let r = RatePair::new(0.8 * c1, 0.2 * c2);
        let v = closed_form_parallel(bsc_divergence(0.1), c1, bsc_divergence(0.2), c2, &r);
        assert!((v - 0.50718).abs() < 1e-4, "{v}");
    }

    #[test]
    fn stationary_phase_splits_do_not_move_averages() {
        // Splitting a stationary run into deterministic phases leaves the time-averaged
        // information and divergence terms, and so the three-phase upper bound, unchanged.
        let ch = build_product(&bsc(0.1), &bsc(0.25)).unwrap();
        let ctx = BoundsContext::new(&ch, BoundsConfig::for_channel(&ch));
        let m = mac_mi_triple(&ch, &[0.5, 0.5], &[0.5, 0.5]);
        let r = RatePair::new(0.2, 0.1);
        let base = ctx.three_term(&m, &r);
        for lengths in [vec![3.0, 5.0], vec![1.0, 1.0, 7.0], vec![2.0, 0.5, 0.5, 4.0]] {
            let avg = |v: f64| phase_average(&vec![v; lengths.len()], &lengths);
            let mi = MiTriple { i1: avg(m.i1), i2: avg(m.i2), i3: avg(m.i3) };
            assert!((ctx.three_term(&mi, &r) - base).abs() < 1e-12);
            assert!((avg(ctx.d_user[0]) - ctx.d_user[0]).abs() < 1e-12);
        }
    }
}
