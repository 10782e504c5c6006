use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::*;
use crate::channel::ChannelModel;
use crate::corpus::random_positive;
use crate::Result;

pub const DEFAULT_EPS: f64 = 0.3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftCase {
    pub label: String,
    pub channel: ChannelModel,
    pub code: TinyCode,
}

/// Random strictly positive channels (entries ≥ 0.02) with random deterministic codes:
/// `|X_i| ∈ {2,3}`, `|Y| ∈ {2,3,4}`, `m_i ∈ {2,4}`, `N ∈ 3..=6`. Shapes whose tree
/// would exceed `2^16` leaves shrink the horizon.
pub fn random_corpus(count: usize, seed: u64) -> Result<Vec<DriftCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let (x1, x2, y) = (rng.gen_range(2..=3), rng.gen_range(2..=3), rng.gen_range(2..=4));
            let ch = random_positive(x1, x2, y, 0.02, &mut rng)?;
            let m1 = [2, 4][rng.gen_range(0..2)];
            let m2 = [2, 4][rng.gen_range(0..2)];
            let mut n = rng.gen_range(3..=6);
            while (y as u64).pow(n as u32) * (m1 * m2) as u64 > 1 << 16 && n > 3 {
                n -= 1;
            }
            let code = TinyCode::random(&ch, m1, m2, n, &mut rng)?;
            Ok(DriftCase { label: format!("random:{seed}:{k}"), channel: ch, code })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub label: String,
    pub eps: f64,
    pub checks: Vec<CheckReport>,
    /// Log-drift check had no node with `0 < H̃ < ε`.
    pub log_drift_vacuous: bool,
    pub submartingale: Vec<SubmartingaleReport>,
    pub doob: Vec<DoobReport>,
}

impl DriftReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed())
            && self.submartingale.iter().all(|s| s.passed())
            && self.doob.iter().all(|d| d.holds)
    }

    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum::<usize>()
            + self.submartingale.iter().filter(|s| !s.passed()).count()
            + self.doob.iter().filter(|d| !d.holds).count()
    }
}

/// Every exact check on one trace. `H̃^i` is fed to the maximal inequality with `τ = 1`
/// and `c = ε`.
pub fn run_all_checks(label: &str, trace: &PosteriorTrace, eps: f64) -> Result<DriftReport> {
    let mut checks = vec![check_linear_drift(trace), check_eta_bound(trace)?];
    let log_drift_vacuous = match check_log_drift(trace, eps) {
        Ok(r) => {
            checks.push(r);
            false
        }
        Err(crate::Error::NoQualifyingNodes) => true,
        Err(e) => return Err(e),
    };
    checks.push(check_supermartingale(trace));
    checks.push(check_grouping(trace));
    checks.push(check_fano(trace));
    let submartingale = (0..3).map(|i| check_pruned_submartingale(trace, i, eps)).collect::<Result<Vec<_>>>()?;
    let doob = (0..3)
        .map(|i| check_doob(&TreeProcess::entropy(trace, i), 1, eps))
        .collect::<Result<Vec<_>>>()?;
    Ok(DriftReport { label: label.into(), eps, checks, log_drift_vacuous, submartingale, doob })
}

/// Enumerates and checks every case in parallel.
pub fn run_corpus(cases: &[DriftCase], eps: f64) -> Vec<Result<DriftReport>> {
    cases
        .par_iter()
        .map(|c| {
            let t = enumerate_trace(&c.channel, &c.code)?;
            run_all_checks(&c.label, &t, eps)
        })
        .collect()
}
