//! Named reference channels used by the sweeps, the checks and the CLI shorthands.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{bsc, build_additive_mod_m, build_product, ChannelModel};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct NamedChannel {
    pub name: String,
    pub channel: ChannelModel,
}

/// Binary adder `Y = X1 + X2` observed through symmetric noise of weight `p` per wrong output.
pub fn noisy_adder(p: f64) -> Result<ChannelModel> {
    let q = (0..2)
        .map(|a| {
            (0..2)
                .map(|b| (0..3).map(|y| if y == a + b { 1.0 - 2.0 * p } else { p }).collect())
                .collect()
        })
        .collect();
    ChannelModel::from_rows(2, 2, 3, q)
}

/// Strictly positive channel with rows drawn from a flat Dirichlet, rescaled so every
/// entry is at least `floor`.
pub fn random_positive(x1: usize, x2: usize, y: usize, floor: f64, rng: &mut impl Rng) -> Result<ChannelModel> {
    if !(floor >= 0.0 && floor * y as f64 <= 1.0) {
        return Err(Error::Invalid(format!("floor {floor} infeasible for {y} outputs")));
    }
    let mass = 1.0 - floor * y as f64;
    let q = (0..x1)
        .map(|_| {
            (0..x2)
                .map(|_| {
                    let e: Vec<f64> = (0..y).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
                    let s: f64 = e.iter().sum();
                    e.iter().map(|v| mass * v / s + floor).collect()
                })
                .collect()
        })
        .collect();
    ChannelModel::from_rows(x1, x2, y, q)
}

/// The fixed corpus: additive channels, parallel pairs, a noisy adder and four
/// seeded random channels.
pub fn standard() -> Vec<NamedChannel> {
    let mut out = Vec::new();
    let mut push = |name: String, channel: ChannelModel| out.push(NamedChannel { name, channel });
    for (m, p) in [(3, 0.1), (3, 0.05), (4, 0.05), (5, 0.1)] {
        push(format!("additive:m={m},p={p}"), build_additive_mod_m(m, p).unwrap());
    }
    for (a, b) in [(0.1, 0.2), (0.05, 0.15), (0.2, 0.2)] {
        push(format!("product:bsc={a},bsc={b}"), build_product(&bsc(a), &bsc(b)).unwrap());
    }
    push("adder:p=0.05".into(), noisy_adder(0.05).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..4 {
        let (x1, x2, y) = [(2, 2, 2), (2, 2, 3), (3, 2, 3), (2, 3, 4)][k];
        push(format!("random:{k}"), random_positive(x1, x2, y, 0.1, &mut rng).unwrap());
    }
    out
}

fn parse_kv(s: &str) -> Vec<(&str, &str)> {
    s.split(',').filter_map(|kv| kv.split_once('=')).map(|(k, v)| (k.trim(), v.trim())).collect()
}

fn num(v: &str) -> Result<f64> {
    v.parse().map_err(|_| Error::Invalid(format!("not a number: {v}")))
}

/// Parses `additive:m=3,p=0.1`, `product:bsc=0.1,bsc=0.2` and `adder:p=0.05`.
pub fn from_shorthand(s: &str) -> Result<ChannelModel> {
    let (kind, rest) = s.split_once(':').ok_or_else(|| Error::Invalid(format!("unknown channel: {s}")))?;
    let kv = parse_kv(rest);
    match kind {
        "additive" => {
            let mut m = None;
            let mut p = None;
            for (k, v) in kv {
                match k {
                    "m" => m = Some(v.parse::<usize>().map_err(|_| Error::Invalid(format!("bad m: {v}")))?),
                    "p" => p = Some(num(v)?),
                    _ => return Err(Error::Invalid(format!("unknown key {k}"))),
                }
            }
            match (m, p) {
                (Some(m), Some(p)) => build_additive_mod_m(m, p),
                _ => Err(Error::Invalid("additive needs m and p".into())),
            }
        }
        "product" => {
            let ps: Vec<f64> = kv.iter().filter(|(k, _)| *k == "bsc").map(|(_, v)| num(v)).collect::<Result<_>>()?;
            if ps.len() != 2 || kv.len() != 2 {
                return Err(Error::Invalid("product needs exactly bsc=..,bsc=..".into()));
            }
            build_product(&bsc(ps[0]), &bsc(ps[1]))
        }
        "adder" => match kv.as_slice() {
            [("p", v)] => noisy_adder(num(v)?),
            _ => Err(Error::Invalid("adder needs p".into())),
        },
        _ => Err(Error::Invalid(format!("unknown channel kind: {kind}"))),
    }
}
