use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use macfb::bounds::{d_lb, BoundsConfig, BoundsContext, RatePair};
use macfb::channel::{validate_channel, ChannelModel, RawChannel};
use macfb::driftlab::{enumerate_trace, run_all_checks, DriftReport, TinyCode};
use macfb::hypotest::{exact_curve, exact_errors, exponent_slope, kl_prediction, monte_carlo_errors, ConfirmationDesign, CurvePoint};
use macfb::infotheory::{region_boundary, vl_entropy, GridSpec, InputGrid, OutputTree};
use macfb::reproduce::{self, CheckRow};
use macfb::num::csv as f;
use macfb::vlcsim::{run_scheme, sweep_gamma, SchemeConfig};

#[derive(Parser)]
#[command(name = "macfb", version, about = "Error exponents of multiple-access channels with feedback")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    out: Format,
    /// Rescale channel rows that do not sum to one.
    #[arg(long, global = true)]
    renormalize: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// All exponent bounds at one rate pair.
    Bounds {
        #[arg(long)]
        channel: String,
        #[arg(long)]
        r1: f64,
        #[arg(long)]
        r2: f64,
        /// Input-grid denominator for both users.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        gamma_step: Option<f64>,
        /// Also report unclamped values.
        #[arg(long)]
        raw: bool,
    },
    /// Confirmation divergence and the optimal confirmation distribution.
    Dlb {
        #[arg(long)]
        channel: String,
    },
    /// Capacity-region boundary along rays in the first quadrant.
    Region {
        #[arg(long)]
        channel: String,
        #[arg(long, default_value_t = 32)]
        points: usize,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Error curve of a confirmation test.
    Confirm {
        #[arg(long)]
        channel: String,
        /// ConfirmationDesign JSON file.
        #[arg(long)]
        design: PathBuf,
        /// Block lengths as `a:b:step`.
        #[arg(long)]
        n_sweep: String,
        #[arg(long, conflicts_with = "mc")]
        exact: bool,
        #[arg(long, requires = "seed")]
        mc: bool,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Exhaustive drift and martingale checks on tiny feedback codes.
    Drift {
        #[arg(long)]
        channel: String,
        #[arg(long)]
        m1: usize,
        #[arg(long)]
        m2: usize,
        #[arg(long)]
        horizon: usize,
        /// `random:K:SEED` or a JSON file with a list of codes.
        #[arg(long)]
        codes: String,
        #[arg(long, default_value_t = macfb::driftlab::DEFAULT_EPS)]
        eps: f64,
    },
    /// Monte Carlo run of the variable-length scheme.
    Simulate {
        #[arg(long)]
        channel: String,
        /// SchemeConfig JSON file.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Simulation over a grid of phase fractions.
    Sweep {
        #[arg(long)]
        channel: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Reproduce a reference example and compare with expected values.
    Example {
        #[arg(value_parser = reproduce::EXAMPLES)]
        name: String,
    },
    /// Entropy decomposition of a variable-length output tree.
    Vlentropy {
        /// OutputTree JSON file.
        #[arg(long)]
        tree: PathBuf,
    },
}

#[derive(Serialize)]
struct RunManifest {
    subcommand: String,
    params: Value,
    inputs: Vec<(String, String)>,
    seed: Option<u64>,
    version: String,
    timestamp: u64,
}

/// Bad input file, flag value or channel; exit code 3.
struct Failure(String);

impl From<macfb::Error> for Failure {
    fn from(e: macfb::Error) -> Self {
        Failure(e.to_string())
    }
}

type Out = std::result::Result<Output, Failure>;

struct Output {
    json: Value,
    csv: Option<String>,
    ok: bool,
}

impl Output {
    fn json(v: impl Serialize) -> Self {
        Output { json: serde_json::to_value(v).expect("serializable"), csv: None, ok: true }
    }
}

struct Inputs {
    renormalize: bool,
    digests: Vec<(String, String)>,
}

impl Inputs {
    fn read(&mut self, path: &Path) -> std::result::Result<String, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
        let hex: String = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
        self.digests.push((path.display().to_string(), hex));
        Ok(text)
    }

    fn json<T: serde::de::DeserializeOwned>(&mut self, path: &Path) -> std::result::Result<T, Failure> {
        let text = self.read(path)?;
        serde_json::from_str(&text).map_err(|e| Failure(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))
    }

    fn channel(&mut self, spec: &str) -> std::result::Result<ChannelModel, Failure> {
        if spec.contains(':') && !Path::new(spec).exists() {
            return Ok(macfb::corpus::from_shorthand(spec)?);
        }
        let path = Path::new(spec);
        let raw: RawChannel = self.json(path)?;
        validate_channel(&raw, self.renormalize).map_err(|e| Failure(format!("{}: {e}", path.display())))
    }
}

fn parse_sweep(s: &str) -> std::result::Result<Vec<usize>, Failure> {
    let bad = || Failure(format!("--n-sweep expects a:b:step, got {s}"));
    let parts: Vec<usize> = s.split(':').map(|p| p.parse().map_err(|_| bad())).collect::<std::result::Result<_, _>>()?;
    match parts.as_slice() {
        [a, b, step] if *step > 0 && a <= b && *a > 0 => Ok((*a..=*b).step_by(*step).collect()),
        _ => Err(bad()),
    }
}

fn bounds_ctx(ch: &ChannelModel, grid: Option<usize>, gamma_step: Option<f64>) -> BoundsContext {
    let mut cfg = BoundsConfig::for_channel(ch);
    if let Some(g) = grid {
        cfg.grid = GridSpec::uniform(g);
    }
    if let Some(s) = gamma_step {
        cfg.gamma_step = s;
    }
    BoundsContext::new(ch, cfg)
}

fn check_table(rows: &[CheckRow]) -> String {
    let mut s = String::from("check,expected,computed,tolerance,status\n");
    for r in rows {
        let q = |v: &str| if v.contains(',') { format!("\"{v}\"") } else { v.to_string() };
        s += &format!("{},{},{},{},{}\n", q(&r.name), q(&r.expected), q(&r.computed), q(&r.tolerance), if r.pass { "PASS" } else { "FAIL" });
    }
    s
}

fn curve_csv(curve: &[CurvePoint], slope: Option<f64>, kl: f64) -> String {
    let mut s = String::from("n,alpha,beta\n");
    for c in curve {
        s += &format!("{},{},{}\n", c.n, f(c.alpha), f(c.beta));
    }
    s += &format!("# slope={}\n# kl_prediction={}\n", slope.map_or("nan".into(), f), f(kl));
    s
}

fn drift_codes(spec: &str, ch: &ChannelModel, m: (usize, usize), horizon: usize, inputs: &mut Inputs) -> std::result::Result<Vec<TinyCode>, Failure> {
    if let Some(rest) = spec.strip_prefix("random:") {
        let bad = || Failure(format!("--codes expects random:K:SEED, got {spec}"));
        let (k, seed) = rest.split_once(':').ok_or_else(bad)?;
        let k: usize = k.parse().map_err(|_| bad())?;
        let seed: u64 = seed.parse().map_err(|_| bad())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        return (0..k).map(|_| TinyCode::random(ch, m.0, m.1, horizon, &mut rng).map_err(Failure::from)).collect();
    }
    let codes: Vec<TinyCode> = inputs.json(Path::new(spec))?;
    for c in &codes {
        if (c.m1, c.m2, c.horizon) != (m.0, m.1, horizon) {
            return Err(Failure(format!("{spec}: code sizes ({}, {}, {}) do not match --m1 --m2 --horizon", c.m1, c.m2, c.horizon)));
        }
        c.validate(ch)?;
    }
    Ok(codes)
}

fn drift_summary(reports: &[DriftReport]) -> Value {
    let mut agg: std::collections::BTreeMap<String, (usize, usize, f64)> = Default::default();
    let mut add = |name: &str, checked: usize, bad: usize, margin: f64| {
        let e = agg.entry(name.to_string()).or_insert((0, 0, f64::INFINITY));
        e.0 += checked;
        e.1 += bad;
        e.2 = e.2.min(margin);
    };
    for r in reports {
        for c in &r.checks {
            add(&c.name, c.checked, c.violations, c.worst_margin);
        }
        for s in &r.submartingale {
            add("pruned_submartingale", s.information_sets, usize::from(!s.passed()), s.worst_margin);
        }
        for d in &r.doob {
            add("doob", 1, usize::from(!d.holds), d.bound - d.prob_exceed);
        }
    }
    let checks: Vec<Value> = agg
        .into_iter()
        .map(|(name, (checked, violations, worst))| {
            json!({"name": name, "checked": checked, "violations": violations, "worst_margin": if worst.is_finite() { json!(worst) } else { json!(null) }})
        })
        .collect();
    json!(checks)
}

fn run(cmd: &Cmd, format: Format, inputs: &mut Inputs) -> Out {
    match cmd {
        Cmd::Bounds { channel, r1, r2, grid, gamma_step, raw } => {
            let ch = inputs.channel(channel)?;
            let ctx = bounds_ctx(&ch, *grid, *gamma_step);
            let r = RatePair::new(*r1, *r2);
            let rep = if *raw { ctx.report_with_raw(&r) } else { ctx.report(&r) };
            let mut out = Output::json(&rep);
            out.csv = Some(format!(
                "r1,r2,d_lb,d_ub,lb_two_phase,lb_three_phase,ub_two_phase,ub_three_phase,lb_geometric,ub_lambda_mixed\n{},{},{},{},{},{},{},{},{},{}\n",
                f(rep.r1),
                f(rep.r2),
                f(rep.d_lb),
                f(rep.d_ub),
                f(rep.lb_two_phase),
                f(rep.lb_three_phase),
                f(rep.ub_two_phase),
                f(rep.ub_three_phase),
                f(rep.lb_geometric),
                f(rep.ub_lambda_mixed)
            ));
            Ok(out)
        }
        Cmd::Dlb { channel } => {
            let ch = inputs.channel(channel)?;
            let d = d_lb(&ch);
            let mut out = Output::json(&d);
            out.csv = Some(format!("value\n{}\n", f(d.value)));
            Ok(out)
        }
        Cmd::Region { channel, points, grid } => {
            let ch = inputs.channel(channel)?;
            let cfg = bounds_ctx(&ch, *grid, None).cfg;
            let g = InputGrid::new(&ch, cfg.grid);
            let n = (*points).max(2);
            let samples: Vec<_> = (0..n)
                .into_par_iter()
                .map(|k| region_boundary(&g, std::f64::consts::FRAC_PI_2 * k as f64 / (n - 1) as f64, cfg.region_lambda_den))
                .collect();
            let mut csv = String::from("theta,radius,r1,r2\n");
            for s in &samples {
                csv += &format!("{},{},{},{}\n", f(s.theta), f(s.radius), f(s.r1), f(s.r2));
            }
            let mut out = Output::json(&samples);
            out.csv = Some(csv);
            Ok(out)
        }
        Cmd::Confirm { channel, design, n_sweep, mc, trials, seed, .. } => {
            let ch = inputs.channel(channel)?;
            let d: ConfirmationDesign = inputs.json(design)?;
            d.validate(&ch)?;
            let ns = parse_sweep(n_sweep)?;
            let kl = kl_prediction(&ch, &d)?;
            let curve = if *mc {
                let seed = seed.expect("clap enforces --seed with --mc");
                let same_law: Vec<bool> = exact_errors(&ch, &d.with_length(ns[0]))?.alternatives.iter().map(|a| a.indistinguishable).collect();
                ns.iter()
                    .map(|&n| {
                        let e = monte_carlo_errors(&ch, &d.with_length(n), *trials, seed)?;
                        let beta = e.beta.iter().zip(&same_law).filter(|(_, &s)| !s).map(|(b, _)| b.value).fold(0.0, f64::max);
                        Ok(CurvePoint { n, alpha: e.alpha.value, beta })
                    })
                    .collect::<macfb::Result<Vec<_>>>()?
            } else {
                exact_curve(&ch, &d, &ns)?
            };
            let slope = exponent_slope(&curve).ok();
            let last = if *mc { None } else { Some(exact_errors(&ch, &d.with_length(*ns.last().unwrap()))?) };
            let mut out = Output::json(json!({"curve": curve, "slope": slope, "kl_prediction": kl, "method": if *mc { "mc" } else { "exact" }, "final": last}));
            out.csv = Some(curve_csv(&curve, slope, kl));
            Ok(out)
        }
        Cmd::Drift { channel, m1, m2, horizon, codes, eps } => {
            let ch = inputs.channel(channel)?;
            let codes = drift_codes(codes, &ch, (*m1, *m2), *horizon, inputs)?;
            let reports = codes
                .par_iter()
                .enumerate()
                .map(|(k, c)| run_all_checks(&format!("code{k}"), &enumerate_trace(&ch, c)?, *eps))
                .collect::<macfb::Result<Vec<_>>>()?;
            let summary = drift_summary(&reports);
            let passed = reports.iter().all(|r| r.passed());
            let mut csv = String::from("check,checked,violations,worst_margin\n");
            for c in summary.as_array().unwrap() {
                let worst = c["worst_margin"].as_f64().map_or("nan".into(), f);
                csv += &format!("{},{},{},{}\n", c["name"].as_str().unwrap(), c["checked"], c["violations"], worst);
            }
            Ok(Output { json: json!({"passed": passed, "checks": summary, "reports": reports}), csv: Some(csv), ok: passed })
        }
        Cmd::Simulate { channel, config, trials, seed } => {
            let ch = inputs.channel(channel)?;
            let cfg: SchemeConfig = inputs.json(config)?;
            let r = run_scheme(&ch, &cfg, *trials, *seed)?;
            let mut out = Output::json(&r);
            out.csv = Some(format!(
                "trials,pe,q,peb,mean_blocks,mean_t,exponent,exponent_lower\n{},{},{},{},{},{},{},{}\n",
                r.trials,
                f(r.pe.value),
                f(r.q.value),
                f(r.peb.value),
                f(r.mean_blocks),
                f(r.mean_t),
                f(r.exponent),
                f(r.exponent_lower)
            ));
            Ok(out)
        }
        Cmd::Sweep { channel, config, step, trials, seed } => {
            let ch = inputs.channel(channel)?;
            let cfg: SchemeConfig = inputs.json(config)?;
            let t = sweep_gamma(&ch, &cfg, *step, *trials, *seed)?;
            let csv = t.to_csv();
            let mut out = Output::json(json!({"rows": t.rows, "skipped": t.skipped, "best": t.best()}));
            out.csv = Some(csv);
            Ok(out)
        }
        Cmd::Example { name } => {
            let rows = reproduce::example(name)?;
            let ok = rows.iter().all(|r| r.pass);
            if format == Format::Json {
                eprint!("{}", check_table(&rows));
            }
            Ok(Output { json: json!({"example": name, "passed": ok, "rows": rows}), csv: Some(check_table(&rows)), ok })
        }
        Cmd::Vlentropy { tree } => {
            let t: OutputTree = inputs.json(tree)?;
            let e = vl_entropy(&t)?;
            let mut out = Output::json(e);
            out.csv = Some(format!("h_yt,h_t,h_yt_given_t\n{},{},{}\n", f(e.h_yt), f(e.h_t), f(e.h_yt_given_t)));
            Ok(out)
        }
    }
}

fn params(cmd: &Cmd) -> (String, Value, Option<u64>) {
    let (name, p, seed) = match cmd {
        Cmd::Bounds { channel, r1, r2, grid, gamma_step, raw } => {
            ("bounds", json!({"channel": channel, "r1": r1, "r2": r2, "grid": grid, "gamma_step": gamma_step, "raw": raw}), None)
        }
        Cmd::Dlb { channel } => ("dlb", json!({"channel": channel}), None),
        Cmd::Region { channel, points, grid } => ("region", json!({"channel": channel, "points": points, "grid": grid}), None),
        Cmd::Confirm { channel, design, n_sweep, mc, trials, seed, .. } => (
            "confirm",
            json!({"channel": channel, "design": design, "n_sweep": n_sweep, "method": if *mc { "mc" } else { "exact" }, "trials": mc.then_some(trials)}),
            if *mc { *seed } else { None },
        ),
        Cmd::Drift { channel, m1, m2, horizon, codes, eps } => {
            let seed = codes.strip_prefix("random:").and_then(|r| r.split(':').nth(1)).and_then(|s| s.parse().ok());
            ("drift", json!({"channel": channel, "m1": m1, "m2": m2, "horizon": horizon, "codes": codes, "eps": eps}), seed)
        }
        Cmd::Simulate { channel, config, trials, seed } => ("simulate", json!({"channel": channel, "config": config, "trials": trials}), Some(*seed)),
        Cmd::Sweep { channel, config, step, trials, seed } => {
            ("sweep", json!({"channel": channel, "config": config, "step": step, "trials": trials}), Some(*seed))
        }
        Cmd::Example { name } => ("example", json!({"name": name}), None),
        Cmd::Vlentropy { tree } => ("vlentropy", json!({"tree": tree}), None),
    };
    (name.to_string(), p, seed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("MACFB_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: MACFB_THREADS must be a positive integer, got {v}");
                return ExitCode::from(2);
            }
        }
    }
    let mut inputs = Inputs { renormalize: cli.renormalize, digests: Vec::new() };
    let result = run(&cli.cmd, cli.out, &mut inputs);
    let (subcommand, params, seed) = params(&cli.cmd);
    let manifest = RunManifest {
        subcommand,
        params,
        inputs: inputs.digests,
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    let out = match result {
        Ok(o) => o,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(3);
        }
    };
    let mut stdout = std::io::stdout().lock();
    match cli.out {
        Format::Json => {
            let mut v = json!({"manifest": manifest, "result": out.json});
            macfb::num::round_json(&mut v);
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&v).expect("serializable"));
        }
        Format::Csv => {
            let _ = writeln!(stdout, "# manifest: {}", serde_json::to_string(&manifest).expect("serializable"));
            let _ = write!(stdout, "{}", out.csv.unwrap_or_default());
        }
    }
    if out.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
