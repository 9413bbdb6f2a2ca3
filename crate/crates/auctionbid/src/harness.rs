//! Experiment orchestration: build traces, run every `(policy, seed)` cell
//! under one-round-lookahead feedback, benchmark against the hindsight
//! oracles, and emit deterministic reports.
//!
//! Determinism contract: all numeric outputs are functions of the config and
//! seeds alone. Cells may run on a worker pool (capped by the
//! `AUCTIONBID_THREADS` environment variable) but aggregation is keyed, so
//! parallelism never changes the report. Wall-clock timings are the one
//! exception and live in a separate timing file.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::auction::AuctionTrace;
use crate::envs::{gen_goodexpert_lb, gen_iid, gen_monotone_killer, replay_csv, IidPreset};
use crate::error::{Error, Result};
use crate::ew::{ew_run, LearningRate};
use crate::oracle::{best_fixed_bid, best_lipschitz, best_monotone, default_grid, regret};
use crate::policy::{build_policy, PolicyKind, PolicyParams};

pub const SCHEMA_VERSION: u32 = 1;

/// What generates the rounds.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvKind {
    Iid(IidPreset),
    MonotoneKiller,
    /// Expert-advice experiment: reward matrices instead of auction traces.
    GoodExpertLb { k: usize, gap: f64, scenario: usize },
    Replay { path: PathBuf, prune_unwinnable: bool },
}

impl EnvKind {
    pub fn name(&self) -> String {
        match self {
            EnvKind::Iid(p) => format!("iid_{}", p.name()),
            EnvKind::MonotoneKiller => "monotone_killer".into(),
            EnvKind::GoodExpertLb { .. } => "goodexpert_lb".into(),
            EnvKind::Replay { .. } => "replay".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub policies: Vec<PolicyKind>,
    pub env: EnvKind,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    /// Base seed combined (xor) with each cell seed for trace generation.
    pub env_seed: u64,
    /// Oracle grid; 0 picks `ceil(sqrt(T))`.
    pub oracle_grid: usize,
    /// Hindsight benchmarks per trace; disable for reward-only comparisons.
    pub compute_oracles: bool,
    /// Baseline window length; 0 picks `ceil(T/30)`.
    pub window: usize,
    pub lr_mode: LearningRate,
    pub clip_bids: bool,
    pub chew_levels: usize,
    /// Product-policy bin count; 0 picks `ceil(T^(1/3))`.
    pub product_bins: usize,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(env: EnvKind, horizon: u64) -> Self {
        ExperimentConfig {
            policies: vec![PolicyKind::Sew],
            env,
            horizon,
            seeds: vec![1],
            env_seed: 0,
            oracle_grid: 0,
            compute_oracles: true,
            window: 0,
            lr_mode: LearningRate::Theoretical,
            clip_bids: false,
            chew_levels: 2,
            product_bins: 0,
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.policies.is_empty() {
            return Err(Error::InvalidParam("at least one policy required".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidParam("at least one seed required".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParam("horizon must be positive".into()));
        }
        Ok(())
    }

    fn policy_params(&self, horizon: u64) -> PolicyParams {
        let mut p = PolicyParams::new(horizon);
        if self.window > 0 {
            p.window = self.window;
        }
        if self.product_bins > 0 {
            p.product_bins = self.product_bins;
        }
        p.lr_mode = self.lr_mode;
        p.clip_bids = self.clip_bids;
        p.chew_levels = self.chew_levels;
        p
    }
}

/// Echo of the config as written into reports.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConfigEcho {
    pub policies: Vec<String>,
    pub env: String,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub env_seed: u64,
    pub oracle_grid: usize,
    pub window: usize,
    pub lr_mode: String,
    pub clip_bids: bool,
    pub chew_levels: usize,
    pub product_bins: usize,
}

/// Hindsight benchmarks of one seed's trace.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OracleEcho {
    pub seed: u64,
    pub lipschitz_best: f64,
    pub monotone_best: f64,
    pub fixed_best: f64,
    pub error_bound: f64,
    pub grid: usize,
}

/// One `(policy, seed)` cell.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CellReport {
    pub policy: String,
    pub seed: u64,
    pub final_reward: f64,
    pub win_count: u64,
    pub regret_lipschitz: Option<f64>,
    pub regret_monotone: Option<f64>,
    pub regret_fixed: Option<f64>,
    /// For expert-advice runs: regret against the best expert in hindsight.
    pub regret_best_expert: Option<f64>,
    /// Cumulative realized reward after each round (raw sums).
    pub curve: Vec<f64>,
    /// Bid counts over 100 equal bins of [0, 1].
    pub bid_histogram: Vec<u64>,
    /// Per-round bids and win flags; emitted to CSV, not serialized.
    #[serde(skip)]
    pub bids: Vec<f64>,
    #[serde(skip)]
    pub wins: Vec<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunReport {
    pub schema_version: u32,
    pub code_version: String,
    pub config: ConfigEcho,
    pub oracles: Vec<OracleEcho>,
    pub cells: Vec<CellReport>,
}

/// Wall-clock timings, kept out of the deterministic report body.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingReport {
    pub cells: Vec<CellTiming>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellTiming {
    pub policy: String,
    pub seed: u64,
    pub total_ns: u128,
    pub ns_per_round: f64,
}

fn config_echo(cfg: &ExperimentConfig, horizon: u64, grid: usize) -> ConfigEcho {
    ConfigEcho {
        policies: cfg.policies.iter().map(|p| p.name().to_string()).collect(),
        env: cfg.env.name(),
        horizon,
        seeds: cfg.seeds.clone(),
        env_seed: cfg.env_seed,
        oracle_grid: grid,
        window: cfg.policy_params(horizon).window,
        lr_mode: match cfg.lr_mode {
            LearningRate::Theoretical => "theoretical".into(),
            LearningRate::Empirical5 => "empirical5".into(),
        },
        clip_bids: cfg.clip_bids,
        chew_levels: cfg.chew_levels,
        product_bins: cfg.policy_params(horizon).product_bins,
    }
}

/// Derives the per-cell policy rng stream. Stable across runs and
/// independent of scheduling.
fn cell_rng(seed: u64, policy: PolicyKind) -> ChaCha8Rng {
    let idx = PolicyKind::ALL.iter().position(|&p| p == policy).unwrap() as u64;
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(idx + 1))
}

fn trace_for_seed(cfg: &ExperimentConfig, seed: u64) -> Result<AuctionTrace> {
    let trace_seed = cfg.env_seed ^ seed;
    match &cfg.env {
        EnvKind::Iid(preset) => gen_iid(cfg.horizon, &preset.spec(), trace_seed),
        EnvKind::MonotoneKiller => Ok(gen_monotone_killer(cfg.horizon, trace_seed)),
        EnvKind::Replay {
            path,
            prune_unwinnable,
        } => Ok(replay_csv(path, *prune_unwinnable)?.trace),
        EnvKind::GoodExpertLb { .. } => Err(Error::InvalidParam(
            "expert-advice environments have no auction trace".into(),
        )),
    }
}

struct RolledCell {
    cell: CellReport,
    timing: CellTiming,
}

fn run_cell(
    cfg: &ExperimentConfig,
    policy: PolicyKind,
    seed: u64,
    trace: &AuctionTrace,
) -> Result<RolledCell> {
    let horizon = trace.horizon() as u64;
    let params = cfg.policy_params(horizon);
    let mut p = build_policy(policy, &params)?;
    let mut rng = cell_rng(seed, policy);
    let mut curve = Vec::with_capacity(trace.horizon());
    let mut bids = Vec::with_capacity(trace.horizon());
    let mut wins = Vec::with_capacity(trace.horizon());
    let mut cum = 0.0f64;
    let mut win_count = 0u64;
    let start = Instant::now();
    for (v, m) in trace.iter() {
        let bid = p.next_bid(v, &mut rng);
        let won = bid.get() >= m.get();
        let payoff = if won { v.get() - bid.get() } else { 0.0 };
        p.observe(v, m);
        cum += payoff;
        if won {
            win_count += 1;
        }
        curve.push(cum);
        bids.push(bid.get());
        wins.push(won);
    }
    let total_ns = start.elapsed().as_nanos();
    let mut hist = vec![0u64; 100];
    for &b in &bids {
        let k = ((b * 100.0).floor() as usize).min(99);
        hist[k] += 1;
    }
    Ok(RolledCell {
        cell: CellReport {
            policy: p.name().to_string(),
            seed,
            final_reward: cum,
            win_count,
            regret_lipschitz: None,
            regret_monotone: None,
            regret_fixed: None,
            regret_best_expert: None,
            curve,
            bid_histogram: hist,
            bids,
            wins,
        },
        timing: CellTiming {
            policy: policy.name().to_string(),
            seed,
            total_ns,
            ns_per_round: total_ns as f64 / horizon.max(1) as f64,
        },
    })
}

fn run_expert_advice_cell(cfg: &ExperimentConfig, seed: u64) -> Result<RolledCell> {
    let (k, gap, scenario) = match cfg.env {
        EnvKind::GoodExpertLb { k, gap, scenario } => (k, gap, scenario),
        _ => unreachable!(),
    };
    let matrix = gen_goodexpert_lb(cfg.horizon, k, gap, scenario, cfg.env_seed ^ seed)?;
    let mut rng = cell_rng(seed, PolicyKind::Sew);
    let start = Instant::now();
    let run = ew_run(&matrix.rows, gap, cfg.lr_mode, &mut rng)?;
    let total_ns = start.elapsed().as_nanos();
    let mut cum = 0.0;
    let curve: Vec<f64> = matrix
        .rows
        .iter()
        .enumerate()
        .map(|(t, row)| {
            let p_reward: f64 = row[run.choices[t]];
            cum += p_reward;
            cum
        })
        .collect();
    let mut hist = vec![0u64; 100];
    for &(choice, _) in &run.per_round {
        hist[choice.min(99)] += 1;
    }
    Ok(RolledCell {
        cell: CellReport {
            policy: "ew".into(),
            seed,
            final_reward: run.realized_reward,
            win_count: 0,
            regret_lipschitz: None,
            regret_monotone: None,
            regret_fixed: None,
            regret_best_expert: Some(run.regret),
            curve,
            bid_histogram: hist,
            bids: run.choices.iter().map(|&c| c as f64).collect(),
            wins: vec![false; matrix.rows.len()],
        },
        timing: CellTiming {
            policy: "ew".into(),
            seed,
            total_ns,
            ns_per_round: total_ns as f64 / cfg.horizon.max(1) as f64,
        },
    })
}

/// Runs every `(policy, seed)` cell and attaches oracle regrets.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(RunReport, TimingReport)> {
    cfg.validate()?;
    let pool = build_pool()?;

    if matches!(cfg.env, EnvKind::GoodExpertLb { .. }) {
        let results: Vec<Result<RolledCell>> = pool.install(|| {
            cfg.seeds
                .par_iter()
                .map(|&seed| run_expert_advice_cell(cfg, seed))
                .collect()
        });
        let mut cells = Vec::new();
        let mut timings = Vec::new();
        for r in results {
            let r = r?;
            cells.push(r.cell);
            timings.push(r.timing);
        }
        return Ok((
            RunReport {
                schema_version: SCHEMA_VERSION,
                code_version: env!("CARGO_PKG_VERSION").to_string(),
                config: config_echo(cfg, cfg.horizon, 0),
                oracles: Vec::new(),
                cells,
            },
            TimingReport { cells: timings },
        ));
    }

    // auction environments: one trace per seed, oracles computed once each
    let mut traces = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        traces.push(trace_for_seed(cfg, seed)?);
    }
    let horizon = traces[0].horizon() as u64;
    let grid = if cfg.oracle_grid == 0 {
        default_grid(horizon as usize)
    } else {
        cfg.oracle_grid
    };

    // the DP tables dominate memory, keep oracle computation sequential
    let mut oracles = Vec::new();
    if cfg.compute_oracles {
        for (i, trace) in traces.iter().enumerate() {
            let lip = best_lipschitz(trace, grid)?;
            let mono = best_monotone(trace, grid)?;
            let fixed = best_fixed_bid(trace, grid)?;
            oracles.push((
                OracleEcho {
                    seed: cfg.seeds[i],
                    lipschitz_best: lip.best_reward,
                    monotone_best: mono.best_reward,
                    fixed_best: fixed.best_reward,
                    error_bound: lip.error_bound,
                    grid,
                },
                lip,
                mono,
                fixed,
            ));
        }
    }

    let jobs: Vec<(usize, PolicyKind, u64)> = cfg
        .seeds
        .iter()
        .enumerate()
        .flat_map(|(i, &seed)| cfg.policies.iter().map(move |&p| (i, p, seed)))
        .collect();
    let results: Vec<Result<RolledCell>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, policy, seed)| run_cell(cfg, policy, seed, &traces[i]))
            .collect()
    });

    let mut cells = Vec::new();
    let mut timings = Vec::new();
    for (job, r) in jobs.iter().zip(results) {
        let mut rolled = r?;
        if cfg.compute_oracles {
            let (_, lip, mono, fixed) = &oracles[job.0];
            let rewards: Vec<f64> = per_round_rewards(&rolled.cell.curve);
            rolled.cell.regret_lipschitz = Some(regret(&traces[job.0], &rewards, lip)?);
            rolled.cell.regret_monotone = Some(regret(&traces[job.0], &rewards, mono)?);
            rolled.cell.regret_fixed = Some(regret(&traces[job.0], &rewards, fixed)?);
        }
        cells.push(rolled.cell);
        timings.push(rolled.timing);
    }

    Ok((
        RunReport {
            schema_version: SCHEMA_VERSION,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config_echo(cfg, horizon, grid),
            oracles: oracles.into_iter().map(|(echo, ..)| echo).collect(),
            cells,
        },
        TimingReport { cells: timings },
    ))
}

fn per_round_rewards(curve: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    curve
        .iter()
        .map(|&c| {
            let r = c - prev;
            prev = c;
            r
        })
        .collect()
}

fn build_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(s) = std::env::var("AUCTIONBID_THREADS") {
        let n: usize = s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParam(format!("AUCTIONBID_THREADS='{s}' is not a count")))?;
        if n == 0 {
            return Err(Error::InvalidParam("AUCTIONBID_THREADS must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidParam(format!("worker pool: {e}")))
}

/// Report emission format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Json,
    Csv,
}

/// Writes the report files into `dir`:
///
/// - `report.json` — the deterministic report body
/// - `timing.json` — wall-clock timings (varies run to run)
/// - `rounds.csv` — `policy,seed,t,cum_reward,bid,won` with the cumulative
///   reward normalized into [0, 1] for plotting
/// - `histogram.csv` — `policy,bin_lo,bin_hi,count`, aggregated over seeds
pub fn emit_report(report: &RunReport, timing: &TimingReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), report_json(report)?)?;
    std::fs::write(dir.join("timing.json"), serde_json::to_string_pretty(timing)?)?;
    std::fs::write(dir.join("rounds.csv"), rounds_csv(report))?;
    std::fs::write(dir.join("histogram.csv"), histogram_csv(report))?;
    Ok(())
}

pub fn report_json(report: &RunReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

/// Long-format per-round rows. The cumulative reward column is normalized by
/// the largest cumulative reward reached by any cell (raw sums stay in the
/// JSON report).
pub fn rounds_csv(report: &RunReport) -> String {
    let peak = report
        .cells
        .iter()
        .flat_map(|c| c.curve.iter().copied())
        .fold(0.0f64, f64::max);
    let norm = if peak > 0.0 { peak } else { 1.0 };
    let mut out = String::from("policy,seed,t,cum_reward,bid,won\n");
    for cell in &report.cells {
        for (t, &cum) in cell.curve.iter().enumerate() {
            let bid = cell.bids.get(t).copied().unwrap_or(f64::NAN);
            let won = cell.wins.get(t).copied().unwrap_or(false);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                cell.policy,
                cell.seed,
                t + 1,
                cum / norm,
                bid,
                u8::from(won)
            );
        }
    }
    out
}

/// Bid histogram rows aggregated over seeds per policy.
pub fn histogram_csv(report: &RunReport) -> String {
    let mut out = String::from("policy,bin_lo,bin_hi,count\n");
    let mut policies: Vec<&str> = report.cells.iter().map(|c| c.policy.as_str()).collect();
    policies.dedup();
    let mut seen: Vec<&str> = Vec::new();
    for p in policies {
        if seen.contains(&p) {
            continue;
        }
        seen.push(p);
        let mut agg = vec![0u64; 100];
        for cell in report.cells.iter().filter(|c| c.policy == p) {
            for (k, &c) in cell.bid_histogram.iter().enumerate() {
                agg[k] += c;
            }
        }
        for (k, &count) in agg.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                p,
                k as f64 / 100.0,
                (k + 1) as f64 / 100.0,
                count
            );
        }
    }
    out
}

/// Parses the flat `key = value` config format; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(Error::Parse {
            line: i + 1,
            msg: format!("expected key=value, got '{line}'"),
        })?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Applies one `key = value` setting onto a config. Unknown keys error.
pub fn apply_setting(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "policy" => {
            cfg.policies = value
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(PolicyKind::parse)
                .collect::<Result<Vec<_>>>()?;
        }
        "env" => {
            cfg.env = match value {
                "iid_discrete" => EnvKind::Iid(IidPreset::Discrete),
                "iid_continuous" => EnvKind::Iid(IidPreset::Continuous),
                "iid_correlated" => EnvKind::Iid(IidPreset::Correlated),
                "monotone_killer" => EnvKind::MonotoneKiller,
                "goodexpert_lb" => EnvKind::GoodExpertLb {
                    k: 8,
                    gap: 0.1,
                    scenario: 1,
                },
                other => {
                    return Err(Error::InvalidParam(format!("unknown env '{other}'")));
                }
            };
        }
        "replay_path" => {
            cfg.env = EnvKind::Replay {
                path: PathBuf::from(value),
                prune_unwinnable: match &cfg.env {
                    EnvKind::Replay {
                        prune_unwinnable, ..
                    } => *prune_unwinnable,
                    _ => false,
                },
            };
        }
        "prune_unwinnable" => {
            let flag = parse_bool(value)?;
            if let EnvKind::Replay {
                prune_unwinnable, ..
            } = &mut cfg.env
            {
                *prune_unwinnable = flag;
            } else {
                return Err(Error::InvalidParam(
                    "prune_unwinnable only applies to replay".into(),
                ));
            }
        }
        "T" => cfg.horizon = parse_num(key, value)?,
        "seeds" => {
            cfg.seeds = value
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| {
                    s.trim()
                        .parse::<u64>()
                        .map_err(|e| Error::InvalidParam(format!("seed '{s}': {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
        }
        "env_seed" => cfg.env_seed = parse_num(key, value)?,
        "grid" => cfg.oracle_grid = parse_num::<usize>(key, value)?,
        "oracles" => cfg.compute_oracles = parse_bool(value)?,
        "window" => cfg.window = parse_num::<usize>(key, value)?,
        "lr_mode" => {
            cfg.lr_mode = match value {
                "theoretical" => LearningRate::Theoretical,
                "empirical5" => LearningRate::Empirical5,
                other => {
                    return Err(Error::InvalidParam(format!("unknown lr_mode '{other}'")))
                }
            };
        }
        "clip_bids" => cfg.clip_bids = parse_bool(value)?,
        "chew_levels" => cfg.chew_levels = parse_num::<usize>(key, value)?,
        "product_bins" => cfg.product_bins = parse_num::<usize>(key, value)?,
        "out" => cfg.out_dir = Some(PathBuf::from(value)),
        "ge_k" | "ge_delta" | "ge_scenario" => {
            let (mut k, mut gap, mut scenario) = match cfg.env {
                EnvKind::GoodExpertLb { k, gap, scenario } => (k, gap, scenario),
                _ => {
                    return Err(Error::InvalidParam(format!(
                        "{key} only applies to env=goodexpert_lb"
                    )))
                }
            };
            match key {
                "ge_k" => k = parse_num(key, value)?,
                "ge_delta" => gap = parse_num(key, value)?,
                _ => scenario = parse_num(key, value)?,
            }
            cfg.env = EnvKind::GoodExpertLb { k, gap, scenario };
        }
        other => {
            return Err(Error::InvalidParam(format!("unknown config key '{other}'")));
        }
    }
    Ok(())
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse::<T>()
        .map_err(|e| Error::InvalidParam(format!("{key}='{value}': {e}")))
}

fn parse_bool(value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::InvalidParam(format!("expected bool, got '{other}'"))),
    }
}
