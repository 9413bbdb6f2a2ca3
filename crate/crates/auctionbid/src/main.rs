//! Thin command-line front end over the library.
//!
//! ```text
//! auctionbid gen    --env <kind> --T <rounds> --seed <s> --out <file>
//! auctionbid oracle --trace <csv> --class lipschitz|monotone|fixed [--grid G]
//! auctionbid run    --config <file> [--<key> <value> ...]
//! ```

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use auctionbid::envs::{
    gen_goodexpert_lb, gen_iid, gen_monotone_killer, matrix_to_csv, replay_csv, IidPreset,
};
use auctionbid::harness::{
    apply_setting, emit_report, parse_config_file, run_experiment, EnvKind, ExperimentConfig,
};
use auctionbid::oracle::{best_fixed_bid, best_lipschitz, best_monotone, default_grid};
use auctionbid::{auction, Error};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("auctionbid: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(args: &[String]) -> Result<(), Error> {
    match args.first().map(String::as_str) {
        Some("gen") => cmd_gen(&parse_flags(&args[1..])?),
        Some("oracle") => cmd_oracle(&parse_flags(&args[1..])?),
        Some("run") => cmd_run(&args[1..]),
        Some("--help") | Some("-h") | None => {
            print!("{}", USAGE);
            Ok(())
        }
        Some(other) => Err(Error::InvalidParam(format!(
            "unknown subcommand '{other}' (expected gen, oracle, or run)"
        ))),
    }
}

const USAGE: &str = "\
usage:
  auctionbid gen    --env <iid_discrete|iid_continuous|iid_correlated|monotone_killer|goodexpert_lb>
                    --T <rounds> --seed <n> --out <file>
                    [--ge_k K --ge_delta D --ge_scenario J]
  auctionbid oracle --trace <csv> --class <lipschitz|monotone|fixed>
                    [--grid G] [--prune] [--witness-out <file>]
  auctionbid run    --config <file> [--<key> <value> ...]

run accepts every config key as a flag: policy, env, T, seeds, env_seed,
grid, oracles, window, lr_mode, clip_bids, chew_levels, product_bins, out,
replay_path, prune_unwinnable, ge_k, ge_delta, ge_scenario.
The worker pool is capped by the AUCTIONBID_THREADS environment variable.
";

fn parse_flags(args: &[String]) -> Result<HashMap<String, String>, Error> {
    let mut flags = HashMap::new();
    let mut i = 0;
    while i < args.len() {
        let key = args[i]
            .strip_prefix("--")
            .ok_or_else(|| Error::InvalidParam(format!("expected --flag, got '{}'", args[i])))?;
        // bare boolean flags
        if key == "prune" {
            flags.insert(key.to_string(), "true".to_string());
            i += 1;
            continue;
        }
        let value = args
            .get(i + 1)
            .ok_or_else(|| Error::InvalidParam(format!("--{key} needs a value")))?;
        flags.insert(key.to_string(), value.clone());
        i += 2;
    }
    Ok(flags)
}

fn need<'a>(flags: &'a HashMap<String, String>, key: &str) -> Result<&'a str, Error> {
    flags
        .get(key)
        .map(String::as_str)
        .ok_or_else(|| Error::InvalidParam(format!("missing required --{key}")))
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, Error>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>()
        .map_err(|e| Error::InvalidParam(format!("{what}='{s}': {e}")))
}

fn cmd_gen(flags: &HashMap<String, String>) -> Result<(), Error> {
    let env = need(flags, "env")?;
    let t: u64 = parse(need(flags, "T")?, "T")?;
    let seed: u64 = parse(need(flags, "seed")?, "seed")?;
    let out = PathBuf::from(need(flags, "out")?);

    let preset = match env {
        "iid_discrete" => Some(IidPreset::Discrete),
        "iid_continuous" => Some(IidPreset::Continuous),
        "iid_correlated" => Some(IidPreset::Correlated),
        _ => None,
    };
    if let Some(p) = preset {
        let trace = gen_iid(t, &p.spec(), seed)?;
        auction::write_trace_csv(&trace, &out)?;
    } else if env == "monotone_killer" {
        let trace = gen_monotone_killer(t, seed);
        auction::write_trace_csv(&trace, &out)?;
    } else if env == "goodexpert_lb" {
        let k: usize = parse(flags.get("ge_k").map_or("8", String::as_str), "ge_k")?;
        let gap: f64 = parse(flags.get("ge_delta").map_or("0.1", String::as_str), "ge_delta")?;
        let scenario: usize = parse(
            flags.get("ge_scenario").map_or("1", String::as_str),
            "ge_scenario",
        )?;
        let matrix = gen_goodexpert_lb(t, k, gap, scenario, seed)?;
        std::fs::write(&out, matrix_to_csv(&matrix))?;
    } else {
        return Err(Error::InvalidParam(format!("unknown env '{env}'")));
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_oracle(flags: &HashMap<String, String>) -> Result<(), Error> {
    let trace_path = PathBuf::from(need(flags, "trace")?);
    let class = need(flags, "class")?;
    let prune = flags.contains_key("prune");
    let replay = replay_csv(&trace_path, prune)?;
    let grid = match flags.get("grid") {
        Some(g) => parse(g, "grid")?,
        None => default_grid(replay.trace.horizon()),
    };
    let result = match class {
        "lipschitz" => best_lipschitz(&replay.trace, grid)?,
        "monotone" => best_monotone(&replay.trace, grid)?,
        "fixed" => best_fixed_bid(&replay.trace, grid)?,
        other => {
            return Err(Error::InvalidParam(format!(
                "unknown oracle class '{other}'"
            )))
        }
    };
    println!(
        "class {} rounds {} grid {} best_reward {} error_bound {} scale {} dropped_zero_value {} dropped_unwinnable {}",
        result.class.name(),
        replay.trace.horizon(),
        result.grid,
        result.best_reward,
        result.error_bound,
        replay.scale,
        replay.dropped_nonpositive_value,
        replay.dropped_unwinnable,
    );
    if let Some(path) = flags.get("witness-out") {
        std::fs::write(Path::new(path), result.witness_to_csv())?;
        println!("witness {path}");
    }
    Ok(())
}

fn cmd_run(args: &[String]) -> Result<(), Error> {
    let flags_vec: Vec<(String, String)> = {
        let mut out = Vec::new();
        let mut i = 0;
        while i < args.len() {
            let key = args[i].strip_prefix("--").ok_or_else(|| {
                Error::InvalidParam(format!("expected --flag, got '{}'", args[i]))
            })?;
            let value = args
                .get(i + 1)
                .ok_or_else(|| Error::InvalidParam(format!("--{key} needs a value")))?;
            out.push((key.to_string(), value.clone()));
            i += 2;
        }
        out
    };

    let mut cfg = ExperimentConfig::new(EnvKind::Iid(IidPreset::Continuous), 1024);
    // config file first, then flag overrides in order
    if let Some((_, path)) = flags_vec.iter().find(|(k, _)| k == "config") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParam(format!("config '{path}': {e}")))?;
        for (k, v) in parse_config_file(&text)? {
            apply_setting(&mut cfg, &k, &v)?;
        }
    }
    for (k, v) in flags_vec.iter().filter(|(k, _)| k != "config") {
        apply_setting(&mut cfg, k, v)?;
    }

    let (report, timing) = run_experiment(&cfg)?;
    let out_dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    emit_report(&report, &timing, &out_dir)?;
    for cell in &report.cells {
        println!(
            "policy {} seed {} reward {:.6} wins {} regret_lipschitz {}",
            cell.policy,
            cell.seed,
            cell.final_reward,
            cell.win_count,
            cell.regret_lipschitz
                .map_or_else(|| "-".to_string(), |r| format!("{r:.6}")),
        );
    }
    println!("report {}", out_dir.display());
    Ok(())
}
