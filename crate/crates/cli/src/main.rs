//! `extremes-lab`: simulation, constants and asymptotics from JSON configs.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use extremes_core::chi_process::fpt_csv;
use extremes_core::constants::{ConstantsProvider, McPolicy};
use extremes_core::harness::requests::{
    AsymptoticConfig, AsymptoticOutput, ConstantConfig, EstimateConfig, ParamsConfig, PathsConfig, TeststatConfig,
};
use extremes_core::harness::{csv_header, gof_of_sample, run_compare_with_provider, CompareConfig, FptGofConfig};
use extremes_core::mc::with_workers;
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "extremes-lab", version, about = "Extremes of chi-square processes with trend")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON config file (`-` reads stdin).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads; all cores when absent. Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Persistent cache of Monte Carlo constants, read and updated.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Sample paths of a self-similar Gaussian model.
    Paths,
    /// Derived constants `t0, A, B, alpha, Q` of a spec.
    Params,
    /// One special constant.
    Constants,
    /// One asymptotic evaluator with its factor breakdown.
    Asymptotic,
    /// Monte Carlo estimate of the exceedance probability.
    EstimatePsi,
    /// Conditional first-passage sample and its KS distance to the limit law.
    Fpt,
    /// Monte Carlo vs asymptotic ladder.
    Compare,
    /// Samples of the penalized bridge statistic.
    Teststat,
}

fn read_config<T: DeserializeOwned>(path: Option<&Path>) -> Result<T> {
    let path = path.context("--config is required")?;
    let text = if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        s
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
    };
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn no_csv(name: &str) -> Result<String> {
    bail!("`{name}` has no CSV form; use --format json")
}

fn provider(policy: McPolicy, seed: Option<u64>, cache: Option<&Path>) -> Result<ConstantsProvider> {
    let mut policy = policy;
    if let Some(s) = seed {
        policy.seed = s;
    }
    Ok(match cache {
        Some(path) => ConstantsProvider::with_cache_file(policy, path)?,
        None => ConstantsProvider::new(policy),
    })
}

fn save(provider: &ConstantsProvider, cache: Option<&Path>) -> Result<()> {
    if let Some(path) = cache {
        provider.save(path)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<String> {
    let c = &cli.common;
    let cfg = c.config.as_deref();
    let cache = c.cache.as_deref();
    let csv = c.format == Format::Csv;
    match cli.command {
        Command::Paths => {
            let mut p: PathsConfig = read_config(cfg)?;
            p.seed = c.seed.unwrap_or(p.seed);
            let bundle = p.run()?;
            if csv {
                Ok(csv_header() + &bundle.to_csv())
            } else {
                json(&bundle)
            }
        }
        Command::Params => {
            let p: ParamsConfig = read_config(cfg)?;
            if csv {
                return no_csv("params");
            }
            json(&p.run()?)
        }
        Command::Constants => {
            let p: ConstantConfig = read_config(cfg)?;
            if csv {
                return no_csv("constants");
            }
            let prov = provider(p.policy.clone(), c.seed, cache)?;
            let out = p.request.evaluate(&prov)?;
            save(&prov, cache)?;
            json(&out)
        }
        Command::Asymptotic => {
            let p: AsymptoticConfig = read_config(cfg)?;
            if csv {
                return no_csv("asymptotic");
            }
            let prov = provider(p.policy.clone(), c.seed, cache)?;
            let out: AsymptoticOutput = p.request.evaluate(&prov)?;
            save(&prov, cache)?;
            json(&out)
        }
        Command::EstimatePsi => {
            let mut p: EstimateConfig = read_config(cfg)?;
            p.mc.seed = c.seed.unwrap_or(p.mc.seed);
            let r = p.run()?;
            if csv {
                Ok(format!(
                    "{}p_hat,ci_low,ci_high,reps,grid_points,truncation_T,seed,wall_ms\n{:.16e},{:.16e},{:.16e},{},{},{:.16e},{},{}\n",
                    csv_header(),
                    r.p_hat,
                    r.ci_low,
                    r.ci_high,
                    r.reps,
                    r.grid_points,
                    r.truncation_t,
                    r.seed,
                    r.wall_ms
                ))
            } else {
                json(&r)
            }
        }
        Command::Fpt => {
            let mut p: FptGofConfig = read_config(cfg)?;
            p.fpt.seed = c.seed.unwrap_or(p.fpt.seed);
            let sample = extremes_core::chi_process::sample_fpt_conditional(&p.spec, &p.horizon, p.u, &p.fpt)?;
            if csv {
                Ok(csv_header() + &fpt_csv(&sample))
            } else {
                let gof = gof_of_sample(&p, &sample)?;
                json(&serde_json::json!({ "sample": sample, "gof": gof }))
            }
        }
        Command::Compare => {
            let mut p: CompareConfig = read_config(cfg)?;
            if let Some(s) = c.seed {
                p.mc.seed = s;
                p.constants.seed = s;
            }
            let prov = provider(p.constants.clone(), None, cache)?;
            let report = run_compare_with_provider(&p, &prov)?;
            save(&prov, cache)?;
            if csv {
                Ok(report.to_csv())
            } else {
                json(&report)
            }
        }
        Command::Teststat => {
            let mut p: TeststatConfig = read_config(cfg)?;
            p.seed = c.seed.unwrap_or(p.seed);
            let r = p.run()?;
            if csv {
                Ok(r.to_csv())
            } else {
                json(&r)
            }
        }
    }
}

fn emit(cli: &Cli) -> Result<()> {
    let text = with_workers(cli.common.workers, || run(cli))?;
    match &cli.common.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    match emit(&cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
