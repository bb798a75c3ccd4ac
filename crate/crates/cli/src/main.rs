use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use cachesched::colgen::{run_column_generation_on, write_trace_csv, CgResult};
use cachesched::conflict::build_conflict_graph;
use cachesched::master::{Objective, Rmp, RmpMode};
use cachesched::model::generate_scenario;
use cachesched::pricing::PricerKind;
use cachesched::sweep::{oracle_check, run_point, run_sweep_with, write_sweep_csv, RunConfig, SweepConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(name = "cachesched", version, about = "Joint caching and link scheduling by column generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one generated scenario and compare against the baseline.
    Run {
        #[command(flatten)]
        source: Source,
        /// Write the per-iteration trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Print the summary as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run a parameter sweep described by a TOML file and emit CSV.
    Sweep {
        config: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(short, long)]
        quiet: bool,
    },
    /// Compare column generation with the full LP on random tiny scenarios.
    OracleCheck {
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        first_seed: u64,
        #[arg(long, default_value_t = 0.03)]
        epsilon: f64,
    },
    /// Print the conflict graph or the initial master LP of a scenario.
    DumpGraph {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum, default_value_t = DumpFormat::Edges)]
        format: DumpFormat,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DumpFormat {
    Edges,
    Lp,
}

/// A run configuration from a file or a named profile, with overrides.
#[derive(Args)]
struct Source {
    /// TOML run configuration.
    #[arg(short, long, conflicts_with = "profile")]
    config: Option<PathBuf>,
    /// Built-in profile: table1, desk or tiny.
    #[arg(short, long)]
    profile: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// exact or sequential_fixing.
    #[arg(long)]
    pricer: Option<PricerKind>,
    /// min_schedule or max_throughput.
    #[arg(long)]
    objective: Option<Objective>,
}

impl Source {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match (&self.config, &self.profile) {
            (Some(path), _) => RunConfig::from_toml_str(&read(path)?).with_context(|| format!("in {}", path.display()))?,
            (None, Some(name)) => RunConfig::for_profile(name)?,
            (None, None) => RunConfig::for_profile("desk")?,
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                bail!("epsilon must be a nonnegative number");
            }
            cfg.epsilon = e;
        }
        if let Some(p) = self.pricer {
            cfg.pricer = p;
        }
        if let Some(o) = self.objective {
            cfg.objective = o;
        }
        Ok(cfg)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn summary_json(cfg: &RunConfig, tuples: usize, cg: &CgResult<f64>, rates: Option<(f64, f64, f64, f64)>) -> serde_json::Value {
    let mut v = json!({
        "seed": cfg.seed,
        "epsilon": cfg.epsilon,
        "pricer": cfg.pricer,
        "objective": cfg.objective,
        "tuples": tuples,
        "delta_u": cg.delta_u,
        "delta_l": cg.delta_l,
        "verdict": cg.verdict.to_string(),
        "iterations": cg.iterations(),
        "pool_size": cg.pool.len(),
        "stalled": cg.stalled,
        "reran_exact": cg.reran_exact,
    });
    if let Some((base_delta, cg_rate, base_rate, gain)) = rates {
        v["baseline_delta"] = json!(base_delta);
        v["cg_rate_mbps"] = json!(cg_rate);
        v["baseline_rate_mbps"] = json!(base_rate);
        v["gain_pct"] = json!(gain);
    }
    if let Some(t) = &cg.throughput {
        v["throughput_lower"] = json!(t.lower);
        v["throughput_upper"] = json!(t.upper);
    }
    v
}

fn run(source: &Source, trace: Option<&Path>, as_json: bool) -> Result<()> {
    let cfg = source.resolve()?;
    let scenario = generate_scenario::<f64>(&cfg.scenario, cfg.seed)?;
    let tuples = build_conflict_graph(&scenario).len();
    let start = Instant::now();
    let (cg, rates) = match cfg.objective {
        Objective::MinSchedule => {
            let p = run_point(scenario, &cfg.cg_options()).map_err(anyhow::Error::msg)?;
            let gain = p.gain_pct();
            (p.cg, Some((p.baseline_delta, p.cg_rate_mbps, p.baseline_rate_mbps, gain)))
        }
        Objective::MaxThroughput => {
            let graph = build_conflict_graph(&scenario);
            (run_column_generation_on(&scenario, &graph, &cfg.cg_options())?, None)
        }
    };
    let elapsed = start.elapsed();
    if let Some(path) = trace {
        write_trace_csv(&cg.trace, sink(Some(path))?)?;
    }
    let summary = summary_json(&cfg, tuples, &cg, rates);
    if as_json {
        println!("{}", serde_json::to_string_pretty(&summary)?);
        return Ok(());
    }
    println!("tuples      {tuples}");
    println!("delta_u     {:.6}", cg.delta_u);
    println!("delta_l     {:.6}", cg.delta_l);
    println!("verdict     {}", cg.verdict);
    println!("iterations  {} (pool {})", cg.iterations(), cg.pool.len());
    if let Some((base_delta, cg_rate, base_rate, gain)) = rates {
        println!("baseline    {base_delta:.6}");
        println!("rate        {cg_rate:.4} Mb/s vs {base_rate:.4} Mb/s baseline ({gain:+.1}%)");
    }
    if let Some(t) = &cg.throughput {
        println!("throughput  [{:.4}, {:.4}] demand fraction", t.lower, t.upper);
    }
    if cg.stalled {
        println!("note        pricing stalled on a pooled column");
    }
    println!("elapsed     {:.1} ms", elapsed.as_secs_f64() * 1e3);
    Ok(())
}

fn sweep(config: &Path, output: Option<&Path>, quiet: bool) -> Result<()> {
    let cfg = SweepConfig::from_toml_str(&read(config)?).with_context(|| format!("in {}", config.display()))?;
    let total = cfg.values.len() * cfg.seeds;
    let mut done = 0;
    let rows = run_sweep_with(&cfg, |row| {
        done += 1;
        if !quiet {
            eprintln!("[{done}/{total}] {}={} seed {}: {}", row.axis, row.axis_value, row.seed, row.status);
        }
    })?;
    write_sweep_csv(&rows, sink(output)?)?;
    Ok(())
}

fn oracle(seeds: u64, first: u64, epsilon: f64) -> Result<bool> {
    let mut failed = 0;
    for seed in first..first + seeds {
        match oracle_check(seed, epsilon) {
            Ok(r) => {
                println!(
                    "seed {seed:>4} tuples {:>2} oracle {:.6} du {:.6} dl {:.6} exact {:.6} {}",
                    r.tuples,
                    r.delta_oracle,
                    r.delta_u,
                    r.delta_l,
                    r.delta_u_exact,
                    if r.passed() { "ok" } else { "FAIL" }
                );
                failed += usize::from(!r.passed());
            }
            Err(e) => {
                println!("seed {seed:>4} error: {e}");
                failed += 1;
            }
        }
    }
    println!("{} of {seeds} passed", seeds as usize - failed);
    Ok(failed == 0)
}

fn dump_graph(source: &Source, format: DumpFormat, output: Option<&Path>) -> Result<()> {
    let cfg = source.resolve()?;
    let scenario = generate_scenario::<f64>(&cfg.scenario, cfg.seed)?;
    let graph = build_conflict_graph(&scenario);
    let text = match format {
        DumpFormat::Edges => graph.to_edge_list(),
        DumpFormat::Lp => {
            if graph.is_empty() {
                bail!("scenario has no communication tuples");
            }
            let mode = match cfg.objective {
                Objective::MinSchedule => RmpMode::min_schedule(),
                Objective::MaxThroughput => RmpMode::max_throughput(),
            };
            let pool = cachesched::master::singleton_pool(&graph);
            Rmp::new(&scenario, &graph, &pool, mode)?.problem().to_lp_string()
        }
    };
    let mut out = sink(output)?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { source, trace, json } => run(source, trace.as_deref(), *json).map(|_| true),
        Command::Sweep { config, output, quiet } => sweep(config, output.as_deref(), *quiet).map(|_| true),
        Command::OracleCheck {
            seeds,
            first_seed,
            epsilon,
        } => oracle(*seeds, *first_seed, *epsilon),
        Command::DumpGraph { source, format, output } => dump_graph(source, *format, output.as_deref()).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
