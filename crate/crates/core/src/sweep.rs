//! Run and sweep configuration, the user-rate metric and CSV emission.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{baseline_schedule, femtocache_assign};
use crate::colgen::{run_column_generation_on, CgOptions, CgResult};
use crate::conflict::build_conflict_graph;
use crate::master::{Objective, RmpMode};
use crate::model::{generate_scenario, CacheSpec, ModelError, Scenario, ScenarioConfig};
use crate::oracle::solve_full_lp;
use crate::pricing::PricerKind;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("unknown profile `{0}` (expected table1, desk or tiny)")]
    Profile(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid sweep: {0}")]
    Sweep(String),
}

#[derive(Debug, Error, PartialEq)]
#[error("schedule length is {delta} with {demand_bits} bits demanded")]
pub struct RateError {
    pub delta: f64,
    pub demand_bits: f64,
}

pub fn profile(name: &str) -> Result<ScenarioConfig, ConfigError> {
    match name {
        "table1" => Ok(ScenarioConfig::table1()),
        "desk" => Ok(ScenarioConfig::desk()),
        "tiny" => Ok(ScenarioConfig::tiny()),
        other => Err(ConfigError::Profile(other.to_string())),
    }
}

/// Everything needed for one column-generation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub epsilon: f64,
    pub seed: u64,
    pub objective: Objective,
    pub pricer: PricerKind,
    pub rerun_borderline: bool,
    pub max_iterations: Option<usize>,
}

impl RunConfig {
    /// Defaults for a profile: sequential fixing for the full-size profile,
    /// exact pricing otherwise.
    pub fn for_profile(name: &str) -> Result<Self, ConfigError> {
        let scenario = profile(name)?;
        let pricer = if name == "table1" {
            PricerKind::SequentialFixing
        } else {
            PricerKind::Exact
        };
        Ok(Self {
            scenario,
            epsilon: 0.03,
            seed: 1,
            objective: Objective::MinSchedule,
            pricer,
            rerun_borderline: true,
            max_iterations: None,
        })
    }

    pub fn cg_options(&self) -> CgOptions {
        CgOptions {
            epsilon: self.epsilon,
            pricer: self.pricer,
            objective: self.objective,
            max_iterations: self.max_iterations,
            rerun_borderline: self.rerun_borderline,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        let (run, _) = split_run_keys(table, &[])?;
        Ok(run)
    }
}

const RUN_KEYS: [&str; 7] = [
    "profile",
    "epsilon",
    "seed",
    "objective",
    "pricer",
    "rerun_borderline",
    "max_iterations",
];

fn parse_err(key: &str, want: &str) -> ConfigError {
    ConfigError::Parse(format!("`{key}` must be {want}"))
}

/// Separates run-level keys (and any `extra` keys, returned untouched) from
/// scenario keys, which are overlaid on the chosen profile.
fn split_run_keys(mut table: toml::Table, extra: &[&str]) -> Result<(RunConfig, toml::Table), ConfigError> {
    let profile_name = match table.remove("profile") {
        Some(toml::Value::String(s)) => s,
        Some(_) => return Err(parse_err("profile", "a string")),
        None => "table1".to_string(),
    };
    let mut run = RunConfig::for_profile(&profile_name)?;
    let mut rest = toml::Table::new();
    for key in extra {
        if let Some(v) = table.remove(*key) {
            rest.insert((*key).to_string(), v);
        }
    }
    if let Some(v) = table.remove("epsilon") {
        run.epsilon = v.as_float().or(v.as_integer().map(|i| i as f64)).ok_or_else(|| parse_err("epsilon", "a number"))?;
    }
    if let Some(v) = table.remove("seed") {
        run.seed = v
            .as_integer()
            .and_then(|i| u64::try_from(i).ok())
            .ok_or_else(|| parse_err("seed", "a nonnegative integer"))?;
    }
    if let Some(v) = table.remove("objective") {
        run.objective = match v.as_str() {
            Some("min_schedule") => Objective::MinSchedule,
            Some("max_throughput") => Objective::MaxThroughput,
            _ => return Err(parse_err("objective", "\"min_schedule\" or \"max_throughput\"")),
        };
    }
    if let Some(v) = table.remove("pricer") {
        run.pricer = v
            .as_str()
            .and_then(|s| PricerKind::from_str(s).ok())
            .ok_or_else(|| parse_err("pricer", "\"exact\" or \"sequential_fixing\""))?;
    }
    if let Some(v) = table.remove("rerun_borderline") {
        run.rerun_borderline = v.as_bool().ok_or_else(|| parse_err("rerun_borderline", "a boolean"))?;
    }
    if let Some(v) = table.remove("max_iterations") {
        run.max_iterations = Some(
            v.as_integer()
                .and_then(|i| usize::try_from(i).ok())
                .ok_or_else(|| parse_err("max_iterations", "a nonnegative integer"))?,
        );
    }
    debug_assert!(RUN_KEYS.iter().all(|k| !table.contains_key(*k)));
    if !table.is_empty() {
        let base = toml::Table::try_from(&run.scenario).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let mut merged = base;
        for (k, v) in table {
            merged.insert(k, v);
        }
        run.scenario = merged.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    }
    run.scenario.validate()?;
    if !(run.epsilon >= 0.0 && run.epsilon.is_finite()) {
        return Err(parse_err("epsilon", "finite and >= 0"));
    }
    Ok((run, rest))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Per-SBS cache in GB (1e9 bytes).
    CacheSize,
    NFiles,
    NUsers,
    NSbs,
    /// SBS transmission range in metres.
    TxRange,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::CacheSize => "cache_size",
            SweepAxis::NFiles => "n_files",
            SweepAxis::NUsers => "n_users",
            SweepAxis::NSbs => "n_sbs",
            SweepAxis::TxRange => "tx_range",
        }
    }

    fn is_count(self) -> bool {
        matches!(self, SweepAxis::NFiles | SweepAxis::NUsers | SweepAxis::NSbs)
    }

    pub fn apply(self, base: &ScenarioConfig, value: f64) -> ScenarioConfig {
        let mut c = base.clone();
        match self {
            SweepAxis::CacheSize => c.cache_bytes = CacheSpec::Uniform(value * 1e9),
            SweepAxis::NFiles => c.n_files = value as usize,
            SweepAxis::NUsers => c.n_users = value as usize,
            SweepAxis::NSbs => {
                c.n_sbs = value as usize;
                if let CacheSpec::PerSbs(list) = &c.cache_bytes {
                    let mean = if list.is_empty() { 0.0 } else { list.iter().sum::<f64>() / list.len() as f64 };
                    c.cache_bytes = CacheSpec::Uniform(mean);
                }
            }
            SweepAxis::TxRange => c.tx_range_m = value,
        }
        c
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cache_size" => Ok(SweepAxis::CacheSize),
            "n_files" => Ok(SweepAxis::NFiles),
            "n_users" => Ok(SweepAxis::NUsers),
            "n_sbs" => Ok(SweepAxis::NSbs),
            "tx_range" => Ok(SweepAxis::TxRange),
            other => Err(format!("unknown sweep axis `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub base: RunConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Seeds `base.seed .. base.seed + seeds`.
    pub seeds: usize,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.values.is_empty() {
            return Err(ConfigError::Sweep("no axis values".into()));
        }
        if self.values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(ConfigError::Sweep("axis values must be positive".into()));
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::Sweep("axis values must be strictly increasing".into()));
        }
        if self.axis.is_count() && self.values.iter().any(|v| v.fract() != 0.0) {
            return Err(ConfigError::Sweep(format!("{} values must be integers", self.axis.name())));
        }
        if self.seeds == 0 {
            return Err(ConfigError::Sweep("seeds must be at least 1".into()));
        }
        for &v in &self.values {
            self.axis.apply(&self.base.scenario, v).validate()?;
        }
        Ok(())
    }

    /// Run keys plus `axis`, `values` and `seeds` in one TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        let (base, rest) = split_run_keys(table, &["axis", "values", "seeds"])?;
        let axis = rest
            .get("axis")
            .and_then(|v| v.as_str())
            .ok_or_else(|| parse_err("axis", "a string"))?
            .parse()
            .map_err(ConfigError::Sweep)?;
        let values = rest
            .get("values")
            .and_then(|v| v.as_array())
            .ok_or_else(|| parse_err("values", "an array of numbers"))?
            .iter()
            .map(|v| v.as_float().or(v.as_integer().map(|i| i as f64)))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| parse_err("values", "an array of numbers"))?;
        let seeds = match rest.get("seeds") {
            None => 1,
            Some(v) => v
                .as_integer()
                .and_then(|i| usize::try_from(i).ok())
                .ok_or_else(|| parse_err("seeds", "a positive integer"))?,
        };
        let sweep = Self {
            base,
            axis,
            values,
            seeds,
        };
        sweep.validate()?;
        Ok(sweep)
    }
}

/// Average per-user rate in Mb/s: total demanded bits over `K · δ · slot`.
pub fn avg_user_rate<S: Scalar>(scenario: &Scenario<S>, delta: S) -> Result<f64, RateError> {
    let demand = scenario.total_demand_bits().to_f64_lossy();
    let delta = delta.to_f64_lossy();
    if demand <= 0.0 {
        return Ok(0.0);
    }
    if !(delta > 0.0) || scenario.users.is_empty() {
        return Err(RateError {
            delta,
            demand_bits: demand,
        });
    }
    let k = scenario.users.len() as f64;
    Ok(demand / (k * delta * scenario.slot_seconds.to_f64_lossy()) / 1e6)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub axis_value: f64,
    pub seed: u64,
    pub status: String,
    pub delta_u: Option<f64>,
    pub delta_l: Option<f64>,
    pub verdict: Option<String>,
    pub cg_rate_mbps: Option<f64>,
    pub baseline_rate_mbps: Option<f64>,
    pub gain_pct: Option<f64>,
    pub iterations: Option<usize>,
    pub pool_size: Option<usize>,
    pub runtime_ms: f64,
}

pub const SWEEP_COLUMNS: [&str; 13] = [
    "axis",
    "axis_value",
    "seed",
    "status",
    "delta_u",
    "delta_l",
    "verdict",
    "cg_rate_mbps",
    "baseline_rate_mbps",
    "gain_pct",
    "iterations",
    "pool_size",
    "runtime_ms",
];

/// Column generation plus baseline on one generated scenario.
#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub scenario: Scenario<f64>,
    pub cg: CgResult<f64>,
    pub baseline_delta: f64,
    pub cg_rate_mbps: f64,
    pub baseline_rate_mbps: f64,
}

impl PointOutcome {
    pub fn gain_pct(&self) -> f64 {
        if self.baseline_rate_mbps > 0.0 {
            100.0 * (self.cg_rate_mbps - self.baseline_rate_mbps) / self.baseline_rate_mbps
        } else {
            0.0
        }
    }
}

pub fn run_point(scenario: Scenario<f64>, options: &CgOptions) -> Result<PointOutcome, String> {
    let graph = build_conflict_graph(&scenario);
    let cg = run_column_generation_on(&scenario, &graph, options).map_err(|e| format!("cg_error: {e}"))?;
    let base = baseline_schedule(&scenario, &femtocache_assign(&scenario)).map_err(|e| format!("baseline_error: {e}"))?;
    let cg_rate = avg_user_rate(&scenario, cg.delta_u).map_err(|e| format!("rate_error: {e}"))?;
    let base_rate = avg_user_rate(&scenario, base.schedule_length).map_err(|e| format!("rate_error: {e}"))?;
    Ok(PointOutcome {
        scenario,
        cg,
        baseline_delta: base.schedule_length,
        cg_rate_mbps: cg_rate,
        baseline_rate_mbps: base_rate,
    })
}

fn sweep_row(axis: SweepAxis, value: f64, seed: u64, config: &ScenarioConfig, options: &CgOptions) -> SweepRow {
    let start = Instant::now();
    let outcome = generate_scenario::<f64>(config, seed)
        .map_err(|e| format!("scenario_error: {e}"))
        .and_then(|sc| run_point(sc, options));
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut row = SweepRow {
        axis: axis.name().to_string(),
        axis_value: value,
        seed,
        status: String::new(),
        delta_u: None,
        delta_l: None,
        verdict: None,
        cg_rate_mbps: None,
        baseline_rate_mbps: None,
        gain_pct: None,
        iterations: None,
        pool_size: None,
        runtime_ms,
    };
    match outcome {
        Ok(p) => {
            row.status = if p.cg.stalled { "stalled".into() } else { "ok".into() };
            row.delta_u = Some(p.cg.delta_u);
            row.delta_l = Some(p.cg.delta_l);
            row.verdict = Some(p.cg.verdict.to_string());
            row.cg_rate_mbps = Some(p.cg_rate_mbps);
            row.baseline_rate_mbps = Some(p.baseline_rate_mbps);
            row.gain_pct = Some(p.gain_pct());
            row.iterations = Some(p.cg.iterations());
            row.pool_size = Some(p.cg.pool.len());
        }
        Err(msg) => row.status = msg,
    }
    row
}

/// One row per (axis value, seed), in that order.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>, ConfigError> {
    run_sweep_with(config, |_| {})
}

/// As [`run_sweep`], calling `progress` after each row.
pub fn run_sweep_with(config: &SweepConfig, mut progress: impl FnMut(&SweepRow)) -> Result<Vec<SweepRow>, ConfigError> {
    config.validate()?;
    let options = config.base.cg_options();
    let mut rows = Vec::with_capacity(config.values.len() * config.seeds);
    for &value in &config.values {
        let scenario_cfg = config.axis.apply(&config.base.scenario, value);
        for s in 0..config.seeds as u64 {
            let row = sweep_row(config.axis, value, config.base.seed + s, &scenario_cfg, &options);
            progress(&row);
            rows.push(row);
        }
    }
    Ok(rows)
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.axis.clone(),
            r.axis_value.to_string(),
            r.seed.to_string(),
            r.status.clone(),
            opt(&r.delta_u),
            opt(&r.delta_l),
            opt(&r.verdict),
            opt(&r.cg_rate_mbps),
            opt(&r.baseline_rate_mbps),
            opt(&r.gain_pct),
            opt(&r.iterations),
            opt(&r.pool_size),
            format!("{:.3}", r.runtime_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean CG rate per axis value over rows with status `ok`/`stalled`.
pub fn mean_rates(rows: &[SweepRow]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for r in rows {
        let Some(rate) = r.cg_rate_mbps else { continue };
        match out.iter_mut().find(|e| e.0 == r.axis_value) {
            Some(e) => {
                e.1 += rate;
                e.2 += 1;
            }
            None => out.push((r.axis_value, rate, 1)),
        }
    }
    out.into_iter().map(|(v, s, n)| (v, s / n as f64)).collect()
}

/// Limits on randomly drawn oracle-check instances.
pub const TINY_MAX_TUPLES: usize = 15;

/// A random instance with at most 3 SBSs plus the MBS, 4 users,
/// 2 secondary channels, 4 files and 15 tuples. Deterministic in `seed`.
pub fn random_tiny_scenario(seed: u64) -> Scenario<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x7469_6e79);
    for attempt in 0u64.. {
        let n_sec = rng.gen_range(1..=2);
        let cfg = ScenarioConfig {
            n_sbs: rng.gen_range(1..=3),
            n_users: rng.gen_range(1..=4),
            n_files: rng.gen_range(1..=4),
            n_secondary_channels: n_sec,
            channels_per_sbs: rng.gen_range(1..=n_sec),
            channels_per_user: rng.gen_range(1..=n_sec),
            cache_bytes: CacheSpec::Uniform(rng.gen_range(0.0..1.2e9)),
            requests_per_user: rng.gen_range(1..=2),
            antennas_sbs: rng.gen_range(1..=2),
            tx_range_m: rng.gen_range(50.0..120.0),
            ..ScenarioConfig::tiny()
        };
        let sc = generate_scenario::<f64>(&cfg, seed.wrapping_mul(1000).wrapping_add(attempt)).expect("tiny config is valid");
        let q = build_conflict_graph(&sc).len();
        if q <= TINY_MAX_TUPLES {
            return sc;
        }
    }
    unreachable!()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleCheckRow {
    pub seed: u64,
    pub tuples: usize,
    pub delta_oracle: f64,
    pub delta_u: f64,
    pub delta_l: f64,
    pub delta_u_exact: f64,
    pub sandwich_ok: bool,
    pub ratio_ok: bool,
    pub exact_ok: bool,
}

impl OracleCheckRow {
    pub fn passed(&self) -> bool {
        self.sandwich_ok && self.ratio_ok && self.exact_ok
    }
}

/// Column generation (ε and ε = 0, exact pricing) against the full LP.
pub fn oracle_check(seed: u64, epsilon: f64) -> Result<OracleCheckRow, String> {
    let sc = random_tiny_scenario(seed);
    let graph = build_conflict_graph(&sc);
    let oracle = solve_full_lp(&sc, &RmpMode::min_schedule()).map_err(|e| e.to_string())?;
    let opts = CgOptions {
        epsilon,
        pricer: PricerKind::Exact,
        rerun_borderline: false,
        ..CgOptions::default()
    };
    let eps_run = run_column_generation_on(&sc, &graph, &opts).map_err(|e| e.to_string())?;
    let exact_opts = CgOptions { epsilon: 0.0, ..opts };
    let exact_run = run_column_generation_on(&sc, &graph, &exact_opts).map_err(|e| e.to_string())?;
    let d = oracle.delta;
    let tol = 1e-6;
    let scale = 1.0f64.max(d.abs());
    Ok(OracleCheckRow {
        seed,
        tuples: graph.len(),
        delta_oracle: d,
        delta_u: eps_run.delta_u,
        delta_l: eps_run.delta_l,
        delta_u_exact: exact_run.delta_u,
        sandwich_ok: eps_run.delta_l - tol * scale <= d && d <= eps_run.delta_u + tol * scale,
        ratio_ok: d <= 0.0 || eps_run.delta_u / d <= 1.0 + epsilon + tol,
        exact_ok: (exact_run.delta_u - d).abs() <= tol * scale,
    })
}
