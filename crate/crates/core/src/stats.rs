//! Batch experiments, outcome frequencies and Wilson score intervals.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Config;
use crate::model::AgentId;
use crate::simulation::{run_simulation, OutcomeKind, Regime, RunResult, TickRecord};

/// 95% two-sided normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Initial distance differences of the cooperative experiments [m].
pub const COOPERATIVE_DELTAS: [f64; 6] = [-25.0, -15.0, -5.0, -3.0, -1.5, 0.0];

/// Window within which a yield must follow a prompt to count as a response [s].
pub const PROMPT_RESPONSE_WINDOW: f64 = 2.0;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("wilson interval needs n >= 1 and k <= n (k={k}, n={n})")]
    Trials { k: usize, n: usize },
    #[error("grid must have at least one regime, distance and repetition")]
    EmptyGrid,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StatsError + '_ {
    move |source| StatsError::Io { path: path.to_path_buf(), source }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Platform independent hash of a sequence of integers.
pub fn stable_hash(parts: &[u64]) -> u64 {
    let mut h = splitmix64(parts.len() as u64);
    for &p in parts {
        h = splitmix64(h ^ splitmix64(p));
    }
    h
}

/// Wilson score interval for `k` successes in `n` trials, clipped to [0, 1].
pub fn wilson_interval(k: usize, n: usize, z: f64) -> Result<(f64, f64), StatsError> {
    if n == 0 || k > n {
        return Err(StatsError::Trials { k, n });
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (center - half).clamp(0.0, 1.0) };
    let hi = if k == n { 1.0 } else { (center + half).clamp(0.0, 1.0) };
    Ok((lo, hi))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionGrid {
    pub regimes: Vec<Regime>,
    pub delta_d0: Vec<f64>,
    pub reps: usize,
}

impl ConditionGrid {
    pub fn cooperative(regimes: &[Regime], reps: usize) -> Self {
        Self { regimes: regimes.to_vec(), delta_d0: COOPERATIVE_DELTAS.to_vec(), reps }
    }

    /// Adversarial sweep over `[-10, 0]` m in steps of `step`.
    pub fn adversarial(step: f64, reps: usize) -> Self {
        let n = (10.0 / step).round() as usize;
        let delta_d0 = (0..=n).map(|i| -10.0 + i as f64 * 10.0 / n as f64).collect();
        Self { regimes: vec![Regime::Adversarial], delta_d0, reps }
    }

    pub fn conditions(&self) -> Vec<(Regime, f64)> {
        self.regimes.iter().flat_map(|&r| self.delta_d0.iter().map(move |&d| (r, d))).collect()
    }

    pub fn len(&self) -> usize {
        self.regimes.len() * self.delta_d0.len() * self.reps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Seed of one repetition. The regime is left out so regimes are compared on paired seeds.
///
/// Kept below 2^63 so it survives a round trip through a TOML integer.
pub fn run_seed(base_seed: u64, delta_d0: f64, rep: usize) -> u64 {
    // -0.0 and 0.0 name the same condition
    let d = if delta_d0 == 0.0 { 0.0f64 } else { delta_d0 };
    stable_hash(&[base_seed, d.to_bits(), rep as u64]) >> 1
}

/// Whether some agent prompted and the other agent started yielding within `window` seconds.
pub fn prompt_then_yield(log: &[TickRecord], window: f64) -> bool {
    let onsets = |id: AgentId| -> Vec<f64> {
        let mut prev = 0u8;
        let mut out = Vec::new();
        for r in log.iter().filter(|r| r.agent == id) {
            if r.gamma_y == 1 && prev == 0 {
                out.push(r.t);
            }
            prev = r.gamma_y;
        }
        out
    };
    AgentId::ALL.into_iter().any(|id| {
        let yields = onsets(id.other());
        log.iter()
            .filter(|r| r.agent == id && r.gamma_a == 1)
            .any(|p| yields.iter().any(|&t| t > p.t + 1e-9 && t <= p.t + window + 1e-9))
    })
}

/// One simulation inside a batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub regime: Regime,
    pub delta_d0: f64,
    pub rep: usize,
    pub seed: u64,
    pub kind: Option<OutcomeKind>,
    pub t_cross_a: Option<f64>,
    pub t_cross_b: Option<f64>,
    pub min_gap: Option<f64>,
    pub impact_speed: Option<f64>,
    pub t_end: Option<f64>,
    pub first_replan_a: Option<f64>,
    pub first_replan_b: Option<f64>,
    pub replans_a: usize,
    pub replans_b: usize,
    pub prompt_then_yield: bool,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn from_result(regime: Regime, delta_d0: f64, rep: usize, seed: u64, res: Result<&RunResult, String>) -> Self {
        let mut r = RunRecord {
            regime,
            delta_d0,
            rep,
            seed,
            kind: None,
            t_cross_a: None,
            t_cross_b: None,
            min_gap: None,
            impact_speed: None,
            t_end: None,
            first_replan_a: None,
            first_replan_b: None,
            replans_a: 0,
            replans_b: 0,
            prompt_then_yield: false,
            error: None,
        };
        match res {
            Ok(res) => {
                let o = &res.outcome;
                r.kind = Some(o.kind);
                r.t_cross_a = o.t_cross_a;
                r.t_cross_b = o.t_cross_b;
                r.min_gap = o.min_gap.is_finite().then_some(o.min_gap);
                r.impact_speed = o.impact_speed;
                r.t_end = Some(o.t_end);
                r.first_replan_a = res.first_replan(AgentId::A);
                r.first_replan_b = res.first_replan(AgentId::B);
                r.replans_a = res.replan_times[0].len();
                r.replans_b = res.replan_times[1].len();
                r.prompt_then_yield = prompt_then_yield(&res.log, PROMPT_RESPONSE_WINDOW);
            }
            Err(e) => r.error = Some(e),
        }
        r
    }

    pub fn first_replan(&self, id: AgentId) -> Option<f64> {
        match id {
            AgentId::A => self.first_replan_a,
            AgentId::B => self.first_replan_b,
        }
    }
}

/// Aggregate of one (regime, distance) condition.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionSummary {
    pub regime: Regime,
    pub delta_d0: f64,
    /// Runs that finished with an outcome.
    pub n: usize,
    pub failed: usize,
    /// Indexed like `OutcomeKind::ALL`.
    pub counts: [usize; 4],
}

impl ConditionSummary {
    pub fn count(&self, kind: OutcomeKind) -> usize {
        self.counts[kind_index(kind)]
    }

    pub fn proportion(&self, kind: OutcomeKind) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.count(kind) as f64 / self.n as f64
        }
    }

    pub fn interval(&self, kind: OutcomeKind) -> Option<(f64, f64)> {
        wilson_interval(self.count(kind), self.n, Z95).ok()
    }
}

fn kind_index(kind: OutcomeKind) -> usize {
    OutcomeKind::ALL.iter().position(|&k| k == kind).expect("kind listed")
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutcomeTable {
    pub rows: Vec<ConditionSummary>,
}

impl OutcomeTable {
    /// Aggregates records, ordered by the first appearance of each condition in `grid`.
    pub fn from_records(grid: &ConditionGrid, records: &[RunRecord]) -> Self {
        let rows = grid
            .conditions()
            .into_iter()
            .map(|(regime, delta_d0)| {
                let mut row = ConditionSummary { regime, delta_d0, n: 0, failed: 0, counts: [0; 4] };
                for r in records.iter().filter(|r| r.regime == regime && r.delta_d0 == delta_d0) {
                    match r.kind {
                        Some(k) => {
                            row.n += 1;
                            row.counts[kind_index(k)] += 1;
                        }
                        None => row.failed += 1,
                    }
                }
                row
            })
            .collect();
        Self { rows }
    }

    pub fn get(&self, regime: Regime, delta_d0: f64) -> Option<&ConditionSummary> {
        self.rows.iter().find(|r| r.regime == regime && (r.delta_d0 - delta_d0).abs() < 1e-9)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().map(|r| r.failed).sum()
    }
}

/// Raw records sorted by condition and repetition plus their aggregate.
#[derive(Clone, Debug)]
pub struct BatchResult {
    pub table: OutcomeTable,
    pub records: Vec<RunRecord>,
    /// False when the batch was stopped before every run finished.
    pub complete: bool,
}

/// Batch settings besides the grid.
#[derive(Clone, Copy, Debug)]
pub struct BatchOptions<'a> {
    pub base_seed: u64,
    pub jobs: usize,
    /// Checked before each run starts; set it to stop early.
    pub stop: Option<&'a AtomicBool>,
}

impl Default for BatchOptions<'_> {
    fn default() -> Self {
        Self { base_seed: 0, jobs: 1, stop: None }
    }
}

/// Runs every (condition, repetition) of `grid` on top of `base`.
///
/// `on_record` sees records in completion order; the returned list is sorted.
pub fn run_batch(
    base: &Config,
    grid: &ConditionGrid,
    opts: BatchOptions<'_>,
    mut on_record: impl FnMut(&RunRecord),
) -> Result<BatchResult, StatsError> {
    run_batch_with(base, grid, opts, |_| (), |r, _| on_record(r)).map(|(b, _)| b)
}

/// Like [`run_batch`], additionally applying `probe` to every finished simulation.
///
/// The probe values are aligned with `BatchResult::records`; failed runs give `None`.
pub fn run_batch_with<T: Send>(
    base: &Config,
    grid: &ConditionGrid,
    opts: BatchOptions<'_>,
    probe: impl Fn(&RunResult) -> T + Sync,
    mut on_record: impl FnMut(&RunRecord, Option<&T>),
) -> Result<(BatchResult, Vec<Option<T>>), StatsError> {
    if grid.is_empty() {
        return Err(StatsError::EmptyGrid);
    }
    let mut jobs = Vec::with_capacity(grid.len());
    for (ci, (regime, d)) in grid.conditions().into_iter().enumerate() {
        for rep in 0..grid.reps {
            jobs.push((ci, regime, d, rep));
        }
    }
    let next = AtomicUsize::new(0);
    let workers = opts.jobs.max(1).min(jobs.len());
    let stopped = || opts.stop.is_some_and(|s| s.load(Ordering::SeqCst));
    let mut out: Vec<(usize, usize, RunRecord, Option<T>)> = Vec::with_capacity(jobs.len());
    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel();
        for _ in 0..workers {
            let tx = tx.clone();
            let (jobs, next, probe) = (&jobs, &next, &probe);
            scope.spawn(move || loop {
                if stopped() {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(ci, regime, d, rep)) = jobs.get(i) else { break };
                let mut cfg = base.clone();
                cfg.scenario.regime = regime;
                cfg.scenario.delta_d0 = d;
                let seed = run_seed(opts.base_seed, d, rep);
                cfg.scenario.seed = seed;
                cfg.apply_regime();
                let res = run_simulation(&cfg).map_err(|e| e.to_string());
                let value = res.as_ref().ok().map(probe);
                let rec = RunRecord::from_result(regime, d, rep, seed, res.as_ref().map_err(Clone::clone));
                if tx.send((ci, rep, rec, value)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for item in rx {
            on_record(&item.2, item.3.as_ref());
            out.push(item);
        }
    });
    out.sort_by_key(|(ci, rep, _, _)| (*ci, *rep));
    let complete = out.len() == jobs.len();
    let (records, values): (Vec<RunRecord>, Vec<Option<T>>) = out.into_iter().map(|(_, _, r, v)| (r, v)).unzip();
    let table = OutcomeTable::from_records(grid, &records);
    Ok((BatchResult { table, records, complete }, values))
}

pub const TABLE_HEADER: [&str; 9] =
    ["regime", "delta_d0", "kind", "count", "prop", "wilson_lo", "wilson_hi", "n", "failed"];

pub fn write_table_csv(path: &Path, table: &OutcomeTable) -> Result<(), StatsError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    let fmt_err = |e: csv::Error| StatsError::Format { path: path.to_path_buf(), msg: e.to_string() };
    w.write_record(TABLE_HEADER).map_err(fmt_err)?;
    for row in &table.rows {
        for kind in OutcomeKind::ALL {
            let (lo, hi) = row.interval(kind).map_or((String::new(), String::new()), |(l, h)| {
                (format!("{l:.6}"), format!("{h:.6}"))
            });
            w.write_record([
                row.regime.name().to_string(),
                row.delta_d0.to_string(),
                kind.name().to_string(),
                row.count(kind).to_string(),
                format!("{:.6}", row.proportion(kind)),
                lo,
                hi,
                row.n.to_string(),
                row.failed.to_string(),
            ])
            .map_err(fmt_err)?;
        }
    }
    w.flush().map_err(io_err(path))
}

pub fn read_table_csv(path: &Path) -> Result<OutcomeTable, StatsError> {
    let bad = |msg: String| StatsError::Format { path: path.to_path_buf(), msg };
    let mut rd = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let mut table = OutcomeTable::default();
    for rec in rd.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| rec.get(i).ok_or_else(|| bad(format!("missing column {}", TABLE_HEADER[i])));
        let regime: Regime = field(0)?.parse().map_err(bad)?;
        let delta_d0: f64 = field(1)?.parse().map_err(|e| bad(format!("{e}")))?;
        let kind: OutcomeKind = field(2)?.parse().map_err(bad)?;
        let count: usize = field(3)?.parse().map_err(|e| bad(format!("{e}")))?;
        let n: usize = field(7)?.parse().map_err(|e| bad(format!("{e}")))?;
        let failed: usize = field(8)?.parse().map_err(|e| bad(format!("{e}")))?;
        let pos = table.rows.iter().position(|r| r.regime == regime && r.delta_d0 == delta_d0);
        let row = match pos {
            Some(i) => &mut table.rows[i],
            None => {
                table.rows.push(ConditionSummary { regime, delta_d0, n, failed, counts: [0; 4] });
                table.rows.last_mut().expect("just pushed")
            }
        };
        row.counts[kind_index(kind)] = count;
    }
    Ok(table)
}

pub fn write_records_jsonl(path: &Path, records: &[RunRecord]) -> Result<(), StatsError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| StatsError::Format { path: path.to_path_buf(), msg: e.to_string() })?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_records_jsonl(path: &Path) -> Result<Vec<RunRecord>, StatsError> {
    let f = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| StatsError::Format { path: path.to_path_buf(), msg: e.to_string() })?,
        );
    }
    Ok(out)
}

fn mean_ci(xs: &[f64]) -> Option<(f64, f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return Some((m, m, m));
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let h = Z95 * (var / n).sqrt();
    Some((m, m - h, m + h))
}

/// Mean first re-plan time of `id` over the successful runs of a condition.
pub fn mean_first_replan(records: &[RunRecord], regime: Regime, delta_d0: f64, id: AgentId) -> Option<(f64, f64, f64)> {
    let xs: Vec<f64> = records
        .iter()
        .filter(|r| r.regime == regime && (r.delta_d0 - delta_d0).abs() < 1e-9)
        .filter_map(|r| r.first_replan(id))
        .collect();
    mean_ci(&xs)
}

/// Long format: one row per (regime, delta_d0, series).
///
/// Series are `prop_<kind>` with Wilson bounds, and `first_replan_a`/`first_replan_b`
/// means with normal 95% bounds.
pub fn write_plot_csv(path: &Path, table: &OutcomeTable, records: &[RunRecord]) -> Result<(), StatsError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    let fmt_err = |e: csv::Error| StatsError::Format { path: path.to_path_buf(), msg: e.to_string() };
    w.write_record(["regime", "delta_d0", "series", "value", "lo", "hi", "n"]).map_err(fmt_err)?;
    for row in &table.rows {
        for kind in OutcomeKind::ALL {
            let (lo, hi) = row.interval(kind).unwrap_or((f64::NAN, f64::NAN));
            w.write_record([
                row.regime.name().to_string(),
                row.delta_d0.to_string(),
                format!("prop_{}", kind.name()),
                format!("{:.6}", row.proportion(kind)),
                format!("{lo:.6}"),
                format!("{hi:.6}"),
                row.n.to_string(),
            ])
            .map_err(fmt_err)?;
        }
        for id in AgentId::ALL {
            let n = records
                .iter()
                .filter(|r| r.regime == row.regime && r.delta_d0 == row.delta_d0 && r.first_replan(id).is_some())
                .count();
            if let Some((m, lo, hi)) = mean_first_replan(records, row.regime, row.delta_d0, id) {
                w.write_record([
                    row.regime.name().to_string(),
                    row.delta_d0.to_string(),
                    format!("first_replan_{}", id.to_string().to_lowercase()),
                    format!("{m:.6}"),
                    format!("{lo:.6}"),
                    format!("{hi:.6}"),
                    n.to_string(),
                ])
                .map_err(fmt_err)?;
            }
        }
    }
    w.flush().map_err(io_err(path))
}

/// Paths written by `emit_outputs`.
#[derive(Clone, Debug)]
pub struct OutputPaths {
    pub table: PathBuf,
    pub raw: PathBuf,
    pub plot: PathBuf,
}

/// Writes `outcomes.csv`, `runs.jsonl` and `plot.csv` into `dir`.
pub fn emit_outputs(dir: &Path, table: &OutcomeTable, records: &[RunRecord]) -> Result<OutputPaths, StatsError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let paths = OutputPaths {
        table: dir.join("outcomes.csv"),
        raw: dir.join("runs.jsonl"),
        plot: dir.join("plot.csv"),
    };
    write_table_csv(&paths.table, table)?;
    write_records_jsonl(&paths.raw, records)?;
    write_plot_csv(&paths.plot, table, records)?;
    Ok(paths)
}
