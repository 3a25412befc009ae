// SPDX-License-Identifier: MIT OR Apache-2.0

//! Replicate sweeps over `(n, sigma, omega)` cells.
//!
//! Replicate `r` of every cell uses seed `base_seed + r`, so a row depends
//! only on its cell and seed. Rows are appended and flushed as workers finish
//! them; once the sweep completes the file is rewritten sorted by cell (in
//! configuration order) and seed, which makes the result independent of the
//! worker count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use blockseg::eval::{hausdorff, CellSummary, ReplicateOutcome};
use blockseg::{generate, select_k, GroundTruth, MeanModel, PrefixStats, SegConfig, SimSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const ROW_HEADER: &str = "n,sigma,omega,seed,k_hat,h1,h2,runtime_ms";
pub const AGGREGATE_HEADER: &str = "n,sigma,omega,k_star,replicates,\
k_hat_q1,k_hat_median,k_hat_q3,h1_q1,h1_median,h1_q3,h2_q1,h2_median,h2_q3,\
frac_k_hat_eq_k_star,frac_k_hat_gt_k_star,frac_k_hat_lt_k_star";

/// Environment variable that sets the worker count.
pub const JOBS_ENV: &str = "BLOCKSEG_JOBS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthTemplate {
    pub tau: Vec<f64>,
    pub mu: Vec<f64>,
    #[serde(default)]
    pub mu0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_values: Vec<usize>,
    pub sigma_values: Vec<f64>,
    #[serde(default = "default_omegas")]
    pub omega_values: Vec<f64>,
    pub replicates: u64,
    #[serde(default)]
    pub base_seed: u64,
    pub truth: TruthTemplate,
    #[serde(default)]
    pub seg: SegConfig,
    /// Worker threads; all available cores when absent.
    #[serde(default)]
    pub jobs: Option<usize>,
    /// Fill the runtime_ms column.
    #[serde(default)]
    pub record_runtime: bool,
}

fn default_omegas() -> Vec<f64> {
    vec![0.0]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub n: usize,
    pub sigma: f64,
    pub omega: f64,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let parsed = match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => {
                serde_json::from_str(&text).map_err(|e| e.to_string())
            }
            _ => toml::from_str(&text).map_err(|e| e.to_string()),
        };
        parsed.map_err(|message| CliError::Parse {
            path: path.to_owned(),
            message,
        })
    }

    /// Cells in sweep order: `n` outermost, then `sigma`, then `omega`.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &n in &self.n_values {
            for &sigma in &self.sigma_values {
                for &omega in &self.omega_values {
                    out.push(Cell { n, sigma, omega });
                }
            }
        }
        out
    }

    pub fn truth(&self, cell: &Cell) -> GroundTruth {
        GroundTruth {
            tau: self.truth.tau.clone(),
            mu: self.truth.mu.clone(),
            mu0: self.truth.mu0,
            sigma: cell.sigma,
            omega: cell.omega,
        }
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.replicates).map(|r| self.base_seed.wrapping_add(r))
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: &str| Err(blockseg::Error::Config(m.to_owned()).into());
        if self.n_values.is_empty() || self.sigma_values.is_empty() || self.omega_values.is_empty()
        {
            return bad("n_values, sigma_values and omega_values must be non-empty");
        }
        if self.replicates == 0 {
            return bad("replicates must be positive");
        }
        if self.jobs == Some(0) {
            return bad("jobs must be positive");
        }
        if self
            .sigma_values
            .iter()
            .any(|s| !(s.is_finite() && *s >= 0.0))
        {
            return bad("sigma values must be finite and non-negative");
        }
        if self.omega_values.iter().any(|w| !w.is_finite()) {
            return bad("omega values must be finite");
        }
        let cells = self.cells();
        let distinct: std::collections::BTreeSet<_> = cells.iter().map(cell_key).collect();
        if distinct.len() != cells.len() {
            return bad("the sweep lists the same (n, sigma, omega) cell twice");
        }
        for cell in cells {
            let limits = self.seg.limits(cell.n)?;
            MeanModel::new(&self.truth(&cell), &limits, self.seg.c)?;
        }
        Ok(())
    }
}

/// One line of the replicate CSV.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Row {
    pub n: usize,
    pub sigma: f64,
    pub omega: f64,
    pub seed: u64,
    pub k_hat: usize,
    pub h1: usize,
    pub h2: usize,
    pub runtime_ms: Option<f64>,
}

type RowKey = (usize, u64, u64, u64);

impl Row {
    fn key(&self) -> RowKey {
        (
            self.n,
            self.sigma.to_bits(),
            self.omega.to_bits(),
            self.seed,
        )
    }

    pub fn to_line(&self) -> String {
        let mut s = format!(
            "{},{},{},{},{},{},{},",
            self.n, self.sigma, self.omega, self.seed, self.k_hat, self.h1, self.h2
        );
        if let Some(ms) = self.runtime_ms {
            write!(s, "{ms:.3}").unwrap();
        }
        s
    }

    /// `None` for anything that is not a complete row.
    pub fn parse(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.trim_end_matches('\r').split(',').collect();
        if f.len() != 8 {
            return None;
        }
        let finite = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite());
        Some(Self {
            n: f[0].parse().ok()?,
            sigma: finite(f[1])?,
            omega: finite(f[2])?,
            seed: f[3].parse().ok()?,
            k_hat: f[4].parse().ok()?,
            h1: f[5].parse().ok()?,
            h2: f[6].parse().ok()?,
            runtime_ms: if f[7].is_empty() {
                None
            } else {
                Some(finite(f[7])?)
            },
        })
    }

    fn cell(&self) -> Cell {
        Cell {
            n: self.n,
            sigma: self.sigma,
            omega: self.omega,
        }
    }
}

fn cell_key(c: &Cell) -> (usize, u64, u64) {
    (c.n, c.sigma.to_bits(), c.omega.to_bits())
}

/// Simulates, segments and scores one replicate.
pub fn run_replicate(
    cfg: &ExperimentConfig,
    cell: &Cell,
    seed: u64,
    timing: bool,
) -> CliResult<Row> {
    let start = Instant::now();
    let spec = SimSpec {
        n: cell.n,
        truth: cfg.truth(cell),
        seed,
        noise: Default::default(),
    };
    let sim = generate(&spec, &cfg.seg)?;
    let stats = PrefixStats::build(&sim.matrix, &cfg.seg)?;
    drop(sim.matrix);
    let result = select_k(&stats)?;
    drop(stats);
    let h = hausdorff(&sim.truth_boundaries, &result.boundaries_hat)?;
    Ok(Row {
        n: cell.n,
        sigma: cell.sigma,
        omega: cell.omega,
        seed,
        k_hat: result.k_hat,
        h1: h.h1,
        h2: h.h2,
        runtime_ms: timing.then(|| start.elapsed().as_secs_f64() * 1e3),
    })
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub resume: bool,
    /// Overrides [`JOBS_ENV`] and the configuration file.
    pub jobs: Option<usize>,
    /// Forces the runtime column on.
    pub timing: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunSummary {
    pub cells: usize,
    pub rows: usize,
    pub computed: usize,
    pub resumed: usize,
    pub aggregate: PathBuf,
}

/// `results.csv` becomes `results.aggregate.csv`.
pub fn aggregate_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy())
        .unwrap_or_default();
    output.with_file_name(format!("{stem}.aggregate.csv"))
}

fn resolve_jobs(cfg: &ExperimentConfig, opts: &RunOptions) -> CliResult<usize> {
    if let Some(j) = opts.jobs {
        return Ok(j);
    }
    if let Ok(v) = std::env::var(JOBS_ENV) {
        return v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&j| j > 0)
            .ok_or_else(|| {
                CliError::Usage(format!("{JOBS_ENV} must be a positive integer, got {v:?}"))
            });
    }
    Ok(cfg
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |p| p.get())))
}

/// Reads every well-formed row of a replicate CSV. Malformed lines, including
/// a torn final line, are skipped.
pub fn read_rows(path: &Path) -> CliResult<Vec<Row>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_rows(path, &text)
}

fn parse_rows(path: &Path, text: &str) -> CliResult<Vec<Row>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end_matches('\r') == ROW_HEADER => {}
        None => return Ok(Vec::new()),
        Some(h) => {
            return Err(CliError::Parse {
                path: path.to_owned(),
                message: format!("unexpected header {h:?}, expected {ROW_HEADER:?}"),
            })
        }
    }
    Ok(lines.filter_map(Row::parse).collect())
}

/// Opens the output for appending. With `resume`, returns rows already on
/// disk; otherwise truncates and writes the header.
fn open_output(path: &Path, resume: bool) -> CliResult<(File, Vec<Row>)> {
    let err = |e| CliError::io(path, e);
    if resume && path.exists() {
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .open(path)
            .map_err(err)?;
        let mut text = String::new();
        file.read_to_string(&mut text).map_err(err)?;
        let rows = parse_rows(path, &text)?;
        if text.is_empty() {
            writeln!(file, "{ROW_HEADER}").map_err(err)?;
        } else if !text.ends_with('\n') {
            writeln!(file).map_err(err)?;
        }
        return Ok((file, rows));
    }
    let mut file = File::create(path).map_err(err)?;
    writeln!(file, "{ROW_HEADER}").map_err(err)?;
    Ok((file, Vec::new()))
}

pub fn run_experiment(
    cfg: &ExperimentConfig,
    output: &Path,
    opts: &RunOptions,
) -> CliResult<RunSummary> {
    cfg.validate()?;
    let cells = cfg.cells();
    let index: BTreeMap<(usize, u64, u64), usize> = cells
        .iter()
        .enumerate()
        .map(|(i, c)| (cell_key(c), i))
        .collect();
    let seed_range = cfg.base_seed..cfg.base_seed.saturating_add(cfg.replicates);
    let jobs = resolve_jobs(cfg, opts)?;
    let timing = opts.timing || cfg.record_runtime;

    let (mut file, existing) = open_output(output, opts.resume)?;
    let mut done: BTreeMap<RowKey, Row> = BTreeMap::new();
    for row in existing {
        if index.contains_key(&cell_key(&row.cell())) && seed_range.contains(&row.seed) {
            done.entry(row.key()).or_insert(row);
        }
    }
    let resumed = done.len();

    let mut tasks = Vec::new();
    for cell in &cells {
        for seed in cfg.seeds() {
            let key = (cell.n, cell.sigma.to_bits(), cell.omega.to_bits(), seed);
            if !done.contains_key(&key) {
                tasks.push((*cell, seed));
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} workers: {e}")))?;
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<CliResult<Row>>();
    let mut failure = None;
    let mut computed = 0;
    std::thread::scope(|scope| {
        let tasks = &tasks;
        let stop = &stop;
        scope.spawn(move || {
            pool.install(|| {
                tasks.par_iter().for_each_with(tx, |tx, (cell, seed)| {
                    if stop.load(Ordering::Relaxed) {
                        return;
                    }
                    let _ = tx.send(run_replicate(cfg, cell, *seed, timing));
                });
            });
        });
        for msg in rx {
            let row = match msg {
                Ok(row) => row,
                Err(e) => {
                    stop.store(true, Ordering::Relaxed);
                    failure.get_or_insert(e);
                    continue;
                }
            };
            let written = writeln!(file, "{}", row.to_line()).and_then(|()| file.flush());
            if let Err(e) = written {
                stop.store(true, Ordering::Relaxed);
                failure.get_or_insert(CliError::io(output, e));
                continue;
            }
            done.insert(row.key(), row);
            computed += 1;
        }
    });
    drop(file);
    if let Some(e) = failure {
        return Err(e);
    }

    let mut rows: Vec<Row> = done.into_values().collect();
    rows.sort_by_key(|r| (index[&cell_key(&r.cell())], r.seed));
    write_atomically(output, &render_rows(&rows))?;
    let aggregate = aggregate_path(output);
    write_atomically(&aggregate, &render_aggregate(cfg, &cells, &rows))?;
    Ok(RunSummary {
        cells: cells.len(),
        rows: rows.len(),
        computed,
        resumed,
        aggregate,
    })
}

fn render_rows(rows: &[Row]) -> String {
    let mut s = String::with_capacity(48 * (rows.len() + 1));
    s.push_str(ROW_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.to_line());
        s.push('\n');
    }
    s
}

/// Per-cell summaries in sweep order.
pub fn summarize(cfg: &ExperimentConfig, cells: &[Cell], rows: &[Row]) -> Vec<(Cell, CellSummary)> {
    let k_star = cfg.truth.mu.len();
    cells
        .iter()
        .filter_map(|cell| {
            let outcomes: Vec<ReplicateOutcome> = rows
                .iter()
                .filter(|r| cell_key(&r.cell()) == cell_key(cell))
                .map(|r| ReplicateOutcome {
                    k_hat: r.k_hat,
                    h1: r.h1,
                    h2: r.h2,
                })
                .collect();
            CellSummary::of(k_star, &outcomes).map(|s| (*cell, s))
        })
        .collect()
}

fn render_aggregate(cfg: &ExperimentConfig, cells: &[Cell], rows: &[Row]) -> String {
    let mut s = String::new();
    s.push_str(AGGREGATE_HEADER);
    s.push('\n');
    for (c, a) in summarize(cfg, cells, rows) {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.n,
            c.sigma,
            c.omega,
            a.k_star,
            a.replicates,
            a.k_hat.q1,
            a.k_hat.median,
            a.k_hat.q3,
            a.h1.q1,
            a.h1.median,
            a.h1.q3,
            a.h2.q1,
            a.h2.median,
            a.h2.q3,
            a.frac_k_hat_eq,
            a.frac_k_hat_gt,
            a.frac_k_hat_lt
        )
        .unwrap();
    }
    s
}

fn write_atomically(path: &Path, text: &str) -> CliResult<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let err = |e| CliError::io(path, e);
    {
        let mut w = BufWriter::new(File::create(&tmp).map_err(err)?);
        w.write_all(text.as_bytes()).map_err(err)?;
        w.flush().map_err(err)?;
    }
    std::fs::rename(&tmp, path).map_err(err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            n_values: vec![24, 30],
            sigma_values: vec![0.5, 1.0],
            omega_values: vec![0.0],
            replicates: 3,
            base_seed: 7,
            truth: TruthTemplate {
                tau: vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0],
                mu: vec![1.0, 2.0, 1.0],
                mu0: 0.0,
            },
            seg: SegConfig {
                k_max: 6,
                ..SegConfig::default()
            },
            jobs: None,
            record_runtime: false,
        }
    }

    #[test]
    fn row_round_trip() {
        let r = Row {
            n: 500,
            sigma: 0.1,
            omega: -0.25,
            seed: 42,
            k_hat: 5,
            h1: 3,
            h2: 0,
            runtime_ms: None,
        };
        assert_eq!(r.to_line(), "500,0.1,-0.25,42,5,3,0,");
        assert_eq!(Row::parse(&r.to_line()), Some(r));
        let timed = Row {
            runtime_ms: Some(1.5),
            ..r
        };
        assert_eq!(Row::parse(&timed.to_line()), Some(timed));
        for bad in [
            "",
            "500,1,0,1,5,0",
            "500,1,0,1,5,0,0,x",
            "500,NaN,0,1,5,0,0,",
            "5,1,0,1,5,0,0,,",
        ] {
            assert_eq!(Row::parse(bad), None, "{bad:?}");
        }
    }

    #[test]
    fn aggregate_name() {
        assert_eq!(
            aggregate_path(Path::new("out/r.csv")),
            Path::new("out/r.aggregate.csv")
        );
        assert_eq!(aggregate_path(Path::new("r")), Path::new("r.aggregate.csv"));
    }

    #[test]
    fn cell_order_and_validation() {
        let cfg = small();
        let cells = cfg.cells();
        assert_eq!(cells.len(), 4);
        assert_eq!((cells[1].n, cells[1].sigma), (24, 1.0));
        assert!(cfg.validate().is_ok());
        let mut bad = small();
        bad.replicates = 0;
        assert_eq!(bad.validate().unwrap_err().exit_code(), 3);
        let mut bad = small();
        bad.n_values = vec![5];
        assert_eq!(bad.validate().unwrap_err().exit_code(), 3);
    }

    #[test]
    fn sorted_and_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        let opts = |jobs| RunOptions {
            jobs: Some(jobs),
            ..RunOptions::default()
        };
        let sa = run_experiment(&cfg, &a, &opts(1)).unwrap();
        run_experiment(&cfg, &b, &opts(3)).unwrap();
        assert_eq!(sa.rows, 12);
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let rows = read_rows(&a).unwrap();
        assert_eq!(rows[0].seed, 7);
        assert_eq!((rows[3].n, rows[3].sigma, rows[3].seed), (24, 1.0, 7));
        let agg = std::fs::read_to_string(dir.path().join("a.aggregate.csv")).unwrap();
        assert_eq!(agg.lines().count(), 5);
    }

    #[test]
    fn resume_completes_a_truncated_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small();
        let full = dir.path().join("full.csv");
        run_experiment(&cfg, &full, &RunOptions::default()).unwrap();
        let text = std::fs::read_to_string(&full).unwrap();
        let part = dir.path().join("part.csv");
        // Keep five rows, duplicate one, and tear the last line.
        let lines: Vec<&str> = text.lines().collect();
        let torn = format!(
            "{}\n{}\n{}",
            lines[..6].join("\n"),
            lines[2],
            &lines[6][..4]
        );
        std::fs::write(&part, torn).unwrap();
        let s = run_experiment(
            &cfg,
            &part,
            &RunOptions {
                resume: true,
                ..RunOptions::default()
            },
        )
        .unwrap();
        assert_eq!((s.resumed, s.computed, s.rows), (5, 7, 12));
        assert_eq!(std::fs::read_to_string(&part).unwrap(), text);
    }

    #[test]
    fn foreign_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, "a,b\n1,2\n").unwrap();
        let opts = RunOptions {
            resume: true,
            ..RunOptions::default()
        };
        assert_eq!(
            run_experiment(&small(), &p, &opts).unwrap_err().exit_code(),
            2
        );
    }
}
