use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use tal_core::config::RunConfig;
use tal_core::metrics::FailureMetrics;
use tal_core::scoring::ScoreKind;
use tal_core::{Error, Result};

use crate::commands::{self, Report};
use crate::output::{num, write_file};

pub const SWEEP_CSV: &str = "sweep.csv";
const PARALLEL_VAR: &str = "TAL_NUM_PARALLEL";

struct Cell {
    t_min: f64,
    t_max: f64,
    queue_capacity: usize,
}

fn or_base<T: Copy>(list: &[T], base: T) -> Vec<T> {
    if list.is_empty() {
        vec![base]
    } else {
        list.to_vec()
    }
}

fn grid(cfg: &RunConfig) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &t_min in &or_base(&cfg.sweep_t_min, cfg.t_min) {
        for &t_max in &or_base(&cfg.sweep_t_max, cfg.t_max) {
            for &queue_capacity in &or_base(&cfg.sweep_queue_capacity, cfg.queue_capacity) {
                cells.push(Cell { t_min, t_max, queue_capacity });
            }
        }
    }
    cells
}

fn report_keys(cfg: &RunConfig) -> Vec<String> {
    let mut keys = Vec::new();
    for setting in &cfg.settings {
        for kind in ScoreKind::ALL {
            for name in FailureMetrics::NAMES {
                keys.push(format!("{setting}.{kind}.{name}"));
            }
        }
    }
    keys.push("id_accuracy".into());
    keys
}

fn parallelism() -> Result<usize> {
    match std::env::var(PARALLEL_VAR) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(format!("{PARALLEL_VAR} must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn run_one(base: &RunConfig, index: usize, cell: &Cell, seed: u64) -> Result<Report> {
    let mut cfg = base.clone();
    cfg.t_min = cell.t_min;
    cfg.t_max = cell.t_max;
    cfg.queue_capacity = cell.queue_capacity;
    cfg.seed = seed;
    cfg.out = base.out.join(format!("cell-{index:03}")).join(format!("seed-{seed}"));
    cfg.train_csv.clear();
    cfg.test_csv.clear();
    cfg.checkpoint.clear();
    cfg.training_config()?;
    commands::gen(&cfg)?;
    commands::train(&cfg, false, None)?;
    commands::eval(&cfg)
}

fn mean_std(values: &[Option<f64>]) -> (Option<f64>, Option<f64>) {
    let xs: Option<Vec<f64>> = values.iter().copied().collect();
    let Some(xs) = xs.filter(|x| !x.is_empty()) else {
        return (None, None);
    };
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = (xs.len() > 1).then(|| (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), std)
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let cells = grid(cfg);
    let seeds = or_base(&cfg.sweep_seeds, cfg.seed);
    let jobs: Vec<(usize, u64)> = (0..cells.len()).flat_map(|c| seeds.iter().map(move |&s| (c, s))).collect();
    let workers = parallelism()?.min(jobs.len());
    std::fs::create_dir_all(&cfg.out)?;
    write_file(&cfg.out.join("sweep.resolved.cfg"), cfg.to_text().as_bytes())?;

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<Report>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let j = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(c, seed)) = jobs.get(j) else { break };
                let outcome = run_one(cfg, c, &cells[c], seed);
                results.lock().expect("no worker panicked")[j] = Some(outcome);
            });
        }
    });
    let results: Vec<Result<Report>> =
        results.into_inner().expect("no worker panicked").into_iter().map(|r| r.expect("every job ran")).collect();

    let keys = report_keys(cfg);
    let mut csv = String::from("row,cell,t_min,t_max,queue_capacity,seed,status");
    for k in &keys {
        let _ = write!(csv, ",{k}");
    }
    for k in &keys {
        let _ = write!(csv, ",{k}.std");
    }
    csv.push('\n');

    let mut failures = 0;
    for (c, cell) in cells.iter().enumerate() {
        let prefix = format!("{c},{},{},{}", cell.t_min, cell.t_max, cell.queue_capacity);
        let mut ok_reports: Vec<&Report> = Vec::new();
        for ((jc, seed), result) in jobs.iter().zip(&results) {
            if *jc != c {
                continue;
            }
            let _ = write!(csv, "data,{prefix},{seed}");
            match result {
                Ok(report) => {
                    csv.push_str(",ok");
                    for (_, v) in report {
                        let _ = write!(csv, ",{}", num(*v));
                    }
                    ok_reports.push(report);
                }
                Err(e) => {
                    failures += 1;
                    eprintln!("error: cell {c} (t_min {}, t_max {}) seed {seed}: {e}", cell.t_min, cell.t_max);
                    csv.push_str(",failed");
                    csv.push_str(&",nan".repeat(keys.len()));
                }
            }
            csv.push_str(&",".repeat(keys.len()));
            csv.push('\n');
        }
        let status = if ok_reports.is_empty() { "failed" } else { "ok" };
        let _ = write!(csv, "aggregate,{prefix},,{status}");
        let stats: Vec<(Option<f64>, Option<f64>)> =
            (0..keys.len()).map(|i| mean_std(&ok_reports.iter().map(|r| r[i].1).collect::<Vec<_>>())).collect();
        for (m, _) in &stats {
            let _ = write!(csv, ",{}", num(*m));
        }
        for (_, s) in &stats {
            let _ = write!(csv, ",{}", num(*s));
        }
        csv.push('\n');
    }
    write_file(&cfg.out.join(SWEEP_CSV), csv.as_bytes())?;

    if failures > 0 {
        return Err(Error::Config(format!("{failures} of {} sweep runs failed", jobs.len())));
    }
    Ok(())
}
