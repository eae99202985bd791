use std::fmt::Write as _;
use std::path::PathBuf;

use tal_core::config::RunConfig;
use tal_core::data::{generate, Dataset};
use tal_core::metrics::{partition, risk_coverage, FailureMetrics};
use tal_core::model::{evaluate, id_accuracy, records, Checkpoint, EpochLog, ScoredSample, Trainer};
use tal_core::scoring::ScoreKind;
use tal_core::{Error, Result};

use crate::output::{num, write_file};

pub const EPOCH_LOG: &str = "epochs.csv";
pub const SCORES: &str = "scores.csv";
pub const REPORT: &str = "report.txt";
pub const CURVES: &str = "curves";

fn save_resolved(cfg: &RunConfig, command: &str) -> Result<()> {
    write_file(&cfg.out.join(format!("{command}.resolved.cfg")), cfg.to_text().as_bytes())
}

pub fn gen(cfg: &RunConfig) -> Result<()> {
    let (train, test) = generate(&cfg.dataset_spec()?)?;
    save_resolved(cfg, "gen")?;
    for (path, data) in [(cfg.train_csv_path(), &train), (cfg.test_csv_path(), &test)] {
        let mut buf = Vec::new();
        data.write_csv(&mut buf)?;
        write_file(&path, &buf)?;
    }
    Ok(())
}

fn log_header(tal: bool) -> String {
    let mut h = String::from("epoch,lr,train_loss,train_acc,queue_len");
    if tal {
        h.push_str(",mean_tau");
    }
    h
}

fn log_row(l: &EpochLog, tal: bool) -> String {
    let mut row = format!("{},{},{},{},{}", l.epoch, l.lr, l.train_loss, l.train_acc, l.queue_len);
    if tal {
        row.push(',');
        row.push_str(&num(l.mean_tau));
    }
    row
}

/// Rows of an existing epoch log up to and including `epoch`.
fn previous_rows(path: &PathBuf, header: &str, epoch: usize) -> Result<Vec<String>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot resume: {}: {e}", path.display())))?;
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        return Err(Error::Config(format!("cannot resume: {} has an unexpected header", path.display())));
    }
    let rows: Vec<String> = lines
        .filter(|l| l.split(',').next().and_then(|e| e.parse::<usize>().ok()).is_some_and(|e| e <= epoch))
        .map(str::to_string)
        .collect();
    if rows.len() != epoch {
        return Err(Error::Config(format!(
            "cannot resume: {} holds {} rows for {epoch} completed epochs",
            path.display(),
            rows.len()
        )));
    }
    Ok(rows)
}

pub fn train(cfg: &RunConfig, resume: bool, stop_after: Option<usize>) -> Result<Checkpoint> {
    let config = cfg.training_config()?;
    let data = Dataset::import_csv(cfg.train_csv_path())?;
    let tal = config.loss_mode.name() == "tal";
    let header = log_header(tal);
    let log_path = cfg.out.join(EPOCH_LOG);

    let (mut trainer, mut rows) = if resume {
        let ckpt = Checkpoint::load(cfg.checkpoint_path())?;
        let rows = previous_rows(&log_path, &header, ckpt.epoch)?;
        (Trainer::resume(config, &data, ckpt)?, rows)
    } else {
        (Trainer::new(config, &data, cfg.n_classes)?, Vec::new())
    };
    save_resolved(cfg, "train")?;
    let logs = trainer.run(stop_after)?;
    rows.extend(logs.iter().map(|l| log_row(l, tal)));

    let ckpt = trainer.checkpoint();
    write_file(&cfg.checkpoint_path(), &ckpt.to_bytes()?)?;
    let mut text = header;
    text.push('\n');
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    write_file(&log_path, text.as_bytes())?;
    Ok(ckpt)
}

fn scores_csv(scored: &[ScoredSample]) -> String {
    let mut s = String::from("id,label,pred,correct,domain,msp,maxlogit,cosine,energy,entropy\n");
    for x in scored {
        let c = &x.scores;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            x.id,
            x.label.map_or(String::new(), |l| l.to_string()),
            x.predicted(),
            u8::from(x.correct),
            x.domain,
            num(Some(c.msp)),
            num(Some(c.max_logit)),
            num(c.cosine),
            num(Some(c.energy)),
            num(Some(c.entropy)),
        );
    }
    s
}

/// Flat metric report: `(key, value)` in a fixed order.
pub type Report = Vec<(String, Option<f64>)>;

pub fn eval(cfg: &RunConfig) -> Result<Report> {
    let ckpt = Checkpoint::load(cfg.checkpoint_path())?;
    let data = Dataset::import_csv(cfg.test_csv_path())?;
    let scored = evaluate(&ckpt.model, &data)?;
    save_resolved(cfg, "eval")?;

    let mut report: Report = Vec::new();
    let mut curves = Vec::new();
    for &setting in &cfg.settings {
        for kind in ScoreKind::ALL {
            // A score that is undefined for some sample (zero logits for
            // cosine) or an empty set leaves every metric undefined.
            let set = records(&scored, kind).and_then(|r| partition(&r, setting)).ok();
            let metrics = set.as_ref().map(FailureMetrics::compute);
            if let Some(curve) = set.as_ref().and_then(|s| risk_coverage(s).ok()) {
                curves.push((format!("{setting}.{kind}.csv"), curve.to_csv()));
            }
            for (i, name) in FailureMetrics::NAMES.iter().enumerate() {
                let mut v = metrics.as_ref().and_then(|m| m.values()[i]);
                if matches!(*name, "aurc" | "eaurc") {
                    v = v.map(|x| x * 1e3);
                }
                report.push((format!("{setting}.{kind}.{name}"), v));
            }
        }
    }
    report.push(("id_accuracy".into(), id_accuracy(&scored)));

    write_file(&cfg.out.join(SCORES), scores_csv(&scored).as_bytes())?;
    for (name, csv) in curves {
        write_file(&cfg.out.join(CURVES).join(name), csv.as_bytes())?;
    }
    let mut text = String::new();
    for (k, v) in &report {
        let _ = writeln!(text, "{k} = {}", num(*v));
    }
    write_file(&cfg.out.join(REPORT), text.as_bytes())?;
    Ok(report)
}
