//! Tables and summaries over finished run directories. Missing or
//! unreadable artifacts are logged and skipped.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;

use crate::cli::{RunConfig, RESOLVED_CONFIG};
use crate::io;
use crate::stats::bayes_posterior;
use crate::train::{TrainReport, TransferMode};

const HISTOGRAM_BINS: usize = 10;

struct Comparison {
    run: String,
    mode: TransferMode,
    seed: u64,
    iterations: usize,
    test_acc: f64,
    test_map: f64,
    train_loss: f64,
    test_loss: f64,
    gap: f64,
}

/// Writes summaries for every run directory in `config.report.artifacts`
/// into `config.out`. Nothing is written when no run could be summarized.
pub fn run_report(config: &RunConfig) -> anyhow::Result<()> {
    let out = &config.out;
    let mut written = false;
    let mut comparisons = Vec::new();
    for dir in &config.report.artifacts {
        let name = run_name(dir);
        let resolved = dir.join(RESOLVED_CONFIG);
        if !resolved.is_file() {
            log::warn!("{}: no {RESOLVED_CONFIG}, skipping", dir.display());
            continue;
        }
        let run: RunConfig = match io::read_json(&resolved) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("{e}, skipping");
                continue;
            }
        };
        let result = match run.command.as_str() {
            "stats" => report_stats(dir, &name, out, config.report.top_k).map(|()| true),
            "select" => copy_artifact(dir, "selection.csv", out, &format!("{name}_selection.csv")),
            "train" => match read_train(dir, &name) {
                Ok(c) => {
                    comparisons.push(c);
                    copy_artifact(dir, "curve.csv", out, &format!("{name}_curve.csv"))
                }
                Err(e) => Err(e),
            },
            other => {
                log::warn!("{}: nothing to summarize for a {other:?} run", dir.display());
                Ok(false)
            }
        };
        match result {
            Ok(w) => written |= w,
            Err(e) => log::warn!("{}: {e:#}, skipping", dir.display()),
        }
    }
    if !comparisons.is_empty() {
        ensure_dir(out)?;
        write_comparison(&out.join("comparison.csv"), &comparisons)?;
        fs::write(out.join("summary.txt"), summary_text(&comparisons))?;
        written = true;
    }
    if written {
        io::write_json(&out.join(RESOLVED_CONFIG), config)?;
    } else {
        log::warn!("no artifacts to summarize");
    }
    Ok(())
}

fn run_name(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn copy_artifact(dir: &Path, file: &str, out: &Path, target: &str) -> anyhow::Result<bool> {
    let src = dir.join(file);
    if !src.is_file() {
        log::warn!("{}: missing, skipping", src.display());
        return Ok(false);
    }
    ensure_dir(out)?;
    fs::copy(&src, out.join(target)).with_context(|| format!("copying {}", src.display()))?;
    Ok(true)
}

fn report_stats(dir: &Path, name: &str, out: &Path, top_k: usize) -> anyhow::Result<()> {
    let (table, ids) = io::read_conditional_table(&dir.join("conditional_table.json"))?;
    let post = bayes_posterior(&table);
    ensure_dir(out)?;

    let mut w = csv::Writer::from_path(out.join(format!("{name}_top_concepts.csv")))?;
    w.write_record(["event", "rank", "class_id", "p_concept_given_event"])?;
    let cond = table.cond();
    for e in 0..table.n_events() {
        let mut order: Vec<usize> = (0..table.n_classes()).collect();
        // stable sort keeps lower class indices first among ties
        order.sort_by(|&a, &b| cond[[b, e]].total_cmp(&cond[[a, e]]));
        for (rank, &c) in order.iter().take(top_k).enumerate() {
            w.write_record([
                e.to_string(),
                (rank + 1).to_string(),
                ids[c].clone(),
                cond[[c, e]].to_string(),
            ])?;
        }
    }
    w.flush()?;

    let entropies = post.entropies();
    let mut w = csv::Writer::from_path(out.join(format!("{name}_marginal.csv")))?;
    w.write_record(["class_id", "marginal", "entropy_bits"])?;
    for (c, id) in ids.iter().enumerate() {
        w.write_record([id.clone(), post.marginal()[c].to_string(), entropies[c].to_string()])?;
    }
    w.flush()?;

    let max_bits = (table.n_events() as f64).log2().max(f64::MIN_POSITIVE);
    let mut counts = [0usize; HISTOGRAM_BINS];
    for (c, &h) in entropies.iter().enumerate() {
        if post.undefined_mask()[c] {
            continue;
        }
        let bin = ((h / max_bits) * HISTOGRAM_BINS as f64).floor() as usize;
        counts[bin.min(HISTOGRAM_BINS - 1)] += 1;
    }
    let mut w = csv::Writer::from_path(out.join(format!("{name}_entropy_hist.csv")))?;
    w.write_record(["bin_lo_bits", "bin_hi_bits", "count"])?;
    for (b, n) in counts.iter().enumerate() {
        let width = max_bits / HISTOGRAM_BINS as f64;
        w.write_record([
            (b as f64 * width).to_string(),
            ((b + 1) as f64 * width).to_string(),
            n.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn read_train(dir: &Path, name: &str) -> anyhow::Result<Comparison> {
    let report: TrainReport = io::read_json(&dir.join("report.json"))?;
    anyhow::ensure!(!report.points.is_empty(), "report has no evaluation points");
    let last = report.final_point();
    Ok(Comparison {
        run: name.to_owned(),
        mode: report.mode,
        seed: report.seed,
        iterations: report.iterations,
        test_acc: last.test_acc,
        test_map: last.test_map,
        train_loss: last.train_loss,
        test_loss: last.test_loss,
        gap: report.generalization_gap(),
    })
}

fn write_comparison(path: &PathBuf, rows: &[Comparison]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "run", "mode", "seed", "iterations", "test_acc", "test_map", "train_loss", "test_loss",
        "gap",
    ])?;
    for r in rows {
        w.write_record([
            r.run.clone(),
            r.mode.to_string(),
            r.seed.to_string(),
            r.iterations.to_string(),
            r.test_acc.to_string(),
            r.test_map.to_string(),
            r.train_loss.to_string(),
            r.test_loss.to_string(),
            r.gap.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn summary_text(rows: &[Comparison]) -> String {
    let mut s = String::from("mode       runs  mean_acc  mean_map  mean_gap\n");
    for mode in [TransferMode::Init, TransferMode::Knowledge, TransferMode::Data] {
        let sel: Vec<&Comparison> = rows.iter().filter(|r| r.mode == mode).collect();
        if sel.is_empty() {
            continue;
        }
        let n = sel.len() as f64;
        let mean = |f: fn(&Comparison) -> f64| sel.iter().map(|r| f(r)).sum::<f64>() / n;
        s.push_str(&format!(
            "{:<10} {:>4}  {:>8.4}  {:>8.4}  {:>8.4}\n",
            mode.to_string(),
            sel.len(),
            mean(|r| r.test_acc),
            mean(|r| r.test_map),
            mean(|r| r.gap),
        ));
    }
    s
}
