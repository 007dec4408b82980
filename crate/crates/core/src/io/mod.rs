//! File formats: CSV tables, JSON documents and the plain-text image
//! container.
//!
//! CSV readers report problems as `path:line: message`, counting the
//! header as line 1.

pub mod matrix;

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Checkpoint, SoftTargets};
use crate::pipeline::ImageBuffer;
use crate::select::SelectionResult;
use crate::stats::{check_simplex, ConceptKind, ConditionalTable, EventLabels, ResponseMatrix};
use crate::stats::INGEST_SIMPLEX_TOL;
use crate::train::{Dataset, Split, TrainReport};

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line() as u64, e.to_string()))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let ckpt: Checkpoint = read_json(path)?;
    ckpt.validate()?;
    Ok(ckpt)
}

#[derive(Deserialize)]
struct LooseTable {
    #[serde(with = "matrix")]
    cond: Array2<f64>,
    counts: Vec<usize>,
    #[serde(default)]
    prior: Option<Vec<f64>>,
    #[serde(default)]
    class_ids: Option<Vec<String>>,
}

#[derive(Serialize)]
struct TableDoc<'a> {
    #[serde(flatten)]
    table: &'a ConditionalTable,
    class_ids: &'a [String],
}

/// A conditional table together with the concept identifiers of its rows.
pub fn write_conditional_table(
    path: &Path,
    table: &ConditionalTable,
    class_ids: &[String],
) -> Result<()> {
    check_len("table class ids", table.n_classes(), class_ids.len())?;
    write_json(path, &TableDoc { table, class_ids })
}

/// Reads a conditional table and its class ids (`0..C` when absent). The
/// prior may be omitted; when present it must agree with the counts to 1e-9.
pub fn read_conditional_table(path: &Path) -> Result<(ConditionalTable, Vec<String>)> {
    let loose: LooseTable = read_json(path)?;
    let table = ConditionalTable::from_parts(loose.cond, loose.counts)?;
    let class_ids = match loose.class_ids {
        Some(ids) => {
            check_len("table class ids", table.n_classes(), ids.len())?;
            ids
        }
        None => (0..table.n_classes()).map(|c| c.to_string()).collect(),
    };
    if let Some(prior) = loose.prior {
        let ok = prior.len() == table.prior().len()
            && prior.iter().zip(table.prior()).all(|(a, b)| (a - b).abs() <= 1e-9);
        if !ok {
            return Err(Error::InvalidDistribution(format!(
                "{}: prior does not equal counts / total",
                path.display()
            )));
        }
    }
    Ok((table, class_ids))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn headers(path: &Path, reader: &mut csv::Reader<File>) -> Result<Vec<String>> {
    let h = reader.headers()?;
    if h.is_empty() || (h.len() == 1 && h[0].is_empty()) {
        return Err(Error::parse(path, 1, "missing header"));
    }
    Ok(h.iter().map(str::to_owned).collect())
}

/// Each data record with its 1-based line number, length-checked.
fn records(
    path: &Path,
    reader: &mut csv::Reader<File>,
    width: usize,
) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != width {
            return Err(Error::parse(
                path,
                line,
                format!("expected {width} fields, found {}", rec.len()),
            ));
        }
        out.push((line, rec));
    }
    Ok(out)
}

fn parse_f64(path: &Path, line: u64, field: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::parse(path, line, format!("not a number: {field:?}")))?;
    if !v.is_finite() {
        return Err(Error::parse(path, line, format!("non-finite value {field}")));
    }
    Ok(v)
}

fn parse_usize(path: &Path, line: u64, field: &str) -> Result<usize> {
    field
        .parse()
        .map_err(|_| Error::parse(path, line, format!("not a non-negative integer: {field:?}")))
}

fn expect_header(path: &Path, found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::parse(
            path,
            1,
            format!("malformed header: expected {expected:?}, found {found:?}"),
        ));
    }
    Ok(())
}

/// `image_id,<class id>...` with one simplex row per image.
pub fn read_responses_csv(path: &Path, kind: ConceptKind) -> Result<(Vec<String>, ResponseMatrix)> {
    let mut r = csv_reader(path)?;
    let h = headers(path, &mut r)?;
    expect_header(path, &h[0], "image_id")?;
    if h.len() < 2 {
        return Err(Error::parse(path, 1, "malformed header: no class columns"));
    }
    let classes: Vec<String> = h[1..].to_vec();
    let rows = records(path, &mut r, h.len())?;
    let mut ids = Vec::with_capacity(rows.len());
    let mut values = Array2::zeros((rows.len(), classes.len()));
    for (i, (line, rec)) in rows.iter().enumerate() {
        ids.push(rec[0].to_owned());
        for j in 0..classes.len() {
            values[[i, j]] = parse_f64(path, *line, &rec[j + 1])?;
        }
        let row = values.row(i).to_vec();
        if check_simplex(&row, INGEST_SIMPLEX_TOL).is_err() {
            return Err(Error::parse(
                path,
                *line,
                format!("unnormalized scores: row sums to {}", row.iter().sum::<f64>()),
            ));
        }
    }
    Ok((ids, ResponseMatrix::new(values, classes, kind)?))
}

pub fn write_responses_csv(path: &Path, image_ids: &[String], m: &ResponseMatrix) -> Result<()> {
    check_len("image ids", m.n_images(), image_ids.len())?;
    let mut w = csv_writer(path)?;
    let mut header = vec!["image_id".to_owned()];
    header.extend(m.class_ids().iter().cloned());
    w.write_record(&header)?;
    for (id, row) in image_ids.iter().zip(m.values().rows()) {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `image_id,event_index`. The event count is the largest index plus one
/// unless given.
pub fn read_labels_csv(path: &Path, n_events: Option<usize>) -> Result<(Vec<String>, EventLabels)> {
    let mut r = csv_reader(path)?;
    let h = headers(path, &mut r)?;
    expect_header(path, &h.join(","), "image_id,event_index")?;
    let rows = records(path, &mut r, 2)?;
    let mut ids = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (line, rec) in &rows {
        let y = parse_usize(path, *line, &rec[1])?;
        if let Some(m) = n_events {
            if y >= m {
                return Err(Error::parse(
                    path,
                    *line,
                    format!("event index {y} out of range for {m} events"),
                ));
            }
        }
        ids.push(rec[0].to_owned());
        labels.push(y);
    }
    let m = n_events.unwrap_or_else(|| labels.iter().max().map_or(0, |&y| y + 1));
    Ok((ids, EventLabels::new(labels, m)?))
}

pub fn write_labels_csv(path: &Path, image_ids: &[String], labels: &EventLabels) -> Result<()> {
    check_len("image ids", labels.len(), image_ids.len())?;
    let mut w = csv_writer(path)?;
    w.write_record(["image_id", "event_index"])?;
    for (id, y) in image_ids.iter().zip(labels.labels()) {
        w.write_record([id.as_str(), &y.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Orders `labels` to follow `image_ids`, matching by id.
pub fn align_labels(
    image_ids: &[String],
    label_ids: &[String],
    labels: &EventLabels,
) -> Result<EventLabels> {
    let index: HashMap<&str, usize> = label_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let rows = image_ids
        .iter()
        .map(|id| {
            index
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::InvalidConfig(format!("no label for image {id:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(labels.select(&rows))
}

/// `label,x_0,...,x_{d-1}`.
pub fn read_dataset_csv(
    path: &Path,
    name: &str,
    split: Split,
    n_classes: Option<usize>,
) -> Result<Dataset> {
    let mut r = csv_reader(path)?;
    let h = headers(path, &mut r)?;
    expect_header(path, &h[0], "label")?;
    let d = h.len() - 1;
    let rows = records(path, &mut r, h.len())?;
    let mut features = Array2::zeros((rows.len(), d));
    let mut labels = Vec::with_capacity(rows.len());
    for (i, (line, rec)) in rows.iter().enumerate() {
        let y = parse_usize(path, *line, &rec[0])?;
        if let Some(m) = n_classes {
            if y >= m {
                return Err(Error::parse(
                    path,
                    *line,
                    format!("label {y} out of range for {m} classes"),
                ));
            }
        }
        labels.push(y);
        for j in 0..d {
            features[[i, j]] = parse_f64(path, *line, &rec[j + 1])?;
        }
    }
    let m = n_classes.unwrap_or_else(|| labels.iter().max().map_or(0, |&y| y + 1));
    Dataset::new(name, split, features, labels, m)
}

pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["label".to_owned()];
    header.extend((0..data.dim()).map(|j| format!("x_{j}")));
    w.write_record(&header)?;
    for (row, y) in data.features().rows().into_iter().zip(data.labels()) {
        let mut rec = vec![y.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `q_0,...,q_{K-1}`, one row per training sample.
pub fn read_soft_targets_csv(path: &Path) -> Result<SoftTargets> {
    let mut r = csv_reader(path)?;
    let h = headers(path, &mut r)?;
    let rows = records(path, &mut r, h.len())?;
    let mut values = Array2::zeros((rows.len(), h.len()));
    for (i, (line, rec)) in rows.iter().enumerate() {
        for j in 0..h.len() {
            values[[i, j]] = parse_f64(path, *line, &rec[j])?;
        }
        let row = values.row(i).to_vec();
        if check_simplex(&row, INGEST_SIMPLEX_TOL).is_err() {
            return Err(Error::parse(
                path,
                *line,
                format!("unnormalized scores: row sums to {}", row.iter().sum::<f64>()),
            ));
        }
    }
    SoftTargets::new(values)
}

pub fn write_soft_targets_csv(path: &Path, targets: &SoftTargets) -> Result<()> {
    let header: Vec<String> = (0..targets.width()).map(|j| format!("q_{j}")).collect();
    write_matrix_csv(path, &header, None, targets.rows())
}

/// `rank,class_id,entropy_bits,step_cost` in pick order.
pub fn write_selection_csv(
    path: &Path,
    result: &SelectionResult,
    class_ids: &[String],
    phi: &[f64],
) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["rank", "class_id", "entropy_bits", "step_cost"])?;
    for (rank, (&c, cost)) in result.selected.iter().zip(&result.step_costs).enumerate() {
        let id = class_ids.get(c).cloned().unwrap_or_else(|| c.to_string());
        w.write_record([
            (rank + 1).to_string(),
            id,
            phi[c].to_string(),
            cost.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `iter,train_loss,test_loss,test_acc,test_map`.
pub fn write_curve_csv(path: &Path, report: &TrainReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["iter", "train_loss", "test_loss", "test_acc", "test_map"])?;
    for p in &report.points {
        w.write_record([
            p.iteration.to_string(),
            p.train_loss.to_string(),
            p.test_loss.to_string(),
            p.test_acc.to_string(),
            p.test_map.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `image_id,score_0,...,score_{M-1}`.
pub fn write_scores_csv(path: &Path, image_ids: &[String], scores: &Array2<f64>) -> Result<()> {
    check_len("image ids", scores.nrows(), image_ids.len())?;
    let mut header = vec!["image_id".to_owned()];
    header.extend((0..scores.ncols()).map(|j| format!("score_{j}")));
    write_matrix_csv(path, &header, Some(image_ids), scores)
}

pub fn read_scores_csv(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let mut r = csv_reader(path)?;
    let h = headers(path, &mut r)?;
    expect_header(path, &h[0], "image_id")?;
    let rows = records(path, &mut r, h.len())?;
    let mut ids = Vec::with_capacity(rows.len());
    let mut values = Array2::zeros((rows.len(), h.len() - 1));
    for (i, (line, rec)) in rows.iter().enumerate() {
        ids.push(rec[0].to_owned());
        for j in 1..h.len() {
            values[[i, j - 1]] = parse_f64(path, *line, &rec[j])?;
        }
    }
    Ok((ids, values))
}

fn write_matrix_csv(
    path: &Path,
    header: &[String],
    ids: Option<&[String]>,
    values: &Array2<f64>,
) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header)?;
    for (i, row) in values.rows().into_iter().enumerate() {
        let mut rec: Vec<String> = ids.map(|ids| vec![ids[i].clone()]).unwrap_or_default();
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        });
    }
    Ok(())
}

/// Image container: a first line `H W C`, then one line of `W * C`
/// whitespace-separated values per pixel row.
pub fn write_image(path: &Path, image: &ImageBuffer) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{} {} {}", image.height(), image.width(), image.channels()).map_err(io)?;
    let row_len = image.width() * image.channels();
    for row in image.data().chunks(row_len) {
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        writeln!(w, "{}", line.join(" ")).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_image(path: &Path) -> Result<ImageBuffer> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing `H W C` header"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::parse(path, 1, format!("malformed header {header:?}")))?;
    let [h, w, c] = dims[..] else {
        return Err(Error::parse(path, 1, format!("malformed header {header:?}")));
    };
    let mut data = Vec::with_capacity(h * w * c);
    for (i, line) in lines {
        let lineno = i as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            data.push(parse_f64(path, lineno, tok)?);
        }
        if data.len() - before != w * c {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {} values, found {}", w * c, data.len() - before),
            ));
        }
    }
    if data.len() != h * w * c {
        return Err(Error::parse(
            path,
            (data.len() / (w * c).max(1)) as u64 + 1,
            format!("expected {h} pixel rows, found {}", data.len() / (w * c).max(1)),
        ));
    }
    ImageBuffer::new(h, w, c, data)
}

/// `*.img` files in a directory, sorted by file name, keyed by file stem.
pub fn read_image_dir(dir: &Path) -> Result<Vec<(String, ImageBuffer)>> {
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "img"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let id = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok((id, read_image(&p)?))
        })
        .collect()
}
