//! Random instances shared by the acceptance and property suites.
#![allow(dead_code)]

use ndarray::Array2;
use os2e::nn::{NetworkConfig, NormConfig, ParamStore};
use os2e::rng::{stream, StreamRng};
use os2e::stats::{marginalize, ConceptKind, ConditionalTable, EventLabels, PosteriorTable, ResponseMatrix};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn rng(seed: u64, tag: &str) -> StreamRng {
    stream(seed, tag, 0)
}

/// Random simplex row; each entry is zeroed with probability `zero_prob`
/// but at least one survives.
pub fn simplex_row(r: &mut StreamRng, len: usize, zero_prob: f64) -> Vec<f64> {
    let mut row: Vec<f64> = (0..len)
        .map(|_| if r.random_bool(zero_prob) { 0.0 } else { r.random::<f64>() + 1e-3 })
        .collect();
    if row.iter().all(|&v| v == 0.0) {
        row[r.random_range(0..len)] = 1.0;
    }
    let s: f64 = row.iter().sum();
    row.iter_mut().for_each(|v| *v /= s);
    row
}

/// Responses of `n >= m` images with every event present at least once.
pub fn random_responses(r: &mut StreamRng, n: usize, c: usize, m: usize) -> (ResponseMatrix, EventLabels) {
    let zero_prob = r.random_range(0.0..0.7);
    let values: Vec<f64> = (0..n).flat_map(|_| simplex_row(r, c, zero_prob)).collect();
    let values = Array2::from_shape_vec((n, c), values).unwrap();
    let mut labels: Vec<usize> = (0..n).map(|i| if i < m { i } else { r.random_range(0..m) }).collect();
    labels.shuffle(r);
    (
        ResponseMatrix::with_default_ids(values, ConceptKind::Object).unwrap(),
        EventLabels::new(labels, m).unwrap(),
    )
}

/// Table with strictly positive entries, so every posterior row is defined.
pub fn random_table(r: &mut StreamRng, c: usize, m: usize) -> ConditionalTable {
    let mut cond = Array2::zeros((c, m));
    for e in 0..m {
        let col = simplex_row(r, c, 0.0);
        for (o, v) in col.into_iter().enumerate() {
            cond[[o, e]] = v;
        }
    }
    let counts = (0..m).map(|_| r.random_range(1..20)).collect();
    ConditionalTable::from_parts(cond, counts).unwrap()
}

/// Largest violation of the table and posterior invariants, or a
/// description of the first structural failure.
pub fn invariant_error(table: &ConditionalTable, post: &PosteriorTable) -> Result<f64, String> {
    let (c, m) = table.cond().dim();
    let mut worst: f64 = 0.0;
    for e in 0..m {
        let col = table.cond().column(e);
        if col.iter().any(|&v| v < 0.0) {
            return Err(format!("negative entry in column {e}"));
        }
        worst = worst.max((col.sum() - 1.0).abs());
    }
    worst = worst.max((table.prior().iter().sum::<f64>() - 1.0).abs());
    for (e, &n) in table.counts().iter().enumerate() {
        worst = worst.max((table.prior()[e] - n as f64 / table.total() as f64).abs());
    }
    let marginal = marginalize(table);
    worst = worst.max((marginal.iter().sum::<f64>() - 1.0).abs());
    let max_bits = (m as f64).log2();
    let entropies = post.entropies();
    for o in 0..c {
        let row = post.row(o);
        worst = worst.max((row.iter().sum::<f64>() - 1.0).abs());
        if post.undefined_mask()[o] != (marginal[o] == 0.0) {
            return Err(format!("undefined mask wrong for class {o}"));
        }
        if !(entropies[o] >= 0.0 && entropies[o] <= max_bits + 1e-12) {
            return Err(format!("entropy {} of class {o} outside [0, {max_bits}]", entropies[o]));
        }
        if post.undefined_mask()[o] {
            continue;
        }
        // p(c|e) = p(e|c) p(c) / p(e)
        for (e, &p) in row.iter().enumerate().take(m) {
            let back = p * marginal[o] / table.prior()[e];
            worst = worst.max((back - table.cond()[[o, e]]).abs());
        }
    }
    Ok(worst)
}

/// Small random network. Norm layers are frozen or batch-standardized at
/// random; dropout is either off or 0.3.
pub fn random_network(r: &mut StreamRng, heads: Vec<usize>) -> NetworkConfig {
    let input_dim = r.random_range(2..6);
    let depth = r.random_range(0..3);
    let hidden = (0..depth).map(|_| r.random_range(2..7)).collect();
    let norm = match r.random_range(0..3) {
        0 => None,
        1 => Some(NormConfig::default()),
        _ => Some(NormConfig {
            frozen: false,
            eps: 1e-3,
        }),
    };
    NetworkConfig {
        input_dim,
        hidden,
        norm,
        dropout_rate: if r.random_bool(0.5) { 0.3 } else { 0.0 },
        heads,
    }
}

/// Parameters with non-trivial stored statistics when the norm is frozen.
pub fn random_params(r: &mut StreamRng, config: &NetworkConfig, seed: u64) -> ParamStore {
    let mut p = ParamStore::init(config, seed).unwrap();
    for b in p.layout.clone().iter().filter(|e| e.name.ends_with("bias")) {
        for v in &mut p.values[b.range()] {
            *v = r.random_range(-0.3..0.3);
        }
    }
    if let Some(stats) = p.norm_stats.as_mut() {
        for (m, v) in stats.mean.iter_mut().zip(stats.var.iter_mut()) {
            *m = r.random_range(-0.2..0.2);
            *v = r.random_range(0.5..2.0);
        }
    }
    p
}

pub fn random_inputs(r: &mut StreamRng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| r.random_range(-1.5..1.5))
}

pub fn random_labels(r: &mut StreamRng, n: usize, m: usize) -> Vec<usize> {
    (0..n).map(|_| r.random_range(0..m)).collect()
}

pub fn random_simplex_rows(r: &mut StreamRng, n: usize, width: usize) -> Array2<f64> {
    let v: Vec<f64> = (0..n).flat_map(|_| simplex_row(r, width, 0.0)).collect();
    Array2::from_shape_vec((n, width), v).unwrap()
}
