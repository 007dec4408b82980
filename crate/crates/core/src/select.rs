//! Discriminative and diverse concept-class selection.
//!
//! The cost of a subset is the summed conditional entropy of its members
//! plus `lambda` times the pairwise inner products of their event
//! posteriors. [`greedy_select`] grows the subset one class at a time using
//! the average correlation with the classes picked so far;
//! [`exhaustive_select`] enumerates every subset of small instances and is
//! used as a reference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::PosteriorTable;

pub const DEFAULT_LAMBDA: f64 = 0.5;
pub const DEFAULT_K_OBJECTS: usize = 300;
pub const DEFAULT_K_SCENES: usize = 150;

const ORACLE_MAX_CLASSES: usize = 20;
const ORACLE_MAX_SUBSETS: u128 = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionProblem {
    posterior: PosteriorTable,
    phi: Vec<f64>,
    lambda: f64,
    k: usize,
}

impl SelectionProblem {
    /// Unary costs are the conditional entropies (bits) of the posterior rows.
    pub fn new(posterior: PosteriorTable, lambda: f64, k: usize) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {lambda}")));
        }
        let c = posterior.n_classes();
        if k == 0 || k > c {
            return Err(Error::InvalidConfig(format!("k must be in 1..={c}, got {k}")));
        }
        let phi = posterior.entropies();
        Ok(Self {
            posterior,
            phi,
            lambda,
            k,
        })
    }

    pub fn posterior(&self) -> &PosteriorTable {
        &self.posterior
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_classes(&self) -> usize {
        self.phi.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Class indices in the order they were picked.
    pub selected: Vec<usize>,
    /// `phi(o) + lambda * S(O, o)` at the step each class was picked.
    pub step_costs: Vec<f64>,
    /// Energy of the final subset with ordered-pair correlations.
    pub energy: f64,
    pub indicator: Vec<u8>,
}

pub fn pairwise_correlation(posterior: &PosteriorTable, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::SelfPair(i));
    }
    Ok(dot(posterior.row(i), posterior.row(j)))
}

/// Subset energy. The pairwise sum runs over ordered pairs, so every
/// unordered pair of selected classes is counted twice.
pub fn energy(problem: &SelectionProblem, indicator: &[bool]) -> Result<f64> {
    if indicator.len() != problem.n_classes() {
        return Err(Error::DimensionMismatch {
            what: "selection indicator",
            expected: problem.n_classes(),
            got: indicator.len(),
        });
    }
    let chosen: Vec<usize> = (0..indicator.len()).filter(|&i| indicator[i]).collect();
    if chosen.len() != problem.k {
        return Err(Error::ConstraintViolated {
            expected: problem.k,
            got: chosen.len(),
        });
    }
    let unary: f64 = chosen.iter().map(|&i| problem.phi[i]).sum();
    let mut pairwise = 0.0;
    for &i in &chosen {
        for &j in &chosen {
            if i != j {
                pairwise += dot(problem.posterior.row(i), problem.posterior.row(j));
            }
        }
    }
    Ok(unary + problem.lambda * pairwise)
}

/// Mean correlation between `candidate` and the already-selected classes,
/// zero for an empty selection.
pub fn average_correlation(
    posterior: &PosteriorTable,
    selected: &[usize],
    candidate: usize,
) -> Result<f64> {
    if selected.contains(&candidate) {
        return Err(Error::AlreadySelected(candidate));
    }
    if selected.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = selected
        .iter()
        .map(|&o| dot(posterior.row(o), posterior.row(candidate)))
        .sum();
    Ok(total / selected.len() as f64)
}

pub fn greedy_select(problem: &SelectionProblem) -> Result<SelectionResult> {
    let c = problem.n_classes();
    let mask = problem.posterior.undefined_mask();
    let usable = mask.iter().filter(|&&m| !m).count();
    if problem.k > usable {
        return Err(Error::InsufficientClasses {
            requested: problem.k,
            available: usable,
        });
    }

    let mut taken = vec![false; c];
    let mut selected = Vec::with_capacity(problem.k);
    let mut step_costs = Vec::with_capacity(problem.k);
    // running sum of correlations with the selected set, per class
    let mut corr_sum = vec![0.0; c];

    while selected.len() < problem.k {
        let mut best: Option<(usize, f64)> = None;
        for o in 0..c {
            if taken[o] || mask[o] {
                continue;
            }
            let s = if selected.is_empty() {
                0.0
            } else {
                corr_sum[o] / selected.len() as f64
            };
            let cost = problem.phi[o] + problem.lambda * s;
            // strict comparison keeps the lowest index on ties
            if best.is_none_or(|(_, b)| cost < b) {
                best = Some((o, cost));
            }
        }
        let (pick, cost) = best.expect("usable classes remain");
        taken[pick] = true;
        selected.push(pick);
        step_costs.push(cost);
        let row = problem.posterior.row(pick);
        for o in 0..c {
            if !taken[o] {
                corr_sum[o] += dot(row, problem.posterior.row(o));
            }
        }
    }

    let mut flags = vec![false; c];
    for &o in &selected {
        flags[o] = true;
    }
    let energy = energy(problem, &flags)?;
    Ok(SelectionResult {
        selected,
        step_costs,
        energy,
        indicator: flags.iter().map(|&b| b as u8).collect(),
    })
}

/// Exact minimiser of [`energy`] by enumeration. Ties resolve to the
/// lexicographically smallest subset.
pub fn exhaustive_select(problem: &SelectionProblem) -> Result<(Vec<bool>, f64)> {
    let c = problem.n_classes();
    let k = problem.k;
    let subsets = binomial(c, k);
    if c > ORACLE_MAX_CLASSES || subsets > ORACLE_MAX_SUBSETS {
        return Err(Error::OracleTooLarge { classes: c, subsets });
    }
    let mut combo: Vec<usize> = (0..k).collect();
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        let mut flags = vec![false; c];
        for &i in &combo {
            flags[i] = true;
        }
        let e = energy(problem, &flags)?;
        if best.as_ref().is_none_or(|(_, b)| e < *b) {
            best = Some((combo.clone(), e));
        }
        if !next_combination(&mut combo, c) {
            break;
        }
    }
    let (combo, e) = best.expect("at least one subset");
    let mut flags = vec![false; c];
    for i in combo {
        flags[i] = true;
    }
    Ok((flags, e))
}

fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn table(rows: Array2<f64>) -> PosteriorTable {
        let n = rows.nrows();
        PosteriorTable::from_rows(rows, vec![1.0 / n as f64; n]).unwrap()
    }

    fn three_class() -> SelectionProblem {
        let post = table(array![[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]]);
        SelectionProblem::new(post, 0.5, 2).unwrap()
    }

    #[test]
    fn correlation_examples() {
        let post = table(array![[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.5, 0.5]]);
        assert_eq!(pairwise_correlation(&post, 0, 1).unwrap(), 0.0);
        assert_eq!(pairwise_correlation(&post, 0, 2).unwrap(), 1.0);
        assert_eq!(pairwise_correlation(&post, 0, 3).unwrap(), 0.5);
        assert!(matches!(pairwise_correlation(&post, 1, 1), Err(Error::SelfPair(1))));
    }

    #[test]
    fn phi_is_entropy() {
        let p = three_class();
        assert_eq!(p.phi(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn energy_examples() {
        let p = three_class();
        assert_eq!(energy(&p, &[true, true, false]).unwrap(), 0.0);
        let err = energy(&p, &[true, false, false]).unwrap_err();
        assert!(err.to_string().contains("constraint violated"));

        let single = SelectionProblem::new(table(array![[0.5, 0.5], [1.0, 0.0]]), 0.5, 1).unwrap();
        assert_eq!(energy(&single, &[true, false]).unwrap(), 1.0);
    }

    #[test]
    fn energy_hand_example_with_psi_04() {
        // <[0.5, 0.5, 0], [0.4, 0.4, 0.2]> = 0.4
        let post = table(array![[0.5, 0.5, 0.0], [0.4, 0.4, 0.2]]);
        let mut q = SelectionProblem::new(post, 0.5, 2).unwrap();
        q.phi = vec![0.2, 0.3];
        let psi = pairwise_correlation(&q.posterior, 0, 1).unwrap();
        assert!((psi - 0.4).abs() < 1e-15);
        let e = energy(&q, &[true, true]).unwrap();
        assert!((e - 0.9).abs() < 1e-12);
    }

    #[test]
    fn average_correlation_examples() {
        let post = table(array![[1.0, 0.0, 0.0], [0.2, 0.8, 0.0], [0.6, 0.0, 0.4], [1.0, 0.0, 0.0]]);
        assert_eq!(average_correlation(&post, &[], 3).unwrap(), 0.0);
        assert_eq!(average_correlation(&post, &[1], 3).unwrap(), 0.2);
        let s = average_correlation(&post, &[1, 2], 3).unwrap();
        assert!((s - 0.4).abs() < 1e-12);
        assert!(matches!(
            average_correlation(&post, &[1, 2], 2),
            Err(Error::AlreadySelected(2))
        ));
    }

    #[test]
    fn greedy_hand_example() {
        let r = greedy_select(&three_class()).unwrap();
        assert_eq!(r.selected, vec![0, 1]);
        assert_eq!(r.step_costs, vec![0.0, 0.0]);
        assert_eq!(r.energy, 0.0);
        assert_eq!(r.indicator, vec![1, 1, 0]);
    }

    #[test]
    fn greedy_exhausts_all_classes() {
        let post = table(array![[0.7, 0.3], [0.1, 0.9], [0.5, 0.5], [0.9, 0.1]]);
        let r = greedy_select(&SelectionProblem::new(post, 0.5, 4).unwrap()).unwrap();
        let mut s = r.selected.clone();
        s.sort();
        assert_eq!(s, vec![0, 1, 2, 3]);
    }

    #[test]
    fn identical_rows_select_in_index_order() {
        let post = table(Array2::from_elem((5, 3), 1.0 / 3.0));
        let r = greedy_select(&SelectionProblem::new(post, 0.5, 3).unwrap()).unwrap();
        assert_eq!(r.selected, vec![0, 1, 2]);
    }

    #[test]
    fn masked_classes_are_skipped() {
        let post = PosteriorTable::from_rows(
            array![[0.5, 0.5], [1.0, 0.0], [0.5, 0.5]],
            vec![0.0, 0.5, 0.5],
        )
        .unwrap();
        let r = greedy_select(&SelectionProblem::new(post.clone(), 0.5, 2).unwrap()).unwrap();
        assert_eq!(r.selected, vec![1, 2]);
        let err = greedy_select(&SelectionProblem::new(post, 0.5, 3).unwrap()).unwrap_err();
        assert!(err.to_string().contains("insufficient classes"));
    }

    #[test]
    fn oracle_examples() {
        let (best, e) = exhaustive_select(&three_class()).unwrap();
        assert_eq!(best, vec![true, true, false]);
        assert_eq!(e, 0.0);

        let p = SelectionProblem::new(table(array![[0.7, 0.3], [0.1, 0.9], [0.5, 0.5]]), 0.5, 3)
            .unwrap();
        let (best, e) = exhaustive_select(&p).unwrap();
        assert_eq!(best, vec![true; 3]);
        assert_eq!(e, energy(&p, &[true; 3]).unwrap());
    }

    #[test]
    fn oracle_guard() {
        let post = table(Array2::from_elem((21, 2), 0.5));
        let p = SelectionProblem::new(post, 0.5, 2).unwrap();
        let err = exhaustive_select(&p).unwrap_err();
        assert!(err.to_string().contains("instance too large for oracle"));
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(20, 10), 184_756);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(12, 4), 495);
    }
}
