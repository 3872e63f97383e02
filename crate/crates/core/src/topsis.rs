//! Ideal-point selection over a Pareto set.
//!
//! The decision matrix is column-normalized over every row, rows that break a
//! constraint are dropped, the ideal point is the per-column minimum of what is
//! left (all criteria are costs) and the row closest to it in Euclidean
//! distance wins. Equal distances go to the lower row index, which for a
//! [`ParetoSet`] is the smaller `l1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nsga2::{Individual, ParetoSet};
use crate::problem::{self, ProblemInstance};

/// Column normalization scheme.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Divide each column by its Euclidean norm.
    #[default]
    Vector,
    /// Map each column to `[0, 1]` by `(x - min) / (max - min)`.
    MinMax,
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vector" => Ok(Self::Vector),
            "minmax" => Ok(Self::MinMax),
            other => Err(Error::Validation(format!("unknown normalization `{other}`"))),
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Vector => "vector",
            Self::MinMax => "minmax",
        })
    }
}

/// Normalizes each column of `rows`. All-zero (vector) or constant (min-max)
/// columns become zeros.
pub fn normalize<const N: usize>(rows: &[[f64; N]], method: Normalization) -> Result<Vec<[f64; N]>> {
    if rows.is_empty() {
        return Err(Error::InvalidMatrix("decision matrix has no rows".into()));
    }
    if let Some(bad) = rows.iter().flatten().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidMatrix(format!(
            "entries must be finite and non-negative, found {bad}"
        )));
    }

    let mut out = rows.to_vec();
    for j in 0..N {
        let column = rows.iter().map(|r| r[j]);
        match method {
            Normalization::Vector => {
                let norm = column.map(|v| v * v).sum::<f64>().sqrt();
                for row in out.iter_mut() {
                    row[j] = if norm > 0.0 { row[j] / norm } else { 0.0 };
                }
            }
            Normalization::MinMax => {
                let (lo, hi) = column.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
                let spread = hi - lo;
                for row in out.iter_mut() {
                    row[j] = if spread > 0.0 { (row[j] - lo) / spread } else { 0.0 };
                }
            }
        }
    }
    Ok(out)
}

/// Raw and normalized objective rows together with their feasibility.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionMatrix<const N: usize> {
    pub rows: Vec<[f64; N]>,
    pub feasible: Vec<bool>,
    pub normalized: Vec<[f64; N]>,
}

/// Per-column minimum of the feasible normalized rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealPoint<const N: usize>(pub [f64; N]);

impl<const N: usize> DecisionMatrix<N> {
    pub fn new(rows: Vec<[f64; N]>, feasible: Vec<bool>, method: Normalization) -> Result<Self> {
        if rows.len() != feasible.len() {
            return Err(Error::InvalidMatrix(format!(
                "{} rows but {} feasibility flags",
                rows.len(),
                feasible.len()
            )));
        }
        let normalized = normalize(&rows, method)?;
        Ok(Self { rows, feasible, normalized })
    }

    /// Indices of the rows that satisfy the constraints.
    pub fn feasible_rows(&self) -> Vec<usize> {
        (0..self.rows.len()).filter(|&i| self.feasible[i]).collect()
    }

    pub fn ideal_point(&self) -> Result<IdealPoint<N>> {
        let kept = self.feasible_rows();
        if kept.is_empty() {
            return Err(Error::NoFeasibleSolution);
        }
        let mut ideal = [f64::INFINITY; N];
        for &i in &kept {
            for (slot, v) in ideal.iter_mut().zip(self.normalized[i]) {
                *slot = slot.min(v);
            }
        }
        Ok(IdealPoint(ideal))
    }
}

/// Outcome of ideal-point selection over a decision matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Winning row.
    pub index: usize,
    /// Distance to the ideal point for every row; `None` for infeasible rows.
    pub distances: Vec<Option<f64>>,
    pub ideal: Vec<f64>,
}

impl Selection {
    pub fn distance(&self) -> f64 {
        self.distances[self.index].expect("selected row is feasible")
    }
}

/// Picks the feasible row nearest to the ideal point.
pub fn select<const N: usize>(
    rows: &[[f64; N]],
    feasible: &[bool],
    method: Normalization,
) -> Result<Selection> {
    let matrix = DecisionMatrix::new(rows.to_vec(), feasible.to_vec(), method)?;
    let ideal = matrix.ideal_point()?;

    let distances: Vec<Option<f64>> = (0..rows.len())
        .map(|i| {
            matrix.feasible[i].then(|| {
                matrix.normalized[i]
                    .iter()
                    .zip(ideal.0)
                    .map(|(v, best)| (v - best).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    for (i, d) in distances.iter().enumerate() {
        if let Some(d) = *d {
            if best.is_none_or(|(_, b)| d < b) {
                best = Some((i, d));
            }
        }
    }
    let (index, _) = best.ok_or(Error::NoFeasibleSolution)?;
    Ok(Selection { index, distances, ideal: ideal.0.to_vec() })
}

/// The chosen split and its distance to the ideal point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopsisChoice {
    pub individual: Individual,
    pub distance: f64,
}

/// Selects the best member of a Pareto set for `instance`. Feasibility is
/// re-checked against the instance rather than trusted from the members.
pub fn select_best(
    pareto: &ParetoSet,
    instance: &ProblemInstance,
    method: Normalization,
) -> Result<TopsisChoice> {
    let mut members = pareto.members.clone();
    members.sort_by_key(|m| m.l1());
    let rows: Vec<[f64; 3]> = members.iter().map(|m| m.objectives.as_array()).collect();
    let feasible: Vec<bool> = members
        .iter()
        .map(|m| problem::feasible(instance, m.candidate).is_feasible())
        .collect();
    if rows.is_empty() {
        return Err(Error::NoFeasibleSolution);
    }
    let selection = select(&rows, &feasible, method)?;
    let distance = selection.distance();
    Ok(TopsisChoice { individual: members.swap_remove(selection.index), distance })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_normalization() {
        let n = normalize(&[[3.0], [4.0]], Normalization::Vector).unwrap();
        assert!((n[0][0] - 0.6).abs() < 1e-15);
        assert!((n[1][0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn single_row_normalizes_to_one() {
        let n = normalize(&[[2.5, 7.0, 0.0]], Normalization::Vector).unwrap();
        assert_eq!(n[0], [1.0, 1.0, 0.0]);
    }

    #[test]
    fn zero_column_stays_zero() {
        let n = normalize(&[[0.0, 1.0], [0.0, 2.0]], Normalization::Vector).unwrap();
        assert_eq!((n[0][0], n[1][0]), (0.0, 0.0));
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(matches!(
            normalize(&[[1.0], [-1.0]], Normalization::Vector),
            Err(Error::InvalidMatrix(_))
        ));
        assert!(matches!(
            normalize(&[[f64::NAN]], Normalization::MinMax),
            Err(Error::InvalidMatrix(_))
        ));
        assert!(normalize::<2>(&[], Normalization::Vector).is_err());
    }

    #[test]
    fn minmax_normalization() {
        let n = normalize(&[[1.0, 5.0], [3.0, 5.0], [2.0, 5.0]], Normalization::MinMax).unwrap();
        assert_eq!(n, vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.0]]);
    }

    #[test]
    fn two_objective_example() {
        let rows = [[1.0, 2.0], [2.0, 1.0], [1.5, 1.2]];
        let sel = select(&rows, &[true; 3], Normalization::Vector).unwrap();
        let d: Vec<f64> = sel.distances.iter().map(|d| d.unwrap()).collect();
        let round = |x: f64| (x * 1000.0).round() / 1000.0;
        assert_eq!([round(d[0]), round(d[1]), round(d[2])], [0.394, 0.371, 0.202]);
        assert_eq!(sel.index, 2);
    }

    #[test]
    fn infeasible_rows_ignored() {
        let rows = [[1.0, 1.0], [2.0, 2.0]];
        let sel = select(&rows, &[false, true], Normalization::Vector).unwrap();
        assert_eq!(sel.index, 1);
        assert_eq!(sel.distances[0], None);
        assert_eq!(sel.distance(), 0.0);
        assert!(matches!(
            select(&rows, &[false, false], Normalization::Vector),
            Err(Error::NoFeasibleSolution)
        ));
    }

    #[test]
    fn ties_go_to_first_row() {
        let rows = [[1.0, 2.0], [2.0, 1.0]];
        assert_eq!(select(&rows, &[true, true], Normalization::Vector).unwrap().index, 0);
    }

    #[test]
    fn parse_normalization() {
        assert_eq!("vector".parse::<Normalization>().unwrap(), Normalization::Vector);
        assert_eq!("MinMax".parse::<Normalization>().unwrap(), Normalization::MinMax);
        assert!("l1".parse::<Normalization>().is_err());
    }
}
