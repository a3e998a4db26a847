//! Quadratic Wasserstein distance between equal-size point clouds in the plane.
//!
//! For uniform measures of equal support size the optimal coupling is a
//! permutation, found here with the shortest-augmenting-path assignment
//! algorithm in `O(m^3)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::c64;

/// A nonempty set of finite points in the complex plane, weighted uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud(Vec<c64>);

impl PointCloud {
    pub fn new(points: Vec<c64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("points", "[]", "point cloud must be nonempty"));
        }
        if let Some(p) = points.iter().find(|p| !(p.re.is_finite() && p.im.is_finite())) {
            return Err(Error::invalid("points", p, "contains a non-finite point"));
        }
        Ok(Self(points))
    }

    pub fn from_reals(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| c64::new(v, 0.0)).collect())
    }

    pub fn points(&self) -> &[c64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// An optimal coupling: `left[i]` is matched with `right[permutation[i]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub permutation: Vec<usize>,
    /// `(1/m) sum |x_i - y_{sigma(i)}|^2`, the squared distance.
    pub cost: f64,
}

impl Matching {
    pub fn distance(&self) -> f64 {
        self.cost.max(0.0).sqrt()
    }
}

fn check_sizes(a: &PointCloud, b: &PointCloud) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::UnequalSupports {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// The optimal matching between two clouds of equal size.
pub fn optimal_matching(a: &PointCloud, b: &PointCloud) -> Result<Matching> {
    check_sizes(a, b)?;
    let (x, y) = (a.points(), b.points());
    let m = x.len();
    let cost = |i: usize, j: usize| (x[i] - y[j]).norm_sqr();

    // Rows and columns are 1-based; index 0 is the virtual start column.
    let mut row_pot = vec![0.0f64; m + 1];
    let mut col_pot = vec![0.0f64; m + 1];
    let mut col_owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut min_slack = vec![0.0f64; m + 1];
    let mut used = vec![false; m + 1];

    for row in 1..=m {
        col_owner[0] = row;
        let mut col = 0usize;
        min_slack.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[col] = true;
            let owner = col_owner[col];
            let mut delta = f64::INFINITY;
            let mut next = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let slack = cost(owner - 1, j - 1) - row_pot[owner] - col_pot[j];
                if slack < min_slack[j] {
                    min_slack[j] = slack;
                    way[j] = col;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    next = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    row_pot[col_owner[j]] += delta;
                    col_pot[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            col = next;
            if col_owner[col] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col];
            col_owner[col] = col_owner[prev];
            col = prev;
            if col == 0 {
                break;
            }
        }
    }

    let mut permutation = vec![0usize; m];
    for j in 1..=m {
        permutation[col_owner[j] - 1] = j - 1;
    }
    let total: f64 = permutation.iter().enumerate().map(|(i, &j)| cost(i, j)).sum();
    Ok(Matching {
        permutation,
        cost: total / m as f64,
    })
}

/// `W_2` between the uniform measures on two equal-size clouds.
pub fn wasserstein2(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    Ok(optimal_matching(a, b)?.distance())
}

/// Largest support size accepted by [`wasserstein2_oracle`].
pub const ORACLE_CAP: usize = 8;

/// `W_2` by exhaustive search over all permutations; for cross-checking only.
pub fn wasserstein2_oracle(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    check_sizes(a, b)?;
    let m = a.len();
    if m > ORACLE_CAP {
        return Err(Error::SizeCapExceeded { size: m, cap: ORACLE_CAP });
    }
    let (x, y) = (a.points(), b.points());
    let mut perm: Vec<usize> = (0..m).collect();
    let mut best = f64::INFINITY;
    // Heap's algorithm.
    let mut counters = vec![0usize; m];
    let eval = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| (x[i] - y[j]).norm_sqr()).sum::<f64>();
    best = best.min(eval(&perm));
    let mut i = 0;
    while i < m {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            best = best.min(eval(&perm));
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    Ok((best / m as f64).max(0.0).sqrt())
}
