use std::collections::BTreeSet;

use super::{ColumnLabel, DesignMatrix};
use crate::error::{Error, Result};

/// Columns whose remaining norm falls below this fraction of the largest
/// column norm are treated as linearly dependent.
const RANK_TOL: f64 = 1e-10;

/// Householder QR with column pivoting, `X P = Q R`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    n: usize,
    p: usize,
    /// Column-major working matrix; upper triangle holds R.
    a: Vec<f64>,
    reflectors: Vec<Vec<f64>>,
    /// `perm[k]` is the original column in position `k`.
    pub perm: Vec<usize>,
    pub rank: usize,
}

impl PivotedQr {
    pub fn new(x: &DesignMatrix) -> Self {
        let (n, p) = (x.n_rows, x.n_cols());
        let mut a = x.data.clone();
        let mut perm: Vec<usize> = (0..p).collect();
        let mut reflectors = Vec::new();
        let steps = n.min(p);
        let col_norm = |a: &[f64], c: usize, from: usize| -> f64 {
            a[c * n + from..(c + 1) * n].iter().map(|v| v * v).sum::<f64>().sqrt()
        };
        let scale = (0..p).map(|c| col_norm(&a, c, 0)).fold(0.0, f64::max);
        let mut rank = 0;
        for k in 0..steps {
            let (best, best_norm) = (k..p)
                .map(|c| (c, col_norm(&a, c, k)))
                .fold((k, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if best_norm <= RANK_TOL * scale || best_norm == 0.0 {
                break;
            }
            if best != k {
                for i in 0..n {
                    a.swap(k * n + i, best * n + i);
                }
                perm.swap(k, best);
            }
            let x0 = a[k * n + k];
            let alpha = if x0 >= 0.0 { -best_norm } else { best_norm };
            let mut v: Vec<f64> = a[k * n + k..(k + 1) * n].to_vec();
            v[0] -= alpha;
            let vtv: f64 = v.iter().map(|t| t * t).sum();
            if vtv > 0.0 {
                for c in k + 1..p {
                    let col = &mut a[c * n + k..(c + 1) * n];
                    let s = 2.0 * col.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() / vtv;
                    col.iter_mut().zip(&v).for_each(|(a, b)| *a -= s * b);
                }
            }
            a[k * n + k] = alpha;
            a[k * n + k + 1..(k + 1) * n].fill(0.0);
            reflectors.push(v);
            rank += 1;
        }
        PivotedQr { n, p, a, reflectors, perm, rank }
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        self.a[j * self.n + i]
    }

    /// Applies `Qᵀ` to `y`.
    pub fn qt_mul(&self, y: &[f64]) -> Vec<f64> {
        let mut out = y.to_vec();
        for (k, v) in self.reflectors.iter().enumerate() {
            let vtv: f64 = v.iter().map(|t| t * t).sum();
            if vtv == 0.0 {
                continue;
            }
            let seg = &mut out[k..];
            let s = 2.0 * seg.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / vtv;
            seg.iter_mut().zip(v).for_each(|(a, b)| *a -= s * b);
        }
        out
    }

    /// Inverse of the leading `rank x rank` block of R.
    fn r11_inverse(&self) -> Vec<Vec<f64>> {
        let r = self.rank;
        let mut inv = vec![vec![0.0; r]; r];
        for col in 0..r {
            for i in (0..=col).rev() {
                let mut s = if i == col { 1.0 } else { 0.0 };
                for k in i + 1..=col {
                    s -= self.r(i, k) * inv[k][col];
                }
                inv[i][col] = s / self.r(i, i);
            }
        }
        inv
    }

    pub fn n_cols(&self) -> usize {
        self.p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmFit {
    pub labels: Vec<ColumnLabel>,
    /// `None` for columns dropped as linearly dependent.
    pub coefficients: Vec<Option<f64>>,
    /// `None` when inestimable or when no residual degrees of freedom remain.
    pub std_errors: Vec<Option<f64>>,
    pub residual_variance: Option<f64>,
    pub residuals: Vec<f64>,
    pub rank: usize,
    pub df_resid: usize,
    /// Job-geos with an estimated female slope.
    pub estimable_groups: BTreeSet<usize>,
}

impl LmFit {
    /// Female slope estimate and its standard error for job-geo `j`.
    pub fn female_effect(&self, j: usize) -> Option<(f64, Option<f64>)> {
        self.labels
            .iter()
            .position(|l| *l == ColumnLabel::FemaleSlope { job_geo: j })
            .and_then(|c| self.coefficients[c].map(|b| (b, self.std_errors[c])))
    }

    pub fn coefficient(&self, label: ColumnLabel) -> Option<f64> {
        self.labels.iter().position(|l| *l == label).and_then(|c| self.coefficients[c])
    }
}

/// Least squares through a column-pivoted QR. Rank-deficient columns are
/// reported as inestimable instead of being zeroed.
pub fn fit_ols(x: &DesignMatrix, y: &[f64]) -> Result<LmFit> {
    if y.len() != x.n_rows {
        return Err(Error::Precondition(format!(
            "response has {} rows, design has {}",
            y.len(),
            x.n_rows
        )));
    }
    let qr = PivotedQr::new(x);
    let r = qr.rank;
    let qty = qr.qt_mul(y);
    let mut b_perm = vec![0.0; r];
    for i in (0..r).rev() {
        let mut s = qty[i];
        for k in i + 1..r {
            s -= qr.r(i, k) * b_perm[k];
        }
        b_perm[i] = s / qr.r(i, i);
    }
    let mut coefficients = vec![None; x.n_cols()];
    for (k, &c) in qr.perm[..r].iter().enumerate() {
        coefficients[c] = Some(b_perm[k]);
    }

    let mut residuals = y.to_vec();
    for (c, b) in coefficients.iter().enumerate() {
        if let Some(b) = b {
            for (res, xv) in residuals.iter_mut().zip(x.column(c)) {
                *res -= b * xv;
            }
        }
    }
    let df_resid = x.n_rows - r;
    let residual_variance = (df_resid > 0).then(|| residuals.iter().map(|e| e * e).sum::<f64>() / df_resid as f64);

    let mut std_errors = vec![None; x.n_cols()];
    if let Some(s2) = residual_variance {
        let inv = qr.r11_inverse();
        for (k, &c) in qr.perm[..r].iter().enumerate() {
            let v: f64 = inv[k].iter().map(|t| t * t).sum();
            std_errors[c] = Some((s2 * v).sqrt());
        }
    }

    let estimable_groups = x
        .labels
        .iter()
        .zip(&coefficients)
        .filter_map(|(l, b)| match (l, b) {
            (ColumnLabel::FemaleSlope { job_geo }, Some(_)) => Some(*job_geo),
            _ => None,
        })
        .collect();

    Ok(LmFit {
        labels: x.labels.clone(),
        coefficients,
        std_errors,
        residual_variance,
        residuals,
        rank: r,
        df_resid,
        estimable_groups,
    })
}
