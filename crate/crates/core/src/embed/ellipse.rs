//! Per-class center of mass and principal-axis standard deviations.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::linalg::symmetric_eigen;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEllipse {
    pub class_id: u32,
    pub count: usize,
    pub center: [f64; 2],
    /// `axes[0]` is the major direction, `axes[1]` the minor one.
    pub axes: [[f64; 2]; 2],
    /// Population standard deviation along each axis, `radii[0] >= radii[1]`.
    pub radii: [f64; 2],
}

/// Principal components of a point cloud (population covariance).
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalAxes {
    pub mean: Array1<f64>,
    /// Descending variances.
    pub variances: Vec<f64>,
    /// Row `i` is the unit direction of component `i`.
    pub directions: Array2<f64>,
}

fn flip_to_positive(mut v: ndarray::ArrayViewMut1<'_, f64>) {
    if let Some(&first) = v.iter().find(|x| x.abs() > 1e-12) {
        if first < 0.0 {
            v.mapv_inplace(|x| -x);
        }
    }
}

fn centered(points: ArrayView2<'_, f64>) -> (Array1<f64>, Array2<f64>) {
    let n = points.nrows() as f64;
    let mut mean = Array1::<f64>::zeros(points.ncols());
    for row in points.rows() {
        mean += &row;
    }
    mean /= n;
    let xc = &points - &mean.view().insert_axis(Axis(0));
    (mean, xc)
}

fn covariance_route(xc: &Array2<f64>, k: usize) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = xc.nrows() as f64;
    let cov = xc.t().dot(xc) / n;
    let eig = symmetric_eigen(&cov)?;
    let dirs = eig.vectors.t().slice(ndarray::s![..k, ..]).to_owned();
    let vars = eig.values[..k].iter().map(|v| v.max(0.0)).collect();
    Ok((vars, dirs))
}

/// Eigenvectors of the n×n Gram matrix mapped back through Xcᵀ; directions
/// past the Gram rank are completed by Gram–Schmidt on the standard basis.
fn gram_route(xc: &Array2<f64>, k: usize) -> Result<(Vec<f64>, Array2<f64>)> {
    let (n, dim) = xc.dim();
    let gram = xc.dot(&xc.t()) / n as f64;
    let eig = symmetric_eigen(&gram)?;
    let top = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let mut vars = Vec::with_capacity(k);
    let mut dirs = Array2::<f64>::zeros((k, dim));
    let mut filled = 0;
    for (i, &lambda) in eig.values.iter().enumerate().take(k) {
        if lambda <= 1e-12 * top || lambda <= 0.0 {
            break;
        }
        let u = eig.vectors.column(i);
        let mut v = xc.t().dot(&u);
        let norm = v.dot(&v).sqrt();
        v /= norm;
        dirs.row_mut(i).assign(&v);
        vars.push(lambda);
        filled += 1;
    }
    let mut basis = 0;
    while filled < k && basis < dim {
        let mut v = Array1::<f64>::zeros(dim);
        v[basis] = 1.0;
        basis += 1;
        for r in 0..filled {
            let proj = dirs.row(r).dot(&v);
            v.scaled_add(-proj, &dirs.row(r));
        }
        let norm = v.dot(&v).sqrt();
        if norm > 1e-8 {
            dirs.row_mut(filled).assign(&(v / norm));
            vars.push(0.0);
            filled += 1;
        }
    }
    Ok((vars, dirs))
}

/// Top-`k` principal axes. Uses the n×n Gram matrix instead of the D×D
/// covariance when there are fewer points than dimensions.
pub fn principal_axes(points: ArrayView2<'_, f64>, k: usize) -> Result<PrincipalAxes> {
    let (n, dim) = points.dim();
    if n == 0 || k == 0 || k > dim {
        return Err(Error::InvalidInput(format!(
            "principal axes need n >= 1 and 1 <= k <= D, got n={n}, k={k}, D={dim}"
        )));
    }
    let (mean, xc) = centered(points);
    let (variances, mut directions) = if n < dim {
        gram_route(&xc, k)?
    } else {
        covariance_route(&xc, k)?
    };
    for row in directions.rows_mut() {
        flip_to_positive(row);
    }
    Ok(PrincipalAxes {
        mean,
        variances,
        directions,
    })
}

#[cfg(test)]
pub(crate) fn principal_axes_by_route(
    points: ArrayView2<'_, f64>,
    k: usize,
    gram: bool,
) -> Result<PrincipalAxes> {
    let (mean, xc) = centered(points);
    let (variances, mut directions) = if gram {
        gram_route(&xc, k)?
    } else {
        covariance_route(&xc, k)?
    };
    for row in directions.rows_mut() {
        flip_to_positive(row);
    }
    Ok(PrincipalAxes {
        mean,
        variances,
        directions,
    })
}

/// One ellipse per class present, ordered by class id. Singleton classes
/// get zero radii and the identity axes.
pub fn class_ellipses(coords: ArrayView2<'_, f64>, labels: &[u32]) -> Result<Vec<ClassEllipse>> {
    if coords.ncols() != 2 {
        return Err(Error::InvalidInput(format!(
            "ellipses need 2-D coordinates, got {} columns",
            coords.ncols()
        )));
    }
    if labels.len() != coords.nrows() {
        return Err(Error::InvalidInput(format!(
            "{} labels for {} points",
            labels.len(),
            coords.nrows()
        )));
    }
    let mut members: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &label) in labels.iter().enumerate() {
        members.entry(label).or_default().push(i);
    }
    members
        .into_iter()
        .map(|(class_id, rows)| {
            let pts = coords.select(Axis(0), &rows);
            if rows.len() == 1 {
                return Ok(ClassEllipse {
                    class_id,
                    count: 1,
                    center: [pts[[0, 0]], pts[[0, 1]]],
                    axes: [[1.0, 0.0], [0.0, 1.0]],
                    radii: [0.0, 0.0],
                });
            }
            let pa = principal_axes(pts.view(), 2)?;
            let d = &pa.directions;
            Ok(ClassEllipse {
                class_id,
                count: rows.len(),
                center: [pa.mean[0], pa.mean[1]],
                axes: [[d[[0, 0]], d[[0, 1]]], [d[[1, 0]], d[[1, 1]]]],
                radii: [pa.variances[0].sqrt(), pa.variances[1].sqrt()],
            })
        })
        .collect()
}
