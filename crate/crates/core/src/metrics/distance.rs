use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Symmetric N×N Euclidean distance matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    d: Array2<f64>,
}

impl DistanceMatrix {
    /// Wraps an existing matrix after checking squareness, zero diagonal,
    /// non-negativity and symmetry (to 1e-12).
    pub fn from_array(d: Array2<f64>) -> Result<Self> {
        let (rows, cols) = d.dim();
        if rows != cols {
            return Err(Error::InvalidInput(format!(
                "distance matrix must be square, got {rows}x{cols}"
            )));
        }
        for i in 0..rows {
            if d[[i, i]] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal at {i}")));
            }
            for j in 0..rows {
                let v = d[[i, j]];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "entry ({i},{j}) = {v} is not a finite non-negative distance"
                    )));
                }
                if (v - d[[j, i]]).abs() > 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "asymmetric entries at ({i},{j})"
                    )));
                }
            }
        }
        Ok(DistanceMatrix { d })
    }

    pub fn n(&self) -> usize {
        self.d.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[[i, j]]
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.d
    }

    /// Strict upper triangle in row-major order.
    pub fn upper_triangle(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| self.d[[i, j]]))
    }
}

#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let t = x - y;
        acc += t * t;
    }
    acc.sqrt()
}

pub fn distance_matrix(points: ArrayView2<'_, f64>) -> Result<DistanceMatrix> {
    let n = points.nrows();
    if n == 0 {
        return Err(Error::InvalidInput(
            "distance matrix needs at least one point".into(),
        ));
    }
    let points = points.as_standard_layout();
    let flat = points.as_slice().expect("standard layout");
    let dim = points.ncols();
    let mut d = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let a = &flat[i * dim..(i + 1) * dim];
        for j in i + 1..n {
            let v = euclidean(a, &flat[j * dim..(j + 1) * dim]);
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    Ok(DistanceMatrix { d })
}

/// Per-dimension `0.5·(x − μ)/σ` with population σ. Columns whose values
/// are all equal map to zero.
pub fn zscale(points: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let (n, dim) = points.dim();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "z-scaling needs at least 2 points, got {n}"
        )));
    }
    let nf = n as f64;
    let mut out = Array2::<f64>::zeros((n, dim));
    for c in 0..dim {
        let col = points.column(c);
        let first = col[0];
        if col.iter().all(|&x| x == first) {
            continue;
        }
        let mut sum = 0.0;
        for &x in col.iter() {
            sum += x;
        }
        let mean = sum / nf;
        let mut ss = 0.0;
        for &x in col.iter() {
            ss += (x - mean) * (x - mean);
        }
        let sigma = (ss / nf).sqrt();
        for (o, &x) in out.column_mut(c).iter_mut().zip(col.iter()) {
            *o = 0.5 * (x - mean) / sigma;
        }
    }
    Ok(out)
}

pub fn mean_pairwise_distance(dm: &DistanceMatrix) -> Result<f64> {
    let n = dm.n();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "mean pairwise distance needs n >= 2, got {n}"
        )));
    }
    let mut sum = 0.0;
    for v in dm.upper_triangle() {
        sum += v;
    }
    Ok(sum / (n * (n - 1) / 2) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zscale_binary_column() {
        let z = zscale(array![[0.0], [0.0], [1.0], [1.0]].view()).unwrap();
        assert_eq!(z, array![[-0.5], [-0.5], [0.5], [0.5]]);
    }

    #[test]
    fn zscale_constant_column_is_zero() {
        let z = zscale(array![[3.0, 1.0], [3.0, 2.0], [3.0, 6.0]].view()).unwrap();
        assert_eq!(z.column(0).to_vec(), vec![0.0, 0.0, 0.0]);
        // 0.1 is not exactly representable, the mean would round.
        let z = zscale(array![[0.1], [0.1], [0.1], [0.1], [0.1], [0.1], [0.1]].view()).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zscale_fixed_point() {
        let x = array![[-0.5], [-0.5], [0.5], [0.5]];
        assert_eq!(zscale(x.view()).unwrap(), x);
    }

    #[test]
    fn zscale_moments() {
        let x = array![
            [1.0, -4.0],
            [2.5, 8.0],
            [7.0, 0.5],
            [-3.0, 2.0],
            [0.25, 0.0]
        ];
        let z = zscale(x.view()).unwrap();
        for c in 0..2 {
            let col = z.column(c);
            let mean = col.sum() / 5.0;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0).sqrt();
            assert!(mean.abs() < 1e-12);
            assert!((sd - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn zscale_needs_two_points() {
        assert!(zscale(array![[1.0, 2.0]].view()).is_err());
    }

    #[test]
    fn distances_of_line_points() {
        let dm = distance_matrix(array![[0.0], [3.0], [4.0]].view()).unwrap();
        assert_eq!(
            dm.as_array(),
            &array![[0.0, 3.0, 4.0], [3.0, 0.0, 1.0], [4.0, 1.0, 0.0]]
        );
        assert_eq!(mean_pairwise_distance(&dm).unwrap(), 8.0 / 3.0);
    }

    #[test]
    fn identical_rows_give_zero_matrix() {
        let dm = distance_matrix(array![[1.5, -2.0], [1.5, -2.0], [1.5, -2.0]].view()).unwrap();
        assert!(dm.as_array().iter().all(|&v| v == 0.0));
        assert_eq!(mean_pairwise_distance(&dm).unwrap(), 0.0);
    }

    #[test]
    fn mean_distance_needs_two_points() {
        let dm = distance_matrix(array![[1.0]].view()).unwrap();
        assert!(mean_pairwise_distance(&dm).is_err());
    }

    #[test]
    fn from_array_rejects_bad_matrices() {
        assert!(DistanceMatrix::from_array(array![[0.0, 1.0], [2.0, 0.0]]).is_err());
        assert!(DistanceMatrix::from_array(array![[1.0, 1.0], [1.0, 0.0]]).is_err());
        assert!(DistanceMatrix::from_array(array![[0.0, -1.0], [-1.0, 0.0]]).is_err());
        assert!(DistanceMatrix::from_array(array![[0.0, 5.0], [5.0, 0.0]]).is_ok());
    }
}
