use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::AnalyticsError;

pub const POWER_TOLERANCE: f64 = 1e-10;
pub const POWER_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    /// out_dim × D, one unit-norm component per row, by eigenvalue descending.
    pub components: Vec<Vec<f64>>,
    /// n × out_dim projections of the centred input.
    pub coordinates: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub mean: Vec<f64>,
}

/// Flips `v` so that its largest-magnitude entry is positive.
fn orient(v: &mut Array1<f64>) {
    let mut idx = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[idx].abs() {
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        v.mapv_inplace(|x| -x);
    }
}

fn orthogonalise(v: &mut Array1<f64>, basis: &[Array1<f64>]) {
    for b in basis {
        let p = v.dot(b);
        v.scaled_add(-p, b);
    }
}

/// Start vector for power iteration: the coordinate axis carrying the most
/// remaining variance, made orthogonal to the components found so far.
fn start_vector(c: &Array2<f64>, found: &[Array1<f64>]) -> Array1<f64> {
    let dim = c.nrows();
    let mut axes: Vec<usize> = (0..dim).collect();
    axes.sort_by(|&a, &b| c[[b, b]].total_cmp(&c[[a, a]]).then(a.cmp(&b)));
    for &axis in &axes {
        let mut v = Array1::from_shape_fn(dim, |i| if i == axis { 1.0 } else { 0.0 } + 1e-3 / (1.0 + i as f64));
        orthogonalise(&mut v, found);
        let norm = v.dot(&v).sqrt();
        if norm > 1e-6 {
            return v / norm;
        }
    }
    unreachable!("fewer components requested than dimensions")
}

/// Principal components by power iteration with deflation of the sample
/// covariance matrix.
pub fn pca_project(vectors: &Array2<f64>, out_dim: usize) -> Result<PcaResult, AnalyticsError> {
    let (n, dim) = vectors.dim();
    if n < 2 {
        return Err(AnalyticsError::TooFewPoints(n));
    }
    if out_dim == 0 || out_dim > dim {
        return Err(AnalyticsError::BadDimension { requested: out_dim, available: dim });
    }
    let mean = vectors.mean_axis(Axis(0)).expect("n ≥ 2");
    let centred = vectors - &mean;
    let cov = centred.t().dot(&centred) / (n as f64 - 1.0);
    let trace: f64 = cov.diag().sum();
    if trace <= f64::EPSILON * dim as f64 {
        return Err(AnalyticsError::DegenerateInput);
    }

    let mut deflated = cov.clone();
    let mut components: Vec<Array1<f64>> = Vec::with_capacity(out_dim);
    let mut eigenvalues = Vec::with_capacity(out_dim);
    for _ in 0..out_dim {
        let mut v = start_vector(&deflated, &components);
        for _ in 0..POWER_MAX_ITERATIONS {
            let mut next = deflated.dot(&v);
            orthogonalise(&mut next, &components);
            let norm = next.dot(&next).sqrt();
            if norm < 1e-300 {
                break;
            }
            next /= norm;
            let delta = (&next - &v).mapv(f64::abs).sum().min((&next + &v).mapv(f64::abs).sum());
            v = next;
            if delta < POWER_TOLERANCE {
                break;
            }
        }
        orient(&mut v);
        let lambda = v.dot(&cov.dot(&v)).max(0.0);
        deflated -= &(lambda * &v.view().insert_axis(Axis(1)).dot(&v.view().insert_axis(Axis(0))));
        eigenvalues.push(lambda);
        components.push(v);
    }

    let coordinates = centred
        .rows()
        .into_iter()
        .map(|row| components.iter().map(|c| row.dot(c)).collect())
        .collect();
    Ok(PcaResult {
        explained_variance_ratio: eigenvalues.iter().map(|l| l / trace).collect(),
        components: components.into_iter().map(|c| c.to_vec()).collect(),
        coordinates,
        eigenvalues,
        mean: mean.to_vec(),
    })
}
