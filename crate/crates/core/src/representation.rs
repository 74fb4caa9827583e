//! Per-series normalization and functional principal component analysis.
//!
//! Both transforms implement [`Representation`], so further representations
//! (for example a learned encoder) can be chained by the pipeline without
//! changing it.

use nalgebra::DMatrix;
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::TimeSeriesDataset;
use crate::error::RepresentationError;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationKind {
    /// `(x - mean) / std`, population standard deviation.
    #[default]
    ZScore,
    /// `x / mean`, the per-unit convention for load profiles.
    Mean,
    /// `(x - min) / (max - min)`.
    MinMax,
    None,
}

impl NormalizationKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            NormalizationKind::ZScore => "z_score",
            NormalizationKind::Mean => "mean",
            NormalizationKind::MinMax => "min_max",
            NormalizationKind::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FpcaConfig {
    /// Number of principal components kept.
    pub components: usize,
    #[serde(default = "default_true")]
    pub center: bool,
}

fn default_true() -> bool {
    true
}

impl FpcaConfig {
    pub fn new(components: usize) -> Self {
        Self {
            components,
            center: true,
        }
    }
}

/// Which symmetric matrix was decomposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenRoute {
    /// d×d covariance of the columns.
    Covariance,
    /// n×n Gram matrix of the rows.
    Gram,
}

/// One entry of the provenance list carried by a [`RepresentedMatrix`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "transform", rename_all = "snake_case")]
pub enum Transform {
    Normalize {
        kind: NormalizationKind,
        degenerate_rows: Vec<usize>,
    },
    Fpca {
        components: usize,
        center: bool,
        route: EigenRoute,
    },
    /// Applied by k-shape to input that was not already z-normalized.
    ShapeZNormalize { degenerate_rows: Vec<usize> },
}

/// The n×m matrix fed to clustering, plus how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentedMatrix {
    labels: Vec<String>,
    data: Array2<f64>,
    transforms: Vec<Transform>,
    explained_variance_ratio: Option<Vec<f64>>,
}

impl RepresentedMatrix {
    /// Raw matrix with no provenance.
    ///
    /// # Panics
    /// When `labels.len()` differs from the number of rows.
    pub fn new(labels: Vec<String>, data: Array2<f64>) -> Self {
        assert_eq!(labels.len(), data.nrows(), "one label per row");
        Self {
            labels,
            data,
            transforms: Vec::new(),
            explained_variance_ratio: None,
        }
    }

    pub fn from_dataset(dataset: &TimeSeriesDataset) -> Self {
        Self::new(dataset.labels().to_vec(), dataset.values().clone())
    }

    /// Convenience constructor with generated labels `s00`, `s01`, ...
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let width = rows.len().to_string().len().max(2);
        let labels = (0..rows.len()).map(|i| format!("s{i:0width$}")).collect();
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(
            labels,
            Array2::from_shape_vec((rows.len(), d), flat).expect("rectangular rows"),
        )
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.data
            .row(i)
            .to_slice()
            .expect("represented matrices are kept in standard layout")
    }

    pub fn n_rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn transforms(&self) -> &[Transform] {
        &self.transforms
    }

    pub fn explained_variance_ratio(&self) -> Option<&[f64]> {
        self.explained_variance_ratio.as_deref()
    }

    /// True when the last normalization applied was a z-score.
    pub fn is_z_normalized(&self) -> bool {
        matches!(
            self.transforms.last(),
            Some(Transform::Normalize {
                kind: NormalizationKind::ZScore,
                ..
            }) | Some(Transform::ShapeZNormalize { .. })
        )
    }

    /// Same matrix with rows reordered by `order` (new row `i` is old row `order[i]`).
    pub fn permuted(&self, order: &[usize]) -> Self {
        let data = self.data.select(Axis(0), order);
        Self {
            labels: order.iter().map(|&i| self.labels[i].clone()).collect(),
            data: data.as_standard_layout().into_owned(),
            transforms: self.transforms.clone(),
            explained_variance_ratio: self.explained_variance_ratio.clone(),
        }
    }

    pub(crate) fn with_data(&self, data: Array2<f64>, transform: Transform) -> Self {
        let mut transforms = self.transforms.clone();
        transforms.push(transform);
        Self {
            labels: self.labels.clone(),
            data: data.as_standard_layout().into_owned(),
            transforms,
            explained_variance_ratio: self.explained_variance_ratio.clone(),
        }
    }
}

/// A stage mapping one represented matrix to another, row order preserved.
pub trait Representation: Send + Sync {
    fn name(&self) -> &'static str;
    fn apply(&self, input: &RepresentedMatrix) -> Result<RepresentedMatrix, RepresentationError>;
}

#[derive(Debug, Clone, Copy)]
pub struct Normalize(pub NormalizationKind);

impl Representation for Normalize {
    fn name(&self) -> &'static str {
        "normalize"
    }

    fn apply(&self, input: &RepresentedMatrix) -> Result<RepresentedMatrix, RepresentationError> {
        Ok(normalize_matrix(input, self.0))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Fpca(pub FpcaConfig);

impl Representation for Fpca {
    fn name(&self) -> &'static str {
        "fpca"
    }

    fn apply(&self, input: &RepresentedMatrix) -> Result<RepresentedMatrix, RepresentationError> {
        fpca(input, &self.0)
    }
}

const DEGENERACY_EPS: f64 = 1e-12;

/// Normalizes one series. The flag is set for degenerate rows (zero spread,
/// or zero mean for [`NormalizationKind::Mean`]), which map to all zeros, or all
/// ones for the mean variant.
pub fn normalize_row(row: &[f64], kind: NormalizationKind) -> (Vec<f64>, bool) {
    let d = row.len() as f64;
    match kind {
        NormalizationKind::None => (row.to_vec(), false),
        NormalizationKind::ZScore => {
            let mean = row.iter().sum::<f64>() / d;
            let var = row.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / d;
            let std = var.sqrt();
            if std <= DEGENERACY_EPS * mean.abs().max(1.0) {
                (vec![0.0; row.len()], true)
            } else {
                (row.iter().map(|x| (x - mean) / std).collect(), false)
            }
        }
        NormalizationKind::Mean => {
            let mean = row.iter().sum::<f64>() / d;
            let scale = row.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if mean.abs() <= DEGENERACY_EPS * scale.max(1.0) {
                (vec![1.0; row.len()], true)
            } else {
                (row.iter().map(|x| x / mean).collect(), false)
            }
        }
        NormalizationKind::MinMax => {
            let min = row.iter().copied().fold(f64::INFINITY, f64::min);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if max - min <= DEGENERACY_EPS * max.abs().max(min.abs()).max(1.0) {
                (vec![0.0; row.len()], true)
            } else {
                (row.iter().map(|x| (x - min) / (max - min)).collect(), false)
            }
        }
    }
}

/// Row-wise normalization of a dataset.
pub fn normalize(dataset: &TimeSeriesDataset, kind: NormalizationKind) -> RepresentedMatrix {
    normalize_matrix(&RepresentedMatrix::from_dataset(dataset), kind)
}

pub fn normalize_matrix(input: &RepresentedMatrix, kind: NormalizationKind) -> RepresentedMatrix {
    let (data, degenerate_rows) = normalize_rows(input, kind);
    input.with_data(data, Transform::Normalize { kind, degenerate_rows })
}

pub(crate) fn normalize_rows(input: &RepresentedMatrix, kind: NormalizationKind) -> (Array2<f64>, Vec<usize>) {
    let rows = par::map_range(input.n_rows(), |i| normalize_row(input.row(i), kind));
    let degenerate_rows = rows
        .iter()
        .enumerate()
        .filter_map(|(i, (_, flag))| flag.then_some(i))
        .collect();
    let flat: Vec<f64> = rows.into_iter().flat_map(|(r, _)| r).collect();
    let data = Array2::from_shape_vec((input.n_rows(), input.dim()), flat).expect("normalization preserves shape");
    (data, degenerate_rows)
}

/// Projects rows onto the leading `components` eigenvectors of the sample
/// covariance (curves sampled on a uniform grid, identity quadrature).
///
/// Each component is signed so that its largest-magnitude loading is positive.
/// The decomposed matrix is the d×d covariance when `d <= n` and the n×n Gram
/// matrix otherwise; both give the same scores.
pub fn fpca(matrix: &RepresentedMatrix, config: &FpcaConfig) -> Result<RepresentedMatrix, RepresentationError> {
    let (n, d) = matrix.data.dim();
    if n < 2 {
        return Err(RepresentationError::TooFewRows { needed: 2, got: n });
    }
    let max = (n - 1).min(d);
    let p = config.components;
    if p == 0 || p > max {
        return Err(RepresentationError::InvalidComponents { p, max });
    }

    let mut x = matrix.data.clone();
    if config.center {
        let means = x.mean_axis(Axis(0)).expect("n >= 2");
        x -= &means;
    }
    let denom = (n - 1) as f64;
    let xm = DMatrix::from_row_iterator(n, d, x.iter().copied());

    let route = if d <= n {
        EigenRoute::Covariance
    } else {
        EigenRoute::Gram
    };
    let (eigenvalues, loadings) = match route {
        EigenRoute::Covariance => {
            let cov = (xm.transpose() * &xm) / denom;
            let (vals, vecs) = sorted_eigen(cov);
            (vals, vecs)
        }
        EigenRoute::Gram => {
            let gram = (&xm * xm.transpose()) / denom;
            let (vals, u) = sorted_eigen(gram);
            // v_k = Xᵀ u_k / ||Xᵀ u_k||
            let mut v = DMatrix::zeros(d, n);
            for (k, &val) in vals.iter().enumerate() {
                let col = xm.transpose() * u.column(k);
                let norm = col.norm();
                if val > 0.0 && norm > 0.0 {
                    v.set_column(k, &(col / norm));
                }
            }
            (vals, v)
        }
    };

    let total: f64 = eigenvalues.iter().map(|v| v.max(0.0)).sum();
    let top = total.max(f64::MIN_POSITIVE);
    // eigenvalues below this are numerical noise of a rank-deficient matrix
    let noise = eigenvalues.first().copied().unwrap_or(0.0).abs() * 1e-12 * (n.max(d) as f64);
    let mut scores = Array2::<f64>::zeros((n, p));
    let mut ratios = Vec::with_capacity(p);
    for k in 0..p {
        let mut v = loadings.column(k).into_owned();
        let pivot = v
            .iter()
            .enumerate()
            .fold(
                (0usize, 0.0f64),
                |best, (i, x)| {
                    if x.abs() > best.1 {
                        (i, x.abs())
                    } else {
                        best
                    }
                },
            )
            .0;
        if v[pivot] < 0.0 {
            v = -v;
        }
        let s = &xm * &v;
        for i in 0..n {
            scores[[i, k]] = s[i];
        }
        let lambda = if eigenvalues[k] > noise { eigenvalues[k] } else { 0.0 };
        ratios.push(if total > 0.0 { lambda / top } else { 0.0 });
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(RepresentationError::NonFinite);
    }

    let mut out = matrix.with_data(
        scores,
        Transform::Fpca {
            components: p,
            center: config.center,
            route,
        },
    );
    out.explained_variance_ratio = Some(ratios);
    Ok(out)
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending, vectors as columns.
fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(eig.eigenvectors.nrows(), order.len());
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}
