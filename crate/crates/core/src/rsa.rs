//! Correspondence between two representation spaces.
//!
//! Two scoring methods:
//!
//! * [`rsa_score`]: Pearson correlation between the strict upper triangulars
//!   of two dissimilarity matrices over the same items — how similar the two
//!   similarity structures are in their totality.
//! * [`rsa_regress_score`]: embed the items in both spaces as similarity
//!   vectors against shared reference anchors, ridge-regress the source view
//!   onto the target view, and report the cross-validated Pearson correlation
//!   between predicted and true target views — how predictable one space is
//!   from the other.
//!
//! The ridge fit is closed-form on centered data with an unpenalized
//! intercept: `(Xc' Xc + n * penalty * I) B = Xc' Yc`, solved by Cholesky
//! factorization. Scaling the penalty by `n` keeps its units comparable
//! across dataset sizes since the data term is a mean, not a sum.

use ndarray::{Array1, Array2, Axis};
use serde::Serialize;
use thiserror::Error;

use crate::prng::Prng;
use crate::simspace::{DissimMatrix, SimEmbedding};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum RsaError {
    #[error("vectors have different lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {need} entries, got {got}")]
    TooShort { got: usize, need: usize },
    #[error("degenerate input: zero variance")]
    ZeroVariance,
    #[error("inputs have different item counts: {left} vs {right}")]
    IdCountMismatch { left: usize, right: usize },
    #[error("item ids disagree at position {index}: {left} vs {right}")]
    IdMismatch {
        index: usize,
        left: String,
        right: String,
    },
    #[error("singular system: the centered design is rank-deficient at penalty 0; use a positive penalty")]
    RankDeficient,
    #[error("penalty must be finite and non-negative, got {0}")]
    InvalidPenalty(f64),
    #[error("cross-validation needs at least 2 folds, got {0}")]
    InvalidFolds(usize),
    #[error("{folds} folds exceed the {items} available items")]
    FoldsExceedItems { folds: usize, items: usize },
    #[error("penalty grid is empty or contains non-positive values")]
    InvalidPenaltyGrid,
}

/// Pearson correlation coefficient.
///
/// Computed as `cov / sqrt(var_x * var_y)` with a single square root, so
/// exactly linear integer-valued inputs correlate to exactly 1 or -1.
pub fn pearson<S: Scalar>(x: &[S], y: &[S]) -> Result<S, RsaError> {
    if x.len() != y.len() {
        return Err(RsaError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(RsaError::TooShort {
            got: x.len(),
            need: 3,
        });
    }
    let n = S::from_usize(x.len()).expect("length fits the scalar type");
    let mean = |v: &[S]| v.iter().fold(S::zero(), |a, &b| a + b) / n;
    let mx = mean(x);
    let my = mean(y);
    let mut cov = S::zero();
    let mut var_x = S::zero();
    let mut var_y = S::zero();
    for (&a, &b) in x.iter().zip(y.iter()) {
        let dx = a - mx;
        let dy = b - my;
        cov = cov + dx * dy;
        var_x = var_x + dx * dx;
        var_y = var_y + dy * dy;
    }
    if var_x == S::zero() || var_y == S::zero() {
        return Err(RsaError::ZeroVariance);
    }
    Ok(cov / (var_x * var_y).sqrt())
}

fn check_alignment(left: &[String], right: &[String]) -> Result<(), RsaError> {
    if left.len() != right.len() {
        return Err(RsaError::IdCountMismatch {
            left: left.len(),
            right: right.len(),
        });
    }
    for (i, (a, b)) in left.iter().zip(right.iter()).enumerate() {
        if a != b {
            return Err(RsaError::IdMismatch {
                index: i,
                left: a.clone(),
                right: b.clone(),
            });
        }
    }
    Ok(())
}

/// Pearson correlation between the strict upper triangulars of two
/// dissimilarity matrices over the same items in the same order. Diagonals
/// are excluded by construction.
pub fn rsa_score<S: Scalar>(
    m1: &DissimMatrix<S>,
    m2: &DissimMatrix<S>,
) -> Result<S, RsaError> {
    check_alignment(m1.ids(), m2.ids())?;
    if m1.len() < 3 {
        return Err(RsaError::TooShort {
            got: m1.len(),
            need: 3,
        });
    }
    pearson(&m1.upper_triangular(), &m2.upper_triangular())
}

/// Multivariate ridge regression model mapping a `p`-dimensional view to a
/// `q`-dimensional one: `prediction = X B + a`.
#[derive(Debug, Clone)]
pub struct RidgeModel<S> {
    pub weights: Array2<S>,
    pub intercept: Array1<S>,
    pub penalty: S,
}

impl<S: Scalar> RidgeModel<S> {
    pub fn predict(&self, x: &Array2<S>) -> Array2<S> {
        let mut out = x.dot(&self.weights);
        for mut row in out.rows_mut() {
            for (v, a) in row.iter_mut().zip(self.intercept.iter()) {
                *v = *v + *a;
            }
        }
        out
    }
}

fn column_means<S: Scalar>(m: &Array2<S>) -> Array1<S> {
    let n = S::from_usize(m.nrows()).expect("row count fits the scalar type");
    let mut means = Array1::zeros(m.ncols());
    for row in m.rows() {
        for (acc, &v) in means.iter_mut().zip(row.iter()) {
            *acc = *acc + v;
        }
    }
    means.mapv_inplace(|v| v / n);
    means
}

fn centered<S: Scalar>(m: &Array2<S>, means: &Array1<S>) -> Array2<S> {
    let mut out = m.clone();
    for mut row in out.rows_mut() {
        for (v, &mu) in row.iter_mut().zip(means.iter()) {
            *v = *v - mu;
        }
    }
    out
}

// Cholesky factorization with solve; fails when a pivot falls below the
// numerical-rank threshold, which is how rank deficiency at penalty 0
// surfaces.
fn cholesky_solve<S: Scalar>(a: &Array2<S>, rhs: &Array2<S>) -> Result<Array2<S>, RsaError> {
    let p = a.nrows();
    debug_assert_eq!(a.ncols(), p);
    debug_assert_eq!(rhs.nrows(), p);
    let mut factor = a.clone();
    let scale = (0..p)
        .map(|i| a[[i, i]])
        .fold(S::zero(), |m, v| if v > m { v } else { m });
    let tol = scale * S::epsilon() * S::from_usize(p.max(1)).unwrap();
    for j in 0..p {
        let mut diag = factor[[j, j]];
        for k in 0..j {
            diag = diag - factor[[j, k]] * factor[[j, k]];
        }
        if diag <= tol {
            return Err(RsaError::RankDeficient);
        }
        let diag = diag.sqrt();
        factor[[j, j]] = diag;
        for i in (j + 1)..p {
            let mut v = factor[[i, j]];
            for k in 0..j {
                v = v - factor[[i, k]] * factor[[j, k]];
            }
            factor[[i, j]] = v / diag;
        }
    }
    // Solve L z = rhs, then L' x = z, one right-hand-side column at a time.
    let q = rhs.ncols();
    let mut solution = Array2::zeros((p, q));
    for col in 0..q {
        let mut z = Array1::zeros(p);
        for i in 0..p {
            let mut v = rhs[[i, col]];
            for k in 0..i {
                v = v - factor[[i, k]] * z[k];
            }
            z[i] = v / factor[[i, i]];
        }
        for i in (0..p).rev() {
            let mut v = z[i];
            for k in (i + 1)..p {
                v = v - factor[[k, i]] * solution[[k, col]];
            }
            solution[[i, col]] = v / factor[[i, i]];
        }
    }
    Ok(solution)
}

/// Closed-form ridge fit of `Y` on `X` with an unpenalized intercept:
/// minimizes `MSE(X B + a, Y) + penalty * ||B||_F^2` via the centered normal
/// equations.
pub fn ridge_fit<S: Scalar>(
    x: &Array2<S>,
    y: &Array2<S>,
    penalty: S,
) -> Result<RidgeModel<S>, RsaError> {
    let n = x.nrows();
    if y.nrows() != n {
        return Err(RsaError::IdCountMismatch {
            left: n,
            right: y.nrows(),
        });
    }
    if n < 2 {
        return Err(RsaError::TooShort { got: n, need: 2 });
    }
    if !(penalty >= S::zero()) || !penalty.is_finite() {
        return Err(RsaError::InvalidPenalty(
            penalty.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let x_means = column_means(x);
    let y_means = column_means(y);
    let xc = centered(x, &x_means);
    let yc = centered(y, &y_means);
    let mut gram = xc.t().dot(&xc);
    let ridge = S::from_usize(n).unwrap() * penalty;
    for i in 0..gram.nrows() {
        gram[[i, i]] = gram[[i, i]] + ridge;
    }
    let rhs = xc.t().dot(&yc);
    let weights = cholesky_solve(&gram, &rhs)?;
    // a = mean(Y) - mean(X)' B
    let mut intercept = y_means;
    for (j, a) in intercept.iter_mut().enumerate() {
        let mut shift = S::zero();
        for (k, &mu) in x_means.iter().enumerate() {
            shift = shift + mu * weights[[k, j]];
        }
        *a = *a - shift;
    }
    Ok(RidgeModel {
        weights,
        intercept,
        penalty,
    })
}

/// Cross-validation settings: fold count, penalty grid, and shuffle seed.
#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig<S> {
    folds: usize,
    penalties: Vec<S>,
    pub seed: u64,
}

/// The default penalty grid: decade steps from `1e-3` to `1e2`.
pub fn default_penalties<S: Scalar>() -> Vec<S> {
    [0.001, 0.01, 0.1, 1.0, 10.0, 100.0]
        .iter()
        .map(|&p| S::from_f64(p).expect("grid value fits the scalar type"))
        .collect()
}

impl<S: Scalar> CvConfig<S> {
    pub fn new(folds: usize, penalties: Vec<S>, seed: u64) -> Result<Self, RsaError> {
        if folds < 2 {
            return Err(RsaError::InvalidFolds(folds));
        }
        if penalties.is_empty() || penalties.iter().any(|p| !(*p > S::zero()) || !p.is_finite()) {
            return Err(RsaError::InvalidPenaltyGrid);
        }
        Ok(CvConfig {
            folds,
            penalties,
            seed,
        })
    }

    /// 10 folds over the default grid.
    pub fn with_seed(seed: u64) -> Self {
        CvConfig::new(10, default_penalties(), seed).expect("default config is valid")
    }

    pub fn folds(&self) -> usize {
        self.folds
    }

    pub fn penalties(&self) -> &[S] {
        &self.penalties
    }
}

/// Fold index per item: a seeded Fisher-Yates shuffle of `0..n` cut into
/// contiguous blocks whose sizes differ by at most one. Depends only on
/// `(n, folds, seed)`.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    debug_assert!(folds >= 2 && folds <= n);
    let mut order: Vec<usize> = (0..n).collect();
    Prng::from_seed(seed).shuffle(&mut order);
    let base = n / folds;
    let extra = n % folds;
    let mut assignment = vec![0usize; n];
    let mut cursor = 0;
    for fold in 0..folds {
        let size = base + usize::from(fold < extra);
        for &item in &order[cursor..cursor + size] {
            assignment[item] = fold;
        }
        cursor += size;
    }
    assignment
}

/// Result of [`rsa_regress_score`]: the best cross-validated correlation and
/// the penalty that achieved it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressScore<S> {
    pub score: S,
    pub penalty: S,
}

/// Cross-validated predictability of the target view from the source view.
///
/// For each penalty in the grid: split items into seeded folds, fit a ridge
/// model on the complement of each fold and predict the held-out rows, pool
/// every held-out prediction, flatten across target dimensions, and take one
/// Pearson correlation against the flattened true targets. Returns the
/// maximum over the grid (first grid entry on ties) with its penalty.
pub fn rsa_regress_score<S: Scalar>(
    src: &SimEmbedding<S>,
    tgt: &SimEmbedding<S>,
    cv: &CvConfig<S>,
) -> Result<RegressScore<S>, RsaError> {
    check_alignment(src.item_ids(), tgt.item_ids())?;
    let n = src.item_ids().len();
    if cv.folds > n {
        return Err(RsaError::FoldsExceedItems {
            folds: cv.folds,
            items: n,
        });
    }
    let assignment = fold_assignment(n, cv.folds, cv.seed);
    let x = src.values();
    let y = tgt.values();
    let truth: Vec<S> = y.iter().copied().collect();

    let mut best: Option<RegressScore<S>> = None;
    for &penalty in &cv.penalties {
        let mut predictions = Array2::zeros(y.raw_dim());
        for fold in 0..cv.folds {
            let train: Vec<usize> = (0..n).filter(|i| assignment[*i] != fold).collect();
            let test: Vec<usize> = (0..n).filter(|i| assignment[*i] == fold).collect();
            let model = ridge_fit(
                &x.select(Axis(0), &train),
                &y.select(Axis(0), &train),
                penalty,
            )?;
            let predicted = model.predict(&x.select(Axis(0), &test));
            for (row, &item) in test.iter().enumerate() {
                for col in 0..y.ncols() {
                    predictions[[item, col]] = predicted[[row, col]];
                }
            }
        }
        let flat: Vec<S> = predictions.iter().copied().collect();
        let score = pearson(&flat, &truth)?;
        let better = match &best {
            None => true,
            Some(b) => score > b.score,
        };
        if better {
            best = Some(RegressScore { score, penalty });
        }
    }
    Ok(best.expect("non-empty penalty grid"))
}

/// Machine-readable result of a scoring run.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    /// `"rsa"` or `"rsa_regress"`.
    pub method: String,
    pub score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalty_selected: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub folds: Option<usize>,
    pub seed: u64,
    pub metric_src: String,
    pub metric_tgt: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub n_items: usize,
    pub n_refs: Option<usize>,
}
