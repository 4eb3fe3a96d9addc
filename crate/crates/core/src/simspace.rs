//! Pairwise (dis)similarity structures over collections of items.
//!
//! Three representation kinds are supported: vectors under cosine
//! dissimilarity, scalars under absolute difference, and trees under one
//! minus the normalized tree kernel. The square form ([`DissimMatrix`])
//! stores dissimilarities — the object the direct correlation method works
//! on — while the rectangular anchor form ([`SimEmbedding`]) stores
//! similarities of items to a reference set.
//!
//! Dissimilarity is the canonical storage; similarity is derived as `1 - d`
//! for the bounded metrics and `-d` for the unbounded scalar metric. Both are
//! fixed monotone affine transforms, so downstream regressions are unaffected
//! by the choice; the conversion used is recorded in output metadata.

use std::io::Write;

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::kernel::{self, KernelError, KernelParams};
use crate::treebank::SymTree;
use crate::Scalar;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("zero-norm vector: cosine dissimilarity is undefined")]
    ZeroNorm,
    #[error("vector dimensions differ: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("{metric} cannot score {found} items")]
    KindMismatch {
        metric: &'static str,
        found: &'static str,
    },
    #[error("item {id}: {source}")]
    AtItem { id: String, source: Box<SimError> },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("need at least {need} items, got {got}")]
    TooFewItems { need: usize, got: usize },
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SimError {
    fn for_item(self, id: &str) -> SimError {
        SimError::AtItem {
            id: id.to_string(),
            source: Box::new(self),
        }
    }
}

/// One item in a representation space.
#[derive(Debug, Clone, PartialEq)]
pub enum Rep<S> {
    Vector(Vec<S>),
    Scalar(S),
    Tree(SymTree),
}

impl<S> Rep<S> {
    fn kind(&self) -> &'static str {
        match self {
            Rep::Vector(_) => "vector",
            Rep::Scalar(_) => "scalar",
            Rep::Tree(_) => "tree",
        }
    }
}

/// Dissimilarity metric over one representation kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric<S> {
    /// `1 - cos(a, b)` over vectors; ranges over `[0, 2]`.
    CosineDissim,
    /// `|a - b|` over scalars; unbounded.
    ScalarAbsDiff,
    /// `1 -` normalized tree kernel at the given discount; ranges over `[0, 1]`.
    TreeKernelDissim { lambda: S },
}

impl<S: Scalar> Metric<S> {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::CosineDissim => "cosine_dissim",
            Metric::ScalarAbsDiff => "scalar_absdiff",
            Metric::TreeKernelDissim { .. } => "tree_kernel_dissim",
        }
    }

    pub fn lambda(&self) -> Option<S> {
        match self {
            Metric::TreeKernelDissim { lambda } => Some(*lambda),
            _ => None,
        }
    }

    /// Whether the dissimilarity has a fixed upper bound, which decides the
    /// similarity conversion.
    pub fn is_bounded(&self) -> bool {
        !matches!(self, Metric::ScalarAbsDiff)
    }

    /// Similarity form of a dissimilarity under this metric: `1 - d` when
    /// bounded, `-d` otherwise.
    pub fn to_similarity(&self, d: S) -> S {
        if self.is_bounded() {
            S::one() - d
        } else {
            -d
        }
    }
}

/// Dissimilarity between two items of the kind the metric expects.
pub fn dissimilarity<S: Scalar>(m: &Metric<S>, a: &Rep<S>, b: &Rep<S>) -> Result<S, SimError> {
    match (m, a, b) {
        (Metric::CosineDissim, Rep::Vector(x), Rep::Vector(y)) => cosine_dissim(x, y),
        (Metric::ScalarAbsDiff, Rep::Scalar(x), Rep::Scalar(y)) => Ok((*x - *y).abs()),
        (Metric::TreeKernelDissim { lambda }, Rep::Tree(x), Rep::Tree(y)) => {
            Ok(S::one() - kernel::normalized_kernel(x, y, *lambda)?)
        }
        (m, a, b) => {
            let found = if matches!((m, a), (Metric::CosineDissim, Rep::Vector(_)))
                || matches!((m, a), (Metric::ScalarAbsDiff, Rep::Scalar(_)))
                || matches!((m, a), (Metric::TreeKernelDissim { .. }, Rep::Tree(_)))
            {
                b.kind()
            } else {
                a.kind()
            };
            Err(SimError::KindMismatch {
                metric: m.name(),
                found,
            })
        }
    }
}

/// Cosine dissimilarity `1 - a.b / (|a| |b|)`.
pub fn cosine_dissim<S: Scalar>(a: &[S], b: &[S]) -> Result<S, SimError> {
    if a.len() != b.len() {
        return Err(SimError::DimMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut dot = S::zero();
    let mut norm_a = S::zero();
    let mut norm_b = S::zero();
    for (&x, &y) in a.iter().zip(b.iter()) {
        dot = dot + x * y;
        norm_a = norm_a + x * x;
        norm_b = norm_b + y * y;
    }
    if norm_a == S::zero() || norm_b == S::zero() {
        return Err(SimError::ZeroNorm);
    }
    Ok(S::one() - dot / (norm_a.sqrt() * norm_b.sqrt()))
}

/// Square symmetric matrix of pairwise dissimilarities with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimMatrix<S> {
    ids: Vec<String>,
    values: Array2<S>,
}

impl<S: Scalar> DissimMatrix<S> {
    /// Validating constructor: square shape matching `ids`, finite entries,
    /// exact symmetry, zero diagonal, no negative entries.
    pub fn new(ids: Vec<String>, values: Array2<S>) -> Result<Self, SimError> {
        let n = ids.len();
        if values.shape() != [n, n] {
            return Err(SimError::InvalidMatrix(format!(
                "shape {:?} does not match {n} ids",
                values.shape()
            )));
        }
        for i in 0..n {
            if values[[i, i]] != S::zero() {
                return Err(SimError::InvalidMatrix(format!("non-zero diagonal at {i}")));
            }
            for j in 0..n {
                let v = values[[i, j]];
                if !v.is_finite() || v < S::zero() {
                    return Err(SimError::InvalidMatrix(format!(
                        "entry ({i}, {j}) = {v} is negative or non-finite"
                    )));
                }
                if values[[i, j]] != values[[j, i]] {
                    return Err(SimError::InvalidMatrix(format!(
                        "asymmetry at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(DissimMatrix { ids, values })
    }

    /// Wrap pre-validated parts without checking the invariants.
    pub fn from_parts(ids: Vec<String>, values: Array2<S>) -> Self {
        DissimMatrix { ids, values }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self) -> &Array2<S> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Strict upper triangular, row-major: `n(n-1)/2` entries.
    pub fn upper_triangular(&self) -> Vec<S> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.values[[i, j]]);
            }
        }
        out
    }
}

/// `n x r` matrix of similarities of `n` items to `r` reference anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct SimEmbedding<S> {
    item_ids: Vec<String>,
    ref_ids: Vec<String>,
    values: Array2<S>,
}

impl<S: Scalar> SimEmbedding<S> {
    pub fn from_parts(item_ids: Vec<String>, ref_ids: Vec<String>, values: Array2<S>) -> Self {
        debug_assert_eq!(values.shape(), [item_ids.len(), ref_ids.len()]);
        SimEmbedding {
            item_ids,
            ref_ids,
            values,
        }
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn ref_ids(&self) -> &[String] {
        &self.ref_ids
    }

    pub fn values(&self) -> &Array2<S> {
        &self.values
    }
}

// Per-metric validation so pair computation can run infallibly afterwards;
// errors carry the offending item id.
fn validate_items<S: Scalar>(
    ids: &[String],
    items: &[Rep<S>],
    m: &Metric<S>,
) -> Result<(), SimError> {
    debug_assert_eq!(ids.len(), items.len());
    let mut dim: Option<usize> = None;
    for (id, item) in ids.iter().zip(items.iter()) {
        match (m, item) {
            (Metric::CosineDissim, Rep::Vector(v)) => {
                if let Some(d) = dim {
                    if v.len() != d {
                        return Err(SimError::DimMismatch {
                            left: d,
                            right: v.len(),
                        }
                        .for_item(id));
                    }
                } else {
                    dim = Some(v.len());
                }
                let norm = v.iter().fold(S::zero(), |acc, &x| acc + x * x);
                if norm == S::zero() {
                    return Err(SimError::ZeroNorm.for_item(id));
                }
            }
            (Metric::ScalarAbsDiff, Rep::Scalar(_)) => {}
            (Metric::TreeKernelDissim { .. }, Rep::Tree(t)) => {
                if t.nonterminal_count() == 0 {
                    return Err(SimError::Kernel(KernelError::ZeroSelfKernel).for_item(id));
                }
            }
            (m, found) => {
                return Err(SimError::KindMismatch {
                    metric: m.name(),
                    found: found.kind(),
                }
                .for_item(id))
            }
        }
    }
    Ok(())
}

/// Pairwise dissimilarity matrix over `items`. Computed once per unique pair
/// (row-major over the strict upper triangle, in parallel) and mirrored, so
/// the result is exactly symmetric with a zero diagonal regardless of worker
/// count.
pub fn dissim_matrix<S: Scalar>(
    ids: &[String],
    items: &[Rep<S>],
    m: &Metric<S>,
) -> Result<DissimMatrix<S>, SimError> {
    assert_eq!(ids.len(), items.len(), "one id per item");
    let n = items.len();
    if n < 2 {
        return Err(SimError::TooFewItems { need: 2, got: n });
    }
    validate_items(ids, items, m)?;

    // The tree metric delegates to the batch kernel so self-kernels are
    // computed once, not once per pair.
    if let Metric::TreeKernelDissim { lambda } = m {
        let trees: Vec<SymTree> = items
            .iter()
            .map(|it| match it {
                Rep::Tree(t) => t.clone(),
                _ => unreachable!("validated above"),
            })
            .collect();
        let params = KernelParams::new(*lambda, true)?;
        let sims = kernel::kernel_matrix(&trees, &params)?;
        let values = sims.mapv(|k| S::one() - k);
        return Ok(DissimMatrix::from_parts(ids.to_vec(), values));
    }

    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let computed: Vec<S> = pairs
        .par_iter()
        .map(|&(i, j)| dissimilarity(m, &items[i], &items[j]).expect("validated items"))
        .collect();

    let mut values = Array2::zeros((n, n));
    for (&(i, j), &v) in pairs.iter().zip(computed.iter()) {
        values[[i, j]] = v;
        values[[j, i]] = v;
    }
    Ok(DissimMatrix::from_parts(ids.to_vec(), values))
}

/// Similarity embedding of `items` against `refs`: entry `(i, j)` is the
/// similarity form of `m` between item `i` and reference `j`.
pub fn sim_embed<S: Scalar>(
    item_ids: &[String],
    items: &[Rep<S>],
    ref_ids: &[String],
    refs: &[Rep<S>],
    m: &Metric<S>,
) -> Result<SimEmbedding<S>, SimError> {
    assert_eq!(item_ids.len(), items.len(), "one id per item");
    assert_eq!(ref_ids.len(), refs.len(), "one id per reference");
    if refs.is_empty() {
        return Err(SimError::TooFewItems { need: 1, got: 0 });
    }
    validate_items(item_ids, items, m)?;
    validate_items(ref_ids, refs, m)?;
    // Cross-set dimension agreement for vectors.
    if let (Metric::CosineDissim, Some(Rep::Vector(x)), Some(Rep::Vector(r))) =
        (m, items.first(), refs.first())
    {
        if x.len() != r.len() {
            return Err(SimError::DimMismatch {
                left: x.len(),
                right: r.len(),
            });
        }
    }

    let n = items.len();
    let r = refs.len();
    let rows: Vec<Vec<S>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..r)
                .map(|j| {
                    let d = dissimilarity(m, &items[i], &refs[j]).expect("validated items");
                    m.to_similarity(d)
                })
                .collect()
        })
        .collect();
    let mut values = Array2::zeros((n, r));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    Ok(SimEmbedding::from_parts(
        item_ids.to_vec(),
        ref_ids.to_vec(),
        values,
    ))
}

/// Metadata recorded with every serialized matrix.
#[derive(Debug, Clone, Serialize)]
pub struct MatrixMeta {
    /// `"dissimilarity"` or `"similarity"`.
    pub kind: String,
    pub metric: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_digest: Option<String>,
}

/// CSV form: `#`-prefixed metadata lines, a header row of ids, then one row
/// per item with its id in the first column.
pub fn write_matrix_csv<S: Scalar, W: Write>(
    mut w: W,
    ids: &[String],
    values: &Array2<S>,
    meta: &MatrixMeta,
) -> Result<(), SimError> {
    writeln!(w, "# kind: {}", meta.kind)?;
    writeln!(w, "# metric: {}", meta.metric)?;
    if let Some(lambda) = meta.lambda {
        writeln!(w, "# lambda: {lambda}")?;
    }
    if let Some(digest) = &meta.source_digest {
        writeln!(w, "# source_digest: {digest}")?;
    }
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["id".to_string()];
    header.extend(ids.iter().cloned());
    csv.write_record(&header)
        .map_err(|e| SimError::Io(std::io::Error::other(e)))?;
    for (i, id) in ids.iter().enumerate() {
        let mut record = vec![id.clone()];
        record.extend(values.row(i).iter().map(|v| v.to_string()));
        csv.write_record(&record)
            .map_err(|e| SimError::Io(std::io::Error::other(e)))?;
    }
    csv.flush()?;
    Ok(())
}

/// Dense JSON form with the metadata inline.
pub fn matrix_to_json<S: Scalar>(
    ids: &[String],
    values: &Array2<S>,
    meta: &MatrixMeta,
) -> serde_json::Value {
    let rows: Vec<Vec<f64>> = (0..ids.len())
        .map(|i| {
            values
                .row(i)
                .iter()
                .map(|v| v.to_f64().expect("finite matrix entry"))
                .collect()
        })
        .collect();
    serde_json::json!({
        "kind": meta.kind,
        "metric": meta.metric,
        "lambda": meta.lambda,
        "source_digest": meta.source_digest,
        "ids": ids,
        "values": rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithlang::{self, GenConfig};
    use crate::oracle;
    use crate::prng::Prng;
    use crate::treebank::parse_bracketed;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn cosine_of_identical_vectors_is_zero() {
        let v = Rep::Vector(vec![0.3, -1.2, 4.0]);
        let d: f64 = dissimilarity(&Metric::CosineDissim, &v, &v).unwrap();
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn scalar_absdiff_example() {
        let d = dissimilarity(&Metric::ScalarAbsDiff, &Rep::Scalar(3.0), &Rep::Scalar(8.0));
        assert_eq!(d.unwrap(), 5.0);
    }

    #[test]
    fn tree_self_dissimilarity_is_zero() {
        let t = Rep::Tree(parse_bracketed("(NP (D the) (N apple))").unwrap());
        let m = Metric::TreeKernelDissim { lambda: 0.5 };
        let d: f64 = dissimilarity(&m, &t, &t).unwrap();
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn zero_norm_and_shape_errors() {
        let z = Rep::Vector(vec![0.0, 0.0]);
        let v = Rep::Vector(vec![1.0, 0.0]);
        assert!(matches!(
            dissimilarity(&Metric::CosineDissim, &z, &v),
            Err(SimError::ZeroNorm)
        ));
        let w = Rep::Vector(vec![1.0, 2.0, 3.0]);
        assert!(matches!(
            dissimilarity(&Metric::CosineDissim, &v, &w),
            Err(SimError::DimMismatch { left: 2, right: 3 })
        ));
        assert!(matches!(
            dissimilarity(&Metric::CosineDissim, &Rep::Scalar(1.0), &v),
            Err(SimError::KindMismatch { .. })
        ));
    }

    #[test]
    fn scalar_matrix_example() {
        let items = vec![Rep::Scalar(3.0), Rep::Scalar(8.0)];
        let m = dissim_matrix(&ids(2), &items, &Metric::ScalarAbsDiff).unwrap();
        assert_eq!(m.values()[[0, 1]], 5.0);
        assert_eq!(m.values()[[1, 0]], 5.0);
        assert_eq!(m.values()[[0, 0]], 0.0);
    }

    #[test]
    fn identical_items_give_zero_matrix() {
        let v = Rep::Vector(vec![1.0f64, 2.0]);
        let items = vec![v.clone(), v.clone(), v];
        let m = dissim_matrix(&ids(3), &items, &Metric::CosineDissim).unwrap();
        for x in m.values().iter() {
            assert!(x.abs() < 1e-12);
        }
    }

    #[test]
    fn tree_matrix_matches_fragment_oracle() {
        let cfg = GenConfig::new(0.6, 2.0, 31).unwrap();
        let trees: Vec<SymTree> = arithlang::generate_batch(&cfg, 8)
            .unwrap()
            .into_iter()
            .map(|e| arithlang::to_syntax_tree(&e))
            .filter(|t| t.nonterminal_count() <= kernel::ENUMERATION_LIMIT)
            .take(5)
            .collect();
        assert!(trees.len() >= 2, "fixture needs small trees");
        let items: Vec<Rep<f64>> = trees.iter().cloned().map(Rep::Tree).collect();
        let m = dissim_matrix(
            &ids(items.len()),
            &items,
            &Metric::TreeKernelDissim { lambda: 1.0 },
        )
        .unwrap();
        for i in 0..trees.len() {
            for j in 0..trees.len() {
                let want = if i == j {
                    0.0
                } else {
                    1.0 - oracle::fragment_normalized_kernel(&trees[i], &trees[j], 1.0).unwrap()
                };
                assert!(
                    (m.values()[[i, j]] - want).abs() < 1e-12,
                    "({i},{j}): {} vs {want}",
                    m.values()[[i, j]]
                );
            }
        }
    }

    #[test]
    fn matrix_errors_carry_item_ids() {
        let items = vec![Rep::Vector(vec![1.0, 0.0]), Rep::Vector(vec![0.0, 0.0])];
        let err = dissim_matrix(&ids(2), &items, &Metric::CosineDissim).unwrap_err();
        match err {
            SimError::AtItem { id, .. } => assert_eq!(id, "1"),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn identical_reference_gives_unit_column() {
        let t = parse_bracketed("(NP (D the) (N apple))").unwrap();
        let items = vec![Rep::Tree(t.clone()), Rep::Tree(t.clone())];
        let refs = vec![Rep::Tree(t)];
        let e = sim_embed(
            &ids(2),
            &items,
            &["r0".to_string()],
            &refs,
            &Metric::TreeKernelDissim { lambda: 0.5f64 },
        )
        .unwrap();
        for v in e.values().iter() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn self_embedding_agrees_with_matrix_for_bounded_metrics() {
        let mut rng = Prng::from_seed(5);
        let items: Vec<Rep<f64>> = (0..6)
            .map(|_| Rep::Vector((0..4).map(|_| rng.unit_f64() + 0.1).collect()))
            .collect();
        let m = Metric::CosineDissim;
        let ids6 = ids(6);
        let emb = sim_embed(&ids6, &items, &ids6, &items, &m).unwrap();
        let dis = dissim_matrix(&ids6, &items, &m).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let want = 1.0 - dis.values()[[i, j]];
                assert!((emb.values()[[i, j]] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cosine_embedding_matches_direct_recomputation() {
        let mut rng = Prng::from_seed(77);
        let vectors: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..5).map(|_| rng.unit_f64() * 2.0 - 1.0).collect())
            .collect();
        let refs: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..5).map(|_| rng.unit_f64() * 2.0 - 1.0).collect())
            .collect();
        let items: Vec<Rep<f64>> = vectors.iter().cloned().map(Rep::Vector).collect();
        let ref_items: Vec<Rep<f64>> = refs.iter().cloned().map(Rep::Vector).collect();
        let e = sim_embed(
            &ids(10),
            &items,
            &ids(3),
            &ref_items,
            &Metric::CosineDissim,
        )
        .unwrap();
        for i in 0..10 {
            for j in 0..3 {
                let want = 1.0 - oracle::cosine_dissim_direct(&vectors[i], &refs[j]);
                assert!((e.values()[[i, j]] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn metric_axioms_hold_on_random_pairs() {
        let mut rng = Prng::from_seed(123);
        for _ in 0..1000 {
            let a: Vec<f64> = (0..6).map(|_| rng.unit_f64() - 0.3).collect();
            let b: Vec<f64> = (0..6).map(|_| rng.unit_f64() - 0.3).collect();
            if let (Ok(ab), Ok(ba), Ok(aa)) = (
                cosine_dissim(&a, &b),
                cosine_dissim(&b, &a),
                cosine_dissim(&a, &a),
            ) {
                assert_eq!(ab, ba);
                assert!(ab >= -1e-12 && ab <= 2.0 + 1e-12);
                assert!(aa.abs() < 1e-12);
            }
        }
        let cfg = GenConfig::new(0.7, 2.0, 555).unwrap();
        let exprs = arithlang::generate_batch(&cfg, 40).unwrap();
        let m = Metric::TreeKernelDissim { lambda: 0.5 };
        for pair in exprs.chunks(2) {
            if pair.len() < 2 {
                break;
            }
            let a = Rep::Tree(arithlang::to_syntax_tree(&pair[0]));
            let b = Rep::Tree(arithlang::to_syntax_tree(&pair[1]));
            let ab: f64 = dissimilarity(&m, &a, &b).unwrap();
            let ba = dissimilarity(&m, &b, &a).unwrap();
            let aa = dissimilarity(&m, &a, &a).unwrap();
            assert!((ab - ba).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&ab));
            assert!(aa.abs() < 1e-12);
        }
        // Scalar metric over arithmetic values stays within [0, 9].
        for chunk in exprs.chunks(2) {
            if chunk.len() < 2 {
                break;
            }
            let x = Rep::Scalar(arithlang::evaluate(&chunk[0]) as f64);
            let y = Rep::Scalar(arithlang::evaluate(&chunk[1]) as f64);
            let d: f64 = dissimilarity(&Metric::ScalarAbsDiff, &x, &y).unwrap();
            assert!((0.0..=9.0).contains(&d));
        }
    }

    #[test]
    fn matrix_validation_catches_bad_inputs() {
        let good = Array2::from_shape_vec((2, 2), vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(DissimMatrix::new(ids(2), good).is_ok());
        let bad_diag = Array2::from_shape_vec((2, 2), vec![0.5, 1.0, 1.0, 0.0]).unwrap();
        assert!(DissimMatrix::new(ids(2), bad_diag).is_err());
        let asym = Array2::from_shape_vec((2, 2), vec![0.0, 1.0, 2.0, 0.0]).unwrap();
        assert!(DissimMatrix::new(ids(2), asym).is_err());
    }

    #[test]
    fn csv_serialization_includes_metadata() {
        let values = Array2::from_shape_vec((2, 2), vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        let meta = MatrixMeta {
            kind: "dissimilarity".into(),
            metric: "tree_kernel_dissim".into(),
            lambda: Some(0.5),
            source_digest: None,
        };
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &ids(2), &values, &meta).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# kind: dissimilarity\n# metric: tree_kernel_dissim\n# lambda: 0.5\n"));
        assert!(text.contains("id,0,1\n"));
        assert!(text.contains("0,0,0.5\n"));
    }
}
