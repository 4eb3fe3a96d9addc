//! Brute-force reference implementations.
//!
//! Everything here exists to cross-check a fast path somewhere else in the
//! crate and is deliberately written the slow, obvious way, sharing no code
//! with the implementations it verifies. The test suites (including the
//! acceptance suite) are the only intended consumers.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};

use crate::arithlang::{Expr, Op};
use crate::kernel::{enumerate_fragments, Fragment, KernelError};
use crate::treebank::SymTree;

// ---------------------------------------------------------------------------
// Tree kernel references
// ---------------------------------------------------------------------------

fn same_production(a: &SymTree, b: &SymTree) -> bool {
    a.label == b.label
        && a.children.len() == b.children.len()
        && a
            .children
            .iter()
            .zip(&b.children)
            .all(|(x, y)| x.label == y.label)
}

/// Fragment-pair count rooted at a node pair, by plain unmemoized recursion.
pub fn unrolled_c(n1: &SymTree, n2: &SymTree, lambda: f64) -> f64 {
    if n1.is_terminal() || n2.is_terminal() {
        return 0.0;
    }
    if !same_production(n1, n2) {
        return 0.0;
    }
    if n1.is_preterminal() && n2.is_preterminal() {
        return lambda;
    }
    let mut acc = lambda;
    for (a, b) in n1.children.iter().zip(&n2.children) {
        if !a.is_terminal() && !b.is_terminal() {
            acc *= 1.0 + unrolled_c(a, b, lambda);
        }
    }
    acc
}

/// Raw kernel by summing [`unrolled_c`] over every node pair, with no
/// memoization or production interning.
pub fn unrolled_kernel(t1: &SymTree, t2: &SymTree, lambda: f64) -> f64 {
    let mut total = 0.0;
    for n1 in t1.nodes() {
        for n2 in t2.nodes() {
            total += unrolled_c(n1, n2, lambda);
        }
    }
    total
}

/// Raw kernel from explicit fragment multisets: the sum over structurally
/// equal fragment pairs of `lambda ^ expanded-node-count`. Subject to the
/// enumeration guard, so only usable on small trees.
pub fn fragment_kernel(t1: &SymTree, t2: &SymTree, lambda: f64) -> Result<f64, KernelError> {
    let left = fragment_multiset(t1)?;
    let right = fragment_multiset(t2)?;
    // BTreeMap iteration keeps the summation order deterministic.
    let mut total = 0.0;
    for (fragment, &count_left) in &left {
        if let Some(&count_right) = right.get(fragment) {
            let weight = lambda.powi(fragment.expanded_count() as i32);
            total += (count_left as f64) * (count_right as f64) * weight;
        }
    }
    Ok(total)
}

/// Normalized kernel computed entirely from fragment multisets.
pub fn fragment_normalized_kernel(
    t1: &SymTree,
    t2: &SymTree,
    lambda: f64,
) -> Result<f64, KernelError> {
    let cross = fragment_kernel(t1, t2, lambda)?;
    let self1 = fragment_kernel(t1, t1, lambda)?;
    let self2 = fragment_kernel(t2, t2, lambda)?;
    Ok(cross / (self1 * self2).sqrt())
}

fn fragment_multiset(t: &SymTree) -> Result<BTreeMap<Fragment, usize>, KernelError> {
    let mut counts = BTreeMap::new();
    for f in enumerate_fragments(t)? {
        *counts.entry(f).or_insert(0) += 1;
    }
    Ok(counts)
}

// ---------------------------------------------------------------------------
// Arithmetic-language references
// ---------------------------------------------------------------------------

/// Evaluate a prefix-form string such as `(-(+62)(+37))` directly, without
/// going through [`Expr`].
pub fn eval_prefix(s: &str) -> Result<u8, String> {
    let bytes = s.as_bytes();
    let mut pos = 0;
    let value = eval_prefix_at(bytes, &mut pos)?;
    if pos != bytes.len() {
        return Err(format!("trailing input at byte {pos}"));
    }
    Ok(value as u8)
}

fn eval_prefix_at(bytes: &[u8], pos: &mut usize) -> Result<i32, String> {
    match bytes.get(*pos) {
        Some(d @ b'0'..=b'9') => {
            *pos += 1;
            Ok((d - b'0') as i32)
        }
        Some(b'(') => {
            *pos += 1;
            let op = *bytes.get(*pos).ok_or("missing operator")?;
            if op != b'+' && op != b'-' {
                return Err(format!("expected operator at byte {pos}", pos = *pos));
            }
            *pos += 1;
            let left = eval_prefix_at(bytes, pos)?;
            let right = eval_prefix_at(bytes, pos)?;
            if bytes.get(*pos) != Some(&b')') {
                return Err(format!("expected ')' at byte {pos}", pos = *pos));
            }
            *pos += 1;
            let raw = if op == b'+' { left + right } else { left - right };
            Ok(raw.rem_euclid(10))
        }
        other => Err(format!("unexpected input {other:?} at byte {pos}", pos = *pos)),
    }
}

/// Parse an infix-form string such as `((6+2)-(3+7))` back into an [`Expr`].
pub fn parse_infix(s: &str) -> Result<Expr, String> {
    let bytes = s.as_bytes();
    let mut pos = 0;
    let expr = parse_infix_at(bytes, &mut pos)?;
    if pos != bytes.len() {
        return Err(format!("trailing input at byte {pos}"));
    }
    Ok(expr)
}

fn parse_infix_at(bytes: &[u8], pos: &mut usize) -> Result<Expr, String> {
    match bytes.get(*pos) {
        Some(d @ b'0'..=b'9') => {
            *pos += 1;
            Ok(Expr::Digit(d - b'0'))
        }
        Some(b'(') => {
            *pos += 1;
            let left = parse_infix_at(bytes, pos)?;
            let op = match bytes.get(*pos) {
                Some(b'+') => Op::Plus,
                Some(b'-') => Op::Minus,
                _ => return Err(format!("expected operator at byte {pos}", pos = *pos)),
            };
            *pos += 1;
            let right = parse_infix_at(bytes, pos)?;
            if bytes.get(*pos) != Some(&b')') {
                return Err(format!("expected ')' at byte {pos}", pos = *pos));
            }
            *pos += 1;
            Ok(Expr::BinOp {
                op,
                left: Box::new(left),
                right: Box::new(right),
            })
        }
        other => Err(format!("unexpected input {other:?} at byte {pos}", pos = *pos)),
    }
}

// ---------------------------------------------------------------------------
// Vector and regression references
// ---------------------------------------------------------------------------

/// Cosine dissimilarity by plain indexed loops.
pub fn cosine_dissim_direct(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    1.0 - dot / (na.sqrt() * nb.sqrt())
}

/// Ridge regression with an unpenalized intercept, fit by gradient descent on
/// the objective `mean squared error + penalty * ||B||_F^2` until the
/// gradient is numerically zero. Returns `(B, a)`.
///
/// The step size comes from a power-iteration bound on the Hessian spectral
/// norm, so convergence is monotone.
pub fn ridge_gd(x: &Array2<f64>, y: &Array2<f64>, penalty: f64) -> (Array2<f64>, Array1<f64>) {
    let n = x.nrows();
    let p = x.ncols();
    let q = y.ncols();
    assert_eq!(y.nrows(), n);

    // Augmented design [X, 1]; spectral norm bound via power iteration.
    let mut aug = Array2::<f64>::ones((n, p + 1));
    aug.slice_mut(ndarray::s![.., ..p]).assign(x);
    let smax_sq = spectral_norm_sq(&aug);
    let lipschitz = 2.0 * (smax_sq / n as f64 + penalty);
    let step = 1.0 / lipschitz;

    let mut weights = Array2::<f64>::zeros((p, q));
    let mut intercept = Array1::<f64>::zeros(q);
    let tol = 1e-12;
    for _ in 0..5_000_000usize {
        let residual = x.dot(&weights) + &broadcast_row(&intercept, n) - y;
        let grad_w = x.t().dot(&residual) * (2.0 / n as f64) + &(&weights * (2.0 * penalty));
        let grad_a = residual.sum_axis(ndarray::Axis(0)) * (2.0 / n as f64);
        let gmax = grad_w
            .iter()
            .chain(grad_a.iter())
            .fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax < tol {
            break;
        }
        weights = weights - &(&grad_w * step);
        intercept = intercept - &(&grad_a * step);
    }
    (weights, intercept)
}

fn broadcast_row(row: &Array1<f64>, n: usize) -> Array2<f64> {
    let mut out = Array2::zeros((n, row.len()));
    for mut r in out.rows_mut() {
        r.assign(row);
    }
    out
}

fn spectral_norm_sq(m: &Array2<f64>) -> f64 {
    let gram = m.t().dot(m);
    let k = gram.nrows();
    let mut v = Array1::<f64>::ones(k);
    let mut eig = 0.0;
    for _ in 0..200 {
        let w = gram.dot(&v);
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        eig = v.dot(&gram.dot(&v));
    }
    // Upper-bias the estimate so the step size stays safe.
    eig * 1.01 + 1e-12
}
