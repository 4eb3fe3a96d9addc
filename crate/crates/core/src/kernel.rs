//! Convolution tree kernel: similarity between two trees as the discounted
//! count of tree fragments they share.
//!
//! A fragment is a connected set of nodes in which every expanded node
//! carries its complete production rule. The raw kernel between trees is
//!
//! ```text
//! K(T1, T2) = sum over n1 in T1, n2 in T2 of C(n1, n2, lambda)
//! ```
//!
//! where `C` counts matching fragment pairs rooted at the node pair:
//!
//! ```text
//! C(n1, n2) = 0                                  if prod(n1) != prod(n2)
//! C(n1, n2) = lambda                             if both are preterminals
//! C(n1, n2) = lambda * prod_i (1 + C(ch(n1, i), ch(n2, i)))   otherwise
//! ```
//!
//! The discount `lambda` in `(0, 1]` scales fragments down with their size;
//! `lambda = 1` counts them raw. The recursion is memoized per node pair, so
//! one evaluation costs `O(|T1| * |T2|)`. [`enumerate_fragments`] materializes
//! the fragment multiset explicitly for small trees and backs the test
//! oracles in [`crate::oracle`].

use std::collections::HashMap;

use ndarray::Array2;
use rayon::prelude::*;
use thiserror::Error;

use crate::treebank::{Production, SymTree};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("lambda must lie in (0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("zero self-kernel: the tree has no non-terminal node")]
    ZeroSelfKernel,
    #[error("zero self-kernel for tree at index {0}: it has no non-terminal node")]
    ZeroSelfKernelAt(usize),
    #[error("tree has {nonterminals} non-terminal nodes, above the enumeration guard of {limit}")]
    TooLargeForEnumeration { nonterminals: usize, limit: usize },
    #[error("kernel matrix needs at least one tree")]
    EmptyInput,
}

/// Kernel settings: discount `lambda` in `(0, 1]` and whether values are
/// normalized by the geometric mean of the self-kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams<S> {
    pub lambda: S,
    pub normalized: bool,
}

impl<S: Scalar> KernelParams<S> {
    pub fn new(lambda: S, normalized: bool) -> Result<Self, KernelError> {
        check_lambda(lambda)?;
        Ok(KernelParams { lambda, normalized })
    }
}

fn check_lambda<S: Scalar>(lambda: S) -> Result<(), KernelError> {
    if lambda > S::zero() && lambda <= S::one() {
        Ok(())
    } else {
        Err(KernelError::InvalidLambda(
            lambda.to_f64().unwrap_or(f64::NAN),
        ))
    }
}

// Flattened view of a tree's non-terminal nodes with interned productions.
// `children[i]` has one slot per child position; `Some(j)` points at the
// non-terminal child's own index, `None` marks a terminal child.
struct KernelTree {
    prod: Vec<u32>,
    preterminal: Vec<bool>,
    children: Vec<Vec<Option<u32>>>,
}

#[derive(Default)]
struct ProductionInterner {
    ids: HashMap<Production, u32>,
}

impl ProductionInterner {
    fn intern(&mut self, prod: Production) -> u32 {
        let next = self.ids.len() as u32;
        *self.ids.entry(prod).or_insert(next)
    }
}

impl KernelTree {
    fn build(tree: &SymTree, interner: &mut ProductionInterner) -> Self {
        let mut out = KernelTree {
            prod: Vec::new(),
            preterminal: Vec::new(),
            children: Vec::new(),
        };
        out.add(tree, interner);
        out
    }

    // Pre-order over non-terminal nodes; returns the node's index, or None
    // for a terminal.
    fn add(&mut self, node: &SymTree, interner: &mut ProductionInterner) -> Option<u32> {
        let prod = node.production()?;
        let idx = self.prod.len();
        self.prod.push(interner.intern(prod));
        self.preterminal.push(node.is_preterminal());
        self.children.push(Vec::new());
        let slots: Vec<Option<u32>> = node
            .children
            .iter()
            .map(|c| self.add(c, interner))
            .collect();
        self.children[idx] = slots;
        Some(idx as u32)
    }

    fn len(&self) -> usize {
        self.prod.len()
    }
}

struct PairEval<'a, S> {
    a: &'a KernelTree,
    b: &'a KernelTree,
    lambda: S,
    memo: Vec<Option<S>>,
}

impl<'a, S: Scalar> PairEval<'a, S> {
    fn new(a: &'a KernelTree, b: &'a KernelTree, lambda: S) -> Self {
        PairEval {
            a,
            b,
            lambda,
            memo: vec![None; a.len() * b.len()],
        }
    }

    fn c(&mut self, i: usize, j: usize) -> S {
        let slot = i * self.b.len() + j;
        if let Some(v) = self.memo[slot] {
            return v;
        }
        let v = if self.a.prod[i] != self.b.prod[j] {
            S::zero()
        } else if self.a.preterminal[i] && self.b.preterminal[j] {
            self.lambda
        } else {
            let mut acc = self.lambda;
            let n = self.a.children[i].len();
            for pos in 0..n {
                // Equal productions imply equal arity. A slot pair mixing a
                // terminal with a non-terminal contributes no fragments.
                if let (Some(x), Some(y)) = (self.a.children[i][pos], self.b.children[j][pos]) {
                    let c = self.c(x as usize, y as usize);
                    acc = acc * (S::one() + c);
                }
            }
            acc
        };
        self.memo[slot] = Some(v);
        v
    }

    fn sum(&mut self) -> S {
        let mut total = S::zero();
        for i in 0..self.a.len() {
            for j in 0..self.b.len() {
                total = total + self.c(i, j);
            }
        }
        total
    }
}

/// `C(n1, n2, lambda)` for the roots of two subtrees: the discounted count of
/// matching fragment pairs rooted exactly at this node pair.
///
/// Both roots must be non-terminal and `lambda` must lie in `(0, 1]`; those
/// are caller contracts and violations panic.
pub fn c_score<S: Scalar>(n1: &SymTree, n2: &SymTree, lambda: S) -> S {
    assert!(!n1.is_terminal() && !n2.is_terminal(), "c_score needs non-terminal nodes");
    check_lambda(lambda).expect("lambda in (0, 1]");
    let mut interner = ProductionInterner::default();
    let a = KernelTree::build(n1, &mut interner);
    let b = KernelTree::build(n2, &mut interner);
    PairEval::new(&a, &b, lambda).c(0, 0)
}

/// Raw kernel: the sum of `C` over all non-terminal node pairs.
pub fn raw_kernel<S: Scalar>(t1: &SymTree, t2: &SymTree, lambda: S) -> S {
    check_lambda(lambda).expect("lambda in (0, 1]");
    let mut interner = ProductionInterner::default();
    let a = KernelTree::build(t1, &mut interner);
    let b = KernelTree::build(t2, &mut interner);
    PairEval::new(&a, &b, lambda).sum()
}

/// Normalized kernel `K(t1,t2) / sqrt(K(t1,t1) * K(t2,t2))`, clamped to
/// `[0, 1]` to absorb rounding. Fails if either tree has a zero self-kernel,
/// i.e. contains no non-terminal node.
pub fn normalized_kernel<S: Scalar>(
    t1: &SymTree,
    t2: &SymTree,
    lambda: S,
) -> Result<S, KernelError> {
    check_lambda(lambda)?;
    let mut interner = ProductionInterner::default();
    let a = KernelTree::build(t1, &mut interner);
    let b = KernelTree::build(t2, &mut interner);
    let self_a = PairEval::new(&a, &a, lambda).sum();
    let self_b = PairEval::new(&b, &b, lambda).sum();
    if self_a <= S::zero() || self_b <= S::zero() {
        return Err(KernelError::ZeroSelfKernel);
    }
    let cross = PairEval::new(&a, &b, lambda).sum();
    Ok(clamp01(cross / (self_a * self_b).sqrt()))
}

fn clamp01<S: Scalar>(v: S) -> S {
    if v < S::zero() {
        S::zero()
    } else if v > S::one() {
        S::one()
    } else {
        v
    }
}

/// Pairwise kernel matrix over `trees`: symmetric, computed over the unique
/// pairs only and mirrored. With `params.normalized` the diagonal is exactly
/// 1 and every tree must have a positive self-kernel; the error names the
/// offending index.
///
/// Pairs are evaluated in parallel; each evaluation owns its memo table, so
/// the result does not depend on worker count.
pub fn kernel_matrix<S: Scalar>(
    trees: &[SymTree],
    params: &KernelParams<S>,
) -> Result<Array2<S>, KernelError> {
    check_lambda(params.lambda)?;
    let n = trees.len();
    if n == 0 {
        return Err(KernelError::EmptyInput);
    }
    let mut interner = ProductionInterner::default();
    let indexed: Vec<KernelTree> = trees
        .iter()
        .map(|t| KernelTree::build(t, &mut interner))
        .collect();

    let self_kernels: Vec<S> = indexed
        .par_iter()
        .map(|t| PairEval::new(t, t, params.lambda).sum())
        .collect();
    if params.normalized {
        if let Some(i) = self_kernels.iter().position(|&k| k <= S::zero()) {
            return Err(KernelError::ZeroSelfKernelAt(i));
        }
    }

    // Strict upper triangle, row-major.
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let values: Vec<S> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let cross = PairEval::new(&indexed[i], &indexed[j], params.lambda).sum();
            if params.normalized {
                clamp01(cross / (self_kernels[i] * self_kernels[j]).sqrt())
            } else {
                cross
            }
        })
        .collect();

    let mut matrix = Array2::zeros((n, n));
    for i in 0..n {
        matrix[[i, i]] = if params.normalized {
            S::one()
        } else {
            self_kernels[i]
        };
    }
    for (&(i, j), &v) in pairs.iter().zip(values.iter()) {
        matrix[[i, j]] = v;
        matrix[[j, i]] = v;
    }
    Ok(matrix)
}

/// Guard for [`enumerate_fragments`]: explicit enumeration refuses trees with
/// more non-terminal nodes than this.
pub const ENUMERATION_LIMIT: usize = 20;

/// A tree fragment. Expanded nodes carry their complete production; an open
/// node stands for a non-terminal whose expansion is omitted, so equality is
/// plain structural equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fragment {
    Terminal(String),
    Open(String),
    Expanded {
        label: String,
        children: Vec<Fragment>,
    },
}

impl Fragment {
    /// Number of expanded nodes; the discount exponent of the fragment.
    pub fn expanded_count(&self) -> u32 {
        match self {
            Fragment::Terminal(_) | Fragment::Open(_) => 0,
            Fragment::Expanded { children, .. } => {
                1 + children.iter().map(Fragment::expanded_count).sum::<u32>()
            }
        }
    }
}

/// Every fragment of `t`, as a multiset. Each non-terminal node roots
/// `prod_c (1 + F(c))` fragments over its non-terminal children `c`, so the
/// count grows fast; the [`ENUMERATION_LIMIT`] guard keeps this usable only
/// at oracle scale.
pub fn enumerate_fragments(t: &SymTree) -> Result<Vec<Fragment>, KernelError> {
    let nonterminals = t.nonterminal_count();
    if nonterminals > ENUMERATION_LIMIT {
        return Err(KernelError::TooLargeForEnumeration {
            nonterminals,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut out = Vec::new();
    fn collect(node: &SymTree, out: &mut Vec<Fragment>) {
        if node.is_terminal() {
            return;
        }
        out.extend(rooted_fragments(node));
        for c in &node.children {
            collect(c, out);
        }
    }
    collect(t, &mut out);
    Ok(out)
}

// All fragments rooted at `node` (which must be non-terminal): the root's
// production is always included, and every non-terminal child independently
// stays open or expands recursively.
fn rooted_fragments(node: &SymTree) -> Vec<Fragment> {
    let per_child: Vec<Vec<Fragment>> = node
        .children
        .iter()
        .map(|c| {
            if c.is_terminal() {
                vec![Fragment::Terminal(c.label.clone())]
            } else {
                let mut options = vec![Fragment::Open(c.label.clone())];
                options.extend(rooted_fragments(c));
                options
            }
        })
        .collect();

    let mut combos: Vec<Vec<Fragment>> = vec![Vec::new()];
    for options in &per_child {
        let mut next = Vec::with_capacity(combos.len() * options.len());
        for combo in &combos {
            for option in options {
                let mut extended = combo.clone();
                extended.push(option.clone());
                next.push(extended);
            }
        }
        combos = next;
    }
    combos
        .into_iter()
        .map(|children| Fragment::Expanded {
            label: node.label.clone(),
            children,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::parse_bracketed;

    fn apple() -> SymTree {
        parse_bracketed("(NP (D the) (N apple))").unwrap()
    }

    #[test]
    fn c_score_preterminal_pair_is_lambda() {
        let d = parse_bracketed("(D the)").unwrap();
        assert_eq!(c_score(&d, &d, 0.5), 0.5);
    }

    #[test]
    fn c_score_distinct_productions_is_zero() {
        let d = parse_bracketed("(D the)").unwrap();
        let n = parse_bracketed("(N apple)").unwrap();
        assert_eq!(c_score(&d, &n, 0.5), 0.0);
    }

    #[test]
    fn c_score_of_apple_root_counts_rooted_fragments() {
        let t = apple();
        assert_eq!(c_score(&t, &t, 1.0), 4.0);
    }

    #[test]
    #[should_panic(expected = "non-terminal")]
    fn c_score_rejects_terminals() {
        let leaf = SymTree::leaf("the");
        c_score(&leaf, &leaf, 0.5);
    }

    #[test]
    fn raw_self_kernel_matches_figure_counts() {
        let t = apple();
        assert_eq!(raw_kernel(&t, &t, 1.0), 6.0);
        assert_eq!(raw_kernel(&t, &t, 0.5), 2.125);
    }

    #[test]
    fn raw_kernel_disjoint_productions_is_zero() {
        let a = parse_bracketed("(NP (D the) (N apple))").unwrap();
        let b = parse_bracketed("(VP (V eats) (ADV fast))").unwrap();
        assert_eq!(raw_kernel(&a, &b, 1.0), 0.0);
    }

    #[test]
    fn normalized_kernel_identities() {
        let t = apple();
        let selfk: f64 = normalized_kernel(&t, &t, 0.5).unwrap();
        assert!((selfk - 1.0).abs() < 1e-12);
        let other = parse_bracketed("(VP (V eats) (ADV fast))").unwrap();
        assert_eq!(normalized_kernel(&t, &other, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn normalized_kernel_rejects_bare_terminal() {
        let leaf = SymTree::leaf("x");
        assert!(matches!(
            normalized_kernel(&leaf, &apple(), 0.5),
            Err(KernelError::ZeroSelfKernel)
        ));
    }

    #[test]
    fn apple_has_exactly_the_six_expected_fragments() {
        let mut got = enumerate_fragments(&apple()).unwrap();
        got.sort();
        let term = |s: &str| Fragment::Terminal(s.to_string());
        let open = |s: &str| Fragment::Open(s.to_string());
        let exp = |s: &str, ch: Vec<Fragment>| Fragment::Expanded {
            label: s.to_string(),
            children: ch,
        };
        let mut want = vec![
            exp("NP", vec![open("D"), open("N")]),
            exp("NP", vec![exp("D", vec![term("the")]), open("N")]),
            exp("NP", vec![open("D"), exp("N", vec![term("apple")])]),
            exp(
                "NP",
                vec![
                    exp("D", vec![term("the")]),
                    exp("N", vec![term("apple")]),
                ],
            ),
            exp("D", vec![term("the")]),
            exp("N", vec![term("apple")]),
        ];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn fragment_counts_for_small_trees() {
        let d = parse_bracketed("(D the)").unwrap();
        assert_eq!(enumerate_fragments(&d).unwrap().len(), 1);
        let ed = parse_bracketed("(E (D 6))").unwrap();
        let mut got = enumerate_fragments(&ed).unwrap();
        got.sort();
        let term = |s: &str| Fragment::Terminal(s.to_string());
        let mut want = vec![
            Fragment::Expanded {
                label: "E".into(),
                children: vec![Fragment::Open("D".into())],
            },
            Fragment::Expanded {
                label: "E".into(),
                children: vec![Fragment::Expanded {
                    label: "D".into(),
                    children: vec![term("6")],
                }],
            },
            Fragment::Expanded {
                label: "D".into(),
                children: vec![term("6")],
            },
        ];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn enumeration_guard_refuses_large_trees() {
        // A left-leaning chain with 21 non-terminal nodes.
        let mut tree = SymTree::node("A", vec![SymTree::leaf("x")]);
        for _ in 0..20 {
            tree = SymTree::node("A", vec![tree]);
        }
        assert!(tree.nonterminal_count() > ENUMERATION_LIMIT);
        assert!(matches!(
            enumerate_fragments(&tree),
            Err(KernelError::TooLargeForEnumeration { .. })
        ));
    }

    #[test]
    fn kernel_matrix_trivial_cases() {
        let params = KernelParams::new(0.5f64, true).unwrap();
        let one = kernel_matrix(&[apple()], &params).unwrap();
        assert_eq!(one.shape(), &[1, 1]);
        assert_eq!(one[[0, 0]], 1.0);

        let two = kernel_matrix(&[apple(), apple()], &params).unwrap();
        for v in two.iter() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_matrix_reports_offending_index() {
        let params = KernelParams::new(0.5, true).unwrap();
        let trees = vec![apple(), SymTree::leaf("x")];
        assert!(matches!(
            kernel_matrix(&trees, &params),
            Err(KernelError::ZeroSelfKernelAt(1))
        ));
    }

    #[test]
    fn lambda_validation() {
        assert!(KernelParams::new(0.0, true).is_err());
        assert!(KernelParams::new(1.5, true).is_err());
        assert!(KernelParams::new(1.0, false).is_ok());
    }
}
