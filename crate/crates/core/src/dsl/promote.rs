// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

//! Promotion of classical expressions to operators.
//!
//! The expression is first expanded into a sum of ordered words over the
//! family generators. Each rule then fixes the operator order per word:
//!
//! * `SymmetricWeyl`: average over all distinct orderings of the word's factors;
//! * `Normal`: creation-before-annihilation for the canonical family
//!   (`a^dagger` left of `a`), `S+ S3 S-` for spin, and `Q` left of `D` for affine;
//! * `AsWritten`: factors in source order.
//!
//! The result is always the Hermitian part of the assembled sum.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::expr::{Angle, Constants, HamiltonianExpr, Node, TrigFn, Variable};
use crate::error::{Error, Result};
use crate::operators::{Generator, OperatorMatrix, OperatorSet, PhysicalParams, C64, I, ONE, ZERO};
use crate::phase::Family;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingRule {
    #[default]
    SymmetricWeyl,
    Normal,
    AsWritten,
}

impl std::str::FromStr for OrderingRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric_weyl" | "weyl" => Ok(OrderingRule::SymmetricWeyl),
            "normal" => Ok(OrderingRule::Normal),
            "as_written" => Ok(OrderingRule::AsWritten),
            other => Err(Error::Config(format!("unknown ordering rule `{other}`"))),
        }
    }
}

/// Ordered words with real coefficients; identical words are merged.
pub type WordSum = BTreeMap<Vec<Generator>, f64>;

fn generator_for(var: Variable, family: Family) -> Result<Generator> {
    Ok(match (family, var) {
        (Family::Canonical, Variable::P) => Generator::P,
        (Family::Canonical | Family::Affine, Variable::Q) => Generator::Q,
        (Family::Affine, Variable::D) => Generator::D,
        (Family::Spin, Variable::S1) => Generator::S1,
        (Family::Spin, Variable::S2) => Generator::S2,
        (Family::Spin, Variable::S3) => Generator::S3,
        (family, v) => {
            return Err(Error::WrongFamilyVariable {
                name: v.name().to_string(),
                family: family.to_string(),
            })
        }
    })
}

fn scale(words: WordSum, c: f64) -> WordSum {
    words.into_iter().map(|(w, v)| (w, v * c)).collect()
}

fn merge(mut a: WordSum, b: WordSum, sign: f64) -> WordSum {
    for (w, v) in b {
        *a.entry(w).or_insert(0.0) += sign * v;
    }
    a
}

fn product(a: &WordSum, b: &WordSum) -> WordSum {
    let mut out = WordSum::new();
    for (wa, ca) in a {
        for (wb, cb) in b {
            let mut w = wa.clone();
            w.extend_from_slice(wb);
            *out.entry(w).or_insert(0.0) += ca * cb;
        }
    }
    out
}

fn constant_value(node: &Node, constants: &Constants) -> Result<f64> {
    let words = expand_node(node, Family::Canonical, constants)?;
    Ok(words.get(&Vec::new()).copied().unwrap_or(0.0))
}

fn expand_node(node: &Node, family: Family, constants: &Constants) -> Result<WordSum> {
    let unit = |c: f64| WordSum::from([(Vec::new(), c)]);
    Ok(match node {
        Node::Num(v) => unit(*v),
        Node::Const(name) => unit(constants.get(name)?),
        Node::Var(v) => WordSum::from([(vec![generator_for(*v, family)?], 1.0)]),
        Node::Trig(TrigFn::Cos, Angle::Theta) if family == Family::Spin => {
            let r = constants.get("s")? * constants.get("hbar")?;
            WordSum::from([(vec![Generator::S3], 1.0 / r)])
        }
        Node::Trig(..) => {
            return Err(Error::NonPolynomial {
                offset: 0,
                message: "only cos(theta) has an operator counterpart (S3/(s hbar))".into(),
            })
        }
        Node::Neg(a) => scale(expand_node(a, family, constants)?, -1.0),
        Node::Add(a, b) => merge(
            expand_node(a, family, constants)?,
            expand_node(b, family, constants)?,
            1.0,
        ),
        Node::Sub(a, b) => merge(
            expand_node(a, family, constants)?,
            expand_node(b, family, constants)?,
            -1.0,
        ),
        Node::Mul(a, b) => product(
            &expand_node(a, family, constants)?,
            &expand_node(b, family, constants)?,
        ),
        Node::Div(a, b) => {
            let c = constant_value(b, constants)?;
            scale(expand_node(a, family, constants)?, 1.0 / c)
        }
        Node::Pow(a, n) if *n >= 0 => {
            let base = expand_node(a, family, constants)?;
            let mut acc = unit(1.0);
            for _ in 0..*n {
                acc = product(&acc, &base);
            }
            acc
        }
        Node::Pow(a, n) => {
            if a.is_constant() {
                unit(constant_value(a, constants)?.powi(*n))
            } else if family == Family::Affine && **a == Node::Var(Variable::Q) {
                WordSum::from([(vec![Generator::QInv; n.unsigned_abs() as usize], 1.0)])
            } else {
                return Err(Error::NonPolynomial {
                    offset: 0,
                    message: "negative power of a dynamical variable".into(),
                });
            }
        }
    })
}

/// Expands an expression into ordered generator words.
pub fn expand(expr: &HamiltonianExpr, constants: &Constants) -> Result<WordSum> {
    let mut words = expand_node(&expr.root, expr.family, constants)?;
    words.retain(|_, c| *c != 0.0);
    Ok(words)
}

/// A linear combination of generators.
pub type Letter = Vec<(Generator, C64)>;

/// `coef` times the ordered product of `letters`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderedTerm {
    pub coef: C64,
    pub letters: Vec<Letter>,
}

fn single(g: Generator) -> Letter {
    vec![(g, ONE)]
}

/// Distinct permutations of a sorted slice, in lexicographic order.
fn distinct_permutations(sorted: &[Generator]) -> Vec<Vec<Generator>> {
    let mut cur = sorted.to_vec();
    let mut out = vec![cur.clone()];
    loop {
        let n = cur.len();
        if n < 2 {
            return out;
        }
        let mut i = n - 1;
        while i > 0 && cur[i - 1] >= cur[i] {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        let mut j = n - 1;
        while cur[j] <= cur[i - 1] {
            j -= 1;
        }
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

fn sorted_groups(words: &WordSum) -> BTreeMap<Vec<Generator>, f64> {
    let mut groups = BTreeMap::new();
    for (w, c) in words {
        let mut key = w.clone();
        key.sort();
        *groups.entry(key).or_insert(0.0) += c;
    }
    groups
}

fn weyl(words: &WordSum) -> Vec<OrderedTerm> {
    let mut out = Vec::new();
    for (key, c) in sorted_groups(words) {
        let perms = distinct_permutations(&key);
        let weight = C64::new(c / perms.len() as f64, 0.0);
        for perm in perms {
            out.push(OrderedTerm { coef: weight, letters: perm.into_iter().map(single).collect() });
        }
    }
    out
}

fn as_written(words: &WordSum) -> Vec<OrderedTerm> {
    words
        .iter()
        .map(|(w, c)| OrderedTerm { coef: C64::new(*c, 0.0), letters: w.iter().copied().map(single).collect() })
        .collect()
}

/// Commutative polynomial in a few symbols; exponents index the key.
type Poly<const N: usize> = BTreeMap<[u32; N], C64>;

fn poly_mul<const N: usize>(a: &Poly<N>, b: &Poly<N>) -> Poly<N> {
    let mut out = Poly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let mut e = *ea;
            for k in 0..N {
                e[k] += eb[k];
            }
            *out.entry(e).or_insert(ZERO) += ca * cb;
        }
    }
    out
}

/// Expands every sorted word as a commutative polynomial in `N` symbols,
/// then emits each monomial with its symbols in key order.
fn normal_by_symbols<const N: usize>(
    words: &WordSum,
    symbol_poly: impl Fn(Generator) -> Poly<N>,
    symbols: [Letter; N],
) -> Vec<OrderedTerm> {
    let mut total: Poly<N> = Poly::new();
    for (key, c) in sorted_groups(words) {
        let mut acc: Poly<N> = Poly::from([([0; N], C64::new(c, 0.0))]);
        for g in key {
            acc = poly_mul(&acc, &symbol_poly(g));
        }
        for (e, v) in acc {
            *total.entry(e).or_insert(ZERO) += v;
        }
    }
    total
        .into_iter()
        .filter(|(_, v)| *v != ZERO)
        .map(|(e, v)| {
            let mut letters = Vec::new();
            for k in 0..N {
                for _ in 0..e[k] {
                    letters.push(symbols[k].clone());
                }
            }
            OrderedTerm { coef: v, letters }
        })
        .collect()
}

fn normal_canonical(words: &WordSum, params: &PhysicalParams) -> Vec<OrderedTerm> {
    let xq = (params.hbar / (2.0 * params.omega)).sqrt();
    let xp = (params.hbar * params.omega / 2.0).sqrt();
    // Q = xq (a + a^dagger), P = i xp (a^dagger - a); symbols [a^dagger, a]
    let q_poly: Poly<2> = Poly::from([([1, 0], C64::new(xq, 0.0)), ([0, 1], C64::new(xq, 0.0))]);
    let p_poly: Poly<2> = Poly::from([([1, 0], I * xp), ([0, 1], -I * xp)]);
    let create = vec![(Generator::Q, C64::new(0.5 / xq, 0.0)), (Generator::P, -I * (0.5 / xp))];
    let annihilate = vec![(Generator::Q, C64::new(0.5 / xq, 0.0)), (Generator::P, I * (0.5 / xp))];
    normal_by_symbols(
        words,
        |g| if g == Generator::P { p_poly.clone() } else { q_poly.clone() },
        [create, annihilate],
    )
}

fn normal_spin(words: &WordSum) -> Vec<OrderedTerm> {
    let half = C64::new(0.5, 0.0);
    // symbols [S+, S3, S-]
    let p1: Poly<3> = Poly::from([([1, 0, 0], half), ([0, 0, 1], half)]);
    let p2: Poly<3> = Poly::from([([1, 0, 0], -I * 0.5), ([0, 0, 1], I * 0.5)]);
    let p3: Poly<3> = Poly::from([([0, 1, 0], ONE)]);
    let raise = vec![(Generator::S1, ONE), (Generator::S2, I)];
    let lower = vec![(Generator::S1, ONE), (Generator::S2, -I)];
    normal_by_symbols(
        words,
        |g| match g {
            Generator::S1 => p1.clone(),
            Generator::S2 => p2.clone(),
            _ => p3.clone(),
        },
        [raise, single(Generator::S3), lower],
    )
}

fn normal_affine(words: &WordSum) -> Vec<OrderedTerm> {
    sorted_groups(words)
        .into_iter()
        .map(|(mut key, c)| {
            key.sort_by_key(|g| matches!(g, Generator::D));
            OrderedTerm { coef: C64::new(c, 0.0), letters: key.into_iter().map(single).collect() }
        })
        .collect()
}

/// The ordered operator terms a rule assigns to an expression; the
/// promoted operator is the Hermitian part of their sum.
pub fn ordered_terms(
    expr: &HamiltonianExpr,
    params: &PhysicalParams,
    constants: &Constants,
    rule: OrderingRule,
) -> Result<Vec<OrderedTerm>> {
    let words = expand(expr, constants)?;
    Ok(match (rule, expr.family) {
        (OrderingRule::SymmetricWeyl, _) => weyl(&words),
        (OrderingRule::AsWritten, _) => as_written(&words),
        (OrderingRule::Normal, Family::Canonical) => normal_canonical(&words, params),
        (OrderingRule::Normal, Family::Spin) => normal_spin(&words),
        (OrderingRule::Normal, Family::Affine) => normal_affine(&words),
    })
}

fn letter_matrix(set: &OperatorSet, letter: &Letter) -> Result<OperatorMatrix> {
    if let [(g, c)] = letter.as_slice() {
        if *c == ONE {
            return Ok(set.get(*g)?.clone());
        }
    }
    let mut acc = OperatorMatrix::identity(&set.rep).scale(ZERO);
    for (g, c) in letter {
        acc = acc.add_scaled(set.get(*g)?, *c)?;
    }
    Ok(acc)
}

/// `D f(Q) D` on the half-line grid as `S^dagger f S`, with `S` the
/// fourth-order staggered difference onto cell midpoints and `f` sampled
/// there. The product of two central-difference matrices annihilates the
/// alternating grid mode; this form does not. Returns `None` for other words.
fn staggered_sandwich(set: &OperatorSet, letters: &[Letter]) -> Result<Option<OperatorMatrix>> {
    if set.family != Family::Affine || letters.len() < 2 {
        return Ok(None);
    }
    let is = |l: &Letter, g: Generator| l.len() == 1 && l[0].0 == g && l[0].1 == ONE;
    let (first, rest) = letters.split_first().expect("non-empty");
    let (last, middle) = rest.split_last().expect("non-empty");
    if !is(first, Generator::D) || !is(last, Generator::D) {
        return Ok(None);
    }
    // net power of Q in the middle
    let mut power = 0i32;
    for l in middle {
        if is(l, Generator::Q) {
            power += 1;
        } else if is(l, Generator::QInv) {
            power -= 1;
        } else {
            return Ok(None);
        }
    }
    let grid = set.rep.grid()?;
    let n = grid.len() as isize;
    let hbar = set.params().hbar;
    // midpoint k sits between nodes k and k+1; S[k, k-1..=k+2]
    const STENCIL: [(isize, f64); 4] = [(-1, 1.0), (0, -27.0), (1, 27.0), (2, -1.0)];
    let s_scale = 1.0 / (24.0 * grid.du);
    let mut band = crate::operators::BandMatrix::zeros(n as usize, 3);
    for k in -2..n {
        let f = hbar * hbar * (grid.u_min + (k as f64 + 0.5) * grid.du).exp().powi(power);
        for (oi, ci) in STENCIL {
            let i = k + oi;
            if !(0..n).contains(&i) {
                continue;
            }
            for (oj, cj) in STENCIL {
                let j = k + oj;
                if !(0..n).contains(&j) {
                    continue;
                }
                let v = band.get(i as usize, j as usize) + C64::new(f * ci * cj * s_scale * s_scale, 0.0);
                band.set(i as usize, j as usize, v);
            }
        }
    }
    OperatorMatrix::hermitian(set.rep.clone(), crate::operators::Storage::Banded(band)).map(Some)
}

/// Promotes a classical expression to a Hermitian operator on `set`.
pub fn promote(
    expr: &HamiltonianExpr,
    set: &OperatorSet,
    constants: &Constants,
    rule: OrderingRule,
) -> Result<OperatorMatrix> {
    if expr.family != set.family {
        return Err(Error::FamilyMismatch {
            expected: set.family.to_string(),
            got: expr.family.to_string(),
        });
    }
    let terms = ordered_terms(expr, set.params(), constants, rule)?;
    let mut cache: Vec<(Letter, OperatorMatrix)> = Vec::new();
    let mut total = OperatorMatrix::identity(&set.rep).scale(ZERO);
    for term in &terms {
        if rule == OrderingRule::AsWritten {
            if let Some(m) = staggered_sandwich(set, &term.letters)? {
                total = total.add_scaled(&m, term.coef)?;
                continue;
            }
        }
        let mut acc = OperatorMatrix::identity(&set.rep);
        for letter in &term.letters {
            let m = match cache.iter().find(|(l, _)| l == letter) {
                Some((_, m)) => m.clone(),
                None => {
                    let m = letter_matrix(set, letter)?;
                    cache.push((letter.clone(), m.clone()));
                    m
                }
            };
            acc = acc.matmul(&m)?;
        }
        total = total.add_scaled(&acc, term.coef)?;
    }
    total.hermitian_part().into_hermitian()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_are_distinct_and_complete() {
        use Generator::*;
        let perms = distinct_permutations(&[P, P, Q, Q]);
        assert_eq!(perms.len(), 6);
        let perms = distinct_permutations(&[P, Q, Q, Q, Q]);
        assert_eq!(perms.len(), 5);
        assert_eq!(distinct_permutations(&[]).len(), 1);
    }
}
