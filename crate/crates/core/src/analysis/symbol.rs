// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use super::metric::csv_err;
use crate::dsl::{ordered_terms, promote, Constants, HamiltonianExpr, OrderingRule};
use crate::error::{Error, Result};
use crate::families::{CoherentFamily, PhaseFunction, RepresentationSpec};
use crate::operators::{expectation, Generator, OperatorMatrix, PhysicalParams, C64};
use crate::phase::{Family, PhasePoint};
use crate::scalar::Real;

/// `<point|H|point>` next to the classical value of the same expression.
#[derive(Clone, Debug, Serialize)]
pub struct SymbolReport {
    pub point: PhasePoint,
    pub quantum_symbol: f64,
    /// Imaginary part of the expectation; roundoff only for Hermitian `H`.
    pub imaginary: f64,
    pub classical_value: Option<f64>,
    pub correction: Option<f64>,
}

/// Lower symbol of `h_op` at `point`, optionally under a phase-modified state.
pub fn lower_symbol(
    family: &CoherentFamily,
    h_op: &OperatorMatrix,
    point: &PhasePoint,
    classical: Option<(&HamiltonianExpr, &Constants)>,
    phase: Option<&PhaseFunction>,
) -> Result<SymbolReport> {
    if !h_op.is_hermitian() {
        return Err(Error::NotHermitian(h_op.hermitian_defect()));
    }
    let psi = family.coherent_state(point, phase)?;
    let z = expectation(h_op, &psi)?;
    let classical_value = match classical {
        Some((expr, constants)) => Some(expr.eval_classical(point, constants)?),
        None => None,
    };
    Ok(SymbolReport {
        point: *point,
        quantum_symbol: z.re,
        imaginary: z.im,
        classical_value,
        correction: classical_value.map(|c| z.re - c),
    })
}

/// Displaced generator `U^dagger G U = sum_b a_b(x) G_b` (with `None` the
/// identity), each coefficient returned with its gradient.
/// `(target generator or identity, coefficient, coefficient gradient)`.
type Displaced<T> = Vec<(Option<Generator>, T, [T; 2])>;

/// Value and gradient of one letter option.
type Jet<T> = (Complex<T>, [Complex<T>; 2]);

fn displaced<T: Real>(family: Family, g: Generator, coords: [T; 2]) -> Displaced<T> {
    use Generator::*;
    let (o, z) = (T::one(), T::zero());
    let [a, b] = coords;
    match (family, g) {
        (Family::Canonical, P) => vec![(None, a, [o, z]), (Some(P), o, [z, z])],
        (Family::Canonical, Q) => vec![(None, b, [z, o]), (Some(Q), o, [z, z])],
        (Family::Affine, Q) => vec![(Some(Q), b, [z, o])],
        (Family::Affine, D) => vec![(Some(D), o, [z, z]), (Some(Q), a * b, [b, a])],
        (Family::Affine, QInv) => vec![(Some(QInv), o / b, [z, -o / (b * b)])],
        (Family::Spin, _) => {
            let (st, ct) = a.sin_cos();
            let (sp, cp) = b.sin_cos();
            match g {
                S1 => vec![
                    (Some(S1), cp * ct, [-cp * st, -sp * ct]),
                    (Some(S2), -sp, [z, -cp]),
                    (Some(S3), cp * st, [cp * ct, -sp * st]),
                ],
                S2 => vec![
                    (Some(S1), sp * ct, [-sp * st, cp * ct]),
                    (Some(S2), cp, [z, -sp]),
                    (Some(S3), sp * st, [sp * ct, cp * st]),
                ],
                _ => vec![(Some(S1), -st, [-ct, z]), (Some(S3), ct, [-st, z])],
            }
        }
        _ => unreachable!("generator {g:?} outside family {family}"),
    }
}

fn family_generators(family: Family) -> &'static [Generator] {
    use Generator::*;
    match family {
        Family::Canonical => &[P, Q],
        Family::Affine => &[Q, D, QInv],
        Family::Spin => &[S1, S2, S3],
    }
}

/// One displaced letter: for each target generator, the source generators
/// and coefficients feeding it.
type LetterOptions = Vec<(Option<Generator>, Vec<(Generator, C64)>)>;

#[derive(Clone, Debug)]
struct Term {
    coef: C64,
    letters: Vec<LetterOptions>,
    /// Option index per letter, with the fiducial moment of the resulting word.
    combos: Vec<(Vec<u8>, C64)>,
}

/// Closed form of the lower symbol `<x|promote(expr)|x>` as a polynomial in
/// displacement coefficients times fiducial moments `<fid|G..G|fid>`
/// computed once on the representation.
#[derive(Clone, Debug)]
pub struct SymbolExpansion {
    family: Family,
    terms: Vec<Term>,
}

impl SymbolExpansion {
    pub fn new(expr: &HamiltonianExpr, family: &CoherentFamily, constants: &Constants, rule: OrderingRule) -> Result<Self> {
        if expr.family != family.family() {
            return Err(Error::FamilyMismatch { expected: family.family().to_string(), got: expr.family.to_string() });
        }
        let fam = family.family();
        let probe = [0.3, 0.7];
        let mut moments: HashMap<Vec<Generator>, C64> = HashMap::new();
        let mut terms = Vec::new();
        for t in ordered_terms(expr, family.params(), constants, rule)? {
            let mut letters = Vec::with_capacity(t.letters.len());
            for letter in &t.letters {
                let mut opts: LetterOptions = Vec::new();
                for (src, c) in letter {
                    for (target, _, _) in displaced::<f64>(fam, *src, probe) {
                        match opts.iter_mut().find(|(tg, _)| *tg == target) {
                            Some((_, v)) => v.push((*src, *c)),
                            None => opts.push((target, vec![(*src, *c)])),
                        }
                    }
                }
                letters.push(opts);
            }
            let mut combos = Vec::new();
            let mut idx = vec![0u8; letters.len()];
            loop {
                let word: Vec<Generator> = idx.iter().zip(&letters).filter_map(|(i, l)| l[*i as usize].0).collect();
                let m = match moments.get(&word) {
                    Some(m) => *m,
                    None => {
                        let m = fiducial_moment(family, &word)?;
                        moments.insert(word, m);
                        m
                    }
                };
                if m != C64::new(0.0, 0.0) {
                    combos.push((idx.clone(), m));
                }
                // odometer over option indices
                let mut k = 0;
                while k < idx.len() {
                    idx[k] += 1;
                    if (idx[k] as usize) < letters[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == idx.len() {
                    break;
                }
            }
            terms.push(Term { coef: t.coef, letters, combos });
        }
        Ok(Self { family: fam, terms })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn value<T: Real>(&self, coords: [T; 2]) -> T {
        self.value_and_gradient(coords).0
    }

    /// Symbol and its exact gradient in the family coordinates.
    pub fn value_and_gradient<T: Real>(&self, coords: [T; 2]) -> (T, [T; 2]) {
        let zero = Complex::new(T::zero(), T::zero());
        let table: Vec<(Generator, Displaced<T>)> = family_generators(self.family)
            .iter()
            .map(|g| (*g, displaced(self.family, *g, coords)))
            .collect();
        let coef_of = |src: Generator, target: Option<Generator>| -> (T, [T; 2]) {
            let row = &table.iter().find(|(g, _)| *g == src).expect("family generator").1;
            row.iter()
                .find(|(t, _, _)| *t == target)
                .map(|(_, v, d)| (*v, *d))
                .unwrap_or((T::zero(), [T::zero(); 2]))
        };
        let cx = |z: C64| Complex::new(T::lit(z.re), T::lit(z.im));
        let mut val = zero;
        let mut grad = [zero; 2];
        for term in &self.terms {
            // value and gradient of each option of each letter
            let opts: Vec<Vec<Jet<T>>> = term
                .letters
                .iter()
                .map(|l| {
                    l.iter()
                        .map(|(target, srcs)| {
                            let mut v = zero;
                            let mut d = [zero; 2];
                            for (src, c) in srcs {
                                let (a, da) = coef_of(*src, *target);
                                let c = cx(*c);
                                v += c * a;
                                d[0] += c * da[0];
                                d[1] += c * da[1];
                            }
                            (v, d)
                        })
                        .collect()
                })
                .collect();
            let coef = cx(term.coef);
            for (idx, moment) in &term.combos {
                let mut pv = Complex::new(T::one(), T::zero());
                let mut pd = [zero; 2];
                for (k, i) in idx.iter().enumerate() {
                    let (v, d) = opts[k][*i as usize];
                    pd = [pd[0] * v + pv * d[0], pd[1] * v + pv * d[1]];
                    pv *= v;
                }
                let w = coef * cx(*moment);
                val += w * pv;
                grad[0] += w * pd[0];
                grad[1] += w * pd[1];
            }
        }
        (val.re, [grad[0].re, grad[1].re])
    }
}

fn fiducial_moment(family: &CoherentFamily, word: &[Generator]) -> Result<C64> {
    let fid = family.fiducial();
    let mut v = fid.amplitudes().clone();
    for g in word.iter().rev() {
        v = family.operators().get(*g)?.apply_vec(&v);
    }
    Ok(fid.amplitudes().dotc(&v))
}

/// One row of an `hbar` correction scan.
#[derive(Clone, Debug, Serialize)]
pub struct CorrectionRow {
    pub hbar: f64,
    pub point: PhasePoint,
    pub quantum_symbol: f64,
    pub classical_value: f64,
    pub correction: f64,
}

/// Lower-symbol corrections across `hbar`, rebuilding the representation and
/// the promoted operator at each value; all other parameters are held fixed.
pub fn hbar_correction_scan(
    rep: &RepresentationSpec,
    base: PhysicalParams,
    expr: &HamiltonianExpr,
    points: &[PhasePoint],
    hbar_list: &[f64],
    rule: OrderingRule,
    user_constants: &[(String, f64)],
) -> Result<Vec<CorrectionRow>> {
    if let Some(h) = hbar_list.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
        return Err(Error::InvalidParameter(format!("hbar values must be positive, got {h}")));
    }
    let per_hbar: Vec<Result<Vec<CorrectionRow>>> = hbar_list
        .par_iter()
        .map(|&hbar| {
            let params = base.with_hbar(hbar);
            let family = rep.build(params)?;
            let mut constants = Constants::from_params(family.params());
            for (k, v) in user_constants {
                constants.set(k, *v);
            }
            let op = promote(expr, family.operators(), &constants, rule)?;
            points
                .iter()
                .map(|pt| {
                    let r = lower_symbol(&family, &op, pt, Some((expr, &constants)), None)?;
                    let c = r.classical_value.expect("classical value requested");
                    Ok(CorrectionRow { hbar, point: *pt, quantum_symbol: r.quantum_symbol, classical_value: c, correction: r.quantum_symbol - c })
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_hbar {
        rows.extend(r?);
    }
    Ok(rows)
}

/// CSV with columns `c0,c1,symbol,classical,correction`.
pub fn write_symbol_csv<W: Write>(reports: &[SymbolReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let names = reports.first().map_or(["p", "q"], |s| s.point.family.coordinate_names());
    w.write_record([names[0], names[1], "symbol", "classical", "correction"]).map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for r in reports {
        w.write_record([
            r.point.coords[0].to_string(),
            r.point.coords[1].to_string(),
            r.quantum_symbol.to_string(),
            opt(r.classical_value),
            opt(r.correction),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// CSV with columns `hbar,c0,c1,symbol,classical,correction`.
pub fn write_correction_csv<W: Write>(rows: &[CorrectionRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let names = rows.first().map_or(["p", "q"], |s| s.point.family.coordinate_names());
    w.write_record(["hbar", names[0], names[1], "symbol", "classical", "correction"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.hbar.to_string(),
            r.point.coords[0].to_string(),
            r.point.coords[1].to_string(),
            r.quantum_symbol.to_string(),
            r.classical_value.to_string(),
            r.correction.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
