// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::PhysicalParams;
use crate::phase::{Family, PhasePoint};
use crate::scalar::Real;

/// Classical dynamical variables. `D` is the affine product `p q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variable {
    P,
    Q,
    D,
    S1,
    S2,
    S3,
}

impl Variable {
    pub fn name(self) -> &'static str {
        match self {
            Variable::P => "p",
            Variable::Q => "q",
            Variable::D => "d",
            Variable::S1 => "s1",
            Variable::S2 => "s2",
            Variable::S3 => "s3",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "p" => Variable::P,
            "q" => Variable::Q,
            "d" => Variable::D,
            "s1" => Variable::S1,
            "s2" => Variable::S2,
            "s3" => Variable::S3,
            _ => return None,
        })
    }

    pub fn in_family(self, family: Family) -> bool {
        match family {
            Family::Canonical => matches!(self, Variable::P | Variable::Q),
            Family::Affine => matches!(self, Variable::D | Variable::Q),
            Family::Spin => matches!(self, Variable::S1 | Variable::S2 | Variable::S3),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TrigFn {
    Cos,
    Sin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Angle {
    Theta,
    Phi,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Num(f64),
    Const(String),
    Var(Variable),
    Trig(TrigFn, Angle),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    /// Divisor is free of dynamical variables.
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
}

impl Node {
    pub fn is_constant(&self) -> bool {
        match self {
            Node::Num(_) | Node::Const(_) => true,
            Node::Var(_) | Node::Trig(..) => false,
            Node::Neg(a) | Node::Pow(a, _) => a.is_constant(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.is_constant() && b.is_constant()
            }
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Node::Num(v) if *v == 0.0)
    }

    fn is_one(&self) -> bool {
        matches!(self, Node::Num(v) if *v == 1.0)
    }

    pub(crate) fn add(a: Node, b: Node) -> Node {
        match (a.is_zero(), b.is_zero()) {
            (true, _) => b,
            (_, true) => a,
            _ => Node::Add(Box::new(a), Box::new(b)),
        }
    }

    pub(crate) fn sub(a: Node, b: Node) -> Node {
        match (a.is_zero(), b.is_zero()) {
            (_, true) => a,
            (true, _) => Node::neg(b),
            _ => Node::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub(crate) fn mul(a: Node, b: Node) -> Node {
        if a.is_zero() || b.is_zero() {
            return Node::Num(0.0);
        }
        if a.is_one() {
            return b;
        }
        if b.is_one() {
            return a;
        }
        Node::Mul(Box::new(a), Box::new(b))
    }

    pub(crate) fn neg(a: Node) -> Node {
        match a {
            Node::Num(v) => Node::Num(-v),
            Node::Neg(inner) => *inner,
            other => Node::Neg(Box::new(other)),
        }
    }

    pub(crate) fn pow(a: Node, n: i32) -> Node {
        match n {
            0 => Node::Num(1.0),
            1 => a,
            _ if a.is_zero() && n > 0 => Node::Num(0.0),
            _ => Node::Pow(Box::new(a), n),
        }
    }

    fn c(name: &str) -> Node {
        Node::Const(name.to_string())
    }

    fn trig(f: TrigFn, a: Angle) -> Node {
        Node::Trig(f, a)
    }

    /// `d(var)/d(coordinate k)` for the family's phase-space coordinates.
    fn var_derivative(var: Variable, family: Family, k: usize) -> Node {
        use Angle::*;
        use TrigFn::*;
        let s_hbar = || Node::mul(Node::c("s"), Node::c("hbar"));
        match (family, var, k) {
            (Family::Canonical | Family::Affine, Variable::P, 0) => Node::Num(1.0),
            (Family::Canonical | Family::Affine, Variable::Q, 1) => Node::Num(1.0),
            (Family::Affine, Variable::D, 0) => Node::Var(Variable::Q),
            (Family::Affine, Variable::D, 1) => Node::Var(Variable::P),
            (Family::Spin, Variable::S1, 0) => {
                Node::mul(s_hbar(), Node::mul(Node::trig(Cos, Theta), Node::trig(Cos, Phi)))
            }
            (Family::Spin, Variable::S1, 1) => Node::neg(Node::mul(
                s_hbar(),
                Node::mul(Node::trig(Sin, Theta), Node::trig(Sin, Phi)),
            )),
            (Family::Spin, Variable::S2, 0) => {
                Node::mul(s_hbar(), Node::mul(Node::trig(Cos, Theta), Node::trig(Sin, Phi)))
            }
            (Family::Spin, Variable::S2, 1) => {
                Node::mul(s_hbar(), Node::mul(Node::trig(Sin, Theta), Node::trig(Cos, Phi)))
            }
            (Family::Spin, Variable::S3, 0) => Node::neg(Node::mul(s_hbar(), Node::trig(Sin, Theta))),
            _ => Node::Num(0.0),
        }
    }

    pub fn derivative(&self, family: Family, k: usize) -> Node {
        match self {
            Node::Num(_) | Node::Const(_) => Node::Num(0.0),
            Node::Var(v) => Node::var_derivative(*v, family, k),
            Node::Trig(f, a) => {
                let hit = matches!((a, k), (Angle::Theta, 0) | (Angle::Phi, 1));
                if !hit || family != Family::Spin {
                    return Node::Num(0.0);
                }
                match f {
                    TrigFn::Cos => Node::neg(Node::trig(TrigFn::Sin, *a)),
                    TrigFn::Sin => Node::trig(TrigFn::Cos, *a),
                }
            }
            Node::Neg(a) => Node::neg(a.derivative(family, k)),
            Node::Add(a, b) => Node::add(a.derivative(family, k), b.derivative(family, k)),
            Node::Sub(a, b) => Node::sub(a.derivative(family, k), b.derivative(family, k)),
            Node::Mul(a, b) => Node::add(
                Node::mul(a.derivative(family, k), (**b).clone()),
                Node::mul((**a).clone(), b.derivative(family, k)),
            ),
            Node::Div(a, b) => {
                let da = a.derivative(family, k);
                if da.is_zero() {
                    Node::Num(0.0)
                } else {
                    Node::Div(Box::new(da), b.clone())
                }
            }
            Node::Pow(a, n) => Node::mul(
                Node::mul(Node::Num(*n as f64), Node::pow((**a).clone(), n - 1)),
                a.derivative(family, k),
            ),
        }
    }

    pub(crate) fn eval<T: Real>(&self, ctx: &EvalContext<'_, T>) -> Result<T> {
        Ok(match self {
            Node::Num(v) => T::lit(*v),
            Node::Const(name) => T::lit(ctx.constants.get(name)?),
            Node::Var(v) => ctx.var(*v)?,
            Node::Trig(f, a) => {
                let x = match a {
                    Angle::Theta => ctx.coords[0],
                    Angle::Phi => ctx.coords[1],
                };
                match f {
                    TrigFn::Cos => x.cos(),
                    TrigFn::Sin => x.sin(),
                }
            }
            Node::Neg(a) => -a.eval(ctx)?,
            Node::Add(a, b) => a.eval(ctx)? + b.eval(ctx)?,
            Node::Sub(a, b) => a.eval(ctx)? - b.eval(ctx)?,
            Node::Mul(a, b) => a.eval(ctx)? * b.eval(ctx)?,
            Node::Div(a, b) => a.eval(ctx)? / b.eval(ctx)?,
            Node::Pow(a, n) => a.eval(ctx)?.powi(*n),
        })
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) => write!(f, "{v}"),
            Node::Const(c) => f.write_str(c),
            Node::Var(v) => f.write_str(v.name()),
            Node::Trig(t, a) => write!(
                f,
                "{}({})",
                if *t == TrigFn::Cos { "cos" } else { "sin" },
                if *a == Angle::Theta { "theta" } else { "phi" }
            ),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "{a}*{b}"),
            Node::Div(a, b) => write!(f, "{a}/({b})"),
            Node::Pow(a, n) => write!(f, "{a}^({n})"),
        }
    }
}

/// Late-bound named constants: `m`, `w`/`omega`, `hbar`, `s`, `beta` and any
/// user-declared names.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    values: BTreeMap<String, f64>,
}

pub const BUILTIN_CONSTANTS: [&str; 6] = ["m", "w", "omega", "hbar", "s", "beta"];

impl Constants {
    pub fn from_params(params: &PhysicalParams) -> Self {
        let mut c = Self::default();
        c.set("m", params.mass);
        c.set("w", params.omega);
        c.set("omega", params.omega);
        c.set("hbar", params.hbar);
        c.set("s", params.s);
        c.set("beta", params.beta);
        c
    }

    pub fn set(&mut self, name: &str, value: f64) -> &mut Self {
        self.values.insert(name.to_string(), value);
        self
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.set(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        self.values
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnboundConstant(name.to_string()))
    }
}

pub(crate) struct EvalContext<'a, T> {
    pub family: Family,
    pub coords: [T; 2],
    pub constants: &'a Constants,
}

impl<T: Real> EvalContext<'_, T> {
    fn var(&self, v: Variable) -> Result<T> {
        let [a, b] = self.coords;
        Ok(match (self.family, v) {
            (Family::Canonical | Family::Affine, Variable::P) => a,
            (Family::Canonical | Family::Affine, Variable::Q) => b,
            (Family::Affine, Variable::D) => a * b,
            (Family::Spin, sv) => {
                let r = T::lit(self.constants.get("s")? * self.constants.get("hbar")?);
                match sv {
                    Variable::S1 => r * a.sin() * b.cos(),
                    Variable::S2 => r * a.sin() * b.sin(),
                    Variable::S3 => r * a.cos(),
                    _ => unreachable!("spin context only carries spin variables"),
                }
            }
            (family, v) => {
                return Err(Error::WrongFamilyVariable {
                    name: v.name().to_string(),
                    family: family.to_string(),
                })
            }
        })
    }
}

/// A parsed polynomial Hamiltonian in one family's favored variables.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianExpr {
    pub family: Family,
    pub source: String,
    pub root: Node,
}

impl HamiltonianExpr {
    pub fn new(family: Family, root: Node) -> Self {
        Self {
            family,
            source: root.to_string(),
            root,
        }
    }

    /// Classical value at a phase point.
    pub fn eval_classical<T: Real>(&self, point: &PhasePoint<T>, constants: &Constants) -> Result<T> {
        point.expect_family(self.family)?;
        self.root.eval(&EvalContext {
            family: self.family,
            coords: point.coords,
            constants,
        })
    }

    /// Exact partial derivative with respect to phase-space coordinate `k`
    /// (`0` is `p` or `theta`, `1` is `q` or `phi`).
    pub fn derivative(&self, k: usize) -> HamiltonianExpr {
        HamiltonianExpr::new(self.family, self.root.derivative(self.family, k))
    }

    pub fn gradient(&self) -> [HamiltonianExpr; 2] {
        [self.derivative(0), self.derivative(1)]
    }

    pub fn is_constant(&self) -> bool {
        self.root.is_constant()
    }
}

impl fmt::Display for HamiltonianExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}
