// Copyright 2026 The coherent-bridge Authors
// SPDX-License-Identifier: Apache-2.0

//! Recursive-descent parser for Hamiltonian expressions.
//!
//! ```text
//! expr   = term { ("+" | "-") term } ;
//! term   = unary { ("*" | "/") unary } ;
//! unary  = "-" unary | power ;
//! power  = atom [ "^" [ "-" ] integer ] ;
//! atom   = number | name | trig "(" angle ")" | "(" expr ")" ;
//! trig   = "cos" | "sin" ;          (spin family only)
//! angle  = "theta" | "phi" ;
//! ```
//!
//! Divisors must be free of dynamical variables. Negative powers are allowed
//! on constants and, in the affine family, on `q`.

use super::expr::{Angle, HamiltonianExpr, Node, TrigFn, Variable, BUILTIN_CONSTANTS};
use crate::error::{Error, Result};
use crate::phase::Family;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

struct Lexer<'a> {
    src: &'a str,
}

impl Lexer<'_> {
    fn tokens(&self) -> Result<Vec<(Tok, usize)>> {
        let bytes = self.src.as_bytes();
        let mut out = Vec::new();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            if c.is_ascii_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() || c == '.' {
                let start = i;
                while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &self.src[start..i];
                let v = text.parse::<f64>().map_err(|_| Error::Syntax {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                })?;
                out.push((Tok::Num(v), start));
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(self.src[start..i].to_string()), start));
            } else if "+-*/^()".contains(c) {
                out.push((Tok::Op(c), i));
                i += 1;
            } else {
                // multi-byte characters are reported at their first byte
                return Err(Error::Syntax {
                    offset: i,
                    message: format!("unexpected character `{}`", self.src[i..].chars().next().unwrap_or(c)),
                });
            }
        }
        Ok(out)
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    family: Family,
    user_constants: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(Error::Syntax {
                offset: self.offset(),
                message: format!("expected `{c}`"),
            })
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.peek() == Some(&Tok::Op('/')) {
                let at = self.offset();
                self.pos += 1;
                let rhs = self.unary()?;
                if !rhs.is_constant() {
                    return Err(Error::NonPolynomial {
                        offset: at,
                        message: "division by a dynamical variable".into(),
                    });
                }
                lhs = Node::Div(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Op('^')) {
            return Ok(base);
        }
        let at = self.offset();
        self.pos += 1;
        let negative = self.eat('-');
        let exp_at = self.offset();
        let n = match self.peek() {
            Some(Tok::Num(v)) if v.fract() == 0.0 && *v <= i32::MAX as f64 => *v as i32,
            Some(Tok::Num(_)) => {
                return Err(Error::NonPolynomial {
                    offset: exp_at,
                    message: "exponent must be an integer".into(),
                })
            }
            _ => {
                return Err(Error::Syntax {
                    offset: exp_at,
                    message: "expected an integer exponent".into(),
                })
            }
        };
        self.pos += 1;
        let n = if negative { -n } else { n };
        if n < 0 {
            let affine_q = self.family == Family::Affine && base == Node::Var(Variable::Q);
            if !(base.is_constant() || affine_q) {
                return Err(Error::NonPolynomial {
                    offset: at,
                    message: "negative power of a dynamical variable".into(),
                });
            }
        }
        Ok(Node::Pow(Box::new(base), n))
    }

    fn atom(&mut self) -> Result<Node> {
        let at = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                self.identifier(&name, at)
            }
            Some(Tok::Op(c)) => Err(Error::Syntax {
                offset: at,
                message: format!("unexpected `{c}`"),
            }),
            None => Err(Error::Syntax {
                offset: at,
                message: "unexpected end of input".into(),
            }),
        }
    }

    fn identifier(&mut self, name: &str, at: usize) -> Result<Node> {
        if let Some(v) = Variable::from_name(name) {
            if !v.in_family(self.family) {
                return Err(Error::WrongFamilyVariable {
                    name: name.to_string(),
                    family: self.family.to_string(),
                });
            }
            return Ok(Node::Var(v));
        }
        if BUILTIN_CONSTANTS.contains(&name) || self.user_constants.contains(&name) {
            return Ok(Node::Const(name.to_string()));
        }
        let trig = match name {
            "cos" => Some(TrigFn::Cos),
            "sin" => Some(TrigFn::Sin),
            _ => None,
        };
        if let Some(f) = trig {
            if self.family != Family::Spin {
                return Err(Error::NonPolynomial {
                    offset: at,
                    message: format!("`{name}` is only available for spin surface coordinates"),
                });
            }
            self.expect('(')?;
            let arg_at = self.offset();
            let angle = match self.peek() {
                Some(Tok::Ident(a)) if a == "theta" => Angle::Theta,
                Some(Tok::Ident(a)) if a == "phi" => Angle::Phi,
                _ => {
                    return Err(Error::NonPolynomial {
                        offset: arg_at,
                        message: "trigonometric functions take `theta` or `phi` only".into(),
                    })
                }
            };
            self.pos += 1;
            self.expect(')')?;
            return Ok(Node::Trig(f, angle));
        }
        if (name == "theta" || name == "phi") && self.family == Family::Spin {
            return Err(Error::NonPolynomial {
                offset: at,
                message: format!("bare angle `{name}`; use cos({name}) or sin({name})"),
            });
        }
        Err(Error::UnknownIdentifier {
            name: name.to_string(),
            offset: at,
        })
    }
}

/// Parses `text` in the given family's variables.
pub fn parse(text: &str, family: Family) -> Result<HamiltonianExpr> {
    parse_with_constants(text, family, &[])
}

/// Like [`parse`], with extra user-declared constant names.
pub fn parse_with_constants(text: &str, family: Family, constants: &[&str]) -> Result<HamiltonianExpr> {
    if text.trim().is_empty() {
        return Err(Error::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let toks = Lexer { src: text }.tokens()?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
        family,
        user_constants: constants,
    };
    let root = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::Syntax {
            offset: p.offset(),
            message: "trailing input".into(),
        });
    }
    Ok(HamiltonianExpr {
        family,
        source: text.to_string(),
        root,
    })
}
