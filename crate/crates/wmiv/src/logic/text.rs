//! Textual s-expression format for formulas and linear expressions, e.g.
//! `(and (<= (+ x y) 1) (or A (not B)))`. Rationals are written `p/q`.
//!
//! Emission uses canonical atoms, so `emit(parse(s))` is semantically
//! identical to `s` but not necessarily byte-identical.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::logic::{CmpOp, Formula, FormulaNode, LinearExpr, Sort, Variable};
use crate::logic::atom::Atom;
use crate::rational::{parse_rat, Rat};
use crate::{Error, Result};

/// Parsed s-expression.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SExp {
    Sym(String),
    List(Vec<SExp>),
}

impl fmt::Display for SExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExp::Sym(s) => write!(f, "{s}"),
            SExp::List(items) => {
                write!(f, "(")?;
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Tokenizes and parses one s-expression; trailing input is an error.
pub fn parse_sexp(src: &str) -> Result<SExp> {
    let tokens = tokenize(src)?;
    let mut pos = 0;
    let exp = parse_tokens(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(Error::Parse(format!(
            "unexpected trailing input near token {}",
            tokens[pos]
        )));
    }
    Ok(exp)
}

fn tokenize(src: &str) -> Result<Vec<String>> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for ch in src.chars() {
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                tokens.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    if tokens.is_empty() {
        return Err(Error::Parse("empty input".into()));
    }
    Ok(tokens)
}

fn parse_tokens(tokens: &[String], pos: &mut usize) -> Result<SExp> {
    match tokens.get(*pos) {
        None => Err(Error::Parse("unexpected end of input".into())),
        Some(t) if t == "(" => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => return Err(Error::Parse("unclosed parenthesis".into())),
                    Some(t) if t == ")" => {
                        *pos += 1;
                        return Ok(SExp::List(items));
                    }
                    _ => items.push(parse_tokens(tokens, pos)?),
                }
            }
        }
        Some(t) if t == ")" => Err(Error::Parse("unexpected `)`".into())),
        Some(t) => {
            *pos += 1;
            Ok(SExp::Sym(t.clone()))
        }
    }
}

/// Name-to-variable table used while parsing; the same name always maps
/// to the same variable within one table.
#[derive(Default, Debug)]
pub struct VarTable {
    by_name: BTreeMap<String, Variable>,
}

impl VarTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pre-registers an existing variable under its name.
    pub fn declare(&mut self, v: &Variable) {
        self.by_name.insert(v.name().to_string(), v.clone());
    }

    pub fn get(&self, name: &str) -> Option<&Variable> {
        self.by_name.get(name)
    }

    pub fn intern(&mut self, name: &str, sort: Sort) -> Result<Variable> {
        if let Some(v) = self.by_name.get(name) {
            if v.sort() != sort {
                return Err(Error::Parse(format!(
                    "variable `{name}` used with conflicting sorts"
                )));
            }
            return Ok(v.clone());
        }
        let v = Variable::fresh(name, sort);
        self.by_name.insert(name.to_string(), v.clone());
        Ok(v)
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        self.by_name.values()
    }
}

fn is_rational_token(s: &str) -> bool {
    parse_rat(s).is_ok()
}

/// Parses a linear expression from an s-expression.
pub fn expr_from_sexp(exp: &SExp, vars: &mut VarTable) -> Result<LinearExpr> {
    match exp {
        SExp::Sym(s) if is_rational_token(s) => Ok(LinearExpr::constant(parse_rat(s)?)),
        SExp::Sym(s) => Ok(LinearExpr::var(&vars.intern(s, Sort::Real)?)),
        SExp::List(items) => {
            let (head, args) = split_head(items, "expression")?;
            match head {
                "+" => {
                    let mut acc = LinearExpr::zero();
                    for a in args {
                        acc = acc + expr_from_sexp(a, vars)?;
                    }
                    Ok(acc)
                }
                "-" => match args {
                    [one] => Ok(-expr_from_sexp(one, vars)?),
                    [first, rest @ ..] => {
                        let mut acc = expr_from_sexp(first, vars)?;
                        for a in rest {
                            acc = acc - expr_from_sexp(a, vars)?;
                        }
                        Ok(acc)
                    }
                    [] => Err(Error::Parse("`-` needs at least one argument".into())),
                },
                "*" => {
                    let mut constant = Rat::one();
                    let mut linear: Option<LinearExpr> = None;
                    for a in args {
                        let e = expr_from_sexp(a, vars)?;
                        if e.is_constant() {
                            constant *= e.constant_part();
                        } else if linear.is_none() {
                            linear = Some(e);
                        } else {
                            return Err(Error::Parse(
                                "nonlinear product in a linear expression".into(),
                            ));
                        }
                    }
                    Ok(match linear {
                        Some(e) => e * constant,
                        None => LinearExpr::constant(constant),
                    })
                }
                other => Err(Error::Parse(format!("unknown expression head `{other}`"))),
            }
        }
    }
}

fn split_head<'a>(items: &'a [SExp], what: &str) -> Result<(&'a str, &'a [SExp])> {
    match items.split_first() {
        Some((SExp::Sym(h), rest)) => Ok((h.as_str(), rest)),
        _ => Err(Error::Parse(format!("malformed {what}"))),
    }
}

/// Parses a formula from an s-expression.
pub fn formula_from_sexp(exp: &SExp, vars: &mut VarTable) -> Result<Formula> {
    match exp {
        SExp::Sym(s) if s == "true" => Ok(Formula::tt()),
        SExp::Sym(s) if s == "false" => Ok(Formula::ff()),
        SExp::Sym(s) if is_rational_token(s) => {
            Err(Error::Parse(format!("number `{s}` where a formula was expected")))
        }
        SExp::Sym(s) => Ok(Formula::prop(&vars.intern(s, Sort::Bool)?)),
        SExp::List(items) => {
            let (head, args) = split_head(items, "formula")?;
            let cmp = |op: CmpOp, args: &[SExp], vars: &mut VarTable| -> Result<Formula> {
                match args {
                    [a, b] => {
                        let lhs = expr_from_sexp(a, vars)?;
                        let rhs = expr_from_sexp(b, vars)?;
                        Ok(Formula::cmp(&lhs, op, &rhs))
                    }
                    _ => Err(Error::Parse(format!(
                        "comparison expects two arguments, got {}",
                        args.len()
                    ))),
                }
            };
            match head {
                "not" => match args {
                    [f] => Ok(Formula::not(formula_from_sexp(f, vars)?)),
                    _ => Err(Error::Parse("`not` expects one argument".into())),
                },
                "and" => Ok(Formula::and(
                    args.iter()
                        .map(|a| formula_from_sexp(a, vars))
                        .collect::<Result<Vec<_>>>()?,
                )),
                "or" => Ok(Formula::or(
                    args.iter()
                        .map(|a| formula_from_sexp(a, vars))
                        .collect::<Result<Vec<_>>>()?,
                )),
                "=>" | "implies" => match args {
                    [a, b] => Ok(Formula::implies(
                        formula_from_sexp(a, vars)?,
                        formula_from_sexp(b, vars)?,
                    )),
                    _ => Err(Error::Parse("`=>` expects two arguments".into())),
                },
                "iff" | "<=>" => match args {
                    [a, b] => Ok(Formula::iff(
                        formula_from_sexp(a, vars)?,
                        formula_from_sexp(b, vars)?,
                    )),
                    _ => Err(Error::Parse("`iff` expects two arguments".into())),
                },
                "<=" => cmp(CmpOp::Le, args, vars),
                "<" => cmp(CmpOp::Lt, args, vars),
                ">=" => cmp(CmpOp::Ge, args, vars),
                ">" => cmp(CmpOp::Gt, args, vars),
                "=" => cmp(CmpOp::Eq, args, vars),
                "!=" => cmp(CmpOp::Ne, args, vars),
                other => Err(Error::Parse(format!("unknown formula head `{other}`"))),
            }
        }
    }
}

/// Parses a formula from text.
pub fn parse_formula(src: &str, vars: &mut VarTable) -> Result<Formula> {
    formula_from_sexp(&parse_sexp(src)?, vars)
}

/// Emits a linear expression.
pub fn emit_expr(e: &LinearExpr) -> String {
    let mut parts: Vec<String> = e
        .terms()
        .map(|(v, c)| {
            if c.is_one() {
                v.name().to_string()
            } else {
                format!("(* {} {})", c, v.name())
            }
        })
        .collect();
    if !e.constant_part().clone().is_zero() || parts.is_empty() {
        parts.push(e.constant_part().to_string());
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        format!("(+ {})", parts.join(" "))
    }
}

/// Emits a formula in the textual format.
pub fn emit(f: &Formula) -> String {
    match f.view() {
        FormulaNode::True => "true".into(),
        FormulaNode::False => "false".into(),
        FormulaNode::Atom(Atom::Bool(v)) => v.name().to_string(),
        FormulaNode::Atom(Atom::Lra(a)) => format!(
            "({} {} {})",
            match a.rel() {
                crate::logic::atom::Rel::Le => "<=",
                crate::logic::atom::Rel::Lt => "<",
                crate::logic::atom::Rel::Eq => "=",
            },
            emit_expr(&a.lhs_expr()),
            a.rhs()
        ),
        FormulaNode::Not(g) => format!("(not {})", emit(g)),
        FormulaNode::And(fs) => emit_nary("and", fs),
        FormulaNode::Or(fs) => emit_nary("or", fs),
        FormulaNode::Implies(a, b) => format!("(=> {} {})", emit(a), emit(b)),
        FormulaNode::Iff(a, b) => format!("(iff {} {})", emit(a), emit(b)),
    }
}

fn emit_nary(head: &str, fs: &[Formula]) -> String {
    let body: Vec<String> = fs.iter().map(emit).collect();
    format!("({head} {})", body.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Valuation;
    use crate::rational::{int, rat};

    #[test]
    fn parses_the_reference_shape() {
        let mut vars = VarTable::new();
        let f = parse_formula("(and (<= (+ x y) 1) (or A (not B)))", &mut vars).unwrap();
        assert_eq!(f.atoms().len(), 3);
        assert_eq!(vars.get("x").unwrap().sort(), Sort::Real);
        assert_eq!(vars.get("A").unwrap().sort(), Sort::Bool);
    }

    #[test]
    fn round_trip_is_semantically_stable() {
        let mut vars = VarTable::new();
        let src = "(and (>= x 0) (< (* 2 y) 3/2) (=> A (= x y)))";
        let f = parse_formula(src, &mut vars).unwrap();
        let emitted = emit(&f);
        let mut vars2 = VarTable::new();
        let g = parse_formula(&emitted, &mut vars2).unwrap();
        assert_eq!(emit(&g), emitted);

        // Same truth value at a sample point.
        let p1 = Valuation::new()
            .with_real(vars.get("x").unwrap(), rat(1, 2))
            .with_real(vars.get("y").unwrap(), rat(1, 2))
            .with_bool(vars.get("A").unwrap(), true);
        let p2 = Valuation::new()
            .with_real(vars2.get("x").unwrap(), rat(1, 2))
            .with_real(vars2.get("y").unwrap(), rat(1, 2))
            .with_bool(vars2.get("A").unwrap(), true);
        assert_eq!(f.eval_point(&p1), g.eval_point(&p2));
    }

    #[test]
    fn sort_conflicts_are_rejected() {
        let mut vars = VarTable::new();
        assert!(parse_formula("(and A (<= A 1))", &mut vars).is_err());
    }

    #[test]
    fn nonlinear_products_are_rejected() {
        let mut vars = VarTable::new();
        assert!(parse_formula("(<= (* x y) 1)", &mut vars).is_err());
        assert!(parse_formula("(<= (* 2 x 3) 1)", &mut vars).is_ok());
    }

    #[test]
    fn emitted_constants_and_coefficients_parse_back() {
        let mut vars = VarTable::new();
        let x = Variable::real("x");
        vars.declare(&x);
        let e = LinearExpr::term(rat(-2, 3), &x) + LinearExpr::constant(int(5));
        let s = emit_expr(&e);
        let mut vars2 = VarTable::new();
        let back = expr_from_sexp(&parse_sexp(&s).unwrap(), &mut vars2).unwrap();
        assert_eq!(back.coeff(vars2.get("x").unwrap()), rat(-2, 3));
        assert_eq!(back.constant_part(), &int(5));
    }
}
