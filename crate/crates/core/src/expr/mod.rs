//! Expression language for analytic trajectories `x(t)`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?          right-associative, exponent must be literal
//! atom   := number | 't' | 'c' | 'pi' | param | func '(' expr ')' | '(' expr ')'
//! func   := sin | cos | exp | sqrt | tanh
//! ```
//!
//! There is no implicit multiplication: `2t` is a syntax error.

mod diff;
mod parse;

use std::fmt;

use crate::error::{Error, Result};
use crate::quantities::UnitSystem;

pub use parse::{parse, parse_with_params, ParseError, ParseErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constant {
    /// Speed of light, bound from the active [`UnitSystem`].
    C,
    Pi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Tanh,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Sin, Func::Cos, Func::Exp, Func::Sqrt, Func::Tanh];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Const(Constant),
    /// The independent variable `t`.
    Var,
    /// A named family parameter; must be substituted before evaluation.
    Param(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Power with a literal-only exponent (see [`Expr::is_literal`]).
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }

    /// True for trees built only from numeric literals, unary minus and `^`.
    pub fn is_literal(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::Neg(a) => a.is_literal(),
            Expr::Pow(a, b) => a.is_literal() && b.is_literal(),
            _ => false,
        }
    }

    /// Value of a literal-only tree.
    pub(crate) fn literal_value(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            Expr::Neg(a) => a.literal_value().map(|v| -v),
            Expr::Pow(a, b) => Some(power(a.literal_value()?, b.literal_value()?)),
            _ => None,
        }
    }

    /// Exact structural derivative with respect to `t`.
    pub fn differentiate(&self) -> Expr {
        diff::derivative(self)
    }

    /// Replaces every occurrence of parameter `name` by the literal `value`.
    pub fn substitute(&self, name: &str, value: f64) -> Expr {
        match self {
            Expr::Param(p) if p == name => Expr::Num(value),
            Expr::Num(_) | Expr::Const(_) | Expr::Var | Expr::Param(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(name, value))),
            Expr::Binary(op, a, b) => {
                Expr::binary(*op, a.substitute(name, value), b.substitute(name, value))
            }
            Expr::Pow(a, b) => Expr::Pow(Box::new(a.substitute(name, value)), b.clone()),
            Expr::Call(f, a) => Expr::call(*f, a.substitute(name, value)),
        }
    }

    /// Real-valued evaluation at `t` with `c` taken from `units`.
    pub fn evaluate(&self, t: f64, units: &UnitSystem) -> Result<f64> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Const(Constant::C) => units.c(),
            Expr::Const(Constant::Pi) => std::f64::consts::PI,
            Expr::Var => t,
            Expr::Param(name) => {
                return Err(self.domain(t, format!("unbound parameter `{name}`")));
            }
            Expr::Neg(a) => -a.evaluate(t, units)?,
            Expr::Binary(op, a, b) => {
                let x = a.evaluate(t, units)?;
                let y = b.evaluate(t, units)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(self.domain(t, "division by zero".into()));
                        }
                        x / y
                    }
                }
            }
            Expr::Pow(a, b) => {
                let base = a.evaluate(t, units)?;
                let e = b.evaluate(t, units)?;
                if base < 0.0 && e.fract() != 0.0 {
                    return Err(self.domain(t, "negative base with fractional exponent".into()));
                }
                if base == 0.0 && e < 0.0 {
                    return Err(self.domain(t, "zero base with negative exponent".into()));
                }
                power(base, e)
            }
            Expr::Call(f, a) => {
                let x = a.evaluate(t, units)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Tanh => x.tanh(),
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(self.domain(t, "square root of a negative number".into()));
                        }
                        x.sqrt()
                    }
                }
            }
        };
        if !v.is_finite() {
            return Err(self.domain(t, format!("non-finite value {v}")));
        }
        Ok(v)
    }

    fn domain(&self, t: f64, reason: String) -> Error {
        Error::Domain {
            expr: self.to_string(),
            t,
            reason,
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Num(v) if v.is_sign_negative() => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }
}

fn power(base: f64, e: f64) -> f64 {
    if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
        base.powi(e as i32)
    } else {
        base.powf(e)
    }
}

struct Wrapped<'a>(&'a Expr, bool);

impl fmt::Display for Wrapped<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Prints with the fewest parentheses that re-parse to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Const(Constant::C) => f.write_str("c"),
            Expr::Const(Constant::Pi) => f.write_str("pi"),
            Expr::Var => f.write_str("t"),
            Expr::Param(name) => f.write_str(name),
            Expr::Neg(a) => write!(f, "-{}", Wrapped(a, a.precedence() < 3)),
            Expr::Binary(op, a, b) => {
                let p = self.precedence();
                let sym = match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                write!(
                    f,
                    "{}{}{}",
                    Wrapped(a, a.precedence() < p),
                    sym,
                    Wrapped(b, b.precedence() <= p)
                )
            }
            Expr::Pow(a, b) => write!(
                f,
                "{}^{}",
                Wrapped(a, a.precedence() <= 4),
                Wrapped(b, b.precedence() < 4)
            ),
            Expr::Call(func, a) => write!(f, "{}({})", func.name(), a),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn nat() -> UnitSystem {
        UnitSystem::natural()
    }

    fn eval(s: &str, t: f64) -> Result<f64> {
        parse(s).unwrap().evaluate(t, &nat())
    }

    #[test]
    fn parse_examples() {
        assert_eq!(
            parse("0.6*t").unwrap(),
            Expr::binary(BinOp::Mul, Expr::Num(0.6), Expr::Var)
        );
        let v = eval("0.5*c*sin(t/2)", std::f64::consts::PI).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        assert_eq!(eval("2^3^2", 0.0).unwrap(), 512.0);
    }

    #[test]
    fn precedence_rules() {
        assert_eq!(eval("-2^2", 0.0).unwrap(), -4.0);
        assert_eq!(eval("1 - 2 - 3", 0.0).unwrap(), -4.0);
        assert_eq!(eval("8/4/2", 0.0).unwrap(), 1.0);
        assert_eq!(eval("2 + 3*4", 0.0).unwrap(), 14.0);
        assert_eq!(eval("2^-1", 0.0).unwrap(), 0.5);
        assert_eq!(eval("-t*3", 2.0).unwrap(), -6.0);
        assert_eq!(eval(" ( 1 +\t2 ) * 3 ", 0.0).unwrap(), 9.0);
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(eval("c*t", 2.0).unwrap(), 2.0);
        let si = UnitSystem::si();
        assert_eq!(
            parse("c").unwrap().evaluate(0.0, &si).unwrap(),
            299_792_458.0
        );
        assert_eq!(eval("exp(0)*pi", 17.0).unwrap(), std::f64::consts::PI);
        match eval("sqrt(t-5)", 1.0) {
            Err(Error::Domain { expr, t, .. }) => {
                assert_eq!(expr, "sqrt(t - 5)");
                assert_eq!(t, 1.0);
            }
            other => panic!("expected domain error, got {other:?}"),
        }
        assert!(matches!(eval("1/(t-1)", 1.0), Err(Error::Domain { .. })));
        assert!(matches!(eval("exp(t)", 1e6), Err(Error::Domain { .. })));
        assert!(matches!(eval("(t-2)^0.5", 1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(parse("0.6*t").unwrap().differentiate(), Expr::Num(0.6));
        let d = parse("sin(t)").unwrap().differentiate();
        assert_eq!(d.evaluate(0.0, &nat()).unwrap(), 1.0);
        let d = parse("t^3 + 2*t").unwrap().differentiate();
        assert_eq!(d.evaluate(2.0, &nat()).unwrap(), 14.0);
        assert_eq!(parse("c*pi + 3").unwrap().differentiate(), Expr::Num(0.0));
        let d = parse("sqrt(t)").unwrap().differentiate();
        assert!(matches!(d.evaluate(0.0, &nat()), Err(Error::Domain { .. })));
    }

    #[test]
    fn parameters_substitute() {
        let e = parse_with_params("a*t + b", &["a", "b"]).unwrap();
        assert!(e.evaluate(1.0, &nat()).is_err());
        let e = e.substitute("a", 0.5).substitute("b", 1.0);
        assert_eq!(e.evaluate(2.0, &nat()).unwrap(), 2.0);
        assert!(parse("a*t").is_err());
    }

    #[test]
    fn printing_is_minimal() {
        for (src, printed) in [
            ("0.6*t", "0.6*t"),
            ("(t+1)*(t-1)", "(t + 1)*(t - 1)"),
            ("t - (1 - t)", "t - (1 - t)"),
            ("(t - 1) - t", "t - 1 - t"),
            ("2^3^2", "2^3^2"),
            ("(2^3)^2", "(2^3)^2"),
            ("-(t*2)", "-(t*2)"),
            ("(-t)^2", "(-t)^2"),
            ("t^-1", "t^(-1)"),
            ("sin(t/2)", "sin(t/2)"),
        ] {
            assert_eq!(parse(src).unwrap().to_string(), printed, "{src}");
        }
    }

    pub(crate) fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000).prop_map(|n| Expr::Num(n as f64 / 8.0)),
            Just(Expr::Var),
            Just(Expr::Const(Constant::C)),
            Just(Expr::Const(Constant::Pi)),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                (inner.clone(), inner.clone(), 0usize..4).prop_map(|(a, b, k)| {
                    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][k];
                    Expr::binary(op, a, b)
                }),
                (inner.clone(), 0u32..4)
                    .prop_map(|(a, n)| Expr::Pow(Box::new(a), Box::new(Expr::Num(n as f64)))),
                (inner, 0usize..5).prop_map(|(a, k)| Expr::call(Func::ALL[k], a)),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let s = e.to_string();
            let once = parse(&s).unwrap();
            let twice = parse(&once.to_string()).unwrap();
            prop_assert_eq!(&once, &twice);
        }

        #[test]
        fn garbage_never_panics(s in "[-+*/^()a-z0-9. #$]{0,24}") {
            if let Err(e) = parse(&s) {
                prop_assert!(e.position <= s.chars().count());
            }
        }
    }
}
