//! Structural differentiation with light constant folding.

use super::{BinOp, Expr, Func};

pub(super) fn derivative(e: &Expr) -> Expr {
    match e {
        Expr::Num(_) | Expr::Const(_) | Expr::Param(_) => zero(),
        Expr::Var => one(),
        Expr::Neg(a) => neg(derivative(a)),
        Expr::Binary(BinOp::Add, a, b) => add(derivative(a), derivative(b)),
        Expr::Binary(BinOp::Sub, a, b) => sub(derivative(a), derivative(b)),
        Expr::Binary(BinOp::Mul, a, b) => add(
            mul(derivative(a), (**b).clone()),
            mul((**a).clone(), derivative(b)),
        ),
        Expr::Binary(BinOp::Div, a, b) => {
            // (a'b - ab') / b^2
            let num = sub(
                mul(derivative(a), (**b).clone()),
                mul((**a).clone(), derivative(b)),
            );
            div(num, pow((**b).clone(), 2.0))
        }
        Expr::Pow(a, n) => {
            let n = n
                .literal_value()
                .expect("exponent of a parsed power is a literal");
            mul(
                mul(Expr::Num(n), pow((**a).clone(), n - 1.0)),
                derivative(a),
            )
        }
        Expr::Call(f, a) => {
            let inner = (**a).clone();
            let da = derivative(a);
            let outer = match f {
                Func::Sin => Expr::call(Func::Cos, inner),
                Func::Cos => neg(Expr::call(Func::Sin, inner)),
                Func::Exp => Expr::call(Func::Exp, inner),
                Func::Tanh => sub(one(), pow(Expr::call(Func::Tanh, inner), 2.0)),
                Func::Sqrt => {
                    return div(da, mul(Expr::Num(2.0), Expr::call(Func::Sqrt, inner)));
                }
            };
            mul(outer, da)
        }
    }
}

fn zero() -> Expr {
    Expr::Num(0.0)
}

fn one() -> Expr {
    Expr::Num(1.0)
}

fn is_num(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Num(x) if *x == v)
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        a => Expr::Neg(Box::new(a)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
        (a, b) if is_num(&a, 0.0) => b,
        (a, b) if is_num(&b, 0.0) => a,
        (a, b) => Expr::binary(BinOp::Add, a, b),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
        (a, b) if is_num(&b, 0.0) => a,
        (a, b) if is_num(&a, 0.0) => neg(b),
        (a, b) => Expr::binary(BinOp::Sub, a, b),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
        (a, b) if is_num(&a, 0.0) || is_num(&b, 0.0) => zero(),
        (a, b) if is_num(&a, 1.0) => b,
        (a, b) if is_num(&b, 1.0) => a,
        (a, b) => Expr::binary(BinOp::Mul, a, b),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (a, _) if is_num(&a, 0.0) => zero(),
        (a, b) if is_num(&b, 1.0) => a,
        (a, b) => Expr::binary(BinOp::Div, a, b),
    }
}

fn pow(a: Expr, n: f64) -> Expr {
    if n == 1.0 {
        a
    } else if n == 0.0 {
        one()
    } else {
        Expr::Pow(Box::new(a), Box::new(Expr::Num(n)))
    }
}
