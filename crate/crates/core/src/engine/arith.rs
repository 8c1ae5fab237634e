use std::cmp::Ordering;

use super::store::Store;
use crate::error::{BridgeError, ErrorKind, Result};
use crate::term::{write_atom, Term};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Num {
    Int(i64),
    Float(f64),
}

impl Num {
    pub fn to_term(self) -> Term {
        match self {
            Num::Int(i) => Term::Int(i),
            Num::Float(f) => Term::Float(f),
        }
    }

    fn as_f64(self) -> f64 {
        match self {
            Num::Int(i) => i as f64,
            Num::Float(f) => f,
        }
    }
}

fn eval_err(msg: impl Into<String>) -> BridgeError {
    BridgeError::logic(ErrorKind::EvaluationError, msg)
}

fn type_err(msg: impl Into<String>) -> BridgeError {
    BridgeError::logic(ErrorKind::TypeError, msg)
}

fn overflow(op: &str) -> BridgeError {
    eval_err(format!("integer overflow in {op}"))
}

fn int_only(op: &str, a: Num, b: Num) -> Result<(i64, i64)> {
    match (a, b) {
        (Num::Int(x), Num::Int(y)) => Ok((x, y)),
        _ => Err(type_err(format!("{op} expects integers"))),
    }
}

fn float_result(op: &str, f: f64) -> Result<Num> {
    if f.is_nan() {
        return Err(eval_err(format!("{op} is undefined for these arguments")));
    }
    Ok(Num::Float(f))
}

fn binary(op: &str, a: Num, b: Num) -> Result<Num> {
    use Num::{Float, Int};
    Ok(match op {
        "+" => match (a, b) {
            (Int(x), Int(y)) => Int(x.checked_add(y).ok_or_else(|| overflow(op))?),
            _ => Float(a.as_f64() + b.as_f64()),
        },
        "-" => match (a, b) {
            (Int(x), Int(y)) => Int(x.checked_sub(y).ok_or_else(|| overflow(op))?),
            _ => Float(a.as_f64() - b.as_f64()),
        },
        "*" => match (a, b) {
            (Int(x), Int(y)) => Int(x.checked_mul(y).ok_or_else(|| overflow(op))?),
            _ => Float(a.as_f64() * b.as_f64()),
        },
        "/" => match (a, b) {
            (_, Int(0)) => return Err(eval_err("division by zero")),
            (Int(x), Int(y)) => {
                if x.checked_rem(y).ok_or_else(|| overflow(op))? == 0 {
                    Int(x / y)
                } else {
                    Float(x as f64 / y as f64)
                }
            }
            _ => {
                if b.as_f64() == 0.0 {
                    return Err(eval_err("division by zero"));
                }
                Float(a.as_f64() / b.as_f64())
            }
        },
        "//" => {
            let (x, y) = int_only(op, a, b)?;
            if y == 0 {
                return Err(eval_err("division by zero"));
            }
            Int(x.checked_div(y).ok_or_else(|| overflow(op))?)
        }
        "mod" => {
            let (x, y) = int_only(op, a, b)?;
            if y == 0 {
                return Err(eval_err("division by zero"));
            }
            Int(x
                .checked_rem_euclid(y)
                .map(|r| if y < 0 && r != 0 { r + y } else { r })
                .ok_or_else(|| overflow(op))?)
        }
        "min" => match compare_num(a, b) {
            Ordering::Greater => b,
            _ => a,
        },
        "max" => match compare_num(a, b) {
            Ordering::Less => b,
            _ => a,
        },
        "pow" | "**" => float_result(op, a.as_f64().powf(b.as_f64()))?,
        "atan2" => Float(a.as_f64().atan2(b.as_f64())),
        _ => unreachable!("checked by is_binary"),
    })
}

fn unary(op: &str, a: Num) -> Result<Num> {
    use Num::{Float, Int};
    Ok(match op {
        "-" => match a {
            Int(x) => Int(x.checked_neg().ok_or_else(|| overflow(op))?),
            Float(f) => Float(-f),
        },
        "+" => a,
        "abs" => match a {
            Int(x) => Int(x.checked_abs().ok_or_else(|| overflow(op))?),
            Float(f) => Float(f.abs()),
        },
        "float" => Float(a.as_f64()),
        "integer" => match a {
            Int(_) => a,
            Float(f) => {
                let r = f.round();
                if !r.is_finite() || r.abs() >= 9.2e18 {
                    return Err(eval_err("float too large for an integer"));
                }
                Int(r as i64)
            }
        },
        "sqrt" => float_result(op, a.as_f64().sqrt())?,
        "sin" => float_result(op, a.as_f64().sin())?,
        "cos" => float_result(op, a.as_f64().cos())?,
        "tan" => float_result(op, a.as_f64().tan())?,
        "asin" => float_result(op, a.as_f64().asin())?,
        "acos" => float_result(op, a.as_f64().acos())?,
        "atan" => float_result(op, a.as_f64().atan())?,
        "exp" => float_result(op, a.as_f64().exp())?,
        "log" => {
            if a.as_f64() <= 0.0 {
                return Err(eval_err("log of a non-positive number"));
            }
            Float(a.as_f64().ln())
        }
        _ => unreachable!("checked by is_unary"),
    })
}

fn is_binary(op: &str) -> bool {
    matches!(
        op,
        "+" | "-" | "*" | "/" | "//" | "mod" | "min" | "max" | "pow" | "**" | "atan2"
    )
}

fn is_unary(op: &str) -> bool {
    matches!(
        op,
        "-" | "+"
            | "abs"
            | "float"
            | "integer"
            | "sqrt"
            | "sin"
            | "cos"
            | "tan"
            | "asin"
            | "acos"
            | "atan"
            | "exp"
            | "log"
    )
}

/// Evaluates an arithmetic expression under the current bindings.
pub fn eval(t: &Term, store: &Store) -> Result<Num> {
    enum Task {
        Eval(Term),
        Apply(&'static str, usize),
    }
    fn intern_op(name: &str) -> &'static str {
        const OPS: [&str; 23] = [
            "+", "-", "*", "/", "//", "mod", "min", "max", "pow", "**", "atan2", "abs", "float", "integer", "sqrt",
            "sin", "cos", "tan", "asin", "acos", "atan", "exp", "log",
        ];
        OPS.iter().find(|o| **o == name).copied().unwrap_or("")
    }
    let mut tasks = vec![Task::Eval(t.clone())];
    let mut vals: Vec<Num> = Vec::new();
    while let Some(task) = tasks.pop() {
        match task {
            Task::Eval(t) => match store.deref(&t) {
                Term::Int(i) => vals.push(Num::Int(i)),
                Term::Float(f) => vals.push(Num::Float(f)),
                Term::Var(_) => {
                    return Err(BridgeError::logic(
                        ErrorKind::InstantiationError,
                        "arithmetic expression is not sufficiently instantiated",
                    ))
                }
                Term::Atom(s) => match s.as_str() {
                    "pi" => vals.push(Num::Float(std::f64::consts::PI)),
                    "e" => vals.push(Num::Float(std::f64::consts::E)),
                    "inf" => vals.push(Num::Float(f64::INFINITY)),
                    other => return Err(type_err(format!("{} is not evaluable", write_atom(other)))),
                },
                Term::Compound(c) => {
                    let name = c.functor().as_str();
                    let known = match c.arity() {
                        1 => is_unary(name),
                        2 => is_binary(name),
                        _ => false,
                    };
                    if !known {
                        return Err(type_err(format!("{}/{} is not evaluable", write_atom(name), c.arity())));
                    }
                    tasks.push(Task::Apply(intern_op(name), c.arity()));
                    for a in c.args().iter().rev() {
                        tasks.push(Task::Eval(a.clone()));
                    }
                }
            },
            Task::Apply(op, 1) => {
                let a = vals.pop().expect("operand");
                vals.push(unary(op, a)?);
            }
            Task::Apply(op, _) => {
                let b = vals.pop().expect("operand");
                let a = vals.pop().expect("operand");
                vals.push(binary(op, a, b)?);
            }
        }
    }
    Ok(vals.pop().expect("result"))
}

pub fn compare_num(a: Num, b: Num) -> Ordering {
    match (a, b) {
        (Num::Int(x), Num::Int(y)) => x.cmp(&y),
        _ => a.as_f64().partial_cmp(&b.as_f64()).unwrap_or(Ordering::Equal),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_term;

    fn ev(text: &str) -> Result<Num> {
        eval(&parse_term(text).unwrap(), &Store::new(4, false))
    }

    #[test]
    fn integer_and_float_arithmetic() {
        assert_eq!(ev("1 + 2 * 3").unwrap(), Num::Int(7));
        assert_eq!(ev("6 / 3").unwrap(), Num::Int(2));
        assert_eq!(ev("7 / 2").unwrap(), Num::Float(3.5));
        assert_eq!(ev("7 // 2").unwrap(), Num::Int(3));
        assert_eq!(ev("-7 mod 3").unwrap(), Num::Int(2));
        assert_eq!(ev("7 mod -3").unwrap(), Num::Int(-2));
        assert_eq!(ev("max(1, 2.0)").unwrap(), Num::Float(2.0));
        assert_eq!(ev("-(3)").unwrap(), Num::Int(-3));
        assert_eq!(ev("sqrt(16)").unwrap(), Num::Float(4.0));
    }

    #[test]
    fn errors_have_kinds() {
        assert_eq!(ev("1 / 0").unwrap_err().kind, ErrorKind::EvaluationError);
        assert_eq!(ev("X + 1").unwrap_err().kind, ErrorKind::InstantiationError);
        assert_eq!(ev("foo + 1").unwrap_err().kind, ErrorKind::TypeError);
        assert_eq!(
            ev("9223372036854775807 + 1").unwrap_err().kind,
            ErrorKind::EvaluationError
        );
        assert_eq!(ev("1.5 // 2").unwrap_err().kind, ErrorKind::TypeError);
        assert_eq!(ev("sqrt(-1)").unwrap_err().kind, ErrorKind::EvaluationError);
    }
}
