//! The condition/script expression language: a small typed subset with
//! checked 256-bit arithmetic.
//!
//! Integer literals carry no type of their own; they adopt the type of the
//! integer operand they meet (defaulting to `uint256`), which is also how
//! Solidity treats literal constants.

use std::collections::BTreeMap;
use std::fmt;

use ethnum::{I256, U256};
use thiserror::Error;

use super::value::{Address, Value, ValueType};

pub type VarEnv = BTreeMap<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div)
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Eq | BinaryOp::Ne | BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge
        )
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq | BinaryOp::Ne => 3,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 4,
            BinaryOp::Add | BinaryOp::Sub => 5,
            BinaryOp::Mul | BinaryOp::Div => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    /// Untyped non-negative integer literal.
    Int(U256),
    Bool(bool),
    Str(String),
    Addr(Address),
    /// Process variable or task input, resolved against the environment.
    Var(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn int(v: u64) -> Expr {
        Expr::Int(U256::from(v))
    }

    pub fn bin(op: BinaryOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Unary(UnaryOp::Not, Box::new(e))
    }

    pub fn neg(e: Expr) -> Expr {
        Expr::Unary(UnaryOp::Neg, Box::new(e))
    }

    /// Every variable name the expression reads, in first-occurrence order.
    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Var(n) => {
                if !out.contains(&n.as_str()) {
                    out.push(n);
                }
            }
            Expr::Unary(_, e) => e.collect_vars(out),
            Expr::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            _ => {}
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Unary(_, e) => 1 + e.depth(),
            Expr::Binary(_, l, r) => 1 + l.depth().max(r.depth()),
            _ => 1,
        }
    }
}

/// Renders the expression in the concrete condition syntax, fully
/// parenthesised so that re-parsing yields the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(v) => write!(f, "{v}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Expr::Addr(a) => write!(f, "{a}"),
            Expr::Var(n) => f.write_str(n),
            Expr::Unary(UnaryOp::Neg, e) => write!(f, "-({e})"),
            Expr::Unary(UnaryOp::Not, e) => write!(f, "!({e})"),
            Expr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
        }
    }
}

/// `target = value`
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Statement {
    pub target: String,
    pub value: Expr,
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.target, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("arithmetic overflow")]
    ArithmeticOverflow,
    #[error("arithmetic underflow")]
    ArithmeticUnderflow,
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
}

pub fn eval_expr(e: &Expr, env: &VarEnv) -> Result<Value, EvalError> {
    eval_hinted(e, env, None)
}

/// Evaluates with an expected result type, so that bare integer literals
/// take that type instead of defaulting to `uint256`.
pub fn eval_expr_as(e: &Expr, env: &VarEnv, ty: ValueType) -> Result<Value, EvalError> {
    let v = eval_hinted(e, env, Some(ty))?;
    if v.ty() != ty {
        return Err(mismatch(format!("expected {ty}, found {}", v.ty())));
    }
    Ok(v)
}

/// Runs statements in order, each one seeing the previous assignments.
pub fn exec_statements(stmts: &[Statement], env: &mut VarEnv) -> Result<(), EvalError> {
    for s in stmts {
        let v = match env.get(&s.target).map(Value::ty) {
            Some(ty) => eval_expr_as(&s.value, env, ty).map_err(|e| match e {
                EvalError::TypeMismatch(m) => {
                    EvalError::TypeMismatch(format!("assignment to `{}`: {m}", s.target))
                }
                other => other,
            })?,
            None => eval_expr(&s.value, env)?,
        };
        env.insert(s.target.clone(), v);
    }
    Ok(())
}

/// Integer type an expression evaluates to when it can be read off the
/// environment without evaluating; `None` for bare literals.
fn integer_hint(e: &Expr, env: &VarEnv) -> Option<ValueType> {
    match e {
        Expr::Var(n) => env.get(n).map(Value::ty).filter(|t| t.is_integer()),
        Expr::Unary(UnaryOp::Neg, inner) => Some(integer_hint(inner, env).unwrap_or(ValueType::Int256)),
        Expr::Binary(op, l, r) if op.is_arithmetic() => {
            integer_hint(l, env).or_else(|| integer_hint(r, env))
        }
        _ => None,
    }
}

fn mismatch(msg: impl Into<String>) -> EvalError {
    EvalError::TypeMismatch(msg.into())
}

fn literal_as(v: U256, ty: ValueType) -> Result<Value, EvalError> {
    match ty {
        ValueType::Int256 => {
            if v > I256::MAX.as_u256() {
                Err(EvalError::ArithmeticOverflow)
            } else {
                Ok(Value::Int(v.as_i256()))
            }
        }
        ValueType::Uint256 => Ok(Value::Uint(v)),
        other => Err(mismatch(format!("integer literal used as {other}"))),
    }
}

fn eval_hinted(e: &Expr, env: &VarEnv, hint: Option<ValueType>) -> Result<Value, EvalError> {
    match e {
        Expr::Int(v) => literal_as(*v, hint.filter(|t| t.is_integer()).unwrap_or(ValueType::Uint256)),
        Expr::Bool(b) => Ok(Value::Bool(*b)),
        Expr::Str(s) => Ok(Value::Str(s.clone())),
        Expr::Addr(a) => Ok(Value::Address(*a)),
        Expr::Var(n) => env.get(n).cloned().ok_or_else(|| EvalError::UnboundVariable(n.clone())),
        Expr::Unary(UnaryOp::Not, inner) => match eval_hinted(inner, env, None)? {
            Value::Bool(b) => Ok(Value::Bool(!b)),
            v => Err(mismatch(format!("`!` applied to {}", v.ty()))),
        },
        Expr::Unary(UnaryOp::Neg, inner) => {
            let ty = hint.or_else(|| integer_hint(inner, env)).unwrap_or(ValueType::Int256);
            if ty != ValueType::Int256 {
                return Err(mismatch(format!("unary minus applied to {ty}")));
            }
            // -(2^255) is representable even though 2^255 is not.
            if let Expr::Int(v) = inner.as_ref() {
                if *v == I256::MIN.as_u256() {
                    return Ok(Value::Int(I256::MIN));
                }
            }
            match eval_hinted(inner, env, Some(ValueType::Int256))? {
                Value::Int(v) => v.checked_neg().map(Value::Int).ok_or(EvalError::ArithmeticOverflow),
                v => Err(mismatch(format!("unary minus applied to {}", v.ty()))),
            }
        }
        Expr::Binary(op @ (BinaryOp::And | BinaryOp::Or), l, r) => {
            let lv = match eval_hinted(l, env, None)? {
                Value::Bool(b) => b,
                v => return Err(mismatch(format!("`{}` applied to {}", op.symbol(), v.ty()))),
            };
            // short-circuit like Solidity
            if (*op == BinaryOp::And && !lv) || (*op == BinaryOp::Or && lv) {
                return Ok(Value::Bool(lv));
            }
            match eval_hinted(r, env, None)? {
                Value::Bool(b) => Ok(Value::Bool(b)),
                v => Err(mismatch(format!("`{}` applied to {}", op.symbol(), v.ty()))),
            }
        }
        Expr::Binary(op, l, r) if op.is_arithmetic() => {
            let ty = hint
                .filter(|t| t.is_integer())
                .or_else(|| integer_hint(l, env))
                .or_else(|| integer_hint(r, env))
                .unwrap_or(ValueType::Uint256);
            let lv = eval_hinted(l, env, Some(ty))?;
            let rv = eval_hinted(r, env, Some(ty))?;
            arith(*op, lv, rv)
        }
        Expr::Binary(op, l, r) => {
            let ty = integer_hint(l, env).or_else(|| integer_hint(r, env));
            let lv = eval_hinted(l, env, ty)?;
            let rv = eval_hinted(r, env, ty.or(Some(lv.ty())))?;
            compare(*op, lv, rv)
        }
    }
}

fn arith(op: BinaryOp, l: Value, r: Value) -> Result<Value, EvalError> {
    match (l, r) {
        (Value::Uint(a), Value::Uint(b)) => {
            let out = match op {
                BinaryOp::Add => a.checked_add(b).ok_or(EvalError::ArithmeticOverflow)?,
                BinaryOp::Sub => a.checked_sub(b).ok_or(EvalError::ArithmeticUnderflow)?,
                BinaryOp::Mul => a.checked_mul(b).ok_or(EvalError::ArithmeticOverflow)?,
                BinaryOp::Div => {
                    if b == U256::ZERO {
                        return Err(EvalError::DivisionByZero);
                    }
                    a / b
                }
                _ => unreachable!("non-arithmetic operator"),
            };
            Ok(Value::Uint(out))
        }
        (Value::Int(a), Value::Int(b)) => {
            let out = match op {
                BinaryOp::Add => a.checked_add(b).ok_or_else(|| signed_overflow(b >= I256::ZERO))?,
                BinaryOp::Sub => a.checked_sub(b).ok_or_else(|| signed_overflow(b < I256::ZERO))?,
                BinaryOp::Mul => a.checked_mul(b).ok_or_else(|| {
                    signed_overflow((a < I256::ZERO) == (b < I256::ZERO))
                })?,
                BinaryOp::Div => {
                    if b == I256::ZERO {
                        return Err(EvalError::DivisionByZero);
                    }
                    a.checked_div(b).ok_or(EvalError::ArithmeticOverflow)?
                }
                _ => unreachable!("non-arithmetic operator"),
            };
            Ok(Value::Int(out))
        }
        (l, r) => Err(mismatch(format!(
            "`{}` between {} and {}",
            op.symbol(),
            l.ty(),
            r.ty()
        ))),
    }
}

fn signed_overflow(upward: bool) -> EvalError {
    if upward {
        EvalError::ArithmeticOverflow
    } else {
        EvalError::ArithmeticUnderflow
    }
}

fn compare(op: BinaryOp, l: Value, r: Value) -> Result<Value, EvalError> {
    if l.ty() != r.ty() {
        return Err(mismatch(format!(
            "`{}` between {} and {}",
            op.symbol(),
            l.ty(),
            r.ty()
        )));
    }
    let ord = match (&l, &r) {
        (Value::Uint(a), Value::Uint(b)) => a.cmp(b),
        (Value::Int(a), Value::Int(b)) => a.cmp(b),
        _ => {
            return match op {
                BinaryOp::Eq => Ok(Value::Bool(l == r)),
                BinaryOp::Ne => Ok(Value::Bool(l != r)),
                _ => Err(mismatch(format!("`{}` on {}", op.symbol(), l.ty()))),
            }
        }
    };
    use std::cmp::Ordering::*;
    let b = match op {
        BinaryOp::Eq => ord == Equal,
        BinaryOp::Ne => ord != Equal,
        BinaryOp::Lt => ord == Less,
        BinaryOp::Le => ord != Greater,
        BinaryOp::Gt => ord == Greater,
        BinaryOp::Ge => ord != Less,
        _ => unreachable!("non-comparison operator"),
    };
    Ok(Value::Bool(b))
}

/// Static type of an expression during checking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StaticTy {
    Known(ValueType),
    IntLiteral,
}

/// Type-checks an expression against a scope of declared names and returns
/// its type. Bare integer literals type as `uint256`.
pub fn type_of(e: &Expr, scope: &dyn Fn(&str) -> Option<ValueType>) -> Result<ValueType, String> {
    Ok(match static_ty(e, scope)? {
        StaticTy::Known(t) => t,
        StaticTy::IntLiteral => ValueType::Uint256,
    })
}

impl Expr {
    /// Checks that the expression can be stored in a slot of type `ty`,
    /// letting bare integer literals take that type.
    pub fn check_assignable(&self, ty: ValueType, scope: &dyn Fn(&str) -> Option<ValueType>) -> Result<(), String> {
        match static_ty(self, scope)? {
            StaticTy::IntLiteral if ty.is_integer() => Ok(()),
            StaticTy::Known(t) if t == ty => Ok(()),
            t => Err(format!("expected {ty}, found {}", show(t))),
        }
    }
}

fn unify_int(l: StaticTy, r: StaticTy, what: &str) -> Result<StaticTy, String> {
    use StaticTy::*;
    match (l, r) {
        (IntLiteral, IntLiteral) => Ok(IntLiteral),
        (IntLiteral, Known(t)) | (Known(t), IntLiteral) if t.is_integer() => Ok(Known(t)),
        (Known(a), Known(b)) if a == b && a.is_integer() => Ok(Known(a)),
        (a, b) => Err(format!("{what} between {} and {}", show(a), show(b))),
    }
}

fn show(t: StaticTy) -> String {
    match t {
        StaticTy::Known(t) => t.to_string(),
        StaticTy::IntLiteral => "integer literal".into(),
    }
}

fn static_ty(e: &Expr, scope: &dyn Fn(&str) -> Option<ValueType>) -> Result<StaticTy, String> {
    use StaticTy::*;
    Ok(match e {
        Expr::Int(_) => IntLiteral,
        Expr::Bool(_) => Known(ValueType::Bool),
        Expr::Str(_) => Known(ValueType::String),
        Expr::Addr(_) => Known(ValueType::Address),
        Expr::Var(n) => Known(scope(n).ok_or_else(|| format!("unknown variable `{n}`"))?),
        Expr::Unary(UnaryOp::Not, inner) => match static_ty(inner, scope)? {
            Known(ValueType::Bool) => Known(ValueType::Bool),
            t => return Err(format!("`!` applied to {}", show(t))),
        },
        Expr::Unary(UnaryOp::Neg, inner) => match static_ty(inner, scope)? {
            IntLiteral | Known(ValueType::Int256) => Known(ValueType::Int256),
            t => return Err(format!("unary minus applied to {}", show(t))),
        },
        Expr::Binary(op, l, r) => {
            let lt = static_ty(l, scope)?;
            let rt = static_ty(r, scope)?;
            match op {
                BinaryOp::And | BinaryOp::Or => {
                    if lt != Known(ValueType::Bool) || rt != Known(ValueType::Bool) {
                        return Err(format!("`{}` between {} and {}", op.symbol(), show(lt), show(rt)));
                    }
                    Known(ValueType::Bool)
                }
                op if op.is_arithmetic() => unify_int(lt, rt, &format!("`{}`", op.symbol()))?,
                BinaryOp::Eq | BinaryOp::Ne => {
                    if lt != rt {
                        unify_int(lt, rt, &format!("`{}`", op.symbol()))?;
                    }
                    Known(ValueType::Bool)
                }
                _ => {
                    unify_int(lt, rt, &format!("`{}`", op.symbol()))?;
                    Known(ValueType::Bool)
                }
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, Value)]) -> VarEnv {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    fn u(v: u64) -> Value {
        Value::Uint(U256::from(v))
    }

    #[test]
    fn consignment_weight_difference() {
        let e = Expr::bin(
            BinaryOp::Sub,
            Expr::var("truckWeightWithConsignment"),
            Expr::var("truckWeightWithoutConsignment"),
        );
        let env = env(&[("truckWeightWithConsignment", u(40)), ("truckWeightWithoutConsignment", u(15))]);
        assert_eq!(eval_expr(&e, &env), Ok(u(25)));
    }

    #[test]
    fn division_by_zero() {
        let e = Expr::bin(BinaryOp::Div, Expr::var("x"), Expr::var("y"));
        assert_eq!(eval_expr(&e, &env(&[("x", u(7)), ("y", u(0))])), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn boolean_connectives() {
        let e = Expr::bin(
            BinaryOp::And,
            Expr::bin(BinaryOp::Lt, Expr::var("a"), Expr::var("b")),
            Expr::not(Expr::var("c")),
        );
        let env = env(&[("a", u(1)), ("b", u(2)), ("c", Value::Bool(false))]);
        assert_eq!(eval_expr(&e, &env), Ok(Value::Bool(true)));
    }

    #[test]
    fn unsigned_underflow_is_checked() {
        let e = Expr::bin(BinaryOp::Sub, Expr::var("a"), Expr::int(1));
        assert_eq!(eval_expr(&e, &env(&[("a", u(0))])), Err(EvalError::ArithmeticUnderflow));
    }

    #[test]
    fn unsigned_overflow_is_checked() {
        let e = Expr::bin(BinaryOp::Add, Expr::var("a"), Expr::int(1));
        assert_eq!(
            eval_expr(&e, &env(&[("a", Value::Uint(U256::MAX))])),
            Err(EvalError::ArithmeticOverflow)
        );
    }

    #[test]
    fn literal_adopts_signed_type() {
        let e = Expr::bin(BinaryOp::Sub, Expr::var("a"), Expr::int(5));
        assert_eq!(
            eval_expr(&e, &env(&[("a", Value::Int(I256::new(2)))])),
            Ok(Value::Int(I256::new(-3)))
        );
        assert_eq!(eval_expr(&Expr::neg(Expr::int(4)), &VarEnv::new()), Ok(Value::Int(I256::new(-4))));
    }

    #[test]
    fn signed_min_div_minus_one_overflows() {
        let e = Expr::bin(BinaryOp::Div, Expr::var("a"), Expr::neg(Expr::int(1)));
        assert_eq!(
            eval_expr(&e, &env(&[("a", Value::Int(I256::MIN))])),
            Err(EvalError::ArithmeticOverflow)
        );
    }

    #[test]
    fn unbound_variable() {
        assert_eq!(
            eval_expr(&Expr::var("nope"), &VarEnv::new()),
            Err(EvalError::UnboundVariable("nope".into()))
        );
    }

    #[test]
    fn strings_support_equality_only() {
        let env = env(&[("s", Value::Str("x".into()))]);
        let eq = Expr::bin(BinaryOp::Eq, Expr::var("s"), Expr::Str("x".into()));
        assert_eq!(eval_expr(&eq, &env), Ok(Value::Bool(true)));
        let lt = Expr::bin(BinaryOp::Lt, Expr::var("s"), Expr::Str("y".into()));
        assert!(matches!(eval_expr(&lt, &env), Err(EvalError::TypeMismatch(_))));
        let scope = |n: &str| (n == "s").then_some(ValueType::String);
        assert!(type_of(&lt, &scope).is_err());
        assert_eq!(type_of(&eq, &scope), Ok(ValueType::Bool));
    }

    #[test]
    fn short_circuit_skips_rhs_errors() {
        let e = Expr::bin(
            BinaryOp::And,
            Expr::Bool(false),
            Expr::bin(BinaryOp::Eq, Expr::bin(BinaryOp::Div, Expr::int(1), Expr::int(0)), Expr::int(1)),
        );
        assert_eq!(eval_expr(&e, &VarEnv::new()), Ok(Value::Bool(false)));
    }

    #[test]
    fn type_checking() {
        let scope = |n: &str| match n {
            "a" => Some(ValueType::Uint256),
            "i" => Some(ValueType::Int256),
            "f" => Some(ValueType::Bool),
            _ => None,
        };
        assert_eq!(type_of(&Expr::bin(BinaryOp::Add, Expr::var("a"), Expr::int(1)), &scope), Ok(ValueType::Uint256));
        assert!(type_of(&Expr::bin(BinaryOp::Add, Expr::var("a"), Expr::var("i")), &scope).is_err());
        assert!(type_of(&Expr::bin(BinaryOp::And, Expr::var("a"), Expr::var("f")), &scope).is_err());
        assert!(type_of(&Expr::neg(Expr::var("a")), &scope).is_err());
        assert!(type_of(&Expr::var("zz"), &scope).is_err());
        assert_eq!(type_of(&Expr::bin(BinaryOp::Gt, Expr::var("i"), Expr::int(3)), &scope), Ok(ValueType::Bool));
    }
}
