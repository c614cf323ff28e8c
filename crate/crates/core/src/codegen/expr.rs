use std::collections::BTreeSet;

use super::{address_literal, string_literal};
use crate::ir::{type_of, BinaryOp, Expr, UnaryOp, ValueType};

/// Checked arithmetic helpers referenced by rendered expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Helper {
    AddU,
    SubU,
    MulU,
    DivU,
    AddI,
    SubI,
    MulI,
    DivI,
    NegI,
}

impl Helper {
    fn name(self) -> &'static str {
        match self {
            Helper::AddU => "addU",
            Helper::SubU => "subU",
            Helper::MulU => "mulU",
            Helper::DivU => "divU",
            Helper::AddI => "addI",
            Helper::SubI => "subI",
            Helper::MulI => "mulI",
            Helper::DivI => "divI",
            Helper::NegI => "negI",
        }
    }

    pub(crate) fn source(self) -> &'static [&'static str] {
        match self {
            Helper::AddU => &[
                "function addU(uint256 a, uint256 b) internal pure returns (uint256) {",
                "    uint256 c = a + b;",
                "    require(c >= a, \"arithmetic overflow\");",
                "    return c;",
                "}",
            ],
            Helper::SubU => &[
                "function subU(uint256 a, uint256 b) internal pure returns (uint256) {",
                "    require(b <= a, \"arithmetic underflow\");",
                "    return a - b;",
                "}",
            ],
            Helper::MulU => &[
                "function mulU(uint256 a, uint256 b) internal pure returns (uint256) {",
                "    if (a == 0) return 0;",
                "    uint256 c = a * b;",
                "    require(c / a == b, \"arithmetic overflow\");",
                "    return c;",
                "}",
            ],
            Helper::DivU => &[
                "function divU(uint256 a, uint256 b) internal pure returns (uint256) {",
                "    require(b != 0, \"division by zero\");",
                "    return a / b;",
                "}",
            ],
            Helper::AddI => &[
                "function addI(int256 a, int256 b) internal pure returns (int256) {",
                "    int256 c = a + b;",
                "    require((b >= 0 && c >= a) || (b < 0 && c < a), \"arithmetic overflow\");",
                "    return c;",
                "}",
            ],
            Helper::SubI => &[
                "function subI(int256 a, int256 b) internal pure returns (int256) {",
                "    int256 c = a - b;",
                "    require((b >= 0 && c <= a) || (b < 0 && c > a), \"arithmetic overflow\");",
                "    return c;",
                "}",
            ],
            Helper::MulI => &[
                "function mulI(int256 a, int256 b) internal pure returns (int256) {",
                "    if (a == 0) return 0;",
                "    require(!(a == -1 && b == INT256_MIN), \"arithmetic overflow\");",
                "    int256 c = a * b;",
                "    require(c / a == b, \"arithmetic overflow\");",
                "    return c;",
                "}",
            ],
            Helper::DivI => &[
                "function divI(int256 a, int256 b) internal pure returns (int256) {",
                "    require(b != 0, \"division by zero\");",
                "    require(!(b == -1 && a == INT256_MIN), \"arithmetic overflow\");",
                "    return a / b;",
                "}",
            ],
            Helper::NegI => &[
                "function negI(int256 a) internal pure returns (int256) {",
                "    require(a != INT256_MIN, \"arithmetic overflow\");",
                "    return -a;",
                "}",
            ],
        }
    }

    pub(crate) fn needs_int_min(self) -> bool {
        matches!(self, Helper::MulI | Helper::DivI | Helper::NegI)
    }
}

pub(crate) struct ExprRenderer<'s> {
    scope: &'s dyn Fn(&str) -> Option<ValueType>,
    pub(crate) helpers: BTreeSet<Helper>,
}

pub(crate) fn var_name(name: &str) -> String {
    format!("_{name}")
}

impl<'s> ExprRenderer<'s> {
    pub(crate) fn new(scope: &'s dyn Fn(&str) -> Option<ValueType>) -> ExprRenderer<'s> {
        ExprRenderer { scope, helpers: BTreeSet::new() }
    }

    fn int_hint(&self, e: &Expr) -> Option<ValueType> {
        match e {
            Expr::Var(n) => (self.scope)(n).filter(|t| t.is_integer()),
            Expr::Unary(UnaryOp::Neg, _) => Some(ValueType::Int256),
            Expr::Binary(op, l, r) if op.is_arithmetic() => self.int_hint(l).or_else(|| self.int_hint(r)),
            _ => None,
        }
    }

    /// Renders `e` as a value of `ty` (integer literals adapt).
    pub(crate) fn render_as(&mut self, e: &Expr, ty: ValueType) -> String {
        self.render(e, Some(ty))
    }

    pub(crate) fn render_bool(&mut self, e: &Expr) -> String {
        strip_parens(self.render(e, None))
    }

    fn render(&mut self, e: &Expr, hint: Option<ValueType>) -> String {
        match e {
            Expr::Int(v) => {
                if hint == Some(ValueType::Int256) {
                    format!("int256({v})")
                } else {
                    v.to_string()
                }
            }
            Expr::Bool(b) => b.to_string(),
            Expr::Str(s) => string_literal(s),
            Expr::Addr(a) => address_literal(*a),
            Expr::Var(n) => var_name(n),
            Expr::Unary(UnaryOp::Not, inner) => format!("!{}", self.render(inner, None)),
            Expr::Unary(UnaryOp::Neg, inner) => {
                if let Expr::Int(v) = inner.as_ref() {
                    return format!("int256(-{v})");
                }
                self.helpers.insert(Helper::NegI);
                format!("negI({})", strip_parens(self.render(inner, Some(ValueType::Int256))))
            }
            Expr::Binary(op @ (BinaryOp::And | BinaryOp::Or), l, r) => {
                format!("({} {} {})", self.render(l, None), op.symbol(), self.render(r, None))
            }
            Expr::Binary(op, l, r) if op.is_arithmetic() => {
                let ty = hint
                    .filter(|t| t.is_integer())
                    .or_else(|| self.int_hint(l))
                    .or_else(|| self.int_hint(r))
                    .unwrap_or(ValueType::Uint256);
                let signed = ty == ValueType::Int256;
                let h = match (op, signed) {
                    (BinaryOp::Add, false) => Helper::AddU,
                    (BinaryOp::Sub, false) => Helper::SubU,
                    (BinaryOp::Mul, false) => Helper::MulU,
                    (BinaryOp::Div, false) => Helper::DivU,
                    (BinaryOp::Add, true) => Helper::AddI,
                    (BinaryOp::Sub, true) => Helper::SubI,
                    (BinaryOp::Mul, true) => Helper::MulI,
                    _ => Helper::DivI,
                };
                self.helpers.insert(h);
                let a = strip_parens(self.render(l, Some(ty)));
                let b = strip_parens(self.render(r, Some(ty)));
                format!("{}({a}, {b})", h.name())
            }
            Expr::Binary(op, l, r) => {
                let is_string = type_of(l, self.scope).ok() == Some(ValueType::String);
                let ty = self.int_hint(l).or_else(|| self.int_hint(r));
                let a = self.render(l, ty);
                let b = self.render(r, ty);
                if is_string {
                    let cmp = format!("keccak256(abi.encodePacked({})) == keccak256(abi.encodePacked({}))", strip_parens(a), strip_parens(b));
                    if *op == BinaryOp::Ne {
                        format!("!({cmp})")
                    } else {
                        format!("({cmp})")
                    }
                } else {
                    format!("({a} {} {b})", op.symbol())
                }
            }
        }
    }
}

fn strip_parens(s: String) -> String {
    if s.starts_with('(') && s.ends_with(')') {
        // only strip when the outer pair matches
        let mut depth = 0;
        for (i, c) in s.char_indices() {
            match c {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 && i != s.len() - 1 {
                        return s;
                    }
                }
                _ => {}
            }
        }
        return s[1..s.len() - 1].to_string();
    }
    s
}
