//! Expression trees over named variables.
//!
//! An [`Expr`] is an immutable tree of constants, variables (by column index
//! into a [`VarTable`]), unary applications of `square`/`cube`/`exp` and
//! binary `+ - * /`. Evaluation is unprotected: division by zero or `exp`
//! overflow produce non-finite values that propagate to the root.

mod parse;
mod print;
mod vars;

pub use parse::{parse, ParseError};
pub use print::format_constant;
pub use vars::{VarTable, VarTableError};

use std::fmt;

/// Complexity weight of an operator or variable node.
pub const NODE_COMPLEXITY: usize = 1;
/// Complexity weight of a constant node.
pub const CONSTANT_COMPLEXITY: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnaryOp {
    Square,
    Cube,
    Exp,
}

impl UnaryOp {
    pub const ALL: [UnaryOp; 3] = [UnaryOp::Square, UnaryOp::Cube, UnaryOp::Exp];

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Square => "square",
            UnaryOp::Cube => "cube",
            UnaryOp::Exp => "exp",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "square" => Some(UnaryOp::Square),
            "cube" => Some(UnaryOp::Cube),
            "exp" => Some(UnaryOp::Exp),
            _ => None,
        }
    }

    /// A non-finite argument is returned as is, so `exp(-inf)` stays `-inf`.
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        if !x.is_finite() {
            return x;
        }
        match self {
            UnaryOp::Square => x * x,
            UnaryOp::Cube => x * x * x,
            UnaryOp::Exp => x.exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 4] = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div];

    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '+' => Some(BinaryOp::Add),
            '-' => Some(BinaryOp::Sub),
            '*' => Some(BinaryOp::Mul),
            '/' => Some(BinaryOp::Div),
            _ => None,
        }
    }

    /// Binding strength; higher binds tighter.
    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 1,
            BinaryOp::Mul | BinaryOp::Div => 2,
        }
    }

    /// A non-finite operand (the left one first) is returned as is, so
    /// `1 / inf` stays `inf` rather than becoming 0.
    #[inline]
    pub fn apply(self, a: f64, b: f64) -> f64 {
        if !a.is_finite() {
            return a;
        }
        if !b.is_finite() {
            return b;
        }
        match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => a / b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Column index into the [`VarTable`] the expression was built against.
    Var(usize),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn constant(value: f64) -> Self {
        Expr::Const(value)
    }

    pub fn var(index: usize) -> Self {
        Expr::Var(index)
    }

    pub fn unary(op: UnaryOp, child: Expr) -> Self {
        Expr::Unary(op, Box::new(child))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Evaluates the expression on one row. `row` must cover every variable index.
    pub fn eval(&self, row: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => row[*i],
            Expr::Unary(op, a) => op.apply(a.eval(row)),
            Expr::Binary(op, a, b) => op.apply(a.eval(row), b.eval(row)),
        }
    }

    /// Column-wise evaluation over `n_rows` rows. Produces the same bits as
    /// calling [`Expr::eval`] on each row.
    pub fn eval_columns(&self, columns: &[&[f64]], n_rows: usize) -> Vec<f64> {
        match self {
            Expr::Const(c) => vec![*c; n_rows],
            Expr::Var(i) => columns[*i][..n_rows].to_vec(),
            Expr::Unary(op, a) => {
                let mut v = a.eval_columns(columns, n_rows);
                for x in v.iter_mut() {
                    *x = op.apply(*x);
                }
                v
            }
            Expr::Binary(op, a, b) => {
                let mut lhs = a.eval_columns(columns, n_rows);
                match b.as_ref() {
                    Expr::Const(c) => {
                        for x in lhs.iter_mut() {
                            *x = op.apply(*x, *c);
                        }
                    }
                    Expr::Var(j) => {
                        for (x, y) in lhs.iter_mut().zip(columns[*j]) {
                            *x = op.apply(*x, *y);
                        }
                    }
                    _ => {
                        let rhs = b.eval_columns(columns, n_rows);
                        for (x, y) in lhs.iter_mut().zip(&rhs) {
                            *x = op.apply(*x, *y);
                        }
                    }
                }
                lhs
            }
        }
    }

    /// Complexity with the default weights (operators and variables 1, constants 2).
    pub fn complexity(&self) -> usize {
        self.weighted_complexity(CONSTANT_COMPLEXITY)
    }

    pub fn weighted_complexity(&self, constant_weight: usize) -> usize {
        match self {
            Expr::Const(_) => constant_weight,
            Expr::Var(_) => NODE_COMPLEXITY,
            Expr::Unary(_, a) => NODE_COMPLEXITY + a.weighted_complexity(constant_weight),
            Expr::Binary(_, a, b) => {
                NODE_COMPLEXITY
                    + a.weighted_complexity(constant_weight)
                    + b.weighted_complexity(constant_weight)
            }
        }
    }

    /// Depth of the tree; a leaf has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) => 1 + a.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) => 1 + a.node_count(),
            Expr::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Unary(_, a) => a.max_var(),
            Expr::Binary(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    pub fn has_vars(&self) -> bool {
        self.max_var().is_some()
    }

    /// Sorted, deduplicated variable indices.
    pub fn var_indices(&self) -> Vec<usize> {
        fn walk(e: &Expr, out: &mut Vec<usize>) {
            match e {
                Expr::Const(_) => {}
                Expr::Var(i) => out.push(*i),
                Expr::Unary(_, a) => walk(a, out),
                Expr::Binary(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Constants in pre-order.
    pub fn constants(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit_constants(&mut |c| out.push(c));
        out
    }

    fn visit_constants(&self, f: &mut impl FnMut(f64)) {
        match self {
            Expr::Const(c) => f(*c),
            Expr::Var(_) => {}
            Expr::Unary(_, a) => a.visit_constants(f),
            Expr::Binary(_, a, b) => {
                a.visit_constants(f);
                b.visit_constants(f);
            }
        }
    }

    pub fn constant_count(&self) -> usize {
        let mut n = 0;
        self.visit_constants(&mut |_| n += 1);
        n
    }

    /// Overwrites constants in pre-order. `values` must hold exactly
    /// [`Expr::constant_count`] entries.
    pub fn set_constants(&mut self, values: &[f64]) {
        fn walk(e: &mut Expr, values: &[f64], pos: &mut usize) {
            match e {
                Expr::Const(c) => {
                    *c = values[*pos];
                    *pos += 1;
                }
                Expr::Var(_) => {}
                Expr::Unary(_, a) => walk(a, values, pos),
                Expr::Binary(_, a, b) => {
                    walk(a, values, pos);
                    walk(b, values, pos);
                }
            }
        }
        let mut pos = 0;
        walk(self, values, &mut pos);
        debug_assert_eq!(pos, values.len());
    }

    pub fn with_constants(&self, values: &[f64]) -> Expr {
        let mut e = self.clone();
        e.set_constants(values);
        e
    }

    /// Node at pre-order position `index`.
    pub fn node(&self, index: usize) -> Option<&Expr> {
        fn walk<'a>(e: &'a Expr, index: &mut usize) -> Option<&'a Expr> {
            if *index == 0 {
                return Some(e);
            }
            *index -= 1;
            match e {
                Expr::Const(_) | Expr::Var(_) => None,
                Expr::Unary(_, a) => walk(a, index),
                Expr::Binary(_, a, b) => walk(a, index).or_else(|| walk(b, index)),
            }
        }
        let mut i = index;
        walk(self, &mut i)
    }

    /// Mutable node at pre-order position `index`.
    pub fn node_mut(&mut self, index: usize) -> Option<&mut Expr> {
        fn walk<'a>(e: &'a mut Expr, index: &mut usize) -> Option<&'a mut Expr> {
            if *index == 0 {
                return Some(e);
            }
            *index -= 1;
            match e {
                Expr::Const(_) | Expr::Var(_) => None,
                Expr::Unary(_, a) => walk(a, index),
                Expr::Binary(_, a, b) => {
                    let left = a.node_count();
                    if *index < left {
                        walk(a, index)
                    } else {
                        *index -= left;
                        walk(b, index)
                    }
                }
            }
        }
        let mut i = index;
        walk(self, &mut i)
    }

    /// Copy of `self` with the node at pre-order `index` replaced.
    pub fn replace_node(&self, index: usize, replacement: Expr) -> Expr {
        let mut out = self.clone();
        if let Some(slot) = out.node_mut(index) {
            *slot = replacement;
        }
        out
    }

    /// Replaces every variable-free subtree by a constant holding its value.
    /// Subtrees whose value is non-finite are left in place. No algebraic
    /// identities are applied.
    pub fn fold_constants(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Unary(op, a) => {
                let a = a.fold_constants();
                if let Expr::Const(c) = a {
                    let v = op.apply(c);
                    if v.is_finite() {
                        return Expr::Const(v);
                    }
                }
                Expr::unary(*op, a)
            }
            Expr::Binary(op, a, b) => {
                let a = a.fold_constants();
                let b = b.fold_constants();
                if let (Expr::Const(x), Expr::Const(y)) = (&a, &b) {
                    let v = op.apply(*x, *y);
                    if v.is_finite() {
                        return Expr::Const(v);
                    }
                }
                Expr::binary(*op, a, b)
            }
        }
    }

    /// Rewrites variable indices through `map` (old index to new index).
    pub fn remap_vars(&self, map: &impl Fn(usize) -> usize) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(i) => Expr::Var(map(*i)),
            Expr::Unary(op, a) => Expr::unary(*op, a.remap_vars(map)),
            Expr::Binary(op, a, b) => Expr::binary(*op, a.remap_vars(map), b.remap_vars(map)),
        }
    }

    /// Renders with the given variable names.
    pub fn display<'a>(&'a self, vars: &'a VarTable) -> DisplayExpr<'a> {
        DisplayExpr {
            expr: self,
            vars,
            digits: None,
        }
    }

    /// Renders with constants rounded to `digits` significant digits. Not
    /// guaranteed to round-trip bit-exactly.
    pub fn display_rounded<'a>(&'a self, vars: &'a VarTable, digits: usize) -> DisplayExpr<'a> {
        DisplayExpr {
            expr: self,
            vars,
            digits: Some(digits),
        }
    }
}

pub struct DisplayExpr<'a> {
    expr: &'a Expr,
    vars: &'a VarTable,
    digits: Option<usize>,
}

impl fmt::Display for DisplayExpr<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_expr(f, self.expr, self.vars, self.digits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(names: &[&str]) -> VarTable {
        VarTable::new(names.iter().copied()).unwrap()
    }

    #[test]
    fn identity_eval() {
        let v = vars(&["x0"]);
        let e = parse("x0", &v).unwrap();
        assert_eq!(e.eval(&[0.7]), 0.7);
    }

    #[test]
    fn division_by_zero_is_non_finite() {
        let v = vars(&["x0", "x1"]);
        let e = parse("x0 / x1", &v).unwrap();
        assert!(!e.eval(&[1.0, 0.0]).is_finite());
    }

    #[test]
    fn non_finite_propagates_to_root() {
        let v = vars(&["x0"]);
        let e = parse("square(1/x0) * 0 + 3", &v).unwrap();
        assert!(!e.eval(&[0.0]).is_finite());
        let e = parse("2 / exp(-1 / x0)", &v).unwrap();
        assert!(!e.eval(&[0.0]).is_finite());
        let e = parse("exp(exp(x0)) - 1", &v).unwrap();
        assert!(!e.eval(&[10.0]).is_finite());
    }

    #[test]
    fn complexity_weights() {
        let v = vars(&["x0"]);
        assert_eq!(parse("x0", &v).unwrap().complexity(), 1);
        assert_eq!(Expr::Const(2.5).complexity(), 2);
        assert_eq!(parse("x0 + 1.0", &v).unwrap().complexity(), 4);
        assert_eq!(parse("square(x0) * 2", &v).unwrap().complexity(), 5);
    }

    #[test]
    fn batch_matches_rows() {
        let col: Vec<f64> = vec![1.0, 2.0, 3.0];
        let v = vars(&["x0"]);
        let e = parse("square(x0)", &v).unwrap();
        assert_eq!(e.eval_columns(&[&col], 3), vec![1.0, 4.0, 9.0]);
        assert_eq!(Expr::Const(2.0).eval_columns(&[&col], 3), vec![2.0; 3]);
    }

    #[test]
    fn fold_examples() {
        let v = vars(&["x0", "x1"]);
        let e = parse("2*3 + x0", &v).unwrap().fold_constants();
        assert_eq!(e.display(&v).to_string(), "6 + x0");
        let e = parse("x0*1.0", &v).unwrap().fold_constants();
        assert_eq!(
            e,
            Expr::binary(BinaryOp::Mul, Expr::Var(0), Expr::Const(1.0))
        );
        let e = parse("exp(0) * x1", &v).unwrap().fold_constants();
        assert_eq!(e.display(&v).to_string(), "1 * x1");
    }

    #[test]
    fn fold_keeps_non_finite_subtrees() {
        let v = vars(&["x0"]);
        let e = parse("1/0 + x0", &v).unwrap();
        assert_eq!(e.fold_constants(), e);
    }

    #[test]
    fn node_addressing_is_preorder() {
        let v = vars(&["x0", "x1", "x2"]);
        let e = parse("x0 + x1 * x2", &v).unwrap();
        assert_eq!(e.node_count(), 5);
        assert_eq!(e.node(1), Some(&Expr::Var(0)));
        assert_eq!(e.node(3), Some(&Expr::Var(1)));
        assert_eq!(e.node(4), Some(&Expr::Var(2)));
        assert_eq!(e.node(5), None);
        let r = e.replace_node(3, Expr::Const(2.0));
        assert_eq!(r.display(&v).to_string(), "x0 + 2 * x2");
    }

    #[test]
    fn constants_round_trip_through_setter() {
        let v = vars(&["x0"]);
        let e = parse("1.5 * x0 + exp(2 - x0)", &v).unwrap();
        assert_eq!(e.constants(), vec![1.5, 2.0]);
        let e2 = e.with_constants(&[3.0, 4.0]);
        assert_eq!(e2.constants(), vec![3.0, 4.0]);
    }
}
