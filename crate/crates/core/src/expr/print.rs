use std::fmt;

use super::{Expr, VarTable};

/// Formats a constant. With `digits == None` the shortest decimal that
/// parses back to the same `f64` is used; otherwise the value is first
/// rounded to `digits` significant digits.
pub fn format_constant(value: f64, digits: Option<usize>) -> String {
    let v = match digits {
        Some(d) if value.is_finite() => {
            let d = d.max(1);
            format!("{:.*e}", d - 1, value)
                .parse::<f64>()
                .unwrap_or(value)
        }
        _ => value,
    };
    let mag = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&mag) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub(super) fn write_expr(
    f: &mut fmt::Formatter<'_>,
    e: &Expr,
    vars: &VarTable,
    digits: Option<usize>,
) -> fmt::Result {
    match e {
        Expr::Const(c) => f.write_str(&format_constant(*c, digits)),
        Expr::Var(i) => f.write_str(vars.name(*i)),
        Expr::Unary(op, a) => {
            write!(f, "{}(", op.name())?;
            write_expr(f, a, vars, digits)?;
            f.write_str(")")
        }
        Expr::Binary(op, a, b) => {
            let prec = op.precedence();
            // Float arithmetic is not associative, so an equal-precedence
            // right operand keeps its parentheses.
            let left_paren = matches!(a.as_ref(), Expr::Binary(o, ..) if o.precedence() < prec);
            let right_paren = matches!(b.as_ref(), Expr::Binary(o, ..) if o.precedence() <= prec);
            write_operand(f, a, vars, digits, left_paren)?;
            write!(f, " {} ", op.symbol())?;
            write_operand(f, b, vars, digits, right_paren)
        }
    }
}

fn write_operand(
    f: &mut fmt::Formatter<'_>,
    e: &Expr,
    vars: &VarTable,
    digits: Option<usize>,
    paren: bool,
) -> fmt::Result {
    if paren {
        f.write_str("(")?;
        write_expr(f, e, vars, digits)?;
        f.write_str(")")
    } else {
        write_expr(f, e, vars, digits)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse, BinaryOp, Expr, VarTable};
    use super::format_constant;

    #[test]
    fn constant_formatting() {
        assert_eq!(format_constant(1.86, None), "1.86");
        assert_eq!(format_constant(6.0, None), "6");
        assert_eq!(format_constant(-0.0, None), "-0");
        assert_eq!(format_constant(1e-7, None), "1e-7");
        assert_eq!(format_constant(2.5e20, None), "2.5e20");
        assert_eq!(format_constant(0.1 + 0.2, None), "0.30000000000000004");
        assert_eq!(format_constant(0.1 + 0.2, Some(9)), "0.3");
        assert_eq!(format_constant(std::f64::consts::PI, Some(9)), "3.14159265");
    }

    #[test]
    fn nested_division_keeps_parentheses() {
        let v = VarTable::numbered(3);
        let e = Expr::binary(
            BinaryOp::Div,
            Expr::Var(0),
            Expr::binary(BinaryOp::Div, Expr::Var(1), Expr::Var(2)),
        );
        assert_eq!(e.display(&v).to_string(), "x0 / (x1 / x2)");
        let e = Expr::binary(
            BinaryOp::Div,
            Expr::binary(BinaryOp::Div, Expr::Var(0), Expr::Var(1)),
            Expr::Var(2),
        );
        assert_eq!(e.display(&v).to_string(), "x0 / x1 / x2");
        let e = Expr::binary(
            BinaryOp::Mul,
            Expr::binary(BinaryOp::Add, Expr::Var(0), Expr::Var(1)),
            Expr::Var(2),
        );
        assert_eq!(e.display(&v).to_string(), "(x0 + x1) * x2");
    }

    #[test]
    fn printed_text_reparses_to_same_tree() {
        let v = VarTable::numbered(2);
        for src in [
            "x0 - -1.5",
            "-1 * x0 * x1",
            "exp(-0.25) / (x0 - (x1 - 3))",
            "cube(x0 + 1e-9) - square(x1 / 7)",
        ] {
            let e = parse(src, &v).unwrap();
            let printed = e.display(&v).to_string();
            assert_eq!(parse(&printed, &v).unwrap(), e, "{src} -> {printed}");
        }
    }
}
