use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uhisr_core::expr::{parse, BinaryOp, Expr, UnaryOp, VarTable};

const N_VARS: usize = 3;

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0..N_VARS).prop_map(Expr::Var),
        (-1e3f64..1e3).prop_map(Expr::Const),
        prop_oneof![Just(1e-9), Just(-2.5e17), Just(0.1), Just(-0.0), Just(3.0)]
            .prop_map(Expr::Const),
    ];
    // depth 10 counting the leaf level
    leaf.prop_recursive(9, 64, 2, |inner| {
        prop_oneof![
            (prop::sample::select(UnaryOp::ALL.to_vec()), inner.clone())
                .prop_map(|(op, a)| Expr::unary(op, a)),
            (
                prop::sample::select(BinaryOp::ALL.to_vec()),
                inner.clone(),
                inner
            )
                .prop_map(|(op, a, b)| Expr::binary(op, a, b)),
        ]
    })
}

fn random_rows(seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..100)
        .map(|_| (0..N_VARS).map(|_| rng.random_range(-5.0..5.0)).collect())
        .collect()
}

fn same(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
}

fn un(v: f64, f: impl Fn(f64) -> f64) -> f64 {
    if v.is_finite() {
        f(v)
    } else {
        v
    }
}

fn bin(a: f64, b: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
    if !a.is_finite() {
        a
    } else if !b.is_finite() {
        b
    } else {
        f(a, b)
    }
}

/// Naive interpreter written against the public enum only.
fn naive(e: &Expr, row: &[f64]) -> f64 {
    match e {
        Expr::Const(c) => *c,
        Expr::Var(i) => row[*i],
        Expr::Unary(UnaryOp::Square, a) => un(naive(a, row), |v| v * v),
        Expr::Unary(UnaryOp::Cube, a) => un(naive(a, row), |v| v * v * v),
        Expr::Unary(UnaryOp::Exp, a) => un(naive(a, row), f64::exp),
        Expr::Binary(BinaryOp::Add, a, b) => bin(naive(a, row), naive(b, row), |x, y| x + y),
        Expr::Binary(BinaryOp::Sub, a, b) => bin(naive(a, row), naive(b, row), |x, y| x - y),
        Expr::Binary(BinaryOp::Mul, a, b) => bin(naive(a, row), naive(b, row), |x, y| x * y),
        Expr::Binary(BinaryOp::Div, a, b) => bin(naive(a, row), naive(b, row), |x, y| x / y),
    }
}

/// Shunting-yard evaluation of printed text, independent of the parser.
fn shunting_yard(text: &str, row: &[f64]) -> f64 {
    #[derive(Debug, Clone, Copy, PartialEq)]
    enum Tok {
        Num(f64),
        Op(char),
        Neg,
        Func(UnaryOp),
        LParen,
        RParen,
    }
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c == ' ' {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'.') {
                if (bytes[i] == b'e' || bytes[i] == b'E')
                    && i + 1 < bytes.len()
                    && bytes[i + 1] == b'-'
                {
                    i += 1;
                }
                i += 1;
            }
            toks.push(Tok::Num(text[start..i].parse().unwrap()));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                i += 1;
            }
            let word = &text[start..i];
            match word {
                "square" => toks.push(Tok::Func(UnaryOp::Square)),
                "cube" => toks.push(Tok::Func(UnaryOp::Cube)),
                "exp" => toks.push(Tok::Func(UnaryOp::Exp)),
                v => toks.push(Tok::Num(row[v[1..].parse::<usize>().unwrap()])),
            }
        } else if c == '(' {
            toks.push(Tok::LParen);
            i += 1;
        } else if c == ')' {
            toks.push(Tok::RParen);
            i += 1;
        } else {
            let prev_is_operand = matches!(toks.last(), Some(Tok::Num(_)) | Some(Tok::RParen));
            if c == '-' && !prev_is_operand {
                // literal negation folds into the number, like a signed literal
                if i + 1 < bytes.len() && (bytes[i + 1].is_ascii_digit() || bytes[i + 1] == b'.') {
                    let start = i;
                    i += 1;
                    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'.')
                    {
                        if (bytes[i] == b'e' || bytes[i] == b'E')
                            && i + 1 < bytes.len()
                            && bytes[i + 1] == b'-'
                        {
                            i += 1;
                        }
                        i += 1;
                    }
                    toks.push(Tok::Num(text[start..i].parse().unwrap()));
                    continue;
                }
                toks.push(Tok::Neg);
            } else {
                toks.push(Tok::Op(c));
            }
            i += 1;
        }
    }

    fn prec(t: Tok) -> u8 {
        match t {
            Tok::Op('+') | Tok::Op('-') => 1,
            Tok::Op(_) => 2,
            Tok::Neg => 3,
            _ => 0,
        }
    }
    let mut out: Vec<Tok> = Vec::new();
    let mut ops: Vec<Tok> = Vec::new();
    for t in toks {
        match t {
            Tok::Num(_) => out.push(t),
            Tok::Func(_) | Tok::LParen | Tok::Neg => ops.push(t),
            Tok::Op(_) => {
                while let Some(&top) = ops.last() {
                    if matches!(top, Tok::Op(_) | Tok::Neg) && prec(top) >= prec(t) {
                        out.push(ops.pop().unwrap());
                    } else {
                        break;
                    }
                }
                ops.push(t);
            }
            Tok::RParen => {
                while let Some(top) = ops.pop() {
                    if top == Tok::LParen {
                        break;
                    }
                    out.push(top);
                }
                if let Some(Tok::Func(_)) = ops.last() {
                    out.push(ops.pop().unwrap());
                }
            }
        }
    }
    while let Some(t) = ops.pop() {
        out.push(t);
    }
    let mut stack: Vec<f64> = Vec::new();
    for t in out {
        match t {
            Tok::Num(v) => stack.push(v),
            Tok::Neg => {
                let v = stack.pop().unwrap();
                stack.push(bin(-1.0, v, |x, y| x * y));
            }
            Tok::Func(f) => {
                let v = stack.pop().unwrap();
                stack.push(match f {
                    UnaryOp::Square => un(v, |v| v * v),
                    UnaryOp::Cube => un(v, |v| v * v * v),
                    UnaryOp::Exp => un(v, f64::exp),
                });
            }
            Tok::Op(c) => {
                let b = stack.pop().unwrap();
                let a = stack.pop().unwrap();
                stack.push(match c {
                    '+' => bin(a, b, |x, y| x + y),
                    '-' => bin(a, b, |x, y| x - y),
                    '*' => bin(a, b, |x, y| x * y),
                    _ => bin(a, b, |x, y| x / y),
                });
            }
            _ => unreachable!(),
        }
    }
    assert_eq!(stack.len(), 1);
    stack[0]
}

#[test]
fn print_parse_round_trip_and_oracles() {
    let vars = VarTable::numbered(N_VARS);
    let rows = random_rows(42);
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        ..Config::default()
    });
    runner
        .run(&arb_expr(), |e| {
            prop_assert!(e.depth() <= 10);
            let text = e.display(&vars).to_string();
            let back =
                parse(&text, &vars).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
            prop_assert_eq!(back.complexity(), e.complexity());
            let cols: Vec<Vec<f64>> = (0..N_VARS)
                .map(|j| rows.iter().map(|r| r[j]).collect())
                .collect();
            let col_refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
            let batch = e.eval_columns(&col_refs, rows.len());
            for (r, row) in rows.iter().enumerate() {
                let v = e.eval(row);
                prop_assert!(same(v, back.eval(row)), "{} at {:?}", text, row);
                prop_assert!(same(v, naive(&e, row)), "naive {} at {:?}", text, row);
                prop_assert!(same(v, batch[r]));
                let sy = shunting_yard(&text, row);
                prop_assert!(same(v, sy), "shunting-yard {}: {} vs {}", text, v, sy);
            }
            Ok(())
        })
        .unwrap();
}

#[test]
fn complexity_is_additive() {
    let mut runner = TestRunner::new(Config {
        cases: 500,
        ..Config::default()
    });
    runner
        .run(&arb_expr(), |e| {
            let own = match &e {
                Expr::Const(_) => 2,
                _ => 1,
            };
            let children: usize = match &e {
                Expr::Unary(_, a) => a.complexity(),
                Expr::Binary(_, a, b) => a.complexity() + b.complexity(),
                _ => 0,
            };
            prop_assert_eq!(e.complexity(), own + children);
            prop_assert!(e.complexity() >= 1);
            Ok(())
        })
        .unwrap();
}

#[test]
fn non_finite_propagates_to_root() {
    let vars = VarTable::numbered(2);
    let wrappers = [
        "{} + x1",
        "x1 * {}",
        "square({})",
        "exp({})",
        "{} - 1",
        "2 / ({} + x1)",
        "exp(-1 * {})",
    ];
    for inner in ["x0 / x1", "exp(x0 * 1000)", "0 / (x1 * x0)"] {
        for w in wrappers {
            let e = parse(&w.replace("{}", inner), &vars).unwrap();
            let v = e.eval(&[1.0, 0.0]);
            assert!(!v.is_finite(), "{w} with {inner} gave {v}");
        }
    }
}

#[test]
fn fold_keeps_values() {
    let vars = VarTable::numbered(N_VARS);
    let rows = random_rows(7);
    let mut runner = TestRunner::new(Config {
        cases: 300,
        ..Config::default()
    });
    runner
        .run(&arb_expr(), |e| {
            let f = e.fold_constants();
            prop_assert!(f.complexity() <= e.complexity() + 1);
            for row in &rows {
                let (a, b) = (e.eval(row), f.eval(row));
                if a.is_finite() {
                    let tol = 1e-9 * a.abs().max(1.0);
                    prop_assert!(
                        (a - b).abs() <= tol || same(a, b),
                        "{}: {} vs {}",
                        e.display(&vars),
                        a,
                        b
                    );
                }
            }
            Ok(())
        })
        .unwrap();
}
