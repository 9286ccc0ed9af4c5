//! Recursive-descent parser for the infix expression grammar:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | primary
//! primary := number | name | func '(' expr ')' | '(' expr ')'
//! func    := 'square' | 'cube' | 'exp'
//! ```
//!
//! Unary minus binds tighter than `*` and `/`. Applied to a numeric literal
//! it produces a negative constant; applied to anything else it produces
//! `-1 * operand`.

use thiserror::Error;

use super::{BinaryOp, Expr, UnaryOp, VarTable};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("unknown function `{name}` at position {pos}")]
    UnknownFunction { name: String, pos: usize },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::UnknownIdentifier { pos, .. }
            | ParseError::UnknownFunction { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Token, usize)>, ParseError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        while let Some(tok) = lx.next_token()? {
            out.push(tok);
        }
        Ok(out)
    }

    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn next_token(&mut self) -> Result<Option<(Token, usize)>, ParseError> {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Ok(None);
        };
        let tok = match c {
            b'(' => {
                self.pos += 1;
                Token::LParen
            }
            b')' => {
                self.pos += 1;
                Token::RParen
            }
            b'+' | b'-' | b'*' | b'/' => {
                self.pos += 1;
                Token::Op(c as char)
            }
            b'0'..=b'9' | b'.' => Token::Number(self.number(start)?),
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.pos += 1;
                }
                Token::Ident(self.src[start..self.pos].to_string())
            }
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    pos: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        Ok(Some((tok, start)))
    }

    fn number(&mut self, start: usize) -> Result<f64, ParseError> {
        let digits = |lx: &mut Self| {
            let s = lx.pos;
            while matches!(lx.peek(), Some(b'0'..=b'9')) {
                lx.pos += 1;
            }
            lx.pos - s
        };
        let mut n = digits(self);
        if self.peek() == Some(b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return Err(ParseError::Syntax {
                pos: start,
                message: "malformed number".into(),
            });
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        self.src[start..self.pos]
            .parse::<f64>()
            .map_err(|_| ParseError::Syntax {
                pos: start,
                message: "malformed number".into(),
            })
    }
}

struct Parser<'v> {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end: usize,
    vars: &'v VarTable,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|(_, p)| *p)
            .unwrap_or(self.end)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            pos: self.here(),
            message: message.into(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(c @ ('+' | '-'))) = self.peek() {
            let op = BinaryOp::from_symbol(*c).expect("additive operator");
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(c @ ('*' | '/'))) = self.peek() {
            let op = BinaryOp::from_symbol(*c).expect("multiplicative operator");
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(Token::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(match self.unary()? {
                Expr::Const(c) => Expr::Const(-c),
                e => Expr::binary(BinaryOp::Mul, Expr::Const(-1.0), e),
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let at = self.here();
        let Some((tok, _)) = self.tokens.get(self.pos).cloned() else {
            return Err(self.error("unexpected end of input"));
        };
        self.pos += 1;
        match tok {
            Token::Number(v) => Ok(Expr::Const(v)),
            Token::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Token::Ident(name) => {
                if let Some(Token::LParen) = self.peek() {
                    let Some(op) = UnaryOp::from_name(&name) else {
                        return Err(ParseError::UnknownFunction { name, pos: at });
                    };
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::unary(op, arg));
                }
                match self.vars.get(&name) {
                    Some(i) => Ok(Expr::Var(i)),
                    None => Err(ParseError::UnknownIdentifier { name, pos: at }),
                }
            }
            Token::Op(c) => Err(ParseError::Syntax {
                pos: at,
                message: format!("unexpected operator `{c}`"),
            }),
            Token::RParen => Err(ParseError::Syntax {
                pos: at,
                message: "unexpected `)`".into(),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Token::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error("expected `)`")),
        }
    }
}

/// Parses infix text against `vars`.
pub fn parse(text: &str, vars: &VarTable) -> Result<Expr, ParseError> {
    let tokens = Lexer::tokens(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        end: text.len(),
        vars,
    };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vt(names: &[&str]) -> VarTable {
        VarTable::new(names.iter().copied()).unwrap()
    }

    #[test]
    fn logistic_at_zero() {
        let v = vt(&["x0"]);
        let e = parse("1/(1+exp(-x0))", &v).unwrap();
        assert_eq!(e.eval(&[0.0]), 0.5);
    }

    #[test]
    fn gamma1_at_zero_counts() {
        let v = vt(&["CtAmide", "CtCO2H"]);
        let e = parse("-3.09*CtAmide - 3.91*CtCO2H + 1.87", &v).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]), 1.87);
    }

    #[test]
    fn solvent_equation_at_pure_hexane() {
        let v = vt(&["Hex", "EA", "DCM", "MeOH", "Et2O"]);
        let e = parse(
            "-Hex + 1.59*EA - 0.411*DCM + 11.1*MeOH + square(Et2O) + 0.142",
            &v,
        )
        .unwrap();
        let got = e.eval(&[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((got - (-0.858)).abs() < 1e-12, "{got}");
    }

    #[test]
    fn malformed_input_is_a_syntax_error() {
        let v = vt(&["x0", "x1"]);
        let err = parse("x0 + * x1", &v).unwrap_err();
        assert_eq!(
            err,
            ParseError::Syntax {
                pos: 5,
                message: "unexpected operator `*`".into()
            }
        );
        assert!(matches!(
            parse("(x0 + x1", &v),
            Err(ParseError::Syntax { pos: 8, .. })
        ));
        assert!(matches!(
            parse("x0 x1", &v),
            Err(ParseError::Syntax { pos: 3, .. })
        ));
        assert!(matches!(
            parse("", &v),
            Err(ParseError::Syntax { pos: 0, .. })
        ));
        assert!(matches!(
            parse("x0 $ 1", &v),
            Err(ParseError::Syntax { pos: 3, .. })
        ));
    }

    #[test]
    fn unknown_names() {
        let v = vt(&["x0"]);
        assert_eq!(
            parse("x0 + y", &v).unwrap_err(),
            ParseError::UnknownIdentifier {
                name: "y".into(),
                pos: 5
            }
        );
        assert!(matches!(
            parse("sin(x0)", &v),
            Err(ParseError::UnknownFunction { .. })
        ));
    }

    #[test]
    fn precedence_and_associativity() {
        let v = vt(&["a", "b", "c"]);
        let row = [7.0, 3.0, 2.0];
        assert_eq!(parse("a - b - c", &v).unwrap().eval(&row), 2.0);
        assert_eq!(parse("a / b / c", &v).unwrap().eval(&row), 7.0 / 3.0 / 2.0);
        assert_eq!(parse("a + b * c", &v).unwrap().eval(&row), 13.0);
        assert_eq!(parse("-a * b", &v).unwrap().eval(&row), -21.0);
        assert_eq!(parse("a - -c", &v).unwrap().eval(&row), 9.0);
    }

    #[test]
    fn literals() {
        let v = VarTable::default();
        for (src, val) in [
            ("1.", 1.0),
            (".5", 0.5),
            ("2.5e3", 2500.0),
            ("1E-2", 0.01),
            ("-0.25", -0.25),
        ] {
            assert_eq!(parse(src, &v).unwrap(), Expr::Const(val), "{src}");
        }
        assert!(parse(".", &v).is_err());
    }

    #[test]
    fn unary_minus_on_literal_folds_into_constant() {
        let v = vt(&["x"]);
        assert_eq!(
            parse("-2*x", &v).unwrap(),
            Expr::binary(BinaryOp::Mul, Expr::Const(-2.0), Expr::Var(0))
        );
        assert_eq!(
            parse("-x", &v).unwrap(),
            Expr::binary(BinaryOp::Mul, Expr::Const(-1.0), Expr::Var(0))
        );
    }
}
