use super::ast::Expr;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    col: usize,
}

fn err(position: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        position,
        message: message.into(),
        partial: None,
    }
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let simple = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Token { tok, col });
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent only when digits follow
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit: String = chars[start..i].iter().collect();
            let v: f64 = lit
                .parse()
                .map_err(|_| err(col, format!("malformed number '{lit}'")))?;
            out.push(Token { tok: Tok::Num(v), col });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                col,
            });
            continue;
        }
        return Err(err(col, format!("unexpected character '{c}'")));
    }
    out.push(Token {
        tok: Tok::End,
        col: chars.len() + 1,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Number of chart coordinates available (n - 1).
    vars: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::add(lhs, self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::mul(lhs, self.unary()?);
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::div(lhs, self.unary()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek().tok == Tok::Minus {
            self.bump();
            return Ok(Expr::neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.peek().tok == Tok::Caret {
            self.bump();
            let col = self.peek().col;
            let exponent = self.unary()?;
            let c = constant_exponent(&exponent, col)?;
            return Ok(Expr::pow(base, c));
        }
        Ok(base)
    }

    fn close_paren(&mut self, open_col: usize) -> Result<()> {
        let t = self.bump();
        match t.tok {
            Tok::RParen => Ok(()),
            Tok::End => Err(err(
                t.col,
                format!("unclosed parenthesis opened at column {open_col}"),
            )),
            other => Err(err(t.col, format!("expected ')', found {}", describe(&other)))),
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        let t = self.bump();
        match t.tok {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.close_paren(t.col)?;
                Ok(e)
            }
            Tok::Ident(name) => self.ident(name, t.col),
            Tok::End => Err(err(t.col, "unexpected end of input")),
            other => Err(err(t.col, format!("unexpected {}", describe(&other)))),
        }
    }

    fn ident(&mut self, name: String, col: usize) -> Result<Expr> {
        match name.as_str() {
            "exp" | "ln" | "sqrt" | "pow" => {
                let open = self.bump();
                if open.tok != Tok::LParen {
                    return Err(err(open.col, format!("expected '(' after {name}")));
                }
                let arg = self.expr()?;
                if name == "pow" {
                    let comma = self.bump();
                    if comma.tok != Tok::Comma {
                        if comma.tok == Tok::End {
                            return Err(err(
                                comma.col,
                                format!("unclosed parenthesis opened at column {}", open.col),
                            ));
                        }
                        return Err(err(comma.col, "expected ',' in pow(base, exponent)"));
                    }
                    let col = self.peek().col;
                    let exponent = self.expr()?;
                    let c = constant_exponent(&exponent, col)?;
                    self.close_paren(open.col)?;
                    return Ok(Expr::pow(arg, c));
                }
                self.close_paren(open.col)?;
                Ok(match name.as_str() {
                    "exp" => Expr::exp(arg),
                    "ln" => Expr::ln(arg),
                    _ => Expr::sqrt(arg),
                })
            }
            _ => {
                let idx = name
                    .strip_prefix('t')
                    .and_then(|d| d.parse::<usize>().ok())
                    .filter(|&i| (1..=9).contains(&i) && name.len() == 2);
                match idx {
                    Some(i) if i <= self.vars => Ok(Expr::var(i - 1)),
                    Some(i) => Err(err(
                        col,
                        format!(
                            "variable t{i} out of range: only t1..t{} exist for n = {}",
                            self.vars,
                            self.vars + 1
                        ),
                    )),
                    None => Err(err(col, format!("unknown identifier '{name}'"))),
                }
            }
        }
    }
}

fn constant_exponent(e: &Expr, col: usize) -> Result<f64> {
    e.fold_constant()
        .ok_or_else(|| err(col, "exponent must be a constant"))
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("identifier '{s}'"),
        Tok::Plus => "'+'".into(),
        Tok::Minus => "'-'".into(),
        Tok::Star => "'*'".into(),
        Tok::Slash => "'/'".into(),
        Tok::Caret => "'^'".into(),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Comma => "','".into(),
        Tok::End => "end of input".into(),
    }
}

/// Parses `text` as a partial loss over the chart coordinates of an
/// `n`-outcome simplex (variables `t1..t{n-1}`).
pub fn parse(text: &str, n: usize) -> Result<Expr> {
    if n < 2 {
        return Err(err(1, format!("need at least 2 outcomes, got n = {n}")));
    }
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        vars: n - 1,
    };
    let e = p.expr()?;
    let t = p.peek().clone();
    if t.tok != Tok::End {
        let msg = if t.tok == Tok::RParen {
            "unmatched ')'".to_string()
        } else {
            format!("unexpected {}", describe(&t.tok))
        };
        return Err(err(t.col, msg));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pos(r: Result<Expr>) -> (usize, String) {
        match r {
            Err(Error::Parse { position, message, .. }) => (position, message),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parses_examples() {
        assert_eq!(
            parse("-ln(t1)", 2).unwrap(),
            Expr::neg(Expr::ln(Expr::var(0)))
        );
        assert_eq!(
            parse("2*(1-t1)^2", 2).unwrap(),
            Expr::mul(
                Expr::Const(2.0),
                Expr::pow(Expr::sub(Expr::Const(1.0), Expr::var(0)), 2.0)
            )
        );
    }

    #[test]
    fn unclosed_paren_column() {
        let (col, msg) = pos(parse("ln(t2", 3));
        assert_eq!(col, 6);
        assert!(msg.contains("unclosed parenthesis"), "{msg}");
    }

    #[test]
    fn rejects_unknown_identifiers() {
        assert_eq!(pos(parse("foo(t1)", 2)).0, 1);
        assert_eq!(pos(parse("1 + x", 2)).0, 5);
        // t2 does not exist for binary losses
        assert_eq!(pos(parse("ln(t2)", 2)).0, 4);
        assert_eq!(pos(parse("t10", 9)).0, 1);
    }

    #[test]
    fn other_errors() {
        assert_eq!(pos(parse("t1 +", 2)).0, 5);
        assert_eq!(pos(parse("t1)", 2)).0, 3);
        assert_eq!(pos(parse("t1^t1", 2)).0, 4);
        assert_eq!(pos(parse("2 $ 3", 2)).0, 3);
    }

    #[test]
    fn precedence() {
        // -t1^2 is -(t1^2); 2^3^2 is 2^(3^2)
        let e = parse("-t1^2", 2).unwrap();
        assert_eq!(e.eval_value(&[0.5]).unwrap(), -0.25);
        let e = parse("2^3^2", 2).unwrap();
        assert_eq!(e.eval_value(&[0.5]).unwrap(), 512.0);
        let e = parse("1-2*3+4/2", 2).unwrap();
        assert_eq!(e.eval_value(&[0.5]).unwrap(), -3.0);
        let e = parse("pow(t1, -0.5) + t1^-1", 2).unwrap();
        assert!((e.eval_value(&[0.25]).unwrap() - 6.0).abs() < 1e-15);
        let e = parse("1.5e-1 * 2E1", 2).unwrap();
        assert!((e.eval_value(&[0.5]).unwrap() - 3.0).abs() < 1e-15);
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-5.0f64..5.0).prop_map(Expr::Const),
            (0usize..2).prop_map(Expr::Var),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Expr::neg),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::div(a, b)),
                (inner.clone(), -3.0f64..3.0).prop_map(|(a, c)| Expr::pow(a, c)),
                inner.clone().prop_map(Expr::exp),
                inner.clone().prop_map(Expr::ln),
                inner.prop_map(Expr::sqrt),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_print_is_fixed_point(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = parse(&printed, 3).unwrap();
            prop_assert_eq!(reparsed.to_string(), printed);
        }

        #[test]
        fn parse_is_total(s in "[t0-9a-z+*/^().,\\- ]{0,24}") {
            match parse(&s, 3) {
                Ok(_) => {}
                Err(Error::Parse { position, .. }) => prop_assert!(position >= 1 && position <= s.chars().count() + 1),
                Err(other) => prop_assert!(false, "unexpected error kind {:?}", other),
            }
        }
    }
}
