//! Recursive-descent parser.
//!
//! Precedence, loosest first: `+ -`, `* /` (and juxtaposition such as `2y`),
//! unary `-`, `^`. Exponents must be integer literals, optionally signed and
//! parenthesized: `x^2`, `x^-1`, `(x+1)^(-2)`.

use std::collections::HashMap;

use super::{Expr, ParseError, Symbols};

/// Named sub-expressions that are inlined wherever their name appears.
pub type Defs = HashMap<String, Expr>;

pub fn parse(text: &str, symbols: &Symbols) -> Result<Expr, ParseError> {
    parse_with_defs(text, symbols, &Defs::new())
}

pub fn parse_with_defs(text: &str, symbols: &Symbols, defs: &Defs) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty("expression"));
    }
    if symbols.is_empty() && defs.is_empty() {
        return Err(ParseError::Empty("symbol set"));
    }
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        end: text.len(),
        symbols,
        defs,
    };
    let e = p.expr()?;
    match p.peek() {
        None => Ok(e),
        Some(tok) => Err(ParseError::SyntaxError {
            position: tok.at,
            expected: vec!["operator".into(), "end of input".into()],
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Int(i64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    at: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let at = i;
        if c.is_ascii_whitespace() {
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
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Token { tok, at });
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let mut j = i;
            let mut integral = true;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            if j < bytes.len() && bytes[j] == b'.' {
                integral = false;
                j += 1;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
            }
            // Exponent only when followed by digits, so `2e` stays `2*e`.
            if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                let mut k = j + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    integral = false;
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    j = k;
                }
            }
            let s = &text[i..j];
            let tok = if integral {
                s.parse::<i64>().map(Tok::Int).ok()
            } else {
                None
            };
            let tok = match tok {
                Some(t) => t,
                None => Tok::Num(s.parse::<f64>().map_err(|_| ParseError::SyntaxError {
                    position: at,
                    expected: vec!["number".into()],
                })?),
            };
            out.push(Token { tok, at });
            i = j;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                j += 1;
            }
            out.push(Token {
                tok: Tok::Ident(text[i..j].to_string()),
                at,
            });
            i = j;
        } else {
            return Err(ParseError::SyntaxError {
                position: at,
                expected: vec!["number".into(), "symbol".into(), "operator".into()],
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
    symbols: &'a Symbols,
    defs: &'a Defs,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.end, |t| t.at)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek().map(|t| &t.tok) == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn fail(&self, expected: &[&str]) -> ParseError {
        ParseError::SyntaxError {
            position: self.here(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&Tok::Plus) {
                let rhs = self.term()?;
                lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
            } else if self.eat(&Tok::Minus) {
                let rhs = self.term()?;
                lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(&Tok::Star) {
                let rhs = self.unary()?;
                lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
            } else if self.eat(&Tok::Slash) {
                let rhs = self.unary()?;
                lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
            } else if matches!(
                self.peek().map(|t| &t.tok),
                Some(Tok::Ident(_)) | Some(Tok::LParen)
            ) {
                // juxtaposition: `2y`, `x(1-x)`
                let rhs = self.unary()?;
                lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(&Tok::Minus) {
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let mut base = self.primary()?;
        while self.eat(&Tok::Caret) {
            let k = self.exponent()?;
            base = Expr::Pow(Box::new(base), k);
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32, ParseError> {
        let paren = self.eat(&Tok::LParen);
        let negative = self.eat(&Tok::Minus);
        if !negative {
            self.eat(&Tok::Plus);
        }
        let at = self.here();
        let k = match self.peek().map(|t| t.tok.clone()) {
            Some(Tok::Int(k)) => {
                self.pos += 1;
                k
            }
            _ => return Err(self.fail(&["integer exponent"])),
        };
        let k = if negative { -k } else { k };
        let k = i32::try_from(k).map_err(|_| ParseError::SyntaxError {
            position: at,
            expected: vec!["exponent within i32 range".into()],
        })?;
        if paren && !self.eat(&Tok::RParen) {
            return Err(self.fail(&["`)`"]));
        }
        Ok(k)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(token) = self.peek().cloned() else {
            return Err(self.fail(&["number", "symbol", "`(`", "`-`"]));
        };
        match token.tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Tok::Int(v) => {
                self.pos += 1;
                Ok(Expr::Const(v as f64))
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if let Some(slot) = self.symbols.slot(&name) {
                    Ok(Expr::var(self.symbols, slot))
                } else if let Some(def) = self.defs.get(&name) {
                    Ok(def.clone())
                } else {
                    Err(ParseError::UnknownSymbol {
                        name,
                        position: token.at,
                    })
                }
            }
            Tok::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(&Tok::RParen) {
                    return Err(self.fail(&["`)`", "operator"]));
                }
                Ok(inner)
            }
            _ => Err(self.fail(&["number", "symbol", "`(`", "`-`"])),
        }
    }
}
