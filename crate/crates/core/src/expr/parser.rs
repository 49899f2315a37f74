// Recursive-descent parser. Precedence, tightest first: `^` (right
// associative, exponent may carry a unary minus), unary `-`, `* /`, `+ -`.

use std::collections::BTreeSet;

use thiserror::Error;

use super::{BinOp, Expression, Func, Node};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("function `{name}` takes {expected} argument(s), got {got} (offset {offset})")]
    Arity { name: String, expected: usize, got: usize, offset: usize },
    #[error("undeclared variable `{name}` at offset {offset}")]
    UnknownVariable { name: String, offset: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next_token(&mut self) -> Result<(Tok, usize), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let tok = match c {
            b'0'..=b'9' | b'.' => {
                let mut end = self.pos;
                while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                    end += 1;
                }
                if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                    let mut k = end + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        end = k;
                    }
                }
                let text = &self.src[start..end];
                let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                })?;
                self.pos = end;
                Tok::Num(value)
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut end = self.pos;
                while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                    end += 1;
                }
                let name = self.src[start..end].to_string();
                self.pos = end;
                Tok::Ident(name)
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                self.pos += 1;
                Tok::Op(c as char)
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b',' => {
                self.pos += 1;
                Tok::Comma
            }
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax { offset: start, message: format!("unexpected character `{ch}`") });
            }
        };
        Ok((tok, start))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    offset: usize,
    declared: Option<&'a [String]>,
    seen: Vec<String>,
}

pub(super) fn parse(text: &str, declared: Option<&[String]>) -> Result<Expression, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut p = Parser { lexer: Lexer { src: text, pos: 0 }, tok: Tok::End, offset: 0, declared, seen: Vec::new() };
    p.advance()?;
    let root = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.unexpected());
    }
    match declared {
        Some(vars) => Ok(Expression::from_parts(root, vars.to_vec())),
        None => {
            // Renumber slots so the declared list is sorted.
            let sorted: Vec<String> = p.seen.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
            let order: Vec<usize> = p.seen.iter().map(|n| sorted.iter().position(|s| s == n).unwrap()).collect();
            let root = root.map_slots(&|i| Node::Var(order[i]));
            Ok(Expression::from_parts(root, sorted))
        }
    }
}

impl<'a> Parser<'a> {
    fn advance(&mut self) -> Result<(), ParseError> {
        let (tok, offset) = self.lexer.next_token()?;
        self.tok = tok;
        self.offset = offset;
        Ok(())
    }

    fn unexpected(&self) -> ParseError {
        let message = match &self.tok {
            Tok::End => "unexpected end of input".to_string(),
            t => format!("unexpected token {t:?}"),
        };
        ParseError::Syntax { offset: self.offset, message }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.tok == Tok::Op('-') {
            self.advance()?;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if self.tok == Tok::Op('^') {
            self.advance()?;
            let exponent = self.unary()?;
            return Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let offset = self.offset;
        match self.tok.clone() {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Node::Num(v))
            }
            Tok::LParen => {
                self.advance()?;
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.advance()?;
                if self.tok == Tok::LParen {
                    let func = Func::from_name(&name)
                        .ok_or_else(|| ParseError::UnknownFunction { name: name.clone(), offset })?;
                    self.advance()?;
                    let mut args = vec![self.expr()?];
                    while self.tok == Tok::Comma {
                        self.advance()?;
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen)?;
                    if args.len() != func.arity() {
                        return Err(ParseError::Arity {
                            name,
                            expected: func.arity(),
                            got: args.len(),
                            offset,
                        });
                    }
                    Ok(Node::Call(func, args))
                } else {
                    self.variable(name, offset)
                }
            }
            _ => Err(self.unexpected()),
        }
    }

    fn variable(&mut self, name: String, offset: usize) -> Result<Node, ParseError> {
        if let Some(vars) = self.declared {
            return vars
                .iter()
                .position(|v| *v == name)
                .map(Node::Var)
                .ok_or(ParseError::UnknownVariable { name, offset });
        }
        let slot = match self.seen.iter().position(|v| *v == name) {
            Some(i) => i,
            None => {
                self.seen.push(name);
                self.seen.len() - 1
            }
        };
        Ok(Node::Var(slot))
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.tok == tok {
            self.advance()
        } else {
            Err(self.unexpected())
        }
    }
}
