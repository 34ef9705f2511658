//! Pratt parser. Binding powers, loosest first: `:=` 10, `? :` 20, `or` 25,
//! `and` 30, comparisons and `in` 40, `+ - &` 50, `* / %` 60, group-by `{` 70,
//! `.` 75, predicate `[` and call `(` 80.

use super::ast::{BinOp, Expr, ExprKind, MappingAst, Span};
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

/// Deepest nesting the parser accepts before giving up.
const MAX_NESTING: usize = 500;

pub fn parse_mapping(source: &str) -> Result<MappingAst, ParseError> {
    let tokens = tokenize(source)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        depth: 0,
    };
    let root = p.expression(0)?;
    let next = p.peek();
    if next.tok != Tok::Eof {
        return Err(ParseError::new(
            next.span,
            format!("unexpected {}, expected end of expression", describe(&next.tok)),
        ));
    }
    Ok(MappingAst { root })
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Str(_) => "string".into(),
        Tok::Num(n) => format!("number `{}`", n.as_str()),
        Tok::Name(n) => format!("`{n}`"),
        Tok::Quoted(n) => format!("`{n}`"),
        Tok::Var(v) => format!("`${v}`"),
        Tok::Punct(p) => format!("`{p}`"),
        Tok::Eof => "end of input".into(),
    }
}

fn infix_power(tok: &Tok) -> u8 {
    match tok {
        Tok::Punct(p) => match *p {
            "[" | "(" => 80,
            "." => 75,
            "{" => 70,
            "*" | "/" | "%" => 60,
            "+" | "-" | "&" => 50,
            "=" | "!=" | "<" | "<=" | ">" | ">=" => 40,
            "?" => 20,
            ":=" => 10,
            _ => 0,
        },
        Tok::Name(n) => match n.as_str() {
            "in" => 40,
            "and" => 30,
            "or" => 25,
            _ => 0,
        },
        _ => 0,
    }
}

fn binop(tok: &Tok) -> Option<BinOp> {
    Some(match tok {
        Tok::Punct(p) => match *p {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Mod,
            "&" => BinOp::Concat,
            "=" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            _ => return None,
        },
        Tok::Name(n) => match n.as_str() {
            "in" => BinOp::In,
            "and" => BinOp::And,
            "or" => BinOp::Or,
            _ => return None,
        },
        _ => return None,
    })
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn at_punct(&self, p: &str) -> bool {
        matches!(&self.peek().tok, Tok::Punct(q) if *q == p)
    }

    fn expect(&mut self, p: &'static str) -> Result<Span, ParseError> {
        if self.at_punct(p) {
            Ok(self.advance().span)
        } else {
            let t = self.peek();
            Err(ParseError::new(
                t.span,
                format!("expected `{p}`, found {}", describe(&t.tok)),
            ))
        }
    }

    fn expression(&mut self, rbp: u8) -> Result<Expr, ParseError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(ParseError::new(self.peek().span, "expression nested too deeply"));
        }
        let left = stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || {
            let mut left = self.prefix()?;
            while rbp < infix_power(&self.peek().tok) {
                left = self.infix(left)?;
            }
            Ok(left)
        })?;
        self.depth -= 1;
        Ok(left)
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        let t = self.advance();
        let span = t.span;
        let kind = match t.tok {
            Tok::Str(s) => ExprKind::Str(s),
            Tok::Num(n) => ExprKind::Num(n),
            Tok::Quoted(n) => ExprKind::Name(n),
            Tok::Var(v) => ExprKind::Var(v),
            Tok::Name(n) => match n.as_str() {
                "true" => ExprKind::Bool(true),
                "false" => ExprKind::Bool(false),
                "null" => ExprKind::Null,
                "function" if self.at_punct("(") => return self.lambda(span),
                _ => ExprKind::Name(n),
            },
            Tok::Punct("-") => {
                let operand = self.expression(70)?;
                let span = span.to(operand.span);
                return Ok(Expr::new(ExprKind::Neg(Box::new(operand)), span));
            }
            Tok::Punct("*") => ExprKind::Wildcard,
            Tok::Punct("**") => ExprKind::Descendants,
            Tok::Punct("(") => {
                let mut items = Vec::new();
                while !self.at_punct(")") {
                    items.push(self.expression(0)?);
                    if !self.at_punct(";") {
                        break;
                    }
                    self.advance();
                }
                let end = self.expect(")")?;
                return Ok(Expr::new(ExprKind::Block(items), span.to(end)));
            }
            Tok::Punct("[") => {
                let mut items = Vec::new();
                if !self.at_punct("]") {
                    loop {
                        let item = self.expression(0)?;
                        let item = if self.at_punct("..") {
                            self.advance();
                            let hi = self.expression(0)?;
                            let s = item.span.to(hi.span);
                            Expr::new(ExprKind::Range(Box::new(item), Box::new(hi)), s)
                        } else {
                            item
                        };
                        items.push(item);
                        if !self.at_punct(",") {
                            break;
                        }
                        self.advance();
                    }
                }
                let end = self.expect("]")?;
                return Ok(Expr::new(ExprKind::Array(items), span.to(end)));
            }
            Tok::Punct("{") => {
                let (pairs, end) = self.pairs()?;
                return Ok(Expr::new(ExprKind::Object(pairs), span.to(end)));
            }
            other => {
                return Err(ParseError::new(
                    span,
                    format!("expected expression, found {}", describe(&other)),
                ))
            }
        };
        Ok(Expr::new(kind, span))
    }

    /// Key/value pairs after an opening `{`, through the closing `}`.
    fn pairs(&mut self) -> Result<(Vec<(Expr, Expr)>, Span), ParseError> {
        let mut pairs = Vec::new();
        if !self.at_punct("}") {
            loop {
                let key = self.expression(0)?;
                self.expect(":")?;
                let value = self.expression(0)?;
                pairs.push((key, value));
                if !self.at_punct(",") {
                    break;
                }
                self.advance();
            }
        }
        let end = self.expect("}")?;
        Ok((pairs, end))
    }

    fn lambda(&mut self, start: Span) -> Result<Expr, ParseError> {
        self.expect("(")?;
        let mut params = Vec::new();
        if !self.at_punct(")") {
            loop {
                let t = self.advance();
                match t.tok {
                    Tok::Var(v) if !v.is_empty() && v != "$" => params.push(v),
                    other => {
                        return Err(ParseError::new(
                            t.span,
                            format!("expected parameter `$name`, found {}", describe(&other)),
                        ))
                    }
                }
                if !self.at_punct(",") {
                    break;
                }
                self.advance();
            }
        }
        self.expect(")")?;
        self.expect("{")?;
        let body = self.expression(0)?;
        let end = self.expect("}")?;
        Ok(Expr::new(
            ExprKind::Lambda {
                params,
                body: Box::new(body),
            },
            start.to(end),
        ))
    }

    fn infix(&mut self, left: Expr) -> Result<Expr, ParseError> {
        let t = self.advance();
        let power = infix_power(&t.tok);
        match &t.tok {
            Tok::Punct(".") => {
                let rhs = self.expression(power)?;
                let span = left.span.to(rhs.span);
                let mut steps = match left.kind {
                    ExprKind::Path(steps) => steps,
                    _ => vec![left],
                };
                steps.push(rhs);
                Ok(Expr::new(ExprKind::Path(steps), span))
            }
            Tok::Punct("[") => {
                if self.at_punct("]") {
                    let end = self.advance().span;
                    let span = left.span.to(end);
                    return Ok(Expr::new(ExprKind::KeepArray(Box::new(left)), span));
                }
                let predicate = self.expression(0)?;
                let end = self.expect("]")?;
                let span = left.span.to(end);
                Ok(Expr::new(
                    ExprKind::Filter {
                        base: Box::new(left),
                        predicate: Box::new(predicate),
                    },
                    span,
                ))
            }
            Tok::Punct("(") => {
                let mut args = Vec::new();
                if !self.at_punct(")") {
                    loop {
                        args.push(self.expression(0)?);
                        if !self.at_punct(",") {
                            break;
                        }
                        self.advance();
                    }
                }
                let end = self.expect(")")?;
                let span = left.span.to(end);
                Ok(Expr::new(
                    ExprKind::Call {
                        callee: Box::new(left),
                        args,
                    },
                    span,
                ))
            }
            Tok::Punct("{") => {
                let (pairs, end) = self.pairs()?;
                let span = left.span.to(end);
                Ok(Expr::new(
                    ExprKind::GroupBy {
                        base: Box::new(left),
                        pairs,
                    },
                    span,
                ))
            }
            Tok::Punct("?") => {
                let then = self.expression(0)?;
                let otherwise = if self.at_punct(":") {
                    self.advance();
                    Some(Box::new(self.expression(0)?))
                } else {
                    None
                };
                let end = otherwise.as_ref().map_or(then.span, |e| e.span);
                let span = left.span.to(end);
                Ok(Expr::new(
                    ExprKind::Condition {
                        test: Box::new(left),
                        then: Box::new(then),
                        otherwise,
                    },
                    span,
                ))
            }
            Tok::Punct(":=") => {
                let name = match &left.kind {
                    ExprKind::Var(v) if !v.is_empty() && v != "$" => v.clone(),
                    _ => {
                        return Err(ParseError::new(
                            left.span,
                            "left side of `:=` must be a variable `$name`",
                        ))
                    }
                };
                let value = self.expression(power - 1)?;
                let span = left.span.to(value.span);
                Ok(Expr::new(
                    ExprKind::Bind {
                        name,
                        value: Box::new(value),
                    },
                    span,
                ))
            }
            tok => {
                let op = binop(tok).expect("infix power implies a binary operator");
                let rhs = self.expression(power)?;
                let span = left.span.to(rhs.span);
                Ok(Expr::new(
                    ExprKind::Binary {
                        op,
                        lhs: Box::new(left),
                        rhs: Box::new(rhs),
                    },
                    span,
                ))
            }
        }
    }
}
