//! Recursive-descent / precedence-climbing parser for the supported R subset.
//!
//! Binding strength follows R's own operator table: `::` binds tightest, then
//! the postfix forms (`$`, `[[`, `[`, calls), `^` (right associative), unary
//! minus, `:`, `%op%` and `|>`, `*` `/`, `+` `-`, comparisons, `!`, `&`, `|`,
//! `~`, `->`, `<-` and finally `=`.

use super::lexer::{Comment, Lexer, Tok, Token};
use super::source::{Pos, SourceText, Span};
use super::{AssignOp, IndexOp, NamespaceOp, ParseError};

/// Concrete syntax tree as produced by [`parse`], before desugaring.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntaxTree {
    pub exprs: Vec<Expr>,
    pub comments: Vec<Comment>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Num {
        text: String,
        value: f64,
        integer: bool,
    },
    Str {
        text: String,
        value: String,
    },
    Bool(bool),
    Null,
    Ident(String),
    Call {
        callee: Box<Expr>,
        args: Vec<Arg>,
    },
    Index {
        op: IndexOp,
        base: Box<Expr>,
        args: Vec<Arg>,
    },
    Field {
        base: Box<Expr>,
        name: String,
        name_span: Span,
    },
    Namespace {
        op: NamespaceOp,
        pkg: String,
        pkg_span: Span,
        name: String,
        name_span: Span,
    },
    Unary {
        op: String,
        operand: Box<Expr>,
    },
    Binary {
        op: String,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Assign {
        op: AssignOp,
        target: Box<Expr>,
        value: Box<Expr>,
    },
    /// `value -> target` and `value ->> target`.
    RightAssign {
        superassign: bool,
        value: Box<Expr>,
        target: Box<Expr>,
    },
    Pipe {
        op: String,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Function {
        params: Vec<Param>,
        body: Box<Expr>,
    },
    If {
        cond: Box<Expr>,
        then: Box<Expr>,
        otherwise: Option<Box<Expr>>,
    },
    For {
        var: String,
        var_span: Span,
        seq: Box<Expr>,
        body: Box<Expr>,
    },
    While {
        cond: Box<Expr>,
        body: Box<Expr>,
    },
    Repeat {
        body: Box<Expr>,
    },
    Break,
    Next,
    Block(Vec<Expr>),
    Paren(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arg {
    pub name: Option<String>,
    pub value: Option<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub default: Option<Expr>,
    pub span: Span,
}

/// Parse R source into a [`SyntaxTree`].
pub fn parse(source: &SourceText) -> Result<SyntaxTree, ParseError> {
    let (tokens, comments) = Lexer::new(source).tokenize()?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        ignore_newlines: vec![false],
        prev_end: Pos::new(1, 1),
    };
    let exprs = parser.program()?;
    Ok(SyntaxTree {
        exprs,
        comments,
        span: Span::new(Pos::new(1, 1), source.end_pos()),
    })
}

const ASSIGN_BP: u8 = 4;
const ARG_BP: u8 = 3;
const NOT_BP: u8 = 14;
const FORMULA_BP: u8 = 9;
const UNARY_MINUS_BP: u8 = 26;
const POSTFIX_BP: u8 = 30;

/// Left and right binding power of an infix operator.
fn infix_bp(op: &str) -> Option<(u8, u8)> {
    Some(match op {
        "=" => (2, 2),
        "<-" | "<<-" => (ASSIGN_BP, ASSIGN_BP),
        "->" | "->>" => (6, 7),
        "~" => (8, 9),
        "||" | "|" => (10, 11),
        "&&" | "&" => (12, 13),
        "==" | "!=" | "<" | ">" | "<=" | ">=" => (16, 17),
        "+" | "-" => (18, 19),
        "*" | "/" => (20, 21),
        "|>" => (22, 23),
        op if op.starts_with('%') => (22, 23),
        ":" => (24, 25),
        "^" => (28, 28),
        _ => return None,
    })
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    /// Inside `(` and `[` line breaks do not terminate expressions.
    ignore_newlines: Vec<bool>,
    prev_end: Pos,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Token {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        self.prev_end = t.span.end;
        t
    }

    fn breaks_line(&self) -> bool {
        self.peek().newline_before && !*self.ignore_newlines.last().expect("non-empty")
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(&self.peek().tok, Tok::Op(o) if o == op)
    }

    fn unexpected(&self, expected: Option<&str>) -> ParseError {
        let t = self.peek();
        if t.tok == Tok::Eof {
            ParseError::new("unexpected end of input", t.span.start, expected)
        } else {
            ParseError::new(format!("unexpected '{}'", t.text), t.span.start, expected)
        }
    }

    fn expect(&mut self, tok: Tok, text: &str) -> Result<Token, ParseError> {
        if self.peek().tok == tok {
            Ok(self.bump())
        } else {
            Err(self.unexpected(Some(text)))
        }
    }

    fn program(&mut self) -> Result<Vec<Expr>, ParseError> {
        let mut exprs = Vec::new();
        loop {
            while self.peek().tok == Tok::Semi {
                self.bump();
            }
            if self.peek().tok == Tok::Eof {
                return Ok(exprs);
            }
            exprs.push(self.expr(0)?);
            match self.peek().tok {
                Tok::Eof | Tok::Semi => {}
                _ if self.peek().newline_before => {}
                _ => return Err(self.unexpected(None)),
            }
        }
    }

    fn block_body(&mut self, open: &Token) -> Result<Vec<Expr>, ParseError> {
        self.ignore_newlines.push(false);
        let mut exprs = Vec::new();
        loop {
            while self.peek().tok == Tok::Semi {
                self.bump();
            }
            match self.peek().tok {
                Tok::RBrace => break,
                Tok::Eof => {
                    return Err(ParseError::new(
                        "unbalanced '{'",
                        open.span.start,
                        Some("}"),
                    ))
                }
                _ => {}
            }
            exprs.push(self.expr(0)?);
            match self.peek().tok {
                Tok::RBrace | Tok::Semi => {}
                Tok::Eof => {
                    return Err(ParseError::new(
                        "unbalanced '{'",
                        open.span.start,
                        Some("}"),
                    ))
                }
                _ if self.peek().newline_before => {}
                _ => return Err(self.unexpected(Some("}"))),
            }
        }
        self.ignore_newlines.pop();
        self.bump();
        Ok(exprs)
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.prefix()?;
        loop {
            if self.breaks_line() {
                break;
            }
            let start = lhs.span.start;
            match self.peek().tok.clone() {
                Tok::LParen if POSTFIX_BP >= min_bp => {
                    self.bump();
                    let args = self.args(Tok::RParen, ")")?;
                    self.expect(Tok::RParen, ")")?;
                    lhs = Expr {
                        kind: ExprKind::Call {
                            callee: Box::new(lhs),
                            args,
                        },
                        span: Span::new(start, self.prev_end),
                    };
                }
                Tok::LBracket if POSTFIX_BP >= min_bp => {
                    self.bump();
                    let args = self.args(Tok::RBracket, "]")?;
                    self.expect(Tok::RBracket, "]")?;
                    lhs = Expr {
                        kind: ExprKind::Index {
                            op: IndexOp::Single,
                            base: Box::new(lhs),
                            args,
                        },
                        span: Span::new(start, self.prev_end),
                    };
                }
                Tok::DoubleLBracket if POSTFIX_BP >= min_bp => {
                    self.bump();
                    let args = self.args(Tok::RBracket, "]]")?;
                    self.expect(Tok::RBracket, "]]")?;
                    self.expect(Tok::RBracket, "]]")?;
                    lhs = Expr {
                        kind: ExprKind::Index {
                            op: IndexOp::Double,
                            base: Box::new(lhs),
                            args,
                        },
                        span: Span::new(start, self.prev_end),
                    };
                }
                Tok::Op(op) if op == "$" && POSTFIX_BP >= min_bp => {
                    self.bump();
                    let t = self.bump();
                    let name = match t.tok {
                        Tok::Ident(n) | Tok::Str(n) => n,
                        _ => {
                            self.pos -= 1;
                            return Err(self.unexpected(Some("name after '$'")));
                        }
                    };
                    lhs = Expr {
                        kind: ExprKind::Field {
                            base: Box::new(lhs),
                            name,
                            name_span: t.span,
                        },
                        span: Span::new(start, self.prev_end),
                    };
                }
                Tok::Op(op) if op == "@" => {
                    return Err(ParseError::new(
                        "unsupported operator '@'",
                        self.peek().span.start,
                        None,
                    ))
                }
                Tok::Op(op) => {
                    let Some((lbp, rbp)) = infix_bp(&op) else {
                        break;
                    };
                    if lbp < min_bp {
                        break;
                    }
                    let op_tok = self.bump();
                    let rhs = self.expr(rbp)?;
                    let span = Span::new(start, self.prev_end);
                    lhs = self.combine(&op_tok, lhs, rhs, span)?;
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn combine(&self, op_tok: &Token, lhs: Expr, rhs: Expr, span: Span) -> Result<Expr, ParseError> {
        let Tok::Op(op) = &op_tok.tok else {
            unreachable!("combine is only called for operators")
        };
        let kind = match op.as_str() {
            "<-" | "<<-" | "=" => {
                let op = match op.as_str() {
                    "<-" => AssignOp::Local,
                    "<<-" => AssignOp::Super,
                    _ => AssignOp::Equals,
                };
                check_target(&lhs)?;
                ExprKind::Assign {
                    op,
                    target: Box::new(lhs),
                    value: Box::new(rhs),
                }
            }
            "->" | "->>" => {
                check_target(&rhs)?;
                ExprKind::RightAssign {
                    superassign: op == "->>",
                    value: Box::new(lhs),
                    target: Box::new(rhs),
                }
            }
            "|>" | "%>%" => {
                match &rhs.kind {
                    ExprKind::Call { .. } | ExprKind::Ident(_) | ExprKind::Namespace { .. } => {}
                    _ => {
                        return Err(ParseError::new(
                            "the right-hand side of a pipe must be a function call",
                            rhs.span.start,
                            Some("function call"),
                        ))
                    }
                }
                ExprKind::Pipe {
                    op: op.clone(),
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                }
            }
            _ => ExprKind::Binary {
                op: op.clone(),
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
        };
        Ok(Expr { kind, span })
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        let t = self.peek().clone();
        let start = t.span.start;
        let leaf = |kind| Expr { kind, span: t.span };
        match t.tok {
            Tok::Num { value, integer } => {
                self.bump();
                Ok(leaf(ExprKind::Num {
                    text: t.text.clone(),
                    value,
                    integer,
                }))
            }
            Tok::Str(ref value) => {
                self.bump();
                Ok(leaf(ExprKind::Str {
                    text: t.text.clone(),
                    value: value.clone(),
                }))
            }
            Tok::True | Tok::False => {
                self.bump();
                Ok(leaf(ExprKind::Bool(t.tok == Tok::True)))
            }
            Tok::Null => {
                self.bump();
                Ok(leaf(ExprKind::Null))
            }
            Tok::Ident(ref name) => {
                self.bump();
                let ns = match &self.peek().tok {
                    Tok::Op(o) if o == "::" => Some(NamespaceOp::Exported),
                    Tok::Op(o) if o == ":::" => Some(NamespaceOp::Internal),
                    _ => None,
                };
                if let Some(op) = ns {
                    self.bump();
                    let n = self.bump();
                    let fname = match n.tok {
                        Tok::Ident(f) | Tok::Str(f) => f,
                        _ => {
                            self.pos -= 1;
                            return Err(self.unexpected(Some("name after '::'")));
                        }
                    };
                    return Ok(Expr {
                        kind: ExprKind::Namespace {
                            op,
                            pkg: name.clone(),
                            pkg_span: t.span,
                            name: fname,
                            name_span: n.span,
                        },
                        span: Span::new(start, n.span.end),
                    });
                }
                Ok(leaf(ExprKind::Ident(name.clone())))
            }
            Tok::LParen => {
                self.bump();
                self.ignore_newlines.push(true);
                let inner = self.expr(0)?;
                self.expect(Tok::RParen, ")")?;
                self.ignore_newlines.pop();
                Ok(Expr {
                    kind: ExprKind::Paren(Box::new(inner)),
                    span: Span::new(start, self.prev_end),
                })
            }
            Tok::LBrace => {
                let open = self.bump();
                let body = self.block_body(&open)?;
                Ok(Expr {
                    kind: ExprKind::Block(body),
                    span: Span::new(start, self.prev_end),
                })
            }
            Tok::Op(ref op) if op == "-" || op == "+" || op == "!" || op == "~" => {
                self.bump();
                let bp = match op.as_str() {
                    "!" => NOT_BP,
                    "~" => FORMULA_BP,
                    _ => UNARY_MINUS_BP,
                };
                let operand = self.expr(bp)?;
                Ok(Expr {
                    kind: ExprKind::Unary {
                        op: op.clone(),
                        operand: Box::new(operand),
                    },
                    span: Span::new(start, self.prev_end),
                })
            }
            Tok::Function | Tok::Lambda => {
                self.bump();
                self.expect(Tok::LParen, "(")?;
                self.ignore_newlines.push(true);
                let params = self.params()?;
                self.expect(Tok::RParen, ")")?;
                self.ignore_newlines.pop();
                let body = self.expr(0)?;
                Ok(Expr {
                    kind: ExprKind::Function {
                        params,
                        body: Box::new(body),
                    },
                    span: Span::new(start, self.prev_end),
                })
            }
            Tok::If => {
                self.bump();
                let cond = self.condition()?;
                let then = self.expr(0)?;
                let otherwise = if self.peek().tok == Tok::Else {
                    self.bump();
                    Some(Box::new(self.expr(0)?))
                } else {
                    None
                };
                Ok(Expr {
                    kind: ExprKind::If {
                        cond: Box::new(cond),
                        then: Box::new(then),
                        otherwise,
                    },
                    span: Span::new(start, self.prev_end),
                })
            }
            Tok::For => {
                self.bump();
                self.expect(Tok::LParen, "(")?;
                self.ignore_newlines.push(true);
                let v = self.bump();
                let Tok::Ident(var) = v.tok else {
                    self.pos -= 1;
                    return Err(self.unexpected(Some("loop variable")));
                };
                self.expect(Tok::In, "in")?;
                let seq = self.expr(0)?;
                self.expect(Tok::RParen, ")")?;
                self.ignore_newlines.pop();
                let body = self.expr(0)?;
                Ok(Expr {
                    kind: ExprKind::For {
                        var,
                        var_span: v.span,
                        seq: Box::new(seq),
                        body: Box::new(body),
                    },
                    span: Span::new(start, self.prev_end),
                })
            }
            Tok::While => {
                self.bump();
                let cond = self.condition()?;
                let body = self.expr(0)?;
                Ok(Expr {
                    kind: ExprKind::While {
                        cond: Box::new(cond),
                        body: Box::new(body),
                    },
                    span: Span::new(start, self.prev_end),
                })
            }
            Tok::Repeat => {
                self.bump();
                let body = self.expr(0)?;
                Ok(Expr {
                    kind: ExprKind::Repeat {
                        body: Box::new(body),
                    },
                    span: Span::new(start, self.prev_end),
                })
            }
            Tok::Break => {
                self.bump();
                Ok(leaf(ExprKind::Break))
            }
            Tok::Next => {
                self.bump();
                Ok(leaf(ExprKind::Next))
            }
            _ => Err(self.unexpected(Some("expression"))),
        }
    }

    fn condition(&mut self) -> Result<Expr, ParseError> {
        self.expect(Tok::LParen, "(")?;
        self.ignore_newlines.push(true);
        let cond = self.expr(0)?;
        self.expect(Tok::RParen, ")")?;
        self.ignore_newlines.pop();
        Ok(cond)
    }

    fn params(&mut self) -> Result<Vec<Param>, ParseError> {
        let mut params = Vec::new();
        if self.peek().tok == Tok::RParen {
            return Ok(params);
        }
        loop {
            let t = self.bump();
            let Tok::Ident(name) = t.tok else {
                self.pos -= 1;
                return Err(self.unexpected(Some("parameter name")));
            };
            let default = if self.is_op("=") {
                self.bump();
                Some(self.expr(ARG_BP)?)
            } else {
                None
            };
            params.push(Param {
                name,
                default,
                span: Span::new(t.span.start, self.prev_end),
            });
            if self.peek().tok == Tok::Comma {
                self.bump();
            } else {
                return Ok(params);
            }
        }
    }

    /// Arguments up to (not including) `close`.
    fn args(&mut self, close: Tok, close_text: &str) -> Result<Vec<Arg>, ParseError> {
        self.ignore_newlines.push(true);
        let mut args = Vec::new();
        if self.peek().tok == close {
            self.ignore_newlines.pop();
            return Ok(args);
        }
        loop {
            let start = self.peek().span.start;
            let named = matches!(self.peek().tok, Tok::Ident(_) | Tok::Str(_) | Tok::Null)
                && matches!(&self.peek_at(1).tok, Tok::Op(o) if o == "=");
            let arg = if named {
                let name_tok = self.bump();
                self.bump();
                let name = match name_tok.tok {
                    Tok::Ident(n) | Tok::Str(n) => n,
                    _ => "NULL".to_string(),
                };
                let value = if self.peek().tok == Tok::Comma || self.peek().tok == close {
                    None
                } else {
                    Some(self.expr(ARG_BP)?)
                };
                Arg {
                    name: Some(name),
                    value,
                    span: Span::new(start, self.prev_end),
                }
            } else if self.peek().tok == Tok::Comma || self.peek().tok == close {
                Arg {
                    name: None,
                    value: None,
                    span: Span::new(start, start),
                }
            } else {
                let value = self.expr(ARG_BP)?;
                Arg {
                    name: None,
                    span: value.span,
                    value: Some(value),
                }
            };
            args.push(arg);
            if self.peek().tok == Tok::Comma {
                self.bump();
                continue;
            }
            if self.peek().tok == close {
                break;
            }
            return Err(self.unexpected(Some(close_text)));
        }
        self.ignore_newlines.pop();
        Ok(args)
    }
}

fn check_target(target: &Expr) -> Result<(), ParseError> {
    match &target.kind {
        ExprKind::Ident(_) | ExprKind::Str { .. } => Ok(()),
        _ => Err(ParseError::new(
            "unsupported assignment target",
            target.span.start,
            Some("variable name"),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_str(s: &str) -> Result<SyntaxTree, ParseError> {
        parse(&SourceText::literal(s))
    }

    fn first(s: &str) -> ExprKind {
        parse_str(s).unwrap().exprs.remove(0).kind
    }

    #[test]
    fn dangling_if_reports_end_of_input() {
        let err = parse_str("if(").unwrap_err();
        assert_eq!(err.location, Pos::new(1, 4));
    }

    #[test]
    fn unbalanced_and_dangling() {
        assert_eq!(parse_str("f(1))").unwrap_err().location, Pos::new(1, 5));
        assert_eq!(parse_str("x <-").unwrap_err().location, Pos::new(1, 5));
        let err = parse_str("{\n x <- 1\n").unwrap_err();
        assert_eq!(err.location, Pos::new(1, 1));
        assert_eq!(err.expected.as_deref(), Some("}"));
        assert!(parse_str("x <- \"abc").is_err());
    }

    #[test]
    fn pipe_is_outermost_on_rhs() {
        let k = first("by_age <- data |> dplyr::filter(age >= min_age)");
        let ExprKind::Assign { value, .. } = k else {
            panic!("not an assignment")
        };
        assert!(matches!(value.kind, ExprKind::Pipe { .. }));
    }

    #[test]
    fn unary_minus_binds_weaker_than_power() {
        let ExprKind::Unary { op, operand } = first("-2^2") else {
            panic!()
        };
        assert_eq!(op, "-");
        assert!(matches!(operand.kind, ExprKind::Binary { ref op, .. } if op == "^"));
        let ExprKind::Binary { rhs, .. } = first("2^3^4") else {
            panic!()
        };
        assert!(matches!(rhs.kind, ExprKind::Binary { ref op, .. } if op == "^"));
    }

    #[test]
    fn newline_terminates_outside_parens() {
        assert_eq!(parse_str("x <- 1\n-2").unwrap().exprs.len(), 2);
        assert_eq!(parse_str("x <- (1\n-2)").unwrap().exprs.len(), 1);
        assert_eq!(parse_str("x <- 1 +\n 2").unwrap().exprs.len(), 1);
        assert!(parse_str("x <- 1 2").is_err());
    }

    #[test]
    fn named_arguments_and_equals_assignment() {
        let ExprKind::Call { args, .. } = first("aes(x=age, y=m)") else {
            panic!()
        };
        assert_eq!(args[0].name.as_deref(), Some("x"));
        assert!(matches!(first("x = 3"), ExprKind::Assign { op: AssignOp::Equals, .. }));
    }

    #[test]
    fn control_flow_forms() {
        assert!(matches!(
            first("if (a) b else c"),
            ExprKind::If { otherwise: Some(_), .. }
        ));
        assert!(matches!(first("for (i in 1:10) print(i)"), ExprKind::For { .. }));
        assert!(matches!(first("while (TRUE) break"), ExprKind::While { .. }));
        assert!(matches!(first("repeat { next }"), ExprKind::Repeat { .. }));
        assert!(matches!(first("function(x, y = 2) x + y"), ExprKind::Function { .. }));
        let tree = parse_str("{\n if (a) {\n  b\n }\n else {\n  c\n }\n}").unwrap();
        assert_eq!(tree.exprs.len(), 1);
    }

    #[test]
    fn index_forms() {
        assert!(matches!(first("x[[\"a\"]]"), ExprKind::Index { op: IndexOp::Double, .. }));
        assert!(matches!(first("x[1, ]"), ExprKind::Index { op: IndexOp::Single, ref args, .. } if args.len() == 2));
        assert!(matches!(first("df$col"), ExprKind::Field { .. }));
        assert!(matches!(first("x[y[1]]"), ExprKind::Index { .. }));
    }

    #[test]
    fn rejects_unsupported_constructs() {
        assert!(parse_str("f(x) <- 3").is_err());
        assert!(parse_str("x |> 3").is_err());
        assert!(parse_str("a@b").is_err());
    }
}
