use super::source::{Pos, SourceText, Span};
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Num { value: f64, integer: bool },
    Str(String),
    Ident(String),
    If,
    Else,
    For,
    In,
    While,
    Repeat,
    Function,
    Lambda,
    Break,
    Next,
    True,
    False,
    Null,
    Op(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    DoubleLBracket,
    RBracket,
    Comma,
    Semi,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
    /// Raw source text of the token.
    pub text: String,
    /// Whether a line break separates this token from the previous one.
    pub newline_before: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comment {
    pub span: Span,
    pub text: String,
}

const OPERATORS: &[&str] = &[
    "<<-", "->>", ":::", "<-", "->", "<=", ">=", "==", "!=", "&&", "||", "|>", "::", "<", ">", "!",
    "&", "|", "+", "-", "*", "/", "^", "~", "?", ":", "$", "@", "=",
];

pub struct Lexer<'a> {
    src: &'a SourceText,
    chars: Vec<(usize, char)>,
    i: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a SourceText) -> Self {
        Lexer {
            src,
            chars: src.content().char_indices().collect(),
            i: 0,
            line: 1,
            col: 1,
        }
    }

    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.i + k).map(|&(_, c)| c)
    }

    fn pos(&self) -> Pos {
        Pos::new(self.line, self.col)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = *self.chars.get(self.i)?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn offset(&self) -> usize {
        self.chars
            .get(self.i)
            .map(|&(o, _)| o)
            .unwrap_or(self.src.content().len())
    }

    pub fn tokenize(mut self) -> Result<(Vec<Token>, Vec<Comment>), ParseError> {
        let mut tokens = Vec::new();
        let mut comments = Vec::new();
        let mut newline = false;
        loop {
            match self.peek(0) {
                None => {
                    let p = self.pos();
                    tokens.push(Token {
                        tok: Tok::Eof,
                        span: Span::new(p, p),
                        text: String::new(),
                        newline_before: newline,
                    });
                    return Ok((tokens, comments));
                }
                Some('\n') => {
                    self.bump();
                    newline = true;
                }
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    let start = self.pos();
                    let so = self.offset();
                    while let Some(c) = self.peek(0) {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                    comments.push(Comment {
                        span: Span::new(start, self.pos()),
                        text: self.src.content()[so..self.offset()].to_string(),
                    });
                }
                Some(_) => {
                    let mut token = self.next_token()?;
                    token.newline_before = newline;
                    newline = false;
                    tokens.push(token);
                }
            }
        }
    }

    fn next_token(&mut self) -> Result<Token, ParseError> {
        let start = self.pos();
        let so = self.offset();
        let c = self.peek(0).expect("caller checked");
        let tok = match c {
            '"' | '\'' => self.string(c, start)?,
            '`' => {
                self.bump();
                let mut name = String::new();
                loop {
                    match self.bump() {
                        Some('`') => break,
                        Some(ch) => name.push(ch),
                        None => {
                            return Err(ParseError::new(
                                "unterminated backtick name",
                                start,
                                Some("`"),
                            ))
                        }
                    }
                }
                Tok::Ident(name)
            }
            c if c.is_ascii_digit() => self.number(start)?,
            '.' if self.peek(1).is_some_and(|d| d.is_ascii_digit()) => self.number(start)?,
            c if c.is_alphabetic() || c == '.' || c == '_' => {
                if c == '_' {
                    return Err(ParseError::new("unexpected '_'", start, None));
                }
                let mut name = String::new();
                while let Some(ch) = self.peek(0) {
                    if ch.is_alphanumeric() || ch == '.' || ch == '_' {
                        name.push(ch);
                        self.bump();
                    } else {
                        break;
                    }
                }
                keyword(&name).unwrap_or(Tok::Ident(name))
            }
            '(' => self.single(Tok::LParen),
            ')' => self.single(Tok::RParen),
            '{' => self.single(Tok::LBrace),
            '}' => self.single(Tok::RBrace),
            ']' => self.single(Tok::RBracket),
            ',' => self.single(Tok::Comma),
            ';' => self.single(Tok::Semi),
            '[' => {
                self.bump();
                if self.peek(0) == Some('[') {
                    self.bump();
                    Tok::DoubleLBracket
                } else {
                    Tok::LBracket
                }
            }
            '\\' => self.single(Tok::Lambda),
            '%' => {
                let mut op = String::from("%");
                self.bump();
                loop {
                    match self.bump() {
                        Some('%') => break,
                        Some('\n') | None => {
                            return Err(ParseError::new(
                                "unterminated %operator%",
                                start,
                                Some("%"),
                            ))
                        }
                        Some(ch) => op.push(ch),
                    }
                }
                op.push('%');
                Tok::Op(op)
            }
            _ => {
                let rest: String = self.chars[self.i..]
                    .iter()
                    .take(3)
                    .map(|&(_, c)| c)
                    .collect();
                let op = OPERATORS
                    .iter()
                    .find(|op| rest.starts_with(*op))
                    .ok_or_else(|| {
                        ParseError::new(format!("unexpected character '{c}'"), start, None)
                    })?;
                for _ in 0..op.chars().count() {
                    self.bump();
                }
                Tok::Op((*op).to_string())
            }
        };
        let end = self.pos();
        Ok(Token {
            tok,
            span: Span::new(start, end),
            text: self.src.content()[so..self.offset()].to_string(),
            newline_before: false,
        })
    }

    fn single(&mut self, tok: Tok) -> Tok {
        self.bump();
        tok
    }

    fn string(&mut self, quote: char, start: Pos) -> Result<Tok, ParseError> {
        self.bump();
        let mut value = String::new();
        loop {
            match self.bump() {
                None => {
                    return Err(ParseError::new(
                        "unterminated string literal",
                        start,
                        Some(&quote.to_string()),
                    ))
                }
                Some(c) if c == quote => break,
                Some('\\') => {
                    let at = self.pos();
                    match self.bump() {
                        Some('\\') => value.push('\\'),
                        Some('"') => value.push('"'),
                        Some('\'') => value.push('\''),
                        Some('n') => value.push('\n'),
                        Some('t') => value.push('\t'),
                        Some(other) => {
                            return Err(ParseError::new(
                                format!("unsupported escape '\\{other}'"),
                                Pos::new(at.line, at.col - 1),
                                None,
                            ))
                        }
                        None => {
                            return Err(ParseError::new(
                                "unterminated string literal",
                                start,
                                Some(&quote.to_string()),
                            ))
                        }
                    }
                }
                Some(c) => value.push(c),
            }
        }
        Ok(Tok::Str(value))
    }

    fn number(&mut self, start: Pos) -> Result<Tok, ParseError> {
        let mut text = String::new();
        if self.peek(0) == Some('0') && matches!(self.peek(1), Some('x' | 'X')) {
            self.bump();
            self.bump();
            while let Some(c) = self.peek(0).filter(|c| c.is_ascii_hexdigit()) {
                text.push(c);
                self.bump();
            }
            let value = i64::from_str_radix(&text, 16)
                .map_err(|_| ParseError::new("malformed hexadecimal literal", start, None))?
                as f64;
            let integer = self.peek(0) == Some('L');
            if integer {
                self.bump();
            }
            return Ok(Tok::Num { value, integer });
        }
        while let Some(c) = self.peek(0).filter(|c| c.is_ascii_digit()) {
            text.push(c);
            self.bump();
        }
        if self.peek(0) == Some('.') {
            text.push('.');
            self.bump();
            while let Some(c) = self.peek(0).filter(|c| c.is_ascii_digit()) {
                text.push(c);
                self.bump();
            }
        }
        if matches!(self.peek(0), Some('e' | 'E')) {
            let sign = matches!(self.peek(1), Some('+' | '-'));
            let digit_at = if sign { 2 } else { 1 };
            if self.peek(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                text.push('e');
                self.bump();
                if sign {
                    text.push(self.bump().expect("peeked"));
                }
                while let Some(c) = self.peek(0).filter(|c| c.is_ascii_digit()) {
                    text.push(c);
                    self.bump();
                }
            }
        }
        let value: f64 = text
            .parse()
            .map_err(|_| ParseError::new("malformed number", start, None))?;
        let integer = self.peek(0) == Some('L');
        if integer {
            self.bump();
        }
        if self.peek(0).is_some_and(|c| c.is_alphanumeric() || c == '_') {
            return Err(ParseError::new("malformed number", start, None));
        }
        Ok(Tok::Num { value, integer })
    }
}

fn keyword(name: &str) -> Option<Tok> {
    Some(match name {
        "if" => Tok::If,
        "else" => Tok::Else,
        "for" => Tok::For,
        "in" => Tok::In,
        "while" => Tok::While,
        "repeat" => Tok::Repeat,
        "function" => Tok::Function,
        "break" => Tok::Break,
        "next" => Tok::Next,
        "TRUE" => Tok::True,
        "FALSE" => Tok::False,
        "NULL" => Tok::Null,
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        let src = SourceText::literal(s);
        Lexer::new(&src)
            .tokenize()
            .unwrap()
            .0
            .into_iter()
            .map(|t| t.tok)
            .collect()
    }

    #[test]
    fn assignment_tokens() {
        assert_eq!(
            toks("x<-2L"),
            vec![
                Tok::Ident("x".into()),
                Tok::Op("<-".into()),
                Tok::Num {
                    value: 2.0,
                    integer: true
                },
                Tok::Eof
            ]
        );
    }

    #[test]
    fn pipes_and_specials() {
        assert_eq!(
            toks("a %>% b |> c"),
            vec![
                Tok::Ident("a".into()),
                Tok::Op("%>%".into()),
                Tok::Ident("b".into()),
                Tok::Op("|>".into()),
                Tok::Ident("c".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn string_escapes() {
        assert_eq!(toks(r#"'a\'b\n'"#)[0], Tok::Str("a'b\n".into()));
        let src = SourceText::literal(r#""\q""#);
        let err = Lexer::new(&src).tokenize().unwrap_err();
        assert_eq!(err.location, Pos::new(1, 2));
    }

    #[test]
    fn comments_are_collected() {
        let src = SourceText::literal("x # note\ny");
        let (tokens, comments) = Lexer::new(&src).tokenize().unwrap();
        assert_eq!(comments[0].text, "# note");
        assert!(tokens[1].newline_before);
    }

    #[test]
    fn numbers() {
        assert_eq!(
            toks("1e3 .5 0x10L")[..3],
            [
                Tok::Num {
                    value: 1000.0,
                    integer: false
                },
                Tok::Num {
                    value: 0.5,
                    integer: false
                },
                Tok::Num {
                    value: 16.0,
                    integer: true
                }
            ]
        );
    }
}
