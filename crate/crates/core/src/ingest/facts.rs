//! Ground ASP facts: `pred(t1,...,tn).`, `%` line comments, `%* *%` block
//! comments and `#const name=value.` directives.

use std::fmt;

use thiserror::Error;

/// A ground term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Symbol(String),
    Int(i64),
    /// Decimal literal as written; only meaningful with decimal input.
    Decimal(String),
    Compound(String, Vec<Term>),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Symbol(s) | Term::Decimal(s) => f.write_str(s),
            Term::Int(i) => write!(f, "{i}"),
            Term::Compound(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fact {
    pub predicate: String,
    pub args: Vec<Term>,
    pub pos: Position,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Directive {
    pub name: String,
    pub value: Term,
    pub pos: Position,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FactFile {
    pub facts: Vec<Fact>,
    pub consts: Vec<Directive>,
    /// Directives other than `#const`, skipped.
    pub ignored: Vec<(String, Position)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{pos}: {message}")]
pub struct SyntaxError {
    pub pos: Position,
    pub message: String,
}

struct Lexer<'a> {
    src: &'a [u8],
    at: usize,
    line: usize,
    column: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Token {
    Ident(String),
    Int(i64),
    Decimal(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Hash,
    Eq,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            src: text.as_bytes(),
            at: 0,
            line: 1,
            column: 1,
        }
    }

    fn pos(&self) -> Position {
        Position {
            line: self.line,
            column: self.column,
        }
    }

    fn peek_byte(&self, ahead: usize) -> Option<u8> {
        self.src.get(self.at + ahead).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek_byte(0)?;
        self.at += 1;
        if b == b'\n' {
            self.line += 1;
            self.column = 1;
        } else if b & 0xC0 != 0x80 {
            self.column += 1;
        }
        Some(b)
    }

    fn error<T>(&self, pos: Position, message: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError {
            pos,
            message: message.into(),
        })
    }

    fn skip_trivia(&mut self) -> Result<(), SyntaxError> {
        loop {
            match self.peek_byte(0) {
                Some(b) if b.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'%') if self.peek_byte(1) == Some(b'*') => {
                    let start = self.pos();
                    self.bump();
                    self.bump();
                    loop {
                        match self.bump() {
                            None => return self.error(start, "unterminated block comment"),
                            Some(b'*') if self.peek_byte(0) == Some(b'%') => {
                                self.bump();
                                break;
                            }
                            Some(_) => {}
                        }
                    }
                }
                Some(b'%') => {
                    while let Some(b) = self.peek_byte(0) {
                        if b == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    /// Skips raw text through a period that ends a statement.
    fn skip_statement(&mut self) -> bool {
        while let Some(b) = self.bump() {
            if b == b'.' && self.peek_byte(0).is_none_or(|c| c.is_ascii_whitespace() || c == b'%') {
                return true;
            }
        }
        false
    }

    fn next(&mut self) -> Result<Option<(Token, Position)>, SyntaxError> {
        self.skip_trivia()?;
        let pos = self.pos();
        let Some(b) = self.peek_byte(0) else {
            return Ok(None);
        };
        let tok = match b {
            b'(' => {
                self.bump();
                Token::LParen
            }
            b')' => {
                self.bump();
                Token::RParen
            }
            b',' => {
                self.bump();
                Token::Comma
            }
            b'.' => {
                self.bump();
                Token::Dot
            }
            b'#' => {
                self.bump();
                Token::Hash
            }
            b'=' => {
                self.bump();
                Token::Eq
            }
            b'-' | b'0'..=b'9' => self.number(pos)?,
            b'a'..=b'z' | b'_' => {
                let mut s = String::new();
                while let Some(c) = self.peek_byte(0) {
                    if c.is_ascii_alphanumeric() || c == b'_' || c == b'\'' {
                        s.push(c as char);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Token::Ident(s)
            }
            b'A'..=b'Z' => return self.error(pos, "variables are not allowed in ground facts"),
            _ => {
                let ch = std::str::from_utf8(&self.src[self.at..])
                    .ok()
                    .and_then(|s| s.chars().next())
                    .unwrap_or('?');
                return self.error(pos, format!("unexpected character `{ch}`"));
            }
        };
        Ok(Some((tok, pos)))
    }

    fn number(&mut self, pos: Position) -> Result<Token, SyntaxError> {
        let mut s = String::new();
        if self.peek_byte(0) == Some(b'-') {
            s.push('-');
            self.bump();
        }
        let digits_start = s.len();
        while let Some(c) = self.peek_byte(0).filter(u8::is_ascii_digit) {
            s.push(c as char);
            self.bump();
        }
        if s.len() == digits_start {
            return self.error(pos, "expected digits after `-`");
        }
        // A '.' followed by a digit continues a decimal; otherwise it ends the fact.
        if self.peek_byte(0) == Some(b'.') && self.peek_byte(1).is_some_and(|c| c.is_ascii_digit()) {
            s.push('.');
            self.bump();
            while let Some(c) = self.peek_byte(0).filter(u8::is_ascii_digit) {
                s.push(c as char);
                self.bump();
            }
            return Ok(Token::Decimal(s));
        }
        match s.parse::<i64>() {
            Ok(v) => Ok(Token::Int(v)),
            Err(_) => self.error(pos, format!("integer `{s}` out of range")),
        }
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    lookahead: Option<(Token, Position)>,
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Result<Option<&(Token, Position)>, SyntaxError> {
        if self.lookahead.is_none() {
            self.lookahead = self.lexer.next()?;
        }
        Ok(self.lookahead.as_ref())
    }

    fn take(&mut self) -> Result<Option<(Token, Position)>, SyntaxError> {
        self.peek()?;
        Ok(self.lookahead.take())
    }

    fn eof_pos(&self) -> Position {
        self.lexer.pos()
    }

    fn expect(&mut self, want: Token, what: &str) -> Result<Position, SyntaxError> {
        match self.take()? {
            Some((t, p)) if t == want => Ok(p),
            Some((t, p)) => Err(SyntaxError {
                pos: p,
                message: format!("expected {what}, found {}", describe(&t)),
            }),
            None => Err(SyntaxError {
                pos: self.eof_pos(),
                message: format!("expected {what}, found end of input"),
            }),
        }
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        match self.take()? {
            Some((Token::Int(i), _)) => Ok(Term::Int(i)),
            Some((Token::Decimal(d), _)) => Ok(Term::Decimal(d)),
            Some((Token::Ident(name), _)) => {
                if matches!(self.peek()?, Some((Token::LParen, _))) {
                    self.take()?;
                    let args = self.args()?;
                    Ok(Term::Compound(name, args))
                } else {
                    Ok(Term::Symbol(name))
                }
            }
            Some((t, p)) => Err(SyntaxError {
                pos: p,
                message: format!("expected a term, found {}", describe(&t)),
            }),
            None => Err(SyntaxError {
                pos: self.eof_pos(),
                message: "expected a term, found end of input".into(),
            }),
        }
    }

    /// Arguments after an opening parenthesis, through the closing one.
    fn args(&mut self) -> Result<Vec<Term>, SyntaxError> {
        let mut args = vec![self.term()?];
        loop {
            match self.take()? {
                Some((Token::Comma, _)) => args.push(self.term()?),
                Some((Token::RParen, _)) => return Ok(args),
                Some((t, p)) => {
                    return Err(SyntaxError {
                        pos: p,
                        message: format!("expected `,` or `)`, found {}", describe(&t)),
                    })
                }
                None => {
                    return Err(SyntaxError {
                        pos: self.eof_pos(),
                        message: "unclosed `(`".into(),
                    })
                }
            }
        }
    }

    fn directive(&mut self, file: &mut FactFile, hash_pos: Position) -> Result<(), SyntaxError> {
        let name = match self.take()? {
            Some((Token::Ident(n), _)) => n,
            _ => {
                return Err(SyntaxError {
                    pos: hash_pos,
                    message: "expected a directive name after `#`".into(),
                })
            }
        };
        if name != "const" {
            if !self.lexer.skip_statement() {
                return Err(SyntaxError {
                    pos: hash_pos,
                    message: format!("unterminated #{name} directive"),
                });
            }
            file.ignored.push((name, hash_pos));
            return Ok(());
        }
        let cname = match self.take()? {
            Some((Token::Ident(n), _)) => n,
            Some((t, p)) => {
                return Err(SyntaxError {
                    pos: p,
                    message: format!("expected constant name, found {}", describe(&t)),
                })
            }
            None => {
                return Err(SyntaxError {
                    pos: self.eof_pos(),
                    message: "expected constant name".into(),
                })
            }
        };
        self.expect(Token::Eq, "`=`")?;
        let value = self.term()?;
        self.expect(Token::Dot, "`.`")?;
        file.consts.push(Directive {
            name: cname,
            value,
            pos: hash_pos,
        });
        Ok(())
    }
}

fn describe(t: &Token) -> String {
    match t {
        Token::Ident(s) => format!("`{s}`"),
        Token::Int(i) => format!("`{i}`"),
        Token::Decimal(d) => format!("`{d}`"),
        Token::LParen => "`(`".into(),
        Token::RParen => "`)`".into(),
        Token::Comma => "`,`".into(),
        Token::Dot => "`.`".into(),
        Token::Hash => "`#`".into(),
        Token::Eq => "`=`".into(),
    }
}

/// Parses a file of ground facts.
pub fn parse_facts(text: &str) -> Result<FactFile, SyntaxError> {
    let mut p = Parser {
        lexer: Lexer::new(text),
        lookahead: None,
    };
    let mut file = FactFile::default();
    while let Some((tok, pos)) = p.take()? {
        match tok {
            Token::Hash => p.directive(&mut file, pos)?,
            Token::Ident(predicate) => {
                let args = match p.peek()? {
                    Some((Token::LParen, _)) => {
                        p.take()?;
                        p.args()?
                    }
                    _ => Vec::new(),
                };
                p.expect(Token::Dot, "`.` after fact")?;
                file.facts.push(Fact {
                    predicate,
                    args,
                    pos,
                });
            }
            other => {
                return Err(SyntaxError {
                    pos,
                    message: format!("expected a fact, found {}", describe(&other)),
                })
            }
        }
    }
    Ok(file)
}
