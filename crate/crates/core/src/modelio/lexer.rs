use super::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Word(String),
    Colon,
    Semi,
    DotDot,
    Eq,
    LBracket,
    RBracket,
    Comma,
    Arrow,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Colon => "`:`".into(),
            Tok::Semi => "`;`".into(),
            Tok::DotDot => "`..`".into(),
            Tok::Eq => "`=`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Arrow => "`->`".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

/// Tokenizes one source line; `#` starts a comment.
pub(crate) fn lex_line(text: &str, line: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (offset, c) = chars[i];
        let column = text[..offset].chars().count() + 1;
        let peek = chars.get(i + 1).map(|&(_, c)| c);
        let single = |tok| Token { tok, line, column };
        match c {
            '#' => break,
            c if c.is_whitespace() => {
                i += 1;
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().map(|&(_, c)| c).collect();
                out.push(Token {
                    tok: Tok::Word(word),
                    line,
                    column,
                });
            }
            '.' if peek == Some('.') => {
                out.push(single(Tok::DotDot));
                i += 2;
            }
            '-' if peek == Some('>') => {
                out.push(single(Tok::Arrow));
                i += 2;
            }
            ':' | ';' | '=' | '[' | ']' | ',' => {
                out.push(single(match c {
                    ':' => Tok::Colon,
                    ';' => Tok::Semi,
                    '=' => Tok::Eq,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    _ => Tok::Comma,
                }));
                i += 1;
            }
            other => {
                return Err(ParseError::new(
                    line,
                    column,
                    ParseErrorKind::Syntax,
                    format!("unexpected character `{other}`"),
                ))
            }
        }
    }
    Ok(out)
}

/// Cursor over a token list with positioned error helpers.
pub(crate) struct Cursor<'a> {
    tokens: &'a [Token],
    pos: usize,
    line: usize,
    end_column: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(tokens: &'a [Token], line: usize, end_column: usize) -> Self {
        Cursor {
            tokens,
            pos: 0,
            line,
            end_column,
        }
    }

    pub(crate) fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    pub(crate) fn next(&mut self) -> Option<&'a Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    /// Position of the next token, or the end of the line.
    pub(crate) fn here(&self) -> (usize, usize) {
        match self.peek() {
            Some(t) => (t.line, t.column),
            None => (self.line, self.end_column),
        }
    }

    pub(crate) fn error(&self, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
        let (line, column) = self.here();
        ParseError::new(line, column, kind, message)
    }

    pub(crate) fn expect(&mut self, want: Tok) -> Result<&'a Token, ParseError> {
        match self.peek() {
            Some(t) if t.tok == want => {
                self.pos += 1;
                Ok(t)
            }
            Some(t) => Err(self.error(
                ParseErrorKind::Syntax,
                format!("expected {}, found {}", want.describe(), t.tok.describe()),
            )),
            None => Err(self.error(
                ParseErrorKind::Syntax,
                format!("expected {}, found end of line", want.describe()),
            )),
        }
    }

    pub(crate) fn word(&mut self, what: &str) -> Result<(&'a str, &'a Token), ParseError> {
        match self.peek() {
            Some(t @ Token { tok: Tok::Word(w), .. }) => {
                self.pos += 1;
                Ok((w.as_str(), t))
            }
            Some(t) => Err(self.error(
                ParseErrorKind::Syntax,
                format!("expected {what}, found {}", t.tok.describe()),
            )),
            None => Err(self.error(ParseErrorKind::Syntax, format!("expected {what}, found end of line"))),
        }
    }

    pub(crate) fn number(&mut self, what: &str) -> Result<(u8, &'a Token), ParseError> {
        let (line, column) = self.here();
        let (w, t) = self.word(what)?;
        w.parse::<u8>().map(|v| (v, t)).map_err(|_| {
            ParseError::new(
                line,
                column,
                ParseErrorKind::Syntax,
                format!("expected {what}, found `{w}`"),
            )
        })
    }

    pub(crate) fn finish(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.error(
                ParseErrorKind::Syntax,
                format!("unexpected {} at end of line", t.tok.describe()),
            )),
        }
    }
}

pub(crate) fn is_identifier(word: &str) -> bool {
    word.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
}
