//! Hand-rolled lexer for the Solidity subset. Comments are skipped (the
//! printer emits canonical formatting, so they are not preserved).

use super::error::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Identifier,
    Number,
    HexNumber,
    Str,
    // Punctuation / operators
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semicolon,
    Comma,
    Dot,
    Question,
    Colon,
    Arrow, // =>
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    StarStar,
    PlusPlus,
    MinusMinus,
    Assign,
    PlusAssign,
    MinusAssign,
    StarAssign,
    SlashAssign,
    PercentAssign,
    AmpAssign,
    PipeAssign,
    CaretAssign,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Bang,
    Tilde,
    Amp,
    Pipe,
    Caret,
    Shl,
    Shr,
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

pub struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    pub fn tokenize(mut self) -> Result<Vec<Token>, ParseError> {
        let mut tokens = Vec::new();
        loop {
            self.skip_trivia()?;
            if self.pos >= self.src.len() {
                tokens.push(Token {
                    kind: TokenKind::Eof,
                    text: String::new(),
                    start: self.pos,
                    end: self.pos,
                    line: self.line,
                    column: self.col,
                });
                return Ok(tokens);
            }
            tokens.push(self.next_token()?);
        }
    }

    fn peek(&self) -> u8 {
        *self.src.get(self.pos).unwrap_or(&0)
    }

    fn peek2(&self) -> u8 {
        *self.src.get(self.pos + 1).unwrap_or(&0)
    }

    fn bump(&mut self) -> u8 {
        let b = self.peek();
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        b
    }

    fn skip_trivia(&mut self) -> Result<(), ParseError> {
        loop {
            match self.peek() {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    self.bump();
                }
                b'/' if self.peek2() == b'/' => {
                    while self.pos < self.src.len() && self.peek() != b'\n' {
                        self.bump();
                    }
                }
                b'/' if self.peek2() == b'*' => {
                    let (line, col) = (self.line, self.col);
                    self.bump();
                    self.bump();
                    loop {
                        if self.pos >= self.src.len() {
                            return Err(ParseError::syntax(
                                line,
                                col,
                                vec!["*/".into()],
                                "end of input in block comment".into(),
                            ));
                        }
                        if self.peek() == b'*' && self.peek2() == b'/' {
                            self.bump();
                            self.bump();
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn next_token(&mut self) -> Result<Token, ParseError> {
        let start = self.pos;
        let (line, column) = (self.line, self.col);
        let b = self.peek();

        let kind = if b.is_ascii_alphabetic() || b == b'_' || b == b'$' {
            while self.peek().is_ascii_alphanumeric() || self.peek() == b'_' || self.peek() == b'$'
            {
                self.bump();
            }
            TokenKind::Identifier
        } else if b.is_ascii_digit() {
            if b == b'0' && (self.peek2() == b'x' || self.peek2() == b'X') {
                self.bump();
                self.bump();
                while self.peek().is_ascii_hexdigit() {
                    self.bump();
                }
                TokenKind::HexNumber
            } else {
                while self.peek().is_ascii_digit() {
                    self.bump();
                }
                // decimal part and exponent are not in the subset; a lone
                // integer token suffices for the corpus
                TokenKind::Number
            }
        } else if b == b'"' || b == b'\'' {
            let quote = self.bump();
            loop {
                if self.pos >= self.src.len() || self.peek() == b'\n' {
                    return Err(ParseError::syntax(
                        line,
                        column,
                        vec!["closing quote".into()],
                        "unterminated string literal".into(),
                    ));
                }
                let c = self.bump();
                if c == b'\\' {
                    self.bump();
                } else if c == quote && c != b'\\' {
                    break;
                }
            }
            TokenKind::Str
        } else {
            self.operator(line, column)?
        };

        let end = self.pos;
        let text = String::from_utf8_lossy(&self.src[start..end]).into_owned();
        Ok(Token { kind, text, start, end, line, column })
    }

    fn operator(&mut self, line: usize, column: usize) -> Result<TokenKind, ParseError> {
        use TokenKind::*;
        let b = self.bump();
        let kind = match b {
            b'(' => LParen,
            b')' => RParen,
            b'{' => LBrace,
            b'}' => RBrace,
            b'[' => LBracket,
            b']' => RBracket,
            b';' => Semicolon,
            b',' => Comma,
            b'.' => Dot,
            b'?' => Question,
            b':' => Colon,
            b'+' => match self.peek() {
                b'+' => {
                    self.bump();
                    PlusPlus
                }
                b'=' => {
                    self.bump();
                    PlusAssign
                }
                _ => Plus,
            },
            b'-' => match self.peek() {
                b'-' => {
                    self.bump();
                    MinusMinus
                }
                b'=' => {
                    self.bump();
                    MinusAssign
                }
                _ => Minus,
            },
            b'*' => match self.peek() {
                b'*' => {
                    self.bump();
                    StarStar
                }
                b'=' => {
                    self.bump();
                    StarAssign
                }
                _ => Star,
            },
            b'/' => match self.peek() {
                b'=' => {
                    self.bump();
                    SlashAssign
                }
                _ => Slash,
            },
            b'%' => match self.peek() {
                b'=' => {
                    self.bump();
                    PercentAssign
                }
                _ => Percent,
            },
            b'=' => match self.peek() {
                b'=' => {
                    self.bump();
                    Eq
                }
                b'>' => {
                    self.bump();
                    Arrow
                }
                _ => Assign,
            },
            b'!' => match self.peek() {
                b'=' => {
                    self.bump();
                    Ne
                }
                _ => Bang,
            },
            b'<' => match self.peek() {
                b'=' => {
                    self.bump();
                    Le
                }
                b'<' => {
                    self.bump();
                    Shl
                }
                _ => Lt,
            },
            b'>' => match self.peek() {
                b'=' => {
                    self.bump();
                    Ge
                }
                b'>' => {
                    self.bump();
                    Shr
                }
                _ => Gt,
            },
            b'&' => match self.peek() {
                b'&' => {
                    self.bump();
                    AndAnd
                }
                b'=' => {
                    self.bump();
                    AmpAssign
                }
                _ => Amp,
            },
            b'|' => match self.peek() {
                b'|' => {
                    self.bump();
                    OrOr
                }
                b'=' => {
                    self.bump();
                    PipeAssign
                }
                _ => Pipe,
            },
            b'^' => match self.peek() {
                b'=' => {
                    self.bump();
                    CaretAssign
                }
                _ => Caret,
            },
            b'~' => Tilde,
            other => {
                return Err(ParseError::syntax(
                    line,
                    column,
                    vec!["token".into()],
                    format!("unexpected character {:?}", other as char),
                ))
            }
        };
        Ok(kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        Lexer::new(src).tokenize().unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn lexes_operators_and_idents() {
        use TokenKind::*;
        assert_eq!(
            kinds("a += b ** 2;"),
            vec![Identifier, PlusAssign, Identifier, StarStar, Number, Semicolon, Eof]
        );
    }

    #[test]
    fn skips_comments() {
        use TokenKind::*;
        assert_eq!(kinds("a /* x\ny */ // trail\nb"), vec![Identifier, Identifier, Eof]);
    }

    #[test]
    fn tracks_line_and_column() {
        let toks = Lexer::new("ab\n  cd").tokenize().unwrap();
        assert_eq!((toks[1].line, toks[1].column), (2, 3));
    }

    #[test]
    fn hex_and_string_literals() {
        use TokenKind::*;
        assert_eq!(kinds("0x0 \"hi\""), vec![HexNumber, Str, Eof]);
    }

    #[test]
    fn unterminated_string_is_syntax_error() {
        assert!(Lexer::new("\"oops").tokenize().is_err());
    }
}
