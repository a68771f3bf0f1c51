use super::diagnostic::{Diagnostic, DiagnosticCode, Phase, Pos};

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Number(f64),
    Str(String),
    If,
    Else,
    Def,
    End,
    True,
    False,
    LParen,
    RParen,
    Comma,
    Colon,
    Assign,
    Dot,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    /// Text after `#`, up to the end of the line.
    Comment(String),
    Newline,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier '{s}'"),
            TokenKind::Number(n) => format!("number {n}"),
            TokenKind::Str(s) => format!("string \"{s}\""),
            TokenKind::If => "'if'".into(),
            TokenKind::Else => "'else'".into(),
            TokenKind::Def => "'def'".into(),
            TokenKind::End => "'end'".into(),
            TokenKind::True => "'true'".into(),
            TokenKind::False => "'false'".into(),
            TokenKind::LParen => "'('".into(),
            TokenKind::RParen => "')'".into(),
            TokenKind::Comma => "','".into(),
            TokenKind::Colon => "':'".into(),
            TokenKind::Assign => "'='".into(),
            TokenKind::Dot => "'.'".into(),
            TokenKind::Plus => "'+'".into(),
            TokenKind::Minus => "'-'".into(),
            TokenKind::Star => "'*'".into(),
            TokenKind::Slash => "'/'".into(),
            TokenKind::Lt => "'<'".into(),
            TokenKind::Le => "'<='".into(),
            TokenKind::Gt => "'>'".into(),
            TokenKind::Ge => "'>='".into(),
            TokenKind::EqEq => "'=='".into(),
            TokenKind::Ne => "'!='".into(),
            TokenKind::Comment(_) => "comment".into(),
            TokenKind::Newline => "end of line".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}

fn lex_error(pos: Pos, message: impl Into<String>) -> Diagnostic {
    Diagnostic::new(Phase::Lex, pos, DiagnosticCode::Syntax, message)
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos::new(line, col);
        let mut advance = 1;
        let kind = match c {
            '\n' => {
                tokens.push(Token { kind: TokenKind::Newline, pos });
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
                continue;
            }
            '#' => {
                let start = i + 1;
                let mut end = start;
                while end < chars.len() && chars[end] != '\n' {
                    end += 1;
                }
                let text: String = chars[start..end].iter().filter(|&&c| c != '\r').collect();
                advance = end - i;
                TokenKind::Comment(text)
            }
            '"' => {
                let mut text = String::new();
                let mut j = i + 1;
                loop {
                    match chars.get(j) {
                        None | Some('\n') => {
                            return Err(lex_error(pos, "unterminated string literal"));
                        }
                        Some('"') => break,
                        Some('\\') => match chars.get(j + 1) {
                            Some('"') => {
                                text.push('"');
                                j += 2;
                            }
                            Some('\\') => {
                                text.push('\\');
                                j += 2;
                            }
                            other => {
                                let shown = other.map(|c| c.to_string()).unwrap_or_default();
                                return Err(lex_error(
                                    Pos::new(line, col + (j - i)),
                                    format!("unsupported escape '\\{shown}' in string literal"),
                                ));
                            }
                        },
                        Some(&ch) => {
                            text.push(ch);
                            j += 1;
                        }
                    }
                }
                advance = j + 1 - i;
                TokenKind::Str(text)
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j < chars.len() && chars[j] == '.' {
                    if chars.get(j + 1).is_some_and(|c| c.is_ascii_digit()) {
                        j += 1;
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                    } else if !chars.get(j + 1).is_some_and(|c| c.is_ascii_alphabetic()) {
                        return Err(lex_error(pos, "expected a digit after '.' in number literal"));
                    }
                }
                let text: String = chars[i..j].iter().collect();
                advance = j - i;
                TokenKind::Number(text.parse().map_err(|_| lex_error(pos, format!("invalid number '{text}'")))?)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                advance = j - i;
                match word.as_str() {
                    "if" => TokenKind::If,
                    "else" => TokenKind::Else,
                    "def" => TokenKind::Def,
                    "end" => TokenKind::End,
                    "true" => TokenKind::True,
                    "false" => TokenKind::False,
                    _ => TokenKind::Ident(word),
                }
            }
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            ',' => TokenKind::Comma,
            ':' => TokenKind::Colon,
            '.' => TokenKind::Dot,
            '+' => TokenKind::Plus,
            '-' => TokenKind::Minus,
            '*' => TokenKind::Star,
            '/' => TokenKind::Slash,
            '<' | '>' | '=' | '!' => {
                let next_eq = chars.get(i + 1) == Some(&'=');
                if next_eq {
                    advance = 2;
                }
                match (c, next_eq) {
                    ('<', true) => TokenKind::Le,
                    ('<', false) => TokenKind::Lt,
                    ('>', true) => TokenKind::Ge,
                    ('>', false) => TokenKind::Gt,
                    ('=', true) => TokenKind::EqEq,
                    ('=', false) => TokenKind::Assign,
                    ('!', true) => TokenKind::Ne,
                    _ => return Err(lex_error(pos, "unexpected character '!'; use '!=' for inequality")),
                }
            }
            other => {
                return Err(lex_error(pos, format!("unexpected character '{other}'")));
            }
        };
        tokens.push(Token { kind, pos });
        i += advance;
        col += advance;
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        pos: Pos::new(line, col),
    });
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn lexes_call_with_positions() {
        let toks = tokenize("pick(\"block1\")").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Ident("pick".into()));
        assert_eq!(toks[2].kind, TokenKind::Str("block1".into()));
        assert_eq!(toks[2].pos, Pos::new(1, 6));
        assert_eq!(toks[3].pos, Pos::new(1, 14));
    }

    #[test]
    fn lexes_operators_and_comments() {
        assert_eq!(
            kinds("a <= 1.5 # note\nb != c"),
            vec![
                TokenKind::Ident("a".into()),
                TokenKind::Le,
                TokenKind::Number(1.5),
                TokenKind::Comment(" note".into()),
                TokenKind::Newline,
                TokenKind::Ident("b".into()),
                TokenKind::Ne,
                TokenKind::Ident("c".into()),
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn number_followed_by_attribute() {
        assert_eq!(
            kinds("1.x"),
            vec![
                TokenKind::Number(1.0),
                TokenKind::Dot,
                TokenKind::Ident("x".into()),
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn lex_errors_report_position() {
        let d = tokenize("x = \"abc").unwrap_err();
        assert_eq!((d.phase, d.line, d.column), (Phase::Lex, 1, 5));
        let d = tokenize("ok()\n  @").unwrap_err();
        assert_eq!((d.line, d.column), (2, 3));
        assert!(tokenize("1.").is_err());
    }
}
