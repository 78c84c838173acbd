//! Tokenizer for the module format. Newlines are tokens: the instruction
//! grammar is line-oriented, so the parser needs to see them.

use super::{ParseError, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Punct(char),
    Newline,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Punct(c) => format!("`{c}`"),
            Tok::Newline => "end of line".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

const PUNCT: &[char] = &['=', '{', '}', '(', ')', '[', ']', ':', ',', '.', '#'];

pub(crate) fn lex(source: &str) -> (Vec<Token>, Vec<ParseError>) {
    let mut tokens = Vec::new();
    let mut errors = Vec::new();
    let mut line = 1u32;
    let mut column = 1u32;
    let mut chars = source.chars().peekable();

    let push = |tok: Tok, line: u32, column: u32, length: u32, tokens: &mut Vec<Token>| {
        tokens.push(Token { tok, span: SourceSpan { line, column, length } });
    };

    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                push(Tok::Newline, line, column, 1, &mut tokens);
                chars.next();
                line += 1;
                column = 1;
            }
            ' ' | '\t' | '\r' => {
                chars.next();
                column += 1;
            }
            ';' => {
                // Comment to end of line; the newline itself is kept.
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    column += 1;
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = column;
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        ident.push(c);
                        chars.next();
                        column += 1;
                    } else {
                        break;
                    }
                }
                let len = ident.len() as u32;
                push(Tok::Ident(ident), line, start, len, &mut tokens);
            }
            c if c.is_ascii_digit() || c == '-' => {
                let start = column;
                let mut text = String::new();
                text.push(c);
                chars.next();
                column += 1;
                if c == '-' && !chars.peek().is_some_and(|d| d.is_ascii_digit()) {
                    errors.push(ParseError {
                        span: SourceSpan { line, column: start, length: 1 },
                        expected: "a digit after `-`".to_string(),
                        found: "`-`".to_string(),
                    });
                    continue;
                }
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() {
                        text.push(d);
                        chars.next();
                        column += 1;
                    } else {
                        break;
                    }
                }
                let len = text.len() as u32;
                match text.parse::<i64>() {
                    Ok(value) => push(Tok::Int(value), line, start, len, &mut tokens),
                    Err(_) => errors.push(ParseError {
                        span: SourceSpan { line, column: start, length: len },
                        expected: "an integer that fits in 64 bits".to_string(),
                        found: format!("`{text}`"),
                    }),
                }
            }
            c if PUNCT.contains(&c) => {
                push(Tok::Punct(c), line, column, 1, &mut tokens);
                chars.next();
                column += 1;
            }
            other => {
                errors.push(ParseError {
                    span: SourceSpan { line, column, length: 1 },
                    expected: "a token".to_string(),
                    found: format!("`{other}`"),
                });
                chars.next();
                column += 1;
            }
        }
    }
    tokens.push(Token { tok: Tok::Eof, span: SourceSpan { line, column, length: 1 } });
    (tokens, errors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(source: &str) -> Vec<Tok> {
        let (tokens, errors) = lex(source);
        assert!(errors.is_empty(), "{errors:?}");
        tokens.into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn lexes_instruction_line() {
        let toks = kinds("  const x, -42 #7\n");
        assert_eq!(
            toks,
            vec![
                Tok::Ident("const".into()),
                Tok::Ident("x".into()),
                Tok::Punct(','),
                Tok::Int(-42),
                Tok::Punct('#'),
                Tok::Int(7),
                Tok::Newline,
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn comments_run_to_end_of_line() {
        let toks = kinds("a ; b c d\ne\n");
        assert_eq!(
            toks,
            vec![
                Tok::Ident("a".into()),
                Tok::Newline,
                Tok::Ident("e".into()),
                Tok::Newline,
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn spans_are_one_based() {
        let (tokens, _) = lex("ab cd\n  ef\n");
        assert_eq!((tokens[0].span.line, tokens[0].span.column), (1, 1));
        assert_eq!((tokens[1].span.line, tokens[1].span.column), (1, 4));
        assert_eq!((tokens[3].span.line, tokens[3].span.column), (2, 3));
    }

    #[test]
    fn stray_characters_are_reported() {
        let (_, errors) = lex("a @ b\n");
        assert_eq!(errors.len(), 1);
        assert_eq!(errors[0].found, "`@`");
    }
}
