use super::ast::Span;
use super::ParseError;
use crate::document::Number;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Str(String),
    Num(Number),
    /// Bare identifier, including keywords such as `and` or `true`.
    Name(String),
    /// Backtick-quoted name; never a keyword.
    Quoted(String),
    Var(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: Span,
}

const PUNCT2: [&str; 7] = ["!=", "<=", ">=", ":=", "..", "**", "~>"];
const PUNCT1: [&str; 20] = [
    ".", "[", "]", "{", "}", "(", ")", ",", ":", ";", "?", "=", "<", ">", "+", "-", "*", "/", "%",
    "&",
];

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < src.len() {
        let c = src[i..].chars().next().expect("in bounds");
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if src[i..].starts_with("/*") {
            match src[i + 2..].find("*/") {
                Some(end) => {
                    i += end + 4;
                    continue;
                }
                None => return Err(ParseError::new(Span::new(i, 2), "unterminated comment")),
            }
        }
        let start = i;
        if c == '"' || c == '\'' {
            let (s, next) = lex_string(src, i, c)?;
            out.push(Token {
                tok: Tok::Str(s),
                span: Span::new(start, next - start),
            });
            i = next;
            continue;
        }
        if c == '`' {
            let Some(end) = src[i + 1..].find('`') else {
                return Err(ParseError::new(Span::new(i, 1), "unterminated quoted name"));
            };
            let name = src[i + 1..i + 1 + end].to_string();
            i += end + 2;
            out.push(Token {
                tok: Tok::Quoted(name),
                span: Span::new(start, i - start),
            });
            continue;
        }
        if c.is_ascii_digit() {
            i = scan_number(bytes, i);
            let lexeme = &src[start..i];
            let n = Number::parse(lexeme).map_err(|e| {
                ParseError::new(Span::new(start, i - start), format!("invalid number `{lexeme}`: {e}"))
            })?;
            out.push(Token {
                tok: Tok::Num(n),
                span: Span::new(start, i - start),
            });
            continue;
        }
        if c == '$' {
            i += 1;
            if src[i..].starts_with('$') {
                i += 1;
                out.push(Token {
                    tok: Tok::Var("$".into()),
                    span: Span::new(start, 2),
                });
                continue;
            }
            let name_end = src[i..]
                .char_indices()
                .find(|(_, ch)| !is_name_char(*ch))
                .map_or(src.len(), |(j, _)| i + j);
            out.push(Token {
                tok: Tok::Var(src[i..name_end].to_string()),
                span: Span::new(start, name_end - start),
            });
            i = name_end;
            continue;
        }
        if is_name_start(c) {
            let end = src[i..]
                .char_indices()
                .find(|(_, ch)| !is_name_char(*ch))
                .map_or(src.len(), |(j, _)| i + j);
            out.push(Token {
                tok: Tok::Name(src[i..end].to_string()),
                span: Span::new(start, end - start),
            });
            i = end;
            continue;
        }
        if let Some(p) = PUNCT2.iter().find(|p| src[i..].starts_with(**p)) {
            if *p == "~>" {
                return Err(ParseError::new(
                    Span::new(i, 2),
                    "the chain operator `~>` is not supported; call the function directly",
                ));
            }
            out.push(Token {
                tok: Tok::Punct(p),
                span: Span::new(start, 2),
            });
            i += 2;
            continue;
        }
        if let Some(p) = PUNCT1.iter().find(|p| src[i..].starts_with(**p)) {
            out.push(Token {
                tok: Tok::Punct(p),
                span: Span::new(start, 1),
            });
            i += 1;
            continue;
        }
        return Err(ParseError::new(
            Span::new(i, c.len_utf8()),
            format!("unexpected character `{c}`"),
        ));
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span::new(src.len(), 0),
    });
    Ok(out)
}

fn scan_number(bytes: &[u8], mut i: usize) -> usize {
    let digits = |bytes: &[u8], mut i: usize| {
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        i
    };
    i = digits(bytes, i);
    if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
        i = digits(bytes, i + 1);
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            i = digits(bytes, j);
        }
    }
    i
}

fn lex_string(src: &str, start: usize, quote: char) -> Result<(String, usize), ParseError> {
    let mut out = String::new();
    let mut chars = src[start + 1..].char_indices();
    let at = |j: usize| start + 1 + j;
    while let Some((j, c)) = chars.next() {
        match c {
            c if c == quote => return Ok((out, at(j) + 1)),
            '\\' => {
                let Some((k, esc)) = chars.next() else { break };
                match esc {
                    '"' | '\'' | '\\' | '/' => out.push(esc),
                    'b' => out.push('\u{8}'),
                    'f' => out.push('\u{c}'),
                    'n' => out.push('\n'),
                    'r' => out.push('\r'),
                    't' => out.push('\t'),
                    'u' => {
                        let read_unit = |chars: &mut std::str::CharIndices| -> Option<u32> {
                            let hex: String = (0..4).filter_map(|_| chars.next().map(|(_, h)| h)).collect();
                            if hex.len() == 4 {
                                u32::from_str_radix(&hex, 16).ok()
                            } else {
                                None
                            }
                        };
                        let bad = || ParseError::new(Span::new(at(k) - 1, 6), "invalid unicode escape");
                        let unit = read_unit(&mut chars).ok_or_else(bad)?;
                        let code = if (0xD800..0xDC00).contains(&unit) {
                            let rest = chars.as_str();
                            if !rest.starts_with("\\u") {
                                return Err(bad());
                            }
                            chars.next();
                            chars.next();
                            let low = read_unit(&mut chars).ok_or_else(bad)?;
                            if !(0xDC00..0xE000).contains(&low) {
                                return Err(bad());
                            }
                            0x10000 + ((unit - 0xD800) << 10) + (low - 0xDC00)
                        } else {
                            unit
                        };
                        out.push(char::from_u32(code).ok_or_else(bad)?);
                    }
                    other => {
                        return Err(ParseError::new(
                            Span::new(at(k) - 1, 1 + other.len_utf8()),
                            format!("invalid escape `\\{other}`"),
                        ))
                    }
                }
            }
            c => out.push(c),
        }
    }
    Err(ParseError::new(Span::new(start, src.len() - start), "unterminated string"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn range_is_not_a_decimal() {
        assert_eq!(
            toks("1..3"),
            vec![
                Tok::Num(Number::from_i64(1)),
                Tok::Punct(".."),
                Tok::Num(Number::from_i64(3)),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn strings_and_comments() {
        assert_eq!(
            toks(r#"/* c */ 'it\'s' "é😀""#),
            vec![Tok::Str("it's".into()), Tok::Str("é😀".into()), Tok::Eof]
        );
        assert!(tokenize("\"abc").is_err());
        assert!(tokenize("/* open").is_err());
    }

    #[test]
    fn variables() {
        assert_eq!(
            toks("$ $$ $x1 `a b`"),
            vec![
                Tok::Var(String::new()),
                Tok::Var("$".into()),
                Tok::Var("x1".into()),
                Tok::Quoted("a b".into()),
                Tok::Eof
            ]
        );
    }
}
