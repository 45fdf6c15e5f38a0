use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    /// Identifiers, kind paths, parameter values.
    Word(String),
    Str(String),
    Punct(&'static str),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "`{w}`"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const PUNCT: [&str; 13] = ["->", "{", "}", "(", ")", "[", "]", ":", ";", ",", "=", "|", "*"];

fn word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '/'
}

/// Splits `text` into tokens; `Err` carries (line, col, message).
pub(crate) fn lex(text: &str) -> Result<Vec<Token>, (usize, usize, String)> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let (lno, col) = (li + 1, i + 1);
            if c.is_whitespace() {
                i += 1;
            } else if c == '#' {
                break;
            } else if word_char(c) {
                let start = i;
                while i < chars.len() && word_char(chars[i]) {
                    i += 1;
                }
                out.push(Token { tok: Tok::Word(chars[start..i].iter().collect()), line: lno, col });
            } else if c == '"' {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err((lno, col, "unterminated string".into())),
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') => {
                            match chars.get(i + 1) {
                                Some('n') => s.push('\n'),
                                Some(&e @ ('"' | '\\')) => s.push(e),
                                _ => return Err((lno, i + 1, "unknown escape".into())),
                            }
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                out.push(Token { tok: Tok::Str(s), line: lno, col });
            } else {
                let rest: String = chars[i..].iter().take(2).collect();
                match PUNCT.iter().find(|p| rest.starts_with(**p)) {
                    Some(p) => {
                        out.push(Token { tok: Tok::Punct(p), line: lno, col });
                        i += p.len();
                    }
                    None => return Err((lno, col, format!("unexpected character `{c}`"))),
                }
            }
        }
    }
    let line = text.lines().count().max(1);
    out.push(Token { tok: Tok::End, line, col: 1 });
    Ok(out)
}

/// Quotes a note for output.
pub(crate) fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
