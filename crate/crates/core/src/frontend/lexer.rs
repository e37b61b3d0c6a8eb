use std::fmt;

use super::diag::{DiagKind, Diagnostic, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    // keywords
    Varset,
    System,
    Over,
    With,
    Init,
    Prop,
    Main,
    Control,
    Async,
    As,
    Ctl,
    Ltl,
    Where,
    True,
    False,
    Bool,
    IntKw,
    StringKw,
    SetKw,
    In,
    And,
    Or,
    Not,
    Conforms,
    // punctuation
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    ColonColon,
    Arrow,
    Iff,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Amp,
    Pipe,
    Bang,
    At,
    Dot,
    DotDot,
    Plus,
    Minus,
    // formula glyphs
    NotIn,
    Succ,
    EmptySet,
    ForAll,
    Exists,
    NExists,
    Diamond,
    BoxOp,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "identifier `{s}`"),
            Tok::Str(s) => return write!(f, "string \"{s}\""),
            Tok::Int(i) => return write!(f, "integer {i}"),
            Tok::Varset => "`varset`",
            Tok::System => "`system`",
            Tok::Over => "`over`",
            Tok::With => "`with`",
            Tok::Init => "`init`",
            Tok::Prop => "`prop`",
            Tok::Main => "`main`",
            Tok::Control => "`control`",
            Tok::Async => "`async`",
            Tok::As => "`as`",
            Tok::Ctl => "`ctl`",
            Tok::Ltl => "`ltl`",
            Tok::Where => "`where`",
            Tok::True => "`true`",
            Tok::False => "`false`",
            Tok::Bool => "`bool`",
            Tok::IntKw => "`int`",
            Tok::StringKw => "`string`",
            Tok::SetKw => "`set`",
            Tok::In => "`in`",
            Tok::And => "`and`",
            Tok::Or => "`or`",
            Tok::Not => "`not`",
            Tok::Conforms => "`conforms`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBracket => "`[`",
            Tok::RBracket => "`]`",
            Tok::Comma => "`,`",
            Tok::Colon => "`:`",
            Tok::ColonColon => "`::`",
            Tok::Arrow => "`->`",
            Tok::Iff => "`<->`",
            Tok::Eq => "`=`",
            Tok::Ne => "`!=`",
            Tok::Lt => "`<`",
            Tok::Le => "`<=`",
            Tok::Gt => "`>`",
            Tok::Ge => "`>=`",
            Tok::Amp => "`&`",
            Tok::Pipe => "`|`",
            Tok::Bang => "`!`",
            Tok::At => "`@`",
            Tok::Dot => "`.`",
            Tok::DotDot => "`..`",
            Tok::Plus => "`+`",
            Tok::Minus => "`-`",
            Tok::NotIn => "`∉`",
            Tok::Succ => "`≻`",
            Tok::EmptySet => "`∅`",
            Tok::ForAll => "`∀`",
            Tok::Exists => "`∃`",
            Tok::NExists => "`∄`",
            Tok::Diamond => "`◇`",
            Tok::BoxOp => "`□`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "varset" => Tok::Varset,
        "system" => Tok::System,
        "over" => Tok::Over,
        "with" => Tok::With,
        "init" => Tok::Init,
        "prop" => Tok::Prop,
        "main" => Tok::Main,
        "control" => Tok::Control,
        "async" => Tok::Async,
        "as" => Tok::As,
        "ctl" => Tok::Ctl,
        "ltl" => Tok::Ltl,
        "where" => Tok::Where,
        "true" | "TRUE" => Tok::True,
        "false" | "FALSE" => Tok::False,
        "bool" | "boolean" => Tok::Bool,
        "int" => Tok::IntKw,
        "string" => Tok::StringKw,
        "set" => Tok::SetKw,
        "in" => Tok::In,
        "and" => Tok::And,
        "or" => Tok::Or,
        "not" => Tok::Not,
        "conforms" => Tok::Conforms,
        _ => return None,
    })
}

/// Splits source text into tokens; the last token is always [`Tok::Eof`].
pub fn tokenize(src: &str, file: u32) -> Result<Vec<Token>, Diagnostic> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |start: usize, end: usize, msg: String| {
        Diagnostic::error(DiagKind::Lex, Some(Span::new(file, start, end)), msg)
    };
    while i < src.len() {
        let c = src[i..].chars().next().unwrap();
        let start = i;
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if src[i..].starts_with("//") {
            i = src[i..].find('\n').map_or(src.len(), |n| i + n);
            continue;
        }
        if src[i..].starts_with("/*") {
            match src[i + 2..].find("*/") {
                Some(n) => i = i + 2 + n + 2,
                None => return Err(err(start, src.len(), "unterminated block comment".into())),
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < src.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &src[start..i];
            let tok = keyword(word).unwrap_or_else(|| Tok::Ident(word.to_string()));
            out.push(Token { tok, span: Span::new(file, start, i) });
            continue;
        }
        if c.is_ascii_digit() {
            while i < src.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n = src[start..i]
                .parse::<i64>()
                .map_err(|_| err(start, i, format!("integer literal `{}` out of range", &src[start..i])))?;
            out.push(Token { tok: Tok::Int(n), span: Span::new(file, start, i) });
            continue;
        }
        if c == '"' {
            i += 1;
            let body_start = i;
            loop {
                match bytes.get(i) {
                    None | Some(b'\n') => {
                        return Err(err(start, i, "unterminated string literal".into()))
                    }
                    Some(b'"') => break,
                    Some(_) => i += 1,
                }
            }
            let body = src[body_start..i].to_string();
            i += 1;
            out.push(Token { tok: Tok::Str(body), span: Span::new(file, start, i) });
            continue;
        }
        let rest = &src[i..];
        let (tok, len) = if rest.starts_with("<->") {
            (Tok::Iff, 3)
        } else if rest.starts_with("->") {
            (Tok::Arrow, 2)
        } else if rest.starts_with("::") {
            (Tok::ColonColon, 2)
        } else if rest.starts_with("..") {
            (Tok::DotDot, 2)
        } else if rest.starts_with("!=") {
            (Tok::Ne, 2)
        } else if rest.starts_with("<=") {
            (Tok::Le, 2)
        } else if rest.starts_with(">=") {
            (Tok::Ge, 2)
        } else if rest.starts_with("<>") {
            (Tok::Diamond, 2)
        } else if rest.starts_with("==") {
            (Tok::Eq, 2)
        } else if rest.starts_with("&&") {
            (Tok::Amp, 2)
        } else if rest.starts_with("||") {
            (Tok::Pipe, 2)
        } else {
            let t = match c {
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                ',' => Tok::Comma,
                ':' => Tok::Colon,
                '=' => Tok::Eq,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                '&' => Tok::Amp,
                '|' => Tok::Pipe,
                '!' => Tok::Bang,
                '@' => Tok::At,
                '.' => Tok::Dot,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '¬' => Tok::Bang,
                '∧' => Tok::Amp,
                '∨' => Tok::Pipe,
                '→' | '⇒' => Tok::Arrow,
                '↔' | '⇔' => Tok::Iff,
                '≠' => Tok::Ne,
                '≤' => Tok::Le,
                '≥' => Tok::Ge,
                '∈' => Tok::In,
                '∉' => Tok::NotIn,
                '≻' => Tok::Succ,
                '∅' => Tok::EmptySet,
                '∀' => Tok::ForAll,
                '∃' => Tok::Exists,
                '∄' => Tok::NExists,
                '◇' | '◊' => Tok::Diamond,
                '□' => Tok::BoxOp,
                other => {
                    return Err(err(start, start + other.len_utf8(), format!("illegal character `{other}`")))
                }
            };
            (t, c.len_utf8())
        };
        i += len;
        out.push(Token { tok, span: Span::new(file, start, i) });
    }
    out.push(Token { tok: Tok::Eof, span: Span::new(file, src.len(), src.len()) });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src, 0).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn varset_header() {
        assert_eq!(
            kinds("varset V { x :: string }"),
            vec![
                Tok::Varset,
                Tok::Ident("V".into()),
                Tok::LBrace,
                Tok::Ident("x".into()),
                Tok::ColonColon,
                Tok::StringKw,
                Tok::RBrace,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn prop_block_carries_string_literal() {
        let toks = kinds("prop isDone { state = \"DONE\" }");
        assert!(toks.contains(&Tok::Str("DONE".into())));
        assert_eq!(toks[0], Tok::Prop);
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(kinds("a // x\n/* y\n z */ b"), vec![
            Tok::Ident("a".into()),
            Tok::Ident("b".into()),
            Tok::Eof
        ]);
    }

    #[test]
    fn illegal_character_reports_position() {
        let e = tokenize("x -> #", 0).unwrap_err();
        assert_eq!(e.kind, DiagKind::Lex);
        assert_eq!(e.span.unwrap().start, 5);
    }

    #[test]
    fn unterminated_string() {
        let e = tokenize("prop p { s = \"DONE }", 0).unwrap_err();
        assert!(e.message.contains("unterminated"));
    }

    #[test]
    fn unicode_glyphs_map_to_ascii_tokens() {
        assert_eq!(
            kinds("∄◇ ¬ ∧ ∨ ⇒ ≠ ∈ ∉ ≻ ∅ ∀□"),
            vec![
                Tok::NExists,
                Tok::Diamond,
                Tok::Bang,
                Tok::Amp,
                Tok::Pipe,
                Tok::Arrow,
                Tok::Ne,
                Tok::In,
                Tok::NotIn,
                Tok::Succ,
                Tok::EmptySet,
                Tok::ForAll,
                Tok::BoxOp,
                Tok::Eof
            ]
        );
    }
}
