//! Lexical analysis.
//!
//! Scanning happens in two passes. The first pass splits the source into raw
//! words, literals and punctuation. The second pass fuses multi-word keyword
//! phrases (longest match first), then drops the optional function words
//! (`the`, `a`, `an`, a stray `of`, and `list` right before `[`).

use std::fmt;

use thiserror::Error;

use crate::span::Span;

pub const MAX_IDENT_LEN: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Let,
    Be,
    If,
    ElseIf,
    Else,
    EndIf,
    While,
    EndWhile,
    ForEach,
    In,
    EndFor,
    Print,
    Add,
    To,
    Plus,
    Minus,
    Times,
    DividedBy,
    Modulo,
    Is,
    IsEqualTo,
    GreaterThan,
    LessThan,
    SumOf,
    LengthOf,
    Reversed,
    List,
    True,
    False,
}

impl Keyword {
    pub fn text(self) -> &'static str {
        match self {
            Keyword::Let => "let",
            Keyword::Be => "be",
            Keyword::If => "if",
            Keyword::ElseIf => "else if",
            Keyword::Else => "else",
            Keyword::EndIf => "end if",
            Keyword::While => "while",
            Keyword::EndWhile => "end while",
            Keyword::ForEach => "for each",
            Keyword::In => "in",
            Keyword::EndFor => "end for",
            Keyword::Print => "print",
            Keyword::Add => "add",
            Keyword::To => "to",
            Keyword::Plus => "plus",
            Keyword::Minus => "minus",
            Keyword::Times => "times",
            Keyword::DividedBy => "divided by",
            Keyword::Modulo => "modulo",
            Keyword::Is => "is",
            Keyword::IsEqualTo => "is equal to",
            Keyword::GreaterThan => "greater than",
            Keyword::LessThan => "less than",
            Keyword::SumOf => "sum of",
            Keyword::LengthOf => "length of",
            Keyword::Reversed => "reversed",
            Keyword::List => "list",
            Keyword::True => "true",
            Keyword::False => "false",
        }
    }
}

impl fmt::Display for Keyword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.text())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PronounWord {
    It,
    Them,
    This,
    That,
}

impl PronounWord {
    pub fn text(self) -> &'static str {
        match self {
            PronounWord::It => "it",
            PronounWord::Them => "them",
            PronounWord::This => "this",
            PronounWord::That => "that",
        }
    }

    fn from_lower(word: &str) -> Option<PronounWord> {
        Some(match word {
            "it" => PronounWord::It,
            "them" => PronounWord::Them,
            "this" => PronounWord::This,
            "that" => PronounWord::That,
            _ => return None,
        })
    }
}

impl fmt::Display for PronounWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.text())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Punct {
    Period,
    Comma,
    Colon,
    LBracket,
    RBracket,
}

impl Punct {
    pub fn text(self) -> &'static str {
        match self {
            Punct::Period => ".",
            Punct::Comma => ",",
            Punct::Colon => ":",
            Punct::LBracket => "[",
            Punct::RBracket => "]",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident,
    Int(i64),
    /// String literal contents, without the quotes.
    Str(String),
    Pronoun(PronounWord),
    Punct(Punct),
}

impl TokenKind {
    pub fn class_name(&self) -> &'static str {
        match self {
            TokenKind::Keyword(_) => "KEYWORD",
            TokenKind::Ident => "IDENT",
            TokenKind::Int(_) => "INT",
            TokenKind::Str(_) => "STR",
            TokenKind::Pronoun(_) => "PRONOUN",
            TokenKind::Punct(_) => "PUNCT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Exact source slice the token was read from.
    pub lexeme: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    pub source_id: String,
}

impl TokenStream {
    /// One token per line: `KIND<TAB>lexeme<TAB>line:col-endcol`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for tok in &self.tokens {
            let lexeme = tok
                .lexeme
                .replace('\\', "\\\\")
                .replace('\n', "\\n")
                .replace('\r', "\\r")
                .replace('\t', "\\t");
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                tok.kind.class_name(),
                lexeme,
                tok.span
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct LexError {
    pub message: String,
    pub span: Span,
}

/// Words that are only meaningful inside a fused phrase.
const FRAGMENTS: &[(&str, &str)] = &[
    ("end", "end if / end while / end for"),
    ("each", "for each"),
    ("for", "for each"),
    ("equal", "is equal to"),
    ("greater", "greater than"),
    ("less", "less than"),
    ("than", "greater than / less than"),
    ("divided", "divided by"),
    ("by", "divided by"),
    ("sum", "sum of"),
    ("length", "length of"),
];

const NOISE: &[&str] = &["the", "a", "an"];

/// Multi-word phrases, longest first so that matching is greedy.
const PHRASES: &[(&[&str], Keyword)] = &[
    (&["is", "greater", "than"], Keyword::GreaterThan),
    (&["is", "less", "than"], Keyword::LessThan),
    (&["is", "equal", "to"], Keyword::IsEqualTo),
    (&["greater", "than"], Keyword::GreaterThan),
    (&["less", "than"], Keyword::LessThan),
    (&["sum", "of"], Keyword::SumOf),
    (&["length", "of"], Keyword::LengthOf),
    (&["divided", "by"], Keyword::DividedBy),
    (&["for", "each"], Keyword::ForEach),
    (&["end", "if"], Keyword::EndIf),
    (&["end", "while"], Keyword::EndWhile),
    (&["end", "for"], Keyword::EndFor),
    (&["else", "if"], Keyword::ElseIf),
];

fn single_keyword(word: &str) -> Option<Keyword> {
    Some(match word {
        "let" => Keyword::Let,
        "be" => Keyword::Be,
        "if" => Keyword::If,
        "else" => Keyword::Else,
        "while" => Keyword::While,
        "in" => Keyword::In,
        "print" => Keyword::Print,
        "add" => Keyword::Add,
        "to" => Keyword::To,
        "plus" => Keyword::Plus,
        "minus" => Keyword::Minus,
        "times" => Keyword::Times,
        "modulo" => Keyword::Modulo,
        "is" => Keyword::Is,
        "reversed" => Keyword::Reversed,
        "list" => Keyword::List,
        "true" => Keyword::True,
        "false" => Keyword::False,
        _ => return None,
    })
}

/// Whether `word` (any case) belongs to the language vocabulary, i.e. cannot
/// be an identifier.
pub fn is_reserved(word: &str) -> bool {
    let lower = word.to_ascii_lowercase();
    single_keyword(&lower).is_some()
        || PronounWord::from_lower(&lower).is_some()
        || NOISE.contains(&lower.as_str())
        || lower == "of"
        || FRAGMENTS.iter().any(|(w, _)| *w == lower)
}

#[derive(Debug, Clone)]
enum RawKind {
    Word,
    Int(i64),
    Str(String),
    Punct(Punct),
}

#[derive(Debug, Clone)]
struct Raw {
    kind: RawKind,
    span: Span,
}

struct Scanner<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Scanner<'a> {
    fn new(src: &'a str) -> Self {
        Scanner {
            src,
            chars: src.char_indices().collect(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.pos + n).map(|&(_, c)| c)
    }

    fn offset(&self) -> usize {
        self.chars.get(self.pos).map_or(self.src.len(), |&(i, _)| i)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    /// Span from a saved start position up to the last consumed character.
    fn span_from(&self, start: usize, line: u32, col: u32, last_line: u32, last_col: u32) -> Span {
        Span {
            start,
            end: self.offset(),
            line,
            col,
            end_line: last_line,
            end_col: last_col,
        }
    }

    fn scan(mut self) -> Result<Vec<Raw>, LexError> {
        let mut out = Vec::new();
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            if c == '#' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            let start = self.offset();
            let (line, col) = (self.line, self.col);
            let mut last = (line, col);
            let kind = if c.is_ascii_alphabetic() {
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        last = (self.line, self.col);
                        self.bump();
                    } else {
                        break;
                    }
                }
                RawKind::Word
            } else if c.is_ascii_digit()
                || (c == '-' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit()))
            {
                last = (self.line, self.col);
                self.bump();
                while let Some(c) = self.peek() {
                    if c.is_ascii_digit() {
                        last = (self.line, self.col);
                        self.bump();
                    } else {
                        break;
                    }
                }
                let text = &self.src[start..self.offset()];
                match text.parse::<i64>() {
                    Ok(v) => RawKind::Int(v),
                    Err(_) => {
                        return Err(LexError {
                            message: format!("integer literal `{text}` does not fit in 64 bits"),
                            span: self.span_from(start, line, col, last.0, last.1),
                        })
                    }
                }
            } else if c == '"' {
                self.bump();
                let content_start = self.offset();
                loop {
                    match self.peek() {
                        Some('"') => {
                            let content = self.src[content_start..self.offset()].to_string();
                            last = (self.line, self.col);
                            self.bump();
                            break RawKind::Str(content);
                        }
                        Some('\n') | None => {
                            return Err(LexError {
                                message: "unterminated string literal".to_string(),
                                span: Span {
                                    start,
                                    end: start + 1,
                                    line,
                                    col,
                                    end_line: line,
                                    end_col: col,
                                },
                            });
                        }
                        Some(_) => {
                            self.bump();
                        }
                    }
                }
            } else {
                let punct = match c {
                    '.' => Punct::Period,
                    ',' => Punct::Comma,
                    ':' => Punct::Colon,
                    '[' => Punct::LBracket,
                    ']' => Punct::RBracket,
                    other => {
                        self.bump();
                        return Err(LexError {
                            message: format!("unexpected character `{other}`"),
                            span: self.span_from(start, line, col, line, col),
                        });
                    }
                };
                self.bump();
                RawKind::Punct(punct)
            };
            out.push(Raw {
                kind,
                span: self.span_from(start, line, col, last.0, last.1),
            });
        }
        Ok(out)
    }
}

/// Lowercase every vocabulary word outside string literals and comments.
/// All other bytes are preserved, so line and column positions are unchanged.
pub fn normalize(source: &str) -> Result<String, LexError> {
    let raws = Scanner::new(source).scan()?;
    let mut out = source.to_string();
    for raw in raws {
        if let RawKind::Word = raw.kind {
            let word = raw.span.slice(source);
            if is_reserved(word) {
                // ASCII lowercasing keeps byte length
                out.replace_range(raw.span.start..raw.span.end, &word.to_ascii_lowercase());
            }
        }
    }
    Ok(out)
}

pub fn tokenize(source: &str) -> Result<TokenStream, LexError> {
    tokenize_named(source, "<input>")
}

pub fn tokenize_named(source: &str, source_id: &str) -> Result<TokenStream, LexError> {
    let raws = Scanner::new(source).scan()?;
    let lower: Vec<Option<String>> = raws
        .iter()
        .map(|r| match r.kind {
            RawKind::Word => Some(r.span.slice(source).to_ascii_lowercase()),
            _ => None,
        })
        .collect();

    let mut tokens = Vec::with_capacity(raws.len());
    let mut i = 0;
    'outer: while i < raws.len() {
        let raw = &raws[i];
        match &raw.kind {
            RawKind::Word => {
                for (words, kw) in PHRASES {
                    let matches = words
                        .iter()
                        .enumerate()
                        .all(|(k, w)| lower.get(i + k).and_then(|l| l.as_deref()) == Some(*w));
                    if matches {
                        let span = raw.span.to(raws[i + words.len() - 1].span);
                        tokens.push(Token {
                            kind: TokenKind::Keyword(*kw),
                            lexeme: span.slice(source).to_string(),
                            span,
                        });
                        i += words.len();
                        continue 'outer;
                    }
                }
                let word = lower[i].as_deref().unwrap_or_default();
                let next_is_lbracket = matches!(
                    raws.get(i + 1).map(|r| &r.kind),
                    Some(RawKind::Punct(Punct::LBracket))
                );
                if NOISE.contains(&word) || word == "of" || (word == "list" && next_is_lbracket) {
                    i += 1;
                    continue;
                }
                let lexeme = raw.span.slice(source).to_string();
                let kind = if let Some(kw) = single_keyword(word) {
                    TokenKind::Keyword(kw)
                } else if let Some(p) = PronounWord::from_lower(word) {
                    TokenKind::Pronoun(p)
                } else if let Some((_, phrase)) = FRAGMENTS.iter().find(|(w, _)| *w == word) {
                    return Err(LexError {
                        message: format!("`{lexeme}` is reserved; it is only valid in `{phrase}`"),
                        span: raw.span,
                    });
                } else {
                    if lexeme.len() > MAX_IDENT_LEN {
                        return Err(LexError {
                            message: format!("identifier is longer than {MAX_IDENT_LEN} bytes"),
                            span: raw.span,
                        });
                    }
                    TokenKind::Ident
                };
                tokens.push(Token {
                    kind,
                    lexeme,
                    span: raw.span,
                });
            }
            RawKind::Int(v) => tokens.push(Token {
                kind: TokenKind::Int(*v),
                lexeme: raw.span.slice(source).to_string(),
                span: raw.span,
            }),
            RawKind::Str(s) => tokens.push(Token {
                kind: TokenKind::Str(s.clone()),
                lexeme: raw.span.slice(source).to_string(),
                span: raw.span,
            }),
            RawKind::Punct(p) => tokens.push(Token {
                kind: TokenKind::Punct(*p),
                lexeme: raw.span.slice(source).to_string(),
                span: raw.span,
            }),
        }
        i += 1;
    }
    Ok(TokenStream {
        tokens,
        source_id: source_id.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src)
            .unwrap()
            .tokens
            .into_iter()
            .map(|t| t.kind)
            .collect()
    }

    fn kw(k: Keyword) -> TokenKind {
        TokenKind::Keyword(k)
    }

    fn p(p: Punct) -> TokenKind {
        TokenKind::Punct(p)
    }

    #[test]
    fn normalize_lowercases_keywords_only() {
        assert_eq!(normalize("Let X be 5.").unwrap(), "let X be 5.");
        assert_eq!(
            normalize("Print \"Average exceeds ten\".").unwrap(),
            "print \"Average exceeds ten\"."
        );
        assert_eq!(normalize("").unwrap(), "");
        assert_eq!(
            normalize("IF It IS Greater THAN 3: # Keep This").unwrap(),
            "if it is greater than 3: # Keep This"
        );
    }

    #[test]
    fn normalize_reports_unterminated_string() {
        let err = normalize("Print \"oops.").unwrap_err();
        assert_eq!(err.span.line, 1);
        assert_eq!(err.span.col, 7);
    }

    #[test]
    fn list_literal_drops_article_and_noun() {
        let toks = tokenize("Let numbers be the list [8, 12, 15, 9, 6].").unwrap();
        let got: Vec<_> = toks.tokens.iter().map(|t| t.kind.clone()).collect();
        assert_eq!(
            got,
            vec![
                kw(Keyword::Let),
                TokenKind::Ident,
                kw(Keyword::Be),
                p(Punct::LBracket),
                TokenKind::Int(8),
                p(Punct::Comma),
                TokenKind::Int(12),
                p(Punct::Comma),
                TokenKind::Int(15),
                p(Punct::Comma),
                TokenKind::Int(9),
                p(Punct::Comma),
                TokenKind::Int(6),
                p(Punct::RBracket),
                p(Punct::Period),
            ]
        );
        assert_eq!(toks.tokens[1].lexeme, "numbers");
    }

    #[test]
    fn sum_of_is_fused() {
        assert_eq!(
            kinds("Let total be sum of numbers."),
            vec![
                kw(Keyword::Let),
                TokenKind::Ident,
                kw(Keyword::Be),
                kw(Keyword::SumOf),
                TokenKind::Ident,
                p(Punct::Period)
            ]
        );
    }

    #[test]
    fn relational_phrase_is_longest_match() {
        assert_eq!(
            kinds("If it is greater than 10:"),
            vec![
                kw(Keyword::If),
                TokenKind::Pronoun(PronounWord::It),
                kw(Keyword::GreaterThan),
                TokenKind::Int(10),
                p(Punct::Colon)
            ]
        );
        assert_eq!(kinds("x greater than y")[1], kw(Keyword::GreaterThan));
        assert_eq!(kinds("x is equal to y")[1], kw(Keyword::IsEqualTo));
        assert_eq!(kinds("x is y")[1], kw(Keyword::Is));
    }

    #[test]
    fn fused_phrase_spans_whole_phrase() {
        let toks = tokenize("If x is  greater than 3:").unwrap();
        let t = &toks.tokens[2];
        assert_eq!(t.lexeme, "is  greater than");
        assert_eq!((t.span.line, t.span.col, t.span.end_col), (1, 6, 21));
    }

    #[test]
    fn add_to_are_separate_keywords() {
        assert_eq!(
            kinds("Add it to fibs."),
            vec![
                kw(Keyword::Add),
                TokenKind::Pronoun(PronounWord::It),
                kw(Keyword::To),
                TokenKind::Ident,
                p(Punct::Period)
            ]
        );
    }

    #[test]
    fn block_terminators_and_else_if() {
        assert_eq!(
            kinds("End if. End while. End for. Else if Else For each"),
            vec![
                kw(Keyword::EndIf),
                p(Punct::Period),
                kw(Keyword::EndWhile),
                p(Punct::Period),
                kw(Keyword::EndFor),
                p(Punct::Period),
                kw(Keyword::ElseIf),
                kw(Keyword::Else),
                kw(Keyword::ForEach),
            ]
        );
    }

    #[test]
    fn stray_of_is_dropped_but_list_elsewhere_is_reserved() {
        assert_eq!(kinds("x of y"), vec![TokenKind::Ident, TokenKind::Ident]);
        assert_eq!(kinds("the list"), vec![kw(Keyword::List)]);
    }

    #[test]
    fn stray_fragment_is_an_error() {
        let err = tokenize("Let x be 3 greater 2.").unwrap_err();
        assert!(err.message.contains("greater than"), "{}", err.message);
        assert_eq!(err.span.col, 12);
    }

    #[test]
    fn keywords_are_case_insensitive_identifiers_are_not() {
        let toks = tokenize("LET Total BE 1.").unwrap();
        assert_eq!(toks.tokens[0].kind, kw(Keyword::Let));
        assert_eq!(toks.tokens[1].lexeme, "Total");
        assert_eq!(toks.tokens[2].kind, kw(Keyword::Be));
    }

    #[test]
    fn comments_are_stripped() {
        assert_eq!(
            kinds("Print 1. # referent(it) = total\nPrint 2."),
            vec![
                kw(Keyword::Print),
                TokenKind::Int(1),
                p(Punct::Period),
                kw(Keyword::Print),
                TokenKind::Int(2),
                p(Punct::Period)
            ]
        );
    }

    #[test]
    fn negative_and_out_of_range_integers() {
        assert_eq!(kinds("-5")[0], TokenKind::Int(-5));
        assert_eq!(kinds("-9223372036854775808")[0], TokenKind::Int(i64::MIN));
        assert!(tokenize("9223372036854775808").is_err());
    }

    #[test]
    fn unknown_punctuation_is_an_error() {
        let err = tokenize("Let x be 1;").unwrap_err();
        assert_eq!((err.span.line, err.span.col), (1, 11));
        let err = tokenize("Print 2 - x.").unwrap_err();
        assert_eq!(err.span.col, 9);
    }

    #[test]
    fn string_literal_keeps_contents() {
        let toks = tokenize("Print \"The List is IT\".").unwrap();
        assert_eq!(toks.tokens[1].kind, TokenKind::Str("The List is IT".into()));
        assert_eq!(toks.tokens[1].lexeme, "\"The List is IT\"");
    }

    #[test]
    fn identifier_length_limit() {
        let ok = "x".repeat(MAX_IDENT_LEN);
        assert!(tokenize(&ok).is_ok());
        let too_long = "x".repeat(MAX_IDENT_LEN + 1);
        assert!(tokenize(&too_long).is_err());
    }

    #[test]
    fn multiline_positions() {
        let toks = tokenize("Let x be 1.\n  Print x.").unwrap();
        let print = &toks.tokens[5];
        assert_eq!(
            (print.span.line, print.span.col, print.span.end_col),
            (2, 3, 7)
        );
    }

    #[test]
    fn dump_format() {
        let toks = tokenize("Print it.").unwrap();
        assert_eq!(
            toks.dump(),
            "KEYWORD\tPrint\t1:1-5\nPRONOUN\tit\t1:7-8\nPUNCT\t.\t1:9-9\n"
        );
    }
}
