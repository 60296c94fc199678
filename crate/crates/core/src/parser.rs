//! Recursive-descent parser.
//!
//! The parser never backtracks; at most two tokens of lookahead are inspected.
//! While parsing it keeps a [`ReferentStack`] of binding sites and annotates
//! each pronoun with the binding on top of the stack.

use thiserror::Error;

use crate::ast::{BinOp, Expr, ExprKind, Name, Program, Referent, RelOp, Stmt, StmtKind};
use crate::lexer::{Keyword, PronounWord, Punct, Token, TokenKind, TokenStream};
use crate::span::Span;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct ParseError {
    pub message: String,
    pub span: Span,
    /// What the parser would have accepted at the failure point.
    pub expected: Vec<String>,
    /// Token text of the sentence being parsed when the error occurred.
    pub sentence: String,
    /// The error is at end of input, so more text could complete the program.
    pub at_eof: bool,
}

/// Recent binding sites, most recent last.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReferentStack {
    entries: Vec<(String, Span)>,
}

impl ReferentStack {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&self, name: &str, site: Span) -> ReferentStack {
        let mut next = self.clone();
        next.push_mut(name, site);
        next
    }

    pub fn push_mut(&mut self, name: &str, site: Span) {
        self.entries.push((name.to_string(), site));
    }

    /// Every pronoun resolves to the top of the stack; the stack is left as is.
    pub fn resolve(&self, _pronoun: PronounWord) -> Referent {
        match self.entries.last() {
            Some((name, site)) => Referent::Resolved {
                name: name.clone(),
                site: *site,
            },
            None => Referent::Unresolved,
        }
    }

    pub fn top(&self) -> Option<&str> {
        self.entries.last().map(|(n, _)| n.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Names from top (most recent) to bottom.
    pub fn names_top_first(&self) -> Vec<&str> {
        self.entries.iter().rev().map(|(n, _)| n.as_str()).collect()
    }
}

pub fn parse(tokens: &TokenStream) -> Result<Program, ParseError> {
    parse_with_stack(tokens, ReferentStack::new()).map(|(p, _)| p)
}

/// Parse with a pre-populated referent stack; returns the final stack too.
pub fn parse_with_stack(
    tokens: &TokenStream,
    stack: ReferentStack,
) -> Result<(Program, ReferentStack), ParseError> {
    let mut p = Parser {
        toks: &tokens.tokens,
        pos: 0,
        stack,
        sentence_start: 0,
    };
    let mut stmts = Vec::new();
    while !p.at_end() {
        stmts.push(p.stmt()?);
    }
    Ok((Program { stmts }, p.stack))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum BlockEnd {
    If,
    While,
    For,
}

impl BlockEnd {
    fn keyword(self) -> Keyword {
        match self {
            BlockEnd::If => Keyword::EndIf,
            BlockEnd::While => Keyword::EndWhile,
            BlockEnd::For => Keyword::EndFor,
        }
    }

    fn stops_at(self, kind: &TokenKind) -> bool {
        match kind {
            TokenKind::Keyword(Keyword::EndIf | Keyword::EndWhile | Keyword::EndFor) => true,
            TokenKind::Keyword(Keyword::Else | Keyword::ElseIf) => self == BlockEnd::If,
            _ => false,
        }
    }
}

struct Parser<'t> {
    toks: &'t [Token],
    pos: usize,
    stack: ReferentStack,
    sentence_start: usize,
}

impl<'t> Parser<'t> {
    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&'t Token> {
        self.toks.get(self.pos)
    }

    fn peek_kind(&self) -> Option<&'t TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn bump(&mut self) -> &'t Token {
        let t = &self.toks[self.pos];
        self.pos += 1;
        t
    }

    fn eof_span(&self) -> Span {
        match self.toks.last() {
            Some(t) => Span {
                start: t.span.end,
                end: t.span.end,
                line: t.span.end_line,
                col: t.span.end_col + 1,
                end_line: t.span.end_line,
                end_col: t.span.end_col + 1,
            },
            None => Span {
                line: 1,
                col: 1,
                end_line: 1,
                end_col: 1,
                ..Span::default()
            },
        }
    }

    fn sentence_text(&self) -> String {
        let mut words = Vec::new();
        for t in &self.toks[self.sentence_start.min(self.toks.len())..] {
            words.push(t.lexeme.as_str());
            if matches!(t.kind, TokenKind::Punct(Punct::Period | Punct::Colon)) {
                break;
            }
        }
        words.join(" ")
    }

    fn error_here(&self, message: impl Into<String>, expected: &[&str]) -> ParseError {
        let (span, at_eof) = match self.peek() {
            Some(t) => (t.span, false),
            None => (self.eof_span(), true),
        };
        ParseError {
            message: message.into(),
            span,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            sentence: self.sentence_text(),
            at_eof,
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let list = expected
            .iter()
            .map(|e| format!("`{e}`"))
            .collect::<Vec<_>>()
            .join(", ");
        let found = match self.peek() {
            Some(t) => format!("`{}`", t.lexeme),
            None => "end of input".to_string(),
        };
        let msg = if expected.len() == 1 {
            format!("expected {list}, found {found}")
        } else {
            format!("expected one of {list}, found {found}")
        };
        self.error_here(msg, expected)
    }

    fn eat_keyword(&mut self, kw: Keyword) -> Option<&'t Token> {
        if self.peek_kind() == Some(&TokenKind::Keyword(kw)) {
            Some(self.bump())
        } else {
            None
        }
    }

    fn expect_keyword(&mut self, kw: Keyword) -> Result<&'t Token, ParseError> {
        self.eat_keyword(kw)
            .ok_or_else(|| self.unexpected(&[kw.text()]))
    }

    fn eat_punct(&mut self, p: Punct) -> Option<&'t Token> {
        if self.peek_kind() == Some(&TokenKind::Punct(p)) {
            Some(self.bump())
        } else {
            None
        }
    }

    fn expect_punct(&mut self, p: Punct) -> Result<&'t Token, ParseError> {
        self.eat_punct(p)
            .ok_or_else(|| self.unexpected(&[p.text()]))
    }

    fn expect_period(&mut self) -> Result<&'t Token, ParseError> {
        match self.eat_punct(Punct::Period) {
            Some(t) => Ok(t),
            None => {
                let mut err = self.unexpected(&["."]);
                if !err.at_eof {
                    err.message = format!("statement is missing its final period; {}", err.message);
                } else {
                    err.message = "statement is missing its final period".to_string();
                }
                Err(err)
            }
        }
    }

    fn ident(&mut self) -> Result<Name, ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => {
                self.bump();
                Ok(Name {
                    text: t.lexeme.clone(),
                    span: t.span,
                })
            }
            Some(t) if matches!(t.kind, TokenKind::Keyword(_) | TokenKind::Pronoun(_)) => Err(self
                .error_here(
                    format!(
                        "`{}` is a reserved word and cannot name a variable",
                        t.lexeme
                    ),
                    &["identifier"],
                )),
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    const STMT_STARTS: &'static [&'static str] =
        &["let", "print", "add", "if", "while", "for each"];

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        self.sentence_start = self.pos;
        let Some(tok) = self.peek() else {
            return Err(self.unexpected(Self::STMT_STARTS));
        };
        let start = tok.span;
        match tok.kind {
            TokenKind::Keyword(Keyword::Let) => {
                self.bump();
                let name = self.ident()?;
                self.expect_keyword(Keyword::Be)?;
                let value = self.expr()?;
                let end = self.expect_period()?;
                self.stack.push_mut(&name.text, name.span);
                Ok(Stmt {
                    kind: StmtKind::Let { name, value },
                    span: start.to(end.span),
                })
            }
            TokenKind::Keyword(Keyword::Print) => {
                self.bump();
                let e = self.expr()?;
                let end = self.expect_period()?;
                Ok(Stmt {
                    kind: StmtKind::Print(e),
                    span: start.to(end.span),
                })
            }
            TokenKind::Keyword(Keyword::Add) => {
                self.bump();
                let elem = self.expr()?;
                self.expect_keyword(Keyword::To)?;
                let target = self.ident()?;
                let end = self.expect_period()?;
                Ok(Stmt {
                    kind: StmtKind::AddTo { elem, target },
                    span: start.to(end.span),
                })
            }
            TokenKind::Keyword(Keyword::If) => {
                self.bump();
                self.if_rest(start)
            }
            TokenKind::Keyword(Keyword::While) => {
                self.bump();
                let cond = self.expr()?;
                self.expect_punct(Punct::Colon)?;
                let body = self.block(BlockEnd::While, start)?;
                let end = self.close_block(BlockEnd::While, start)?;
                Ok(Stmt {
                    kind: StmtKind::While { cond, body },
                    span: start.to(end),
                })
            }
            TokenKind::Keyword(Keyword::ForEach) => {
                self.bump();
                let var = self.ident()?;
                self.expect_keyword(Keyword::In)?;
                let iter = self.expr()?;
                self.expect_punct(Punct::Colon)?;
                self.stack.push_mut(&var.text, var.span);
                let body = self.block(BlockEnd::For, start)?;
                let end = self.close_block(BlockEnd::For, start)?;
                Ok(Stmt {
                    kind: StmtKind::ForEach { var, iter, body },
                    span: start.to(end),
                })
            }
            _ => Err(self.unexpected(Self::STMT_STARTS)),
        }
    }

    /// Everything after `if` (or `else if`) up to and including `end if.`.
    fn if_rest(&mut self, start: Span) -> Result<Stmt, ParseError> {
        let cond = self.expr()?;
        self.expect_punct(Punct::Colon)?;
        let then_block = self.block(BlockEnd::If, start)?;
        let (else_block, end) = match self.peek_kind() {
            Some(TokenKind::Keyword(Keyword::ElseIf)) => {
                self.sentence_start = self.pos;
                let elif_start = self.bump().span;
                let nested = self.if_rest(elif_start)?;
                let end = nested.span;
                (Some(vec![nested]), end)
            }
            Some(TokenKind::Keyword(Keyword::Else)) => {
                self.sentence_start = self.pos;
                self.bump();
                self.expect_punct(Punct::Colon)?;
                let block = self.block(BlockEnd::If, start)?;
                if matches!(
                    self.peek_kind(),
                    Some(TokenKind::Keyword(Keyword::Else | Keyword::ElseIf))
                ) {
                    return Err(self.unexpected(&["end if"]));
                }
                let end = self.close_block(BlockEnd::If, start)?;
                (Some(block), end)
            }
            _ => (None, self.close_block(BlockEnd::If, start)?),
        };
        Ok(Stmt {
            kind: StmtKind::If {
                cond,
                then_block,
                else_block,
            },
            span: start.to(end),
        })
    }

    fn block(&mut self, end: BlockEnd, opened_at: Span) -> Result<Vec<Stmt>, ParseError> {
        let mut stmts = Vec::new();
        loop {
            match self.peek_kind() {
                None => {
                    let mut err = self.error_here(
                        format!(
                            "unterminated block opened at line {}; expected `{}.`",
                            opened_at.line,
                            end.keyword().text()
                        ),
                        &[end.keyword().text()],
                    );
                    err.at_eof = true;
                    return Err(err);
                }
                Some(k) if end.stops_at(k) => return Ok(stmts),
                Some(_) => stmts.push(self.stmt()?),
            }
        }
    }

    fn close_block(&mut self, end: BlockEnd, _opened_at: Span) -> Result<Span, ParseError> {
        self.sentence_start = self.pos;
        self.expect_keyword(end.keyword())?;
        Ok(self.expect_period()?.span)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.additive()?;
        let op = match self.peek_kind() {
            Some(TokenKind::Keyword(Keyword::Is)) => RelOp::Is,
            Some(TokenKind::Keyword(Keyword::IsEqualTo)) => RelOp::IsEqualTo,
            Some(TokenKind::Keyword(Keyword::GreaterThan)) => RelOp::GreaterThan,
            Some(TokenKind::Keyword(Keyword::LessThan)) => RelOp::LessThan,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.additive()?;
        let span = lhs.span.to(rhs.span);
        Ok(Expr::new(
            ExprKind::Relation {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
            span,
        ))
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Keyword(Keyword::Plus)) => BinOp::Plus,
                Some(TokenKind::Keyword(Keyword::Minus)) => BinOp::Minus,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.prefix()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Keyword(Keyword::Times)) => BinOp::Times,
                Some(TokenKind::Keyword(Keyword::DividedBy)) => BinOp::DividedBy,
                Some(TokenKind::Keyword(Keyword::Modulo)) => BinOp::Modulo,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.prefix()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        let wrap: fn(Box<Expr>) -> ExprKind = match self.peek_kind() {
            Some(TokenKind::Keyword(Keyword::SumOf)) => ExprKind::SumOf,
            Some(TokenKind::Keyword(Keyword::LengthOf)) => ExprKind::LengthOf,
            _ => return self.postfix(),
        };
        let start = self.bump().span;
        let operand = self.prefix()?;
        let span = start.to(operand.span);
        Ok(Expr::new(wrap(Box::new(operand)), span))
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.atom()?;
        while let Some(t) = self.eat_keyword(Keyword::Reversed) {
            let span = e.span.to(t.span);
            e = Expr::new(ExprKind::Reversed(Box::new(e)), span);
        }
        Ok(e)
    }

    const EXPR_STARTS: &'static [&'static str] = &[
        "integer",
        "string",
        "true",
        "false",
        "identifier",
        "pronoun",
        "[",
        "sum of",
        "length of",
    ];

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek() else {
            return Err(self.unexpected(Self::EXPR_STARTS));
        };
        let kind = match &tok.kind {
            TokenKind::Int(v) => ExprKind::Int(*v),
            TokenKind::Str(s) => ExprKind::Str(s.clone()),
            TokenKind::Keyword(Keyword::True) => ExprKind::Bool(true),
            TokenKind::Keyword(Keyword::False) => ExprKind::Bool(false),
            TokenKind::Ident => ExprKind::Var(tok.lexeme.clone()),
            TokenKind::Pronoun(word) => ExprKind::Pronoun {
                word: *word,
                referent: self.stack.resolve(*word),
            },
            TokenKind::Punct(Punct::LBracket) => return self.list_literal(),
            _ => return Err(self.unexpected(Self::EXPR_STARTS)),
        };
        self.bump();
        Ok(Expr::new(kind, tok.span))
    }

    fn list_literal(&mut self) -> Result<Expr, ParseError> {
        let open = self.bump().span;
        let mut items = Vec::new();
        if let Some(close) = self.eat_punct(Punct::RBracket) {
            return Ok(Expr::new(ExprKind::List(items), open.to(close.span)));
        }
        loop {
            items.push(self.expr()?);
            if self.eat_punct(Punct::Comma).is_some() {
                continue;
            }
            match self.eat_punct(Punct::RBracket) {
                Some(close) => return Ok(Expr::new(ExprKind::List(items), open.to(close.span))),
                None => return Err(self.unexpected(&[",", "]"])),
            }
        }
    }
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    let span = lhs.span.to(rhs.span);
    Expr::new(
        ExprKind::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        },
        span,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexer::tokenize;

    fn parse_src(src: &str) -> Result<Program, ParseError> {
        parse(&tokenize(src).unwrap())
    }

    fn pronoun_referents(p: &Program) -> Vec<Referent> {
        let mut out = Vec::new();
        p.walk_exprs(&mut |e| {
            if let ExprKind::Pronoun { referent, .. } = &e.kind {
                out.push(referent.clone());
            }
        });
        out
    }

    const AVERAGE: &str = "Let numbers be the list [8, 12, 15, 9, 6].
Let total be sum of numbers.
Let count be length of numbers.
Let average be total divided by count.
If it is greater than 10:
    Print \"Average exceeds ten\".
End if.
";

    #[test]
    fn average_sample_parses_with_pronoun_bound_to_average() {
        let p = parse_src(AVERAGE).unwrap();
        assert_eq!(p.stmts.len(), 5);
        let refs = pronoun_referents(&p);
        assert_eq!(refs.len(), 1);
        assert_eq!(refs[0].name(), Some("average"));
        assert!(p
            .dump()
            .contains("(if (greater-than (pronoun it average) 10)"));
    }

    #[test]
    fn orphan_pronoun_is_unresolved() {
        let p = parse_src("Print it.").unwrap();
        assert_eq!(pronoun_referents(&p), vec![Referent::Unresolved]);
    }

    #[test]
    fn rebinding_parses() {
        let p = parse_src("Let x be 1. Let x be 2.").unwrap();
        assert_eq!(p.stmts.len(), 2);
    }

    #[test]
    fn stack_push_and_resolve() {
        let s = ReferentStack::new();
        let s1 = s.push("numbers", Span::default());
        assert_eq!(s1.names_top_first(), vec!["numbers"]);
        let s2 = s1.push("total", Span::default());
        assert_eq!(s2.names_top_first(), vec!["total", "numbers"]);
        let s3 = s2.push("total", Span::default());
        assert_eq!(s3.names_top_first(), vec!["total", "total", "numbers"]);
        // earlier stacks untouched
        assert_eq!(s1.len(), 1);

        let full = ["numbers", "total", "count", "average"]
            .iter()
            .fold(ReferentStack::new(), |s, n| s.push(n, Span::default()));
        let before = full.clone();
        assert_eq!(full.resolve(PronounWord::It).name(), Some("average"));
        assert_eq!(full, before);
        assert_eq!(
            ReferentStack::new().resolve(PronounWord::It),
            Referent::Unresolved
        );
        assert_eq!(s1.resolve(PronounWord::Them).name(), Some("numbers"));
    }

    #[test]
    fn pronoun_never_sees_its_own_binding() {
        let p = parse_src("Let x be 1. Let y be it plus 1. Print it.").unwrap();
        let names: Vec<_> = pronoun_referents(&p)
            .iter()
            .map(|r| r.name().unwrap().to_string())
            .collect();
        assert_eq!(names, vec!["x", "y"]);
    }

    #[test]
    fn foreach_pushes_loop_variable() {
        let p = parse_src("Let xs be [1]. For each x in xs: Print it. End for.").unwrap();
        assert_eq!(pronoun_referents(&p)[0].name(), Some("x"));
    }

    #[test]
    fn block_bindings_stay_on_stack() {
        let (_, stack) = parse_with_stack(
            &tokenize("Let c be true. If c: Let y be 1. Else: Let z be 2. End if.").unwrap(),
            ReferentStack::new(),
        )
        .unwrap();
        assert_eq!(stack.names_top_first(), vec!["z", "y", "c"]);
    }

    #[test]
    fn else_if_chain_nests() {
        let p = parse_src(
            "Let i be 3. If i is 1: Print 1. Else if i is 2: Print 2. Else: Print 3. End if.",
        )
        .unwrap();
        let StmtKind::If {
            else_block: Some(e),
            ..
        } = &p.stmts[1].kind
        else {
            panic!("expected if");
        };
        assert!(matches!(
            e[0].kind,
            StmtKind::If {
                else_block: Some(_),
                ..
            }
        ));
    }

    #[test]
    fn precedence() {
        let p = parse_src("Print 1 plus 2 times 3 is 7.").unwrap();
        assert!(
            p.dump().contains("(print (is (plus 1 (times 2 3)) 7))"),
            "{}",
            p.dump()
        );
        let p = parse_src("Print sum of xs plus 1.").unwrap();
        assert!(
            p.dump().contains("(print (plus (sum-of (var xs)) 1))"),
            "{}",
            p.dump()
        );
        let p = parse_src("Print length of xs reversed.").unwrap();
        assert!(
            p.dump().contains("(length-of (reversed (var xs)))"),
            "{}",
            p.dump()
        );
        let p = parse_src("Print 10 minus 3 minus 2.").unwrap();
        assert!(p.dump().contains("(minus (minus 10 3) 2)"), "{}", p.dump());
    }

    #[test]
    fn missing_period_is_reported_with_sentence() {
        let err = parse_src("Let x be 5 Print x.").unwrap_err();
        assert!(
            err.message.contains("missing its final period"),
            "{}",
            err.message
        );
        assert_eq!(err.span.col, 12);
        assert_eq!(err.sentence, "Let x be 5 Print x .");
        assert!(!err.at_eof);
    }

    #[test]
    fn unterminated_block() {
        let err = parse_src("While true:\n Print 1.").unwrap_err();
        assert!(
            err.message.contains("unterminated block"),
            "{}",
            err.message
        );
        assert!(err.at_eof);
    }

    #[test]
    fn wrong_terminator() {
        let err = parse_src("While true: Print 1. End if.").unwrap_err();
        assert_eq!(err.expected, vec!["end while"]);
    }

    #[test]
    fn expected_set_is_listed() {
        let err = parse_src("Let x be .").unwrap_err();
        assert!(err.expected.contains(&"identifier".to_string()));
        assert!(err.message.starts_with("expected one of"));
    }

    #[test]
    fn reserved_word_as_variable() {
        let err = parse_src("Let list be 1.").unwrap_err();
        assert!(err.message.contains("reserved"), "{}", err.message);
    }

    #[test]
    fn bare_expression_is_rejected() {
        assert!(parse_src("2 plus 3.").is_err());
    }

    #[test]
    fn empty_program() {
        assert_eq!(parse_src("").unwrap().stmts.len(), 0);
    }

    #[test]
    fn parse_is_pure() {
        let toks = tokenize(AVERAGE).unwrap();
        assert_eq!(parse(&toks).unwrap(), parse(&toks).unwrap());
    }
}
