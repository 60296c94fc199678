//! Syntax trees.
//!
//! One tree type serves both the surface language and the core language. The
//! surface-only variants (`SumOf`, `LengthOf`, `Reversed`, `AddTo`) are removed
//! by desugaring; the core-only variants (`Reduce`, `Builtin`, `Append`) are
//! introduced by it.

use std::fmt::{self, Write as _};

use crate::lexer::PronounWord;
use crate::span::Span;
use crate::types::Type;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Name {
    pub text: String,
    pub span: Span,
}

/// Provisional antecedent attached to a pronoun by the parser.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Referent {
    Resolved { name: String, site: Span },
    Unresolved,
}

impl Referent {
    pub fn name(&self) -> Option<&str> {
        match self {
            Referent::Resolved { name, .. } => Some(name),
            Referent::Unresolved => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Plus,
    Minus,
    Times,
    DividedBy,
    Modulo,
}

impl BinOp {
    pub fn text(self) -> &'static str {
        match self {
            BinOp::Plus => "plus",
            BinOp::Minus => "minus",
            BinOp::Times => "times",
            BinOp::DividedBy => "divided-by",
            BinOp::Modulo => "modulo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelOp {
    Is,
    IsEqualTo,
    GreaterThan,
    LessThan,
}

impl RelOp {
    pub fn text(self) -> &'static str {
        match self {
            RelOp::Is => "is",
            RelOp::IsEqualTo => "is-equal-to",
            RelOp::GreaterThan => "greater-than",
            RelOp::LessThan => "less-than",
        }
    }

    pub fn is_equality(self) -> bool {
        matches!(self, RelOp::Is | RelOp::IsEqualTo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Len,
    Rev,
}

impl Builtin {
    pub fn text(self) -> &'static str {
        match self {
            Builtin::Len => "len",
            Builtin::Rev => "rev",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Int(i64),
    Str(String),
    Bool(bool),
    List(Vec<Expr>),
    Var(String),
    Pronoun {
        word: PronounWord,
        referent: Referent,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Relation {
        op: RelOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    SumOf(Box<Expr>),
    LengthOf(Box<Expr>),
    Reversed(Box<Expr>),
    Reduce {
        op: BinOp,
        init: Box<Expr>,
        list: Box<Expr>,
    },
    Builtin {
        func: Builtin,
        args: Vec<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
    /// Filled in by type inference.
    pub ty: Option<Type>,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Expr {
        Expr {
            kind,
            span,
            ty: None,
        }
    }

    pub fn is_sugar(&self) -> bool {
        matches!(
            self.kind,
            ExprKind::SumOf(_) | ExprKind::LengthOf(_) | ExprKind::Reversed(_)
        )
    }

    /// Direct subexpressions, left to right.
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Int(_)
            | ExprKind::Str(_)
            | ExprKind::Bool(_)
            | ExprKind::Var(_)
            | ExprKind::Pronoun { .. } => vec![],
            ExprKind::List(items) => items.iter().collect(),
            ExprKind::Binary { lhs, rhs, .. } | ExprKind::Relation { lhs, rhs, .. } => {
                vec![lhs, rhs]
            }
            ExprKind::SumOf(e) | ExprKind::LengthOf(e) | ExprKind::Reversed(e) => vec![e],
            ExprKind::Reduce { init, list, .. } => vec![init, list],
            ExprKind::Builtin { args, .. } => args.iter().collect(),
        }
    }

    /// Pre-order walk over this expression and all subexpressions.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Depth of the expression tree; a leaf has depth 1.
    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Let {
        name: Name,
        value: Expr,
    },
    /// `else if` chains are nested `If`s inside `else_block`.
    If {
        cond: Expr,
        then_block: Vec<Stmt>,
        else_block: Option<Vec<Stmt>>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    ForEach {
        var: Name,
        iter: Expr,
        body: Vec<Stmt>,
    },
    Print(Expr),
    AddTo {
        elem: Expr,
        target: Name,
    },
    /// Core form of `AddTo`: the `append` builtin in statement position.
    Append {
        target: Name,
        elem: Expr,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

impl Stmt {
    /// Expressions directly owned by this statement (not by nested blocks).
    pub fn exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Let { value, .. } => vec![value],
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::ForEach { iter, .. } => vec![iter],
            StmtKind::Print(e) => vec![e],
            StmtKind::AddTo { elem, .. } | StmtKind::Append { elem, .. } => vec![elem],
        }
    }

    pub fn blocks(&self) -> Vec<&[Stmt]> {
        match &self.kind {
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                let mut v: Vec<&[Stmt]> = vec![then_block];
                if let Some(e) = else_block {
                    v.push(e);
                }
                v
            }
            StmtKind::While { body, .. } | StmtKind::ForEach { body, .. } => vec![body],
            _ => vec![],
        }
    }

    /// Visit every expression in this statement and nested blocks.
    pub fn walk_exprs<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        for e in self.exprs() {
            e.walk(f);
        }
        for b in self.blocks() {
            for s in b {
                s.walk_exprs(f);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub stmts: Vec<Stmt>,
}

impl Program {
    pub fn walk_exprs<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        for s in &self.stmts {
            s.walk_exprs(f);
        }
    }

    /// Indented s-expression dump, one statement per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        dump_block(&self.stmts, 0, &mut out);
        out
    }
}

fn dump_block(stmts: &[Stmt], indent: usize, out: &mut String) {
    for s in stmts {
        dump_stmt(s, indent, out);
    }
}

fn dump_stmt(s: &Stmt, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match &s.kind {
        StmtKind::Let { name, value } => {
            let _ = writeln!(out, "{pad}(let {} {})", name.text, SExpr(value));
        }
        StmtKind::Print(e) => {
            let _ = writeln!(out, "{pad}(print {})", SExpr(e));
        }
        StmtKind::AddTo { elem, target } => {
            let _ = writeln!(out, "{pad}(add-to {} {})", target.text, SExpr(elem));
        }
        StmtKind::Append { target, elem } => {
            let _ = writeln!(out, "{pad}(append {} {})", target.text, SExpr(elem));
        }
        StmtKind::If {
            cond,
            then_block,
            else_block,
        } => {
            let _ = writeln!(out, "{pad}(if {}", SExpr(cond));
            let _ = writeln!(out, "{pad}  (then");
            dump_block(then_block, indent + 2, out);
            let _ = writeln!(out, "{pad}  )");
            if let Some(e) = else_block {
                let _ = writeln!(out, "{pad}  (else");
                dump_block(e, indent + 2, out);
                let _ = writeln!(out, "{pad}  )");
            }
            let _ = writeln!(out, "{pad})");
        }
        StmtKind::While { cond, body } => {
            let _ = writeln!(out, "{pad}(while {}", SExpr(cond));
            dump_block(body, indent + 1, out);
            let _ = writeln!(out, "{pad})");
        }
        StmtKind::ForEach { var, iter, body } => {
            let _ = writeln!(out, "{pad}(for-each {} {}", var.text, SExpr(iter));
            dump_block(body, indent + 1, out);
            let _ = writeln!(out, "{pad})");
        }
    }
}

struct SExpr<'a>(&'a Expr);

impl fmt::Display for SExpr<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.kind {
            ExprKind::Int(v) => write!(f, "{v}"),
            ExprKind::Str(s) => write!(f, "{s:?}"),
            ExprKind::Bool(b) => write!(f, "{b}"),
            ExprKind::Var(x) => write!(f, "(var {x})"),
            ExprKind::Pronoun { word, referent } => match referent {
                Referent::Resolved { name, .. } => write!(f, "(pronoun {word} {name})"),
                Referent::Unresolved => write!(f, "(pronoun {word} unresolved)"),
            },
            ExprKind::List(items) => {
                f.write_str("(list")?;
                for i in items {
                    write!(f, " {}", SExpr(i))?;
                }
                f.write_str(")")
            }
            ExprKind::Binary { op, lhs, rhs } => {
                write!(f, "({} {} {})", op.text(), SExpr(lhs), SExpr(rhs))
            }
            ExprKind::Relation { op, lhs, rhs } => {
                write!(f, "({} {} {})", op.text(), SExpr(lhs), SExpr(rhs))
            }
            ExprKind::SumOf(e) => write!(f, "(sum-of {})", SExpr(e)),
            ExprKind::LengthOf(e) => write!(f, "(length-of {})", SExpr(e)),
            ExprKind::Reversed(e) => write!(f, "(reversed {})", SExpr(e)),
            ExprKind::Reduce { op, init, list } => {
                write!(f, "(reduce {} {} {})", op.text(), SExpr(init), SExpr(list))
            }
            ExprKind::Builtin { func, args } => {
                write!(f, "({}", func.text())?;
                for a in args {
                    write!(f, " {}", SExpr(a))?;
                }
                f.write_str(")")
            }
        }
    }
}
