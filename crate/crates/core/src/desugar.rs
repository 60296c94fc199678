//! Surface-to-core rewriting.
//!
//! | surface          | core                              |
//! |------------------|-----------------------------------|
//! | `sum of E`       | `Reduce(plus, 0, E)`              |
//! | `length of E`    | `Builtin(len, E)`                 |
//! | `E reversed`     | `Builtin(rev, E)`                 |
//! | `Add E to x.`    | `Append(x, E)`                    |
//!
//! Every rewritten node keeps the span of the node it replaces.

use crate::ast::{BinOp, Builtin, Expr, ExprKind, Program, Stmt, StmtKind};

/// A program containing no surface-only constructs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoreProgram(Program);

impl CoreProgram {
    pub fn program(&self) -> &Program {
        &self.0
    }

    pub fn into_program(self) -> Program {
        self.0
    }

    pub fn dump(&self) -> String {
        self.0.dump()
    }

    /// Wrap a program already known to be core.
    pub(crate) fn from_core(p: Program) -> CoreProgram {
        debug_assert!(is_core(&p));
        CoreProgram(p)
    }
}

pub fn desugar(program: &Program) -> CoreProgram {
    CoreProgram(Program {
        stmts: program.stmts.iter().map(stmt).collect(),
    })
}

pub fn is_core(program: &Program) -> bool {
    fn block(stmts: &[Stmt]) -> bool {
        stmts.iter().all(|s| {
            let mut ok = !matches!(s.kind, StmtKind::AddTo { .. });
            for e in s.exprs() {
                e.walk(&mut |e| ok &= !e.is_sugar());
            }
            ok && s.blocks().into_iter().all(block)
        })
    }
    block(&program.stmts)
}

fn block(stmts: &[Stmt]) -> Vec<Stmt> {
    stmts.iter().map(stmt).collect()
}

fn stmt(s: &Stmt) -> Stmt {
    let kind = match &s.kind {
        StmtKind::Let { name, value } => StmtKind::Let {
            name: name.clone(),
            value: expr(value),
        },
        StmtKind::If {
            cond,
            then_block,
            else_block,
        } => StmtKind::If {
            cond: expr(cond),
            then_block: block(then_block),
            else_block: else_block.as_deref().map(block),
        },
        StmtKind::While { cond, body } => StmtKind::While {
            cond: expr(cond),
            body: block(body),
        },
        StmtKind::ForEach { var, iter, body } => StmtKind::ForEach {
            var: var.clone(),
            iter: expr(iter),
            body: block(body),
        },
        StmtKind::Print(e) => StmtKind::Print(expr(e)),
        StmtKind::AddTo { elem, target } | StmtKind::Append { target, elem } => StmtKind::Append {
            target: target.clone(),
            elem: expr(elem),
        },
    };
    Stmt { kind, span: s.span }
}

fn expr(e: &Expr) -> Expr {
    let boxed = |inner: &Expr| Box::new(expr(inner));
    let kind = match &e.kind {
        ExprKind::Int(_)
        | ExprKind::Str(_)
        | ExprKind::Bool(_)
        | ExprKind::Var(_)
        | ExprKind::Pronoun { .. } => e.kind.clone(),
        ExprKind::List(items) => ExprKind::List(items.iter().map(expr).collect()),
        ExprKind::Binary { op, lhs, rhs } => ExprKind::Binary {
            op: *op,
            lhs: boxed(lhs),
            rhs: boxed(rhs),
        },
        ExprKind::Relation { op, lhs, rhs } => ExprKind::Relation {
            op: *op,
            lhs: boxed(lhs),
            rhs: boxed(rhs),
        },
        ExprKind::SumOf(list) => ExprKind::Reduce {
            op: BinOp::Plus,
            init: Box::new(Expr::new(ExprKind::Int(0), e.span)),
            list: boxed(list),
        },
        ExprKind::LengthOf(x) => ExprKind::Builtin {
            func: Builtin::Len,
            args: vec![expr(x)],
        },
        ExprKind::Reversed(x) => ExprKind::Builtin {
            func: Builtin::Rev,
            args: vec![expr(x)],
        },
        ExprKind::Reduce { op, init, list } => ExprKind::Reduce {
            op: *op,
            init: boxed(init),
            list: boxed(list),
        },
        ExprKind::Builtin { func, args } => ExprKind::Builtin {
            func: *func,
            args: args.iter().map(expr).collect(),
        },
    };
    Expr {
        kind,
        span: e.span,
        ty: e.ty.clone(),
    }
}
