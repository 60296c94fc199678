//! Reference interpreter.
//!
//! Two small-step machines share one value model: [`Machine`] runs the
//! typed core tree one statement rule at a time, and [`SsaMachine`] runs the
//! SSA graph one instruction at a time. Expressions inside a statement are
//! evaluated in one step.
//!
//! Printing follows Python's `print`: `True`/`False`, lists in `repr` form
//! with strings quoted inside them. Integer division and modulo round toward
//! negative infinity, as in Python; results outside 64 bits are a fault.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::ast::{BinOp, Builtin, Expr, ExprKind, Referent, RelOp, Stmt, StmtKind};
use crate::desugar::CoreProgram;
use crate::span::Span;
use crate::ssa::{BlockId, BuiltinFn, Literal, Op, Operand, SsaProgram};
use crate::types::Type;

pub const STEP_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Str(String),
    List(Vec<Value>),
}

impl Value {
    /// Whether the dynamic tag agrees with a static type.
    pub fn has_type(&self, ty: &Type) -> bool {
        match (self, ty) {
            (Value::Int(_), Type::Int)
            | (Value::Bool(_), Type::Bool)
            | (Value::Str(_), Type::Str) => true,
            (Value::List(items), Type::List(e)) => items.iter().all(|v| v.has_type(e)),
            _ => false,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Value::Int(_) => "Int",
            Value::Bool(_) => "Bool",
            Value::Str(_) => "Str",
            Value::List(_) => "List",
        }
    }

    /// Python `repr`.
    pub fn repr(&self) -> String {
        match self {
            Value::Str(s) => py_repr_str(s),
            Value::List(items) => {
                let inner: Vec<String> = items.iter().map(Value::repr).collect();
                format!("[{}]", inner.join(", "))
            }
            other => other.to_string(),
        }
    }
}

/// Python `str`, which is what `print` writes.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(true) => f.write_str("True"),
            Value::Bool(false) => f.write_str("False"),
            Value::Str(s) => f.write_str(s),
            Value::List(_) => f.write_str(&self.repr()),
        }
    }
}

/// Python's quoting rule for `repr` of a string.
pub fn py_repr_str(s: &str) -> String {
    let quote = if s.contains('\'') && !s.contains('"') {
        '"'
    } else {
        '\''
    };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(quote);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c if (c as u32) < 0x20 || c as u32 == 0x7f => {
                out.push_str(&format!("\\x{:02x}", c as u32))
            }
            c => out.push(c),
        }
    }
    out.push(quote);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FaultKind {
    DivisionByZero,
    Overflow,
    StepBudget,
    /// No rule applies: an ill-typed operation was reached.
    Stuck(String),
    /// A name was read before being written.
    Undefined(String),
    /// A stored value's tag disagrees with its static type.
    TagMismatch(String),
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaultKind::DivisionByZero => f.write_str("division by zero"),
            FaultKind::Overflow => f.write_str("integer overflow"),
            FaultKind::StepBudget => write!(f, "program did not finish within {STEP_BUDGET} steps"),
            FaultKind::Stuck(m) => write!(f, "evaluation is stuck: {m}"),
            FaultKind::Undefined(n) => write!(f, "`{n}` was read before it was written"),
            FaultKind::TagMismatch(m) => write!(f, "value does not match its static type: {m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind}")]
pub struct RuntimeFault {
    pub kind: FaultKind,
    pub span: Span,
}

impl RuntimeFault {
    /// Faults that an accepted program must never produce.
    pub fn is_internal(&self) -> bool {
        matches!(
            self.kind,
            FaultKind::Stuck(_) | FaultKind::Undefined(_) | FaultKind::TagMismatch(_)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{fault}")]
pub struct RunError {
    pub fault: RuntimeFault,
    /// Output printed before the fault.
    pub output: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Compare every stored value's tag against its static type.
    pub check_types: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunStats {
    pub steps: u64,
    pub tag_checks: u64,
    pub pronoun_reads: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub output: String,
    pub stats: RunStats,
}

fn fault(kind: FaultKind, span: Span) -> RuntimeFault {
    RuntimeFault { kind, span }
}

fn stuck(what: &str, span: Span) -> RuntimeFault {
    fault(FaultKind::Stuck(what.to_string()), span)
}

pub fn binop(op: BinOp, a: &Value, b: &Value, span: Span) -> Result<Value, RuntimeFault> {
    let (Value::Int(x), Value::Int(y)) = (a, b) else {
        return Err(stuck(
            &format!("{} on {} and {}", op.text(), a.tag(), b.tag()),
            span,
        ));
    };
    let (x, y) = (*x, *y);
    let r = match op {
        BinOp::Plus => x.checked_add(y),
        BinOp::Minus => x.checked_sub(y),
        BinOp::Times => x.checked_mul(y),
        BinOp::DividedBy | BinOp::Modulo => {
            if y == 0 {
                return Err(fault(FaultKind::DivisionByZero, span));
            }
            let (q, r) = (x.checked_div(y), x.checked_rem(y));
            match (q, r) {
                (Some(q), Some(r)) => {
                    let adjust = r != 0 && ((r < 0) != (y < 0));
                    if op == BinOp::DividedBy {
                        Some(if adjust { q - 1 } else { q })
                    } else {
                        Some(if adjust { r + y } else { r })
                    }
                }
                _ => None,
            }
        }
    };
    r.map(Value::Int)
        .ok_or_else(|| fault(FaultKind::Overflow, span))
}

pub fn relop(op: RelOp, a: &Value, b: &Value, span: Span) -> Result<Value, RuntimeFault> {
    if op.is_equality() {
        if std::mem::discriminant(a) != std::mem::discriminant(b) {
            return Err(stuck(
                &format!("comparing {} with {}", a.tag(), b.tag()),
                span,
            ));
        }
        return Ok(Value::Bool(a == b));
    }
    let (Value::Int(x), Value::Int(y)) = (a, b) else {
        return Err(stuck(
            &format!("{} on {} and {}", op.text(), a.tag(), b.tag()),
            span,
        ));
    };
    Ok(Value::Bool(if op == RelOp::GreaterThan {
        x > y
    } else {
        x < y
    }))
}

pub fn reduce(op: BinOp, init: Value, list: &Value, span: Span) -> Result<Value, RuntimeFault> {
    let Value::List(items) = list else {
        return Err(stuck(&format!("reduce over {}", list.tag()), span));
    };
    items
        .iter()
        .try_fold(init, |acc, v| binop(op, &acc, v, span))
}

pub fn builtin(f: BuiltinFn, args: &[Value], span: Span) -> Result<Value, RuntimeFault> {
    match (f, args) {
        (BuiltinFn::Len, [Value::Str(s)]) => Ok(Value::Int(s.chars().count() as i64)),
        (BuiltinFn::Len, [Value::List(l)]) => Ok(Value::Int(l.len() as i64)),
        (BuiltinFn::Rev, [Value::Str(s)]) => Ok(Value::Str(s.chars().rev().collect())),
        (BuiltinFn::Rev, [Value::List(l)]) => Ok(Value::List(l.iter().rev().cloned().collect())),
        (BuiltinFn::Index, [Value::List(l), Value::Int(i)]) => usize::try_from(*i)
            .ok()
            .and_then(|i| l.get(i))
            .cloned()
            .ok_or_else(|| stuck("index out of range", span)),
        _ => Err(stuck(
            &format!("{} applied to {} operand(s)", f.text(), args.len()),
            span,
        )),
    }
}

fn append(list: Value, elem: Value, span: Span) -> Result<Value, RuntimeFault> {
    match list {
        Value::List(mut items) => {
            items.push(elem);
            Ok(Value::List(items))
        }
        other => Err(stuck(&format!("append to {}", other.tag()), span)),
    }
}

fn check_tag(
    opts: &RunOptions,
    stats: &mut RunStats,
    v: &Value,
    ty: Option<&Type>,
    span: Span,
) -> Result<(), RuntimeFault> {
    if !opts.check_types {
        return Ok(());
    }
    stats.tag_checks += 1;
    match ty {
        Some(t) if v.has_type(t) => Ok(()),
        Some(t) => Err(fault(
            FaultKind::TagMismatch(format!("{} is not {t}", v.repr())),
            span,
        )),
        None => Err(fault(
            FaultKind::TagMismatch("expression has no static type".into()),
            span,
        )),
    }
}

/// Variable store of the core-tree machine.
pub type Store = HashMap<String, Value>;

enum Frame<'a> {
    Block {
        stmts: &'a [Stmt],
        pos: usize,
    },
    While {
        cond: &'a Expr,
        body: &'a [Stmt],
    },
    ForEach {
        var: &'a str,
        var_ty: Option<&'a Type>,
        items: Vec<Value>,
        next: usize,
        body: &'a [Stmt],
        span: Span,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Continue,
    Terminal,
}

/// Small-step machine over a typed core program.
pub struct Machine<'a> {
    frames: Vec<Frame<'a>>,
    pub store: Store,
    pub output: String,
    pub stats: RunStats,
    opts: RunOptions,
}

impl<'a> Machine<'a> {
    pub fn new(stmts: &'a [Stmt], opts: RunOptions) -> Self {
        Self::with_store(stmts, Store::new(), opts)
    }

    pub fn with_store(stmts: &'a [Stmt], store: Store, opts: RunOptions) -> Self {
        Machine {
            frames: vec![Frame::Block { stmts, pos: 0 }],
            store,
            output: String::new(),
            stats: RunStats::default(),
            opts,
        }
    }

    /// True when nothing is left to run; a finished block counts as done.
    pub fn is_terminal(&self) -> bool {
        self.frames
            .iter()
            .all(|f| matches!(f, Frame::Block { stmts, pos } if *pos == stmts.len()))
    }

    /// Statements still to run in the innermost block.
    pub fn remaining(&self) -> &'a [Stmt] {
        match self.frames.last() {
            Some(Frame::Block { stmts, pos }) => &stmts[*pos..],
            _ => &[],
        }
    }

    pub fn step(&mut self) -> Result<Step, RuntimeFault> {
        let Some(top) = self.frames.last_mut() else {
            return Ok(Step::Terminal);
        };
        self.stats.steps += 1;
        match top {
            Frame::Block { stmts, pos } => {
                let stmts: &'a [Stmt] = stmts;
                if *pos == stmts.len() {
                    self.frames.pop();
                } else {
                    let s = &stmts[*pos];
                    *pos += 1;
                    self.stmt(s)?;
                }
            }
            Frame::While { cond, body } => {
                let (cond, body): (&'a Expr, &'a [Stmt]) = (cond, body);
                if self.truth(cond)? {
                    self.frames.push(Frame::Block {
                        stmts: body,
                        pos: 0,
                    });
                } else {
                    self.frames.pop();
                }
            }
            Frame::ForEach {
                var,
                var_ty,
                items,
                next,
                body,
                span,
            } => {
                if *next < items.len() {
                    let v = items[*next].clone();
                    *next += 1;
                    let (var, var_ty, body, span): (&'a str, Option<&'a Type>, &'a [Stmt], Span) =
                        (var, *var_ty, body, *span);
                    check_tag(&self.opts, &mut self.stats, &v, var_ty, span)?;
                    self.store.insert(var.to_string(), v);
                    self.frames.push(Frame::Block {
                        stmts: body,
                        pos: 0,
                    });
                } else {
                    self.frames.pop();
                }
            }
        }
        Ok(if self.frames.is_empty() {
            Step::Terminal
        } else {
            Step::Continue
        })
    }

    pub fn run(mut self) -> Result<RunOutput, RunError> {
        loop {
            if self.stats.steps >= STEP_BUDGET {
                let span = self.current_span();
                return Err(self.fail(fault(FaultKind::StepBudget, span)));
            }
            match self.step() {
                Ok(Step::Terminal) => break,
                Ok(Step::Continue) => {}
                Err(f) => return Err(self.fail(f)),
            }
        }
        Ok(RunOutput {
            output: self.output,
            stats: self.stats,
        })
    }

    fn fail(&mut self, fault: RuntimeFault) -> RunError {
        RunError {
            fault,
            output: std::mem::take(&mut self.output),
        }
    }

    fn current_span(&self) -> Span {
        match self.frames.last() {
            Some(Frame::Block { stmts, pos }) => stmts
                .get(pos.saturating_sub(1))
                .map(|s| s.span)
                .unwrap_or_default(),
            Some(Frame::While { cond, .. }) => cond.span,
            Some(Frame::ForEach { span, .. }) => *span,
            None => Span::default(),
        }
    }

    fn truth(&mut self, cond: &Expr) -> Result<bool, RuntimeFault> {
        match self.eval(cond)? {
            Value::Bool(b) => Ok(b),
            other => Err(stuck(&format!("condition is {}", other.tag()), cond.span)),
        }
    }

    fn stmt(&mut self, s: &'a Stmt) -> Result<(), RuntimeFault> {
        match &s.kind {
            StmtKind::Let { name, value } => {
                let v = self.eval(value)?;
                self.store.insert(name.text.clone(), v);
            }
            StmtKind::Print(e) => {
                let v = self.eval(e)?;
                self.output.push_str(&v.to_string());
                self.output.push('\n');
            }
            StmtKind::Append { target, elem } | StmtKind::AddTo { elem, target } => {
                let e = self.eval(elem)?;
                let list =
                    self.store.get(&target.text).cloned().ok_or_else(|| {
                        fault(FaultKind::Undefined(target.text.clone()), target.span)
                    })?;
                let v = append(list, e, s.span)?;
                self.store.insert(target.text.clone(), v);
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                let arm = if self.truth(cond)? {
                    then_block.as_slice()
                } else {
                    else_block.as_deref().unwrap_or(&[])
                };
                self.frames.push(Frame::Block { stmts: arm, pos: 0 });
            }
            StmtKind::While { cond, body } => self.frames.push(Frame::While { cond, body }),
            StmtKind::ForEach { var, iter, body } => {
                let items = match self.eval(iter)? {
                    Value::List(items) => items,
                    other => {
                        return Err(stuck(&format!("for each over {}", other.tag()), iter.span))
                    }
                };
                self.frames.push(Frame::ForEach {
                    var: &var.text,
                    var_ty: iter.ty.as_ref().and_then(Type::elem),
                    items,
                    next: 0,
                    body,
                    span: var.span,
                });
            }
        }
        Ok(())
    }

    fn read(&mut self, name: &str, span: Span) -> Result<Value, RuntimeFault> {
        self.store
            .get(name)
            .cloned()
            .ok_or_else(|| fault(FaultKind::Undefined(name.to_string()), span))
    }

    pub fn eval(&mut self, e: &Expr) -> Result<Value, RuntimeFault> {
        let v = match &e.kind {
            ExprKind::Int(v) => Value::Int(*v),
            ExprKind::Str(s) => Value::Str(s.clone()),
            ExprKind::Bool(b) => Value::Bool(*b),
            ExprKind::Var(name) => self.read(name, e.span)?,
            ExprKind::Pronoun { referent, .. } => match referent {
                Referent::Resolved { name, .. } => {
                    self.stats.pronoun_reads += 1;
                    self.read(name, e.span)?
                }
                Referent::Unresolved => {
                    return Err(fault(FaultKind::Undefined("pronoun".into()), e.span))
                }
            },
            ExprKind::List(items) => Value::List(
                items
                    .iter()
                    .map(|i| self.eval(i))
                    .collect::<Result<_, _>>()?,
            ),
            ExprKind::Binary { op, lhs, rhs } => {
                let (a, b) = (self.eval(lhs)?, self.eval(rhs)?);
                binop(*op, &a, &b, e.span)?
            }
            ExprKind::Relation { op, lhs, rhs } => {
                let (a, b) = (self.eval(lhs)?, self.eval(rhs)?);
                relop(*op, &a, &b, e.span)?
            }
            ExprKind::Reduce { op, init, list } => {
                let (i, l) = (self.eval(init)?, self.eval(list)?);
                reduce(*op, i, &l, e.span)?
            }
            ExprKind::Builtin { func, args } => {
                let vals = args
                    .iter()
                    .map(|a| self.eval(a))
                    .collect::<Result<Vec<_>, _>>()?;
                builtin((*func).into(), &vals, e.span)?
            }
            ExprKind::SumOf(l) => {
                let l = self.eval(l)?;
                reduce(BinOp::Plus, Value::Int(0), &l, e.span)?
            }
            ExprKind::LengthOf(x) => {
                let x = self.eval(x)?;
                builtin(Builtin::Len.into(), &[x], e.span)?
            }
            ExprKind::Reversed(x) => {
                let x = self.eval(x)?;
                builtin(Builtin::Rev.into(), &[x], e.span)?
            }
        };
        check_tag(&self.opts, &mut self.stats, &v, e.ty.as_ref(), e.span)?;
        Ok(v)
    }
}

/// Run a typed core program to completion.
pub fn run_core(prog: &CoreProgram, opts: RunOptions) -> Result<RunOutput, RunError> {
    Machine::new(&prog.program().stmts, opts).run()
}

/// Small-step machine over SSA.
pub struct SsaMachine<'a> {
    prog: &'a SsaProgram,
    block: BlockId,
    index: usize,
    done: bool,
    store: Vec<Option<Value>>,
    pub output: String,
    pub stats: RunStats,
    opts: RunOptions,
}

impl<'a> SsaMachine<'a> {
    pub fn new(prog: &'a SsaProgram, opts: RunOptions) -> Self {
        SsaMachine {
            prog,
            block: BlockId(0),
            index: 0,
            done: prog.blocks.is_empty(),
            store: vec![None; prog.values.len()],
            output: String::new(),
            stats: RunStats::default(),
            opts,
        }
    }

    fn operand(&self, o: &Operand, span: Span) -> Result<Value, RuntimeFault> {
        match o {
            Operand::Lit(Literal::Int(v)) => Ok(Value::Int(*v)),
            Operand::Lit(Literal::Str(s)) => Ok(Value::Str(s.clone())),
            Operand::Lit(Literal::Bool(b)) => Ok(Value::Bool(*b)),
            Operand::Value(v) => self.store[v.0 as usize]
                .clone()
                .ok_or_else(|| fault(FaultKind::Undefined(self.prog.name(*v)), span)),
            Operand::Undef => Err(fault(FaultKind::Undefined("undef".into()), span)),
        }
    }

    fn enter(&mut self, to: BlockId, span: Span) -> Result<(), RuntimeFault> {
        let from = self.block;
        let mut vals = Vec::new();
        for phi in &self.prog.block(to).phis {
            let (_, v) = phi
                .incoming
                .iter()
                .find(|(p, _)| *p == from)
                .ok_or_else(|| stuck(&format!("phi in {to} has no edge from {from}"), span))?;
            vals.push((phi.dst, self.operand(&Operand::Value(*v), span)?));
        }
        for (dst, v) in vals {
            check_tag(
                &self.opts,
                &mut self.stats,
                &v,
                Some(&self.prog.value(dst).ty),
                span,
            )?;
            self.store[dst.0 as usize] = Some(v);
        }
        self.block = to;
        self.index = 0;
        Ok(())
    }

    pub fn step(&mut self) -> Result<Step, RuntimeFault> {
        if self.done {
            return Ok(Step::Terminal);
        }
        self.stats.steps += 1;
        let insts = &self.prog.block(self.block).insts;
        let Some(inst) = insts.get(self.index) else {
            self.done = true;
            return Ok(Step::Terminal);
        };
        let span = inst.span;
        self.index += 1;
        let result = match &inst.op {
            Op::Const(l) => Some(self.operand(&Operand::Lit(l.clone()), span)?),
            Op::Copy(a) => Some(self.operand(a, span)?),
            Op::BinOp(op, a, b) => Some(binop(
                *op,
                &self.operand(a, span)?,
                &self.operand(b, span)?,
                span,
            )?),
            Op::RelOp(op, a, b) => Some(relop(
                *op,
                &self.operand(a, span)?,
                &self.operand(b, span)?,
                span,
            )?),
            Op::Reduce { op, init, list } => Some(reduce(
                *op,
                self.operand(init, span)?,
                &self.operand(list, span)?,
                span,
            )?),
            Op::Builtin(f, args) => {
                let vals = args
                    .iter()
                    .map(|a| self.operand(a, span))
                    .collect::<Result<Vec<_>, _>>()?;
                Some(builtin(*f, &vals, span)?)
            }
            Op::ListNew(elems) => Some(Value::List(
                elems
                    .iter()
                    .map(|a| self.operand(a, span))
                    .collect::<Result<_, _>>()?,
            )),
            Op::Append { list, elem } => Some(append(
                self.operand(list, span)?,
                self.operand(elem, span)?,
                span,
            )?),
            Op::Print(a) => {
                let v = self.operand(a, span)?;
                self.output.push_str(&v.to_string());
                self.output.push('\n');
                None
            }
            Op::Br {
                cond,
                then_bb,
                else_bb,
            } => {
                let to = match self.operand(cond, span)? {
                    Value::Bool(true) => *then_bb,
                    Value::Bool(false) => *else_bb,
                    other => return Err(stuck(&format!("branch on {}", other.tag()), span)),
                };
                self.enter(to, span)?;
                None
            }
            Op::Jmp(to) => {
                self.enter(*to, span)?;
                None
            }
        };
        if let (Some(v), Some(dst)) = (result, inst.dst) {
            check_tag(&self.opts, &mut self.stats, &v, inst.ty.as_ref(), span)?;
            self.store[dst.0 as usize] = Some(v);
        }
        Ok(Step::Continue)
    }

    pub fn run(mut self) -> Result<RunOutput, RunError> {
        loop {
            let r = if self.stats.steps >= STEP_BUDGET {
                Err(fault(FaultKind::StepBudget, Span::default()))
            } else {
                self.step()
            };
            match r {
                Ok(Step::Terminal) => break,
                Ok(Step::Continue) => {}
                Err(fault) => {
                    return Err(RunError {
                        fault,
                        output: self.output,
                    })
                }
            }
        }
        Ok(RunOutput {
            output: self.output,
            stats: self.stats,
        })
    }
}

pub fn run_ssa(prog: &SsaProgram, opts: RunOptions) -> Result<RunOutput, RunError> {
    SsaMachine::new(prog, opts).run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::desugar::desugar;
    use crate::lexer::tokenize;
    use crate::parser::parse;
    use crate::ssa::lower;
    use crate::typeck::{infer, TypedProgram};

    fn typed(src: &str) -> TypedProgram {
        infer(&desugar(&parse(&tokenize(src).unwrap()).unwrap())).unwrap()
    }

    /// Run both machines in checked mode and insist they agree.
    fn run(src: &str) -> String {
        let tp = typed(src);
        let opts = RunOptions { check_types: true };
        let a = run_core(&tp.program, opts).unwrap().output;
        let b = run_ssa(&lower(&tp).unwrap(), opts).unwrap().output;
        assert_eq!(a, b);
        a
    }

    fn run_err(src: &str) -> FaultKind {
        let tp = typed(src);
        let a = run_core(&tp.program, RunOptions::default()).unwrap_err();
        let b = run_ssa(&lower(&tp).unwrap(), RunOptions::default()).unwrap_err();
        assert_eq!(a.fault.kind, b.fault.kind);
        assert_eq!(a.output, b.output);
        a.fault.kind
    }

    #[test]
    fn let_takes_one_step() {
        let tp = typed("Let x be 5. Print x.");
        let stmts = &tp.program.program().stmts;
        let mut m = Machine::new(stmts, RunOptions::default());
        assert_eq!(m.remaining().len(), 2);
        m.step().unwrap();
        assert_eq!(m.remaining().len(), 1);
        assert_eq!(m.store.get("x"), Some(&Value::Int(5)));
        assert!(m.output.is_empty());
    }

    #[test]
    fn if_true_takes_then_branch() {
        assert_eq!(run("If true: Print 1. Else: Print 2. End if."), "1\n");
        assert_eq!(run("If 1 is 2: Print 1. Else: Print 2. End if."), "2\n");
    }

    #[test]
    fn empty_program_is_terminal() {
        let mut m = Machine::new(&[], RunOptions::default());
        assert_eq!(m.step().unwrap(), Step::Terminal);
        assert!(m.is_terminal());
    }

    #[test]
    fn simple_print() {
        assert_eq!(run("Print 2 plus 3."), "5\n");
    }

    #[test]
    fn average_sample_prints_nothing() {
        let src = "Let numbers be [8, 12, 15, 9, 6]. Let total be sum of numbers. Let count be length of numbers.
                   Let average be total divided by count. If it is greater than 10: Print \"big\". End if.";
        assert_eq!(run(src), "");
    }

    #[test]
    fn fizzbuzz() {
        let src = "Let i be 1. While i less than 16:
            If i modulo 15 is 0: Print \"FizzBuzz\".
            Else if i modulo 3 is 0: Print \"Fizz\".
            Else if i modulo 5 is 0: Print \"Buzz\".
            Else: Print i. End if.
            Let i be i plus 1. End while.";
        let out = run(src);
        let expect: Vec<String> = (1..=15)
            .map(|i| match (i % 3, i % 5) {
                (0, 0) => "FizzBuzz".to_string(),
                (0, _) => "Fizz".to_string(),
                (_, 0) => "Buzz".to_string(),
                _ => i.to_string(),
            })
            .collect();
        assert_eq!(out, expect.join("\n") + "\n");
    }

    #[test]
    fn python_formatting() {
        assert_eq!(
            run("Print true. Print [true, false]."),
            "True\n[True, False]\n"
        );
        assert_eq!(
            run("Print [\"a\", \"it's\"]. Print \"plain\"."),
            "['a', \"it's\"]\nplain\n"
        );
        assert_eq!(run("Print [[1, 2], [3]]."), "[[1, 2], [3]]\n");
        assert_eq!(run("Let xs be [0]. Print xs reversed."), "[0]\n");
    }

    #[test]
    fn floor_division_and_modulo() {
        assert_eq!(run("Print -7 divided by 2. Print -7 modulo 2. Print 7 modulo -2. Print 7 divided by -2."), "-4\n1\n-1\n-4\n");
    }

    #[test]
    fn runtime_faults() {
        assert_eq!(
            run_err("Print 1. Print 1 divided by 0."),
            FaultKind::DivisionByZero
        );
        assert_eq!(
            run_err("Print 9223372036854775807 plus 1."),
            FaultKind::Overflow
        );
        assert_eq!(
            run_err("Print -9223372036854775808 divided by -1."),
            FaultKind::Overflow
        );
    }

    #[test]
    fn loops_and_lists() {
        let src = "Let xs be [3, 1, 2]. Let ys be []. For each x in xs: Add x times x to ys. End for. Print ys. Print x.";
        // the loop variable is not definitely bound after the loop
        assert!(infer(&desugar(&parse(&tokenize(src).unwrap()).unwrap())).is_err());
        let src = "Let xs be [3, 1, 2]. Let ys be []. For each x in xs: Add x times x to ys. End for. Print ys. Print length of ys.";
        assert_eq!(run(src), "[9, 1, 4]\n3\n");
    }

    #[test]
    fn step_budget() {
        assert_eq!(
            run_err("Let x be 0. While true: Let x be 1. End while.").to_string(),
            FaultKind::StepBudget.to_string()
        );
    }

    #[test]
    fn pronoun_reads_are_counted() {
        let tp = typed("Let x be 2. Print it times it.");
        let out = run_core(&tp.program, RunOptions::default()).unwrap();
        assert_eq!(out.output, "4\n");
        assert_eq!(out.stats.pronoun_reads, 2);
    }

    #[test]
    fn repr_quoting() {
        assert_eq!(py_repr_str("a\\b"), "'a\\\\b'");
        assert_eq!(py_repr_str("both ' and \""), "'both \\' and \"'");
        assert_eq!(py_repr_str("tab\there"), "'tab\\there'");
    }
}
