//! Typed SSA form.
//!
//! Lowering walks the structured core tree and keeps a map from each surface
//! name to its current SSA value. `if` joins and loop headers get phi nodes for
//! names defined on every incoming path; a name defined on only some paths is
//! dropped from the map, so reading it afterwards is impossible for variables
//! (type checking rejects that) and yields [`Operand::Undef`] for pronouns
//! (the referent analysis rejects that).
//!
//! Alongside the block graph, lowering records the [`Region`] tree it came
//! from, which code generation walks to rebuild structured control flow.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::ast::{BinOp, Builtin, Expr, ExprKind, Name, Referent, RelOp, Stmt, StmtKind};
use crate::lexer::PronounWord;
use crate::span::Span;
use crate::typeck::TypedProgram;
use crate::types::Type;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BlockId(pub u32);

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bb{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ValueId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueInfo {
    /// Surface variable this value is a version of; `None` for temporaries.
    pub base: Option<String>,
    /// Version number for variables, temporary number otherwise.
    pub version: u32,
    pub ty: Type,
}

impl ValueInfo {
    pub fn name(&self) -> String {
        match &self.base {
            Some(b) => format!("{b}_{}", self.version),
            None => format!("t{}", self.version),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Int(i64),
    Str(String),
    Bool(bool),
}

impl Literal {
    pub fn ty(&self) -> Type {
        match self {
            Literal::Int(_) => Type::Int,
            Literal::Str(_) => Type::Str,
            Literal::Bool(_) => Type::Bool,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(v) => write!(f, "{v}"),
            Literal::Str(s) => write!(f, "{s:?}"),
            Literal::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Value(ValueId),
    Lit(Literal),
    /// A pronoun whose referent has no definition on every path here.
    Undef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinFn {
    Len,
    Rev,
    /// `index list i`: element `i` of a list; only produced for `for each`.
    Index,
}

impl BuiltinFn {
    pub fn text(self) -> &'static str {
        match self {
            BuiltinFn::Len => "len",
            BuiltinFn::Rev => "rev",
            BuiltinFn::Index => "index",
        }
    }
}

impl From<Builtin> for BuiltinFn {
    fn from(b: Builtin) -> Self {
        match b {
            Builtin::Len => BuiltinFn::Len,
            Builtin::Rev => BuiltinFn::Rev,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    Const(Literal),
    Copy(Operand),
    BinOp(BinOp, Operand, Operand),
    RelOp(RelOp, Operand, Operand),
    Reduce {
        op: BinOp,
        init: Operand,
        list: Operand,
    },
    Builtin(BuiltinFn, Vec<Operand>),
    ListNew(Vec<Operand>),
    /// New list version: `old` with `elem` appended.
    Append {
        list: Operand,
        elem: Operand,
    },
    Print(Operand),
    Br {
        cond: Operand,
        then_bb: BlockId,
        else_bb: BlockId,
    },
    Jmp(BlockId),
}

impl Op {
    pub fn operands(&self) -> Vec<&Operand> {
        match self {
            Op::Const(_) | Op::Jmp(_) => vec![],
            Op::Copy(a) | Op::Print(a) => vec![a],
            Op::BinOp(_, a, b) | Op::RelOp(_, a, b) => vec![a, b],
            Op::Reduce { init, list, .. } => vec![init, list],
            Op::Builtin(_, args) | Op::ListNew(args) => args.iter().collect(),
            Op::Append { list, elem } => vec![list, elem],
            Op::Br { cond, .. } => vec![cond],
        }
    }

    pub fn is_terminator(&self) -> bool {
        matches!(self, Op::Br { .. } | Op::Jmp(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inst {
    pub dst: Option<ValueId>,
    pub op: Op,
    /// Result type; for `PRINT` the printed type, for `BR` Bool, `None` for `JMP`.
    pub ty: Option<Type>,
    pub span: Span,
    /// Set when this instruction is the definition made by a `Let` or the
    /// loop variable of a `for each`: a binding site for pronouns.
    pub binds: Option<Name>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhiNode {
    pub dst: ValueId,
    pub incoming: Vec<(BlockId, ValueId)>,
    pub ty: Type,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicBlock {
    pub id: BlockId,
    pub phis: Vec<PhiNode>,
    pub insts: Vec<Inst>,
}

/// A pronoun occurrence and the SSA value it was lowered to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PronounSite {
    pub word: PronounWord,
    pub span: Span,
    /// The parser's provisional referent.
    pub referent: String,
    /// Binding site the parser saw on top of the referent stack.
    pub referent_site: Span,
    /// Current version of `referent` here, if it is defined on every path.
    pub binding: Option<ValueId>,
    pub block: BlockId,
    /// Index of the instruction before which the pronoun is read.
    pub index: usize,
}

/// Structured layout of the block graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Region {
    /// Straight-line instructions of a block (terminators excluded).
    Code(BlockId),
    If {
        head: BlockId,
        cond: Operand,
        then_region: Vec<Region>,
        else_region: Vec<Region>,
        join: BlockId,
    },
    While {
        header: BlockId,
        cond: Operand,
        body: Vec<Region>,
        exit: BlockId,
    },
    ForEach {
        header: BlockId,
        /// The loop variable's definition at the top of the body.
        var: ValueId,
        iterable: Operand,
        body: Vec<Region>,
        exit: BlockId,
        /// Index counter, length and loop test values.
        machinery: Vec<ValueId>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SsaProgram {
    /// Entry block first.
    pub blocks: Vec<BasicBlock>,
    pub succ: BTreeMap<BlockId, Vec<BlockId>>,
    pub values: Vec<ValueInfo>,
    pub pronouns: Vec<PronounSite>,
    pub regions: Vec<Region>,
}

impl SsaProgram {
    pub fn block(&self, id: BlockId) -> &BasicBlock {
        &self.blocks[id.0 as usize]
    }

    pub fn value(&self, v: ValueId) -> &ValueInfo {
        &self.values[v.0 as usize]
    }

    pub fn name(&self, v: ValueId) -> String {
        self.value(v).name()
    }

    pub fn preds(&self) -> BTreeMap<BlockId, Vec<BlockId>> {
        let mut preds: BTreeMap<BlockId, Vec<BlockId>> =
            self.blocks.iter().map(|b| (b.id, Vec::new())).collect();
        for (from, tos) in &self.succ {
            for to in tos {
                preds.entry(*to).or_default().push(*from);
            }
        }
        preds
    }

    pub fn operand_text(&self, o: &Operand) -> String {
        match o {
            Operand::Value(v) => self.name(*v),
            Operand::Lit(l) => l.to_string(),
            Operand::Undef => "undef".to_string(),
        }
    }

    pub fn operand_type(&self, o: &Operand) -> Option<Type> {
        match o {
            Operand::Value(v) => Some(self.value(*v).ty.clone()),
            Operand::Lit(l) => Some(l.ty()),
            Operand::Undef => None,
        }
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            let _ = writeln!(out, "{}:", b.id);
            for phi in &b.phis {
                let _ = write!(out, "  {}:{} = PHI", self.name(phi.dst), phi.ty);
                for (pred, v) in &phi.incoming {
                    let _ = write!(out, " [{pred}: {}]", self.name(*v));
                }
                out.push('\n');
            }
            for inst in &b.insts {
                out.push_str("  ");
                if let Some(d) = inst.dst {
                    let ty = inst.ty.as_ref().map(|t| t.to_string()).unwrap_or_default();
                    let _ = write!(out, "{}:{} = ", self.name(d), ty);
                }
                let ops = |v: &[&Operand]| {
                    v.iter()
                        .map(|o| self.operand_text(o))
                        .collect::<Vec<_>>()
                        .join(" ")
                };
                let text = match &inst.op {
                    Op::Const(l) => format!("CONST {l}"),
                    Op::Copy(a) => format!("COPY {}", self.operand_text(a)),
                    Op::BinOp(op, a, b) => format!("BINOP {} {}", op.text(), ops(&[a, b])),
                    Op::RelOp(op, a, b) => format!("RELOP {} {}", op.text(), ops(&[a, b])),
                    Op::Reduce { op, init, list } => {
                        format!("REDUCE {} {}", op.text(), ops(&[init, list]))
                    }
                    Op::Builtin(f, args) => {
                        format!(
                            "BUILTIN {} {}",
                            f.text(),
                            ops(&args.iter().collect::<Vec<_>>())
                        )
                    }
                    Op::ListNew(elems) => format!(
                        "LISTNEW [{}]",
                        elems
                            .iter()
                            .map(|o| self.operand_text(o))
                            .collect::<Vec<_>>()
                            .join(", ")
                    ),
                    Op::Append { list, elem } => format!("APPEND {}", ops(&[list, elem])),
                    Op::Print(a) => format!("PRINT {}", self.operand_text(a)),
                    Op::Br {
                        cond,
                        then_bb,
                        else_bb,
                    } => format!("BR {} {then_bb} {else_bb}", self.operand_text(cond)),
                    Op::Jmp(t) => format!("JMP {t}"),
                };
                out.push_str(&text);
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("internal compiler error while lowering to SSA: {0}")]
pub struct LowerError(pub String);

pub fn lower(program: &TypedProgram) -> Result<SsaProgram, LowerError> {
    let mut lw = Lowerer::default();
    lw.cur = lw.new_block();
    let regions = lw.block_regions(&program.program.program().stmts)?;
    lw.out.regions = regions;
    Ok(lw.out)
}

#[derive(Default)]
struct Lowerer {
    out: SsaProgram,
    cur: BlockId,
    env: BTreeMap<String, ValueId>,
    versions: BTreeMap<String, u32>,
    temps: u32,
}

fn ty_of(e: &Expr) -> Result<Type, LowerError> {
    e.ty.clone()
        .ok_or_else(|| LowerError(format!("untyped expression at {}", e.span)))
}

/// Names assigned anywhere inside `stmts`, nested blocks included.
fn assigned_names(stmts: &[Stmt], out: &mut BTreeSet<String>) {
    for s in stmts {
        match &s.kind {
            StmtKind::Let { name, .. } => {
                out.insert(name.text.clone());
            }
            StmtKind::Append { target, .. } | StmtKind::AddTo { target, .. } => {
                out.insert(target.text.clone());
            }
            StmtKind::ForEach { var, .. } => {
                out.insert(var.text.clone());
            }
            _ => {}
        }
        for b in s.blocks() {
            assigned_names(b, out);
        }
    }
}

impl Lowerer {
    fn new_block(&mut self) -> BlockId {
        let id = BlockId(self.out.blocks.len() as u32);
        self.out.blocks.push(BasicBlock {
            id,
            phis: vec![],
            insts: vec![],
        });
        self.out.succ.insert(id, vec![]);
        id
    }

    fn new_value(&mut self, base: Option<&str>, ty: Type) -> ValueId {
        let version = match base {
            Some(b) => {
                let n = self.versions.entry(b.to_string()).or_insert(0);
                *n += 1;
                *n
            }
            None => {
                self.temps += 1;
                self.temps
            }
        };
        let id = ValueId(self.out.values.len() as u32);
        self.out.values.push(ValueInfo {
            base: base.map(str::to_string),
            version,
            ty,
        });
        id
    }

    fn push(&mut self, inst: Inst) {
        let b = self.cur.0 as usize;
        self.out.blocks[b].insts.push(inst);
    }

    fn terminate(&mut self, op: Op, span: Span) {
        let targets = match &op {
            Op::Br {
                then_bb, else_bb, ..
            } => vec![*then_bb, *else_bb],
            Op::Jmp(t) => vec![*t],
            _ => unreachable!(),
        };
        let ty = match op {
            Op::Br { .. } => Some(Type::Bool),
            _ => None,
        };
        self.push(Inst {
            dst: None,
            op,
            ty,
            span,
            binds: None,
        });
        self.out.succ.insert(self.cur, targets);
    }

    fn block_regions(&mut self, stmts: &[Stmt]) -> Result<Vec<Region>, LowerError> {
        let mut regions = Vec::new();
        for s in stmts {
            self.stmt(s, &mut regions)?;
        }
        regions.push(Region::Code(self.cur));
        Ok(regions)
    }

    fn stmt(&mut self, s: &Stmt, regions: &mut Vec<Region>) -> Result<(), LowerError> {
        match &s.kind {
            StmtKind::Let { name, value } => {
                let ty = ty_of(value)?;
                let dst = self.new_value(Some(&name.text), ty.clone());
                self.expr_into(value, dst, Some(name))?;
                self.env.insert(name.text.clone(), dst);
            }
            StmtKind::Print(e) => {
                let ty = ty_of(e)?;
                let a = self.expr(e)?;
                self.push(Inst {
                    dst: None,
                    op: Op::Print(a),
                    ty: Some(ty),
                    span: s.span,
                    binds: None,
                });
            }
            StmtKind::Append { target, elem } => {
                let old = *self
                    .env
                    .get(&target.text)
                    .ok_or_else(|| LowerError(format!("`{}` undefined at append", target.text)))?;
                let e = self.expr(elem)?;
                let ty = self.out.value(old).ty.clone();
                let dst = self.new_value(Some(&target.text), ty.clone());
                self.push(Inst {
                    dst: Some(dst),
                    op: Op::Append {
                        list: Operand::Value(old),
                        elem: e,
                    },
                    ty: Some(ty),
                    span: s.span,
                    binds: None,
                });
                self.env.insert(target.text.clone(), dst);
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                let c = self.expr(cond)?;
                let head = self.cur;
                let then_bb = self.new_block();
                let else_bb = self.new_block();
                self.terminate(
                    Op::Br {
                        cond: c.clone(),
                        then_bb,
                        else_bb,
                    },
                    cond.span,
                );
                let before = self.env.clone();

                self.cur = then_bb;
                let then_region = self.block_regions(then_block)?;
                let then_end = self.cur;
                let then_env = std::mem::replace(&mut self.env, before);

                self.cur = else_bb;
                let else_region = self.block_regions(else_block.as_deref().unwrap_or(&[]))?;
                let else_end = self.cur;
                let else_env = std::mem::take(&mut self.env);

                let join = self.new_block();
                self.cur = then_end;
                self.terminate(Op::Jmp(join), s.span);
                self.cur = else_end;
                self.terminate(Op::Jmp(join), s.span);
                self.cur = join;

                let mut env = BTreeMap::new();
                for (name, tv) in &then_env {
                    let Some(ev) = else_env.get(name) else {
                        continue;
                    };
                    if tv == ev {
                        env.insert(name.clone(), *tv);
                        continue;
                    }
                    let ty = self.out.value(*tv).ty.clone();
                    let dst = self.new_value(Some(name), ty.clone());
                    self.out.blocks[join.0 as usize].phis.push(PhiNode {
                        dst,
                        incoming: vec![(then_end, *tv), (else_end, *ev)],
                        ty,
                    });
                    env.insert(name.clone(), dst);
                }
                self.env = env;
                regions.push(Region::Code(head));
                regions.push(Region::If {
                    head,
                    cond: c,
                    then_region,
                    else_region,
                    join,
                });
            }
            StmtKind::While { cond, body } => {
                let pre = self.cur;
                let header = self.new_block();
                self.terminate(Op::Jmp(header), s.span);
                let phis = self.loop_phis(body, pre, header);
                self.cur = header;
                let c = self.expr(cond)?;
                let body_bb = self.new_block();
                let exit = self.new_block();
                self.terminate(
                    Op::Br {
                        cond: c.clone(),
                        then_bb: body_bb,
                        else_bb: exit,
                    },
                    cond.span,
                );
                let header_env = self.env.clone();
                self.cur = body_bb;
                let body_region = self.block_regions(body)?;
                let body_end = self.cur;
                self.terminate(Op::Jmp(header), s.span);
                self.close_loop_phis(header, &phis, body_end)?;
                self.env = header_env;
                self.cur = exit;
                regions.push(Region::Code(pre));
                regions.push(Region::While {
                    header,
                    cond: c,
                    body: body_region,
                    exit,
                });
            }
            StmtKind::ForEach { var, iter, body } => {
                let list_ty = ty_of(iter)?;
                let elem_ty = list_ty
                    .elem()
                    .cloned()
                    .ok_or_else(|| LowerError("`for each` over a non-list".into()))?;
                let iterable = self.expr(iter)?;
                let idx0 = self.new_value(None, Type::Int);
                self.push(Inst {
                    dst: Some(idx0),
                    op: Op::Const(Literal::Int(0)),
                    ty: Some(Type::Int),
                    span: iter.span,
                    binds: None,
                });
                let len = self.new_value(None, Type::Int);
                self.push(Inst {
                    dst: Some(len),
                    op: Op::Builtin(BuiltinFn::Len, vec![iterable.clone()]),
                    ty: Some(Type::Int),
                    span: iter.span,
                    binds: None,
                });
                let pre = self.cur;
                let header = self.new_block();
                self.terminate(Op::Jmp(header), s.span);
                let mut phis = self.loop_phis(body, pre, header);
                if self.env.contains_key(&var.text) && !phis.iter().any(|(n, _)| *n == var.text) {
                    let mut single = BTreeSet::new();
                    single.insert(var.text.clone());
                    phis.extend(self.phis_for(&single, pre, header));
                }
                let idx = self.new_value(None, Type::Int);
                self.out.blocks[header.0 as usize].phis.push(PhiNode {
                    dst: idx,
                    incoming: vec![(pre, idx0)],
                    ty: Type::Int,
                });
                self.cur = header;
                let test = self.new_value(None, Type::Bool);
                self.push(Inst {
                    dst: Some(test),
                    op: Op::RelOp(RelOp::LessThan, Operand::Value(idx), Operand::Value(len)),
                    ty: Some(Type::Bool),
                    span: iter.span,
                    binds: None,
                });
                let body_bb = self.new_block();
                let exit = self.new_block();
                self.terminate(
                    Op::Br {
                        cond: Operand::Value(test),
                        then_bb: body_bb,
                        else_bb: exit,
                    },
                    iter.span,
                );
                let header_env = self.env.clone();
                self.cur = body_bb;
                let x = self.new_value(Some(&var.text), elem_ty.clone());
                self.push(Inst {
                    dst: Some(x),
                    op: Op::Builtin(
                        BuiltinFn::Index,
                        vec![iterable.clone(), Operand::Value(idx)],
                    ),
                    ty: Some(elem_ty),
                    span: var.span,
                    binds: Some(var.clone()),
                });
                self.env.insert(var.text.clone(), x);
                let body_region = self.block_regions(body)?;
                let body_end = self.cur;
                let next = self.new_value(None, Type::Int);
                self.push(Inst {
                    dst: Some(next),
                    op: Op::BinOp(
                        BinOp::Plus,
                        Operand::Value(idx),
                        Operand::Lit(Literal::Int(1)),
                    ),
                    ty: Some(Type::Int),
                    span: iter.span,
                    binds: None,
                });
                self.terminate(Op::Jmp(header), s.span);
                self.close_loop_phis(header, &phis, body_end)?;
                let hb = &mut self.out.blocks[header.0 as usize];
                if let Some(p) = hb.phis.iter_mut().find(|p| p.dst == idx) {
                    p.incoming.push((body_end, next));
                }
                self.env = header_env;
                self.cur = exit;
                regions.push(Region::Code(pre));
                regions.push(Region::ForEach {
                    header,
                    var: x,
                    iterable,
                    body: body_region,
                    exit,
                    machinery: vec![idx0, len, idx, test, next],
                });
            }
            StmtKind::AddTo { .. } => {
                return Err(LowerError(
                    "surface `add ... to` reached SSA lowering".into(),
                ))
            }
        }
        Ok(())
    }

    /// Header phis for every name assigned in `body` and already defined.
    fn loop_phis(
        &mut self,
        body: &[Stmt],
        pre: BlockId,
        header: BlockId,
    ) -> Vec<(String, ValueId)> {
        let mut assigned = BTreeSet::new();
        assigned_names(body, &mut assigned);
        self.phis_for(&assigned, pre, header)
    }

    fn phis_for(
        &mut self,
        names: &BTreeSet<String>,
        pre: BlockId,
        header: BlockId,
    ) -> Vec<(String, ValueId)> {
        let mut out = Vec::new();
        for name in names {
            let Some(&before) = self.env.get(name) else {
                continue;
            };
            let ty = self.out.value(before).ty.clone();
            let dst = self.new_value(Some(name), ty.clone());
            self.out.blocks[header.0 as usize].phis.push(PhiNode {
                dst,
                incoming: vec![(pre, before)],
                ty,
            });
            self.env.insert(name.clone(), dst);
            out.push((name.clone(), dst));
        }
        out
    }

    fn close_loop_phis(
        &mut self,
        header: BlockId,
        phis: &[(String, ValueId)],
        body_end: BlockId,
    ) -> Result<(), LowerError> {
        for (name, dst) in phis {
            let v = *self.env.get(name).ok_or_else(|| {
                LowerError(format!("`{name}` lost its definition in a loop body"))
            })?;
            let hb = &mut self.out.blocks[header.0 as usize];
            if let Some(p) = hb.phis.iter_mut().find(|p| p.dst == *dst) {
                p.incoming.push((body_end, v));
            }
        }
        Ok(())
    }

    fn pronoun(
        &mut self,
        e: &Expr,
        word: PronounWord,
        referent: &Referent,
    ) -> Result<Operand, LowerError> {
        let Referent::Resolved { name, site } = referent else {
            return Err(LowerError(format!("unresolved pronoun at {}", e.span)));
        };
        let binding = self.env.get(name).copied();
        let index = self.out.blocks[self.cur.0 as usize].insts.len();
        self.out.pronouns.push(PronounSite {
            word,
            span: e.span,
            referent: name.clone(),
            referent_site: *site,
            binding,
            block: self.cur,
            index,
        });
        Ok(binding.map_or(Operand::Undef, Operand::Value))
    }

    /// Lower `e` to an operand, emitting temporaries as needed.
    fn expr(&mut self, e: &Expr) -> Result<Operand, LowerError> {
        match &e.kind {
            ExprKind::Int(v) => Ok(Operand::Lit(Literal::Int(*v))),
            ExprKind::Str(s) => Ok(Operand::Lit(Literal::Str(s.clone()))),
            ExprKind::Bool(b) => Ok(Operand::Lit(Literal::Bool(*b))),
            ExprKind::Var(name) => {
                self.env
                    .get(name)
                    .map(|v| Operand::Value(*v))
                    .ok_or_else(|| {
                        LowerError(format!("`{name}` read before definition at {}", e.span))
                    })
            }
            ExprKind::Pronoun { word, referent } => self.pronoun(e, *word, referent),
            _ => {
                let dst = self.new_value(None, ty_of(e)?);
                self.expr_into(e, dst, None)?;
                Ok(Operand::Value(dst))
            }
        }
    }

    /// Lower `e` so that its value is defined as `dst`.
    fn expr_into(
        &mut self,
        e: &Expr,
        dst: ValueId,
        binds: Option<&Name>,
    ) -> Result<(), LowerError> {
        let op = match &e.kind {
            ExprKind::Int(v) => Op::Const(Literal::Int(*v)),
            ExprKind::Str(s) => Op::Const(Literal::Str(s.clone())),
            ExprKind::Bool(b) => Op::Const(Literal::Bool(*b)),
            ExprKind::Var(_) | ExprKind::Pronoun { .. } => Op::Copy(self.expr(e)?),
            ExprKind::List(items) => {
                let ops = items
                    .iter()
                    .map(|i| self.expr(i))
                    .collect::<Result<Vec<_>, _>>()?;
                Op::ListNew(ops)
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let a = self.expr(lhs)?;
                let b = self.expr(rhs)?;
                Op::BinOp(*op, a, b)
            }
            ExprKind::Relation { op, lhs, rhs } => {
                let a = self.expr(lhs)?;
                let b = self.expr(rhs)?;
                Op::RelOp(*op, a, b)
            }
            ExprKind::Reduce { op, init, list } => {
                let i = self.expr(init)?;
                let l = self.expr(list)?;
                Op::Reduce {
                    op: *op,
                    init: i,
                    list: l,
                }
            }
            ExprKind::Builtin { func, args } => {
                let ops = args
                    .iter()
                    .map(|a| self.expr(a))
                    .collect::<Result<Vec<_>, _>>()?;
                Op::Builtin((*func).into(), ops)
            }
            ExprKind::SumOf(_) | ExprKind::LengthOf(_) | ExprKind::Reversed(_) => {
                return Err(LowerError("surface sugar reached SSA lowering".into()))
            }
        };
        self.push(Inst {
            dst: Some(dst),
            op,
            ty: Some(self.out.value(dst).ty.clone()),
            span: e.span,
            binds: binds.cloned(),
        });
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyRule {
    SingleAssignment,
    Dominance,
    PhiArity,
    TypeAgreement,
    ControlFlow,
}

impl fmt::Display for VerifyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerifyRule::SingleAssignment => "single-assignment",
            VerifyRule::Dominance => "dominance",
            VerifyRule::PhiArity => "phi arity",
            VerifyRule::TypeAgreement => "type agreement",
            VerifyRule::ControlFlow => "control flow",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("SSA verification failed ({rule}) in {block}{}: {message}", index.map(|i| format!(" at instruction {i}")).unwrap_or_default())]
pub struct VerifyError {
    pub rule: VerifyRule,
    pub block: BlockId,
    /// Instruction index; `None` for phi nodes and block-level problems.
    pub index: Option<usize>,
    pub message: String,
}

/// Dominator sets, computed iteratively from the entry block.
pub fn dominators(prog: &SsaProgram) -> BTreeMap<BlockId, BTreeSet<BlockId>> {
    let all: BTreeSet<BlockId> = prog.blocks.iter().map(|b| b.id).collect();
    let preds = prog.preds();
    let mut dom: BTreeMap<BlockId, BTreeSet<BlockId>> = BTreeMap::new();
    let Some(entry) = prog.blocks.first().map(|b| b.id) else {
        return dom;
    };
    for b in &all {
        if *b == entry {
            dom.insert(*b, [entry].into_iter().collect());
        } else {
            dom.insert(*b, all.clone());
        }
    }
    let mut changed = true;
    while changed {
        changed = false;
        for b in &all {
            if *b == entry {
                continue;
            }
            let mut new: Option<BTreeSet<BlockId>> = None;
            for p in &preds[b] {
                new = Some(match new {
                    None => dom[p].clone(),
                    Some(acc) => acc.intersection(&dom[p]).cloned().collect(),
                });
            }
            let mut new = new.unwrap_or_default();
            new.insert(*b);
            if new != dom[b] {
                dom.insert(*b, new);
                changed = true;
            }
        }
    }
    dom
}

pub fn verify_ssa(prog: &SsaProgram) -> Result<(), VerifyError> {
    let err = |rule, block, index, message: String| VerifyError {
        rule,
        block,
        index,
        message,
    };

    // single assignment; remember where each value is defined
    let mut def_site: BTreeMap<ValueId, (BlockId, Option<usize>)> = BTreeMap::new();
    for b in &prog.blocks {
        for phi in &b.phis {
            if def_site.insert(phi.dst, (b.id, None)).is_some() {
                return Err(err(
                    VerifyRule::SingleAssignment,
                    b.id,
                    None,
                    format!("{} is defined more than once", prog.name(phi.dst)),
                ));
            }
        }
        for (i, inst) in b.insts.iter().enumerate() {
            if let Some(d) = inst.dst {
                if d.0 as usize >= prog.values.len() {
                    return Err(err(
                        VerifyRule::SingleAssignment,
                        b.id,
                        Some(i),
                        format!("unknown value %{}", d.0),
                    ));
                }
                if def_site.insert(d, (b.id, Some(i))).is_some() {
                    return Err(err(
                        VerifyRule::SingleAssignment,
                        b.id,
                        Some(i),
                        format!("{} is defined more than once", prog.name(d)),
                    ));
                }
            }
        }
    }

    // terminators and successor map
    for (bi, b) in prog.blocks.iter().enumerate() {
        if b.id.0 as usize != bi {
            return Err(err(
                VerifyRule::ControlFlow,
                b.id,
                None,
                "block ids are not dense".into(),
            ));
        }
        let mut targets = vec![];
        for (i, inst) in b.insts.iter().enumerate() {
            if inst.op.is_terminator() && i + 1 != b.insts.len() {
                return Err(err(
                    VerifyRule::ControlFlow,
                    b.id,
                    Some(i),
                    "terminator before end of block".into(),
                ));
            }
            match &inst.op {
                Op::Br {
                    then_bb, else_bb, ..
                } => targets = vec![*then_bb, *else_bb],
                Op::Jmp(t) => targets = vec![*t],
                _ => {}
            }
        }
        let recorded = prog.succ.get(&b.id).cloned().unwrap_or_default();
        if recorded != targets {
            return Err(err(
                VerifyRule::ControlFlow,
                b.id,
                None,
                "successor map disagrees with the terminator".into(),
            ));
        }
        if targets.iter().any(|t| t.0 as usize >= prog.blocks.len()) {
            return Err(err(
                VerifyRule::ControlFlow,
                b.id,
                None,
                "branch to unknown block".into(),
            ));
        }
    }

    // phi arity
    let preds = prog.preds();
    for b in &prog.blocks {
        let p: BTreeSet<BlockId> = preds[&b.id].iter().copied().collect();
        for phi in &b.phis {
            let inc: BTreeSet<BlockId> = phi.incoming.iter().map(|(bb, _)| *bb).collect();
            if phi.incoming.len() != preds[&b.id].len() || inc != p {
                return Err(err(
                    VerifyRule::PhiArity,
                    b.id,
                    None,
                    format!(
                        "phi {} has {} incoming edges but the block has {} predecessors",
                        prog.name(phi.dst),
                        phi.incoming.len(),
                        preds[&b.id].len()
                    ),
                ));
            }
        }
    }

    // dominance of uses
    let dom = dominators(prog);
    let dominates = |def: BlockId, user: BlockId| dom.get(&user).is_some_and(|d| d.contains(&def));
    for b in &prog.blocks {
        for phi in &b.phis {
            for (pred, v) in &phi.incoming {
                match def_site.get(v) {
                    Some((db, _)) if dominates(*db, *pred) => {}
                    _ => {
                        return Err(err(
                            VerifyRule::Dominance,
                            b.id,
                            None,
                            format!(
                                "phi operand {} is not available at the end of {pred}",
                                prog.name(*v)
                            ),
                        ))
                    }
                }
            }
        }
        for (i, inst) in b.insts.iter().enumerate() {
            for o in inst.op.operands() {
                let Operand::Value(v) = o else { continue };
                let ok = match def_site.get(v) {
                    Some((db, Some(di))) if *db == b.id => *di < i,
                    Some((db, None)) if *db == b.id => true,
                    Some((db, _)) => dominates(*db, b.id) && *db != b.id,
                    None => false,
                };
                if !ok {
                    return Err(err(
                        VerifyRule::Dominance,
                        b.id,
                        Some(i),
                        format!(
                            "use of {} is not dominated by its definition",
                            prog.name(*v)
                        ),
                    ));
                }
            }
        }
    }

    // types
    for b in &prog.blocks {
        for phi in &b.phis {
            if prog.value(phi.dst).ty != phi.ty
                || phi
                    .incoming
                    .iter()
                    .any(|(_, v)| prog.value(*v).ty != phi.ty)
            {
                return Err(err(
                    VerifyRule::TypeAgreement,
                    b.id,
                    None,
                    format!("phi {} mixes operand types", prog.name(phi.dst)),
                ));
            }
        }
        for (i, inst) in b.insts.iter().enumerate() {
            if let Err(m) = check_inst_type(prog, inst) {
                return Err(err(VerifyRule::TypeAgreement, b.id, Some(i), m));
            }
        }
    }
    Ok(())
}

fn check_inst_type(prog: &SsaProgram, inst: &Inst) -> Result<(), String> {
    let t = |o: &Operand| prog.operand_type(o);
    // Undef operands match anything
    let is = |o: &Operand, want: &Type| t(o).is_none_or(|ty| ty == *want);
    let result: Option<Type> = match &inst.op {
        Op::Const(l) => Some(l.ty()),
        Op::Copy(a) => t(a).or_else(|| inst.ty.clone()),
        Op::BinOp(_, a, b) => {
            if !is(a, &Type::Int) || !is(b, &Type::Int) {
                return Err("arithmetic on non-Int operands".into());
            }
            Some(Type::Int)
        }
        Op::RelOp(op, a, b) => {
            if let (Some(x), Some(y)) = (t(a), t(b)) {
                if x != y {
                    return Err(format!("comparison of {x} with {y}"));
                }
            }
            if !op.is_equality() && (!is(a, &Type::Int) || !is(b, &Type::Int)) {
                return Err("ordering on non-Int operands".into());
            }
            Some(Type::Bool)
        }
        Op::Reduce { init, list, .. } => {
            if !is(init, &Type::Int) || !is(list, &Type::list(Type::Int)) {
                return Err("reduction over a non-Int list".into());
            }
            Some(Type::Int)
        }
        Op::Builtin(f, args) => {
            let arity = if *f == BuiltinFn::Index { 2 } else { 1 };
            if args.len() != arity {
                return Err(format!("{} takes {arity} operand(s)", f.text()));
            }
            let a = t(&args[0]);
            match (f, a) {
                (_, None) => inst.ty.clone(),
                (BuiltinFn::Len, Some(Type::Str | Type::List(_))) => Some(Type::Int),
                (BuiltinFn::Rev, Some(ty @ (Type::Str | Type::List(_)))) => Some(ty),
                (BuiltinFn::Index, Some(Type::List(e))) if is(&args[1], &Type::Int) => Some(*e),
                (_, Some(ty)) => return Err(format!("{} applied to {ty}", f.text())),
            }
        }
        Op::ListNew(elems) => {
            let tys: Vec<Type> = elems.iter().filter_map(t).collect();
            if tys.windows(2).any(|w| w[0] != w[1]) {
                return Err("list elements of different types".into());
            }
            match (tys.first(), &inst.ty) {
                (Some(e), _) => Some(Type::list(e.clone())),
                (None, ty) => ty.clone(),
            }
        }
        Op::Append { list, elem } => match (t(list), t(elem)) {
            (Some(Type::List(e)), Some(x)) if *e != x => {
                return Err(format!("appending {x} to List<{e}>"))
            }
            (Some(l @ Type::List(_)), _) => Some(l),
            (Some(other), _) => return Err(format!("append to {other}")),
            (None, _) => inst.ty.clone(),
        },
        Op::Print(a) => t(a).or_else(|| inst.ty.clone()),
        Op::Br { cond, .. } => {
            if !is(cond, &Type::Bool) {
                return Err("branch on a non-Bool condition".into());
            }
            Some(Type::Bool)
        }
        Op::Jmp(_) => None,
    };
    if result != inst.ty {
        return Err(format!(
            "instruction is annotated {} but computes {}",
            inst.ty
                .as_ref()
                .map(|t| t.to_string())
                .unwrap_or("nothing".into()),
            result.map(|t| t.to_string()).unwrap_or("nothing".into())
        ));
    }
    if let Some(d) = inst.dst {
        if Some(&prog.value(d).ty) != inst.ty.as_ref() {
            return Err(format!("destination {} has a different type", prog.name(d)));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::desugar::desugar;
    use crate::lexer::tokenize;
    use crate::parser::parse;
    use crate::typeck::infer;

    fn lower_src(src: &str) -> SsaProgram {
        let tp = infer(&desugar(&parse(&tokenize(src).unwrap()).unwrap())).unwrap();
        let p = lower(&tp).unwrap();
        verify_ssa(&p).unwrap_or_else(|e| panic!("{e}\n{}", p.dump()));
        p
    }

    #[test]
    fn rebinding_gets_fresh_versions() {
        let p = lower_src("Let x be 1. Let x be 2. Print x.");
        assert_eq!(
            p.dump(),
            "bb0:\n  x_1:Int = CONST 1\n  x_2:Int = CONST 2\n  PRINT x_2\n"
        );
    }

    #[test]
    fn average_pronoun_lowered_to_average_1() {
        let p = lower_src(
            "Let numbers be [8, 12, 15, 9, 6]. Let total be sum of numbers. Let count be length of numbers.
             Let average be total divided by count. If it is greater than 10: Print \"big\". End if.",
        );
        assert_eq!(p.pronouns.len(), 1);
        assert_eq!(
            p.pronouns[0].binding.map(|v| p.name(v)),
            Some("average_1".to_string())
        );
        let dump = p.dump();
        assert!(dump.contains("RELOP greater-than average_1 10"), "{dump}");
        // all straight-line statements live in the entry block
        assert_eq!(p.block(BlockId(0)).insts.len(), 6);
    }

    #[test]
    fn if_else_join_has_phi() {
        let p = lower_src("Let c be true. If c: Let y be 1. Else: Let y be 2. End if. Print y.");
        let dump = p.dump();
        assert!(
            dump.contains("y_3:Int = PHI [bb1: y_1] [bb2: y_2]"),
            "{dump}"
        );
        assert!(dump.contains("PRINT y_3"), "{dump}");
    }

    #[test]
    fn while_loop_header_phis() {
        let p =
            lower_src("Let i be 0. While i less than 3: Let i be i plus 1. End while. Print i.");
        let dump = p.dump();
        assert!(
            dump.contains("i_2:Int = PHI [bb0: i_1] [bb2: i_3]"),
            "{dump}"
        );
        assert!(dump.contains("PRINT i_2"), "{dump}");
    }

    #[test]
    fn pronoun_to_partially_defined_name_is_undef() {
        let p = lower_src("If true: Let q be 1. End if. Print it.");
        assert_eq!(p.pronouns[0].binding, None);
        assert!(p.dump().contains("PRINT undef"));
    }

    #[test]
    fn foreach_shape() {
        let p = lower_src(
            "Let xs be [1, 2]. Let s be 0. For each x in xs: Let s be s plus x. End for. Print s.",
        );
        let dump = p.dump();
        assert!(dump.contains("BUILTIN index xs_1"), "{dump}");
        assert!(matches!(p.regions[1], Region::ForEach { .. }));
    }

    #[test]
    fn no_pronoun_survives_lowering() {
        let p = lower_src("Let x be 3. Print it. Let y be it plus it.");
        let dump = p.dump();
        for word in ["it", "them", "this", "that"] {
            assert!(!dump.split_whitespace().any(|w| w == word), "{dump}");
        }
    }

    fn int_const(dst: ValueId, v: i64) -> Inst {
        Inst {
            dst: Some(dst),
            op: Op::Const(Literal::Int(v)),
            ty: Some(Type::Int),
            span: Span::default(),
            binds: None,
        }
    }

    fn one_value(prog: &mut SsaProgram) -> ValueId {
        prog.values.push(ValueInfo {
            base: Some("x".into()),
            version: 1,
            ty: Type::Int,
        });
        ValueId(prog.values.len() as u32 - 1)
    }

    #[test]
    fn verify_rejects_double_definition() {
        let mut prog = SsaProgram::default();
        let x = one_value(&mut prog);
        prog.blocks.push(BasicBlock {
            id: BlockId(0),
            phis: vec![],
            insts: vec![int_const(x, 1), int_const(x, 2)],
        });
        prog.succ.insert(BlockId(0), vec![]);
        let e = verify_ssa(&prog).unwrap_err();
        assert_eq!(e.rule, VerifyRule::SingleAssignment);
        assert_eq!(e.index, Some(1));
    }

    #[test]
    fn verify_rejects_short_phi() {
        let mut p =
            lower_src("Let c be true. If c: Let y be 1. Else: Let y be 2. End if. Print y.");
        let join = p.blocks.iter_mut().find(|b| !b.phis.is_empty()).unwrap();
        join.phis[0].incoming.pop();
        let e = verify_ssa(&p).unwrap_err();
        assert_eq!(e.rule, VerifyRule::PhiArity);
    }

    #[test]
    fn verify_rejects_undominated_use() {
        let mut p =
            lower_src("Let c be true. If c: Let y be 1. Else: Let y be 2. End if. Print y.");
        // make the print read the then-arm version directly
        let then_y = p.values.iter().position(|v| v.name() == "y_1").unwrap() as u32;
        let last = p.blocks.last_mut().unwrap();
        last.insts[0].op = Op::Print(Operand::Value(ValueId(then_y)));
        let e = verify_ssa(&p).unwrap_err();
        assert_eq!(e.rule, VerifyRule::Dominance);
    }

    #[test]
    fn verify_rejects_type_disagreement() {
        let mut p = lower_src("Let x be 1 plus 2.");
        p.blocks[0].insts[0].op = Op::BinOp(
            BinOp::Plus,
            Operand::Lit(Literal::Str("a".into())),
            Operand::Lit(Literal::Int(2)),
        );
        assert_eq!(verify_ssa(&p).unwrap_err().rule, VerifyRule::TypeAgreement);
    }
}
