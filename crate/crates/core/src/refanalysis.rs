//! Referent analysis.
//!
//! A forward dataflow analysis over the SSA graph tracking one abstract cell:
//! the most recent pronoun antecedent. Every `Let` (and `for each` variable)
//! sets the cell to that name; control-flow merges join the incoming values.
//! A pronoun must see exactly one name, and that name must be defined on
//! every path reaching it.
//!
//! Binding provenance (which `Let` statements may have set the cell) is
//! computed by a second fixpoint over sets of binding sites and is used only
//! for diagnostics and reports.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::lexer::PronounWord;
use crate::span::Span;
use crate::ssa::{BlockId, SsaProgram, ValueId};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RefValue {
    Bottom,
    Ref(String),
    Top,
}

impl RefValue {
    pub fn join(&self, other: &RefValue) -> RefValue {
        match (self, other) {
            (a, b) if a == b => a.clone(),
            (RefValue::Bottom, b) => b.clone(),
            (a, RefValue::Bottom) => a.clone(),
            _ => RefValue::Top,
        }
    }

    pub fn meet(&self, other: &RefValue) -> RefValue {
        match (self, other) {
            (a, RefValue::Top) => a.clone(),
            (RefValue::Top, b) => b.clone(),
            (a, b) if a == b => a.clone(),
            _ => RefValue::Bottom,
        }
    }

    /// Partial order of the flat lattice.
    pub fn leq(&self, other: &RefValue) -> bool {
        self.join(other) == *other
    }
}

impl fmt::Display for RefValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RefValue::Bottom => f.write_str("⊥"),
            RefValue::Ref(n) => write!(f, "Ref({n})"),
            RefValue::Top => f.write_str("⊤"),
        }
    }
}

/// A binding site that may have set the cell, or `None` for a path on which
/// nothing was bound yet.
type Origin = Option<(String, Span)>;

/// A pronoun with its unique antecedent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedPronoun {
    pub word: PronounWord,
    pub span: Span,
    pub referent: String,
    /// Spans of the `Let` names that may have bound the referent.
    pub bound_at: Vec<Span>,
    pub value: ValueId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefReport {
    pub pronouns: Vec<ResolvedPronoun>,
    /// Entry and exit value of every block at the fixpoint.
    pub state: BTreeMap<BlockId, (RefValue, RefValue)>,
    /// Number of times a block entry value changed during the fixpoint.
    pub changes: usize,
}

impl RefReport {
    /// One line per pronoun: `line:col  it -> average (bound at line 4)`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for p in &self.pronouns {
            let lines: Vec<String> = p.bound_at.iter().map(|s| s.line.to_string()).collect();
            let at = if lines.len() == 1 {
                format!("line {}", lines[0])
            } else {
                format!("lines {}", lines.join(", "))
            };
            out.push_str(&format!(
                "{}:{}  {} -> {} (bound at {at})\n",
                p.span.line, p.span.col, p.word, p.referent
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefErrorKind {
    Undefined,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefError {
    #[error("{message}")]
    Pronoun {
        kind: RefErrorKind,
        message: String,
        span: Span,
        /// Binding sites that reach the pronoun, in source order.
        trace: Vec<(String, Span)>,
    },
    #[error("internal compiler error in referent analysis: {0}")]
    Internal(String),
}

fn transfer(prog: &SsaProgram, b: BlockId, upto: usize, mut cell: RefValue) -> RefValue {
    for inst in prog.block(b).insts.iter().take(upto) {
        if let Some(n) = &inst.binds {
            cell = RefValue::Ref(n.text.clone());
        }
    }
    cell
}

fn transfer_origins(
    prog: &SsaProgram,
    b: BlockId,
    upto: usize,
    mut set: BTreeSet<Origin>,
) -> BTreeSet<Origin> {
    for inst in prog.block(b).insts.iter().take(upto) {
        if let Some(n) = &inst.binds {
            set = [Some((n.text.clone(), n.span))].into_iter().collect();
        }
    }
    set
}

/// Generic forward worklist fixpoint; returns block entry values and the
/// number of entry updates.
fn fixpoint<V: Clone + PartialEq>(
    prog: &SsaProgram,
    bottom: V,
    entry: V,
    join: impl Fn(&V, &V) -> V,
    transfer: impl Fn(BlockId, V) -> V,
) -> (BTreeMap<BlockId, V>, usize) {
    let mut inn: BTreeMap<BlockId, V> =
        prog.blocks.iter().map(|b| (b.id, bottom.clone())).collect();
    let Some(first) = prog.blocks.first().map(|b| b.id) else {
        return (inn, 0);
    };
    inn.insert(first, entry);
    let mut changes = 0;
    let mut work: VecDeque<BlockId> = prog.blocks.iter().map(|b| b.id).collect();
    let mut queued: BTreeSet<BlockId> = work.iter().copied().collect();
    while let Some(b) = work.pop_front() {
        queued.remove(&b);
        let out = transfer(b, inn[&b].clone());
        for s in prog.succ.get(&b).into_iter().flatten() {
            let joined = join(&inn[s], &out);
            if joined != inn[s] {
                inn.insert(*s, joined);
                changes += 1;
                if queued.insert(*s) {
                    work.push_back(*s);
                }
            }
        }
    }
    (inn, changes)
}

pub fn analyze(prog: &SsaProgram) -> Result<RefReport, RefError> {
    let (inn, changes) = fixpoint(
        prog,
        RefValue::Bottom,
        RefValue::Bottom,
        RefValue::join,
        |b, v| transfer(prog, b, usize::MAX, v),
    );
    let (origins, _) = fixpoint(
        prog,
        BTreeSet::new(),
        [None].into_iter().collect(),
        |a: &BTreeSet<Origin>, b| a.union(b).cloned().collect(),
        |b, v| transfer_origins(prog, b, usize::MAX, v),
    );

    let state = prog
        .blocks
        .iter()
        .map(|b| {
            (
                b.id,
                (
                    inn[&b.id].clone(),
                    transfer(prog, b.id, usize::MAX, inn[&b.id].clone()),
                ),
            )
        })
        .collect();

    let mut pronouns = Vec::new();
    for site in &prog.pronouns {
        let cell = transfer(prog, site.block, site.index, inn[&site.block].clone());
        let reaching = transfer_origins(prog, site.block, site.index, origins[&site.block].clone());
        let mut trace: Vec<(String, Span)> = reaching.iter().flatten().cloned().collect();
        trace.sort_by_key(|(_, s)| s.start);
        let word = site.word;
        match (&cell, site.binding) {
            (RefValue::Top, _) => {
                let mut names: Vec<&str> = Vec::new();
                for (n, _) in &trace {
                    if !names.contains(&n.as_str()) {
                        names.push(n);
                    }
                }
                let listed = names.iter().map(|n| format!("`{n}`")).collect::<Vec<_>>();
                let alts = match listed.split_last() {
                    Some((last, rest)) if !rest.is_empty() => {
                        format!("{} or {last}", rest.join(", "))
                    }
                    _ => listed.join(""),
                };
                return Err(RefError::Pronoun {
                    kind: RefErrorKind::Ambiguous,
                    message: format!("ambiguous pronoun `{word}`: it could refer to {alts} depending on the path taken"),
                    span: site.span,
                    trace,
                });
            }
            (RefValue::Bottom, _) => {
                return Err(RefError::Pronoun {
                    kind: RefErrorKind::Undefined,
                    message: format!(
                        "undefined pronoun `{word}`: nothing has been named before it"
                    ),
                    span: site.span,
                    trace,
                });
            }
            (RefValue::Ref(n), None) => {
                return Err(RefError::Pronoun {
                    kind: RefErrorKind::Undefined,
                    message: format!(
                        "undefined pronoun `{word}`: `{n}` is not bound on every path to it"
                    ),
                    span: site.span,
                    trace,
                });
            }
            (RefValue::Ref(n), Some(v)) => {
                if *n != site.referent || prog.value(v).base.as_deref() != Some(n) {
                    return Err(RefError::Internal(format!(
                        "pronoun at {} resolves to `{n}` but was lowered to {}",
                        site.span,
                        prog.name(v)
                    )));
                }
                pronouns.push(ResolvedPronoun {
                    word,
                    span: site.span,
                    referent: n.clone(),
                    bound_at: trace.iter().map(|(_, s)| *s).collect(),
                    value: v,
                });
            }
        }
    }
    Ok(RefReport {
        pronouns,
        state,
        changes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::desugar::desugar;
    use crate::lexer::tokenize;
    use crate::parser::parse;
    use crate::ssa::lower;
    use crate::typeck::infer;

    fn run(src: &str) -> Result<RefReport, RefError> {
        let tp = infer(&desugar(&parse(&tokenize(src).unwrap()).unwrap())).unwrap();
        analyze(&lower(&tp).unwrap())
    }

    fn r(n: &str) -> RefValue {
        RefValue::Ref(n.into())
    }

    #[test]
    fn join_examples() {
        assert_eq!(r("total").join(&r("total")), r("total"));
        assert_eq!(RefValue::Bottom.join(&r("count")), r("count"));
        assert_eq!(r("total").join(&r("count")), RefValue::Top);
    }

    #[test]
    fn meet_examples() {
        assert_eq!(r("x").meet(&RefValue::Top), r("x"));
        assert_eq!(r("x").meet(&r("y")), RefValue::Bottom);
        assert_eq!(r("x").meet(&r("x")), r("x"));
    }

    #[test]
    fn average_sample_resolves() {
        let rep = run("Let numbers be [8, 12, 15, 9, 6].\nLet total be sum of numbers.\nLet count be length of numbers.\nLet average be total divided by count.\nIf it is greater than 10: Print \"big\". End if.")
            .unwrap();
        assert_eq!(rep.pronouns.len(), 1);
        assert_eq!(rep.pronouns[0].referent, "average");
        assert_eq!(rep.render(), "5:4  it -> average (bound at line 4)\n");
    }

    #[test]
    fn orphan_is_undefined() {
        use crate::ssa::{BasicBlock, Inst, Op, Operand, PronounSite};
        // `Print it.` with nothing bound, built by hand since type checking
        // already rejects it
        let span = Span {
            start: 6,
            end: 8,
            line: 1,
            col: 7,
            end_line: 1,
            end_col: 8,
        };
        let mut prog = SsaProgram::default();
        prog.blocks.push(BasicBlock {
            id: BlockId(0),
            phis: vec![],
            insts: vec![Inst {
                dst: None,
                op: Op::Print(Operand::Undef),
                ty: None,
                span,
                binds: None,
            }],
        });
        prog.succ.insert(BlockId(0), vec![]);
        prog.pronouns.push(PronounSite {
            word: PronounWord::It,
            span,
            referent: String::new(),
            referent_site: span,
            binding: None,
            block: BlockId(0),
            index: 0,
        });
        let Err(RefError::Pronoun {
            kind, span, trace, ..
        }) = analyze(&prog)
        else {
            panic!()
        };
        assert_eq!(kind, RefErrorKind::Undefined);
        assert_eq!(span.line, 1);
        assert!(trace.is_empty());
    }

    #[test]
    fn branch_join_is_ambiguous() {
        let Err(RefError::Pronoun {
            kind,
            message,
            trace,
            ..
        }) = run("Let c be true. If c: Let alpha be 1. Else: Let b be 2. End if. Print it.")
        else {
            panic!()
        };
        assert_eq!(kind, RefErrorKind::Ambiguous);
        assert!(message.contains("`alpha` or `b`"), "{message}");
        assert_eq!(
            trace.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>(),
            ["alpha", "b"]
        );
    }

    #[test]
    fn one_armed_binding_is_undefined() {
        let Err(RefError::Pronoun { kind, .. }) = run("If true: Let q be 1. End if. Print it.")
        else {
            panic!()
        };
        assert_eq!(kind, RefErrorKind::Undefined);
    }

    #[test]
    fn loop_back_edge_joins() {
        let e = run(
            "Let i be 0. Let x be 1. While i less than 2: Let i be i plus 1. End while. Print it.",
        );
        assert!(matches!(
            e,
            Err(RefError::Pronoun {
                kind: RefErrorKind::Ambiguous,
                ..
            })
        ));
    }

    #[test]
    fn straight_line_rebinding_is_unambiguous() {
        let rep = run("Let x be 1. Let y be 2. Print it.").unwrap();
        assert_eq!(rep.pronouns[0].referent, "y");
    }

    #[test]
    fn same_name_on_both_arms_resolves() {
        let rep = run("If true: Let y be 1. Else: Let y be 2. End if. Print it.").unwrap();
        assert_eq!(rep.pronouns[0].referent, "y");
        assert_eq!(rep.pronouns[0].bound_at.len(), 2);
    }

    #[test]
    fn convergence_bound() {
        let src = "Let i be 0. Let xs be [1]. While i less than 3: For each x in xs: If x is 1: Let y be x. End if. End for. Let i be i plus 1. End while.";
        let tp = infer(&desugar(&parse(&tokenize(src).unwrap()).unwrap())).unwrap();
        let prog = lower(&tp).unwrap();
        let rep = analyze(&prog).unwrap();
        assert!(rep.changes <= 2 * prog.blocks.len());
    }
}
