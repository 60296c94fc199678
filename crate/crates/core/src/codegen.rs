//! Python emission.
//!
//! Code is produced by walking the region tree recorded during lowering, so
//! `if`/`elif`/`else`, `while` and `for` come back in their source shape.
//! Every SSA version of a surface name is emitted as one snake_case Python
//! identifier; temporaries are inlined into the expression that uses them.
//! Phi nodes become copies at the end of each predecessor when the incoming
//! identifier differs from the phi's own, which the one-identifier-per-name
//! scheme makes rare.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::ast::{BinOp, RelOp};
use crate::interp::py_repr_str;
use crate::ssa::{BlockId, BuiltinFn, Inst, Literal, Op, Operand, Region, SsaProgram, ValueId};

pub const HEADER: &str = "# generated by linguinec";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EmitOptions {
    /// Append `# line N` to each emitted statement.
    pub annotate: bool,
    /// Miscompile `plus` as `-`; only for checking that differential
    /// testing notices a broken back end.
    #[doc(hidden)]
    pub flip_plus: bool,
}

/// Naming and copy decisions made before emission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmitPlan {
    /// Python identifier of every non-temporary value.
    pub idents: BTreeMap<ValueId, String>,
    /// Blocks in emission order.
    pub order: Vec<BlockId>,
    /// Phi copies `(predecessor, destination, source)` placed at the end
    /// of the predecessor.
    pub copies: Vec<(BlockId, String, String)>,
}

const PY_KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import",
    "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while",
    "with", "yield",
];

/// Built-ins the emitted code calls; user names must not shadow them.
const PY_BUILTINS_USED: &[&str] = &["print", "sum", "len", "__import__"];

pub fn snake_case(name: &str) -> String {
    let mut out = String::with_capacity(name.len() + 4);
    let mut prev_lower = false;
    for c in name.chars() {
        if c.is_ascii_uppercase() {
            if prev_lower {
                out.push('_');
            }
            out.push(c.to_ascii_lowercase());
            prev_lower = false;
        } else {
            out.push(c);
            prev_lower = c.is_ascii_lowercase() || c.is_ascii_digit();
        }
    }
    out
}

pub fn plan(prog: &SsaProgram) -> EmitPlan {
    let mut by_base: BTreeMap<&str, String> = BTreeMap::new();
    let mut taken: BTreeSet<String> = BTreeSet::new();
    let mut idents = BTreeMap::new();
    for (i, info) in prog.values.iter().enumerate() {
        let Some(base) = info.base.as_deref() else {
            continue;
        };
        let ident = by_base
            .entry(base)
            .or_insert_with(|| {
                let mut id = snake_case(base);
                if PY_KEYWORDS.contains(&id.as_str()) || PY_BUILTINS_USED.contains(&id.as_str()) {
                    id.push('_');
                }
                let stem = id.clone();
                let mut n = 2;
                while taken.contains(&id) {
                    id = format!("{stem}_{n}");
                    n += 1;
                }
                taken.insert(id.clone());
                id
            })
            .clone();
        idents.insert(ValueId(i as u32), ident);
    }

    let mut copies = Vec::new();
    for b in &prog.blocks {
        for s in prog.succ.get(&b.id).into_iter().flatten() {
            for phi in &prog.block(*s).phis {
                let Some((_, v)) = phi.incoming.iter().find(|(p, _)| *p == b.id) else {
                    continue;
                };
                let (Some(dst), Some(src)) = (idents.get(&phi.dst), idents.get(v)) else {
                    continue;
                };
                if dst != src {
                    copies.push((b.id, dst.clone(), src.clone()));
                }
            }
        }
    }

    let mut order = Vec::new();
    fn walk(regions: &[Region], order: &mut Vec<BlockId>) {
        for r in regions {
            match r {
                Region::Code(b) => order.push(*b),
                Region::If {
                    then_region,
                    else_region,
                    ..
                } => {
                    walk(then_region, order);
                    walk(else_region, order);
                }
                Region::While { header, body, .. } | Region::ForEach { header, body, .. } => {
                    order.push(*header);
                    walk(body, order);
                }
            }
        }
    }
    walk(&prog.regions, &mut order);
    EmitPlan {
        idents,
        order,
        copies,
    }
}

// Python precedence levels, loosest first.
const P_CMP: u8 = 1;
const P_ADD: u8 = 2;
const P_MUL: u8 = 3;
const P_UNARY: u8 = 4;
const P_ATOM: u8 = 5;

struct Emitter<'a> {
    prog: &'a SsaProgram,
    plan: EmitPlan,
    opts: EmitOptions,
    /// Rendered temporaries waiting for their use.
    pending: HashMap<ValueId, (String, u8)>,
    /// Loop machinery and `for` variables, which have no statement of their own.
    skip: BTreeSet<ValueId>,
}

type Lines = Vec<String>;

fn indent(lines: Lines) -> Lines {
    lines.into_iter().map(|l| format!("    {l}")).collect()
}

fn body_or_pass(lines: Lines) -> Lines {
    if lines.is_empty() {
        vec!["    pass".to_string()]
    } else {
        indent(lines)
    }
}

impl<'a> Emitter<'a> {
    fn ident(&self, v: ValueId) -> String {
        self.plan
            .idents
            .get(&v)
            .cloned()
            .unwrap_or_else(|| self.prog.name(v))
    }

    fn operand(&self, o: &Operand) -> (String, u8) {
        match o {
            Operand::Value(v) => self
                .pending
                .get(v)
                .cloned()
                .unwrap_or_else(|| (self.ident(*v), P_ATOM)),
            Operand::Lit(Literal::Int(i)) => (i.to_string(), if *i < 0 { P_UNARY } else { P_ATOM }),
            Operand::Lit(Literal::Str(s)) => (py_repr_str(s), P_ATOM),
            Operand::Lit(Literal::Bool(b)) => {
                ((if *b { "True" } else { "False" }).to_string(), P_ATOM)
            }
            Operand::Undef => ("None".to_string(), P_ATOM),
        }
    }

    fn at_least(&self, o: &Operand, prec: u8) -> String {
        let (s, p) = self.operand(o);
        if p >= prec {
            s
        } else {
            format!("({s})")
        }
    }

    fn expr(&self, op: &Op) -> Option<(String, u8)> {
        Some(match op {
            Op::Const(l) => self.operand(&Operand::Lit(l.clone())),
            Op::Copy(a) => self.operand(a),
            Op::BinOp(b, x, y) => {
                let (sym, p) = match b {
                    BinOp::Plus if self.opts.flip_plus => ("-", P_ADD),
                    BinOp::Plus => ("+", P_ADD),
                    BinOp::Minus => ("-", P_ADD),
                    BinOp::Times => ("*", P_MUL),
                    BinOp::DividedBy => ("//", P_MUL),
                    BinOp::Modulo => ("%", P_MUL),
                };
                (
                    format!("{} {sym} {}", self.at_least(x, p), self.at_least(y, p + 1)),
                    p,
                )
            }
            Op::RelOp(r, x, y) => {
                let sym = match r {
                    RelOp::Is | RelOp::IsEqualTo => "==",
                    RelOp::GreaterThan => ">",
                    RelOp::LessThan => "<",
                };
                (
                    format!(
                        "{} {sym} {}",
                        self.at_least(x, P_CMP + 1),
                        self.at_least(y, P_CMP + 1)
                    ),
                    P_CMP,
                )
            }
            Op::Reduce { op, init, list } => {
                let l = self.operand(list).0;
                match (op, init) {
                    (BinOp::Plus, Operand::Lit(Literal::Int(0))) if !self.opts.flip_plus => {
                        (format!("sum({l})"), P_ATOM)
                    }
                    (BinOp::Plus, _) if !self.opts.flip_plus => {
                        (format!("sum({l}, {})", self.operand(init).0), P_ATOM)
                    }
                    _ => {
                        let sym = match op {
                            BinOp::Plus if self.opts.flip_plus => "-",
                            BinOp::Plus => "+",
                            BinOp::Minus => "-",
                            BinOp::Times => "*",
                            BinOp::DividedBy => "//",
                            BinOp::Modulo => "%",
                        };
                        (
                            format!(
                                "__import__('functools').reduce(lambda a, b: a {sym} b, {l}, {})",
                                self.operand(init).0
                            ),
                            P_ATOM,
                        )
                    }
                }
            }
            Op::Builtin(BuiltinFn::Len, args) => {
                (format!("len({})", self.operand(&args[0]).0), P_ATOM)
            }
            Op::Builtin(BuiltinFn::Rev, args) => {
                (format!("{}[::-1]", self.at_least(&args[0], P_ATOM)), P_ATOM)
            }
            Op::Builtin(BuiltinFn::Index, args) => (
                format!(
                    "{}[{}]",
                    self.at_least(&args[0], P_ATOM),
                    self.operand(&args[1]).0
                ),
                P_ATOM,
            ),
            Op::ListNew(elems) => (
                format!(
                    "[{}]",
                    elems
                        .iter()
                        .map(|e| self.operand(e).0)
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
                P_ATOM,
            ),
            Op::Append { list, elem } => (
                format!(
                    "{} + [{}]",
                    self.at_least(list, P_ADD),
                    self.operand(elem).0
                ),
                P_ADD,
            ),
            Op::Print(_) | Op::Br { .. } | Op::Jmp(_) => return None,
        })
    }

    fn line(&self, text: String, inst: &Inst) -> String {
        if self.opts.annotate && inst.span.line > 0 {
            format!("{text}  # line {}", inst.span.line)
        } else {
            text
        }
    }

    fn code(&mut self, b: BlockId) -> Lines {
        let mut out = Vec::new();
        for inst in &self.prog.block(b).insts {
            if inst.dst.is_some_and(|d| self.skip.contains(&d)) {
                continue;
            }
            match (&inst.op, inst.dst) {
                (Op::Print(a), _) => {
                    let text = format!("print({})", self.operand(a).0);
                    out.push(self.line(text, inst));
                }
                (Op::Br { .. } | Op::Jmp(_), _) => {}
                (op, Some(d)) if self.prog.value(d).base.is_none() => {
                    if let Some(e) = self.expr(op) {
                        self.pending.insert(d, e);
                    }
                }
                (op, Some(d)) => {
                    if let Some((e, _)) = self.expr(op) {
                        let text = format!("{} = {e}", self.ident(d));
                        out.push(self.line(text, inst));
                    }
                }
                (_, None) => {}
            }
        }
        for (pred, dst, src) in &self.plan.copies {
            if *pred == b {
                out.push(format!("{dst} = {src}"));
            }
        }
        out
    }

    fn terminator(&self, b: BlockId) -> Option<&'a Inst> {
        self.prog
            .block(b)
            .insts
            .last()
            .filter(|i| i.op.is_terminator())
    }

    fn header_line(&self, text: String, b: BlockId) -> String {
        match self.terminator(b) {
            Some(inst) => self.line(text, inst),
            None => text,
        }
    }

    fn regions(&mut self, regions: &[Region]) -> Lines {
        let mut out = Vec::new();
        for r in regions {
            match r {
                Region::Code(b) => out.extend(self.code(*b)),
                Region::If {
                    head,
                    cond,
                    then_region,
                    else_region,
                    ..
                } => {
                    let c = self.operand(cond).0;
                    out.push(self.header_line(format!("if {c}:"), *head));
                    let then_lines = self.regions(then_region);
                    out.extend(body_or_pass(then_lines));
                    let mut rest: &[Region] = else_region;
                    loop {
                        if let [Region::Code(a), Region::If {
                            head,
                            cond,
                            then_region,
                            else_region,
                            ..
                        }, Region::Code(z)] = rest
                        {
                            let pre = self.code(*a);
                            if pre.is_empty() {
                                let c = self.operand(cond).0;
                                let arm = self.regions(then_region);
                                let post = self.code(*z);
                                if post.is_empty() {
                                    out.push(self.header_line(format!("elif {c}:"), *head));
                                    out.extend(body_or_pass(arm));
                                    rest = else_region;
                                    continue;
                                }
                            }
                        }
                        let lines = self.regions(rest);
                        if !lines.is_empty() {
                            out.push("else:".to_string());
                            out.extend(indent(lines));
                        }
                        break;
                    }
                }
                Region::While {
                    header, cond, body, ..
                } => {
                    let setup = self.code(*header);
                    debug_assert!(setup.is_empty());
                    let c = self.operand(cond).0;
                    out.push(self.header_line(format!("while {c}:"), *header));
                    let lines = self.regions(body);
                    out.extend(body_or_pass(lines));
                }
                Region::ForEach {
                    var,
                    iterable,
                    body,
                    ..
                } => {
                    let it = self.operand(iterable).0;
                    let def = self
                        .prog
                        .blocks
                        .iter()
                        .flat_map(|b| &b.insts)
                        .find(|i| i.dst == Some(*var));
                    let text = format!("for {} in {it}:", self.ident(*var));
                    out.push(match def {
                        Some(inst) => self.line(text, inst),
                        None => text,
                    });
                    let lines = self.regions(body);
                    out.extend(body_or_pass(lines));
                }
            }
        }
        out
    }
}

fn collect_skip(regions: &[Region], skip: &mut BTreeSet<ValueId>) {
    for r in regions {
        match r {
            Region::Code(_) => {}
            Region::If {
                then_region,
                else_region,
                ..
            } => {
                collect_skip(then_region, skip);
                collect_skip(else_region, skip);
            }
            Region::While { body, .. } => collect_skip(body, skip),
            Region::ForEach {
                var,
                body,
                machinery,
                ..
            } => {
                skip.insert(*var);
                skip.extend(machinery.iter().copied());
                collect_skip(body, skip);
            }
        }
    }
}

/// Emit a Python program.
pub fn emit(prog: &SsaProgram, opts: EmitOptions) -> String {
    let mut skip = BTreeSet::new();
    collect_skip(&prog.regions, &mut skip);
    let mut em = Emitter {
        prog,
        plan: plan(prog),
        opts,
        pending: HashMap::new(),
        skip,
    };
    let lines = em.regions(&prog.regions);
    let mut out = String::from(HEADER);
    out.push('\n');
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::desugar::desugar;
    use crate::lexer::tokenize;
    use crate::parser::parse;
    use crate::ssa::lower;
    use crate::typeck::infer;

    fn py(src: &str) -> String {
        let tp = infer(&desugar(&parse(&tokenize(src).unwrap()).unwrap())).unwrap();
        let out = emit(&lower(&tp).unwrap(), EmitOptions::default());
        out.strip_prefix(&format!("{HEADER}\n"))
            .unwrap()
            .to_string()
    }

    #[test]
    fn sum_of_is_builtin_sum() {
        assert_eq!(
            py("Let numbers be [1, 2]. Let total be sum of numbers."),
            "numbers = [1, 2]\ntotal = sum(numbers)\n"
        );
    }

    #[test]
    fn print_arithmetic() {
        assert_eq!(py("Print 2 plus 3."), "print(2 + 3)\n");
    }

    #[test]
    fn if_else_assigns_one_name() {
        assert_eq!(
            py("Let c be true. If c: Let y be 1. Else: Let y be 2. End if. Print y."),
            "c = True\nif c:\n    y = 1\nelse:\n    y = 2\nprint(y)\n"
        );
    }

    #[test]
    fn elif_chain() {
        let out =
            py("Let i be 3. If i is 1: Print 1. Else if i is 2: Print 2. Else: Print 3. End if.");
        assert_eq!(
            out,
            "i = 3\nif i == 1:\n    print(1)\nelif i == 2:\n    print(2)\nelse:\n    print(3)\n"
        );
    }

    #[test]
    fn loops() {
        let out = py("Let i be 0. While i less than 3: Let i be i plus 1. End while. For each x in [1, 2] reversed: Print x. End for.");
        assert_eq!(
            out,
            "i = 0\nwhile i < 3:\n    i = i + 1\nfor x in [1, 2][::-1]:\n    print(x)\n"
        );
    }

    #[test]
    fn precedence_and_operators() {
        assert_eq!(py("Print 1 minus 2 minus 3."), "print(1 - 2 - 3)\n");
        assert_eq!(py("Print 1 plus 2 times 3."), "print(1 + 2 * 3)\n");
        assert_eq!(py("Print 7 divided by 2 modulo 3."), "print(7 // 2 % 3)\n");
        assert_eq!(py("Print 0 minus -3."), "print(0 - -3)\n");
        assert_eq!(py("Print 1 plus 2 is 3."), "print(1 + 2 == 3)\n");
        assert_eq!(
            py("Print length of \"ab\" reversed."),
            "print(len('ab'[::-1]))\n"
        );
    }

    #[test]
    fn append_rebinds() {
        assert_eq!(
            py("Let xs be [1]. Add 2 to xs."),
            "xs = [1]\nxs = xs + [2]\n"
        );
    }

    #[test]
    fn names_are_snake_case_and_safe() {
        assert_eq!(snake_case("totalCount"), "total_count");
        assert_eq!(
            py("Let totalCount be 1. Let len be 2. Let total_count be 3. Print totalCount."),
            "total_count = 1\nlen_ = 2\ntotal_count_2 = 3\nprint(total_count)\n"
        );
        assert_eq!(py("Let pass be 1."), "pass_ = 1\n");
    }

    #[test]
    fn pronouns_become_names() {
        assert_eq!(
            py("Let x be 4. Print it times it."),
            "x = 4\nprint(x * x)\n"
        );
    }

    #[test]
    fn empty_arms_get_pass() {
        assert_eq!(
            py("If true: End if. While false: End while."),
            "if True:\n    pass\nwhile False:\n    pass\n"
        );
    }

    #[test]
    fn annotate_and_header() {
        let tp = infer(&desugar(
            &parse(&tokenize("Let x be 1.\nPrint x.").unwrap()).unwrap(),
        ))
        .unwrap();
        let out = emit(
            &lower(&tp).unwrap(),
            EmitOptions {
                annotate: true,
                ..Default::default()
            },
        );
        assert_eq!(
            out,
            "# generated by linguinec\nx = 1  # line 1\nprint(x)  # line 2\n"
        );
    }

    #[test]
    fn stable() {
        let src = "Let xs be [1, 2]. For each x in xs: If x is 1: Print \"one\". End if. End for.";
        assert_eq!(py(src), py(src));
    }
}
