//! Random program generation, differential testing and the fault corpus.
//!
//! The generator writes source text directly. It tracks, as it goes, which
//! names are bound on every path, the single type of every name, and the
//! pronoun cell exactly as the referent analysis computes it, so every
//! program it produces is accepted by the front end. Loops are counter loops
//! with at most 20 trips or `for each` over finite lists.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ast::{ExprKind, Program};
use crate::codegen::{emit, EmitOptions};
use crate::driver::{compile, run_python_with_timeout, Category, CompileOptions, Diagnostic};
use crate::interp::{run_core, run_ssa, RunOptions};
use crate::lexer::tokenize;
use crate::parser::parse;
use crate::refanalysis::RefValue;
use crate::types::Type;

/// Constructs the generator may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Constructs {
    pub print: bool,
    pub strings: bool,
    pub bools: bool,
    pub lists: bool,
    pub arithmetic: bool,
    pub relations: bool,
    pub if_else: bool,
    pub while_loops: bool,
    pub for_each: bool,
    pub pronouns: bool,
    pub builtins: bool,
    pub append: bool,
}

impl Constructs {
    pub const ALL: Constructs = Constructs {
        print: true,
        strings: true,
        bools: true,
        lists: true,
        arithmetic: true,
        relations: true,
        if_else: true,
        while_loops: true,
        for_each: true,
        pronouns: true,
        builtins: true,
        append: true,
    };

    /// `Let`, `Print` and integer literals only.
    pub const MINIMAL: Constructs = Constructs {
        print: true,
        strings: false,
        bools: false,
        lists: false,
        arithmetic: false,
        relations: false,
        if_else: false,
        while_loops: false,
        for_each: false,
        pronouns: false,
        builtins: false,
        append: false,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    /// Maximum expression tree depth; a literal has depth 1.
    pub max_depth: usize,
    pub min_statements: usize,
    pub max_statements: usize,
    pub constructs: Constructs,
}

impl GenConfig {
    pub fn new(seed: u64) -> Self {
        GenConfig {
            seed,
            max_depth: 7,
            min_statements: 1,
            max_statements: 15,
            constructs: Constructs::ALL,
        }
    }
}

/// A generated program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub seed: u64,
    pub source: String,
    /// Candidates discarded because they fault at run time.
    pub discarded: u32,
}

// precedence levels of the surface grammar, loosest first
const L_REL: u8 = 0;
const L_ADD: u8 = 1;
const L_MUL: u8 = 2;
const L_PREFIX: u8 = 3;
const L_POSTFIX: u8 = 4;

const MAX_LOOP_NESTING: usize = 2;
const MAX_BLOCK_NESTING: usize = 3;

#[derive(Clone)]
struct Scope {
    /// Names bound on every path here.
    bound: BTreeSet<String>,
    /// The pronoun cell.
    cell: RefValue,
}

struct Gen<'c> {
    rng: ChaCha8Rng,
    cfg: &'c GenConfig,
    /// One type per name, for the whole program.
    types: BTreeMap<String, Type>,
    /// Names that are loop counters or loop variables; never `Let` targets.
    reserved: BTreeSet<String>,
    /// Lists being iterated by an enclosing `for each`; never appended to.
    frozen: BTreeSet<String>,
    fresh: u32,
    /// Most recent binding in the text; what the parser resolves pronouns to.
    last: Option<String>,
    out: String,
    loops: usize,
    blocks: usize,
}

/// Smallest expression depth that can produce `ty` without variables.
fn min_depth(ty: &Type) -> usize {
    match ty {
        Type::List(e) => 1 + min_depth(e),
        _ => 1,
    }
}

fn join_scopes(a: &Scope, b: &Scope) -> Scope {
    Scope {
        bound: a.bound.intersection(&b.bound).cloned().collect(),
        cell: a.cell.join(&b.cell),
    }
}

impl<'c> Gen<'c> {
    fn new(cfg: &'c GenConfig, seed: u64) -> Self {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            cfg,
            types: BTreeMap::new(),
            reserved: BTreeSet::new(),
            frozen: BTreeSet::new(),
            fresh: 0,
            last: None,
            out: String::new(),
            loops: 0,
            blocks: 0,
        }
    }

    fn fresh(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    fn line(&mut self, indent: usize, text: &str) {
        let _ = writeln!(self.out, "{}{text}", "    ".repeat(indent));
    }

    fn coin(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    /// Types a new variable may take.
    fn value_types(&self) -> Vec<Type> {
        let c = &self.cfg.constructs;
        let mut v = vec![Type::Int];
        if c.bools {
            v.push(Type::Bool);
        }
        if c.strings {
            v.push(Type::Str);
        }
        if c.lists && self.cfg.max_depth >= 2 {
            v.push(Type::list(Type::Int));
            if c.strings {
                v.push(Type::list(Type::Str));
            }
            if c.bools {
                v.push(Type::list(Type::Bool));
            }
        }
        v
    }

    fn pick_type(&mut self) -> Type {
        let v = self.value_types();
        v.choose(&mut self.rng).cloned().unwrap_or(Type::Int)
    }

    fn vars_of(&self, scope: &Scope, ty: &Type) -> Vec<String> {
        scope
            .bound
            .iter()
            .filter(|n| self.types.get(*n) == Some(ty))
            .cloned()
            .collect()
    }

    fn pronoun_for(&self, scope: &Scope, ty: &Type) -> bool {
        if !self.cfg.constructs.pronouns {
            return false;
        }
        match &scope.cell {
            RefValue::Ref(n) => {
                self.last.as_ref() == Some(n)
                    && scope.bound.contains(n)
                    && self.types.get(n) == Some(ty)
            }
            _ => false,
        }
    }

    fn pronoun_word(&mut self) -> &'static str {
        ["it", "it", "it", "them", "this", "that"]
            .choose(&mut self.rng)
            .copied()
            .unwrap_or("it")
    }

    fn literal(&mut self, ty: &Type) -> String {
        match ty {
            Type::Int => {
                let v: i64 = if self.coin(0.8) {
                    self.rng.gen_range(0..=20)
                } else {
                    self.rng.gen_range(-50..=1000)
                };
                v.to_string()
            }
            Type::Bool => if self.coin(0.5) { "true" } else { "false" }.to_string(),
            Type::Str => {
                const WORDS: &[&str] = &[
                    "pasta",
                    "olive",
                    "basil",
                    "it's",
                    "red sauce",
                    "",
                    "a b",
                    "noon",
                    "x",
                ];
                format!(
                    "\"{}\"",
                    WORDS.choose(&mut self.rng).copied().unwrap_or("x")
                )
            }
            Type::List(_) | Type::Var(_) => unreachable!("list literals are built by expr"),
        }
    }

    /// An expression of type `ty`, depth at most `depth`, that parses at
    /// precedence level `level` or tighter.
    fn expr(&mut self, scope: &Scope, ty: &Type, depth: usize, level: u8) -> String {
        let c = self.cfg.constructs;
        let vars = self.vars_of(scope, ty);
        let pronoun = self.pronoun_for(scope, ty);
        let leaf_ok = !matches!(ty, Type::List(_)) || !vars.is_empty() || pronoun;

        if depth <= 1 || (leaf_ok && self.coin(0.3)) {
            if pronoun && self.coin(0.4) {
                return self.pronoun_word().to_string();
            }
            if !vars.is_empty() && (self.coin(0.6) || matches!(ty, Type::List(_))) {
                return vars.choose(&mut self.rng).cloned().unwrap_or_default();
            }
            if !matches!(ty, Type::List(_)) {
                return self.literal(ty);
            }
            if pronoun {
                return self.pronoun_word().to_string();
            }
        }

        // composite forms; each entry is tried only if legal here
        let d = depth.saturating_sub(1);
        let mut options: Vec<u8> = Vec::new();
        match ty {
            Type::Int => {
                if c.arithmetic && level <= L_ADD {
                    options.extend([0, 0]);
                }
                if c.arithmetic && level <= L_MUL {
                    options.extend([1, 1]);
                }
                if c.builtins && c.lists && level <= L_PREFIX && d >= 2 {
                    options.push(2);
                }
                if c.builtins && level <= L_PREFIX && (c.strings || (c.lists && d >= 2)) {
                    options.push(3);
                }
            }
            Type::Bool => {
                if c.relations && level == L_REL {
                    options.extend([4, 4, 4]);
                }
            }
            Type::Str => {
                if c.builtins && level <= L_POSTFIX {
                    options.push(5);
                }
            }
            Type::List(e) => {
                if d >= min_depth(e) {
                    options.extend([6, 6]);
                }
                if c.builtins && level <= L_POSTFIX && d >= min_depth(ty) {
                    options.push(5);
                }
            }
            Type::Var(_) => {}
        }
        let Some(&choice) = options.choose(&mut self.rng) else {
            return self.leaf(scope, ty, depth);
        };
        match choice {
            0 => {
                let op = ["plus", "minus"]
                    .choose(&mut self.rng)
                    .copied()
                    .unwrap_or("plus");
                let l = self.expr(scope, ty, d, L_ADD);
                let r = self.expr(scope, ty, d, L_MUL);
                format!("{l} {op} {r}")
            }
            1 => {
                let op = ["times", "divided by", "modulo"]
                    .choose(&mut self.rng)
                    .copied()
                    .unwrap_or("times");
                let l = self.expr(scope, ty, d, L_MUL);
                let r = if op != "times" && self.coin(0.7) {
                    self.rng.gen_range(1..=9).to_string()
                } else {
                    self.expr(scope, ty, d, L_PREFIX)
                };
                format!("{l} {op} {r}")
            }
            2 => format!(
                "sum of {}",
                self.expr(scope, &Type::list(Type::Int), d, L_PREFIX)
            ),
            3 => {
                let mut candidates = Vec::new();
                if c.strings {
                    candidates.push(Type::Str);
                }
                if c.lists && d >= 2 {
                    candidates.push(Type::list(Type::Int));
                    if c.strings {
                        candidates.push(Type::list(Type::Str));
                    }
                }
                let t = candidates
                    .choose(&mut self.rng)
                    .cloned()
                    .unwrap_or(Type::Str);
                format!("length of {}", self.expr(scope, &t, d, L_PREFIX))
            }
            4 => {
                let mut candidates = vec![Type::Int, Type::Int];
                if c.bools {
                    candidates.push(Type::Bool);
                }
                if c.strings {
                    candidates.push(Type::Str);
                }
                if c.lists && d >= 2 {
                    candidates.push(Type::list(Type::Int));
                }
                let t = candidates
                    .choose(&mut self.rng)
                    .cloned()
                    .unwrap_or(Type::Int);
                let ops: &[&str] = if t == Type::Int {
                    &[
                        "is",
                        "is equal to",
                        "greater than",
                        "is greater than",
                        "less than",
                        "is less than",
                    ]
                } else {
                    &["is", "is equal to"]
                };
                let op = ops.choose(&mut self.rng).copied().unwrap_or("is");
                let l = self.expr(scope, &t, d, L_ADD);
                let r = self.expr(scope, &t, d, L_ADD);
                format!("{l} {op} {r}")
            }
            5 => format!("{} reversed", self.expr(scope, ty, d, L_POSTFIX)),
            _ => {
                let Type::List(e) = ty else { unreachable!() };
                let n = self.rng.gen_range(1..=4);
                let items: Vec<String> = (0..n).map(|_| self.expr(scope, e, d, L_REL)).collect();
                format!("[{}]", items.join(", "))
            }
        }
    }

    /// Fallback when no composite form fits: a variable, pronoun or literal.
    fn leaf(&mut self, scope: &Scope, ty: &Type, depth: usize) -> String {
        let vars = self.vars_of(scope, ty);
        if let Some(v) = vars.choose(&mut self.rng) {
            return v.clone();
        }
        if self.pronoun_for(scope, ty) {
            return self.pronoun_word().to_string();
        }
        match ty {
            Type::List(e) if depth >= min_depth(ty) => {
                let item = self.expr(scope, e, depth - 1, L_REL);
                format!("[{item}]")
            }
            _ => self.literal(ty),
        }
    }

    fn block(&mut self, scope: &mut Scope, indent: usize, count: usize) {
        for _ in 0..count {
            self.stmt(scope, indent);
        }
    }

    fn stmt(&mut self, scope: &mut Scope, indent: usize) {
        let c = self.cfg.constructs;
        let mut kinds = vec![0u8, 0, 0, 1, 1];
        let nested_ok = self.blocks < MAX_BLOCK_NESTING;
        if c.if_else && nested_ok {
            kinds.push(2);
        }
        if c.while_loops && nested_ok && self.loops < MAX_LOOP_NESTING && self.cfg.max_depth >= 2 {
            kinds.push(3);
        }
        if c.for_each
            && c.lists
            && nested_ok
            && self.loops < MAX_LOOP_NESTING
            && self.cfg.max_depth >= 2
        {
            kinds.push(4);
        }
        let lists: Vec<String> = scope
            .bound
            .iter()
            .filter(|n| {
                matches!(self.types.get(*n), Some(Type::List(_)))
                    && !self.reserved.contains(*n)
                    && !self.frozen.contains(*n)
            })
            .cloned()
            .collect();
        if c.append && !lists.is_empty() {
            kinds.push(5);
        }
        if !c.print {
            kinds.retain(|k| *k != 1);
        }
        let depth = self.cfg.max_depth;
        match kinds.choose(&mut self.rng).copied().unwrap_or(0) {
            0 => {
                let existing: Vec<String> = self
                    .types
                    .keys()
                    .filter(|n| !self.reserved.contains(*n))
                    .cloned()
                    .collect();
                let (name, ty) = match existing.choose(&mut self.rng) {
                    Some(n) if self.coin(0.35) => (n.clone(), self.types[n].clone()),
                    _ => {
                        let ty = self.pick_type();
                        (self.fresh("v"), ty)
                    }
                };
                let value = self.expr(scope, &ty, depth, L_REL);
                self.types.insert(name.clone(), ty);
                self.line(indent, &format!("Let {name} be {value}."));
                scope.bound.insert(name.clone());
                self.last = Some(name.clone());
                scope.cell = RefValue::Ref(name);
            }
            1 => {
                let ty = self.pick_type();
                let e = self.expr(scope, &ty, depth, L_REL);
                self.line(indent, &format!("Print {e}."));
            }
            2 => self.if_stmt(scope, indent),
            3 => {
                let counter = self.fresh("c");
                self.reserved.insert(counter.clone());
                self.types.insert(counter.clone(), Type::Int);
                let trips = self.rng.gen_range(0..=20);
                self.line(indent, &format!("Let {counter} be 0."));
                self.last = Some(counter.clone());
                let cmp = if self.coin(0.5) {
                    "less than"
                } else {
                    "is less than"
                };
                self.line(indent, &format!("While {counter} {cmp} {trips}:"));
                let mut body = scope.clone();
                body.bound.insert(counter.clone());
                body.cell = RefValue::Ref(counter.clone());
                self.loops += 1;
                self.blocks += 1;
                let n = self.rng.gen_range(0..=3);
                self.block(&mut body, indent + 1, n);
                self.loops -= 1;
                self.blocks -= 1;
                self.line(indent + 1, &format!("Let {counter} be {counter} plus 1."));
                self.last = Some(counter.clone());
                self.line(indent, "End while.");
                scope.bound.insert(counter.clone());
                scope.cell = RefValue::Ref(counter);
            }
            4 => {
                let elem = [Type::Int, Type::Int, Type::Str, Type::Bool]
                    .choose(&mut self.rng)
                    .cloned()
                    .filter(|t| (*t != Type::Str || c.strings) && (*t != Type::Bool || c.bools))
                    .unwrap_or(Type::Int);
                let iter = self.expr(scope, &Type::list(elem.clone()), depth, L_REL);
                let var = self.fresh("e");
                self.reserved.insert(var.clone());
                self.types.insert(var.clone(), elem);
                self.line(indent, &format!("For each {var} in {iter}:"));
                self.last = Some(var.clone());
                let newly_frozen: Vec<String> = iter
                    .split(|ch: char| !ch.is_ascii_alphanumeric())
                    .filter(|w| self.types.contains_key(*w) && self.frozen.insert(w.to_string()))
                    .map(str::to_string)
                    .collect();
                let pre = scope.clone();
                let mut body = scope.clone();
                body.bound.insert(var.clone());
                body.cell = RefValue::Ref(var);
                self.loops += 1;
                self.blocks += 1;
                let n = self.rng.gen_range(1..=3);
                self.block(&mut body, indent + 1, n);
                self.loops -= 1;
                self.blocks -= 1;
                self.line(indent, "End for.");
                for n in newly_frozen {
                    self.frozen.remove(&n);
                }
                scope.bound = pre.bound;
                scope.cell = pre.cell.join(&body.cell);
            }
            _ => {
                let target = lists.choose(&mut self.rng).cloned().unwrap_or_default();
                let Some(Type::List(e)) = self.types.get(&target).cloned() else {
                    return;
                };
                let v = self.expr(scope, &e, depth, L_REL);
                self.line(indent, &format!("Add {v} to {target}."));
            }
        }
    }

    fn if_stmt(&mut self, scope: &mut Scope, indent: usize) {
        self.blocks += 1;
        let depth = self.cfg.max_depth;
        let cond = self.expr(scope, &Type::Bool, depth, L_REL);
        self.line(indent, &format!("If {cond}:"));
        let mut then_scope = scope.clone();
        let n = self.rng.gen_range(1..=3);
        self.block(&mut then_scope, indent + 1, n);
        let mut arms = vec![then_scope];
        while self.coin(0.3) {
            let cond = self.expr(scope, &Type::Bool, depth, L_REL);
            self.line(indent, &format!("Else if {cond}:"));
            let mut s = scope.clone();
            let n = self.rng.gen_range(1..=2);
            self.block(&mut s, indent + 1, n);
            arms.push(s);
        }
        if self.coin(0.5) {
            self.line(indent, "Else:");
            let mut s = scope.clone();
            let n = self.rng.gen_range(1..=3);
            self.block(&mut s, indent + 1, n);
            arms.push(s);
        } else {
            arms.push(scope.clone());
        }
        self.line(indent, "End if.");
        self.blocks -= 1;
        let merged = arms
            .iter()
            .skip(1)
            .fold(arms[0].clone(), |acc, s| join_scopes(&acc, s));
        *scope = merged;
    }
}

/// Write one candidate program for `seed` without filtering.
pub fn gen_candidate(cfg: &GenConfig, seed: u64) -> String {
    let mut g = Gen::new(cfg, seed);
    let mut scope = Scope {
        bound: BTreeSet::new(),
        cell: RefValue::Bottom,
    };
    let n = g
        .rng
        .gen_range(cfg.min_statements..=cfg.max_statements.max(cfg.min_statements));
    g.block(&mut scope, 0, n);
    g.out
}

/// Derived seed for the `attempt`-th candidate of `seed`.
fn attempt_seed(seed: u64, attempt: u32) -> u64 {
    seed ^ (attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Generate a program that compiles and runs to completion in the
/// interpreter. Candidates that fault at run time (division by zero,
/// overflow) are discarded and regenerated from a derived seed.
pub fn gen_program(cfg: &GenConfig) -> Generated {
    let mut discarded = 0;
    loop {
        let source = gen_candidate(cfg, attempt_seed(cfg.seed, discarded));
        let (art, result) = compile(
            &source,
            "gen",
            CompileOptions {
                skip_codegen: true,
                ..Default::default()
            },
        );
        let runs = match (&result, &art.typed) {
            (Ok(()), Some(tp)) => run_core(&tp.program, RunOptions::default()).is_ok(),
            _ => panic!(
                "generator produced a rejected program (seed {}):\n{source}\n{:?}",
                cfg.seed, result
            ),
        };
        if runs {
            return Generated {
                seed: cfg.seed,
                source,
                discarded,
            };
        }
        discarded += 1;
    }
}

/// Deepest expression in a program.
pub fn max_expr_depth(program: &Program) -> usize {
    let mut d = 0;
    for s in &program.stmts {
        s.walk_exprs(&mut |e| d = d.max(e.depth()));
    }
    d
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiffOutcome {
    Match { output: String },
    Mismatch(Mismatch),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Mismatch {
    pub source: String,
    pub interp: String,
    pub python: String,
    pub detail: String,
}

impl Mismatch {
    pub fn report(&self, seed: u64) -> String {
        let comment = |s: &str| s.lines().map(|l| format!("#   {l}\n")).collect::<String>();
        format!(
            "# differential mismatch, seed {seed}\n# {}\n# interpreter output:\n{}# python output:\n{}{}",
            self.detail,
            comment(&self.interp),
            comment(&self.python),
            self.source
        )
    }
}

/// Python wall-clock limit per differential run.
pub const DIFF_TIMEOUT: std::time::Duration = std::time::Duration::from_secs(2);

/// Differential runs spent on shrinking one failure.
pub const SHRINK_BUDGET: usize = 40;

/// Compare the interpreter with the emitted Python on one program.
pub fn differential_run(source: &str, emit_opts: EmitOptions) -> DiffOutcome {
    let mismatch = |interp: String, python: String, detail: String| {
        DiffOutcome::Mismatch(Mismatch {
            source: source.to_string(),
            interp,
            python,
            detail,
        })
    };
    let (art, result) = compile(
        source,
        "diff",
        CompileOptions {
            skip_codegen: true,
            ..Default::default()
        },
    );
    if let Err(d) = result {
        return mismatch(
            String::new(),
            String::new(),
            format!("front end rejected the program: {}", d.message),
        );
    }
    let (Some(tp), Some(ssa)) = (&art.typed, &art.ssa) else {
        return mismatch(
            String::new(),
            String::new(),
            "front end produced nothing".into(),
        );
    };
    let interp = match run_core(&tp.program, RunOptions::default()) {
        Ok(o) => o.output,
        Err(e) => {
            return mismatch(
                e.output,
                String::new(),
                format!("interpreter fault: {}", e.fault),
            )
        }
    };
    let python_src = emit(ssa, emit_opts);
    match run_python_with_timeout(&python_src, DIFF_TIMEOUT) {
        Ok((true, out, _)) if out == interp => DiffOutcome::Match { output: interp },
        Ok((ok, out, err)) => {
            let detail = if ok {
                "outputs differ".to_string()
            } else {
                format!("python failed: {}", err.trim())
            };
            mismatch(interp, out, detail)
        }
        Err(e) => mismatch(interp, String::new(), format!("cannot run python: {e}")),
    }
}

/// Greedily drop top-level statements while the mismatch persists.
pub fn shrink(source: &str, emit_opts: EmitOptions) -> String {
    let mut current = source.to_string();
    let mut budget = SHRINK_BUDGET;
    loop {
        let Ok(tokens) = tokenize(&current) else {
            return current;
        };
        let Ok(program) = parse(&tokens) else {
            return current;
        };
        let mut reduced = None;
        for s in program.stmts.iter().rev() {
            if budget == 0 {
                return current;
            }
            budget -= 1;
            let mut candidate = current.clone();
            candidate.replace_range(s.span.start..s.span.end, "");
            candidate = candidate
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| format!("{l}\n"))
                .collect();
            if matches!(differential_run(&candidate, emit_opts), DiffOutcome::Mismatch(m) if !m.detail.starts_with("front end"))
            {
                reduced = Some(candidate);
                break;
            }
        }
        match reduced {
            Some(c) => current = c,
            None => return current,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HarnessConfig {
    pub count: u64,
    pub max_depth: usize,
    pub seed_base: u64,
    pub emit: EmitOptions,
    /// Write shrunk reproducers to the failure directory.
    pub write_failures: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarnessFailure {
    pub seed: u64,
    pub mismatch: Mismatch,
    pub shrunk: Mismatch,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HarnessReport {
    pub matched: u64,
    pub failures: Vec<HarnessFailure>,
    pub max_depth_seen: usize,
    pub discarded: u64,
}

/// Generate and differentially test `count` programs, in parallel.
pub fn run_harness(cfg: &HarnessConfig, failure_dir: &Path) -> HarnessReport {
    let seeds: Vec<u64> = (0..cfg.count)
        .map(|i| cfg.seed_base.wrapping_add(i))
        .collect();
    let workers = std::thread::available_parallelism()
        .map_or(4, |n| n.get())
        .min(16);
    let chunk = seeds.len().div_ceil(workers.max(1)).max(1);
    let results: Vec<(u64, usize, u32, DiffOutcome, Mismatch)> = std::thread::scope(|s| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|&seed| {
                            let g = gen_program(&GenConfig {
                                max_depth: cfg.max_depth,
                                ..GenConfig::new(seed)
                            });
                            let depth =
                                parse(&tokenize(&g.source).expect("generated source lexes"))
                                    .map(|p| max_expr_depth(&p))
                                    .unwrap_or(0);
                            let outcome = differential_run(&g.source, cfg.emit);
                            let shrunk = match &outcome {
                                DiffOutcome::Mismatch(m) if !m.detail.contains("timed out") => {
                                    match differential_run(&shrink(&m.source, cfg.emit), cfg.emit) {
                                        DiffOutcome::Mismatch(small) => small,
                                        DiffOutcome::Match { .. } => m.clone(),
                                    }
                                }
                                DiffOutcome::Mismatch(m) => m.clone(),
                                DiffOutcome::Match { .. } => Mismatch::default(),
                            };
                            (seed, depth, g.discarded, outcome, shrunk)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("harness worker panicked"))
            .collect()
    });

    let mut report = HarnessReport::default();
    for (seed, depth, discarded, outcome, shrunk) in results {
        report.max_depth_seen = report.max_depth_seen.max(depth);
        report.discarded += discarded as u64;
        match outcome {
            DiffOutcome::Match { .. } => report.matched += 1,
            DiffOutcome::Mismatch(m) => {
                let file = if cfg.write_failures {
                    let path = failure_dir.join(format!("{seed}.ling"));
                    let body = shrunk.report(seed);
                    std::fs::create_dir_all(failure_dir)
                        .and_then(|_| std::fs::write(&path, body))
                        .ok()
                        .map(|_| path)
                } else {
                    None
                };
                report.failures.push(HarnessFailure {
                    seed,
                    mismatch: m,
                    shrunk,
                    file,
                });
            }
        }
    }
    report
}

/// The nine benchmark programs with their expected output.
pub const GOLDEN: [(&str, &str, &str); 9] = [
    (
        "average",
        include_str!("../corpus/average.ling"),
        include_str!("../corpus/average.out"),
    ),
    (
        "factorial",
        include_str!("../corpus/factorial.ling"),
        include_str!("../corpus/factorial.out"),
    ),
    (
        "fizzbuzz",
        include_str!("../corpus/fizzbuzz.ling"),
        include_str!("../corpus/fizzbuzz.out"),
    ),
    (
        "palindrome",
        include_str!("../corpus/palindrome.ling"),
        include_str!("../corpus/palindrome.out"),
    ),
    (
        "max_of_list",
        include_str!("../corpus/max_of_list.ling"),
        include_str!("../corpus/max_of_list.out"),
    ),
    (
        "fibonacci",
        include_str!("../corpus/fibonacci.ling"),
        include_str!("../corpus/fibonacci.out"),
    ),
    (
        "prime_test",
        include_str!("../corpus/prime_test.ling"),
        include_str!("../corpus/prime_test.out"),
    ),
    (
        "list_comprehension",
        include_str!("../corpus/list_comprehension.ling"),
        include_str!("../corpus/list_comprehension.out"),
    ),
    (
        "dictionary_count",
        include_str!("../corpus/dictionary_count.ling"),
        include_str!("../corpus/dictionary_count.out"),
    ),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InjectedFault {
    OrphanPronoun,
    AmbiguousAntecedent,
    TypeMismatch,
}

impl InjectedFault {
    pub const ALL: [InjectedFault; 3] = [
        InjectedFault::OrphanPronoun,
        InjectedFault::AmbiguousAntecedent,
        InjectedFault::TypeMismatch,
    ];

    pub fn expected(self) -> Category {
        match self {
            InjectedFault::OrphanPronoun => Category::PronounUndefined,
            InjectedFault::AmbiguousAntecedent => Category::PronounAmbiguous,
            InjectedFault::TypeMismatch => Category::Type,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InjectedFault::OrphanPronoun => "orphan-pronoun",
            InjectedFault::AmbiguousAntecedent => "ambiguous-antecedent",
            InjectedFault::TypeMismatch => "type-mismatch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultVariant {
    /// 1-based index into [`GOLDEN`].
    pub program: usize,
    pub name: &'static str,
    pub fault: InjectedFault,
    /// Byte range of the original source that was changed (empty for
    /// insertions).
    pub site: std::ops::Range<usize>,
}

const AMBIGUOUS_TAIL: &str =
    "If true:\n    Let fault_a be 1.\nElse:\n    Let fault_b be 2.\nEnd if.\nPrint it.\n";

/// Replace the right operand of the first arithmetic operation.
fn inject_type_mismatch(source: &str) -> Option<(String, std::ops::Range<usize>)> {
    let program = parse(&tokenize(source).ok()?).ok()?;
    let mut site = None;
    program.walk_exprs(&mut |e| {
        if let (None, ExprKind::Binary { rhs, .. }) = (&site, &e.kind) {
            site = Some(rhs.span.start..rhs.span.end);
        }
    });
    let site = site?;
    let mut out = source.to_string();
    out.replace_range(site.clone(), "\"oops\"");
    Some((out, site))
}

/// All 27 faulty variants: three per benchmark program.
pub fn fault_corpus() -> Vec<(FaultVariant, String)> {
    let mut out = Vec::new();
    for (i, (name, source, _)) in GOLDEN.iter().enumerate() {
        for fault in InjectedFault::ALL {
            let (text, site) = match fault {
                InjectedFault::OrphanPronoun => (format!("Print it.\n{source}"), 0..0),
                InjectedFault::AmbiguousAntecedent => {
                    let mut s = source.to_string();
                    if !s.ends_with('\n') {
                        s.push('\n');
                    }
                    let at = s.len();
                    s.push_str(AMBIGUOUS_TAIL);
                    (s, at..at)
                }
                InjectedFault::TypeMismatch => inject_type_mismatch(source)
                    .expect("every benchmark program has an arithmetic operation"),
            };
            out.push((
                FaultVariant {
                    program: i + 1,
                    name,
                    fault,
                    site,
                },
                text,
            ));
        }
    }
    out
}

/// Compile a fault variant and return its diagnostic, if rejected.
pub fn check_fault(source: &str) -> Option<Diagnostic> {
    compile(
        source,
        "fault",
        CompileOptions {
            skip_codegen: true,
            ..Default::default()
        },
    )
    .1
    .err()
}

/// Both interpreters in checked mode; used for progress and preservation.
pub fn checked_runs(source: &str) -> Result<String, String> {
    let (art, result) = compile(
        source,
        "check",
        CompileOptions {
            skip_codegen: true,
            ..Default::default()
        },
    );
    result.map_err(|d| d.message)?;
    let (Some(tp), Some(ssa)) = (&art.typed, &art.ssa) else {
        return Err("front end produced nothing".into());
    };
    let opts = RunOptions { check_types: true };
    let a = run_core(&tp.program, opts).map_err(|e| format!("core: {}", e.fault))?;
    let b = run_ssa(ssa, opts).map_err(|e| format!("ssa: {}", e.fault))?;
    if a.output != b.output {
        return Err("core and SSA interpreters disagree".into());
    }
    Ok(a.output)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_constructs_give_let_print_shape() {
        let cfg = GenConfig {
            max_depth: 1,
            constructs: Constructs::MINIMAL,
            ..GenConfig::new(0)
        };
        let src = gen_program(&cfg).source;
        for line in src.lines() {
            assert!(
                line.starts_with("Let v") || line.starts_with("Print "),
                "{src}"
            );
        }
    }

    #[test]
    fn deterministic() {
        let cfg = GenConfig::new(42);
        assert_eq!(gen_program(&cfg), gen_program(&cfg));
    }

    #[test]
    fn generated_programs_are_accepted_and_shallow() {
        for seed in 0..200 {
            let g = gen_program(&GenConfig::new(seed));
            let p = parse(&tokenize(&g.source).unwrap()).unwrap();
            assert!(max_expr_depth(&p) <= 7, "{}", g.source);
            checked_runs(&g.source).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{}", g.source));
        }
    }

    #[test]
    fn corpus_has_27_variants() {
        let c = fault_corpus();
        assert_eq!(c.len(), 27);
        for (variant, src) in &c {
            let d = check_fault(src)
                .unwrap_or_else(|| panic!("{} {} accepted", variant.name, variant.fault.name()));
            assert_eq!(
                d.category,
                variant.fault.expected(),
                "{} {}: {}",
                variant.name,
                variant.fault.name(),
                d.message
            );
        }
    }

    #[test]
    fn ambiguous_variant_names_both() {
        let (_, src) = &fault_corpus()[1];
        let d = check_fault(src).unwrap();
        let names: Vec<&str> = d.trace.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["fault_a", "fault_b"]);
    }
}
