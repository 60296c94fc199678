//! Pipeline orchestration, diagnostics and the REPL.

use std::fmt;

use crate::ast::Program;
use crate::codegen::{emit, EmitOptions};
use crate::desugar::{desugar, CoreProgram};
use crate::interp::{FaultKind, Machine, RunOptions, RuntimeFault, Store};
use crate::lexer::{tokenize_named, LexError, TokenStream};
use crate::parser::{parse, ParseError};
use crate::refanalysis::{analyze, RefError, RefErrorKind, RefReport};
use crate::span::{line_text, Span};
use crate::ssa::{lower, verify_ssa, SsaProgram};
use crate::typeck::{infer, TypeError, TypeErrorKind, TypedProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    Lex,
    Parse,
    Type,
    PronounUndefined,
    PronounAmbiguous,
    Runtime,
    Internal,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Lex => "lex",
            Category::Parse => "parse",
            Category::Type => "type",
            Category::PronounUndefined => "pronoun-undefined",
            Category::PronounAmbiguous => "pronoun-ambiguous",
            Category::Runtime => "runtime",
            Category::Internal => "internal",
        }
    }

    pub fn is_pronoun(self) -> bool {
        matches!(
            self,
            Category::PronounUndefined | Category::PronounAmbiguous
        )
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub category: Category,
    pub message: String,
    pub span: Span,
    /// Binding sites behind a pronoun diagnostic.
    pub trace: Vec<(String, Span)>,
    /// Secondary locations, e.g. the other operand of a type mismatch.
    pub notes: Vec<(String, Span)>,
    /// Text of the sentence the error is in.
    pub sentence: String,
    /// A parse error at end of input; more text could fix it.
    pub incomplete: bool,
}

impl Diagnostic {
    fn new(category: Category, message: impl Into<String>, span: Span) -> Self {
        Diagnostic {
            category,
            message: message.into(),
            span,
            trace: vec![],
            notes: vec![],
            sentence: String::new(),
            incomplete: false,
        }
    }

    fn with_sentence(mut self, source: &str) -> Self {
        if self.sentence.is_empty() && self.span.line > 0 {
            self.sentence = sentence_at(source, self.span.start);
        }
        self
    }

    /// Multi-line human-readable form.
    pub fn render(&self, file: &str, source: &str) -> String {
        let mut out = format!("error[{}] {}\n", self.category, self.message);
        if self.span.line > 0 {
            out.push_str(&format!(
                " --> {file}:{}:{}\n",
                self.span.line, self.span.col
            ));
            let num = self.span.line.to_string();
            let gutter = " ".repeat(num.len());
            let text = line_text(source, self.span.line);
            let start = self.span.col.max(1) as usize;
            let end = if self.span.end_line == self.span.line {
                self.span.end_col as usize
            } else {
                text.chars().count()
            };
            let width = end.saturating_sub(start) + 1;
            out.push_str(&format!(
                "{gutter} |\n{num} | {text}\n{gutter} | {}{}\n",
                " ".repeat(start - 1),
                "^".repeat(width)
            ));
        }
        for (msg, span) in &self.notes {
            out.push_str(&format!("note: {msg} at {}:{}\n", span.line, span.col));
        }
        if self.category.is_pronoun() {
            if self.trace.is_empty() {
                out.push_str("referent trace: none bound\n");
            } else {
                out.push_str("referent trace:\n");
                for (name, span) in &self.trace {
                    out.push_str(&format!("  {name} bound at {}:{}\n", span.line, span.col));
                }
            }
        }
        out
    }
}

/// The sentence (up to and including its period or colon) around `offset`.
fn sentence_at(source: &str, offset: usize) -> String {
    let offset = offset.min(source.len());
    let start = source[..offset].rfind(['.', ':']).map_or(0, |i| i + 1);
    let end = source[offset..]
        .find(['.', ':'])
        .map_or(source.len(), |i| offset + i + 1);
    source[start..end]
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

impl From<LexError> for Diagnostic {
    fn from(e: LexError) -> Self {
        Diagnostic::new(Category::Lex, e.message, e.span)
    }
}

impl From<ParseError> for Diagnostic {
    fn from(e: ParseError) -> Self {
        let mut d = Diagnostic::new(Category::Parse, e.message, e.span);
        d.sentence = e.sentence;
        d.incomplete = e.at_eof;
        d
    }
}

impl From<TypeError> for Diagnostic {
    fn from(e: TypeError) -> Self {
        let category = match e.kind {
            TypeErrorKind::UnresolvedPronoun => Category::PronounUndefined,
            _ => Category::Type,
        };
        let mut d = Diagnostic::new(category, e.message, e.span);
        d.notes = e.related;
        d
    }
}

impl From<RefError> for Diagnostic {
    fn from(e: RefError) -> Self {
        match e {
            RefError::Pronoun {
                kind,
                message,
                span,
                trace,
            } => {
                let category = match kind {
                    RefErrorKind::Undefined => Category::PronounUndefined,
                    RefErrorKind::Ambiguous => Category::PronounAmbiguous,
                };
                let mut d = Diagnostic::new(category, message, span);
                d.trace = trace;
                d
            }
            RefError::Internal(m) => Diagnostic::new(Category::Internal, m, Span::default()),
        }
    }
}

impl From<RuntimeFault> for Diagnostic {
    fn from(f: RuntimeFault) -> Self {
        let category = if f.is_internal() {
            Category::Internal
        } else {
            Category::Runtime
        };
        Diagnostic::new(category, f.kind.to_string(), f.span)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CompileOptions {
    /// Stop after the referent analysis.
    pub skip_codegen: bool,
    pub emit: EmitOptions,
}

/// Everything the pipeline produced, up to the first failing stage.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub tokens: Option<TokenStream>,
    pub ast: Option<Program>,
    pub core: Option<CoreProgram>,
    pub typed: Option<TypedProgram>,
    pub ssa: Option<SsaProgram>,
    pub refs: Option<RefReport>,
    pub python: Option<String>,
    /// Wall-clock milliseconds per completed stage.
    pub timings: Vec<(&'static str, f64)>,
    /// Wall-clock milliseconds for the whole call, measured separately.
    pub wall_ms: f64,
}

impl Artifacts {
    pub fn stage_sum_ms(&self) -> f64 {
        self.timings.iter().map(|(_, ms)| ms).sum()
    }

    /// `stage<TAB>ms<TAB>cumulative` lines followed by the measured total.
    pub fn timing_table(&self) -> String {
        let mut out = String::from("stage\tms\tcumulative\n");
        let mut cum = 0.0;
        for (stage, ms) in &self.timings {
            cum += ms;
            out.push_str(&format!("{stage}\t{ms:.3}\t{cum:.3}\n"));
        }
        out.push_str(&format!("total\t{:.3}\t{cum:.3}\n", self.wall_ms));
        out
    }
}

/// Monotonic clock in milliseconds. The browser target has no clock in
/// `std`, so times read as zero there.
#[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
fn now_ms() -> f64 {
    use std::sync::OnceLock;
    use std::time::Instant;
    static ORIGIN: OnceLock<Instant> = OnceLock::new();
    ORIGIN.get_or_init(Instant::now).elapsed().as_secs_f64() * 1000.0
}

#[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
fn now_ms() -> f64 {
    0.0
}

/// Stage clock: each stage ends exactly where the next begins, so stage
/// times add up to the total.
struct Clock {
    last: f64,
}

impl Clock {
    fn lap(&mut self, art: &mut Artifacts, stage: &'static str) {
        let now = now_ms();
        art.timings.push((stage, (now - self.last).max(0.0)));
        self.last = now;
    }
}

pub fn compile(
    source: &str,
    file: &str,
    opts: CompileOptions,
) -> (Artifacts, Result<(), Diagnostic>) {
    let started = now_ms();
    let mut art = Artifacts::default();
    let r = run_pipeline(source, file, opts, &mut art);
    art.wall_ms = now_ms() - started;
    (art, r.map_err(|d| d.with_sentence(source)))
}

fn run_pipeline(
    source: &str,
    file: &str,
    opts: CompileOptions,
    art: &mut Artifacts,
) -> Result<(), Diagnostic> {
    let mut clock = Clock { last: now_ms() };

    let tokens = tokenize_named(source, file)?;
    clock.lap(art, "lex");
    let ast = parse(&tokens)?;
    art.tokens = Some(tokens);
    clock.lap(art, "parse");
    let core = desugar(&ast);
    art.ast = Some(ast);
    clock.lap(art, "desugar");
    let typed = infer(&core)?;
    art.core = Some(core);
    clock.lap(art, "typeck");
    let ssa = lower(&typed)
        .map_err(|e| Diagnostic::new(Category::Internal, e.to_string(), Span::default()))?;
    verify_ssa(&ssa)
        .map_err(|e| Diagnostic::new(Category::Internal, e.to_string(), Span::default()))?;
    art.typed = Some(typed);
    clock.lap(art, "ssa");
    let refs = analyze(&ssa)?;
    art.refs = Some(refs);
    clock.lap(art, "refs");
    if !opts.skip_codegen {
        art.python = Some(emit(&ssa, opts.emit));
        art.ssa = Some(ssa);
        clock.lap(art, "codegen");
    } else {
        art.ssa = Some(ssa);
    }
    Ok(())
}

/// Interpreter used to run generated code: `$LINGUINE_PY` or `python3`.
#[cfg(feature = "host")]
pub fn python_command() -> String {
    std::env::var("LINGUINE_PY")
        .ok()
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "python3".to_string())
}

/// Run Python source text and capture its standard output.
#[cfg(feature = "host")]
pub fn run_python(source: &str) -> std::io::Result<(bool, String, String)> {
    run_python_with_timeout(source, PYTHON_TIMEOUT)
}

/// Wall-clock limit for one generated program.
#[cfg(feature = "host")]
pub const PYTHON_TIMEOUT: std::time::Duration = std::time::Duration::from_secs(10);

/// Like [`run_python`]; a program still running after `limit` is killed and
/// reported as failed.
#[cfg(feature = "host")]
pub fn run_python_with_timeout(
    source: &str,
    limit: std::time::Duration,
) -> std::io::Result<(bool, String, String)> {
    use std::io::{Read, Seek, Write};
    let mut file = tempfile::Builder::new().suffix(".py").tempfile()?;
    file.write_all(source.as_bytes())?;
    let mut stdout = tempfile::tempfile()?;
    let mut stderr = tempfile::tempfile()?;
    let mut child = std::process::Command::new(python_command())
        .arg(file.path())
        .stdin(std::process::Stdio::null())
        .stdout(stdout.try_clone()?)
        .stderr(stderr.try_clone()?)
        .spawn()?;
    let started = std::time::Instant::now();
    let mut pause = std::time::Duration::from_millis(1);
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break Some(status);
        }
        if started.elapsed() >= limit {
            let _ = child.kill();
            let _ = child.wait();
            break None;
        }
        std::thread::sleep(pause);
        pause = (pause * 2).min(std::time::Duration::from_millis(50));
    };
    let read = |f: &mut std::fs::File| -> std::io::Result<String> {
        let mut buf = Vec::new();
        f.rewind()?;
        f.read_to_end(&mut buf)?;
        Ok(String::from_utf8_lossy(&buf).into_owned())
    };
    let out = read(&mut stdout)?;
    let mut err = read(&mut stderr)?;
    if status.is_none() {
        err.push_str(&format!("timed out after {limit:?}\n"));
    }
    Ok((status.is_some_and(|s| s.success()), out, err))
}

/// Result of feeding one line to the REPL.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplOutcome {
    /// Accepted; the text is what the new statements printed.
    Output(String),
    /// An open block or sentence; waiting for more lines.
    NeedMore,
    /// Rejected with a rendered diagnostic; the session state is unchanged.
    Rejected(Diagnostic, String),
}

/// Interactive session. Each input is checked by recompiling all accepted
/// text plus the new input; only the new statements are then run against
/// the stored variables.
#[derive(Debug, Clone, Default)]
pub struct Repl {
    source: String,
    pending: String,
    store: Store,
    statements: usize,
}

impl Repl {
    pub fn new() -> Self {
        Self::default()
    }

    /// All accepted source text.
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn is_continuing(&self) -> bool {
        !self.pending.is_empty()
    }

    pub fn feed(&mut self, line: &str) -> ReplOutcome {
        if self.pending.is_empty() && line.trim().is_empty() {
            return ReplOutcome::Output(String::new());
        }
        self.pending.push_str(line);
        self.pending.push('\n');
        let candidate = format!("{}{}", self.source, self.pending);
        let (art, result) = compile(
            &candidate,
            "<repl>",
            CompileOptions {
                skip_codegen: true,
                ..Default::default()
            },
        );
        if let Err(d) = result {
            if d.incomplete {
                return ReplOutcome::NeedMore;
            }
            self.pending.clear();
            let text = d.render("<repl>", &candidate);
            return ReplOutcome::Rejected(d, text);
        }
        let Some(typed) = art.typed else {
            self.pending.clear();
            let d = Diagnostic::new(
                Category::Internal,
                "front end produced no program",
                Span::default(),
            );
            let text = d.render("<repl>", &candidate);
            return ReplOutcome::Rejected(d, text);
        };
        let stmts = &typed.program.program().stmts;
        let fresh = &stmts[self.statements.min(stmts.len())..];
        let machine = Machine::with_store(fresh, self.store.clone(), RunOptions::default());
        match run_keep_store(machine) {
            Ok((output, store)) => {
                self.source = candidate;
                self.pending.clear();
                self.store = store;
                self.statements = stmts.len();
                ReplOutcome::Output(output)
            }
            Err(fault) => {
                self.pending.clear();
                let d = Diagnostic::from(fault).with_sentence(&candidate);
                let text = d.render("<repl>", &candidate);
                ReplOutcome::Rejected(d, text)
            }
        }
    }
}

fn run_keep_store(mut m: Machine<'_>) -> Result<(String, Store), RuntimeFault> {
    use crate::interp::{Step, STEP_BUDGET};
    loop {
        if m.stats.steps >= STEP_BUDGET {
            return Err(RuntimeFault {
                kind: FaultKind::StepBudget,
                span: Span::default(),
            });
        }
        if m.step()? == Step::Terminal {
            return Ok((std::mem::take(&mut m.output), std::mem::take(&mut m.store)));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(src: &str) -> Diagnostic {
        compile(src, "t.ling", CompileOptions::default())
            .1
            .unwrap_err()
    }

    #[test]
    fn categories_by_stage() {
        assert_eq!(diag("Let x be \"open.").category, Category::Lex);
        assert_eq!(diag("Let x be 1").category, Category::Parse);
        assert_eq!(diag("Let x be 1 plus \"a\".").category, Category::Type);
        assert_eq!(diag("Print it.").category, Category::PronounUndefined);
        assert_eq!(
            diag("If true: Let p be 1. Else: Let q be 2. End if. Print it.").category,
            Category::PronounAmbiguous
        );
    }

    #[test]
    fn orphan_rendering() {
        let src = "Print it.\n";
        let d = diag(src);
        assert_eq!(
            d.render("orphan.ling", src),
            "error[pronoun-undefined] pronoun `it` has no antecedent; nothing has been bound yet\n --> orphan.ling:1:7\n  |\n1 | Print it.\n  |       ^^\nreferent trace: none bound\n"
        );
        assert_eq!(d.sentence, "Print it.");
    }

    #[test]
    fn ambiguous_rendering_has_trace() {
        let src = "Let c be true.\nIf c: Let alpha be 1.\nElse: Let b be 2.\nEnd if.\nPrint it.\n";
        let text = diag(src).render("amb.ling", src);
        assert!(text.starts_with("error[pronoun-ambiguous]"), "{text}");
        assert!(
            text.contains("referent trace:\n  alpha bound at 2:11\n  b bound at 3:11\n"),
            "{text}"
        );
    }

    #[test]
    fn timings_add_up() {
        let (art, r) = compile("Let x be 1. Print x.", "t", CompileOptions::default());
        r.unwrap();
        let names: Vec<_> = art.timings.iter().map(|(n, _)| *n).collect();
        assert_eq!(
            names,
            ["lex", "parse", "desugar", "typeck", "ssa", "refs", "codegen"]
        );
        assert!(art.timings.iter().all(|(_, ms)| *ms >= 0.0));
        assert!(art.stage_sum_ms() <= art.wall_ms);
        assert!(art
            .python
            .unwrap()
            .starts_with("# generated by linguinec\n"));
    }

    #[test]
    fn repl_session() {
        let mut r = Repl::new();
        assert_eq!(r.feed("Let x be 4."), ReplOutcome::Output(String::new()));
        assert_eq!(
            r.feed("Print it plus 1."),
            ReplOutcome::Output("5\n".into())
        );
        assert_eq!(r.store().get("x"), Some(&crate::interp::Value::Int(4)));
    }

    #[test]
    fn repl_orphan_leaves_state_alone() {
        let mut r = Repl::new();
        let ReplOutcome::Rejected(d, _) = r.feed("Print it.") else {
            panic!()
        };
        assert_eq!(d.category, Category::PronounUndefined);
        assert_eq!(r.source(), "");
        assert!(r.store().is_empty());
    }

    #[test]
    fn repl_is_transactional() {
        let mut r = Repl::new();
        r.feed("Let x be 1.");
        let before = r.clone();
        assert!(matches!(
            r.feed("Let x be \"s\"."),
            ReplOutcome::Rejected(..)
        ));
        assert!(matches!(
            r.feed("Print 1. Print 1 divided by 0."),
            ReplOutcome::Rejected(..)
        ));
        assert_eq!(r.source(), before.source());
        assert_eq!(r.store(), before.store());
    }

    #[test]
    fn repl_buffers_open_blocks() {
        let mut r = Repl::new();
        assert_eq!(r.feed("If true:"), ReplOutcome::NeedMore);
        assert!(r.is_continuing());
        assert_eq!(r.feed("Print 1."), ReplOutcome::NeedMore);
        assert_eq!(r.feed("End if."), ReplOutcome::Output("1\n".into()));
        assert!(!r.is_continuing());
    }
}
