use std::io::{self, BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use clap::Parser;

use linguine::codegen::EmitOptions;
use linguine::driver::{compile, python_command, CompileOptions, Diagnostic, Repl, ReplOutcome};
use linguine::interp::{run_core, RunOptions};

/// Compile and run Linguine programs.
#[derive(Parser, Debug)]
#[command(name = "linguinec", version)]
struct Cli {
    /// Source file (`.ling`).
    input: Option<PathBuf>,

    /// Start the interactive REPL.
    #[arg(short = 'i')]
    interactive: bool,

    /// Write target code next to the input without running it. Only `py` is supported.
    #[arg(short = 't', value_name = "TARGET")]
    target: Option<String>,

    /// Run the reference interpreter instead of the generated Python.
    #[arg(long)]
    interpret: bool,

    #[arg(long)]
    emit_tokens: bool,
    #[arg(long)]
    emit_ast: bool,
    #[arg(long)]
    emit_core: bool,
    #[arg(long)]
    emit_types: bool,
    #[arg(long)]
    emit_ir: bool,
    #[arg(long)]
    emit_refs: bool,

    /// Print per-stage compile times (milliseconds) to stderr.
    #[arg(long)]
    time: bool,

    /// Add `# line N` comments to generated code.
    #[arg(long)]
    annotate: bool,

    #[arg(long, hide = true)]
    flip_plus: bool,
}

impl Cli {
    fn any_emit(&self) -> bool {
        self.emit_tokens
            || self.emit_ast
            || self.emit_core
            || self.emit_types
            || self.emit_ir
            || self.emit_refs
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(run(&cli))
}

fn run(cli: &Cli) -> u8 {
    if let Some(t) = &cli.target {
        if t != "py" {
            eprintln!("error: unsupported target `{t}` (only `py` is available)");
            return 3;
        }
    }
    if cli.interactive {
        return repl();
    }
    let Some(path) = &cli.input else {
        eprintln!("error: no input file (use -i for the REPL)");
        return 2;
    };
    let source = match std::fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return 2;
        }
    };
    let file = path.display().to_string();
    let opts = CompileOptions {
        skip_codegen: cli.any_emit() || cli.interpret,
        emit: EmitOptions {
            annotate: cli.annotate,
            flip_plus: cli.flip_plus,
        },
    };
    let (art, result) = compile(&source, &file, opts);

    let mut out = String::new();
    if let (true, Some(t)) = (cli.emit_tokens, &art.tokens) {
        out.push_str(&t.dump());
    }
    if let (true, Some(a)) = (cli.emit_ast, &art.ast) {
        out.push_str(&a.dump());
    }
    if let (true, Some(c)) = (cli.emit_core, &art.core) {
        out.push_str(&c.dump());
    }
    if let (true, Some(t)) = (cli.emit_types, &art.typed) {
        out.push_str(&t.dump());
    }
    if let (true, Some(s)) = (cli.emit_ir, &art.ssa) {
        out.push_str(&s.dump());
    }
    if let (true, Some(r)) = (cli.emit_refs, &art.refs) {
        out.push_str(&r.render());
    }
    print!("{out}");
    if cli.time {
        eprint!("{}", art.timing_table());
    }
    if let Err(d) = result {
        return report(&d, &file, &source);
    }
    if cli.any_emit() {
        return 0;
    }

    if cli.interpret {
        let Some(typed) = &art.typed else { return 1 };
        return match run_core(&typed.program, RunOptions::default()) {
            Ok(o) => {
                print!("{}", o.output);
                0
            }
            Err(e) => {
                print!("{}", e.output);
                let _ = io::stdout().flush();
                report(&Diagnostic::from(e.fault), &file, &source)
            }
        };
    }

    let Some(python) = &art.python else { return 1 };
    let py_path = path.with_extension("py");
    if let Err(e) = std::fs::write(&py_path, python) {
        eprintln!("error: cannot write {}: {e}", py_path.display());
        return 2;
    }
    if cli.target.is_some() {
        return 0;
    }
    execute(&py_path)
}

fn report(d: &Diagnostic, file: &str, source: &str) -> u8 {
    eprint!("{}", d.render(file, source));
    1
}

fn execute(py_path: &Path) -> u8 {
    let py = python_command();
    match Command::new(&py).arg(py_path).status() {
        Ok(status) => status.code().map_or(1, |c| c.clamp(0, 255) as u8),
        Err(e) => {
            eprintln!("error: cannot run `{py}`: {e}");
            1
        }
    }
}

fn repl() -> u8 {
    let stdin = io::stdin();
    let interactive = stdin.is_terminal();
    let mut session = Repl::new();
    let prompt = |session: &Repl| {
        if interactive {
            print!(
                "{}",
                if session.is_continuing() {
                    "... "
                } else {
                    ">>> "
                }
            );
            let _ = io::stdout().flush();
        }
    };
    prompt(&session);
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        match session.feed(&line) {
            ReplOutcome::Output(text) => print!("{text}"),
            ReplOutcome::NeedMore => {}
            ReplOutcome::Rejected(_, text) => eprint!("{text}"),
        }
        let _ = io::stdout().flush();
        prompt(&session);
    }
    if session.is_continuing() {
        eprintln!("error[parse] input ended inside an unfinished sentence or block");
        return 1;
    }
    0
}
