//! Browser bindings: compile to Python, run in the reference interpreter and
//! show where each pronoun points.

use wasm_bindgen::prelude::*;

use linguine::codegen::EmitOptions;
use linguine::driver::{compile as compile_source, CompileOptions, Diagnostic};
use linguine::interp::{run_core, RunOptions};

const FILE: &str = "playground.ling";

/// Result of compiling a program. `diagnostic` is empty on success.
#[wasm_bindgen(getter_with_clone)]
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Compiled {
    pub ok: bool,
    pub python: String,
    pub ir: String,
    pub category: String,
    pub diagnostic: String,
}

/// Result of running a program. Output printed before a fault is kept.
#[wasm_bindgen(getter_with_clone)]
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ran {
    pub ok: bool,
    pub output: String,
    pub category: String,
    pub diagnostic: String,
}

fn rejected(d: &Diagnostic, source: &str) -> (String, String) {
    (d.category.as_str().to_string(), d.render(FILE, source))
}

#[wasm_bindgen]
pub fn compile(source: &str, annotate: bool) -> Compiled {
    let opts = CompileOptions {
        emit: EmitOptions {
            annotate,
            ..EmitOptions::default()
        },
        ..CompileOptions::default()
    };
    let (art, result) = compile_source(source, FILE, opts);
    let ir = art.ssa.as_ref().map(|s| s.dump()).unwrap_or_default();
    match result {
        Ok(()) => Compiled {
            ok: true,
            python: art.python.unwrap_or_default(),
            ir,
            ..Compiled::default()
        },
        Err(d) => {
            let (category, diagnostic) = rejected(&d, source);
            Compiled {
                ir,
                category,
                diagnostic,
                ..Compiled::default()
            }
        }
    }
}

#[wasm_bindgen]
pub fn run(source: &str) -> Ran {
    let (art, result) = compile_source(
        source,
        FILE,
        CompileOptions {
            skip_codegen: true,
            ..CompileOptions::default()
        },
    );
    if let Err(d) = result {
        let (category, diagnostic) = rejected(&d, source);
        return Ran {
            category,
            diagnostic,
            ..Ran::default()
        };
    }
    let Some(typed) = art.typed else {
        return Ran::default();
    };
    match run_core(&typed.program, RunOptions::default()) {
        Ok(o) => Ran {
            ok: true,
            output: o.output,
            ..Ran::default()
        },
        Err(e) => {
            let (category, diagnostic) = rejected(&Diagnostic::from(e.fault), source);
            Ran {
                output: e.output,
                category,
                diagnostic,
                ..Ran::default()
            }
        }
    }
}

/// One line per pronoun with its antecedent, or the diagnostic (which carries
/// the referent trace) if the program is rejected.
#[wasm_bindgen]
pub fn referents(source: &str) -> String {
    let (art, result) = compile_source(
        source,
        FILE,
        CompileOptions {
            skip_codegen: true,
            ..CompileOptions::default()
        },
    );
    match (result, art.refs) {
        (Ok(()), Some(r)) if r.pronouns.is_empty() => "no pronouns\n".to_string(),
        (Ok(()), Some(r)) => r.render(),
        (Err(d), _) => d.render(FILE, source),
        (Ok(()), None) => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const AVERAGE: &str = "Let numbers be the list [8, 12, 15, 9, 6].\n\
                           Let total be sum of numbers.\n\
                           Let count be length of numbers.\n\
                           Let average be total divided by count.\n\
                           If it is greater than 9:\n    Print \"Average exceeds nine\".\nEnd if.\n";

    #[test]
    fn compiles_to_python_and_ir() {
        let c = compile(AVERAGE, false);
        assert!(c.ok, "{}", c.diagnostic);
        assert!(c.python.contains("if average > 9:"), "{}", c.python);
        assert!(c.ir.starts_with("bb0:"), "{}", c.ir);
        assert!(compile(AVERAGE, true).python.contains("# line 5"));
    }

    #[test]
    fn runs_in_the_interpreter() {
        assert_eq!(
            run(AVERAGE),
            Ran {
                ok: true,
                output: "Average exceeds nine\n".into(),
                ..Ran::default()
            }
        );
    }

    #[test]
    fn runtime_fault_keeps_output() {
        let r = run("Print 1.\nLet z be 0.\nPrint 1 divided by z.\n");
        assert!(!r.ok);
        assert_eq!(r.output, "1\n");
        assert_eq!(r.category, "runtime");
        assert!(
            r.diagnostic.contains("playground.ling:3:"),
            "{}",
            r.diagnostic
        );
    }

    #[test]
    fn referent_trace() {
        let t = referents(AVERAGE);
        assert!(t.contains("it -> average"), "{t}");
        assert_eq!(referents("Print 1."), "no pronouns\n");
        let orphan = referents("Print it.");
        assert!(orphan.starts_with("error[pronoun-undefined]"), "{orphan}");
        let ambiguous = referents("If true: Let p be 1. Else: Let q be 2. End if. Print it.");
        assert!(
            ambiguous.contains("p bound at") && ambiguous.contains("q bound at"),
            "{ambiguous}"
        );
    }

    #[test]
    fn rejection_reports_category() {
        let c = compile("Let x be 1 plus \"a\".", false);
        assert!(!c.ok);
        assert_eq!(c.category, "type");
        assert!(c.python.is_empty());
    }
}
