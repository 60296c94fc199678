use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use linguine::codegen::EmitOptions;
use linguine::fuzz::{check_fault, fault_corpus, run_harness, HarnessConfig};

/// Differential fuzzing of the interpreter against the Python backend.
#[derive(Parser, Debug)]
#[command(name = "linguine-fuzz", version)]
struct Cli {
    /// Number of programs to generate.
    #[arg(long, default_value_t = 500)]
    count: u64,

    /// Maximum expression depth.
    #[arg(long, default_value_t = 7)]
    max_depth: usize,

    /// First seed; program i uses seed-base + i.
    #[arg(long, default_value_t = 0)]
    seed_base: u64,

    /// Directory for shrunk reproducers.
    #[arg(long, default_value = "fuzz-failures")]
    out_dir: PathBuf,

    /// Check the injected-fault corpus instead of fuzzing.
    #[arg(long)]
    faults: bool,

    #[arg(long, hide = true)]
    flip_plus: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    if cli.faults {
        let mut ok = 0;
        let corpus = fault_corpus();
        for (variant, source) in &corpus {
            let got = check_fault(source).map(|d| d.category);
            let pass = got == Some(variant.fault.expected());
            ok += pass as usize;
            println!(
                "{} {:<20} {:<22} expected {:<18} got {}",
                if pass { "ok  " } else { "FAIL" },
                variant.name,
                variant.fault.name(),
                variant.fault.expected().as_str(),
                got.map_or("accepted", |c| c.as_str())
            );
        }
        println!(
            "{ok}/{} faults caught in {:.2?}",
            corpus.len(),
            started.elapsed()
        );
        return if ok == corpus.len() {
            ExitCode::SUCCESS
        } else {
            ExitCode::FAILURE
        };
    }

    let cfg = HarnessConfig {
        count: cli.count,
        max_depth: cli.max_depth,
        seed_base: cli.seed_base,
        emit: EmitOptions {
            flip_plus: cli.flip_plus,
            ..EmitOptions::default()
        },
        write_failures: true,
    };
    let report = run_harness(&cfg, &cli.out_dir);
    for f in &report.failures {
        eprintln!("mismatch at seed {}: {}", f.seed, f.mismatch.detail);
        if let Some(p) = &f.file {
            eprintln!("  reproducer: {}", p.display());
        }
    }
    println!(
        "{}/{} programs agree (max depth {}, {} faulting candidates regenerated) in {:.2?}",
        report.matched,
        cli.count,
        report.max_depth_seen,
        report.discarded,
        started.elapsed()
    );
    if report.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
