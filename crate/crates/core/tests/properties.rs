//! Property tests over the lattice, the unifier and generated programs.

use proptest::prelude::*;

use linguine::codegen::{emit, EmitOptions};
use linguine::driver::{compile, CompileOptions};
use linguine::fuzz::{gen_program, max_expr_depth, GenConfig};
use linguine::interp::{run_core, run_ssa, RunOptions};
use linguine::lexer::{tokenize, TokenKind};
use linguine::parser::parse;
use linguine::refanalysis::RefValue;
use linguine::typeck::unify;
use linguine::types::Type;

fn ref_value() -> impl Strategy<Value = RefValue> {
    prop_oneof![
        Just(RefValue::Bottom),
        Just(RefValue::Top),
        prop::sample::select(vec!["a", "b", "c"]).prop_map(|n| RefValue::Ref(n.to_string())),
    ]
}

fn ty() -> impl Strategy<Value = Type> {
    let leaf = prop_oneof![
        Just(Type::Int),
        Just(Type::Bool),
        Just(Type::Str),
        (0u32..4).prop_map(Type::Var)
    ];
    leaf.prop_recursive(3, 8, 1, |inner| inner.prop_map(Type::list))
}

fn light() -> ProptestConfig {
    ProptestConfig {
        cases: 48,
        ..ProptestConfig::default()
    }
}

proptest! {
    #[test]
    fn join_is_a_semilattice(x in ref_value(), y in ref_value(), z in ref_value()) {
        prop_assert_eq!(x.join(&y), y.join(&x));
        prop_assert_eq!(x.join(&y).join(&z), x.join(&y.join(&z)));
        prop_assert_eq!(x.join(&x), x.clone());
        prop_assert!(x.leq(&x.join(&y)) && y.leq(&x.join(&y)));
    }

    #[test]
    fn meet_is_a_semilattice(x in ref_value(), y in ref_value(), z in ref_value()) {
        prop_assert_eq!(x.meet(&y), y.meet(&x));
        prop_assert_eq!(x.meet(&y).meet(&z), x.meet(&y.meet(&z)));
        prop_assert_eq!(x.meet(&x), x.clone());
        prop_assert_eq!(x.meet(&RefValue::Top), x.clone());
        prop_assert_eq!(x.join(&RefValue::Bottom), x.clone());
        prop_assert_eq!(x.join(&x.meet(&y)), x.clone());
    }

    #[test]
    fn unifier_is_sound(a in ty(), b in ty()) {
        if let Ok(s) = unify(&a, &b) {
            prop_assert_eq!(s.apply(&a), s.apply(&b));
        }
    }

    #[test]
    fn unify_with_self_is_empty(a in ty()) {
        prop_assert!(unify(&a, &a).unwrap().is_empty());
    }
}

proptest! {
    #![proptest_config(light())]

    #[test]
    fn generation_is_deterministic(seed in any::<u64>()) {
        let cfg = GenConfig::new(seed);
        prop_assert_eq!(gen_program(&cfg), gen_program(&cfg));
    }

    #[test]
    fn generated_programs_are_well_formed(seed in any::<u64>(), depth in 1usize..=7) {
        let cfg = GenConfig { max_depth: depth, ..GenConfig::new(seed) };
        let src = gen_program(&cfg).source;
        let program = parse(&tokenize(&src).unwrap()).unwrap();
        prop_assert!(max_expr_depth(&program) <= depth, "{}", src);

        let (art, r) = compile(&src, "gen", CompileOptions::default());
        prop_assert!(r.is_ok(), "{}", src);
        let opts = RunOptions { check_types: true };
        let core = run_core(&art.typed.as_ref().unwrap().program, opts).unwrap();
        let ssa = run_ssa(art.ssa.as_ref().unwrap(), opts).unwrap();
        prop_assert_eq!(core.output, ssa.output);
        prop_assert_eq!(emit(art.ssa.as_ref().unwrap(), EmitOptions::default()), art.python.unwrap());
    }

    #[test]
    fn token_spans_round_trip(seed in any::<u64>()) {
        let src = gen_program(&GenConfig::new(seed)).source;
        let a = tokenize(&src).unwrap();
        prop_assert_eq!(&a, &tokenize(&src).unwrap());
        for t in &a.tokens {
            prop_assert_eq!(&src[t.span.start..t.span.end], t.lexeme.as_str());
            if let TokenKind::Ident = t.kind {
                prop_assert!(!["the", "a", "an"].contains(&t.lexeme.to_ascii_lowercase().as_str()));
            }
        }
    }
}
