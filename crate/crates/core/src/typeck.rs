//! Monomorphic Algorithm-W style inference over the core tree.
//!
//! Every surface name has one type for the whole program. Definite binding is
//! tracked flow-sensitively: a name bound in only one arm of an `if`, or only
//! inside a loop body, cannot be read after the construct. Pronouns are typed
//! through their provisional referent and are exempt from the definite-binding
//! check; the referent analysis is responsible for them.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::ast::{BinOp, Builtin, Expr, ExprKind, Program, Referent, Stmt, StmtKind};
use crate::desugar::CoreProgram;
use crate::span::Span;
use crate::types::Type;

/// Idempotent map from type variables to terms.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Substitution(BTreeMap<u32, Type>);

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(var: u32, ty: Type) -> Self {
        let mut m = BTreeMap::new();
        m.insert(var, ty);
        Substitution(m)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, var: u32) -> Option<&Type> {
        self.0.get(&var)
    }

    pub fn bindings(&self) -> impl Iterator<Item = (u32, &Type)> {
        self.0.iter().map(|(k, v)| (*k, v))
    }

    pub fn apply(&self, ty: &Type) -> Type {
        match ty {
            Type::Var(v) => match self.0.get(v) {
                Some(t) => t.clone(),
                None => ty.clone(),
            },
            Type::List(t) => Type::list(self.apply(t)),
            _ => ty.clone(),
        }
    }

    /// `other ∘ self`: apply `self` first, then `other`.
    pub fn then(&self, other: &Substitution) -> Substitution {
        let mut m: BTreeMap<u32, Type> = self.0.iter().map(|(k, v)| (*k, other.apply(v))).collect();
        for (k, v) in &other.0 {
            m.entry(*k).or_insert_with(|| v.clone());
        }
        Substitution(m)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnifyError {
    #[error("type mismatch: {0} vs {1}")]
    Mismatch(Type, Type),
    #[error("infinite type: 't{0} occurs in {1}")]
    Occurs(u32, Type),
}

/// Most general unifier of two terms.
pub fn unify(a: &Type, b: &Type) -> Result<Substitution, UnifyError> {
    match (a, b) {
        (Type::Var(x), Type::Var(y)) if x == y => Ok(Substitution::new()),
        (Type::Var(x), t) | (t, Type::Var(x)) => {
            if t.occurs(*x) {
                Err(UnifyError::Occurs(*x, t.clone()))
            } else {
                Ok(Substitution::singleton(*x, t.clone()))
            }
        }
        (Type::List(x), Type::List(y)) => unify(x, y),
        (Type::Int, Type::Int) | (Type::Bool, Type::Bool) | (Type::Str, Type::Str) => {
            Ok(Substitution::new())
        }
        _ => Err(UnifyError::Mismatch(a.clone(), b.clone())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeErrorKind {
    Mismatch,
    UnboundVariable,
    UnresolvedPronoun,
    CannotInfer,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub message: String,
    pub span: Span,
    /// Secondary locations, e.g. the other side of a mismatch.
    pub related: Vec<(String, Span)>,
}

/// Types and definite-binding state carried between compilation units.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TypeEnv {
    types: BTreeMap<String, Type>,
    bound: BTreeSet<String>,
    order: Vec<String>,
}

impl TypeEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&Type> {
        self.types.get(name)
    }

    pub fn is_bound(&self, name: &str) -> bool {
        self.bound.contains(name)
    }

    /// `(name, type)` in order of first binding.
    pub fn bindings(&self) -> Vec<(&str, &Type)> {
        self.order
            .iter()
            .map(|n| (n.as_str(), &self.types[n]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedProgram {
    /// Core program with every expression's `ty` set to a ground type.
    pub program: CoreProgram,
    pub env: TypeEnv,
}

impl TypedProgram {
    /// `name : type` per binding.
    pub fn dump(&self) -> String {
        self.env
            .bindings()
            .into_iter()
            .map(|(n, t)| format!("{n} : {t}\n"))
            .collect()
    }
}

pub fn infer(program: &CoreProgram) -> Result<TypedProgram, TypeError> {
    infer_with_env(program, &TypeEnv::new(), 0)
}

/// Infer `program` as a continuation of a unit whose final state was `env`.
/// `var_offset` is the first type-variable id to use.
pub fn infer_with_env(
    program: &CoreProgram,
    env: &TypeEnv,
    var_offset: u32,
) -> Result<TypedProgram, TypeError> {
    let mut cx = Infer {
        subst: Substitution::new(),
        next_var: var_offset,
        env: env.clone(),
        deferred: Vec::new(),
    };
    let mut prog = program.program().clone();
    cx.block(&mut prog.stmts)?;
    cx.check_deferred()?;
    cx.finish(&mut prog)?;
    let types = cx
        .env
        .types
        .iter()
        .map(|(k, v)| (k.clone(), cx.subst.apply(v)))
        .collect();
    let env = TypeEnv {
        types,
        bound: cx.env.bound,
        order: cx.env.order,
    };
    Ok(TypedProgram {
        program: CoreProgram::from_core(prog),
        env,
    })
}

/// A builtin whose argument type was still unknown when it was visited.
struct Deferred {
    func: Builtin,
    arg: Type,
    span: Span,
}

struct Infer {
    subst: Substitution,
    next_var: u32,
    env: TypeEnv,
    deferred: Vec<Deferred>,
}

fn mismatch(message: String, span: Span, related: Vec<(String, Span)>) -> TypeError {
    TypeError {
        kind: TypeErrorKind::Mismatch,
        message,
        span,
        related,
    }
}

impl Infer {
    fn fresh(&mut self) -> Type {
        let v = self.next_var;
        self.next_var += 1;
        Type::Var(v)
    }

    fn resolve(&self, t: &Type) -> Type {
        self.subst.apply(t)
    }

    fn unify(&mut self, a: &Type, b: &Type) -> Result<(), UnifyError> {
        let s = unify(&self.resolve(a), &self.resolve(b))?;
        self.subst = self.subst.then(&s);
        Ok(())
    }

    /// Unify `found` with `expected`, reporting `what` at `span` on failure.
    fn expect(
        &mut self,
        found: &Type,
        expected: &Type,
        what: &str,
        span: Span,
    ) -> Result<(), TypeError> {
        self.unify(found, expected).map_err(|_| {
            mismatch(
                format!(
                    "{what}: expected {}, found {}",
                    self.resolve(expected),
                    self.resolve(found)
                ),
                span,
                vec![],
            )
        })
    }

    fn bind(&mut self, name: &str, ty: &Type, span: Span) -> Result<(), TypeError> {
        match self.env.types.get(name).cloned() {
            Some(prev) => {
                self.unify(&prev, ty).map_err(|_| {
                    mismatch(
                        format!(
                            "`{name}` was bound as {} and cannot be rebound as {}",
                            self.resolve(&prev),
                            self.resolve(ty)
                        ),
                        span,
                        vec![],
                    )
                })?;
            }
            None => {
                self.env.types.insert(name.to_string(), ty.clone());
                self.env.order.push(name.to_string());
            }
        }
        self.env.bound.insert(name.to_string());
        Ok(())
    }

    fn block(&mut self, stmts: &mut [Stmt]) -> Result<(), TypeError> {
        for s in stmts {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn stmt(&mut self, s: &mut Stmt) -> Result<(), TypeError> {
        match &mut s.kind {
            StmtKind::Let { name, value } => {
                let t = self.expr(value)?;
                self.bind(&name.text, &t, name.span)
            }
            StmtKind::Print(e) => self.expr(e).map(|_| ()),
            StmtKind::Append { target, elem } => {
                let list_ty = self.var_type(&target.text, target.span)?;
                let elem_ty = self.expr(elem)?;
                self.unify(&list_ty, &Type::list(elem_ty.clone()))
                    .map_err(|_| {
                        mismatch(
                            format!(
                                "cannot add {} to `{}`, which is {}",
                                self.resolve(&elem_ty),
                                target.text,
                                self.resolve(&list_ty)
                            ),
                            elem.span,
                            vec![(format!("`{}` is here", target.text), target.span)],
                        )
                    })?;
                Ok(())
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                let t = self.expr(cond)?;
                self.expect(&t, &Type::Bool, "condition of `if`", cond.span)?;
                let before = self.env.bound.clone();
                self.block(then_block)?;
                let after_then = std::mem::replace(&mut self.env.bound, before.clone());
                if let Some(e) = else_block {
                    self.block(e)?;
                }
                let after_else = std::mem::take(&mut self.env.bound);
                self.env.bound = after_then.intersection(&after_else).cloned().collect();
                Ok(())
            }
            StmtKind::While { cond, body } => {
                let t = self.expr(cond)?;
                self.expect(&t, &Type::Bool, "condition of `while`", cond.span)?;
                let before = self.env.bound.clone();
                self.block(body)?;
                self.env.bound = before;
                Ok(())
            }
            StmtKind::ForEach { var, iter, body } => {
                let t = self.expr(iter)?;
                let elem = self.fresh();
                self.expect(
                    &t,
                    &Type::list(elem.clone()),
                    "`for each` iterates over a list",
                    iter.span,
                )?;
                let before = self.env.bound.clone();
                self.bind(&var.text, &elem, var.span)?;
                self.block(body)?;
                self.env.bound = before;
                Ok(())
            }
            StmtKind::AddTo { .. } => unreachable!("surface `add ... to` in core program"),
        }
    }

    fn var_type(&self, name: &str, span: Span) -> Result<Type, TypeError> {
        if self.env.bound.contains(name) {
            return Ok(self.env.types[name].clone());
        }
        let message = if self.env.types.contains_key(name) {
            format!("`{name}` is not bound on every path to this use")
        } else {
            format!("unbound variable `{name}`")
        };
        Err(TypeError {
            kind: TypeErrorKind::UnboundVariable,
            message,
            span,
            related: vec![],
        })
    }

    fn expr(&mut self, e: &mut Expr) -> Result<Type, TypeError> {
        let span = e.span;
        let ty = match &mut e.kind {
            ExprKind::Int(_) => Type::Int,
            ExprKind::Str(_) => Type::Str,
            ExprKind::Bool(_) => Type::Bool,
            ExprKind::Var(name) => self.var_type(name, span)?,
            ExprKind::Pronoun { word, referent } => match referent {
                Referent::Resolved { name, .. } => match self.env.types.get(name.as_str()) {
                    Some(t) => t.clone(),
                    None => {
                        return Err(TypeError {
                            kind: TypeErrorKind::UnresolvedPronoun,
                            message: format!(
                                "pronoun `{word}` refers to `{name}`, which has no type"
                            ),
                            span,
                            related: vec![],
                        })
                    }
                },
                Referent::Unresolved => {
                    return Err(TypeError {
                        kind: TypeErrorKind::UnresolvedPronoun,
                        message: format!(
                            "pronoun `{word}` has no antecedent; nothing has been bound yet"
                        ),
                        span,
                        related: vec![],
                    })
                }
            },
            ExprKind::List(items) => {
                let elem = self.fresh();
                for item in items.iter_mut() {
                    let t = self.expr(item)?;
                    let first = self.resolve(&elem);
                    self.unify(&t, &elem).map_err(|_| {
                        mismatch(
                            format!(
                                "list elements must share one type: expected {first}, found {}",
                                self.resolve(&t)
                            ),
                            item.span,
                            vec![],
                        )
                    })?;
                }
                Type::list(elem)
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let op = *op;
                let lt = self.expr(lhs)?;
                let rt = self.expr(rhs)?;
                for (t, side) in [(&lt, &**lhs), (&rt, &**rhs)] {
                    if self.unify(t, &Type::Int).is_err() {
                        return Err(mismatch(
                            format!(
                                "`{}` expects Int operands, found {}",
                                op.text(),
                                self.resolve(t)
                            ),
                            span,
                            vec![(format!("this operand is {}", self.resolve(t)), side.span)],
                        ));
                    }
                }
                Type::Int
            }
            ExprKind::Relation { op, lhs, rhs } => {
                let op = *op;
                let lt = self.expr(lhs)?;
                let rt = self.expr(rhs)?;
                let (lspan, rspan) = (lhs.span, rhs.span);
                self.unify(&lt, &rt).map_err(|_| {
                    mismatch(
                        format!(
                            "`{}` compares values of one type, found {} and {}",
                            op.text(),
                            self.resolve(&lt),
                            self.resolve(&rt)
                        ),
                        span,
                        vec![
                            (format!("{}", self.resolve(&lt)), lspan),
                            (format!("{}", self.resolve(&rt)), rspan),
                        ],
                    )
                })?;
                if !op.is_equality() {
                    self.unify(&lt, &Type::Int).map_err(|_| {
                        mismatch(
                            format!(
                                "`{}` orders Int values only, found {}",
                                op.text(),
                                self.resolve(&lt)
                            ),
                            span,
                            vec![],
                        )
                    })?;
                }
                Type::Bool
            }
            ExprKind::Reduce { op, init, list } => {
                let op: BinOp = *op;
                let it = self.expr(init)?;
                let lt = self.expr(list)?;
                self.expect(
                    &it,
                    &Type::Int,
                    &format!("initial value of `{}` reduction", op.text()),
                    init.span,
                )?;
                self.expect(
                    &lt,
                    &Type::list(Type::Int),
                    "`sum of` needs a list of Int",
                    list.span,
                )?;
                Type::Int
            }
            ExprKind::Builtin { func, args } => {
                let func = *func;
                let arg = self.expr(&mut args[0])?;
                self.builtin(func, &arg, args[0].span)?
            }
            ExprKind::SumOf(_) | ExprKind::LengthOf(_) | ExprKind::Reversed(_) => {
                unreachable!("surface sugar in core program")
            }
        };
        e.ty = Some(ty.clone());
        Ok(ty)
    }

    /// `len : Str | List a -> Int`, `rev : t -> t` for `t` in `Str | List a`.
    fn builtin(&mut self, func: Builtin, arg: &Type, span: Span) -> Result<Type, TypeError> {
        let resolved = self.resolve(arg);
        match &resolved {
            Type::Str | Type::List(_) => {}
            Type::Var(_) => self.deferred.push(Deferred {
                func,
                arg: arg.clone(),
                span,
            }),
            other => {
                return Err(mismatch(
                    format!(
                        "`{}` needs a list or a string, found {other}",
                        match func {
                            Builtin::Len => "length of",
                            Builtin::Rev => "reversed",
                        }
                    ),
                    span,
                    vec![],
                ))
            }
        }
        Ok(match func {
            Builtin::Len => Type::Int,
            Builtin::Rev => arg.clone(),
        })
    }

    fn check_deferred(&mut self) -> Result<(), TypeError> {
        for d in std::mem::take(&mut self.deferred) {
            match self.resolve(&d.arg) {
                Type::Str | Type::List(_) => {}
                Type::Var(_) => {
                    return Err(TypeError {
                        kind: TypeErrorKind::CannotInfer,
                        message: format!(
                            "cannot infer whether the argument of `{}` is a list or a string",
                            d.func.text()
                        ),
                        span: d.span,
                        related: vec![],
                    })
                }
                other => {
                    return Err(mismatch(
                        format!(
                            "`{}` needs a list or a string, found {other}",
                            d.func.text()
                        ),
                        d.span,
                        vec![],
                    ))
                }
            }
        }
        Ok(())
    }

    /// Apply the final substitution everywhere and reject residual variables.
    fn finish(&self, prog: &mut Program) -> Result<(), TypeError> {
        fn block(cx: &Infer, stmts: &mut [Stmt]) -> Result<(), TypeError> {
            for s in stmts {
                match &mut s.kind {
                    StmtKind::Let { value, .. } | StmtKind::Print(value) => expr(cx, value)?,
                    StmtKind::Append { elem, .. } | StmtKind::AddTo { elem, .. } => expr(cx, elem)?,
                    StmtKind::If {
                        cond,
                        then_block,
                        else_block,
                    } => {
                        expr(cx, cond)?;
                        block(cx, then_block)?;
                        if let Some(e) = else_block {
                            block(cx, e)?;
                        }
                    }
                    StmtKind::While { cond, body } => {
                        expr(cx, cond)?;
                        block(cx, body)?;
                    }
                    StmtKind::ForEach { iter, body, .. } => {
                        expr(cx, iter)?;
                        block(cx, body)?;
                    }
                }
            }
            Ok(())
        }
        fn expr(cx: &Infer, e: &mut Expr) -> Result<(), TypeError> {
            // children first so the innermost unknown (usually `[]`) is reported
            match &mut e.kind {
                ExprKind::List(items) => {
                    for i in items {
                        expr(cx, i)?;
                    }
                }
                ExprKind::Binary { lhs, rhs, .. } | ExprKind::Relation { lhs, rhs, .. } => {
                    expr(cx, lhs)?;
                    expr(cx, rhs)?;
                }
                ExprKind::Reduce { init, list, .. } => {
                    expr(cx, init)?;
                    expr(cx, list)?;
                }
                ExprKind::Builtin { args, .. } => {
                    for a in args {
                        expr(cx, a)?;
                    }
                }
                ExprKind::SumOf(x) | ExprKind::LengthOf(x) | ExprKind::Reversed(x) => expr(cx, x)?,
                _ => {}
            }
            let t = cx.resolve(e.ty.as_ref().expect("every expression was visited"));
            if !t.is_ground() {
                let what = if matches!(&e.kind, ExprKind::List(items) if items.is_empty()) {
                    "cannot infer the element type of this empty list"
                } else {
                    "cannot infer a complete type for this expression"
                };
                return Err(TypeError {
                    kind: TypeErrorKind::CannotInfer,
                    message: what.to_string(),
                    span: e.span,
                    related: vec![],
                });
            }
            e.ty = Some(t);
            Ok(())
        }
        block(self, &mut prog.stmts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::desugar::desugar;
    use crate::lexer::tokenize;
    use crate::parser::parse;

    fn check(src: &str) -> Result<TypedProgram, TypeError> {
        infer(&desugar(&parse(&tokenize(src).unwrap()).unwrap()))
    }

    fn ty_of(tp: &TypedProgram, name: &str) -> String {
        tp.env.get(name).unwrap().to_string()
    }

    #[test]
    fn unify_examples() {
        assert!(unify(&Type::Int, &Type::Int).unwrap().is_empty());
        let s = unify(&Type::Var(0), &Type::list(Type::Int)).unwrap();
        assert_eq!(s, Substitution::singleton(0, Type::list(Type::Int)));
        assert_eq!(
            unify(&Type::Int, &Type::Str),
            Err(UnifyError::Mismatch(Type::Int, Type::Str))
        );
        assert!(matches!(
            unify(&Type::Var(1), &Type::list(Type::Var(1))),
            Err(UnifyError::Occurs(1, _))
        ));
    }

    #[test]
    fn substitution_is_idempotent() {
        let s1 = Substitution::singleton(0, Type::list(Type::Var(1)));
        let s2 = Substitution::singleton(1, Type::Int);
        let s = s1.then(&s2);
        for t in [Type::Var(0), Type::Var(1), Type::list(Type::Var(0))] {
            assert_eq!(s.apply(&s.apply(&t)), s.apply(&t));
        }
        assert_eq!(s.apply(&Type::Var(0)), Type::list(Type::Int));
    }

    #[test]
    fn average_sample_types() {
        let tp = check(
            "Let numbers be [8, 12, 15, 9, 6]. Let total be sum of numbers. Let count be length of numbers.
             Let average be total divided by count. If it is greater than 10: Print \"big\". End if.",
        )
        .unwrap();
        assert_eq!(ty_of(&tp, "numbers"), "List<Int>");
        assert_eq!(ty_of(&tp, "total"), "Int");
        assert_eq!(ty_of(&tp, "count"), "Int");
        assert_eq!(ty_of(&tp, "average"), "Int");
        let StmtKind::If { cond, .. } = &tp.program.program().stmts[4].kind else {
            panic!()
        };
        assert_eq!(cond.ty, Some(Type::Bool));
        assert_eq!(
            tp.dump(),
            "numbers : List<Int>\ntotal : Int\ncount : Int\naverage : Int\n"
        );
    }

    #[test]
    fn string_plus_int_is_rejected_at_plus() {
        let err = check("Let x be 1 plus \"a\".").unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::Mismatch);
        assert!(err.message.contains("Str"), "{}", err.message);
        assert_eq!((err.span.col, err.span.end_col), (10, 19));
        assert_eq!(err.related[0].1.col, 17);
    }

    #[test]
    fn reversed_list_length() {
        let tp = check("Let v be [1, 2] reversed. Print length of v.").unwrap();
        assert_eq!(ty_of(&tp, "v"), "List<Int>");
        let StmtKind::Print(e) = &tp.program.program().stmts[1].kind else {
            panic!()
        };
        assert_eq!(e.ty, Some(Type::Int));
    }

    #[test]
    fn unresolved_pronoun_is_a_pronoun_error() {
        let err = check("Print it.").unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::UnresolvedPronoun);
    }

    #[test]
    fn unbound_and_maybe_unbound() {
        assert_eq!(
            check("Print y.").unwrap_err().kind,
            TypeErrorKind::UnboundVariable
        );
        let err = check("If true: Let y be 1. End if. Print y.").unwrap_err();
        assert!(err.message.contains("every path"), "{}", err.message);
        assert!(check("If true: Let y be 1. Else: Let y be 2. End if. Print y.").is_ok());
        assert!(check("While false: Let z be 1. End while. Print z.").is_err());
        assert!(check("For each x in [1]: Print x. End for. Print x.").is_err());
    }

    #[test]
    fn rebinding_must_keep_type() {
        assert!(check("Let x be 1. Let x be 2.").is_ok());
        let err = check("Let x be 1. Let x be \"s\".").unwrap_err();
        assert!(err.message.contains("rebound"), "{}", err.message);
    }

    #[test]
    fn empty_list_needs_context() {
        let tp = check("Let xs be []. Add 3 to xs. Print xs.").unwrap();
        assert_eq!(ty_of(&tp, "xs"), "List<Int>");
        let err = check("Let xs be []. Print xs.").unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::CannotInfer);
        assert_eq!(err.span.col, 11);
        assert_eq!(
            check("Print length of [].").unwrap_err().kind,
            TypeErrorKind::CannotInfer
        );
    }

    #[test]
    fn relational_rules() {
        assert!(check("Print \"a\" is \"b\".").is_ok());
        assert!(check("Print [1] is [2].").is_ok());
        assert!(check("Print true is false.").is_ok());
        assert!(check("Print \"a\" greater than \"b\".").is_err());
        assert!(check("Print 1 is \"b\".").is_err());
    }

    #[test]
    fn conditions_must_be_bool() {
        assert!(check("If 1: Print 1. End if.").is_err());
        assert!(check("While 0: Print 1. End while.").is_err());
    }

    #[test]
    fn reversed_string_and_palindrome_comparison() {
        let tp = check("Let text be \"abba\". Print text is text reversed.").unwrap();
        assert_eq!(ty_of(&tp, "text"), "Str");
        assert!(check("Print 5 reversed.").is_err());
    }

    #[test]
    fn pronoun_takes_referent_type() {
        let tp = check("Let s be \"x\". Let t be it reversed.").unwrap();
        assert_eq!(ty_of(&tp, "t"), "Str");
        assert!(check("Let s be \"x\". Print it plus 1.").is_err());
    }

    #[test]
    fn foreach_binds_element_type() {
        let tp =
            check("Let xs be [[1], [2, 3]]. For each row in xs: Print length of row. End for.")
                .unwrap();
        assert_eq!(ty_of(&tp, "row"), "List<Int>");
    }

    #[test]
    fn fresh_numbering_gives_same_types() {
        let src = "Let xs be []. Let ys be [xs]. Add 1 to xs. For each y in ys: Print y. End for.";
        let core = desugar(&parse(&tokenize(src).unwrap()).unwrap());
        let a = infer_with_env(&core, &TypeEnv::new(), 0).unwrap();
        let b = infer_with_env(&core, &TypeEnv::new(), 1000).unwrap();
        assert_eq!(a, b);
    }
}
