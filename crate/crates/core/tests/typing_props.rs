//! The type checker against an explicit derivation search on small
//! recursion-free instances. Found derivations are re-validated rule by
//! rule, with subsumption decided by a direct reading of the subtyping
//! rules, so the search and the checker under test share no code.

use std::collections::BTreeMap;

use mpst_core::flgen::{gen_centralized, gen_multimodel_upgrade, upgraded_centralized};
use mpst_core::random::{supertype_of, typable_pair, GenConfig};
use mpst_core::subtyping::subtype_env;
use mpst_core::syntax::*;
use mpst_core::typing::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Ctx = BTreeMap<Ident, Sort>;

const SLOTS: [(&str, &str); 3] = [("q", "a"), ("q", "b"), ("r", "a")];

// ---------------------------------------------------------------------------
// Derivations

#[derive(Debug)]
enum Rule {
    Zero,
    Out(Vec<Node>),
    In(Vec<Node>),
    Cond(Box<Node>, Box<Node>),
    Sub(Box<Node>),
}

#[derive(Debug)]
struct Node {
    ctx: Ctx,
    proc: Process,
    ty: SessionType,
    rule: Rule,
}

fn value_sort_in(ctx: &Ctx, v: &Value) -> Option<Sort> {
    match v {
        Value::Nat(_) => Some(Sort::Nat),
        Value::Bool(_) => Some(Sort::Bool),
        Value::Var(x) => ctx.get(x).copied(),
    }
}

fn peer_set(bs: &[TypeBranch]) -> Vec<Participant> {
    let mut v: Vec<_> = bs.iter().map(|b| b.peer.clone()).collect();
    v.sort();
    v.dedup();
    v
}

fn osub(a: &SessionType, b: &SessionType) -> bool {
    let covered = |small: &[TypeBranch], big: &[TypeBranch], small_is_sub: bool| {
        small.iter().all(|x| {
            big.iter().any(|y| {
                x.peer == y.peer
                    && x.label == y.label
                    && x.sort == y.sort
                    && if small_is_sub { osub(&x.cont, &y.cont) } else { osub(&y.cont, &x.cont) }
            })
        })
    };
    match (a.kind(), b.kind()) {
        (TypeKind::End, TypeKind::End) => true,
        (TypeKind::Internal(xs), TypeKind::Internal(ys)) => peer_set(xs) == peer_set(ys) && covered(xs, ys, true),
        (TypeKind::External(xs), TypeKind::External(ys)) => peer_set(xs) == peer_set(ys) && covered(ys, xs, false),
        _ => false,
    }
}

fn find<'a>(ts: &'a [TypeBranch], peer: &Participant, label: &Label) -> Option<&'a TypeBranch> {
    ts.iter().find(|t| &t.peer == peer && &t.label == label)
}

/// Checks every rule instance of a derivation.
fn valid(n: &Node) -> bool {
    match (&n.rule, n.proc.kind(), n.ty.kind()) {
        (Rule::Zero, ProcKind::Inact, TypeKind::End) => true,
        (Rule::Out(kids), ProcKind::Internal(bs), TypeKind::Internal(ts)) => {
            bs.len() == ts.len()
                && kids.len() == bs.len()
                && bs.iter().zip(kids).all(|(b, k)| match find(ts, &b.peer, &b.label) {
                    Some(t) => {
                        value_sort_in(&n.ctx, &b.payload) == Some(t.sort)
                            && k.ctx == n.ctx
                            && k.proc == b.cont
                            && k.ty == t.cont
                            && valid(k)
                    }
                    None => false,
                })
        }
        (Rule::In(kids), ProcKind::External(bs), TypeKind::External(ts)) => {
            bs.len() == ts.len()
                && kids.len() == bs.len()
                && bs.iter().zip(kids).all(|(b, k)| match find(ts, &b.peer, &b.label) {
                    Some(t) => {
                        let mut ctx = n.ctx.clone();
                        ctx.insert(b.binder.clone(), t.sort);
                        k.ctx == ctx && k.proc == b.cont && k.ty == t.cont && valid(k)
                    }
                    None => false,
                })
        }
        (Rule::Cond(a, b), ProcKind::Cond { cond, then, els }, _) => {
            value_sort_in(&n.ctx, cond) == Some(Sort::Bool)
                && a.ctx == n.ctx
                && b.ctx == n.ctx
                && &a.proc == then
                && &b.proc == els
                && a.ty == n.ty
                && b.ty == n.ty
                && valid(a)
                && valid(b)
        }
        (Rule::Sub(k), _, _) => k.ctx == n.ctx && k.proc == n.proc && osub(&k.ty, &n.ty) && valid(k),
        _ => false,
    }
}

/// Types a process has without subsumption at its root, a few per shape.
fn min_types(ctx: &Ctx, p: &Process) -> Vec<SessionType> {
    const CAP: usize = 32;
    fn product(choices: Vec<Vec<TypeBranch>>) -> Vec<Vec<TypeBranch>> {
        let mut out = vec![Vec::new()];
        for c in choices {
            let mut next = Vec::new();
            for prefix in &out {
                for b in &c {
                    let mut v: Vec<TypeBranch> = prefix.clone();
                    v.push(b.clone());
                    next.push(v);
                }
            }
            next.truncate(CAP);
            out = next;
        }
        out
    }
    match p.kind() {
        ProcKind::Inact => vec![SessionType::end()],
        ProcKind::Internal(bs) => {
            let mut choices = Vec::new();
            for b in bs {
                let Some(sort) = value_sort_in(ctx, &b.payload) else { return Vec::new() };
                choices.push(
                    min_types(ctx, &b.cont)
                        .into_iter()
                        .map(|t| TypeBranch { peer: b.peer.clone(), label: b.label.clone(), sort, cont: t })
                        .collect(),
                );
            }
            product(choices).into_iter().map(internal).collect()
        }
        ProcKind::External(bs) => {
            let mut choices = Vec::new();
            for b in bs {
                let mut c = Vec::new();
                for sort in [Sort::Nat, Sort::Bool] {
                    let mut inner = ctx.clone();
                    inner.insert(b.binder.clone(), sort);
                    for t in min_types(&inner, &b.cont) {
                        c.push(TypeBranch { peer: b.peer.clone(), label: b.label.clone(), sort, cont: t });
                    }
                }
                choices.push(c);
            }
            product(choices).into_iter().map(external).collect()
        }
        ProcKind::Cond { then, els, .. } => {
            let a = min_types(ctx, then);
            let b = min_types(ctx, els);
            let mut out: Vec<SessionType> = a.iter().chain(&b).cloned().collect();
            for x in &a {
                for y in &b {
                    if let (TypeKind::Internal(xs), TypeKind::Internal(ys)) = (x.kind(), y.kind()) {
                        let mut u = xs.clone();
                        for t in ys {
                            if find(xs, &t.peer, &t.label).is_none() {
                                u.push(t.clone());
                            }
                        }
                        out.push(internal(u));
                    }
                }
            }
            out.truncate(CAP);
            out
        }
        ProcKind::Rec { .. } | ProcKind::Var(_) => Vec::new(),
    }
}

fn close(ctx: &Ctx, p: &Process, exact: SessionType, rule: Rule, target: &SessionType) -> Option<Node> {
    let node = Node { ctx: ctx.clone(), proc: p.clone(), ty: exact.clone(), rule };
    if &exact == target {
        Some(node)
    } else if osub(&exact, target) {
        Some(Node { ctx: ctx.clone(), proc: p.clone(), ty: target.clone(), rule: Rule::Sub(Box::new(node)) })
    } else {
        None
    }
}

/// Searches for a derivation of `ctx ⊢ p : target`.
fn search(ctx: &Ctx, p: &Process, target: &SessionType) -> Option<Node> {
    match (p.kind(), target.kind()) {
        (ProcKind::Inact, TypeKind::End) => Some(Node { ctx: ctx.clone(), proc: p.clone(), ty: target.clone(), rule: Rule::Zero }),
        (ProcKind::Internal(bs), TypeKind::Internal(ts)) => {
            let mut kids = Vec::new();
            let mut exact = Vec::new();
            for b in bs {
                let t = find(ts, &b.peer, &b.label)?;
                if value_sort_in(ctx, &b.payload) != Some(t.sort) {
                    return None;
                }
                kids.push(search(ctx, &b.cont, &t.cont)?);
                exact.push(t.clone());
            }
            close(ctx, p, internal(exact), Rule::Out(kids), target)
        }
        (ProcKind::External(bs), TypeKind::External(ts)) => {
            let mut kids = Vec::new();
            let mut exact = Vec::new();
            for b in bs {
                if let Some(t) = find(ts, &b.peer, &b.label) {
                    let mut inner = ctx.clone();
                    inner.insert(b.binder.clone(), t.sort);
                    kids.push(search(&inner, &b.cont, &t.cont)?);
                    exact.push(t.clone());
                    continue;
                }
                let mut found = None;
                'sorts: for sort in [Sort::Nat, Sort::Bool] {
                    let mut inner = ctx.clone();
                    inner.insert(b.binder.clone(), sort);
                    for cand in min_types(&inner, &b.cont) {
                        if let Some(d) = search(&inner, &b.cont, &cand) {
                            found = Some((d, TypeBranch { peer: b.peer.clone(), label: b.label.clone(), sort, cont: cand }));
                            break 'sorts;
                        }
                    }
                }
                let (d, t) = found?;
                kids.push(d);
                exact.push(t);
            }
            close(ctx, p, external(exact), Rule::In(kids), target)
        }
        (ProcKind::Cond { cond, then, els }, _) => {
            if value_sort_in(ctx, cond) != Some(Sort::Bool) {
                return None;
            }
            let a = search(ctx, then, target)?;
            let b = search(ctx, els, target)?;
            Some(Node {
                ctx: ctx.clone(),
                proc: p.clone(),
                ty: target.clone(),
                rule: Rule::Cond(Box::new(a), Box::new(b)),
            })
        }
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Generators

fn size(p: &Process) -> usize {
    1 + match p.kind() {
        ProcKind::Inact | ProcKind::Var(_) => 0,
        ProcKind::Internal(bs) => bs.iter().map(|b| size(&b.cont)).sum(),
        ProcKind::External(bs) => bs.iter().map(|b| size(&b.cont)).sum(),
        ProcKind::Cond { then, els, .. } => size(then) + size(els),
        ProcKind::Rec { body, .. } => size(body),
    }
}

fn value(rng: &mut impl Rng, scope: &[Ident]) -> Value {
    match rng.gen_range(0..4) {
        0 if !scope.is_empty() => Value::Var(scope[rng.gen_range(0..scope.len())].clone()),
        0 | 1 => Value::Bool(rng.gen_bool(0.5)),
        _ => Value::Nat(rng.gen_range(0..3)),
    }
}

fn heads(rng: &mut impl Rng, max: usize) -> Vec<(&'static str, &'static str)> {
    let mut hs: Vec<_> = SLOTS.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
    if hs.is_empty() {
        hs.push(SLOTS[rng.gen_range(0..SLOTS.len())]);
    }
    hs.truncate(max);
    hs
}

/// A recursion-free process with at most `budget` nodes.
fn small_process(rng: &mut impl Rng, budget: usize, scope: &mut Vec<Ident>) -> Process {
    if budget <= 1 || rng.gen_bool(0.2) {
        return Process::inact();
    }
    match rng.gen_range(0..5) {
        0 if budget >= 3 => {
            let left = rng.gen_range(1..=budget - 2);
            Process::new(ProcKind::Cond {
                cond: value(rng, scope),
                then: small_process(rng, left, scope),
                els: small_process(rng, budget - 1 - left, scope),
            })
        }
        1 | 2 => {
            let hs = heads(rng, budget - 1);
            let share = (budget - 1) / hs.len();
            let bs = hs
                .into_iter()
                .map(|(peer, label)| OutBranch {
                    peer: p(peer),
                    label: Label::new(label),
                    payload: value(rng, scope),
                    cont: small_process(rng, share, scope),
                })
                .collect();
            Process::new(ProcKind::Internal(bs))
        }
        _ => {
            let hs = heads(rng, budget - 1);
            let share = (budget - 1) / hs.len();
            let bs = hs
                .into_iter()
                .map(|(peer, label)| {
                    let x = Ident::new(if rng.gen_bool(0.5) { "x" } else { "y" });
                    scope.push(x.clone());
                    let cont = small_process(rng, share, scope);
                    scope.pop();
                    InBranch { peer: p(peer), label: Label::new(label), binder: x, cont }
                })
                .collect();
            Process::new(ProcKind::External(bs))
        }
    }
}

fn small_type(rng: &mut impl Rng, depth: usize) -> SessionType {
    if depth == 0 || rng.gen_bool(0.3) {
        return SessionType::end();
    }
    let bs: Vec<TypeBranch> = heads(rng, 3)
        .into_iter()
        .map(|(peer, label)| {
            let sort = if rng.gen_bool(0.7) { Sort::Nat } else { Sort::Bool };
            out_t(peer, label, sort, small_type(rng, depth - 1))
        })
        .collect();
    if rng.gen_bool(0.5) {
        internal(bs)
    } else {
        external(bs)
    }
}

/// A target type for `p`: one of its own types, a supertype or a random
/// type.
fn target_for(rng: &mut impl Rng, p: &Process) -> SessionType {
    let own = min_types(&Ctx::new(), p);
    match rng.gen_range(0..3) {
        0 if !own.is_empty() => own[rng.gen_range(0..own.len())].clone(),
        1 if !own.is_empty() => {
            let k = rng.gen_range(0..own.len());
            supertype_of(rng, &own[k])
        }
        _ => small_type(rng, 3),
    }
}

// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn checker_agrees_with_derivation_search(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let proc = small_process(&mut rng, 6, &mut Vec::new());
        prop_assert!(size(&proc) <= 6);
        let t = target_for(&mut rng, &proc);
        let algo = check_process(&SharedEnv::default(), &proc, &t).is_ok();
        let d = search(&Ctx::new(), &proc, &t);
        if let Some(d) = &d {
            prop_assert!(valid(d), "invalid derivation for {} : {}", proc, t);
        }
        prop_assert_eq!(algo, d.is_some(), "{} : {}", proc, t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn supertypes_of_the_environment_still_type_the_session(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, g) = typable_pair(&mut rng, &GenConfig::default());
        let wider = TypingEnv {
            bindings: g
                .bindings
                .iter()
                .map(|(q, b)| (q.clone(), Binding { queue: b.queue.clone(), ty: supertype_of(&mut rng, &b.ty) }))
                .collect(),
        };
        prop_assert!(subtype_env(&g, &wider).unwrap());
        if let Err(e) = check_session(&n, &wider) {
            prop_assert!(false, "{}\n{}\n{}\n{}", mpst_core::syntax::printer::session(&n), mpst_core::syntax::printer::env(&g), mpst_core::syntax::printer::env(&wider), e);
        }
    }

    #[test]
    fn substituting_a_well_sorted_value_preserves_typing(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Ident::new("x");
        let proc = small_process(&mut rng, 6, &mut vec![x.clone()]);
        let sort = if rng.gen_bool(0.5) { Sort::Nat } else { Sort::Bool };
        let mut ctx = Ctx::new();
        ctx.insert(x.clone(), sort);
        let theta = SharedEnv::default().with_value(&x, sort);
        for t in min_types(&ctx, &proc) {
            if check_process(&theta, &proc, &t).is_ok() {
                let v = match sort { Sort::Nat => Value::Nat(rng.gen_range(0..5)), Sort::Bool => Value::Bool(rng.gen_bool(0.5)) };
                prop_assert!(check_value(&SharedEnv::default(), &v, sort).is_ok());
                let q = proc.subst_value(&x, &v);
                prop_assert!(check_process(&SharedEnv::default(), &q, &t).is_ok(), "{} : {}", q, t);
            }
        }
    }
}

#[test]
fn search_finds_known_derivations() {
    let proc = parse_process("sum{q?a(x).if x then r!a(1) else r!a(2), q?b(x)}").unwrap();
    let t = parse_type("&{q?a(bool).+{r!a(nat)}}").unwrap();
    let d = search(&Ctx::new(), &proc, &t).expect("derivable");
    assert!(valid(&d));
    assert!(matches!(d.rule, Rule::Sub(_)));
    assert!(check_process(&SharedEnv::default(), &proc, &t).is_ok());
}

#[test]
fn values() {
    let e = SharedEnv::default();
    assert!(check_value(&e, &Value::Nat(5), Sort::Nat).is_ok());
    let x = Ident::new("x");
    assert!(check_value(&e.with_value(&x, Sort::Bool), &Value::Var(x.clone()), Sort::Bool).is_ok());
    assert!(check_value(&e, &Value::Bool(true), Sort::Nat).is_err());
    assert!(check_value(&e, &Value::Var(x), Sort::Nat).is_err());
}

#[test]
fn queues() {
    let h = |s: &str| parse_session(&format!("participant p {{ 0 }} queue [{s}]")).unwrap().actors[&p("p")].queue.clone();
    let qt = |s: &str| parse_env(&format!("p : ([{s}], end)")).unwrap().bindings[&p("p")].queue.clone();
    assert!(check_queue(&h(""), &qt("")).is_ok());
    assert!(check_queue(&h("(q, l(5))"), &qt("q!l(nat)")).is_ok());
    assert!(check_queue(&h("(q, l(true))"), &qt("q!l(nat)")).is_err());
    assert!(check_queue(&h("(q, l(1)), (r, m(true))"), &qt("r!m(bool), q!l(nat)")).is_ok());
    assert!(check_queue(&h("(q, l(1)), (q, m(true))"), &qt("q!m(bool), q!l(nat)")).is_err());
}

#[test]
fn processes() {
    let e = SharedEnv::default();
    assert!(check_process(&e, &Process::inact(), &SessionType::end()).is_ok());
    let out = parse_process("q!l(5).0").unwrap();
    assert!(check_process(&e, &out, &parse_type("+{r!l(nat).end}").unwrap()).is_err());
    let (q2, t2p, t2) = gen_multimodel_upgrade();
    assert!(check_process(&e, &q2, &t2p).is_ok());
    assert!(check_process(&e, &q2, &t2).is_ok());
    let rec = parse_process("mu X.q!l(1).X").unwrap();
    assert!(check_process(&e, &rec, &parse_type("mu t.+{q!l(nat).t}").unwrap()).is_ok());
    assert!(check_process(&e, &rec, &parse_type("mu t.+{q!l(nat).t, q!m(nat).end}").unwrap()).is_ok());
    assert!(check_process(&e, &rec, &parse_type("mu t.+{q!l(bool).t}").unwrap()).is_err());
}

#[test]
fn sessions() {
    let (n, g) = gen_centralized(3).unwrap();
    assert!(check_session(&n, &g).is_ok());
    let m = parse_session(
        "participant p { sum{ q?l1(x).r?l2(y), r?l2(x), r?l3(x) } }
         participant q { 0 } queue [(p, l1(1))]
         participant r { 0 } queue [(p, l2(2))]",
    )
    .unwrap();
    let gamma = parse_env(
        "p : ([], &{q?l1(nat).r?l2(nat), r?l2(nat), r?l3(nat)});
         q : ([p!l1(nat)], end);
         r : ([p!l2(nat)], end)",
    )
    .unwrap();
    assert!(check_session(&m, &gamma).is_ok());
    let (u, ug) = upgraded_centralized(3).unwrap();
    assert!(check_session(&u, &ug).is_ok());
    assert!(check_session(&u, &g).is_ok());
    let short = parse_env("p : ([], &{q?l1(nat).r?l2(nat), r?l2(nat), r?l3(nat)})").unwrap();
    let errs = check_session(&m, &short).unwrap_err();
    assert_eq!(errs.domain.len(), 2);
}
