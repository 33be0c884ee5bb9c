//! Type checking of values, queues, processes and sessions.
//!
//! Processes are checked against a declared type. Subsumption is folded
//! into choice matching: an internal choice may offer fewer branches than
//! its type and an external choice may accept more, as long as both sides
//! address the same set of peers. A process variable is accepted at any
//! supertype of the type it was bound with.
//!
//! Extra input branches have no type to check against, so a type for their
//! continuation is synthesised (see [`synthesize`]).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::congruence::{canon_queue, sorted_queue_type};
use crate::subtyping::{check_well_formed, Subtyping};
use crate::syntax::printer;
use crate::syntax::*;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TypeError {
    /// Path from the participant's process root to the offending node.
    pub location: String,
    pub rule: &'static str,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "at {}: [{}] expected {}, found {}",
            if self.location.is_empty() { "/" } else { &self.location },
            self.rule,
            self.expected,
            self.found
        )
    }
}

fn err(path: &[String], rule: &'static str, expected: impl Into<String>, found: impl Into<String>) -> TypeError {
    TypeError {
        location: path.join("/"),
        rule,
        expected: expected.into(),
        found: found.into(),
    }
}

pub fn value_sort(theta: &SharedEnv, v: &Value) -> Option<Sort> {
    match v {
        Value::Nat(_) => Some(Sort::Nat),
        Value::Bool(_) => Some(Sort::Bool),
        Value::Var(x) => theta.values.get(x).copied(),
    }
}

pub fn check_value(theta: &SharedEnv, v: &Value, s: Sort) -> Result<(), TypeError> {
    check_value_at(theta, v, s, &[])
}

fn check_value_at(theta: &SharedEnv, v: &Value, s: Sort, path: &[String]) -> Result<(), TypeError> {
    let rule = match v {
        Value::Nat(_) => "t-nat",
        Value::Bool(_) => "t-bool",
        Value::Var(_) => "t-var",
    };
    match value_sort(theta, v) {
        Some(found) if found == s => Ok(()),
        Some(found) => Err(err(path, rule, format!("a {s} value"), format!("{} : {found}", printer::value(v)))),
        None => Err(err(path, "t-var", format!("a {s} value"), format!("unbound variable {}", printer::value(v)))),
    }
}

pub fn check_queue(h: &Queue, q: &QueueType) -> Result<(), TypeError> {
    let lanes = canon_queue(h).lanes;
    let tq = sorted_queue_type(q);
    let mut types: std::collections::BTreeMap<&Participant, Vec<&MessageType>> = Default::default();
    for m in &tq.0 {
        types.entry(&m.receiver).or_default().push(m);
    }
    let receivers: BTreeSet<&Participant> = lanes.keys().chain(types.keys().copied()).collect();
    for r in receivers {
        let ms = lanes.get(r).map(Vec::as_slice).unwrap_or(&[]);
        let ts = types.get(r).map(Vec::as_slice).unwrap_or(&[]);
        let path = vec![format!("queue[{r}]")];
        if ms.len() != ts.len() {
            return Err(err(
                &path,
                "t-queue",
                format!("{} message(s) for {r}", ts.len()),
                format!("{} message(s)", ms.len()),
            ));
        }
        for (i, ((label, v), t)) in ms.iter().zip(ts).enumerate() {
            let path = vec![format!("queue[{r}]"), i.to_string()];
            if *label != t.label {
                return Err(err(&path, "t-elm", printer::message_type(t), format!("label {label}")));
            }
            match v.sort() {
                Some(s) if s == t.sort => {}
                _ => return Err(err(&path, "t-elm", printer::message_type(t), format!("payload {}", printer::value(v)))),
            }
        }
    }
    Ok(())
}

fn peers_of<'a>(it: impl Iterator<Item = &'a Participant>) -> BTreeSet<&'a Participant> {
    it.collect()
}

fn show_peers(s: &BTreeSet<&Participant>) -> String {
    let v: Vec<String> = s.iter().map(|p| p.to_string()).collect();
    format!("peers {{{}}}", v.join(", "))
}

/// Process checker; holds a subtyping cache shared across queries.
#[derive(Default)]
pub struct Checker {
    sub: Subtyping,
}

impl Checker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check_process(&mut self, theta: &SharedEnv, p: &Process, t: &SessionType) -> Result<(), TypeError> {
        let mut path = Vec::new();
        self.go(theta, p, t, &mut path)
    }

    fn go(&mut self, theta: &SharedEnv, p: &Process, t: &SessionType, path: &mut Vec<String>) -> Result<(), TypeError> {
        match p.kind() {
            ProcKind::Rec { var, body } => {
                let inner = theta.with_proc(var, t.clone());
                path.push(format!("mu {var}"));
                let r = self.go(&inner, body, t, path);
                path.pop();
                return r;
            }
            ProcKind::Var(x) => {
                return match theta.procs.get(x) {
                    None => Err(err(path, "t-var", "a bound process variable", format!("free {x}"))),
                    Some(tx) if self.sub.check(tx, t) => Ok(()),
                    Some(tx) => Err(err(path, "t-sub", format!("a subtype of {t}"), format!("{x} : {tx}"))),
                };
            }
            ProcKind::Cond { cond, then, els } => {
                check_value_at(theta, cond, Sort::Bool, path).map_err(|mut e| {
                    e.rule = "t-cond";
                    e
                })?;
                path.push("then".into());
                self.go(theta, then, t, path)?;
                path.pop();
                path.push("else".into());
                self.go(theta, els, t, path)?;
                path.pop();
                return Ok(());
            }
            _ => {}
        }
        let t = t.unfold_head();
        match (p.kind(), t.kind()) {
            (ProcKind::Inact, TypeKind::End) => Ok(()),
            (ProcKind::Internal(bs), TypeKind::Internal(ts)) => {
                let pp = peers_of(bs.iter().map(|b| &b.peer));
                let tp = peers_of(ts.iter().map(|b| &b.peer));
                if pp != tp {
                    return Err(err(path, "t-out", show_peers(&tp), show_peers(&pp)));
                }
                for b in bs {
                    path.push(format!("{}!{}", b.peer, b.label));
                    let Some(tb) = ts.iter().find(|x| x.peer == b.peer && x.label == b.label) else {
                        let e = err(path, "t-out", format!("a branch of {t}"), format!("{}!{}", b.peer, b.label));
                        return Err(e);
                    };
                    check_value_at(theta, &b.payload, tb.sort, path).map_err(|mut e| {
                        e.rule = "t-out";
                        e
                    })?;
                    self.go(theta, &b.cont, &tb.cont, path)?;
                    path.pop();
                }
                Ok(())
            }
            (ProcKind::External(bs), TypeKind::External(ts)) => {
                let pp = peers_of(bs.iter().map(|b| &b.peer));
                let tp = peers_of(ts.iter().map(|b| &b.peer));
                if pp != tp {
                    return Err(err(path, "t-in", show_peers(&tp), show_peers(&pp)));
                }
                for tb in ts {
                    if !bs.iter().any(|b| b.peer == tb.peer && b.label == tb.label) {
                        return Err(err(path, "t-in", format!("a branch for {}?{}", tb.peer, tb.label), printer::process_compact(p)));
                    }
                }
                for b in bs {
                    path.push(format!("{}?{}", b.peer, b.label));
                    match ts.iter().find(|x| x.peer == b.peer && x.label == b.label) {
                        Some(tb) => self.go(&theta.with_value(&b.binder, tb.sort), &b.cont, &tb.cont, path)?,
                        None => {
                            let (sort, u) = synthesize_branch(theta, &b.binder, &b.cont)
                                .map_err(|why| err(path, "t-sub", "a typable extra branch", why))?;
                            self.go(&theta.with_value(&b.binder, sort), &b.cont, &u, path)?;
                        }
                    }
                    path.pop();
                }
                Ok(())
            }
            (_, _) => {
                let rule = match p.kind() {
                    ProcKind::Inact => "t-0",
                    ProcKind::Internal(_) => "t-out",
                    ProcKind::External(_) => "t-in",
                    _ => unreachable!("handled above"),
                };
                Err(err(path, rule, t.to_string(), printer::process_compact(p)))
            }
        }
    }
}

pub fn check_process(theta: &SharedEnv, p: &Process, t: &SessionType) -> Result<(), TypeError> {
    if let Err(e) = check_well_formed(t) {
        return Err(err(&[], "t-rec", "a closed guarded type", e.to_string()));
    }
    Checker::new().check_process(theta, p, t)
}

/// Errors of a session check, grouped by participant.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SessionTypeErrors {
    /// Participants present on only one side.
    pub domain: Vec<String>,
    pub participants: std::collections::BTreeMap<String, Vec<TypeError>>,
}

impl SessionTypeErrors {
    pub fn is_empty(&self) -> bool {
        self.domain.is_empty() && self.participants.values().all(Vec::is_empty)
    }
}

impl fmt::Display for SessionTypeErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.domain {
            writeln!(f, "{d}")?;
        }
        for (p, es) in &self.participants {
            for e in es {
                writeln!(f, "{p}: {e}")?;
            }
        }
        Ok(())
    }
}

impl Checker {
    pub fn check_session(&mut self, n: &Session, g: &TypingEnv) -> Result<(), SessionTypeErrors> {
        let mut out = SessionTypeErrors::default();
        for p in n.participants() {
            if g.get(p).is_none() {
                out.domain.push(format!("participant {p} is not in the environment"));
            }
        }
        for p in g.participants() {
            if n.get(p).is_none() {
                out.domain.push(format!("participant {p} is not in the session"));
            }
        }
        for (p, a) in &n.actors {
            let Some(b) = g.get(p) else { continue };
            let mut es = Vec::new();
            if let Err(e) = check_well_formed(&b.ty) {
                es.push(err(&[], "t-sess", "a closed guarded type", e.to_string()));
            } else {
                if let Err(e) = check_queue(&a.queue, &b.queue) {
                    es.push(e);
                }
                if let Err(e) = self.check_process(&SharedEnv::default(), &a.process, &b.ty) {
                    es.push(e);
                }
            }
            if !es.is_empty() {
                out.participants.insert(p.to_string(), es);
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}

pub fn check_session(n: &Session, g: &TypingEnv) -> Result<(), SessionTypeErrors> {
    Checker::new().check_session(n, g)
}

// ---------------------------------------------------------------------------
// Type synthesis for continuations of extra input branches.
//
// Synthesis works on a private mirror of session types whose branch sorts
// may be unification variables: a binder gets a variable, a conditional on
// it forces `bool`, and joining two branches unifies their sorts. Variables
// left open at the end default to `nat`.

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum SortT {
    Fixed(Sort),
    Var(usize),
}

#[derive(Clone, Default)]
struct Sorts(Vec<Option<SortT>>);

impl Sorts {
    fn fresh(&mut self) -> SortT {
        self.0.push(None);
        SortT::Var(self.0.len() - 1)
    }

    fn resolve(&self, s: SortT) -> SortT {
        match s {
            SortT::Var(i) => self.0[i].map_or(s, |t| self.resolve(t)),
            fixed => fixed,
        }
    }

    fn unify(&mut self, a: SortT, b: SortT) -> bool {
        match (self.resolve(a), self.resolve(b)) {
            (SortT::Fixed(x), SortT::Fixed(y)) => x == y,
            (SortT::Var(i), SortT::Var(j)) if i == j => true,
            (SortT::Var(i), t) | (t, SortT::Var(i)) => {
                self.0[i] = Some(t);
                true
            }
        }
    }

    fn ground(&self, s: SortT) -> Sort {
        match self.resolve(s) {
            SortT::Fixed(x) => x,
            SortT::Var(_) => Sort::Nat,
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
enum Shape {
    End,
    Var(Ident),
    Rec(Ident, Box<Shape>),
    Internal(Vec<ShapeBranch>),
    External(Vec<ShapeBranch>),
}

#[derive(Clone, PartialEq, Debug)]
struct ShapeBranch {
    peer: Participant,
    label: Label,
    sort: SortT,
    cont: Shape,
}

impl Shape {
    fn from_type(t: &SessionType) -> Shape {
        let branches = |bs: &[TypeBranch]| {
            bs.iter()
                .map(|b| ShapeBranch {
                    peer: b.peer.clone(),
                    label: b.label.clone(),
                    sort: SortT::Fixed(b.sort),
                    cont: Shape::from_type(&b.cont),
                })
                .collect()
        };
        match t.kind() {
            TypeKind::End => Shape::End,
            TypeKind::Var(x) => Shape::Var(x.clone()),
            TypeKind::Rec { var, body } => Shape::Rec(var.clone(), Box::new(Shape::from_type(body))),
            TypeKind::Internal(bs) => Shape::Internal(branches(bs)),
            TypeKind::External(bs) => Shape::External(branches(bs)),
        }
    }

    fn to_type(&self, sorts: &Sorts) -> SessionType {
        let branches = |bs: &[ShapeBranch]| {
            bs.iter()
                .map(|b| TypeBranch {
                    peer: b.peer.clone(),
                    label: b.label.clone(),
                    sort: sorts.ground(b.sort),
                    cont: b.cont.to_type(sorts),
                })
                .collect()
        };
        SessionType::new(match self {
            Shape::End => TypeKind::End,
            Shape::Var(x) => TypeKind::Var(x.clone()),
            Shape::Rec(x, body) => TypeKind::Rec { var: x.clone(), body: body.to_type(sorts) },
            Shape::Internal(bs) => TypeKind::Internal(branches(bs)),
            Shape::External(bs) => TypeKind::External(branches(bs)),
        })
    }

    fn mentions(&self, x: &Ident) -> bool {
        match self {
            Shape::End => false,
            Shape::Var(y) => y == x,
            Shape::Rec(y, body) => y != x && body.mentions(x),
            Shape::Internal(bs) | Shape::External(bs) => bs.iter().any(|b| b.cont.mentions(x)),
        }
    }

    /// Replaces free `x` by `s`. Binders in synthesised shapes are unique,
    /// so no capture can occur.
    fn subst(&self, x: &Ident, s: &Shape) -> Shape {
        let branches = |bs: &[ShapeBranch]| -> Vec<ShapeBranch> {
            bs.iter().map(|b| ShapeBranch { cont: b.cont.subst(x, s), ..b.clone() }).collect()
        };
        match self {
            Shape::Var(y) if y == x => s.clone(),
            Shape::Rec(y, body) if y != x => Shape::Rec(y.clone(), Box::new(body.subst(x, s))),
            Shape::Internal(bs) => Shape::Internal(branches(bs)),
            Shape::External(bs) => Shape::External(branches(bs)),
            other => other.clone(),
        }
    }

    fn unfold(&self) -> Shape {
        match self {
            Shape::Rec(x, body) => body.subst(x, self),
            other => other.clone(),
        }
    }
}

#[derive(Clone, Default)]
struct Scope {
    values: BTreeMap<Ident, SortT>,
    procs: BTreeMap<Ident, Shape>,
}

impl Scope {
    fn new(theta: &SharedEnv) -> Self {
        Scope {
            values: theta.values.iter().map(|(x, s)| (x.clone(), SortT::Fixed(*s))).collect(),
            procs: theta.procs.iter().map(|(x, t)| (x.clone(), Shape::from_type(t))).collect(),
        }
    }

    fn with_value(&self, x: &Ident, s: SortT) -> Scope {
        let mut out = self.clone();
        out.values.insert(x.clone(), s);
        out
    }

    fn with_proc(&self, x: &Ident, s: Shape) -> Scope {
        let mut out = self.clone();
        out.procs.insert(x.clone(), s);
        out
    }

    fn sort_of(&self, v: &Value) -> Result<SortT, String> {
        match v {
            Value::Nat(_) => Ok(SortT::Fixed(Sort::Nat)),
            Value::Bool(_) => Ok(SortT::Fixed(Sort::Bool)),
            Value::Var(x) => self.values.get(x).copied().ok_or_else(|| format!("unbound variable {x}")),
        }
    }
}

/// Some type `T` with `theta ⊢ p : T`, if one is found.
///
/// Conditionals take the structural least common supertype of their arms,
/// so the search is incomplete only where that join is not least (joins of
/// differently shaped recursive types).
pub fn synthesize(theta: &SharedEnv, p: &Process) -> Result<SessionType, String> {
    let mut sorts = Sorts::default();
    let shape = synth(&Scope::new(theta), p, &mut sorts)?;
    Ok(shape.to_type(&sorts))
}

/// Synthesises a type for the continuation `p` of an input binding `x`,
/// returning the sort chosen for `x` as well.
fn synthesize_branch(theta: &SharedEnv, x: &Ident, p: &Process) -> Result<(Sort, SessionType), String> {
    let mut sorts = Sorts::default();
    let v = sorts.fresh();
    let shape = synth(&Scope::new(theta).with_value(x, v), p, &mut sorts)?;
    Ok((sorts.ground(v), shape.to_type(&sorts)))
}

fn synth(scope: &Scope, p: &Process, sorts: &mut Sorts) -> Result<Shape, String> {
    Ok(match p.kind() {
        ProcKind::Inact => Shape::End,
        ProcKind::Var(x) => scope.procs.get(x).cloned().ok_or_else(|| format!("free process variable {x}"))?,
        ProcKind::Rec { var, body } => {
            let body = synth(&scope.with_proc(var, Shape::Var(var.clone())), body, sorts)?;
            Shape::Rec(var.clone(), Box::new(body))
        }
        ProcKind::Internal(bs) => {
            let mut out = Vec::new();
            for b in bs {
                let sort = scope.sort_of(&b.payload)?;
                let cont = synth(scope, &b.cont, sorts)?;
                out.push(ShapeBranch { peer: b.peer.clone(), label: b.label.clone(), sort, cont });
            }
            Shape::Internal(out)
        }
        ProcKind::External(bs) => {
            let mut out = Vec::new();
            for b in bs {
                let sort = sorts.fresh();
                let cont = synth(&scope.with_value(&b.binder, sort), &b.cont, sorts)?;
                out.push(ShapeBranch { peer: b.peer.clone(), label: b.label.clone(), sort, cont });
            }
            Shape::External(out)
        }
        ProcKind::Cond { cond, then, els } => {
            if !sorts.unify(scope.sort_of(cond)?, SortT::Fixed(Sort::Bool)) {
                return Err(format!("condition {} is not boolean", printer::value(cond)));
            }
            let a = synth(scope, then, sorts)?;
            let b = synth(scope, els, sorts)?;
            join(&a, &b, sorts, 64).ok_or_else(|| {
                format!("no common supertype of {} and {}", a.to_type(sorts), b.to_type(sorts))
            })?
        }
    })
}

/// Least common supertype of two synthesised shapes, unifying branch sorts
/// along the way. `fuel` bounds recursion unfolding.
fn join(a: &Shape, b: &Shape, sorts: &mut Sorts, fuel: usize) -> Option<Shape> {
    if a == b {
        return Some(a.clone());
    }
    let fuel = fuel.checked_sub(1)?;
    let peers = |bs: &[ShapeBranch]| -> BTreeSet<Participant> { bs.iter().map(|b| b.peer.clone()).collect() };
    match (a, b) {
        (Shape::Rec(x, p), Shape::Rec(y, q)) => {
            // Align the binders, then join the bodies.
            let q = if x == y {
                (**q).clone()
            } else if !q.mentions(x) {
                q.subst(y, &Shape::Var(x.clone()))
            } else {
                return None;
            };
            Some(Shape::Rec(x.clone(), Box::new(join(p, &q, sorts, fuel)?)))
        }
        (Shape::Rec(..), _) => join(&a.unfold(), b, sorts, fuel),
        (_, Shape::Rec(..)) => join(a, &b.unfold(), sorts, fuel),
        (Shape::Internal(xs), Shape::Internal(ys)) => {
            if peers(xs) != peers(ys) {
                return None;
            }
            let mut out = Vec::new();
            for x in xs {
                match ys.iter().find(|y| y.peer == x.peer && y.label == x.label) {
                    Some(y) => {
                        if !sorts.unify(x.sort, y.sort) {
                            return None;
                        }
                        out.push(ShapeBranch { cont: join(&x.cont, &y.cont, sorts, fuel)?, ..x.clone() });
                    }
                    None => out.push(x.clone()),
                }
            }
            out.extend(ys.iter().filter(|y| !xs.iter().any(|x| x.peer == y.peer && x.label == y.label)).cloned());
            Some(Shape::Internal(out))
        }
        (Shape::External(xs), Shape::External(ys)) => {
            let mut out = Vec::new();
            for x in xs {
                let Some(y) = ys.iter().find(|y| y.peer == x.peer && y.label == x.label) else {
                    continue;
                };
                // A branch that cannot be joined is dropped; undo whatever
                // the attempt unified.
                let saved = sorts.clone();
                match sorts.unify(x.sort, y.sort).then(|| join(&x.cont, &y.cont, sorts, fuel)).flatten() {
                    Some(cont) => out.push(ShapeBranch { cont, ..x.clone() }),
                    None => *sorts = saved,
                }
            }
            let ps = peers(&out);
            if out.is_empty() || ps != peers(xs) || ps != peers(ys) {
                return None;
            }
            Some(Shape::External(out))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(p: &str, t: &str) -> bool {
        check_process(&SharedEnv::default(), &parse_process(p).unwrap(), &parse_type(t).unwrap()).is_ok()
    }

    #[test]
    fn values() {
        let theta = SharedEnv::default().with_value(&Ident::new("x"), Sort::Bool);
        assert!(check_value(&SharedEnv::default(), &Value::Nat(5), Sort::Nat).is_ok());
        assert!(check_value(&theta, &Value::Var(Ident::new("x")), Sort::Bool).is_ok());
        let e = check_value(&SharedEnv::default(), &Value::Bool(true), Sort::Nat).unwrap_err();
        assert_eq!(e.rule, "t-bool");
        assert!(check_value(&SharedEnv::default(), &Value::Var(Ident::new("y")), Sort::Nat).is_err());
    }

    #[test]
    fn queues() {
        let q = |s: &str| parse_session(&format!("participant p {{ 0 }} queue [{s}]")).unwrap().actors[&p("p")].queue.clone();
        let qt = |s: &str| parse_env(&format!("p : ([{s}], end)")).unwrap().bindings[&p("p")].queue.clone();
        assert!(check_queue(&q(""), &qt("")).is_ok());
        assert!(check_queue(&q("(q, l(5))"), &qt("q!l(nat)")).is_ok());
        assert!(check_queue(&q("(q, l(true))"), &qt("q!l(nat)")).is_err());
        assert!(check_queue(&q("(q, l(1)), (r, m(2))"), &qt("r!m(nat), q!l(nat)")).is_ok());
        assert!(check_queue(&q("(q, l(1)), (q, m(2))"), &qt("q!m(nat), q!l(nat)")).is_err());
        assert!(check_queue(&q("(q, l(1))"), &qt("")).is_err());
    }

    #[test]
    fn processes() {
        assert!(ok("0", "end"));
        assert!(ok("q!l(5)", "+{q!l(nat), q!m(bool)}"));
        assert!(!ok("q!l(5)", "+{r!l(nat)}"));
        assert!(!ok("q!l(5)", "+{q!l(nat), r!m(nat)}"));
        assert!(!ok("q!l(true)", "+{q!l(nat)}"));
        assert!(ok("q?l(x).r!m(x)", "&{q?l(bool).r!m(bool)}"));
        assert!(!ok("q?l(x).r!m(x)", "&{q?l(bool).r!m(nat)}"));
        assert!(ok("q?l(x).if x then r!a(1) else r!b(2)", "&{q?l(bool).+{r!a(nat), r!b(nat)}}"));
        assert!(!ok("q?l(x).if x then r!a(1) else r!b(2)", "&{q?l(nat).+{r!a(nat), r!b(nat)}}"));
        assert!(ok("mu X.q!l(1).X", "mu t.+{q!l(nat).t}"));
        assert!(ok("mu X.q!l(1).X", "mu t.+{q!l(nat).+{q!l(nat).t}}"));
        assert!(!ok("0", "+{q!l(nat)}"));
    }

    #[test]
    fn extra_input_branches_need_a_typable_continuation() {
        assert!(ok("sum{p1?ld(x).p1!upd(1), p1?ld2(y).p1!upd2(1)}", "&{p1?ld(nat).p1!upd(nat)}"));
        assert!(ok("sum{q?a(x), q?b(y).if y then 0 else 0}", "&{q?a(nat)}"));
        assert!(!ok("sum{q?a(x), r?b(y)}", "&{q?a(nat)}"));
        assert!(!ok("sum{q?a(x)}", "&{q?a(nat), q?b(nat)}"));
        assert!(!ok("sum{q?a(x), q?b(y).if 3 then 0 else 0}", "&{q?a(nat)}"));
    }

    #[test]
    fn example_m_is_typed_by_gamma() {
        let n = parse_session(
            "participant p { sum{ q?l1(x).r?l2(y), r?l2(x), r?l3(x) } }
             participant q { 0 } queue [(p, l1(1))]
             participant r { 0 } queue [(p, l2(2))]",
        )
        .unwrap();
        let g = parse_env(
            "p : ([], &{q?l1(nat).r?l2(nat), r?l2(nat), r?l3(nat)});
             q : ([p!l1(nat)], end); r : ([p!l2(nat)], end)",
        )
        .unwrap();
        assert!(check_session(&n, &g).is_ok());
        let mut g2 = g.clone();
        g2.bindings.remove(&p("r"));
        let e = check_session(&n, &g2).unwrap_err();
        assert_eq!(e.domain.len(), 1);
    }

    #[test]
    fn errors_carry_paths() {
        let e = check_process(
            &SharedEnv::default(),
            &parse_process("q?a(x).r!b(x)").unwrap(),
            &parse_type("&{q?a(nat).+{r!c(nat)}}").unwrap(),
        )
        .unwrap_err();
        assert_eq!(e.location, "q?a/r!b");
        assert_eq!(e.rule, "t-out");
    }

    #[test]
    fn joins() {
        let theta = SharedEnv::default();
        let t = synthesize(&theta, &parse_process("if true then q!a(1) else q!b(2)").unwrap()).unwrap();
        assert_eq!(t, parse_type("+{q!a(nat), q!b(nat)}").unwrap());
        let u = synthesize(&theta, &parse_process("if true then sum{q?a(x), q?b(y)} else q?a(z).r!c(1)").unwrap());
        assert!(u.is_err());
        let v = synthesize(&theta, &parse_process("if true then sum{q?a(x), q?b(y)} else q?a(z)").unwrap()).unwrap();
        assert_eq!(v, parse_type("&{q?a(nat)}").unwrap());
    }
}
