use std::collections::BTreeMap;
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::Arc;

use serde::{Serialize, Serializer};

macro_rules! name_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(s: impl AsRef<str>) -> Self {
                $name(Arc::from(s.as_ref()))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name::new(s)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.0)
            }
        }
    };
}

name_type!(
    /// A session participant (role).
    Participant
);
name_type!(
    /// A message label.
    Label
);
name_type!(
    /// A value variable, process variable or type variable.
    Ident
);

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sort {
    Nat,
    Bool,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Nat => "nat",
            Sort::Bool => "bool",
        })
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Value {
    Nat(u64),
    Bool(bool),
    Var(Ident),
}

impl Value {
    pub fn is_ground(&self) -> bool {
        !matches!(self, Value::Var(_))
    }

    /// Sort of a ground value.
    pub fn sort(&self) -> Option<Sort> {
        match self {
            Value::Nat(_) => Some(Sort::Nat),
            Value::Bool(_) => Some(Sort::Bool),
            Value::Var(_) => None,
        }
    }
}

fn hash_of<T: Hash>(t: &T) -> u64 {
    let mut h = DefaultHasher::new();
    t.hash(&mut h);
    h.finish()
}

fn merge_sorted(into: &mut Vec<Ident>, from: &[Ident]) {
    if from.is_empty() {
        return;
    }
    into.extend_from_slice(from);
    into.sort();
    into.dedup();
}

fn without(mut v: Vec<Ident>, x: &Ident) -> Vec<Ident> {
    v.retain(|y| y != x);
    v
}

// ---------------------------------------------------------------------------
// Processes

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct InBranch {
    pub peer: Participant,
    pub label: Label,
    pub binder: Ident,
    pub cont: Process,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct OutBranch {
    pub peer: Participant,
    pub label: Label,
    pub payload: Value,
    pub cont: Process,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum ProcKind {
    Inact,
    /// Multi-peer external choice `sum{q?l(x).P, ...}`.
    External(Vec<InBranch>),
    /// Multi-peer internal choice `sum{q!l(v).P, ...}`.
    Internal(Vec<OutBranch>),
    Cond {
        cond: Value,
        then: Process,
        els: Process,
    },
    Rec {
        var: Ident,
        body: Process,
    },
    Var(Ident),
}

struct ProcNode {
    kind: ProcKind,
    hash: u64,
    free_values: Box<[Ident]>,
    free_procs: Box<[Ident]>,
}

/// Shared, hash-consed-style process term. Cloning is a pointer copy and
/// equality short-circuits on pointer identity and the cached hash.
#[derive(Clone)]
pub struct Process(Arc<ProcNode>);

impl Process {
    pub fn new(kind: ProcKind) -> Self {
        let mut fv: Vec<Ident> = Vec::new();
        let mut fp: Vec<Ident> = Vec::new();
        match &kind {
            ProcKind::Inact => {}
            ProcKind::External(bs) => {
                for b in bs {
                    merge_sorted(&mut fv, &without(b.cont.free_values().to_vec(), &b.binder));
                    merge_sorted(&mut fp, b.cont.free_procs());
                }
            }
            ProcKind::Internal(bs) => {
                for b in bs {
                    if let Value::Var(x) = &b.payload {
                        merge_sorted(&mut fv, std::slice::from_ref(x));
                    }
                    merge_sorted(&mut fv, b.cont.free_values());
                    merge_sorted(&mut fp, b.cont.free_procs());
                }
            }
            ProcKind::Cond { cond, then, els } => {
                if let Value::Var(x) = cond {
                    fv.push(x.clone());
                }
                merge_sorted(&mut fv, then.free_values());
                merge_sorted(&mut fv, els.free_values());
                merge_sorted(&mut fp, then.free_procs());
                merge_sorted(&mut fp, els.free_procs());
            }
            ProcKind::Rec { var, body } => {
                fv = body.free_values().to_vec();
                fp = without(body.free_procs().to_vec(), var);
            }
            ProcKind::Var(x) => fp.push(x.clone()),
        }
        let hash = hash_of(&kind);
        Process(Arc::new(ProcNode {
            kind,
            hash,
            free_values: fv.into_boxed_slice(),
            free_procs: fp.into_boxed_slice(),
        }))
    }

    pub fn inact() -> Self {
        Process::new(ProcKind::Inact)
    }

    pub fn kind(&self) -> &ProcKind {
        &self.0.kind
    }

    pub fn free_values(&self) -> &[Ident] {
        &self.0.free_values
    }

    pub fn free_procs(&self) -> &[Ident] {
        &self.0.free_procs
    }

    /// No free value variables and no free process variables.
    pub fn is_closed(&self) -> bool {
        self.0.free_values.is_empty() && self.0.free_procs.is_empty()
    }

    pub fn is_inact(&self) -> bool {
        matches!(self.0.kind, ProcKind::Inact)
    }

    /// `self[v/x]`, sharing every subterm in which `x` is not free.
    pub fn subst_value(&self, x: &Ident, v: &Value) -> Process {
        if self.free_values().binary_search(x).is_err() {
            return self.clone();
        }
        let swap = |w: &Value| match w {
            Value::Var(y) if y == x => v.clone(),
            other => other.clone(),
        };
        Process::new(match self.kind() {
            ProcKind::Inact | ProcKind::Var(_) => unreachable!("no free value variables"),
            ProcKind::External(bs) => ProcKind::External(
                bs.iter()
                    .map(|b| InBranch {
                        cont: if &b.binder == x {
                            b.cont.clone()
                        } else {
                            b.cont.subst_value(x, v)
                        },
                        ..b.clone()
                    })
                    .collect(),
            ),
            ProcKind::Internal(bs) => ProcKind::Internal(
                bs.iter()
                    .map(|b| OutBranch {
                        payload: swap(&b.payload),
                        cont: b.cont.subst_value(x, v),
                        ..b.clone()
                    })
                    .collect(),
            ),
            ProcKind::Cond { cond, then, els } => ProcKind::Cond {
                cond: swap(cond),
                then: then.subst_value(x, v),
                els: els.subst_value(x, v),
            },
            ProcKind::Rec { var, body } => ProcKind::Rec {
                var: var.clone(),
                body: body.subst_value(x, v),
            },
        })
    }

    /// `self[q/X]` for a process variable `X`.
    pub fn subst_proc(&self, x: &Ident, q: &Process) -> Process {
        if self.free_procs().binary_search(x).is_err() {
            return self.clone();
        }
        Process::new(match self.kind() {
            ProcKind::Inact => unreachable!("no free process variables"),
            ProcKind::Var(_) => return q.clone(),
            ProcKind::External(bs) => ProcKind::External(
                bs.iter()
                    .map(|b| InBranch {
                        cont: b.cont.subst_proc(x, q),
                        ..b.clone()
                    })
                    .collect(),
            ),
            ProcKind::Internal(bs) => ProcKind::Internal(
                bs.iter()
                    .map(|b| OutBranch {
                        cont: b.cont.subst_proc(x, q),
                        ..b.clone()
                    })
                    .collect(),
            ),
            ProcKind::Cond { cond, then, els } => ProcKind::Cond {
                cond: cond.clone(),
                then: then.subst_proc(x, q),
                els: els.subst_proc(x, q),
            },
            ProcKind::Rec { var, body } => ProcKind::Rec {
                var: var.clone(),
                body: body.subst_proc(x, q),
            },
        })
    }

    /// One unfolding step of `mu X.P`; other terms are returned unchanged.
    pub fn unfold_once(&self) -> Process {
        match self.kind() {
            ProcKind::Rec { var, body } => body.subst_proc(var, self),
            _ => self.clone(),
        }
    }

    /// Unfold until the head is not a recursion binder. Terminates on
    /// guarded terms.
    pub fn unfold_head(&self) -> Process {
        let mut p = self.clone();
        while let ProcKind::Rec { .. } = p.kind() {
            p = p.unfold_once();
        }
        p
    }
}

impl PartialEq for Process {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.hash == other.0.hash && self.0.kind == other.0.kind)
    }
}

impl Eq for Process {}

impl Hash for Process {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::printer::process_compact(self))
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::printer::process_compact(self))
    }
}

// ---------------------------------------------------------------------------
// Session types

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct TypeBranch {
    pub peer: Participant,
    pub label: Label,
    pub sort: Sort,
    pub cont: SessionType,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum TypeKind {
    End,
    /// `&{q?l(S).T, ...}`
    External(Vec<TypeBranch>),
    /// `+{q!l(S).T, ...}`
    Internal(Vec<TypeBranch>),
    Rec { var: Ident, body: SessionType },
    Var(Ident),
}

struct TypeNode {
    kind: TypeKind,
    hash: u64,
    free_vars: Box<[Ident]>,
}

#[derive(Clone)]
pub struct SessionType(Arc<TypeNode>);

impl SessionType {
    pub fn new(kind: TypeKind) -> Self {
        let mut fv: Vec<Ident> = Vec::new();
        match &kind {
            TypeKind::End => {}
            TypeKind::External(bs) | TypeKind::Internal(bs) => {
                for b in bs {
                    merge_sorted(&mut fv, b.cont.free_vars());
                }
            }
            TypeKind::Rec { var, body } => fv = without(body.free_vars().to_vec(), var),
            TypeKind::Var(x) => fv.push(x.clone()),
        }
        let hash = hash_of(&kind);
        SessionType(Arc::new(TypeNode {
            kind,
            hash,
            free_vars: fv.into_boxed_slice(),
        }))
    }

    pub fn end() -> Self {
        SessionType::new(TypeKind::End)
    }

    pub fn kind(&self) -> &TypeKind {
        &self.0.kind
    }

    pub fn free_vars(&self) -> &[Ident] {
        &self.0.free_vars
    }

    pub fn is_closed(&self) -> bool {
        self.0.free_vars.is_empty()
    }

    pub fn is_end(&self) -> bool {
        matches!(self.0.kind, TypeKind::End)
    }

    pub fn subst(&self, x: &Ident, t: &SessionType) -> SessionType {
        if self.free_vars().binary_search(x).is_err() {
            return self.clone();
        }
        let map = |bs: &Vec<TypeBranch>| {
            bs.iter()
                .map(|b| TypeBranch {
                    cont: b.cont.subst(x, t),
                    ..b.clone()
                })
                .collect()
        };
        SessionType::new(match self.kind() {
            TypeKind::End => unreachable!("no free variables"),
            TypeKind::Var(_) => return t.clone(),
            TypeKind::External(bs) => TypeKind::External(map(bs)),
            TypeKind::Internal(bs) => TypeKind::Internal(map(bs)),
            TypeKind::Rec { var, body } => TypeKind::Rec {
                var: var.clone(),
                body: body.subst(x, t),
            },
        })
    }

    pub fn unfold_once(&self) -> SessionType {
        match self.kind() {
            TypeKind::Rec { var, body } => body.subst(var, self),
            _ => self.clone(),
        }
    }

    pub fn unfold_head(&self) -> SessionType {
        let mut t = self.clone();
        while let TypeKind::Rec { .. } = t.kind() {
            t = t.unfold_once();
        }
        t
    }
}

impl PartialEq for SessionType {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.hash == other.0.hash && self.0.kind == other.0.kind)
    }
}

impl Eq for SessionType {}

impl Hash for SessionType {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for SessionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::printer::type_compact(self))
    }
}

impl fmt::Display for SessionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::printer::type_compact(self))
    }
}

// ---------------------------------------------------------------------------
// Queues, sessions and typing environments

/// A message `(receiver, label(payload))` in the sender's output queue.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Message {
    pub receiver: Participant,
    pub label: Label,
    pub payload: Value,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Queue(pub Vec<Message>);

impl Queue {
    pub fn empty() -> Self {
        Queue(Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A queued message type `receiver!label(sort)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MessageType {
    pub receiver: Participant,
    pub label: Label,
    pub sort: Sort,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct QueueType(pub Vec<MessageType>);

impl QueueType {
    pub fn empty() -> Self {
        QueueType(Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Actor {
    pub process: Process,
    pub queue: Queue,
}

/// A runtime session: each participant runs one process and owns one
/// output queue.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Session {
    pub actors: BTreeMap<Participant, Actor>,
}

impl Session {
    pub fn participants(&self) -> impl Iterator<Item = &Participant> {
        self.actors.keys()
    }

    pub fn get(&self, p: &Participant) -> Option<&Actor> {
        self.actors.get(p)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Binding {
    pub queue: QueueType,
    pub ty: SessionType,
}

/// A typing environment `p : (queue type, session type); ...`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct TypingEnv {
    pub bindings: BTreeMap<Participant, Binding>,
}

impl TypingEnv {
    pub fn participants(&self) -> impl Iterator<Item = &Participant> {
        self.bindings.keys()
    }

    pub fn get(&self, p: &Participant) -> Option<&Binding> {
        self.bindings.get(p)
    }
}

/// Shared environment for process typing: value variables to sorts and
/// process variables to session types.
#[derive(Clone, Debug, Default)]
pub struct SharedEnv {
    pub values: BTreeMap<Ident, Sort>,
    pub procs: BTreeMap<Ident, SessionType>,
}

impl SharedEnv {
    pub fn with_value(&self, x: &Ident, s: Sort) -> SharedEnv {
        let mut e = self.clone();
        e.values.insert(x.clone(), s);
        e
    }

    pub fn with_proc(&self, x: &Ident, t: SessionType) -> SharedEnv {
        let mut e = self.clone();
        e.procs.insert(x.clone(), t);
        e
    }
}

// ---------------------------------------------------------------------------
// Builders used by tests, generators and the parser.

pub fn p(s: &str) -> Participant {
    Participant::new(s)
}

pub fn send(peer: &str, label: &str, payload: Value, cont: Process) -> Process {
    Process::new(ProcKind::Internal(vec![OutBranch {
        peer: p(peer),
        label: Label::new(label),
        payload,
        cont,
    }]))
}

pub fn recv(peer: &str, label: &str, binder: &str, cont: Process) -> Process {
    Process::new(ProcKind::External(vec![InBranch {
        peer: p(peer),
        label: Label::new(label),
        binder: Ident::new(binder),
        cont,
    }]))
}

pub fn out_t(peer: &str, label: &str, sort: Sort, cont: SessionType) -> TypeBranch {
    TypeBranch {
        peer: p(peer),
        label: Label::new(label),
        sort,
        cont,
    }
}

pub fn internal(bs: Vec<TypeBranch>) -> SessionType {
    SessionType::new(TypeKind::Internal(bs))
}

pub fn external(bs: Vec<TypeBranch>) -> SessionType {
    SessionType::new(TypeKind::External(bs))
}
