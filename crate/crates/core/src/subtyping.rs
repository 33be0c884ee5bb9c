//! Coinductive subtyping on session types, queue/type pairs and typing
//! environments.
//!
//! The relation is decided by assume-and-check: a pair under examination is
//! assumed to hold, and revisiting it succeeds. Every rule is conjunctive,
//! so when a top-level query succeeds all pairs visited on the way form a
//! simulation and are cached as positive results.

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use crate::congruence::queue_type_congruent;
use crate::syntax::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubtypeError {
    #[error("type `{0}` has a free type variable")]
    Open(String),
    #[error("type `{0}` has an unguarded recursion variable")]
    Unguarded(String),
}

/// Checks that a type is closed and every recursion variable is guarded.
pub fn check_well_formed(t: &SessionType) -> Result<(), SubtypeError> {
    if !t.is_closed() {
        return Err(SubtypeError::Open(t.to_string()));
    }
    let mut seen = HashSet::new();
    unguarded(t, &mut seen)?;
    Ok(())
}

/// Variables occurring free at the head of `t` (not under any prefix).
fn unguarded(t: &SessionType, seen: &mut HashSet<SessionType>) -> Result<BTreeSet<Ident>, SubtypeError> {
    match t.kind() {
        TypeKind::End => Ok(BTreeSet::new()),
        TypeKind::Var(x) => Ok(BTreeSet::from([x.clone()])),
        TypeKind::External(bs) | TypeKind::Internal(bs) => {
            if seen.insert(t.clone()) {
                for b in bs {
                    unguarded(&b.cont, seen)?;
                }
            }
            Ok(BTreeSet::new())
        }
        TypeKind::Rec { var, body } => {
            let mut u = unguarded(body, seen)?;
            if u.remove(var) {
                return Err(SubtypeError::Unguarded(t.to_string()));
            }
            Ok(u)
        }
    }
}

fn peers(bs: &[TypeBranch]) -> BTreeSet<&Participant> {
    bs.iter().map(|b| &b.peer).collect()
}

/// Subtyping checker with a cache of proven pairs.
#[derive(Default)]
pub struct Subtyping {
    proven: HashSet<(SessionType, SessionType)>,
}

impl Subtyping {
    pub fn new() -> Self {
        Self::default()
    }

    /// `a ⩽ b` for closed, guarded types.
    pub fn check(&mut self, a: &SessionType, b: &SessionType) -> bool {
        if a == b {
            return true;
        }
        let mut assumed = HashSet::new();
        let ok = self.go(a, b, &mut assumed);
        if ok {
            self.proven.extend(assumed);
        }
        ok
    }

    fn go(&self, a: &SessionType, b: &SessionType, assumed: &mut HashSet<(SessionType, SessionType)>) -> bool {
        if a == b {
            return true;
        }
        let key = (a.clone(), b.clone());
        if self.proven.contains(&key) || !assumed.insert(key) {
            return true;
        }
        let a = a.unfold_head();
        let b = b.unfold_head();
        match (a.kind(), b.kind()) {
            (TypeKind::End, TypeKind::End) => true,
            (TypeKind::Internal(sub), TypeKind::Internal(sup)) => {
                peers(sub) == peers(sup)
                    && sub.iter().all(|x| {
                        sup.iter()
                            .find(|y| y.peer == x.peer && y.label == x.label)
                            .is_some_and(|y| y.sort == x.sort && self.go(&x.cont, &y.cont, assumed))
                    })
            }
            (TypeKind::External(sub), TypeKind::External(sup)) => {
                peers(sub) == peers(sup)
                    && sup.iter().all(|y| {
                        sub.iter()
                            .find(|x| x.peer == y.peer && x.label == y.label)
                            .is_some_and(|x| x.sort == y.sort && self.go(&x.cont, &y.cont, assumed))
                    })
            }
            _ => false,
        }
    }

    pub fn check_pair(&mut self, a: (&QueueType, &SessionType), b: (&QueueType, &SessionType)) -> bool {
        queue_type_congruent(a.0, b.0) && self.check(a.1, b.1)
    }

    pub fn check_env(&mut self, a: &TypingEnv, b: &TypingEnv) -> bool {
        a.bindings.len() == b.bindings.len()
            && a.bindings.iter().all(|(p, x)| {
                b.bindings
                    .get(p)
                    .is_some_and(|y| self.check_pair((&x.queue, &x.ty), (&y.queue, &y.ty)))
            })
    }
}

pub fn subtype(a: &SessionType, b: &SessionType) -> Result<bool, SubtypeError> {
    check_well_formed(a)?;
    check_well_formed(b)?;
    Ok(Subtyping::new().check(a, b))
}

pub fn subtype_pair(a: (&QueueType, &SessionType), b: (&QueueType, &SessionType)) -> Result<bool, SubtypeError> {
    check_well_formed(a.1)?;
    check_well_formed(b.1)?;
    Ok(Subtyping::new().check_pair(a, b))
}

pub fn subtype_env(a: &TypingEnv, b: &TypingEnv) -> Result<bool, SubtypeError> {
    for g in [a, b] {
        for x in g.bindings.values() {
            check_well_formed(&x.ty)?;
        }
    }
    Ok(Subtyping::new().check_env(a, b))
}
