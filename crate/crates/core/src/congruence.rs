//! Canonical forms for the structural congruences on queues, sessions,
//! queue types and typing environments.
//!
//! Queue congruence only reorders adjacent messages with different
//! receivers, so two queues are congruent exactly when their per-receiver
//! projections agree. A canonical queue is therefore the stable sort of the
//! queue by receiver. Recursion unfolding is not part of this equality;
//! consumers unfold at the head when they need to.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::syntax::printer;
use crate::syntax::*;

/// Per-receiver FIFO view of a queue.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct CanonicalQueue {
    pub lanes: BTreeMap<Participant, Vec<(Label, Value)>>,
}

impl CanonicalQueue {
    pub fn to_queue(&self) -> Queue {
        Queue(
            self.lanes
                .iter()
                .flat_map(|(r, ms)| {
                    ms.iter().map(move |(l, v)| Message {
                        receiver: r.clone(),
                        label: l.clone(),
                        payload: v.clone(),
                    })
                })
                .collect(),
        )
    }
}

pub fn canon_queue(h: &Queue) -> CanonicalQueue {
    let mut lanes: BTreeMap<Participant, Vec<(Label, Value)>> = BTreeMap::new();
    for m in &h.0 {
        lanes.entry(m.receiver.clone()).or_default().push((m.label.clone(), m.payload.clone()));
    }
    CanonicalQueue { lanes }
}

/// The queue reordered into its canonical representative (stable sort by
/// receiver).
pub fn sorted_queue(h: &Queue) -> Queue {
    let mut v = h.0.clone();
    v.sort_by(|a, b| a.receiver.cmp(&b.receiver));
    Queue(v)
}

pub fn sorted_queue_type(h: &QueueType) -> QueueType {
    let mut v = h.0.clone();
    v.sort_by(|a, b| a.receiver.cmp(&b.receiver));
    QueueType(v)
}

pub fn queue_congruent(a: &Queue, b: &Queue) -> bool {
    a.0.len() == b.0.len() && sorted_queue(a) == sorted_queue(b)
}

pub fn queue_type_congruent(a: &QueueType, b: &QueueType) -> bool {
    a.0.len() == b.0.len() && sorted_queue_type(a) == sorted_queue_type(b)
}

/// Canonical session: sorted queues, terminated participants (`0` with an
/// empty queue) removed.
pub fn canon_session(n: &Session) -> Session {
    Session {
        actors: n
            .actors
            .iter()
            .filter(|(_, a)| !(a.process.is_inact() && a.queue.is_empty()))
            .map(|(name, a)| {
                (
                    name.clone(),
                    Actor {
                        process: a.process.clone(),
                        queue: sorted_queue(&a.queue),
                    },
                )
            })
            .collect(),
    }
}

/// Canonical environment: sorted queue types, `(∅, end)` entries removed.
pub fn canon_env(g: &TypingEnv) -> TypingEnv {
    TypingEnv {
        bindings: g
            .bindings
            .iter()
            .filter(|(_, b)| !(b.ty.is_end() && b.queue.is_empty()))
            .map(|(name, b)| {
                (
                    name.clone(),
                    Binding {
                        queue: sorted_queue_type(&b.queue),
                        ty: b.ty.clone(),
                    },
                )
            })
            .collect(),
    }
}

pub fn session_congruent(a: &Session, b: &Session) -> bool {
    canon_session(a) == canon_session(b)
}

pub fn env_congruent(a: &TypingEnv, b: &TypingEnv) -> bool {
    canon_env(a) == canon_env(b)
}

/// Stable textual key of a session's congruence class.
pub fn session_key(n: &Session) -> String {
    printer::session_compact(&canon_session(n))
}

pub fn env_key(g: &TypingEnv) -> String {
    printer::env_compact(&canon_env(g))
}

/// First 16 hex digits of the SHA-256 of a canonical key.
pub fn key_hash(key: &str) -> String {
    let digest = Sha256::digest(key.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn unfold_process(p: &Process) -> Process {
    p.unfold_once()
}

pub fn unfold_type(t: &SessionType) -> SessionType {
    t.unfold_once()
}
