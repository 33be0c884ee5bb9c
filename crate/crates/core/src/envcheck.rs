//! Reduction of typing environments and model checking of safety,
//! deadlock freedom and liveness over the reachable environment graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::congruence::{env_key, sorted_queue_type};
use crate::graph::{self, Expansion, Graph, LivenessSearch};
use crate::semantics::{enqueue, TransitionLabel};
use crate::syntax::*;
use crate::verdict::{Outcome, Property, Verdict, Violation};

pub const DEFAULT_BOUND: usize = 16;

pub type EnvGraph = Graph<TypingEnv>;

/// Head-normal environment: types unfolded at the head, queues canonical.
pub fn normalize_env(g: &TypingEnv) -> TypingEnv {
    TypingEnv {
        bindings: g
            .bindings
            .iter()
            .map(|(p, b)| {
                (
                    p.clone(),
                    Binding {
                        queue: sorted_queue_type(&b.queue),
                        ty: b.ty.unfold_head(),
                    },
                )
            })
            .collect(),
    }
}

/// Every binding is `(∅, end)` up to unfolding.
pub fn is_env_terminated(g: &TypingEnv) -> bool {
    g.bindings.values().all(|b| b.queue.is_empty() && b.ty.unfold_head().is_end())
}

#[derive(Clone, Debug, Default)]
pub struct EnvSuccessors {
    pub steps: Vec<(TransitionLabel, TypingEnv)>,
    /// Sends that were not taken because the sender's queue is full.
    pub bound_exceeded: Vec<TransitionLabel>,
}

pub(crate) fn env_successors_normal(g: &TypingEnv, bound: usize) -> EnvSuccessors {
    let mut out = EnvSuccessors::default();
    for (p, b) in &g.bindings {
        match b.ty.kind() {
            TypeKind::Internal(bs) => {
                for br in bs {
                    let label = TransitionLabel::Send {
                        subject: p.clone(),
                        peer: br.peer.clone(),
                        label: br.label.clone(),
                    };
                    if b.queue.0.len() >= bound {
                        out.bound_exceeded.push(label);
                        continue;
                    }
                    let m = MessageType {
                        receiver: br.peer.clone(),
                        label: br.label.clone(),
                        sort: br.sort,
                    };
                    let mut next = g.clone();
                    let nb = next.bindings.get_mut(p).expect("binding present");
                    nb.queue = QueueType(enqueue(&b.queue.0, m, |m| &m.receiver));
                    nb.ty = br.cont.unfold_head();
                    out.steps.push((label, next));
                }
            }
            TypeKind::External(bs) => {
                let peers: BTreeSet<&Participant> = bs.iter().map(|x| &x.peer).collect();
                for q in peers {
                    let Some(sender) = g.bindings.get(q) else { continue };
                    let Some(idx) = sender.queue.0.iter().position(|m| &m.receiver == p) else {
                        continue;
                    };
                    let m = &sender.queue.0[idx];
                    let Some(br) = bs.iter().find(|x| &x.peer == q && x.label == m.label && x.sort == m.sort) else {
                        continue;
                    };
                    let mut next = g.clone();
                    let mut rest = sender.queue.0.clone();
                    rest.remove(idx);
                    next.bindings.get_mut(q).expect("sender present").queue = QueueType(rest);
                    next.bindings.get_mut(p).expect("binding present").ty = br.cont.unfold_head();
                    out.steps.push((
                        TransitionLabel::Recv {
                            subject: p.clone(),
                            peer: q.clone(),
                            label: br.label.clone(),
                        },
                        next,
                    ));
                }
            }
            TypeKind::End | TypeKind::Rec { .. } | TypeKind::Var(_) => {}
        }
    }
    out
}

/// One-step reductions of `g`; sends that would make a queue longer than
/// `bound` are reported instead of taken.
pub fn env_successors(g: &TypingEnv, bound: usize) -> EnvSuccessors {
    env_successors_normal(&normalize_env(g), bound)
}

pub fn explore_env(g: &TypingEnv, bound: usize, max_states: usize) -> EnvGraph {
    graph::explore(normalize_env(g), max_states.max(1), |s| {
        let r = env_successors_normal(s, bound);
        Expansion {
            blocked: !r.bound_exceeded.is_empty(),
            steps: r.steps,
        }
    })
}

/// A label or sort mismatch in a single environment, if any.
pub fn env_mismatch(g: &TypingEnv) -> Option<Violation> {
    for (p, b) in &g.bindings {
        let TypeKind::External(bs) = b.ty.unfold_head().kind().clone() else { continue };
        let peers: BTreeSet<&Participant> = bs.iter().map(|x| &x.peer).collect();
        for q in peers {
            let Some(sender) = g.bindings.get(q) else { continue };
            let Some(m) = sorted_queue_type(&sender.queue).0.into_iter().find(|m| &m.receiver == p) else {
                continue;
            };
            if !bs.iter().any(|x| &x.peer == q && x.label == m.label && x.sort == m.sort) {
                return Some(Violation::Mismatch {
                    receiver: p.to_string(),
                    sender: q.to_string(),
                    message: format!("{}({})", m.label, m.sort),
                    supported: bs
                        .iter()
                        .filter(|x| &x.peer == q)
                        .map(|x| format!("{}({})", x.label, x.sort))
                        .collect(),
                    state: env_key(g),
                });
            }
        }
    }
    None
}

pub fn check_env_safety(graph: &EnvGraph) -> Verdict {
    let stats = graph.stats();
    for (i, s) in graph.states.iter().enumerate() {
        if let Some(v) = env_mismatch(s) {
            return Verdict::no(Property::Safe, stats, graph.path_to(i), v);
        }
    }
    match graph.incomplete {
        Some(why) => Verdict::inconclusive(Property::Safe, stats, why),
        None => Verdict::yes(Property::Safe, stats),
    }
}

pub fn check_env_deadlock(graph: &EnvGraph) -> Verdict {
    let safety = check_env_safety(graph);
    if safety.result == Outcome::No {
        return safety.relabel(Property::DeadlockFree);
    }
    let stats = graph.stats();
    for (i, s) in graph.states.iter().enumerate() {
        if graph.is_terminal(i) && !is_env_terminated(s) {
            return Verdict::no(Property::DeadlockFree, stats, graph.path_to(i), Violation::Deadlock { state: env_key(s) });
        }
    }
    match graph.incomplete {
        Some(why) => Verdict::inconclusive(Property::DeadlockFree, stats, why),
        None => Verdict::yes(Property::DeadlockFree, stats),
    }
}

/// Liveness obligations of a typing environment.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EnvObligation {
    /// `owner` has a queued message `label` for `receiver`.
    Queued { owner: Participant, receiver: Participant, label: Label },
    /// `participant` is at an external choice.
    Waiting { participant: Participant },
}

impl EnvObligation {
    pub fn discharged_by(&self, l: &TransitionLabel) -> bool {
        match (self, l) {
            (EnvObligation::Queued { owner, receiver, label }, TransitionLabel::Recv { subject, peer, label: m }) => {
                subject == receiver && peer == owner && m == label
            }
            (EnvObligation::Waiting { participant }, TransitionLabel::Recv { subject, .. }) => subject == participant,
            _ => false,
        }
    }
}

impl fmt::Display for EnvObligation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvObligation::Queued { owner, receiver, label } => {
                write!(f, "message {label} queued by {owner} for {receiver} is never received")
            }
            EnvObligation::Waiting { participant } => write!(f, "{participant} waits at an external choice forever"),
        }
    }
}

pub fn env_obligations(g: &TypingEnv) -> Vec<EnvObligation> {
    let mut out = Vec::new();
    for (p, b) in &g.bindings {
        let mut seen = BTreeSet::new();
        for m in &sorted_queue_type(&b.queue).0 {
            if seen.insert(&m.receiver) {
                out.push(EnvObligation::Queued {
                    owner: p.clone(),
                    receiver: m.receiver.clone(),
                    label: m.label.clone(),
                });
            }
        }
        if matches!(b.ty.unfold_head().kind(), TypeKind::External(_)) {
            out.push(EnvObligation::Waiting { participant: p.clone() });
        }
    }
    out
}

pub fn check_env_liveness(graph: &EnvGraph) -> Verdict {
    let safety = check_env_safety(graph);
    if safety.result == Outcome::No {
        return safety.relabel(Property::Live);
    }
    let stats = graph.stats();
    let mut keys: BTreeMap<EnvObligation, Vec<usize>> = BTreeMap::new();
    for (i, s) in graph.states.iter().enumerate() {
        for o in env_obligations(s) {
            keys.entry(o).or_default().push(i);
        }
    }
    let search = LivenessSearch::new(graph);
    if let Some(l) = search.find(keys.into_iter().collect(), |k, label| k.discharged_by(label)) {
        let mut v = Verdict::no(
            Property::Live,
            stats,
            l.prefix,
            Violation::Obligation {
                obligation: l.key.to_string(),
                state: env_key(&graph.states[l.end]),
            },
        );
        v.cycle = l.cycle;
        return v;
    }
    match graph.incomplete {
        Some(why) => Verdict::inconclusive(Property::Live, stats, why),
        None => Verdict::yes(Property::Live, stats),
    }
}

pub fn check_env_property(graph: &EnvGraph, property: Property) -> Verdict {
    match property {
        Property::Safe => check_env_safety(graph),
        Property::DeadlockFree => check_env_deadlock(graph),
        Property::Live => check_env_liveness(graph),
    }
}

/// Explores `g` and checks one property.
pub fn check_env(g: &TypingEnv, property: Property, bound: usize, max_states: usize) -> Verdict {
    check_env_property(&explore_env(g, bound, max_states), property)
}
