//! Asynchronous reduction of sessions and seeded simulation.
//!
//! States handled here are kept head-normal: every process has been
//! unfolded until its head is not a recursion binder, and every queue is in
//! canonical (receiver-sorted) order. Receiving therefore looks at the first
//! message addressed to the receiver in the sender's queue.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::congruence::{key_hash, session_key, sorted_queue};
use crate::syntax::*;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum TransitionLabel {
    /// `p:q!l`, p sends `l` to q.
    Send { subject: Participant, peer: Participant, label: Label },
    /// `p:q?l`, p receives `l` from q.
    Recv { subject: Participant, peer: Participant, label: Label },
    /// `p:if`, p evaluates a conditional.
    Cond { subject: Participant },
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Send,
    Recv,
    Cond,
}

impl TransitionLabel {
    pub fn subject(&self) -> &Participant {
        match self {
            TransitionLabel::Send { subject, .. }
            | TransitionLabel::Recv { subject, .. }
            | TransitionLabel::Cond { subject } => subject,
        }
    }

    pub fn kind(&self) -> ActionKind {
        match self {
            TransitionLabel::Send { .. } => ActionKind::Send,
            TransitionLabel::Recv { .. } => ActionKind::Recv,
            TransitionLabel::Cond { .. } => ActionKind::Cond,
        }
    }

    pub fn send(subject: &str, peer: &str, label: &str) -> Self {
        TransitionLabel::Send {
            subject: Participant::new(subject),
            peer: Participant::new(peer),
            label: Label::new(label),
        }
    }

    pub fn recv(subject: &str, peer: &str, label: &str) -> Self {
        TransitionLabel::Recv {
            subject: Participant::new(subject),
            peer: Participant::new(peer),
            label: Label::new(label),
        }
    }

    /// Parses the `p:q!l`, `p:q?l` and `p:if` notation.
    pub fn parse(s: &str) -> Option<Self> {
        let (subject, rest) = s.split_once(':')?;
        if rest == "if" {
            return Some(TransitionLabel::Cond {
                subject: Participant::new(subject),
            });
        }
        if let Some((peer, label)) = rest.split_once('!') {
            return Some(TransitionLabel::send(subject, peer, label));
        }
        let (peer, label) = rest.split_once('?')?;
        Some(TransitionLabel::recv(subject, peer, label))
    }
}

impl fmt::Display for TransitionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransitionLabel::Send { subject, peer, label } => write!(f, "{subject}:{peer}!{label}"),
            TransitionLabel::Recv { subject, peer, label } => write!(f, "{subject}:{peer}?{label}"),
            TransitionLabel::Cond { subject } => write!(f, "{subject}:if"),
        }
    }
}

impl Serialize for TransitionLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub label: TransitionLabel,
    pub next: Session,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Successors {
    pub steps: Vec<Step>,
    /// Participants whose head is a conditional on a non-boolean value.
    pub stuck_conditionals: Vec<Participant>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("participant {0} has a free variable in its process or queue")]
    NotClosed(Participant),
}

/// Head-normal form of a session.
pub fn normalize(n: &Session) -> Session {
    Session {
        actors: n
            .actors
            .iter()
            .map(|(name, a)| {
                (
                    name.clone(),
                    Actor {
                        process: a.process.unfold_head(),
                        queue: sorted_queue(&a.queue),
                    },
                )
            })
            .collect(),
    }
}

pub fn check_closed(n: &Session) -> Result<(), SemanticsError> {
    for (name, a) in &n.actors {
        if !a.process.is_closed() || a.queue.0.iter().any(|m| !m.payload.is_ground()) {
            return Err(SemanticsError::NotClosed(name.clone()));
        }
    }
    Ok(())
}

/// Every participant is `0` with an empty queue.
pub fn is_terminated(n: &Session) -> bool {
    n.actors
        .values()
        .all(|a| a.process.unfold_head().is_inact() && a.queue.is_empty())
}

/// Appends `m` to a canonical queue, keeping it canonical.
pub(crate) fn enqueue<T: Clone>(q: &[T], m: T, receiver: impl Fn(&T) -> &Participant) -> Vec<T> {
    let at = q.partition_point(|x| receiver(x) <= receiver(&m));
    let mut v = Vec::with_capacity(q.len() + 1);
    v.extend_from_slice(&q[..at]);
    v.push(m);
    v.extend_from_slice(&q[at..]);
    v
}

/// Successors of a head-normal, closed session. The successor states are
/// head-normal again.
pub(crate) fn successors_normal(n: &Session) -> Successors {
    let mut out = Successors::default();
    for (name, actor) in &n.actors {
        match actor.process.kind() {
            ProcKind::Internal(bs) => {
                for b in bs {
                    let mut next = n.clone();
                    let a = next.actors.get_mut(name).expect("participant present");
                    let m = Message {
                        receiver: b.peer.clone(),
                        label: b.label.clone(),
                        payload: b.payload.clone(),
                    };
                    a.queue = Queue(enqueue(&actor.queue.0, m, |m| &m.receiver));
                    a.process = b.cont.unfold_head();
                    out.steps.push(Step {
                        label: TransitionLabel::Send {
                            subject: name.clone(),
                            peer: b.peer.clone(),
                            label: b.label.clone(),
                        },
                        next,
                    });
                }
            }
            ProcKind::External(bs) => {
                let peers: BTreeSet<&Participant> = bs.iter().map(|b| &b.peer).collect();
                for q in peers {
                    let Some(sender) = n.actors.get(q) else { continue };
                    let Some(idx) = sender.queue.0.iter().position(|m| &m.receiver == name) else {
                        continue;
                    };
                    let m = &sender.queue.0[idx];
                    let Some(b) = bs.iter().find(|b| &b.peer == q && b.label == m.label) else {
                        continue;
                    };
                    let mut next = n.clone();
                    let mut rest = sender.queue.0.clone();
                    rest.remove(idx);
                    next.actors.get_mut(q).expect("sender present").queue = Queue(rest);
                    next.actors.get_mut(name).expect("participant present").process =
                        b.cont.subst_value(&b.binder, &m.payload).unfold_head();
                    out.steps.push(Step {
                        label: TransitionLabel::Recv {
                            subject: name.clone(),
                            peer: q.clone(),
                            label: b.label.clone(),
                        },
                        next,
                    });
                }
            }
            ProcKind::Cond { cond, then, els } => match cond {
                Value::Bool(v) => {
                    let mut next = n.clone();
                    let chosen = if *v { then } else { els };
                    next.actors.get_mut(name).expect("participant present").process = chosen.unfold_head();
                    out.steps.push(Step {
                        label: TransitionLabel::Cond { subject: name.clone() },
                        next,
                    });
                }
                _ => out.stuck_conditionals.push(name.clone()),
            },
            ProcKind::Inact | ProcKind::Rec { .. } | ProcKind::Var(_) => {}
        }
    }
    out
}

/// All one-step reductions of a closed session. Successor states are
/// returned in head-normal form.
pub fn successors(n: &Session) -> Result<Successors, SemanticsError> {
    check_closed(n)?;
    Ok(successors_normal(&normalize(n)))
}

/// `p[v/x]`.
pub fn apply_subst(p: &Process, binder: &Ident, v: &Value) -> Process {
    p.subst_value(binder, v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Uniform,
    Fair,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceEnd {
    Terminated,
    Deadlocked,
    StepLimit,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceStep {
    pub index: usize,
    pub label: TransitionLabel,
    /// Hash of the canonical key of the state reached by this step.
    pub state: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    pub end: TraceEnd,
    #[serde(skip)]
    pub last: Session,
}

impl Trace {
    /// One line per step: `<idx> <label> <state-hash>`.
    pub fn to_lines(&self) -> String {
        let mut s = String::new();
        for st in &self.steps {
            s.push_str(&format!("{} {} {}\n", st.index, st.label, st.state));
        }
        s
    }

    pub fn labels(&self) -> Vec<TransitionLabel> {
        self.steps.iter().map(|s| s.label.clone()).collect()
    }
}

/// Seeded random walk. The `fair` policy scans participants round-robin
/// from the one after the last mover, so a participant that stays enabled
/// moves within one full round.
pub fn simulate(n: &Session, max_steps: usize, seed: u64, policy: Policy) -> Result<Trace, SemanticsError> {
    check_closed(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cur = normalize(n);
    let names: Vec<Participant> = cur.actors.keys().cloned().collect();
    let mut turn = 0usize;
    let mut steps = Vec::new();
    loop {
        let succ = successors_normal(&cur);
        if succ.steps.is_empty() {
            let end = if is_terminated(&cur) { TraceEnd::Terminated } else { TraceEnd::Deadlocked };
            return Ok(Trace { steps, end, last: cur });
        }
        if steps.len() >= max_steps {
            return Ok(Trace {
                steps,
                end: TraceEnd::StepLimit,
                last: cur,
            });
        }
        let chosen = match policy {
            Policy::Uniform => succ.steps.choose(&mut rng).expect("non-empty").clone(),
            Policy::Fair => {
                let k = names.len();
                let (who, mine) = (0..k)
                    .map(|i| (turn + i) % k)
                    .find_map(|i| {
                        let mine: Vec<&Step> = succ.steps.iter().filter(|s| s.label.subject() == &names[i]).collect();
                        (!mine.is_empty()).then_some((i, mine))
                    })
                    .expect("some participant is enabled");
                turn = (who + 1) % k;
                mine[rng.gen_range(0..mine.len())].clone()
            }
        };
        cur = chosen.next;
        steps.push(TraceStep {
            index: steps.len(),
            label: chosen.label,
            state: key_hash(&session_key(&cur)),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const M: &str = "participant p { sum{ q?l1(x).r?l2(y), r?l2(x), r?l3(x) } }
                     participant q { 0 } queue [(p, l1(1))]
                     participant r { 0 } queue [(p, l2(2))]";

    fn labels(src: &str) -> Vec<String> {
        let s = parse_session(src).unwrap();
        successors(&s).unwrap().steps.iter().map(|s| s.label.to_string()).collect()
    }

    #[test]
    fn example_m_has_two_reductions() {
        assert_eq!(labels(M), vec!["p:q?l1", "p:r?l2"]);
    }

    #[test]
    fn example_m_prime_has_one_reduction() {
        let src = M.replace("sum{ q?l1(x).r?l2(y), r?l2(x), r?l3(x) }", "sum{ q?l1(x).r?l2(y), r?l3(x) }");
        assert_eq!(labels(&src), vec!["p:q?l1"]);
    }

    #[test]
    fn terminated_session_has_no_steps() {
        assert!(labels("participant p { 0 }").is_empty());
    }

    #[test]
    fn send_appends_to_own_queue_and_receive_substitutes() {
        let s = parse_session("participant p { q!a(1).q!b(true) } participant q { p?a(x).p?b(y).if y then r!c(x) else 0 } participant r { q?c(z) }").unwrap();
        let t = simulate(&s, 100, 7, Policy::Uniform).unwrap();
        assert_eq!(t.end, TraceEnd::Terminated);
        let ls: Vec<String> = t.labels().iter().map(|l| l.to_string()).collect();
        assert!(ls.contains(&"q:if".to_string()));
        assert_eq!(ls.last().unwrap(), "r:q?c");
    }

    #[test]
    fn label_mismatch_leaves_message_in_place() {
        let s = parse_session("participant p { q?a(x) } participant q { 0 } queue [(p, b(1))]").unwrap();
        assert!(successors(&s).unwrap().steps.is_empty());
    }

    #[test]
    fn stuck_conditional_is_diagnosed() {
        let s = parse_session("participant p { if 3 then 0 else 0 }").unwrap();
        let r = successors(&s).unwrap();
        assert!(r.steps.is_empty());
        assert_eq!(r.stuck_conditionals, vec![p("p")]);
    }

    #[test]
    fn open_sessions_are_rejected() {
        let s = parse_session("participant p { q!a(x) }").unwrap();
        assert_eq!(successors(&s), Err(SemanticsError::NotClosed(p("p"))));
    }

    #[test]
    fn substitution_examples() {
        let x = Ident::new("x");
        let five = Value::Nat(5);
        let a = parse_process("q!l(x)").unwrap();
        assert_eq!(apply_subst(&a, &x, &five), parse_process("q!l(5)").unwrap());
        let b = parse_process("q?m(x).q!l(x)").unwrap();
        assert_eq!(apply_subst(&b, &x, &five), b);
        let c = parse_process("if x then 0 else q!l(1)").unwrap();
        assert_eq!(apply_subst(&c, &x, &Value::Bool(true)), parse_process("if true then 0 else q!l(1)").unwrap());
    }

    #[test]
    fn deadlocking_branch_of_m() {
        let s = parse_session(M).unwrap();
        let mut saw = false;
        for seed in 0..32 {
            let t = simulate(&s, 100, seed, Policy::Uniform).unwrap();
            if t.steps[0].label.to_string() == "p:r?l2" {
                assert_eq!(t.end, TraceEnd::Deadlocked);
                assert!(!t.last.actors[&p("q")].queue.is_empty());
                saw = true;
            }
        }
        assert!(saw);
    }

    #[test]
    fn same_seed_same_trace() {
        let s = parse_session(M).unwrap();
        let a = simulate(&s, 10, 3, Policy::Fair).unwrap();
        let b = simulate(&s, 10, 3, Policy::Fair).unwrap();
        assert_eq!(a.to_lines(), b.to_lines());
    }

    #[test]
    fn labels_round_trip() {
        for l in ["p:q!a", "p:q?a", "p:if"] {
            assert_eq!(TransitionLabel::parse(l).unwrap().to_string(), l);
        }
    }
}
