//! Session-level property checking over the reachable session graph, and a
//! co-simulation harness relating session runs to environment runs.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::congruence::{session_key, sorted_queue};
use crate::envcheck::{self, env_successors_normal, normalize_env};
use crate::graph::{self, Expansion, Graph, LivenessSearch};
use crate::semantics::{self, check_closed, is_terminated, successors_normal, SemanticsError, TransitionLabel};
use crate::syntax::*;
use crate::typing::{Checker, SessionTypeErrors};
use crate::verdict::{Outcome, Property, Verdict, Violation};

pub type SessionGraph = Graph<Session>;

/// Explores the sessions reachable from `n`. Sends that would make an
/// output queue longer than `bound` are not taken and make the graph
/// incomplete.
pub fn explore_session(n: &Session, bound: usize, max_states: usize) -> Result<SessionGraph, SemanticsError> {
    check_closed(n)?;
    Ok(graph::explore(semantics::normalize(n), max_states.max(1), |s| {
        let mut blocked = false;
        let steps = successors_normal(s)
            .steps
            .into_iter()
            .filter(|st| {
                let over = matches!(st.label, TransitionLabel::Send { .. })
                    && st.next.actors[st.label.subject()].queue.0.len() > bound;
                blocked |= over;
                !over
            })
            .map(|st| (st.label, st.next))
            .collect();
        Expansion { steps, blocked }
    }))
}

/// A head message that the waiting receiver cannot accept, if any.
pub fn session_mismatch(n: &Session) -> Option<Violation> {
    for (p, a) in &n.actors {
        let ProcKind::External(bs) = a.process.unfold_head().kind().clone() else { continue };
        let peers: BTreeSet<&Participant> = bs.iter().map(|b| &b.peer).collect();
        for q in peers {
            let Some(sender) = n.actors.get(q) else { continue };
            let Some(m) = sorted_queue(&sender.queue).0.into_iter().find(|m| &m.receiver == p) else {
                continue;
            };
            if !bs.iter().any(|b| &b.peer == q && b.label == m.label) {
                return Some(Violation::Mismatch {
                    receiver: p.to_string(),
                    sender: q.to_string(),
                    message: m.label.to_string(),
                    supported: bs.iter().filter(|b| &b.peer == q).map(|b| b.label.to_string()).collect(),
                    state: session_key(n),
                });
            }
        }
    }
    None
}

pub fn check_session_safety(graph: &SessionGraph) -> Verdict {
    let stats = graph.stats();
    for (i, s) in graph.states.iter().enumerate() {
        if let Some(v) = session_mismatch(s) {
            return Verdict::no(Property::Safe, stats, graph.path_to(i), v);
        }
    }
    match graph.incomplete {
        Some(why) => Verdict::inconclusive(Property::Safe, stats, why),
        None => Verdict::yes(Property::Safe, stats),
    }
}

/// Deadlock freedom alone; unlike the environment check it does not
/// require safety.
pub fn check_session_deadlock(graph: &SessionGraph) -> Verdict {
    let stats = graph.stats();
    for (i, s) in graph.states.iter().enumerate() {
        if graph.is_terminal(i) && !is_terminated(s) {
            return Verdict::no(
                Property::DeadlockFree,
                stats,
                graph.path_to(i),
                Violation::Deadlock { state: session_key(s) },
            );
        }
    }
    match graph.incomplete {
        Some(why) => Verdict::inconclusive(Property::DeadlockFree, stats, why),
        None => Verdict::yes(Property::DeadlockFree, stats),
    }
}

/// Liveness obligations of a session.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum SessionObligation {
    /// `participant` is at a conditional.
    Conditional { participant: Participant },
    /// `participant` is at an internal choice.
    Sending { participant: Participant },
    /// `owner` has a queued message `label` for `receiver`.
    Queued { owner: Participant, receiver: Participant, label: Label },
    /// `participant` is at an external choice.
    Waiting { participant: Participant },
}

impl SessionObligation {
    pub fn discharged_by(&self, l: &TransitionLabel) -> bool {
        use SessionObligation::*;
        match (self, l) {
            (Conditional { participant }, TransitionLabel::Cond { subject }) => subject == participant,
            (Sending { participant }, TransitionLabel::Send { subject, .. }) => subject == participant,
            (Queued { owner, receiver, label }, TransitionLabel::Recv { subject, peer, label: m }) => {
                subject == receiver && peer == owner && m == label
            }
            (Waiting { participant }, TransitionLabel::Recv { subject, .. }) => subject == participant,
            _ => false,
        }
    }
}

impl fmt::Display for SessionObligation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use SessionObligation::*;
        match self {
            Conditional { participant } => write!(f, "the conditional of {participant} never reduces"),
            Sending { participant } => write!(f, "{participant} never fires its internal choice"),
            Queued { owner, receiver, label } => {
                write!(f, "message {label} queued by {owner} for {receiver} is never received")
            }
            Waiting { participant } => write!(f, "{participant} waits at an external choice forever"),
        }
    }
}

pub fn session_obligations(n: &Session) -> Vec<SessionObligation> {
    let mut out = Vec::new();
    for (p, a) in &n.actors {
        match a.process.unfold_head().kind() {
            ProcKind::Cond { .. } => out.push(SessionObligation::Conditional { participant: p.clone() }),
            ProcKind::Internal(_) => out.push(SessionObligation::Sending { participant: p.clone() }),
            ProcKind::External(_) => out.push(SessionObligation::Waiting { participant: p.clone() }),
            _ => {}
        }
        let mut seen = BTreeSet::new();
        for m in &sorted_queue(&a.queue).0 {
            if seen.insert(&m.receiver) {
                out.push(SessionObligation::Queued {
                    owner: p.clone(),
                    receiver: m.receiver.clone(),
                    label: m.label.clone(),
                });
            }
        }
    }
    out
}

/// Liveness over fair paths; does not require safety.
pub fn check_session_liveness(graph: &SessionGraph) -> Verdict {
    let stats = graph.stats();
    let mut keys: BTreeMap<SessionObligation, Vec<usize>> = BTreeMap::new();
    for (i, s) in graph.states.iter().enumerate() {
        for o in session_obligations(s) {
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
                state: session_key(&graph.states[l.end]),
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

pub fn check_session_property(graph: &SessionGraph, property: Property) -> Verdict {
    match property {
        Property::Safe => check_session_safety(graph),
        Property::DeadlockFree => check_session_deadlock(graph),
        Property::Live => check_session_liveness(graph),
    }
}

// ---------------------------------------------------------------------------
// Co-simulation and verdict transfer.

#[derive(Debug, thiserror::Error)]
pub enum CoSimError {
    #[error("the session is not typed by the environment:\n{0}")]
    Untyped(SessionTypeErrors),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

#[derive(Clone, Debug, Serialize)]
pub struct CoSimRecord {
    pub session: TransitionLabel,
    /// The matching environment step; `None` for conditionals.
    pub env: Option<TransitionLabel>,
    pub typed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    /// A session step with no matching environment step.
    Unmatched,
    /// The reduct is not typed by the reduced environment.
    Untyped,
    /// The environment can reduce but the session cannot follow.
    Fidelity,
}

#[derive(Clone, Debug, Serialize)]
pub struct Divergence {
    pub kind: DivergenceKind,
    pub session_trace: Vec<TransitionLabel>,
    pub env_trace: Vec<TransitionLabel>,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Implication {
    /// The environment has the property and so does the session.
    Confirmed,
    /// The environment lacks the property.
    Vacuous,
    /// The environment has the property but the session does not.
    Violated,
    /// One side was inconclusive.
    Untested,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransferRow {
    pub property: Property,
    pub env: Outcome,
    pub session: Outcome,
    pub status: Implication,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransferReport {
    pub rows: Vec<TransferRow>,
}

impl TransferReport {
    pub fn violated(&self) -> bool {
        self.rows.iter().any(|r| r.status == Implication::Violated)
    }

    pub fn render(&self) -> String {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{}: env {}, session {}, {}\n",
                    r.property,
                    r.env,
                    r.session,
                    serde_json::to_value(r.status).expect("serializes").as_str().unwrap_or_default()
                )
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CoSimReport {
    /// Every session step was matched by a typed environment step.
    pub subject_reduction: bool,
    /// Every reducible environment was followed by the session.
    pub fidelity: bool,
    /// The product exploration covered every reachable pair.
    pub complete: bool,
    pub pairs: usize,
    pub records: Vec<CoSimRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence: Option<Divergence>,
    pub transfer: TransferReport,
}

impl CoSimReport {
    pub fn ok(&self) -> bool {
        self.subject_reduction && self.fidelity && !self.transfer.violated()
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "subject reduction: {}\nfidelity: {}\ncomplete: {}\npairs: {}, steps: {}\n",
            self.subject_reduction,
            self.fidelity,
            self.complete,
            self.pairs,
            self.records.len()
        );
        if let Some(d) = &self.divergence {
            let show = |v: &[TransitionLabel]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
            s.push_str(&format!(
                "divergence ({:?}): {}\n  session: [{}]\n  env: [{}]\n",
                d.kind,
                d.detail,
                show(&d.session_trace),
                show(&d.env_trace)
            ));
        }
        s.push_str(&self.transfer.render());
        s
    }
}

type Pair = (Session, TypingEnv);

struct Product {
    index: HashMap<Pair, usize>,
    pairs: Vec<Pair>,
    /// Predecessor, session label and environment label of the first visit.
    parent: Vec<Option<(usize, TransitionLabel, Option<TransitionLabel>)>>,
}

impl Product {
    fn traces(&self, mut i: usize) -> (Vec<TransitionLabel>, Vec<TransitionLabel>) {
        let (mut s, mut e) = (Vec::new(), Vec::new());
        while let Some((from, l, el)) = &self.parent[i] {
            s.push(l.clone());
            e.extend(el.clone());
            i = *from;
        }
        s.reverse();
        e.reverse();
        (s, e)
    }
}

/// Whether the session can follow some environment step from `(n, g)`,
/// possibly after reducing conditionals.
fn follows(checker: &mut Checker, n: &Session, env_steps: &[(TransitionLabel, TypingEnv)]) -> bool {
    let mut seen = HashSet::from([n.clone()]);
    let mut work = vec![n.clone()];
    while let Some(cur) = work.pop() {
        for st in successors_normal(&cur).steps {
            if matches!(st.label, TransitionLabel::Cond { .. }) {
                if seen.insert(st.next.clone()) {
                    work.push(st.next);
                }
                continue;
            }
            if env_steps
                .iter()
                .any(|(l, g2)| *l == st.label && checker.check_session(&st.next, g2).is_ok())
            {
                return true;
            }
        }
    }
    false
}

/// Explores `(n, g)` pairs in lock step, checking subject reduction and
/// session fidelity on every reachable pair, then compares verdicts.
pub fn cosimulate(n: &Session, g: &TypingEnv, bound: usize, max_states: usize) -> Result<CoSimReport, CoSimError> {
    check_closed(n)?;
    let mut checker = Checker::new();
    checker.check_session(n, g).map_err(CoSimError::Untyped)?;
    let init = (semantics::normalize(n), normalize_env(g));
    let mut prod = Product {
        index: HashMap::from([(init.clone(), 0)]),
        pairs: vec![init],
        parent: vec![None],
    };
    let mut report = CoSimReport {
        subject_reduction: true,
        fidelity: true,
        complete: true,
        pairs: 0,
        records: Vec::new(),
        divergence: None,
        transfer: TransferReport { rows: Vec::new() },
    };
    let mut queue = VecDeque::from([0usize]);
    'outer: while let Some(i) = queue.pop_front() {
        let (sn, ge) = prod.pairs[i].clone();
        let env = env_successors_normal(&ge, bound);
        let steps = successors_normal(&sn).steps;
        if !env.steps.is_empty() && !follows(&mut checker, &sn, &env.steps) {
            let (session_trace, env_trace) = prod.traces(i);
            report.fidelity = false;
            report.divergence = Some(Divergence {
                kind: DivergenceKind::Fidelity,
                session_trace,
                env_trace,
                detail: format!("environment can reduce but the session cannot follow: {}", session_key(&sn)),
            });
            break;
        }
        for st in steps {
            let over = matches!(st.label, TransitionLabel::Send { .. })
                && st.next.actors[st.label.subject()].queue.0.len() > bound;
            if over {
                report.complete = false;
                continue;
            }
            let (env_label, g2) = if matches!(st.label, TransitionLabel::Cond { .. }) {
                (None, ge.clone())
            } else {
                match env.steps.iter().find(|(l, _)| *l == st.label) {
                    Some((l, g2)) => (Some(l.clone()), g2.clone()),
                    None => {
                        let (mut session_trace, env_trace) = prod.traces(i);
                        session_trace.push(st.label.clone());
                        report.subject_reduction = false;
                        report.divergence = Some(Divergence {
                            kind: DivergenceKind::Unmatched,
                            session_trace,
                            env_trace,
                            detail: format!("no environment step labelled {}", st.label),
                        });
                        report.records.push(CoSimRecord { session: st.label, env: None, typed: false });
                        break 'outer;
                    }
                }
            };
            let typed = checker.check_session(&st.next, &g2);
            report.records.push(CoSimRecord {
                session: st.label.clone(),
                env: env_label.clone(),
                typed: typed.is_ok(),
            });
            if let Err(e) = typed {
                let (mut session_trace, mut env_trace) = prod.traces(i);
                session_trace.push(st.label.clone());
                env_trace.extend(env_label);
                report.subject_reduction = false;
                report.divergence = Some(Divergence {
                    kind: DivergenceKind::Untyped,
                    session_trace,
                    env_trace,
                    detail: e.to_string(),
                });
                break 'outer;
            }
            let pair = (st.next, g2);
            if !prod.index.contains_key(&pair) {
                if prod.pairs.len() >= max_states {
                    report.complete = false;
                    continue;
                }
                prod.index.insert(pair.clone(), prod.pairs.len());
                prod.pairs.push(pair);
                prod.parent.push(Some((i, st.label, env_label)));
                queue.push_back(prod.pairs.len() - 1);
            }
        }
    }
    report.pairs = prod.pairs.len();
    report.transfer = transfer_rows(n, g, bound, max_states)?;
    Ok(report)
}

fn transfer_rows(n: &Session, g: &TypingEnv, bound: usize, max_states: usize) -> Result<TransferReport, SemanticsError> {
    let eg = envcheck::explore_env(g, bound, max_states);
    let sg = explore_session(n, bound, max_states)?;
    let rows = Property::ALL
        .iter()
        .map(|&p| {
            let env = envcheck::check_env_property(&eg, p).result;
            let session = check_session_property(&sg, p).result;
            let status = match (env, session) {
                (Outcome::No, _) => Implication::Vacuous,
                (Outcome::Inconclusive, _) | (_, Outcome::Inconclusive) => Implication::Untested,
                (Outcome::Yes, Outcome::Yes) => Implication::Confirmed,
                (Outcome::Yes, Outcome::No) => Implication::Violated,
            };
            TransferRow { property: p, env, session, status }
        })
        .collect();
    Ok(TransferReport { rows })
}

/// Checks that every property of `g` also holds of `n`, given `g ⊢ n`.
pub fn transfer_check(n: &Session, g: &TypingEnv, bound: usize, max_states: usize) -> Result<TransferReport, CoSimError> {
    check_closed(n)?;
    Checker::new().check_session(n, g).map_err(CoSimError::Untyped)?;
    Ok(transfer_rows(n, g, bound, max_states)?)
}
