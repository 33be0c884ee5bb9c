//! Federated-learning fixtures: centralised and decentralised one-shot
//! protocols for `n` participants and the multi-model client upgrade.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::Graph;
use crate::semantics::TransitionLabel;
use crate::syntax::conc;
use crate::syntax::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("federated-learning fixtures need at least 2 participants, got {0}")]
pub struct TooFew(pub usize);

const DATA: Value = Value::Nat(1);

fn name(i: usize) -> String {
    format!("p{i}")
}

fn others(n: usize, i: usize) -> Vec<usize> {
    (1..=n).filter(|&j| j != i).collect()
}

enum Pre {
    Send(String, &'static str),
    Recv(String, &'static str, String),
}

fn proc_prefix(pre: &Pre, cont: Process) -> Process {
    match pre {
        Pre::Send(to, l) => send(to, l, DATA, cont),
        Pre::Recv(from, l, x) => recv(from, l, x, cont),
    }
}

fn type_prefix(pre: &Pre, cont: SessionType) -> SessionType {
    match pre {
        Pre::Send(to, l) => internal(vec![out_t(to, l, Sort::Nat, cont)]),
        Pre::Recv(from, l, _) => external(vec![out_t(from, l, Sort::Nat, cont)]),
    }
}

fn conc_process(chains: &[Vec<Pre>], tail: Process) -> Process {
    let choice = |bs: Vec<(&Pre, Process)>| {
        Process::new(ProcKind::External(
            bs.into_iter()
                .map(|(p, cont)| match p {
                    Pre::Recv(from, l, x) => InBranch {
                        peer: Participant::new(from),
                        label: Label::new(*l),
                        binder: Ident::new(x),
                        cont,
                    },
                    Pre::Send(..) => unreachable!("conc chains start with an input"),
                })
                .collect(),
        ))
    };
    conc::expand(chains, &tail, &|p, t| proc_prefix(p, t), &choice)
}

fn conc_type(chains: &[Vec<Pre>], tail: SessionType) -> SessionType {
    let choice = |bs: Vec<(&Pre, SessionType)>| {
        external(
            bs.into_iter()
                .map(|(p, cont)| match p {
                    Pre::Recv(from, l, _) => out_t(from, l, Sort::Nat, cont),
                    Pre::Send(..) => unreachable!("conc chains start with an input"),
                })
                .collect(),
        )
    };
    conc::expand(chains, &tail, &|p, t| type_prefix(p, t), &choice)
}

fn seq_process(pres: &[Pre], tail: Process) -> Process {
    pres.iter().rev().fold(tail, |acc, p| proc_prefix(p, acc))
}

fn seq_type(pres: &[Pre], tail: SessionType) -> SessionType {
    pres.iter().rev().fold(tail, |acc, p| type_prefix(p, acc))
}

fn assemble(parts: Vec<(String, Process, SessionType)>) -> (Session, TypingEnv) {
    let mut s = Session::default();
    let mut g = TypingEnv::default();
    for (who, proc_, ty) in parts {
        s.actors.insert(Participant::new(&who), Actor { process: proc_, queue: Queue::empty() });
        g.bindings.insert(Participant::new(&who), Binding { queue: QueueType::empty(), ty });
    }
    (s, g)
}

/// Server `p1` sends `ld` to every client and collects `upd` in any order;
/// each client answers `ld` with `upd`.
pub fn gen_centralized(n: usize) -> Result<(Session, TypingEnv), TooFew> {
    if n < 2 {
        return Err(TooFew(n));
    }
    let clients: Vec<usize> = (2..=n).collect();
    let sends: Vec<Pre> = clients.iter().map(|&j| Pre::Send(name(j), "ld")).collect();
    let collect: Vec<Vec<Pre>> = clients
        .iter()
        .map(|&j| vec![Pre::Recv(name(j), "upd", format!("x{j}"))])
        .collect();
    let server = (
        name(1),
        seq_process(&sends, conc_process(&collect, Process::inact())),
        seq_type(&sends, conc_type(&collect, SessionType::end())),
    );
    let mut parts = vec![server];
    for &j in &clients {
        let (q, t) = client();
        parts.push((name(j), q, t));
    }
    Ok(assemble(parts))
}

fn client() -> (Process, SessionType) {
    let pres = [Pre::Recv(name(1), "ld", "x".into()), Pre::Send(name(1), "upd")];
    (seq_process(&pres, Process::inact()), seq_type(&pres, SessionType::end()))
}

/// Every participant broadcasts `ld`, answers each incoming `ld` with
/// `upd`, then collects every `upd`.
pub fn gen_decentralized(n: usize) -> Result<(Session, TypingEnv), TooFew> {
    if n < 2 {
        return Err(TooFew(n));
    }
    let parts = (1..=n)
        .map(|i| {
            let peers = others(n, i);
            let sends: Vec<Pre> = peers.iter().map(|&j| Pre::Send(name(j), "ld")).collect();
            let reply: Vec<Vec<Pre>> = peers
                .iter()
                .map(|&j| vec![Pre::Recv(name(j), "ld", format!("x{j}")), Pre::Send(name(j), "upd")])
                .collect();
            let collect: Vec<Vec<Pre>> = peers
                .iter()
                .map(|&j| vec![Pre::Recv(name(j), "upd", format!("y{j}"))])
                .collect();
            let p = seq_process(&sends, conc_process(&reply, conc_process(&collect, Process::inact())));
            let t = seq_type(&sends, conc_type(&reply, conc_type(&collect, SessionType::end())));
            (name(i), p, t)
        })
        .collect();
    Ok(assemble(parts))
}

/// The two-model client `Q′`, its type `T₂′` and the original client type `T₂`.
pub fn gen_multimodel_upgrade() -> (Process, SessionType, SessionType) {
    let server = Participant::new(name(1));
    let q = Process::new(ProcKind::External(vec![
        InBranch {
            peer: server.clone(),
            label: Label::new("ld"),
            binder: Ident::new("x"),
            cont: send(server.as_str(), "upd", DATA, Process::inact()),
        },
        InBranch {
            peer: server.clone(),
            label: Label::new("ld2"),
            binder: Ident::new("y"),
            cont: send(server.as_str(), "upd2", DATA, Process::inact()),
        },
    ]));
    let reply = |l: &str| internal(vec![out_t(server.as_str(), l, Sort::Nat, SessionType::end())]);
    let t2_prime = external(vec![
        out_t(server.as_str(), "ld", Sort::Nat, reply("upd")),
        out_t(server.as_str(), "ld2", Sort::Nat, reply("upd2")),
    ]);
    (q, t2_prime, client().1)
}

/// `FL_C(n)` with client `p2` replaced by `Q′`, plus the environment where
/// `p2` has type `T₂′`.
pub fn upgraded_centralized(n: usize) -> Result<(Session, TypingEnv), TooFew> {
    let (mut s, mut g) = gen_centralized(n)?;
    let (q, t2p, _) = gen_multimodel_upgrade();
    let p2 = Participant::new(name(2));
    s.actors.get_mut(&p2).expect("client p2").process = q;
    g.bindings.get_mut(&p2).expect("client p2").ty = t2p;
    Ok((s, g))
}

/// Minimum and maximum number of receives of each label along maximal
/// paths of an acyclic, fully explored graph; `None` if the graph has a
/// cycle.
pub fn receive_counts<S>(graph: &Graph<S>) -> Option<BTreeMap<String, (usize, usize)>> {
    let n = graph.states.len();
    let labels: Vec<String> = {
        let mut v: Vec<String> = graph
            .edges
            .iter()
            .flatten()
            .filter_map(|e| match &e.label {
                TransitionLabel::Recv { label, .. } => Some(label.to_string()),
                _ => None,
            })
            .collect();
        v.sort();
        v.dedup();
        v
    };
    // Reverse topological order by iterative DFS.
    let mut order = Vec::with_capacity(n);
    let mut state = vec![0u8; n];
    for root in 0..n {
        if state[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        state[root] = 1;
        while let Some(&mut (v, ref mut k)) = stack.last_mut() {
            if let Some(e) = graph.edges[v].get(*k) {
                *k += 1;
                match state[e.target] {
                    0 => {
                        state[e.target] = 1;
                        stack.push((e.target, 0));
                    }
                    1 => return None,
                    _ => {}
                }
            } else {
                state[v] = 2;
                order.push(v);
                stack.pop();
            }
        }
    }
    let mut out = BTreeMap::new();
    for l in labels {
        let mut lo = vec![0usize; n];
        let mut hi = vec![0usize; n];
        for &v in &order {
            if graph.edges[v].is_empty() {
                continue;
            }
            let mut a = usize::MAX;
            let mut b = 0;
            for e in &graph.edges[v] {
                let w = usize::from(matches!(&e.label, TransitionLabel::Recv { label, .. } if label.as_str() == l));
                a = a.min(lo[e.target] + w);
                b = b.max(hi[e.target] + w);
            }
            lo[v] = a;
            hi[v] = b;
        }
        out.insert(l, (lo[0], hi[0]));
    }
    Some(out)
}
