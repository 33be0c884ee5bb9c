//! Seeded generators for session types, typing environments and typable
//! sessions, used by property tests and the acceptance suite.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::syntax::*;

const LABELS: [&str; 3] = ["a", "b", "c"];

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub max_depth: usize,
    pub max_branches: usize,
    pub max_participants: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { max_depth: 4, max_branches: 2, max_participants: 3 }
    }
}

fn participants(n: usize) -> Vec<Participant> {
    ["p", "q", "r", "s"][..n].iter().map(|s| Participant::new(*s)).collect()
}

fn random_sort(rng: &mut impl Rng) -> Sort {
    if rng.gen_bool(0.7) {
        Sort::Nat
    } else {
        Sort::Bool
    }
}

/// Distinct `(peer, label)` pairs, at least one.
fn branch_heads(rng: &mut impl Rng, peers: &[Participant], max: usize) -> Vec<(Participant, Label)> {
    let k = rng.gen_range(1..=max.max(1));
    let mut out: Vec<(Participant, Label)> = Vec::new();
    for _ in 0..k {
        let h = (
            peers.choose(rng).expect("some peer").clone(),
            Label::new(*LABELS.choose(rng).expect("some label")),
        );
        if !out.contains(&h) {
            out.push(h);
        }
    }
    out
}

/// A closed, guarded local type for `me` talking to `peers`.
pub fn random_type(rng: &mut impl Rng, peers: &[Participant], cfg: &GenConfig) -> SessionType {
    let mut vars = Vec::new();
    local(rng, peers, cfg, cfg.max_depth, &mut vars, false)
}

fn local(
    rng: &mut impl Rng,
    peers: &[Participant],
    cfg: &GenConfig,
    depth: usize,
    vars: &mut Vec<Ident>,
    guarded: bool,
) -> SessionType {
    if depth == 0 || (guarded && rng.gen_bool(0.2)) {
        return match vars.choose(rng) {
            Some(v) if guarded && rng.gen_bool(0.6) => SessionType::new(TypeKind::Var(v.clone())),
            _ => SessionType::end(),
        };
    }
    if guarded && !vars.is_empty() && rng.gen_bool(0.25) {
        return SessionType::new(TypeKind::Var(vars.choose(rng).expect("non-empty").clone()));
    }
    if vars.len() < 2 && rng.gen_bool(0.3) {
        let v = Ident::new(format!("t{}", vars.len()));
        vars.push(v.clone());
        let body = local(rng, peers, cfg, depth, vars, false);
        vars.pop();
        return if body.free_vars().contains(&v) {
            SessionType::new(TypeKind::Rec { var: v, body })
        } else {
            body
        };
    }
    let bs = branch_heads(rng, peers, cfg.max_branches)
        .into_iter()
        .map(|(peer, label)| TypeBranch {
            peer,
            label,
            sort: random_sort(rng),
            cont: local(rng, peers, cfg, depth - 1, vars, true),
        })
        .collect();
    if rng.gen_bool(0.5) {
        internal(bs)
    } else {
        external(bs)
    }
}

/// Local types for each participant drawn independently; usually unsafe.
pub fn random_env(rng: &mut impl Rng, cfg: &GenConfig) -> TypingEnv {
    let n = rng.gen_range(2..=cfg.max_participants.max(2));
    let ps = participants(n);
    let mut g = TypingEnv::default();
    for p in &ps {
        let peers: Vec<Participant> = ps.iter().filter(|q| *q != p).cloned().collect();
        g.bindings.insert(
            p.clone(),
            Binding { queue: QueueType::empty(), ty: random_type(rng, &peers, cfg) },
        );
    }
    g
}

// ---------------------------------------------------------------------------
// Global protocols and their projections.

#[derive(Clone, Debug)]
enum Global {
    End,
    Var(Ident),
    Rec(Ident, Box<Global>),
    /// `from` sends one of the branches.
    Comm { from: Participant, branches: Vec<(Participant, Label, Sort, Global)> },
}

fn global(rng: &mut impl Rng, ps: &[Participant], cfg: &GenConfig, depth: usize, vars: &mut Vec<Ident>, guarded: bool) -> Global {
    if depth == 0 || rng.gen_bool(0.15) {
        return match vars.choose(rng) {
            Some(v) if guarded && rng.gen_bool(0.7) => Global::Var(v.clone()),
            _ => Global::End,
        };
    }
    if vars.len() < 2 && rng.gen_bool(0.25) {
        let v = Ident::new(format!("t{}", vars.len()));
        vars.push(v.clone());
        let body = global(rng, ps, cfg, depth, vars, false);
        vars.pop();
        return Global::Rec(v, Box::new(body));
    }
    let from = ps.choose(rng).expect("participants").clone();
    let peers: Vec<Participant> = ps.iter().filter(|q| **q != from).cloned().collect();
    let branches = branch_heads(rng, &peers, cfg.max_branches)
        .into_iter()
        .map(|(q, l)| {
            let s = random_sort(rng);
            (q, l, s, global(rng, ps, cfg, depth - 1, vars, true))
        })
        .collect();
    Global::Comm { from, branches }
}

fn project(g: &Global, r: &Participant) -> Option<SessionType> {
    match g {
        Global::End => Some(SessionType::end()),
        Global::Var(v) => Some(SessionType::new(TypeKind::Var(v.clone()))),
        Global::Rec(v, body) => {
            let b = project(body, r)?;
            if !b.free_vars().contains(v) {
                return Some(b);
            }
            if matches!(b.kind(), TypeKind::Var(x) if x == v) {
                return Some(SessionType::end());
            }
            Some(SessionType::new(TypeKind::Rec { var: v.clone(), body: b }))
        }
        Global::Comm { from, branches } => {
            let conts: Vec<SessionType> = branches.iter().map(|(_, _, _, c)| project(c, r)).collect::<Option<_>>()?;
            if from == r {
                return Some(internal(
                    branches
                        .iter()
                        .zip(conts)
                        .map(|((q, l, s, _), cont)| TypeBranch { peer: q.clone(), label: l.clone(), sort: *s, cont })
                        .collect(),
                ));
            }
            let receives = branches.iter().filter(|(q, ..)| q == r).count();
            if receives == branches.len() {
                Some(external(
                    branches
                        .iter()
                        .zip(conts)
                        .map(|((_, l, s, _), cont)| TypeBranch { peer: from.clone(), label: l.clone(), sort: *s, cont })
                        .collect(),
                ))
            } else if receives == 0 && conts.windows(2).all(|w| w[0] == w[1]) {
                Some(conts.into_iter().next().expect("at least one branch"))
            } else {
                None
            }
        }
    }
}

/// The projections of a random global protocol, when they exist and are
/// well formed.
pub fn projected_env(rng: &mut impl Rng, cfg: &GenConfig) -> Option<TypingEnv> {
    let n = rng.gen_range(2..=cfg.max_participants.max(2));
    let ps = participants(n);
    let g = global(rng, &ps, cfg, cfg.max_depth, &mut Vec::new(), false);
    let mut env = TypingEnv::default();
    for p in &ps {
        let t = project(&g, p)?;
        if crate::subtyping::check_well_formed(&t).is_err() {
            return None;
        }
        env.bindings.insert(p.clone(), Binding { queue: QueueType::empty(), ty: t });
    }
    Some(env)
}

// ---------------------------------------------------------------------------
// Subtypes and supertypes.

fn fresh_label(bs: &[TypeBranch], peer: &Participant) -> Option<Label> {
    ["a", "b", "c", "d", "e"]
        .iter()
        .map(|l| Label::new(*l))
        .find(|l| !bs.iter().any(|b| &b.peer == peer && &b.label == l))
}

/// Drops branches from `bs` at random while keeping every peer.
fn prune(rng: &mut impl Rng, bs: &[TypeBranch]) -> Vec<TypeBranch> {
    let mut keep: Vec<bool> = bs.iter().map(|_| rng.gen_bool(0.6)).collect();
    for (i, b) in bs.iter().enumerate() {
        if !bs.iter().zip(&keep).any(|(x, k)| *k && x.peer == b.peer) {
            keep[i] = true;
        }
    }
    bs.iter().zip(keep).filter(|(_, k)| *k).map(|(b, _)| b.clone()).collect()
}

fn widen(rng: &mut impl Rng, mut bs: Vec<TypeBranch>) -> Vec<TypeBranch> {
    if rng.gen_bool(0.5) {
        let peer = bs.choose(rng).expect("non-empty choice").peer.clone();
        if let Some(label) = fresh_label(&bs, &peer) {
            bs.push(TypeBranch { peer, label, sort: random_sort(rng), cont: SessionType::end() });
        }
    }
    bs
}

fn vary(rng: &mut impl Rng, t: &SessionType, down: bool) -> SessionType {
    match t.kind() {
        TypeKind::End | TypeKind::Var(_) => t.clone(),
        TypeKind::Rec { var, body } => SessionType::new(TypeKind::Rec { var: var.clone(), body: vary(rng, body, down) }),
        TypeKind::Internal(bs) | TypeKind::External(bs) => {
            let is_internal = matches!(t.kind(), TypeKind::Internal(_));
            let rec: Vec<TypeBranch> = bs
                .iter()
                .map(|b| TypeBranch { cont: vary(rng, &b.cont, down), ..b.clone() })
                .collect();
            // A subtype sends less and accepts more.
            let bs = if is_internal == down { prune(rng, &rec) } else { widen(rng, rec) };
            SessionType::new(if is_internal { TypeKind::Internal(bs) } else { TypeKind::External(bs) })
        }
    }
}

/// A random subtype of `t`.
pub fn subtype_of(rng: &mut impl Rng, t: &SessionType) -> SessionType {
    vary(rng, t, true)
}

/// A random supertype of `t`.
pub fn supertype_of(rng: &mut impl Rng, t: &SessionType) -> SessionType {
    vary(rng, t, false)
}

pub fn env_subtype_of(rng: &mut impl Rng, g: &TypingEnv) -> TypingEnv {
    TypingEnv {
        bindings: g
            .bindings
            .iter()
            .map(|(p, b)| (p.clone(), Binding { queue: b.queue.clone(), ty: subtype_of(rng, &b.ty) }))
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Processes realising a type.

struct Realiser<'r, R> {
    rng: &'r mut R,
    next: usize,
    /// Apply subsumption (pruned sends, extra inputs) and conditionals.
    vary: bool,
}

impl<R: Rng> Realiser<'_, R> {
    fn literal(&mut self, s: Sort) -> Value {
        match s {
            Sort::Nat => Value::Nat(self.rng.gen_range(0..3)),
            Sort::Bool => Value::Bool(self.rng.gen_bool(0.5)),
        }
    }

    fn payload(&mut self, s: Sort, scope: &[(Ident, Sort)]) -> Value {
        let vars: Vec<&Ident> = scope.iter().filter(|(_, t)| *t == s).map(|(x, _)| x).collect();
        match vars.choose(self.rng) {
            Some(x) if self.vary && self.rng.gen_bool(0.5) => Value::Var((*x).clone()),
            _ => self.literal(s),
        }
    }

    fn realise(&mut self, t: &SessionType, scope: &mut Vec<(Ident, Sort)>) -> Process {
        match t.kind() {
            TypeKind::End => Process::inact(),
            TypeKind::Var(v) => Process::new(ProcKind::Var(Ident::new(v.as_str().to_uppercase()))),
            TypeKind::Rec { var, body } => Process::new(ProcKind::Rec {
                var: Ident::new(var.as_str().to_uppercase()),
                body: self.realise(body, scope),
            }),
            TypeKind::Internal(_) | TypeKind::External(_) => {
                let guard = scope.iter().filter(|(_, s)| *s == Sort::Bool).map(|(x, _)| x.clone()).collect::<Vec<_>>();
                if self.vary && self.rng.gen_bool(0.15) {
                    let cond = match guard.choose(self.rng) {
                        Some(x) => Value::Var(x.clone()),
                        None => self.literal(Sort::Bool),
                    };
                    let then = self.choice(t, scope);
                    let els = self.choice(t, scope);
                    return Process::new(ProcKind::Cond { cond, then, els });
                }
                self.choice(t, scope)
            }
        }
    }

    fn choice(&mut self, t: &SessionType, scope: &mut Vec<(Ident, Sort)>) -> Process {
        match t.kind() {
            TypeKind::Internal(bs) => {
                let bs = if self.vary { prune(self.rng, bs) } else { bs.clone() };
                let out = bs
                    .iter()
                    .map(|b| OutBranch {
                        peer: b.peer.clone(),
                        label: b.label.clone(),
                        payload: self.payload(b.sort, scope),
                        cont: self.realise(&b.cont, scope),
                    })
                    .collect();
                Process::new(ProcKind::Internal(out))
            }
            TypeKind::External(bs) => {
                let mut out = Vec::new();
                for b in bs {
                    self.next += 1;
                    let x = Ident::new(format!("x{}", self.next));
                    scope.push((x.clone(), b.sort));
                    let cont = self.realise(&b.cont, scope);
                    scope.pop();
                    out.push(InBranch { peer: b.peer.clone(), label: b.label.clone(), binder: x, cont });
                }
                if self.vary && self.rng.gen_bool(0.3) {
                    let peer = bs.choose(self.rng).expect("non-empty").peer.clone();
                    if let Some(label) = fresh_label(bs, &peer) {
                        self.next += 1;
                        out.push(InBranch {
                            peer,
                            label,
                            binder: Ident::new(format!("x{}", self.next)),
                            cont: Process::inact(),
                        });
                    }
                }
                Process::new(ProcKind::External(out))
            }
            _ => unreachable!("choice on a non-choice type"),
        }
    }
}

/// A closed process of type `t`. With `vary`, the process may send fewer
/// branches, accept extra ones, branch on conditionals and forward
/// received values.
pub fn realise(rng: &mut impl Rng, t: &SessionType, vary: bool) -> Process {
    Realiser { rng, next: 0, vary }.realise(t, &mut Vec::new())
}

/// A session typed by `g`, one realising process per binding.
pub fn realise_env(rng: &mut impl Rng, g: &TypingEnv, vary: bool) -> Session {
    Session {
        actors: g
            .bindings
            .iter()
            .map(|(p, b)| (p.clone(), Actor { process: realise(rng, &b.ty, vary), queue: Queue::empty() }))
            .collect(),
    }
}

/// A random environment, from a projected protocol or drawn
/// independently, together with a session it types.
pub fn typable_pair(rng: &mut impl Rng, cfg: &GenConfig) -> (Session, TypingEnv) {
    let g = loop {
        if rng.gen_bool(0.7) {
            if let Some(g) = projected_env(rng, cfg) {
                break g;
            }
        } else {
            break random_env(rng, cfg);
        }
    };
    let vary = rng.gen_bool(0.8);
    (realise_env(rng, &g, vary), g)
}
