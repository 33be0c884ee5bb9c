//! Explicit-state exploration and the fair-path liveness search shared by
//! the environment and session checkers.
//!
//! Liveness obligations are grouped into keys, each with a set of
//! discharging transitions. A key is violated when, from a state holding
//! it, the graph without its discharging edges reaches either a terminal
//! state or a fair loop. Fair loops are found by Streett refinement of the
//! strongly connected components: a fairness pair is a participant and an
//! action kind, it is enabled at a state if the state has an outgoing edge
//! of that participant and kind, and a component is fair when every pair
//! enabled somewhere in it is also fired by one of its internal edges.
//! Components that are not fair lose the states enabling an unfired pair
//! and are split again.
//!
//! Enabledness in these calculi persists until the participant itself acts,
//! so fairness of a lasso depends only on its loop, and every finite
//! maximal path is fair.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::hash::Hash;

use serde::Serialize;

use crate::semantics::{ActionKind, TransitionLabel};
use crate::syntax::Participant;

#[derive(Clone, Debug)]
pub struct Edge {
    pub label: TransitionLabel,
    pub target: usize,
}

/// Result of expanding one state.
pub struct Expansion<S> {
    pub steps: Vec<(TransitionLabel, S)>,
    /// Some transition was suppressed because it exceeded a bound, so the
    /// state's successor set is incomplete.
    pub blocked: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Incomplete {
    /// The state cap was reached before the frontier was exhausted.
    StateCap,
    /// Some send would have exceeded the queue bound.
    QueueBound,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub states: usize,
    pub edges: usize,
}

/// Reachable state graph. State 0 is the initial state and states are
/// numbered in breadth-first order.
pub struct Graph<S> {
    pub states: Vec<S>,
    pub edges: Vec<Vec<Edge>>,
    /// Breadth-first tree: the predecessor and the label used to reach it.
    pub parent: Vec<Option<(usize, TransitionLabel)>>,
    /// False for states whose successors are unknown or incomplete.
    pub expanded: Vec<bool>,
    pub incomplete: Option<Incomplete>,
}

impl<S> Graph<S> {
    pub fn is_complete(&self) -> bool {
        self.incomplete.is_none()
    }

    pub fn is_terminal(&self, i: usize) -> bool {
        self.expanded[i] && self.edges[i].is_empty()
    }

    pub fn stats(&self) -> Stats {
        Stats {
            states: self.states.len(),
            edges: self.edges.iter().map(Vec::len).sum(),
        }
    }

    /// Labels along the breadth-first tree from the initial state to `i`.
    pub fn path_to(&self, mut i: usize) -> Vec<TransitionLabel> {
        let mut out = Vec::new();
        while let Some((from, l)) = &self.parent[i] {
            out.push(l.clone());
            i = *from;
        }
        out.reverse();
        out
    }
}

/// Breadth-first exploration from `init`, stopping at `max_states`.
pub fn explore<S, F>(init: S, max_states: usize, mut successors: F) -> Graph<S>
where
    S: Clone + Eq + Hash,
    F: FnMut(&S) -> Expansion<S>,
{
    let mut index: HashMap<S, usize> = HashMap::new();
    index.insert(init.clone(), 0);
    let mut g = Graph {
        states: vec![init],
        edges: vec![Vec::new()],
        parent: vec![None],
        expanded: vec![false],
        incomplete: None,
    };
    let mut next = 0usize;
    while next < g.states.len() {
        let i = next;
        next += 1;
        let exp = successors(&g.states[i]);
        let mut edges = Vec::with_capacity(exp.steps.len());
        let mut capped = false;
        for (label, s) in exp.steps {
            let target = match index.get(&s) {
                Some(&t) => t,
                None => {
                    if g.states.len() >= max_states {
                        capped = true;
                        break;
                    }
                    let t = g.states.len();
                    index.insert(s.clone(), t);
                    g.states.push(s);
                    g.edges.push(Vec::new());
                    g.parent.push(Some((i, label.clone())));
                    g.expanded.push(false);
                    t
                }
            };
            edges.push(Edge { label, target });
        }
        if capped {
            g.incomplete = Some(Incomplete::StateCap);
            break;
        }
        g.edges[i] = edges;
        if exp.blocked {
            g.incomplete.get_or_insert(Incomplete::QueueBound);
        } else {
            g.expanded[i] = true;
        }
    }
    g
}

/// A liveness counterexample: `prefix` leads from the initial state either
/// to a terminal state (`cycle` is `None`) or into a fair loop that is then
/// repeated forever.
#[derive(Clone, Debug)]
pub struct Lasso<K> {
    pub key: K,
    /// State holding the obligation.
    pub holder: usize,
    pub prefix: Vec<TransitionLabel>,
    pub cycle: Option<Vec<TransitionLabel>>,
    /// Last state of the prefix.
    pub end: usize,
}

struct Pairs {
    ids: HashMap<(Participant, ActionKind), u32>,
    /// Fairness pair of every edge, parallel to `Graph::edges`.
    edge_pair: Vec<Vec<u32>>,
    /// Pairs enabled at each state.
    enabled: Vec<Vec<u32>>,
    count: usize,
}

fn fairness_pairs<S>(g: &Graph<S>) -> Pairs {
    let mut ids: HashMap<(Participant, ActionKind), u32> = HashMap::new();
    let mut edge_pair = Vec::with_capacity(g.states.len());
    let mut enabled = Vec::with_capacity(g.states.len());
    for es in &g.edges {
        let mut row = Vec::with_capacity(es.len());
        for e in es {
            let key = (e.label.subject().clone(), e.label.kind());
            let n = ids.len() as u32;
            row.push(*ids.entry(key).or_insert(n));
        }
        let mut en = row.clone();
        en.sort_unstable();
        en.dedup();
        edge_pair.push(row);
        enabled.push(en);
    }
    Pairs {
        count: ids.len(),
        ids,
        edge_pair,
        enabled,
    }
}

impl Pairs {
    fn id(&self, l: &TransitionLabel) -> u32 {
        self.ids[&(l.subject().clone(), l.kind())]
    }
}

/// Iterative Tarjan over the states marked with `stamp` in `member`,
/// following only edges accepted by `allowed`.
struct Scc {
    index: Vec<u32>,
    low: Vec<u32>,
    on_stack: Vec<bool>,
}

const UNSEEN: u32 = u32::MAX;

impl Scc {
    fn new(n: usize) -> Self {
        Scc {
            index: vec![UNSEEN; n],
            low: vec![0; n],
            on_stack: vec![false; n],
        }
    }

    fn components<S>(
        &mut self,
        g: &Graph<S>,
        nodes: &[usize],
        member: &[u32],
        stamp: u32,
        allowed: &dyn Fn(usize, usize) -> bool,
    ) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut counter = 0u32;
        let mut stack: Vec<usize> = Vec::new();
        let mut call: Vec<(usize, usize)> = Vec::new();
        for &root in nodes {
            if self.index[root] != UNSEEN {
                continue;
            }
            call.push((root, 0));
            self.index[root] = counter;
            self.low[root] = counter;
            counter += 1;
            stack.push(root);
            self.on_stack[root] = true;
            while let Some(&(v, start)) = call.last() {
                let es = &g.edges[v];
                let mut k = start;
                let mut descend = None;
                while k < es.len() {
                    let w = es[k].target;
                    k += 1;
                    if member[w] != stamp || !allowed(v, k - 1) {
                        continue;
                    }
                    if self.index[w] == UNSEEN {
                        descend = Some(w);
                        break;
                    } else if self.on_stack[w] {
                        self.low[v] = self.low[v].min(self.index[w]);
                    }
                }
                call.last_mut().expect("frame").1 = k;
                if let Some(w) = descend {
                    self.index[w] = counter;
                    self.low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    self.on_stack[w] = true;
                    call.push((w, 0));
                    continue;
                }
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    self.low[u] = self.low[u].min(self.low[v]);
                }
                if self.low[v] == self.index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        self.on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    out.push(comp);
                }
            }
        }
        for &v in nodes {
            self.index[v] = UNSEEN;
        }
        out
    }
}

/// Liveness search over a fully or partially explored graph.
pub struct LivenessSearch<'g, S> {
    g: &'g Graph<S>,
    pairs: Pairs,
    rev: Vec<Vec<(usize, usize)>>,
}

impl<'g, S> LivenessSearch<'g, S> {
    pub fn new(g: &'g Graph<S>) -> Self {
        let mut rev = vec![Vec::new(); g.states.len()];
        for (v, es) in g.edges.iter().enumerate() {
            for (k, e) in es.iter().enumerate() {
                rev[e.target].push((v, k));
            }
        }
        LivenessSearch {
            g,
            pairs: fairness_pairs(g),
            rev,
        }
    }

    /// Finds the first violated key. `holders` lists, for each key in the
    /// order to try, the states holding it; `discharges` tells whether an
    /// edge label discharges the key.
    pub fn find<K: Clone>(
        &self,
        keys: Vec<(K, Vec<usize>)>,
        discharges: impl Fn(&K, &TransitionLabel) -> bool,
    ) -> Option<Lasso<K>> {
        let n = self.g.states.len();
        let mut member = vec![0u32; n];
        let mut stamp = 0u32;
        let mut scc = Scc::new(n);
        let mut cmark = vec![0u32; n];
        let mut cstamp = 0u32;
        for (key, holders) in keys {
            if holders.is_empty() {
                continue;
            }
            let allowed_vec: Vec<Vec<bool>> = self
                .g
                .edges
                .iter()
                .map(|es| es.iter().map(|e| !discharges(&key, &e.label)).collect())
                .collect();
            let allowed = |v: usize, k: usize| allowed_vec[v][k];

            // States reachable from some holder without discharging.
            stamp += 1;
            let region_stamp = stamp;
            let mut region = Vec::new();
            let mut queue: VecDeque<usize> = VecDeque::new();
            for &h in &holders {
                if member[h] != region_stamp {
                    member[h] = region_stamp;
                    region.push(h);
                    queue.push_back(h);
                }
            }
            while let Some(v) = queue.pop_front() {
                for (k, e) in self.g.edges[v].iter().enumerate() {
                    if allowed(v, k) && member[e.target] != region_stamp {
                        member[e.target] = region_stamp;
                        region.push(e.target);
                        queue.push_back(e.target);
                    }
                }
            }

            // Bad targets: terminal states and fair loops.
            let mut bad = vec![false; n];
            let mut fair_of: HashMap<usize, usize> = HashMap::new();
            let mut fair_sets: Vec<Vec<usize>> = Vec::new();
            for &v in &region {
                if self.g.is_terminal(v) {
                    bad[v] = true;
                }
            }
            let expanded: Vec<usize> = region.iter().copied().filter(|&v| self.g.expanded[v]).collect();
            let mut work = vec![expanded];
            while let Some(set) = work.pop() {
                stamp += 1;
                let s = stamp;
                for &v in &set {
                    member[v] = s;
                }
                let comps = scc.components(self.g, &set, &member, s, &allowed);
                for comp in comps {
                    cstamp += 1;
                    for &v in &comp {
                        cmark[v] = cstamp;
                    }
                    let internal = |v: usize, k: usize| allowed(v, k) && cmark[self.g.edges[v][k].target] == cstamp;
                    let nontrivial = comp.len() > 1 || (0..self.g.edges[comp[0]].len()).any(|k| internal(comp[0], k));
                    if !nontrivial {
                        continue;
                    }
                    let mut en = vec![false; self.pairs.count];
                    let mut fired = vec![false; self.pairs.count];
                    for &v in &comp {
                        for &p in &self.pairs.enabled[v] {
                            en[p as usize] = true;
                        }
                        for k in 0..self.g.edges[v].len() {
                            if internal(v, k) {
                                fired[self.pairs.edge_pair[v][k] as usize] = true;
                            }
                        }
                    }
                    let unfair: Vec<usize> = (0..self.pairs.count).filter(|&p| en[p] && !fired[p]).collect();
                    if unfair.is_empty() {
                        let id = fair_sets.len();
                        for &v in &comp {
                            bad[v] = true;
                            fair_of.insert(v, id);
                        }
                        fair_sets.push(comp);
                    } else {
                        let rest: Vec<usize> = comp
                            .iter()
                            .copied()
                            .filter(|&v| !self.pairs.enabled[v].iter().any(|p| unfair.contains(&(*p as usize))))
                            .collect();
                        if !rest.is_empty() {
                            work.push(rest);
                        }
                    }
                }
                // Restore the region marking for the next pass.
                for &v in &set {
                    member[v] = region_stamp;
                }
            }

            // Backward closure of the bad states inside the region.
            let mut reach = vec![false; n];
            let mut queue: VecDeque<usize> = VecDeque::new();
            for &v in &region {
                if bad[v] {
                    reach[v] = true;
                    queue.push_back(v);
                }
            }
            while let Some(v) = queue.pop_front() {
                for &(u, k) in &self.rev[v] {
                    if !reach[u] && member[u] == region_stamp && allowed(u, k) {
                        reach[u] = true;
                        queue.push_back(u);
                    }
                }
            }
            let Some(&holder) = holders.iter().filter(|&&h| reach[h]).min() else {
                continue;
            };

            // Witness: tree path to the holder, then a shortest non-discharging
            // path to the nearest bad state.
            let mut prefix = self.g.path_to(holder);
            let (end, tail) = self.shortest(holder, |v| bad[v], allowed);
            prefix.extend(tail);
            let cycle = fair_of.get(&end).map(|&id| self.fair_cycle(end, &fair_sets[id], &allowed));
            return Some(Lasso {
                key,
                holder,
                prefix,
                cycle,
                end,
            });
        }
        None
    }

    /// Breadth-first path from `from` to the first state satisfying `goal`.
    fn shortest(
        &self,
        from: usize,
        goal: impl Fn(usize) -> bool,
        allowed: impl Fn(usize, usize) -> bool,
    ) -> (usize, Vec<TransitionLabel>) {
        let mut prev: HashMap<usize, (usize, usize)> = HashMap::new();
        let mut queue = VecDeque::from([from]);
        let mut seen = std::collections::HashSet::from([from]);
        while let Some(v) = queue.pop_front() {
            if goal(v) {
                let mut labels = Vec::new();
                let mut cur = v;
                while let Some(&(u, k)) = prev.get(&cur) {
                    labels.push(self.g.edges[u][k].label.clone());
                    cur = u;
                }
                labels.reverse();
                return (v, labels);
            }
            for (k, e) in self.g.edges[v].iter().enumerate() {
                if allowed(v, k) && seen.insert(e.target) {
                    prev.insert(e.target, (v, k));
                    queue.push_back(e.target);
                }
            }
        }
        unreachable!("goal was shown reachable")
    }

    /// A cycle through `start` inside the fair component `comp` that fires
    /// every fairness pair enabled in the component.
    fn fair_cycle(&self, start: usize, comp: &[usize], allowed: &dyn Fn(usize, usize) -> bool) -> Vec<TransitionLabel> {
        let set: BTreeSet<usize> = comp.iter().copied().collect();
        let internal = |v: usize, k: usize| allowed(v, k) && set.contains(&self.g.edges[v][k].target);
        let mut required: BTreeSet<u32> = BTreeSet::new();
        for &v in comp {
            required.extend(self.pairs.enabled[v].iter().copied());
        }
        let mut fired: BTreeSet<u32> = BTreeSet::new();
        let mut cur = start;
        let mut cycle = Vec::new();
        for p in required {
            if fired.contains(&p) {
                continue;
            }
            // Shortest internal path ending with an edge of pair `p`.
            let (mid, mut labels) = self.shortest(
                cur,
                |v| (0..self.g.edges[v].len()).any(|k| internal(v, k) && self.pairs.edge_pair[v][k] == p),
                internal,
            );
            let k = (0..self.g.edges[mid].len())
                .find(|&k| internal(mid, k) && self.pairs.edge_pair[mid][k] == p)
                .expect("pair fired in component");
            labels.push(self.g.edges[mid][k].label.clone());
            fired.extend(labels.iter().map(|l| self.pairs.id(l)));
            cycle.extend(labels);
            cur = self.g.edges[mid][k].target;
        }
        if cycle.is_empty() {
            let k = (0..self.g.edges[cur].len()).find(|&k| internal(cur, k)).expect("nontrivial component");
            cycle.push(self.g.edges[cur][k].label.clone());
            cur = self.g.edges[cur][k].target;
        }
        if cur != start {
            let (_, back) = self.shortest(cur, |v| v == start, internal);
            cycle.extend(back);
        }
        cycle
    }
}
