//! Expansion of the `conc{c1, ..., ck}.tail` macro into the external choice
//! over every interleaving of the input-headed chains.

use std::collections::HashMap;

/// Expands `chains` (each a non-empty prefix list whose head is an input)
/// followed by `tail`.
///
/// `prefix(p, t)` builds the singleton prefix `p.t`; `choice(bs)` builds the
/// external choice over the given head prefixes and continuations.
/// Sub-results are memoised by the set of chains still pending, so the
/// result is a DAG of size O(2^k) rather than a tree of size O(k!).
pub fn expand<P, T: Clone>(
    chains: &[Vec<P>],
    tail: &T,
    prefix: &impl Fn(&P, T) -> T,
    choice: &impl Fn(Vec<(&P, T)>) -> T,
) -> T {
    assert!(chains.len() < 64, "conc supports at most 63 chains");
    assert!(chains.iter().all(|c| !c.is_empty()), "empty conc chain");
    let mut memo: HashMap<u64, T> = HashMap::new();
    let full = if chains.is_empty() { 0 } else { u64::MAX >> (64 - chains.len()) };
    go(chains, full, tail, prefix, choice, &mut memo)
}

fn go<P, T: Clone>(
    chains: &[Vec<P>],
    pending: u64,
    tail: &T,
    prefix: &impl Fn(&P, T) -> T,
    choice: &impl Fn(Vec<(&P, T)>) -> T,
    memo: &mut HashMap<u64, T>,
) -> T {
    if pending == 0 {
        return tail.clone();
    }
    if let Some(t) = memo.get(&pending) {
        return t.clone();
    }
    let mut branches = Vec::new();
    for (i, chain) in chains.iter().enumerate() {
        if pending & (1 << i) == 0 {
            continue;
        }
        let rest = go(chains, pending & !(1 << i), tail, prefix, choice, memo);
        let cont = chain[1..].iter().rev().fold(rest, |acc, p| prefix(p, acc));
        branches.push((&chain[0], cont));
    }
    let t = choice(branches);
    memo.insert(pending, t.clone());
    t
}
