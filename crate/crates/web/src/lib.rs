//! Browser playground: environment checking, FL fixture generation and
//! seeded simulation behind a JSON-string interface.
//!
//! Every function returns a JSON document with `"v": 1`; failures carry an
//! `"error"` field instead of throwing.

use mpst_core::envcheck::{check_env_property, explore_env};
use mpst_core::flgen::{gen_centralized, gen_decentralized};
use mpst_core::semantics::{simulate, Policy};
use mpst_core::syntax::{parse_env, parse_session, printer};
use mpst_core::verdict::Property;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// State cap for in-browser exploration.
pub const MAX_STATES: usize = 200_000;

fn error(msg: impl ToString) -> String {
    json!({ "v": 1, "error": msg.to_string() }).to_string()
}

fn properties(property: &str) -> Result<Vec<Property>, String> {
    match property.trim() {
        "" | "all" => Ok(Property::ALL.to_vec()),
        p => p.parse().map(|p| vec![p]),
    }
}

/// Checks `property` (`safe`, `deadlock-free`, `live`, or `all`) of the
/// environment in `src`.
#[wasm_bindgen]
pub fn check_env(src: &str, property: &str, bound: usize) -> String {
    let g = match parse_env(src) {
        Ok(g) => g,
        Err(e) => return error(e),
    };
    let props = match properties(property) {
        Ok(p) => p,
        Err(e) => return error(e),
    };
    let graph = explore_env(&g, bound.max(1), MAX_STATES);
    let verdicts: Vec<Value> = props
        .into_iter()
        .map(|p| {
            let v = check_env_property(&graph, p);
            let mut j = v.to_json();
            j["text"] = v.render().into();
            j
        })
        .collect();
    json!({ "v": 1, "verdicts": verdicts }).to_string()
}

/// Generates the centralized or decentralized FL session and environment
/// for `n` participants.
#[wasm_bindgen]
pub fn generate_fl(kind: &str, n: usize) -> String {
    let generated = match kind {
        "centralized" => gen_centralized(n),
        "decentralized" => gen_decentralized(n),
        k => return error(format!("unknown kind {k:?}")),
    };
    match generated {
        Ok((s, g)) => json!({ "v": 1, "n": n, "session": printer::session(&s), "env": printer::env(&g) }).to_string(),
        Err(e) => error(e),
    }
}

/// Runs a seeded random walk of the session in `src`.
#[wasm_bindgen]
pub fn simulate_session(src: &str, seed: u32, steps: usize, fair: bool) -> String {
    let n = match parse_session(src) {
        Ok(n) => n,
        Err(e) => return error(e),
    };
    let policy = if fair { Policy::Fair } else { Policy::Uniform };
    match simulate(&n, steps, u64::from(seed), policy) {
        Ok(t) => {
            let labels: Vec<String> = t.labels().iter().map(ToString::to_string).collect();
            json!({
                "v": 1,
                "seed": seed,
                "labels": labels,
                "end": t.end,
                "last": printer::session_compact(&t.last),
            })
            .to_string()
        }
        Err(e) => error(e),
    }
}
