//! Property verdicts shared by the environment and session checkers.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::graph::{Incomplete, Stats};
use crate::semantics::TransitionLabel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Safe,
    DeadlockFree,
    Live,
}

impl Property {
    pub const ALL: [Property; 3] = [Property::Safe, Property::DeadlockFree, Property::Live];
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::Safe => "safe",
            Property::DeadlockFree => "deadlock-free",
            Property::Live => "live",
        })
    }
}

impl FromStr for Property {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "safe" | "safety" => Ok(Property::Safe),
            "deadlock-free" | "df" => Ok(Property::DeadlockFree),
            "live" | "liveness" => Ok(Property::Live),
            other => Err(format!("unknown property `{other}` (expected safe, deadlock-free or live)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Yes,
    No,
    Inconclusive,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Yes => "yes",
            Outcome::No => "no",
            Outcome::Inconclusive => "inconclusive",
        })
    }
}

/// Why a property fails.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// A receiver waits on `sender` but the head message from `sender`
    /// matches none of its branches.
    Mismatch {
        receiver: String,
        sender: String,
        /// The offending message, e.g. `l2` or `l2(nat)`.
        message: String,
        /// Branches the receiver offers to `sender`.
        supported: Vec<String>,
        state: String,
    },
    /// A state with no successors that is not terminated.
    Deadlock { state: String },
    /// An obligation that some fair maximal path never discharges.
    Obligation { obligation: String, state: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Mismatch { receiver, sender, message, supported, .. } => write!(
                f,
                "{receiver} cannot receive {message} from {sender} (supported from {sender}: {})",
                supported.join(", ")
            ),
            Violation::Deadlock { state } => write!(f, "stuck in a non-terminated state: {state}"),
            Violation::Obligation { obligation, .. } => write!(f, "{obligation}"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub property: Property,
    pub result: Outcome,
    /// Path from the initial state to the violation (or into the loop).
    pub witness: Vec<TransitionLabel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle: Option<Vec<TransitionLabel>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<Violation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub incomplete: Option<Incomplete>,
    pub stats: Stats,
}

impl Verdict {
    pub fn yes(property: Property, stats: Stats) -> Self {
        Verdict {
            property,
            result: Outcome::Yes,
            witness: Vec::new(),
            cycle: None,
            violation: None,
            incomplete: None,
            stats,
        }
    }

    pub fn no(property: Property, stats: Stats, witness: Vec<TransitionLabel>, violation: Violation) -> Self {
        Verdict {
            result: Outcome::No,
            witness,
            violation: Some(violation),
            ..Verdict::yes(property, stats)
        }
    }

    pub fn inconclusive(property: Property, stats: Stats, why: Incomplete) -> Self {
        Verdict {
            result: Outcome::Inconclusive,
            incomplete: Some(why),
            ..Verdict::yes(property, stats)
        }
    }

    /// The same failure reported under another property name.
    pub fn relabel(mut self, property: Property) -> Self {
        self.property = property;
        self
    }

    pub fn holds(&self) -> bool {
        self.result == Outcome::Yes
    }

    pub fn fails(&self) -> bool {
        self.result == Outcome::No
    }

    /// JSON report with a schema version field.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("verdict serializes");
        if let serde_json::Value::Object(m) = &mut v {
            m.insert("v".into(), 1.into());
        }
        v
    }

    /// Human-readable multi-line report.
    pub fn render(&self) -> String {
        let mut s = format!("property: {}\nresult: {}\n", self.property, self.result);
        if let Some(v) = &self.violation {
            s.push_str(&format!("violation: {v}\n"));
        }
        if let Some(i) = &self.incomplete {
            s.push_str(&format!(
                "incomplete: {}\n",
                match i {
                    Incomplete::StateCap => "state cap reached",
                    Incomplete::QueueBound => "queue bound exceeded",
                }
            ));
        }
        if self.result == Outcome::No {
            let w: Vec<String> = self.witness.iter().map(ToString::to_string).collect();
            s.push_str(&format!("witness: [{}]\n", w.join(", ")));
            if let Some(c) = &self.cycle {
                let c: Vec<String> = c.iter().map(ToString::to_string).collect();
                s.push_str(&format!("cycle: [{}]\n", c.join(", ")));
            }
        }
        s.push_str(&format!("states: {}, edges: {}\n", self.stats.states, self.stats.edges));
        s
    }
}
