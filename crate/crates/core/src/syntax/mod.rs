//! Abstract syntax, parser and printer for sessions, processes, session
//! types, queues and typing environments.

pub mod ast;
pub mod conc;
mod lexer;
mod parser;
pub mod printer;

pub use ast::*;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("{line}:{col}: duplicate branch {peer}:{label} in one choice")]
    DuplicateBranch { line: usize, col: usize, peer: String, label: String },
    #[error("{line}:{col}: recursion variable `{name}` is not guarded by a prefix")]
    UnguardedRecursion { line: usize, col: usize, name: String },
    #[error("{line}:{col}: unbound recursion variable `{name}`")]
    UnboundVariable { line: usize, col: usize, name: String },
    #[error("{line}:{col}: participant `{name}` is declared twice")]
    DuplicateParticipant { line: usize, col: usize, name: String },
    #[error("{line}:{col}: a choice mixes inputs and outputs")]
    MixedChoice { line: usize, col: usize },
}

impl ParseError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            ParseError::Syntax { line, col, .. }
            | ParseError::DuplicateBranch { line, col, .. }
            | ParseError::UnguardedRecursion { line, col, .. }
            | ParseError::UnboundVariable { line, col, .. }
            | ParseError::DuplicateParticipant { line, col, .. }
            | ParseError::MixedChoice { line, col } => (*line, *col),
        }
    }
}

pub fn parse_session(src: &str) -> Result<Session, ParseError> {
    let mut p = parser::Parser::new(src)?;
    let s = p.session()?;
    p.finish()?;
    Ok(s)
}

pub fn parse_env(src: &str) -> Result<TypingEnv, ParseError> {
    let mut p = parser::Parser::new(src)?;
    let g = p.env()?;
    p.finish()?;
    Ok(g)
}

pub fn parse_process(src: &str) -> Result<Process, ParseError> {
    let mut p = parser::Parser::new(src)?;
    let r = p.process()?;
    p.finish()?;
    Ok(r)
}

pub fn parse_type(src: &str) -> Result<SessionType, ParseError> {
    let mut p = parser::Parser::new(src)?;
    let t = p.session_type()?;
    p.finish()?;
    Ok(t)
}

/// A parsed input file of either kind.
#[derive(Debug, Clone)]
pub enum Document {
    Session(Session),
    Env(TypingEnv),
}

/// Parses a session if the text starts with `participant`, an environment
/// otherwise.
pub fn parse_document(src: &str) -> Result<Document, ParseError> {
    let first = src
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .unwrap_or("");
    if first.starts_with("participant") {
        parse_session(src).map(Document::Session)
    } else {
        parse_env(src).map(Document::Env)
    }
}

/// Non-fatal diagnostics: messages a participant sends to itself.
pub fn lint_session(s: &Session) -> Vec<String> {
    let mut out = Vec::new();
    for (name, a) in &s.actors {
        if a.queue.0.iter().any(|m| &m.receiver == name) {
            out.push(format!("participant {name} has a queued message addressed to itself"));
        }
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![a.process.clone()];
        while let Some(p) = stack.pop() {
            if !seen.insert(p.clone()) {
                continue;
            }
            match p.kind() {
                ProcKind::Inact | ProcKind::Var(_) => {}
                ProcKind::External(bs) => {
                    for b in bs {
                        if &b.peer == name {
                            out.push(format!("participant {name} receives from itself ({}?{})", b.peer, b.label));
                        }
                        stack.push(b.cont.clone());
                    }
                }
                ProcKind::Internal(bs) => {
                    for b in bs {
                        if &b.peer == name {
                            out.push(format!("participant {name} sends to itself ({}!{})", b.peer, b.label));
                        }
                        stack.push(b.cont.clone());
                    }
                }
                ProcKind::Cond { then, els, .. } => {
                    stack.push(then.clone());
                    stack.push(els.clone());
                }
                ProcKind::Rec { body, .. } => stack.push(body.clone()),
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_example_session() {
        let s = parse_session(
            "participant p { sum{ q?l1(x).r?l2(y), r?l2(x), r?l3(x) } }
             participant q { 0 } queue [(p, l1(1))]
             participant r { 0 } queue [(p, l2(2))]",
        )
        .unwrap();
        assert_eq!(s.actors.len(), 3);
        match s.actors[&p("p")].process.kind() {
            ProcKind::External(bs) => assert_eq!(bs.len(), 3),
            _ => panic!(),
        }
        assert_eq!(s.actors[&p("q")].queue.0[0].payload, Value::Nat(1));
    }

    #[test]
    fn trailing_inaction_is_optional() {
        assert_eq!(parse_process("q!l(1)").unwrap(), parse_process("q!l(1).0").unwrap());
        assert_eq!(parse_type("+{q!l(nat)}").unwrap(), parse_type("+{q!l(nat).end}").unwrap());
    }

    #[test]
    fn rejects_duplicate_branches() {
        assert!(matches!(parse_process("sum{q!l(1), q!l(2)}"), Err(ParseError::DuplicateBranch { .. })));
        assert!(matches!(parse_type("&{q?l(nat), q?l(bool)}"), Err(ParseError::DuplicateBranch { .. })));
    }

    #[test]
    fn rejects_mixed_choices() {
        assert!(matches!(parse_process("sum{q!l(1), q?m(x)}"), Err(ParseError::MixedChoice { .. })));
        assert!(matches!(parse_type("+{q!l(nat), q?m(nat)}"), Err(ParseError::MixedChoice { .. })));
    }

    #[test]
    fn rejects_unguarded_recursion() {
        assert!(matches!(parse_process("mu X.X"), Err(ParseError::UnguardedRecursion { .. })));
        assert!(matches!(parse_process("mu X.if true then X else 0"), Err(ParseError::UnguardedRecursion { .. })));
        assert!(matches!(parse_type("mu t.mu s.t"), Err(ParseError::UnguardedRecursion { .. })));
        assert!(parse_process("mu X.q!l(1).X").is_ok());
    }

    #[test]
    fn rejects_unbound_and_duplicate_participants() {
        assert!(matches!(parse_process("q!l(1).X"), Err(ParseError::UnboundVariable { .. })));
        assert!(matches!(
            parse_session("participant p { 0 } participant p { 0 }"),
            Err(ParseError::DuplicateParticipant { .. })
        ));
        assert!(matches!(parse_env("p:([], end); p:([], end)"), Err(ParseError::DuplicateParticipant { .. })));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse_process("q!l(1).\n  sum{").unwrap_err();
        assert_eq!(e.position(), (2, 7));
    }

    #[test]
    fn recursion_binders_become_distinct() {
        let p = parse_process("sum{q?a(x).mu X.q!l(1).X, q?b(x).mu X.q!m(1).X}").unwrap();
        let mut names = Vec::new();
        if let ProcKind::External(bs) = p.kind() {
            for b in bs {
                if let ProcKind::Rec { var, .. } = b.cont.kind() {
                    names.push(var.clone());
                }
            }
        }
        assert_eq!(names.len(), 2);
        assert_ne!(names[0], names[1]);
    }

    #[test]
    fn conc_expands_to_interleavings() {
        let p = parse_process("conc{a?x(u), b?y(v)}.c!z(1)").unwrap();
        let q = parse_process("sum{a?x(u).b?y(v).c!z(1), b?y(v).a?x(u).c!z(1)}").unwrap();
        assert_eq!(p, q);
        let t = parse_type("conc{a?x(nat).a!w(nat), b?y(nat)}").unwrap();
        let u = parse_type("&{a?x(nat).a!w(nat).b?y(nat), b?y(nat).a?x(nat).a!w(nat)}").unwrap();
        assert_eq!(t, u);
    }

    #[test]
    fn parses_environments() {
        let g = parse_env("p : ([q!l(nat), r!m(bool)], &{q?a(nat)}); q : ([], end);").unwrap();
        assert_eq!(g.bindings[&p("p")].queue.0.len(), 2);
        assert!(g.bindings[&p("q")].ty.is_end());
    }

    #[test]
    fn document_kind_is_detected() {
        assert!(matches!(parse_document("# c\nparticipant p { 0 }"), Ok(Document::Session(_))));
        assert!(matches!(parse_document("p : ([], end)"), Ok(Document::Env(_))));
    }

    #[test]
    fn self_sends_are_linted() {
        let s = parse_session("participant p { p!l(1) }").unwrap();
        assert_eq!(lint_session(&s).len(), 1);
    }
}
