//! Text rendering for every syntactic category. The output re-parses to an
//! equal term (up to the trailing `.0` / `.end` shorthand).

use std::fmt::Write;

use super::ast::*;

pub fn value(v: &Value) -> String {
    match v {
        Value::Nat(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Var(x) => x.to_string(),
    }
}

struct Out {
    buf: String,
    pretty: bool,
    depth: usize,
}

impl Out {
    fn newline(&mut self) {
        if self.pretty {
            self.buf.push('\n');
            for _ in 0..self.depth {
                self.buf.push_str("  ");
            }
        }
    }

    fn process(&mut self, p: &Process) {
        match p.kind() {
            ProcKind::Inact => self.buf.push('0'),
            ProcKind::Var(x) => self.buf.push_str(x.as_str()),
            ProcKind::Rec { var, body } => {
                let _ = write!(self.buf, "mu {var}.");
                self.process(body);
            }
            ProcKind::Cond { cond, then, els } => {
                let _ = write!(self.buf, "if {} then ", value(cond));
                self.process(then);
                self.buf.push_str(" else ");
                self.process(els);
            }
            ProcKind::External(bs) => self.choice(bs.len(), |o, i| {
                let b = &bs[i];
                let _ = write!(o.buf, "{}?{}({})", b.peer, b.label, b.binder);
                o.cont_proc(&b.cont);
            }),
            ProcKind::Internal(bs) => self.choice(bs.len(), |o, i| {
                let b = &bs[i];
                let _ = write!(o.buf, "{}!{}({})", b.peer, b.label, value(&b.payload));
                o.cont_proc(&b.cont);
            }),
        }
    }

    fn cont_proc(&mut self, p: &Process) {
        if !p.is_inact() {
            self.buf.push('.');
            self.process(p);
        }
    }

    fn choice(&mut self, n: usize, mut branch: impl FnMut(&mut Self, usize)) {
        if n == 1 {
            branch(self, 0);
            return;
        }
        self.buf.push_str("sum{");
        self.branches(n, &mut branch);
        self.buf.push('}');
    }

    fn branches(&mut self, n: usize, branch: &mut impl FnMut(&mut Self, usize)) {
        self.depth += 1;
        for i in 0..n {
            if i > 0 {
                self.buf.push(',');
                if !self.pretty {
                    self.buf.push(' ');
                }
            }
            self.newline();
            branch(self, i);
        }
        self.depth -= 1;
        self.newline();
    }

    fn session_type(&mut self, t: &SessionType) {
        match t.kind() {
            TypeKind::End => self.buf.push_str("end"),
            TypeKind::Var(x) => self.buf.push_str(x.as_str()),
            TypeKind::Rec { var, body } => {
                let _ = write!(self.buf, "mu {var}.");
                self.session_type(body);
            }
            TypeKind::External(bs) => self.type_choice("&{", "?", bs),
            TypeKind::Internal(bs) => self.type_choice("+{", "!", bs),
        }
    }

    fn type_choice(&mut self, open: &str, dir: &str, bs: &[TypeBranch]) {
        self.buf.push_str(open);
        let mut f = |o: &mut Self, i: usize| {
            let b = &bs[i];
            let _ = write!(o.buf, "{}{dir}{}({})", b.peer, b.label, b.sort);
            if !b.cont.is_end() {
                o.buf.push('.');
                o.session_type(&b.cont);
            }
        };
        if bs.len() == 1 {
            f(self, 0);
        } else {
            self.branches(bs.len(), &mut f);
        }
        self.buf.push('}');
    }
}

fn render(pretty: bool, f: impl FnOnce(&mut Out)) -> String {
    let mut o = Out {
        buf: String::new(),
        pretty,
        depth: 0,
    };
    f(&mut o);
    o.buf
}

pub fn process_compact(p: &Process) -> String {
    render(false, |o| o.process(p))
}

pub fn process_pretty(p: &Process) -> String {
    render(true, |o| o.process(p))
}

pub fn type_compact(t: &SessionType) -> String {
    render(false, |o| o.session_type(t))
}

pub fn type_pretty(t: &SessionType) -> String {
    render(true, |o| o.session_type(t))
}

pub fn message(m: &Message) -> String {
    format!("({}, {}({}))", m.receiver, m.label, value(&m.payload))
}

pub fn queue(q: &Queue) -> String {
    let items: Vec<String> = q.0.iter().map(message).collect();
    format!("[{}]", items.join(", "))
}

pub fn message_type(m: &MessageType) -> String {
    format!("{}!{}({})", m.receiver, m.label, m.sort)
}

pub fn queue_type(q: &QueueType) -> String {
    let items: Vec<String> = q.0.iter().map(message_type).collect();
    format!("[{}]", items.join(", "))
}

/// Multi-line session text in the input syntax.
pub fn session(s: &Session) -> String {
    let mut buf = String::new();
    for (name, a) in &s.actors {
        let body = process_pretty(&a.process).replace('\n', "\n  ");
        let _ = writeln!(buf, "participant {name} {{\n  {body}\n}} queue {}", queue(&a.queue));
    }
    buf
}

/// Single-line session text.
pub fn session_compact(s: &Session) -> String {
    let parts: Vec<String> = s
        .actors
        .iter()
        .map(|(name, a)| format!("participant {name} {{ {} }} queue {}", process_compact(&a.process), queue(&a.queue)))
        .collect();
    parts.join(" ")
}

/// Multi-line environment text in the input syntax.
pub fn env(g: &TypingEnv) -> String {
    let parts: Vec<String> = g
        .bindings
        .iter()
        .map(|(name, b)| {
            let body = type_pretty(&b.ty).replace('\n', "\n  ");
            format!("{name} : ({}, {body})", queue_type(&b.queue))
        })
        .collect();
    let mut s = parts.join(";\n");
    s.push('\n');
    s
}

pub fn env_compact(g: &TypingEnv) -> String {
    let parts: Vec<String> = g
        .bindings
        .iter()
        .map(|(name, b)| format!("{name} : ({}, {})", queue_type(&b.queue), type_compact(&b.ty)))
        .collect();
    parts.join("; ")
}
