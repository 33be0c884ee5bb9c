//! Recursive-descent parser for sessions, environments, processes and
//! session types.
//!
//! Recursion binders are renamed while parsing so that every `mu` in a
//! document binds a distinct name; unbound and unguarded recursion
//! variables are rejected here as well.

use std::collections::{BTreeMap, HashSet};

use super::ast::*;
use super::conc;
use super::lexer::{lex, Pos, Tok, Token};
use super::ParseError;

const KEYWORDS: &[&str] = &[
    "participant", "queue", "sum", "if", "then", "else", "mu", "conc", "true", "false", "end", "nat", "bool",
];

struct Scope {
    source: String,
    unique: Ident,
    guard_depth: usize,
}

pub struct Parser {
    toks: Vec<Token>,
    i: usize,
    scopes: Vec<Scope>,
    used: HashSet<String>,
    bound: HashSet<String>,
    guard_depth: usize,
}

enum ProcPrefix {
    In { peer: Participant, label: Label, binder: Ident },
    Out { peer: Participant, label: Label, payload: Value },
}

struct TypePrefix {
    input: bool,
    branch: TypeBranch,
}

impl Parser {
    pub fn new(src: &str) -> Result<Parser, ParseError> {
        let toks = lex(src)?;
        let used = toks
            .iter()
            .filter_map(|t| match &t.tok {
                Tok::Ident(s) => Some(s.clone()),
                _ => None,
            })
            .collect();
        Ok(Parser {
            toks,
            i: 0,
            scopes: Vec::new(),
            used,
            bound: HashSet::new(),
            guard_depth: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.i + k).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let pos = self.pos();
        Err(ParseError::Syntax {
            line: pos.line,
            col: pos.col,
            message: message.into(),
        })
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {}, found {}", want.describe(), self.peek().describe()))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected `{kw}`, found {}", self.peek().describe()))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            other => self.error(format!("expected {what}, found {}", other.describe())),
        }
    }

    pub fn finish(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.error(format!("unexpected {} after end of input", self.peek().describe()))
        }
    }

    fn fresh(&mut self, base: &str) -> Ident {
        if self.bound.insert(base.to_string()) {
            return Ident::new(base);
        }
        let mut k = 1;
        loop {
            let cand = format!("{base}_{k}");
            if !self.used.contains(&cand) && self.bound.insert(cand.clone()) {
                return Ident::new(cand);
            }
            k += 1;
        }
    }

    fn push_binder(&mut self, source: String) -> Ident {
        let unique = self.fresh(&source);
        self.scopes.push(Scope {
            source,
            unique: unique.clone(),
            guard_depth: self.guard_depth,
        });
        unique
    }

    fn resolve(&self, name: &str, pos: Pos) -> Result<Ident, ParseError> {
        match self.scopes.iter().rev().find(|s| s.source == name) {
            None => Err(ParseError::UnboundVariable {
                line: pos.line,
                col: pos.col,
                name: name.to_string(),
            }),
            Some(s) if s.guard_depth >= self.guard_depth => Err(ParseError::UnguardedRecursion {
                line: pos.line,
                col: pos.col,
                name: name.to_string(),
            }),
            Some(s) => Ok(s.unique.clone()),
        }
    }

    fn value(&mut self) -> Result<Value, ParseError> {
        match self.peek().clone() {
            Tok::Nat(n) => {
                self.bump();
                Ok(Value::Nat(n))
            }
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Value::Bool(true))
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(Value::Bool(false))
            }
            _ => Ok(Value::Var(Ident::new(self.ident("a value")?))),
        }
    }

    fn sort(&mut self) -> Result<Sort, ParseError> {
        if self.is_kw("nat") {
            self.bump();
            Ok(Sort::Nat)
        } else if self.is_kw("bool") {
            self.bump();
            Ok(Sort::Bool)
        } else {
            self.error(format!("expected `nat` or `bool`, found {}", self.peek().describe()))
        }
    }

    // -- processes ---------------------------------------------------------

    fn proc_prefix(&mut self) -> Result<ProcPrefix, ParseError> {
        let peer = Participant::new(self.ident("a participant")?);
        match self.bump() {
            Tok::Question => {
                let label = Label::new(self.ident("a label")?);
                self.expect(Tok::LParen)?;
                let binder = Ident::new(self.ident("a binder")?);
                self.expect(Tok::RParen)?;
                Ok(ProcPrefix::In { peer, label, binder })
            }
            Tok::Bang => {
                let label = Label::new(self.ident("a label")?);
                self.expect(Tok::LParen)?;
                let payload = self.value()?;
                self.expect(Tok::RParen)?;
                Ok(ProcPrefix::Out { peer, label, payload })
            }
            other => {
                self.i -= 1;
                self.error(format!("expected `?` or `!`, found {}", other.describe()))
            }
        }
    }

    /// Optional `.P` continuation; absent means `0`.
    fn proc_cont(&mut self) -> Result<Process, ParseError> {
        if *self.peek() == Tok::Dot {
            self.bump();
            self.guard_depth += 1;
            let p = self.process();
            self.guard_depth -= 1;
            p
        } else {
            Ok(Process::inact())
        }
    }

    fn proc_choice(&mut self, items: Vec<(ProcPrefix, Process, Pos)>) -> Result<Process, ParseError> {
        let mut seen = HashSet::new();
        let input = matches!(items[0].0, ProcPrefix::In { .. });
        let mut ins = Vec::new();
        let mut outs = Vec::new();
        for (pre, cont, pos) in items {
            let (peer, label) = match &pre {
                ProcPrefix::In { peer, label, .. } | ProcPrefix::Out { peer, label, .. } => (peer.clone(), label.clone()),
            };
            if !seen.insert((peer.clone(), label.clone())) {
                return Err(ParseError::DuplicateBranch {
                    line: pos.line,
                    col: pos.col,
                    peer: peer.to_string(),
                    label: label.to_string(),
                });
            }
            match pre {
                ProcPrefix::In { peer, label, binder } if input => ins.push(InBranch { peer, label, binder, cont }),
                ProcPrefix::Out { peer, label, payload } if !input => outs.push(OutBranch { peer, label, payload, cont }),
                _ => return Err(ParseError::MixedChoice { line: pos.line, col: pos.col }),
            }
        }
        Ok(Process::new(if input { ProcKind::External(ins) } else { ProcKind::Internal(outs) }))
    }

    pub fn process(&mut self) -> Result<Process, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Nat(0) => {
                self.bump();
                Ok(Process::inact())
            }
            Tok::Ident(s) if s == "sum" => {
                self.bump();
                self.expect(Tok::LBrace)?;
                let mut items = Vec::new();
                loop {
                    let at = self.pos();
                    let pre = self.proc_prefix()?;
                    let cont = self.proc_cont()?;
                    items.push((pre, cont, at));
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
                self.proc_choice(items)
            }
            Tok::Ident(s) if s == "if" => {
                self.bump();
                let cond = self.value()?;
                self.expect_kw("then")?;
                let then = self.process()?;
                self.expect_kw("else")?;
                let els = self.process()?;
                Ok(Process::new(ProcKind::Cond { cond, then, els }))
            }
            Tok::Ident(s) if s == "mu" => {
                self.bump();
                let name = self.ident("a recursion variable")?;
                self.expect(Tok::Dot)?;
                let var = self.push_binder(name);
                let body = self.process();
                self.scopes.pop();
                Ok(Process::new(ProcKind::Rec { var, body: body? }))
            }
            Tok::Ident(s) if s == "conc" => {
                self.bump();
                self.proc_conc(pos)
            }
            Tok::Ident(_) if matches!(self.peek_at(1), Tok::Question | Tok::Bang) => {
                let pre = self.proc_prefix()?;
                let cont = self.proc_cont()?;
                self.proc_choice(vec![(pre, cont, pos)])
            }
            Tok::Ident(_) => {
                let name = self.ident("a process")?;
                Ok(Process::new(ProcKind::Var(self.resolve(&name, pos)?)))
            }
            other => self.error(format!("expected a process, found {}", other.describe())),
        }
    }

    fn proc_conc(&mut self, pos: Pos) -> Result<Process, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut chains: Vec<Vec<ProcPrefix>> = Vec::new();
        let mut heads = HashSet::new();
        loop {
            let at = self.pos();
            let mut chain = vec![self.proc_prefix()?];
            match &chain[0] {
                ProcPrefix::In { peer, label, .. } => {
                    if !heads.insert((peer.clone(), label.clone())) {
                        return Err(ParseError::DuplicateBranch {
                            line: at.line,
                            col: at.col,
                            peer: peer.to_string(),
                            label: label.to_string(),
                        });
                    }
                }
                ProcPrefix::Out { .. } => {
                    return Err(ParseError::Syntax {
                        line: at.line,
                        col: at.col,
                        message: "a conc chain must start with an input".into(),
                    })
                }
            }
            while *self.peek() == Tok::Dot {
                self.bump();
                chain.push(self.proc_prefix()?);
            }
            chains.push(chain);
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        if chains.len() >= 64 {
            return Err(ParseError::Syntax {
                line: pos.line,
                col: pos.col,
                message: "too many conc chains".into(),
            });
        }
        let tail = self.proc_cont()?;
        let prefix = |p: &ProcPrefix, t: Process| match p {
            ProcPrefix::In { peer, label, binder } => Process::new(ProcKind::External(vec![InBranch {
                peer: peer.clone(),
                label: label.clone(),
                binder: binder.clone(),
                cont: t,
            }])),
            ProcPrefix::Out { peer, label, payload } => Process::new(ProcKind::Internal(vec![OutBranch {
                peer: peer.clone(),
                label: label.clone(),
                payload: payload.clone(),
                cont: t,
            }])),
        };
        let choice = |bs: Vec<(&ProcPrefix, Process)>| {
            Process::new(ProcKind::External(
                bs.into_iter()
                    .map(|(p, cont)| match p {
                        ProcPrefix::In { peer, label, binder } => InBranch {
                            peer: peer.clone(),
                            label: label.clone(),
                            binder: binder.clone(),
                            cont,
                        },
                        ProcPrefix::Out { .. } => unreachable!("checked above"),
                    })
                    .collect(),
            ))
        };
        Ok(conc::expand(&chains, &tail, &prefix, &choice))
    }

    // -- session types -----------------------------------------------------

    fn type_prefix(&mut self) -> Result<(TypePrefix, Pos), ParseError> {
        let at = self.pos();
        let peer = Participant::new(self.ident("a participant")?);
        let input = match self.bump() {
            Tok::Question => true,
            Tok::Bang => false,
            other => {
                self.i -= 1;
                return self.error(format!("expected `?` or `!`, found {}", other.describe()));
            }
        };
        let label = Label::new(self.ident("a label")?);
        self.expect(Tok::LParen)?;
        let sort = self.sort()?;
        self.expect(Tok::RParen)?;
        Ok((
            TypePrefix {
                input,
                branch: TypeBranch {
                    peer,
                    label,
                    sort,
                    cont: SessionType::end(),
                },
            },
            at,
        ))
    }

    fn type_cont(&mut self) -> Result<SessionType, ParseError> {
        if *self.peek() == Tok::Dot {
            self.bump();
            self.guard_depth += 1;
            let t = self.session_type();
            self.guard_depth -= 1;
            t
        } else {
            Ok(SessionType::end())
        }
    }

    fn type_choice(&mut self, input: bool, items: Vec<(TypePrefix, Pos)>) -> Result<SessionType, ParseError> {
        let mut seen = HashSet::new();
        let mut bs = Vec::new();
        for (pre, pos) in items {
            if pre.input != input {
                return Err(ParseError::MixedChoice { line: pos.line, col: pos.col });
            }
            if !seen.insert((pre.branch.peer.clone(), pre.branch.label.clone())) {
                return Err(ParseError::DuplicateBranch {
                    line: pos.line,
                    col: pos.col,
                    peer: pre.branch.peer.to_string(),
                    label: pre.branch.label.to_string(),
                });
            }
            bs.push(pre.branch);
        }
        Ok(SessionType::new(if input { TypeKind::External(bs) } else { TypeKind::Internal(bs) }))
    }

    pub fn session_type(&mut self) -> Result<SessionType, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) if s == "end" => {
                self.bump();
                Ok(SessionType::end())
            }
            Tok::Plus | Tok::Amp => {
                let input = self.bump() == Tok::Amp;
                self.expect(Tok::LBrace)?;
                let mut items = Vec::new();
                loop {
                    let (mut pre, at) = self.type_prefix()?;
                    pre.branch.cont = self.type_cont()?;
                    items.push((pre, at));
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
                self.type_choice(input, items)
            }
            Tok::Ident(s) if s == "mu" => {
                self.bump();
                let name = self.ident("a recursion variable")?;
                self.expect(Tok::Dot)?;
                let var = self.push_binder(name);
                let body = self.session_type();
                self.scopes.pop();
                Ok(SessionType::new(TypeKind::Rec { var, body: body? }))
            }
            Tok::Ident(s) if s == "conc" => {
                self.bump();
                self.type_conc()
            }
            Tok::Ident(_) if matches!(self.peek_at(1), Tok::Question | Tok::Bang) => {
                let (mut pre, at) = self.type_prefix()?;
                pre.branch.cont = self.type_cont()?;
                let input = pre.input;
                self.type_choice(input, vec![(pre, at)])
            }
            Tok::Ident(_) => {
                let name = self.ident("a session type")?;
                Ok(SessionType::new(TypeKind::Var(self.resolve(&name, pos)?)))
            }
            other => self.error(format!("expected a session type, found {}", other.describe())),
        }
    }

    fn type_conc(&mut self) -> Result<SessionType, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut chains: Vec<Vec<TypePrefix>> = Vec::new();
        let mut heads = HashSet::new();
        loop {
            let (head, at) = self.type_prefix()?;
            if !head.input {
                return Err(ParseError::Syntax {
                    line: at.line,
                    col: at.col,
                    message: "a conc chain must start with an input".into(),
                });
            }
            if !heads.insert((head.branch.peer.clone(), head.branch.label.clone())) {
                return Err(ParseError::DuplicateBranch {
                    line: at.line,
                    col: at.col,
                    peer: head.branch.peer.to_string(),
                    label: head.branch.label.to_string(),
                });
            }
            let mut chain = vec![head];
            while *self.peek() == Tok::Dot {
                self.bump();
                chain.push(self.type_prefix()?.0);
            }
            chains.push(chain);
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        if chains.len() >= 64 {
            return self.error("too many conc chains");
        }
        let tail = self.type_cont()?;
        let prefix = |p: &TypePrefix, t: SessionType| {
            let b = TypeBranch { cont: t, ..p.branch.clone() };
            SessionType::new(if p.input { TypeKind::External(vec![b]) } else { TypeKind::Internal(vec![b]) })
        };
        let choice = |bs: Vec<(&TypePrefix, SessionType)>| {
            SessionType::new(TypeKind::External(
                bs.into_iter().map(|(p, cont)| TypeBranch { cont, ..p.branch.clone() }).collect(),
            ))
        };
        Ok(conc::expand(&chains, &tail, &prefix, &choice))
    }

    // -- documents ---------------------------------------------------------

    pub fn session(&mut self) -> Result<Session, ParseError> {
        let mut actors = BTreeMap::new();
        loop {
            let pos = self.pos();
            self.expect_kw("participant")?;
            let name = Participant::new(self.ident("a participant name")?);
            self.expect(Tok::LBrace)?;
            let process = self.process()?;
            self.expect(Tok::RBrace)?;
            let mut queue = Queue::empty();
            if self.is_kw("queue") {
                self.bump();
                self.expect(Tok::LBracket)?;
                if *self.peek() != Tok::RBracket {
                    loop {
                        self.expect(Tok::LParen)?;
                        let receiver = Participant::new(self.ident("a receiver")?);
                        self.expect(Tok::Comma)?;
                        let label = Label::new(self.ident("a label")?);
                        self.expect(Tok::LParen)?;
                        let payload = self.value()?;
                        self.expect(Tok::RParen)?;
                        self.expect(Tok::RParen)?;
                        queue.0.push(Message { receiver, label, payload });
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBracket)?;
            }
            if actors.contains_key(&name) {
                return Err(ParseError::DuplicateParticipant {
                    line: pos.line,
                    col: pos.col,
                    name: name.to_string(),
                });
            }
            actors.insert(name, Actor { process, queue });
            if *self.peek() == Tok::Eof {
                break;
            }
        }
        Ok(Session { actors })
    }

    pub fn env(&mut self) -> Result<TypingEnv, ParseError> {
        let mut bindings = BTreeMap::new();
        loop {
            let pos = self.pos();
            let name = Participant::new(self.ident("a participant name")?);
            self.expect(Tok::Colon)?;
            self.expect(Tok::LParen)?;
            self.expect(Tok::LBracket)?;
            let mut queue = QueueType::empty();
            if *self.peek() != Tok::RBracket {
                loop {
                    let receiver = Participant::new(self.ident("a receiver")?);
                    self.expect(Tok::Bang)?;
                    let label = Label::new(self.ident("a label")?);
                    self.expect(Tok::LParen)?;
                    let sort = self.sort()?;
                    self.expect(Tok::RParen)?;
                    queue.0.push(MessageType { receiver, label, sort });
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RBracket)?;
            self.expect(Tok::Comma)?;
            let ty = self.session_type()?;
            self.expect(Tok::RParen)?;
            if bindings.contains_key(&name) {
                return Err(ParseError::DuplicateParticipant {
                    line: pos.line,
                    col: pos.col,
                    name: name.to_string(),
                });
            }
            bindings.insert(name, Binding { queue, ty });
            if *self.peek() == Tok::Semi {
                self.bump();
            }
            if *self.peek() == Tok::Eof {
                break;
            }
        }
        Ok(TypingEnv { bindings })
    }
}
