//! End-to-end acceptance checks, one line per criterion.
//!
//! Run with `cargo test -p mpst-cli --test acceptance`.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use mpst_core::congruence::canon_queue;
use mpst_core::envcheck::{check_env_property, explore_env, DEFAULT_BOUND};
use mpst_core::flgen::{gen_centralized, gen_decentralized, gen_multimodel_upgrade, receive_counts, upgraded_centralized};
use mpst_core::random::{random_type, subtype_of, supertype_of, typable_pair, GenConfig};
use mpst_core::semantics::{simulate, successors, Policy, TraceEnd, TransitionLabel};
use mpst_core::sessioncheck::{check_session_property, cosimulate, explore_session};
use mpst_core::subtyping::{subtype, subtype_env, subtype_pair};
use mpst_core::syntax::*;
use mpst_core::typing::{check_process, check_session};
use mpst_core::verdict::{Outcome, Property, Verdict, Violation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use Outcome::{No, Yes};

const CAP: usize = 1_000_000;

type Check = Result<String, String>;

/// Name, check and time limit of one criterion.
type Criterion = (&'static str, fn() -> Check, Duration);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn load(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

fn outcomes(vs: &[Verdict]) -> Vec<Outcome> {
    vs.iter().map(|v| v.result).collect()
}

fn session_verdicts(n: &Session) -> Vec<Verdict> {
    let graph = explore_session(n, DEFAULT_BOUND, CAP).unwrap();
    Property::ALL.iter().map(|&p| check_session_property(&graph, p)).collect()
}

fn env_verdicts(g: &TypingEnv, bound: usize) -> Vec<Verdict> {
    let graph = explore_env(g, bound, CAP);
    Property::ALL.iter().map(|&p| check_env_property(&graph, p)).collect()
}

fn replay(n: &Session, labels: &[TransitionLabel]) -> Result<Session, String> {
    let mut cur = n.clone();
    for l in labels {
        cur = successors(&cur)
            .map_err(|e| e.to_string())?
            .steps
            .into_iter()
            .find(|s| &s.label == l)
            .ok_or_else(|| format!("{l} is not enabled"))?
            .next;
    }
    Ok(cur)
}

fn example_m() -> Check {
    let m = parse_session(&load("m.ses")).unwrap();
    let vs = session_verdicts(&m);
    ensure!(outcomes(&vs) == [Yes, No, No], "verdicts {:?}", outcomes(&vs));
    let live = &vs[2];
    let end = replay(&m, &live.witness)?;
    ensure!(successors(&end).unwrap().steps.is_empty(), "witness does not end in a stuck state");
    let q = &end.actors[&p("q")].queue;
    ensure!(
        q.0.len() == 1 && q.0[0].receiver == p("p") && q.0[0].label.as_str() == "l1",
        "q's queue is {}",
        printer::queue(q)
    );
    Ok(format!("yes/no/no, witness {:?} leaves (p, l1) in q's queue", live.witness.iter().map(ToString::to_string).collect::<Vec<_>>()))
}

fn example_m_prime() -> Check {
    let m = parse_session(&load("m_prime.ses")).unwrap();
    let vs = session_verdicts(&m);
    ensure!(outcomes(&vs) == [No, Yes, Yes], "verdicts {:?}", outcomes(&vs));
    match &vs[0].violation {
        Some(Violation::Mismatch { sender, message, supported, .. }) => {
            ensure!(sender == "r" && message == "l2" && supported == &["l3".to_string()], "mismatch {sender} {message} {supported:?}");
        }
        v => return Err(format!("violation {v:?}")),
    }
    Ok("no/yes/yes, r sends l2 where p supports only l3".into())
}

fn example_envs() -> Check {
    let g = parse_env(&load("gamma_ex3.env")).unwrap();
    let gp = parse_env(&load("gamma_ex3_prime.env")).unwrap();
    let vs = env_verdicts(&g, DEFAULT_BOUND);
    ensure!(outcomes(&vs) == [Yes, No, No], "Γ verdicts {:?}", outcomes(&vs));
    let vp = env_verdicts(&gp, DEFAULT_BOUND);
    ensure!(vp[0].result == No, "Γ′ safety {}", vp[0].result);
    ensure!(subtype_env(&g, &gp).unwrap(), "Γ ⩽ Γ′ does not hold");
    Ok("Γ yes/no/no, Γ′ unsafe, Γ ⩽ Γ′".into())
}

fn centralized_pipeline() -> Check {
    let (s, g) = gen_centralized(3).unwrap();
    check_session(&s, &g).map_err(|e| e.to_string())?;
    let vs = env_verdicts(&g, DEFAULT_BOUND);
    ensure!(outcomes(&vs) == [Yes, Yes, Yes], "Γ_C(3) verdicts {:?}", outcomes(&vs));
    let (q, t2p, t2) = gen_multimodel_upgrade();
    ensure!(subtype(&t2p, &t2).unwrap(), "T₂′ ⩽ T₂ does not hold");
    ensure!(subtype_pair((&QueueType::empty(), &t2p), (&QueueType::empty(), &t2)).unwrap(), "pair subtyping fails");
    let theta = SharedEnv::default();
    check_process(&theta, &q, &t2p).map_err(|e| format!("Q′ : T₂′ fails: {e}"))?;
    check_process(&theta, &q, &t2).map_err(|e| format!("Q′ : T₂ fails: {e}"))?;
    let (upgraded, widened) = upgraded_centralized(3).unwrap();
    check_session(&upgraded, &g).map_err(|e| format!("against Γ_C(3): {e}"))?;
    check_session(&upgraded, &widened).map_err(|e| format!("against Γ′_C(3): {e}"))?;
    let vw = env_verdicts(&widened, DEFAULT_BOUND);
    ensure!(vw[1].result == Yes && vw[2].result == Yes, "Γ′_C(3) verdicts {:?}", outcomes(&vw));
    Ok("FL_C(3) typed, upgrade typed against Γ_C(3) and Γ′_C(3), both DF and live".into())
}

fn decentralized_pipeline() -> Check {
    let mut notes = Vec::new();
    for n in 2..=4usize {
        let (s, g) = gen_decentralized(n).unwrap();
        check_session(&s, &g).map_err(|e| format!("n={n}: {e}"))?;
        let vs = env_verdicts(&g, DEFAULT_BOUND);
        ensure!(outcomes(&vs) == [Yes, Yes, Yes], "n={n}: env verdicts {:?}", outcomes(&vs));
        let expected = n * (n - 1);
        if n <= 3 {
            let graph = explore_session(&s, DEFAULT_BOUND, CAP).unwrap();
            ensure!(graph.is_complete(), "n={n}: session graph incomplete");
            let counts = receive_counts(&graph).ok_or(format!("n={n}: session graph has a cycle"))?;
            for l in ["ld", "upd"] {
                ensure!(counts.get(l) == Some(&(expected, expected)), "n={n}: {l} receives {:?}", counts.get(l));
            }
            notes.push(format!("n={n} exhaustive over {} states", graph.states.len()));
        } else {
            for seed in 0..100 {
                let t = simulate(&s, 10_000, seed, Policy::Fair).unwrap();
                ensure!(t.end == TraceEnd::Terminated, "n={n} seed {seed}: ended {:?}", t.end);
                let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                for step in &t.steps {
                    if let TransitionLabel::Recv { label, .. } = &step.label {
                        *counts.entry(label.as_str()).or_default() += 1;
                    }
                }
                for l in ["ld", "upd"] {
                    ensure!(counts.get(l) == Some(&expected), "n={n} seed {seed}: {l} receives {:?}", counts.get(l));
                }
            }
            notes.push(format!("n={n} over 100 fair runs"));
        }
    }
    Ok(notes.join(", "))
}

fn starvation() -> Check {
    let n = parse_session(&load("starvation.ses")).unwrap();
    let g = parse_env(&load("starvation.env")).unwrap();
    check_session(&n, &g).map_err(|e| e.to_string())?;
    for (what, vs) in [("session", session_verdicts(&n)), ("env", env_verdicts(&g, DEFAULT_BOUND))] {
        ensure!(vs[1].result == Yes && vs[2].result == No, "{what} verdicts {:?}", outcomes(&vs));
        let cycle = vs[2].cycle.clone().ok_or(format!("{what}: no cycle"))?;
        ensure!(!cycle.is_empty(), "{what}: empty cycle");
        ensure!(
            cycle.iter().all(|l| matches!(l.subject().as_str(), "p" | "q")),
            "{what}: cycle {:?}",
            cycle.iter().map(ToString::to_string).collect::<Vec<_>>()
        );
    }
    Ok("DF yes, live no, fair cycle over p and q only".into())
}

fn metatheory() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let cfg = GenConfig::default();
    let (mut safe, mut drawn, mut complete) = (0, 0, 0);
    while safe < 500 {
        drawn += 1;
        let (n, g) = typable_pair(&mut rng, &cfg);
        check_session(&n, &g).map_err(|e| format!("generated pair is untyped: {e}"))?;
        let r = cosimulate(&n, &g, 4, 20_000).map_err(|e| e.to_string())?;
        ensure!(!r.transfer.violated(), "violated implication:\n{}", r.render());
        if r.transfer.rows[0].env != Yes {
            continue;
        }
        safe += 1;
        complete += usize::from(r.complete);
        ensure!(r.divergence.is_none() && r.subject_reduction && r.fidelity, "divergence:\n{}", r.render());
    }
    Ok(format!("{safe} safe pairs of {drawn} drawn ({complete} fully explored), no divergence or violation"))
}

fn subtyping_algebra() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa1b2);
    let peers = [p("q"), p("r")];
    let cfg = GenConfig::default();
    let sub = |a: &SessionType, b: &SessionType| subtype(a, b).unwrap();
    for i in 0..1000 {
        let b = random_type(&mut rng, &peers, &cfg);
        let a = subtype_of(&mut rng, &b);
        let c = supertype_of(&mut rng, &b);
        ensure!(sub(&b, &b), "#{i}: not reflexive on {b}");
        ensure!(sub(&a, &b) && sub(&b, &c), "#{i}: generated chain is not ordered");
        ensure!(sub(&a, &c), "#{i}: {a} ⩽ {b} ⩽ {c} but not transitive");
        let d = if rng.gen_bool(0.5) { c.clone() } else { random_type(&mut rng, &peers, &cfg) };
        let expected = sub(&b, &d);
        ensure!(
            sub(&b.unfold_once(), &d) == expected && sub(&b, &d.unfold_once()) == expected,
            "#{i}: unfolding changes {b} ⩽ {d}"
        );
    }
    let ty = |s: &str| parse_type(s).unwrap();
    ensure!(
        sub(&ty("&{q?l1(nat).r?l2(nat), r?l2(nat), r?l3(nat)}"), &ty("&{q?l1(nat).r?l2(nat), r?l3(nat)}")),
        "wider external choice is not a subtype"
    );
    ensure!(!sub(&ty("+{p!l(nat)}"), &ty("+{q!l(nat)}")), "differing peer sets are related");
    let (_, t2p, t2) = gen_multimodel_upgrade();
    ensure!(sub(&t2p, &t2), "T₂′ ⩽ T₂ does not hold");
    Ok("1000 chains reflexive, transitive and unfolding-invariant, plus three reference facts".into())
}

/// Queues reachable by swapping adjacent messages for different receivers.
fn swap_closure(h: &[Message]) -> Vec<Vec<Message>> {
    let mut seen = vec![h.to_vec()];
    let mut i = 0;
    while i < seen.len() {
        let q = seen[i].clone();
        for k in 0..q.len().saturating_sub(1) {
            if q[k].receiver != q[k + 1].receiver {
                let mut r = q.clone();
                r.swap(k, k + 1);
                if !seen.contains(&r) {
                    seen.push(r);
                }
            }
        }
        i += 1;
    }
    seen
}

fn congruence_oracle() -> Check {
    let atoms: Vec<Message> = ["p", "q"]
        .iter()
        .flat_map(|r| ["a", "b"].map(|l| Message { receiver: p(r), label: Label::new(l), payload: Value::Nat(1) }))
        .collect();
    let mut queues = vec![Vec::new()];
    let mut layer: Vec<Vec<Message>> = vec![Vec::new()];
    for _ in 0..4 {
        layer = layer
            .iter()
            .flat_map(|q| atoms.iter().map(move |a| [q.clone(), vec![a.clone()]].concat()))
            .collect();
        queues.extend(layer.iter().cloned());
    }
    let mut pairs = 0;
    for a in &queues {
        let closure = swap_closure(a);
        let ca = canon_queue(&Queue(a.clone()));
        for b in queues.iter().filter(|b| b.len() == a.len()) {
            pairs += 1;
            let by_canon = ca == canon_queue(&Queue(b.clone()));
            ensure!(by_canon == closure.contains(b), "{} vs {}", printer::queue(&Queue(a.clone())), printer::queue(&Queue(b.clone())));
        }
    }
    Ok(format!("{} queues, {pairs} same-length pairs agree", queues.len()))
}

fn determinism() -> Check {
    let dir = std::env::temp_dir().join(format!("mpst-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let f = |n: &str| fixture(n).display().to_string();
    let out = |n: &str| dir.join(n).display().to_string();
    let commands: Vec<Vec<String>> = vec![
        vec!["parse".into(), f("m.ses")],
        vec!["parse".into(), f("gamma_ex3.env")],
        vec!["typecheck".into(), "--session".into(), f("m.ses"), "--env".into(), f("gamma_ex3.env")],
        vec!["typecheck".into(), "--session".into(), f("m.ses"), "--env".into(), f("gamma_ex3_prime.env")],
        vec!["subtype".into(), f("t2prime.st"), f("t2.st")],
        vec!["check-env".into(), f("gamma_ex3.env")],
        vec!["check-env".into(), f("starvation.env"), "--property".into(), "live".into()],
        vec!["check-session".into(), f("m.ses")],
        vec!["check-session".into(), f("m_prime.ses"), "--property".into(), "safe".into()],
        vec!["check-session".into(), f("terminated.ses"), "--property".into(), "safe".into()],
        vec!["cosim".into(), "--session".into(), f("starvation.ses"), "--env".into(), f("starvation.env")],
        vec!["transfer".into(), "--session".into(), f("m.ses"), "--env".into(), f("gamma_ex3.env")],
        vec!["simulate".into(), f("starvation.ses"), "--seed".into(), "7".into(), "--steps".into(), "20".into()],
        vec!["simulate".into(), f("m.ses"), "--seed".into(), "3".into(), "--policy".into(), "uniform".into()],
        vec!["gen-fl".into(), "--kind".into(), "decentralized".into(), "--n".into(), "3".into()],
        vec![
            "gen-fl".into(),
            "--kind".into(),
            "centralized".into(),
            "--n".into(),
            "3".into(),
            "--out-session".into(),
            out("c.ses"),
            "--out-env".into(),
            out("c.env"),
        ],
    ];
    let run = |args: &[String]| {
        Command::new(env!("CARGO_BIN_EXE_mpst")).arg("--json").args(args).output().map_err(|e| e.to_string())
    };
    for args in &commands {
        let a = run(args)?;
        let written = std::fs::read(out("c.ses")).ok();
        let b = run(args)?;
        ensure!(a.status.code() != Some(2), "{args:?} failed: {}", String::from_utf8_lossy(&a.stderr));
        ensure!(a.status == b.status && a.stdout == b.stdout, "{args:?} differs between runs");
        ensure!(written == std::fs::read(out("c.ses")).ok(), "{args:?} wrote different files");
        let json: serde_json::Value = serde_json::from_slice(&a.stdout).map_err(|e| format!("{args:?}: {e}"))?;
        ensure!(json["v"] == 1, "{args:?}: missing schema version");
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("{} commands byte-identical across two runs", commands.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("example session M", example_m, Duration::from_secs(1)),
        ("example session M′", example_m_prime, Duration::from_secs(1)),
        ("example environments Γ and Γ′", example_envs, Duration::from_secs(1)),
        ("centralized FL and client upgrade", centralized_pipeline, Duration::from_secs(5)),
        ("decentralized FL, n = 2..4", decentralized_pipeline, Duration::from_secs(60)),
        ("starvation", starvation, Duration::from_secs(1)),
        ("subject reduction and fidelity", metatheory, Duration::from_secs(300)),
        ("subtyping algebra", subtyping_algebra, Duration::from_secs(30)),
        ("queue congruence oracle", congruence_oracle, Duration::from_secs(30)),
        ("CLI determinism", determinism, Duration::from_secs(120)),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let result = match result {
            Ok(_) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            r => r,
        };
        match result {
            Ok(detail) => println!("criterion {:>2}: PASS  {name} ({elapsed:.2?}): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name} ({elapsed:.2?}): {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
