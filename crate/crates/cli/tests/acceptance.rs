//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitCode, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};

use intentgraph_core::metrics::{bleu, rouge, speedup, EfficiencyRecord, RougeVariant};
use intentgraph_core::{
    apply_updates, simplify, EdgeKind, ViewNode, FocusSet, GraphDelta, IntentId, IntentTree, IntentUpdate,
    TaskEdge, TaskId, TaskNode, Triple, UnderstandingGraph,
};
use intentgraph_llm::extractor::Extractor;
use intentgraph_llm::gateway::count_tokens;
use intentgraph_llm::playground::{run_loop, PlaygroundSession, PlaygroundStatus, STAGNATION_LIMIT};
use intentgraph_llm::{DemoResponder, Gateway, MockStep, MockTransport, Purpose, Templates};
use intentgraph_testkit::gen::{
    all_focus_sets, all_parent_arrays, random_focus, random_tree, random_triple,
    random_valid_update, task_id, tree_from_parents,
};
use intentgraph_testkit::metrics_oracle as moracle;
use intentgraph_testkit::simplify_oracle::{oracle_simplify, project};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- simplifier

fn simplifier_oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let checked = std::cell::Cell::new(0u64);
    let mut mismatches = 0u64;
    let mut first = None;
    let mut check = |t: &Triple, f: &FocusSet| {
        checked.set(checked.get() + 1);
        let view = simplify(t, f).expect("focus drawn from the tree");
        if project(&view, t) != oracle_simplify(t, f) {
            mismatches += 1;
            first.get_or_insert_with(|| format!("{} / focus {:?}", t.to_canonical_json(), f));
        }
    };

    // Every tree up to 4 intents, every focus set, every owner assignment of
    // 3 tasks, every single-kind edge set on them.
    let pairs: Vec<(usize, usize)> =
        (0..3).flat_map(|s| (0..3).filter(move |&d| d != s).map(move |d| (s, d))).collect();
    for n in 1..=4 {
        for parents in all_parent_arrays(n) {
            let tree = tree_from_parents(&parents, 0);
            let intents: Vec<IntentId> = tree.ids().cloned().collect();
            let focus_sets = all_focus_sets(&tree);
            for mask in 0u32..(1 << pairs.len()) {
                let kind = if mask % 2 == 0 { EdgeKind::Dependency } else { EdgeKind::DataFlow };
                let edges = pairs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, &(s, d))| TaskEdge::new(task_id(s), task_id(d), kind))
                    .collect();
                let nodes = (0..3).map(|i| TaskNode::new(task_id(i), format!("task {i}"))).collect();
                let graph = UnderstandingGraph::from_parts(nodes, edges).unwrap();
                for owners in 0..intents.len().pow(3) {
                    let mut claims: BTreeMap<IntentId, BTreeSet<TaskId>> = BTreeMap::new();
                    let mut o = owners;
                    for task in 0..3 {
                        claims.entry(intents[o % intents.len()].clone()).or_default().insert(task_id(task));
                        o /= intents.len();
                    }
                    let t = Triple::new(tree.clone(), graph.clone(), claims).unwrap();
                    for f in &focus_sets {
                        check(&t, f);
                    }
                }
            }
        }
    }
    let exhaustive = checked.get();

    // Every tree shape up to 6 intents and every focus set, with sampled
    // graphs and ownership up to 8 tasks.
    let mut rng = StdRng::seed_from_u64(0x51AB);
    for n in 1..=6 {
        for parents in all_parent_arrays(n) {
            let tree = tree_from_parents(&parents, 0);
            for f in all_focus_sets(&tree) {
                for _ in 0..2 {
                    let m = rng.gen_range(0..=8);
                    let graph = intentgraph_testkit::gen::random_graph(&mut rng, m, 0.35);
                    let claims = intentgraph_testkit::gen::random_claims(&mut rng, &tree, &graph);
                    let t = Triple::new(tree.clone(), graph, claims).unwrap();
                    check(&t, &f);
                }
            }
        }
    }
    drop(check);
    let checked = checked.get();
    let secs = started.elapsed().as_secs_f64();
    ensure(mismatches == 0, || format!("{mismatches} mismatches, first: {}", first.unwrap()))?;
    ensure(secs < 60.0, || format!("took {secs:.1}s (limit 60s)"))?;
    Ok(format!(
        "{checked} instances ({exhaustive} fully enumerated), 0 mismatches, {secs:.1}s"
    ))
}

fn simplifier_fixed_points() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xF1);
    let mut literal = 0;
    for k in 0..100 {
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(0..=8);
        let t = random_triple(&mut rng, n, m);
        let tree = t.intent_tree();

        let full = simplify(&t, &FocusSet::all(tree)).unwrap();
        let nodes: Vec<TaskNode> = full
            .nodes
            .iter()
            .map(|v| match v {
                ViewNode::Task(t) => Ok(t.clone()),
                ViewNode::Super(_) => Err("supernode under full focus"),
            })
            .collect::<Result<_, _>>()
            .map_err(|e| format!("instance {k}: {e}"))?;
        let mut orig: Vec<TaskNode> = t.graph().nodes().cloned().collect();
        orig.sort_by(|a, b| a.id.cmp(&b.id));
        ensure(nodes == orig, || format!("instance {k}: nodes differ under full focus"))?;
        let mut edges = full.edges.clone();
        let mut want: Vec<TaskEdge> = t.graph().edges().cloned().collect();
        edges.sort();
        want.sort();
        ensure(edges == want, || format!("instance {k}: edges differ under full focus"))?;

        let empty = simplify(&t, &FocusSet::new()).unwrap();
        let second: Vec<&IntentId> = tree.children(tree.root()).iter().collect();
        let owning: BTreeSet<&IntentId> = second
            .iter()
            .copied()
            .filter(|c| tree.subtree(c).into_iter().any(|u| !t.owned_by(u).is_empty()))
            .collect();
        let supers: Vec<&IntentId> = empty.supernodes().map(|s| &s.intent_id).collect();
        let distinct: BTreeSet<&IntentId> = supers.iter().copied().collect();
        ensure(supers.len() == distinct.len() && distinct == owning, || {
            format!("instance {k}: supernodes {supers:?}, expected one per {owning:?}")
        })?;
        if owning.len() == second.len() {
            literal += 1;
        }
    }
    Ok(format!(
        "100 triples; {literal} with every second-layer subtree owning tasks (one supernode each); empty subtrees get none"
    ))
}

fn reachable(edges: &[(TaskId, TaskId)], from: &TaskId) -> BTreeSet<TaskId> {
    let mut seen = BTreeSet::from([from.clone()]);
    let mut queue = VecDeque::from([from.clone()]);
    while let Some(cur) = queue.pop_front() {
        for (s, d) in edges {
            if s == &cur && seen.insert(d.clone()) {
                queue.push_back(d.clone());
            }
        }
    }
    seen
}

fn quotient_soundness() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x0A);
    for k in 0..1000 {
        let (n, m) = (rng.gen_range(1..=6), rng.gen_range(0..=8));
        let t = random_triple(&mut rng, n, m);
        let f = random_focus(&mut rng, t.intent_tree());
        let view = simplify(&t, &f).unwrap();
        let phi = |x: &TaskId| view.collapse.image(x).clone();
        let got: BTreeSet<(TaskId, TaskId)> =
            view.edges.iter().map(|e| (e.src.clone(), e.dst.clone())).collect();
        let want: BTreeSet<(TaskId, TaskId)> = t
            .graph()
            .edges()
            .map(|e| (phi(&e.src), phi(&e.dst)))
            .filter(|(s, d)| s != d)
            .collect();
        ensure(got == want, || format!("instance {k}: view edges are not the quotient image"))?;
        let g: Vec<(TaskId, TaskId)> = t.graph().edges().map(|e| (e.src.clone(), e.dst.clone())).collect();
        let v: Vec<(TaskId, TaskId)> = got.into_iter().collect();
        for s in t.graph().ids() {
            let in_view = reachable(&v, &phi(s));
            for x in reachable(&g, s) {
                ensure(in_view.contains(&phi(&x)), || {
                    format!("instance {k}: {s} reaches {x} but not in the view")
                })?;
            }
        }
    }
    Ok("1000 instances, 0 violations".into())
}

// ------------------------------------------------------------------ metrics

fn metrics_oracle() -> Outcome {
    let seqs = moracle::all_sequences(&["a", "b", "c"], 6);
    let texts: Vec<String> = seqs.iter().map(|s| s.join(" ")).collect();
    let mut worst = 0.0f64;
    let mut n = 0u64;
    for (c, ct) in seqs.iter().zip(&texts) {
        for (r, rt) in seqs.iter().zip(&texts) {
            let pairs = [
                (rouge(ct, rt, RougeVariant::One).unwrap(), moracle::rouge_n(c, r, 1)),
                (rouge(ct, rt, RougeVariant::Two).unwrap(), moracle::rouge_n(c, r, 2)),
                (rouge(ct, rt, RougeVariant::L).unwrap(), moracle::rouge_l(c, r)),
                (bleu(ct, rt).unwrap(), moracle::bleu(c, r)),
            ];
            for (got, want) in pairs {
                worst = worst.max((got - want).abs());
            }
            n += 1;
        }
    }
    ensure(worst <= 1e-9, || format!("max deviation {worst:e} over {n} pairs"))?;
    let r1 = rouge("the cat sat", "the cat ran", RougeVariant::One).unwrap();
    let rl = rouge("a b c d", "a c b d", RougeVariant::L).unwrap();
    let b = bleu("the cat", "the cat sat").unwrap();
    ensure((r1 - 0.6667).abs() < 1e-4, || format!("ROUGE-1 hand example {r1}"))?;
    ensure((rl - 0.75).abs() < 1e-9, || format!("ROUGE-L hand example {rl}"))?;
    ensure((b - 0.6065).abs() < 1e-3, || format!("BLEU hand example {b}"))?;
    Ok(format!(
        "{n} pairs x 4 metrics, max deviation {worst:.1e}; hand examples {r1:.4}, {rl:.4}, {b:.4}"
    ))
}

// ------------------------------------------------------------------ tracker

fn tracker_safety() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x7AC);
    for k in 0..10_000 {
        let n = rng.gen_range(1..=7);
        let start = random_tree(&mut rng, n);
        let len = rng.gen_range(0..=10);
        let mut batch = Vec::new();
        for salt in 0..len {
            let state = apply_updates(&start, &batch).map_err(|e| format!("sequence {k}: {e}"))?.tree;
            batch.push(random_valid_update(&mut rng, &state, salt));
        }
        let out = apply_updates(&start, &batch).map_err(|e| format!("sequence {k}: {e}"))?;
        IntentTree::from_nodes(out.tree.root().clone(), out.tree.nodes().cloned().collect(), out.tree.version())
            .map_err(|e| format!("sequence {k}: invalid tree {e}"))?;
        ensure(out.focus.iter().all(|f| out.tree.contains(f)), || {
            format!("sequence {k}: focus outside the tree")
        })?;
        let noops = apply_updates(&start, &vec![IntentUpdate::noop(); len.max(1)]).unwrap();
        ensure(noops.focus.is_empty(), || format!("sequence {k}: NOOP run has focus"))?;
    }
    Ok("10000 sequences valid, focus within tree, NOOP-only focus empty".into())
}

// --------------------------------------------------------------- playground

fn three_leaf_tree() -> IntentTree {
    serde_json::from_value(json!({"root": "r", "version": 0, "nodes": [
        {"id": "r", "text": "crawl news", "children": ["a", "b", "c"]},
        {"id": "a", "text": "fetch pages"},
        {"id": "b", "text": "extract text"},
        {"id": "c", "text": "save images"}
    ]}))
    .unwrap()
}

async fn playground_termination() -> Outcome {
    let mock = Arc::new(MockTransport::with_responder(DemoResponder));
    let gw = Gateway::mock(mock.clone());
    let t = Templates::builtin();
    let idle = r#"{"predicted_outcomes": "crashes", "errors": ["ImportError"], "verdicts": {}}"#;
    mock.script(Purpose::AnalyzeExecution, vec![MockStep::reply(idle); 12]);
    let stalled = run_loop(PlaygroundSession::new("crawl news", three_leaf_tree()), &gw, &t, 50)
        .await
        .map_err(|e| e.to_string())?;
    let rounds = stalled.session.transcript.len();
    ensure(stalled.session.status == PlaygroundStatus::Stalled && rounds == STAGNATION_LIMIT as usize, || {
        format!("zero-progress run: {:?} after {rounds} rounds", stalled.session.status)
    })?;

    let mock = Arc::new(MockTransport::with_responder(DemoResponder));
    let gw = Gateway::mock(mock.clone());
    let done = run_loop(PlaygroundSession::new("crawl news", three_leaf_tree()), &gw, &t, 50)
        .await
        .map_err(|e| e.to_string())?;
    let iterations = done.session.transcript.len();
    ensure(done.session.status == PlaygroundStatus::Completed, || {
        format!("completion run ended {:?}", done.session.status)
    })?;
    ensure(done.dataset.len() == iterations, || {
        format!("{} dataset lines for {iterations} iterations", done.dataset.len())
    })?;
    Ok(format!(
        "stalled at round {rounds}; completion run COMPLETED after {iterations} rounds with {iterations} dataset lines"
    ))
}

// ---------------------------------------------------------- valid tokens

async fn valid_token_accounting() -> Outcome {
    let triple = fixture("r1_triple.json");
    let code = fixture("r1_code.md");
    let mock = Arc::new(MockTransport::new());
    let gw = Gateway::mock(mock.clone());
    let t = Templates::builtin();
    mock.script(Purpose::GenerateCode, [MockStep::reply(code.clone()), MockStep::reply(code.clone()).with_usage(30, 77)]);
    mock.script(Purpose::ExtractTriple, [MockStep::reply(triple.clone()), MockStep::reply(triple.clone())]);
    mock.script(Purpose::StudentExtract, [MockStep::reply(triple.clone())]);
    let ex = Extractor::new(&gw, &t);
    let teacher = ex.teacher("crawl", None, "(none)").await.map_err(|e| e.to_string())?;
    let c_t = count_tokens(&code);
    ensure(teacher.timings.overhead_tokens == c_t, || {
        format!("teacher overhead {} != C_t tokens {c_t}", teacher.timings.overhead_tokens)
    })?;
    let reported = ex.teacher("crawl", None, "(none)").await.map_err(|e| e.to_string())?;
    ensure(reported.timings.overhead_tokens == 77, || {
        format!("teacher overhead {} != reported 77", reported.timings.overhead_tokens)
    })?;
    let student = ex.student("crawl", None).await.map_err(|e| e.to_string())?;
    let serialized = count_tokens(&student.triple.to_canonical_json());
    ensure(student.timings.valid_tokens == serialized && student.timings.overhead_tokens == 0, || {
        format!("student valid {} != serialized {serialized}", student.timings.valid_tokens)
    })?;
    let s = EfficiencyRecord::new(916, 10.0, "student").map_err(|e| e.to_string())?;
    let b = EfficiencyRecord::new(40, 10.0, "teacher").map_err(|e| e.to_string())?;
    let ratio = speedup(&s, &b).map_err(|e| e.to_string())?;
    ensure((ratio - 22.9).abs() <= 1e-9, || format!("speedup {ratio}"))?;
    Ok(format!(
        "teacher overhead {c_t} = C_t tokens; student valid {serialized} = serialized triple tokens; speedup {ratio}"
    ))
}

// ----------------------------------------------------- mock server process

fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../server/tests/fixtures").join(name)
}

fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap()
}

struct Server {
    child: Child,
    base: String,
}

impl Server {
    fn start(extra: &[&str], dir: &Path) -> Server {
        let mut child = Command::new(env!("CARGO_BIN_EXE_intentgraph"))
            .env_remove("INTENTGRAPH_CONFIG")
            .args(["serve", "--mock", "--listen", "127.0.0.1:0"])
            .args(extra)
            .current_dir(dir)
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("server binary starts");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
        let base = line.split_whitespace().nth(3).expect("listening banner").to_owned();
        Server { child, base }
    }

    fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn call(client: &reqwest::blocking::Client, url: String, body: Option<Value>) -> Result<Value, String> {
    let req = match body {
        Some(b) => client.post(&url).json(&b),
        None => client.get(&url),
    };
    let resp = req.send().map_err(|e| format!("{url}: {e}"))?;
    let status = resp.status();
    let v: Value = resp.json().map_err(|e| format!("{url}: {e}"))?;
    if status.is_success() {
        Ok(v)
    } else {
        Err(format!("{url}: {status} {v}"))
    }
}

fn sorted_delta(v: &Value) -> GraphDelta {
    let mut d: GraphDelta = serde_json::from_value(v.clone()).unwrap();
    let key = |x: &dyn erased_key::Key| x.key();
    d.added_nodes.sort_by_key(|n| key(n));
    d.relabelled.sort_by_key(|n| key(n));
    d.removed_nodes.sort();
    d.added_edges.sort();
    d.removed_edges.sort();
    d
}

mod erased_key {
    pub trait Key {
        fn key(&self) -> String;
    }
    impl<T: serde::Serialize> Key for T {
        fn key(&self) -> String {
            serde_json::to_string(self).unwrap()
        }
    }
}

fn walkthrough_script() -> Value {
    let r = |name: &str| json!({"reply": {"content": fixture(name)}});
    json!({
        "GENERATE_CODE": [r("r1_code.md"), r("r2_code.md")],
        "EXTRACT_TRIPLE": [r("r1_triple.json"), r("r2_triple.json")],
        "MODIFY_GRAPH": [r("modify_reply.md")],
        "CONFIRM_GENERATE": [r("confirm_code.md")],
        "PROPOSE_INTENT_UPDATES": [r("r2_propose.json")]
    })
}

fn end_to_end_mock_loop() -> Outcome {
    let schema: Value = serde_json::from_str(
        &std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schema/triple.schema.json")).unwrap(),
    )
    .unwrap();
    let validator = jsonschema::validator_for(&schema).map_err(|e| e.to_string())?;
    let valid = |stage: &str, v: &Value| -> Result<Triple, String> {
        if let Some(err) = validator.iter_errors(v).next() {
            return Err(format!("{stage}: schema violation {err}"));
        }
        Triple::from_value(v.clone()).map_err(|e| format!("{stage}: {e}"))
    };
    let expect_delta = |stage: &str, got: &Value, name: &str| -> Result<(), String> {
        let want: Value = serde_json::from_str(&fixture(name)).unwrap();
        ensure(sorted_delta(got) == sorted_delta(&want), || format!("{stage}: delta {got} differs from {name}"))
    };

    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("script.json");
    std::fs::write(&script, walkthrough_script().to_string()).unwrap();
    let audit = dir.path().join("audit.jsonl");
    let started = Instant::now();
    let server = Server::start(
        &["--no-student", "--mock-script", script.to_str().unwrap(), "--audit-log", audit.to_str().unwrap()],
        dir.path(),
    );
    let client = reqwest::blocking::Client::new();
    let base = server.base.clone();
    let id = call(&client, format!("{base}/sessions"), Some(json!({})))?["id"].as_str().unwrap().to_owned();
    let s = format!("{base}/sessions/{id}");

    let r1 = call(&client, format!("{s}/prompt"), Some(json!({"prompt": "Write a crawler that fetches news articles and prints their text"})))?;
    let t1 = valid("round 1", &r1["triple"])?;
    ensure(t1 == Triple::from_json(&fixture("r1_triple.json")).unwrap(), || "round 1 triple".into())?;
    let added = r1["graph_delta"]["added_nodes"].as_array().map_or(0, Vec::len);
    ensure(added == t1.graph().len(), || format!("round 1 delta adds {added} nodes"))?;

    let edits: Value = serde_json::from_str(&fixture("edits.json")).unwrap();
    let e = call(&client, format!("{s}/edits"), Some(json!({"edits": edits})))?;
    let te = valid("edits", &e["triple"])?;
    ensure(te == Triple::from_json(&fixture("after_edits.json")).unwrap(), || "triple after edits".into())?;
    expect_delta("edits", &e["graph_delta"], "edits_delta.json")?;

    let m = call(&client, format!("{s}/modify"), Some(json!({"instruction": "also download article images and save images to disk"})))?;
    valid("modify", &m["triple"])?;
    expect_delta("modify", &m["graph_delta"], "modify_delta.json")?;
    let hl = &m["view"]["highlight"];
    ensure(hl.as_array().is_some_and(|h| h.contains(&json!("m1")) && h.contains(&json!("m2"))), || {
        format!("modify highlight {hl}")
    })?;
    let members = call(&client, format!("{s}/supernodes/u:i2"), None)?;
    ensure(members["member_ids"] == json!(["g3", "u1"]), || format!("expansion {members}"))?;

    let c = call(&client, format!("{s}/confirm"), Some(json!({})))?;
    ensure(c["status"] == "GENERATED", || format!("confirm {c}"))?;
    let state = call(&client, s.clone(), None)?;
    let confirmed = valid("confirmed", &state["current_triple"])?.to_canonical_json();
    let log = std::fs::read_to_string(&audit).unwrap();
    let sent = log
        .lines()
        .filter_map(|l| serde_json::from_str::<Value>(l).ok())
        .filter(|v| v["purpose"] == "CONFIRM_GENERATE")
        .last()
        .ok_or("no confirmation call in the audit log")?;
    let user = sent["messages"].as_array().and_then(|m| m.last()).and_then(|m| m["content"].as_str()).unwrap_or("");
    ensure(user.contains(&confirmed), || "conditioning input lacks the serialized graph".into())?;

    let r2 = call(&client, format!("{s}/prompt"), Some(json!({"prompt": "Also save the article metadata as JSON"})))?;
    let t2 = valid("round 2", &r2["triple"])?;
    ensure(t2 == Triple::from_json(&fixture("r2_triple.json")).unwrap(), || "round 2 triple".into())?;
    expect_delta("round 2", &r2["graph_delta"], "r2_delta.json")?;
    let secs = started.elapsed().as_secs_f64();
    server.kill();
    ensure(secs < 5.0, || format!("took {secs:.2}s (limit 5s)"))?;
    Ok(format!("2 rounds, 5 triples schema-valid, deltas match fixtures, conditioning byte-exact, {secs:.2}s"))
}

fn crash_safety() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let data_arg = data.to_str().unwrap().to_owned();
    let client = reqwest::blocking::Client::new();
    let mut rng = StdRng::seed_from_u64(0xC4A5);
    let mut server = Server::start(&["--data-dir", &data_arg], dir.path());
    let id = call(&client, format!("{}/sessions", server.base), Some(json!({})))?["id"].as_str().unwrap().to_owned();
    let prompts = ["fetch pages and parse html", "store results in sqlite, add retries", "render a report"];
    let mut mid_flight = 0;
    for point in 0..50 {
        let s = format!("{}/sessions/{id}", server.base);
        for _ in 0..rng.gen_range(0..4) {
            let state = call(&client, s.clone(), None)?;
            let status = state["status"].as_str().unwrap_or_default().to_owned();
            let _ = match (status.as_str(), rng.gen_range(0..4)) {
                ("GRAPH_REVIEW", 0) => call(&client, format!("{s}/edits"), Some(json!({"edits": [{"op": "ADD_NODE", "label": format!("step {point}")}]}))),
                ("GRAPH_REVIEW", 1) => call(&client, format!("{s}/modify"), Some(json!({"instruction": format!("log step {point}")}))),
                ("GRAPH_REVIEW", _) => call(&client, format!("{s}/confirm"), Some(json!({}))),
                (_, _) => call(&client, format!("{s}/prompt"), Some(json!({"prompt": prompts[rng.gen_range(0..3)]}))),
            };
        }
        let committed = call(&client, s.clone(), None)?;
        // Every other point also kills while a request may be in flight.
        let racing = point % 2 == 1;
        if racing {
            let url = if committed["status"] == "GRAPH_REVIEW" { format!("{s}/confirm") } else { format!("{s}/prompt") };
            let body = json!({"prompt": "add caching"});
            std::thread::spawn(move || {
                let _ = reqwest::blocking::Client::new().post(url).json(&body).timeout(Duration::from_secs(2)).send();
            });
            std::thread::sleep(Duration::from_micros(rng.gen_range(0..3000)));
        }
        server.kill();
        server = Server::start(&["--data-dir", &data_arg], dir.path());
        let reloaded = call(&client, format!("{}/sessions/{id}", server.base), None)?;
        let before = committed["seq"].as_u64().unwrap();
        let after = reloaded["seq"].as_u64().unwrap();
        if racing && after == before + 1 {
            mid_flight += 1;
            continue;
        }
        ensure(reloaded == committed, || {
            format!("interrupt point {point}: reloaded seq {after} differs from committed seq {before}")
        })?;
    }
    server.kill();
    Ok(format!("50 kill/restart points, all reloads equal ({mid_flight} racing kills landed after the commit)"))
}

// -------------------------------------------------------------------- main

fn main() -> ExitCode {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
    let criteria: Vec<(&str, Box<dyn FnOnce() -> Outcome>)> = vec![
        ("simplifier oracle equivalence", Box::new(simplifier_oracle_equivalence)),
        ("simplifier fixed points", Box::new(simplifier_fixed_points)),
        ("quotient soundness and reachability", Box::new(quotient_soundness)),
        ("metrics oracle", Box::new(metrics_oracle)),
        ("intent-tracker safety", Box::new(tracker_safety)),
        ("playground termination", Box::new(|| rt.block_on(playground_termination()))),
        ("end-to-end mock loop", Box::new(end_to_end_mock_loop)),
        ("valid-token accounting", Box::new(|| rt.block_on(valid_token_accounting()))),
        ("crash safety", Box::new(crash_safety)),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panicked: {:?}", p.downcast_ref::<String>().map(String::as_str).or(p.downcast_ref::<&str>().copied()))));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.2}s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{secs:.2}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
