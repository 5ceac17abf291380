//! Deterministic stand-in for every model role, used by `--mock`.
//!
//! Replies are derived from the request's structured context only, so the
//! same inputs always produce the same outputs. Prompts are split into
//! clauses on `and`, commas, semicolons and full stops; each clause becomes
//! one intent and one task.

use std::collections::BTreeSet;

use intentgraph_core::triple::{IntentTreeDoc, MappingEntry, TripleDoc};
use intentgraph_core::{
    EdgeKind, IntentNode, IntentState, TaskEdge, TaskNode, TaskOrigin,
};
use serde_json::{json, Value};

use crate::gateway::{ChatRequest, Purpose, Responder};

#[derive(Clone, Copy, Debug, Default)]
pub struct DemoResponder;

/// Clauses of a request, trimmed and deduplicated, in order.
pub fn clauses(text: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    text.replace(" and ", ",")
        .split([',', ';', '.', '\n'])
        .map(|c| c.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|c| !c.is_empty())
        .filter(|c| seen.insert(c.to_lowercase()))
        .collect()
}

fn fresh_id(prefix: &str, taken: &BTreeSet<String>) -> String {
    (1..)
        .map(|n| format!("{prefix}{n}"))
        .find(|id| !taken.contains(id))
        .expect("unbounded search")
}

fn str_field<'a>(ctx: &'a Value, key: &str) -> Option<&'a str> {
    ctx.get(key).and_then(Value::as_str)
}

/// Clauses of `prompt` not yet present as intent texts, with the ids the
/// tracker and the extractor both assign to them in `round`.
fn new_intents(tree: &IntentTreeDoc, prompt: &str, round: u64) -> Vec<(String, String)> {
    let known: BTreeSet<String> = tree.nodes.iter().map(|n| n.text.to_lowercase()).collect();
    let ids: BTreeSet<String> = tree.nodes.iter().map(|n| n.id.to_string()).collect();
    clauses(prompt)
        .into_iter()
        .filter(|c| !known.contains(&c.to_lowercase()))
        .enumerate()
        .map(|(k, c)| {
            let mut id = format!("i{round}.{}", k + 1);
            while ids.contains(&id) {
                id.push('\'');
            }
            (id, c)
        })
        .collect()
}

fn propose(ctx: &Value) -> Option<String> {
    let tree: IntentTreeDoc = serde_json::from_value(ctx.get("tree")?.clone()).ok()?;
    let prompt = str_field(ctx, "prompt")?;
    let adds = new_intents(&tree, prompt, tree.version + 1);
    let updates: Vec<Value> = if adds.is_empty() {
        vec![json!({"op": "NOOP"})]
    } else {
        adds.into_iter()
            .map(|(id, text)| json!({"op": "ADD", "parent_id": tree.root, "text": text, "id": id}))
            .collect()
    };
    Some(json!({ "updates": updates }).to_string())
}

fn extract(ctx: &Value) -> Option<String> {
    let prompt = str_field(ctx, "prompt")?;
    let round = ctx.get("round")?.as_u64()?;
    let mut doc: TripleDoc = match ctx.get("prev_triple") {
        Some(v) if !v.is_null() => serde_json::from_value(v.clone()).ok()?,
        _ => TripleDoc {
            intent_tree: IntentTreeDoc {
                root: "i0".into(),
                version: 0,
                nodes: vec![IntentNode::new("i0", summary(prompt))],
            },
            graph: Default::default(),
            mapping: Vec::new(),
            round: 0,
        },
    };
    let mut task_ids: BTreeSet<String> = doc.graph.nodes.iter().map(|n| n.id.to_string()).collect();
    let mut last = doc.graph.nodes.last().map(|n| n.id.clone());
    for (intent_id, text) in new_intents(&doc.intent_tree, prompt, round) {
        let root = doc.intent_tree.root.clone();
        doc.intent_tree
            .nodes
            .iter_mut()
            .find(|n| n.id == root)?
            .children
            .push(intent_id.as_str().into());
        doc.intent_tree
            .nodes
            .push(IntentNode::new(intent_id.as_str(), text.as_str()));
        let task_id = fresh_id(&format!("g{round}."), &task_ids);
        task_ids.insert(task_id.clone());
        doc.graph
            .nodes
            .push(TaskNode::new(task_id.as_str(), format!("implement: {text}")));
        if let Some(prev) = &last {
            doc.graph
                .edges
                .push(TaskEdge::new(prev.clone(), task_id.as_str(), EdgeKind::DataFlow));
        }
        doc.mapping.push(MappingEntry {
            intent_id: intent_id.as_str().into(),
            task_node_ids: vec![task_id.as_str().into()],
        });
        last = Some(task_id.as_str().into());
    }
    doc.round = round;
    doc.intent_tree.version = round;
    serde_json::to_string_pretty(&doc).ok()
}

fn summary(text: &str) -> String {
    let words: Vec<&str> = text.split_whitespace().take(12).collect();
    if words.is_empty() {
        "goal".to_owned()
    } else {
        words.join(" ")
    }
}

fn modify(ctx: &Value) -> Option<String> {
    let instruction = str_field(ctx, "instruction")?;
    let mut doc: TripleDoc = serde_json::from_value(ctx.get("triple")?.clone()).ok()?;
    let mut taken: BTreeSet<String> = doc.graph.nodes.iter().map(|n| n.id.to_string()).collect();
    let owner = doc
        .graph
        .nodes
        .last()
        .and_then(|n| {
            doc.mapping
                .iter()
                .find(|m| m.task_node_ids.contains(&n.id))
                .map(|m| m.intent_id.clone())
        })
        .unwrap_or_else(|| doc.intent_tree.root.clone());
    let mut last = doc.graph.nodes.last().map(|n| n.id.clone());
    let mut added = Vec::new();
    for clause in clauses(instruction) {
        let id = fresh_id("m", &taken);
        taken.insert(id.clone());
        doc.graph.nodes.push(
            TaskNode::new(id.as_str(), clause).with_origin(TaskOrigin::NlModified),
        );
        if let Some(prev) = &last {
            doc.graph
                .edges
                .push(TaskEdge::dependency(prev.clone(), id.as_str()));
        }
        last = Some(id.as_str().into());
        added.push(id.as_str().into());
    }
    if !added.is_empty() {
        match doc.mapping.iter_mut().find(|m| m.intent_id == owner) {
            Some(m) => m.task_node_ids.extend(added),
            None => doc.mapping.push(MappingEntry {
                intent_id: owner,
                task_node_ids: added,
            }),
        }
    }
    serde_json::to_string_pretty(&doc).ok()
}

fn ident(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    let s = s.trim_matches('_').to_owned();
    if s.is_empty() {
        "step".to_owned()
    } else {
        s
    }
}

fn code_for(steps: &[String]) -> String {
    let mut out = String::from("```python\n");
    for (i, s) in steps.iter().enumerate() {
        out.push_str(&format!("def step_{}_{}():\n    \"\"\"{}\"\"\"\n    return None\n\n", i + 1, ident(s), s.replace('"', "'")));
    }
    out.push_str("def main():\n");
    if steps.is_empty() {
        out.push_str("    pass\n");
    }
    for (i, s) in steps.iter().enumerate() {
        out.push_str(&format!("    step_{}_{}()\n", i + 1, ident(s)));
    }
    out.push_str("\nif __name__ == \"__main__\":\n    main()\n```");
    out
}

fn generate(ctx: &Value) -> Option<String> {
    Some(code_for(&clauses(str_field(ctx, "prompt")?)))
}

fn confirm(ctx: &Value) -> Option<String> {
    let doc: TripleDoc = serde_json::from_value(ctx.get("triple")?.clone()).ok()?;
    let steps: Vec<String> = doc.graph.nodes.iter().map(|n| n.label.clone()).collect();
    Some(code_for(&steps))
}

fn construct(ctx: &Value) -> Option<String> {
    let description = str_field(ctx, "description")?;
    let mut parts = clauses(description);
    if parts.len() < 2 {
        let base = summary(description);
        parts = vec![format!("prepare inputs for {base}"), format!("produce results for {base}")];
    }
    let mut nodes = vec![json!({
        "id": "i0",
        "text": summary(description),
        "children": (1..=parts.len()).map(|k| format!("i{k}")).collect::<Vec<_>>(),
    })];
    for (k, p) in parts.iter().enumerate() {
        nodes.push(json!({"id": format!("i{}", k + 1), "text": p}));
    }
    Some(json!({"root": "i0", "nodes": nodes}).to_string())
}

fn paraphrase(ctx: &Value) -> Option<String> {
    let mut tree: IntentTreeDoc = serde_json::from_value(ctx.get("tree")?.clone()).ok()?;
    let variant = ctx.get("variant")?.as_u64()?;
    for n in &mut tree.nodes {
        n.text = format!("{} (phrasing {variant})", n.text);
    }
    serde_json::to_string(&tree).ok()
}

fn simulate(ctx: &Value) -> Option<String> {
    let target = str_field(ctx, "target_text")?;
    let round = ctx.get("round")?.as_u64()?;
    Some(if round <= 1 {
        format!("Could you help me {target}?")
    } else {
        format!("Round {round}: next I need to {target}, handled precisely please.")
    })
}

fn analyze(ctx: &Value) -> Option<String> {
    let tree: IntentTreeDoc = serde_json::from_value(ctx.get("tree")?.clone()).ok()?;
    let has_children: BTreeSet<&str> = tree
        .nodes
        .iter()
        .filter(|n| !n.children.is_empty())
        .map(|n| n.id.as_str())
        .collect();
    let mut order = Vec::new();
    let mut stack = vec![tree.root.as_str()];
    while let Some(id) = stack.pop() {
        order.push(id);
        if let Some(n) = tree.nodes.iter().find(|n| n.id.as_str() == id) {
            stack.extend(n.children.iter().rev().map(|c| c.as_str()));
        }
    }
    let target = order.into_iter().find(|id| {
        !has_children.contains(id)
            && tree
                .nodes
                .iter()
                .any(|n| n.id.as_str() == *id && n.state == IntentState::NotCompleted)
    });
    let verdicts = match target {
        Some(id) => json!({ id: "COMPLETED" }),
        None => json!({}),
    };
    Some(
        json!({
            "predicted_outcomes": "program runs to completion",
            "file_changes": [],
            "errors": [],
            "verdicts": verdicts,
        })
        .to_string(),
    )
}

impl Responder for DemoResponder {
    fn respond(&self, request: &ChatRequest) -> Option<String> {
        let ctx = &request.context;
        match request.purpose {
            Purpose::ProposeIntentUpdates => propose(ctx),
            Purpose::ExtractTriple | Purpose::StudentExtract => extract(ctx),
            Purpose::ModifyGraph => modify(ctx),
            Purpose::GenerateCode => generate(ctx),
            Purpose::ConfirmGenerate => confirm(ctx),
            Purpose::ConstructIntentTree => construct(ctx),
            Purpose::ParaphraseIntentTree => paraphrase(ctx),
            Purpose::SimulateUser => simulate(ctx),
            Purpose::AnalyzeExecution => analyze(ctx),
        }
    }
}
