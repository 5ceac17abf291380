//! Triple extraction: the two-stage teacher path and the one-step student path.

use intentgraph_core::metrics::EfficiencyRecord;
use intentgraph_core::triple::TripleDoc;
use intentgraph_core::{MetricError, Triple};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{count_tokens, ChatExchange, Gateway, GatewayError, Purpose};
use crate::reconcile::reconcile_ids;
use crate::structured::{ask_validated, extract_code, extract_json, AskError};
use crate::templates::{TemplateError, Templates};

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("invalid triple output: {0}")]
    InvalidTripleOutput(String),
}

impl From<AskError> for ExtractError {
    fn from(e: AskError) -> Self {
        match e {
            AskError::Gateway(g) => ExtractError::Gateway(g),
            AskError::Template(t) => ExtractError::Template(t),
            AskError::Rejected(r) => ExtractError::InvalidTripleOutput(r),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExtractionPath {
    Teacher,
    Student,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTiming {
    pub purpose: Purpose,
    pub latency_ms: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl StageTiming {
    fn from_exchanges(exchanges: &[ChatExchange]) -> Vec<Self> {
        exchanges
            .iter()
            .map(|e| StageTiming {
                purpose: e.purpose,
                latency_ms: e.latency_ms,
                prompt_tokens: e.usage.prompt_tokens,
                completion_tokens: e.usage.completion_tokens,
            })
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timings {
    pub stages: Vec<StageTiming>,
    /// Whitespace tokens of the serialized output triple.
    pub valid_tokens: u64,
    /// Tokens of the intermediate code, teacher path only.
    pub overhead_tokens: u64,
}

impl Timings {
    pub fn total_latency_ms(&self) -> u64 {
        self.stages.iter().map(|s| s.latency_ms).sum()
    }

    /// Valid tokens over total wall time.
    pub fn efficiency(&self, hardware_tag: &str) -> Result<EfficiencyRecord, MetricError> {
        EfficiencyRecord::new(
            self.valid_tokens,
            self.total_latency_ms() as f64 / 1000.0,
            hardware_tag,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionRecord {
    pub prompt: String,
    /// `None` on the first round.
    pub prev_triple: Option<Triple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intermediate_code: Option<String>,
    pub triple: Triple,
    pub path: ExtractionPath,
    pub timings: Timings,
    /// Repair retries needed before the output validated.
    pub repairs: u32,
}

/// Round the next triple must carry.
pub fn next_round(prev: Option<&Triple>) -> u64 {
    prev.map_or(1, |p| p.round() + 1)
}

fn serialized_prev(prev: Option<&Triple>) -> String {
    prev.map_or_else(|| "none".to_owned(), Triple::to_canonical_json)
}

/// Validates a model reply as the triple for `round`.
///
/// The round and tree version are overwritten with `round`, and fresh ids
/// that match a vanished node of `prev` are re-keyed before validation.
pub fn parse_triple_reply(reply: &str, prev: Option<&Triple>, round: u64) -> Result<Triple, String> {
    let value = extract_json(reply).ok_or("reply contains no JSON document")?;
    let mut doc: TripleDoc =
        serde_json::from_value(value).map_err(|e| format!("not a triple document: {e}"))?;
    doc.round = round;
    doc.intent_tree.version = round;
    if let Some(prev) = prev {
        reconcile_ids(&mut doc, prev);
    }
    doc.validate().map_err(|e| e.to_string())
}

/// Extraction against one gateway with one template set.
#[derive(Clone, Copy, Debug)]
pub struct Extractor<'a> {
    pub gateway: &'a Gateway,
    pub templates: &'a Templates,
}

impl<'a> Extractor<'a> {
    pub fn new(gateway: &'a Gateway, templates: &'a Templates) -> Self {
        Self { gateway, templates }
    }

    /// Stage 1 asks the conversational model for code, stage 2 asks the
    /// extractor model for the triple behind it.
    pub async fn teacher(
        &self,
        prompt: &str,
        prev: Option<&Triple>,
        history: &str,
    ) -> Result<ExtractionRecord, ExtractError> {
        let messages = self.templates.render(
            "generate_code",
            &[("history", history), ("prompt", prompt)],
        )?;
        let request = crate::gateway::ChatRequest::new(Purpose::GenerateCode, messages)
            .with_context(serde_json::json!({ "prompt": prompt }));
        let stage1 = self.gateway.complete(request).await?;
        let code = extract_code(&stage1.response);
        let mut record = self.teacher_stage2(prompt, &code, prev).await?;
        record.timings.overhead_tokens = stage1.usage.completion_tokens;
        record.timings.stages.insert(0, StageTiming::from_exchanges(&[stage1]).remove(0));
        Ok(record)
    }

    /// Teacher stage 2 alone, for callers that already hold the code.
    pub async fn teacher_stage2(
        &self,
        prompt: &str,
        code: &str,
        prev: Option<&Triple>,
    ) -> Result<ExtractionRecord, ExtractError> {
        let round = next_round(prev);
        let prev_json = serialized_prev(prev);
        let round_s = round.to_string();
        let messages = self.templates.render(
            "extract_triple",
            &[
                ("prompt", prompt),
                ("code", code),
                ("prev_triple", prev_json.as_str()),
                ("round", round_s.as_str()),
            ],
        )?;
        let context = serde_json::json!({
            "prompt": prompt,
            "code": code,
            "prev_triple": prev,
            "round": round,
        });
        let answer = ask_validated(
            self.gateway,
            self.templates,
            Purpose::ExtractTriple,
            messages,
            context,
            |reply| parse_triple_reply(reply, prev, round),
        )
        .await?;
        let valid_tokens = count_tokens(&answer.value.to_canonical_json());
        Ok(ExtractionRecord {
            prompt: prompt.to_owned(),
            prev_triple: prev.cloned(),
            intermediate_code: Some(code.to_owned()),
            path: ExtractionPath::Teacher,
            timings: Timings {
                stages: StageTiming::from_exchanges(&answer.exchanges),
                valid_tokens,
                overhead_tokens: count_tokens(code),
            },
            repairs: answer.repairs,
            triple: answer.value,
        })
    }

    /// One call to the student model.
    pub async fn student(
        &self,
        prompt: &str,
        prev: Option<&Triple>,
    ) -> Result<ExtractionRecord, ExtractError> {
        let round = next_round(prev);
        let prev_json = serialized_prev(prev);
        let round_s = round.to_string();
        let messages = self.templates.render(
            "student_extract",
            &[
                ("prompt", prompt),
                ("prev_triple", prev_json.as_str()),
                ("round", round_s.as_str()),
            ],
        )?;
        let context = serde_json::json!({
            "prompt": prompt,
            "prev_triple": prev,
            "round": round,
        });
        let answer = ask_validated(
            self.gateway,
            self.templates,
            Purpose::StudentExtract,
            messages,
            context,
            |reply| parse_triple_reply(reply, prev, round),
        )
        .await?;
        let valid_tokens = count_tokens(&answer.value.to_canonical_json());
        Ok(ExtractionRecord {
            prompt: prompt.to_owned(),
            prev_triple: prev.cloned(),
            intermediate_code: None,
            path: ExtractionPath::Student,
            timings: Timings {
                stages: StageTiming::from_exchanges(&answer.exchanges),
                valid_tokens,
                overhead_tokens: 0,
            },
            repairs: answer.repairs,
            triple: answer.value,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistillationInput {
    pub prompt: String,
    /// Canonical text of the previous triple, `null` on the first round.
    pub prev_triple: Option<String>,
}

/// One line of the distillation dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistillationLine {
    pub input: DistillationInput,
    /// Canonical text of the teacher's triple.
    pub target: String,
    pub round: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DistillError {
    #[error("only teacher records become training pairs")]
    NotTeacher,
}

pub fn distillation_pair(record: &ExtractionRecord) -> Result<DistillationLine, DistillError> {
    if record.path != ExtractionPath::Teacher {
        return Err(DistillError::NotTeacher);
    }
    Ok(DistillationLine {
        input: DistillationInput {
            prompt: record.prompt.clone(),
            prev_triple: record.prev_triple.as_ref().map(Triple::to_canonical_json),
        },
        target: record.triple.to_canonical_json(),
        round: record.triple.round(),
    })
}

/// The record as one JSON line, without trailing newline.
pub fn emit_distillation_pair(record: &ExtractionRecord) -> Result<String, DistillError> {
    let line = distillation_pair(record)?;
    Ok(serde_json::to_string(&line).expect("dataset lines serialize"))
}
