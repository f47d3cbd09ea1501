//! Natural-language front end: scene-aware prompts, a pluggable chat client,
//! an offline keyword grammar, feedback classification, delta updates and the
//! ASCII preview that drives the confirmation loop.

mod dialogue;
mod fallback;
mod llm;
mod preview;
mod prompt;

pub use dialogue::{run_dialogue, DialogueIo, DialogueOutcome, DialogueState, Feedback, ScriptedIo, DEFAULT_MAX_ROUNDS};
pub use fallback::fallback_parse;
pub use llm::{ChatMessage, ChatTransport, HttpTransport, LlmClient, LlmConfig, SentinelTransport};
pub use preview::{ascii_preview, cell_center, cell_of, LEGEND, PREVIEW_COLS, PREVIEW_ROWS};
pub use prompt::{build_scene_prompt, build_update_prompt, site_coordinate_string, CLASSIFY_PROMPT};

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{postprocess, resolve, ConstraintError, ParsedIntent};
use crate::scenario::Scenario;

/// Why the language-model path did not produce a result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "message", rename_all = "snake_case")]
pub enum LlmFailure {
    /// Request never produced a reply: network, HTTP status, or response shape.
    Transport(String),
    /// Reply arrived but was unusable.
    Reply(String),
}

impl fmt::Display for LlmFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LlmFailure::Transport(m) => write!(f, "transport: {m}"),
            LlmFailure::Reply(m) => write!(f, "reply: {m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntentError {
    #[error("empty input")]
    EmptyInput,
    #[error("no recognizable intent")]
    NoIntent,
    #[error("no recognizable modification")]
    NoModification,
    #[error("site {0} is not in the scenario")]
    UnknownSite(u32),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error("could not parse intent (llm {llm}; fallback: {fallback})")]
    BothFailed { llm: LlmFailure, fallback: String },
    #[error("round limit of {0} reached without confirmation")]
    RoundLimit(usize),
    #[error("no reply from the user")]
    NoReply,
}

impl IntentError {
    /// True when the language model was unreachable and the fallback also failed.
    pub fn is_transport_failure(&self) -> bool {
        matches!(self, IntentError::BothFailed { llm: LlmFailure::Transport(_), .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntentClass {
    Confirm,
    Modify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParsePath {
    Llm,
    Fallback,
}

impl ParsePath {
    pub fn as_str(self) -> &'static str {
        match self {
            ParsePath::Llm => "llm",
            ParsePath::Fallback => "fallback",
        }
    }
}

/// A parsed or updated intent together with the path that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentParse {
    pub intent: ParsedIntent,
    pub path: ParsePath,
    /// Set when the language model was tried and failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub llm_failure: Option<LlmFailure>,
}

fn ask_llm(llm: &LlmClient, system: String, user: &str, scenario: &Scenario, check: bool) -> Result<ParsedIntent, LlmFailure> {
    let reply = llm
        .chat(&[ChatMessage::system(system), ChatMessage::user(user)], llm.config.max_tokens_parse)
        .map_err(LlmFailure::Transport)?;
    let intent = postprocess(&reply, scenario).map_err(|e| LlmFailure::Reply(e.to_string()))?;
    if check {
        resolve(&intent, scenario).map_err(|e| LlmFailure::Reply(e.to_string()))?;
    }
    Ok(intent)
}

fn finish(
    llm_failure: Option<LlmFailure>,
    fallback: Result<ParsedIntent, IntentError>,
) -> Result<IntentParse, IntentError> {
    match (fallback, llm_failure) {
        (Ok(intent), llm_failure) => Ok(IntentParse { intent, path: ParsePath::Fallback, llm_failure }),
        (Err(e), Some(llm)) => Err(IntentError::BothFailed { llm, fallback: e.to_string() }),
        (Err(e), None) => Err(e),
    }
}

/// Language model first when enabled, keyword grammar otherwise or on any failure.
pub fn parse_intent(user_text: &str, scenario: &Scenario, llm: &LlmClient) -> Result<IntentParse, IntentError> {
    if user_text.trim().is_empty() {
        return Err(IntentError::EmptyInput);
    }
    let mut llm_failure = None;
    if llm.is_enabled() {
        match ask_llm(llm, build_scene_prompt(scenario), user_text, scenario, false) {
            Ok(intent) => return Ok(IntentParse { intent, path: ParsePath::Llm, llm_failure: None }),
            Err(f) => llm_failure = Some(f),
        }
    }
    finish(llm_failure, fallback_parse(user_text, scenario))
}

const CONFIRM_WORDS: [&str; 7] = ["yes", "ok", "okay", "confirm", "correct", "good", "proceed"];
const CONFIRM_PHRASES: [[&str; 2]; 2] = [["looks", "good"], ["go", "ahead"]];
const NEGATIONS: [&str; 8] = ["no", "not", "but", "however", "change", "instead", "wrong", "don't"];

/// Keyword layer: confirm iff a confirmation keyword is present and no negation marker is.
pub fn classify_keywords(user_text: &str) -> IntentClass {
    let w = fallback::words(user_text);
    let has_confirm = w.iter().any(|t| CONFIRM_WORDS.contains(&t.as_str()))
        || w.windows(2).any(|p| CONFIRM_PHRASES.iter().any(|ph| p[0] == ph[0] && p[1] == ph[1]));
    let has_negation = w.iter().any(|t| NEGATIONS.contains(&t.as_str()));
    if has_confirm && !has_negation {
        IntentClass::Confirm
    } else {
        IntentClass::Modify
    }
}

fn parse_class_reply(reply: &str) -> Option<IntentClass> {
    let t = reply.trim().trim_matches(|c: char| !c.is_ascii_alphabetic()).to_ascii_uppercase();
    match t.as_str() {
        "CONFIRM" => Some(IntentClass::Confirm),
        "MODIFY" => Some(IntentClass::Modify),
        _ => None,
    }
}

/// Model classification when enabled and well-formed, keyword rule otherwise.
pub fn classify_feedback(user_text: &str, llm: &LlmClient) -> IntentClass {
    if llm.is_enabled() {
        let msgs = [ChatMessage::system(CLASSIFY_PROMPT), ChatMessage::user(user_text)];
        if let Some(c) = llm.chat(&msgs, llm.config.max_tokens_classify).ok().as_deref().and_then(parse_class_reply) {
            return c;
        }
    }
    classify_keywords(user_text)
}

/// Delta update of `current`. Never touches `current`; the result always
/// resolves to at least one bright site and one feasible candidate.
pub fn incremental_update(
    current: &ParsedIntent,
    modification_text: &str,
    scenario: &Scenario,
    llm: &LlmClient,
) -> Result<IntentParse, IntentError> {
    if modification_text.trim().is_empty() {
        return Err(IntentError::EmptyInput);
    }
    let mut llm_failure = None;
    if llm.is_enabled() {
        let user = build_update_prompt(current, modification_text);
        match ask_llm(llm, build_scene_prompt(scenario), &user, scenario, true) {
            Ok(intent) => return Ok(IntentParse { intent, path: ParsePath::Llm, llm_failure: None }),
            Err(f) => llm_failure = Some(f),
        }
    }
    let merged = fallback::fragment(modification_text, scenario)
        .and_then(|frag| fallback::merge(current, &frag))
        .and_then(|intent| resolve(&intent, scenario).map(|_| intent).map_err(IntentError::from));
    finish(llm_failure, merged)
}

/// Intersection over union of two site sets; 1 when both are empty.
pub fn site_set_iou(a: &[u32], b: &[u32]) -> f64 {
    let a: BTreeSet<u32> = a.iter().copied().collect();
    let b: BTreeSet<u32> = b.iter().copied().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}
