use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::constraints::{resolve, ConstraintSet, ParsedIntent};
use crate::scenario::Scenario;

use super::{ascii_preview, classify_feedback, incremental_update, parse_intent, IntentClass, IntentError, LlmClient, ParsePath};
use super::{PREVIEW_COLS, PREVIEW_ROWS};

pub const DEFAULT_MAX_ROUNDS: usize = 5;

/// One session of the confirmation loop. A round is one previewed constraint set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueState {
    pub round: usize,
    pub max_rounds: usize,
    pub current_intent: ParsedIntent,
    pub current_constraints: ConstraintSet,
    pub parser_path: ParsePath,
    /// (user text, system reply) pairs.
    pub history: Vec<(String, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feedback {
    Confirmed,
    Modified,
}

fn preview(cs: &ConstraintSet, scenario: &Scenario) -> String {
    ascii_preview(cs, scenario, PREVIEW_COLS, PREVIEW_ROWS)
}

impl DialogueState {
    /// Parse and resolve the first request; round 1 on success.
    pub fn start(text: &str, scenario: &Scenario, llm: &LlmClient, max_rounds: usize) -> Result<Self, IntentError> {
        let parsed = parse_intent(text, scenario, llm)?;
        let cs = resolve(&parsed.intent, scenario)?;
        let reply = preview(&cs, scenario);
        Ok(DialogueState {
            round: 1,
            max_rounds: max_rounds.max(1),
            current_intent: parsed.intent,
            current_constraints: cs,
            parser_path: parsed.path,
            history: vec![(text.to_string(), reply)],
        })
    }

    pub fn preview(&self, scenario: &Scenario) -> String {
        preview(&self.current_constraints, scenario)
    }

    pub fn classify(&self, text: &str, llm: &LlmClient) -> IntentClass {
        classify_feedback(text, llm)
    }

    /// Handle one reply. On error the state is unchanged; a modification at the
    /// last round is refused with `RoundLimit`.
    pub fn feedback(&mut self, text: &str, scenario: &Scenario, llm: &LlmClient) -> Result<Feedback, IntentError> {
        match self.classify(text, llm) {
            IntentClass::Confirm => {
                self.history.push((text.to_string(), "confirmed".into()));
                Ok(Feedback::Confirmed)
            }
            IntentClass::Modify => self.modify(text, scenario, llm).map(|_| Feedback::Modified),
        }
    }

    /// Apply a modification regardless of how the reply would classify.
    pub fn modify(&mut self, text: &str, scenario: &Scenario, llm: &LlmClient) -> Result<(), IntentError> {
        if self.round >= self.max_rounds {
            return Err(IntentError::RoundLimit(self.max_rounds));
        }
        let updated = incremental_update(&self.current_intent, text, scenario, llm)?;
        let cs = resolve(&updated.intent, scenario)?;
        let reply = preview(&cs, scenario);
        self.round += 1;
        self.current_intent = updated.intent;
        self.current_constraints = cs;
        self.parser_path = updated.path;
        self.history.push((text.to_string(), reply));
        Ok(())
    }
}

/// Where the loop reads replies and writes previews.
pub trait DialogueIo {
    fn show(&mut self, text: &str);
    /// `None` when the user has nothing more to say.
    fn ask(&mut self, prompt: &str) -> Option<String>;
}

/// Replays canned replies and records everything shown.
#[derive(Debug, Clone, Default)]
pub struct ScriptedIo {
    replies: VecDeque<String>,
    pub shown: Vec<String>,
}

impl ScriptedIo {
    pub fn new<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        ScriptedIo { replies: replies.into_iter().map(Into::into).collect(), shown: Vec::new() }
    }

    pub fn remaining(&self) -> usize {
        self.replies.len()
    }
}

impl DialogueIo for ScriptedIo {
    fn show(&mut self, text: &str) {
        self.shown.push(text.to_string());
    }

    fn ask(&mut self, prompt: &str) -> Option<String> {
        self.shown.push(prompt.to_string());
        self.replies.pop_front()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueOutcome {
    pub constraints: ConstraintSet,
    pub intent: ParsedIntent,
    pub rounds: usize,
    pub confirmed: bool,
    pub warning: Option<String>,
    pub history: Vec<(String, String)>,
}

pub const FEEDBACK_PROMPT: &str = "confirm or describe a change> ";
pub const RETRY_PROMPT: &str = "could not understand that, please rephrase> ";

/// Parse, preview, classify until Confirm or `max_rounds` previews. An initial
/// parse failure gets one re-prompt.
pub fn run_dialogue(
    initial_text: &str,
    scenario: &Scenario,
    llm: &LlmClient,
    io: &mut dyn DialogueIo,
    max_rounds: usize,
) -> Result<DialogueOutcome, IntentError> {
    let mut state = match DialogueState::start(initial_text, scenario, llm, max_rounds) {
        Ok(s) => s,
        Err(e) => {
            io.show(&format!("error: {e}"));
            let retry = io.ask(RETRY_PROMPT).ok_or(IntentError::NoReply)?;
            DialogueState::start(&retry, scenario, llm, max_rounds)?
        }
    };
    io.show(&state.preview(scenario));

    let mut replies = 0;
    let warning = loop {
        let Some(reply) = io.ask(FEEDBACK_PROMPT) else {
            return Err(IntentError::NoReply);
        };
        replies += 1;
        match state.feedback(&reply, scenario, llm) {
            Ok(Feedback::Confirmed) => break None,
            Ok(Feedback::Modified) => io.show(&state.preview(scenario)),
            Err(IntentError::RoundLimit(k)) => break Some(format!("stopped after {k} rounds without confirmation")),
            Err(e) => io.show(&format!("error: {e}")),
        }
        if replies >= state.max_rounds {
            break Some(format!("stopped after {replies} replies without confirmation"));
        }
    };
    if let Some(w) = &warning {
        io.show(&format!("warning: {w}"));
    }
    Ok(DialogueOutcome {
        confirmed: warning.is_none(),
        constraints: state.current_constraints,
        intent: state.current_intent,
        rounds: state.round,
        warning,
        history: state.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::SynthParams;

    const TEXT: &str = "enhance the north, suppress the south, base station in the center";

    #[test]
    fn immediate_confirm() {
        let sc = SynthParams::reference().scenario();
        let mut io = ScriptedIo::new(["yes"]);
        let out = run_dialogue(TEXT, &sc, &LlmClient::offline(), &mut io, DEFAULT_MAX_ROUNDS).unwrap();
        assert_eq!((out.rounds, out.confirmed), (1, true));
        assert_eq!((out.constraints.bright.clone(), out.constraints.dark.clone()), (vec![7, 8], vec![6, 12]));
    }

    #[test]
    fn swap_then_confirm() {
        let sc = SynthParams::reference().scenario();
        let mut io = ScriptedIo::new(["no, swap bright and dark", "confirm"]);
        let out = run_dialogue(TEXT, &sc, &LlmClient::offline(), &mut io, DEFAULT_MAX_ROUNDS).unwrap();
        assert_eq!(out.rounds, 2);
        assert_eq!((out.constraints.bright, out.constraints.dark), (vec![6, 12], vec![7, 8]));
    }

    #[test]
    fn round_cap_warns() {
        let sc = SynthParams::reference().scenario();
        let mods = ["swap", "swap", "swap", "swap", "swap", "swap"];
        let mut io = ScriptedIo::new(mods);
        let out = run_dialogue(TEXT, &sc, &LlmClient::offline(), &mut io, DEFAULT_MAX_ROUNDS).unwrap();
        assert!(!out.confirmed && out.warning.is_some());
        assert_eq!(out.rounds, DEFAULT_MAX_ROUNDS);
        assert_eq!(io.remaining(), 1);
        // four swaps applied: back to the original assignment
        assert_eq!(out.constraints.bright, vec![7, 8]);
    }

    #[test]
    fn reprompt_once() {
        let sc = SynthParams::reference().scenario();
        let mut io = ScriptedIo::new([TEXT, "ok"]);
        let out = run_dialogue("hello", &sc, &LlmClient::offline(), &mut io, 5).unwrap();
        assert!(out.confirmed);
        let mut io = ScriptedIo::new(["still nothing", "ok"]);
        assert_eq!(run_dialogue("hello", &sc, &LlmClient::offline(), &mut io, 5).unwrap_err(), IntentError::NoIntent);
    }

    #[test]
    fn failed_modification_keeps_state() {
        let sc = SynthParams::reference().scenario();
        let mut state = DialogueState::start(TEXT, &sc, &LlmClient::offline(), 5).unwrap();
        let before = state.clone();
        assert!(state.feedback("boost site 99", &sc, &LlmClient::offline()).is_err());
        assert_eq!(state, before);
    }
}
