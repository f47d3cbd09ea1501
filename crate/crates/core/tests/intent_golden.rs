mod common;

use std::sync::Arc;

use beamforge_core::constraints::resolve;
use beamforge_core::intent::{fallback_parse, run_dialogue, LlmClient, LlmConfig, ScriptedIo, SentinelTransport};
use beamforge_core::SynthParams;

#[test]
fn fallback_prompt_suite() {
    let sc = SynthParams::reference().scenario();
    let cases = common::prompt_cases();
    assert_eq!(cases.len(), 12);
    for case in &cases {
        let got = resolve(&fallback_parse(&case.prompt, &sc).unwrap(), &sc).unwrap();
        assert_eq!(got, case.expected(&sc), "{}", case.prompt);
    }
}

fn scripted_run(llm: &LlmClient) -> String {
    let sc = SynthParams::reference().scenario();
    let case = common::dialogue_case();
    let mut io = ScriptedIo::new(case.replies.clone());
    let out = run_dialogue(&case.initial, &sc, llm, &mut io, 5).unwrap();
    assert!(out.confirmed);
    assert_eq!(out.rounds, case.rounds);
    assert_eq!((out.constraints.bright.clone(), out.constraints.dark.clone()), (vec![8, 12], vec![6]));
    serde_json::to_string_pretty(&out.constraints).unwrap() + "\n"
}

#[test]
fn dialogue_transcript_golden() {
    let got = scripted_run(&LlmClient::offline());
    if std::env::var_os("BEAMFORGE_BLESS").is_some() {
        std::fs::write(common::golden_dir().join("dialogue_constraints.json"), &got).unwrap();
    }
    assert_eq!(got, common::dialogue_expected_bytes());
}

#[test]
fn offline_makes_no_calls() {
    let sentinel = SentinelTransport::new();
    let llm = LlmClient::with_transport(LlmConfig::offline(), Arc::new(sentinel.clone()));
    assert_eq!(scripted_run(&llm), common::dialogue_expected_bytes());
    assert_eq!(sentinel.calls(), 0);
}
