//! Drive the serving state machine by hand, then fold a whole envelope.

use ovon::envelope::parse_envelope;
use ovon::fsm::{fold_serving, serving_step, FsmInput, ServingState};

fn main() {
    let mut state = ServingState::Idle;
    for input in [
        FsmInput::ReceivedInvite,
        FsmInput::ReceivedUtterance,
        FsmInput::LookupSucceeded,
        FsmInput::SentUtteranceOrWhisper,
        FsmInput::ReceivedBye,
    ] {
        let t = serving_step(state, input);
        println!("{state:?} --{input:?}--> {:?} {:?}", t.state, t.action);
        state = t.state;
    }

    let failed = serving_step(ServingState::SearchingForResponse, FsmInput::LookupFailed);
    println!("lookup failure: {:?} {:?}", failed.state, failed.action);

    // Undefined pairs keep the state and report a warning.
    let odd = serving_step(ServingState::Idle, FsmInput::ReceivedUtterance);
    println!("warning: {}", odd.warning.expect("undefined pair"));

    let raw = include_str!("../../../corpus/listing2.json");
    let fold = fold_serving(ServingState::Idle, &parse_envelope(raw).expect("listing parses"));
    for step in &fold.steps {
        println!("{}", step.trace_line("conv_1699812834794"));
    }
    if let Some(lookup) = fold.lookup {
        println!("look up {:?} (whisper {:?})", lookup.query, lookup.whisper);
    }
}
