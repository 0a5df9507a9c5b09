//! Every (state, input) pair of every machine against hand-written tables.

mod common;

use ovon::fsm::{
    demanding_step, discovery_step, fold_serving, serving_step, DemandingState, DiscoveryState, FsmAction, FsmInput,
    ServingState,
};
use ovon::{Clock, ConversationEnvelope, DialogEvent, EnvelopeEvent, ServicingMode};

use common::SERVING_TABLE;
use DemandingState as D;
use DiscoveryState as Q;
use FsmAction as A;
use FsmInput as I;
use ServingState as S;

const DEMANDING: &[(D, I, D, A)] = &[
    (D::Idle, I::SentInvite, D::Ready, A::None),
    (D::Ready, I::SentUtteranceOrWhisper, D::Ready, A::None),
    (D::Ready, I::ReceivedResponse, D::ConsumingResponse, A::None),
    (D::ConsumingResponse, I::SentUtteranceOrWhisper, D::Ready, A::None),
    (D::ConsumingResponse, I::ReceivedBye, D::Idle, A::None),
];

const DISCOVERY: &[(Q, I, Q, A)] = &[
    (
        Q::CapabilitySearch,
        I::SentRequestManifest,
        Q::WaitingForManifest,
        A::None,
    ),
    (
        Q::WaitingForManifest,
        I::ResendTick,
        Q::WaitingForManifest,
        A::ResendRequestManifest,
    ),
    (Q::WaitingForManifest, I::ReceivedPublishManifest, Q::Ready, A::None),
    (
        Q::AssistantSearch,
        I::SentFindAssistant,
        Q::WaitingForAssistantList,
        A::None,
    ),
    (
        Q::WaitingForAssistantList,
        I::ResendTick,
        Q::WaitingForAssistantList,
        A::ResendFindAssistant,
    ),
    (
        Q::WaitingForAssistantList,
        I::ReceivedProposeAssistant(ServicingMode::Direct),
        Q::Ready,
        A::None,
    ),
    (
        Q::WaitingForAssistantList,
        I::ReceivedProposeAssistant(ServicingMode::Indirect),
        Q::AssistantSearch,
        A::QuerySuggestedAgents,
    ),
];

#[test]
fn serving_machine_matches_table_exhaustively() {
    let mut defined = 0;
    for s in S::ALL {
        for i in FsmInput::ALL {
            let t = serving_step(s, i);
            match SERVING_TABLE.iter().find(|(fs, fi, _, _)| *fs == s && *fi == i) {
                Some(&(_, _, to, act)) => {
                    defined += 1;
                    assert_eq!((t.state, t.action), (to, act), "{s:?} {i:?}");
                    assert!(t.warning.is_none(), "{s:?} {i:?}");
                }
                None => {
                    assert_eq!((t.state, t.action), (s, A::None), "{s:?} {i:?}");
                    let w = t.warning.unwrap_or_else(|| panic!("no warning for {s:?} {i:?}"));
                    assert_eq!(w.input, i);
                }
            }
        }
    }
    assert_eq!(defined, SERVING_TABLE.len());
}

#[test]
fn demanding_machine_matches_table_exhaustively() {
    for s in D::ALL {
        for i in FsmInput::ALL {
            let t = demanding_step(s, i);
            match DEMANDING.iter().find(|(fs, fi, _, _)| *fs == s && *fi == i) {
                Some(&(_, _, to, act)) => assert_eq!((t.state, t.action, t.warning), (to, act, None)),
                None => {
                    assert_eq!((t.state, t.action), (s, A::None), "{s:?} {i:?}");
                    assert!(t.warning.is_some(), "{s:?} {i:?}");
                }
            }
        }
    }
}

#[test]
fn demanding_bye_while_ready_is_only_a_warning() {
    let t = demanding_step(D::Ready, I::ReceivedBye);
    assert_eq!(t.state, D::Ready);
    assert!(t.warning.is_some());
}

#[test]
fn discovery_machine_matches_table_exhaustively() {
    for s in Q::ALL {
        for i in FsmInput::ALL {
            let t = discovery_step(s, i);
            if let Some(&(_, _, to, act)) = DISCOVERY.iter().find(|(fs, fi, _, _)| *fs == s && *fi == i) {
                assert_eq!((t.state, t.action, t.warning), (to, act, None), "{s:?} {i:?}");
            } else if s == Q::Ready && i == I::ResendTick {
                // A late timer after completion.
                assert_eq!((t.state, t.action, t.warning), (Q::Ready, A::None, None));
            } else {
                assert_eq!((t.state, t.action), (s, A::None), "{s:?} {i:?}");
                assert!(t.warning.is_some(), "{s:?} {i:?}");
            }
        }
    }
}

#[test]
fn serving_success_path_returns_to_idle() {
    let path = [
        I::ReceivedInvite,
        I::ReceivedUtterance,
        I::LookupSucceeded,
        I::SentUtteranceOrWhisper,
        I::ReceivedBye,
    ];
    let expect = [S::Ready, S::SearchingForResponse, S::SendingResponse, S::Ready, S::Idle];
    let mut s = S::Idle;
    for (i, want) in path.into_iter().zip(expect) {
        let t = serving_step(s, i);
        assert!(t.warning.is_none());
        s = t.state;
        assert_eq!(s, want);
    }
}

#[test]
fn lookup_failure_says_bye() {
    assert_eq!(
        serving_step(S::SearchingForResponse, I::LookupFailed).pair(),
        (S::Idle, A::EmitBye)
    );
}

#[test]
fn listing_two_folds_to_one_lookup() {
    let raw = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/listing2.json")).unwrap();
    let env = ovon::envelope::parse_envelope(&raw).unwrap();
    let fold = fold_serving(S::Idle, &env);
    assert_eq!(fold.state, S::SearchingForResponse);
    assert_eq!(fold.actions, vec![A::StartLookup]);
    let lookup = fold.lookup.unwrap();
    assert_eq!(lookup.query, "Can I have some info about Harry Potter please?");
    assert!(lookup.whisper.unwrap().contains("philosopher's stone"));
}

#[test]
fn bye_alone_in_ready_goes_idle_without_actions() {
    let env = ConversationEnvelope::new("c", "u").with_event(EnvelopeEvent::bye(None, &Clock::System));
    let fold = fold_serving(S::Ready, &env);
    assert_eq!(fold.state, S::Idle);
    assert!(fold.actions.is_empty());
    assert!(fold.warnings.is_empty());
}

#[test]
fn utterance_while_idle_warns() {
    let env = ConversationEnvelope::new("c", "u").with_event(EnvelopeEvent::utterance(
        DialogEvent::text_from("u", "hi"),
        &Clock::System,
    ));
    let fold = fold_serving(S::Idle, &env);
    assert_eq!(fold.state, S::Idle);
    assert_eq!(fold.warnings.len(), 1);
}
