//! Interoperability state machines.
//!
//! Each machine is a pure step function `(state, input) -> Transition`. A pair
//! that has no defined arc leaves the state unchanged and carries a
//! [`ProtocolWarning`]; nothing here panics or fails. Actions only describe
//! what the runtime should do next.

use std::fmt;

use crate::envelope::{ConversationEnvelope, EventType, ServicingMode};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum ServingState {
    #[default]
    Idle,
    Ready,
    SearchingForResponse,
    /// Transient: always left within the same processing step.
    SendingResponse,
}

impl ServingState {
    pub const ALL: [ServingState; 4] = [
        ServingState::Idle,
        ServingState::Ready,
        ServingState::SearchingForResponse,
        ServingState::SendingResponse,
    ];
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum DemandingState {
    #[default]
    Idle,
    Ready,
    ConsumingResponse,
}

impl DemandingState {
    pub const ALL: [DemandingState; 3] = [
        DemandingState::Idle,
        DemandingState::Ready,
        DemandingState::ConsumingResponse,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiscoveryState {
    CapabilitySearch,
    WaitingForManifest,
    AssistantSearch,
    WaitingForAssistantList,
    Ready,
}

impl DiscoveryState {
    pub const ALL: [DiscoveryState; 5] = [
        DiscoveryState::CapabilitySearch,
        DiscoveryState::WaitingForManifest,
        DiscoveryState::AssistantSearch,
        DiscoveryState::WaitingForAssistantList,
        DiscoveryState::Ready,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FsmInput {
    ReceivedInvite,
    ReceivedUtterance,
    ReceivedWhisper,
    ReceivedBye,
    LookupSucceeded,
    LookupFailed,
    InactivityTimeout,
    SentInvite,
    SentUtteranceOrWhisper,
    ReceivedResponse,
    SentRequestManifest,
    ReceivedPublishManifest,
    SentFindAssistant,
    ReceivedProposeAssistant(ServicingMode),
    ResendTick,
}

impl FsmInput {
    pub const ALL: [FsmInput; 16] = [
        FsmInput::ReceivedInvite,
        FsmInput::ReceivedUtterance,
        FsmInput::ReceivedWhisper,
        FsmInput::ReceivedBye,
        FsmInput::LookupSucceeded,
        FsmInput::LookupFailed,
        FsmInput::InactivityTimeout,
        FsmInput::SentInvite,
        FsmInput::SentUtteranceOrWhisper,
        FsmInput::ReceivedResponse,
        FsmInput::SentRequestManifest,
        FsmInput::ReceivedPublishManifest,
        FsmInput::SentFindAssistant,
        FsmInput::ReceivedProposeAssistant(ServicingMode::Direct),
        FsmInput::ReceivedProposeAssistant(ServicingMode::Indirect),
        FsmInput::ResendTick,
    ];
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum FsmAction {
    #[default]
    None,
    EmitResponseEnvelope,
    EmitBye,
    StartLookup,
    ResendRequestManifest,
    ResendFindAssistant,
    QuerySuggestedAgents,
}

/// An input arrived in a state with no arc for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolWarning {
    pub machine: &'static str,
    pub state: String,
    pub input: FsmInput,
}

impl fmt::Display for ProtocolWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} machine: no transition for {:?} in state {}",
            self.machine, self.input, self.state
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition<S> {
    pub state: S,
    pub action: FsmAction,
    pub warning: Option<ProtocolWarning>,
}

impl<S> Transition<S> {
    fn to(state: S, action: FsmAction) -> Self {
        Self {
            state,
            action,
            warning: None,
        }
    }

    /// `(state, action)` without the warning.
    pub fn pair(self) -> (S, FsmAction) {
        (self.state, self.action)
    }
}

fn undefined<S: fmt::Debug + Copy>(machine: &'static str, state: S, input: FsmInput) -> Transition<S> {
    Transition {
        state,
        action: FsmAction::None,
        warning: Some(ProtocolWarning {
            machine,
            state: format!("{state:?}"),
            input,
        }),
    }
}

pub fn serving_step(state: ServingState, input: FsmInput) -> Transition<ServingState> {
    use FsmInput as I;
    use ServingState as S;
    match (state, input) {
        (S::Idle, I::ReceivedInvite) => Transition::to(S::Ready, FsmAction::None),
        (S::Ready, I::ReceivedUtterance | I::ReceivedWhisper) => {
            Transition::to(S::SearchingForResponse, FsmAction::StartLookup)
        }
        (S::SearchingForResponse, I::LookupSucceeded) => {
            Transition::to(S::SendingResponse, FsmAction::EmitResponseEnvelope)
        }
        (S::SearchingForResponse, I::LookupFailed) => Transition::to(S::Idle, FsmAction::EmitBye),
        (S::SendingResponse, I::SentUtteranceOrWhisper) => Transition::to(S::Ready, FsmAction::None),
        (S::Ready, I::InactivityTimeout | I::ReceivedBye) => Transition::to(S::Idle, FsmAction::None),
        (s, i) => undefined("serving", s, i),
    }
}

pub fn demanding_step(state: DemandingState, input: FsmInput) -> Transition<DemandingState> {
    use DemandingState as S;
    use FsmInput as I;
    match (state, input) {
        (S::Idle, I::SentInvite) => Transition::to(S::Ready, FsmAction::None),
        // The demanding agent may keep sending while it waits.
        (S::Ready, I::SentUtteranceOrWhisper) => Transition::to(S::Ready, FsmAction::None),
        (S::Ready, I::ReceivedResponse) => Transition::to(S::ConsumingResponse, FsmAction::None),
        (S::ConsumingResponse, I::SentUtteranceOrWhisper) => Transition::to(S::Ready, FsmAction::None),
        (S::ConsumingResponse, I::ReceivedBye) => Transition::to(S::Idle, FsmAction::None),
        (s, i) => undefined("demanding", s, i),
    }
}

pub fn discovery_step(state: DiscoveryState, input: FsmInput) -> Transition<DiscoveryState> {
    use DiscoveryState as S;
    use FsmInput as I;
    match (state, input) {
        (S::CapabilitySearch, I::SentRequestManifest) => Transition::to(S::WaitingForManifest, FsmAction::None),
        (S::WaitingForManifest, I::ResendTick) => {
            Transition::to(S::WaitingForManifest, FsmAction::ResendRequestManifest)
        }
        (S::WaitingForManifest, I::ReceivedPublishManifest) => Transition::to(S::Ready, FsmAction::None),
        (S::AssistantSearch, I::SentFindAssistant) => Transition::to(S::WaitingForAssistantList, FsmAction::None),
        (S::WaitingForAssistantList, I::ResendTick) => {
            Transition::to(S::WaitingForAssistantList, FsmAction::ResendFindAssistant)
        }
        (S::WaitingForAssistantList, I::ReceivedProposeAssistant(ServicingMode::Direct)) => {
            Transition::to(S::Ready, FsmAction::None)
        }
        (S::WaitingForAssistantList, I::ReceivedProposeAssistant(ServicingMode::Indirect)) => {
            Transition::to(S::AssistantSearch, FsmAction::QuerySuggestedAgents)
        }
        // Ready is terminal: ticks are absorbed quietly.
        (S::Ready, I::ResendTick) => Transition::to(S::Ready, FsmAction::None),
        (s, i) => undefined("discovery", s, i),
    }
}

/// Which side of an exchange an agent plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Serving,
    Demanding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoleState {
    Serving(ServingState),
    Demanding(DemandingState),
}

impl fmt::Display for RoleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoleState::Serving(s) => write!(f, "{s:?}"),
            RoleState::Demanding(s) => write!(f, "{s:?}"),
        }
    }
}

/// One applied step, for traces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord<S> {
    pub from: S,
    pub input: FsmInput,
    pub to: S,
    pub action: FsmAction,
}

impl<S: fmt::Debug> StepRecord<S> {
    /// `conversation_id state input state' action`, tab separated.
    pub fn trace_line(&self, conversation_id: &str) -> String {
        format!(
            "{conversation_id}\t{:?}\t{:?}\t{:?}\t{:?}",
            self.from, self.input, self.to, self.action
        )
    }
}

/// What a serving agent has to look up after an inbound envelope.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LookupContext {
    pub speaker_id: String,
    /// Utterance text, or the whisper text when no utterance came.
    pub query: String,
    /// Whispers that accompanied the query in the same envelope.
    pub whisper: Option<String>,
    pub kind: Option<EventType>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold<S> {
    pub state: S,
    /// Non-`None` actions, in order.
    pub actions: Vec<FsmAction>,
    pub warnings: Vec<ProtocolWarning>,
    pub lookup: Option<LookupContext>,
    pub steps: Vec<StepRecord<S>>,
}

impl<S: Copy> Fold<S> {
    fn new(state: S) -> Self {
        Self {
            state,
            actions: Vec::new(),
            warnings: Vec::new(),
            lookup: None,
            steps: Vec::new(),
        }
    }

    fn apply(&mut self, input: FsmInput, step: impl Fn(S, FsmInput) -> Transition<S>) {
        let from = self.state;
        let t = step(from, input);
        self.state = t.state;
        if t.action != FsmAction::None {
            self.actions.push(t.action);
        }
        if let Some(w) = t.warning {
            self.warnings.push(w);
        }
        self.steps.push(StepRecord {
            from,
            input,
            to: t.state,
            action: t.action,
        });
    }
}

/// Fold an envelope received by an agent in `role`.
pub fn fold_envelope(role: Role, state: RoleState, env: &ConversationEnvelope) -> Fold<RoleState> {
    match (role, state) {
        (Role::Serving, RoleState::Serving(s)) => map_fold(fold_serving(s, env), RoleState::Serving),
        (Role::Demanding, RoleState::Demanding(s)) => map_fold(fold_received(s, env), RoleState::Demanding),
        (Role::Serving, _) => map_fold(fold_serving(ServingState::Idle, env), RoleState::Serving),
        (Role::Demanding, _) => map_fold(fold_received(DemandingState::Idle, env), RoleState::Demanding),
    }
}

fn map_fold<S, T: Copy>(f: Fold<S>, wrap: impl Fn(S) -> T) -> Fold<T> {
    Fold {
        state: wrap(f.state),
        actions: f.actions,
        warnings: f.warnings,
        lookup: f.lookup,
        steps: f
            .steps
            .into_iter()
            .map(|s| StepRecord {
                from: wrap(s.from),
                input: s.input,
                to: wrap(s.to),
                action: s.action,
            })
            .collect(),
    }
}

/// Serving side of an inbound envelope, events in wire order.
///
/// The first utterance (or whisper) in `Ready` starts a lookup; further
/// utterances and whispers in the same envelope refine that lookup instead of
/// starting another one.
pub fn fold_serving(state: ServingState, env: &ConversationEnvelope) -> Fold<ServingState> {
    let mut fold = Fold::new(state);
    let mut lookup_open = false;
    for event in &env.events {
        match event.event_type {
            EventType::Invite => fold.apply(FsmInput::ReceivedInvite, serving_step),
            EventType::Utterance | EventType::Whisper => {
                let text = event.text().unwrap_or_default();
                let speaker = event.dialog().map(|d| d.speaker_id.clone()).unwrap_or_default();
                let is_whisper = event.event_type == EventType::Whisper;
                if lookup_open {
                    let ctx = fold.lookup.get_or_insert_with(LookupContext::default);
                    if is_whisper || ctx.kind == Some(EventType::Utterance) {
                        let w = ctx.whisper.get_or_insert_with(String::new);
                        if !w.is_empty() {
                            w.push(' ');
                        }
                        w.push_str(&text);
                    } else {
                        // Whisper opened the lookup; the utterance becomes the query.
                        let prev = std::mem::replace(&mut ctx.query, text);
                        ctx.whisper = Some(prev);
                        ctx.kind = Some(EventType::Utterance);
                        ctx.speaker_id = speaker;
                    }
                    continue;
                }
                let input = if is_whisper {
                    FsmInput::ReceivedWhisper
                } else {
                    FsmInput::ReceivedUtterance
                };
                fold.apply(input, serving_step);
                if fold.state == ServingState::SearchingForResponse {
                    lookup_open = true;
                    fold.lookup = Some(LookupContext {
                        speaker_id: speaker,
                        query: text,
                        whisper: None,
                        kind: Some(event.event_type),
                    });
                }
            }
            EventType::Bye => {
                lookup_open = false;
                fold.apply(FsmInput::ReceivedBye, serving_step);
            }
            _ => {}
        }
    }
    fold
}

/// Demanding side of a response envelope: the envelope is one response,
/// followed by a termination if it carries a bye.
pub fn fold_received(state: DemandingState, env: &ConversationEnvelope) -> Fold<DemandingState> {
    let mut fold = Fold::new(state);
    fold.apply(FsmInput::ReceivedResponse, demanding_step);
    if env.has_event(EventType::Bye) {
        fold.apply(FsmInput::ReceivedBye, demanding_step);
    }
    fold
}

/// Demanding side of an envelope the agent sends.
pub fn fold_sent(state: DemandingState, env: &ConversationEnvelope) -> Fold<DemandingState> {
    let mut fold = Fold::new(state);
    if env.has_event(EventType::Invite) {
        fold.apply(FsmInput::SentInvite, demanding_step);
    }
    if env.has_event(EventType::Utterance) || env.has_event(EventType::Whisper) {
        fold.apply(FsmInput::SentUtteranceOrWhisper, demanding_step);
    }
    fold
}
