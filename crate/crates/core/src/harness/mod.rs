//! Scenario replay.
//!
//! A scenario lists agent configs, human turns and sequence expectations.
//! Agents run in-process over the loopback transport and share one
//! transcript log, so every envelope lands on a single numbered timeline.
//! Expectations are checked against that timeline and the report points at
//! the transcript lines behind each verdict.

mod diagram;
mod expect;
mod scenario;

pub use diagram::{arrows, endpoint_names, export_sequence_diagram, lifelines, Arrow};
pub use expect::{segments, EventPattern, ExpectationResult, Segment, SequenceExpectation};
pub use scenario::{
    load_scenario, run_scenario, write_report, HarnessError, HumanSpec, RunOptions, ScenarioReport, ScenarioSpec,
    TurnSpec,
};
