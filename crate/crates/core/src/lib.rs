//! Artifact coherence for multi-agent orchestration.
//!
//! Shared artifacts (plans, notes, reports) passed between cooperating agents
//! behave like cache lines in a shared-memory multiprocessor: rebroadcasting
//! full contents on every step costs `n × S × Σ|d|` tokens, while tracking a
//! MESI state per agent–artifact pair and invalidating on write reduces the
//! cost to roughly one fetch per invalidation actually observed.
//!
//! The crate provides:
//!
//! - [`mesi`]: the four-state machine over agent–artifact pairs, the validity
//!   predicate, and the stable-state transition table;
//! - [`clock`]: per-agent logical vector clocks for write ordering;
//! - [`authority`]: the directory service that serializes writes, grants
//!   exclusive leases, and fans out invalidations;
//! - [`agent`]: the per-agent cache runtime with bounded-staleness reads;
//! - [`strategy`]: pluggable invalidation-timing policies (broadcast, eager,
//!   lazy, ttl, access-count);
//! - [`bus`]: an in-process at-least-once pub/sub bus with a bit-exact JSON
//!   envelope wire format;
//! - [`bounds`]: closed-form cost calculators (broadcast cost, coherent upper
//!   bound, savings lower bound, volatility cliff);
//! - [`sim`]: a seeded tick-based discrete-event simulator with token
//!   accounting and multi-run aggregation;
//! - [`checker`]: breadth-first exhaustive exploration of the small
//!   agent/artifact transition system, verifying single-writer, monotonic
//!   versioning, and bounded staleness.

pub mod agent;
pub mod authority;
pub mod bounds;
pub mod bus;
pub mod checker;
pub mod clock;
pub mod mesi;
pub mod sim;
pub mod strategy;

pub use agent::{AgentRuntime, ReadOutcome, RuntimeError, WriteOutcome};
pub use authority::{Authority, AuthorityError, DirectoryEntry, Lease, LeaseRecovery};
pub use bounds::WorkloadShape;
pub use bus::{BusError, Envelope, EnvelopeKind, EventBus, FetchResponseMeta};
pub use checker::{CheckerMode, ExploreOutcome, ExploreParams, ModelState, Violation};
pub use clock::{ClockError, LogicalClock};
pub use mesi::{
    AgentId, ArtifactId, ArtifactMeta, CacheEntry, CoherenceEvent, MesiState, TransitionError,
    Version,
};
pub use sim::{
    AccessModel, ComparisonOutcome, RunMetrics, ScenarioConfig, SimError, SweepParameter,
};
pub use strategy::StrategyKind;
