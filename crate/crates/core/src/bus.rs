//! In-process at-least-once pub/sub with a bit-exact JSON envelope format.
//!
//! The control channel (read/upgrade/commit requests) is direct method calls
//! on the authority; this bus carries the event channel only: invalidations
//! and version updates fanned out from the authority to agents. Delivery is
//! synchronous at tick boundaries: everything published during a tick is
//! delivered before the next tick begins. A test mode duplicates deliveries
//! to exercise idempotence, and an optional mode reorders deliveries within
//! a tick.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesi::{AgentId, ArtifactId, Version};
use crate::sim::rng::SimRng;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BusError {
    #[error("malformed message: {reason}")]
    MalformedMessage { reason: String },
    #[error("unknown subscriber {0}")]
    UnknownSubscriber(AgentId),
}

/// Message type discriminator. Wire values are the SCREAMING_SNAKE names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EnvelopeKind {
    Invalidate,
    VersionUpdate,
    ReadRequest,
    UpgradeRequest,
    FetchRequest,
    Commit,
}

/// Wire message. Serialized as a JSON object with exactly these keys, in this
/// order: `type, timestamp, agent_id, artifact_id, version, payload`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    #[serde(rename = "type")]
    pub kind: EnvelopeKind,
    /// ISO8601 instant. The simulator derives it from the logical tick so
    /// runs are reproducible byte for byte.
    pub timestamp: String,
    /// Originating agent (the writer for invalidations); receivers ignore
    /// messages they originated themselves.
    pub agent_id: String,
    pub artifact_id: String,
    /// For INVALIDATE and VERSION_UPDATE this is the post-increment version
    /// whose creation stales older copies: receivers drop entries fetched at
    /// anything lower.
    pub version: u64,
    /// Free-form object; fetch responses carry [`FetchResponseMeta`] here.
    pub payload: serde_json::Value,
}

impl Envelope {
    pub fn new(
        kind: EnvelopeKind,
        timestamp: String,
        agent: AgentId,
        artifact: &ArtifactId,
        version: Version,
    ) -> Self {
        Envelope {
            kind,
            timestamp,
            agent_id: agent.to_string(),
            artifact_id: artifact.to_string(),
            version: version.0,
            payload: serde_json::Value::Object(serde_json::Map::new()),
        }
    }

    pub fn artifact(&self) -> ArtifactId {
        ArtifactId::new(self.artifact_id.clone())
    }
}

/// Fetch-response metadata object. Keys and order are part of the wire
/// contract: `artifact_id, version, checksum, size_tokens, last_modified_by`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FetchResponseMeta {
    pub artifact_id: String,
    pub version: u64,
    pub checksum: String,
    pub size_tokens: u64,
    pub last_modified_by: String,
}

/// Serialize an envelope to its wire bytes (UTF-8 JSON, compact).
pub fn serialize(envelope: &Envelope) -> Vec<u8> {
    serde_json::to_vec(envelope).expect("envelope serialization cannot fail")
}

/// Parse wire bytes back into an envelope. Missing fields, unknown fields,
/// or a non-natural version are rejected.
pub fn deserialize(bytes: &[u8]) -> Result<Envelope, BusError> {
    let env: Envelope = serde_json::from_slice(bytes).map_err(|e| BusError::MalformedMessage {
        reason: e.to_string(),
    })?;
    if env.version == 0 {
        return Err(BusError::MalformedMessage {
            reason: "version must be >= 1".to_string(),
        });
    }
    Ok(env)
}

/// Render a logical tick as a deterministic ISO8601 instant.
///
/// Ticks are seconds offset from a fixed epoch date; the simulator never runs
/// long enough to cross a day boundary.
pub fn tick_timestamp(tick: u64) -> String {
    let days = tick / 86_400;
    let rem = tick % 86_400;
    let (h, m, s) = (rem / 3600, (rem % 3600) / 60, rem % 60);
    format!("2026-01-{:02}T{:02}:{:02}:{:02}Z", 1 + days.min(30), h, m, s)
}

struct Subscriber {
    /// Queued wire bytes awaiting the next `deliver`.
    queue: Vec<Vec<u8>>,
}

/// Single serialization point for event-channel traffic.
///
/// Every published envelope is enqueued, as wire bytes, for every subscriber
/// at least once; with `duplicate_probability` > 0 a second copy is enqueued
/// with that probability (1.0 = exactly two copies, the duplicate-injection
/// test mode).
pub struct EventBus {
    subscribers: BTreeMap<AgentId, Subscriber>,
    duplicate_probability: f64,
    reorder_within_tick: bool,
    rng: SimRng,
    published: u64,
}

impl EventBus {
    pub fn new(seed: u64) -> Self {
        EventBus {
            subscribers: BTreeMap::new(),
            duplicate_probability: 0.0,
            reorder_within_tick: false,
            rng: SimRng::new(seed),
            published: 0,
        }
    }

    /// Enable duplicate injection: each delivery is enqueued a second time
    /// with probability `p`.
    pub fn with_duplicates(mut self, p: f64) -> Self {
        self.duplicate_probability = p;
        self
    }

    /// Reverse each subscriber's queue on delivery, exercising within-tick
    /// reordering.
    pub fn with_reordering(mut self, on: bool) -> Self {
        self.reorder_within_tick = on;
        self
    }

    pub fn subscribe(&mut self, agent: AgentId) {
        self.subscribers.entry(agent).or_insert(Subscriber {
            queue: Vec::new(),
        });
    }

    /// Publish to every subscriber. The topic is the artifact id; v0.1
    /// subscribes every agent to every artifact, so fan-out is total and
    /// receivers filter by origin.
    pub fn publish(&mut self, envelope: &Envelope) {
        self.published += 1;
        let bytes = serialize(envelope);
        let dup = self.duplicate_probability;
        for sub in self.subscribers.values_mut() {
            sub.queue.push(bytes.clone());
            if dup >= 1.0 || (dup > 0.0 && self.rng.chance(dup)) {
                sub.queue.push(bytes.clone());
            }
        }
    }

    /// Drain everything queued for `agent`, in publish order (or reversed in
    /// reorder mode). Called once per subscriber at each tick boundary.
    pub fn deliver(&mut self, agent: AgentId) -> Result<Vec<Envelope>, BusError> {
        let reorder = self.reorder_within_tick;
        let sub = self
            .subscribers
            .get_mut(&agent)
            .ok_or(BusError::UnknownSubscriber(agent))?;
        let mut queued = std::mem::take(&mut sub.queue);
        if reorder {
            queued.reverse();
        }
        queued.iter().map(|bytes| deserialize(bytes)).collect()
    }

    pub fn published_count(&self) -> u64 {
        self.published
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_envelope() -> Envelope {
        Envelope::new(
            EnvelopeKind::Invalidate,
            tick_timestamp(5),
            AgentId(0),
            &ArtifactId::new("d1"),
            Version(42),
        )
    }

    #[test]
    fn wire_format_is_bit_exact() {
        let env = sample_envelope();
        let bytes = serialize(&env);
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(
            text,
            r#"{"type":"INVALIDATE","timestamp":"2026-01-01T00:00:05Z","agent_id":"a0","artifact_id":"d1","version":42,"payload":{}}"#
        );
    }

    #[test]
    fn fetch_meta_keys_are_exact() {
        let meta = FetchResponseMeta {
            artifact_id: "d1".into(),
            version: 42,
            checksum: "sha256:00".into(),
            size_tokens: 4096,
            last_modified_by: "a1".into(),
        };
        let text = serde_json::to_string(&meta).unwrap();
        assert_eq!(
            text,
            r#"{"artifact_id":"d1","version":42,"checksum":"sha256:00","size_tokens":4096,"last_modified_by":"a1"}"#
        );
    }

    #[test]
    fn roundtrip_identity() {
        let env = sample_envelope();
        assert_eq!(deserialize(&serialize(&env)).unwrap(), env);
    }

    #[test]
    fn missing_field_is_malformed() {
        let bytes = br#"{"type":"INVALIDATE","timestamp":"t","agent_id":"a0","version":42,"payload":{}}"#;
        assert!(matches!(
            deserialize(bytes),
            Err(BusError::MalformedMessage { .. })
        ));
    }

    #[test]
    fn non_natural_version_is_malformed() {
        for v in ["-5", "1.5", "0"] {
            let text = format!(
                r#"{{"type":"COMMIT","timestamp":"t","agent_id":"a0","artifact_id":"d1","version":{v},"payload":{{}}}}"#
            );
            assert!(deserialize(text.as_bytes()).is_err(), "version {v}");
        }
    }

    #[test]
    fn fanout_reaches_every_subscriber() {
        let mut bus = EventBus::new(1);
        for a in 0..3 {
            bus.subscribe(AgentId(a));
        }
        bus.publish(&sample_envelope());
        for a in 0..3 {
            assert_eq!(bus.deliver(AgentId(a)).unwrap().len(), 1);
        }
        // Queues drained; second deliver is empty.
        assert!(bus.deliver(AgentId(0)).unwrap().is_empty());
    }

    #[test]
    fn duplicate_mode_delivers_exactly_two_copies() {
        let mut bus = EventBus::new(1).with_duplicates(1.0);
        bus.subscribe(AgentId(0));
        bus.publish(&sample_envelope());
        let got = bus.deliver(AgentId(0)).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0], got[1]);
    }

    #[test]
    fn publish_with_no_subscribers_is_fine() {
        let mut bus = EventBus::new(1);
        bus.publish(&sample_envelope());
        assert_eq!(bus.published_count(), 1);
    }

    #[test]
    fn reorder_mode_reverses_within_a_tick() {
        let mut bus = EventBus::new(1).with_reordering(true);
        bus.subscribe(AgentId(0));
        let mut second = sample_envelope();
        second.artifact_id = "d2".to_string();
        bus.publish(&sample_envelope());
        bus.publish(&second);
        let got = bus.deliver(AgentId(0)).unwrap();
        assert_eq!(got[0].artifact_id, "d2");
        assert_eq!(got[1].artifact_id, "d1");
    }

    fn arb_envelope() -> impl Strategy<Value = Envelope> {
        (
            0usize..6,
            0u32..32,
            "[a-z0-9_]{1,12}",
            1u64..1_000_000,
            0u64..100_000,
        )
            .prop_map(|(k, agent, artifact, version, tick)| {
                let kinds = [
                    EnvelopeKind::Invalidate,
                    EnvelopeKind::VersionUpdate,
                    EnvelopeKind::ReadRequest,
                    EnvelopeKind::UpgradeRequest,
                    EnvelopeKind::FetchRequest,
                    EnvelopeKind::Commit,
                ];
                Envelope::new(
                    kinds[k],
                    tick_timestamp(tick),
                    AgentId(agent),
                    &ArtifactId::new(artifact),
                    Version(version),
                )
            })
    }

    proptest! {
        #[test]
        fn roundtrip_over_random_envelopes(env in arb_envelope()) {
            let bytes = serialize(&env);
            prop_assert_eq!(deserialize(&bytes).unwrap(), env);
            // Key names are part of the contract.
            let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
            let obj = v.as_object().unwrap();
            let keys: Vec<&str> = obj.keys().map(|s| s.as_str()).collect();
            prop_assert_eq!(
                keys,
                vec!["type", "timestamp", "agent_id", "artifact_id", "version", "payload"]
            );
        }
    }
}
