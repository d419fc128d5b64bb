//! Stable-state MESI machine over agent–artifact pairs.
//!
//! States are tracked per (agent, artifact) pair. Transient in-flight states
//! of hardware MESI are deliberately excluded: every transition here is atomic
//! at the quiescent-state level, and all peer effects are mediated by the
//! authority directory rather than bus snooping.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifies an agent. Rendered as `a<n>` on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentId(pub u32);

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// Opaque artifact identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArtifactId(pub String);

impl ArtifactId {
    pub fn new(id: impl Into<String>) -> Self {
        ArtifactId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for ArtifactId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ArtifactId {
    fn from(s: &str) -> Self {
        ArtifactId(s.to_string())
    }
}

/// Authority-assigned artifact version. Strictly increasing under commits.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub struct Version(pub u64);

impl Version {
    pub fn next(self) -> Version {
        Version(self.0 + 1)
    }
}

impl std::fmt::Display for Version {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// Coherence state of one agent's copy of one artifact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MesiState {
    /// Only valid copy; authority copy is stale until commit.
    Modified,
    /// Only copy, identical to the authority; write permitted without traffic.
    Exclusive,
    /// Valid here and possibly elsewhere; no writes since last commit.
    Shared,
    /// Stale or absent; a full fetch is required before use.
    Invalid,
}

impl MesiState {
    pub const ALL: [MesiState; 4] = [
        MesiState::Modified,
        MesiState::Exclusive,
        MesiState::Shared,
        MesiState::Invalid,
    ];

    /// Single-letter form used in traces and reports.
    pub fn letter(self) -> char {
        match self {
            MesiState::Modified => 'M',
            MesiState::Exclusive => 'E',
            MesiState::Shared => 'S',
            MesiState::Invalid => 'I',
        }
    }
}

impl std::fmt::Display for MesiState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// The closed event alphabet. No other events exist in v0.1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoherenceEvent {
    Read,
    Write,
    Upgrade,
    Fetch,
    Invalidate,
    Commit,
}

impl CoherenceEvent {
    pub const ALL: [CoherenceEvent; 6] = [
        CoherenceEvent::Read,
        CoherenceEvent::Write,
        CoherenceEvent::Upgrade,
        CoherenceEvent::Fetch,
        CoherenceEvent::Invalidate,
        CoherenceEvent::Commit,
    ];
}

/// Validity predicate: `Invalid` is the only state whose content must not be
/// consumed.
pub fn validity(state: MesiState) -> bool {
    state != MesiState::Invalid
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransitionError {
    #[error("illegal transition: {event:?} while {state} (self={is_self})")]
    IllegalTransition {
        state: MesiState,
        event: CoherenceEvent,
        is_self: bool,
    },
}

/// Successor state for `event` applied to an entry in `state`.
///
/// `is_self` distinguishes the acting agent from peers; the peer view of a
/// `Write` or `Upgrade` is an invalidation, while peer reads, fetches, and
/// commits leave the local state untouched (all peer effects that matter are
/// delivered as explicit `Invalidate` events by the authority).
pub fn transition(
    state: MesiState,
    event: CoherenceEvent,
    is_self: bool,
) -> Result<MesiState, TransitionError> {
    use CoherenceEvent as E;
    use MesiState as S;

    let illegal = || {
        Err(TransitionError::IllegalTransition {
            state,
            event,
            is_self,
        })
    };

    if !is_self {
        return Ok(match event {
            // A peer acquiring ownership invalidates this copy.
            E::Write | E::Upgrade | E::Invalidate => S::Invalid,
            // Peer reads/fetches are served by the authority and do not
            // downgrade local state; a peer commit is announced separately
            // as an Invalidate / VERSION_UPDATE signal.
            E::Read | E::Fetch | E::Commit => state,
        });
    }

    match (state, event) {
        // Reads require a valid entry; a read from Invalid must fetch first.
        (S::Modified, E::Read) => Ok(S::Modified),
        (S::Exclusive, E::Read) => Ok(S::Exclusive),
        (S::Shared, E::Read) => Ok(S::Shared),
        (S::Invalid, E::Read) => illegal(),

        // Writes require ownership; Shared must upgrade first.
        (S::Modified, E::Write) => Ok(S::Modified),
        (S::Exclusive, E::Write) => Ok(S::Modified),
        (S::Shared, E::Write) | (S::Invalid, E::Write) => illegal(),

        // Upgrade is only granted from Shared.
        (S::Shared, E::Upgrade) => Ok(S::Exclusive),
        (S::Modified, E::Upgrade) | (S::Exclusive, E::Upgrade) | (S::Invalid, E::Upgrade) => {
            illegal()
        }

        // A fetch always lands in Shared; refreshing an existing Shared entry
        // is legal (ttl renewal), refetching while owning is not.
        (S::Invalid, E::Fetch) | (S::Shared, E::Fetch) => Ok(S::Shared),
        (S::Modified, E::Fetch) | (S::Exclusive, E::Fetch) => illegal(),

        // Local expiry (ttl / access-count) invalidates unconditionally.
        (_, E::Invalidate) => Ok(S::Invalid),

        // Commit publishes a dirty copy; committing from Exclusive is the
        // no-op commit of an abandoned write.
        (S::Modified, E::Commit) | (S::Exclusive, E::Commit) => Ok(S::Shared),
        (S::Shared, E::Commit) | (S::Invalid, E::Commit) => illegal(),
    }
}

/// Canonical artifact metadata as held by the authority and echoed on fetch
/// responses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub artifact_id: ArtifactId,
    pub size_tokens: u64,
    pub version: Version,
    pub last_modified_by: AgentId,
    pub checksum: String,
}

/// One agent's cached copy of one artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub artifact_id: ArtifactId,
    pub version_at_fetch: Version,
    pub state: MesiState,
    /// Reads served since the last fill; the access-count strategy expires
    /// entries once this reaches its threshold. Resets to 0 on every fetch.
    pub reads_since_fetch: u64,
    /// Step-clock value at the last fill.
    pub fetched_at_step: u64,
    /// Precomputed expiry for the ttl strategy (`fetched_at_step + ttl`).
    pub expires_at_step: Option<u64>,
}

impl CacheEntry {
    /// Fresh entry produced by a fetch. Lands in Shared with its read counter
    /// reset.
    pub fn filled(
        artifact_id: ArtifactId,
        version: Version,
        now_step: u64,
        ttl_steps: Option<u64>,
    ) -> Self {
        CacheEntry {
            artifact_id,
            version_at_fetch: version,
            state: MesiState::Shared,
            reads_since_fetch: 0,
            fetched_at_step: now_step,
            expires_at_step: ttl_steps.map(|t| now_step + t),
        }
    }

    pub fn is_valid(&self) -> bool {
        validity(self.state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn validity_is_false_only_for_invalid() {
        assert!(!validity(MesiState::Invalid));
        assert!(validity(MesiState::Modified));
        assert!(validity(MesiState::Exclusive));
        assert!(validity(MesiState::Shared));
    }

    #[test]
    fn fetch_from_invalid_lands_shared() {
        assert_eq!(
            transition(MesiState::Invalid, CoherenceEvent::Fetch, true),
            Ok(MesiState::Shared)
        );
    }

    #[test]
    fn commit_from_modified_lands_shared() {
        assert_eq!(
            transition(MesiState::Modified, CoherenceEvent::Commit, true),
            Ok(MesiState::Shared)
        );
    }

    #[test]
    fn peer_invalidate_forces_invalid() {
        assert_eq!(
            transition(MesiState::Shared, CoherenceEvent::Invalidate, false),
            Ok(MesiState::Invalid)
        );
    }

    #[test]
    fn write_while_shared_is_illegal() {
        // Writes require E or M; Shared must upgrade first.
        assert_eq!(
            transition(MesiState::Shared, CoherenceEvent::Write, true),
            Err(TransitionError::IllegalTransition {
                state: MesiState::Shared,
                event: CoherenceEvent::Write,
                is_self: true,
            })
        );
    }

    #[test]
    fn read_while_invalid_is_illegal() {
        assert!(transition(MesiState::Invalid, CoherenceEvent::Read, true).is_err());
    }

    #[test]
    fn legal_fetches_always_yield_valid_states() {
        for s in MesiState::ALL {
            if let Ok(next) = transition(s, CoherenceEvent::Fetch, true) {
                assert!(validity(next));
            }
        }
    }

    #[test]
    fn exhaustive_table_is_total_and_closed() {
        // Every (state, event, side) either produces a state in the four-value
        // alphabet or a typed error; 4 x 6 x 2 covers the whole domain.
        let mut legal = 0;
        for s in MesiState::ALL {
            for e in CoherenceEvent::ALL {
                for is_self in [true, false] {
                    match transition(s, e, is_self) {
                        Ok(next) => {
                            assert!(MesiState::ALL.contains(&next));
                            legal += 1;
                        }
                        Err(TransitionError::IllegalTransition { state, event, .. }) => {
                            assert_eq!(state, s);
                            assert_eq!(event, e);
                        }
                    }
                }
            }
        }
        // 24 peer-side cells are all total; self side rejects exactly 10.
        assert_eq!(legal, 24 + 14);
    }

    proptest! {
        #[test]
        fn no_sequence_escapes_the_alphabet(
            seq in proptest::collection::vec((0usize..6, any::<bool>()), 0..64)
        ) {
            let mut state = MesiState::Shared;
            for (ei, is_self) in seq {
                if let Ok(next) = transition(state, CoherenceEvent::ALL[ei], is_self) {
                    state = next;
                }
                prop_assert!(MesiState::ALL.contains(&state));
            }
        }
    }

    #[test]
    fn filled_entry_resets_read_counter() {
        let e = CacheEntry::filled(ArtifactId::new("d1"), Version(7), 12, Some(10));
        assert_eq!(e.reads_since_fetch, 0);
        assert_eq!(e.state, MesiState::Shared);
        assert_eq!(e.expires_at_step, Some(22));
        assert!(e.is_valid());
    }
}
