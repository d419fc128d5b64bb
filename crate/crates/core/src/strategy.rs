//! Invalidation-timing policies.
//!
//! Strategies never decide ownership: the directory marks peers Invalid at
//! upgrade-grant under every strategy, or single-writer safety would be lost
//! the moment two agents upgrade back to back. What a strategy controls is
//! when peers are *told*: eager signals at upgrade grant, lazy and
//! access-count defer the signal to commit, ttl sends no write-driven signal
//! at all and instead ages entries out on its own clock. Broadcast is the
//! no-protocol baseline: a full push of every artifact to every agent on
//! every step.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesi::{AgentId, ArtifactId, CacheEntry};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrategyError {
    #[error("unknown strategy {0:?} (expected broadcast|eager|lazy|ttl|access_count)")]
    UnknownStrategy(String),
    #[error("{0} must be >= 1")]
    InvalidParameter(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrategyKind {
    /// Full-state push every step; no invalidation machinery at all.
    Broadcast,
    /// INVALIDATE to every peer the instant a write begins (upgrade grant).
    Eager,
    /// INVALIDATE deferred to commit; multiple writes between peer accesses
    /// collapse into one re-fetch.
    Lazy,
    /// Entries expire `ttl_steps` after their last fill, measured on the
    /// step clock, regardless of write activity, and are renewed in place.
    Ttl { ttl_steps: u64 },
    /// Entries expire after `k` reads; refreshed on next demand.
    AccessCount { k: u64 },
}

/// Signals a commit should emit.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CommitSignals {
    /// Peers to send INVALIDATE now.
    pub invalidate: Vec<AgentId>,
    /// Agents to send VERSION_UPDATE (metadata only; receivers fetch
    /// lazily).
    pub version_update: Vec<AgentId>,
}

impl StrategyKind {
    /// Config-file spelling: `broadcast | eager | lazy | ttl | access_count`.
    pub fn parse(name: &str, ttl_steps: u64, k: u64) -> Result<StrategyKind, StrategyError> {
        match name {
            "broadcast" => Ok(StrategyKind::Broadcast),
            "eager" => Ok(StrategyKind::Eager),
            "lazy" => Ok(StrategyKind::Lazy),
            "ttl" => {
                if ttl_steps == 0 {
                    return Err(StrategyError::InvalidParameter("ttl_steps"));
                }
                Ok(StrategyKind::Ttl { ttl_steps })
            }
            "access_count" => {
                if k == 0 {
                    return Err(StrategyError::InvalidParameter("k"));
                }
                Ok(StrategyKind::AccessCount { k })
            }
            other => Err(StrategyError::UnknownStrategy(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::Broadcast => "broadcast",
            StrategyKind::Eager => "eager",
            StrategyKind::Lazy => "lazy",
            StrategyKind::Ttl { .. } => "ttl",
            StrategyKind::AccessCount { .. } => "access_count",
        }
    }

    /// Invalidations to emit the moment an upgrade is granted. Eager signals
    /// every peer (even ones already invalid: re-invalidation is an
    /// idempotent no-op); everything else defers or stays silent.
    pub fn on_upgrade_granted(&self, peers: &[AgentId]) -> Vec<AgentId> {
        match self {
            StrategyKind::Eager => peers.to_vec(),
            _ => Vec::new(),
        }
    }

    /// Signals to emit at commit.
    ///
    /// `pending` is the set of peers the directory invalidated at upgrade
    /// that have not yet been notified (so already-invalid peers are not
    /// re-signaled); `valid_peers` are agents whose directory state is still
    /// valid, the VERSION_UPDATE audience.
    pub fn on_commit(&self, pending: &[AgentId], valid_peers: &[AgentId]) -> CommitSignals {
        match self {
            StrategyKind::Lazy | StrategyKind::AccessCount { .. } => CommitSignals {
                invalidate: pending.to_vec(),
                version_update: Vec::new(),
            },
            StrategyKind::Eager => CommitSignals {
                invalidate: Vec::new(),
                version_update: valid_peers.to_vec(),
            },
            // Ttl is decoupled from write activity; broadcast has no
            // commits in the protocol sense.
            StrategyKind::Ttl { .. } | StrategyKind::Broadcast => CommitSignals::default(),
        }
    }

    /// True when this entry has aged out under this strategy.
    pub fn entry_expired(&self, entry: &CacheEntry, now_step: u64) -> bool {
        if !entry.is_valid() {
            return false;
        }
        match self {
            StrategyKind::Ttl { ttl_steps } => {
                let expiry = entry
                    .expires_at_step
                    .unwrap_or(entry.fetched_at_step + ttl_steps);
                now_step >= expiry
            }
            StrategyKind::AccessCount { k } => entry.reads_since_fetch >= *k,
            _ => false,
        }
    }

    /// Ttl keeps caches warm: an expired entry is refreshed immediately (a
    /// lease renewal) instead of waiting for the next demand miss.
    pub fn renews_on_expiry(&self) -> bool {
        matches!(self, StrategyKind::Ttl { .. })
    }

    pub fn ttl_steps(&self) -> Option<u64> {
        match self {
            StrategyKind::Ttl { ttl_steps } => Some(*ttl_steps),
            _ => None,
        }
    }
}

/// Expire entries per the strategy's clock; returns the artifacts expired to
/// Invalid, in id order.
pub fn on_step(
    kind: &StrategyKind,
    entries: &mut BTreeMap<ArtifactId, CacheEntry>,
    now_step: u64,
) -> Vec<ArtifactId> {
    let mut expired = Vec::new();
    for (id, entry) in entries.iter_mut() {
        if kind.entry_expired(entry, now_step) {
            entry.state = crate::mesi::MesiState::Invalid;
            expired.push(id.clone());
        }
    }
    expired
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesi::Version;

    fn peers() -> Vec<AgentId> {
        vec![AgentId(1), AgentId(2), AgentId(3)]
    }

    #[test]
    fn eager_signals_every_peer_at_upgrade() {
        assert_eq!(StrategyKind::Eager.on_upgrade_granted(&peers()).len(), 3);
        assert_eq!(StrategyKind::Lazy.on_upgrade_granted(&peers()).len(), 0);
        assert_eq!(
            StrategyKind::Ttl { ttl_steps: 10 }
                .on_upgrade_granted(&peers())
                .len(),
            0
        );
        assert!(StrategyKind::Eager.on_upgrade_granted(&[]).is_empty());
    }

    #[test]
    fn lazy_invalidates_at_commit() {
        let s = StrategyKind::Lazy.on_commit(&peers(), &[]);
        assert_eq!(s.invalidate.len(), 3);
        assert!(s.version_update.is_empty());
    }

    #[test]
    fn eager_emits_no_new_invalidate_at_commit() {
        // Peers entered Invalid at upgrade; re-invalidation would be the
        // idempotent no-op, so only VERSION_UPDATE goes out.
        let s = StrategyKind::Eager.on_commit(&peers(), &[]);
        assert!(s.invalidate.is_empty());
        assert!(s.version_update.is_empty());
    }

    #[test]
    fn zero_peers_zero_signals() {
        for kind in [
            StrategyKind::Eager,
            StrategyKind::Lazy,
            StrategyKind::Ttl { ttl_steps: 1 },
            StrategyKind::AccessCount { k: 1 },
        ] {
            let s = kind.on_commit(&[], &[]);
            assert!(s.invalidate.is_empty() && s.version_update.is_empty());
        }
    }

    #[test]
    fn ttl_expires_at_exact_age() {
        let kind = StrategyKind::Ttl { ttl_steps: 10 };
        let entry = CacheEntry::filled(ArtifactId::new("d1"), Version(1), 0, Some(10));
        assert!(!kind.entry_expired(&entry, 9));
        assert!(kind.entry_expired(&entry, 10));
    }

    #[test]
    fn access_count_expires_after_k_reads() {
        let kind = StrategyKind::AccessCount { k: 8 };
        let mut entry = CacheEntry::filled(ArtifactId::new("d1"), Version(1), 0, None);
        entry.reads_since_fetch = 7;
        assert!(!kind.entry_expired(&entry, 0));
        entry.reads_since_fetch = 8;
        assert!(kind.entry_expired(&entry, 0));
    }

    #[test]
    fn lazy_expires_nothing_on_step() {
        let mut entries = BTreeMap::new();
        entries.insert(
            ArtifactId::new("d1"),
            CacheEntry::filled(ArtifactId::new("d1"), Version(1), 0, None),
        );
        assert!(on_step(&StrategyKind::Lazy, &mut entries, 1_000).is_empty());
        assert!(entries[&ArtifactId::new("d1")].is_valid());
    }

    #[test]
    fn parse_rejects_bad_parameters() {
        assert!(StrategyKind::parse("ttl", 0, 8).is_err());
        assert!(StrategyKind::parse("access_count", 10, 0).is_err());
        assert!(StrategyKind::parse("nonsense", 10, 8).is_err());
        assert_eq!(
            StrategyKind::parse("ttl", 10, 8).unwrap(),
            StrategyKind::Ttl { ttl_steps: 10 }
        );
    }
}
