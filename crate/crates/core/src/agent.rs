//! Per-agent protocol client: local cache, read/write/commit lifecycle,
//! invalidation handling, and staleness tracking.
//!
//! Reads are served from the local cache when the entry is valid and within
//! the staleness bound; otherwise a fetch round-trip refreshes the entry and
//! charges the full artifact size. The bound is maintained by construction: a
//! read that would exceed it refreshes first, unless strict mode is on, in
//! which case it errors for audit runs.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::authority::{Authority, AuthorityError, CommitOutcome};
use crate::bus::Envelope;
use crate::clock::LogicalClock;
use crate::mesi::{transition, AgentId, ArtifactId, CacheEntry, CoherenceEvent, MesiState, Version};
use crate::strategy::{self, StrategyKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Authority(#[from] AuthorityError),
    #[error("read of {artifact} would be {staleness} steps stale (bound {bound})")]
    StalenessViolation {
        artifact: ArtifactId,
        staleness: u64,
        bound: u64,
    },
    #[error("upgrade denied for {artifact}")]
    UpgradeDenied { artifact: ArtifactId },
    #[error("no valid cache entry for {artifact}")]
    InvalidEntry { artifact: ArtifactId },
}

/// Result of a read: tokens charged (0 on a cache hit) and where the content
/// came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadOutcome {
    pub tokens_charged: u64,
    pub from_cache: bool,
    pub version: Version,
}

/// Result of a local write.
#[derive(Debug, Clone, PartialEq)]
pub struct WriteOutcome {
    pub invalidations_emitted: u64,
    /// Signals the strategy chose to publish at upgrade time.
    pub envelopes: Vec<Envelope>,
}

/// One agent's cache and protocol state.
pub struct AgentRuntime {
    pub agent_id: AgentId,
    entries: BTreeMap<ArtifactId, CacheEntry>,
    steps_executed: u64,
    last_sync_step: BTreeMap<ArtifactId, u64>,
    clock: LogicalClock,
    strict_staleness: bool,
}

impl AgentRuntime {
    pub fn new(agent_id: AgentId, universe: impl IntoIterator<Item = AgentId>) -> Self {
        AgentRuntime {
            agent_id,
            entries: BTreeMap::new(),
            steps_executed: 0,
            last_sync_step: BTreeMap::new(),
            clock: LogicalClock::new(universe),
            strict_staleness: false,
        }
    }

    /// Audit mode: raise instead of force-refreshing at the staleness bound.
    pub fn with_strict_staleness(mut self, strict: bool) -> Self {
        self.strict_staleness = strict;
        self
    }

    /// Mark the start of one reasoning step.
    pub fn begin_step(&mut self) {
        self.steps_executed += 1;
        self.clock.increment(self.agent_id);
    }

    pub fn steps_executed(&self) -> u64 {
        self.steps_executed
    }

    pub fn entry(&self, artifact: &ArtifactId) -> Option<&CacheEntry> {
        self.entries.get(artifact)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&ArtifactId, &CacheEntry)> {
        self.entries.iter()
    }

    pub fn has_valid_entry(&self, artifact: &ArtifactId) -> bool {
        self.entries.get(artifact).is_some_and(|e| e.is_valid())
    }

    pub fn clock(&self) -> &LogicalClock {
        &self.clock
    }

    /// Steps since this artifact was last synced (fetch or commit).
    pub fn staleness(&self, artifact: &ArtifactId) -> u64 {
        self.steps_executed
            .saturating_sub(self.last_sync_step.get(artifact).copied().unwrap_or(0))
    }

    /// Read the artifact under staleness bound `k`.
    ///
    /// Valid entry within bound: served locally, zero tokens, read counter
    /// bumped. Anything else fetches from the authority and charges the full
    /// artifact size. `now_step` feeds the strategy step clock stored on the
    /// entry; `fill_ttl` is the ttl strategy's expiry horizon, if any.
    pub fn read(
        &mut self,
        authority: &mut Authority,
        artifact: &ArtifactId,
        k: u64,
        now_tick: u64,
        now_step: u64,
        fill_ttl: Option<u64>,
    ) -> Result<ReadOutcome, RuntimeError> {
        if let Some(entry) = self.entries.get_mut(artifact) {
            if entry.is_valid() {
                let staleness = self
                    .steps_executed
                    .saturating_sub(self.last_sync_step.get(artifact).copied().unwrap_or(0));
                if staleness <= k {
                    entry.reads_since_fetch += 1;
                    return Ok(ReadOutcome {
                        tokens_charged: 0,
                        from_cache: true,
                        version: entry.version_at_fetch,
                    });
                }
                if self.strict_staleness {
                    return Err(RuntimeError::StalenessViolation {
                        artifact: artifact.clone(),
                        staleness,
                        bound: k,
                    });
                }
                // Refresh instead of serving over-stale content; the bound
                // holds by construction.
            }
        }
        self.fetch_fill(authority, artifact, now_tick, now_step, fill_ttl)
    }

    /// Unconditional fetch + fill (demand miss, ttl renewal, or pointer-mode
    /// refill). Charges the full artifact size.
    pub fn fetch_fill(
        &mut self,
        authority: &mut Authority,
        artifact: &ArtifactId,
        now_tick: u64,
        now_step: u64,
        fill_ttl: Option<u64>,
    ) -> Result<ReadOutcome, RuntimeError> {
        let resp = authority.handle_read(self.agent_id, artifact, now_tick)?;
        self.entries.insert(
            artifact.clone(),
            CacheEntry::filled(artifact.clone(), resp.version, now_step, fill_ttl),
        );
        self.last_sync_step
            .insert(artifact.clone(), self.steps_executed);
        Ok(ReadOutcome {
            tokens_charged: resp.content_size_tokens,
            from_cache: false,
            version: resp.version,
        })
    }

    /// Write locally. The entry must be valid; a Shared entry performs the
    /// upgrade round-trip first (peers invalidated per the strategy's
    /// timing), Exclusive and Modified write in place. Local writes charge
    /// zero artifact tokens.
    pub fn write(
        &mut self,
        authority: &mut Authority,
        artifact: &ArtifactId,
        now_tick: u64,
    ) -> Result<WriteOutcome, RuntimeError> {
        let entry = self
            .entries
            .get_mut(artifact)
            .filter(|e| e.is_valid())
            .ok_or_else(|| RuntimeError::InvalidEntry {
                artifact: artifact.clone(),
            })?;

        let envelopes = match entry.state {
            MesiState::Modified | MesiState::Exclusive => Vec::new(),
            MesiState::Shared => match authority.handle_upgrade(self.agent_id, artifact, now_tick)
            {
                Ok(grant) => grant.invalidate,
                Err(AuthorityError::NotShared { .. } | AuthorityError::Denied { .. }) => {
                    return Err(RuntimeError::UpgradeDenied {
                        artifact: artifact.clone(),
                    });
                }
                Err(e) => return Err(e.into()),
            },
            MesiState::Invalid => unreachable!("filtered above"),
        };

        if entry.state == MesiState::Shared {
            entry.state = transition(entry.state, CoherenceEvent::Upgrade, true)
                .expect("shared entries upgrade");
        }
        entry.state =
            transition(entry.state, CoherenceEvent::Write, true).expect("owned entries write");

        Ok(WriteOutcome {
            invalidations_emitted: envelopes.len() as u64,
            envelopes,
        })
    }

    /// Publish the local write (or release an abandoned one). On success the
    /// entry becomes Shared at the committed version and counts as freshly
    /// synced.
    pub fn commit(
        &mut self,
        authority: &mut Authority,
        artifact: &ArtifactId,
        new_size_tokens: u64,
        now_tick: u64,
        now_step: u64,
        fill_ttl: Option<u64>,
    ) -> Result<CommitOutcome, RuntimeError> {
        let entry = self
            .entries
            .get(artifact)
            .ok_or_else(|| RuntimeError::InvalidEntry {
                artifact: artifact.clone(),
            })?;
        let wrote = match entry.state {
            MesiState::Modified => true,
            MesiState::Exclusive => false,
            _ => {
                return Err(RuntimeError::InvalidEntry {
                    artifact: artifact.clone(),
                })
            }
        };
        let outcome = authority.handle_commit(
            self.agent_id,
            artifact,
            new_size_tokens,
            wrote,
            &self.clock,
            now_tick,
        )?;
        self.entries.insert(
            artifact.clone(),
            CacheEntry::filled(artifact.clone(), outcome.version, now_step, fill_ttl),
        );
        self.last_sync_step
            .insert(artifact.clone(), self.steps_executed);
        Ok(outcome)
    }

    /// Apply an INVALIDATE envelope. Idempotent: returns false when nothing
    /// changed (own message, no entry, already Invalid, or the entry is
    /// already at or past the named version and the signal is not a lease
    /// recovery).
    pub fn on_invalidate(&mut self, envelope: &Envelope) -> bool {
        if envelope.agent_id == self.agent_id.to_string() {
            return false;
        }
        let Some(entry) = self.entries.get_mut(&envelope.artifact()) else {
            return false;
        };
        if entry.state == MesiState::Invalid {
            return false;
        }
        let recovery = envelope
            .payload
            .get("recovery")
            .and_then(|v| v.as_bool())
            .unwrap_or(false);
        if recovery || entry.version_at_fetch.0 < envelope.version {
            entry.state = MesiState::Invalid;
            true
        } else {
            false
        }
    }

    /// Apply a VERSION_UPDATE envelope. Metadata only: a copy older than the
    /// announced version is marked Invalid and refetched lazily on next use.
    pub fn on_version_update(&mut self, envelope: &Envelope) -> bool {
        if envelope.agent_id == self.agent_id.to_string() {
            return false;
        }
        let Some(entry) = self.entries.get_mut(&envelope.artifact()) else {
            return false;
        };
        if entry.state != MesiState::Invalid && entry.version_at_fetch.0 < envelope.version {
            entry.state = MesiState::Invalid;
            true
        } else {
            false
        }
    }

    /// Run the strategy's per-step expiry over this cache; returns expired
    /// artifact ids.
    pub fn expire_per_strategy(&mut self, kind: &StrategyKind, now_step: u64) -> Vec<ArtifactId> {
        strategy::on_step(kind, &mut self.entries, now_step)
    }
}
