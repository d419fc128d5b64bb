//! The single source of truth: global artifact directory, ownership grants,
//! commit serialization, lease recovery, and invalidation fan-out.
//!
//! All writes are serialized through this one component. Callers may be
//! concurrent upstream, but requests are processed one at a time in arrival
//! order. The directory marks peers Invalid at upgrade-grant under every
//! strategy; the strategy only decides when the invalidation *signal* is
//! published (see [`crate::strategy`]).

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::bus::{tick_timestamp, Envelope, EnvelopeKind, FetchResponseMeta};
use crate::clock::{ClockError, LogicalClock};
use crate::mesi::{AgentId, ArtifactId, ArtifactMeta, MesiState, Version};
use crate::strategy::StrategyKind;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuthorityError {
    #[error("unknown artifact {0}")]
    UnknownArtifact(ArtifactId),
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("{writer} holds {artifact} in Modified; canonical content is stale")]
    WriterHoldsModified {
        artifact: ArtifactId,
        writer: AgentId,
    },
    #[error("{agent} is not Shared on {artifact} (state {state})")]
    NotShared {
        agent: AgentId,
        artifact: ArtifactId,
        state: MesiState,
    },
    #[error("upgrade denied: {holder} holds a live exclusive lease on {artifact}")]
    Denied {
        artifact: ArtifactId,
        holder: AgentId,
    },
    #[error("{agent} does not own {artifact}")]
    NotOwner {
        agent: AgentId,
        artifact: ArtifactId,
    },
    #[error("lease on {artifact} expired before commit; write rejected")]
    LeaseExpired { artifact: ArtifactId },
    #[error(transparent)]
    Clock(#[from] ClockError),
}

/// Exclusive write grant with a tick-based time budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lease {
    pub owner: AgentId,
    pub granted_at_tick: u64,
    pub ttl_ticks: u64,
}

impl Lease {
    /// Strict expiry: expired iff `granted + ttl < now`, so a commit exactly
    /// at the boundary still succeeds.
    pub fn expired(&self, now_tick: u64) -> bool {
        self.granted_at_tick + self.ttl_ticks < now_tick
    }
}

/// Authority-side record for one artifact.
#[derive(Debug, Clone)]
pub struct DirectoryEntry {
    pub canonical_version: Version,
    pub content_size_tokens: u64,
    pub last_writer: Option<AgentId>,
    pub per_agent_state: BTreeMap<AgentId, MesiState>,
    pub lease: Option<Lease>,
    /// Peers invalidated at upgrade-grant that have not yet been signaled;
    /// deferred-notification strategies drain this at commit.
    pending_notify: BTreeSet<AgentId>,
}

/// Successful read/fetch response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadResponse {
    pub content_size_tokens: u64,
    pub version: Version,
    pub meta: FetchResponseMeta,
}

/// Successful upgrade: the requester is Exclusive, peers are Invalid in the
/// directory, and `invalidate` carries whatever signals the strategy emits
/// now (eager: all peers; deferred strategies: none).
#[derive(Debug, Clone, PartialEq)]
pub struct UpgradeGrant {
    pub invalidate: Vec<Envelope>,
}

/// Successful commit.
#[derive(Debug, Clone, PartialEq)]
pub struct CommitOutcome {
    pub version: Version,
    pub invalidate: Vec<Envelope>,
    pub version_update: Vec<Envelope>,
    /// True for a commit from Exclusive with no intervening write: the lease
    /// is released without a version bump and nothing is signaled.
    pub noop: bool,
}

/// One artifact recovered from an orphaned lease.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaseRecovery {
    pub artifact_id: ArtifactId,
    pub invalidate: Vec<Envelope>,
}

pub struct Authority {
    strategy: StrategyKind,
    lease_ttl_ticks: u64,
    /// When set, reads are rejected while a peer holds Modified instead of
    /// serving the last committed version.
    strict_reads: bool,
    agents: BTreeSet<AgentId>,
    directory: BTreeMap<ArtifactId, DirectoryEntry>,
    clock: LogicalClock,
}

impl Authority {
    pub fn new(strategy: StrategyKind, lease_ttl_ticks: u64) -> Self {
        Authority {
            strategy,
            lease_ttl_ticks,
            strict_reads: false,
            agents: BTreeSet::new(),
            directory: BTreeMap::new(),
            clock: LogicalClock::default(),
        }
    }

    pub fn with_strict_reads(mut self, strict: bool) -> Self {
        self.strict_reads = strict;
        self
    }

    pub fn register_agent(&mut self, agent: AgentId) {
        self.agents.insert(agent);
        self.clock.ensure(agent);
        for entry in self.directory.values_mut() {
            entry
                .per_agent_state
                .entry(agent)
                .or_insert(MesiState::Invalid);
        }
    }

    /// Register an artifact at version 1 with every agent cold (Invalid).
    pub fn register_artifact(&mut self, artifact: ArtifactId, size_tokens: u64) {
        let per_agent_state = self
            .agents
            .iter()
            .map(|&a| (a, MesiState::Invalid))
            .collect();
        self.directory.insert(
            artifact,
            DirectoryEntry {
                canonical_version: Version(1),
                content_size_tokens: size_tokens,
                last_writer: None,
                per_agent_state,
                lease: None,
                pending_notify: BTreeSet::new(),
            },
        );
    }

    pub fn strategy(&self) -> &StrategyKind {
        &self.strategy
    }

    pub fn artifacts(&self) -> impl Iterator<Item = &ArtifactId> {
        self.directory.keys()
    }

    pub fn entry(&self, artifact: &ArtifactId) -> Option<&DirectoryEntry> {
        self.directory.get(artifact)
    }

    pub fn state_of(&self, agent: AgentId, artifact: &ArtifactId) -> Option<MesiState> {
        self.directory
            .get(artifact)
            .and_then(|e| e.per_agent_state.get(&agent).copied())
    }

    pub fn version_of(&self, artifact: &ArtifactId) -> Option<Version> {
        self.directory.get(artifact).map(|e| e.canonical_version)
    }

    pub fn clock(&self) -> &LogicalClock {
        &self.clock
    }

    /// Single-writer/multiple-reader: at most one agent in Modified per
    /// artifact. Checked after every mutation.
    pub fn swmr_holds(&self) -> bool {
        self.directory.values().all(|e| {
            e.per_agent_state
                .values()
                .filter(|&&s| s == MesiState::Modified)
                .count()
                <= 1
        })
    }

    /// Canonical metadata, as echoed on fetch responses.
    pub fn artifact_meta(&self, artifact: &ArtifactId) -> Result<ArtifactMeta, AuthorityError> {
        let entry = self
            .directory
            .get(artifact)
            .ok_or_else(|| AuthorityError::UnknownArtifact(artifact.clone()))?;
        Ok(ArtifactMeta {
            artifact_id: artifact.clone(),
            size_tokens: entry.content_size_tokens,
            version: entry.canonical_version,
            last_modified_by: entry.last_writer.unwrap_or(AgentId(0)),
            checksum: synth_checksum(artifact, entry.canonical_version),
        })
    }

    /// Serve a read (or fetch: same directory effect). The caller is set to
    /// Shared and charged a full fetch upstream; while a peer holds Modified
    /// the last committed version is served (bounded-staleness semantics)
    /// unless strict mode is on.
    pub fn handle_read(
        &mut self,
        agent: AgentId,
        artifact: &ArtifactId,
        _now_tick: u64,
    ) -> Result<ReadResponse, AuthorityError> {
        if !self.agents.contains(&agent) {
            return Err(AuthorityError::UnknownAgent(agent));
        }
        let strict = self.strict_reads;
        let entry = self
            .directory
            .get_mut(artifact)
            .ok_or_else(|| AuthorityError::UnknownArtifact(artifact.clone()))?;
        // Local writes are not reported until commit, so a live foreign
        // lease is the closest observable stand-in for "a peer holds M".
        if strict {
            if let Some(lease) = &entry.lease {
                if lease.owner != agent && !lease.expired(_now_tick) {
                    return Err(AuthorityError::WriterHoldsModified {
                        artifact: artifact.clone(),
                        writer: lease.owner,
                    });
                }
            }
        }
        let state = entry.per_agent_state.entry(agent).or_insert(MesiState::Invalid);
        // A reader that owns the artifact keeps its ownership; everyone else
        // lands in Shared.
        if !matches!(*state, MesiState::Modified | MesiState::Exclusive) {
            *state = MesiState::Shared;
        }
        let version = entry.canonical_version;
        let size = entry.content_size_tokens;
        let last_writer = entry.last_writer.unwrap_or(AgentId(0));
        debug_assert!(self.swmr_holds());
        Ok(ReadResponse {
            content_size_tokens: size,
            version,
            meta: FetchResponseMeta {
                artifact_id: artifact.to_string(),
                version: version.0,
                checksum: synth_checksum(artifact, version),
                size_tokens: size,
                last_modified_by: last_writer.to_string(),
            },
        })
    }

    /// Grant exclusive ownership. Requires the requester to be Shared and no
    /// live foreign lease; on grant every peer is marked Invalid in the
    /// directory, the strategy decides which of them are signaled now, and a
    /// lease timer starts.
    pub fn handle_upgrade(
        &mut self,
        agent: AgentId,
        artifact: &ArtifactId,
        now_tick: u64,
    ) -> Result<UpgradeGrant, AuthorityError> {
        if !self.agents.contains(&agent) {
            return Err(AuthorityError::UnknownAgent(agent));
        }
        let strategy = self.strategy;
        let lease_ttl = self.lease_ttl_ticks;
        let entry = self
            .directory
            .get_mut(artifact)
            .ok_or_else(|| AuthorityError::UnknownArtifact(artifact.clone()))?;

        // An expired lease no longer blocks; recovery proper happens in
        // tick_leases.
        if let Some(lease) = &entry.lease {
            if lease.expired(now_tick) {
                entry.lease = None;
            } else if lease.owner != agent {
                return Err(AuthorityError::Denied {
                    artifact: artifact.clone(),
                    holder: lease.owner,
                });
            }
        }
        if let Some(holder) = entry
            .per_agent_state
            .iter()
            .find(|(&a, &s)| a != agent && matches!(s, MesiState::Exclusive | MesiState::Modified))
            .map(|(&a, _)| a)
        {
            return Err(AuthorityError::Denied {
                artifact: artifact.clone(),
                holder,
            });
        }

        let state = *entry
            .per_agent_state
            .get(&agent)
            .unwrap_or(&MesiState::Invalid);
        if state != MesiState::Shared {
            return Err(AuthorityError::NotShared {
                agent,
                artifact: artifact.clone(),
                state,
            });
        }

        // Peers whose copies this grant is killing; already-invalid agents
        // have nothing to lose and get no signal.
        let mut invalidated_peers: Vec<AgentId> = Vec::new();
        for (&peer, s) in entry.per_agent_state.iter_mut() {
            if peer != agent && *s != MesiState::Invalid {
                *s = MesiState::Invalid;
                entry.pending_notify.insert(peer);
                invalidated_peers.push(peer);
            }
        }
        entry.per_agent_state.insert(agent, MesiState::Exclusive);
        entry.lease = Some(Lease {
            owner: agent,
            granted_at_tick: now_tick,
            ttl_ticks: lease_ttl,
        });

        // The signal names the version the write will create; receivers drop
        // copies fetched at anything lower.
        let upcoming = entry.canonical_version.next();
        let invalidate = strategy
            .on_upgrade_granted(&invalidated_peers)
            .into_iter()
            .map(|peer| invalidate_envelope(agent, artifact, upcoming, now_tick, peer, false))
            .collect();
        debug_assert!(self.swmr_holds());
        Ok(UpgradeGrant { invalidate })
    }

    /// Serialize a commit: bump the canonical version by exactly one, demote
    /// the committer to Shared, release the lease, and emit the strategy's
    /// commit-time signals.
    ///
    /// Local writes are invisible to the directory until this call, so the
    /// committer reports whether it actually wrote: `wrote = false` is the
    /// no-op commit of an abandoned write, which releases the lease without
    /// a version bump and drops any deferred notifications unsent.
    pub fn handle_commit(
        &mut self,
        agent: AgentId,
        artifact: &ArtifactId,
        new_size_tokens: u64,
        wrote: bool,
        clock: &LogicalClock,
        now_tick: u64,
    ) -> Result<CommitOutcome, AuthorityError> {
        if !self.agents.contains(&agent) {
            return Err(AuthorityError::UnknownAgent(agent));
        }
        let strategy = self.strategy;
        let entry = self
            .directory
            .get_mut(artifact)
            .ok_or_else(|| AuthorityError::UnknownArtifact(artifact.clone()))?;

        let state = *entry
            .per_agent_state
            .get(&agent)
            .unwrap_or(&MesiState::Invalid);
        if !matches!(state, MesiState::Modified | MesiState::Exclusive) {
            return Err(AuthorityError::NotOwner {
                agent,
                artifact: artifact.clone(),
            });
        }
        match &entry.lease {
            Some(lease) if lease.owner != agent => {
                return Err(AuthorityError::NotOwner {
                    agent,
                    artifact: artifact.clone(),
                });
            }
            Some(lease) if lease.expired(now_tick) => {
                // Write rejected; tick_leases performs the recovery.
                return Err(AuthorityError::LeaseExpired {
                    artifact: artifact.clone(),
                });
            }
            Some(_) => {}
            None => {
                return Err(AuthorityError::NotOwner {
                    agent,
                    artifact: artifact.clone(),
                });
            }
        }

        if !wrote {
            // No-op commit of an abandoned write: nothing new exists, so the
            // deferred notifications are dropped unsent.
            entry.per_agent_state.insert(agent, MesiState::Shared);
            entry.lease = None;
            entry.pending_notify.clear();
            let version = entry.canonical_version;
            debug_assert!(self.swmr_holds());
            return Ok(CommitOutcome {
                version,
                invalidate: Vec::new(),
                version_update: Vec::new(),
                noop: true,
            });
        }

        entry.canonical_version = entry.canonical_version.next();
        entry.content_size_tokens = new_size_tokens;
        entry.last_writer = Some(agent);
        entry.per_agent_state.insert(agent, MesiState::Shared);
        entry.lease = None;
        let version = entry.canonical_version;

        let pending: Vec<AgentId> = entry.pending_notify.iter().copied().collect();
        entry.pending_notify.clear();
        let valid_peers: Vec<AgentId> = entry
            .per_agent_state
            .iter()
            .filter(|(&a, &s)| a != agent && s != MesiState::Invalid)
            .map(|(&a, _)| a)
            .collect();

        let signals = strategy.on_commit(&pending, &valid_peers);
        let invalidate = signals
            .invalidate
            .into_iter()
            .map(|peer| invalidate_envelope(agent, artifact, version, now_tick, peer, false))
            .collect();
        let version_update = signals
            .version_update
            .into_iter()
            .map(|peer| {
                let mut env = Envelope::new(
                    EnvelopeKind::VersionUpdate,
                    tick_timestamp(now_tick),
                    agent,
                    artifact,
                    version,
                );
                env.payload = serde_json::json!({ "recipient": peer.to_string() });
                env
            })
            .collect();

        self.clock = self.clock.merge(clock)?;
        debug_assert!(self.swmr_holds());
        Ok(CommitOutcome {
            version,
            invalidate,
            version_update,
            noop: false,
        })
    }

    /// Recover orphaned exclusive grants: every lease with
    /// `granted + ttl < now` is cleared, all agents (including the orphaned
    /// owner) drop to Invalid, and the canonical version is unchanged: the
    /// in-progress write is lost.
    pub fn tick_leases(&mut self, now_tick: u64) -> Vec<LeaseRecovery> {
        let mut recovered = Vec::new();
        for (artifact, entry) in self.directory.iter_mut() {
            let expired = entry.lease.as_ref().is_some_and(|l| l.expired(now_tick));
            if !expired {
                continue;
            }
            let owner = entry.lease.as_ref().map(|l| l.owner).unwrap_or(AgentId(0));
            entry.lease = None;
            entry.pending_notify.clear();
            for s in entry.per_agent_state.values_mut() {
                *s = MesiState::Invalid;
            }
            let version = entry.canonical_version;
            let invalidate = entry
                .per_agent_state
                .keys()
                .map(|&peer| invalidate_envelope(owner, artifact, version, now_tick, peer, true))
                .collect();
            recovered.push(LeaseRecovery {
                artifact_id: artifact.clone(),
                invalidate,
            });
        }
        debug_assert!(self.swmr_holds());
        recovered
    }
}

fn invalidate_envelope(
    origin: AgentId,
    artifact: &ArtifactId,
    version: Version,
    now_tick: u64,
    recipient: AgentId,
    recovery: bool,
) -> Envelope {
    let mut env = Envelope::new(
        EnvelopeKind::Invalidate,
        tick_timestamp(now_tick),
        origin,
        artifact,
        version,
    );
    env.payload = if recovery {
        serde_json::json!({ "recipient": recipient.to_string(), "recovery": true })
    } else {
        serde_json::json!({ "recipient": recipient.to_string() })
    };
    env
}

/// Placeholder content digest: stable for a fixed (artifact, version) pair.
fn synth_checksum(artifact: &ArtifactId, version: Version) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in artifact.as_str().bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    let digest = crate::sim::rng::SimRng::new(h ^ version.0).next_u64();
    format!("sha256:{digest:016x}")
}
