//! Explicit-state exhaustive exploration of the small agents/one-artifact
//! transition system, checking single-writer safety, monotonic versioning,
//! and bounded staleness, with shortest counterexample traces.
//!
//! The state tuple is `(artifactVersion, artifactState[agent],
//! agentSteps[agent], lastSync[agent])`. Exploration starts from every agent
//! Shared at version 1 and applies, per agent: Read (requires non-Invalid,
//! bumps that agent's step counter), Write (requires E or M, bumps the
//! version, makes the writer M and every peer I, records the writer's sync
//! point), Fetch (requires I, lands in S, records the sync point), and
//! Upgrade (requires S, makes the requester E and every peer I). Broken mode
//! omits the peer invalidation in Upgrade, which is the counterexample
//! showing that invalidation is a correctness requirement rather than an
//! optimization.
//!
//! Version and step counters are unbounded in the abstract system, so
//! exploration prunes states beyond `version_bound` / `step_bound` the way a
//! model checker applies a state constraint: pruned states are neither
//! checked nor expanded, and a state with at least one pruned successor is a
//! boundary state, exempt from deadlock reporting.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesi::MesiState;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckerError {
    #[error("bounds too large: exceeded the {0}-state cap")]
    BoundsTooLarge(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Checker state tuple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModelState {
    pub version: u32,
    pub states: Vec<MesiState>,
    pub steps: Vec<u32>,
    pub last_sync: Vec<u32>,
}

impl ModelState {
    /// All agents Shared at version 1, zero steps, synced at version 1.
    pub fn init(agents: usize) -> Self {
        ModelState {
            version: 1,
            states: vec![MesiState::Shared; agents],
            steps: vec![0; agents],
            last_sync: vec![1; agents],
        }
    }

    fn render(&self) -> String {
        let states: String = self.states.iter().map(|s| s.letter()).collect();
        format!(
            "v{} [{}] steps={:?} sync={:?}",
            self.version, states, self.steps, self.last_sync
        )
    }
}

/// Action labels for traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionLabel {
    Read(u32),
    Write(u32),
    Fetch(u32),
    Upgrade(u32),
}

impl std::fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ActionLabel::Read(a) => write!(f, "Read(a{a})"),
            ActionLabel::Write(a) => write!(f, "Write(a{a})"),
            ActionLabel::Fetch(a) => write!(f, "Fetch(a{a})"),
            ActionLabel::Upgrade(a) => write!(f, "Upgrade(a{a})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckerMode {
    Correct,
    /// Upgrade omits peer invalidation.
    BrokenUpgrade,
}

/// Named invariants checked on every admitted state (and edge).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InvariantKind {
    SingleWriter,
    MonotonicVersion,
    BoundedStaleness,
}

impl std::fmt::Display for InvariantKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            InvariantKind::SingleWriter => "SingleWriter",
            InvariantKind::MonotonicVersion => "MonotonicVersion",
            InvariantKind::BoundedStaleness => "BoundedStaleness",
        };
        f.write_str(name)
    }
}

/// A violation with the shortest trace reaching it: the action sequence from
/// the initial state, paired with each resulting state (rendered).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub invariant: String,
    pub trace: Vec<String>,
    pub trace_len: usize,
    pub state: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreParams {
    pub agents: usize,
    /// MAX_STALE_STEPS.
    pub max_stale: u32,
    pub version_bound: u32,
    pub step_bound: u32,
    pub mode: CheckerMode,
    /// Hard cap on distinct states before aborting.
    pub state_cap: usize,
}

impl Default for ExploreParams {
    fn default() -> Self {
        // Defaults land the correct-mode state count in the low thousands
        // while keeping the broken-mode counterexample (which needs two
        // version bumps) reachable.
        ExploreParams {
            agents: 3,
            max_stale: 3,
            version_bound: 3,
            step_bound: 3,
            mode: CheckerMode::Correct,
            state_cap: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploreOutcome {
    pub params: ExploreParams,
    pub state_count: usize,
    pub violations: Vec<Violation>,
    pub deadlocks: usize,
    pub max_depth: usize,
}

/// All successors of `state` under the mode's action set, with labels.
/// Successors beyond the version/step bounds are pruned; the boolean says
/// whether any pruning happened (boundary state).
pub fn successors(
    state: &ModelState,
    params: &ExploreParams,
) -> (Vec<(ActionLabel, ModelState)>, bool) {
    let mut out = Vec::new();
    let mut pruned = false;
    for a in 0..params.agents {
        // Read(a): requires a valid copy; bumps the agent's step counter.
        if state.states[a] != MesiState::Invalid {
            if state.steps[a] < params.step_bound {
                let mut next = state.clone();
                next.steps[a] += 1;
                out.push((ActionLabel::Read(a as u32), next));
            } else {
                pruned = true;
            }
        }
        // Write(a): requires ownership; bumps the version, invalidates peers.
        // Broken mode drops the peer invalidation here as well as in
        // Upgrade: the counterexample needs the second upgrader to still be
        // Exclusive after the first write, or two Modified copies could
        // never coexist.
        if matches!(
            state.states[a],
            MesiState::Exclusive | MesiState::Modified
        ) {
            if state.version < params.version_bound {
                let mut next = state.clone();
                next.version += 1;
                match params.mode {
                    CheckerMode::Correct => {
                        for (i, s) in next.states.iter_mut().enumerate() {
                            *s = if i == a {
                                MesiState::Modified
                            } else {
                                MesiState::Invalid
                            };
                        }
                    }
                    CheckerMode::BrokenUpgrade => {
                        next.states[a] = MesiState::Modified;
                    }
                }
                next.last_sync[a] = next.version;
                out.push((ActionLabel::Write(a as u32), next));
            } else {
                pruned = true;
            }
        }
        // Fetch(a): requires Invalid; lands Shared and syncs.
        if state.states[a] == MesiState::Invalid {
            let mut next = state.clone();
            next.states[a] = MesiState::Shared;
            next.last_sync[a] = next.version;
            out.push((ActionLabel::Fetch(a as u32), next));
        }
        // Upgrade(a): requires Shared; broken mode skips peer invalidation.
        if state.states[a] == MesiState::Shared {
            let mut next = state.clone();
            match params.mode {
                CheckerMode::Correct => {
                    for (i, s) in next.states.iter_mut().enumerate() {
                        *s = if i == a {
                            MesiState::Exclusive
                        } else {
                            MesiState::Invalid
                        };
                    }
                }
                CheckerMode::BrokenUpgrade => {
                    next.states[a] = MesiState::Exclusive;
                }
            }
            out.push((ActionLabel::Upgrade(a as u32), next));
        }
    }
    (out, pruned)
}

fn single_writer(state: &ModelState) -> bool {
    state
        .states
        .iter()
        .filter(|&&s| s == MesiState::Modified)
        .count()
        <= 1
}

fn bounded_staleness(state: &ModelState, max_stale: u32) -> bool {
    // Verbatim step-minus-version form: agentSteps[a] - lastSync[a] <= K.
    state
        .steps
        .iter()
        .zip(&state.last_sync)
        .all(|(&steps, &sync)| steps as i64 - sync as i64 <= max_stale as i64)
}

/// Breadth-first exhaustive exploration with state deduplication.
///
/// Every admitted state is checked against SingleWriter and
/// BoundedStaleness; MonotonicVersion is checked as an edge property on
/// every generated transition. The first (shortest) violating trace per
/// invariant is reported; violating states are not expanded further.
pub fn explore(params: &ExploreParams) -> Result<ExploreOutcome, CheckerError> {
    if params.agents == 0 {
        return Err(CheckerError::InvalidParams("agents must be >= 1".into()));
    }
    if params.version_bound < 1 || params.step_bound < 1 {
        return Err(CheckerError::InvalidParams("bounds must be >= 1".into()));
    }

    let init = ModelState::init(params.agents);
    let mut visited: HashSet<ModelState> = HashSet::new();
    let mut parents: HashMap<ModelState, (ModelState, ActionLabel)> = HashMap::new();
    let mut queue: VecDeque<(ModelState, usize)> = VecDeque::new();
    let mut violations: Vec<Violation> = Vec::new();
    let mut seen_invariants: BTreeSet<&'static str> = BTreeSet::new();
    let mut deadlocks = 0usize;
    let mut max_depth = 0usize;

    visited.insert(init.clone());
    queue.push_back((init, 0));

    while let Some((state, depth)) = queue.pop_front() {
        max_depth = max_depth.max(depth);
        let (succs, pruned) = successors(&state, params);
        if succs.is_empty() && !pruned {
            deadlocks += 1;
        }
        for (label, next) in succs {
            // Edge property: the version never decreases across any
            // transition.
            if next.version < state.version && !seen_invariants.contains("MonotonicVersion") {
                seen_invariants.insert("MonotonicVersion");
                violations.push(make_violation(
                    InvariantKind::MonotonicVersion,
                    &next,
                    &state,
                    label,
                    &parents,
                ));
                continue;
            }
            if visited.contains(&next) {
                continue;
            }
            visited.insert(next.clone());
            if visited.len() > params.state_cap {
                return Err(CheckerError::BoundsTooLarge(params.state_cap));
            }
            parents.insert(next.clone(), (state.clone(), label));

            let sw_ok = single_writer(&next);
            let bs_ok = bounded_staleness(&next, params.max_stale);
            if !sw_ok && seen_invariants.insert("SingleWriter") {
                violations.push(trace_violation(InvariantKind::SingleWriter, &next, &parents));
            }
            if !bs_ok && seen_invariants.insert("BoundedStaleness") {
                violations.push(trace_violation(
                    InvariantKind::BoundedStaleness,
                    &next,
                    &parents,
                ));
            }
            // Violating states are recorded but not expanded.
            if sw_ok && bs_ok {
                queue.push_back((next, depth + 1));
            }
        }
    }

    Ok(ExploreOutcome {
        params: *params,
        state_count: visited.len(),
        violations,
        deadlocks,
        max_depth,
    })
}

fn trace_violation(
    kind: InvariantKind,
    state: &ModelState,
    parents: &HashMap<ModelState, (ModelState, ActionLabel)>,
) -> Violation {
    let mut actions = Vec::new();
    let mut cursor = state.clone();
    while let Some((parent, label)) = parents.get(&cursor) {
        actions.push(format!("{label} -> {}", cursor.render()));
        cursor = parent.clone();
    }
    actions.reverse();
    Violation {
        invariant: kind.to_string(),
        trace_len: actions.len(),
        trace: actions,
        state: state.render(),
    }
}

fn make_violation(
    kind: InvariantKind,
    state: &ModelState,
    parent: &ModelState,
    label: ActionLabel,
    parents: &HashMap<ModelState, (ModelState, ActionLabel)>,
) -> Violation {
    let mut v = trace_violation(kind, parent, parents);
    v.trace.push(format!("{label} -> {}", state.render()));
    v.trace_len = v.trace.len();
    v.state = state.render();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_enables_reads_and_upgrades_only() {
        let params = ExploreParams::default();
        let init = ModelState::init(3);
        let (succs, pruned) = successors(&init, &params);
        assert!(!pruned);
        let mut reads = 0;
        let mut upgrades = 0;
        for (label, _) in &succs {
            match label {
                ActionLabel::Read(_) => reads += 1,
                ActionLabel::Upgrade(_) => upgrades += 1,
                ActionLabel::Write(_) | ActionLabel::Fetch(_) => {
                    panic!("nobody owns or is invalid at init")
                }
            }
        }
        assert_eq!(reads, 3);
        assert_eq!(upgrades, 3);
    }

    #[test]
    fn write_from_exclusive_bumps_and_invalidates() {
        let params = ExploreParams::default();
        let mut state = ModelState::init(3);
        state.states = vec![
            MesiState::Exclusive,
            MesiState::Invalid,
            MesiState::Invalid,
        ];
        let (succs, _) = successors(&state, &params);
        let write = succs
            .iter()
            .find(|(l, _)| matches!(l, ActionLabel::Write(0)))
            .map(|(_, s)| s.clone())
            .expect("write enabled from Exclusive");
        assert_eq!(write.version, 2);
        assert_eq!(write.states[0], MesiState::Modified);
        assert_eq!(write.states[1], MesiState::Invalid);
        assert_eq!(write.last_sync[0], 2);
    }

    #[test]
    fn broken_mode_lets_two_agents_reach_exclusive() {
        let params = ExploreParams {
            mode: CheckerMode::BrokenUpgrade,
            ..Default::default()
        };
        let init = ModelState::init(3);
        let (succs, _) = successors(&init, &params);
        let after_a0 = succs
            .iter()
            .find(|(l, _)| matches!(l, ActionLabel::Upgrade(0)))
            .map(|(_, s)| s.clone())
            .unwrap();
        // a1 was not invalidated and can still upgrade.
        assert_eq!(after_a0.states[1], MesiState::Shared);
        let (succs2, _) = successors(&after_a0, &params);
        let after_a1 = succs2
            .iter()
            .find(|(l, _)| matches!(l, ActionLabel::Upgrade(1)))
            .map(|(_, s)| s.clone())
            .unwrap();
        assert_eq!(after_a1.states[0], MesiState::Exclusive);
        assert_eq!(after_a1.states[1], MesiState::Exclusive);
    }

    #[test]
    fn correct_mode_has_no_violations_or_deadlocks() {
        let out = explore(&ExploreParams::default()).unwrap();
        assert!(out.violations.is_empty(), "{:#?}", out.violations);
        assert_eq!(out.deadlocks, 0);
        assert!(
            (1_000..=10_000).contains(&out.state_count),
            "state count {}",
            out.state_count
        );
    }

    #[test]
    fn broken_mode_finds_single_writer_in_four_steps() {
        let params = ExploreParams {
            mode: CheckerMode::BrokenUpgrade,
            ..Default::default()
        };
        let out = explore(&params).unwrap();
        let sw = out
            .violations
            .iter()
            .find(|v| v.invariant == "SingleWriter")
            .expect("broken upgrade violates SingleWriter");
        assert!(sw.trace_len <= 4, "trace: {:#?}", sw.trace);
    }

    #[test]
    fn single_agent_is_vacuously_safe() {
        let params = ExploreParams {
            agents: 1,
            ..Default::default()
        };
        let out = explore(&params).unwrap();
        assert!(out.violations.iter().all(|v| v.invariant != "SingleWriter"));
    }

    #[test]
    fn exploration_is_frontier_order_independent() {
        // Depth-first exploration must discover the identical state set.
        let params = ExploreParams::default();
        let bfs = explore(&params).unwrap();

        let mut visited: HashSet<ModelState> = HashSet::new();
        let mut stack = vec![ModelState::init(params.agents)];
        visited.insert(stack[0].clone());
        while let Some(state) = stack.pop() {
            let (succs, _) = successors(&state, &params);
            for (_, next) in succs {
                if visited.insert(next.clone()) {
                    stack.push(next);
                }
            }
        }
        assert_eq!(visited.len(), bfs.state_count);
    }

    #[test]
    fn state_cap_aborts() {
        let params = ExploreParams {
            state_cap: 10,
            ..Default::default()
        };
        assert!(matches!(
            explore(&params),
            Err(CheckerError::BoundsTooLarge(10))
        ));
    }
}
