//! Logical vector clocks: one counter per agent, establishing a partial order
//! over writes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesi::AgentId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClockError {
    #[error("mismatched agent sets: {left} vs {right} counters")]
    MismatchedAgentSets { left: usize, right: usize },
}

/// Per-agent counter map. Component-wise monotonic; merge takes the
/// component-wise maximum.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LogicalClock {
    counters: BTreeMap<AgentId, u64>,
}

impl LogicalClock {
    /// Zeroed clock over the given agent universe.
    pub fn new(agents: impl IntoIterator<Item = AgentId>) -> Self {
        LogicalClock {
            counters: agents.into_iter().map(|a| (a, 0)).collect(),
        }
    }

    pub fn get(&self, agent: AgentId) -> u64 {
        self.counters.get(&agent).copied().unwrap_or(0)
    }

    /// Advance this agent's component by one.
    pub fn increment(&mut self, agent: AgentId) {
        *self.counters.entry(agent).or_insert(0) += 1;
    }

    /// Add an agent to the universe with a zero counter if absent.
    pub fn ensure(&mut self, agent: AgentId) {
        self.counters.entry(agent).or_insert(0);
    }

    /// Component-wise maximum. Both clocks must cover the same agent
    /// universe.
    pub fn merge(&self, remote: &LogicalClock) -> Result<LogicalClock, ClockError> {
        if self.counters.len() != remote.counters.len()
            || !self.counters.keys().eq(remote.counters.keys())
        {
            return Err(ClockError::MismatchedAgentSets {
                left: self.counters.len(),
                right: remote.counters.len(),
            });
        }
        let counters = self
            .counters
            .iter()
            .map(|(a, &v)| (*a, v.max(remote.get(*a))))
            .collect();
        Ok(LogicalClock { counters })
    }

    /// True when every component of `self` is >= the matching component of
    /// `other`.
    pub fn dominates(&self, other: &LogicalClock) -> bool {
        other.counters.iter().all(|(a, &v)| self.get(*a) >= v)
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.counters.keys().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn clock(vals: &[(u32, u64)]) -> LogicalClock {
        let mut c = LogicalClock::default();
        for &(a, v) in vals {
            c.counters.insert(AgentId(a), v);
        }
        c
    }

    #[test]
    fn merge_takes_componentwise_max() {
        let a = clock(&[(0, 1), (1, 2)]);
        let b = clock(&[(0, 3), (1, 0)]);
        let m = a.merge(&b).unwrap();
        assert_eq!(m, clock(&[(0, 3), (1, 2)]));
        assert!(m.dominates(&a) && m.dominates(&b));
    }

    #[test]
    fn merge_is_idempotent() {
        let x = clock(&[(0, 4), (1, 9)]);
        assert_eq!(x.merge(&x).unwrap(), x);
    }

    #[test]
    fn zero_is_identity() {
        let z = clock(&[(0, 0), (1, 0)]);
        let x = clock(&[(0, 5), (1, 7)]);
        assert_eq!(z.merge(&x).unwrap(), x);
    }

    #[test]
    fn mismatched_universes_are_rejected() {
        let a = clock(&[(0, 1)]);
        let b = clock(&[(0, 1), (1, 1)]);
        assert!(matches!(
            a.merge(&b),
            Err(ClockError::MismatchedAgentSets { .. })
        ));
    }

    fn arb_clock() -> impl Strategy<Value = LogicalClock> {
        proptest::collection::vec(0u64..100, 4).prop_map(|vs| {
            let mut c = LogicalClock::default();
            for (i, v) in vs.into_iter().enumerate() {
                c.counters.insert(AgentId(i as u32), v);
            }
            c
        })
    }

    proptest! {
        #[test]
        fn merge_is_associative_commutative_idempotent(
            a in arb_clock(), b in arb_clock(), c in arb_clock()
        ) {
            let ab_c = a.merge(&b).unwrap().merge(&c).unwrap();
            let a_bc = a.merge(&b.merge(&c).unwrap()).unwrap();
            prop_assert_eq!(&ab_c, &a_bc);
            prop_assert_eq!(a.merge(&b).unwrap(), b.merge(&a).unwrap());
            prop_assert_eq!(a.merge(&a).unwrap(), a.clone());
            prop_assert!(ab_c.dominates(&a));
        }
    }
}
