//! Leader sets and hierarchical-leadership (HL) ordering.
//!
//! Agents are numbered `1..=N`. Agent `i` listens to the agents in its
//! leader set `L(i)`; in an HL-flock every leader of `i` carries a smaller
//! number than `i`, agent 1 has no leaders and every other agent has at
//! least one.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::ModelError;

/// 1-based agent number.
pub type Agent = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeadershipDag {
    leaders: Vec<BTreeSet<Agent>>,
}

impl LeadershipDag {
    /// Builds the leader map without checking the HL constraints.
    ///
    /// `leaders[k]` is the leader set of agent `k + 1`. Use
    /// [`validate_hierarchy`] to find out whether the result is an HL-flock.
    pub fn new<I, S>(leaders: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = Agent>,
    {
        let leaders: Vec<BTreeSet<Agent>> = leaders
            .into_iter()
            .map(|s| s.into_iter().collect())
            .collect();
        if leaders.is_empty() {
            return Err(ModelError::EmptyFlock);
        }
        Ok(Self { leaders })
    }

    /// `1 <- 2 <- 3 <- ... <- n`
    pub fn chain(n: usize) -> Result<Self, ModelError> {
        Self::new((1..=n).map(|i| if i == 1 { vec![] } else { vec![i - 1] }))
    }

    pub fn n_agents(&self) -> usize {
        self.leaders.len()
    }

    /// Leader set `L(i)`.
    pub fn leaders(&self, agent: Agent) -> &BTreeSet<Agent> {
        &self.leaders[agent - 1]
    }

    /// `d_i = #L(i)`.
    pub fn degree(&self, agent: Agent) -> usize {
        self.leaders(agent).len()
    }

    pub fn agents(&self) -> impl Iterator<Item = Agent> {
        1..=self.n_agents()
    }

    pub fn edge_count(&self) -> usize {
        self.leaders.iter().map(BTreeSet::len).sum()
    }

    /// Leader sets as plain vectors, agent 1 first.
    pub fn to_lists(&self) -> Vec<Vec<Agent>> {
        self.leaders
            .iter()
            .map(|s| s.iter().copied().collect())
            .collect()
    }

    fn check_agent(&self, agent: Agent) -> Result<(), ModelError> {
        if agent == 0 || agent > self.n_agents() {
            return Err(ModelError::AgentOutOfRange {
                agent,
                n_agents: self.n_agents(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HierarchyViolation {
    /// `j ∈ L(i)` with `j >= i`.
    LeaderNotBelow { agent: Agent, leader: Agent },
    /// Leader index outside `1..=N`.
    UnknownLeader { agent: Agent, leader: Agent },
    /// `L(i) = ∅` for some `i > 1`.
    NoLeaders { agent: Agent },
}

impl fmt::Display for HierarchyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LeaderNotBelow { agent, leader } => {
                write!(f, "agent {agent} lists leader {leader}, which is not ranked below it")
            }
            Self::UnknownLeader { agent, leader } => {
                write!(f, "agent {agent} lists unknown leader {leader}")
            }
            Self::NoLeaders { agent } => write!(f, "agent {agent} has no leaders"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct HierarchyReport {
    pub violations: Vec<HierarchyViolation>,
}

impl HierarchyReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<(), ModelError> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(ModelError::InvalidHierarchy(self.violations))
        }
    }
}

/// Checks the HL-flock conditions in one pass over the edges.
pub fn validate_hierarchy(dag: &LeadershipDag) -> HierarchyReport {
    let n = dag.n_agents();
    let mut violations = Vec::new();
    for agent in dag.agents() {
        let leaders = dag.leaders(agent);
        for &leader in leaders {
            if leader == 0 || leader > n {
                violations.push(HierarchyViolation::UnknownLeader { agent, leader });
            } else if leader >= agent {
                violations.push(HierarchyViolation::LeaderNotBelow { agent, leader });
            }
        }
        if agent > 1 && leaders.is_empty() {
            violations.push(HierarchyViolation::NoLeaders { agent });
        }
    }
    HierarchyReport { violations }
}

/// Level sets `L^0(i) = {i}`, `L^m(i) = L(L^{m-1}(i))` and their union `[L](i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeaderLevels {
    pub levels: Vec<BTreeSet<Agent>>,
    pub closure: BTreeSet<Agent>,
}

/// Expands the leader levels of `agent` until they run out.
///
/// The largest member of each level strictly decreases in an HL-flock, so
/// at most `i` nonempty levels exist.
pub fn leader_levels(dag: &LeadershipDag, agent: Agent) -> Result<LeaderLevels, ModelError> {
    validate_hierarchy(dag).into_result()?;
    dag.check_agent(agent)?;

    let mut levels = vec![BTreeSet::from([agent])];
    let mut closure = BTreeSet::from([agent]);
    loop {
        let next: BTreeSet<Agent> = levels
            .last()
            .into_iter()
            .flatten()
            .flat_map(|&a| dag.leaders(a).iter().copied())
            .collect();
        if next.is_empty() {
            break;
        }
        closure.extend(next.iter().copied());
        levels.push(next);
    }
    Ok(LeaderLevels { levels, closure })
}
