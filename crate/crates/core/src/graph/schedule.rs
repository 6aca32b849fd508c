//! Wavefront grouping of DAG vertices.
//!
//! Vertices are peeled source-first: group 0 holds the vertices with no
//! predecessors, and each later group holds the vertices whose predecessors
//! all sit in earlier groups. This is longest-path layering — a vertex lands
//! in group `1 + max(predecessor groups)` — so the group count T equals the
//! longest directed path length plus one, and on a left-to-right grid DAG a
//! group is exactly an image column.

use crate::error::{Error, Result};
use crate::graph::dag::{Dag, VertexId};

/// Partition of `[0, N)` into ordered groups such that every edge crosses
/// from a strictly earlier group to a later one. Vertices within a group are
/// mutually unlinked and listed in ascending id order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupSchedule {
    groups: Vec<Vec<VertexId>>,
    group_of: Vec<u32>,
}

impl GroupSchedule {
    /// Builds a schedule from explicit groups, checking only the partition
    /// property. Edge ordering against a particular DAG is checked separately
    /// by [`GroupSchedule::validate_for`].
    pub fn from_groups(groups: Vec<Vec<VertexId>>, num_vertices: usize) -> Result<Self> {
        let mut group_of = vec![u32::MAX; num_vertices];
        let mut count = 0usize;
        for (g, members) in groups.iter().enumerate() {
            for &v in members {
                if v.index() >= num_vertices {
                    return Err(Error::VertexOutOfRange {
                        id: v.0,
                        num_vertices,
                    });
                }
                if group_of[v.index()] != u32::MAX {
                    return Err(Error::ScheduleMismatch(format!(
                        "vertex {v} appears in more than one group"
                    )));
                }
                group_of[v.index()] = g as u32;
                count += 1;
            }
        }
        if count != num_vertices {
            return Err(Error::ScheduleMismatch(format!(
                "groups cover {count} of {num_vertices} vertices"
            )));
        }
        Ok(Self { groups, group_of })
    }

    /// Number of groups T (the wavefront step count).
    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.group_of.len()
    }

    pub fn groups(&self) -> &[Vec<VertexId>] {
        &self.groups
    }

    #[inline]
    pub fn group_of(&self, v: VertexId) -> usize {
        self.group_of[v.index()] as usize
    }

    /// Confirms this schedule is valid for `dag`: same vertex count and every
    /// edge goes from a strictly earlier group to a later one.
    pub fn validate_for(&self, dag: &Dag) -> Result<()> {
        if self.group_of.len() != dag.num_vertices() {
            return Err(Error::ScheduleMismatch(format!(
                "schedule covers {} vertices, dag has {}",
                self.group_of.len(),
                dag.num_vertices()
            )));
        }
        for &(src, dst) in dag.edges() {
            if self.group_of(src) >= self.group_of(dst) {
                return Err(Error::ScheduleMismatch(format!(
                    "edge ({src}, {dst}) does not cross to a later group"
                )));
            }
        }
        Ok(())
    }
}

/// Peels the DAG into wavefront groups (longest-path layering).
///
/// Deterministic: identical input yields an identical schedule; members of
/// each group are sorted by vertex id. Fails with `CycleDetected` when some
/// vertices can never be peeled.
pub fn schedule_groups(dag: &Dag) -> Result<GroupSchedule> {
    let n = dag.num_vertices();
    let succ = dag.successor_lists();
    let mut indegree: Vec<usize> = (0..n).map(|v| dag.in_degree(VertexId(v as u32))).collect();

    let mut frontier: Vec<VertexId> = (0..n)
        .filter(|&v| indegree[v] == 0)
        .map(|v| VertexId(v as u32))
        .collect();
    let mut groups: Vec<Vec<VertexId>> = Vec::new();
    let mut group_of = vec![u32::MAX; n];
    let mut peeled = 0usize;

    while !frontier.is_empty() {
        let g = groups.len() as u32;
        let mut next = Vec::new();
        for &v in &frontier {
            group_of[v.index()] = g;
            peeled += 1;
            for &s in &succ[v.index()] {
                indegree[s.index()] -= 1;
                if indegree[s.index()] == 0 {
                    next.push(s);
                }
            }
        }
        next.sort_unstable();
        groups.push(std::mem::replace(&mut frontier, next));
    }

    if peeled < n {
        let stuck = indegree.iter().position(|&d| d > 0).expect("stuck vertex");
        return Err(Error::CycleDetected(stuck as u32));
    }
    Ok(GroupSchedule { groups, group_of })
}
