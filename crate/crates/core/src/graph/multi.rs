//! Direction-paired DAG sets and the bi-directional symmetry audit.
//!
//! A builder emits one DAG per propagation direction over the same vertex
//! set. Directions come in opposite pairs, and the undirected neighbor
//! relation is realized by mirroring: edge (i, j) in a forward DAG must
//! appear as (j, i) in its reverse partner.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::dag::{Dag, Direction, VertexId};
use crate::graph::schedule::{schedule_groups, GroupSchedule};

/// One DAG per direction plus its wavefront schedule.
#[derive(Clone, Debug)]
pub struct MultiDagSet {
    dags: Vec<Dag>,
    schedules: Vec<GroupSchedule>,
}

impl MultiDagSet {
    /// Validates shared vertex counts and schedules every member.
    pub fn new(dags: Vec<Dag>) -> Result<Self> {
        if let Some(first) = dags.first() {
            let n = first.num_vertices();
            for d in &dags {
                if d.num_vertices() != n {
                    return Err(Error::MismatchedVertexCounts(n, d.num_vertices()));
                }
            }
        }
        let schedules = dags.iter().map(schedule_groups).collect::<Result<Vec<_>>>()?;
        Ok(Self { dags, schedules })
    }

    pub fn dags(&self) -> &[Dag] {
        &self.dags
    }

    pub fn schedules(&self) -> &[GroupSchedule] {
        &self.schedules
    }

    pub fn len(&self) -> usize {
        self.dags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dags.is_empty()
    }

    pub fn num_vertices(&self) -> usize {
        self.dags.first().map_or(0, Dag::num_vertices)
    }

    pub fn dag_for(&self, direction: Direction) -> Option<(&Dag, &GroupSchedule)> {
        self.dags
            .iter()
            .position(|d| d.direction() == direction)
            .map(|i| (&self.dags[i], &self.schedules[i]))
    }

    pub fn check_bidirectional_symmetry(&self) -> Result<SymmetryReport> {
        check_bidirectional_symmetry(&self.dags)
    }

    /// Writes one `<direction_tag>.dag` file per member. Schedules are never
    /// serialized; they are recomputed deterministically on read.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        for dag in &self.dags {
            dag.write_to(dir.join(format!("{}.dag", dag.direction().tag())))?;
        }
        Ok(())
    }

    /// Reads every `<direction_tag>.dag` present in `dir`, in canonical
    /// direction order (grid directions first, then signed axes).
    pub fn read_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut dags = Vec::new();
        for direction in Direction::GRID.iter().chain(Direction::AXES_3D.iter()) {
            let path = dir.join(format!("{}.dag", direction.tag()));
            if path.exists() {
                dags.push(Dag::read_from(&path)?);
            }
        }
        if dags.is_empty() {
            return Err(Error::InvalidInput(format!(
                "no .dag files found in {}",
                dir.display()
            )));
        }
        Self::new(dags)
    }
}

/// An edge whose mirror is missing from the opposite-direction DAG.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SymmetryViolation {
    pub direction: Direction,
    pub src: VertexId,
    pub dst: VertexId,
}

impl fmt::Display for SymmetryViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ({}, {}) unmirrored", self.direction, self.src, self.dst)
    }
}

/// Outcome of the symmetry audit; empty iff every edge is mirrored.
#[derive(Clone, Debug, Default)]
pub struct SymmetryReport {
    violations: Vec<SymmetryViolation>,
}

impl SymmetryReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[SymmetryViolation] {
        &self.violations
    }
}

/// Audits that each DAG's edges are mirrored in its opposite-direction pair.
///
/// Every DAG must have exactly one partner with the opposite direction tag
/// and the same vertex count. Violations are reported for both sides of each
/// pair, in canonical order.
pub fn check_bidirectional_symmetry(dags: &[Dag]) -> Result<SymmetryReport> {
    let mut violations = Vec::new();
    for dag in dags {
        let partner_dir = dag.direction().opposite();
        let partner = dags
            .iter()
            .find(|d| d.direction() == partner_dir)
            .ok_or(Error::UnpairedDirection(dag.direction().tag()))?;
        if partner.num_vertices() != dag.num_vertices() {
            return Err(Error::MismatchedVertexCounts(
                dag.num_vertices(),
                partner.num_vertices(),
            ));
        }
        let mirrored: HashSet<(VertexId, VertexId)> =
            partner.edges().iter().map(|&(s, d)| (d, s)).collect();
        for &(src, dst) in dag.edges() {
            if !mirrored.contains(&(src, dst)) {
                violations.push(SymmetryViolation {
                    direction: dag.direction(),
                    src,
                    dst,
                });
            }
        }
    }
    Ok(SymmetryReport { violations })
}
