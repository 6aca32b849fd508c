//! DAG representation, acyclicity validation, wavefront scheduling, and the
//! bi-directional symmetry audit.

mod dag;
mod multi;
mod schedule;

pub use dag::{Dag, Direction, VertexId};
pub use multi::{check_bidirectional_symmetry, MultiDagSet, SymmetryReport, SymmetryViolation};
pub use schedule::{schedule_groups, GroupSchedule};
