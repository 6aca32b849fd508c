//! Canonical DAG representation with predecessor-list storage.
//!
//! Edges are kept sorted by (dst, src), which doubles as a CSR index over
//! destination vertices: the incoming edges of vertex `i` occupy a contiguous
//! range, with sources ascending. Propagation consumes predecessors, so this
//! is the natural layout; successor lists are derived on demand.

use std::fmt;
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};

/// Dense vertex index in `[0, N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Propagation direction a DAG was built for.
///
/// Grid and superpixel graphs use the four 2D directions; point clouds use
/// the six signed axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    LeftToRight,
    RightToLeft,
    TopToBottom,
    BottomToTop,
    XPos,
    XNeg,
    YPos,
    YNeg,
    ZPos,
    ZNeg,
}

impl Direction {
    pub const GRID: [Direction; 4] = [
        Direction::LeftToRight,
        Direction::RightToLeft,
        Direction::TopToBottom,
        Direction::BottomToTop,
    ];

    pub const AXES_3D: [Direction; 6] = [
        Direction::XPos,
        Direction::XNeg,
        Direction::YPos,
        Direction::YNeg,
        Direction::ZPos,
        Direction::ZNeg,
    ];

    pub fn opposite(self) -> Direction {
        match self {
            Direction::LeftToRight => Direction::RightToLeft,
            Direction::RightToLeft => Direction::LeftToRight,
            Direction::TopToBottom => Direction::BottomToTop,
            Direction::BottomToTop => Direction::TopToBottom,
            Direction::XPos => Direction::XNeg,
            Direction::XNeg => Direction::XPos,
            Direction::YPos => Direction::YNeg,
            Direction::YNeg => Direction::YPos,
            Direction::ZPos => Direction::ZNeg,
            Direction::ZNeg => Direction::ZPos,
        }
    }

    /// Stable ASCII tag used in graph file headers and file names.
    pub fn tag(self) -> &'static str {
        match self {
            Direction::LeftToRight => "left-to-right",
            Direction::RightToLeft => "right-to-left",
            Direction::TopToBottom => "top-to-bottom",
            Direction::BottomToTop => "bottom-to-top",
            Direction::XPos => "x-pos",
            Direction::XNeg => "x-neg",
            Direction::YPos => "y-pos",
            Direction::YNeg => "y-neg",
            Direction::ZPos => "z-pos",
            Direction::ZNeg => "z-neg",
        }
    }

    pub fn parse_tag(s: &str) -> Option<Direction> {
        let all = Direction::GRID.iter().chain(Direction::AXES_3D.iter());
        all.copied().find(|d| d.tag() == s)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Directed graph over `[0, N)` with edges `(src, dst)` meaning src feeds dst.
///
/// Construction rejects out-of-range endpoints and duplicate pairs; self-loops
/// and cycles are representable and reported by [`Dag::validate_acyclic`].
#[derive(Clone, Debug)]
pub struct Dag {
    num_vertices: usize,
    direction: Direction,
    /// Sorted by (dst, src).
    edges: Vec<(VertexId, VertexId)>,
    /// CSR offsets into `edges`, keyed by destination vertex; len N+1.
    pred_offsets: Vec<usize>,
}

impl Dag {
    pub fn new(
        num_vertices: usize,
        mut edges: Vec<(VertexId, VertexId)>,
        direction: Direction,
    ) -> Result<Self> {
        for &(src, dst) in &edges {
            if src.index() >= num_vertices || dst.index() >= num_vertices {
                return Err(Error::EdgeOutOfRange {
                    src: src.0,
                    dst: dst.0,
                    num_vertices,
                });
            }
        }
        edges.sort_unstable_by_key(|&(s, d)| (d, s));
        for pair in edges.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::DuplicateEdge {
                    src: pair[0].0 .0,
                    dst: pair[0].1 .0,
                });
            }
        }
        let mut pred_offsets = vec![0usize; num_vertices + 1];
        for &(_, dst) in &edges {
            pred_offsets[dst.index() + 1] += 1;
        }
        for i in 0..num_vertices {
            pred_offsets[i + 1] += pred_offsets[i];
        }
        Ok(Self {
            num_vertices,
            direction,
            edges,
            pred_offsets,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Edge list in canonical (dst, src) order. Edge weights align with this.
    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    /// Edge indices whose destination is `v`; sources ascend within the range.
    #[inline]
    pub fn incoming(&self, v: VertexId) -> Range<usize> {
        self.pred_offsets[v.index()]..self.pred_offsets[v.index() + 1]
    }

    pub fn in_degree(&self, v: VertexId) -> usize {
        self.incoming(v).len()
    }

    /// Successor adjacency, derived on demand for backward passes and peeling.
    /// Entry `v` lists the destinations of v's outgoing edges, ascending.
    pub fn successor_lists(&self) -> Vec<Vec<VertexId>> {
        let mut succ = vec![Vec::new(); self.num_vertices];
        // Edges are sorted by (dst, src), so per-source lists come out ascending.
        for &(src, dst) in &self.edges {
            succ[src.index()].push(dst);
        }
        succ
    }

    /// Checks for self-loops and directed cycles.
    ///
    /// Reports the smallest offending vertex: `SelfLoop` takes precedence,
    /// then `CycleDetected` names one vertex left unpeeled by Kahn's algorithm.
    pub fn validate_acyclic(&self) -> Result<()> {
        if let Some(&(v, _)) = self.edges.iter().filter(|(s, d)| s == d).min() {
            return Err(Error::SelfLoop(v.0));
        }
        let mut indegree: Vec<usize> = (0..self.num_vertices)
            .map(|v| self.in_degree(VertexId(v as u32)))
            .collect();
        let succ = self.successor_lists();
        let mut queue: Vec<usize> = (0..self.num_vertices).filter(|&v| indegree[v] == 0).collect();
        let mut seen = 0usize;
        while let Some(v) = queue.pop() {
            seen += 1;
            for &s in &succ[v] {
                indegree[s.index()] -= 1;
                if indegree[s.index()] == 0 {
                    queue.push(s.index());
                }
            }
        }
        if seen < self.num_vertices {
            let stuck = indegree
                .iter()
                .position(|&d| d > 0)
                .expect("unpeeled vertex must remain");
            return Err(Error::CycleDetected(stuck as u32));
        }
        Ok(())
    }

    /// Text form: `dag <num_vertices> <num_edges> <direction_tag>` header,
    /// then one `<src> <dst>` pair per line in canonical edge order.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "dag {} {} {}\n",
            self.num_vertices,
            self.edges.len(),
            self.direction.tag()
        );
        for &(src, dst) in &self.edges {
            out.push_str(&format!("{} {}\n", src.0, dst.0));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty graph file".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("dag") {
            return Err(Error::Parse("graph header must start with 'dag'".into()));
        }
        let num_vertices: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse("invalid vertex count".into()))?;
        let num_edges: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse("invalid edge count".into()))?;
        let direction = parts
            .next()
            .and_then(Direction::parse_tag)
            .ok_or_else(|| Error::Parse("invalid direction tag".into()))?;
        let mut edges = Vec::with_capacity(num_edges);
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let src: u32 = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad edge line '{line}'")))?;
            let dst: u32 = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad edge line '{line}'")))?;
            edges.push((VertexId(src), VertexId(dst)));
        }
        if edges.len() != num_edges {
            return Err(Error::Parse(format!(
                "header declares {} edges, file has {}",
                num_edges,
                edges.len()
            )));
        }
        Self::new(num_vertices, edges, direction)
    }

    pub fn write_to(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_from(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }
}
