//! Discrete metric measure spaces.
//!
//! A [`DiscreteMms`] is a finite graph with a positive vertex measure, and
//! per-edge conductance and length. Conductances feed the calculus and
//! lengths feed the shortest-path metric; the two are independent.

mod doubling;
mod generate;
mod io;

pub use doubling::{doubling_estimates, CenterSelection, DoublingOptions, DoublingReport};
pub use generate::{generate_space, parse_generator, SpaceKind};
pub use io::{parse_space, serialize_space};

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use crate::{Error, Result};

/// Input edge record: endpoints, conductance and length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSpec {
    pub a: usize,
    pub b: usize,
    pub conductance: f64,
    pub length: f64,
}

impl EdgeSpec {
    pub fn new(a: usize, b: usize, conductance: f64, length: f64) -> Self {
        Self {
            a,
            b,
            conductance,
            length,
        }
    }

    /// Edge with unit conductance and length.
    pub fn unit(a: usize, b: usize) -> Self {
        Self::new(a, b, 1.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub vertex: usize,
    pub conductance: f64,
    pub length: f64,
}

/// Weighted graph with vertex measure; immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMms {
    measure: Vec<f64>,
    /// Canonical edges with `a < b`, lexicographically sorted.
    edges: Vec<EdgeSpec>,
    adjacency: Vec<Vec<Neighbor>>,
}

impl DiscreteMms {
    /// Builds a space from a measure vector and an edge list.
    ///
    /// Edges may be given in either orientation; a pair listed twice must
    /// carry identical data.
    pub fn new(measure: Vec<f64>, edges: &[EdgeSpec]) -> Result<Self> {
        let n = measure.len();
        if n == 0 {
            return Err(Error::InvalidSpace("a space needs at least one vertex".into()));
        }
        for (i, &m) in measure.iter().enumerate() {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::InvalidSpace(format!(
                    "measure of vertex {i} is {m}, expected a positive finite value"
                )));
            }
        }
        let mut canon: BTreeMap<(usize, usize), EdgeSpec> = BTreeMap::new();
        for e in edges {
            for v in [e.a, e.b] {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v, n });
                }
            }
            if e.a == e.b {
                return Err(Error::InvalidSpace(format!("self-loop at vertex {}", e.a)));
            }
            if !(e.conductance.is_finite() && e.conductance > 0.0) {
                return Err(Error::InvalidSpace(format!(
                    "edge ({}, {}) has conductance {}, expected a positive finite value",
                    e.a, e.b, e.conductance
                )));
            }
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(Error::InvalidSpace(format!(
                    "edge ({}, {}) has length {}, expected a positive finite value",
                    e.a, e.b, e.length
                )));
            }
            let (a, b) = if e.a < e.b { (e.a, e.b) } else { (e.b, e.a) };
            let c = EdgeSpec::new(a, b, e.conductance, e.length);
            if let Some(prev) = canon.insert((a, b), c) {
                if prev != c {
                    return Err(Error::InvalidSpace(format!(
                        "edge ({a}, {b}) listed twice with different data"
                    )));
                }
            }
        }
        let edges: Vec<EdgeSpec> = canon.into_values().collect();
        let mut adjacency = vec![Vec::new(); n];
        for e in &edges {
            adjacency[e.a].push(Neighbor {
                vertex: e.b,
                conductance: e.conductance,
                length: e.length,
            });
            adjacency[e.b].push(Neighbor {
                vertex: e.a,
                conductance: e.conductance,
                length: e.length,
            });
        }
        for nbrs in &mut adjacency {
            nbrs.sort_by_key(|nb| nb.vertex);
        }
        Ok(Self {
            measure,
            edges,
            adjacency,
        })
    }

    pub fn len(&self) -> usize {
        self.measure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measure.is_empty()
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn total_measure(&self) -> f64 {
        self.measure.iter().sum()
    }

    pub fn edges(&self) -> &[EdgeSpec] {
        &self.edges
    }

    pub fn neighbors(&self, x: usize) -> &[Neighbor] {
        &self.adjacency[x]
    }

    pub fn degree(&self, x: usize) -> usize {
        self.adjacency[x].len()
    }

    pub fn check_vertex(&self, x: usize) -> Result<()> {
        if x >= self.len() {
            return Err(Error::VertexOutOfRange { vertex: x, n: self.len() });
        }
        Ok(())
    }

    /// Returns a copy with every conductance multiplied by `factor`.
    pub fn scale_conductances(&self, factor: f64) -> Result<Self> {
        let edges: Vec<EdgeSpec> = self
            .edges
            .iter()
            .map(|e| EdgeSpec::new(e.a, e.b, e.conductance * factor, e.length))
            .collect();
        Self::new(self.measure.clone(), &edges)
    }

    /// Returns a copy with a different vertex measure.
    pub fn with_measure(&self, measure: Vec<f64>) -> Result<Self> {
        if measure.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: measure.len(),
            });
        }
        Self::new(measure, &self.edges)
    }

    /// Connected-component label per vertex, labels in order of first vertex.
    pub fn components(&self) -> Vec<usize> {
        let n = self.len();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            stack.push(s);
            while let Some(x) = stack.pop() {
                for nb in &self.adjacency[x] {
                    if label[nb.vertex] == usize::MAX {
                        label[nb.vertex] = next;
                        stack.push(nb.vertex);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn component_count(&self) -> usize {
        self.components().iter().max().map_or(0, |m| m + 1)
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    pub fn require_connected(&self) -> Result<()> {
        match self.component_count() {
            1 => Ok(()),
            components => Err(Error::Disconnected { components }),
        }
    }

    /// Shortest-path distances from `source` (Dijkstra over edge lengths).
    /// Unreachable vertices get `f64::INFINITY`.
    pub fn distances_from(&self, source: usize) -> Vec<f64> {
        let n = self.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(HeapItem { dist: 0.0, vertex: source });
        while let Some(HeapItem { dist: d, vertex: x }) = heap.pop() {
            if d > dist[x] {
                continue;
            }
            for nb in &self.adjacency[x] {
                let nd = d + nb.length;
                if nd < dist[nb.vertex] {
                    dist[nb.vertex] = nd;
                    heap.push(HeapItem { dist: nd, vertex: nb.vertex });
                }
            }
        }
        dist
    }

    pub fn distance(&self, x: usize, y: usize) -> Result<f64> {
        self.check_vertex(x)?;
        self.check_vertex(y)?;
        Ok(self.distances_from(x)[y])
    }

    /// Largest finite distance from `x`.
    pub fn eccentricity(&self, x: usize) -> f64 {
        self.distances_from(x)
            .into_iter()
            .filter(|d| d.is_finite())
            .fold(0.0, f64::max)
    }

    pub fn diameter(&self) -> f64 {
        (0..self.len()).map(|x| self.eccentricity(x)).fold(0.0, f64::max)
    }

    pub fn min_edge_length(&self) -> Option<f64> {
        self.edges.iter().map(|e| e.length).reduce(f64::min)
    }

    /// Closed metric ball `{y : d(center, y) <= radius}`.
    pub fn ball(&self, center: usize, radius: f64) -> Result<Ball> {
        self.check_vertex(center)?;
        if !(radius >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ball radius {radius} must be non-negative"
            )));
        }
        let dist = self.distances_from(center);
        Ok(Ball::from_distances(center, radius, &dist))
    }

    /// Vertices within `hops` graph steps of `x`, sorted.
    pub fn hop_ball(&self, x: usize, hops: usize) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        seen[x] = true;
        let mut frontier = vec![x];
        let mut all = vec![x];
        for _ in 0..hops {
            let mut next = Vec::new();
            for &v in &frontier {
                for nb in &self.adjacency[v] {
                    if !seen[nb.vertex] {
                        seen[nb.vertex] = true;
                        next.push(nb.vertex);
                    }
                }
            }
            all.extend_from_slice(&next);
            frontier = next;
        }
        all.sort_unstable();
        all
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    vertex: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Closed metric ball with sorted members.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    pub members: Vec<usize>,
}

impl Ball {
    pub(crate) fn from_distances(center: usize, radius: f64, dist: &[f64]) -> Self {
        let members = dist
            .iter()
            .enumerate()
            .filter(|(_, &d)| d <= radius)
            .map(|(i, _)| i)
            .collect();
        Self {
            center,
            radius,
            members,
        }
    }

    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&x).is_ok()
    }

    pub fn measure(&self, space: &DiscreteMms) -> f64 {
        self.members.iter().map(|&i| space.measure()[i]).sum()
    }

    /// Membership mask over all vertices.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &i in &self.members {
            mask[i] = true;
        }
        mask
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> DiscreteMms {
        DiscreteMms::new(vec![1.0; 3], &[EdgeSpec::unit(0, 1), EdgeSpec::unit(1, 2)]).unwrap()
    }

    #[test]
    fn single_edge_space() {
        let s = DiscreteMms::new(vec![1.0, 1.0], &[EdgeSpec::unit(0, 1)]).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.distance(0, 1).unwrap(), 1.0);
    }

    #[test]
    fn path_metric() {
        assert_eq!(p3().distance(0, 2).unwrap(), 2.0);
    }

    #[test]
    fn rejects_bad_entries() {
        let err = DiscreteMms::new(vec![1.0, 1.0], &[EdgeSpec::new(0, 1, -1.0, 1.0)]).unwrap_err();
        assert!(err.to_string().contains("conductance -1"));
        assert!(DiscreteMms::new(vec![1.0, 0.0], &[]).is_err());
        assert!(DiscreteMms::new(vec![1.0, 1.0], &[EdgeSpec::new(0, 1, 1.0, 0.0)]).is_err());
        assert!(DiscreteMms::new(vec![], &[]).is_err());
        assert!(DiscreteMms::new(vec![1.0], &[EdgeSpec::unit(0, 0)]).is_err());
    }

    #[test]
    fn duplicate_edges() {
        let same = [EdgeSpec::unit(0, 1), EdgeSpec::unit(1, 0)];
        assert_eq!(DiscreteMms::new(vec![1.0; 2], &same).unwrap().edges().len(), 1);
        let asym = [EdgeSpec::unit(0, 1), EdgeSpec::new(1, 0, 2.0, 1.0)];
        assert!(DiscreteMms::new(vec![1.0; 2], &asym).is_err());
    }

    #[test]
    fn balls_on_p3() {
        let s = p3();
        assert_eq!(s.ball(1, 1.0).unwrap().members, vec![0, 1, 2]);
        assert_eq!(s.ball(0, 0.5).unwrap().members, vec![0]);
        assert_eq!(s.ball(0, 2.0).unwrap().members, vec![0, 1, 2]);
        assert!(s.ball(5, 1.0).is_err());
        assert!(s.ball(0, -1.0).is_err());
    }

    #[test]
    fn components_and_hops() {
        let s = DiscreteMms::new(vec![1.0; 4], &[EdgeSpec::unit(0, 1), EdgeSpec::unit(2, 3)]).unwrap();
        assert_eq!(s.components(), vec![0, 0, 1, 1]);
        assert!(s.require_connected().is_err());
        assert_eq!(p3().hop_ball(0, 1), vec![0, 1]);
        assert_eq!(p3().hop_ball(0, 2), vec![0, 1, 2]);
        assert_eq!(s.distance(0, 3).unwrap(), f64::INFINITY);
    }
}
