//! Directed graph environment shared by every game layer.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Latitude/longitude pair in degrees. Abstract planar layouts reuse the
/// same fields as (y, x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coord {
    pub lat: f64,
    pub lon: f64,
}

impl Coord {
    pub fn new(lat: f64, lon: f64) -> Self {
        Coord { lat, lon }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub coord: Option<Coord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    #[default]
    HopCount,
    EuclideanOnCoords,
}

#[derive(Debug, Clone)]
pub struct DirectedGameGraph {
    nodes: Vec<Node>,
    edges: BTreeSet<(NodeId, NodeId)>,
    index: HashMap<NodeId, usize>,
    out: Vec<Vec<NodeId>>,
    metric: DistanceMetric,
    hops: OnceLock<Vec<Vec<Option<u32>>>>,
}

impl DirectedGameGraph {
    pub fn new(
        nodes: Vec<Node>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
        metric: DistanceMetric,
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id, i).is_some() {
                return Err(Error::DuplicateNode(n.id));
            }
        }
        let edges: BTreeSet<(NodeId, NodeId)> = edges.into_iter().collect();
        let mut out = vec![Vec::new(); nodes.len()];
        for &(u, v) in &edges {
            let (Some(&iu), true) = (index.get(&u), index.contains_key(&v)) else {
                return Err(Error::DanglingEdge(u, v));
            };
            out[iu].push(v);
        }
        for list in out.iter_mut() {
            list.sort_unstable();
        }
        if metric == DistanceMetric::EuclideanOnCoords && nodes.iter().any(|n| n.coord.is_none()) {
            return Err(Error::InvalidParameter(
                "euclidean distance requires coordinates on every node".into(),
            ));
        }
        Ok(DirectedGameGraph {
            nodes,
            edges,
            index,
            out,
            metric,
            hops: OnceLock::new(),
        })
    }

    /// Builds a graph whose edge set is closed under reversal.
    pub fn undirected(
        nodes: Vec<Node>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
        metric: DistanceMetric,
    ) -> Result<Self> {
        let both: Vec<_> = edges.into_iter().flat_map(|(u, v)| [(u, v), (v, u)]).collect();
        Self::new(nodes, both, metric)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|n| n.id)
    }

    pub fn edges(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn metric(&self) -> DistanceMetric {
        self.metric
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn index_of(&self, id: NodeId) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownNode(id))
    }

    pub fn coord(&self, id: NodeId) -> Option<Coord> {
        self.index.get(&id).and_then(|&i| self.nodes[i].coord)
    }

    /// Out-neighbours of `id` in ascending id order.
    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        match self.index.get(&id) {
            Some(&i) => &self.out[i],
            None => &[],
        }
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.edges.contains(&(u, v))
    }

    /// Hop distance matrix indexed by node position; computed once on demand.
    fn hop_table(&self) -> &Vec<Vec<Option<u32>>> {
        self.hops.get_or_init(|| {
            (0..self.nodes.len())
                .map(|s| self.bfs_from_index(s))
                .collect()
        })
    }

    fn bfs_from_index(&self, s: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.nodes.len()];
        dist[s] = Some(0);
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            for v in &self.out[u] {
                let iv = self.index[v];
                if dist[iv].is_none() {
                    dist[iv] = Some(d + 1);
                    queue.push_back(iv);
                }
            }
        }
        dist
    }

    /// Number of edges on a shortest path from `u` to `v`, if one exists.
    pub fn hop_distance(&self, u: NodeId, v: NodeId) -> Option<u32> {
        let (iu, iv) = (*self.index.get(&u)?, *self.index.get(&v)?);
        self.hop_table()[iu][iv]
    }

    /// A shortest path from `u` to `v` (inclusive of both ends). Among equal
    /// length paths the one discovered first by a BFS that expands
    /// neighbours in ascending id order is returned.
    pub fn shortest_path(&self, u: NodeId, v: NodeId) -> Option<Vec<NodeId>> {
        let iu = *self.index.get(&u)?;
        let iv = *self.index.get(&v)?;
        let mut parent: Vec<Option<usize>> = vec![None; self.nodes.len()];
        let mut seen = vec![false; self.nodes.len()];
        seen[iu] = true;
        let mut queue = VecDeque::from([iu]);
        while let Some(x) = queue.pop_front() {
            if x == iv {
                break;
            }
            for w in &self.out[x] {
                let iw = self.index[w];
                if !seen[iw] {
                    seen[iw] = true;
                    parent[iw] = Some(x);
                    queue.push_back(iw);
                }
            }
        }
        if !seen[iv] {
            return None;
        }
        let mut path = vec![self.nodes[iv].id];
        let mut cur = iv;
        while let Some(p) = parent[cur] {
            path.push(self.nodes[p].id);
            cur = p;
        }
        path.reverse();
        Some(path)
    }

    /// Distance under the graph's configured metric. Unreachable pairs are
    /// infinitely far apart under the hop metric.
    pub fn distance(&self, u: NodeId, v: NodeId) -> f64 {
        match self.metric {
            DistanceMetric::HopCount => self
                .hop_distance(u, v)
                .map_or(f64::INFINITY, |d| d as f64),
            DistanceMetric::EuclideanOnCoords => match (self.coord(u), self.coord(v)) {
                (Some(a), Some(b)) => ((a.lat - b.lat).powi(2) + (a.lon - b.lon).powi(2)).sqrt(),
                _ => f64::INFINITY,
            },
        }
    }

    /// Node whose coordinate is closest to `p` (equirectangular metres),
    /// lowest id on ties. Nodes without coordinates are skipped.
    pub fn nearest_node(&self, p: Coord) -> Option<NodeId> {
        let mut best: Option<(f64, NodeId)> = None;
        for n in &self.nodes {
            let Some(c) = n.coord else { continue };
            let d = crate::geo::equirectangular_m(p, c);
            let better = match best {
                None => true,
                Some((bd, bid)) => d < bd || (d == bd && n.id < bid),
            };
            if better {
                best = Some((d, n.id));
            }
        }
        best.map(|(_, id)| id)
    }
}
