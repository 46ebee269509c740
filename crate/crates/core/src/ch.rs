//! Contraction Hierarchies.
//!
//! Vertices are contracted in ascending rank. Contracting `v` inserts a
//! shortcut between two remaining neighbors whenever the path through `v` is
//! the only shortest connection between them (exact witness search by
//! default). Queries run two upward Dijkstra searches and unpack shortcuts
//! through their middle-vertex tags.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::container::{ByteReader, ByteWriter, ContainerError};
use crate::graph::{Distance, Path, RoadNetwork, VertexId, INFINITY, NO_VERTEX};
use crate::{check_range, QueryEngine, QueryError};

/// Total order on the vertices: `rank[v]` is the position of `v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeOrder {
    rank: Vec<u32>,
}

impl NodeOrder {
    pub fn identity(n: usize) -> Self {
        NodeOrder { rank: (0..n as u32).collect() }
    }

    /// Builds the order in which `sequence[i]` gets rank `i`.
    pub fn from_sequence(sequence: &[VertexId]) -> Option<Self> {
        let mut rank = vec![u32::MAX; sequence.len()];
        for (i, &v) in sequence.iter().enumerate() {
            let slot = rank.get_mut(v as usize)?;
            if *slot != u32::MAX {
                return None;
            }
            *slot = i as u32;
        }
        Some(NodeOrder { rank })
    }

    pub fn from_ranks(rank: Vec<u32>) -> Option<Self> {
        let order = NodeOrder { rank };
        order.is_permutation().then_some(order)
    }

    pub fn rank(&self, v: VertexId) -> u32 {
        self.rank[v as usize]
    }

    pub fn ranks(&self) -> &[u32] {
        &self.rank
    }

    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }

    /// Vertices in ascending rank.
    pub fn sequence(&self) -> Vec<VertexId> {
        let mut seq = vec![0; self.rank.len()];
        for (v, &r) in self.rank.iter().enumerate() {
            seq[r as usize] = v as VertexId;
        }
        seq
    }

    pub fn is_permutation(&self) -> bool {
        let mut seen = vec![false; self.rank.len()];
        self.rank.iter().all(|&r| {
            let ok = (r as usize) < seen.len() && !seen[r as usize];
            if ok {
                seen[r as usize] = true;
            }
            ok
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct ChParams {
    /// Use this contraction sequence instead of the heuristic.
    pub forced_order: Option<Vec<VertexId>>,
    /// Cap on vertices settled per witness search. `None` keeps witness
    /// search exact, so every shortcut weight is a true distance. A cap
    /// only admits extra shortcuts; queries stay exact.
    pub witness_settle_limit: Option<usize>,
}

/// A shortcut `(u, v)` bypassing the contracted vertex `middle`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Shortcut {
    pub u: VertexId,
    pub v: VertexId,
    pub weight: Distance,
    pub middle: VertexId,
}

#[derive(Clone, Copy, Debug)]
struct OverlayArc {
    to: VertexId,
    weight: Distance,
    middle: VertexId,
}

/// The not-yet-contracted part of the network plus added shortcuts.
struct Overlay {
    adj: Vec<Vec<OverlayArc>>,
    contracted: Vec<bool>,
    witness: WitnessSearch,
    settle_limit: Option<usize>,
}

struct WitnessSearch {
    dist: Vec<Distance>,
    touched: Vec<VertexId>,
    heap: BinaryHeap<Reverse<(Distance, VertexId)>>,
}

impl WitnessSearch {
    fn new(n: usize) -> Self {
        WitnessSearch { dist: vec![INFINITY; n], touched: Vec::new(), heap: BinaryHeap::new() }
    }

    /// Distances from `source` in the overlay without `skip`, exact up to
    /// `bound` (or up to `limit` settled vertices).
    fn run(
        &mut self,
        adj: &[Vec<OverlayArc>],
        contracted: &[bool],
        source: VertexId,
        skip: VertexId,
        bound: Distance,
        limit: Option<usize>,
    ) {
        for &v in &self.touched {
            self.dist[v as usize] = INFINITY;
        }
        self.touched.clear();
        self.heap.clear();
        self.dist[source as usize] = 0;
        self.touched.push(source);
        self.heap.push(Reverse((0, source)));
        let mut settled = 0usize;
        while let Some(Reverse((d, u))) = self.heap.pop() {
            if d > self.dist[u as usize] {
                continue;
            }
            if d > bound {
                break;
            }
            settled += 1;
            if limit.is_some_and(|l| settled > l) {
                break;
            }
            for a in &adj[u as usize] {
                if a.to == skip || contracted[a.to as usize] {
                    continue;
                }
                let nd = d + a.weight;
                let cur = self.dist[a.to as usize];
                if nd < cur {
                    if cur == INFINITY {
                        self.touched.push(a.to);
                    }
                    self.dist[a.to as usize] = nd;
                    self.heap.push(Reverse((nd, a.to)));
                }
            }
        }
    }
}

impl Overlay {
    fn new(net: &RoadNetwork, settle_limit: Option<usize>) -> Self {
        let adj = (0..net.n() as VertexId)
            .map(|u| {
                net.neighbors(u)
                    .map(|(v, w)| OverlayArc { to: v, weight: w as Distance, middle: NO_VERTEX })
                    .collect()
            })
            .collect();
        Overlay {
            adj,
            contracted: vec![false; net.n()],
            witness: WitnessSearch::new(net.n()),
            settle_limit,
        }
    }

    /// Shortcuts `(u, x, weight)` that contracting `v` requires, `u < x`.
    /// A pair needs one only when `u - v - x` is a shortest path: there is
    /// no witness avoiding `v`, and neither arc is beaten by a detour that
    /// re-enters `v` from another neighbor.
    fn needed_shortcuts(&mut self, v: VertexId) -> Vec<(VertexId, VertexId, Distance)> {
        let nbrs: Vec<(VertexId, Distance)> = self.adj[v as usize]
            .iter()
            .filter(|a| !self.contracted[a.to as usize])
            .map(|a| (a.to, a.weight))
            .collect();
        let mut tight = vec![true; nbrs.len()];
        let mut candidates = Vec::new();
        for (i, &(u, wu)) in nbrs.iter().enumerate() {
            let rest = &nbrs[i + 1..];
            let max_out = rest.iter().map(|&(_, w)| w).max().unwrap_or(0);
            self.witness.run(&self.adj, &self.contracted, u, v, wu + max_out, self.settle_limit);
            let dist = &self.witness.dist;
            tight[i] = !nbrs.iter().any(|&(y, wy)| y != u && dist[y as usize].saturating_add(wy) < wu);
            for (j, &(x, wx)) in rest.iter().enumerate() {
                let via = wu + wx;
                if dist[x as usize] > via {
                    candidates.push((i, i + 1 + j, via));
                }
            }
        }
        candidates
            .into_iter()
            .filter(|&(i, j, _)| tight[i] && tight[j])
            .map(|(i, j, via)| {
                let (u, x) = (nbrs[i].0, nbrs[j].0);
                (u.min(x), u.max(x), via)
            })
            .collect()
    }

    fn upsert(&mut self, a: VertexId, b: VertexId, weight: Distance, middle: VertexId) {
        let list = &mut self.adj[a as usize];
        match list.iter_mut().find(|arc| arc.to == b) {
            Some(arc) if arc.weight <= weight => {}
            Some(arc) => {
                arc.weight = weight;
                arc.middle = middle;
            }
            None => list.push(OverlayArc { to: b, weight, middle }),
        }
    }

    /// Contracts `v`, returning its arcs to the remaining (higher) vertices.
    fn contract(&mut self, v: VertexId) -> Vec<OverlayArc> {
        for (u, x, w) in self.needed_shortcuts(v) {
            self.upsert(u, x, w, v);
            self.upsert(x, u, w, v);
        }
        self.contracted[v as usize] = true;
        let mut up: Vec<OverlayArc> = self.adj[v as usize]
            .iter()
            .copied()
            .filter(|a| !self.contracted[a.to as usize])
            .collect();
        up.sort_by_key(|a| a.to);
        // Contracted vertices are never visited again; drop their arcs from
        // the neighbors to keep adjacency scans short.
        for a in &up {
            self.adj[a.to as usize].retain(|b| b.to != v);
        }
        self.adj[v as usize] = Vec::new();
        up
    }

    fn live_degree(&self, v: VertexId) -> usize {
        self.adj[v as usize].iter().filter(|a| !self.contracted[a.to as usize]).count()
    }
}

/// Heuristic order: lazy queue keyed by `2 * edge_difference +
/// deleted_neighbors`, re-evaluated on pop, ties to the smaller id.
pub fn compute_order(net: &RoadNetwork, params: &ChParams) -> NodeOrder {
    if let Some(seq) = &params.forced_order {
        return NodeOrder::from_sequence(seq).expect("forced order must be a permutation");
    }
    let n = net.n();
    let mut overlay = Overlay::new(net, params.witness_settle_limit);
    let mut deleted = vec![0i64; n];
    let priority = |overlay: &mut Overlay, deleted: &[i64], v: VertexId| -> i64 {
        let added = overlay.needed_shortcuts(v).len() as i64;
        let ed = added - overlay.live_degree(v) as i64;
        2 * ed + deleted[v as usize]
    };
    let mut heap: BinaryHeap<Reverse<(i64, VertexId)>> = (0..n as VertexId)
        .map(|v| Reverse((priority(&mut overlay, &deleted, v), v)))
        .collect();
    let mut sequence = Vec::with_capacity(n);
    while let Some(Reverse((_, v))) = heap.pop() {
        let p = priority(&mut overlay, &deleted, v);
        if let Some(&Reverse(top)) = heap.peek() {
            if (p, v) > top {
                heap.push(Reverse((p, v)));
                continue;
            }
        }
        for a in overlay.contract(v) {
            deleted[a.to as usize] += 1;
        }
        sequence.push(v);
    }
    NodeOrder::from_sequence(&sequence).expect("every vertex contracted once")
}

/// Contracted network: for every vertex, its arcs to higher-ranked
/// neighbors (original edges and shortcuts), sorted by head id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChIndex {
    rank: Vec<u32>,
    up_first: Vec<u32>,
    up_head: Vec<VertexId>,
    up_weight: Vec<Distance>,
    up_middle: Vec<VertexId>,
}

/// Contracts every vertex in the given order with exact witness search.
pub fn contract_all(net: &RoadNetwork, order: &NodeOrder) -> ChIndex {
    contract_with(net, order, None)
}

pub fn contract_with(net: &RoadNetwork, order: &NodeOrder, witness_settle_limit: Option<usize>) -> ChIndex {
    assert_eq!(order.len(), net.n(), "order must cover every vertex");
    let mut overlay = Overlay::new(net, witness_settle_limit);
    let mut up: Vec<Vec<OverlayArc>> = vec![Vec::new(); net.n()];
    for v in order.sequence() {
        up[v as usize] = overlay.contract(v);
    }
    let mut idx = ChIndex {
        rank: order.ranks().to_vec(),
        up_first: Vec::with_capacity(net.n() + 1),
        up_head: Vec::new(),
        up_weight: Vec::new(),
        up_middle: Vec::new(),
    };
    idx.up_first.push(0);
    for arcs in up {
        for a in arcs {
            idx.up_head.push(a.to);
            idx.up_weight.push(a.weight);
            idx.up_middle.push(a.middle);
        }
        idx.up_first.push(idx.up_head.len() as u32);
    }
    idx
}

/// Orders with the heuristic (or the forced order) and contracts.
pub fn build(net: &RoadNetwork, params: &ChParams) -> ChIndex {
    let order = compute_order(net, params);
    contract_with(net, &order, params.witness_settle_limit)
}

impl ChIndex {
    pub fn n(&self) -> usize {
        self.rank.len()
    }

    pub fn rank(&self, v: VertexId) -> u32 {
        self.rank[v as usize]
    }

    pub fn order(&self) -> NodeOrder {
        NodeOrder { rank: self.rank.clone() }
    }

    pub fn arc_count(&self) -> usize {
        self.up_head.len()
    }

    /// Arcs `(low, high, weight, middle)` where `rank[low] < rank[high]`.
    pub fn arcs(&self) -> impl Iterator<Item = (VertexId, VertexId, Distance, VertexId)> + '_ {
        (0..self.n()).flat_map(move |u| {
            (self.up_first[u] as usize..self.up_first[u + 1] as usize)
                .map(move |i| (u as VertexId, self.up_head[i], self.up_weight[i], self.up_middle[i]))
        })
    }

    pub fn shortcuts(&self) -> Vec<Shortcut> {
        self.arcs()
            .filter(|a| a.3 != NO_VERTEX)
            .map(|(u, v, weight, middle)| Shortcut { u, v, weight, middle })
            .collect()
    }

    pub fn shortcut_count(&self) -> usize {
        self.up_middle.iter().filter(|&&m| m != NO_VERTEX).count()
    }

    #[inline]
    fn up_arcs(&self, v: VertexId) -> std::ops::Range<usize> {
        self.up_first[v as usize] as usize..self.up_first[v as usize + 1] as usize
    }

    /// Index of the arc between `a` and `b`, stored at the lower-ranked end.
    fn find_arc(&self, a: VertexId, b: VertexId) -> Option<usize> {
        let (lo, hi) = if self.rank[a as usize] < self.rank[b as usize] { (a, b) } else { (b, a) };
        let range = self.up_arcs(lo);
        self.up_head[range.clone()].binary_search(&hi).ok().map(|i| range.start + i)
    }

    /// Replaces the arc `a - b` by the original-edge path it stands for,
    /// appending everything after `a` to `out`.
    fn unpack_into(&self, a: VertexId, b: VertexId, out: &mut Vec<VertexId>) -> Result<(), QueryError> {
        let mut stack = vec![(a, b)];
        while let Some((x, y)) = stack.pop() {
            let i = self
                .find_arc(x, y)
                .ok_or_else(|| QueryError::Corrupt(format!("missing arc ({x}, {y})")))?;
            let m = self.up_middle[i];
            if m == NO_VERTEX {
                out.push(y);
            } else {
                stack.push((m, y));
                stack.push((x, m));
            }
        }
        Ok(())
    }

    pub fn query(&self) -> ChQuery<'_> {
        ChQuery::new(self)
    }

    pub(crate) fn write_payload(&self, w: &mut ByteWriter) {
        w.u32(self.n() as u32);
        for &r in &self.rank {
            w.u32(r);
        }
        w.u64(self.arc_count() as u64);
        let wide = self.up_weight.iter().any(|&x| x > u32::MAX as Distance);
        w.u8(if wide { 8 } else { 4 });
        for (u, v, weight, middle) in self.arcs() {
            w.u32(u);
            w.u32(v);
            if wide {
                w.u64(weight);
            } else {
                w.u32(weight as u32);
            }
            w.u32(middle);
        }
    }

    pub(crate) fn read_payload(r: &mut ByteReader<'_>) -> Result<Self, ContainerError> {
        let n = r.u32()? as usize;
        let rank = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
        if !(NodeOrder { rank: rank.clone() }).is_permutation() {
            return Err(ContainerError::Payload("rank array is not a permutation".into()));
        }
        let m = r.u64()? as usize;
        let width = r.u8()?;
        let mut up: Vec<Vec<(VertexId, Distance, VertexId)>> = vec![Vec::new(); n];
        for _ in 0..m {
            let u = r.u32()?;
            let v = r.u32()?;
            let weight = match width {
                4 => r.u32()? as Distance,
                8 => r.u64()?,
                _ => return Err(ContainerError::Payload(format!("bad weight width {width}"))),
            };
            let middle = r.u32()?;
            if u as usize >= n || v as usize >= n || rank[u as usize] >= rank[v as usize] {
                return Err(ContainerError::Payload(format!("bad arc ({u}, {v})")));
            }
            up[u as usize].push((v, weight, middle));
        }
        let mut idx = ChIndex {
            rank,
            up_first: vec![0],
            up_head: Vec::with_capacity(m),
            up_weight: Vec::with_capacity(m),
            up_middle: Vec::with_capacity(m),
        };
        for mut arcs in up {
            arcs.sort_unstable_by_key(|a| a.0);
            for (v, weight, middle) in arcs {
                idx.up_head.push(v);
                idx.up_weight.push(weight);
                idx.up_middle.push(middle);
            }
            idx.up_first.push(idx.up_head.len() as u32);
        }
        Ok(idx)
    }
}

#[derive(Clone, Debug)]
struct UpSearch {
    dist: Vec<Distance>,
    parent: Vec<VertexId>,
    settled: Vec<bool>,
    heap: BinaryHeap<Reverse<(Distance, VertexId)>>,
    touched: Vec<VertexId>,
}

impl UpSearch {
    fn new(n: usize) -> Self {
        UpSearch {
            dist: vec![INFINITY; n],
            parent: vec![NO_VERTEX; n],
            settled: vec![false; n],
            heap: BinaryHeap::new(),
            touched: Vec::new(),
        }
    }

    fn reset(&mut self, root: VertexId) {
        for &v in &self.touched {
            self.dist[v as usize] = INFINITY;
            self.parent[v as usize] = NO_VERTEX;
            self.settled[v as usize] = false;
        }
        self.touched.clear();
        self.heap.clear();
        self.dist[root as usize] = 0;
        self.touched.push(root);
        self.heap.push(Reverse((0, root)));
    }

    fn min_key(&mut self) -> Distance {
        while let Some(&Reverse((d, v))) = self.heap.peek() {
            if self.settled[v as usize] || d > self.dist[v as usize] {
                self.heap.pop();
            } else {
                return d;
            }
        }
        INFINITY
    }
}

/// Per-worker query state for a [`ChIndex`].
#[derive(Clone, Debug)]
pub struct ChQuery<'a> {
    idx: &'a ChIndex,
    fwd: UpSearch,
    bwd: UpSearch,
    settled: usize,
}

impl<'a> ChQuery<'a> {
    pub fn new(idx: &'a ChIndex) -> Self {
        ChQuery { idx, fwd: UpSearch::new(idx.n()), bwd: UpSearch::new(idx.n()), settled: 0 }
    }

    /// Vertices settled by the last query (both directions).
    pub fn search_space(&self) -> usize {
        self.settled
    }

    /// Distance and the meeting (highest-ranked) vertex of a shortest
    /// augmented path.
    pub fn distance_and_meet(&mut self, s: VertexId, t: VertexId) -> Option<(Distance, VertexId)> {
        self.settled = 0;
        if s == t {
            return Some((0, s));
        }
        self.fwd.reset(s);
        self.bwd.reset(t);
        let idx = self.idx;
        let mut best = INFINITY;
        let mut meet = NO_VERTEX;
        loop {
            let kf = self.fwd.min_key();
            let kb = self.bwd.min_key();
            let f_open = kf < best;
            let b_open = kb < best;
            if !f_open && !b_open {
                break;
            }
            let forward = f_open && (!b_open || kf <= kb);
            let (this, other) = if forward {
                (&mut self.fwd, &self.bwd)
            } else {
                (&mut self.bwd, &self.fwd)
            };
            let Reverse((d, u)) = this.heap.pop().expect("open side has a queue entry");
            this.settled[u as usize] = true;
            self.settled += 1;
            let od = other.dist[u as usize];
            if od != INFINITY && d + od < best {
                best = d + od;
                meet = u;
            }
            for i in idx.up_arcs(u) {
                let v = idx.up_head[i];
                if this.settled[v as usize] {
                    continue;
                }
                let nd = d + idx.up_weight[i];
                let cur = this.dist[v as usize];
                if nd < cur {
                    if cur == INFINITY {
                        this.touched.push(v);
                    }
                    this.dist[v as usize] = nd;
                    this.parent[v as usize] = u;
                    this.heap.push(Reverse((nd, v)));
                } else if nd == cur && u < this.parent[v as usize] {
                    this.parent[v as usize] = u;
                }
            }
        }
        (best != INFINITY).then_some((best, meet))
    }

    pub fn distance(&mut self, s: VertexId, t: VertexId) -> Option<Distance> {
        self.distance_and_meet(s, t).map(|(d, _)| d)
    }

    /// Shortest path of original edges.
    pub fn path(&mut self, s: VertexId, t: VertexId) -> Result<Path, QueryError> {
        let (length, meet) = self.distance_and_meet(s, t).ok_or(QueryError::Unreachable(s, t))?;
        if s == t {
            return Ok(Path::trivial(s));
        }
        // Augmented path s .. meet .. t.
        let mut aug = vec![meet];
        let mut cur = meet;
        while cur != s {
            cur = self.fwd.parent[cur as usize];
            aug.push(cur);
        }
        aug.reverse();
        cur = meet;
        while cur != t {
            cur = self.bwd.parent[cur as usize];
            aug.push(cur);
        }
        let mut vertices = Vec::with_capacity(aug.len() * 2);
        vertices.push(s);
        for hop in aug.windows(2) {
            self.idx.unpack_into(hop[0], hop[1], &mut vertices)?;
        }
        Ok(Path { vertices, length })
    }
}

/// [`QueryEngine`] adapter.
pub struct ChEngine<'a> {
    net: &'a RoadNetwork,
    query: ChQuery<'a>,
}

impl<'a> ChEngine<'a> {
    pub fn new(idx: &'a ChIndex, net: &'a RoadNetwork) -> Self {
        ChEngine { net, query: ChQuery::new(idx) }
    }
}

impl QueryEngine for ChEngine<'_> {
    fn distance(&mut self, s: VertexId, t: VertexId) -> Result<Distance, QueryError> {
        check_range(self.net, s)?;
        check_range(self.net, t)?;
        self.query.distance(s, t).ok_or(QueryError::Unreachable(s, t))
    }

    fn path(&mut self, s: VertexId, t: VertexId) -> Result<Path, QueryError> {
        check_range(self.net, s)?;
        check_range(self.net, t)?;
        self.query.path(s, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dijkstra::{sssp, BidiDijkstra};
    use crate::fixtures::{self, v};
    use crate::graph::{NetworkBuilder, Point};
    use crate::synth;

    fn sc(a: u32, b: u32, weight: Distance, middle: u32) -> Shortcut {
        Shortcut { u: v(a).min(v(b)), v: v(a).max(v(b)), weight, middle: v(middle) }
    }

    fn fig1_identity() -> ChIndex {
        let net = fixtures::fig1();
        let order = compute_order(&net, &ChParams { forced_order: Some((0..8).collect()), ..Default::default() });
        assert_eq!(order.ranks(), &[0, 1, 2, 3, 4, 5, 6, 7]);
        contract_all(&net, &order)
    }

    #[test]
    fn fig1_identity_order_shortcuts() {
        let idx = fig1_identity();
        let mut got = idx.shortcuts();
        got.sort();
        let mut want = vec![sc(3, 8, 2, 1), sc(7, 6, 2, 5), sc(7, 8, 4, 6)];
        want.sort();
        assert_eq!(got, want);
        assert!(got.iter().all(|s| s.middle != v(2)));
    }

    #[test]
    fn fig1_identity_queries() {
        let net = fixtures::fig1();
        let idx = fig1_identity();
        let mut q = idx.query();
        assert_eq!(q.distance_and_meet(v(3), v(7)), Some((6, v(8))));
        assert_eq!(q.distance(v(1), v(7)), Some(5));
        assert_eq!(q.distance(v(4), v(4)), Some(0));
        let p = q.path(v(3), v(7)).unwrap();
        assert_eq!(p.vertices, [3, 1, 8, 6, 5, 7].map(v).to_vec());
        net.check_path(&p).unwrap();
    }

    #[test]
    fn triangle_needs_no_shortcuts() {
        let mut b = NetworkBuilder::new(3);
        b.edge(0, 1, 1).edge(1, 2, 1).edge(0, 2, 1);
        for i in 0..3 {
            b.coord(i, Point::new(i as i64, i as i64 % 2));
        }
        let net = b.build().unwrap();
        for seq in [[0, 1, 2], [2, 0, 1], [1, 2, 0]] {
            let idx = contract_all(&net, &NodeOrder::from_sequence(&seq).unwrap());
            assert_eq!(idx.shortcut_count(), 0);
        }
    }

    #[test]
    fn path_middle_first() {
        let net = synth::path_graph(3);
        let idx = contract_all(&net, &NodeOrder::from_sequence(&[1, 0, 2]).unwrap());
        assert_eq!(idx.shortcuts(), vec![Shortcut { u: 0, v: 2, weight: 2, middle: 1 }]);
    }

    #[test]
    fn heuristic_order_is_permutation() {
        let net = synth::path_graph(3);
        assert!(compute_order(&net, &ChParams::default()).is_permutation());
    }

    #[test]
    fn star_center_is_contracted_last() {
        let net = synth::star_graph(5);
        let order = compute_order(&net, &ChParams::default());
        assert_eq!(order.rank(0), 5);
    }

    #[test]
    fn shortcut_weights_are_true_distances() {
        for seed in 0..3 {
            let net = synth::random_geometric(150, 3, 1..=3, seed);
            let idx = build(&net, &ChParams::default());
            for s in idx.shortcuts() {
                let st = sssp(&net, s.u, None);
                assert_eq!(st.dist[s.v as usize], s.weight);
                assert!(idx.rank(s.middle) < idx.rank(s.u).min(idx.rank(s.v)));
            }
        }
    }

    #[test]
    fn exhaustive_against_dijkstra() {
        for (seed, n) in [(1, 60), (2, 120), (3, 200)] {
            let net = synth::random_geometric(n, 3, 1..=4, seed);
            let idx = build(&net, &ChParams::default());
            let mut q = idx.query();
            let mut bidi = BidiDijkstra::new(net.n());
            for s in 0..net.n() as VertexId {
                let st = sssp(&net, s, None);
                for t in 0..net.n() as VertexId {
                    let p = q.path(s, t).unwrap();
                    assert_eq!(p.length, st.dist[t as usize]);
                    net.check_path(&p).unwrap();
                    assert_eq!((p.source(), p.target()), (s, t));
                    let ch_space = q.search_space();
                    bidi.query(&net, s, t);
                    let bd = bidi.stats();
                    // Reported, not asserted: upward search spaces are usually far smaller.
                    let _ = (ch_space, bd.settled_forward + bd.settled_backward);
                }
            }
        }
    }

    #[test]
    fn random_order_stays_correct() {
        let net = synth::random_geometric(100, 2, 1..=5, 11);
        let mut seq: Vec<VertexId> = (0..net.n() as VertexId).collect();
        let mut rng = crate::rng::XorShift64Star::new(3);
        for i in (1..seq.len()).rev() {
            seq.swap(i, rng.below(i as u64 + 1) as usize);
        }
        let idx = contract_all(&net, &NodeOrder::from_sequence(&seq).unwrap());
        let mut q = idx.query();
        for s in 0..net.n() as VertexId {
            let st = sssp(&net, s, None);
            for t in 0..net.n() as VertexId {
                assert_eq!(q.distance(s, t), Some(st.dist[t as usize]));
            }
        }
    }

    #[test]
    fn settle_limit_keeps_queries_exact() {
        let net = synth::random_geometric(150, 3, 1..=3, 5);
        let params = ChParams { witness_settle_limit: Some(3), ..Default::default() };
        let idx = build(&net, &params);
        let exact = build(&net, &ChParams::default());
        assert!(idx.shortcut_count() >= exact.shortcut_count());
        let mut q = idx.query();
        for s in (0..net.n() as VertexId).step_by(7) {
            let st = sssp(&net, s, None);
            for t in 0..net.n() as VertexId {
                let p = q.path(s, t).unwrap();
                assert_eq!(p.length, st.dist[t as usize]);
                net.check_path(&p).unwrap();
            }
        }
    }

    #[test]
    fn from_sequence_rejects_duplicates() {
        assert!(NodeOrder::from_sequence(&[0, 0]).is_none());
        assert!(NodeOrder::from_sequence(&[0, 5]).is_none());
        assert!(NodeOrder::from_ranks(vec![1, 0, 2]).is_some());
    }
}
