//! Transit Node Routing on a uniform `g × g` grid.
//!
//! For a cell `C`, the inner block is the 5×5 block of cells centered at
//! `C` and the outer block the 9×9 block (both clipped at the border). An
//! edge crosses a block boundary iff exactly one endpoint's cell lies in
//! the block. The access nodes of `C` cover every shortest path from a
//! vertex of `C` to a vertex beyond the outer block: for each such path
//! the inside endpoint of its first edge leaving the inner block is an
//! access node.
//!
//! Distance queries between cells at Chebyshev cell distance ≥ 5 combine
//! three table lookups:
//!
//! ```text
//! dist(s, t) = min over a ∈ A(s), b ∈ A(t) of d(s, a) + d(a, b) + d(b, t)
//! ```
//!
//! Everything closer is delegated to a fallback engine. Path queries walk
//! greedy first hops while the two outer blocks are disjoint (cell distance
//! ≥ 9), then hand the remaining segment to the fallback.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::ch::{self, ChIndex, ChParams, ChQuery};
use crate::container::{ByteReader, ByteWriter, ContainerError};
use crate::dijkstra::{BidiDijkstra, Dijkstra};
use crate::graph::{BoundingBox, Distance, Path, Point, RoadNetwork, VertexId, INFINITY};
use crate::{check_range, QueryEngine, QueryError};

pub const MIN_GRID: u32 = 16;
/// Half-width of the inner block in cells (5×5).
pub const INNER_RADIUS: u32 = 2;
/// Half-width of the outer block in cells (9×9).
pub const OUTER_RADIUS: u32 = 4;

pub type CellId = u32;

#[derive(Debug, Error)]
pub enum TnrError {
    #[error("grid granularity {0} is below the minimum of {MIN_GRID}")]
    GridTooSmall(u32),
    #[error("degenerate bounding box ({width} × {height}); use a smaller grid or another method")]
    DegenerateBox { width: i64, height: i64 },
    #[error("{0} access nodes is too many for the distance table; use a coarser grid")]
    TableTooLarge(usize),
    #[error("distance {0} does not fit the 32-bit distance tables")]
    DistanceOverflow(Distance),
    #[error("access node {node} of cell {cell} is not reachable from vertex {vertex}")]
    Unreachable { cell: CellId, node: VertexId, vertex: VertexId },
}

/// Uniform grid over a bounding box. Cell intervals are half-open; points
/// on the maximum coordinate clamp into the last cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    g: u32,
    bbox: BoundingBox,
}

impl Grid {
    pub fn new(g: u32, bbox: BoundingBox) -> Result<Self, TnrError> {
        if g < MIN_GRID {
            return Err(TnrError::GridTooSmall(g));
        }
        if bbox.width() <= 0 || bbox.height() <= 0 {
            return Err(TnrError::DegenerateBox { width: bbox.width(), height: bbox.height() });
        }
        Ok(Grid { g, bbox })
    }

    pub fn g(&self) -> u32 {
        self.g
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    /// Cell side lengths `(x, y)` in coordinate units.
    pub fn cell_size(&self) -> (f64, f64) {
        (self.bbox.width() as f64 / self.g as f64, self.bbox.height() as f64 / self.g as f64)
    }

    fn axis(&self, v: i64, lo: i64, extent: i64) -> u32 {
        let c = ((v - lo) as i128 * self.g as i128).div_euclid(extent as i128);
        c.clamp(0, self.g as i128 - 1) as u32
    }

    /// Column and row of the cell containing `p`.
    pub fn cell_xy(&self, p: Point) -> (u32, u32) {
        (
            self.axis(p.x, self.bbox.min_x, self.bbox.width()),
            self.axis(p.y, self.bbox.min_y, self.bbox.height()),
        )
    }

    pub fn cell_of(&self, p: Point) -> CellId {
        let (x, y) = self.cell_xy(p);
        self.cell_id(x, y)
    }

    pub fn cell_id(&self, x: u32, y: u32) -> CellId {
        y * self.g + x
    }

    pub fn cell_coords(&self, c: CellId) -> (u32, u32) {
        (c % self.g, c / self.g)
    }

    pub fn cell_count(&self) -> usize {
        (self.g as usize) * (self.g as usize)
    }

    /// Chebyshev distance between two cells, in cells.
    pub fn cell_distance(&self, a: CellId, b: CellId) -> u32 {
        let (ax, ay) = self.cell_coords(a);
        let (bx, by) = self.cell_coords(b);
        ax.abs_diff(bx).max(ay.abs_diff(by))
    }

    /// Cells of the `(2r+1)²` block centered at `c`, clipped at the border.
    pub fn block(&self, c: CellId, r: u32) -> impl Iterator<Item = CellId> + '_ {
        let (cx, cy) = self.cell_coords(c);
        let (x0, x1) = (cx.saturating_sub(r), (cx + r).min(self.g - 1));
        let (y0, y1) = (cy.saturating_sub(r), (cy + r).min(self.g - 1));
        (y0..=y1).flat_map(move |y| (x0..=x1).map(move |x| self.cell_id(x, y)))
    }

    /// Whether the block centered at `c` with radius `r` covers every cell.
    pub fn block_covers_grid(&self, c: CellId, r: u32) -> bool {
        let (cx, cy) = self.cell_coords(c);
        cx <= r && cy <= r && cx + r >= self.g - 1 && cy + r >= self.g - 1
    }

    /// Rectangle `(x0, y0, x1, y1)` in coordinate units covered by the cells
    /// `[cx0, cx1] × [cy0, cy1]`. Indices may lie outside the grid.
    pub fn rect(&self, cx0: i64, cy0: i64, cx1: i64, cy1: i64) -> (f64, f64, f64, f64) {
        let (w, h) = self.cell_size();
        (
            self.bbox.min_x as f64 + cx0 as f64 * w,
            self.bbox.min_y as f64 + cy0 as f64 * h,
            self.bbox.min_x as f64 + (cx1 + 1) as f64 * w,
            self.bbox.min_y as f64 + (cy1 + 1) as f64 * h,
        )
    }
}

/// Grid with `g` cells per side over the network's bounding box.
pub fn build_grid(net: &RoadNetwork, g: u32) -> Result<Grid, TnrError> {
    Grid::new(g, net.bounding_box())
}

/// How a query between two cells can be answered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Locality {
    /// Too close: only the fallback can answer.
    Local,
    /// Target beyond the source's outer block: distance tables apply.
    DistanceAnswerable,
    /// Outer blocks disjoint: greedy path retrieval applies as well.
    PathAnswerable,
}

impl Locality {
    pub fn distance_answerable(self) -> bool {
        self >= Locality::DistanceAnswerable
    }

    pub fn path_answerable(self) -> bool {
        self == Locality::PathAnswerable
    }
}

pub fn locality(grid: &Grid, cs: CellId, ct: CellId) -> Locality {
    let d = grid.cell_distance(cs, ct);
    if d > 2 * OUTER_RADIUS {
        Locality::PathAnswerable
    } else if d > OUTER_RADIUS {
        Locality::DistanceAnswerable
    } else {
        Locality::Local
    }
}

/// Vertices grouped by cell.
#[derive(Clone, Debug)]
pub struct CellMembers {
    cell_of: Vec<CellId>,
    first: Vec<u32>,
    members: Vec<VertexId>,
}

impl CellMembers {
    pub fn new(net: &RoadNetwork, grid: &Grid) -> Self {
        let cell_of: Vec<CellId> = net.coords().iter().map(|&p| grid.cell_of(p)).collect();
        let mut first = vec![0u32; grid.cell_count() + 1];
        for &c in &cell_of {
            first[c as usize + 1] += 1;
        }
        for i in 1..first.len() {
            first[i] += first[i - 1];
        }
        let mut fill = first.clone();
        let mut members = vec![0; cell_of.len()];
        for (v, &c) in cell_of.iter().enumerate() {
            members[fill[c as usize] as usize] = v as VertexId;
            fill[c as usize] += 1;
        }
        CellMembers { cell_of, first, members }
    }

    pub fn cell(&self, v: VertexId) -> CellId {
        self.cell_of[v as usize]
    }

    /// Vertices of cell `c` in ascending id order.
    pub fn of(&self, c: CellId) -> &[VertexId] {
        &self.members[self.first[c as usize] as usize..self.first[c as usize + 1] as usize]
    }

    pub fn non_empty_cells(&self) -> impl Iterator<Item = CellId> + '_ {
        (0..self.first.len() as u32 - 1).filter(|&c| self.first[c as usize] < self.first[c as usize + 1])
    }
}

/// Access nodes of one cell with the distance from every member vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccessNodeSet {
    pub cell: CellId,
    /// Vertices of the cell, ascending.
    pub members: Vec<VertexId>,
    /// Access nodes, ascending.
    pub nodes: Vec<VertexId>,
    /// `dist[i * nodes.len() + j]` = distance from `members[i]` to `nodes[j]`.
    pub dist: Vec<Distance>,
}

impl AccessNodeSet {
    /// Fills in member-to-node distances for an arbitrary node choice.
    pub fn with_distances(
        net: &RoadNetwork,
        cell: CellId,
        members: Vec<VertexId>,
        mut nodes: Vec<VertexId>,
        search: &mut Dijkstra,
    ) -> Result<Self, TnrError> {
        nodes.sort_unstable();
        nodes.dedup();
        let mut dist = Vec::with_capacity(members.len() * nodes.len());
        let mut is_node = std::collections::HashSet::new();
        is_node.extend(nodes.iter().copied());
        for &m in &members {
            let mut left = nodes.len();
            if left > 0 {
                search.run(net, m, |u, _| {
                    if is_node.contains(&u) {
                        left -= 1;
                    }
                    left == 0
                });
            }
            for &a in &nodes {
                if !search.is_settled(a) {
                    return Err(TnrError::Unreachable { cell, node: a, vertex: m });
                }
                dist.push(search.dist(a));
            }
        }
        Ok(AccessNodeSet { cell, members, nodes, dist })
    }

    pub fn distance(&self, member_idx: usize, node_idx: usize) -> Distance {
        self.dist[member_idx * self.nodes.len() + node_idx]
    }
}

/// Per-worker scratch for access-node computation.
pub struct AccessScratch {
    search: Dijkstra,
    stamp: Vec<u32>,
    useful: Vec<u32>,
    inside: Vec<u32>,
    round: u32,
}

impl AccessScratch {
    pub fn new(n: usize) -> Self {
        AccessScratch {
            search: Dijkstra::new(n),
            stamp: vec![0; n],
            useful: vec![0; n],
            inside: vec![0; n],
            round: 0,
        }
    }

    fn next_round(&mut self) -> u32 {
        self.round = self.round.wrapping_add(1);
        if self.round == 0 {
            self.stamp.fill(0);
            self.useful.fill(0);
            self.inside.fill(0);
            self.round = 1;
        }
        self.round
    }
}

/// Access nodes of `cell`.
///
/// Targets are the outside endpoints of edges leaving the outer block. For
/// every member `v`, one Dijkstra search settles all targets; on the
/// resulting shortest-path DAG, an edge `(x, y)` leaving the inner block
/// contributes `x` when `x` is reachable from `v` inside the inner block
/// and some target is reachable from `y`. This hits every shortest path
/// (not only the tie-broken one) from the cell to beyond the outer block.
pub fn compute_access_nodes(
    net: &RoadNetwork,
    grid: &Grid,
    cells: &CellMembers,
    cell: CellId,
    scratch: &mut AccessScratch,
) -> Result<AccessNodeSet, TnrError> {
    let members = cells.of(cell).to_vec();
    if members.is_empty() || grid.block_covers_grid(cell, OUTER_RADIUS) {
        return Ok(AccessNodeSet { cell, members, nodes: Vec::new(), dist: Vec::new() });
    }
    let in_inner = |v: VertexId| grid.cell_distance(cells.cell(v), cell) <= INNER_RADIUS;
    let in_outer = |v: VertexId| grid.cell_distance(cells.cell(v), cell) <= OUTER_RADIUS;

    let target_round = scratch.next_round();
    let mut target_count = 0usize;
    for c in grid.block(cell, OUTER_RADIUS) {
        for &x in cells.of(c) {
            for (y, _) in net.neighbors(x) {
                if !in_outer(y) && scratch.stamp[y as usize] != target_round {
                    scratch.stamp[y as usize] = target_round;
                    target_count += 1;
                }
            }
        }
    }
    if target_count == 0 {
        return Ok(AccessNodeSet { cell, members, nodes: Vec::new(), dist: Vec::new() });
    }

    let mut nodes: Vec<VertexId> = Vec::new();
    for &v in &members {
        let mut left = target_count;
        let mut horizon = INFINITY;
        let stamp = &scratch.stamp;
        // Settle every target, then everything tied with the farthest one.
        scratch.search.run(net, v, |u, d| {
            if left > 0 && stamp[u as usize] == target_round {
                left -= 1;
                if left == 0 {
                    horizon = d;
                }
            }
            left == 0 && d > horizon
        });
        let round = scratch.next_round();
        // `next_round` may have cleared the target stamps on wrap-around.
        let is_target = |scratch: &AccessScratch, u: VertexId| {
            scratch.stamp[u as usize] == target_round && target_round != 0
        };
        let order: Vec<VertexId> = scratch.search.settled_order().to_vec();
        for &x in order.iter().rev() {
            let dx = scratch.search.dist(x);
            let reaches = is_target(scratch, x)
                || net.neighbors(x).any(|(y, w)| {
                    scratch.search.is_settled(y)
                        && dx + w as Distance == scratch.search.dist(y)
                        && scratch.useful[y as usize] == round
                });
            if reaches {
                scratch.useful[x as usize] = round;
            }
        }
        scratch.inside[v as usize] = round;
        for &x in &order {
            if scratch.inside[x as usize] != round {
                continue;
            }
            let dx = scratch.search.dist(x);
            for (y, w) in net.neighbors(x) {
                if !scratch.search.is_settled(y) || dx + w as Distance != scratch.search.dist(y) {
                    continue;
                }
                if in_inner(y) {
                    scratch.inside[y as usize] = round;
                } else if scratch.useful[y as usize] == round {
                    nodes.push(x);
                }
            }
        }
    }
    nodes.sort_unstable();
    nodes.dedup();
    AccessNodeSet::with_distances(net, cell, members, nodes, &mut scratch.search)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FallbackKind {
    #[default]
    Ch,
    Bidijkstra,
}

impl FromStr for FallbackKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ch" => Ok(FallbackKind::Ch),
            "bidijkstra" => Ok(FallbackKind::Bidijkstra),
            other => Err(format!("unknown fallback `{other}` (expected ch or bidijkstra)")),
        }
    }
}

impl fmt::Display for FallbackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FallbackKind::Ch => "ch",
            FallbackKind::Bidijkstra => "bidijkstra",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Fallback {
    Ch(ChIndex),
    Bidijkstra,
}

impl Fallback {
    pub fn kind(&self) -> FallbackKind {
        match self {
            Fallback::Ch(_) => FallbackKind::Ch,
            Fallback::Bidijkstra => FallbackKind::Bidijkstra,
        }
    }
}

/// Largest access-node count for which the pairwise table is built.
pub const MAX_TABLE_NODES: usize = 40_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TnrIndex {
    grid: Grid,
    cells: CellMembers,
    coords_fingerprint: u64,
    /// Global access-node list, ascending.
    access: Vec<VertexId>,
    /// Per cell: range into `cell_nodes`, which holds indices into `access`.
    cell_first: Vec<u32>,
    cell_nodes: Vec<u32>,
    /// Per vertex: range into `vertex_dist` (one entry per access node of
    /// the vertex's cell, in `cell_nodes` order).
    vertex_first: Vec<u32>,
    vertex_dist: Vec<u32>,
    /// Dense `access.len()²` distance table.
    table: Vec<u32>,
    fallback: Fallback,
}

impl PartialEq for CellMembers {
    fn eq(&self, other: &Self) -> bool {
        self.cell_of == other.cell_of
    }
}

impl Eq for CellMembers {}

fn narrow(d: Distance) -> Result<u32, TnrError> {
    if d >= u32::MAX as Distance {
        Err(TnrError::DistanceOverflow(d))
    } else {
        Ok(d as u32)
    }
}

/// Builds the grid, access nodes, both distance tables and the fallback.
pub fn build_tnr(net: &RoadNetwork, g: u32, fallback: FallbackKind) -> Result<TnrIndex, TnrError> {
    let grid = build_grid(net, g)?;
    let cells = CellMembers::new(net, &grid);
    let cell_list: Vec<CellId> = cells.non_empty_cells().collect();
    let sets = cell_list
        .par_iter()
        .map_init(
            || AccessScratch::new(net.n()),
            |scratch, &c| compute_access_nodes(net, &grid, &cells, c, scratch),
        )
        .collect::<Result<Vec<_>, _>>()?;
    let fallback = match fallback {
        FallbackKind::Ch => Fallback::Ch(ch::build(net, &ChParams::default())),
        FallbackKind::Bidijkstra => Fallback::Bidijkstra,
    };
    TnrIndex::from_access_sets(net, grid, sets, fallback)
}

impl TnrIndex {
    /// Assembles an index from precomputed access sets (one per non-empty
    /// cell, any order) and computes the pairwise access-node table.
    pub fn from_access_sets(
        net: &RoadNetwork,
        grid: Grid,
        mut sets: Vec<AccessNodeSet>,
        fallback: Fallback,
    ) -> Result<Self, TnrError> {
        let cells = CellMembers::new(net, &grid);
        sets.sort_by_key(|s| s.cell);
        let mut access: Vec<VertexId> = sets.iter().flat_map(|s| s.nodes.iter().copied()).collect();
        access.sort_unstable();
        access.dedup();
        if access.len() > MAX_TABLE_NODES {
            return Err(TnrError::TableTooLarge(access.len()));
        }
        let global = |v: VertexId| access.binary_search(&v).expect("node is in the union") as u32;

        let mut cell_first = vec![0u32; grid.cell_count() + 1];
        let mut cell_nodes = Vec::new();
        let mut per_vertex: Vec<Vec<u32>> = vec![Vec::new(); net.n()];
        let mut next_cell = 0usize;
        for set in &sets {
            while next_cell <= set.cell as usize {
                cell_first[next_cell] = cell_nodes.len() as u32;
                next_cell += 1;
            }
            cell_nodes.extend(set.nodes.iter().map(|&a| global(a)));
            for (i, &m) in set.members.iter().enumerate() {
                per_vertex[m as usize] = (0..set.nodes.len())
                    .map(|j| narrow(set.distance(i, j)))
                    .collect::<Result<_, _>>()?;
            }
        }
        while next_cell <= grid.cell_count() {
            cell_first[next_cell] = cell_nodes.len() as u32;
            next_cell += 1;
        }
        let mut vertex_first = Vec::with_capacity(net.n() + 1);
        let mut vertex_dist = Vec::new();
        vertex_first.push(0);
        for row in per_vertex {
            vertex_dist.extend(row);
            vertex_first.push(vertex_dist.len() as u32);
        }

        let k = access.len();
        let rows = access
            .par_iter()
            .map_init(
                || Dijkstra::new(net.n()),
                |search, &a| {
                    let is_access = |u: VertexId| access.binary_search(&u).is_ok();
                    let mut left = k;
                    search.run(net, a, |u, _| {
                        if is_access(u) {
                            left -= 1;
                        }
                        left == 0
                    });
                    access
                        .iter()
                        .map(|&b| if search.is_settled(b) { narrow(search.dist(b)) } else { Ok(u32::MAX) })
                        .collect::<Result<Vec<u32>, _>>()
                },
            )
            .collect::<Result<Vec<_>, _>>()?;
        let mut table = Vec::with_capacity(k * k);
        for row in rows {
            table.extend(row);
        }

        Ok(TnrIndex {
            grid,
            cells,
            coords_fingerprint: coords_fingerprint(net),
            access,
            cell_first,
            cell_nodes,
            vertex_first,
            vertex_dist,
            table,
            fallback,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn cell_of(&self, v: VertexId) -> CellId {
        self.cells.cell(v)
    }

    pub fn cell_members(&self) -> &CellMembers {
        &self.cells
    }

    pub fn fallback(&self) -> &Fallback {
        &self.fallback
    }

    /// Access nodes of cell `c`, ascending.
    pub fn access_nodes(&self, c: CellId) -> Vec<VertexId> {
        self.cell_node_indices(c).iter().map(|&i| self.access[i as usize]).collect()
    }

    fn cell_node_indices(&self, c: CellId) -> &[u32] {
        &self.cell_nodes[self.cell_first[c as usize] as usize..self.cell_first[c as usize + 1] as usize]
    }

    fn vertex_row(&self, v: VertexId) -> &[u32] {
        &self.vertex_dist[self.vertex_first[v as usize] as usize..self.vertex_first[v as usize + 1] as usize]
    }

    /// Distance from `v` to the access node `a` of its cell (`I_2`).
    pub fn access_distance(&self, v: VertexId, a: VertexId) -> Option<Distance> {
        let nodes = self.cell_node_indices(self.cell_of(v));
        let j = nodes.iter().position(|&i| self.access[i as usize] == a)?;
        Some(self.vertex_row(v)[j] as Distance)
    }

    /// Tabulated distance between two access nodes (`I_1`).
    pub fn table_distance(&self, a: VertexId, b: VertexId) -> Option<Distance> {
        let i = self.access.binary_search(&a).ok()?;
        let j = self.access.binary_search(&b).ok()?;
        let d = self.table[i * self.access.len() + j];
        Some(if d == u32::MAX { INFINITY } else { d as Distance })
    }

    pub fn locality(&self, s: VertexId, t: VertexId) -> Locality {
        locality(&self.grid, self.cell_of(s), self.cell_of(t))
    }

    /// Table-only distance; meaningful when the pair is distance-answerable.
    pub fn table_query(&self, s: VertexId, t: VertexId) -> Distance {
        let (ns, nt) = (self.cell_node_indices(self.cell_of(s)), self.cell_node_indices(self.cell_of(t)));
        let (rs, rt) = (self.vertex_row(s), self.vertex_row(t));
        let k = self.access.len();
        let mut best = INFINITY;
        for (i, &gi) in ns.iter().enumerate() {
            let row = &self.table[gi as usize * k..(gi as usize + 1) * k];
            let ds = rs[i] as Distance;
            for (j, &gj) in nt.iter().enumerate() {
                let mid = row[gj as usize];
                if mid == u32::MAX {
                    continue;
                }
                let d = ds + mid as Distance + rt[j] as Distance;
                if d < best {
                    best = d;
                }
            }
        }
        best
    }

    pub fn stats(&self) -> TnrStats {
        let non_empty = self.cells.non_empty_cells().count();
        let total: usize = self.cells.non_empty_cells().map(|c| self.cell_node_indices(c).len()).sum();
        TnrStats {
            grid: self.grid.g,
            non_empty_cells: non_empty,
            distinct_access_nodes: self.access.len(),
            mean_access_per_cell: if non_empty == 0 { 0.0 } else { total as f64 / non_empty as f64 },
            table_entries: self.table.len(),
            vertex_entries: self.vertex_dist.len(),
        }
    }

    pub(crate) fn write_payload(&self, w: &mut ByteWriter) {
        w.u32(self.grid.g);
        let bb = self.grid.bbox;
        for x in [bb.min_x, bb.min_y, bb.max_x, bb.max_y] {
            w.i64(x);
        }
        w.u64(self.coords_fingerprint);
        w.u64(self.access.len() as u64);
        for &a in &self.access {
            w.u32(a);
        }
        let non_empty: Vec<CellId> =
            (0..self.grid.cell_count() as u32).filter(|&c| !self.cell_node_indices(c).is_empty()).collect();
        w.u64(non_empty.len() as u64);
        for c in non_empty {
            let nodes = self.cell_node_indices(c);
            w.u32(c);
            w.u32(nodes.len() as u32);
            for &i in nodes {
                w.u32(i);
            }
        }
        // I_2 as (vertex, access node, distance) triples.
        w.u64(self.vertex_dist.len() as u64);
        for v in 0..self.cells.cell_of.len() as VertexId {
            let nodes = self.cell_node_indices(self.cell_of(v));
            for (j, &d) in self.vertex_row(v).iter().enumerate() {
                w.u32(v);
                w.u32(self.access[nodes[j] as usize]);
                w.u32(d);
            }
        }
        // I_1 upper triangle, row-major.
        let k = self.access.len();
        for i in 0..k {
            for j in i + 1..k {
                w.u32(self.table[i * k + j]);
            }
        }
        match &self.fallback {
            Fallback::Ch(idx) => {
                w.u8(1);
                idx.write_payload(w);
            }
            Fallback::Bidijkstra => w.u8(2),
        }
    }

    pub(crate) fn read_payload(r: &mut ByteReader<'_>, net: &RoadNetwork) -> Result<Self, ContainerError> {
        let bad = |m: &str| ContainerError::Payload(m.to_string());
        let g = r.u32()?;
        let (min_x, min_y, max_x, max_y) = (r.i64()?, r.i64()?, r.i64()?, r.i64()?);
        let grid = Grid::new(g, BoundingBox { min_x, min_y, max_x, max_y })
            .map_err(|e| ContainerError::Payload(e.to_string()))?;
        if r.u64()? != coords_fingerprint(net) {
            return Err(bad("coordinates differ from the indexed network"));
        }
        let cells = CellMembers::new(net, &grid);
        let k = r.count(4)?;
        let access = (0..k).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
        if access.windows(2).any(|w| w[0] >= w[1]) || access.iter().any(|&a| a as usize >= net.n()) {
            return Err(bad("access list not sorted or out of range"));
        }
        let mut cell_first = vec![0u32; grid.cell_count() + 1];
        let mut cell_nodes = Vec::new();
        let cell_count = r.count(8)?;
        let mut next_cell = 0usize;
        for _ in 0..cell_count {
            let c = r.u32()? as usize;
            let len = r.u32()? as usize;
            if c >= grid.cell_count() || c < next_cell {
                return Err(bad("cell ids out of order"));
            }
            while next_cell <= c {
                cell_first[next_cell] = cell_nodes.len() as u32;
                next_cell += 1;
            }
            for _ in 0..len {
                let i = r.u32()?;
                if i as usize >= k {
                    return Err(bad("access index out of range"));
                }
                cell_nodes.push(i);
            }
        }
        while next_cell <= grid.cell_count() {
            cell_first[next_cell] = cell_nodes.len() as u32;
            next_cell += 1;
        }
        let mut idx = TnrIndex {
            grid,
            cells,
            coords_fingerprint: coords_fingerprint(net),
            access,
            cell_first,
            cell_nodes,
            vertex_first: Vec::with_capacity(net.n() + 1),
            vertex_dist: Vec::new(),
            table: vec![0; k * k],
            fallback: Fallback::Bidijkstra,
        };
        let triples = r.count(12)?;
        idx.vertex_first.push(0);
        let mut read = 0usize;
        for v in 0..net.n() as VertexId {
            let nodes = idx.cell_node_indices(idx.cell_of(v)).to_vec();
            for &gi in &nodes {
                let (tv, ta, d) = (r.u32()?, r.u32()?, r.u32()?);
                if tv != v || ta != idx.access[gi as usize] {
                    return Err(bad("vertex distance triples out of order"));
                }
                idx.vertex_dist.push(d);
                read += 1;
            }
            idx.vertex_first.push(idx.vertex_dist.len() as u32);
        }
        if read != triples {
            return Err(bad("vertex distance triple count mismatch"));
        }
        for i in 0..k {
            for j in i + 1..k {
                let d = r.u32()?;
                idx.table[i * k + j] = d;
                idx.table[j * k + i] = d;
            }
        }
        idx.fallback = match r.u8()? {
            1 => Fallback::Ch(ChIndex::read_payload(r)?),
            2 => Fallback::Bidijkstra,
            t => return Err(ContainerError::Payload(format!("unknown fallback tag {t}"))),
        };
        Ok(idx)
    }
}

/// 64-bit FNV-1a over all coordinates, for spatial indexes whose layout
/// depends on positions as well as on the graph.
pub(crate) fn coords_fingerprint(net: &RoadNetwork) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for p in net.coords() {
        for b in p.x.to_le_bytes().into_iter().chain(p.y.to_le_bytes()) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

#[derive(Clone, Debug, PartialEq)]
pub struct TnrStats {
    pub grid: u32,
    pub non_empty_cells: usize,
    pub distinct_access_nodes: usize,
    pub mean_access_per_cell: f64,
    pub table_entries: usize,
    pub vertex_entries: usize,
}

enum FallbackQuery<'a> {
    Ch(ChQuery<'a>),
    Bidi(BidiDijkstra),
}

/// Per-worker query state for a [`TnrIndex`].
pub struct TnrEngine<'a> {
    idx: &'a TnrIndex,
    net: &'a RoadNetwork,
    fallback: FallbackQuery<'a>,
    table_answers: usize,
}

impl<'a> TnrEngine<'a> {
    pub fn new(idx: &'a TnrIndex, net: &'a RoadNetwork) -> Self {
        let fallback = match &idx.fallback {
            Fallback::Ch(ch) => FallbackQuery::Ch(ChQuery::new(ch)),
            Fallback::Bidijkstra => FallbackQuery::Bidi(BidiDijkstra::new(net.n())),
        };
        TnrEngine { idx, net, fallback, table_answers: 0 }
    }

    /// Number of distance answers served from the tables so far.
    pub fn table_answers(&self) -> usize {
        self.table_answers
    }

    fn fallback_distance(&mut self, s: VertexId, t: VertexId) -> Result<Distance, QueryError> {
        match &mut self.fallback {
            FallbackQuery::Ch(q) => q.distance(s, t),
            FallbackQuery::Bidi(b) => b.query(self.net, s, t).map(|(d, _)| d),
        }
        .ok_or(QueryError::Unreachable(s, t))
    }

    fn fallback_path(&mut self, s: VertexId, t: VertexId) -> Result<Path, QueryError> {
        match &mut self.fallback {
            FallbackQuery::Ch(q) => q.path(s, t),
            FallbackQuery::Bidi(b) => b.query(self.net, s, t).map(|(_, p)| p).ok_or(QueryError::Unreachable(s, t)),
        }
    }

    fn dist(&mut self, s: VertexId, t: VertexId) -> Result<Distance, QueryError> {
        if s == t {
            return Ok(0);
        }
        if self.idx.locality(s, t).distance_answerable() {
            self.table_answers += 1;
            let d = self.idx.table_query(s, t);
            if d == INFINITY {
                return Err(QueryError::Unreachable(s, t));
            }
            Ok(d)
        } else {
            self.fallback_distance(s, t)
        }
    }
}

impl QueryEngine for TnrEngine<'_> {
    fn distance(&mut self, s: VertexId, t: VertexId) -> Result<Distance, QueryError> {
        check_range(self.net, s)?;
        check_range(self.net, t)?;
        self.dist(s, t)
    }

    fn path(&mut self, s: VertexId, t: VertexId) -> Result<Path, QueryError> {
        check_range(self.net, s)?;
        check_range(self.net, t)?;
        if s == t {
            return Ok(Path::trivial(s));
        }
        let mut head = Path::trivial(s);
        let mut cur = s;
        while self.idx.locality(cur, t).path_answerable() {
            if head.k() > self.net.n() {
                return Err(QueryError::Corrupt(format!("greedy walk from {s} to {t} does not terminate")));
            }
            let mut best: Option<(Distance, VertexId, Distance)> = None;
            for (v, w) in self.net.neighbors(cur) {
                let d = match self.dist(v, t) {
                    Ok(d) => d,
                    Err(QueryError::Unreachable(..)) => continue,
                    Err(e) => return Err(e),
                };
                let total = w as Distance + d;
                if best.is_none_or(|(b, _, _)| total < b) {
                    best = Some((total, v, w as Distance));
                }
            }
            let (_, next, w) = best.ok_or(QueryError::Unreachable(cur, t))?;
            head.vertices.push(next);
            head.length += w;
            cur = next;
        }
        let tail = self.fallback_path(cur, t)?;
        head.concat(tail).map_err(|e| QueryError::Corrupt(e.to_string()))
    }
}
