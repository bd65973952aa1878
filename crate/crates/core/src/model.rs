//! Graphs, requests, instances and solutions.
//!
//! Paths and trees are cycle-free, so a request `[x,y]` is identified with the
//! unique `x`-`y` path. Grids are not, and an accepted grid request carries an
//! explicit edge allocation.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{DpaError, Result};

pub type Vertex = u32;
pub type EdgeId = usize;

/// Fingerprint of a graph; every request remembers which graph it lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GraphId(pub u64);

/// A path with vertices `0..=length` and edge `i` joining `i` and `i + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathGraph {
    length: u32,
}

impl PathGraph {
    pub fn new(length: u32) -> Result<Self> {
        if length == 0 {
            return Err(DpaError::InvalidGraph(
                "path length must be at least 1".into(),
            ));
        }
        Ok(Self { length })
    }

    pub fn length(&self) -> u32 {
        self.length
    }
}

/// A tree rooted at its smallest-id leaf.
///
/// Edges are identified by their lower (child) endpoint, so edge ids range over
/// `0..vertex_count` with the root's slot unused.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeGraph {
    edges: Vec<(Vertex, Vertex)>,
    root: Vertex,
    parent: Vec<Option<Vertex>>,
    depth: Vec<u32>,
    children: Vec<Vec<Vertex>>,
    degree: Vec<u32>,
}

impl TreeGraph {
    /// Builds a tree on vertices `0..=edges.len()`.
    pub fn new(edges: &[(Vertex, Vertex)]) -> Result<Self> {
        let n = edges.len() + 1;
        if n < 2 {
            return Err(DpaError::InvalidTree(
                "a tree needs at least two vertices".into(),
            ));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(DpaError::InvalidTree(format!(
                    "edge ({u},{v}) references a vertex outside 0..{n}"
                )));
            }
            if u == v {
                return Err(DpaError::InvalidTree(format!("self loop at {u}")));
            }
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        let degree: Vec<u32> = adjacency.iter().map(|a| a.len() as u32).collect();
        let root = degree
            .iter()
            .position(|&d| d == 1)
            .ok_or_else(|| DpaError::InvalidTree("no leaf to root the tree at".into()))?
            as Vertex;

        let mut parent = vec![None; n];
        let mut depth = vec![0u32; n];
        let mut seen = vec![false; n];
        let mut children = vec![Vec::new(); n];
        let mut queue = VecDeque::from([root]);
        seen[root as usize] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u as usize] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    parent[v as usize] = Some(u);
                    depth[v as usize] = depth[u as usize] + 1;
                    children[u as usize].push(v);
                    queue.push_back(v);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(DpaError::InvalidTree("graph is not connected".into()));
        }
        for c in &mut children {
            c.sort_unstable();
        }
        let edges = edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        Ok(Self {
            edges,
            root,
            parent,
            depth,
            children,
            degree,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn root(&self) -> Vertex {
        self.root
    }

    pub fn parent(&self, v: Vertex) -> Option<Vertex> {
        self.parent[v as usize]
    }

    pub fn depth(&self, v: Vertex) -> u32 {
        self.depth[v as usize]
    }

    pub fn children(&self, v: Vertex) -> &[Vertex] {
        &self.children[v as usize]
    }

    pub fn degree(&self, v: Vertex) -> u32 {
        self.degree[v as usize]
    }

    pub fn max_degree(&self) -> u32 {
        self.degree.iter().copied().max().unwrap_or(0)
    }

    /// Neighbors of `v` in ascending id order.
    pub fn neighbors(&self, v: Vertex) -> Vec<Vertex> {
        let mut out: Vec<Vertex> = self.children(v).to_vec();
        out.extend(self.parent(v));
        out.sort_unstable();
        out
    }

    /// Edge id of `{v, parent(v)}`.
    pub fn edge_to_parent(&self, v: Vertex) -> Option<EdgeId> {
        self.parent(v).map(|_| v as EdgeId)
    }

    /// Edge id joining two adjacent vertices.
    pub fn edge_between(&self, u: Vertex, v: Vertex) -> Option<EdgeId> {
        if self.parent(u) == Some(v) {
            Some(u as EdgeId)
        } else if self.parent(v) == Some(u) {
            Some(v as EdgeId)
        } else {
            None
        }
    }

    pub fn lca(&self, mut x: Vertex, mut y: Vertex) -> Vertex {
        while self.depth(x) > self.depth(y) {
            x = self.parent(x).expect("non-root has a parent");
        }
        while self.depth(y) > self.depth(x) {
            y = self.parent(y).expect("non-root has a parent");
        }
        while x != y {
            x = self.parent(x).expect("non-root has a parent");
            y = self.parent(y).expect("non-root has a parent");
        }
        x
    }

    pub fn distance(&self, x: Vertex, y: Vertex) -> u32 {
        let l = self.lca(x, y);
        self.depth(x) + self.depth(y) - 2 * self.depth(l)
    }

    /// Vertices of the `x`-`y` path, from `x` to `y`.
    pub fn path_vertices(&self, x: Vertex, y: Vertex) -> Vec<Vertex> {
        let l = self.lca(x, y);
        let mut up = Vec::new();
        let mut v = x;
        while v != l {
            up.push(v);
            v = self.parent(v).expect("below the lca");
        }
        up.push(l);
        let mut down = Vec::new();
        let mut v = y;
        while v != l {
            down.push(v);
            v = self.parent(v).expect("below the lca");
        }
        up.extend(down.into_iter().rev());
        up
    }

    /// The child of `ancestor` on the way down to `descendant`.
    pub fn child_toward(&self, ancestor: Vertex, descendant: Vertex) -> Option<Vertex> {
        let mut v = descendant;
        while let Some(p) = self.parent(v) {
            if p == ancestor {
                return Some(v);
            }
            if self.depth(p) < self.depth(ancestor) {
                return None;
            }
            v = p;
        }
        None
    }
}

/// A `rows x cols` grid with 4-neighbor adjacency; vertex `(r, c)` has id `r * cols + c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridGraph {
    rows: u32,
    cols: u32,
}

impl GridGraph {
    pub fn new(rows: u32, cols: u32) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols < 2 {
            return Err(DpaError::InvalidGraph(format!(
                "grid {rows}x{cols} has no edges"
            )));
        }
        Ok(Self { rows, cols })
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn vertex(&self, row: u32, col: u32) -> Vertex {
        row * self.cols + col
    }

    pub fn coords(&self, v: Vertex) -> (u32, u32) {
        (v / self.cols, v % self.cols)
    }

    pub fn vertex_count(&self) -> usize {
        (self.rows * self.cols) as usize
    }

    pub fn edge_count(&self) -> usize {
        (self.rows * (self.cols - 1) + self.cols * (self.rows - 1)) as usize
    }

    pub fn neighbors(&self, v: Vertex) -> Vec<Vertex> {
        let (r, c) = self.coords(v);
        let mut out = Vec::with_capacity(4);
        if r > 0 {
            out.push(self.vertex(r - 1, c));
        }
        if c > 0 {
            out.push(self.vertex(r, c - 1));
        }
        if c + 1 < self.cols {
            out.push(self.vertex(r, c + 1));
        }
        if r + 1 < self.rows {
            out.push(self.vertex(r + 1, c));
        }
        out
    }

    pub fn edge_between(&self, u: Vertex, v: Vertex) -> Option<EdgeId> {
        let (a, b) = (u.min(v), u.max(v));
        let (ra, ca) = self.coords(a);
        let (rb, cb) = self.coords(b);
        if ra == rb && cb == ca + 1 {
            Some((ra * (self.cols - 1) + ca) as EdgeId)
        } else if ca == cb && rb == ra + 1 {
            Some((self.rows * (self.cols - 1) + ra * self.cols + ca) as EdgeId)
        } else {
            None
        }
    }

    pub fn edge_endpoints(&self, e: EdgeId) -> (Vertex, Vertex) {
        let e = e as u32;
        let horizontal = self.rows * (self.cols - 1);
        if e < horizontal {
            let (r, c) = (e / (self.cols - 1), e % (self.cols - 1));
            (self.vertex(r, c), self.vertex(r, c + 1))
        } else {
            let e = e - horizontal;
            let (r, c) = (e / self.cols, e % self.cols);
            (self.vertex(r, c), self.vertex(r + 1, c))
        }
    }

    /// Manhattan distance.
    pub fn distance(&self, u: Vertex, v: Vertex) -> u32 {
        let (ru, cu) = self.coords(u);
        let (rv, cv) = self.coords(v);
        ru.abs_diff(rv) + cu.abs_diff(cv)
    }

    /// Every simple path from `x` to `y`, as edge sequences from `x` to `y`.
    pub fn simple_paths(&self, x: Vertex, y: Vertex) -> Vec<Vec<EdgeId>> {
        fn walk(
            grid: &GridGraph,
            at: Vertex,
            target: Vertex,
            visited: &mut Vec<bool>,
            edges: &mut Vec<EdgeId>,
            out: &mut Vec<Vec<EdgeId>>,
        ) {
            if at == target {
                out.push(edges.clone());
                return;
            }
            for next in grid.neighbors(at) {
                if !visited[next as usize] {
                    visited[next as usize] = true;
                    edges.push(
                        grid.edge_between(at, next)
                            .expect("neighbors share an edge"),
                    );
                    walk(grid, next, target, visited, edges, out);
                    edges.pop();
                    visited[next as usize] = false;
                }
            }
        }
        let mut out = Vec::new();
        let mut visited = vec![false; self.vertex_count()];
        visited[x as usize] = true;
        walk(self, x, y, &mut visited, &mut Vec::new(), &mut out);
        out
    }

    /// Vertex sequence of an edge path starting at `from`, or `None` if the
    /// edges do not form a simple walk.
    pub fn walk_vertices(&self, from: Vertex, edges: &[EdgeId]) -> Option<Vec<Vertex>> {
        let mut vertices = vec![from];
        let mut seen = vec![false; self.vertex_count()];
        seen[from as usize] = true;
        for &e in edges {
            if e >= self.edge_count() {
                return None;
            }
            let (a, b) = self.edge_endpoints(e);
            let at = *vertices.last().expect("non-empty");
            let next = if a == at {
                b
            } else if b == at {
                a
            } else {
                return None;
            };
            if seen[next as usize] {
                return None;
            }
            seen[next as usize] = true;
            vertices.push(next);
        }
        Some(vertices)
    }
}

/// Serializable graph description; also the canonical form hashed into [`GraphId`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GraphSpec {
    Path { length: u32 },
    Tree { edges: Vec<[Vertex; 2]> },
    Grid { rows: u32, cols: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphKind {
    Path(PathGraph),
    Tree(TreeGraph),
    Grid(GridGraph),
}

/// A graph of one of the supported classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    id: GraphId,
    kind: GraphKind,
}

impl Graph {
    pub fn path(length: u32) -> Result<Arc<Self>> {
        Ok(Self::wrap(GraphKind::Path(PathGraph::new(length)?)))
    }

    pub fn tree(edges: &[(Vertex, Vertex)]) -> Result<Arc<Self>> {
        Ok(Self::wrap(GraphKind::Tree(TreeGraph::new(edges)?)))
    }

    pub fn grid(rows: u32, cols: u32) -> Result<Arc<Self>> {
        Ok(Self::wrap(GraphKind::Grid(GridGraph::new(rows, cols)?)))
    }

    pub fn from_spec(spec: &GraphSpec) -> Result<Arc<Self>> {
        match spec {
            GraphSpec::Path { length } => Self::path(*length),
            GraphSpec::Tree { edges } => {
                let edges: Vec<_> = edges.iter().map(|e| (e[0], e[1])).collect();
                Self::tree(&edges)
            }
            GraphSpec::Grid { rows, cols } => Self::grid(*rows, *cols),
        }
    }

    fn wrap(kind: GraphKind) -> Arc<Self> {
        let spec = spec_of(&kind);
        let canonical = serde_json::to_vec(&spec).expect("graph spec serializes");
        let digest = Sha256::digest(&canonical);
        let mut word = [0u8; 8];
        word.copy_from_slice(&digest[..8]);
        Arc::new(Self {
            id: GraphId(u64::from_be_bytes(word)),
            kind,
        })
    }

    pub fn id(&self) -> GraphId {
        self.id
    }

    pub fn kind(&self) -> &GraphKind {
        &self.kind
    }

    pub fn spec(&self) -> GraphSpec {
        spec_of(&self.kind)
    }

    pub fn as_path(&self) -> Option<&PathGraph> {
        match &self.kind {
            GraphKind::Path(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_tree(&self) -> Option<&TreeGraph> {
        match &self.kind {
            GraphKind::Tree(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_grid(&self) -> Option<&GridGraph> {
        match &self.kind {
            GraphKind::Grid(g) => Some(g),
            _ => None,
        }
    }

    pub fn is_cycle_free(&self) -> bool {
        !matches!(self.kind, GraphKind::Grid(ref g) if g.rows > 1 && g.cols > 1)
    }

    /// Short label such as `path:5`, `tree:14` or `grid:3x3`.
    pub fn descriptor(&self) -> String {
        match &self.kind {
            GraphKind::Path(p) => format!("path:{}", p.length),
            GraphKind::Tree(t) => format!("tree:{}", t.vertex_count()),
            GraphKind::Grid(g) => format!("grid:{}x{}", g.rows, g.cols),
        }
    }

    pub fn vertex_count(&self) -> usize {
        match &self.kind {
            GraphKind::Path(p) => p.length as usize + 1,
            GraphKind::Tree(t) => t.vertex_count(),
            GraphKind::Grid(g) => g.vertex_count(),
        }
    }

    /// Capacity needed for an [`EdgeSet`] over this graph.
    pub fn edge_slots(&self) -> usize {
        match &self.kind {
            GraphKind::Path(p) => p.length as usize,
            GraphKind::Tree(t) => t.vertex_count(),
            GraphKind::Grid(g) => g.edge_count(),
        }
    }

    pub fn edge_count(&self) -> usize {
        match &self.kind {
            GraphKind::Grid(g) => g.edge_count(),
            _ => self.vertex_count() - 1,
        }
    }

    pub fn edge_endpoints(&self, e: EdgeId) -> (Vertex, Vertex) {
        match &self.kind {
            GraphKind::Path(_) => (e as Vertex, e as Vertex + 1),
            GraphKind::Tree(t) => {
                let v = e as Vertex;
                let p = t.parent(v).expect("edge id names a non-root vertex");
                (v.min(p), v.max(p))
            }
            GraphKind::Grid(g) => g.edge_endpoints(e),
        }
    }

    /// Builds the normalized request `[x,y]` on this graph.
    pub fn request(&self, x: Vertex, y: Vertex) -> Result<Request> {
        let n = self.vertex_count() as Vertex;
        if x >= n || y >= n {
            return Err(DpaError::InvalidRequest(format!(
                "[{x},{y}] has an endpoint outside 0..{n}"
            )));
        }
        if x == y {
            return Err(DpaError::InvalidRequest(format!(
                "[{x},{y}] needs distinct endpoints"
            )));
        }
        Ok(Request {
            graph: self.id,
            x: x.min(y),
            y: x.max(y),
        })
    }

    pub fn owns(&self, r: &Request) -> bool {
        r.graph == self.id && (r.y as usize) < self.vertex_count()
    }

    fn check_owned(&self, r: &Request) -> Result<()> {
        if self.owns(r) {
            Ok(())
        } else {
            Err(DpaError::InvalidRequest(format!(
                "{r} does not belong to {}",
                self.descriptor()
            )))
        }
    }

    /// Every request of the universe on this graph, in ascending endpoint order.
    pub fn all_requests(&self) -> Vec<Request> {
        let n = self.vertex_count() as Vertex;
        let mut out = Vec::new();
        for x in 0..n {
            for y in x + 1..n {
                out.push(Request {
                    graph: self.id,
                    x,
                    y,
                });
            }
        }
        out
    }

    /// Edges of the unique path of `r`, ordered from `r.x()` to `r.y()`.
    pub fn unique_path(&self, r: &Request) -> Result<Vec<EdgeId>> {
        self.check_owned(r)?;
        match &self.kind {
            GraphKind::Path(_) => Ok((r.x as EdgeId..r.y as EdgeId).collect()),
            GraphKind::Tree(t) => {
                let vs = t.path_vertices(r.x, r.y);
                Ok(vs
                    .windows(2)
                    .map(|w| {
                        t.edge_between(w[0], w[1])
                            .expect("consecutive path vertices")
                    })
                    .collect())
            }
            GraphKind::Grid(g) if !self.is_cycle_free() => Err(DpaError::InvalidArgument(format!(
                "requests on grid {}x{} have no unique path",
                g.rows, g.cols
            ))),
            GraphKind::Grid(g) => {
                let mut paths = g.simple_paths(r.x, r.y);
                Ok(paths.pop().expect("a line grid is connected"))
            }
        }
    }

    pub fn path_edges(&self, r: &Request) -> Result<EdgeSet> {
        let mut set = EdgeSet::new(self.edge_slots());
        for e in self.unique_path(r)? {
            set.insert(e);
        }
        Ok(set)
    }

    /// Length of the unique path of `r`.
    pub fn path_length(&self, r: &Request) -> Result<u32> {
        self.check_owned(r)?;
        match &self.kind {
            GraphKind::Path(_) => Ok(r.y - r.x),
            GraphKind::Tree(t) => Ok(t.distance(r.x, r.y)),
            GraphKind::Grid(g) if self.is_cycle_free() => Ok(g.distance(r.x, r.y)),
            GraphKind::Grid(_) => Err(DpaError::InvalidArgument(
                "grid requests have no unique length".into(),
            )),
        }
    }

    /// Whether the unique paths of two requests share an edge.
    pub fn intersects(&self, a: &Request, b: &Request) -> Result<bool> {
        if a.graph != b.graph {
            return Err(DpaError::InvalidArgument(format!(
                "{a} and {b} live on different graphs"
            )));
        }
        if let GraphKind::Path(_) = self.kind {
            self.check_owned(a)?;
            self.check_owned(b)?;
            return Ok(a.x.max(b.x) < a.y.min(b.y));
        }
        Ok(self.path_edges(a)?.intersects(&self.path_edges(b)?))
    }
}

fn spec_of(kind: &GraphKind) -> GraphSpec {
    match kind {
        GraphKind::Path(p) => GraphSpec::Path { length: p.length },
        GraphKind::Tree(t) => GraphSpec::Tree {
            edges: t.edges.iter().map(|&(u, v)| [u, v]).collect(),
        },
        GraphKind::Grid(g) => GraphSpec::Grid {
            rows: g.rows,
            cols: g.cols,
        },
    }
}

/// An unordered vertex pair `[x,y]` on a specific graph, stored with `x < y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Request {
    graph: GraphId,
    x: Vertex,
    y: Vertex,
}

impl Request {
    pub fn x(&self) -> Vertex {
        self.x
    }

    pub fn y(&self) -> Vertex {
        self.y
    }

    pub fn endpoints(&self) -> (Vertex, Vertex) {
        (self.x, self.y)
    }

    pub fn graph(&self) -> GraphId {
        self.graph
    }

    pub fn has_endpoint(&self, v: Vertex) -> bool {
        self.x == v || self.y == v
    }
}

impl PartialOrd for Request {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Request {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.x, self.y, self.graph).cmp(&(other.x, other.y, other.graph))
    }
}

impl fmt::Display for Request {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.x, self.y)
    }
}

/// Fixed-capacity bit set over edge ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct EdgeSet {
    words: Vec<u64>,
}

impl EdgeSet {
    pub fn new(capacity: usize) -> Self {
        Self {
            words: vec![0; capacity.div_ceil(64)],
        }
    }

    pub fn insert(&mut self, e: EdgeId) {
        let w = e / 64;
        if w >= self.words.len() {
            self.words.resize(w + 1, 0);
        }
        self.words[w] |= 1 << (e % 64);
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.words
            .get(e / 64)
            .is_some_and(|w| w & (1 << (e % 64)) != 0)
    }

    pub fn intersects(&self, other: &EdgeSet) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn union_with(&mut self, other: &EdgeSet) {
        if other.words.len() > self.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn difference_with(&mut self, other: &EdgeSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Size of `self \ other`.
    pub fn count_outside(&self, other: &EdgeSet) -> usize {
        self.words
            .iter()
            .enumerate()
            .map(|(i, w)| (w & !other.words.get(i).copied().unwrap_or(0)).count_ones() as usize)
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            (0..64)
                .filter(move |b| w & (1 << b) != 0)
                .map(move |b| i * 64 + b)
        })
    }
}

impl FromIterator<EdgeId> for EdgeSet {
    fn from_iter<I: IntoIterator<Item = EdgeId>>(iter: I) -> Self {
        let mut set = EdgeSet::default();
        for e in iter {
            set.insert(e);
        }
        set
    }
}

/// A set of distinct requests on one graph, kept in ascending endpoint order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    graph: Arc<Graph>,
    requests: Vec<Request>,
}

impl Instance {
    pub fn new(graph: Arc<Graph>, mut requests: Vec<Request>) -> Result<Self> {
        for r in &requests {
            graph.check_owned(r)?;
        }
        requests.sort();
        if let Some(w) = requests.windows(2).find(|w| w[0] == w[1]) {
            return Err(DpaError::InvalidRequest(format!(
                "{} appears twice in the instance",
                w[0]
            )));
        }
        Ok(Self { graph, requests })
    }

    pub fn from_pairs(graph: Arc<Graph>, pairs: &[(Vertex, Vertex)]) -> Result<Self> {
        let requests = pairs
            .iter()
            .map(|&(x, y)| graph.request(x, y))
            .collect::<Result<Vec<_>>>()?;
        Self::new(graph, requests)
    }

    pub fn empty(graph: Arc<Graph>) -> Self {
        Self {
            graph,
            requests: Vec::new(),
        }
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    pub fn contains(&self, r: &Request) -> bool {
        self.requests.binary_search(r).is_ok()
    }

    /// The same instance with `r` added (no-op if already present).
    pub fn with(&self, r: Request) -> Result<Self> {
        let mut requests = self.requests.clone();
        if !self.contains(&r) {
            requests.push(r);
        }
        Self::new(self.graph.clone(), requests)
    }

    /// Sub-instance keeping the requests selected by `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(&Request) -> bool) -> Self {
        Self {
            graph: self.graph.clone(),
            requests: self.requests.iter().copied().filter(|r| keep(r)).collect(),
        }
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            graph: self.graph.spec(),
            requests: self.requests.iter().map(|r| [r.x, r.y]).collect(),
        }
    }

    pub fn from_file(file: &InstanceFile) -> Result<Self> {
        let graph = Graph::from_spec(&file.graph)?;
        let pairs: Vec<_> = file.requests.iter().map(|p| (p[0], p[1])).collect();
        Self::from_pairs(graph, &pairs)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| DpaError::Parse(e.to_string()))?;
        Self::from_file(&file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("instance serializes")
    }

    /// Stable hex fingerprint of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        hex::encode(&digest[..8])
    }
}

/// On-disk instance format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub graph: GraphSpec,
    pub requests: Vec<[Vertex; 2]>,
}

/// Objective: number of accepted requests (DPA) or their total length (LWDPA).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainMode {
    Count,
    Length,
}

/// Accepted requests, plus explicit edge allocations on graphs with cycles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    graph: Arc<Graph>,
    accepted: BTreeSet<Request>,
    allocations: BTreeMap<Request, Vec<EdgeId>>,
}

impl Solution {
    pub fn empty(graph: Arc<Graph>) -> Self {
        Self {
            graph,
            accepted: BTreeSet::new(),
            allocations: BTreeMap::new(),
        }
    }

    pub fn from_requests(graph: Arc<Graph>, requests: impl IntoIterator<Item = Request>) -> Self {
        Self {
            graph,
            accepted: requests.into_iter().collect(),
            allocations: BTreeMap::new(),
        }
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn accept(&mut self, r: Request) {
        self.accepted.insert(r);
    }

    pub fn accept_with(&mut self, r: Request, allocation: Vec<EdgeId>) {
        self.accepted.insert(r);
        self.allocations.insert(r, allocation);
    }

    pub fn accepted(&self) -> &BTreeSet<Request> {
        &self.accepted
    }

    pub fn contains(&self, r: &Request) -> bool {
        self.accepted.contains(r)
    }

    pub fn len(&self) -> usize {
        self.accepted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }

    pub fn allocation(&self, r: &Request) -> Option<&[EdgeId]> {
        self.allocations.get(r).map(Vec::as_slice)
    }

    /// Edges used by `r`: its allocation if stored, else its unique path.
    pub fn edges_of(&self, r: &Request) -> Result<EdgeSet> {
        match self.allocations.get(r) {
            Some(edges) => {
                let mut set = EdgeSet::new(self.graph.edge_slots());
                edges.iter().for_each(|&e| set.insert(e));
                Ok(set)
            }
            None => self.graph.path_edges(r),
        }
    }

    pub fn gain(&self, mode: GainMode) -> u64 {
        gain(self, mode)
    }
}

/// Gain of a solution: its size or the total length of its paths.
pub fn gain(solution: &Solution, mode: GainMode) -> u64 {
    match mode {
        GainMode::Count => solution.accepted.len() as u64,
        GainMode::Length => solution
            .accepted
            .iter()
            .map(|r| match solution.allocations.get(r) {
                Some(edges) => edges.len() as u64,
                None => solution.graph.path_length(r).map_or(0, u64::from),
            })
            .sum(),
    }
}

/// True iff `solution` only accepts requests of `instance` along pairwise
/// edge-disjoint paths (and, on grids, every allocation connects its endpoints).
pub fn validate_solution(instance: &Instance, solution: &Solution) -> bool {
    if solution.graph.id() != instance.graph.id() {
        return false;
    }
    let mut used = EdgeSet::new(instance.graph.edge_slots());
    for r in &solution.accepted {
        if !instance.contains(r) {
            return false;
        }
        let edges = match solution.allocations.get(r) {
            Some(alloc) => {
                let Some(grid) = instance.graph.as_grid() else {
                    return false;
                };
                match grid.walk_vertices(r.x, alloc) {
                    Some(vs) if vs.last() == Some(&r.y) => {}
                    _ => return false,
                }
                alloc.iter().copied().collect::<EdgeSet>()
            }
            None => match instance.graph.path_edges(r) {
                Ok(edges) => edges,
                Err(_) => return false,
            },
        };
        if used.intersects(&edges) {
            return false;
        }
        used.union_with(&edges);
    }
    true
}
