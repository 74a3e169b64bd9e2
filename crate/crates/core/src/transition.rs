//! Transition graphs and the BFS local structures extracted from them.
//!
//! The `(s, t)`-transition graph holds every node lying on a simple `s`-`t`
//! path of at most `K` edges. Candidates are first filtered by the
//! shortest-distance sum `dist(s, u) + dist(u, t) <= K`; candidates for which
//! the two shortest halves overlap are then confirmed (or dropped) with a
//! bounded search for a disjoint pair of halves. Edges are kept when both
//! endpoints are members and the edge can sit on an `s`-`t` walk of length at
//! most `K`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, NodeId, TeGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Distances {
    pub from_source: u32,
    pub to_target: u32,
}

impl Distances {
    pub fn sum(self) -> u32 {
        self.from_source + self.to_target
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionGraph {
    source: NodeId,
    target: NodeId,
    bound: usize,
    members: BTreeMap<NodeId, Distances>,
    edges: Vec<(EdgeId, NodeId, NodeId)>,
    adjacency: BTreeMap<NodeId, Vec<(NodeId, EdgeId)>>,
}

impl TransitionGraph {
    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn target(&self) -> NodeId {
        self.target
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn members(&self) -> &BTreeMap<NodeId, Distances> {
        &self.members
    }

    pub fn contains(&self, u: NodeId) -> bool {
        self.members.contains_key(&u)
    }

    pub fn node_count(&self) -> usize {
        self.members.len()
    }

    /// Member edges as `(edge, a, b)` with `a < b`, ascending by edge id.
    pub fn edges(&self) -> &[(EdgeId, NodeId, NodeId)] {
        &self.edges
    }

    pub fn edge_ids(&self) -> BTreeSet<EdgeId> {
        self.edges.iter().map(|e| e.0).collect()
    }

    /// Neighbors of `u` inside the transition graph, ascending by id.
    pub fn neighbors(&self, u: NodeId) -> &[(NodeId, EdgeId)] {
        self.adjacency.get(&u).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Unweighted distances from `src`, explored up to `limit` hops, skipping
/// `masked` edges. Returns `node -> (distance, bfs parent)`.
fn bounded_bfs(
    g: &TeGraph,
    src: NodeId,
    limit: u32,
    masked: &HashSet<EdgeId>,
) -> HashMap<NodeId, (u32, Option<NodeId>)> {
    let mut dist = HashMap::new();
    dist.insert(src, (0, None));
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        let du = dist[&u].0;
        if du == limit {
            continue;
        }
        for &(v, e) in g.neighbors(u).expect("valid node") {
            if masked.contains(&e) || dist.contains_key(&v) {
                continue;
            }
            dist.insert(v, (du + 1, Some(u)));
            queue.push_back(v);
        }
    }
    dist
}

fn parent_chain(map: &HashMap<NodeId, (u32, Option<NodeId>)>, mut u: NodeId) -> Vec<NodeId> {
    let mut chain = vec![u];
    while let Some(p) = map[&u].1 {
        chain.push(p);
        u = p;
    }
    chain
}

struct Refiner<'a> {
    g: &'a TeGraph,
    masked: &'a HashSet<EdgeId>,
    candidates: &'a BTreeMap<NodeId, Distances>,
    source: NodeId,
    target: NodeId,
    bound: u32,
}

impl Refiner<'_> {
    fn neighbors(&self, u: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.g
            .neighbors(u)
            .expect("valid node")
            .iter()
            .filter(|(v, e)| !self.masked.contains(e) && self.candidates.contains_key(v))
            .map(|&(v, _)| v)
    }

    /// Shortest `from -> target` path avoiding `blocked`, of at most `budget`
    /// edges.
    fn path_to_target(&self, from: NodeId, blocked: &HashSet<NodeId>, budget: u32) -> Option<Vec<NodeId>> {
        let mut prev: HashMap<NodeId, (u32, NodeId)> = HashMap::new();
        prev.insert(from, (0, from));
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            let du = prev[&u].0;
            if u == self.target {
                let mut path = vec![u];
                let mut cur = u;
                while cur != from {
                    cur = prev[&cur].1;
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            if du == budget {
                continue;
            }
            for v in self.neighbors(u) {
                if blocked.contains(&v) || prev.contains_key(&v) {
                    continue;
                }
                if du + 1 + self.candidates[&v].to_target > budget {
                    continue;
                }
                prev.insert(v, (du + 1, u));
                queue.push_back(v);
            }
        }
        None
    }

    /// Enumerate simple `u -> source` paths (avoiding the target) and, for
    /// each, look for a disjoint continuation `u -> target`.
    fn search(&self, x: NodeId, u: NodeId, stack: &mut Vec<NodeId>, on_stack: &mut HashSet<NodeId>) -> Option<Vec<NodeId>> {
        let len = (stack.len() - 1) as u32;
        let dt_u = self.candidates[&u].to_target;
        if x == self.source {
            let mut blocked = on_stack.clone();
            blocked.remove(&u);
            let tail = self.path_to_target(u, &blocked, self.bound - len)?;
            let mut full: Vec<NodeId> = stack.iter().rev().copied().collect();
            full.extend(tail.into_iter().skip(1));
            return Some(full);
        }
        let next: Vec<NodeId> = self.neighbors(x).collect();
        for y in next {
            if y == self.target || on_stack.contains(&y) {
                continue;
            }
            if len + 1 + self.candidates[&y].from_source + dt_u > self.bound {
                continue;
            }
            stack.push(y);
            on_stack.insert(y);
            if let Some(p) = self.search(y, u, stack, on_stack) {
                return Some(p);
            }
            stack.pop();
            on_stack.remove(&y);
        }
        None
    }

    fn path_through(&self, u: NodeId) -> Option<Vec<NodeId>> {
        let mut stack = vec![u];
        let mut on_stack = HashSet::from([u]);
        self.search(u, u, &mut stack, &mut on_stack)
    }
}

/// Build the `(s, t)`-transition graph with path-length bound `k`.
pub fn build_transition_graph(g: &TeGraph, s: NodeId, t: NodeId, k: usize) -> Result<TransitionGraph> {
    build_transition_graph_masked(g, s, t, k, &[])
}

/// Like [`build_transition_graph`] but ignoring the `masked` edges, e.g. the
/// held-out edge whose existence is being predicted.
pub fn build_transition_graph_masked(
    g: &TeGraph,
    s: NodeId,
    t: NodeId,
    k: usize,
    masked: &[EdgeId],
) -> Result<TransitionGraph> {
    g.node(s)?;
    g.node(t)?;
    if s == t {
        return Err(Error::InvalidArgument("source and target must differ".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("path bound K must be at least 1".into()));
    }
    let bound = k as u32;
    let masked: HashSet<EdgeId> = masked.iter().copied().collect();
    let from_s = bounded_bfs(g, s, bound, &masked);
    if !from_s.contains_key(&t) {
        return Err(Error::NoPath {
            source_key: g.key(s).to_string(),
            target_key: g.key(t).to_string(),
            bound: k,
        });
    }
    let to_t = bounded_bfs(g, t, bound, &masked);

    let candidates: BTreeMap<NodeId, Distances> = from_s
        .iter()
        .filter_map(|(&u, &(ds, _))| {
            let &(dt, _) = to_t.get(&u)?;
            (ds + dt <= bound).then_some((
                u,
                Distances {
                    from_source: ds,
                    to_target: dt,
                },
            ))
        })
        .collect();

    let refiner = Refiner {
        g,
        masked: &masked,
        candidates: &candidates,
        source: s,
        target: t,
        bound,
    };
    let mut confirmed: HashSet<NodeId> = HashSet::new();
    confirmed.extend(parent_chain(&from_s, t));
    for &u in candidates.keys() {
        if confirmed.contains(&u) {
            continue;
        }
        let head = parent_chain(&from_s, u);
        let tail = parent_chain(&to_t, u);
        let head_set: HashSet<NodeId> = head.iter().copied().collect();
        if tail.iter().skip(1).all(|w| !head_set.contains(w)) {
            confirmed.extend(head);
            confirmed.extend(tail);
        } else if let Some(path) = refiner.path_through(u) {
            confirmed.extend(path);
        }
    }

    let members: BTreeMap<NodeId, Distances> = candidates
        .into_iter()
        .filter(|(u, _)| confirmed.contains(u))
        .collect();

    let mut edges = Vec::new();
    let mut adjacency: BTreeMap<NodeId, Vec<(NodeId, EdgeId)>> =
        members.keys().map(|&u| (u, Vec::new())).collect();
    for (&u, du) in &members {
        for &(v, e) in g.neighbors(u)? {
            if v <= u || masked.contains(&e) {
                continue;
            }
            let Some(dv) = members.get(&v) else { continue };
            let through = (du.from_source + 1 + dv.to_target).min(dv.from_source + 1 + du.to_target);
            if through <= bound {
                edges.push((e, u, v));
                adjacency.get_mut(&u).unwrap().push((v, e));
                adjacency.get_mut(&v).unwrap().push((u, e));
            }
        }
    }
    edges.sort_unstable();
    for list in adjacency.values_mut() {
        list.sort_unstable();
    }

    Ok(TransitionGraph {
        source: s,
        target: t,
        bound: k,
        members,
        edges,
        adjacency,
    })
}

/// Longest shortest-distance-decomposed `s`-`t` route over the members,
/// `max(dist_from_s(u) + dist_to_t(u))`. Always at most `K`.
pub fn transition_diameter(tg: &TransitionGraph) -> usize {
    tg.members.values().map(|d| d.sum() as usize).max().unwrap_or(0)
}

/// Deterministic BFS tree: layers sorted by node id, first discoverer is the
/// parent, children ordered by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BfsTree {
    root: NodeId,
    depth: usize,
    layers: Vec<Vec<NodeId>>,
    parent: BTreeMap<NodeId, (NodeId, EdgeId)>,
    children: BTreeMap<NodeId, Vec<(NodeId, EdgeId)>>,
}

impl BfsTree {
    /// A tree with only its root.
    pub fn singleton(root: NodeId, depth: usize) -> Self {
        BfsTree {
            root,
            depth,
            layers: vec![vec![root]],
            parent: BTreeMap::new(),
            children: BTreeMap::from([(root, Vec::new())]),
        }
    }

    /// Assemble a tree from `(parent, child, edge)` links. Children are ordered
    /// by id and layers are derived from the links.
    pub fn from_links(root: NodeId, depth: usize, links: &[(NodeId, NodeId, EdgeId)]) -> Result<Self> {
        let mut children: BTreeMap<NodeId, Vec<(NodeId, EdgeId)>> = BTreeMap::from([(root, Vec::new())]);
        let mut parent = BTreeMap::new();
        for &(p, c, e) in links {
            if c == root || parent.insert(c, (p, e)).is_some() {
                return Err(Error::InvalidArgument(format!("{c} has more than one parent")));
            }
            children.entry(p).or_default().push((c, e));
            children.entry(c).or_default();
        }
        let mut layers = vec![vec![root]];
        let mut seen = 1usize;
        loop {
            let mut next: Vec<NodeId> = layers
                .last()
                .unwrap()
                .iter()
                .flat_map(|u| children[u].iter().map(|x| x.0))
                .collect();
            if next.is_empty() {
                break;
            }
            next.sort_unstable();
            seen += next.len();
            layers.push(next);
        }
        if seen != children.len() {
            return Err(Error::InvalidArgument("links do not form a tree under the root".into()));
        }
        if layers.len() - 1 > depth {
            return Err(Error::InvalidArgument(format!(
                "tree has {} layers below the root but depth is {depth}",
                layers.len() - 1
            )));
        }
        for list in children.values_mut() {
            list.sort_unstable();
        }
        Ok(BfsTree {
            root,
            depth,
            layers,
            parent,
            children,
        })
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Requested depth bound `L`. The deepest populated layer may be shallower.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Populated layers `L_0 ..`; `L_0 = [root]`.
    pub fn layers(&self) -> &[Vec<NodeId>] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.children.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, u: NodeId) -> bool {
        self.children.contains_key(&u)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.children.keys().copied()
    }

    pub fn parent(&self, u: NodeId) -> Option<(NodeId, EdgeId)> {
        self.parent.get(&u).copied()
    }

    pub fn children(&self, u: NodeId) -> &[(NodeId, EdgeId)] {
        self.children.get(&u).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_tree_edge(&self, e: EdgeId) -> bool {
        self.parent.values().any(|&(_, pe)| pe == e)
    }

    /// Tree edges as `(parent, child, edge)` in pre-order.
    pub fn links(&self) -> Vec<(NodeId, NodeId, EdgeId)> {
        self.preorder()
            .into_iter()
            .filter_map(|c| self.parent(c).map(|(p, e)| (p, c, e)))
            .collect()
    }

    /// Nodes in pre-order (root first, children ascending).
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![self.root];
        while let Some(u) = stack.pop() {
            out.push(u);
            for &(c, _) in self.children(u).iter().rev() {
                stack.push(c);
            }
        }
        out
    }
}

/// BFS from `root` inside `tg`, keeping nodes up to `depth` hops away.
pub fn extract_bfs_tree(tg: &TransitionGraph, root: NodeId, depth: usize) -> Result<BfsTree> {
    if !tg.contains(root) {
        return Err(Error::InvalidArgument(format!("{root} is not a transition-graph member")));
    }
    let mut tree = BfsTree::singleton(root, depth);
    let mut visited = HashSet::from([root]);
    for _ in 0..depth {
        let frontier = tree.layers.last().unwrap().clone();
        let mut next = Vec::new();
        for u in frontier {
            for &(v, e) in tg.neighbors(u) {
                if visited.insert(v) {
                    tree.parent.insert(v, (u, e));
                    tree.children.get_mut(&u).unwrap().push((v, e));
                    tree.children.insert(v, Vec::new());
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_unstable();
        tree.layers.push(next);
    }
    Ok(tree)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HiddenEdge {
    pub edge: EdgeId,
    /// Smaller endpoint id.
    pub a: NodeId,
    pub b: NodeId,
}

pub type HiddenEdgeSet = BTreeSet<HiddenEdge>;

/// Transition-graph edges with both endpoints in `tree` that are not
/// parent-child edges.
pub fn hidden_edges(tree: &BfsTree, tg: &TransitionGraph) -> HiddenEdgeSet {
    let tree_edges: HashSet<EdgeId> = tree.parent.values().map(|x| x.1).collect();
    tg.edges()
        .iter()
        .filter(|(e, a, b)| tree.contains(*a) && tree.contains(*b) && !tree_edges.contains(e))
        .map(|&(edge, a, b)| HiddenEdge { edge, a, b })
        .collect()
}

/// Nodes present in both trees.
pub fn common_nodes(tree_s: &BfsTree, tree_t: &BfsTree) -> BTreeSet<NodeId> {
    tree_s.nodes().filter(|&u| tree_t.contains(u)).collect()
}
