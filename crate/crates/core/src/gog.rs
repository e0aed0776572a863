//! Graphs of groups: the combinatorial graph with its involution, vertex
//! and edge groups with edge monomorphisms, words in the fundamental
//! group, pinch reduction, transversal normal forms, collapse moves, and
//! presentation reports.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::error::Error;
use crate::groups::{Group, GroupElement, Subgroup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
struct EdgeInfo {
    name: String,
    bar: EdgeId,
    origin: VertexId,
    terminus: VertexId,
}

/// A graph with oriented edges and the fixed-point-free involution
/// `bar`: for every edge `bar(e) != e`, `bar(bar(e)) = e` and
/// `o(e) = t(bar(e))`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Graph {
    vertex_names: Vec<String>,
    edges: Vec<EdgeInfo>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn add_vertex(&mut self, name: impl Into<String>) -> VertexId {
        self.vertex_names.push(name.into());
        VertexId(self.vertex_names.len() - 1)
    }

    /// Adds a geometric edge as the pair `(e, bar e)`; `e` runs from `o` to `t`.
    pub fn add_edge(
        &mut self,
        name: impl Into<String>,
        bar_name: impl Into<String>,
        o: VertexId,
        t: VertexId,
    ) -> (EdgeId, EdgeId) {
        let e = EdgeId(self.edges.len());
        let ebar = EdgeId(self.edges.len() + 1);
        self.edges.push(EdgeInfo {
            name: name.into(),
            bar: ebar,
            origin: o,
            terminus: t,
        });
        self.edges.push(EdgeInfo {
            name: bar_name.into(),
            bar: e,
            origin: t,
            terminus: o,
        });
        (e, ebar)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn oriented_edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertex_names.len()).map(VertexId)
    }

    pub fn oriented_edges(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edges.len()).map(EdgeId)
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertex_names[v.0]
    }

    pub fn edge_name(&self, e: EdgeId) -> &str {
        &self.edges[e.0].name
    }

    pub fn bar(&self, e: EdgeId) -> EdgeId {
        self.edges[e.0].bar
    }

    pub fn origin(&self, e: EdgeId) -> VertexId {
        self.edges[e.0].origin
    }

    pub fn terminus(&self, e: EdgeId) -> VertexId {
        self.edges[e.0].terminus
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<VertexId> {
        self.vertex_names.iter().position(|n| n == name).map(VertexId)
    }

    pub fn edge_by_name(&self, name: &str) -> Option<EdgeId> {
        self.edges.iter().position(|e| e.name == name).map(EdgeId)
    }

    /// Oriented edges leaving `v`, ascending by id.
    pub fn edges_at(&self, v: VertexId) -> Vec<EdgeId> {
        self.oriented_edges().filter(|&e| self.origin(e) == v).collect()
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.vertex_names.is_empty() {
            return Err(Error::InvalidGog("graph has no vertices".into()));
        }
        for e in self.oriented_edges() {
            let b = self.bar(e);
            if b == e {
                return Err(Error::InvalidGog(format!("edge {} is its own inverse", self.edge_name(e))));
            }
            if self.bar(b) != e {
                return Err(Error::InvalidGog(format!("bar involution broken at {}", self.edge_name(e))));
            }
            if self.origin(e) != self.terminus(b) {
                return Err(Error::InvalidGog(format!(
                    "origin/terminus mismatch at {}",
                    self.edge_name(e)
                )));
            }
        }
        if !self.is_connected() {
            return Err(Error::InvalidGog("graph is not connected".into()));
        }
        Ok(())
    }

    pub fn is_connected(&self) -> bool {
        if self.vertex_names.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.vertex_names.len()];
        let mut stack = vec![VertexId(0)];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for e in self.edges_at(v) {
                let w = self.terminus(e);
                if !seen[w.0] {
                    seen[w.0] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// `b_1 = |E|/2 - |V| + 1` for a connected graph: the number of
    /// stable letters, independent of the spanning tree.
    pub fn betti_number(&self) -> Result<usize, Error> {
        if !self.is_connected() {
            return Err(Error::InvalidGog("betti number needs a connected graph".into()));
        }
        Ok(self.edges.len() / 2 + 1 - self.vertex_names.len())
    }

    /// Deterministic BFS spanning tree, as a set of oriented edges closed
    /// under `bar`.
    pub fn spanning_tree(&self) -> BTreeSet<EdgeId> {
        let mut tree = BTreeSet::new();
        let mut seen = vec![false; self.vertex_names.len()];
        seen[0] = true;
        let mut queue = vec![VertexId(0)];
        let mut head = 0;
        while head < queue.len() {
            let v = queue[head];
            head += 1;
            for e in self.edges_at(v) {
                let w = self.terminus(e);
                if !seen[w.0] {
                    seen[w.0] = true;
                    tree.insert(e);
                    tree.insert(self.bar(e));
                    queue.push(w);
                }
            }
        }
        tree
    }

    /// Checks that `tree` is a spanning tree (closed under bar, spanning,
    /// acyclic).
    pub fn is_spanning_tree(&self, tree: &BTreeSet<EdgeId>) -> bool {
        if tree.iter().any(|&e| self.bar(e) != e && !tree.contains(&self.bar(e))) {
            return false;
        }
        if tree.len() != 2 * (self.vertex_count().saturating_sub(1)) {
            return false;
        }
        // connected over tree edges only
        let mut seen = vec![false; self.vertex_names.len()];
        seen[0] = true;
        let mut stack = vec![VertexId(0)];
        while let Some(v) = stack.pop() {
            for e in self.edges_at(v) {
                if !tree.contains(&e) {
                    continue;
                }
                let w = self.terminus(e);
                if !seen[w.0] {
                    seen[w.0] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Graph diameter in edge units.
    pub fn diameter(&self) -> Option<usize> {
        let n = self.vertex_names.len();
        let mut diam = 0;
        for s in 0..n {
            let mut dist = vec![usize::MAX; n];
            dist[s] = 0;
            let mut queue = vec![VertexId(s)];
            let mut head = 0;
            while head < queue.len() {
                let v = queue[head];
                head += 1;
                for e in self.edges_at(v) {
                    let w = self.terminus(e);
                    if dist[w.0] == usize::MAX {
                        dist[w.0] = dist[v.0] + 1;
                        queue.push(w);
                    }
                }
            }
            for d in dist {
                if d == usize::MAX {
                    return None;
                }
                diam = diam.max(d);
            }
        }
        Some(diam)
    }

    /// Geodesic edge path between two vertices (BFS, deterministic).
    pub fn geodesic(&self, from: VertexId, to: VertexId) -> Option<Vec<EdgeId>> {
        let n = self.vertex_names.len();
        let mut prev: Vec<Option<EdgeId>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[from.0] = true;
        let mut queue = vec![from];
        let mut head = 0;
        while head < queue.len() {
            let v = queue[head];
            head += 1;
            if v == to {
                break;
            }
            for e in self.edges_at(v) {
                let w = self.terminus(e);
                if !seen[w.0] {
                    seen[w.0] = true;
                    prev[w.0] = Some(e);
                    queue.push(w);
                }
            }
        }
        if !seen[to.0] {
            return None;
        }
        let mut path = Vec::new();
        let mut v = to;
        while v != from {
            let e = prev[v.0].expect("bfs predecessor");
            path.push(e);
            v = self.origin(e);
        }
        path.reverse();
        Some(path)
    }
}

/// An edge monomorphism `α_e : G_e → G_{t(e)}` expanded to full forward
/// and backward lookup tables over the finite edge group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonoTable {
    gen_images: Vec<(GroupElement, GroupElement)>,
    forward: BTreeMap<GroupElement, GroupElement>,
    backward: BTreeMap<GroupElement, GroupElement>,
    image: Subgroup,
}

impl MonoTable {
    pub fn apply(&self, g: &GroupElement) -> Result<GroupElement, Error> {
        self.forward.get(g).copied().ok_or(Error::InverseNotComputable)
    }

    pub fn preimage(&self, g: &GroupElement) -> Result<GroupElement, Error> {
        self.backward.get(g).copied().ok_or(Error::InverseNotComputable)
    }

    pub fn image(&self) -> &Subgroup {
        &self.image
    }

    pub fn in_image(&self, g: &GroupElement) -> bool {
        self.backward.contains_key(g)
    }

    pub fn gen_images(&self) -> &[(GroupElement, GroupElement)] {
        &self.gen_images
    }
}

/// Specification of one oriented edge's mono by generator images.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonoSpec {
    pub gen_images: Vec<(GroupElement, GroupElement)>,
}

/// A graph of groups: vertex groups, edge groups with `G_e = G_{bar e}`,
/// and a validated monomorphism into the terminal vertex group for every
/// oriented edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphOfGroups {
    graph: Graph,
    vertex_groups: Vec<Group>,
    edge_groups: Vec<Group>,
    monos: Vec<MonoTable>,
    /// Vertices whose star is knowingly incomplete because the gog is a
    /// finite truncation of an infinite object (ray boundaries).
    incomplete_vertices: BTreeSet<VertexId>,
}

impl GraphOfGroups {
    /// Validates every structural invariant and expands the mono tables.
    /// Returns the first failure with its location instead of panicking.
    pub fn new(
        graph: Graph,
        vertex_groups: Vec<Group>,
        edge_groups: Vec<Group>,
        monos: Vec<MonoSpec>,
    ) -> Result<Self, Error> {
        graph.validate()?;
        if vertex_groups.len() != graph.vertex_count() {
            return Err(Error::InvalidGog("one group per vertex required".into()));
        }
        if edge_groups.len() != graph.oriented_edge_count() || monos.len() != graph.oriented_edge_count() {
            return Err(Error::InvalidGog("one edge group and mono per oriented edge required".into()));
        }
        for g in &vertex_groups {
            g.validate()?;
        }
        for e in graph.oriented_edges() {
            edge_groups[e.0].validate()?;
            if edge_groups[e.0] != edge_groups[graph.bar(e).0] {
                return Err(Error::InvalidGog(format!(
                    "edge group differs across bar at {}",
                    graph.edge_name(e)
                )));
            }
            if edge_groups[e.0].order().is_none() {
                return Err(Error::InvalidGog(format!(
                    "edge group at {} must be finite",
                    graph.edge_name(e)
                )));
            }
        }
        let mut tables = Vec::with_capacity(monos.len());
        for e in graph.oriented_edges() {
            tables.push(expand_mono(
                &graph,
                &edge_groups[e.0],
                &vertex_groups[graph.terminus(e).0],
                &monos[e.0],
                e,
            )?);
        }
        Ok(GraphOfGroups {
            graph,
            vertex_groups,
            edge_groups,
            monos: tables,
            incomplete_vertices: BTreeSet::new(),
        })
    }

    pub fn mark_incomplete(&mut self, v: VertexId) {
        self.incomplete_vertices.insert(v);
    }

    pub fn incomplete_vertices(&self) -> &BTreeSet<VertexId> {
        &self.incomplete_vertices
    }

    /// Re-runs all structural checks.
    pub fn validate(&self) -> Result<(), Error> {
        let specs: Vec<MonoSpec> = self
            .monos
            .iter()
            .map(|m| MonoSpec {
                gen_images: m.gen_images().to_vec(),
            })
            .collect();
        GraphOfGroups::new(
            self.graph.clone(),
            self.vertex_groups.clone(),
            self.edge_groups.clone(),
            specs,
        )
        .map(|_| ())
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn vertex_group(&self, v: VertexId) -> &Group {
        &self.vertex_groups[v.0]
    }

    pub fn edge_group(&self, e: EdgeId) -> &Group {
        &self.edge_groups[e.0]
    }

    pub fn mono(&self, e: EdgeId) -> &MonoTable {
        &self.monos[e.0]
    }

    /// Image of `α_{bar e}` inside `G_{o(e)}`: the subgroup an edge `e`
    /// leaving a vertex is attached along.
    pub fn departure_image(&self, e: EdgeId) -> &Subgroup {
        self.monos[self.graph.bar(e).0].image()
    }

    /// Canonical transversal decomposition at the departure of `e`:
    /// `u = σ · a` with `σ` the canonical coset representative of
    /// `u · α_{bar e}(G_e)` and `a` in the image.
    pub fn departure_split(&self, e: EdgeId, u: &GroupElement) -> Result<(GroupElement, GroupElement), Error> {
        let gv = self.vertex_group(self.graph.origin(e));
        let image = self.departure_image(e);
        let sigma = image.coset_rep(u)?;
        let a = gv.mul(&gv.inv(&sigma)?, u)?;
        debug_assert!(image.contains(&a));
        Ok((sigma, a))
    }

    /// Pushes an image element through the edge relation:
    /// `α_{bar e}(x) · e = e · α_e(x)`.
    pub fn push_through(&self, e: EdgeId, a: &GroupElement) -> Result<GroupElement, Error> {
        let x = self.monos[self.graph.bar(e).0].preimage(a)?;
        self.monos[e.0].apply(&x)
    }
}

fn expand_mono(
    graph: &Graph,
    edge_group: &Group,
    target_group: &Group,
    spec: &MonoSpec,
    e: EdgeId,
) -> Result<MonoTable, Error> {
    let loc = graph.edge_name(e);
    for (g, im) in &spec.gen_images {
        if !edge_group.contains(g) {
            return Err(Error::InvalidGog(format!("mono source not in edge group at {loc}")));
        }
        if !target_group.contains(im) {
            return Err(Error::InvalidGog(format!("mono image not in vertex group at {loc}")));
        }
    }
    // close the relation graph of the map; a homomorphism keeps one image
    // per source, a monomorphism keeps images distinct
    let id_pair = (edge_group.identity(), target_group.identity());
    let mut pairs: BTreeSet<(GroupElement, GroupElement)> = BTreeSet::new();
    pairs.insert(id_pair);
    let mut gens: Vec<(GroupElement, GroupElement)> = Vec::new();
    for (g, im) in &spec.gen_images {
        gens.push((*g, *im));
        gens.push((edge_group.inv(g)?, target_group.inv(im)?));
    }
    let mut frontier = vec![id_pair];
    let cap = edge_group.order().expect("finite edge group") as usize * 2 + 4;
    while let Some((x, y)) = frontier.pop() {
        for (g, im) in &gens {
            let nx = edge_group.mul(&x, g)?;
            let ny = target_group.mul(&y, im)?;
            if pairs.insert((nx, ny)) {
                if pairs.len() > cap {
                    return Err(Error::InvalidGog(format!("mono not a homomorphism at {loc}")));
                }
                frontier.push((nx, ny));
            }
        }
    }
    let sources: BTreeSet<_> = pairs.iter().map(|(x, _)| *x).collect();
    let images: BTreeSet<_> = pairs.iter().map(|(_, y)| *y).collect();
    let order = edge_group.order().expect("finite edge group") as usize;
    if sources.len() != order {
        return Err(Error::InvalidGog(format!(
            "mono generators do not generate the edge group at {loc}"
        )));
    }
    if pairs.len() != sources.len() {
        return Err(Error::InvalidGog(format!("mono relations fail on images at {loc}")));
    }
    if images.len() != sources.len() {
        return Err(Error::InvalidGog(format!("mono not injective at {loc}")));
    }
    let forward: BTreeMap<_, _> = pairs.iter().copied().collect();
    let backward: BTreeMap<_, _> = pairs.iter().map(|(x, y)| (*y, *x)).collect();
    let image = Subgroup::from_closure(target_group, images)?;
    Ok(MonoTable {
        gen_images: spec.gen_images.clone(),
        forward,
        backward,
        image,
    })
}

/// A word `g_0 e_1 g_1 e_2 ... e_n g_n` in `F(Γ, G)`; the head lives at
/// `base = o(e_1)` and each later element at the terminus of its edge.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GogWord {
    pub base: VertexId,
    pub head: GroupElement,
    pub steps: Vec<(EdgeId, GroupElement)>,
}

impl GogWord {
    pub fn element(base: VertexId, g: GroupElement) -> Self {
        GogWord {
            base,
            head: g,
            steps: Vec::new(),
        }
    }

    pub fn identity(gog: &GraphOfGroups, base: VertexId) -> Self {
        GogWord::element(base, gog.vertex_group(base).identity())
    }

    pub fn syllables(&self) -> usize {
        self.steps.len()
    }

    pub fn end_vertex(&self, gog: &GraphOfGroups) -> VertexId {
        match self.steps.last() {
            Some((e, _)) => gog.graph().terminus(*e),
            None => self.base,
        }
    }

    pub fn is_circuit(&self, gog: &GraphOfGroups) -> bool {
        self.end_vertex(gog) == self.base
    }

    /// Checks the path consistency of the type and element membership.
    pub fn well_typed(&self, gog: &GraphOfGroups) -> Result<(), Error> {
        let mut at = self.base;
        if !gog.vertex_group(at).contains(&self.head) {
            return Err(Error::IllTypedWord(format!(
                "head not in vertex group {}",
                gog.graph().vertex_name(at)
            )));
        }
        for (e, g) in &self.steps {
            if gog.graph().origin(*e) != at {
                return Err(Error::IllTypedWord(format!(
                    "edge {} does not start at {}",
                    gog.graph().edge_name(*e),
                    gog.graph().vertex_name(at)
                )));
            }
            at = gog.graph().terminus(*e);
            if !gog.vertex_group(at).contains(g) {
                return Err(Error::IllTypedWord(format!(
                    "element not in vertex group {}",
                    gog.graph().vertex_name(at)
                )));
            }
        }
        Ok(())
    }

    /// Concatenation `self · other`; `other` must start where `self` ends.
    pub fn concat(&self, gog: &GraphOfGroups, other: &GogWord) -> Result<GogWord, Error> {
        let end = self.end_vertex(gog);
        if other.base != end {
            return Err(Error::IllTypedWord("concatenation of mismatched word types".into()));
        }
        let gv = gog.vertex_group(end);
        let mut out = self.clone();
        match out.steps.last_mut() {
            Some((_, g)) => *g = gv.mul(g, &other.head)?,
            None => out.head = gv.mul(&out.head, &other.head)?,
        }
        out.steps.extend(other.steps.iter().copied());
        Ok(out)
    }

    pub fn inverse(&self, gog: &GraphOfGroups) -> Result<GogWord, Error> {
        let mut at = self.base;
        let mut elems = vec![(at, self.head)];
        for (e, g) in &self.steps {
            at = gog.graph().terminus(*e);
            elems.push((at, *g));
        }
        let (last_v, last_g) = *elems.last().expect("nonempty");
        let mut out = GogWord {
            base: self.end_vertex(gog),
            head: gog.vertex_group(last_v).inv(&last_g)?,
            steps: Vec::new(),
        };
        for i in (0..self.steps.len()).rev() {
            let (e, _) = self.steps[i];
            let (v, g) = elems[i];
            out.steps.push((gog.graph().bar(e), gog.vertex_group(v).inv(&g)?));
        }
        Ok(out)
    }

    /// Integer power of a circuit word.
    pub fn pow(&self, gog: &GraphOfGroups, k: i64) -> Result<GogWord, Error> {
        if !self.is_circuit(gog) {
            return Err(Error::IllTypedWord("powers require a circuit word".into()));
        }
        if k == 0 {
            return Ok(GogWord::identity(gog, self.base));
        }
        let unit = if k < 0 { self.inverse(gog)? } else { self.clone() };
        let mut acc = unit.clone();
        for _ in 1..k.unsigned_abs() {
            acc = acc.concat(gog, &unit)?;
        }
        Ok(acc)
    }
}

/// Removes pinches `e · α_e(g) · bar(e)` until none remain. The result
/// represents the same element of `F(Γ, G)` and the length strictly
/// decreases at each step.
pub fn reduce_word(gog: &GraphOfGroups, w: &GogWord) -> Result<GogWord, Error> {
    w.well_typed(gog)?;
    let mut head = w.head;
    let mut steps = w.steps.clone();
    'outer: loop {
        for i in 0..steps.len().saturating_sub(1) {
            let (e, g) = steps[i];
            let (f, _) = steps[i + 1];
            if gog.graph().bar(e) == f && gog.mono(e).in_image(&g) {
                // e α_e(x) bar(e) = α_{bar e}(x), merged into the neighbours
                let x = gog.mono(e).preimage(&g)?;
                let merged = gog.mono(gog.graph().bar(e)).apply(&x)?;
                let (_, g_after) = steps[i + 1];
                let at = gog.graph().origin(e);
                let gv = gog.vertex_group(at);
                let merged_after = gv.mul(&merged, &g_after)?;
                if i == 0 {
                    head = gv.mul(&head, &merged_after)?;
                } else {
                    let (_, prev) = steps[i - 1];
                    steps[i - 1].1 = gv.mul(&prev, &merged_after)?;
                }
                steps.drain(i..=i + 1);
                continue 'outer;
            }
        }
        break;
    }
    Ok(GogWord {
        base: w.base,
        head,
        steps,
    })
}

impl From<usize> for EdgeId {
    fn from(value: usize) -> Self {
        EdgeId(value)
    }
}

/// Transversal-canonical form `σ_1 e_1 σ_2 e_2 ... σ_n e_n · tail` of a
/// word: each `σ_i` is the canonical representative of its left coset of
/// `α_{bar e_i}(G_{e_i})`, no pinch remains, and two words are equal in
/// the fundamental group iff their normal forms agree.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PathNormalForm {
    pub base: VertexId,
    pub steps: Vec<(GroupElement, EdgeId)>,
    pub tail: GroupElement,
}

impl PathNormalForm {
    pub fn syllables(&self) -> usize {
        self.steps.len()
    }

    pub fn end_vertex(&self, gog: &GraphOfGroups) -> VertexId {
        match self.steps.last() {
            Some((_, e)) => gog.graph().terminus(*e),
            None => self.base,
        }
    }

    /// The tree-vertex label: the normal form with its tail dropped into
    /// the terminal coset.
    pub fn label(&self) -> Vec<(GroupElement, EdgeId)> {
        self.steps.clone()
    }

    pub fn as_word(&self, gog: &GraphOfGroups) -> GogWord {
        let mut head = gog.vertex_group(self.base).identity();
        let mut steps: Vec<(EdgeId, GroupElement)> = Vec::with_capacity(self.steps.len());
        for (i, (sigma, e)) in self.steps.iter().enumerate() {
            if i == 0 {
                head = *sigma;
            } else {
                let slot = steps.len() - 1;
                steps[slot].1 = *sigma;
            }
            let t = gog.graph().terminus(*e);
            steps.push((*e, gog.vertex_group(t).identity()));
        }
        let mut w = GogWord {
            base: self.base,
            head,
            steps,
        };
        let end = w.end_vertex(gog);
        let gv = gog.vertex_group(end);
        match w.steps.last_mut() {
            Some((_, g)) => *g = gv.mul(g, &self.tail).expect("same ambient"),
            None => w.head = gv.mul(&w.head, &self.tail).expect("same ambient"),
        }
        w
    }
}

/// Computes the path normal form of `w` (based at `w.base`).
pub fn normal_form(gog: &GraphOfGroups, w: &GogWord) -> Result<PathNormalForm, Error> {
    let reduced = reduce_word(gog, w)?;
    let mut steps = Vec::with_capacity(reduced.steps.len());
    let mut carry = reduced.head;
    for (e, g) in &reduced.steps {
        let (sigma, a) = gog.departure_split(*e, &carry)?;
        let pushed = gog.push_through(*e, &a)?;
        steps.push((sigma, *e));
        let t = gog.graph().terminus(*e);
        carry = gog.vertex_group(t).mul(&pushed, g)?;
    }
    Ok(PathNormalForm {
        base: reduced.base,
        steps,
        tail: carry,
    })
}

/// Outcome of a collapse move: the new graph of groups plus the maps
/// needed to transport vertices, edges and words.
#[derive(Debug, Clone)]
pub struct Collapse {
    pub gog: GraphOfGroups,
    pub removed_vertex: VertexId,
    pub into_vertex: VertexId,
    pub vertex_map: Vec<Option<VertexId>>,
    pub edge_map: Vec<Option<EdgeId>>,
}

impl Collapse {
    /// Transports a word of the source gog that may traverse the collapsed
    /// edge into the quotient gog.
    pub fn map_word(&self, src: &GraphOfGroups, collapsed_edge: EdgeId, w: &GogWord) -> Result<GogWord, Error> {
        let bar = src.graph().bar(collapsed_edge);
        // embedding of the removed vertex group through the collapsed edge
        let embed = |g: &GroupElement| -> Result<GroupElement, Error> {
            let x = src.mono(collapsed_edge).preimage(g)?;
            src.mono(bar).apply(&x)
        };
        let map_elem = |v: VertexId, g: &GroupElement| -> Result<GroupElement, Error> {
            if v == self.removed_vertex {
                embed(g)
            } else {
                Ok(*g)
            }
        };
        let new_base = self.vertex_map[w.base.0].expect("mapped vertex");
        let mut out = GogWord {
            base: new_base,
            head: map_elem(w.base, &w.head)?,
            steps: Vec::new(),
        };
        let mut at = w.base;
        for (e, g) in &w.steps {
            let t = src.graph().terminus(*e);
            if *e == collapsed_edge || *e == bar {
                // traversal absorbed; merge the following element
                let mapped = map_elem(t, g)?;
                let nv = self.vertex_map[at.0].or(self.vertex_map[t.0]).expect("mapped vertex");
                let gv = self.gog.vertex_group(nv);
                match out.steps.last_mut() {
                    Some((_, prev)) => *prev = gv.mul(prev, &mapped)?,
                    None => out.head = gv.mul(&out.head, &mapped)?,
                }
            } else {
                let ne = self.edge_map[e.0].expect("surviving edge");
                out.steps.push((ne, map_elem(t, g)?));
            }
            at = t;
        }
        Ok(out)
    }
}

/// Collapses edge `e`, which requires `o(e) != t(e)` and
/// `α_e(G_e) = G_{t(e)}`: the terminus is folded into the origin and
/// incident monos are recomposed through `α_{bar e} ∘ α_e^{-1}`.
/// The fundamental group is unchanged.
pub fn collapse_edge(gog: &GraphOfGroups, e: EdgeId) -> Result<Collapse, Error> {
    let graph = gog.graph();
    let o = graph.origin(e);
    let t = graph.terminus(e);
    if o == t {
        return Err(Error::NotCollapsible("edge is a loop".into()));
    }
    let target_order = gog.vertex_group(t).order();
    let image_order = gog.mono(e).image().order() as u128;
    if target_order != Some(image_order) {
        return Err(Error::NotCollapsible(format!(
            "mono image does not fill vertex group {}",
            graph.vertex_name(t)
        )));
    }
    let bar = graph.bar(e);
    // x in G_t pulled back through e and pushed into G_o
    let embed = |g: &GroupElement| -> Result<GroupElement, Error> {
        let x = gog.mono(e).preimage(g)?;
        gog.mono(bar).apply(&x)
    };

    let mut new_graph = Graph::new();
    let mut vertex_map: Vec<Option<VertexId>> = vec![None; graph.vertex_count()];
    let mut vertex_groups = Vec::new();
    for v in graph.vertices() {
        if v == t {
            continue;
        }
        let nv = new_graph.add_vertex(graph.vertex_name(v));
        vertex_map[v.0] = Some(nv);
        vertex_groups.push(gog.vertex_group(v).clone());
    }
    vertex_map[t.0] = vertex_map[o.0];

    let mut edge_map: Vec<Option<EdgeId>> = vec![None; graph.oriented_edge_count()];
    let mut edge_groups = Vec::new();
    let mut monos = Vec::new();
    for f in graph.oriented_edges() {
        if f == e || f == bar || edge_map[f.0].is_some() {
            continue;
        }
        let fbar = graph.bar(f);
        let no = vertex_map[graph.origin(f).0].expect("mapped");
        let nt = vertex_map[graph.terminus(f).0].expect("mapped");
        let (nf, nfbar) = new_graph.add_edge(graph.edge_name(f), graph.edge_name(fbar), no, nt);
        edge_map[f.0] = Some(nf);
        edge_map[fbar.0] = Some(nfbar);
        for (orig, _new) in [(f, nf), (fbar, nfbar)] {
            edge_groups.push(gog.edge_group(orig).clone());
            let needs_recompose = graph.terminus(orig) == t;
            let gen_images = gog
                .mono(orig)
                .gen_images()
                .iter()
                .map(|(g, im)| {
                    let im = if needs_recompose { embed(im)? } else { *im };
                    Ok((*g, im))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            monos.push(MonoSpec { gen_images });
        }
    }
    let mut quotient = GraphOfGroups::new(new_graph, vertex_groups, edge_groups, monos)?;
    for v in gog.incomplete_vertices() {
        if let Some(nv) = vertex_map[v.0] {
            if *v != t {
                quotient.mark_incomplete(nv);
            }
        }
    }
    Ok(Collapse {
        gog: quotient,
        removed_vertex: t,
        into_vertex: o,
        vertex_map,
        edge_map,
    })
}

/// Shape of a fundamental group presentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresentationShape {
    Amalgam,
    HnnExtension,
    FreeProduct,
    General,
}

/// Presentation of the fundamental group relative to a maximal tree:
/// vertex generators and relations, edge identifications, stable letters.
#[derive(Debug, Clone)]
pub struct Presentation {
    pub vertex_sections: Vec<String>,
    pub edge_relations: Vec<String>,
    pub stable_letters: Vec<String>,
    pub betti_number: usize,
    pub shape: PresentationShape,
}

impl Presentation {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("vertex groups:\n");
        for s in &self.vertex_sections {
            out.push_str("  ");
            out.push_str(s);
            out.push('\n');
        }
        out.push_str("edge relations:\n");
        for s in &self.edge_relations {
            out.push_str("  ");
            out.push_str(s);
            out.push('\n');
        }
        if self.stable_letters.is_empty() {
            out.push_str("stable letters: none\n");
        } else {
            out.push_str(&format!("stable letters: {}\n", self.stable_letters.join(", ")));
        }
        out.push_str(&format!("betti number: {}\n", self.betti_number));
        let shape = match self.shape {
            PresentationShape::Amalgam => "amalgamated free product",
            PresentationShape::HnnExtension => "HNN extension",
            PresentationShape::FreeProduct => "free product",
            PresentationShape::General => "general graph of groups",
        };
        out.push_str(&format!("shape: {shape}\n"));
        out
    }
}

fn describe_group(g: &Group) -> String {
    match g.kind() {
        crate::groups::GroupKind::Dihedral { m } => format!("Z_{m} x| Z_2 (order {})", 2 * m),
        crate::groups::GroupKind::Lfd { n, m } => {
            format!("Z[1/{}]/{}Z x| Z_2 (infinite torsion)", n.unsigned_abs(), m)
        }
        crate::groups::GroupKind::Table { mult } => format!("table group of order {}", mult.len()),
    }
}

/// Builds the presentation report of `π_1(gog, tree)`.
pub fn presentation_report(gog: &GraphOfGroups, tree: &BTreeSet<EdgeId>) -> Result<Presentation, Error> {
    let graph = gog.graph();
    if !graph.is_spanning_tree(tree) {
        return Err(Error::InvalidGog("not a spanning tree".into()));
    }
    let mut vertex_sections = Vec::new();
    for v in graph.vertices() {
        vertex_sections.push(format!(
            "{} = {}",
            graph.vertex_name(v),
            describe_group(gog.vertex_group(v))
        ));
    }
    let mut edge_relations = Vec::new();
    let mut stable_letters = Vec::new();
    let mut seen = BTreeSet::new();
    for e in graph.oriented_edges() {
        if seen.contains(&e) {
            continue;
        }
        seen.insert(e);
        seen.insert(graph.bar(e));
        let in_tree = tree.contains(&e);
        let name = graph.edge_name(e);
        if !in_tree {
            stable_letters.push(name.to_string());
        }
        let ge = gog.edge_group(e);
        let gv_t = gog.vertex_group(graph.terminus(e));
        let gv_o = gog.vertex_group(graph.origin(e));
        for (g, im) in gog.mono(e).gen_images() {
            let back = gog.mono(graph.bar(e)).apply(g)?;
            let lhs = gv_t.render(im);
            let rhs = gv_o.render(&back);
            let src = ge.render(g);
            if in_tree {
                edge_relations.push(format!("[{name}] {src}: {lhs} = {rhs}"));
            } else {
                edge_relations.push(format!("[{name}] {src}: {name} {lhs} {name}^-1 = {rhs}"));
            }
        }
    }
    let betti = graph.betti_number()?;
    let geometric_edges = graph.oriented_edge_count() / 2;
    let trivial_edge_groups = graph
        .oriented_edges()
        .step_by(1)
        .all(|e| gog.edge_group(e).order() == Some(1));
    let shape = if graph.vertex_count() == 2 && geometric_edges == 1 && betti == 0 {
        if trivial_edge_groups {
            PresentationShape::FreeProduct
        } else {
            PresentationShape::Amalgam
        }
    } else if graph.vertex_count() == 1 && geometric_edges == 1 && betti == 1 {
        PresentationShape::HnnExtension
    } else {
        PresentationShape::General
    };
    Ok(Presentation {
        vertex_sections,
        edge_relations,
        stable_letters,
        betti_number: betti,
        shape,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::GroupKind;

    /// Two-vertex segment with Z_4 at both ends and Z_2 in the middle,
    /// embedded as the squares.
    fn segment_z4() -> GraphOfGroups {
        let mut graph = Graph::new();
        let a = graph.add_vertex("A");
        let b = graph.add_vertex("B");
        let (_e, _ebar) = graph.add_edge("e", "e~", a, b);
        let z4 = Group::dihedral(2); // order 4, Klein-like Z_2 x Z_2
        let z2 = Group::table(vec![vec![0, 1], vec![1, 0]]);
        let gen = GroupElement::Table { index: 1 };
        let rot = z4.rotation(1).unwrap();
        GraphOfGroups::new(
            graph,
            vec![z4.clone(), z4.clone()],
            vec![z2.clone(), z2.clone()],
            vec![
                MonoSpec { gen_images: vec![(gen, rot)] },
                MonoSpec { gen_images: vec![(gen, rot)] },
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_vertex_validates() {
        let mut graph = Graph::new();
        graph.add_vertex("A");
        let gog = GraphOfGroups::new(graph, vec![Group::dihedral(3)], vec![], vec![]).unwrap();
        gog.validate().unwrap();
    }

    #[test]
    fn mono_injectivity_diagnostic() {
        // order-4 edge group mapped onto a single involution
        let mut graph = Graph::new();
        let a = graph.add_vertex("A");
        let b = graph.add_vertex("B");
        graph.add_edge("e", "e~", a, b);
        let d2 = Group::dihedral(2);
        let d8 = Group::dihedral(8);
        let bad = MonoSpec {
            gen_images: vec![
                (d2.rotation(1).unwrap(), d8.rotation(4).unwrap()),
                (d2.reflection().unwrap(), d8.rotation(4).unwrap()),
            ],
        };
        let good = MonoSpec {
            gen_images: vec![
                (d2.rotation(1).unwrap(), d8.rotation(4).unwrap()),
                (d2.reflection().unwrap(), d8.reflection().unwrap()),
            ],
        };
        let err = GraphOfGroups::new(
            graph,
            vec![d8.clone(), d8.clone()],
            vec![d2.clone(), d2.clone()],
            vec![good, bad],
        )
        .unwrap_err();
        match err {
            Error::InvalidGog(msg) => assert!(msg.contains("mono not injective"), "{msg}"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn betti_numbers() {
        let mut seg = Graph::new();
        let a = seg.add_vertex("A");
        let b = seg.add_vertex("B");
        seg.add_edge("e", "e~", a, b);
        assert_eq!(seg.betti_number().unwrap(), 0);

        let mut looped = Graph::new();
        let v = looped.add_vertex("v");
        looped.add_edge("f", "f~", v, v);
        assert_eq!(looped.betti_number().unwrap(), 1);

        let mut theta = Graph::new();
        let a = theta.add_vertex("A");
        let b = theta.add_vertex("B");
        theta.add_edge("e1", "e1~", a, b);
        theta.add_edge("e2", "e2~", a, b);
        theta.add_edge("e3", "e3~", a, b);
        assert_eq!(theta.betti_number().unwrap(), 2);
    }

    #[test]
    fn betti_is_tree_independent() {
        let mut theta = Graph::new();
        let a = theta.add_vertex("A");
        let b = theta.add_vertex("B");
        let (e1, _) = theta.add_edge("e1", "e1~", a, b);
        let (e2, e2b) = theta.add_edge("e2", "e2~", a, b);
        let t1 = theta.spanning_tree();
        assert!(theta.is_spanning_tree(&t1));
        let mut t2 = BTreeSet::new();
        t2.insert(e2);
        t2.insert(e2b);
        assert!(theta.is_spanning_tree(&t2));
        let _ = e1;
        // same stable-letter count whichever tree is chosen
        assert_eq!(theta.oriented_edge_count() / 2 - (t1.len() / 2), theta.betti_number().unwrap());
        assert_eq!(theta.oriented_edge_count() / 2 - (t2.len() / 2), theta.betti_number().unwrap());
    }

    #[test]
    fn reduce_removes_pinch() {
        let gog = segment_z4();
        let e = gog.graph().edge_by_name("e").unwrap();
        let ebar = gog.graph().bar(e);
        let a = VertexId(0);
        let b = VertexId(1);
        let rot = gog.vertex_group(b).rotation(1).unwrap();
        let w = GogWord {
            base: a,
            head: gog.vertex_group(a).identity(),
            steps: vec![(e, rot), (ebar, gog.vertex_group(a).identity())],
        };
        let red = reduce_word(&gog, &w).unwrap();
        assert_eq!(red.syllables(), 0);
        assert_eq!(red.head, gog.vertex_group(a).rotation(1).unwrap());
    }

    #[test]
    fn reduced_word_is_fixpoint() {
        let gog = segment_z4();
        let e = gog.graph().edge_by_name("e").unwrap();
        let ebar = gog.graph().bar(e);
        let b = VertexId(1);
        let refl = gog.vertex_group(b).reflection().unwrap();
        let w = GogWord {
            base: VertexId(0),
            head: gog.vertex_group(VertexId(0)).identity(),
            steps: vec![(e, refl), (ebar, gog.vertex_group(VertexId(0)).identity())],
        };
        let red = reduce_word(&gog, &w).unwrap();
        assert_eq!(red, w);
    }

    #[test]
    fn normal_form_structure() {
        let gog = segment_z4();
        let e = gog.graph().edge_by_name("e").unwrap();
        let ebar = gog.graph().bar(e);
        let a = VertexId(0);
        let b = VertexId(1);
        let refl_a = gog.vertex_group(a).reflection().unwrap();
        let refl_b = gog.vertex_group(b).reflection().unwrap();
        let w = GogWord {
            base: a,
            head: refl_a,
            steps: vec![(e, refl_b), (ebar, refl_a)],
        };
        let nf = normal_form(&gog, &w).unwrap();
        assert_eq!(nf.syllables(), 2);
        // a vertex element has syllable length 0
        let nf0 = normal_form(&gog, &GogWord::element(a, refl_a)).unwrap();
        assert_eq!(nf0.syllables(), 0);
        assert_eq!(nf0.tail, refl_a);
        // the normal form re-expanded is equal in the group
        let back = nf.as_word(&gog);
        let nf2 = normal_form(&gog, &back).unwrap();
        assert_eq!(nf, nf2);
    }

    #[test]
    fn collapse_rejects_loops_and_proper_images() {
        let mut looped = Graph::new();
        let v = looped.add_vertex("v");
        let (f, fbar) = looped.add_edge("f", "f~", v, v);
        let z2 = Group::table(vec![vec![0, 1], vec![1, 0]]);
        let d2 = Group::dihedral(2);
        let gen = GroupElement::Table { index: 1 };
        let gog = GraphOfGroups::new(
            looped,
            vec![d2.clone()],
            vec![z2.clone(), z2.clone()],
            vec![
                MonoSpec { gen_images: vec![(gen, d2.rotation(1).unwrap())] },
                MonoSpec { gen_images: vec![(gen, d2.reflection().unwrap())] },
            ],
        )
        .unwrap();
        assert!(matches!(collapse_edge(&gog, f), Err(Error::NotCollapsible(_))));
        let _ = fbar;

        let seg = segment_z4();
        let e = seg.graph().edge_by_name("e").unwrap();
        assert!(matches!(collapse_edge(&seg, e), Err(Error::NotCollapsible(_))));
    }

    #[test]
    fn collapse_free_edge() {
        // A *_B B with the edge group equal to one endpoint collapses to A
        let mut graph = Graph::new();
        let a = graph.add_vertex("A");
        let b = graph.add_vertex("B");
        let (e, _) = graph.add_edge("e", "e~", a, b);
        let d4 = Group::dihedral(4);
        let d2 = Group::dihedral(2);
        let spec_into_b = MonoSpec {
            gen_images: vec![
                (d2.rotation(1).unwrap(), d2.rotation(1).unwrap()),
                (d2.reflection().unwrap(), d2.reflection().unwrap()),
            ],
        };
        let spec_into_a = MonoSpec {
            gen_images: vec![
                (d2.rotation(1).unwrap(), d4.rotation(2).unwrap()),
                (d2.reflection().unwrap(), d4.reflection().unwrap()),
            ],
        };
        let gog = GraphOfGroups::new(
            graph,
            vec![d4.clone(), d2.clone()],
            vec![d2.clone(), d2.clone()],
            vec![spec_into_b, spec_into_a],
        )
        .unwrap();
        let collapsed = collapse_edge(&gog, e).unwrap();
        assert_eq!(collapsed.gog.graph().vertex_count(), 1);
        assert_eq!(collapsed.gog.graph().oriented_edge_count(), 0);
        assert_eq!(collapsed.gog.vertex_group(VertexId(0)), &d4);
    }

    #[test]
    fn presentation_shapes() {
        let seg = segment_z4();
        let tree = seg.graph().spanning_tree();
        let p = presentation_report(&seg, &tree).unwrap();
        assert_eq!(p.betti_number, 0);
        assert!(p.stable_letters.is_empty());
        assert_eq!(p.shape, PresentationShape::Amalgam);

        let mut looped = Graph::new();
        let v = looped.add_vertex("v");
        looped.add_edge("f", "f~", v, v);
        let z2 = Group::table(vec![vec![0, 1], vec![1, 0]]);
        let d2 = Group::dihedral(2);
        let gen = GroupElement::Table { index: 1 };
        let gog = GraphOfGroups::new(
            looped,
            vec![d2.clone()],
            vec![z2.clone(), z2.clone()],
            vec![
                MonoSpec { gen_images: vec![(gen, d2.rotation(1).unwrap())] },
                MonoSpec { gen_images: vec![(gen, d2.reflection().unwrap())] },
            ],
        )
        .unwrap();
        let tree = gog.graph().spanning_tree();
        let p = presentation_report(&gog, &tree).unwrap();
        assert_eq!(p.betti_number, 1);
        assert_eq!(p.stable_letters.len(), 1);
        assert_eq!(p.shape, PresentationShape::HnnExtension);

        // trivial edge group: free product
        let mut graph = Graph::new();
        let a = graph.add_vertex("A");
        let b = graph.add_vertex("B");
        graph.add_edge("e", "e~", a, b);
        let triv = Group::table(vec![vec![0]]);
        let id = GroupElement::Table { index: 0 };
        let z3 = Group::table(vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]]);
        let gog = GraphOfGroups::new(
            graph,
            vec![z3.clone(), z3.clone()],
            vec![triv.clone(), triv.clone()],
            vec![
                MonoSpec { gen_images: vec![(id, id)] },
                MonoSpec { gen_images: vec![(id, id)] },
            ],
        )
        .unwrap();
        let tree = gog.graph().spanning_tree();
        let p = presentation_report(&gog, &tree).unwrap();
        assert_eq!(p.shape, PresentationShape::FreeProduct);
        let _ = describe_group(&Group::lfd(3, 6));
    }

    #[test]
    fn word_algebra() {
        let gog = segment_z4();
        let a = VertexId(0);
        let e = gog.graph().edge_by_name("e").unwrap();
        let ebar = gog.graph().bar(e);
        let ga = gog.vertex_group(a);
        let w = GogWord {
            base: a,
            head: ga.rotation(1).unwrap(),
            steps: vec![(e, gog.vertex_group(VertexId(1)).reflection().unwrap()), (ebar, ga.identity())],
        };
        w.well_typed(&gog).unwrap();
        let winv = w.inverse(&gog).unwrap();
        let prod = w.concat(&gog, &winv).unwrap();
        let nf = normal_form(&gog, &prod).unwrap();
        assert_eq!(nf.syllables(), 0);
        assert_eq!(nf.tail, ga.identity());
        let sq = w.pow(&gog, 2).unwrap();
        assert_eq!(sq.syllables(), 4);
        let z = w.pow(&gog, 0).unwrap();
        assert_eq!(z, GogWord::identity(&gog, a));
    }
}
