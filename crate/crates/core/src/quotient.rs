//! Equivariant families of subgroups, folding quotients of tree balls,
//! tree-ness and acylindricity of the quotient action, and the
//! sufficient-condition checkers for non-elementary quotients.
//!
//! The quotient of the tree by the normal subgroup generated by an
//! equivariant family is computed by iterated local folds: at a vertex
//! with group `G_v̂` and family subgroup `R`, two departing edges with
//! transversal representatives `σ_1, σ_2` along the same `ê` are
//! identified iff `σ_1` and `σ_2` lie in the same left coset of the
//! subgroup `R · α_{bar ê}(G_ê)` (a subgroup since `R` is normal).
//! Merged endpoints enqueue further folds until a fixpoint. Ball-local
//! folding is exact on the worked examples; in general an orbit may
//! excurse outside the ball, which is why results carry the slack used.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::acyl::{AcylCertificate, AcylViolation, CertScope, StabSize};
use crate::error::Error;
use crate::gog::{EdgeId, GogWord, GraphOfGroups, VertexId};
use crate::groups::{
    is_normal_in, normal_closure, GroupElement, Normality, NormalityWitness, Subgroup,
    DEFAULT_CLOSURE_BOUND,
};
use crate::tree::{self, Label, TreeBall};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyMode {
    /// Every assigned subgroup must already be normal in its vertex group.
    Strict,
    /// Assigned subgroups are replaced by their normal closures (finite
    /// ambients only) with a provenance note.
    Normalize,
}

/// An assignment of a subgroup `R_v̂ ≤ G_v̂` per Γ-vertex; missing
/// vertices carry the trivial subgroup. The induced family on the tree
/// is `R_{gv} = g R_v g^{-1}`.
#[derive(Debug, Clone)]
pub struct EquivariantFamily {
    pub mode: FamilyMode,
    assignments: BTreeMap<VertexId, Subgroup>,
}

impl EquivariantFamily {
    pub fn new(mode: FamilyMode) -> Self {
        EquivariantFamily {
            mode,
            assignments: BTreeMap::new(),
        }
    }

    pub fn assign(&mut self, v: VertexId, sub: Subgroup) {
        self.assignments.insert(v, sub);
    }

    pub fn assignments(&self) -> &BTreeMap<VertexId, Subgroup> {
        &self.assignments
    }
}

/// Why a family was rejected.
#[derive(Debug, Clone)]
pub enum FamilyRejection {
    WrongAmbient {
        vertex: VertexId,
    },
    NotNormal {
        vertex: VertexId,
        witness: NormalityWitness,
    },
    /// Normalize mode met a subgroup whose normal closure is infinite
    /// (a reflection inside an infinite dihedral-limit group).
    InfiniteClosure {
        vertex: VertexId,
        note: String,
    },
}

impl core::fmt::Display for FamilyRejection {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FamilyRejection::WrongAmbient { vertex } => {
                write!(f, "subgroup at vertex {} lies in the wrong group", vertex.0)
            }
            FamilyRejection::NotNormal { vertex, witness } => write!(
                f,
                "subgroup at vertex {} is not normal: conjugate of {:?} by {:?} is {:?}, outside the subgroup",
                vertex.0, witness.element, witness.conjugator, witness.conjugate
            ),
            FamilyRejection::InfiniteClosure { vertex, note } => {
                write!(f, "normal closure at vertex {} is infinite: {note}", vertex.0)
            }
        }
    }
}

/// A validated family: per-vertex normal subgroups, ready for folding.
#[derive(Debug, Clone)]
pub struct ValidatedFamily {
    subgroups: BTreeMap<VertexId, Subgroup>,
    pub notes: Vec<String>,
}

impl ValidatedFamily {
    pub fn trivial() -> Self {
        ValidatedFamily {
            subgroups: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn subgroup(&self, v: VertexId) -> Option<&Subgroup> {
        self.subgroups.get(&v)
    }

    pub fn subgroups(&self) -> &BTreeMap<VertexId, Subgroup> {
        &self.subgroups
    }

    /// The subgroup generated by the edge image entering `v̂` together
    /// with `R_v̂` — the quantity all the sufficient conditions compare
    /// against the full vertex group.
    pub fn edge_r_span(&self, gog: &GraphOfGroups, image: &Subgroup, v: VertexId) -> Result<Subgroup, Error> {
        let ambient = gog.vertex_group(v);
        let mut gens: Vec<GroupElement> = image.closure().iter().copied().collect();
        if let Some(r) = self.subgroups.get(&v) {
            gens.extend(r.closure().iter().copied());
        }
        Subgroup::generate(ambient, &gens, DEFAULT_CLOSURE_BOUND)
    }
}

/// Validates a family against its graph of groups: strict mode rejects
/// non-normal subgroups with a conjugation witness; normalize mode
/// replaces subgroups by their normal closures where finite.
pub fn family_validate(
    gog: &GraphOfGroups,
    family: &EquivariantFamily,
) -> Result<ValidatedFamily, FamilyRejection> {
    let mut out = ValidatedFamily::trivial();
    for (&v, sub) in family.assignments() {
        let ambient = gog.vertex_group(v);
        if sub.ambient() != ambient {
            return Err(FamilyRejection::WrongAmbient { vertex: v });
        }
        match family.mode {
            FamilyMode::Strict => match is_normal_in(sub, ambient).map_err(|_| FamilyRejection::WrongAmbient { vertex: v })? {
                Normality::Normal => {
                    out.subgroups.insert(v, sub.clone());
                }
                Normality::NotNormal(witness) => {
                    return Err(FamilyRejection::NotNormal { vertex: v, witness });
                }
            },
            FamilyMode::Normalize => match normal_closure(sub, ambient, DEFAULT_CLOSURE_BOUND) {
                Ok(closure) => {
                    if closure.order() != sub.order() {
                        out.notes.push(format!(
                            "subgroup at vertex {} replaced by its normal closure of order {}",
                            v.0,
                            closure.order()
                        ));
                    }
                    out.subgroups.insert(v, closure);
                }
                Err(_) => {
                    return Err(FamilyRejection::InfiniteClosure {
                        vertex: v,
                        note: "normal closure is the full rotation-extended group".to_string(),
                    });
                }
            },
        }
    }
    Ok(out)
}

/// Quotient normal form of a tree-vertex label under local folding.
///
/// Walks the label replacing each transversal representative by the
/// canonical representative of its left `R·Im` coset, pushing the
/// folding element through the edge as a carry into the next step, and
/// contracting the pinches this creates (a canonicalized step that
/// returns along the previous edge with the identity representative
/// collapses into the parent). Two ball vertices fold to the same key
/// iff the iterated local folds identify them.
pub fn fold_label(
    gog: &GraphOfGroups,
    family: &ValidatedFamily,
    base: VertexId,
    label: &Label,
) -> Result<Label, Error> {
    let mut at = base;
    let mut carry = gog.vertex_group(base).identity();
    let mut out: Label = Vec::with_capacity(label.len());
    for (sigma, e) in label {
        let group = gog.vertex_group(at);
        let u = group.mul(&carry, sigma)?;
        let image = gog.departure_image(*e);
        let span = family.edge_r_span(gog, image, at)?;
        let rep = span.coset_rep(&u)?;
        let rep_inv = group.inv(&rep)?;
        let mut m = None;
        if let Some(r_sub) = family.subgroup(at) {
            for r in r_sub.closure() {
                let cand = group.mul(&group.mul(&rep_inv, r)?, &u)?;
                if image.contains(&cand) {
                    m = Some(cand);
                    break;
                }
            }
        } else {
            let cand = group.mul(&rep_inv, &u)?;
            if image.contains(&cand) {
                m = Some(cand);
            }
        }
        let m = m.ok_or_else(|| {
            Error::NotATree("fold canonicalization found no folding element".to_string())
        })?;
        let pushed = gog.push_through(*e, &m)?;
        at = gog.graph().terminus(*e);
        let is_pinch = rep == group.identity()
            && out
                .last()
                .map(|(_, f)| gog.graph().bar(*f) == *e)
                .unwrap_or(false);
        if is_pinch {
            let (tau, _) = out.pop().expect("checked nonempty");
            carry = gog.vertex_group(at).mul(&tau, &pushed)?;
        } else {
            out.push((rep, *e));
            carry = pushed;
        }
    }
    Ok(out)
}

/// Union-find over ball vertices carrying the local coordinate twist:
/// a node `x` with parent `p` and twist `t` satisfies, for some element
/// `n` of the generated normal subgroup, `n · w_x = w_p · t`, so an edge
/// `(σ, ê)` at `x` is the same quotient edge as `(t σ, ê)` at `p`.
struct Fold<'a> {
    gog: &'a GraphOfGroups,
    ball: &'a TreeBall,
    family: &'a ValidatedFamily,
    parent: Vec<usize>,
    twist: Vec<GroupElement>,
    members: Vec<Vec<usize>>,
    span_cache: BTreeMap<(VertexId, EdgeId), Subgroup>,
}

#[derive(Debug, Clone)]
struct EdgeRecord {
    edge: EdgeId,
    local: GroupElement,
    far: usize,
    tail: GroupElement,
}

impl<'a> Fold<'a> {
    fn new(gog: &'a GraphOfGroups, ball: &'a TreeBall, family: &'a ValidatedFamily) -> Self {
        let n = ball.len();
        let twist = (0..n)
            .map(|i| gog.vertex_group(ball.gamma_vertex(i)).identity())
            .collect();
        Fold {
            gog,
            ball,
            family,
            parent: (0..n).collect(),
            twist,
            members: (0..n).map(|i| vec![i]).collect(),
            span_cache: BTreeMap::new(),
        }
    }

    fn find(&mut self, x: usize) -> Result<(usize, GroupElement), Error> {
        if self.parent[x] == x {
            return Ok((x, self.twist[x]));
        }
        let (root, t_parent) = self.find(self.parent[x])?;
        let group = self.gog.vertex_group(self.ball.gamma_vertex(x));
        let combined = group.mul(&t_parent, &self.twist[x])?;
        self.parent[x] = root;
        self.twist[x] = combined;
        Ok((root, combined))
    }

    /// Merges `x` and `y` given the relation `n · w_x = w_y · t`.
    /// Returns the surviving root if a merge happened.
    fn union(&mut self, x: usize, y: usize, t: GroupElement) -> Result<Option<usize>, Error> {
        let (rx, tx) = self.find(x)?;
        let (ry, ty) = self.find(y)?;
        if rx == ry {
            return Ok(None);
        }
        let group = self.gog.vertex_group(self.ball.gamma_vertex(x));
        // from n_x w_x = w_rx t_x, n_y w_y = w_ry t_y and n w_x = w_y t:
        // (n_y n n_x^{-1}) w_rx = w_ry (t_y t t_x^{-1})
        let t_root = group.mul(&group.mul(&ty, &t)?, &group.inv(&tx)?)?;
        if rx < ry {
            // attach ry under rx: n' w_ry = w_rx t_root^{-1}
            self.parent[ry] = rx;
            self.twist[ry] = group.inv(&t_root)?;
            let moved = core::mem::take(&mut self.members[ry]);
            self.members[rx].extend(moved);
            Ok(Some(rx))
        } else {
            self.parent[rx] = ry;
            self.twist[rx] = t_root;
            let moved = core::mem::take(&mut self.members[rx]);
            self.members[ry].extend(moved);
            Ok(Some(ry))
        }
    }

    fn span(&mut self, gamma: VertexId, edge: EdgeId) -> Result<Subgroup, Error> {
        if let Some(s) = self.span_cache.get(&(gamma, edge)) {
            return Ok(s.clone());
        }
        let image = self.gog.departure_image(edge);
        let span = self.family.edge_r_span(self.gog, image, gamma)?;
        self.span_cache.insert((gamma, edge), span.clone());
        Ok(span)
    }

    /// All incident ball edges of the class of `root`, transferred to
    /// root-local coordinates: `(ê, a, far, u)` with the invariant
    /// `n · w_far = w_root · a · ê · u`.
    fn class_records(&mut self, root: usize) -> Result<Vec<EdgeRecord>, Error> {
        let mut members = self.members[root].clone();
        members.sort_unstable();
        let mut records = Vec::new();
        for x in members {
            let (_, t_x) = self.find(x)?;
            let group = self.gog.vertex_group(self.ball.gamma_vertex(x));
            for &c in self.ball.children(x) {
                let (sigma, e) = self.ball.parent_step(c).expect("child has a step");
                let a = group.mul(&t_x, &sigma)?;
                records.push(EdgeRecord {
                    edge: e,
                    local: a,
                    far: c,
                    tail: self.gog.vertex_group(self.gog.graph().terminus(e)).identity(),
                });
            }
            if let Some(p) = self.ball.parent(x) {
                let (sigma_p, e_p) = self.ball.parent_step(x).expect("non-base has a step");
                let up = self.gog.graph().bar(e_p);
                let up_group = self.gog.vertex_group(self.gog.graph().terminus(up));
                records.push(EdgeRecord {
                    edge: up,
                    local: t_x,
                    far: p,
                    tail: up_group.inv(&sigma_p)?,
                });
            }
        }
        Ok(records)
    }

    /// One folding pass at a class; returns the roots of every class
    /// that was merged into.
    fn fold_at(&mut self, root: usize) -> Result<Vec<usize>, Error> {
        let gamma = self.ball.gamma_vertex(root);
        let group = self.gog.vertex_group(gamma).clone();
        let records = self.class_records(root)?;
        // group records by edge and by left coset of R·Im
        let mut grouped: BTreeMap<(EdgeId, GroupElement), Vec<EdgeRecord>> = BTreeMap::new();
        for rec in records {
            let span = self.span(gamma, rec.edge)?;
            let key = span.coset_rep(&rec.local)?;
            grouped.entry((rec.edge, key)).or_default().push(rec);
        }
        let mut touched = Vec::new();
        let r_sub = self.family.subgroup(gamma).cloned();
        for ((edge, _key), group_records) in grouped {
            if group_records.len() < 2 {
                continue;
            }
            let anchor = &group_records[0];
            for other in &group_records[1..] {
                // find r in R with a_anchor^{-1} r a_other in the image
                let image = self.gog.departure_image(edge);
                let a_anchor_inv = group.inv(&anchor.local)?;
                let mut found = None;
                if let Some(r_sub) = &r_sub {
                    for r in r_sub.closure() {
                        let m = group.mul(&group.mul(&a_anchor_inv, r)?, &other.local)?;
                        if image.contains(&m) {
                            found = Some(m);
                            break;
                        }
                    }
                } else if image.contains(&group.mul(&a_anchor_inv, &other.local)?) {
                    found = Some(group.mul(&a_anchor_inv, &other.local)?);
                }
                let m = found.ok_or_else(|| {
                    Error::NotATree("records share a coset but no folding element exists".to_string())
                })?;
                let c = self.gog.push_through(edge, &m)?;
                // n · w_other.far = w_anchor.far · (u_anchor^{-1} c u_other)
                let far_group = self.gog.vertex_group(self.gog.graph().terminus(edge));
                let t = far_group.mul(&far_group.mul(&far_group.inv(&anchor.tail)?, &c)?, &other.tail)?;
                if let Some(surviving) = self.union(other.far, anchor.far, t)? {
                    touched.push(surviving);
                }
            }
        }
        Ok(touched)
    }

    fn run(&mut self) -> Result<(), Error> {
        let mut queue: BTreeSet<usize> = (0..self.ball.len()).collect();
        let mut guard = 0usize;
        let guard_max = 20 * self.ball.len() + 100;
        while let Some(&x) = queue.iter().next() {
            queue.remove(&x);
            let (root, _) = self.find(x)?;
            if root != x {
                continue;
            }
            let touched = self.fold_at(root)?;
            for t in touched {
                queue.insert(t);
                queue.insert(root);
            }
            guard += 1;
            if guard > guard_max {
                return Err(Error::NotATree("folding failed to reach a fixpoint".to_string()));
            }
        }
        Ok(())
    }
}

/// A class of the folded quotient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassInfo {
    /// Ball indices in the class, sorted by depth then index.
    pub members: Vec<usize>,
    /// The folding normal form shared by every member.
    pub key: Label,
    /// Minimal ball depth among members.
    pub depth: usize,
    pub gamma: VertexId,
    /// Some member's neighbor enumeration was cut, so the class valence
    /// is a lower bound.
    pub truncated: bool,
    /// Within the reported radius of the quotient.
    pub reported: bool,
}

/// The folded quotient of a tree ball by an equivariant family: the
/// vertex partition, the quotient adjacency (a tree), and the slack
/// metadata.
#[derive(Debug, Clone)]
pub struct QuotientBall {
    ball: TreeBall,
    family: ValidatedFamily,
    reported_radius: usize,
    slack: usize,
    class_of_vertex: Vec<usize>,
    classes: Vec<ClassInfo>,
    adjacency: Vec<Vec<usize>>,
    /// Quotient normal form of each class, the lookup key for labels
    /// outside the ball.
    class_by_key: BTreeMap<Label, usize>,
}

impl QuotientBall {
    pub fn ball(&self) -> &TreeBall {
        &self.ball
    }

    pub fn reported_radius(&self) -> usize {
        self.reported_radius
    }

    pub fn slack(&self) -> usize {
        self.slack
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn class(&self, c: usize) -> &ClassInfo {
        &self.classes[c]
    }

    pub fn classes(&self) -> impl Iterator<Item = usize> {
        0..self.classes.len()
    }

    pub fn class_of_vertex(&self, ball_idx: usize) -> usize {
        self.class_of_vertex[ball_idx]
    }

    /// Class of an arbitrary tree-vertex label, via the folding normal
    /// form; `None` when the class has no representative in the ball.
    pub fn class_of_label(&self, gog: &GraphOfGroups, label: &Label) -> Option<usize> {
        if let Some(i) = self.ball.find(label) {
            return Some(self.class_of_vertex[i]);
        }
        let key = fold_label(gog, &self.family, self.ball.base_gamma(), label).ok()?;
        self.class_by_key.get(&key).copied()
    }

    pub fn base_class(&self) -> usize {
        self.class_of_vertex[0]
    }

    /// Canonical representative of a class: its folding normal form,
    /// the shortest label in the class.
    pub fn rep_label(&self, c: usize) -> &Label {
        &self.classes[c].key
    }

    pub fn neighbors(&self, c: usize) -> &[usize] {
        &self.adjacency[c]
    }

    pub fn valence(&self, c: usize) -> usize {
        self.adjacency[c].len()
    }

    /// True when the class valence is exact: every member interior and
    /// un-truncated.
    pub fn valence_complete(&self, c: usize) -> bool {
        !self.classes[c].truncated
            && self.classes[c]
                .members
                .iter()
                .all(|&m| self.ball.depth(m) < self.ball.radius())
    }

    /// BFS distance in the quotient tree.
    pub fn dist(&self, c1: usize, c2: usize) -> Option<usize> {
        if c1 == c2 {
            return Some(0);
        }
        let mut dist = vec![usize::MAX; self.classes.len()];
        dist[c1] = 0;
        let mut queue = vec![c1];
        let mut head = 0;
        while head < queue.len() {
            let c = queue[head];
            head += 1;
            for &n in &self.adjacency[c] {
                if dist[n] == usize::MAX {
                    dist[n] = dist[c] + 1;
                    if n == c2 {
                        return Some(dist[n]);
                    }
                    queue.push(n);
                }
            }
        }
        None
    }

    /// BFS path of classes, inclusive.
    pub fn path(&self, c1: usize, c2: usize) -> Option<Vec<usize>> {
        let mut prev = vec![usize::MAX; self.classes.len()];
        let mut seen = vec![false; self.classes.len()];
        seen[c1] = true;
        let mut queue = vec![c1];
        let mut head = 0;
        while head < queue.len() {
            let c = queue[head];
            head += 1;
            if c == c2 {
                break;
            }
            for &n in &self.adjacency[c] {
                if !seen[n] {
                    seen[n] = true;
                    prev[n] = c;
                    queue.push(n);
                }
            }
        }
        if !seen[c2] {
            return None;
        }
        let mut path = vec![c2];
        let mut c = c2;
        while c != c1 {
            c = prev[c];
            path.push(c);
        }
        path.reverse();
        Some(path)
    }

    /// Diameter over the reported classes.
    pub fn reported_diameter(&self) -> usize {
        let reported: Vec<usize> = self.classes().filter(|&c| self.classes[c].reported).collect();
        let mut diam = 0;
        for &c1 in &reported {
            for &c2 in &reported {
                if let Some(d) = self.dist(c1, c2) {
                    diam = diam.max(d);
                }
            }
        }
        diam
    }

    /// The image of the quotient map is distance non-increasing.
    pub fn map_non_expansive(&self, i: usize, j: usize) -> bool {
        match self.dist(self.class_of_vertex[i], self.class_of_vertex[j]) {
            Some(d) => d <= self.ball.dist(i, j),
            None => false,
        }
    }
}

/// Folds a ball by a validated family. The supplied ball should have
/// radius `reported_radius + slack`; the report is restricted to classes
/// within `reported_radius` of the base class, and tree-ness of the
/// folded graph is asserted.
pub fn quotient_ball(
    gog: &GraphOfGroups,
    ball: &TreeBall,
    family: &ValidatedFamily,
    reported_radius: usize,
) -> Result<QuotientBall, Error> {
    if ball.radius() < reported_radius {
        return Err(Error::InvalidGog("ball radius below the reported radius".into()));
    }
    let slack = ball.radius() - reported_radius;
    let mut fold = Fold::new(gog, ball, family);
    fold.run()?;
    // bake classes; union-by-smaller-index makes each root the minimal
    // member, so ascending roots give a canonical ordering by BFS index
    let mut root_of = Vec::with_capacity(ball.len());
    for x in 0..ball.len() {
        root_of.push(fold.find(x)?.0);
    }
    let mut roots: Vec<usize> = root_of.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    roots.sort_unstable();
    let class_index: BTreeMap<usize, usize> = roots.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let class_of_vertex: Vec<usize> = root_of.iter().map(|r| class_index[r]).collect();
    let mut classes: Vec<ClassInfo> = roots
        .iter()
        .map(|&r| ClassInfo {
            members: Vec::new(),
            key: Vec::new(),
            depth: ball.depth(r),
            gamma: ball.gamma_vertex(r),
            truncated: false,
            reported: false,
        })
        .collect();
    for x in 0..ball.len() {
        let c = class_of_vertex[x];
        classes[c].members.push(x);
        if ball.is_truncated(x) {
            classes[c].truncated = true;
        }
    }
    for info in &mut classes {
        info.members.sort_by_key(|&m| (ball.depth(m), m));
        info.depth = ball.depth(info.members[0]);
    }
    // quotient edges: deduplicate ball edges by their class pair
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for x in 0..ball.len() {
        if let Some(p) = ball.parent(x) {
            let a = class_of_vertex[x];
            let b = class_of_vertex[p];
            if a == b {
                return Err(Error::NotATree(format!(
                    "folding identified the endpoints of an edge at ball vertex {x}"
                )));
            }
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    if pairs.len() + 1 != classes.len() {
        return Err(Error::NotATree(format!(
            "{} classes but {} quotient edges",
            classes.len(),
            pairs.len()
        )));
    }
    let mut adjacency = vec![Vec::new(); classes.len()];
    for &(a, b) in &pairs {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
    }
    // folding normal forms must agree with the union-find partition:
    // one key per class and one class per key
    let mut class_by_key: BTreeMap<Label, usize> = BTreeMap::new();
    for (c, info) in classes.iter_mut().enumerate() {
        let key = fold_label(gog, family, ball.base_gamma(), ball.label(info.members[0]))?;
        if class_by_key.insert(key.clone(), c).is_some() {
            return Err(Error::NotATree(
                "folding normal form straddles two classes".to_string(),
            ));
        }
        info.key = key;
    }
    for x in 0..ball.len() {
        let key = fold_label(gog, family, ball.base_gamma(), ball.label(x))?;
        if classes[class_of_vertex[x]].key != key {
            return Err(Error::NotATree(
                "class members fold to different normal forms".to_string(),
            ));
        }
    }
    let mut qb = QuotientBall {
        ball: ball.clone(),
        family: family.clone(),
        reported_radius,
        slack,
        class_of_vertex,
        classes,
        adjacency,
        class_by_key,
    };
    // reported = within the reported radius of the base class
    let base = qb.base_class();
    let mut dist = vec![usize::MAX; qb.classes.len()];
    dist[base] = 0;
    let mut queue = vec![base];
    let mut head = 0;
    while head < queue.len() {
        let c = queue[head];
        head += 1;
        for &n in &qb.adjacency[c] {
            if dist[n] == usize::MAX {
                dist[n] = dist[c] + 1;
                queue.push(n);
            }
        }
    }
    for (c, d) in dist.iter().enumerate() {
        qb.classes[c].reported = *d <= reported_radius;
    }
    Ok(qb)
}

/// Classification of the image of a word on the quotient tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuotientClassification {
    Elliptic { fixed_class: usize },
    Hyperbolic { translation_length: usize, min_class: usize },
}

impl QuotientClassification {
    pub fn translation_length(&self) -> usize {
        match self {
            QuotientClassification::Elliptic { .. } => 0,
            QuotientClassification::Hyperbolic {
                translation_length, ..
            } => *translation_length,
        }
    }

    pub fn is_hyperbolic(&self) -> bool {
        matches!(self, QuotientClassification::Hyperbolic { .. })
    }
}

fn class_displacement(
    gog: &GraphOfGroups,
    qb: &QuotientBall,
    g: &GogWord,
    c: usize,
) -> Result<usize, Error> {
    let rep = qb.rep_label(c);
    let moved = tree::act_label(gog, g, qb.ball().base_gamma(), rep)?;
    let target = qb
        .class_of_label(gog, &moved)
        .ok_or_else(|| Error::CertificateUnavailable("orbit leaves the folded ball".to_string()))?;
    qb.dist(c, target)
        .ok_or_else(|| Error::CertificateUnavailable("disconnected quotient".to_string()))
}

/// Classifies the image of `g` in the quotient action by convex descent
/// of the displacement function plus the doubling identity
/// `d(c, g²c) = 2 d(c, gc)`, which certifies the translation length.
pub fn quotient_classify(
    gog: &GraphOfGroups,
    qb: &QuotientBall,
    g: &GogWord,
) -> Result<QuotientClassification, Error> {
    let mut current = qb.base_class();
    let mut disp = class_displacement(gog, qb, g, current)?;
    let mut steps = 0usize;
    loop {
        if disp == 0 {
            return Ok(QuotientClassification::Elliptic { fixed_class: current });
        }
        let mut improved = false;
        for &n in qb.neighbors(current) {
            if let Ok(d) = class_displacement(gog, qb, g, n) {
                if d < disp {
                    current = n;
                    disp = d;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            break;
        }
        steps += 1;
        if steps > qb.class_count() {
            return Err(Error::CertificateUnavailable("descent failed to converge".to_string()));
        }
    }
    // local minimum: certify globality by doubling
    let g2 = g.pow(gog, 2)?;
    let rep = qb.rep_label(current);
    let moved2 = tree::act_label(gog, &g2, qb.ball().base_gamma(), rep)?;
    let target2 = qb
        .class_of_label(gog, &moved2)
        .ok_or_else(|| Error::CertificateUnavailable("doubling orbit leaves the folded ball".to_string()))?;
    let d2 = qb
        .dist(current, target2)
        .ok_or_else(|| Error::CertificateUnavailable("disconnected quotient".to_string()))?;
    if d2 != 2 * disp {
        return Err(Error::CertificateUnavailable(format!(
            "doubling check failed at the local minimum ({d2} vs {})",
            2 * disp
        )));
    }
    Ok(QuotientClassification::Hyperbolic {
        translation_length: disp,
        min_class: current,
    })
}

/// Independence of two hyperbolic images on the quotient tree, via the
/// same convex-overlap analysis as on the source tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuotientIndependence {
    Independent { divergence_class: usize },
    SameAxis,
    Unknown { horizon: usize },
}

pub fn quotient_independence(
    gog: &GraphOfGroups,
    qb: &QuotientBall,
    g: &GogWord,
    h: &GogWord,
    horizon: usize,
) -> Result<QuotientIndependence, Error> {
    let cg = quotient_classify(gog, qb, g)?;
    let ch = quotient_classify(gog, qb, h)?;
    let (ell_g, min_g) = match cg {
        QuotientClassification::Hyperbolic {
            translation_length,
            min_class,
        } => (translation_length, min_class),
        _ => return Err(Error::IllTypedWord("independence requires hyperbolic images".into())),
    };
    let ell_h = match ch {
        QuotientClassification::Hyperbolic {
            translation_length, ..
        } => translation_length,
        _ => return Err(Error::IllTypedWord("independence requires hyperbolic images".into())),
    };
    // window of the g-axis through min_g
    let k = (horizon / (2 * ell_g)) + 1;
    let mut orbit = Vec::new();
    for i in -(k as i64)..=(k as i64) {
        let gi = g.pow(gog, i)?;
        let moved = tree::act_label(gog, &gi, qb.ball().base_gamma(), qb.rep_label(min_g))?;
        let c = qb
            .class_of_label(gog, &moved)
            .ok_or_else(|| Error::CertificateUnavailable("axis window leaves the folded ball".to_string()))?;
        orbit.push(c);
    }
    let mut window: Vec<usize> = Vec::new();
    for pair in orbit.windows(2) {
        let leg = qb
            .path(pair[0], pair[1])
            .ok_or_else(|| Error::CertificateUnavailable("disconnected quotient".to_string()))?;
        let start = if window.is_empty() { 0 } else { 1 };
        window.extend(leg.into_iter().skip(start));
    }
    let mut f = Vec::with_capacity(window.len());
    for &c in &window {
        let d = class_displacement(gog, qb, h, c)?;
        if d < ell_h || (d - ell_h) % 2 != 0 {
            return Err(Error::CertificateUnavailable("parity violated on the quotient".to_string()));
        }
        f.push((d - ell_h) / 2);
    }
    let m = *f.iter().min().expect("nonempty window");
    let i0 = f.iter().position(|&x| x == m).expect("min");
    let i1 = f.iter().rposition(|&x| x == m).expect("min");
    let rises_left = i0 > 0 && f[i0 - 1] > m;
    let rises_right = i1 + 1 < f.len() && f[i1 + 1] > m;
    if rises_left && rises_right {
        return Ok(QuotientIndependence::Independent {
            divergence_class: window[i1],
        });
    }
    if m == 0 {
        // shared-axis check: h maps an ℓ(h)+2 sub-segment into the g-axis
        let need = ell_h + 3;
        if i1 - i0 + 1 >= need {
            let mut ok = true;
            for &c in &window[i0..i0 + need] {
                let moved = tree::act_label(gog, h, qb.ball().base_gamma(), qb.rep_label(c))?;
                let tc = qb
                    .class_of_label(gog, &moved)
                    .ok_or_else(|| Error::CertificateUnavailable("image leaves the folded ball".to_string()))?;
                let on_axis = class_displacement(gog, qb, g, tc)? == ell_g;
                if !on_axis {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Ok(QuotientIndependence::SameAxis);
            }
        }
    }
    Ok(QuotientIndependence::Unknown { horizon })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CondStatus {
    Pass,
    Fail,
    Inconclusive,
}

/// Witness for the two-vertex condition: elements outside the
/// edge-and-family spans whose products give independent hyperbolics.
#[derive(Debug, Clone)]
pub struct PairWitness {
    pub u: VertexId,
    pub v: VertexId,
    pub u_element: GroupElement,
    pub g: GroupElement,
    pub h: GroupElement,
    /// Independent hyperbolic circuit words at `u` surviving the quotient.
    pub pair: (GogWord, GogWord),
}

#[derive(Debug, Clone)]
pub struct CircuitWitness {
    pub vertex: VertexId,
    pub edge: EdgeId,
    pub g: GroupElement,
    /// The stable-letter circuit and its translate `g·t`.
    pub pair: (GogWord, GogWord),
}

#[derive(Debug, Clone)]
pub struct TheoremAReport {
    pub cond1: CondStatus,
    pub cond1_detail: String,
    pub cond2: CondStatus,
    pub cond2_detail: String,
    pub cond2_witness: Option<PairWitness>,
    pub cond3: CondStatus,
    pub cond3_detail: String,
    pub cond3_witness: Option<CircuitWitness>,
    pub verdict: CondStatus,
}

const WITNESS_STREAM_BUDGET: usize = 64;

fn is_proper(gog: &GraphOfGroups, v: VertexId, span: &Subgroup) -> bool {
    match gog.vertex_group(v).order() {
        Some(order) => (span.order() as u128) < order,
        // a finite closure inside the infinite group is automatically proper
        None => true,
    }
}

/// Searches `g, h ∈ G_v ∖ span` with `g h^{-1} ∉ span`: `g` is the first
/// non-identity transversal representative of `span`, and `h` the first
/// representative outside the enlarged span `⟨span, g⟩`, which forces
/// `g h^{-1} ∉ span`.
fn witness_pair(
    gog: &GraphOfGroups,
    v: VertexId,
    span: &Subgroup,
) -> Result<Option<(GroupElement, GroupElement)>, Error> {
    let ambient = gog.vertex_group(v);
    let g_candidates: Vec<GroupElement> = span
        .transversal()
        .skip(1)
        .take(WITNESS_STREAM_BUDGET)
        .collect();
    for g in g_candidates {
        let mut gens: Vec<GroupElement> = span.closure().iter().copied().collect();
        gens.push(g);
        let enlarged = Subgroup::generate(ambient, &gens, DEFAULT_CLOSURE_BOUND)?;
        if !is_proper(gog, v, &enlarged) {
            continue;
        }
        if let Some(h) = enlarged.transversal().skip(1).take(WITNESS_STREAM_BUDGET).next() {
            let quot = ambient.mul(&g, &ambient.inv(&h)?)?;
            debug_assert!(!span.contains(&quot));
            return Ok(Some((g, h)));
        }
    }
    Ok(None)
}

/// Path word along a Γ-edge path, identity elements throughout.
fn path_word(gog: &GraphOfGroups, from: VertexId, edges: &[EdgeId]) -> GogWord {
    let mut steps = Vec::with_capacity(edges.len());
    for e in edges {
        steps.push((*e, gog.vertex_group(gog.graph().terminus(*e)).identity()));
    }
    GogWord {
        base: from,
        head: gog.vertex_group(from).identity(),
        steps,
    }
}

/// Checks the three sufficient conditions for the quotient action to be
/// non-elementary acylindrical. The verdict passes when any condition
/// does; inconclusive search budgets are surfaced, never silently failed.
pub fn theorem_a_check(gog: &GraphOfGroups, family: &ValidatedFamily) -> Result<TheoremAReport, Error> {
    let graph = gog.graph();
    // condition 1: first Betti number at least two
    let betti = graph.betti_number()?;
    let cond1 = if betti >= 2 { CondStatus::Pass } else { CondStatus::Fail };
    let cond1_detail = format!("first Betti number is {betti}");

    // condition 2: two vertices with proper edge-and-family spans and a
    // coset-separated pair at the far vertex
    let mut cond2 = CondStatus::Fail;
    let mut cond2_detail = String::from("no vertex pair satisfies the span conditions");
    let mut cond2_witness = None;
    'pairs: for u in graph.vertices() {
        for v in graph.vertices() {
            if u == v {
                continue;
            }
            let path = match graph.geodesic(u, v) {
                Some(p) if !p.is_empty() => p,
                _ => continue,
            };
            let e_at_u = path[0];
            let f_into_v = *path.last().expect("nonempty path");
            let span_u = family.edge_r_span(gog, gog.departure_image(e_at_u), u)?;
            if !is_proper(gog, u, &span_u) {
                continue;
            }
            let span_v = family.edge_r_span(gog, gog.mono(f_into_v).image(), v)?;
            if !is_proper(gog, v, &span_v) {
                continue;
            }
            let u_element = match span_u.transversal().nth(1) {
                Some(g) => g,
                None => continue,
            };
            if let Some((g, h)) = witness_pair(gog, v, &span_v)? {
                let p = path_word(gog, u, &path);
                let p_inv = p.inverse(gog)?;
                let mk = |x: GroupElement| -> Result<GogWord, Error> {
                    GogWord::element(u, u_element)
                        .concat(gog, &p)?
                        .concat(gog, &GogWord::element(v, x))?
                        .concat(gog, &p_inv)
                };
                let pair = (mk(g)?, mk(h)?);
                cond2 = CondStatus::Pass;
                cond2_detail = format!(
                    "vertices {} and {} have proper spans with a separated pair",
                    graph.vertex_name(u),
                    graph.vertex_name(v)
                );
                cond2_witness = Some(PairWitness {
                    u,
                    v,
                    u_element,
                    g,
                    h,
                    pair,
                });
                break 'pairs;
            }
        }
    }

    // condition 3: an immersed circuit with a proper span at some vertex
    let mut cond3 = CondStatus::Fail;
    let mut cond3_detail = String::from("no circuit in the graph");
    let mut cond3_witness = None;
    if betti >= 1 {
        cond3_detail = String::from("no circuit vertex has a proper span");
        let tree_edges = graph.spanning_tree();
        let mut seen = BTreeSet::new();
        'circuits: for t_edge in graph.oriented_edges() {
            if tree_edges.contains(&t_edge) || seen.contains(&t_edge) {
                continue;
            }
            seen.insert(t_edge);
            seen.insert(graph.bar(t_edge));
            // fundamental circuit: t_edge then back through the tree
            let back = graph
                .geodesic(graph.terminus(t_edge), graph.origin(t_edge))
                .expect("connected");
            let mut circuit = vec![t_edge];
            circuit.extend(back);
            let base = graph.origin(t_edge);
            let t_word = path_word(gog, base, &circuit);
            // walk the circuit, testing each vertex with its departing edge
            let mut at = base;
            for &ce in &circuit {
                debug_assert_eq!(graph.origin(ce), at);
                let span = family.edge_r_span(gog, gog.departure_image(ce), at)?;
                if is_proper(gog, at, &span) {
                    if let Some(g) = span.transversal().nth(1) {
                        // conjugate the witness to the circuit base
                        let prefix = graph.geodesic(base, at).expect("connected");
                        let pw = path_word(gog, base, &prefix);
                        let g_word = pw
                            .concat(gog, &GogWord::element(at, g))?
                            .concat(gog, &pw.inverse(gog)?)?;
                        let gt = g_word.concat(gog, &t_word)?;
                        cond3 = CondStatus::Pass;
                        cond3_detail = format!(
                            "circuit through {} with a proper span at {}",
                            graph.edge_name(t_edge),
                            graph.vertex_name(at)
                        );
                        cond3_witness = Some(CircuitWitness {
                            vertex: at,
                            edge: ce,
                            g,
                            pair: (t_word.clone(), gt),
                        });
                        break 'circuits;
                    }
                }
                at = graph.terminus(ce);
            }
        }
    }

    let verdict = if cond1 == CondStatus::Pass || cond2 == CondStatus::Pass || cond3 == CondStatus::Pass {
        CondStatus::Pass
    } else if cond1 == CondStatus::Inconclusive
        || cond2 == CondStatus::Inconclusive
        || cond3 == CondStatus::Inconclusive
    {
        CondStatus::Inconclusive
    } else {
        CondStatus::Fail
    };
    Ok(TheoremAReport {
        cond1,
        cond1_detail,
        cond2,
        cond2_detail,
        cond2_witness,
        cond3,
        cond3_detail,
        cond3_witness,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorollaryKind {
    /// Single-edge amalgams.
    B,
    /// Single-loop HNN extensions.
    C,
}

#[derive(Debug, Clone)]
pub struct CorollaryReport {
    pub which: CorollaryKind,
    pub clauses: Vec<(String, CondStatus)>,
    pub witness: Option<PairWitness>,
    pub verdict: CondStatus,
}

/// Specializes the sufficient conditions to single-edge amalgams (both
/// spans proper plus a separated pair) and single-loop HNN extensions
/// (either span proper).
pub fn corollary_checks(
    gog: &GraphOfGroups,
    family: &ValidatedFamily,
    which: CorollaryKind,
) -> Result<CorollaryReport, Error> {
    let graph = gog.graph();
    match which {
        CorollaryKind::B => {
            if graph.vertex_count() != 2 || graph.oriented_edge_count() != 2 {
                return Err(Error::WrongShape("corollary B needs a single edge".into()));
            }
            let e = graph.oriented_edges().next().expect("edge");
            let o = graph.origin(e);
            let t = graph.terminus(e);
            let span_o = family.edge_r_span(gog, gog.departure_image(e), o)?;
            let span_t = family.edge_r_span(gog, gog.departure_image(graph.bar(e)), t)?;
            let proper_o = is_proper(gog, o, &span_o);
            let proper_t = is_proper(gog, t, &span_t);
            let clause1 = if proper_o && proper_t {
                CondStatus::Pass
            } else {
                CondStatus::Fail
            };
            let mut clause2 = CondStatus::Fail;
            let mut witness = None;
            if clause1 == CondStatus::Pass {
                // search the separated pair on either side, the other side
                // providing the conjugating element
                for (v, span_v, u, span_u, path_edge) in [
                    (t, &span_t, o, &span_o, e),
                    (o, &span_o, t, &span_t, graph.bar(e)),
                ] {
                    if let Some((g, h)) = witness_pair(gog, v, span_v)? {
                        let u_element = span_u.transversal().nth(1).expect("proper span");
                        let p = path_word(gog, u, &[path_edge]);
                        let p_inv = p.inverse(gog)?;
                        let mk = |x: GroupElement| -> Result<GogWord, Error> {
                            GogWord::element(u, u_element)
                                .concat(gog, &p)?
                                .concat(gog, &GogWord::element(v, x))?
                                .concat(gog, &p_inv)
                        };
                        let pair = (mk(g)?, mk(h)?);
                        clause2 = CondStatus::Pass;
                        witness = Some(PairWitness {
                            u,
                            v,
                            u_element,
                            g,
                            h,
                            pair,
                        });
                        break;
                    }
                }
            }
            let verdict = if clause1 == CondStatus::Pass && clause2 == CondStatus::Pass {
                CondStatus::Pass
            } else {
                CondStatus::Fail
            };
            Ok(CorollaryReport {
                which,
                clauses: vec![
                    ("both edge-and-family spans proper".to_string(), clause1),
                    ("separated pair outside the span".to_string(), clause2),
                ],
                witness,
                verdict,
            })
        }
        CorollaryKind::C => {
            if graph.vertex_count() != 1 || graph.oriented_edge_count() != 2 {
                return Err(Error::WrongShape("corollary C needs a single loop".into()));
            }
            let f = graph.oriented_edges().next().expect("loop");
            let v = graph.origin(f);
            let span_h = family.edge_r_span(gog, gog.mono(f).image(), v)?;
            let span_k = family.edge_r_span(gog, gog.mono(graph.bar(f)).image(), v)?;
            let h_proper = is_proper(gog, v, &span_h);
            let k_proper = is_proper(gog, v, &span_k);
            let verdict = if h_proper || k_proper {
                CondStatus::Pass
            } else {
                CondStatus::Fail
            };
            Ok(CorollaryReport {
                which,
                clauses: vec![
                    (
                        "span of the incoming image with the family proper".to_string(),
                        if h_proper { CondStatus::Pass } else { CondStatus::Fail },
                    ),
                    (
                        "span of the outgoing image with the family proper".to_string(),
                        if k_proper { CondStatus::Pass } else { CondStatus::Fail },
                    ),
                ],
                witness: None,
                verdict,
            })
        }
    }
}

/// Verifies `(k, C)` on the quotient: every reported geodesic of length
/// exactly `k` is lifted to a source geodesic and the exact pointwise
/// stabilizer there bounds the quotient stabilizer from above.
pub fn quotient_kc_check(
    gog: &GraphOfGroups,
    qb: &QuotientBall,
    k: usize,
    bound: u128,
) -> Result<AcylCertificate, Error> {
    if k == 0 {
        return Err(Error::InvalidGog("quotient check supports k >= 1".into()));
    }
    let scope = CertScope::QuotientBall {
        radius: qb.reported_radius(),
        slack: qb.slack(),
    };
    let reported: Vec<usize> = qb.classes().filter(|&c| qb.class(c).reported).collect();
    for &c1 in &reported {
        for &c2 in &reported {
            if c2 <= c1 {
                continue;
            }
            if qb.dist(c1, c2) != Some(k) {
                continue;
            }
            let class_path = qb.path(c1, c2).expect("connected quotient");
            let lifted = lift_class_path(qb, &class_path)
                .ok_or_else(|| Error::CertificateUnavailable("quotient geodesic has no lift in the ball".to_string()))?;
            let labels: Vec<Label> = lifted.iter().map(|&i| qb.ball().label(i).clone()).collect();
            let stab = crate::acyl::pointwise_stabilizer(gog, qb.ball().base_gamma(), &labels)?;
            if (stab.len() as u128) > bound {
                return Ok(AcylCertificate {
                    k,
                    bound,
                    scope,
                    violation: Some(AcylViolation {
                        path: labels,
                        stabilizer_size: StabSize::Finite(stab.len() as u128),
                    }),
                });
            }
        }
    }
    Ok(AcylCertificate {
        k,
        bound,
        scope,
        violation: None,
    })
}

/// Depth-first lift of a class path to an adjacent source path.
fn lift_class_path(qb: &QuotientBall, class_path: &[usize]) -> Option<Vec<usize>> {
    fn extend(qb: &QuotientBall, class_path: &[usize], prefix: &mut Vec<usize>) -> bool {
        if prefix.len() == class_path.len() {
            return true;
        }
        let last = *prefix.last().expect("seeded");
        let want = class_path[prefix.len()];
        let ball = qb.ball();
        let mut neighbors: Vec<usize> = Vec::new();
        if let Some(p) = ball.parent(last) {
            neighbors.push(p);
        }
        neighbors.extend_from_slice(ball.children(last));
        for n in neighbors {
            if qb.class_of_vertex(n) == want && !prefix.contains(&n) {
                prefix.push(n);
                if extend(qb, class_path, prefix) {
                    return true;
                }
                prefix.pop();
            }
        }
        false
    }
    for &start in &qb.class(class_path[0]).members {
        let mut prefix = vec![start];
        if extend(qb, class_path, &mut prefix) {
            return Some(prefix);
        }
    }
    None
}

/// Per-vertex check of the quotient valence criterion: a class has
/// valence at least two iff some departing edge has a proper
/// edge-and-family span or the Γ-vertex has valence at least two.
pub fn valence_condition(gog: &GraphOfGroups, family: &ValidatedFamily, v: VertexId) -> Result<bool, Error> {
    let graph = gog.graph();
    let edges = graph.edges_at(v);
    if edges.len() >= 2 {
        return Ok(true);
    }
    for e in edges {
        let span = family.edge_r_span(gog, gog.departure_image(e), v)?;
        if is_proper(gog, v, &span) {
            return Ok(true);
        }
    }
    Ok(false)
}
