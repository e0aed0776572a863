//! Finite, deterministic portions of the Bass-Serre tree of a graph of
//! groups, the left-multiplication action, stabilizers, the
//! elliptic/hyperbolic classification with exact certificates, axes, and
//! independence of hyperbolic elements.
//!
//! Tree vertices are labelled by reduced transversal paths
//! `σ_1 e_1 ... σ_n e_n` from the base vertex; the label determines the
//! coset `σ_1 e_1 ... σ_n e_n G_{v̂}` uniquely, so distances and the
//! action are computed on labels with no enumeration.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::error::Error;
use crate::gog::{EdgeId, GogWord, GraphOfGroups, PathNormalForm, VertexId};
use crate::groups::GroupElement;

/// A tree-vertex label: a reduced transversal path from the ball base.
pub type Label = Vec<(GroupElement, EdgeId)>;

/// Distance between two vertices given by labels over the same base:
/// strip the longest common prefix and count what remains.
pub fn label_dist(a: &Label, b: &Label) -> usize {
    let lcp = a.iter().zip(b.iter()).take_while(|(x, y)| x == y).count();
    (a.len() - lcp) + (b.len() - lcp)
}

/// The geodesic vertex path between two labels, inclusive.
pub fn label_geodesic(a: &Label, b: &Label) -> Vec<Label> {
    let lcp = a.iter().zip(b.iter()).take_while(|(x, y)| x == y).count();
    let mut path = Vec::new();
    for k in (lcp..=a.len()).rev() {
        path.push(a[..k].to_vec());
    }
    for k in lcp + 1..=b.len() {
        path.push(b[..k].to_vec());
    }
    path
}

/// The label as a path word (normal form with trivial tail).
pub fn word_of_label(gog: &GraphOfGroups, base: VertexId, label: &Label) -> GogWord {
    PathNormalForm {
        base,
        steps: label.clone(),
        tail: gog.vertex_group(terminal_vertex(gog, base, label)).identity(),
    }
    .as_word(gog)
}

/// Γ-vertex a label ends at.
pub fn terminal_vertex(gog: &GraphOfGroups, base: VertexId, label: &Label) -> VertexId {
    match label.last() {
        Some((_, e)) => gog.graph().terminus(*e),
        None => base,
    }
}

/// Left action of a circuit word on a vertex label: the label of
/// `g · (w G_{v̂})`, computed via the normal form of the concatenation.
pub fn act_label(gog: &GraphOfGroups, g: &GogWord, base: VertexId, label: &Label) -> Result<Label, Error> {
    if g.base != base || !g.is_circuit(gog) {
        return Err(Error::IllTypedWord("action requires a circuit word at the ball base".into()));
    }
    let w = word_of_label(gog, base, label);
    let nf = crate::gog::normal_form(gog, &g.concat(gog, &w)?)?;
    Ok(nf.steps)
}

/// True iff `g` stabilizes the vertex labelled `label`: the conjugate
/// `w^{-1} g w` lies in the vertex group, i.e. has syllable length zero.
pub fn vertex_stabilizer_contains(
    gog: &GraphOfGroups,
    g: &GogWord,
    base: VertexId,
    label: &Label,
) -> Result<bool, Error> {
    if g.base != base || !g.is_circuit(gog) {
        return Err(Error::IllTypedWord("stabilizer test requires a circuit word".into()));
    }
    let w = word_of_label(gog, base, label);
    let conj = w.inverse(gog)?.concat(gog, g)?.concat(gog, &w)?;
    Ok(crate::gog::normal_form(gog, &conj)?.syllables() == 0)
}

/// A finite, deterministic, budget-truncated ball of the Bass-Serre tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeBall {
    base_gamma: VertexId,
    radius: usize,
    budget: usize,
    labels: Vec<Label>,
    index: BTreeMap<Label, usize>,
    depth: Vec<usize>,
    gamma: Vec<VertexId>,
    parent: Vec<Option<usize>>,
    parent_edge: Vec<Option<(GroupElement, EdgeId)>>,
    children: Vec<Vec<usize>>,
    truncated: Vec<bool>,
}

impl TreeBall {
    pub fn base_gamma(&self) -> VertexId {
        self.base_gamma
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, idx: usize) -> &Label {
        &self.labels[idx]
    }

    pub fn depth(&self, idx: usize) -> usize {
        self.depth[idx]
    }

    pub fn gamma_vertex(&self, idx: usize) -> VertexId {
        self.gamma[idx]
    }

    pub fn parent(&self, idx: usize) -> Option<usize> {
        self.parent[idx]
    }

    /// The `(σ, ê)` step from the parent down to this vertex.
    pub fn parent_step(&self, idx: usize) -> Option<(GroupElement, EdgeId)> {
        self.parent_edge[idx]
    }

    pub fn children(&self, idx: usize) -> &[usize] {
        &self.children[idx]
    }

    /// Parent first, then children in enumeration order.
    pub fn neighbors(&self, idx: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.children[idx].len() + 1);
        if let Some(p) = self.parent[idx] {
            out.push(p);
        }
        out.extend_from_slice(&self.children[idx]);
        out
    }

    pub fn is_truncated(&self, idx: usize) -> bool {
        self.truncated[idx]
    }

    pub fn has_truncation(&self) -> bool {
        self.truncated.iter().any(|&t| t)
    }

    /// Truncation among vertices of depth strictly below the radius, i.e.
    /// vertices whose full neighborhood the ball claims to know.
    pub fn has_interior_truncation(&self) -> bool {
        (0..self.len()).any(|i| self.truncated[i] && self.depth[i] < self.radius)
    }

    pub fn find(&self, label: &Label) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn dist(&self, i: usize, j: usize) -> usize {
        label_dist(&self.labels[i], &self.labels[j])
    }

    pub fn vertices(&self) -> impl Iterator<Item = usize> {
        0..self.labels.len()
    }

    /// Acts by a circuit word on a ball vertex; the image label may fall
    /// outside the ball.
    pub fn act(&self, gog: &GraphOfGroups, g: &GogWord, idx: usize) -> Result<Label, Error> {
        act_label(gog, g, self.base_gamma, &self.labels[idx])
    }
}

/// Builds the ball of given radius around the base vertex of the tree.
///
/// Neighbors of a vertex `w G_{v̂}` are `w σ ê G` over the edges `ê` at
/// `v̂` and the canonical transversal of `G_{v̂} / α_{bar ê}(G_ê)`; each
/// per-edge transversal is cut at `budget` representatives and the vertex
/// flagged. Every vertex named by a seed word is inserted afterwards,
/// with its whole path from the base, regardless of radius and budget.
pub fn build_ball(
    gog: &GraphOfGroups,
    base: VertexId,
    radius: usize,
    budget: usize,
    seeds: &[GogWord],
) -> Result<TreeBall, Error> {
    if budget == 0 {
        return Err(Error::InvalidGog("ball budget must be positive".into()));
    }
    let mut ball = TreeBall {
        base_gamma: base,
        radius,
        budget,
        labels: vec![Vec::new()],
        index: BTreeMap::new(),
        depth: vec![0],
        gamma: vec![base],
        parent: vec![None],
        parent_edge: vec![None],
        children: vec![Vec::new()],
        truncated: vec![false],
    };
    ball.index.insert(Vec::new(), 0);
    let mut frontier = vec![0usize];
    for d in 0..radius {
        let mut next = Vec::new();
        for &v in &frontier {
            expand_vertex(gog, &mut ball, v, d, &mut next)?;
        }
        frontier = next;
    }
    // boundary-incomplete Γ-vertices (truncated rays) taint their fibers
    if !gog.incomplete_vertices().is_empty() {
        for i in 0..ball.len() {
            if gog.incomplete_vertices().contains(&ball.gamma[i]) {
                ball.truncated[i] = true;
            }
        }
    }
    for seed in seeds {
        if seed.base != base {
            return Err(Error::IllTypedWord("seed words must start at the ball base".into()));
        }
        let nf = crate::gog::normal_form(gog, seed)?;
        let steps = nf.steps;
        for k in 1..=steps.len() {
            let prefix: Label = steps[..k].to_vec();
            if ball.index.contains_key(&prefix) {
                continue;
            }
            let parent_label: Label = steps[..k - 1].to_vec();
            let parent_idx = *ball.index.get(&parent_label).expect("prefix chain");
            let (sigma, e) = steps[k - 1];
            let idx = ball.labels.len();
            ball.labels.push(prefix.clone());
            ball.index.insert(prefix, idx);
            ball.depth.push(k);
            ball.gamma.push(gog.graph().terminus(e));
            ball.parent.push(Some(parent_idx));
            ball.parent_edge.push(Some((sigma, e)));
            ball.children[parent_idx].push(idx);
            ball.children.push(Vec::new());
            // children of a grafted vertex are not enumerated
            let interior = k < radius;
            ball.truncated.push(interior || gog.incomplete_vertices().contains(&gog.graph().terminus(e)));
        }
    }
    Ok(ball)
}

fn expand_vertex(
    gog: &GraphOfGroups,
    ball: &mut TreeBall,
    v: usize,
    d: usize,
    next: &mut Vec<usize>,
) -> Result<(), Error> {
    debug_assert_eq!(ball.depth[v], d);
    let gamma_v = ball.gamma[v];
    let parent_step = ball.parent_edge[v];
    for e in gog.graph().edges_at(gamma_v) {
        let image = gog.departure_image(e);
        let mut reps = Vec::new();
        let mut cut = false;
        for (count, sigma) in image.transversal().enumerate() {
            if count >= ball.budget {
                cut = true;
                break;
            }
            reps.push(sigma);
        }
        if cut {
            ball.truncated[v] = true;
        }
        for sigma in reps {
            // the identity representative along the reversed parent edge
            // is the parent itself (a pinch), not a child
            if let Some((_, pe)) = parent_step {
                if e == gog.graph().bar(pe) && sigma == gog.vertex_group(gamma_v).identity() {
                    continue;
                }
            }
            let mut label = ball.labels[v].clone();
            label.push((sigma, e));
            let idx = ball.labels.len();
            ball.labels.push(label.clone());
            ball.index.insert(label, idx);
            ball.depth.push(d + 1);
            ball.gamma.push(gog.graph().terminus(e));
            ball.parent.push(Some(v));
            ball.parent_edge.push(Some((sigma, e)));
            ball.children[v].push(idx);
            ball.children.push(Vec::new());
            ball.truncated.push(false);
            next.push(idx);
        }
    }
    Ok(())
}

/// Result of cyclically reducing a circuit word: `word = p · core · p^{-1}`
/// with the core cyclically reduced.
#[derive(Debug, Clone)]
pub struct CyclicReduction {
    pub conjugator: GogWord,
    pub core: GogWord,
}

/// Cyclic reduction on the word level: repeatedly absorb the head into the
/// end and contract wrap-around pinches, conjugating as it goes.
pub fn cyclic_reduce(gog: &GraphOfGroups, w: &GogWord) -> Result<CyclicReduction, Error> {
    if !w.is_circuit(gog) {
        return Err(Error::IllTypedWord("cyclic reduction requires a circuit word".into()));
    }
    let mut core = crate::gog::reduce_word(gog, w)?;
    let mut conjugator = GogWord::identity(gog, w.base);
    loop {
        if core.steps.is_empty() {
            break;
        }
        let base_group = gog.vertex_group(core.base);
        if core.head != base_group.identity() {
            // conjugate by the head: w := g0^{-1} w g0
            let g0 = core.head;
            conjugator = conjugator.concat(gog, &GogWord::element(core.base, g0))?;
            core.head = base_group.identity();
            let last = core.steps.len() - 1;
            let end_group = gog.vertex_group(core.end_vertex(gog));
            core.steps[last].1 = end_group.mul(&core.steps[last].1, &g0)?;
        }
        let (e1, _) = core.steps[0];
        let (en, gn) = *core.steps.last().expect("nonempty");
        if core.steps.len() >= 2 && gog.graph().bar(en) == e1 && gog.mono(en).in_image(&gn) {
            // wrap-around pinch: conjugate by e1 and contract both ends
            let step_word = GogWord {
                base: core.base,
                head: gog.vertex_group(core.base).identity(),
                steps: vec![(e1, gog.vertex_group(gog.graph().terminus(e1)).identity())],
            };
            conjugator = conjugator.concat(gog, &step_word)?;
            let c = gog.push_through(e1, &gn)?;
            let n = core.steps.len();
            let new_head = core.steps[0].1;
            let mut new_steps: Vec<(EdgeId, GroupElement)> = core.steps[1..n - 1].to_vec();
            let new_base = gog.graph().terminus(e1);
            match new_steps.last_mut() {
                Some((f, g)) => {
                    let gv = gog.vertex_group(gog.graph().terminus(*f));
                    *g = gv.mul(g, &c)?;
                }
                None => {
                    // everything contracted; c merges into the head
                    let gv = gog.vertex_group(new_base);
                    core.head = gv.mul(&new_head, &c)?;
                    core.base = new_base;
                    core.steps = Vec::new();
                    core = crate::gog::reduce_word(gog, &core)?;
                    continue;
                }
            }
            core = crate::gog::reduce_word(
                gog,
                &GogWord {
                    base: new_base,
                    head: new_head,
                    steps: new_steps,
                },
            )?;
            continue;
        }
        break;
    }
    Ok(CyclicReduction { conjugator, core })
}

/// Exact certificate for a hyperbolic verdict.
///
/// `min_vertex` realizes the translation length and the doubling identity
/// `d(x, g²x) = 2 d(x, gx)` — which, displacement being convex on trees,
/// holds iff `x` lies on the axis and rules out an elliptic element —
/// plus a displacement sweep over the ball neighbors of `min_vertex`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HyperbolicCert {
    pub translation_length: usize,
    pub min_vertex: Label,
    pub doubling_checked: bool,
    pub neighbors_checked: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    Elliptic { fixed: Label },
    Hyperbolic(HyperbolicCert),
}

impl Classification {
    pub fn translation_length(&self) -> usize {
        match self {
            Classification::Elliptic { .. } => 0,
            Classification::Hyperbolic(cert) => cert.translation_length,
        }
    }

    pub fn is_hyperbolic(&self) -> bool {
        matches!(self, Classification::Hyperbolic(_))
    }
}

/// Classifies a circuit word acting on the tree.
///
/// The word is cyclically reduced; syllable length zero gives an elliptic
/// verdict with an explicit fixed vertex, positive length gives the
/// translation length with the minimal-displacement certificate. The ball
/// must contain the orbit segment of the candidate minimum.
pub fn classify(gog: &GraphOfGroups, w: &GogWord, ball: &TreeBall) -> Result<Classification, Error> {
    if w.base != ball.base_gamma() {
        return Err(Error::IllTypedWord("word and ball have different bases".into()));
    }
    let reduction = cyclic_reduce(gog, w)?;
    let x0: Label = crate::gog::normal_form(gog, &reduction.conjugator)?.steps;
    let ell = reduction.core.syllables();
    if ell == 0 {
        let disp = label_dist(&x0, &act_label(gog, w, w.base, &x0)?);
        if disp != 0 {
            return Err(Error::CertificateUnavailable(
                "fixed-vertex check failed (internal)".to_string(),
            ));
        }
        if ball.find(&x0).is_none() {
            return Err(Error::CertificateUnavailable(
                "fixed vertex outside the supplied ball".to_string(),
            ));
        }
        return Ok(Classification::Elliptic { fixed: x0 });
    }
    let gx0 = act_label(gog, w, w.base, &x0)?;
    if label_dist(&x0, &gx0) != ell {
        return Err(Error::CertificateUnavailable(
            "displacement does not match the cyclically reduced length (internal)".to_string(),
        ));
    }
    let g2 = w.pow(gog, 2)?;
    let g2x0 = act_label(gog, &g2, w.base, &x0)?;
    if label_dist(&x0, &g2x0) != 2 * ell {
        return Err(Error::CertificateUnavailable(
            "doubling identity failed (internal)".to_string(),
        ));
    }
    let idx = ball
        .find(&x0)
        .ok_or_else(|| Error::CertificateUnavailable("minimal vertex outside the supplied ball".to_string()))?;
    let mut neighbors_checked = 0;
    for y in ball.neighbors(idx) {
        let ylabel = ball.label(y);
        let gy = act_label(gog, w, w.base, ylabel)?;
        if label_dist(ylabel, &gy) < ell {
            return Err(Error::CertificateUnavailable(
                "neighbor displacement below candidate minimum (internal)".to_string(),
            ));
        }
        neighbors_checked += 1;
    }
    Ok(Classification::Hyperbolic(HyperbolicCert {
        translation_length: ell,
        min_vertex: x0,
        doubling_checked: true,
        neighbors_checked,
    }))
}

/// Builds a ball guaranteed to contain the classification certificate of
/// `w` and classifies in it.
pub fn classify_auto(gog: &GraphOfGroups, w: &GogWord) -> Result<(Classification, TreeBall), Error> {
    let reduction = cyclic_reduce(gog, w)?;
    let p = &reduction.conjugator;
    let seeds = vec![
        p.clone(),
        w.concat(gog, p)?,
        w.pow(gog, 2)?.concat(gog, p)?,
    ];
    let depth = crate::gog::normal_form(gog, p)?.syllables();
    let radius = depth + 2;
    let ball = build_ball(gog, w.base, radius, 4, &seeds)?;
    let verdict = classify(gog, w, &ball)?;
    Ok((verdict, ball))
}

/// A geodesic segment of length at least `min_len` on the axis of a
/// hyperbolic word, generated by translating the certified minimal vertex
/// by powers of the word. Invariance is checked: the word shifts the
/// segment by its translation length.
pub fn axis_segment(gog: &GraphOfGroups, w: &GogWord, min_len: usize) -> Result<Vec<Label>, Error> {
    let reduction = cyclic_reduce(gog, w)?;
    let ell = reduction.core.syllables();
    if ell == 0 {
        return Err(Error::CertificateUnavailable("axis of an elliptic element".to_string()));
    }
    let x0: Label = crate::gog::normal_form(gog, &reduction.conjugator)?.steps;
    let k = (min_len / (2 * ell)) + 1;
    let mut points = Vec::new();
    for i in -(k as i64)..=(k as i64) {
        let gi = w.pow(gog, i)?;
        points.push(act_label(gog, &gi, w.base, &x0)?);
    }
    let mut segment: Vec<Label> = Vec::new();
    for pair in points.windows(2) {
        let leg = label_geodesic(&pair[0], &pair[1]);
        let start = if segment.is_empty() { 0 } else { 1 };
        segment.extend(leg.into_iter().skip(start));
    }
    // invariance: w shifts the segment by ell
    for i in 0..segment.len().saturating_sub(ell) {
        let shifted = act_label(gog, w, w.base, &segment[i])?;
        if shifted != segment[i + ell] {
            return Err(Error::CertificateUnavailable(
                "axis segment is not shift-invariant (internal)".to_string(),
            ));
        }
    }
    Ok(segment)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SameAxisCert {
    pub segment: Vec<Label>,
    pub shift: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Independence {
    Independent { divergence: Label },
    SameAxis(SameAxisCert),
    Unknown { horizon: usize },
}

/// Decides whether two hyperbolic words are independent.
///
/// Walks a window of `Axis(g)` and evaluates the exact distance to
/// `Axis(h)` via `d(x, Axis(h)) = (d(x, hx) - ℓ(h)) / 2`, a convex
/// function along the window. A bounded overlap with strict rises on both
/// sides certifies independence (two lines in a tree that diverge never
/// rejoin); mapping an `ℓ(h)+2` sub-segment of `Axis(g)` into `Axis(g)`
/// with a consistent shift certifies a shared axis; otherwise the
/// verdict is unknown at this horizon.
pub fn independence_verdict(
    gog: &GraphOfGroups,
    g: &GogWord,
    h: &GogWord,
    horizon: usize,
) -> Result<Independence, Error> {
    let red_g = cyclic_reduce(gog, g)?;
    let red_h = cyclic_reduce(gog, h)?;
    let ell_g = red_g.core.syllables();
    let ell_h = red_h.core.syllables();
    if ell_g == 0 || ell_h == 0 {
        return Err(Error::IllTypedWord("independence requires hyperbolic words".into()));
    }
    let window_len = 2 * (horizon + ell_g + ell_h + 2);
    let window = axis_segment(gog, g, window_len)?;
    let disp = |x: &Label| -> Result<usize, Error> {
        Ok(label_dist(x, &act_label(gog, h, h.base, x)?))
    };
    let mut f = Vec::with_capacity(window.len());
    for x in &window {
        let d = disp(x)?;
        if d < ell_h || (d - ell_h) % 2 != 0 {
            return Err(Error::CertificateUnavailable(
                "displacement parity violated (internal)".to_string(),
            ));
        }
        f.push((d - ell_h) / 2);
    }
    let m = *f.iter().min().expect("nonempty window");
    let i0 = f.iter().position(|&x| x == m).expect("min exists");
    let i1 = f.iter().rposition(|&x| x == m).expect("min exists");
    let rises_left = i0 > 0 && f[i0 - 1] > m;
    let rises_right = i1 + 1 < f.len() && f[i1 + 1] > m;
    if rises_left && rises_right {
        // overlap (m = 0) or bridge gap (m > 0) is bounded: by convexity the
        // distance to Axis(h) keeps growing past both rises
        return Ok(Independence::Independent {
            divergence: window[i1].clone(),
        });
    }
    if m == 0 {
        // try the shared-axis certificate on a sub-segment of the overlap
        let need = ell_h + 3; // ℓ(h)+2 edges
        if i1 - i0 + 1 >= need {
            let seg: Vec<Label> = window[i0..i0 + need].to_vec();
            let on_axis_g = |x: &Label| -> Result<bool, Error> {
                let d = label_dist(x, &act_label(gog, g, g.base, x)?);
                Ok(d == ell_g)
            };
            let pos_of = |x: &Label| -> Option<i64> {
                // position along the g-axis line relative to the window
                if x == &window[0] {
                    return Some(0);
                }
                let d0 = label_dist(x, &window[0]);
                let d1 = label_dist(x, &window[1]);
                if d1 + 1 == d0 {
                    Some(d0 as i64)
                } else if d0 + 1 == d1 {
                    Some(-(d0 as i64))
                } else {
                    None
                }
            };
            let mut ok = true;
            let mut shift: Option<i64> = None;
            for s in &seg {
                let hs = act_label(gog, h, h.base, s)?;
                if !on_axis_g(&hs)? {
                    ok = false;
                    break;
                }
                let (ps, phs) = match (pos_of(s), pos_of(&hs)) {
                    (Some(a), Some(b)) => (a, b),
                    _ => {
                        ok = false;
                        break;
                    }
                };
                let delta = phs - ps;
                if delta.unsigned_abs() as usize != ell_h {
                    ok = false;
                    break;
                }
                match shift {
                    None => shift = Some(delta),
                    Some(prev) if prev == delta => {}
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                return Ok(Independence::SameAxis(SameAxisCert {
                    segment: seg,
                    shift: shift.expect("set on success"),
                }));
            }
        }
    }
    Ok(Independence::Unknown { horizon })
}

/// Renders a label for reports: the coset string of the vertex.
pub fn render_label(gog: &GraphOfGroups, base: VertexId, label: &Label) -> alloc::string::String {
    if label.is_empty() {
        return format!("{}", gog.graph().vertex_name(base));
    }
    let mut out = alloc::string::String::new();
    for (sigma, e) in label {
        let v = gog.graph().origin(*e);
        let gv = gog.vertex_group(v);
        if *sigma != gv.identity() {
            out.push_str(&gv.render(sigma));
            out.push('*');
        }
        out.push_str(gog.graph().edge_name(*e));
        out.push('*');
    }
    out.push_str(gog.graph().vertex_name(terminal_vertex(gog, base, label)));
    out
}
