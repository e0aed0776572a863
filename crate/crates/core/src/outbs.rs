//! Graph-of-groups structures of `Out(BS(p,q))` for `q = p·n` with
//! `p, |n| > 1`: the infinite-ray structure (truncated at a chosen
//! level) and the single-edge amalgam structure, together with the named
//! automorphisms `psi`, `iota`, `phi:k`, the level bookkeeping of the
//! ray tree, and the two worked example families.
//!
//! Concretely the vertex groups are `A = Z_{p|n-1|} ⋊ Z_2` and (for the
//! edge structure) `B = Z[1/|n|]/|n(n-1)|Z ⋊ Z_2`, amalgamated over
//! `C = Z_{|n-1|} ⋊ Z_2` with the rotation generator of `C` sent to
//! `psi^p` on one side and `phi_1^n` on the other. The embedding
//! `phi_k = n^{1-k}` is the unique rotation realization satisfying
//! `phi_{k+1}^n = phi_k` with `phi_1` of order `|n(n-1)|`; for negative
//! `n` the sign is carried by the numerator.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::error::Error;
use crate::gog::{EdgeId, GogWord, Graph, GraphOfGroups, MonoSpec, VertexId};
use crate::groups::{Group, GroupElement, Subgroup, DEFAULT_CLOSURE_BOUND};
use crate::quotient::{EquivariantFamily, FamilyMode};
use crate::tree::Label;

/// Validated parameters `q = p·n`, `p > 1`, `|n| > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutBsParams {
    pub p: i64,
    pub q: i64,
    pub n: i64,
}

impl OutBsParams {
    /// Validates the proper-divisor hypothesis. Outside it the outer
    /// automorphism group is finite or virtually cyclic and the error
    /// carries its isomorphism type.
    pub fn new(p: i64, q: i64) -> Result<Self, Error> {
        if p < 2 {
            return Err(Error::InvalidDescriptor("p must be at least 2".into()));
        }
        if q == 0 {
            return Err(Error::InvalidDescriptor("q must be nonzero".into()));
        }
        if q == p {
            return Err(Error::NotProperDivisor {
                iso_type: "Z ⋊ (Z_2 × Z_2)".to_string(),
            });
        }
        if q == -p {
            return Err(Error::NotProperDivisor {
                iso_type: format!("Z_{{2p}} ⋊ Z_2 = Z_{} ⋊ Z_2", 2 * p),
            });
        }
        if q % p != 0 {
            return Err(Error::NotProperDivisor {
                iso_type: format!("Z_{{2|p-q|}} ⋊ Z_2 = Z_{} ⋊ Z_2", 2 * (p - q).abs()),
            });
        }
        let n = q / p;
        debug_assert!(n.unsigned_abs() > 1);
        Ok(OutBsParams { p, q, n })
    }

    pub fn abs_n(&self) -> u64 {
        self.n.unsigned_abs()
    }

    pub fn abs_n_minus_one(&self) -> u64 {
        (self.n - 1).unsigned_abs()
    }

    /// `|A| = 2p|n-1|`.
    pub fn a_order(&self) -> u128 {
        2 * self.p as u128 * self.abs_n_minus_one() as u128
    }

    /// `|G_{v_k}|`: `2p|n-1|` at the base, `2|n|^k|n-1|` above it.
    pub fn level_order(&self, k: u32) -> u128 {
        if k == 0 {
            self.a_order()
        } else {
            2 * (self.abs_n() as u128).pow(k) * self.abs_n_minus_one() as u128
        }
    }
}

/// Names of the distinguished automorphisms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Named {
    Psi,
    Iota,
    Phi(u32),
}

impl Named {
    pub fn parse(s: &str) -> Option<Named> {
        match s {
            "psi" => Some(Named::Psi),
            "iota" => Some(Named::Iota),
            _ => {
                let k = s.strip_prefix("phi:")?.parse().ok()?;
                if k >= 1 {
                    Some(Named::Phi(k))
                } else {
                    None
                }
            }
        }
    }
}

/// The single-edge amalgam structure with its distinguished vertices.
#[derive(Debug, Clone)]
pub struct EdgeGog {
    pub params: OutBsParams,
    pub gog: GraphOfGroups,
    pub a: VertexId,
    pub b: VertexId,
    /// The oriented edge from `a` to `b`.
    pub edge: EdgeId,
}

/// `phi_k` as an element of `Z[1/|n|]/mZ`: the rotation `n^{1-k}`.
fn phi_element(b_group: &Group, n: i64, k: u32) -> Result<GroupElement, Error> {
    debug_assert!(k >= 1);
    let exp = k - 1;
    let num: i128 = if n < 0 && exp % 2 == 1 { -1 } else { 1 };
    b_group.fraction(num, exp, false)
}

/// Builds the edge-of-groups structure of `Out(BS(p,q))`:
/// `A = Z_{p|n-1|} ⋊ Z_2` and `B = Z[1/|n|]/|n(n-1)|Z ⋊ Z_2` amalgamated
/// over `C = Z_{|n-1|} ⋊ Z_2`, with the rotation generator of `C` sent
/// to `psi^p` in `A` and to `phi_1^n` in `B`.
pub fn build_edge_gog(p: i64, q: i64) -> Result<EdgeGog, Error> {
    let params = OutBsParams::new(p, q)?;
    let n = params.n;
    let m_a = params.p as u64 * params.abs_n_minus_one();
    let m_b = params.abs_n() * params.abs_n_minus_one();

    let a_group = Group::dihedral(m_a);
    let a_names = vec![
        ("psi".to_string(), a_group.rotation(1)?),
        ("iota".to_string(), a_group.reflection()?),
    ];
    let a_group = a_group.with_names(a_names);
    let b_group = Group::lfd(n, m_b);
    let b_names = vec![
        ("phi:1".to_string(), b_group.rotation(1)?),
        ("iota".to_string(), b_group.reflection()?),
    ];
    let b_group = b_group.with_names(b_names);
    let c_group = Group::dihedral(params.abs_n_minus_one());

    let mut graph = Graph::new();
    let a = graph.add_vertex("A");
    let b = graph.add_vertex("B");
    let (e, _ebar) = graph.add_edge("e", "e~", a, b);

    let into_b = MonoSpec {
        gen_images: vec![
            (c_group.rotation(1)?, b_group.rotation(n)?),
            (c_group.reflection()?, b_group.reflection()?),
        ],
    };
    let into_a = MonoSpec {
        gen_images: vec![
            (c_group.rotation(1)?, a_group.rotation(p)?),
            (c_group.reflection()?, a_group.reflection()?),
        ],
    };
    let gog = GraphOfGroups::new(
        graph,
        vec![a_group, b_group],
        vec![c_group.clone(), c_group],
        vec![into_b, into_a],
    )?;
    Ok(EdgeGog {
        params,
        gog,
        a,
        b,
        edge: e,
    })
}

impl EdgeGog {
    /// Circuit word at `A` realizing a named automorphism.
    pub fn word(&self, name: Named) -> Result<GogWord, Error> {
        let a_group = self.gog.vertex_group(self.a);
        match name {
            Named::Psi => Ok(GogWord::element(self.a, a_group.rotation(1)?)),
            Named::Iota => Ok(GogWord::element(self.a, a_group.reflection()?)),
            Named::Phi(k) => {
                let b_group = self.gog.vertex_group(self.b);
                let phi = phi_element(b_group, self.params.n, k)?;
                Ok(GogWord {
                    base: self.a,
                    head: a_group.identity(),
                    steps: vec![
                        (self.edge, phi),
                        (self.gog.graph().bar(self.edge), a_group.identity()),
                    ],
                })
            }
        }
    }

    /// Product of named automorphism powers as one circuit word.
    pub fn word_product(&self, factors: &[(Named, i64)]) -> Result<GogWord, Error> {
        let mut acc = GogWord::identity(&self.gog, self.a);
        for (name, exp) in factors {
            let w = self.word(*name)?.pow(&self.gog, *exp)?;
            acc = acc.concat(&self.gog, &w)?;
        }
        Ok(acc)
    }
}

/// The ray-of-groups structure truncated at level `levels`; its boundary
/// vertex is marked incomplete so downstream consumers know the star of
/// the last level is cut.
#[derive(Debug, Clone)]
pub struct RayGog {
    pub params: OutBsParams,
    pub gog: GraphOfGroups,
    pub vertices: Vec<VertexId>,
    /// `edges[k]` is the oriented edge `v_k → v_{k+1}`.
    pub edges: Vec<EdgeId>,
    pub levels: u32,
}

/// Builds the ray structure: `G_{v_0} = Z_{p|n-1|} ⋊ Z_2`,
/// `G_{v_k} = Z_{|n|^k|n-1|} ⋊ Z_2`, with `α_{e_0}` landing on
/// `⟨phi_1^n, iota⟩`, `α_{ē_0}` on `⟨psi^p, iota⟩`, and `α_{ē_k}`
/// surjective for `k ≥ 1` (those edges are collapsible).
pub fn build_ray_gog(p: i64, q: i64, levels: u32) -> Result<RayGog, Error> {
    if levels < 1 {
        return Err(Error::InvalidDescriptor("ray needs at least one level".into()));
    }
    let params = OutBsParams::new(p, q)?;
    let n = params.n;
    let abs_n = params.abs_n();
    let d = params.abs_n_minus_one();

    let mut graph = Graph::new();
    let mut vertices = Vec::new();
    for k in 0..=levels {
        vertices.push(graph.add_vertex(format!("v{k}")));
    }
    let mut vertex_groups = Vec::new();
    for k in 0..=levels {
        let m = if k == 0 {
            p as u64 * d
        } else {
            abs_n.pow(k) * d
        };
        let g = Group::dihedral(m);
        let rot_name = if k == 0 { "psi".to_string() } else { format!("phi:{k}") };
        let names = vec![
            (rot_name, g.rotation(1)?),
            ("iota".to_string(), g.reflection()?),
        ];
        vertex_groups.push(g.with_names(names));
    }
    let mut edges = Vec::new();
    let mut edge_groups = Vec::new();
    let mut monos = Vec::new();
    for k in 0..levels {
        let (e, _eb) = graph.add_edge(
            format!("e{k}"),
            format!("e{k}~"),
            vertices[k as usize],
            vertices[k as usize + 1],
        );
        edges.push(e);
        let edge_group = if k == 0 {
            Group::dihedral(d)
        } else {
            Group::dihedral(abs_n.pow(k) * d)
        };
        let up = &vertex_groups[k as usize + 1];
        let down = &vertex_groups[k as usize];
        let into_up = MonoSpec {
            gen_images: vec![
                (edge_group.rotation(1)?, up.rotation(n)?),
                (edge_group.reflection()?, up.reflection()?),
            ],
        };
        let down_rot = if k == 0 { p } else { 1 };
        let into_down = MonoSpec {
            gen_images: vec![
                (edge_group.rotation(1)?, down.rotation(down_rot)?),
                (edge_group.reflection()?, down.reflection()?),
            ],
        };
        edge_groups.push(edge_group.clone());
        edge_groups.push(edge_group);
        monos.push(into_up);
        monos.push(into_down);
    }
    let mut gog = GraphOfGroups::new(graph, vertex_groups, edge_groups, monos)?;
    gog.mark_incomplete(vertices[levels as usize]);
    Ok(RayGog {
        params,
        gog,
        vertices,
        edges,
        levels,
    })
}

impl RayGog {
    pub fn base(&self) -> VertexId {
        self.vertices[0]
    }

    /// Circuit word at `v_0` realizing a named automorphism. `phi:k`
    /// travels out to level `k`, rotates, and comes back.
    pub fn word(&self, name: Named) -> Result<GogWord, Error> {
        let v0 = self.base();
        let g0 = self.gog.vertex_group(v0);
        match name {
            Named::Psi => Ok(GogWord::element(v0, g0.rotation(1)?)),
            Named::Iota => Ok(GogWord::element(v0, g0.reflection()?)),
            Named::Phi(k) => {
                if k < 1 || k > self.levels {
                    return Err(Error::InvalidDescriptor(format!(
                        "phi:{k} needs 1 <= k <= {}",
                        self.levels
                    )));
                }
                let mut steps = Vec::new();
                for j in 0..k {
                    let e = self.edges[j as usize];
                    let t = self.gog.graph().terminus(e);
                    steps.push((e, self.gog.vertex_group(t).identity()));
                }
                // rotate at level k
                let vk = self.vertices[k as usize];
                let last = steps.len() - 1;
                steps[last].1 = self.gog.vertex_group(vk).rotation(1)?;
                for j in (0..k).rev() {
                    let e = self.gog.graph().bar(self.edges[j as usize]);
                    let t = self.gog.graph().terminus(e);
                    steps.push((e, self.gog.vertex_group(t).identity()));
                }
                Ok(GogWord {
                    base: v0,
                    head: g0.identity(),
                    steps,
                })
            }
        }
    }

    pub fn word_product(&self, factors: &[(Named, i64)]) -> Result<GogWord, Error> {
        let mut acc = GogWord::identity(&self.gog, self.base());
        for (name, exp) in factors {
            let w = self.word(*name)?.pow(&self.gog, *exp)?;
            acc = acc.concat(&self.gog, &w)?;
        }
        Ok(acc)
    }

    /// Level of a tree vertex: the index of the Γ-vertex its label ends at.
    pub fn x_level(&self, label: &Label) -> u32 {
        let v = crate::tree::terminal_vertex(&self.gog, self.base(), label);
        self.vertices.iter().position(|&x| x == v).expect("ray vertex") as u32
    }

    /// Expected valence by level: `p` at level 0, `|n| + 1` above.
    pub fn valence_expect(&self, level: u32) -> u64 {
        if level == 0 {
            self.params.p as u64
        } else {
            self.params.abs_n() + 1
        }
    }
}

/// Comparison of the fully collapsed ray against the edge structure
/// restricted to `⟨phi_levels, iota⟩`.
#[derive(Debug, Clone)]
pub struct CollapseComparison {
    pub matches: bool,
    pub collapsed_order: u128,
    pub truncation_order: u128,
    pub detail: String,
}

/// Iteratively collapses the ray edges `e_{levels-1}, ..., e_1` (through
/// their surjective orientations) and compares the resulting edge of
/// groups with the edge structure of the same parameters, restricted to
/// the subgroup of `B` generated by `phi_levels` and `iota`.
pub fn collapse_ray_check(p: i64, q: i64, levels: u32) -> Result<CollapseComparison, Error> {
    if levels < 2 {
        return Err(Error::InvalidDescriptor("collapse comparison needs levels >= 2".into()));
    }
    let ray = build_ray_gog(p, q, levels)?;
    let mut gog = ray.gog.clone();
    for k in (1..levels).rev() {
        let e = gog
            .graph()
            .edge_by_name(&format!("e{k}"))
            .expect("ray edge survives until collapsed");
        let ebar = gog.graph().bar(e);
        let collapse = crate::gog::collapse_edge(&gog, ebar)?;
        gog = collapse.gog;
    }
    compare_collapsed_with_truncation(&gog, p, q, levels)
}

/// Collapses in the opposite order (`e_1` first); the result must match
/// the same truncation.
pub fn collapse_ray_check_reversed(p: i64, q: i64, levels: u32) -> Result<CollapseComparison, Error> {
    if levels < 2 {
        return Err(Error::InvalidDescriptor("collapse comparison needs levels >= 2".into()));
    }
    let ray = build_ray_gog(p, q, levels)?;
    let mut gog = ray.gog.clone();
    for k in 1..levels {
        let e = gog
            .graph()
            .edge_by_name(&format!("e{k}"))
            .expect("ray edge survives until collapsed");
        let ebar = gog.graph().bar(e);
        let collapse = crate::gog::collapse_edge(&gog, ebar)?;
        gog = collapse.gog;
    }
    compare_collapsed_with_truncation(&gog, p, q, levels)
}

fn compare_collapsed_with_truncation(
    collapsed: &GraphOfGroups,
    p: i64,
    q: i64,
    levels: u32,
) -> Result<CollapseComparison, Error> {
    let edge = build_edge_gog(p, q)?;
    let b_group = edge.gog.vertex_group(edge.b);
    let phi_top = phi_element(b_group, edge.params.n, levels)?;
    let truncation = Subgroup::generate(
        b_group,
        &[phi_top, b_group.reflection()?],
        DEFAULT_CLOSURE_BOUND,
    )?;

    if collapsed.graph().vertex_count() != 2 || collapsed.graph().oriented_edge_count() != 2 {
        return Ok(CollapseComparison {
            matches: false,
            collapsed_order: 0,
            truncation_order: truncation.order() as u128,
            detail: "collapsed graph is not a single edge".to_string(),
        });
    }
    let v0 = collapsed.graph().vertex_by_name("v0").expect("base survives");
    let vtop = collapsed
        .graph()
        .vertices()
        .find(|&v| v != v0)
        .expect("two vertices");
    let a_expected = edge.gog.vertex_group(edge.a);
    if collapsed.vertex_group(v0).kind() != a_expected.kind() {
        return Ok(CollapseComparison {
            matches: false,
            collapsed_order: 0,
            truncation_order: truncation.order() as u128,
            detail: "base vertex group differs".to_string(),
        });
    }
    let top_group = collapsed.vertex_group(vtop);
    let collapsed_order = top_group.order().expect("dihedral is finite");
    let truncation_order = truncation.order() as u128;

    // iso: rotation 1 of the collapsed top vertex is phi_levels in B
    let iso = |g: &GroupElement| -> Result<GroupElement, Error> {
        match g {
            GroupElement::Dihedral { rot, refl } => {
                let mut acc = b_group.identity();
                for _ in 0..*rot {
                    acc = b_group.mul(&acc, &phi_top)?;
                }
                if *refl {
                    acc = b_group.mul(&acc, &b_group.reflection()?)?;
                }
                Ok(acc)
            }
            _ => Err(Error::DescriptorMismatch),
        }
    };

    // the surviving edge, oriented out of v0
    let e_out = collapsed
        .graph()
        .oriented_edges()
        .find(|&e| collapsed.graph().origin(e) == v0)
        .expect("edge at base");
    let e_in = collapsed.graph().bar(e_out);

    let mut matches = collapsed_order == truncation_order;
    let mut detail = String::new();
    // A-side mono must agree verbatim with the edge structure
    let expected_a = edge.gog.mono(edge.gog.graph().bar(edge.edge));
    for ((g1, im1), (g2, im2)) in collapsed
        .mono(e_in)
        .gen_images()
        .iter()
        .zip(expected_a.gen_images().iter())
    {
        if g1 != g2 || im1 != im2 {
            matches = false;
            detail.push_str("A-side mono differs; ");
        }
    }
    // B-side mono must agree after transporting through the iso
    let expected_b = edge.gog.mono(edge.edge);
    for ((g1, im1), (g2, im2)) in collapsed
        .mono(e_out)
        .gen_images()
        .iter()
        .zip(expected_b.gen_images().iter())
    {
        if g1 != g2 {
            matches = false;
            detail.push_str("edge group generators differ; ");
            continue;
        }
        let mapped = iso(im1)?;
        if mapped != *im2 {
            matches = false;
            detail.push_str(&format!("B-side image differs: {mapped:?} vs {im2:?}; "));
        }
    }
    if detail.is_empty() {
        detail = format!("collapsed top vertex matches the phi:{levels} truncation");
    }
    Ok(CollapseComparison {
        matches,
        collapsed_order,
        truncation_order,
        detail,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleFamily {
    /// `R_A` generated from `psi^2`, `R_B` from `phi_1`: the infinite
    /// non-elementary quotient.
    SixNine,
    /// `R_A` generated from `psi^3` (whose closure is all rotations),
    /// `R_B` from `phi_1`: the finite-diameter elementary quotient.
    SixTen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleMode {
    /// The generator lists as stated, reflections included. Strict
    /// validation rejects these: `⟨phi_1, iota⟩` is not normal in `B`.
    AsWritten,
    /// Rotation-only generators, which validate and reproduce the
    /// quotient structures.
    Normalized,
}

/// The two worked example families on the `(4,12)` edge structure.
pub fn example_family(
    edge: &EdgeGog,
    which: ExampleFamily,
    mode: ExampleMode,
) -> Result<EquivariantFamily, Error> {
    if (edge.params.p, edge.params.q) != (4, 12) {
        return Err(Error::InvalidDescriptor("example families are defined for (4,12)".into()));
    }
    let a_group = edge.gog.vertex_group(edge.a);
    let b_group = edge.gog.vertex_group(edge.b);
    let psi_pow = match which {
        ExampleFamily::SixNine => 2,
        ExampleFamily::SixTen => 3,
    };
    let mut a_gens = vec![a_group.rotation(psi_pow)?];
    let mut b_gens = vec![b_group.rotation(1)?];
    if mode == ExampleMode::AsWritten {
        a_gens.push(a_group.reflection()?);
        b_gens.push(b_group.reflection()?);
    }
    let r_a = Subgroup::generate(a_group, &a_gens, DEFAULT_CLOSURE_BOUND)?;
    let r_b = Subgroup::generate(b_group, &b_gens, DEFAULT_CLOSURE_BOUND)?;
    let mut family = EquivariantFamily::new(FamilyMode::Strict);
    family.assign(edge.a, r_a);
    family.assign(edge.b, r_b);
    Ok(family)
}
