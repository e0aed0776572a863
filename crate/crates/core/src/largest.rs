//! Generating-set comparison and the largest-acylindrical-action
//! hypothesis checker.
//!
//! With `D` the diameter of the quotient graph, the displacement
//! generating set is `X = {g : d(ṽ_0, g ṽ_0) <= 2D+1}` and the
//! structural one is `Y` = vertex-group elements plus stable letters.
//! `Y ⊆ X`, and every `g ∈ X` decomposes through its path normal form
//! with at most `4D+3` letters from `Y`, so the two are equivalent and
//! the tree action is equivalent to the `X`-Cayley action.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::acyl::AcylCertificate;
use crate::error::Error;
use crate::gog::{GogWord, GraphOfGroups, VertexId};
use crate::tree;

/// Exact displacement of the base vertex under a circuit word: the
/// syllable length of its normal form.
pub fn base_displacement(gog: &GraphOfGroups, g: &GogWord) -> Result<usize, Error> {
    Ok(crate::gog::normal_form(gog, g)?.syllables())
}

/// Membership in `X = {g : d(ṽ_0, g ṽ_0) <= 2D+1}`.
pub fn x_membership(gog: &GraphOfGroups, g: &GogWord, diameter: usize) -> Result<bool, Error> {
    Ok(base_displacement(gog, g)? <= 2 * diameter + 1)
}

/// Word length of an element with respect to `Y`, read off its path
/// normal form: one letter per nontrivial transversal representative,
/// one per stable letter traversed, one for a nontrivial tail.
pub fn y_length(
    gog: &GraphOfGroups,
    g: &GogWord,
    tree_edges: &alloc::collections::BTreeSet<crate::gog::EdgeId>,
) -> Result<usize, Error> {
    let nf = crate::gog::normal_form(gog, g)?;
    let mut len = 0;
    for (sigma, e) in &nf.steps {
        let v = gog.graph().origin(*e);
        if *sigma != gog.vertex_group(v).identity() {
            len += 1;
        }
        if !tree_edges.contains(e) {
            len += 1;
        }
    }
    if nf.tail != gog.vertex_group(nf.end_vertex(gog)).identity() {
        len += 1;
    }
    Ok(len)
}

#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub diameter: usize,
    /// `4D + 3`.
    pub bound: usize,
    pub y_sampled: usize,
    pub max_y_displacement: usize,
    pub x_enumerated: usize,
    pub max_y_length: usize,
    /// Enumerated members of `X` whose `Y`-length exceeded the bound.
    /// Nonempty output is surfaced loudly by the caller.
    pub violations: Vec<GogWord>,
}

/// Verifies the equivalence `X ~ Y` on samples: every sampled `Y`
/// generator lies in `X`, and every enumerated element of `X` (up to
/// `budget`) has `Y`-length at most `4D+3`.
pub fn equivalence_check(gog: &GraphOfGroups, budget: usize) -> Result<EquivalenceReport, Error> {
    let graph = gog.graph();
    let diameter = graph
        .diameter()
        .ok_or_else(|| Error::InvalidGog("disconnected graph".into()))?;
    let bound = 4 * diameter + 3;
    let tree_edges = graph.spanning_tree();
    let base = VertexId(0);

    // Y ⊆ X: vertex-group samples conjugated to the base, stable letters
    let mut y_sampled = 0;
    let mut max_y_displacement = 0;
    for v in graph.vertices() {
        let group = gog.vertex_group(v);
        let mut samples: Vec<crate::groups::GroupElement> =
            group.named_generators().iter().map(|(_, g)| *g).collect();
        if samples.is_empty() {
            samples = group.enumerate().take(4).collect();
        }
        let path = graph
            .geodesic(base, v)
            .ok_or_else(|| Error::InvalidGog("disconnected graph".into()))?;
        let tree_path: Vec<_> = path.into_iter().filter(|e| tree_edges.contains(e)).collect();
        let mut pw_steps = Vec::new();
        for e in &tree_path {
            pw_steps.push((*e, gog.vertex_group(graph.terminus(*e)).identity()));
        }
        let pw = GogWord {
            base,
            head: gog.vertex_group(base).identity(),
            steps: pw_steps,
        };
        let pw_inv = pw.inverse(gog)?;
        for s in samples {
            let word = pw
                .concat(gog, &GogWord::element(v, s))?
                .concat(gog, &pw_inv)?;
            let disp = base_displacement(gog, &word)?;
            if disp > 2 * diameter + 1 {
                return Err(Error::CertificateUnavailable(format!(
                    "vertex-group sample displaces the base by {disp}, outside X"
                )));
            }
            max_y_displacement = max_y_displacement.max(disp);
            y_sampled += 1;
        }
    }
    for e in graph.oriented_edges() {
        if tree_edges.contains(&e) {
            continue;
        }
        // stable letter: close the circuit through the tree
        let to = graph.geodesic(base, graph.origin(e)).expect("connected");
        let back = graph.geodesic(graph.terminus(e), base).expect("connected");
        let mut steps = Vec::new();
        for f in to.iter().chain(core::iter::once(&e)).chain(back.iter()) {
            steps.push((*f, gog.vertex_group(graph.terminus(*f)).identity()));
        }
        let word = GogWord {
            base,
            head: gog.vertex_group(base).identity(),
            steps,
        };
        let disp = base_displacement(gog, &word)?;
        if disp > 2 * diameter + 1 {
            return Err(Error::CertificateUnavailable(format!(
                "stable letter displaces the base by {disp}, outside X"
            )));
        }
        max_y_displacement = max_y_displacement.max(disp);
        y_sampled += 1;
    }

    // enumerate X through base-orbit vertices within 2D+1 and the base
    // stabilizer, and bound every element's Y-length
    let radius = 2 * diameter + 1;
    let ball = tree::build_ball(gog, base, radius, 8, &[])?;
    let base_group = gog.vertex_group(base);
    let stab: Vec<_> = match base_group.elements() {
        Some(els) => els,
        None => base_group.enumerate().take(budget).collect(),
    };
    let mut x_enumerated = 0;
    let mut max_y_length = 0;
    let mut violations = Vec::new();
    'outer: for v in ball.vertices() {
        if ball.gamma_vertex(v) != base {
            continue;
        }
        let t = tree::word_of_label(gog, base, ball.label(v));
        for z in &stab {
            let g = t.concat(gog, &GogWord::element(base, *z))?;
            let len = y_length(gog, &g, &tree_edges)?;
            max_y_length = max_y_length.max(len);
            if len > bound {
                violations.push(g);
            }
            x_enumerated += 1;
            if x_enumerated >= budget {
                break 'outer;
            }
        }
    }
    Ok(EquivalenceReport {
        diameter,
        bound,
        y_sampled,
        max_y_displacement,
        x_enumerated,
        max_y_length,
        violations,
    })
}

/// Hypothesis inputs of the largest-action check. `from_gog` derives
/// them; tests and callers may override rows explicitly.
#[derive(Debug, Clone)]
pub struct LargestHypotheses {
    /// The graph of groups is genuinely finite — not a truncation of an
    /// infinite object.
    pub finite_graph: bool,
    pub certificate: Option<AcylCertificate>,
    /// Every vertex group consists of finite order elements only.
    pub vertex_groups_torsion: bool,
}

impl LargestHypotheses {
    pub fn from_gog(gog: &GraphOfGroups, certificate: Option<AcylCertificate>) -> Self {
        LargestHypotheses {
            finite_graph: gog.incomplete_vertices().is_empty(),
            certificate,
            vertex_groups_torsion: gog
                .graph()
                .vertices()
                .all(|v| gog.vertex_group(v).is_torsion()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LargestVerdict {
    /// All hypotheses hold: the tree action is the largest acylindrical
    /// action.
    LargestCertified,
    /// Some hypothesis fails or is unavailable; the converse is not
    /// decided.
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct HypothesisRow {
    pub key: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct LargestReport {
    pub rows: Vec<HypothesisRow>,
    pub verdict: LargestVerdict,
}

/// Checks the sufficient conditions for the tree action to be the
/// largest acylindrical action: a finite graph of groups, an
/// acylindricity certificate, and torsion vertex groups. All three hold
/// exactly when the verdict is certified; the report is monotone in the
/// hypotheses.
pub fn largest_report(hyp: &LargestHypotheses) -> LargestReport {
    let cert_ok = hyp
        .certificate
        .as_ref()
        .map(|c| c.certified())
        .unwrap_or(false);
    let rows = vec![
        HypothesisRow {
            key: "finite-graph".to_string(),
            passed: hyp.finite_graph,
            detail: if hyp.finite_graph {
                "locally finite with finite diameter".to_string()
            } else {
                "the structure truncates an infinite graph".to_string()
            },
        },
        HypothesisRow {
            key: "acylindricity-certificate".to_string(),
            passed: cert_ok,
            detail: match &hyp.certificate {
                Some(c) if c.certified() => format!("({}, {}) certified", c.k, c.bound),
                Some(c) => format!("violated at ({}, {})", c.k, c.bound),
                None => "no certificate supplied".to_string(),
            },
        },
        HypothesisRow {
            key: "vertex-groups-torsion".to_string(),
            passed: hyp.vertex_groups_torsion,
            detail: if hyp.vertex_groups_torsion {
                "every vertex group consists of finite order elements".to_string()
            } else {
                "a vertex group has an infinite order element".to_string()
            },
        },
    ];
    let verdict = if rows.iter().all(|r| r.passed) {
        LargestVerdict::LargestCertified
    } else {
        LargestVerdict::Inconclusive
    };
    LargestReport { rows, verdict }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acyl::{check_kc, ray_nonacyl_witness};
    use crate::outbs::{build_edge_gog, build_ray_gog, Named};

    #[test]
    fn x_membership_examples() {
        let edge = build_edge_gog(4, 12).unwrap();
        let gog = &edge.gog;
        let diameter = gog.graph().diameter().unwrap();
        assert_eq!(diameter, 1);
        // vertex-group elements displace by zero
        for name in [Named::Psi, Named::Iota, Named::Phi(1), Named::Phi(3)] {
            let w = edge.word(name).unwrap();
            assert!(x_membership(gog, &w, diameter).unwrap());
        }
        assert!(x_membership(gog, &GogWord::identity(gog, edge.a), diameter).unwrap());
        // (psi phi_1)^2 displaces by 4 > 3
        let w = edge
            .word_product(&[(Named::Psi, 1), (Named::Phi(1), 1)])
            .unwrap()
            .pow(gog, 2)
            .unwrap();
        assert_eq!(base_displacement(gog, &w).unwrap(), 4);
        assert!(!x_membership(gog, &w, diameter).unwrap());
    }

    #[test]
    fn equivalence_bound_holds() {
        let edge = build_edge_gog(4, 12).unwrap();
        let report = equivalence_check(&edge.gog, 500).unwrap();
        assert_eq!(report.diameter, 1);
        assert_eq!(report.bound, 7);
        assert!(report.violations.is_empty());
        assert!(report.max_y_length <= 7);
        assert!(report.x_enumerated >= 400);
        assert!(report.max_y_displacement <= 3);
        // psi phi_1 is in X with Y-length 2
        let tree_edges = edge.gog.graph().spanning_tree();
        let w = edge.word_product(&[(Named::Psi, 1), (Named::Phi(1), 1)]).unwrap();
        assert_eq!(y_length(&edge.gog, &w, &tree_edges).unwrap(), 2);
        let id = GogWord::identity(&edge.gog, edge.a);
        assert_eq!(y_length(&edge.gog, &id, &tree_edges).unwrap(), 0);
    }

    #[test]
    fn largest_verdicts() {
        let edge = build_edge_gog(4, 12).unwrap();
        let cert = check_kc(&edge.gog, edge.a, 1, 4, 3, 5).unwrap();
        assert!(cert.certified());
        let hyp = LargestHypotheses::from_gog(&edge.gog, Some(cert));
        let report = largest_report(&hyp);
        assert_eq!(report.verdict, LargestVerdict::LargestCertified);
        assert!(report.rows.iter().all(|r| r.passed));

        // the ray structure is a truncation and has no certificate; the
        // non-acylindricity witness exists instead
        let ray = build_ray_gog(2, 4, 4).unwrap();
        let hyp = LargestHypotheses::from_gog(&ray.gog, None);
        let report = largest_report(&hyp);
        assert_eq!(report.verdict, LargestVerdict::Inconclusive);
        assert!(!report.rows[0].passed);
        assert!(ray_nonacyl_witness(2, 4, 100, 3).is_ok());

        // a non-torsion vertex group flag forces inconclusive
        let mut hyp = LargestHypotheses::from_gog(
            &edge.gog,
            Some(check_kc(&edge.gog, edge.a, 1, 4, 2, 4).unwrap()),
        );
        hyp.vertex_groups_torsion = false;
        let report = largest_report(&hyp);
        assert_eq!(report.verdict, LargestVerdict::Inconclusive);
    }

    #[test]
    fn report_is_monotone() {
        // adding hypotheses never flips certified to inconclusive
        let edge = build_edge_gog(4, 12).unwrap();
        let cert = check_kc(&edge.gog, edge.a, 1, 4, 2, 4).unwrap();
        let weaker = LargestHypotheses {
            finite_graph: true,
            certificate: None,
            vertex_groups_torsion: true,
        };
        let stronger = LargestHypotheses {
            certificate: Some(cert),
            ..weaker.clone()
        };
        let rw = largest_report(&weaker);
        let rs = largest_report(&stronger);
        assert_eq!(rw.verdict, LargestVerdict::Inconclusive);
        assert_eq!(rs.verdict, LargestVerdict::LargestCertified);
        for (a, b) in rw.rows.iter().zip(rs.rows.iter()) {
            assert!(b.passed >= a.passed);
        }
    }
}
