//! Randomized invariants for the group arithmetic and the word calculus.

use bassfold::gog::{normal_form, reduce_word, GogWord};
use bassfold::groups::{is_normal_in, Group, GroupElement, Normality, Subgroup};
use bassfold::outbs::{build_edge_gog, EdgeGog};
use bassfold::tree::{self, label_dist};
use proptest::prelude::*;

fn dihedral_strategy() -> impl Strategy<Value = (Group, GroupElement, GroupElement, GroupElement)> {
    (1u64..=16).prop_flat_map(|m| {
        let g = Group::dihedral(m);
        let elem = (0..m, any::<bool>()).prop_map(move |(rot, refl)| GroupElement::Dihedral { rot, refl });
        (Just(g), elem.clone(), elem.clone(), elem)
    })
}

fn lfd_strategy() -> impl Strategy<Value = (Group, GroupElement, GroupElement, GroupElement)> {
    (
        prop_oneof![Just(-3i64), Just(-2), Just(2), Just(3)],
        1u64..=12,
    )
        .prop_flat_map(|(n, m)| {
            let g = Group::lfd(n, m);
            let elem = (0i128..600, 0u32..=3, any::<bool>()).prop_map(move |(num, exp, refl)| {
                Group::lfd(n, m).fraction(num, exp, refl).unwrap()
            });
            (Just(g), elem.clone(), elem.clone(), elem)
        })
}

fn s3() -> Group {
    // symmetric group on three points, indexed by permutation rank
    let perms: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let compose = |a: [usize; 3], b: [usize; 3]| [a[b[0]], a[b[1]], a[b[2]]];
    let index = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap();
    let mult: Vec<Vec<usize>> = perms
        .iter()
        .map(|a| perms.iter().map(|b| index(compose(*a, *b))).collect())
        .collect();
    Group::table(mult)
}

proptest! {
    #[test]
    fn dihedral_group_axioms((g, a, b, c) in dihedral_strategy()) {
        let ab = g.mul(&a, &b).unwrap();
        let bc = g.mul(&b, &c).unwrap();
        prop_assert_eq!(g.mul(&ab, &c).unwrap(), g.mul(&a, &bc).unwrap());
        prop_assert_eq!(g.mul(&a, &g.inv(&a).unwrap()).unwrap(), g.identity());
        prop_assert_eq!(g.mul(&g.identity(), &a).unwrap(), a);
    }

    #[test]
    fn lfd_group_axioms((g, a, b, c) in lfd_strategy()) {
        let ab = g.mul(&a, &b).unwrap();
        let bc = g.mul(&b, &c).unwrap();
        prop_assert_eq!(g.mul(&ab, &c).unwrap(), g.mul(&a, &bc).unwrap());
        prop_assert_eq!(g.mul(&a, &g.inv(&a).unwrap()).unwrap(), g.identity());
        // canonical form is closed under multiplication
        prop_assert!(g.contains(&ab));
    }

    #[test]
    fn order_equals_cyclic_closure((g, a, _b, _c) in lfd_strategy()) {
        let cyc = Subgroup::generate(&g, &[a], 1_000_000).unwrap();
        prop_assert_eq!(g.order_of(&a).unwrap(), cyc.order() as u128);
    }

    #[test]
    fn dihedral_transversal_counts((g, a, b, _c) in dihedral_strategy()) {
        let h = Subgroup::generate(&g, &[a, b], 1_000_000).unwrap();
        let reps: Vec<_> = h.transversal().collect();
        prop_assert_eq!(reps.len() as u128 * h.order() as u128, g.order().unwrap());
        for (i, x) in reps.iter().enumerate() {
            for y in reps.iter().skip(i + 1) {
                prop_assert!(!h.coset_equal(x, y).unwrap());
            }
        }
    }

    #[test]
    fn normal_subgroups_absorb_conjugation((g, a, b, c) in dihedral_strategy()) {
        let sub = Subgroup::generate(&g, &[a], 1_000_000).unwrap();
        if let Normality::Normal = is_normal_in(&sub, &g).unwrap() {
            for conj in [b, c] {
                for r in sub.closure().iter().take(20) {
                    let x = g
                        .mul(&g.mul(&conj, r).unwrap(), &g.inv(&conj).unwrap())
                        .unwrap();
                    prop_assert!(sub.contains(&x));
                }
            }
        }
    }
}

#[test]
fn table_group_axioms_exhaustive() {
    let g = s3();
    g.validate().unwrap();
    let els = g.elements().unwrap();
    for a in &els {
        assert_eq!(g.mul(a, &g.inv(a).unwrap()).unwrap(), g.identity());
        for b in &els {
            for c in &els {
                let ab = g.mul(a, b).unwrap();
                let bc = g.mul(b, c).unwrap();
                assert_eq!(g.mul(&ab, c).unwrap(), g.mul(a, &bc).unwrap());
            }
        }
    }
    // normality in a table group: the alternating subgroup is normal, a
    // transposition subgroup is not
    let a3 = Subgroup::generate(&g, &[GroupElement::Table { index: 3 }], 100).unwrap();
    assert_eq!(a3.order(), 3);
    assert!(is_normal_in(&a3, &g).unwrap().is_normal());
    let flip = Subgroup::generate(&g, &[GroupElement::Table { index: 1 }], 100).unwrap();
    assert!(!is_normal_in(&flip, &g).unwrap().is_normal());
}

/// Deterministic splitmix64 for reproducible word sampling.
struct Rng(u64);

impl Rng {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    fn below(&mut self, n: usize) -> usize {
        (self.next() % n as u64) as usize
    }
}

fn random_b_element(edge: &EdgeGog, rng: &mut Rng) -> GroupElement {
    let b = edge.gog.vertex_group(edge.b);
    let num = rng.below(40) as i128;
    let exp = rng.below(3) as u32;
    let refl = rng.below(2) == 1;
    b.fraction(num, exp, refl).unwrap()
}

fn random_word(edge: &EdgeGog, rng: &mut Rng, max_traversals: usize) -> GogWord {
    let gog = &edge.gog;
    let a_group = gog.vertex_group(edge.a);
    let ebar = gog.graph().bar(edge.edge);
    let rand_a = |rng: &mut Rng| {
        let rot = rng.below(8) as i64;
        let refl = rng.below(2) == 1;
        let r = a_group.rotation(rot).unwrap();
        if refl {
            a_group.mul(&r, &a_group.reflection().unwrap()).unwrap()
        } else {
            r
        }
    };
    let mut word = GogWord::element(edge.a, rand_a(rng));
    for _ in 0..rng.below(max_traversals + 1) {
        word.steps.push((edge.edge, random_b_element(edge, rng)));
        word.steps.push((ebar, rand_a(rng)));
    }
    word
}

/// Inserts a pinch `e · α_e(x) · ē` at a random position, multiplying a
/// defining relator into the word.
fn insert_pinch(edge: &EdgeGog, w: &GogWord, rng: &mut Rng) -> GogWord {
    let gog = &edge.gog;
    let mut e = if rng.below(2) == 0 {
        edge.edge
    } else {
        gog.graph().bar(edge.edge)
    };
    // a word with no traversals only offers pinch spots at its base
    if w.steps.is_empty() && gog.graph().origin(e) != w.base {
        e = gog.graph().bar(e);
    }
    let edge_group = gog.edge_group(e);
    let elements = edge_group.elements().unwrap();
    let x = elements[rng.below(elements.len())];
    let image = gog.mono(e).apply(&x).unwrap();
    let back = gog.mono(gog.graph().bar(e)).apply(&x).unwrap();
    // positions where o(e) matches the word path
    let mut at = w.base;
    let mut positions = Vec::new();
    if at == gog.graph().origin(e) {
        positions.push(0usize);
    }
    for (i, (f, _)) in w.steps.iter().enumerate() {
        at = gog.graph().terminus(*f);
        if at == gog.graph().origin(e) {
            positions.push(i + 1);
        }
    }
    let pos = positions[rng.below(positions.len())];
    let mut out = w.clone();
    let t = gog.graph().terminus(e);
    out.steps.insert(pos, (gog.graph().bar(e), gog.vertex_group(gog.graph().origin(e)).identity()));
    out.steps.insert(pos, (e, image));
    // cancel the inserted relator value so the group element is unchanged:
    // e α_e(x) ē = α_ē(x), so divide it back out of the preceding element
    let prev_group = gog.vertex_group(gog.graph().origin(e));
    let corr = prev_group.inv(&back).unwrap();
    if pos == 0 {
        out.head = prev_group.mul(&out.head, &corr).unwrap();
        // re-multiply after the pinch to keep the element equal
        let _ = t;
    } else {
        let (_, g) = &mut out.steps[pos - 1];
        *g = prev_group.mul(g, &corr).unwrap();
    }
    out
}

#[test]
fn pinch_insertion_preserves_normal_forms() {
    let edge = build_edge_gog(4, 12).unwrap();
    let gog = &edge.gog;
    let mut rng = Rng(0x5eed);
    for round in 0..10_000 {
        let w = random_word(&edge, &mut rng, 3);
        let w2 = insert_pinch(&edge, &w, &mut rng);
        let nf1 = normal_form(gog, &w).unwrap();
        let nf2 = normal_form(gog, &w2).unwrap();
        assert_eq!(nf1, nf2, "round {round}: {w:?} vs {w2:?}");
    }
}

#[test]
fn reduction_is_confluent() {
    // reduce rightmost-first in the test and compare against the library's
    // leftmost strategy through the normal form
    let edge = build_edge_gog(4, 12).unwrap();
    let gog = &edge.gog;
    let rightmost_reduce = |w: &GogWord| -> GogWord {
        let mut head = w.head;
        let mut steps = w.steps.clone();
        'outer: loop {
            for i in (0..steps.len().saturating_sub(1)).rev() {
                let (e, g) = steps[i];
                let (f, _) = steps[i + 1];
                if gog.graph().bar(e) == f && gog.mono(e).in_image(&g) {
                    let x = gog.mono(e).preimage(&g).unwrap();
                    let merged = gog.mono(gog.graph().bar(e)).apply(&x).unwrap();
                    let (_, g_after) = steps[i + 1];
                    let at = gog.graph().origin(e);
                    let gv = gog.vertex_group(at);
                    let merged_after = gv.mul(&merged, &g_after).unwrap();
                    if i == 0 {
                        head = gv.mul(&head, &merged_after).unwrap();
                    } else {
                        let (_, prev) = steps[i - 1];
                        steps[i - 1].1 = gv.mul(&prev, &merged_after).unwrap();
                    }
                    steps.drain(i..=i + 1);
                    continue 'outer;
                }
            }
            break;
        }
        GogWord {
            base: w.base,
            head,
            steps,
        }
    };
    let mut rng = Rng(0xc0ffee);
    for _ in 0..2_000 {
        let w = insert_pinch(&edge, &random_word(&edge, &mut rng, 3), &mut rng);
        let left = reduce_word(gog, &w).unwrap();
        let right = rightmost_reduce(&w);
        assert_eq!(
            normal_form(gog, &left).unwrap(),
            normal_form(gog, &right).unwrap()
        );
    }
}

#[test]
fn distinct_normal_forms_for_distinct_cosets() {
    // words landing in different transversal cosets stay separated
    let edge = build_edge_gog(4, 12).unwrap();
    let gog = &edge.gog;
    let mut rng = Rng(42);
    let mut seen = std::collections::BTreeMap::new();
    for _ in 0..2_000 {
        let w = random_word(&edge, &mut rng, 2);
        let nf = normal_form(gog, &w).unwrap();
        // re-normalizing the normal form is a fixpoint
        let again = normal_form(gog, &nf.as_word(gog)).unwrap();
        assert_eq!(nf, again);
        seen.insert(nf, ());
    }
    assert!(seen.len() > 500, "sampling should hit many distinct elements");
}

#[test]
fn action_preserves_distances() {
    let edge = build_edge_gog(4, 12).unwrap();
    let gog = &edge.gog;
    let ball = tree::build_ball(gog, edge.a, 3, 4, &[]).unwrap();
    let mut rng = Rng(7);
    let mut sampled = 0;
    while sampled < 1_000 {
        let g = random_word(&edge, &mut rng, 2);
        let i = rng.below(ball.len());
        let j = rng.below(ball.len());
        let gi = ball.act(gog, &g, i).unwrap();
        let gj = ball.act(gog, &g, j).unwrap();
        assert_eq!(ball.dist(i, j), label_dist(&gi, &gj));
        sampled += 1;
    }
}

#[test]
fn ball_tree_invariant_across_corpus() {
    let edge = build_edge_gog(4, 12).unwrap();
    for radius in 0..=4usize {
        for budget in [2usize, 5, 8] {
            let ball = tree::build_ball(&edge.gog, edge.a, radius, budget, &[]).unwrap();
            let edges = ball.vertices().filter(|&v| ball.parent(v).is_some()).count();
            assert_eq!(edges + 1, ball.len());
        }
    }
}
