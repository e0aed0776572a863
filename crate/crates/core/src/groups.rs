//! Exact arithmetic for the concrete vertex and edge groups: dihedral
//! groups `Z_m ⋊ Z_2`, locally finite dihedral groups `Z[1/|n|]/mZ ⋊ Z_2`,
//! and arbitrary finite groups given by a multiplication table.
//!
//! Every element has a unique canonical form and all operations are pure.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::error::Error;

/// Default cap on subgroup closure size. Exceeding it is an error, never
/// a silent truncation.
pub const DEFAULT_CLOSURE_BOUND: usize = 1_000_000;

/// The three supported group kinds.
///
/// `Dihedral { m }` is `Z_m ⋊ Z_2` of order `2m` with the reflection
/// inverting rotations. `Lfd { n, m }` is `Z[1/|n|]/mZ ⋊ Z_2`: infinite,
/// torsion and locally finite. `Table` is a finite group given by an
/// index table, used as a generic fallback for property suites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupKind {
    Dihedral { m: u64 },
    Lfd { n: i64, m: u64 },
    Table { mult: Vec<Vec<usize>> },
}

/// A group descriptor plus optional generator names used for rendering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    kind: GroupKind,
    named: Vec<(String, GroupElement)>,
}

/// Canonical element of one of the supported groups.
///
/// Lfd rotations are `num / |n|^exp` with `0 <= num < m * |n|^exp` and
/// `|n| ∤ num` unless `exp == 0`. The derived ordering is the enumeration
/// order fixed for transversals: `(exp, num, refl)` ascending.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupElement {
    Dihedral { rot: u64, refl: bool },
    Lfd { exp: u32, num: i128, refl: bool },
    Table { index: usize },
}

impl Group {
    pub fn dihedral(m: u64) -> Self {
        Group {
            kind: GroupKind::Dihedral { m },
            named: Vec::new(),
        }
    }

    pub fn lfd(n: i64, m: u64) -> Self {
        Group {
            kind: GroupKind::Lfd { n, m },
            named: Vec::new(),
        }
    }

    pub fn table(mult: Vec<Vec<usize>>) -> Self {
        Group {
            kind: GroupKind::Table { mult },
            named: Vec::new(),
        }
    }

    pub fn with_names(mut self, named: Vec<(String, GroupElement)>) -> Self {
        self.named = named;
        self
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn named_generators(&self) -> &[(String, GroupElement)] {
        &self.named
    }

    /// Checks descriptor invariants: moduli, table axioms, named elements.
    pub fn validate(&self) -> Result<(), Error> {
        match &self.kind {
            GroupKind::Dihedral { m } => {
                if *m == 0 {
                    return Err(Error::InvalidDescriptor("dihedral modulus must be positive".into()));
                }
            }
            GroupKind::Lfd { n, m } => {
                if n.unsigned_abs() < 2 {
                    return Err(Error::InvalidDescriptor("lfd base |n| must exceed 1".into()));
                }
                if *m == 0 {
                    return Err(Error::InvalidDescriptor("lfd modulus must be positive".into()));
                }
            }
            GroupKind::Table { mult } => {
                let order = mult.len();
                if order == 0 {
                    return Err(Error::InvalidDescriptor("empty multiplication table".into()));
                }
                for row in mult {
                    if row.len() != order || row.iter().any(|&x| x >= order) {
                        return Err(Error::InvalidDescriptor("malformed multiplication table".into()));
                    }
                }
                // identity
                let id = (0..order).find(|&e| {
                    (0..order).all(|x| mult[e][x] == x && mult[x][e] == x)
                });
                let id = match id {
                    Some(e) => e,
                    None => {
                        return Err(Error::InvalidDescriptor("table has no identity".into()));
                    }
                };
                // inverses
                for x in 0..order {
                    if !(0..order).any(|y| mult[x][y] == id && mult[y][x] == id) {
                        return Err(Error::InvalidDescriptor(format!("table element {x} has no inverse")));
                    }
                }
                // associativity
                for a in 0..order {
                    for b in 0..order {
                        for c in 0..order {
                            if mult[mult[a][b]][c] != mult[a][mult[b][c]] {
                                return Err(Error::InvalidDescriptor(format!(
                                    "table not associative at ({a},{b},{c})"
                                )));
                            }
                        }
                    }
                }
            }
        }
        for (name, g) in &self.named {
            if !self.contains(g) {
                return Err(Error::InvalidDescriptor(format!(
                    "named generator {name} is not a canonical element"
                )));
            }
        }
        Ok(())
    }

    pub fn identity(&self) -> GroupElement {
        match &self.kind {
            GroupKind::Dihedral { .. } => GroupElement::Dihedral { rot: 0, refl: false },
            GroupKind::Lfd { .. } => GroupElement::Lfd { exp: 0, num: 0, refl: false },
            GroupKind::Table { mult } => {
                let order = mult.len();
                let e = (0..order)
                    .find(|&e| (0..order).all(|x| mult[e][x] == x && mult[x][e] == x))
                    .expect("validated table has an identity");
                GroupElement::Table { index: e }
            }
        }
    }

    /// True when `g` is a canonical element of this group.
    pub fn contains(&self, g: &GroupElement) -> bool {
        match (&self.kind, g) {
            (GroupKind::Dihedral { m }, GroupElement::Dihedral { rot, .. }) => rot < m,
            (GroupKind::Lfd { n, m }, GroupElement::Lfd { exp, num, .. }) => {
                let base = n.unsigned_abs() as i128;
                let modulus = (*m as i128) * base.pow(*exp);
                *num >= 0 && *num < modulus && (*exp == 0 || *num % base != 0)
            }
            (GroupKind::Table { mult }, GroupElement::Table { index }) => *index < mult.len(),
            _ => false,
        }
    }

    fn check(&self, g: &GroupElement) -> Result<(), Error> {
        if self.contains(g) {
            Ok(())
        } else {
            Err(Error::DescriptorMismatch)
        }
    }

    /// Canonical rotation element of value `k` (reduced mod `m`).
    pub fn rotation(&self, k: i64) -> Result<GroupElement, Error> {
        match &self.kind {
            GroupKind::Dihedral { m } => Ok(GroupElement::Dihedral {
                rot: k.rem_euclid(*m as i64) as u64,
                refl: false,
            }),
            GroupKind::Lfd { .. } => self.fraction(k as i128, 0, false),
            GroupKind::Table { .. } => Err(Error::DescriptorMismatch),
        }
    }

    pub fn reflection(&self) -> Result<GroupElement, Error> {
        match &self.kind {
            GroupKind::Dihedral { .. } => Ok(GroupElement::Dihedral { rot: 0, refl: true }),
            GroupKind::Lfd { .. } => Ok(GroupElement::Lfd { exp: 0, num: 0, refl: true }),
            GroupKind::Table { .. } => Err(Error::DescriptorMismatch),
        }
    }

    /// Canonical Lfd element `num / |n|^exp` (dihedral accepts `exp == 0`).
    pub fn fraction(&self, num: i128, exp: u32, refl: bool) -> Result<GroupElement, Error> {
        match &self.kind {
            GroupKind::Lfd { n, m } => {
                let base = n.unsigned_abs() as i128;
                let (num, exp) = lfd_canonical(num, exp, base, *m as i128);
                Ok(GroupElement::Lfd { exp, num, refl })
            }
            GroupKind::Dihedral { m } if exp == 0 => Ok(GroupElement::Dihedral {
                rot: (num.rem_euclid(*m as i128)) as u64,
                refl,
            }),
            _ => Err(Error::DescriptorMismatch),
        }
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement, Error> {
        self.check(a)?;
        self.check(b)?;
        match (&self.kind, a, b) {
            (
                GroupKind::Dihedral { m },
                GroupElement::Dihedral { rot: r1, refl: s1 },
                GroupElement::Dihedral { rot: r2, refl: s2 },
            ) => {
                let m = *m as i128;
                let r2 = if *s1 { -(*r2 as i128) } else { *r2 as i128 };
                let rot = (*r1 as i128 + r2).rem_euclid(m) as u64;
                Ok(GroupElement::Dihedral { rot, refl: s1 ^ s2 })
            }
            (
                GroupKind::Lfd { n, m },
                GroupElement::Lfd { exp: j1, num: a1, refl: s1 },
                GroupElement::Lfd { exp: j2, num: a2, refl: s2 },
            ) => {
                let base = n.unsigned_abs() as i128;
                let j = (*j1).max(*j2);
                let lift = |num: i128, exp: u32| -> i128 {
                    num.checked_mul(base.pow(j - exp)).expect("lfd numerator overflow")
                };
                let x = lift(*a1, *j1);
                let y = lift(*a2, *j2);
                let sum = if *s1 { x - y } else { x + y };
                let (num, exp) = lfd_canonical(sum, j, base, *m as i128);
                Ok(GroupElement::Lfd { exp, num, refl: s1 ^ s2 })
            }
            (GroupKind::Table { mult }, GroupElement::Table { index: x }, GroupElement::Table { index: y }) => {
                Ok(GroupElement::Table { index: mult[*x][*y] })
            }
            _ => Err(Error::DescriptorMismatch),
        }
    }

    pub fn inv(&self, g: &GroupElement) -> Result<GroupElement, Error> {
        self.check(g)?;
        match (&self.kind, g) {
            (GroupKind::Dihedral { m }, GroupElement::Dihedral { rot, refl }) => {
                if *refl {
                    Ok(*g)
                } else {
                    Ok(GroupElement::Dihedral {
                        rot: (*m - rot) % *m,
                        refl: false,
                    })
                }
            }
            (GroupKind::Lfd { n, m }, GroupElement::Lfd { exp, num, refl }) => {
                if *refl {
                    Ok(*g)
                } else {
                    let base = n.unsigned_abs() as i128;
                    let (num, exp) = lfd_canonical(-num, *exp, base, *m as i128);
                    Ok(GroupElement::Lfd { exp, num, refl: false })
                }
            }
            (GroupKind::Table { mult }, GroupElement::Table { index }) => {
                let id = match self.identity() {
                    GroupElement::Table { index } => index,
                    _ => unreachable!(),
                };
                let y = (0..mult.len())
                    .find(|&y| mult[*index][y] == id)
                    .expect("validated table has inverses");
                Ok(GroupElement::Table { index: y })
            }
            _ => Err(Error::DescriptorMismatch),
        }
    }

    /// Least `k >= 1` with `g^k = 1`. Always finite for the supported kinds.
    pub fn order_of(&self, g: &GroupElement) -> Result<u128, Error> {
        self.check(g)?;
        match (&self.kind, g) {
            (GroupKind::Dihedral { m }, GroupElement::Dihedral { rot, refl }) => {
                if *refl {
                    Ok(2)
                } else if *rot == 0 {
                    Ok(1)
                } else {
                    let m = *m as u128;
                    Ok(m / gcd_u128(*rot as u128, m))
                }
            }
            (GroupKind::Lfd { n, m }, GroupElement::Lfd { exp, num, refl }) => {
                if *refl {
                    Ok(2)
                } else if *num == 0 {
                    Ok(1)
                } else {
                    let base = n.unsigned_abs() as u128;
                    let modulus = (*m as u128) * base.pow(*exp);
                    Ok(modulus / gcd_u128(*num as u128, modulus))
                }
            }
            (GroupKind::Table { .. }, _) => {
                let id = self.identity();
                let mut acc = *g;
                let mut k: u128 = 1;
                while acc != id {
                    acc = self.mul(&acc, g)?;
                    k += 1;
                }
                Ok(k)
            }
            _ => Err(Error::DescriptorMismatch),
        }
    }

    /// Total order of the group; `None` for the infinite Lfd kind.
    pub fn order(&self) -> Option<u128> {
        match &self.kind {
            GroupKind::Dihedral { m } => Some(2 * *m as u128),
            GroupKind::Lfd { .. } => None,
            GroupKind::Table { mult } => Some(mult.len() as u128),
        }
    }

    /// Every supported kind is torsion: each element has finite order.
    pub fn is_torsion(&self) -> bool {
        true
    }

    /// Canonical enumeration of the whole group. Infinite for Lfd; the
    /// order is the fixed transversal order `(exp, num, refl)`.
    pub fn enumerate(&self) -> ElementStream<'_> {
        ElementStream { group: self, cursor: 0 }
    }

    /// All elements of a finite group in canonical order.
    pub fn elements(&self) -> Option<Vec<GroupElement>> {
        let order = self.order()? as usize;
        Some(self.enumerate().take(order).collect())
    }

    /// Renders an element using the named generators when possible,
    /// falling back to raw rotation/reflection notation.
    pub fn render(&self, g: &GroupElement) -> String {
        match g {
            GroupElement::Dihedral { rot, refl } => {
                let rot_name = self.rotation_name();
                render_semidirect(*rot as i128, 1, &rot_name, *refl, &self.reflection_name())
            }
            GroupElement::Lfd { exp, num, refl } => {
                if let GroupKind::Lfd { n, m } = &self.kind {
                    // phi_{exp+1} is the canonical generator at depth `exp`;
                    // for negative n the realized rotation is n^{-exp}.
                    if let Some(name) = self.lfd_level_name(*exp) {
                        let base = n.unsigned_abs() as i128;
                        let modulus = (*m as i128) * base.pow(*exp);
                        let mut power = *num;
                        if *n < 0 && *exp % 2 == 1 {
                            power = (-power).rem_euclid(modulus);
                        }
                        return render_semidirect(power, 1, &name, *refl, &self.reflection_name());
                    }
                }
                let den = match &self.kind {
                    GroupKind::Lfd { n, .. } => (n.unsigned_abs() as i128).pow(*exp),
                    _ => 1,
                };
                render_semidirect(*num, den, "r", *refl, "s")
            }
            GroupElement::Table { index } => {
                for (name, el) in &self.named {
                    if el == g {
                        return name.clone();
                    }
                }
                format!("g{index}")
            }
        }
    }

    fn rotation_name(&self) -> String {
        for (name, el) in &self.named {
            if let GroupElement::Dihedral { rot: 1, refl: false } = el {
                return name.clone();
            }
        }
        "r".to_string()
    }

    fn reflection_name(&self) -> String {
        for (name, el) in &self.named {
            match el {
                GroupElement::Dihedral { rot: 0, refl: true }
                | GroupElement::Lfd { exp: 0, num: 0, refl: true } => return name.clone(),
                _ => {}
            }
        }
        "s".to_string()
    }

    fn lfd_level_name(&self, exp: u32) -> Option<String> {
        for (name, el) in &self.named {
            if let GroupElement::Lfd { exp: e, num: 1, refl: false } = el {
                if *e == exp {
                    return Some(name.clone());
                }
            }
        }
        // fall back to the phi:<k> convention when a phi:1 name exists
        if self.named.iter().any(|(n, _)| n.starts_with("phi:")) {
            Some(format!("phi:{}", exp + 1))
        } else {
            None
        }
    }
}

fn render_semidirect(power: i128, den: i128, rot_name: &str, refl: bool, refl_name: &str) -> String {
    let rot_part = if power == 0 {
        String::new()
    } else if den == 1 {
        if power == 1 {
            rot_name.to_string()
        } else {
            format!("{rot_name}^{power}")
        }
    } else {
        format!("{rot_name}^({power}/{den})")
    };
    match (rot_part.is_empty(), refl) {
        (true, false) => "1".to_string(),
        (true, true) => refl_name.to_string(),
        (false, false) => rot_part,
        (false, true) => format!("{rot_part}*{refl_name}"),
    }
}

/// Reduces `num / base^exp` to the canonical residue: value in `[0, m)`,
/// denominator the minimal power of `base`.
fn lfd_canonical(num: i128, exp: u32, base: i128, m: i128) -> (i128, u32) {
    let mut exp = exp;
    let modulus = m.checked_mul(base.pow(exp)).expect("lfd modulus overflow");
    let mut num = num.rem_euclid(modulus);
    while exp > 0 && num % base == 0 {
        num /= base;
        exp -= 1;
    }
    (num, exp)
}

fn gcd_u128(a: u128, b: u128) -> u128 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Deterministic enumeration of a group in canonical order.
pub struct ElementStream<'a> {
    group: &'a Group,
    cursor: u128,
}

impl Iterator for ElementStream<'_> {
    type Item = GroupElement;

    fn next(&mut self) -> Option<GroupElement> {
        match self.group.kind() {
            GroupKind::Dihedral { m } => {
                if self.cursor >= 2 * *m as u128 {
                    return None;
                }
                let rot = (self.cursor / 2) as u64;
                let refl = self.cursor % 2 == 1;
                self.cursor += 1;
                Some(GroupElement::Dihedral { rot, refl })
            }
            GroupKind::Table { mult } => {
                if self.cursor >= mult.len() as u128 {
                    return None;
                }
                let index = self.cursor as usize;
                self.cursor += 1;
                Some(GroupElement::Table { index })
            }
            GroupKind::Lfd { n, m } => {
                let base = n.unsigned_abs() as u128;
                let m = *m as u128;
                // block j holds the canonical numerators of denominator |n|^j
                let mut c = self.cursor;
                let mut j: u32 = 0;
                loop {
                    let total = m * base.pow(j);
                    let in_block = if j == 0 { total } else { total - total / base };
                    if c < 2 * in_block {
                        let refl = c % 2 == 1;
                        let mut k = c / 2;
                        let mut num: u128 = 0;
                        loop {
                            if j == 0 || num % base != 0 {
                                if k == 0 {
                                    break;
                                }
                                k -= 1;
                            }
                            num += 1;
                        }
                        self.cursor += 1;
                        return Some(GroupElement::Lfd {
                            exp: j,
                            num: num as i128,
                            refl,
                        });
                    }
                    c -= 2 * in_block;
                    j += 1;
                }
            }
        }
    }
}

/// A finite subgroup held as its full closure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgroup {
    ambient: Group,
    generators: Vec<GroupElement>,
    closure: BTreeSet<GroupElement>,
}

impl Subgroup {
    /// Exact closure of `gens` under product and inverse, failing loudly
    /// past `bound`.
    pub fn generate(ambient: &Group, gens: &[GroupElement], bound: usize) -> Result<Self, Error> {
        for g in gens {
            ambient.check(g)?;
        }
        let mut closure = BTreeSet::new();
        closure.insert(ambient.identity());
        let mut frontier: Vec<GroupElement> = vec![ambient.identity()];
        let mut gens_full: Vec<GroupElement> = Vec::new();
        for g in gens {
            gens_full.push(*g);
            gens_full.push(ambient.inv(g)?);
        }
        while let Some(x) = frontier.pop() {
            for g in &gens_full {
                let y = ambient.mul(&x, g)?;
                if closure.insert(y) {
                    if closure.len() > bound {
                        return Err(Error::ClosureExceedsBound { bound });
                    }
                    frontier.push(y);
                }
            }
        }
        Ok(Subgroup {
            ambient: ambient.clone(),
            generators: gens.to_vec(),
            closure,
        })
    }

    pub fn trivial(ambient: &Group) -> Self {
        let mut closure = BTreeSet::new();
        closure.insert(ambient.identity());
        Subgroup {
            ambient: ambient.clone(),
            generators: Vec::new(),
            closure,
        }
    }

    /// Subgroup from an explicit closed element set (checked).
    pub fn from_closure(ambient: &Group, elements: BTreeSet<GroupElement>) -> Result<Self, Error> {
        for g in &elements {
            ambient.check(g)?;
        }
        let sub = Subgroup {
            ambient: ambient.clone(),
            generators: elements.iter().copied().collect(),
            closure: elements,
        };
        if !sub.closure.contains(&sub.ambient.identity()) {
            return Err(Error::InvalidDescriptor("closure misses identity".into()));
        }
        for a in &sub.closure {
            for b in &sub.closure {
                if !sub.closure.contains(&sub.ambient.mul(a, b)?) {
                    return Err(Error::InvalidDescriptor("set not closed under product".into()));
                }
            }
        }
        Ok(sub)
    }

    pub fn ambient(&self) -> &Group {
        &self.ambient
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn order(&self) -> usize {
        self.closure.len()
    }

    pub fn closure(&self) -> &BTreeSet<GroupElement> {
        &self.closure
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.closure.contains(g)
    }

    /// Left-coset equality: `g1 H = g2 H` iff `g1^{-1} g2 ∈ H`.
    pub fn coset_equal(&self, g1: &GroupElement, g2: &GroupElement) -> Result<bool, Error> {
        let d = self.ambient.mul(&self.ambient.inv(g1)?, g2)?;
        Ok(self.closure.contains(&d))
    }

    /// Canonical representative of the left coset `g H`: the minimum of the
    /// coset in enumeration order.
    pub fn coset_rep(&self, g: &GroupElement) -> Result<GroupElement, Error> {
        let mut best: Option<GroupElement> = None;
        for h in &self.closure {
            let x = self.ambient.mul(g, h)?;
            if best.is_none() || x < best.unwrap() {
                best = Some(x);
            }
        }
        Ok(best.expect("closure is nonempty"))
    }

    /// Deterministic enumerator of left-coset representatives, identity
    /// coset first. Finite ambient groups terminate; Lfd yields an
    /// infinite stream in `(exp, num, refl)` order.
    pub fn transversal(&self) -> Transversal<'_> {
        Transversal {
            sub: self,
            stream: self.ambient.enumerate(),
            covered: BTreeSet::new(),
        }
    }
}

/// Coset-representative stream; see [`Subgroup::transversal`].
pub struct Transversal<'a> {
    sub: &'a Subgroup,
    stream: ElementStream<'a>,
    covered: BTreeSet<GroupElement>,
}

impl Iterator for Transversal<'_> {
    type Item = GroupElement;

    fn next(&mut self) -> Option<GroupElement> {
        for g in self.stream.by_ref() {
            if self.covered.contains(&g) {
                continue;
            }
            for h in &self.sub.closure {
                let x = self.sub.ambient.mul(&g, h).expect("same ambient");
                self.covered.insert(x);
            }
            return Some(g);
        }
        None
    }
}

/// Outcome of a normality test, with an explicit conjugation witness on
/// failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Normality {
    Normal,
    NotNormal(NormalityWitness),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalityWitness {
    pub conjugator: GroupElement,
    pub element: GroupElement,
    pub conjugate: GroupElement,
}

impl Normality {
    pub fn is_normal(&self) -> bool {
        matches!(self, Normality::Normal)
    }
}

/// Decides `R ⊴ G`.
///
/// Finite ambient: exhaustive conjugation. Lfd ambient: `R` is normal iff
/// it contains no reflection — rotation subgroups are inverted or fixed by
/// conjugation, while a reflection `(a,1)` has the infinite conjugate
/// family `(a+2t,1)`, which cannot stay inside a finite subgroup.
pub fn is_normal_in(sub: &Subgroup, ambient: &Group) -> Result<Normality, Error> {
    if sub.ambient() != ambient {
        return Err(Error::DescriptorMismatch);
    }
    match ambient.kind() {
        GroupKind::Dihedral { .. } | GroupKind::Table { .. } => {
            for g in ambient.elements().expect("finite kind") {
                let g_inv = ambient.inv(&g)?;
                for r in sub.closure() {
                    let c = ambient.mul(&ambient.mul(&g, r)?, &g_inv)?;
                    if !sub.contains(&c) {
                        return Ok(Normality::NotNormal(NormalityWitness {
                            conjugator: g,
                            element: *r,
                            conjugate: c,
                        }));
                    }
                }
            }
            Ok(Normality::Normal)
        }
        GroupKind::Lfd { .. } => {
            let refl = sub.closure().iter().find(|g| matches!(g, GroupElement::Lfd { refl: true, .. }));
            match refl {
                None => Ok(Normality::Normal),
                Some(r) => {
                    // first rotation conjugator that escapes the closure
                    for t in ambient.enumerate() {
                        if matches!(t, GroupElement::Lfd { refl: true, .. }) {
                            continue;
                        }
                        let c = ambient.mul(&ambient.mul(&t, r)?, &ambient.inv(&t)?)?;
                        if !sub.contains(&c) {
                            return Ok(Normality::NotNormal(NormalityWitness {
                                conjugator: t,
                                element: *r,
                                conjugate: c,
                            }));
                        }
                    }
                    unreachable!("a finite subgroup with a reflection always has an escaping conjugate")
                }
            }
        }
    }
}

/// Normal closure of `sub` in a finite ambient group.
pub fn normal_closure(sub: &Subgroup, ambient: &Group, bound: usize) -> Result<Subgroup, Error> {
    match ambient.kind() {
        GroupKind::Lfd { .. } => {
            // normal iff reflection-free; a reflection forces the infinite
            // rotation-extended closure, which is reported, not built
            if sub.closure().iter().any(|g| matches!(g, GroupElement::Lfd { refl: true, .. })) {
                Err(Error::ClosureExceedsBound { bound })
            } else {
                Ok(sub.clone())
            }
        }
        _ => {
            let mut gens: Vec<GroupElement> = sub.generators().to_vec();
            let all = ambient.elements().expect("finite kind");
            let mut closure = Subgroup::generate(ambient, &gens, bound)?;
            loop {
                let mut grew = false;
                for g in &all {
                    let g_inv = ambient.inv(g)?;
                    for r in closure.closure().clone() {
                        let c = ambient.mul(&ambient.mul(g, &r)?, &g_inv)?;
                        if !closure.contains(&c) {
                            gens.push(c);
                            closure = Subgroup::generate(ambient, &gens, bound)?;
                            grew = true;
                        }
                    }
                }
                if !grew {
                    return Ok(closure);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d8() -> Group {
        Group::dihedral(8)
    }

    fn lfd36() -> Group {
        Group::lfd(3, 6)
    }

    fn el(g: &Group, rot: i64, refl: bool) -> GroupElement {
        let r = g.rotation(rot).unwrap();
        if refl {
            g.mul(&r, &g.reflection().unwrap()).unwrap()
        } else {
            r
        }
    }

    #[test]
    fn dihedral_reflection_relation() {
        // iota * psi = psi^{-1} * iota
        let g = d8();
        let iota = g.reflection().unwrap();
        let psi = g.rotation(1).unwrap();
        let lhs = g.mul(&iota, &psi).unwrap();
        assert_eq!(lhs, GroupElement::Dihedral { rot: 7, refl: true });
        let rhs = g.mul(&g.inv(&psi).unwrap(), &iota).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn identity_is_neutral() {
        let g = d8();
        let x = el(&g, 5, true);
        assert_eq!(g.mul(&g.identity(), &x).unwrap(), x);
        assert_eq!(g.mul(&x, &g.identity()).unwrap(), x);
    }

    #[test]
    fn lfd_cube_of_third() {
        // (1/3)^3 = 1 in Z[1/3]/6Z
        let g = lfd36();
        let phi2 = g.fraction(1, 1, false).unwrap();
        let sq = g.mul(&phi2, &phi2).unwrap();
        let cube = g.mul(&sq, &phi2).unwrap();
        assert_eq!(cube, g.rotation(1).unwrap());
    }

    #[test]
    fn orders() {
        let g = d8();
        assert_eq!(g.order_of(&g.rotation(1).unwrap()).unwrap(), 8);
        assert_eq!(g.order_of(&g.identity()).unwrap(), 1);
        let l = lfd36();
        assert_eq!(l.order_of(&l.fraction(1, 1, false).unwrap()).unwrap(), 18);
    }

    #[test]
    fn closure_sizes() {
        let l = lfd36();
        let c = Subgroup::generate(
            &l,
            &[l.rotation(3).unwrap(), l.reflection().unwrap()],
            DEFAULT_CLOSURE_BOUND,
        )
        .unwrap();
        assert_eq!(c.order(), 4);
        let trivial = Subgroup::generate(&l, &[], DEFAULT_CLOSURE_BOUND).unwrap();
        assert_eq!(trivial.order(), 1);
        let b12 = Subgroup::generate(
            &l,
            &[l.rotation(1).unwrap(), l.reflection().unwrap()],
            DEFAULT_CLOSURE_BOUND,
        )
        .unwrap();
        assert_eq!(b12.order(), 12);
    }

    #[test]
    fn closure_bound_is_loud() {
        let l = lfd36();
        let err = Subgroup::generate(&l, &[l.rotation(1).unwrap()], 3).unwrap_err();
        assert!(matches!(err, Error::ClosureExceedsBound { bound: 3 }));
    }

    #[test]
    fn membership_and_cosets() {
        let l = lfd36();
        let h = Subgroup::generate(
            &l,
            &[l.rotation(1).unwrap(), l.reflection().unwrap()],
            DEFAULT_CLOSURE_BOUND,
        )
        .unwrap();
        let outside = l.fraction(2, 2, false).unwrap(); // 2/9
        assert!(!h.contains(&outside));
        assert!(h.contains(&l.identity()));

        let g = d8();
        let c = Subgroup::generate(&g, &[g.rotation(4).unwrap(), g.reflection().unwrap()], 100).unwrap();
        let psi = g.rotation(1).unwrap();
        for x in c.closure() {
            let psix = g.mul(&psi, x).unwrap();
            assert!(c.coset_equal(&psi, &psix).unwrap());
        }
    }

    #[test]
    fn dihedral_transversal() {
        let g = d8();
        let c = Subgroup::generate(&g, &[g.rotation(4).unwrap(), g.reflection().unwrap()], 100).unwrap();
        let reps: Vec<_> = c.transversal().collect();
        let expect: Vec<_> = (0..4).map(|k| g.rotation(k).unwrap()).collect();
        assert_eq!(reps, expect);
    }

    #[test]
    fn whole_group_transversal_is_identity() {
        let g = d8();
        let all = Subgroup::generate(&g, &[g.rotation(1).unwrap(), g.reflection().unwrap()], 100).unwrap();
        let reps: Vec<_> = all.transversal().collect();
        assert_eq!(reps, vec![g.identity()]);
    }

    #[test]
    fn lfd_transversal_stream() {
        let l = lfd36();
        let h = Subgroup::generate(
            &l,
            &[l.rotation(1).unwrap(), l.reflection().unwrap()],
            DEFAULT_CLOSURE_BOUND,
        )
        .unwrap();
        let reps: Vec<_> = h.transversal().take(6).collect();
        assert_eq!(reps[0], l.identity());
        for (i, a) in reps.iter().enumerate() {
            for b in reps.iter().skip(i + 1) {
                assert!(!h.coset_equal(a, b).unwrap());
            }
        }
        // fractions never repeat mod 1: all reps have distinct canonical values
        let values: BTreeSet<_> = reps.iter().map(|r| (*r, 0)).collect();
        assert_eq!(values.len(), reps.len());
    }

    #[test]
    fn normality_decisions() {
        let g = d8();
        let r = Subgroup::generate(&g, &[g.rotation(2).unwrap()], 100).unwrap();
        assert!(is_normal_in(&r, &g).unwrap().is_normal());
        let t = Subgroup::trivial(&g);
        assert!(is_normal_in(&t, &g).unwrap().is_normal());

        let l = lfd36();
        let b = Subgroup::generate(
            &l,
            &[l.rotation(1).unwrap(), l.reflection().unwrap()],
            DEFAULT_CLOSURE_BOUND,
        )
        .unwrap();
        match is_normal_in(&b, &l).unwrap() {
            Normality::NotNormal(w) => {
                assert_eq!(w.conjugator, l.fraction(1, 1, false).unwrap());
                assert_eq!(w.element, l.reflection().unwrap());
                assert_eq!(w.conjugate, l.fraction(2, 1, true).unwrap());
            }
            Normality::Normal => panic!("reflection subgroup must not be normal in lfd"),
        }
    }

    #[test]
    fn normal_closure_in_dihedral() {
        let g = d8();
        let r = Subgroup::generate(&g, &[g.rotation(2).unwrap(), g.reflection().unwrap()], 100).unwrap();
        let nc = normal_closure(&r, &g, 1000).unwrap();
        // conjugating the reflection by psi lands in the other reflection class
        assert!(nc.order() > r.order() || is_normal_in(&r, &g).unwrap().is_normal());
    }

    #[test]
    fn order_equals_cyclic_closure_size() {
        let l = lfd36();
        for g in [
            l.rotation(2).unwrap(),
            l.fraction(1, 1, false).unwrap(),
            l.fraction(5, 2, false).unwrap(),
            l.fraction(2, 1, true).unwrap(),
        ] {
            let cyc = Subgroup::generate(&l, &[g], DEFAULT_CLOSURE_BOUND).unwrap();
            assert_eq!(l.order_of(&g).unwrap(), cyc.order() as u128);
        }
    }

    #[test]
    fn table_group_validation() {
        // Z_3
        let z3 = Group::table(vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]]);
        z3.validate().unwrap();
        assert_eq!(z3.order(), Some(3));
        assert_eq!(z3.order_of(&GroupElement::Table { index: 1 }).unwrap(), 3);
        // broken associativity / identity
        let bad = Group::table(vec![vec![0, 1], vec![1, 1]]);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn lfd_canonical_form_invariants() {
        let l = lfd36();
        for num in 0..60i128 {
            for exp in 0..3u32 {
                let g = l.fraction(num, exp, false).unwrap();
                assert!(l.contains(&g), "{g:?} not canonical");
            }
        }
    }

    #[test]
    fn transversal_counts_finite() {
        let g = d8();
        for gens in [
            vec![g.rotation(2).unwrap()],
            vec![g.rotation(4).unwrap(), g.reflection().unwrap()],
            vec![g.reflection().unwrap()],
        ] {
            let h = Subgroup::generate(&g, &gens, 100).unwrap();
            let reps: Vec<_> = h.transversal().collect();
            assert_eq!(reps.len() * h.order(), 16);
        }
    }
}
