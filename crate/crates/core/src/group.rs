//! Finite groups given by Cayley tables, and their subgroups.
//!
//! Elements are plain indices `0..order` with `0` the identity. The Cayley
//! table is the single source of truth, so every identity about cosets and
//! h-functions can be checked in exact integer arithmetic.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Orders up to this bound get an exhaustive associativity check.
pub const EXHAUSTIVE_ASSOCIATIVITY_LIMIT: usize = 256;

/// A validated finite group.
#[derive(Clone, PartialEq, Eq)]
pub struct Group {
    order: usize,
    table: Vec<usize>,
    inverse: Vec<usize>,
    labels: Vec<String>,
    generators: Option<Vec<usize>>,
}

impl fmt::Debug for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Group")
            .field("order", &self.order)
            .field("labels", &self.labels)
            .finish()
    }
}

/// Builds and validates a group from a row-major Cayley table.
///
/// Row `i`, column `j` holds the index of `g_i * g_j`. Index 0 must be the
/// identity.
pub fn build_group(table: Vec<Vec<usize>>, labels: Vec<String>) -> Result<Group> {
    let order = table.len();
    if order == 0 {
        return Err(Error::EmptyTable);
    }
    for (row, entries) in table.iter().enumerate() {
        if entries.len() != order {
            return Err(Error::NotSquare { row, len: entries.len(), order });
        }
    }
    if labels.len() != order {
        return Err(Error::LabelCountMismatch { labels: labels.len(), order });
    }
    for (row, entries) in table.iter().enumerate() {
        for (col, &value) in entries.iter().enumerate() {
            if value >= order {
                return Err(Error::EntryOutOfRange { row, col, value, order });
            }
        }
    }
    let flat: Vec<usize> = table.into_iter().flatten().collect();
    let at = |a: usize, b: usize| flat[a * order + b];

    for i in 0..order {
        if at(0, i) != i {
            return Err(Error::NoIdentity { row: 0, col: i, value: at(0, i) });
        }
        if at(i, 0) != i {
            return Err(Error::NoIdentity { row: i, col: 0, value: at(i, 0) });
        }
    }

    let mut seen = vec![usize::MAX; order];
    for i in 0..order {
        for j in 0..order {
            let v = at(i, j);
            if seen[v] == i {
                return Err(Error::NotLatinSquare { axis: "row", index: i, value: v });
            }
            seen[v] = i;
        }
    }
    seen.fill(usize::MAX);
    for j in 0..order {
        for i in 0..order {
            let v = at(i, j);
            if seen[v] == j {
                return Err(Error::NotLatinSquare { axis: "column", index: j, value: v });
            }
            seen[v] = j;
        }
    }

    let mut inverse = vec![0; order];
    for (a, inv) in inverse.iter_mut().enumerate() {
        let right = (0..order).find(|&b| at(a, b) == 0);
        match right {
            Some(b) if at(b, a) == 0 => *inv = b,
            _ => return Err(Error::NoInverse { element: a }),
        }
    }

    if order <= EXHAUSTIVE_ASSOCIATIVITY_LIMIT {
        for a in 0..order {
            for b in 0..order {
                let ab = at(a, b);
                for c in 0..order {
                    if at(ab, c) != at(a, at(b, c)) {
                        return Err(Error::NotAssociative { a, b, c });
                    }
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6d61_636b_6579);
        for _ in 0..10 * order * order {
            let (a, b, c) = (
                rng.random_range(0..order),
                rng.random_range(0..order),
                rng.random_range(0..order),
            );
            if at(at(a, b), c) != at(a, at(b, c)) {
                return Err(Error::NotAssociative { a, b, c });
            }
        }
    }

    Ok(Group { order, table: flat, inverse, labels, generators: None })
}

impl Group {
    /// The trivial group `{e}`.
    pub fn trivial() -> Group {
        build_group(vec![vec![0]], vec!["e".into()]).expect("trivial group")
    }

    /// Builds a group from a product closure over `0..order` without
    /// materializing the nested table first.
    pub fn from_fn(
        order: usize,
        labels: Vec<String>,
        product: impl Fn(usize, usize) -> usize,
    ) -> Result<Group> {
        let table = (0..order)
            .map(|a| (0..order).map(|b| product(a, b)).collect())
            .collect();
        build_group(table, labels)
    }

    /// Records a generating set; used by the intertwiner oracle.
    pub fn with_generators(mut self, generators: Vec<usize>) -> Result<Group> {
        for &g in &generators {
            self.check_index(g)?;
        }
        let closure = closure_of(&self, &generators);
        if closure.len() != self.order {
            return Err(Error::BadParams(format!(
                "generators {generators:?} only generate {} of {} elements",
                closure.len(),
                self.order
            )));
        }
        self.generators = Some(generators);
        Ok(self)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        0
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b]
    }

    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    /// Product of a sequence of elements, left to right.
    pub fn mul_all(&self, elements: &[usize]) -> usize {
        elements.iter().fold(0, |acc, &g| self.mul(acc, g))
    }

    pub fn label(&self, a: usize) -> &str {
        &self.labels[a]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Index of the element with the given label.
    pub fn find(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Stored generating set, or every element when none was recorded.
    pub fn generating_set(&self) -> Vec<usize> {
        match &self.generators {
            Some(gens) => gens.clone(),
            None => (0..self.order).collect(),
        }
    }

    pub fn stored_generators(&self) -> Option<&[usize]> {
        self.generators.as_deref()
    }

    pub fn element_order(&self, a: usize) -> usize {
        let mut k = 1;
        let mut x = a;
        while x != 0 {
            x = self.mul(x, a);
            k += 1;
        }
        k
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order).all(|a| (0..self.order).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    /// Row-major Cayley table.
    pub fn table(&self) -> Vec<Vec<usize>> {
        self.table.chunks(self.order).map(|r| r.to_vec()).collect()
    }

    pub fn check_index(&self, a: usize) -> Result<()> {
        if a < self.order {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: a, order: self.order })
        }
    }
}

fn closure_of(group: &Group, generators: &[usize]) -> Vec<usize> {
    let mut member = vec![false; group.order()];
    member[0] = true;
    let mut elements = vec![0];
    let mut frontier = vec![0];
    while let Some(a) = frontier.pop() {
        for &g in generators {
            let b = group.mul(a, g);
            if !member[b] {
                member[b] = true;
                elements.push(b);
                frontier.push(b);
            }
        }
    }
    elements.sort_unstable();
    elements
}

/// A subgroup, stored as a sorted list of element indices of its parent.
#[derive(Clone)]
pub struct Subgroup {
    parent: Arc<Group>,
    elements: Vec<usize>,
    position: Vec<Option<usize>>,
}

impl fmt::Debug for Subgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Subgroup").field("elements", &self.elements).finish()
    }
}

impl PartialEq for Subgroup {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.parent, &other.parent) || self.parent == other.parent)
            && self.elements == other.elements
    }
}

/// Closure of `generators` under the parent's product.
pub fn build_subgroup(group: &Arc<Group>, generators: &[usize]) -> Result<Subgroup> {
    for &g in generators {
        group.check_index(g)?;
    }
    Ok(Subgroup::from_sorted(group.clone(), closure_of(group, generators)))
}

impl Subgroup {
    fn from_sorted(parent: Arc<Group>, elements: Vec<usize>) -> Subgroup {
        let mut position = vec![None; parent.order()];
        for (i, &e) in elements.iter().enumerate() {
            position[e] = Some(i);
        }
        Subgroup { parent, elements, position }
    }

    /// Validates an explicit element list as a subgroup.
    pub fn from_elements(parent: &Arc<Group>, elements: &[usize]) -> Result<Subgroup> {
        for &e in elements {
            parent.check_index(e)?;
        }
        let mut sorted = elements.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let sub = Subgroup::from_sorted(parent.clone(), sorted);
        let closed = sub.contains(0)
            && sub.elements.iter().all(|&a| {
                sub.contains(parent.inv(a))
                    && sub.elements.iter().all(|&b| sub.contains(parent.mul(a, b)))
            });
        if closed {
            Ok(sub)
        } else {
            Err(Error::NotASubgroup { elements: sub.elements })
        }
    }

    pub fn trivial(parent: &Arc<Group>) -> Subgroup {
        Subgroup::from_sorted(parent.clone(), vec![0])
    }

    pub fn whole(parent: &Arc<Group>) -> Subgroup {
        Subgroup::from_sorted(parent.clone(), (0..parent.order()).collect())
    }

    pub fn parent(&self) -> &Arc<Group> {
        &self.parent
    }

    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    #[inline]
    pub fn contains(&self, g: usize) -> bool {
        self.position.get(g).is_some_and(|p| p.is_some())
    }

    /// Position of `g` in the sorted element list.
    #[inline]
    pub fn position(&self, g: usize) -> Option<usize> {
        self.position.get(g).copied().flatten()
    }

    pub fn is_subgroup_of(&self, other: &Subgroup) -> bool {
        self.same_parent(other) && self.elements.iter().all(|&e| other.contains(e))
    }

    pub fn same_parent(&self, other: &Subgroup) -> bool {
        Arc::ptr_eq(&self.parent, &other.parent) || self.parent == other.parent
    }

    /// `c H c^{-1}` as a subgroup of the parent.
    pub fn conjugate(&self, c: usize) -> Subgroup {
        let g = &self.parent;
        let mut elements: Vec<usize> =
            self.elements.iter().map(|&h| g.mul_all(&[c, h, g.inv(c)])).collect();
        elements.sort_unstable();
        Subgroup::from_sorted(g.clone(), elements)
    }

    pub fn intersection(&self, other: &Subgroup) -> Subgroup {
        let elements = self.elements.iter().copied().filter(|&e| other.contains(e)).collect();
        Subgroup::from_sorted(self.parent.clone(), elements)
    }

    /// The subgroup as a standalone group, elements in sorted order.
    pub fn as_group(&self) -> Group {
        let g = &self.parent;
        let n = self.order();
        let table = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let p = g.mul(self.elements[i], self.elements[j]);
                        self.position(p).expect("subgroup closed")
                    })
                    .collect()
            })
            .collect();
        let labels = self.elements.iter().map(|&e| g.label(e).to_string()).collect();
        build_group(table, labels).expect("subgroup table is a group")
    }
}

/// A group built as `N ⋊ H`, with the embeddings of both factors.
///
/// Element `(n, h)` has index `n + |N| * h`; the left coset `(n, h)H` is
/// therefore represented by `(n, e)`, whose index is `n`.
#[derive(Clone, Debug)]
pub struct SemidirectProduct {
    pub group: Arc<Group>,
    pub normal: Subgroup,
    pub complement: Subgroup,
    /// Section of `G/H` choosing `s(nH) = n`, indexed by the `N` index.
    pub section: Vec<usize>,
}

/// `N ⋊ H` with product `(n, h)(n', h') = (n * φ_h(n'), h h')`.
///
/// `action[h]` is the permutation of `N`'s indices performed by `φ_h`.
pub fn semidirect_product(
    normal: &Group,
    complement: &Group,
    action: &[Vec<usize>],
) -> Result<SemidirectProduct> {
    let (nn, nh) = (normal.order(), complement.order());
    if action.len() != nh {
        return Err(Error::ShapeMismatch(format!(
            "{} action entries for a complement of order {nh}",
            action.len()
        )));
    }
    for (h, perm) in action.iter().enumerate() {
        if perm.len() != nn || perm.iter().any(|&v| v >= nn) {
            return Err(Error::NotAutomorphism { element: h });
        }
        let mut hit = vec![false; nn];
        for &v in perm {
            if std::mem::replace(&mut hit[v], true) {
                return Err(Error::NotAutomorphism { element: h });
            }
        }
        for a in 0..nn {
            for b in 0..nn {
                if perm[normal.mul(a, b)] != normal.mul(perm[a], perm[b]) {
                    return Err(Error::NotAutomorphism { element: h });
                }
            }
        }
    }
    for a in 0..nh {
        for b in 0..nh {
            let ab = complement.mul(a, b);
            if (0..nn).any(|n| action[ab][n] != action[a][action[b][n]]) {
                return Err(Error::ActionNotHomomorphism { a, b });
            }
        }
    }

    let order = nn * nh;
    let labels = (0..order)
        .map(|i| format!("({},{})", normal.label(i % nn), complement.label(i / nn)))
        .collect();
    let group = Group::from_fn(order, labels, |x, y| {
        let (n1, h1) = (x % nn, x / nn);
        let (n2, h2) = (y % nn, y / nn);
        normal.mul(n1, action[h1][n2]) + nn * complement.mul(h1, h2)
    })?;
    let group = Arc::new(group);
    let normal_sub =
        Subgroup::from_sorted(group.clone(), (0..nn).collect::<Vec<_>>());
    let complement_sub =
        Subgroup::from_sorted(group.clone(), (0..nh).map(|h| h * nn).collect());
    Ok(SemidirectProduct {
        group,
        normal: normal_sub,
        complement: complement_sub,
        section: (0..nn).collect(),
    })
}

/// `A × B` with element `(a, b)` at index `a + |A| * b`.
pub fn direct_product(a: &Group, b: &Group) -> Group {
    let na = a.order();
    let order = na * b.order();
    let labels = (0..order)
        .map(|i| format!("({},{})", a.label(i % na), b.label(i / na)))
        .collect();
    Group::from_fn(order, labels, |x, y| {
        a.mul(x % na, y % na) + na * b.mul(x / na, y / na)
    })
    .expect("direct product of groups is a group")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyclic(n: usize) -> Group {
        Group::from_fn(n, (0..n).map(|k| format!("g{k}")).collect(), |a, b| (a + b) % n).unwrap()
    }

    /// r^a f^b at index a + 3b.
    fn d3() -> Group {
        Group::from_fn(6, (0..6).map(|k| k.to_string()).collect(), |x, y| {
            let (a, b, c, d) = (x % 3, x / 3, y % 3, y / 3);
            let rot = if b == 0 { (a + c) % 3 } else { (a + 3 - c) % 3 };
            rot + 3 * ((b + d) % 2)
        })
        .unwrap()
    }

    #[test]
    fn trivial_group() {
        let g = build_group(vec![vec![0]], vec!["e".into()]).unwrap();
        assert_eq!(g.order(), 1);
        assert_eq!(g.inv(0), 0);
    }

    #[test]
    fn d3_relations() {
        let g = d3();
        assert_eq!(g.order(), 6);
        let (r, f) = (1, 3);
        assert_eq!(g.element_order(r), 3);
        assert_eq!(g.element_order(f), 2);
        // f r = r^2 f
        assert_eq!(g.mul(f, r), g.mul(g.mul(r, r), f));
        assert!(!g.is_abelian());
    }

    #[test]
    fn repeated_row_entry_is_rejected() {
        let table = vec![vec![0, 1, 2], vec![1, 1, 0], vec![2, 0, 1]];
        let labels = vec!["e".into(), "a".into(), "b".into()];
        assert!(matches!(
            build_group(table, labels),
            Err(Error::NotLatinSquare { axis: "row", index: 1, .. })
        ));
    }

    #[test]
    fn malformed_tables() {
        assert_eq!(build_group(vec![], vec![]), Err(Error::EmptyTable));
        assert!(matches!(
            build_group(vec![vec![0, 1], vec![1]], vec!["e".into(), "a".into()]),
            Err(Error::NotSquare { row: 1, .. })
        ));
        assert!(matches!(
            build_group(vec![vec![1, 0], vec![0, 1]], vec!["e".into(), "a".into()]),
            Err(Error::NoIdentity { .. })
        ));
        assert!(matches!(
            build_group(vec![vec![0, 5], vec![1, 0]], vec!["e".into(), "a".into()]),
            Err(Error::EntryOutOfRange { value: 5, .. })
        ));
    }

    #[test]
    fn non_associative_latin_square() {
        // A Latin square with identity that is not a group (order 5 loop).
        let table = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        let labels = (0..5).map(|i| i.to_string()).collect();
        assert!(matches!(build_group(table, labels), Err(Error::NotAssociative { .. })));
    }

    #[test]
    fn subgroup_closure() {
        let g = Arc::new(d3());
        assert_eq!(build_subgroup(&g, &[3]).unwrap().elements(), &[0, 3]);
        assert_eq!(build_subgroup(&g, &[]).unwrap().elements(), &[0]);
        let c4 = Arc::new(cyclic(4));
        assert_eq!(build_subgroup(&c4, &[2]).unwrap().elements(), &[0, 2]);
        assert_eq!(build_subgroup(&c4, &[1]).unwrap().order(), 4);
        assert!(build_subgroup(&c4, &[9]).is_err());
    }

    #[test]
    fn explicit_subgroup_validation() {
        let g = Arc::new(d3());
        assert!(Subgroup::from_elements(&g, &[0, 1, 2]).is_ok());
        assert!(matches!(
            Subgroup::from_elements(&g, &[0, 1]),
            Err(Error::NotASubgroup { .. })
        ));
    }

    #[test]
    fn semidirect_with_trivial_complement_is_normal_factor() {
        let n = cyclic(5);
        let sd = semidirect_product(&n, &Group::trivial(), &[(0..5).collect()]).unwrap();
        assert_eq!(sd.group.order(), 5);
        assert_eq!(sd.group.table(), n.table());
    }

    #[test]
    fn semidirect_z3_by_inversion_is_d3() {
        let n = cyclic(3);
        let h = cyclic(2);
        let sd = semidirect_product(&n, &h, &[vec![0, 1, 2], vec![0, 2, 1]]).unwrap();
        assert_eq!(sd.group.table(), d3().table());
    }

    #[test]
    fn semidirect_rejects_bad_actions() {
        let n = cyclic(3);
        let h = cyclic(2);
        assert_eq!(
            semidirect_product(&n, &h, &[vec![0, 1, 2], vec![1, 2, 0]]).unwrap_err(),
            Error::NotAutomorphism { element: 1 }
        );
        // Inversion is an automorphism of Z3, but C3 cannot act through an
        // element of order 2.
        let c3 = cyclic(3);
        let inv = vec![0, 2, 1];
        assert!(matches!(
            semidirect_product(&n, &c3, &[vec![0, 1, 2], inv.clone(), inv]),
            Err(Error::ActionNotHomomorphism { .. })
        ));
    }

    #[test]
    fn direct_product_order() {
        let g = direct_product(&cyclic(2), &cyclic(3));
        assert_eq!(g.order(), 6);
        assert!(g.is_abelian());
    }
}
