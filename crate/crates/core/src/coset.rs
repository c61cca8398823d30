//! Left coset spaces `G/H`, sections and the h-function.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::group::{Group, Subgroup};

/// How coset representatives are chosen.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum SectionPolicy {
    /// Smallest element index in each coset.
    #[default]
    SmallestIndex,
    /// One representative per coset, indexed by coset index.
    Explicit(Vec<usize>),
}

/// The coset space `G/H` with projection `p`, section `s` and precomputed
/// action and h-function tables.
///
/// Cosets are numbered by their smallest element, so coset 0 is `H` itself
/// (the origin).
#[derive(Clone, Debug)]
pub struct CosetSpace {
    group: Arc<Group>,
    subgroup: Subgroup,
    coset_of: Vec<usize>,
    members: Vec<Vec<usize>>,
    section: Vec<usize>,
    // act[g * n + x] = p(g s(x))
    act: Vec<usize>,
    // h[x * |G| + g] = s(gx)^{-1} g s(x)
    h: Vec<usize>,
}

pub fn left_cosets(subgroup: &Subgroup, policy: SectionPolicy) -> Result<CosetSpace> {
    CosetSpace::new(subgroup, policy)
}

impl CosetSpace {
    pub fn new(subgroup: &Subgroup, policy: SectionPolicy) -> Result<CosetSpace> {
        let group = subgroup.parent().clone();
        let order = group.order();
        let mut coset_of = vec![usize::MAX; order];
        let mut members = Vec::new();
        for g in 0..order {
            if coset_of[g] != usize::MAX {
                continue;
            }
            let idx = members.len();
            let mut coset: Vec<usize> =
                subgroup.elements().iter().map(|&h| group.mul(g, h)).collect();
            coset.sort_unstable();
            for &m in &coset {
                coset_of[m] = idx;
            }
            members.push(coset);
        }
        let n = members.len();

        let section = match policy {
            SectionPolicy::SmallestIndex => members.iter().map(|c| c[0]).collect(),
            SectionPolicy::Explicit(reps) => {
                if reps.len() != n {
                    return Err(Error::ExplicitSectionInvalid {
                        reason: format!("{} representatives for {n} cosets", reps.len()),
                    });
                }
                for (x, &r) in reps.iter().enumerate() {
                    if r >= order || coset_of[r] != x {
                        return Err(Error::ExplicitSectionInvalid {
                            reason: format!("representative {r} is not in coset {x}"),
                        });
                    }
                }
                if reps[0] != 0 {
                    return Err(Error::ExplicitSectionInvalid {
                        reason: format!("s(H) must be the identity, got {}", reps[0]),
                    });
                }
                reps
            }
        };

        let mut act = vec![0; order * n];
        for g in 0..order {
            for x in 0..n {
                act[g * n + x] = coset_of[group.mul(g, section[x])];
            }
        }
        let mut h = vec![0; n * order];
        for x in 0..n {
            for g in 0..order {
                let gx = act[g * n + x];
                h[x * order + g] = group.mul_all(&[group.inv(section[gx]), g, section[x]]);
            }
        }

        Ok(CosetSpace {
            group,
            subgroup: subgroup.clone(),
            coset_of,
            members,
            section,
            act,
            h,
        })
    }

    pub fn group(&self) -> &Arc<Group> {
        &self.group
    }

    pub fn subgroup(&self) -> &Subgroup {
        &self.subgroup
    }

    pub fn num_cosets(&self) -> usize {
        self.members.len()
    }

    /// The projection `p(g) = gH`.
    #[inline]
    pub fn coset_of(&self, g: usize) -> usize {
        self.coset_of[g]
    }

    pub fn members(&self, x: usize) -> &[usize] {
        &self.members[x]
    }

    /// The section `s(x)`.
    #[inline]
    pub fn section(&self, x: usize) -> usize {
        self.section[x]
    }

    pub fn sections(&self) -> &[usize] {
        &self.section
    }

    /// `g · x = p(g s(x))`.
    #[inline]
    pub fn act(&self, g: usize, x: usize) -> usize {
        self.act[g * self.num_cosets() + x]
    }

    /// `h(x, g) = s(gx)^{-1} g s(x)`, an element of `H`.
    #[inline]
    pub fn h(&self, x: usize, g: usize) -> usize {
        self.h[x * self.group.order() + g]
    }

    /// `h(g) = h(H, g) = s(gH)^{-1} g`.
    #[inline]
    pub fn h_of_element(&self, g: usize) -> usize {
        self.h(0, g)
    }

    /// The unique factorization `g = s(gH) h(g)`.
    pub fn decompose(&self, g: usize) -> (usize, usize) {
        (self.section(self.coset_of(g)), self.h_of_element(g))
    }

    /// `{h ∈ K | h x = x}` for a subgroup `K`, by enumeration.
    pub fn stabilizer(&self, k: &Subgroup, x: usize) -> Subgroup {
        let elements: Vec<usize> =
            k.elements().iter().copied().filter(|&h| self.act(h, x) == x).collect();
        Subgroup::from_elements(k.parent(), &elements).expect("stabilizer is a subgroup")
    }
}
