//! Double coset spaces `H₂\G/H₁` with representatives and stabilizers.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::group::{Group, Subgroup};

/// How double coset representatives `γ(x)` are chosen. The identity's double
/// coset is always represented by the identity.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum GammaPolicy {
    #[default]
    SmallestIndex,
    /// Picks the `k mod |x|`-th smallest member of each double coset.
    Rotated(usize),
    /// One representative per double coset, indexed by double coset index.
    Explicit(Vec<usize>),
}

#[derive(Clone, Debug)]
pub struct DoubleCosetSpace {
    group: Arc<Group>,
    left: Subgroup,
    right: Subgroup,
    dcoset_of: Vec<usize>,
    members: Vec<Vec<usize>>,
    gamma: Vec<usize>,
    stabilizers: Vec<Subgroup>,
}

/// Partitions `G` into double cosets `H₂ g H₁`, numbered by smallest member.
pub fn double_cosets(
    left: &Subgroup,
    right: &Subgroup,
    policy: GammaPolicy,
) -> Result<DoubleCosetSpace> {
    DoubleCosetSpace::new(left, right, policy)
}

impl DoubleCosetSpace {
    pub fn new(left: &Subgroup, right: &Subgroup, policy: GammaPolicy) -> Result<Self> {
        if !left.same_parent(right) {
            return Err(Error::GroupMismatch);
        }
        let group = left.parent().clone();
        let order = group.order();
        let mut dcoset_of = vec![usize::MAX; order];
        let mut members = Vec::new();
        for g in 0..order {
            if dcoset_of[g] != usize::MAX {
                continue;
            }
            let idx = members.len();
            let mut dc = Vec::new();
            for &a in left.elements() {
                let ag = group.mul(a, g);
                for &b in right.elements() {
                    let x = group.mul(ag, b);
                    if dcoset_of[x] == usize::MAX {
                        dcoset_of[x] = idx;
                        dc.push(x);
                    }
                }
            }
            dc.sort_unstable();
            members.push(dc);
        }

        let gamma: Vec<usize> = match policy {
            GammaPolicy::SmallestIndex => members.iter().map(|m| m[0]).collect(),
            GammaPolicy::Rotated(k) => members
                .iter()
                .enumerate()
                .map(|(x, m)| if x == 0 { 0 } else { m[k % m.len()] })
                .collect(),
            GammaPolicy::Explicit(reps) => {
                if reps.len() != members.len() {
                    return Err(Error::ExplicitGammaInvalid {
                        reason: format!(
                            "{} representatives for {} double cosets",
                            reps.len(),
                            members.len()
                        ),
                    });
                }
                for (x, &r) in reps.iter().enumerate() {
                    if r >= order || dcoset_of[r] != x {
                        return Err(Error::ExplicitGammaInvalid {
                            reason: format!("representative {r} is not in double coset {x}"),
                        });
                    }
                }
                if reps[0] != 0 {
                    return Err(Error::ExplicitGammaInvalid {
                        reason: "the identity double coset must be represented by e".into(),
                    });
                }
                reps
            }
        };

        let stabilizers = gamma.iter().map(|&c| right.conjugate(c).intersection(left)).collect();

        Ok(DoubleCosetSpace {
            group,
            left: left.clone(),
            right: right.clone(),
            dcoset_of,
            members,
            gamma,
            stabilizers,
        })
    }

    pub fn group(&self) -> &Arc<Group> {
        &self.group
    }

    /// `H₂`.
    pub fn left(&self) -> &Subgroup {
        &self.left
    }

    /// `H₁`.
    pub fn right(&self) -> &Subgroup {
        &self.right
    }

    pub fn num(&self) -> usize {
        self.members.len()
    }

    #[inline]
    pub fn dcoset_of(&self, g: usize) -> usize {
        self.dcoset_of[g]
    }

    pub fn members(&self, x: usize) -> &[usize] {
        &self.members[x]
    }

    #[inline]
    pub fn gamma(&self, x: usize) -> usize {
        self.gamma[x]
    }

    pub fn gammas(&self) -> &[usize] {
        &self.gamma
    }

    /// `H₂^{γ(x)H₁} = γ(x) H₁ γ(x)^{-1} ∩ H₂`.
    pub fn stabilizer(&self, x: usize) -> &Subgroup {
        &self.stabilizers[x]
    }

    pub fn stabilizer_orders(&self) -> Vec<usize> {
        self.stabilizers.iter().map(Subgroup::order).collect()
    }
}
