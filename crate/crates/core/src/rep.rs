//! Real matrix representations of subgroups, and the derived
//! representations used by the kernel constraints.

use std::f64::consts::PI;
use std::fmt;

use log::warn;
use nalgebra::DMatrix;

use crate::double_coset::DoubleCosetSpace;
use crate::error::{Error, Result};
use crate::group::{Group, Subgroup};
use crate::linalg::sandwich_operator;

/// Entrywise tolerance for the homomorphism check.
pub const HOMOMORPHISM_TOL: f64 = 1e-12;

/// Representations of groups up to this order are checked on every pair.
pub const EXHAUSTIVE_CHECK_LIMIT: usize = 72;

/// A representation `ρ : H → GL(d, ℝ)` of a subgroup `H`.
///
/// Matrices are stored in the order of the subgroup's sorted element list.
#[derive(Clone)]
pub struct Representation {
    subgroup: Subgroup,
    dim: usize,
    matrices: Vec<DMatrix<f64>>,
    exact: bool,
    name: String,
}

impl fmt::Debug for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Representation")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("subgroup", &self.subgroup)
            .finish()
    }
}

impl Representation {
    /// Validates and wraps explicit matrices, one per subgroup element in
    /// sorted order.
    pub fn new(
        subgroup: &Subgroup,
        matrices: Vec<DMatrix<f64>>,
        name: impl Into<String>,
    ) -> Result<Representation> {
        if matrices.len() != subgroup.order() {
            return Err(Error::ShapeMismatch(format!(
                "{} matrices for a subgroup of order {}",
                matrices.len(),
                subgroup.order()
            )));
        }
        let dim = matrices[0].nrows();
        for (i, m) in matrices.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim || dim == 0 {
                return Err(Error::BadMatrixShape {
                    element: subgroup.elements()[i],
                    rows: m.nrows(),
                    cols: m.ncols(),
                    dim,
                });
            }
        }
        let exact = matrices.iter().all(|m| m.iter().all(|&v| v == v.round()));
        let rep = Representation { subgroup: subgroup.clone(), dim, matrices, exact, name: name.into() };
        rep.validate()?;
        Ok(rep)
    }

    fn validate(&self) -> Result<()> {
        let id_residual = max_abs_diff(&self.matrices[0], &DMatrix::identity(self.dim, self.dim));
        if id_residual > HOMOMORPHISM_TOL {
            return Err(Error::IdentityNotMapped { residual: id_residual });
        }
        let g = self.subgroup.parent();
        let elems = self.subgroup.elements();
        let check = |a: usize, b: usize| -> Result<()> {
            let lhs = self.matrix(g.mul(a, b));
            let rhs = self.matrix(a) * self.matrix(b);
            let residual = max_abs_diff(lhs, &rhs);
            if residual > HOMOMORPHISM_TOL {
                return Err(Error::NotHomomorphism { a, b, residual });
            }
            Ok(())
        };
        if elems.len() <= EXHAUSTIVE_CHECK_LIMIT {
            for &a in elems {
                for &b in elems {
                    check(a, b)?;
                }
            }
        } else {
            // Products against every element of a stride-sampled set.
            let stride = elems.len() / EXHAUSTIVE_CHECK_LIMIT + 1;
            for &a in elems.iter().step_by(stride) {
                for &b in elems {
                    check(a, b)?;
                }
            }
        }
        // Homomorphism plus ρ(e) = I makes ρ(g) invertible with inverse
        // ρ(g⁻¹); this guards against near-singular inputs within tolerance.
        for &a in elems {
            let residual = max_abs_diff(
                &(self.matrix(a) * self.matrix(g.inv(a))),
                &DMatrix::identity(self.dim, self.dim),
            );
            if residual > HOMOMORPHISM_TOL {
                return Err(Error::NotHomomorphism { a, b: g.inv(a), residual });
            }
        }
        Ok(())
    }

    /// The trivial representation: every element acts as `[1]`.
    pub fn trivial(subgroup: &Subgroup) -> Representation {
        let matrices = vec![DMatrix::identity(1, 1); subgroup.order()];
        Representation { subgroup: subgroup.clone(), dim: 1, matrices, exact: true, name: "trivial".into() }
    }

    /// Left multiplication of `H` on itself, as permutation matrices on the
    /// sorted element list.
    pub fn regular(subgroup: &Subgroup) -> Representation {
        let g = subgroup.parent();
        let n = subgroup.order();
        let matrices = subgroup
            .elements()
            .iter()
            .map(|&h| {
                let mut m = DMatrix::zeros(n, n);
                for (k, &hk) in subgroup.elements().iter().enumerate() {
                    let target = subgroup.position(g.mul(h, hk)).expect("closed");
                    m[(target, k)] = 1.0;
                }
                m
            })
            .collect();
        Representation { subgroup: subgroup.clone(), dim: n, matrices, exact: true, name: "regular".into() }
    }

    /// Two-dimensional rotation representation of a cyclic or dihedral
    /// subgroup: the rotation generator `r` of order `n` maps to rotation by
    /// `2π·frequency/n`, reflections to reflections across the first axis.
    pub fn rotation(subgroup: &Subgroup, frequency: i64) -> Result<Representation> {
        if frequency == 0 {
            return Err(Error::FrequencyZero);
        }
        let structure = cyclic_or_dihedral(subgroup)?;
        let g = subgroup.parent();
        let n = structure.rotation_order;
        if frequency.rem_euclid(n as i64) == 0 {
            warn!("rotation frequency {frequency} aliases to 0 on a rotation group of order {n}");
        }
        let rotation = |k: usize| {
            let theta = 2.0 * PI * (frequency as f64) * (k as f64) / (n as f64);
            DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()])
        };
        let reflect = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let mut matrices = vec![DMatrix::zeros(2, 2); subgroup.order()];
        let mut rk = 0;
        for k in 0..n {
            matrices[subgroup.position(rk).expect("closed")] = rotation(k);
            if let Some(f) = structure.reflection {
                let rkf = g.mul(rk, f);
                matrices[subgroup.position(rkf).expect("closed")] = rotation(k) * &reflect;
            }
            rk = g.mul(rk, structure.rotation);
        }
        Representation::new(subgroup, matrices, format!("rotation({frequency})"))
    }

    /// Block-diagonal sum `a ⊕ b`.
    pub fn direct_sum(a: &Representation, b: &Representation) -> Result<Representation> {
        if a.subgroup != b.subgroup {
            return Err(Error::GroupMismatch);
        }
        let dim = a.dim + b.dim;
        let matrices = a
            .matrices
            .iter()
            .zip(&b.matrices)
            .map(|(ma, mb)| {
                let mut m = DMatrix::zeros(dim, dim);
                m.view_mut((0, 0), (a.dim, a.dim)).copy_from(ma);
                m.view_mut((a.dim, a.dim), (b.dim, b.dim)).copy_from(mb);
                m
            })
            .collect();
        Ok(Representation {
            subgroup: a.subgroup.clone(),
            dim,
            matrices,
            exact: a.exact && b.exact,
            name: format!("{}+{}", a.name, b.name),
        })
    }

    pub fn subgroup(&self) -> &Subgroup {
        &self.subgroup
    }

    pub fn group(&self) -> &Group {
        self.subgroup.parent()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Whether every matrix entry is an exact integer.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// `ρ(h)` for an element `h` of the parent group lying in the subgroup.
    ///
    /// Panics if `h` is not in the subgroup.
    #[inline]
    pub fn matrix(&self, h: usize) -> &DMatrix<f64> {
        let pos = self
            .subgroup
            .position(h)
            .unwrap_or_else(|| panic!("element {h} is not in the representation's subgroup"));
        &self.matrices[pos]
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    /// `ρ(h⁻¹)`, which equals `ρ(h)⁻¹`.
    pub fn inverse_matrix(&self, h: usize) -> &DMatrix<f64> {
        self.matrix(self.subgroup.parent().inv(h))
    }

    /// 0/1 matrices with a single 1 in every row and column.
    pub fn is_permutation(&self) -> bool {
        self.matrices.iter().all(|m| {
            m.iter().all(|&v| v == 0.0 || v == 1.0)
                && m.row_iter().all(|r| r.sum() == 1.0)
                && m.column_iter().all(|c| c.sum() == 1.0)
        })
    }

    /// Largest entry of `ρ(h)ρ(h)ᵀ − I` over the subgroup.
    pub fn orthogonality_residual(&self) -> f64 {
        let id = DMatrix::identity(self.dim, self.dim);
        self.matrices
            .iter()
            .map(|m| max_abs_diff(&(m * m.transpose()), &id))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Order of the rotation subgroup when `subgroup` is cyclic or dihedral.
pub fn rotation_order(subgroup: &Subgroup) -> Option<usize> {
    cyclic_or_dihedral(subgroup).ok().map(|s| s.rotation_order)
}

struct RotationStructure {
    rotation: usize,
    rotation_order: usize,
    reflection: Option<usize>,
}

/// Finds a rotation generator (and reflection, for dihedral groups), taking
/// the smallest qualifying element indices.
fn cyclic_or_dihedral(subgroup: &Subgroup) -> Result<RotationStructure> {
    let g = subgroup.parent();
    let order = subgroup.order();
    if order == 1 {
        return Ok(RotationStructure { rotation: 0, rotation_order: 1, reflection: None });
    }
    if let Some(&r) = subgroup.elements().iter().find(|&&a| g.element_order(a) == order) {
        return Ok(RotationStructure { rotation: r, rotation_order: order, reflection: None });
    }
    if order.is_multiple_of(2) {
        let n = order / 2;
        for &r in subgroup.elements() {
            if g.element_order(r) != n {
                continue;
            }
            let mut powers = vec![false; g.order()];
            let mut x = 0;
            for _ in 0..n {
                powers[x] = true;
                x = g.mul(x, r);
            }
            let outside: Vec<usize> =
                subgroup.elements().iter().copied().filter(|&a| !powers[a]).collect();
            let dihedral = outside
                .iter()
                .all(|&f| g.element_order(f) == 2 && g.mul_all(&[f, r, f]) == g.inv(r));
            if dihedral {
                return Ok(RotationStructure {
                    rotation: r,
                    rotation_order: n,
                    reflection: Some(outside[0]),
                });
            }
        }
    }
    Err(Error::NotCyclicOrDihedral { order })
}

/// The operator `Ψ ↦ ρ₂(h₂) Ψ ρ₁(h₁)⁻¹` on column-major `vec(Ψ)`.
pub fn rho12(rho1: &Representation, rho2: &Representation, h1: usize, h2: usize) -> DMatrix<f64> {
    sandwich_operator(rho2.matrix(h2), rho1.inverse_matrix(h1))
}

/// `ρ₁ˣ(h) = ρ₁(γ(x)⁻¹ h γ(x))` for `h` in the stabilizer of double coset `x`.
pub fn rho1_x(
    rho1: &Representation,
    dcs: &DoubleCosetSpace,
    x: usize,
    h: usize,
) -> Result<DMatrix<f64>> {
    if !dcs.stabilizer(x).contains(h) {
        return Err(Error::NotInStabilizer { element: h, dcoset: x });
    }
    let g = dcs.group();
    let c = dcs.gamma(x);
    let conj = g.mul_all(&[g.inv(c), h, c]);
    assert!(dcs.right().contains(conj), "stabilizer conjugates into H₁");
    Ok(rho1.matrix(conj).clone())
}

/// `ρ₁ˣ` packaged as a representation of the stabilizer subgroup.
pub fn rho1_x_rep(rho1: &Representation, dcs: &DoubleCosetSpace, x: usize) -> Result<Representation> {
    let stab = dcs.stabilizer(x);
    let matrices = stab
        .elements()
        .iter()
        .map(|&h| rho1_x(rho1, dcs, x, h))
        .collect::<Result<Vec<_>>>()?;
    Representation::new(stab, matrices, format!("{}^x", rho1.name()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::double_coset::GammaPolicy;
    use crate::group::build_subgroup;
    use std::sync::Arc;

    fn cyclic(n: usize) -> Arc<Group> {
        Arc::new(Group::from_fn(n, (0..n).map(|k| k.to_string()).collect(), |a, b| (a + b) % n).unwrap())
    }

    fn d3() -> Arc<Group> {
        Arc::new(
            Group::from_fn(6, (0..6).map(|k| k.to_string()).collect(), |x, y| {
                let (a, b, c, d) = (x % 3, x / 3, y % 3, y / 3);
                let rot = if b == 0 { (a + c) % 3 } else { (a + 3 - c) % 3 };
                rot + 3 * ((b + d) % 2)
            })
            .unwrap(),
        )
    }

    #[test]
    fn trivial_reps() {
        let c4 = Subgroup::whole(&cyclic(4));
        let t = Representation::trivial(&c4);
        assert_eq!(t.dim(), 1);
        assert!(t.matrices().iter().all(|m| m[(0, 0)] == 1.0));
        assert_eq!(Representation::trivial(&Subgroup::trivial(&cyclic(4))).matrices().len(), 1);
    }

    #[test]
    fn regular_rep_of_flips_is_swap() {
        let g = d3();
        let h = build_subgroup(&g, &[3]).unwrap();
        let reg = Representation::regular(&h);
        assert_eq!(reg.matrix(3), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert!(reg.is_permutation());
        assert!(reg.is_exact());
        let e = Representation::regular(&Subgroup::trivial(&g));
        assert_eq!(e.matrix(0), &DMatrix::identity(1, 1));
    }

    #[test]
    fn regular_c4_is_cyclic_shift() {
        let c4 = Subgroup::whole(&cyclic(4));
        let reg = Representation::regular(&c4);
        let m = reg.matrix(1);
        assert_eq!(m.pow(4), DMatrix::identity(4, 4));
        assert_ne!(m.pow(2), DMatrix::identity(4, 4));
        // Validation runs on a fresh copy too.
        Representation::new(&c4, reg.matrices().to_vec(), "copy").unwrap();
    }

    #[test]
    fn rotation_irreps() {
        let c4 = Subgroup::whole(&cyclic(4));
        let rot = Representation::rotation(&c4, 1).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(max_abs_diff(rot.matrix(1), &expected) < 1e-15);
        assert_eq!(Representation::rotation(&c4, 0).unwrap_err(), Error::FrequencyZero);
        let aliased = Representation::rotation(&c4, 4).unwrap();
        assert!(aliased.matrices().iter().all(|m| max_abs_diff(m, &DMatrix::identity(2, 2)) < 1e-12));
    }

    #[test]
    fn rotation_on_dihedral_and_rejects_others() {
        let g = d3();
        let rot = Representation::rotation(&Subgroup::whole(&g), 1).unwrap();
        let f = rot.matrix(3);
        assert!(max_abs_diff(&(f * f), &DMatrix::identity(2, 2)) < 1e-12);
        assert!((f.determinant() + 1.0).abs() < 1e-12);
        // Z2 x Z4 is neither cyclic nor dihedral.
        let z2z4 = Arc::new(crate::group::direct_product(&cyclic(2), &cyclic(4)));
        assert!(matches!(
            Representation::rotation(&Subgroup::whole(&z2z4), 1),
            Err(Error::NotCyclicOrDihedral { order: 8 })
        ));
    }

    #[test]
    fn explicit_rep_rejects_non_homomorphism() {
        let c2 = Subgroup::whole(&cyclic(2));
        let bad = vec![DMatrix::identity(1, 1), DMatrix::from_element(1, 1, 2.0)];
        assert!(matches!(Representation::new(&c2, bad, "bad"), Err(Error::NotHomomorphism { .. })));
        let not_id = vec![DMatrix::from_element(1, 1, -1.0), DMatrix::from_element(1, 1, -1.0)];
        assert!(matches!(Representation::new(&c2, not_id, "bad"), Err(Error::IdentityNotMapped { .. })));
    }

    #[test]
    fn direct_sums() {
        let g = d3();
        let h = build_subgroup(&g, &[3]).unwrap();
        let t = Representation::trivial(&h);
        let tt = Representation::direct_sum(&t, &t).unwrap();
        assert_eq!(tt.dim(), 2);
        assert!(tt.matrices().iter().all(|m| m == &DMatrix::identity(2, 2)));
        let rt = Representation::direct_sum(&Representation::regular(&h), &t).unwrap();
        assert_eq!(rt.dim(), 3);
        let c4 = Subgroup::whole(&cyclic(4));
        let r = Representation::rotation(&c4, 1).unwrap();
        let rr = Representation::direct_sum(&r, &r).unwrap();
        assert_eq!(rr.dim(), 4);
        assert_eq!(rr.matrix(1).view((2, 2), (2, 2)), r.matrix(1).view((0, 0), (2, 2)));
        assert_eq!(
            Representation::direct_sum(&t, &Representation::trivial(&Subgroup::trivial(&g))).unwrap_err(),
            Error::GroupMismatch
        );
    }

    #[test]
    fn rho12_examples() {
        let g = d3();
        let h = build_subgroup(&g, &[3]).unwrap();
        let t = Representation::trivial(&h);
        let reg = Representation::regular(&h);
        assert_eq!(rho12(&reg, &reg, 0, 0), DMatrix::identity(4, 4));
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(rho12(&t, &reg, 0, 3), swap);
    }

    #[test]
    fn rho12_composes_as_product_representation() {
        let g = d3();
        let h = build_subgroup(&g, &[3]).unwrap();
        let whole = Subgroup::whole(&g);
        let rho1 = Representation::regular(&h);
        let rho2 = Representation::rotation(&whole, 1).unwrap();
        for &a1 in h.elements() {
            for &b1 in h.elements() {
                for a2 in 0..6 {
                    for b2 in 0..6 {
                        let lhs = rho12(&rho1, &rho2, a1, a2) * rho12(&rho1, &rho2, b1, b2);
                        let rhs = rho12(&rho1, &rho2, g.mul(a1, b1), g.mul(a2, b2));
                        assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn rho1_x_examples() {
        let g = d3();
        let h = build_subgroup(&g, &[3]).unwrap();
        let reg = Representation::regular(&h);
        let dcs = DoubleCosetSpace::new(&h, &h, GammaPolicy::default()).unwrap();
        assert_eq!(&rho1_x(&reg, &dcs, 0, 3).unwrap(), reg.matrix(3));
        assert_eq!(rho1_x(&reg, &dcs, 1, 0).unwrap(), DMatrix::identity(2, 2));
        assert_eq!(
            rho1_x(&reg, &dcs, 1, 3).unwrap_err(),
            Error::NotInStabilizer { element: 3, dcoset: 1 }
        );
        assert_eq!(rho1_x_rep(&reg, &dcs, 1).unwrap().matrices().len(), 1);
    }
}
