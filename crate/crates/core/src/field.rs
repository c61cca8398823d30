//! Feature fields over `G/H`, stored either as Mackey functions on `G` or as
//! plain functions on the cosets, with the lifting isomorphism and the
//! induced representation acting on both.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coset::CosetSpace;
use crate::error::{Error, Result};
use crate::group::Group;
use crate::rep::Representation;

/// Residual above which a field is rejected as not Mackey.
pub const MACKEY_TOL: f64 = 1e-10;

/// A field type: a base space `G/H` together with the fiber representation
/// `ρ` of `H`.
#[derive(Clone, Debug)]
pub struct FieldSpace {
    cosets: Arc<CosetSpace>,
    rep: Arc<Representation>,
}

impl FieldSpace {
    pub fn new(cosets: Arc<CosetSpace>, rep: Arc<Representation>) -> Result<FieldSpace> {
        if cosets.subgroup() != rep.subgroup() {
            return Err(Error::GroupMismatch);
        }
        Ok(FieldSpace { cosets, rep })
    }

    pub fn cosets(&self) -> &Arc<CosetSpace> {
        &self.cosets
    }

    pub fn rep(&self) -> &Arc<Representation> {
        &self.rep
    }

    pub fn group(&self) -> &Arc<Group> {
        self.cosets.group()
    }

    pub fn fiber_dim(&self) -> usize {
        self.rep.dim()
    }

    /// `|G/H| · dim ρ`, the dimension of the field space.
    pub fn dim(&self) -> usize {
        self.cosets.num_cosets() * self.rep.dim()
    }

    pub fn same_as(&self, other: &FieldSpace) -> bool {
        (Arc::ptr_eq(&self.cosets, &other.cosets)
            || self.cosets.sections() == other.cosets.sections()
                && self.cosets.subgroup() == other.cosets.subgroup())
            && (Arc::ptr_eq(&self.rep, &other.rep)
                || self.rep.subgroup() == other.rep.subgroup()
                    && self.rep.matrices() == other.rep.matrices())
    }

    /// Matrix of `π_C(g)` in the basis of section values, coset-major.
    pub fn induced_matrix(&self, g: usize) -> DMatrix<f64> {
        let d = self.fiber_dim();
        let n = self.cosets.num_cosets();
        let group = self.group();
        let g_inv = group.inv(g);
        let mut m = DMatrix::zeros(n * d, n * d);
        for x in 0..n {
            let src = self.cosets.act(g_inv, x);
            let twist = self.rep.inverse_matrix(self.cosets.h(x, g_inv));
            m.view_mut((x * d, src * d), (d, d)).copy_from(twist);
        }
        m
    }

    /// A random section field with entries uniform in `[-1, 1]`.
    pub fn random_section_field(&self, rng: &mut impl Rng) -> SectionField {
        let d = self.fiber_dim();
        let values = (0..self.cosets.num_cosets())
            .map(|_| DVector::from_fn(d, |_, _| rng.random_range(-1.0..=1.0)))
            .collect();
        SectionField { space: self.clone(), values }
    }

    /// A random Mackey field, by projecting uniform noise on `G`.
    pub fn random_mackey_field(&self, rng: &mut impl Rng) -> MackeyField {
        let d = self.fiber_dim();
        let raw: Vec<DVector<f64>> = (0..self.group().order())
            .map(|_| DVector::from_fn(d, |_, _| rng.random_range(-1.0..=1.0)))
            .collect();
        project_to_mackey(&raw, self).expect("shape matches")
    }
}

/// The seeded generator used for all random test data.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A field as a function `f : G → V` with `f(gh) = ρ(h⁻¹) f(g)`.
#[derive(Clone, Debug)]
pub struct MackeyField {
    space: FieldSpace,
    values: Vec<DVector<f64>>,
}

/// A field as an unconstrained function `f : G/H → V`.
#[derive(Clone, Debug)]
pub struct SectionField {
    space: FieldSpace,
    values: Vec<DVector<f64>>,
}

fn check_values(values: &[DVector<f64>], count: usize, dim: usize, what: &str) -> Result<()> {
    if values.len() != count {
        return Err(Error::ShapeMismatch(format!("{} {what} values, expected {count}", values.len())));
    }
    if let Some(v) = values.iter().find(|v| v.len() != dim) {
        return Err(Error::ShapeMismatch(format!("value of length {}, expected {dim}", v.len())));
    }
    Ok(())
}

/// Largest `‖f(gh) − ρ(h⁻¹) f(g)‖∞` over `g ∈ G`, `h ∈ H`.
pub fn mackey_residual(space: &FieldSpace, values: &[DVector<f64>]) -> f64 {
    let g = space.group();
    let h = space.cosets.subgroup();
    let mut worst: f64 = 0.0;
    for a in 0..g.order() {
        for &b in h.elements() {
            let expected = space.rep.inverse_matrix(b) * &values[a];
            let diff = (&values[g.mul(a, b)] - expected).amax();
            worst = worst.max(diff);
        }
    }
    worst
}

impl MackeyField {
    /// Validates the Mackey condition to [`MACKEY_TOL`].
    pub fn new(space: FieldSpace, values: Vec<DVector<f64>>) -> Result<MackeyField> {
        check_values(&values, space.group().order(), space.fiber_dim(), "group")?;
        let residual = mackey_residual(&space, &values);
        if residual > MACKEY_TOL {
            return Err(Error::NotMackey { residual });
        }
        Ok(MackeyField { space, values })
    }

    pub fn zeros(space: &FieldSpace) -> MackeyField {
        let values = vec![DVector::zeros(space.fiber_dim()); space.group().order()];
        MackeyField { space: space.clone(), values }
    }

    pub fn space(&self) -> &FieldSpace {
        &self.space
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn value(&self, g: usize) -> &DVector<f64> {
        &self.values[g]
    }

    pub fn residual(&self) -> f64 {
        mackey_residual(&self.space, &self.values)
    }

    pub(crate) fn from_values_unchecked(space: FieldSpace, values: Vec<DVector<f64>>) -> MackeyField {
        MackeyField { space, values }
    }
}

impl SectionField {
    pub fn new(space: FieldSpace, values: Vec<DVector<f64>>) -> Result<SectionField> {
        check_values(&values, space.cosets.num_cosets(), space.fiber_dim(), "coset")?;
        Ok(SectionField { space, values })
    }

    pub fn zeros(space: &FieldSpace) -> SectionField {
        let values = vec![DVector::zeros(space.fiber_dim()); space.cosets.num_cosets()];
        SectionField { space: space.clone(), values }
    }

    /// From a flat coset-major vector.
    pub fn from_flat(space: &FieldSpace, flat: &DVector<f64>) -> Result<SectionField> {
        let d = space.fiber_dim();
        if flat.len() != space.dim() {
            return Err(Error::ShapeMismatch(format!(
                "flat field of length {}, expected {}",
                flat.len(),
                space.dim()
            )));
        }
        let values = flat.as_slice().chunks(d.max(1)).map(DVector::from_column_slice).collect();
        Ok(SectionField { space: space.clone(), values })
    }

    pub fn to_flat(&self) -> DVector<f64> {
        let mut out = Vec::with_capacity(self.space.dim());
        for v in &self.values {
            out.extend_from_slice(v.as_slice());
        }
        DVector::from_vec(out)
    }

    pub fn space(&self) -> &FieldSpace {
        &self.space
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn value(&self, x: usize) -> &DVector<f64> {
        &self.values[x]
    }

    pub(crate) fn map_values(&self, f: impl Fn(&DVector<f64>) -> DVector<f64>) -> SectionField {
        SectionField { space: self.space.clone(), values: self.values.iter().map(f).collect() }
    }
}

/// `[Λf](g) = ρ(h(g)⁻¹) f(gH)`.
pub fn lift(f: &SectionField) -> MackeyField {
    let space = &f.space;
    let cs = space.cosets();
    let values = (0..space.group().order())
        .map(|g| space.rep.inverse_matrix(cs.h_of_element(g)) * &f.values[cs.coset_of(g)])
        .collect();
    MackeyField { space: space.clone(), values }
}

/// `[Λ⁻¹f](x) = f(s(x))`.
pub fn unlift(f: &MackeyField) -> Result<SectionField> {
    let residual = f.residual();
    if residual > MACKEY_TOL {
        return Err(Error::NotMackey { residual });
    }
    Ok(unlift_unchecked(f))
}

pub(crate) fn unlift_unchecked(f: &MackeyField) -> SectionField {
    let cs = f.space.cosets();
    let values = cs.sections().iter().map(|&s| f.values[s].clone()).collect();
    SectionField { space: f.space.clone(), values }
}

/// `[π_G(g) f](k) = f(g⁻¹ k)`.
pub fn act_g(g: usize, f: &MackeyField) -> MackeyField {
    let group = f.space.group();
    let g_inv = group.inv(g);
    let values = (0..group.order()).map(|k| f.values[group.mul(g_inv, k)].clone()).collect();
    MackeyField { space: f.space.clone(), values }
}

/// `[π_C(g) f](x) = ρ(h(x, g⁻¹)⁻¹) f(g⁻¹ x)`.
pub fn act_c(g: usize, f: &SectionField) -> SectionField {
    let space = &f.space;
    let cs = space.cosets();
    let g_inv = space.group().inv(g);
    let values = (0..cs.num_cosets())
        .map(|x| space.rep.inverse_matrix(cs.h(x, g_inv)) * &f.values[cs.act(g_inv, x)])
        .collect();
    SectionField { space: space.clone(), values }
}

/// `f(g) = (1/|H|) Σ_{h∈H} ρ(h) raw(gh)`, the projection onto Mackey
/// functions.
pub fn project_to_mackey(raw: &[DVector<f64>], space: &FieldSpace) -> Result<MackeyField> {
    let group = space.group();
    check_values(raw, group.order(), space.fiber_dim(), "group")?;
    let h = space.cosets.subgroup();
    let scale = 1.0 / h.order() as f64;
    let values = (0..group.order())
        .map(|g| {
            let mut acc = DVector::zeros(space.fiber_dim());
            for &b in h.elements() {
                acc += space.rep.matrix(b) * &raw[group.mul(g, b)];
            }
            acc * scale
        })
        .collect();
    Ok(MackeyField { space: space.clone(), values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coset::SectionPolicy;
    use crate::group::{build_subgroup, Subgroup};
    use proptest::prelude::*;

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

    fn flips_space(regular: bool) -> FieldSpace {
        let g = d3();
        let h = build_subgroup(&g, &[3]).unwrap();
        let cs = CosetSpace::new(&h, SectionPolicy::Explicit(vec![0, 1, 5])).unwrap();
        let rep = if regular { Representation::regular(&h) } else { Representation::trivial(&h) };
        FieldSpace::new(Arc::new(cs), Arc::new(rep)).unwrap()
    }

    fn max_diff(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).amax()).fold(0.0, f64::max)
    }

    #[test]
    fn trivial_lift_is_constant_on_cosets() {
        let space = flips_space(false);
        let f = SectionField::new(
            space.clone(),
            vec![DVector::from_element(1, 1.0), DVector::from_element(1, 2.0), DVector::from_element(1, 3.0)],
        )
        .unwrap();
        let lifted = lift(&f);
        for g in 0..6 {
            assert_eq!(lifted.value(g)[0], (space.cosets().coset_of(g) + 1) as f64);
        }
    }

    #[test]
    fn lift_of_single_coset_support() {
        let space = flips_space(true);
        let v = DVector::from_vec(vec![0.25, -1.5]);
        let mut values = vec![DVector::zeros(2); 3];
        values[2] = v.clone();
        let lifted = lift(&SectionField::new(space.clone(), values).unwrap());
        let cs = space.cosets();
        let g = space.group();
        for &h in cs.subgroup().elements() {
            let expected = space.rep().inverse_matrix(h) * &v;
            assert_eq!(lifted.value(g.mul(cs.section(2), h)), &expected);
        }
        assert!(lifted.residual() == 0.0);
        assert!(lift(&SectionField::zeros(&space)).values().iter().all(|v| v.amax() == 0.0));
    }

    #[test]
    fn unlift_rejects_non_mackey() {
        let space = flips_space(true);
        let values = (0..6).map(|g| DVector::from_vec(vec![g as f64, 0.0])).collect();
        assert!(matches!(MackeyField::new(space.clone(), values), Err(Error::NotMackey { .. })));
        let bad = MackeyField {
            space: space.clone(),
            values: (0..6).map(|g| DVector::from_vec(vec![g as f64, 0.0])).collect(),
        };
        assert!(matches!(unlift(&bad), Err(Error::NotMackey { .. })));
    }

    #[test]
    fn act_g_translates_coset_indicator() {
        let space = flips_space(false);
        let mut values = vec![DVector::zeros(1); 3];
        values[0][0] = 1.0;
        let indicator_h = lift(&SectionField::new(space.clone(), values).unwrap());
        let moved = act_g(1, &indicator_h);
        let mut values = vec![DVector::zeros(1); 3];
        values[1][0] = 1.0;
        let indicator_rh = lift(&SectionField::new(space.clone(), values).unwrap());
        assert_eq!(max_diff(moved.values(), indicator_rh.values()), 0.0);
    }

    #[test]
    fn trivial_act_c_permutes_cosets() {
        let space = flips_space(false);
        let f = space.random_section_field(&mut seeded_rng(3));
        for g in 0..6 {
            let moved = act_c(g, &f);
            let g_inv = space.group().inv(g);
            for x in 0..3 {
                assert_eq!(moved.value(x), f.value(space.cosets().act(g_inv, x)));
            }
        }
    }

    #[test]
    fn induced_matrix_agrees_with_act_c() {
        let space = flips_space(true);
        let f = space.random_section_field(&mut seeded_rng(5));
        for g in 0..6 {
            let via_matrix = space.induced_matrix(g) * f.to_flat();
            assert!((via_matrix - act_c(g, &f).to_flat()).amax() < 1e-15);
        }
    }

    #[test]
    fn project_fixes_mackey_and_averages_trivial() {
        let space = flips_space(true);
        let f = space.random_mackey_field(&mut seeded_rng(11));
        let again = project_to_mackey(f.values(), &space).unwrap();
        assert!(max_diff(again.values(), f.values()) < 1e-15);

        let trivial = flips_space(false);
        let raw: Vec<DVector<f64>> = (0..6).map(|g| DVector::from_element(1, g as f64)).collect();
        let avg = project_to_mackey(&raw, &trivial).unwrap();
        for g in 0..6 {
            let coset = trivial.cosets().members(trivial.cosets().coset_of(g));
            let mean = coset.iter().map(|&k| k as f64).sum::<f64>() / 2.0;
            assert!((avg.value(g)[0] - mean).abs() < 1e-15);
        }
    }

    #[test]
    fn rep_subgroup_must_match_cosets() {
        let g = d3();
        let h = build_subgroup(&g, &[3]).unwrap();
        let cs = Arc::new(CosetSpace::new(&h, SectionPolicy::default()).unwrap());
        let rep = Arc::new(Representation::trivial(&Subgroup::whole(&g)));
        assert_eq!(FieldSpace::new(cs, rep).unwrap_err(), Error::GroupMismatch);
    }

    proptest! {
        #[test]
        fn projection_output_is_mackey(seed in any::<u64>()) {
            let space = flips_space(true);
            let f = space.random_mackey_field(&mut seeded_rng(seed));
            prop_assert!(f.residual() < 1e-12);
            let back = lift(&unlift(&f).unwrap());
            prop_assert!(max_diff(back.values(), f.values()) < 1e-12);
        }

        #[test]
        fn lifting_intertwines(seed in any::<u64>(), g in 0usize..6) {
            let space = flips_space(true);
            let f = space.random_section_field(&mut seeded_rng(seed));
            let lhs = act_g(g, &lift(&f));
            let rhs = lift(&act_c(g, &f));
            prop_assert!(max_diff(lhs.values(), rhs.values()) < 1e-12);
            prop_assert!(max_diff(unlift(&lift(&f)).unwrap().values(), f.values()) == 0.0);
        }
    }
}
