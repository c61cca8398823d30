//! Equivariant linear maps between field spaces, the brute-force intertwiner
//! oracle they are checked against, and equivariant nonlinearities.
//!
//! All integrals are plain sums over the group or coset space.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{act_c, lift, seeded_rng, unlift_unchecked, FieldSpace, MackeyField, SectionField, MACKEY_TOL};
use crate::group::Group;
use crate::kernel::{
    expand_d_to_c, lift_c_to_g, omega_choices, omega_value_unchecked, solve_basis_d, Kernel, KernelC, KernelD, KernelG,
    KernelSpace,
};
use crate::linalg::{self, sandwich_operator};
use crate::rep::{rho12, Representation};

/// Unknown-count limit for [`intertwiner_oracle`].
pub const ORACLE_UNKNOWN_LIMIT: usize = 1_000_000;

/// Mutual projection residual below which two spans count as equal.
pub const SPAN_TOL: f64 = 1e-8;

/// Beyond this group order the equivariance check samples `u`.
pub const EXHAUSTIVE_ACTION_LIMIT: usize = 256;

/// A kernel on pairs, `κ : G × G → Hom(V₁, V₂)`.
#[derive(Clone, Debug)]
pub struct TwoArgKernel {
    group: Arc<Group>,
    shape: (usize, usize),
    // Row-major in (g, g'): index g * |G| + g'.
    values: Vec<DMatrix<f64>>,
}

impl TwoArgKernel {
    pub fn new(group: Arc<Group>, values: Vec<DMatrix<f64>>) -> Result<TwoArgKernel> {
        let n = group.order();
        if values.len() != n * n || values.is_empty() {
            return Err(Error::ShapeMismatch(format!("{} pair values for a group of order {n}", values.len())));
        }
        let shape = values[0].shape();
        if values.iter().any(|v| v.shape() != shape) {
            return Err(Error::ShapeMismatch("pair values of differing shapes".into()));
        }
        Ok(TwoArgKernel { group, shape, values })
    }

    /// `κ(g, g') = κ₀(g⁻¹ g')`.
    pub fn from_one_arg(group: Arc<Group>, one_arg: &[DMatrix<f64>]) -> Result<TwoArgKernel> {
        let n = group.order();
        if one_arg.len() != n {
            return Err(Error::ShapeMismatch(format!("{} values for a group of order {n}", one_arg.len())));
        }
        let mut values = Vec::with_capacity(n * n);
        for g in 0..n {
            let g_inv = group.inv(g);
            for gp in 0..n {
                values.push(one_arg[group.mul(g_inv, gp)].clone());
            }
        }
        TwoArgKernel::new(group, values)
    }

    pub fn group(&self) -> &Arc<Group> {
        &self.group
    }

    /// `(d₂, d₁)`.
    pub fn value_shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn value(&self, g: usize, gp: usize) -> &DMatrix<f64> {
        &self.values[g * self.group.order() + gp]
    }

    /// `κ₀(a) = κ(e, a)`; for invariant kernels `κ(g, g') = κ₀(g⁻¹g')`.
    pub fn descend(&self) -> Vec<DMatrix<f64>> {
        (0..self.group.order()).map(|a| self.value(0, a).clone()).collect()
    }

    /// Largest `|κ(ug, ug') − κ(g, g')|` over all `u, g, g'`.
    pub fn invariance_residual(&self) -> f64 {
        let g = &self.group;
        let n = g.order();
        let mut worst: f64 = 0.0;
        for u in 0..n {
            for a in 0..n {
                let ua = g.mul(u, a);
                for b in 0..n {
                    let diff = linalg_max_diff(self.value(ua, g.mul(u, b)), self.value(a, b));
                    worst = worst.max(diff);
                }
            }
        }
        worst
    }

    /// Largest violation of `κ(g h₂, g' h₁) = ρ₁₂((h₁, h₂)⁻¹) κ(g, g')` in
    /// vectorized form, over all pairs and all `h₁ ∈ H₁`, `h₂ ∈ H₂`.
    pub fn mackey_residual(&self, rho1: &Representation, rho2: &Representation) -> f64 {
        let g = &self.group;
        let n = g.order();
        let mut worst: f64 = 0.0;
        for &h1 in rho1.subgroup().elements() {
            for &h2 in rho2.subgroup().elements() {
                let op = rho12(rho1, rho2, g.inv(h1), g.inv(h2));
                for a in 0..n {
                    for b in 0..n {
                        let expected = &op * linalg::vectorize(self.value(a, b));
                        let actual = linalg::vectorize(self.value(g.mul(a, h2), g.mul(b, h1)));
                        worst = worst.max((actual - expected).amax());
                    }
                }
            }
        }
        worst
    }
}

fn linalg_max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

/// `[κ · f](g) = Σ_{g'} κ(g, g') f(g')`.
pub fn apply_two_arg(k: &TwoArgKernel, f: &MackeyField) -> Result<Vec<DVector<f64>>> {
    let n = k.group.order();
    if f.values().len() != n || f.space().fiber_dim() != k.shape.1 {
        return Err(Error::ShapeMismatch(format!(
            "kernel of shape {:?} on a group of order {n} applied to a field of {} values of length {}",
            k.shape,
            f.values().len(),
            f.space().fiber_dim()
        )));
    }
    Ok((0..n)
        .map(|g| {
            let mut acc = DVector::zeros(k.shape.0);
            for (gp, v) in f.values().iter().enumerate() {
                acc += k.value(g, gp) * v;
            }
            acc
        })
        .collect())
}

fn check_kernel_spaces(space: &KernelSpace, input: &FieldSpace, output: &FieldSpace) -> Result<()> {
    let cs1 = space.cosets1();
    if cs1.sections() != input.cosets().sections()
        || space.rho1().subgroup() != input.rep().subgroup()
        || space.rho2().subgroup() != output.rep().subgroup()
        || space.rho1().matrices() != input.rep().matrices()
        || space.rho2().matrices() != output.rep().matrices()
    {
        return Err(Error::ShapeMismatch("kernel does not map between the given field spaces".into()));
    }
    Ok(())
}

/// `[κ ⋆ f](g) = Σ_{g'} κ(g⁻¹ g') f(g')`, a Mackey field of type
/// `output`.
pub fn correlate_g(k: &KernelG, f: &MackeyField, output: &FieldSpace) -> Result<MackeyField> {
    let residual = f.residual();
    if residual > MACKEY_TOL {
        return Err(Error::NotMackey { residual });
    }
    k.check()?;
    check_kernel_spaces(k.space(), f.space(), output)?;
    Ok(correlate_g_unchecked(k, f, output))
}

fn correlate_g_unchecked(k: &KernelG, f: &MackeyField, output: &FieldSpace) -> MackeyField {
    let g = output.group();
    let n = g.order();
    let values = (0..n)
        .map(|a| {
            let a_inv = g.inv(a);
            let mut acc = DVector::zeros(output.fiber_dim());
            for (b, v) in f.values().iter().enumerate() {
                acc += k.value(g.mul(a_inv, b)) * v;
            }
            acc
        })
        .collect();
    MackeyField::from_values_unchecked(output.clone(), values)
}

/// `[out](x) = Σ_y κ⃖(s₂(x)⁻¹ y) ρ₁(h₁(s₂(x)⁻¹ s₁(y))) f(y)`.
///
/// This equals `unlift(correlate_g(lift_c_to_g(κ⃖), lift(f)))` divided by
/// `|H₁|`. The kernel is not required to satisfy its constraint.
pub fn twisted_correlate_c(k: &KernelC, f: &SectionField, output: &FieldSpace) -> Result<SectionField> {
    let space = k.space();
    check_kernel_spaces(space, f.space(), output)?;
    let g = output.group();
    let cs1 = space.cosets1();
    let cs2 = output.cosets();
    let values = (0..cs2.num_cosets())
        .map(|x| {
            let s2_inv = g.inv(cs2.section(x));
            let mut acc = DVector::zeros(output.fiber_dim());
            for (y, v) in f.values().iter().enumerate() {
                let twist = cs1.h_of_element(g.mul(s2_inv, cs1.section(y)));
                acc += k.value(cs1.act(s2_inv, y)) * (space.rho1().matrix(twist) * v);
            }
            acc
        })
        .collect();
    SectionField::new(output.clone(), values)
}

/// The kernel carried by a layer.
#[derive(Clone, Debug)]
pub enum LayerKernel {
    G(KernelG),
    C(KernelC),
    D(KernelD),
    TwoArg(TwoArgKernel),
}

/// A linear map between two field spaces, acting on section fields.
#[derive(Clone, Debug)]
pub struct LayerSpec {
    input: FieldSpace,
    output: FieldSpace,
    kernel: LayerKernel,
}

impl LayerSpec {
    pub fn new(input: FieldSpace, output: FieldSpace, kernel: LayerKernel) -> Result<LayerSpec> {
        if !Arc::ptr_eq(input.group(), output.group()) && input.group().table() != output.group().table() {
            return Err(Error::GroupMismatch);
        }
        match &kernel {
            LayerKernel::G(k) => check_kernel_spaces(k.space(), &input, &output)?,
            LayerKernel::C(k) => check_kernel_spaces(k.space(), &input, &output)?,
            LayerKernel::D(k) => check_kernel_spaces(k.space(), &input, &output)?,
            LayerKernel::TwoArg(k) => {
                if k.value_shape() != (output.fiber_dim(), input.fiber_dim())
                    || k.group().order() != input.group().order()
                {
                    return Err(Error::ShapeMismatch("two-argument kernel shape".into()));
                }
            }
        }
        Ok(LayerSpec { input, output, kernel })
    }

    pub fn input(&self) -> &FieldSpace {
        &self.input
    }

    pub fn output(&self) -> &FieldSpace {
        &self.output
    }

    pub fn kernel(&self) -> &LayerKernel {
        &self.kernel
    }

    /// The map on section fields. `K_C` and `K_D` kernels act by twisted
    /// correlation, `K_G` and two-argument kernels through the lifted Mackey
    /// field, read back at the output section.
    pub fn apply(&self, f: &SectionField) -> Result<SectionField> {
        match &self.kernel {
            LayerKernel::C(k) => twisted_correlate_c(k, f, &self.output),
            LayerKernel::D(k) => {
                let kc = match expand_d_to_c(k) {
                    Ok(kc) => kc,
                    // Off the constraint space the expansion is only defined
                    // through a particular choice of H₂ element.
                    Err(Error::NotInKernel { .. }) => expand_d_to_c_first_choice(k),
                    Err(e) => return Err(e),
                };
                twisted_correlate_c(&kc, f, &self.output)
            }
            LayerKernel::G(k) => {
                let out = correlate_g_unchecked(k, &lift(f), &self.output);
                Ok(unlift_unchecked(&out))
            }
            LayerKernel::TwoArg(k) => {
                let raw = apply_two_arg(k, &lift(f))?;
                let values = self.output.cosets().sections().iter().map(|&s| raw[s].clone()).collect();
                SectionField::new(self.output.clone(), values)
            }
        }
    }

    /// Matrix of the map in the coset-major section bases.
    pub fn matrix(&self) -> Result<DMatrix<f64>> {
        let n1 = self.input.dim();
        let mut cols = Vec::with_capacity(n1);
        for i in 0..n1 {
            let mut e = DVector::zeros(n1);
            e[i] = 1.0;
            let f = SectionField::from_flat(&self.input, &e)?;
            cols.push(self.apply(&f)?.to_flat());
        }
        if cols.is_empty() {
            return Ok(DMatrix::zeros(self.output.dim(), 0));
        }
        Ok(DMatrix::from_columns(&cols))
    }
}

fn expand_d_to_c_first_choice(k: &KernelD) -> KernelC {
    let space = k.space();
    let values = (0..space.cosets1().num_cosets())
        .map(|y| {
            let h = omega_choices(space, y)[0];
            omega_value_unchecked(k, y, h)
        })
        .collect();
    KernelC::from_values_unchecked(space.clone(), values)
}

/// `max ‖Φ(π₁(u)f) − π₂(u)Φ(f)‖_F / max(‖Φ(f)‖_F, 1e-30)` over `trials`
/// random fields with entries uniform in `[-1, 1]` and all `u ∈ G` (a
/// random sample of 256 elements for larger groups).
pub fn equivariance_residual(layer: &LayerSpec, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Ok(0.0);
    }
    let mut rng = seeded_rng(seed);
    let group = layer.input.group().clone();
    let phi = layer.matrix()?;
    let fields: Vec<DVector<f64>> =
        (0..trials).map(|_| layer.input.random_section_field(&mut rng).to_flat()).collect();
    let elements: Vec<usize> = if group.order() > EXHAUSTIVE_ACTION_LIMIT {
        (0..EXHAUSTIVE_ACTION_LIMIT).map(|_| rng.random_range(0..group.order())).collect()
    } else {
        (0..group.order()).collect()
    };
    let images: Vec<DVector<f64>> = fields.iter().map(|f| &phi * f).collect();
    let mut worst: f64 = 0.0;
    for u in elements {
        let p1 = layer.input.induced_matrix(u);
        let p2 = layer.output.induced_matrix(u);
        let commutator = &phi * &p1 - &p2 * &phi;
        for (f, image) in fields.iter().zip(&images) {
            let r = (&commutator * f).norm() / image.norm().max(1e-30);
            worst = worst.max(r);
        }
    }
    Ok(worst)
}

/// A `K_C` kernel moved off the constraint space by a random perturbation
/// orthogonal to it, of Frobenius norm `amplitude · max(‖κ⃖‖_F, 1)`.
///
/// Returns `None` when the constraint space is everything, so no
/// perturbation can leave it.
pub fn inject_noise(k: &KernelC, amplitude: f64, seed: u64) -> Option<KernelC> {
    let space = k.space();
    let basis: Vec<DVector<f64>> = solve_basis_d(space)
        .kernels
        .iter()
        .map(|b| expand_d_to_c(b).expect("solved kernels satisfy their constraint").to_flat())
        .collect();
    let len = k.to_flat().len();
    let q = linalg::orthonormal_span(&basis, len);
    if q.ncols() == len {
        return None;
    }
    let mut rng = seeded_rng(seed);
    let mut noise = DVector::from_fn(len, |_, _| rng.random_range(-1.0..=1.0));
    if q.ncols() > 0 {
        noise -= &q * (q.transpose() * &noise);
        noise -= &q * (q.transpose() * &noise);
    }
    let norm = noise.norm();
    if norm == 0.0 {
        return None;
    }
    noise *= amplitude * k.to_flat().norm().max(1.0) / norm;
    let (d2, d1) = space.value_shape();
    let m = d1 * d2;
    let values = k
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v + linalg::unvectorize(&noise.as_slice()[i * m..(i + 1) * m], d2, d1))
        .collect();
    Some(KernelC::from_values_unchecked(space.clone(), values))
}

/// Orthonormal basis of all `Φ` with `Φ π₁(g) = π₂(g) Φ`, imposed on a
/// generating set of `G`. Columns are `vec(Φ)`, column-major in the
/// coset-major section bases.
pub fn intertwiner_oracle(input: &FieldSpace, output: &FieldSpace) -> Result<DMatrix<f64>> {
    let (n1, n2) = (input.dim(), output.dim());
    let unknowns = n1 * n2;
    if unknowns > ORACLE_UNKNOWN_LIMIT {
        return Err(Error::TooLarge { unknowns, limit: ORACLE_UNKNOWN_LIMIT });
    }
    let gens = input.group().generating_set();
    let id1 = DMatrix::<f64>::identity(n1, n1);
    let id2 = DMatrix::<f64>::identity(n2, n2);
    let mut system = DMatrix::zeros(gens.len() * unknowns, unknowns);
    for (i, &g) in gens.iter().enumerate() {
        let block = sandwich_operator(&id2, &input.induced_matrix(g)) - sandwich_operator(&output.induced_matrix(g), &id1);
        system.view_mut((i * unknowns, 0), (unknowns, unknowns)).copy_from(&block);
    }
    Ok(linalg::nullspace(&system))
}

/// The layer matrices `f ↦ unlift(correlate_g(b, lift(f)))` for each `K_D`
/// basis element `b` expanded to `K_G`, vectorized column-major.
pub fn correlation_maps(input: &FieldSpace, output: &FieldSpace, basis: &[KernelD]) -> Result<Vec<DVector<f64>>> {
    basis
        .iter()
        .map(|b| {
            let kg = lift_c_to_g(&expand_d_to_c(b)?)?;
            let layer = LayerSpec::new(input.clone(), output.clone(), LayerKernel::G(kg))?;
            Ok(linalg::vectorize(&layer.matrix()?))
        })
        .collect()
}

/// Outcome of comparing the correlation span with the oracle span.
#[derive(Clone, Debug, PartialEq)]
pub struct SpanMatch {
    pub solver_dim: usize,
    pub correlation_rank: usize,
    pub oracle_dim: usize,
    pub residual: f64,
    pub matched: bool,
}

/// Compares the span of `maps` with the orthonormal `oracle` basis: equal
/// dimensions and mutual projection residual below [`SPAN_TOL`].
pub fn span_match(maps: &[DVector<f64>], oracle: &DMatrix<f64>, solver_dim: usize) -> SpanMatch {
    let len = oracle.nrows();
    let q = linalg::orthonormal_span(maps, len);
    let oracle_cols: Vec<DVector<f64>> = oracle.column_iter().map(|c| c.into_owned()).collect();
    let residual =
        linalg::projection_residual(oracle, maps).max(linalg::projection_residual(&q, &oracle_cols));
    let matched = q.ncols() == oracle.ncols() && solver_dim == oracle.ncols() && residual < SPAN_TOL;
    SpanMatch { solver_dim, correlation_rank: q.ncols(), oracle_dim: oracle.ncols(), residual, matched }
}

/// Applies `scalar_fn` to every coordinate. Requires a permutation
/// representation, under which it commutes with the induced action.
pub fn pointwise_nonlinearity(f: &SectionField, scalar_fn: impl Fn(f64) -> f64) -> Result<SectionField> {
    if !f.space().rep().is_permutation() {
        return Err(Error::NotPermutationRep);
    }
    Ok(f.map_values(|v| v.map(&scalar_fn)))
}

/// Orthogonality tolerance for [`norm_nonlinearity`].
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// `v ↦ radial_fn(‖v‖) v / ‖v‖` per coset, with `0 ↦ 0`. Requires an
/// orthogonal representation.
pub fn norm_nonlinearity(f: &SectionField, radial_fn: impl Fn(f64) -> f64) -> Result<SectionField> {
    let residual = f.space().rep().orthogonality_residual();
    if residual > ORTHOGONALITY_TOL {
        return Err(Error::NotOrthogonalRep { residual });
    }
    Ok(f.map_values(|v| {
        let norm = v.norm();
        if norm == 0.0 {
            v.clone()
        } else {
            v * (radial_fn(norm) / norm)
        }
    }))
}

/// Largest `|N(π(u)f) − π(u)N(f)|` over all `u ∈ G`.
pub fn nonlinearity_residual(
    f: &SectionField,
    op: impl Fn(&SectionField) -> Result<SectionField>,
) -> Result<f64> {
    let image = op(f)?;
    let mut worst: f64 = 0.0;
    for u in 0..f.space().group().order() {
        let lhs = op(&act_c(u, f))?.to_flat();
        let rhs = act_c(u, &image).to_flat();
        worst = worst.max((lhs - rhs).amax());
    }
    Ok(worst)
}

/// `K_G` kernel viewed as a two-argument kernel.
pub fn two_arg_from_kernel(k: &KernelG) -> Result<TwoArgKernel> {
    TwoArgKernel::from_one_arg(k.space().group().clone(), k.values())
}
