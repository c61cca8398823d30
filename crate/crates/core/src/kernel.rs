//! Equivariant convolution kernels in three equivalent forms, their solvers,
//! and the isomorphisms between the forms.
//!
//! A kernel maps fields of type `(H₁, ρ₁)` to fields of type `(H₂, ρ₂)` and
//! takes values in `d₂ × d₁` matrices:
//!
//! * [`KernelG`]: `κ : G → Hom(V₁, V₂)` with `κ(h₂ g h₁) = ρ₂(h₂) κ(g) ρ₁(h₁)`.
//! * [`KernelC`]: `κ⃖ : G/H₁ → Hom(V₁, V₂)` with
//!   `κ⃖(h₂ x) = ρ₂(h₂) κ⃖(x) ρ₁(h₁(x, h₂))⁻¹`.
//! * [`KernelD`]: `κ̄ : H₂\G/H₁ → Hom(V₁, V₂)` with
//!   `κ̄(x) = ρ₂(h) κ̄(x) ρ₁ˣ(h)⁻¹` for `h` in the stabilizer of `x`.
//!
//! `K_D` values are the `K_G` values at the double coset representatives,
//! `κ̄(x) = κ(γ(x))`. When the coset section satisfies `s₁(γ(x)H₁) = γ(x)`
//! (always true for the default policies) this is the same as
//! `κ⃖(γ(x)H₁)`; otherwise the conversions carry the correcting factor
//! `ρ₁(h₁(γ(x)))` so that `ρ₁ˣ(h) = ρ₁(γ(x)⁻¹ h γ(x))` stays valid for any
//! choice of section and representatives.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::coset::CosetSpace;
use crate::double_coset::{DoubleCosetSpace, GammaPolicy};
use crate::error::{Error, Result};
use crate::field::FieldSpace;
use crate::group::Group;
use crate::linalg::{self, sandwich_operator, RightSvd};
use crate::rep::{rho1_x, Representation};

/// Residual (relative to `max(1, max |entry|)`) above which a kernel is
/// rejected as violating its constraint.
pub const KERNEL_TOL: f64 = 1e-10;

/// Unknown-count limit for [`solve_basis_g_naive`].
pub const NAIVE_UNKNOWN_LIMIT: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelForm {
    G,
    C,
    D,
}

impl KernelForm {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelForm::G => "G",
            KernelForm::C => "C",
            KernelForm::D => "D",
        }
    }
}

impl fmt::Display for KernelForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything a kernel needs to know about its input and output types.
#[derive(Clone, Debug)]
pub struct KernelSpace {
    cosets1: Arc<CosetSpace>,
    dcosets: Arc<DoubleCosetSpace>,
    rho1: Arc<Representation>,
    rho2: Arc<Representation>,
}

impl KernelSpace {
    pub fn new(
        cosets1: Arc<CosetSpace>,
        dcosets: Arc<DoubleCosetSpace>,
        rho1: Arc<Representation>,
        rho2: Arc<Representation>,
    ) -> Result<KernelSpace> {
        if cosets1.subgroup() != rho1.subgroup()
            || dcosets.right() != rho1.subgroup()
            || dcosets.left() != rho2.subgroup()
        {
            return Err(Error::GroupMismatch);
        }
        Ok(KernelSpace { cosets1, dcosets, rho1, rho2 })
    }

    /// The kernel space for maps from `input` fields to `output` fields.
    pub fn between(input: &FieldSpace, output: &FieldSpace, gamma: GammaPolicy) -> Result<KernelSpace> {
        let dcs = DoubleCosetSpace::new(output.rep().subgroup(), input.rep().subgroup(), gamma)?;
        KernelSpace::new(input.cosets().clone(), Arc::new(dcs), input.rep().clone(), output.rep().clone())
    }

    pub fn group(&self) -> &Arc<Group> {
        self.cosets1.group()
    }

    pub fn cosets1(&self) -> &Arc<CosetSpace> {
        &self.cosets1
    }

    pub fn dcosets(&self) -> &Arc<DoubleCosetSpace> {
        &self.dcosets
    }

    pub fn rho1(&self) -> &Arc<Representation> {
        &self.rho1
    }

    pub fn rho2(&self) -> &Arc<Representation> {
        &self.rho2
    }

    /// `(d₂, d₁)`, the shape of every kernel value.
    pub fn value_shape(&self) -> (usize, usize) {
        (self.rho2.dim(), self.rho1.dim())
    }

    fn zero_value(&self) -> DMatrix<f64> {
        let (r, c) = self.value_shape();
        DMatrix::zeros(r, c)
    }

    /// Number of domain points for a form: `|G|`, `|G/H₁|` or `|H₂\G/H₁|`.
    pub fn support_size(&self, form: KernelForm) -> usize {
        match form {
            KernelForm::G => self.group().order(),
            KernelForm::C => self.cosets1.num_cosets(),
            KernelForm::D => self.dcosets.num(),
        }
    }

    /// `ρ₁(h₁(γ(x)))`, trivial when `s₁(γ(x)H₁) = γ(x)`.
    fn gamma_twist(&self, x: usize) -> &DMatrix<f64> {
        self.rho1.matrix(self.cosets1.h_of_element(self.dcosets.gamma(x)))
    }
}

/// Common behaviour of the three kernel forms.
pub trait Kernel: Sized + Clone {
    const FORM: KernelForm;

    fn space(&self) -> &Arc<KernelSpace>;

    fn values(&self) -> &[DMatrix<f64>];

    /// Wraps values without checking the constraint.
    fn from_values_unchecked(space: Arc<KernelSpace>, values: Vec<DMatrix<f64>>) -> Self;

    /// Largest absolute violation of the form's constraint.
    fn constraint_residual(&self) -> f64;

    /// Builds a kernel, rejecting values that violate the constraint.
    fn new(space: Arc<KernelSpace>, values: Vec<DMatrix<f64>>) -> Result<Self> {
        let expected = space.support_size(Self::FORM);
        let shape = space.value_shape();
        if values.len() != expected || values.iter().any(|v| v.shape() != shape) {
            return Err(Error::ShapeMismatch(format!(
                "{}-form kernel needs {expected} values of shape {shape:?}",
                Self::FORM
            )));
        }
        let k = Self::from_values_unchecked(space, values);
        k.check()?;
        Ok(k)
    }

    fn zeros(space: Arc<KernelSpace>) -> Self {
        let values = vec![space.zero_value(); space.support_size(Self::FORM)];
        Self::from_values_unchecked(space, values)
    }

    /// Constraint residual relative to the kernel's magnitude.
    fn relative_residual(&self) -> f64 {
        let scale = self.values().iter().map(|v| v.amax()).fold(1.0, f64::max);
        self.constraint_residual() / scale
    }

    fn check(&self) -> Result<()> {
        let residual = self.relative_residual();
        if residual > KERNEL_TOL {
            return Err(Error::NotInKernel { form: Self::FORM.as_str(), residual });
        }
        Ok(())
    }

    /// All values vectorized (column-major) and concatenated by support
    /// index.
    fn to_flat(&self) -> DVector<f64> {
        let mut out = Vec::new();
        for v in self.values() {
            out.extend_from_slice(v.as_slice());
        }
        DVector::from_vec(out)
    }
}

macro_rules! kernel_type {
    ($(#[$meta:meta])* $name:ident, $form:expr) => {
        $(#[$meta])*
        #[derive(Clone, Debug)]
        pub struct $name {
            space: Arc<KernelSpace>,
            values: Vec<DMatrix<f64>>,
        }

        impl $name {
            pub fn value(&self, i: usize) -> &DMatrix<f64> {
                &self.values[i]
            }

            /// Adds `other` scaled by `alpha`; both must share a space.
            pub fn add_scaled(&self, alpha: f64, other: &$name) -> $name {
                let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b * alpha).collect();
                $name { space: self.space.clone(), values }
            }
        }
    };
}

kernel_type!(
    /// A bi-equivariant kernel on `G`.
    KernelG,
    KernelForm::G
);
kernel_type!(
    /// A left-equivariant kernel on `G/H₁`.
    KernelC,
    KernelForm::C
);
kernel_type!(
    /// A stabilizer-equivariant kernel on `H₂\G/H₁`.
    KernelD,
    KernelForm::D
);

impl Kernel for KernelG {
    const FORM: KernelForm = KernelForm::G;

    fn space(&self) -> &Arc<KernelSpace> {
        &self.space
    }

    fn values(&self) -> &[DMatrix<f64>] {
        &self.values
    }

    fn from_values_unchecked(space: Arc<KernelSpace>, values: Vec<DMatrix<f64>>) -> Self {
        KernelG { space, values }
    }

    fn constraint_residual(&self) -> f64 {
        let s = &self.space;
        let g = s.group();
        let mut worst: f64 = 0.0;
        for a in 0..g.order() {
            for &h2 in s.rho2.subgroup().elements() {
                let left = s.rho2.matrix(h2) * &self.values[a];
                let h2a = g.mul(h2, a);
                for &h1 in s.rho1.subgroup().elements() {
                    let expected = &left * s.rho1.matrix(h1);
                    let diff = (&self.values[g.mul(h2a, h1)] - expected).amax();
                    worst = worst.max(diff);
                }
            }
        }
        worst
    }
}

impl Kernel for KernelC {
    const FORM: KernelForm = KernelForm::C;

    fn space(&self) -> &Arc<KernelSpace> {
        &self.space
    }

    fn values(&self) -> &[DMatrix<f64>] {
        &self.values
    }

    fn from_values_unchecked(space: Arc<KernelSpace>, values: Vec<DMatrix<f64>>) -> Self {
        KernelC { space, values }
    }

    fn constraint_residual(&self) -> f64 {
        let s = &self.space;
        let cs = &s.cosets1;
        let mut worst: f64 = 0.0;
        for x in 0..cs.num_cosets() {
            for &h2 in s.rho2.subgroup().elements() {
                let expected =
                    s.rho2.matrix(h2) * &self.values[x] * s.rho1.inverse_matrix(cs.h(x, h2));
                let diff = (&self.values[cs.act(h2, x)] - expected).amax();
                worst = worst.max(diff);
            }
        }
        worst
    }
}

impl Kernel for KernelD {
    const FORM: KernelForm = KernelForm::D;

    fn space(&self) -> &Arc<KernelSpace> {
        &self.space
    }

    fn values(&self) -> &[DMatrix<f64>] {
        &self.values
    }

    fn from_values_unchecked(space: Arc<KernelSpace>, values: Vec<DMatrix<f64>>) -> Self {
        KernelD { space, values }
    }

    fn constraint_residual(&self) -> f64 {
        let s = &self.space;
        let dcs = &s.dcosets;
        let g = s.group();
        let mut worst: f64 = 0.0;
        for x in 0..dcs.num() {
            for &h in dcs.stabilizer(x).elements() {
                let rho1x_inv = rho1_x(&s.rho1, dcs, x, g.inv(h)).expect("stabilizer element");
                let expected = s.rho2.matrix(h) * &self.values[x] * rho1x_inv;
                worst = worst.max((&self.values[x] - expected).amax());
            }
        }
        worst
    }
}

/// A basis of one kernel form.
#[derive(Clone, Debug)]
pub struct KernelBasis<K> {
    pub kernels: Vec<K>,
}

impl<K: Kernel> KernelBasis<K> {
    pub fn form(&self) -> KernelForm {
        K::FORM
    }

    pub fn dim(&self) -> usize {
        self.kernels.len()
    }

    /// Numerical rank of the kernels as flat vectors.
    pub fn rank(&self) -> usize {
        flat_rank(&self.kernels)
    }
}

/// Numerical rank of a list of kernels as flat vectors.
pub fn flat_rank<K: Kernel>(kernels: &[K]) -> usize {
    if kernels.is_empty() {
        return 0;
    }
    let cols: Vec<DVector<f64>> = kernels.iter().map(Kernel::to_flat).collect();
    linalg::rank(&DMatrix::from_columns(&cols))
}

/// Solves for a basis of `K_D`, one double coset at a time.
///
/// For each double coset `x` the constraint `κ̄ = ρ₂(h) κ̄ ρ₁ˣ(h)⁻¹` is
/// imposed for every `h` in the stabilizer; each basis element is supported
/// on a single double coset, and the per-coset bases are orthonormal in the
/// Frobenius inner product.
pub fn solve_basis_d(space: &Arc<KernelSpace>) -> KernelBasis<KernelD> {
    let dcs = &space.dcosets;
    let g = space.group();
    let (d2, d1) = space.value_shape();
    let m = d1 * d2;
    let mut kernels = Vec::new();
    for x in 0..dcs.num() {
        let stab = dcs.stabilizer(x);
        let identity = DMatrix::<f64>::identity(m, m);
        let mut rows: Vec<DMatrix<f64>> = Vec::new();
        for &h in stab.elements() {
            if h == 0 {
                continue;
            }
            let rho1x_inv = rho1_x(&space.rho1, dcs, x, g.inv(h)).expect("stabilizer element");
            rows.push(&identity - sandwich_operator(space.rho2.matrix(h), &rho1x_inv));
        }
        let null = if rows.is_empty() {
            linalg::canonical_basis(&identity)
        } else {
            linalg::nullspace(&stack_rows(&rows, m))
        };
        for col in null.column_iter() {
            let mut values = vec![space.zero_value(); dcs.num()];
            values[x] = linalg::unvectorize(col.as_slice(), d2, d1);
            kernels.push(KernelD { space: space.clone(), values });
        }
    }
    KernelBasis { kernels }
}

fn stack_rows(blocks: &[DMatrix<f64>], cols: usize) -> DMatrix<f64> {
    let total: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(total, cols);
    let mut offset = 0;
    for b in blocks {
        out.view_mut((offset, 0), (b.nrows(), cols)).copy_from(b);
        offset += b.nrows();
    }
    out
}

/// Solves `κ(h₂ g h₁) = ρ₂(h₂) κ(g) ρ₁(h₁)` directly over all
/// `(g, h₁, h₂)`, as an oracle for [`solve_basis_d`].
///
/// The system never couples `κ(g)` and `κ(g')` unless some constraint
/// links them, so it is split into the connected components of that
/// coupling (found by union-find over the constraint list) and each block
/// is solved separately, with one shared singular value cutoff. Exact
/// duplicate constraint rows are dropped.
pub fn solve_basis_g_naive(space: &Arc<KernelSpace>) -> Result<KernelBasis<KernelG>> {
    let g = space.group();
    let n = g.order();
    let (d2, d1) = space.value_shape();
    let m = d1 * d2;
    let unknowns = n * m;
    if unknowns > NAIVE_UNKNOWN_LIMIT {
        return Err(Error::TooLarge { unknowns, limit: NAIVE_UNKNOWN_LIMIT });
    }
    let h1s = space.rho1.subgroup().elements();
    let h2s = space.rho2.subgroup().elements();

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    for a in 0..n {
        for &h2 in h2s {
            for &h1 in h1s {
                let b = g.mul_all(&[h2, a, h1]);
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut component_of = vec![usize::MAX; n];
    for a in 0..n {
        let root = find(&mut parent, a);
        if component_of[root] == usize::MAX {
            component_of[root] = components.len();
            components.push(Vec::new());
        }
        components[component_of[root]].push(a);
    }

    let identity = DMatrix::<f64>::identity(m, m);
    let mut solved: Vec<(Vec<usize>, RightSvd)> = Vec::new();
    for comp in components {
        let mut local = vec![usize::MAX; n];
        for (i, &a) in comp.iter().enumerate() {
            local[a] = i;
        }
        let cols = comp.len() * m;
        let mut seen: HashSet<(usize, usize, Vec<u64>)> = HashSet::new();
        let mut blocks: Vec<DMatrix<f64>> = Vec::new();
        for &a in &comp {
            for &h2 in h2s {
                for &h1 in h1s {
                    let b = g.mul_all(&[h2, a, h1]);
                    // vec(κ(h₂ a h₁)) − (ρ₁(h₁)ᵀ ⊗ ρ₂(h₂)) vec(κ(a)) = 0
                    let op = sandwich_operator(space.rho2.matrix(h2), space.rho1.matrix(h1));
                    if a == b && op == identity {
                        continue;
                    }
                    let key = (a, b, op.iter().map(|v| v.to_bits()).collect());
                    if !seen.insert(key) {
                        continue;
                    }
                    let mut row = DMatrix::zeros(m, cols);
                    let mut target = row.view_mut((0, local[b] * m), (m, m));
                    target += &identity;
                    let mut source = row.view_mut((0, local[a] * m), (m, m));
                    source -= &op;
                    blocks.push(row);
                }
            }
        }
        let system = stack_rows(&blocks, cols);
        solved.push((comp, RightSvd::new(&system)));
    }

    let scale = solved.iter().map(|(_, svd)| svd.max_singular_value()).fold(0.0, f64::max);
    let mut kernels = Vec::new();
    for (comp, svd) in &solved {
        let null = svd.nullspace(scale);
        for col in null.column_iter() {
            let mut values = vec![space.zero_value(); n];
            for (i, &a) in comp.iter().enumerate() {
                values[a] = linalg::unvectorize(&col.as_slice()[i * m..(i + 1) * m], d2, d1);
            }
            kernels.push(KernelG { space: space.clone(), values });
        }
    }
    Ok(KernelBasis { kernels })
}

/// `Ω_K`: expands a `K_D` kernel to `K_C`.
///
/// For each coset `y`, picks the first `h ∈ H₂` with `h γ(x) H₁ = y`
/// (where `x = H₂ y`) and sets `κ⃖(y) = ρ₂(h) κ̄(x) ρ₁((hγ(x))⁻¹ s₁(y))`.
pub fn expand_d_to_c(k: &KernelD) -> Result<KernelC> {
    k.check()?;
    let s = &k.space;
    let cs = &s.cosets1;
    let dcs = &s.dcosets;
    let values = (0..cs.num_cosets())
        .map(|y| {
            let x = dcs.dcoset_of(cs.section(y));
            let base = cs.coset_of(dcs.gamma(x));
            let h = *dcs
                .left()
                .elements()
                .iter()
                .find(|&&h| cs.act(h, base) == y)
                .expect("y lies in the H₂-orbit of γ(x)H₁");
            omega_value(k, y, h)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KernelC { space: s.clone(), values })
}

/// The value `[Ω_K κ̄](y)` computed through a specific `h ∈ H₂` with
/// `h γ(H₂y) H₁ = y`. Every valid `h` gives the same value when `κ̄ ∈ K_D`.
pub fn omega_value(k: &KernelD, y: usize, h: usize) -> Result<DMatrix<f64>> {
    let s = &k.space;
    let cs = &s.cosets1;
    let dcs = &s.dcosets;
    let x = dcs.dcoset_of(cs.section(y));
    let gamma = dcs.gamma(x);
    if !dcs.left().contains(h) || cs.act(h, cs.coset_of(gamma)) != y {
        return Err(Error::ShapeMismatch(format!(
            "element {h} does not carry γ({x})H₁ to coset {y}"
        )));
    }
    Ok(omega_value_unchecked(k, y, h))
}

pub(crate) fn omega_value_unchecked(k: &KernelD, y: usize, h: usize) -> DMatrix<f64> {
    let s = &k.space;
    let cs = &s.cosets1;
    let g = s.group();
    let x = s.dcosets.dcoset_of(cs.section(y));
    let hg = g.mul(h, s.dcosets.gamma(x));
    let twist = g.mul(g.inv(hg), cs.section(y));
    s.rho2.matrix(h) * &k.values[x] * s.rho1.matrix(twist)
}

/// Every `h ∈ H₂` carrying `γ(H₂y)H₁` to `y`.
pub fn omega_choices(space: &KernelSpace, y: usize) -> Vec<usize> {
    let cs = &space.cosets1;
    let dcs = &space.dcosets;
    let base = cs.coset_of(dcs.gamma(dcs.dcoset_of(cs.section(y))));
    dcs.left().elements().iter().copied().filter(|&h| cs.act(h, base) == y).collect()
}

/// `Ω_K⁻¹`: `κ̄(x) = κ⃖(γ(x)H₁) ρ₁(h₁(γ(x)))`.
pub fn restrict_c_to_d(k: &KernelC) -> Result<KernelD> {
    k.check()?;
    let s = &k.space;
    let values = (0..s.dcosets.num())
        .map(|x| &k.values[s.cosets1.coset_of(s.dcosets.gamma(x))] * s.gamma_twist(x))
        .collect();
    Ok(KernelD { space: s.clone(), values })
}

/// `Λ_K`: `κ(g) = κ⃖(gH₁) ρ₁(h₁(g))`.
pub fn lift_c_to_g(k: &KernelC) -> Result<KernelG> {
    k.check()?;
    Ok(lift_c_to_g_unchecked(k))
}

pub(crate) fn lift_c_to_g_unchecked(k: &KernelC) -> KernelG {
    let s = &k.space;
    let cs = &s.cosets1;
    let values = (0..s.group().order())
        .map(|g| &k.values[cs.coset_of(g)] * s.rho1.matrix(cs.h_of_element(g)))
        .collect();
    KernelG { space: s.clone(), values }
}

/// `Λ_K⁻¹`: `κ⃖(x) = κ(s₁(x))`.
pub fn restrict_g_to_c(k: &KernelG) -> Result<KernelC> {
    k.check()?;
    let values = k.space.cosets1.sections().iter().map(|&s| k.values[s].clone()).collect();
    Ok(KernelC { space: k.space.clone(), values })
}

/// `κ̄(x) = κ(γ(x))`.
pub fn restrict_g_to_d(k: &KernelG) -> Result<KernelD> {
    k.check()?;
    let values = k.space.dcosets.gammas().iter().map(|&c| k.values[c].clone()).collect();
    Ok(KernelD { space: k.space.clone(), values })
}

/// `Λ_K ∘ Ω_K`.
pub fn expand_d_to_g(k: &KernelD) -> Result<KernelG> {
    lift_c_to_g(&expand_d_to_c(k)?)
}
