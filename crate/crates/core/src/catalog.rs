//! Builtin groups with named subgroups, representations and a standard list
//! of kernel configurations.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::coset::{CosetSpace, SectionPolicy};
use crate::double_coset::GammaPolicy;
use crate::error::{Error, Result};
use crate::field::FieldSpace;
use crate::group::{build_subgroup, direct_product, semidirect_product, Group, Subgroup};
use crate::kernel::KernelSpace;
use crate::rep::{rotation_order, Representation};

/// Names accepted by [`make`], with their parameter lists.
pub const ENTRY_NAMES: &[(&str, &str)] = &[
    ("cyclic", "n"),
    ("dihedral", "n"),
    ("d3_fig5", ""),
    ("p4_torus", "n=3"),
    ("p4m_torus", "n=3"),
    ("octahedral", ""),
    ("direct_product", "m=2, n=2"),
    ("semidirect", "n=3, m=2, a=2"),
];

/// A catalog group with its named subgroups.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: String,
    pub params: Vec<usize>,
    pub group: Arc<Group>,
    /// Named subgroups, in a fixed order.
    pub subgroups: Vec<(String, Subgroup)>,
    /// The canonical stabilizer subgroup.
    pub stabilizer: String,
    /// Sections that differ from (or pin down) the smallest-index policy.
    pub sections: BTreeMap<String, Vec<usize>>,
    /// Whether the group was built as `N ⋊ H` with `H` the canonical
    /// stabilizer and section `s(nH) = n`.
    pub semidirect: bool,
}

impl CatalogEntry {
    /// The entry name with its parameters, e.g. `dihedral(3)`.
    pub fn display_name(&self) -> String {
        if self.params.is_empty() {
            self.name.clone()
        } else {
            let p: Vec<String> = self.params.iter().map(usize::to_string).collect();
            format!("{}({})", self.name, p.join(","))
        }
    }

    pub fn subgroup(&self, name: &str) -> Result<&Subgroup> {
        self.subgroups
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
            .ok_or_else(|| Error::UnknownName(format!("subgroup `{name}` of {}", self.display_name())))
    }

    /// The section policy the catalog uses for a subgroup.
    pub fn section_policy(&self, subgroup: &str) -> SectionPolicy {
        match self.sections.get(subgroup) {
            Some(s) => SectionPolicy::Explicit(s.clone()),
            None => SectionPolicy::SmallestIndex,
        }
    }

    /// Names of the representations shipped for a subgroup: `trivial`,
    /// `regular`, and `rotation(k)` for `1 ≤ k ≤ n/2` when the subgroup is
    /// cyclic or dihedral with rotation order `n ≥ 3`.
    pub fn rep_names(&self, subgroup: &str) -> Result<Vec<String>> {
        let h = self.subgroup(subgroup)?;
        let mut names = vec!["trivial".to_string(), "regular".to_string()];
        if let Some(n) = rotation_order(h).filter(|&n| n >= 3) {
            names.extend((1..=n / 2).map(|k| format!("rotation({k})")));
        }
        Ok(names)
    }
}

/// A representation description.
#[derive(Clone, Debug, PartialEq)]
pub enum RepSpec {
    Trivial,
    Regular,
    Rotation(i64),
    Sum(Vec<RepSpec>),
    /// One matrix per subgroup element, in sorted element order.
    Explicit(Vec<DMatrix<f64>>),
}

impl RepSpec {
    pub fn build(&self, subgroup: &Subgroup) -> Result<Representation> {
        match self {
            RepSpec::Trivial => Ok(Representation::trivial(subgroup)),
            RepSpec::Regular => Ok(Representation::regular(subgroup)),
            RepSpec::Rotation(k) => Representation::rotation(subgroup, *k),
            RepSpec::Sum(parts) => {
                let mut iter = parts.iter();
                let first = iter
                    .next()
                    .ok_or_else(|| Error::BadParams("empty direct sum".into()))?
                    .build(subgroup)?;
                iter.try_fold(first, |acc, p| Representation::direct_sum(&acc, &p.build(subgroup)?))
            }
            RepSpec::Explicit(m) => Representation::new(subgroup, m.clone(), "explicit"),
        }
    }

    /// Parses `trivial`, `regular` or `rotation(k)`.
    pub fn parse(name: &str) -> Result<RepSpec> {
        match name {
            "trivial" => Ok(RepSpec::Trivial),
            "regular" => Ok(RepSpec::Regular),
            _ => name
                .strip_prefix("rotation(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|k| k.parse().ok())
                .map(RepSpec::Rotation)
                .ok_or_else(|| Error::UnknownName(format!("representation `{name}`"))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            RepSpec::Trivial => "trivial".into(),
            RepSpec::Regular => "regular".into(),
            RepSpec::Rotation(k) => format!("rotation({k})"),
            RepSpec::Sum(parts) => parts.iter().map(RepSpec::label).collect::<Vec<_>>().join("+"),
            RepSpec::Explicit(_) => "explicit".into(),
        }
    }
}

fn param(params: &[usize], i: usize, default: Option<usize>, name: &str) -> Result<usize> {
    params
        .get(i)
        .copied()
        .or(default)
        .ok_or_else(|| Error::BadParams(format!("{name} needs parameter {}", i + 1)))
}

/// Builds a catalog entry by name.
pub fn make(name: &str, params: &[usize]) -> Result<CatalogEntry> {
    let max_params = ENTRY_NAMES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, p)| if p.is_empty() { 0 } else { p.split(',').count() })
        .ok_or_else(|| Error::UnknownName(name.to_string()))?;
    if params.len() > max_params {
        return Err(Error::BadParams(format!("{name} takes at most {max_params} parameters")));
    }
    match name {
        "cyclic" => cyclic(param(params, 0, None, name)?),
        "dihedral" => dihedral(param(params, 0, None, name)?, "dihedral"),
        "d3_fig5" => {
            let mut entry = dihedral(3, "d3_fig5")?;
            entry.params.clear();
            // s(H) = e, s(rH) = r, s(r²H) = r²f.
            entry.sections.insert("flips".into(), vec![0, 1, 5]);
            Ok(entry)
        }
        "p4_torus" => p4_torus(param(params, 0, Some(3), name)?, false),
        "p4m_torus" => p4_torus(param(params, 0, Some(3), name)?, true),
        "octahedral" => octahedral(),
        "direct_product" => {
            let m = param(params, 0, Some(2), name)?;
            let n = param(params, 1, Some(2), name)?;
            direct(m, n)
        }
        "semidirect" => {
            let n = param(params, 0, Some(3), name)?;
            let m = param(params, 1, Some(2), name)?;
            let a = param(params, 2, Some(2), name)?;
            cyclic_semidirect(n, m, a)
        }
        _ => Err(Error::UnknownName(name.to_string())),
    }
}

/// Every entry at its default (or smallest interesting) parameters.
pub fn default_entries() -> Vec<CatalogEntry> {
    [
        ("cyclic", vec![4]),
        ("dihedral", vec![3]),
        ("d3_fig5", vec![]),
        ("p4_torus", vec![]),
        ("p4m_torus", vec![]),
        ("octahedral", vec![]),
        ("direct_product", vec![]),
        ("semidirect", vec![]),
    ]
    .into_iter()
    .map(|(n, p)| make(n, &p).expect("default catalog parameters are valid"))
    .collect()
}

fn check_positive(n: usize, what: &str) -> Result<()> {
    if n < 1 {
        return Err(Error::BadParams(format!("{what} must be at least 1")));
    }
    Ok(())
}

fn base_subgroups(group: &Arc<Group>) -> Vec<(String, Subgroup)> {
    vec![("trivial".into(), Subgroup::trivial(group)), ("whole".into(), Subgroup::whole(group))]
}

fn power_label(base: &str, k: usize) -> String {
    match k {
        0 => String::new(),
        1 => base.to_string(),
        _ => format!("{base}^{k}"),
    }
}

fn cyclic_group(n: usize) -> Result<Group> {
    check_positive(n, "cyclic order")?;
    let labels = (0..n).map(|k| if k == 0 { "e".into() } else { power_label("g", k) }).collect();
    let g = Group::from_fn(n, labels, |a, b| (a + b) % n)?;
    g.with_generators(if n > 1 { vec![1] } else { vec![] })
}

fn cyclic(n: usize) -> Result<CatalogEntry> {
    let group = Arc::new(cyclic_group(n)?);
    let mut subgroups = base_subgroups(&group);
    for d in 2..n {
        if n.is_multiple_of(d) {
            subgroups.push((format!("c{d}"), build_subgroup(&group, &[n / d])?));
        }
    }
    Ok(CatalogEntry {
        name: "cyclic".into(),
        params: vec![n],
        group,
        subgroups,
        stabilizer: "trivial".into(),
        sections: BTreeMap::new(),
        semidirect: false,
    })
}

/// `r^a f^b` at index `a + n·b`.
fn dihedral_group(n: usize) -> Result<Group> {
    check_positive(n, "dihedral rotation order")?;
    let labels = (0..2 * n)
        .map(|i| {
            let (a, b) = (i % n, i / n);
            match (a, b) {
                (0, 0) => "e".to_string(),
                (_, 0) => power_label("r", a),
                _ => format!("{}f", power_label("r", a)),
            }
        })
        .collect();
    let g = Group::from_fn(2 * n, labels, |x, y| {
        let (a, b, c, d) = (x % n, x / n, y % n, y / n);
        let rot = if b == 0 { (a + c) % n } else { (a + n - c) % n };
        rot + n * ((b + d) % 2)
    })?;
    g.with_generators(if n > 1 { vec![1, n] } else { vec![n] })
}

fn dihedral(n: usize, name: &str) -> Result<CatalogEntry> {
    let group = Arc::new(dihedral_group(n)?);
    let mut subgroups = base_subgroups(&group);
    subgroups.push(("rotations".into(), build_subgroup(&group, &[1 % n])?));
    subgroups.push(("flips".into(), build_subgroup(&group, &[n])?));
    Ok(CatalogEntry {
        name: name.into(),
        params: vec![n],
        group,
        subgroups,
        stabilizer: "flips".into(),
        sections: BTreeMap::new(),
        semidirect: false,
    })
}

/// `Z_n² ⋊ C4` (or `⋊ D4`), the wallpaper groups p4 / p4m on an `n × n`
/// torus. The point group acts on translations `(i, j)` at index `i + n·j`.
fn p4_torus(n: usize, mirror: bool) -> Result<CatalogEntry> {
    check_positive(n, "torus size")?;
    let zn = cyclic_group(n)?;
    let translations = direct_product(&zn, &zn);
    let point = if mirror { dihedral_group(4)? } else { cyclic_group(4)? };
    let rotate = |(i, j): (usize, usize)| ((n - j) % n, i);
    let mirror_x = |(i, j): (usize, usize)| (i, (n - j) % n);
    let action: Vec<Vec<usize>> = (0..point.order())
        .map(|p| {
            let (k, flip) = (p % 4, p / 4);
            (0..n * n)
                .map(|t| {
                    let mut v = (t % n, t / n);
                    if flip == 1 {
                        v = mirror_x(v);
                    }
                    for _ in 0..k {
                        v = rotate(v);
                    }
                    v.0 + n * v.1
                })
                .collect()
        })
        .collect();
    let sd = semidirect_product(&translations, &point, &action)?;
    let nn = n * n;
    let mut gens = vec![1 % nn, nn];
    if mirror {
        gens.push(4 * nn);
    }
    gens.retain(|&g| g != 0);
    gens.dedup();
    let group = Arc::new(Group::clone(&sd.group).with_generators(gens)?);
    let complement = Subgroup::from_elements(&group, sd.complement.elements())?;
    let normal = Subgroup::from_elements(&group, sd.normal.elements())?;
    let stab_name = if mirror { "d4" } else { "rotations" };
    let mut subgroups = base_subgroups(&group);
    subgroups.push((stab_name.into(), complement));
    if mirror {
        subgroups.push(("rotations".into(), build_subgroup(&group, &[nn])?));
    }
    subgroups.push(("translations".into(), normal));
    let mut sections = BTreeMap::new();
    sections.insert(stab_name.to_string(), sd.section.clone());
    Ok(CatalogEntry {
        name: if mirror { "p4m_torus" } else { "p4_torus" }.into(),
        params: vec![n],
        group,
        subgroups,
        stabilizer: stab_name.into(),
        sections,
        semidirect: true,
    })
}

/// The 24 rotations of the octahedron as permutations of its vertices
/// `+x, +y, +z, −x, −y, −z` (vertex `v` is antipodal to `v + 3 mod 6`),
/// sorted lexicographically. The product is composition, `(ab)(v) = a(b(v))`.
fn octahedral() -> Result<CatalogEntry> {
    type Perm = [usize; 6];
    let about_x: Perm = [0, 2, 4, 3, 5, 1];
    let about_z: Perm = [1, 3, 2, 4, 0, 5];
    let compose = |a: &Perm, b: &Perm| -> Perm { std::array::from_fn(|v| a[b[v]]) };
    let mut perms: Vec<Perm> = vec![[0, 1, 2, 3, 4, 5]];
    let mut frontier = perms.clone();
    while let Some(p) = frontier.pop() {
        for g in [&about_x, &about_z] {
            let q = compose(g, &p);
            if !perms.contains(&q) {
                perms.push(q);
                frontier.push(q);
            }
        }
    }
    perms.sort_unstable();
    let index: HashMap<Perm, usize> = perms.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let labels = perms.iter().map(|p| p.iter().map(usize::to_string).collect::<String>()).collect();
    let find = |p: &Perm| index[p];
    let group = Group::from_fn(perms.len(), labels, |a, b| find(&compose(&perms[a], &perms[b])))?
        .with_generators(vec![find(&about_x), find(&about_z)])?;
    let group = Arc::new(group);
    let mut subgroups = base_subgroups(&group);
    subgroups.push(("vertex".into(), build_subgroup(&group, &[find(&about_x)])?));
    subgroups.push(("edge".into(), build_subgroup(&group, &[find(&[1, 0, 5, 4, 3, 2])])?));
    subgroups.push(("face".into(), build_subgroup(&group, &[find(&[1, 2, 0, 4, 5, 3])])?));
    Ok(CatalogEntry {
        name: "octahedral".into(),
        params: vec![],
        group,
        subgroups,
        stabilizer: "vertex".into(),
        sections: BTreeMap::new(),
        semidirect: false,
    })
}

/// `C_m × C_n`.
fn direct(m: usize, n: usize) -> Result<CatalogEntry> {
    let (a, b) = (cyclic_group(m)?, cyclic_group(n)?);
    let mut gens = Vec::new();
    if m > 1 {
        gens.push(1);
    }
    if n > 1 {
        gens.push(m);
    }
    let group = Arc::new(direct_product(&a, &b).with_generators(gens)?);
    let mut subgroups = base_subgroups(&group);
    subgroups.push(("left".into(), Subgroup::from_elements(&group, &(0..m).collect::<Vec<_>>())?));
    subgroups.push(("right".into(), Subgroup::from_elements(&group, &(0..n).map(|k| k * m).collect::<Vec<_>>())?));
    Ok(CatalogEntry {
        name: "direct_product".into(),
        params: vec![m, n],
        group,
        subgroups,
        stabilizer: "right".into(),
        sections: BTreeMap::new(),
        semidirect: false,
    })
}

/// `Z_n ⋊ Z_m` with the generator of `Z_m` acting as multiplication by `a`.
fn cyclic_semidirect(n: usize, m: usize, a: usize) -> Result<CatalogEntry> {
    check_positive(n, "normal order")?;
    check_positive(m, "complement order")?;
    let mut power = 1 % n;
    let mut action = Vec::with_capacity(m);
    for _ in 0..m {
        action.push((0..n).map(|x| x * power % n).collect::<Vec<_>>());
        power = power * a % n;
    }
    if power != 1 % n {
        return Err(Error::BadParams(format!("{a}^{m} is not 1 modulo {n}")));
    }
    let sd = semidirect_product(&cyclic_group(n)?, &cyclic_group(m)?, &action)
        .map_err(|e| Error::BadParams(format!("multiplication by {a} modulo {n}: {e}")))?;
    let mut gens = Vec::new();
    if n > 1 {
        gens.push(1);
    }
    if m > 1 {
        gens.push(n);
    }
    let group = Arc::new(Group::clone(&sd.group).with_generators(gens)?);
    let mut subgroups = base_subgroups(&group);
    subgroups.push(("normal".into(), Subgroup::from_elements(&group, sd.normal.elements())?));
    subgroups.push(("complement".into(), Subgroup::from_elements(&group, sd.complement.elements())?));
    let mut sections = BTreeMap::new();
    sections.insert("complement".to_string(), sd.section.clone());
    Ok(CatalogEntry {
        name: "semidirect".into(),
        params: vec![n, m, a],
        group,
        subgroups,
        stabilizer: "complement".into(),
        sections,
        semidirect: true,
    })
}

/// A kernel configuration over a catalog group: `ρ₁` on `H₁` in, `ρ₂` on
/// `H₂` out.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardConfig {
    pub entry: String,
    pub params: Vec<usize>,
    pub h1: String,
    pub h2: String,
    pub rho1: RepSpec,
    pub rho2: RepSpec,
}

impl StandardConfig {
    fn new(entry: &str, params: &[usize], h1: &str, rho1: &str, h2: &str, rho2: &str) -> StandardConfig {
        StandardConfig {
            entry: entry.into(),
            params: params.to_vec(),
            h1: h1.into(),
            h2: h2.into(),
            rho1: RepSpec::parse(rho1).expect("standard representation name"),
            rho2: RepSpec::parse(rho2).expect("standard representation name"),
        }
    }

    pub fn label(&self) -> String {
        let entry = make(&self.entry, &self.params).map(|e| e.display_name()).unwrap_or_else(|_| self.entry.clone());
        format!("{entry} {}:{} -> {}:{}", self.h1, self.rho1.label(), self.h2, self.rho2.label())
    }

    /// Builds the field and kernel spaces with the catalog's sections.
    pub fn resolve(&self, gamma: GammaPolicy) -> Result<ResolvedConfig> {
        let entry = make(&self.entry, &self.params)?;
        let input = field_space(&entry, &self.h1, &self.rho1)?;
        let output = field_space(&entry, &self.h2, &self.rho2)?;
        let kernel_space = Arc::new(KernelSpace::between(&input, &output, gamma)?);
        Ok(ResolvedConfig { entry, input, output, kernel_space })
    }
}

fn field_space(entry: &CatalogEntry, subgroup: &str, rep: &RepSpec) -> Result<FieldSpace> {
    let h = entry.subgroup(subgroup)?;
    let cosets = CosetSpace::new(h, entry.section_policy(subgroup))?;
    FieldSpace::new(Arc::new(cosets), Arc::new(rep.build(h)?))
}

/// Everything needed to solve and verify one configuration.
#[derive(Clone, Debug)]
pub struct ResolvedConfig {
    pub entry: CatalogEntry,
    pub input: FieldSpace,
    pub output: FieldSpace,
    pub kernel_space: Arc<KernelSpace>,
}

/// The standard configurations: all with `|G| ≤ 72` and fiber dimension at
/// most 4, covering trivial, regular and rotation representations.
pub fn standard_configs() -> Vec<StandardConfig> {
    let c = StandardConfig::new;
    vec![
        c("cyclic", &[4], "trivial", "trivial", "trivial", "trivial"),
        c("cyclic", &[6], "c2", "regular", "c3", "trivial"),
        c("cyclic", &[4], "whole", "rotation(1)", "whole", "rotation(1)"),
        c("dihedral", &[3], "flips", "regular", "flips", "regular"),
        c("d3_fig5", &[], "flips", "regular", "flips", "regular"),
        c("dihedral", &[3], "flips", "trivial", "flips", "regular"),
        c("dihedral", &[4], "rotations", "rotation(1)", "rotations", "rotation(1)"),
        c("dihedral", &[4], "flips", "trivial", "rotations", "regular"),
        c("dihedral", &[6], "whole", "rotation(1)", "whole", "rotation(2)"),
        c("dihedral", &[4], "whole", "trivial", "rotations", "rotation(1)"),
        c("p4_torus", &[], "rotations", "trivial", "rotations", "trivial"),
        c("p4_torus", &[], "rotations", "regular", "rotations", "regular"),
        c("p4_torus", &[], "rotations", "rotation(1)", "rotations", "rotation(1)"),
        c("p4_torus", &[], "rotations", "trivial", "rotations", "rotation(1)"),
        c("p4m_torus", &[], "d4", "trivial", "d4", "trivial"),
        c("p4m_torus", &[], "d4", "rotation(1)", "d4", "rotation(1)"),
        c("p4m_torus", &[], "d4", "trivial", "d4", "rotation(1)"),
        c("octahedral", &[], "vertex", "trivial", "vertex", "trivial"),
        c("octahedral", &[], "vertex", "regular", "vertex", "regular"),
        c("octahedral", &[], "vertex", "rotation(1)", "vertex", "trivial"),
        c("octahedral", &[], "face", "trivial", "vertex", "rotation(1)"),
        c("octahedral", &[], "edge", "regular", "edge", "regular"),
        c("cyclic", &[5], "trivial", "trivial", "trivial", "trivial"),
        c("direct_product", &[2, 3], "left", "regular", "right", "regular"),
        c("semidirect", &[7, 3, 2], "complement", "regular", "complement", "regular"),
    ]
}
