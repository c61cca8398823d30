//! Experiment configs: JSON schema, digest and resolution into solver
//! objects.

use std::sync::Arc;

use mackey::catalog::{self, CatalogEntry, RepSpec, StandardConfig};
use mackey::{
    build_group, build_subgroup, CosetSpace, FieldSpace, GammaPolicy, Group, KernelSpace, SectionPolicy, Subgroup,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const DEFAULT_TRIALS: usize = 32;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub group: GroupSpec,
    pub h1: SubgroupSpec,
    pub h2: SubgroupSpec,
    pub rho1: RepConfig,
    pub rho2: RepConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section1: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section2: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

/// `{"kind": "dihedral", "params": [3]}` for catalog groups, or
/// `{"kind": "table", "table": [[...]], "labels": [...], "generators": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<usize>>,
}

/// Exactly one of a catalog subgroup name, a generator list or an element
/// list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubgroupSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<usize>>,
}

/// `{"kind": "trivial" | "regular" | "rotation" | "sum" | "explicit", ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parts: Option<Vec<RepConfig>>,
    /// One row-major matrix per subgroup element, in sorted element order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<Vec<Vec<f64>>>>,
}

/// `{"policy": "smallest" | "rotated" | "explicit", "k": .., "representatives": [..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaConfig {
    pub policy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub representatives: Option<Vec<usize>>,
}

impl ExperimentConfig {
    /// Parses a config, naming the offending key path on failure.
    pub fn from_json(text: &str) -> CliResult<ExperimentConfig> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." || path.is_empty() {
                CliError::Config(inner.to_string())
            } else {
                CliError::Config(format!("at `{path}`: {inner}"))
            }
        })
    }

    pub fn from_standard(c: &StandardConfig) -> ExperimentConfig {
        ExperimentConfig {
            group: GroupSpec { kind: c.entry.clone(), params: c.params.clone(), table: None, labels: None, generators: None },
            h1: SubgroupSpec::named(&c.h1),
            h2: SubgroupSpec::named(&c.h2),
            rho1: RepConfig::from_spec(&c.rho1),
            rho2: RepConfig::from_spec(&c.rho2),
            section1: None,
            section2: None,
            gamma: None,
            trials: None,
            seed: None,
            tol: None,
        }
    }

    /// SHA-256 of the canonical (sorted-key, compact) JSON form.
    pub fn digest(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        // serde_json's default map is ordered by key.
        let canonical = serde_json::to_string(&value).expect("value serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn resolve(&self) -> CliResult<Resolved> {
        let (group, entry) = self.group.build()?;
        let h1 = self.h1.build(&group, entry.as_ref(), "h1")?;
        let h2 = self.h2.build(&group, entry.as_ref(), "h2")?;
        let input = field_space(&h1, &self.rho1, self.section1.as_ref(), &self.h1, entry.as_ref(), "1")?;
        let output = field_space(&h2, &self.rho2, self.section2.as_ref(), &self.h2, entry.as_ref(), "2")?;
        let gamma = match &self.gamma {
            None => GammaPolicy::SmallestIndex,
            Some(g) => g.build()?,
        };
        let kernel_space =
            Arc::new(KernelSpace::between(&input, &output, gamma).map_err(|e| CliError::config("gamma", e))?);
        // h(x, g) = h(g) is only promised for N ⋊ H with the catalog section.
        let semidirect_input = entry.as_ref().is_some_and(|e| {
            e.semidirect
                && self.h1.name.as_deref() == Some(e.stabilizer.as_str())
                && self.section1.as_ref().is_none_or(|s| Some(s) == e.sections.get(&e.stabilizer))
        });
        Ok(Resolved {
            group,
            entry,
            input,
            output,
            kernel_space,
            semidirect_input,
            trials: self.trials.unwrap_or(DEFAULT_TRIALS),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            tol: self.tol.unwrap_or(DEFAULT_TOL),
            digest: self.digest(),
        })
    }
}

fn field_space(
    h: &Subgroup,
    rep: &RepConfig,
    section: Option<&Vec<usize>>,
    spec: &SubgroupSpec,
    entry: Option<&CatalogEntry>,
    side: &str,
) -> CliResult<FieldSpace> {
    let policy = match (section, entry, &spec.name) {
        (Some(s), _, _) => SectionPolicy::Explicit(s.clone()),
        (None, Some(e), Some(name)) => e.section_policy(name),
        _ => SectionPolicy::SmallestIndex,
    };
    let cosets = CosetSpace::new(h, policy).map_err(|e| CliError::config(&format!("section{side}"), e))?;
    let rho = rep.to_spec(&format!("rho{side}"))?.build(h).map_err(|e| CliError::config(&format!("rho{side}"), e))?;
    FieldSpace::new(Arc::new(cosets), Arc::new(rho)).map_err(|e| CliError::config(&format!("rho{side}"), e))
}

impl GroupSpec {
    fn build(&self) -> CliResult<(Arc<Group>, Option<CatalogEntry>)> {
        if self.kind == "table" {
            let table = self
                .table
                .clone()
                .ok_or_else(|| CliError::Config("at `group.table`: required when kind is \"table\"".into()))?;
            if !self.params.is_empty() {
                return Err(CliError::Config("at `group.params`: not allowed when kind is \"table\"".into()));
            }
            let labels = self.labels.clone().unwrap_or_else(|| (0..table.len()).map(|i| i.to_string()).collect());
            let mut group = build_group(table, labels).map_err(|e| CliError::config("group.table", e))?;
            if let Some(gens) = &self.generators {
                group = group.with_generators(gens.clone()).map_err(|e| CliError::config("group.generators", e))?;
            }
            return Ok((Arc::new(group), None));
        }
        for key in ["table", "labels", "generators"] {
            let present = match key {
                "table" => self.table.is_some(),
                "labels" => self.labels.is_some(),
                _ => self.generators.is_some(),
            };
            if present {
                return Err(CliError::Config(format!("at `group.{key}`: only allowed when kind is \"table\"")));
            }
        }
        let entry = catalog::make(&self.kind, &self.params).map_err(|e| CliError::config("group", e))?;
        Ok((entry.group.clone(), Some(entry)))
    }
}

impl SubgroupSpec {
    pub fn named(name: &str) -> SubgroupSpec {
        SubgroupSpec { name: Some(name.into()), generators: None, elements: None }
    }

    fn build(&self, group: &Arc<Group>, entry: Option<&CatalogEntry>, key: &str) -> CliResult<Subgroup> {
        let set = [self.name.is_some(), self.generators.is_some(), self.elements.is_some()];
        if set.iter().filter(|&&b| b).count() != 1 {
            return Err(CliError::Config(format!(
                "at `{key}`: give exactly one of \"name\", \"generators\" or \"elements\""
            )));
        }
        if let Some(name) = &self.name {
            return match (entry, name.as_str()) {
                (Some(e), _) => e.subgroup(name).cloned().map_err(|e| CliError::config(&format!("{key}.name"), e)),
                (None, "trivial") => Ok(Subgroup::trivial(group)),
                (None, "whole") => Ok(Subgroup::whole(group)),
                (None, _) => Err(CliError::Config(format!(
                    "at `{key}.name`: table groups only know \"trivial\" and \"whole\""
                ))),
            };
        }
        if let Some(gens) = &self.generators {
            for &g in gens {
                group.check_index(g).map_err(|e| CliError::config(&format!("{key}.generators"), e))?;
            }
            return build_subgroup(group, gens).map_err(|e| CliError::config(&format!("{key}.generators"), e));
        }
        let elements = self.elements.as_ref().expect("checked above");
        Subgroup::from_elements(group, elements).map_err(|e| CliError::config(&format!("{key}.elements"), e))
    }
}

impl RepConfig {
    pub fn from_spec(spec: &RepSpec) -> RepConfig {
        let base = |kind: &str| RepConfig { kind: kind.into(), frequency: None, parts: None, matrices: None };
        match spec {
            RepSpec::Trivial => base("trivial"),
            RepSpec::Regular => base("regular"),
            RepSpec::Rotation(k) => RepConfig { frequency: Some(*k), ..base("rotation") },
            RepSpec::Sum(parts) => RepConfig { parts: Some(parts.iter().map(RepConfig::from_spec).collect()), ..base("sum") },
            RepSpec::Explicit(ms) => RepConfig {
                matrices: Some(ms.iter().map(|m| m.row_iter().map(|r| r.iter().copied().collect()).collect()).collect()),
                ..base("explicit")
            },
        }
    }

    fn to_spec(&self, key: &str) -> CliResult<RepSpec> {
        let unexpected = |field: &str| CliError::Config(format!("at `{key}.{field}`: not used by kind \"{}\"", self.kind));
        let check_unused = |freq: bool, parts: bool, matrices: bool| -> CliResult<()> {
            if !freq && self.frequency.is_some() {
                return Err(unexpected("frequency"));
            }
            if !parts && self.parts.is_some() {
                return Err(unexpected("parts"));
            }
            if !matrices && self.matrices.is_some() {
                return Err(unexpected("matrices"));
            }
            Ok(())
        };
        match self.kind.as_str() {
            "trivial" => check_unused(false, false, false).map(|_| RepSpec::Trivial),
            "regular" => check_unused(false, false, false).map(|_| RepSpec::Regular),
            "rotation" => {
                check_unused(true, false, false)?;
                let k = self
                    .frequency
                    .ok_or_else(|| CliError::Config(format!("at `{key}.frequency`: required for kind \"rotation\"")))?;
                Ok(RepSpec::Rotation(k))
            }
            "sum" => {
                check_unused(false, true, false)?;
                let parts = self
                    .parts
                    .as_ref()
                    .ok_or_else(|| CliError::Config(format!("at `{key}.parts`: required for kind \"sum\"")))?;
                let specs = parts
                    .iter()
                    .enumerate()
                    .map(|(i, p)| p.to_spec(&format!("{key}.parts[{i}]")))
                    .collect::<CliResult<Vec<_>>>()?;
                Ok(RepSpec::Sum(specs))
            }
            "explicit" => {
                check_unused(false, false, true)?;
                let ms = self
                    .matrices
                    .as_ref()
                    .ok_or_else(|| CliError::Config(format!("at `{key}.matrices`: required for kind \"explicit\"")))?;
                let matrices = ms
                    .iter()
                    .enumerate()
                    .map(|(i, rows)| {
                        let n = rows.len();
                        if n == 0 || rows.iter().any(|r| r.len() != n) {
                            return Err(CliError::Config(format!("at `{key}.matrices[{i}]`: not a square matrix")));
                        }
                        Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                Ok(RepSpec::Explicit(matrices))
            }
            other => Err(CliError::Config(format!(
                "at `{key}.kind`: unknown representation kind \"{other}\" (expected trivial, regular, rotation, sum or explicit)"
            ))),
        }
    }
}

impl GammaConfig {
    fn build(&self) -> CliResult<GammaPolicy> {
        match self.policy.as_str() {
            "smallest" => Ok(GammaPolicy::SmallestIndex),
            "rotated" => Ok(GammaPolicy::Rotated(self.k.unwrap_or(1))),
            "explicit" => self
                .representatives
                .clone()
                .map(GammaPolicy::Explicit)
                .ok_or_else(|| CliError::Config("at `gamma.representatives`: required for policy \"explicit\"".into())),
            other => Err(CliError::Config(format!(
                "at `gamma.policy`: unknown policy \"{other}\" (expected smallest, rotated or explicit)"
            ))),
        }
    }
}

/// A config turned into solver objects.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub group: Arc<Group>,
    pub entry: Option<CatalogEntry>,
    pub input: FieldSpace,
    pub output: FieldSpace,
    pub kernel_space: Arc<KernelSpace>,
    /// Whether the input coset space is `N ⋊ H / H` with section `s(nH) = n`.
    pub semidirect_input: bool,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub digest: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    const D3_REGULAR: &str = r#"{
        "group": {"kind": "dihedral", "params": [3]},
        "h1": {"name": "flips"}, "h2": {"name": "flips"},
        "rho1": {"kind": "regular"}, "rho2": {"kind": "regular"}
    }"#;

    #[test]
    fn parses_and_resolves() {
        let c = ExperimentConfig::from_json(D3_REGULAR).unwrap();
        let r = c.resolve().unwrap();
        assert_eq!(r.group.order(), 6);
        assert_eq!(r.input.fiber_dim(), 2);
        assert_eq!((r.trials, r.seed, r.tol), (32, 42, 1e-8));
    }

    #[test]
    fn digest_ignores_key_order_and_whitespace() {
        let a = ExperimentConfig::from_json(D3_REGULAR).unwrap();
        let b = ExperimentConfig::from_json(
            r#"{"rho2":{"kind":"regular"},"rho1":{"kind":"regular"},"h2":{"name":"flips"},
                "h1":{"name":"flips"},"group":{"params":[3],"kind":"dihedral"}}"#,
        )
        .unwrap();
        assert_eq!(a.digest(), b.digest());
        let mut c = a.clone();
        c.seed = Some(1);
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn errors_name_the_offending_key() {
        let bad = D3_REGULAR.replace("\"kind\": \"regular\"}, \"rho2\"", "\"kind\": \"regular\", \"freq\": 1}, \"rho2\"");
        let err = ExperimentConfig::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("rho1") && err.contains("freq"), "{err}");
        let bad = D3_REGULAR.replace("\"flips\"}, \"h2\"", "\"mirrors\"}, \"h2\"");
        let err = ExperimentConfig::from_json(&bad).unwrap().resolve().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("h1.name"), "{err}");
        let err = ExperimentConfig::from_json("{\"group\": 3}").unwrap_err().to_string();
        assert!(err.contains("group"), "{err}");
    }

    #[test]
    fn table_groups() {
        let text = r#"{
            "group": {"kind": "table", "table": [[0,1],[1,0]], "generators": [1]},
            "h1": {"name": "trivial"}, "h2": {"elements": [0]},
            "rho1": {"kind": "trivial"}, "rho2": {"kind": "sum", "parts": [{"kind": "trivial"}, {"kind": "regular"}]}
        }"#;
        let r = ExperimentConfig::from_json(text).unwrap().resolve().unwrap();
        assert_eq!(r.output.fiber_dim(), 2);
        let broken = text.replace("[[0,1],[1,0]]", "[[0,1],[1,1]]");
        let err = ExperimentConfig::from_json(&broken).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("group.table"), "{err}");
    }

    #[test]
    fn standard_configs_round_trip() {
        for s in catalog::standard_configs() {
            let c = ExperimentConfig::from_standard(&s);
            let text = serde_json::to_string(&c).unwrap();
            assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
            c.resolve().unwrap();
        }
    }
}
