//! The subcommands, each producing a JSON report.

use mackey::catalog::{self, standard_configs};
use mackey::kernel::{expand_d_to_c, lift_c_to_g, solve_basis_d};
use mackey::layer::{correlation_maps, intertwiner_oracle, span_match};
use mackey::{CosetSpace, DoubleCosetSpace, GammaPolicy, Kernel, KernelForm};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, DEFAULT_SEED};
use crate::error::{CliError, CliResult};
use crate::json::matrix;
use crate::verify::{coset_identity_violations, semidirect_violations, verify, VerifyOptions};

/// A report and whether every check in it passed.
pub struct Outcome {
    pub report: Value,
    pub pass: bool,
}

pub fn parse_form(s: &str) -> Result<KernelForm, String> {
    match s.to_ascii_lowercase().as_str() {
        "d" => Ok(KernelForm::D),
        "c" => Ok(KernelForm::C),
        "g" => Ok(KernelForm::G),
        _ => Err(format!("unknown kernel form `{s}` (expected d, c or g)")),
    }
}

/// The `K_D` basis, optionally expanded to `K_C` or `K_G`.
pub fn cmd_basis(config: &ExperimentConfig, form: KernelForm) -> CliResult<Outcome> {
    let r = config.resolve()?;
    let basis = solve_basis_d(&r.kernel_space);
    let kernels: Vec<Value> = match form {
        KernelForm::D => basis
            .kernels
            .iter()
            .map(|k| {
                let x = (0..k.values().len()).find(|&i| k.value(i).amax() > 0.0).unwrap_or(0);
                json!({"support_index": x, "matrix": matrix(k.value(x))})
            })
            .collect(),
        KernelForm::C | KernelForm::G => basis
            .kernels
            .iter()
            .map(|k| {
                let kc = expand_d_to_c(k).map_err(CliError::solver)?;
                let values = if form == KernelForm::C {
                    kc.values().iter().map(matrix).collect::<Vec<_>>()
                } else {
                    lift_c_to_g(&kc).map_err(CliError::solver)?.values().iter().map(matrix).collect()
                };
                Ok(json!({"values": values}))
            })
            .collect::<CliResult<_>>()?,
    };
    let report = json!({
        "command": "basis",
        "version": env!("CARGO_PKG_VERSION"),
        "config_digest": r.digest,
        "form": form.as_str(),
        "seed": r.seed,
        "dim": basis.dim(),
        "kernels": kernels,
    });
    Ok(Outcome { report, pass: true })
}

pub fn cmd_verify(config: &ExperimentConfig, opts: &VerifyOptions) -> CliResult<Outcome> {
    let r = config.resolve()?;
    let v = verify(&r, opts)?;
    Ok(Outcome { report: v.to_json(&r, opts), pass: v.pass() })
}

pub fn cmd_oracle(config: &ExperimentConfig) -> CliResult<Outcome> {
    let r = config.resolve()?;
    let oracle = intertwiner_oracle(&r.input, &r.output).map_err(CliError::solver)?;
    let basis = solve_basis_d(&r.kernel_space);
    let maps = correlation_maps(&r.input, &r.output, &basis.kernels).map_err(CliError::solver)?;
    let m = span_match(&maps, &oracle, basis.dim());
    let report = json!({
        "command": "oracle",
        "version": env!("CARGO_PKG_VERSION"),
        "config_digest": r.digest,
        "oracle_dim": m.oracle_dim,
        "seed": r.seed,
        "solver_dim": m.solver_dim,
        "correlation_rank": m.correlation_rank,
        "span_residual": crate::json::float(m.residual),
        "span_match": m.matched,
    });
    Ok(Outcome { report, pass: m.matched })
}

pub fn cmd_catalog() -> CliResult<Outcome> {
    let entries: Vec<Value> = catalog::default_entries()
        .iter()
        .map(|e| {
            let subgroups: Vec<Value> = e
                .subgroups
                .iter()
                .map(|(name, h)| {
                    json!({
                        "name": name,
                        "order": h.order(),
                        "elements": h.elements(),
                        "cosets": e.group.order() / h.order(),
                        "section": e.sections.get(name),
                        "reps": e.rep_names(name).unwrap_or_default(),
                    })
                })
                .collect();
            json!({
                "name": e.name,
                "display_name": e.display_name(),
                "params": e.params,
                "order": e.group.order(),
                "generators": e.group.stored_generators(),
                "labels": e.group.labels(),
                "stabilizer": e.stabilizer,
                "semidirect": e.semidirect,
                "subgroups": subgroups,
            })
        })
        .collect();
    let names: Vec<Value> =
        catalog::ENTRY_NAMES.iter().map(|(n, p)| json!({"name": n, "params": p})).collect();
    let configs: Vec<String> = standard_configs().iter().map(|c| c.label()).collect();
    let report = json!({
        "command": "catalog",
        "version": env!("CARGO_PKG_VERSION"),
        "names": names,
        "seed": DEFAULT_SEED,
        "entries": entries,
        "standard_configs": configs,
    });
    Ok(Outcome { report, pass: true })
}

/// Structural checks on every default catalog entry.
fn catalog_checks() -> CliResult<Vec<(String, bool, String)>> {
    let mut out = Vec::new();
    for e in catalog::default_entries() {
        let name = e.display_name();
        let subgroups: Vec<_> = e.subgroups.iter().map(|(_, h)| h).collect();
        for (sub, h) in &e.subgroups {
            let cs = CosetSpace::new(h, e.section_policy(sub)).map_err(CliError::solver)?;
            let violations = coset_identity_violations(&cs, &subgroups);
            out.push((format!("{name} {sub}: coset identities"), violations.is_empty(), violations.join("; ")));
            for rep in e.rep_names(sub).map_err(CliError::solver)? {
                let built = catalog::RepSpec::parse(&rep).and_then(|s| s.build(h));
                out.push((
                    format!("{name} {sub}: representation {rep}"),
                    built.is_ok(),
                    built.err().map(|e| e.to_string()).unwrap_or_default(),
                ));
            }
        }
        if e.semidirect {
            let h = e.subgroup(&e.stabilizer).map_err(CliError::solver)?;
            let cs = CosetSpace::new(h, e.section_policy(&e.stabilizer)).map_err(CliError::solver)?;
            let count = semidirect_violations(&cs);
            out.push((format!("{name}: h(x, g) = h(g)"), count == 0, format!("{count} violations")));
        }
        if e.name == "d3_fig5" {
            let cs = CosetSpace::new(e.subgroup("flips").map_err(CliError::solver)?, e.section_policy("flips"))
                .map_err(CliError::solver)?;
            let (r, f) = (e.group.find("r"), e.group.find("f"));
            let ok = matches!((r, f), (Some(r), Some(f)) if cs.h(cs.coset_of(r), r) == f);
            out.push((format!("{name}: h(rH, r) = f"), ok, String::new()));
        }
        if e.name == "octahedral" {
            let v = e.subgroup("vertex").map_err(CliError::solver)?;
            let dcs = DoubleCosetSpace::new(v, v, GammaPolicy::default()).map_err(CliError::solver)?;
            let orders = dcs.stabilizer_orders();
            out.push((format!("{name}: vertex double coset stabilizers"), orders == [4, 1, 4], format!("{orders:?}")));
        }
    }
    Ok(out)
}

/// Every catalog check plus a full `verify` of every standard config and
/// of each extra config.
pub fn cmd_selftest(extra: &[(String, ExperimentConfig)], trials: usize, seed: u64) -> CliResult<Outcome> {
    let mut first_failure: Option<String> = None;
    let mut note = |label: &str, pass: bool| {
        if !pass && first_failure.is_none() {
            first_failure = Some(label.to_string());
        }
    };
    let catalog: Vec<Value> = catalog_checks()?
        .into_iter()
        .map(|(label, pass, detail)| {
            note(&label, pass);
            json!({"name": label, "pass": pass, "detail": detail})
        })
        .collect();

    let mut configs: Vec<(String, ExperimentConfig)> =
        standard_configs().iter().map(|c| (c.label(), ExperimentConfig::from_standard(c))).collect();
    for (path, c) in extra {
        // Resolve first so a broken fixture is reported as a config error.
        c.resolve().map_err(|e| CliError::Config(format!("{path}: {e}")))?;
        configs.push((path.clone(), c.clone()));
    }
    let mut results = Vec::new();
    for (label, c) in &configs {
        let r = c.resolve()?;
        let opts = VerifyOptions { trials, seed, tol: r.tol, inject_noise: None };
        let v = verify(&r, &opts).map_err(|e| match e {
            CliError::Solver(m) => CliError::Solver(format!("{label}: {m}")),
            CliError::Resource(m) => CliError::Resource(format!("{label}: {m}")),
            other => other,
        })?;
        let failed = v.first_failure().map(|c| c.name);
        note(&format!("{label}: {}", failed.unwrap_or("")), v.pass());
        results.push(json!({
            "label": label,
            "config_digest": r.digest,
            "pass": v.pass(),
            "failed_check": failed,
            "dims": {
                "D": v.dims.d,
                "G_naive": v.dims.g_naive,
                "C_to_G_rank": v.dims.c_to_g_rank,
                "oracle": v.dims.oracle,
            },
        }));
    }
    let pass = first_failure.is_none();
    let report = json!({
        "command": "selftest",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "trials": trials,
        "catalog": catalog,
        "configs": results,
        "first_failure": first_failure,
        "pass": pass,
    });
    Ok(Outcome { report, pass })
}
