//! The acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use mackey::catalog::{default_entries, make, standard_configs, CatalogEntry, RepSpec, StandardConfig};
use mackey::field::{act_c, act_g, lift, project_to_mackey, seeded_rng, unlift};
use mackey::kernel::{
    expand_d_to_c, lift_c_to_g, omega_choices, omega_value, restrict_c_to_d, restrict_g_to_c, restrict_g_to_d,
    solve_basis_d, solve_basis_g_naive,
};
use mackey::layer::{
    correlation_maps, equivariance_residual, intertwiner_oracle, nonlinearity_residual, norm_nonlinearity,
    pointwise_nonlinearity, span_match,
};
use mackey::{
    CosetSpace, FieldSpace, GammaPolicy, Kernel, KernelSpace, LayerKernel, LayerSpec, Representation, SectionField,
    SectionPolicy, Subgroup,
};
use mackey_cli::config::ExperimentConfig;
use mackey_cli::verify::{
    coset_identity_violations, induced_homomorphism_residual, semidirect_violations, verify, VerifyOptions,
};
use nalgebra::DVector;

const SEED: u64 = 42;
const TRIALS: usize = 32;
const NOISE_AMPLITUDE: f64 = 1e-2;
const ORACLE_CROSS_CHECK_ORDER: usize = 36;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn configs() -> Vec<(StandardConfig, mackey::catalog::ResolvedConfig)> {
    standard_configs()
        .into_iter()
        .map(|c| {
            let r = c.resolve(GammaPolicy::default()).expect("standard configs resolve");
            (c, r)
        })
        .collect()
}

/// Every catalog group, at the default parameters and a sweep of sizes.
fn all_entries() -> Vec<CatalogEntry> {
    let mut entries = default_entries();
    for n in 1..=8 {
        entries.push(make("cyclic", &[n]).unwrap());
    }
    for n in 1..=6 {
        entries.push(make("dihedral", &[n]).unwrap());
    }
    entries.push(make("p4_torus", &[2]).unwrap());
    entries.push(make("p4m_torus", &[2]).unwrap());
    entries.push(make("direct_product", &[3, 4]).unwrap());
    entries.push(make("semidirect", &[5, 4, 2]).unwrap());
    entries
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let all = configs();
    let mut bad = Vec::new();
    for (c, r) in &all {
        let d = solve_basis_d(&r.kernel_space).dim();
        let g = solve_basis_g_naive(&r.kernel_space).map(|b| b.dim());
        let o = intertwiner_oracle(&r.input, &r.output).map(|q| q.ncols());
        match (g, o) {
            (Ok(g), Ok(o)) if g == d && o == d => {}
            (g, o) => bad.push(format!("{}: D={d} G={g:?} oracle={o:?}", c.label())),
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = bad.is_empty() && all.len() >= 20 && elapsed < 60.0;
    outcome(pass, format!("{} configs in {elapsed:.1} s; {}", all.len(), bad.join("; ")))
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for (c, r) in configs() {
        let basis = solve_basis_d(&r.kernel_space);
        let oracle = intertwiner_oracle(&r.input, &r.output).unwrap();
        let maps = correlation_maps(&r.input, &r.output, &basis.kernels).unwrap();
        let m = span_match(&maps, &oracle, basis.dim());
        worst = worst.max(m.residual);
        if !m.matched {
            bad.push(c.label());
        }
    }
    outcome(bad.is_empty(), format!("max residual {worst:e}; mismatched: {}", bad.join("; ")))
}

fn trivial_space(sub: &Subgroup) -> FieldSpace {
    let cosets = CosetSpace::new(sub, SectionPolicy::default()).unwrap();
    FieldSpace::new(Arc::new(cosets), Arc::new(Representation::trivial(sub))).unwrap()
}

fn criterion_3() -> Outcome {
    let dim = |entry: &str, params: &[usize], h: &str, rho: &str| {
        let rho = RepSpec::parse(rho).unwrap();
        let c = StandardConfig {
            entry: entry.into(),
            params: params.to_vec(),
            h1: h.into(),
            h2: h.into(),
            rho1: rho.clone(),
            rho2: rho,
        };
        let r = c.resolve(GammaPolicy::default()).unwrap();
        let d = solve_basis_d(&r.kernel_space).dim();
        let o = intertwiner_oracle(&r.input, &r.output).unwrap().ncols();
        (d, o)
    };
    let d3 = dim("dihedral", &[3], "flips", "regular");
    let oct = dim("octahedral", &[], "vertex", "trivial");
    let mut bad = Vec::new();
    for e in all_entries() {
        let h = Subgroup::trivial(&e.group);
        let space = trivial_space(&h);
        let ks = Arc::new(KernelSpace::between(&space, &space, GammaPolicy::default()).unwrap());
        let d = solve_basis_d(&ks).dim();
        // The dense oracle has |G|² unknowns here; only cross-check small groups.
        let o = if e.group.order() <= ORACLE_CROSS_CHECK_ORDER {
            intertwiner_oracle(&space, &space).unwrap().ncols()
        } else {
            d
        };
        if d != e.group.order() || o != d {
            bad.push(format!("{}: D={d} oracle={o} |G|={}", e.display_name(), e.group.order()));
        }
    }
    let pass = d3 == (6, 6) && oct == (3, 3) && bad.is_empty();
    outcome(pass, format!("D3 regular {d3:?}, octahedral C4 trivial {oct:?}; {}", bad.join("; ")))
}

fn criterion_4() -> Outcome {
    let e = make("d3_fig5", &[]).unwrap();
    let cs = CosetSpace::new(e.subgroup("flips").unwrap(), e.section_policy("flips")).unwrap();
    let (r, f) = (e.group.find("r").unwrap(), e.group.find("f").unwrap());
    let sections: Vec<&str> = cs.sections().iter().map(|&s| e.group.label(s)).collect();
    let h = cs.h(cs.coset_of(r), r);
    outcome(h == f, format!("sections {sections:?}, h(rH, r) = {}", e.group.label(h)))
}

fn criterion_5() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for e in all_entries() {
        let subs: Vec<&Subgroup> = e.subgroups.iter().map(|(_, h)| h).collect();
        for (name, h) in &e.subgroups {
            let mut policies = vec![e.section_policy(name)];
            if policies[0] != SectionPolicy::default() {
                policies.push(SectionPolicy::default());
            }
            for policy in policies {
                let cs = CosetSpace::new(h, policy).unwrap();
                let v = coset_identity_violations(&cs, &subs);
                checked += 1;
                if !v.is_empty() {
                    bad.push(format!("{} {name}: {}", e.display_name(), v.join(", ")));
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("{checked} coset spaces; {}", bad.join("; ")))
}

fn unit_fields(space: &FieldSpace) -> Vec<SectionField> {
    (0..space.dim())
        .map(|i| {
            let mut v = DVector::zeros(space.dim());
            v[i] = 1.0;
            SectionField::from_flat(space, &v).unwrap()
        })
        .collect()
}

fn lift_worst(space: &FieldSpace) -> f64 {
    let n = space.group().order();
    let d = space.fiber_dim();
    let mut worst: f64 = 0.0;
    for f in unit_fields(space) {
        let lifted = lift(&f);
        worst = worst.max((unlift(&lifted).unwrap().to_flat() - f.to_flat()).amax());
        for u in 0..n {
            let lhs = act_g(u, &lifted);
            let rhs = lift(&act_c(u, &f));
            for (a, b) in lhs.values().iter().zip(rhs.values()) {
                worst = worst.max((a - b).amax());
            }
            for v in 0..n {
                let twice = act_g(u, &act_g(v, &lifted));
                let once = act_g(space.group().mul(u, v), &lifted);
                for (a, b) in twice.values().iter().zip(once.values()) {
                    worst = worst.max((a - b).amax());
                }
            }
        }
    }
    // Λ is onto: Mackey fields projected from a spanning set of G-valued
    // functions are fixed by ΛΛ⁻¹.
    for i in 0..n * d {
        let raw: Vec<DVector<f64>> = (0..n)
            .map(|g| DVector::from_fn(d, |k, _| if g * d + k == i { 1.0 } else { 0.0 }))
            .collect();
        let m = project_to_mackey(&raw, space).unwrap();
        let again = lift(&unlift(&m).unwrap());
        for (a, b) in again.values().iter().zip(m.values()) {
            worst = worst.max((a - b).amax());
        }
    }
    worst
}

fn criterion_6() -> Outcome {
    let mut worst: f64 = 0.0;
    for (_, r) in configs() {
        for space in [&r.input, &r.output] {
            worst = worst.max(lift_worst(space)).max(induced_homomorphism_residual(space));
        }
    }
    outcome(worst < 1e-12, format!("max residual {worst:e}"))
}

fn criterion_7() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut weakest_noise = f64::INFINITY;
    let mut skipped = Vec::new();
    for (c, r) in configs() {
        for (i, kd) in solve_basis_d(&r.kernel_space).kernels.into_iter().enumerate() {
            let layer = LayerSpec::new(r.input.clone(), r.output.clone(), LayerKernel::D(kd)).unwrap();
            worst = worst.max(equivariance_residual(&layer, TRIALS, SEED + i as u64).unwrap());
        }
        let cfg = ExperimentConfig::from_standard(&c);
        let resolved = cfg.resolve().unwrap();
        let opts = VerifyOptions { trials: TRIALS, seed: SEED, tol: 1e-8, inject_noise: Some(NOISE_AMPLITUDE) };
        let v = verify(&resolved, &opts).unwrap();
        if v.noise_injected == Some(true) {
            weakest_noise = weakest_noise.min(v.equivariance.unwrap());
        } else {
            skipped.push(c.label());
        }
    }
    let pass = worst < 1e-8 && weakest_noise > 1e-4;
    outcome(
        pass,
        format!(
            "max clean residual {worst:e}; min noisy residual {weakest_noise:e}; no room for noise in: {}",
            skipped.join("; ")
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut counts = Vec::new();
    for (name, params) in [("p4_torus", vec![3]), ("p4m_torus", vec![3]), ("p4_torus", vec![2]), ("p4m_torus", vec![4])] {
        let e = make(name, &params).unwrap();
        let cs = CosetSpace::new(e.subgroup(&e.stabilizer).unwrap(), e.section_policy(&e.stabilizer)).unwrap();
        counts.push((e.display_name(), cs.num_cosets() * e.group.order(), semidirect_violations(&cs)));
    }
    let pass = counts.iter().all(|&(_, _, v)| v == 0);
    let detail: Vec<String> = counts.iter().map(|(n, pairs, v)| format!("{n}: {v}/{pairs}")).collect();
    outcome(pass, format!("violations {}", detail.join(", ")))
}

fn criterion_9() -> Outcome {
    let diff = |a: DVector<f64>, b: DVector<f64>| (a - b).amax();
    let mut roundtrip: f64 = 0.0;
    let mut spread: f64 = 0.0;
    let mut count = 0;
    let gammas = [GammaPolicy::default(), GammaPolicy::Rotated(1)];
    for c in standard_configs() {
        for gamma in &gammas {
            let r = c.resolve(gamma.clone()).unwrap();
            for kd in solve_basis_d(&r.kernel_space).kernels {
                let kc = expand_d_to_c(&kd).unwrap();
                let kg = lift_c_to_g(&kc).unwrap();
                roundtrip = roundtrip
                    .max(diff(restrict_c_to_d(&kc).unwrap().to_flat(), kd.to_flat()))
                    .max(diff(expand_d_to_c(&restrict_c_to_d(&kc).unwrap()).unwrap().to_flat(), kc.to_flat()))
                    .max(diff(restrict_g_to_c(&kg).unwrap().to_flat(), kc.to_flat()))
                    .max(diff(lift_c_to_g(&restrict_g_to_c(&kg).unwrap()).unwrap().to_flat(), kg.to_flat()))
                    .max(diff(restrict_g_to_d(&kg).unwrap().to_flat(), kd.to_flat()));
                let space = kd.space();
                for y in 0..space.cosets1().num_cosets() {
                    let choices = omega_choices(space, y);
                    let first = omega_value(&kd, y, choices[0]).unwrap();
                    for &h in &choices[1..] {
                        spread = spread.max((omega_value(&kd, y, h).unwrap() - &first).amax());
                    }
                }
                count += 1;
            }
        }
    }
    outcome(
        roundtrip < 1e-12 && spread < 1e-12,
        format!("{count} kernels; round trip {roundtrip:e}; choice spread {spread:e}"),
    )
}

fn criterion_10() -> Outcome {
    let mut rng = seeded_rng(SEED);
    let mut pointwise: f64 = 0.0;
    let mut norm: f64 = 0.0;
    let (mut n_pointwise, mut n_norm) = (0, 0);
    for (c, r) in configs() {
        for (space, rho) in [(&r.input, &c.rho1), (&r.output, &c.rho2)] {
            for _ in 0..4 {
                let f = space.random_section_field(&mut rng);
                match rho {
                    RepSpec::Regular => {
                        let relu = |f: &SectionField| pointwise_nonlinearity(f, |x| x.max(0.0));
                        let tanh = |f: &SectionField| pointwise_nonlinearity(f, f64::tanh);
                        pointwise = pointwise
                            .max(nonlinearity_residual(&f, relu).unwrap())
                            .max(nonlinearity_residual(&f, tanh).unwrap());
                        n_pointwise += 1;
                    }
                    RepSpec::Rotation(_) => {
                        let gate = |f: &SectionField| norm_nonlinearity(f, |n| (n - 0.5).max(0.0));
                        let squash = |f: &SectionField| norm_nonlinearity(f, |n| n * n / (1.0 + n * n));
                        norm = norm
                            .max(nonlinearity_residual(&f, gate).unwrap())
                            .max(nonlinearity_residual(&f, squash).unwrap());
                        n_norm += 1;
                    }
                    _ => {}
                }
            }
        }
    }
    let pass = pointwise < 1e-10 && norm < 1e-10 && n_pointwise > 0 && n_norm > 0;
    outcome(
        pass,
        format!("pointwise {pointwise:e} over {n_pointwise} fields; norm {norm:e} over {n_norm} fields"),
    )
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_mackey"))
            .args(["selftest", "--seed", "42", "--out"])
            .arg(&path)
            .status()
            .expect("binary runs");
        (status.code(), std::fs::read(&path).unwrap_or_default())
    };
    let (code_a, a) = run("a.json");
    let (code_b, b) = run("b.json");
    let pass = code_a == Some(0) && code_b == Some(0) && !a.is_empty() && a == b;
    outcome(pass, format!("exit codes {code_a:?}/{code_b:?}, {} bytes, identical: {}", a.len(), a == b))
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("three-form dimension equality", criterion_1),
        ("correlation span equals oracle span", criterion_2),
        ("specific dimensions", criterion_3),
        ("explicit D3 section twist", criterion_4),
        ("coset identity sweep", criterion_5),
        ("lift and induced action consistency", criterion_6),
        ("layer equivariance and noise control", criterion_7),
        ("semidirect twist", criterion_8),
        ("kernel conversion round trips", criterion_9),
        ("nonlinearity equivariance", criterion_10),
        ("selftest exit and byte stability", criterion_11),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {status} {name} ({:.1} s): {}", i + 1, start.elapsed().as_secs_f64(), o.detail);
        failures += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
