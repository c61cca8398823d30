//! The verification suite behind `verify` and `selftest`.

use mackey::field::{act_c, act_g, lift, seeded_rng, unlift};
use mackey::kernel::{
    expand_d_to_c, flat_rank, lift_c_to_g, omega_choices, omega_value, restrict_c_to_d, restrict_g_to_c,
    restrict_g_to_d, solve_basis_d, solve_basis_g_naive,
};
use mackey::layer::{
    correlate_g, correlation_maps, equivariance_residual, inject_noise, intertwiner_oracle, span_match, LayerKernel,
    LayerSpec,
};
use mackey::rep::{rho1_x_rep, EXHAUSTIVE_CHECK_LIMIT};
use mackey::{CosetSpace, Error, FieldSpace, Kernel, KernelC, KernelD, Subgroup};
use serde_json::{json, Value};

use crate::config::Resolved;
use crate::error::{CliError, CliResult};
use crate::json::float;

/// Tolerance for checks that should hold to rounding error.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for Mackey and kernel-constraint residuals.
pub const CONSTRAINT_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub inject_noise: Option<f64>,
}

impl VerifyOptions {
    pub fn from_resolved(r: &Resolved) -> VerifyOptions {
        VerifyOptions { trials: r.trials, seed: r.seed, tol: r.tol, inject_noise: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct Dims {
    pub d: usize,
    pub g_naive: Option<usize>,
    pub c_to_g_rank: usize,
    pub oracle: Option<usize>,
}

impl Dims {
    fn summary(&self) -> String {
        let opt = |v: Option<usize>| v.map_or("skipped".to_string(), |v| v.to_string());
        format!("D={} G_naive={} C_to_G_rank={} oracle={}", self.d, opt(self.g_naive), self.c_to_g_rank, opt(self.oracle))
    }
}

#[derive(Clone, Debug)]
pub struct Verification {
    pub dims: Dims,
    pub equivariance: Option<f64>,
    pub mackey: Option<f64>,
    pub roundtrip: f64,
    pub lift: Option<f64>,
    pub induced: f64,
    pub span: Option<f64>,
    pub noise_injected: Option<bool>,
    pub checks: Vec<Check>,
}

impl Verification {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.pass)
    }

    pub fn to_json(&self, resolved: &Resolved, opts: &VerifyOptions) -> Value {
        let opt_float = |x: Option<f64>| x.map(float).unwrap_or(Value::Null);
        let mut report = json!({
            "command": "verify",
            "version": env!("CARGO_PKG_VERSION"),
            "config_digest": resolved.digest,
            "seed": opts.seed,
            "trials": opts.trials,
            "tol": float(opts.tol),
            "dims": {
                "D": self.dims.d,
                "G_naive": self.dims.g_naive,
                "C_to_G_rank": self.dims.c_to_g_rank,
                "oracle": self.dims.oracle,
            },
            "residuals": {
                "equivariance": opt_float(self.equivariance),
                "mackey": opt_float(self.mackey),
                "roundtrip": float(self.roundtrip),
                "lift": opt_float(self.lift),
                "induced": float(self.induced),
                "span": opt_float(self.span),
            },
            "checks": self.checks.iter().map(|c| json!({"name": c.name, "pass": c.pass, "detail": c.detail})).collect::<Vec<_>>(),
            "pass": self.pass(),
        });
        if let (Some(amplitude), Some(injected)) = (opts.inject_noise, self.noise_injected) {
            report["noise"] = json!({"amplitude": float(amplitude), "injected": injected});
        }
        report
    }
}

fn check(name: &'static str, pass: bool, detail: impl Into<String>) -> Check {
    Check { name, pass, detail: detail.into() }
}

/// Exhaustive sweep of the coset identities: the cocycle rule, right
/// equivariance of `h`, `h(s(x)) = e`, unique decomposition, the action
/// law, and the stabilizer formula against each subgroup in `others`.
/// Returns a description of every identity that fails somewhere.
pub fn coset_identity_violations(cs: &CosetSpace, others: &[&Subgroup]) -> Vec<String> {
    let g = cs.group();
    let n = g.order();
    let h = cs.subgroup();
    let mut failures = Vec::new();
    let mut fail = |what: String| {
        if failures.len() < 8 {
            failures.push(what);
        }
    };
    for x in 0..cs.num_cosets() {
        if cs.h_of_element(cs.section(x)) != 0 {
            fail(format!("h(s({x})) != e"));
        }
        for a in 0..n {
            let hx = cs.h(x, a);
            if !h.contains(hx) || g.mul(cs.section(cs.act(a, x)), hx) != g.mul(a, cs.section(x)) {
                fail(format!("s(gx) h(x, g) != g s(x) at x={x}, g={a}"));
            }
            for b in 0..n {
                let lhs = cs.h(x, g.mul(a, b));
                let rhs = g.mul(cs.h(cs.act(b, x), a), cs.h(x, b));
                if lhs != rhs {
                    fail(format!("cocycle rule at x={x}, g1={a}, g2={b}"));
                }
                if cs.act(a, cs.act(b, x)) != cs.act(g.mul(a, b), x) {
                    fail(format!("action law at x={x}, g1={a}, g2={b}"));
                }
            }
        }
    }
    let mut seen = vec![false; n];
    for a in 0..n {
        let (rep, ha) = cs.decompose(a);
        if g.mul(rep, ha) != a || rep != cs.section(cs.coset_of(a)) || !h.contains(ha) {
            fail(format!("decomposition of {a}"));
        }
        let key = cs.coset_of(a) * h.order() + h.position(ha).unwrap_or(0);
        if key >= n || std::mem::replace(&mut seen[key], true) {
            fail(format!("decomposition of {a} is not unique"));
        }
        for &hh in h.elements() {
            if cs.h_of_element(g.mul(a, hh)) != g.mul(cs.h_of_element(a), hh) {
                fail(format!("h(gh) != h(g)h at g={a}, h={hh}"));
            }
        }
    }
    for k in others {
        for x in 0..cs.num_cosets() {
            let s = cs.section(x);
            let formula = h.conjugate(s).intersection(k);
            if cs.stabilizer(k, x).elements() != formula.elements() {
                fail(format!("stabilizer formula at x={x}"));
            }
        }
    }
    if cs.num_cosets() > 0 && (0..cs.num_cosets()).any(|x| !(0..n).any(|a| cs.act(a, 0) == x)) {
        fail("action is not transitive".into());
    }
    failures
}

/// `h(x, g) = h(g)` for every `x`, `g`.
pub fn semidirect_violations(cs: &CosetSpace) -> usize {
    let n = cs.group().order();
    (0..cs.num_cosets())
        .map(|x| (0..n).filter(|&g| cs.h(x, g) != cs.h_of_element(g)).count())
        .sum()
}

/// Largest entry of `π(g₁)π(g₂) − π(g₁g₂)` over all pairs (or the group's
/// generating set times all elements above the exhaustive limit).
pub fn induced_homomorphism_residual(space: &FieldSpace) -> f64 {
    let g = space.group();
    let n = g.order();
    let mats: Vec<_> = (0..n).map(|a| space.induced_matrix(a)).collect();
    let left: Vec<usize> = if n <= EXHAUSTIVE_CHECK_LIMIT { (0..n).collect() } else { g.generating_set() };
    let mut worst: f64 = 0.0;
    for &a in &left {
        for b in 0..n {
            worst = worst.max((&mats[a] * &mats[b] - &mats[g.mul(a, b)]).amax());
        }
    }
    let identity = nalgebra::DMatrix::<f64>::identity(space.dim(), space.dim());
    worst.max((&mats[0] - identity).amax())
}

/// `Λ⁻¹Λ = id`, `ΛΛ⁻¹ = id` and `π_G(g)Λ = Λπ_C(g)` on random fields.
pub fn lift_residual(space: &FieldSpace, trials: usize, seed: u64) -> f64 {
    let mut rng = seeded_rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let f = space.random_section_field(&mut rng);
        let lifted = lift(&f);
        let back = unlift(&lifted).expect("lifted fields are Mackey");
        worst = worst.max((back.to_flat() - f.to_flat()).amax());
        let m = space.random_mackey_field(&mut rng);
        let again = lift(&unlift(&m).expect("projected fields are Mackey"));
        for (a, b) in again.values().iter().zip(m.values()) {
            worst = worst.max((a - b).amax());
        }
        for u in 0..space.group().order() {
            let lhs = act_g(u, &lifted);
            let rhs = lift(&act_c(u, &f));
            for (a, b) in lhs.values().iter().zip(rhs.values()) {
                worst = worst.max((a - b).amax());
            }
        }
    }
    worst
}

fn kernel_diff<K: Kernel>(a: &K, b: &K) -> f64 {
    (a.to_flat() - b.to_flat()).amax()
}

/// Round trips `Ω_K⁻¹Ω_K`, `Ω_KΩ_K⁻¹`, `Λ_K⁻¹Λ_K`, `Λ_KΛ_K⁻¹` and the
/// K_G → K_D restriction, on each basis element; also the largest
/// constraint residual of every converted kernel.
fn roundtrip_residual(basis: &[KernelD]) -> mackey::Result<(f64, f64, Vec<KernelC>)> {
    let mut worst: f64 = 0.0;
    let mut constraint: f64 = 0.0;
    let mut expanded = Vec::with_capacity(basis.len());
    for kd in basis {
        let kc = expand_d_to_c(kd)?;
        let kg = lift_c_to_g(&kc)?;
        constraint = constraint.max(kc.relative_residual()).max(kg.relative_residual());
        worst = worst.max(kernel_diff(&restrict_c_to_d(&kc)?, kd));
        worst = worst.max(kernel_diff(&expand_d_to_c(&restrict_c_to_d(&kc)?)?, &kc));
        worst = worst.max(kernel_diff(&restrict_g_to_c(&kg)?, &kc));
        worst = worst.max(kernel_diff(&lift_c_to_g(&restrict_g_to_c(&kg)?)?, &kg));
        worst = worst.max(kernel_diff(&restrict_g_to_d(&kg)?, kd));
        expanded.push(kc);
    }
    Ok((worst, constraint, expanded))
}

/// Largest spread of `[Ω_K κ̄](y)` over the valid `H₂` choices.
fn omega_choice_spread(basis: &[KernelD]) -> mackey::Result<f64> {
    let mut worst: f64 = 0.0;
    for kd in basis {
        let space = kd.space();
        for y in 0..space.cosets1().num_cosets() {
            let choices = omega_choices(space, y);
            let first = omega_value(kd, y, choices[0])?;
            for &h in &choices[1..] {
                worst = worst.max((omega_value(kd, y, h)? - &first).amax());
            }
        }
    }
    Ok(worst)
}

fn optional_too_large<T>(r: mackey::Result<T>) -> CliResult<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::TooLarge { .. }) => Ok(None),
        Err(e) => Err(CliError::solver(e)),
    }
}

/// Runs every suite on one resolved config.
pub fn verify(r: &Resolved, opts: &VerifyOptions) -> CliResult<Verification> {
    let mut checks = Vec::new();
    let ks = &r.kernel_space;
    let cs1 = r.input.cosets();
    let cs2 = r.output.cosets();
    let (h1, h2) = (cs1.subgroup(), cs2.subgroup());

    let mut violations = coset_identity_violations(cs1, &[h2]);
    violations.extend(coset_identity_violations(cs2, &[h1]));
    checks.push(check("coset_identities", violations.is_empty(), violations.join("; ")));
    if r.semidirect_input {
        let count = semidirect_violations(cs1);
        checks.push(check("semidirect_h", count == 0, format!("{count} pairs with h(x, g) != h(g)")));
    }
    let dcs = ks.dcosets();
    let stabilizer_reps = (0..dcs.num()).try_for_each(|x| rho1_x_rep(ks.rho1(), dcs, x).map(|_| ()));
    checks.push(check(
        "stabilizer_representations",
        stabilizer_reps.is_ok(),
        stabilizer_reps.err().map(|e| e.to_string()).unwrap_or_default(),
    ));

    let induced = induced_homomorphism_residual(&r.input).max(induced_homomorphism_residual(&r.output));
    checks.push(check("induced_homomorphism", induced < EXACT_TOL, format!("{induced:e}")));
    let lift = (opts.trials > 0)
        .then(|| lift_residual(&r.input, opts.trials, opts.seed).max(lift_residual(&r.output, opts.trials, opts.seed)));
    if let Some(l) = lift {
        checks.push(check("lift_consistency", l < EXACT_TOL, format!("{l:e}")));
    }

    let basis = solve_basis_d(ks);
    let naive = optional_too_large(solve_basis_g_naive(ks))?;
    let (roundtrip, constraint, expanded) = roundtrip_residual(&basis.kernels).map_err(CliError::solver)?;
    let lifted: Vec<_> = expanded.iter().map(|kc| lift_c_to_g(kc).map_err(CliError::solver)).collect::<CliResult<_>>()?;
    let c_to_g_rank = flat_rank(&lifted);
    checks.push(check("roundtrip", roundtrip < EXACT_TOL, format!("{roundtrip:e}")));
    checks.push(check("converted_constraints", constraint < CONSTRAINT_TOL, format!("{constraint:e}")));
    let spread = omega_choice_spread(&basis.kernels).map_err(CliError::solver)?;
    checks.push(check("omega_choice", spread < EXACT_TOL, format!("{spread:e}")));

    let oracle = optional_too_large(intertwiner_oracle(&r.input, &r.output))?;
    let span = match &oracle {
        Some(q) => {
            let maps = correlation_maps(&r.input, &r.output, &basis.kernels).map_err(CliError::solver)?;
            let m = span_match(&maps, q, basis.dim());
            checks.push(check("span_match", m.matched, format!("{:e}", m.residual)));
            Some(m.residual)
        }
        None => None,
    };
    let dims = Dims {
        d: basis.dim(),
        g_naive: naive.as_ref().map(|b| b.dim()),
        c_to_g_rank,
        oracle: oracle.as_ref().map(|q| q.ncols()),
    };
    let dims_equal = dims.g_naive.is_none_or(|g| g == dims.d)
        && dims.oracle.is_none_or(|o| o == dims.d)
        && dims.c_to_g_rank == dims.d;
    checks.push(check("dimension_equality", dims_equal, dims.summary()));

    let mut mackey = None;
    let mut equivariance = None;
    let mut noise_injected = None;
    if opts.trials > 0 {
        let mut rng = seeded_rng(opts.seed);
        let mut worst: f64 = 0.0;
        for kg in &lifted {
            for _ in 0..opts.trials.min(4) {
                let f = r.input.random_mackey_field(&mut rng);
                let out = correlate_g(kg, &f, &r.output).map_err(CliError::solver)?;
                worst = worst.max(out.residual());
            }
        }
        checks.push(check("mackey", worst < CONSTRAINT_TOL, format!("{worst:e}")));
        mackey = Some(worst);

        let mut layers = Vec::new();
        match opts.inject_noise {
            None => {
                for kd in &basis.kernels {
                    layers.push(LayerKernel::D(kd.clone()));
                }
            }
            Some(amplitude) => {
                let mut injected = true;
                for (i, kc) in expanded.iter().enumerate() {
                    match inject_noise(kc, amplitude, opts.seed.wrapping_add(i as u64)) {
                        Some(noisy) => layers.push(LayerKernel::C(noisy)),
                        None => {
                            injected = false;
                            layers.push(LayerKernel::C(kc.clone()));
                        }
                    }
                }
                if expanded.is_empty() {
                    // An empty basis still gets one corrupted layer.
                    match inject_noise(&KernelC::zeros(ks.clone()), amplitude, opts.seed) {
                        Some(noisy) => layers.push(LayerKernel::C(noisy)),
                        None => injected = false,
                    }
                }
                noise_injected = Some(injected);
            }
        }
        let mut worst: f64 = 0.0;
        for (i, kernel) in layers.into_iter().enumerate() {
            let layer = LayerSpec::new(r.input.clone(), r.output.clone(), kernel).map_err(CliError::solver)?;
            let res = equivariance_residual(&layer, opts.trials, opts.seed.wrapping_add(i as u64))
                .map_err(CliError::solver)?;
            worst = worst.max(res);
        }
        checks.push(check("equivariance", worst < opts.tol, format!("{worst:e}")));
        equivariance = Some(worst);
    }

    Ok(Verification {
        dims,
        equivariance,
        mackey,
        roundtrip,
        lift,
        induced,
        span,
        noise_injected,
        checks,
    })
}
