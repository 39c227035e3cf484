//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --release -p csm-core --test acceptance`; pass criterion
//! numbers after `--` to run a subset. Criterion 6 takes several minutes.

use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use csm_core::ansatz::{generate_basis, solve_with_systems};
use csm_core::bound::{
    field_field_bound, gaussian_asymptotic_bound, infinite_field_bound, named_set, simple_bound, single_quantity_limit,
    solve_bound, Backend, BoundProblem, Flag,
};
use csm_core::dense::dense_scalar_product;
use csm_core::ed::{ed_persisting_correlation, DEFAULT_DEG_TOL};
use csm_core::extrapolation::{extrapolate_inv_n, fit_log_over_x, Series};
use csm_core::gaussian::{analytic_moment, monte_carlo_moment, GaussianModel};
use csm_core::numeric::ratio_to_f64;
use csm_core::pauli::{symbolic_scalar_product, SymbolicSystem};
use csm_core::regen::{regenerate_appendix_c, RegenerationOptions};
use csm_core::tables::ElementEvaluator;
use csm_core::{CouplingSet, Error, FieldStrength, Normalization, Quantity};

/// Criteria that cannot be met as stated; they print FAIL without failing the run.
const KNOWN_RED: &[u32] = &[8];

struct Outcome {
    ok: bool,
    detail: String,
}

impl Outcome {
    fn new(ok: bool, detail: impl Into<String>) -> Self {
        Outcome { ok, detail: detail.into() }
    }
}

fn q(p: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(d))
}

fn ints(v: &[i64]) -> Vec<BigRational> {
    v.iter().map(|&k| q(k, 1)).collect()
}

fn exp_couplings(n: usize, x: f64) -> CouplingSet {
    CouplingSet::exponential(n, x, Normalization::Sigma2Unit).unwrap()
}

fn s0z_bound(qs: Vec<Quantity>, c: CouplingSet, h: f64) -> csm_core::Result<f64> {
    s0z_bound_with(qs, c, h, Backend::Tables)
}

fn s0z_bound_with(qs: Vec<Quantity>, c: CouplingSet, h: f64, backend: Backend) -> csm_core::Result<f64> {
    let p = BoundProblem::new(Quantity::S0z, qs, c, FieldStrength::from_f64(h)?).with_backend(backend);
    let r = solve_bound(&p)?;
    if r.has(Flag::IllConditioned) {
        return Err(Error::InvalidParameter(format!("ill-conditioned, residual {:.1e}", r.residual)));
    }
    Ok(r.value)
}

fn c1_worked_example() -> Outcome {
    let t = Instant::now();
    let basis = generate_basis(Quantity::Iz, Quantity::IzH0Power(2), true);
    let z = q(0, 1);
    let systems = vec![(ints(&[1]), z.clone()), (ints(&[1, 1]), z.clone()), (ints(&[1, 2]), z)];
    let e = match solve_with_systems(Quantity::Iz, Quantity::IzH0Power(2), &basis, &systems) {
        Ok(e) => e,
        Err(err) => return Outcome::new(false, err.to_string()),
    };
    let traces: Vec<BigRational> = e.provenance.iter().map(|p| p.trace.clone()).collect();
    let names: Vec<String> = basis.monomials.iter().map(ToString::to_string).collect();
    let ok_traces = traces == vec![q(2, 64), q(14, 64), q(33, 64)];
    let ok_coeff = names == ["N*S2", "S1^2", "S2"] && e.coefficients == vec![q(3, 64), q(2, 64), q(-3, 64)];
    let secs = t.elapsed().as_secs_f64();
    let shown: Vec<String> = traces.iter().map(ToString::to_string).collect();
    Outcome::new(
        ok_traces && ok_coeff && secs < 1.0,
        format!("traces {}, element {} in {secs:.3} s", shown.join(" "), e.polynomial()),
    )
}

fn c2_regeneration() -> Outcome {
    let t = Instant::now();
    match regenerate_appendix_c(&RegenerationOptions::default()) {
        Ok(r) => {
            let bad = r.mismatches().len();
            let secs = t.elapsed().as_secs_f64();
            Outcome::new(
                bad == 0 && r.adjudication.ends_with("16384 confirmed") && secs < 600.0,
                format!(
                    "{} checks, {bad} mismatches, max rel err {:.1e}, {secs:.0} s; {}",
                    r.checks.len(),
                    r.max_relative_error,
                    r.adjudication
                ),
            )
        }
        Err(e) => Outcome::new(false, e.to_string()),
    }
}

fn random_set(rng: &mut ChaCha8Rng, n: usize, zero_field: bool) -> Vec<Quantity> {
    use Quantity::*;
    let mut pool = vec![Iz, IzH0Power(1), IzH0Power(2), IzH0Power(3), H0Power(1), H0Power(2), H0Power(3)];
    if zero_field {
        pool.extend([IQz, IzI2H0]);
    }
    for l in 1..=n {
        pool.extend([Hl(l), HlZ(l)]);
    }
    let size = rng.gen_range(1..=5.min(pool.len()));
    let mut out = Vec::new();
    while out.len() < size {
        let c = pool[rng.gen_range(0..pool.len())];
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

fn c3_lower_bound() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    let mut flagged = 0;
    let mut dense = 0;
    for case in 0..200 {
        let n = rng.gen_range(1..=9);
        let j: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..2.0)).collect();
        let h = [0.0, 0.5, 2.0][rng.gen_range(0..3)];
        let qs = random_set(&mut rng, n, h == 0.0);
        let c = CouplingSet::from_f64(j).unwrap();
        let field = FieldStrength::from_f64(h).unwrap();
        // mixed l-indexed and power pairs have no table form; those sets go dense
        let bound = match s0z_bound(qs.clone(), c.clone(), h).or_else(|e| match e {
            Error::UnknownElement(..) => {
                dense += 1;
                s0z_bound_with(qs.clone(), c.clone(), h, Backend::Dense)
            }
            e => Err(e),
        }) {
            Ok(v) => v,
            Err(e) => {
                failures.push(format!("case {case}: {e}"));
                continue;
            }
        };
        let ed = ed_persisting_correlation(&c, &field, DEFAULT_DEG_TOL).unwrap();
        flagged += usize::from(ed.flagged);
        let gap = bound - ed.s_inf;
        worst = worst.max(gap);
        if gap > 1e-9 {
            failures.push(format!("case {case}: N={n} h={h} {qs:?} bound {bound} > ED {}", ed.s_inf));
        }
    }
    let one = CouplingSet::from_integers(&[1]).unwrap();
    let simple = simple_bound(&one);
    let ed1 = ed_persisting_correlation(&one, &FieldStrength::zero(), DEFAULT_DEG_TOL).unwrap().s_inf;
    let tight = simple == 0.125 && (ed1 - 0.125).abs() < 1e-14;
    let secs = t.elapsed().as_secs_f64();
    let mut detail = format!(
        "200 cases ({dense} on the dense backend), max bound - ED = {worst:.2e}, {flagged} ED groupings flagged; N=1: simple {simple}, ED {ed1:.16}; {secs:.1} s"
    );
    if !failures.is_empty() {
        detail = format!("{detail}; {}", failures.join("; "));
    }
    Outcome::new(failures.is_empty() && tight && secs < 600.0, detail)
}

fn c4_integrability_identities() -> Outcome {
    let js = [q(1, 1), q(3, 2), q(2, 5), q(7, 3)];
    let mut checked = 0;
    for n in 1..=4 {
        let c = CouplingSet::from_rationals(js[..n].to_vec()).unwrap();
        for h in [q(0, 1), q(3, 7)] {
            let sys = SymbolicSystem::new(&c, &FieldStrength::rational(h.clone())).unwrap();
            for l in 0..=n {
                for p in l + 1..=n {
                    let comm = sys.h_l(l).unwrap().commutator(&sys.h_l(p).unwrap()).unwrap();
                    if !comm.is_empty() {
                        return Outcome::new(false, format!("[H_{l}, H_{p}] has {} terms at N={n} h={h}", comm.len()));
                    }
                    checked += 1;
                }
            }
        }
        let sys = SymbolicSystem::new(&c, &FieldStrength::zero()).unwrap();
        let sb = sys.s0_dot_b();
        let lhs = sb.multiply(&sb).unwrap().scale_real(&q(4, 1));
        let rhs = sys.b_squared().sub(&sys.eta().scale_real(&q(2, 1))).unwrap();
        let diff = lhs.sub(&rhs).unwrap();
        if !diff.is_empty() {
            return Outcome::new(false, format!("4(S0.B)^2 - B^2 + 2 eta has {} terms at N={n}", diff.len()));
        }
    }
    Outcome::new(true, format!("{checked} commutators and 4 squared-field identities vanish exactly"))
}

fn c5_even_odd() -> Outcome {
    use Quantity::*;
    let ns = [256usize, 512, 1024, 2048, 4096];
    let mut ok = true;
    let mut parts = Vec::new();
    for qty in [Iz, IQz, IzH0Power(2)] {
        let pts: Vec<(f64, f64)> = ns
            .iter()
            .map(|&n| ((n as f64).ln(), s0z_bound(vec![qty], exp_couplings(n, 4.0), 0.0).unwrap().ln()))
            .collect();
        let slope = log_slope(&pts);
        ok &= (slope + 1.0).abs() <= 0.05;
        parts.push(format!("{qty} exponent {slope:.4}"));
    }
    let c = exp_couplings(4096, 4.0);
    let limit = single_quantity_limit(&c);
    for qty in [IzH0Power(3), IzI2H0] {
        let v = s0z_bound(vec![qty], c.clone(), 0.0).unwrap();
        ok &= (v - limit).abs() <= 1e-3;
        parts.push(format!("{qty} {v:.6} vs limit {limit:.6}"));
    }
    Outcome::new(ok, parts.join(", "))
}

fn log_slope(pts: &[(f64, f64)]) -> f64 {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn c6_thermodynamic_fits() -> Outcome {
    const XS: [f64; 8] = [6.0, 8.0, 11.0, 16.0, 22.0, 32.0, 45.0, 64.0];
    const NS: [usize; 11] = [128, 181, 256, 362, 512, 724, 1024, 1448, 2048, 2896, 4096];
    let t = Instant::now();
    let mut sx = Vec::new();
    for x in XS {
        let mut pts = Vec::new();
        for &n in NS.iter().filter(|&&n| n as f64 >= 8.0 * x) {
            let r = field_field_bound(&exp_couplings(n, x), None, Backend::Tables).unwrap();
            if r.has(Flag::IllConditioned) {
                return Outcome::new(false, format!("x={x} N={n}: residual {:.1e}", r.residual));
            }
            pts.push((n, r.value));
        }
        let fit = extrapolate_inv_n(&Series::new(x, pts).unwrap()).unwrap();
        sx.push((x, fit.intercept));
    }
    let mut rows = Vec::new();
    let mut prev = (0.0, 0.0);
    let mut monotone = true;
    let mut first = (0.0, 0.0);
    for xs in [6.0, 10.0, 14.0, 18.0, 24.0, 30.0] {
        let f = fit_log_over_x(&sx, xs, 64.0).unwrap();
        let (a, b) = (f.coefficients[0], f.coefficients[1]);
        if xs == 6.0 {
            first = (a, b);
        } else {
            monotone &= a >= prev.0 && b >= prev.1;
        }
        prev = (a, b);
        rows.push(format!("xStart {xs}: A {a:.5} B {b:.4}"));
    }
    let ok_a = ((first.0 - 0.05345) / 0.05345).abs() <= 0.10;
    let ok_b = ((first.1 - 0.1141) / 0.1141).abs() <= 0.25;
    Outcome::new(ok_a && ok_b && monotone, format!("{}; {:.0} s", rows.join(", "), t.elapsed().as_secs_f64()))
}

fn c7_finite_field() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for x in [1.0, 4.0] {
        let v = infinite_field_bound(x, 1e6).unwrap();
        ok &= (v - 0.25).abs() <= 1e-6;
    }
    parts.push("h = 1e6 limit within 1e-6 of 1/4".to_string());
    let mut worst: f64 = 0.0;
    for x in [1.0, 4.0] {
        for h in [1.0, 2.0, 4.0] {
            let v = s0z_bound(named_set("h-two", 0).unwrap(), exp_couplings(4096, x), h).unwrap();
            worst = worst.max((v - infinite_field_bound(x, h).unwrap()).abs());
        }
    }
    ok &= worst <= 1e-3;
    parts.push(format!("h-two at N=4096 vs closed form: max gap {worst:.1e}"));
    for h in [2.0, 4.0] {
        let two = s0z_bound(named_set("h-two", 0).unwrap(), exp_couplings(19, 1.0), h).unwrap();
        let six = s0z_bound(named_set("h-six", 0).unwrap(), exp_couplings(19, 1.0), h).unwrap();
        ok &= six > two;
        parts.push(format!("N=19 h={h}: h-six {six:.6} > h-two {two:.6}"));
        let c9 = exp_couplings(9, 1.0);
        let six9 = s0z_bound(named_set("h-six", 0).unwrap(), c9.clone(), h).unwrap();
        let ed = ed_persisting_correlation(&c9, &FieldStrength::from_f64(h).unwrap(), DEFAULT_DEG_TOL).unwrap().s_inf;
        ok &= six9 <= ed + 1e-9;
        parts.push(format!("N=9 h={h}: h-six {six9:.6} <= ED {ed:.6}"));
    }
    Outcome::new(ok, parts.join(", "))
}

fn c8_gaussian() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_z: f64 = 0.0;
    for setting in 0..10 {
        let sigma2 = rng.gen_range(0.5..2.0);
        let alpha2 = rng.gen_range(0.5..2.0);
        let rho: f64 = rng.gen_range(-0.9..0.9);
        let beta2 = rho * (sigma2 * alpha2 as f64).sqrt();
        let g = GaussianModel::new(sigma2, beta2, alpha2).unwrap();
        for m in 0..=4 {
            let est = monte_carlo_moment(m, &g, 1_000_000, 100 + setting).unwrap();
            let z = (est.mean - analytic_moment(m, &g).unwrap()).abs() / est.standard_error;
            worst_z = worst_z.max(z);
        }
    }
    let mut ok = worst_z <= 4.0;
    let mut parts = vec![format!("Monte Carlo: worst deviation {worst_z:.2} SE over 10 settings, m <= 4")];
    for x in [1.0, 4.0] {
        let c = exp_couplings(20, x);
        let vals: Vec<_> = (1..=20).map(|m| gaussian_asymptotic_bound(&c, m).unwrap()).collect();
        let clean = vals.iter().all(|r| !r.has(Flag::IllConditioned));
        let monotone = vals.windows(2).all(|w| w[1].value >= w[0].value);
        let tail = vals[11..].windows(2).map(|w| w[1].value - w[0].value).fold(0.0, f64::max);
        let good = clean && monotone && tail < 1e-6;
        ok &= good;
        parts.push(format!(
            "x={x}: mMax 20 value {:.8}, monotone {monotone}, largest increment beyond 12 {tail:.1e}{}",
            vals[19].value,
            if good { "" } else { " (needs < 1e-6)" }
        ));
    }
    Outcome::new(ok, parts.join(", "))
}

fn c9_backends() -> Outcome {
    use Quantity::*;
    let js = [q(1, 1), q(3, 2), q(2, 5), q(7, 3), q(5, 4)];
    let mut compared = 0;
    let mut skipped = 0;
    let mut worst: f64 = 0.0;
    for n in 1..=5 {
        let c = CouplingSet::from_rationals(js[..n].to_vec()).unwrap();
        for h in [q(0, 1), q(3, 4)] {
            let field = FieldStrength::rational(h.clone());
            let mut pool =
                vec![S0z, Bz, Iz, H0Power(1), H0Power(2), H0Power(3), IzH0Power(1), IzH0Power(2), IzH0Power(3)];
            if field.is_zero() {
                pool.extend([IQz, IzI2H0]);
            }
            for l in 1..=n {
                pool.extend([Hl(l), HlZ(l)]);
            }
            let ev = ElementEvaluator::<f64>::new(&c, &field);
            for (i, &a) in pool.iter().enumerate() {
                for &b in &pool[i..] {
                    let table = match ev.element(a, b) {
                        Ok(v) => v,
                        Err(Error::UnknownElement(..)) => {
                            skipped += 1;
                            continue;
                        }
                        Err(e) => return Outcome::new(false, format!("({a}|{b}) N={n}: {e}")),
                    };
                    let exact = ratio_to_f64(&symbolic_scalar_product(a, b, &c, &field).unwrap().re);
                    let dense = dense_scalar_product(a, b, &c, &field).unwrap();
                    let aa = ratio_to_f64(&symbolic_scalar_product(a, a, &c, &field).unwrap().re);
                    let bb = ratio_to_f64(&symbolic_scalar_product(b, b, &c, &field).unwrap().re);
                    let scale = exact.abs().max(1e-3 * (aa * bb).sqrt());
                    let err = (table - exact).abs().max((dense - exact).abs()) / scale;
                    worst = worst.max(err);
                    if err > 1e-10 {
                        return Outcome::new(
                            false,
                            format!("({a}|{b}) N={n} h={h}: tables {table}, dense {dense}, symbolic {exact}"),
                        );
                    }
                    compared += 1;
                }
            }
        }
    }
    let mut bound_gap: f64 = 0.0;
    for n in 1..=5 {
        let c = CouplingSet::from_rationals(js[..n].to_vec()).unwrap();
        for (set, h) in [("basic3", 0.0), ("all6-zero-field", 0.0), ("integrability", 0.0), ("h-six", 0.75)] {
            let p = BoundProblem::new(S0z, named_set(set, n).unwrap(), c.clone(), FieldStrength::from_f64(h).unwrap());
            let vals: Vec<f64> = [Backend::Tables, Backend::Dense, Backend::Symbolic]
                .into_iter()
                .map(|b| solve_bound(&p.clone().with_backend(b)).unwrap().value)
                .collect();
            bound_gap = bound_gap.max((vals[0] - vals[2]).abs()).max((vals[1] - vals[2]).abs());
        }
    }
    Outcome::new(
        bound_gap <= 1e-10,
        format!(
            "{compared} scalar products agree (max rel err {worst:.1e}, {skipped} pairs without a table form); \
             bounds differ by at most {bound_gap:.1e}"
        ),
    )
}

fn main() -> ExitCode {
    rayon::ThreadPoolBuilder::new().num_threads(1).build_global().ok();
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(u32, &str, fn() -> Outcome); 9] = [
        (1, "worked-example exactness", c1_worked_example),
        (2, "element table regeneration", c2_regeneration),
        (3, "lower-bound property", c3_lower_bound),
        (4, "integrability identities", c4_integrability_identities),
        (5, "even/odd scaling", c5_even_odd),
        (6, "thermodynamic-limit fits", c6_thermodynamic_fits),
        (7, "finite-field closed form", c7_finite_field),
        (8, "Gaussian machinery", c8_gaussian),
        (9, "backend equivalence", c9_backends),
    ];
    let mut unexpected = 0;
    for (k, name, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&k) {
            continue;
        }
        let t = Instant::now();
        let out = run();
        let tag = if out.ok { "PASS" } else { "FAIL" };
        println!("{tag} {k} {name} [{:.1} s]: {}", t.elapsed().as_secs_f64(), out.detail);
        if !out.ok && !KNOWN_RED.contains(&k) {
            unexpected += 1;
        }
        if !out.ok && KNOWN_RED.contains(&k) {
            println!("     criterion {k} is a known failure; documented in the README");
        }
    }
    if unexpected > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
