use std::fs::File;
use std::io::{self, Read, Write};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use csm_core::bound::{
    field_field_bound, gaussian_asymptotic_bound, named_set, solve_bound, solve_bound_with, Backend, BoundProblem,
    BoundRecord, BoundResult, Flag, Precision,
};
use csm_core::descriptor::parse_list;
use csm_core::ed::{ed_persisting_correlation, DEFAULT_DEG_TOL};
use csm_core::extrapolation::{
    extrapolate_inv_n, extrapolate_inv_n_degree, fit_log_over_x, read_two_column, series_from_rows,
};
use csm_core::gaussian::{analytic_moment, monte_carlo_moment, GaussianModel};
use csm_core::regen::{regenerate_appendix_c, solve_elements as solve_pairs, RegenerationOptions};
use csm_core::tables::{table, Section};
use csm_core::{CouplingSet, FieldStrength, Normalization, Quantity};

use crate::lists;
use crate::SystemArgs;

const ILL_CONDITIONED_EXIT: u8 = 2;

fn emit(output: &Option<String>, text: &str) -> Result<()> {
    match output.as_deref() {
        None | Some("-") => {
            io::stdout().write_all(text.as_bytes())?;
        }
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {path}"))?,
    }
    Ok(())
}

fn open_input(path: &str) -> Result<Box<dyn Read>> {
    Ok(if path == "-" {
        Box::new(io::stdin())
    } else {
        Box::new(File::open(path).with_context(|| format!("opening {path}"))?)
    })
}

fn json(v: &impl Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

pub fn build_couplings(s: &SystemArgs) -> Result<CouplingSet> {
    let c = if let Some(path) = &s.couplings {
        CouplingSet::from_text(&std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?)?
    } else if let Some(j) = &s.j {
        CouplingSet::from_text(&lists::words(j).join("\n"))?
    } else {
        let n = s.n.context("give --N (with --x), --J or --couplings")?;
        let norm: Normalization = s.normalization.parse()?;
        CouplingSet::exponential(n, s.x.unwrap_or(1.0), norm)?
    };
    if let Some(n) = s.n {
        if n != c.n() {
            bail!("--N {n} disagrees with {} couplings given", c.n());
        }
    }
    Ok(c)
}

enum SetSpec {
    Quantities(Vec<Quantity>),
    /// Overhauser-field bound from `{I^z, H_l^z}`.
    FieldField,
}

fn resolve_set(set: Option<&str>, quantities: Option<&str>, n: usize) -> Result<SetSpec> {
    match (set, quantities) {
        (Some(_), Some(_)) => bail!("give --set or --quantities, not both"),
        (None, Some(q)) => Ok(SetSpec::Quantities(parse_list(q)?)),
        (Some("bb"), None) => Ok(SetSpec::FieldField),
        (Some("ss"), None) => Ok(SetSpec::Quantities(named_set("integrability", n)?)),
        (Some(name), None) => Ok(SetSpec::Quantities(named_set(name, n)?)),
        (None, None) => bail!("give --set (one of {}, bb, ss) or --quantities", csm_core::bound::NAMED_SETS.join(", ")),
    }
}

struct Request<'a> {
    target: Quantity,
    set: &'a SetSpec,
    backend: Backend,
    precision: Precision,
}

fn compute(req: &Request, c: &CouplingSet, h: f64) -> Result<(BoundRecord, BoundResult)> {
    let field = FieldStrength::from_f64(h)?;
    match req.set {
        SetSpec::FieldField => {
            if !field.is_zero() {
                bail!("the field-field bound is defined at h = 0 only");
            }
            let mut qs = vec![Quantity::Iz];
            qs.extend((1..=c.n()).map(Quantity::HlZ));
            let r = field_field_bound(c, Some(qs.clone()), req.backend)?;
            let p = BoundProblem::new(Quantity::Bz, qs, c.clone(), field).with_backend(req.backend);
            Ok((BoundRecord::new(&p, &r), r))
        }
        SetSpec::Quantities(qs) => {
            let p = BoundProblem::new(req.target, qs.clone(), c.clone(), field).with_backend(req.backend);
            let r = match req.precision {
                Precision::Double => solve_bound(&p)?,
                other => solve_bound_with(&p, other)?,
            };
            Ok((BoundRecord::new(&p, &r), r))
        }
    }
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Observable: s0z or bz.
    #[arg(long, default_value = "s0z")]
    pub target: String,
    /// Named quantity set, or `bb` for the field-field bound and `ss` for the integrability set.
    #[arg(long)]
    pub set: Option<String>,
    /// Explicit comma-separated quantities, e.g. `Iz,IzH0,HlZ:3`.
    #[arg(long)]
    pub quantities: Option<String>,
    /// tables, dense or symbolic.
    #[arg(long, default_value = "tables")]
    pub backend: String,
    /// Significand bits for the table backend: 53, 128 or 256.
    #[arg(long, default_value = "53")]
    pub precision: String,
    #[arg(long)]
    pub output: Option<String>,
}

pub fn bound(a: &BoundArgs) -> Result<u8> {
    let c = build_couplings(&a.system)?;
    let set = resolve_set(a.set.as_deref(), a.quantities.as_deref(), c.n())?;
    let req =
        Request { target: a.target.parse()?, set: &set, backend: a.backend.parse()?, precision: a.precision.parse()? };
    let (record, result) = compute(&req, &c, a.system.h)?;
    emit(&a.output, &json(&record)?)?;
    Ok(if result.has(Flag::IllConditioned) { ILL_CONDITIONED_EXIT } else { 0 })
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    /// Bath sizes: `16,32`, `16:4096:*2` or `10:50:10`.
    #[arg(long = "N")]
    pub n: Option<String>,
    /// Spreads, e.g. `1,4` or `6:64:2`.
    #[arg(long, default_value = "1")]
    pub x: String,
    /// Fields, e.g. `0:8:0.5`.
    #[arg(long, default_value = "0")]
    pub h: String,
    /// Comma-separated set names, including `bb` and `ss`.
    #[arg(long, default_value = "basic3")]
    pub set: String,
    #[arg(long, default_value = "s0z")]
    pub target: String,
    #[arg(long, default_value = "tables")]
    pub backend: String,
    #[arg(long, default_value = "53")]
    pub precision: String,
    #[arg(long, default_value = "sigma2")]
    pub normalization: String,
    /// Skip points with N below this multiple of x (8 reproduces the usual filter).
    #[arg(long)]
    pub min_ratio: Option<f64>,
    /// csv or json.
    #[arg(long, default_value = "csv")]
    pub format: String,
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Serialize)]
struct ScanRow {
    #[serde(rename = "N")]
    n: usize,
    x: f64,
    h: f64,
    set: String,
    value: f64,
    rank: usize,
    residual: f64,
    flags: String,
}

pub fn scan(a: &ScanArgs) -> Result<u8> {
    let ns = lists::sizes(a.n.as_deref().context("scan needs --N")?)?;
    let xs = lists::floats(&a.x)?;
    let hs = lists::floats(&a.h)?;
    let sets = lists::words(&a.set);
    let norm: Normalization = a.normalization.parse()?;
    let target: Quantity = a.target.parse()?;
    let backend: Backend = a.backend.parse()?;
    let precision: Precision = a.precision.parse()?;
    let mut points = Vec::new();
    for name in &sets {
        for &x in &xs {
            for &h in &hs {
                for &n in &ns {
                    if a.min_ratio.is_some_and(|r| (n as f64) < r * x) {
                        continue;
                    }
                    points.push((name.clone(), x, h, n));
                }
            }
        }
    }
    let rows: Vec<(ScanRow, BoundRecord)> = points
        .par_iter()
        .map(|(name, x, h, n)| -> Result<(ScanRow, BoundRecord)> {
            let c = CouplingSet::exponential(*n, *x, norm)?;
            let set = resolve_set(Some(name), None, *n)?;
            let req = Request { target, set: &set, backend, precision };
            let (record, r) = compute(&req, &c, *h).with_context(|| format!("set {name}, N={n}, x={x}, h={h}"))?;
            let flags: Vec<String> = r.flags.iter().map(ToString::to_string).collect();
            let row = ScanRow {
                n: *n,
                x: *x,
                h: *h,
                set: name.clone(),
                value: r.value,
                rank: r.rank,
                residual: r.residual,
                flags: flags.join("|"),
            };
            Ok((row, record))
        })
        .collect::<Result<_>>()?;
    let mut rows = rows;
    rows.sort_by(|(p, _), (q, _)| {
        p.set.cmp(&q.set).then(p.x.total_cmp(&q.x)).then(p.h.total_cmp(&q.h)).then(p.n.cmp(&q.n))
    });
    let ill = rows.iter().any(|(r, _)| r.flags.contains("ILL_CONDITIONED"));
    let text = match a.format.as_str() {
        "csv" => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for (r, _) in &rows {
                w.serialize(r)?;
            }
            if rows.is_empty() {
                w.write_record(["N", "x", "h", "set", "value", "rank", "residual", "flags"])?;
            }
            String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?
        }
        "json" => json(&rows.iter().map(|(_, rec)| rec).collect::<Vec<_>>())?,
        other => bail!("unknown format '{other}'"),
    };
    emit(&a.output, &text)?;
    Ok(if ill { ILL_CONDITIONED_EXIT } else { 0 })
}

#[derive(Args, Debug)]
pub struct ExtrapolateArgs {
    /// Two-column `N,value` CSV; `-` reads standard input.
    #[arg(long = "in")]
    pub input: Option<String>,
    /// Spread the series belongs to; sets the degree and the N >= 8x filter.
    #[arg(long)]
    pub x: Option<f64>,
    /// Override the polynomial degree.
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub output: Option<String>,
}

pub fn extrapolate(a: &ExtrapolateArgs) -> Result<u8> {
    let rows = read_two_column(open_input(a.input.as_deref().context("extrapolate needs --in")?)?)?;
    let s = series_from_rows(a.x.context("extrapolate needs --x")?, &rows)?;
    let fit = match a.degree {
        Some(d) => extrapolate_inv_n_degree(&s, d)?,
        None => extrapolate_inv_n(&s)?,
    };
    emit(&a.output, &json(&fit)?)?;
    Ok(0)
}

#[derive(Args, Debug)]
pub struct FitLogArgs {
    /// Two-column `x,S` CSV; `-` reads standard input.
    #[arg(long = "in")]
    pub input: Option<String>,
    #[arg(long, default_value_t = 6.0)]
    pub xstart: f64,
    #[arg(long, default_value_t = 64.0)]
    pub xend: f64,
    /// text or json.
    #[arg(long, default_value = "text")]
    pub format: String,
    #[arg(long)]
    pub output: Option<String>,
}

pub fn fit_log(a: &FitLogArgs) -> Result<u8> {
    let rows = read_two_column(open_input(a.input.as_deref().context("fit-log needs --in")?)?)?;
    let fit = fit_log_over_x(&rows, a.xstart, a.xend)?;
    let text = match a.format.as_str() {
        "json" => json(&fit)?,
        "text" => format!(
            "A = {:.6} +/- {:.6}\nB = {:.5} +/- {:.5}\npoints = {}\n",
            fit.coefficients[0], fit.uncertainties[0], fit.coefficients[1], fit.uncertainties[1], fit.points_used
        ),
        other => bail!("unknown format '{other}'"),
    };
    emit(&a.output, &text)?;
    Ok(0)
}

#[derive(Args, Debug)]
pub struct SolveElementsArgs {
    /// Pairs as `LHS|RHS`, comma separated; default is every solvable table entry.
    #[arg(long)]
    pub pairs: Option<String>,
    /// Restrict to h = 0 (smaller monomial basis).
    #[arg(long)]
    pub zero_field: bool,
    #[arg(long)]
    pub output: Option<String>,
}

fn pair(item: &str) -> Result<(Quantity, Quantity)> {
    let (l, r) = item.split_once('|').ok_or_else(|| anyhow!("pair '{item}' must read LHS|RHS"))?;
    Ok((l.parse()?, r.parse()?))
}

pub fn solve_elements(a: &SolveElementsArgs) -> Result<u8> {
    let mut out = String::new();
    let mut emit_group = |title: &str, pairs: &[(Quantity, Quantity)], zero_field: bool| -> Result<()> {
        out.push_str(&format!("[{title}]\n"));
        for (l, r, p) in solve_pairs(pairs, zero_field)? {
            out.push_str(&format!("{l} {r} : {p}\n"));
        }
        Ok(())
    };
    match &a.pairs {
        Some(list) => {
            let pairs = lists::words(list).iter().map(|p| pair(p)).collect::<Result<Vec<_>>>()?;
            emit_group(if a.zero_field { "zero-field" } else { "any-h" }, &pairs, a.zero_field)?;
        }
        None => {
            for section in [Section::AnyH, Section::ZeroField, Section::Derived] {
                let zero_field = section == Section::ZeroField || a.zero_field;
                let pairs: Vec<(Quantity, Quantity)> =
                    table().entries().iter().filter(|e| e.section == section).map(|e| (e.lhs, e.rhs)).collect();
                emit_group(section.name(), &pairs, zero_field)?;
            }
        }
    }
    emit(&a.output, &out)?;
    Ok(0)
}

#[derive(Args, Debug)]
pub struct RegenerateArgs {
    /// Bath sizes for the dense comparison.
    #[arg(long, default_value = "2:6:1")]
    pub sizes: String,
    /// Random coupling sets per size.
    #[arg(long, default_value_t = 5)]
    pub sets: usize,
    #[arg(long, default_value = "0,0.7,3.2")]
    pub fields: String,
    #[arg(long, default_value_t = 1e-11)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 11)]
    pub seed: u64,
    /// text or json.
    #[arg(long, default_value = "text")]
    pub format: String,
    #[arg(long)]
    pub output: Option<String>,
}

pub fn regenerate(a: &RegenerateArgs) -> Result<u8> {
    let opts = RegenerationOptions {
        sizes: lists::sizes(&a.sizes)?,
        sets_per_size: a.sets,
        fields: lists::floats(&a.fields)?,
        tolerance: a.tolerance,
        seed: a.seed,
    };
    let report = regenerate_appendix_c(&opts)?;
    let text = match a.format.as_str() {
        "json" => json(&report)?,
        "text" => format!("{report}\n"),
        other => bail!("unknown format '{other}'"),
    };
    emit(&a.output, &text)?;
    Ok(if report.mismatches().is_empty() { 0 } else { 1 })
}

#[derive(Args, Debug)]
pub struct EdArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Degeneracy tolerance relative to the spectral width.
    #[arg(long, default_value_t = DEFAULT_DEG_TOL)]
    pub deg_tol: f64,
    #[arg(long)]
    pub output: Option<String>,
}

pub fn ed(a: &EdArgs) -> Result<u8> {
    let c = build_couplings(&a.system)?;
    let r = ed_persisting_correlation(&c, &FieldStrength::from_f64(a.system.h)?, a.deg_tol)?;
    emit(&a.output, &json(&r)?)?;
    if r.flagged {
        eprintln!("ambiguous degeneracy grouping: S_inf between {} and {}", r.s_inf_tight, r.s_inf_loose);
        return Ok(ILL_CONDITIONED_EXIT);
    }
    Ok(0)
}

#[derive(Args, Debug)]
pub struct GaussianArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Highest moment checked against sampling.
    #[arg(long, default_value_t = 4)]
    pub moments: u32,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Largest number of quantities `I^z H_0^{2k-1}` in the asymptotic bound.
    #[arg(long, default_value_t = 12)]
    pub mmax: u32,
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Serialize)]
struct MomentCheck {
    m: u32,
    analytic: f64,
    sampled: f64,
    standard_error: f64,
    deviation_in_se: f64,
}

#[derive(Serialize)]
struct AsymptoticPoint {
    m_max: u32,
    value: f64,
    residual: f64,
    flags: Vec<Flag>,
}

#[derive(Serialize)]
struct GaussianReport {
    #[serde(rename = "N")]
    n: usize,
    x: Option<f64>,
    sigma2: f64,
    beta2: f64,
    alpha2: f64,
    moments: Vec<MomentCheck>,
    asymptotic_bound: Vec<AsymptoticPoint>,
}

pub fn gaussian_check(a: &GaussianArgs) -> Result<u8> {
    let c = build_couplings(&a.system)?;
    let g = GaussianModel::from_couplings(&c)?;
    let moments = (0..=a.moments)
        .map(|m| -> Result<MomentCheck> {
            let exact = analytic_moment(m, &g)?;
            let est = monte_carlo_moment(m, &g, a.samples, a.seed)?;
            Ok(MomentCheck {
                m,
                analytic: exact,
                sampled: est.mean,
                standard_error: est.standard_error,
                deviation_in_se: (est.mean - exact) / est.standard_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let asymptotic_bound = (1..=a.mmax)
        .map(|m| -> Result<AsymptoticPoint> {
            let r = gaussian_asymptotic_bound(&c, m)?;
            Ok(AsymptoticPoint { m_max: m, value: r.value, residual: r.residual, flags: r.flags })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = GaussianReport {
        n: c.n(),
        x: c.x(),
        sigma2: g.cov.sigma2,
        beta2: g.cov.beta2,
        alpha2: g.cov.alpha2,
        moments,
        asymptotic_bound,
    };
    emit(&a.output, &json(&report)?)?;
    Ok(0)
}

pub fn couplings(s: &SystemArgs) -> Result<u8> {
    let c = build_couplings(s)?;
    print!("{}", c.to_text());
    Ok(0)
}
