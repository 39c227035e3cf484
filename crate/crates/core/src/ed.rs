//! Persisting correlations from full diagonalization at small `N`.

use faer::{Mat, Side};
use rayon::prelude::*;
use serde::Serialize;

use crate::dense::{DenseOperator, DenseSystem, DEFAULT_DENSE_CAP};
use crate::error::{Error, Result};
use crate::model::{CouplingSet, FieldStrength};

/// Default degeneracy tolerance, relative to the spectral width.
pub const DEFAULT_DEG_TOL: f64 = 1e-10;
/// Gaps within this factor of the tolerance make the grouping ambiguous.
pub const GUARD_FACTOR: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdResult {
    #[serde(rename = "N")]
    pub n: usize,
    pub x: Option<f64>,
    pub couplings_hash: String,
    pub h: f64,
    #[serde(rename = "S_inf")]
    pub s_inf: f64,
    pub blocks: usize,
    pub flagged: bool,
    /// Values with the tolerance divided and multiplied by the guard factor;
    /// they differ from `s_inf` only when `flagged`.
    pub s_inf_tight: f64,
    pub s_inf_loose: f64,
}

fn couplings_hash(c: &CouplingSet) -> String {
    // FNV-1a over the bit patterns
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in c.values() {
        for b in v.to_bits().to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

/// Blocks of consecutive eigenvalues whose neighbouring gaps are at most `tol`.
pub fn group_levels(values: &[f64], tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > tol {
            out.push(start..i);
            start = i;
        }
    }
    out
}

fn is_ambiguous(values: &[f64], tol: f64) -> bool {
    values.windows(2).any(|w| {
        let g = w[1] - w[0];
        g > tol / GUARD_FACTOR && g <= tol * GUARD_FACTOR
    })
}

/// Real Hamiltonian on the sector with `ups` up spins among `sites`.
fn sector_matrix(j: &[f64], h: f64, sites: usize, ups: u32) -> (Vec<u64>, Mat<f64>) {
    let states: Vec<u64> = (0..1u64 << sites).filter(|s| (sites as u32 - s.count_ones()) == ups).collect();
    let index: std::collections::HashMap<u64, usize> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let n = j.len();
    let bit = |k: usize| 1u64 << (n - k);
    // bit set means spin down
    let sz = |s: u64, k: usize| if s & bit(k) == 0 { 0.5 } else { -0.5 };
    let mut m = Mat::<f64>::zeros(states.len(), states.len());
    for (a, &s) in states.iter().enumerate() {
        let s0 = sz(s, 0);
        let mut diag = -h * s0;
        for k in 1..=n {
            diag += j[k - 1] * s0 * sz(s, k);
            if sz(s, k) != s0 {
                let t = s ^ bit(0) ^ bit(k);
                m.write(index[&t], a, 0.5 * j[k - 1]);
            }
        }
        m.write(a, a, diag);
    }
    (states, m)
}

struct Sector {
    values: Vec<f64>,
    /// `<n|S0z|m>` in the eigenbasis of the sector.
    s0z: Mat<f64>,
}

fn diagonalize_sectors(c: &CouplingSet, h: f64) -> Result<Vec<Sector>> {
    let n = c.n();
    if n > DEFAULT_DENSE_CAP {
        return Err(Error::ResourceExceeded(format!("N = {n} exceeds the dense cap {DEFAULT_DENSE_CAP}")));
    }
    let sites = n + 1;
    let j = c.values().to_vec();
    Ok((0..=sites as u32)
        .into_par_iter()
        .map(|ups| {
            let (states, m) = sector_matrix(&j, h, sites, ups);
            let evd = m.selfadjoint_eigendecomposition(Side::Lower);
            let d = states.len();
            let mut order: Vec<usize> = (0..d).collect();
            let vals: Vec<f64> = (0..d).map(|i| evd.s().column_vector().read(i)).collect();
            order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
            let u = evd.u();
            let diag: Vec<f64> = states.iter().map(|&s| if s & (1u64 << n) == 0 { 0.5 } else { -0.5 }).collect();
            let s0z = Mat::<f64>::from_fn(d, d, |a, b| {
                let (ca, cb) = (order[a], order[b]);
                (0..d).map(|k| u.read(k, ca) * diag[k] * u.read(k, cb)).sum()
            });
            Sector { values: order.iter().map(|&i| vals[i]).collect(), s0z }
        })
        .collect())
}

fn block_weight(sectors: &[Sector], tol: f64) -> (f64, usize) {
    let mut total = 0.0;
    let mut blocks = 0;
    for s in sectors {
        for r in group_levels(&s.values, tol) {
            blocks += 1;
            for a in r.clone() {
                for b in r.clone() {
                    let v = s.s0z.read(a, b);
                    total += v * v;
                }
            }
        }
    }
    (total, blocks)
}

/// `S_inf = (1/dim) sum_blocks |P_b S0z P_b|_F^2`, blocked by total `S^z`.
pub fn ed_persisting_correlation(c: &CouplingSet, h: &FieldStrength, deg_tol: f64) -> Result<EdResult> {
    let sectors = diagonalize_sectors(c, h.value())?;
    let all = sectors.iter().flat_map(|s| s.values.iter().copied());
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let tol = deg_tol * (hi - lo).max(f64::MIN_POSITIVE);
    let dim = (1u64 << (c.n() + 1)) as f64;
    let (w, blocks) = block_weight(&sectors, tol);
    let flagged = sectors.iter().any(|s| is_ambiguous(&s.values, tol));
    let (tight, loose) = if flagged {
        (block_weight(&sectors, tol / GUARD_FACTOR).0 / dim, block_weight(&sectors, tol * GUARD_FACTOR).0 / dim)
    } else {
        (w / dim, w / dim)
    };
    Ok(EdResult {
        n: c.n(),
        x: c.x(),
        couplings_hash: couplings_hash(c),
        h: h.value(),
        s_inf: w / dim,
        blocks,
        flagged,
        s_inf_tight: tight,
        s_inf_loose: loose,
    })
}

/// As [`ed_persisting_correlation`], but an ambiguous grouping is an error.
pub fn ed_persisting_correlation_strict(c: &CouplingSet, h: &FieldStrength, deg_tol: f64) -> Result<f64> {
    let r = ed_persisting_correlation(c, h, deg_tol)?;
    if r.flagged {
        return Err(Error::AmbiguousDegeneracy(format!(
            "groupings give {} (tight) and {} (loose)",
            r.s_inf_tight, r.s_inf_loose
        )));
    }
    Ok(r.s_inf)
}

/// Time-averaged autocorrelation of any Hermitian operator, from the full spectrum.
pub fn ed_persisting_observable(c: &CouplingSet, h: &FieldStrength, op: &DenseOperator, deg_tol: f64) -> Result<f64> {
    let mut sys = DenseSystem::new(c, h)?;
    let ham = sys.h0_power(1)?;
    let evd = ham.matrix().selfadjoint_eigendecomposition(Side::Lower);
    let d = ham.dim();
    let vals: Vec<f64> = (0..d).map(|i| evd.s().column_vector().read(i).re).collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let tol = deg_tol * (sorted[d - 1] - sorted[0]).max(f64::MIN_POSITIVE);
    if is_ambiguous(&sorted, tol) {
        return Err(Error::AmbiguousDegeneracy("gap inside the guard band".into()));
    }
    let u = evd.u();
    let rotated = u.adjoint() * op.matrix() * u;
    let mut total = 0.0;
    for r in group_levels(&sorted, tol) {
        for a in r.clone() {
            for b in r.clone() {
                let v = rotated.read(order[a], order[b]);
                total += v.re * v.re + v.im * v.im;
            }
        }
    }
    Ok(total / d as f64)
}
