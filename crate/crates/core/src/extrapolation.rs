//! Polynomial extrapolation in `1/N` and the `A ln(x/B)/x` fit.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::linalg::least_squares;

/// Bound values at increasing `N` for one spread `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub x: f64,
    pub points: Vec<(usize, f64)>,
}

impl Series {
    pub fn new(x: f64, mut points: Vec<(usize, f64)>) -> Result<Self> {
        points.sort_by_key(|p| p.0);
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("repeated N in series".into()));
        }
        if points.iter().any(|p| !p.1.is_finite() || p.0 == 0) {
            return Err(Error::InvalidParameter("series needs N > 0 and finite values".into()));
        }
        Ok(Series { x, points })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FitKind {
    PolyInvN,
    LogOverX,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub kind: FitKind,
    /// `c_0..c_d` for `PolyInvN`, `(A, B)` for `LogOverX`.
    pub coefficients: Vec<f64>,
    pub uncertainties: Vec<f64>,
    /// `N -> infinity` value; `A` for the log fit.
    pub intercept: f64,
    pub residual_norm: f64,
    pub points_used: usize,
    /// Largest intercept shift when the degree moves by one.
    pub degree_sensitivity: Option<f64>,
}

/// Cubic up to this spread, quadratic above.
pub const CUBIC_MAX_X: f64 = 50.0;

fn poly_fit(points: &[(usize, f64)], degree: usize) -> Result<FitResult> {
    if points.len() < degree + 2 {
        return Err(Error::InsufficientPoints { needed: degree + 2, have: points.len() });
    }
    let design: Vec<Vec<f64>> =
        points.iter().map(|&(n, _)| (0..=degree).map(|k| (1.0 / n as f64).powi(k as i32)).collect()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let ls = least_squares(&design, &y);
    Ok(FitResult {
        kind: FitKind::PolyInvN,
        intercept: ls.coefficients[0],
        coefficients: ls.coefficients,
        uncertainties: ls.std_errors,
        residual_norm: ls.residual_norm,
        points_used: points.len(),
        degree_sensitivity: None,
    })
}

/// Points with `N >= 8x`.
pub fn filter_points(s: &Series) -> Vec<(usize, f64)> {
    s.points.iter().copied().filter(|&(n, _)| n as f64 >= 8.0 * s.x).collect()
}

/// Fit of the filtered series at an explicit degree.
pub fn extrapolate_inv_n_degree(s: &Series, degree: usize) -> Result<FitResult> {
    let pts = filter_points(s);
    let mut fit = poly_fit(&pts, degree)?;
    let shifts: Vec<f64> = [degree.checked_sub(1), Some(degree + 1)]
        .into_iter()
        .flatten()
        .filter_map(|d| poly_fit(&pts, d).ok())
        .map(|f| (f.intercept - fit.intercept).abs())
        .collect();
    fit.degree_sensitivity = shifts.into_iter().reduce(f64::max);
    Ok(fit)
}

/// Cubic in `1/N` for `x <= 50`, quadratic beyond.
pub fn extrapolate_inv_n(s: &Series) -> Result<FitResult> {
    extrapolate_inv_n_degree(s, if s.x <= CUBIC_MAX_X { 3 } else { 2 })
}

/// `S(x) = A ln(x/B)/x` over `x_start <= x <= x_end`, linear in `(A, A ln B)`.
pub fn fit_log_over_x(points: &[(f64, f64)], x_start: f64, x_end: f64) -> Result<FitResult> {
    if points.iter().any(|p| !(p.0 > 0.0)) {
        return Err(Error::InvalidParameter("x must be positive".into()));
    }
    let used: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0 >= x_start && p.0 <= x_end).collect();
    if used.len() < 3 {
        return Err(Error::InsufficientPoints { needed: 3, have: used.len() });
    }
    if used.iter().all(|p| p.0 == used[0].0) {
        return Err(Error::InvalidParameter("all x values are equal".into()));
    }
    let design: Vec<Vec<f64>> = used.iter().map(|p| vec![p.0.ln(), -1.0]).collect();
    let y: Vec<f64> = used.iter().map(|p| p.0 * p.1).collect();
    let ls = least_squares(&design, &y);
    let (a, c) = (ls.coefficients[0], ls.coefficients[1]);
    let b = (c / a).exp();
    let grad = [-b * c / (a * a), b / a];
    let cov = &ls.covariance;
    let var_b = grad[0] * grad[0] * cov[0][0] + 2.0 * grad[0] * grad[1] * cov[0][1] + grad[1] * grad[1] * cov[1][1];
    Ok(FitResult {
        kind: FitKind::LogOverX,
        coefficients: vec![a, b],
        uncertainties: vec![ls.std_errors[0], var_b.max(0.0).sqrt()],
        intercept: a,
        residual_norm: ls.residual_norm,
        points_used: used.len(),
        degree_sensitivity: None,
    })
}

/// Reads `key,value` rows; lines starting with `#` are skipped.
///
/// A non-numeric first row is a header. If it names a `value` column, that column
/// is read against the first one, so scan output can be fed in directly.
pub fn read_two_column<R: Read>(input: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut out = Vec::new();
    let mut col = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if i == 0 && rec.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            col = Some(rec.iter().position(|f| f.eq_ignore_ascii_case("value")).unwrap_or(1));
            continue;
        }
        let c = match col {
            Some(c) => c,
            None if rec.len() == 2 => 1,
            None => return Err(Error::Parse(format!("row {}: expected two columns or a header", i + 1))),
        };
        match (rec.get(0).map(str::parse::<f64>), rec.get(c).map(str::parse::<f64>)) {
            (Some(Ok(a)), Some(Ok(b))) => out.push((a, b)),
            _ => return Err(Error::Parse(format!("row {}: not numeric", i + 1))),
        }
    }
    Ok(out)
}

pub fn write_two_column<W: Write>(out: W, comment: &str, header: (&str, &str), rows: &[(f64, f64)]) -> Result<()> {
    let mut out = out;
    writeln!(out, "# {comment}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([header.0, header.1])?;
    for (a, b) in rows {
        w.write_record([format!("{a}"), format!("{b:.17e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// `N,value` rows into a series.
pub fn series_from_rows(x: f64, rows: &[(f64, f64)]) -> Result<Series> {
    let pts = rows
        .iter()
        .map(|&(n, v)| {
            if n.fract() != 0.0 || n < 1.0 {
                Err(Error::Parse(format!("N = {n} is not a positive integer")))
            } else {
                Ok((n as usize, v))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Series::new(x, pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cubic() {
        let f = |n: f64| 0.05 + 0.3 / n - 1.2 / (n * n) + 4.0 / (n * n * n);
        let pts: Vec<(usize, f64)> = [16, 24, 32, 48, 64, 128, 256, 512].iter().map(|&n| (n, f(n as f64))).collect();
        let fit = extrapolate_inv_n(&Series::new(1.0, pts).unwrap()).unwrap();
        assert!((fit.intercept - 0.05).abs() < 1e-12);
        assert_eq!(fit.points_used, 8);
    }

    #[test]
    fn constant_series() {
        let pts: Vec<(usize, f64)> = (1..=8).map(|k| (16 * k, 0.125)).collect();
        let fit = extrapolate_inv_n(&Series::new(1.0, pts).unwrap()).unwrap();
        assert!((fit.intercept - 0.125).abs() < 1e-14);
        assert!(fit.residual_norm < 1e-14);
    }

    #[test]
    fn filter_and_shortage() {
        let pts: Vec<(usize, f64)> = [8, 16, 32, 64, 128].iter().map(|&n| (n, 1.0 / n as f64)).collect();
        let s = Series::new(7.0, pts).unwrap();
        assert_eq!(filter_points(&s).len(), 2);
        assert!(matches!(extrapolate_inv_n(&s), Err(Error::InsufficientPoints { needed: 5, have: 2 })));
    }

    #[test]
    fn log_fit_self_consistent() {
        let (a, b): (f64, f64) = (0.0553, 0.137);
        let pts: Vec<(f64, f64)> =
            [6.0, 8.0, 11.0, 16.0, 22.0, 32.0].iter().map(|&x| (x, a * (x / b).ln() / x)).collect();
        let fit = fit_log_over_x(&pts, 6.0, 64.0).unwrap();
        assert!((fit.coefficients[0] - a).abs() < 1e-6);
        assert!((fit.coefficients[1] - b).abs() < 1e-6);
        assert!(fit_log_over_x(&pts, 100.0, 200.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![(6.0, 0.03), (8.0, 0.028)];
        let mut buf = Vec::new();
        write_two_column(&mut buf, "test", ("x", "S"), &rows).unwrap();
        assert_eq!(read_two_column(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn reads_the_value_column_of_wider_files() {
        let text = "N,x,h,set,value,rank\n64,2.0,0.0,basic3,0.045,3\n128,2.0,0.0,basic3,0.043,3\n";
        assert_eq!(read_two_column(text.as_bytes()).unwrap(), vec![(64.0, 0.045), (128.0, 0.043)]);
        assert!(read_two_column("64,2.0,0.045\n".as_bytes()).is_err());
    }
}
