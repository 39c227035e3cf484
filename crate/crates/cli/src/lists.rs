//! Comma lists with `start:end:step` ranges, e.g. `16,32` or `0:8:0.5`.

use anyhow::{anyhow, bail, Result};

pub fn floats(s: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [v] => out.push(v.parse().map_err(|_| anyhow!("'{v}' is not a number"))?),
            [a, b, step] => {
                let (a, b, step): (f64, f64, f64) = (a.parse()?, b.parse()?, step.parse()?);
                if !(step > 0.0) || b < a {
                    bail!("range '{item}' needs start <= end and a positive step");
                }
                let count = ((b - a) / step + 1e-9).floor() as usize;
                out.extend((0..=count).map(|k| a + k as f64 * step));
            }
            _ => bail!("cannot read '{item}' as a number or start:end:step"),
        }
    }
    if out.is_empty() {
        bail!("empty list");
    }
    Ok(out)
}

/// Integers; `a:b:s` steps additively, `a:b:*f` multiplies by `f`.
pub fn sizes(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [v] => out.push(v.parse().map_err(|_| anyhow!("'{v}' is not a size"))?),
            [a, b, step] => {
                let (a, b): (usize, usize) = (a.parse()?, b.parse()?);
                if a == 0 || b < a {
                    bail!("range '{item}' needs 0 < start <= end");
                }
                if let Some(f) = step.strip_prefix('*') {
                    let f: usize = f.parse()?;
                    if f < 2 {
                        bail!("factor in '{item}' must be at least 2");
                    }
                    let mut v = a;
                    while v <= b {
                        out.push(v);
                        v *= f;
                    }
                } else {
                    let step: usize = step.parse()?;
                    if step == 0 {
                        bail!("step in '{item}' must be positive");
                    }
                    out.extend((a..=b).step_by(step));
                }
            }
            _ => bail!("cannot read '{item}' as a size or range"),
        }
    }
    if out.is_empty() {
        bail!("empty list");
    }
    Ok(out)
}

pub fn words(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(str::to_string).collect()
}
