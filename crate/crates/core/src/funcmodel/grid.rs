use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::AxisBox;

/// Samples on a regular lattice, interpolated multilinearly.
///
/// `values` is row-major with the last axis varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub origin: Vec<f64>,
    pub step: Vec<f64>,
    pub counts: Vec<usize>,
    pub values: Vec<f64>,
}

const HULL_TOL: f64 = 1e-12;

impl GridField {
    pub fn new(origin: Vec<f64>, step: Vec<f64>, counts: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let n = counts.len();
        if n == 0 || origin.len() != n || step.len() != n {
            return Err(Error::InvalidInput("grid origin, step and counts must share a nonzero length".into()));
        }
        if counts.iter().any(|&c| c < 2) {
            return Err(Error::InvalidInput("every grid axis needs at least two nodes".into()));
        }
        if step.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidInput("grid steps must be positive".into()));
        }
        let total: usize = counts.iter().product();
        if values.len() != total {
            return Err(Error::InvalidInput(format!("grid expects {total} values, got {}", values.len())));
        }
        Ok(Self { origin, step, counts, values })
    }

    /// Samples `f` on the lattice.
    pub fn sample(origin: Vec<f64>, step: Vec<f64>, counts: Vec<usize>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let total: usize = counts.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut x = vec![0.0; counts.len()];
        for flat in 0..total {
            let idx = unflatten(flat, &counts);
            for k in 0..counts.len() {
                x[k] = origin[k] + idx[k] as f64 * step[k];
            }
            values.push(f(&x));
        }
        Self::new(origin, step, counts, values)
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    /// Lattice hull as a box.
    pub fn hull(&self) -> AxisBox {
        AxisBox {
            min: self.origin.clone(),
            sides: self.step.iter().zip(&self.counts).map(|(h, &c)| h * (c - 1) as f64).collect(),
        }
    }

    pub fn node(&self, idx: &[usize]) -> f64 {
        self.values[flatten(idx, &self.counts)]
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if !self.hull().contains(x, HULL_TOL) {
            return Err(Error::OutOfDomain { point: x.to_vec() });
        }
        Ok(self.value(x))
    }

    pub fn check_region(&self, region: &AxisBox) -> Result<()> {
        if self.hull().contains_box(region, HULL_TOL) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { point: region.min.clone() })
        }
    }

    /// Multilinear interpolation, clamped to the hull.
    pub fn value(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for k in 0..n {
            let u = ((x[k] - self.origin[k]) / self.step[k]).clamp(0.0, (self.counts[k] - 1) as f64);
            let i = (u.floor() as usize).min(self.counts[k] - 2);
            base[k] = i;
            frac[k] = u - i as f64;
        }
        let mut idx = vec![0usize; n];
        let mut acc = 0.0;
        for mask in 0..1usize << n {
            let mut w = 1.0;
            for k in 0..n {
                let hi = mask >> k & 1 == 1;
                idx[k] = base[k] + hi as usize;
                w *= if hi { frac[k] } else { 1.0 - frac[k] };
            }
            if w != 0.0 {
                acc += w * self.node(&idx);
            }
        }
        acc
    }

    /// `sqrt(Σ_k D_k^2)` where `D_k` is the largest adjacent difference
    /// quotient along axis `k`. Bounds the interpolant's gradient norm.
    pub fn lattice_lipschitz(&self) -> f64 {
        let n = self.dim();
        let total = self.values.len();
        let mut d = vec![0.0f64; n];
        for flat in 0..total {
            let idx = unflatten(flat, &self.counts);
            for k in 0..n {
                if idx[k] + 1 < self.counts[k] {
                    let mut j = idx.clone();
                    j[k] += 1;
                    let q = (self.node(&j) - self.values[flat]).abs() / self.step[k];
                    d[k] = d[k].max(q);
                }
            }
        }
        d.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Reads the CSV grid format described in `docs/formats.md`.
    pub fn from_csv_reader(reader: impl BufRead) -> Result<Self> {
        let mut header: Option<(Vec<usize>, Vec<f64>, usize)> = None;
        let mut origin: Option<Vec<f64>> = None;
        let mut values = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            let parse_err = |msg: String| Error::Parse { line: lineno, msg };
            match &header {
                None => {
                    if fields.len() % 2 != 0 {
                        return Err(parse_err(format!(
                            "header needs counts then steps (an even number of fields), got {}",
                            fields.len()
                        )));
                    }
                    let n = fields.len() / 2;
                    let counts = fields[..n]
                        .iter()
                        .map(|s| s.parse::<usize>().map_err(|e| parse_err(format!("count {s:?}: {e}"))))
                        .collect::<Result<Vec<_>>>()?;
                    let steps = parse_reals(&fields[n..]).map_err(parse_err)?;
                    header = Some((counts, steps, lineno));
                }
                Some((counts, _, _))
                    if fields[0].eq_ignore_ascii_case("origin") && origin.is_none() && values.is_empty() =>
                {
                    let o = parse_reals(&fields[1..]).map_err(parse_err)?;
                    if o.len() != counts.len() {
                        return Err(parse_err(format!(
                            "origin has {} entries, grid has {} axes",
                            o.len(),
                            counts.len()
                        )));
                    }
                    origin = Some(o);
                }
                Some(_) => values.extend(parse_reals(&fields).map_err(parse_err)?),
            }
        }
        let (counts, step, line) = header.ok_or(Error::Parse { line: 1, msg: "missing header row".into() })?;
        let origin = origin.unwrap_or_else(|| vec![0.0; counts.len()]);
        Self::new(origin, step, counts, values).map_err(|e| Error::Parse { line, msg: e.to_string() })
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let head: Vec<String> =
            self.counts.iter().map(|c| c.to_string()).chain(self.step.iter().map(|h| format!("{h:e}"))).collect();
        out.push_str(&head.join(","));
        out.push('\n');
        let o: Vec<String> = self.origin.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&format!("origin,{}\n", o.join(",")));
        let row = *self.counts.last().unwrap();
        for chunk in self.values.chunks(row) {
            let r: Vec<String> = chunk.iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

fn parse_reals(fields: &[&str]) -> std::result::Result<Vec<f64>, String> {
    fields.iter().map(|s| s.parse::<f64>().map_err(|e| format!("value {s:?}: {e}"))).collect()
}

fn flatten(idx: &[usize], counts: &[usize]) -> usize {
    idx.iter().zip(counts).fold(0, |acc, (&i, &c)| acc * c + i)
}

fn unflatten(mut flat: usize, counts: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; counts.len()];
    for k in (0..counts.len()).rev() {
        idx[k] = flat % counts[k];
        flat /= counts[k];
    }
    idx
}
