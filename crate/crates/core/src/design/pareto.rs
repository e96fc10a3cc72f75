use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::{solve, ConicBackend, DesignProblem};
use crate::error::{CoreError, Result};
use crate::format::fmt_float;
use crate::graph::{NetworkSpec, SpanningTreeDecomposition};

/// `count` logarithmically spaced points on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogGrid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl LogGrid {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) || count == 0 || (count == 1 && lo != hi) {
            return Err(CoreError::InvalidDesign(format!(
                "log grid {lo}:{hi}:{count} needs 0 < lo <= hi, count >= 1 (lo = hi when count = 1)"
            )));
        }
        Ok(Self { lo, hi, count })
    }

    pub fn single(x: f64) -> Result<Self> {
        Self::new(x, x, 1)
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let (a, b) = (self.lo.log10(), self.hi.log10());
        let step = (b - a) / (self.count - 1) as f64;
        (0..self.count)
            .map(|k| if k + 1 == self.count { self.hi } else { 10f64.powf(a + step * k as f64) })
            .collect()
    }
}

impl FromStr for LogGrid {
    type Err = CoreError;

    /// `lo:hi:count`, or a single value.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CoreError::Parse(format!("bad number `{t}` in grid `{s}`")))
        };
        match parts.as_slice() {
            [x] => Self::single(num(x)?),
            [lo, hi, count] => {
                let count = count
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| CoreError::Parse(format!("bad count in grid `{s}`")))?;
                Self::new(num(lo)?, num(hi)?, count)
            }
            _ => Err(CoreError::Parse(format!("grid `{s}` is not lo:hi:count"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParetoGrid {
    pub alpha: LogGrid,
    pub beta: LogGrid,
    pub gamma: LogGrid,
}

impl ParetoGrid {
    /// `alpha, beta ∈ [1e-3, 1e-1]`, `gamma ∈ [10^0.15, 1e2]`, `count` points each.
    pub fn reference(count: usize) -> Self {
        Self {
            alpha: LogGrid { lo: 1e-3, hi: 1e-1, count },
            beta: LogGrid { lo: 1e-3, hi: 1e-1, count },
            gamma: LogGrid { lo: 10f64.powf(0.15), hi: 1e2, count },
        }
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.alpha.count, self.beta.count, self.gamma.count]
    }

    /// Grid points in α-major, then β, then γ order, with lattice indices.
    pub fn points(&self) -> Vec<([usize; 3], [f64; 3])> {
        let (a, b, g) = (self.alpha.points(), self.beta.points(), self.gamma.points());
        let mut out = Vec::with_capacity(a.len() * b.len() * g.len());
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                for (k, &z) in g.iter().enumerate() {
                    out.push(([i, j, k], [x, y, z]));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoRecord {
    pub index: [usize; 3],
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub zeta: f64,
    pub xi_norm: f64,
    pub epsinv_norm: f64,
    pub hinf: f64,
    /// `ok`, or the error for this point.
    pub status: String,
}

impl ParetoRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Solves the template at every grid point; failures are kept in-row.
pub fn pareto_sweep(
    net: &NetworkSpec,
    dec: &SpanningTreeDecomposition,
    template: &DesignProblem,
    grid: &ParetoGrid,
    backend: &dyn ConicBackend,
) -> Vec<ParetoRecord> {
    grid.points()
        .into_par_iter()
        .map(|(index, [alpha, beta, gamma])| {
            let problem = template.with_weights(alpha, beta, Some(gamma));
            let base = ParetoRecord {
                index,
                alpha,
                beta,
                gamma,
                zeta: f64::NAN,
                xi_norm: f64::NAN,
                epsinv_norm: f64::NAN,
                hinf: f64::NAN,
                status: "ok".into(),
            };
            match solve(net, dec, &problem, backend) {
                Ok(s) => ParetoRecord {
                    zeta: s.zeta_star,
                    xi_norm: s.xi_norm,
                    epsinv_norm: s.epsinv_norm,
                    hinf: s.achieved_norm,
                    ..base
                },
                Err(e) => {
                    log::warn!("pareto point ({alpha}, {beta}, {gamma}) failed: {e}");
                    ParetoRecord { status: e.to_string(), ..base }
                }
            }
        })
        .collect()
}

pub fn write_front_csv<W: Write>(records: &[ParetoRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "alpha,beta,gamma,zeta,xi_norm,epsinv_norm,hinf,status")?;
    for r in records {
        let status = r.status.replace([',', '\n', '"'], " ");
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_float(r.alpha),
            fmt_float(r.beta),
            fmt_float(r.gamma),
            fmt_float(r.zeta),
            fmt_float(r.xi_norm),
            fmt_float(r.epsinv_norm),
            fmt_float(r.hinf),
            status
        )?;
    }
    Ok(())
}

fn menger(p: [f64; 3], q: [f64; 3], r: [f64; 3]) -> f64 {
    let d = |a: [f64; 3], b: [f64; 3]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    let (a, b, c) = (d(p, q), d(q, r), d(p, r));
    if a == 0.0 || b == 0.0 || c == 0.0 {
        return 0.0;
    }
    let s = 0.5 * (a + b + c);
    let area = (s * (s - a) * (s - b) * (s - c)).max(0.0).sqrt();
    4.0 * area / (a * b * c)
}

/// Knee of a full-lattice front: objectives `(ζ, ‖ξ‖, ‖ε⁻¹‖)` are scaled
/// to `[0, 1]`, and each point scores the summed discrete curvature of the
/// front along the three lattice axes through it. Returns the position in
/// `records` of the highest score, or `None` if any point failed.
pub fn detect_knee(records: &[ParetoRecord], shape: [usize; 3]) -> Option<usize> {
    if records.len() != shape.iter().product::<usize>() || records.iter().any(|r| !r.is_ok()) {
        return None;
    }
    let raw: Vec<[f64; 3]> = records.iter().map(|r| [r.zeta, r.xi_norm, r.epsinv_norm]).collect();
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in &raw {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let norm: Vec<[f64; 3]> = raw
        .iter()
        .map(|p| {
            let mut q = [0.0; 3];
            for k in 0..3 {
                q[k] = if hi[k] > lo[k] { (p[k] - lo[k]) / (hi[k] - lo[k]) } else { 0.0 };
            }
            q
        })
        .collect();
    let flat = |i: [usize; 3]| (i[0] * shape[1] + i[1]) * shape[2] + i[2];
    let mut best = (0, f64::NEG_INFINITY);
    for r in records {
        let mut score = 0.0;
        for axis in 0..3 {
            let i = r.index[axis];
            if i == 0 || i + 1 >= shape[axis] {
                continue;
            }
            let mut prev = r.index;
            let mut next = r.index;
            prev[axis] -= 1;
            next[axis] += 1;
            score += menger(norm[flat(prev)], norm[flat(r.index)], norm[flat(next)]);
        }
        let pos = flat(r.index);
        if score > best.1 {
            best = (pos, score);
        }
    }
    Some(best.0)
}
