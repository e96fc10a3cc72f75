use std::ops::Range;

use nalgebra::DMatrix;
use serde::Serialize;

use super::{DesignProblem, PenaltyMode};
use crate::error::{CoreError, Result};
use crate::graph::{NetworkSpec, SpanningTreeDecomposition};

/// Cone for a block of rows of `s = b - A x`. PSD blocks use the scaled
/// upper triangle stacked column by column (off-diagonals times √2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Cone {
    Zero(usize),
    Nonnegative(usize),
    SecondOrder(usize),
    PsdTriangle(usize),
}

impl Cone {
    pub fn rows(&self) -> usize {
        match *self {
            Cone::Zero(k) | Cone::Nonnegative(k) | Cone::SecondOrder(k) => k,
            Cone::PsdTriangle(n) => n * (n + 1) / 2,
        }
    }
}

/// Column indices of each design variable. `v` is in the decomposition's
/// `column_order`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VariableLayout {
    pub zeta: usize,
    pub v: Range<usize>,
    pub e: Range<usize>,
    pub xi: Option<Range<usize>>,
    pub t_lo: Option<usize>,
    pub t_hi: Option<usize>,
    pub s1: Option<usize>,
    pub s2: Option<usize>,
    pub n_vars: usize,
}

/// `minimize qᵀx  s.t.  b - A x ∈ K`, with `A` in triplet form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConicProgram {
    pub q: Vec<f64>,
    pub a_rows: Vec<usize>,
    pub a_cols: Vec<usize>,
    pub a_vals: Vec<f64>,
    pub b: Vec<f64>,
    pub cones: Vec<Cone>,
    pub layout: VariableLayout,
    /// Sizes of the two LMI blocks, `(|E|+n-1, 2|E|)`; the second is 0
    /// when omitted.
    pub lmi_sizes: (usize, usize),
}

impl ConicProgram {
    pub fn n_vars(&self) -> usize {
        self.layout.n_vars
    }

    pub fn n_rows(&self) -> usize {
        self.b.len()
    }

    /// Dense `A`, mainly for inspection and tests.
    pub fn a_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n_rows(), self.n_vars());
        for ((&i, &j), &v) in self.a_rows.iter().zip(&self.a_cols).zip(&self.a_vals) {
            a[(i, j)] += v;
        }
        a
    }

    /// Slack `b - A x` for a candidate point.
    pub fn slack(&self, x: &[f64]) -> Vec<f64> {
        let mut s = self.b.clone();
        for ((&i, &j), &v) in self.a_rows.iter().zip(&self.a_cols).zip(&self.a_vals) {
            s[i] -= v * x[j];
        }
        s
    }
}

/// Index of `(i, j)`, `i <= j`, in the column-stacked upper triangle.
pub(crate) fn svec_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

/// Symmetric matrix from its scaled upper-triangle vector.
#[cfg(test)]
pub(crate) fn smat(s: &[f64], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        let x = s[svec_index(i, j)];
        if i == j {
            x
        } else {
            x / std::f64::consts::SQRT_2
        }
    })
}

#[derive(Default)]
struct Rows {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    b: Vec<f64>,
    cones: Vec<Cone>,
}

impl Rows {
    /// Appends one row `s = b - Σ coef·x`.
    fn push(&mut self, terms: &[(usize, f64)], b: f64) {
        let r = self.b.len();
        for &(c, v) in terms {
            self.rows.push(r);
            self.cols.push(c);
            self.vals.push(v);
        }
        self.b.push(b);
    }

    fn nonneg(&mut self, rows: &[(Vec<(usize, f64)>, f64)]) {
        for (t, b) in rows {
            self.push(t, *b);
        }
        if !rows.is_empty() {
            self.cones.push(Cone::Nonnegative(rows.len()));
        }
    }

    /// PSD block `M0 + Σ x_k M_k`; `entries` lists upper-triangle
    /// `(i, j, Some(var) | None, value)` contributions.
    fn psd(&mut self, n: usize, entries: &[(usize, usize, Option<usize>, f64)]) {
        let base = self.b.len();
        let len = n * (n + 1) / 2;
        self.b.extend(std::iter::repeat_n(0.0, len));
        for &(i, j, var, val) in entries {
            let k = svec_index(i, j);
            let scaled = if i == j { val } else { val * std::f64::consts::SQRT_2 };
            match var {
                None => self.b[base + k] += scaled,
                Some(c) => {
                    self.rows.push(base + k);
                    self.cols.push(c);
                    self.vals.push(-scaled);
                }
            }
        }
        self.cones.push(Cone::PsdTriangle(n));
    }

    fn soc(&mut self, vars: &[usize]) {
        for &c in vars {
            self.push(&[(c, -1.0)], 0.0);
        }
        self.cones.push(Cone::SecondOrder(vars.len()));
    }
}

/// Lowers `problem` on the fixed tree `dec` to a conic program.
///
/// LMI (i) `[[ζI, V R†], [R†ᵀV, D_τᵀ diag(e) D_τ]] ⪰ 0` is the Schur form of
/// `X₁ ⪯ ζI`; LMI (ii) `[[Ξ, I], [I, V]] ⪰ 0` encodes `ξ_l ≥ w_l^{1/2}`.
pub fn build_program(
    net: &NetworkSpec,
    dec: &SpanningTreeDecomposition,
    problem: &DesignProblem,
) -> Result<ConicProgram> {
    problem.validate()?;
    problem.check_dimensions(net)?;
    if dec.n() != net.n() || dec.m() != net.m() {
        return Err(CoreError::Dimension("decomposition does not match the network".into()));
    }
    let (n, m) = (net.n(), net.m());
    let nt = n - 1;
    let regularized = problem.mode == PenaltyMode::Regularizer;
    let use_xi = regularized && problem.alpha > 0.0;
    let use_s2 = regularized && problem.beta > 0.0;
    let capped = problem.gamma.is_some();

    let mut next = 0;
    let mut take = |k: usize| {
        let r = next..next + k;
        next += k;
        r
    };
    let zeta = take(1).start;
    let v = take(m);
    let e = take(n);
    let xi = use_xi.then(|| take(m));
    let t_lo = capped.then(|| take(1).start);
    let t_hi = capped.then(|| take(1).start);
    let s1 = use_xi.then(|| take(1).start);
    let s2 = use_s2.then(|| take(1).start);
    let layout = VariableLayout { zeta, v, e, xi, t_lo, t_hi, s1, s2, n_vars: next };

    let mut q = vec![0.0; layout.n_vars];
    q[zeta] = 1.0;
    if let Some(c) = layout.s1 {
        q[c] = problem.alpha;
    }
    if let Some(c) = layout.s2 {
        q[c] = problem.beta;
    }

    let mut rows = Rows::default();

    // boxes, with v in column order
    let mut lin = Vec::new();
    for (k, &l) in dec.column_order.iter().enumerate() {
        let [wlo, whi] = problem.w_bounds[l];
        let c = layout.v.start + k;
        lin.push((vec![(c, -1.0)], -whi.powf(-0.5)));
        lin.push((vec![(c, 1.0)], wlo.powf(-0.5)));
    }
    for (i, &[elo, ehi]) in problem.eps_bounds.iter().enumerate() {
        let c = layout.e.start + i;
        lin.push((vec![(c, -1.0)], -1.0 / ehi));
        lin.push((vec![(c, 1.0)], 1.0 / elo));
    }
    if let (Some(lo), Some(hi), Some(g)) = (layout.t_lo, layout.t_hi, problem.gamma) {
        for c in layout.v.clone() {
            lin.push((vec![(c, -1.0), (lo, 1.0)], 0.0));
            lin.push((vec![(hi, -1.0), (c, 1.0)], 0.0));
        }
        lin.push((vec![(lo, -g), (hi, 1.0)], 0.0));
        lin.push((vec![(lo, -1.0)], 0.0));
    }
    if problem.mode == PenaltyMode::Constraint {
        let mu = problem.mu.expect("validated");
        let nu = problem.nu.expect("validated");
        lin.push((layout.e.clone().map(|c| (c, 1.0)).collect(), mu));
        lin.push((layout.v.clone().map(|c| (c, -1.0)).collect(), -nu));
    }
    rows.nonneg(&lin);

    if let (Some(s1), Some(xi)) = (layout.s1, layout.xi.clone()) {
        let vars: Vec<usize> = std::iter::once(s1).chain(xi).collect();
        rows.soc(&vars);
    }
    if let Some(s2) = layout.s2 {
        let vars: Vec<usize> = std::iter::once(s2).chain(layout.e.clone()).collect();
        rows.soc(&vars);
    }

    // LMI (i)
    let size1 = m + nt;
    let mut entries = Vec::new();
    for l in 0..m {
        entries.push((l, l, Some(zeta), 1.0));
        for k in 0..nt {
            let r = dec.r_pinv[(l, k)];
            if r.abs() > 1e-14 {
                entries.push((l, m + k, Some(layout.v.start + l), r));
            }
        }
    }
    for i in 0..n {
        for a in 0..nt {
            for b in a..nt {
                let val = dec.d_tau[(i, a)] * dec.d_tau[(i, b)];
                if val != 0.0 {
                    entries.push((m + a, m + b, Some(layout.e.start + i), val));
                }
            }
        }
    }
    rows.psd(size1, &entries);

    // LMI (ii)
    let mut size2 = 0;
    if let Some(xi) = layout.xi.clone() {
        size2 = 2 * m;
        let mut entries = Vec::new();
        for l in 0..m {
            entries.push((l, l, Some(xi.start + l), 1.0));
            entries.push((l, m + l, None, 1.0));
            entries.push((m + l, m + l, Some(layout.v.start + l), 1.0));
        }
        rows.psd(size2, &entries);
    }

    Ok(ConicProgram {
        q,
        a_rows: rows.rows,
        a_cols: rows.cols,
        a_vals: rows.vals,
        b: rows.b,
        cones: rows.cones,
        layout,
        lmi_sizes: (size1, size2),
    })
}
