//! Edge-consensus state-space realizations and their frequency response.
//!
//! The realization keeps only the tree-edge states `x_tau`; the agreement
//! state is dropped. Edge-indexed quantities (`W`, `Γ`, the outputs `z`) are
//! ordered by the decomposition's `column_order`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::format::fmt_float;
use crate::graph::{time_scaled_edge_laplacian, NetworkSpec, SpanningTreeDecomposition};
use crate::linalg;

/// Noise covariance factors `Ω` (process) and `Γ` (measurement).
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceModel {
    /// Arbitrary square factors, `Γ` in original edge order.
    General { omega: DMatrix<f64>, gamma: DMatrix<f64> },
    /// `Ω = σ_w E^{1/2}`, `Γ = σ_v W^{1/2}`.
    Scaled { sigma_w: f64, sigma_v: f64 },
}

impl CovarianceModel {
    /// Reads `{"omega": [[..]..], "gamma": [[..]..]}` (row-major, `Γ` in
    /// original edge order).
    pub fn from_json(document: &str) -> Result<Self> {
        #[derive(serde::Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Doc {
            omega: Vec<Vec<f64>>,
            gamma: Vec<Vec<f64>>,
        }
        let doc: Doc = serde_json::from_str(document).map_err(|e| CoreError::Parse(e.to_string()))?;
        let square = |name: &str, rows: &[Vec<f64>]| {
            let k = rows.len();
            if k == 0 || rows.iter().any(|r| r.len() != k) {
                return Err(CoreError::Dimension(format!("{name} must be a non-empty square matrix")));
            }
            Ok(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
        };
        Ok(CovarianceModel::General { omega: square("omega", &doc.omega)?, gamma: square("gamma", &doc.gamma)? })
    }

    pub fn from_network(net: &NetworkSpec) -> Self {
        CovarianceModel::Scaled { sigma_w: net.sigma_w(), sigma_v: net.sigma_v() }
    }

    /// Explicit `(Ω, Γ)` with `Γ` in original edge order.
    pub fn factors(&self, net: &NetworkSpec) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        match self {
            CovarianceModel::General { omega, gamma } => {
                if omega.shape() != (net.n(), net.n()) {
                    return Err(CoreError::Dimension(format!(
                        "Omega must be {}x{}, got {}x{}",
                        net.n(),
                        net.n(),
                        omega.nrows(),
                        omega.ncols()
                    )));
                }
                if gamma.shape() != (net.m(), net.m()) {
                    return Err(CoreError::Dimension(format!(
                        "Gamma must be {}x{}, got {}x{}",
                        net.m(),
                        net.m(),
                        gamma.nrows(),
                        gamma.ncols()
                    )));
                }
                Ok((omega.clone(), gamma.clone()))
            }
            &CovarianceModel::Scaled { sigma_w, sigma_v } => {
                if sigma_w < 0.0 || sigma_v < 0.0 {
                    return Err(CoreError::InvalidNetwork("negative noise intensity".into()));
                }
                let e_half: Vec<f64> = net.epsilons().iter().map(|e| sigma_w * e.sqrt()).collect();
                let w_half: Vec<f64> = net.weights().iter().map(|w| sigma_v * w.sqrt()).collect();
                Ok((linalg::diag(&e_half), linalg::diag(&w_half)))
            }
        }
    }
}

/// `(A, B, C)` of `Σ_tau`, `Σ̃_tau` or `Π_tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeConsensusRealization {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    /// `C = W^{1/2} Rᵀ` (system `Π_tau`) rather than `Rᵀ`.
    pub output_weighted: bool,
    pub n_nodes: usize,
    pub n_edges: usize,
}

impl EdgeConsensusRealization {
    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    /// Steady-state gain `-C A⁻¹ B`.
    pub fn dc_gain(&self) -> Result<DMatrix<f64>> {
        let lu = self.a.clone().lu();
        let x = lu
            .solve(&self.b)
            .ok_or_else(|| CoreError::Numerical("state matrix is singular".into()))?;
        Ok(-(&self.c * x))
    }

    /// `A`, `B`, `C` as labeled CSV blocks: a `# name,rows,cols` line
    /// followed by the rows.
    pub fn dump_csv(&self) -> String {
        let mut out = String::new();
        for (name, m) in [("A", &self.a), ("B", &self.b), ("C", &self.c)] {
            out.push_str(&format!("# {name},{},{}\n", m.nrows(), m.ncols()));
            for i in 0..m.nrows() {
                let row: Vec<String> = (0..m.ncols()).map(|j| fmt_float(m[(i, j)])).collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        out
    }
}

/// `S_v = [E⁻¹ D_tau (L_{e,s}^tau)⁻¹  1]` and `eps_s = Σ eps_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityTransform {
    pub s_v: DMatrix<f64>,
    pub eps_sum: f64,
}

pub fn similarity_transform(net: &NetworkSpec, dec: &SpanningTreeDecomposition) -> Result<SimilarityTransform> {
    let n = net.n();
    let eps = net.epsilons();
    let e_inv = linalg::diag(&eps.iter().map(|e| 1.0 / e).collect::<Vec<_>>());
    let l_es = time_scaled_edge_laplacian(net, dec);
    // E⁻¹ D_tau L⁻¹ = (L⁻¹ D_tauᵀ E⁻¹)ᵀ since L is symmetric.
    let left = linalg::spd_solve(&l_es, &(dec.d_tau.transpose() * &e_inv))?.transpose();
    let mut s_v = DMatrix::zeros(n, n);
    s_v.view_mut((0, 0), (n, n - 1)).copy_from(&left);
    s_v.column_mut(n - 1).fill(1.0);
    if linalg::rank(&s_v, 1e-12) != n {
        return Err(CoreError::Numerical("similarity transform S_v is singular".into()));
    }
    Ok(SimilarityTransform { s_v, eps_sum: eps.iter().sum() })
}

/// `R W Rᵀ` with `W` in column order.
pub(crate) fn rwr(net: &NetworkSpec, dec: &SpanningTreeDecomposition) -> DMatrix<f64> {
    let w = linalg::diag(&dec.permute_edges(&net.weights()));
    let m = &dec.r * w * dec.r.transpose();
    (&m + m.transpose()) * 0.5
}

/// Builds `Σ_tau` (general covariances), `Σ̃_tau` (scaled) or `Π_tau`
/// (scaled with `pi_weighting`).
pub fn build_realization(
    net: &NetworkSpec,
    dec: &SpanningTreeDecomposition,
    cov: &CovarianceModel,
    pi_weighting: bool,
) -> Result<EdgeConsensusRealization> {
    if pi_weighting && matches!(cov, CovarianceModel::General { .. }) {
        return Err(CoreError::Dimension(
            "output weighting is only defined for scaled covariances".into(),
        ));
    }
    let (n, m) = (net.n(), net.m());
    let l_es = time_scaled_edge_laplacian(net, dec);
    let a = -(&l_es * rwr(net, dec));

    let e_inv = linalg::diag(&net.epsilons().iter().map(|e| 1.0 / e).collect::<Vec<_>>());
    let (omega, gamma) = cov.factors(net)?;
    let order = &dec.column_order;
    let gamma_perm = DMatrix::from_fn(m, m, |i, j| gamma[(order[i], order[j])]);

    let b_w = dec.d_tau.transpose() * e_inv * omega;
    let b_v = -(&l_es * &dec.r * gamma_perm);
    let mut b = DMatrix::zeros(n - 1, n + m);
    b.view_mut((0, 0), (n - 1, n)).copy_from(&b_w);
    b.view_mut((0, n), (n - 1, m)).copy_from(&b_v);

    let mut c = dec.r.transpose();
    if pi_weighting {
        let w_half = linalg::diag(&dec.permute_edges(&net.weights()).iter().map(|w| w.sqrt()).collect::<Vec<_>>());
        c = w_half * c;
    }

    let real = EdgeConsensusRealization { a, b, c, output_weighted: pi_weighting, n_nodes: n, n_edges: m };
    check_hurwitz(net, dec, &real)?;
    Ok(real)
}

fn check_hurwitz(
    net: &NetworkSpec,
    dec: &SpanningTreeDecomposition,
    real: &EdgeConsensusRealization,
) -> Result<()> {
    let diag = diagonalize_parts(net, dec)?;
    let max_re = -diag.lambda.min();
    let scale = real.a.norm();
    if max_re >= -1e-12 * scale {
        return Err(CoreError::Numerical(format!(
            "state matrix is not Hurwitz (max real part {max_re:.3e})"
        )));
    }
    Ok(())
}

/// `T⁻¹ (-A) T = Λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagonalization {
    pub t: DMatrix<f64>,
    pub t_inv: DMatrix<f64>,
    pub lambda: DVector<f64>,
    pub condition: f64,
}

impl Diagonalization {
    pub fn lambda_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.lambda)
    }
}

fn diagonalize_parts(net: &NetworkSpec, dec: &SpanningTreeDecomposition) -> Result<Diagonalization> {
    // -A = L M with L, M SPD; M^{1/2} L M^{1/2} is symmetric and similar to L M.
    let l_es = time_scaled_edge_laplacian(net, dec);
    let m = rwr(net, dec);
    let m_half = linalg::spd_sqrt(&m)?;
    let m_inv_half = linalg::spd_inv_sqrt(&m)?;
    let sym = linalg::symmetrize(&(&m_half * l_es * &m_half))?;
    let eig = sym.symmetric_eigen();
    let t = &m_inv_half * &eig.eigenvectors;
    let t_inv = eig.eigenvectors.transpose() * &m_half;
    let condition = linalg::condition_number(&t);
    if condition > 1e12 {
        log::warn!("eigenvector matrix ill-conditioned (cond = {condition:.3e})");
    }
    Ok(Diagonalization { t, t_inv, lambda: eig.eigenvalues, condition })
}

/// Diagonalizes the state matrix through the symmetric similar matrix
/// `(RWRᵀ)^{1/2} L_{e,s}^tau (RWRᵀ)^{1/2}`.
pub fn diagonalize_state_matrix(
    net: &NetworkSpec,
    dec: &SpanningTreeDecomposition,
) -> Result<Diagonalization> {
    diagonalize_parts(net, dec)
}

/// `C (jωI - A)⁻¹ B`.
pub fn transfer_value(real: &EdgeConsensusRealization, omega: f64) -> Result<DMatrix<Complex64>> {
    let p = resolvent_times_b(real, omega)?;
    let c = real.c.map(|x| Complex64::new(x, 0.0));
    Ok(c * p)
}

fn resolvent_times_b(real: &EdgeConsensusRealization, omega: f64) -> Result<DMatrix<Complex64>> {
    let k = real.states();
    let m = DMatrix::from_fn(k, k, |i, j| {
        let re = -real.a[(i, j)];
        let im = if i == j { omega } else { 0.0 };
        Complex64::new(re, im)
    });
    let b = real.b.map(|x| Complex64::new(x, 0.0));
    m.lu()
        .solve(&b)
        .ok_or_else(|| CoreError::Numerical(format!("jωI - A singular at ω = {omega}")))
}

/// 0 plus 2000 logarithmically spaced points on `[1e-3, 1e6]` rad/s.
pub fn default_grid() -> Vec<f64> {
    let count = 2000;
    let (lo, hi) = (-3.0f64, 6.0f64);
    std::iter::once(0.0)
        .chain((0..count).map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / (count - 1) as f64)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepResult {
    pub norm: f64,
    pub argmax_omega: f64,
}

/// Largest singular value of the frequency response over `grid`.
///
/// Uses `σ̄(C P) = σ̄(Kᵀ P)` with `CᵀC = K Kᵀ`, which shrinks the Hermitian
/// eigenproblem to the state dimension. Ties keep the earliest grid point.
pub fn frequency_sweep_norm(real: &EdgeConsensusRealization, grid: &[f64]) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(CoreError::EmptyGrid);
    }
    let ctc = linalg::symmetrize(&(real.c.transpose() * &real.c))?;
    let k = ctc
        .cholesky()
        .ok_or_else(|| CoreError::Numerical("output matrix is not full column rank".into()))?
        .l();
    let kt = k.transpose().map(|x| Complex64::new(x, 0.0));
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&w| {
            let g = &kt * resolvent_times_b(real, w)?;
            let gram = &g * g.adjoint();
            let top = gram
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(0.0f64, f64::max);
            Ok(top.max(0.0).sqrt())
        })
        .collect::<Result<Vec<_>>>()?;
    let (idx, &norm) = values
        .iter()
        .enumerate()
        .fold((0, &values[0]), |best, cur| if *cur.1 > *best.1 { cur } else { best });
    Ok(SweepResult { norm, argmax_omega: grid[idx] })
}

/// Largest singular value of a complex matrix (direct SVD).
pub fn sigma_max(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}
