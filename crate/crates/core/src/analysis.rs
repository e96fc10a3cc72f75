//! Closed-form H∞ norms of the edge-consensus systems and their bounds.
//!
//! For the scaled covariances `Ω = σ_w E^{1/2}`, `Γ = σ_v W^{1/2}` the peak
//! gain sits at ω = 0, so every norm reduces to an extreme eigenvalue of a
//! symmetric matrix built from `R`, `W` and `L_{e,s}^tau`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::dynamics::{self, rwr, CovarianceModel};
use crate::error::{CoreError, Result};
use crate::graph::{time_scaled_edge_laplacian, NetworkSpec, SpanningTreeDecomposition};
use crate::linalg;

/// `‖Σ̃_tau‖∞` together with `Z`.
#[derive(Debug, Clone)]
pub struct ExactNorm {
    pub norm: f64,
    pub z: DMatrix<f64>,
}

/// `‖Π_tau‖∞` together with `X` and the projection `Y`.
#[derive(Debug, Clone)]
pub struct PiNorm {
    pub norm: f64,
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

/// `K = RWRᵀ L RWRᵀ`.
fn sandwich(net: &NetworkSpec, dec: &SpanningTreeDecomposition) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = rwr(net, dec);
    let l = time_scaled_edge_laplacian(net, dec);
    let k = &m * l * &m;
    ((&k + k.transpose()) * 0.5, m)
}

fn w_half_permuted(net: &NetworkSpec, dec: &SpanningTreeDecomposition) -> DMatrix<f64> {
    let w: Vec<f64> = dec.permute_edges(&net.weights()).iter().map(|w| w.sqrt()).collect();
    linalg::diag(&w)
}

pub fn hinf_exact_scaled(net: &NetworkSpec, dec: &SpanningTreeDecomposition) -> Result<ExactNorm> {
    let (k, m) = sandwich(net, dec);
    let first = linalg::spd_congruence_inverse(&k, &dec.r)?;
    let second = linalg::spd_congruence_inverse(&m, &dec.r)?;
    let z = first * net.sigma_w().powi(2) + second * net.sigma_v().powi(2);
    let top = linalg::lambda_max(&z)?;
    Ok(ExactNorm { norm: top.max(0.0).sqrt(), z })
}

pub fn hinf_pi(net: &NetworkSpec, dec: &SpanningTreeDecomposition) -> Result<PiNorm> {
    let (k, m) = sandwich(net, dec);
    let rw = &dec.r * w_half_permuted(net, dec);
    let x = linalg::spd_congruence_inverse(&k, &rw)?;
    let y = linalg::spd_congruence_inverse(&m, &rw)?;
    let sq = net.sigma_w().powi(2) * linalg::lambda_max(&x)? + net.sigma_v().powi(2);
    Ok(PiNorm { norm: sq.sqrt(), x, y })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedBounds {
    pub lb: f64,
    pub ub: f64,
    pub eta: f64,
}

/// `‖Π‖/√max(w) ≤ ‖Σ̃‖ ≤ ‖Π‖/√min(w)`.
pub fn bounds_weighted(norm_pi: f64, weights: &[f64]) -> WeightedBounds {
    let wmax = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let wmin = weights.iter().copied().fold(f64::INFINITY, f64::min);
    WeightedBounds {
        lb: norm_pi / wmax.sqrt(),
        ub: norm_pi / wmin.sqrt(),
        eta: (wmax / wmin).sqrt(),
    }
}

/// Squared lower/upper bounds for arbitrary covariance factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovarianceBounds {
    pub lower_sq: f64,
    pub upper_sq: f64,
}

pub fn bounds_general_covariance(
    net: &NetworkSpec,
    dec: &SpanningTreeDecomposition,
    cov: &CovarianceModel,
) -> Result<CovarianceBounds> {
    let (omega, gamma) = cov.factors(net)?;
    let order = &dec.column_order;
    let m = net.m();
    let gamma = DMatrix::from_fn(m, m, |i, j| gamma[(order[i], order[j])]);
    let q = &omega * omega.transpose();
    let f = &gamma * gamma.transpose();

    let e_inv = linalg::diag(&net.epsilons().iter().map(|e| 1.0 / e).collect::<Vec<_>>());
    let l = time_scaled_edge_laplacian(net, dec);
    let b_tau = e_inv * &dec.d_tau;
    let b_c = dec.r.transpose() * &l;
    let a = -(&l * rwr(net, dec));
    let a_inv = a
        .try_inverse()
        .ok_or_else(|| CoreError::Numerical("state matrix is singular".into()))?;
    let c = dec.r.transpose();
    let ca = &c * &a_inv;
    let j = ca.transpose() * ca;

    let btb = b_tau.transpose() * &b_tau;
    let bcb = b_c.transpose() * &b_c;
    let j_max = linalg::lambda_max(&j)?;
    let lower_sq = (linalg::lambda_min(&q)? * linalg::lambda_min(&btb)?
        + linalg::lambda_min(&f)? * linalg::lambda_min(&bcb)?)
        * j_max;
    let upper_sq = (linalg::lambda_max(&q)? * linalg::lambda_max(&btb)?
        + linalg::lambda_max(&f)? * linalg::lambda_max(&bcb)?)
        * j_max;
    Ok(CovarianceBounds { lower_sq, upper_sq })
}

/// Eigenvalue-only bounds on `‖Σ̃‖²` for spanning-tree graphs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TreeBounds {
    pub l1: f64,
    pub l2: f64,
    pub l: f64,
    pub u: f64,
}

fn require_tree(net: &NetworkSpec) -> Result<()> {
    if net.is_tree() {
        Ok(())
    } else {
        Err(CoreError::NotATree { nodes: net.n(), edges: net.m() })
    }
}

pub fn bounds_tree(net: &NetworkSpec, dec: &SpanningTreeDecomposition) -> Result<TreeBounds> {
    require_tree(net)?;
    let l = time_scaled_edge_laplacian(net, dec);
    let lmin = linalg::lambda_min(&l)?;
    let lmax = linalg::lambda_max(&l)?;
    let w = net.weights();
    // extreme eigenvalues of W^{1/2}
    let hmax = w.iter().copied().fold(f64::NEG_INFINITY, f64::max).sqrt();
    let hmin = w.iter().copied().fold(f64::INFINITY, f64::min).sqrt();
    let (sw, sv) = (net.sigma_w().powi(2), net.sigma_v().powi(2));
    let l1 = (sw + sv * lmin * hmax.powi(2)) / (lmin * hmax.powi(4));
    let l2 = (sw + sv * lmax * hmax * hmin) / (lmax * hmax.powi(3) * hmin);
    let u = (sw + sv * lmin * hmin.powi(2)) / (lmin * hmin.powi(4));
    Ok(TreeBounds { l1, l2, l: l1.max(l2), u })
}

pub fn hinf_equal_weights(net: &NetworkSpec, dec: &SpanningTreeDecomposition, rho: f64) -> Result<f64> {
    if net.weights().iter().any(|w| (w - rho).abs() > 1e-12 * rho.abs()) {
        return Err(CoreError::UnequalWeights(rho));
    }
    let rr = &dec.r * dec.r.transpose();
    let l = time_scaled_edge_laplacian(net, dec);
    let k = &rr * l * &rr;
    let inner = linalg::spd_congruence_inverse(&((&k + k.transpose()) * 0.5), &dec.r)?;
    let sq = net.sigma_w().powi(2) / rho.powi(2) * linalg::lambda_max(&inner)?
        + net.sigma_v().powi(2) / rho;
    Ok(sq.sqrt())
}

/// `(‖Σ̃‖∞, ‖Π‖∞)` for spanning-tree graphs (`R = I`).
pub fn hinf_tree(net: &NetworkSpec, dec: &SpanningTreeDecomposition) -> Result<(f64, f64)> {
    require_tree(net)?;
    let l = time_scaled_edge_laplacian(net, dec);
    let w = dec.permute_edges(&net.weights());
    let wm = linalg::diag(&w);
    let w_inv = linalg::diag(&w.iter().map(|x| 1.0 / x).collect::<Vec<_>>());
    let eye = DMatrix::identity(l.nrows(), l.nrows());
    let (sw, sv) = (net.sigma_w().powi(2), net.sigma_v().powi(2));

    let wlw = &wm * &l * &wm;
    let sigma_sq = linalg::lambda_max(&(linalg::spd_solve(&wlw, &eye)? * sw + w_inv * sv))?;
    let wh = linalg::diag(&w.iter().map(|x| x.sqrt()).collect::<Vec<_>>());
    let whl = &wh * &l * &wh;
    let pi_sq = sw * linalg::lambda_max(&linalg::spd_solve(&whl, &eye)?)? + sv;
    Ok((sigma_sq.max(0.0).sqrt(), pi_sq.sqrt()))
}

/// `W^{-1/2} R† (L_{e,s}^tau)⁻¹ R†ᵀ W^{-1/2}`, the convex surrogate for `X`.
pub fn relaxed_x1(net: &NetworkSpec, dec: &SpanningTreeDecomposition) -> Result<DMatrix<f64>> {
    let w_inv_half: Vec<f64> = dec.permute_edges(&net.weights()).iter().map(|w| 1.0 / w.sqrt()).collect();
    let left = linalg::diag(&w_inv_half) * &dec.r_pinv;
    let l = time_scaled_edge_laplacian(net, dec);
    linalg::spd_congruence_inverse(&l, &left.transpose())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ReportFlags {
    pub equal_weights: bool,
    pub tree: bool,
    /// `norm_sigma` came from the frequency sweep (general covariances).
    pub oracle_derived: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HinfReport {
    pub tree_edges: Vec<usize>,
    pub norm_sigma: f64,
    pub norm_pi: Option<f64>,
    pub lb_weighted: Option<f64>,
    pub ub_weighted: Option<f64>,
    pub eta: f64,
    #[serde(flatten)]
    pub tree_bounds: Option<TreeBounds>,
    #[serde(flatten)]
    pub cov_bounds: Option<CovarianceBounds>,
    #[serde(flatten)]
    pub flags: ReportFlags,
}

/// Full analysis. Scaled covariances use the closed forms; general
/// covariances fall back to the frequency-sweep oracle plus the
/// covariance-separated bounds.
pub fn analyze(
    net: &NetworkSpec,
    dec: &SpanningTreeDecomposition,
    cov: &CovarianceModel,
) -> Result<HinfReport> {
    let weights = net.weights();
    let rho = weights[0];
    let equal_weights = weights.iter().all(|w| (w - rho).abs() <= 1e-12 * rho);
    let eta = bounds_weighted(1.0, &weights).eta;
    let tree = net.is_tree();

    match cov {
        CovarianceModel::Scaled { sigma_w, sigma_v } => {
            let net = net.with_noise(*sigma_w, *sigma_v)?;
            let exact = hinf_exact_scaled(&net, dec)?;
            let pi = hinf_pi(&net, dec)?;
            let wb = bounds_weighted(pi.norm, &weights);
            let tree_bounds = if tree { Some(bounds_tree(&net, dec)?) } else { None };
            Ok(HinfReport {
                tree_edges: dec.tree_edges.clone(),
                norm_sigma: exact.norm,
                norm_pi: Some(pi.norm),
                lb_weighted: Some(wb.lb),
                ub_weighted: Some(wb.ub),
                eta,
                tree_bounds,
                cov_bounds: Some(bounds_general_covariance(&net, dec, cov)?),
                flags: ReportFlags { equal_weights, tree, oracle_derived: false },
            })
        }
        CovarianceModel::General { .. } => {
            let real = dynamics::build_realization(net, dec, cov, false)?;
            let sweep = dynamics::frequency_sweep_norm(&real, &dynamics::default_grid())?;
            Ok(HinfReport {
                tree_edges: dec.tree_edges.clone(),
                norm_sigma: sweep.norm,
                norm_pi: None,
                lb_weighted: None,
                ub_weighted: None,
                eta,
                tree_bounds: None,
                cov_bounds: Some(bounds_general_covariance(net, dec, cov)?),
                flags: ReportFlags { equal_weights, tree, oracle_derived: true },
            })
        }
    }
}
