//! Optimal edge weights and time scales.
//!
//! The design variables are `v_l = w_l^{-1/2}` and `e_i = 1/eps_i`, which
//! make both Schur-complement LMIs linear. [`build_program`] lowers a
//! [`DesignProblem`] to a solver-agnostic [`ConicProgram`]; [`solve`] runs
//! it through a [`ConicBackend`] and maps the result back.

mod pareto;
mod program;
mod solver;

use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::error::{CoreError, Result};
use crate::graph::{NetworkSpec, SpanningTreeDecomposition};
use crate::linalg;

pub use pareto::{
    detect_knee, pareto_sweep, write_front_csv, LogGrid, ParetoGrid, ParetoRecord,
};
pub use program::{build_program, Cone, ConicProgram, VariableLayout};
pub use solver::{
    available_backends, select_backend, ClarabelBackend, ConicBackend, RawSolution, RawStatus,
    SOLVER_ENV,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyMode {
    #[default]
    Regularizer,
    Constraint,
}

/// Box bounds, penalty weights and the η cap. `gamma = None` disables the
/// cap. Bounds are indexed by edge / node id in the network's order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignProblem {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub gamma: Option<f64>,
    pub w_bounds: Vec<[f64; 2]>,
    pub eps_bounds: Vec<[f64; 2]>,
    #[serde(default)]
    pub mode: PenaltyMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
}

impl DesignProblem {
    pub fn from_json(document: &str) -> Result<Self> {
        let p: Self =
            serde_json::from_str(document).map_err(|e| CoreError::Parse(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    /// Same box on every edge and every node.
    pub fn homogeneous(m: usize, n: usize, w: [f64; 2], eps: [f64; 2]) -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            gamma: None,
            w_bounds: vec![w; m],
            eps_bounds: vec![eps; n],
            mode: PenaltyMode::Regularizer,
            mu: None,
            nu: None,
        }
    }

    pub fn with_weights(&self, alpha: f64, beta: f64, gamma: Option<f64>) -> Self {
        Self { alpha, beta, gamma, ..self.clone() }
    }

    pub fn gamma_or_inf(&self) -> f64 {
        self.gamma.unwrap_or(f64::INFINITY)
    }

    pub fn is_homogeneous(&self) -> bool {
        let same = |b: &[[f64; 2]]| b.iter().all(|x| x == &b[0]);
        !self.w_bounds.is_empty() && !self.eps_bounds.is_empty() && same(&self.w_bounds) && same(&self.eps_bounds)
    }

    /// Parameter invariants plus the necessary feasibility conditions.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CoreError::InvalidDesign(msg));
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) || !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("alpha and beta must be finite and >= 0, got {} and {}", self.alpha, self.beta));
        }
        if let Some(g) = self.gamma {
            if !(g >= 1.0) {
                return bad(format!("gamma must be >= 1, got {g}"));
            }
        }
        for (name, bounds) in [("w", &self.w_bounds), ("eps", &self.eps_bounds)] {
            if bounds.is_empty() {
                return bad(format!("{name}_bounds is empty"));
            }
            for (k, [lo, hi]) in bounds.iter().enumerate() {
                if !(*lo > 0.0 && lo <= hi && hi.is_finite()) {
                    return bad(format!("{name}_bounds[{}] = [{lo}, {hi}] must satisfy 0 < lo <= hi < inf", k + 1));
                }
            }
        }
        // eta cap against the boxes: need max_l w_max^{-1/2} <= gamma * min_l w_min^{-1/2}
        if let Some(g) = self.gamma {
            let need = self.w_bounds.iter().map(|b| b[1].powf(-0.5)).fold(0.0, f64::max);
            let have = self.w_bounds.iter().map(|b| b[0].powf(-0.5)).fold(f64::INFINITY, f64::min);
            if need > g * have * (1.0 + 1e-12) {
                return Err(CoreError::Infeasible(format!(
                    "gamma = {g} is below the smallest achievable eta {}",
                    need / have
                )));
            }
        }
        match self.mode {
            PenaltyMode::Regularizer => {
                if self.mu.is_some() || self.nu.is_some() {
                    return bad("mu/nu are only used in constraint mode".into());
                }
            }
            PenaltyMode::Constraint => {
                if self.alpha != 0.0 || self.beta != 0.0 {
                    return bad("constraint mode requires alpha = beta = 0".into());
                }
                let (Some(mu), Some(nu)) = (self.mu, self.nu) else {
                    return bad("constraint mode requires mu and nu".into());
                };
                let mu_min: f64 = self.eps_bounds.iter().map(|b| 1.0 / b[1]).sum();
                let nu_max: f64 = self.w_bounds.iter().map(|b| b[0].powf(-0.5)).sum();
                if mu < mu_min * (1.0 - 1e-12) {
                    return Err(CoreError::Infeasible(format!("mu = {mu} < sum of 1/eps_max = {mu_min}")));
                }
                if nu > nu_max * (1.0 + 1e-12) {
                    return Err(CoreError::Infeasible(format!("nu = {nu} > sum of w_min^(-1/2) = {nu_max}")));
                }
            }
        }
        Ok(())
    }

    pub fn check_dimensions(&self, net: &NetworkSpec) -> Result<()> {
        if self.w_bounds.len() != net.m() || self.eps_bounds.len() != net.n() {
            return Err(CoreError::Dimension(format!(
                "design has {} edge and {} node bounds, network has {} edges and {} nodes",
                self.w_bounds.len(),
                self.eps_bounds.len(),
                net.m(),
                net.n()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    NearOptimal,
    /// Closed-form box corner, no solver involved.
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSolution {
    pub w_star: Vec<f64>,
    pub eps_star: Vec<f64>,
    pub zeta_star: f64,
    pub objective_value: f64,
    pub solver_status: SolveStatus,
    pub backend: String,
    pub achieved_eta: f64,
    pub achieved_norm: f64,
    pub achieved_pi: f64,
    pub xi_norm: f64,
    pub epsinv_norm: f64,
}

impl DesignSolution {
    /// Largest violation of the boxes, relative to the bound magnitude.
    pub fn box_violation(&self, problem: &DesignProblem) -> f64 {
        let viol = |x: f64, [lo, hi]: [f64; 2]| ((lo - x) / lo).max((x - hi) / hi).max(0.0);
        let w = self.w_star.iter().zip(&problem.w_bounds).map(|(&x, &b)| viol(x, b));
        let e = self.eps_star.iter().zip(&problem.eps_bounds).map(|(&x, &b)| viol(x, b));
        w.chain(e).fold(0.0, f64::max)
    }
}

/// `λ_max(X₁)` at given parameters; the quantity `ζ` upper-bounds.
pub fn lambda_max_x1(net: &NetworkSpec, dec: &SpanningTreeDecomposition) -> Result<f64> {
    linalg::lambda_max(&analysis::relaxed_x1(net, dec)?)
}

fn finish(
    net: &NetworkSpec,
    dec: &SpanningTreeDecomposition,
    w_star: Vec<f64>,
    eps_star: Vec<f64>,
    zeta_star: f64,
    objective_value: f64,
    solver_status: SolveStatus,
    backend: &str,
) -> Result<DesignSolution> {
    let tuned = net.with_parameters(&eps_star, &w_star)?;
    let achieved_norm = analysis::hinf_exact_scaled(&tuned, dec)?.norm;
    let achieved_pi = analysis::hinf_pi(&tuned, dec)?.norm;
    let achieved_eta = analysis::bounds_weighted(1.0, &w_star).eta;
    let xi_norm = w_star.iter().sum::<f64>().sqrt();
    let epsinv_norm = eps_star.iter().map(|e| e.powi(-2)).sum::<f64>().sqrt();
    Ok(DesignSolution {
        w_star,
        eps_star,
        zeta_star,
        objective_value,
        solver_status,
        backend: backend.to_string(),
        achieved_eta,
        achieved_norm,
        achieved_pi,
        xi_norm,
        epsinv_norm,
    })
}

/// Builds and solves the program for `problem` on `(net, dec)`.
pub fn solve(
    net: &NetworkSpec,
    dec: &SpanningTreeDecomposition,
    problem: &DesignProblem,
    backend: &dyn ConicBackend,
) -> Result<DesignSolution> {
    let program = build_program(net, dec, problem)?;
    solve_program(net, dec, &program, backend)
}

pub fn solve_program(
    net: &NetworkSpec,
    dec: &SpanningTreeDecomposition,
    program: &ConicProgram,
    backend: &dyn ConicBackend,
) -> Result<DesignSolution> {
    let raw = backend.solve(program)?;
    let status = match raw.status {
        RawStatus::Solved => SolveStatus::Optimal,
        RawStatus::AlmostSolved => SolveStatus::NearOptimal,
        RawStatus::Infeasible => {
            return Err(CoreError::Infeasible(format!("{} reported {}", backend.name(), raw.detail)))
        }
        RawStatus::Failed => {
            return Err(CoreError::Solver { backend: backend.name().into(), status: raw.detail })
        }
    };
    let lay = &program.layout;
    let v = &raw.x[lay.v.clone()];
    let e = &raw.x[lay.e.clone()];
    if v.iter().chain(e).any(|&x| !(x > 0.0)) {
        return Err(CoreError::Solver {
            backend: backend.name().into(),
            status: "non-positive design variable in solution".into(),
        });
    }
    let w_perm: Vec<f64> = v.iter().map(|v| v.powi(-2)).collect();
    let w_star = dec.unpermute_edges(&w_perm);
    let eps_star: Vec<f64> = e.iter().map(|e| 1.0 / e).collect();
    let zeta = raw.x[lay.zeta];
    finish(net, dec, w_star, eps_star, zeta, raw.objective, status, backend.name())
}

/// `(ε_min 𝟏, w_max 𝟏)`, the minimizer of `‖Π‖∞` over homogeneous boxes.
pub fn trivial_optimum(
    net: &NetworkSpec,
    dec: &SpanningTreeDecomposition,
    problem: &DesignProblem,
) -> Result<DesignSolution> {
    problem.check_dimensions(net)?;
    if !problem.is_homogeneous() {
        return Err(CoreError::InvalidDesign(
            "the box-corner optimum needs identical bounds on every edge and node".into(),
        ));
    }
    let w_star = vec![problem.w_bounds[0][1]; net.m()];
    let eps_star = vec![problem.eps_bounds[0][0]; net.n()];
    let tuned = net.with_parameters(&eps_star, &w_star)?;
    let zeta = lambda_max_x1(&tuned, dec)?;
    finish(net, dec, w_star, eps_star, zeta, zeta, SolveStatus::Analytic, "closed-form")
}
