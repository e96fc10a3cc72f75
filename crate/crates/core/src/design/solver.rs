use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::program::{Cone, ConicProgram};
use crate::error::{CoreError, Result};

/// Environment variable naming the backend to use.
pub const SOLVER_ENV: &str = "EDGE_HINF_SOLVER";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawStatus {
    Solved,
    AlmostSolved,
    Infeasible,
    Failed,
}

#[derive(Debug, Clone)]
pub struct RawSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: RawStatus,
    /// Backend status string, verbatim.
    pub detail: String,
}

/// A solver for linear, second-order and PSD cones.
pub trait ConicBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, program: &ConicProgram) -> Result<RawSolution>;
}

#[derive(Debug, Clone, Copy)]
pub struct ClarabelBackend {
    pub tol: f64,
    pub max_iter: u32,
}

impl Default for ClarabelBackend {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200 }
    }
}

impl ConicBackend for ClarabelBackend {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn solve(&self, program: &ConicProgram) -> Result<RawSolution> {
        let n = program.n_vars();
        let p = CscMatrix::<f64>::zeros((n, n));
        let a = CscMatrix::new_from_triplets(
            program.n_rows(),
            n,
            program.a_rows.clone(),
            program.a_cols.clone(),
            program.a_vals.clone(),
        );
        let cones: Vec<SupportedConeT<f64>> = program
            .cones
            .iter()
            .map(|c| match *c {
                Cone::Zero(k) => SupportedConeT::ZeroConeT(k),
                Cone::Nonnegative(k) => SupportedConeT::NonnegativeConeT(k),
                Cone::SecondOrder(k) => SupportedConeT::SecondOrderConeT(k),
                Cone::PsdTriangle(k) => SupportedConeT::PSDTriangleConeT(k),
            })
            .collect();
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(self.max_iter)
            .tol_gap_abs(self.tol)
            .tol_gap_rel(self.tol)
            .tol_feas(self.tol)
            .build()
            .map_err(|e| CoreError::Solver { backend: self.name().into(), status: e.to_string() })?;
        let mut solver = DefaultSolver::new(&p, &program.q, &a, &program.b, &cones, settings)
            .map_err(|e| CoreError::Solver { backend: self.name().into(), status: e.to_string() })?;
        solver.solve();
        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved => RawStatus::Solved,
            SolverStatus::AlmostSolved => RawStatus::AlmostSolved,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => RawStatus::Infeasible,
            _ => RawStatus::Failed,
        };
        log::debug!("clarabel: {:?} after {} iterations", sol.status, sol.iterations);
        Ok(RawSolution {
            x: sol.x.clone(),
            objective: sol.obj_val,
            status,
            detail: format!("{:?}", sol.status),
        })
    }
}

pub fn available_backends() -> &'static [&'static str] {
    &["clarabel"]
}

/// Backend by name, or from [`SOLVER_ENV`] when `name` is `None`.
pub fn select_backend(name: Option<&str>) -> Result<Box<dyn ConicBackend>> {
    let from_env = std::env::var(SOLVER_ENV).ok();
    let chosen = name.map(str::to_string).or(from_env).unwrap_or_else(|| "clarabel".into());
    match chosen.trim().to_ascii_lowercase().as_str() {
        "clarabel" | "" => Ok(Box::new(ClarabelBackend::default())),
        _ => Err(CoreError::UnknownBackend(chosen)),
    }
}
