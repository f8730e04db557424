use super::descent::minimize_coercive;
use super::newton::newton_solve;
use super::{Method, NodeSummary, SolverConfig, SolverFailure, SolverRun, TraceEntry};
use crate::error::{Result, TodaError};
use crate::fields::Field;
use crate::functional::TodaParams;
use crate::geometry::Mesh;

struct Chain<'a> {
    mesh: &'a Mesh,
    p: &'a TodaParams,
    cfg: &'a SolverConfig,
    runs: Vec<SolverRun>,
}

impl Chain<'_> {
    fn newton_at(&self, rho: [f64; 2], from: &SolverRun) -> Result<SolverRun> {
        newton_solve(self.mesh, &self.p.with_rho(rho[0], rho[1]), (&from.u1, &from.u2), self.cfg)
    }

    /// Reaches `rho` from the last run, halving the step on failure.
    fn advance(&mut self, rho: [f64; 2], depth: usize) -> Result<()> {
        let last = self.runs.last().expect("chain starts with the coercive minimizer");
        match self.newton_at(rho, last) {
            Ok(run) => {
                self.runs.push(run);
                Ok(())
            }
            Err(e) if depth < self.cfg.max_bisections && e.is_numerical() => {
                log::debug!("continuation step to {rho:?} failed ({e}); bisecting");
                let from = last.rho;
                let mid = [0.5 * (from[0] + rho[0]), 0.5 * (from[1] + rho[1])];
                self.advance(mid, depth + 1)?;
                self.advance(rho, depth + 1)
            }
            Err(e) => Err(e),
        }
    }
}

/// Coercive minimizer at the first node of the path, then Newton at each
/// following node warm-started from the previous solution.
pub fn continuation_solve(mesh: &Mesh, cfg: &SolverConfig, p_target: &TodaParams) -> Result<SolverRun> {
    cfg.validate()?;
    let target = p_target.rho();
    let last = *cfg.rho_path.last().expect("validated");
    if (last[0] - target[0]).abs() > 1e-12 * target[0] || (last[1] - target[1]).abs() > 1e-12 * target[1] {
        return Err(TodaError::Config(format!("path ends at {last:?}, target is {target:?}")));
    }
    let first = cfg.rho_path[0];
    let zero = Field::zeros(mesh);
    let start = minimize_coercive(mesh, &p_target.with_rho(first[0], first[1]), (&zero, &zero), cfg)
        .map_err(|e| node_failure(e, 0, &[]))?;
    let mut chain = Chain { mesh, p: p_target, cfg, runs: vec![start] };
    for (k, rho) in cfg.rho_path.iter().enumerate().skip(1) {
        if let Err(e) = chain.advance(*rho, 0) {
            let done: Vec<NodeSummary> = chain.runs.iter().map(SolverRun::summary).collect();
            return Err(node_failure(e, k, &done));
        }
    }
    let nodes: Vec<NodeSummary> = chain.runs.iter().map(SolverRun::summary).collect();
    let trace: Vec<TraceEntry> = chain
        .runs
        .iter()
        .enumerate()
        .flat_map(|(k, r)| r.trace.iter().map(move |t| TraceEntry { node: k, ..*t }))
        .collect();
    let fin = chain.runs.pop().expect("nonempty");
    Ok(SolverRun { method: Method::Continuation, config: cfg.clone(), trace, nodes, ..fin })
}

fn node_failure(e: TodaError, node: usize, done: &[NodeSummary]) -> TodaError {
    match e {
        TodaError::Solver(f) => {
            TodaError::Solver(Box::new(SolverFailure { node: Some(node), completed: done.to_vec(), ..*f }))
        }
        other => other,
    }
}
