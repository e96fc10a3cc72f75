//! Two-axis formation-control consensus under finite-support disturbances.
//!
//! Per axis, agent `i` runs
//! `eps_i ẋ_i = Σ_j w_ij (x_j - x_i + p_i - p_j + d^e_ij) + d^n_i`,
//! so `x = p + c𝟏` is an equilibrium. `d^e` is carried by the oriented edge
//! `(u, v)`, `u < v`, and enters node `v` with the opposite sign.

mod disturbance;
mod formation;
mod integrator;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::graph::{NetworkSpec, SpanningTreeDecomposition};

pub use disturbance::{disturbance_value, Axis, Channel, ChannelRef, DisturbanceSpec, A_RANGE, B_RANGE};
pub use formation::FormationSpec;
pub use integrator::Rk4;

/// Largest admissible `h · max_i Σ_j w_ij / eps_i`.
pub const STIFFNESS_LIMIT: f64 = 2.5;
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// New `(w, eps)` taking effect at `time`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub time: f64,
    pub weights: Vec<f64>,
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPositions {
    Given(Vec<[f64; 2]>),
    /// Independent uniform draws on `[-half_width, half_width]`.
    Uniform { seed: u64, half_width: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub step: f64,
    pub horizon: f64,
    /// Keep every `record_stride`-th sample (the final one is always kept).
    pub record_stride: usize,
    pub initial: InitialPositions,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            horizon: 10.0,
            record_stride: 1,
            initial: InitialPositions::Uniform { seed: 0, half_width: 3.0 },
        }
    }
}

impl InitialPositions {
    pub fn resolve(&self, n: usize) -> Result<Vec<[f64; 2]>> {
        match self {
            InitialPositions::Given(p) => {
                if p.len() != n {
                    return Err(CoreError::InvalidSimulation(format!(
                        "{} initial positions for {n} nodes",
                        p.len()
                    )));
                }
                Ok(p.clone())
            }
            InitialPositions::Uniform { seed, half_width } => {
                if !(*half_width >= 0.0) {
                    return Err(CoreError::InvalidSimulation("half_width must be >= 0".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(1);
                Ok((0..n)
                    .map(|_| {
                        let z = rng.gen_range(-half_width..=*half_width);
                        let y = rng.gen_range(-half_width..=*half_width);
                        [z, y]
                    })
                    .collect())
            }
        }
    }
}

/// Disturbance stream for `seed`, independent of the initial-position
/// stream of the same seed.
pub fn disturbance_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// Per sample: `z_1..z_n, y_1..y_n`.
    pub states: Vec<Vec<f64>>,
    pub switch_times: Vec<f64>,
    /// Parameters in force, starting with the initial ones at `t = 0`.
    pub applied: Vec<ScheduleEntry>,
    pub n_nodes: usize,
}

impl TrajectoryRecord {
    pub fn node_value(&self, sample: usize, axis: Axis, node: usize) -> f64 {
        self.states[sample][axis.index() * self.n_nodes + node]
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Clone)]
struct Params {
    edges: Vec<(usize, usize, f64)>,
    inv_eps: Vec<f64>,
}

fn params_for(net: &NetworkSpec, weights: &[f64], eps: &[f64]) -> Result<Params> {
    let tuned = net.with_parameters(eps, weights)?;
    Ok(Params {
        edges: tuned.edges().iter().map(|e| (e.u - 1, e.v - 1, e.weight)).collect(),
        inv_eps: tuned.epsilons().iter().map(|e| 1.0 / e).collect(),
    })
}

fn stiffness(p: &Params) -> f64 {
    let mut deg = vec![0.0; p.inv_eps.len()];
    for &(u, v, w) in &p.edges {
        deg[u] += w;
        deg[v] += w;
    }
    deg.iter().zip(&p.inv_eps).map(|(d, ie)| d * ie).fold(0.0, f64::max)
}

/// Step count for `span`, which must be a whole number of steps.
fn grid_steps(span: f64, h: f64, what: &str) -> Result<usize> {
    let k = (span / h).round();
    if (k * h - span).abs() > 1e-9 * span.abs().max(1.0) {
        return Err(CoreError::InvalidSimulation(format!("{what} {span} is not a multiple of the step {h}")));
    }
    Ok(k as usize)
}

/// Integrates both axes with fixed-step RK4. Within a step, the parameter
/// set and the disturbance support are taken at the step midpoint, so
/// switches and support ends on the grid are resolved exactly.
pub fn simulate(
    net: &NetworkSpec,
    formation: &FormationSpec,
    disturbances: &DisturbanceSpec,
    schedule: &[ScheduleEntry],
    config: &SimConfig,
) -> Result<TrajectoryRecord> {
    let (n, m) = (net.n(), net.m());
    let h = config.step;
    if !(h > 0.0 && h.is_finite()) || !(config.horizon > 0.0 && config.horizon.is_finite()) {
        return Err(CoreError::InvalidSimulation("step and horizon must be positive".into()));
    }
    if config.record_stride == 0 {
        return Err(CoreError::InvalidSimulation("record_stride must be >= 1".into()));
    }
    formation.validate(n)?;
    disturbances.validate()?;
    if disturbances.node.len() != n || disturbances.edge.len() != m {
        return Err(CoreError::InvalidSimulation(format!(
            "disturbance has {} node and {} edge channels, network has {n} and {m}",
            disturbances.node.len(),
            disturbances.edge.len()
        )));
    }
    let steps = grid_steps(config.horizon, h, "horizon")?;

    let initial = ScheduleEntry { time: 0.0, weights: net.weights(), epsilons: net.epsilons() };
    let mut applied = vec![initial];
    let mut switch_steps = Vec::new();
    for entry in schedule {
        let last = applied.last().map(|e| e.time).unwrap_or(0.0);
        if !(entry.time > last && entry.time <= config.horizon) {
            return Err(CoreError::InvalidSimulation(format!(
                "schedule time {} must lie in ({last}, {}] and increase",
                entry.time, config.horizon
            )));
        }
        switch_steps.push(grid_steps(entry.time, h, "schedule time")?);
        applied.push(entry.clone());
    }
    let params: Vec<Params> = applied
        .iter()
        .map(|e| params_for(net, &e.weights, &e.epsilons))
        .collect::<Result<_>>()?;
    let rate = params.iter().map(stiffness).fold(0.0, f64::max);
    if h * rate > STIFFNESS_LIMIT {
        return Err(CoreError::StepTooLarge { step: h, rate, required: STIFFNESS_LIMIT / rate });
    }

    let p = &formation.offsets;
    let start = config.initial.resolve(n)?;
    let mut y = vec![0.0; 2 * n];
    for i in 0..n {
        y[i] = start[i][0];
        y[n + i] = start[i][1];
    }

    let mut times = vec![0.0];
    let mut states = vec![y.clone()];
    let mut rk = Rk4::new(2 * n);
    let mut phase = 0;
    for k in 0..steps {
        let t = k as f64 * h;
        while phase < switch_steps.len() && switch_steps[phase] <= k {
            phase += 1;
        }
        let par = &params[phase];
        let active = disturbances.is_active(t + 0.5 * h);
        let mut rhs = |tt: f64, x: &[f64], dx: &mut [f64]| {
            dx.iter_mut().for_each(|d| *d = 0.0);
            for (axis, off) in [0usize, n].into_iter().enumerate() {
                if active {
                    for (i, ch) in disturbances.node.iter().enumerate() {
                        dx[off + i] += disturbances.profile(&ch[axis], tt);
                    }
                }
                for (l, &(u, v, w)) in par.edges.iter().enumerate() {
                    let mut flow = x[off + v] - x[off + u] + p[u][axis] - p[v][axis];
                    if active {
                        flow += disturbances.profile(&disturbances.edge[l][axis], tt);
                    }
                    dx[off + u] += w * flow;
                    dx[off + v] -= w * flow;
                }
                for i in 0..n {
                    dx[off + i] *= par.inv_eps[i];
                }
            }
        };
        rk.step(&mut rhs, t, &mut y, h);
        let t_next = (k + 1) as f64 * h;
        if y.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT) {
            return Err(CoreError::Diverged(t_next));
        }
        if (k + 1) % config.record_stride == 0 || k + 1 == steps {
            times.push(t_next);
            states.push(y.clone());
        }
    }

    Ok(TrajectoryRecord {
        times,
        states,
        switch_times: applied.iter().skip(1).map(|e| e.time).collect(),
        applied,
        n_nodes: n,
    })
}

/// Per-sample edge deviations `x_u - x_v - (p_u - p_v)`, laid out as
/// `z_1..z_|E|, y_1..y_|E|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeSeries {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub n_edges: usize,
}

impl EdgeSeries {
    pub fn value(&self, sample: usize, axis: Axis, edge: usize) -> f64 {
        self.values[sample][axis.index() * self.n_edges + edge]
    }
}

pub fn edge_states(
    record: &TrajectoryRecord,
    dec: &SpanningTreeDecomposition,
    formation: &FormationSpec,
) -> Result<EdgeSeries> {
    let n = record.n_nodes;
    if dec.n() != n || formation.offsets.len() != n {
        return Err(CoreError::Dimension(format!(
            "record has {n} nodes, decomposition {} and formation {}",
            dec.n(),
            formation.offsets.len()
        )));
    }
    let m = dec.m();
    let p = &formation.offsets;
    let values = record
        .states
        .iter()
        .map(|x| {
            let mut e = vec![0.0; 2 * m];
            for axis in 0..2 {
                for (l, &(u, v)) in dec.orientation.iter().enumerate() {
                    let (u, v) = (u - 1, v - 1);
                    e[axis * m + l] = x[axis * n + u] - x[axis * n + v] - (p[u][axis] - p[v][axis]);
                }
            }
            e
        })
        .collect();
    Ok(EdgeSeries { times: record.times.clone(), values, n_edges: m })
}

/// Trapezoidal `∫ Σ e² dt` over the samples in `[t0, t1]`.
pub fn rejection_metric(series: &EdgeSeries, window: (f64, f64)) -> Result<f64> {
    let (t0, t1) = window;
    let tol = 1e-9 * t1.abs().max(1.0);
    let (first, last) = match (series.times.first(), series.times.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(CoreError::EmptyWindow(t0, t1)),
    };
    if !(t1 > t0) {
        return Err(CoreError::EmptyWindow(t0, t1));
    }
    if t0 < first - tol || t1 > last + tol {
        return Err(CoreError::InvalidSimulation(format!(
            "window [{t0}, {t1}] outside the record [{first}, {last}]"
        )));
    }
    let idx: Vec<usize> = (0..series.times.len())
        .filter(|&k| series.times[k] >= t0 - tol && series.times[k] <= t1 + tol)
        .collect();
    if idx.len() < 2 {
        return Err(CoreError::EmptyWindow(t0, t1));
    }
    let energy = |k: usize| series.values[k].iter().map(|e| e * e).sum::<f64>();
    Ok(idx
        .windows(2)
        .map(|w| 0.5 * (series.times[w[1]] - series.times[w[0]]) * (energy(w[0]) + energy(w[1])))
        .sum())
}

/// `Σ |e|` over edges and axes at the last sample.
pub fn terminal_error(series: &EdgeSeries) -> f64 {
    series.values.last().map(|v| v.iter().map(|e| e.abs()).sum()).unwrap_or(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbOutcome {
    pub metric_baseline: f64,
    pub metric_switched: f64,
    pub terminal_baseline: f64,
    pub terminal_switched: f64,
}

impl AbOutcome {
    pub fn switched_wins(&self) -> (bool, bool) {
        (self.metric_switched < self.metric_baseline, self.terminal_switched < self.terminal_baseline)
    }
}

/// Runs `net` as given and with `switch` applied, under the same
/// disturbances and initial positions, and compares the edge deviations.
pub fn compare_schedules(
    net: &NetworkSpec,
    dec: &SpanningTreeDecomposition,
    formation: &FormationSpec,
    disturbances: &DisturbanceSpec,
    switch: &ScheduleEntry,
    window: (f64, f64),
    config: &SimConfig,
) -> Result<(AbOutcome, TrajectoryRecord, TrajectoryRecord)> {
    let (base, switched) = rayon::join(
        || simulate(net, formation, disturbances, &[], config),
        || simulate(net, formation, disturbances, std::slice::from_ref(switch), config),
    );
    let (base, switched) = (base?, switched?);
    let eb = edge_states(&base, dec, formation)?;
    let es = edge_states(&switched, dec, formation)?;
    let outcome = AbOutcome {
        metric_baseline: rejection_metric(&eb, window)?,
        metric_switched: rejection_metric(&es, window)?,
        terminal_baseline: terminal_error(&eb),
        terminal_switched: terminal_error(&es),
    };
    Ok((outcome, base, switched))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::{decompose, TreeSelector};

    fn unit_triangle() -> NetworkSpec {
        fixtures::triangle().with_parameters(&[1.0; 3], &[1.0; 3]).unwrap()
    }

    #[test]
    fn unit_triangle_reaches_consensus() {
        let net = unit_triangle();
        let rec = simulate(
            &net,
            &FormationSpec::zero(3),
            &DisturbanceSpec::zero(3, 3),
            &[],
            &SimConfig::default(),
        )
        .unwrap();
        let x = rec.final_state();
        for axis in 0..2 {
            let s = &x[axis * 3..axis * 3 + 3];
            let gap = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - s.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(gap <= 1e-3, "gap {gap}");
        }
        assert_eq!(rec.times.len(), 10_001);
        assert!((rec.times.last().unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn formation_equilibrium_holds() {
        let net = fixtures::net10();
        let dec = decompose(&net, &TreeSelector::Default).unwrap();
        let f = FormationSpec::squares(10, &fixtures::NET10_FAST_NODES).unwrap();
        let start: Vec<[f64; 2]> = f.offsets.iter().map(|p| [p[0] + 0.25, p[1] - 1.5]).collect();
        let cfg = SimConfig { initial: InitialPositions::Given(start), ..Default::default() };
        let rec = simulate(&net, &f, &DisturbanceSpec::zero(10, 15), &[], &cfg).unwrap();
        let es = edge_states(&rec, &dec, &f).unwrap();
        assert!(es.values.iter().flatten().all(|e| e.abs() <= 1e-12));
    }

    #[test]
    fn stiffness_guard_reports_required_step() {
        let net = fixtures::triangle();
        let cfg = SimConfig { step: 0.05, horizon: 1.0, ..Default::default() };
        let err = simulate(&net, &FormationSpec::zero(3), &DisturbanceSpec::zero(3, 3), &[], &cfg).unwrap_err();
        match err {
            CoreError::StepTooLarge { rate, required, .. } => {
                // node 1: (4 + 12)/0.1
                assert!((rate - 160.0).abs() < 1e-9);
                assert!((required - 2.5 / 160.0).abs() < 1e-15);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn schedule_validation() {
        let net = unit_triangle();
        let cfg = SimConfig { horizon: 1.0, ..Default::default() };
        let f = FormationSpec::zero(3);
        let d = DisturbanceSpec::zero(3, 3);
        let late = ScheduleEntry { time: 2.0, weights: vec![1.0; 3], epsilons: vec![1.0; 3] };
        assert!(simulate(&net, &f, &d, &[late], &cfg).is_err());
        let off = ScheduleEntry { time: 0.50005, weights: vec![1.0; 3], epsilons: vec![1.0; 3] };
        assert!(simulate(&net, &f, &d, &[off], &cfg).is_err());
        let ok = ScheduleEntry { time: 0.5, weights: vec![2.0; 3], epsilons: vec![1.0; 3] };
        let rec = simulate(&net, &f, &d, &[ok], &cfg).unwrap();
        assert_eq!(rec.switch_times, vec![0.5]);
        assert_eq!(rec.applied.len(), 2);
    }

    #[test]
    fn metric_of_constant_series() {
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.01).collect();
        let series = EdgeSeries { values: vec![vec![2.0]; times.len()], times, n_edges: 1 };
        assert!((rejection_metric(&series, (0.2, 0.7)).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(rejection_metric(&series, (0.5, 0.5)), Err(CoreError::EmptyWindow(..))));
        assert!(rejection_metric(&series, (0.5, 2.0)).is_err());
    }

    #[test]
    fn divergence_is_caught() {
        let net = unit_triangle();
        let f = FormationSpec::zero(3);
        let mut d = DisturbanceSpec::zero(3, 3);
        d.t_s = 0.0;
        d.t_f = 10.0;
        d.node[0][0] = Channel { a: 1e9, b: 0.0 };
        let err = simulate(&net, &f, &d, &[], &SimConfig::default()).unwrap_err();
        assert!(matches!(err, CoreError::Diverged(_)));
    }

    #[test]
    fn stride_keeps_final_sample() {
        let net = unit_triangle();
        let cfg = SimConfig { horizon: 1.0, record_stride: 300, ..Default::default() };
        let rec = simulate(&net, &FormationSpec::zero(3), &DisturbanceSpec::zero(3, 3), &[], &cfg).unwrap();
        let expected = [0.0, 0.3, 0.6, 0.9, 1.0];
        assert_eq!(rec.times.len(), expected.len());
        for (t, e) in rec.times.iter().zip(expected) {
            assert!((t - e).abs() < 1e-12);
        }
    }
}
