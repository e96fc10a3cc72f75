use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use edgehinf_core::analysis::{self, bounds_tree, bounds_weighted};
use edgehinf_core::design::{
    build_program, detect_knee, pareto_sweep, select_backend, solve, write_front_csv, ParetoGrid,
};
use edgehinf_core::dynamics::build_realization;
use edgehinf_core::format::fmt_float;
use edgehinf_core::graph::{enumerate_spanning_trees, spanning_tree_count};
use edgehinf_core::sim::{
    compare_schedules, disturbance_rng, edge_states, rejection_metric, terminal_error, Axis,
    EdgeSeries, InitialPositions, ScheduleEntry,
};
use edgehinf_core::{
    analyze as analyze_network, decompose, load_network, CovarianceModel, DesignProblem, DisturbanceSpec,
    FormationSpec, NetworkSpec, SimConfig, SpanningTreeDecomposition, TrajectoryRecord, TreeSelector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::manifest::{to_json, Run};
use crate::{Common, SimArgs, TreeArg};

fn load_net(run: &mut Run, path: &Path) -> Result<NetworkSpec> {
    Ok(load_network(&run.read(path)?)?)
}

fn decomposition(net: &NetworkSpec, tree: &TreeArg) -> Result<SpanningTreeDecomposition> {
    let selector = match &tree.tree {
        Some(ids) => TreeSelector::Explicit(ids.clone()),
        None => TreeSelector::Default,
    };
    Ok(decompose(net, &selector)?)
}

fn parse<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| anyhow::anyhow!("invalid {what} document: {e}"))
}

fn check_disturbance(d: &DisturbanceSpec, net: &NetworkSpec) -> Result<()> {
    d.validate()?;
    if d.node.len() != net.n() || d.edge.len() != net.m() {
        bail!(
            "disturbance has {} node and {} edge channels, network has {} nodes and {} edges",
            d.node.len(),
            d.edge.len(),
            net.n(),
            net.m()
        );
    }
    Ok(())
}

fn check_schedule(schedule: &[ScheduleEntry], net: &NetworkSpec) -> Result<()> {
    for e in schedule {
        net.with_parameters(&e.epsilons, &e.weights)?;
    }
    Ok(())
}

pub fn validate(
    common: &Common,
    design: Option<PathBuf>,
    formation: Option<PathBuf>,
    disturbance: Option<PathBuf>,
    schedule: Option<PathBuf>,
    covariance: Option<PathBuf>,
) -> Result<()> {
    let mut run = Run::new("validate", common.out_dir.clone())?;
    let net = load_net(&mut run, &common.net)?;
    let dec = decompose(&net, &TreeSelector::Default)?;
    let mut checked = vec!["network"];
    if let Some(p) = design {
        let problem = DesignProblem::from_json(&run.read(&p)?)?;
        problem.check_dimensions(&net)?;
        checked.push("design");
    }
    if let Some(p) = formation {
        parse::<FormationSpec>(&run.read(&p)?, "formation")?.validate(net.n())?;
        checked.push("formation");
    }
    if let Some(p) = disturbance {
        check_disturbance(&parse(&run.read(&p)?, "disturbance")?, &net)?;
        checked.push("disturbance");
    }
    if let Some(p) = schedule {
        check_schedule(&parse::<Vec<ScheduleEntry>>(&run.read(&p)?, "schedule")?, &net)?;
        checked.push("schedule");
    }
    if let Some(p) = covariance {
        CovarianceModel::from_json(&run.read(&p)?)?.factors(&net)?;
        checked.push("covariance");
    }

    #[derive(Serialize)]
    struct Summary<'a> {
        valid: bool,
        nodes: usize,
        edges: usize,
        is_tree: bool,
        spanning_trees: u64,
        tree_edges: &'a [usize],
        checked: Vec<&'a str>,
    }
    let summary = Summary {
        valid: true,
        nodes: net.n(),
        edges: net.m(),
        is_tree: net.is_tree(),
        spanning_trees: spanning_tree_count(&dec)?,
        tree_edges: &dec.tree_edges,
        checked,
    };
    run.emit("validate.json", &to_json(&summary)?, true)?;
    run.finish()
}

pub fn trees(common: &Common, limit: usize) -> Result<()> {
    let mut run = Run::new("trees", common.out_dir.clone())?;
    let net = load_net(&mut run, &common.net)?;
    let dec = decompose(&net, &TreeSelector::Default)?;
    let listed = enumerate_spanning_trees(&net, limit);

    #[derive(Serialize)]
    struct Trees {
        count: u64,
        truncated: bool,
        trees: Vec<Vec<usize>>,
    }
    let doc = Trees { count: spanning_tree_count(&dec)?, truncated: listed.truncated, trees: listed.trees };
    run.emit("trees.json", &to_json(&doc)?, true)?;
    run.finish()
}

pub fn analyze(
    common: &Common,
    tree: &TreeArg,
    covariance: Option<PathBuf>,
    dump_realization: Option<PathBuf>,
) -> Result<()> {
    let mut run = Run::new("analyze", common.out_dir.clone())?;
    let net = load_net(&mut run, &common.net)?;
    let dec = decomposition(&net, tree)?;
    let cov = match covariance {
        Some(p) => CovarianceModel::from_json(&run.read(&p)?)?,
        None => CovarianceModel::from_network(&net),
    };
    let report = analyze_network(&net, &dec, &cov)?;
    if let Some(path) = dump_realization {
        let real = build_realization(&net, &dec, &cov, false)?;
        run.emit_to(&path, &real.dump_csv())?;
    }
    run.emit("report.json", &to_json(&report)?, true)?;
    run.finish()
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "net".into())
}

pub fn bounds(nets: &[PathBuf], variants: usize, seed: u64, tree_subgraph: bool, out_dir: Option<PathBuf>) -> Result<()> {
    let mut run = Run::new("bounds", out_dir)?;
    run.seed("variants", seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut examples = Vec::new();
    for path in nets {
        let mut net = load_net(&mut run, path)?;
        if tree_subgraph {
            net = net.edge_subgraph(&decompose(&net, &TreeSelector::Default)?.tree_edges)?;
        }
        let stem = file_stem(path);
        for k in 1..=variants {
            let mut draw = |len: usize| (0..len).map(|_| 10f64.powf(rng.gen_range(-1.0..=1.0))).collect::<Vec<f64>>();
            let (eps, w) = (draw(net.n()), draw(net.m()));
            examples.push((format!("{stem}-v{k}"), net.with_parameters(&eps, &w)?));
        }
        examples.insert(examples.len() - variants, (stem, net));
    }

    let mut csv = String::from("example_id,norm,lb,ub,L1,L2,U\n");
    for (id, net) in &examples {
        let dec = decompose(net, &TreeSelector::Default)?;
        let norm = analysis::hinf_exact_scaled(net, &dec)?.norm;
        let b = bounds_weighted(analysis::hinf_pi(net, &dec)?.norm, &net.weights());
        let tb = if net.is_tree() { Some(bounds_tree(net, &dec)?) } else { None };
        writeln!(
            csv,
            "{id},{},{},{},{},{},{}",
            fmt_float(norm),
            fmt_float(b.lb),
            fmt_float(b.ub),
            opt(tb.map(|t| t.l1)),
            opt(tb.map(|t| t.l2)),
            opt(tb.map(|t| t.u)),
        )?;
    }
    run.emit("bounds.csv", &csv, true)?;
    run.finish()
}

pub fn optimize(common: &Common, tree: &TreeArg, design: &Path, solver: Option<&str>) -> Result<()> {
    let mut run = Run::new("optimize", common.out_dir.clone())?;
    let net = load_net(&mut run, &common.net)?;
    let dec = decomposition(&net, tree)?;
    let problem = DesignProblem::from_json(&run.read(design)?)?;
    let backend = select_backend(solver)?;
    let sol = solve(&net, &dec, &problem, backend.as_ref())?;
    run.detail("box_violation", sol.box_violation(&problem))?;
    run.detail("tree_edges", &dec.tree_edges)?;
    run.emit("solution.json", &to_json(&sol)?, true)?;
    run.finish()
}

pub fn pareto(common: &Common, tree: &TreeArg, design: &Path, grid: &ParetoGrid, solver: Option<&str>) -> Result<()> {
    let mut run = Run::new("pareto", common.out_dir.clone())?;
    let net = load_net(&mut run, &common.net)?;
    let dec = decomposition(&net, tree)?;
    let template = DesignProblem::from_json(&run.read(design)?)?;
    // fail fast on a malformed template rather than once per grid point
    build_program(&net, &dec, &template.with_weights(grid.alpha.lo, grid.beta.lo, Some(grid.gamma.hi)))?;
    let backend = select_backend(solver)?;
    let records = pareto_sweep(&net, &dec, &template, grid, backend.as_ref());
    let mut csv = Vec::new();
    write_front_csv(&records, &mut csv)?;
    let failed = records.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        log::warn!("{failed} of {} grid points failed", records.len());
    }
    run.detail("grid", grid)?;
    run.detail("failed_points", failed)?;
    if let Some(k) = detect_knee(&records, grid.shape()) {
        let r = &records[k];
        run.detail("knee", [r.alpha, r.beta, r.gamma])?;
    }
    run.emit("front.csv", &String::from_utf8(csv)?, true)?;
    run.finish()
}

struct SimInputs {
    net: NetworkSpec,
    dec: SpanningTreeDecomposition,
    formation: FormationSpec,
    disturbance: DisturbanceSpec,
    config: SimConfig,
}

fn sim_inputs(run: &mut Run, args: &SimArgs) -> Result<SimInputs> {
    let net = load_net(run, &args.common.net)?;
    let dec = decomposition(&net, &args.tree)?;
    let formation = match (&args.formation, &args.fast) {
        (Some(p), _) => parse(&run.read(p)?, "formation")?,
        (None, Some(fast)) => FormationSpec::squares(net.n(), fast)?,
        (None, None) => FormationSpec::zero(net.n()),
    };
    formation.validate(net.n())?;
    let disturbance = match (&args.disturbance, args.disturbance_window) {
        (Some(p), _) => parse(&run.read(p)?, "disturbance")?,
        (None, Some((t_s, t_f))) => {
            run.seed("disturbance", args.seed);
            DisturbanceSpec::sample(net.n(), net.m(), t_s, t_f, &mut disturbance_rng(args.seed))?
        }
        (None, None) => DisturbanceSpec::zero(net.n(), net.m()),
    };
    check_disturbance(&disturbance, &net)?;
    let initial = match &args.initial {
        Some(p) => InitialPositions::Given(parse(&run.read(p)?, "initial positions")?),
        None => {
            run.seed("initial", args.seed);
            InitialPositions::Uniform { seed: args.seed, half_width: args.half_width }
        }
    };
    let config = SimConfig { step: args.step, horizon: args.horizon, record_stride: args.stride, initial };
    Ok(SimInputs { net, dec, formation, disturbance, config })
}

fn node_csv(rec: &TrajectoryRecord) -> String {
    let n = rec.n_nodes;
    let mut out = String::from("t,axis,node_id,value\n");
    for (k, &t) in rec.times.iter().enumerate() {
        let t = fmt_float(t);
        for axis in Axis::BOTH {
            for i in 0..n {
                let _ = writeln!(out, "{t},{},{},{}", axis.label(), i + 1, fmt_float(rec.node_value(k, axis, i)));
            }
        }
    }
    out
}

fn edge_csv(series: &EdgeSeries) -> String {
    let mut out = String::from("t,axis,edge_id,value\n");
    for (k, &t) in series.times.iter().enumerate() {
        let t = fmt_float(t);
        for axis in Axis::BOTH {
            for l in 0..series.n_edges {
                let _ = writeln!(out, "{t},{},{},{}", axis.label(), l + 1, fmt_float(series.value(k, axis, l)));
            }
        }
    }
    out
}

pub fn simulate(args: &SimArgs, schedule: Option<PathBuf>) -> Result<()> {
    let mut run = Run::new("simulate", args.common.out_dir.clone())?;
    let inp = sim_inputs(&mut run, args)?;
    let schedule: Vec<ScheduleEntry> = match schedule {
        Some(p) => parse(&run.read(&p)?, "schedule")?,
        None => Vec::new(),
    };
    check_schedule(&schedule, &inp.net)?;
    let rec = edgehinf_core::sim::simulate(&inp.net, &inp.formation, &inp.disturbance, &schedule, &inp.config)?;
    let edges = edge_states(&rec, &inp.dec, &inp.formation)?;

    let (t_s, t_f) = (inp.disturbance.t_s, inp.disturbance.t_f.min(args.horizon));
    if t_f > t_s {
        run.detail("disturbance_window", [t_s, t_f])?;
        run.detail("rejection_metric", rejection_metric(&edges, (t_s, t_f))?)?;
    }
    run.detail("terminal_error", terminal_error(&edges))?;
    run.detail("switch_times", &rec.switch_times)?;
    run.detail("schedule", &schedule)?;
    run.emit("nodes.csv", &node_csv(&rec), false)?;
    run.emit("edges.csv", &edge_csv(&edges), false)?;
    run.finish()
}

pub fn compare(
    args: &SimArgs,
    switch: Option<PathBuf>,
    design: Option<PathBuf>,
    switch_time: f64,
    window: (f64, f64),
    solver: Option<&str>,
) -> Result<()> {
    let mut run = Run::new("compare", args.common.out_dir.clone())?;
    let inp = sim_inputs(&mut run, args)?;
    let switch = match (switch, design) {
        (Some(p), _) => parse::<ScheduleEntry>(&run.read(&p)?, "switch")?,
        (None, Some(p)) => {
            let problem = DesignProblem::from_json(&run.read(&p)?)?;
            let sol = solve(&inp.net, &inp.dec, &problem, select_backend(solver)?.as_ref())?;
            ScheduleEntry { time: switch_time, weights: sol.w_star, epsilons: sol.eps_star }
        }
        (None, None) => bail!("either --switch or --design is required"),
    };
    check_schedule(std::slice::from_ref(&switch), &inp.net)?;
    let (outcome, base, switched) =
        compare_schedules(&inp.net, &inp.dec, &inp.formation, &inp.disturbance, &switch, window, &inp.config)?;

    #[derive(Serialize)]
    struct Comparison<'a> {
        window: [f64; 2],
        metric_baseline: f64,
        metric_switched: f64,
        terminal_baseline: f64,
        terminal_switched: f64,
        switched_better_metric: bool,
        switched_better_terminal: bool,
        switch: &'a ScheduleEntry,
    }
    let (better_metric, better_terminal) = outcome.switched_wins();
    let doc = Comparison {
        window: [window.0, window.1],
        metric_baseline: outcome.metric_baseline,
        metric_switched: outcome.metric_switched,
        terminal_baseline: outcome.terminal_baseline,
        terminal_switched: outcome.terminal_switched,
        switched_better_metric: better_metric,
        switched_better_terminal: better_terminal,
        switch: &switch,
    };
    run.emit("compare.json", &to_json(&doc)?, true)?;
    if run.has_out_dir() {
        run.emit("baseline_edges.csv", &edge_csv(&edge_states(&base, &inp.dec, &inp.formation)?), false)?;
        run.emit("switched_edges.csv", &edge_csv(&edge_states(&switched, &inp.dec, &inp.formation)?), false)?;
    }
    run.finish()
}
