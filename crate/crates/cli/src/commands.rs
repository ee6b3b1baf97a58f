//! Subcommand execution.

use std::fs;

use serde::Serialize;
use serde_json::{json, Value};
use zrp_core::bdchain::reductions::{gamma1_by_convolution, grand_site_chain};
use zrp_core::bdchain::{
    check_gap_conditions, default_a0_grid, metropolis_chain, miclo_check, modified_measure, single_site_chain,
    two_site_chain, BirthDeathChain,
};
use zrp_core::dynamics::{
    colour_blind_check, coupled_order_sim, default_sample_dt, estimate_decay, simulate, CouplingConfig, DecayConfig,
    Dynamics, Initial, SimConfig,
};
use zrp_core::llt::limits::poisson_sup_error;
use zrp_core::llt::{condition_e_scan, edgeworth_scan, llt_normal, llt_poisson};
use zrp_core::model::{check_stochastic_domination, verify_conditions, CanonicalEnsemble, RateFamily};
use zrp_core::spectral::optimize::estimate_constant;
use zrp_core::spectral::sweep::fit_line;
use zrp_core::spectral::{
    build_generator, scaling_sweep, spectral_gap, spectral_report, Budget, ConstantKind, GeneratorMatrix, SweepConfig,
    SweepKind, Topology,
};
use zrp_core::Cube;

use crate::args::{BudgetArgs, ChainArg, Command, DynamicsArg, Format, LltMode, ModelArgs, OutputArgs, SweepKindArg, TopologyArg};
use crate::report::{emit_report, Report, Table};
use crate::CliError;

type Res<T> = Result<T, CliError>;

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn cube_of(m: &ModelArgs) -> Res<Cube> {
    if m.dim == 0 {
        return Err(cfg_err("dim must be ≥ 1"));
    }
    if m.side < 2 {
        return Err(cfg_err("side must be ≥ 2"));
    }
    Ok(Cube::new(m.dim, m.side)?)
}

fn rates_of(m: &ModelArgs, cube: &Cube) -> Res<RateFamily> {
    match &m.rates_file {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Io {
                path: path.clone(),
                message: e.to_string(),
            })?;
            let rf = RateFamily::parse_spec(&text)?;
            if rf.num_sites() != cube.num_sites() {
                return Err(cfg_err(format!(
                    "rate file declares {} sites, lattice has {}",
                    rf.num_sites(),
                    cube.num_sites()
                )));
            }
            Ok(rf)
        }
        None => Ok(RateFamily::preset(&m.rates, cube)?),
    }
}

fn topology(t: TopologyArg) -> Topology {
    match t {
        TopologyArg::Nn => Topology::NearestNeighbour,
        TopologyArg::Complete => Topology::CompleteGraph,
    }
}

fn budget(b: &BudgetArgs) -> Res<Budget> {
    if b.restarts == 0 || b.iterations == 0 {
        return Err(cfg_err("restarts and iterations must be positive"));
    }
    Ok(Budget {
        restarts: b.restarts,
        iterations: b.iterations,
    })
}

/// `a..b` (inclusive) or `a,b,c`.
pub fn parse_list(s: &str) -> Res<Vec<usize>> {
    let bad = || cfg_err(format!("cannot parse list '{s}'"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn generator(m: &ModelArgs, r: usize, t: TopologyArg) -> Res<(Cube, RateFamily, GeneratorMatrix)> {
    let cube = cube_of(m)?;
    let rf = rates_of(m, &cube)?;
    let ens = CanonicalEnsemble::new(&rf, &cube, r)?;
    if ens.len() < 2 {
        return Err(cfg_err("state space has a single configuration; need particles ≥ 1"));
    }
    let gen = build_generator(&ens, &rf, topology(t))?;
    Ok((cube, rf, gen))
}

struct Run {
    command: &'static str,
    config: Value,
    output: OutputArgs,
}

impl Run {
    fn new(command: &'static str, config: impl Serialize, output: &OutputArgs) -> Self {
        let config = serde_json::to_value(config).expect("serializable config");
        eprintln!("zrp {command}: seed {} config {}", output.seed, config);
        Run {
            command,
            config,
            output: output.clone(),
        }
    }

    fn finish(self, result: Value, table: Option<Table>, plot: Option<(usize, usize)>) -> Res<()> {
        let report = Report {
            command: self.command.into(),
            config: self.config,
            seed: self.output.seed,
            result,
            table,
            plot,
        };
        let written = emit_report(&report, self.output.format, self.output.out.as_deref())?;
        for p in written {
            eprintln!("wrote {}", p.display());
        }
        Ok(())
    }
}

fn chain_json(chain: &BirthDeathChain) -> Res<(Value, Table)> {
    let gap = chain.gap()?;
    let mut t = Table::new(&["k", "stationary"]);
    for (k, p) in chain.stationary.iter().enumerate() {
        t.push(vec![k.to_string(), num(*p)]);
    }
    Ok((
        json!({
            "r": chain.r(),
            "birth": chain.birth,
            "death": chain.death,
            "stationary": chain.stationary,
            "gap": gap.gap,
            "c_sg": gap.c_sg,
            "conditions": check_gap_conditions(chain),
        }),
        t,
    ))
}

fn default_extra(rf: &RateFamily, n: usize, r: usize) -> Res<(f64, usize)> {
    let rep = verify_conditions(rf, 8, &[(n, r.max(1))])?;
    Ok((rep.b, (rep.b * n as f64).ceil() as usize))
}

pub fn execute(cmd: Command) -> Res<()> {
    match cmd {
        Command::Gap {
            model,
            particles,
            topology: t,
            output,
        } => {
            let run = Run::new("gap", json!({"model": model, "particles": particles, "topology": t}), &output);
            let (_, _, gen) = generator(&model, particles, t)?;
            let g = spectral_gap(&gen)?;
            let mut table = Table::new(&["states", "gap", "c_sg", "residual"]);
            table.push(vec![gen.len().to_string(), num(g.gap), num(g.c_sg), num(g.residual)]);
            run.finish(
                json!({"states": gen.len(), "gap": g.gap, "c_sg": g.c_sg, "residual": g.residual, "method": g.method}),
                Some(table),
                None,
            )
        }
        Command::Logsob {
            model,
            particles,
            topology: t,
            budget: b,
            output,
        } => {
            let run = Run::new("logsob", json!({"model": model, "particles": particles, "topology": t, "budget": b}), &output);
            let (_, _, gen) = generator(&model, particles, t)?;
            let rep = spectral_report(&gen, budget(&b)?, output.seed)?;
            let mut table = Table::new(&["states", "c_sg", "c_ed_hat", "c_ls_hat"]);
            table.push(vec![gen.len().to_string(), num(rep.c_sg), num(rep.c_ed_hat), num(rep.c_ls_hat)]);
            run.finish(
                json!({
                    "states": gen.len(),
                    "c_ls_hat": rep.c_ls_hat,
                    "c_ed_hat": rep.c_ed_hat,
                    "c_sg": rep.c_sg,
                    "gap": rep.gap,
                    "ls": rep.ls,
                    "ed": rep.ed,
                }),
                Some(table),
                None,
            )
        }
        Command::Ed {
            model,
            particles,
            topology: t,
            budget: b,
            output,
        } => {
            let run = Run::new("ed", json!({"model": model, "particles": particles, "topology": t, "budget": b}), &output);
            let (_, _, gen) = generator(&model, particles, t)?;
            let est = estimate_constant(&gen, ConstantKind::EntropyDissipation, budget(&b)?, output.seed)?;
            let mut table = Table::new(&["states", "c_ed_hat"]);
            table.push(vec![gen.len().to_string(), num(est.value)]);
            run.finish(
                json!({"states": gen.len(), "c_ed_hat": est.value, "diagnostics": est.diagnostics}),
                Some(table),
                None,
            )
        }
        Command::Sweep {
            model,
            kind,
            sides,
            particles,
            topology: t,
            fit,
            budget: b,
            output,
        } => {
            let run = Run::new(
                "sweep",
                json!({"model": model, "kind": kind, "sides": sides, "particles": particles, "topology": t, "fit": fit, "budget": b}),
                &output,
            );
            if model.rates_file.is_some() {
                return Err(cfg_err("sweep needs a rate preset, not a rate file"));
            }
            let sides = parse_list(&sides)?;
            if sides.iter().any(|&s| s < 2) {
                return Err(cfg_err("side must be ≥ 2"));
            }
            let fixed: Option<usize> = match particles.trim() {
                "N" => None,
                p => Some(p.parse().map_err(|_| cfg_err(format!("particles must be N or an integer, got '{p}'")))?),
            };
            let cfg = SweepConfig {
                dim: model.dim,
                sides,
                kind: match kind {
                    SweepKindArg::Gap => SweepKind::Gap,
                    SweepKindArg::Logsob => SweepKind::LogSobolev,
                },
                topology: topology(t),
                budget: budget(&b)?,
                seed: output.seed,
            };
            let preset = model.rates.clone();
            let res = scaling_sweep(|c: &Cube| RateFamily::preset(&preset, c), |n| fixed.unwrap_or(n), &cfg)?;
            let mut table = Table::new(&["N", "r", "constant", "log_constant"]);
            for row in &res.rows {
                table.push(vec![row.n.to_string(), row.r.to_string(), num(row.constant), num(row.log_constant)]);
            }
            let mut result = json!({"rows": res.rows});
            if fit {
                result["slope"] = json!(res.slope);
                result["intercept"] = json!(res.intercept);
                if output.format == Format::Csv {
                    eprintln!("fitted slope {} intercept {}", res.slope, res.intercept);
                }
            }
            run.finish(result, Some(table), Some((0, 2)))
        }
        Command::Bd {
            model,
            chain,
            particles,
            site,
            phi,
            logsob,
            budget: b,
            output,
        } => {
            let run = Run::new(
                "bd",
                json!({"model": model, "chain": chain, "particles": particles, "site": site, "phi": phi, "logsob": logsob, "budget": b}),
                &output,
            );
            let cube = cube_of(&model)?;
            let rf = rates_of(&model, &cube)?;
            let ch = match chain {
                ChainArg::Metropolis => {
                    let (l1, l2) = cube.halves();
                    metropolis_chain(&gamma1_by_convolution(&rf, &l1, &l2, particles)?.gamma1)?
                }
                ChainArg::SingleSite => single_site_chain(&rf, &cube, particles, site)?,
                ChainArg::TwoSite => two_site_chain(&rf, particles)?,
                ChainArg::Grand => {
                    if !(phi > 0.0) {
                        return Err(cfg_err("phi must be positive"));
                    }
                    if site >= rf.num_sites() {
                        return Err(cfg_err(format!("site {site} out of range")));
                    }
                    grand_site_chain(&rf, site, phi)?
                }
            };
            let (mut result, table) = chain_json(&ch)?;
            if logsob {
                result["c_ls_hat"] = json!(ch.log_sobolev(budget(&b)?, output.seed)?.value);
            }
            run.finish(result, Some(table), Some((0, 1)))
        }
        Command::Miclo {
            model,
            particles,
            epsilon,
            output,
        } => {
            let run = Run::new("miclo", json!({"model": model, "particles": particles, "epsilon": epsilon}), &output);
            let cube = cube_of(&model)?;
            let rf = rates_of(&model, &cube)?;
            let (l1, l2) = cube.halves();
            let law = gamma1_by_convolution(&rf, &l1, &l2, particles)?;
            let grid = default_a0_grid();
            let mut result = json!({"gamma1": law.gamma1, "miclo": miclo_check(&law.gamma1, &grid)});
            if let Some(eps) = epsilon {
                let m = modified_measure(&rf, &law, eps)?;
                result["modified_miclo"] = json!(miclo_check(&m.gamma1_eps, &grid));
                result["modified"] = json!(m);
            }
            let mut table = Table::new(&["k", "gamma1"]);
            for (k, p) in law.gamma1.iter().enumerate() {
                table.push(vec![k.to_string(), num(*p)]);
            }
            run.finish(result, Some(table), Some((0, 1)))
        }
        Command::Llt {
            model,
            mode,
            particles,
            order,
            k,
            phi,
            sizes,
            output,
        } => {
            let run = Run::new(
                "llt",
                json!({"model": model, "mode": mode, "particles": particles, "order": order, "k": k, "phi": phi, "sizes": sizes}),
                &output,
            );
            if !(2..=4).contains(&order) {
                return Err(cfg_err("order must be 2, 3 or 4"));
            }
            match mode {
                LltMode::Normal => {
                    let cube = cube_of(&model)?;
                    let rf = rates_of(&model, &cube)?;
                    let c = llt_normal(&rf, particles, order)?;
                    let mut table = Table::new(&["N", "J", "abs_err", "scaled_err"]);
                    table.push(vec![cube.num_sites().to_string(), order.to_string(), num(c.abs_err), num(c.scaled_err)]);
                    run.finish(json!(c), Some(table), None)
                }
                LltMode::Poisson => {
                    let cube = cube_of(&model)?;
                    let rf = rates_of(&model, &cube)?;
                    let c = llt_poisson(&rf, particles, k.unwrap_or(particles))?;
                    let sup = poisson_sup_error(&rf, particles)?;
                    let n = cube.num_sites();
                    let mut table = Table::new(&["N", "sup_err", "n_times_sup_err"]);
                    table.push(vec![n.to_string(), num(sup), num(n as f64 * sup)]);
                    run.finish(json!({"point": c, "sup_err": sup, "n_times_sup_err": n as f64 * sup}), Some(table), None)
                }
                LltMode::Scan => {
                    if model.rates_file.is_some() {
                        return Err(cfg_err("llt scans need a rate preset, not a rate file"));
                    }
                    let mut table = Table::new(&["N", "J", "sup_err"]);
                    let (mut xs, mut ys) = (Vec::new(), Vec::new());
                    for side in parse_list(&sizes)? {
                        let cube = Cube::new(model.dim, side)?;
                        let rf = RateFamily::preset(&model.rates, &cube)?;
                        let s = edgeworth_scan(&rf, phi, order, 6.0)?;
                        let n = cube.num_sites();
                        table.push(vec![n.to_string(), order.to_string(), num(s.sup_err)]);
                        xs.push((n as f64).ln());
                        ys.push(s.sup_err.ln());
                    }
                    let (slope, _) = fit_line(&xs, &ys)?;
                    run.finish(json!({"slope": slope, "rows": table.rows}), Some(table), Some((0, 2)))
                }
            }
        }
        Command::Econd {
            model,
            sizes,
            r_max,
            output,
        } => {
            let run = Run::new("econd", json!({"model": model, "sizes": sizes, "r_max": r_max}), &output);
            let cube = cube_of(&model)?;
            let rf = rates_of(&model, &cube)?;
            let sizes = parse_list(&sizes)?;
            if sizes.contains(&0) {
                return Err(cfg_err("sizes must be positive"));
            }
            let scan = condition_e_scan(&rf, &sizes, r_max)?;
            let mut table = Table::new(&["size", "r", "value"]);
            for (s, r, v) in &scan.values {
                table.push(vec![s.to_string(), r.to_string(), num(*v)]);
            }
            run.finish(json!({"inf": scan.inf, "sup": scan.sup}), Some(table), None)
        }
        Command::Dominate {
            model,
            particles,
            extra,
            output,
        } => {
            let run = Run::new("dominate", json!({"model": model, "particles": particles, "extra": extra}), &output);
            let cube = cube_of(&model)?;
            let rf = rates_of(&model, &cube)?;
            let (b, default_m) = default_extra(&rf, cube.num_sites(), particles)?;
            let m = extra.unwrap_or(default_m);
            let lo = CanonicalEnsemble::new(&rf, &cube, particles)?;
            let hi = CanonicalEnsemble::new(&rf, &cube, particles + m)?;
            let d = check_stochastic_domination(&lo, &hi)?;
            let mut table = Table::new(&["r", "m", "dominated", "flow"]);
            table.push(vec![particles.to_string(), m.to_string(), d.dominated.to_string(), num(d.flow)]);
            run.finish(json!({"b": b, "m": m, "dominated": d.dominated, "flow": d.flow}), Some(table), None)
        }
        Command::Simulate {
            model,
            particles,
            colours,
            dynamics,
            time,
            dt,
            output,
        } => {
            let run = Run::new(
                "simulate",
                json!({"model": model, "particles": particles, "colours": colours, "dynamics": dynamics, "time": time, "dt": dt}),
                &output,
            );
            let cube = cube_of(&model)?;
            let rf = rates_of(&model, &cube)?;
            let (init, dyn_) = match dynamics {
                DynamicsArg::TwoColour => {
                    let c = colours.ok_or_else(|| cfg_err("two-colour dynamics needs --colours k1,k2"))?;
                    let v = parse_list(&c)?;
                    if v.len() != 2 {
                        return Err(cfg_err("--colours takes two counts"));
                    }
                    (Initial::Colours(v[0], v[1]), Dynamics::TwoColour)
                }
                DynamicsArg::Nn => (Initial::Particles(particles), Dynamics::NearestNeighbour),
                DynamicsArg::Complete => (Initial::Particles(particles), Dynamics::CompleteGraph),
            };
            let r = match &init {
                Initial::Colours(a, b) => a + b,
                _ => particles,
            };
            let topo = if dyn_ == Dynamics::CompleteGraph { Topology::CompleteGraph } else { Topology::NearestNeighbour };
            let sample_dt = match dt {
                Some(d) => d,
                None => default_sample_dt(&rf, &cube, r, topo).unwrap_or(time / 100.0),
            };
            let cfg = SimConfig {
                dynamics: dyn_,
                t_max: time,
                sample_dt,
                seed: output.seed,
                max_events: None,
            };
            let tr = simulate(&rf, &cube, &init, &cfg)?;
            let n = cube.num_sites();
            let mut header = vec!["t".to_string()];
            header.extend((0..n).map(|x| format!("eta_{x}")));
            let mut table = Table {
                header,
                rows: Vec::new(),
            };
            for (t, s) in tr.sample_times.iter().zip(&tr.samples) {
                let mut row = vec![num(*t)];
                row.extend(s.iter().map(|v| v.to_string()));
                table.push(row);
            }
            run.finish(
                json!({
                    "events": tr.jumps.len(),
                    "t_end": tr.t_end,
                    "sample_dt": sample_dt,
                    "initial": tr.initial,
                    "final": tr.samples.last(),
                    "time_averaged_occupation": tr.time_averaged_occupation(),
                }),
                Some(table),
                None,
            )
        }
        Command::Decay {
            model,
            particles,
            replicas,
            time,
            dt,
            observe_site,
            topology: t,
            output,
        } => {
            let run = Run::new(
                "decay",
                json!({"model": model, "particles": particles, "replicas": replicas, "time": time, "dt": dt, "observe_site": observe_site, "topology": t}),
                &output,
            );
            let cube = cube_of(&model)?;
            let rf = rates_of(&model, &cube)?;
            if observe_site >= cube.num_sites() {
                return Err(cfg_err(format!("site {observe_site} out of range")));
            }
            let sample_dt = match dt {
                Some(d) => d,
                None => default_sample_dt(&rf, &cube, particles, topology(t))?,
            };
            let cfg = DecayConfig {
                replicas,
                t_max: time,
                sample_dt,
                seed: output.seed,
                topology: topology(t),
            };
            let est = estimate_decay(&rf, &cube, particles, |e: &[u32]| e[observe_site] as f64, &cfg)?;
            let exact_gap = CanonicalEnsemble::new(&rf, &cube, particles)
                .ok()
                .and_then(|ens| build_generator(&ens, &rf, topology(t)).ok())
                .and_then(|g| spectral_gap(&g).ok())
                .map(|g| g.gap);
            let mut table = Table::new(&["t", "mean", "var", "n"]);
            for s in &est.series {
                table.push(vec![num(s.t), num(s.mean), num(s.var), s.n.to_string()]);
            }
            run.finish(
                json!({
                    "lambda_hat": est.lambda_hat,
                    "stderr": est.stderr,
                    "fit_points": est.fit_points,
                    "sample_dt": sample_dt,
                    "exact_two_gap": exact_gap.map(|g| 2.0 * g),
                }),
                Some(table),
                None,
            )
        }
        Command::ColourCheck { model, particles, output } => {
            let run = Run::new("colour-check", json!({"model": model, "particles": particles}), &output);
            let cube = cube_of(&model)?;
            let rf = rates_of(&model, &cube)?;
            let mut table = Table::new(&["k1", "k2", "colour_states", "max_abs_err"]);
            let mut worst = 0.0f64;
            for k1 in 0..=particles {
                let c = colour_blind_check(&rf, &cube, k1, particles - k1)?;
                worst = worst.max(c.max_abs_err);
                table.push(vec![k1.to_string(), (particles - k1).to_string(), c.colour_states.to_string(), num(c.max_abs_err)]);
            }
            run.finish(json!({"max_abs_err": worst}), Some(table), None)
        }
        Command::Couple {
            model,
            particles,
            extra,
            events,
            seeds,
            output,
        } => {
            let run = Run::new(
                "couple",
                json!({"model": model, "particles": particles, "extra": extra, "events": events, "seeds": seeds}),
                &output,
            );
            let cube = cube_of(&model)?;
            let rf = rates_of(&model, &cube)?;
            let (b, default_m) = default_extra(&rf, cube.num_sites(), particles)?;
            let m = extra.unwrap_or(default_m);
            if seeds == 0 {
                return Err(cfg_err("seeds must be positive"));
            }
            let mut table = Table::new(&["seed", "order_preserved", "events", "violation_time"]);
            let mut preserved = 0;
            for s in output.seed..output.seed + seeds {
                let cfg = CouplingConfig {
                    m,
                    t_max: f64::INFINITY,
                    max_events: events,
                    seed: s,
                };
                let res = coupled_order_sim(&rf, particles, &cfg)?;
                preserved += res.order_preserved as u64;
                table.push(vec![
                    s.to_string(),
                    res.order_preserved.to_string(),
                    res.events.to_string(),
                    res.violation_time.map_or(String::new(), num),
                ]);
            }
            run.finish(
                json!({"b": b, "m": m, "runs": seeds, "order_preserved_runs": preserved, "all_preserved": preserved == seeds}),
                Some(table),
                None,
            )
        }
    }
}
