use std::path::{Path, PathBuf};

use evolve::bdspace::{boundary_triple_defect, decomposition_defect, isometry_defect, BoundaryStructure};
use evolve::control_system::{energy_ledger, extract_io, ControlSystem, EnergyLedger};
use evolve::evolution::{check_wellposed, coercivity, Scheme, TimeGrid, Trajectory};
use evolve::linalg::{c, CVec, I};
use evolve::spatial_complex::build_sbp_pair_1d;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{complex_fields, complex_header, num, CsvOut};
use crate::presets::{build, grid, input_signal, zero_damping, Model, Run};

fn out_path(cfg: &RunConfig, name: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    Ok(cfg.output_dir.join(name))
}

fn comment(cmd: &str, cfg: &RunConfig) -> String {
    format!("evoctl {cmd} preset={} n_cells={} seed={}", cfg.preset, cfg.n_cells, cfg.seed)
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub fn cmd_wellposed(cfg: &RunConfig, zero_damp: bool) -> CliResult<()> {
    let model = build(cfg)?;
    let evo = model.evolutionary()?;
    let m1 = if zero_damp { zero_damping(&model, &evo.m1)? } else { evo.m1.clone() };
    let mut out = CsvOut::create(&out_path(cfg, "wellposed.csv")?, &comment("wellposed", cfg), &strings(&["nu", "c_min"]))?;
    const N: usize = 41;
    for i in 0..N {
        let nu = cfg.nu * 10f64.powf(-3.0 * (N - 1 - i) as f64 / (N - 1) as f64);
        out.row(&[num(nu), num(coercivity(&evo.m0, &m1, nu).0)])?;
    }
    out.finish()?;
    let rep = check_wellposed(&evo.m0, &m1, cfg.nu)?;
    println!("c = {} at nu0 = {}", num(rep.c), num(rep.nu0));
    if !rep.ok {
        let w: Vec<String> = rep
            .witness
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm() > 1e-8)
            .map(|(i, z)| format!("{i}: {}{}{}i", num(z.re), if z.im < 0.0 { "" } else { "+" }, num(z.im)))
            .collect();
        eprintln!("witness (nonzero entries of {}): {}", rep.witness.len(), w.join(", "));
        return Err(CliError::Threshold(format!("not well-posed: nu M0 + Re M1 >= {} fails to be positive", num(rep.c))));
    }
    Ok(())
}

fn write_trajectory(path: &Path, cmt: &str, traj: &Trajectory) -> CliResult<()> {
    let n = traj.states[0].len();
    let mut header = strings(&["k", "t", "step"]);
    header.extend(complex_header("x", n));
    let mut out = CsvOut::create(path, cmt, &header)?;
    for (k, x) in traj.states.iter().enumerate() {
        let step = if k == 0 { String::new() } else { traj.step_schemes[k - 1].name().to_string() };
        let mut row = vec![k.to_string(), num(traj.grid.time(k)), step];
        row.extend(complex_fields(x));
        out.row(&row)?;
    }
    out.finish()
}

/// Per-step ledgers from the first step taken with the requested scheme,
/// followed by one row over the whole range.
fn ledgers(sys: &ControlSystem, traj: &Trajectory) -> CliResult<Vec<EnergyLedger>> {
    let g = traj.grid;
    let k0 = traj.first_regular_step();
    let mut rows = Vec::new();
    for k in k0..g.n_steps {
        rows.push(energy_ledger(sys, traj, g.time(k), g.time(k + 1))?);
    }
    if k0 < g.n_steps {
        rows.push(energy_ledger(sys, traj, g.time(k0), g.time(g.n_steps))?);
    }
    Ok(rows)
}

/// Writes `ledger.csv`; returns the largest absolute defect, or `None` if
/// the ledger does not apply to this system.
fn write_ledger(cfg: &RunConfig, cmd: &str, sys: Option<&ControlSystem>, traj: Option<&Trajectory>) -> CliResult<Option<f64>> {
    let header = strings(&["a", "b", "stored_drop", "dissipation", "supply", "defect"]);
    let computed = match (sys, traj) {
        (Some(s), Some(t)) => match ledgers(s, t) {
            Ok(rows) => Ok(rows),
            Err(CliError::Numerical(msg)) => Err(msg),
            Err(e) => return Err(e),
        },
        _ => Err("preset is not an abstract control system".to_string()),
    };
    let cmt = match &computed {
        Ok(_) => comment(cmd, cfg),
        Err(msg) => format!("{}; ledger not available: {msg}", comment(cmd, cfg)),
    };
    let mut out = CsvOut::create(&out_path(cfg, "ledger.csv")?, &cmt, &header)?;
    let mut worst: Option<f64> = None;
    if let Ok(rows) = &computed {
        for l in rows {
            out.row(&[num(l.a), num(l.b), num(l.stored_drop), num(l.dissipation), num(l.supply), num(l.defect)])?;
            worst = Some(worst.unwrap_or(0.0).max(l.defect.abs()));
        }
    } else if let Err(msg) = &computed {
        println!("ledger not available: {msg}");
    }
    out.finish()?;
    Ok(worst)
}

pub fn cmd_simulate(cfg: &RunConfig) -> CliResult<()> {
    let model = build(cfg)?;
    let u = input_signal(cfg, model.control_dim())?;
    let run = model.simulate(cfg, &*u)?;
    let cmt = comment("simulate", cfg);
    let mut failures = Vec::new();
    let check = |failures: &mut Vec<String>, what: &str, v: f64, tol: f64| {
        println!("{what} = {}", num(v));
        if !(v <= tol) {
            failures.push(format!("{what} {} exceeds {}", num(v), num(tol)));
        }
    };

    match &run {
        Run::Controlled { traj } | Run::Plain { traj } => write_trajectory(&out_path(cfg, "trajectory.csv")?, &cmt, traj)?,
        Run::Maxwell(lift) => write_trajectory(&out_path(cfg, "trajectory.csv")?, &cmt, &lift.direct)?,
    }

    let traj_for_ledger = match &run {
        Run::Controlled { traj } => Some(traj),
        _ => None,
    };
    if let Some(worst) = write_ledger(cfg, "simulate", model.control_system(), traj_for_ledger)? {
        check(&mut failures, "max ledger defect", worst, cfg.defect_tol);
    }

    // io.csv: t, u, y in system coordinates.
    let nu = model.control_dim();
    match (&run, model.control_system()) {
        (Run::Controlled { traj }, Some(sys)) => {
            let io = extract_io(sys, traj)?;
            let mut header = vec!["t".to_string()];
            header.extend(complex_header("u", sys.partition.nu));
            header.extend(complex_header("y", sys.partition.ny));
            let mut out = CsvOut::create(&out_path(cfg, "io.csv")?, &cmt, &header)?;
            for k in 0..io.t.len() {
                let mut row = vec![num(io.t[k])];
                row.extend(complex_fields(&io.u[k]));
                row.extend(complex_fields(&io.y[k]));
                out.row(&row)?;
            }
            out.finish()?;
            check(&mut failures, "io deviation", io.deviation, cfg.defect_tol);
        }
        (run, _) => {
            let traj = match run {
                Run::Maxwell(l) => &l.direct,
                Run::Plain { traj } | Run::Controlled { traj } => traj,
            };
            let mut header = vec!["t".to_string()];
            header.extend(complex_header("u", nu));
            let mut out = CsvOut::create(&out_path(cfg, "io.csv")?, &cmt, &header)?;
            for &t in &traj.sample_times {
                let mut row = vec![num(t)];
                row.extend(complex_fields(&u(t)));
                out.row(&row)?;
            }
            out.finish()?;
        }
    }

    match (&model, &run) {
        (Model::PortHamiltonian(m), Run::Controlled { traj }) => {
            let worst = traj.states.iter().map(|x| m.coupling_defect(x)).fold(0.0, f64::max);
            if cfg.closure == "algebraic" {
                check(&mut failures, "coupling defect", worst, cfg.defect_tol);
            } else {
                println!("coupling defect = {} (lumped closure, not checked)", num(worst));
            }
        }
        (Model::Wave(m), Run::Controlled { traj }) => {
            println!("io relation defect = {}", num(m.io_relation_defect(traj)));
        }
        (_, Run::Maxwell(lift)) => {
            println!("lifted vs direct = {}", num(lift.agreement(0)));
        }
        _ => {}
    }

    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Threshold(failures.join("; ")))
    }
}

/// Reads a trajectory written by `simulate` and re-samples its inputs from
/// the configuration.
fn read_trajectory(path: &Path, model: &Model, cfg: &RunConfig) -> CliResult<Trajectory> {
    let grid_t = TimeGrid::new(cfg.t_end, cfg.n_steps, cfg.nu)?;
    let scheme = Scheme::parse(&cfg.scheme)?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut states = Vec::new();
    let mut step_schemes = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| CliError::Config(format!("{}: row {k}: {what}", path.display()));
        if rec.len() < 3 || (rec.len() - 3) % 2 != 0 {
            return Err(bad("malformed row"));
        }
        let t: f64 = rec[1].parse().map_err(|_| bad("bad time"))?;
        if (t - grid_t.time(k)).abs() > 1e-9 * grid_t.tau {
            return Err(bad("time does not match the configured grid"));
        }
        if k > 0 {
            step_schemes.push(Scheme::parse(&rec[2])?);
        }
        let vals: Vec<f64> = (3..rec.len()).map(|i| rec[i].parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad("bad number"))?;
        states.push(CVec::from_fn(vals.len() / 2, |i, _| c(vals[2 * i]) + I * vals[2 * i + 1]));
    }
    if states.len() != grid_t.n_steps + 1 {
        return Err(CliError::Config(format!(
            "{}: {} rows, expected {}",
            path.display(),
            states.len(),
            grid_t.n_steps + 1
        )));
    }
    let u = input_signal(cfg, model.control_dim())?;
    let mut inputs = Vec::new();
    let mut sample_times = Vec::new();
    for (k, s) in step_schemes.iter().enumerate() {
        let t = match s {
            Scheme::BackwardEuler => grid_t.time(k + 1),
            Scheme::ImplicitMidpoint => grid_t.time(k) + 0.5 * grid_t.tau,
        };
        sample_times.push(t);
        inputs.push(model.source(&u(t)));
    }
    Ok(Trajectory { grid: grid_t, states, inputs, sample_times, step_schemes, scheme })
}

pub fn cmd_energy(cfg: &RunConfig, trajectory: Option<&Path>) -> CliResult<()> {
    let model = build(cfg)?;
    let sys = model
        .control_system()
        .ok_or_else(|| CliError::Config(format!("preset '{}' has no energy ledger", cfg.preset)))?;
    let default = cfg.output_dir.join("trajectory.csv");
    let path = trajectory.unwrap_or(&default);
    let traj = read_trajectory(path, &model, cfg)?;
    if traj.states.iter().any(|x| x.len() != sys.dim()) {
        return Err(CliError::Config("trajectory dimension does not match the preset".into()));
    }
    match write_ledger(cfg, "energy", Some(sys), Some(&traj))? {
        Some(worst) => {
            println!("max ledger defect = {}", num(worst));
            if worst <= cfg.defect_tol {
                Ok(())
            } else {
                Err(CliError::Threshold(format!("ledger defect {} exceeds {}", num(worst), num(cfg.defect_tol))))
            }
        }
        None => Err(CliError::Numerical("energy ledger not available for this system".into())),
    }
}

pub fn cmd_bdspace(cfg: &RunConfig) -> CliResult<()> {
    let pair = build_sbp_pair_1d(grid(cfg)?)?;
    let bs = BoundaryStructure::new(&pair)?;
    let cmt = comment("bdspace", cfg);
    let mut out = CsvOut::create(&out_path(cfg, "bd_basis.csv")?, &cmt, &strings(&["side", "basis", "index", "x", "re", "im"]))?;
    for (side, bd, xs) in [("G", &bs.bd_g, pair.grid.nodes()), ("D", &bs.bd_d, pair.grid.midpoints())] {
        for j in 0..bd.dim() {
            for (i, x) in xs.iter().enumerate() {
                let z = bd.basis[(i, j)];
                out.row(&[side.to_string(), j.to_string(), i.to_string(), num(*x), num(z.re), num(z.im)])?;
            }
        }
    }
    out.finish()?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rvec = |n: usize| CVec::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0)) + I * rng.gen_range(-1.0..1.0));
    let (nn, nc) = (pair.n_nodes(), pair.n_cells());
    let mut decomposition: f64 = 0.0;
    let mut green: f64 = 0.0;
    for _ in 0..100 {
        decomposition = decomposition.max(decomposition_defect(&bs.bd_g, &pair, &rvec(nn)));
        decomposition = decomposition.max(decomposition_defect(&bs.bd_d, &pair, &rvec(nc)));
        let (x, y, x2, y2) = (rvec(nn), rvec(nc), rvec(nn), rvec(nc));
        green = green.max(boundary_triple_defect(&bs, &x, &y, &x2, &y2)?);
    }
    let unitarity = bs.unitarity_defect();
    let isometry = isometry_defect(&bs.bd_g, &bs.bd_d, &pair);
    let mut out = CsvOut::create(
        &out_path(cfg, "bd_defects.csv")?,
        &cmt,
        &strings(&["n_cells", "dim", "unitarity", "isometry", "decomposition", "green"]),
    )?;
    out.row(&[nc.to_string(), bs.dim().to_string(), num(unitarity), num(isometry), num(decomposition), num(green)])?;
    out.finish()?;
    println!("dim BD = {}", bs.dim());
    let worst = unitarity.max(isometry).max(decomposition).max(green);
    println!("max defect = {}", num(worst));
    if worst <= cfg.bd_tol {
        Ok(())
    } else {
        Err(CliError::Threshold(format!("boundary data defect {} exceeds {}", num(worst), num(cfg.bd_tol))))
    }
}
