use evolve::control_system::ControlSystem;
use evolve::evolution::{solve, EvolutionarySystem, Scheme, TimeGrid, Trajectory};
use evolve::linalg::{c, from_real_vec, CMat, CVec};
use evolve::models::{
    build_mixed_type_wave, build_port_hamiltonian, build_weiss_tucsnak_wave, maxwell_lift_solve,
    maxwell_lifted_system, BoundaryClosure, MaxwellLift, MixedPartition, PortHamiltonianModel, PortHamiltonianSpec,
    Region, WaveModel, WaveSpec,
};
use evolve::spatial_complex::{build_sbp_pair_1d, GradDivPair, Grid1D};

use crate::config::{InitialSpec, InputSpec, RunConfig};
use crate::error::{CliError, CliResult};

pub enum Model {
    Wave(Box<WaveModel>),
    PortHamiltonian(Box<PortHamiltonianModel>),
    Maxwell { pair: GradDivPair, eps: Vec<f64>, mu: Vec<f64> },
    /// `M0 = 1`, `M1 = 0`, `A = 0` on the node space; a diagnostic preset.
    Identity(EvolutionarySystem),
}

pub fn grid(cfg: &RunConfig) -> CliResult<Grid1D> {
    Ok(Grid1D::new(cfg.a, cfg.b, cfg.n_cells)?)
}

pub fn build(cfg: &RunConfig) -> CliResult<Model> {
    let g = grid(cfg)?;
    Ok(match cfg.preset.as_str() {
        "wave-wt" => Model::Wave(Box::new(build_weiss_tucsnak_wave(&WaveSpec::new(g))?)),
        "wave-mixed" => {
            let [s1, s2] = cfg.mixed_split;
            let x1 = cfg.a + s1 * (cfg.b - cfg.a);
            let x2 = cfg.a + s2 * (cfg.b - cfg.a);
            let part = MixedPartition::three_region(&g, x1, x2, [Region::Elliptic, Region::Parabolic, Region::Hyperbolic]);
            Model::Wave(Box::new(build_mixed_type_wave(&WaveSpec::new(g), &part)?))
        }
        "port-hamiltonian" => {
            let mut spec = PortHamiltonianSpec::string(g);
            if cfg.closure == "lumped" {
                spec.closure = BoundaryClosure::Lumped;
            }
            Model::PortHamiltonian(Box::new(build_port_hamiltonian(&spec)?))
        }
        "maxwell-lift-1d" => {
            let pair = build_sbp_pair_1d(g)?;
            Model::Maxwell { eps: vec![1.0; pair.n_nodes()], mu: vec![1.0; pair.n_cells()], pair }
        }
        "identity" => {
            let n = g.n_nodes();
            let id = CMat::identity(n, n);
            Model::Identity(EvolutionarySystem::new(id.clone(), CMat::zeros(n, n), CMat::zeros(n, n), id)?)
        }
        other => return Err(CliError::Config(format!("unknown preset '{other}'"))),
    })
}

/// Result of `simulate`.
pub enum Run {
    Controlled { traj: Trajectory },
    Maxwell(Box<MaxwellLift>),
    Plain { traj: Trajectory },
}

impl Model {
    pub fn control_system(&self) -> Option<&ControlSystem> {
        match self {
            Model::Wave(m) => Some(&m.sys),
            Model::PortHamiltonian(m) => Some(&m.sys),
            _ => None,
        }
    }

    /// System used for the well-posedness check (the lifted one for Maxwell).
    pub fn evolutionary(&self) -> CliResult<EvolutionarySystem> {
        Ok(match self {
            Model::Wave(m) => m.sys.evo.clone(),
            Model::PortHamiltonian(m) => m.sys.evo.clone(),
            Model::Maxwell { pair, eps, mu } => maxwell_lifted_system(pair, eps, mu)?,
            Model::Identity(s) => s.clone(),
        })
    }

    /// Dimension of the user-facing control signal.
    pub fn control_dim(&self) -> usize {
        match self {
            Model::Wave(m) => m.bs.dim(),
            Model::PortHamiltonian(m) => m.sys.partition.nu,
            Model::Maxwell { .. } => 2,
            Model::Identity(s) => s.n_sources(),
        }
    }

    /// Maps a user control value to the evolutionary source.
    pub fn source(&self, u: &CVec) -> CVec {
        match self {
            Model::Wave(m) => m.sys.source(&m.control(u)),
            Model::PortHamiltonian(m) => m.sys.source(u),
            Model::Maxwell { .. } | Model::Identity(_) => u.clone(),
        }
    }

    pub fn initial_state(&self, cfg: &RunConfig) -> CVec {
        let g = Grid1D::new(cfg.a, cfg.b, cfg.n_cells).expect("validated by build");
        let amp = match cfg.initial {
            InitialSpec::Zero => 0.0,
            InitialSpec::Bump { amplitude } => amplitude,
        };
        let bump = from_real_vec(
            &g.nodes()
                .iter()
                .map(|x| amp * (std::f64::consts::PI * (x - cfg.a) / (cfg.b - cfg.a)).sin().powi(2))
                .collect::<Vec<_>>(),
        );
        match self {
            Model::Wave(m) => m.initial_state(&bump, &CVec::zeros(g.n_cells)),
            Model::PortHamiltonian(m) => m.state(&bump, &CVec::zeros(g.n_cells)),
            Model::Maxwell { .. } => bump,
            Model::Identity(_) => bump,
        }
    }

    pub fn simulate(&self, cfg: &RunConfig, u: &dyn Fn(f64) -> CVec) -> CliResult<Run> {
        let tg = TimeGrid::new(cfg.t_end, cfg.n_steps, cfg.nu)?;
        let scheme = Scheme::parse(&cfg.scheme)?;
        let x0 = self.initial_state(cfg);
        Ok(match self {
            Model::Wave(_) | Model::PortHamiltonian(_) => {
                let sys = self.control_system().expect("controlled preset");
                let f = |t: f64| self.source(&u(t));
                Run::Controlled { traj: solve(&sys.evo, &x0, &f, tg, scheme)? }
            }
            Model::Maxwell { pair, eps, mu } => {
                let bs = evolve::bdspace::BoundaryStructure::new(pair)?;
                let h0 = bs.bd_d.embed(&u(0.0));
                Run::Maxwell(Box::new(maxwell_lift_solve(pair, eps, mu, u, &x0, &h0, tg, scheme)?))
            }
            Model::Identity(s) => {
                let n = s.n_sources();
                let f = |t: f64| {
                    let v = u(t);
                    let mut out = CVec::zeros(n);
                    out.rows_mut(0, v.len().min(n)).copy_from(&v.rows(0, v.len().min(n)));
                    out
                };
                Run::Plain { traj: solve(s, &x0, &f, tg, scheme)? }
            }
        })
    }
}

/// Control signal from the configuration, with `dim` components.
pub fn input_signal(cfg: &RunConfig, dim: usize) -> CliResult<Box<dyn Fn(f64) -> CVec>> {
    match &cfg.input {
        InputSpec::Zero => Ok(Box::new(move |_| CVec::zeros(dim))),
        InputSpec::Sinusoid { freq, amplitude, component } => {
            if *component >= dim {
                return Err(CliError::Config(format!("input component {component} out of range (control has {dim})")));
            }
            let (f, a, k) = (*freq, *amplitude, *component);
            Ok(Box::new(move |t| {
                let mut v = CVec::zeros(dim);
                v[k] = c(a * (2.0 * std::f64::consts::PI * f * t).sin());
                v
            }))
        }
        InputSpec::Table { path } => {
            let table = read_table(path, dim)?;
            Ok(Box::new(move |t| interpolate(&table, t)))
        }
    }
}

fn read_table(path: &std::path::Path, dim: usize) -> CliResult<Vec<(f64, Vec<f64>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<(f64, Vec<f64>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if vals.len() != dim + 1 {
            return Err(CliError::Config(format!("{}: expected {} columns, got {}", path.display(), dim + 1, vals.len())));
        }
        rows.push((vals[0], vals[1..].to_vec()));
    }
    if rows.is_empty() || rows.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(CliError::Config(format!("{}: need nonempty, strictly increasing times", path.display())));
    }
    Ok(rows)
}

fn interpolate(table: &[(f64, Vec<f64>)], t: f64) -> CVec {
    let pick = |v: &[f64]| from_real_vec(v);
    if t <= table[0].0 {
        return pick(&table[0].1);
    }
    let last = table.len() - 1;
    if t >= table[last].0 {
        return pick(&table[last].1);
    }
    let i = table.partition_point(|(s, _)| *s <= t) - 1;
    let (t0, v0) = &table[i];
    let (t1, v1) = &table[i + 1];
    let s = (t - t0) / (t1 - t0);
    pick(&v0.iter().zip(v1).map(|(a, b)| a + s * (b - a)).collect::<Vec<_>>())
}

/// Zeroes the rows and columns of `M1` on the observation block.
pub fn zero_damping(model: &Model, m1: &CMat) -> CliResult<CMat> {
    let sys = model
        .control_system()
        .ok_or_else(|| CliError::Config("--zero-damping needs a preset with an observation block".into()))?;
    let mut out = m1.clone();
    for i in sys.partition.y() {
        out.row_mut(i).fill(c(0.0));
        out.column_mut(i).fill(c(0.0));
    }
    Ok(out)
}
