//! Causal time stepping of `(d/dt M0 + M1 + A) x = J f` with `x(0) = x0`.

use crate::error::{Error, Result};
use crate::linalg::{c, herm_part, hermitian_defect, inner, lambda_min_herm, max_abs, max_abs_vec, skew_defect, CMat, CVec, Factored};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t_end: f64,
    pub n_steps: usize,
    pub tau: f64,
    pub nu: f64,
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize, nu: f64) -> Result<Self> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::Spec(format!("t_end must be positive, got {t_end}")));
        }
        if n_steps == 0 {
            return Err(Error::Spec("n_steps must be at least 1".into()));
        }
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::Spec(format!("nu must be positive, got {nu}")));
        }
        Ok(TimeGrid { t_end, n_steps, tau: t_end / n_steps as f64, nu })
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.tau
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.time(k)).collect()
    }

    /// Index of the grid point closest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        ((t / self.tau).round().max(0.0) as usize).min(self.n_steps)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    BackwardEuler,
    ImplicitMidpoint,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::BackwardEuler => "backward_euler",
            Scheme::ImplicitMidpoint => "implicit_midpoint",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "backward_euler" | "be" => Ok(Scheme::BackwardEuler),
            "implicit_midpoint" | "midpoint" => Ok(Scheme::ImplicitMidpoint),
            other => Err(Error::Spec(format!("unknown scheme '{other}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EvolutionarySystem {
    pub m0: CMat,
    pub m1: CMat,
    pub a: CMat,
    pub j: CMat,
}

impl EvolutionarySystem {
    pub fn new(m0: CMat, m1: CMat, a: CMat, j: CMat) -> Result<Self> {
        let n = m0.nrows();
        for (name, m) in [("M0", &m0), ("M1", &m1), ("A", &a)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Shape(format!("{name} is {}x{}, expected {n}x{n}", m.nrows(), m.ncols())));
            }
        }
        if j.nrows() != n {
            return Err(Error::Shape(format!("J has {} rows, expected {n}", j.nrows())));
        }
        let scale = max_abs(&m0).max(1.0);
        let hd = hermitian_defect(&m0);
        if hd > 1e-12 * scale {
            return Err(Error::Hypothesis(format!("M0 is not selfadjoint (defect {hd:.3e})")));
        }
        let sd = skew_defect(&a);
        if sd > 1e-12 * max_abs(&a).max(1.0) {
            return Err(Error::Hypothesis(format!("A is not skew-adjoint (defect {sd:.3e})")));
        }
        Ok(EvolutionarySystem { m0, m1, a, j })
    }

    pub fn dim(&self) -> usize {
        self.m0.nrows()
    }

    pub fn n_sources(&self) -> usize {
        self.j.ncols()
    }

    fn m0_singular(&self) -> bool {
        let sv = self.m0.clone().singular_values();
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        smax == 0.0 || smin <= 1e-12 * smax
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: TimeGrid,
    /// `x^0, ..., x^n`.
    pub states: Vec<CVec>,
    /// Source sample used in step `k` (from `x^k` to `x^{k+1}`).
    pub inputs: Vec<CVec>,
    pub sample_times: Vec<f64>,
    /// Scheme actually used in each step.
    pub step_schemes: Vec<Scheme>,
    pub scheme: Scheme,
}

impl Trajectory {
    /// State at which the equation of step `k` is collocated.
    pub fn collocation_state(&self, k: usize) -> CVec {
        match self.step_schemes[k] {
            Scheme::BackwardEuler => self.states[k + 1].clone(),
            Scheme::ImplicitMidpoint => (&self.states[k] + &self.states[k + 1]) * c(0.5),
        }
    }

    /// First step index taken with the requested scheme.
    pub fn first_regular_step(&self) -> usize {
        self.step_schemes.iter().position(|s| *s == self.scheme).unwrap_or(self.step_schemes.len())
    }
}

#[derive(Clone, Debug)]
pub struct WellPosednessReport {
    pub ok: bool,
    pub c: f64,
    pub nu0: f64,
    pub witness: CVec,
}

/// `lambda_min(nu M0 + Re M1)` and the corresponding eigenvector.
pub fn coercivity(m0: &CMat, m1: &CMat, nu: f64) -> (f64, CVec) {
    lambda_min_herm(&(m0 * c(nu) + herm_part(m1)))
}

pub fn check_wellposed(m0: &CMat, m1: &CMat, nu_max: f64) -> Result<WellPosednessReport> {
    let n = m0.nrows();
    if m0.ncols() != n || m1.nrows() != n || m1.ncols() != n {
        return Err(Error::Shape("M0 and M1 must be square of equal size".into()));
    }
    if !(nu_max.is_finite() && nu_max > 0.0) {
        return Err(Error::Spec(format!("nu_max must be positive, got {nu_max}")));
    }
    let hd = hermitian_defect(m0);
    if hd > 1e-12 * max_abs(m0).max(1.0) {
        return Err(Error::Hypothesis(format!("M0 is not selfadjoint (defect {hd:.3e})")));
    }
    const SWEEP: usize = 64;
    let nus: Vec<f64> = (0..SWEEP)
        .map(|i| nu_max * 10f64.powf(-6.0 * (SWEEP - 1 - i) as f64 / (SWEEP - 1) as f64))
        .collect();
    let cs: Vec<f64> = nus.iter().map(|&nu| coercivity(m0, m1, nu).0).collect();
    let mut best = 0;
    for i in 1..SWEEP {
        if cs[i] > cs[best] {
            best = i;
        }
    }
    let c_best = cs[best];
    let tol = 1e-13 * c_best.abs().max(1.0);
    // Smallest nu reaching the best value; the superlevel sets of a concave
    // function are intervals.
    let mut nu0 = nus[best];
    if best > 0 && cs[best - 1] < c_best - tol {
        let (mut lo, mut hi) = (nus[best - 1], nus[best]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if coercivity(m0, m1, mid).0 >= c_best - tol {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        nu0 = hi;
    } else if best == 0 {
        nu0 = nus[0];
    }
    let (c_at, vec) = coercivity(m0, m1, nu0);
    let ok = c_at > 0.0;
    Ok(WellPosednessReport { ok, c: c_at, nu0, witness: vec })
}

/// Integrates the system. `f(t)` must return a vector of length `J.ncols()`.
pub fn solve(
    sys: &EvolutionarySystem,
    x0: &CVec,
    f: &dyn Fn(f64) -> CVec,
    grid: TimeGrid,
    scheme: Scheme,
) -> Result<Trajectory> {
    let n = sys.dim();
    if x0.len() != n {
        return Err(Error::Shape(format!("x0 has length {}, expected {n}", x0.len())));
    }
    let tau = grid.tau;
    let m0t = &sys.m0 * c(1.0 / tau);
    let ma = &sys.m1 + &sys.a;
    let be_lhs = &m0t + &ma;
    let mid_lhs = &m0t + &ma * c(0.5);
    let mid_rhs = &m0t - &ma * c(0.5);

    let startup = scheme == Scheme::ImplicitMidpoint && sys.m0_singular();
    let be = if scheme == Scheme::BackwardEuler || startup { Some(Factored::new(&be_lhs)?) } else { None };
    let mid = if scheme == Scheme::ImplicitMidpoint { Some(Factored::new(&mid_lhs)?) } else { None };

    let sample = |t: f64| -> Result<CVec> {
        let v = f(t);
        if v.len() != sys.n_sources() {
            return Err(Error::Shape(format!("input sample has length {}, expected {}", v.len(), sys.n_sources())));
        }
        Ok(v)
    };

    let mut states = Vec::with_capacity(grid.n_steps + 1);
    let mut inputs = Vec::with_capacity(grid.n_steps);
    let mut sample_times = Vec::with_capacity(grid.n_steps);
    let mut step_schemes = Vec::with_capacity(grid.n_steps);
    states.push(x0.clone());
    for k in 0..grid.n_steps {
        let x = &states[k];
        let use_be = scheme == Scheme::BackwardEuler || (startup && k == 0);
        let (t_s, next) = if use_be {
            let t_s = grid.time(k + 1);
            let u = sample(t_s)?;
            let rhs = &m0t * x + &sys.j * &u;
            inputs.push(u);
            (t_s, be.as_ref().expect("factored").solve(&rhs))
        } else {
            let t_s = grid.time(k) + 0.5 * tau;
            let u = sample(t_s)?;
            let rhs = &mid_rhs * x + &sys.j * &u;
            inputs.push(u);
            (t_s, mid.as_ref().expect("factored").solve(&rhs))
        };
        sample_times.push(t_s);
        step_schemes.push(if use_be { Scheme::BackwardEuler } else { Scheme::ImplicitMidpoint });
        states.push(next);
    }
    Ok(Trajectory { grid, states, inputs, sample_times, step_schemes, scheme })
}

/// Runs both inputs and returns `max_{t_k <= a} |x1^k - x2^k|`. Fails if the
/// inputs differ at a sample time `<= a`.
pub fn causality_defect(
    sys: &EvolutionarySystem,
    x0: &CVec,
    f1: &dyn Fn(f64) -> CVec,
    f2: &dyn Fn(f64) -> CVec,
    a: f64,
    grid: TimeGrid,
    scheme: Scheme,
) -> Result<f64> {
    let t1 = solve(sys, x0, f1, grid, scheme)?;
    let t2 = solve(sys, x0, f2, grid, scheme)?;
    let eps = 1e-12 * grid.tau;
    for k in 0..grid.n_steps {
        let t = t1.sample_times[k];
        if t <= a + eps && t1.inputs[k] != t2.inputs[k] {
            return Err(Error::InputsDiffer { t });
        }
    }
    let mut worst: f64 = 0.0;
    for k in 0..=grid.n_steps {
        if grid.time(k) <= a + eps {
            worst = worst.max(max_abs_vec(&(&t1.states[k] - &t2.states[k])));
        }
    }
    Ok(worst)
}

/// `sqrt(int_0^T e^{-2 nu t} <x|W x> dt)` by the trapezoid rule on the grid.
pub fn weighted_norm(traj: &Trajectory, w: &CMat) -> f64 {
    let g = &traj.grid;
    let vals: Vec<f64> = traj
        .states
        .iter()
        .enumerate()
        .map(|(k, x)| (-2.0 * g.nu * g.time(k)).exp() * inner(w, x, x).re)
        .collect();
    let n = vals.len() - 1;
    let mut s = 0.5 * (vals[0] + vals[n]);
    for v in &vals[1..n] {
        s += v;
    }
    (s * g.tau).max(0.0).sqrt()
}

/// Energy terms of one step, all multiplied by the step size where relevant.
#[derive(Clone, Copy, Debug)]
pub struct StepEnergy {
    /// `1/2 <x^{k+1}|M0 x^{k+1}> - 1/2 <x^k|M0 x^k>`.
    pub stored_change: f64,
    /// `tau <xc|Re M1 xc>` at the collocation state.
    pub dissipation: f64,
    /// `tau Re <xc|J f>`.
    pub supply: f64,
    /// `1/2 <dx|M0 dx>` for backward Euler steps, zero for midpoint steps.
    pub numerical_dissipation: f64,
}

impl StepEnergy {
    /// Zero up to roundoff for both schemes.
    pub fn residual(&self) -> f64 {
        self.stored_change + self.dissipation - self.supply + self.numerical_dissipation
    }
}

pub fn step_energies(sys: &EvolutionarySystem, traj: &Trajectory) -> Vec<StepEnergy> {
    let re_m1 = herm_part(&sys.m1);
    let tau = traj.grid.tau;
    (0..traj.grid.n_steps)
        .map(|k| {
            let (x, xn) = (&traj.states[k], &traj.states[k + 1]);
            let xc = traj.collocation_state(k);
            let dx = xn - x;
            let stored_change = 0.5 * (inner(&sys.m0, xn, xn).re - inner(&sys.m0, x, x).re);
            let numerical_dissipation = match traj.step_schemes[k] {
                Scheme::BackwardEuler => 0.5 * inner(&sys.m0, &dx, &dx).re,
                Scheme::ImplicitMidpoint => 0.0,
            };
            StepEnergy {
                stored_change,
                dissipation: tau * inner(&re_m1, &xc, &xc).re,
                supply: tau * xc.dotc(&(&sys.j * &traj.inputs[k])).re,
                numerical_dissipation,
            }
        })
        .collect()
}
