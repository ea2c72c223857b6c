use super::{SweConfig, SweState, Topography, Trajectory};
use crate::{Error, Result};

/// Water heights below this are treated as dry and rejected.
pub const H_FLOOR: f64 = 1e-8;

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Interface values of a minmod-limited piecewise-linear reconstruction on a
/// periodic grid: `left[j]` is the value at `x_{j-1/2}` seen from cell `j`,
/// `right[j]` the value at `x_{j+1/2}`.
fn reconstruct(v: &[f64], left: &mut [f64], right: &mut [f64]) {
    let n = v.len();
    for j in 0..n {
        let prev = v[(j + n - 1) % n];
        let next = v[(j + 1) % n];
        let half = 0.5 * minmod(next - v[j], v[j] - prev);
        left[j] = v[j] - half;
        right[j] = v[j] + half;
    }
}

/// Scratch space for one right-hand-side evaluation.
#[derive(Debug, Clone)]
struct Workspace {
    eta: Vec<f64>,
    h_l: Vec<f64>,
    h_r: Vec<f64>,
    eta_l: Vec<f64>,
    eta_r: Vec<f64>,
    q_l: Vec<f64>,
    q_r: Vec<f64>,
    flux_h: Vec<f64>,
    // momentum flux at x_{i+1/2} as seen by cell i (left) and cell i+1 (right),
    // each carrying its own hydrostatic correction
    flux_q_left: Vec<f64>,
    flux_q_right: Vec<f64>,
    dh: Vec<f64>,
    dq: Vec<f64>,
    h1: Vec<f64>,
    q1: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        let v = || vec![0.0; n];
        Self {
            eta: v(),
            h_l: v(),
            h_r: v(),
            eta_l: v(),
            eta_r: v(),
            q_l: v(),
            q_r: v(),
            flux_h: v(),
            flux_q_left: v(),
            flux_q_right: v(),
            dh: v(),
            dq: v(),
            h1: v(),
            q1: v(),
        }
    }
}

/// Finite-volume integrator for one grid and topography.
///
/// Holds its scratch buffers, so a `Solver` is cheap to step but must not be
/// shared between threads; clone it instead.
#[derive(Debug, Clone)]
pub struct Solver {
    cfg: SweConfig,
    topo: Topography,
    ws: Workspace,
}

impl Solver {
    pub fn new(cfg: SweConfig, topo: Topography) -> Result<Self> {
        cfg.validate()?;
        if topo.len() != cfg.cells() {
            return Err(Error::Dimension {
                what: "topography cells",
                expected: cfg.cells(),
                got: topo.len(),
            });
        }
        let ws = Workspace::new(topo.len());
        Ok(Self { cfg, topo, ws })
    }

    /// Solver over the bump topography described by `cfg`.
    pub fn with_bump(cfg: SweConfig) -> Result<Self> {
        Self::new(cfg, Topography::bump(&cfg)?)
    }

    pub fn config(&self) -> &SweConfig {
        &self.cfg
    }

    pub fn topography(&self) -> &Topography {
        &self.topo
    }

    /// `max(|u| + sqrt(g h))·dt/dx` for the given state.
    pub fn cfl(&self, state: &SweState) -> f64 {
        let g = self.cfg.g;
        let speed = state
            .h
            .iter()
            .zip(&state.hu)
            .map(|(&h, &q)| (q / h).abs() + (g * h).sqrt())
            .fold(0.0, f64::max);
        speed * self.cfg.dt_fine / self.cfg.dx
    }

    /// Advance `state` by one fine step `dt_fine` (SSP-RK2).
    pub fn step(&mut self, state: &mut SweState) -> Result<()> {
        state.check_against(&self.topo)?;
        let cfl = self.cfl(state);
        if !(cfl < 1.0) {
            return Err(Error::Cfl {
                cfl,
                dt: self.cfg.dt_fine,
                dx: self.cfg.dx,
            });
        }
        let dt = self.cfg.dt_fine;
        let n = state.cells();

        self.rhs(&state.h, &state.hu);
        {
            let ws = &mut self.ws;
            for j in 0..n {
                ws.h1[j] = state.h[j] + dt * ws.dh[j];
                ws.q1[j] = state.hu[j] + dt * ws.dq[j];
            }
        }
        let (h1, q1) = (std::mem::take(&mut self.ws.h1), std::mem::take(&mut self.ws.q1));
        self.rhs(&h1, &q1);
        let ws = &mut self.ws;
        for j in 0..n {
            state.h[j] = 0.5 * state.h[j] + 0.5 * (h1[j] + dt * ws.dh[j]);
            state.hu[j] = 0.5 * state.hu[j] + 0.5 * (q1[j] + dt * ws.dq[j]);
        }
        ws.h1 = h1;
        ws.q1 = q1;
        state.t += dt;

        if let Some((cell, &h)) = state
            .h
            .iter()
            .enumerate()
            .find(|(_, &h)| !(h >= H_FLOOR && h.is_finite()))
        {
            return Err(Error::DryCell { cell, h });
        }
        Ok(())
    }

    /// Advance `steps` fine steps.
    pub fn advance(&mut self, state: &mut SweState, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.step(state)?;
        }
        Ok(())
    }

    /// Integrate to `state.t + t_end`, recording `[h ⧺ hu]` every `sample_dt`,
    /// including both endpoints.
    pub fn integrate(&mut self, mut state: SweState, t_end: f64, sample_dt: f64) -> Result<Trajectory> {
        let per_sample = self.cfg.steps_per_sample(sample_dt)?;
        let samples = t_end / sample_dt;
        let count = samples.round();
        if t_end < 0.0 || (samples - count).abs() > 1e-9 * count.max(1.0) {
            return Err(Error::Config(format!(
                "t_end {t_end} is not a non-negative multiple of {sample_dt}"
            )));
        }
        let count = count as usize;
        let t0 = state.t;
        let mut traj = Trajectory::with_capacity(state.cells(), sample_dt, count + 1);
        traj.push(t0, &state.flatten());
        for i in 1..=count {
            self.advance(&mut state, per_sample)?;
            traj.push(t0 + i as f64 * sample_dt, &state.flatten());
        }
        Ok(traj)
    }

    /// Semi-discrete right-hand side; result lands in `ws.dh`, `ws.dq`.
    fn rhs(&mut self, h: &[f64], q: &[f64]) {
        let n = h.len();
        let g = self.cfg.g;
        let dx = self.cfg.dx;
        let nu_dx2 = self.cfg.nu / (dx * dx);
        let z = &self.topo.z;
        let ws = &mut self.ws;

        for j in 0..n {
            ws.eta[j] = h[j] + z[j];
        }
        reconstruct(h, &mut ws.h_l, &mut ws.h_r);
        reconstruct(&ws.eta, &mut ws.eta_l, &mut ws.eta_r);
        reconstruct(q, &mut ws.q_l, &mut ws.q_r);

        for i in 0..n {
            let ip = (i + 1) % n;
            let (hm, hp) = (ws.h_r[i], ws.h_l[ip]);
            let (eta_m, eta_p) = (ws.eta_r[i], ws.eta_l[ip]);
            let z_star = (eta_m - hm).max(eta_p - hp);
            let hm_s = (eta_m - z_star).max(0.0);
            let hp_s = (eta_p - z_star).max(0.0);
            let um = if hm > H_FLOOR { ws.q_r[i] / hm } else { 0.0 };
            let up = if hp > H_FLOOR { ws.q_l[ip] / hp } else { 0.0 };
            let qm_s = hm_s * um;
            let qp_s = hp_s * up;

            let cm = (g * hm_s).sqrt();
            let cp = (g * hp_s).sqrt();
            let a_plus = (um + cm).max(up + cp).max(0.0);
            let a_minus = (um - cm).min(up - cp).min(0.0);
            let spread = a_plus - a_minus;

            let (fh, fq) = if spread > 1e-14 {
                let fm_q = qm_s * um + 0.5 * g * hm_s * hm_s;
                let fp_q = qp_s * up + 0.5 * g * hp_s * hp_s;
                let ap_am = a_plus * a_minus;
                (
                    (a_plus * qm_s - a_minus * qp_s + ap_am * (hp_s - hm_s)) / spread,
                    (a_plus * fm_q - a_minus * fp_q + ap_am * (qp_s - qm_s)) / spread,
                )
            } else {
                (0.0, 0.0)
            };
            ws.flux_h[i] = fh;
            ws.flux_q_left[i] = fq + 0.5 * g * (hm * hm - hm_s * hm_s);
            ws.flux_q_right[i] = fq + 0.5 * g * (hp * hp - hp_s * hp_s);
        }

        for j in 0..n {
            let jm = (j + n - 1) % n;
            let jp = (j + 1) % n;
            // centered topography source between the two reconstructed faces
            let z_r = ws.eta_r[j] - ws.h_r[j];
            let z_l = ws.eta_l[j] - ws.h_l[j];
            let source = -0.5 * g * (ws.h_l[j] + ws.h_r[j]) * (z_r - z_l);
            ws.dh[j] = -(ws.flux_h[j] - ws.flux_h[jm]) / dx;
            ws.dq[j] = (source - (ws.flux_q_left[j] - ws.flux_q_right[jm])) / dx
                + nu_dx2 * (q[jp] - 2.0 * q[j] + q[jm]);
        }
    }
}

/// Free-standing single step on a fresh solver. Prefer keeping a [`Solver`]
/// around when stepping repeatedly.
pub fn step(state: &SweState, cfg: &SweConfig, topo: &Topography) -> Result<SweState> {
    let mut solver = Solver::new(*cfg, topo.clone())?;
    let mut next = state.clone();
    solver.step(&mut next)?;
    Ok(next)
}
