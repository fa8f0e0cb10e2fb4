//! Time evolution `|psi(t)> = exp(-iHt) |psi(0)>` for non-Hermitian `H`.
//!
//! Snapshots keep the raw, unnormalized amplitudes; observables normalize
//! on demand. Two stepped integrators share one driver:
//!
//! * [`Method::Taylor`]: fixed step, each step applies the Taylor series of
//!   `exp(-i(H - s)h)` truncated once the remaining tail is below f64
//!   resolution. The step is capped at `1.5 / ||H - s||_inf`.
//! * [`Method::Rk4`]: classic fourth-order Runge-Kutta with step `dt`.
//!
//! Both integrate `H - s` with `s` the midpoint of the diagonal and restore
//! the global phase `exp(-i s t)` at every snapshot. With the step check on,
//! every run is repeated at half the step and the normalized snapshots must
//! agree to [`STEP_CHECK_TOLERANCE`].

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockBasis, Occupation};
use crate::hamiltonian::SparseHamiltonian;
use crate::oracle::DenseOracle;

pub const STEP_CHECK_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_RK4_STEP: f64 = 1e-3;
pub const DEFAULT_TAYLOR_STEP: f64 = 0.05;
const TAYLOR_REACH: f64 = 1.5;
const TAYLOR_MAX_TERMS: usize = 80;
const NORM_FLOOR: f64 = 1e-280;
const NORM_CEILING: f64 = 1e280;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Complex amplitudes with their squared norm.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    norm_sq: f64,
}

impl StateVector {
    /// Fails with [`Error::DegenerateState`] when the norm is zero or not finite.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !(norm_sq > 0.0 && norm_sq.is_finite()) {
            return Err(Error::DegenerateState(norm_sq));
        }
        Ok(StateVector {
            amplitudes,
            norm_sq,
        })
    }

    pub fn basis_vector(dimension: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; dimension];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        StateVector {
            amplitudes,
            norm_sq: 1.0,
        }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sq - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Result<StateVector> {
        normalized(self)
    }

    /// Every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Result<StateVector> {
        StateVector::from_amplitudes(self.amplitudes.iter().map(|a| a * factor).collect())
    }
}

/// `psi / sqrt(<psi|psi>)`.
pub fn normalized(psi: &StateVector) -> Result<StateVector> {
    if !(psi.norm_sq > 0.0 && psi.norm_sq.is_finite()) {
        return Err(Error::DegenerateState(psi.norm_sq));
    }
    let inv = 1.0 / psi.norm_sq.sqrt();
    StateVector::from_amplitudes(psi.amplitudes.iter().map(|a| a * inv).collect())
}

/// Localized initial states. `c = L / 2` (integer division).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    /// One boson on each of `c` and `c + 1`.
    Neighboring,
    /// Both bosons on `c`.
    SameSite,
    /// One boson on `c`.
    SingleCenter,
}

impl InitialState {
    pub fn center_site(sites: usize) -> usize {
        sites / 2
    }

    /// Mirror point of the initial density: the start site, or the bond
    /// midpoint for [`InitialState::Neighboring`].
    pub fn center(&self, sites: usize) -> f64 {
        let c = Self::center_site(sites) as f64;
        match self {
            InitialState::Neighboring => c + 0.5,
            InitialState::SameSite | InitialState::SingleCenter => c,
        }
    }

    pub fn required_particles(&self) -> usize {
        match self {
            InitialState::SingleCenter => 1,
            InitialState::Neighboring | InitialState::SameSite => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitialState::Neighboring => "neighboring",
            InitialState::SameSite => "same-site",
            InitialState::SingleCenter => "single-center",
        }
    }
}

pub fn initial_state(basis: &FockBasis, kind: InitialState) -> Result<StateVector> {
    if basis.particles() != kind.required_particles() {
        return Err(Error::Parameter(format!(
            "initial state `{}` needs N={}, basis has N={}",
            kind.name(),
            kind.required_particles(),
            basis.particles()
        )));
    }
    let c = InitialState::center_site(basis.sites());
    let occupation = match kind {
        InitialState::Neighboring => Occupation::pair(c, c + 1),
        InitialState::SameSite => Occupation::pair(c, c),
        InitialState::SingleCenter => Occupation::single(c),
    };
    let index = basis
        .index_of(&occupation)
        .ok_or_else(|| Error::Parameter(format!("{occupation} not in basis")))?;
    Ok(StateVector::basis_vector(basis.dimension(), index))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Taylor,
    Rk4,
    Dense,
}

fn default_true() -> bool {
    true
}

/// Uniform snapshot grid `t_k = k t_max / (n_snapshots - 1)` plus integrator settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSchedule {
    pub t_max: f64,
    pub n_snapshots: usize,
    /// Integrator step; `None` picks the method default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default)]
    pub method: Method,
    /// Repeat at half the step and require agreement.
    #[serde(default = "default_true")]
    pub verify_step: bool,
}

impl EvolutionSchedule {
    pub fn new(t_max: f64, n_snapshots: usize) -> Self {
        EvolutionSchedule {
            t_max,
            n_snapshots,
            dt: None,
            method: Method::Taylor,
            verify_step: true,
        }
    }

    /// Grid with spacing as close as possible to `spacing`.
    pub fn with_spacing(t_max: f64, spacing: f64) -> Self {
        let intervals = (t_max / spacing).round().max(1.0) as usize;
        Self::new(t_max, intervals + 1)
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn with_step_check(mut self, on: bool) -> Self {
        self.verify_step = on;
        self
    }

    pub fn step(&self) -> f64 {
        self.dt.unwrap_or(match self.method {
            Method::Rk4 => DEFAULT_RK4_STEP,
            Method::Taylor | Method::Dense => DEFAULT_TAYLOR_STEP,
        })
    }

    pub fn spacing(&self) -> f64 {
        self.t_max / (self.n_snapshots - 1) as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let last = (self.n_snapshots - 1) as f64;
        (0..self.n_snapshots)
            .map(|k| self.t_max * k as f64 / last)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::Parameter(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        if self.n_snapshots < 2 {
            return Err(Error::Parameter(format!(
                "need at least 2 snapshots, got {}",
                self.n_snapshots
            )));
        }
        let dt = self.step();
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub state: StateVector,
}

/// Evolve `psi0` and return one snapshot per grid time, `t = 0` first.
pub fn evolve(
    h: &SparseHamiltonian,
    psi0: &StateVector,
    schedule: &EvolutionSchedule,
) -> Result<Vec<Snapshot>> {
    schedule.validate()?;
    if psi0.dimension() != h.dimension() {
        return Err(Error::Shape {
            expected: h.dimension(),
            found: psi0.dimension(),
        });
    }
    match schedule.method {
        Method::Dense => {
            let oracle = DenseOracle::new(h)?;
            schedule
                .times()
                .into_iter()
                .map(|t| {
                    let state = if t == 0.0 {
                        psi0.clone()
                    } else {
                        checked(oracle.expm_apply(psi0, t)?, t)?
                    };
                    Ok(Snapshot { t, state })
                })
                .collect()
        }
        Method::Taylor | Method::Rk4 => {
            let coarse = stepped(h, psi0, schedule, 1)?;
            if schedule.verify_step {
                let fine = stepped(h, psi0, schedule, 2)?;
                compare_runs(&coarse, &fine)?;
            }
            Ok(coarse)
        }
    }
}

fn checked(state: StateVector, t: f64) -> Result<StateVector> {
    if state.norm_sq < NORM_FLOOR || state.norm_sq > NORM_CEILING {
        return Err(Error::Evolution {
            time: t,
            reason: format!(
                "squared norm {:e} outside representable range",
                state.norm_sq
            ),
        });
    }
    Ok(state)
}

fn compare_runs(coarse: &[Snapshot], fine: &[Snapshot]) -> Result<()> {
    for (a, b) in coarse.iter().zip(fine) {
        let a_n = a.state.normalized()?;
        let b_n = b.state.normalized()?;
        let change = a_n
            .amplitudes()
            .iter()
            .zip(b_n.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        if change >= STEP_CHECK_TOLERANCE {
            return Err(Error::Convergence { time: a.t, change });
        }
    }
    Ok(())
}

/// `out = -i (H - shift) v`
fn generator(h: &SparseHamiltonian, shift: f64, v: &[Complex64], out: &mut [Complex64]) {
    h.apply_into(v, out);
    for (o, x) in out.iter_mut().zip(v) {
        let y = *o - x * shift;
        *o = Complex64::new(y.im, -y.re);
    }
}

fn inf_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm()).fold(0.0, f64::max)
}

struct Stepper<'a> {
    h: &'a SparseHamiltonian,
    shift: f64,
    norm: f64,
    method: Method,
    bufs: [Vec<Complex64>; 4],
}

impl Stepper<'_> {
    fn step(&mut self, phi: &mut [Complex64], dt: f64) -> std::result::Result<(), String> {
        match self.method {
            Method::Rk4 => {
                self.rk4(phi, dt);
                Ok(())
            }
            _ => self.taylor(phi, dt),
        }
    }

    fn taylor(&mut self, phi: &mut [Complex64], dt: f64) -> std::result::Result<(), String> {
        let [term, next, ..] = &mut self.bufs;
        term.copy_from_slice(phi);
        let reach = dt * self.norm;
        for k in 1..=TAYLOR_MAX_TERMS {
            generator(self.h, self.shift, term, next);
            let scale = dt / k as f64;
            for (t, n) in term.iter_mut().zip(next.iter()) {
                *t = n * scale;
            }
            for (p, t) in phi.iter_mut().zip(term.iter()) {
                *p += t;
            }
            // past k + 1 > 2 reach the tail is at most twice the last term
            if (k + 1) as f64 > 2.0 * reach && inf_norm(term) <= 1e-17 * inf_norm(phi) {
                return Ok(());
            }
        }
        Err(format!(
            "Taylor series did not converge in {TAYLOR_MAX_TERMS} terms"
        ))
    }

    fn rk4(&mut self, phi: &mut [Complex64], dt: f64) {
        let [k1, k2, k3, tmp] = &mut self.bufs;
        generator(self.h, self.shift, phi, k1);
        for ((t, p), k) in tmp.iter_mut().zip(phi.iter()).zip(k1.iter()) {
            *t = p + k * (0.5 * dt);
        }
        generator(self.h, self.shift, tmp, k2);
        for ((t, p), k) in tmp.iter_mut().zip(phi.iter()).zip(k2.iter()) {
            *t = p + k * (0.5 * dt);
        }
        generator(self.h, self.shift, tmp, k3);
        for ((t, p), k) in tmp.iter_mut().zip(phi.iter()).zip(k3.iter()) {
            *t = p + k * dt;
        }
        // k4 reuses the k3 slot after the partial sum has been taken
        for ((p, a), (b, c)) in phi.iter_mut().zip(k1.iter()).zip(k2.iter().zip(k3.iter())) {
            *p += (a + b * 2.0 + c * 2.0) * (dt / 6.0);
        }
        generator(self.h, self.shift, tmp, k3);
        for (p, d) in phi.iter_mut().zip(k3.iter()) {
            *p += d * (dt / 6.0);
        }
    }
}

fn stepped(
    h: &SparseHamiltonian,
    psi0: &StateVector,
    schedule: &EvolutionSchedule,
    refine: usize,
) -> Result<Vec<Snapshot>> {
    let shift = h.diagonal_center();
    let norm = h.shifted_inf_norm(shift);
    let mut step = schedule.step();
    if schedule.method == Method::Taylor && norm > 0.0 {
        step = step.min(TAYLOR_REACH / norm);
    }
    step /= refine as f64;

    let n = h.dimension();
    let mut stepper = Stepper {
        h,
        shift,
        norm,
        method: schedule.method,
        bufs: std::array::from_fn(|_| vec![ZERO; n]),
    };
    let times = schedule.times();
    let mut phi = psi0.amplitudes().to_vec();
    let mut out = Vec::with_capacity(times.len());
    out.push(Snapshot {
        t: 0.0,
        state: psi0.clone(),
    });
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let substeps = ((t1 - t0) / step * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h_sub = (t1 - t0) / substeps as f64;
        for _ in 0..substeps {
            stepper
                .step(&mut phi, h_sub)
                .map_err(|reason| Error::Evolution { time: t0, reason })?;
        }
        let phase = Complex64::new(0.0, -shift * t1).exp();
        let amplitudes = phi.iter().map(|a| a * phase).collect();
        let state = StateVector::from_amplitudes(amplitudes).map_err(|e| Error::Evolution {
            time: t1,
            reason: e.to_string(),
        })?;
        out.push(Snapshot {
            t: t1,
            state: checked(state, t1)?,
        });
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct SnapshotRecord {
    t: f64,
    norm_sq: f64,
    re: Vec<f64>,
    im: Vec<f64>,
}

/// Snapshot dump: JSON Lines, one object per snapshot with keys
/// `t`, `norm_sq`, `re` and `im` (amplitude real and imaginary parts in
/// basis order).
pub fn write_snapshots<W: Write>(mut w: W, snapshots: &[Snapshot]) -> std::io::Result<()> {
    for s in snapshots {
        let record = SnapshotRecord {
            t: s.t,
            norm_sq: s.state.norm_sq(),
            re: s.state.amplitudes().iter().map(|a| a.re).collect(),
            im: s.state.amplitudes().iter().map(|a| a.im).collect(),
        };
        serde_json::to_writer(&mut w, &record)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_snapshots<R: BufRead>(r: R) -> Result<Vec<Snapshot>> {
    let mut out = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::Format(format!("line {}: {e}", k + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SnapshotRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("line {}: {e}", k + 1)))?;
        if rec.re.len() != rec.im.len() {
            return Err(Error::Format(format!(
                "line {}: re/im length mismatch",
                k + 1
            )));
        }
        let amplitudes = rec
            .re
            .iter()
            .zip(&rec.im)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        let state = StateVector::from_amplitudes(amplitudes)?;
        if (state.norm_sq() - rec.norm_sq).abs() > 1e-12 * rec.norm_sq {
            return Err(Error::Format(format!(
                "line {}: norm_sq {} does not match amplitudes ({})",
                k + 1,
                rec.norm_sq,
                state.norm_sq()
            )));
        }
        out.push(Snapshot { t: rec.t, state });
    }
    Ok(out)
}
