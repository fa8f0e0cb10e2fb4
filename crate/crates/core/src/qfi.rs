//! Quantum Fisher information of the evolved state with respect to the tilt `F`.
//!
//! `F_Q` is obtained from the fidelity of normalized states evolved at
//! neighbouring tilts,
//!
//! ```text
//! F_Q(t) = 4 [ (1 - |<psi_F|psi_{F+eps}>|) + (1 - |<psi_F|psi_{F-eps}>|) ] / eps^2
//! ```
//!
//! which agrees with `4 (<dpsi|dpsi> - |<psi|dpsi>|^2)` to `O(eps^2)` and
//! ignores any `F`-dependent global phase or norm.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{build_basis, LatticeParams};
use crate::hamiltonian::build_hamiltonian;
use crate::propagator::{evolve, EvolutionSchedule, Snapshot, StateVector};

/// Largest relative change of `F_Q` allowed when `eps` is halved.
pub const RICHARDSON_TOLERANCE: f64 = 0.01;
/// Lower edge of the default power-law fit window.
pub const DEFAULT_FIT_START: f64 = 0.5;
const MIN_FIT_SAMPLES: usize = 10;

pub fn default_epsilon(tilt: f64) -> f64 {
    tilt.abs().max(1.0) * 1e-3
}

/// `[0.5, T_B / 2]`; for `F = 0` the window is open-ended.
pub fn default_window(params: &LatticeParams) -> (f64, f64) {
    (DEFAULT_FIT_START, 0.5 * params.bloch_period())
}

/// Least-squares fit of `ln F_Q = alpha ln t + c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaFit {
    pub alpha: f64,
    pub log_prefactor: f64,
    /// Root-mean-square residual in `ln F_Q`.
    pub residual: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

#[derive(Clone, Debug)]
pub struct QfiSeries {
    pub times: Vec<f64>,
    pub fq: Vec<f64>,
    pub epsilon: f64,
    /// Largest relative change of `F_Q` over the fit window when `eps` is halved.
    pub half_step_change: f64,
    pub reliable: bool,
    pub alpha_fit: Option<AlphaFit>,
}

/// `1 - |<a|b>|` for normalized `a`, `b`, evaluated as `|a - e^{-i theta} b|^2 / 2`
/// with `theta = arg <a|b>` so that small deficits keep full relative precision.
pub fn fidelity_deficit(a: &StateVector, b: &StateVector) -> f64 {
    let overlap: num_complex::Complex64 = a
        .amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| x.conj() * y)
        .sum();
    let phase = if overlap.norm() > 0.0 {
        overlap.conj() / overlap.norm()
    } else {
        num_complex::Complex64::new(1.0, 0.0)
    };
    0.5 * a
        .amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y * phase).norm_sqr())
        .sum::<f64>()
}

/// Symmetric fidelity-form `F_Q` from snapshots at `F`, `F + eps` and `F - eps`.
pub fn fisher_from_snapshots(
    center: &[Snapshot],
    plus: &[Snapshot],
    minus: &[Snapshot],
    epsilon: f64,
) -> Result<Vec<f64>> {
    if plus.len() != center.len() || minus.len() != center.len() {
        return Err(Error::Shape {
            expected: center.len(),
            found: plus.len().min(minus.len()),
        });
    }
    center
        .iter()
        .zip(plus.iter().zip(minus))
        .map(|(c, (p, m))| {
            let c = c.state.normalized()?;
            let dp = fidelity_deficit(&c, &p.state.normalized()?);
            let dm = fidelity_deficit(&c, &m.state.normalized()?);
            Ok(4.0 * (dp + dm) / (epsilon * epsilon))
        })
        .collect()
}

/// `F_Q(t)` along the schedule for the tilt in `params`.
///
/// Five evolutions (tilts `F`, `F +- eps`, `F +- eps/2`) run concurrently; the
/// `eps/2` pair only feeds [`QfiSeries::half_step_change`].
pub fn qfi_series(
    params: &LatticeParams,
    psi0: &StateVector,
    schedule: &EvolutionSchedule,
    epsilon: Option<f64>,
) -> Result<QfiSeries> {
    params.validate()?;
    let epsilon = epsilon.unwrap_or_else(|| default_epsilon(params.tilt));
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::StepSize(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let basis = build_basis(params)?;
    if psi0.dimension() != basis.dimension() {
        return Err(Error::Shape {
            expected: basis.dimension(),
            found: psi0.dimension(),
        });
    }
    let offsets = [0.0, epsilon, -epsilon, 0.5 * epsilon, -0.5 * epsilon];
    let runs: Vec<Vec<Snapshot>> = offsets
        .par_iter()
        .map(|&d| {
            let p = params.with_tilt(params.tilt + d);
            let h = build_hamiltonian(&basis, &p)?;
            evolve(&h, psi0, schedule)
        })
        .collect::<Result<_>>()?;

    let max_deficit = runs[0]
        .iter()
        .zip(&runs[1])
        .map(|(c, p)| {
            Ok(fidelity_deficit(
                &c.state.normalized()?,
                &p.state.normalized()?,
            ))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if max_deficit < 100.0 * f64::EPSILON {
        return Err(Error::StepSize(format!(
            "largest fidelity deficit {max_deficit:.3e} is below 100 x machine precision; \
             increase epsilon (now {epsilon:e}) or t_max"
        )));
    }

    let fq = fisher_from_snapshots(&runs[0], &runs[1], &runs[2], epsilon)?;
    let fq_half = fisher_from_snapshots(&runs[0], &runs[3], &runs[4], 0.5 * epsilon)?;
    let times: Vec<f64> = runs[0].iter().map(|s| s.t).collect();

    let window = default_window(params);
    let half_step_change = times
        .iter()
        .zip(fq.iter().zip(&fq_half))
        .filter(|(t, (f, _))| **t >= window.0 && **t <= window.1 && **f > 0.0)
        .map(|(_, (f, g))| (f - g).abs() / f)
        .fold(0.0, f64::max);

    let mut series = QfiSeries {
        times,
        fq,
        epsilon,
        half_step_change,
        reliable: half_step_change < RICHARDSON_TOLERANCE,
        alpha_fit: None,
    };
    series.alpha_fit = fit_alpha(&series, window).ok();
    Ok(series)
}

pub fn fit_alpha(series: &QfiSeries, window: (f64, f64)) -> Result<AlphaFit> {
    fit_power_law(&series.times, &series.fq, window)
}

/// Log-log least squares over samples with `window.0 <= t <= window.1`.
pub fn fit_power_law(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<AlphaFit> {
    let points: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(&t, &v)| (t, v))
        .collect();
    if points.len() < MIN_FIT_SAMPLES {
        return Err(Error::Window(format!(
            "{} samples in [{}, {}], need at least {MIN_FIT_SAMPLES}",
            points.len(),
            window.0,
            window.1
        )));
    }
    if let Some((t, v)) = points.iter().find(|(t, v)| !(*v > 0.0) || !(*t > 0.0)) {
        return Err(Error::Window(format!(
            "nonpositive sample ({t}, {v}) in fit window"
        )));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(t, v)| (t.ln(), v.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let alpha = sxy / sxx;
    let log_prefactor = my - alpha * mx;
    let residual = (logs
        .iter()
        .map(|p| (p.1 - alpha * p.0 - log_prefactor).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(AlphaFit {
        alpha,
        log_prefactor,
        residual,
        window,
        samples: logs.len(),
    })
}

/// Local exponent `d ln F_Q / d ln t` by finite differences; `None` where undefined.
pub fn running_alpha(times: &[f64], fq: &[f64]) -> Vec<Option<f64>> {
    let n = times.len();
    let log = |k: usize| -> Option<(f64, f64)> {
        (times[k] > 0.0 && fq[k] > 0.0).then(|| (times[k].ln(), fq[k].ln()))
    };
    (0..n)
        .map(|k| {
            let a = if k > 0 { log(k - 1) } else { None }.or_else(|| log(k))?;
            let b = if k + 1 < n { log(k + 1) } else { None }.or_else(|| log(k))?;
            (b.0 > a.0).then(|| (b.1 - a.1) / (b.0 - a.0))
        })
        .collect()
}

/// `F_Q / (4 t^2)` at `delta = 0` minus the same at finite `delta`.
pub fn delta_metric(hermitian: &QfiSeries, non_hermitian: &QfiSeries, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Err(Error::Domain("delta metric is undefined at t = 0".into()));
    }
    let grids_match = hermitian.times.len() == non_hermitian.times.len()
        && hermitian
            .times
            .iter()
            .zip(&non_hermitian.times)
            .all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0));
    if !grids_match {
        return Err(Error::Parameter(
            "QFI series have different time grids".into(),
        ));
    }
    let k = hermitian
        .times
        .iter()
        .position(|s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
        .ok_or_else(|| Error::Domain(format!("t = {t} is not on the time grid")))?;
    let scale = 4.0 * t * t;
    Ok(hermitian.fq[k] / scale - non_hermitian.fq[k] / scale)
}

/// Cramér-Rao bound `1 / sqrt(F_Q)` on the tilt uncertainty.
pub fn cramer_rao_bound(fq: f64) -> Result<f64> {
    if !(fq > 0.0) {
        return Err(Error::Domain(format!(
            "Cramér-Rao bound needs F_Q > 0, got {fq}"
        )));
    }
    Ok(1.0 / fq.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::{initial_state, InitialState};
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn series(times: Vec<f64>, fq: Vec<f64>) -> QfiSeries {
        QfiSeries {
            times,
            fq,
            epsilon: 1e-3,
            half_step_change: 0.0,
            reliable: true,
            alpha_fit: None,
        }
    }

    /// `H = [[F, -1], [-1, 2F]] = a I + b sz + c sx` with `a = 3F/2`,
    /// `b = -F/2`, `c = -1`; starting from site 1,
    /// `psi = e^{-iat} (cos Wt - i b sin(Wt)/W, -i c sin(Wt)/W)`, `W = sqrt(b^2 + c^2)`.
    /// Returns `(psi, dpsi/dF)`.
    fn two_level(f: f64, t: f64) -> ([Complex64; 2], [Complex64; 2]) {
        let (a, b, cc) = (1.5 * f, -0.5 * f, -1.0);
        let (da, db) = (1.5, -0.5);
        let w = (b * b + cc * cc).sqrt();
        let dw = b * db / w;
        let (s, co) = (w * t).sin_cos();
        let sinc = s / w;
        let dsinc = (co * t * w - s) / (w * w) * dw;
        let phase = c(0.0, -a * t).exp();
        let dphase = phase * c(0.0, -da * t);
        let u0 = c(co, -b * sinc);
        let u1 = c(0.0, -cc * sinc);
        let du0 = c(-s * t * dw, -(db * sinc + b * dsinc));
        let du1 = c(0.0, -cc * dsinc);
        (
            [phase * u0, phase * u1],
            [dphase * u0 + phase * du0, dphase * u1 + phase * du1],
        )
    }

    #[test]
    fn two_level_matches_closed_form() {
        let f = 0.26;
        let t = 1.0;
        let (psi, dpsi) = two_level(f, t);
        let dd: f64 = dpsi.iter().map(|z| z.norm_sqr()).sum();
        let overlap: Complex64 = psi.iter().zip(&dpsi).map(|(a, b)| a.conj() * b).sum();
        let exact = 4.0 * (dd - overlap.norm_sqr());

        let params = LatticeParams::new(2, 1).with_tilt(f);
        let basis = build_basis(&params).unwrap();
        let psi0 = initial_state(&basis, InitialState::SingleCenter).unwrap();
        let schedule = EvolutionSchedule::new(1.0, 11);
        let s = qfi_series(&params, &psi0, &schedule, None).unwrap();
        let got = *s.fq.last().unwrap();
        assert!((got - exact).abs() / exact < 1e-4, "{got} vs {exact}");
        assert_eq!(s.fq[0], 0.0);

        // closed-form state agrees with the integrator
        let h = build_hamiltonian(&basis, &params).unwrap();
        let evolved = evolve(&h, &psi0, &schedule).unwrap().pop().unwrap().state;
        for (a, b) in evolved.amplitudes().iter().zip(&psi) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn deficit_is_phase_blind() {
        let a = StateVector::from_amplitudes(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let b = a.scaled(c(0.3, -0.7).unscale(c(0.3, -0.7).norm())).unwrap();
        assert!(fidelity_deficit(&a, &b) < 1e-30);
        let orth = StateVector::from_amplitudes(vec![c(0.0, 0.8), c(0.6, 0.0)]).unwrap();
        // <a|orth> = 0.6*0.8 i - 0.8 i * 0.6 ... = 0.96 i conj pieces; check against direct
        let ov: Complex64 = a
            .amplitudes()
            .iter()
            .zip(orth.amplitudes())
            .map(|(x, y)| x.conj() * y)
            .sum();
        assert!((fidelity_deficit(&a, &orth) - (1.0 - ov.norm())).abs() < 1e-15);
    }

    #[test]
    fn fit_synthetic_power_laws() {
        let times: Vec<f64> = (1..=40).map(|k| 0.5 * k as f64).collect();
        let cubic: Vec<f64> = times.iter().map(|t| 4.0 * t * t * t).collect();
        let fit = fit_power_law(&times, &cubic, (0.5, 20.0)).unwrap();
        assert!((fit.alpha - 3.0).abs() < 1e-6);
        assert!((fit.log_prefactor - 4f64.ln()).abs() < 1e-9);
        assert!(fit.residual < 1e-9);

        let square: Vec<f64> = times.iter().map(|t| t * t).collect();
        let fit = fit_alpha(&series(times.clone(), square), (0.5, 20.0)).unwrap();
        assert!((fit.alpha - 2.0).abs() < 1e-6);
    }

    #[test]
    fn fit_window_errors() {
        let times: Vec<f64> = (0..20).map(|k| k as f64).collect();
        let mut fq: Vec<f64> = times.iter().map(|t| t * t).collect();
        assert!(matches!(
            fit_power_law(&times, &fq, (0.5, 5.0)),
            Err(Error::Window(_))
        ));
        fq[10] = 0.0;
        assert!(matches!(
            fit_power_law(&times, &fq, (0.5, 19.0)),
            Err(Error::Window(_))
        ));
    }

    #[test]
    fn running_alpha_of_power_law() {
        let times: Vec<f64> = (0..30).map(|k| 0.1 * k as f64).collect();
        let fq: Vec<f64> = times.iter().map(|t| t.powi(3)).collect();
        let r = running_alpha(&times, &fq);
        assert_eq!(r[0], None);
        for v in &r[2..] {
            assert!((v.unwrap() - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn delta_metric_cases() {
        let times = vec![0.0, 1.0, 2.0];
        let a = series(times.clone(), vec![0.0, 4.0, 32.0]);
        assert_eq!(delta_metric(&a, &a, 2.0).unwrap(), 0.0);
        let b = series(times.clone(), vec![0.0, 2.0, 16.0]);
        assert_eq!(delta_metric(&a, &b, 2.0).unwrap(), 1.0);
        assert!(matches!(delta_metric(&a, &b, 0.0), Err(Error::Domain(_))));
        assert!(matches!(delta_metric(&a, &b, 1.5), Err(Error::Domain(_))));
        let shorter = series(vec![0.0, 1.0], vec![0.0, 1.0]);
        assert!(matches!(
            delta_metric(&a, &shorter, 1.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn cramer_rao_examples() {
        assert_eq!(cramer_rao_bound(4.0).unwrap(), 0.5);
        assert_eq!(cramer_rao_bound(1.0).unwrap(), 1.0);
        assert!((cramer_rao_bound(100.0).unwrap() - 0.1).abs() < 1e-16);
        assert!(cramer_rao_bound(0.0).is_err());
        assert!(cramer_rao_bound(-1.0).is_err());
    }

    #[test]
    fn tiny_epsilon_is_rejected() {
        let params = LatticeParams::new(4, 1).with_tilt(0.2);
        let basis = build_basis(&params).unwrap();
        let psi0 = initial_state(&basis, InitialState::SingleCenter).unwrap();
        let schedule = EvolutionSchedule::new(0.1, 3);
        assert!(matches!(
            qfi_series(&params, &psi0, &schedule, Some(1e-12)),
            Err(Error::StepSize(_))
        ));
        assert!(matches!(
            qfi_series(&params, &psi0, &schedule, Some(0.0)),
            Err(Error::StepSize(_))
        ));
    }

    #[test]
    fn phase_on_shifted_run_changes_nothing() {
        let params = LatticeParams::new(10, 2)
            .with_delta(0.05)
            .with_interaction(2.0)
            .with_tilt(0.3);
        let basis = build_basis(&params).unwrap();
        let psi0 = initial_state(&basis, InitialState::Neighboring).unwrap();
        let schedule = EvolutionSchedule::new(3.0, 7);
        let eps = 1e-3;
        let run = |d: f64| {
            let h = build_hamiltonian(&basis, &params.with_tilt(params.tilt + d)).unwrap();
            evolve(&h, &psi0, &schedule).unwrap()
        };
        let (center, plus, minus) = (run(0.0), run(eps), run(-eps));
        let base = fisher_from_snapshots(&center, &plus, &minus, eps).unwrap();
        let rotated: Vec<Snapshot> = plus
            .iter()
            .map(|s| Snapshot {
                t: s.t,
                state: s.state.scaled(c(0.0, 1.3).exp()).unwrap(),
            })
            .collect();
        let turned = fisher_from_snapshots(&center, &rotated, &minus, eps).unwrap();
        for (a, b) in base.iter().zip(&turned) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} vs {b}");
        }
    }
}
