//! Site-resolved observables on normalized snapshots.
//!
//! Site vectors are indexed from zero: entry `k` belongs to site `k + 1`.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::fock::FockBasis;
use crate::propagator::{Snapshot, StateVector};

/// Tolerance on `<psi|psi> = 1` for observable inputs.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;

/// Minimum peak-to-mean spectral power ratio accepted as an oscillation.
pub const PEAK_SHARPNESS_FLOOR: f64 = 15.0;

fn require_normalized(psi: &StateVector, basis: &FockBasis) -> Result<()> {
    if psi.dimension() != basis.dimension() {
        return Err(Error::Shape {
            expected: basis.dimension(),
            found: psi.dimension(),
        });
    }
    if !psi.is_normalized(NORMALIZATION_TOLERANCE) {
        return Err(Error::Contract(format!(
            "observable needs a normalized state, norm_sq = {}",
            psi.norm_sq()
        )));
    }
    Ok(())
}

fn require_pair(basis: &FockBasis) -> Result<()> {
    if basis.particles() != 2 {
        return Err(Error::Parameter(format!(
            "two-boson observable on an N={} basis",
            basis.particles()
        )));
    }
    Ok(())
}

/// `n_i = <a+_i a_i>`.
pub fn density(psi: &StateVector, basis: &FockBasis) -> Result<Vec<f64>> {
    require_normalized(psi, basis)?;
    let mut n = vec![0.0; basis.sites()];
    for (k, a) in psi.amplitudes().iter().enumerate() {
        let w = a.norm_sqr();
        for &s in basis.state(k).sites() {
            n[s - 1] += w;
        }
    }
    Ok(n)
}

/// `n_i^(2) = <a+_i a+_i a_i a_i> = 2 |c_(i,i)|^2`.
pub fn doublon_density(psi: &StateVector, basis: &FockBasis) -> Result<Vec<f64>> {
    require_pair(basis)?;
    require_normalized(psi, basis)?;
    let mut n = vec![0.0; basis.sites()];
    for (k, a) in psi.amplitudes().iter().enumerate() {
        let s = basis.state(k).sites();
        if s[0] == s[1] {
            n[s[0] - 1] += 2.0 * a.norm_sqr();
        }
    }
    Ok(n)
}

/// `n_i^(1) = n_i - n_i^(2)`, accumulated from the `i != j` pair states only.
pub fn single_density(psi: &StateVector, basis: &FockBasis) -> Result<Vec<f64>> {
    require_pair(basis)?;
    require_normalized(psi, basis)?;
    let mut n = vec![0.0; basis.sites()];
    for (k, a) in psi.amplitudes().iter().enumerate() {
        let s = basis.state(k).sites();
        if s[0] != s[1] {
            let w = a.norm_sqr();
            n[s[0] - 1] += w;
            n[s[1] - 1] += w;
        }
    }
    Ok(n)
}

/// Dense `L x L` two-particle correlator.
#[derive(Clone, Debug, PartialEq)]
pub struct Correlator {
    sites: usize,
    values: Vec<f64>,
}

impl Correlator {
    pub fn sites(&self) -> usize {
        self.sites
    }

    /// `Gamma_{i,j}` for site labels `i, j` in `1..=L`.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[(i - 1) * self.sites + (j - 1)]
    }

    /// Row-major values, zero-based.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn diagonal_sum(&self) -> f64 {
        (1..=self.sites).map(|i| self.at(i, i)).sum()
    }

    /// `max |Gamma_ij - Gamma_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        let l = self.sites;
        (1..=l)
            .flat_map(|i| (i + 1..=l).map(move |j| (i, j)))
            .map(|(i, j)| (self.at(i, j) - self.at(j, i)).abs())
            .fold(0.0, f64::max)
    }
}

/// `Gamma_{i,j} = <a+_i a+_j a_i a_j>`: `<n_i (n_i - 1)>` on the diagonal and
/// `<n_i n_j>` off it.
pub fn correlator(psi: &StateVector, basis: &FockBasis) -> Result<Correlator> {
    require_pair(basis)?;
    require_normalized(psi, basis)?;
    let l = basis.sites();
    let mut values = vec![0.0; l * l];
    for (k, a) in psi.amplitudes().iter().enumerate() {
        let w = a.norm_sqr();
        let s = basis.state(k).sites();
        let (i, j) = (s[0] - 1, s[1] - 1);
        if i == j {
            values[i * l + i] += 2.0 * w;
        } else {
            values[i * l + j] += w;
            values[j * l + i] += w;
        }
    }
    Ok(Correlator { sites: l, values })
}

/// `(sum_{i > c} n_i - sum_{i < c} n_i) / N`; sites at the center itself are
/// excluded. `center` may be a half-integer bond midpoint.
pub fn asymmetry(density: &[f64], center: f64) -> f64 {
    let total: f64 = density.iter().sum();
    let (mut right, mut left) = (0.0, 0.0);
    for (k, n) in density.iter().enumerate() {
        let site = (k + 1) as f64;
        if site > center {
            right += n;
        } else if site < center {
            left += n;
        }
    }
    (right - left) / total
}

pub fn center_of_mass(density: &[f64]) -> f64 {
    let total: f64 = density.iter().sum();
    density
        .iter()
        .enumerate()
        .map(|(k, n)| (k + 1) as f64 * n)
        .sum::<f64>()
        / total
}

/// Second moment about `center`, `sum (i - c)^2 n_i / sum n_i`.
pub fn spread(density: &[f64], center: f64) -> f64 {
    let total: f64 = density.iter().sum();
    density
        .iter()
        .enumerate()
        .map(|(k, n)| ((k + 1) as f64 - center).powi(2) * n)
        .sum::<f64>()
        / total
}

/// Everything measured on one snapshot.
#[derive(Clone, Debug)]
pub struct ObservableFrame {
    pub t: f64,
    pub norm_sq: f64,
    pub density: Vec<f64>,
    /// All zeros for one boson.
    pub doublon_density: Vec<f64>,
    pub single_density: Vec<f64>,
    /// Only for two bosons, and only when requested.
    pub correlator: Option<Correlator>,
    pub asymmetry: f64,
}

impl ObservableFrame {
    pub fn measure(
        snapshot: &Snapshot,
        basis: &FockBasis,
        center: f64,
        with_correlator: bool,
    ) -> Result<Self> {
        let psi = snapshot.state.normalized()?;
        // for two bosons n is assembled from its parts so n1 + n2 = n holds bit for bit
        let (density, single_density, doublon_density) = if basis.particles() == 2 {
            let n1 = single_density(&psi, basis)?;
            let n2 = doublon_density(&psi, basis)?;
            let n = n1.iter().zip(&n2).map(|(a, b)| a + b).collect();
            (n, n1, n2)
        } else {
            let n = density(&psi, basis)?;
            (n.clone(), n, vec![0.0; basis.sites()])
        };
        let correlator = if with_correlator && basis.particles() == 2 {
            Some(correlator(&psi, basis)?)
        } else {
            None
        };
        Ok(ObservableFrame {
            t: snapshot.t,
            norm_sq: snapshot.state.norm_sq(),
            asymmetry: asymmetry(&density, center),
            density,
            doublon_density,
            single_density,
            correlator,
        })
    }

    pub fn total_density(&self) -> f64 {
        self.density.iter().sum()
    }

    pub fn doublon_weight(&self) -> f64 {
        self.doublon_density.iter().sum()
    }
}

/// Dominant oscillation of a sampled signal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Oscillation {
    pub period: f64,
    /// Peak power over mean power in the searched band.
    pub sharpness: f64,
}

/// Dominant period of a uniformly sampled series.
///
/// Mean-subtracted, Hann-windowed, zero-padded DFT; the peak bin is refined
/// by a parabola through the log power of its neighbours. Only periods up to
/// two thirds of the record length are searched. Returns `None` when no peak
/// reaches [`PEAK_SHARPNESS_FLOOR`].
pub fn oscillation_period(series: &[f64], dt: f64) -> Option<Oscillation> {
    let n = series.len();
    if n < 8 || !(dt > 0.0) {
        return None;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let scale = series.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if series
        .iter()
        .all(|x| (x - mean).abs() <= 1e-14 * scale.max(1e-300))
    {
        return None;
    }
    let padded = (8 * n).next_power_of_two();
    let mut buf: Vec<Complex64> = series
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos();
            Complex64::new((x - mean) * w, 0.0)
        })
        .collect();
    buf.resize(padded, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let power: Vec<f64> = buf[..=padded / 2].iter().map(|z| z.norm_sqr()).collect();

    let lo = ((1.5 * padded as f64 / n as f64).ceil() as usize).max(1);
    let hi = padded / 2 - 1;
    if lo >= hi {
        return None;
    }
    let band = &power[lo..=hi];
    let (offset, &peak) = band.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    let mean_power = band.iter().sum::<f64>() / band.len() as f64;
    let sharpness = peak / mean_power;
    if !(sharpness >= PEAK_SHARPNESS_FLOOR) {
        return None;
    }
    let k = lo + offset;
    let (a, b, c) = (power[k - 1].ln(), power[k].ln(), power[k + 1].ln());
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > 0.0 && denom.is_finite() {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Some(Oscillation {
        period: padded as f64 * dt / (k as f64 + shift),
        sharpness,
    })
}
