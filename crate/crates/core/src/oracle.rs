//! Slow, exact reference implementations: dense `exp(-iHt)` and the
//! infinite-lattice Bessel solution of the free single-particle walk.
//!
//! Nothing here shares code with the sparse stepped integrators.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::SparseHamiltonian;
use crate::propagator::StateVector;

/// Largest dimension the dense oracle accepts.
pub const ORACLE_DIMENSION_LIMIT: usize = 2500;
/// Eigenvector condition number above which the eigenbasis route is dropped.
pub const CONDITION_LIMIT: f64 = 1e12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug)]
enum Route {
    Eigen {
        values: Vec<Complex64>,
        vectors: Mat<Complex64>,
        inverse: Mat<Complex64>,
        condition: f64,
    },
    ScalingSquaring,
}

/// Dense copy of `H` with either a right-eigenvector basis or a flag to use
/// Padé scaling-and-squaring for every exponential.
#[derive(Clone, Debug)]
pub struct DenseOracle {
    matrix: Mat<Complex64>,
    route: Route,
}

impl DenseOracle {
    pub fn new(h: &SparseHamiltonian) -> Result<Self> {
        Self::from_dense(h.to_dense())
    }

    pub fn from_dense(matrix: Mat<Complex64>) -> Result<Self> {
        check_scale(matrix.nrows())?;
        let route = eigen_route(&matrix)?.unwrap_or(Route::ScalingSquaring);
        Ok(DenseOracle { matrix, route })
    }

    /// Oracle that always uses scaling-and-squaring.
    pub fn scaling_and_squaring(h: &SparseHamiltonian) -> Result<Self> {
        check_scale(h.dimension())?;
        Ok(DenseOracle {
            matrix: h.to_dense(),
            route: Route::ScalingSquaring,
        })
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn uses_eigenbasis(&self) -> bool {
        matches!(self.route, Route::Eigen { .. })
    }

    /// 1-norm condition number of the eigenvector matrix, when that route is active.
    pub fn condition(&self) -> Option<f64> {
        match &self.route {
            Route::Eigen { condition, .. } => Some(*condition),
            Route::ScalingSquaring => None,
        }
    }

    /// `exp(-iHt)` as a dense matrix.
    pub fn propagator(&self, t: f64) -> Mat<Complex64> {
        let n = self.dimension();
        match &self.route {
            Route::Eigen {
                values,
                vectors,
                inverse,
                ..
            } => {
                let phases: Vec<Complex64> = values
                    .iter()
                    .map(|&l| (Complex64::new(0.0, -t) * l).exp())
                    .collect();
                let scaled = Mat::from_fn(n, n, |r, c| vectors[(r, c)] * phases[c]);
                &scaled * inverse
            }
            Route::ScalingSquaring => {
                let a = Mat::from_fn(n, n, |r, c| Complex64::new(0.0, -t) * self.matrix[(r, c)]);
                expm(&a)
            }
        }
    }

    /// `exp(-iHt) psi0`, unnormalized.
    pub fn expm_apply(&self, psi0: &StateVector, t: f64) -> Result<StateVector> {
        let n = self.dimension();
        if psi0.dimension() != n {
            return Err(Error::Shape {
                expected: n,
                found: psi0.dimension(),
            });
        }
        let amplitudes = match &self.route {
            Route::Eigen {
                values,
                vectors,
                inverse,
                ..
            } => {
                let coeffs: Vec<Complex64> = (0..n)
                    .map(|k| {
                        let c: Complex64 =
                            (0..n).map(|j| inverse[(k, j)] * psi0.amplitudes()[j]).sum();
                        c * (Complex64::new(0.0, -t) * values[k]).exp()
                    })
                    .collect();
                (0..n)
                    .map(|r| (0..n).map(|k| vectors[(r, k)] * coeffs[k]).sum())
                    .collect()
            }
            Route::ScalingSquaring => {
                let u = self.propagator(t);
                (0..n)
                    .map(|r| (0..n).map(|k| u[(r, k)] * psi0.amplitudes()[k]).sum())
                    .collect()
            }
        };
        StateVector::from_amplitudes(amplitudes).map_err(|e| Error::Evolution {
            time: t,
            reason: e.to_string(),
        })
    }
}

fn check_scale(dimension: usize) -> Result<()> {
    if dimension > ORACLE_DIMENSION_LIMIT {
        return Err(Error::OracleScale {
            dimension,
            limit: ORACLE_DIMENSION_LIMIT,
        });
    }
    Ok(())
}

fn eigen_route(matrix: &Mat<Complex64>) -> Result<Option<Route>> {
    let n = matrix.nrows();
    let evd = match matrix.eigen() {
        Ok(evd) => evd,
        Err(_) => return Ok(None),
    };
    let values: Vec<Complex64> = (0..n).map(|k| evd.S()[k]).collect();
    let vectors = evd.U().to_owned();
    let inverse = vectors.partial_piv_lu().inverse();
    let condition = norm_one(&vectors) * norm_one(&inverse);
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Ok(None);
    }
    // exp(-iH 0) must come back as the identity
    let identity = &vectors * &inverse;
    let defect = (0..n)
        .flat_map(|r| (0..n).map(move |c| (r, c)))
        .map(|(r, c)| (identity[(r, c)] - if r == c { ONE } else { ZERO }).norm())
        .fold(0.0, f64::max);
    if defect > 1e-10 {
        return Ok(None);
    }
    Ok(Some(Route::Eigen {
        values,
        vectors,
        inverse,
        condition,
    }))
}

/// Induced 1-norm (maximum column sum).
fn norm_one(m: &Mat<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|c| (0..m.nrows()).map(|r| m[(r, c)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371_920_351_148_152;

fn combine(terms: &[(f64, &Mat<Complex64>)], identity: f64, n: usize) -> Mat<Complex64> {
    Mat::from_fn(n, n, |r, c| {
        let mut acc = if r == c {
            Complex64::new(identity, 0.0)
        } else {
            ZERO
        };
        for (w, m) in terms {
            acc += m[(r, c)] * *w;
        }
        acc
    })
}

/// Matrix exponential by scaling-and-squaring with the degree-13 Padé approximant.
pub fn expm(a: &Mat<Complex64>) -> Mat<Complex64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    let norm = norm_one(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(squarings);
    let a = Mat::from_fn(n, n, |r, c| a[(r, c)] * scale);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;

    let inner_u = combine(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)], 0.0, n);
    let outer_u = combine(&[(b[7], &a6), (b[5], &a4), (b[3], &a2)], b[1], n);
    let u = &a * (&a6 * &inner_u + &outer_u);

    let inner_v = combine(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)], 0.0, n);
    let outer_v = combine(&[(b[6], &a6), (b[4], &a4), (b[2], &a2)], b[0], n);
    let v = &a6 * &inner_v + &outer_v;

    let denominator = &v - &u;
    let numerator = &v + &u;
    let mut result = denominator.partial_piv_lu().solve(&numerator);
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Bessel function of the first kind `J_n(x)` by Miller's downward recurrence,
/// normalized with `J_0 + 2 sum_k J_{2k} = 1`.
pub fn bessel_j(order: i32, x: f64) -> f64 {
    let n = order.unsigned_abs() as usize;
    let parity = if n % 2 == 1 { -1.0 } else { 1.0 };
    let sign = (if order < 0 { parity } else { 1.0 }) * (if x < 0.0 { parity } else { 1.0 });
    let x = x.abs();
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let top = n.max(x.ceil() as usize);
    let start = 2 * ((top + 20 + (40.0 * top as f64).sqrt() as usize) / 2);

    let mut above = 0.0;
    let mut current = 1e-300;
    let mut wanted = 0.0;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let below = 2.0 * k as f64 / x * current - above;
        above = current;
        current = below;
        if k - 1 == n {
            wanted = current;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * current;
        }
        if current.abs() > 1e250 {
            current *= 1e-250;
            above *= 1e-250;
            wanted *= 1e-250;
            norm *= 1e-250;
        }
    }
    norm += current;
    sign * wanted / norm
}

/// Free-walk density `|J_{i - i0}(2t)|^2` on the infinite lattice.
pub fn bessel_density(site: usize, start: usize, t: f64) -> Result<f64> {
    let offset = site as i64 - start as i64;
    if offset.abs() > 60 {
        return Err(Error::Domain(format!(
            "Bessel density limited to |i - i0| <= 60, got {offset}"
        )));
    }
    Ok(bessel_j(offset as i32, 2.0 * t).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_basis, LatticeParams};
    use crate::hamiltonian::build_hamiltonian;
    use crate::propagator::{initial_state, InitialState};

    /// Power series, independent of the recurrence; fine for small x.
    fn bessel_series(n: u32, x: f64) -> f64 {
        let half = x / 2.0;
        let mut term = half.powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
        let mut sum = term;
        for m in 1..200 {
            term *= -half * half / (m as f64 * (m + n) as f64);
            sum += term;
            if term.abs() < 1e-300 {
                break;
            }
        }
        sum
    }

    fn oracle(p: LatticeParams) -> (DenseOracle, StateVector) {
        let b = build_basis(&p).unwrap();
        let h = build_hamiltonian(&b, &p).unwrap();
        let kind = if p.particles == 1 {
            InitialState::SingleCenter
        } else {
            InitialState::Neighboring
        };
        (
            DenseOracle::new(&h).unwrap(),
            initial_state(&b, kind).unwrap(),
        )
    }

    fn max_diff(a: &StateVector, b: &StateVector) -> f64 {
        a.amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn bessel_recurrence_matches_series() {
        for n in 0..30u32 {
            for &x in &[0.1, 1.0, 2.5, 6.0, 10.0] {
                let a = bessel_j(n as i32, x);
                let b = bessel_series(n, x);
                assert!((a - b).abs() < 1e-12, "J_{n}({x}): {a} vs {b}");
            }
        }
        // reference values
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j(1, 2.0) - 0.576_724_807_756_873_4).abs() < 1e-15);
        assert!((bessel_j(-1, 2.0) + 0.576_724_807_756_873_4).abs() < 1e-15);
        assert!((bessel_j(5, 20.0) - 0.151_169_767_982_394_93).abs() < 1e-13);
    }

    #[test]
    fn bessel_density_edges() {
        assert_eq!(bessel_density(10, 10, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_density(11, 10, 0.0).unwrap(), 0.0);
        let total: f64 = (0..=80).map(|i| bessel_density(i, 40, 3.0).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(matches!(
            bessel_density(100, 10, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn identity_at_zero_time() {
        let (o, psi) = oracle(
            LatticeParams::new(6, 2)
                .with_delta(0.15)
                .with_interaction(3.0)
                .with_tilt(0.2),
        );
        assert!(o.uses_eigenbasis());
        let out = o.expm_apply(&psi, 0.0).unwrap();
        assert!(max_diff(&out, &psi) < 1e-12);
    }

    #[test]
    fn hermitian_norm_preserved() {
        let (o, psi) = oracle(
            LatticeParams::new(7, 2)
                .with_interaction(2.0)
                .with_tilt(0.3),
        );
        for t in [0.5, 3.0, 9.0] {
            let out = o.expm_apply(&psi, t).unwrap();
            assert!((out.norm_sq() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn semigroup_composition() {
        let (o, psi) = oracle(
            LatticeParams::new(6, 2)
                .with_delta(-0.12)
                .with_interaction(5.0)
                .with_tilt(0.4),
        );
        let two_steps = o
            .expm_apply(&o.expm_apply(&psi, 1.3).unwrap(), 2.1)
            .unwrap();
        let one_step = o.expm_apply(&psi, 3.4).unwrap();
        assert!(max_diff(&two_steps, &one_step) < 1e-8);
    }

    #[test]
    fn eigen_and_pade_routes_agree() {
        let p = LatticeParams::new(6, 2)
            .with_delta(0.2)
            .with_interaction(7.0)
            .with_tilt(0.5);
        let b = build_basis(&p).unwrap();
        let h = build_hamiltonian(&b, &p).unwrap();
        let psi = initial_state(&b, InitialState::SameSite).unwrap();
        let eig = DenseOracle::new(&h).unwrap();
        let pade = DenseOracle::scaling_and_squaring(&h).unwrap();
        assert!(!pade.uses_eigenbasis());
        for t in [0.0, 0.7, 4.0] {
            let a = eig.expm_apply(&psi, t).unwrap().normalized().unwrap();
            let b = pade.expm_apply(&psi, t).unwrap().normalized().unwrap();
            assert!(max_diff(&a, &b) < 1e-10, "t={t}");
        }
    }

    #[test]
    fn defective_matrix_falls_back() {
        // Jordan block: not diagonalizable
        let m = faer::mat![
            [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
            [ZERO, Complex64::new(1.0, 0.0)],
        ];
        let o = DenseOracle::from_dense(m).unwrap();
        assert!(!o.uses_eigenbasis());
        // exp(-i J t) = e^{-it} [[1, -it], [0, 1]]
        let t = 0.8;
        let u = o.propagator(t);
        let phase = Complex64::new(0.0, -t).exp();
        assert!((u[(0, 0)] - phase).norm() < 1e-13);
        assert!((u[(0, 1)] - phase * Complex64::new(0.0, -t)).norm() < 1e-13);
        assert!(u[(1, 0)].norm() < 1e-13);
    }

    #[test]
    fn pade_matches_scalar_exponential_for_large_norm() {
        let z = Complex64::new(0.3, -40.0);
        let m = faer::mat![[z, ZERO], [ZERO, -z]];
        let e = expm(&m);
        assert!((e[(0, 0)] - z.exp()).norm() < 1e-11);
        assert!((e[(1, 1)] - (-z).exp()).norm() < 1e-11);
    }

    #[test]
    fn dimension_guard() {
        let p = LatticeParams::new(71, 2);
        let b = build_basis(&p).unwrap();
        let h = build_hamiltonian(&b, &p).unwrap();
        assert!(matches!(
            DenseOracle::new(&h),
            Err(Error::OracleScale {
                dimension: 2556,
                ..
            })
        ));
    }

    #[test]
    fn bessel_matches_dense_single_particle() {
        let p = LatticeParams::new(121, 1);
        let (o, psi) = oracle(p);
        let start = 60;
        for t in [1.0, 4.0, 10.0] {
            // keep the light cone away from the edges
            assert!(2.0 * t + 10.0 < (start - 1) as f64);
            let out = o.expm_apply(&psi, t).unwrap();
            for (k, a) in out.amplitudes().iter().enumerate() {
                let site = k + 1;
                let want = bessel_density(site, start, t).unwrap_or(0.0);
                assert!((a.norm_sqr() - want).abs() < 1e-6, "t={t} site={site}");
            }
        }
    }
}
