//! Sparse Hatano-Nelson-Bose-Hubbard Hamiltonian with open boundaries:
//!
//! ```text
//! H = - sum_{i=1}^{L-1} [ (1-delta) a+_{i+1} a_i + (1+delta) a+_i a_{i+1} ]
//!     + U/2 sum_{i=1}^{L} n_i (n_i - 1) + F sum_{i=1}^{L} i n_i
//! ```
//!
//! Entries are real, but they are stored as complex numbers so that the
//! propagators see a single scalar type.

use std::collections::BTreeMap;
use std::io::Write;

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{amplitude_factor, FockBasis, Ladder, LatticeParams, Occupation};

/// Hamiltonian in compressed sparse row form.
#[derive(Clone, Debug)]
pub struct SparseHamiltonian {
    dimension: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<Complex64>,
    params: LatticeParams,
}

/// Diagonal energy of an occupation: `U/2 sum n(n-1) + F sum i n`.
pub fn diagonal_energy(state: &Occupation, params: &LatticeParams) -> f64 {
    state
        .occupied()
        .map(|(site, n)| {
            let n = n as f64;
            0.5 * params.interaction * n * (n - 1.0) + params.tilt * site as f64 * n
        })
        .sum()
}

pub fn build_hamiltonian(basis: &FockBasis, params: &LatticeParams) -> Result<SparseHamiltonian> {
    params.validate()?;
    if !basis.matches(params) {
        return Err(Error::Parameter(format!(
            "basis built for L={}, N={} but params have L={}, N={}",
            basis.sites(),
            basis.particles(),
            params.sites,
            params.particles
        )));
    }
    let l = params.sites;
    let right = -(1.0 - params.delta);
    let left = -(1.0 + params.delta);

    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); basis.dimension()];
    for (col, state) in basis.states().iter().enumerate() {
        rows[col].insert(col, diagonal_energy(state, params));
        for i in 1..l {
            for (from, to, amp) in [(i, i + 1, right), (i + 1, i, left)] {
                let (fa, lowered) = amplitude_factor(state, from, Ladder::Annihilate);
                if fa == 0.0 {
                    continue;
                }
                let (fc, target) = amplitude_factor(&lowered, to, Ladder::Create);
                let row = basis
                    .index_of(&target)
                    .expect("hopping stays inside the fixed-N sector");
                *rows[row].entry(col).or_insert(0.0) += amp * fa * fc;
            }
        }
    }

    let mut row_ptr = Vec::with_capacity(rows.len() + 1);
    let mut cols = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    for row in rows {
        for (c, v) in row {
            cols.push(c);
            values.push(Complex64::new(v, 0.0));
        }
        row_ptr.push(cols.len());
    }
    Ok(SparseHamiltonian {
        dimension: basis.dimension(),
        row_ptr,
        cols,
        values,
        params: *params,
    })
}

impl SparseHamiltonian {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn params(&self) -> &LatticeParams {
        &self.params
    }

    /// Number of stored entries, diagonal included.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn nnz_offdiagonal(&self) -> usize {
        self.entries().filter(|(r, c, _)| r != c).count()
    }

    /// All stored entries as `(row, col, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dimension).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.values[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        let span = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[span.clone()].binary_search(&col) {
            Ok(k) => self.values[span.start + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dimension).map(|r| self.get(r, r)).collect()
    }

    /// `H v`, no normalization.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dimension {
            return Err(Error::Shape {
                expected: self.dimension,
                found: v.len(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dimension];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    /// `out = H v` without shape checks; both slices must have length `dimension`.
    pub(crate) fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * v[self.cols[k]];
            }
            *o = acc;
        }
    }

    /// Row-sum norm of `H - shift * I`.
    pub fn shifted_inf_norm(&self, shift: f64) -> f64 {
        (0..self.dimension)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|k| {
                        let v = if self.cols[k] == r {
                            self.values[k] - shift
                        } else {
                            self.values[k]
                        };
                        v.norm()
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Midpoint of the real diagonal range; subtracting it only changes the
    /// global phase of the evolved state.
    pub fn diagonal_center(&self) -> f64 {
        let (lo, hi) = self
            .diagonal()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
                (lo.min(d.re), hi.max(d.re))
            });
        0.5 * (lo + hi)
    }

    pub fn to_dense(&self) -> Mat<Complex64> {
        let mut m = Mat::<Complex64>::zeros(self.dimension, self.dimension);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    /// Coordinate-format text export: one `row col re im` line per stored
    /// entry, zero-based basis indices, preceded by `#` header lines.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let p = &self.params;
        writeln!(w, "# hnwalk hamiltonian coordinate format")?;
        writeln!(
            w,
            "# L={} N={} delta={} U={} F={} dimension={} nnz={}",
            p.sites,
            p.particles,
            p.delta,
            p.interaction,
            p.tilt,
            self.dimension,
            self.nnz()
        )?;
        writeln!(w, "# row col re im")?;
        for (r, c, v) in self.entries() {
            writeln!(w, "{r} {c} {:.17e} {:.17e}", v.re, v.im)?;
        }
        Ok(())
    }
}
