use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform collocation grid on the 2π-periodic torus `[0, 2π)^dim`.
///
/// Coefficients are stored in FFT order: the flat index is
/// `i0 + N*i1 + N²*i2` and axis index `i` carries wavenumber `i` for
/// `i < N/2`, `i - N` otherwise. The wavenumber tables and FFT plans are
/// shared, so cloning a grid is cheap.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    dim: usize,
    n: usize,
    len: usize,
    kvec: Vec<[i64; 3]>,
    k2: Vec<f64>,
    retained: Vec<bool>,
    mirror: Vec<usize>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Grid {
    /// Builds a grid with `n` points per axis in `dim` dimensions.
    ///
    /// `dim` must be 2 or 3 and `n` a power of two no smaller than 16.
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {dim}")));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 16, got {n}"
            )));
        }
        Ok(Self::cached(dim, n))
    }

    fn cached(dim: usize, n: usize) -> Self {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Grid>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
        map.entry((dim, n)).or_insert_with(|| Self::build(dim, n)).clone()
    }

    fn build(dim: usize, n: usize) -> Self {
        let len = n.pow(dim as u32);
        let cut = (n / 3) as i64;
        let mut kvec = Vec::with_capacity(len);
        let mut k2 = Vec::with_capacity(len);
        let mut retained = Vec::with_capacity(len);
        let mut mirror = Vec::with_capacity(len);
        for idx in 0..len {
            let mut k = [0i64; 3];
            let mut m = 0usize;
            let mut stride = 1usize;
            for ka in k.iter_mut().take(dim) {
                let i = (idx / stride) % n;
                *ka = if i < n / 2 { i as i64 } else { i as i64 - n as i64 };
                m += ((n - i) % n) * stride;
                stride *= n;
            }
            let sq = k.iter().map(|&c| (c * c) as f64).sum();
            kvec.push(k);
            k2.push(sq);
            retained.push(k.iter().all(|&c| c.abs() <= cut));
            mirror.push(m);
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Grid {
            inner: Arc::new(GridInner {
                dim,
                n,
                len,
                kvec,
                k2,
                retained,
                mirror,
                forward,
                inverse,
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.inner.n
    }

    /// Total number of collocation points (and of Fourier modes).
    pub fn len(&self) -> usize {
        self.inner.len
    }

    pub fn is_empty(&self) -> bool {
        self.inner.len == 0
    }

    /// Highest wavenumber per axis kept by the 2/3 rule.
    pub fn dealias_cutoff(&self) -> usize {
        self.inner.n / 3
    }

    /// Integer wavevector of a flat index; unused axes are zero.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [i64; 3] {
        self.inner.kvec[idx]
    }

    /// `|k|²` of a flat index.
    #[inline]
    pub fn k2(&self, idx: usize) -> f64 {
        self.inner.k2[idx]
    }

    #[inline]
    pub fn kmag(&self, idx: usize) -> f64 {
        self.inner.k2[idx].sqrt()
    }

    pub fn k2_table(&self) -> &[f64] {
        &self.inner.k2
    }

    /// Whether the mode survives 2/3-rule truncation.
    #[inline]
    pub fn is_retained(&self, idx: usize) -> bool {
        self.inner.retained[idx]
    }

    /// Flat index of `-k`.
    #[inline]
    pub fn mirror(&self, idx: usize) -> usize {
        self.inner.mirror[idx]
    }

    /// Largest `|k|` over every lattice vector stored on the grid.
    pub fn max_wavenumber(&self) -> f64 {
        (self.inner.dim as f64).sqrt() * (self.inner.n / 2) as f64
    }

    /// Flat index of wavevector `k`, if representable.
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        let n = self.inner.n as i64;
        let mut idx = 0usize;
        let mut stride = 1usize;
        for axis in 0..self.inner.dim {
            let c = k.get(axis).copied().unwrap_or(0);
            if c < -n / 2 || c >= n / 2 {
                return None;
            }
            idx += (c.rem_euclid(n) as usize) * stride;
            stride *= self.inner.n;
        }
        if k.iter().skip(self.inner.dim).any(|&c| c != 0) {
            return None;
        }
        Some(idx)
    }

    /// Physical coordinates of collocation point `idx`.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let h = 2.0 * std::f64::consts::PI / self.inner.n as f64;
        let mut x = [0.0; 3];
        let mut stride = 1usize;
        for xa in x.iter_mut().take(self.inner.dim) {
            *xa = ((idx / stride) % self.inner.n) as f64 * h;
            stride *= self.inner.n;
        }
        x
    }

    /// Same dimension, `factor` times as many points per axis.
    pub fn refined(&self, factor: usize) -> Grid {
        Grid::cached(self.inner.dim, self.inner.n * factor)
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self} vs {other}")))
        }
    }

    /// Unnormalized in-place transform over every axis.
    pub(crate) fn fft_in_place(&self, data: &mut [Complex64], inverse: bool) {
        let g = &*self.inner;
        debug_assert_eq!(data.len(), g.len);
        let plan = if inverse { &g.inverse } else { &g.forward };
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // axis 0 is contiguous
        plan.process_with_scratch(data, &mut scratch);
        let n = g.n;
        // other axes: transpose each slab so the lines are contiguous
        let mut slab = Vec::new();
        let mut stride = n;
        for _axis in 1..g.dim {
            let block = stride * n;
            slab.resize(block, Complex64::new(0.0, 0.0));
            for outer in (0..g.len).step_by(block) {
                let src = &mut data[outer..outer + block];
                for j in 0..n {
                    for inner in 0..stride {
                        slab[inner * n + j] = src[j * stride + inner];
                    }
                }
                plan.process_with_scratch(&mut slab, &mut scratch);
                for j in 0..n {
                    for inner in 0..stride {
                        src[j * stride + inner] = slab[inner * n + j];
                    }
                }
            }
            stride = block;
        }
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.dim == other.inner.dim && self.inner.n == other.inner.n
    }
}

impl Eq for Grid {}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.inner.dim)
            .field("n", &self.inner.n)
            .finish()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{} grid", self.inner.n, self.inner.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(2, 8).is_err());
        assert!(Grid::new(2, 48).is_err());
        assert!(Grid::new(4, 16).is_err());
        assert!(Grid::new(2, 16).is_ok());
    }

    #[test]
    fn wavevector_layout_and_mirror() {
        let g = Grid::new(2, 16).unwrap();
        let idx = g.index_of(&[3, -2]).unwrap();
        assert_eq!(g.wavevector(idx), [3, -2, 0]);
        assert_eq!(g.wavevector(g.mirror(idx)), [-3, 2, 0]);
        assert_eq!(g.k2(idx), 13.0);
        assert_eq!(g.index_of(&[8, 0]), None);
        assert_eq!(g.wavevector(g.index_of(&[-8, 0]).unwrap()), [-8, 0, 0]);
        assert_eq!(g.dealias_cutoff(), 5);
        assert!(g.is_retained(g.index_of(&[5, -5]).unwrap()));
        assert!(!g.is_retained(g.index_of(&[6, 0]).unwrap()));
    }

    #[test]
    fn fft_roundtrip_3d() {
        let g = Grid::new(3, 16).unwrap();
        let orig: Vec<Complex64> = (0..g.len())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut data = orig.clone();
        g.fft_in_place(&mut data, false);
        g.fft_in_place(&mut data, true);
        let scale = 1.0 / g.len() as f64;
        for (a, b) in data.iter().zip(&orig) {
            assert!((a * scale - b).norm() < 1e-12);
        }
    }
}
