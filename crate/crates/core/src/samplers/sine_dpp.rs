//! Spectral sampler for the sine-kernel determinantal process on `[0, n]`.
//!
//! The kernel `K(x,y) = sin(pi(x-y))/(pi(x-y))` is discretized by midpoint
//! quadrature with `m` cells per unit length, giving the symmetric Toeplitz
//! matrix `A[i][j] = sin(pi (i-j)/m) / (pi (i-j))`. That matrix is exactly a
//! discrete prolate spheroidal (Slepian) matrix with bandwidth `W = 1/(2m)`,
//! so it commutes with a known symmetric tridiagonal matrix; eigenvectors
//! are computed from the tridiagonal (bisection + inverse iteration) and the
//! kernel eigenvalues are recovered as Rayleigh quotients through an
//! FFT-based Toeplitz multiply. Sampling then follows the usual spectral
//! scheme: select eigenfunctions independently with probability equal to the
//! (clamped) eigenvalue and draw the points of the induced projection kernel
//! sequentially.

use crate::error::LabError;
use crate::samplers::tridiag::SymmetricTridiagonal;
use crate::seed::SeedPair;
use crate::window::{PointConfiguration, Topology, WindowSpec};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

const EIGENVALUE_EPS: f64 = 1e-6;
/// Eigenvalues below this threshold are dropped; selection probability is
/// negligible against Monte Carlo noise at any feasible replica count.
const EIGENVALUE_FLOOR: f64 = 1e-13;

/// Prepared spectral decomposition for a fixed `(n, m)`; sampling replicas
/// reuses it.
#[derive(Debug)]
pub struct SineDppSampler {
    pub n: f64,
    pub m: u32,
    /// Clamped kernel eigenvalues, descending.
    eigvals: Vec<f64>,
    /// Matching eigenvectors (orthonormal in R^M), column per eigenvalue.
    eigvecs: Vec<Vec<f64>>,
    num_grid: usize,
}

impl SineDppSampler {
    /// Builds the decomposition. `n * m` must be an integer grid size.
    pub fn prepare(n: f64, m: u32) -> Result<Arc<Self>, LabError> {
        if m < 8 {
            return Err(LabError::InvalidModel(format!("grid resolution m={m} must be >= 8")));
        }
        if !(n > 0.0) {
            return Err(LabError::InvalidWindow(format!("n={n} must be positive")));
        }
        let cache = sampler_cache();
        let key = (n.to_bits(), m);
        if let Some(hit) = cache.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }

        let grid = (n * m as f64).round();
        if (n * m as f64 - grid).abs() > 1e-6 {
            return Err(LabError::InvalidWindow(format!(
                "n*m = {} must be an integer grid size",
                n * m as f64
            )));
        }
        let big = grid as usize;

        // Slepian commuting tridiagonal for bandwidth W = 1/(2m).
        let w = 1.0 / (2.0 * m as f64);
        let theta = (2.0 * std::f64::consts::PI * w).cos();
        let mf = big as f64;
        let diag: Vec<f64> =
            (0..big).map(|i| ((mf - 1.0) / 2.0 - i as f64).powi(2) * theta).collect();
        let off: Vec<f64> =
            (0..big - 1).map(|i| (i as f64 + 1.0) * (mf - 1.0 - i as f64) / 2.0).collect();
        let tri = SymmetricTridiagonal::new(diag, off)?;

        let toeplitz = ToeplitzMultiplier::sine_kernel(big, m);

        // Top block of the spectrum; extend until the tail eigenvalue is
        // negligible.
        let mut want =
            (n.ceil() as usize + 8 * (big as f64).ln().ceil() as usize + 24).min(big);
        let (eigvals, eigvecs) = loop {
            let pairs = tri.eigen_top(want)?;
            let mut vals = Vec::with_capacity(pairs.len());
            let mut vecs = Vec::with_capacity(pairs.len());
            for (_, v) in pairs {
                let av = toeplitz.multiply(&v);
                let lambda: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
                if lambda < -EIGENVALUE_EPS || lambda > 1.0 + EIGENVALUE_EPS {
                    return Err(LabError::KernelDiscretization {
                        value: lambda,
                        eps: EIGENVALUE_EPS,
                    });
                }
                vals.push(lambda.clamp(0.0, 1.0));
                vecs.push(v);
            }
            let mut order: Vec<usize> = (0..vals.len()).collect();
            order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
            let vals_sorted: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
            if want == big || vals_sorted.last().copied().unwrap_or(0.0) < EIGENVALUE_FLOOR {
                let keep = vals_sorted.partition_point(|&l| l >= EIGENVALUE_FLOOR);
                let vecs_sorted: Vec<Vec<f64>> =
                    order[..keep].iter().map(|&i| std::mem::take(&mut vecs[i])).collect();
                break (vals_sorted[..keep].to_vec(), vecs_sorted);
            }
            want = (want + want / 2 + 16).min(big);
        };

        let sampler =
            Arc::new(Self { n, m, eigvals, eigvecs, num_grid: big });
        cache.lock().unwrap().insert(key, sampler.clone());
        Ok(sampler)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigvals
    }

    /// `E[count] = sum(lambda)`; equals `n` up to quadrature truncation.
    pub fn mean_count(&self) -> f64 {
        self.eigvals.iter().sum()
    }

    /// `Var(count) = sum(lambda (1 - lambda))`, the exact count variance of
    /// the discretized process.
    pub fn count_variance(&self) -> f64 {
        self.eigvals.iter().map(|&l| l * (1.0 - l)).sum()
    }

    /// Draws only the Bernoulli selection stage; its size is the full-window
    /// count of a sample with the same seed.
    pub fn sample_count(&self, seed: SeedPair) -> usize {
        let mut rng = seed.rng();
        self.select(&mut rng).len()
    }

    fn select(&self, rng: &mut ChaCha12Rng) -> Vec<usize> {
        (0..self.eigvals.len())
            .filter(|&i| rng.gen_range(0.0..1.0) < self.eigvals[i])
            .collect()
    }

    /// One configuration: Bernoulli selection, then sequential projection
    /// sampling over the grid. Points sit at the centers of their grid cells.
    pub fn sample(&self, seed: SeedPair) -> Result<PointConfiguration, LabError> {
        let window = WindowSpec::interval(self.n)?;
        let mut rng = seed.rng();
        let chosen = self.select(&mut rng);
        let k = chosen.len();
        let mg = self.num_grid;
        if k == 0 {
            return PointConfiguration::from_points(Vec::new(), window, seed);
        }

        // Column-major working copy of the chosen eigenvectors.
        let mut cols: Vec<Vec<f64>> = chosen.iter().map(|&i| self.eigvecs[i].clone()).collect();
        let mut row_norms = vec![0.0f64; mg];
        for col in &cols {
            for (s, &x) in row_norms.iter_mut().zip(col) {
                *s += x * x;
            }
        }

        let mut picks = Vec::with_capacity(k);
        for step in 0..k {
            let live = k - step;
            if step % 64 == 63 {
                // Refresh the norms; they only accumulate rounding error.
                row_norms.iter_mut().for_each(|s| *s = 0.0);
                for col in &cols {
                    for (s, &x) in row_norms.iter_mut().zip(col) {
                        *s += x * x;
                    }
                }
            }
            let total: f64 = row_norms.iter().sum();
            debug_assert!((total - live as f64).abs() < 1e-6 * live as f64 + 1e-9);
            let mut u = rng.gen_range(0.0..total.max(f64::MIN_POSITIVE));
            let mut j = mg - 1;
            for (idx, &s) in row_norms.iter().enumerate() {
                if u < s {
                    j = idx;
                    break;
                }
                u -= s;
            }
            picks.push(j);

            // Rotate the columns so the j-th row concentrates in column 0,
            // then drop that column: the remaining columns span the part of
            // the projection vanishing at j.
            let phi: Vec<f64> = cols.iter().map(|c| c[j]).collect();
            let norm = phi.iter().map(|x| x * x).sum::<f64>().sqrt();
            if live == 1 {
                break;
            }
            let mut v = phi;
            v[0] += norm.copysign(v[0]);
            let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if vn > 0.0 {
                v.iter_mut().for_each(|x| *x /= vn);
                // t = B v (length M), then B -= 2 t v^T.
                let mut t = vec![0.0f64; mg];
                for (c, col) in cols.iter().enumerate() {
                    let vc = v[c];
                    if vc != 0.0 {
                        for (ti, &x) in t.iter_mut().zip(col) {
                            *ti += vc * x;
                        }
                    }
                }
                for (c, col) in cols.iter_mut().enumerate() {
                    let vc = 2.0 * v[c];
                    if vc != 0.0 {
                        for (x, &ti) in col.iter_mut().zip(&t) {
                            *x -= vc * ti;
                        }
                    }
                }
            }
            // Column 0 is now the direction fixed by the pick; remove it and
            // update the row norms it carried.
            let dropped = cols.swap_remove(0);
            for (s, &x) in row_norms.iter_mut().zip(&dropped) {
                *s = (*s - x * x).max(0.0);
            }
            row_norms[j] = 0.0;
        }

        let step = 1.0 / self.m as f64;
        let points: Vec<f64> = picks.iter().map(|&j| (j as f64 + 0.5) * step).collect();
        PointConfiguration::from_points(points, window, seed)
    }
}

/// Samples one sine-kernel configuration; the spectral decomposition for the
/// window size is cached across calls.
pub fn sample_sine_dpp(
    window: &WindowSpec,
    m: u32,
    seed: SeedPair,
) -> Result<PointConfiguration, LabError> {
    crate::samplers::expect_topology(window, Topology::Interval, "sine-kernel sampler")?;
    SineDppSampler::prepare(window.n, m)?.sample(seed)
}

fn sampler_cache() -> &'static Mutex<HashMap<(u64, u32), Arc<SineDppSampler>>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u32), Arc<SineDppSampler>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Symmetric Toeplitz matrix applied through a circulant embedding of size
/// `2M` with cached FFT of the symbol.
struct ToeplitzMultiplier {
    size: usize,
    symbol_fft: Vec<Complex<f64>>,
    fft: Arc<dyn rustfft::Fft<f64>>,
    ifft: Arc<dyn rustfft::Fft<f64>>,
}

impl std::fmt::Debug for ToeplitzMultiplier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ToeplitzMultiplier(size={})", self.size)
    }
}

impl ToeplitzMultiplier {
    fn sine_kernel(size: usize, m: u32) -> Self {
        let first_col: Vec<f64> = (0..size)
            .map(|d| {
                if d == 0 {
                    1.0 / m as f64
                } else {
                    let x = std::f64::consts::PI * d as f64;
                    (x / m as f64).sin() / x
                }
            })
            .collect();
        Self::new(&first_col)
    }

    fn new(first_col: &[f64]) -> Self {
        let size = first_col.len();
        let ext = 2 * size;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(ext);
        let ifft = planner.plan_fft_inverse(ext);
        let mut symbol: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); ext];
        for (d, &v) in first_col.iter().enumerate() {
            symbol[d] = Complex::new(v, 0.0);
            if d > 0 {
                symbol[ext - d] = Complex::new(v, 0.0);
            }
        }
        fft.process(&mut symbol);
        Self { size, symbol_fft: symbol, fft, ifft }
    }

    fn multiply(&self, v: &[f64]) -> Vec<f64> {
        let ext = 2 * self.size;
        let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); ext];
        for (b, &x) in buf.iter_mut().zip(v) {
            *b = Complex::new(x, 0.0);
        }
        self.fft.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.symbol_fft) {
            *b *= s;
        }
        self.ifft.process(&mut buf);
        buf[..self.size].iter().map(|c| c.re / ext as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::summarize;

    #[test]
    fn toeplitz_multiply_matches_direct() {
        let col = [0.5, 0.2, -0.1, 0.05];
        let t = ToeplitzMultiplier::new(&col);
        let v = [1.0, -2.0, 0.5, 3.0];
        let fast = t.multiply(&v);
        for i in 0..4usize {
            let direct: f64 = (0..4).map(|j| col[i.abs_diff(j)] * v[j]).sum();
            assert!((fast[i] - direct).abs() < 1e-12, "{i}: {} vs {direct}", fast[i]);
        }
    }

    #[test]
    fn eigenvalues_match_dense_solver() {
        use nalgebra::DMatrix;
        let s = SineDppSampler::prepare(4.0, 16).unwrap();
        let mg = 64;
        let mut dense = DMatrix::zeros(mg, mg);
        for i in 0..mg {
            for j in 0..mg {
                let d = i.abs_diff(j);
                dense[(i, j)] = if d == 0 {
                    1.0 / 16.0
                } else {
                    (std::f64::consts::PI * d as f64 / 16.0).sin() / (std::f64::consts::PI * d as f64)
                };
            }
        }
        let mut reference = dense.symmetric_eigen().eigenvalues.as_slice().to_vec();
        reference.sort_by(|a, b| b.total_cmp(a));
        for (i, &l) in s.eigenvalues().iter().enumerate() {
            assert!(
                (l - reference[i].clamp(0.0, 1.0)).abs() < 1e-8,
                "eigenvalue {i}: {l} vs {}",
                reference[i]
            );
        }
        // Intensity: trace equals n.
        assert!((s.mean_count() - 4.0).abs() < 1e-6);
    }

    #[test]
    fn unit_window_mean_count() {
        // E[count] on [0,1] is the kernel trace = 1; checked over 1e4
        // replicas through the full sampler.
        let s = SineDppSampler::prepare(1.0, 32).unwrap();
        let counts: Vec<f64> = (0..10_000)
            .map(|r| s.sample(SeedPair::new(31, r)).unwrap().len() as f64)
            .collect();
        let m = summarize(&counts).mean;
        assert!((m - 1.0).abs() < 0.02, "mean count {m}");
    }

    #[test]
    fn placement_marginals_match_kernel_diagonal() {
        // E[#points in grid cell i] = A_ii = 1/m: the placement stage must
        // preserve the intensity cell by cell.
        let s = SineDppSampler::prepare(2.0, 8).unwrap();
        let runs = 30_000usize;
        let mut occupancy = vec![0u32; 16];
        for r in 0..runs {
            let c = s.sample(SeedPair::new(77, r as u64)).unwrap();
            for &x in c.points() {
                occupancy[(x * 8.0) as usize] += 1;
            }
        }
        for (i, &o) in occupancy.iter().enumerate() {
            let freq = o as f64 / runs as f64;
            // Binomial SE ~ sqrt(p/runs) with p = 1/8.
            let se = (0.125f64 * 0.875 / runs as f64).sqrt();
            assert!((freq - 0.125).abs() < 5.0 * se, "cell {i}: freq {freq}");
        }
    }

    #[test]
    fn sample_count_matches_full_sample() {
        let s = SineDppSampler::prepare(4.0, 16).unwrap();
        for r in 0..50 {
            let seed = SeedPair::new(9, r);
            assert_eq!(s.sample_count(seed), s.sample(seed).unwrap().len());
        }
    }

    #[test]
    fn points_are_distinct_grid_centers() {
        let s = SineDppSampler::prepare(8.0, 16).unwrap();
        let c = s.sample(SeedPair::new(4, 2)).unwrap();
        for w in c.points().windows(2) {
            assert!(w[1] - w[0] >= 1.0 / 16.0 - 1e-9, "{w:?}");
        }
    }
}
