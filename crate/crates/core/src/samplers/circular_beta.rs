//! Circular beta-ensemble eigenangles through the sparse CMV construction.
//!
//! The ensemble of `N` angles with density proportional to
//! `prod_{j<k} |e^{i a_j} - e^{i a_k}|^beta` is realized by independent
//! Verblunsky coefficients (Killip-Nenciu): `|alpha_k|^2 ~ Beta(1,
//! beta (N-k-1)/2)` with uniform phase for `k < N-1`, and `alpha_{N-1}`
//! uniform on the unit circle. The eigenangles are the spectrum of the CMV
//! matrix `C = L M`, a pentadiagonal unitary.
//!
//! Angles are extracted with an inertia-based counting function rather than
//! a dense eigensolver: for the arc centered at `mu` with half-width `h`,
//! the number of eigenangles inside equals the number of eigenvalues of the
//! Hermitian band matrix `Re(e^{-i mu} C)` above `cos h`, available from an
//! `O(N)` banded LDL^H factorization. Counting is monotone in the arc, so
//! bisection can neither miss nor double-count angles - clustered spectra
//! (small beta) are handled exactly.

use crate::error::LabError;
use crate::seed::SeedPair;
use crate::window::{PointConfiguration, WindowSpec};
use rand::Rng;
use rustfft::num_complex::Complex;

const TAU: f64 = 2.0 * std::f64::consts::PI;

type C64 = Complex<f64>;

/// One sampled Verblunsky path and its CMV band.
pub struct CircularBetaSampler {
    n: usize,
    alphas: Vec<C64>,
    band: CmvBand,
}

/// Pentadiagonal storage of the CMV matrix: `lo1[i] = C[i+1][i]`,
/// `up2[i] = C[i][i+2]`, and so on.
struct CmvBand {
    diag: Vec<C64>,
    lo1: Vec<C64>,
    lo2: Vec<C64>,
    up1: Vec<C64>,
    up2: Vec<C64>,
}

impl CircularBetaSampler {
    pub fn draw(n: usize, beta: f64, seed: SeedPair) -> Result<Self, LabError> {
        if n < 2 {
            return Err(LabError::InvalidModel(format!("ensemble size {n} must be >= 2")));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(LabError::InvalidModel(format!("beta={beta} must be > 0")));
        }
        let mut rng = seed.rng();
        let mut alphas = Vec::with_capacity(n);
        for k in 0..n - 1 {
            let nu = beta * (n - k - 1) as f64;
            let u: f64 = rng.gen_range(0.0..1.0);
            let r2 = (1.0 - u.powf(2.0 / nu)).min(1.0 - 1e-15);
            let phase: f64 = rng.gen_range(0.0..TAU);
            alphas.push(C64::from_polar(r2.sqrt(), phase));
        }
        let last_phase: f64 = rng.gen_range(0.0..TAU);
        alphas.push(C64::from_polar(1.0, last_phase));
        let band = cmv_band(&alphas);
        Ok(Self { n, alphas, band })
    }

    /// Number of eigenangles in the open arc `(mu - h, mu + h)`:
    /// eigenvalues of `Re(e^{-i mu} C)` above `cos h`.
    fn count_arc(&self, mu: f64, h: f64) -> usize {
        debug_assert!((0.0..=std::f64::consts::PI).contains(&h));
        self.band.eigs_above(mu, h.cos())
    }

    /// Number of eigenangles in `(0, theta]`.
    pub fn count_in_angle(&self, theta: f64) -> Result<usize, LabError> {
        if theta <= 0.0 {
            return Ok(0);
        }
        if theta >= TAU {
            return Ok(self.n);
        }
        Ok(self.count_arc(0.5 * theta, 0.5 * theta))
    }

    /// All `N` eigenangles in `[0, 2 pi)`, ascending, located by bisection
    /// of the counting function to absolute precision ~1e-10.
    pub fn eigenangles(&self) -> Result<Vec<f64>, LabError> {
        let n = self.n;
        let total = self.count_in_angle(TAU)?;
        if total != n {
            return Err(LabError::EigenSolver(format!(
                "counting function sees {total} eigenangles, expected {n}"
            )));
        }
        let tol = 1e-10;
        let mut roots = Vec::with_capacity(n);
        // Stack of brackets (lo, hi, count(0,lo], count(0,hi]).
        let mut stack: Vec<(f64, f64, usize, usize)> = vec![(0.0, TAU, 0, n)];
        while let Some((lo, hi, flo, fhi)) = stack.pop() {
            let inside = fhi - flo;
            if inside == 0 {
                continue;
            }
            if hi - lo < tol {
                let mid = 0.5 * (lo + hi);
                for _ in 0..inside {
                    roots.push(mid % TAU);
                }
                continue;
            }
            let mid = 0.5 * (lo + hi);
            let fmid = if mid >= TAU {
                n
            } else {
                self.count_arc(0.5 * mid, 0.5 * mid)
            };
            debug_assert!(flo <= fmid && fmid <= fhi, "count not monotone");
            stack.push((lo, mid, flo, fmid));
            stack.push((mid, hi, fmid, fhi));
        }
        roots.sort_by(|a, b| a.total_cmp(b));
        debug_assert_eq!(roots.len(), n);
        Ok(roots)
    }

    /// Relative magnitude of the paraorthogonal polynomial at `e^{i theta}`,
    /// evaluated by the Szego recursion with running normalization. Zero at
    /// eigenangles, order one in between; independent of the CMV band, so it
    /// serves as a cross-check oracle.
    pub fn paraorthogonal_residual(&self, theta: f64) -> f64 {
        let z = C64::from_polar(1.0, theta);
        let mut phi = C64::new(1.0, 0.0);
        let mut phi_star = C64::new(1.0, 0.0);
        for &a in &self.alphas[..self.n - 1] {
            let next = z * phi - a.conj() * phi_star;
            let next_star = phi_star - a * z * phi;
            phi = next;
            phi_star = next_star;
            // On the circle |phi| = |phi_star| != 0 while |alpha| < 1, so
            // normalizing by either keeps the recursion scaled.
            let scale = phi.norm().max(phi_star.norm());
            if scale > 0.0 {
                phi /= scale;
                phi_star /= scale;
            }
        }
        // Final boundary step: |phi_N| <= 2 |phi*_{N-1}|, and the reflected
        // polynomial shares its modulus with phi_N on the circle, so the
        // previous level is the right normalizer.
        let last = self.alphas[self.n - 1];
        let phi_n = z * phi - last.conj() * phi_star;
        phi_n.norm() / (2.0 * phi_star.norm().max(1e-300))
    }
}

/// CMV matrix `C = L M` from Verblunsky coefficients (the last one on the
/// unit circle), stored as five diagonals.
fn cmv_band(alphas: &[C64]) -> CmvBand {
    let n = alphas.len();
    let rho = |k: usize| (1.0 - alphas[k].norm_sqr()).max(0.0).sqrt();
    // Theta_k block rows: [[conj(a_k), rho_k], [rho_k, -a_k]] on (k, k+1);
    // the block containing index N-1 degenerates to the 1x1 (conj(a_{N-1}))
    // in whichever factor owns it.
    let mut l = Tridiag::identity(n);
    let mut m = Tridiag::identity(n);
    for k in (0..n).step_by(2) {
        l.put_block(k, n, alphas, rho);
    }
    m.diag[0] = C64::new(1.0, 0.0);
    for k in (1..n).step_by(2) {
        m.put_block(k, n, alphas, rho);
    }
    multiply_tridiag(&l, &m)
}

struct Tridiag {
    diag: Vec<C64>,
    lo: Vec<C64>,
    up: Vec<C64>,
}

impl Tridiag {
    fn identity(n: usize) -> Self {
        Self {
            diag: vec![C64::new(1.0, 0.0); n],
            lo: vec![C64::new(0.0, 0.0); n.saturating_sub(1)],
            up: vec![C64::new(0.0, 0.0); n.saturating_sub(1)],
        }
    }

    fn put_block(&mut self, k: usize, n: usize, alphas: &[C64], rho: impl Fn(usize) -> f64) {
        if k + 1 < n {
            self.diag[k] = alphas[k].conj();
            self.up[k] = C64::new(rho(k), 0.0);
            self.lo[k] = C64::new(rho(k), 0.0);
            self.diag[k + 1] = -alphas[k];
        } else {
            // Degenerate final block: the unimodular boundary coefficient.
            self.diag[k] = alphas[k].conj();
        }
    }

    fn get(&self, i: usize, j: usize) -> C64 {
        if i == j {
            self.diag[i]
        } else if j + 1 == i {
            self.lo[j]
        } else if i + 1 == j {
            self.up[i]
        } else {
            C64::new(0.0, 0.0)
        }
    }
}

fn multiply_tridiag(l: &Tridiag, m: &Tridiag) -> CmvBand {
    let n = l.diag.len();
    let zero = C64::new(0.0, 0.0);
    let mut band = CmvBand {
        diag: vec![zero; n],
        lo1: vec![zero; n.saturating_sub(1)],
        lo2: vec![zero; n.saturating_sub(2)],
        up1: vec![zero; n.saturating_sub(1)],
        up2: vec![zero; n.saturating_sub(2)],
    };
    for i in 0..n {
        let k_lo = i.saturating_sub(1);
        let k_hi = (i + 1).min(n - 1);
        for k in k_lo..=k_hi {
            let lik = l.get(i, k);
            if lik == zero {
                continue;
            }
            let j_lo = k.saturating_sub(1);
            let j_hi = (k + 1).min(n - 1);
            for j in j_lo..=j_hi {
                let v = lik * m.get(k, j);
                if v == zero {
                    continue;
                }
                match i as i64 - j as i64 {
                    0 => band.diag[i] += v,
                    1 => band.lo1[j] += v,
                    2 => band.lo2[j] += v,
                    -1 => band.up1[i] += v,
                    -2 => band.up2[i] += v,
                    _ => unreachable!("CMV product has bandwidth 2"),
                }
            }
        }
    }
    band
}

impl CmvBand {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues of `Re(e^{-i mu} C)` strictly above `x`, via
    /// the inertia of the shifted banded LDL^H factorization.
    fn eigs_above(&self, mu: f64, x: f64) -> usize {
        let n = self.dim();
        let rot = C64::from_polar(1.0, -mu);
        let rot_c = rot.conj();
        // Hermitian band H = (e^{-i mu} C + e^{i mu} C^H) / 2.
        let hd: Vec<f64> = (0..n).map(|i| (rot * self.diag[i]).re).collect();
        let h1: Vec<C64> = (0..n - 1)
            .map(|i| 0.5 * (rot * self.lo1[i] + rot_c * self.up1[i].conj()))
            .collect();
        let h2: Vec<C64> = (0..n.saturating_sub(2))
            .map(|i| 0.5 * (rot * self.lo2[i] + rot_c * self.up2[i].conj()))
            .collect();

        // LDL^H of H - x I; count positive pivots. Tiny pivots are clamped
        // negative (the count is then exact for a nearby matrix, the usual
        // spectrum-slicing convention).
        let pivmin = 1e-14 * (2.0 + x.abs());
        let mut d_prev2 = 0.0f64; // d[j-2]
        let mut d_prev1 = 0.0f64; // d[j-1]
        let mut l1_prev = C64::new(0.0, 0.0); // L[j][j-1]
        let mut l2_prev = C64::new(0.0, 0.0); // L[j][j-2] -> shifted each row
        let mut l2_cur = C64::new(0.0, 0.0); // L[j+1][j-1]
        let mut positive = 0usize;
        for j in 0..n {
            let mut d = hd[j] - x;
            if j >= 1 {
                d -= l1_prev.norm_sqr() * d_prev1;
            }
            if j >= 2 {
                d -= l2_prev.norm_sqr() * d_prev2;
            }
            if d.abs() < pivmin {
                d = -pivmin;
            }
            if d > 0.0 {
                positive += 1;
            }
            let l1_next = if j + 1 < n {
                let mut num = h1[j];
                if j >= 1 {
                    num -= l2_cur * l1_prev.conj() * d_prev1;
                }
                num / d
            } else {
                C64::new(0.0, 0.0)
            };
            let l2_next = if j + 2 < n { h2[j] / d } else { C64::new(0.0, 0.0) };

            d_prev2 = d_prev1;
            d_prev1 = d;
            l1_prev = l1_next;
            l2_prev = l2_cur;
            l2_cur = l2_next;
        }
        positive
    }
}

/// Samples the circular beta-ensemble of `n_points` eigenangles, rescaled by
/// `N / 2 pi` to a torus of circumference `n_points`; exactly `n_points`
/// points.
pub fn sample_circular_beta(
    n_points: usize,
    beta: f64,
    seed: SeedPair,
) -> Result<PointConfiguration, LabError> {
    let sampler = CircularBetaSampler::draw(n_points, beta, seed)?;
    let angles = sampler.eigenangles()?;
    let scale = n_points as f64 / TAU;
    let points: Vec<f64> = angles
        .iter()
        .map(|&a| (a * scale).min(n_points as f64 * (1.0 - 1e-16)))
        .collect();
    let window = WindowSpec::torus(n_points as f64)?;
    PointConfiguration::from_points(points, window, seed)
}

/// Count of points in the torus arc `[0, t)` of a circular beta-ensemble
/// sample: one inertia query instead of a full extraction. Matches
/// [`sample_circular_beta`] with the same seed.
pub fn circular_beta_arc_count(
    n_points: usize,
    beta: f64,
    t: f64,
    seed: SeedPair,
) -> Result<usize, LabError> {
    if !(0.0..=n_points as f64).contains(&t) {
        return Err(LabError::InvalidArgument(format!(
            "arc length {t} outside [0, {n_points}]"
        )));
    }
    let sampler = CircularBetaSampler::draw(n_points, beta, seed)?;
    sampler.count_in_angle(t / n_points as f64 * TAU)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::summarize;

    #[test]
    fn cmv_matrix_is_unitary() {
        let s = CircularBetaSampler::draw(9, 1.3, SeedPair::new(5, 0)).unwrap();
        let n = s.n;
        let b = &s.band;
        // Dense C from the band, then C C^H = I.
        let mut c = vec![vec![C64::new(0.0, 0.0); n]; n];
        for i in 0..n {
            c[i][i] = b.diag[i];
            if i + 1 < n {
                c[i + 1][i] = b.lo1[i];
                c[i][i + 1] = b.up1[i];
            }
            if i + 2 < n {
                c[i + 2][i] = b.lo2[i];
                c[i][i + 2] = b.up2[i];
            }
        }
        for i in 0..n {
            for j in 0..n {
                let mut dot = C64::new(0.0, 0.0);
                for k in 0..n {
                    dot += c[i][k] * c[j][k].conj();
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).norm() < 1e-12, "({i},{j}): {dot}");
            }
        }
    }

    #[test]
    fn eigenangles_zero_paraorthogonal_polynomial() {
        // Roots from the inertia bisection must be zeros of the Szego
        // recursion polynomial, an independent route.
        for (n, beta, seed) in [(6usize, 2.0, 1u64), (12, 0.5, 2), (20, 4.0, 3)] {
            let s = CircularBetaSampler::draw(n, beta, SeedPair::new(seed, 0)).unwrap();
            let angles = s.eigenangles().unwrap();
            assert_eq!(angles.len(), n);
            for &a in &angles {
                let r = s.paraorthogonal_residual(a);
                // Clustered roots (small beta) leave a residual proportional
                // to the bisection tolerance over the cluster spacing.
                assert!(r < 5e-3, "n={n} beta={beta}: residual {r} at angle {a}");
            }
            // Control: the middle of the widest gap is not a root.
            let (mut probe, mut widest) = (0.0, 0.0);
            for w in angles.windows(2) {
                if w[1] - w[0] > widest {
                    widest = w[1] - w[0];
                    probe = 0.5 * (w[0] + w[1]);
                }
            }
            assert!(s.paraorthogonal_residual(probe) > 0.05, "gap midpoint looks like a root");
        }
    }

    #[test]
    fn exact_point_count_on_torus() {
        for (n, beta) in [(2usize, 2.0), (7, 1.0), (32, 4.0), (64, 0.5)] {
            let c = sample_circular_beta(n, beta, SeedPair::new(1, 0)).unwrap();
            assert_eq!(c.len(), n, "n={n} beta={beta}");
            assert!(c.points().iter().all(|&x| (0.0..n as f64).contains(&x)));
        }
    }

    #[test]
    fn arc_count_matches_full_sample() {
        for r in 0..100 {
            let seed = SeedPair::new(33, r);
            let c = sample_circular_beta(16, 2.0, seed).unwrap();
            let fast = circular_beta_arc_count(16, 2.0, 5.0, seed).unwrap();
            assert_eq!(fast, c.count_in(0.0, 5.0), "replica {r}");
        }
    }

    #[test]
    fn mean_arc_count_is_rotation_invariant() {
        let t = 3.0;
        let counts: Vec<f64> = (0..20_000)
            .map(|r| circular_beta_arc_count(12, 2.0, t, SeedPair::new(8, r)).unwrap() as f64)
            .collect();
        let s = summarize(&counts);
        assert!((s.mean - t).abs() < 4.0 * s.se_mean + 0.01, "mean {}", s.mean);
    }

    #[test]
    fn cue_arc_variance_matches_kernel_quadrature() {
        // beta = 2 is the determinantal CUE: for an arc A of angular width a,
        // Var = N a / 2pi - int_A int_A |K_N|^2 with
        // K_N(u) = sin(N u / 2) / (2 pi sin(u / 2)).
        let n = 8usize;
        let a = std::f64::consts::PI; // half circle = torus arc length 4
        let kernel2 = |u: f64| {
            let s = (0.5 * u).sin();
            if s.abs() < 1e-12 {
                (n as f64 / TAU).powi(2)
            } else {
                ((n as f64 * u / 2.0).sin() / (TAU * s)).powi(2)
            }
        };
        let nodes = 200_000;
        let h = a / nodes as f64;
        let double: f64 = (0..nodes)
            .map(|i| {
                let u = (i as f64 + 0.5) * h;
                (a - u) * kernel2(u)
            })
            .sum::<f64>()
            * h
            * 2.0;
        let exact_var = n as f64 * a / TAU - double;

        let counts: Vec<f64> = (0..100_000)
            .map(|r| {
                circular_beta_arc_count(n, 2.0, 4.0, SeedPair::new(17, r)).unwrap() as f64
            })
            .collect();
        let s = summarize(&counts);
        assert!(
            (s.var - exact_var).abs() < 0.04 * exact_var,
            "MC var {} vs kernel {exact_var}",
            s.var
        );
    }

    #[test]
    fn higher_beta_is_more_rigid() {
        // Var of the half-arc count decreases with beta.
        let var_for = |beta: f64, salt: u64| {
            let counts: Vec<f64> = (0..20_000)
                .map(|r| {
                    circular_beta_arc_count(16, beta, 8.0, SeedPair::new(salt, r)).unwrap() as f64
                })
                .collect();
            summarize(&counts).var
        };
        let v1 = var_for(1.0, 40);
        let v4 = var_for(4.0, 41);
        assert!(v4 < v1, "v1={v1} v4={v4}");
    }
}
