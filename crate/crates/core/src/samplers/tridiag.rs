//! Symmetric tridiagonal eigensolver: Sturm-count bisection for selected
//! eigenvalues plus inverse iteration for eigenvectors. Positive off-diagonal
//! entries make every eigenvalue simple, which keeps inverse iteration
//! well-conditioned; a Gram-Schmidt pass guards accidental near-clusters.

use crate::error::LabError;

#[derive(Debug, Clone)]
pub struct SymmetricTridiagonal {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl SymmetricTridiagonal {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self, LabError> {
        if offdiag.len() + 1 != diag.len() || diag.is_empty() {
            return Err(LabError::EigenSolver(format!(
                "tridiagonal shape mismatch: {} diagonal, {} off-diagonal",
                diag.len(),
                offdiag.len()
            )));
        }
        Ok(Self { diag, offdiag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    fn scale(&self) -> f64 {
        let d = self.diag.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        let e = self.offdiag.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        (d + 2.0 * e).max(1e-300)
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = 1e-300 + 1e-40 * self.scale() * self.scale();
        let mut count = 0usize;
        let mut d = 1.0f64;
        for i in 0..self.dim() {
            let e2 = if i == 0 { 0.0 } else { self.offdiag[i - 1] * self.offdiag[i - 1] };
            d = self.diag[i] - x - e2 / d;
            if d.abs() < pivmin {
                d = -pivmin;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k` largest eigenpairs in descending eigenvalue order.
    pub fn eigen_top(&self, k: usize) -> Result<Vec<(f64, Vec<f64>)>, LabError> {
        let n = self.dim();
        let k = k.min(n);
        let scale = self.scale();
        let (mut glo, mut ghi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let r = if i == 0 { 0.0 } else { self.offdiag[i - 1].abs() }
                + if i + 1 < n { self.offdiag[i].abs() } else { 0.0 };
            glo = glo.min(self.diag[i] - r);
            ghi = ghi.max(self.diag[i] + r);
        }
        glo -= 1.0;
        ghi += 1.0;

        let mut out: Vec<(f64, Vec<f64>)> = Vec::with_capacity(k);
        for i in 0..k {
            // Bisection for the i-th largest eigenvalue: the smallest x with
            // count_below(x) >= n - i.
            let want = n - i;
            let (mut lo, mut hi) = (glo, ghi);
            for _ in 0..90 {
                let mid = 0.5 * (lo + hi);
                if self.count_below(mid) >= want {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-14 * scale {
                    break;
                }
            }
            let lambda = 0.5 * (lo + hi);
            let mut v = self.inverse_iteration(lambda, i)?;
            // Orthogonalize against neighbours with nearly equal eigenvalue.
            for (lj, vj) in &out {
                if (lj - lambda).abs() < 1e-8 * scale {
                    let dot: f64 = v.iter().zip(vj).map(|(a, b)| a * b).sum();
                    for (a, b) in v.iter_mut().zip(vj) {
                        *a -= dot * b;
                    }
                }
            }
            normalize(&mut v);
            // Rayleigh quotient sharpens the bisected eigenvalue.
            let lambda = self.rayleigh(&v);
            out.push((lambda, v));
        }
        Ok(out)
    }

    fn rayleigh(&self, v: &[f64]) -> f64 {
        let n = self.dim();
        let mut num = 0.0;
        for i in 0..n {
            let mut tv = self.diag[i] * v[i];
            if i > 0 {
                tv += self.offdiag[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                tv += self.offdiag[i] * v[i + 1];
            }
            num += v[i] * tv;
        }
        num
    }

    fn residual(&self, lambda: f64, v: &[f64]) -> f64 {
        let n = self.dim();
        let mut r2 = 0.0;
        for i in 0..n {
            let mut tv = (self.diag[i] - lambda) * v[i];
            if i > 0 {
                tv += self.offdiag[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                tv += self.offdiag[i] * v[i + 1];
            }
            r2 += tv * tv;
        }
        r2.sqrt()
    }

    fn inverse_iteration(&self, lambda: f64, salt: usize) -> Result<Vec<f64>, LabError> {
        let n = self.dim();
        let scale = self.scale();
        // Deterministic pseudo-random start vector.
        let mut state = 0x9e3779b97f4a7c15u64 ^ (salt as u64).wrapping_mul(0xbf58476d1ce4e5b9);
        let mut v: Vec<f64> = (0..n)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect();
        normalize(&mut v);
        for _ in 0..8 {
            let mut w = solve_shifted(&self.diag, &self.offdiag, lambda, &v);
            normalize(&mut w);
            v = w;
            if self.residual(lambda, &v) <= 1e-11 * scale {
                return Ok(v);
            }
        }
        if self.residual(lambda, &v) <= 1e-7 * scale {
            return Ok(v);
        }
        Err(LabError::EigenSolver(format!(
            "inverse iteration stalled at eigenvalue {lambda}: residual {}",
            self.residual(lambda, &v)
        )))
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v {
            *x /= norm;
        }
    }
}

/// Solves `(T - lambda I) x = rhs` by Gaussian elimination with partial
/// pivoting (row swaps introduce one extra superdiagonal of fill-in).
fn solve_shifted(diag: &[f64], offdiag: &[f64], lambda: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    if n == 1 {
        let d = diag[0] - lambda;
        let d = if d.abs() < 1e-300 { 1e-300 } else { d };
        return vec![rhs[0] / d];
    }
    let mut a: Vec<f64> = diag.iter().map(|d| d - lambda).collect(); // main
    let mut b: Vec<f64> = offdiag.to_vec(); // super
    let mut c: Vec<f64> = offdiag.to_vec(); // sub
    let mut d2 = vec![0.0f64; n]; // second super (fill-in)
    let mut x: Vec<f64> = rhs.to_vec();

    for i in 0..n - 1 {
        if c[i].abs() > a[i].abs() {
            // Swap rows i and i+1.
            x.swap(i, i + 1);
            std::mem::swap(&mut a[i], &mut c[i]);
            let t = b[i];
            b[i] = a[i + 1];
            a[i + 1] = t;
            if i + 1 < n - 1 {
                d2[i] = b[i + 1];
                b[i + 1] = 0.0;
            }
        }
        let piv = if a[i].abs() < 1e-300 { 1e-300f64.copysign(a[i]) } else { a[i] };
        a[i] = piv;
        let m = c[i] / piv;
        a[i + 1] -= m * b[i];
        if i + 1 < n - 1 {
            b[i + 1] -= m * d2[i];
        }
        x[i + 1] -= m * x[i];
    }
    // Back substitution.
    let last = n - 1;
    let piv = if a[last].abs() < 1e-300 { 1e-300f64.copysign(a[last]) } else { a[last] };
    x[last] /= piv;
    if n >= 2 {
        x[last - 1] = (x[last - 1] - b[last - 1] * x[last]) / a[last - 1];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (x[i] - b[i] * x[i + 1] - d2[i] * x[i + 2]) / a[i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> SymmetricTridiagonal {
        // Eigenvalues of tridiag(diag=2, off=-1) of size n are
        // 2 - 2 cos(pi k / (n+1)).
        let n = 12;
        SymmetricTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap()
    }

    #[test]
    fn counts_match_closed_form_spectrum() {
        let t = toy();
        let n = t.dim();
        let eig: Vec<f64> = (1..=n)
            .map(|k| 2.0 - 2.0 * (std::f64::consts::PI * k as f64 / (n as f64 + 1.0)).cos())
            .collect();
        assert_eq!(t.count_below(0.0), 0);
        assert_eq!(t.count_below(10.0), n);
        let mid = 0.5 * (eig[4] + eig[5]);
        assert_eq!(t.count_below(mid), 5);
    }

    #[test]
    fn top_eigenpairs_match_closed_form() {
        let t = toy();
        let n = t.dim();
        let pairs = t.eigen_top(5).unwrap();
        for (i, (lambda, v)) in pairs.iter().enumerate() {
            let k = n - i; // largest eigenvalue is k = n
            let expect = 2.0 - 2.0 * (std::f64::consts::PI * k as f64 / (n as f64 + 1.0)).cos();
            assert!((lambda - expect).abs() < 1e-10, "i={i}: {lambda} vs {expect}");
            assert!(t.residual(*lambda, v) < 1e-9);
        }
        // Orthonormality.
        for i in 0..pairs.len() {
            for j in 0..=i {
                let dot: f64 = pairs[i].1.iter().zip(&pairs[j].1).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot.abs() - expect).abs() < 1e-8, "({i},{j}) dot {dot}");
            }
        }
    }

    #[test]
    fn matches_dense_solver_on_random_matrices() {
        use nalgebra::DMatrix;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5150);
        for _ in 0..10 {
            let n = rng.gen_range(5..60);
            let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let off: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.1..2.0)).collect();
            let t = SymmetricTridiagonal::new(diag.clone(), off.clone()).unwrap();

            let mut dense = DMatrix::zeros(n, n);
            for i in 0..n {
                dense[(i, i)] = diag[i];
                if i + 1 < n {
                    dense[(i, i + 1)] = off[i];
                    dense[(i + 1, i)] = off[i];
                }
            }
            let mut reference = dense.clone().symmetric_eigen().eigenvalues.as_slice().to_vec();
            reference.sort_by(|a, b| b.total_cmp(a));

            let k = (n / 2).max(2);
            let pairs = t.eigen_top(k).unwrap();
            for (i, (lambda, v)) in pairs.iter().enumerate() {
                assert!(
                    (lambda - reference[i]).abs() < 1e-9,
                    "eigenvalue {i}: {lambda} vs {}",
                    reference[i]
                );
                assert!(t.residual(*lambda, v) < 1e-8);
            }
        }
    }
}
