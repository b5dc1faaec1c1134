//! Eigenvalues of dense non-symmetric real matrices: diagonal balancing,
//! Householder reduction to upper Hessenberg form, then Francis double-shift
//! QR iteration down to real Schur form.

use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn norm(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Largest accepted matrix order.
    pub max_order: usize,
    /// QR sweeps allowed per eigenvalue before giving up.
    pub max_iterations: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            max_order: 4000,
            max_iterations: 100,
        }
    }
}

/// All eigenvalues of a square matrix, unordered.
pub fn eigen_spectrum(matrix: &DenseMatrix) -> Result<Vec<Complex>> {
    eigen_spectrum_with(matrix, EigenOptions::default())
}

pub fn eigen_spectrum_with(matrix: &DenseMatrix, options: EigenOptions) -> Result<Vec<Complex>> {
    if !matrix.is_square() {
        return Err(Error::DimensionMismatch {
            context: "eigenvalue matrix columns",
            expected: matrix.rows(),
            actual: matrix.cols(),
        });
    }
    let n = matrix.rows();
    if n > options.max_order {
        return Err(Error::MatrixTooLarge {
            order: n,
            limit: options.max_order,
        });
    }
    if let Some(i) = matrix.as_slice().iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| matrix[(i, j)]).collect())
        .collect();
    balance(&mut a);
    hessenberg(&mut a);
    hqr(&mut a, options.max_iterations)
}

/// Spectral radius `max |lambda|`; zero for an empty matrix.
pub fn spectral_radius(eigenvalues: &[Complex]) -> f64 {
    eigenvalues.iter().map(Complex::norm).fold(0.0, f64::max)
}

// Similarity scaling by powers of two so that row and column norms match.
fn balance(a: &mut [Vec<f64>]) {
    const RADIX: f64 = 2.0;
    let n = a.len();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[i][j] *= inv;
                }
                for row in a.iter_mut() {
                    row[i] *= f;
                }
            }
        }
    }
}

// Householder reduction to upper Hessenberg form; entries below the first
// subdiagonal are zeroed explicitly.
fn hessenberg(a: &mut [Vec<f64>]) {
    let n = a.len();
    if n < 3 {
        return;
    }
    let high = n - 1;
    let mut ort = vec![0.0; n];
    for m in 1..high {
        let scale: f64 = (m..=high).map(|i| a[i][m - 1].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut h = 0.0;
        for i in (m..=high).rev() {
            ort[i] = a[i][m - 1] / scale;
            h += ort[i] * ort[i];
        }
        let mut g = h.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        h -= ort[m] * g;
        ort[m] -= g;

        for j in m..n {
            let mut f = 0.0;
            for i in (m..=high).rev() {
                f += ort[i] * a[i][j];
            }
            f /= h;
            for i in m..=high {
                a[i][j] -= f * ort[i];
            }
        }
        for row in a.iter_mut() {
            let mut f = 0.0;
            for j in (m..=high).rev() {
                f += ort[j] * row[j];
            }
            f /= h;
            for j in m..=high {
                row[j] -= f * ort[j];
            }
        }
        a[m][m - 1] = scale * g;
        for row in a.iter_mut().skip(m + 1) {
            row[m - 1] = 0.0;
        }
    }
}

// Francis double-shift QR on an upper Hessenberg matrix (destroys `a`).
fn hqr(a: &mut [Vec<f64>], max_iterations: usize) -> Result<Vec<Complex>> {
    let n = a.len();
    let mut wr = vec![Complex::new(0.0, 0.0); n];
    if n == 0 {
        return Ok(wr);
    }
    let eps = f64::EPSILON;
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0usize;
        loop {
            let nu = nn as usize;
            // look for a single small subdiagonal element
            let mut l = nu;
            while l > 0 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() <= eps * s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nu][nu];
            if l == nu {
                wr[nu] = Complex::new(x + t, 0.0);
                nn -= 1;
                break;
            }
            let mut y = a[nu - 1][nu - 1];
            let mut w = a[nu][nu - 1] * a[nu - 1][nu];
            if l == nu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + z.copysign(p);
                    wr[nu - 1] = Complex::new(x + z, 0.0);
                    wr[nu] = Complex::new(if z != 0.0 { x - w / z } else { x + z }, 0.0);
                } else {
                    wr[nu] = Complex::new(x + p, -z);
                    wr[nu - 1] = Complex::new(x + p, z);
                }
                nn -= 2;
                break;
            }
            if its >= max_iterations {
                return Err(Error::NoConvergence {
                    index: nu,
                    iterations: its,
                });
            }
            if its > 0 && its.is_multiple_of(10) {
                // exceptional shift
                t += x;
                for (i, row) in a.iter_mut().enumerate().take(nu + 1) {
                    row[i] -= x;
                }
                let s = a[nu][nu - 1].abs() + a[nu - 1][nu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            // form the shift and look for two consecutive small subdiagonals
            let mut m = nu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[m][m];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - rr - ss;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m..nu - 1 {
                a[i + 2][i] = 0.0;
                if i != m {
                    a[i + 2][i - 1] = 0.0;
                }
            }

            // double QR step on rows l..=nu and columns m..=nu
            let mut k = m;
            while k < nu {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = if k + 1 != nu { a[k + 2][k - 1] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k + 1 != nu {
                            pp += r * a[k + 2][j];
                            a[k + 2][j] -= pp * z;
                        }
                        a[k + 1][j] -= pp * y;
                        a[k][j] -= pp * x;
                    }
                    let mmin = nu.min(k + 3);
                    for row in a.iter_mut().take(mmin + 1).skip(l) {
                        let mut pp = x * row[k] + y * row[k + 1];
                        if k + 1 != nu {
                            pp += z * row[k + 2];
                            row[k + 2] -= pp * r;
                        }
                        row[k + 1] -= pp * q;
                        row[k] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(wr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<Complex>) -> Vec<Complex> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn zero_matrix() {
        let ev = eigen_spectrum(&DenseMatrix::zeros(5, 5)).unwrap();
        assert_eq!(ev.len(), 5);
        assert!(ev.iter().all(|e| e.norm() == 0.0));
    }

    #[test]
    fn diagonal_matrix() {
        let m = DenseMatrix::from_rows(&[vec![0.5, 0.0], vec![0.0, -0.25]]);
        let ev = sorted(eigen_spectrum(&m).unwrap());
        assert_eq!(ev, vec![Complex::new(-0.25, 0.0), Complex::new(0.5, 0.0)]);
    }

    #[test]
    fn rotation_has_conjugate_pair() {
        let m = DenseMatrix::from_rows(&[vec![0.0, -2.0], vec![2.0, 0.0]]);
        let ev = sorted(eigen_spectrum(&m).unwrap());
        assert!((ev[0].im + 2.0).abs() < 1e-14 && (ev[1].im - 2.0).abs() < 1e-14);
        assert!(ev.iter().all(|e| e.re.abs() < 1e-14));
    }

    #[test]
    fn companion_matrix_roots() {
        // x^3 - 6x^2 + 11x - 6 = (x-1)(x-2)(x-3)
        let m = DenseMatrix::from_rows(&[
            vec![6.0, -11.0, 6.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ]);
        let ev = sorted(eigen_spectrum(&m).unwrap());
        for (e, want) in ev.iter().zip([1.0, 2.0, 3.0]) {
            assert!((e.re - want).abs() < 1e-10 && e.im.abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_oversized_and_non_square() {
        let opts = EigenOptions {
            max_order: 3,
            ..EigenOptions::default()
        };
        assert!(matches!(
            eigen_spectrum_with(&DenseMatrix::zeros(4, 4), opts),
            Err(Error::MatrixTooLarge { .. })
        ));
        assert!(eigen_spectrum(&DenseMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn spectral_radius_of_empty_is_zero() {
        assert_eq!(spectral_radius(&[]), 0.0);
        assert_eq!(spectral_radius(&[Complex::new(3.0, 4.0)]), 5.0);
    }
}
