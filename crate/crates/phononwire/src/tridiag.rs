//! Symmetric tridiagonal eigensolver: implicit QL with Wilkinson shifts for
//! the full spectrum, and inverse iteration through a pivoted LU for selected
//! eigenvectors. Cost is O(n^2) for all eigenvalues and O(n) per eigenvector,
//! which keeps multi-thousand-site chains cheap.

use crate::error::{Error, Result};

/// All eigenvalues of the symmetric tridiagonal matrix with diagonal `diag`
/// and off-diagonal `off`, sorted ascending.
pub fn eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if off.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            context: "tridiag eigenvalues",
            expected: n - 1,
            got: off.len(),
        });
    }
    let mut d = diag.to_vec();
    // e is padded by one slot so the rotation loop can write e[m].
    let mut e = off.to_vec();
    e.push(0.0);

    // Overflow-safe two-norm without the libm hypot call that would
    // otherwise dominate the rotation loop.
    #[inline]
    fn pythag(a: f64, b: f64) -> f64 {
        let (a, b) = (a.abs(), b.abs());
        let (big, small) = if a > b { (a, b) } else { (b, a) };
        if big == 0.0 {
            return 0.0;
        }
        let t = small / big;
        big * (1.0 + t * t).sqrt()
    }

    for l in 0..n {
        let mut iter = 0;
        loop {
            // Find the first negligible off-diagonal at or after l.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::NoConvergence {
                    routine: "tridiagonal QL",
                    detail: format!("eigenvalue {l} not isolated after 50 sweeps"),
                });
            }
            // Wilkinson shift from the leading 2x2 of the active block.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = pythag(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = pythag(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                f = (d[i] - g) * s + 2.0 * c * b;
                p = s * f;
                d[i + 1] = g + p;
                g = c * f - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Normalized eigenvector for one eigenvalue via two passes of inverse
/// iteration on the pivoted LU of `T - lambda I`.
pub fn eigenvector(diag: &[f64], off: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Err(Error::invalid("diag", "empty matrix"));
    }
    if off.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            context: "tridiag eigenvector",
            expected: n - 1,
            got: off.len(),
        });
    }
    if n == 1 {
        return Ok(vec![1.0]);
    }

    let norm_scale: f64 = diag
        .iter()
        .map(|v| v.abs())
        .chain(off.iter().map(|v| v.abs()))
        .fold(0.0, f64::max)
        .max(lambda.abs())
        .max(1.0);
    let tiny = f64::EPSILON * norm_scale;

    // Pivoted LU of the tridiagonal T - lambda I. U gains a second
    // superdiagonal from row interchanges.
    let mut p = vec![0.0; n]; // U diagonal
    let mut q = vec![0.0; n]; // U first superdiagonal
    let mut w = vec![0.0; n]; // U second superdiagonal
    let mut swapped = vec![false; n];
    let mut mult = vec![0.0; n];

    let mut u = diag[0] - lambda;
    let mut v = off[0];
    for i in 0..n - 1 {
        let a = off[i];
        if a.abs() > u.abs() {
            swapped[i] = true;
            p[i] = a;
            q[i] = diag[i + 1] - lambda;
            w[i] = if i + 1 < n - 1 { off[i + 1] } else { 0.0 };
            let m = if a != 0.0 { u / a } else { 0.0 };
            mult[i] = m;
            u = v - m * q[i];
            v = -m * w[i];
        } else {
            p[i] = if u.abs() >= tiny { u } else { tiny.copysign(u) };
            q[i] = v;
            w[i] = 0.0;
            let m = a / p[i];
            mult[i] = m;
            u = diag[i + 1] - lambda - m * v;
            v = if i + 1 < n - 1 { off[i + 1] } else { 0.0 };
        }
    }
    p[n - 1] = if u.abs() >= tiny { u } else { tiny.copysign(u) };

    let back_substitute = |x: &mut [f64]| {
        x[n - 1] /= p[n - 1];
        if n >= 2 {
            x[n - 2] = (x[n - 2] - q[n - 2] * x[n - 1]) / p[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - q[i] * x[i + 1] - w[i] * x[i + 2]) / p[i];
        }
    };
    let normalize = |x: &mut [f64]| {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in x.iter_mut() {
                *v /= norm;
            }
        }
    };

    // First pass from a uniform right-hand side, second pass re-applies the
    // saved elimination to sharpen the eigen-direction.
    let mut x = vec![1.0; n];
    back_substitute(&mut x);
    normalize(&mut x);
    for i in 0..n - 1 {
        if swapped[i] {
            x.swap(i, i + 1);
        }
        x[i + 1] -= mult[i] * x[i];
    }
    back_substitute(&mut x);
    normalize(&mut x);

    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence {
            routine: "inverse iteration",
            detail: format!("non-finite eigenvector for lambda = {lambda:.6e}"),
        });
    }
    Ok(x)
}

/// `|psi(end)|` for each given eigenvalue, where `end` is the last site.
pub fn end_amplitudes(diag: &[f64], off: &[f64], eigenvalues: &[f64]) -> Result<Vec<f64>> {
    eigenvalues
        .iter()
        .map(|&lambda| Ok(eigenvector(diag, off, lambda)?[diag.len() - 1].abs()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn clean_chain(n: usize, omega: f64, j: f64) -> (Vec<f64>, Vec<f64>) {
        (vec![omega; n], vec![j; n - 1])
    }

    /// Open-chain closed form: omega + 2 J cos(pi m / (n+1)), m = 1..n.
    fn analytic_band(n: usize, omega: f64, j: f64) -> Vec<f64> {
        let mut v: Vec<f64> = (1..=n)
            .map(|m| omega + 2.0 * j * (PI * m as f64 / (n as f64 + 1.0)).cos())
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn clean_chain_matches_cosine_band() {
        let n = 300;
        let (d, e) = clean_chain(n, 5.0, 1.3);
        let got = eigenvalues(&d, &e).unwrap();
        let want = analytic_band(n, 5.0, 1.3);
        for (g, w) in got.iter().zip(&want) {
            assert_relative_eq!(g, w, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn end_amplitude_matches_sine_profile() {
        let n = 120;
        let (d, e) = clean_chain(n, 0.0, 1.0);
        let evs = eigenvalues(&d, &e).unwrap();
        let amps = end_amplitudes(&d, &e, &evs).unwrap();
        let norm = (2.0 / (n as f64 + 1.0)).sqrt();
        for (lam, amp) in evs.iter().zip(&amps) {
            // Invert lambda = 2 cos(pi m / (n+1)) to recover the mode index.
            let m = ((lam / 2.0).acos() * (n as f64 + 1.0) / PI).round();
            let want = norm * (PI * m * n as f64 / (n as f64 + 1.0)).sin().abs();
            assert_relative_eq!(amp, &want, max_relative = 1e-8, epsilon = 1e-10);
        }
    }

    #[test]
    fn agrees_with_dense_symmetric_eigen() {
        use nalgebra::DMatrix;
        let n = 40;
        // Deterministic pseudo-random entries.
        let d: Vec<f64> = (0..n).map(|i| ((i * 2654435761 % 1000) as f64) / 100.0).collect();
        let e: Vec<f64> = (0..n - 1).map(|i| 1.0 + ((i * 40503 % 97) as f64) / 50.0).collect();
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            dense[(i, i)] = d[i];
            if i + 1 < n {
                dense[(i, i + 1)] = e[i];
                dense[(i + 1, i)] = e[i];
            }
        }
        let mut want: Vec<f64> = dense.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        want.sort_by(f64::total_cmp);
        let got = eigenvalues(&d, &e).unwrap();
        for (g, w) in got.iter().zip(&want) {
            assert_relative_eq!(g, w, max_relative = 1e-10, epsilon = 1e-9);
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal_and_complete_at_end_site() {
        let n = 120;
        let d: Vec<f64> = (0..n).map(|i| ((i * 7919 % 211) as f64) / 40.0).collect();
        let e: Vec<f64> = (0..n - 1).map(|i| 0.7 + ((i * 104729 % 53) as f64) / 60.0).collect();
        let evs = eigenvalues(&d, &e).unwrap();
        let vecs: Vec<Vec<f64>> = evs.iter().map(|&l| eigenvector(&d, &e, l).unwrap()).collect();
        // Residual and pairwise orthogonality.
        for (lam, v) in evs.iter().zip(&vecs) {
            let mut res: f64 = 0.0;
            for i in 0..n {
                let mut t = d[i] * v[i] - lam * v[i];
                if i > 0 {
                    t += e[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    t += e[i] * v[i + 1];
                }
                res = res.max(t.abs());
            }
            assert!(res < 1e-10 * (lam.abs() + 1.0), "residual {res}");
        }
        for a in 0..n {
            for b in (a + 1)..n {
                let dot: f64 = vecs[a].iter().zip(&vecs[b]).map(|(x, y)| x * y).sum();
                assert!(dot.abs() < 1e-10, "modes {a},{b} overlap {dot}");
            }
        }
        let end_sum: f64 = vecs.iter().map(|v| v[n - 1] * v[n - 1]).sum();
        assert_relative_eq!(end_sum, 1.0, max_relative = 1e-10);
    }
}
