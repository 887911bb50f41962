//! Complex polynomial roots from the eigenvalues of a balanced companion
//! matrix, polished by Newton steps on the original polynomial.

use nalgebra::DMatrix;

use crate::field_model::Complex;

/// Evaluates `Σ a_k z^k` and its derivative.
pub fn eval_with_derivative(coeffs: &[Complex], z: Complex) -> (Complex, Complex) {
    let mut p = Complex::new(0.0, 0.0);
    let mut dp = Complex::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Roots of `Σ_{k=0}^{n} a_k z^k` (ascending coefficients, `a_n ≠ 0`).
///
/// Returns `None` when the eigenvalue iteration does not converge.
pub fn polynomial_roots(coeffs: &[Complex]) -> Option<Vec<Complex>> {
    let n = coeffs.len().checked_sub(1)?;
    let lead = coeffs[n];
    if lead.norm() == 0.0 {
        return None;
    }
    if n == 0 {
        return Some(Vec::new());
    }
    // Zero roots factor out exactly.
    let zeros = coeffs.iter().take_while(|c| c.norm() == 0.0).count();
    let reduced = &coeffs[zeros..];
    let m = reduced.len() - 1;
    let mut roots = vec![Complex::new(0.0, 0.0); zeros];
    if m == 0 {
        return Some(roots);
    }
    if m == 1 {
        roots.push(-reduced[0] / reduced[1]);
        return Some(roots);
    }

    let mut companion = DMatrix::<Complex>::zeros(m, m);
    for i in 1..m {
        companion[(i, i - 1)] = Complex::new(1.0, 0.0);
    }
    for i in 0..m {
        companion[(i, m - 1)] = -reduced[i] / reduced[m];
    }
    balance(&mut companion);
    let eig = companion.schur().eigenvalues()?;

    for z0 in eig.iter() {
        let mut z = *z0;
        let (mut pz, _) = eval_with_derivative(reduced, z);
        // Newton polish; a step is kept only when it lowers |p|.
        for _ in 0..3 {
            let (_, dp) = eval_with_derivative(reduced, z);
            if dp.norm() == 0.0 {
                break;
            }
            let next = z - pz / dp;
            let (pn, _) = eval_with_derivative(reduced, next);
            if pn.norm() < pz.norm() {
                z = next;
                pz = pn;
            } else {
                break;
            }
        }
        roots.push(z);
    }
    Some(roots)
}

/// Diagonal similarity balancing (Parlett–Reinsch, radix 2).
fn balance(a: &mut DMatrix<Complex>) {
    let n = a.nrows();
    let radix = 2.0f64;
    let sqrdx = radix * radix;
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].norm();
                    r += a[(i, j)].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut g = r / radix;
            let mut f = 1.0;
            let s = c + r;
            while c < g {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= g;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// Ascending coefficients of the monic polynomial `Π (z - r_i)`.
pub fn expand_roots(roots: &[Complex]) -> Vec<Complex> {
    let mut coeffs = vec![Complex::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex::new(0.0, 0.0); coeffs.len() + 1];
        for (k, c) in coeffs.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= c * r;
        }
        coeffs = next;
    }
    coeffs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn sorted(mut v: Vec<Complex>) -> Vec<Complex> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    #[test]
    fn quadratic_roots() {
        // (z + 2)(z + 0.5) = z² + 2.5 z + 1
        let r = sorted(polynomial_roots(&[c(1.0, 0.0), c(2.5, 0.0), c(1.0, 0.0)]).unwrap());
        assert!((r[0] - c(-2.0, 0.0)).norm() < 1e-13);
        assert!((r[1] - c(-0.5, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn expansion_round_trip() {
        let roots = vec![c(0.3, -0.2), c(-1.5, 0.7), c(2.0, 2.0), c(0.0, 1e-3), c(40.0, -3.0)];
        let coeffs = expand_roots(&roots);
        let found = polynomial_roots(&coeffs).unwrap();
        for r in &roots {
            let best = found.iter().map(|f| (f - r).norm() / r.norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-10, "root {r} missed by {best}");
        }
    }

    #[test]
    fn zero_roots_are_exact() {
        let r = polynomial_roots(&[c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(r.iter().filter(|z| z.norm() == 0.0).count(), 2);
        assert!(r.iter().any(|z| (z - c(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn vanishing_leading_coefficient_is_rejected() {
        assert!(polynomial_roots(&[c(1.0, 0.0), c(0.0, 0.0)]).is_none());
    }
}
