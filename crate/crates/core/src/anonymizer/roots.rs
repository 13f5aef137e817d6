//! Polynomial roots as eigenvalues of a balanced companion matrix, found with
//! the Francis double-shift QR iteration, then polished with one Newton step.

use num_complex::Complex;

use super::StageError;
use crate::scalar::Real;

const MAX_QR_ITERATIONS: usize = 60;

/// Relative residual `|P(z)| / Σ|c_k||z|^(p-k)` a root must satisfy after refinement.
pub const ROOT_TOLERANCE: f64 = 1e-6;

/// Square matrix with 1-based indexing; row/column 0 are unused.
struct Mat1<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> Mat1<T> {
    fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); (n + 1) * (n + 1)] }
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat1<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * (self.n + 1) + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat1<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * (self.n + 1) + j]
    }
}

/// Roots of the monic polynomial `z^p + c[0] z^(p-1) + ... + c[p-1]`.
///
/// Complex roots come back in exact conjugate pairs; real roots have an
/// imaginary part of exactly zero.
pub fn monic_roots<T: Real>(c: &[T]) -> Result<Vec<Complex<T>>, StageError> {
    let p = c.len();
    if c.iter().any(|x| !x.is_finite()) {
        return Err(StageError::RootFindingFailure("non-finite coefficient".into()));
    }
    // Exact zero trailing coefficients are roots at the origin; deflate them
    // so the relative residual test is not applied at z = 0.
    let zeros = c.iter().rev().take_while(|&&x| x == T::zero()).count();
    if zeros > 0 {
        let mut roots = monic_roots(&c[..p - zeros])?;
        roots.extend(std::iter::repeat(Complex::new(T::zero(), T::zero())).take(zeros));
        return Ok(roots);
    }
    match p {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![Complex::new(-c[0], T::zero())]),
        _ => {}
    }
    let mut a = Mat1::zeros(p);
    for j in 1..=p {
        a[(1, j)] = -c[j - 1];
    }
    for i in 2..=p {
        a[(i, i - 1)] = T::one();
    }
    balance(&mut a);
    let eig = hessenberg_qr(&mut a)?;

    let mut roots = Vec::with_capacity(p);
    for z in eig {
        if z.im == T::zero() {
            let x = newton_real(c, z.re);
            roots.push(Complex::new(x, T::zero()));
        } else if z.im > T::zero() {
            let w = newton_complex(c, z);
            // Keep the root in the upper half plane so the pair stays a pair.
            let w = if w.im > T::zero() { w } else { z };
            roots.push(w);
            roots.push(w.conj());
        }
    }
    if roots.len() != p {
        return Err(StageError::RootFindingFailure(format!(
            "{} roots recovered for degree {p}",
            roots.len()
        )));
    }
    let tol = T::lit(ROOT_TOLERANCE);
    for z in &roots {
        let rel = relative_residual(c, *z);
        if !(rel < tol) {
            return Err(StageError::RootFindingFailure(format!(
                "residual {} at root {}{:+}i",
                rel.as_f64(),
                z.re.as_f64(),
                z.im.as_f64()
            )));
        }
    }
    Ok(roots)
}

/// `|P(z)|` divided by the magnitude sum of its terms.
pub fn relative_residual<T: Real>(c: &[T], z: Complex<T>) -> T {
    let (value, _) = eval_with_derivative(c, z);
    let az = z.norm();
    let mut scale = T::one();
    for &ck in c {
        scale = scale * az + ck.abs();
    }
    value.norm() / scale
}

fn eval_with_derivative<T: Real>(c: &[T], z: Complex<T>) -> (Complex<T>, Complex<T>) {
    let mut p = Complex::new(T::one(), T::zero());
    let mut dp = Complex::new(T::zero(), T::zero());
    for &ck in c {
        dp = dp * z + p;
        p = p * z + Complex::new(ck, T::zero());
    }
    (p, dp)
}

fn newton_complex<T: Real>(c: &[T], z: Complex<T>) -> Complex<T> {
    let (p, dp) = eval_with_derivative(c, z);
    if dp.norm() == T::zero() {
        return z;
    }
    let cand = z - p / dp;
    let (pc, _) = eval_with_derivative(c, cand);
    if cand.re.is_finite() && cand.im.is_finite() && pc.norm() < p.norm() {
        cand
    } else {
        z
    }
}

fn newton_real<T: Real>(c: &[T], x: T) -> T {
    let z = newton_complex(c, Complex::new(x, T::zero()));
    z.re
}

/// Diagonal similarity scaling by powers of two so rows and columns have comparable norms.
fn balance<T: Real>(a: &mut Mat1<T>) {
    let n = a.n;
    let radix = T::lit(2.0);
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = T::zero();
            let mut c = T::zero();
            for j in 1..=n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c != T::zero() && r != T::zero() {
                let mut g = r / radix;
                let mut f = T::one();
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
                if (c + r) / f < T::lit(0.95) * s {
                    done = false;
                    let g = T::one() / f;
                    for j in 1..=n {
                        a[(i, j)] *= g;
                    }
                    for j in 1..=n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
    }
}

fn sign<T: Real>(a: T, b: T) -> T {
    if b >= T::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Eigenvalues of an upper Hessenberg matrix (destroyed in the process).
fn hessenberg_qr<T: Real>(a: &mut Mat1<T>) -> Result<Vec<Complex<T>>, StageError> {
    let n = a.n;
    let mut wr = vec![T::zero(); n + 1];
    let mut wi = vec![T::zero(); n + 1];
    let zero = T::zero();
    let half = T::lit(0.5);

    let mut anorm = zero;
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += a[(i, j)].abs();
        }
    }
    let mut nn = n;
    let mut t = zero;
    while nn >= 1 {
        let mut its = 0;
        loop {
            // Look for a single small subdiagonal element.
            let mut l = nn;
            while l >= 2 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == zero {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() + s == s {
                    a[(l, l - 1)] = zero;
                    break;
                }
                l -= 1;
            }
            let mut x = a[(nn, nn)];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = zero;
                nn -= 1;
            } else {
                let mut y = a[(nn - 1, nn - 1)];
                let mut w = a[(nn, nn - 1)] * a[(nn - 1, nn)];
                if l == nn - 1 {
                    let p = half * (y - x);
                    let q = p * p + w;
                    let mut z = q.abs().sqrt();
                    x += t;
                    if q >= zero {
                        z = p + sign(z, p);
                        wr[nn - 1] = x + z;
                        wr[nn] = x + z;
                        if z != zero {
                            wr[nn] = x - w / z;
                        }
                        wi[nn - 1] = zero;
                        wi[nn] = zero;
                    } else {
                        wr[nn - 1] = x + p;
                        wr[nn] = x + p;
                        wi[nn - 1] = -z;
                        wi[nn] = z;
                    }
                    nn -= 2;
                } else {
                    if its == MAX_QR_ITERATIONS {
                        return Err(StageError::RootFindingFailure(
                            "QR iteration did not converge".into(),
                        ));
                    }
                    if its == 10 || its == 20 || its == 40 {
                        // Exceptional shift.
                        t += x;
                        for i in 1..=nn {
                            a[(i, i)] -= x;
                        }
                        let s = a[(nn, nn - 1)].abs() + a[(nn - 1, nn - 2)].abs();
                        x = T::lit(0.75) * s;
                        y = x;
                        w = T::lit(-0.4375) * s * s;
                    }
                    its += 1;
                    let (mut p, mut q, mut r);
                    let mut z;
                    let mut m = nn - 2;
                    loop {
                        z = a[(m, m)];
                        r = x - z;
                        let s = y - z;
                        p = (r * s - w) / a[(m + 1, m)] + a[(m, m + 1)];
                        q = a[(m + 1, m + 1)] - z - r - s;
                        r = a[(m + 2, m + 1)];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in (m + 2)..=nn {
                        a[(i, i - 2)] = zero;
                        if i != m + 2 {
                            a[(i, i - 3)] = zero;
                        }
                    }
                    let mut k = m;
                    while k + 1 <= nn {
                        if k != m {
                            p = a[(k, k - 1)];
                            q = a[(k + 1, k - 1)];
                            r = zero;
                            if k != nn - 1 {
                                r = a[(k + 2, k - 1)];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != zero {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != zero {
                            if k == m {
                                if l != m {
                                    a[(k, k - 1)] = -a[(k, k - 1)];
                                }
                            } else {
                                a[(k, k - 1)] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                                if k != nn - 1 {
                                    pp += r * a[(k + 2, j)];
                                    a[(k + 2, j)] -= pp * z;
                                }
                                a[(k + 1, j)] -= pp * y;
                                a[(k, j)] -= pp * x;
                            }
                            let mmin = nn.min(k + 3);
                            for i in l..=mmin {
                                let mut pp = x * a[(i, k)] + y * a[(i, k + 1)];
                                if k != nn - 1 {
                                    pp += z * a[(i, k + 2)];
                                    a[(i, k + 2)] -= pp * r;
                                }
                                a[(i, k + 1)] -= pp * q;
                                a[(i, k)] -= pp;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if nn < 2 || l + 1 >= nn {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Complex::new(wr[i], wi[i])).collect())
}
