//! Pole representation of the LPC filter and the McAdams angle warp.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::roots::monic_roots;
use super::StageError;
use crate::scalar::Real;

/// Largest tolerated imaginary residue of reconstructed coefficients in
/// double precision. Other scalars scale it by their machine epsilon.
pub const CONJUGATE_RESIDUE_LIMIT: f64 = 1e-9;

fn residue_limit<T: Real>() -> T {
    let ratio = (T::epsilon() / T::lit(f64::EPSILON)).max(T::one());
    T::lit(CONJUGATE_RESIDUE_LIMIT) * ratio
}

/// One pole of `1/A(z)`. Complex poles are stored once, in the upper half
/// plane; the conjugate partner is implied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pole<T> {
    pub magnitude: T,
    /// Radians in `[0, π]`; exactly `0` or `π` for real poles.
    pub angle: T,
    pub is_real: bool,
}

impl<T: Real> Pole<T> {
    pub fn real(value: T) -> Self {
        let angle = if value < T::zero() { T::PI() } else { T::zero() };
        Self { magnitude: value.abs(), angle, is_real: true }
    }

    /// Complex pole `r·e^{jφ}` with `φ ∈ (0, π)`.
    pub fn complex(magnitude: T, angle: T) -> Self {
        Self { magnitude, angle, is_real: false }
    }

    /// The upper-half-plane representative as a complex number.
    pub fn to_complex(self) -> Complex<T> {
        if self.is_real {
            let v = if self.angle == T::zero() { self.magnitude } else { -self.magnitude };
            Complex::new(v, T::zero())
        } else {
            Complex::from_polar(self.magnitude, self.angle)
        }
    }

    /// Number of roots of `A(z)` this pole stands for.
    pub fn multiplicity(&self) -> usize {
        if self.is_real {
            1
        } else {
            2
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleSet<T> {
    pub poles: Vec<Pole<T>>,
}

impl<T: Real> PoleSet<T> {
    pub fn new(poles: Vec<Pole<T>>) -> Self {
        Self { poles }
    }

    /// Filter order: real poles plus twice the complex representatives.
    pub fn order(&self) -> usize {
        self.poles.iter().map(Pole::multiplicity).sum()
    }

    pub fn real_count(&self) -> usize {
        self.poles.iter().filter(|p| p.is_real).count()
    }

    pub fn complex_count(&self) -> usize {
        self.poles.len() - self.real_count()
    }

    /// Every root of `A(z)`, conjugates included.
    pub fn expanded_roots(&self) -> Vec<Complex<T>> {
        let mut out = Vec::with_capacity(self.order());
        for p in &self.poles {
            let z = p.to_complex();
            out.push(z);
            if !p.is_real {
                out.push(z.conj());
            }
        }
        out
    }

    pub fn max_magnitude(&self) -> T {
        self.poles.iter().map(|p| p.magnitude).fold(T::zero(), T::max)
    }
}

/// Roots of `A(z) = 1 - Σ a_k z^-k`, i.e. of `z^p - a_1 z^(p-1) - ... - a_p`.
pub fn find_poles<T: Real>(coefficients: &[T]) -> Result<PoleSet<T>, StageError> {
    let monic: Vec<T> = coefficients.iter().map(|&a| -a).collect();
    let roots = monic_roots(&monic)?;
    let poles = roots
        .into_iter()
        .filter(|z| z.im >= T::zero())
        .map(|z| {
            if z.im == T::zero() {
                Pole::real(z.re)
            } else {
                Pole::complex(z.norm(), z.arg())
            }
        })
        .collect();
    Ok(PoleSet::new(poles))
}

/// Raises each complex pole angle to the power `alpha`; magnitudes and real
/// poles pass through untouched.
///
/// The warped angle is confined to `[min(ε, φ), max(π - ε, φ)]`: it never moves
/// onto the real axis or past Nyquist, and `alpha = 1` is an exact identity.
pub fn mcadams_transform<T: Real>(poles: &PoleSet<T>, alpha: T, clamp_eps: T) -> PoleSet<T> {
    let warped = poles
        .poles
        .iter()
        .map(|&p| {
            if p.is_real {
                return p;
            }
            let lo = clamp_eps.min(p.angle);
            let hi = (T::PI() - clamp_eps).max(p.angle);
            let angle = p.angle.powf(alpha).max(lo).min(hi);
            Pole { angle, ..p }
        })
        .collect();
    PoleSet::new(warped)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction<T> {
    /// Predictor coefficients `ã_1..ã_p`.
    pub coefficients: Vec<T>,
    /// Largest imaginary part seen while expanding the root product.
    pub max_imag_residue: T,
}

/// Multiplies `Π (1 - z_k w)` over the conjugate-closed root set in complex
/// arithmetic and reads off the real predictor coefficients.
pub fn poles_to_coefficients<T: Real>(poles: &PoleSet<T>) -> Result<Reconstruction<T>, StageError> {
    let roots = poles.expanded_roots();
    let mut poly = vec![Complex::new(T::zero(), T::zero()); roots.len() + 1];
    poly[0] = Complex::new(T::one(), T::zero());
    for (deg, z) in roots.iter().enumerate() {
        for k in (1..=deg + 1).rev() {
            let prev = poly[k - 1];
            poly[k] = poly[k] - prev * z;
        }
    }
    let max_imag_residue = poly.iter().map(|c| c.im.abs()).fold(T::zero(), T::max);
    if !(max_imag_residue < residue_limit::<T>()) {
        return Err(StageError::ConjugateAsymmetry(max_imag_residue.as_f64()));
    }
    let coefficients = poly[1..].iter().map(|c| -c.re).collect();
    Ok(Reconstruction { coefficients, max_imag_residue })
}
