//! 2×2 complex Hermitian matrices and single-qubit states.
//!
//! Everything here is closed-form: eigenvalues come from the trace/discriminant
//! formula, eigenvectors from the better-conditioned row of `M - λI`, and
//! expectations are evaluated directly from the matrix entries so that no
//! imaginary residue ever appears.

use std::ops::{Add, Neg, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type ComplexScalar<T> = Complex<T>;

/// Column vector in `C²`.
pub type Vec2<T> = [Complex<T>; 2];

/// Default absolute tolerance on eigenvalues for positivity checks.
pub const DEFAULT_PSD_TOL: f64 = 1e-9;

/// `(a11 - a22)² + |a12|²` below this is treated as a multiple of the identity.
const DEGENERATE_GAP_SQ: f64 = 1e-24;

/// A 2×2 Hermitian matrix stored as its upper triangle.
///
/// The lower off-diagonal entry is always `conj(a12)`; it is never stored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hermitian2<T> {
    a11: T,
    a22: T,
    a12: Complex<T>,
}

/// Ascending eigendecomposition of a [`Hermitian2`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenPair2<T> {
    pub lo: T,
    pub hi: T,
    pub vec_lo: Vec2<T>,
    pub vec_hi: Vec2<T>,
}

impl<T: Real> Hermitian2<T> {
    pub fn new(a11: T, a22: T, a12: Complex<T>) -> Result<Self> {
        if a11.is_finite() && a22.is_finite() && a12.re.is_finite() && a12.im.is_finite() {
            Ok(Self { a11, a22, a12 })
        } else {
            Err(Error::InvalidMatrix)
        }
    }

    /// Real symmetric matrix `[[a11, a12], [a12, a22]]`.
    pub fn real(a11: T, a22: T, a12: T) -> Result<Self> {
        Self::new(a11, a22, Complex::new(a12, T::zero()))
    }

    pub fn diag(d1: T, d2: T) -> Result<Self> {
        Self::real(d1, d2, T::zero())
    }

    pub fn identity() -> Self {
        Self {
            a11: T::one(),
            a22: T::one(),
            a12: Complex::new(T::zero(), T::zero()),
        }
    }

    pub fn zero() -> Self {
        Self {
            a11: T::zero(),
            a22: T::zero(),
            a12: Complex::new(T::zero(), T::zero()),
        }
    }

    /// Rank-one projector-like matrix `v v†`.
    pub fn outer(v: &Vec2<T>) -> Self {
        Self {
            a11: v[0].norm_sqr(),
            a22: v[1].norm_sqr(),
            a12: v[0] * v[1].conj(),
        }
    }

    #[inline]
    pub fn a11(&self) -> T {
        self.a11
    }

    #[inline]
    pub fn a22(&self) -> T {
        self.a22
    }

    #[inline]
    pub fn a12(&self) -> Complex<T> {
        self.a12
    }

    #[inline]
    pub fn a21(&self) -> Complex<T> {
        self.a12.conj()
    }

    /// Entry `(i, j)` with zero-based indices.
    pub fn entry(&self, i: usize, j: usize) -> Complex<T> {
        match (i, j) {
            (0, 0) => Complex::new(self.a11, T::zero()),
            (1, 1) => Complex::new(self.a22, T::zero()),
            (0, 1) => self.a12,
            (1, 0) => self.a12.conj(),
            _ => panic!("index ({i}, {j}) out of range for a 2x2 matrix"),
        }
    }

    pub fn trace(&self) -> T {
        self.a11 + self.a22
    }

    pub fn det(&self) -> T {
        self.a11 * self.a22 - self.a12.norm_sqr()
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            a11: self.a11 * s,
            a22: self.a22 * s,
            a12: self.a12 * s,
        }
    }

    pub fn is_diagonal(&self, tol: T) -> bool {
        self.a12.norm() <= tol
    }

    /// `M·M`, Hermitian by construction.
    pub fn square(&self) -> Self {
        let off = self.a12.norm_sqr();
        Self {
            a11: self.a11 * self.a11 + off,
            a22: self.a22 * self.a22 + off,
            a12: self.a12 * (self.a11 + self.a22),
        }
    }

    pub fn apply(&self, v: &Vec2<T>) -> Vec2<T> {
        [
            v[0] * self.a11 + self.a12 * v[1],
            self.a12.conj() * v[0] + v[1] * self.a22,
        ]
    }

    /// `U† M U` for a 2×2 unitary given row-major.
    pub fn conjugate_by(&self, u: &[[Complex<T>; 2]; 2]) -> Self {
        let col = |j: usize| [u[0][j], u[1][j]];
        let (c0, c1) = (col(0), col(1));
        let mc0 = self.apply(&c0);
        let mc1 = self.apply(&c1);
        Self {
            a11: inner(&c0, &mc0).re,
            a22: inner(&c1, &mc1).re,
            a12: inner(&c0, &mc1),
        }
    }

    /// Smaller and larger eigenvalue, without eigenvectors.
    pub fn spectrum(&self) -> (T, T) {
        let two = T::lit(2.0);
        let mean = (self.a11 + self.a22) / two;
        let r = ((self.a11 - self.a22) / two).hypot(self.a12.norm());
        (mean - r, mean + r)
    }

    pub fn min_eig(&self) -> T {
        self.spectrum().0
    }

    pub fn max_eig(&self) -> T {
        self.spectrum().1
    }

    pub fn eig(&self) -> EigenPair2<T> {
        let two = T::lit(2.0);
        let zero = T::zero();
        let one = T::one();
        let delta = self.a11 - self.a22;
        let mean = (self.a11 + self.a22) / two;

        if delta * delta + self.a12.norm_sqr() < T::lit(DEGENERATE_GAP_SQ) {
            return EigenPair2 {
                lo: mean,
                hi: mean,
                vec_lo: [Complex::new(one, zero), Complex::new(zero, zero)],
                vec_hi: [Complex::new(zero, zero), Complex::new(one, zero)],
            };
        }

        let half = delta / two;
        let r = half.hypot(self.a12.norm());
        // Pivot on the row of (M - hi·I) whose diagonal term does not cancel.
        let raw = if half >= zero {
            [Complex::new(half + r, zero), self.a12.conj()]
        } else {
            [self.a12, Complex::new(r - half, zero)]
        };
        let vec_hi = gauge_fix(&normalize(&raw));
        let vec_lo = [-vec_hi[1].conj(), vec_hi[0].conj()];

        EigenPair2 {
            lo: mean - r,
            hi: mean + r,
            vec_lo,
            vec_hi,
        }
    }

    /// Spectral positivity: smallest eigenvalue `>= -tol`.
    pub fn is_psd(&self, tol: T) -> bool {
        self.min_eig() >= -tol
    }

    /// Positivity from diagonal entries and determinant.
    pub fn is_psd_by_minors(&self, tol: T) -> bool {
        self.a11 >= -tol
            && self.a22 >= -tol
            && self.det() >= -tol * (self.trace().abs() + T::one())
    }

    /// `<ψ|M|ψ>` for pure states, `Tr(ρM)` for mixed ones.
    pub fn expectation(&self, state: &QubitState<T>) -> T {
        match state {
            QubitState::Pure(p) => {
                let (a, b) = (p.alpha, p.beta);
                self.a11 * a.norm_sqr()
                    + self.a22 * b.norm_sqr()
                    + T::lit(2.0) * (a.conj() * self.a12 * b).re
            }
            QubitState::Mixed(rho) => {
                let r = &rho.h;
                r.a11 * self.a11 + r.a22 * self.a22 + T::lit(2.0) * (r.a12 * self.a12.conj()).re
            }
        }
    }
}

impl<T: Real> EigenPair2<T> {
    /// `lo·v_lo v_lo† + hi·v_hi v_hi†`.
    pub fn reconstruct(&self) -> Hermitian2<T> {
        Hermitian2::outer(&self.vec_lo).scale(self.lo) + Hermitian2::outer(&self.vec_hi).scale(self.hi)
    }
}

impl<T: Real> Add for Hermitian2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            a11: self.a11 + rhs.a11,
            a22: self.a22 + rhs.a22,
            a12: self.a12 + rhs.a12,
        }
    }
}

impl<T: Real> Sub for Hermitian2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self {
            a11: self.a11 - rhs.a11,
            a22: self.a22 - rhs.a22,
            a12: self.a12 - rhs.a12,
        }
    }
}

impl<T: Real> Neg for Hermitian2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

/// `⟨u|v⟩`, antilinear in the first argument.
pub fn inner<T: Real>(u: &Vec2<T>, v: &Vec2<T>) -> Complex<T> {
    u[0].conj() * v[0] + u[1].conj() * v[1]
}

pub fn norm<T: Real>(v: &Vec2<T>) -> T {
    v[0].norm().hypot(v[1].norm())
}

fn normalize<T: Real>(v: &Vec2<T>) -> Vec2<T> {
    let n = norm(v);
    [v[0] / n, v[1] / n]
}

/// Removes the global phase: first component real and nonnegative, or the
/// second one when the first vanishes.
pub fn gauge_fix<T: Real>(v: &Vec2<T>) -> Vec2<T> {
    let pivot = if v[0].norm() > T::epsilon() { v[0] } else { v[1] };
    let n = pivot.norm();
    if n == T::zero() {
        return *v;
    }
    let phase = pivot.conj() / n;
    [v[0] * phase, v[1] * phase]
}

/// Normalized pure qubit state `α|0⟩ + β|1⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PureState<T> {
    alpha: Complex<T>,
    beta: Complex<T>,
}

impl<T: Real> PureState<T> {
    /// Requires `|α|² + |β|² = 1` within the scalar's norm tolerance.
    pub fn new(alpha: Complex<T>, beta: Complex<T>) -> Result<Self> {
        check_finite_vec(&[alpha, beta])?;
        let deviation = (alpha.norm_sqr() + beta.norm_sqr() - T::one()).abs();
        if deviation > T::norm_tol() {
            return Err(Error::Unnormalized {
                deviation: deviation.as_f64(),
            });
        }
        Ok(Self { alpha, beta })
    }

    /// Rescales `(α, β)` to unit norm.
    pub fn normalized(alpha: Complex<T>, beta: Complex<T>) -> Result<Self> {
        check_finite_vec(&[alpha, beta])?;
        let n = norm(&[alpha, beta]);
        if n <= T::epsilon() {
            return Err(Error::Unnormalized { deviation: 1.0 });
        }
        Ok(Self {
            alpha: alpha / n,
            beta: beta / n,
        })
    }

    /// `cos θ|0⟩ + sin θ|1⟩`.
    pub fn from_angle(theta: T) -> Self {
        Self {
            alpha: Complex::new(theta.cos(), T::zero()),
            beta: Complex::new(theta.sin(), T::zero()),
        }
    }

    /// Unit vector, gauge-fixed up to global phase by the caller if needed.
    pub fn from_unit_vector(v: Vec2<T>) -> Result<Self> {
        Self::new(v[0], v[1])
    }

    pub fn alpha(&self) -> Complex<T> {
        self.alpha
    }

    pub fn beta(&self) -> Complex<T> {
        self.beta
    }

    pub fn vector(&self) -> Vec2<T> {
        [self.alpha, self.beta]
    }
}

fn check_finite_vec<T: Real>(v: &[Complex<T>]) -> Result<()> {
    if v.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidMatrix)
    }
}

/// Density matrix: unit trace, positive semidefinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Density2<T> {
    h: Hermitian2<T>,
}

impl<T: Real> Density2<T> {
    pub fn new(h: Hermitian2<T>) -> Result<Self> {
        let tol = T::norm_tol();
        let trace_dev = (h.trace() - T::one()).abs();
        if trace_dev > tol {
            return Err(Error::InvalidDensity(format!(
                "trace deviates from 1 by {:e}",
                trace_dev.as_f64()
            )));
        }
        let lo = h.min_eig();
        if lo < -tol {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {:e}",
                lo.as_f64()
            )));
        }
        Ok(Self { h })
    }

    pub fn maximally_mixed() -> Self {
        Self {
            h: Hermitian2::identity().scale(T::lit(0.5)),
        }
    }

    /// `ρ = ½(I + x·X + y·Y + z·Z)`; requires `x² + y² + z² <= 1`.
    pub fn from_bloch(x: T, y: T, z: T) -> Result<Self> {
        let half = T::lit(0.5);
        let h = Hermitian2::new(half * (T::one() + z), half * (T::one() - z), Complex::new(x * half, -y * half))?;
        Self::new(h)
    }

    pub fn matrix(&self) -> &Hermitian2<T> {
        &self.h
    }

    pub fn bloch(&self) -> [T; 3] {
        let two = T::lit(2.0);
        [two * self.h.a12.re, -two * self.h.a12.im, self.h.a11 - self.h.a22]
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> T {
        self.h.a11 * self.h.a11 + self.h.a22 * self.h.a22 + T::lit(2.0) * self.h.a12.norm_sqr()
    }

    fn mix(&self, p: T) -> Self {
        let keep = T::one() - p;
        let half_p = p * T::lit(0.5);
        Self {
            h: Hermitian2 {
                a11: keep * self.h.a11 + half_p,
                a22: keep * self.h.a22 + half_p,
                a12: self.h.a12 * keep,
            },
        }
    }
}

/// Pure or mixed single-qubit state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QubitState<T> {
    Pure(PureState<T>),
    Mixed(Density2<T>),
}

impl<T: Real> QubitState<T> {
    pub fn pure(alpha: Complex<T>, beta: Complex<T>) -> Result<Self> {
        PureState::new(alpha, beta).map(Self::Pure)
    }

    pub fn pure_real(alpha: T, beta: T) -> Result<Self> {
        Self::pure(Complex::new(alpha, T::zero()), Complex::new(beta, T::zero()))
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, Self::Pure(_))
    }

    pub fn as_pure(&self) -> Option<&PureState<T>> {
        match self {
            Self::Pure(p) => Some(p),
            Self::Mixed(_) => None,
        }
    }

    pub fn density(&self) -> Density2<T> {
        match self {
            Self::Pure(p) => Density2 {
                h: Hermitian2::outer(&p.vector()),
            },
            Self::Mixed(rho) => *rho,
        }
    }

    /// Depolarizing channel `(1-p)ρ + p·I/2`.
    pub fn depolarize(&self, p: T) -> Result<Density2<T>> {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::param("p", p.as_f64(), "[0, 1]"));
        }
        Ok(self.density().mix(p))
    }

    /// Applies the real rotation `[[cos θ, -sin θ], [sin θ, cos θ]]`, i.e.
    /// turns a linear polarization by `θ`.
    pub fn rotated(&self, theta: T) -> Self {
        let (s, c) = theta.sin_cos();
        let zero = T::zero();
        let u = [
            [Complex::new(c, zero), Complex::new(-s, zero)],
            [Complex::new(s, zero), Complex::new(c, zero)],
        ];
        match self {
            Self::Pure(p) => Self::Pure(PureState {
                alpha: p.alpha * c - p.beta * s,
                beta: p.alpha * s + p.beta * c,
            }),
            Self::Mixed(rho) => {
                // R ρ Rᵀ = (Rᵀ)† ρ Rᵀ
                let ut = [[u[0][0], u[1][0]], [u[0][1], u[1][1]]];
                Self::Mixed(Density2 {
                    h: rho.h.conjugate_by(&ut),
                })
            }
        }
    }

    /// Average of [`rotated`](Self::rotated) over a zero-mean Gaussian angle
    /// with standard deviation `sigma` (radians).
    pub fn jitter_averaged(&self, sigma: T) -> Density2<T> {
        let [x, y, z] = self.density().bloch();
        let k = (T::lit(-2.0) * sigma * sigma).exp();
        let half = T::lit(0.5);
        Density2 {
            h: Hermitian2 {
                a11: half * (T::one() + k * z),
                a22: half * (T::one() - k * z),
                a12: Complex::new(k * x * half, -y * half),
            },
        }
    }
}
