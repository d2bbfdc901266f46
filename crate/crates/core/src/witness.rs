//! Witness triples `(A, B, state)`: operator-order verification, first and
//! second moment gaps, the classical second-moment oracle and the translation
//! of a triple into a single-photon polarization setup.

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{gauge_fix, Density2, Hermitian2, PureState, QubitState, DEFAULT_PSD_TOL};
use crate::scalar::Real;

/// A measurable quantity: Hermitian matrix plus a display label.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable<T> {
    pub m: Hermitian2<T>,
    pub label: String,
}

impl<T: Real> Observable<T> {
    pub fn new(m: Hermitian2<T>, label: impl Into<String>) -> Self {
        Self {
            m,
            label: label.into(),
        }
    }
}

/// Two observables and the state in which their moments are compared.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessTriple<T> {
    pub a: Observable<T>,
    pub b: Observable<T>,
    pub state: QubitState<T>,
}

/// Smallest eigenvalues of `A`, `B - A` and `I - B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrderingReport<T> {
    #[serde(rename = "eig_A_min")]
    pub eig_a_min: T,
    #[serde(rename = "eig_BminusA_min")]
    pub eig_b_minus_a_min: T,
    #[serde(rename = "eig_IminusB_min")]
    pub eig_i_minus_b_min: T,
    pub ordered: bool,
    pub tol: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ViolationReport<T> {
    /// `<B> - <A>` in the triple's state.
    pub first_gap: T,
    /// `<B²> - <A²>` in the triple's state.
    pub second_gap: T,
    /// Smallest eigenvalue of `B² - A²`: the most negative second gap over all states.
    #[serde(rename = "min_eig_B2A2")]
    pub min_eig_b2_a2: T,
    pub witnessed: bool,
}

impl<T: Real> WitnessTriple<T> {
    pub fn new(a: Hermitian2<T>, b: Hermitian2<T>, state: QubitState<T>) -> Self {
        Self {
            a: Observable::new(a, "A"),
            b: Observable::new(b, "B"),
            state,
        }
    }

    pub fn with_state(&self, state: QubitState<T>) -> Self {
        Self {
            state,
            ..self.clone()
        }
    }

    /// Checks `0 <= A <= B <= I` spectrally.
    pub fn check_ordering(&self, tol: T) -> OrderingReport<T> {
        let (a, b) = (self.a.m, self.b.m);
        let eig_a_min = a.min_eig();
        let eig_b_minus_a_min = (b - a).min_eig();
        let eig_i_minus_b_min = (Hermitian2::identity() - b).min_eig();
        OrderingReport {
            eig_a_min,
            eig_b_minus_a_min,
            eig_i_minus_b_min,
            ordered: eig_a_min >= -tol && eig_b_minus_a_min >= -tol && eig_i_minus_b_min >= -tol,
            tol,
        }
    }

    pub fn is_ordered(&self) -> bool {
        self.check_ordering(T::lit(DEFAULT_PSD_TOL)).ordered
    }

    /// `B² - A²`.
    pub fn second_moment_operator(&self) -> Hermitian2<T> {
        self.b.m.square() - self.a.m.square()
    }

    pub fn first_gap_at(&self, state: &QubitState<T>) -> T {
        self.b.m.expectation(state) - self.a.m.expectation(state)
    }

    pub fn second_gap_at(&self, state: &QubitState<T>) -> T {
        self.b.m.square().expectation(state) - self.a.m.square().expectation(state)
    }

    /// Second-moment gap report; `witnessed` is forced false for unordered
    /// triples (default tolerance).
    pub fn violation_report(&self) -> ViolationReport<T> {
        let second_gap = self.second_gap_at(&self.state);
        ViolationReport {
            first_gap: self.first_gap_at(&self.state),
            second_gap,
            min_eig_b2_a2: self.second_moment_operator().min_eig(),
            witnessed: self.is_ordered() && second_gap < T::zero(),
        }
    }

    /// The pure state minimizing the second gap: lower eigenvector of `B² - A²`.
    pub fn optimal_state(&self) -> QubitState<T> {
        let v = gauge_fix(&self.second_moment_operator().eig().vec_lo);
        QubitState::Pure(PureState::normalized(v[0], v[1]).expect("eigenvector has unit norm"))
    }

    /// Rotates to the eigenbasis of `B` (when `B` is not already diagonal) and
    /// removes the `U(1)×U(1)` phases so that `A` is real with a nonnegative
    /// off-diagonal and the state's first amplitude is real and nonnegative.
    pub fn gauge_fixed(&self) -> GaugeFixed<T> {
        let tiny = T::lit(1e-12);
        let zero = T::zero();
        let mut warnings = Vec::new();
        let (mut a, mut b, mut state) = (self.a.m, self.b.m, self.state);
        let mut b_rotation_deg = zero;

        if !b.is_diagonal(tiny) {
            let e = b.eig();
            let u = [[e.vec_hi[0], e.vec_lo[0]], [e.vec_hi[1], e.vec_lo[1]]];
            if e.vec_hi[1].im.abs() > tiny {
                warnings.push("B eigenbasis is not a real rotation of the H/V basis; angle uses the real part".to_string());
            }
            b_rotation_deg = e.vec_hi[1].re.atan2(e.vec_hi[0].re).to_degrees();
            a = a.conjugate_by(&u);
            b = Hermitian2::diag(e.hi, e.lo).expect("finite spectrum");
            state = apply_adjoint(&state, &u);
        }

        let off = a.a12();
        if off.norm() > tiny {
            let chi = off.arg();
            if off.im.abs() > tiny {
                warnings.push(format!(
                    "off-diagonal of A carried phase {:.6} rad; removed by diag(1, e^(-i phase))",
                    chi.as_f64()
                ));
            }
            let d = [
                [Complex::new(T::one(), zero), Complex::new(zero, zero)],
                [Complex::new(zero, zero), Complex::from_polar(T::one(), -chi)],
            ];
            a = a.conjugate_by(&d);
            // Exactly real after the phase rotation.
            a = Hermitian2::real(a.a11(), a.a22(), a.a12().norm()).expect("finite");
            state = apply_adjoint(&state, &d);
        }

        if let QubitState::Pure(p) = state {
            let v = gauge_fix(&p.vector());
            state = QubitState::Pure(PureState::normalized(v[0], v[1]).expect("unit vector"));
        }

        GaugeFixed {
            triple: WitnessTriple {
                a: Observable::new(a, self.a.label.clone()),
                b: Observable::new(b, self.b.label.clone()),
                state,
            },
            b_rotation_deg,
            warnings,
        }
    }

    /// Polarization-optics reading of the triple: `B` measured in the H/V
    /// basis, `A` in a basis rotated by `basis_rotation_deg`, state prepared
    /// as linear polarization at `state_angle_deg`.
    pub fn photon_angles(&self) -> Result<PolarizationSetup<T>> {
        if !self.state.is_pure() {
            return Err(Error::PureStateRequired);
        }
        if !self.is_ordered() {
            return Err(Error::NotOrdered);
        }
        let gf = self.gauge_fixed();
        let mut warnings = gf.warnings;
        let (a, b) = (gf.triple.a.m, gf.triple.b.m);
        let ninety = T::lit(90.0);

        let e = a.eig();
        let hi = gauge_fix(&e.vec_hi);
        let theta = hi[1].re.atan2(hi[0].re).to_degrees();
        let (basis_rotation_deg, outcome_values_a) = if theta < T::zero() {
            (theta + ninety, (e.lo, e.hi))
        } else if theta >= ninety {
            (theta - ninety, (e.lo, e.hi))
        } else {
            (theta, (e.hi, e.lo))
        };

        let p = gf.triple.state.as_pure().expect("checked pure");
        let (alpha, beta) = (p.alpha(), p.beta());
        if beta.im.abs() > T::lit(1e-9) {
            warnings.push("state is elliptically polarized; angle uses the real part of the V amplitude".to_string());
        }
        let mut state_angle_deg = beta.re.atan2(alpha.re).to_degrees();
        if state_angle_deg < T::zero() {
            state_angle_deg = state_angle_deg + T::lit(180.0);
        }

        Ok(PolarizationSetup {
            basis_rotation_deg,
            state_angle_deg,
            outcome_values_b: (b.a11(), b.a22()),
            outcome_values_a,
            b_rotation_deg: gf.b_rotation_deg,
            warnings,
        })
    }
}

fn apply_adjoint<T: Real>(state: &QubitState<T>, u: &[[Complex<T>; 2]; 2]) -> QubitState<T> {
    match state {
        QubitState::Pure(p) => {
            let v = p.vector();
            let w = [
                u[0][0].conj() * v[0] + u[1][0].conj() * v[1],
                u[0][1].conj() * v[0] + u[1][1].conj() * v[1],
            ];
            QubitState::Pure(PureState::normalized(w[0], w[1]).expect("unitary preserves norm"))
        }
        QubitState::Mixed(rho) => {
            let h = rho.matrix().conjugate_by(u);
            QubitState::Mixed(Density2::new(h).expect("unitary preserves density"))
        }
    }
}

/// Result of [`WitnessTriple::gauge_fixed`].
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeFixed<T> {
    pub triple: WitnessTriple<T>,
    /// Angle of `B`'s larger-eigenvalue vector against `(1, 0)`; zero when `B`
    /// was already diagonal.
    pub b_rotation_deg: T,
    pub warnings: Vec<String>,
}

/// Closed-form eigenvalues of `B² - A²` for `A = [[a1, ξ], [ξ*, a2]]`,
/// `B = diag(1, b)`. Returns `(minus branch, plus branch)`.
pub fn violation_eigs_closed_form<T: Real>(a1: T, a2: T, b: T, xi_abs: T) -> (T, T) {
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let xi2 = xi_abs * xi_abs;
    let base = b * b + T::one() - a1 * a1 - a2 * a2 - two * xi2;
    let d = b * b - T::one() + a1 * a1 - a2 * a2;
    let s = a1 + a2;
    let root = (d * d + four * s * s * xi2).sqrt();
    (half * (base - root), half * (base + root))
}

/// Finite-support classical model: outcome functions `f <= g` on points
/// weighted by the probability vector `rho`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalModel<T> {
    f: Vec<T>,
    g: Vec<T>,
    rho: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassicalCheck<T> {
    pub lhs: T,
    pub rhs: T,
    pub holds: bool,
}

impl<T: Real> ClassicalModel<T> {
    pub fn new(f: Vec<T>, g: Vec<T>, rho: Vec<T>) -> Result<Self> {
        if f.is_empty() || f.len() != g.len() || f.len() != rho.len() {
            return Err(Error::ClassicalModel(format!(
                "lengths differ or are empty: f={}, g={}, rho={}",
                f.len(),
                g.len(),
                rho.len()
            )));
        }
        if f.iter().chain(&g).chain(&rho).any(|x| !x.is_finite()) {
            return Err(Error::ClassicalModel("non-finite entry".into()));
        }
        if let Some(i) = rho.iter().position(|&p| p < T::zero()) {
            return Err(Error::ClassicalModel(format!("rho[{i}] is negative")));
        }
        let total = rho.iter().fold(T::zero(), |acc, &p| acc + p);
        if (total - T::one()).abs() > T::norm_tol() {
            return Err(Error::ClassicalModel(format!(
                "rho sums to {} instead of 1",
                total.as_f64()
            )));
        }
        if let Some(i) = (0..f.len()).find(|&i| !(f[i] >= T::zero() && f[i] <= g[i])) {
            return Err(Error::ClassicalModel(format!(
                "0 <= f <= g fails at point {i}: f={}, g={}",
                f[i].as_f64(),
                g[i].as_f64()
            )));
        }
        Ok(Self { f, g, rho })
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    /// `Σ ρ f²` against `Σ ρ g²`.
    pub fn second_moment_check(&self) -> ClassicalCheck<T> {
        let moment = |vals: &[T]| {
            vals.iter()
                .zip(&self.rho)
                .fold(T::zero(), |acc, (&v, &p)| acc + p * v * v)
        };
        let lhs = moment(&self.f);
        let rhs = moment(&self.g);
        ClassicalCheck {
            lhs,
            rhs,
            holds: lhs <= rhs + T::norm_tol(),
        }
    }

    /// Two-point models as commuting qubit triples: `A = diag(f)`,
    /// `B = diag(g)`, state `diag(rho)`.
    pub fn qubit_embedding(&self) -> Option<WitnessTriple<T>> {
        if self.len() != 2 {
            return None;
        }
        let a = Hermitian2::diag(self.f[0], self.f[1]).ok()?;
        let b = Hermitian2::diag(self.g[0], self.g[1]).ok()?;
        let rho = Density2::new(Hermitian2::diag(self.rho[0], self.rho[1]).ok()?).ok()?;
        Some(WitnessTriple::new(a, b, QubitState::Mixed(rho)))
    }
}

/// Single-photon realization of a witness triple.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolarizationSetup<T> {
    /// Rotation of the `A` measurement basis `|H'⟩ = cos θ|H⟩ + sin θ|V⟩`, in [0°, 90°).
    pub basis_rotation_deg: T,
    /// Linear polarization angle of the prepared state, in [0°, 180°).
    pub state_angle_deg: T,
    /// Values attributed to `|H⟩`, `|V⟩`.
    #[serde(rename = "outcome_values_B")]
    pub outcome_values_b: (T, T),
    /// Values attributed to `|H'⟩`, `|V'⟩`.
    #[serde(rename = "outcome_values_A")]
    pub outcome_values_a: (T, T),
    /// Rotation applied to bring `B` to diagonal form (0 when it already was).
    pub b_rotation_deg: T,
    pub warnings: Vec<String>,
}

impl<T: Real> PolarizationSetup<T> {
    /// Rebuilds `(A, B)` in the gauge-fixed frame.
    pub fn reconstruct(&self) -> (Hermitian2<T>, Hermitian2<T>) {
        let (s, c) = self.basis_rotation_deg.to_radians().sin_cos();
        let (h_val, v_val) = self.outcome_values_a;
        let a = Hermitian2::real(
            h_val * c * c + v_val * s * s,
            h_val * s * s + v_val * c * c,
            (h_val - v_val) * s * c,
        )
        .expect("finite");
        let b = Hermitian2::diag(self.outcome_values_b.0, self.outcome_values_b.1).expect("finite");
        (a, b)
    }

    pub fn state(&self) -> PureState<T> {
        PureState::from_angle(self.state_angle_deg.to_radians())
    }
}
