//! Spin-1/2 pair operators, Hamiltonians, states and the symmetric observable set.
//!
//! Conventions: `I_a = sigma_a / 2`, the first tensor factor is spin 1, and the
//! single-spin basis is `(|up>, |down>)` with `sigma_z |up> = |up>`. Frequencies
//! are angular, in rad/ms.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Op2 = Matrix2<Complex64>;
pub type Op4 = Matrix4<Complex64>;

/// Hermiticity tolerance for states.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Allowed deviation of `Tr rho` from one.
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest eigenvalue a state may have.
pub const POSITIVITY_TOL: f64 = -1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpinAxis {
    X,
    Y,
    Z,
}

impl SpinAxis {
    pub const ALL: [SpinAxis; 3] = [SpinAxis::X, SpinAxis::Y, SpinAxis::Z];
}

pub fn pauli(axis: SpinAxis) -> Op2 {
    match axis {
        SpinAxis::X => Matrix2::new(ZERO, ONE, ONE, ZERO),
        SpinAxis::Y => Matrix2::new(ZERO, -I, I, ZERO),
        SpinAxis::Z => Matrix2::new(ONE, ZERO, ZERO, -ONE),
    }
}

/// Single-spin operator `I_a = sigma_a / 2`.
pub fn spin_half(axis: SpinAxis) -> Op2 {
    pauli(axis) * Complex64::new(0.5, 0.0)
}

/// `a ⊗ b` with `a` acting on spin 1.
pub fn kron2(a: &Op2, b: &Op2) -> Op4 {
    a.kronecker(b)
}

/// `I_a ⊗ 1 + 1 ⊗ I_a`.
pub fn collective_spin(axis: SpinAxis) -> Op4 {
    let s = spin_half(axis);
    let id = Op2::identity();
    kron2(&s, &id) + kron2(&id, &s)
}

/// `I_a ⊗ I_b`.
pub fn pair_product(a: SpinAxis, b: SpinAxis) -> Op4 {
    kron2(&spin_half(a), &spin_half(b))
}

/// Secular dipolar coupling `w_d0 (2 Iz Iz - Ix Ix - Iy Iy)`.
pub fn dipolar_hamiltonian(omega_d0: f64) -> Op4 {
    use SpinAxis::*;
    let h = pair_product(Z, Z) * Complex64::new(2.0, 0.0) - pair_product(X, X) - pair_product(Y, Y);
    h * Complex64::new(omega_d0, 0.0)
}

/// Uniform drive `omega * sum_i I_a^i`.
pub fn drive_hamiltonian(omega: f64, axis: SpinAxis) -> Op4 {
    collective_spin(axis) * Complex64::new(omega, 0.0)
}

pub fn commutator(a: &Op4, b: &Op4) -> Op4 {
    a * b - b * a
}

/// Largest entrywise deviation `max |m - m^dagger|`.
pub fn hermiticity_defect(m: &Op4) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &Op4) -> [f64; 4] {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = h.symmetric_eigenvalues();
    let mut out = [eig[0], eig[1], eig[2], eig[3]];
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

/// Measured departures of a 4x4 matrix from being a valid state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDefects {
    pub hermiticity: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

impl StateDefects {
    pub fn of(m: &Op4) -> Self {
        StateDefects {
            hermiticity: hermiticity_defect(m),
            trace_error: (m.trace() - ONE).norm(),
            min_eigenvalue: hermitian_eigenvalues(m)[0],
        }
    }

    pub fn is_valid(&self) -> bool {
        self.hermiticity <= HERMITIAN_TOL
            && self.trace_error <= TRACE_TOL
            && self.min_eigenvalue >= POSITIVITY_TOL
    }
}

/// Two-spin density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Op4);

impl DensityMatrix {
    pub fn new(m: Op4) -> Result<Self> {
        let d = StateDefects::of(&m);
        if d.hermiticity > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "Hermiticity defect {:e}",
                d.hermiticity
            )));
        }
        if d.trace_error > TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "trace off by {:e}",
                d.trace_error
            )));
        }
        if d.min_eigenvalue < POSITIVITY_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {:e}",
                d.min_eigenvalue
            )));
        }
        Ok(DensityMatrix(m))
    }

    /// Wraps a matrix produced by a trusted propagation without re-validation.
    pub(crate) fn from_propagated(m: Op4) -> Self {
        DensityMatrix(m)
    }

    pub fn from_pure(psi: &nalgebra::Vector4<Complex64>) -> Result<Self> {
        let norm = psi.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidState("zero or non-finite state vector".into()));
        }
        let psi = psi / Complex64::new(norm, 0.0);
        Self::new(psi * psi.adjoint())
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix(Op4::identity() * Complex64::new(0.25, 0.0))
    }

    pub fn matrix(&self) -> &Op4 {
        &self.0
    }

    pub fn into_matrix(self) -> Op4 {
        self.0
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    pub fn defects(&self) -> StateDefects {
        StateDefects::of(&self.0)
    }

    pub fn observables(&self) -> ObservableSet {
        extract_observables(self)
    }
}

/// Both spins along +x: `rho = |psi><psi|`, `|psi> = ⊗ (|up> + |down>)/√2`.
pub fn initial_state_plus_x() -> DensityMatrix {
    let h = Complex64::new(0.5, 0.0);
    let psi = nalgebra::Vector4::new(h, h, h, h);
    DensityMatrix(psi * psi.adjoint())
}

/// Nine symmetric observables of the spin pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObservableSet {
    pub m_x: f64,
    pub m_y: f64,
    pub m_z: f64,
    pub m_xx: f64,
    pub m_yy: f64,
    pub m_zz: f64,
    pub m_xy: f64,
    pub m_yz: f64,
    pub m_xz: f64,
}

impl ObservableSet {
    /// Column names in the order of [`ObservableSet::to_array`].
    pub const NAMES: [&'static str; 9] = [
        "Mx", "My", "Mz", "Mxx", "Myy", "Mzz", "Mxy", "Myz", "Mxz",
    ];

    pub fn to_array(&self) -> [f64; 9] {
        [
            self.m_x, self.m_y, self.m_z, self.m_xx, self.m_yy, self.m_zz, self.m_xy, self.m_yz,
            self.m_xz,
        ]
    }

    pub fn from_array(v: [f64; 9]) -> Self {
        ObservableSet {
            m_x: v[0],
            m_y: v[1],
            m_z: v[2],
            m_xx: v[3],
            m_yy: v[4],
            m_zz: v[5],
            m_xy: v[6],
            m_yz: v[7],
            m_xz: v[8],
        }
    }
}

/// Hermitian operators whose expectation values are the observables, in
/// [`ObservableSet::NAMES`] order.
pub fn observable_operators() -> [Op4; 9] {
    use SpinAxis::*;
    let sym = |a, b| pair_product(a, b) + pair_product(b, a);
    [
        collective_spin(X),
        collective_spin(Y),
        collective_spin(Z),
        pair_product(X, X),
        pair_product(Y, Y),
        pair_product(Z, Z),
        sym(X, Y),
        sym(Y, Z),
        sym(X, Z),
    ]
}

fn expectation(op: &Op4, rho: &Op4) -> f64 {
    // Tr(op * rho) without forming the product
    let mut acc = ZERO;
    for i in 0..4 {
        for j in 0..4 {
            acc += op[(i, j)] * rho[(j, i)];
        }
    }
    acc.re
}

pub fn extract_observables(rho: &DensityMatrix) -> ObservableSet {
    let ops = observable_operators();
    let mut v = [0.0; 9];
    for (slot, op) in v.iter_mut().zip(ops.iter()) {
        *slot = expectation(op, rho.matrix());
    }
    ObservableSet::from_array(v)
}

/// Builds a state whose observables equal `obs` (all other Pauli-product
/// components zero): `rho = 1/4 + sum_k c_k O_k` with `Tr(O_k O_l)` inverted.
///
/// Positivity is checked; small observable values always give a valid state.
pub fn state_from_observables(obs: &ObservableSet) -> Result<DensityMatrix> {
    let v = obs.to_array();
    // Tr(F_a F_a) = 2, Tr((Ia Ia)^2) = 1/4, Tr((Ia Ib + Ib Ia)^2) = 1/2; the
    // nine operators are mutually trace-orthogonal.
    let norms = [2.0, 2.0, 2.0, 0.25, 0.25, 0.25, 0.5, 0.5, 0.5];
    let ops = observable_operators();
    let mut m = Op4::identity() * Complex64::new(0.25, 0.0);
    for k in 0..9 {
        m += ops[k] * Complex64::new(v[k] / norms[k], 0.0);
    }
    DensityMatrix::new(m)
}
