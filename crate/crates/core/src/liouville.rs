//! Liouville-space generators and propagators for the spin-lock and rotation
//! windows.
//!
//! Density matrices are column-stacked: entry `(r, c)` of `rho` sits at index
//! `4 c + r`, so `vec(A X B) = (B^T ⊗ A) vec(X)`. Nothing outside this module
//! depends on that layout; callers go through [`Superoperator::apply`].

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expm::expm;
use crate::protocol::ProtocolConfig;
use crate::spinops::{
    collective_spin, dipolar_hamiltonian, drive_hamiltonian, hermiticity_defect, DensityMatrix,
    Op4, SpinAxis,
};

pub type Mat16 = SMatrix<Complex64, 16, 16>;
pub type Vec16 = SVector<Complex64, 16>;

/// Hermiticity tolerance for generator Hamiltonians.
pub const HAMILTONIAN_HERMITIAN_TOL: f64 = 1e-12;

/// Linear map on 4x4 operators, stored as a 16x16 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Superoperator(Mat16);

impl Superoperator {
    pub fn from_matrix(m: Mat16) -> Self {
        Superoperator(m)
    }

    pub fn identity() -> Self {
        Superoperator(Mat16::identity())
    }

    pub fn zero() -> Self {
        Superoperator(Mat16::zeros())
    }

    pub fn matrix(&self) -> &Mat16 {
        &self.0
    }

    /// Left and right multiplication: `X -> left * X * right`.
    pub fn sandwich(left: &Op4, right: &Op4) -> Self {
        Superoperator(right.transpose().kronecker(left))
    }

    pub fn apply(&self, op: &Op4) -> Op4 {
        unvec(&(self.0 * vec(op)))
    }

    pub fn apply_vec(&self, v: &Vec16) -> Vec16 {
        self.0 * v
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Superoperator) -> Superoperator {
        Superoperator(self.0 * other.0)
    }

    pub fn scale(&self, s: f64) -> Superoperator {
        Superoperator(self.0 * Complex64::new(s, 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Superoperator) -> f64 {
        (self.0 - other.0).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl std::ops::Add for Superoperator {
    type Output = Superoperator;
    fn add(self, rhs: Superoperator) -> Superoperator {
        Superoperator(self.0 + rhs.0)
    }
}

pub fn vec(op: &Op4) -> Vec16 {
    // nalgebra storage is column-major, which is exactly column stacking
    Vec16::from_column_slice(op.as_slice())
}

pub fn unvec(v: &Vec16) -> Op4 {
    Op4::from_column_slice(v.as_slice())
}

fn check_hermitian(h: &Op4) -> Result<()> {
    let defect = hermiticity_defect(h);
    if defect > HAMILTONIAN_HERMITIAN_TOL || !defect.is_finite() {
        return Err(Error::NonHermitian { defect });
    }
    Ok(())
}

/// Adjoint action `X -> [H, X]`.
fn adjoint_action(h: &Op4) -> Mat16 {
    let id = Op4::identity();
    id.kronecker(h) - h.transpose().kronecker(&id)
}

/// `rho -> -i [H, rho]`.
pub fn commutator_superop(h: &Op4) -> Result<Superoperator> {
    check_hermitian(h)?;
    Ok(Superoperator(adjoint_action(h) * Complex64::new(0.0, -1.0)))
}

/// `rho -> -tau_c [H, [H, rho]]`.
pub fn double_commutator_superop(h: &Op4, tau_c: f64) -> Result<Superoperator> {
    check_hermitian(h)?;
    if !(tau_c >= 0.0 && tau_c.is_finite()) {
        return Err(Error::NegativeParameter {
            name: "tau_c",
            value: tau_c,
        });
    }
    let ad = adjoint_action(h);
    Ok(Superoperator(ad * ad * Complex64::new(-tau_c, 0.0)))
}

/// Spin-lock Hamiltonian `H_x + H_dd`.
pub fn spinlock_hamiltonian(omega_1: f64, omega_d0: f64) -> Op4 {
    drive_hamiltonian(omega_1, SpinAxis::X) + dipolar_hamiltonian(omega_d0)
}

/// Generator of the spin-lock window: `L1 + tau_c L1 L1` with `L1 = -i[H, .]`,
/// i.e. `-i[H, rho] - tau_c [H, [H, rho]]` for `H = H_x + H_dd`.
pub fn secular_liouvillian(omega_1: f64, omega_d0: f64, tau_c: f64) -> Result<Superoperator> {
    let h = spinlock_hamiltonian(omega_1, omega_d0);
    Ok(commutator_superop(&h)? + double_commutator_superop(&h, tau_c)?)
}

/// Hamiltonian of the rotation pulse. The pulse phase is chosen so that a
/// positive angle `omega_2 t` turns `+x` magnetization toward `+z`:
/// `M_x -> M_x cos(theta)`, `M_z -> M_x sin(theta)`.
pub fn rotation_hamiltonian(omega_2: f64) -> Op4 {
    drive_hamiltonian(-omega_2, SpinAxis::Y)
}

/// Unitary generator of the rotation window; no dissipative term.
pub fn rotation_liouvillian(omega_2: f64) -> Result<Superoperator> {
    commutator_superop(&rotation_hamiltonian(omega_2))
}

/// `exp(s t)`.
pub fn matrix_exponential(s: &Superoperator, t: f64) -> Result<Superoperator> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::NegativeParameter { name: "t", value: t });
    }
    if t == 0.0 {
        return Ok(Superoperator::identity());
    }
    Ok(Superoperator(expm(&(s.0 * Complex64::new(t, 0.0)))?))
}

/// `exp(L_sec tau_1)`.
pub fn spinlock_propagator(
    omega_1: f64,
    omega_d0: f64,
    tau_c: f64,
    tau_1: f64,
) -> Result<Superoperator> {
    matrix_exponential(&secular_liouvillian(omega_1, omega_d0, tau_c)?, tau_1)
}

/// `exp(L_y tau_2)`.
pub fn rotation_propagator(omega_2: f64, tau_2: f64) -> Result<Superoperator> {
    matrix_exponential(&rotation_liouvillian(omega_2)?, tau_2)
}

/// Bit-exact key of the parameters that determine the spin-lock propagator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinLockKey([u64; 4]);

impl SpinLockKey {
    pub fn of(cfg: &ProtocolConfig) -> Self {
        SpinLockKey([
            cfg.omega_1.to_bits(),
            cfg.omega_d0.to_bits(),
            cfg.tau_c.to_bits(),
            cfg.tau_1.to_bits(),
        ])
    }
}

/// One Floquet period: spin-lock for `tau_1`, then rotation for `tau_2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclePropagator {
    matrix: Superoperator,
    spinlock: Superoperator,
    rotation: Superoperator,
    pub tau_1: f64,
    pub tau_2: f64,
}

impl CyclePropagator {
    pub fn from_parts(spinlock: Superoperator, rotation: Superoperator, tau_1: f64, tau_2: f64) -> Self {
        CyclePropagator {
            matrix: rotation.compose(&spinlock),
            spinlock,
            rotation,
            tau_1,
            tau_2,
        }
    }

    /// `exp(L_y tau_2) exp(L_sec tau_1)`.
    pub fn matrix(&self) -> &Superoperator {
        &self.matrix
    }

    pub fn spinlock(&self) -> &Superoperator {
        &self.spinlock
    }

    pub fn rotation(&self) -> &Superoperator {
        &self.rotation
    }

    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        DensityMatrix::from_propagated(self.matrix.apply(rho.matrix()))
    }
}

pub fn cycle_propagator(cfg: &ProtocolConfig) -> Result<CyclePropagator> {
    cfg.validate()?;
    let spinlock = spinlock_propagator(cfg.omega_1, cfg.omega_d0, cfg.tau_c, cfg.tau_1)?;
    let rotation = rotation_propagator(cfg.omega_2, cfg.tau_2)?;
    Ok(CyclePropagator::from_parts(spinlock, rotation, cfg.tau_1, cfg.tau_2))
}

/// `exp(-i H t)` for Hermitian `H`, via the spectral decomposition.
pub fn unitary(h: &Op4, t: f64) -> Op4 {
    let eig = h.symmetric_eigen();
    let phases = eig
        .eigenvalues
        .map(|e| Complex64::new(0.0, -e * t).exp());
    let v = eig.eigenvectors;
    v * Op4::from_diagonal(&phases) * v.adjoint()
}

/// Sanity accessor used in tests and reports: `[H_dd, F_z]` should vanish.
pub fn secularity_defect(omega_d0: f64) -> f64 {
    let h = dipolar_hamiltonian(omega_d0);
    let fz = collective_spin(SpinAxis::Z);
    (h * fz - fz * h).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
