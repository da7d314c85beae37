//! Reduced four-observable equations of motion under the spin-lock generator,
//! their closed-form solutions, and the two-period composition of `M_x`.
//!
//! The secular generator splits the symmetric observables into two closed
//! blocks: group 1 `(M_x, M_zz, M_yy, M_yz)` and group 2 `(M_z, M_y, M_xz, M_xy)`.
//! `M_xx` is conserved on its own.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spinops::ObservableSet;

/// Spin-lock parameters entering the reduced equations (rad/ms, ms).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinLockParams {
    pub omega_1: f64,
    pub omega_d0: f64,
    pub tau_c: f64,
}

impl SpinLockParams {
    pub fn new(omega_1: f64, omega_d0: f64, tau_c: f64) -> Self {
        SpinLockParams {
            omega_1,
            omega_d0,
            tau_c,
        }
    }

    /// `kappa_1^2 = 4 w1^2 + (9/4) wd^2`.
    pub fn kappa1_sq(&self) -> f64 {
        4.0 * self.omega_1 * self.omega_1 + 2.25 * self.omega_d0 * self.omega_d0
    }

    pub fn kappa1(&self) -> f64 {
        self.kappa1_sq().sqrt()
    }

    /// Largest rate appearing in either block; sets the integrator step limit.
    pub fn rate_scale(&self) -> f64 {
        self.omega_1
            .abs()
            .max(self.kappa1())
            .max(3.0 * self.omega_d0.abs())
            .max(self.kappa1_sq() * self.tau_c)
    }

    /// Largest step accepted by [`integrate_reduced`].
    pub fn max_step(&self) -> f64 {
        let r = self.rate_scale();
        if r == 0.0 {
            f64::INFINITY
        } else {
            0.01 / r
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObservableGroup {
    /// `(M_x, M_zz, M_yy, M_yz)`
    One,
    /// `(M_z, M_y, M_xz, M_xy)`
    Two,
}

impl ObservableGroup {
    fn name(self) -> &'static str {
        match self {
            ObservableGroup::One => "group 1",
            ObservableGroup::Two => "group 2",
        }
    }
}

/// Four observables of one block; the group is fixed at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState4 {
    group: ObservableGroup,
    pub values: [f64; 4],
}

impl ReducedState4 {
    pub fn group1(m_x: f64, m_zz: f64, m_yy: f64, m_yz: f64) -> Self {
        ReducedState4 {
            group: ObservableGroup::One,
            values: [m_x, m_zz, m_yy, m_yz],
        }
    }

    pub fn group2(m_z: f64, m_y: f64, m_xz: f64, m_xy: f64) -> Self {
        ReducedState4 {
            group: ObservableGroup::Two,
            values: [m_z, m_y, m_xz, m_xy],
        }
    }

    pub fn zeros(group: ObservableGroup) -> Self {
        ReducedState4 {
            group,
            values: [0.0; 4],
        }
    }

    /// Projects a full observable set onto one block.
    pub fn from_observables(obs: &ObservableSet, group: ObservableGroup) -> Self {
        match group {
            ObservableGroup::One => Self::group1(obs.m_x, obs.m_zz, obs.m_yy, obs.m_yz),
            ObservableGroup::Two => Self::group2(obs.m_z, obs.m_y, obs.m_xz, obs.m_xy),
        }
    }

    pub fn group(&self) -> ObservableGroup {
        self.group
    }

    fn with_values(&self, values: [f64; 4]) -> Self {
        ReducedState4 {
            group: self.group,
            values,
        }
    }

    fn expect(&self, group: ObservableGroup) -> Result<()> {
        if self.group != group {
            return Err(Error::GroupMismatch {
                expected: group.name(),
                found: self.group.name(),
            });
        }
        Ok(())
    }
}

/// Time derivative of `(M_x, M_zz, M_yy, M_yz)`.
pub fn group1_rhs(state: &ReducedState4, p: &SpinLockParams) -> Result<ReducedState4> {
    state.expect(ObservableGroup::One)?;
    let [mx, mzz, myy, myz] = state.values;
    let (w1, wd, tc) = (p.omega_1, p.omega_d0, p.tau_c);
    let cross = w1 * wd * tc;
    let d_mx = -2.25 * wd * wd * tc * mx + 6.0 * cross * mzz - 6.0 * cross * myy - 3.0 * wd * myz;
    let d_mzz = 0.75 * cross * mx - 2.0 * w1 * w1 * tc * mzz + 2.0 * w1 * w1 * tc * myy + w1 * myz;
    let d_myy = -0.75 * cross * mx + 2.0 * w1 * w1 * tc * mzz - 2.0 * w1 * w1 * tc * myy - w1 * myz;
    let d_myz = 0.75 * wd * mx - 2.0 * w1 * mzz + 2.0 * w1 * myy - p.kappa1_sq() * tc * myz;
    Ok(state.with_values([d_mx, d_mzz, d_myy, d_myz]))
}

/// Time derivative of `(M_z, M_y, M_xz, M_xy)`.
///
/// The `M_xy` equation couples to `M_xz` (rotation about x mixes the two
/// correlations); this is what the Liouvillian produces.
pub fn group2_rhs(state: &ReducedState4, p: &SpinLockParams) -> Result<ReducedState4> {
    state.expect(ObservableGroup::Two)?;
    let [mz, my, mxz, mxy] = state.values;
    let (w1, wd, tc) = (p.omega_1, p.omega_d0, p.tau_c);
    let cross = w1 * wd * tc;
    let mixed = (w1 * w1 + 2.25 * wd * wd) * tc;
    let d_mz = -w1 * w1 * tc * mz + w1 * my + 3.0 * cross * mxz;
    let d_my = -w1 * mz - mixed * my + 3.0 * wd * mxz + 3.0 * cross * mxy;
    let d_mxz = 0.75 * cross * mz - 0.75 * wd * my - mixed * mxz + w1 * mxy;
    let d_mxy = 0.75 * cross * my - w1 * mxz - w1 * w1 * tc * mxy;
    Ok(state.with_values([d_mz, d_my, d_mxz, d_mxy]))
}

fn rhs(state: &ReducedState4, p: &SpinLockParams) -> Result<ReducedState4> {
    match state.group {
        ObservableGroup::One => group1_rhs(state, p),
        ObservableGroup::Two => group2_rhs(state, p),
    }
}

fn axpy(a: f64, x: &[f64; 4], y: &[f64; 4]) -> [f64; 4] {
    [
        y[0] + a * x[0],
        y[1] + a * x[1],
        y[2] + a * x[2],
        y[3] + a * x[3],
    ]
}

/// Classic fixed-step RK4 over `[0, t]`. The step is `t / ceil(t / dt)`, never
/// larger than `dt`; `dt` must not exceed [`SpinLockParams::max_step`].
pub fn integrate_reduced(
    state0: &ReducedState4,
    p: &SpinLockParams,
    t: f64,
    dt: f64,
) -> Result<ReducedState4> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::NegativeParameter { name: "t", value: t });
    }
    let limit = p.max_step();
    if dt.is_nan() || dt <= 0.0 || dt > limit {
        return Err(Error::StepTooLarge { dt, limit });
    }
    if t == 0.0 {
        return Ok(*state0);
    }
    let steps = (t / dt).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut y = *state0;
    for _ in 0..steps {
        let k1 = rhs(&y, p)?.values;
        let k2 = rhs(&y.with_values(axpy(0.5 * h, &k1, &y.values)), p)?.values;
        let k3 = rhs(&y.with_values(axpy(0.5 * h, &k2, &y.values)), p)?.values;
        let k4 = rhs(&y.with_values(axpy(h, &k3, &y.values)), p)?.values;
        let mut next = y.values;
        for i in 0..4 {
            next[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        y = y.with_values(next);
    }
    Ok(y)
}

/// Step used by the oracle helpers below: a quarter of the stability limit.
fn oracle_step(p: &SpinLockParams) -> f64 {
    let s = 0.25 * p.max_step();
    if s.is_finite() {
        s
    } else {
        1.0
    }
}

/// `M_x` after a spin-lock of length `t` starting from `M_x = m0`, all other
/// group-1 observables zero, by reduced-ODE integration.
pub fn mx_pre_oracle(m0: f64, t: f64, p: &SpinLockParams) -> Result<f64> {
    let s = integrate_reduced(&ReducedState4::group1(m0, 0.0, 0.0, 0.0), p, t, oracle_step(p))?;
    Ok(s.values[0])
}

/// `M_z` after a spin-lock of length `t` starting from `M_z = m_alpha`, all
/// other group-2 observables zero, by reduced-ODE integration.
pub fn mz_pre_oracle(m_alpha: f64, t: f64, p: &SpinLockParams) -> Result<f64> {
    let s = integrate_reduced(&ReducedState4::group2(m_alpha, 0.0, 0.0, 0.0), p, t, oracle_step(p))?;
    Ok(s.values[0])
}

/// Closed-form `M_x` under spin-lock from `M_x(0) = m0`:
/// `m0 (4 w1^2 / k^2 + (9/4)(wd^2 / k^2) cos(k t) exp(-k^2 t tau_c))`.
pub fn analytic_mx_pre(m0: f64, t: f64, omega_1: f64, omega_d0: f64, tau_c: f64) -> f64 {
    let p = SpinLockParams::new(omega_1, omega_d0, tau_c);
    let k2 = p.kappa1_sq();
    if k2 == 0.0 {
        return m0;
    }
    let k = k2.sqrt();
    m0 * (4.0 * omega_1 * omega_1 / k2
        + 2.25 * omega_d0 * omega_d0 / k2 * (k * t).cos() * (-k2 * t * tau_c).exp())
}

/// Long-time limit of [`analytic_mx_pre`]: `m0 4 w1^2 / k^2`.
pub fn mx_plateau(m0: f64, omega_1: f64, omega_d0: f64) -> f64 {
    let k2 = SpinLockParams::new(omega_1, omega_d0, 0.0).kappa1_sq();
    if k2 == 0.0 {
        m0
    } else {
        m0 * 4.0 * omega_1 * omega_1 / k2
    }
}

/// Strong-drive approximation of `M_z` under spin-lock:
/// `m_alpha cos(w1 t) exp(-w1^2 tau_c t)`. Meaningful for `w1 >> wd`.
pub fn analytic_mz_pre(m_alpha: f64, t: f64, omega_1: f64, tau_c: f64) -> f64 {
    m_alpha * (omega_1 * t).cos() * (-omega_1 * omega_1 * tau_c * t).exp()
}

/// Two-period `M_x` for a rotation angle `theta = pi + delta` near pi:
/// `Mx_pre(Mx_pre(m0, tau_1), tau_1) + delta^2 Mz_pre(Mx_pre(m0, tau_1), tau_1)`,
/// with both factors from the reduced-ODE oracle.
pub fn compose_2tau(m0: f64, theta: f64, tau_1: f64, p: &SpinLockParams) -> Result<f64> {
    let delta = theta - PI;
    let first = mx_pre_oracle(m0, tau_1, p)?;
    let kept = mx_pre_oracle(first, tau_1, p)?;
    let leaked = mz_pre_oracle(first, tau_1, p)?;
    Ok(kept + delta * delta * leaked)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_PI: f64 = 2.0 * PI;

    fn wide_coupling() -> SpinLockParams {
        SpinLockParams::new(TWO_PI * 40.0, TWO_PI * 10.0, 1e-4)
    }

    fn narrow_coupling() -> SpinLockParams {
        SpinLockParams::new(TWO_PI * 40.0, TWO_PI * 4.0, 1e-4)
    }

    #[test]
    fn zero_state_is_fixed() {
        let p = wide_coupling();
        for g in [ObservableGroup::One, ObservableGroup::Two] {
            let d = rhs(&ReducedState4::zeros(g), &p).unwrap();
            assert_eq!(d.values, [0.0; 4]);
        }
    }

    #[test]
    fn group_mismatch_rejected() {
        let p = wide_coupling();
        assert!(matches!(
            group1_rhs(&ReducedState4::zeros(ObservableGroup::Two), &p),
            Err(Error::GroupMismatch { .. })
        ));
        assert!(matches!(
            group2_rhs(&ReducedState4::zeros(ObservableGroup::One), &p),
            Err(Error::GroupMismatch { .. })
        ));
    }

    #[test]
    fn mx_frozen_without_dipolar_coupling() {
        let p = SpinLockParams::new(3.0, 0.0, 0.2);
        let d = group1_rhs(&ReducedState4::group1(0.8, 0.0, 0.0, 0.0), &p).unwrap();
        assert_eq!(d.values, [0.0; 4]);
    }

    #[test]
    fn mz_decay_rate_without_dipolar_coupling() {
        let p = SpinLockParams::new(3.0, 0.0, 0.2);
        let d = group2_rhs(&ReducedState4::group2(0.5, 0.0, 0.0, 0.0), &p).unwrap();
        assert!((d.values[0] + 9.0 * 0.2 * 0.5).abs() < 1e-15);
        assert!((d.values[1] + 1.5).abs() < 1e-15);
    }

    #[test]
    fn conserved_combinations_of_group1() {
        let p = wide_coupling();
        let (w1, wd) = (p.omega_1, p.omega_d0);
        let states = [
            [1.0, 0.0, 0.0, 0.0],
            [0.3, -0.1, 0.07, 0.2],
            [-0.5, 0.2, 0.2, -0.4],
            [0.0, 0.25, -0.25, 0.1],
        ];
        for v in states {
            let d = group1_rhs(&ReducedState4 { group: ObservableGroup::One, values: v }, &p)
                .unwrap()
                .values;
            let scale = w1 * wd;
            assert!((3.0 * wd * d[1] + w1 * d[0]).abs() <= 1e-12 * scale);
            assert!((d[1] + d[2]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn integrator_zero_time_and_step_guard() {
        let p = wide_coupling();
        let s = ReducedState4::group1(1.0, 0.0, 0.0, 0.0);
        assert_eq!(integrate_reduced(&s, &p, 0.0, p.max_step()).unwrap(), s);
        assert!(matches!(
            integrate_reduced(&s, &p, 1.0, 2.0 * p.max_step()),
            Err(Error::StepTooLarge { .. })
        ));
        assert!(integrate_reduced(&s, &p, 1.0, 0.0).is_err());
        assert!(integrate_reduced(&s, &p, -1.0, p.max_step()).is_err());
    }

    #[test]
    fn integrator_is_fourth_order() {
        // smooth test case: compare against a very fine reference
        let p = SpinLockParams::new(2.0, 1.0, 0.05);
        let s = ReducedState4::group2(1.0, 0.0, 0.0, 0.0);
        let t = 3.0;
        let reference = integrate_reduced(&s, &p, t, p.max_step() / 64.0).unwrap();
        let err = |dt: f64| {
            let r = integrate_reduced(&s, &p, t, dt).unwrap();
            r.values
                .iter()
                .zip(reference.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let coarse = err(p.max_step());
        let fine = err(p.max_step() / 2.0);
        let ratio = coarse / fine;
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn group2_decays_to_zero() {
        let p = narrow_coupling();
        let s = ReducedState4::group2(-0.2, 0.0, 0.0, 0.0);
        let t = 40.0 / (p.omega_1 * p.omega_1 * p.tau_c);
        let out = integrate_reduced(&s, &p, t, p.max_step()).unwrap();
        assert!(out.values.iter().all(|v| v.abs() < 1e-12), "{:?}", out.values);
    }

    #[test]
    fn closed_form_mx_limits() {
        let (w1, wd, tc) = (TWO_PI * 40.0, TWO_PI * 10.0, 1e-4);
        for t in [0.0, 0.01, 1.0] {
            assert_eq!(analytic_mx_pre(0.7, t, w1, 0.0, tc), 0.7);
        }
        let late = analytic_mx_pre(1.0, 1e3, w1, wd, tc);
        assert!((late - mx_plateau(1.0, w1, wd)).abs() < 1e-15);
        assert!((mx_plateau(1.0, w1, wd) - 6400.0 / 6625.0).abs() < 1e-15);
        assert!((mx_plateau(1.0, w1, wd) - 0.96604).abs() < 5e-6);
        assert!((analytic_mx_pre(0.9, 0.0, w1, wd, tc) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn closed_form_mx_agrees_with_oracle() {
        // the closed form solves the group-1 block exactly
        let p = wide_coupling();
        let k2 = p.kappa1_sq();
        for i in 0..=40 {
            let t = i as f64 * 0.5 / (k2 * p.tau_c) / 40.0;
            let oracle = mx_pre_oracle(1.0, t, &p).unwrap();
            let closed = analytic_mx_pre(1.0, t, p.omega_1, p.omega_d0, p.tau_c);
            assert!((oracle - closed).abs() < 1e-9, "t = {t}: {oracle} vs {closed}");
        }
    }

    #[test]
    fn closed_form_mz_envelope_and_regime() {
        let w1 = TWO_PI * 40.0;
        assert_eq!(analytic_mz_pre(-0.2, 0.0, w1, 1e-3), -0.2);
        let t = 0.0123;
        let env = |tc: f64| (-w1 * w1 * tc * t).exp();
        assert!(env(1e-3) < env(1e-4));
        let fast = analytic_mz_pre(1.0, t, w1, 1e-3).abs();
        let slow = analytic_mz_pre(1.0, t, w1, 1e-4).abs();
        assert!(fast < slow);

        // strong-drive regime: wd = w1 / 100, tau_c = 1e-3 ms, w1^2 tau_c t <= 5
        let p = SpinLockParams::new(w1, w1 / 100.0, 1e-3);
        let t_max = 5.0 / (w1 * w1 * p.tau_c);
        for i in 0..=50 {
            let t = t_max * i as f64 / 50.0;
            let oracle = mz_pre_oracle(1.0, t, &p).unwrap();
            let closed = analytic_mz_pre(1.0, t, w1, p.tau_c);
            assert!((oracle - closed).abs() <= 0.02, "t = {t}");
        }
    }

    #[test]
    fn compose_2tau_limits() {
        let p = SpinLockParams::new(TWO_PI * 50.0, TWO_PI * 2.0, 1e-3);
        let tau_1 = 0.02 / 50.0;
        let a = mx_pre_oracle(1.0, tau_1, &p).unwrap();
        let want = mx_pre_oracle(a, tau_1, &p).unwrap();
        assert_eq!(compose_2tau(1.0, PI, tau_1, &p).unwrap(), want);

        let free = SpinLockParams::new(TWO_PI * 50.0, 0.0, 0.37);
        assert!((compose_2tau(0.8, PI, tau_1, &free).unwrap() - 0.8).abs() < 1e-14);

        // once the leaked component has decayed, delta no longer matters
        let tau_long = 12.0 / (p.omega_1 * p.omega_1 * p.tau_c);
        let base = compose_2tau(1.0, PI, tau_long, &p).unwrap();
        let off = compose_2tau(1.0, 1.04 * PI, tau_long, &p).unwrap();
        assert!((base - off).abs() < 1e-6);
    }
}
