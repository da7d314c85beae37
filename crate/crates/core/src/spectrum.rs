//! Discrete Fourier power spectrum of stroboscopic signals and the crystalline
//! fraction.
//!
//! Frequencies are normalized to cycles⁻¹, `nu_k = k / n`. The sub-harmonic
//! (period-doubled) response sits at `nu = 0.5`, which is `omega = pi` rad per
//! cycle on the angular axis.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Fraction at or above which a response is classed as time-crystalline.
pub const DTC_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// `nu_k = k / n`, `k = 0..n`.
    pub frequencies: Vec<f64>,
    /// `|S(nu_k)|^2` with `S(nu) = (1/n) sum_j x_j exp(-2 pi i nu j)`.
    pub power: Vec<f64>,
    pub crystalline_fraction: f64,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    /// Angular axis `2 pi nu`, rad per cycle; same bins as `frequencies`.
    pub fn omega_rad(&self) -> Vec<f64> {
        self.frequencies.iter().map(|nu| 2.0 * PI * nu).collect()
    }

    /// Bin index of `nu = 0.5`.
    pub fn half_bin(&self) -> usize {
        self.power.len() / 2
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }

    /// Bin with the largest power; the lowest index wins ties.
    pub fn peak_bin(&self) -> usize {
        let mut best = 0;
        for (k, p) in self.power.iter().enumerate() {
            if *p > self.power[best] {
                best = k;
            }
        }
        best
    }

    pub fn peak_frequency(&self) -> f64 {
        self.frequencies[self.peak_bin()]
    }

    /// True when `nu = 0.5` strictly dominates every other bin.
    pub fn has_single_subharmonic_peak(&self) -> bool {
        let h = self.half_bin();
        let ph = self.power[h];
        self.power
            .iter()
            .enumerate()
            .all(|(k, p)| k == h || *p < ph)
    }

    pub fn is_dtc(&self) -> bool {
        self.crystalline_fraction >= DTC_THRESHOLD
    }
}

/// Power spectrum of a real series of even length `n >= 2`.
pub fn spectrum(series: &[f64]) -> Result<SpectrumResult> {
    let n = series.len();
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::OddLength(n));
    }
    let mut buf: Vec<Complex64> = series.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let inv_n = 1.0 / n as f64;
    let power: Vec<f64> = buf.iter().map(|s| (s * inv_n).norm_sqr()).collect();
    let frequencies = (0..n).map(|k| k as f64 * inv_n).collect();
    let mut out = SpectrumResult {
        frequencies,
        power,
        crystalline_fraction: 0.0,
    };
    out.crystalline_fraction = crystalline_fraction(&out)?;
    Ok(out)
}

/// `f = |S(0.5)|^2 / sum_nu |S(nu)|^2`.
pub fn crystalline_fraction(spec: &SpectrumResult) -> Result<f64> {
    let total = spec.total_power();
    if spec.power.is_empty() || total <= 0.0 || !total.is_finite() {
        return Err(Error::ZeroSpectrum);
    }
    Ok((spec.power[spec.half_bin()] / total).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct O(n^2) evaluation of the normalized DFT.
    fn naive_power(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                let s: Complex64 = x
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        Complex64::from_polar(v, -2.0 * PI * (k as f64) * (j as f64) / n as f64)
                    })
                    .sum();
                (s / n as f64).norm_sqr()
            })
            .collect()
    }

    #[test]
    fn constant_series_is_dc() {
        let s = spectrum(&[1.0; 16]).unwrap();
        assert_eq!(s.peak_bin(), 0);
        assert!((s.power[0] - 1.0).abs() < 1e-15);
        assert_eq!(s.crystalline_fraction, 0.0);
        assert!(!s.is_dtc());
    }

    #[test]
    fn alternating_series_is_nyquist() {
        let x: Vec<f64> = (0..200).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let s = spectrum(&x).unwrap();
        assert_eq!(s.peak_frequency(), 0.5);
        assert!((s.power[100] - 1.0).abs() < 1e-12);
        assert!((s.crystalline_fraction - 1.0).abs() < 1e-12);
        assert!(s.has_single_subharmonic_peak());
        assert!((s.omega_rad()[100] - PI).abs() < 1e-15);
    }

    #[test]
    fn odd_and_short_lengths_rejected() {
        assert_eq!(spectrum(&[1.0, 2.0, 3.0]), Err(Error::OddLength(3)));
        assert_eq!(spectrum(&[1.0]), Err(Error::OddLength(1)));
        assert_eq!(spectrum(&[]), Err(Error::OddLength(0)));
    }

    #[test]
    fn zero_series_rejected() {
        assert_eq!(spectrum(&[0.0; 8]), Err(Error::ZeroSpectrum));
        let empty = SpectrumResult {
            frequencies: vec![0.0, 0.5],
            power: vec![0.0, 0.0],
            crystalline_fraction: 0.0,
        };
        assert_eq!(crystalline_fraction(&empty), Err(Error::ZeroSpectrum));
    }

    #[test]
    fn matches_direct_dft() {
        let x: Vec<f64> = (0..24).map(|j| (0.7 * j as f64).sin() + 0.1 * j as f64).collect();
        let s = spectrum(&x).unwrap();
        for (a, b) in s.power.iter().zip(naive_power(&x)) {
            assert!((a - b).abs() < 1e-12 * b.max(1.0));
        }
    }

    proptest! {
        #[test]
        fn parseval(x in prop::collection::vec(-1.0f64..1.0, 1..60usize)) {
            let mut x = x;
            if x.len() % 2 == 1 { x.push(0.3); }
            prop_assume!(x.iter().any(|v| v.abs() > 1e-6));
            let s = spectrum(&x).unwrap();
            let energy: f64 = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
            prop_assert!((s.total_power() - energy).abs() <= 1e-10 * energy);
            prop_assert!((0.0..=1.0).contains(&s.crystalline_fraction));
        }
    }
}
