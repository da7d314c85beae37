//! Matrix exponential by scaling and squaring with diagonal Padé approximants.
//!
//! Follows Higham (2005), "The scaling and squaring method for the matrix
//! exponential revisited": the lowest Padé degree in {3, 5, 7, 9, 13} whose
//! 1-norm threshold covers the input is used directly, otherwise the matrix is
//! scaled by `2^-s` into the degree-13 range and the result squared `s` times.

use nalgebra::{DMatrix, SMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Theta values for degrees 3, 5, 7, 9, 13 (Higham 2005, Table 2.3).
const THETA: [(usize, f64); 5] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
    (13, 5.371_920_351_148_152),
];

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm<const N: usize>(a: &SMatrix<Complex64, N, N>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn real<const N: usize>(m: &SMatrix<Complex64, N, N>, c: f64) -> SMatrix<Complex64, N, N> {
    m * Complex64::new(c, 0.0)
}

/// Numerator/denominator pieces `(U, V)` for the low-degree approximants.
fn pade_low<const N: usize>(
    a: &SMatrix<Complex64, N, N>,
    b: &[f64],
) -> (SMatrix<Complex64, N, N>, SMatrix<Complex64, N, N>) {
    let id = SMatrix::<Complex64, N, N>::identity();
    let a2 = a * a;
    let mut even = id;
    let mut u = real(&id, b[1]);
    let mut v = real(&id, b[0]);
    let mut k = 2;
    while k < b.len() {
        even *= a2;
        v += real(&even, b[k]);
        u += real(&even, b[k + 1]);
        k += 2;
    }
    (a * u, v)
}

fn pade13<const N: usize>(
    a: &SMatrix<Complex64, N, N>,
) -> (SMatrix<Complex64, N, N>, SMatrix<Complex64, N, N>) {
    let b = &B13;
    let id = SMatrix::<Complex64, N, N>::identity();
    let a2 = a * a;
    let a4 = a2 * a2;
    let a6 = a4 * a2;
    let inner_u = real(&a6, b[13]) + real(&a4, b[11]) + real(&a2, b[9]);
    let u = a * (a6 * inner_u
        + real(&a6, b[7])
        + real(&a4, b[5])
        + real(&a2, b[3])
        + real(&id, b[1]));
    let inner_v = real(&a6, b[12]) + real(&a4, b[10]) + real(&a2, b[8]);
    let v = a6 * inner_v + real(&a6, b[6]) + real(&a4, b[4]) + real(&a2, b[2]) + real(&id, b[0]);
    (u, v)
}

/// `exp(a)` for a dense complex square matrix.
pub fn expm<const N: usize>(a: &SMatrix<Complex64, N, N>) -> Result<SMatrix<Complex64, N, N>> {
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite entry in exponent".into()));
    }
    let norm = one_norm(a);
    let (u, v, squarings) = if let Some(&(deg, _)) = THETA[..4].iter().find(|(_, t)| norm <= *t) {
        let coeffs: &[f64] = match deg {
            3 => &B3,
            5 => &B5,
            7 => &B7,
            _ => &B9,
        };
        let (u, v) = pade_low(a, coeffs);
        (u, v, 0)
    } else {
        let theta13 = THETA[4].1;
        let s = if norm > theta13 {
            (norm / theta13).log2().ceil().max(0.0) as i32
        } else {
            0
        };
        let scaled = a * Complex64::new(2f64.powi(-s), 0.0);
        let (u, v) = pade13(&scaled);
        (u, v, s)
    };

    let denom = DMatrix::from_column_slice(N, N, (v - u).as_slice());
    let numer = DMatrix::from_column_slice(N, N, (v + u).as_slice());
    let solved = denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| Error::Numerical("singular Padé denominator".into()))?;
    let mut r = SMatrix::<Complex64, N, N>::from_column_slice(solved.as_slice());
    for _ in 0..squarings {
        r = r * r;
    }
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("matrix exponential overflowed".into()));
    }
    Ok(r)
}
