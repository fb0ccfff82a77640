//! Modified Bessel function of the first kind, order one.
//!
//! Chebyshev expansions from the Cephes `i1.c` / `i1e.c` routines: one on
//! `[0, 8]` for `exp(-x) I1(x) / x`, one on `(8, inf)` for
//! `exp(-x) sqrt(x) I1(x)`.

#[allow(clippy::excessive_precision)]
const I1_COEFFS_A: [f64; 29] = [
    2.77791411276104639959E-18,
    -2.11142121435816608115E-17,
    1.55363195773620046921E-16,
    -1.10559694773538630805E-15,
    7.60068429473540693410E-15,
    -5.04218550472791168711E-14,
    3.22379336594557470981E-13,
    -1.98397439776494371520E-12,
    1.17361862988909016308E-11,
    -6.66348972350202774223E-11,
    3.62559028155211703701E-10,
    -1.88724975172282928790E-9,
    9.38153738649577178388E-9,
    -4.44505912879632808065E-8,
    2.00329475355213526229E-7,
    -8.56872026469545474066E-7,
    3.47025130813767847674E-6,
    -1.32731636560394358279E-5,
    4.78156510755005422638E-5,
    -1.61760815825896745588E-4,
    5.12285956168575772895E-4,
    -1.51357245063125314899E-3,
    4.15642294431288815669E-3,
    -1.05640848946261981558E-2,
    2.47264490306265168283E-2,
    -5.29459812080949914269E-2,
    1.02643658689847095384E-1,
    -1.76416518357834055153E-1,
    2.52587186443633654823E-1,
];

#[allow(clippy::excessive_precision)]
const I1_COEFFS_B: [f64; 25] = [
    7.51729631084210481353E-18,
    4.41434832307170791151E-18,
    -4.65030536848935832153E-17,
    -3.20952592199342395980E-17,
    2.96262899764595013876E-16,
    3.30820231092092828324E-16,
    -1.88035477551078244854E-15,
    -3.81440307243700780478E-15,
    1.04202769841288027642E-14,
    4.27244001671195135429E-14,
    -2.10154184277266431302E-14,
    -4.08355111109219731823E-13,
    -7.19855177624590851209E-13,
    2.03562854414708950722E-12,
    1.41258074366137813316E-11,
    3.25260358301548823856E-11,
    -1.89749581235054123450E-11,
    -5.58974346219658380687E-10,
    -3.83538038596423702205E-9,
    -2.63146884688951950684E-8,
    -2.51223623787020892529E-7,
    -3.88256480887769039346E-6,
    -1.10588938762623716291E-4,
    -9.76109749136146840777E-3,
    7.78576235018280120474E-1,
];

/// Clenshaw recurrence for a Chebyshev series in Cephes ordering.
fn chbevl(x: f64, coeffs: &[f64]) -> f64 {
    let mut b0 = coeffs[0];
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in &coeffs[1..] {
        b2 = b1;
        b1 = b0;
        b0 = x.mul_add(b1, c) - b2;
    }
    0.5 * (b0 - b2)
}

/// Exponentially scaled `I1(x) * exp(-|x|)`. Never overflows.
pub fn bessel_i1e(x: f64) -> f64 {
    let z = x.abs();
    let r = if z <= 8.0 {
        chbevl(z.mul_add(0.5, -2.0), &I1_COEFFS_A) * z
    } else {
        chbevl(32.0 / z - 2.0, &I1_COEFFS_B) / z.sqrt()
    };
    r.copysign(x)
}

/// `I1(x)`; overflows to infinity beyond `x ~ 713`.
pub fn bessel_i1(x: f64) -> f64 {
    bessel_i1e(x) * x.abs().exp()
}

/// `ln(I1(x) exp(-x))` for `x > 0`.
pub fn ln_bessel_i1e(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 1e-150 {
        // I1(x) ~ x/2; keeps the log finite where i1e would underflow.
        return (0.5 * x).ln() - x;
    }
    bessel_i1e(x).ln()
}

/// `ln I1(x)` for `x > 0`, finite for every finite positive argument.
pub fn ln_bessel_i1(x: f64) -> f64 {
    ln_bessel_i1e(x) + x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;

    /// Power series sum_k (x/2)^(2k+1) / (k! (k+1)!).
    fn i1_series(x: f64) -> f64 {
        let h = 0.5 * x;
        let mut term = h;
        let mut sum = term;
        for k in 0..500 {
            let k = k as f64;
            term *= h * h / ((k + 1.0) * (k + 2.0));
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        sum
    }

    /// Integral representation exp(-x) I1(x) = (1/pi) int_0^pi exp(x(cos t - 1)) cos t dt.
    fn i1e_integral(x: f64) -> f64 {
        let pi = std::f64::consts::PI;
        let f = |t: f64| {
            let s = (0.5 * t).sin();
            (-2.0 * x * s * s).exp() * t.cos()
        };
        // The integrand is concentrated on t = O(1/sqrt(x)).
        let split = (40.0 / x.sqrt()).min(pi);
        let mut v = integrate(f, 0.0, split, 1e-300, 1e-14).value;
        if split < pi {
            v += integrate(f, split, pi, 1e-300, 1e-14).value;
        }
        v / pi
    }

    #[test]
    fn matches_power_series() {
        for &x in &[1e-6, 0.0024, 0.5, 1.0, 3.74, 7.99, 8.0, 8.01, 10.0, 20.0, 35.0] {
            let want = i1_series(x);
            let got = bessel_i1(x);
            assert!((got - want).abs() <= 5e-15 * want, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn matches_integral_representation_for_large_arguments() {
        for &x in &[50.0, 100.0, 1e3, 1e4, 1e6] {
            let want = i1e_integral(x);
            let got = bessel_i1e(x);
            assert!((got - want).abs() <= 1e-12 * want, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn reference_values() {
        // Independently tabulated values of I1.
        assert!((bessel_i1(3.74) - 7.709_894_215_253_694).abs() < 1e-12);
        assert!((bessel_i1(10.0) - 2_670.988_303_701_255).abs() < 1e-9);
        assert_eq!(bessel_i1e(0.0), 0.0);
        assert!(bessel_i1e(-2.0) < 0.0);
    }

    #[test]
    fn log_is_finite_far_beyond_overflow() {
        let x = 1e5;
        assert!(bessel_i1(x).is_infinite());
        let ln = ln_bessel_i1(x);
        // Leading asymptotics: ln I1(x) ~ x - 0.5 ln(2 pi x) - 3/(8x).
        let approx = x - 0.5 * (2.0 * std::f64::consts::PI * x).ln() - 3.0 / (8.0 * x);
        assert!((ln - approx).abs() < 1e-9);
        assert!((ln_bessel_i1(1e-200) - (0.5e-200f64).ln()).abs() < 1e-12);
    }
}
