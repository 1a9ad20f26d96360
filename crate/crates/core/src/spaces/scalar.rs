//! Complex scalar kernels that stay accurate near the identity.

use num_complex::Complex64;

pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `e^z - 1` without cancellation for small `|z|`.
pub fn expm1(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    let half = (0.5 * y).sin();
    Complex64::new(x.exp_m1() * y.cos() - 2.0 * half * half, x.exp() * y.sin())
}

/// Principal `log(1 + w)`, accurate for small `|w|`.
pub fn ln_1p(w: Complex64) -> Complex64 {
    let re = if w.norm() < 0.5 {
        0.5 * (2.0 * w.re + w.norm_sqr()).ln_1p()
    } else {
        (ONE + w).norm().ln()
    };
    Complex64::new(re, w.im.atan2(1.0 + w.re))
}

/// `c^n` by binary powering.
pub fn powu(c: Complex64, mut n: u128) -> Complex64 {
    let mut base = c;
    let mut acc = ONE;
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        n >>= 1;
        if n > 0 {
            base *= base;
        }
    }
    acc
}

/// `|e^u - e^w|` evaluated as `|e^w| * |e^(u-w) - 1|`.
pub fn exp_distance(u: Complex64, w: Complex64) -> f64 {
    w.re.exp() * expm1(u - w).norm()
}

pub fn is_finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
