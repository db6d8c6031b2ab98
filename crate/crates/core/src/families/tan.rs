//! Complex tangent with argument reduction, accurate next to its poles and
//! far from the real axis.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

type C = Complex64;

/// Index `k` of the nearest pole `π/2 + kπ`.
pub(crate) fn nearest_pole_index(z: C) -> f64 {
    ((z.re - FRAC_PI_2) / PI).round()
}

pub(crate) fn pole_location(k: f64) -> C {
    C::new(FRAC_PI_2 + k * PI, 0.0)
}

pub(crate) fn tan(z: C) -> C {
    let k = (z.re / PI).round();
    let w = C::new(z.re - k * PI, z.im);
    if w.im > 20.0 {
        let e = (2.0 * C::i() * w).exp();
        return C::i() * (1.0 - e) / (1.0 + e);
    }
    if w.im < -20.0 {
        let e = (-2.0 * C::i() * w).exp();
        return -C::i() * (1.0 - e) / (1.0 + e);
    }
    // tan(d ± π/2) = −1/tan(d)
    let d = if w.re >= 0.0 { w - FRAC_PI_2 } else { w + FRAC_PI_2 };
    if d.norm() < 0.5 {
        return -1.0 / d.tan();
    }
    w.tan()
}
