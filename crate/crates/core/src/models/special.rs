//! Special functions used by the model curves.

/// Below this the power series is used, above it the asymptotic expansion.
const I0_CROSSOVER: f64 = 25.0;

/// Modified Bessel function of the first kind, order zero.
///
/// Saturates to `+inf` once `e^|x|` overflows (|x| > ~713); use
/// [`bessel_i0e`] when the argument can be large.
pub fn bessel_i0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < I0_CROSSOVER {
        i0_series(ax)
    } else {
        let e = ax.exp();
        if e.is_infinite() {
            f64::INFINITY
        } else {
            e * i0e_asymptotic(ax)
        }
    }
}

/// Exponentially scaled `e^{-|x|} I0(x)`; finite for every finite input.
pub fn bessel_i0e(x: f64) -> f64 {
    let ax = x.abs();
    if ax < I0_CROSSOVER {
        (-ax).exp() * i0_series(ax)
    } else {
        i0e_asymptotic(ax)
    }
}

fn i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        k += 1.0;
    }
    sum
}

fn i0e_asymptotic(x: f64) -> f64 {
    // sum_k ((2k-1)!!)^2 / (k! (8x)^k)
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let kf = k as f64;
        let next = term * (2.0 * kf - 1.0) * (2.0 * kf - 1.0) / (kf * 8.0 * x);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Gamma function; overflows to `+inf` above ~171.6.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}
