//! General Matérn covariance through the Gamma function and the modified
//! Bessel function of the second kind, used as a reference for closed forms.

use statrs::function::gamma::gamma;

/// K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt, trapezoid rule.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    assert!(x > 0.0);
    let t_max = (750.0 / x).max(1.0 + 1e-12).acosh() + 1.0;
    let h = 1e-3;
    let steps = (t_max / h).ceil() as usize;
    let f = |t: f64| (-x * t.cosh()).exp() * (nu * t).cosh();
    let mut s = 0.5 * (f(0.0) + f(steps as f64 * h));
    for i in 1..steps {
        s += f(i as f64 * h);
    }
    s * h
}

pub fn matern_general(d: f64, length: f64, sigma_f: f64, nu: f64) -> f64 {
    if d == 0.0 {
        return sigma_f * sigma_f;
    }
    let z = (2.0 * nu).sqrt() * d / length;
    sigma_f * sigma_f * z.powf(nu) * bessel_k(nu, z) / (gamma(nu) * 2f64.powf(nu - 1.0))
}
