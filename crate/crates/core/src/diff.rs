//! Reference evaluation of the law of Z = X1 - X2 for independent inverse
//! Gaussian variables: density and upper tail by adaptive quadrature, the
//! large-z tail approximation with its floor, and a comparison tail formula
//! for the equal-parameter case.

pub use crate::quad::QuadratureSpec;

use crate::error::{Error, Result};
use crate::ig::IGParams;
use crate::quad::{integrate_log_semi_infinite, knot_cascade};

/// Width of the narrowest feature a density of this law can have: the
/// standard deviation, capped by the mean for very diffuse parameters.
fn feature_scale(p: &IGParams) -> f64 {
    p.variance().sqrt().min(p.mean())
}

/// ln of the density of Z at z: log of
/// int f_{X1}(u) f_{X2}(u - z) du over u > max(0, z).
pub fn conv_log_pdf(
    p1: &IGParams,
    p2: &IGParams,
    z: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let lo = z.max(0.0);
    let lf = |u: f64| p1.log_pdf(u) + p2.log_pdf(u - z);
    let s = feature_scale(p1).min(feature_scale(p2));
    let mut knots = Vec::new();
    knot_cascade(p1.mode(), s, lo, &mut knots);
    knot_cascade(z + p2.mode(), s, lo, &mut knots);
    Ok(integrate_log_semi_infinite(&lf, lo, &knots, spec)?.ln)
}

/// Density of Z at z. Underflows to zero below exp(-745); use
/// `conv_log_pdf` when the magnitude itself is the question.
pub fn conv_pdf(p1: &IGParams, p2: &IGParams, z: f64, spec: &QuadratureSpec) -> Result<f64> {
    Ok(conv_log_pdf(p1, p2, z, spec)?.exp())
}

/// ln of P(Z > z), written as int_0^inf f_{X2}(w) tail_{X1}(w + z) dw.
/// The integrand is assembled from log-domain factors, so tails far below
/// 1e-300 still carry full relative accuracy.
pub fn conv_log_tail(
    p1: &IGParams,
    p2: &IGParams,
    z: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let lf = |w: f64| p2.log_pdf(w) + p1.log_tail(w + z);
    let s2 = feature_scale(p2);
    let mut knots = Vec::new();
    knot_cascade(p2.mode(), s2, 0.0, &mut knots);
    if z < 0.0 {
        // tail_{X1} switches off its constant branch at w = -z
        knots.push(-z);
        knot_cascade(-z, s2, 0.0, &mut knots);
    }
    // stationary point of the integrand in the large-z regime
    let wstar = p2.a() / p1.b().hypot(p2.b());
    knot_cascade(wstar, 0.5 * wstar, 0.0, &mut knots);
    let est = integrate_log_semi_infinite(&lf, 0.0, &knots, spec)?;
    Ok(est.ln.min(0.0))
}

pub fn conv_tail(p1: &IGParams, p2: &IGParams, z: f64, spec: &QuadratureSpec) -> Result<f64> {
    Ok(conv_log_tail(p1, p2, z, spec)?.exp())
}

/// z such that P(Z > z) = prob, by bracketing plus bisection on `conv_tail`.
pub fn conv_quantile(
    p1: &IGParams,
    p2: &IGParams,
    prob: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::Domain(format!(
            "quantile probability must lie in (0, 1), got {prob}"
        )));
    }
    let m = p1.mean() - p2.mean();
    let sd = (p1.variance() + p2.variance()).sqrt();
    let mut lo = m - 10.0 * sd;
    let mut hi = m + 10.0 * sd;
    let mut step = 10.0 * sd;
    while conv_tail(p1, p2, lo, spec)? <= prob {
        lo -= step;
        step *= 2.0;
        if step > 1e12 * sd {
            return Err(Error::Domain(format!(
                "failed to bracket quantile at probability {prob}"
            )));
        }
    }
    step = 10.0 * sd;
    while conv_tail(p1, p2, hi, spec)? >= prob {
        hi += step;
        step *= 2.0;
        if step > 1e12 * sd {
            return Err(Error::Domain(format!(
                "failed to bracket quantile at probability {prob}"
            )));
        }
    }
    let width_floor = 1e-12 * (1.0 + m.abs() + sd);
    for _ in 0..120 {
        if hi - lo <= width_floor {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if conv_tail(p1, p2, mid, spec)? > prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// ln of the large-z tail approximation
/// tail_{X1}(z) * MGF_{X2}(-b1^2 / 2).
/// For z <= 0 the first factor is 1 and the value sits on the floor.
pub fn asymptotic_log_tail(p1: &IGParams, p2: &IGParams, z: f64) -> f64 {
    let t = -0.5 * p1.b() * p1.b();
    let lm = p2
        .log_mgf(t)
        .expect("negative arguments are always inside the MGF domain");
    p1.log_tail(z) + lm
}

pub fn asymptotic_tail(p1: &IGParams, p2: &IGParams, z: f64) -> f64 {
    asymptotic_log_tail(p1, p2, z).exp()
}

/// The constant the tail approximation converges to as z drops toward 0:
/// MGF_{X2}(-b1^2 / 2). The log is the reliable representation; the linear
/// value underflows once the log passes about -745.
#[derive(Clone, Copy, Debug)]
pub struct TailFloor {
    pub value: f64,
    pub log_value: f64,
}

pub fn tail_floor(p1: &IGParams, p2: &IGParams) -> TailFloor {
    let t = -0.5 * p1.b() * p1.b();
    let log_value = p2
        .log_mgf(t)
        .expect("negative arguments are always inside the MGF domain");
    TailFloor {
        value: log_value.exp(),
        log_value,
    }
}

/// ln of the comparison tail formula for the equal-parameter case:
/// (2/b^2) exp(-(sqrt 2 - 1) a b) f_{X1}(z). Zero density for z <= 0
/// makes the value -inf there.
pub fn soa_log_tail(p: &IGParams, z: f64) -> f64 {
    if z <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let (a, b) = (p.a(), p.b());
    (2.0 / (b * b)).ln() - (std::f64::consts::SQRT_2 - 1.0) * a * b + p.log_pdf(z)
}

pub fn soa_tail(p: &IGParams, z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    soa_log_tail(p, z).exp()
}
