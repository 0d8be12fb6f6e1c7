//! The normal inverse Gaussian law NIG(alpha, beta, mu, delta) and the
//! moment-matching machinery that approximates the difference
//! Z = X1 - X2 of two inverse Gaussian variables: cumulants of Z, the
//! generic four-moment fit, and the closed forms for the two use cases
//! (equal parameter pairs, and equal ratios b1/a1 = b2/a2).

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ig::IGParams;
use crate::quad::{integrate_log_semi_infinite, knot_cascade, QuadratureSpec};
use crate::special_fn::{k1_pos, log_k1_pos, Accuracy};

/// Below this skewness the fit switches to the exact symmetric limit
/// (beta = 0); the asymmetric formulas divide by S and lose all digits
/// earlier than this.
const SYMMETRIC_SKEW_EPS: f64 = 1e-8;

/// Parameter quadruple of a normal inverse Gaussian law.
/// alpha > 0 is tail heaviness, beta the asymmetry with |beta| < alpha,
/// mu the location, delta > 0 the scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NIGParams {
    alpha: f64,
    beta: f64,
    mu: f64,
    delta: f64,
}

/// First four standardized moments of a scalar law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentSet {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// First four cumulants of a scalar law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CumulantSet {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
}

impl NIGParams {
    pub fn new(alpha: f64, beta: f64, mu: f64, delta: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() || !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Domain(format!(
                "NIG requires alpha > 0 and delta > 0, got alpha = {alpha}, delta = {delta}"
            )));
        }
        if !(beta.abs() < alpha) || !mu.is_finite() {
            return Err(Error::Domain(format!(
                "NIG requires |beta| < alpha and finite mu, got beta = {beta}, mu = {mu}"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            mu,
            delta,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// sqrt(alpha^2 - beta^2), via the factored product to keep accuracy
    /// when |beta| approaches alpha.
    pub fn gamma(&self) -> f64 {
        ((self.alpha - self.beta) * (self.alpha + self.beta)).sqrt()
    }

    /// ln of the density
    /// (alpha delta / pi) e^{delta gamma + beta (y - mu)}
    /// K1(alpha s) / s with s = sqrt(delta^2 + (y - mu)^2).
    /// Positive beta tilts mass toward the right tail, the same orientation
    /// as the mean mu + delta beta / gamma and the mixture sampler.
    /// The Bessel factor switches to its log-domain branch once the argument
    /// exceeds 500, so the expression stays finite arbitrarily deep in the
    /// tails.
    pub fn log_pdf(&self, y: f64) -> f64 {
        let dy = y - self.mu;
        let s = dy.hypot(self.delta);
        let q = self.alpha * s;
        let log_k1 = if q > 500.0 {
            log_k1_pos(q)
        } else {
            k1_pos(q).ln()
        };
        (self.alpha * self.delta / std::f64::consts::PI).ln() + self.delta * self.gamma()
            + self.beta * dy
            + log_k1
            - s.ln()
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.log_pdf(y).exp()
    }

    /// Mean, variance, skewness, excess kurtosis implied by the parameters.
    pub fn moments(&self) -> MomentSet {
        let g = self.gamma();
        let (al, be, de) = (self.alpha, self.beta, self.delta);
        MomentSet {
            mean: self.mu + de * be / g,
            variance: de * al * al / g.powi(3),
            skewness: 3.0 * be / (al * (de * g).sqrt()),
            excess_kurtosis: 3.0 * (1.0 + 4.0 * be * be / (al * al)) / (de * g),
        }
    }

    /// Upper tail by adaptive quadrature of the density over [y, inf), in
    /// log-factored form. Error governed by `acc`, with the absolute part
    /// measured against the density's peak scale so deep tails keep their
    /// relative accuracy.
    pub fn log_tail(&self, y: f64, acc: &Accuracy) -> Result<f64> {
        let m = self.moments();
        let sigma = m.variance.sqrt();
        let mut knots = Vec::new();
        knot_cascade(m.mean, sigma, y, &mut knots);
        knot_cascade(self.mu, self.delta.min(sigma), y, &mut knots);
        // decay scale of the right tail when y is far out
        let rate = (self.alpha - self.beta).max(self.alpha * 1e-3);
        knot_cascade(y + 1.0 / rate, 1.0 / rate, y, &mut knots);
        let lf = |x: f64| self.log_pdf(x);
        let spec = QuadratureSpec::new(acc.abs_tol, acc.rel_tol, 4000)?;
        let est = integrate_log_semi_infinite(&lf, y, &knots, &spec)?;
        Ok(est.ln.min(0.0))
    }

    pub fn tail(&self, y: f64, acc: &Accuracy) -> Result<f64> {
        Ok(self.log_tail(y, acc)?.exp())
    }

    /// One exact draw through the variance-mean mixture: W follows the
    /// inverse Gaussian law with parameters (delta, gamma), and
    /// Y = mu + beta W + sqrt(W) N.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mixing = IGParams::new(self.delta, self.gamma())
            .expect("delta and gamma are positive by construction");
        let w = mixing.sample(rng);
        let n: f64 = rng.sample(StandardNormal);
        self.mu + self.beta * w + w.sqrt() * n
    }
}

/// First four cumulants of Z = X1 - X2: odd cumulants subtract, even add.
pub fn diff_cumulants(p1: &IGParams, p2: &IGParams) -> CumulantSet {
    let c1 = p1.cumulants();
    let c2 = p2.cumulants();
    CumulantSet {
        k1: c1.k1 - c2.k1,
        k2: c1.k2 + c2.k2,
        k3: c1.k3 - c2.k3,
        k4: c1.k4 + c2.k4,
    }
}

/// Moments of Z from its cumulants: M = k1, V = k2, S = k3 k2^{-3/2},
/// K = k4 k2^{-2}.
pub fn moments_of_diff(p1: &IGParams, p2: &IGParams) -> MomentSet {
    let k = diff_cumulants(p1, p2);
    MomentSet {
        mean: k.k1,
        variance: k.k2,
        skewness: k.k3 / k.k2.powf(1.5),
        excess_kurtosis: k.k4 / (k.k2 * k.k2),
    }
}

/// Invert the moment relations to NIG parameters.
///
/// Asymmetric case (|S| >= 1e-8), with rho = 3 K S^{-2} - 4:
///   alpha = 3 sqrt(rho) / ((rho - 1) sqrt(V) |S|)
///   beta  = 3 / ((rho - 1) sqrt(V) S)
///   mu    = M - 3 sqrt(V) / (rho S)
///   delta = 3 sqrt(rho - 1) sqrt(V) / (rho |S|)
/// Symmetric limit: beta = 0, mu = M, alpha = sqrt(3/(K V)), delta = V alpha.
/// Feasibility requires V > 0, K > 0 and rho > 1 (equivalently 3K > 5S^2).
pub fn fit_from_moments(m: &MomentSet) -> Result<NIGParams> {
    if !(m.variance > 0.0) || !m.variance.is_finite() {
        return Err(Error::InfeasibleMoments(format!(
            "variance must be positive, got {}",
            m.variance
        )));
    }
    let s = m.skewness;
    let k = m.excess_kurtosis;
    if !(k > 0.0) {
        return Err(Error::InfeasibleMoments(format!(
            "excess kurtosis must be positive, got {k}"
        )));
    }
    if 3.0 * k <= 5.0 * s * s {
        return Err(Error::InfeasibleMoments(format!(
            "rho <= 1: need 3K > 5S^2, got K = {k}, S = {s}"
        )));
    }
    if s.abs() < SYMMETRIC_SKEW_EPS {
        let alpha = (3.0 / (k * m.variance)).sqrt();
        let delta = m.variance * alpha;
        return NIGParams::new(alpha, 0.0, m.mean, delta);
    }
    let rho = 3.0 * k / (s * s) - 4.0;
    let sv = m.variance.sqrt();
    let alpha = 3.0 * rho.sqrt() / ((rho - 1.0) * sv * s.abs());
    let beta = 3.0 / ((rho - 1.0) * sv * s);
    let mu = m.mean - 3.0 * sv / (rho * s);
    let delta = 3.0 * (rho - 1.0).sqrt() * sv / (rho * s.abs());
    NIGParams::new(alpha, beta, mu, delta)
}

/// Canonical approximation pipeline for arbitrary parameter pairs:
/// cumulants of Z, moments, four-moment NIG fit.
pub fn approx_diff(p1: &IGParams, p2: &IGParams) -> Result<NIGParams> {
    fit_from_moments(&moments_of_diff(p1, p2))
}

/// Closed form for the equal-pair case a1 = a2 = a, b1 = b2 = b:
/// alpha = b^2/sqrt(5), beta = 0, mu = 0, delta = (2/sqrt(5)) a/b.
pub fn usecase1_params(a: f64, b: f64) -> Result<NIGParams> {
    if !(a > 0.0) || !(b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!(
            "parameters must be positive, got a = {a}, b = {b}"
        )));
    }
    let sqrt5 = 5.0_f64.sqrt();
    NIGParams::new(b * b / sqrt5, 0.0, 0.0, 2.0 / sqrt5 * a / b)
}

/// Closed form for the equal-ratio case b1/a1 = b2/a2 = c with a1 != a2.
/// Degenerates (tau = 0) when a1 = a2; use `usecase1_params` there.
pub fn usecase2_params(a1: f64, a2: f64, c: f64) -> Result<NIGParams> {
    if !(a1 > 0.0) || !(a2 > 0.0) || !(c > 0.0)
        || !a1.is_finite() || !a2.is_finite() || !c.is_finite()
    {
        return Err(Error::Domain(format!(
            "parameters must be positive, got a1 = {a1}, a2 = {a2}, c = {c}"
        )));
    }
    if a1 == a2 {
        return Err(Error::DegenerateInput(
            "a1 = a2 makes tau = 0; the pair is use case 1".into(),
        ));
    }
    let tau = (a1.powi(-4) - a2.powi(-4))
        / ((a1.powi(-2) + a2.powi(-2)).powf(1.5) * c.sqrt());
    let a1s = a1 * a1;
    let a2s = a2 * a2;
    let p = a1s * a1s + 3.0 * a1s * a2s + a2s * a2s;
    let d2 = a1s - a2s;
    let root_pc = ((a1.powi(-2) + a2.powi(-2)) / c.powi(3)).sqrt();
    let alpha = d2 * d2 * (p / (d2 * d2)).sqrt() / (5.0 * a1s * a2s * root_pc * tau.abs());
    let beta = -d2 * c * c / 5.0;
    let mu = (a1s * a1s - a2s * a2s) / (p * c);
    let delta = 5.0_f64.sqrt() * a1s * a2s * root_pc
        / ((a1s * a2s / (d2 * d2)).sqrt() * p * tau.abs());
    NIGParams::new(alpha, beta, mu, delta)
}
