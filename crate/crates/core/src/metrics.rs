//! Evaluation measures: KL divergence between an exact and an approximate
//! density, the crossover probability of the timing channel, and
//! distributional test statistics for the Monte-Carlo harness.

use crate::diff;
use crate::error::{Error, Result};
use crate::ig::IGParams;
use crate::nig;
use crate::quad::{integrate_panels, Panel, QuadratureSpec};
use crate::special_fn::Accuracy;

/// Densities below this fraction of the exact density's peak are excluded
/// from the KL integrand; beneath it the integrand is quadrature noise.
const KL_FLOOR_FRACTION: f64 = 1e-12;

const SCAN_POINTS: usize = 2048;
const NORM_CHECK_TOL: f64 = 1e-4;

/// int exact ln(exact/approx) over the part of `support` where the exact
/// density exceeds 1e-12 of its peak. Both inputs must be normalized on the
/// support to about 1e-4. Small negative results (quadrature noise around
/// zero) are clipped to 0.
pub fn kl_divergence(
    exact: &dyn Fn(f64) -> f64,
    approx: &dyn Fn(f64) -> f64,
    support: (f64, f64),
    spec: &QuadratureSpec,
) -> Result<f64> {
    let (lo, hi) = support;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!(
            "support must be a finite interval, got ({lo}, {hi})"
        )));
    }

    let h = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let mut peak = 0.0f64;
    let mut exact_scan = [0.0f64; SCAN_POINTS];
    for (i, e) in exact_scan.iter_mut().enumerate() {
        *e = exact(lo + i as f64 * h);
        if *e > peak {
            peak = *e;
        }
    }
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::Domain(format!(
            "exact density has no positive finite peak on the support (peak = {peak})"
        )));
    }
    let floor = KL_FLOOR_FRACTION * peak;

    let mut first = None;
    let mut last = 0usize;
    for (i, &e) in exact_scan.iter().enumerate() {
        if e > floor {
            if approx(lo + i as f64 * h) <= 0.0 {
                return Err(Error::SupportMismatch(format!(
                    "approximate density vanishes at {} where the exact density is {e}",
                    lo + i as f64 * h
                )));
            }
            if first.is_none() {
                first = Some(i);
            }
            last = i;
        }
    }
    let Some(first) = first else {
        return Err(Error::Domain(
            "exact density is below its own floor everywhere on the support".into(),
        ));
    };
    let tlo = lo + first.saturating_sub(1) as f64 * h;
    let thi = lo + (last + 1).min(SCAN_POINTS - 1) as f64 * h;

    let mass = |f: &dyn Fn(f64) -> f64, label: &str| -> Result<f64> {
        let coarse = QuadratureSpec::new(1e-9, 1e-7, spec.max_refinements)?;
        let m = integrate_in_strips(f, tlo, thi, &coarse)?;
        if (m - 1.0).abs() > NORM_CHECK_TOL {
            return Err(Error::Domain(format!(
                "{label} density integrates to {m} on the truncated support; \
                 KL needs both inputs normalized to {NORM_CHECK_TOL}"
            )));
        }
        Ok(m)
    };
    mass(exact, "exact")?;
    mass(approx, "approximate")?;

    let integrand = |x: f64| {
        let e = exact(x);
        if e <= floor {
            0.0
        } else {
            e * (e.ln() - approx(x).ln())
        }
    };
    let v = integrate_in_strips(&integrand, tlo, thi, spec)?;
    if !v.is_finite() {
        return Err(Error::SupportMismatch(
            "KL integrand diverged; the approximate density vanishes inside the support".into(),
        ));
    }
    if v < -1e-6 {
        return Err(Error::Domain(format!(
            "KL came out {v}; the inputs are not consistent densities"
        )));
    }
    Ok(v.max(0.0))
}

/// Definite integral of f over [edges[0], edges[last]], pre-split at the
/// interior edges so that known features (peaks, kinks) start in panels of
/// their own. Refinement is shared across all panels; the tolerances in
/// `spec` apply to the whole integral.
pub fn integral(f: &dyn Fn(f64) -> f64, edges: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    if edges.len() < 2 || edges.iter().any(|e| !e.is_finite()) {
        return Err(Error::Domain(format!(
            "integration edges need at least two finite values, got {edges:?}"
        )));
    }
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(
            "integration edges must be strictly increasing".into(),
        ));
    }
    let panels: Vec<Panel> = edges
        .windows(2)
        .map(|w| Panel::new(w[0], w[1], f))
        .collect();
    Ok(integrate_panels(&panels, spec)?.value)
}

/// Adaptive integral of f over [lo, hi] seeded with 16 uniform strips, so
/// features anywhere in the interval are seen by the initial pass.
fn integrate_in_strips(
    f: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    const STRIPS: usize = 16;
    let w = (hi - lo) / STRIPS as f64;
    let panels: Vec<Panel> = (0..STRIPS)
        .map(|i| {
            let a = lo + i as f64 * w;
            let b = if i == STRIPS - 1 { hi } else { a + w };
            Panel::new(a, b, f)
        })
        .collect();
    Ok(integrate_panels(&panels, spec)?.value)
}

/// Which pipeline evaluates the tail of Z.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailMethod {
    /// Quadrature of the exact convolution.
    Exact,
    /// Moment-matched NIG surrogate.
    Nig,
    /// Large-z tail approximation.
    Asymptotic,
}

/// P(X1 - X2 > T): the probability that the two molecules arrive out of
/// order by more than T. T must be nonnegative and finite.
pub fn crossover_probability(
    p1: &IGParams,
    p2: &IGParams,
    t: f64,
    method: TailMethod,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!(
            "crossover horizon must be finite and nonnegative, got {t}"
        )));
    }
    match method {
        TailMethod::Exact => diff::conv_tail(p1, p2, t, spec),
        TailMethod::Nig => {
            let fitted = nig::approx_diff(p1, p2)?;
            let acc = Accuracy::new(spec.abs_tol, spec.rel_tol)?;
            fitted.tail(t, &acc)
        }
        TailMethod::Asymptotic => Ok(diff::asymptotic_tail(p1, p2, t)),
    }
}

/// Two-sided Kolmogorov-Smirnov statistic of a sorted sample against a
/// distribution function: sup over the sample of |empirical CDF - cdf|.
///
/// Panics if the sample is empty or unsorted; those are caller bugs, not
/// data conditions.
pub fn ks_distance(samples: &[f64], cdf: &dyn Fn(f64) -> f64) -> f64 {
    assert!(!samples.is_empty(), "KS statistic needs at least one sample");
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    let mut prev = f64::NEG_INFINITY;
    for (i, &x) in samples.iter().enumerate() {
        assert!(x >= prev, "KS statistic needs a sorted sample");
        prev = x;
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Pearson statistic sum (observed - expected)^2 / expected.
pub fn chi_square_statistic(observed: &[u64], expected: &[f64]) -> f64 {
    assert_eq!(
        observed.len(),
        expected.len(),
        "observed and expected bin counts must align"
    );
    observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum()
}

/// 99th percentile of the chi-square law with 49 degrees of freedom,
/// matching the 50-bin goodness-of-fit tests.
pub const CHI2_CRIT_DF49_P99: f64 = 74.919_474_308_478_16;
