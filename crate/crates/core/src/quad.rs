//! Adaptive Gauss-Kronrod quadrature over a list of panels with a global
//! refinement heap, plus an exp-sinh transform for semi-infinite pieces and
//! a log-factored driver for integrands whose scale lives far outside f64.
//!
//! Everything here is deterministic: the heap breaks error-estimate ties by
//! insertion order, so identical inputs reproduce identical refinement
//! sequences and identical results.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Tolerances and refinement budget for adaptive quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_refinements: u32,
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_refinements: u32) -> Result<Self> {
        if !(abs_tol >= 0.0) || !(rel_tol >= 0.0) || abs_tol + rel_tol <= 0.0 {
            return Err(Error::Domain(
                "quadrature tolerances must be nonnegative with a positive sum".into(),
            ));
        }
        if max_refinements == 0 {
            return Err(Error::Domain("max_refinements must be at least 1".into()));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_refinements,
        })
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-9,
            max_refinements: 2000,
        }
    }
}

/// Integral value with its error estimate.
#[derive(Clone, Copy, Debug)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
}

/// One integration piece: the closure is already expressed in the variable
/// being integrated over [lo, hi].
pub struct Panel<'a> {
    pub lo: f64,
    pub hi: f64,
    pub f: &'a dyn Fn(f64) -> f64,
}

impl<'a> Panel<'a> {
    pub fn new(lo: f64, hi: f64, f: &'a dyn Fn(f64) -> f64) -> Self {
        Self { lo, hi, f }
    }
}

// 15-point Kronrod abscissae on [-1, 1] (positive half) and the matching
// 7-point Gauss weights, from the usual QUADPACK tables.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// G7K15 on [lo, hi]: returns the Kronrod value and a QUADPACK-style error
/// estimate.
fn qk15(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);

    let fc = f(center);
    let mut result_g = fc * WG[3];
    let mut result_k = fc * WGK[7];
    let mut resabs = fc.abs() * WGK[7];

    let mut fv = [0.0f64; 15];
    fv[7] = fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        let sum = f1 + f2;
        result_k += WGK[j] * sum;
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            result_g += WG[j / 2] * sum;
        }
    }

    let mean = 0.5 * result_k;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }

    let result = result_k * half;
    resabs *= half.abs();
    resasc *= half.abs();
    let mut err = ((result_k - result_g) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * 1.0_f64.min((200.0 * err / resasc).powf(1.5));
    }
    let floor = 50.0 * f64::EPSILON * resabs;
    if floor > err {
        err = floor;
    }
    (result, err)
}

#[derive(Clone, Copy)]
struct Segment {
    err: f64,
    val: f64,
    lo: f64,
    hi: f64,
    panel: usize,
    id: u64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal && self.id == other.id
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap on error, older segment wins ties
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Adaptively integrate the union of panels until the summed error estimate
/// meets max(abs_tol, rel_tol * |value|) or the refinement budget runs out.
pub fn integrate_panels(panels: &[Panel<'_>], spec: &QuadratureSpec) -> Result<Estimate> {
    let mut heap = BinaryHeap::with_capacity(panels.len() + spec.max_refinements as usize);
    let mut done = Vec::new();
    let mut next_id = 0u64;
    let mut errsum = 0.0;
    let mut valsum = 0.0;

    for (pi, p) in panels.iter().enumerate() {
        if !(p.lo < p.hi) {
            continue;
        }
        let (v, e) = qk15(p.f, p.lo, p.hi);
        errsum += e;
        valsum += v;
        heap.push(Segment {
            err: e,
            val: v,
            lo: p.lo,
            hi: p.hi,
            panel: pi,
            id: next_id,
        });
        next_id += 1;
    }

    let tol = |v: f64| spec.abs_tol.max(spec.rel_tol * v.abs());
    let mut refinements = 0u32;
    while errsum > tol(valsum) && refinements < spec.max_refinements {
        let Some(worst) = heap.pop() else { break };
        let width_floor = 1e-14 * worst.lo.abs().max(worst.hi.abs()).max(1.0);
        if worst.hi - worst.lo <= width_floor {
            // cannot split further; retire the segment with its error
            done.push(worst);
            continue;
        }
        let mid = 0.5 * (worst.lo + worst.hi);
        let f = panels[worst.panel].f;
        let (v1, e1) = qk15(f, worst.lo, mid);
        let (v2, e2) = qk15(f, mid, worst.hi);
        valsum += v1 + v2 - worst.val;
        errsum += e1 + e2 - worst.err;
        heap.push(Segment {
            err: e1,
            val: v1,
            lo: worst.lo,
            hi: mid,
            panel: worst.panel,
            id: next_id,
        });
        heap.push(Segment {
            err: e2,
            val: v2,
            lo: mid,
            hi: worst.hi,
            panel: worst.panel,
            id: next_id + 1,
        });
        next_id += 2;
        refinements += 1;
    }

    // deterministic compensated re-sum over all segments
    done.extend(heap);
    done.sort_by(|a, b| {
        a.panel
            .cmp(&b.panel)
            .then_with(|| a.lo.total_cmp(&b.lo))
    });
    let mut value = 0.0f64;
    let mut comp = 0.0f64;
    let mut abs_error = 0.0f64;
    for s in &done {
        let y = s.val - comp;
        let t = value + y;
        comp = (t - value) - y;
        value = t;
        abs_error += s.err;
    }

    if abs_error > tol(value) {
        return Err(Error::AccuracyNotReached {
            achieved: abs_error,
            required: tol(value),
        });
    }
    Ok(Estimate { value, abs_error })
}

/// Truncation point of the exp-sinh variable: x - anchor spans roughly
/// [7e-26, 1.4e25] over t in [-T, T], which is past the decay range of every
/// integrand in this crate.
pub const EXP_SINH_T: f64 = 4.3;
const EXP_SINH_C: f64 = std::f64::consts::FRAC_PI_2;

/// Map the tail integral int_anchor^inf f(x) dx onto t in [-T, T] via
/// x = anchor + exp(c sinh t).
pub fn exp_sinh_integrand<'a>(
    anchor: f64,
    f: &'a dyn Fn(f64) -> f64,
) -> impl Fn(f64) -> f64 + 'a {
    move |t: f64| {
        let sh = EXP_SINH_C * t.sinh();
        let ex = sh.exp();
        let jac = EXP_SINH_C * t.cosh() * ex;
        if jac == 0.0 || !jac.is_finite() {
            return 0.0;
        }
        let v = f(anchor + ex);
        if v == 0.0 {
            0.0
        } else {
            v * jac
        }
    }
}

/// Integral of exp(log_f) over [lo, inf), factored about the largest
/// log-integrand value seen on the knot skeleton so that integrands whose
/// scale is far outside f64 still integrate at full relative accuracy.
///
/// `knots` must be strictly inside (lo, inf) and sorted callers' knots are
/// sorted and deduplicated here. Returns the natural log of the integral and
/// the linear value (which may underflow to zero).
#[cfg_attr(not(test), allow(dead_code))]
pub struct LogIntegral {
    pub ln: f64,
    pub value: f64,
    pub abs_error_scaled: f64,
}

pub fn integrate_log_semi_infinite(
    log_f: &dyn Fn(f64) -> f64,
    lo: f64,
    knots: &[f64],
    spec: &QuadratureSpec,
) -> Result<LogIntegral> {
    let mut ks: Vec<f64> = knots
        .iter()
        .copied()
        .filter(|&k| k.is_finite() && k > lo)
        .collect();
    ks.sort_by(f64::total_cmp);
    ks.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * a.abs().max(b.abs()).max(1e-300));
    if ks.is_empty() {
        ks.push(lo + 1.0);
    }

    // scale from the skeleton plus panel midpoints
    let mut scale = f64::NEG_INFINITY;
    let mut probe = |x: f64| {
        let v = log_f(x);
        if v > scale {
            scale = v;
        }
    };
    let mut prev = lo;
    for &k in &ks {
        probe(k);
        probe(0.5 * (prev + k));
        prev = k;
    }
    probe(prev + (prev - lo).max(1.0));
    if scale == f64::NEG_INFINITY {
        return Ok(LogIntegral {
            ln: f64::NEG_INFINITY,
            value: 0.0,
            abs_error_scaled: 0.0,
        });
    }

    let s = scale;
    let g = move |x: f64| {
        let l = log_f(x);
        if l == f64::NEG_INFINITY {
            0.0
        } else {
            (l - s).exp()
        }
    };
    let tail_anchor = *ks.last().unwrap();
    let tail = exp_sinh_integrand(tail_anchor, &g);

    let mut panels = Vec::with_capacity(ks.len() + 1);
    let mut prev = lo;
    for &k in &ks {
        panels.push(Panel::new(prev, k, &g));
        prev = k;
    }
    panels.push(Panel::new(-EXP_SINH_T, EXP_SINH_T, &tail));

    let est = integrate_panels(&panels, spec)?;
    let ln = if est.value > 0.0 {
        scale + est.value.ln()
    } else {
        f64::NEG_INFINITY
    };
    Ok(LogIntegral {
        ln,
        value: ln.exp(),
        abs_error_scaled: est.abs_error,
    })
}

/// Geometric knot cascade around a center: center +- scale * 3^k on both
/// sides, clipped to (lo, inf). Gives the refiner a skeleton that cannot
/// miss a peak of width `scale` no matter how far it sits from the domain
/// boundary.
pub fn knot_cascade(center: f64, scale: f64, lo: f64, out: &mut Vec<f64>) {
    if !center.is_finite() || !(scale > 0.0) {
        return;
    }
    if center > lo {
        out.push(center);
    }
    let mut step = scale;
    for _ in 0..40 {
        let right = center + step;
        out.push(right);
        let left = center - step;
        if left > lo {
            out.push(left);
        }
        if step > 1e18 {
            break;
        }
        step *= 3.0;
        if center - step <= lo && center + step > center + 1e18 {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(abs: f64, rel: f64) -> QuadratureSpec {
        QuadratureSpec::new(abs, rel, 2000).unwrap()
    }

    #[test]
    fn polynomial_is_exact() {
        // G7K15 integrates degree <= 22 exactly; the requested tolerance sits
        // just above the 50 eps resabs round-off floor of the error model
        let f = |x: f64| 3.0 * x * x;
        let est = integrate_panels(&[Panel::new(0.0, 2.0, &f)], &spec(1e-13, 1e-13)).unwrap();
        assert!((est.value - 8.0).abs() < 1e-13);
        assert!(est.abs_error < 1e-12);
    }

    #[test]
    fn smooth_integral_to_tolerance() {
        let f = |x: f64| x.sin();
        let est = integrate_panels(
            &[Panel::new(0.0, std::f64::consts::PI, &f)],
            &spec(1e-14, 1e-12),
        )
        .unwrap();
        assert!((est.value - 2.0).abs() < 1e-13);
    }

    #[test]
    fn sharp_peak_found_by_refinement() {
        // narrow Gaussian inside a wide panel
        let f = |x: f64| (-0.5 * ((x - 0.3) / 1e-3).powi(2)).exp();
        let want = 1e-3 * (2.0 * std::f64::consts::PI).sqrt();
        let est = integrate_panels(
            &[Panel::new(0.0, 0.3, &f), Panel::new(0.3, 1.0, &f)],
            &spec(1e-15, 1e-10),
        )
        .unwrap();
        assert!(((est.value - want) / want).abs() < 1e-9, "got {}", est.value);
    }

    #[test]
    fn budget_exhaustion_reports_error() {
        let f = |x: f64| (1e4 * x).sin().abs();
        let tight = QuadratureSpec::new(1e-16, 1e-16, 3).unwrap();
        match integrate_panels(&[Panel::new(0.0, 1.0, &f)], &tight) {
            Err(Error::AccuracyNotReached { achieved, required }) => {
                assert!(achieved > required);
            }
            other => panic!("expected accuracy error, got {other:?}"),
        }
    }

    #[test]
    fn exp_sinh_covers_exponential_tail() {
        // int_0^inf e^{-x} dx = 1
        let f = |x: f64| (-x).exp();
        let t = exp_sinh_integrand(0.0, &f);
        let est = integrate_panels(
            &[
                Panel::new(-EXP_SINH_T, 0.0, &t),
                Panel::new(0.0, EXP_SINH_T, &t),
            ],
            &spec(1e-13, 1e-11),
        )
        .unwrap();
        assert!((est.value - 1.0).abs() < 1e-11, "got {}", est.value);
    }

    #[test]
    fn exp_sinh_shifted_anchor() {
        // int_2^inf e^{-x} dx = e^{-2}
        let f = |x: f64| (-x).exp();
        let t = exp_sinh_integrand(2.0, &f);
        let est = integrate_panels(
            &[
                Panel::new(-EXP_SINH_T, 0.0, &t),
                Panel::new(0.0, EXP_SINH_T, &t),
            ],
            &spec(1e-14, 1e-11),
        )
        .unwrap();
        let want = (-2.0f64).exp();
        assert!(((est.value - want) / want).abs() < 1e-11);
    }

    #[test]
    fn log_factored_handles_huge_scales() {
        // int_0^inf e^{1000} e^{-x} dx = e^{1000}: scale far outside f64
        let lf = |x: f64| 1000.0 - x;
        let got = integrate_log_semi_infinite(&lf, 0.0, &[0.5, 1.0, 3.0], &spec(1e-13, 1e-11))
            .unwrap();
        assert!((got.ln - 1000.0).abs() < 1e-10, "ln = {}", got.ln);
        assert_eq!(got.value, f64::INFINITY); // linear value overflows, ln is the answer
    }

    #[test]
    fn log_factored_deep_tail_keeps_relative_accuracy() {
        // int_0^inf e^{-800 - x} dx = e^{-800}
        let lf = |x: f64| -800.0 - x;
        let got = integrate_log_semi_infinite(&lf, 0.0, &[1.0], &spec(1e-13, 1e-11)).unwrap();
        assert!((got.ln - (-800.0)).abs() < 1e-10);
        assert_eq!(got.value, 0.0);
    }

    #[test]
    fn gaussian_over_half_line() {
        // int_0^inf e^{-x^2/2} dx = sqrt(pi/2)
        let lf = |x: f64| -0.5 * x * x;
        let got =
            integrate_log_semi_infinite(&lf, 0.0, &[0.5, 1.0, 2.0, 5.0], &spec(1e-14, 1e-12))
                .unwrap();
        let want = (std::f64::consts::PI / 2.0).sqrt();
        assert!(((got.value - want) / want).abs() < 1e-11);
        // the error estimate is for the peak-scaled integrand (peak 1 here)
        assert!(got.abs_error_scaled < 1e-11 && got.abs_error_scaled > 0.0);
    }

    #[test]
    fn deterministic_repeats() {
        let f = |x: f64| (x * 37.0).sin().exp();
        let a = integrate_panels(&[Panel::new(0.0, 10.0, &f)], &spec(1e-12, 1e-10)).unwrap();
        let b = integrate_panels(&[Panel::new(0.0, 10.0, &f)], &spec(1e-12, 1e-10)).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::new(0.0, 0.0, 10).is_err());
        assert!(QuadratureSpec::new(1e-12, 1e-9, 0).is_err());
        assert!(QuadratureSpec::new(0.0, 1e-9, 1).is_ok());
    }
}
