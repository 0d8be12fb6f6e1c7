//! C ABI over the inverse Gaussian difference distribution library.
//!
//! Every function returns an [`IgdiffStatus`] and writes results through
//! out-pointers. Handles (`IgdiffPair`, `IgdiffSampler`) are opaque; create
//! them with the matching `_new` function and release them with `_free`.
//! Panics never cross the boundary: they are caught and surfaced as
//! `InternalError`.
//!
//! Every function is `unsafe` from Rust: pointers are null-checked but must
//! otherwise be valid for the access the documentation describes.

#![deny(unsafe_op_in_unsafe_fn)]
// The pointer contract is stated once above and in each function's parameter
// docs; repeating a safety section per function would also leak into the
// generated C header.
#![allow(clippy::missing_safety_doc)]

use std::panic::{catch_unwind, AssertUnwindSafe};

use igdiff::diff;
use igdiff::ig::{IGParams, PhysicalChannel};
use igdiff::mc::SampleStream;
use igdiff::metrics;
use igdiff::nig;
use igdiff::special_fn::{self, Accuracy};
use igdiff::Error;

const DEFAULT_ABS_TOL: f64 = 1e-12;
const DEFAULT_REL_TOL: f64 = 1e-9;
const MAX_REFINEMENTS: u32 = 4000;

/// Draws per substream pair; mirrors the library's chunked sampler so the
/// sequence from `igdiff_sampler_next` equals the library's bulk output.
const SAMPLE_CHUNK: u64 = 8192;

/// Result of every call. Zero means success; anything else leaves the
/// out-parameters untouched.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum IgdiffStatus {
    Ok = 0,
    /// A required pointer was null.
    NullArgument,
    /// A scalar argument was NaN where a number is required.
    InvalidArgument,
    /// Parameters outside the domain of the requested quantity.
    DomainError,
    /// The integrator could not certify the requested tolerance.
    AccuracyNotReached,
    /// The moment set admits no fit (requires 3 kurtosis > 5 skewness^2).
    InfeasibleMoments,
    /// Degenerate input, e.g. the equal-ratio closed form with a1 == a2.
    DegenerateInput,
    /// Density support does not match the requested comparison.
    SupportMismatch,
    /// Invalid tolerance or resource configuration.
    ConfigError,
    /// A panic was caught at the boundary; treat the call as failed.
    InternalError,
}

/// Normal inverse Gaussian parameters: tail weight alpha, asymmetry beta,
/// location mu, scale delta. Valid when alpha > 0, delta > 0, |beta| < alpha.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct IgdiffNigParams {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub delta: f64,
}

/// Mean, variance, skewness and excess kurtosis of a scalar law.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct IgdiffMoments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// First four cumulants of a scalar law.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct IgdiffCumulants {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
}

/// Which pipeline evaluates a tail probability.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum IgdiffTailMethod {
    /// Adaptive quadrature of the exact convolution.
    Exact = 0,
    /// Moment-matched normal inverse Gaussian surrogate.
    Nig = 1,
    /// Large-z closed-form tail approximation.
    Asymptotic = 2,
}

fn map_err(e: &Error) -> IgdiffStatus {
    match e {
        Error::Domain(_) => IgdiffStatus::DomainError,
        Error::AccuracyNotReached { .. } => IgdiffStatus::AccuracyNotReached,
        Error::InfeasibleMoments(_) => IgdiffStatus::InfeasibleMoments,
        Error::DegenerateInput(_) => IgdiffStatus::DegenerateInput,
        Error::SupportMismatch(_) => IgdiffStatus::SupportMismatch,
        Error::Config(_) => IgdiffStatus::ConfigError,
        Error::Io(_) => IgdiffStatus::InternalError,
    }
}

fn guarded<F>(f: F) -> IgdiffStatus
where
    F: FnOnce() -> IgdiffStatus,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => IgdiffStatus::InternalError,
    }
}

/// Write a fallible scalar through `out`.
fn put(out: *mut f64, value: Result<f64, Error>) -> IgdiffStatus {
    if out.is_null() {
        return IgdiffStatus::NullArgument;
    }
    match value {
        Ok(v) => {
            unsafe { *out = v };
            IgdiffStatus::Ok
        }
        Err(e) => map_err(&e),
    }
}

fn nan_check(args: &[f64]) -> IgdiffStatus {
    if args.iter().any(|x| x.is_nan()) {
        IgdiffStatus::InvalidArgument
    } else {
        IgdiffStatus::Ok
    }
}

fn default_acc() -> Accuracy {
    Accuracy::new(DEFAULT_ABS_TOL, DEFAULT_REL_TOL).expect("static tolerances")
}

// --------------------------------------------------------------- scalars

/// Standard normal cumulative distribution function.
#[no_mangle]
pub unsafe extern "C" fn igdiff_std_normal_cdf(x: f64, out: *mut f64) -> IgdiffStatus {
    guarded(|| {
        if x.is_nan() {
            return IgdiffStatus::InvalidArgument;
        }
        put(out, Ok(special_fn::std_normal_cdf(x)))
    })
}

/// Modified Bessel function K1(x) for x > 0.
#[no_mangle]
pub unsafe extern "C" fn igdiff_bessel_k1(x: f64, out: *mut f64) -> IgdiffStatus {
    guarded(|| put(out, special_fn::bessel_k1(x)))
}

/// ln K1(x) for x > 0; finite far beyond the underflow point of K1 itself.
#[no_mangle]
pub unsafe extern "C" fn igdiff_log_bessel_k1(x: f64, out: *mut f64) -> IgdiffStatus {
    guarded(|| put(out, special_fn::log_bessel_k1(x)))
}

// --------------------------------------------------------------- ig law

fn ig_params(a: f64, b: f64) -> Result<IGParams, Error> {
    IGParams::new(a, b)
}

/// Density of the inverse Gaussian first-hitting-time law IG(a, b) at x.
#[no_mangle]
pub unsafe extern "C" fn igdiff_ig_pdf(a: f64, b: f64, x: f64, out: *mut f64) -> IgdiffStatus {
    guarded(|| {
        let s = nan_check(&[x]);
        if s != IgdiffStatus::Ok {
            return s;
        }
        put(out, ig_params(a, b).map(|p| p.pdf(x)))
    })
}

/// Natural log of the IG(a, b) density at x.
#[no_mangle]
pub unsafe extern "C" fn igdiff_ig_log_pdf(a: f64, b: f64, x: f64, out: *mut f64) -> IgdiffStatus {
    guarded(|| {
        let s = nan_check(&[x]);
        if s != IgdiffStatus::Ok {
            return s;
        }
        put(out, ig_params(a, b).map(|p| p.log_pdf(x)))
    })
}

/// Cumulative distribution function of IG(a, b) at x.
#[no_mangle]
pub unsafe extern "C" fn igdiff_ig_cdf(a: f64, b: f64, x: f64, out: *mut f64) -> IgdiffStatus {
    guarded(|| {
        let s = nan_check(&[x]);
        if s != IgdiffStatus::Ok {
            return s;
        }
        put(out, ig_params(a, b).map(|p| p.cdf(x)))
    })
}

/// Upper tail P(X > x) of IG(a, b), accurate deep into the tail.
#[no_mangle]
pub unsafe extern "C" fn igdiff_ig_tail(a: f64, b: f64, x: f64, out: *mut f64) -> IgdiffStatus {
    guarded(|| {
        let s = nan_check(&[x]);
        if s != IgdiffStatus::Ok {
            return s;
        }
        put(out, ig_params(a, b).map(|p| p.tail(x)))
    })
}

/// ln P(X > x) of IG(a, b); stays finite when the tail underflows.
#[no_mangle]
pub unsafe extern "C" fn igdiff_ig_log_tail(a: f64, b: f64, x: f64, out: *mut f64) -> IgdiffStatus {
    guarded(|| {
        let s = nan_check(&[x]);
        if s != IgdiffStatus::Ok {
            return s;
        }
        put(out, ig_params(a, b).map(|p| p.log_tail(x)))
    })
}

/// Moment generating function E[e^{tX}] of IG(a, b); requires t <= b^2 / 2.
#[no_mangle]
pub unsafe extern "C" fn igdiff_ig_mgf(a: f64, b: f64, t: f64, out: *mut f64) -> IgdiffStatus {
    guarded(|| {
        let s = nan_check(&[t]);
        if s != IgdiffStatus::Ok {
            return s;
        }
        put(out, ig_params(a, b).and_then(|p| p.mgf(t)))
    })
}

/// First four cumulants of IG(a, b).
#[no_mangle]
pub unsafe extern "C" fn igdiff_ig_cumulants(
    a: f64,
    b: f64,
    out: *mut IgdiffCumulants,
) -> IgdiffStatus {
    guarded(|| {
        if out.is_null() {
            return IgdiffStatus::NullArgument;
        }
        match ig_params(a, b) {
            Ok(p) => {
                let k = p.cumulants();
                unsafe {
                    *out = IgdiffCumulants {
                        k1: k.k1,
                        k2: k.k2,
                        k3: k.k3,
                        k4: k.k4,
                    }
                };
                IgdiffStatus::Ok
            }
            Err(e) => map_err(&e),
        }
    })
}

/// Convert a physical channel (distance d, drift v, diffusion D) into the
/// IG(a, b) parameters of its first-hitting time: a = d / sqrt(2 D),
/// b = v / sqrt(2 D).
#[no_mangle]
pub unsafe extern "C" fn igdiff_physical_to_ig(
    d: f64,
    v: f64,
    diffusion: f64,
    a_out: *mut f64,
    b_out: *mut f64,
) -> IgdiffStatus {
    guarded(|| {
        if a_out.is_null() || b_out.is_null() {
            return IgdiffStatus::NullArgument;
        }
        match PhysicalChannel::new(d, v, diffusion) {
            Ok(c) => {
                let p = c.to_ig();
                unsafe {
                    *a_out = p.a();
                    *b_out = p.b();
                }
                IgdiffStatus::Ok
            }
            Err(e) => map_err(&e),
        }
    })
}

// --------------------------------------------------------------- nig law

fn nig_params(p: IgdiffNigParams) -> Result<nig::NIGParams, Error> {
    nig::NIGParams::new(p.alpha, p.beta, p.mu, p.delta)
}

fn export_nig(p: &nig::NIGParams) -> IgdiffNigParams {
    IgdiffNigParams {
        alpha: p.alpha(),
        beta: p.beta(),
        mu: p.mu(),
        delta: p.delta(),
    }
}

/// Normal inverse Gaussian density at y.
#[no_mangle]
pub unsafe extern "C" fn igdiff_nig_pdf(p: IgdiffNigParams, y: f64, out: *mut f64) -> IgdiffStatus {
    guarded(|| {
        let s = nan_check(&[y]);
        if s != IgdiffStatus::Ok {
            return s;
        }
        put(out, nig_params(p).map(|q| q.pdf(y)))
    })
}

/// Natural log of the normal inverse Gaussian density at y.
#[no_mangle]
pub unsafe extern "C" fn igdiff_nig_log_pdf(
    p: IgdiffNigParams,
    y: f64,
    out: *mut f64,
) -> IgdiffStatus {
    guarded(|| {
        let s = nan_check(&[y]);
        if s != IgdiffStatus::Ok {
            return s;
        }
        put(out, nig_params(p).map(|q| q.log_pdf(y)))
    })
}

/// Upper tail P(Y > y) of the normal inverse Gaussian law, by adaptive
/// quadrature at the library's default tolerances.
#[no_mangle]
pub unsafe extern "C" fn igdiff_nig_tail(p: IgdiffNigParams, y: f64, out: *mut f64) -> IgdiffStatus {
    guarded(|| {
        let s = nan_check(&[y]);
        if s != IgdiffStatus::Ok {
            return s;
        }
        put(
            out,
            nig_params(p).and_then(|q| q.tail(y, &default_acc())),
        )
    })
}

/// Mean, variance, skewness and excess kurtosis implied by NIG parameters.
#[no_mangle]
pub unsafe extern "C" fn igdiff_nig_moments(
    p: IgdiffNigParams,
    out: *mut IgdiffMoments,
) -> IgdiffStatus {
    guarded(|| {
        if out.is_null() {
            return IgdiffStatus::NullArgument;
        }
        match nig_params(p) {
            Ok(q) => {
                let m = q.moments();
                unsafe {
                    *out = IgdiffMoments {
                        mean: m.mean,
                        variance: m.variance,
                        skewness: m.skewness,
                        excess_kurtosis: m.excess_kurtosis,
                    }
                };
                IgdiffStatus::Ok
            }
            Err(e) => map_err(&e),
        }
    })
}

/// Fit NIG parameters to a moment set by four-moment matching. Fails with
/// `InfeasibleMoments` when 3 excess_kurtosis <= 5 skewness^2.
#[no_mangle]
pub unsafe extern "C" fn igdiff_nig_fit(
    m: IgdiffMoments,
    out: *mut IgdiffNigParams,
) -> IgdiffStatus {
    guarded(|| {
        if out.is_null() {
            return IgdiffStatus::NullArgument;
        }
        let ms = nig::MomentSet {
            mean: m.mean,
            variance: m.variance,
            skewness: m.skewness,
            excess_kurtosis: m.excess_kurtosis,
        };
        match nig::fit_from_moments(&ms) {
            Ok(q) => {
                unsafe { *out = export_nig(&q) };
                IgdiffStatus::Ok
            }
            Err(e) => map_err(&e),
        }
    })
}

/// Cumulants of Z = X1 - X2 for X1 ~ IG(a1, b1), X2 ~ IG(a2, b2).
#[no_mangle]
pub unsafe extern "C" fn igdiff_diff_cumulants(
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    out: *mut IgdiffCumulants,
) -> IgdiffStatus {
    guarded(|| {
        if out.is_null() {
            return IgdiffStatus::NullArgument;
        }
        match ig_params(a1, b1).and_then(|p1| ig_params(a2, b2).map(|p2| (p1, p2))) {
            Ok((p1, p2)) => {
                let k = nig::diff_cumulants(&p1, &p2);
                unsafe {
                    *out = IgdiffCumulants {
                        k1: k.k1,
                        k2: k.k2,
                        k3: k.k3,
                        k4: k.k4,
                    }
                };
                IgdiffStatus::Ok
            }
            Err(e) => map_err(&e),
        }
    })
}

/// Moments of Z = X1 - X2.
#[no_mangle]
pub unsafe extern "C" fn igdiff_moments_of_diff(
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    out: *mut IgdiffMoments,
) -> IgdiffStatus {
    guarded(|| {
        if out.is_null() {
            return IgdiffStatus::NullArgument;
        }
        match ig_params(a1, b1).and_then(|p1| ig_params(a2, b2).map(|p2| (p1, p2))) {
            Ok((p1, p2)) => {
                let m = nig::moments_of_diff(&p1, &p2);
                unsafe {
                    *out = IgdiffMoments {
                        mean: m.mean,
                        variance: m.variance,
                        skewness: m.skewness,
                        excess_kurtosis: m.excess_kurtosis,
                    }
                };
                IgdiffStatus::Ok
            }
            Err(e) => map_err(&e),
        }
    })
}

/// Moment-matched NIG surrogate for Z = X1 - X2.
#[no_mangle]
pub unsafe extern "C" fn igdiff_nig_approx_diff(
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    out: *mut IgdiffNigParams,
) -> IgdiffStatus {
    guarded(|| {
        if out.is_null() {
            return IgdiffStatus::NullArgument;
        }
        let fitted = ig_params(a1, b1)
            .and_then(|p1| ig_params(a2, b2).map(|p2| (p1, p2)))
            .and_then(|(p1, p2)| nig::approx_diff(&p1, &p2));
        match fitted {
            Ok(q) => {
                unsafe { *out = export_nig(&q) };
                IgdiffStatus::Ok
            }
            Err(e) => map_err(&e),
        }
    })
}

/// Closed-form NIG surrogate for the symmetric case (equal IG parameters
/// on both arms).
#[no_mangle]
pub unsafe extern "C" fn igdiff_nig_usecase1(
    a: f64,
    b: f64,
    out: *mut IgdiffNigParams,
) -> IgdiffStatus {
    guarded(|| {
        if out.is_null() {
            return IgdiffStatus::NullArgument;
        }
        match nig::usecase1_params(a, b) {
            Ok(q) => {
                unsafe { *out = export_nig(&q) };
                IgdiffStatus::Ok
            }
            Err(e) => map_err(&e),
        }
    })
}

/// Closed-form NIG surrogate for the equal-ratio case b_i = c a_i.
/// Fails with `DegenerateInput` when a1 == a2.
#[no_mangle]
pub unsafe extern "C" fn igdiff_nig_usecase2(
    a1: f64,
    a2: f64,
    c: f64,
    out: *mut IgdiffNigParams,
) -> IgdiffStatus {
    guarded(|| {
        if out.is_null() {
            return IgdiffStatus::NullArgument;
        }
        match nig::usecase2_params(a1, a2, c) {
            Ok(q) => {
                unsafe { *out = export_nig(&q) };
                IgdiffStatus::Ok
            }
            Err(e) => map_err(&e),
        }
    })
}

// --------------------------------------------------------------- pair

/// Opaque handle for one (X1, X2) pair plus its quadrature settings.
pub struct IgdiffPair {
    p1: IGParams,
    p2: IGParams,
    spec: diff::QuadratureSpec,
}

/// Create a pair handle with the default tolerances (absolute 1e-12,
/// relative 1e-9). The handle must be released with `igdiff_pair_free`.
#[no_mangle]
pub unsafe extern "C" fn igdiff_pair_new(
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    out: *mut *mut IgdiffPair,
) -> IgdiffStatus {
    unsafe { igdiff_pair_new_with_tol(a1, b1, a2, b2, DEFAULT_ABS_TOL, DEFAULT_REL_TOL, out) }
}

/// Create a pair handle with explicit quadrature tolerances.
#[no_mangle]
pub unsafe extern "C" fn igdiff_pair_new_with_tol(
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    abs_tol: f64,
    rel_tol: f64,
    out: *mut *mut IgdiffPair,
) -> IgdiffStatus {
    guarded(|| {
        if out.is_null() {
            return IgdiffStatus::NullArgument;
        }
        let built = (|| {
            let p1 = ig_params(a1, b1)?;
            let p2 = ig_params(a2, b2)?;
            let spec = diff::QuadratureSpec::new(abs_tol, rel_tol, MAX_REFINEMENTS)?;
            Ok::<_, Error>(IgdiffPair { p1, p2, spec })
        })();
        match built {
            Ok(pair) => {
                unsafe { *out = Box::into_raw(Box::new(pair)) };
                IgdiffStatus::Ok
            }
            Err(e) => map_err(&e),
        }
    })
}

/// Release a pair handle. Null is accepted and ignored.
#[no_mangle]
pub unsafe extern "C" fn igdiff_pair_free(pair: *mut IgdiffPair) {
    if !pair.is_null() {
        drop(unsafe { Box::from_raw(pair) });
    }
}

unsafe fn pair_ref<'a>(pair: *const IgdiffPair) -> Option<&'a IgdiffPair> {
    unsafe { pair.as_ref() }
}

macro_rules! with_pair {
    ($pair:expr, $z:expr, $out:expr, $body:expr) => {
        guarded(|| {
            let s = nan_check(&[$z]);
            if s != IgdiffStatus::Ok {
                return s;
            }
            match unsafe { pair_ref($pair) } {
                None => IgdiffStatus::NullArgument,
                Some(h) => put($out, $body(h)),
            }
        })
    };
}

/// Density of Z = X1 - X2 at z through the exact convolution.
#[no_mangle]
pub unsafe extern "C" fn igdiff_pair_conv_pdf(
    pair: *const IgdiffPair,
    z: f64,
    out: *mut f64,
) -> IgdiffStatus {
    with_pair!(pair, z, out, |h: &IgdiffPair| diff::conv_pdf(
        &h.p1, &h.p2, z, &h.spec
    ))
}

/// ln of the exact convolution density at z.
#[no_mangle]
pub unsafe extern "C" fn igdiff_pair_conv_log_pdf(
    pair: *const IgdiffPair,
    z: f64,
    out: *mut f64,
) -> IgdiffStatus {
    with_pair!(pair, z, out, |h: &IgdiffPair| diff::conv_log_pdf(
        &h.p1, &h.p2, z, &h.spec
    ))
}

/// Exact upper tail P(Z > z).
#[no_mangle]
pub unsafe extern "C" fn igdiff_pair_conv_tail(
    pair: *const IgdiffPair,
    z: f64,
    out: *mut f64,
) -> IgdiffStatus {
    with_pair!(pair, z, out, |h: &IgdiffPair| diff::conv_tail(
        &h.p1, &h.p2, z, &h.spec
    ))
}

/// ln of the exact upper tail; finite even when the tail underflows.
#[no_mangle]
pub unsafe extern "C" fn igdiff_pair_conv_log_tail(
    pair: *const IgdiffPair,
    z: f64,
    out: *mut f64,
) -> IgdiffStatus {
    with_pair!(pair, z, out, |h: &IgdiffPair| diff::conv_log_tail(
        &h.p1, &h.p2, z, &h.spec
    ))
}

/// z such that P(Z > z) equals `prob`, for prob strictly inside (0, 1).
#[no_mangle]
pub unsafe extern "C" fn igdiff_pair_conv_quantile(
    pair: *const IgdiffPair,
    prob: f64,
    out: *mut f64,
) -> IgdiffStatus {
    with_pair!(pair, prob, out, |h: &IgdiffPair| diff::conv_quantile(
        &h.p1, &h.p2, prob, &h.spec
    ))
}

/// Large-z closed-form tail approximation at z.
#[no_mangle]
pub unsafe extern "C" fn igdiff_pair_asymptotic_tail(
    pair: *const IgdiffPair,
    z: f64,
    out: *mut f64,
) -> IgdiffStatus {
    with_pair!(pair, z, out, |h: &IgdiffPair| Ok(diff::asymptotic_tail(
        &h.p1, &h.p2, z
    )))
}

/// ln of the large-z tail approximation at z.
#[no_mangle]
pub unsafe extern "C" fn igdiff_pair_asymptotic_log_tail(
    pair: *const IgdiffPair,
    z: f64,
    out: *mut f64,
) -> IgdiffStatus {
    with_pair!(pair, z, out, |h: &IgdiffPair| Ok(diff::asymptotic_log_tail(
        &h.p1, &h.p2, z
    )))
}

/// The constant the tail approximation approaches as z decreases: its
/// linear value (0.0 when it underflows) and its natural log.
#[no_mangle]
pub unsafe extern "C" fn igdiff_pair_tail_floor(
    pair: *const IgdiffPair,
    value_out: *mut f64,
    log_value_out: *mut f64,
) -> IgdiffStatus {
    guarded(|| {
        if value_out.is_null() || log_value_out.is_null() {
            return IgdiffStatus::NullArgument;
        }
        match unsafe { pair_ref(pair) } {
            None => IgdiffStatus::NullArgument,
            Some(h) => {
                let f = diff::tail_floor(&h.p1, &h.p2);
                unsafe {
                    *value_out = f.value;
                    *log_value_out = f.log_value;
                }
                IgdiffStatus::Ok
            }
        }
    })
}

/// Crossover probability P(X1 - X2 > t) for t >= 0, by the chosen method.
#[no_mangle]
pub unsafe extern "C" fn igdiff_pair_crossover(
    pair: *const IgdiffPair,
    t: f64,
    method: IgdiffTailMethod,
    out: *mut f64,
) -> IgdiffStatus {
    with_pair!(pair, t, out, |h: &IgdiffPair| {
        let m = match method {
            IgdiffTailMethod::Exact => metrics::TailMethod::Exact,
            IgdiffTailMethod::Nig => metrics::TailMethod::Nig,
            IgdiffTailMethod::Asymptotic => metrics::TailMethod::Asymptotic,
        };
        metrics::crossover_probability(&h.p1, &h.p2, t, m, &h.spec)
    })
}

// --------------------------------------------------------------- sampler

/// Opaque reproducible sampler of Z = X1 - X2. The draw sequence depends
/// only on the parameters and the seed, never on how calls are batched.
pub struct IgdiffSampler {
    p1: IGParams,
    p2: IGParams,
    seed: u64,
    index: u64,
    s1: SampleStream,
    s2: SampleStream,
}

/// Create a sampler handle; release it with `igdiff_sampler_free`.
#[no_mangle]
pub unsafe extern "C" fn igdiff_sampler_new(
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    seed: u64,
    out: *mut *mut IgdiffSampler,
) -> IgdiffStatus {
    guarded(|| {
        if out.is_null() {
            return IgdiffStatus::NullArgument;
        }
        match ig_params(a1, b1).and_then(|p1| ig_params(a2, b2).map(|p2| (p1, p2))) {
            Ok((p1, p2)) => {
                let sampler = IgdiffSampler {
                    p1,
                    p2,
                    seed,
                    index: 0,
                    s1: SampleStream::new(seed, 0),
                    s2: SampleStream::new(seed, 1),
                };
                unsafe { *out = Box::into_raw(Box::new(sampler)) };
                IgdiffStatus::Ok
            }
            Err(e) => map_err(&e),
        }
    })
}

/// Next draw of Z = X1 - X2.
#[no_mangle]
pub unsafe extern "C" fn igdiff_sampler_next(
    sampler: *mut IgdiffSampler,
    out: *mut f64,
) -> IgdiffStatus {
    guarded(|| {
        if out.is_null() {
            return IgdiffStatus::NullArgument;
        }
        match unsafe { sampler.as_mut() } {
            None => IgdiffStatus::NullArgument,
            Some(h) => {
                if h.index > 0 && h.index % SAMPLE_CHUNK == 0 {
                    let chunk = h.index / SAMPLE_CHUNK;
                    h.s1 = SampleStream::new(h.seed, 2 * chunk);
                    h.s2 = SampleStream::new(h.seed, 2 * chunk + 1);
                }
                let z = h.s1.ig(&h.p1) - h.s2.ig(&h.p2);
                h.index += 1;
                unsafe { *out = z };
                IgdiffStatus::Ok
            }
        }
    })
}

/// Release a sampler handle. Null is accepted and ignored.
#[no_mangle]
pub unsafe extern "C" fn igdiff_sampler_free(sampler: *mut IgdiffSampler) {
    if !sampler.is_null() {
        drop(unsafe { Box::from_raw(sampler) });
    }
}
