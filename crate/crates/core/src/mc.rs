//! Monte-Carlo machinery: exact sampling of Z = X1 - X2 with reproducible
//! counter-based substreams, and an Euler-Maruyama first-passage simulator
//! that ties the physical channel description to the first-hitting-time law.
//!
//! Determinism contract: every parallel unit (fixed-size sample chunk, or
//! simulated path) owns a ChaCha substream keyed by its index, so results
//! are byte-identical for any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ig::{IGParams, PhysicalChannel};
use crate::nig::NIGParams;

/// Sample count, seed, and the path-simulator discretization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub dt: f64,
    pub max_steps: u64,
}

impl SimConfig {
    pub fn new(n_samples: usize, seed: u64, dt: f64, max_steps: u64) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::Config("n_samples must be at least 1".into()));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Config(format!("dt must be finite and positive, got {dt}")));
        }
        if max_steps == 0 {
            return Err(Error::Config("max_steps must be at least 1".into()));
        }
        Ok(Self {
            n_samples,
            seed,
            dt,
            max_steps,
        })
    }
}

/// One reproducible stream of exact draws: a ChaCha8 generator pinned to a
/// (seed, stream) pair.
pub struct SampleStream {
    rng: ChaCha8Rng,
}

impl SampleStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    pub fn ig(&mut self, p: &IGParams) -> f64 {
        p.sample(&mut self.rng)
    }

    pub fn nig(&mut self, p: &NIGParams) -> f64 {
        p.sample(&mut self.rng)
    }
}

/// Work unit for parallel sampling. Fixed so the stream assignment, and
/// therefore the output, never depends on the worker count.
const CHUNK: usize = 8192;

/// Substream ids for path simulations start here, far above any chunk id.
const PATH_STREAM_BASE: u64 = 1 << 32;

/// n_samples independent draws of X1 - X2. Chunk k draws X1 from substream
/// 2k and X2 from substream 2k+1.
pub fn sample_diff(p1: &IGParams, p2: &IGParams, cfg: &SimConfig) -> Vec<f64> {
    let mut out = vec![0.0f64; cfg.n_samples];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(k, chunk)| {
        let mut s1 = SampleStream::new(cfg.seed, 2 * k as u64);
        let mut s2 = SampleStream::new(cfg.seed, 2 * k as u64 + 1);
        for v in chunk.iter_mut() {
            *v = s1.ig(p1) - s2.ig(p2);
        }
    });
    out
}

/// Completed first-passage times (in path order) plus the number of paths
/// that hit the step budget before the barrier.
#[derive(Clone, Debug)]
pub struct FirstPassage {
    pub times: Vec<f64>,
    pub censored: u64,
}

/// Euler-Maruyama first-passage simulation of
/// x_{k+1} = x_k + v dt + sqrt(2 D dt) N, absorbed at x >= d.
pub fn first_passage_sim(c: &PhysicalChannel, cfg: &SimConfig) -> Result<FirstPassage> {
    Ok(first_passage_multilevel(c, cfg, 0)?.pop().expect("one level requested"))
}

/// The same simulation run at time steps dt, dt/2, ..., dt/2^halvings
/// simultaneously, all levels driven by one Brownian path per sample:
/// coarser increments are sums of the finest-level Gaussian increments.
/// Level j of the result used step dt/2^j. Sharing the noise across levels
/// isolates the discretization bias, so convergence trends in the mean or
/// in distribution distances are visible without Monte-Carlo noise drowning
/// them.
pub fn first_passage_multilevel(
    c: &PhysicalChannel,
    cfg: &SimConfig,
    halvings: u32,
) -> Result<Vec<FirstPassage>> {
    let horizon = cfg.max_steps as f64 * cfg.dt;
    let expected = c.d / c.v;
    if expected > 0.1 * horizon {
        return Err(Error::Config(format!(
            "expected hitting time d/v = {expected} exceeds 10% of the simulated \
             horizon max_steps*dt = {horizon}; raise max_steps or dt"
        )));
    }
    if halvings > 20 {
        return Err(Error::Config(format!(
            "halvings = {halvings} would take 2^{halvings} substeps per step"
        )));
    }

    let levels = halvings as usize + 1;
    let h = cfg.dt / (1u64 << halvings) as f64;
    let fine_steps = cfg
        .max_steps
        .checked_shl(halvings)
        .ok_or_else(|| Error::Config("max_steps * 2^halvings overflows".into()))?;
    let noise_scale = (2.0 * c.diffusion * h).sqrt();

    let per_path: Vec<Vec<Option<f64>>> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(PATH_STREAM_BASE + i as u64);
            let mut x = vec![0.0f64; levels];
            let mut acc = vec![0.0f64; levels];
            let mut hit: Vec<Option<f64>> = vec![None; levels];
            let mut remaining = levels;
            for s in 1..=fine_steps {
                let n: f64 = rng.sample(StandardNormal);
                for j in 0..levels {
                    if hit[j].is_some() {
                        continue;
                    }
                    acc[j] += n;
                    // level j advances every 2^(halvings - j) fine ticks
                    if s & ((1u64 << (halvings as usize - j)) - 1) == 0 {
                        let dt_j = cfg.dt / (1u64 << j) as f64;
                        x[j] += c.v * dt_j + noise_scale * acc[j];
                        acc[j] = 0.0;
                        if x[j] >= c.d {
                            hit[j] = Some(s as f64 * h);
                            remaining -= 1;
                        }
                    }
                }
                if remaining == 0 {
                    break;
                }
            }
            hit
        })
        .collect();

    let mut out = Vec::with_capacity(levels);
    for j in 0..levels {
        let mut times = Vec::with_capacity(cfg.n_samples);
        let mut censored = 0u64;
        for path in &per_path {
            match path[j] {
                Some(t) => times.push(t),
                None => censored += 1,
            }
        }
        out.push(FirstPassage { times, censored });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff;
    use crate::metrics::{chi_square_statistic, ks_distance, CHI2_CRIT_DF49_P99};
    use crate::nig::diff_cumulants;
    use crate::quad::QuadratureSpec;

    fn ig(a: f64, b: f64) -> IGParams {
        IGParams::new(a, b).unwrap()
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec::new(1e-12, 1e-9, 4000).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0, 1, 1e-3, 100).is_err());
        assert!(SimConfig::new(10, 1, 0.0, 100).is_err());
        assert!(SimConfig::new(10, 1, 1e-3, 0).is_err());
        assert!(SimConfig::new(10, 1, 1e-3, 100).is_ok());
    }

    #[test]
    fn sample_diff_mean_matches_first_cumulant() {
        let p1 = ig(1.0, 1.0);
        let p2 = ig(2.0, 1.0);
        let cfg = SimConfig::new(1_000_000, 17, 1e-3, 1).unwrap();
        let xs = sample_diff(&p1, &p2, &cfg);
        let k = diff_cumulants(&p1, &p2);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let se = (k.k2 / xs.len() as f64).sqrt();
        assert!(
            (mean - k.k1).abs() < 5.0 * se,
            "mean {mean} vs {} (se {se})",
            k.k1
        );
    }

    #[test]
    fn sample_diff_tail_matches_quadrature() {
        let p = ig(3.0, 3.0);
        // z where the exact tail is 0.01 (50-digit value)
        let z = 1.172_375_292_996_444_897_3;
        let cfg = SimConfig::new(1_000_000, 8, 1e-3, 1).unwrap();
        let xs = sample_diff(&p, &p, &cfg);
        let hits = xs.iter().filter(|&&x| x > z).count() as f64;
        let emp = hits / xs.len() as f64;
        let se = (0.01 * 0.99 / xs.len() as f64).sqrt();
        assert!(
            (emp - 0.01).abs() < 4.0 * se,
            "empirical tail {emp} (se {se})"
        );
    }

    #[test]
    fn sample_diff_deterministic_and_thread_count_independent() {
        let p1 = ig(2.0, 2.0);
        let p2 = ig(4.0, 4.0);
        let cfg = SimConfig::new(50_000, 99, 1e-3, 1).unwrap();

        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| sample_diff(&p1, &p2, &cfg));
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| sample_diff(&p1, &p2, &cfg));
        assert_eq!(one.len(), four.len());
        for (a, b) in one.iter().zip(&four) {
            assert_eq!(a.to_bits(), b.to_bits());
        }

        let again = sample_diff(&p1, &p2, &cfg);
        for (a, b) in one.iter().zip(&again) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn sample_diff_histogram_passes_chi_square() {
        let p = ig(3.0, 3.0);
        let n = 1_000_000usize;
        let cfg = SimConfig::new(n, 12, 1e-3, 1).unwrap();

        // 49 interior edges at equal exact-law probabilities
        let bins = 50usize;
        let edges: Vec<f64> = (1..bins)
            .map(|k| {
                diff::conv_quantile(&p, &p, 1.0 - k as f64 / bins as f64, &spec()).unwrap()
            })
            .collect();
        let xs = sample_diff(&p, &p, &cfg);
        let mut observed = vec![0u64; bins];
        for &x in &xs {
            let idx = edges.partition_point(|&e| e < x);
            observed[idx] += 1;
        }
        let expected = vec![n as f64 / bins as f64; bins];
        let stat = chi_square_statistic(&observed, &expected);
        assert!(
            stat < CHI2_CRIT_DF49_P99,
            "chi-square {stat} over critical {CHI2_CRIT_DF49_P99}"
        );
    }

    #[test]
    fn path_sim_horizon_validation() {
        let c = PhysicalChannel::new(1.0, 1.0, 0.5).unwrap();
        let cfg = SimConfig::new(10, 1, 1e-2, 900).unwrap();
        match first_passage_sim(&c, &cfg) {
            Err(Error::Config(msg)) => assert!(msg.contains("horizon")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn path_sim_drift_dominated_limit() {
        // negligible diffusion: hitting time collapses to d/v
        let c = PhysicalChannel::new(1.0, 1.0, 1e-12).unwrap();
        let cfg = SimConfig::new(64, 5, 1e-3, 100_000).unwrap();
        let fp = first_passage_sim(&c, &cfg).unwrap();
        assert_eq!(fp.censored, 0);
        assert_eq!(fp.times.len(), 64);
        for &t in &fp.times {
            assert!((t - 1.0).abs() <= 2e-3, "time {t}");
        }
    }

    #[test]
    fn path_sim_mean_near_ig_mean() {
        let c = PhysicalChannel::new(1.0, 1.0, 0.5).unwrap();
        let cfg = SimConfig::new(20_000, 2024, 2e-4, 500_000).unwrap();
        let fp = first_passage_sim(&c, &cfg).unwrap();
        assert!(fp.censored == 0);
        let n = fp.times.len() as f64;
        let mean = fp.times.iter().sum::<f64>() / n;
        let var = fp.times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
        let se = (var / n).sqrt();
        // d/v = 1; the Euler scheme overshoots the barrier so a positive
        // O(sqrt(dt)) bias is expected and allowed for
        assert!(
            (mean - 1.0).abs() < 5.0 * se + 0.02,
            "mean {mean} (se {se})"
        );
    }

    #[test]
    fn path_sim_censoring_is_counted() {
        let c = PhysicalChannel::new(1.0, 1.0, 0.5).unwrap();
        // horizon 10 leaves roughly the IG tail past 10 censored (~4e-4)
        let cfg = SimConfig::new(50_000, 31, 1e-3, 10_000).unwrap();
        let fp = first_passage_sim(&c, &cfg).unwrap();
        assert!(fp.censored > 0, "expected a few censored paths");
        let frac = fp.censored as f64 / 50_000.0;
        assert!(frac < 1e-3, "censored fraction {frac}");
        assert_eq!(fp.times.len() + fp.censored as usize, 50_000);
    }

    #[test]
    fn path_sim_bias_shrinks_with_dt() {
        let c = PhysicalChannel::new(1.0, 1.0, 0.5).unwrap();
        let cfg = SimConfig::new(30_000, 7, 4e-4, 250_000).unwrap();
        let fps = first_passage_multilevel(&c, &cfg, 2).unwrap();
        assert_eq!(fps.len(), 3);
        let p = c.to_ig();

        let mut mean_bias = Vec::new();
        let mut ks = Vec::new();
        for fp in &fps {
            assert_eq!(fp.censored, 0);
            let mean = fp.times.iter().sum::<f64>() / fp.times.len() as f64;
            mean_bias.push((mean - 1.0).abs());
            let mut sorted = fp.times.clone();
            sorted.sort_by(f64::total_cmp);
            ks.push(ks_distance(&sorted, &|t| p.cdf(t)));
        }
        // shared Brownian increments: differences between levels are pure
        // discretization bias, so both series must fall monotonically
        assert!(
            mean_bias[0] > mean_bias[1] && mean_bias[1] > mean_bias[2],
            "mean bias not shrinking: {mean_bias:?}"
        );
        assert!(
            ks[0] > ks[1] && ks[1] > ks[2],
            "KS not shrinking: {ks:?}"
        );
        // weak order one: quartering dt should cut the mean bias roughly
        // in half (the barrier overshoot scales like sqrt(dt))
        assert!(
            mean_bias[2] < 0.8 * mean_bias[0],
            "bias trend too flat: {mean_bias:?}"
        );
    }

    #[test]
    fn path_sim_deterministic_across_thread_counts() {
        let c = PhysicalChannel::new(1.0, 1.0, 0.5).unwrap();
        let cfg = SimConfig::new(500, 3, 1e-3, 100_000).unwrap();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| first_passage_sim(&c, &cfg).unwrap());
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| first_passage_sim(&c, &cfg).unwrap());
        assert_eq!(one.censored, four.censored);
        assert_eq!(one.times.len(), four.times.len());
        for (a, b) in one.times.iter().zip(&four.times) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
