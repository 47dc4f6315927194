//! Timing harness for key generation plus encryption, and for single
//! keystream passes over first keys of a given size.
//!
//! Each size gets an untimed warm-up, then `reps` samples on [`Instant`];
//! the median per-run time is reported. Runs faster than 25 ms are batched
//! and the batch time divided back out. Without `parallel`, samples are
//! taken round-robin across sizes on the calling thread. With it, each size
//! runs on its own thread.

use std::time::Instant;

use rand::distributions::Uniform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chaos::{ChaosParams, MIN_FIRST_KEY_BYTES};
use crate::cipher::{encrypt, EncryptOptions, Mode};
use crate::error::{Error, Result};
use crate::keyschedule::keystream_from_first_key;
use crate::kgm::{alphabet, code_byte, SecretKey};

pub const DEFAULT_FILE_SIZES_KB: [usize; 5] = [10, 30, 155, 350, 512];
pub const DEFAULT_KEY_SIZES: [usize; 6] = [24, 41, 100, 255, 300, 600];
pub const MIN_REPS: usize = 3;

/// Target duration of one timed sample; short runs are batched up to it.
const MIN_SAMPLE_MS: f64 = 25.0;
const MAX_BATCH: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchSample {
    pub size_bytes: usize,
    pub elapsed_ms: f64,
    pub repetitions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    /// ms per KB
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub samples: Vec<BenchSample>,
    pub fit: LinearFit,
}

#[derive(Serialize)]
struct JsonSample {
    size_kb: f64,
    ms: f64,
}

#[derive(Serialize)]
struct JsonFit {
    slope: f64,
    intercept: f64,
    r2: f64,
}

#[derive(Serialize)]
struct JsonReport {
    samples: Vec<JsonSample>,
    fit: JsonFit,
}

impl BenchReport {
    fn from_samples(samples: Vec<BenchSample>) -> Self {
        let points: Vec<(f64, f64)> = samples
            .iter()
            .map(|s| (s.size_bytes as f64 / 1024.0, s.elapsed_ms))
            .collect();
        Self {
            fit: linear_fit(&points),
            samples,
        }
    }

    pub fn sample(&self, size_bytes: usize) -> Option<&BenchSample> {
        self.samples.iter().find(|s| s.size_bytes == size_bytes)
    }

    /// `time(larger) / time(smaller)` for two measured sizes.
    pub fn time_ratio(&self, smaller: usize, larger: usize) -> Option<f64> {
        let a = self.sample(smaller)?;
        let b = self.sample(larger)?;
        Some(b.elapsed_ms / a.elapsed_ms)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let report = JsonReport {
            samples: self
                .samples
                .iter()
                .map(|s| JsonSample {
                    size_kb: s.size_bytes as f64 / 1024.0,
                    ms: s.elapsed_ms,
                })
                .collect(),
            fit: JsonFit {
                slope: self.fit.slope,
                intercept: self.fit.intercept,
                r2: self.fit.r_squared,
            },
        };
        serde_json::to_value(report).expect("report serializes")
    }
}

/// Ordinary least squares. A single point, or points with no spread in
/// either coordinate, reports `r_squared = 1`.
pub fn linear_fit(points: &[(f64, f64)]) -> LinearFit {
    let n = points.len() as f64;
    if points.is_empty() {
        return LinearFit {
            slope: 0.0,
            intercept: 0.0,
            r_squared: 1.0,
        };
    }
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();

    if sxx == 0.0 {
        return LinearFit {
            slope: 0.0,
            intercept: mean_y,
            r_squared: 1.0,
        };
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        let ss_res: f64 = points
            .iter()
            .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
            .sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    LinearFit {
        slope,
        intercept,
        r_squared,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchConfig {
    pub reps: usize,
    pub parallel: bool,
    pub rng_seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            reps: 5,
            parallel: false,
            rng_seed: 0xB3_7C,
        }
    }
}

impl BenchConfig {
    fn validate(&self) -> Result<()> {
        if self.reps < MIN_REPS {
            return Err(Error::Domain(format!(
                "at least {MIN_REPS} repetitions are required, got {}",
                self.reps
            )));
        }
        Ok(())
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let mid = xs.len() / 2;
    if xs.len() % 2 == 0 {
        (xs[mid - 1] + xs[mid]) / 2.0
    } else {
        xs[mid]
    }
}

/// Random lowercase words separated by single spaces, exactly `len` bytes.
pub fn random_text(len: usize, rng: &mut impl Rng) -> String {
    let letters = Uniform::new_inclusive(b'a', b'z');
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let word = rng.gen_range(1..=9);
        for _ in 0..word {
            out.push(rng.sample(letters));
        }
        out.push(b' ');
    }
    out.truncate(len);
    String::from_utf8(out).expect("ASCII text")
}

fn normalize_sizes(sizes: &[usize], min: usize, what: &str) -> Result<Vec<usize>> {
    if sizes.is_empty() {
        return Err(Error::Domain(format!("no {what} given")));
    }
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes[0] < min {
        return Err(Error::Domain(format!("{what} must be at least {min}")));
    }
    Ok(sizes)
}

type Workload<'a> = Box<dyn FnMut() -> Result<()> + Send + 'a>;

struct Job<'a> {
    size: usize,
    work: Workload<'a>,
    /// Runs per timed sample.
    batch: usize,
    times: Vec<f64>,
}

impl Job<'_> {
    /// Untimed warm-up that also picks a batch size reaching
    /// `MIN_SAMPLE_MS` per sample.
    fn calibrate(&mut self) -> Result<()> {
        (self.work)()?;
        let start = Instant::now();
        (self.work)()?;
        let once = start.elapsed().as_secs_f64() * 1e3;
        self.batch = ((MIN_SAMPLE_MS / once.max(1e-6)).ceil() as usize).clamp(1, MAX_BATCH);
        Ok(())
    }

    fn sample(&mut self) -> Result<()> {
        let start = Instant::now();
        for _ in 0..self.batch {
            (self.work)()?;
        }
        let ms = start.elapsed().as_secs_f64() * 1e3;
        self.times.push(ms / self.batch as f64);
        Ok(())
    }
}

/// Median per-run time of every job. Sequential runs visit the jobs
/// round-robin, one sample each per round, so slow periods on the machine
/// land on all sizes alike.
fn measure(jobs: &mut [Job<'_>], reps: usize, parallel: bool) -> Result<Vec<f64>> {
    if parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = jobs
                .iter_mut()
                .map(|job| {
                    scope.spawn(move || -> Result<()> {
                        job.calibrate()?;
                        for _ in 0..reps {
                            job.sample()?;
                        }
                        Ok(())
                    })
                })
                .collect();
            handles
                .into_iter()
                .try_for_each(|h| h.join().expect("bench thread panicked"))
        })?;
    } else {
        for job in jobs.iter_mut() {
            job.calibrate()?;
        }
        for _ in 0..reps {
            for job in jobs.iter_mut() {
                job.sample()?;
            }
        }
    }
    Ok(jobs.iter().map(|j| median(j.times.clone())).collect())
}

/// Times keystream generation plus XOR encryption of random text of each
/// size in KB. Word indexing is not part of the timed section.
pub fn run_bench(
    sizes_kb: &[usize],
    mode: Mode,
    secret: &SecretKey,
    config: &BenchConfig,
) -> Result<BenchReport> {
    config.validate()?;
    let sizes = normalize_sizes(sizes_kb, 1, "file sizes (KB)")?;
    let opts = EncryptOptions {
        mode,
        index: false,
        ..Default::default()
    };
    let mut jobs: Vec<Job<'_>> = sizes
        .iter()
        .map(|&kb| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed ^ kb as u64);
            let text = random_text(kb * 1024, &mut rng);
            let work: Workload<'_> = Box::new(move || {
                std::hint::black_box(encrypt(std::hint::black_box(&text), secret, &opts)?);
                Ok(())
            });
            Job {
                size: kb * 1024,
                work,
                batch: 1,
                times: Vec::with_capacity(config.reps),
            }
        })
        .collect();

    let medians = measure(&mut jobs, config.reps, config.parallel)?;
    let samples = jobs
        .iter()
        .zip(medians)
        .map(|(job, ms)| BenchSample {
            size_bytes: job.size,
            elapsed_ms: ms,
            repetitions: config.reps,
        })
        .collect();
    Ok(BenchReport::from_samples(samples))
}

/// Per-cycle time of one full keystream pass over a random first key of each
/// size in bytes. `elapsed_ms` holds the mean time of a single cycle.
pub fn cycle_time(key_sizes: &[usize], params: &ChaosParams, config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    params.validate()?;
    if let Some(&short) = key_sizes.iter().find(|&&s| s < MIN_FIRST_KEY_BYTES) {
        return Err(Error::KeyTooShort {
            len: short,
            min: MIN_FIRST_KEY_BYTES,
        });
    }
    let sizes = normalize_sizes(key_sizes, MIN_FIRST_KEY_BYTES, "key sizes")?;
    let code_bytes: Vec<u8> = alphabet()
        .into_iter()
        .chain(['0'])
        .map(code_byte)
        .collect();
    let params = *params;

    let mut jobs: Vec<Job<'_>> = sizes
        .iter()
        .map(|&size| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed ^ size as u64);
            let k1: Vec<u8> = (0..size)
                .map(|_| code_bytes[rng.gen_range(0..code_bytes.len())])
                .collect();
            let work: Workload<'_> = Box::new(move || {
                std::hint::black_box(keystream_from_first_key(
                    std::hint::black_box(&k1),
                    size,
                    &params,
                )?);
                Ok(())
            });
            Job {
                size,
                work,
                batch: 1,
                times: Vec::with_capacity(config.reps),
            }
        })
        .collect();

    let medians = measure(&mut jobs, config.reps, config.parallel)?;
    let samples = jobs
        .iter()
        .zip(medians)
        .map(|(job, ms)| BenchSample {
            size_bytes: job.size,
            elapsed_ms: ms / job.size as f64,
            repetitions: config.reps,
        })
        .collect();
    Ok(BenchReport::from_samples(samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_a_line() {
        let pts: Vec<(f64, f64)> = (1..10).map(|x| (x as f64, 2.0 * x as f64 + 1.0)).collect();
        let f = linear_fit(&pts);
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_degenerate_cases() {
        assert_eq!(linear_fit(&[(3.0, 7.0)]).r_squared, 1.0);
        assert_eq!(linear_fit(&[(3.0, 7.0)]).intercept, 7.0);
        assert_eq!(linear_fit(&[(1.0, 5.0), (2.0, 5.0)]).r_squared, 1.0);
        let noisy = linear_fit(&[(1.0, 1.0), (2.0, 3.0), (3.0, 1.0), (4.0, 3.0)]);
        assert!((0.0..=1.0).contains(&noisy.r_squared));
    }

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn random_text_has_exact_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for len in [0, 1, 10, 1024, 4097] {
            assert_eq!(random_text(len, &mut rng).len(), len);
        }
    }

    #[test]
    fn single_size_report() {
        let secret = SecretKey::new("bench-secret").unwrap();
        let cfg = BenchConfig { reps: 3, ..Default::default() };
        let r = run_bench(&[1], Mode::Literal, &secret, &cfg).unwrap();
        assert_eq!(r.samples.len(), 1);
        assert_eq!(r.samples[0].size_bytes, 1024);
        assert_eq!(r.samples[0].repetitions, 3);
        assert_eq!(r.fit.r_squared, 1.0);
        let json = r.to_json();
        assert_eq!(json["samples"][0]["size_kb"], 1.0);
        assert!(json["fit"]["r2"].is_number());
    }

    #[test]
    fn invalid_configs() {
        let secret = SecretKey::new("bench-secret").unwrap();
        let cfg = BenchConfig::default();
        assert!(run_bench(&[], Mode::Literal, &secret, &cfg).is_err());
        assert!(run_bench(&[0], Mode::Literal, &secret, &cfg).is_err());
        let few = BenchConfig { reps: 2, ..cfg };
        assert!(run_bench(&[1], Mode::Literal, &secret, &few).is_err());
        assert!(matches!(
            cycle_time(&[8, 24], &ChaosParams::literal(), &cfg),
            Err(Error::KeyTooShort { len: 8, .. })
        ));
    }

    #[test]
    fn sizes_are_sorted_and_parallel_matches_shape() {
        let secret = SecretKey::new("bench-secret").unwrap();
        let cfg = BenchConfig { reps: 3, parallel: true, ..Default::default() };
        let r = run_bench(&[4, 1, 2, 2], Mode::Hardened, &secret, &cfg).unwrap();
        let sizes: Vec<usize> = r.samples.iter().map(|s| s.size_bytes).collect();
        assert_eq!(sizes, vec![1024, 2048, 4096]);
        assert!(r.samples.iter().all(|s| s.elapsed_ms > 0.0));
    }

    #[test]
    fn cycle_time_positive() {
        let cfg = BenchConfig { reps: 3, ..Default::default() };
        let r = cycle_time(&DEFAULT_KEY_SIZES, &ChaosParams::literal(), &cfg).unwrap();
        assert_eq!(r.samples.len(), 6);
        assert!(r.samples.iter().all(|s| s.elapsed_ms > 0.0));
    }
}
