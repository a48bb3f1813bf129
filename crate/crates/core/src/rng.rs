//! Seeded random streams, counter-hashed configurations and order-independent
//! Monte Carlo accumulation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A named random stream. Distinct `(seed, stream_id)` pairs give independent
/// streams; the same pair always reproduces the same draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    /// The generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut state = mix64(self.seed ^ 0x5EED_0000_0000_0000);
        for chunk in key.chunks_mut(8) {
            state = mix64(state ^ self.stream_id.rotate_left(17));
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_id);
        rng
    }

    /// A child stream labelled `label`; children of one parent are mutually
    /// independent and independent of the parent.
    pub fn substream(&self, label: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream_id: mix64(self.stream_id ^ mix64(label.wrapping_add(0xA5A5_A5A5))),
        }
    }
}

/// Converts a probability to an acceptance threshold on 53-bit uniforms.
#[inline]
pub fn threshold53(p: f64) -> u64 {
    let p = p.clamp(0.0, 1.0);
    (p * (1u64 << 53) as f64).ceil() as u64
}

/// Hash of a cell key under a configuration key, as a 53-bit uniform integer.
#[inline]
pub fn cell_uniform53(key: u64, a: i64, b: i64) -> u64 {
    let row = mix64(key ^ mix64(a as u64));
    mix64(row ^ (b as u64)) >> 11
}

/// Welford mean/variance accumulator with an associative merge.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&self, other: &Moments) -> Moments {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let mean = self.mean + d * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        Moments { n, mean, m2 }
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    pub fn estimate(&self, seed: RngStream) -> Estimate {
        Estimate {
            mean: self.mean,
            std_error: self.std_error(),
            n_samples: self.n,
            seed,
        }
    }
}

/// A Monte Carlo result.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: RngStream,
}

impl Estimate {
    /// A value known without sampling error.
    pub fn exact(value: f64, n_samples: u64, seed: RngStream) -> Self {
        Estimate {
            mean: value,
            std_error: 0.0,
            n_samples: n_samples.max(1),
            seed,
        }
    }

    /// True when no sample was nonzero (rare-event flag).
    pub fn is_zero(&self) -> bool {
        self.mean == 0.0 && self.std_error == 0.0
    }

    /// |self - other| measured in combined standard errors; infinite when
    /// both errors vanish and the means differ.
    pub fn sigma_distance(&self, other: &Estimate) -> f64 {
        let s = self.std_error.hypot(other.std_error);
        let d = (self.mean - other.mean).abs();
        if d == 0.0 {
            0.0
        } else if s == 0.0 {
            f64::INFINITY
        } else {
            d / s
        }
    }
}

/// Replicates per work unit. Replicate `i` always uses `stream.substream(i)`,
/// and work units are merged in index order, so results do not depend on the
/// number of worker threads.
pub const CHUNK: u64 = 64;

/// Runs `n` independent replicates of a scalar statistic.
pub fn replicate<F>(stream: RngStream, n: u64, f: F) -> Estimate
where
    F: Fn(u64, &mut ChaCha8Rng) -> f64 + Sync,
{
    replicate_vec(stream, n, 1, |i, rng, out| out[0] = f(i, rng))
        .pop()
        .map(|m| m.estimate(stream))
        .unwrap_or_else(|| Estimate::exact(0.0, 0, stream))
}

/// Runs `n` replicates of a `dim`-dimensional statistic, returning one
/// accumulator per component.
pub fn replicate_vec<F>(stream: RngStream, n: u64, dim: usize, f: F) -> Vec<Moments>
where
    F: Fn(u64, &mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![Moments::new(); dim];
            let mut out = vec![0.0; dim];
            for i in c * CHUNK..n.min((c + 1) * CHUNK) {
                let mut rng = stream.substream(i).rng();
                out.iter_mut().for_each(|x| *x = 0.0);
                f(i, &mut rng, &mut out);
                for (m, &x) in acc.iter_mut().zip(&out) {
                    m.push(x);
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Moments::new(); dim];
    for part in parts {
        for (t, p) in total.iter_mut().zip(&part) {
            *t = t.merge(p);
        }
    }
    total
}
