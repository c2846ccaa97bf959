use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, PreparedExperiment};
use crate::error::Result;
use crate::torus::{MetricKind, OBSERVABLE_CAP};

/// Exceedances and block maximum of one orbit of length `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub n: u64,
    pub exceedance_times: Vec<u64>,
    pub exceedance_values: Vec<f64>,
    pub block_maximum: f64,
}

impl TrialRecord {
    pub fn exceedances(&self) -> usize {
        self.exceedance_times.len()
    }
}

/// `-log d`, capped so that a hit on the center stays finite.
#[inline]
pub fn capped_observable(d: f64) -> f64 {
    (-d.ln()).min(OBSERVABLE_CAP)
}

/// Residues of one machine word, iterated with wrapping arithmetic. Only
/// the low `bits` matter; they are moved to the top before conversion.
trait Word: Copy + Send + Sync {
    const WIDTH: u32;
    fn from_u128(v: u128) -> Self;
    fn random<R: Rng>(rng: &mut R) -> Self;
    fn lin(a: Self, x: Self, b: Self, y: Self) -> Self;
    fn centered(self, center: Self, shift: u32) -> f64;
}

impl Word for u64 {
    const WIDTH: u32 = 64;

    #[inline(always)]
    fn from_u128(v: u128) -> Self {
        v as u64
    }

    #[inline(always)]
    fn random<R: Rng>(rng: &mut R) -> Self {
        rng.random()
    }

    #[inline(always)]
    fn lin(a: Self, x: Self, b: Self, y: Self) -> Self {
        a.wrapping_mul(x).wrapping_add(b.wrapping_mul(y))
    }

    #[inline(always)]
    fn centered(self, center: Self, shift: u32) -> f64 {
        ((self.wrapping_sub(center) << shift) as i64) as f64 * (1.0 / 18_446_744_073_709_551_616.0)
    }
}

impl Word for u128 {
    const WIDTH: u32 = 128;

    #[inline(always)]
    fn from_u128(v: u128) -> Self {
        v
    }

    #[inline(always)]
    fn random<R: Rng>(rng: &mut R) -> Self {
        rng.random()
    }

    #[inline(always)]
    fn lin(a: Self, x: Self, b: Self, y: Self) -> Self {
        a.wrapping_mul(x).wrapping_add(b.wrapping_mul(y))
    }

    #[inline(always)]
    fn centered(self, center: Self, shift: u32) -> f64 {
        ((self.wrapping_sub(center) << shift) as i128) as f64 * 2f64.powi(-128)
    }
}

/// Nearest point of the `2^-bits` grid to the center.
fn center_residues(exp: &PreparedExperiment) -> (u128, u128) {
    let bits = exp.config.modulus_bits;
    let z = exp.zeta;
    let scale = |num: u64| -> u128 {
        // num / den * 2^bits, rounded, computed in integers when it fits.
        let (num, den) = (num as u128, z.den as u128);
        if bits <= 64 {
            ((num << bits) + den / 2) / den
        } else {
            let hi = (num << 64) / den;
            let rem = (num << 64) % den;
            (hi << (bits - 64)).wrapping_add(((rem << (bits - 64)) + den / 2) / den)
        }
    };
    (scale(z.num[0]), scale(z.num[1]))
}

fn orbit<W: Word, const ADAPTED: bool>(
    exp: &PreparedExperiment,
    trial_id: u64,
    start: Option<(u128, u128)>,
) -> TrialRecord {
    let bits = exp.config.modulus_bits;
    let shift = W::WIDTH - bits;
    let n = exp.config.n;
    let [a, b, c, d] = exp.automorphism.entries().map(|e| W::from_u128(e as i128 as u128));
    let (cx, cy) = center_residues(exp);
    let (cx, cy) = (W::from_u128(cx), W::from_u128(cy));
    let to_eigen = {
        let (m0, m2) = exp.automorphism.eigen_coordinates(1.0, 0.0);
        let (m1, m3) = exp.automorphism.eigen_coordinates(0.0, 1.0);
        [m0, m1, m2, m3]
    };
    let r = exp.radius;
    // Euclidean distances are compared squared.
    let bound = if ADAPTED { r } else { r * r };

    let (mut x, mut y) = match start {
        Some((px, py)) => (W::from_u128(px), W::from_u128(py)),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(exp.config.seed);
            rng.set_stream(trial_id);
            (W::random(&mut rng), W::random(&mut rng))
        }
    };

    let mut times = Vec::new();
    let mut keys = Vec::new();
    let mut closest = f64::INFINITY;
    for i in 0..n {
        let dx = x.centered(cx, shift);
        let dy = y.centered(cy, shift);
        let key = if ADAPTED {
            let u = to_eigen[0] * dx + to_eigen[1] * dy;
            let s = to_eigen[2] * dx + to_eigen[3] * dy;
            u.abs().max(s.abs())
        } else {
            dx * dx + dy * dy
        };
        if key < bound {
            times.push(i);
            keys.push(key);
        }
        closest = closest.min(key);
        let nx = W::lin(a, x, b, y);
        y = W::lin(c, x, d, y);
        x = nx;
    }
    let to_distance = |k: f64| if ADAPTED { k } else { k.sqrt() };
    TrialRecord {
        trial_id,
        n,
        exceedance_times: times,
        exceedance_values: keys.into_iter().map(|k| capped_observable(to_distance(k))).collect(),
        block_maximum: capped_observable(to_distance(closest)),
    }
}

impl PreparedExperiment {
    /// One orbit from a uniformly random initial state drawn from the
    /// stream `(seed, trial_id)`.
    pub fn run_trial(&self, trial_id: u64) -> TrialRecord {
        self.dispatch(trial_id, None)
    }

    /// One orbit from the given residues (modulo `2^modulus_bits`).
    pub fn run_from(&self, trial_id: u64, px: u128, py: u128) -> TrialRecord {
        self.dispatch(trial_id, Some((px, py)))
    }

    /// Residues of the grid point nearest to the center.
    pub fn center_residues(&self) -> (u128, u128) {
        center_residues(self)
    }

    fn dispatch(&self, trial_id: u64, start: Option<(u128, u128)>) -> TrialRecord {
        let adapted = self.config.metric == MetricKind::Adapted;
        match (self.config.modulus_bits <= 64, adapted) {
            (true, false) => orbit::<u64, false>(self, trial_id, start),
            (true, true) => orbit::<u64, true>(self, trial_id, start),
            (false, false) => orbit::<u128, false>(self, trial_id, start),
            (false, true) => orbit::<u128, true>(self, trial_id, start),
        }
    }

    /// All trials, in trial order, run on the current rayon pool.
    pub fn run(&self) -> Vec<TrialRecord> {
        (0..self.config.trials)
            .into_par_iter()
            .map(|id| self.run_trial(id))
            .collect()
    }
}

pub fn run_trial(cfg: &ExperimentConfig, trial_id: u64) -> Result<TrialRecord> {
    Ok(cfg.prepare()?.run_trial(trial_id))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    Ok(cfg.prepare()?.run())
}

/// Worker cap from `EXTORUS_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("EXTORUS_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&t| t > 0)
}

/// Runs `f` on a dedicated pool of `threads` workers (the global pool when
/// `None`).
pub fn with_workers<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        None => f(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .expect("thread pool")
            .install(f),
    }
}
