//! Monte-Carlo simulation of the two-stage classicality test.
//!
//! `A` and `B` are measured projectively on separate shot batches (they need
//! not commute). Second moments come from squaring the same outcomes, which
//! is exact for projective measurements since `A²` shares `A`'s eigenbasis.
//!
//! Randomness: every record is split into batches; batch `k` of a record with
//! seed `s` draws from `ChaCha8Rng::seed_from_u64(s)` on stream `k`. Records
//! inside a protocol run get seeds from [`derive_seed`]. Per-batch tallies are
//! merged in batch order, so results do not depend on thread scheduling.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::document::round_sig;
use crate::error::{Error, Result};
use crate::matcore::{EigenPair2, Hermitian2, PureState, QubitState};
use crate::witness::{Observable, WitnessTriple};

pub type State = QubitState<f64>;
pub type Triple = WitnessTriple<f64>;

pub const DEFAULT_SIGNIFICANCE: f64 = 5.0;
pub const DEFAULT_BATCH_SIZE: usize = 65_536;
pub const DEFAULT_SHOTS: usize = 100_000;
pub const DEFAULT_PROBE_GRID: usize = 102;
/// Gaps within this of zero count as zero when standard errors vanish.
const EXACT_TOL: f64 = 1e-12;

pub const SWEEP_CSV_HEADER: &str = "p,first_gap,first_gap_se,second_gap,second_gap_se,z,stage1_pass,stage2_violation";

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    None,
    Depolarizing {
        p: f64,
    },
    /// Gaussian miscalibration of the preparation angle, drawn once per batch.
    StateAngleJitter {
        sigma_deg: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseFamily {
    Depolarizing,
    StateAngleJitter,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::Depolarizing { p } if (0.0..=1.0).contains(&p) => Ok(()),
            NoiseModel::Depolarizing { p } => Err(Error::param("p", p, "[0, 1]")),
            NoiseModel::StateAngleJitter { sigma_deg } if sigma_deg >= 0.0 && sigma_deg.is_finite() => Ok(()),
            NoiseModel::StateAngleJitter { sigma_deg } => Err(Error::param("sigma_deg", sigma_deg, ">= 0")),
        }
    }

    /// State after noise in expectation (jitter averaged analytically).
    pub fn apply_exact(&self, state: &State) -> Result<State> {
        Ok(match *self {
            NoiseModel::None => *state,
            NoiseModel::Depolarizing { p } => QubitState::Mixed(state.depolarize(p)?),
            NoiseModel::StateAngleJitter { sigma_deg } => QubitState::Mixed(state.jitter_averaged(sigma_deg.to_radians())),
        })
    }

    /// State-level part of the noise, applied once before batching.
    fn apply_static(&self, state: &State) -> Result<State> {
        match *self {
            NoiseModel::Depolarizing { p } => Ok(QubitState::Mixed(state.depolarize(p)?)),
            _ => Ok(*state),
        }
    }
}

impl FromStr for NoiseModel {
    type Err = Error;

    /// `none`, `depolarizing:<p>`, `jitter:<sigma_deg>` (or `state_angle_jitter:<sigma_deg>`).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::NoiseSpec(s.to_string());
        let s_trim = s.trim();
        if s_trim.eq_ignore_ascii_case("none") {
            return Ok(NoiseModel::None);
        }
        let (kind, value) = s_trim.split_once(':').ok_or_else(bad)?;
        let value: f64 = value.trim().parse().map_err(|_| bad())?;
        let model = match kind.trim().to_ascii_lowercase().as_str() {
            "depolarizing" | "depol" => NoiseModel::Depolarizing { p: value },
            "jitter" | "state_angle_jitter" => NoiseModel::StateAngleJitter { sigma_deg: value },
            _ => return Err(bad()),
        };
        model.validate().map_err(|_| bad())?;
        Ok(model)
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::None => write!(f, "none"),
            NoiseModel::Depolarizing { p } => write!(f, "depolarizing:{p}"),
            NoiseModel::StateAngleJitter { sigma_deg } => write!(f, "jitter:{sigma_deg}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShotRecord {
    pub observable_label: String,
    /// Eigenvalue observed on each shot.
    pub outcomes: Vec<f64>,
    pub n: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub mean_sq: f64,
    pub se_mean: f64,
    pub se_mean_sq: f64,
    pub n: usize,
}

/// Streaming mean and centered sum of squares (Welford), mergeable in a fixed order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Moments {
    mean: f64,
    m2: f64,
}

/// Moments of `x` and `x²` over a batch of shots.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Tally {
    n: u64,
    first: Moments,
    second: Moments,
}

impl Moments {
    fn push(&mut self, x: f64, n: f64) {
        let d = x - self.mean;
        self.mean += d / n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, na: f64, other: Moments, nb: f64) -> Moments {
        let n = na + nb;
        let d = other.mean - self.mean;
        Moments {
            mean: self.mean + d * nb / n,
            m2: self.m2 + other.m2 + d * d * na * nb / n,
        }
    }

    /// Standard error of the mean from the `n - 1` sample variance.
    fn se(&self, n: f64) -> f64 {
        (self.m2.max(0.0) / (n - 1.0)).sqrt() / n.sqrt()
    }
}

impl Tally {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let n = self.n as f64;
        self.first.push(x, n);
        self.second.push(x * x, n);
    }

    /// Tally of `n_lo` copies of `lo` and `n_hi` copies of `hi`, in closed form.
    fn two_point(lo: f64, n_lo: u64, hi: f64, n_hi: u64) -> Tally {
        let n = n_lo + n_hi;
        if n == 0 {
            return Tally::default();
        }
        let (wl, wh, nf) = (n_lo as f64, n_hi as f64, n as f64);
        let moments = |l: f64, h: f64| {
            let d = h - l;
            Moments {
                mean: if n_hi == 0 { l } else if n_lo == 0 { h } else { (wl * l + wh * h) / nf },
                m2: d * d * wl * wh / nf,
            }
        };
        Tally {
            n,
            first: moments(lo, hi),
            second: moments(lo * lo, hi * hi),
        }
    }

    fn merge(self, other: Tally) -> Tally {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        Tally {
            n: self.n + other.n,
            first: self.first.merge(na, other.first, nb),
            second: self.second.merge(na, other.second, nb),
        }
    }

    fn estimate(&self) -> Result<MomentEstimate> {
        let n = self.n as usize;
        if n < 2 {
            return Err(Error::InsufficientSample { needed: 2, got: n });
        }
        let nf = self.n as f64;
        Ok(MomentEstimate {
            mean: self.first.mean,
            mean_sq: self.second.mean,
            se_mean: self.first.se(nf),
            se_mean_sq: self.second.se(nf),
            n,
        })
    }
}

/// Mixes a seed with a path of indices (splitmix64 finalizer at each step).
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(seed), |h, &k| mix(h ^ mix(k)))
}

/// Outcome distribution of a projective measurement: `(eigenvalue, probability)`
/// in ascending eigenvalue order.
pub fn born_probabilities(obs: &Observable<f64>, state: &State) -> Vec<(f64, f64)> {
    let e = obs.m.eig();
    let (p_lo, p_hi) = born_pair(&e, state);
    vec![(e.lo, p_lo), (e.hi, p_hi)]
}

fn born_pair(e: &EigenPair2<f64>, state: &State) -> (f64, f64) {
    let p_lo = Hermitian2::outer(&e.vec_lo).expectation(state).clamp(0.0, 1.0);
    let p_hi = Hermitian2::outer(&e.vec_hi).expectation(state).clamp(0.0, 1.0);
    (p_lo, p_hi)
}

#[derive(Clone, Copy, Debug)]
struct Sampler<'a> {
    eig: &'a EigenPair2<f64>,
    state: &'a State,
    noise: NoiseModel,
    seed: u64,
    batch_size: usize,
}

impl Sampler<'_> {
    fn batches(&self, n: usize) -> usize {
        n.div_ceil(self.batch_size)
    }

    /// Draws batch `k`, reporting for each shot whether it gave the lower eigenvalue.
    fn run_batch(&self, k: usize, n: usize, mut sink: impl FnMut(bool)) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k as u64);
        let count = self.batch_size.min(n - k * self.batch_size);
        let jittered;
        let state = match self.noise {
            NoiseModel::StateAngleJitter { sigma_deg } if sigma_deg > 0.0 => {
                let normal = Normal::new(0.0, sigma_deg.to_radians()).expect("validated sigma");
                jittered = self.state.rotated(normal.sample(&mut rng));
                &jittered
            }
            _ => self.state,
        };
        let (p_lo, _) = born_pair(self.eig, state);
        for _ in 0..count {
            let u: f64 = rng.random();
            sink(u < p_lo);
        }
    }

    fn outcomes(&self, n: usize) -> Vec<f64> {
        let chunks: Vec<Vec<f64>> = (0..self.batches(n))
            .into_par_iter()
            .map(|k| {
                let mut v = Vec::with_capacity(self.batch_size.min(n));
                self.run_batch(k, n, |is_lo| v.push(if is_lo { self.eig.lo } else { self.eig.hi }));
                v
            })
            .collect();
        chunks.concat()
    }

    fn tally(&self, n: usize) -> Tally {
        let parts: Vec<Tally> = (0..self.batches(n))
            .into_par_iter()
            .map(|k| {
                let (mut total, mut lo) = (0u64, 0u64);
                self.run_batch(k, n, |is_lo| {
                    total += 1;
                    lo += is_lo as u64;
                });
                Tally::two_point(self.eig.lo, lo, self.eig.hi, total - lo)
            })
            .collect();
        parts.into_iter().fold(Tally::default(), Tally::merge)
    }
}

/// `n` projective measurements of `obs` on `state`, noiseless.
pub fn sample_shots(obs: &Observable<f64>, state: &State, n: usize, seed: u64) -> Result<ShotRecord> {
    sample_shots_with(obs, state, n, seed, NoiseModel::None, DEFAULT_BATCH_SIZE)
}

pub fn sample_shots_with(
    obs: &Observable<f64>,
    state: &State,
    n: usize,
    seed: u64,
    noise: NoiseModel,
    batch_size: usize,
) -> Result<ShotRecord> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if batch_size == 0 {
        return Err(Error::Plan("batch size must be positive".into()));
    }
    noise.validate()?;
    let prepared = noise.apply_static(state)?;
    let eig = obs.m.eig();
    let sampler = Sampler {
        eig: &eig,
        state: &prepared,
        noise,
        seed,
        batch_size,
    };
    Ok(ShotRecord {
        observable_label: obs.label.clone(),
        outcomes: sampler.outcomes(n),
        n,
        seed,
    })
}

/// Sample first and second moments with standard errors (`sd / √n`).
pub fn estimate_moments(record: &ShotRecord) -> Result<MomentEstimate> {
    let mut t = Tally::default();
    record.outcomes.iter().for_each(|&x| t.push(x));
    t.estimate()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    pub triple: Triple,
    pub probe_states: Vec<State>,
    pub shots_per_observable: usize,
    pub noise: NoiseModel,
    pub seed: u64,
    /// z threshold for both stages.
    pub significance: f64,
    /// Replace sampling by exact expectations.
    pub exact: bool,
    pub batch_size: usize,
}

impl ExperimentPlan {
    /// Plan probing only the triple's own state, with default settings.
    pub fn new(triple: Triple, seed: u64) -> Self {
        let probe_states = vec![triple.state];
        Self {
            triple,
            probe_states,
            shots_per_observable: DEFAULT_SHOTS,
            noise: NoiseModel::None,
            seed,
            significance: DEFAULT_SIGNIFICANCE,
            exact: false,
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.probe_states.is_empty() {
            return Err(Error::Plan("no probe states".into()));
        }
        if self.shots_per_observable == 0 {
            return Err(Error::EmptySample);
        }
        if !(self.significance > 0.0 && self.significance.is_finite()) {
            return Err(Error::param("significance", self.significance, "finite and > 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::Plan("batch size must be positive".into()));
        }
        self.noise.validate()
    }
}

/// Per-probe estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbeResult {
    pub index: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub mean_sq_a: f64,
    pub mean_sq_b: f64,
    pub first_gap: f64,
    pub first_gap_se: f64,
    pub second_gap: f64,
    pub second_gap_se: f64,
    /// Significance of `<A> > <B>` (stage 1 failure direction).
    pub z_order: f64,
    /// Significance of `<B²> < <A²>`.
    pub z_violation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub stage1_pass: bool,
    pub stage2_violation: bool,
    pub z_score: f64,
    pub significance: f64,
    pub best_index: usize,
    pub best_state: State,
    pub details: Vec<ProbeResult>,
}

impl Verdict {
    pub fn best(&self) -> &ProbeResult {
        &self.details[self.best_index]
    }
}

fn z_of(gap: f64, se: f64) -> f64 {
    if se > 0.0 {
        -gap / se
    } else if gap < -EXACT_TOL {
        f64::INFINITY
    } else if gap > EXACT_TOL {
        f64::NEG_INFINITY
    } else {
        0.0
    }
}

fn probe(plan: &ExperimentPlan, eig_a: &EigenPair2<f64>, eig_b: &EigenPair2<f64>, k: usize, state: &State) -> Result<ProbeResult> {
    let (ea, eb) = if plan.exact {
        let s = plan.noise.apply_exact(state)?;
        let (a, b) = (&plan.triple.a.m, &plan.triple.b.m);
        let exact = |m: &Hermitian2<f64>| MomentEstimate {
            mean: m.expectation(&s),
            mean_sq: m.square().expectation(&s),
            se_mean: 0.0,
            se_mean_sq: 0.0,
            n: 0,
        };
        (exact(a), exact(b))
    } else {
        let prepared = plan.noise.apply_static(state)?;
        let run = |eig: &EigenPair2<f64>, which: u64| {
            Sampler {
                eig,
                state: &prepared,
                noise: plan.noise,
                seed: derive_seed(plan.seed, &[k as u64, which]),
                batch_size: plan.batch_size,
            }
            .tally(plan.shots_per_observable)
            .estimate()
        };
        (run(eig_a, 0)?, run(eig_b, 1)?)
    };
    let first_gap = eb.mean - ea.mean;
    let second_gap = eb.mean_sq - ea.mean_sq;
    let first_gap_se = ea.se_mean.hypot(eb.se_mean);
    let second_gap_se = ea.se_mean_sq.hypot(eb.se_mean_sq);
    Ok(ProbeResult {
        index: k,
        mean_a: ea.mean,
        mean_b: eb.mean,
        mean_sq_a: ea.mean_sq,
        mean_sq_b: eb.mean_sq,
        first_gap,
        first_gap_se,
        second_gap,
        second_gap_se,
        z_order: z_of(first_gap, first_gap_se),
        z_violation: z_of(second_gap, second_gap_se),
    })
}

/// Stage 1: no probe may show `<A> > <B>` at the significance threshold.
/// Stage 2: the probe with the smallest estimated second gap must show
/// `<B²> < <A²>` at the threshold (and stage 1 must have passed).
pub fn run_protocol(plan: &ExperimentPlan) -> Result<Verdict> {
    plan.validate()?;
    let eig_a = plan.triple.a.m.eig();
    let eig_b = plan.triple.b.m.eig();
    let details = plan
        .probe_states
        .par_iter()
        .enumerate()
        .map(|(k, s)| probe(plan, &eig_a, &eig_b, k, s))
        .collect::<Result<Vec<_>>>()?;

    let stage1_pass = details.iter().all(|d| d.z_order < plan.significance);
    let best_index = details
        .iter()
        .enumerate()
        .fold(0, |best, (k, d)| if d.second_gap < details[best].second_gap { k } else { best });
    let best = &details[best_index];
    let z_score = best.z_violation;
    let stage2_violation = stage1_pass && best.second_gap < 0.0 && z_score >= plan.significance;

    Ok(Verdict {
        stage1_pass,
        stage2_violation,
        z_score,
        significance: plan.significance,
        best_index,
        best_state: plan.probe_states[best_index],
        details,
    })
}

/// Exact second gap of `t`'s state after depolarizing with strength `p`.
pub fn depolarized_second_gap(t: &Triple, p: f64) -> Result<f64> {
    Ok(t.second_gap_at(&QubitState::Mixed(t.state.depolarize(p)?)))
}

/// Depolarizing strength at which the second gap of `t`'s state reaches zero.
///
/// The gap is affine in `p`: `(1 - p)·g0 + p·Tr(B² - A²)/2`.
pub fn noise_threshold(t: &Triple, family: NoiseFamily) -> Result<f64> {
    if family != NoiseFamily::Depolarizing {
        return Err(Error::NoThreshold("only the depolarizing family has a closed-form threshold".into()));
    }
    let report = t.violation_report();
    if !report.witnessed {
        return Err(Error::NoThreshold("triple does not witness a violation at zero noise".into()));
    }
    let g0 = report.second_gap;
    let g1 = t.second_moment_operator().trace() / 2.0;
    if g1 <= 0.0 {
        return Ok(1.0);
    }
    Ok((g0 / (g0 - g1)).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub first_gap: f64,
    pub first_gap_se: f64,
    pub second_gap: f64,
    pub second_gap_se: f64,
    pub z: f64,
    pub stage1_pass: bool,
    pub stage2_violation: bool,
}

/// Runs the protocol on an evenly spaced depolarizing grid from `from` to `to`
/// (inclusive). Row `i` uses seed `derive_seed(plan.seed, [i])`.
pub fn sweep(plan: &ExperimentPlan, from: f64, to: f64, steps: usize) -> Result<Vec<SweepRow>> {
    if !(0.0..=1.0).contains(&from) || !(0.0..=1.0).contains(&to) || from >= to {
        return Err(Error::Plan(format!("sweep range [{from}, {to}] must satisfy 0 <= from < to <= 1")));
    }
    if steps < 2 {
        return Err(Error::Plan(format!("sweep needs at least 2 steps, got {steps}")));
    }
    plan.validate()?;
    (0..steps)
        .into_par_iter()
        .map(|i| {
            let p = if i == steps - 1 {
                to
            } else {
                from + (to - from) * i as f64 / (steps - 1) as f64
            };
            let row_plan = ExperimentPlan {
                noise: NoiseModel::Depolarizing { p },
                seed: derive_seed(plan.seed, &[i as u64]),
                ..plan.clone()
            };
            let v = run_protocol(&row_plan)?;
            let b = v.best();
            Ok(SweepRow {
                p,
                first_gap: b.first_gap,
                first_gap_se: b.first_gap_se,
                second_gap: b.second_gap,
                second_gap_se: b.second_gap_se,
                z: v.z_score,
                stage1_pass: v.stage1_pass,
                stage2_violation: v.stage2_violation,
            })
        })
        .collect()
}

/// Zero of the least-squares line through `(p, second_gap)`.
pub fn zero_crossing(rows: &[SweepRow]) -> Option<f64> {
    if rows.len() < 2 {
        return None;
    }
    let n = rows.len() as f64;
    let mp = rows.iter().map(|r| r.p).sum::<f64>() / n;
    let mg = rows.iter().map(|r| r.second_gap).sum::<f64>() / n;
    let sxy: f64 = rows.iter().map(|r| (r.p - mp) * (r.second_gap - mg)).sum();
    let sxx: f64 = rows.iter().map(|r| (r.p - mp) * (r.p - mp)).sum();
    if sxx == 0.0 || sxy == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(mp - mg / slope)
}

pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(SweepRow {
            p: round_sig(r.p),
            first_gap: round_sig(r.first_gap),
            first_gap_se: round_sig(r.first_gap_se),
            second_gap: round_sig(r.second_gap),
            second_gap_se: round_sig(r.second_gap_se),
            z: round_sig(r.z),
            ..*r
        })?;
    }
    if rows.is_empty() {
        w.write_record(SWEEP_CSV_HEADER.split(','))?;
    }
    w.flush()?;
    Ok(())
}

/// `n` pure states spread over the Bloch sphere (Fibonacci lattice).
pub fn fibonacci_probes(n: usize) -> Vec<State> {
    let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - (2 * k + 1) as f64 / n as f64;
            let theta = z.clamp(-1.0, 1.0).acos();
            let phi = golden_angle * k as f64;
            let alpha = num_complex::Complex::new((theta / 2.0).cos(), 0.0);
            let beta = num_complex::Complex::from_polar((theta / 2.0).sin(), phi);
            QubitState::Pure(PureState::normalized(alpha, beta).expect("unit vector"))
        })
        .collect()
}
