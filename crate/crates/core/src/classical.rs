//! Classical continuous triple redundancy: voting, relaxation toward the
//! vote, and the Monte Carlo residual-rate estimate.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Three copies with velocities and the spring/damping constants of the
/// relaxation `x'' = -k (x - M) - gamma x'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalTriple {
    pub x: [f64; 3],
    pub v: [f64; 3],
    pub k: f64,
    pub gamma: f64,
}

impl ClassicalTriple {
    pub fn new(x: [f64; 3], k: f64, gamma: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "k",
                reason: "must be finite and positive",
            });
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: "must be finite and positive",
            });
        }
        Ok(Self { x, v: [0.0; 3], k, gamma })
    }

    /// `v^2/2 + k (x - M)^2 / 2`, summed over copies.
    pub fn energy(&self, m: f64) -> f64 {
        (0..3)
            .map(|j| 0.5 * self.v[j] * self.v[j] + 0.5 * self.k * (self.x[j] - m) * (self.x[j] - m))
            .sum()
    }
}

/// Outcome of one vote.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vote {
    pub value: f64,
    /// Some pair agreed within the tolerance.
    pub agreement: bool,
}

/// Mean of the closest pair of values. The pairs are formed over the sorted
/// values, and a tie goes to the lower pair, so the result does not depend on
/// argument order.
pub fn vote(x1: f64, x2: f64, x3: f64, tol: f64) -> Vote {
    let mut s = [x1, x2, x3];
    s.sort_by(f64::total_cmp);
    let (lo, hi) = (s[1] - s[0], s[2] - s[1]);
    let value = if lo <= hi { 0.5 * (s[0] + s[1]) } else { 0.5 * (s[1] + s[2]) };
    Vote {
        value,
        agreement: lo.min(hi) <= tol,
    }
}

/// Majority value `M`: the mean of two values that agree within `tol`, else
/// the mean of the two that differ least.
pub fn majority_value(x1: f64, x2: f64, x3: f64, tol: f64) -> f64 {
    vote(x1, x2, x3, tol).value
}

/// One RK4 step of the damped spring toward `m` for every copy.
pub fn relax_step(t: &ClassicalTriple, m: f64, dt: f64) -> ClassicalTriple {
    let f = |x: f64, v: f64| (v, -t.k * (x - m) - t.gamma * v);
    let mut out = *t;
    for j in 0..3 {
        let (x, v) = (t.x[j], t.v[j]);
        let (a1, b1) = f(x, v);
        let (a2, b2) = f(x + 0.5 * dt * a1, v + 0.5 * dt * b1);
        let (a3, b3) = f(x + 0.5 * dt * a2, v + 0.5 * dt * b2);
        let (a4, b4) = f(x + dt * a3, v + dt * b3);
        out.x[j] = x + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        out.v[j] = v + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
    }
    out
}

/// Interval-by-interval corruption model for the residual-rate estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualConfig {
    /// Corruption rate per copy per unit time.
    pub rate: f64,
    /// Voting interval.
    pub dt: f64,
    /// Simulated time per trial.
    pub duration: f64,
    /// Corrupted copies take a fresh uniform value in `[0, span)`.
    pub span: f64,
}

impl ResidualConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "rate",
                reason: "must be finite and nonnegative",
            });
        }
        for (name, v) in [("dt", self.dt), ("duration", self.duration), ("span", self.span)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be finite and positive",
                });
            }
        }
        Ok(())
    }

    /// Voting rounds per trial.
    pub fn rounds_per_trial(&self) -> u64 {
        libm::round(self.duration / self.dt).max(1.0) as u64
    }

    pub fn corruption_probability(&self) -> f64 {
        -libm::expm1(-self.rate * self.dt)
    }
}

/// `3 p^2 (1 - p) + p^3`: probability that at least two of three copies fail.
pub fn two_of_three_failure(p: f64) -> f64 {
    3.0 * p * p * (1.0 - p) + p * p * p
}

/// Voting rounds and logical failures accumulated over some trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RoundCounts {
    pub rounds: u64,
    pub failures: u64,
}

impl RoundCounts {
    pub fn merge(self, other: RoundCounts) -> RoundCounts {
        RoundCounts {
            rounds: self.rounds + other.rounds,
            failures: self.failures + other.failures,
        }
    }
}

/// One trial: each round corrupts each copy with probability `p`, votes with
/// zero tolerance, and resets all copies to the vote. A round fails when the
/// vote differs from the value the copies held before it.
pub fn simulate_trial<R: Rng + ?Sized>(cfg: &ResidualConfig, rng: &mut R) -> RoundCounts {
    let p = cfg.corruption_probability();
    let rounds = cfg.rounds_per_trial();
    let mut value = 0.5 * cfg.span;
    let mut failures = 0;
    for _ in 0..rounds {
        let mut x = [value; 3];
        let mut hit = false;
        for c in x.iter_mut() {
            if rng.gen::<f64>() < p {
                *c = cfg.span * rng.gen::<f64>();
                hit = true;
            }
        }
        if hit {
            let m = majority_value(x[0], x[1], x[2], 0.0);
            if m != value {
                failures += 1;
            }
            value = m;
        }
    }
    RoundCounts { rounds, failures }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualEstimate {
    pub rate: f64,
    pub dt: f64,
    pub rounds: u64,
    pub failures: u64,
    pub failure_probability: f64,
    /// Failures per unit time.
    pub measured_rate: f64,
    /// `3 rate^2 dt`.
    pub predicted_rate: f64,
    pub ratio: f64,
    /// Exact per-round probability `3p^2(1-p) + p^3`.
    pub exact_probability: f64,
    /// Binomial standard error of `failure_probability` under the exact law.
    pub sigma: f64,
}

impl ResidualEstimate {
    pub fn from_counts(cfg: &ResidualConfig, counts: RoundCounts) -> Self {
        let rounds = counts.rounds.max(1) as f64;
        let freq = counts.failures as f64 / rounds;
        let exact = two_of_three_failure(cfg.corruption_probability());
        let predicted = 3.0 * cfg.rate * cfg.rate * cfg.dt;
        let measured = freq / cfg.dt;
        Self {
            rate: cfg.rate,
            dt: cfg.dt,
            rounds: counts.rounds,
            failures: counts.failures,
            failure_probability: freq,
            measured_rate: measured,
            predicted_rate: predicted,
            ratio: if predicted > 0.0 { measured / predicted } else { 0.0 },
            exact_probability: exact,
            sigma: (exact * (1.0 - exact) / rounds).sqrt(),
        }
    }

    /// Deviation from the exact law in standard errors.
    pub fn z_score(&self) -> f64 {
        if self.sigma == 0.0 {
            return if self.failure_probability == self.exact_probability { 0.0 } else { f64::INFINITY };
        }
        (self.failure_probability - self.exact_probability) / self.sigma
    }
}

/// Run `trials` trials on one random stream and summarize.
pub fn monte_carlo_residual<R: Rng + ?Sized>(cfg: &ResidualConfig, trials: u64, rng: &mut R) -> Result<ResidualEstimate> {
    cfg.validate()?;
    let mut total = RoundCounts::default();
    for _ in 0..trials {
        total = total.merge(simulate_trial(cfg, rng));
    }
    Ok(ResidualEstimate::from_counts(cfg, total))
}
