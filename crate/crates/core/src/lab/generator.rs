use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::SampledCadlagPath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Brownian,
    BrownianDrift,
    CompoundPoisson,
    JumpDiffusion,
    /// Drift `μ` plus jumps of size `jump_high` at multiples of `1/λ`.
    DeterministicTest,
}

/// `X = x0 + μ t + σ B_t + Σ jumps`, jumps of intensity `λ` with sizes
/// uniform on `[jump_low, jump_high]`. Parameters that the kind does not use
/// are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "minus_one")]
    pub jump_low: f64,
    #[serde(default = "one")]
    pub jump_high: f64,
    /// Steps per unit time.
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

fn minus_one() -> f64 {
    -1.0
}

fn default_steps() -> usize {
    1 << 14
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind) -> Self {
        Self {
            kind,
            sigma: 1.0,
            mu: 0.0,
            lambda: 0.0,
            jump_low: -1.0,
            jump_high: 1.0,
            steps: default_steps(),
            horizon: 1.0,
            x0: 0.0,
            seed: 0,
        }
    }

    pub fn brownian(steps: usize, seed: u64) -> Self {
        Self { steps, seed, ..Self::new(GeneratorKind::Brownian) }
    }

    pub fn jump_diffusion(sigma: f64, lambda: f64, steps: usize, seed: u64) -> Self {
        Self { sigma, lambda, steps, seed, ..Self::new(GeneratorKind::JumpDiffusion) }
    }

    /// `(σ, μ, λ)` actually used by the kind.
    pub fn effective(&self) -> (f64, f64, f64) {
        match self.kind {
            GeneratorKind::Brownian => (self.sigma, 0.0, 0.0),
            GeneratorKind::BrownianDrift => (self.sigma, self.mu, 0.0),
            GeneratorKind::CompoundPoisson => (0.0, self.mu, self.lambda),
            GeneratorKind::JumpDiffusion => (self.sigma, self.mu, self.lambda),
            GeneratorKind::DeterministicTest => (0.0, self.mu, self.lambda),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::config(m.to_string()));
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return bad("horizon must be positive");
        }
        if self.total_steps() < 2 {
            return bad("need at least two steps");
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return bad("sigma must be nonnegative");
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad("lambda must be nonnegative");
        }
        if !self.mu.is_finite() || !self.x0.is_finite() {
            return bad("mu and x0 must be finite");
        }
        if !(self.jump_low <= self.jump_high) || !self.jump_low.is_finite() || !self.jump_high.is_finite() {
            return bad("jump bounds must satisfy jump_low <= jump_high");
        }
        Ok(())
    }

    pub fn total_steps(&self) -> usize {
        (self.steps as f64 * self.horizon).round() as usize
    }

    pub fn generate(&self) -> Result<SampledCadlagPath> {
        self.generate_indexed(0)
    }

    /// Path number `index` of the family seeded by `seed`. Each index has
    /// its own ChaCha stream, so paths do not depend on generation order.
    pub fn generate_indexed(&self, index: u64) -> Result<SampledCadlagPath> {
        self.validate()?;
        let n = self.total_steps();
        let dt = self.horizon / n as f64;
        let (sigma, mu, lambda) = self.effective();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let poisson = if lambda > 0.0 && self.kind != GeneratorKind::DeterministicTest {
            Some(Poisson::new(lambda * dt).map_err(|e| Error::config(e.to_string()))?)
        } else {
            None
        };
        let period = if self.kind == GeneratorKind::DeterministicTest && lambda > 0.0 {
            ((1.0 / lambda) / dt).round().max(1.0) as usize
        } else {
            0
        };
        let sd = sigma * dt.sqrt();
        let mut values = Vec::with_capacity(n + 1);
        let mut jumps = Vec::new();
        let mut x = self.x0;
        values.push(x);
        for i in 1..=n {
            let jump = match &poisson {
                Some(p) => {
                    let k: f64 = p.sample(&mut rng);
                    (0..k as u64).map(|_| rng.gen_range(self.jump_low..=self.jump_high)).sum::<f64>()
                }
                None if period > 0 && i % period == 0 => self.jump_high,
                None => 0.0,
            };
            let diffusion = if sd > 0.0 { sd * rng.sample::<f64, _>(StandardNormal) } else { 0.0 };
            if jump != 0.0 {
                // the whole step is the jump, so marks stay exact
                x += jump;
                jumps.push(i);
            } else {
                x += mu * dt + diffusion;
            }
            values.push(x);
        }
        let times = (0..=n).map(|i| self.horizon * i as f64 / n as f64).collect();
        SampledCadlagPath::new(times, values, &jumps)
    }
}
