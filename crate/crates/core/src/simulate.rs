//! Event-driven simulation of the conservative process `X` and of its
//! explosive dual `X̃`.
//!
//! Jumps below the truncation level `ε` are replaced by their mean, which
//! turns the drift into exponential decay (or growth) at a constant rate `δ`
//! between jumps:
//!
//! * `X`: `δ = b + ∫_ε^∞ ξ μ(dξ)`;
//! * `X̃`: `δ = d − ∫_0^ε ξ μ̃(dξ)` with `d = ∫(1 − e^{−ξ}) μ̃(dξ)`.
//!
//! Jumps arrive with intensity `Λ(ε)·X(t)`. Because `X` is exponential between
//! jumps the integrated intensity has a closed-form inverse, so every jump
//! time is drawn exactly from a single exponential variate.
//!
//! The explosive engine may rescale the truncation level with the state,
//! `ε_j = ε·2^j` with `j = ⌊log₂ max(1, X)⌋` fixed at each jump, which keeps
//! the relative truncation error constant while the path runs off to the cap.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measure::{LevyMeasureSpec, Measure};
use crate::rng::{path_stream, standard_exponential};
use crate::sampler::JumpSampler;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    /// Small-jump truncation level.
    pub eps: f64,
    /// State above which a path counts as exploded.
    pub cap: f64,
    /// Master seed; path `i` uses stream `i` under this key.
    pub seed: u64,
    /// Event budget per path.
    pub max_events: u64,
    /// Explosive engine only: scale `ε` with the state (see module docs).
    pub scale_eps_with_state: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            eps: 1e-4,
            cap: 1e12,
            seed: 0,
            max_events: 10_000_000,
            scale_eps_with_state: true,
        }
    }
}

impl EngineConfig {
    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = cap;
        self
    }

    fn check(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidConfig(format!("eps must be positive and finite (got {})", self.eps)));
        }
        if !(self.cap > 1.0 && self.cap.is_finite()) {
            return Err(Error::InvalidConfig(format!("cap must be finite and > 1 (got {})", self.cap)));
        }
        if self.max_events == 0 {
            return Err(Error::InvalidConfig("max_events must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub size: f64,
}

/// One simulated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub x0: f64,
    pub events: Vec<JumpEvent>,
    /// Decay rate in force after each event; entry 0 applies from time 0.
    pub segment_rates: Vec<f64>,
    /// Decay rate at the base truncation level.
    pub decay_rate: f64,
    pub eps: f64,
    pub t_end: f64,
    pub exploded: bool,
    pub explosion_time: Option<f64>,
    /// Whether the event budget, rather than the cap, ended the path.
    pub hit_max_events: bool,
    /// `X(t_end)`, or infinity when exploded.
    pub terminal: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathValue {
    Value(f64),
    Exploded,
}

impl PathValue {
    pub fn value(self) -> Option<f64> {
        match self {
            PathValue::Value(v) => Some(v),
            PathValue::Exploded => None,
        }
    }
}

impl Path {
    /// Whether the decay rate changes along the path.
    pub fn has_varying_rate(&self) -> bool {
        self.segment_rates.iter().any(|&r| r != self.decay_rate)
    }

    /// `X(t)`, right-continuous at jump times.
    pub fn evaluate(&self, t: f64) -> Result<PathValue> {
        if !(t >= 0.0 && t <= self.t_end) {
            return Err(crate::error::domain(format!("t = {t} outside [0, {}]", self.t_end)));
        }
        if let Some(tau) = self.explosion_time {
            if t >= tau {
                return Ok(PathValue::Exploded);
            }
        }
        let mut x = self.x0;
        let mut s = 0.0;
        let mut rate = self.segment_rates[0];
        for (i, ev) in self.events.iter().enumerate() {
            if ev.time > t {
                break;
            }
            x = x * libm::exp(-rate * (ev.time - s)) + ev.size;
            s = ev.time;
            rate = self.segment_rates[i + 1];
        }
        Ok(PathValue::Value(x * libm::exp(-rate * (t - s))))
    }
}

#[derive(Debug, Clone)]
struct Level {
    eps: f64,
    rate: f64,
    sampler: JumpSampler,
}

impl Level {
    fn lambda(&self) -> f64 {
        if self.sampler.is_empty() {
            0.0
        } else {
            self.sampler.lambda()
        }
    }
}

/// A configured simulator for one measure. Cheap to share between threads;
/// each call owns its RNG stream.
#[derive(Debug, Clone)]
pub struct Engine {
    config: EngineConfig,
    levels: Vec<Level>,
    explosive: bool,
}

/// Outcome of one path when only the end state is kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Terminal {
    pub value: PathValue,
    pub explosion_time: Option<f64>,
    pub events: u64,
    pub hit_max_events: bool,
}

enum Stop {
    Horizon(f64),
    Exploded(f64),
    Budget(f64),
}

impl Engine {
    /// Engine for `X` driven by the conservative measure `spec`.
    pub fn conservative(spec: &LevyMeasureSpec, config: EngineConfig) -> Result<Self> {
        config.check()?;
        let measure = Measure::new(spec.clone())?;
        let b = measure.validate()?.b;
        let rate = b + measure.tail_mean(config.eps)?;
        let sampler = JumpSampler::new(&measure, config.eps)?;
        Ok(Self {
            config,
            levels: alloc::vec![Level {
                eps: config.eps,
                rate,
                sampler,
            }],
            explosive: false,
        })
    }

    /// Engine for `X̃` with generator `−d x f′ + x∫(f(x+ξ) − f(x)) μ̃(dξ)`,
    /// `d = ∫(1 − e^{−ξ}) μ̃(dξ)`.
    pub fn explosive(untilted: &LevyMeasureSpec, config: EngineConfig) -> Result<Self> {
        config.check()?;
        let measure = Measure::new(untilted.clone())?;
        let tilted = Measure::new(untilted.tilted()?)?;
        let m = tilted.validate()?;
        Self::with_drift(&measure, m.b + m.m1, config)
    }

    /// Uncompensated engine for `−d x f′ + x∫(f(x+ξ) − f(x)) μ(dξ)`.
    pub fn with_drift(measure: &Measure, drift: f64, config: EngineConfig) -> Result<Self> {
        config.check()?;
        let small = measure.small_jump_mean(config.eps)?;
        if !(small < drift) {
            return Err(Error::InvalidConfig(format!(
                "small-jump mean {small} at eps = {} must stay below the drift {drift}",
                config.eps
            )));
        }
        let top = if config.scale_eps_with_state {
            libm::floor(libm::log2(config.cap)) as usize + 1
        } else {
            0
        };
        let mut levels = Vec::with_capacity(top + 1);
        for j in 0..=top {
            let eps = config.eps * libm::ldexp(1.0, j as i32);
            levels.push(Level {
                eps,
                rate: drift - measure.small_jump_mean(eps)?,
                sampler: JumpSampler::new(measure, eps)?,
            });
        }
        Ok(Self {
            config,
            levels,
            explosive: true,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Decay rate at the base truncation level.
    pub fn decay_rate(&self) -> f64 {
        self.levels[0].rate
    }

    /// `Λ(ε)` at the base truncation level.
    pub fn tail_intensity(&self) -> f64 {
        self.levels[0].lambda()
    }

    fn level_for(&self, x: f64) -> usize {
        if self.levels.len() == 1 || x < 2.0 {
            return 0;
        }
        (libm::floor(libm::log2(x)) as usize).min(self.levels.len() - 1)
    }

    fn check_start(&self, x0: f64, t_end: f64) -> Result<()> {
        if !(x0 > 0.0 && x0.is_finite()) {
            return Err(crate::error::invalid("x0", "must be positive and finite"));
        }
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(crate::error::invalid("t_end", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// Core loop; `record` sees every jump with the rate in force after it.
    fn run<F: FnMut(JumpEvent, f64)>(&self, rng: &mut ChaCha8Rng, x0: f64, t_end: f64, mut record: F) -> (Stop, u64) {
        let cap = self.config.cap;
        let mut x = x0;
        let mut t = 0.0;
        let mut level = &self.levels[self.level_for(x)];
        let mut n = 0u64;
        loop {
            let rate = level.rate;
            let lambda = level.lambda();
            let remaining = t_end - t;
            // Time until the next jump, infinite if none occurs.
            let s = if lambda == 0.0 {
                f64::INFINITY
            } else {
                let e = standard_exponential(rng);
                let a = e / (x * lambda);
                if rate > 0.0 {
                    let arg = a * rate;
                    if arg >= 1.0 {
                        f64::INFINITY
                    } else {
                        -libm::log1p(-arg) / rate
                    }
                } else if rate < 0.0 {
                    libm::log1p(-rate * a) / -rate
                } else {
                    a
                }
            };
            if rate < 0.0 {
                let crossing = libm::log(cap / x) / -rate;
                if crossing <= remaining && crossing < s {
                    return (Stop::Exploded(t + crossing), n);
                }
            }
            if s > remaining {
                return (Stop::Horizon(x * libm::exp(-rate * (t_end - t))), n);
            }
            let t_new = t + s;
            let xi = level.sampler.sample(rng);
            x = x * libm::exp(-rate * (t_new - t)) + xi;
            t = t_new;
            n += 1;
            if !(x <= cap) {
                record(JumpEvent { time: t, size: xi }, rate);
                return (Stop::Exploded(t), n);
            }
            level = &self.levels[self.level_for(x)];
            record(JumpEvent { time: t, size: xi }, level.rate);
            if n >= self.config.max_events {
                return (Stop::Budget(t), n);
            }
        }
    }

    /// Full path number `index` under the configured master seed.
    pub fn path(&self, x0: f64, t_end: f64, index: u64) -> Result<Path> {
        self.check_start(x0, t_end)?;
        let mut rng = path_stream(self.config.seed, index);
        let mut events = Vec::new();
        let mut rates = alloc::vec![self.levels[self.level_for(x0)].rate];
        let (stop, _) = self.run(&mut rng, x0, t_end, |ev, r| {
            events.push(ev);
            rates.push(r);
        });
        let mut path = Path {
            x0,
            events,
            segment_rates: rates,
            decay_rate: self.levels[0].rate,
            eps: self.config.eps,
            t_end,
            exploded: false,
            explosion_time: None,
            hit_max_events: false,
            terminal: f64::INFINITY,
        };
        match stop {
            Stop::Horizon(x) => path.terminal = x,
            Stop::Exploded(tau) => {
                path.exploded = true;
                path.explosion_time = Some(tau);
            }
            Stop::Budget(tau) => {
                if !self.explosive {
                    return Err(Error::MaxEventsExceeded {
                        limit: self.config.max_events,
                    });
                }
                path.exploded = true;
                path.explosion_time = Some(tau);
                path.hit_max_events = true;
            }
        }
        Ok(path)
    }

    /// End state of path number `index` without storing events.
    pub fn terminal(&self, x0: f64, t_end: f64, index: u64) -> Result<Terminal> {
        self.check_start(x0, t_end)?;
        let mut rng = path_stream(self.config.seed, index);
        let (stop, events) = self.run(&mut rng, x0, t_end, |_, _| {});
        Ok(match stop {
            Stop::Horizon(x) => Terminal {
                value: PathValue::Value(x),
                explosion_time: None,
                events,
                hit_max_events: false,
            },
            Stop::Exploded(tau) => Terminal {
                value: PathValue::Exploded,
                explosion_time: Some(tau),
                events,
                hit_max_events: false,
            },
            Stop::Budget(tau) => {
                if !self.explosive {
                    return Err(Error::MaxEventsExceeded {
                        limit: self.config.max_events,
                    });
                }
                Terminal {
                    value: PathValue::Exploded,
                    explosion_time: Some(tau),
                    events,
                    hit_max_events: true,
                }
            }
        })
    }

    /// Truncation level in force at base level `j` (for diagnostics).
    pub fn level_eps(&self, j: usize) -> Option<f64> {
        self.levels.get(j).map(|l| l.eps)
    }
}

/// One path of `X` with `X_0 = x0`, stream 0 of `config.seed`.
pub fn simulate_path(spec: &LevyMeasureSpec, x0: f64, t_end: f64, config: EngineConfig) -> Result<Path> {
    Engine::conservative(spec, config)?.path(x0, t_end, 0)
}

/// One path of the explosive process driven by `untilted`, stream 0 of `config.seed`.
pub fn simulate_explosive_path(untilted: &LevyMeasureSpec, x0: f64, t_end: f64, config: EngineConfig) -> Result<Path> {
    Engine::explosive(untilted, config)?.path(x0, t_end, 0)
}
