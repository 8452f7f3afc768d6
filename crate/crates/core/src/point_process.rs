//! Event-by-event simulation of the ZHawkes process by Ogata thinning.
//!
//! With exponential kernels the whole history is summarized by two numbers,
//! `H` and `Z`, which decay geometrically between events and jump by
//! `n_H β` and `±γ` at each event. Between events `λ = λ∞ + H + Z²` is
//! non-increasing, so the intensity at the current point is always a valid
//! thinning bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::kernels::ZHawkesParams;

pub const DEFAULT_EVENT_CAP: u64 = 100_000_000;

pub type SimRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sign ε of a price change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Up,
    Down,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Up => 1.0,
            Sign::Down => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Up => 1,
            Sign::Down => -1,
        }
    }

    pub fn from_i8(v: i8) -> Option<Self> {
        match v {
            1 => Some(Sign::Up),
            -1 => Some(Sign::Down),
            _ => None,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Sign::Up => Sign::Down,
            Sign::Down => Sign::Up,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub sign: Sign,
}

/// Recursive summary of the history at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessState {
    pub h: f64,
    pub z: f64,
    pub t: f64,
}

impl ProcessState {
    /// Empty history at time zero.
    pub fn empty() -> Self {
        Self {
            h: 0.0,
            z: 0.0,
            t: 0.0,
        }
    }

    pub fn intensity(&self, p: &ZHawkesParams) -> f64 {
        p.baseline + self.h + self.z * self.z
    }

    fn check(&self, p: &ZHawkesParams) {
        debug_assert!(self.h >= 0.0, "negative Hawkes component {}", self.h);
        debug_assert!(self.intensity(p) >= p.baseline);
    }
}

/// Advance the state by `delta` with no events.
pub fn decay_state(s: &ProcessState, delta: f64, p: &ZHawkesParams) -> ProcessState {
    debug_assert!(delta >= 0.0, "negative decay interval {delta}");
    let next = ProcessState {
        h: s.h * (-p.hawkes_decay * delta).exp(),
        z: s.z * (-p.zumbach_decay * delta).exp(),
        t: s.t + delta,
    };
    next.check(p);
    next
}

/// Jump of the state at an event of the given sign. Time is unchanged.
pub fn apply_event(s: &ProcessState, sign: Sign, p: &ZHawkesParams) -> ProcessState {
    let next = ProcessState {
        h: s.h + p.hawkes_jump(),
        z: s.z + sign.as_f64() * p.zumbach_amplitude(),
        t: s.t,
    };
    next.check(p);
    next
}

/// A realization of the marked point process on `(0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    pub times: Vec<f64>,
    pub signs: Vec<Sign>,
    pub horizon: f64,
    pub params: ZHawkesParams,
    pub seed: u64,
    /// Set when the simulation stopped early (event cap or exhausted time
    /// resolution); `horizon` then still reports the requested horizon.
    pub truncated: bool,
}

impl EventStream {
    pub fn empty(params: ZHawkesParams, horizon: f64, seed: u64) -> Self {
        Self {
            times: Vec::new(),
            signs: Vec::new(),
            horizon,
            params,
            seed,
            truncated: false,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn events(&self) -> impl Iterator<Item = Event> + '_ {
        self.times
            .iter()
            .zip(&self.signs)
            .map(|(&time, &sign)| Event { time, sign })
    }

    pub fn push(&mut self, e: Event) {
        self.times.push(e.time);
        self.signs.push(e.sign);
    }

    /// Cumulative price `P` after each event, in units of `tick`.
    pub fn price_path(&self) -> Vec<f64> {
        let tick = self.params.tick;
        let mut price = 0.0;
        self.signs
            .iter()
            .map(|s| {
                price += s.as_f64() * tick;
                price
            })
            .collect()
    }

    /// First `n` events, with the horizon cut back to the last kept event
    /// when anything was dropped.
    pub fn prefix(&self, n: usize) -> EventStream {
        if n >= self.len() {
            return self.clone();
        }
        let horizon = if n == 0 {
            self.times[0]
        } else {
            self.times[n - 1]
        };
        EventStream {
            times: self.times[..n].to_vec(),
            signs: self.signs[..n].to_vec(),
            horizon,
            params: self.params,
            seed: self.seed,
            truncated: self.truncated,
        }
    }

    pub fn with_flipped_signs(&self) -> EventStream {
        EventStream {
            signs: self.signs.iter().map(|s| s.flipped()).collect(),
            ..self.clone()
        }
    }

    /// Checks the structural invariants: equal lengths, strictly increasing
    /// times inside `(0, horizon]`.
    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.signs.len() {
            return Err(Error::Domain(format!(
                "{} times but {} signs",
                self.times.len(),
                self.signs.len()
            )));
        }
        let mut prev = 0.0;
        for (i, &t) in self.times.iter().enumerate() {
            if !(t > prev) || t > self.horizon {
                return Err(Error::Domain(format!(
                    "event {i} at time {t} breaks ordering within (0, {}]",
                    self.horizon
                )));
            }
            prev = t;
        }
        Ok(())
    }
}

/// Outcome of a streaming simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub n_events: u64,
    pub n_candidates: u64,
    pub truncated: bool,
    /// Time reached; equals the horizon unless truncated.
    pub end_time: f64,
    /// State at `end_time`.
    pub final_state: ProcessState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThinningConfig {
    pub horizon: f64,
    pub seed: u64,
    pub event_cap: u64,
}

impl ThinningConfig {
    pub fn new(horizon: f64, seed: u64) -> Self {
        Self {
            horizon,
            seed,
            event_cap: DEFAULT_EVENT_CAP,
        }
    }

    pub fn with_event_cap(mut self, cap: u64) -> Self {
        self.event_cap = cap;
        self
    }
}

/// Thinning simulation that hands every accepted event, together with the
/// state just before it, to `on_event`. Nothing is stored, so arbitrarily
/// long runs use constant memory.
///
/// Random numbers are drawn from one ChaCha8 stream in a fixed order:
/// waiting time, acceptance uniform, then the sign if accepted.
pub fn simulate_thinning_with<F>(
    p: &ZHawkesParams,
    cfg: &ThinningConfig,
    mut on_event: F,
) -> Result<RunSummary>
where
    F: FnMut(Event, &ProcessState),
{
    p.validate()?;
    if !(cfg.horizon.is_finite() && cfg.horizon > 0.0) {
        return Err(Error::param(
            "horizon",
            format!("must be finite and > 0, got {}", cfg.horizon),
        ));
    }
    let mut rng = seeded_rng(cfg.seed);
    let mut state = ProcessState::empty();
    let mut n_events = 0u64;
    let mut n_candidates = 0u64;
    loop {
        let bound = state.intensity(p);
        let tick = state.t.next_up() - state.t;
        if bound * tick > 1.0 {
            // Typical waiting times are below the float resolution of `t`.
            return Ok(RunSummary {
                n_events,
                n_candidates,
                truncated: true,
                end_time: state.t,
                final_state: state,
            });
        }
        let wait: f64 = rng.sample::<f64, _>(Exp1) / bound;
        // Event times are rounded onto the float grid and stay strictly increasing.
        let candidate = (state.t + wait).max(state.t.next_up());
        if candidate > cfg.horizon {
            let rest = cfg.horizon - state.t;
            state = decay_state(&state, rest, p);
            state.t = cfg.horizon;
            return Ok(RunSummary {
                n_events,
                n_candidates,
                truncated: false,
                end_time: cfg.horizon,
                final_state: state,
            });
        }
        n_candidates += 1;
        state = decay_state(&state, candidate - state.t, p);
        state.t = candidate;
        let u: f64 = rng.random();
        if u * bound < state.intensity(p) {
            if n_events >= cfg.event_cap {
                return Ok(RunSummary {
                    n_events,
                    n_candidates,
                    truncated: true,
                    end_time: state.t,
                    final_state: state,
                });
            }
            let sign = if rng.random::<bool>() {
                Sign::Up
            } else {
                Sign::Down
            };
            let event = Event {
                time: candidate,
                sign,
            };
            on_event(event, &state);
            state = apply_event(&state, sign, p);
            n_events += 1;
        }
    }
}

/// Exact ZHawkes sample on `(0, horizon]` with the default event cap.
pub fn simulate_thinning(p: &ZHawkesParams, horizon: f64, seed: u64) -> Result<EventStream> {
    simulate_thinning_capped(p, &ThinningConfig::new(horizon, seed))
}

pub fn simulate_thinning_capped(p: &ZHawkesParams, cfg: &ThinningConfig) -> Result<EventStream> {
    let mut stream = EventStream::empty(*p, cfg.horizon, cfg.seed);
    let summary = simulate_thinning_with(p, cfg, |e, _| stream.push(e))?;
    stream.truncated = summary.truncated;
    Ok(stream)
}

/// Values on the uniform grid `t0 + k·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSeries {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl SampledSeries {
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Samples at times `>= t`.
    pub fn after(&self, t: f64) -> SampledSeries {
        let skip = if t <= self.t0 {
            0
        } else {
            (((t - self.t0) / self.dt).ceil() as usize).min(self.values.len())
        };
        SampledSeries {
            t0: self.time(skip),
            dt: self.dt,
            values: self.values[skip..].to_vec(),
        }
    }
}

/// λ, H and Z sampled on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSamples {
    pub lambda: SampledSeries,
    pub h: SampledSeries,
    pub z: SampledSeries,
}

/// Replays events through the recursion and evaluates the left-continuous
/// state at arbitrary later times.
#[derive(Debug, Clone)]
pub struct Replay {
    params: ZHawkesParams,
    state: ProcessState,
}

impl Replay {
    pub fn new(params: ZHawkesParams) -> Self {
        Self {
            params,
            state: ProcessState::empty(),
        }
    }

    /// State just before any event at `t`. Times earlier than the last
    /// replayed event (only possible for an unsorted stream) see no decay.
    pub fn state_at(&self, t: f64) -> ProcessState {
        let mut s = decay_state(&self.state, (t - self.state.t).max(0.0), &self.params);
        s.t = t;
        s
    }

    pub fn event(&mut self, e: Event) {
        let t = e.time.max(self.state.t);
        self.state = apply_event(&self.state_at(t), e.sign, &self.params);
    }

    pub fn state(&self) -> &ProcessState {
        &self.state
    }
}

/// Recursive left-limit intensity at sorted query times.
pub fn replay_intensity_at(e: &EventStream, p: &ZHawkesParams, sorted_times: &[f64]) -> Vec<f64> {
    let mut replay = Replay::new(*p);
    let mut events = e.events().peekable();
    sorted_times
        .iter()
        .map(|&t| {
            while let Some(ev) = events.next_if(|ev| ev.time < t) {
                replay.event(ev);
            }
            replay.state_at(t).intensity(p)
        })
        .collect()
}

/// Streaming grid sampler fed one event at a time.
#[derive(Debug, Clone)]
pub struct GridSampler {
    replay: Replay,
    dt: f64,
    next_k: usize,
    n_points: usize,
    lambda: Vec<f64>,
    h: Vec<f64>,
    z: Vec<f64>,
}

impl GridSampler {
    /// Grid `k·dt` for `k = 0..=⌊horizon/dt⌋`.
    pub fn new(p: &ZHawkesParams, dt: f64, horizon: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param(
                "sample_dt",
                format!("must be finite and > 0, got {dt}"),
            ));
        }
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(Error::param(
                "horizon",
                format!("must be finite and >= 0, got {horizon}"),
            ));
        }
        let n_points = (horizon / dt).floor() as usize + 1;
        Ok(Self {
            replay: Replay::new(*p),
            dt,
            next_k: 0,
            n_points,
            lambda: Vec::with_capacity(n_points),
            h: Vec::with_capacity(n_points),
            z: Vec::with_capacity(n_points),
        })
    }

    fn record_through(&mut self, t: f64) {
        while self.next_k < self.n_points {
            let tk = self.next_k as f64 * self.dt;
            if tk > t {
                break;
            }
            let s = self.replay.state_at(tk);
            self.lambda.push(s.intensity(&self.replay.params));
            self.h.push(s.h);
            self.z.push(s.z);
            self.next_k += 1;
        }
    }

    pub fn push_event(&mut self, e: Event) {
        self.record_through(e.time);
        self.replay.event(e);
    }

    pub fn finish(self) -> GridSamples {
        self.finish_at(f64::INFINITY)
    }

    /// Stops the grid at `end`, for runs cut short by the event cap.
    pub fn finish_at(mut self, end: f64) -> GridSamples {
        self.record_through(end);
        let series = |values| SampledSeries {
            t0: 0.0,
            dt: self.dt,
            values,
        };
        GridSamples {
            lambda: series(self.lambda),
            h: series(self.h),
            z: series(self.z),
        }
    }
}

pub fn sample_components(e: &EventStream, p: &ZHawkesParams, dt: f64) -> Result<GridSamples> {
    let mut sampler = GridSampler::new(p, dt, e.horizon)?;
    for ev in e.events() {
        sampler.push_event(ev);
    }
    Ok(sampler.finish())
}

/// Intensity on the grid `k·dt` over `[0, horizon]`.
pub fn sample_intensity(e: &EventStream, p: &ZHawkesParams, dt: f64) -> Result<SampledSeries> {
    Ok(sample_components(e, p, dt)?.lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(baseline: f64, n_h: f64, beta: f64, n_z: f64, omega: f64) -> ZHawkesParams {
        ZHawkesParams::new(baseline, n_h, beta, n_z, omega, 1.0).unwrap()
    }

    #[test]
    fn decay_examples() {
        let p = params(0.5, 0.2, 1.0, 1.0, 0.5);
        let s = ProcessState {
            h: 1.0,
            z: 2.0,
            t: 3.0,
        };
        assert_eq!(decay_state(&s, 0.0, &p), s);
        let d = decay_state(&s, std::f64::consts::LN_2, &p);
        assert_relative_eq!(d.h, 0.5, max_relative = 1e-15);
        assert_relative_eq!(d.z, 2.0 * 2f64.powf(-0.5), max_relative = 1e-15);
        let far = decay_state(&s, 1e6, &p);
        assert_eq!((far.h, far.z), (0.0, 0.0));
        assert_eq!(far.intensity(&p), p.baseline);
        assert!(d.intensity(&p) <= s.intensity(&p));
    }

    #[test]
    fn event_jumps() {
        let p = params(0.5, 0.0, 1.0, 2.0, 0.03);
        let s = apply_event(&ProcessState::empty(), Sign::Up, &p);
        assert_relative_eq!(s.z, 0.346_410_161_513_775_4, max_relative = 1e-15);
        assert_relative_eq!(s.intensity(&p) - p.baseline, 0.12, max_relative = 1e-14);

        let p = params(0.5, 0.2, 1.0, 2.0, 0.03);
        let s = apply_event(
            &ProcessState {
                h: 0.3,
                z: 0.7,
                t: 1.0,
            },
            Sign::Down,
            &p,
        );
        assert_relative_eq!(s.h, 0.5, max_relative = 1e-15);
        assert_eq!(s.z, 0.7 - p.zumbach_amplitude());
        assert_eq!(s.t, 1.0);

        let start = ProcessState {
            h: 0.0,
            z: 0.25,
            t: 0.0,
        };
        let back = apply_event(&apply_event(&start, Sign::Up, &p), Sign::Down, &p);
        assert_eq!(back.z, start.z);
    }

    #[test]
    fn sign_helpers() {
        assert_eq!(Sign::from_i8(1), Some(Sign::Up));
        assert_eq!(Sign::from_i8(-1), Some(Sign::Down));
        assert_eq!(Sign::from_i8(0), None);
        assert_eq!(Sign::Up.flipped().as_i8(), -1);
    }

    #[test]
    fn thinning_is_deterministic_and_well_formed() {
        let p = params(0.5, 0.3, 1.0, 0.6, 0.1);
        let a = simulate_thinning(&p, 2_000.0, 7).unwrap();
        let b = simulate_thinning(&p, 2_000.0, 7).unwrap();
        let c = simulate_thinning(&p, 2_000.0, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.times, c.times);
        assert!(!a.is_empty());
        a.validate().unwrap();
        assert!(!a.truncated);
    }

    #[test]
    fn poisson_count_in_range() {
        let p = params(0.5, 0.0, 1.0, 0.0, 0.03);
        let e = simulate_thinning(&p, 1e4, 1).unwrap();
        let sd = 5000f64.sqrt();
        assert!(
            (e.len() as f64 - 5000.0).abs() < 3.0 * sd,
            "count {}",
            e.len()
        );
    }

    #[test]
    fn event_cap_truncates() {
        let p = params(0.5, 1.2, 1.0, 0.0, 0.03);
        let cfg = ThinningConfig::new(1e4, 3).with_event_cap(5_000);
        let e = simulate_thinning_capped(&p, &cfg).unwrap();
        assert!(e.truncated);
        assert_eq!(e.len(), 5_000);
        // The truncated stream is a prefix of any longer-capped run.
        let longer = simulate_thinning_capped(&p, &cfg.with_event_cap(6_000)).unwrap();
        assert_eq!(&longer.times[..5_000], &e.times[..]);
    }

    #[test]
    fn callback_sees_pre_event_state() {
        let p = params(0.5, 0.4, 2.0, 1.2, 0.2);
        let cfg = ThinningConfig::new(500.0, 11);
        let mut seen = Vec::new();
        simulate_thinning_with(&p, &cfg, |e, s| seen.push((e, s.intensity(&p)))).unwrap();
        let stream = simulate_thinning_capped(&p, &cfg).unwrap();
        let times: Vec<f64> = stream.times.clone();
        let replayed = replay_intensity_at(&stream, &p, &times);
        assert_eq!(seen.len(), stream.len());
        for ((_, sim), rep) in seen.iter().zip(replayed) {
            assert_relative_eq!(*sim, rep, max_relative = 1e-9);
        }
    }

    #[test]
    fn empty_stream_samples_baseline() {
        let p = params(0.5, 0.2, 1.0, 2.0, 0.03);
        let e = EventStream::empty(p, 10.0, 0);
        let s = sample_intensity(&e, &p, 0.5).unwrap();
        assert_eq!(s.len(), 21);
        assert!(s.values.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn single_event_closed_form() {
        let p = params(0.5, 0.0, 1.0, 2.0, 0.03);
        let mut e = EventStream::empty(p, 100.0, 0);
        e.push(Event {
            time: 1.0,
            sign: Sign::Down,
        });
        let s = sample_intensity(&e, &p, 0.25).unwrap();
        let g2 = p.zumbach_amplitude().powi(2);
        for (i, &v) in s.values.iter().enumerate() {
            let t = s.time(i);
            let expected = if t <= 1.0 {
                0.5
            } else {
                0.5 + g2 * (-2.0 * 0.03 * (t - 1.0)).exp()
            };
            assert_relative_eq!(v, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn sampled_series_after() {
        let s = SampledSeries {
            t0: 0.0,
            dt: 0.5,
            values: (0..10).map(f64::from).collect(),
        };
        let tail = s.after(2.0);
        assert_eq!(tail.t0, 2.0);
        assert_eq!(tail.values[0], 4.0);
        assert_eq!(s.after(100.0).len(), 0);
        assert_eq!(s.after(-1.0).len(), 10);
    }

    #[test]
    fn grid_sampler_rejects_bad_dt() {
        let p = params(0.5, 0.0, 1.0, 0.0, 1.0);
        assert!(GridSampler::new(&p, 0.0, 1.0).is_err());
        assert!(GridSampler::new(&p, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn grid_sampler_stops_at_truncation() {
        let p = params(0.5, 1.2, 1.0, 0.0, 1.0);
        let cfg = ThinningConfig::new(1_000.0, 3).with_event_cap(500);
        let mut sampler = GridSampler::new(&p, 0.5, cfg.horizon).unwrap();
        let run = simulate_thinning_with(&p, &cfg, |e, _| sampler.push_event(e)).unwrap();
        assert!(run.truncated);
        let g = sampler.finish_at(run.end_time);
        assert_eq!(g.lambda.len(), (run.end_time / 0.5).floor() as usize + 1);
    }

    #[test]
    fn invalid_horizon() {
        let p = params(0.5, 0.0, 1.0, 0.0, 1.0);
        assert!(simulate_thinning(&p, 0.0, 1).is_err());
        assert!(simulate_thinning(&p, f64::INFINITY, 1).is_err());
    }
}
