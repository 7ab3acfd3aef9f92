//! Event-calendar discrete-event kernel.
//!
//! The kernel owns the simulation clock and a future-event list ordered by
//! `(fire_time, insertion sequence)`. Handles returned from [`Kernel::schedule`]
//! can be cancelled until the event fires. Randomness is supplied through named
//! [`RngStream`]s derived from a master seed, so a new stream never perturbs the
//! draws of an existing one.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Simulated minutes since run start.
pub type Minutes = f64;

/// Identifier of the agent an event is addressed to.
pub type AgentId = u64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("schedule in past: requested t={at} but clock is at t={now}")]
    ScheduleInPast { at: Minutes, now: Minutes },
    #[error("run horizon t={t_end} precedes clock t={now}")]
    HorizonInPast { t_end: Minutes, now: Minutes },
    #[error("event time must be finite, got {0}")]
    NonFiniteTime(Minutes),
}

/// A dispatcher fault, annotated with where in the run it happened.
#[derive(Debug, thiserror::Error)]
#[error("dispatch of {kind} (target {target}) at t={clock:.3} failed: {source}")]
pub struct DispatchError<E: std::error::Error + 'static> {
    pub clock: Minutes,
    pub kind: String,
    pub target: AgentId,
    #[source]
    pub source: E,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError<E: std::error::Error + 'static> {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Dispatch(DispatchError<E>),
}

/// Monotone simulation clock.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimClock {
    now: Minutes,
}

impl SimClock {
    pub fn now(&self) -> Minutes {
        self.now
    }

    fn advance_to(&mut self, t: Minutes) {
        debug_assert!(
            t >= self.now,
            "clock moved backwards: {} -> {}",
            self.now,
            t
        );
        self.now = t;
    }
}

/// Total-order key of the future-event list.
#[derive(Debug, Clone, Copy)]
struct CalendarKey {
    time: Minutes,
    seq: u64,
}

impl PartialEq for CalendarKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for CalendarKey {}

impl PartialOrd for CalendarKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CalendarKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.seq.cmp(&other.seq))
    }
}

/// Token for a scheduled event. Ids are never reused within a kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHandle<K> {
    id: u64,
    fire_time: Minutes,
    kind: K,
    target: AgentId,
}

impl<K: Copy> EventHandle<K> {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn fire_time(&self) -> Minutes {
        self.fire_time
    }

    pub fn kind(&self) -> K {
        self.kind
    }

    pub fn target(&self) -> AgentId {
        self.target
    }

    fn key(&self) -> CalendarKey {
        CalendarKey {
            time: self.fire_time,
            seq: self.id,
        }
    }
}

/// An event popped from the calendar and handed to the dispatcher.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fired<K> {
    pub id: u64,
    pub time: Minutes,
    pub kind: K,
    pub target: AgentId,
}

#[derive(Debug)]
pub struct Kernel<K> {
    clock: SimClock,
    calendar: BTreeMap<CalendarKey, (K, AgentId)>,
    next_id: u64,
    dispatched: u64,
    trace: Option<Vec<Fired<K>>>,
}

impl<K> Default for Kernel<K> {
    fn default() -> Self {
        Self {
            clock: SimClock::default(),
            calendar: BTreeMap::new(),
            next_id: 0,
            dispatched: 0,
            trace: None,
        }
    }
}

impl<K: Copy + fmt::Debug> Kernel<K> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record every dispatched event. Used by determinism checks.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn now(&self) -> Minutes {
        self.clock.now()
    }

    pub fn clock(&self) -> SimClock {
        self.clock
    }

    pub fn pending(&self) -> usize {
        self.calendar.len()
    }

    /// Fire time of the earliest pending event.
    pub fn next_time(&self) -> Option<Minutes> {
        self.calendar.first_key_value().map(|(k, _)| k.time)
    }

    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    pub fn trace(&self) -> Option<&[Fired<K>]> {
        self.trace.as_deref()
    }

    pub fn take_trace(&mut self) -> Option<Vec<Fired<K>>> {
        self.trace.take()
    }

    pub fn schedule(
        &mut self,
        at: Minutes,
        kind: K,
        target: AgentId,
    ) -> Result<EventHandle<K>, KernelError> {
        if !at.is_finite() {
            return Err(KernelError::NonFiniteTime(at));
        }
        if at < self.clock.now() {
            return Err(KernelError::ScheduleInPast {
                at,
                now: self.clock.now(),
            });
        }
        let handle = EventHandle {
            id: self.next_id,
            fire_time: at,
            kind,
            target,
        };
        self.next_id += 1;
        self.calendar.insert(handle.key(), (kind, target));
        Ok(handle)
    }

    pub fn schedule_in(
        &mut self,
        delay: Minutes,
        kind: K,
        target: AgentId,
    ) -> Result<EventHandle<K>, KernelError> {
        self.schedule(self.clock.now() + delay, kind, target)
    }

    /// Returns `true` if the event was still pending and has now been removed.
    pub fn cancel(&mut self, handle: &EventHandle<K>) -> bool {
        self.calendar.remove(&handle.key()).is_some()
    }

    pub fn is_pending(&self, handle: &EventHandle<K>) -> bool {
        self.calendar.contains_key(&handle.key())
    }

    /// Pops the next event if it fires no later than `t_end`, advancing the clock.
    pub fn step(&mut self, t_end: Minutes) -> Option<Fired<K>> {
        let entry = self.calendar.first_entry()?;
        if entry.key().time > t_end {
            return None;
        }
        let (key, (kind, target)) = entry.remove_entry();
        self.clock.advance_to(key.time);
        self.dispatched += 1;
        let fired = Fired {
            id: key.seq,
            time: key.time,
            kind,
            target,
        };
        if let Some(trace) = self.trace.as_mut() {
            trace.push(fired);
        }
        Some(fired)
    }

    /// Dispatches every event with `fire_time <= t_end` in `(time, insertion)`
    /// order, then sets the clock to `t_end`.
    pub fn run_until<E, F>(
        &mut self,
        t_end: Minutes,
        mut dispatcher: F,
    ) -> Result<Minutes, RunError<E>>
    where
        E: std::error::Error + 'static,
        F: FnMut(&mut Self, Fired<K>) -> Result<(), E>,
    {
        if !t_end.is_finite() {
            return Err(KernelError::NonFiniteTime(t_end).into());
        }
        if t_end < self.clock.now() {
            return Err(KernelError::HorizonInPast {
                t_end,
                now: self.clock.now(),
            }
            .into());
        }
        while let Some(fired) = self.step(t_end) {
            dispatcher(self, fired).map_err(|source| {
                RunError::Dispatch(DispatchError {
                    clock: fired.time,
                    kind: format!("{:?}", fired.kind),
                    target: fired.target,
                    source,
                })
            })?;
        }
        self.clock.advance_to(t_end);
        Ok(t_end)
    }
}

/// Source of uniform draws in `[0, 1)`.
pub trait UniformSource {
    fn next_uniform(&mut self) -> f64;
}

/// Named, independently seeded random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    name: String,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, name: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"retail-sim/rng-stream");
        hasher.update(master_seed.to_le_bytes());
        hasher.update((name.len() as u64).to_le_bytes());
        hasher.update(name.as_bytes());
        let digest = hasher.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        Self {
            name: name.to_owned(),
            rng: ChaCha8Rng::from_seed(seed),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

impl UniformSource for RngStream {
    fn next_uniform(&mut self) -> f64 {
        self.uniform()
    }
}

/// Convenience: `rng_stream(seed, name)`.
pub fn rng_stream(master_seed: u64, name: &str) -> RngStream {
    RngStream::new(master_seed, name)
}

/// Hashes a base seed and a path of labels into a new 64-bit seed.
///
/// Each component is length-prefixed so distinct paths cannot collide by
/// concatenation.
pub fn derive_seed(base_seed: u64, path: &[&[u8]]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"retail-sim/derive-seed");
    hasher.update(base_seed.to_le_bytes());
    for part in path {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    let digest = hasher.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(word)
}
