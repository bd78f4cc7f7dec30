//! Time source injected by the host, so the core stays free of `std`.

/// Monotonic clock in milliseconds since an arbitrary origin.
pub trait Clock {
    fn now_ms(&self) -> u64;
}

/// Clock that never advances. Deadlines against it never expire.
#[derive(Clone, Copy, Debug, Default)]
pub struct FrozenClock;

impl Clock for FrozenClock {
    fn now_ms(&self) -> u64 {
        0
    }
}

/// Absolute deadline on some clock.
#[derive(Clone, Copy)]
pub struct Deadline<'a> {
    clock: &'a dyn Clock,
    at_ms: Option<u64>,
}

impl<'a> Deadline<'a> {
    pub fn new(clock: &'a dyn Clock, budget_ms: Option<u64>) -> Self {
        let at_ms = budget_ms.map(|b| clock.now_ms().saturating_add(b));
        Deadline { clock, at_ms }
    }

    pub fn never() -> Deadline<'static> {
        Deadline { clock: &FrozenClock, at_ms: None }
    }

    pub fn expired(&self) -> bool {
        matches!(self.at_ms, Some(t) if self.clock.now_ms() >= t)
    }

    pub fn now_ms(&self) -> u64 {
        self.clock.now_ms()
    }
}
