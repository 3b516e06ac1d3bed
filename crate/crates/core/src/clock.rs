use std::time::Instant;

/// Default logical time charged per unit of router work (one node expansion
/// or one occupancy probe).
pub const DEFAULT_SECONDS_PER_UNIT: f64 = 1e-6;

/// Source of per-request execution time.
///
/// `Logical` converts counted work into seconds, so results are bit-for-bit
/// reproducible. `Wall` reads the real monotonic clock.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Clock {
    Logical { seconds_per_unit: f64 },
    Wall,
}

impl Default for Clock {
    fn default() -> Self {
        Clock::Logical {
            seconds_per_unit: DEFAULT_SECONDS_PER_UNIT,
        }
    }
}

impl Clock {
    pub fn start(&self) -> Stopwatch {
        Stopwatch {
            clock: *self,
            started: matches!(self, Clock::Wall).then(Instant::now),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Stopwatch {
    clock: Clock,
    started: Option<Instant>,
}

impl Stopwatch {
    /// Seconds since `start`, given the work units spent in between.
    pub fn elapsed(&self, work_units: u64) -> f64 {
        match (self.clock, self.started) {
            (Clock::Logical { seconds_per_unit }, _) => work_units as f64 * seconds_per_unit,
            (Clock::Wall, Some(t)) => t.elapsed().as_secs_f64(),
            (Clock::Wall, None) => unreachable!("wall stopwatch always has a start instant"),
        }
    }
}
