use rand::RngExt;

/// Sampling distribution over non-negative integers. Machines use the same
/// type for padding budgets (cell counts) and inter-arrival delays
/// (microseconds); bounds are inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dist {
    Fixed(u64),
    Uniform { lo: u64, hi: u64 },
}

impl Dist {
    pub fn sample<R: RngExt + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            Dist::Fixed(v) => v,
            Dist::Uniform { lo, hi } => rng.random_range(lo..=hi),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Dist::Fixed(v) => v as f64,
            Dist::Uniform { lo, hi } => (lo + hi) as f64 / 2.0,
        }
    }

    /// Smallest and largest value `sample` can return.
    pub fn range(&self) -> (u64, u64) {
        match *self {
            Dist::Fixed(v) => (v, v),
            Dist::Uniform { lo, hi } => (lo, hi),
        }
    }
}
