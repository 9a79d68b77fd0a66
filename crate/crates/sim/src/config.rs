//! Run configuration. The defaults reproduce the headline experiment:
//! 10 to 60 ms hops, 50 to 200 ms servers, a three-cell mark spaced 100 ms.

/// How the detector decides that a circuit was marked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorMode {
    /// Flag when `min_cluster` early cells arrive with every consecutive
    /// gap at most `spacing_us + tolerance_us`. Tolerant of jitter, and of
    /// injections faster than the tuned spacing.
    Cluster,
    /// Flag only gaps inside `spacing_us` plus or minus `tolerance_us`.
    /// Stricter, which also makes it easier to evade.
    Band,
}

/// Tuning of the flagging detector. It watches cells arriving at the
/// client between circuit creation and stream establishment, blind to
/// cell kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Injection spacing the detector is tuned for, in microseconds.
    pub spacing_us: u64,
    /// Slack on top of (or around, in band mode) the tuned spacing.
    pub tolerance_us: u64,
    /// Cells that must arrive back to back before a circuit is flagged.
    pub min_cluster: usize,
    pub mode: DetectorMode,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            spacing_us: 100_000,
            tolerance_us: 150_000,
            min_cluster: 2,
            mode: DetectorMode::Cluster,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Circuits to run. Each gets its own latencies, exit and lifecycle.
    pub circuits: usize,
    /// Fraction of circuits built through a marking exit.
    pub malicious_fraction: f64,
    /// Load the defense bundle and run the conservative relay policy.
    pub defense: bool,
    /// Seed for every random draw of the run.
    pub seed: u64,
    /// One-way per-link latency range, microseconds. Sampled once per
    /// circuit per link and reused for every cell crossing that link.
    pub hop_latency_us: (u64, u64),
    /// Server turnaround range, microseconds.
    pub server_delay_us: (u64, u64),
    /// Client think time between CREATED and BEGIN, microseconds.
    pub client_think_us: (u64, u64),
    /// Request/response exchanges once the stream is up.
    pub data_rounds: u32,
    /// Junk cells a marking exit injects per circuit.
    pub dropmark_cells: u32,
    /// Spacing between consecutive junk cells, microseconds.
    pub dropmark_spacing_us: u64,
    /// Lead time from CREATE reaching the exit to the first junk cell.
    pub dropmark_lead_us: u64,
    /// Hard per-circuit cap on padding emitted by the middle relay.
    pub padding_cap: u64,
    pub detector: DetectorConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            circuits: 2_000,
            malicious_fraction: 0.1,
            defense: false,
            seed: 1,
            hop_latency_us: (10_000, 60_000),
            server_delay_us: (50_000, 200_000),
            client_think_us: (100_000, 300_000),
            data_rounds: 2,
            dropmark_cells: 3,
            dropmark_spacing_us: 100_000,
            dropmark_lead_us: 10_000,
            padding_cap: 350,
            detector: DetectorConfig::default(),
        }
    }
}
