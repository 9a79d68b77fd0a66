//! Per-circuit outcomes and run-level summaries.

/// One circuit's outcome; one CSV row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitRecord {
    pub circuit_id: usize,
    pub malicious_exit: bool,
    pub flagged: bool,
    /// Padding cells that reached the client.
    pub padding_cells: u64,
    /// Span between the first and last padding arrival, in milliseconds.
    pub cover_ms: u64,
    /// Every cell the client received over the circuit's lifetime.
    pub cells_total: u64,
}

/// Aggregates over one run.
#[derive(Debug, Clone)]
pub struct SimReport {
    pub records: Vec<CircuitRecord>,
    pub malicious: usize,
    pub benign: usize,
    /// Flag rate over circuits with a marking exit.
    pub tpr: f64,
    /// Flag rate over benign circuits.
    pub fpr: f64,
    /// Mean cover span over circuits that saw at least two padding cells.
    pub mean_cover_ms: f64,
    pub max_padding_cells: u64,
    /// Padding emissions swallowed by the per-circuit cap.
    pub padding_suppressed: u64,
    /// Non-padding cells that reached a client before its stream opened.
    pub clean_violations: u64,
    /// Inbound cells the middle relay's conservative policy refused to
    /// forward while the circuit was clean.
    pub policy_suppressed: u64,
    /// Signal cells that slipped past the middle relay to the exit.
    pub signals_leaked: u64,
    /// Times the relay's native padding emitter ran; zero whenever the
    /// bundle's replace attachment is loaded.
    pub native_padding_runs: u64,
    /// Plugin executions that trapped.
    pub plugin_faults: usize,
}

/// Renders records as CSV. The byte string is stable for a given run, so
/// equal seeds diff clean.
pub fn to_csv(records: &[CircuitRecord]) -> String {
    let mut out = String::from("circuit_id,malicious_exit,flagged,padding_cells,cover_ms,cells_total\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.circuit_id, r.malicious_exit, r.flagged, r.padding_cells, r.cover_ms, r.cells_total
        ));
    }
    out
}
