//! The flagging detector. Kind-blind by construction: it gets the arrival
//! times of whatever reached the client before its stream opened, nothing
//! else, and looks for the injection rhythm it was tuned for.

use crate::config::{DetectorConfig, DetectorMode};

/// Whether a sorted list of pre-stream arrival times looks marked.
pub fn flagged(times: &[u64], cfg: &DetectorConfig) -> bool {
    if cfg.min_cluster <= 1 {
        return !times.is_empty();
    }
    let (lo, hi) = match cfg.mode {
        DetectorMode::Cluster => (0, cfg.spacing_us + cfg.tolerance_us),
        DetectorMode::Band => (
            cfg.spacing_us.saturating_sub(cfg.tolerance_us),
            cfg.spacing_us + cfg.tolerance_us,
        ),
    };
    let mut run = 1;
    for pair in times.windows(2) {
        let gap = pair[1] - pair[0];
        if gap >= lo && gap <= hi {
            run += 1;
            if run >= cfg.min_cluster {
                return true;
            }
        } else {
            run = 1;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::flagged;
    use crate::config::{DetectorConfig, DetectorMode};

    #[test]
    fn cluster_mode_accepts_anything_up_to_the_tolerance() {
        let cfg = DetectorConfig::default();
        assert!(flagged(&[0, 100_000, 200_000], &cfg));
        assert!(flagged(&[0, 0, 0], &cfg), "instant bursts count");
        assert!(flagged(&[0, 250_000], &cfg), "boundary gap counts");
        assert!(!flagged(&[0, 250_001], &cfg));
        assert!(!flagged(&[0], &cfg), "a lone cell is not a cluster");
        assert!(!flagged(&[], &cfg));
    }

    #[test]
    fn band_mode_rejects_gaps_outside_the_band() {
        let cfg = DetectorConfig {
            tolerance_us: 30_000,
            mode: DetectorMode::Band,
            ..DetectorConfig::default()
        };
        assert!(flagged(&[0, 100_000], &cfg));
        assert!(flagged(&[0, 70_000], &cfg));
        assert!(!flagged(&[0, 0, 0], &cfg), "bursts fall below the band");
        assert!(!flagged(&[0, 131_000], &cfg));
    }

    #[test]
    fn the_cluster_must_be_consecutive() {
        let cfg = DetectorConfig {
            min_cluster: 3,
            ..DetectorConfig::default()
        };
        assert!(!flagged(&[0, 100_000, 600_000, 700_000], &cfg));
        assert!(flagged(&[0, 100_000, 200_000, 900_000], &cfg));
    }
}
