//! What a flag is actually worth to the adversary.

/// Posterior probability that a flagged circuit is malicious, for a
/// detector with the given true and false positive rates over a population
/// where `prior` is the malicious fraction. A detector that never fires
/// yields 0 by convention.
pub fn posterior(prior: f64, tpr: f64, fpr: f64) -> f64 {
    let hit = prior * tpr;
    let noise = (1.0 - prior) * fpr;
    if hit + noise == 0.0 {
        return 0.0;
    }
    hit / (hit + noise)
}

#[cfg(test)]
mod tests {
    use super::posterior;

    #[test]
    fn matches_the_undefended_operating_point() {
        // Near-perfect recall and sub-percent noise make a flag strong
        // evidence even at a 1% prior.
        let p = posterior(0.01, 0.999972, 0.007713);
        assert!((p - 0.567).abs() < 0.001, "posterior {p}");
    }

    #[test]
    fn a_detector_that_flags_everyone_teaches_nothing() {
        // With the defense active the false positive rate climbs to the
        // true positive rate, so the posterior collapses to the prior.
        for prior in [0.01, 0.05, 0.1, 0.2, 0.5] {
            let p = posterior(prior, 0.999972, 0.999975);
            assert!((p - prior).abs() < 1e-4, "prior {prior} posterior {p}");
        }
    }

    #[test]
    fn edge_cases_stay_in_range() {
        assert_eq!(posterior(0.1, 0.0, 0.0), 0.0);
        assert_eq!(posterior(0.1, 1.0, 0.0), 1.0);
        let p = posterior(0.5, 0.9, 0.1);
        assert!(p > 0.5 && p < 1.0);
    }
}
