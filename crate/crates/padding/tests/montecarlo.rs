//! Large-sample distribution checks on machine scheduling behavior, driven
//! through the public event interface rather than the distributions
//! directly, so regressions in entry/arming logic show up here.

use fan_padding::MachineEvent::*;
use fan_padding::{dropmark_defense_machine, Action, MachineInstance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

const SAMPLES: usize = 100_000;

#[test]
fn burst_lengths_are_uniform_3_to_9() {
    let spec = Arc::new(dropmark_defense_machine());
    let mut rng = ChaCha8Rng::seed_from_u64(0xb125);
    let mut sum = 0u64;
    let mut histogram = [0u64; 10];
    for _ in 0..SAMPLES {
        let mut m = MachineInstance::new(spec.clone());
        m.on_event(Activate, &mut rng);
        let n = m.remaining();
        assert!((3..=9).contains(&n), "burst length {n} escaped the range");
        sum += n;
        histogram[n as usize] += 1;
    }
    let mean = sum as f64 / SAMPLES as f64;
    assert!(
        (mean - 6.0).abs() < 0.05,
        "burst mean {mean} drifted from 6.0"
    );
    // Every admissible length must actually occur.
    for n in 3..=9 {
        assert!(histogram[n] > 0, "length {n} never sampled");
    }
}

#[test]
fn gap_delays_stay_inside_1_to_80_ms() {
    let spec = Arc::new(dropmark_defense_machine());
    let mut rng = ChaCha8Rng::seed_from_u64(0x9a9);
    let mut sum = 0u64;
    let mut lo = u64::MAX;
    let mut hi = 0u64;
    for _ in 0..SAMPLES {
        let mut m = MachineInstance::new(spec.clone());
        m.on_event(Activate, &mut rng);
        // Drain the burst; the transition into `gap` arms the pause timer.
        let mut delay = None;
        while delay.is_none() {
            for act in m.on_event(PaddingSent, &mut rng) {
                if m.state_name() == "gap" {
                    if let Action::SchedulePadding { delay_us } = act {
                        delay = Some(delay_us);
                    }
                }
            }
        }
        let d = delay.unwrap();
        assert!(
            (1_000..=80_000).contains(&d),
            "gap delay {d}us escaped [1ms, 80ms]"
        );
        sum += d;
        lo = lo.min(d);
        hi = hi.max(d);
    }
    let mean = sum as f64 / SAMPLES as f64;
    assert!(
        (mean - 40_500.0).abs() < 400.0,
        "gap delay mean {mean}us drifted from 40.5ms"
    );
    // The sampler must actually sweep the band, not sit in the middle.
    assert!(lo < 2_000, "smallest observed gap {lo}us");
    assert!(hi > 79_000, "largest observed gap {hi}us");
}

#[test]
fn intra_burst_spacing_is_zero() {
    let spec = Arc::new(dropmark_defense_machine());
    let mut rng = ChaCha8Rng::seed_from_u64(0x5bac);
    for _ in 0..1_000 {
        let mut m = MachineInstance::new(spec.clone());
        let acts = m.on_event(Activate, &mut rng);
        assert_eq!(acts, vec![Action::SchedulePadding { delay_us: 0 }]);
        while m.state_name() == "burst" && m.remaining() > 1 {
            let acts = m.on_event(PaddingSent, &mut rng);
            assert_eq!(acts, vec![Action::SchedulePadding { delay_us: 0 }]);
        }
    }
}
