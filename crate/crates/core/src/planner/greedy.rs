//! Closed-form single-user, single-deadline plan.

/// Fills the frames before `deadline_frames` in descending order of rate
/// (lowest index first among equal rates) until `bits` are delivered.
///
/// Returns one fraction per entry of `rates`, zero past the deadline, or
/// `None` when the frames before the deadline cannot carry `bits`.
pub fn greedy_single_user(rates: &[f64], deadline_frames: usize, bits: f64, frame_duration: f64) -> Option<Vec<f64>> {
    let mut s = vec![0.0; rates.len()];
    let deadline = deadline_frames.min(rates.len());
    let mut order: Vec<usize> = (0..deadline).collect();
    order.sort_by(|&a, &b| rates[b].total_cmp(&rates[a]).then(a.cmp(&b)));
    let mut remaining = bits;
    for j in order {
        if remaining <= 0.0 {
            break;
        }
        let per_frame = rates[j] * frame_duration;
        if per_frame <= 0.0 {
            continue;
        }
        let f = (remaining / per_frame).min(1.0);
        s[j] = f;
        remaining -= f * per_frame;
    }
    // Tolerate round-off in the last subtraction.
    if remaining > 1e-9 * bits.max(1.0) {
        None
    } else {
        Some(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_example() {
        let s = greedy_single_user(&[2e6, 1e6, 3e6], 3, 4e6, 1.0).unwrap();
        assert_eq!(s, vec![0.5, 0.0, 1.0]);
    }

    #[test]
    fn zero_bits_zero_plan() {
        assert_eq!(greedy_single_user(&[1.0, 2.0], 2, 0.0, 1.0).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn past_deadline_is_zero() {
        let s = greedy_single_user(&[1.0, 1.0, 100.0], 2, 1.5, 1.0).unwrap();
        assert_eq!(s, vec![1.0, 0.5, 0.0]);
    }

    #[test]
    fn infeasible_when_too_many_bits() {
        assert!(greedy_single_user(&[1.0, 1.0], 2, 2.5, 1.0).is_none());
    }

    #[test]
    fn ties_fill_lowest_index_first() {
        let s = greedy_single_user(&[1.0, 1.0, 1.0], 3, 1.5, 1.0).unwrap();
        assert_eq!(s, vec![1.0, 0.5, 0.0]);
    }
}
