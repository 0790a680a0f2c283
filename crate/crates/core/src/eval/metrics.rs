use serde::{Deserialize, Serialize};

/// Length of the longest common subsequence of `result` and `truth`.
///
/// A matched edge counts as correct only when it appears in the same order
/// as in the true route, so the count never exceeds either length.
pub fn correct_link_count<S: AsRef<str>, T: AsRef<str>>(result: &[S], truth: &[T]) -> usize {
    if result.is_empty() || truth.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; truth.len() + 1];
    let mut cur = vec![0usize; truth.len() + 1];
    for r in result {
        for (j, t) in truth.iter().enumerate() {
            cur[j + 1] = if r.as_ref() == t.as_ref() {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[truth.len()]
}

/// Outcome of one matching run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub correct_links: usize,
    pub total_truth_links: usize,
    pub input_points: usize,
    /// Seconds.
    pub matching_wall_time: f64,
    /// Microseconds per input point.
    pub per_point_time: f64,
}

impl RunMetrics {
    pub fn new(
        correct_links: usize,
        total_truth_links: usize,
        input_points: usize,
        matching_wall_time: f64,
    ) -> Self {
        let per_point_time = if input_points == 0 {
            0.0
        } else {
            matching_wall_time * 1e6 / input_points as f64
        };
        RunMetrics {
            correct_links,
            total_truth_links,
            input_points,
            matching_wall_time,
            per_point_time,
        }
    }
}

/// Raw versus reduced run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub raw: RunMetrics,
    pub reduced: RunMetrics,
    /// Share of input points removed by the reduction.
    pub volume_reduction_pct: f64,
    /// Drop in matching wall time, relative to the raw run.
    pub time_reduction_pct: f64,
    /// Change in per-point matching time, relative to the reduced run.
    pub speed_gain_pct: f64,
    /// Reduced minus raw correct links.
    pub accuracy_delta: i64,
}

fn pct(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        100.0 * num / den
    }
}

impl ComparisonReport {
    pub fn new(raw: RunMetrics, reduced: RunMetrics) -> Self {
        ComparisonReport {
            volume_reduction_pct: pct(
                raw.input_points as f64 - reduced.input_points as f64,
                raw.input_points as f64,
            ),
            time_reduction_pct: pct(
                raw.matching_wall_time - reduced.matching_wall_time,
                raw.matching_wall_time,
            ),
            speed_gain_pct: pct(
                reduced.per_point_time - raw.per_point_time,
                reduced.per_point_time,
            ),
            accuracy_delta: reduced.correct_links as i64 - raw.correct_links as i64,
            raw,
            reduced,
        }
    }

    /// Recomputes every derived field from the raw counts and times.
    pub fn recomputed(&self) -> Self {
        let raw = RunMetrics::new(
            self.raw.correct_links,
            self.raw.total_truth_links,
            self.raw.input_points,
            self.raw.matching_wall_time,
        );
        let reduced = RunMetrics::new(
            self.reduced.correct_links,
            self.reduced.total_truth_links,
            self.reduced.input_points,
            self.reduced.matching_wall_time,
        );
        ComparisonReport::new(raw, reduced)
    }

    /// Whether the derived fields agree with the counts to `rel_tol`.
    pub fn is_consistent(&self, rel_tol: f64) -> bool {
        let r = self.recomputed();
        let close = |a: f64, b: f64| (a - b).abs() <= rel_tol * a.abs().max(b.abs()).max(1.0);
        self.raw.correct_links <= self.raw.total_truth_links
            && self.reduced.correct_links <= self.reduced.total_truth_links
            && self.accuracy_delta == r.accuracy_delta
            && close(self.volume_reduction_pct, r.volume_reduction_pct)
            && close(self.time_reduction_pct, r.time_reduction_pct)
            && close(self.speed_gain_pct, r.speed_gain_pct)
            && close(self.raw.per_point_time, r.raw.per_point_time)
            && close(self.reduced.per_point_time, r.reduced.per_point_time)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_lcs(a: &[&str], b: &[&str]) -> usize {
        // longest subsequence of `a`, by subset enumeration, that is also one of `b`
        let n = a.len();
        let mut best = 0;
        for mask in 0u32..(1 << n) {
            let sub: Vec<&str> = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| a[i])
                .collect();
            let mut it = b.iter();
            if sub.iter().all(|s| it.any(|t| t == s)) {
                best = best.max(sub.len());
            }
        }
        best
    }

    #[test]
    fn lcs_examples() {
        let x = ["a", "b", "c", "d", "e"];
        assert_eq!(correct_link_count(&x, &x), 5);
        assert_eq!(correct_link_count(&["a", "b"], &["c", "d"]), 0);
        let truth = ["a", "b", "c", "d"];
        let result = ["a", "x", "b", "d"];
        assert_eq!(brute_lcs(&result, &truth), 3);
        assert_eq!(correct_link_count(&result, &truth), 3);
        assert_eq!(correct_link_count::<&str, &str>(&[], &truth), 0);
    }

    #[test]
    fn lcs_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let alphabet = ["a", "b", "c", "d"];
        for _ in 0..300 {
            let a: Vec<&str> = (0..rng.gen_range(0..9))
                .map(|_| alphabet[rng.gen_range(0..4)])
                .collect();
            let b: Vec<&str> = (0..rng.gen_range(0..9))
                .map(|_| alphabet[rng.gen_range(0..4)])
                .collect();
            let got = correct_link_count(&a, &b);
            assert_eq!(got, brute_lcs(&a, &b));
            assert!(got <= a.len().min(b.len()));
        }
    }

    #[test]
    fn report_arithmetic() {
        let raw = RunMetrics::new(10, 12, 1000, 0.5);
        let red = RunMetrics::new(10, 12, 750, 0.45);
        let r = ComparisonReport::new(raw, red);
        assert!((r.volume_reduction_pct - 25.0).abs() < 1e-12);
        assert!((r.time_reduction_pct - 10.0).abs() < 1e-12);
        assert!((raw.per_point_time - 500.0).abs() < 1e-9);
        assert!((red.per_point_time - 600.0).abs() < 1e-9);
        assert!((r.speed_gain_pct - 100.0 * 100.0 / 600.0).abs() < 1e-9);
        assert_eq!(r.accuracy_delta, 0);
        assert!(r.is_consistent(1e-9));
    }

    #[test]
    fn published_ratios_give_about_twenty_percent() {
        let raw = RunMetrics::new(0, 0, 10_000, 1.0);
        let red = RunMetrics::new(0, 0, 7_261, 0.911);
        let r = ComparisonReport::new(raw, red);
        assert!(
            (r.speed_gain_pct - 20.30).abs() < 0.01,
            "{}",
            r.speed_gain_pct
        );
    }

    #[test]
    fn zero_denominators() {
        let z = RunMetrics::new(0, 0, 0, 0.0);
        let r = ComparisonReport::new(z, z);
        assert_eq!(
            (
                r.volume_reduction_pct,
                r.time_reduction_pct,
                r.speed_gain_pct
            ),
            (0.0, 0.0, 0.0)
        );
    }
}
