/// Continuous, nondecreasing, piecewise-linear mass profile `s ↦ m_x(s)`.
///
/// Each vertex of mass `w` at distance `d` with cell radius `r` contributes a
/// linear ramp from 0 at `max(0, d − r)` to `w` at `d + r`.
#[derive(Clone, Debug)]
pub struct MassProfile {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl MassProfile {
    /// `items` holds `(distance, mass, cell radius)` triples.
    pub fn new(items: impl IntoIterator<Item = (f64, f64, f64)>) -> MassProfile {
        let mut events: Vec<(f64, f64)> = Vec::new();
        for (d, w, r) in items {
            if w <= 0.0 {
                continue;
            }
            let a = (d - r).max(0.0);
            let b = d + r;
            let k = w / (b - a);
            events.push((a, k));
            events.push((b, -k));
        }
        events.sort_unstable_by(|x, y| x.0.total_cmp(&y.0));
        let mut knots = Vec::with_capacity(events.len());
        let mut values = Vec::with_capacity(events.len());
        let mut slopes = Vec::with_capacity(events.len());
        let mut value = 0.0;
        let mut slope = 0.0;
        let mut i = 0;
        while i < events.len() {
            let p = events[i].0;
            if let Some(&last) = knots.last() {
                value += slope * (p - last);
            }
            while i < events.len() && events[i].0 == p {
                slope += events[i].1;
                i += 1;
            }
            if i == events.len() {
                slope = 0.0;
            }
            knots.push(p);
            values.push(value);
            slopes.push(slope.max(0.0));
        }
        MassProfile { knots, values, slopes }
    }

    pub fn eval(&self, s: f64) -> f64 {
        let idx = self.knots.partition_point(|&k| k <= s);
        if idx == 0 {
            return 0.0;
        }
        let j = idx - 1;
        self.values[j] + self.slopes[j] * (s - self.knots[j])
    }

    pub fn total(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Largest distance at which the profile still changes.
    pub fn support(&self) -> f64 {
        self.knots.last().copied().unwrap_or(0.0)
    }

    /// Smallest `s ∈ [0, hi]` with `m(s) + m(r0·s) = w`, assuming the profile is
    /// exact up to `r0·hi`. `None` if no such root exists below `hi`.
    pub fn balance_root(&self, r0: f64, w: f64, hi: f64) -> Option<f64> {
        let g = |s: f64| self.eval(s) + self.eval(r0 * s) - w;
        if g(hi) < 0.0 {
            return None;
        }
        let (mut lo, mut up) = (0.0, hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + up);
            if mid <= lo || mid >= up {
                break;
            }
            if g(mid) >= 0.0 {
                up = mid;
            } else {
                lo = mid;
            }
        }
        // g is linear on the final bracket unless a knot sits inside it.
        let (gl, gu) = (g(lo), g(up));
        let s = if gu > gl { lo + (up - lo) * (-gl) / (gu - gl) } else { up };
        Some(s.clamp(lo, up))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_ramp() {
        let p = MassProfile::new([(1.0, 2.0, 0.5)]);
        assert_eq!(p.eval(0.4), 0.0);
        assert!((p.eval(1.0) - 1.0).abs() < 1e-15);
        assert!((p.eval(2.0) - 2.0).abs() < 1e-15);
        let q = MassProfile::new([(0.0, 1.0, 0.1)]);
        assert_eq!(q.eval(0.0), 0.0);
        assert!((q.eval(0.05) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn balance_of_uniform_line() {
        // Many equal ramps approximate m(s) = s on [0, 1].
        let n = 1000;
        let p = MassProfile::new((0..n).map(|i| ((i as f64 + 0.5) / n as f64, 1.0 / n as f64, 0.5 / n as f64)));
        // s + 6s = 1 while 6s ≤ 1.
        let s = p.balance_root(6.0, 1.0, 1.0).unwrap();
        assert!((s - 1.0 / 7.0).abs() < 1e-9);
        let gap = p.eval(s) + p.eval(6.0 * s) - 1.0;
        assert!(gap.abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn profile_is_monotone_continuous(items in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.001f64..0.1), 1..60),
                                          a in 0.0f64..1.2, b in 0.0f64..1.2) {
            let p = MassProfile::new(items.clone());
            let total: f64 = items.iter().map(|t| t.1).sum();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(p.eval(lo) <= p.eval(hi) + 1e-12);
            prop_assert!((p.eval(1.2) - total).abs() < 1e-9);
            prop_assert!((p.eval(lo + 1e-10) - p.eval(lo)).abs() < 1e-5);
            let s = p.balance_root(6.0, total, 1.2).unwrap();
            prop_assert!((p.eval(s) + p.eval(6.0 * s) - total).abs() < 1e-10 * (1.0 + total));
        }
    }
}
