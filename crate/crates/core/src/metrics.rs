//! Post-hoc measurements over world snapshots.

use std::collections::VecDeque;

use crate::channel::{intensity, ChannelConfig};
use crate::geometry::Vec2;
use crate::sim::RobotState;

/// Whether two robots at these positions can hear each other when both broadcast.
pub fn in_contact(a: Vec2, b: Vec2, channel: &ChannelConfig) -> bool {
    let d = a.distance(b);
    d <= channel.comm_radius && intensity(d, channel) > channel.intensity_threshold
}

/// Hop count from `origin` over the instantaneous contact graph; `None` when unreachable.
pub fn hop_distances(positions: &[Vec2], origin: usize, channel: &ChannelConfig) -> Vec<Option<usize>> {
    let mut hops = vec![None; positions.len()];
    hops[origin] = Some(0);
    let mut queue = VecDeque::from([origin]);
    while let Some(i) = queue.pop_front() {
        let next = hops[i].map(|h| h + 1);
        for j in 0..positions.len() {
            if hops[j].is_none() && in_contact(positions[i], positions[j], channel) {
                hops[j] = next;
                queue.push_back(j);
            }
        }
    }
    hops
}

/// Ranks with ties sharing their average rank (1-based).
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation; `None` when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    pearson(&ranks(x), &ranks(y))
}

/// Gradient quality of a field snapshot relative to the source `origin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientReport {
    /// Robots holding a non-zero value.
    pub aware: usize,
    pub reachable: usize,
    /// Rank correlation of hop distance against stored value over reachable robots.
    pub spearman: Option<f64>,
    /// Directly connected pairs where the robot one hop further out holds the larger value.
    pub monotonicity_violations: usize,
}

pub fn gradient_report(robots: &[RobotState], origin: usize, channel: &ChannelConfig) -> GradientReport {
    let positions: Vec<Vec2> = robots.iter().map(|r| r.position).collect();
    let hops = hop_distances(&positions, origin, channel);
    let value = |i: usize| robots[i].field.current_value;

    let (mut hx, mut vy) = (Vec::new(), Vec::new());
    for (i, h) in hops.iter().enumerate() {
        if let Some(h) = h {
            hx.push(*h as f64);
            vy.push(f64::from(value(i)));
        }
    }

    let mut violations = 0;
    for i in 0..robots.len() {
        for j in 0..robots.len() {
            let (Some(hi), Some(hj)) = (hops[i], hops[j]) else {
                continue;
            };
            if hj == hi + 1 && in_contact(positions[i], positions[j], channel) && value(j) > value(i) {
                violations += 1;
            }
        }
    }

    GradientReport {
        aware: robots.iter().filter(|r| r.field.current_value > 0).count(),
        reachable: hx.len(),
        spearman: spearman(&hx, &vy),
        monotonicity_violations: violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_of_monotone_sequences() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&x, &[10.0, 20.0, 30.0, 40.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&x, &[9.0, 4.0, 1.0, 0.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!(spearman(&x, &[1.0, 1.0, 1.0, 1.0]).is_none());
    }

    #[test]
    fn spearman_handles_ties() {
        // hand-computed: ranks x = [1.5,1.5,3,4], y = [1,2,3,4]
        let r = spearman(&[0.0, 0.0, 1.0, 2.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let expected = 4.5 / (4.5f64 * 5.0).sqrt();
        assert!((r - expected).abs() < 1e-12, "{r} vs {expected}");
    }

    #[test]
    fn hops_along_a_chain() {
        let ch = ChannelConfig {
            comm_radius: 100.0,
            ..ChannelConfig::default()
        };
        let pts: Vec<Vec2> = (0..4).map(|i| Vec2::new(80.0 * i as f64, 0.0)).collect();
        let mut with_island = pts.clone();
        with_island.push(Vec2::new(5000.0, 0.0));
        let hops = hop_distances(&with_island, 0, &ch);
        assert_eq!(hops, vec![Some(0), Some(1), Some(2), Some(3), None]);
    }
}
