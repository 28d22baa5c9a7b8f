//! Change-point detection by binary segmentation under the L2 cost
//! `C(a, b) = Σ_{a ≤ i < b} (x_i − mean(x_a..x_b))²`.
//!
//! Each step splits the segment whose best single cut lowers the total cost
//! the most. Breakpoints are reported as the first index of each new segment.

use serde::{Deserialize, Serialize};

use crate::error::{AnalyticsError, Result};
use crate::par;

/// Segments at least this long scan their cut positions in parallel.
const PARALLEL_SCAN_MIN: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePointResult {
    pub breakpoint_indices: Vec<usize>,
    /// 1 at each breakpoint, 0 elsewhere.
    pub indicator: Vec<i64>,
    /// Total segmentation cost after each accepted split, starting with the unsplit series.
    pub cost_history: Vec<f64>,
}

struct Prefix {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl Prefix {
    fn new(series: &[f64]) -> Self {
        // Centering keeps the sum-of-squares identity well conditioned.
        let mean = series.iter().sum::<f64>() / series.len() as f64;
        let mut sum = Vec::with_capacity(series.len() + 1);
        let mut sum_sq = Vec::with_capacity(series.len() + 1);
        sum.push(0.0);
        sum_sq.push(0.0);
        for v in series {
            let c = v - mean;
            sum.push(sum.last().unwrap() + c);
            sum_sq.push(sum_sq.last().unwrap() + c * c);
        }
        Self { sum, sum_sq }
    }

    fn cost(&self, a: usize, b: usize) -> f64 {
        let n = (b - a) as f64;
        let s = self.sum[b] - self.sum[a];
        let sq = self.sum_sq[b] - self.sum_sq[a];
        (sq - s * s / n).max(0.0)
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    start: usize,
    end: usize,
    cost: f64,
    /// Best cut and its cost reduction, if the segment can be split.
    best: Option<(usize, f64)>,
}

fn best_cut(prefix: &Prefix, start: usize, end: usize, cost: f64) -> Option<(usize, f64)> {
    if end - start < 2 {
        return None;
    }
    let eval = |t: usize| (t, cost - prefix.cost(start, t) - prefix.cost(t, end));
    let pick = |best: Option<(usize, f64)>, cand: (usize, f64)| match best {
        Some(b) if b.1 >= cand.1 => Some(b),
        _ => Some(cand),
    };
    let width = end - start - 1;
    if width >= PARALLEL_SCAN_MIN {
        par::map_range(width, |k| eval(start + 1 + k))
            .into_iter()
            .fold(None, pick)
    } else {
        ((start + 1)..end).map(eval).fold(None, pick)
    }
}

pub fn detect_changepoints(
    series: &[f64],
    n_bkps: Option<usize>,
    penalty: Option<f64>,
) -> Result<ChangePointResult> {
    if n_bkps.is_some() == penalty.is_some() {
        return Err(AnalyticsError::BothOrNeitherStopRule {
            first: "n_bkps",
            second: "penalty",
        });
    }
    let n = series.len();
    if n < 2 {
        return Err(AnalyticsError::TooShort { len: n });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(AnalyticsError::NonFinite);
    }
    if let Some(k) = n_bkps {
        if k >= n {
            return Err(AnalyticsError::TooManyBreakpoints { n_bkps: k, len: n });
        }
    }
    if let Some(p) = penalty {
        if p.is_nan() || p < 0.0 {
            return Err(AnalyticsError::InvalidParameter {
                name: "penalty".into(),
                reason: "must be a non-negative number".into(),
            });
        }
    }

    let prefix = Prefix::new(series);
    let whole = prefix.cost(0, n);
    let mut segments = vec![Segment {
        start: 0,
        end: n,
        cost: whole,
        best: best_cut(&prefix, 0, n, whole),
    }];
    let mut history = vec![whole];
    let mut breakpoints = Vec::new();

    loop {
        if n_bkps.is_some_and(|k| breakpoints.len() >= k) {
            break;
        }
        // Largest gain; ties go to the earliest segment.
        let chosen = segments
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.best.map(|(t, g)| (i, t, g)))
            .fold(None::<(usize, usize, f64)>, |acc, c| match acc {
                Some(a) if a.2 >= c.2 => Some(a),
                _ => Some(c),
            });
        let Some((seg_idx, cut, gain)) = chosen else { break };
        if let Some(p) = penalty {
            if gain <= p {
                break;
            }
        }
        let seg = segments[seg_idx];
        let left_cost = prefix.cost(seg.start, cut);
        let right_cost = prefix.cost(cut, seg.end);
        let left = Segment {
            start: seg.start,
            end: cut,
            cost: left_cost,
            best: best_cut(&prefix, seg.start, cut, left_cost),
        };
        let right = Segment {
            start: cut,
            end: seg.end,
            cost: right_cost,
            best: best_cut(&prefix, cut, seg.end, right_cost),
        };
        segments.splice(seg_idx..=seg_idx, [left, right]);
        breakpoints.push(cut);
        history.push(segments.iter().map(|s| s.cost).sum());
    }

    breakpoints.sort_unstable();
    let mut indicator = vec![0i64; n];
    for &b in &breakpoints {
        indicator[b] = 1;
    }
    Ok(ChangePointResult {
        breakpoint_indices: breakpoints,
        indicator,
        cost_history: history,
    })
}
