//! The marginal pollen efficiency `η̃_cut(τ)`.
//!
//! At a given `τ`, rank pollen resources by `η̃_f(τ)` and staff them in that
//! order until `demand` foragers are placed; `η̃_cut(τ)` is the efficiency of
//! the last resource touched, floored at zero. Equivalently, stacking each
//! resource's hypograph with weight equal to its capacity, the cut is the
//! level where the stacked weight crosses `demand`.
//!
//! Between consecutive pairwise intersections and zero crossings the ranking
//! and every sign are fixed, so the cut is affine there. Sweeping those
//! events gives the function exactly.

use serde::Serialize;

use super::{AffineEfficiency, MarketError, Result};
use crate::flora::ResourceId;
use crate::numeric::ExactSum;

/// One affine piece, valid from `start` to the next segment's start.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CutSegment {
    pub start: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Resource at the margin; `None` on the zero floor.
    pub marginal: Option<ResourceId>,
}

impl CutSegment {
    pub fn value(&self, tau: f64) -> f64 {
        match self.marginal {
            Some(_) => self.slope * tau + self.intercept,
            None => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutFunction {
    segments: Vec<CutSegment>,
    /// Largest `τ` with `η̃_cut(τ) = 0`; infinite when capacity never meets
    /// demand.
    pub t0: f64,
    /// Start of the final affine piece.
    pub t1: f64,
    pub demand: f64,
}

/// Index into `lines` of the marginal resource at `tau`, or `None` when the
/// whole capacity falls short of `demand`.
pub(crate) fn marginal_at(lines: &[AffineEfficiency], demand: f64, tau: f64) -> Option<usize> {
    let order = ranking(lines, tau);
    let mut cum = ExactSum::new();
    for i in order {
        cum.add(lines[i].capacity);
        if cum.value() >= demand {
            return Some(i);
        }
    }
    None
}

/// Indices of `lines` by decreasing `value(tau)`, ties by id.
pub(crate) fn ranking(lines: &[AffineEfficiency], tau: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..lines.len()).collect();
    order.sort_by(|&a, &b| {
        lines[b]
            .value(tau)
            .total_cmp(&lines[a].value(tau))
            .then(lines[a].id.cmp(&lines[b].id))
    });
    order
}

fn event_points(lines: &[AffineEfficiency]) -> Vec<f64> {
    let mut pts: Vec<f64> = lines.iter().map(|l| l.zero_crossing()).collect();
    for (i, a) in lines.iter().enumerate() {
        for b in &lines[i + 1..] {
            if a.slope != b.slope {
                pts.push((b.intercept - a.intercept) / (a.slope - b.slope));
            }
        }
    }
    pts.retain(|t| t.is_finite() && *t > 0.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Builds `η̃_cut` for `demand` pollen foragers.
pub fn build_eta_cut(pollen: &[AffineEfficiency], demand: f64) -> Result<CutFunction> {
    if pollen.is_empty() {
        return Err(MarketError::NoPollenResources);
    }
    if !(demand > 0.0) {
        return Err(MarketError::InvalidInput(format!(
            "pollen demand must be positive, got {demand}"
        )));
    }
    if let Some(bad) = pollen
        .iter()
        .find(|l| !(l.slope > 0.0) || !(l.capacity >= 0.0))
    {
        return Err(MarketError::InvalidInput(format!(
            "resource {}: slope must be > 0 and capacity >= 0",
            bad.id
        )));
    }

    let events = event_points(pollen);
    let mut starts = Vec::with_capacity(events.len() + 1);
    starts.push(0.0);
    starts.extend(events.iter().copied());

    let mut segments: Vec<CutSegment> = Vec::with_capacity(starts.len());
    for (k, &start) in starts.iter().enumerate() {
        let probe = match starts.get(k + 1) {
            Some(&end) => 0.5 * (start + end),
            None => start + start.max(1.0),
        };
        let seg = match marginal_at(pollen, demand, probe) {
            Some(i) if pollen[i].value(probe) > 0.0 => CutSegment {
                start,
                slope: pollen[i].slope,
                intercept: pollen[i].intercept,
                marginal: Some(pollen[i].id),
            },
            _ => CutSegment {
                start,
                slope: 0.0,
                intercept: 0.0,
                marginal: None,
            },
        };
        match segments.last() {
            Some(prev) if prev.slope == seg.slope && prev.intercept == seg.intercept => {}
            _ => segments.push(seg),
        }
    }

    let t0 = segments
        .iter()
        .find(|s| s.marginal.is_some())
        .map_or(f64::INFINITY, |s| s.start);
    let t1 = match segments.last() {
        Some(s) if s.marginal.is_some() => s.start,
        _ => f64::INFINITY,
    };
    Ok(CutFunction {
        segments,
        t0,
        t1,
        demand,
    })
}

impl CutFunction {
    pub fn segments(&self) -> &[CutSegment] {
        &self.segments
    }

    /// Segment starts; the first is always 0.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.start).collect()
    }

    fn segment_index(&self, tau: f64) -> usize {
        self.segments
            .partition_point(|s| s.start <= tau)
            .saturating_sub(1)
    }

    pub fn value(&self, tau: f64) -> f64 {
        self.segments[self.segment_index(tau)].value(tau)
    }

    /// Marginal resource at `tau`.
    pub fn marginal(&self, tau: f64) -> Option<ResourceId> {
        self.segments[self.segment_index(tau)].marginal
    }

    /// Largest discontinuity across breakpoints.
    pub fn max_jump(&self) -> f64 {
        self.segments
            .windows(2)
            .map(|w| (w[1].value(w[1].start) - w[0].value(w[1].start)).abs())
            .fold(0.0, f64::max)
    }

    /// Smallest `τ` with `η̃_cut(τ) = level`. Levels at or below zero map to
    /// `t0`. `None` when the cut is identically zero.
    pub fn invert(&self, level: f64) -> Option<f64> {
        if !self.t0.is_finite() {
            return None;
        }
        if level <= 0.0 {
            return Some(self.t0);
        }
        for (k, seg) in self.segments.iter().enumerate() {
            if seg.marginal.is_none() {
                continue;
            }
            let end = self.segments.get(k + 1).map_or(f64::INFINITY, |s| s.start);
            if end.is_infinite() || seg.value(end) >= level {
                let tau = (level - seg.intercept) / seg.slope;
                return Some(tau.clamp(seg.start, end));
            }
        }
        None
    }
}
