//! Route enumeration, feasibility, best-route choice and max-min time sharing.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::mapping::FeasibilityMatrix;

/// Ordered sequences of distinct panels, shortest first and lexicographic
/// within a length.
pub fn enumerate_routes(panel_count: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for len in 1..=max_len.min(panel_count) {
        extend(panel_count, len, &mut cur, &mut out);
    }
    out
}

fn extend(n: usize, len: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == len {
        out.push(cur.clone());
        return;
    }
    for p in 0..n {
        if !cur.contains(&p) {
            cur.push(p);
            extend(n, len, cur, out);
            cur.pop();
        }
    }
}

/// Link segments of a route toward user `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteSegment {
    ApPanel(usize),
    PanelPanel(usize, usize),
    PanelUser(usize, usize),
}

pub fn route_segments(route: &[usize], user: usize) -> Vec<RouteSegment> {
    let mut segs = Vec::with_capacity(route.len() + 1);
    segs.push(RouteSegment::ApPanel(route[0]));
    for w in route.windows(2) {
        segs.push(RouteSegment::PanelPanel(w[0], w[1]));
    }
    segs.push(RouteSegment::PanelUser(*route.last().unwrap(), user));
    segs
}

/// Product of the segment indicators.
pub fn route_clear(route: &[usize], user: usize, fm: &FeasibilityMatrix) -> bool {
    route_segments(route, user).iter().all(|s| match *s {
        RouteSegment::ApPanel(i) => fm.ap_panel(i),
        RouteSegment::PanelPanel(i, j) => fm.panel_panel(i, j),
        RouteSegment::PanelUser(i, k) => fm.panel_user(i, k),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteCandidate {
    pub panels: Vec<usize>,
    pub clear: bool,
    pub rate: f64,
}

/// Larger rate first, then shorter, then lexicographically smaller.
fn better(a: &RouteCandidate, b: &RouteCandidate) -> bool {
    match a.rate.partial_cmp(&b.rate) {
        Some(Ordering::Greater) => true,
        Some(Ordering::Less) => false,
        _ => (a.panels.len(), &a.panels) < (b.panels.len(), &b.panels),
    }
}

/// Scores every clear route with `rate` and keeps the best. Blocked routes
/// score zero without calling `rate`. With nothing clear the result has
/// `rate == 0` and `clear == false`.
pub fn best_route(
    candidates: &[Vec<usize>],
    user: usize,
    fm: &FeasibilityMatrix,
    mut rate: impl FnMut(&[usize]) -> f64,
) -> RouteCandidate {
    assert!(!candidates.is_empty(), "no candidate routes");
    let mut best: Option<RouteCandidate> = None;
    for r in candidates {
        let clear = route_clear(r, user, fm);
        let mut value = if clear { rate(r) } else { 0.0 };
        if !(value > 0.0) {
            value = 0.0;
        }
        let c = RouteCandidate { panels: r.clone(), clear: clear && value > 0.0, rate: value };
        if best.as_ref().map_or(true, |b| better(&c, b)) {
            best = Some(c);
        }
    }
    best.unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocationError {
    EmptyUserSet,
}

impl AllocationError {
    pub fn code(&self) -> &'static str {
        "allocation.empty_user_set"
    }
}

impl core::fmt::Display for AllocationError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("no users to schedule")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub tau: Vec<f64>,
    pub r_min: f64,
    /// Users with a positive rate.
    pub served: usize,
}

/// Max-min time sharing. The optimum equalises `tau_k R_k`, giving
/// `tau_k = (1/R_k) / sum_j 1/R_j`. A zero rate forces `R_min = 0`; time is
/// then split evenly among the positive-rate users, or among everyone when
/// no user has a route.
pub fn maxmin_tdma(rates: &[f64]) -> Result<Allocation, AllocationError> {
    if rates.is_empty() {
        return Err(AllocationError::EmptyUserSet);
    }
    let served = rates.iter().filter(|&&r| r > 0.0).count();
    if served == rates.len() {
        let inv: Vec<f64> = rates.iter().map(|r| 1.0 / r).collect();
        let s: f64 = inv.iter().sum();
        let tau = inv.iter().map(|v| v / s).collect();
        return Ok(Allocation { tau, r_min: 1.0 / s, served });
    }
    let tau = if served == 0 {
        alloc::vec![1.0 / rates.len() as f64; rates.len()]
    } else {
        rates.iter().map(|&r| if r > 0.0 { 1.0 / served as f64 } else { 0.0 }).collect()
    };
    Ok(Allocation { tau, r_min: 0.0, served })
}
