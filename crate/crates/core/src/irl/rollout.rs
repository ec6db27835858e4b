//! Monte Carlo rollouts of a goal-conditioned policy.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::Cell;
use crate::irl::plan::{Policy, NO_SUCC};
use crate::irl::IocmmHyper;

/// Raw visit counts of a batch of rollouts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Visitation {
    pub counts: Vec<u64>,
    pub rollouts: usize,
    /// Rollouts stopped by the length cap before reaching the goal.
    pub truncated: usize,
}

impl Visitation {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn start_index(policy: &Policy, start: Cell) -> Result<usize> {
    let topo = &policy.topo;
    if !topo.dims.contains(start) {
        return Err(Error::InvalidState {
            x: start.x,
            y: start.y,
            reason: "outside the map",
        });
    }
    let i = topo.dims.index(start);
    if topo.blocked[i] {
        return Err(Error::InvalidState {
            x: start.x,
            y: start.y,
            reason: "impassable class",
        });
    }
    Ok(i)
}

fn sample_action<R: Rng + ?Sized>(probs: &[f64; 8], succ: &[u32; 8], rng: &mut R) -> Option<u32> {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = None;
    for a in 0..8 {
        if probs[a] > 0.0 {
            acc += probs[a];
            last = Some(succ[a]);
            if u < acc {
                return last;
            }
        }
    }
    last
}

/// Walks from `start` until the goal or `cap` steps, calling `visit` on every
/// state including the start. Returns whether the goal was reached.
fn walk<R: Rng + ?Sized>(policy: &Policy, start: usize, cap: usize, rng: &mut R, mut visit: impl FnMut(usize)) -> bool {
    let topo = &policy.topo;
    let mut s = start;
    visit(s);
    let mut steps = 0;
    while s != policy.goal_index {
        if steps == cap {
            return false;
        }
        match sample_action(&policy.probs[s], &topo.succ[s], rng) {
            Some(next) if next != NO_SUCC => s = next as usize,
            _ => return false,
        }
        visit(s);
        steps += 1;
    }
    true
}

/// Simulates `n` rollouts from `start` and counts every visited state.
///
/// Rollouts cut off by the cap still contribute the states they visited.
pub fn forward_pass<R: Rng + ?Sized>(
    policy: &Policy,
    start: Cell,
    n: usize,
    hyper: &IocmmHyper,
    rng: &mut R,
) -> Result<Visitation> {
    let s0 = start_index(policy, start)?;
    let cap = hyper.cap_for(policy.dims());
    let mut counts = vec![0u64; policy.dims().len()];
    let mut truncated = 0;
    for _ in 0..n {
        if !walk(policy, s0, cap, rng, |s| counts[s] += 1) {
            truncated += 1;
        }
    }
    Ok(Visitation {
        counts,
        rollouts: n,
        truncated,
    })
}

/// One rollout recorded as a path; `None` if it did not reach the goal
/// within `cap` steps.
pub fn sample_path<R: Rng + ?Sized>(
    policy: &Policy,
    start: Cell,
    cap: usize,
    rng: &mut R,
) -> Result<Option<Vec<Cell>>> {
    let s0 = start_index(policy, start)?;
    let dims = policy.dims();
    let mut path = Vec::new();
    let reached = walk(policy, s0, cap, rng, |s| path.push(dims.cell(s)));
    Ok(reached.then_some(path))
}
