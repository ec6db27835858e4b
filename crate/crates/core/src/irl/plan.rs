//! Soft value iteration toward a fixed goal and the resulting stochastic policy.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Cell, Dims, SemanticMap};
use crate::irl::{IocmmHyper, ThetaModel};

pub(crate) const NO_SUCC: u32 = u32::MAX;

/// Terms this far below the running maximum vanish in f64 log-sum-exp.
const LSE_CUTOFF: f64 = -40.0;

/// Static move structure of a map: blocked cells and valid successors.
#[derive(Debug)]
pub(crate) struct Topology {
    pub dims: Dims,
    pub blocked: Vec<bool>,
    pub succ: Vec<[u32; 8]>,
}

impl Topology {
    fn new(map: &SemanticMap, blocked_class: &[bool]) -> Self {
        let dims = map.dims();
        let blocked: Vec<bool> = (0..dims.len()).map(|i| blocked_class[map.class_at_index(i)]).collect();
        let succ = (0..dims.len())
            .map(|i| {
                let mut out = [NO_SUCC; 8];
                if blocked[i] {
                    return out;
                }
                let c = dims.cell(i);
                for (a, slot) in out.iter_mut().enumerate() {
                    if let Some(n) = dims.step(c, a) {
                        let j = dims.index(n);
                        if !blocked[j] {
                            *slot = j as u32;
                        }
                    }
                }
                out
            })
            .collect();
        Topology { dims, blocked, succ }
    }

    fn has_moves(&self, i: usize) -> bool {
        self.succ[i].iter().any(|&s| s != NO_SUCC)
    }
}

/// Map class index to model class index, matched by name.
pub fn class_mapping(map: &SemanticMap, model_classes: &[String]) -> Result<Vec<usize>> {
    let mut missing = Vec::new();
    let mapping: Vec<usize> = map
        .classes()
        .names()
        .iter()
        .map(|name| {
            model_classes.iter().position(|m| m == name).unwrap_or_else(|| {
                missing.push(name.clone());
                usize::MAX
            })
        })
        .collect();
    if !missing.is_empty() {
        return Err(Error::ClassMismatch(missing));
    }
    Ok(mapping)
}

/// Per-state step cost `c(s) = r0 + theta . f(s)`.
pub fn state_cost(map: &SemanticMap, model: &ThetaModel, s: Cell) -> Result<f64> {
    if !map.dims().contains(s) {
        return Err(Error::InvalidState {
            x: s.x,
            y: s.y,
            reason: "outside the map",
        });
    }
    let mapping = class_mapping(map, model.classes())?;
    Ok(model.class_cost(mapping[map.class_at(s)]))
}

/// Planning view of one map under a model vocabulary.
#[derive(Debug, Clone)]
pub struct Planner<'m> {
    map: &'m SemanticMap,
    to_model: Vec<usize>,
    topo: Arc<Topology>,
    any_moves: bool,
}

impl<'m> Planner<'m> {
    /// Classes listed in `hyper.impassable` that are also flagged unwalkable
    /// are removed from the state space.
    pub fn new(map: &'m SemanticMap, model_classes: &[String], hyper: &IocmmHyper) -> Result<Self> {
        let to_model = class_mapping(map, model_classes)?;
        let classes = map.classes();
        let blocked_class: Vec<bool> = (0..classes.len())
            .map(|k| !classes.is_walkable(k) && hyper.impassable.iter().any(|n| n == classes.name(k)))
            .collect();
        let topo = Topology::new(map, &blocked_class);
        let any_moves = (0..topo.dims.len()).any(|i| topo.has_moves(i));
        Ok(Planner {
            map,
            to_model,
            topo: Arc::new(topo),
            any_moves,
        })
    }

    pub fn map(&self) -> &'m SemanticMap {
        self.map
    }

    pub fn dims(&self) -> Dims {
        self.topo.dims
    }

    pub fn is_blocked(&self, c: Cell) -> bool {
        self.topo.blocked[self.topo.dims.index(c)]
    }

    pub fn blocked(&self) -> &[bool] {
        &self.topo.blocked
    }

    /// Model class of the state at flat index `i`.
    pub fn model_class(&self, i: usize) -> usize {
        self.to_model[self.map.class_at_index(i)]
    }

    pub fn class_mapping(&self) -> &[usize] {
        &self.to_model
    }

    /// Step cost of every state.
    pub fn costs(&self, model: &ThetaModel) -> Vec<f64> {
        (0..self.topo.dims.len())
            .map(|i| model.class_cost(self.model_class(i)))
            .collect()
    }

    /// MDP reward of every state, `-cost_scale * c(s)`.
    pub fn rewards(&self, model: &ThetaModel, hyper: &IocmmHyper) -> Vec<f64> {
        self.costs(model).into_iter().map(|c| -hyper.cost_scale * c).collect()
    }

    pub(crate) fn check_state(&self, s: Cell) -> Result<usize> {
        if !self.topo.dims.contains(s) {
            return Err(Error::InvalidState {
                x: s.x,
                y: s.y,
                reason: "outside the map",
            });
        }
        let i = self.topo.dims.index(s);
        if self.topo.blocked[i] {
            return Err(Error::InvalidState {
                x: s.x,
                y: s.y,
                reason: "impassable class",
            });
        }
        Ok(i)
    }

    pub fn backward_pass(&self, model: &ThetaModel, goal: Cell, hyper: &IocmmHyper) -> Result<Policy> {
        self.backward_pass_with_rewards(&self.rewards(model, hyper), goal, hyper)
    }

    /// Soft value iteration: `V(goal) = 0`, `Q(s,a) = R(s) + V(s')`,
    /// `V(s) = log sum_a exp Q(s,a)`, swept in alternating raster order until
    /// the largest change drops below `vi_tolerance`. The policy is
    /// `pi(a|s) ∝ exp(alpha (Q(s,a) - V(s)))`, renormalized per state.
    pub fn backward_pass_with_rewards(&self, rewards: &[f64], goal: Cell, hyper: &IocmmHyper) -> Result<Policy> {
        let g = self.check_state(goal)?;
        if !self.any_moves {
            return Err(Error::DegenerateMap);
        }
        let topo = &*self.topo;
        let n = topo.dims.len();
        assert_eq!(rewards.len(), n);

        let mut v = vec![f64::NEG_INFINITY; n];
        v[g] = 0.0;
        let max_sweeps = hyper.sweeps_for(topo.dims);
        let mut sweeps = 0;
        let mut converged = false;

        let update = |v: &mut [f64], s: usize| -> f64 {
            if s == g || topo.blocked[s] {
                return 0.0;
            }
            let succ = &topo.succ[s];
            let mut max = f64::NEG_INFINITY;
            for &j in succ {
                if j != NO_SUCC {
                    max = max.max(v[j as usize]);
                }
            }
            if max == f64::NEG_INFINITY {
                return 0.0;
            }
            let mut sum = 0.0;
            for &j in succ {
                if j != NO_SUCC {
                    let d = v[j as usize] - max;
                    if d > LSE_CUTOFF {
                        sum += d.exp();
                    }
                }
            }
            let new = rewards[s] + max + sum.ln();
            let old = std::mem::replace(&mut v[s], new);
            if old == f64::NEG_INFINITY {
                f64::INFINITY
            } else {
                (new - old).abs()
            }
        };

        while sweeps < max_sweeps {
            let mut delta = 0.0f64;
            if sweeps % 2 == 0 {
                for s in 0..n {
                    delta = delta.max(update(&mut v, s));
                }
            } else {
                for s in (0..n).rev() {
                    delta = delta.max(update(&mut v, s));
                }
            }
            sweeps += 1;
            if delta < hyper.vi_tolerance {
                converged = true;
                break;
            }
        }

        let mut q = vec![[f64::NEG_INFINITY; 8]; n];
        let mut probs = vec![[0.0; 8]; n];
        for s in 0..n {
            if s == g || topo.blocked[s] || !topo.has_moves(s) {
                continue;
            }
            let succ = &topo.succ[s];
            for a in 0..8 {
                if succ[a] != NO_SUCC {
                    q[s][a] = rewards[s] + v[succ[a] as usize];
                }
            }
            let p = &mut probs[s];
            if v[s].is_finite() {
                for a in 0..8 {
                    if q[s][a].is_finite() {
                        p[a] = (hyper.alpha * (q[s][a] - v[s])).exp();
                    }
                }
            } else {
                // goal unreachable from here: wander uniformly
                for a in 0..8 {
                    if succ[a] != NO_SUCC {
                        p[a] = 1.0;
                    }
                }
            }
            let total: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x /= total);
        }

        Ok(Policy {
            topo: Arc::clone(&self.topo),
            goal,
            goal_index: g,
            q,
            v,
            probs,
            sweeps,
            converged,
        })
    }
}

/// Goal-conditioned stochastic policy with its soft values.
#[derive(Debug, Clone)]
pub struct Policy {
    pub(crate) topo: Arc<Topology>,
    goal: Cell,
    pub(crate) goal_index: usize,
    q: Vec<[f64; 8]>,
    v: Vec<f64>,
    pub(crate) probs: Vec<[f64; 8]>,
    sweeps: usize,
    converged: bool,
}

impl Policy {
    pub fn goal(&self) -> Cell {
        self.goal
    }

    pub fn dims(&self) -> Dims {
        self.topo.dims
    }

    pub fn value(&self, s: Cell) -> f64 {
        self.v[self.topo.dims.index(s)]
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    /// `Q(s, a)`, `-inf` for invalid actions.
    pub fn q(&self, s: Cell) -> &[f64; 8] {
        &self.q[self.topo.dims.index(s)]
    }

    /// `pi(. | s)` over [`MOVES`](crate::grid::MOVES); all zero at the goal and blocked cells.
    pub fn probs(&self, s: Cell) -> &[f64; 8] {
        &self.probs[self.topo.dims.index(s)]
    }

    /// Number of valid actions at `s`.
    pub fn valid_actions(&self, s: Cell) -> usize {
        self.topo.succ[self.topo.dims.index(s)]
            .iter()
            .filter(|&&j| j != NO_SUCC)
            .count()
    }

    pub fn successor(&self, s: Cell, action: usize) -> Option<Cell> {
        let j = self.topo.succ[self.topo.dims.index(s)][action];
        (j != NO_SUCC).then(|| self.topo.dims.cell(j as usize))
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn converged(&self) -> bool {
        self.converged
    }
}

/// Convenience wrapper building a [`Planner`] for a single query.
pub fn backward_pass(map: &SemanticMap, model: &ThetaModel, goal: Cell, hyper: &IocmmHyper) -> Result<Policy> {
    Planner::new(map, model.classes(), hyper)?.backward_pass(model, goal, hyper)
}
