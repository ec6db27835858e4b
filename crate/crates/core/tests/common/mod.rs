//! Fixtures and independent oracles shared by the integration suites.
//!
//! Nothing here calls into the planner internals: rewards, path sums and
//! Markov-chain visitation are recomputed from first principles.

#![allow(dead_code)]

pub mod invariants;

use std::collections::VecDeque;

use occprior::irl::{sample_path, EndpointSampler};
use occprior::{
    initial_model, stream_rng, train_iocmm, Cell, ClassTable, Dims, EndpointStrategy, IocmmHyper, MapSample, Planner,
    Policy, SemanticMap, ThetaModel, Trajectory,
};
use rand::Rng;

pub const SIDEWALK: u16 = 0;
pub const GRASS: u16 = 1;
pub const ROAD: u16 = 2;
pub const OBSTACLE: u16 = 3;

/// Eight neighbour offsets, independent of the library's move table.
pub const NEIGHBOURS: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

pub fn urban_names() -> Vec<String> {
    ClassTable::urban().names().to_vec()
}

pub fn map_from_rows(rows: &[&str]) -> SemanticMap {
    // s = sidewalk, g = grass, r = road, o = obstacle
    let height = rows.len();
    let width = rows[0].len();
    let cells = rows
        .iter()
        .flat_map(|r| {
            r.chars().map(|c| match c {
                's' => SIDEWALK,
                'g' => GRASS,
                'r' => ROAD,
                'o' => OBSTACLE,
                _ => panic!("bad fixture char {c}"),
            })
        })
        .collect();
    SemanticMap::new(width, height, ClassTable::urban(), cells).unwrap()
}

pub fn neighbours(dims: Dims, c: Cell) -> impl Iterator<Item = Cell> {
    NEIGHBOURS.iter().filter_map(move |&(dx, dy)| {
        let x = c.x as isize + dx;
        let y = c.y as isize + dy;
        (x >= 0 && y >= 0 && (x as usize) < dims.width && (y as usize) < dims.height)
            .then(|| Cell::new(x as usize, y as usize))
    })
}

/// `R(s) = -cost_scale * (r0 + theta[class(s)])`, recomputed by hand.
pub fn reward(map: &SemanticMap, model: &ThetaModel, hyper: &IocmmHyper, c: Cell) -> f64 {
    -hyper.cost_scale * (model.r0() + model.theta()[map.class_at(c)])
}

/// Sum over all paths from `from` that first hit `goal`, weighted by
/// `exp(sum of rewards of the states left behind)`, in log space. Paths are
/// enumerated depth-first and dropped once their log-weight falls below
/// `-prune` or they exceed `max_len` steps.
fn path_sum(
    map: &SemanticMap,
    model: &ThetaModel,
    hyper: &IocmmHyper,
    goal: Cell,
    from: Cell,
    max_len: usize,
    prune: f64,
) -> f64 {
    let dims = map.dims();
    let mut terms: Vec<f64> = Vec::new();
    let mut stack = vec![(from, 0.0f64, 0usize)];
    while let Some((c, logw, len)) = stack.pop() {
        if c == goal {
            terms.push(logw);
            continue;
        }
        if len == max_len || logw < -prune {
            continue;
        }
        let w = logw + reward(map, model, hyper, c);
        for n in neighbours(dims, c) {
            stack.push((n, w, len + 1));
        }
    }
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

pub struct BruteForce {
    /// Soft value of `s`: log of the total weight of paths from `s`.
    pub value: f64,
    /// Action probabilities in the order of [`NEIGHBOURS`] filtered to the
    /// in-bounds successors, paired with the successor cell.
    pub probs: Vec<(Cell, f64)>,
}

/// Maximum-entropy path distribution at `s` by explicit path enumeration,
/// tempered by `alpha`: `pi(a) ∝ W_a^alpha` where `W_a` is the total weight
/// of paths starting with action `a`. Obstacle-free fixtures only.
pub fn brute_force_policy(
    map: &SemanticMap,
    model: &ThetaModel,
    hyper: &IocmmHyper,
    goal: Cell,
    s: Cell,
    max_len: usize,
    prune: f64,
) -> BruteForce {
    let r = reward(map, model, hyper, s);
    let logw: Vec<(Cell, f64)> = neighbours(map.dims(), s)
        .map(|n| (n, r + path_sum(map, model, hyper, goal, n, max_len, prune)))
        .collect();
    let m = logw.iter().map(|(_, w)| *w).fold(f64::NEG_INFINITY, f64::max);
    let value = m + logw.iter().map(|(_, w)| (w - m).exp()).sum::<f64>().ln();
    let tempered: Vec<f64> = logw.iter().map(|(_, w)| (hyper.alpha * (w - m)).exp()).collect();
    let z: f64 = tempered.iter().sum();
    BruteForce {
        value,
        probs: logw.iter().zip(&tempered).map(|((n, _), t)| (*n, t / z)).collect(),
    }
}

/// Largest absolute differences between the planner and the enumeration over
/// every non-goal state: `(action probability, soft value)`.
pub fn policy_gap(
    map: &SemanticMap,
    model: &ThetaModel,
    hyper: &IocmmHyper,
    policy: &Policy,
    max_len: usize,
    prune: f64,
) -> (f64, f64) {
    let dims = map.dims();
    let mut worst: f64 = 0.0;
    let mut worst_v: f64 = 0.0;
    for s in dims.cells().filter(|&c| c != policy.goal()) {
        let bf = brute_force_policy(map, model, hyper, policy.goal(), s, max_len, prune);
        let probs = policy.probs(s);
        let mut matched = 0.0;
        for (a, &p) in probs.iter().enumerate() {
            if let Some(n) = policy.successor(s, a) {
                let p_bf = bf.probs.iter().find(|(c, _)| *c == n).map(|(_, p)| *p).unwrap();
                worst = worst.max((p - p_bf).abs());
                matched += p_bf;
            }
        }
        worst = worst.max((1.0 - matched).abs());
        worst_v = worst_v.max((policy.value(s) - bf.value).abs());
    }
    (worst, worst_v)
}

/// Dense Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                let pivot = a[col].clone();
                for (x, p) in a[row][col..].iter_mut().zip(&pivot[col..]) {
                    *x -= f * p;
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Expected visit distribution of the absorbing chain defined by `policy`,
/// started at `start`, counting the start and the absorbing goal.
pub fn absorbing_visitation(policy: &Policy, blocked: &[bool], start: Cell) -> Vec<f64> {
    let dims = policy.dims();
    let goal = dims.index(policy.goal());
    let transient: Vec<usize> = (0..dims.len()).filter(|&i| i != goal && !blocked[i]).collect();
    let pos = |i: usize| transient.iter().position(|&t| t == i);
    let n = transient.len();
    // expected visits x solve (I - P_T^T) x = e_start
    let mut a = vec![vec![0.0; n]; n];
    for (r, row) in a.iter_mut().enumerate() {
        row[r] = 1.0;
    }
    for (j, &s) in transient.iter().enumerate() {
        let c = dims.cell(s);
        for (act, &p) in policy.probs(c).iter().enumerate() {
            if p > 0.0 {
                let next = dims.index(policy.successor(c, act).unwrap());
                if let Some(i) = pos(next) {
                    a[i][j] -= p;
                }
            }
        }
    }
    let mut b = vec![0.0; n];
    b[pos(dims.index(start)).unwrap()] = 1.0;
    let x = solve(a, b);
    let mut visits = vec![0.0; dims.len()];
    for (k, &s) in transient.iter().enumerate() {
        visits[s] = x[k];
    }
    visits[goal] = 1.0;
    let total: f64 = visits.iter().sum();
    visits.iter().map(|v| v / total).collect()
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Boundary sidewalk cells all mutually reachable through non-obstacle cells,
/// by breadth-first flood fill.
pub fn flood_connected(map: &SemanticMap) -> bool {
    let dims = map.dims();
    let on_border = |c: Cell| c.x == 0 || c.y == 0 || c.x == dims.width - 1 || c.y == dims.height - 1;
    let border: Vec<Cell> = dims
        .cells()
        .filter(|&c| on_border(c) && map.class_at(c) == SIDEWALK as usize)
        .collect();
    let Some(&first) = border.first() else {
        return false;
    };
    let mut seen = vec![false; dims.len()];
    seen[dims.index(first)] = true;
    let mut queue = VecDeque::from([first]);
    while let Some(c) = queue.pop_front() {
        for n in neighbours(dims, c) {
            let i = dims.index(n);
            if !seen[i] && map.class_at(n) != OBSTACLE as usize {
                seen[i] = true;
                queue.push_back(n);
            }
        }
    }
    border.iter().all(|&c| seen[dims.index(c)])
}

/// Random block mosaic of sidewalk, grass and road, `block` cells per side.
pub fn mosaic_map(seed: u64, index: u64, size: usize, block: usize) -> SemanticMap {
    let mut rng = stream_rng(seed, index);
    let nb = size.div_ceil(block);
    let blocks: Vec<u16> = (0..nb * nb).map(|_| rng.random_range(0..3)).collect();
    let cells = (0..size * size)
        .map(|i| blocks[(i / size / block) * nb + (i % size) / block])
        .collect();
    SemanticMap::new(size, size, ClassTable::urban(), cells).unwrap()
}

pub const THETA_STAR: [f64; 4] = [0.1, 0.3, 0.55, 0.05];

pub struct Recovery {
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
    pub theta: Vec<f64>,
    /// sidewalk < grass < road, the traversable classes the demonstrations see.
    pub ordering_ok: bool,
}

/// Demonstrations sampled from the soft-optimal policy of [`THETA_STAR`] on
/// mosaic maps, then learned back from uniform weights with full batches.
pub fn self_consistency(seed: u64) -> Recovery {
    let names = urban_names();
    let star = ThetaModel::new(names.clone(), THETA_STAR.to_vec(), 0.01, vec![0.25; 4]).unwrap();
    let base = IocmmHyper::u4();
    let (maps, per_map) = (4, 10);
    let data: Vec<MapSample> = (0..maps)
        .map(|m| {
            let map = mosaic_map(seed + 1000, m, 16, 4);
            let planner = Planner::new(&map, &names, &base).unwrap();
            let sampler = EndpointSampler::new(&planner, &star, EndpointStrategy::Learned, 1.0).unwrap();
            let mut rng = stream_rng(seed, m);
            let mut trajs = Vec::new();
            while trajs.len() < per_map {
                let (s0, g) = sampler.sample(&mut rng);
                let policy = planner.backward_pass(&star, g, &base).unwrap();
                if let Some(path) = sample_path(&policy, s0, 256, &mut rng).unwrap() {
                    trajs.push(Trajectory::new(path).unwrap());
                }
            }
            MapSample::from_trajectories(format!("mosaic_{m}"), map, trajs).unwrap()
        })
        .collect();
    let hyper = IocmmHyper {
        seed,
        map_batch: maps as usize,
        traj_batch: per_map,
        rollouts_per_traj: 500,
        ..base
    };
    let trained = train_iocmm(&data, &hyper, initial_model(&data, &hyper).unwrap()).unwrap();
    let theta = trained.model.theta().to_vec();
    Recovery {
        converged: trained.log.converged,
        iterations: trained.log.iterations.len(),
        grad_norm: trained.log.final_grad_norm().unwrap(),
        ordering_ok: theta[0] < theta[1] && theta[1] < theta[2],
        theta,
    }
}

/// Obstacle-free fixtures for the path-enumeration oracle:
/// `(name, map, goal, cost_scale, max_len, prune)`.
pub fn corridor_fixtures() -> Vec<(&'static str, SemanticMap, Cell, f64, usize, f64)> {
    vec![
        ("1x3 sidewalk", map_from_rows(&["sss"]), Cell::new(2, 0), 30.0, 20, 80.0),
        ("1x3 mixed", map_from_rows(&["sgr"]), Cell::new(2, 0), 30.0, 20, 80.0),
        (
            "1x3 goal centre",
            map_from_rows(&["gsr"]),
            Cell::new(1, 0),
            30.0,
            20,
            80.0,
        ),
        (
            "2x3 sidewalk",
            map_from_rows(&["sss", "sss"]),
            Cell::new(2, 1),
            50.0,
            14,
            45.0,
        ),
        (
            "2x3 mixed",
            map_from_rows(&["sgs", "rsg"]),
            Cell::new(2, 0),
            50.0,
            14,
            45.0,
        ),
    ]
}

/// `(name, map, start, goal, alpha)` rollout fixtures, none larger than 5x5.
pub fn rollout_fixtures() -> Vec<(&'static str, SemanticMap, Cell, Cell, f64)> {
    vec![
        (
            "1x3 corridor",
            map_from_rows(&["sss"]),
            Cell::new(0, 0),
            Cell::new(2, 0),
            1.0,
        ),
        (
            "1x3 corridor soft",
            map_from_rows(&["sgs"]),
            Cell::new(0, 0),
            Cell::new(2, 0),
            0.3,
        ),
        (
            "3x3 grass",
            map_from_rows(&["ggg", "ggg", "ggg"]),
            Cell::new(0, 0),
            Cell::new(2, 2),
            0.5,
        ),
        (
            "4x4 mixed",
            map_from_rows(&["sgrs", "sggs", "rrgs", "ssss"]),
            Cell::new(0, 0),
            Cell::new(3, 0),
            1.0,
        ),
        (
            "5x5 wall with gap",
            map_from_rows(&["sssss", "ggggg", "ooogo", "ggggg", "sssss"]),
            Cell::new(0, 4),
            Cell::new(0, 0),
            1.0,
        ),
        (
            "5x5 mosaic",
            map_from_rows(&["ssgrr", "sggrs", "rrsss", "gsgrg", "sssgg"]),
            Cell::new(4, 4),
            Cell::new(0, 0),
            0.5,
        ),
    ]
}

pub fn rollout_hyper(alpha: f64) -> IocmmHyper {
    IocmmHyper {
        alpha,
        cost_scale: 30.0,
        vi_tolerance: 1e-12,
        vi_max_sweeps: Some(100_000),
        rollout_cap: Some(1_000_000),
        ..IocmmHyper::u4()
    }
}

pub fn fixture_model() -> ThetaModel {
    ThetaModel::new(urban_names(), vec![0.1, 0.2, 0.6, 0.1], 0.01, vec![0.25; 4]).unwrap()
}
