//! Procedural urban maps and a least-cost trajectory oracle.
//!
//! Maps use the four-class vocabulary of [`ClassTable::urban`]: straight road
//! bands flanked by sidewalks, footpaths and dead-end spurs across grass, and
//! rectangular obstacles placed on grass. Demonstrations connect boundary sidewalk cells
//! along least-cost 8-connected paths under per-class costs plus per-cell noise.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::dataset::MapSample;
use crate::error::{Error, Result};
use crate::exec::{mix_seed, stream_rng, Exec};
use crate::grid::{Cell, ClassTable, Dims, SemanticMap, Trajectory};
use crate::io::{self, Manifest, ManifestEntry};

pub const SIDEWALK: u16 = 0;
pub const GRASS: u16 = 1;
pub const ROAD: u16 = 2;
pub const OBSTACLE: u16 = 3;

pub const MANIFEST_NAME: &str = "manifest.txt";

const MAX_ATTEMPTS: u64 = 100;
const SPURS: usize = 3;
const ORACLE_SALT: u64 = 0x0AC1E;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub road_count: usize,
    /// Target fraction of cells covered by obstacles.
    pub obstacle_density: f64,
    pub trajectories_per_map: usize,
    /// Oracle step cost per class in [`ClassTable::urban`] order; `None` is impassable.
    pub oracle_costs: Vec<Option<f64>>,
    /// Per-cell cost noise, uniform in `[0, oracle_noise)`, redrawn per trajectory.
    pub oracle_noise: f64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            width: 32,
            height: 32,
            seed: 0,
            road_count: 1,
            obstacle_density: 0.3,
            trajectories_per_map: 30,
            oracle_costs: vec![Some(0.1), Some(0.6), Some(1.0), None],
            oracle_noise: 0.2,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::GeneratorSpec(m));
        if self.width < 16 || self.height < 16 {
            return bad(format!("map {}x{} is smaller than 16x16", self.width, self.height));
        }
        if !(0.0..=1.0).contains(&self.obstacle_density) {
            return bad(format!("obstacle density {} outside [0, 1]", self.obstacle_density));
        }
        if self.trajectories_per_map == 0 {
            return bad("trajectories_per_map must be ≥ 1".into());
        }
        if !(self.oracle_noise >= 0.0 && self.oracle_noise.is_finite()) {
            return bad(format!("oracle noise {} must be non-negative", self.oracle_noise));
        }
        let classes = ClassTable::urban();
        if self.oracle_costs.len() != classes.len() {
            return bad(format!(
                "{} oracle costs for {} classes",
                self.oracle_costs.len(),
                classes.len()
            ));
        }
        for (k, cost) in self.oracle_costs.iter().enumerate() {
            match cost {
                Some(c) if !(*c > 0.0 && c.is_finite()) => {
                    return bad(format!("cost {c} of {} must be positive", classes.name(k)));
                }
                None if classes.is_walkable(k) => {
                    return bad(format!("walkable class {} cannot be impassable", classes.name(k)));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

fn paint_rows(cells: &mut [u16], dims: Dims, horizontal: bool, from: usize, to: usize, class: u16, only: Option<u16>) {
    let (span, across) = if horizontal {
        (dims.width, dims.height)
    } else {
        (dims.height, dims.width)
    };
    for a in from..to.min(across) {
        for b in 0..span {
            let c = if horizontal { Cell::new(b, a) } else { Cell::new(a, b) };
            let i = dims.index(c);
            if only.is_none_or(|o| cells[i] == o) {
                cells[i] = class;
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn paint_rect(cells: &mut [u16], dims: Dims, x0: usize, y0: usize, w: usize, h: usize, class: u16, only: u16) {
    for y in y0..(y0 + h).min(dims.height) {
        for x in x0..(x0 + w).min(dims.width) {
            let i = dims.index(Cell::new(x, y));
            if cells[i] == only {
                cells[i] = class;
            }
        }
    }
}

fn layout<R: Rng>(spec: &GeneratorSpec, rng: &mut R) -> Vec<u16> {
    let dims = Dims::new(spec.width, spec.height);
    let mut cells = vec![GRASS; dims.len()];

    // (horizontal, start, road width, sidewalk width)
    let mut bands: Vec<(bool, usize, usize, usize)> = Vec::new();
    let mut horizontal = rng.random::<bool>();
    for _ in 0..spec.road_count {
        let across = if horizontal { dims.height } else { dims.width };
        for _ in 0..20 {
            let rw = rng.random_range(2..=3);
            let sw = if rng.random_bool(0.3) { 2 } else { 1 };
            let lo = sw + 1;
            let hi = across.saturating_sub(rw + sw + 1);
            if hi <= lo {
                break;
            }
            let p = rng.random_range(lo..hi);
            let clear = bands
                .iter()
                .all(|&(h, q, qrw, qsw)| h != horizontal || p + rw + sw + 2 < q - qsw || q + qrw + qsw + 2 < p - sw);
            if clear {
                bands.push((horizontal, p, rw, sw));
                break;
            }
        }
        horizontal = !horizontal;
    }
    for &(h, p, rw, sw) in &bands {
        paint_rows(&mut cells, dims, h, p - sw, p, SIDEWALK, None);
        paint_rows(&mut cells, dims, h, p + rw, p + rw + sw, SIDEWALK, None);
    }
    for &(h, p, rw, _) in &bands {
        paint_rows(&mut cells, dims, h, p, p + rw, ROAD, None);
    }

    // footpaths across grass; where they meet a road they simply stop
    let footpaths = rng.random_range(1..=2);
    for _ in 0..footpaths {
        let width = rng.random_range(1..=2);
        if rng.random_bool(0.5) {
            let h = rng.random::<bool>();
            let across = if h { dims.height } else { dims.width };
            let p = rng.random_range(1..across - width - 1);
            paint_rows(&mut cells, dims, h, p, p + width, SIDEWALK, Some(GRASS));
        } else {
            // L-shape joining two adjacent borders
            let x = rng.random_range(2..dims.width - width - 2);
            let y = rng.random_range(2..dims.height - width - 2);
            let (y0, y1) = if rng.random::<bool>() {
                (0, y + width)
            } else {
                (y, dims.height)
            };
            let (x0, x1) = if rng.random::<bool>() {
                (0, x + width)
            } else {
                (x, dims.width)
            };
            paint_rect(&mut cells, dims, x, y0, width, y1 - y0, SIDEWALK, GRASS);
            paint_rect(&mut cells, dims, x0, y, x1 - x0, width, SIDEWALK, GRASS);
        }
    }

    // dead-end paths from the border into the grass; walkers leaving them
    // cut across the grass, which is what makes grass occupancy localized
    for _ in 0..SPURS {
        let width = rng.random_range(1..=2);
        let len = rng.random_range(6..=dims.width.min(dims.height) * 2 / 3);
        let side = rng.random_range(0..4);
        let along = rng.random_range(1..dims.width.min(dims.height) - width - 1);
        let (x, y, w, h) = match side {
            0 => (along, 0, width, len),
            1 => (along, dims.height - len, width, len),
            2 => (0, along, len, width),
            _ => (dims.width - len, along, len, width),
        };
        paint_rect(&mut cells, dims, x, y, w, h, SIDEWALK, GRASS);
    }

    let target = (spec.obstacle_density * dims.len() as f64).round() as usize;
    let mut placed = 0;
    for _ in 0..2000 {
        if placed >= target {
            break;
        }
        let w = rng.random_range(2..=5);
        let h = rng.random_range(2..=5);
        let x = rng.random_range(0..dims.width);
        let y = rng.random_range(0..dims.height);
        let before = cells.iter().filter(|&&c| c == OBSTACLE).count();
        paint_rect(&mut cells, dims, x, y, w, h, OBSTACLE, GRASS);
        placed += cells.iter().filter(|&&c| c == OBSTACLE).count() - before;
    }
    cells
}

/// Sidewalk cells on the map border.
pub fn boundary_sidewalks(map: &SemanticMap) -> Vec<Cell> {
    let dims = map.dims();
    let sidewalk = map.classes().index_of("sidewalk");
    dims.cells()
        .filter(|c| c.x == 0 || c.y == 0 || c.x + 1 == dims.width || c.y + 1 == dims.height)
        .filter(|&c| Some(map.class_at(c)) == sidewalk)
        .collect()
}

/// Whether every boundary sidewalk cell is reachable from every other through
/// passable cells, and at least one pair is far enough apart for an oracle
/// trajectory.
pub fn is_connected(map: &SemanticMap, passable: &[bool]) -> bool {
    let border = boundary_sidewalks(map);
    let min_sep = map.width() / 2;
    let far_pair = border
        .iter()
        .any(|&a| border.iter().any(|&b| a.chebyshev(b) >= min_sep));
    if !far_pair {
        return false;
    }
    let dims = map.dims();
    let mut seen = vec![false; dims.len()];
    let mut queue = VecDeque::from([border[0]]);
    seen[dims.index(border[0])] = true;
    while let Some(c) = queue.pop_front() {
        for a in 0..8 {
            if let Some(n) = dims.step(c, a) {
                let j = dims.index(n);
                if !seen[j] && passable[map.class_at_index(j)] {
                    seen[j] = true;
                    queue.push_back(n);
                }
            }
        }
    }
    border.iter().all(|&c| seen[dims.index(c)])
}

/// Deterministic in `spec`; retries with fresh layouts until connected.
pub fn generate_map(spec: &GeneratorSpec) -> Result<SemanticMap> {
    spec.validate()?;
    let passable: Vec<bool> = spec.oracle_costs.iter().map(Option::is_some).collect();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = stream_rng(spec.seed, attempt);
        let cells = layout(spec, &mut rng);
        let map = SemanticMap::new(spec.width, spec.height, ClassTable::urban(), cells)?;
        if is_connected(&map, &passable) {
            return Ok(map);
        }
    }
    Err(Error::GeneratorFailed)
}

/// Least-cost 8-connected path where entering a cell costs `step_cost[cell]`;
/// `None` marks impassable cells.
pub fn least_cost_path(dims: Dims, step_cost: &[Option<f64>], start: Cell, goal: Cell) -> Option<Vec<Cell>> {
    let n = dims.len();
    let (s, g) = (dims.index(start), dims.index(goal));
    step_cost[s]?;
    step_cost[g]?;
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    // non-negative f64 bit patterns order like the values
    heap.push(Reverse((0f64.to_bits(), s)));
    while let Some(Reverse((bits, i))) = heap.pop() {
        let d = f64::from_bits(bits);
        if d > dist[i] {
            continue;
        }
        if i == g {
            break;
        }
        let c = dims.cell(i);
        for a in 0..8 {
            let Some(next) = dims.step(c, a) else { continue };
            let j = dims.index(next);
            let Some(cost) = step_cost[j] else { continue };
            let nd = d + cost;
            if nd < dist[j] {
                dist[j] = nd;
                prev[j] = i;
                heap.push(Reverse((nd.to_bits(), j)));
            }
        }
    }
    if !dist[g].is_finite() {
        return None;
    }
    let mut path = vec![goal];
    let mut i = g;
    while i != s {
        i = prev[i];
        path.push(dims.cell(i));
    }
    path.reverse();
    Some(path)
}

/// Ground-truth demonstrations between boundary sidewalk cells at least
/// `width / 2` apart (Chebyshev), each a least-cost path under
/// `oracle_costs` plus fresh per-cell noise.
pub fn oracle_trajectories(map: &SemanticMap, spec: &GeneratorSpec) -> Result<Vec<Trajectory>> {
    spec.validate()?;
    if map.classes().len() != spec.oracle_costs.len() {
        return Err(Error::Oracle(format!(
            "{} classes but {} oracle costs",
            map.classes().len(),
            spec.oracle_costs.len()
        )));
    }
    let border = boundary_sidewalks(map);
    let min_sep = map.width() / 2;
    if !border
        .iter()
        .any(|&a| border.iter().any(|&b| a.chebyshev(b) >= min_sep))
    {
        return Err(Error::Oracle("no valid endpoint pair".into()));
    }
    let dims = map.dims();
    let seed = mix_seed(spec.seed, ORACLE_SALT);
    let mut trajs = Vec::with_capacity(spec.trajectories_per_map);
    for t in 0..spec.trajectories_per_map {
        let mut rng = stream_rng(seed, t as u64);
        let mut found = None;
        for _ in 0..MAX_ATTEMPTS {
            let start = border[rng.random_range(0..border.len())];
            let goals: Vec<Cell> = border
                .iter()
                .copied()
                .filter(|g| g.chebyshev(start) >= min_sep)
                .collect();
            if goals.is_empty() {
                continue;
            }
            let goal = goals[rng.random_range(0..goals.len())];
            let step_cost: Vec<Option<f64>> = (0..dims.len())
                .map(|i| {
                    let noise = if spec.oracle_noise > 0.0 {
                        rng.random_range(0.0..spec.oracle_noise)
                    } else {
                        0.0
                    };
                    spec.oracle_costs[map.class_at_index(i)].map(|c| c + noise)
                })
                .collect();
            if let Some(path) = least_cost_path(dims, &step_cost, start, goal) {
                found = Some(path);
                break;
            }
        }
        let path = found.ok_or_else(|| Error::Oracle(format!("trajectory {t}: goal unreachable")))?;
        trajs.push(Trajectory::new(path)?);
    }
    Ok(trajs)
}

/// Map and demonstrations for one seed, with ground truth from the oracle.
pub fn generate_sample(spec: &GeneratorSpec, name: impl Into<String>) -> Result<MapSample> {
    let map = generate_map(spec)?;
    let trajs = oracle_trajectories(&map, spec)?;
    MapSample::from_trajectories(name, map, trajs)
}

fn map_spec(spec: &GeneratorSpec, i: usize) -> GeneratorSpec {
    GeneratorSpec {
        seed: mix_seed(spec.seed, i as u64),
        ..spec.clone()
    }
}

/// `n_maps` samples named `map_000`, `map_001`, ...
pub fn generate_dataset(n_maps: usize, spec: &GeneratorSpec, exec: Exec) -> Result<Vec<MapSample>> {
    if n_maps == 0 {
        return Err(Error::GeneratorSpec("maps must be ≥ 1".into()));
    }
    spec.validate()?;
    exec.map(n_maps, |i| generate_sample(&map_spec(spec, i), format!("map_{i:03}")))
        .into_iter()
        .collect()
}

/// Writes `.smap`/`.traj`/`.occ` triples and `manifest.txt` into `out_dir`.
pub fn build_dataset(n_maps: usize, spec: &GeneratorSpec, out_dir: impl AsRef<Path>) -> Result<Manifest> {
    let out_dir = out_dir.as_ref();
    let samples = generate_dataset(n_maps, spec, Exec::default())?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut entries = Vec::with_capacity(samples.len());
    for s in &samples {
        let entry = ManifestEntry {
            map: format!("{}.smap", s.name).into(),
            trajs: format!("{}.traj", s.name).into(),
            occ: format!("{}.occ", s.name).into(),
        };
        io::save_map(&s.map, out_dir.join(&entry.map))?;
        io::save_trajectories(&s.trajs, out_dir.join(&entry.trajs))?;
        io::save_occupancy(&s.occ, out_dir.join(&entry.occ))?;
        entries.push(entry);
    }
    let manifest = Manifest {
        root: out_dir.to_path_buf(),
        entries,
    };
    manifest.save(out_dir.join(MANIFEST_NAME))?;
    Ok(manifest)
}
