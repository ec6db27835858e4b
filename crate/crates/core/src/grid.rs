//! Semantic maps, trajectories and occupancy distributions.
//!
//! All grids are stored row-major with row 0 at the top; a state is addressed
//! either by its [`Cell`] coordinates or by its flat index `y * width + x`.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Tolerance for the sum-to-one invariant of an [`OccupancyGrid`].
pub const MASS_TOLERANCE: f64 = 1e-6;

/// 8-connected moves as `(dx, dy)`, starting east and turning counter-clockwise.
pub const MOVES: [(isize, isize); 8] = [(1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }

    pub fn chebyshev(self, other: Cell) -> usize {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }

    pub fn is_adjacent(self, other: Cell) -> bool {
        self.chebyshev(other) == 1
    }
}

impl From<(usize, usize)> for Cell {
    fn from((x, y): (usize, usize)) -> Self {
        Cell { x, y }
    }
}

/// Width and height of a grid, with index arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub width: usize,
    pub height: usize,
}

impl Dims {
    pub fn new(width: usize, height: usize) -> Self {
        Dims { width, height }
    }

    pub fn len(self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    pub fn contains(self, c: Cell) -> bool {
        c.x < self.width && c.y < self.height
    }

    pub fn index(self, c: Cell) -> usize {
        c.y * self.width + c.x
    }

    pub fn cell(self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    /// Neighbour reached by `MOVES[action]`, if it lies inside the grid.
    pub fn step(self, c: Cell, action: usize) -> Option<Cell> {
        let (dx, dy) = MOVES[action];
        let x = c.x.checked_add_signed(dx)?;
        let y = c.y.checked_add_signed(dy)?;
        let next = Cell::new(x, y);
        self.contains(next).then_some(next)
    }

    pub fn cells(self) -> impl Iterator<Item = Cell> {
        (0..self.len()).map(move |i| self.cell(i))
    }
}

/// Names and walkability flags of the K semantic classes of a map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassTable {
    names: Vec<String>,
    walkable: Vec<bool>,
}

impl ClassTable {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>, walkable: Vec<bool>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::ClassTable("at least one class required".into()));
        }
        if names.len() != walkable.len() {
            return Err(Error::ClassTable(format!(
                "{} names but {} walkability flags",
                names.len(),
                walkable.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if name.is_empty() || name.chars().any(char::is_whitespace) {
                return Err(Error::ClassTable(format!("bad class name {name:?}")));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::ClassTable(format!("duplicate class name {name:?}")));
            }
        }
        if !walkable.iter().any(|&w| w) {
            return Err(Error::ClassTable("no walkable class".into()));
        }
        Ok(ClassTable { names, walkable })
    }

    /// The four-class urban vocabulary used by the synthetic generator.
    pub fn urban() -> Self {
        ClassTable::new(
            ["sidewalk", "grass", "road", "obstacle"],
            vec![true, true, false, false],
        )
        .expect("static table is valid")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, class: usize) -> &str {
        &self.names[class]
    }

    pub fn walkable(&self) -> &[bool] {
        &self.walkable
    }

    pub fn is_walkable(&self, class: usize) -> bool {
        self.walkable[class]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticMap {
    dims: Dims,
    classes: ClassTable,
    cells: Vec<u16>,
}

impl SemanticMap {
    pub fn new(width: usize, height: usize, classes: ClassTable, cells: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Map(format!("dimensions {width}x{height} must be positive")));
        }
        if cells.len() != width * height {
            return Err(Error::Map(format!("{} cells for a {width}x{height} grid", cells.len())));
        }
        if let Some(&bad) = cells.iter().find(|&&c| c as usize >= classes.len()) {
            return Err(Error::Map(format!(
                "class id {bad} out of range for {} classes",
                classes.len()
            )));
        }
        Ok(SemanticMap {
            dims: Dims::new(width, height),
            classes,
            cells,
        })
    }

    /// A map filled with a single class.
    pub fn filled(width: usize, height: usize, classes: ClassTable, class: u16) -> Result<Self> {
        SemanticMap::new(width, height, classes, vec![class; width * height])
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn width(&self) -> usize {
        self.dims.width
    }

    pub fn height(&self) -> usize {
        self.dims.height
    }

    pub fn classes(&self) -> &ClassTable {
        &self.classes
    }

    pub fn cells(&self) -> &[u16] {
        &self.cells
    }

    pub fn class_at(&self, c: Cell) -> usize {
        self.cells[self.dims.index(c)] as usize
    }

    pub fn class_at_index(&self, i: usize) -> usize {
        self.cells[i] as usize
    }

    pub fn set(&mut self, c: Cell, class: u16) {
        assert!((class as usize) < self.classes.len());
        let i = self.dims.index(c);
        self.cells[i] = class;
    }

    /// One-hot feature response of a state.
    pub fn features(&self, c: Cell) -> Vec<f64> {
        let mut f = vec![0.0; self.classes.len()];
        f[self.class_at(c)] = 1.0;
        f
    }

    pub fn is_walkable(&self, c: Cell) -> bool {
        self.classes.is_walkable(self.class_at(c))
    }

    /// Number of cells of each class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for &c in &self.cells {
            counts[c as usize] += 1;
        }
        counts
    }
}

/// `true` where the cell's class is flagged walkable.
pub fn walkable_mask(map: &SemanticMap) -> Vec<bool> {
    map.cells.iter().map(|&c| map.classes.is_walkable(c as usize)).collect()
}

/// An ordered, 8-connected sequence of at least two states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    states: Vec<Cell>,
}

impl Trajectory {
    pub fn new(states: Vec<Cell>) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::Trajectory(format!("length {} is shorter than 2", states.len())));
        }
        if let Some(i) = states.windows(2).position(|w| !w[0].is_adjacent(w[1])) {
            return Err(Error::Trajectory(format!("non-adjacent step at index {}", i + 1)));
        }
        Ok(Trajectory { states })
    }

    pub fn states(&self) -> &[Cell] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn start(&self) -> Cell {
        self.states[0]
    }

    pub fn goal(&self) -> Cell {
        *self.states.last().expect("length >= 2")
    }

    /// Index of the first state outside `dims`, if any.
    pub fn first_out_of_bounds(&self, dims: Dims) -> Option<usize> {
        self.states.iter().position(|&s| !dims.contains(s))
    }
}

/// Probability mass per state, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    dims: Dims,
    values: Vec<f64>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::Occupancy(format!(
                "{} values for a {width}x{height} grid",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Occupancy(format!("bad probability {v}")));
        }
        let mass: f64 = values.iter().sum();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Occupancy(format!("mass {mass} ≠ 1")));
        }
        Ok(OccupancyGrid {
            dims: Dims::new(width, height),
            values,
        })
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(width: usize, height: usize, weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Occupancy(format!("total weight {total} is not positive")));
        }
        OccupancyGrid::new(width, height, weights.iter().map(|w| w / total).collect())
    }

    pub fn from_counts(width: usize, height: usize, counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::Occupancy("no visits".into()));
        }
        let total = total as f64;
        OccupancyGrid::new(width, height, counts.iter().map(|&c| c as f64 / total).collect())
    }

    pub fn uniform(width: usize, height: usize) -> Self {
        let n = width * height;
        OccupancyGrid {
            dims: Dims::new(width, height),
            values: vec![1.0 / n as f64; n],
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn width(&self) -> usize {
        self.dims.width
    }

    pub fn height(&self) -> usize {
        self.dims.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, c: Cell) -> f64 {
        self.values[self.dims.index(c)]
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Per-state visit counts over a set of trajectories; every occurrence counts.
pub fn visit_counts(map: &SemanticMap, trajs: &[Trajectory]) -> Result<Vec<u64>> {
    if trajs.is_empty() {
        return Err(Error::NoTrajectories);
    }
    let dims = map.dims();
    let mut counts = vec![0u64; dims.len()];
    for (t, traj) in trajs.iter().enumerate() {
        if let Some(step) = traj.first_out_of_bounds(dims) {
            return Err(Error::TrajectoryOutOfBounds { traj: t, step });
        }
        for &s in traj.states() {
            counts[dims.index(s)] += 1;
        }
    }
    Ok(counts)
}

/// Occupancy as normalized visitation frequency, `p(s) = D(s) / sum D`.
pub fn occupancy_from_trajectories(map: &SemanticMap, trajs: &[Trajectory]) -> Result<OccupancyGrid> {
    let counts = visit_counts(map, trajs)?;
    OccupancyGrid::from_counts(map.width(), map.height(), &counts)
}
