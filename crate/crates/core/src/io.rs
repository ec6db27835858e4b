//! ASCII file formats: `.smap`, `.occ`, `.traj`, `.theta` and dataset manifests.
//!
//! Every loader reports the 1-based line number of the first offending line.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{Cell, ClassTable, OccupancyGrid, SemanticMap, Trajectory};
use crate::irl::ThetaModel;

/// Sum tolerance accepted when loading an occupancy file.
pub const LOAD_MASS_TOLERANCE: f64 = 1e-4;

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    fn next(&mut self) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok((i + 1, l))
            }
            None => Err(Error::Parse {
                line: self.last + 1,
                msg: "unexpected end of file".into(),
            }),
        }
    }

    fn finish(mut self) -> Result<()> {
        for (i, l) in self.inner.by_ref() {
            if !l.trim().is_empty() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "trailing content".into(),
                });
            }
        }
        Ok(())
    }
}

fn parse_fields<T: FromStr>(line: usize, text: &str, what: &str) -> Result<Vec<T>> {
    text.split_whitespace()
        .map(|tok| {
            tok.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad {what} {tok:?}"),
            })
        })
        .collect()
}

fn expect_count<T>(line: usize, values: Vec<T>, expected: usize, what: &str) -> Result<Vec<T>> {
    if values.len() != expected {
        return Err(Error::DimensionMismatch {
            line,
            msg: format!("expected {expected} {what}, found {}", values.len()),
        });
    }
    Ok(values)
}

fn header(lines: &mut Lines, magic: &str) -> Result<()> {
    let (n, l) = lines.next()?;
    if l.trim() != format!("{magic} 1") {
        return Err(Error::MalformedHeader {
            line: n,
            msg: format!("expected `{magic} 1`, found {:?}", l.trim()),
        });
    }
    Ok(())
}

fn dims_line(lines: &mut Lines, extra: usize) -> Result<(usize, Vec<usize>)> {
    let (n, l) = lines.next()?;
    let v: Vec<usize> = parse_fields(n, l, "dimension").map_err(|_| Error::MalformedHeader {
        line: n,
        msg: format!("bad dimension line {:?}", l.trim()),
    })?;
    if v.len() != 2 + extra || v.contains(&0) {
        return Err(Error::MalformedHeader {
            line: n,
            msg: format!("bad dimension line {:?}", l.trim()),
        });
    }
    Ok((n, v))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------- maps

pub fn map_to_string(map: &SemanticMap) -> String {
    let k = map.classes().len();
    let mut out = format!("SMAP 1\n{} {} {}\n", map.width(), map.height(), k);
    out.push_str(&map.classes().names().join(" "));
    out.push('\n');
    let flags: Vec<&str> = map
        .classes()
        .walkable()
        .iter()
        .map(|&w| if w { "1" } else { "0" })
        .collect();
    out.push_str(&flags.join(" "));
    out.push('\n');
    for row in map.cells().chunks(map.width()) {
        let row: Vec<String> = row.iter().map(u16::to_string).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn map_from_str(text: &str) -> Result<SemanticMap> {
    let mut lines = Lines::new(text);
    header(&mut lines, "SMAP")?;
    let (dn, dims) = dims_line(&mut lines, 1)?;
    let (width, height, k) = (dims[0], dims[1], dims[2]);

    let (n, l) = lines.next()?;
    let names: Vec<String> = l.split_whitespace().map(str::to_owned).collect();
    let names = expect_count(n, names, k, "class names")?;

    let (n, l) = lines.next()?;
    let flags: Vec<u8> = parse_fields(n, l, "walkability flag")?;
    let flags = expect_count(n, flags, k, "walkability flags")?;
    if let Some(f) = flags.iter().find(|&&f| f > 1) {
        return Err(Error::Parse {
            line: n,
            msg: format!("walkability flag {f} is not 0 or 1"),
        });
    }
    let classes = ClassTable::new(names, flags.iter().map(|&f| f == 1).collect()).map_err(|e| Error::Parse {
        line: dn + 1,
        msg: e.to_string(),
    })?;

    let mut cells = Vec::with_capacity(width * height);
    for _ in 0..height {
        let (n, l) = lines.next()?;
        let row: Vec<u64> = parse_fields(n, l, "class id")?;
        let row = expect_count(n, row, width, "cells")?;
        for id in row {
            if id >= k as u64 {
                return Err(Error::ClassIdOverflow {
                    line: n,
                    id,
                    classes: k,
                });
            }
            cells.push(id as u16);
        }
    }
    lines.finish()?;
    SemanticMap::new(width, height, classes, cells)
}

pub fn save_map(map: &SemanticMap, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &map_to_string(map))
}

pub fn load_map(path: impl AsRef<Path>) -> Result<SemanticMap> {
    let path = path.as_ref();
    map_from_str(&read_file(path)?).map_err(|e| e.in_file(path))
}

// ---------------------------------------------------------------- occupancy

pub fn occupancy_to_string(occ: &OccupancyGrid) -> String {
    let mut out = format!("OCC 1\n{} {}\n", occ.width(), occ.height());
    for row in occ.values().chunks(occ.width()) {
        let row: Vec<String> = row.iter().map(|v| format!("{v:.8e}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn occupancy_from_str(text: &str) -> Result<OccupancyGrid> {
    let mut lines = Lines::new(text);
    header(&mut lines, "OCC")?;
    let (_, dims) = dims_line(&mut lines, 0)?;
    let (width, height) = (dims[0], dims[1]);
    let mut values = Vec::with_capacity(width * height);
    let mut last = 0;
    for _ in 0..height {
        let (n, l) = lines.next()?;
        let row: Vec<f64> = parse_fields(n, l, "probability")?;
        let row = expect_count(n, row, width, "values")?;
        if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Parse {
                line: n,
                msg: format!("bad probability {v}"),
            });
        }
        values.extend(row);
        last = n;
    }
    lines.finish()?;
    let mass: f64 = values.iter().sum();
    if (mass - 1.0).abs() > LOAD_MASS_TOLERANCE {
        return Err(Error::OccupancyMass { line: last, mass });
    }
    if (mass - 1.0).abs() > crate::grid::MASS_TOLERANCE {
        values.iter_mut().for_each(|v| *v /= mass);
    }
    OccupancyGrid::new(width, height, values)
}

pub fn save_occupancy(occ: &OccupancyGrid, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &occupancy_to_string(occ))
}

pub fn load_occupancy(path: impl AsRef<Path>) -> Result<OccupancyGrid> {
    let path = path.as_ref();
    occupancy_from_str(&read_file(path)?).map_err(|e| e.in_file(path))
}

// ---------------------------------------------------------------- trajectories

pub fn trajectories_to_string(trajs: &[Trajectory]) -> String {
    let mut out = format!("TRAJ 1\n{}\n", trajs.len());
    for t in trajs {
        let _ = writeln!(out, "{}", t.len());
        for s in t.states() {
            let _ = writeln!(out, "{} {}", s.x, s.y);
        }
    }
    out
}

pub fn trajectories_from_str(text: &str) -> Result<Vec<Trajectory>> {
    let mut lines = Lines::new(text);
    header(&mut lines, "TRAJ")?;
    let (n, l) = lines.next()?;
    let count: usize = l.trim().parse().map_err(|_| Error::MalformedHeader {
        line: n,
        msg: format!("bad trajectory count {:?}", l.trim()),
    })?;
    let mut trajs = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, l) = lines.next()?;
        let len: usize = l.trim().parse().map_err(|_| Error::Parse {
            line: n,
            msg: format!("bad trajectory length {:?}", l.trim()),
        })?;
        if len < 2 {
            return Err(Error::Parse {
                line: n,
                msg: format!("trajectory length {len} is shorter than 2"),
            });
        }
        let mut states: Vec<Cell> = Vec::with_capacity(len);
        for index in 0..len {
            let (n, l) = lines.next()?;
            let xy: Vec<usize> = parse_fields(n, l, "coordinate")?;
            let xy = expect_count(n, xy, 2, "coordinates")?;
            let s = Cell::new(xy[0], xy[1]);
            if let Some(&prev) = states.last() {
                if !prev.is_adjacent(s) {
                    return Err(Error::NonAdjacentStep { line: n, index });
                }
            }
            states.push(s);
        }
        trajs.push(Trajectory::new(states).expect("validated while parsing"));
    }
    lines.finish()?;
    Ok(trajs)
}

pub fn save_trajectories(trajs: &[Trajectory], path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &trajectories_to_string(trajs))
}

pub fn load_trajectories(path: impl AsRef<Path>) -> Result<Vec<Trajectory>> {
    let path = path.as_ref();
    trajectories_from_str(&read_file(path)?).map_err(|e| e.in_file(path))
}

// ---------------------------------------------------------------- models

fn join_floats(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

pub fn theta_to_string(model: &ThetaModel) -> String {
    format!(
        "THETA 1\n{} {}\n{}\n{}\n{}\n",
        model.classes().len(),
        model.r0(),
        model.classes().join(" "),
        join_floats(model.theta()),
        join_floats(model.endpoint_prior())
    )
}

pub fn theta_from_str(text: &str) -> Result<ThetaModel> {
    let mut lines = Lines::new(text);
    header(&mut lines, "THETA")?;
    let (n, l) = lines.next()?;
    let fields: Vec<&str> = l.split_whitespace().collect();
    let bad = || Error::MalformedHeader {
        line: n,
        msg: format!("expected `<K> <r0>`, found {:?}", l.trim()),
    };
    if fields.len() != 2 {
        return Err(bad());
    }
    let k: usize = fields[0].parse().map_err(|_| bad())?;
    let r0: f64 = fields[1].parse().map_err(|_| bad())?;

    let (n, l) = lines.next()?;
    let names: Vec<String> = l.split_whitespace().map(str::to_owned).collect();
    let names = expect_count(n, names, k, "class names")?;
    let (n, l) = lines.next()?;
    let theta = expect_count(n, parse_fields(n, l, "weight")?, k, "weights")?;
    let (n, l) = lines.next()?;
    let prior = expect_count(n, parse_fields(n, l, "prior value")?, k, "prior values")?;
    lines.finish()?;
    ThetaModel::new(names, theta, r0, prior).map_err(|e| Error::Parse {
        line: n,
        msg: e.to_string(),
    })
}

pub fn save_theta(model: &ThetaModel, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &theta_to_string(model))
}

pub fn load_theta(path: impl AsRef<Path>) -> Result<ThetaModel> {
    let path = path.as_ref();
    theta_from_str(&read_file(path)?).map_err(|e| e.in_file(path))
}

// ---------------------------------------------------------------- manifests

/// One dataset entry: semantic map, demonstrations, ground-truth occupancy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub map: PathBuf,
    pub trajs: PathBuf,
    pub occ: PathBuf,
}

/// Dataset index. Relative entries resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = writeln!(out, "{} {} {}", e.map.display(), e.trajs.display(), e.occ.display());
        }
        out
    }

    pub fn parse(text: &str, root: impl Into<PathBuf>) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, l) in text.lines().enumerate() {
            if l.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected 3 paths, found {}", f.len()),
                });
            }
            entries.push(ManifestEntry {
                map: f[0].into(),
                trajs: f[1].into(),
                occ: f[2].into(),
            });
        }
        Ok(Manifest {
            root: root.into(),
            entries,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Manifest::parse(&read_file(path)?, root).map_err(|e| e.in_file(path))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.to_text())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }
}
