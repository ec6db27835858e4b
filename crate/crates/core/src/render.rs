//! Grayscale PGM images of occupancy grids.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{OccupancyGrid, SemanticMap};

/// Gray level used for unwalkable cells when a map is supplied.
pub const UNWALKABLE_GRAY: u8 = 128;

/// Binary PGM (P5) scaled so the largest value is white.
pub fn render_pgm(occ: &OccupancyGrid, map: Option<&SemanticMap>) -> Result<Vec<u8>> {
    if let Some(m) = map {
        if m.dims() != occ.dims() {
            return Err(Error::Map(format!(
                "map is {}x{}, occupancy is {}x{}",
                m.width(),
                m.height(),
                occ.width(),
                occ.height()
            )));
        }
    }
    let max = occ.values().iter().copied().fold(0.0, f64::max);
    let mut out = format!("P5\n{} {}\n255\n", occ.width(), occ.height()).into_bytes();
    out.extend(occ.values().iter().enumerate().map(|(i, &v)| {
        if map.is_some_and(|m| !m.classes().is_walkable(m.class_at_index(i))) {
            UNWALKABLE_GRAY
        } else if max > 0.0 {
            (v / max * 255.0).round() as u8
        } else {
            0
        }
    }));
    Ok(out)
}

pub fn save_pgm(occ: &OccupancyGrid, map: Option<&SemanticMap>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_pgm(occ, map)?).map_err(|e| Error::io(path, e))
}
