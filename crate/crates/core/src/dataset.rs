use crate::error::{Error, Result};
use crate::grid::{occupancy_from_trajectories, OccupancyGrid, SemanticMap, Trajectory};
use crate::io::{self, Manifest};

/// A semantic map with its demonstrations and ground-truth occupancy.
#[derive(Debug, Clone, PartialEq)]
pub struct MapSample {
    pub name: String,
    pub map: SemanticMap,
    pub trajs: Vec<Trajectory>,
    pub occ: OccupancyGrid,
}

impl MapSample {
    pub fn new(name: impl Into<String>, map: SemanticMap, trajs: Vec<Trajectory>, occ: OccupancyGrid) -> Result<Self> {
        let name = name.into();
        if occ.dims() != map.dims() {
            return Err(Error::Map(format!(
                "{name}: occupancy is {}x{}, map is {}x{}",
                occ.width(),
                occ.height(),
                map.width(),
                map.height()
            )));
        }
        for (t, traj) in trajs.iter().enumerate() {
            if let Some(step) = traj.first_out_of_bounds(map.dims()) {
                return Err(Error::TrajectoryOutOfBounds { traj: t, step });
            }
        }
        Ok(MapSample { name, map, trajs, occ })
    }

    /// Ground truth computed from the demonstrations.
    pub fn from_trajectories(name: impl Into<String>, map: SemanticMap, trajs: Vec<Trajectory>) -> Result<Self> {
        let occ = occupancy_from_trajectories(&map, &trajs)?;
        MapSample::new(name, map, trajs, occ)
    }
}

pub fn load_dataset(manifest: &Manifest) -> Result<Vec<MapSample>> {
    manifest
        .entries
        .iter()
        .map(|e| {
            let map_path = manifest.resolve(&e.map);
            let map = io::load_map(&map_path)?;
            let trajs = io::load_trajectories(manifest.resolve(&e.trajs))?;
            let occ = io::load_occupancy(manifest.resolve(&e.occ))?;
            let name = e
                .map
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            MapSample::new(name, map, trajs, occ).map_err(|err| err.in_file(map_path))
        })
        .collect()
}
