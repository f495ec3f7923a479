//! On-disk cache of reference solutions.
//!
//! Files live at `<root>/references/<pde>-<key>.bin` where `key` hashes the
//! solver version, the PDE and every grid coordinate. Writers go through a
//! temporary file in the same directory and an atomic rename, so concurrent
//! readers only ever see complete files.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dpm_core::pdes::{PdeId, PdeSpec};
use dpm_core::refsolvers::{cache_key, solve_reference};
use dpm_core::sampling::{build_eval_grid, EvalGrid, Segment};
use dpm_core::ReferenceSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Cache,
    Solver,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Cache => "cache",
            Source::Solver => "solver",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceCache {
    dir: PathBuf,
}

impl ReferenceCache {
    pub fn new(output_root: &Path) -> Self {
        Self {
            dir: output_root.join("references"),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, pde: PdeId, grid: &EvalGrid) -> PathBuf {
        self.dir.join(format!("{}-{}.bin", pde, cache_key(pde, grid)))
    }

    /// Loads the reference for `grid`, solving and storing it on a miss.
    /// A corrupt cache file is replaced.
    pub fn get(&self, pde: PdeId, grid: &EvalGrid) -> Result<(ReferenceSolution, Source)> {
        let path = self.path_for(pde, grid);
        if let Ok(bytes) = std::fs::read(&path) {
            if let Ok(sol) = ReferenceSolution::from_bytes(&bytes) {
                if sol.grid() == grid {
                    return Ok((sol, Source::Cache));
                }
            }
        }
        let sol = solve_reference(pde, grid)
            .with_context(|| format!("solving the {pde} reference on the {} grid", grid.segment))?;
        std::fs::create_dir_all(&self.dir)
            .with_context(|| format!("creating {}", self.dir.display()))?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(&sol.to_bytes())?;
        tmp.flush()?;
        tmp.persist(&path)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok((sol, Source::Solver))
    }

    pub fn segment(&self, pde: PdeId, segment: Segment) -> Result<(ReferenceSolution, Source)> {
        self.get(pde, &build_eval_grid(&PdeSpec::get(pde), segment))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_lookup_hits_the_cache() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ReferenceCache::new(dir.path());
        let spec = PdeSpec::get(PdeId::ViscousBurgers);
        let mut grid = build_eval_grid(&spec, Segment::Test);
        grid.xs = grid.xs.iter().step_by(16).copied().collect();
        let (a, s1) = cache.get(PdeId::ViscousBurgers, &grid).unwrap();
        let (b, s2) = cache.get(PdeId::ViscousBurgers, &grid).unwrap();
        assert_eq!((s1, s2), (Source::Solver, Source::Cache));
        let bits = |r: &ReferenceSolution| r.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));

        std::fs::write(cache.path_for(PdeId::ViscousBurgers, &grid), b"junk").unwrap();
        let (c, s3) = cache.get(PdeId::ViscousBurgers, &grid).unwrap();
        assert_eq!(s3, Source::Solver);
        assert_eq!(bits(&a), bits(&c));
    }
}
