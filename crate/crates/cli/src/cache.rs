//! On-disk calibration cache.
//!
//! Each threshold is stored in its own file, named by the SHA-256 of the
//! inputs that determine it, so reruns only calibrate what is missing.

use crate::error::CliError;
use crate::output::write_atomic;
use samtest::harness::{calibrate_sobolev_k, calibrate_threshold, CalibrationTable, StatisticId};
use samtest::harness::{Calibration, CalibrationKey};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Overrides the cache directory.
pub const CACHE_ENV: &str = "SAMTEST_CACHE_DIR";

const FORMAT: &str = "samtest-calibration-v1";

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    format: String,
    statistic: String,
    p: u64,
    level: f64,
    reps: u64,
    seed: u64,
    value: f64,
}

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
    hits: std::cell::Cell<usize>,
    misses: std::cell::Cell<usize>,
}

impl Cache {
    /// `$SAMTEST_CACHE_DIR` if set, otherwise `out/cache`.
    pub fn locate(out: &Path) -> Self {
        let dir = std::env::var_os(CACHE_ENV).map(PathBuf::from).unwrap_or_else(|| out.join("cache"));
        Cache::at(dir)
    }

    pub fn at(dir: PathBuf) -> Self {
        Cache { dir, hits: 0.into(), misses: 0.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn hits(&self) -> usize {
        self.hits.get()
    }

    pub fn misses(&self) -> usize {
        self.misses.get()
    }

    fn path_for(&self, key: &str) -> PathBuf {
        let digest = hex::encode(Sha256::digest(format!("{FORMAT}|{key}").as_bytes()));
        self.dir.join(format!("{digest}.toml"))
    }

    fn lookup(&self, key: &str, statistic: &str, p: u64, level: f64, reps: u64, seed: u64) -> Option<f64> {
        let text = std::fs::read_to_string(self.path_for(key)).ok()?;
        let e: Entry = toml::from_str(&text).ok()?;
        let matches = e.format == FORMAT
            && e.statistic == statistic
            && e.p == p
            && e.level.to_bits() == level.to_bits()
            && e.reps == reps
            && e.seed == seed;
        matches.then_some(e.value)
    }

    #[allow(clippy::too_many_arguments)]
    fn get_or(
        &self,
        key: &str,
        statistic: &str,
        p: u64,
        level: f64,
        reps: u64,
        seed: u64,
        compute: impl FnOnce() -> Result<f64, CliError>,
    ) -> Result<f64, CliError> {
        if let Some(v) = self.lookup(key, statistic, p, level, reps, seed) {
            self.hits.set(self.hits.get() + 1);
            return Ok(v);
        }
        self.misses.set(self.misses.get() + 1);
        let value = compute()?;
        let entry = Entry { format: FORMAT.into(), statistic: statistic.into(), p, level, reps, seed, value };
        write_atomic(&self.path_for(key), toml::to_string(&entry).expect("entry serializes").as_bytes())?;
        Ok(value)
    }

    /// Calibrated threshold for one statistic.
    pub fn threshold(&self, stat: StatisticId, p: u64, level: f64, reps: u64, seed: u64) -> Result<f64, CliError> {
        let name = stat.to_string();
        let key = format!("{name}|{p}|{:016x}|{reps}|{seed}", level.to_bits());
        self.get_or(&key, &name, p, level, reps, seed, || {
            Ok(calibrate_threshold(stat, p, level, reps, seed)?.threshold)
        })
    }

    /// Thresholds for every statistic at `level`, as a table.
    pub fn table(
        &self,
        stats: &[StatisticId],
        p: u64,
        level: f64,
        reps: u64,
        seed: u64,
    ) -> Result<CalibrationTable, CliError> {
        let mut table = CalibrationTable::default();
        for &stat in stats {
            let threshold = self.threshold(stat, p, level, reps, seed)?;
            table.insert(Calibration { key: CalibrationKey::new(stat, p, level), threshold, reps, seed });
        }
        Ok(table)
    }

    /// Calibrated constant of the smoothness-adaptive test.
    pub fn sobolev_k(&self, grid: &[u64], p: u64, n: f64, level: f64, reps: u64, seed: u64) -> Result<f64, CliError> {
        let grid_s = grid.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(",");
        let name = format!("sobolev-k(grid=[{grid_s}], n={n:?})");
        let key = format!("{name}|{p}|{:016x}|{reps}|{seed}", level.to_bits());
        self.get_or(&key, &name, p, level, reps, seed, || {
            Ok(calibrate_sobolev_k(grid, p, n, level, reps, seed)?)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_lookup_hits() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::at(dir.path().to_path_buf());
        let stat = StatisticId::dense(2);
        let a = cache.threshold(stat, 10, 0.1, 200, 4).unwrap();
        let b = cache.threshold(stat, 10, 0.1, 200, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!((cache.hits(), cache.misses()), (1, 1));
        // A different seed is a different entry.
        cache.threshold(stat, 10, 0.1, 200, 5).unwrap();
        assert_eq!(cache.misses(), 2);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
        // Matches a direct calibration bit for bit.
        assert_eq!(a, calibrate_threshold(stat, 10, 0.1, 200, 4).unwrap().threshold);
    }

    #[test]
    fn corrupt_entries_are_recomputed() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::at(dir.path().to_path_buf());
        let stat = StatisticId::sparse(3, 1.0);
        let a = cache.threshold(stat, 10, 0.1, 200, 4).unwrap();
        for f in std::fs::read_dir(dir.path()).unwrap() {
            std::fs::write(f.unwrap().path(), "garbage").unwrap();
        }
        assert_eq!(cache.threshold(stat, 10, 0.1, 200, 4).unwrap(), a);
        assert_eq!(cache.misses(), 2);
    }
}
