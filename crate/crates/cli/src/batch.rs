//! Running every scenario file of a directory, optionally in parallel.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::bundled;
use crate::error::{CliError, Result};
use crate::report::{run_to_dir, RunReport};
use crate::schema::Scenario;

/// Outcome of one file of a batch.
pub struct BatchEntry {
    pub path: PathBuf,
    pub result: Result<RunReport>,
}

/// `*.cfg` files directly inside `dir`, sorted by path.
pub fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "cfg") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Per-scenario seed derived from the batch seed and the scenario name (FNV-1a, then SplitMix64).
pub fn derive_seed(batch_seed: u64, name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = batch_seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Validates every file, then runs the valid ones on `jobs` worker threads.
///
/// Results come back in file order regardless of scheduling.
pub fn run_batch(dir: &Path, jobs: usize, seed: Option<u64>, root: &Path) -> Result<Vec<BatchEntry>> {
    let files = scenario_files(dir)?;
    let mut prepared: Vec<(PathBuf, Result<Scenario>)> = Vec::new();
    let mut names = BTreeSet::new();
    for path in files {
        let sc = bundled::load(&path.to_string_lossy()).and_then(|mut sc| {
            if !names.insert(sc.name().to_string()) {
                return Err(sc.problem(format!("scenario name `{}` is used by another file of the batch", sc.name())));
            }
            if let Some(s) = seed {
                sc.set_seed(derive_seed(s, sc.name()));
            }
            Ok(sc)
        });
        prepared.push((path, sc));
    }

    let slots: Vec<Mutex<Option<Result<RunReport>>>> = prepared.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs.max(1).min(prepared.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((_, sc)) = prepared.get(i) else { break };
                if let Ok(sc) = sc {
                    let result = run_to_dir(sc, root);
                    *slots[i].lock().expect("result slot") = Some(result);
                }
            });
        }
    });

    Ok(prepared
        .into_iter()
        .zip(slots)
        .map(|((path, sc), slot)| {
            let result = match sc {
                Ok(_) => slot.into_inner().expect("result slot").expect("every valid scenario ran"),
                Err(e) => Err(e),
            };
            BatchEntry { path, result }
        })
        .collect())
}
