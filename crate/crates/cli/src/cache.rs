//! Towers stored under `<out>/cache/<sha256>.json`, keyed by (spec, p, top).

use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::thread::sleep;
use std::time::{Duration, Instant};

use serde_json::json;
use sha2::{Digest, Sha256};

use padic_shift::tower::{SequenceSpec, Tower};

use crate::{canonical_json, io_err, Failure, Run};

const FORMAT: u32 = 1;
const LOCK_WAIT: Duration = Duration::from_secs(600);

pub(crate) fn key(spec: &SequenceSpec, p: u64, top: u32) -> String {
    let doc = json!({"format": FORMAT, "spec": spec, "p": p, "top": top});
    hex::encode(Sha256::digest(canonical_json(&doc).as_bytes()))
}

/// Removes the lock file when dropped.
struct Lock(PathBuf);

impl Lock {
    fn acquire(path: PathBuf) -> Run<Lock> {
        let start = Instant::now();
        loop {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(_) => return Ok(Lock(path)),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    if start.elapsed() > LOCK_WAIT {
                        return Err(Failure::Check(format!("{} is held; remove it if stale", path.display())));
                    }
                    sleep(Duration::from_millis(50));
                }
                Err(e) => return Err(io_err(&path, e)),
            }
        }
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn load(path: &Path, spec: &SequenceSpec, p: u64, top: u32) -> Option<Tower> {
    let text = fs::read_to_string(path).ok()?;
    let t: Tower = serde_json::from_str(&text).ok()?;
    (t.p() == p && t.top() == top && t.spec() == Some(spec)).then_some(t)
}

pub(crate) fn tower(
    dir: &Path,
    spec: &SequenceSpec,
    p: u64,
    top: u32,
    build: impl FnOnce() -> padic_shift::Result<Tower>,
) -> Run<Tower> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let k = key(spec, p, top);
    let path = dir.join(format!("{k}.json"));
    let _lock = Lock::acquire(dir.join(format!("{k}.lock")))?;
    if let Some(t) = load(&path, spec, p, top) {
        return Ok(t);
    }
    let t = build()?;
    let tmp = dir.join(format!("{k}.tmp"));
    fs::write(&tmp, canonical_json(&t)).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, &path).map_err(|e| io_err(&path, e))?;
    Ok(t)
}
