//! Output directories. A command takes `.vf.lock` for as long as it runs
//! and leaves `config.toml` and `run.json` behind so the directory
//! describes how it was made.

use std::fs::{self, OpenOptions};
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vf_core::dataset::write_atomic;

use crate::config::RunConfig;
use crate::error::{infra, user, CliError};

pub const LOCK_FILE: &str = ".vf.lock";
pub const CONFIG_FILE: &str = "config.toml";
pub const RUN_FILE: &str = "run.json";
pub const ERROR_FILE: &str = "error.json";

#[derive(Debug, Serialize)]
struct RunInfo<'a> {
    command: &'a str,
    seed: Option<u64>,
    vf_core_version: &'a str,
    vf_cli_version: &'a str,
    config_file: &'a str,
}

#[derive(Debug)]
pub struct RunDir {
    path: PathBuf,
}

impl RunDir {
    pub fn open(path: &Path, command: &str, config: &RunConfig) -> Result<RunDir, CliError> {
        fs::create_dir_all(path).map_err(|e| user(format!("cannot create {}: {e}", path.display())))?;
        let lock = path.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(_) => {}
            Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                return Err(user(format!(
                    "{} is in use by another command (remove {} if that command is gone)",
                    path.display(),
                    lock.display()
                )))
            }
            Err(e) => return Err(infra(format!("cannot lock {}: {e}", path.display()))),
        }
        let dir = RunDir { path: path.to_path_buf() };
        let _ = fs::remove_file(path.join(ERROR_FILE));
        dir.write(CONFIG_FILE, config.to_toml().as_bytes())?;
        let info = RunInfo {
            command,
            seed: config.seed,
            vf_core_version: vf_core::VERSION,
            vf_cli_version: env!("CARGO_PKG_VERSION"),
            config_file: CONFIG_FILE,
        };
        dir.write_json(RUN_FILE, &info)?;
        Ok(dir)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn join(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn subdir(&self, name: &str) -> Result<PathBuf, CliError> {
        let p = self.path.join(name);
        fs::create_dir_all(&p).map_err(|e| infra(format!("cannot create {}: {e}", p.display())))?;
        Ok(p)
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let target = self.path.join(name);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent).map_err(|e| infra(format!("cannot create {}: {e}", parent.display())))?;
        }
        write_atomic(&target, bytes).map_err(infra)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(infra)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}

impl Drop for RunDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(self.path.join(LOCK_FILE));
    }
}
