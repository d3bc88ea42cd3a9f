use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgMatches, Command};

use crate::{CliError, CliResult};

/// Output directory with atomic file writes.
pub struct Output {
    dir: PathBuf,
    written: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Writes `name` through a temporary file and a rename.
    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let target = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        let io = |e: std::io::Error| CliError::Failure(format!("writing {}: {e}", target.display()));
        let mut file = fs::File::create(&tmp).map_err(io)?;
        file.write_all(contents.as_bytes()).map_err(io)?;
        file.sync_all().map_err(io)?;
        fs::rename(&tmp, &target).map_err(io)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

/// `key = value` lines, in insertion order.
#[derive(Default)]
pub struct KeyValues(Vec<(String, String)>);

impl KeyValues {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.0.push((key.into(), value.to_string()));
    }

    pub fn real(&mut self, key: impl Into<String>, value: f64) {
        self.push(key, real(value));
    }

    pub fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn reals(v: &[f64]) -> String {
    v.iter().map(|x| real(*x)).collect::<Vec<_>>().join(",")
}

/// Every argument of the invocation, defaults included, sorted by name
/// within each subcommand level. `command` is the unbuilt definition, so
/// global flags are listed only at the top level.
pub fn resolved_arguments(command: &Command, matches: &ArgMatches, prefix: &str, out: &mut KeyValues) {
    let mut ids: Vec<&str> = command.get_arguments().map(|a| a.get_id().as_str()).collect();
    ids.sort_unstable();
    for id in ids {
        if let Ok(Some(raw)) = matches.try_get_raw(id) {
            let values: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
            out.push(format!("{prefix}{id}"), values.join(","));
        }
    }
    if let Some((name, sub)) = matches.subcommand() {
        out.push(format!("{prefix}command"), name);
        if let Some(sub_command) = command.find_subcommand(name) {
            resolved_arguments(sub_command, sub, &format!("{prefix}{name}."), out);
        }
    }
}
