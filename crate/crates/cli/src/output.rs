use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use serde::Serialize;

use crate::CliError;

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: PathBuf) -> Result<Self, CliError> {
        std::fs::create_dir_all(&root).map_err(|e| CliError::Io(format!("{}: {e}", root.display())))?;
        Ok(Self { root })
    }

    fn open(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.root.join(name);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    /// Writes `value` as pretty JSON to `name` and echoes it on stdout.
    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        let mut w = self.open(name)?;
        writeln!(w, "{text}")
            .and_then(|_| w.flush())
            .map_err(|e| CliError::Io(e.to_string()))?;
        println!("{text}");
        Ok(())
    }

    /// Hands a buffered writer for `name` to `write` and flushes it.
    pub fn csv<F>(&self, name: &str, write: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> bn_pricer_core::Result<()>,
    {
        let mut w = self.open(name)?;
        write(&mut w)?;
        w.flush().map_err(|e| CliError::Io(e.to_string()))
    }
}
