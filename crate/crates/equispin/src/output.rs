//! CSV and JSON emission through a staging directory, so a failed run
//! leaves no partial results behind.

use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

/// Fixed 17-significant-digit scientific notation, independent of locale.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub type CsvWriter = csv::Writer<BufWriter<File>>;

/// Files are written under `<out>/.staging-<pid>` and moved into `<out>`
/// by [`Staging::commit`]. Dropping an uncommitted stage deletes it.
#[derive(Debug)]
pub struct Staging {
    out: PathBuf,
    dir: PathBuf,
    names: Vec<String>,
    committed: bool,
}

impl Staging {
    pub fn new(out: &Path) -> io::Result<Self> {
        fs::create_dir_all(out)?;
        let dir = out.join(format!(".staging-{}", std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir(&dir)?;
        Ok(Self {
            out: out.to_path_buf(),
            dir,
            names: Vec::new(),
            committed: false,
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.names.push(name.to_owned());
        self.dir.join(name)
    }

    /// A CSV writer with its header row already written.
    pub fn csv(&mut self, name: &str, header: &[&str]) -> io::Result<CsvWriter> {
        let file = File::create(self.path(name))?;
        let mut w = csv::WriterBuilder::new().from_writer(BufWriter::new(file));
        w.write_record(header)?;
        Ok(w)
    }

    pub fn json(&mut self, name: &str, value: &serde_json::Value) -> io::Result<()> {
        let file = File::create(self.path(name))?;
        serde_json::to_writer_pretty(BufWriter::new(file), value)?;
        Ok(())
    }

    /// Moves every staged file into the output directory.
    pub fn commit(mut self) -> io::Result<Vec<PathBuf>> {
        let mut done = Vec::with_capacity(self.names.len());
        for name in &self.names {
            let target = self.out.join(name);
            fs::rename(self.dir.join(name), &target)?;
            done.push(target);
        }
        fs::remove_dir_all(&self.dir)?;
        self.committed = true;
        Ok(done)
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.dir);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_carry_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.5), "-2.5000000000000000e0");
        assert_eq!(num(f64::NAN), "NaN");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn staged_files_appear_only_after_commit() {
        let tmp = tempfile::tempdir().unwrap();
        let mut stage = Staging::new(tmp.path()).unwrap();
        let mut w = stage.csv("a.csv", &["x"]).unwrap();
        w.write_record([num(1.0)]).unwrap();
        w.flush().unwrap();
        drop(w);
        assert!(!tmp.path().join("a.csv").exists());
        let files = stage.commit().unwrap();
        assert_eq!(files, vec![tmp.path().join("a.csv")]);
        assert_eq!(
            fs::read_to_string(&files[0]).unwrap(),
            "x\n1.0000000000000000e0\n"
        );

        let mut stage = Staging::new(tmp.path()).unwrap();
        stage.csv("b.csv", &["x"]).unwrap();
        drop(stage);
        assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 1);
    }
}
