use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use protoabs::{Corpus, Error, LabelVector};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

pub fn read_corpus_and_labels(corpus: &Path, labels: &Path) -> Result<(Corpus, LabelVector)> {
    let corpus: Corpus = read_json(corpus)?;
    let labels: LabelVector = read_json(labels)?;
    check_lengths(corpus.len(), &labels)?;
    Ok((corpus, labels))
}

pub fn check_lengths(n: usize, labels: &LabelVector) -> Result<()> {
    if labels.len() != n {
        return Err(Error::InvalidInput(format!("{} labels for {n} messages", labels.len())).into());
    }
    Ok(())
}

/// Output directory with write-then-rename file creation.
pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> Result<Self> {
        fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(OutDir(path.to_owned()))
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let target = self.0.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.0)
            .with_context(|| format!("creating temporary file in {}", self.0.display()))?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&target).with_context(|| format!("writing {}", target.display()))?;
        Ok(target)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }
}
