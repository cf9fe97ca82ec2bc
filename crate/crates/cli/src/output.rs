use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use diffmourre::Result;
use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize)]
pub struct Meta<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_hash: &'a str,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    meta: &'a Meta<'a>,
    result: &'a T,
}

/// Writes the files of one command; every file carries the tool version and config hash.
pub struct Sink<'a> {
    pub dir: PathBuf,
    pub meta: Meta<'a>,
}

impl<'a> Sink<'a> {
    pub fn new(dir: &Path, command: &'a str, config_hash: &'a str) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), meta: Meta { tool: "diffmourre", version: VERSION, command, config_hash } })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn json_text<T: Serialize>(&self, value: &T) -> Result<String> {
        let mut text = serde_json::to_string_pretty(&Envelope { meta: &self.meta, result: value })?;
        text.push('\n');
        Ok(text)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, self.json_text(value)?)?;
        Ok(path)
    }

    /// CSV with a leading `#` provenance line ahead of the header row.
    pub fn csv(&self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<PathBuf> {
        let mut buf = Vec::new();
        writeln!(buf, "# {} {} {} config={}", self.meta.tool, self.meta.version, self.meta.command, self.meta.config_hash)?;
        body(&mut buf)?;
        let path = self.path(name);
        fs::write(&path, buf)?;
        Ok(path)
    }

    pub fn svg(&self, name: &str, doc: svg::Document) -> Result<PathBuf> {
        let path = self.path(name);
        let doc = doc.add(svg::node::Comment::new(format!(
            "{} {} config={}",
            self.meta.tool, self.meta.version, self.meta.config_hash
        )));
        svg::save(&path, &doc)?;
        Ok(path)
    }
}

pub fn e16(x: f64) -> String {
    format!("{x:.16e}")
}
