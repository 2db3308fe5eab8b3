use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use benchsubset::fixtures;
use benchsubset::manifest::{sha256_hex, InputChecksum, RunManifest};
use benchsubset::score_table::{load_scores, prepare, FilterConfig, NormalizationTable};
use benchsubset::PreparedDataset;
use serde::Serialize;

use crate::cli::DataArgs;

pub const EMBEDDED_NORMS: &str = "<embedded normalization table>";

/// Output directory plus the manifest being accumulated for this run.
pub struct Run {
    pub out: PathBuf,
    pub manifest: RunManifest,
    pub quiet: bool,
    pub json: bool,
    started: Instant,
}

impl Run {
    pub fn new(out: &Path, command: &str, quiet: bool, json: bool, threads: usize) -> Result<Self> {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let mut manifest = RunManifest::new(command, serde_json::Value::Null);
        manifest.workers = if threads == 0 {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        } else {
            threads
        };
        Ok(Self {
            out: out.to_path_buf(),
            manifest,
            quiet,
            json,
            started: Instant::now(),
        })
    }

    pub fn add_input(&mut self, role: &str, path: &Path) -> Result<()> {
        self.manifest.add_input(role, path)?;
        Ok(())
    }

    pub fn add_embedded(&mut self, role: &str, label: &str, bytes: &[u8]) {
        self.manifest.inputs.push(InputChecksum {
            role: role.to_string(),
            path: label.to_string(),
            sha256: sha256_hex(bytes),
        });
    }

    /// `# inputs: role=sha;...` line placed at the top of CSV and text outputs.
    pub fn header_line(&self) -> String {
        format!("# inputs: {}\n", self.manifest.checksum_chain())
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.path(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn write_csv(&self, name: &str, body: &str) -> Result<PathBuf> {
        self.write(name, &(self.header_line() + body))
    }

    /// JSON document with the input checksum chain as its first field.
    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let doc = with_inputs(self, value)?;
        self.write(name, &(serde_json::to_string_pretty(&doc)? + "\n"))
    }

    /// Print `text` unless quiet or in JSON mode; in JSON mode print `doc`.
    pub fn report<T: Serialize>(&self, text: &str, doc: &T) -> Result<()> {
        if self.json {
            println!("{}", serde_json::to_string_pretty(&with_inputs(self, doc)?)?);
        } else if !self.quiet {
            print!("{text}");
        }
        Ok(())
    }

    pub fn warn(&self, msg: &str) {
        if !self.quiet {
            eprintln!("warning: {msg}");
        }
    }

    pub fn finish(mut self, config: serde_json::Value, seed: Option<u64>) -> Result<()> {
        self.manifest.config = config;
        self.manifest.seed = seed;
        self.manifest.wall_time_secs = self.started.elapsed().as_secs_f64();
        let json = serde_json::to_string_pretty(&self.manifest)? + "\n";
        self.write("manifest.json", &json)?;
        Ok(())
    }
}

fn with_inputs<T: Serialize>(run: &Run, value: &T) -> Result<serde_json::Value> {
    let mut doc = serde_json::Map::new();
    doc.insert("inputs".into(), serde_json::to_value(&run.manifest.inputs)?);
    match serde_json::to_value(value)? {
        serde_json::Value::Object(map) => doc.extend(map),
        other => {
            doc.insert("result".into(), other);
        }
    }
    Ok(serde_json::Value::Object(doc))
}

pub fn load_norms(run: &mut Run, path: Option<&Path>) -> Result<NormalizationTable> {
    match path {
        Some(p) => {
            run.add_input("norms", p)?;
            Ok(NormalizationTable::load(p)?)
        }
        None => {
            run.add_embedded("norms", EMBEDDED_NORMS, fixtures::NORMALIZATION_CSV.as_bytes());
            Ok(fixtures::normalization_table())
        }
    }
}

pub fn filter_config(data: &DataArgs) -> FilterConfig {
    FilterConfig {
        min_games: data.min_games as usize,
        min_algorithms: data.min_algorithms as usize,
    }
}

pub fn load_dataset(run: &mut Run, data: &DataArgs) -> Result<PreparedDataset> {
    run.add_input("scores", &data.scores)?;
    let norms = load_norms(run, data.norms.as_deref())?;
    let raw = load_scores(&data.scores)?;
    let dataset = prepare(&raw, &norms, filter_config(data), data.target)
        .context("preparing the score table")?;
    Ok(dataset)
}

/// Plain-text table with left-aligned, space-padded columns.
pub fn aligned(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        s.truncate(s.trim_end().len());
        s + "\n"
    };
    let mut out = line(headers.to_vec());
    for row in rows {
        out += &line(row.iter().map(String::as_str).collect());
    }
    out
}

/// Quote a CSV field if needed.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
