//! Run configuration: command-line flags over an optional `key=value` file.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use vidcast_core::{FloodMode, QuantSpec};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        <Format as ValueEnum>::from_str(s, true).map_err(|e| anyhow!(e))
    }
}

/// Every flag is optional here so that file values can fill the gaps; each
/// subcommand checks for what it needs.
#[derive(Args, Clone, Debug, Default)]
pub struct RunArgs {
    /// File of `key=value` lines; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Edge-list topology file.
    #[arg(long)]
    pub topology: Option<PathBuf>,
    /// Source node label.
    #[arg(long)]
    pub source: Option<String>,
    /// naive or rrdbfsf.
    #[arg(long)]
    pub mode: Option<String>,
    /// Quantization step.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub mtu: Option<usize>,
    /// Seed for random topologies.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Independent random topologies, seeds seed, seed+1, ...
    #[arg(long)]
    pub trials: Option<usize>,
    /// Node count of random topologies.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Maximum oct-tree depth.
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub frames: Option<usize>,
}

fn parse<T>(key: &str, value: &str) -> Result<Option<T>>
where
    T: FromStr,
    T::Err: Display,
{
    value
        .parse()
        .map(Some)
        .map_err(|e| anyhow!("bad value for `{key}`: {e}"))
}

impl RunArgs {
    /// Parse a config file. Blank lines and lines starting with `#` are
    /// skipped; unknown keys are errors.
    pub fn from_config_text(text: &str) -> Result<RunArgs> {
        let mut a = RunArgs::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key=value", n + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let key = key.trim_start_matches("--");
            match key {
                "topology" => a.topology = Some(value.into()),
                "source" => a.source = Some(value.into()),
                "mode" => a.mode = Some(value.into()),
                "delta" => a.delta = parse(key, value)?,
                "mtu" => a.mtu = parse(key, value)?,
                "seed" => a.seed = parse(key, value)?,
                "trials" => a.trials = parse(key, value)?,
                "nodes" => a.nodes = parse(key, value)?,
                "depth" => a.depth = parse(key, value)?,
                "out" => a.out = Some(value.into()),
                "format" => a.format = parse(key, value)?,
                "input" => a.input = Some(value.into()),
                "width" => a.width = parse(key, value)?,
                "height" => a.height = parse(key, value)?,
                "frames" => a.frames = parse(key, value)?,
                other => bail!("line {}: unknown key `{other}`", n + 1),
            }
        }
        Ok(a)
    }

    /// Fill unset fields from the `--config` file, if any.
    pub fn resolve(self) -> Result<RunArgs> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = fs::read_to_string(&path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let file = RunArgs::from_config_text(&text)
            .with_context(|| format!("in config {}", path.display()))?;
        Ok(self.or(file))
    }

    fn or(self, o: RunArgs) -> RunArgs {
        RunArgs {
            config: self.config,
            topology: self.topology.or(o.topology),
            source: self.source.or(o.source),
            mode: self.mode.or(o.mode),
            delta: self.delta.or(o.delta),
            mtu: self.mtu.or(o.mtu),
            seed: self.seed.or(o.seed),
            trials: self.trials.or(o.trials),
            nodes: self.nodes.or(o.nodes),
            depth: self.depth.or(o.depth),
            out: self.out.or(o.out),
            format: self.format.or(o.format),
            input: self.input.or(o.input),
            width: self.width.or(o.width),
            height: self.height.or(o.height),
            frames: self.frames.or(o.frames),
        }
    }

    pub fn mode(&self) -> Result<FloodMode> {
        match &self.mode {
            Some(m) => Ok(m.parse()?),
            None => Ok(FloodMode::Restricted),
        }
    }

    pub fn quant(&self) -> Result<QuantSpec> {
        let delta = self.delta.unwrap_or(DEFAULT_DELTA);
        QuantSpec::new(delta).map_err(|e| anyhow!("--delta {delta}: {e}"))
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn input(&self) -> Result<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| anyhow!("--input is required"))
    }

    pub fn out(&self) -> Option<&Path> {
        self.out.as_deref()
    }

    pub fn required_out(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| anyhow!("--out is required"))
    }
}

pub const DEFAULT_DELTA: f64 = 4.0;
pub const DEFAULT_NODES: usize = 32;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file =
            RunArgs::from_config_text("# comment\ndelta = 8\nmode=naive\n\nformat=json").unwrap();
        let flags = RunArgs {
            delta: Some(2.0),
            ..RunArgs::default()
        };
        let merged = flags.or(file);
        assert_eq!(merged.delta, Some(2.0));
        assert_eq!(merged.mode().unwrap(), FloodMode::Naive);
        assert_eq!(merged.format(), Format::Json);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(RunArgs::from_config_text("colour=blue").is_err());
        assert!(RunArgs::from_config_text("delta").is_err());
        assert!(RunArgs::from_config_text("delta=abc").is_err());
    }
}
