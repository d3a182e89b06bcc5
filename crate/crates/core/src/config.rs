//! Run configuration: flat `key = value` lines with `#` comments. Flags given
//! on the command line override the file. Unknown keys are rejected and values
//! are validated by the module that owns them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::distribution::{BinLayout, BinScheme};
use crate::error::{Error, Result};
use crate::kernel_uq::{Kernel, KernelSpec};
use crate::matcher::TrainConfig;

/// Every accepted key with its default value. An empty `tsud.start` means
/// half the epochs; an empty `kernel.bandwidth` means the family default.
pub const KEYS: [(&str, &str); 18] = [
    ("bins.alpha", "-0.5"),
    ("bins.beta", "23.5"),
    ("bins.count", "24"),
    ("bins.scheme", "uniform"),
    ("train.epochs", "400"),
    ("train.lr", "1.0"),
    ("train.seed", "42"),
    ("tsud.enabled", "false"),
    ("tsud.keep", "0.95"),
    ("tsud.start", ""),
    ("kernel.family", "rbf"),
    ("kernel.bandwidth", ""),
    ("kernel.knn", "50"),
    ("kernel.c", "1.0"),
    ("kernel.cap", "1000"),
    ("bank.cap", "100000"),
    ("matcher.window", "11"),
    ("matcher.hidden", "32"),
];

/// Raw key/value pairs before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigValues {
    values: BTreeMap<&'static str, String>,
}

impl Default for ConfigValues {
    fn default() -> Self {
        Self {
            values: KEYS.iter().map(|&(k, v)| (k, v.to_string())).collect(),
        }
    }
}

impl ConfigValues {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (k, _) = KEYS
            .iter()
            .find(|(k, _)| *k == key)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown key {key:?}")))?;
        self.values.insert(k, value.trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Applies `key = value` lines on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key = value", n + 1))
            })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text)
    }

    /// Text form accepted by [`ConfigValues::apply_text`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, _) in KEYS {
            let _ = writeln!(out, "{k} = {}", self.values[k]);
        }
        out
    }

    pub fn build(&self) -> Result<RunConfig> {
        let layout = BinLayout::new(
            self.num("bins.alpha")?,
            self.num("bins.beta")?,
            self.num("bins.count")?,
            match self.values["bins.scheme"].as_str() {
                "uniform" => BinScheme::Uniform,
                "index-range" => BinScheme::IndexRange,
                s => {
                    return Err(Error::InvalidConfig(format!(
                        "bins.scheme must be uniform or index-range, got {s:?}"
                    )))
                }
            },
        )?;
        let start = self.values["tsud.start"].as_str();
        let train = TrainConfig {
            epochs: self.num("train.epochs")?,
            learning_rate: self.num("train.lr")?,
            seed: self.num("train.seed")?,
            hidden: self.num("matcher.hidden")?,
            window: self.num("matcher.window")?,
            tsud_enabled: self.flag("tsud.enabled")?,
            tsud_keep: self.num("tsud.keep")?,
            tsud_start: if start.is_empty() {
                None
            } else {
                Some(self.num("tsud.start")?)
            },
        };
        train.validate()?;
        let family = self.values["kernel.family"].as_str();
        let bandwidth = match self.values["kernel.bandwidth"].as_str() {
            "" if family == "polynomial" => "2,1".to_string(),
            "" => crate::kernel_uq::DEFAULT_BANDWIDTH.to_string(),
            b => b.to_string(),
        };
        let kernel = KernelSpec {
            kernel: Kernel::parse(family, &bandwidth)?,
            knn: self.num("kernel.knn")?,
            c: self.num("kernel.c")?,
            cap: self.num("kernel.cap")?,
        };
        kernel.validate()?;
        let bank_cap: usize = self.num("bank.cap")?;
        if bank_cap == 0 {
            return Err(Error::InvalidConfig("bank.cap must be >= 1".into()));
        }
        Ok(RunConfig {
            layout,
            train,
            kernel,
            bank_cap,
        })
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = &self.values[key];
        v.parse()
            .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {v:?}")))
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.values[key].as_str() {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            v => Err(Error::InvalidConfig(format!(
                "{key}: expected true or false, got {v:?}"
            ))),
        }
    }
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub layout: BinLayout,
    pub train: TrainConfig,
    pub kernel: KernelSpec,
    pub bank_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        ConfigValues::default().build().expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut v = ConfigValues::default();
        v.apply_text(text)?;
        v.build()
    }
}
