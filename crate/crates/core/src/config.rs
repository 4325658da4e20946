//! Experiment configuration as a plain `key = value` text file.
//!
//! Blank lines and lines starting with `#` are ignored. List values are
//! comma separated. Later assignments win, so command-line overrides are
//! applied by calling [`ExperimentConfig::set`] after parsing the file.
//!
//! ```text
//! method      = mps, hooi
//! eps         = 0.9, 0.8, 0.65
//! holdout     = 0.5, 0.8
//! trials      = 10
//! seed        = 0
//! classifier  = knn1
//! keep_mps    = full
//! keep_hooi   = full
//! dataset     = synth
//! synth_shape = 8x8x3
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::synth::SynthSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Mps,
    Hooi,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Mps => "MPS",
            Method::Hooi => "HOOI",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mps" => Ok(Method::Mps),
            "hooi" | "tucker" => Ok(Method::Hooi),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Classifier {
    Knn1,
    Lda,
}

impl Classifier {
    pub fn name(self) -> &'static str {
        match self {
            Classifier::Knn1 => "KNN1",
            Classifier::Lda => "LDA",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "knn1" | "knn" | "knn-1" => Ok(Classifier::Knn1),
            "lda" => Ok(Classifier::Lda),
            other => Err(Error::Config(format!("unknown classifier {other:?}"))),
        }
    }
}

/// Per-mode core truncation: `full` or leading extents such as `4x4x1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum KeepSpec {
    Full,
    Dims(Vec<usize>),
}

impl KeepSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("full") {
            return Ok(KeepSpec::Full);
        }
        let dims = s
            .split('x')
            .map(|d| {
                d.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|&v| v > 0)
                    .ok_or_else(|| Error::Config(format!("bad keep extents {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(KeepSpec::Dims(dims))
    }

    pub fn label(&self) -> String {
        match self {
            KeepSpec::Full => "full".into(),
            KeepSpec::Dims(d) => d.iter().map(usize::to_string).collect::<Vec<_>>().join("x"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Synth(SynthSpec),
    /// DTF1 stack file or directory of per-sample files.
    Dtf { data: PathBuf, labels: PathBuf },
    Ppm { dir: PathBuf, labels: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub eps: Vec<f64>,
    pub holdout: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// MPS core position; `None` picks the middle of the chain.
    pub core_position: Option<usize>,
    /// MPS chain order of the sample modes; `None` keeps the natural order.
    pub mode_order: Option<Vec<usize>>,
    pub keep_mps: Vec<KeepSpec>,
    pub keep_hooi: Vec<KeepSpec>,
    pub classifiers: Vec<Classifier>,
    /// LDA ridge; `None` uses the trace-scaled default.
    pub ridge: Option<f64>,
    pub max_iters: usize,
    pub tol: f64,
    pub dataset: DatasetSource,
    pub output: Option<PathBuf>,
    /// Record wall-clock time per cell. Off makes reports byte-reproducible.
    pub timing: bool,
    /// Verify train/test isolation of every decomposition.
    pub audit: bool,
    /// Run independent trials on the rayon pool.
    pub parallel: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut synth = SynthSpec::new(4, 40, vec![8, 8, 3]);
        synth.noise = 3.0;
        Self {
            methods: vec![Method::Mps, Method::Hooi],
            eps: vec![0.9, 0.8],
            holdout: vec![0.5],
            trials: 10,
            seed: 0,
            core_position: None,
            mode_order: None,
            keep_mps: vec![KeepSpec::Full],
            keep_hooi: vec![KeepSpec::Full],
            classifiers: vec![Classifier::Knn1],
            ridge: None,
            max_iters: 50,
            tol: 1e-6,
            dataset: DatasetSource::Synth(synth),
            output: None,
            timing: true,
            audit: false,
            parallel: true,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Applies one assignment. Does not re-validate; call [`Self::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "method" | "methods" => {
                self.methods = if value.eq_ignore_ascii_case("both") {
                    vec![Method::Mps, Method::Hooi]
                } else {
                    list(value, Method::parse)?
                }
            }
            "eps" => self.eps = list(value, |s| num(s, "eps"))?,
            "holdout" | "r" => self.holdout = list(value, |s| num(s, "holdout"))?,
            "trials" => self.trials = num(value, key)?,
            "seed" => self.seed = num(value, key)?,
            "core_position" => self.core_position = auto(value, |s| num(s, key))?,
            "mode_order" => self.mode_order = auto(value, |s| list(s, |x| num(x, key)))?,
            "keep_mps" => self.keep_mps = list(value, KeepSpec::parse)?,
            "keep_hooi" => self.keep_hooi = list(value, KeepSpec::parse)?,
            "classifier" | "classifiers" => self.classifiers = list(value, Classifier::parse)?,
            "ridge" => self.ridge = auto(value, |s| num(s, key))?,
            "max_iters" => self.max_iters = num(value, key)?,
            "tol" => self.tol = num(value, key)?,
            "output" => self.output = Some(PathBuf::from(value)),
            "timing" => self.timing = flag(value)?,
            "audit" => self.audit = flag(value)?,
            "parallel" => self.parallel = flag(value)?,
            "dataset" => {
                self.dataset = match value.to_ascii_lowercase().as_str() {
                    "synth" => DatasetSource::Synth(self.synth_spec().clone()),
                    "dtf" => DatasetSource::Dtf {
                        data: PathBuf::new(),
                        labels: PathBuf::new(),
                    },
                    "ppm" => DatasetSource::Ppm {
                        dir: PathBuf::new(),
                        labels: PathBuf::new(),
                    },
                    other => return Err(Error::Config(format!("unknown dataset kind {other:?}"))),
                }
            }
            "data" => match &mut self.dataset {
                DatasetSource::Dtf { data, .. } => *data = value.into(),
                DatasetSource::Ppm { dir, .. } => *dir = value.into(),
                DatasetSource::Synth(_) => {
                    return Err(Error::Config("data path given for a synthetic dataset".into()))
                }
            },
            "labels" => match &mut self.dataset {
                DatasetSource::Dtf { labels, .. } | DatasetSource::Ppm { labels, .. } => {
                    *labels = value.into()
                }
                DatasetSource::Synth(_) => {
                    return Err(Error::Config("labels path given for a synthetic dataset".into()))
                }
            },
            k if k.starts_with("synth_") => {
                let DatasetSource::Synth(spec) = &mut self.dataset else {
                    return Err(Error::Config(format!("{k} set for a non-synthetic dataset")));
                };
                match &k["synth_".len()..] {
                    "classes" => spec.classes = num(value, k)?,
                    "per_class" => spec.samples_per_class = num(value, k)?,
                    "shape" => {
                        spec.shape = value
                            .split('x')
                            .map(|d| num(d, k))
                            .collect::<Result<Vec<_>>>()?
                    }
                    "rank" => spec.rank = num(value, k)?,
                    "noise" => spec.noise = num(value, k)?,
                    "separation" => spec.separation = num(value, k)?,
                    "seed" => spec.seed = num(value, k)?,
                    "tint" => spec.last_mode_tint = auto(value, |s| num(s, k))?,
                    _ => return Err(Error::Config(format!("unknown key {k:?}"))),
                }
            }
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("no methods".into()));
        }
        if self.eps.is_empty() {
            return Err(Error::Config("eps list is empty".into()));
        }
        if let Some(e) = self.eps.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
            return Err(Error::Config(format!("eps {e} outside (0, 1]")));
        }
        if self.holdout.is_empty() {
            return Err(Error::Config("holdout list is empty".into()));
        }
        if let Some(r) = self.holdout.iter().find(|&&r| !(r > 0.0 && r < 1.0)) {
            return Err(Error::Config(format!("holdout {r} outside (0, 1)")));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.classifiers.is_empty() {
            return Err(Error::Config("no classifiers".into()));
        }
        if self.keep_mps.is_empty() || self.keep_mps.len() != self.keep_hooi.len() {
            return Err(Error::Config(
                "keep_mps and keep_hooi must be non-empty lists of equal length".into(),
            ));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        match &self.dataset {
            DatasetSource::Dtf { data, labels } if data.as_os_str().is_empty() || labels.as_os_str().is_empty() => {
                Err(Error::Config("dtf dataset needs data and labels".into()))
            }
            DatasetSource::Ppm { dir, labels } if dir.as_os_str().is_empty() || labels.as_os_str().is_empty() => {
                Err(Error::Config("ppm dataset needs data and labels".into()))
            }
            _ => Ok(()),
        }
    }

    /// Serializes back to the `key = value` form accepted by [`Self::parse`].
    pub fn to_kv_string(&self) -> String {
        let join = |v: Vec<String>| v.join(", ");
        let mut s = String::new();
        let _ = writeln!(s, "method = {}", join(self.methods.iter().map(|m| m.name().to_lowercase()).collect()));
        let _ = writeln!(s, "eps = {}", join(self.eps.iter().map(f64::to_string).collect()));
        let _ = writeln!(s, "holdout = {}", join(self.holdout.iter().map(f64::to_string).collect()));
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "core_position = {}", opt(self.core_position.map(|v| v.to_string())));
        let _ = writeln!(
            s,
            "mode_order = {}",
            opt(self.mode_order.as_ref().map(|o| join(o.iter().map(usize::to_string).collect())))
        );
        let _ = writeln!(s, "keep_mps = {}", join(self.keep_mps.iter().map(KeepSpec::label).collect()));
        let _ = writeln!(s, "keep_hooi = {}", join(self.keep_hooi.iter().map(KeepSpec::label).collect()));
        let _ = writeln!(
            s,
            "classifier = {}",
            join(self.classifiers.iter().map(|c| c.name().to_lowercase()).collect())
        );
        let _ = writeln!(s, "ridge = {}", opt(self.ridge.map(|v| v.to_string())));
        let _ = writeln!(s, "max_iters = {}", self.max_iters);
        let _ = writeln!(s, "tol = {}", self.tol);
        let _ = writeln!(s, "timing = {}", onoff(self.timing));
        let _ = writeln!(s, "audit = {}", onoff(self.audit));
        let _ = writeln!(s, "parallel = {}", onoff(self.parallel));
        match &self.dataset {
            DatasetSource::Synth(spec) => {
                let _ = writeln!(s, "dataset = synth");
                let _ = writeln!(s, "synth_classes = {}", spec.classes);
                let _ = writeln!(s, "synth_per_class = {}", spec.samples_per_class);
                let shape: Vec<String> = spec.shape.iter().map(usize::to_string).collect();
                let _ = writeln!(s, "synth_shape = {}", shape.join("x"));
                let _ = writeln!(s, "synth_rank = {}", spec.rank);
                let _ = writeln!(s, "synth_noise = {}", spec.noise);
                let _ = writeln!(s, "synth_separation = {}", spec.separation);
                let _ = writeln!(s, "synth_seed = {}", spec.seed);
                let _ = writeln!(s, "synth_tint = {}", opt(spec.last_mode_tint.map(|v| v.to_string())));
            }
            DatasetSource::Dtf { data, labels } => {
                let _ = writeln!(s, "dataset = dtf\ndata = {}\nlabels = {}", data.display(), labels.display());
            }
            DatasetSource::Ppm { dir, labels } => {
                let _ = writeln!(s, "dataset = ppm\ndata = {}\nlabels = {}", dir.display(), labels.display());
            }
        }
        if let Some(out) = &self.output {
            let _ = writeln!(s, "output = {}", out.display());
        }
        s
    }

    fn synth_spec(&self) -> SynthSpec {
        match &self.dataset {
            DatasetSource::Synth(s) => s.clone(),
            _ => match ExperimentConfig::default().dataset {
                DatasetSource::Synth(s) => s,
                _ => unreachable!("default dataset is synthetic"),
            },
        }
    }
}

fn list<T>(value: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(f)
        .collect()
}

fn num<T: std::str::FromStr>(s: &str, key: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value {s:?} for {key}")))
}

fn auto<T>(value: &str, f: impl Fn(&str) -> Result<T>) -> Result<Option<T>> {
    if value.eq_ignore_ascii_case("auto") || value.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        f(value).map(Some)
    }
}

fn flag(value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        other => Err(Error::Config(format!("bad flag {other:?}"))),
    }
}

fn opt(v: Option<String>) -> String {
    v.unwrap_or_else(|| "auto".into())
}

fn onoff(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let text = "# experiment\nmethod = mps\neps = 0.9, 0.65\nholdout = 0.5,0.8\ntrials = 3\n\
                    keep_mps = full, 4x4\nkeep_hooi = full, 4x4x1\nclassifier = knn1, lda\n\
                    synth_shape = 6x6x3\nsynth_noise = 0.25\nmode_order = 1,3,2\n";
        let mut cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.methods, vec![Method::Mps]);
        assert_eq!(cfg.eps, vec![0.9, 0.65]);
        assert_eq!(cfg.keep_hooi[1], KeepSpec::Dims(vec![4, 4, 1]));
        assert_eq!(cfg.mode_order, Some(vec![1, 3, 2]));
        cfg.set("trials", "5").unwrap();
        assert_eq!(cfg.trials, 5);
        assert_eq!(ExperimentConfig::parse(&cfg.to_kv_string()).unwrap(), cfg);
    }

    #[test]
    fn invalid_configs() {
        assert!(ExperimentConfig::parse("eps = 1.5").is_err());
        assert!(ExperimentConfig::parse("eps = ").is_err());
        assert!(ExperimentConfig::parse("trials = 0").is_err());
        assert!(ExperimentConfig::parse("bogus = 1").is_err());
        assert!(ExperimentConfig::parse("keep_mps = full, 2x2").is_err());
        assert!(ExperimentConfig::parse("dataset = dtf").is_err());
        assert!(ExperimentConfig::parse("no equals sign").is_err());
        assert!(ExperimentConfig::parse("dataset = dtf\nsynth_noise = 1").is_err());
    }

    #[test]
    fn file_datasets() {
        let cfg = ExperimentConfig::parse("dataset = ppm\ndata = imgs\nlabels = l.csv").unwrap();
        assert_eq!(
            cfg.dataset,
            DatasetSource::Ppm {
                dir: "imgs".into(),
                labels: "l.csv".into()
            }
        );
        assert_eq!(ExperimentConfig::parse(&cfg.to_kv_string()).unwrap(), cfg);
    }
}
