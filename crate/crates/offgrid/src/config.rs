//! TOML experiment configuration.
//!
//! ```toml
//! seed = 7
//!
//! [dictionary]
//! kind = "gaussian"        # gaussian | fourier | exponential
//! width = 0.02             # gaussian only
//! samples = 256            # T; fourier uses cutoff = (T - 1) / 2
//! interval = [0.0, 1.0]    # sampling interval (gaussian, exponential)
//! domain = [0.1, 0.9]      # parameter domain Θ
//!
//! [measure]
//! n = 4
//! weights = [1.0, 1.0, 1.0, 1.0]   # optional, counting measure otherwise
//!
//! [truth]
//! s = 2
//! amplitudes = [1.0, 1.0]  # optional, per atom
//! separation = 2.0         # multiple of the certificate separation
//! theta = [0.3, 0.7]       # optional explicit placement
//!
//! [noise]
//! sigma = 0.5
//! delta = 1.0
//! per_sample = true        # Δ_T = delta / T
//!
//! [solver]
//! kappa = 0.1              # optional override
//! kappa_constant = 2.0     # optional, replaces 𝒞₁ or 𝒞₃ in the κ formula
//!
//! [study]
//! p = 1.0                  # 1 or 2
//! tau = 100.0              # optional, defaults to T
//! samples = [128, 256]
//! sparsity = [1, 2]
//! signals = [2, 32]
//! replicates = 200
//! ```

use anyhow::{bail, ensure, Context, Result};
use offgrid_core::dictionary::{
    linspace, BuiltinDictionary, ExponentialDecay, FourierLowpass, GaussianLocation,
};
use offgrid_core::measure::DiscreteMeasure;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub dictionary: DictionarySpec,
    pub measure: MeasureSpec,
    pub truth: TruthSpec,
    pub noise: NoiseSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub certificate: CertificateSpec,
    #[serde(default)]
    pub study: StudySpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DictionaryKind {
    Gaussian,
    Fourier,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionarySpec {
    pub kind: DictionaryKind,
    #[serde(default = "default_width")]
    pub width: f64,
    pub samples: usize,
    #[serde(default = "default_interval")]
    pub interval: [f64; 2],
    pub domain: [f64; 2],
}

fn default_width() -> f64 {
    0.03
}

fn default_interval() -> [f64; 2] {
    [0.0, 1.0]
}

impl DictionarySpec {
    /// The dictionary with `t` samples.
    pub fn build(&self, t: usize) -> Result<BuiltinDictionary> {
        let dom = (self.domain[0], self.domain[1]);
        let [a, b] = self.interval;
        Ok(match self.kind {
            DictionaryKind::Gaussian => {
                BuiltinDictionary::GaussianLocation(GaussianLocation::uniform(self.width, t, a, b, dom)?)
            }
            DictionaryKind::Fourier => {
                ensure!(t >= 3, "fourier dictionary needs at least 3 samples");
                BuiltinDictionary::FourierLowpass(FourierLowpass::new((t - 1) / 2, dom)?)
            }
            DictionaryKind::Exponential => {
                BuiltinDictionary::ExponentialDecay(ExponentialDecay::new(linspace(a, b, t), dom)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub n: usize,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

impl MeasureSpec {
    /// The measure on `n` signals; explicit weights must match `n`.
    pub fn build(&self, n: usize) -> Result<DiscreteMeasure> {
        match &self.weights {
            Some(w) if n == self.n => {
                ensure!(w.len() == n, "measure.weights has {} entries, n = {n}", w.len());
                Ok(DiscreteMeasure::new(w.clone())?)
            }
            _ => Ok(DiscreteMeasure::counting(n)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSpec {
    pub s: usize,
    #[serde(default)]
    pub amplitudes: Option<Vec<f64>>,
    #[serde(default = "default_separation")]
    pub separation: f64,
    #[serde(default)]
    pub theta: Option<Vec<f64>>,
}

fn default_separation() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub sigma: f64,
    #[serde(default = "one")]
    pub delta: f64,
    #[serde(default)]
    pub per_sample: bool,
}

impl NoiseSpec {
    /// `Δ_T` at `t` samples.
    pub fn delta_t(&self, t: usize) -> f64 {
        if self.per_sample {
            self.delta / t as f64
        } else {
            self.delta
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub kappa_constant: Option<f64>,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    #[serde(default = "default_max_inner")]
    pub max_inner: usize,
    #[serde(default = "default_refine")]
    pub refine: bool,
}

fn default_k_max() -> usize {
    32
}

fn default_grid_step() -> f64 {
    0.05
}

fn default_max_outer() -> usize {
    50
}

fn default_max_inner() -> usize {
    5000
}

fn default_refine() -> bool {
    true
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            kappa: None,
            kappa_constant: None,
            k_max: default_k_max(),
            grid_step: default_grid_step(),
            max_outer: default_max_outer(),
            max_inner: default_max_inner(),
            refine: default_refine(),
        }
    }
}

/// Radius and grid steps of the certificate checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSpec {
    /// Near-region radius `r`; defaults to half the admissible maximum `1/√(2L_{2,0})`.
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default = "default_verify_step")]
    pub verify_step: f64,
    #[serde(default = "default_proximity_step")]
    pub proximity_step: f64,
    #[serde(default = "default_search_step")]
    pub search_step: f64,
    /// Grid step of the `M_i` suprema.
    #[serde(default = "default_sup_step")]
    pub sup_step: f64,
}

fn default_verify_step() -> f64 {
    0.01
}

fn default_proximity_step() -> f64 {
    0.05
}

fn default_search_step() -> f64 {
    0.05
}

fn default_sup_step() -> f64 {
    0.05
}

impl Default for CertificateSpec {
    fn default() -> Self {
        CertificateSpec {
            radius: None,
            verify_step: default_verify_step(),
            proximity_step: default_proximity_step(),
            search_step: default_search_step(),
            sup_step: default_sup_step(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub samples: Vec<usize>,
    #[serde(default)]
    pub sparsity: Vec<usize>,
    #[serde(default)]
    pub signals: Vec<usize>,
    #[serde(default = "one_usize")]
    pub replicates: usize,
    #[serde(default = "one")]
    pub c4_prime: f64,
}

fn default_p() -> f64 {
    2.0
}

fn one_usize() -> usize {
    1
}

impl Default for StudySpec {
    fn default() -> Self {
        StudySpec {
            p: default_p(),
            tau: None,
            samples: Vec::new(),
            sparsity: Vec::new(),
            signals: Vec::new(),
            replicates: 1,
            c4_prime: 1.0,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).context("parsing config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.dictionary.samples >= 1, "dictionary.samples must be at least 1");
        ensure!(self.measure.n >= 1, "measure.n must be at least 1");
        ensure!(self.truth.s >= 1, "truth.s must be at least 1");
        ensure!(self.truth.separation > 1.0, "truth.separation must exceed 1");
        if let Some(a) = &self.truth.amplitudes {
            ensure!(a.len() == self.truth.s, "truth.amplitudes needs s = {} entries", self.truth.s);
        }
        if let Some(t) = &self.truth.theta {
            ensure!(t.len() == self.truth.s, "truth.theta needs s = {} entries", self.truth.s);
        }
        ensure!(self.noise.sigma >= 0.0, "noise.sigma must be nonnegative");
        ensure!(self.noise.delta > 0.0, "noise.delta must be positive");
        let p = self.study.p;
        if p != 1.0 && p != 2.0 {
            bail!("study.p must be 1 or 2");
        }
        if let Some(tau) = self.study.tau {
            ensure!(tau > 1.0, "study.tau must exceed 1");
        }
        ensure!(self.study.replicates >= 1, "study.replicates must be at least 1");
        ensure!(self.study.samples.iter().all(|&t| t >= 1), "study.samples entries must be positive");
        ensure!(self.study.sparsity.iter().all(|&s| s >= 1), "study.sparsity entries must be positive");
        ensure!(self.study.signals.iter().all(|&n| n >= 1), "study.signals entries must be positive");
        Ok(())
    }

    /// One configuration per sweep point; an empty sweep keeps the base value.
    pub fn sweep(&self) -> Vec<SweepPoint> {
        let ts = nonempty(&self.study.samples, self.dictionary.samples);
        let ss = nonempty(&self.study.sparsity, self.truth.s);
        let ns = nonempty(&self.study.signals, self.measure.n);
        let mut out = Vec::new();
        for &t in &ts {
            for &s in &ss {
                for &n in &ns {
                    out.push(SweepPoint { t, s, n });
                }
            }
        }
        out
    }

    /// The base point `(dictionary.samples, truth.s, measure.n)`.
    pub fn base_point(&self) -> SweepPoint {
        SweepPoint {
            t: self.dictionary.samples,
            s: self.truth.s,
            n: self.measure.n,
        }
    }
}

fn nonempty(v: &[usize], base: usize) -> Vec<usize> {
    if v.is_empty() {
        vec![base]
    } else {
        v.to_vec()
    }
}

/// Samples `T`, sparsity `s` and number of signals `n` of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SweepPoint {
    pub t: usize,
    pub s: usize,
    pub n: usize,
}
