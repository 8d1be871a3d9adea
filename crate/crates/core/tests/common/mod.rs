#![allow(dead_code)]

use fdareg::estimator::{fit_smoothed, smooth_covariates, EstimatorTag, ModelFit, YieldPanel};
use fdareg::fdata::FunctionalPanel;
use fdareg::ingest::synth::presets;
use fdareg::ingest::{generate_synthetic, SynthOutput, SynthSpec};

/// The default generator shrunk to a panel that fits in milliseconds.
pub fn small_spec(seed: u64) -> SynthSpec {
    let mut spec = presets::default_spec();
    spec.n_provinces = 10;
    spec.n_years = 16;
    spec.seed = seed;
    spec.noise_sd = 0.05;
    spec
}

pub struct Small {
    pub spec: SynthSpec,
    pub output: SynthOutput,
    pub panels: Vec<FunctionalPanel>,
}

pub fn small(seed: u64) -> Small {
    let spec = small_spec(seed);
    let output = generate_synthetic(&spec).unwrap();
    let panels = smooth_covariates(spec.model.as_ref().unwrap(), &output.weather).unwrap();
    Small { spec, output, panels }
}

impl Small {
    pub fn fit(&self, yields: &YieldPanel, tags: &[EstimatorTag]) -> ModelFit {
        fit_smoothed(self.spec.model.as_ref().unwrap(), yields, &self.panels, tags).unwrap()
    }
}

pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let h = (b - a) / intervals as f64;
    let mut s = f(a) + f(b);
    for i in 1..intervals {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}
