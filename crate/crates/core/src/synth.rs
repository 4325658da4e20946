//! Seeded synthetic classification datasets.
//!
//! Class `c` has a template `T_c = sum_r a_r (x) b_r (x) ...`, a sum of
//! `rank` outer products of Gaussian vectors scaled to unit RMS
//! (`||T_c||_F = sqrt(numel)`). Each sample is its class template plus iid
//! Gaussian noise of standard deviation `noise`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::classify::LabeledDataset;
use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

const MAX_TEMPLATE_DRAWS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub classes: usize,
    pub samples_per_class: usize,
    pub shape: Vec<usize>,
    /// Terms in each class template.
    pub rank: usize,
    /// Minimum Frobenius distance between any two class templates.
    pub separation: f64,
    pub noise: f64,
    pub seed: u64,
    /// When set, every last-mode factor vector is a shared all-ones
    /// direction plus this much Gaussian tint, so the last mode behaves
    /// like strongly correlated color channels.
    pub last_mode_tint: Option<f64>,
}

impl SynthSpec {
    pub fn new(classes: usize, samples_per_class: usize, shape: Vec<usize>) -> Self {
        Self {
            classes,
            samples_per_class,
            shape,
            rank: 2,
            separation: 0.0,
            noise: 0.5,
            seed: 0,
            last_mode_tint: None,
        }
    }
}

/// Draws the class templates and noisy samples. Samples are ordered class
/// by class.
pub fn synth_dataset(spec: &SynthSpec) -> Result<LabeledDataset> {
    if spec.classes == 0 || spec.samples_per_class == 0 || spec.rank == 0 {
        return Err(Error::InvalidParameter(
            "classes, samples_per_class and rank must be positive".into(),
        ));
    }
    if !spec.separation.is_finite() || spec.separation < 0.0 {
        return Err(Error::InvalidParameter(format!("separation = {}", spec.separation)));
    }
    if !spec.noise.is_finite() || spec.noise < 0.0 {
        return Err(Error::InvalidParameter(format!("noise = {}", spec.noise)));
    }
    if let Some(t) = spec.last_mode_tint {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidParameter(format!("tint = {t}")));
        }
    }
    let template_shape = DenseTensor::zeros(spec.shape.clone())?;
    let numel = template_shape.len();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut templates = None;
    for _ in 0..MAX_TEMPLATE_DRAWS {
        let candidate: Vec<DenseTensor> = (0..spec.classes)
            .map(|_| template(&spec.shape, spec.rank, spec.last_mode_tint, numel, &mut rng))
            .collect();
        if min_pairwise_distance(&candidate) >= spec.separation {
            templates = Some(candidate);
            break;
        }
    }
    let templates = templates.ok_or_else(|| {
        Error::InvalidParameter(format!(
            "no templates {} apart after {MAX_TEMPLATE_DRAWS} draws",
            spec.separation
        ))
    })?;

    let mut samples = Vec::with_capacity(spec.classes * spec.samples_per_class);
    let mut labels = Vec::with_capacity(samples.capacity());
    for (c, t) in templates.iter().enumerate() {
        for _ in 0..spec.samples_per_class {
            let data = t
                .data()
                .iter()
                .map(|&v| v + spec.noise * gauss(&mut rng))
                .collect();
            samples.push(DenseTensor::new(spec.shape.clone(), data)?);
            labels.push(c);
        }
    }
    LabeledDataset::new(samples, labels, spec.classes)
}

fn template(
    shape: &[usize],
    rank: usize,
    tint: Option<f64>,
    numel: usize,
    rng: &mut ChaCha8Rng,
) -> DenseTensor {
    let mut acc = vec![0.0; numel];
    let last = shape.len() - 1;
    for _ in 0..rank {
        let factors: Vec<Vec<f64>> = shape
            .iter()
            .enumerate()
            .map(|(m, &e)| match tint {
                Some(t) if m == last && shape.len() > 1 => {
                    (0..e).map(|_| 1.0 + t * gauss(rng)).collect()
                }
                _ => (0..e).map(|_| gauss(rng)).collect(),
            })
            .collect();
        let mut idx = vec![0usize; shape.len()];
        for v in acc.iter_mut() {
            *v += idx.iter().zip(&factors).map(|(&i, f)| f[i]).product::<f64>();
            for (i, &e) in idx.iter_mut().zip(shape) {
                *i += 1;
                if *i < e {
                    break;
                }
                *i = 0;
            }
        }
    }
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = if norm > 0.0 { (numel as f64).sqrt() / norm } else { 0.0 };
    DenseTensor::new(shape.to_vec(), acc.into_iter().map(|v| v * scale).collect())
        .expect("finite template")
}

fn min_pairwise_distance(templates: &[DenseTensor]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in templates.iter().enumerate() {
        for b in &templates[i + 1..] {
            let d = a.axpy(-1.0, b).expect("same shape").frobenius_norm();
            best = best.min(d);
        }
    }
    best
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}
