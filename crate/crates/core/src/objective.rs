//! Class reweighting and the weighted cross-entropy over the six chord
//! components.
//!
//! A class seen `n` times in a component whose most frequent class is seen
//! `n_max` times gets weight `min((n / n_max)^-gamma, w_max)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::chord::{StructuredChord, COMPONENT_SIZES, NUM_COMPONENTS};
use crate::conformer::ComponentActivations;
use crate::tensor::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObjectiveError {
    #[error("balancing factor {0} is outside [0, 1]")]
    Gamma(f64),
    #[error("weight clamp {0} is below 1")]
    WMax(f64),
    #[error("component {0} has no training frames")]
    EmptyComponent(usize),
    #[error("frame {frame}: class {index} is out of range for component {component}")]
    Target { frame: usize, component: usize, index: usize },
    #[error("{targets} targets for {frames} frames")]
    LengthMismatch { frames: usize, targets: usize },
}

/// Training-frame counts per class of each component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentCounts {
    pub counts: [Vec<u64>; NUM_COMPONENTS],
}

impl Default for ComponentCounts {
    fn default() -> Self {
        Self::zeros(COMPONENT_SIZES)
    }
}

impl ComponentCounts {
    pub fn zeros(sizes: [usize; NUM_COMPONENTS]) -> Self {
        ComponentCounts { counts: sizes.map(|m| vec![0; m]) }
    }

    pub fn add(&mut self, chord: &StructuredChord) {
        for (j, c) in chord.components().into_iter().enumerate() {
            self.counts[j][c] += 1;
        }
    }

    pub fn from_frames<'a>(frames: impl IntoIterator<Item = &'a StructuredChord>) -> Self {
        let mut counts = Self::default();
        for chord in frames {
            counts.add(chord);
        }
        counts
    }

    pub fn merge(&mut self, other: &ComponentCounts) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn sizes(&self) -> [usize; NUM_COMPONENTS] {
        core::array::from_fn(|j| self.counts[j].len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights {
    pub weights: [Vec<f64>; NUM_COMPONENTS],
    pub gamma: f64,
    pub w_max: f64,
}

impl ClassWeights {
    /// All weights 1, i.e. plain cross-entropy.
    pub fn uniform(sizes: [usize; NUM_COMPONENTS]) -> Self {
        ClassWeights { weights: sizes.map(|m| vec![1.0; m]), gamma: 0.0, w_max: 1.0 }
    }

    pub fn get(&self, component: usize, class: usize) -> f64 {
        self.weights[component][class]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for w in out.weights.iter_mut().flatten() {
            *w *= factor;
        }
        out
    }
}

/// Unseen classes get `w_max`, except at `gamma = 0` where every weight is 1.
pub fn compute_class_weights(counts: &ComponentCounts, gamma: f64, w_max: f64) -> Result<ClassWeights, ObjectiveError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(ObjectiveError::Gamma(gamma));
    }
    if !(w_max >= 1.0) {
        return Err(ObjectiveError::WMax(w_max));
    }
    let mut weights: [Vec<f64>; NUM_COMPONENTS] = Default::default();
    for (j, n) in counts.counts.iter().enumerate() {
        let max = n.iter().copied().max().unwrap_or(0);
        if max == 0 {
            return Err(ObjectiveError::EmptyComponent(j));
        }
        weights[j] = n
            .iter()
            .map(|&c| {
                if gamma == 0.0 {
                    1.0
                } else if c == 0 {
                    w_max
                } else {
                    libm::pow(c as f64 / max as f64, -gamma).min(w_max)
                }
            })
            .collect();
    }
    Ok(ClassWeights { weights, gamma, w_max })
}

/// Loss (summed over frames and components) and its gradient w.r.t. the
/// scores, `w * (beta - onehot)`. The loss is accumulated in `f64` from a
/// log-softmax of the scores.
pub fn weighted_cross_entropy<F: Scalar>(
    acts: &ComponentActivations<F>,
    targets: &[StructuredChord],
    weights: &ClassWeights,
) -> Result<(f64, Vec<F>), ObjectiveError> {
    if targets.len() != acts.frames {
        return Err(ObjectiveError::LengthMismatch { frames: acts.frames, targets: targets.len() });
    }
    let width = acts.width();
    let mut grad = vec![F::zero(); acts.scores.len()];
    let mut loss = 0.0;
    for (t, target) in targets.iter().enumerate() {
        for (j, z) in target.components().into_iter().enumerate() {
            let m = acts.sizes[j];
            if z >= m || z >= weights.weights[j].len() {
                return Err(ObjectiveError::Target { frame: t, component: j, index: z });
            }
            let w = weights.weights[j][z];
            let scores = acts.score(j, t);
            let max = scores.iter().fold(f64::NEG_INFINITY, |a, s| a.max(s.as_f64()));
            let lse = max + libm::log(scores.iter().map(|s| libm::exp(s.as_f64() - max)).sum::<f64>());
            loss -= w * (scores[z].as_f64() - lse);
            let off = t * width + acts.offset(j);
            let beta = acts.beta(j, t);
            let wf = F::of(w);
            for k in 0..m {
                let onehot = if k == z { F::one() } else { F::zero() };
                grad[off + k] = wf * (beta[k] - onehot);
            }
        }
    }
    Ok((loss, grad))
}

/// Loss of a single component, for checking the per-component decomposition.
pub fn component_loss<F: Scalar>(
    acts: &ComponentActivations<F>,
    targets: &[StructuredChord],
    weights: &ClassWeights,
    component: usize,
) -> f64 {
    targets
        .iter()
        .enumerate()
        .map(|(t, target)| {
            let z = target.components()[component];
            let p = acts.beta(component, t)[z].as_f64();
            -weights.weights[component][z] * libm::log(p)
        })
        .sum()
}
