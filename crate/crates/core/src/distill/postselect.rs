use rayon::prelude::*;

use super::SiftedPair;
use crate::security::{point_assess, Attack, PointAssessment, SecurityContext};
use crate::source::Basis;
use crate::Result;

/// Fig.-2 style label of a sifted point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointClass {
    /// Kept, and both signs agree under the basis convention.
    ErrorFree,
    /// Kept, but the bits disagree.
    BitFlip,
    /// Discarded by post-selection.
    Insecure,
}

impl PointClass {
    pub fn label(self) -> &'static str {
        match self {
            PointClass::ErrorFree => "error-free",
            PointClass::BitFlip => "bit-flip",
            PointClass::Insecure => "insecure",
        }
    }
}

pub fn classify(pair: &SiftedPair, kept: bool) -> PointClass {
    if !kept {
        return PointClass::Insecure;
    }
    let agree = match pair.basis {
        Basis::Phase => (pair.y_a > 0.0) == (pair.y_b > 0.0),
        Basis::Amplitude => (pair.y_a > 0.0) == (pair.y_b < 0.0),
    };
    if agree {
        PointClass::ErrorFree
    } else {
        PointClass::BitFlip
    }
}

#[derive(Debug, Clone)]
pub struct Selection {
    /// Positions into the input slice, ascending.
    pub kept: Vec<usize>,
    /// One assessment per input pair.
    pub assessments: Vec<PointAssessment>,
    pub attack: Attack,
}

impl Selection {
    pub fn kept_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.assessments.len()];
        for &i in &self.kept {
            mask[i] = true;
        }
        mask
    }

    pub fn kept_fraction(&self) -> f64 {
        if self.assessments.is_empty() {
            0.0
        } else {
            self.kept.len() as f64 / self.assessments.len() as f64
        }
    }

    pub fn classes(&self, pairs: &[SiftedPair]) -> Vec<PointClass> {
        let mask = self.kept_mask();
        pairs.iter().zip(mask).map(|(p, k)| classify(p, k)).collect()
    }
}

/// Assesses a batch of magnitude pairs in parallel, preserving order.
pub fn assess_all(magnitudes: &[(f64, f64)], ctx: &SecurityContext) -> Result<Vec<PointAssessment>> {
    magnitudes
        .par_iter()
        .map(|&(a, b)| point_assess(a.abs(), b.abs(), ctx))
        .collect()
}

/// Keeps the pairs whose net information rate under `attack` is strictly
/// positive.
pub fn postselect(pairs: &[SiftedPair], ctx: &SecurityContext, attack: Attack) -> Result<Selection> {
    let mags: Vec<(f64, f64)> = pairs.iter().map(|p| (p.y_a, p.y_b)).collect();
    let assessments = assess_all(&mags, ctx)?;
    let kept = assessments
        .iter()
        .enumerate()
        .filter(|(_, a)| a.net(attack) > 0.0)
        .map(|(i, _)| i)
        .collect();
    Ok(Selection {
        kept,
        assessments,
        attack,
    })
}

/// Keeps every pair; used when post-selection is switched off.
pub fn keep_all(pairs: &[SiftedPair], ctx: &SecurityContext, attack: Attack) -> Result<Selection> {
    let mags: Vec<(f64, f64)> = pairs.iter().map(|p| (p.y_a, p.y_b)).collect();
    let assessments = assess_all(&mags, ctx)?;
    Ok(Selection {
        kept: (0..pairs.len()).collect(),
        assessments,
        attack,
    })
}
