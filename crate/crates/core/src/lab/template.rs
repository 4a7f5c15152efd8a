use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{FamilyKind, GraphFamily};

/// A graph family indexed by `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TemplateKind {
    Complete,
    Path,
    Cycle,
    Star,
    DisjointStars,
    ErdosRenyi { q: f64 },
    /// Left side of `round(alpha n)` vertices, right side of the rest.
    BipartiteRandom { alpha: f64, q: f64 },
    StarPlusMatching,
    #[serde(rename = "coexistence-1")]
    Coexistence1,
    #[serde(rename = "coexistence-2")]
    Coexistence2,
    Nonconvergent,
}

/// `p_n = c n^-exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PRule {
    pub c: f64,
    pub exponent: f64,
}

impl PRule {
    pub const INVERSE_N: PRule = PRule { c: 1.0, exponent: 1.0 };

    pub fn inverse_sqrt(gamma: f64) -> PRule {
        PRule {
            c: gamma,
            exponent: 0.5,
        }
    }

    pub fn p(&self, n: usize) -> Result<f64> {
        let p = self.c * (n as f64).powf(-self.exponent);
        if p > 0.0 && p <= 1.0 {
            Ok(p)
        } else {
            Err(Error::invalid(format!("p_n = {p} at n = {n} is not a probability")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyTemplate {
    pub family: TemplateKind,
    pub p: PRule,
}

impl FamilyTemplate {
    pub fn new(family: TemplateKind, p: PRule) -> Self {
        FamilyTemplate { family, p }
    }

    pub fn is_random(&self) -> bool {
        matches!(
            self.family,
            TemplateKind::ErdosRenyi { .. }
                | TemplateKind::BipartiteRandom { .. }
                | TemplateKind::Coexistence2
                | TemplateKind::Nonconvergent
        )
    }

    pub fn at(&self, n: usize, seed: Option<u64>) -> GraphFamily {
        let kind = match self.family {
            TemplateKind::Complete => FamilyKind::Complete { n },
            TemplateKind::Path => FamilyKind::Path { n },
            TemplateKind::Cycle => FamilyKind::Cycle { n },
            TemplateKind::Star => FamilyKind::Star { n },
            TemplateKind::DisjointStars => FamilyKind::DisjointStars { n, size: None },
            TemplateKind::ErdosRenyi { q } => FamilyKind::ErdosRenyi { n, q },
            TemplateKind::BipartiteRandom { alpha, q } => {
                let left = ((alpha * n as f64).round() as usize).clamp(1, n.saturating_sub(1).max(1));
                FamilyKind::BipartiteRandom {
                    left,
                    right: n.saturating_sub(left).max(1),
                    q,
                }
            }
            TemplateKind::StarPlusMatching => FamilyKind::StarPlusMatching { n },
            TemplateKind::Coexistence1 => FamilyKind::Coexistence1 { n },
            TemplateKind::Coexistence2 => FamilyKind::Coexistence2 { n },
            TemplateKind::Nonconvergent => FamilyKind::Nonconvergent { n },
        };
        GraphFamily { kind, seed }
    }
}
