//! Splitting a skeleton into basic pieces `U_S`, one per minimal stratum,
//! and gluing them back together.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amalgamation::{pushout, AmalgamationError};
use crate::graphs::is_basic;
use crate::morphisms::{MorphismError, MorphismJson, StrataMorphism};
use crate::skeleton::{disjoint_union, Skeleton, SkeletonError, StrataSubset};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecompositionError {
    #[error("step {step} refers to missing piece {piece}")]
    MissingPiece { step: usize, piece: usize },
    #[error("step {step}: accumulated skeleton differs from the one recorded in the plan")]
    AccumulatedMismatch { step: usize },
    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: AmalgamationError,
    },
    #[error(transparent)]
    Morphism(#[from] MorphismError),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanStep {
    Disjoint {
        piece: usize,
    },
    Glue {
        piece: usize,
        /// Union of the pieces before this step.
        accumulated: Skeleton,
        glue: Skeleton,
        /// `glue -> accumulated`
        left: MorphismJson,
        /// `glue -> piece`
        right: MorphismJson,
    },
}

impl PlanStep {
    pub fn piece(&self) -> usize {
        match self {
            PlanStep::Disjoint { piece } | PlanStep::Glue { piece, .. } => *piece,
        }
    }
}

/// Piece 0 is the starting point; step `i` attaches some later piece.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmalgamationPlan {
    pub pieces: Vec<Skeleton>,
    pub steps: Vec<PlanStep>,
}

impl AmalgamationPlan {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn all_pieces_basic(&self) -> bool {
        self.pieces.iter().all(is_basic)
    }
}

pub fn decompose(x: &Skeleton) -> AmalgamationPlan {
    let neighborhoods: Vec<StrataSubset> = x
        .minimal_strata()
        .iter()
        .map(|s| {
            x.incidence_neighborhood(s.as_str())
                .expect("minimal stratum of x")
        })
        .collect();
    let pieces: Vec<Skeleton> = neighborhoods
        .iter()
        .map(|u| x.restrict(u).expect("up-set of x"))
        .collect();
    let mut steps = Vec::new();
    let Some(first) = neighborhoods.first() else {
        return AmalgamationPlan { pieces, steps };
    };
    let mut covered = first.clone();
    for (i, u) in neighborhoods.iter().enumerate().skip(1) {
        let overlap = covered.intersection(u);
        if overlap.is_empty() {
            steps.push(PlanStep::Disjoint { piece: i });
        } else {
            let accumulated = x.restrict(&covered).expect("union of up-sets");
            let glue = x.restrict(&overlap).expect("overlap of up-sets");
            let left =
                StrataMorphism::inclusion(&glue, &accumulated).expect("glue inside accumulated");
            let right = StrataMorphism::inclusion(&glue, &pieces[i]).expect("glue inside piece");
            steps.push(PlanStep::Glue {
                piece: i,
                accumulated,
                glue,
                left: left.to_json(),
                right: right.to_json(),
            });
        }
        covered = covered.union(u);
    }
    AmalgamationPlan { pieces, steps }
}

/// Every intermediate union, starting with piece 0 and ending with the result.
pub fn replay_stages(plan: &AmalgamationPlan) -> Result<Vec<Skeleton>, DecompositionError> {
    let Some(first) = plan.pieces.first() else {
        return Ok(vec![Skeleton::empty()]);
    };
    let mut stages = vec![first.clone()];
    for (step, s) in plan.steps.iter().enumerate() {
        let piece = plan
            .pieces
            .get(s.piece())
            .ok_or(DecompositionError::MissingPiece {
                step,
                piece: s.piece(),
            })?;
        let acc = stages.last().expect("non-empty");
        let next = match s {
            PlanStep::Disjoint { .. } => disjoint_union(acc, piece).0,
            PlanStep::Glue {
                accumulated,
                glue,
                left,
                right,
                ..
            } => {
                if accumulated != acc {
                    return Err(DecompositionError::AccumulatedMismatch { step });
                }
                let f = StrataMorphism::from_json(glue.clone(), acc.clone(), left)?;
                let h = StrataMorphism::from_json(glue.clone(), piece.clone(), right)?;
                pushout(&f, &h)
                    .map_err(|source| DecompositionError::Step { step, source })?
                    .amalgam
            }
        };
        stages.push(next);
    }
    Ok(stages)
}

pub fn replay(plan: &AmalgamationPlan) -> Result<Skeleton, DecompositionError> {
    Ok(replay_stages(plan)?.pop().expect("at least one stage"))
}
