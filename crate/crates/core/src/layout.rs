//! The result of solving one instance: final label origins, placement
//! flags, and optional leader lines for distant labels.

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::scalar::Scalar;

/// One straight leader line from an anchor to its label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leader<S> {
    pub from: Point<S>,
    pub to: Point<S>,
}

/// Per-anchor solution. `origins[i]` is the final label origin — for an
/// unplaced anchor it holds the rank-1 candidate so renderers can show the
/// would-be position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Layout<S> {
    pub origins: Vec<Point<S>>,
    pub placed: Vec<bool>,
    pub leaders: Vec<Option<Leader<S>>>,
    /// Environment steps used to produce the layout (zero for greedy
    /// solvers).
    pub steps: usize,
}

impl<S: Scalar> Layout<S> {
    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    pub fn placed_count(&self) -> usize {
        self.placed.iter().filter(|&&p| p).count()
    }

    pub fn all_placed(&self) -> bool {
        self.placed.iter().all(|&p| p)
    }
}
