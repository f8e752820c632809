//! Deterministic quantizer assignments: arbitrary surjective maps from
//! channel outputs to cells.
//!
//! Sequential quantizers are the special case where every cell is a
//! contiguous, ascending block of outputs; [`Assignment::from_boundaries`]
//! and [`Assignment::to_boundaries`] convert between the two views. General
//! assignments arise from the merge and clustering baselines, which are free
//! to group non-adjacent outputs.

use crate::channel::Channel;
use crate::cost::CostFamily;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AssignmentError {
    #[error("assignment must map at least one output")]
    Empty,
    #[error("output {output} maps to cell {cell}, but there are only {cells} cells")]
    CellOutOfRange {
        output: usize,
        cell: usize,
        cells: usize,
    },
    #[error("cell {0} has no outputs assigned to it")]
    EmptyCell(usize),
}

/// A surjective map from `n` outputs onto `m` cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    map: Vec<usize>,
    cells: usize,
}

impl Assignment {
    /// `map[j]` is the cell of output `j`; every cell in `0..cells` must be
    /// hit at least once.
    pub fn new(map: Vec<usize>, cells: usize) -> Result<Self, AssignmentError> {
        if map.is_empty() {
            return Err(AssignmentError::Empty);
        }
        let mut seen = vec![false; cells];
        for (output, &cell) in map.iter().enumerate() {
            if cell >= cells {
                return Err(AssignmentError::CellOutOfRange {
                    output,
                    cell,
                    cells,
                });
            }
            seen[cell] = true;
        }
        if let Some(z) = seen.iter().position(|&s| !s) {
            return Err(AssignmentError::EmptyCell(z));
        }
        Ok(Assignment { map, cells })
    }

    /// Sequential assignment from boundaries 0 = λ_0 < … < λ_M = n: outputs
    /// in `λ_{z-1}..λ_z` go to cell `z − 1`.
    pub fn from_boundaries(boundaries: &[usize]) -> Self {
        assert!(boundaries.len() >= 2, "need at least two boundaries");
        let n = *boundaries.last().unwrap();
        let mut map = vec![0; n];
        for (z, w) in boundaries.windows(2).enumerate() {
            assert!(w[0] < w[1], "boundaries must be strictly increasing");
            for j in w[0]..w[1] {
                map[j] = z;
            }
        }
        assert_eq!(boundaries[0], 0, "boundaries must start at 0");
        Assignment {
            map,
            cells: boundaries.len() - 1,
        }
    }

    /// The boundary list if this assignment is sequential (cells are
    /// contiguous ascending blocks labeled in order), otherwise `None`.
    pub fn to_boundaries(&self) -> Option<Vec<usize>> {
        let mut boundaries = vec![0];
        for w in self.map.windows(2) {
            if w[1] == w[0] + 1 {
                boundaries.push(boundaries.len());
            } else if w[1] != w[0] {
                return None;
            }
        }
        // Blocks were labeled 0, 1, …; positions are where the label steps.
        let mut out = vec![0];
        for (j, w) in self.map.windows(2).enumerate() {
            if w[1] != w[0] {
                out.push(j + 1);
            }
        }
        out.push(self.map.len());
        if out.len() == self.cells + 1 {
            Some(out)
        } else {
            None
        }
    }

    pub fn outputs(&self) -> usize {
        self.map.len()
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn cell_of(&self, output: usize) -> usize {
        self.map[output]
    }

    /// Outputs assigned to cell `z`, ascending.
    pub fn members(&self, z: usize) -> Vec<usize> {
        self.map
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c == z)
            .map(|(j, _)| j)
            .collect()
    }

    /// Whether the map is non-decreasing with cells labeled in order of
    /// appearance — i.e. a sequential quantizer.
    pub fn is_sequential(&self) -> bool {
        self.to_boundaries().is_some()
    }

    /// Renumber cells by first appearance while scanning outputs ascending,
    /// so structurally equal assignments compare equal regardless of how the
    /// producing algorithm happened to label its cells.
    pub fn relabel_by_first_appearance(&self) -> Assignment {
        let mut new_id = vec![usize::MAX; self.cells];
        let mut next = 0;
        let mut map = Vec::with_capacity(self.map.len());
        for &cell in &self.map {
            if new_id[cell] == usize::MAX {
                new_id[cell] = next;
                next += 1;
            }
            map.push(new_id[cell]);
        }
        Assignment {
            map,
            cells: self.cells,
        }
    }

    /// Joint distribution of `(X, Z)` as rows over `x`, columns over `z`.
    pub fn joint_with_inputs(&self, channel: &Channel) -> Vec<Vec<f64>> {
        assert_eq!(self.map.len(), channel.outputs());
        let mut joint = vec![vec![0.0; self.cells]; channel.inputs()];
        for (j, &z) in self.map.iter().enumerate() {
            for (i, row) in joint.iter_mut().enumerate() {
                row[z] += channel.joint(i, j);
            }
        }
        joint
    }

    /// The quantized channel `X → Z` with the same prior.
    pub fn quantized_channel(&self, channel: &Channel) -> Channel {
        assert_eq!(self.map.len(), channel.outputs());
        let mut pzx = vec![vec![0.0; self.cells]; channel.inputs()];
        for (j, &z) in self.map.iter().enumerate() {
            for (i, row) in pzx.iter_mut().enumerate() {
                row[z] += channel.pyx()[i][j];
            }
        }
        Channel::new(channel.px().to_vec(), pzx)
            .expect("aggregating a valid channel over non-empty cells stays valid")
    }

    /// Total cost Σ_z P(z)·φ(P(X·|z)) of this assignment.
    pub fn cost(&self, channel: &Channel, cost: &CostFamily) -> f64 {
        assert_eq!(self.map.len(), channel.outputs());
        let joint = self.joint_with_inputs(channel);
        (0..self.cells)
            .map(|z| {
                let mut col: Vec<f64> = joint.iter().map(|row| row[z]).collect();
                let mass: f64 = col.iter().sum();
                for v in &mut col {
                    *v /= mass;
                }
                mass * cost.phi(&col)
            })
            .sum()
    }
}
