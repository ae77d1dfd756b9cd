use std::collections::BTreeMap;

use crate::field::{subsample, Field, Grid};
use crate::{Error, Result};

/// Input-output pairs `(a_i, y_i)` on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<Field>,
    outputs: Vec<Field>,
    pub provenance: BTreeMap<String, String>,
}

impl Dataset {
    /// Inputs must share one grid, outputs must share one grid, and both
    /// grids must store values at the same nodes.
    pub fn new(inputs: Vec<Field>, outputs: Vec<Field>) -> Result<Self> {
        if inputs.len() != outputs.len() {
            return Err(Error::Dimension(format!(
                "{} inputs but {} outputs",
                inputs.len(),
                outputs.len()
            )));
        }
        if let (Some(a0), Some(y0)) = (inputs.first(), outputs.first()) {
            for a in &inputs {
                a0.grid().ensure_same(a.grid())?;
            }
            for y in &outputs {
                y0.grid().ensure_same(y.grid())?;
            }
            if !a0.grid().same_nodes(y0.grid()) {
                return Err(Error::GridMismatch {
                    left: a0.grid().to_string(),
                    right: y0.grid().to_string(),
                });
            }
        }
        Ok(Self {
            inputs,
            outputs,
            provenance: BTreeMap::new(),
        })
    }

    pub fn with_provenance(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.provenance.insert(key.into(), value.to_string());
        self
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[Field] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Field] {
        &self.outputs
    }

    pub fn input_grid(&self) -> Option<&Grid> {
        self.inputs.first().map(Field::grid)
    }

    pub fn output_grid(&self) -> Option<&Grid> {
        self.outputs.first().map(Field::grid)
    }

    /// The first `n` pairs.
    pub fn head(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            inputs: self.inputs[..n].to_vec(),
            outputs: self.outputs[..n].to_vec(),
            provenance: self.provenance.clone(),
        }
    }

    /// Restricts every field to a nested coarser grid with the same node set
    /// for inputs and outputs; boundary labels are preserved.
    pub fn subsample(&self, points: usize) -> Result<Self> {
        let retarget = |f: &Field| -> Result<Field> {
            let g = f.grid();
            subsample(f, &Grid::new(g.dim(), points, g.boundary())?)
        };
        let inputs = self.inputs.iter().map(retarget).collect::<Result<_>>()?;
        let outputs = self.outputs.iter().map(retarget).collect::<Result<_>>()?;
        Ok(Self {
            inputs,
            outputs,
            provenance: self.provenance.clone(),
        })
    }
}
