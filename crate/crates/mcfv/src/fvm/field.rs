use crate::mesh::UnstructuredMesh;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    FixedValue(f64),
    ZeroGradient,
}

/// Cell-centred scalar with one boundary condition per patch.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub values: Vec<f64>,
    pub bcs: Vec<BoundaryCondition>,
}

impl ScalarField {
    pub fn uniform(mesh: &UnstructuredMesh, value: f64, bc: BoundaryCondition) -> ScalarField {
        ScalarField {
            values: vec![value; mesh.n_cells],
            bcs: vec![bc; mesh.patches.len()],
        }
    }

    pub fn validate(&self, mesh: &UnstructuredMesh) -> Result<()> {
        if self.values.len() != mesh.n_cells {
            return Err(Error::DimensionMismatch {
                expected: mesh.n_cells,
                got: self.values.len(),
            });
        }
        if self.bcs.len() != mesh.patches.len() {
            return Err(Error::DimensionMismatch {
                expected: mesh.patches.len(),
                got: self.bcs.len(),
            });
        }
        Ok(())
    }
}

/// Patch index of a boundary face, from the patch ranges.
pub fn patch_of_face(mesh: &UnstructuredMesh, face: usize) -> Option<usize> {
    mesh.patches
        .iter()
        .position(|p| face >= p.start && face < p.start + p.len)
}
