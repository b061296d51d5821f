//! Structured meshes, nodal fields and the rescaled differential operators.

mod element;
mod field;
mod mesh;
mod operators;
mod vtk;

pub use element::{gauss_rule, shape_derivatives, shape_values, ElementMatrices};
pub(crate) use element::Sum;
pub use field::{extend_by_zero, ExtendedField, FacetField, Field};
pub use mesh::{Facet, Lattice, MeasuredCell, Mesh, MeshError, Side};
pub use operators::{
    anisotropic_divergence, anisotropic_gradient, anisotropic_scalar_gradient, vertical_average,
    AnisotropyParameter, ElementTensor, InvalidAnisotropy, VerticalAverage,
};
pub use vtk::write_vtk;

use crate::geometry::{PerforatedDomain, UnitCell};

/// What a mesh is built over.
#[derive(Debug, Clone, Copy)]
pub enum MeshSource<'a> {
    /// The perforated layer with `layers` vertical elements.
    Perforated { domain: &'a PerforatedDomain, layers: usize },
    /// `Y_f = Y'_f x (0,1)`, periodic on the lateral faces.
    CellExtrusion { cell: &'a UnitCell, layers: usize },
    /// The 2D cell `Y'_f`, periodic.
    Cell2d { cell: &'a UnitCell },
}

/// Builds a mesh with horizontal spacing `h`.
pub fn build_mesh(source: MeshSource<'_>, h: f64) -> Result<Mesh, MeshError> {
    match source {
        MeshSource::Perforated { domain, layers } => Mesh::perforated(domain, h, layers),
        MeshSource::CellExtrusion { cell, layers } => Mesh::unit_cell(cell, h, Some(layers), true),
        MeshSource::Cell2d { cell } => Mesh::unit_cell(cell, h, None, true),
    }
}
