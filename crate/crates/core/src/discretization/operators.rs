//! The rescaled operators `D_eps`, `grad_eps`, `div_eps` and vertical averaging.

use std::sync::Arc;

use thiserror::Error;

use super::field::Field;
use super::mesh::Mesh;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("anisotropy parameter must be positive and finite, got {0}")]
pub struct InvalidAnisotropy(pub f64);

/// The `eps` dividing every `y3` derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnisotropyParameter {
    epsilon: f64,
}

impl AnisotropyParameter {
    pub fn new(epsilon: f64) -> Result<Self, InvalidAnisotropy> {
        if epsilon > 0.0 && epsilon.is_finite() {
            Ok(AnisotropyParameter { epsilon })
        } else {
            Err(InvalidAnisotropy(epsilon))
        }
    }

    /// `eps = 1`: the plain gradient.
    pub fn isotropic() -> Self {
        AnisotropyParameter { epsilon: 1.0 }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Scale applied to the derivative along `axis`.
    pub fn axis_scale(&self, axis: usize) -> f64 {
        if axis == 2 {
            1.0 / self.epsilon
        } else {
            1.0
        }
    }
}

/// Element-wise values of a derivative, sampled at element centres
/// (exact for fields whose derivative is constant per element).
#[derive(Debug, Clone, PartialEq)]
pub struct ElementTensor {
    mesh: Arc<Mesh>,
    elements: Vec<[usize; 3]>,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ElementTensor {
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Entry `(r, c)` on element slot `e`.
    pub fn get(&self, e: usize, r: usize, c: usize) -> f64 {
        self.values[e * self.rows * self.cols + r * self.cols + c]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

const CENTRE: [f64; 3] = [0.5, 0.5, 0.5];

/// `(D_eps v)_{i,j} = d_j v_i`, with the `j = 3` column scaled by `1/eps`.
pub fn anisotropic_gradient(v: &Field, eps: AnisotropyParameter) -> ElementTensor {
    let mesh = v.mesh().clone();
    let dim = mesh.dim();
    let rows = v.components();
    let elements: Vec<_> = mesh.fluid_elements().collect();
    let mut values = vec![0.0; elements.len() * rows * dim];
    for (slot, &e) in elements.iter().enumerate() {
        for j in 0..dim {
            let d = v.derivative_in_element(e, CENTRE, j);
            for (i, di) in d.iter().enumerate() {
                values[slot * rows * dim + i * dim + j] = di * eps.axis_scale(j);
            }
        }
    }
    ElementTensor {
        mesh,
        elements,
        rows,
        cols: dim,
        values,
    }
}

/// `grad_eps` of a scalar field, as a one-row tensor.
pub fn anisotropic_scalar_gradient(p: &Field, eps: AnisotropyParameter) -> ElementTensor {
    assert_eq!(p.components(), 1);
    anisotropic_gradient(p, eps)
}

/// `div_eps v = d_1 v_1 + d_2 v_2 + (1/eps) d_3 v_3`, as a 1x1 tensor.
pub fn anisotropic_divergence(v: &Field, eps: AnisotropyParameter) -> ElementTensor {
    let g = anisotropic_gradient(v, eps);
    let (rows, cols) = g.shape();
    assert_eq!(rows, cols, "divergence needs one component per axis");
    let values = (0..g.elements.len())
        .map(|e| (0..rows).map(|i| g.get(e, i, i)).sum())
        .collect();
    ElementTensor {
        mesh: g.mesh,
        elements: g.elements,
        rows: 1,
        cols: 1,
        values,
    }
}

/// Result of averaging a 3D field over `y3`.
#[derive(Debug, Clone, PartialEq)]
pub struct VerticalAverage {
    /// Field on the horizontal footprint mesh.
    pub field: Field,
    /// Horizontal columns excluded because they lie inside obstacles.
    pub masked_columns: usize,
}

/// Trapezoidal rule over the vertical nodes of every fluid column.
pub fn vertical_average(v: &Field) -> VerticalAverage {
    let mesh = v.mesh();
    assert_eq!(mesh.dim(), 3, "vertical average needs a 3D field");
    let flat = Arc::new(mesh.horizontal());
    let nz = mesh.cells()[2];
    let hz = mesh.spacing()[2];
    let height = nz as f64 * hz;
    let k = v.components();
    let mut values = vec![0.0; flat.node_count() * k];
    for node in 0..flat.node_count() {
        let [i, j, _] = flat.grid_coords(flat.grid_of_node(node));
        for layer in 0..=nz {
            let w = if layer == 0 || layer == nz { 0.5 * hz } else { hz };
            let src = mesh
                .node_at([i, j, layer])
                .expect("fluid column nodes are active at every height");
            for c in 0..k {
                values[node * k + c] += w * v.value(src, c) / height;
            }
        }
    }
    VerticalAverage {
        field: Field::from_values(flat, k, values),
        masked_columns: mesh.solid_columns(),
    }
}
