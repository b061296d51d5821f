//! Exact element integrals of multilinear shape functions on a box.
//!
//! Local corner `a` has offset bit `(a >> d) & 1` along axis `d`; every
//! integral factors into one-dimensional pieces.

/// `int_0^h N_a N_b`.
fn mass_1d(h: f64, a: usize, b: usize) -> f64 {
    if a == b {
        h / 3.0
    } else {
        h / 6.0
    }
}

/// `int_0^h N_a' N_b'`.
fn stiff_1d(h: f64, a: usize, b: usize) -> f64 {
    if a == b {
        1.0 / h
    } else {
        -1.0 / h
    }
}

/// `int_0^h N_a N_b'`.
fn mixed_1d(b: usize) -> f64 {
    if b == 0 {
        -0.5
    } else {
        0.5
    }
}

/// Per-element matrices for one mesh; all elements share the same size.
#[derive(Debug, Clone)]
pub struct ElementMatrices {
    pub dim: usize,
    pub n: usize,
    pub spacing: [f64; 3],
    /// `int N_a N_b`.
    pub mass: Vec<f64>,
    /// `stiff[d][a n + b] = int d_d N_a d_d N_b`.
    pub stiff: Vec<Vec<f64>>,
    /// `mixed[d][a n + b] = int N_a d_d N_b`.
    pub mixed: Vec<Vec<f64>>,
    /// `int N_a`.
    pub load: Vec<f64>,
}

impl ElementMatrices {
    pub fn new(dim: usize, spacing: [f64; 3]) -> Self {
        let n = 1 << dim;
        let bit = |a: usize, d: usize| (a >> d) & 1;
        let mut mass = vec![0.0; n * n];
        let mut stiff = vec![vec![0.0; n * n]; dim];
        let mut mixed = vec![vec![0.0; n * n]; dim];
        for a in 0..n {
            for b in 0..n {
                mass[a * n + b] = (0..dim)
                    .map(|d| mass_1d(spacing[d], bit(a, d), bit(b, d)))
                    .product();
                for axis in 0..dim {
                    let mut s = 1.0;
                    let mut c = 1.0;
                    for d in 0..dim {
                        if d == axis {
                            s *= stiff_1d(spacing[d], bit(a, d), bit(b, d));
                            c *= mixed_1d(bit(b, d));
                        } else {
                            let m = mass_1d(spacing[d], bit(a, d), bit(b, d));
                            s *= m;
                            c *= m;
                        }
                    }
                    stiff[axis][a * n + b] = s;
                    mixed[axis][a * n + b] = c;
                }
            }
        }
        let volume: f64 = spacing[..dim].iter().product();
        let load = vec![volume / n as f64; n];
        ElementMatrices {
            dim,
            n,
            spacing,
            mass,
            stiff,
            mixed,
            load,
        }
    }

    /// `int_F N_a N_b` on the facet normal to `axis`, for corners on that facet.
    pub fn facet_mass(&self, axis: usize, a: usize, b: usize) -> f64 {
        (0..self.dim)
            .filter(|&d| d != axis)
            .map(|d| mass_1d(self.spacing[d], (a >> d) & 1, (b >> d) & 1))
            .product()
    }

    /// `int_F N_a` on the facet normal to `axis`.
    pub fn facet_load(&self, axis: usize) -> f64 {
        let area: f64 = (0..self.dim)
            .filter(|&d| d != axis)
            .map(|d| self.spacing[d])
            .product();
        area / (1 << (self.dim - 1)) as f64
    }
}

/// Shape function values at local coordinates `t in [0,1]^dim`.
pub fn shape_values(dim: usize, t: [f64; 3]) -> [f64; 8] {
    let mut out = [0.0; 8];
    for (a, slot) in out.iter_mut().enumerate().take(1 << dim) {
        *slot = (0..dim)
            .map(|d| if (a >> d) & 1 == 1 { t[d] } else { 1.0 - t[d] })
            .product();
    }
    out
}

/// Physical derivatives `d_axis N_a` at local coordinates `t`.
pub fn shape_derivatives(dim: usize, spacing: [f64; 3], t: [f64; 3], axis: usize) -> [f64; 8] {
    let mut out = [0.0; 8];
    for (a, slot) in out.iter_mut().enumerate().take(1 << dim) {
        *slot = (0..dim)
            .map(|d| {
                let on = (a >> d) & 1 == 1;
                if d == axis {
                    if on {
                        1.0 / spacing[d]
                    } else {
                        -1.0 / spacing[d]
                    }
                } else if on {
                    t[d]
                } else {
                    1.0 - t[d]
                }
            })
            .product();
    }
    out
}

/// Gauss-Legendre points and weights on `[0,1]`.
pub fn gauss_1d(points: usize) -> Vec<(f64, f64)> {
    match points {
        1 => vec![(0.5, 1.0)],
        2 => {
            let d = 0.5 / 3f64.sqrt();
            vec![(0.5 - d, 0.5), (0.5 + d, 0.5)]
        }
        _ => {
            let d = 0.5 * (0.6f64).sqrt();
            vec![(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
        }
    }
}

/// Tensor Gauss rule on `[0,1]^dim`: local points and unit-cube weights.
pub fn gauss_rule(dim: usize, points: usize) -> Vec<([f64; 3], f64)> {
    let g = gauss_1d(points);
    let mut out = vec![([0.0; 3], 1.0)];
    for d in 0..dim {
        let mut next = Vec::with_capacity(out.len() * g.len());
        for (p, w) in &out {
            for &(t, wt) in &g {
                let mut q = *p;
                q[d] = t;
                next.push((q, w * wt));
            }
        }
        out = next;
    }
    out
}


/// Neumaier-compensated running sum, so global integrals do not depend on
/// the order in which element contributions arrive beyond rounding.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Sum {
    sum: f64,
    compensation: f64,
}

impl Sum {
    pub(crate) fn value(self) -> f64 {
        self.sum + self.compensation
    }
}

impl std::ops::AddAssign<f64> for Sum {
    fn add_assign(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }
}
