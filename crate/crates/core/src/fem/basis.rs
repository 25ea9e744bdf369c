//! Lagrange bases on the reference triangle.
//!
//! Barycentric coordinates are `l0 = 1 - xi - eta`, `l1 = xi`, `l2 = eta`.
//! P2 nodes are the three vertices followed by the midpoints of local edges
//! (0,1), (1,2), (2,0).

use crate::error::{Error, Result};

const GRAD_BARY: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

/// Barycentric coordinates of the Lagrange nodes of each degree.
pub const P1_NODES: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
pub const P2_NODES: [[f64; 3]; 6] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.5, 0.5, 0.0],
    [0.0, 0.5, 0.5],
    [0.5, 0.0, 0.5],
];

#[inline]
pub fn p1_values(l: [f64; 3]) -> [f64; 3] {
    l
}

#[inline]
pub fn p1_gradients() -> [[f64; 2]; 3] {
    GRAD_BARY
}

#[inline]
pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// Reference-coordinate gradients of the P2 basis.
#[inline]
pub fn p2_gradients(l: [f64; 3]) -> [[f64; 2]; 6] {
    let g = GRAD_BARY;
    let mut out = [[0.0; 2]; 6];
    for d in 0..2 {
        out[0][d] = (4.0 * l[0] - 1.0) * g[0][d];
        out[1][d] = (4.0 * l[1] - 1.0) * g[1][d];
        out[2][d] = (4.0 * l[2] - 1.0) * g[2][d];
        out[3][d] = 4.0 * (g[0][d] * l[1] + l[0] * g[1][d]);
        out[4][d] = 4.0 * (g[1][d] * l[2] + l[1] * g[2][d]);
        out[5][d] = 4.0 * (g[2][d] * l[0] + l[2] * g[0][d]);
    }
    out
}

/// Basis values and reference gradients at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisEval {
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 2]>,
}

/// Evaluates the degree-`degree` Lagrange basis at barycentric point `l`.
pub fn p_basis_eval(degree: usize, l: [f64; 3]) -> Result<BasisEval> {
    if l.iter().any(|&c| c < -1e-12) || (l.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "{l:?} is not a point of the reference triangle"
        )));
    }
    match degree {
        1 => Ok(BasisEval { values: p1_values(l).to_vec(), gradients: p1_gradients().to_vec() }),
        2 => Ok(BasisEval { values: p2_values(l).to_vec(), gradients: p2_gradients(l).to_vec() }),
        d => Err(Error::InvalidArgument(format!("unsupported element degree {d}"))),
    }
}
