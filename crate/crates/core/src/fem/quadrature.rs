//! Symmetric Gauss rules on the reference triangle `(0,0), (1,0), (0,1)`.
//!
//! Points are stored in barycentric coordinates and weights sum to the
//! reference area `1/2`. Every rule has strictly positive weights and
//! interior points.

use crate::error::{Error, Result};

/// Highest polynomial degree any built-in rule integrates exactly.
pub const MAX_EXACT_DEGREE: usize = 10;

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    /// Polynomial degree the rule integrates exactly.
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

/// One symmetry orbit of a rule. Weights are normalized to a unit-area
/// triangle and rescaled when the rule is expanded.
enum Orbit {
    Centroid(f64),
    /// `(a, a, 1 - 2a)` and its rotations.
    Three(f64, f64),
    /// All permutations of `(a, b, 1 - a - b)`.
    Six(f64, f64, f64),
}

use Orbit::*;

const DEG1: &[Orbit] = &[Centroid(1.0)];
const DEG2: &[Orbit] = &[Three(1.0 / 6.0, 1.0 / 3.0)];
const DEG4: &[Orbit] = &[
    Three(0.44594849091596488632, 0.2233815896780114657),
    Three(0.09157621350977074346, 0.10995174365532186764),
];
const DEG5: &[Orbit] = &[
    Centroid(0.225),
    Three(0.47014206410511508977, 0.13239415278850618074),
    Three(0.1012865073234563388, 0.1259391805448271526),
];
const DEG6: &[Orbit] = &[
    Three(0.24928674517091042129, 0.11678627572637936603),
    Three(0.06308901449150222834, 0.050844906370206816921),
    Six(0.053145049844816947353, 0.31035245103378440542, 0.082851075618373575194),
];
const DEG8: &[Orbit] = &[
    Centroid(0.14431560767778716825),
    Three(0.45929258829272315603, 0.095091634267284624794),
    Three(0.17056930775176020662, 0.10321737053471825028),
    Three(0.050547228317030975458, 0.032458497623198080311),
    Six(0.0083947774099576053372, 0.26311282963463811342, 0.027230314174434994265),
];
const DEG10: &[Orbit] = &[
    Centroid(0.090817990382753580095),
    Three(0.48557763338365737737, 0.036725957756466704717),
    Three(0.1094815754850370548, 0.045321059435527934783),
    Six(0.14170721941487995476, 0.30793983876412095017, 0.072757916845420108604),
    Six(0.025003534762686386074, 0.24667256063990269392, 0.028327242531057484837),
    Six(0.0095408154002994575802, 0.066803251012200265774, 0.0094216669637328234599),
];

impl QuadratureRule {
    /// Smallest built-in rule exact for polynomials of total degree
    /// `min_exact_degree`.
    pub fn for_degree(min_exact_degree: usize) -> Result<Self> {
        let (degree, orbits) = match min_exact_degree {
            0 | 1 => (1, DEG1),
            2 => (2, DEG2),
            3 | 4 => (4, DEG4),
            5 => (5, DEG5),
            6 => (6, DEG6),
            7 | 8 => (8, DEG8),
            9 | 10 => (10, DEG10),
            d => {
                return Err(Error::InvalidArgument(format!(
                    "no triangle rule exact to degree {d} (maximum {MAX_EXACT_DEGREE})"
                )))
            }
        };
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for orbit in orbits {
            match *orbit {
                Centroid(w) => {
                    points.push([1.0 / 3.0; 3]);
                    weights.push(0.5 * w);
                }
                Three(a, w) => {
                    let c = 1.0 - 2.0 * a;
                    for p in [[a, a, c], [a, c, a], [c, a, a]] {
                        points.push(p);
                        weights.push(0.5 * w);
                    }
                }
                Six(a, b, w) => {
                    let c = 1.0 - a - b;
                    for p in [[a, b, c], [b, a, c], [a, c, b], [c, a, b], [b, c, a], [c, b, a]] {
                        points.push(p);
                        weights.push(0.5 * w);
                    }
                }
            }
        }
        Ok(Self { degree, points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Reference coordinates `(xi, eta)` of point `q`.
    pub fn reference_point(&self, q: usize) -> [f64; 2] {
        [self.points[q][1], self.points[q][2]]
    }
}

/// Free function form of [`QuadratureRule::for_degree`].
pub fn quadrature_rule(min_exact_degree: usize) -> Result<QuadratureRule> {
    QuadratureRule::for_degree(min_exact_degree)
}
