//! Symmetric quadrature rules on the reference triangle.

use crate::error::{Error, Result};

/// Points in barycentric coordinates, weights summing to the reference area 1/2.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
    degree: usize,
}

/// Quadrature degree used unless configured otherwise.
pub const DEFAULT_DEGREE: usize = 5;

const MAX_DEGREE: usize = 6;

fn orbit3(a: f64, w: f64, pts: &mut Vec<[f64; 3]>, wts: &mut Vec<f64>) {
    let b = 1.0 - 2.0 * a;
    for p in [[b, a, a], [a, b, a], [a, a, b]] {
        pts.push(p);
        wts.push(w);
    }
}

fn orbit6(a: f64, b: f64, w: f64, pts: &mut Vec<[f64; 3]>, wts: &mut Vec<f64>) {
    let c = 1.0 - a - b;
    for p in [[a, b, c], [b, c, a], [c, a, b], [b, a, c], [a, c, b], [c, b, a]] {
        pts.push(p);
        wts.push(w);
    }
}

impl QuadratureRule {
    /// Smallest built-in rule that integrates polynomials of `degree` exactly.
    pub fn with_degree(degree: usize) -> Result<Self> {
        let mut pts = Vec::new();
        let mut wts = Vec::new();
        let exact = match degree {
            0 | 1 => {
                pts.push([1.0 / 3.0; 3]);
                wts.push(1.0);
                1
            }
            2 => {
                orbit3(1.0 / 6.0, 1.0 / 3.0, &mut pts, &mut wts);
                2
            }
            3 | 4 => {
                orbit3(0.445_948_490_915_965, 0.223_381_589_678_011, &mut pts, &mut wts);
                orbit3(0.091_576_213_509_771, 0.109_951_743_655_322, &mut pts, &mut wts);
                4
            }
            5 => {
                let s15 = 15f64.sqrt();
                pts.push([1.0 / 3.0; 3]);
                wts.push(9.0 / 40.0);
                orbit3((6.0 - s15) / 21.0, (155.0 - s15) / 1200.0, &mut pts, &mut wts);
                orbit3((6.0 + s15) / 21.0, (155.0 + s15) / 1200.0, &mut pts, &mut wts);
                5
            }
            6 => {
                orbit3(0.249_286_745_170_910, 0.116_786_275_726_379, &mut pts, &mut wts);
                orbit3(0.063_089_014_491_502, 0.050_844_906_370_207, &mut pts, &mut wts);
                orbit6(
                    0.053_145_049_844_817,
                    0.310_352_451_033_784,
                    0.082_851_075_618_374,
                    &mut pts,
                    &mut wts,
                );
                6
            }
            d => {
                return Err(Error::InvalidArgument(format!(
                    "no quadrature rule of degree {d} (max {MAX_DEGREE})"
                )))
            }
        };
        // normalise so that the weights sum to the reference area exactly
        let total: f64 = wts.iter().sum();
        let weights = wts.iter().map(|w| 0.5 * w / total).collect();
        Ok(QuadratureRule {
            points: pts,
            weights,
            degree: exact,
        })
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Polynomial exactness degree.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule::with_degree(DEFAULT_DEGREE).expect("default rule exists")
    }
}
