//! Quadrature rules on the reference triangle and the unit interval.
//!
//! Triangle rules are stored in barycentric coordinates with weights that sum
//! to one, so a rule integrates `f` over a triangle of area `A` as
//! `A * sum(w_q f(x_q))`.

/// A symmetric rule on the triangle: barycentric points and normalized weights.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleRule {
    fn from_orbits(degree: usize, orbits: &[(f64, Orbit)]) -> Self {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for &(w, orbit) in orbits {
            match orbit {
                Orbit::Centroid => {
                    points.push([1.0 / 3.0; 3]);
                    weights.push(w);
                }
                Orbit::Two(a) => {
                    let b = 1.0 - 2.0 * a;
                    for p in [[a, a, b], [a, b, a], [b, a, a]] {
                        points.push(p);
                        weights.push(w);
                    }
                }
                Orbit::Three(a, b) => {
                    let c = 1.0 - a - b;
                    for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
                        points.push(p);
                        weights.push(w);
                    }
                }
            }
        }
        Self { points, weights, degree }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Three interior points, exact for quadratics.
    pub fn degree2() -> Self {
        Self::from_orbits(2, &[(1.0 / 3.0, Orbit::Two(1.0 / 6.0))])
    }

    /// Six points (Dunavant), exact for quartics.
    pub fn degree4() -> Self {
        Self::from_orbits(
            4,
            &[
                (0.223_381_589_678_011_47, Orbit::Two(0.445_948_490_915_964_9)),
                (0.109_951_743_655_321_87, Orbit::Two(0.091_576_213_509_770_74)),
            ],
        )
    }

    /// Twelve points (Dunavant), exact for sextics.
    pub fn degree6() -> Self {
        Self::from_orbits(
            6,
            &[
                (0.116_786_275_726_379_37, Orbit::Two(0.249_286_745_170_910_42)),
                (0.050_844_906_370_206_82, Orbit::Two(0.063_089_014_491_502_23)),
                (
                    0.082_851_075_618_373_58,
                    Orbit::Three(0.053_145_049_844_816_95, 0.310_352_451_033_784_4),
                ),
            ],
        )
    }
}

#[derive(Debug, Clone, Copy)]
enum Orbit {
    #[allow(dead_code)]
    Centroid,
    Two(f64),
    Three(f64, f64),
}

/// Three-point Gauss-Legendre rule on `[0, 1]` (exact through degree 5).
pub fn gauss3_unit() -> [(f64, f64); 3] {
    let d = 0.5 * (0.6f64).sqrt();
    [(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
}
