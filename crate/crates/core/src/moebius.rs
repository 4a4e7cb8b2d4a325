//! Möbius transformations as 2×2 complex matrices acting on the Riemann
//! sphere, together with the circle-mapping machinery the group validator
//! needs.
//!
//! Matrices are *not* normalized to unit determinant; every consumer in this
//! crate is projectively safe. The point at infinity is a first-class value
//! so that conjugated configurations can push fixed points to ∞ without
//! special-casing callers.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Determinant magnitudes below this are treated as singular.
pub const DET_FLOOR: f64 = 1e-300;

/// Tie tolerance on the multiplier modulus when ordering fixed points.
const MULTIPLIER_TIE_TOL: f64 = 1e-14;

/// A point of the Riemann sphere: a finite complex number or ∞.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComplexPoint {
    Finite(Complex64),
    Infinity,
}

impl ComplexPoint {
    pub fn finite(re: f64, im: f64) -> Self {
        ComplexPoint::Finite(Complex64::new(re, im))
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, ComplexPoint::Infinity)
    }

    pub fn as_finite(&self) -> Option<Complex64> {
        match self {
            ComplexPoint::Finite(z) => Some(*z),
            ComplexPoint::Infinity => None,
        }
    }

    /// Finite value or an error; for callers whose invariants rule out ∞.
    pub fn expect_finite(&self, context: &str) -> Result<Complex64> {
        self.as_finite()
            .ok_or_else(|| Error::Structural(format!("unexpected point at infinity: {context}")))
    }

    /// Chordal-style closeness test that treats ∞ as matching only ∞.
    pub fn approx_eq(&self, other: &ComplexPoint, tol: f64) -> bool {
        match (self, other) {
            (ComplexPoint::Infinity, ComplexPoint::Infinity) => true,
            (ComplexPoint::Finite(a), ComplexPoint::Finite(b)) => (a - b).norm() <= tol,
            _ => false,
        }
    }
}

impl From<Complex64> for ComplexPoint {
    fn from(z: Complex64) -> Self {
        ComplexPoint::Finite(z)
    }
}

impl std::fmt::Display for ComplexPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ComplexPoint::Finite(z) => write!(f, "{z}"),
            ComplexPoint::Infinity => write!(f, "∞"),
        }
    }
}

/// Plain 2×2 complex matrix. Used for generator perturbations and the
/// weight matrix of the variational integrand, where invertibility is not
/// required.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub e: [[Complex64; 2]; 2],
}

impl Mat2 {
    pub fn new(e11: Complex64, e12: Complex64, e21: Complex64, e22: Complex64) -> Self {
        Mat2 {
            e: [[e11, e12], [e21, e22]],
        }
    }

    pub fn zero() -> Self {
        let z = Complex64::new(0.0, 0.0);
        Mat2::new(z, z, z, z)
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let z = Complex64::new(0.0, 0.0);
        Mat2::new(one, z, z, one)
    }

    pub fn det(&self) -> Complex64 {
        self.e[0][0] * self.e[1][1] - self.e[0][1] * self.e[1][0]
    }

    pub fn trace(&self) -> Complex64 {
        self.e[0][0] + self.e[1][1]
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let a = &self.e;
        let b = &rhs.e;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    pub fn add(&self, rhs: &Mat2) -> Mat2 {
        Mat2::new(
            self.e[0][0] + rhs.e[0][0],
            self.e[0][1] + rhs.e[0][1],
            self.e[1][0] + rhs.e[1][0],
            self.e[1][1] + rhs.e[1][1],
        )
    }

    pub fn sub(&self, rhs: &Mat2) -> Mat2 {
        Mat2::new(
            self.e[0][0] - rhs.e[0][0],
            self.e[0][1] - rhs.e[0][1],
            self.e[1][0] - rhs.e[1][0],
            self.e[1][1] - rhs.e[1][1],
        )
    }

    pub fn scale(&self, lambda: Complex64) -> Mat2 {
        Mat2::new(
            self.e[0][0] * lambda,
            self.e[0][1] * lambda,
            self.e[1][0] * lambda,
            self.e[1][1] * lambda,
        )
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.e
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.e
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Classification of a Möbius transformation by its multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapClass {
    /// Multiplier off the unit circle; attracting/repelling pair is ordered.
    Loxodromic,
    /// Multiplier on the unit circle but ≠ 1; no attraction, ordering is
    /// reported as computed.
    Elliptic,
    /// Coincident fixed points, multiplier 1.
    Parabolic,
}

/// Fixed points ordered (attracting, repelling) plus the multiplier, which
/// follows the |multiplier| < 1 convention for loxodromic maps.
#[derive(Debug, Clone, Copy)]
pub struct FixedPointAnalysis {
    pub class: MapClass,
    pub attracting: ComplexPoint,
    pub repelling: ComplexPoint,
    pub multiplier: Complex64,
}

/// Möbius transformation u ↦ (c11·u + c12)/(c21·u + c22).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoebiusMap {
    m: Mat2,
}

impl MoebiusMap {
    pub fn new(c11: Complex64, c12: Complex64, c21: Complex64, c22: Complex64) -> Result<Self> {
        Self::from_matrix(Mat2::new(c11, c12, c21, c22))
    }

    pub fn from_matrix(m: Mat2) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::InvalidMap("non-finite matrix entry".into()));
        }
        if m.det().norm() <= DET_FLOOR {
            return Err(Error::InvalidMap(format!(
                "determinant magnitude {:.3e} below floor",
                m.det().norm()
            )));
        }
        Ok(MoebiusMap { m })
    }

    pub fn from_real_entries(c11: f64, c12: f64, c21: f64, c22: f64) -> Result<Self> {
        Self::new(
            Complex64::new(c11, 0.0),
            Complex64::new(c12, 0.0),
            Complex64::new(c21, 0.0),
            Complex64::new(c22, 0.0),
        )
    }

    pub fn identity() -> Self {
        MoebiusMap {
            m: Mat2::identity(),
        }
    }

    /// Loxodromic map with the given attracting/repelling fixed points and
    /// multiplier (|multiplier| < 1). The stored representative is the
    /// specific matrix
    /// ((A − μB, AB(μ − 1)), (1 − μ, μA − B)),
    /// which the moduli parameterization differentiates analytically; its
    /// determinant is μ(A − B)².
    pub fn from_fixed_points(
        attracting: Complex64,
        repelling: Complex64,
        multiplier: Complex64,
    ) -> Result<Self> {
        let a = attracting;
        let b = repelling;
        let mu = multiplier;
        if (a - b).norm() < 1e-14 {
            return Err(Error::InvalidMap(
                "coincident fixed points in loxodromic constructor".into(),
            ));
        }
        if mu.norm() <= DET_FLOOR || mu.norm() >= 1.0 {
            return Err(Error::InvalidMap(format!(
                "multiplier modulus {:.3e} outside (0, 1)",
                mu.norm()
            )));
        }
        MoebiusMap::new(a - mu * b, a * b * (mu - 1.0), 1.0 - mu, mu * a - b)
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.m
    }

    pub fn det(&self) -> Complex64 {
        self.m.det()
    }

    /// Apply to a sphere point: pole ↦ ∞ and ∞ ↦ c11/c21 (or ∞ when c21 = 0).
    pub fn apply(&self, p: ComplexPoint) -> ComplexPoint {
        let [[a, b], [c, d]] = self.m.e;
        match p {
            ComplexPoint::Infinity => {
                if c.norm() == 0.0 {
                    ComplexPoint::Infinity
                } else {
                    ComplexPoint::Finite(a / c)
                }
            }
            ComplexPoint::Finite(u) => {
                let den = c * u + d;
                if den.norm() == 0.0 {
                    ComplexPoint::Infinity
                } else {
                    ComplexPoint::Finite((a * u + b) / den)
                }
            }
        }
    }

    /// Matrix product realizing `self ∘ rhs`.
    pub fn compose(&self, rhs: &MoebiusMap) -> MoebiusMap {
        MoebiusMap {
            m: self.m.mul(&rhs.m),
        }
    }

    /// True inverse (adjugate over determinant), so that perturbation terms
    /// δŜ·Ŝ⁻¹ keep the absolute scale of the stored representative.
    pub fn inverse(&self) -> MoebiusMap {
        let [[a, b], [c, d]] = self.m.e;
        let det = self.m.det();
        MoebiusMap {
            m: Mat2::new(d / det, -b / det, -c / det, a / det),
        }
    }

    /// Derivative of the action at a finite point: det/(c21·u + c22)².
    pub fn derivative_at(&self, u: Complex64) -> Complex64 {
        let [[_, _], [c, d]] = self.m.e;
        let den = c * u + d;
        self.m.det() / (den * den)
    }

    pub fn scale(&self, lambda: Complex64) -> Result<MoebiusMap> {
        MoebiusMap::from_matrix(self.m.scale(lambda))
    }

    fn is_proportional_to_identity(&self) -> bool {
        let [[a, b], [c, d]] = self.m.e;
        let scale = self.m.frobenius_norm();
        b.norm() <= 1e-14 * scale && c.norm() <= 1e-14 * scale && (a - d).norm() <= 1e-14 * scale
    }

    /// Fixed points ordered (attracting, repelling) with the multiplier.
    ///
    /// Parabolic degeneracy (coincident fixed points) is reported as a
    /// distinct status rather than an error; scalar matrices are rejected.
    pub fn fixed_points(&self) -> Result<FixedPointAnalysis> {
        if self.is_proportional_to_identity() {
            return Err(Error::InvalidMap(
                "fixed points undefined for a scalar matrix".into(),
            ));
        }
        let [[a, b], [c, d]] = self.m.e;
        let det = self.m.det();
        let tr = a + d;
        // Projectively invariant parabolic test: tr²/det = 4 iff multiplier = 1.
        let disc = tr * tr - 4.0 * det;
        if disc.norm() <= 1e-28 * (tr.norm_sqr() + 4.0 * det.norm()) {
            let fp = if c.norm() == 0.0 {
                ComplexPoint::Infinity
            } else {
                ComplexPoint::Finite((a - d) / (2.0 * c))
            };
            return Ok(FixedPointAnalysis {
                class: MapClass::Parabolic,
                attracting: fp,
                repelling: fp,
                multiplier: Complex64::new(1.0, 0.0),
            });
        }

        if c.norm() == 0.0 {
            // Affine map: fixed points b/(d−a) and ∞.
            let finite_fp = b / (d - a);
            let mult_finite = a / d;
            let mult_inf = d / a;
            let (att, rep, mult) = if mult_finite.norm() <= 1.0 {
                (ComplexPoint::Finite(finite_fp), ComplexPoint::Infinity, mult_finite)
            } else {
                (ComplexPoint::Infinity, ComplexPoint::Finite(finite_fp), mult_inf)
            };
            let class = if (mult.norm() - 1.0).abs() <= MULTIPLIER_TIE_TOL {
                MapClass::Elliptic
            } else {
                MapClass::Loxodromic
            };
            return Ok(FixedPointAnalysis {
                class,
                attracting: att,
                repelling: rep,
                multiplier: mult,
            });
        }

        // Roots of c·u² + (d − a)·u − b = 0, computed stably.
        let qa = c;
        let qb = d - a;
        let qc = -b;
        let sqrt_disc = disc.sqrt();
        let sigma = if (qb.conj() * sqrt_disc).re >= 0.0 {
            1.0
        } else {
            -1.0
        };
        let q = -0.5 * (qb + sigma * sqrt_disc);
        let root1 = q / qa;
        let root2 = qc / q;

        let m1 = self.derivative_at(root1);
        let m2 = self.derivative_at(root2);
        let (att, rep, mult) = if m1.norm() <= m2.norm() {
            (root1, root2, m1)
        } else {
            (root2, root1, m2)
        };
        let class = if (mult.norm() - 1.0).abs() <= MULTIPLIER_TIE_TOL {
            MapClass::Elliptic
        } else {
            MapClass::Loxodromic
        };
        Ok(FixedPointAnalysis {
            class,
            attracting: ComplexPoint::Finite(att),
            repelling: ComplexPoint::Finite(rep),
            multiplier: mult,
        })
    }
}

/// Euclidean circle in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Complex64, radius: f64) -> Self {
        Circle { center, radius }
    }

    pub fn contains(&self, p: Complex64) -> bool {
        (p - self.center).norm() < self.radius
    }

    /// Signed distance from the boundary: negative inside, positive outside.
    pub fn boundary_distance(&self, p: Complex64) -> f64 {
        (p - self.center).norm() - self.radius
    }

    pub fn point_at_angle(&self, theta: f64) -> Complex64 {
        self.center + self.radius * Complex64::new(theta.cos(), theta.sin())
    }
}

/// Image of a circle under a Möbius map: a circle, or a line when the
/// source circle passes through the pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneralizedCircle {
    Circle(Circle),
    Line {
        anchor: Complex64,
        direction: Complex64,
    },
}

/// Image circle together with where the source disk's interior went.
#[derive(Debug, Clone, Copy)]
pub struct CircleImage {
    pub curve: GeneralizedCircle,
    /// `Some(true)` when the source interior maps to the image circle's
    /// interior; `Some(false)` for the exterior; `None` for line images,
    /// where "interior" is not defined.
    pub interior_to_interior: Option<bool>,
}

/// Exact image of a circle under a Möbius map, via the translation /
/// inversion / scaling decomposition. The component maps take circles to
/// circles in closed form, so no fitting is involved.
pub fn image_of_circle(map: &MoebiusMap, circle: &Circle) -> Result<CircleImage> {
    if circle.radius <= 0.0 {
        return Err(Error::Structural("circle radius must be positive".into()));
    }
    let [[a, b], [c, d]] = map.matrix().e;

    if c.norm() == 0.0 {
        // Affine: w = (a·z + b)/d.
        let center = (a * circle.center + b) / d;
        let radius = (a / d).norm() * circle.radius;
        return Ok(CircleImage {
            curve: GeneralizedCircle::Circle(Circle::new(center, radius)),
            interior_to_interior: Some(true),
        });
    }

    let pole = -d / c;
    let pole_gap = (pole - circle.center).norm() - circle.radius;
    let scale = circle.radius.max(1.0);
    if pole_gap.abs() <= 1e-12 * scale {
        // Circle through the pole: the image is a line through the images of
        // two boundary points away from the pole.
        let e = (pole - circle.center) / (pole - circle.center).norm();
        let p1 = circle.center - circle.radius * e;
        let p2 = circle.center + Complex64::new(0.0, circle.radius) * e;
        let w1 = map
            .apply(ComplexPoint::Finite(p1))
            .expect_finite("line image anchor")?;
        let w2 = map
            .apply(ComplexPoint::Finite(p2))
            .expect_finite("line image direction")?;
        let dir = (w2 - w1) / (w2 - w1).norm();
        return Ok(CircleImage {
            curve: GeneralizedCircle::Line {
                anchor: w1,
                direction: dir,
            },
            interior_to_interior: None,
        });
    }

    // w = a/c + λ · 1/(z − pole), λ = (bc − ad)/c².
    let lambda = (b * c - a * d) / (c * c);
    let m1 = circle.center - pole;
    let denom = m1.norm_sqr() - circle.radius * circle.radius;
    let inv_center = m1.conj() / denom;
    let inv_radius = circle.radius / denom.abs();
    let center = lambda * inv_center + a / c;
    let radius = lambda.norm() * inv_radius;
    let image = Circle::new(center, radius);

    // Sample an interior point away from the pole to decide orientation.
    let sample = if (circle.center - pole).norm() > 1e-9 * circle.radius {
        circle.center
    } else {
        circle.center + 0.5 * circle.radius * Complex64::new(1.0, 0.0)
    };
    let interior_to_interior = match map.apply(ComplexPoint::Finite(sample)) {
        ComplexPoint::Infinity => Some(false),
        ComplexPoint::Finite(w) => Some(image.contains(w)),
    };

    Ok(CircleImage {
        curve: GeneralizedCircle::Circle(image),
        interior_to_interior,
    })
}
