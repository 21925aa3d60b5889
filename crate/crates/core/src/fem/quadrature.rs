/// Quadrature on the reference simplex in barycentric coordinates. Weights
/// sum to the reference measure (1/6 for the tetrahedron, 1/2 for the
/// triangle); multiply by 6|T| or 2|F| to integrate over a physical element.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<const N: usize> {
    pub points: Vec<[f64; N]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule<4> {
    /// Four-point rule, exact for quadratics.
    pub fn tet_degree2() -> Self {
        const A: f64 = 0.585_410_196_624_968_5;
        const B: f64 = 0.138_196_601_125_010_5;
        Self {
            points: vec![[A, B, B, B], [B, A, B, B], [B, B, A, B], [B, B, B, A]],
            weights: vec![1.0 / 24.0; 4],
        }
    }
}

impl QuadratureRule<3> {
    /// Three-point rule, exact for quadratics.
    pub fn triangle_degree2() -> Self {
        const A: f64 = 2.0 / 3.0;
        const B: f64 = 1.0 / 6.0;
        Self {
            points: vec![[A, B, B], [B, A, B], [B, B, A]],
            weights: vec![1.0 / 6.0; 3],
        }
    }
}

impl<const N: usize> QuadratureRule<N> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}
