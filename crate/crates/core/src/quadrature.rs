//! Quadrature rules on the reference triangle and on edges.

/// Triangle rule in barycentric coordinates. Weights are fractions of the
/// triangle area and sum to one.
#[derive(Clone, Debug)]
pub struct Quadrature {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl Quadrature {
    /// Six-point symmetric rule, exact for polynomials of degree 4.
    #[allow(clippy::excessive_precision)]
    pub fn degree4() -> Self {
        const A1: f64 = 0.445_948_490_915_964_886_32;
        const W1: f64 = 0.223_381_589_678_011_465_70;
        const A2: f64 = 0.091_576_213_509_770_743_460;
        const W2: f64 = 0.109_951_743_655_321_867_64;
        let b1 = 1.0 - 2.0 * A1;
        let b2 = 1.0 - 2.0 * A2;
        Quadrature {
            points: vec![
                [A1, A1, b1],
                [A1, b1, A1],
                [b1, A1, A1],
                [A2, A2, b2],
                [A2, b2, A2],
                [b2, A2, A2],
            ],
            weights: vec![W1, W1, W1, W2, W2, W2],
            degree: 4,
        }
    }

    pub fn centroid() -> Self {
        Quadrature {
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![1.0],
            degree: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss-Legendre rule on [0, 1].
#[derive(Clone, Debug)]
pub struct EdgeQuadrature {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl EdgeQuadrature {
    pub fn gauss3() -> Self {
        let r = (0.6f64).sqrt() / 2.0;
        EdgeQuadrature {
            points: vec![0.5 - r, 0.5, 0.5 + r],
            weights: vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn weights_sum_to_one() {
        let q = Quadrature::degree4();
        let s: f64 = q.weights.iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
        assert!(q.weights.iter().all(|&w| w > 0.0));
        for p in &q.points {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_on_reference_monomials() {
        // reference triangle (0,0), (1,0), (0,1): x = l1, y = l2, area 1/2
        // and the integral of x^a y^b is a! b! / (a + b + 2)!
        let q = Quadrature::degree4();
        for a in 0..=4u32 {
            for b in 0..=(4 - a) {
                let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                let approx: f64 = q
                    .points
                    .iter()
                    .zip(&q.weights)
                    .map(|(p, w)| 0.5 * w * p[1].powi(a as i32) * p[2].powi(b as i32))
                    .sum();
                assert!(
                    ((approx - exact) / exact).abs() < 1e-13,
                    "x^{a} y^{b}: {approx} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn gauss3_exact_to_degree_five() {
        let q = EdgeQuadrature::gauss3();
        for k in 0..=5 {
            let approx: f64 = q.points.iter().zip(&q.weights).map(|(t, w)| w * t.powi(k)).sum();
            assert!((approx - 1.0 / (k as f64 + 1.0)).abs() < 1e-14);
        }
    }
}
