//! Gauss-Legendre rules on `[-1, 1]`.

use std::f64::consts::PI;

/// Nodes (ascending) and weights of the `order`-point Gauss-Legendre rule.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss rule needs at least one node");
        let m = order;
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        for i in 0..m.div_ceil(2) {
            // Tricomi initial guess for the i-th root from the top
            let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        Self { nodes, weights }
    }
}

/// `(P_m(x), P_m'(x))` by the three-term recurrence.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..m {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = p_next;
    }
    let dp = m as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for order in [1, 2, 5, 8, 12, 16] {
            let rule = GaussRule::new(order);
            let sum: f64 = rule.weights.iter().sum();
            assert!((sum - 2.0).abs() < 1e-13, "order {order}: {sum}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree() {
        // an m-point rule integrates degree <= 2m - 1 exactly on [-1, 1]
        for order in [2, 4, 8] {
            let rule = GaussRule::new(order);
            for deg in 0..2 * order {
                let approx: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(x, w)| w * x.powi(deg as i32))
                    .sum();
                let exact = if deg % 2 == 0 {
                    2.0 / (deg as f64 + 1.0)
                } else {
                    0.0
                };
                assert!(
                    (approx - exact).abs() < 1e-13,
                    "order {order}, degree {deg}: {approx} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn nodes_are_symmetric_and_sorted() {
        let rule = GaussRule::new(9);
        for i in 1..9 {
            assert!(rule.nodes[i] > rule.nodes[i - 1]);
        }
        for i in 0..9 {
            assert!((rule.nodes[i] + rule.nodes[8 - i]).abs() < 1e-15);
        }
    }
}
