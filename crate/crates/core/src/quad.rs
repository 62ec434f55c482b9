//! Quadrature node sets built on `gauss-quad`.

use std::num::NonZeroUsize;

use gauss_quad::{GaussHermite, GaussLegendre};

/// Nodes and weights for expectations under `N(mean, std²)`; weights sum to 1.
pub fn normal_nodes(n: usize, mean: f64, std: f64) -> Vec<(f64, f64)> {
    let rule = GaussHermite::new(NonZeroUsize::new(n).expect("at least one node"));
    let norm = std::f64::consts::PI.sqrt();
    rule.iter()
        .map(|&(x, w)| (mean + std::f64::consts::SQRT_2 * std * x, w / norm))
        .collect()
}

/// Composite Gauss–Legendre rule on `[a, b]` with panels no wider than `max_panel`.
pub fn composite_legendre(a: f64, b: f64, max_panel: f64, points_per_panel: usize) -> Vec<(f64, f64)> {
    assert!(b > a && max_panel > 0.0);
    let rule = GaussLegendre::new(NonZeroUsize::new(points_per_panel).expect("at least one node"));
    let panels = ((b - a) / max_panel).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * points_per_panel);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        for &(x, w) in rule.iter() {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_moments() {
        let nodes = normal_nodes(32, -1.0, 0.5);
        let m0: f64 = nodes.iter().map(|(_, w)| w).sum();
        let m1: f64 = nodes.iter().map(|(x, w)| x * w).sum();
        let m2: f64 = nodes.iter().map(|(x, w)| (x + 1.0) * (x + 1.0) * w).sum();
        assert!((m0 - 1.0).abs() < 1e-13);
        assert!((m1 + 1.0).abs() < 1e-13);
        assert!((m2 - 0.25).abs() < 1e-13);
    }

    #[test]
    fn composite_gaussian_integral() {
        let nodes = composite_legendre(-10.0, 10.0, 0.5, 8);
        let s: f64 = nodes.iter().map(|(x, w)| w * (-x * x).exp()).sum();
        assert!((s - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }
}
