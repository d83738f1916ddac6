//! Wigner function of the projected squeezed state and a numerical route to
//! the overlap of Eve's two conditional states.
//!
//! Units are normalized (vacuum variance 1), so the projected state has
//! covariance `diag(V, 1/V)`, peak density `1/(2π)`, and the overlap of two
//! pure states is `|⟨ψ₀|ψ₁⟩|² = 4π ∫ W₀ W₁ dX dY`. In units where the vacuum
//! variance is 1/4 these read `2/π` and `π` respectively.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::{Error, Result};

/// A displaced, Y-squeezed Gaussian state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerSpec {
    pub x0: f64,
    pub y0: f64,
    /// Anti-squeezed variance; the squeezed variance is `1/v`.
    pub v: f64,
}

impl WignerSpec {
    pub fn new(x0: f64, y0: f64, v: f64) -> Result<Self> {
        if !(v.is_finite() && v >= 1.0) {
            return Err(Error::domain("V", v, "V >= 1"));
        }
        Ok(Self { x0, y0, v })
    }

    /// The pair of states Eve holds for the two values of Alice's bit when
    /// her tap is displaced by `y0`.
    pub fn eve_pair(y0: f64, v: f64) -> Result<(Self, Self)> {
        Ok((Self::new(0.0, y0, v)?, Self::new(0.0, -y0, v)?))
    }
}

pub fn wigner_density(x: f64, y: f64, spec: &WignerSpec) -> f64 {
    let dx = x - spec.x0;
    let dy = y - spec.y0;
    (-dx * dx / (2.0 * spec.v) - spec.v * dy * dy / 2.0).exp() / (2.0 * PI)
}

/// Gauss-Legendre panels per unit standard deviation along each axis.
const PANELS_PER_SD: f64 = 1.0;
const NODES_PER_PANEL: usize = 8;
/// Half-width of the integration box in standard deviations.
const BOX_SD: f64 = 12.0;

/// Composite Gauss-Legendre over `[a, b]` split into `panels` pieces.
fn composite_nodes(rule: &GaussLegendre, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * NODES_PER_PANEL);
    for k in 0..panels {
        let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for &(x, w) in rule.as_node_weight_pairs() {
            out.push((mid + half * x, w * half));
        }
    }
    out
}

fn overlap_integral(a: &WignerSpec, b: &WignerSpec, refine: usize) -> f64 {
    let rule = GaussLegendre::new(NonZeroUsize::new(NODES_PER_PANEL).expect("nonzero"));
    let (sx, sy) = (a.v.sqrt(), 1.0 / a.v.sqrt());
    let (xlo, xhi) = (
        a.x0.min(b.x0) - BOX_SD * sx,
        a.x0.max(b.x0) + BOX_SD * sx,
    );
    let (ylo, yhi) = (
        a.y0.min(b.y0) - BOX_SD * sy,
        a.y0.max(b.y0) + BOX_SD * sy,
    );
    let panels = |len: f64, sd: f64| ((len / sd * PANELS_PER_SD).ceil() as usize).max(1) * refine;
    let xs = composite_nodes(&rule, xlo, xhi, panels(xhi - xlo, sx));
    let ys = composite_nodes(&rule, ylo, yhi, panels(yhi - ylo, sy));
    let mut total = 0.0;
    for &(x, wx) in &xs {
        let row: f64 = ys
            .iter()
            .map(|&(y, wy)| wy * wigner_density(x, y, a) * wigner_density(x, y, b))
            .sum();
        total += wx * row;
    }
    total
}

/// `|⟨ψ₀|ψ₁⟩|²` for two states that differ only in the sign of `Y₀`,
/// by two-dimensional quadrature of `4π ∫ W(X, Y₀) W(X, -Y₀)`.
///
/// The integral is evaluated at two panel densities; disagreement beyond
/// `1e-9` relative is reported as an integration failure.
pub fn overlap_numeric(plus: &WignerSpec, minus: &WignerSpec) -> Result<f64> {
    if plus.x0 != minus.x0 || plus.v != minus.v || plus.y0 != -minus.y0 {
        return Err(Error::Integration(format!(
            "states must differ only in the sign of Y0: {plus:?} vs {minus:?}"
        )));
    }
    let coarse = 4.0 * PI * overlap_integral(plus, minus, 1);
    let fine = 4.0 * PI * overlap_integral(plus, minus, 2);
    if !fine.is_finite() || (fine - coarse).abs() > 1e-9 * fine.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Integration(format!(
            "overlap quadrature did not settle: {coarse:e} vs {fine:e}"
        )));
    }
    Ok(fine)
}

/// Integral of a single Wigner function over its box; 1 up to quadrature
/// error.
pub fn wigner_mass(spec: &WignerSpec) -> f64 {
    let rule = GaussLegendre::new(NonZeroUsize::new(NODES_PER_PANEL).expect("nonzero"));
    let (sx, sy) = (spec.v.sqrt(), 1.0 / spec.v.sqrt());
    let panels = (2.0 * BOX_SD * PANELS_PER_SD) as usize;
    let xs = composite_nodes(&rule, spec.x0 - BOX_SD * sx, spec.x0 + BOX_SD * sx, panels);
    let ys = composite_nodes(&rule, spec.y0 - BOX_SD * sy, spec.y0 + BOX_SD * sy, panels);
    xs.iter()
        .map(|&(x, wx)| wx * ys.iter().map(|&(y, wy)| wy * wigner_density(x, y, spec)).sum::<f64>())
        .sum()
}
