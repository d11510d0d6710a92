//! Univariate proximal maps for the supported penalties.

use super::PenaltyKind;
use crate::error::{Error, Result};

/// `sign(v) * max(|v| - t, 0)`.
#[inline]
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

pub const SCAD_A: f64 = 3.7;
pub const MCP_GAMMA: f64 = 3.0;

/// Minimizer of `½(β − v)² + SCAD_{λ,a}(|β|)`.
pub fn scad_univariate(v: f64, lambda: f64, a: f64) -> Result<f64> {
    if !(a > 2.0) {
        return Err(Error::InvalidParameter(format!("SCAD a must exceed 2, got {a}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(scad_update(v, 1.0, lambda, a))
}

/// Firm thresholding: minimizer of `½(β − v)² + MCP_{λ,γ}(|β|)`.
pub fn mcp_univariate(v: f64, lambda: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 1.0) {
        return Err(Error::InvalidParameter(format!("MCP gamma must exceed 1, got {gamma}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(mcp_update(v, 1.0, lambda, gamma))
}

// Solves min_b (curv/2) b² − z b + SCAD(|b|). Exact while the quadratic
// dominates the concavity (curv > 1/(a−1)); otherwise falls back to the
// rescaled unit-curvature rule.
fn scad_update(z: f64, curv: f64, lam: f64, a: f64) -> f64 {
    if curv <= 1.0 / (a - 1.0) {
        return scad_update(z / curv, 1.0, lam / curv, a);
    }
    let az = z.abs();
    if az <= lam * (1.0 + curv) {
        soft_threshold(z, lam) / curv
    } else if az <= a * lam * curv {
        soft_threshold(z, a * lam / (a - 1.0)) / (curv - 1.0 / (a - 1.0))
    } else {
        z / curv
    }
}

fn mcp_update(z: f64, curv: f64, lam: f64, gamma: f64) -> f64 {
    if curv <= 1.0 / gamma {
        return mcp_update(z / curv, 1.0, lam / curv, gamma);
    }
    if z.abs() <= gamma * lam * curv {
        soft_threshold(z, lam) / (curv - 1.0 / gamma)
    } else {
        z / curv
    }
}

/// Coordinate update: minimizer over `b` of `(curv/2) b² − z b + pen(b)`
/// where `pen` is the penalty of `kind` at level `lam` (already multiplied
/// by the coordinate's factor).
#[inline]
pub(crate) fn coordinate_update(kind: PenaltyKind, z: f64, curv: f64, lam: f64) -> f64 {
    if lam == 0.0 {
        return z / curv;
    }
    match kind {
        PenaltyKind::None => z / curv,
        PenaltyKind::L1 => soft_threshold(z, lam) / curv,
        PenaltyKind::ElasticNet { mix } => soft_threshold(z, lam * mix) / (curv + lam * (1.0 - mix)),
        PenaltyKind::Scad { a } => scad_update(z, curv, lam, a),
        PenaltyKind::Mcp { gamma } => mcp_update(z, curv, lam, gamma),
    }
}

/// Penalty value at `|b|` for level `lam`.
pub(crate) fn penalty_value(kind: PenaltyKind, b: f64, lam: f64) -> f64 {
    let t = b.abs();
    match kind {
        PenaltyKind::None => 0.0,
        PenaltyKind::L1 => lam * t,
        PenaltyKind::ElasticNet { mix } => lam * (mix * t + 0.5 * (1.0 - mix) * t * t),
        PenaltyKind::Scad { a } => {
            if t <= lam {
                lam * t
            } else if t <= a * lam {
                (2.0 * a * lam * t - t * t - lam * lam) / (2.0 * (a - 1.0))
            } else {
                lam * lam * (a + 1.0) / 2.0
            }
        }
        PenaltyKind::Mcp { gamma } => {
            if t <= gamma * lam {
                lam * t - t * t / (2.0 * gamma)
            } else {
                gamma * lam * lam / 2.0
            }
        }
    }
}
