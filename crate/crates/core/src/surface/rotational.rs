//! Surfaces of revolution in ℝ³ with constant `H₂ = κ₁κ₂`.
//!
//! The profile `s ↦ (ρ(s), z(s))` is parametrized by arclength with `ψ` the
//! angle between its tangent and the axis direction, so
//! `ρ' = −sin ψ`, `z' = cos ψ`, `κ₁ = ψ'` and `κ₂ = cos ψ / ρ`. Constant `H₂`
//! gives `ψ' = H₂ ρ / cos ψ`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Domain, ParametricPatch, SurfaceMap};
use crate::error::{Error, Result};
use crate::jet::{Jet, JetVec};
use crate::spaceform::SpaceForm;

/// Absolute local error tolerance of the profile integrator.
pub const PROFILE_TOLERANCE: f64 = 1e-9;

/// Initial data at `s = 0`, where the profile starts at height zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSeed {
    pub radius: f64,
    #[serde(default)]
    pub angle: f64,
}

type State = [f64; 3];

fn rhs(h2: f64, y: &State) -> Result<State> {
    let (rho, psi) = (y[0], y[2]);
    let cp = psi.cos();
    if rho <= 1e-8 || cp <= 1e-8 {
        return Err(Error::OdeFailure(format!("profile degenerates (ρ = {rho:.3e}, cos ψ = {cp:.3e})")));
    }
    Ok([-psi.sin(), cp, h2 * rho / cp])
}

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// One Dormand–Prince step; returns the fifth-order solution and an error estimate.
fn dp_step(h2: f64, y: &State, h: f64) -> Result<(State, f64)> {
    let _ = C;
    let mut k = [[0.0; 3]; 7];
    for stage in 0..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(stage) {
            for i in 0..3 {
                ys[i] += h * A[stage][j] * kj[i];
            }
        }
        k[stage] = rhs(h2, &ys)?;
    }
    let mut y5 = *y;
    let mut err: f64 = 0.0;
    for i in 0..3 {
        let mut d5 = 0.0;
        let mut d4 = 0.0;
        for s in 0..7 {
            d5 += B5[s] * k[s][i];
            d4 += B4[s] * k[s][i];
        }
        y5[i] += h * d5;
        err = err.max((h * (d5 - d4)).abs());
    }
    Ok((y5, err))
}

/// Adaptive integration from `s0` to `s1` (either direction); returns accepted nodes.
fn integrate(h2: f64, y0: State, s0: f64, s1: f64) -> Result<Vec<(f64, State)>> {
    let dir = if s1 >= s0 { 1.0 } else { -1.0 };
    let mut nodes = vec![(s0, y0)];
    let (mut s, mut y) = (s0, y0);
    let mut h: f64 = 1e-2;
    let mut steps = 0;
    while (s1 - s) * dir > 1e-15 {
        steps += 1;
        if steps > 200_000 {
            return Err(Error::OdeFailure("step budget exhausted".into()));
        }
        h = h.min((s1 - s).abs());
        let (yn, err) = dp_step(h2, &y, dir * h)?;
        if err <= PROFILE_TOLERANCE {
            s += dir * h;
            y = yn;
            nodes.push((s, y));
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * (PROFILE_TOLERANCE / err).powf(0.2)).clamp(0.2, 5.0) };
        h = (h * factor).min(0.05);
        if h < 1e-12 {
            return Err(Error::OdeFailure(format!("step size underflow at s = {s}")));
        }
    }
    Ok(nodes)
}

/// An integrated profile curve on an arclength interval.
#[derive(Clone, Debug)]
pub struct RotationalProfile {
    pub h2: f64,
    pub s_range: [f64; 2],
    nodes: Vec<(f64, State)>,
}

impl RotationalProfile {
    pub fn integrate(h2: f64, seed: ProfileSeed, s_range: [f64; 2]) -> Result<Self> {
        if !(h2 > 0.0) {
            return Err(Error::InvalidArgument(format!("H2 must be positive, got {h2}")));
        }
        if !(s_range[0] <= 0.0 && s_range[1] >= 0.0 && s_range[0] < s_range[1]) {
            return Err(Error::InvalidArgument("arclength range must contain 0".into()));
        }
        let y0 = [seed.radius, 0.0, seed.angle];
        let mut back = integrate(h2, y0, 0.0, s_range[0])?;
        back.reverse();
        back.pop();
        back.extend(integrate(h2, y0, 0.0, s_range[1])?);
        Ok(RotationalProfile { h2, s_range, nodes: back })
    }

    /// `(ρ, z, ψ)` at arclength `s`.
    pub fn state(&self, s: f64) -> State {
        let s = s.clamp(self.s_range[0], self.s_range[1]);
        let i = match self.nodes.binary_search_by(|n| n.0.total_cmp(&s)) {
            Ok(i) => return self.nodes[i].1,
            Err(i) => i,
        };
        // step from the nearer neighbouring node
        let (s0, y0) = if i == 0 {
            self.nodes[0]
        } else if i >= self.nodes.len() {
            self.nodes[self.nodes.len() - 1]
        } else if (s - self.nodes[i - 1].0) <= (self.nodes[i].0 - s) {
            self.nodes[i - 1]
        } else {
            self.nodes[i]
        };
        match dp_step(self.h2, &y0, s - s0) {
            Ok((y, _)) => y,
            Err(_) => y0,
        }
    }

    /// Derivatives `[f, f', f'', f''']` of `ρ` and `z` at `s`.
    pub fn derivatives(&self, s: f64) -> ([f64; 4], [f64; 4]) {
        let [rho, z, psi] = self.state(s);
        let (sp, cp) = psi.sin_cos();
        let h = self.h2;
        let p1 = h * rho / cp;
        let rho1 = -sp;
        let p2 = h * (rho1 * cp + rho * sp * p1) / (cp * cp);
        ([rho, rho1, -cp * p1, sp * p1 * p1 - cp * p2], [z, cp, -sp * p1, -cp * p1 * p1 - sp * p2])
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

/// Surface of revolution about the `x₃` axis over the annulus `1 ≤ |w| ≤ 1 + L`,
/// where `|w| − 1` is arclength along the profile.
#[derive(Debug)]
struct RotationalMap {
    profile: Arc<RotationalProfile>,
}

impl SurfaceMap for RotationalMap {
    fn eval(&self, u: Jet, v: Jet) -> JetVec {
        let r = (u * u + v * v).sqrt();
        let s = r - 1.0 + self.profile.s_range[0];
        let (rd, zd) = self.profile.derivatives(s.value());
        let rho = s.apply(rd);
        let z = s.apply(zd);
        let scale = rho / r;
        [u * scale, v * scale, z, Jet::constant(0.0)]
    }
}

/// Rotational surface with constant `H₂` generated from a profile seed.
pub fn rotational_h2_profile(
    sf: SpaceForm,
    h2: f64,
    seed: ProfileSeed,
    s_range: [f64; 2],
) -> Result<(ParametricPatch, Arc<RotationalProfile>)> {
    if !sf.is_flat() {
        return Err(Error::Unsupported("rotational profiles are built in ℝ³ only".into()));
    }
    let profile = Arc::new(RotationalProfile::integrate(h2, seed, s_range)?);
    let len = s_range[1] - s_range[0];
    let domain = Domain::Annulus { center: [0.0, 0.0], inner: 1.0, outer: 1.0 + len };
    let map = RotationalMap { profile: profile.clone() };
    let patch = ParametricPatch::new(sf, domain, Arc::new(map), "rotational");
    Ok((super::orient_for_positivity(&patch)?, profile))
}

/// Outcome of shooting for a free-boundary rotational annulus in a slab.
#[derive(Clone, Debug, Serialize)]
pub struct ShootingReport {
    pub radius: f64,
    pub height: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Height at which a profile leaving `z = 0` vertically returns to a vertical
/// tangent, or the failure that stopped it.
fn return_height(h2: f64, radius: f64) -> Result<f64> {
    let mut y = [radius, 0.0, 0.0];
    let mut h: f64 = 1e-3;
    let mut s = 0.0;
    while s < 100.0 {
        let (yn, err) = dp_step(h2, &y, h)?;
        if err <= PROFILE_TOLERANCE {
            if s > 0.0 && y[2].sin() * yn[2].sin() < 0.0 {
                // vertical again: interpolate the height
                let t = y[2].sin() / (y[2].sin() - yn[2].sin());
                return Ok(y[1] + t * (yn[1] - y[1]));
            }
            s += h;
            y = yn;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * (PROFILE_TOLERANCE / err).powf(0.2)).clamp(0.2, 5.0) };
        h = (h * factor).min(0.05);
    }
    Err(Error::OdeFailure("profile did not return to a vertical tangent".into()))
}

/// Searches for a profile radius whose vertical-tangent return height equals
/// `height`, i.e. a rotational annulus meeting both planes of the slab
/// `0 ≤ x₃ ≤ height` orthogonally.
///
/// With `H₂ > 0` the equation gives `ρ'' = −H₂ρ`, so `ψ` increases
/// monotonically and the profile reaches `ρ = 0` or a horizontal tangent
/// before it could turn vertical again. Every attempt therefore fails, which
/// is reported as [`Error::ShootingFailed`].
pub fn shoot_free_boundary(h2: f64, height: f64, max_iterations: usize) -> Result<ShootingReport> {
    if !(h2 > 0.0 && height > 0.0) {
        return Err(Error::InvalidArgument("H2 and slab height must be positive".into()));
    }
    let mut bracket: Vec<(f64, f64)> = Vec::new();
    let mut last_err = None;
    let mut radius = 0.05 / h2.sqrt();
    for _ in 0..max_iterations.max(1) {
        match return_height(h2, radius) {
            Ok(z) => bracket.push((radius, z - height)),
            Err(e) => last_err = Some(e),
        }
        radius *= 1.5;
        if radius > 50.0 / h2.sqrt() {
            break;
        }
    }
    for w in bracket.windows(2) {
        let ((r0, f0), (r1, f1)) = (w[0], w[1]);
        if f0 * f1 <= 0.0 {
            let r = r0 - f0 * (r1 - r0) / (f1 - f0);
            let residual = return_height(h2, r)? - height;
            return Ok(ShootingReport { radius: r, height, iterations: bracket.len(), residual });
        }
    }
    Err(Error::ShootingFailed(format!(
        "no profile with H2 = {h2} returns to a vertical tangent at height {height}{}",
        last_err.map(|e| format!(" (last attempt: {e})")).unwrap_or_default()
    )))
}
