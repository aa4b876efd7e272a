//! Eulerian fields induced by a self-similar profile, and the scaling symmetry
//! of the Euler–Poisson system acting on them.

use super::profile::Profile;

/// `rho(t, r) = (-t)^-2 rho~(y)`, `u(t, r) = sqrt(eps) (-t)^(1-γ) u~(y)` with
/// `y = r / (sqrt(eps) (-t)^(2-γ))`, for `t < 0`.
#[derive(Debug, Clone)]
pub struct SelfSimilarFlow<'a> {
    pub profile: &'a Profile,
    /// Pressure constant in `p = eps rho^γ`.
    pub eps: f64,
    /// Scaling parameter applied so far (1 for the profile itself).
    pub lambda: f64,
}

impl<'a> SelfSimilarFlow<'a> {
    pub fn new(profile: &'a Profile, eps: f64) -> Self {
        Self { profile, eps, lambda: 1.0 }
    }

    fn gamma(&self) -> f64 {
        self.profile.gamma
    }

    /// Self-similar coordinate of `(t, r)`.
    pub fn similarity_variable(&self, t: f64, r: f64) -> f64 {
        r / (self.eps.sqrt() * (-t).powf(2.0 - self.gamma()))
    }

    /// Profile values `(rho~, omega)` at `y` by linear interpolation on the grid.
    pub fn profile_at(&self, y: f64) -> Option<(f64, f64)> {
        let pts = &self.profile.points;
        let (first, last) = (pts.first()?, pts.last()?);
        // round-off in the coordinate maps may land just outside the grid
        let slack = 1e-12;
        if y < first.y * (1.0 - slack) || y > last.y * (1.0 + slack) {
            return None;
        }
        let i = pts.partition_point(|p| p.y < y);
        if i == pts.len() {
            return Some((last.rho, last.omega));
        }
        if pts[i].y == y || i == 0 {
            return Some((pts[i].rho, pts[i].omega));
        }
        let (a, b) = (&pts[i - 1], &pts[i]);
        let s = (y - a.y) / (b.y - a.y);
        Some((a.rho + s * (b.rho - a.rho), a.omega + s * (b.omega - a.omega)))
    }

    fn base_fields(&self, t: f64, r: f64) -> Option<(f64, f64)> {
        let g = self.gamma();
        let y = self.similarity_variable(t, r);
        let (rho, omega) = self.profile_at(y)?;
        let u = y * (omega - (2.0 - g));
        Some(((-t).powi(-2) * rho, self.eps.sqrt() * (-t).powf(1.0 - g) * u))
    }

    /// Eulerian `(rho, u)` at `(t, r)`, `t < 0`, after the applied scalings.
    pub fn fields(&self, t: f64, r: f64) -> Option<(f64, f64)> {
        let g = self.gamma();
        let l = self.lambda;
        let (rho, u) = self.base_fields(t / l.powf(1.0 / (2.0 - g)), r / l)?;
        Some((l.powf(-2.0 / (2.0 - g)) * rho, l.powf(-(g - 1.0) / (2.0 - g)) * u))
    }

    /// The flow transformed by the scaling symmetry with parameter `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self { lambda: self.lambda * lambda, ..self.clone() }
    }

    /// Recovers `(rho~, omega)` at `y` from the Eulerian fields at time `t`.
    pub fn rederive(&self, t: f64, y: f64) -> Option<(f64, f64)> {
        let g = self.gamma();
        let r = y * self.eps.sqrt() * (-t).powf(2.0 - g);
        let (rho, u) = self.fields(t, r)?;
        let u_tilde = u / (self.eps.sqrt() * (-t).powf(1.0 - g));
        Some((t * t * rho, (u_tilde + (2.0 - g) * y) / y))
    }
}
