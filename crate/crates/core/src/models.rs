//! Shared vehicle physics: the optimal velocity car-following model (OVM),
//! its linearization about an equilibrium, and the Akcelik fuel-rate model.
//!
//! The methods on the parameter structs are the unchecked hot-path versions
//! used inside integrators. The free functions validate their inputs and are
//! the public contract.

use crate::error::{PlatoonError, Result};

/// Calibrated OVM constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OvmParams {
    /// Sensitivity gain (1/s).
    pub kappa: f64,
    /// Velocity offset (m/s).
    pub v1: f64,
    /// Velocity range (m/s).
    pub v2: f64,
    /// Spacing gain (1/m).
    pub c1: f64,
    /// Spacing offset.
    pub c2: f64,
    /// Vehicle length (m).
    pub l_veh: f64,
}

impl Default for OvmParams {
    fn default() -> Self {
        Self {
            kappa: 0.85,
            v1: 6.75,
            v2: 7.91,
            c1: 0.13,
            c2: 1.57,
            l_veh: 5.0,
        }
    }
}

impl OvmParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [self.kappa, self.v1, self.v2, self.c1, self.c2, self.l_veh];
        if fields.iter().any(|f| !f.is_finite()) {
            return Err(PlatoonError::Domain("OVM parameters must be finite".into()));
        }
        if self.kappa <= 0.0 || self.v2 <= 0.0 || self.c1 <= 0.0 || self.l_veh <= 0.0 {
            return Err(PlatoonError::Domain(format!(
                "OVM parameters require kappa > 0, v2 > 0, c1 > 0, l_veh > 0 (got {self:?})"
            )));
        }
        Ok(())
    }

    #[inline]
    fn tanh_arg(&self, headway: f64) -> f64 {
        self.c1 * (headway - self.l_veh) - self.c2
    }

    /// Desired velocity at a given front-to-front headway.
    #[inline]
    pub fn desired_velocity(&self, headway: f64) -> f64 {
        self.v1 + self.v2 * self.tanh_arg(headway).tanh()
    }

    /// d V_des / d headway.
    #[inline]
    pub fn desired_velocity_slope(&self, headway: f64) -> f64 {
        let th = self.tanh_arg(headway).tanh();
        self.v2 * self.c1 * (1.0 - th * th)
    }

    /// Supremum of the desired velocity (infinite headway).
    pub fn free_velocity(&self) -> f64 {
        self.v1 + self.v2
    }

    /// Open interval of velocities that admit an equilibrium spacing.
    pub fn equilibrium_domain(&self) -> (f64, f64) {
        (self.v1 - self.v2, self.v1 + self.v2)
    }

    #[inline]
    pub fn accel(&self, headway: f64, velocity: f64, gain: f64) -> f64 {
        gain * self.kappa * (self.desired_velocity(headway) - velocity)
    }

    /// Acceleration together with its partials w.r.t. headway and own velocity.
    #[inline]
    pub fn accel_with_partials(&self, headway: f64, velocity: f64, gain: f64) -> (f64, f64, f64) {
        let th = self.tanh_arg(headway).tanh();
        let gk = gain * self.kappa;
        let a = gk * (self.v1 + self.v2 * th - velocity);
        let da_dd = gk * self.v2 * self.c1 * (1.0 - th * th);
        (a, da_dd, -gk)
    }
}

/// Linear car-following coefficients about an equilibrium:
/// `dv/dt = alpha1·d~ − alpha2·v~ + alpha3·v~_pred`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearCoeffs {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
}

impl LinearCoeffs {
    pub fn new(alpha1: f64, alpha2: f64, alpha3: f64) -> Self {
        Self {
            alpha1,
            alpha2,
            alpha3,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.alpha1.is_finite() && self.alpha2.is_finite() && self.alpha3.is_finite()
    }
}

/// Akcelik fuel model constants.
///
/// `mass` is in kg; the power polynomial `d1·v + d2·v² + d3·v³` is in kW, so
/// the inertial terms are converted from W to kW before they are combined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuelParams {
    /// Idle fuel rate (ml/s).
    pub alpha_idle: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Vehicle mass (kg).
    pub mass: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Default for FuelParams {
    fn default() -> Self {
        Self {
            alpha_idle: 0.666,
            beta1: 0.072,
            beta2: 0.0344,
            mass: 1680.0,
            d1: 0.269,
            d2: 0.0171,
            d3: 0.000672,
        }
    }
}

const KW_PER_W: f64 = 1e-3;

impl FuelParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.alpha_idle,
            self.beta1,
            self.beta2,
            self.mass,
            self.d1,
            self.d2,
            self.d3,
        ];
        if fields.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(PlatoonError::Domain(format!(
                "fuel parameters must be finite and non-negative (got {self:?})"
            )));
        }
        Ok(())
    }

    #[inline]
    fn mass_kw(&self) -> f64 {
        self.mass * KW_PER_W
    }

    /// Tractive power demand before the `max{0, ·}` clamp (kW).
    #[inline]
    pub fn raw_power(&self, velocity: f64, accel: f64) -> f64 {
        let v = velocity;
        self.d1 * v + self.d2 * v * v + self.d3 * v * v * v + self.mass_kw() * accel * v
    }

    /// Instantaneous fuel rate (ml/s). Negative velocities are treated as 0.
    #[inline]
    pub fn rate(&self, velocity: f64, accel: f64) -> f64 {
        let v = velocity.max(0.0);
        let power = self.raw_power(v, accel).max(0.0);
        let inertial = if accel > 0.0 {
            self.beta2 * self.mass_kw() * accel * accel * v
        } else {
            0.0
        };
        self.alpha_idle + self.beta1 * power + inertial
    }

    /// Smoothed fuel rate used inside the trajectory optimizer. Both the
    /// power clamp and the `a > 0` switch are replaced by a softplus of the
    /// given width. Returns `(rate, d rate/dv, d rate/da)`.
    #[inline]
    pub fn smooth_rate(&self, velocity: f64, accel: f64, width: f64) -> (f64, f64, f64) {
        let v = velocity;
        let mk = self.mass_kw();
        let p = self.raw_power(v, accel);
        let dp_dv = self.d1 + 2.0 * self.d2 * v + 3.0 * self.d3 * v * v + mk * accel;
        let dp_da = mk * v;
        let (sp, dsp) = softplus(p, width);
        let (spa, dspa) = softplus(accel, width);
        // beta2·m·v·a·softplus(a) ~ beta2·m·v·a² for a > 0, 0 otherwise
        let inertial = self.beta2 * mk * v * accel * spa;
        let rate = self.alpha_idle + self.beta1 * sp + inertial;
        let d_dv = self.beta1 * dsp * dp_dv + self.beta2 * mk * accel * spa;
        let d_da = self.beta1 * dsp * dp_da + self.beta2 * mk * v * (spa + accel * dspa);
        (rate, d_dv, d_da)
    }
}

/// `width·ln(1 + exp(x/width))` and its derivative, overflow-safe.
#[inline]
pub fn softplus(x: f64, width: f64) -> (f64, f64) {
    let z = x / width;
    if z > 30.0 {
        (x, 1.0)
    } else if z < -30.0 {
        (width * z.exp(), z.exp())
    } else {
        let e = z.exp();
        (width * e.ln_1p(), e / (1.0 + e))
    }
}

fn require_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(PlatoonError::Domain(format!("{name} must be finite, got {value}")))
    }
}

/// OVM acceleration `gain·κ·[V_des(headway) − v]`.
pub fn ovm_accel(params: &OvmParams, headway: f64, own_velocity: f64, gain: f64) -> Result<f64> {
    require_finite("headway", headway)?;
    require_finite("own_velocity", own_velocity)?;
    require_finite("gain", gain)?;
    Ok(params.accel(headway, own_velocity, gain))
}

/// Equilibrium headway at which `V_des(d) = v_eq`.
pub fn equilibrium_spacing(params: &OvmParams, v_eq: f64) -> Result<f64> {
    require_finite("v_eq", v_eq)?;
    let (lo, hi) = params.equilibrium_domain();
    if !(v_eq > lo && v_eq < hi) {
        return Err(PlatoonError::Domain(format!(
            "equilibrium velocity {v_eq} outside admissible interval ({lo}, {hi})"
        )));
    }
    let arg = ((v_eq - params.v1) / params.v2).atanh();
    Ok((arg + params.c2) / params.c1 + params.l_veh)
}

/// Linearize the OVM about the equilibrium at `v_eq`.
pub fn linearize(params: &OvmParams, v_eq: f64) -> Result<LinearCoeffs> {
    let d_star = equilibrium_spacing(params, v_eq)?;
    Ok(LinearCoeffs {
        alpha1: params.kappa * params.desired_velocity_slope(d_star),
        alpha2: params.kappa,
        alpha3: 0.0,
    })
}

/// Akcelik fuel rate (ml/s).
pub fn fuel_rate(params: &FuelParams, velocity: f64, acceleration: f64) -> Result<f64> {
    require_finite("velocity", velocity)?;
    require_finite("acceleration", acceleration)?;
    Ok(params.rate(velocity, acceleration))
}
