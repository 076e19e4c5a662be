//! Dimensionless numbers, inclination angle and regime classification.

use crate::necklace::{is_simple, polygon_area, polygon_perimeter, turning_angles, NecklaceState};
use crate::simulation::ScenarioConfig;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

/// Effective radius `R_0 = P / (2 pi)`.
pub fn effective_radius(state: &NecklaceState) -> f64 {
    polygon_perimeter(state) / (2.0 * PI)
}

/// `alpha = A / (pi R_0^2)`.
pub fn reduced_area(state: &NecklaceState) -> f64 {
    let r0 = effective_radius(state);
    polygon_area(state) / (PI * r0 * r0)
}

/// Second central moments `(I_xx, I_yy, I_xy)` of the centers.
pub fn second_moments(state: &NecklaceState) -> (f64, f64, f64) {
    let c = state.centroid();
    let n = state.len() as f64;
    let (mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0);
    for p in state.centers() {
        let d = p - c;
        xx += d.x * d.x;
        yy += d.y * d.y;
        xy += d.x * d.y;
    }
    (xx / n, yy / n, xy / n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inclination {
    /// Principal-axis angle in `(-pi/2, pi/2]`.
    pub theta: f64,
    /// Set when the center cloud is isotropic and the axis is undefined.
    pub degenerate: bool,
}

/// Angle of the major principal axis of the center cloud with the x axis.
pub fn inclination_angle(state: &NecklaceState) -> Inclination {
    let (xx, yy, xy) = second_moments(state);
    let scale = (xx + yy).max(f64::MIN_POSITIVE);
    if ((xx - yy) / scale).abs() < 1e-12 && (xy / scale).abs() < 1e-12 {
        return Inclination {
            theta: 0.0,
            degenerate: true,
        };
    }
    Inclination {
        theta: wrap_half_turn(0.5 * (2.0 * xy).atan2(xx - yy)),
        degenerate: false,
    }
}

/// Maps an angle to `(-pi/2, pi/2]`.
pub fn wrap_half_turn(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(PI);
    if t > FRAC_PI_2 {
        t -= PI;
    }
    t
}

/// Ratio of the principal standard deviations, `>= 1`.
pub fn aspect_ratio(state: &NecklaceState) -> f64 {
    let (xx, yy, xy) = second_moments(state);
    let mean = 0.5 * (xx + yy);
    let dev = (0.25 * (xx - yy) * (xx - yy) + xy * xy).sqrt();
    ((mean + dev) / (mean - dev).max(f64::MIN_POSITIVE)).sqrt()
}

/// Nearest-branch continuation of a pi-periodic angle.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AngleUnwrapper {
    last: Option<f64>,
}

impl AngleUnwrapper {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, theta: f64) -> f64 {
        let out = match self.last {
            None => theta,
            Some(prev) => theta + PI * ((prev - theta) / PI).round(),
        };
        self.last = Some(out);
        out
    }
}

pub fn unwrap_angles(series: &[f64]) -> Vec<f64> {
    let mut u = AngleUnwrapper::new();
    series.iter().map(|&t| u.push(t)).collect()
}

/// Maximal runs of negative turning angles around the ring.
pub fn concave_arcs(state: &NecklaceState) -> usize {
    let turns = turning_angles(state);
    let n = turns.len();
    if turns.iter().all(|t| *t < 0.0) {
        return 1;
    }
    (0..n).filter(|&i| turns[i] < 0.0 && turns[(i + n - 1) % n] >= 0.0).count()
}

pub fn is_convex(state: &NecklaceState) -> bool {
    turning_angles(state).iter().all(|t| *t >= 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapillaryNumber {
    pub ca: f64,
    /// Discrete bending modulus `2 k_a r`.
    pub bending_modulus: f64,
    pub r0: f64,
}

/// `C_a = mu_out R_0^3 gamma_dot / (2 k_a r)`.
pub fn capillary_from_radius(mu_out: f64, gamma_dot: f64, k_a: f64, r: f64, r0: f64) -> CapillaryNumber {
    let bending_modulus = 2.0 * k_a * r;
    CapillaryNumber {
        ca: mu_out * r0.powi(3) * gamma_dot / bending_modulus,
        bending_modulus,
        r0,
    }
}

pub fn capillary_number(config: &ScenarioConfig, state: &NecklaceState) -> CapillaryNumber {
    capillary_from_radius(config.mu_out, config.gamma_dot, config.k_a, state.radius(), effective_radius(state))
}

/// Confinement `tau = 2 R_0 / l`.
pub fn confinement(config: &ScenarioConfig, state: &NecklaceState) -> f64 {
    2.0 * effective_radius(state) / config.height
}

/// Per-output-step summary of the membrane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub t: f64,
    pub area: f64,
    pub perimeter: f64,
    pub alpha: f64,
    pub theta: f64,
    pub theta_unwrapped: f64,
    pub aspect_ratio: f64,
    /// Largest `|predicted neighbor gap|` after the area projection.
    pub stick_violation: f64,
    pub uzawa_iters: usize,
    pub simple: bool,
    pub angle_degenerate: bool,
}

impl DiagnosticsRecord {
    pub fn measure(
        state: &NecklaceState,
        step: usize,
        t: f64,
        unwrapper: &mut AngleUnwrapper,
        stick_violation: f64,
        uzawa_iters: usize,
    ) -> Self {
        let area = polygon_area(state);
        let perimeter = polygon_perimeter(state);
        let r0 = perimeter / (2.0 * PI);
        let inc = inclination_angle(state);
        Self {
            step,
            t,
            area,
            perimeter,
            alpha: area / (PI * r0 * r0),
            theta: inc.theta,
            theta_unwrapped: unwrapper.push(inc.theta),
            aspect_ratio: aspect_ratio(state),
            stick_violation,
            uzawa_iters,
            simple: is_simple(state),
            angle_degenerate: inc.degenerate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    TankTreading,
    Tumbling,
    VacillatingBreathing,
    Undetermined,
}

impl Regime {
    pub fn tag(self) -> &'static str {
        match self {
            Regime::TankTreading => "TT",
            Regime::Tumbling => "TB",
            Regime::VacillatingBreathing => "VB",
            Regime::Undetermined => "undetermined",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "TT" | "tt" => Ok(Regime::TankTreading),
            "TB" | "tb" => Ok(Regime::Tumbling),
            "VB" | "vb" => Ok(Regime::VacillatingBreathing),
            "undetermined" => Ok(Regime::Undetermined),
            other => Err(format!("unknown regime '{other}'")),
        }
    }
}

/// Thresholds of [`classify_regime`], angles in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierOptions {
    /// Fraction of the series forming the final window.
    pub final_window: f64,
    /// Variance below which the final window counts as steady.
    pub steady_variance: f64,
    /// Reversal size that counts as an extremum.
    pub hysteresis: f64,
    /// Minimum alternating extrema for a sustained oscillation.
    pub min_extrema: usize,
    pub min_peak_to_peak: f64,
    /// Largest mean angle still "about the flow direction".
    pub max_mean: f64,
}

impl Default for ClassifierOptions {
    fn default() -> Self {
        let deg = PI / 180.0;
        Self {
            final_window: 0.2,
            steady_variance: (0.5 * deg) * (0.5 * deg),
            hysteresis: 1.0 * deg,
            min_extrema: 4,
            min_peak_to_peak: 2.0 * deg,
            max_mean: 15.0 * deg,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub regime: Regime,
    pub unwrapped: Vec<f64>,
    pub final_mean: f64,
    pub final_variance: f64,
    /// Alternating extrema found with hysteresis.
    pub extrema: Vec<f64>,
    pub peak_to_peak: f64,
    /// Net change of the unwrapped angle over the series.
    pub excursion: f64,
    /// Largest reversal against the net direction of rotation.
    pub max_reversal: f64,
}

/// Extrema of `u` where the series reverses by more than `h`.
pub fn alternating_extrema(u: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if u.is_empty() {
        return out;
    }
    let (mut hi, mut lo) = (u[0], u[0]);
    // +1 rising, -1 falling, 0 unknown
    let mut dir = 0i8;
    for &v in &u[1..] {
        match dir {
            0 => {
                hi = hi.max(v);
                lo = lo.min(v);
                if v - lo > h {
                    dir = 1;
                    hi = v;
                } else if hi - v > h {
                    dir = -1;
                    lo = v;
                }
            }
            1 => {
                if v > hi {
                    hi = v;
                } else if hi - v > h {
                    out.push(hi);
                    dir = -1;
                    lo = v;
                }
            }
            _ => {
                if v < lo {
                    lo = v;
                } else if v - lo > h {
                    out.push(lo);
                    dir = 1;
                    hi = v;
                }
            }
        }
    }
    out
}

/// Classifies an inclination series sampled at uniform times.
///
/// The series may be wrapped or already unwrapped. Tumbling: the unwrapped
/// angle leaves `(-pi/2, pi/2]` without reversing by more than the
/// hysteresis. Tank-treading: the final window is steady. Vacillating-
/// breathing: bounded, at least `min_extrema` alternating extrema with a
/// peak-to-peak amplitude above the threshold and a mean near zero.
pub fn classify_regime(series: &[f64], opts: &ClassifierOptions) -> RegimeReport {
    let u = unwrap_angles(series);
    let n = u.len();
    let window_start = n - ((n as f64 * opts.final_window).ceil() as usize).clamp(1.min(n), n);
    let window = &u[window_start..];
    let (final_mean, final_variance) = mean_variance(window);
    let extrema = alternating_extrema(&u, opts.hysteresis);
    let peak_to_peak = extrema
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max);
    let excursion = if n > 0 { u[n - 1] - u[0] } else { 0.0 };
    let sign = if excursion < 0.0 { -1.0 } else { 1.0 };
    let mut max_reversal: f64 = 0.0;
    let mut best = u.first().copied().unwrap_or(0.0);
    for &v in &u {
        if sign * (v - best) > 0.0 {
            best = v;
        }
        max_reversal = max_reversal.max(sign * (best - v));
    }

    let leaves = u.iter().any(|&v| v <= -FRAC_PI_2 || v > FRAC_PI_2);
    let regime = if n < 5 {
        Regime::Undetermined
    } else if leaves && max_reversal <= opts.hysteresis {
        Regime::Tumbling
    } else if !leaves && final_variance < opts.steady_variance {
        Regime::TankTreading
    } else if !leaves
        && extrema.len() >= opts.min_extrema
        && peak_to_peak > opts.min_peak_to_peak
        && mean_variance(&u).0.abs() <= opts.max_mean
    {
        Regime::VacillatingBreathing
    } else {
        Regime::Undetermined
    };

    RegimeReport {
        regime,
        unwrapped: u,
        final_mean,
        final_variance,
        extrema,
        peak_to_peak,
        excursion,
        max_reversal,
    }
}

/// Least-squares slope of the unwrapped angle against time.
pub fn rotation_rate(times: &[f64], unwrapped: &[f64]) -> f64 {
    let n = times.len().min(unwrapped.len());
    if n < 2 {
        return 0.0;
    }
    let (tm, _) = mean_variance(&times[..n]);
    let (um, _) = mean_variance(&unwrapped[..n]);
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..n {
        num += (times[k] - tm) * (unwrapped[k] - um);
        den += (times[k] - tm) * (times[k] - tm);
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn mean_variance(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}
