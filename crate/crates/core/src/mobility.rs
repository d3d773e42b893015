//! Producer motion, free-space signal strength and the link-layer handover
//! state machine.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::name::Name;
use crate::time::{SimDuration, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.3}, {:.3})", self.x, self.y)
    }
}

/// Rectangular field `[0, width] x [0, height]` in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonMode {
    /// Time until the signal margin runs out at the current decay rate.
    Adaptive,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MobilityParams {
    pub v_max_kmh: f64,
    pub p_s: f64,
    pub dv_kmh: (f64, f64),
    pub dphi_rad: (f64, f64),
    pub rss_threshold_dbm: f64,
    pub l2_delay_ms: f64,
    pub horizon: HorizonMode,
    pub fixed_horizon_s: f64,
    pub horizon_bounds_s: (f64, f64),
    /// Seconds between speed/heading resamples.
    pub epoch_s: f64,
}

impl Default for MobilityParams {
    fn default() -> Self {
        MobilityParams {
            v_max_kmh: 30.0,
            p_s: 0.5,
            dv_kmh: (-3.0, 3.0),
            dphi_rad: (-PI / 4.0, PI / 4.0),
            rss_threshold_dbm: -77.0,
            l2_delay_ms: 100.0,
            horizon: HorizonMode::Adaptive,
            fixed_horizon_s: 10.0,
            horizon_bounds_s: (1.0, 30.0),
            epoch_s: 1.0,
        }
    }
}

impl MobilityParams {
    pub fn l2_delay(&self) -> SimDuration {
        SimDuration::from_ms(self.l2_delay_ms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioParams {
    /// Received power at `d_ref_m`.
    pub p_ref_dbm: f64,
    pub d_ref_m: f64,
    /// Below this an AP is out of range.
    pub sensitivity_dbm: f64,
    /// A candidate AP must beat the serving one by this much before the link drops.
    pub hysteresis_db: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            p_ref_dbm: -37.0,
            d_ref_m: 1.0,
            sensitivity_dbm: -95.0,
            hysteresis_db: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessPoint {
    pub id: u16,
    pub position: Point,
    pub prefix: Name,
    pub cell_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Connected,
    Predicting { since: SimTime },
    L2Handover { started_at: SimTime },
    Reattached { at: SimTime },
}

#[derive(Debug, Error, PartialEq)]
pub enum MobilityError {
    #[error("illegal phase transition from {from:?} to {to}")]
    BadTransition { from: Phase, to: &'static str },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobileNodeState {
    pub position: Point,
    pub speed_kmh: f64,
    pub heading: f64,
    pub attached_ap: Option<u16>,
    pub phase: Phase,
}

impl MobileNodeState {
    pub fn new(position: Point, speed_kmh: f64, heading: f64, attached_ap: Option<u16>) -> Self {
        MobileNodeState {
            position,
            speed_kmh,
            heading: normalize_angle(heading),
            attached_ap,
            phase: Phase::Connected,
        }
    }

    pub fn is_reachable(&self) -> bool {
        self.attached_ap.is_some() && !matches!(self.phase, Phase::L2Handover { .. })
    }

    /// Connected -> Predicting.
    pub fn begin_predicting(&mut self, now: SimTime) -> Result<(), MobilityError> {
        match self.phase {
            Phase::Connected => {
                self.phase = Phase::Predicting { since: now };
                Ok(())
            }
            from => Err(MobilityError::BadTransition { from, to: "Predicting" }),
        }
    }

    /// Reattached -> Connected.
    pub fn settle(&mut self) -> Result<(), MobilityError> {
        match self.phase {
            Phase::Reattached { .. } => {
                self.phase = Phase::Connected;
                Ok(())
            }
            from => Err(MobilityError::BadTransition { from, to: "Connected" }),
        }
    }
}

/// Speed update: with probability `p_s` the speed drifts by `dv` and is
/// clamped to `[0, v_max]`; otherwise the node stops.
pub fn update_speed(v_old: f64, dv: f64, p: f64, params: &MobilityParams) -> f64 {
    if p <= params.p_s {
        (v_old + dv).max(0.0).min(params.v_max_kmh)
    } else {
        0.0
    }
}

pub fn normalize_angle(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

pub fn update_direction(phi_old: f64, dphi: f64) -> f64 {
    normalize_angle(phi_old + dphi)
}

pub fn kmh_to_mps(v: f64) -> f64 {
    v / 3.6
}

/// Straight-line kinematics with no boundary.
pub fn step_position(pos: Point, v_kmh: f64, phi: f64, dt_s: f64) -> Point {
    let d = kmh_to_mps(v_kmh) * dt_s;
    Point::new(pos.x + d * phi.cos(), pos.y + d * phi.sin())
}

/// Folds `x` into `[0, w]` as if bouncing off both walls. Returns whether an
/// odd number of bounces happened.
fn fold(x: f64, w: f64) -> (f64, bool) {
    if (0.0..=w).contains(&x) {
        return (x, false);
    }
    let m = x.rem_euclid(2.0 * w);
    if m <= w {
        (m, false)
    } else {
        (2.0 * w - m, true)
    }
}

/// Like [`step_position`] but reflecting off the field edges. Returns the new
/// position and heading.
pub fn step_in_field(pos: Point, v_kmh: f64, phi: f64, dt_s: f64, field: &Field) -> (Point, f64) {
    let raw = step_position(pos, v_kmh, phi, dt_s);
    let (x, fx) = fold(raw.x, field.width);
    let (y, fy) = fold(raw.y, field.height);
    let mut heading = phi;
    if fx {
        heading = PI - heading;
    }
    if fy {
        heading = -heading;
    }
    (Point::new(x, y), normalize_angle(heading))
}

/// Dead reckoning at the current speed and heading.
pub fn predict_future_position(state: &MobileNodeState, t_f_s: f64, field: Option<&Field>) -> Point {
    match field {
        Some(f) => step_in_field(state.position, state.speed_kmh, state.heading, t_f_s, f).0,
        None => step_position(state.position, state.speed_kmh, state.heading, t_f_s),
    }
}

/// Free-space received power at distance `d` meters.
pub fn rss_at_distance(d: f64, radio: &RadioParams) -> f64 {
    if d <= 0.0 {
        return radio.p_ref_dbm;
    }
    radio.p_ref_dbm - 20.0 * (d / radio.d_ref_m).log10()
}

pub fn rss(ap: &AccessPoint, pos: Point, radio: &RadioParams) -> f64 {
    rss_at_distance(ap.position.distance(pos), radio)
}

pub fn check_handover_trigger(rss_dbm: f64, params: &MobilityParams) -> bool {
    rss_dbm <= params.rss_threshold_dbm
}

/// How far ahead to predict, in seconds. `decay_db_per_s` is the recent rate
/// at which the serving signal has been falling.
pub fn prediction_horizon(rss_dbm: f64, decay_db_per_s: f64, params: &MobilityParams, radio: &RadioParams) -> f64 {
    let (lo, hi) = params.horizon_bounds_s;
    match params.horizon {
        HorizonMode::Fixed => params.fixed_horizon_s,
        HorizonMode::Adaptive => {
            if decay_db_per_s <= 0.0 {
                return hi;
            }
            let margin = rss_dbm - (params.rss_threshold_dbm - radio.hysteresis_db);
            (margin / decay_db_per_s).clamp(lo, hi)
        }
    }
}

/// Detaches from the serving AP. Returns when the link layer will be ready to
/// attach again.
pub fn perform_l2_handover(state: &mut MobileNodeState, now: SimTime, params: &MobilityParams) -> Result<SimTime, MobilityError> {
    match state.phase {
        Phase::Predicting { .. } => {
            state.phase = Phase::L2Handover { started_at: now };
            state.attached_ap = None;
            Ok(now + params.l2_delay())
        }
        from => Err(MobilityError::BadTransition { from, to: "L2Handover" }),
    }
}

/// Completes a handover. With no AP in range the node stays detached in
/// `L2Handover` and the caller decides when to retry.
pub fn complete_l2_handover(state: &mut MobileNodeState, target: Option<u16>, now: SimTime) -> Result<bool, MobilityError> {
    match state.phase {
        Phase::L2Handover { .. } => match target {
            Some(ap) => {
                state.attached_ap = Some(ap);
                state.phase = Phase::Reattached { at: now };
                Ok(true)
            }
            None => Ok(false),
        },
        from => Err(MobilityError::BadTransition { from, to: "Reattached" }),
    }
}

/// Nearest AP within radio range, skipping `exclude`. Ties go to the lowest id.
pub fn nearest_in_range(aps: &[AccessPoint], pos: Point, exclude: Option<u16>, radio: &RadioParams) -> Option<u16> {
    aps.iter()
        .filter(|a| Some(a.id) != exclude && rss(a, pos, radio) >= radio.sensitivity_dbm)
        .min_by(|a, b| {
            a.position
                .distance(pos)
                .total_cmp(&b.position.distance(pos))
                .then(a.id.cmp(&b.id))
        })
        .map(|a| a.id)
}
