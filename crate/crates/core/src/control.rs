//! Group thermostat state machine.
//!
//! Every evaluation looks at the latest per-occupant TCIs. When any occupant
//! is outside the comfortable band and the thermostat is not already holding
//! the group setpoint, the group setpoint is issued. The loop is considered
//! settled once the air temperature is within tolerance of the setpoint.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::comfort::Tci;
use crate::node::NodeId;
use crate::profile::GroupThermalProfile;
use crate::scalar::Scalar;

/// Default |TCI| above which an occupant counts as uncomfortable.
pub const DEFAULT_TCI_TOLERANCE: f64 = 0.5;
/// Default air temperature tolerance around the setpoint, °C.
pub const DEFAULT_TEMP_TOLERANCE: f64 = 0.2;
/// Default evaluation cadence, seconds.
pub const DEFAULT_EVAL_INTERVAL: f64 = 60.0;
/// Thermostat limits, °C.
pub const SETPOINT_MIN: f64 = 10.0;
pub const SETPOINT_MAX: f64 = 35.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Idle,
    Adjusting,
    Converged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CommandReason {
    TciOutOfBand,
    OccupancyChanged,
    Manual,
}

impl CommandReason {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandReason::TciOutOfBand => "TciOutOfBand",
            CommandReason::OccupancyChanged => "OccupancyChanged",
            CommandReason::Manual => "Manual",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "TciOutOfBand" => Some(CommandReason::TciOutOfBand),
            "OccupancyChanged" => Some(CommandReason::OccupancyChanged),
            "Manual" => Some(CommandReason::Manual),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetpointCommand<T> {
    pub target_temp: T,
    pub issued_at: f64,
    pub reason: CommandReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig<T> {
    pub tci_tolerance: T,
    pub temp_tolerance: T,
    pub eval_interval: f64,
}

impl<T: Scalar> Default for ControllerConfig<T> {
    fn default() -> Self {
        ControllerConfig {
            tci_tolerance: T::of(DEFAULT_TCI_TOLERANCE),
            temp_tolerance: T::of(DEFAULT_TEMP_TOLERANCE),
            eval_interval: DEFAULT_EVAL_INTERVAL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ControllerState<T> {
    pub phase: Phase,
    pub current_setpoint: Option<T>,
    pub group: Option<GroupThermalProfile<T>>,
    pub last_eval_time: Option<f64>,
    pub last_air_temp: Option<T>,
    pub occupancy_epoch: u64,
}

impl<T: Scalar> Default for ControllerState<T> {
    fn default() -> Self {
        ControllerState {
            phase: Phase::Idle,
            current_setpoint: None,
            group: None,
            last_eval_time: None,
            last_air_temp: None,
            occupancy_epoch: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("no occupants reported")]
    NoOccupants,
    #[error("no group profile with a selected setpoint")]
    NoGroupProfile,
    #[error("setpoint {0} outside thermostat limits {SETPOINT_MIN}..={SETPOINT_MAX}")]
    SetpointOutOfRange(f64),
    #[error("non-finite input")]
    NotFinite,
}

fn command<T: Scalar>(target: T, now: f64, reason: CommandReason) -> Result<SetpointCommand<T>, ControlError> {
    let t = target.as_f64();
    if !(SETPOINT_MIN..=SETPOINT_MAX).contains(&t) {
        return Err(ControlError::SetpointOutOfRange(t));
    }
    Ok(SetpointCommand {
        target_temp: target,
        issued_at: now,
        reason,
    })
}

/// One control evaluation.
pub fn evaluate<T: Scalar>(
    state: &ControllerState<T>,
    config: &ControllerConfig<T>,
    tcis: &[(NodeId, Tci<T>)],
    air_temp: T,
    now: f64,
) -> Result<(ControllerState<T>, Option<SetpointCommand<T>>), ControlError> {
    if tcis.is_empty() {
        return Err(ControlError::NoOccupants);
    }
    if !air_temp.is_finite() || !now.is_finite() {
        return Err(ControlError::NotFinite);
    }
    let t0 = state
        .group
        .as_ref()
        .and_then(|g| g.t0)
        .ok_or(ControlError::NoGroupProfile)?;

    let mut next = state.clone();
    next.last_eval_time = Some(now);
    next.last_air_temp = Some(air_temp);

    let uncomfortable = tcis.iter().any(|(_, tci)| tci.exceeds(config.tci_tolerance));
    let holding_t0 = state
        .current_setpoint
        .is_some_and(|sp| (sp - t0).abs() <= config.temp_tolerance);

    if uncomfortable && !holding_t0 {
        let cmd = command(t0, now, CommandReason::TciOutOfBand)?;
        next.current_setpoint = Some(t0);
        next.phase = Phase::Adjusting;
        return Ok((next, Some(cmd)));
    }

    next.phase = match next.current_setpoint {
        Some(sp) if (air_temp - sp).abs() <= config.temp_tolerance => Phase::Converged,
        Some(_) => Phase::Adjusting,
        None => Phase::Idle,
    };
    Ok((next, None))
}

/// Replaces the group after occupants joined or left.
pub fn on_occupancy_change<T: Scalar>(
    state: &ControllerState<T>,
    config: &ControllerConfig<T>,
    new_group: GroupThermalProfile<T>,
    now: f64,
) -> Result<(ControllerState<T>, Option<SetpointCommand<T>>), ControlError> {
    let t0 = new_group.t0.ok_or(ControlError::NoGroupProfile)?;
    let mut next = state.clone();
    next.occupancy_epoch += 1;
    next.group = Some(new_group);

    let moved = match state.current_setpoint {
        None => true,
        Some(sp) => (sp - t0).abs() > config.temp_tolerance,
    };
    if !moved {
        return Ok((next, None));
    }
    let cmd = command(t0, now, CommandReason::OccupancyChanged)?;
    next.current_setpoint = Some(t0);
    next.phase = Phase::Adjusting;
    Ok((next, Some(cmd)))
}

/// Operator override of the thermostat target.
pub fn manual_setpoint<T: Scalar>(
    state: &ControllerState<T>,
    target: T,
    now: f64,
) -> Result<(ControllerState<T>, SetpointCommand<T>), ControlError> {
    let cmd = command(target, now, CommandReason::Manual)?;
    let mut next = state.clone();
    next.current_setpoint = Some(target);
    next.phase = Phase::Adjusting;
    Ok((next, cmd))
}

/// One line of the controller's JSON-lines audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AuditEntry<T> {
    pub time: f64,
    pub phase_before: Phase,
    pub phase_after: Phase,
    pub tcis: BTreeMap<NodeId, T>,
    pub air_temp: Option<T>,
    pub command: Option<SetpointCommand<T>>,
}

/// Serialized controller: owns its state and records every transition.
#[derive(Debug, Clone)]
pub struct Controller<T> {
    config: ControllerConfig<T>,
    state: ControllerState<T>,
    audit: Vec<AuditEntry<T>>,
}

impl<T: Scalar> Controller<T> {
    pub fn new(config: ControllerConfig<T>) -> Self {
        Controller {
            config,
            state: ControllerState::default(),
            audit: Vec::new(),
        }
    }

    pub fn config(&self) -> &ControllerConfig<T> {
        &self.config
    }

    pub fn state(&self) -> &ControllerState<T> {
        &self.state
    }

    pub fn audit(&self) -> &[AuditEntry<T>] {
        &self.audit
    }

    pub fn evaluate(
        &mut self,
        tcis: &[(NodeId, Tci<T>)],
        air_temp: T,
        now: f64,
    ) -> Result<Option<SetpointCommand<T>>, ControlError> {
        let (next, cmd) = evaluate(&self.state, &self.config, tcis, air_temp, now)?;
        self.audit.push(AuditEntry {
            time: now,
            phase_before: self.state.phase,
            phase_after: next.phase,
            tcis: tcis.iter().map(|(id, t)| (id.clone(), t.value())).collect(),
            air_temp: Some(air_temp),
            command: cmd,
        });
        self.state = next;
        Ok(cmd)
    }

    pub fn on_occupancy_change(
        &mut self,
        group: GroupThermalProfile<T>,
        now: f64,
    ) -> Result<Option<SetpointCommand<T>>, ControlError> {
        let (next, cmd) = on_occupancy_change(&self.state, &self.config, group, now)?;
        self.audit.push(AuditEntry {
            time: now,
            phase_before: self.state.phase,
            phase_after: next.phase,
            tcis: BTreeMap::new(),
            air_temp: None,
            command: cmd,
        });
        self.state = next;
        Ok(cmd)
    }

    pub fn write_audit_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for entry in &self.audit {
            serde_json::to_writer(&mut w, entry)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}
