use super::runner::parse_reasons;
use super::{GroupChange, SimError, TraceRow};
use crate::comfort::clamp_tci;
use crate::control::{CommandReason, Controller, ControllerConfig, SetpointCommand};

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub evaluations: usize,
    pub commands: Vec<SetpointCommand<f64>>,
    /// Human-readable description of every disagreement with the recording.
    pub diffs: Vec<String>,
}

impl ReplayReport {
    pub fn is_clean(&self) -> bool {
        self.diffs.is_empty()
    }
}

fn same(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x.to_bits() == y.to_bits(),
        (None, None) => true,
        _ => false,
    }
}

/// Feeds a recorded trace back through a fresh controller and compares the
/// commands it issues with the ones recorded.
///
/// Group changes are applied at their recorded time, before that time's
/// evaluation; evaluation times are the rows that carry predicted TCIs.
pub fn replay(
    rows: &[TraceRow],
    group_changes: &[GroupChange],
    config: ControllerConfig<f64>,
) -> Result<ReplayReport, SimError> {
    let mut controller = Controller::new(config);
    let mut changes = group_changes.iter().peekable();
    let mut report = ReplayReport {
        evaluations: 0,
        commands: Vec::new(),
        diffs: Vec::new(),
    };

    for chunk in rows.chunk_by(|a, b| a.time == b.time) {
        let t = chunk[0].time;
        let mut issued = Vec::new();
        while let Some(gc) = changes.next_if(|gc| gc.time <= t) {
            let cmd = controller
                .on_occupancy_change(gc.group.clone(), gc.time)
                .map_err(|e| SimError::Trace(format!("t={}: {e}", gc.time)))?;
            issued.extend(cmd);
        }

        let tcis = chunk
            .iter()
            .filter_map(|r| r.tci_pred.map(|v| (r.occupant_id.clone(), v)))
            .map(|(id, v)| {
                clamp_tci(v)
                    .map(|tci| (id, tci))
                    .map_err(|e| SimError::Trace(format!("t={t}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if !tcis.is_empty() {
            report.evaluations += 1;
            let cmd = controller
                .evaluate(&tcis, chunk[0].air_temp, t)
                .map_err(|e| SimError::Trace(format!("t={t}: {e}")))?;
            issued.extend(cmd);
        }

        let recorded = match &chunk[0].command_reason {
            Some(field) => parse_reasons(field)?,
            None => Vec::new(),
        };
        let replayed: Vec<CommandReason> = issued.iter().map(|c| c.reason).collect();
        if recorded != replayed {
            report
                .diffs
                .push(format!("t={t}: recorded commands {recorded:?}, replay issued {replayed:?}"));
        }
        let setpoint = controller.state().current_setpoint;
        if !same(setpoint, chunk[0].setpoint) {
            report.diffs.push(format!(
                "t={t}: recorded setpoint {:?}, replay holds {setpoint:?}",
                chunk[0].setpoint
            ));
        }
        report.commands.extend(issued);
    }
    Ok(report)
}

/// Differences between two command sequences.
pub fn diff_commands(expected: &[SetpointCommand<f64>], actual: &[SetpointCommand<f64>]) -> Vec<String> {
    let mut diffs = Vec::new();
    if expected.len() != actual.len() {
        diffs.push(format!("{} commands recorded, {} replayed", expected.len(), actual.len()));
    }
    for (i, (e, a)) in expected.iter().zip(actual).enumerate() {
        if e != a {
            diffs.push(format!("command {i}: recorded {e:?}, replayed {a:?}"));
        }
    }
    diffs
}
