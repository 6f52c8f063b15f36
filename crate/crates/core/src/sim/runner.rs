use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ENV_NODE;
use super::{sample_occupant, true_tci, ScenarioConfig, SimError, SyntheticOccupant};
use crate::comfort::Tci;
use crate::control::{AuditEntry, CommandReason, Controller, ControllerConfig, SetpointCommand};
use crate::gateway::{Hub, HubConfig, NodeKind, NodeStatus, Sample, WireFrame};
use crate::node::NodeId;
use crate::predictor::{
    aggregate, extract_features_ending, predict_tci, train_tci_model, DatasetRow, EnvSample, FeatureVector, PhysioSample,
    TciModel,
};
use crate::profile::{
    build_group_profile, estimate_neutral_temp, select_setpoint, GroupThermalProfile, OccupantProfile, Sweep,
};

/// One occupant at one plant step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub time: f64,
    pub air_temp: f64,
    /// Thermostat target after any command issued at this time.
    pub setpoint: Option<f64>,
    pub occupant_id: NodeId,
    /// Controller's predicted TCI; present only at evaluation times for occupants in the group.
    pub tci_pred: Option<f64>,
    pub tci_true: f64,
    /// Reasons of commands issued at this time, `;`-separated.
    pub command_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupChange {
    pub time: f64,
    pub group: GroupThermalProfile<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEvent {
    pub time: f64,
    pub node: NodeId,
    pub status: NodeStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub master_seed: u64,
    pub final_t0: Option<f64>,
    pub final_air_temp: f64,
    pub converged: bool,
    /// Earliest time from which the air temperature stays within the
    /// controller's temperature tolerance of the setpoint.
    pub convergence_time: Option<f64>,
    /// Time integral of the occupants' mean squared true TCI, TCI²·s.
    pub discomfort_integral: f64,
    pub initial_mean_tci_sq: f64,
    pub final_mean_tci_sq: f64,
    pub true_neutral_temps: BTreeMap<NodeId, f64>,
    pub profiles: Vec<OccupantProfile<f64>>,
    pub group: GroupThermalProfile<f64>,
    pub group_changes: Vec<GroupChange>,
    pub node_events: Vec<NodeEvent>,
    pub controller: ControllerConfig<f64>,
    pub commands: Vec<SetpointCommand<f64>>,
}

#[derive(Debug, Clone)]
pub struct ScenarioTrace {
    pub rows: Vec<TraceRow>,
    pub summary: ScenarioSummary,
    pub model: TciModel<f64>,
    /// Labelled per-sample calibration data.
    pub calibration: Vec<DatasetRow<f64>>,
    pub audit: Vec<AuditEntry<f64>>,
}

impl ScenarioTrace {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), SimError> {
        write_trace_csv(w, &self.rows)
    }

    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        s.push('\n');
        s
    }

    /// Writes `trace.csv`, `summary.json`, `audit.jsonl`, `model.json` and `calibration.csv` into `dir`.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<(), SimError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        self.write_csv(io::BufWriter::new(fs::File::create(dir.join("trace.csv"))?))?;
        fs::write(dir.join("summary.json"), self.summary_json())?;
        let mut audit = io::BufWriter::new(fs::File::create(dir.join("audit.jsonl"))?);
        for entry in &self.audit {
            serde_json::to_writer(&mut audit, entry).map_err(io::Error::from)?;
            audit.write_all(b"\n")?;
        }
        audit.flush()?;
        fs::write(dir.join("model.json"), self.model.to_json())?;
        let cal = fs::File::create(dir.join("calibration.csv"))?;
        crate::predictor::write_dataset_csv(io::BufWriter::new(cal), &self.calibration)
            .map_err(|e| SimError::Trace(e.to_string()))?;
        Ok(())
    }
}

pub fn write_trace_csv<W: Write>(w: W, rows: &[TraceRow]) -> Result<(), SimError> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row).map_err(|e| SimError::Trace(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: io::Read>(r: R) -> Result<Vec<TraceRow>, SimError> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|rec| rec.map_err(|e| SimError::Trace(e.to_string())))
        .collect()
}

fn at<E>(module: &'static str, op: &'static str, time: f64) -> impl FnOnce(E) -> SimError
where
    E: std::error::Error + Send + Sync + 'static,
{
    move |e| SimError::Step {
        module,
        op,
        time,
        source: Box::new(e),
    }
}

/// Per-occupant noise seed derived from the master seed, the occupant's own
/// seed and its position in the config.
fn occupant_seed(master: u64, own: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master ^ own.rotate_left(32));
    rng.set_stream(index as u64);
    rng.next_u64()
}

/// Calibration features of one occupant, one row per sweep temperature.
#[derive(Debug, Clone)]
struct FeatureTable {
    temps: Vec<f64>,
    features: Vec<FeatureVector<f64>>,
}

impl FeatureTable {
    /// Piecewise-linear in air temperature, held constant beyond the sweep.
    fn at(&self, t: f64) -> FeatureVector<f64> {
        let n = self.temps.len();
        if t <= self.temps[0] {
            return self.features[0];
        }
        if t >= self.temps[n - 1] {
            return self.features[n - 1];
        }
        let k = self.temps.partition_point(|&x| x <= t) - 1;
        let w = (t - self.temps[k]) / (self.temps[k + 1] - self.temps[k]);
        self.features[k].lerp(&self.features[k + 1], w)
    }
}

struct Calibrated {
    rows: Vec<DatasetRow<f64>>,
    model: TciModel<f64>,
    tables: BTreeMap<NodeId, FeatureTable>,
    profiles: Vec<OccupantProfile<f64>>,
}

fn env_sample(cfg: &ScenarioConfig, t: f64, air: f64) -> EnvSample<f64> {
    EnvSample {
        timestamp: t,
        air_temp: air,
        mean_radiant_temp: air + cfg.environment.radiant_offset,
        rel_humidity: cfg.environment.rel_humidity,
        air_velocity: cfg.environment.air_velocity,
    }
}

fn calibrate(cfg: &ScenarioConfig, occupants: &[SyntheticOccupant<f64>]) -> Result<Calibrated, SimError> {
    let temps = cfg.calibration.temperatures();
    let per_step = cfg.calibration.samples_per_step;
    let window = per_step as f64 / cfg.node_rate;
    // calibration happens before the loop starts at t = 0
    let base = -(temps.len() as f64) * window;

    let mut rows = Vec::new();
    let mut training = Vec::new();
    let mut tables: BTreeMap<NodeId, FeatureTable> = BTreeMap::new();
    for (k, &ta) in temps.iter().enumerate() {
        let times: Vec<f64> = (0..per_step)
            .map(|j| base + k as f64 * window + j as f64 / cfg.node_rate)
            .collect();
        let env: Vec<EnvSample<f64>> = times.iter().map(|&t| env_sample(cfg, t, ta)).collect();
        for occ in occupants {
            let physio: Vec<PhysioSample<f64>> = times.iter().map(|&t| sample_occupant(occ, ta, t)).collect();
            let label = true_tci(occ, ta);
            for (p, e) in physio.iter().zip(&env) {
                rows.push(DatasetRow {
                    occupant_id: occ.occupant_id.clone(),
                    timestamp: p.timestamp,
                    hr: p.heart_rate,
                    gsr: p.gsr,
                    clo: p.clothing_insulation,
                    met: p.metabolic_rate,
                    air_temp: e.air_temp,
                    mrt: e.mean_radiant_temp,
                    rh: e.rel_humidity,
                    vel: e.air_velocity,
                    tci_label: label.value(),
                });
            }
            let fv = aggregate(&physio.iter().collect::<Vec<_>>(), &env.iter().collect::<Vec<_>>())
                .map_err(at("predictor", "extract_features", times[0]))?;
            let table = tables.entry(occ.occupant_id.clone()).or_insert_with(|| FeatureTable {
                temps: Vec::new(),
                features: Vec::new(),
            });
            table.temps.push(ta);
            table.features.push(fv);
            // saturated labels carry no slope information
            if label.value().abs() < crate::comfort::TCI_LIMIT {
                training.push((fv, label));
            }
        }
    }

    let model = train_tci_model(&training, cfg.ridge_strength, cfg.master_seed)
        .map_err(at("predictor", "train_tci_model", base))?;

    let sweep = Sweep::new(cfg.calibration.lo, cfg.calibration.hi, cfg.calibration.step)
        .map_err(at("profile", "estimate_neutral_temp", base))?;
    let mut profiles = Vec::with_capacity(occupants.len());
    for occ in occupants {
        let table = &tables[&occ.occupant_id];
        let np = estimate_neutral_temp(&model, |t| table.at(t), sweep)
            .map_err(at("profile", "estimate_neutral_temp", base))?;
        profiles.push(OccupantProfile {
            occupant_id: occ.occupant_id.clone(),
            neutral_temp: np.neutral_temp,
            sensitivity: np.sensitivity,
        });
    }
    Ok(Calibrated {
        rows,
        model,
        tables,
        profiles,
    })
}

fn group_for(
    cal: &Calibrated,
    active: &BTreeSet<NodeId>,
    grid_step: f64,
    time: f64,
) -> Result<GroupThermalProfile<f64>, SimError> {
    let members: Vec<_> = cal
        .profiles
        .iter()
        .filter(|p| active.contains(&p.occupant_id))
        .cloned()
        .collect();
    let group = build_group_profile(members).map_err(at("profile", "build_group_profile", time))?;
    let selection = select_setpoint(&group, &cal.model, |id, t| cal.tables.get(id).map(|tb| tb.at(t)), grid_step)
        .map_err(at("profile", "select_setpoint", time))?;
    Ok(group.with_setpoint(selection))
}

fn mean_tci_sq(occupants: &[SyntheticOccupant<f64>], air: f64) -> f64 {
    let sum: f64 = occupants
        .iter()
        .map(|o| {
            let v = true_tci(o, air).value();
            v * v
        })
        .sum();
    sum / occupants.len() as f64
}

struct Loop<'a> {
    cfg: &'a ScenarioConfig,
    occupants: &'a [SyntheticOccupant<f64>],
    hub: Hub,
    env_id: NodeId,
}

impl Loop<'_> {
    fn silent(&self, node: &NodeId, t: f64) -> bool {
        self.cfg.dropouts.iter().any(|d| &d.node == node && d.from <= t && t < d.to)
    }

    fn send(&self, line: String, t: f64) -> Result<(), SimError> {
        self.hub
            .ingest_frame(line.as_bytes())
            .map(|_| ())
            .map_err(at("gateway", "ingest_frame", t))
    }

    fn emit(&self, t: f64, air: f64) -> Result<(), SimError> {
        let token = &self.cfg.token;
        let e = env_sample(self.cfg, t, air);
        self.send(
            WireFrame::environment(
                ENV_NODE,
                t,
                e.air_temp,
                e.mean_radiant_temp,
                e.rel_humidity,
                e.air_velocity,
                token,
            )
            .to_line(),
            t,
        )?;
        for occ in self.occupants {
            if self.silent(&occ.occupant_id, t) {
                continue;
            }
            let s = sample_occupant(occ, air, t);
            let line = WireFrame::wearable(
                occ.occupant_id.as_str(),
                t,
                s.heart_rate,
                s.gsr,
                s.clothing_insulation,
                s.metabolic_rate,
                token,
            )
            .to_line();
            self.send(line, t)?;
        }
        Ok(())
    }

    fn active(&self) -> BTreeSet<NodeId> {
        self.occupants
            .iter()
            .filter(|o| {
                self.hub
                    .node(&o.occupant_id)
                    .is_some_and(|r| r.status == NodeStatus::Active)
            })
            .map(|o| o.occupant_id.clone())
            .collect()
    }

    fn predictions(
        &self,
        model: &TciModel<f64>,
        active: &BTreeSet<NodeId>,
        t: f64,
    ) -> Result<Vec<(NodeId, Tci<f64>)>, SimError> {
        let w = self.cfg.feature_window;
        let env: Vec<EnvSample<f64>> = self
            .hub
            .query_window(&self.env_id, t - w, t)
            .map_err(at("gateway", "query_window", t))?
            .iter()
            .filter_map(Sample::as_env)
            .cloned()
            .collect();
        let windows = self
            .hub
            .query_many(active.iter(), t - w, t)
            .map_err(at("gateway", "query_window", t))?;
        let mut out = Vec::with_capacity(windows.len());
        for (id, samples) in windows {
            let physio: Vec<PhysioSample<f64>> = samples.iter().filter_map(Sample::as_physio).cloned().collect();
            let fv = extract_features_ending(&physio, &env, t, w).map_err(at("predictor", "extract_features", t))?;
            let tci = predict_tci(model, &fv).map_err(at("predictor", "predict_tci", t))?;
            out.push((id, tci));
        }
        Ok(out)
    }
}

/// Calibrates the comfort model on a temperature sweep, then runs the closed loop.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioTrace, SimError> {
    cfg.validate()?;
    let occupants: Vec<SyntheticOccupant<f64>> = cfg
        .occupants
        .iter()
        .enumerate()
        .map(|(i, o)| SyntheticOccupant {
            rng_seed: occupant_seed(cfg.master_seed, o.rng_seed, i),
            ..o.clone()
        })
        .collect();

    let cal = calibrate(cfg, &occupants)?;

    let hub = Hub::new(HubConfig {
        token: cfg.token.clone(),
        dropout_timeout: cfg.dropout_timeout,
    });
    let env_id = NodeId::new(ENV_NODE).expect("valid id");
    hub.register_node(env_id.clone(), NodeKind::Environment, &cfg.token, Some(0.0))
        .map_err(at("gateway", "register_node", 0.0))?;
    for o in &occupants {
        hub.register_node(o.occupant_id.clone(), NodeKind::Wearable, &cfg.token, Some(0.0))
            .map_err(at("gateway", "register_node", 0.0))?;
    }
    let lp = Loop {
        cfg,
        occupants: &occupants,
        hub,
        env_id,
    };

    let mut plant = cfg.plant;
    plant.air_temp = cfg.initial_air_temp;
    let mut controller = Controller::new(cfg.controller);

    let n_steps = (cfg.duration / cfg.dt + 1e-9).floor() as usize;
    let mut next_sample: u64 = 0;
    let mut next_eval = 0.0;
    let mut prev_active: BTreeSet<NodeId> = BTreeSet::new();
    let mut rows = Vec::with_capacity((n_steps + 1) * occupants.len());
    let mut commands = Vec::new();
    let mut group_changes = Vec::new();
    let mut node_events = Vec::new();
    let mut discomfort = 0.0;

    lp.emit(0.0, plant.air_temp)?;
    next_sample += 1;

    for step in 0..=n_steps {
        let t = step as f64 * cfg.dt;
        let mut issued: Vec<SetpointCommand<f64>> = Vec::new();

        lp.hub.sweep_dropouts(t);
        let active = lp.active();
        for id in prev_active.symmetric_difference(&active) {
            if step > 0 {
                let status = if active.contains(id) {
                    NodeStatus::Active
                } else {
                    NodeStatus::Dropped
                };
                node_events.push(NodeEvent {
                    time: t,
                    node: id.clone(),
                    status,
                });
            }
        }
        if active != prev_active && !active.is_empty() {
            let group = group_for(&cal, &active, cfg.grid_step, t)?;
            group_changes.push(GroupChange {
                time: t,
                group: group.clone(),
            });
            if let Some(cmd) = controller
                .on_occupancy_change(group, t)
                .map_err(at("control", "on_occupancy_change", t))?
            {
                issued.push(cmd);
            }
        }
        prev_active = active;

        let mut predicted: BTreeMap<NodeId, f64> = BTreeMap::new();
        if t + 1e-9 >= next_eval {
            while next_eval <= t + 1e-9 {
                next_eval += cfg.controller.eval_interval;
            }
            let tcis = lp.predictions(&cal.model, &prev_active, t)?;
            if !tcis.is_empty() {
                if let Some(cmd) = controller
                    .evaluate(&tcis, plant.air_temp, t)
                    .map_err(at("control", "evaluate", t))?
                {
                    issued.push(cmd);
                }
                predicted = tcis.into_iter().map(|(id, v)| (id, v.value())).collect();
            }
        }

        let setpoint = controller.state().current_setpoint;
        let reason = (!issued.is_empty()).then(|| {
            issued
                .iter()
                .map(|c| c.reason.as_str())
                .collect::<Vec<_>>()
                .join(";")
        });
        commands.extend(issued);
        for occ in &occupants {
            rows.push(TraceRow {
                time: t,
                air_temp: plant.air_temp,
                setpoint,
                occupant_id: occ.occupant_id.clone(),
                tci_pred: predicted.get(&occ.occupant_id).copied(),
                tci_true: true_tci(occ, plant.air_temp).value(),
                command_reason: reason.clone(),
            });
        }

        if step == n_steps {
            break;
        }
        discomfort += mean_tci_sq(&occupants, plant.air_temp) * cfg.dt;
        let before = plant.air_temp;
        plant.step(setpoint, cfg.dt);
        let end = t + cfg.dt;
        // Euler is linear within a step, so sensors see the interpolated temperature
        loop {
            let ts = next_sample as f64 / cfg.node_rate;
            if ts > end + 1e-9 {
                break;
            }
            let air = before + (ts - t) / cfg.dt * (plant.air_temp - before);
            lp.emit(ts, air)?;
            next_sample += 1;
        }
    }

    let tol = cfg.controller.temp_tolerance;
    let mut settled_from: Option<f64> = None;
    let step_rows = rows.chunks(occupants.len());
    for chunk in step_rows {
        let r = &chunk[0];
        let ok = r.setpoint.is_some_and(|s| (r.air_temp - s).abs() <= tol);
        match (ok, settled_from) {
            (true, None) => settled_from = Some(r.time),
            (false, _) => settled_from = None,
            _ => {}
        }
    }

    let group = controller
        .state()
        .group
        .clone()
        .expect("group is set at t = 0");
    let summary = ScenarioSummary {
        master_seed: cfg.master_seed,
        final_t0: group.t0,
        final_air_temp: plant.air_temp,
        converged: settled_from.is_some(),
        convergence_time: settled_from,
        discomfort_integral: discomfort,
        initial_mean_tci_sq: mean_tci_sq(&occupants, cfg.initial_air_temp),
        final_mean_tci_sq: mean_tci_sq(&occupants, plant.air_temp),
        true_neutral_temps: occupants
            .iter()
            .map(|o| (o.occupant_id.clone(), o.true_neutral_temp))
            .collect(),
        profiles: cal.profiles.clone(),
        group,
        group_changes,
        node_events,
        controller: cfg.controller,
        commands,
    };
    Ok(ScenarioTrace {
        rows,
        summary,
        model: cal.model,
        calibration: cal.rows,
        audit: controller.audit().to_vec(),
    })
}

/// Reasons recorded in a trace row.
pub fn parse_reasons(field: &str) -> Result<Vec<CommandReason>, SimError> {
    field
        .split(';')
        .map(|s| CommandReason::parse(s).ok_or_else(|| SimError::Trace(format!("unknown command reason `{s}`"))))
        .collect()
}
