//! Labelled training data in CSV form.
//!
//! Header: `occupant_id,timestamp,hr,gsr,clo,met,air_temp,mrt,rh,vel,tci_label`.
//! Each row carries one wearable reading and the room state at the same instant.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::features::aggregate;
use super::{EnvSample, FeatureVector, PhysioSample, PredictorError};
use crate::comfort::{clamp_tci, Tci};
use crate::node::NodeId;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DatasetRow<T> {
    pub occupant_id: NodeId,
    pub timestamp: f64,
    pub hr: T,
    pub gsr: T,
    pub clo: T,
    pub met: T,
    pub air_temp: T,
    pub mrt: T,
    pub rh: T,
    pub vel: T,
    pub tci_label: T,
}

impl<T: Scalar> DatasetRow<T> {
    fn split(&self) -> (PhysioSample<T>, EnvSample<T>) {
        (
            PhysioSample {
                occupant_id: self.occupant_id.clone(),
                timestamp: self.timestamp,
                heart_rate: self.hr,
                gsr: self.gsr,
                clothing_insulation: self.clo,
                metabolic_rate: self.met,
            },
            EnvSample {
                timestamp: self.timestamp,
                air_temp: self.air_temp,
                mean_radiant_temp: self.mrt,
                rel_humidity: self.rh,
                air_velocity: self.vel,
            },
        )
    }
}

pub fn read_dataset_csv<T: Scalar, R: Read>(reader: R) -> Result<Vec<DatasetRow<T>>, PredictorError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for rec in rdr.deserialize() {
        let row: DatasetRow<T> = rec?;
        let (p, e) = row.split();
        p.validate()?;
        e.validate()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_dataset_csv<T: Scalar, W: Write>(
    writer: W,
    rows: &[DatasetRow<T>],
) -> Result<(), PredictorError> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Groups rows per occupant into tumbling windows `[k·window, (k+1)·window)`
/// and aggregates each into one labelled feature vector. The label is the
/// window mean of `tci_label`, clamped to the TCI scale.
///
/// Output is ordered by occupant id, then window index.
pub fn training_set_from_rows<T: Scalar>(
    rows: &[DatasetRow<T>],
    window: f64,
) -> Result<Vec<(FeatureVector<T>, Tci<T>)>, PredictorError> {
    if !(window > 0.0) {
        return Err(PredictorError::InvalidParameter("window must be positive"));
    }
    let mut buckets: BTreeMap<(&NodeId, i64), Vec<&DatasetRow<T>>> = BTreeMap::new();
    for row in rows {
        let k = (row.timestamp / window).floor() as i64;
        buckets.entry((&row.occupant_id, k)).or_default().push(row);
    }
    let mut out = Vec::with_capacity(buckets.len());
    for bucket in buckets.values() {
        let (physio, env): (Vec<_>, Vec<_>) = bucket.iter().map(|r| r.split()).unzip();
        let p: Vec<_> = physio.iter().collect();
        let e: Vec<_> = env.iter().collect();
        let fv = aggregate(&p, &e)?;
        let n = T::from_usize(bucket.len()).unwrap();
        let label = bucket.iter().fold(T::zero(), |a, r| a + r.tci_label) / n;
        out.push((fv, clamp_tci(label)?));
    }
    Ok(out)
}
