use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA: &str = "grassdyn/1";

/// The envelope every command emits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub experiment: String,
    /// The fully resolved config, seed included.
    pub params: Value,
    pub seed: u64,
    pub results: Value,
    pub pass: bool,
    pub wall_clock_ms: u64,
}

impl RunReport {
    /// The report without its wall-clock field; equal across reruns with the same seed.
    pub fn payload(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serialises");
        v.as_object_mut().expect("object").remove("wall_clock_ms");
        v
    }
}
