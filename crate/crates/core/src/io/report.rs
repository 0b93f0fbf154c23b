//! Evaluation reports. Distances are stored in centimeters.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::alignment::{AlignMode, SceneMetrics};
use crate::interaction::{EvalConfig, InteractionCurve};

const CM: f64 = 100.0;

fn to_cm(values: &[f64]) -> Vec<f64> {
    values.iter().map(|v| v * CM).collect()
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Means over entities, in centimeters. `None` when there is no entity of
/// that kind.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub hum_cd: Option<f64>,
    pub hum_v2v: Option<f64>,
    pub obj_cd: Option<f64>,
    pub obj_v2v: Option<f64>,
}

impl MeanMetrics {
    fn from_cm(hcd: &[f64], hv: &[f64], ocd: &[f64], ov: &[f64]) -> Self {
        MeanMetrics {
            hum_cd: mean(hcd),
            hum_v2v: mean(hv),
            obj_cd: mean(ocd),
            obj_v2v: mean(ov),
        }
    }

    pub fn values(&self) -> [Option<f64>; 4] {
        [self.hum_cd, self.hum_v2v, self.obj_cd, self.obj_v2v]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneReport {
    pub scene: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub human_cd_cm: Vec<f64>,
    pub human_v2v_cm: Vec<f64>,
    pub object_cd_cm: Vec<f64>,
    pub object_v2v_cm: Vec<f64>,
    pub mean_cm: MeanMetrics,
}

impl SceneReport {
    pub fn from_metrics(scene: impl Into<String>, m: &SceneMetrics) -> Self {
        let (hcd, hv) = (to_cm(&m.human_cd), to_cm(&m.human_v2v));
        let (ocd, ov) = (to_cm(&m.object_cd), to_cm(&m.object_v2v));
        let mean_cm = MeanMetrics::from_cm(&hcd, &hv, &ocd, &ov);
        SceneReport {
            scene: scene.into(),
            error: None,
            human_cd_cm: hcd,
            human_v2v_cm: hv,
            object_cd_cm: ocd,
            object_v2v_cm: ov,
            mean_cm,
        }
    }

    pub fn failed(scene: impl Into<String>, error: impl ToString) -> Self {
        SceneReport {
            scene: scene.into(),
            error: Some(error.to_string()),
            human_cd_cm: Vec::new(),
            human_v2v_cm: Vec::new(),
            object_cd_cm: Vec::new(),
            object_v2v_cm: Vec::new(),
            mean_cm: MeanMetrics::default(),
        }
    }
}

/// Curve with thresholds in centimeters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveReport {
    pub threshold_cm: Vec<f64>,
    pub accuracy: Vec<f64>,
}

impl From<&InteractionCurve> for CurveReport {
    fn from(c: &InteractionCurve) -> Self {
        CurveReport {
            threshold_cm: to_cm(&c.thresholds),
            accuracy: c.accuracy.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub scene: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub toolkit_version: String,
    pub mode: AlignMode,
    pub config: EvalConfig,
    pub scenes: Vec<SceneReport>,
    /// Entity-weighted means over every successful scene.
    pub aggregate_cm: MeanMetrics,
    /// Keyed by protocol name; protocols without annotations are absent.
    #[serde(default)]
    pub curves: BTreeMap<String, CurveReport>,
    pub failures: Vec<Failure>,
}

impl EvalReport {
    pub fn new(mode: AlignMode, config: EvalConfig, scenes: Vec<SceneReport>) -> Self {
        let ok: Vec<&SceneReport> = scenes.iter().filter(|s| s.error.is_none()).collect();
        let gather = |f: fn(&SceneReport) -> &Vec<f64>| -> Vec<f64> {
            ok.iter().flat_map(|s| f(s).iter().copied()).collect()
        };
        let aggregate_cm = MeanMetrics::from_cm(
            &gather(|s| &s.human_cd_cm),
            &gather(|s| &s.human_v2v_cm),
            &gather(|s| &s.object_cd_cm),
            &gather(|s| &s.object_v2v_cm),
        );
        let failures = scenes
            .iter()
            .filter_map(|s| {
                s.error.as_ref().map(|e| Failure {
                    scene: s.scene.clone(),
                    error: e.clone(),
                })
            })
            .collect();
        EvalReport {
            toolkit_version: crate::VERSION.to_string(),
            mode,
            config,
            scenes,
            aggregate_cm,
            curves: BTreeMap::new(),
            failures,
        }
    }

    pub fn add_curve(&mut self, protocol: &str, curve: &InteractionCurve) {
        self.curves.insert(protocol.to_string(), curve.into());
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per entity: `scene,entity,index,cd_cm,v2v_cm`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scene,entity,index,cd_cm,v2v_cm\n");
        for s in &self.scenes {
            if s.error.is_some() {
                continue;
            }
            let rows = [
                ("human", &s.human_cd_cm, &s.human_v2v_cm),
                ("object", &s.object_cd_cm, &s.object_v2v_cm),
            ];
            for (kind, cd, v2v) in rows {
                for (i, (c, v)) in cd.iter().zip(v2v.iter()).enumerate() {
                    out.push_str(&format!("{},{kind},{i},{c},{v}\n", s.scene));
                }
            }
        }
        out
    }
}
