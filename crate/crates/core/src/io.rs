//! JSON forms of MDPs, classes and instances. Floats are written in
//! shortest round-trip form and parsed exactly, so save/load is bit-exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_class::{FunctionClass, QTuple, DEFAULT_ENUMERATION_CAP};
use crate::mdp::TabularMdp;
use crate::zoo::{Fact, NamedInstance};

pub const INSTANCE_FORMAT: &str = "beldim-instance";
pub const INSTANCE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpJson {
    pub horizon: usize,
    pub num_states: usize,
    pub num_actions: usize,
    /// `P[h][s][a][s']`.
    pub transitions: Vec<Vec<Vec<Vec<f64>>>>,
    /// `r[h][s][a]`.
    pub rewards: Vec<Vec<Vec<f64>>>,
    pub initial: Vec<f64>,
}

impl MdpJson {
    pub fn from_mdp(mdp: &TabularMdp) -> Self {
        let (transitions, rewards) = mdp.nested_tables();
        Self {
            horizon: mdp.horizon(),
            num_states: mdp.num_states(),
            num_actions: mdp.num_actions(),
            transitions,
            rewards,
            initial: mdp.initial_distribution().to_vec(),
        }
    }

    pub fn to_mdp(&self) -> Result<TabularMdp> {
        let mdp = TabularMdp::from_nested(&self.transitions, &self.rewards, self.initial.clone())?;
        if (mdp.horizon(), mdp.num_states(), mdp.num_actions()) != (self.horizon, self.num_states, self.num_actions) {
            return Err(Error::InvalidMdp("declared sizes disagree with the tables".into()));
        }
        Ok(mdp)
    }
}

fn nest(flat: &[f64], num_actions: usize) -> Vec<Vec<f64>> {
    flat.chunks(num_actions).map(<[f64]>::to_vec).collect()
}

fn flatten(nested: &[Vec<f64>], num_actions: usize) -> Result<Vec<f64>> {
    if nested.iter().any(|row| row.len() != num_actions) {
        return Err(Error::InvalidClass("table row has the wrong number of actions".into()));
    }
    Ok(nested.concat())
}

/// Explicit members, or per-step layer lists whose product is the class
/// (members enumerated with the last step varying fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassJson {
    /// `members[i][h][s][a]`.
    Members { num_states: usize, num_actions: usize, members: Vec<Vec<Vec<Vec<f64>>>> },
    /// `layers[h][j][s][a]`.
    Factored { num_states: usize, num_actions: usize, layers: Vec<Vec<Vec<Vec<f64>>>> },
}

impl ClassJson {
    pub fn from_class(class: &FunctionClass) -> Self {
        let (num_states, num_actions) = (class.num_states(), class.num_actions());
        if class.is_factored() {
            let layers = (0..class.horizon())
                .map(|h| class.layers(h).iter().map(|l| nest(l, num_actions)).collect())
                .collect();
            ClassJson::Factored { num_states, num_actions, layers }
        } else {
            ClassJson::Members { num_states, num_actions, members: class.members().iter().map(QTuple::nested).collect() }
        }
    }

    pub fn to_class(&self) -> Result<FunctionClass> {
        self.to_class_capped(DEFAULT_ENUMERATION_CAP)
    }

    pub fn to_class_capped(&self, cap: usize) -> Result<FunctionClass> {
        match self {
            ClassJson::Members { num_states, num_actions, members } => {
                let tuples = members
                    .iter()
                    .map(|m| {
                        let layers = m.iter().map(|l| flatten(l, *num_actions)).collect::<Result<Vec<_>>>()?;
                        if layers.iter().any(|l| l.len() != num_states * num_actions) {
                            return Err(Error::InvalidClass("member table has the wrong number of states".into()));
                        }
                        QTuple::new(*num_states, *num_actions, layers)
                    })
                    .collect::<Result<Vec<_>>>()?;
                FunctionClass::from_members(tuples)
            }
            ClassJson::Factored { num_states, num_actions, layers } => {
                let per_step = layers
                    .iter()
                    .map(|step| step.iter().map(|l| flatten(l, *num_actions)).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?;
                FunctionClass::from_factored(*num_states, *num_actions, per_step, cap)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceJson {
    pub format: String,
    pub version: u32,
    pub name: String,
    pub mdp: MdpJson,
    pub class: ClassJson,
    #[serde(default)]
    pub facts: Vec<Fact>,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

impl InstanceJson {
    pub fn from_instance(inst: &NamedInstance) -> Self {
        Self {
            format: INSTANCE_FORMAT.into(),
            version: INSTANCE_VERSION,
            name: inst.name.clone(),
            mdp: MdpJson::from_mdp(&inst.mdp),
            class: ClassJson::from_class(&inst.class),
            facts: inst.facts.clone(),
            metadata: inst.metadata.clone(),
        }
    }

    pub fn to_instance(&self) -> Result<NamedInstance> {
        if self.format != INSTANCE_FORMAT || self.version != INSTANCE_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported instance format {:?} version {}",
                self.format, self.version
            )));
        }
        let mdp = self.mdp.to_mdp()?;
        let class = self.class.to_class()?;
        class.check_compatible(&mdp)?;
        Ok(NamedInstance { name: self.name.clone(), mdp, class, facts: self.facts.clone(), metadata: self.metadata.clone() })
    }
}

/// Pretty JSON with a trailing newline.
pub fn instance_to_string(inst: &NamedInstance) -> String {
    let mut s = serde_json::to_string_pretty(&InstanceJson::from_instance(inst)).expect("instance JSON is serializable");
    s.push('\n');
    s
}

pub fn instance_from_str(text: &str) -> Result<NamedInstance> {
    serde_json::from_str::<InstanceJson>(text)?.to_instance()
}

pub fn load_instance(path: &Path) -> Result<NamedInstance> {
    instance_from_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{make_appF_b, make_random_realizable};

    #[test]
    fn random_instance_round_trips_bit_exactly() {
        let inst = make_random_realizable(4, 2, 3, 2, 42).unwrap();
        let text = instance_to_string(&inst);
        let back = instance_from_str(&text).unwrap();
        assert_eq!(back.mdp, inst.mdp);
        assert_eq!(back.class.members(), inst.class.members());
        assert!(back.class.is_factored());
        assert_eq!(instance_to_string(&back), text);
    }

    #[test]
    fn member_class_round_trips() {
        let inst = make_appF_b(3).unwrap();
        let back = instance_from_str(&instance_to_string(&inst)).unwrap();
        assert_eq!(back.class.members(), inst.class.members());
        assert_eq!(back.facts, inst.facts);
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(instance_from_str("{}").is_err());
        let inst = make_appF_b(3).unwrap();
        let text = instance_to_string(&inst).replace("beldim-instance", "other");
        assert!(instance_from_str(&text).is_err());
    }
}
