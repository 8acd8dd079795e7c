//! Classical simulation of circuits on computational basis states.
//!
//! Every wire carries one plain integer. `Free` nodes assert that the
//! incoming value is zero and raise [`SimError::AncillaViolation`] otherwise.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::ir::{CompositeCircuit, DataKind, Op};

/// Named register values handed to a gate's classical action.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registers(pub BTreeMap<String, u64>);

impl Registers {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Result<u64, SimError> {
        self.0.get(name).copied().ok_or_else(|| SimError::MissingRegister(name.to_string()))
    }

    pub fn bit(&self, name: &str) -> Result<bool, SimError> {
        Ok(self.get(name)? != 0)
    }

    pub fn set(&mut self, name: &str, value: u64) {
        self.0.insert(name.to_string(), value);
    }

    pub fn flip(&mut self, name: &str, cond: bool) -> Result<(), SimError> {
        let v = self.get(name)?;
        self.set(name, v ^ cond as u64);
        Ok(())
    }

    pub fn remove(&mut self, name: &str) -> Result<u64, SimError> {
        self.0.remove(name).ok_or_else(|| SimError::MissingRegister(name.to_string()))
    }
}

impl FromIterator<(String, u64)> for Registers {
    fn from_iter<T: IntoIterator<Item = (String, u64)>>(iter: T) -> Self {
        Registers(iter.into_iter().collect())
    }
}

/// A `Free` of a register that does not hold zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AncillaViolation {
    pub path: String,
    pub register: String,
    pub value: u64,
}

impl fmt::Display for AncillaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "register `{}` freed holding {} at {}", self.register, self.value, self.path)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Each direct child is evaluated by its own classical action.
    Shallow,
    /// Composite children are recursively simulated down to leaves.
    Flattened,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub path: String,
    pub inputs: BTreeMap<String, u64>,
    pub outputs: BTreeMap<String, u64>,
}

pub type SimTrace = Vec<TraceEntry>;

/// Error returned by [`simulate_trace`], with the trace recorded up to the failure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceFailure {
    pub error: SimError,
    pub trace: SimTrace,
}

pub fn simulate(
    circuit: &CompositeCircuit,
    inputs: &BTreeMap<String, u64>,
    mode: Mode,
) -> Result<BTreeMap<String, u64>, SimError> {
    run(circuit, inputs, mode, &circuit.name, None)
}

pub fn simulate_trace(
    circuit: &CompositeCircuit,
    inputs: &BTreeMap<String, u64>,
    mode: Mode,
) -> Result<(BTreeMap<String, u64>, SimTrace), TraceFailure> {
    let mut trace = Vec::new();
    match run(circuit, inputs, mode, &circuit.name, Some(&mut trace)) {
        Ok(out) => Ok((out, trace)),
        Err(error) => Err(TraceFailure { error, trace }),
    }
}

fn check_range(kind: DataKind, value: u64, path: &str, register: &str) -> Result<(), SimError> {
    if value < kind.bound() {
        Ok(())
    } else {
        Err(SimError::Domain {
            path: path.to_string(),
            register: register.to_string(),
            value,
            bound: kind.bound(),
        })
    }
}

fn run(
    circuit: &CompositeCircuit,
    inputs: &BTreeMap<String, u64>,
    mode: Mode,
    prefix: &str,
    mut trace: Option<&mut SimTrace>,
) -> Result<BTreeMap<String, u64>, SimError> {
    for name in inputs.keys() {
        if circuit.signature.inputs().all(|s| s.name != *name) {
            return Err(SimError::UnexpectedInput(name.clone()));
        }
    }
    let mut values: Vec<Option<u64>> = vec![None; circuit.wires.len()];
    for (name, w) in &circuit.inputs {
        let v = *inputs.get(name).ok_or_else(|| SimError::MissingRegister(name.clone()))?;
        check_range(circuit.wires[*w].kind, v, prefix, name)?;
        values[*w] = Some(v);
    }
    let read = |values: &[Option<u64>], w: usize| -> Result<u64, SimError> {
        values[w].ok_or_else(|| SimError::MissingRegister(format!("wire {w}")))
    };

    for node in &circuit.nodes {
        let path = format!("{prefix}/{}", node.label);
        match &node.op {
            Op::Alloc(_) => {
                for (_, w) in &node.outputs {
                    values[*w] = Some(0);
                }
            }
            Op::Free(_) => {
                for (_, w) in &node.inputs {
                    let v = read(&values, *w)?;
                    if v != 0 {
                        return Err(SimError::AncillaViolation(AncillaViolation {
                            path,
                            register: circuit.wires[*w].register.clone(),
                            value: v,
                        }));
                    }
                }
            }
            Op::Gate(gate) => {
                let mut regs = Registers::new();
                for (port, w) in &node.inputs {
                    regs.set(port, read(&values, *w)?);
                }
                let before = regs.0.clone();
                if mode == Mode::Flattened && !gate.is_leaf() {
                    let sub = gate.decompose()?;
                    let out = run(&sub, &regs.0, mode, &path, trace.as_deref_mut())?;
                    regs = Registers(out);
                } else {
                    gate.apply(&mut regs)?;
                }
                for (port, w) in &node.outputs {
                    let v = regs.get(port)?;
                    check_range(circuit.wires[*w].kind, v, &path, &circuit.wires[*w].register)?;
                    values[*w] = Some(v);
                }
                let record = mode == Mode::Shallow || gate.is_leaf();
                if let (Some(t), true) = (trace.as_deref_mut(), record) {
                    t.push(TraceEntry { path, inputs: before, outputs: regs.0 });
                }
            }
        }
    }

    let mut out = BTreeMap::new();
    for (name, w) in &circuit.outputs {
        out.insert(name.clone(), read(&values, *w)?);
    }
    Ok(out)
}
