//! Causal-state machine structures and complexity measures.
//!
//! An ε-machine is a set of symbol-valued transition matrices over causal
//! states; an ε-transducer conditions them on an input alphabet. Statistical
//! complexity is the Shannon entropy of the stationary causal-state
//! distribution.

mod io;

pub use io::{load_machine_file, save_machine_file, MachineFile};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::MechanicsError;

pub const ROW_SUM_TOL: f64 = 1e-12;
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;

/// One entry of a symbol-valued transition matrix:
/// T^(y)_{from,to} = p.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MachineEdge {
    pub from: usize,
    pub symbol: usize,
    pub to: usize,
    pub p: f64,
}

/// Generative causal-state model (alphabet, states, transition matrices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonMachine {
    pub alphabet: Vec<String>,
    pub states: Vec<String>,
    pub transitions: Vec<MachineEdge>,
}

/// One entry of a conditional transition matrix:
/// T^(y|x)_{from,to} = p.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransducerEdge {
    pub from: usize,
    pub input: usize,
    pub output: usize,
    pub to: usize,
    pub p: f64,
}

/// Input-output causal-state model (channel presentation).
///
/// `input_multiplicity[x]` counts how many raw input bytes the input symbol
/// stands for when the alphabet was built by collapsing behaviorally
/// identical bytes; it is 1 everywhere for machines built directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonTransducer {
    pub inputs: Vec<String>,
    pub input_multiplicity: Vec<u32>,
    pub outputs: Vec<String>,
    pub states: Vec<String>,
    pub transitions: Vec<TransducerEdge>,
}

/// Probability vector over causal states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDistribution {
    pub weights: Vec<f64>,
}

/// The process driving a transducer's input symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InputProcess {
    /// Independent draws from a fixed distribution over the input alphabet.
    Iid(Vec<f64>),
    /// Inputs generated by an ε-machine over the input alphabet.
    Machine(EpsilonMachine),
}

impl EpsilonMachine {
    pub fn validate(&self) -> Result<(), MechanicsError> {
        for e in &self.transitions {
            if e.from >= self.states.len()
                || e.to >= self.states.len()
                || e.symbol >= self.alphabet.len()
            {
                return Err(MechanicsError::Malformed(format!(
                    "edge {e:?} out of bounds"
                )));
            }
            if e.p < 0.0 {
                return Err(MechanicsError::Malformed(format!(
                    "negative probability on {e:?}"
                )));
            }
        }
        for i in 0..self.states.len() {
            let sum: f64 = self
                .transitions
                .iter()
                .filter(|e| e.from == i)
                .map(|e| e.p)
                .sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(MechanicsError::Malformed(format!(
                    "state {i} row sums to {sum}"
                )));
            }
        }
        Ok(())
    }

    /// State-to-state transition matrix M_ij = sum_y T^(y)_ij.
    pub fn state_matrix(&self) -> DMatrix<f64> {
        let n = self.states.len();
        let mut m = DMatrix::zeros(n, n);
        for e in &self.transitions {
            m[(e.from, e.to)] += e.p;
        }
        m
    }

    /// View a machine as a transducer with a single dummy input symbol.
    pub fn as_transducer(&self) -> EpsilonTransducer {
        EpsilonTransducer {
            inputs: vec!["·".to_string()],
            input_multiplicity: vec![1],
            outputs: self.alphabet.clone(),
            states: self.states.clone(),
            transitions: self
                .transitions
                .iter()
                .map(|e| TransducerEdge {
                    from: e.from,
                    input: 0,
                    output: e.symbol,
                    to: e.to,
                    p: e.p,
                })
                .collect(),
        }
    }
}

impl EpsilonTransducer {
    pub fn validate(&self) -> Result<(), MechanicsError> {
        if self.input_multiplicity.len() != self.inputs.len() {
            return Err(MechanicsError::Malformed(
                "input multiplicity length mismatch".into(),
            ));
        }
        for e in &self.transitions {
            if e.from >= self.states.len()
                || e.to >= self.states.len()
                || e.input >= self.inputs.len()
                || e.output >= self.outputs.len()
            {
                return Err(MechanicsError::Malformed(format!(
                    "edge {e:?} out of bounds"
                )));
            }
            if e.p < 0.0 {
                return Err(MechanicsError::Malformed(format!(
                    "negative probability on {e:?}"
                )));
            }
        }
        for i in 0..self.states.len() {
            for x in 0..self.inputs.len() {
                let sum: f64 = self
                    .transitions
                    .iter()
                    .filter(|e| e.from == i && e.input == x)
                    .map(|e| e.p)
                    .sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(MechanicsError::Malformed(format!(
                        "state {i} input {x} row sums to {sum}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Turn a single-input transducer back into a machine over its outputs.
    pub fn into_machine(self) -> Result<EpsilonMachine, MechanicsError> {
        if self.inputs.len() != 1 {
            return Err(MechanicsError::Malformed(format!(
                "cannot view a {}-input transducer as a machine",
                self.inputs.len()
            )));
        }
        Ok(EpsilonMachine {
            alphabet: self.outputs,
            states: self.states,
            transitions: self
                .transitions
                .into_iter()
                .map(|e| MachineEdge {
                    from: e.from,
                    symbol: e.output,
                    to: e.to,
                    p: e.p,
                })
                .collect(),
        })
    }

    /// Uniform distribution over raw input bytes, expressed on the (possibly
    /// collapsed) input alphabet via the multiplicities.
    pub fn uniform_input(&self) -> InputProcess {
        let total: u32 = self.input_multiplicity.iter().sum();
        InputProcess::Iid(
            self.input_multiplicity
                .iter()
                .map(|&m| m as f64 / total as f64)
                .collect(),
        )
    }

    /// State-to-state matrix under an i.i.d. input distribution.
    pub fn state_matrix_under(&self, input_dist: &[f64]) -> DMatrix<f64> {
        let n = self.states.len();
        let mut m = DMatrix::zeros(n, n);
        for e in &self.transitions {
            m[(e.from, e.to)] += input_dist[e.input] * e.p;
        }
        m
    }
}

/// Shannon entropy of a probability vector, in bits.
pub fn shannon_entropy(dist: &[f64]) -> Result<f64, MechanicsError> {
    let mut sum = 0.0;
    for &p in dist {
        if p < 0.0 {
            return Err(MechanicsError::InvalidDistribution(format!(
                "negative probability {p}"
            )));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(MechanicsError::InvalidDistribution(format!(
            "sums to {sum}"
        )));
    }
    Ok(dist
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum())
}

/// Unifilarity: at most one positive-probability successor per
/// (state, input, output).
pub trait Unifilar {
    fn unifilarity_witnesses(&self) -> Vec<(usize, String)>;

    fn is_unifilar(&self) -> bool {
        self.unifilarity_witnesses().is_empty()
    }
}

impl Unifilar for EpsilonMachine {
    fn unifilarity_witnesses(&self) -> Vec<(usize, String)> {
        let mut seen = std::collections::HashMap::new();
        let mut witnesses = Vec::new();
        for e in &self.transitions {
            if e.p <= 0.0 {
                continue;
            }
            if let Some(&to) = seen.get(&(e.from, e.symbol)) {
                if to != e.to {
                    witnesses.push((e.from, self.alphabet[e.symbol].clone()));
                }
            } else {
                seen.insert((e.from, e.symbol), e.to);
            }
        }
        witnesses.sort();
        witnesses.dedup();
        witnesses
    }
}

impl Unifilar for EpsilonTransducer {
    fn unifilarity_witnesses(&self) -> Vec<(usize, String)> {
        let mut seen = std::collections::HashMap::new();
        let mut witnesses = Vec::new();
        for e in &self.transitions {
            if e.p <= 0.0 {
                continue;
            }
            if let Some(&to) = seen.get(&(e.from, e.input, e.output)) {
                if to != e.to {
                    witnesses.push((
                        e.from,
                        format!("{}|{}", self.outputs[e.output], self.inputs[e.input]),
                    ));
                }
            } else {
                seen.insert((e.from, e.input, e.output), e.to);
            }
        }
        witnesses.sort();
        witnesses.dedup();
        witnesses
    }
}

pub fn is_unifilar<M: Unifilar>(machine: &M) -> bool {
    machine.is_unifilar()
}

/// Strongly connected components of the positive-probability state graph,
/// in reverse topological order (Tarjan).
fn sccs(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
    }
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next_index = 0usize;
    let mut result = Vec::new();
    // Iterative Tarjan with an explicit work stack.
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut work: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (v, ref mut child)) = work.last_mut() {
            if *child == 0 {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if *child < adj[v].len() {
                let w = adj[v][*child];
                *child += 1;
                if index[w] == usize::MAX {
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                if low[v] == index[v] {
                    let mut component = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        component.push(w);
                        if w == v {
                            break;
                        }
                    }
                    component.sort_unstable();
                    result.push(component);
                }
                work.pop();
                if let Some(&mut (parent, _)) = work.last_mut() {
                    low[parent] = low[parent].min(low[v]);
                }
            }
        }
    }
    result
}

/// Recurrent classes of a stochastic matrix: SCCs with no outgoing edge.
fn recurrent_classes(m: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| i != j).map(move |j| (i, j)))
        .filter(|&(i, j)| m[(i, j)] > 0.0)
        .collect();
    let components = sccs(n, &edges);
    let mut class_of = vec![0usize; n];
    for (k, comp) in components.iter().enumerate() {
        for &s in comp {
            class_of[s] = k;
        }
    }
    components
        .iter()
        .enumerate()
        .filter(|(k, comp)| {
            comp.iter().all(|&s| {
                (0..n).all(|j| m[(s, j)] <= 0.0 || class_of[j] == *k)
            })
        })
        .map(|(_, comp)| comp.clone())
        .collect()
}

/// Stationary distribution of a stochastic matrix via the linear system
/// (pi M = pi, sum pi = 1) restricted to the unique recurrent class. Valid
/// for periodic chains as well. Transient states get weight zero.
pub fn stationary_of_matrix(m: &DMatrix<f64>) -> Result<StateDistribution, MechanicsError> {
    let n = m.nrows();
    let classes = recurrent_classes(m);
    if classes.len() != 1 {
        return Err(MechanicsError::NonErgodic {
            count: classes.len(),
            classes,
        });
    }
    let class = &classes[0];
    let k = class.len();
    // Restricted system A x = b with A = [ (M^T - I) ; 1...1 ].
    let mut a = DMatrix::zeros(k + 1, k);
    for (ri, &i) in class.iter().enumerate() {
        for (rj, &j) in class.iter().enumerate() {
            a[(rj, ri)] = m[(i, j)];
        }
    }
    for i in 0..k {
        a[(i, i)] -= 1.0;
    }
    for j in 0..k {
        a[(k, j)] = 1.0;
    }
    let mut b = nalgebra::DVector::zeros(k + 1);
    b[k] = 1.0;
    let solution = (a.transpose() * &a)
        .lu()
        .solve(&(a.transpose() * b))
        .ok_or_else(|| MechanicsError::Malformed("stationary solve failed".into()))?;

    let mut weights = vec![0.0; n];
    for (ri, &i) in class.iter().enumerate() {
        weights[i] = solution[ri].max(0.0);
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }

    // Fixed-point residual check.
    let pi = nalgebra::RowDVector::from_row_slice(&weights);
    let residual = (&pi * m) - &pi;
    let max_residual = residual.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    if max_residual > STATIONARY_RESIDUAL_TOL {
        return Err(MechanicsError::Malformed(format!(
            "stationary residual {max_residual} exceeds tolerance"
        )));
    }
    Ok(StateDistribution { weights })
}

/// Asymptotic causal-state distribution of an ε-machine.
pub fn stationary_distribution(
    machine: &EpsilonMachine,
) -> Result<StateDistribution, MechanicsError> {
    stationary_of_matrix(&machine.state_matrix())
}

/// C_mu = H[pi~].
pub fn statistical_complexity(machine: &EpsilonMachine) -> Result<f64, MechanicsError> {
    let pi = stationary_distribution(machine)?;
    shannon_entropy(&pi.weights)
}

/// C_0 = log2 |S|.
pub fn topological_complexity_of(state_count: usize) -> f64 {
    (state_count as f64).log2()
}

pub fn topological_complexity(states: usize) -> f64 {
    topological_complexity_of(states)
}

/// pi~_X: stationary distribution over transducer states when driven by the
/// given input process, marginalized from the joint (input-state x state)
/// chain.
pub fn input_driven_distribution(
    transducer: &EpsilonTransducer,
    input: &InputProcess,
) -> Result<StateDistribution, MechanicsError> {
    let n = transducer.states.len();
    match input {
        InputProcess::Iid(dist) => {
            if dist.len() != transducer.inputs.len() {
                return Err(MechanicsError::InvalidDistribution(format!(
                    "input distribution has {} entries for {} symbols",
                    dist.len(),
                    transducer.inputs.len()
                )));
            }
            shannon_entropy(dist)?; // validates the distribution
            stationary_of_matrix(&transducer.state_matrix_under(dist))
        }
        InputProcess::Machine(input_machine) => {
            if input_machine.alphabet.len() != transducer.inputs.len() {
                return Err(MechanicsError::Malformed(
                    "input machine alphabet does not match transducer inputs".into(),
                ));
            }
            let nu = input_machine.states.len();
            let joint_n = nu * n;
            let mut joint = DMatrix::zeros(joint_n, joint_n);
            // P((u,s) -> (u',s')) = sum_x P_in(u -x-> u') * sum_y T^(y|x)(s -> s')
            let mut channel: Vec<DMatrix<f64>> =
                vec![DMatrix::zeros(n, n); transducer.inputs.len()];
            for e in &transducer.transitions {
                channel[e.input][(e.from, e.to)] += e.p;
            }
            for ie in &input_machine.transitions {
                let ch = &channel[ie.symbol];
                for s in 0..n {
                    for s2 in 0..n {
                        let p = ie.p * ch[(s, s2)];
                        if p > 0.0 {
                            joint[(ie.from * n + s, ie.to * n + s2)] += p;
                        }
                    }
                }
            }
            let joint_pi = stationary_of_matrix(&joint)?;
            let mut weights = vec![0.0; n];
            for u in 0..nu {
                for s in 0..n {
                    weights[s] += joint_pi.weights[u * n + s];
                }
            }
            Ok(StateDistribution { weights })
        }
    }
}

/// C_X = H[pi~_X].
pub fn input_dependent_complexity(
    transducer: &EpsilonTransducer,
    input: &InputProcess,
) -> Result<f64, MechanicsError> {
    let pi = input_driven_distribution(transducer, input)?;
    shannon_entropy(&pi.weights)
}

/// Lower-bound estimate of the channel complexity sup_X C_X, maximizing over
/// i.i.d. input distributions only: coordinate-exchange hill climbing from
/// several starts, with the step shrinking down to `resolution`. Degenerate
/// inputs that make the chain non-ergodic are skipped.
pub fn channel_complexity_upper(
    transducer: &EpsilonTransducer,
    resolution: f64,
) -> (f64, Vec<f64>) {
    let k = transducer.inputs.len();
    let eval = |dist: &[f64]| -> Option<f64> {
        input_dependent_complexity(transducer, &InputProcess::Iid(dist.to_vec())).ok()
    };

    let mut starts: Vec<Vec<f64>> = vec![vec![1.0 / k as f64; k]];
    for i in 0..k {
        // Vertex-leaning starts, smoothed to keep every input live.
        let mut v = vec![0.1 / k as f64; k];
        v[i] += 0.9;
        let total: f64 = v.iter().sum();
        v.iter_mut().for_each(|p| *p /= total);
        starts.push(v);
    }

    let mut best_value = 0.0;
    let mut best_dist = vec![1.0 / k as f64; k];
    if let Some(v) = eval(&best_dist) {
        best_value = v;
    }
    for start in starts {
        let mut dist = start;
        let mut value = match eval(&dist) {
            Some(v) => v,
            None => continue,
        };
        let mut step = 0.25;
        while step >= resolution {
            let mut improved = false;
            for i in 0..k {
                for j in 0..k {
                    if i == j || dist[i] < step {
                        continue;
                    }
                    let mut candidate = dist.clone();
                    candidate[i] -= step;
                    candidate[j] += step;
                    if let Some(v) = eval(&candidate) {
                        if v > value + 1e-15 {
                            value = v;
                            dist = candidate;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                step /= 2.0;
            }
        }
        if value > best_value {
            best_value = value;
            best_dist = dist;
        }
    }
    (best_value, best_dist)
}
