//! Graphviz DOT rendering with the appendix-style simplifications: edges
//! carrying a negative reward (error/reset arrows) can be hidden, and
//! deterministic description chains can be merged into a single arrow.

use crate::mechanics::MachineFile;

#[derive(Debug, Clone, Copy, Default)]
pub struct DotOptions {
    /// Drop edges whose output carries a negative reward.
    pub hide_negative: bool,
    /// Collapse runs of probability-1 single-in/single-out states into one
    /// edge with a concatenated label.
    pub merge_chains: bool,
}

#[derive(Debug, Clone)]
struct Edge {
    from: usize,
    to: usize,
    label: String,
    p: f64,
    negative: bool,
}

fn format_p(p: f64) -> String {
    let s = format!("{p:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn collect(file: &MachineFile) -> (Vec<String>, Vec<Edge>) {
    match file {
        MachineFile::Machine(m) => (
            m.states.clone(),
            m.transitions
                .iter()
                .filter(|e| e.p > 0.0)
                .map(|e| Edge {
                    from: e.from,
                    to: e.to,
                    label: m.alphabet[e.symbol].clone(),
                    p: e.p,
                    negative: false,
                })
                .collect(),
        ),
        MachineFile::Transducer(t) => (
            t.states.clone(),
            t.transitions
                .iter()
                .filter(|e| e.p > 0.0)
                .map(|e| Edge {
                    from: e.from,
                    to: e.to,
                    label: format!("{} / {}", t.outputs[e.output], t.inputs[e.input]),
                    p: e.p,
                    negative: t.outputs[e.output].contains("-1"),
                })
                .collect(),
        ),
    }
}

/// Merge linear chains: while some state has exactly one incoming and one
/// outgoing edge, both with probability 1, and is not an endpoint of a
/// self-loop, splice it out and concatenate the labels.
fn merge_chains(states: &[String], edges: &mut Vec<Edge>) {
    loop {
        let n = states.len();
        let mut in_idx: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut out_idx: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (k, e) in edges.iter().enumerate() {
            out_idx[e.from].push(k);
            in_idx[e.to].push(k);
        }
        let candidate = (0..n).find(|&s| {
            in_idx[s].len() == 1
                && out_idx[s].len() == 1
                && in_idx[s][0] != out_idx[s][0]
                && edges[in_idx[s][0]].p == 1.0
                && edges[out_idx[s][0]].p == 1.0
                && edges[in_idx[s][0]].from != s
                && edges[out_idx[s][0]].to != s
        });
        let Some(s) = candidate else { break };
        let (ke_in, ke_out) = (in_idx[s][0], out_idx[s][0]);
        let merged = Edge {
            from: edges[ke_in].from,
            to: edges[ke_out].to,
            label: format!("{} · {}", edges[ke_in].label, edges[ke_out].label),
            p: 1.0,
            negative: edges[ke_in].negative || edges[ke_out].negative,
        };
        let mut keep: Vec<Edge> = Vec::with_capacity(edges.len() - 1);
        for (k, e) in edges.iter().enumerate() {
            if k != ke_in && k != ke_out {
                keep.push(e.clone());
            }
        }
        keep.push(merged);
        *edges = keep;
    }
}

/// Render a machine file as deterministic Graphviz DOT text.
pub fn export_dot(file: &MachineFile, options: DotOptions) -> String {
    let (states, mut edges) = collect(file);
    if options.hide_negative {
        edges.retain(|e| !e.negative);
    }
    if options.merge_chains {
        merge_chains(&states, &mut edges);
    }
    edges.sort_by(|a, b| {
        (a.from, a.to, &a.label)
            .cmp(&(b.from, b.to, &b.label))
            .then(a.p.total_cmp(&b.p))
    });

    // Only states touched by a surviving edge (or all, when nothing was
    // filtered) appear; isolated states after filtering would be noise.
    let mut used = vec![false; states.len()];
    if edges.is_empty() {
        used.fill(true);
    }
    for e in &edges {
        used[e.from] = true;
        used[e.to] = true;
    }

    let escape = |s: &str| s.replace('\\', "\\\\").replace('"', "\\\"");
    let mut out = String::from("digraph machine {\n  rankdir=LR;\n  node [shape=circle];\n");
    for (i, name) in states.iter().enumerate() {
        if used[i] {
            out.push_str(&format!("  n{i} [label=\"{}\"];\n", escape(name)));
        }
    }
    for e in &edges {
        out.push_str(&format!(
            "  n{} -> n{} [label=\"{} : {}\"];\n",
            e.from,
            e.to,
            escape(&e.label),
            format_p(e.p)
        ));
    }
    out.push_str("}\n");
    out
}
