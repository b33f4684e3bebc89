use std::collections::{HashMap, VecDeque};

use num_bigint::BigUint;

use super::{step, Config, Machine, RedexKind, RunResult, RuntimeError, TraceEvent, Tracer};
use crate::arith::Assignment;
use crate::syntax::Program;
use crate::topology::LatencyMatrix;
use crate::typer::typecheck_program;

struct Node {
    config: Config,
    parent: Option<usize>,
    kind: Option<RedexKind>,
    steps: usize,
}

/// Every reduction sequence of a program, explored breadth first.
/// Configurations reached along several sequences are visited once.
pub struct Enumeration {
    nodes: Vec<Node>,
    terminals: Vec<RunResult>,
    terminal_nodes: Vec<usize>,
    /// Exploration stopped at the configuration cap.
    pub capped: bool,
    /// Branches abandoned because they used up their fuel.
    pub fuel_exhausted: usize,
    /// Distinct configurations visited.
    pub explored: usize,
}

impl Enumeration {
    /// Distinct final results, in discovery order.
    pub fn terminals(&self) -> &[RunResult] {
        &self.terminals
    }

    pub fn complete(&self) -> bool {
        !self.capped && self.fuel_exhausted == 0
    }

    pub fn max_latency(&self) -> Option<u64> {
        self.terminals.iter().map(|r| r.latency).max()
    }

    /// The steps leading to the `i`th terminal.
    pub fn trace(&self, i: usize) -> Vec<TraceEvent> {
        let mut chain = Vec::new();
        let mut at = Some(self.terminal_nodes[i]);
        while let Some(n) = at {
            chain.push(n);
            at = self.nodes[n].parent;
        }
        let mut tracer = Tracer::new();
        for &n in chain.iter().rev().skip(1) {
            let node = &self.nodes[n];
            tracer.record(node.kind.expect("only the root has no step"), &node.config);
        }
        tracer.events
    }
}

pub fn enumerate_runs(p: &Program, topo: &LatencyMatrix, fuel: usize, cap: usize) -> Result<Enumeration, RuntimeError> {
    let m = Machine::new(p, topo);
    let root = m.initial(p)?;
    let mut seen: HashMap<Config, usize> = HashMap::new();
    let mut e = Enumeration {
        nodes: Vec::new(),
        terminals: Vec::new(),
        terminal_nodes: Vec::new(),
        capped: false,
        fuel_exhausted: 0,
        explored: 0,
    };
    seen.insert(root.clone(), 0);
    e.nodes.push(Node {
        config: root,
        parent: None,
        kind: None,
        steps: 0,
    });
    let mut queue = VecDeque::from([0usize]);

    'bfs: while let Some(i) = queue.pop_front() {
        let succs = step(&m, &e.nodes[i].config)?;
        if succs.is_empty() {
            let r = e.nodes[i].config.result().expect("no successors only at a final value");
            e.terminals.push(r);
            e.terminal_nodes.push(i);
            continue;
        }
        let steps = e.nodes[i].steps;
        if steps >= fuel {
            e.fuel_exhausted += 1;
            continue;
        }
        for s in succs {
            if seen.contains_key(&s.config) {
                continue;
            }
            if e.nodes.len() >= cap {
                e.capped = true;
                break 'bfs;
            }
            let id = e.nodes.len();
            seen.insert(s.config.clone(), id);
            e.nodes.push(Node {
                config: s.config,
                parent: Some(i),
                kind: Some(s.kind),
                steps: steps + 1,
            });
            queue.push_back(id);
        }
    }
    e.explored = e.nodes.len();
    Ok(e)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SoundnessOptions {
    pub fuel: usize,
    pub cap: usize,
    /// Added to the static bound before comparing. Only for exercising
    /// the violation path.
    pub bound_delta: i64,
}

impl Default for SoundnessOptions {
    fn default() -> Self {
        SoundnessOptions {
            fuel: super::DEFAULT_FUEL,
            cap: super::DEFAULT_CAP,
            bound_delta: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Ok {
        max_latency: u64,
        bound: BigUint,
        runs: usize,
    },
    Violation {
        result: RunResult,
        bound: BigUint,
        trace: Vec<TraceEvent>,
    },
    Inconclusive {
        bound: BigUint,
        reason: String,
    },
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, Verdict::Ok { .. })
    }
}

/// Compares every enumerated run latency against the checked bound of `main`.
pub fn check_soundness(p: &Program, topo: &LatencyMatrix, fuel: usize, cap: usize) -> Result<Verdict, RuntimeError> {
    check_soundness_with(
        p,
        topo,
        &SoundnessOptions {
            fuel,
            cap,
            bound_delta: 0,
        },
    )
}

pub fn check_soundness_with(p: &Program, topo: &LatencyMatrix, opts: &SoundnessOptions) -> Result<Verdict, RuntimeError> {
    let types = typecheck_program(p, topo).map_err(|errs| {
        RuntimeError::IllTyped(errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))
    })?;
    let latency = &types.main.latency;
    let bound = latency
        .denote(&Assignment::new())
        .map_err(|_| RuntimeError::OpenBound(latency.to_string()))?;
    let delta = BigUint::from(opts.bound_delta.unsigned_abs());
    let bound = if opts.bound_delta >= 0 {
        bound + delta
    } else if bound >= delta {
        bound - delta
    } else {
        BigUint::default()
    };

    let all = enumerate_runs(p, topo, opts.fuel, opts.cap)?;
    if let Some(i) = all
        .terminals()
        .iter()
        .position(|r| BigUint::from(r.latency) > bound)
    {
        return Ok(Verdict::Violation {
            result: all.terminals()[i].clone(),
            bound,
            trace: all.trace(i),
        });
    }
    if all.capped {
        return Ok(Verdict::Inconclusive {
            bound,
            reason: format!("configuration cap reached after {} configurations", all.explored),
        });
    }
    if all.fuel_exhausted > 0 {
        return Ok(Verdict::Inconclusive {
            bound,
            reason: format!("{} branch(es) ran out of fuel ({} steps)", all.fuel_exhausted, opts.fuel),
        });
    }
    Ok(Verdict::Ok {
        max_latency: all.max_latency().unwrap_or(0),
        bound,
        runs: all.terminals().len(),
    })
}
