//! Peer types, their runtime instances, and the directed latency weights
//! between peer types.
//!
//! Topology files are line based:
//!
//! ```text
//! -- two data centres
//! peer Client
//! peer Server
//! instance c1 : Client
//! instance s1 : Server
//! lat Client Server 100
//! lat Server Client 100
//! ```
//!
//! The weight from a peer to itself defaults to 0; every other ordered pair
//! must be given explicitly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::syntax::PeerType;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PeerInstance {
    pub id: String,
    pub peer: PeerType,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("line {line}: {message}")]
    Syntax { line: u32, message: String },
    #[error("line {line}: peer `{peer}` declared twice")]
    DuplicatePeer { line: u32, peer: String },
    #[error("line {line}: instance `{id}` declared twice")]
    DuplicateInstance { line: u32, id: String },
    #[error("line {line}: weight {from} -> {to} given twice")]
    DuplicateWeight { line: u32, from: String, to: String },
    #[error("line {line}: unknown peer `{peer}`")]
    UnknownPeerDecl { line: u32, peer: String },
    #[error("line {line}: weight must be a natural number, found `{token}`")]
    BadWeight { line: u32, token: String },
    #[error("peer `{peer}` has no instances")]
    NoInstances { peer: String },
    #[error("no weight declared from `{from}` to `{to}`")]
    MissingWeight { from: String, to: String },
    #[error("unknown peer `{0}`")]
    UnknownPeer(String),
}

impl TopologyError {
    /// Source line the error refers to, if any.
    pub fn line(&self) -> Option<u32> {
        match self {
            TopologyError::Syntax { line, .. }
            | TopologyError::DuplicatePeer { line, .. }
            | TopologyError::DuplicateInstance { line, .. }
            | TopologyError::DuplicateWeight { line, .. }
            | TopologyError::UnknownPeerDecl { line, .. }
            | TopologyError::BadWeight { line, .. } => Some(*line),
            _ => None,
        }
    }
}

/// The weight function over peer types together with the declared instances.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatencyMatrix {
    peers: Vec<PeerType>,
    weights: BTreeMap<(PeerType, PeerType), u64>,
    instances: BTreeMap<PeerType, Vec<PeerInstance>>,
}

impl LatencyMatrix {
    pub fn peers(&self) -> &[PeerType] {
        &self.peers
    }

    pub fn has_peer(&self, p: &PeerType) -> bool {
        self.instances.contains_key(p)
    }

    /// Cost of one message from `from` to `to`.
    pub fn weight(&self, from: &PeerType, to: &PeerType) -> Result<u64, TopologyError> {
        for p in [from, to] {
            if !self.has_peer(p) {
                return Err(TopologyError::UnknownPeer(p.0.clone()));
            }
        }
        Ok(self.weights[&(from.clone(), to.clone())])
    }

    /// Instances of a peer type, in declaration order.
    pub fn instances(&self, p: &PeerType) -> Result<&[PeerInstance], TopologyError> {
        self.instances
            .get(p)
            .map(Vec::as_slice)
            .ok_or_else(|| TopologyError::UnknownPeer(p.0.clone()))
    }

    pub fn builder() -> TopologyBuilder {
        TopologyBuilder::default()
    }
}

impl fmt::Display for LatencyMatrix {
    /// Renders the matrix in the file format accepted by [`load_topology`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.peers {
            writeln!(f, "peer {p}")?;
        }
        for p in &self.peers {
            for inst in &self.instances[p] {
                writeln!(f, "instance {} : {}", inst.id, p)?;
            }
        }
        for from in &self.peers {
            for to in &self.peers {
                writeln!(f, "lat {from} {to} {}", self.weights[&(from.clone(), to.clone())])?;
            }
        }
        Ok(())
    }
}

/// Incremental construction with the same validation as the file loader.
#[derive(Clone, Debug, Default)]
pub struct TopologyBuilder {
    peers: Vec<PeerType>,
    instance_ids: BTreeSet<String>,
    instances: BTreeMap<PeerType, Vec<PeerInstance>>,
    weights: BTreeMap<(PeerType, PeerType), u64>,
    line: u32,
}

impl TopologyBuilder {
    fn at_line(&mut self, line: u32) -> &mut Self {
        self.line = line;
        self
    }

    fn require(&self, name: &str) -> Result<PeerType, TopologyError> {
        let p = PeerType::new(name);
        if self.instances.contains_key(&p) {
            Ok(p)
        } else {
            Err(TopologyError::UnknownPeerDecl {
                line: self.line,
                peer: name.to_string(),
            })
        }
    }

    pub fn peer(&mut self, name: &str) -> Result<&mut Self, TopologyError> {
        let p = PeerType::new(name);
        if self.instances.contains_key(&p) {
            return Err(TopologyError::DuplicatePeer {
                line: self.line,
                peer: name.to_string(),
            });
        }
        self.peers.push(p.clone());
        self.instances.insert(p, Vec::new());
        Ok(self)
    }

    pub fn instance(&mut self, id: &str, peer: &str) -> Result<&mut Self, TopologyError> {
        let p = self.require(peer)?;
        if !self.instance_ids.insert(id.to_string()) {
            return Err(TopologyError::DuplicateInstance {
                line: self.line,
                id: id.to_string(),
            });
        }
        self.instances.get_mut(&p).expect("checked").push(PeerInstance {
            id: id.to_string(),
            peer: p,
        });
        Ok(self)
    }

    pub fn lat(&mut self, from: &str, to: &str, weight: u64) -> Result<&mut Self, TopologyError> {
        let key = (self.require(from)?, self.require(to)?);
        if self.weights.insert(key, weight).is_some() {
            return Err(TopologyError::DuplicateWeight {
                line: self.line,
                from: from.to_string(),
                to: to.to_string(),
            });
        }
        Ok(self)
    }

    pub fn build(&self) -> Result<LatencyMatrix, TopologyError> {
        let mut weights = self.weights.clone();
        for from in &self.peers {
            if self.instances[from].is_empty() {
                return Err(TopologyError::NoInstances { peer: from.0.clone() });
            }
            for to in &self.peers {
                let key = (from.clone(), to.clone());
                if weights.contains_key(&key) {
                    continue;
                }
                if from == to {
                    weights.insert(key, 0);
                } else {
                    return Err(TopologyError::MissingWeight {
                        from: from.0.clone(),
                        to: to.0.clone(),
                    });
                }
            }
        }
        Ok(LatencyMatrix {
            peers: self.peers.clone(),
            weights,
            instances: self.instances.clone(),
        })
    }
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    chars
        .next()
        .is_some_and(crate::syntax::lexer_is_ident_start)
        && chars.all(crate::syntax::lexer_is_ident_char)
}

/// Parses and validates a topology file.
pub fn load_topology(src: &str) -> Result<LatencyMatrix, TopologyError> {
    let mut b = TopologyBuilder::default();
    for (idx, raw) in src.lines().enumerate() {
        let line = idx as u32 + 1;
        b.at_line(line);
        let text = raw.split("--").next().unwrap_or("");
        let words: Vec<&str> = text.split_whitespace().collect();
        let syntax = |message: &str| TopologyError::Syntax {
            line,
            message: message.to_string(),
        };
        let check_name = |w: &str| {
            if is_name(w) {
                Ok(())
            } else {
                Err(syntax(&format!("`{w}` is not a valid name")))
            }
        };
        match words.as_slice() {
            [] => {}
            ["peer", name] => {
                check_name(name)?;
                b.peer(name)?;
            }
            ["instance", id, ":", peer] => {
                check_name(id)?;
                b.instance(id, peer)?;
            }
            ["lat", from, to, w] => {
                let weight = w.parse::<u64>().map_err(|_| TopologyError::BadWeight {
                    line,
                    token: w.to_string(),
                })?;
                b.lat(from, to, weight)?;
            }
            [kw, ..] if matches!(*kw, "peer" | "instance" | "lat") => {
                return Err(syntax(&format!("malformed `{kw}` line")));
            }
            [other, ..] => {
                return Err(syntax(&format!(
                    "expected `peer`, `instance` or `lat`, found `{other}`"
                )))
            }
        }
    }
    b.build()
}
