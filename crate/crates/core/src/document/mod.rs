//! Transition documents: a two-paragraph outline of the BFS neighborhoods of
//! `s` and `t`, with hidden-edge back references and cross-paragraph notes
//! for shared nodes.
//!
//! A composed document looks like
//!
//! ```text
//! We have two paragraphs that summarize the relation between s and t. ...
//! [ROOT s] Node s has 2 connections. s is connected to a via ..., and s is connected to b via ....
//! [1] ([1] in Paragraph t) Node a has 0 connections.
//! [2] Node b has 0 connections. In addition, b is also linked to [1] a via ....
//! [ROOT t] Node t has 1 connection. t is connected to a via ....
//! [1] ([1] in Paragraph s) Node a has 0 connections.
//! ```
//!
//! [`parse_document`] inverts the composition so the serialization can be
//! checked for losslessness.

mod compose;
mod parse;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, NodeId};

pub use compose::{compose_document, compose_paragraph, escape_text};
pub use parse::{parse_document, ParsedDocument, ParsedParagraph, ParsedSection, ResolvedDocument};

/// Position of a node in a paragraph outline. The root is rendered
/// `[ROOT x]`, descendants as dotted 1-based child positions (`[1.2.2]`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SectionIndex {
    Root(String),
    Path(Vec<u32>),
}

impl SectionIndex {
    pub fn is_root(&self) -> bool {
        matches!(self, SectionIndex::Root(_))
    }

    /// Index of the enclosing section, `None` for the root. `root` names the
    /// paragraph owner.
    pub fn parent(&self, root: &str) -> Option<SectionIndex> {
        match self {
            SectionIndex::Root(_) => None,
            SectionIndex::Path(p) if p.len() == 1 => Some(SectionIndex::Root(root.to_string())),
            SectionIndex::Path(p) => Some(SectionIndex::Path(p[..p.len() - 1].to_vec())),
        }
    }

    /// `self` extended by child position `k` (1-based).
    pub fn child(&self, k: u32) -> SectionIndex {
        match self {
            SectionIndex::Root(_) => SectionIndex::Path(vec![k]),
            SectionIndex::Path(p) => {
                let mut p = p.clone();
                p.push(k);
                SectionIndex::Path(p)
            }
        }
    }
}

impl fmt::Display for SectionIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SectionIndex::Root(name) => write!(f, "[ROOT {name}]"),
            SectionIndex::Path(p) => {
                f.write_str("[")?;
                for (i, k) in p.iter().enumerate() {
                    if i > 0 {
                        f.write_str(".")?;
                    }
                    write!(f, "{k}")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl FromStr for SectionIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Document {
            line: 0,
            msg: format!("malformed section index {s:?}"),
        };
        let inner = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')).ok_or_else(bad)?;
        if let Some(name) = inner.strip_prefix("ROOT ") {
            if name.is_empty() || name.contains(['[', ']']) {
                return Err(bad());
            }
            return Ok(SectionIndex::Root(name.to_string()));
        }
        let path = inner
            .split('.')
            .map(|p| match p.parse::<u32>() {
                Ok(k) if k >= 1 && !p.starts_with('+') && !p.starts_with('0') => Ok(k),
                _ => Err(bad()),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SectionIndex::Path(path))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HiddenMention {
    /// Section of the pre-order-later endpoint, where the sentence is placed.
    pub at: SectionIndex,
    /// Section of the earlier endpoint being referred back to.
    pub target: SectionIndex,
    pub edge: EdgeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Paragraph {
    pub owner: NodeId,
    pub text: String,
    /// Pre-order list of `(node, section)`.
    pub sections: Vec<(NodeId, SectionIndex)>,
    pub hidden_mentions: Vec<HiddenMention>,
}

impl Paragraph {
    pub fn section_of(&self, u: NodeId) -> Option<&SectionIndex> {
        self.sections.iter().find(|(n, _)| *n == u).map(|(_, s)| s)
    }

    pub fn node_at(&self, idx: &SectionIndex) -> Option<NodeId> {
        self.sections.iter().find(|(_, s)| s == idx).map(|(n, _)| *n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossRef {
    pub node: NodeId,
    pub idx_in_s: SectionIndex,
    pub idx_in_t: SectionIndex,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionDocument {
    pub pair: (NodeId, NodeId),
    pub intro: String,
    pub paragraph_s: Paragraph,
    pub paragraph_t: Paragraph,
    pub cross_refs: Vec<CrossRef>,
    pub text: String,
}

impl TransitionDocument {
    /// Number of section headers across both paragraphs.
    pub fn section_count(&self) -> usize {
        self.paragraph_s.sections.len() + self.paragraph_t.sections.len()
    }
}
