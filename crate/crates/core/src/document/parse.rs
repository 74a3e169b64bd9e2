use std::collections::{BTreeSet, HashMap};
use std::sync::OnceLock;

use regex::Regex;

use super::compose::escape_text;
use super::{CrossRef, SectionIndex};
use crate::error::{Error, Result};
use crate::graph::{NodeId, TeGraph};
use crate::transition::{BfsTree, HiddenEdge, HiddenEdgeSet};

/// One section line of a paragraph, as written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedSection {
    pub line: usize,
    pub index: SectionIndex,
    /// Node name without any inlined node text.
    pub name: String,
    pub declared: usize,
    /// `(child mention, edge text)` in child order.
    pub connections: Vec<(String, String)>,
    /// `(target section, target name, edge text)`.
    pub hidden: Vec<(SectionIndex, String, String)>,
    pub cross_ref: Option<SectionIndex>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedParagraph {
    pub root: String,
    /// Pre-order sections; the first is the root.
    pub sections: Vec<ParsedSection>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedDocument {
    pub source: String,
    pub target: String,
    pub paragraph_s: ParsedParagraph,
    pub paragraph_t: ParsedParagraph,
    /// `(node name, index in s, index in t)` in paragraph-s order.
    pub cross_refs: Vec<(String, SectionIndex, SectionIndex)>,
}

/// A parsed document mapped back onto graph ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedDocument {
    pub tree_s: BfsTree,
    pub tree_t: BfsTree,
    pub hidden_s: HiddenEdgeSet,
    pub hidden_t: HiddenEdgeSet,
    pub cross_refs: Vec<CrossRef>,
}

fn header_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^ Node (.+?) has (\d+) connections?\.").unwrap())
}

fn doc_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Document { line, msg: msg.into() }
}

fn parse_index(line: usize, s: &str) -> Result<SectionIndex> {
    s.parse().map_err(|_| doc_err(line, format!("malformed section index {s:?}")))
}

fn parse_section(line: usize, text: &str) -> Result<ParsedSection> {
    if !text.starts_with('[') {
        return Err(doc_err(line, "expected a section index"));
    }
    let close = text
        .find(']')
        .ok_or_else(|| doc_err(line, "unterminated section index"))?;
    let index = parse_index(line, &text[..=close])?;
    let mut rest = &text[close + 1..];

    let mut cross_ref = None;
    if let Some(r) = rest.strip_prefix(" ([") {
        let end = r.find(']').ok_or_else(|| doc_err(line, "unterminated cross reference"))?;
        cross_ref = Some(parse_index(line, &rest[2..=end + 3])?);
        let after = &r[end + 1..];
        rest = after
            .strip_prefix(" in Paragraph s)")
            .or_else(|| after.strip_prefix(" in Paragraph t)"))
            .ok_or_else(|| doc_err(line, "malformed cross reference"))?;
    }

    let caps = header_re()
        .captures(rest)
        .ok_or_else(|| doc_err(line, "expected \"Node <name> has <n> connections.\""))?;
    let declared: usize = caps[2]
        .parse()
        .map_err(|_| doc_err(line, "connection count out of range"))?;
    let name = match &index {
        SectionIndex::Root(n) => n.clone(),
        SectionIndex::Path(_) => caps[1].to_string(),
    };
    let after = &rest[caps.get(0).unwrap().end()..];

    let marker = format!(" In addition, {name} is also linked to [");
    let (conn, hidden_part) = match after.find(&marker) {
        Some(p) => after.split_at(p),
        None => (after, ""),
    };

    let mut connections = Vec::with_capacity(declared);
    if declared == 0 {
        if !conn.is_empty() {
            return Err(doc_err(line, "unexpected text after a node with no connections"));
        }
    } else {
        let body = conn
            .strip_prefix(' ')
            .and_then(|c| c.strip_suffix('.'))
            .ok_or_else(|| doc_err(line, "malformed connection sentence"))?;
        let parts: Vec<&str> = body.split(" is connected to ").collect();
        if parts.len() != declared + 1 || parts[0] != name {
            return Err(doc_err(
                line,
                format!("declared {declared} connections but found {}", parts.len().saturating_sub(1)),
            ));
        }
        for i in 1..=declared {
            let mut clause = parts[i];
            if i < declared {
                let sep = if i + 1 == declared { ", and " } else { ", " };
                clause = clause
                    .strip_suffix(&format!("{sep}{name}"))
                    .ok_or_else(|| doc_err(line, "malformed connection list"))?;
            }
            let (child, edge) = clause
                .split_once(" via ")
                .ok_or_else(|| doc_err(line, "connection without \" via \""))?;
            connections.push((child.to_string(), edge.to_string()));
        }
    }

    let mut hidden = Vec::new();
    if !hidden_part.is_empty() {
        let marker_head = &marker[..marker.len() - 1];
        for piece in hidden_part.split(marker_head).skip(1) {
            let close = piece
                .find(']')
                .ok_or_else(|| doc_err(line, "unterminated hidden-edge reference"))?;
            let target = parse_index(line, &piece[..=close])?;
            let tail = piece[close + 1..]
                .strip_prefix(' ')
                .and_then(|t| t.strip_suffix('.'))
                .ok_or_else(|| doc_err(line, "malformed hidden-edge sentence"))?;
            let (who, edge) = tail
                .split_once(" via ")
                .ok_or_else(|| doc_err(line, "hidden edge without \" via \""))?;
            hidden.push((target, who.to_string(), edge.to_string()));
        }
    }

    Ok(ParsedSection {
        line,
        index,
        name,
        declared,
        connections,
        hidden,
        cross_ref,
    })
}

fn assemble(sections: Vec<ParsedSection>) -> Result<ParsedParagraph> {
    let first = &sections[0];
    let SectionIndex::Root(root) = &first.index else {
        return Err(doc_err(first.line, "paragraph must start with a ROOT section"));
    };
    let root = root.clone();

    // (section position, children seen)
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); sections.len()];
    for (i, sec) in sections.iter().enumerate().skip(1) {
        let SectionIndex::Path(path) = &sec.index else {
            return Err(doc_err(sec.line, "unexpected ROOT section inside a paragraph"));
        };
        let parent = sec.index.parent(&root).unwrap();
        while let Some(&(top, _)) = stack.last() {
            if sections[top].index == parent {
                break;
            }
            stack.pop();
        }
        let Some(top) = stack.last_mut() else {
            return Err(doc_err(sec.line, format!("section {} has no enclosing section", sec.index)));
        };
        let k = *path.last().unwrap() as usize;
        if k != top.1 + 1 {
            return Err(doc_err(
                sec.line,
                format!("section {} out of order (expected child {})", sec.index, top.1 + 1),
            ));
        }
        top.1 += 1;
        children[top.0].push(i);
        stack.push((i, 0));
    }

    for (i, sec) in sections.iter().enumerate() {
        let kids = &children[i];
        if kids.len() != sec.declared {
            return Err(doc_err(
                sec.line,
                format!("declares {} connections but has {} subsections", sec.declared, kids.len()),
            ));
        }
        for (&c, (mention, _)) in kids.iter().zip(&sec.connections) {
            let child = &sections[c].name;
            let ok = mention == child
                || mention
                    .strip_prefix(child.as_str())
                    .is_some_and(|r| r.starts_with(" (") && r.ends_with(')'));
            if !ok {
                return Err(doc_err(
                    sec.line,
                    format!("connection to {mention:?} does not match subsection {child:?}"),
                ));
            }
        }
    }

    let by_index: HashMap<&SectionIndex, usize> =
        sections.iter().enumerate().map(|(i, s)| (&s.index, i)).collect();
    for (i, sec) in sections.iter().enumerate() {
        for (target, who, _) in &sec.hidden {
            match by_index.get(target) {
                Some(&j) if j < i && sections[j].name == *who => {}
                _ => {
                    return Err(doc_err(
                        sec.line,
                        format!("hidden edge refers to unknown earlier section {target}"),
                    ))
                }
            }
        }
    }

    Ok(ParsedParagraph { root, sections })
}

/// Recover both outlines, the hidden edges and the cross references from a
/// composed document.
pub fn parse_document(doc_text: &str) -> Result<ParsedDocument> {
    let mut lines = doc_text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, intro)) if intro.starts_with("We have two paragraphs") => {}
        _ => return Err(doc_err(1, "missing introduction")),
    }

    let mut paragraphs: Vec<Vec<ParsedSection>> = Vec::new();
    for (no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let sec = parse_section(no, line)?;
        if sec.index.is_root() {
            if paragraphs.len() == 2 {
                return Err(doc_err(no, "more than two paragraphs"));
            }
            paragraphs.push(vec![sec]);
        } else {
            paragraphs
                .last_mut()
                .ok_or_else(|| doc_err(no, "section before any ROOT section"))?
                .push(sec);
        }
    }
    if paragraphs.len() != 2 {
        return Err(doc_err(0, format!("expected two paragraphs, found {}", paragraphs.len())));
    }
    let paragraph_t = assemble(paragraphs.pop().unwrap())?;
    let paragraph_s = assemble(paragraphs.pop().unwrap())?;

    let refs_s: Vec<(String, SectionIndex, SectionIndex)> = paragraph_s
        .sections
        .iter()
        .filter_map(|s| s.cross_ref.clone().map(|t| (s.name.clone(), s.index.clone(), t)))
        .collect();
    let refs_t: BTreeSet<(String, SectionIndex, SectionIndex)> = paragraph_t
        .sections
        .iter()
        .filter_map(|s| s.cross_ref.clone().map(|r| (s.name.clone(), r, s.index.clone())))
        .collect();
    if refs_s.iter().cloned().collect::<BTreeSet<_>>() != refs_t {
        let line = paragraph_t.sections[0].line;
        return Err(doc_err(line, "cross references in the two paragraphs disagree"));
    }

    Ok(ParsedDocument {
        source: paragraph_s.root.clone(),
        target: paragraph_t.root.clone(),
        paragraph_s,
        paragraph_t,
        cross_refs: refs_s,
    })
}

impl ParsedDocument {
    /// Map names back to graph ids, checking every edge text.
    pub fn resolve(&self, g: &TeGraph) -> Result<ResolvedDocument> {
        let mut names: HashMap<String, NodeId> = HashMap::with_capacity(g.node_count());
        for n in g.nodes() {
            names.insert(escape_text(&n.external_key), n.id);
        }
        let (tree_s, hidden_s, ids_s) = resolve_paragraph(&self.paragraph_s, g, &names)?;
        let (tree_t, hidden_t, _) = resolve_paragraph(&self.paragraph_t, g, &names)?;
        let cross_refs = self
            .cross_refs
            .iter()
            .map(|(name, in_s, in_t)| CrossRef {
                node: ids_s[name],
                idx_in_s: in_s.clone(),
                idx_in_t: in_t.clone(),
            })
            .collect();
        Ok(ResolvedDocument {
            tree_s,
            tree_t,
            hidden_s,
            hidden_t,
            cross_refs,
        })
    }
}

fn resolve_paragraph(
    p: &ParsedParagraph,
    g: &TeGraph,
    names: &HashMap<String, NodeId>,
) -> Result<(BfsTree, HiddenEdgeSet, HashMap<String, NodeId>)> {
    let mut ids: HashMap<String, NodeId> = HashMap::new();
    let mut at: HashMap<&SectionIndex, NodeId> = HashMap::new();
    for sec in &p.sections {
        let id = *names
            .get(&sec.name)
            .ok_or_else(|| doc_err(sec.line, format!("unknown node {:?}", sec.name)))?;
        ids.insert(sec.name.clone(), id);
        at.insert(&sec.index, id);
    }

    let edge_for = |line: usize, a: NodeId, b: NodeId, text: &str| {
        let e = g
            .edge_between(a, b)
            .ok_or_else(|| doc_err(line, format!("no edge between {:?} and {:?}", g.key(a), g.key(b))))?;
        if escape_text(&g.edges()[e.index()].text) != text {
            return Err(doc_err(line, format!("edge text mismatch for {e}")));
        }
        Ok(e)
    };

    let mut links = Vec::new();
    let mut depth = 0;
    let mut hidden = HiddenEdgeSet::new();
    let mut child_cursor: HashMap<&SectionIndex, usize> = HashMap::new();
    for sec in &p.sections {
        let me = at[&sec.index];
        if let Some(parent_idx) = sec.index.parent(&p.root) {
            let parent_sec = p.sections.iter().find(|s| s.index == parent_idx).unwrap();
            let slot = child_cursor.entry(&parent_sec.index).or_default();
            let (_, edge_text) = &parent_sec.connections[*slot];
            *slot += 1;
            let parent = at[&parent_idx];
            links.push((parent, me, edge_for(parent_sec.line, parent, me, edge_text)?));
            if let SectionIndex::Path(path) = &sec.index {
                depth = depth.max(path.len());
            }
        }
        for (target, _, text) in &sec.hidden {
            let other = at[target];
            let edge = edge_for(sec.line, me, other, text)?;
            hidden.insert(HiddenEdge {
                edge,
                a: me.min(other),
                b: me.max(other),
            });
        }
    }
    let tree = BfsTree::from_links(at[&p.sections[0].index], depth, &links)
        .map_err(|e| doc_err(p.sections[0].line, e.to_string()))?;
    Ok((tree, hidden, ids))
}
