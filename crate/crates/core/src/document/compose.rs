use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use super::{CrossRef, HiddenMention, Paragraph, SectionIndex, TransitionDocument};
use crate::graph::{NodeId, TeGraph};
use crate::transition::{BfsTree, HiddenEdgeSet};

/// Replace the bracket markers and line breaks reserved by the document
/// layout.
pub fn escape_text(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            '[' => '⟦',
            ']' => '⟧',
            '\n' | '\r' => ' ',
            c => c,
        })
        .collect()
}

fn plural(n: usize) -> &'static str {
    if n == 1 {
        "connection"
    } else {
        "connections"
    }
}

/// Pre-order section assignment for a tree.
fn assign_sections(tree: &BfsTree, g: &TeGraph) -> Vec<(NodeId, SectionIndex)> {
    let mut out = Vec::with_capacity(tree.len());
    let mut stack = vec![(tree.root(), SectionIndex::Root(escape_text(g.key(tree.root()))))];
    while let Some((u, idx)) = stack.pop() {
        for (k, &(c, _)) in tree.children(u).iter().enumerate().rev() {
            stack.push((c, idx.child(k as u32 + 1)));
        }
        out.push((u, idx));
    }
    out
}

struct Layout {
    sections: Vec<(NodeId, SectionIndex)>,
    position: HashMap<NodeId, usize>,
    mentions: Vec<HiddenMention>,
}

fn layout(tree: &BfsTree, hidden: &HiddenEdgeSet, g: &TeGraph) -> Layout {
    let sections = assign_sections(tree, g);
    let position: HashMap<NodeId, usize> = sections.iter().enumerate().map(|(i, (u, _))| (*u, i)).collect();
    let mut mentions: Vec<(usize, usize, HiddenMention)> = hidden
        .iter()
        .map(|h| {
            let (pa, pb) = (position[&h.a], position[&h.b]);
            let (later, earlier) = if pa > pb { (pa, pb) } else { (pb, pa) };
            (
                later,
                earlier,
                HiddenMention {
                    at: sections[later].1.clone(),
                    target: sections[earlier].1.clone(),
                    edge: h.edge,
                },
            )
        })
        .collect();
    mentions.sort_by_key(|(later, earlier, m)| (*later, *earlier, m.edge));
    Layout {
        sections,
        position,
        mentions: mentions.into_iter().map(|x| x.2).collect(),
    }
}

fn render(
    tree: &BfsTree,
    layout: &Layout,
    g: &TeGraph,
    include_node_text: bool,
    annotations: &BTreeMap<NodeId, String>,
) -> String {
    let name = |u: NodeId| escape_text(g.key(u));
    let mention = |u: NodeId| {
        let text = &g.nodes()[u.index()].text;
        if include_node_text && !text.is_empty() {
            format!("{} ({})", name(u), escape_text(text))
        } else {
            name(u)
        }
    };
    let edge_text = |e| escape_text(&g.edges()[crate::graph::EdgeId::index(e)].text);

    let slot: HashMap<&SectionIndex, usize> =
        layout.sections.iter().enumerate().map(|(i, (_, s))| (s, i)).collect();
    let mut by_section: Vec<Vec<&HiddenMention>> = vec![Vec::new(); layout.sections.len()];
    for m in &layout.mentions {
        by_section[slot[&m.at]].push(m);
    }

    let mut text = String::new();
    for (i, (u, idx)) in layout.sections.iter().enumerate() {
        let u = *u;
        let children = tree.children(u);
        let who = if idx.is_root() { mention(u) } else { name(u) };
        write!(text, "{idx}").unwrap();
        if let Some(note) = annotations.get(&u) {
            write!(text, " {note}").unwrap();
        }
        write!(text, " Node {who} has {} {}.", children.len(), plural(children.len())).unwrap();
        let n = name(u);
        for (k, &(c, e)) in children.iter().enumerate() {
            let sep = match k {
                0 => " ",
                k if k + 1 == children.len() => ", and ",
                _ => ", ",
            };
            write!(text, "{sep}{n} is connected to {} via {}", mention(c), edge_text(e)).unwrap();
        }
        if !children.is_empty() {
            text.push('.');
        }
        for m in &by_section[i] {
            let other = layout.sections[slot[&m.target]].0;
            write!(
                text,
                " In addition, {n} is also linked to {} {} via {}.",
                m.target,
                name(other),
                edge_text(m.edge)
            )
            .unwrap();
        }
        text.push('\n');
    }
    text
}

/// Render one BFS tree as a paragraph outline.
pub fn compose_paragraph(tree: &BfsTree, hidden: &HiddenEdgeSet, g: &TeGraph, include_node_text: bool) -> Paragraph {
    let layout = layout(tree, hidden, g);
    let text = render(tree, &layout, g, include_node_text, &BTreeMap::new());
    Paragraph {
        owner: tree.root(),
        text,
        sections: layout.sections,
        hidden_mentions: layout.mentions,
    }
}

fn intro(s: &str, t: &str) -> String {
    format!(
        "We have two paragraphs that summarize the relation between {s} and {t}. \
         Paragraph s describes the neighborhood of {s}; Paragraph t describes the neighborhood of {t}. \
         Shared nodes are cross-referenced."
    )
}

/// Compose the full transition document from the two trees, their hidden
/// edges and the shared nodes.
pub fn compose_document(
    tree_s: &BfsTree,
    tree_t: &BfsTree,
    hidden_s: &HiddenEdgeSet,
    hidden_t: &HiddenEdgeSet,
    common: &BTreeSet<NodeId>,
    g: &TeGraph,
    include_node_text: bool,
) -> TransitionDocument {
    let ls = layout(tree_s, hidden_s, g);
    let lt = layout(tree_t, hidden_t, g);
    let section = |l: &Layout, u: NodeId| l.position.get(&u).map(|&i| l.sections[i].1.clone());

    let mut cross_refs = Vec::new();
    let mut notes_s = BTreeMap::new();
    let mut notes_t = BTreeMap::new();
    for &u in common {
        let (Some(in_s), Some(in_t)) = (section(&ls, u), section(&lt, u)) else {
            continue;
        };
        notes_s.insert(u, format!("({in_t} in Paragraph t)"));
        notes_t.insert(u, format!("({in_s} in Paragraph s)"));
        cross_refs.push(CrossRef {
            node: u,
            idx_in_s: in_s,
            idx_in_t: in_t,
        });
    }

    let text_s = render(tree_s, &ls, g, include_node_text, &notes_s);
    let text_t = render(tree_t, &lt, g, include_node_text, &notes_t);
    let intro = intro(&escape_text(g.key(tree_s.root())), &escape_text(g.key(tree_t.root())));
    let text = format!("{intro}\n{text_s}{text_t}");
    TransitionDocument {
        pair: (tree_s.root(), tree_t.root()),
        intro,
        paragraph_s: Paragraph {
            owner: tree_s.root(),
            text: text_s,
            sections: ls.sections,
            hidden_mentions: ls.mentions,
        },
        paragraph_t: Paragraph {
            owner: tree_t.root(),
            text: text_t,
            sections: lt.sections,
            hidden_mentions: lt.mentions,
        },
        cross_refs,
        text,
    }
}
