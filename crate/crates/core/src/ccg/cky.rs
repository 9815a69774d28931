//! CKY over lexical types with four rule families: forward and backward
//! application, the wh merge and the relative-clause merge. No type raising,
//! no composition.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::ccg::edges::extract_edges;
use crate::ccg::types::{Atom, Category, TypeId, TypeTable};
use crate::error::{Error, Result};
use crate::lf::Edge;

/// Derivations beyond this count are reported as ambiguous without enumeration.
pub const MAX_DERIVATIONS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Rule {
    Lex,
    FwdApp,
    BwdApp,
    WhMerge,
    RcMerge,
}

impl Rule {
    pub fn tag(self) -> &'static str {
        match self {
            Rule::Lex => "LEX",
            Rule::FwdApp => "FWD_APP",
            Rule::BwdApp => "BWD_APP",
            Rule::WhMerge => "WH_MERGE",
            Rule::RcMerge => "RC_MERGE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

/// Applies the grammar to an adjacent pair. `left_lexical` marks a one-token
/// left span; `NP\NP` modifiers only attach to such spans.
pub fn combine(left: &Category, right: &Category, left_lexical: bool) -> Option<(Category, Rule, Side)> {
    if let Category::Fwd(x, y) = left {
        if **y == *right {
            return Some(((**x).clone(), Rule::FwdApp, Side::Left));
        }
    }
    if let Category::Bwd(x, y) = right {
        if **y == *left {
            if *right == Category::np_modifier() {
                return left_lexical.then(|| (Category::np(), Rule::BwdApp, Side::Left));
            }
            return Some(((**x).clone(), Rule::BwdApp, Side::Right));
        }
    }
    if left.is_atom(Atom::Wh) && (*right == Category::vp() || right.is_atom(Atom::S)) {
        return Some((Category::s(), Rule::WhMerge, Side::Left));
    }
    if left.is_atom(Atom::RcThat) && (right.is_atom(Atom::SGap) || *right == Category::vp() || right.is_atom(Atom::S)) {
        return Some((Category::np_modifier(), Rule::RcMerge, Side::Left));
    }
    None
}

#[derive(Debug, Clone, Serialize)]
pub struct Node {
    /// Half-open span over content positions.
    pub span: (usize, usize),
    #[serde(serialize_with = "ser_cat")]
    pub category: Category,
    pub rule: Rule,
    pub children: Option<(usize, usize)>,
    pub head_child: Option<Side>,
    /// Content position of the lexical head.
    pub head: usize,
}

fn ser_cat<S: serde::Serializer>(c: &Category, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&c.to_string())
}

/// A binary derivation stored as an arena; leaves are nodes `0..n` in order.
#[derive(Debug, Clone, Serialize)]
pub struct Derivation {
    pub nodes: Vec<Node>,
    pub root: usize,
    pub leaf_types: Vec<TypeId>,
}

impl Derivation {
    pub fn root_node(&self) -> &Node {
        &self.nodes[self.root]
    }

    pub fn len(&self) -> usize {
        self.leaf_types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaf_types.is_empty()
    }

    /// Internal nodes in bottom-up order.
    pub fn internal(&self) -> impl Iterator<Item = (usize, &Node)> {
        self.nodes.iter().enumerate().filter(|(_, n)| n.children.is_some())
    }

    pub fn parent_of(&self, idx: usize) -> Option<usize> {
        self.nodes
            .iter()
            .position(|n| matches!(n.children, Some((l, r)) if l == idx || r == idx))
    }

    /// Re-applies every rule to its children: the soundness check.
    pub fn verify(&self, table: &TypeTable) -> bool {
        for (i, leaf) in self.nodes.iter().take(self.len()).enumerate() {
            if leaf.rule != Rule::Lex || leaf.category != table.get(self.leaf_types[i]).category {
                return false;
            }
        }
        self.internal().all(|(_, n)| {
            let (l, r) = n.children.unwrap();
            let (lc, rc) = (&self.nodes[l], &self.nodes[r]);
            let lexical = lc.span.1 - lc.span.0 == 1;
            match combine(&lc.category, &rc.category, lexical) {
                Some((cat, rule, side)) => {
                    cat == n.category
                        && rule == n.rule
                        && Some(side) == n.head_child
                        && lc.span.1 == rc.span.0
                        && n.span == (lc.span.0, rc.span.1)
                }
                None => false,
            }
        })
    }

    /// FWD_APP functors sit on the left, BWD_APP functors on the right.
    pub fn directions_ok(&self) -> bool {
        self.internal().all(|(_, n)| {
            let (l, r) = n.children.unwrap();
            match n.rule {
                Rule::FwdApp => self.nodes[l].category.slash() == Some(crate::ccg::types::Slash::Forward),
                Rule::BwdApp => self.nodes[r].category.slash() == Some(crate::ccg::types::Slash::Backward),
                _ => true,
            }
        })
    }

    /// Bracketed rendering, e.g. `(BWD_APP NP (FWD_APP TV NP))`.
    pub fn render(&self, table: &TypeTable) -> String {
        fn go(d: &Derivation, t: &TypeTable, i: usize, out: &mut String) {
            let n = &d.nodes[i];
            match n.children {
                None => out.push_str(t.name(d.leaf_types[n.span.0])),
                Some((l, r)) => {
                    out.push('(');
                    out.push_str(n.rule.tag());
                    out.push(' ');
                    go(d, t, l, out);
                    out.push(' ');
                    go(d, t, r, out);
                    out.push(')');
                }
            }
        }
        let mut s = String::new();
        go(self, table, self.root, &mut s);
        s
    }
}

#[derive(Debug, Clone)]
enum Back {
    Lex,
    Bin {
        rule: Rule,
        side: Side,
        split: usize,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
struct Item {
    cat: Category,
    backs: Vec<Back>,
}

struct Chart {
    n: usize,
    cells: Vec<Vec<Item>>,
}

impl Chart {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.n + 1) + j
    }

    fn cell(&self, i: usize, j: usize) -> &[Item] {
        &self.cells[self.idx(i, j)]
    }

    fn build(cats: &[Category]) -> Chart {
        let n = cats.len();
        let mut chart = Chart {
            n,
            cells: vec![Vec::new(); (n + 1) * (n + 1)],
        };
        for (i, c) in cats.iter().enumerate() {
            let k = chart.idx(i, i + 1);
            chart.cells[k].push(Item {
                cat: c.clone(),
                backs: vec![Back::Lex],
            });
        }
        for width in 2..=n {
            for i in 0..=n - width {
                let j = i + width;
                let mut items: Vec<Item> = Vec::new();
                for split in i + 1..j {
                    let lexical = split - i == 1;
                    for (li, l) in chart.cell(i, split).iter().enumerate() {
                        for (ri, r) in chart.cell(split, j).iter().enumerate() {
                            if let Some((cat, rule, side)) = combine(&l.cat, &r.cat, lexical) {
                                let back = Back::Bin {
                                    rule,
                                    side,
                                    split,
                                    left: li,
                                    right: ri,
                                };
                                match items.iter_mut().find(|it| it.cat == cat) {
                                    Some(it) => it.backs.push(back),
                                    None => items.push(Item { cat, backs: vec![back] }),
                                }
                            }
                        }
                    }
                }
                let k = chart.idx(i, j);
                chart.cells[k] = items;
            }
        }
        chart
    }

    /// Number of derivations of item `it` over `[i, j)`, saturating.
    fn count(&self, i: usize, j: usize, it: usize, memo: &mut Vec<Option<usize>>) -> usize {
        let key = self.idx(i, j) * 64 + it.min(63);
        if let Some(c) = memo[key] {
            return c;
        }
        let mut total = 0usize;
        for b in &self.cell(i, j)[it].backs {
            let c = match b {
                Back::Lex => 1,
                Back::Bin { split, left, right, .. } => self
                    .count(i, *split, *left, memo)
                    .saturating_mul(self.count(*split, j, *right, memo)),
            };
            total = total.saturating_add(c);
        }
        memo[key] = Some(total);
        total
    }

    /// All derivation trees of an item, each as a list of arena nodes
    /// appended bottom-up after the shared leaves.
    fn enumerate(&self, i: usize, j: usize, it: usize, leaves: &[Node]) -> Vec<(Vec<Node>, usize)> {
        let item = &self.cell(i, j)[it];
        let mut out = Vec::new();
        for b in &item.backs {
            match *b {
                Back::Lex => out.push((leaves.to_vec(), i)),
                Back::Bin {
                    rule,
                    side,
                    split,
                    left,
                    right,
                } => {
                    for (lnodes, lroot) in self.enumerate(i, split, left, leaves) {
                        for (rnodes, rroot) in self.enumerate(split, j, right, leaves) {
                            let mut nodes = lnodes.clone();
                            let offset = nodes.len() - leaves.len();
                            let remap = |x: usize| if x < leaves.len() { x } else { x + offset };
                            for n in rnodes.iter().skip(leaves.len()) {
                                let mut n = n.clone();
                                n.children = n.children.map(|(a, b)| (remap(a), remap(b)));
                                nodes.push(n);
                            }
                            let rroot = remap(rroot);
                            let head = match side {
                                Side::Left => nodes[lroot].head,
                                Side::Right => nodes[rroot].head,
                            };
                            nodes.push(Node {
                                span: (i, j),
                                category: item.cat.clone(),
                                rule,
                                children: Some((lroot, rroot)),
                                head_child: Some(side),
                                head,
                            });
                            let root = nodes.len() - 1;
                            out.push((nodes, root));
                        }
                    }
                }
            }
        }
        out
    }
}

fn type_list(types: &[TypeId], table: &TypeTable) -> String {
    table.names(types).join(" ")
}

/// Parses a lexical type sequence into its unique derivation.
///
/// Fails with `AmbiguousParse` when the full chart admits several root
/// categories, more than [`MAX_DERIVATIONS`] trees, or trees whose extracted
/// edge sets differ.
pub fn cky_parse(types: &[TypeId], table: &TypeTable) -> Result<Derivation> {
    if types.is_empty() {
        return Err(Error::NoParse(String::new()));
    }
    let cats: Vec<Category> = types.iter().map(|&t| table.get(t).category.clone()).collect();
    let n = cats.len();
    let chart = Chart::build(&cats);
    let roots = chart.cell(0, n);
    match roots.len() {
        0 => return Err(Error::NoParse(type_list(types, table))),
        1 => {}
        _ => {
            return Err(Error::AmbiguousParse {
                types: type_list(types, table),
                reason: format!(
                    "root categories {}",
                    roots.iter().map(|r| r.cat.to_string()).collect::<Vec<_>>().join(", ")
                ),
            })
        }
    }
    let mut memo = vec![None; chart.cells.len() * 64];
    let count = chart.count(0, n, 0, &mut memo);
    if count > MAX_DERIVATIONS {
        return Err(Error::AmbiguousParse {
            types: type_list(types, table),
            reason: format!("more than {MAX_DERIVATIONS} derivations"),
        });
    }
    let leaves: Vec<Node> = cats
        .iter()
        .enumerate()
        .map(|(i, c)| Node {
            span: (i, i + 1),
            category: c.clone(),
            rule: Rule::Lex,
            children: None,
            head_child: None,
            head: i,
        })
        .collect();
    let mut trees = chart
        .enumerate(0, n, 0, &leaves)
        .into_iter()
        .map(|(nodes, root)| Derivation {
            nodes,
            root,
            leaf_types: types.to_vec(),
        });
    let first = trees.next().expect("chart root has a derivation");
    if count > 1 {
        let identity: Vec<usize> = (0..n).collect();
        let placeholder = vec![String::from("_"); n];
        let key = |d: &Derivation| -> std::result::Result<BTreeSet<Edge>, String> {
            extract_edges(d, table, &placeholder, &identity)
                .map(|e| e.edges)
                .map_err(|e| e.to_string())
        };
        let reference = key(&first);
        for other in trees {
            if key(&other) != reference {
                return Err(Error::AmbiguousParse {
                    types: type_list(types, table),
                    reason: format!("{count} derivations with different edge sets"),
                });
            }
        }
    }
    Ok(first)
}
