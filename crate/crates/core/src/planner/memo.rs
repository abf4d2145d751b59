//! The memo: equivalence groups of expressions deduplicated by digest.
//!
//! Stored expressions have [`Operator::GroupRef`] leaves in place of their
//! inputs. Groups are merged with a union-find whose canonical id is the
//! smallest; merging re-digests every expression that referenced the
//! absorbed group, and any collision this produces merges further.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write};

use super::metadata::GroupSource;
use crate::rel::{self, Collation, GroupId, Operator, Rel, RelNode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExprId(pub usize);

impl fmt::Display for ExprId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug)]
pub struct MemoExpr {
    pub id: ExprId,
    group: GroupId,
    pub rel: Rel,
    pub digest: String,
    pub live: bool,
    /// Index of the rule whose firing created this expression.
    pub origin: Option<usize>,
}

#[derive(Default)]
pub struct Memo {
    exprs: Vec<MemoExpr>,
    members: Vec<Vec<ExprId>>,
    parents: Vec<Vec<ExprId>>,
    union: Vec<usize>,
    index: HashMap<String, ExprId>,
    trace: Vec<String>,
    changed: BTreeSet<GroupId>,
    merges: usize,
}

impl Memo {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn find(&self, group: GroupId) -> GroupId {
        let mut g = group.0;
        while self.union[g] != g {
            g = self.union[g];
        }
        GroupId(g)
    }

    fn find_compress(&mut self, group: GroupId) -> GroupId {
        let root = self.find(group);
        let mut g = group.0;
        while self.union[g] != root.0 {
            let next = self.union[g];
            self.union[g] = root.0;
            g = next;
        }
        root
    }

    pub fn expr(&self, id: ExprId) -> &MemoExpr {
        &self.exprs[id.0]
    }

    pub fn expr_count(&self) -> usize {
        self.exprs.len()
    }

    pub fn merge_count(&self) -> usize {
        self.merges
    }

    pub fn group_of(&self, id: ExprId) -> GroupId {
        self.find(self.exprs[id.0].group)
    }

    /// Canonical groups, ascending.
    pub fn groups(&self) -> Vec<GroupId> {
        (0..self.union.len())
            .filter(|g| self.union[*g] == *g)
            .map(GroupId)
            .collect()
    }

    pub fn group_count(&self) -> usize {
        self.groups().len()
    }

    /// Live members of a group in creation order.
    pub fn members_of(&self, group: GroupId) -> Vec<ExprId> {
        let g = self.find(group);
        let mut ids: Vec<ExprId> = self.members[g.0]
            .iter()
            .copied()
            .filter(|e| self.exprs[e.0].live)
            .collect();
        ids.sort();
        ids
    }

    /// Live expressions in creation order.
    pub fn live_exprs(&self) -> Vec<ExprId> {
        self.exprs.iter().filter(|e| e.live).map(|e| e.id).collect()
    }

    pub fn lookup(&self, digest: &str) -> Option<ExprId> {
        self.index.get(digest).copied()
    }

    pub fn take_trace(&mut self) -> Vec<String> {
        std::mem::take(&mut self.trace)
    }

    /// Groups that gained members or were merged since the last call.
    pub fn take_changed(&mut self) -> BTreeSet<GroupId> {
        std::mem::take(&mut self.changed)
    }

    /// `groups` plus every group with a member that (transitively)
    /// references one of them.
    pub fn with_ancestors(&self, groups: &BTreeSet<GroupId>) -> BTreeSet<GroupId> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<GroupId> = groups.iter().copied().collect();
        while let Some(g) = stack.pop() {
            if !out.insert(g) {
                continue;
            }
            let c = self.find(g);
            if c != g {
                stack.push(c);
            }
            for p in &self.parents[c.0] {
                if self.exprs[p.0].live {
                    stack.push(self.group_of(*p));
                }
            }
        }
        out
    }

    fn new_group(&mut self) -> GroupId {
        let id = self.union.len();
        self.union.push(id);
        self.members.push(Vec::new());
        self.parents.push(Vec::new());
        GroupId(id)
    }

    /// Group reference for `input`, carrying the order the parent needs
    /// from it: only order a Sort defines, never incidental scan order.
    fn input_ref(&mut self, parent: &RelNode, input: &Rel) -> Rel {
        let collation = if rel::is_limit(parent) {
            parent.traits().collation.clone()
        } else if rel::preserves_input_order(parent) {
            rel::required_order(input)
        } else {
            Collation::empty()
        };
        let g = match input.op() {
            Operator::GroupRef { group, .. } => self.find(*group),
            _ => self.insert(input, None).0,
        };
        rel::group_ref(g, input.row_type().clone(), collation)
    }

    /// Registers a tree bottom-up. Known expressions return their existing
    /// group and id.
    pub fn register(&mut self, rel: &Rel) -> (GroupId, ExprId) {
        self.insert(rel, None)
    }

    /// Registers `rel` as equivalent to `target`, merging groups when the
    /// expression already lives elsewhere.
    pub fn register_into(&mut self, rel: &Rel, target: GroupId) -> (GroupId, ExprId) {
        self.insert(rel, Some(target))
    }

    fn representative(&self, g: GroupId) -> ExprId {
        self.members_of(g)[0]
    }

    fn insert(&mut self, rel: &Rel, target: Option<GroupId>) -> (GroupId, ExprId) {
        if let Operator::GroupRef { group, .. } = rel.op() {
            let mut g = self.find(*group);
            if let Some(t) = target {
                g = self.merge(t, g);
            }
            return (g, self.representative(g));
        }
        let inputs: Vec<Rel> = rel.inputs().iter().map(|i| self.input_ref(rel, i)).collect();
        let node = if inputs.is_empty() {
            rel.clone()
        } else {
            rel.with_inputs(inputs)
        };
        let digest = node.digest().to_string();
        if let Some(&existing) = self.index.get(&digest) {
            let mut g = self.group_of(existing);
            if let Some(t) = target {
                g = self.merge(t, g);
            }
            return (self.find(g), existing);
        }
        let g = match target {
            Some(t) => self.find_compress(t),
            None => self.new_group(),
        };
        let id = ExprId(self.exprs.len());
        for input in node.inputs() {
            let ig = self.find(input.group_ref().expect("memo inputs are group references"));
            self.parents[ig.0].push(id);
        }
        self.exprs.push(MemoExpr {
            id,
            group: g,
            rel: node,
            digest: digest.clone(),
            live: true,
            origin: None,
        });
        self.members[g.0].push(id);
        self.index.insert(digest, id);
        self.changed.insert(g);
        (g, id)
    }

    pub fn set_origin(&mut self, id: ExprId, rule: usize) {
        self.exprs[id.0].origin = Some(rule);
    }

    /// Merges two groups and everything the merge makes equal. Returns the
    /// canonical id of the result.
    pub fn merge(&mut self, a: GroupId, b: GroupId) -> GroupId {
        let mut work = vec![(a, b)];
        while let Some((x, y)) = work.pop() {
            let (x, y) = (self.find_compress(x), self.find_compress(y));
            if x == y {
                continue;
            }
            let (keep, gone) = if x < y { (x, y) } else { (y, x) };
            self.union[gone.0] = keep.0;
            self.merges += 1;
            self.trace.push(format!("MERGE {keep} <- {gone}"));
            self.changed.insert(keep);
            self.changed.insert(gone);
            let moved = std::mem::take(&mut self.members[gone.0]);
            self.members[keep.0].extend(moved);
            let referencing = std::mem::take(&mut self.parents[gone.0]);
            for pid in &referencing {
                if !self.parents[keep.0].contains(pid) {
                    self.parents[keep.0].push(*pid);
                }
            }
            for pid in referencing {
                self.redigest(pid, &mut work);
            }
        }
        self.find(a)
    }

    fn redigest(&mut self, id: ExprId, work: &mut Vec<(GroupId, GroupId)>) {
        if !self.exprs[id.0].live {
            return;
        }
        let old = self.exprs[id.0].rel.clone();
        let inputs: Vec<Rel> = old
            .inputs()
            .iter()
            .map(|i| {
                let Operator::GroupRef { group, row_type } = i.op() else {
                    unreachable!("memo inputs are group references")
                };
                rel::group_ref(self.find(*group), row_type.clone(), i.traits().collation.clone())
            })
            .collect();
        let node = old.with_inputs(inputs);
        let digest = node.digest().to_string();
        if digest == self.exprs[id.0].digest {
            return;
        }
        let old_digest = std::mem::replace(&mut self.exprs[id.0].digest, digest.clone());
        if self.index.get(&old_digest) == Some(&id) {
            self.index.remove(&old_digest);
        }
        self.exprs[id.0].rel = node;
        match self.index.get(&digest).copied() {
            Some(other) if other != id && self.exprs[other.0].live => {
                self.exprs[id.0].live = false;
                let g = self.group_of(id);
                self.members[g.0].retain(|m| *m != id);
                let og = self.group_of(other);
                if g != og {
                    work.push((g, og));
                }
                self.changed.insert(g);
            }
            _ => {
                self.index.insert(digest, id);
            }
        }
    }

    /// Checks the structural invariants, returning the first violation.
    pub fn check(&self) -> Result<(), String> {
        let mut seen: HashMap<&str, ExprId> = HashMap::new();
        for e in self.exprs.iter().filter(|e| e.live) {
            if let Some(other) = seen.insert(&e.digest, e.id) {
                return Err(format!("digest {} shared by {} and {}", e.digest, other, e.id));
            }
            if self.index.get(&e.digest) != Some(&e.id) {
                return Err(format!("expression {} is not indexed under its digest", e.id));
            }
            if e.rel.digest() != e.digest {
                return Err(format!("expression {} has a stale digest", e.id));
            }
            for input in e.rel.inputs() {
                let g = input
                    .group_ref()
                    .ok_or_else(|| format!("expression {} has a non-group input", e.id))?;
                if self.find(g) != g {
                    return Err(format!("expression {} references absorbed group {g}", e.id));
                }
            }
            if !self.members[self.group_of(e.id).0].contains(&e.id) {
                return Err(format!("expression {} missing from its group", e.id));
            }
        }
        for g in 0..self.union.len() {
            let root = self.find(GroupId(g));
            if self.find(root) != root {
                return Err(format!("union-find root of G{g} is unstable"));
            }
        }
        Ok(())
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        for g in self.groups() {
            let _ = writeln!(out, "{g}");
            for e in self.members_of(g) {
                let _ = writeln!(out, "  {}: {}", e, self.exprs[e.0].digest);
            }
        }
        out
    }
}

impl GroupSource for Memo {
    fn canonical(&self, group: GroupId) -> GroupId {
        self.find(group)
    }

    fn members(&self, group: GroupId) -> Vec<Rel> {
        self.members_of(group)
            .into_iter()
            .map(|e| self.exprs[e.0].rel.clone())
            .collect()
    }
}
