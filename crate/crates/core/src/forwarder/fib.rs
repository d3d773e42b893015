use std::collections::BTreeMap;
use std::sync::Arc;

use crate::name::Name;
use crate::node::FaceId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FibEntry {
    pub prefix: Name,
    pub next_face: FaceId,
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    face: Option<FaceId>,
    children: BTreeMap<Arc<str>, TrieNode>,
}

/// Forwarding Information Base as a name-component trie. One face per prefix;
/// inserting an existing prefix replaces its face.
#[derive(Debug, Clone, Default)]
pub struct Fib {
    root: TrieNode,
    len: usize,
}

impl Fib {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Returns the face previously bound to `prefix`, if any.
    pub fn insert(&mut self, prefix: &Name, face: FaceId) -> Option<FaceId> {
        let mut node = &mut self.root;
        for c in prefix.components() {
            node = node.children.entry(c.clone()).or_default();
        }
        let old = node.face.replace(face);
        if old.is_none() {
            self.len += 1;
        }
        old
    }

    pub fn remove(&mut self, prefix: &Name) -> Option<FaceId> {
        fn go(node: &mut TrieNode, parts: &[Arc<str>]) -> Option<FaceId> {
            match parts.split_first() {
                None => node.face.take(),
                Some((head, rest)) => {
                    let child = node.children.get_mut(head)?;
                    let out = go(child, rest);
                    if child.face.is_none() && child.children.is_empty() {
                        node.children.remove(head);
                    }
                    out
                }
            }
        }
        let out = go(&mut self.root, prefix.components());
        if out.is_some() {
            self.len -= 1;
        }
        out
    }

    pub fn get(&self, prefix: &Name) -> Option<FaceId> {
        let mut node = &self.root;
        for c in prefix.components() {
            node = node.children.get(c)?;
        }
        node.face
    }

    /// Face of the longest entry whose prefix is a prefix of `name`.
    pub fn longest_prefix_match(&self, name: &Name) -> Option<FaceId> {
        self.longest_prefix_match_entry(name).map(|(_, f)| f)
    }

    /// Like [`Fib::longest_prefix_match`], also returning the matched prefix length.
    pub fn longest_prefix_match_entry(&self, name: &Name) -> Option<(usize, FaceId)> {
        let mut node = &self.root;
        let mut best = None;
        for (depth, c) in name.components().iter().enumerate() {
            match node.children.get(c) {
                Some(child) => {
                    node = child;
                    if let Some(f) = node.face {
                        best = Some((depth + 1, f));
                    }
                }
                None => break,
            }
        }
        best
    }

    pub fn entries(&self) -> Vec<FibEntry> {
        fn walk(node: &TrieNode, path: &mut Vec<Arc<str>>, out: &mut Vec<FibEntry>) {
            if let Some(f) = node.face {
                out.push(FibEntry {
                    prefix: Name::new(path.iter().map(|c| c.as_ref())).expect("non-empty path"),
                    next_face: f,
                });
            }
            for (c, child) in &node.children {
                path.push(c.clone());
                walk(child, path, out);
                path.pop();
            }
        }
        let mut out = Vec::with_capacity(self.len);
        walk(&self.root, &mut Vec::new(), &mut out);
        out
    }

    pub fn faces(&self) -> impl Iterator<Item = FaceId> + '_ {
        self.entries().into_iter().map(|e| e.next_face)
    }
}

/// Longest-prefix match over a plain entry list.
pub fn longest_prefix_match(fib: &[FibEntry], name: &Name) -> Option<FaceId> {
    let mut t = Fib::new();
    for e in fib {
        t.insert(&e.prefix, e.next_face);
    }
    t.longest_prefix_match(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::name;
    use crate::node::NodeId;
    use proptest::prelude::*;

    const F1: FaceId = NodeId::Agg(1);
    const F2: FaceId = NodeId::Agg(2);

    fn sample() -> Vec<FibEntry> {
        vec![
            FibEntry { prefix: name!("/net/oAP"), next_face: F1 },
            FibEntry { prefix: name!("/net"), next_face: F2 },
        ]
    }

    #[test]
    fn picks_longest_matching_prefix() {
        assert_eq!(longest_prefix_match(&sample(), &name!("/net/oAP/ale1/s0")), Some(F1));
    }

    #[test]
    fn falls_back_to_shorter_prefix() {
        assert_eq!(longest_prefix_match(&sample(), &name!("/net/x")), Some(F2));
    }

    #[test]
    fn no_match() {
        let fib = vec![FibEntry { prefix: name!("/net/oAP"), next_face: F1 }];
        assert_eq!(longest_prefix_match(&fib, &name!("/other/x")), None);
    }

    #[test]
    fn insert_replace_remove() {
        let mut fib = Fib::new();
        assert_eq!(fib.insert(&name!("/a/b"), F1), None);
        assert_eq!(fib.insert(&name!("/a/b"), F2), Some(F1));
        assert_eq!(fib.len(), 1);
        assert_eq!(fib.longest_prefix_match(&name!("/a/b/c")), Some(F2));
        assert_eq!(fib.longest_prefix_match(&name!("/a")), None);
        assert_eq!(fib.remove(&name!("/a/b")), Some(F2));
        assert_eq!(fib.remove(&name!("/a/b")), None);
        assert!(fib.is_empty());
        assert!(fib.entries().is_empty());
    }

    fn brute_force(entries: &[FibEntry], name: &Name) -> Option<FaceId> {
        entries
            .iter()
            .filter(|e| e.prefix.is_prefix_of(name))
            .max_by_key(|e| e.prefix.len())
            .map(|e| e.next_face)
    }

    proptest! {
        #[test]
        fn trie_agrees_with_scan(
            raw in prop::collection::btree_map(prop::collection::vec("[ab]", 1..4), 0u16..8, 0..24),
            probe in prop::collection::vec("[ab]", 1..5),
        ) {
            let entries: Vec<FibEntry> = raw
                .into_iter()
                .map(|(p, f)| FibEntry { prefix: Name::new(p).unwrap(), next_face: NodeId::Agg(f) })
                .collect();
            let name = Name::new(probe).unwrap();
            prop_assert_eq!(longest_prefix_match(&entries, &name), brute_force(&entries, &name));
        }
    }
}
