use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EffAtom {
    Divergence,
    Read,
    Write,
    Alloc,
    Io,
}

impl EffAtom {
    pub const ALL: [EffAtom; 5] = [
        EffAtom::Divergence,
        EffAtom::Read,
        EffAtom::Write,
        EffAtom::Alloc,
        EffAtom::Io,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EffAtom::Divergence => "divergence",
            EffAtom::Read => "read",
            EffAtom::Write => "write",
            EffAtom::Alloc => "alloc",
            EffAtom::Io => "io",
        }
    }

    pub fn from_name(s: &str) -> Option<EffAtom> {
        match s {
            "divergence" | "div" => Some(EffAtom::Divergence),
            "read" => Some(EffAtom::Read),
            "write" => Some(EffAtom::Write),
            "alloc" => Some(EffAtom::Alloc),
            "io" => Some(EffAtom::Io),
            _ => None,
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

/// Ordered effect list. Equality is list equality; inclusion ignores order
/// and multiplicity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Effect {
    pub items: Vec<EffAtom>,
}

impl Effect {
    pub fn empty() -> Effect {
        Effect { items: Vec::new() }
    }

    pub fn of(items: &[EffAtom]) -> Effect {
        Effect { items: items.to_vec() }
    }

    pub fn single(a: EffAtom) -> Effect {
        Effect { items: vec![a] }
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn concat(&self, other: &Effect) -> Effect {
        let mut items = Vec::with_capacity(self.items.len() + other.items.len());
        items.extend_from_slice(&self.items);
        items.extend_from_slice(&other.items);
        Effect { items }
    }

    pub fn push(&mut self, a: EffAtom) {
        self.items.push(a);
    }

    pub fn append(&mut self, other: &Effect) {
        self.items.extend_from_slice(&other.items);
    }

    pub fn contains(&self, a: EffAtom) -> bool {
        self.items.contains(&a)
    }

    pub fn kinds(&self) -> u8 {
        self.items.iter().fold(0, |m, a| m | a.bit())
    }

    pub fn subset_of(&self, other: &Effect) -> bool {
        self.kinds() & !other.kinds() == 0
    }

    /// Keeps the first occurrence of each atom kind.
    pub fn dedup_kinds(&mut self) {
        let mut seen = 0u8;
        self.items.retain(|a| {
            let fresh = seen & a.bit() == 0;
            seen |= a.bit();
            fresh
        });
    }
}

pub fn effect_concat(a: &Effect, b: &Effect) -> Effect {
    a.concat(b)
}

pub fn effect_subset(a: &Effect, b: &Effect) -> bool {
    a.subset_of(b)
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<")?;
        for (i, a) in self.items.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(a.name())?;
        }
        f.write_str(">")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;
    use EffAtom::*;

    fn atom() -> impl Strategy<Value = EffAtom> {
        prop::sample::select(EffAtom::ALL.to_vec())
    }

    fn eff() -> impl Strategy<Value = Effect> {
        prop::collection::vec(atom(), 0..6).prop_map(|items| Effect { items })
    }

    fn set(e: &Effect) -> BTreeSet<EffAtom> {
        e.items.iter().copied().collect()
    }

    #[test]
    fn concat_examples() {
        assert_eq!(effect_concat(&Effect::of(&[Alloc]), &Effect::of(&[Read])).items, vec![Alloc, Read]);
        assert!(effect_concat(&Effect::empty(), &Effect::empty()).is_empty());
        let mut oracle = vec![Read];
        oracle.extend([Write, Read]);
        assert_eq!(effect_concat(&Effect::of(&[Read]), &Effect::of(&[Write, Read])).items, oracle);
    }

    #[test]
    fn subset_examples() {
        assert!(effect_subset(&Effect::empty(), &Effect::of(&[Read])));
        assert!(effect_subset(&Effect::of(&[Read]), &Effect::of(&[Alloc, Read])));
        assert!(!effect_subset(&Effect::of(&[Divergence]), &Effect::of(&[Read, Write])));
    }

    #[test]
    fn display_and_names() {
        assert_eq!(Effect::of(&[Alloc, Read]).to_string(), "<alloc,read>");
        for a in EffAtom::ALL {
            assert_eq!(EffAtom::from_name(a.name()), Some(a));
        }
    }

    proptest! {
        #[test]
        fn concat_associative_with_identity(a in eff(), b in eff(), c in eff()) {
            prop_assert_eq!(a.concat(&b).concat(&c), a.concat(&b.concat(&c)));
            prop_assert_eq!(a.concat(&Effect::empty()), a.clone());
            prop_assert_eq!(Effect::empty().concat(&a), a);
        }

        #[test]
        fn subset_matches_set_inclusion(a in eff(), b in eff()) {
            prop_assert_eq!(a.subset_of(&b), set(&a).is_subset(&set(&b)));
        }

        #[test]
        fn subset_reflexive_transitive(a in eff(), b in eff(), c in eff()) {
            prop_assert!(a.subset_of(&a));
            if a.subset_of(&b) && b.subset_of(&c) {
                prop_assert!(a.subset_of(&c));
            }
        }

        #[test]
        fn concat_monotone(a in eff(), b in eff(), c in eff()) {
            if a.subset_of(&b) {
                prop_assert!(a.concat(&c).subset_of(&b.concat(&c)));
                prop_assert!(c.concat(&a).subset_of(&c.concat(&b)));
            }
        }

        #[test]
        fn dedup_preserves_kinds(mut a in eff()) {
            let before = set(&a);
            a.dedup_kinds();
            prop_assert_eq!(set(&a), before);
            prop_assert!(a.items.len() <= 5);
        }
    }
}
