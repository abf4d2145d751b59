use std::fmt;
use std::sync::Arc;

/// Where an expression executes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Convention {
    /// No implementation chosen yet; never executable.
    Logical,
    /// The built-in iterator engine.
    Enumerable,
    /// An adapter backend, e.g. `CSV` or `REMOTE:sales`.
    Adapter(Arc<str>),
}

impl Convention {
    pub fn adapter(name: &str) -> Convention {
        Convention::Adapter(Arc::from(name))
    }

    pub fn is_logical(&self) -> bool {
        matches!(self, Convention::Logical)
    }

    pub fn is_enumerable(&self) -> bool {
        matches!(self, Convention::Enumerable)
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Convention::Logical => f.write_str("LOGICAL"),
            Convention::Enumerable => f.write_str("ENUMERABLE"),
            Convention::Adapter(name) => f.write_str(name),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Asc,
    Desc,
}

/// One sort key. NULLs sort last ascending and first descending.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldCollation {
    pub field: usize,
    pub direction: Direction,
}

impl FieldCollation {
    pub fn asc(field: usize) -> Self {
        FieldCollation {
            field,
            direction: Direction::Asc,
        }
    }

    pub fn desc(field: usize) -> Self {
        FieldCollation {
            field,
            direction: Direction::Desc,
        }
    }
}

impl fmt::Display for FieldCollation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = match self.direction {
            Direction::Asc => "ASC",
            Direction::Desc => "DESC",
        };
        write!(f, "{} {dir}", self.field)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Collation(pub Vec<FieldCollation>);

impl Collation {
    pub fn empty() -> Self {
        Collation(Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn keys(&self) -> &[FieldCollation] {
        &self.0
    }

    /// True when `required` is a prefix of this collation.
    pub fn satisfies(&self, required: &Collation) -> bool {
        required.0.len() <= self.0.len() && self.0.iter().zip(required.0.iter()).all(|(a, b)| a == b)
    }

    /// Maps the collation through a column selection, keeping the longest
    /// prefix whose fields survive.
    pub fn project(&self, columns: &[usize]) -> Collation {
        let mut out = Vec::new();
        for key in &self.0 {
            match columns.iter().position(|c| *c == key.field) {
                Some(pos) => out.push(FieldCollation {
                    field: pos,
                    direction: key.direction,
                }),
                None => break,
            }
        }
        Collation(out)
    }
}

impl fmt::Display for Collation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}")?;
        }
        f.write_str("]")
    }
}

/// Physical properties of an expression. Changing them never changes the
/// multiset of rows the expression produces.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TraitSet {
    pub convention: Convention,
    pub collation: Collation,
}

impl TraitSet {
    pub fn new(convention: Convention, collation: Collation) -> Self {
        TraitSet { convention, collation }
    }

    pub fn logical() -> Self {
        TraitSet::new(Convention::Logical, Collation::empty())
    }

    pub fn enumerable() -> Self {
        TraitSet::new(Convention::Enumerable, Collation::empty())
    }

    pub fn of(convention: Convention) -> Self {
        TraitSet::new(convention, Collation::empty())
    }

    pub fn with_convention(&self, convention: Convention) -> Self {
        TraitSet::new(convention, self.collation.clone())
    }

    pub fn with_collation(&self, collation: Collation) -> Self {
        TraitSet::new(self.convention.clone(), collation)
    }

    pub fn is_executable(&self) -> bool {
        !self.convention.is_logical()
    }

    pub fn satisfies(&self, required: &TraitSet) -> bool {
        self.convention == required.convention && self.collation.satisfies(&required.collation)
    }
}

impl fmt::Display for TraitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.convention, self.collation)
    }
}
