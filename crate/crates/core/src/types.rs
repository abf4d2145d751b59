//! Scalar types and row types.

use std::fmt;

/// The type of a single scalar slot.
///
/// `Any` is the type of values pulled out of schemaless documents; it stays
/// `Any` until an explicit `CAST` pins it down.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ScalarType {
    Boolean,
    Int64,
    Float64,
    String,
    Array(Box<ScalarType>),
    Map(Box<ScalarType>),
    Any,
}

impl ScalarType {
    pub fn is_numeric(&self) -> bool {
        matches!(self, ScalarType::Int64 | ScalarType::Float64)
    }

    pub fn is_any(&self) -> bool {
        matches!(self, ScalarType::Any)
    }

    /// Scalar types that may appear as the target of a `CAST`.
    pub fn is_cast_target(&self) -> bool {
        matches!(
            self,
            ScalarType::Boolean | ScalarType::Int64 | ScalarType::Float64 | ScalarType::String
        )
    }

    /// Parses a SQL type name as accepted by `CAST(... AS <type>)`.
    pub fn from_sql_name(name: &str) -> Option<ScalarType> {
        match name.to_ascii_uppercase().as_str() {
            "BOOLEAN" | "BOOL" => Some(ScalarType::Boolean),
            "BIGINT" | "INT" | "INTEGER" => Some(ScalarType::Int64),
            "DOUBLE" | "FLOAT" | "REAL" => Some(ScalarType::Float64),
            "VARCHAR" | "STRING" | "CHAR" => Some(ScalarType::String),
            _ => None,
        }
    }
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarType::Boolean => f.write_str("BOOLEAN"),
            ScalarType::Int64 => f.write_str("BIGINT"),
            ScalarType::Float64 => f.write_str("DOUBLE"),
            ScalarType::String => f.write_str("VARCHAR"),
            ScalarType::Array(elem) => write!(f, "ARRAY<{elem}>"),
            ScalarType::Map(value) => write!(f, "MAP<VARCHAR, {value}>"),
            ScalarType::Any => f.write_str("ANY"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Field {
    pub name: String,
    pub ty: ScalarType,
    pub nullable: bool,
}

impl Field {
    pub fn new(name: impl Into<String>, ty: ScalarType, nullable: bool) -> Self {
        Field {
            name: name.into(),
            ty,
            nullable,
        }
    }
}

/// Ordered list of fields. Field names are kept unique (case-insensitively)
/// by suffixing duplicates with a counter, so `id, id` becomes `id, id0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct RowType {
    fields: Vec<Field>,
}

impl RowType {
    pub fn new(fields: Vec<Field>) -> Self {
        let mut out: Vec<Field> = Vec::with_capacity(fields.len());
        for mut field in fields {
            if out.iter().any(|f| f.name.eq_ignore_ascii_case(&field.name)) {
                let base = field.name.clone();
                let mut i = 0;
                loop {
                    let candidate = format!("{base}{i}");
                    if !out.iter().any(|f| f.name.eq_ignore_ascii_case(&candidate)) {
                        field.name = candidate;
                        break;
                    }
                    i += 1;
                }
            }
            out.push(field);
        }
        RowType { fields: out }
    }

    pub fn empty() -> Self {
        RowType { fields: Vec::new() }
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn field(&self, index: usize) -> Option<&Field> {
        self.fields.get(index)
    }

    pub fn names(&self) -> Vec<&str> {
        self.fields.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.fields
            .iter()
            .position(|f| f.name == name)
            .or_else(|| self.fields.iter().position(|f| f.name.eq_ignore_ascii_case(name)))
    }

    /// Concatenation used by joins.
    pub fn concat(&self, other: &RowType) -> RowType {
        let mut fields = self.fields.clone();
        fields.extend(other.fields.iter().cloned());
        RowType::new(fields)
    }

    /// True when both row types have the same arity and field types,
    /// regardless of names or nullability.
    pub fn same_shape(&self, other: &RowType) -> bool {
        self.len() == other.len() && self.fields.iter().zip(other.fields.iter()).all(|(a, b)| a.ty == b.ty)
    }

    pub fn with_all_nullable(&self) -> RowType {
        RowType {
            fields: self
                .fields
                .iter()
                .map(|f| Field::new(f.name.clone(), f.ty.clone(), true))
                .collect(),
        }
    }
}

impl fmt::Display for RowType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, field) in self.fields.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{} {}", field.name, field.ty)?;
            if !field.nullable {
                f.write_str(" NOT NULL")?;
            }
        }
        f.write_str(")")
    }
}
