use std::collections::HashMap;
use std::sync::Arc;

use crate::error::Error;

/// Index of a symbol inside its [`Context`]. Coordinates come first,
/// parameters after, both in declaration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolId(pub(crate) u32);

impl SymbolId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Symbol table of a chart: ordered coordinate names plus ordered parameter
/// names, disjoint, each matching `[a-zA-Z_][a-zA-Z0-9_]*`.
#[derive(Debug)]
pub struct Context {
    coordinates: Vec<String>,
    parameters: Vec<String>,
    index: HashMap<String, SymbolId>,
}

fn valid_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Context {
    pub fn new<S: AsRef<str>>(coordinates: &[S], parameters: &[S]) -> Result<Arc<Context>, Error> {
        let mut index = HashMap::new();
        let mut store = |names: &[S], base: usize, out: &mut Vec<String>| -> Result<(), Error> {
            for (k, name) in names.iter().enumerate() {
                let name = name.as_ref().to_string();
                if !valid_identifier(&name) {
                    return Err(Error::InvalidIdentifier { name });
                }
                if index
                    .insert(name.clone(), SymbolId((base + k) as u32))
                    .is_some()
                {
                    return Err(Error::DuplicateSymbol { name });
                }
                out.push(name);
            }
            Ok(())
        };
        let mut coords = Vec::new();
        let mut params = Vec::new();
        store(coordinates, 0, &mut coords)?;
        store(parameters, coordinates.len(), &mut params)?;
        Ok(Arc::new(Context {
            coordinates: coords,
            parameters: params,
            index,
        }))
    }

    pub fn n_coordinates(&self) -> usize {
        self.coordinates.len()
    }

    pub fn n_symbols(&self) -> usize {
        self.coordinates.len() + self.parameters.len()
    }

    pub fn symbol(&self, name: &str) -> Option<SymbolId> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<SymbolId, Error> {
        self.symbol(name).ok_or_else(|| Error::UnknownSymbol {
            name: name.to_string(),
            pos: 0,
        })
    }

    /// The k-th coordinate symbol.
    pub fn coordinate(&self, k: usize) -> SymbolId {
        assert!(k < self.coordinates.len());
        SymbolId(k as u32)
    }

    pub fn is_coordinate(&self, id: SymbolId) -> bool {
        (id.0 as usize) < self.coordinates.len()
    }

    pub fn name(&self, id: SymbolId) -> &str {
        let i = id.0 as usize;
        if i < self.coordinates.len() {
            &self.coordinates[i]
        } else {
            &self.parameters[i - self.coordinates.len()]
        }
    }

    pub fn symbols(&self) -> impl Iterator<Item = SymbolId> {
        (0..self.n_symbols() as u32).map(SymbolId)
    }

    pub fn coordinate_names(&self) -> &[String] {
        &self.coordinates
    }

    pub fn parameter_names(&self) -> &[String] {
        &self.parameters
    }
}

impl PartialEq for Context {
    fn eq(&self, other: &Self) -> bool {
        self.coordinates == other.coordinates && self.parameters == other.parameters
    }
}

impl Eq for Context {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn declaration_order_and_lookup() {
        let ctx = Context::new(&["x1", "x2"], &["lambda"]).unwrap();
        assert_eq!(ctx.n_coordinates(), 2);
        assert_eq!(ctx.n_symbols(), 3);
        assert_eq!(ctx.symbol("lambda"), Some(SymbolId(2)));
        assert!(ctx.is_coordinate(SymbolId(1)));
        assert!(!ctx.is_coordinate(SymbolId(2)));
        assert_eq!(ctx.name(SymbolId(2)), "lambda");
    }

    #[test]
    fn rejects_bad_names() {
        assert!(Context::new(&["1x"], &[]).is_err());
        assert!(Context::new(&["x", "x"], &[]).is_err());
        assert!(Context::new(&["x"], &["x"]).is_err());
        assert!(Context::new(&[""], &[]).is_err());
    }
}
