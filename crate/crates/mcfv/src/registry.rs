//! Minimal name-keyed strategy registry.
//!
//! Each algorithm family (partitioners, preconditioners, read strategies,
//! activations) declares a trait and registers its variants here under a
//! stable name. CLI flags and config files select variants by that name.

use crate::{Error, Result};

/// A fixed table of named constructors for one strategy family.
pub struct Registry<T: ?Sized + 'static> {
    kind: &'static str,
    entries: &'static [(&'static str, fn() -> Box<T>)],
}

impl<T: ?Sized + 'static> Registry<T> {
    pub const fn new(
        kind: &'static str,
        entries: &'static [(&'static str, fn() -> Box<T>)],
    ) -> Self {
        Registry { kind, entries }
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.iter().map(|(n, _)| *n)
    }

    pub fn create(&self, name: &str) -> Result<Box<T>> {
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, f)| f())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                known: self.names().collect::<Vec<_>>().join(", "),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter {
        fn greet(&self) -> &'static str;
    }
    struct Hi;
    impl Greeter for Hi {
        fn greet(&self) -> &'static str {
            "hi"
        }
    }

    static GREETERS: Registry<dyn Greeter> =
        Registry::new("greeter", &[("hi", || Box::new(Hi))]);

    #[test]
    fn lookup_by_name() {
        assert_eq!(GREETERS.create("hi").unwrap().greet(), "hi");
        assert!(GREETERS.create("nope").is_err());
    }
}
