//! Models shipped with the crate, used by the acceptance checks and
//! available to the command line by name.

use crate::error::{Error, Result};
use crate::model_file::{parse_model, ModelSpec};

const SOURCES: [(&str, &str); 8] = [
    ("classical-1d", include_str!("../models/classical-1d.model")),
    ("diagonal-2d", include_str!("../models/diagonal-2d.model")),
    ("rotation-2d", include_str!("../models/rotation-2d.model")),
    ("correlated-2d", include_str!("../models/correlated-2d.model")),
    ("jordan-2d", include_str!("../models/jordan-2d.model")),
    ("building-block-3d", include_str!("../models/building-block-3d.model")),
    ("normal-6d", include_str!("../models/normal-6d.model")),
    ("diagonal-6d", include_str!("../models/diagonal-6d.model")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    SOURCES.iter().map(|(name, _)| *name)
}

pub fn source(name: &str) -> Option<&'static str> {
    SOURCES.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn load(name: &str) -> Result<ModelSpec> {
    let text = source(name).ok_or_else(|| Error::InvalidParameter(format!("no shipped model named `{name}`")))?;
    parse_model(text)
}

/// Every shipped model, in catalog order.
pub fn shipped_models() -> Vec<ModelSpec> {
    names().map(|n| load(n).expect("shipped models are valid")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_model_parses_and_is_named_consistently() {
        for name in names() {
            let spec = load(name).unwrap();
            assert_eq!(spec.name.as_deref(), Some(name));
            assert!(spec.model.dim() <= 6);
        }
        assert!(load("nope").is_err());
    }
}
