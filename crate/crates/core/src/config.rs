//! Serializable descriptions of fluxes, for config files.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flux::Flux;

/// `{kind: "power_law", p, M}` or `{kind: "table", u, df, M}`.
///
/// A table gives `f'` at ascending nodes `u`, interpolated linearly; `f` is
/// its exact primitive with `f(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FluxSpec {
    PowerLaw {
        p: f64,
        #[serde(rename = "M")]
        bound: f64,
    },
    Table {
        u: Vec<f64>,
        df: Vec<f64>,
        #[serde(rename = "M")]
        bound: f64,
    },
}

impl FluxSpec {
    pub fn build(&self) -> Result<Flux> {
        match self {
            FluxSpec::PowerLaw { p, bound } => Flux::power_law(*p, *bound),
            FluxSpec::Table { u, df, bound } => Flux::table(u.clone(), df.clone(), *bound),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_kinds() {
        let s: FluxSpec = serde_json::from_str(r#"{"kind":"power_law","p":2,"M":3}"#).unwrap();
        let f = s.build().unwrap();
        assert_eq!(f.eval_dflux(-3.0).unwrap(), -9.0);
        let s: FluxSpec = serde_json::from_str(r#"{"kind":"table","u":[-1,0,1],"df":[-1,0,1],"M":1}"#).unwrap();
        assert!((s.build().unwrap().f(1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(serde_json::from_str::<FluxSpec>(r#"{"kind":"power_law","p":2,"M":3,"x":1}"#).is_err());
        assert!(serde_json::from_str::<FluxSpec>(r#"{"kind":"cubic","M":3}"#).is_err());
    }
}
