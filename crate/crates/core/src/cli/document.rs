use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::ShapeOperatorSet;
use crate::matrix_core::{matrix_from_rows, MatrixTuple, SymmetryClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocumentKind {
    Tuple,
    ShapeOps,
}

/// On-disk form of a matrix tuple or a shape-operator set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TupleDocument {
    pub kind: DocumentKind,
    pub n: usize,
    pub m: usize,
    pub symmetry: SymmetryClass,
    /// `m` matrices, each a list of `n` rows.
    pub matrices: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

impl TupleDocument {
    pub fn from_tuple(t: &MatrixTuple) -> Self {
        Self {
            kind: DocumentKind::Tuple,
            n: t.n(),
            m: t.m(),
            symmetry: t.symmetry(),
            matrices: t.to_rows(),
            c: None,
        }
    }

    pub fn from_shape_ops(s: &ShapeOperatorSet) -> Self {
        Self {
            kind: DocumentKind::ShapeOps,
            c: Some(s.c()),
            ..Self::from_tuple(s.as_tuple())
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("malformed document: {e}")))?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents serialize");
        s.push('\n');
        s
    }

    fn validate(&self) -> Result<()> {
        if self.matrices.len() != self.m {
            return Err(Error::Dimension(format!(
                "m = {} but {} matrices given",
                self.m,
                self.matrices.len()
            )));
        }
        for (r, mat) in self.matrices.iter().enumerate() {
            if mat.len() != self.n || mat.iter().any(|row| row.len() != self.n) {
                return Err(Error::Dimension(format!("matrix {r} is not {0}x{0}", self.n)));
            }
        }
        match (self.kind, self.c) {
            (DocumentKind::ShapeOps, None) => {
                Err(Error::InvalidParameter("shape_ops document needs c".into()))
            }
            (DocumentKind::ShapeOps, _) if self.symmetry != SymmetryClass::Symmetric => Err(
                Error::InvalidParameter("shape operators must be symmetric".into()),
            ),
            (DocumentKind::Tuple, Some(_)) => {
                Err(Error::InvalidParameter("c is only allowed on shape_ops documents".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn tuple(&self) -> Result<MatrixTuple> {
        let mats = self
            .matrices
            .iter()
            .map(|rows| matrix_from_rows(rows))
            .collect::<Result<_>>()?;
        MatrixTuple::new(self.symmetry, mats)
    }

    pub fn shape_ops(&self) -> Result<ShapeOperatorSet> {
        if self.kind != DocumentKind::ShapeOps {
            return Err(Error::InvalidParameter("expected a shape_ops document".into()));
        }
        ShapeOperatorSet::from_tuple(self.tuple()?, self.c.unwrap_or(0.0))
    }
}

/// Everything a subcommand reports. Contains no timestamps or paths beyond
/// the echoed command line, so equal invocations give equal bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub command: String,
    pub input_digest: Option<String>,
    pub tool_version: String,
    pub seed: u64,
    pub tol: f64,
    pub results: serde_json::Value,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Fails on NaN or infinities anywhere in `v`.
pub fn check_finite(v: &serde_json::Value) -> Result<()> {
    match v {
        serde_json::Value::Number(x) => match x.as_f64() {
            Some(f) if !f.is_finite() => Err(Error::NonFinite("report value".into())),
            _ => Ok(()),
        },
        serde_json::Value::Array(items) => items.iter().try_for_each(check_finite),
        serde_json::Value::Object(map) => map.values().try_for_each(check_finite),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_core::random_tuple;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_shapes() {
        let ok = r#"{"kind":"tuple","n":2,"m":1,"symmetry":"symmetric","matrices":[[[1,0],[0,1]]]}"#;
        assert!(TupleDocument::parse(ok).unwrap().tuple().is_ok());
        for bad in [
            r#"{"kind":"tuple","n":2,"m":2,"symmetry":"symmetric","matrices":[[[1,0],[0,1]]]}"#,
            r#"{"kind":"tuple","n":2,"m":1,"symmetry":"symmetric","matrices":[[[1,0,0],[0,1]]]}"#,
            r#"{"kind":"shape_ops","n":2,"m":1,"symmetry":"symmetric","matrices":[[[1,0],[0,1]]]}"#,
            r#"{"kind":"tuple","n":2,"m":1,"symmetry":"symmetric","matrices":[[[1,0],[0,1]]],"c":1}"#,
            r#"{"kind":"tuple","n":2,"m":1,"symmetry":"diagonal","matrices":[[[1,0],[0,1]]]}"#,
            "not json",
        ] {
            assert!(TupleDocument::parse(bad).is_err(), "{bad}");
        }
        let asym = r#"{"kind":"tuple","n":2,"m":1,"symmetry":"symmetric","matrices":[[[1,2],[0,1]]]}"#;
        assert!(TupleDocument::parse(asym).unwrap().tuple().is_err());
    }

    #[test]
    fn finiteness() {
        assert!(check_finite(&serde_json::json!({"a": [1.0, 2.0], "b": null})).is_ok());
        assert_eq!(digest(b"abc").len(), 64);
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(seed in any::<u64>(), skew in any::<bool>()) {
            let sym = if skew { SymmetryClass::SkewSymmetric } else { SymmetryClass::Symmetric };
            let t = random_tuple(3, 2, sym, seed, false).unwrap();
            let doc = TupleDocument::from_tuple(&t);
            let back = TupleDocument::parse(&doc.to_text()).unwrap();
            prop_assert_eq!(&back, &doc);
            let loaded = back.tuple().unwrap();
            prop_assert_eq!(loaded.mats(), t.mats());

            let report = ReportDocument {
                command: "check".into(),
                input_digest: Some(digest(doc.to_text().as_bytes())),
                tool_version: "0".into(),
                seed,
                tol: 1e-8,
                results: serde_json::to_value(&doc).unwrap(),
            };
            let text = serde_json::to_string(&report).unwrap();
            prop_assert_eq!(serde_json::from_str::<ReportDocument>(&text).unwrap(), report);
        }
    }
}
