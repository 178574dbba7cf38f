//! Structured reports.
//!
//! Reports are JSON documents with struct-declared key order and every real
//! number rendered with 17 significant digits (`d.dddddddddddddddde±x`), so
//! identical runs produce byte-identical files and parsing recovers each
//! value exactly. Non-finite values are written as the strings `"inf"`,
//! `"-inf"` and `"nan"`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::ser::{Error as _, SerializeSeq, SerializeStruct};
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::gof::GridY;
use crate::montecarlo::McReport;

/// Fixed-width decimal rendering of a real number.
pub fn render_f64(x: f64) -> String {
    if x.is_nan() {
        "\"nan\"".into()
    } else if x == f64::INFINITY {
        "\"inf\"".into()
    } else if x == f64::NEG_INFINITY {
        "\"-inf\"".into()
    } else {
        format!("{x:.16e}")
    }
}

struct Num(f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawValue::from_string(render_f64(self.0))
            .map_err(S::Error::custom)?
            .serialize(s)
    }
}

pub fn num<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    Num(*x).serialize(s)
}

pub fn num_vec<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&Num(*x))?;
    }
    seq.end()
}

pub fn num_vec_opt<S: Serializer>(
    v: &Option<Vec<f64>>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => num_vec(v, s),
        None => s.serialize_none(),
    }
}

impl Serialize for GridY {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("GridY", 2)?;
        st.serialize_field("value", &Num(self.value))?;
        st.serialize_field("side", &self.side)?;
        st.end()
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json<T: Serialize>(report: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::Input(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes `report` as JSON to `path`.
pub fn emit_report<T: Serialize>(report: &T, path: &Path) -> Result<()> {
    let json = to_json(report)?;
    fs::write(path, json).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

/// Monte Carlo rows as CSV: `n,alpha,dgp,variant,rejection_rate,replications,B,seed`.
pub fn mc_csv(reports: &[McReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Input(e.to_string());
    w.write_record([
        "n",
        "alpha",
        "dgp",
        "variant",
        "rejection_rate",
        "replications",
        "B",
        "seed",
    ])
    .map_err(io)?;
    for report in reports {
        for row in &report.rows {
            w.write_record([
                row.n.to_string(),
                format!("{}", row.alpha),
                row.dgp.clone(),
                row.null.clone(),
                format!("{}", row.rejection_rate),
                row.replications.to_string(),
                row.b.to_string(),
                row.seed.to_string(),
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::Input(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Input(e.to_string()))
}

pub fn emit_mc_csv(reports: &[McReport], path: &Path) -> Result<()> {
    let csv = mc_csv(reports)?;
    let mut f =
        fs::File::create(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    f.write_all(csv.as_bytes())
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[derive(Serialize)]
    struct Doc {
        #[serde(serialize_with = "num")]
        x: f64,
        #[serde(serialize_with = "num_vec")]
        v: Vec<f64>,
        y: GridY,
    }

    #[test]
    fn rendering() {
        assert_eq!(render_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(render_f64(f64::NEG_INFINITY), "\"-inf\"");
        let doc = Doc {
            x: 1.0,
            v: vec![2.0, f64::INFINITY],
            y: GridY::left_of(-0.3),
        };
        let json = serde_json::to_string(&doc).unwrap();
        assert_eq!(
            json,
            r#"{"x":1.0000000000000000e0,"v":[2.0000000000000000e0,"inf"],"y":{"value":-2.9999999999999999e-1,"side":"left-limit"}}"#
        );
    }

    proptest! {
        #[test]
        fn numbers_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            let doc = Doc { x, v: vec![], y: GridY::at(0.0) };
            let parsed: serde_json::Value = serde_json::from_str(&to_json(&doc).unwrap()).unwrap();
            prop_assert_eq!(parsed["x"].as_f64().unwrap().to_bits(), x.to_bits());
        }
    }
}
