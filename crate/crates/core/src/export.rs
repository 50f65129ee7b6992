//! Byte-stable text exports of sampled fields.
//!
//! Rows run over `t` (outer) and `x` (inner). Numbers use Rust's shortest
//! round-trip formatting, so identical inputs always give identical bytes.

use serde_json::{json, Value};

use crate::types::FieldGrid;

fn columns(components: usize) -> Vec<String> {
    let mut cols = vec!["x".to_string(), "t".to_string()];
    for l in 1..=components {
        cols.push(format!("re_q{l}"));
        cols.push(format!("im_q{l}"));
    }
    cols.push("pole".to_string());
    cols
}

/// `x,t,re_q1,im_q1,...,pole` with `pole` in {0, 1}.
pub fn field_csv(field: &FieldGrid) -> String {
    let g = field.grid;
    let mut out = columns(field.components).join(",");
    out.push('\n');
    for j in 0..g.nt {
        let t = g.t(j);
        for i in 0..g.nx {
            out.push_str(&format!("{},{}", g.x(i), t));
            for z in field.at(i, j) {
                out.push_str(&format!(",{},{}", z.re, z.im));
            }
            out.push_str(if field.masked(i, j) { ",1\n" } else { ",0\n" });
        }
    }
    out
}

/// `{"columns": [...], "rows": [[...], ...]}` with the same columns as [`field_csv`].
pub fn field_json(field: &FieldGrid) -> String {
    let g = field.grid;
    let mut rows = Vec::with_capacity(g.len());
    for j in 0..g.nt {
        for i in 0..g.nx {
            let mut row = vec![json!(g.x(i)), json!(g.t(j))];
            for z in field.at(i, j) {
                row.push(json!(z.re));
                row.push(json!(z.im));
            }
            row.push(json!(u8::from(field.masked(i, j))));
            rows.push(Value::Array(row));
        }
    }
    let doc = json!({ "columns": columns(field.components), "rows": rows });
    let mut s = serde_json::to_string(&doc).expect("field serializes");
    s.push('\n');
    s
}
