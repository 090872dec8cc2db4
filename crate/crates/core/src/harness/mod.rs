//! Comparison ladders, goodness of fit, the penalized bridge statistic and the
//! request types behind the `extremes-lab` subcommands.

pub mod compare;
pub mod fernique;
pub mod gof;
pub mod requests;
pub mod teststat;

pub use compare::{run_compare, run_compare_with, run_compare_with_provider, CompareConfig, CompareReport, CompareRow};
pub use fernique::{additive_field_exceedance, FieldExceedance};
pub use gof::{gof_of_sample, ks_statistic, run_fpt_gof, FptGofConfig, GofReport};
pub use teststat::{penalty, penalty_c, penalty_d, simulate_m2_statistic, statistic_of_bridge, DEFAULT_EPS_CLIP};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// CSV column layout version.
pub const SCHEMA: u32 = 1;

/// First line of every CSV output, newline included.
pub fn csv_header() -> String {
    format!("# extremes-lab v{VERSION} schema={SCHEMA}\n")
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("wall_ms");
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

/// SHA-256 (hex) of the JSON form with every `wall_ms` field removed.
pub fn determinism_hash<T: Serialize>(value: &T) -> crate::Result<String> {
    let mut v = serde_json::to_value(value)?;
    strip_timing(&mut v);
    // serde_json maps are ordered, so the text is canonical
    let text = serde_json::to_string(&v)?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}
