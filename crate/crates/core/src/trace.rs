//! Line-oriented trace records. Every game and transformer run can be
//! exported as JSON Lines; struct field order is fixed, so identical seeds
//! yield byte-identical files.

use serde::Serialize;

use crate::coloring::MoveRecord;
use crate::tree::BitString;

/// One line per record, each terminated by `\n`.
pub fn render_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
        out.push('\n');
    }
    out
}

/// A coloring move as traced: the marked vertex, the color the strategy
/// chose, the marked-rank at the root, and whether all invariants held
/// after the move.
#[derive(Clone, Debug, Serialize)]
pub struct ColorMove {
    #[serde(rename = "move")]
    pub index: usize,
    pub vertex: BitString,
    pub color: u32,
    pub rank_root: u32,
    pub ok: bool,
}

impl From<&MoveRecord> for ColorMove {
    fn from(r: &MoveRecord) -> Self {
        ColorMove {
            index: r.index,
            vertex: r.vertex,
            color: r.color,
            rank_root: r.rank_root,
            ok: r.ok,
        }
    }
}

/// Closing line of a game trace.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub outcome: String,
    pub sound: bool,
}

/// One oracle evaluation: the stopping-time value at the vertex (`null`
/// when no description is active on some extension) and the least level
/// that covers it, if any.
#[derive(Clone, Debug, Serialize)]
pub struct OracleRecord {
    pub vertex: BitString,
    pub value: Option<u32>,
    pub covered_at: Option<u32>,
}
