//! File formats: binary field snapshots and CSV diagnostics.

pub mod csv;
pub mod snapshot;

pub use csv::{write_diagnostics, DiagnosticsTable, RowKey, STEP_COLUMNS};
pub use snapshot::{read_snapshot, read_state, write_snapshot, write_state, FieldKind, Header, Snapshot, FORMAT_VERSION, MAGIC};
