//! Location table ingestion, the deterministic train/test split and the
//! GEOEMB1 embedding container.

mod geoemb;
mod locations;
mod split;

pub use geoemb::{
    concat_duplicate_features, read_embeddings, write_embeddings, EmbeddingMatrix, DTYPE_F32, MAGIC,
};
pub use locations::{
    digest64, parse_locations, sha256_hex, write_locations_csv, Dataset, LocationRecord,
    LOCATION_COLUMNS,
};
pub use split::{make_split, test_size, SplitIndices, DEFAULT_SEED, DEFAULT_TEST_FRACTION};
