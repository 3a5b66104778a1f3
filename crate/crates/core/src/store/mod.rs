//! Dataset storage, sensor-aligned generation and batching.

mod augment;
mod batch;
mod generate;
pub mod image;
mod manifest;
mod preprocess;
pub mod tnsr;

pub use augment::{augment, AugmentParams};
pub use batch::{make_aligned_batch, Batch, InMemoryDataset, LoadOptions};
pub use generate::{generate_dataset, sample_contacts, GenerateConfig};
pub use manifest::{ContactEntry, DatasetManifest, SampleEntry, SensorEntry, Split, Stats, MANIFEST_FILE};
pub use preprocess::{preprocess, stack_calibration};
pub use tnsr::{read_f32, read_tnsr, write_f32, write_tnsr, TnsrData, TnsrFile};
