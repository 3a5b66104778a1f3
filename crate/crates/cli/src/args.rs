use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "sitr", version, about = "Sensor-invariant tactile representation toolkit")]
pub struct Cli {
    /// Worker threads for generation and transfer cells (0: all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a sensor-aligned simulated dataset.
    Gen(GenArgs),
    /// Pre-train the encoder on a generated dataset.
    Pretrain(PretrainArgs),
    /// Train downstream heads on frozen features and report the transfer matrix.
    EvalTransfer(EvalArgs),
    /// Render one contact under one sensor configuration.
    Render(RenderArgs),
    /// Integrate a normal map into a height map.
    Reconstruct(ReconstructArgs),
    /// Sweep one ablation axis, pre-training and evaluating every cell.
    Ablate(AblateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[arg(long)]
    pub sensors: usize,
    #[arg(long)]
    pub contacts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "k18")]
    pub calib: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    /// Comma-separated primitive names; defaults to every registered primitive.
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<String>>,
    /// Index of the first sampled sensor, for held-out sensor sets.
    #[arg(long, default_value_t = 0)]
    pub sensor_offset: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 128)]
    pub dim: usize,
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
    #[arg(long, default_value_t = 4)]
    pub heads: usize,
    #[arg(long, default_value_t = 8)]
    pub patch: usize,
    #[arg(long, default_value_t = 0.07)]
    pub tau: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_scl: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_normal: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    /// Contacts per batch; each contributes two sensor views.
    #[arg(long, default_value_t = 16)]
    pub batch_contacts: usize,
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Calibration layout; defaults to the dataset's.
    #[arg(long)]
    pub calib: Option<String>,
    /// Encoder input size; defaults to the dataset resolution.
    #[arg(long)]
    pub image_size: Option<usize>,
    #[arg(long)]
    pub no_augment: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct PretrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HeadArgs {
    #[arg(long, default_value_t = 32)]
    pub head_batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub head_lr: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Downstream task name from the task registry.
    #[arg(long, default_value = "classification")]
    pub task: String,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub head: HeadArgs,
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    match v[..] {
        [x, y] => Ok([x, y]),
        _ => Err(format!("expected x,y but got '{s}'")),
    }
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    match v[..] {
        [a, b, c] => Ok([a, b, c]),
        _ => Err(format!("expected a,b,c but got '{s}'")),
    }
}

#[derive(Debug, Args, Serialize)]
pub struct RenderArgs {
    /// Sensor configuration JSON.
    #[arg(long)]
    pub sensor_config: PathBuf,
    /// Primitive and sizes in millimeters, e.g. `sphere:2.0`.
    #[arg(long)]
    pub object: String,
    /// Press depth in millimeters; 0 renders the no-contact frame.
    #[arg(long)]
    pub depth: f64,
    /// Indenter offset x,y in millimeters.
    #[arg(long, value_parser = parse_pair, default_value = "0,0")]
    pub pos: [f64; 2],
    /// Euler angles x,y,z in degrees.
    #[arg(long, value_parser = parse_triple, default_value = "0,0,0")]
    pub rot: [f64; 3],
    /// Output prefix; `_image.png`, `_normal.tnsr` and `_signal.png` are appended.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReconstructArgs {
    /// Normal map TNSR of dims [H, W, 3].
    #[arg(long)]
    pub normal: PathBuf,
    #[arg(long)]
    pub pitch_mm: f64,
    /// Height TNSR path; a grayscale preview is written next to it as PNG.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AblateArgs {
    #[arg(long)]
    pub axis: String,
    /// Pre-training dataset.
    #[arg(long)]
    pub data: PathBuf,
    /// Held-out evaluation dataset; defaults to the training dataset.
    #[arg(long)]
    pub eval_data: Option<PathBuf>,
    #[arg(long, default_value = "classification")]
    pub task: String,
    #[arg(long, default_value_t = 30)]
    pub head_epochs: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub head: HeadArgs,
}
