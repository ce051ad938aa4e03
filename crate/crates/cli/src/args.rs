use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "pae-kit",
    version,
    about = "Projection-augmentation embedding toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthetic embedding bundles
    #[command(subcommand)]
    Fixtures(FixturesCmd),
    /// Corpus subspaces and sample sets
    #[command(subcommand)]
    Subspace(SubspaceCmd),
    /// PAE vectors and alpha sweeps
    #[command(subcommand)]
    Pae(PaeCmd),
    /// Latent optimization against an embedding target
    Optimize(OptimizeArgs),
    /// Similarity studies over bundles
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
}

#[derive(Debug, Subcommand)]
pub enum FixturesCmd {
    /// Write a seeded synthetic bundle
    Make {
        /// two_modality_clusters | attribute_trajectory | grouped_attributes | pae_triples
        #[arg(long)]
        recipe: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Gs,
    Raw,
    Pca,
    All,
}

#[derive(Debug, Subcommand)]
pub enum SubspaceCmd {
    /// Build a subspace (gs, raw, pca) or a sample set (all) from bundle items
    Build {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Keep items carrying this tag; repeat to require several
        #[arg(long = "tag", value_name = "KEY:VALUE")]
        tags: Vec<String>,
        /// Use exactly these items, in this order
        #[arg(long, value_delimiter = ',', conflicts_with = "tags")]
        ids: Vec<String>,
        /// Number of principal components (pca only)
        #[arg(long)]
        components: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Aug {
    Simple,
    Plus,
    Ex,
    Exd,
}

/// Subspace file plus augmentation, as an alternative to a config file.
#[derive(Debug, Args)]
pub struct InlineConfig {
    /// Subspace or sample-set file
    #[arg(long, conflicts_with = "config")]
    pub subspace: Option<PathBuf>,
    #[arg(long, value_enum, conflicts_with = "config")]
    pub aug: Option<Aug>,
    #[arg(long, allow_negative_numbers = true, conflicts_with = "config")]
    pub alpha: Option<f64>,
    /// Saved PAE configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Use the input vectors as stored instead of unit-normalizing them
    #[arg(long)]
    pub no_normalize: bool,
}

#[derive(Debug, Subcommand)]
pub enum PaeCmd {
    /// Compute one PAE vector and write it as a single-item bundle
    Compute {
        #[arg(long)]
        bundle: PathBuf,
        /// Image item id
        #[arg(long)]
        image: String,
        /// Text item id
        #[arg(long)]
        text: String,
        #[command(flatten)]
        config: InlineConfig,
        /// Also write the configuration used, for later `--config` runs
        #[arg(long)]
        save_config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean criteria over triples for every (configuration, alpha) cell
    Sweep {
        #[arg(long)]
        bundle: PathBuf,
        /// Subspace or sample-set file; repeat for several
        #[arg(long = "subspace", required = true)]
        subspaces: Vec<PathBuf>,
        /// Augmentations to pair with each subspace
        #[arg(long, value_enum, value_delimiter = ',', required = true)]
        aug: Vec<Aug>,
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            required = true
        )]
        alphas: Vec<f64>,
        /// CSV with header `image,text,target` listing item ids; default is
        /// the `triple:<n>` / `role:*` tags of the bundle
        #[arg(long)]
        triples: Option<PathBuf>,
        #[arg(long)]
        no_normalize: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Naive,
    Pae,
    Dpe,
    Directional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorArg {
    Linear,
    Mlp1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Init {
    /// Least-squares latent reproducing the image (linear only)
    Invert,
    /// Seeded uniform latent in [-1, 1]
    Random,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long, value_enum)]
    pub target: Target,
    #[arg(long, value_enum)]
    pub generator: GeneratorArg,
    #[arg(long)]
    pub seed: u64,
    /// Latent width (default: the bundle dimension)
    #[arg(long)]
    pub latent_dim: Option<usize>,
    /// Hidden width (mlp1 only)
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub bundle: PathBuf,
    /// Image the edit starts from
    #[arg(long)]
    pub image: String,
    /// Text prompt
    #[arg(long)]
    pub text: String,
    /// Neutral text (directional target)
    #[arg(long)]
    pub neutral: Option<String>,
    /// Subspace file (pae and dpe targets)
    #[arg(long)]
    pub subspace: Option<PathBuf>,
    /// Augmentation (pae target)
    #[arg(long, value_enum)]
    pub aug: Option<Aug>,
    /// Augmenting power (pae target)
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Starting latent (default: invert for linear, random for mlp1)
    #[arg(long, value_enum)]
    pub init: Option<Init>,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Trace CSV (step,loss)
    #[arg(long)]
    pub out: PathBuf,
    /// Full trace as JSON
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCmd {
    /// Group-averaged cosine matrix
    Matrix {
        #[arg(long)]
        bundle: PathBuf,
        /// Tag key that names each item's group (`kind` groups by modality)
        #[arg(long)]
        group_by: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Top-2 principal-component coordinates of pooled bundles
    Pca2d {
        /// LABEL=PATH; repeat for each set
        #[arg(long = "bundle", value_name = "LABEL=PATH", required = true)]
        bundles: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cosine of each frame to a reference, in full space or a subspace
    Trajectory {
        #[arg(long)]
        bundle: PathBuf,
        /// Tag selecting the frames, taken in bundle order
        #[arg(long, default_value = "role:frame")]
        frames_tag: String,
        /// `first` or the id of a reference item
        #[arg(long, default_value = "first")]
        reference: String,
        #[arg(long)]
        subspace: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Item-level cosine matrix ordered by group
    Heatmap {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        group_by: String,
        /// Restrict to and order by these groups
        #[arg(long, value_delimiter = ',')]
        groups: Vec<String>,
        #[arg(long)]
        subspace: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}
