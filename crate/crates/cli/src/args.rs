//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "zrp", version, about = "Zero range process toolkit")]
pub struct Cli {
    /// worker threads (default: $ZRP_THREADS, else all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyArg {
    Nn,
    Complete,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct ModelArgs {
    /// lattice dimension
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// side length of the cube
    #[arg(long, default_value_t = 3)]
    pub side: usize,
    /// rate preset: linear, linear-theta:T, alternating:T1,T2, staircase
    #[arg(long, default_value = "linear")]
    pub rates: String,
    /// rate file, overrides --rates (see docs/rate-file.md)
    #[arg(long)]
    pub rates_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// output file (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct BudgetArgs {
    /// optimizer restarts
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    /// iterations per restart
    #[arg(long, default_value_t = 2000)]
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKindArg {
    Gap,
    Logsob,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainArg {
    /// Metropolis chain of the half-lattice count law
    Metropolis,
    /// occupation of one site under the canonical measure
    SingleSite,
    /// two-site process
    TwoSite,
    /// one site in contact with a reservoir at fugacity phi
    Grand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LltMode {
    Normal,
    Poisson,
    /// sup-error of the normal expansion over --sizes at fixed phi
    Scan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DynamicsArg {
    Nn,
    Complete,
    TwoColour,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral gap of the generator
    Gap {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2)]
        particles: usize,
        #[arg(long, value_enum, default_value_t = TopologyArg::Nn)]
        topology: TopologyArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Log-Sobolev constant estimate
    Logsob {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2)]
        particles: usize,
        #[arg(long, value_enum, default_value_t = TopologyArg::Nn)]
        topology: TopologyArg,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Entropy-dissipation constant estimate
    Ed {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2)]
        particles: usize,
        #[arg(long, value_enum, default_value_t = TopologyArg::Nn)]
        topology: TopologyArg,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Constant against side length, with a log-log fit
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = SweepKindArg::Gap)]
        kind: SweepKindArg,
        /// sides as `a..b` (inclusive) or a comma list
        #[arg(long, default_value = "2..6")]
        sides: String,
        /// particle count: `N` for r = side, or a fixed integer
        #[arg(long, default_value = "N")]
        particles: String,
        #[arg(long, value_enum, default_value_t = TopologyArg::Nn)]
        topology: TopologyArg,
        /// report the fitted exponent
        #[arg(long)]
        fit: bool,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Birth-death reductions
    Bd {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = ChainArg::Metropolis)]
        chain: ChainArg,
        #[arg(long, default_value_t = 4)]
        particles: usize,
        /// site for single-site and grand chains
        #[arg(long, default_value_t = 0)]
        site: usize,
        /// fugacity for the grand chain
        #[arg(long, default_value_t = 1.0)]
        phi: f64,
        /// also estimate the log-Sobolev constant of the chain
        #[arg(long)]
        logsob: bool,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Miclo criteria for the half-lattice count law
    Miclo {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 8)]
        particles: usize,
        /// also build the modified law on [eps r, (1-eps) r]
        #[arg(long)]
        epsilon: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Local limit approximations of the total count
    Llt {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = LltMode::Normal)]
        mode: LltMode,
        #[arg(long, default_value_t = 3)]
        particles: usize,
        /// number of expansion terms plus one (2, 3 or 4)
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// count at which the Poisson approximation is compared
        #[arg(long)]
        k: Option<usize>,
        /// fugacity for scans
        #[arg(long, default_value_t = 1.0)]
        phi: f64,
        /// sides for scans, `a..b` or a comma list
        #[arg(long, default_value = "16,32,64,128")]
        sizes: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Scan of sqrt(r) P(R = r) over lattice sizes and particle numbers
    Econd {
        #[command(flatten)]
        model: ModelArgs,
        /// site counts, `a..b` or a comma list
        #[arg(long, default_value = "2,4,8")]
        sizes: String,
        #[arg(long, default_value_t = 50)]
        r_max: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Stochastic domination between r and r + M particles
    Dominate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2)]
        particles: usize,
        /// extra particles (default: ceil(B |Λ|))
        #[arg(long)]
        extra: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Event-driven simulation
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2)]
        particles: usize,
        /// colour counts `k1,k2` for two-colour dynamics
        #[arg(long)]
        colours: Option<String>,
        #[arg(long, value_enum, default_value_t = DynamicsArg::Nn)]
        dynamics: DynamicsArg,
        #[arg(long, default_value_t = 10.0)]
        time: f64,
        /// sampling step (default: 0.1/gap when the chain is small)
        #[arg(long)]
        dt: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Empirical relaxation rate of the occupation of one site
    Decay {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2)]
        particles: usize,
        #[arg(long, default_value_t = 2000)]
        replicas: usize,
        #[arg(long, default_value_t = 2.0)]
        time: f64,
        /// sampling step (default: 0.1/gap)
        #[arg(long)]
        dt: Option<f64>,
        /// observable f = occupation of this site
        #[arg(long, default_value_t = 0)]
        observe_site: usize,
        #[arg(long, value_enum, default_value_t = TopologyArg::Nn)]
        topology: TopologyArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check that the two-colour generator projects onto the one-colour one
    ColourCheck {
        #[command(flatten)]
        model: ModelArgs,
        /// all colour splits of this many particles
        #[arg(long, default_value_t = 3)]
        particles: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Order-preserving coupled simulation on the complete graph
    Couple {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 3)]
        particles: usize,
        /// extra particles (default: ceil(B |Λ|))
        #[arg(long)]
        extra: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        events: usize,
        /// number of seeds, starting at --seed
        #[arg(long, default_value_t = 50)]
        seeds: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
}
