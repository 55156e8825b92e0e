//! Training options shared by the command line and TOML files.
//!
//! Every field is optional so that a file and the flags can be layered:
//! values given on the command line win over values from a file, which win
//! over the defaults of the chosen objective.

use anyhow::{bail, Context};
use penn_core::corpus::DEFAULT_MIN_COUNT;
use penn_core::layout::{Grouping, PartitionLayout, Style};
use penn_core::trainer::{Objective, TrainConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct TrainOptions {
    /// cbow, sg, clow or pennsg
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<String>,
    /// flat, windowed or directional
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub style: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    /// Width of one partition (the full width for flat layouts)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition_dim: Option<usize>,
    /// Global vector width; sets the partition width from the layout
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classifier_partitions: Option<usize>,
    /// average or sum
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grouping: Option<String>,
    #[arg(long, visible_alias = "negative")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub negatives: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    /// Subsampling threshold; 0 disables
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsample: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_count: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dynamic_window: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cbow_mean: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table_size: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_sigmoid: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

macro_rules! layer {
    ($base:expr, $over:expr, $($f:ident),*) => {
        TrainOptions { $($f: $over.$f.clone().or_else(|| $base.$f.clone()),)* }
    };
}

/// A fully resolved training setup.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub train: TrainConfig,
    pub min_count: u64,
    pub threads: usize,
}

impl TrainOptions {
    /// `self` overridden by every field set in `over`.
    pub fn layered(&self, over: &TrainOptions) -> TrainOptions {
        layer!(
            self, over, objective, style, window, partition_dim, dim, classifier_partitions, grouping, negatives,
            lr, epochs, subsample, seed, min_count, dynamic_window, cbow_mean, table_size, exact_sigmoid, threads
        )
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("options always serialize")
    }

    pub fn resolve(&self) -> anyhow::Result<Resolved> {
        let objective = match &self.objective {
            Some(s) => Objective::parse(s).with_context(|| format!("unknown objective {s:?}"))?,
            None => Objective::Clow,
        };
        let style = match self.style.as_deref() {
            Some("flat") => Style::Flat,
            Some("windowed") => Style::Windowed,
            Some("directional") => Style::Directional,
            Some(s) => bail!("unknown style {s:?}"),
            None if objective.is_baseline() => Style::Flat,
            None => Style::Windowed,
        };
        let window = self.window.unwrap_or(if objective.is_baseline() { 5 } else { 2 });
        let parts = match style {
            Style::Flat => 1,
            Style::Windowed => 2 * window,
            Style::Directional => 2,
        };
        let partition_dim = match (self.partition_dim, self.dim) {
            (Some(p), Some(d)) if p * parts != d => bail!("partition_dim {p} x {parts} partitions is not dim {d}"),
            (Some(p), _) => p,
            (None, Some(d)) if d % parts != 0 => bail!("dim {d} is not divisible into {parts} partitions"),
            (None, Some(d)) => d / parts,
            (None, None) => 100usize.div_ceil(parts),
        };
        let mut layout = PartitionLayout::new(style, window, partition_dim)?;
        if let Some(q) = self.classifier_partitions {
            layout = layout.with_classifier_partitions(q)?;
        }
        layout = layout.with_grouping(match self.grouping.as_deref() {
            None | Some("average") => Grouping::Average,
            Some("sum") => Grouping::Sum,
            Some(g) => bail!("unknown grouping {g:?}"),
        });
        let mut train = TrainConfig::new(objective, layout);
        if let Some(k) = self.negatives {
            train.negatives = k;
        }
        if let Some(lr) = self.lr {
            train.lr0 = lr;
        }
        if let Some(e) = self.epochs {
            train.epochs = e;
        }
        if let Some(t) = self.subsample {
            train.subsample = (t > 0.0).then_some(t);
        }
        if let Some(s) = self.seed {
            train.seed = s;
        }
        if let Some(d) = self.dynamic_window {
            train.dynamic_window = d;
        }
        if let Some(m) = self.cbow_mean {
            train.cbow_mean = m;
        }
        if let Some(t) = self.table_size {
            train.table_size = t;
        }
        if let Some(x) = self.exact_sigmoid {
            train.exact_sigmoid = x;
        }
        train.validate()?;
        Ok(Resolved {
            train,
            min_count: self.min_count.unwrap_or(DEFAULT_MIN_COUNT),
            threads: self.threads.unwrap_or(1).max(1),
        })
    }
}

impl Resolved {
    /// Canonical text of everything that affects the weights.
    pub fn canonical(&self) -> String {
        format!("{};min_count={}", self.train.canonical(), self.min_count)
    }
}
