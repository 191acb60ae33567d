//! Versioned checkpoint container: model parameters, fitted statistics, the
//! training config, and the hash of the rule set the model was trained
//! against. Loading verifies the hash before the model is used.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TkgcError};
use crate::rules::RuleSet;
use crate::scorer::ModelParams;
use crate::stats::Statistics;
use crate::tkg::TkgDataset;
use crate::train::TrainConfig;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: TrainConfig,
    pub num_relations: usize,
    pub rule_set_hash: String,
    pub params: ModelParams,
    pub stats: Statistics,
}

impl Checkpoint {
    pub fn new(
        config: TrainConfig,
        dataset: &TkgDataset,
        rules: &RuleSet,
        params: ModelParams,
        stats: Statistics,
    ) -> Result<Self> {
        Ok(Checkpoint {
            version: CHECKPOINT_VERSION,
            config,
            num_relations: dataset.num_relations(),
            rule_set_hash: rules.content_hash(dataset)?,
            params,
            stats,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        if !path.is_file() {
            return Err(TkgcError::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)?;
        let ckpt: Checkpoint = serde_json::from_str(&text)
            .map_err(|e| TkgcError::Checkpoint(format!("schema mismatch: {e}")))?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(TkgcError::Checkpoint(format!(
                "unsupported version {} (expected {CHECKPOINT_VERSION})",
                ckpt.version
            )));
        }
        Ok(ckpt)
    }

    /// Verify this checkpoint belongs with the given dataset and rule set.
    pub fn verify(&self, dataset: &TkgDataset, rules: &RuleSet) -> Result<()> {
        if self.num_relations != dataset.num_relations() {
            return Err(TkgcError::Checkpoint(format!(
                "relation count mismatch: checkpoint has {}, dataset has {}",
                self.num_relations,
                dataset.num_relations()
            )));
        }
        let found = rules.content_hash(dataset)?;
        if found != self.rule_set_hash {
            return Err(TkgcError::RuleHashMismatch {
                expected: self.rule_set_hash.clone(),
                found,
            });
        }
        Ok(())
    }
}
