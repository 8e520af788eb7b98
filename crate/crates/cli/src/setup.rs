//! Turns a run configuration into a backend, a representation provider and
//! encoded stimuli.

use std::path::{Path, PathBuf};

use gensurp_core::config::{BackendKind, RunConfig};
use gensurp_core::eval::load_dataset;
use gensurp_core::lm::remote::RemoteEmbedder;
use gensurp_core::representation::load_embeddings;
use gensurp_core::{
    BoundEmbeddings, Estimator, GsModel, Item, LanguageModel, NGramBackend, RemoteBackend, RemoteConfig,
    RepresentationProvider, Stimulus,
};

use crate::error::{Failure, Result};
use crate::GlobalArgs;

/// Loads the config named by `--config` and applies the global overrides.
pub fn config(global: &GlobalArgs) -> Result<RunConfig> {
    let path = global
        .config
        .as_ref()
        .ok_or_else(|| Failure::config("this command needs --config PATH"))?;
    let mut config = gensurp_core::load_config(path)?;
    if let Some(seed) = global.seed {
        config.seed = seed;
    }
    if let Some(jobs) = global.jobs {
        config.jobs = Some(jobs);
    }
    if let Some(kind) = global.backend {
        config.backend.kind = kind;
    }
    config.validate()?;
    Ok(config)
}

pub enum Representation {
    Table(BoundEmbeddings),
    Remote(RemoteEmbedder),
}

impl Representation {
    pub fn provider(&self) -> &dyn RepresentationProvider {
        match self {
            Representation::Table(t) => t,
            Representation::Remote(r) => r,
        }
    }
}

pub struct Workspace {
    pub backend: Box<dyn LanguageModel>,
    pub representation: Option<Representation>,
    pub exact_outcome_bound: usize,
}

impl Workspace {
    pub fn open(config: &RunConfig) -> Result<Self> {
        let b = &config.backend;
        let mut remote = None;
        let backend: Box<dyn LanguageModel> = match b.kind {
            BackendKind::Native => {
                let corpus = b
                    .corpus
                    .as_ref()
                    .ok_or_else(|| Failure::config("backend.corpus: required for the native backend"))?;
                Box::new(NGramBackend::from_corpus_file(corpus, b.order, b.pseudocount)?)
            }
            BackendKind::Remote => {
                let url = b.url.clone().unwrap_or_default();
                let lm = RemoteBackend::connect(RemoteConfig {
                    endpoint: url,
                    timeout_s: b.timeout_s,
                    max_in_flight: b.max_in_flight,
                    retries: b.retries,
                })?;
                remote = Some(RemoteEmbedder::new(&lm)?);
                Box::new(lm)
            }
        };
        let representation = match &config.data.embeddings {
            Some(path) => {
                let table = load_embeddings(path, backend.alphabet().eos_marker())?;
                Some(Representation::Table(table.bind(backend.alphabet())))
            }
            None => remote.map(Representation::Remote),
        };
        log::info!("backend {}", backend.identity());
        Ok(Self {
            backend,
            representation,
            exact_outcome_bound: config.exact_outcome_bound,
        })
    }

    pub fn estimator(&self) -> Estimator<'_> {
        Estimator::new(self.backend.as_ref(), self.representation.as_ref().map(Representation::provider))
            .with_exact_outcome_bound(self.exact_outcome_bound)
    }

    /// Fails when a measure needs vectors and no source was configured.
    pub fn check_measures(&self, models: &[GsModel]) -> Result<()> {
        if self.representation.is_none() {
            if let Some(m) = models.iter().find(|m| m.scoring.needs_representation()) {
                return Err(Failure::config(format!(
                    "data.embeddings: measure {} needs embeddings (set data.embeddings or use the remote backend)",
                    m.name
                )));
            }
        }
        Ok(())
    }

    /// Encodes every stimulus; the target is tokenized as a word following a space.
    pub fn items(&self, stimuli: &[Stimulus]) -> Result<Vec<Item>> {
        stimuli
            .iter()
            .map(|s| {
                let encode = |text: &str, lead: bool| {
                    self.backend
                        .tokenize(text, lead)
                        .map_err(|e| Failure::from(e).context(format!("stimulus {}", s.item_id)))
                };
                let target = encode(&s.target, true)?;
                if target.is_empty() {
                    return Err(Failure::data(format!("stimulus {}: target tokenizes to nothing", s.item_id)));
                }
                Ok(Item {
                    id: s.item_id.clone(),
                    context: encode(&s.context, false)?,
                    target,
                })
            })
            .collect()
    }
}

pub fn models(names: &[String], epsilon: f64) -> Result<Vec<GsModel>> {
    names
        .iter()
        .map(|n| GsModel::from_name(n, epsilon).map_err(|e| Failure::config(e.to_string())))
        .collect()
}

pub fn stimuli(config: &RunConfig) -> Result<Vec<Stimulus>> {
    let path = config
        .data
        .dataset
        .as_ref()
        .ok_or_else(|| Failure::config("data.dataset: required by this command"))?;
    Ok(load_dataset(path, config.data.frequencies.as_deref())?)
}

pub fn output_dir(config: &RunConfig) -> Result<PathBuf> {
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Failure::data(format!("creating {}: {e}", dir.display())))?;
    Ok(dir)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    std::fs::write(path, text + "\n").map_err(|e| Failure::data(format!("writing {}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Failure::data(format!("writing {}: {e}", path.display())))
}
