use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alloc::largest_remainder;
use crate::corpus::{Corpus, Label};
use crate::topics::TopicModel;
use crate::weak_labeler::{assign_group, WeakGroup};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub id: String,
    pub text: String,
    pub topic: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExemplarSet {
    pub admin: Vec<Exemplar>,
    pub clinical: Vec<Exemplar>,
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum ExemplarError {
    #[error("budget must be even and positive, got {0}")]
    OddBudget(usize),
    #[error("{group} has {available} distinct messages, budget needs {needed}")]
    BudgetExceedsAvailable {
        group: WeakGroup,
        needed: usize,
        available: usize,
    },
    #[error("weak group {0} is empty")]
    EmptyGroup(WeakGroup),
    #[error("message {0} is not covered by the topic model")]
    Uncovered(String),
    #[error("subset of {requested} exceeds set size {available}")]
    SubsetTooLarge { requested: usize, available: usize },
    #[error("exemplar file: {0}")]
    Io(#[from] std::io::Error),
    #[error("exemplar file: {0}")]
    Format(#[from] serde_json::Error),
}

impl ExemplarSet {
    pub fn new(admin: Vec<Exemplar>, clinical: Vec<Exemplar>, seed: u64) -> Self {
        Self { admin, clinical, seed }
    }

    pub fn len(&self) -> usize {
        self.admin.len() + self.clinical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn class(&self, label: Label) -> &[Exemplar] {
        match label {
            Label::Admin => &self.admin,
            Label::Clinical => &self.clinical,
        }
    }

    pub fn source_topics(&self) -> Vec<usize> {
        let mut t: Vec<usize> = self.admin.iter().chain(&self.clinical).map(|e| e.topic).collect();
        t.sort_unstable();
        t.dedup();
        t
    }

    /// Order used for rendering: each class sorted by id, then shuffled with
    /// the set's seed. Independent of the order the lists were built in.
    pub fn canonical(&self) -> ExemplarSet {
        let order = |list: &[Exemplar], stream: u64| {
            let mut v = list.to_vec();
            v.sort_by(|a, b| a.id.cmp(&b.id).then_with(|| a.text.cmp(&b.text)));
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(stream);
            v.shuffle(&mut rng);
            v
        };
        ExemplarSet {
            admin: order(&self.admin, 0),
            clinical: order(&self.clinical, 1),
            seed: self.seed,
        }
    }

    /// Uniform random subset with `total / 2` exemplars per class.
    pub fn random_subset(&self, total: usize, seed: u64) -> Result<ExemplarSet, ExemplarError> {
        if total == 0 || !total.is_multiple_of(2) {
            return Err(ExemplarError::OddBudget(total));
        }
        let per = total / 2;
        let canonical = self.canonical();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pick = |list: &[Exemplar]| {
            if per > list.len() {
                return Err(ExemplarError::SubsetTooLarge {
                    requested: total,
                    available: self.len(),
                });
            }
            Ok(rand::seq::index::sample(&mut rng, list.len(), per)
                .into_iter()
                .map(|i| list[i].clone())
                .collect())
        };
        Ok(ExemplarSet {
            admin: pick(&canonical.admin)?,
            clinical: pick(&canonical.clinical)?,
            seed: self.seed,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ExemplarError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ExemplarSet, ExemplarError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Draws `budget / 2` exemplars from each of the PossibleAdministrative and
/// PossibleClinical weak groups. Each class budget is spread over topics in
/// proportion to the class's topic sizes, then sampled uniformly within each
/// topic. Texts occurring in both groups are never used, and repeated texts
/// within a group count once.
pub fn sample_exemplars(
    corpus: &Corpus,
    topics: &TopicModel,
    budget: usize,
    seed: u64,
) -> Result<ExemplarSet, ExemplarError> {
    if budget == 0 || !budget.is_multiple_of(2) {
        return Err(ExemplarError::OddBudget(budget));
    }
    let per_class = budget / 2;
    let topic_of = topics.assignment_map();

    let mut pools: [Vec<(usize, String, String)>; 2] = [Vec::new(), Vec::new()];
    let mut groups_of_text: HashMap<String, u8> = HashMap::new();
    for m in corpus {
        let slot = match assign_group(m) {
            WeakGroup::PossibleAdministrative => 0,
            WeakGroup::PossibleClinical => 1,
            WeakGroup::Uncategorized => continue,
        };
        let topic = *topic_of.get(m.id.as_str()).ok_or_else(|| ExemplarError::Uncovered(m.id.clone()))?;
        let text = m.text();
        *groups_of_text.entry(text.clone()).or_default() |= 1 << slot;
        pools[slot].push((topic, m.id.clone(), text));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: [Vec<Exemplar>; 2] = [Vec::new(), Vec::new()];
    for (slot, group) in [WeakGroup::PossibleAdministrative, WeakGroup::PossibleClinical].into_iter().enumerate() {
        if pools[slot].is_empty() {
            return Err(ExemplarError::EmptyGroup(group));
        }
        let mut seen = HashSet::new();
        let mut by_topic: BTreeMap<usize, Vec<(String, String)>> = BTreeMap::new();
        for (topic, id, text) in &pools[slot] {
            if groups_of_text[text] == 0b11 || !seen.insert(text.clone()) {
                continue;
            }
            by_topic.entry(*topic).or_default().push((id.clone(), text.clone()));
        }
        let available: usize = by_topic.values().map(Vec::len).sum();
        if available < per_class {
            return Err(ExemplarError::BudgetExceedsAvailable {
                group,
                needed: per_class,
                available,
            });
        }
        let weights: Vec<f64> = by_topic.values().map(|v| v.len() as f64).collect();
        let quotas = largest_remainder(per_class, &weights);
        for ((topic, members), quota) in by_topic.iter().zip(quotas) {
            let picked = rand::seq::index::sample(&mut rng, members.len(), quota.min(members.len()));
            for i in picked {
                let (id, text) = &members[i];
                chosen[slot].push(Exemplar {
                    id: id.clone(),
                    text: text.clone(),
                    topic: *topic,
                });
            }
        }
    }
    let [admin, clinical] = chosen;
    Ok(ExemplarSet::new(admin, clinical, seed).canonical())
}
