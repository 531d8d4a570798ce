use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::exemplars::{ExemplarError, ExemplarSet};
use super::prompt::{PromptKind, PromptSpec};

/// The four teacher configurations compared in the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Preset {
    E1,
    E2,
    E3,
    E4,
}

/// Exemplar count of the full set that the other few-shot presets subsample.
pub const FULL_EXEMPLAR_BUDGET: usize = 200;

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::E1, Preset::E2, Preset::E3, Preset::E4];

    pub fn name(self) -> &'static str {
        match self {
            Preset::E1 => "E1",
            Preset::E2 => "E2",
            Preset::E3 => "E3",
            Preset::E4 => "E4",
        }
    }

    pub fn prompt_kind(self) -> PromptKind {
        match self {
            Preset::E4 => PromptKind::ZeroShot,
            _ => PromptKind::FewShot,
        }
    }

    pub fn model_id(self) -> &'static str {
        match self {
            Preset::E3 => "gpt-3.5-turbo",
            _ => "gpt-4-32k",
        }
    }

    pub fn exemplar_count(self) -> Option<usize> {
        match self {
            Preset::E1 => Some(10),
            Preset::E2 => Some(200),
            Preset::E3 => Some(120),
            Preset::E4 => None,
        }
    }

    /// Prompt for this preset. `full` is the E2-sized set; smaller few-shot
    /// presets take a seeded random subset of it. A `full` set smaller than
    /// the preset's count is used whole.
    pub fn prompt_spec(self, full: &ExemplarSet, seed: u64) -> Result<PromptSpec, ExemplarError> {
        match self.exemplar_count() {
            None => Ok(PromptSpec::zero_shot()),
            Some(n) if n >= full.len() => Ok(PromptSpec::few_shot(full.clone())),
            Some(n) => Ok(PromptSpec::few_shot(full.random_subset(n, seed)?)),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown preset {s:?}, expected E1..E4"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::teacher::exemplars::Exemplar;

    fn full() -> ExemplarSet {
        let mk = |c: &str| {
            (0..100)
                .map(|i| Exemplar {
                    id: format!("{c}{i:03}"),
                    text: format!("{c} text {i}"),
                    topic: i % 7,
                })
                .collect()
        };
        ExemplarSet::new(mk("a"), mk("c"), 3)
    }

    #[test]
    fn table_of_presets() {
        let rows: Vec<_> = Preset::ALL
            .iter()
            .map(|p| (p.name(), p.prompt_kind(), p.model_id(), p.exemplar_count()))
            .collect();
        assert_eq!(
            rows,
            [
                ("E1", PromptKind::FewShot, "gpt-4-32k", Some(10)),
                ("E2", PromptKind::FewShot, "gpt-4-32k", Some(200)),
                ("E3", PromptKind::FewShot, "gpt-3.5-turbo", Some(120)),
                ("E4", PromptKind::ZeroShot, "gpt-4-32k", None),
            ]
        );
    }

    #[test]
    fn subsets_come_from_the_full_set() {
        let full = full();
        for p in [Preset::E1, Preset::E3] {
            let spec = p.prompt_spec(&full, 9).unwrap();
            let set = spec.exemplars.unwrap();
            assert_eq!(Some(set.len()), p.exemplar_count());
            assert_eq!(set.admin.len(), set.clinical.len());
            assert!(set.admin.iter().all(|e| full.admin.contains(e)));
            assert!(set.clinical.iter().all(|e| full.clinical.contains(e)));
        }
        assert_eq!(Preset::E2.prompt_spec(&full, 9).unwrap().exemplars.unwrap(), full);
        assert!(Preset::E4.prompt_spec(&full, 9).unwrap().exemplars.is_none());
        assert_eq!("e3".parse::<Preset>().unwrap(), Preset::E3);
    }
}
