use std::fs;
use std::path::Path;

use crate::domain::ActionSchema;

const ENTITY_INFERENCE: &str = include_str!("../../../../data/prompts/entity_inference.txt");
const TRANSLATION: &str = include_str!("../../../../data/prompts/translation.txt");
const CATALOG_SUFFIX: &str = include_str!("../../../../data/prompts/catalog_suffix.txt");
const SUMMARIZE: &str = include_str!("../../../../data/prompts/summarize.txt");

/// Prompt templates with `{name}` placeholders.
///
/// | file                   | placeholders              |
/// |------------------------|---------------------------|
/// | `entity_inference.txt` | `{entities}`, `{command}` |
/// | `translation.txt`      | `{entities}`, `{command}`, `{catalog}` |
/// | `catalog_suffix.txt`   | `{actions}`               |
/// | `summarize.txt`        | `{task}`, `{steps}`       |
///
/// `{catalog}` expands to the rendered catalog suffix, or to nothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompts {
    pub entity_inference: String,
    pub translation: String,
    pub catalog_suffix: String,
    pub summarize: String,
}

impl Default for Prompts {
    fn default() -> Self {
        Self::bundled()
    }
}

impl Prompts {
    /// The templates shipped in `data/prompts/`.
    pub fn bundled() -> Self {
        Prompts {
            entity_inference: ENTITY_INFERENCE.to_string(),
            translation: TRANSLATION.to_string(),
            catalog_suffix: CATALOG_SUFFIX.to_string(),
            summarize: SUMMARIZE.to_string(),
        }
    }

    /// Reads the four template files from `dir`, byte for byte.
    pub fn load_dir(dir: &Path) -> std::io::Result<Self> {
        let read = |name: &str| fs::read_to_string(dir.join(name));
        Ok(Prompts {
            entity_inference: read("entity_inference.txt")?,
            translation: read("translation.txt")?,
            catalog_suffix: read("catalog_suffix.txt")?,
            summarize: read("summarize.txt")?,
        })
    }

    pub fn entity_inference<S: AsRef<str>>(&self, entities: &[S], command: &str) -> String {
        let entities = join(entities);
        fill(
            &self.entity_inference,
            &[("entities", &entities), ("command", command)],
        )
    }

    pub fn translation<S: AsRef<str>>(
        &self,
        entities: &[S],
        command: &str,
        catalog: Option<&[ActionSchema]>,
    ) -> String {
        let entities = join(entities);
        let suffix = catalog.map(|c| self.catalog(c)).unwrap_or_default();
        fill(
            &self.translation,
            &[("entities", &entities), ("command", command), ("catalog", &suffix)],
        )
    }

    /// The catalog suffix: one predicate-form signature per line.
    pub fn catalog(&self, catalog: &[ActionSchema]) -> String {
        let actions: Vec<String> = catalog.iter().map(ActionSchema::signature).collect();
        fill(&self.catalog_suffix, &[("actions", &actions.join("\n"))])
    }

    /// `steps` are numbered from 1 in the given order.
    pub fn summarize<S: AsRef<str>>(&self, task: &str, steps: &[S]) -> String {
        let steps: Vec<String> = steps
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{}. {}", i + 1, s.as_ref()))
            .collect();
        fill(&self.summarize, &[("task", task), ("steps", &steps.join("\n"))])
    }
}

fn join<S: AsRef<str>>(items: &[S]) -> String {
    items.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(", ")
}

/// Single left-to-right substitution pass, so placeholder-like text inside
/// substituted values is never expanded. Unknown placeholders are kept.
pub fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            let key = &after[..close];
            values
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}
