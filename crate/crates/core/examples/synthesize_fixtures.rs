//! Regenerates the replay fixtures under `data/fixtures/` for the bundled
//! synthetic dataset.
//!
//! Responses are derived from each record's reference sequence with seeded,
//! model-specific noise, so the evaluation runs offline and deterministically.
//! They are stand-ins for recorded model output, not recordings.
//!
//! ```text
//! cargo run -p cas-core --example synthesize_fixtures [-- <data dir>]
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cas_core::actionseq::{ActionInstance, Arg};
use cas_core::domain::{Category, ProblemDefinition};
use cas_core::harness::{load_dataset, model_summary, Config, ModelConfig, TaskRecord};
use cas_core::llm::{fingerprint, FixtureStore, ReplayBackend};
use cas_core::pipeline::{ModelRef, ModelSpec, Pipeline};

const SEED: u64 = 0x5eed_ca5;

/// The one cell answered with a refusal, so a failed cell is exercised.
const REFUSAL: (&str, &str, usize) = ("phi-4", "answer_door_03", 1);
const REFUSAL_TEXT: &str = "I'm sorry, but I can't help with controlling doors.";

#[derive(Clone, Copy)]
enum Style {
    /// Bracketed script lines with the training vocabulary.
    Script,
    /// `verb(args)` calls with catalog names.
    Calls,
}

#[derive(Clone, Copy)]
struct Noise {
    style: Style,
    drop: f64,
    duplicate: f64,
    swap: f64,
    wrong_entity: f64,
    filler: f64,
    invented: f64,
}

fn noise_for(model: &str) -> Noise {
    let base = Noise {
        style: Style::Calls,
        drop: 0.0,
        duplicate: 0.0,
        swap: 0.0,
        wrong_entity: 0.0,
        filler: 0.0,
        invented: 0.0,
    };
    match model {
        "mistral-7b-ft" => Noise {
            style: Style::Script,
            drop: 0.15,
            duplicate: 0.08,
            swap: 0.08,
            wrong_entity: 0.08,
            filler: 0.05,
            ..base
        },
        "phi-4" => Noise {
            drop: 0.25,
            swap: 0.12,
            wrong_entity: 0.12,
            invented: 0.10,
            ..base
        },
        "phi-4-ft" => Noise {
            style: Style::Script,
            drop: 0.06,
            duplicate: 0.05,
            swap: 0.04,
            wrong_entity: 0.04,
            filler: 0.03,
            ..base
        },
        _ => Noise {
            drop: 0.08,
            swap: 0.05,
            wrong_entity: 0.05,
            invented: 0.04,
            ..base
        },
    }
}

fn script_verb(name: &str) -> &str {
    match name {
        "move_to" => "Walk",
        "find" => "Find",
        "look_at" => "LookAt",
        "grab" => "Grab",
        "put_down" => "PutObjBack",
        "put_on" => "PutBack",
        "turn_on" => "SwitchOn",
        "turn_off" => "SwitchOff",
        "open" => "Open",
        "close" => "Close",
        "give" => "Give",
        "say" => "Talk",
        other => other,
    }
}

fn render(actions: &[ActionInstance], style: Style, preamble: bool) -> String {
    let lines: Vec<String> = actions
        .iter()
        .enumerate()
        .map(|(i, a)| match style {
            Style::Script => {
                let mut line = format!("[{}]", script_verb(a.name()));
                for arg in a.args() {
                    line.push_str(&format!(" <{arg}> (1)"));
                }
                line
            }
            Style::Calls if preamble => format!("{}. {a}", i + 1),
            Style::Calls => a.to_string(),
        })
        .collect();
    let body = lines.join("\n");
    if preamble {
        format!("Here is the plan:\n{body}")
    } else {
        body
    }
}

fn perturb(
    reference: &[ActionInstance],
    noise: Noise,
    objects: &[String],
    rng: &mut ChaCha8Rng,
) -> Vec<ActionInstance> {
    let mut out: Vec<ActionInstance> = Vec::with_capacity(reference.len() + 2);
    for action in reference {
        if rng.gen_bool(noise.drop) {
            continue;
        }
        let mut action = action.clone();
        if rng.gen_bool(noise.wrong_entity) {
            let args: Vec<Arg> = action
                .args()
                .iter()
                .map(|a| match a {
                    Arg::Entity(_) => {
                        Arg::entity(objects.choose(rng).unwrap()).unwrap()
                    }
                    other => other.clone(),
                })
                .collect();
            action = ActionInstance::new(action.name(), args).unwrap();
        }
        out.push(action.clone());
        if rng.gen_bool(noise.duplicate) {
            out.push(action);
        }
        if rng.gen_bool(noise.filler) {
            out.push(ActionInstance::new("wait", Vec::new()).unwrap());
        }
        if rng.gen_bool(noise.invented) {
            out.push(ActionInstance::with_entities("wipe", &["kitchen_sink"]).unwrap());
        }
    }
    for i in 1..out.len() {
        if rng.gen_bool(noise.swap) {
            out.swap(i - 1, i);
        }
    }
    if out.is_empty() {
        out.push(reference[0].clone());
    }
    out
}

fn shortlist_text(record: &TaskRecord, objects: &[String], rng: &mut ChaCha8Rng) -> String {
    let mut names: Vec<String> = Vec::new();
    for action in record.reference.iter() {
        for arg in action.args() {
            if let Some(e) = arg.as_entity() {
                if !names.iter().any(|n| n == e.as_str()) {
                    names.push(e.as_str().to_string());
                }
            }
        }
    }
    if names.len() > 2 && rng.gen_bool(0.15) {
        names.remove(rng.gen_range(0..names.len()));
    }
    if rng.gen_bool(0.2) {
        let extra = objects.choose(rng).unwrap().clone();
        if !names.contains(&extra) {
            names.push(extra);
        }
    }
    names.join(", ")
}

fn put(store: &FixtureStore, spec: &ModelSpec, prompt: String, text: &str) {
    let request = spec.request(prompt).expect("valid request");
    store.put(&fingerprint(&request), text).expect("fixture write");
}

fn main() {
    let data: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"));
    let config = Config::load(&data.join("models.toml")).expect("models.toml");
    let pipeline = config.pipeline().expect("pipeline");
    let records = load_dataset(&data.join("dataset"), &pipeline.aliases).expect("dataset");
    let home = ProblemDefinition::load(&config.problem_path("home")).expect("home problem");
    let objects: Vec<String> = home
        .entities()
        .filter(|(_, c)| *c == Category::Object)
        .map(|(e, _)| e.as_str().to_string())
        .collect();

    let entity = &config.entity_model;
    let entity_store = FixtureStore::new(&entity.fixtures);
    let entity_backend = ReplayBackend::new(FixtureStore::new(&entity.fixtures));
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut written = BTreeSet::new();

    for record in &records {
        for (s, summary) in record.summaries.iter().enumerate() {
            let command = summary.text.trim();
            let prompt = pipeline.entity_prompt(&home, command);
            put(&entity_store, &entity.spec, prompt, &shortlist_text(record, &objects, &mut rng));
            let shortlist = pipeline
                .infer_entities(ModelRef::new(&entity_backend, &entity.spec), &home, command)
                .expect("entity fixture just written");
            for model in &config.models {
                let store = FixtureStore::new(&model.fixtures);
                let catalog = model.spec.include_catalog.then(|| home.schemas());
                let prompt = pipeline.translation_prompt(&shortlist, command, catalog);
                let text = if (model.id.as_str(), record.id.as_str(), s) == REFUSAL {
                    REFUSAL_TEXT.to_string()
                } else {
                    let noise = noise_for(&model.id);
                    let seq = perturb(record.reference.actions(), noise, &objects, &mut rng);
                    render(&seq, noise.style, model.id == "sonnet-v2")
                };
                put(&store, &model.spec, prompt, &text);
                written.insert(model.id.clone());
            }
        }
        if let (Some(summary), Some(text)) = (&config.summary_model, model_summary(record)) {
            write_summary(&pipeline, summary, record, text);
        }
    }
    write_worked_example(&data, &pipeline);
    println!("{} records, models: {written:?}", records.len());
}

fn write_summary(pipeline: &Pipeline, model: &ModelConfig, record: &TaskRecord, text: &str) {
    let steps = record.described_steps();
    if steps.is_empty() {
        return;
    }
    let prompt = pipeline.prompts.summarize(record.task.trim(), &steps);
    put(&FixtureStore::new(&model.fixtures), &model.spec, prompt, text);
}

/// Fixtures for the phone-call example used by the golden tests.
fn write_worked_example(data: &Path, pipeline: &Pipeline) {
    let store = FixtureStore::new(data.join("fixtures/paper"));
    let household =
        ProblemDefinition::load(&data.join("problems/household.problem")).expect("household");
    let entity = ModelSpec::new("codestral-22b-v0.1");
    let command = "Find your roommate and tell them they have a phone call";
    put(&store, &entity, pipeline.entity_prompt(&household, command), "phone, roommate");

    let names = ["phone", "roommate"];
    let translation = pipeline.prompts.translation(&names, &format!("{command}."), None);
    let response = "Walk(roommate)\nFind(phone)\nGrab(phone)\nTurnTo(roommate)\nLookAt(roommate)\n\
                    PointAt(phone)\nTalk(\"I found my phone!\")\nPutObjBack(phone)";
    put(&store, &ModelSpec::new("mistral-7b-ft"), translation, response);

    let task = "You are home and the phone rings. The person on the other end of the line asks \
                to speak to your roommate.";
    let steps = [
        "look for him",
        "inform him about the call",
        "place the phone on the table and ask him to talk",
    ];
    put(
        &store,
        &ModelSpec::new("sonnet-3.5-v2"),
        pipeline.prompts.summarize(task, &steps),
        "Find your roommate and tell them they have a phone call.",
    );
}
