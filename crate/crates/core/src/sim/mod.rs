//! Simulation harness: room and speaker models, synthetic corpora, the
//! confusion-matrix evaluation and the end-to-end scenario runner.

pub mod body;
pub mod corpus;
pub mod eval;
pub mod live;
pub mod room;
pub mod scenario;
pub mod script;

pub use body::{NoiseModel, Pose};
pub use corpus::{generate_corpus, Corpus, CorpusSpec, TruthClass, TruthWindow};
pub use eval::{run_eval, success_rates, ConfusionMatrix};
pub use room::RoomModel;
pub use scenario::{run_scenario, ScenarioInput, ScenarioLogs, ScenarioScript};
