//! Game engine, referee, agents, prompt pipelines and experiment harness for
//! the four-player "Who is the Spy" word game played by language models and
//! humans.

pub mod agents;
pub mod dataset;
pub mod game;
pub mod harness;
pub mod llm;
pub mod prompts;
pub mod referee;
pub mod seed;
pub mod text;
