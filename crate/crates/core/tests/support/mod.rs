#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::PathBuf;

use axum::Router;
use optic::corpus::{generate_synthetic, Corpus, SynthConfig};
use optic::student::{self, Example, FeatureConfig, StudentModel, TrainConfig};
use optic::teacher::{Exemplar, ExemplarSet};
use tokio::sync::oneshot;

pub fn synth(n: usize, seed: u64) -> Corpus {
    generate_synthetic(&SynthConfig::new(n, seed)).unwrap()
}

/// A small student trained on gold labels, enough to give varied scores.
pub fn small_model(seed: u64) -> StudentModel {
    let corpus = synth(400, seed);
    let examples: Vec<Example> = corpus
        .iter()
        .map(|m| Example {
            id: m.id.clone(),
            text: m.text(),
            label: m.gold_label.unwrap(),
        })
        .collect();
    let features = FeatureConfig {
        hash_dim: 1 << 14,
        ..FeatureConfig::default()
    };
    let config = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    student::train(&examples, &[], &config, &features).unwrap().0
}

pub struct Server {
    pub addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<()>,
}

impl Server {
    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }

    pub async fn shutdown(mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        self.task.await.unwrap();
    }
}

pub async fn spawn(router: Router) -> Server {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        axum::serve(listener, router)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
            .unwrap();
    });
    Server {
        addr,
        stop: Some(tx),
        task,
    }
}

/// Fixture behind the prompt golden files.
pub const MESSAGE: &str = "My chest has felt tight since Sunday and the inhaler is not helping. He said \"\"\"call back\"\"\" if it got worse.";

pub fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn exemplars() -> ExemplarSet {
    let ex = |id: &str, text: &str, topic| Exemplar {
        id: id.into(),
        text: text.into(),
        topic,
    };
    ExemplarSet::new(
        vec![
            ex("a1", "Can you send my refill to the Main Street pharmacy?", 0),
            ex("a2", "I need the disability form signed before Friday.", 1),
            ex("a3", "Please update my insurance on file.", 1),
        ],
        vec![
            ex("c1", "The rash on my arm has spread and is now blistering.", 2),
            ex("c2", "My blood sugar has been over 300 for two days.", 3),
            ex("c3", "Is dizziness a side effect of the new lisinopril dose?", 3),
        ],
        7,
    )
}
