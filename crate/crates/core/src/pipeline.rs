//! Text-to-label classification pipeline: preprocessing, vectorizing and a
//! trained model, with the model/vocabulary binding checked once up front.

use crate::error::Result;
use crate::features::{transform_with, Fingerprint, Vocabulary, Weighting};
use crate::model::TrainedModel;
use crate::text::{preprocess, Stopwords};
use crate::Label;

pub struct Pipeline {
    stopwords: Stopwords,
    vocab: Vocabulary,
    weighting: Weighting,
    model: TrainedModel,
    fingerprint: Fingerprint,
}

impl Pipeline {
    pub fn new(
        model: TrainedModel,
        vocab: Vocabulary,
        stopwords: Stopwords,
        weighting: Weighting,
    ) -> Result<Pipeline> {
        let fingerprint = vocab.fingerprint();
        // Fail fast on a model/vocabulary mismatch.
        let probe = crate::features::FeatureVector { entries: vec![] };
        model.predict_score(&probe, &fingerprint)?;
        Ok(Pipeline {
            stopwords,
            vocab,
            weighting,
            model,
            fingerprint,
        })
    }

    /// Classify raw text.
    pub fn classify(&self, text: &str) -> (Label, f64) {
        let tokens = preprocess(text, &self.stopwords);
        let x = transform_with(&tokens, &self.vocab, self.weighting);
        let score = self
            .model
            .predict_score(&x, &self.fingerprint)
            .expect("binding checked at construction");
        (TrainedModel::label_from_score(score), score)
    }

    pub fn model(&self) -> &TrainedModel {
        &self.model
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    pub fn stopwords(&self) -> &Stopwords {
        &self.stopwords
    }
}
