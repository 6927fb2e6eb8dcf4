//! Trained-model files: a JSON envelope around any classifier.

use std::path::Path;

use ramanscope_core::cwt::TransformConfig;
use ramanscope_core::dcnn::{DcnnError, DcnnModel};
use ramanscope_core::ml::{self, Classifier, GaussianNb, Knn, MlModel, RandomForest, Svm};
use ramanscope_core::noise::Scenario;
use ramanscope_core::ScalogramImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::{self, StoreError};

pub const FORMAT: &str = "ramanscope-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error(transparent)]
    Dcnn(#[from] DcnnError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AnyModel {
    Nb(GaussianNb),
    Knn(Knn),
    Rf(RandomForest),
    Svm(Svm),
    Dcnn(Box<DcnnModel>),
}

impl From<MlModel> for AnyModel {
    fn from(m: MlModel) -> Self {
        match m {
            MlModel::Nb(m) => AnyModel::Nb(m),
            MlModel::Knn(m) => AnyModel::Knn(m),
            MlModel::Rf(m) => AnyModel::Rf(m),
            MlModel::Svm(m) => AnyModel::Svm(m),
        }
    }
}

impl AnyModel {
    pub fn kind(&self) -> &'static str {
        match self {
            AnyModel::Nb(_) => "nb",
            AnyModel::Knn(_) => "knn",
            AnyModel::Rf(_) => "rf",
            AnyModel::Svm(_) => "svm",
            AnyModel::Dcnn(_) => "dcnn",
        }
    }

    fn view(&self) -> View<'_> {
        match self {
            AnyModel::Nb(m) => View::Classic(m),
            AnyModel::Knn(m) => View::Classic(m),
            AnyModel::Rf(m) => View::Classic(m),
            AnyModel::Svm(m) => View::Classic(m),
            AnyModel::Dcnn(m) => View::Net(m),
        }
    }

    /// Class probabilities for each image.
    pub fn predict_proba(&self, images: &[&ScalogramImage]) -> Result<Vec<Vec<f64>>, DcnnError> {
        match self.view() {
            View::Classic(c) => Ok(images.par_iter().map(|img| c.predict_proba(&ml::features(img))).collect()),
            View::Net(net) => net.predict_proba(images),
        }
    }

    /// Hard class decisions, using each classifier's own decision rule.
    pub fn predict(&self, images: &[&ScalogramImage]) -> Result<Vec<usize>, DcnnError> {
        match self.view() {
            View::Classic(c) => Ok(images.par_iter().map(|img| c.predict(&ml::features(img))).collect()),
            View::Net(net) => Ok(net.predict_proba(images)?.iter().map(|p| first_max(p)).collect()),
        }
    }
}

fn first_max(v: &[f64]) -> usize {
    v.iter().enumerate().fold(0, |best, (i, &x)| if x > v[best] { i } else { best })
}

enum View<'a> {
    Classic(&'a (dyn Classifier + Sync)),
    Net(&'a DcnnModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub class_names: Vec<String>,
    /// The transform the training images were made with; inputs at predict
    /// time must use the same one.
    pub transform: TransformConfig,
    pub scenario: Scenario,
    pub model: AnyModel,
}

impl ModelFile {
    pub fn new(class_names: Vec<String>, transform: TransformConfig, scenario: Scenario, model: AnyModel) -> Self {
        Self { format: FORMAT.into(), version: VERSION, class_names, transform, scenario, model }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model types serialize infallibly")
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self, ModelIoError> {
        let fail = |message: String| ModelIoError::Format { path: path.display().to_string(), message };
        let m: ModelFile = serde_json::from_str(text).map_err(|e| fail(e.to_string()))?;
        if m.format != FORMAT || m.version != VERSION {
            return Err(fail(format!("unsupported format {} version {}", m.format, m.version)));
        }
        Ok(m)
    }
}

pub fn save_model(m: &ModelFile, path: &Path) -> Result<(), ModelIoError> {
    Ok(store::write_bytes(path, m.to_json().as_bytes())?)
}

pub fn load_model(path: &Path) -> Result<ModelFile, ModelIoError> {
    ModelFile::from_json(&store::read_text(path)?, path)
}
