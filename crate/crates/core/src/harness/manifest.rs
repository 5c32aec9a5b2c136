use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::io::read_frames_dir;
use crate::imaging::{BoundingBox, Frame};
use crate::localize::{localize, regions_from_roi_file, LipRegion};

/// One recorded word. Paths are relative to the manifest's directory
/// unless absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub subject: String,
    pub session: u8,
    pub word: String,
    pub frames_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face_box: Option<BoundingBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roi_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub utterances: Vec<Utterance>,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub root: PathBuf,
}

impl DatasetManifest {
    pub fn vocabulary(&self) -> Vec<String> {
        self.utterances
            .iter()
            .map(|u| u.word.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn subjects(&self) -> Vec<String> {
        self.utterances
            .iter()
            .map(|u| u.subject.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    /// Parses and validates: sessions are 1 or 2 and every referenced
    /// path exists.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: DatasetManifest = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        m.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.utterances.is_empty() {
            return Err(Error::Manifest(format!("manifest {:?} lists no utterances", self.name)));
        }
        for (i, u) in self.utterances.iter().enumerate() {
            if u.session != 1 && u.session != 2 {
                return Err(Error::Manifest(format!(
                    "utterance {i}: session must be 1 or 2, got {}",
                    u.session
                )));
            }
            let dir = self.resolve(&u.frames_dir);
            if !dir.is_dir() {
                return Err(Error::io(
                    &dir,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "frames_dir does not exist"),
                ));
            }
            if let Some(roi) = &u.roi_file {
                let roi = self.resolve(roi);
                if !roi.is_file() {
                    return Err(Error::io(
                        &roi,
                        std::io::Error::new(std::io::ErrorKind::NotFound, "roi_file does not exist"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut json = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        json.push('\n');
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load_frames(&self, u: &Utterance) -> Result<Vec<Frame>> {
        read_frames_dir(&self.resolve(&u.frames_dir))
    }

    /// Lip regions from the override file when present, otherwise by
    /// localization inside the face box (whole frame by default).
    pub fn regions(&self, u: &Utterance, frames: &[Frame]) -> Result<Vec<LipRegion>> {
        match &u.roi_file {
            Some(roi) => regions_from_roi_file(&self.resolve(roi), frames),
            None => frames
                .iter()
                .map(|f| localize(f, u.face_box.unwrap_or_else(|| f.bounds())))
                .collect(),
        }
    }
}
