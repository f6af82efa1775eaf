//! Labeled corpora on disk.
//!
//! Two layouts are understood:
//! * `Fsdd`: flat or nested files named `<digit>_<speaker>_<index>.wav`.
//! * `FolderPerClass`: `<root>/<class-index>/<anything>.wav`.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{read_wav, AudioClip, AudioError};

pub const CLASS_COUNT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetLayout {
    #[default]
    Fsdd,
    FolderPerClass,
}

impl FromStr for DatasetLayout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "fsdd" => Ok(Self::Fsdd),
            "folder-per-class" | "folderperclass" => Ok(Self::FolderPerClass),
            other => Err(format!("unknown dataset layout '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: usize,
    pub speaker: Option<String>,
}

impl ManifestEntry {
    pub fn load(&self) -> Result<AudioClip, AudioError> {
        let mut clip = read_wav(&self.path)?;
        clip.label = Some(self.label);
        Ok(clip)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub class_count: usize,
    pub root: PathBuf,
}

impl DatasetManifest {
    /// Builds a manifest, sorting entries by path and checking labels and uniqueness.
    pub fn new(
        root: impl Into<PathBuf>,
        mut entries: Vec<ManifestEntry>,
        class_count: usize,
    ) -> Result<Self, AudioError> {
        entries.sort_by(|a, b| a.path.cmp(&b.path));
        if let Some(w) = entries.windows(2).find(|w| w[0].path == w[1].path) {
            return Err(AudioError::DuplicatePath(w[0].path.clone()));
        }
        if let Some(e) = entries.iter().find(|e| e.label >= class_count) {
            return Err(AudioError::UnlabeledFile(e.path.clone()));
        }
        Ok(Self {
            entries,
            class_count,
            root: root.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for e in &self.entries {
            counts[e.label] += 1;
        }
        counts
    }

    pub(crate) fn subset(&self, entries: Vec<ManifestEntry>) -> Self {
        Self {
            entries,
            class_count: self.class_count,
            root: self.root.clone(),
        }
    }
}

fn collect_wavs(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), AudioError> {
    let io_err = |source| AudioError::Io {
        path: dir.to_path_buf(),
        source,
    };
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.is_dir() {
            collect_wavs(&path, out)?;
        } else if path
            .extension()
            .is_some_and(|ext| ext.eq_ignore_ascii_case("wav"))
        {
            out.push(path);
        }
    }
    Ok(())
}

fn parse_fsdd_name(path: &Path) -> Option<(usize, String)> {
    let stem = path.file_stem()?.to_str()?;
    let mut parts = stem.split('_');
    let digit = parts.next()?;
    let speaker = parts.next()?;
    let index = parts.next()?;
    if parts.next().is_some() || speaker.is_empty() || index.is_empty() {
        return None;
    }
    if digit.len() != 1 || !index.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let label = digit.parse().ok()?;
    Some((label, speaker.to_string()))
}

fn folder_label(root: &Path, path: &Path) -> Option<usize> {
    let rel = path.strip_prefix(root).ok()?;
    let mut comps = rel.components();
    let class_dir = comps.next()?.as_os_str().to_str()?;
    // exactly <class>/<file>.wav
    comps.next()?;
    if comps.next().is_some() {
        return None;
    }
    if class_dir.is_empty() || !class_dir.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    class_dir.parse().ok()
}

/// Scans `root` for labeled WAV files. Every file header is decoded so
/// that unreadable audio surfaces here rather than mid-training.
pub fn load_dataset(
    root: impl AsRef<Path>,
    layout: DatasetLayout,
) -> Result<DatasetManifest, AudioError> {
    let root = root.as_ref();
    let mut paths = Vec::new();
    collect_wavs(root, &mut paths)?;
    if paths.is_empty() {
        return Err(AudioError::EmptyDataset(root.to_path_buf()));
    }
    paths.sort();

    let mut seen = HashSet::new();
    let mut entries = Vec::with_capacity(paths.len());
    for path in paths {
        let (label, speaker) = match layout {
            DatasetLayout::Fsdd => parse_fsdd_name(&path)
                .map(|(l, s)| (l, Some(s)))
                .ok_or_else(|| AudioError::UnlabeledFile(path.clone()))?,
            DatasetLayout::FolderPerClass => folder_label(root, &path)
                .map(|l| (l, None))
                .ok_or_else(|| AudioError::UnlabeledFile(path.clone()))?,
        };
        if label >= CLASS_COUNT {
            return Err(AudioError::UnlabeledFile(path));
        }
        read_wav(&path)?;
        if !seen.insert(path.clone()) {
            return Err(AudioError::DuplicatePath(path));
        }
        entries.push(ManifestEntry {
            path,
            label,
            speaker,
        });
    }
    DatasetManifest::new(root, entries, CLASS_COUNT)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio_io::encode_wav;

    fn write(path: &Path) {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, encode_wav(&[0.0, 0.5, -0.5], 1, 8000, 16)).unwrap();
    }

    #[test]
    fn fsdd_label_from_filename() {
        let dir = tempfile::tempdir().unwrap();
        write(&dir.path().join("7_jackson_32.wav"));
        write(&dir.path().join("recordings/0_theo_1.wav"));
        let m = load_dataset(dir.path(), DatasetLayout::Fsdd).unwrap();
        assert_eq!(m.len(), 2);
        let jackson = m.entries.iter().find(|e| e.path.ends_with("7_jackson_32.wav")).unwrap();
        assert_eq!(jackson.label, 7);
        assert_eq!(jackson.speaker.as_deref(), Some("jackson"));
    }

    #[test]
    fn folder_label_from_directory() {
        let dir = tempfile::tempdir().unwrap();
        write(&dir.path().join("3/rec001.wav"));
        write(&dir.path().join("0/a.wav"));
        let m = load_dataset(dir.path(), DatasetLayout::FolderPerClass).unwrap();
        assert_eq!(m.entries.iter().map(|e| e.label).collect::<Vec<_>>(), vec![0, 3]);
    }

    #[test]
    fn unlabeled_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write(&dir.path().join("jackson_32.wav"));
        assert!(matches!(
            load_dataset(dir.path(), DatasetLayout::Fsdd),
            Err(AudioError::UnlabeledFile(_))
        ));
        let dir = tempfile::tempdir().unwrap();
        write(&dir.path().join("digits/rec.wav"));
        assert!(matches!(
            load_dataset(dir.path(), DatasetLayout::FolderPerClass),
            Err(AudioError::UnlabeledFile(_))
        ));
        let dir = tempfile::tempdir().unwrap();
        write(&dir.path().join("12/rec.wav"));
        assert!(matches!(
            load_dataset(dir.path(), DatasetLayout::FolderPerClass),
            Err(AudioError::UnlabeledFile(_))
        ));
    }

    #[test]
    fn empty_tree_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("notes.txt"), "x").unwrap();
        assert!(matches!(
            load_dataset(dir.path(), DatasetLayout::Fsdd),
            Err(AudioError::EmptyDataset(_))
        ));
    }

    #[test]
    fn loading_is_order_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["9_b_1.wav", "1_a_2.wav", "1_a_10.wav", "5_c_0.wav"] {
            write(&dir.path().join(name));
        }
        let a = load_dataset(dir.path(), DatasetLayout::Fsdd).unwrap();
        let b = load_dataset(dir.path(), DatasetLayout::Fsdd).unwrap();
        assert_eq!(a, b);
        assert!(a.entries.windows(2).all(|w| w[0].path < w[1].path));
    }

    #[test]
    fn layout_names_parse() {
        assert_eq!("FSDD".parse::<DatasetLayout>().unwrap(), DatasetLayout::Fsdd);
        assert_eq!(
            "folder_per_class".parse::<DatasetLayout>().unwrap(),
            DatasetLayout::FolderPerClass
        );
        assert!("mp3".parse::<DatasetLayout>().is_err());
    }
}
