//! Dataset ingestion, stratified splitting, and the synthetic shape set.

use std::fs;
use std::path::Path;

use super::ClassifierError;
use crate::pnm;
use crate::rng::{CounterRng, Seed};
use crate::snr::ImageF;

/// Labeled images plus the ordered class-name list.
#[derive(Clone, Debug)]
pub struct LabeledDataset {
    pub items: Vec<(ImageF, usize)>,
    pub class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(items: Vec<(ImageF, usize)>, class_names: Vec<String>) -> Result<Self, ClassifierError> {
        for (i, (_, class)) in items.iter().enumerate() {
            if *class >= class_names.len() {
                return Err(ClassifierError::ClassIndexOutOfRange {
                    item: i,
                    index: *class,
                    classes: class_names.len(),
                });
            }
        }
        Ok(LabeledDataset { items, class_names })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Item indices belonging to each class, in dataset order.
    fn per_class_indices(&self) -> Vec<Vec<usize>> {
        let mut buckets = vec![Vec::new(); self.class_names.len()];
        for (i, (_, class)) in self.items.iter().enumerate() {
            buckets[*class].push(i);
        }
        buckets
    }
}

/// Loads `root/<class_name>/*.ppm|*.pgm` into a dataset.
///
/// Classes are the subdirectory names in lexicographic order; items are
/// sorted by full path, so repeated loads give identical item order.
pub fn load_dataset(root: &Path) -> Result<LabeledDataset, ClassifierError> {
    let read_dir = |p: &Path| {
        fs::read_dir(p).map_err(|e| ClassifierError::Io { path: p.display().to_string(), source: e })
    };
    let mut class_dirs: Vec<_> = read_dir(root)?
        .filter_map(|entry| entry.ok())
        .filter(|entry| entry.path().is_dir())
        .map(|entry| entry.path())
        .collect();
    class_dirs.sort();
    if class_dirs.is_empty() {
        return Err(ClassifierError::NoClasses(root.display().to_string()));
    }
    let mut items = Vec::new();
    let mut class_names = Vec::new();
    for (class_index, dir) in class_dirs.iter().enumerate() {
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut files: Vec<_> = read_dir(dir)?
            .filter_map(|entry| entry.ok())
            .map(|entry| entry.path())
            .filter(|p| {
                matches!(
                    p.extension().and_then(|e| e.to_str()),
                    Some("ppm") | Some("pgm")
                )
            })
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(ClassifierError::EmptyClass(name));
        }
        for file in files {
            items.push((pnm::read(&file)?, class_index));
        }
        class_names.push(name);
    }
    LabeledDataset::new(items, class_names)
}

/// Writes a dataset to `root/<class_name>/img_NNNNN.(pgm|ppm)` so that
/// `load_dataset` reproduces the same item order.
pub fn write_dataset(dataset: &LabeledDataset, root: &Path) -> Result<(), ClassifierError> {
    for (class_index, name) in dataset.class_names.iter().enumerate() {
        let dir = root.join(name);
        fs::create_dir_all(&dir)
            .map_err(|e| ClassifierError::Io { path: dir.display().to_string(), source: e })?;
        let mut counter = 0usize;
        for (image, class) in &dataset.items {
            if *class != class_index {
                continue;
            }
            let ext = if image.channels() == 1 { "pgm" } else { "ppm" };
            let path = dir.join(format!("img_{counter:05}.{ext}"));
            pnm::write(image, &path)?;
            counter += 1;
        }
    }
    Ok(())
}

/// Per-class stratified split into (train, test).
///
/// Each class's item indices are shuffled with a seed derived from the
/// class index, and the first `round(fraction * n)` go to the test side
/// (clamped so both sides stay nonempty). Deterministic in (dataset,
/// fraction, seed).
pub fn split(
    dataset: &LabeledDataset,
    test_fraction: f64,
    seed: Seed,
) -> Result<(LabeledDataset, LabeledDataset), ClassifierError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(ClassifierError::BadTestFraction(test_fraction));
    }
    let mut train_items = Vec::new();
    let mut test_items = Vec::new();
    for (class_index, mut indices) in dataset.per_class_indices().into_iter().enumerate() {
        if indices.len() < 2 {
            return Err(ClassifierError::ClassTooSmall {
                class: dataset.class_names[class_index].clone(),
                count: indices.len(),
            });
        }
        let mut rng = CounterRng::new(seed.derive(class_index as u64));
        rng.shuffle(&mut indices);
        let n = indices.len();
        let test_n = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);
        let (test_idx, train_idx) = indices.split_at(test_n);
        // keep original dataset order inside each side
        let mut test_idx = test_idx.to_vec();
        let mut train_idx = train_idx.to_vec();
        test_idx.sort_unstable();
        train_idx.sort_unstable();
        test_items.extend(test_idx.iter().map(|&i| dataset.items[i].clone()));
        train_items.extend(train_idx.iter().map(|&i| dataset.items[i].clone()));
    }
    Ok((
        LabeledDataset { items: train_items, class_names: dataset.class_names.clone() },
        LabeledDataset { items: test_items, class_names: dataset.class_names.clone() },
    ))
}

/// Class names of the synthetic set, already in lexicographic order so a
/// disk round trip through `write_dataset` + `load_dataset` preserves
/// indices.
pub const SYNTHETIC_CLASSES: [&str; 5] = ["cross", "disk", "square", "stripes", "triangle"];

/// Generates a balanced five-class set of grayscale figures at randomized
/// position, scale and contrast over mildly noisy backgrounds.
pub fn gen_synthetic(
    per_class: usize,
    side: usize,
    seed: Seed,
) -> Result<LabeledDataset, ClassifierError> {
    if per_class < 1 || side < 16 {
        return Err(ClassifierError::BadSyntheticSpec { per_class, side });
    }
    let mut items = Vec::with_capacity(per_class * SYNTHETIC_CLASSES.len());
    for class in 0..SYNTHETIC_CLASSES.len() {
        for item in 0..per_class {
            let rng = CounterRng::new(seed.derive_path(&[class as u64, item as u64]));
            items.push((render_figure(class, side, rng), class));
        }
    }
    LabeledDataset::new(
        items,
        SYNTHETIC_CLASSES.iter().map(|s| s.to_string()).collect(),
    )
}

fn render_figure(class: usize, side: usize, mut rng: CounterRng) -> ImageF {
    let s = side as f64;
    let background = rng.next_range(20.0, 60.0);
    let foreground = rng.next_range(150.0, 250.0);
    let cx = s / 2.0 + rng.next_range(-0.07, 0.07) * s;
    let cy = s / 2.0 + rng.next_range(-0.07, 0.07) * s;
    let radius = rng.next_range(0.24, 0.34) * s;
    let stripe_period = rng.next_range(4.0, 8.0);
    let stripe_phase = rng.next_range(0.0, stripe_period);
    let mut data = Vec::with_capacity(side * side);
    for y in 0..side {
        for x in 0..side {
            let dx = x as f64 + 0.5 - cx;
            let dy = y as f64 + 0.5 - cy;
            let inside = match class {
                // cross: two orthogonal bars
                0 => {
                    (dx.abs() <= 0.35 * radius && dy.abs() <= radius)
                        || (dy.abs() <= 0.35 * radius && dx.abs() <= radius)
                }
                // disk
                1 => dx * dx + dy * dy <= radius * radius,
                // axis-aligned filled square
                2 => dx.abs() <= radius && dy.abs() <= radius,
                // horizontal stripes across the whole image
                3 => ((y as f64 + stripe_phase) / stripe_period).floor() as i64 % 2 == 0,
                // upward isosceles triangle
                _ => {
                    dy >= -radius
                        && dy <= radius
                        && dx.abs() <= (dy + radius) / 2.0
                }
            };
            let noise = rng.next_range(-10.0, 10.0);
            let value = if inside { foreground } else { background } + noise;
            // integral intensities, so a PGM round trip is lossless
            data.push(value.clamp(0.0, 255.0).round());
        }
    }
    ImageF::new(side, side, 1, data).expect("side >= 16")
}
