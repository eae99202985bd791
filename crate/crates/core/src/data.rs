//! Synthetic shift benchmark and the dataset CSV format.
//!
//! Typical samples come from isotropic Gaussians around well separated class
//! centres. Atypical samples sit between two centres but carry a hard label
//! for one of them. The test split adds covariate-shifted typical samples
//! (fixed affine distortion plus noise) and, in equal number, samples from
//! held-out centres (semantic shift).

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::metrics::Domain;

/// Typical samples are drawn within this many spread units of their centre.
pub const TRUNCATION_RADIUS: f64 = 6.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub seed: u64,
    pub n_classes: usize,
    pub feature_dim: usize,
    pub train_size: usize,
    /// Size of each test part: in-distribution, covariate and semantic.
    pub test_size: usize,
    pub atypical_fraction: f64,
    pub separation: f64,
    pub spread: f64,
    pub covariate_noise: f64,
    pub n_semantic_classes: usize,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            n_classes: 8,
            feature_dim: 16,
            train_size: 4_000,
            test_size: 1_000,
            atypical_fraction: 0.1,
            separation: 4.0,
            spread: 1.0,
            covariate_noise: 1.0,
            n_semantic_classes: 4,
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(invalid("n_classes must be at least 2"));
        }
        if self.feature_dim < 1 {
            return Err(invalid("feature_dim must be positive"));
        }
        if self.train_size == 0 || self.test_size == 0 {
            return Err(invalid("train_size and test_size must be positive"));
        }
        if !(0.0..1.0).contains(&self.atypical_fraction) {
            return Err(invalid("atypical_fraction must lie in [0, 1)"));
        }
        if !(self.separation.is_finite() && self.separation > 0.0) {
            return Err(invalid("separation must be finite and > 0"));
        }
        if !(self.spread.is_finite() && self.spread > 0.0) {
            return Err(invalid("spread must be finite and > 0"));
        }
        if !(self.covariate_noise.is_finite() && self.covariate_noise >= 0.0) {
            return Err(invalid("covariate_noise must be finite and >= 0"));
        }
        if self.n_semantic_classes == 0 {
            return Err(invalid("n_semantic_classes must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub x: Vec<f64>,
    /// `None` exactly for semantic-shift samples.
    pub label: Option<usize>,
    pub domain: Domain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(dim: usize, samples: Vec<Sample>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("feature dimension must be positive"));
        }
        for s in &samples {
            if s.x.len() != dim {
                return Err(invalid(format!("sample {} has {} features, expected {dim}", s.id, s.x.len())));
            }
            if (s.domain == Domain::Semantic) != s.label.is_none() {
                return Err(invalid(format!("sample {}: only semantic samples lack a label", s.id)));
            }
        }
        Ok(Self { dim, samples })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn count(&self, domain: Domain) -> usize {
        self.samples.iter().filter(|s| s.domain == domain).count()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        let mut header = vec!["id".to_string(), "label".into(), "domain".into()];
        header.extend((0..self.dim).map(|i| format!("x{i}")));
        w.write_record(&header).map_err(csv_io)?;
        for s in &self.samples {
            let mut row = vec![s.id.clone(), s.label.map(|l| l.to_string()).unwrap_or_default(), s.domain.to_string()];
            // 17 significant digits round-trip every f64 exactly.
            row.extend(s.x.iter().map(|v| format!("{v:.16e}")));
            w.write_record(&row).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
        let mut records = reader.records();
        let header = match records.next() {
            Some(r) => r.map_err(csv_parse)?,
            None => return Err(Error::Parse { line: 1, message: "missing header".into() }),
        };
        let dim = header.len().saturating_sub(3);
        let expected: Vec<String> =
            ["id", "label", "domain"].iter().map(|s| s.to_string()).chain((0..dim).map(|i| format!("x{i}"))).collect();
        if dim == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
            return Err(Error::Parse { line: 1, message: "header must be id,label,domain,x0,...,x{D-1}".into() });
        }

        let mut samples = Vec::new();
        for rec in records {
            let rec = rec.map_err(csv_parse)?;
            let line = rec.position().map_or(0, |p| p.line());
            let err = |message: String| Error::Parse { line, message };
            if rec.len() != dim + 3 {
                return Err(err(format!("expected {} fields, found {}", dim + 3, rec.len())));
            }
            let domain: Domain = rec[2].parse().map_err(|e: Error| err(e.to_string()))?;
            let label = match &rec[1] {
                "" => None,
                l => Some(l.parse::<usize>().map_err(|_| err(format!("bad label '{l}'")))?),
            };
            match (domain, label) {
                (Domain::Semantic, Some(_)) => return Err(err("semantic row with a label".into())),
                (Domain::Id | Domain::Covariate, None) => return Err(err(format!("{domain} row without a label"))),
                _ => {}
            }
            let x = rec
                .iter()
                .skip(3)
                .map(|v| match v.parse::<f64>() {
                    Ok(f) if f.is_finite() => Ok(f),
                    _ => Err(err(format!("non-numeric feature '{v}'"))),
                })
                .collect::<Result<Vec<f64>>>()?;
            samples.push(Sample { id: rec[0].to_string(), x, label, domain });
        }
        Self::new(dim, samples)
    }

    pub fn export_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn import_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn csv_parse(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse { line, message: e.to_string() }
}

/// Class centres, covariate distortion and sampling recipe for one spec.
struct Generator {
    spec: DatasetSpec,
    centers: Vec<Vec<f64>>,
    distortion: Vec<Vec<f64>>,
    offset: Vec<f64>,
    rng: ChaCha8Rng,
}

impl Generator {
    fn new(spec: &DatasetSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let d = spec.feature_dim;
        let total = spec.n_classes + spec.n_semantic_classes;

        // Centres on the sphere of radius `separation`, pairwise at least
        // `separation` apart.
        let mut centers: Vec<Vec<f64>> = Vec::with_capacity(total);
        const ATTEMPTS: usize = 10_000;
        for _ in 0..total {
            let mut placed = false;
            for _ in 0..ATTEMPTS {
                let mut c = gaussian(&mut rng, d);
                let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    continue;
                }
                c.iter_mut().for_each(|v| *v *= spec.separation / norm);
                if centers.iter().all(|o| dist(o, &c) >= spec.separation) {
                    centers.push(c);
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(invalid(format!(
                    "cannot place {total} centres {} apart in {d} dimensions",
                    spec.separation
                )));
            }
        }

        let scale = 0.1 / (d as f64).sqrt();
        let distortion = (0..d)
            .map(|i| {
                gaussian(&mut rng, d)
                    .into_iter()
                    .enumerate()
                    .map(|(j, g)| if i == j { 1.0 + scale * g } else { scale * g })
                    .collect()
            })
            .collect();
        let offset = gaussian(&mut rng, d).into_iter().map(|g| 0.25 * spec.spread * g).collect();
        Ok(Self { spec: spec.clone(), centers, distortion, offset, rng })
    }

    fn truncated_noise(&mut self) -> Vec<f64> {
        loop {
            let z = gaussian(&mut self.rng, self.spec.feature_dim);
            if z.iter().map(|v| v * v).sum::<f64>().sqrt() <= TRUNCATION_RADIUS {
                return z.into_iter().map(|v| v * self.spec.spread).collect();
            }
        }
    }

    fn around(&mut self, center: &[f64]) -> Vec<f64> {
        let noise = self.truncated_noise();
        center.iter().zip(noise).map(|(c, n)| c + n).collect()
    }

    fn typical(&mut self) -> (Vec<f64>, usize) {
        let label = self.rng.random_range(0..self.spec.n_classes);
        let center = self.centers[label].clone();
        (self.around(&center), label)
    }

    fn atypical(&mut self) -> (Vec<f64>, usize) {
        let c = self.spec.n_classes;
        let a = self.rng.random_range(0..c);
        let b = (a + self.rng.random_range(1..c)) % c;
        let mid: Vec<f64> = self.centers[a].iter().zip(&self.centers[b]).map(|(p, q)| 0.5 * (p + q)).collect();
        let label = if self.rng.random_bool(0.5) { a } else { b };
        (self.around(&mid), label)
    }

    /// `n` labelled in-distribution points, an exact `atypical_fraction` of
    /// them atypical, in shuffled order.
    fn labelled(&mut self, n: usize) -> Vec<(Vec<f64>, usize)> {
        let n_atypical = (self.spec.atypical_fraction * n as f64).round() as usize;
        let mut out: Vec<_> = (0..n).map(|i| if i < n_atypical { self.atypical() } else { self.typical() }).collect();
        out.shuffle(&mut self.rng);
        out
    }

    fn covariate(&mut self, x: &[f64]) -> Vec<f64> {
        let noise = gaussian(&mut self.rng, self.spec.feature_dim);
        self.distortion
            .iter()
            .zip(&self.offset)
            .zip(noise)
            .map(|((row, b), z)| row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + b + self.spec.covariate_noise * z)
            .collect()
    }

    fn semantic(&mut self) -> Vec<f64> {
        let k = self.spec.n_classes + self.rng.random_range(0..self.spec.n_semantic_classes);
        let center = self.centers[k].clone();
        self.around(&center)
    }
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Class centres used by [`generate`]; the first `n_classes` belong to the
/// training classes, the rest to the semantic-shift clusters.
pub fn class_centers(spec: &DatasetSpec) -> Result<Vec<Vec<f64>>> {
    Ok(Generator::new(spec)?.centers)
}

/// Generates `(train, test)`. Test holds `test_size` in-distribution,
/// `test_size` covariate-shifted and `test_size` semantic-shift samples.
pub fn generate(spec: &DatasetSpec) -> Result<(Dataset, Dataset)> {
    let mut g = Generator::new(spec)?;
    let d = spec.feature_dim;

    let train = g
        .labelled(spec.train_size)
        .into_iter()
        .enumerate()
        .map(|(i, (x, label))| Sample { id: format!("train-{i:06}"), x, label: Some(label), domain: Domain::Id })
        .collect();

    let id_part = g.labelled(spec.test_size);
    let mut test: Vec<Sample> = Vec::with_capacity(3 * spec.test_size);
    for (i, (x, label)) in id_part.iter().enumerate() {
        test.push(Sample { id: format!("id-{i:06}"), x: x.clone(), label: Some(*label), domain: Domain::Id });
    }
    let clean: Vec<_> = (0..spec.test_size).map(|_| g.typical()).collect();
    for (i, (x, label)) in clean.iter().enumerate() {
        let shifted = g.covariate(x);
        test.push(Sample { id: format!("cov-{i:06}"), x: shifted, label: Some(*label), domain: Domain::Covariate });
    }
    for i in 0..spec.test_size {
        let x = g.semantic();
        test.push(Sample { id: format!("sem-{i:06}"), x, label: None, domain: Domain::Semantic });
    }
    Ok((Dataset::new(d, train)?, Dataset::new(d, test)?))
}
